//! Causal DAGs, d-separation, backdoor adjustment, effect estimation and
//! random-common-cause refutation.

mod estimate;
mod graph;

pub use estimate::{
    choose_adjustment_set, estimate_ate_ipw, estimate_ate_linear, naive_difference,
    refute_random_common_cause, EffectEstimate, Estimator, RefutationResult, TreatmentEncoding,
    DEFAULT_CLIP,
};
pub use graph::{backdoor_sets, backdoor_sets_among, CausalGraph, GraphSpec};
