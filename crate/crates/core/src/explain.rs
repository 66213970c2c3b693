//! Interventional Shapley attributions on the probability output.
//!
//! The value of a coalition `S` is the model output averaged over background
//! rows, with the features in `S` fixed to the explained sample and the rest
//! taken from the background row. The empty coalition gives the base value.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::model::Scorer;

/// Largest feature count the exact enumeration accepts.
pub const MAX_EXACT_FEATURES: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Signed contribution per feature, in probability units.
    pub values: Vec<f64>,
    /// Mean model output over the background set.
    pub base_value: f64,
    pub prediction: f64,
    /// Monte-Carlo standard error per feature; absent for exact values.
    pub std_errors: Option<Vec<f64>>,
}

impl Attribution {
    /// `sum(values) - (prediction - base_value)`.
    pub fn efficiency_gap(&self) -> f64 {
        self.values.iter().sum::<f64>() - (self.prediction - self.base_value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ShapleyMethod {
    Exact,
    MonteCarlo { n_permutations: usize, seed: u64 },
}

fn check_inputs<M: Scorer + ?Sized>(model: &M, x: &[f64], background: &FeatureTable) -> Result<usize> {
    let d = x.len();
    if model.n_features() != d {
        return Err(Error::Shape {
            expected: model.n_features(),
            actual: d,
        });
    }
    if background.n_cols() != d {
        return Err(Error::Shape {
            expected: d,
            actual: background.n_cols(),
        });
    }
    if background.n_rows() == 0 {
        return Err(Error::Validation("background set is empty".into()));
    }
    Ok(d)
}

fn base_value<M: Scorer + ?Sized>(model: &M, background: &FeatureTable) -> f64 {
    background.rows().map(|r| model.score(r)).sum::<f64>() / background.n_rows() as f64
}

/// Exact Shapley values by enumerating all `2^d` coalitions.
pub fn shapley_exact<M: Scorer + ?Sized>(model: &M, x: &[f64], background: &FeatureTable) -> Result<Attribution> {
    let d = check_inputs(model, x, background)?;
    if d > MAX_EXACT_FEATURES {
        return Err(Error::Size(format!(
            "{d} features exceed the exact limit of {MAX_EXACT_FEATURES}; use shapley_mc"
        )));
    }
    let full = (1usize << d) - 1;
    let nb = background.n_rows() as f64;
    let mut value = vec![0.0; full + 1];
    let mut hybrid = vec![0.0; d];
    for (mask, v) in value.iter_mut().enumerate() {
        let mut sum = 0.0;
        for row in background.rows() {
            for j in 0..d {
                hybrid[j] = if mask >> j & 1 == 1 { x[j] } else { row[j] };
            }
            sum += model.score(&hybrid);
        }
        *v = sum / nb;
    }
    let prediction = model.score(x);

    // weight(s) = s! (d - s - 1)! / d!
    let mut weight = vec![0.0; d];
    for (s, w) in weight.iter_mut().enumerate() {
        let mut acc = 1.0 / d as f64;
        // 1 / (d * C(d-1, s))
        for k in 0..s {
            acc *= (k + 1) as f64 / (d - 1 - k) as f64;
        }
        *w = acc;
    }
    let mut values = vec![0.0; d];
    for (i, phi) in values.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in 0..=full {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                *phi += weight[s] * (value[mask | bit] - value[mask]);
            }
        }
    }
    Ok(Attribution {
        values,
        base_value: value[0],
        prediction,
        std_errors: None,
    })
}

/// Permutation-sampling Shapley estimate.
///
/// Each draw pairs a random feature ordering with one random background
/// row and credits every feature with its marginal change along that
/// ordering. The estimate is unbiased for the exact values; standard errors
/// are the per-feature sample standard deviation over `sqrt(n)`.
pub fn shapley_mc<M: Scorer + ?Sized>(
    model: &M,
    x: &[f64],
    background: &FeatureTable,
    n_permutations: usize,
    seed: u64,
) -> Result<Attribution> {
    let d = check_inputs(model, x, background)?;
    if n_permutations < 10 {
        return Err(Error::Config("need at least 10 permutations".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    let mut current = vec![0.0; d];
    for draw in 0..n_permutations {
        order.shuffle(&mut rng);
        let z = background.row(rng.random_range(0..background.n_rows()));
        current.copy_from_slice(z);
        let mut prev = model.score(&current);
        let count = (draw + 1) as f64;
        for &j in &order {
            current[j] = x[j];
            let next = model.score(&current);
            let contrib = next - prev;
            prev = next;
            let delta = contrib - mean[j];
            mean[j] += delta / count;
            m2[j] += delta * (contrib - mean[j]);
        }
    }
    let n = n_permutations as f64;
    let std_errors = m2.iter().map(|s| (s / (n - 1.0)).sqrt() / n.sqrt()).collect();
    Ok(Attribution {
        values: mean,
        base_value: base_value(model, background),
        prediction: model.score(x),
        std_errors: Some(std_errors),
    })
}

pub fn attribute<M: Scorer + ?Sized>(
    model: &M,
    x: &[f64],
    background: &FeatureTable,
    method: ShapleyMethod,
) -> Result<Attribution> {
    match method {
        ShapleyMethod::Exact => shapley_exact(model, x, background),
        ShapleyMethod::MonteCarlo {
            n_permutations,
            seed,
        } => shapley_mc(model, x, background, n_permutations, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_abs: f64,
    /// Share of explained rows where the attribution is positive.
    pub positive_fraction: f64,
}

/// Features ranked by mean absolute attribution over the rows of `table`.
///
/// Monte-Carlo runs use seed `seed + row index` per row.
pub fn global_importance<M: Scorer + ?Sized>(
    model: &M,
    table: &FeatureTable,
    background: &FeatureTable,
    method: ShapleyMethod,
) -> Result<Vec<FeatureImportance>> {
    if table.n_rows() == 0 {
        return Err(Error::Validation("nothing to explain".into()));
    }
    let d = table.n_cols();
    let mut abs_sum = vec![0.0; d];
    let mut positive = vec![0usize; d];
    for (i, row) in table.rows().enumerate() {
        let m = match method {
            ShapleyMethod::MonteCarlo {
                n_permutations,
                seed,
            } => ShapleyMethod::MonteCarlo {
                n_permutations,
                seed: seed.wrapping_add(i as u64),
            },
            ShapleyMethod::Exact => ShapleyMethod::Exact,
        };
        let a = attribute(model, row, background, m)?;
        for j in 0..d {
            abs_sum[j] += a.values[j].abs();
            positive[j] += usize::from(a.values[j] > 0.0);
        }
    }
    let n = table.n_rows() as f64;
    let mut out: Vec<FeatureImportance> = table
        .column_names()
        .iter()
        .enumerate()
        .map(|(j, name)| FeatureImportance {
            feature: name.to_string(),
            mean_abs: abs_sum[j] / n,
            positive_fraction: positive[j] as f64 / n,
        })
        .collect();
    out.sort_by(|a, b| b.mean_abs.total_cmp(&a.mean_abs));
    Ok(out)
}

/// Seeded sample of up to `size` rows without replacement, in table order.
pub fn sample_background(table: &FeatureTable, size: usize, seed: u64) -> FeatureTable {
    if size >= table.n_rows() {
        return table.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, table.n_rows(), size).into_vec();
    picked.sort_unstable();
    table.select_rows(&picked)
}
