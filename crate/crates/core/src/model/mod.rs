//! Feedforward churn classifier trained by backpropagation with ADAM, and a
//! regularized logistic-regression baseline.

mod adam;
mod logistic;
mod network;

pub use adam::{adam_step, AdamState};
pub use logistic::{fit_logistic, fit_logistic_matrix, LinearModel, LogisticConfig, LogisticFit};
pub use network::{
    bce_loss, gradients, train, Activation, LayerShape, Mode, Network, NetworkConfig, NetworkFile,
    TrainOutcome, NETWORK_FORMAT_VERSION,
};

/// Anything that maps a feature vector to a churn probability.
pub trait Scorer {
    fn n_features(&self) -> usize;
    fn score(&self, x: &[f64]) -> f64;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn score(&self, x: &[f64]) -> f64 {
        (**self).score(x)
    }
}

/// Adapts a closure into a [`Scorer`].
pub struct FnScorer<F> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> Scorer for FnScorer<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn score(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
