use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::{sigmoid, Scorer};
use crate::data::FeatureTable;
use crate::error::{Error, Result};

/// `sigmoid(weights · x + intercept)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::Shape {
                expected: self.weights.len(),
                actual: x.len(),
            });
        }
        Ok(sigmoid(self.logit(x)))
    }

    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        table.rows().map(|r| self.predict(r)).collect()
    }
}

impl Scorer for LinearModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub max_iter: usize,
    /// Stop once the max-norm of the penalized mean gradient drops below this.
    pub tolerance: f64,
    pub l2: f64,
    pub learning_rate: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            max_iter: 5000,
            tolerance: 1e-6,
            l2: 1e-4,
            learning_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub model: LinearModel,
    pub iterations: usize,
    pub converged: bool,
    /// Every training row lies on the correct side of the fitted boundary;
    /// the weights are then bounded only by the penalty.
    pub separated: bool,
}

/// Fits the baseline on all feature columns of `table` against its label.
pub fn fit_logistic(table: &FeatureTable, cfg: &LogisticConfig) -> Result<LogisticFit> {
    fit_logistic_matrix(table.data(), table.n_cols(), table.labels(), cfg)
}

/// L2-penalized logistic regression by full-batch ADAM.
///
/// `x` is row-major with `d` columns. Columns are standardized internally
/// (the penalty acts on the standardized coefficients, the intercept is
/// unpenalized) and the result is mapped back to the raw scale.
pub fn fit_logistic_matrix(x: &[f64], d: usize, y: &[u8], cfg: &LogisticConfig) -> Result<LogisticFit> {
    let n = y.len();
    if x.len() != n * d {
        return Err(Error::Shape {
            expected: n * d,
            actual: x.len(),
        });
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == n {
        return Err(Error::Validation(
            "logistic regression needs both classes".into(),
        ));
    }

    let nf = n as f64;
    let mut mean = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        let m = (0..n).map(|i| x[i * d + j]).sum::<f64>() / nf;
        let var = (0..n).map(|i| (x[i * d + j] - m).powi(2)).sum::<f64>() / nf;
        mean[j] = m;
        if var > 0.0 {
            scale[j] = var.sqrt();
        }
    }
    let z: Vec<f64> = (0..n * d)
        .map(|k| (x[k] - mean[k % d]) / scale[k % d])
        .collect();

    // theta = [w_0 .. w_{d-1}, b]
    let mut theta = vec![0.0; d + 1];
    theta[d] = (ones as f64 / (nf - ones as f64)).ln();
    let mut state = AdamState::new(d + 1);
    let mut grad = vec![0.0; d + 1];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..n {
            let row = &z[i * d..(i + 1) * d];
            let eta = theta[d] + row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>();
            let r = sigmoid(eta) - f64::from(y[i]);
            grad[..d].iter_mut().zip(row).for_each(|(g, v)| *g += r * v);
            grad[d] += r;
        }
        for j in 0..=d {
            grad[j] /= nf;
            if j < d {
                grad[j] += cfg.l2 * theta[j];
            }
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Estimation(
                "logistic fit diverged to a non-finite gradient".into(),
            ));
        }
        if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < cfg.tolerance {
            converged = true;
            break;
        }
        adam_step(&mut theta, &grad, &mut state, cfg.learning_rate)?;
        iterations += 1;
    }

    let weights: Vec<f64> = (0..d).map(|j| theta[j] / scale[j]).collect();
    let intercept = theta[d] - (0..d).map(|j| weights[j] * mean[j]).sum::<f64>();
    let model = LinearModel { weights, intercept };
    let separated = (0..n).all(|i| {
        let eta = model.logit(&x[i * d..(i + 1) * d]);
        if y[i] == 1 {
            eta > 0.0
        } else {
            eta < 0.0
        }
    });
    Ok(LogisticFit {
        model,
        iterations,
        converged,
        separated,
    })
}
