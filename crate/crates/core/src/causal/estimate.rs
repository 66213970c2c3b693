use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::graph::{backdoor_sets_among, CausalGraph};
use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::model::{fit_logistic_matrix, LogisticConfig, Scorer};

const RIDGE_JITTER: f64 = 1e-8;
pub const DEFAULT_CLIP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    LinearRegression,
    Ipw,
}

/// How the treatment column entered the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreatmentEncoding {
    /// Already 0/1.
    Binary,
    /// Used as-is; the effect is per unit of treatment.
    Continuous,
    /// Split into above-median (1) and at-or-below-median (0).
    DichotomizedAtMedian { median: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub treatment: String,
    pub outcome: String,
    pub estimator: Estimator,
    pub ate: f64,
    pub adjustment_set: Vec<String>,
    pub n_used: usize,
    pub treatment_encoding: TreatmentEncoding,
    /// Propensity clipping bound (IPW only).
    pub clip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefutationResult {
    pub method: String,
    pub seed: u64,
    pub common_cause: String,
    pub original_ate: f64,
    pub refuted_ate: f64,
    pub delta: f64,
    pub refuted_adjustment_set: Vec<String>,
}

/// Smallest valid backdoor set built from columns present in `table`,
/// ties broken lexicographically.
pub fn choose_adjustment_set(
    table: &FeatureTable,
    g: &CausalGraph,
    treatment: &str,
    outcome: &str,
) -> Result<Vec<String>> {
    let observed = |name: &str| table.values(name).is_ok();
    let sets = backdoor_sets_among(g, treatment, outcome, g.len(), observed)?;
    sets.into_iter().next().ok_or_else(|| {
        Error::Identification(format!(
            "no backdoor adjustment set identifies {treatment} -> {outcome}"
        ))
    })
}

fn is_binary(values: &[f64]) -> bool {
    values.iter().all(|&v| v == 0.0 || v == 1.0)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Solves `a x = b` for symmetric positive definite `a` (row-major, p x p).
fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[i * p + j];
            for k in 0..j {
                sum -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if sum.is_nan() || sum <= 0.0 {
                    return None;
                }
                l[i * p + i] = sum.sqrt();
            } else {
                l[i * p + j] = sum / l[j * p + j];
            }
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i * p + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[k * p + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * p + i];
    }
    Some(x)
}

/// Ordinary least squares with a tiny ridge on the normal equations.
/// Columns of `design` are regressors; an intercept is prepended.
pub(crate) fn ols(design: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let p = design.len() + 1;
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    let mut row = vec![0.0; p];
    for i in 0..n {
        row[0] = 1.0;
        for (j, col) in design.iter().enumerate() {
            row[j + 1] = col[i];
        }
        for a in 0..p {
            xty[a] += row[a] * y[i];
            for b in 0..=a {
                xtx[a * p + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[b * p + a] = xtx[a * p + b];
        }
        xtx[a * p + a] += RIDGE_JITTER;
    }
    cholesky_solve(&xtx, &xty, p)
        .filter(|beta| beta.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Estimation("singular design matrix".into()))
}

fn columns(table: &FeatureTable, names: &[String]) -> Result<Vec<Vec<f64>>> {
    names.iter().map(|n| table.values(n)).collect()
}

/// Backdoor-adjusted linear regression: the treatment coefficient of
/// `outcome ~ 1 + treatment + adjustment set`.
pub fn estimate_ate_linear(
    table: &FeatureTable,
    g: &CausalGraph,
    treatment: &str,
    outcome: &str,
) -> Result<EffectEstimate> {
    let adjustment_set = choose_adjustment_set(table, g, treatment, outcome)?;
    let t = table.values(treatment)?;
    let y = table.values(outcome)?;
    if t.iter().all(|&v| v == t[0]) {
        return Err(Error::Estimation(format!(
            "treatment `{treatment}` has no variance"
        )));
    }
    let encoding = if is_binary(&t) {
        TreatmentEncoding::Binary
    } else {
        TreatmentEncoding::Continuous
    };
    let mut design = vec![t];
    design.extend(columns(table, &adjustment_set)?);
    let beta = ols(&design, &y)?;
    Ok(EffectEstimate {
        treatment: treatment.to_string(),
        outcome: outcome.to_string(),
        estimator: Estimator::LinearRegression,
        ate: beta[1],
        adjustment_set,
        n_used: table.n_rows(),
        treatment_encoding: encoding,
        clip: None,
    })
}

fn binarize(t: &[f64]) -> (Vec<u8>, TreatmentEncoding) {
    if is_binary(t) {
        (t.iter().map(|&v| u8::from(v == 1.0)).collect(), TreatmentEncoding::Binary)
    } else {
        let m = median(t);
        (
            t.iter().map(|&v| u8::from(v > m)).collect(),
            TreatmentEncoding::DichotomizedAtMedian { median: m },
        )
    }
}

/// Mean outcome difference between treated and untreated rows, ignoring
/// confounding. Continuous treatments are split at the median.
pub fn naive_difference(table: &FeatureTable, treatment: &str, outcome: &str) -> Result<f64> {
    let (t, _) = binarize(&table.values(treatment)?);
    let y = table.values(outcome)?;
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (ti, yi) in t.iter().zip(&y) {
        if *ti == 1 {
            s1 += yi;
            n1 += 1;
        } else {
            s0 += yi;
            n0 += 1;
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(Error::Estimation("a treatment arm is empty".into()));
    }
    Ok(s1 / n1 as f64 - s0 / n0 as f64)
}

/// Hájek-normalized inverse propensity weighting.
///
/// Propensities come from the logistic baseline fitted on the adjustment
/// set and are clipped to `[clip, 1 - clip]`.
pub fn estimate_ate_ipw(
    table: &FeatureTable,
    g: &CausalGraph,
    treatment: &str,
    outcome: &str,
    clip: f64,
) -> Result<EffectEstimate> {
    if !(0.0..0.5).contains(&clip) {
        return Err(Error::Config(format!("clip {clip} outside [0, 0.5)")));
    }
    let adjustment_set = choose_adjustment_set(table, g, treatment, outcome)?;
    let (t, encoding) = binarize(&table.values(treatment)?);
    let y = table.values(outcome)?;
    let n = t.len();
    let treated = t.iter().filter(|&&v| v == 1).count();
    if treated == 0 || treated == n {
        return Err(Error::Estimation("a treatment arm is empty".into()));
    }

    let propensity: Vec<f64> = if adjustment_set.is_empty() {
        vec![treated as f64 / n as f64; n]
    } else {
        let cols = columns(table, &adjustment_set)?;
        let d = cols.len();
        let mut x = Vec::with_capacity(n * d);
        for i in 0..n {
            x.extend(cols.iter().map(|c| c[i]));
        }
        let fit = fit_logistic_matrix(&x, d, &t, &LogisticConfig::default())
            .map_err(|e| Error::Estimation(format!("propensity fit failed: {e}")))?;
        (0..n)
            .map(|i| fit.model.score(&x[i * d..(i + 1) * d]))
            .collect()
    };

    let (mut num1, mut den1, mut num0, mut den0) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let e = propensity[i].clamp(clip, 1.0 - clip);
        if !e.is_finite() {
            return Err(Error::Estimation("non-finite propensity".into()));
        }
        if t[i] == 1 {
            num1 += y[i] / e;
            den1 += 1.0 / e;
        } else {
            num0 += y[i] / (1.0 - e);
            den0 += 1.0 / (1.0 - e);
        }
    }
    Ok(EffectEstimate {
        treatment: treatment.to_string(),
        outcome: outcome.to_string(),
        estimator: Estimator::Ipw,
        ate: num1 / den1 - num0 / den0,
        adjustment_set,
        n_used: n,
        treatment_encoding: encoding,
        clip: Some(clip),
    })
}

/// Re-runs `prior`'s estimator after adding a seeded standard-normal column
/// as a common cause of treatment and outcome.
pub fn refute_random_common_cause(
    table: &FeatureTable,
    g: &CausalGraph,
    prior: &EffectEstimate,
    seed: u64,
) -> Result<RefutationResult> {
    let mut name = "random_common_cause".to_string();
    while table.column_index(&name).is_some() || g.id(&name).is_ok() {
        name.push('_');
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..table.n_rows())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let augmented = table.with_column(&name, &noise)?;
    let graph = g.with_common_cause(&name, &[&prior.treatment, &prior.outcome])?;
    let refuted = match prior.estimator {
        Estimator::LinearRegression => {
            estimate_ate_linear(&augmented, &graph, &prior.treatment, &prior.outcome)?
        }
        Estimator::Ipw => estimate_ate_ipw(
            &augmented,
            &graph,
            &prior.treatment,
            &prior.outcome,
            prior.clip.unwrap_or(DEFAULT_CLIP),
        )?,
    };
    Ok(RefutationResult {
        method: "random_common_cause".into(),
        seed,
        common_cause: name,
        original_ate: prior.ate,
        refuted_ate: refuted.ate,
        delta: (prior.ate - refuted.ate).abs(),
        refuted_adjustment_set: refuted.adjustment_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> CausalGraph {
        CausalGraph::new(&["Z", "T", "Y"], &[("Z", "T"), ("Z", "Y"), ("T", "Y")]).unwrap()
    }

    #[test]
    fn cholesky_solves_small_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 1.0], 2).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
        assert!(cholesky_solve(&[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn noiseless_linear_recovery() {
        let z: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0).collect();
        let t: Vec<f64> = z.iter().enumerate().map(|(i, v)| 3.0 * v + ((i * 13) % 7) as f64).collect();
        let y: Vec<f64> = t.iter().zip(&z).map(|(a, b)| 2.0 * a + 3.0 * b).collect();
        let table = FeatureTable::from_columns(&["Z", "T", "Y"], &[z, t, y], "label", vec![0; 200]).unwrap();
        let est = estimate_ate_linear(&table, &triangle(), "T", "Y").unwrap();
        assert!((est.ate - 2.0).abs() < 1e-8, "{}", est.ate);
        assert_eq!(est.adjustment_set, vec!["Z".to_string()]);
        assert_eq!(est.treatment_encoding, TreatmentEncoding::Continuous);
    }

    #[test]
    fn constant_treatment_is_an_error() {
        let table = FeatureTable::from_columns(
            &["Z", "T", "Y"],
            &[vec![1.0, 2.0, 3.0], vec![1.0; 3], vec![0.0, 1.0, 0.5]],
            "label",
            vec![0; 3],
        )
        .unwrap();
        assert!(matches!(
            estimate_ate_linear(&table, &triangle(), "T", "Y"),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn latent_confounder_blocks_identification() {
        let g = CausalGraph::new(&["U", "T", "Y"], &[("U", "T"), ("U", "Y"), ("T", "Y")]).unwrap();
        let table = FeatureTable::from_columns(
            &["T", "Y"],
            &[vec![0.0, 1.0, 0.0, 1.0], vec![0.2, 0.4, 0.1, 0.9]],
            "label",
            vec![0; 4],
        )
        .unwrap();
        assert!(matches!(
            estimate_ate_linear(&table, &g, "T", "Y"),
            Err(Error::Identification(_))
        ));
    }

    #[test]
    fn ipw_without_confounders_is_difference_of_means() {
        let t: Vec<f64> = (0..100).map(|i| f64::from(u8::from(i % 2 == 0))).collect();
        let y: Vec<f64> = (0..100).map(|i| (i % 5) as f64).collect();
        let table = FeatureTable::from_columns(&["T", "Y"], &[t, y], "label", vec![0; 100]).unwrap();
        let g = CausalGraph::new(&["T", "Y"], &[("T", "Y")]).unwrap();
        let ipw = estimate_ate_ipw(&table, &g, "T", "Y", DEFAULT_CLIP).unwrap();
        let naive = naive_difference(&table, "T", "Y").unwrap();
        assert!((ipw.ate - naive).abs() < 1e-12);
    }

    #[test]
    fn continuous_treatment_is_dichotomized_for_ipw() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = (0..10).map(|i| f64::from(u8::from(i > 4))).collect();
        let table = FeatureTable::from_columns(&["T", "Y"], &[t, y], "label", vec![0; 10]).unwrap();
        let g = CausalGraph::new(&["T", "Y"], &[("T", "Y")]).unwrap();
        let est = estimate_ate_ipw(&table, &g, "T", "Y", DEFAULT_CLIP).unwrap();
        assert_eq!(est.treatment_encoding, TreatmentEncoding::DichotomizedAtMedian { median: 4.5 });
        assert!((est.ate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refutation_is_deterministic() {
        let z: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0).collect();
        let t: Vec<f64> = z.iter().enumerate().map(|(i, v)| v + ((i * 13) % 7) as f64 / 3.0).collect();
        let y: Vec<f64> = t
            .iter()
            .zip(&z)
            .enumerate()
            .map(|(i, (a, b))| 2.0 * a + 3.0 * b + ((i * 7) % 11) as f64 / 10.0)
            .collect();
        let table = FeatureTable::from_columns(&["Z", "T", "Y"], &[z, t, y], "label", vec![0; 300]).unwrap();
        let g = triangle();
        let prior = estimate_ate_linear(&table, &g, "T", "Y").unwrap();
        let a = refute_random_common_cause(&table, &g, &prior, 4).unwrap();
        let b = refute_random_common_cause(&table, &g, &prior, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.refuted_adjustment_set.contains(&"random_common_cause".to_string()));
        assert!(a.delta >= 0.0);
    }
}
