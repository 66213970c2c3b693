//! Ranking and association metrics: churn rate, pairwise AUC, recall, ROC
//! curves, Pearson correlation and correlation screening.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score: f64,
    pub label: u8,
}

impl ScoredSample {
    pub fn new(score: f64, label: u8) -> Self {
        ScoredSample { score, label }
    }
}

pub fn scored(scores: &[f64], labels: &[u8]) -> Vec<ScoredSample> {
    scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| ScoredSample::new(s, y))
        .collect()
}

/// How pairs with equal scores count toward the AUC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Tied pairs contribute nothing.
    #[default]
    Strict,
    /// Tied pairs contribute one half.
    Half,
}

pub fn churn_rate(lost: u64, initial: u64) -> Result<f64> {
    if initial == 0 {
        return Err(Error::Metric("initial customer count is zero".into()));
    }
    if lost > initial {
        return Err(Error::Metric(format!(
            "lost customers ({lost}) exceed initial customers ({initial})"
        )));
    }
    Ok(lost as f64 / initial as f64)
}

fn check_scores(samples: &[ScoredSample]) -> Result<(usize, usize)> {
    if let Some(s) = samples.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::Metric(format!("non-finite score {}", s.score)));
    }
    let pos = samples.iter().filter(|s| s.label == 1).count();
    let neg = samples.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric(
            "AUC needs at least one sample of each class".into(),
        ));
    }
    Ok((pos, neg))
}

/// Fraction of (churned, non-churned) pairs where the churned sample scores
/// higher.
///
/// Runs in O(N log N): samples are sorted by score and each churned sample
/// counts the non-churned samples strictly below it, plus the tied ones
/// under [`TiePolicy::Half`]. Pair counts are accumulated as integers
/// (ties in units of one half), so the result is the same `f64` the
/// double sum produces.
pub fn auc(samples: &[ScoredSample], tie_policy: TiePolicy) -> Result<f64> {
    let (m, n) = check_scores(samples)?;
    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    // wins counted in half-units: strict win = 2, tie = 1
    let mut half_units: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut pos_tied, mut neg_tied) = (0u128, 0u128);
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            if sorted[j].label == 1 {
                pos_tied += 1;
            } else {
                neg_tied += 1;
            }
            j += 1;
        }
        half_units += 2 * pos_tied * neg_below;
        if tie_policy == TiePolicy::Half {
            half_units += pos_tied * neg_tied;
        }
        neg_below += neg_tied;
        i = j;
    }
    Ok(half_units as f64 / 2.0 / (m as f64 * n as f64))
}

/// True positive rate at `threshold` (score ≥ threshold predicts churn).
pub fn recall(samples: &[ScoredSample], threshold: f64) -> Result<f64> {
    let positives = samples.iter().filter(|s| s.label == 1).count();
    if positives == 0 {
        return Err(Error::Metric("recall needs at least one positive".into()));
    }
    let tp = samples
        .iter()
        .filter(|s| s.label == 1 && s.score >= threshold)
        .count();
    Ok(tp as f64 / positives as f64)
}

/// Fraction of samples whose thresholded prediction matches the label.
pub fn accuracy(samples: &[ScoredSample], threshold: f64) -> f64 {
    let hits = samples
        .iter()
        .filter(|s| u8::from(s.score >= threshold) == s.label)
        .count();
    hits as f64 / samples.len().max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve with one point per distinct score threshold, from (0,0) to (1,1).
pub fn roc_points(samples: &[ScoredSample]) -> Result<Vec<RocPoint>> {
    let (m, n) = check_scores(samples)?;
    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].score;
        while i < sorted.len() && sorted[i].score == s {
            if sorted[i].label == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / m as f64,
        });
    }
    Ok(points)
}

/// Area under a polyline by the trapezoid rule.
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// Writes `fpr,tpr` rows with a header.
pub fn write_roc_csv<W: Write>(points: &[RocPoint], mut out: W) -> Result<()> {
    writeln!(out, "fpr,tpr")?;
    for p in points {
        writeln!(out, "{},{}", p.fpr, p.tpr)?;
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Metric("correlation needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Metric(
            "correlation undefined for a constant series".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedPair {
    pub first: String,
    pub second: String,
    pub r: f64,
    pub abs_r: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Screening {
    pub pairs: Vec<CorrelatedPair>,
    /// Constant columns that were skipped.
    pub skipped_constant: Vec<String>,
}

/// All feature pairs with |r| ≥ threshold, strongest first.
pub fn correlation_screen(table: &FeatureTable, threshold: f64) -> Screening {
    let names = table.column_names();
    let cols: Vec<Vec<f64>> = (0..table.n_cols()).map(|j| table.column(j)).collect();
    let constant: Vec<bool> = cols
        .iter()
        .map(|c| c.iter().all(|&v| v == c[0]))
        .collect();
    let mut out = Screening {
        skipped_constant: names
            .iter()
            .zip(&constant)
            .filter(|(_, &c)| c)
            .map(|(n, _)| n.to_string())
            .collect(),
        ..Default::default()
    };
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            if constant[a] || constant[b] {
                continue;
            }
            if let Ok(r) = pearson(&cols[a], &cols[b]) {
                if r.abs() >= threshold {
                    out.pairs.push(CorrelatedPair {
                        first: names[a].to_string(),
                        second: names[b].to_string(),
                        r,
                        abs_r: r.abs(),
                    });
                }
            }
        }
    }
    out.pairs
        .sort_by(|p, q| q.abs_r.partial_cmp(&p.abs_r).unwrap_or(Ordering::Equal));
    out
}
