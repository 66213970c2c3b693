//! Hard and soft majority voting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteMode {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteConfig {
    pub mode: VoteMode,
    /// Per-classifier weights for soft voting; empty means uniform.
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl Default for VoteConfig {
    fn default() -> Self {
        VoteConfig {
            mode: VoteMode::Soft,
            weights: Vec::new(),
            threshold: 0.5,
        }
    }
}

fn sample_count<T>(per_classifier: &[Vec<T>]) -> Result<usize> {
    let first = per_classifier
        .first()
        .ok_or_else(|| Error::Config("no classifiers to vote".into()))?;
    for c in per_classifier {
        if c.len() != first.len() {
            return Err(Error::Shape {
                expected: first.len(),
                actual: c.len(),
            });
        }
    }
    Ok(first.len())
}

/// Per-sample majority over binary votes.
///
/// `votes[c][s]` is classifier `c`'s label for sample `s`. An even split is
/// broken by comparing the mean of `probs[c][s]` with `threshold`; without
/// probabilities a tie resolves to 0.
pub fn hard_vote(votes: &[Vec<u8>], probs: Option<&[Vec<f64>]>, threshold: f64) -> Result<Vec<u8>> {
    let n = sample_count(votes)?;
    if let Some(p) = probs {
        if p.len() != votes.len() {
            return Err(Error::Shape {
                expected: votes.len(),
                actual: p.len(),
            });
        }
        if sample_count(p)? != n {
            return Err(Error::Shape {
                expected: n,
                actual: p[0].len(),
            });
        }
    }
    let k = votes.len();
    Ok((0..n)
        .map(|s| {
            let ones = votes.iter().filter(|c| c[s] == 1).count();
            match (2 * ones).cmp(&k) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => match probs {
                    Some(p) => {
                        let mean = p.iter().map(|c| c[s]).sum::<f64>() / k as f64;
                        u8::from(mean >= threshold)
                    }
                    None => 0,
                },
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftVote {
    pub labels: Vec<u8>,
    pub fused: Vec<f64>,
}

/// Weighted mean of classifier probabilities, thresholded.
pub fn soft_vote(probs: &[Vec<f64>], weights: &[f64], threshold: f64) -> Result<SoftVote> {
    let n = sample_count(probs)?;
    let uniform;
    let weights = if weights.is_empty() {
        uniform = vec![1.0; probs.len()];
        &uniform
    } else {
        weights
    };
    if weights.len() != probs.len() {
        return Err(Error::Shape {
            expected: probs.len(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::Config("vote weights must be non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Config("vote weights sum to zero".into()));
    }
    if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Validation("probabilities must lie in [0, 1]".into()));
    }
    let fused: Vec<f64> = (0..n)
        .map(|s| {
            let p = probs.iter().zip(weights).map(|(c, w)| w * c[s]).sum::<f64>() / total;
            // keep the weighted mean inside the members' range despite rounding
            let (lo, hi) = probs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c[s]), hi.max(c[s]))
            });
            p.clamp(lo, hi)
        })
        .collect();
    let labels = fused.iter().map(|&p| u8::from(p >= threshold)).collect();
    Ok(SoftVote { labels, fused })
}

/// Dispatches on [`VoteConfig::mode`]; hard mode thresholds each classifier first.
pub fn vote(probs: &[Vec<f64>], cfg: &VoteConfig) -> Result<Vec<u8>> {
    match cfg.mode {
        VoteMode::Soft => Ok(soft_vote(probs, &cfg.weights, cfg.threshold)?.labels),
        VoteMode::Hard => {
            let votes: Vec<Vec<u8>> = probs
                .iter()
                .map(|c| c.iter().map(|&p| u8::from(p >= cfg.threshold)).collect())
                .collect();
            hard_vote(&votes, Some(probs), cfg.threshold)
        }
    }
}
