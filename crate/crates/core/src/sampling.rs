//! SMOTE oversampling of the minority class up to an equal class count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureTable, SYNTHETIC_PREFIX};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: u64,
}

impl SmoteConfig {
    pub fn new(seed: u64) -> Self {
        SmoteConfig {
            k_neighbors: 5,
            seed,
        }
    }
}

/// Provenance of one synthetic row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    /// Row index of the parent in the input table.
    pub parent: usize,
    pub neighbor: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutcome {
    pub table: FeatureTable,
    /// One entry per appended row, in order.
    pub origins: Vec<SyntheticOrigin>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Appends synthetic minority rows `x + u (x_nn - x)` until both classes
/// have the majority count.
///
/// Neighbors are the `k` nearest other minority rows by Euclidean distance
/// (exact search, ties broken by row order), with `k` capped at `m - 1`.
/// Parents are drawn in rounds: each round visits a fresh seeded permutation
/// of the minority rows, so no parent repeats until all have been used.
/// Original rows are kept unchanged and first; synthetic ids carry the
/// `smote:` prefix.
pub fn smote(train: &FeatureTable, cfg: &SmoteConfig) -> Result<SmoteOutcome> {
    if cfg.k_neighbors < 1 {
        return Err(Error::Config("k_neighbors must be at least 1".into()));
    }
    let (neg, pos) = train.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::Sampling("SMOTE needs two classes".into()));
    }
    let (minority_label, majority_count) = if pos < neg { (1u8, neg) } else { (0u8, pos) };
    let minority: Vec<usize> = (0..train.n_rows())
        .filter(|&i| train.labels()[i] == minority_label)
        .collect();
    let m = minority.len();
    let need = majority_count - m;
    if need == 0 {
        return Ok(SmoteOutcome {
            table: train.clone(),
            origins: Vec::new(),
        });
    }
    if m < 2 {
        return Err(Error::Sampling(format!(
            "minority class has {m} row, need at least 2"
        )));
    }
    let k = cfg.k_neighbors.min(m - 1);

    let neighbors: Vec<Vec<usize>> = minority
        .iter()
        .map(|&a| {
            let mut cand: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| (squared_distance(train.row(a), train.row(b)), b))
                .collect();
            cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            cand.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = train.n_cols();
    let mut data = Vec::with_capacity(need * d);
    let mut origins = Vec::with_capacity(need);
    let mut order: Vec<usize> = (0..m).collect();
    while origins.len() < need {
        order.shuffle(&mut rng);
        let take = (need - origins.len()).min(m);
        for &slot in &order[..take] {
            let parent = minority[slot];
            let neighbor = neighbors[slot][rng.random_range(0..k)];
            let gap: f64 = rng.random();
            let (x, nn) = (train.row(parent), train.row(neighbor));
            data.extend(
                x.iter()
                    .zip(nn)
                    .map(|(&a, &b)| (a + gap * (b - a)).clamp(a.min(b), a.max(b))),
            );
            origins.push(SyntheticOrigin {
                parent,
                neighbor,
                gap,
            });
        }
    }
    let ids = origins
        .iter()
        .enumerate()
        .map(|(s, o)| format!("{SYNTHETIC_PREFIX}{}:{s}", train.row_ids()[o.parent]))
        .collect();
    let mut table = train.clone();
    table.extend_rows(&data, &vec![minority_label; need], ids);
    Ok(SmoteOutcome { table, origins })
}
