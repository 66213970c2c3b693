use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FeatureTable;
use crate::error::{Error, Result};

/// Row filter on account tenure and balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionCriteria {
    pub tenure_column: String,
    pub balance_column: String,
    /// Rows need tenure strictly above this.
    pub min_tenure_months: f64,
    /// Rows need balance at or above this.
    pub min_balance: f64,
}

impl InclusionCriteria {
    pub fn new(tenure_column: impl Into<String>, balance_column: impl Into<String>) -> Self {
        InclusionCriteria {
            tenure_column: tenure_column.into(),
            balance_column: balance_column.into(),
            min_tenure_months: 6.0,
            min_balance: 1500.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub removed_tenure: usize,
    pub removed_balance: usize,
    pub removed_total: usize,
    pub retained: usize,
}

pub fn apply_inclusion_criteria(
    table: &FeatureTable,
    criteria: &InclusionCriteria,
) -> Result<(FeatureTable, InclusionReport)> {
    let lookup = |name: &str| {
        table
            .column_index(name)
            .ok_or_else(|| Error::Config(format!("inclusion column `{name}` not in table")))
    };
    let tenure = lookup(&criteria.tenure_column)?;
    let balance = lookup(&criteria.balance_column)?;
    let mut report = InclusionReport::default();
    let mut keep = Vec::new();
    for (i, row) in table.rows().enumerate() {
        let tenure_ok = row[tenure] > criteria.min_tenure_months;
        let balance_ok = row[balance] >= criteria.min_balance;
        report.removed_tenure += usize::from(!tenure_ok);
        report.removed_balance += usize::from(!balance_ok);
        if tenure_ok && balance_ok {
            keep.push(i);
        }
    }
    report.retained = keep.len();
    report.removed_total = table.n_rows() - keep.len();
    Ok((table.select_rows(&keep), report))
}

/// Stratified train/test split.
///
/// Per-class train counts are apportioned by largest remainder so the train
/// partition has `round(n * train_fraction)` rows and every class sits within
/// one row of its global proportion. Row order inside each partition follows
/// the input.
pub fn split(
    table: &FeatureTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in table.labels().iter().enumerate() {
        by_class[usize::from(y)].push(i);
    }
    for (class, rows) in by_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class} has {} rows, need at least 2",
                rows.len()
            )));
        }
    }

    let n = table.n_rows();
    let target = (n as f64 * train_fraction).round() as usize;
    let exact: Vec<f64> = by_class
        .iter()
        .map(|r| r.len() as f64 * train_fraction)
        .collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut k = 0;
    while counts.iter().sum::<usize>() < target {
        counts[order[k % 2]] += 1;
        k += 1;
    }
    for (c, rows) in counts.iter_mut().zip(&by_class) {
        *c = (*c).clamp(1, rows.len() - 1);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(n - target);
    for (rows, &c) in by_class.iter().zip(&counts) {
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        train.extend_from_slice(&shuffled[..c]);
        test.extend_from_slice(&shuffled[c..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((table.select_rows(&train), table.select_rows(&test)))
}

/// Per-column standardization parameters fitted on a training table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub columns: Vec<String>,
    pub means: Vec<f64>,
    /// Population standard deviations.
    pub stds: Vec<f64>,
    /// Columns with zero variance; passed through unchanged.
    pub zero_variance: Vec<bool>,
}

impl Scaler {
    pub fn fit(table: &FeatureTable) -> Scaler {
        let n = table.n_rows() as f64;
        let d = table.n_cols();
        let mut means = vec![0.0; d];
        let mut stds = vec![0.0; d];
        let mut zero_variance = vec![false; d];
        for j in 0..d {
            let col = table.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            means[j] = mean;
            stds[j] = var.sqrt();
            zero_variance[j] = col.iter().all(|&v| v == col[0]);
        }
        Scaler {
            columns: table.column_names().iter().map(|s| s.to_string()).collect(),
            means,
            stds,
            zero_variance,
        }
    }

    fn check(&self, table: &FeatureTable) -> Result<()> {
        if table.n_cols() != self.means.len() {
            return Err(Error::Shape {
                expected: self.means.len(),
                actual: table.n_cols(),
            });
        }
        Ok(())
    }

    pub fn transform(&self, table: &FeatureTable) -> Result<FeatureTable> {
        self.check(table)?;
        let d = table.n_cols();
        let mut data = table.data().to_vec();
        for (k, v) in data.iter_mut().enumerate() {
            let j = k % d;
            if !self.zero_variance[j] {
                *v = (*v - self.means[j]) / self.stds[j];
            }
        }
        Ok(table.with_data(data))
    }

    pub fn inverse_transform(&self, table: &FeatureTable) -> Result<FeatureTable> {
        self.check(table)?;
        let d = table.n_cols();
        let mut data = table.data().to_vec();
        for (k, v) in data.iter_mut().enumerate() {
            let j = k % d;
            if !self.zero_variance[j] {
                *v = *v * self.stds[j] + self.means[j];
            }
        }
        Ok(table.with_data(data))
    }
}

/// Fits a [`Scaler`] on `train` and applies it to both tables.
pub fn standardize(
    train: &FeatureTable,
    test: &FeatureTable,
) -> Result<(FeatureTable, FeatureTable, Scaler)> {
    let scaler = Scaler::fit(train);
    let train_s = scaler.transform(train)?;
    let test_s = scaler.transform(test)?;
    Ok((train_s, test_s, scaler))
}
