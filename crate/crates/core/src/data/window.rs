use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Column, ColumnKind, FeatureTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Numeric(f64),
    Nominal(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthRecord {
    pub month: u32,
    pub values: BTreeMap<String, FeatureValue>,
}

/// Monthly record stream for one member, with the month the account closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberHistory {
    member_id: String,
    records: Vec<MonthRecord>,
    close_month: Option<u32>,
}

impl MemberHistory {
    pub fn new(
        member_id: impl Into<String>,
        records: Vec<MonthRecord>,
        close_month: Option<u32>,
    ) -> Result<Self> {
        let member_id = member_id.into();
        if records.windows(2).any(|w| w[0].month >= w[1].month) {
            return Err(Error::Validation(format!(
                "member `{member_id}`: month indices must be strictly increasing"
            )));
        }
        if let (Some(close), Some(first)) = (close_month, records.first()) {
            if close < first.month {
                return Err(Error::Validation(format!(
                    "member `{member_id}`: close month {close} precedes first record {}",
                    first.month
                )));
            }
        }
        Ok(MemberHistory {
            member_id,
            records,
            close_month,
        })
    }

    pub fn member_id(&self) -> &str {
        &self.member_id
    }

    pub fn records(&self) -> &[MonthRecord] {
        &self.records
    }

    pub fn close_month(&self) -> Option<u32> {
        self.close_month
    }
}

/// Observation and outcome window lengths in months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub observation_months: u32,
    pub outcome_months: u32,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            observation_months: 12,
            outcome_months: 6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowReport {
    pub retained: usize,
    /// Members with no record inside the observation window.
    pub skipped_empty_window: usize,
    /// Members who closed before the anchor month.
    pub skipped_closed_before_anchor: usize,
}

/// Builds one row per member from the months `[anchor - observation, anchor)`.
///
/// Each numeric feature yields `<name>_last`, `<name>_mean` and
/// `<name>_delta` (last minus first); nominal features yield the one-hot
/// encoding of their last value. The label is 1 iff the account closed in
/// `[anchor, anchor + outcome)`. Rows are ordered by member id.
pub fn build_windows(
    histories: &[MemberHistory],
    cfg: WindowConfig,
    anchor_month: u32,
) -> Result<(FeatureTable, WindowReport)> {
    if cfg.observation_months < 1 || cfg.outcome_months < 1 {
        return Err(Error::Config("window lengths must be at least 1 month".into()));
    }
    let horizon = histories
        .iter()
        .flat_map(|h| h.records.iter().map(|r| r.month).chain(h.close_month))
        .max()
        .ok_or_else(|| Error::Config("no member histories".into()))?;
    let outcome_end = anchor_month + cfg.outcome_months;
    if outcome_end - 1 > horizon {
        return Err(Error::Config(format!(
            "outcome window ends at month {} beyond observed horizon {horizon}",
            outcome_end - 1
        )));
    }
    let obs_start = anchor_month.saturating_sub(cfg.observation_months);

    let mut numeric = BTreeSet::new();
    let mut nominal: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut windows = Vec::new();
    let mut report = WindowReport::default();

    let mut ordered: Vec<&MemberHistory> = histories.iter().collect();
    ordered.sort_by(|a, b| a.member_id.cmp(&b.member_id));
    for h in ordered {
        if matches!(h.close_month, Some(c) if c < anchor_month) {
            report.skipped_closed_before_anchor += 1;
            continue;
        }
        let window: Vec<&MonthRecord> = h
            .records
            .iter()
            .filter(|r| r.month >= obs_start && r.month < anchor_month)
            .collect();
        if window.is_empty() {
            report.skipped_empty_window += 1;
            continue;
        }
        for r in &window {
            for (name, v) in &r.values {
                match v {
                    FeatureValue::Numeric(_) => {
                        numeric.insert(name.clone());
                    }
                    FeatureValue::Nominal(c) => {
                        nominal.entry(name.clone()).or_default().insert(c.clone());
                    }
                }
            }
        }
        windows.push((h, window));
    }
    if let Some(name) = numeric.iter().find(|n| nominal.contains_key(*n)) {
        return Err(Error::Schema(format!(
            "feature `{name}` mixes numeric and nominal values"
        )));
    }

    let mut columns = Vec::new();
    for name in &numeric {
        for suffix in ["last", "mean", "delta"] {
            columns.push(Column::numeric(format!("{name}_{suffix}")));
        }
    }
    for (name, cats) in &nominal {
        for c in cats {
            columns.push(Column {
                name: format!("{name}_last={c}"),
                kind: ColumnKind::Nominal,
            });
        }
    }

    let mut data = Vec::with_capacity(windows.len() * columns.len());
    let mut labels = Vec::with_capacity(windows.len());
    let mut ids = Vec::with_capacity(windows.len());
    for (h, window) in &windows {
        for name in &numeric {
            let series: Vec<f64> = window
                .iter()
                .map(|r| match r.values.get(name) {
                    Some(FeatureValue::Numeric(v)) => Ok(*v),
                    _ => Err(Error::Validation(format!(
                        "member `{}` month {}: missing numeric feature `{name}`",
                        h.member_id, r.month
                    ))),
                })
                .collect::<Result<_>>()?;
            let first = series[0];
            let last = series[series.len() - 1];
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            data.extend([last, mean, last - first]);
        }
        for (name, cats) in &nominal {
            let last = window.iter().rev().find_map(|r| match r.values.get(name) {
                Some(FeatureValue::Nominal(c)) => Some(c),
                _ => None,
            });
            let last = last.ok_or_else(|| {
                Error::Validation(format!(
                    "member `{}`: missing nominal feature `{name}`",
                    h.member_id
                ))
            })?;
            data.extend(cats.iter().map(|c| if c == last { 1.0 } else { 0.0 }));
        }
        let churned = matches!(h.close_month, Some(c) if c >= anchor_month && c < outcome_end);
        labels.push(u8::from(churned));
        ids.push(h.member_id.clone());
    }
    report.retained = labels.len();
    let table = FeatureTable::new(columns, "churn", data, labels, ids)?;
    Ok((table, report))
}
