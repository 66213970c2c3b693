use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::window::{FeatureValue, MemberHistory, MonthRecord};
use super::{Column, ColumnKind, FeatureTable};
use crate::error::{Error, Result};

pub const TABLE_FORMAT_VERSION: u32 = 1;
const ROW_ID_COLUMN: &str = "row_id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Numeric,
    Nominal,
    Label,
    /// Row identifier; optional, row indices are used when absent.
    Id,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputColumn {
    pub name: String,
    pub kind: InputKind,
}

/// Description of a raw delimited file: every header column with its kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSchema {
    pub columns: Vec<InputColumn>,
}

impl InputSchema {
    pub fn new(columns: &[(&str, InputKind)]) -> Self {
        InputSchema {
            columns: columns
                .iter()
                .map(|(n, k)| InputColumn {
                    name: (*n).to_string(),
                    kind: *k,
                })
                .collect(),
        }
    }
}

/// Sidecar written next to every output table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub format_version: u32,
    pub id_column: String,
    pub label: String,
    pub columns: Vec<Column>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".schema.json");
    PathBuf::from(s)
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{cell}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{cell}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_label(cell: &str, row: usize, column: &str) -> Result<u8> {
    let v = parse_number(cell, row, column)?;
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(Error::Validation(format!(
            "label `{cell}` at row {row} outside {{0,1}}"
        )))
    }
}

/// Reads a delimited file described by `schema`, one-hot expanding nominal
/// columns (categories in sorted order) and extracting the label.
pub fn load_table(path: impl AsRef<Path>, schema: &InputSchema) -> Result<FeatureTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(File::open(path.as_ref())?);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let mut positions = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        let pos = header
            .iter()
            .position(|h| *h == col.name)
            .ok_or_else(|| Error::Schema(format!("missing column `{}`", col.name)))?;
        positions.push(pos);
    }
    if let Some(extra) = header
        .iter()
        .find(|h| !schema.columns.iter().any(|c| &c.name == *h))
    {
        return Err(Error::Schema(format!("unexpected column `{extra}`")));
    }
    let labels_declared: Vec<_> = schema
        .columns
        .iter()
        .filter(|c| c.kind == InputKind::Label)
        .collect();
    if labels_declared.len() != 1 {
        return Err(Error::Schema(format!(
            "expected exactly one label column, found {}",
            labels_declared.len()
        )));
    }
    let label_name = labels_declared[0].name.clone();

    let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>()?;

    // categories per nominal column, sorted
    let mut categories: Vec<Option<Vec<String>>> = vec![None; schema.columns.len()];
    for (k, col) in schema.columns.iter().enumerate() {
        if col.kind == InputKind::Nominal {
            let set: BTreeSet<String> = records
                .iter()
                .map(|r| r.get(positions[k]).unwrap_or("").to_string())
                .collect();
            categories[k] = Some(set.into_iter().collect());
        }
    }

    let mut columns = Vec::new();
    for (k, col) in schema.columns.iter().enumerate() {
        match col.kind {
            InputKind::Numeric => columns.push(Column::numeric(&col.name)),
            InputKind::Nominal => {
                for cat in categories[k].as_ref().expect("nominal categories") {
                    columns.push(Column {
                        name: format!("{}={}", col.name, cat),
                        kind: ColumnKind::Nominal,
                    });
                }
            }
            InputKind::Label | InputKind::Id => {}
        }
    }

    let mut data = Vec::with_capacity(records.len() * columns.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut row_ids = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let row = i + 1;
        let mut id = None;
        for (k, col) in schema.columns.iter().enumerate() {
            let cell = record.get(positions[k]).ok_or_else(|| Error::Parse {
                row,
                column: col.name.clone(),
                message: "missing cell".into(),
            })?;
            match col.kind {
                InputKind::Numeric => data.push(parse_number(cell, row, &col.name)?),
                InputKind::Nominal => {
                    for cat in categories[k].as_ref().expect("nominal categories") {
                        data.push(if cat == cell { 1.0 } else { 0.0 });
                    }
                }
                InputKind::Label => labels.push(parse_label(cell, row, &col.name)?),
                InputKind::Id => id = Some(cell.to_string()),
            }
        }
        row_ids.push(id.unwrap_or_else(|| i.to_string()));
    }
    FeatureTable::new(columns, label_name, data, labels, row_ids)
}

/// Writes `row_id, features..., label` plus a `<path>.schema.json` sidecar.
pub fn write_table(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![ROW_ID_COLUMN.to_string()];
    header.extend(table.columns().iter().map(|c| c.name.clone()));
    header.push(table.label_name().to_string());
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..table.n_rows() {
        record.clear();
        record.push(table.row_ids()[i].clone());
        // Display for f64 is the shortest string that parses back to the same bits
        record.extend(table.row(i).iter().map(|v| v.to_string()));
        record.push(table.labels()[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;

    let sidecar = TableSchema {
        format_version: TABLE_FORMAT_VERSION,
        id_column: ROW_ID_COLUMN.to_string(),
        label: table.label_name().to_string(),
        columns: table.columns().to_vec(),
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads a table previously written by [`write_table`].
pub fn read_table(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let sidecar: TableSchema = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    if sidecar.format_version != TABLE_FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported table format version {}",
            sidecar.format_version
        )));
    }
    let mut input = vec![InputColumn {
        name: sidecar.id_column.clone(),
        kind: InputKind::Id,
    }];
    input.extend(sidecar.columns.iter().map(|c| InputColumn {
        name: c.name.clone(),
        kind: InputKind::Numeric,
    }));
    input.push(InputColumn {
        name: sidecar.label.clone(),
        kind: InputKind::Label,
    });
    let table = load_table(path, &InputSchema { columns: input })?;
    // restore indicator kinds
    FeatureTable::new(
        sidecar.columns,
        sidecar.label,
        table.data().to_vec(),
        table.labels().to_vec(),
        table.row_ids().to_vec(),
    )
}

/// Reads long-format member histories: `member_id, month_index, close_month`
/// followed by feature columns. A feature column is numeric when every cell
/// parses as a number, nominal otherwise. Empty feature cells are rejected.
pub fn read_histories(path: impl AsRef<Path>) -> Result<Vec<MemberHistory>> {
    let mut reader = csv::Reader::from_reader(File::open(path.as_ref())?);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let required = ["member_id", "month_index", "close_month"];
    let mut idx = [0usize; 3];
    for (k, name) in required.iter().enumerate() {
        idx[k] = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))?;
    }
    let feature_cols: Vec<(usize, &str)> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| !idx.contains(i))
        .map(|(i, h)| (i, h.as_str()))
        .collect();
    let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>()?;

    let mut numeric = vec![true; feature_cols.len()];
    for (f, &(pos, name)) in feature_cols.iter().enumerate() {
        for (i, r) in records.iter().enumerate() {
            let cell = r.get(pos).unwrap_or("").trim();
            if cell.is_empty() {
                return Err(Error::Parse {
                    row: i + 1,
                    column: name.to_string(),
                    message: "missing value".into(),
                });
            }
            if cell.parse::<f64>().is_err() {
                numeric[f] = false;
            }
        }
    }

    struct Partial {
        close: Option<u32>,
        records: Vec<MonthRecord>,
    }
    let mut members: BTreeMap<String, Partial> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let row = i + 1;
        let member = r.get(idx[0]).unwrap_or("").to_string();
        let month_cell = r.get(idx[1]).unwrap_or("");
        let month: u32 = month_cell.trim().parse().map_err(|_| Error::Parse {
            row,
            column: "month_index".into(),
            message: format!("`{month_cell}` is not a month index"),
        })?;
        let close_cell = r.get(idx[2]).unwrap_or("").trim();
        let close = if close_cell.is_empty() {
            None
        } else {
            Some(close_cell.parse::<u32>().map_err(|_| Error::Parse {
                row,
                column: "close_month".into(),
                message: format!("`{close_cell}` is not a month index"),
            })?)
        };
        let mut values = BTreeMap::new();
        for (f, &(pos, name)) in feature_cols.iter().enumerate() {
            let cell = r.get(pos).unwrap_or("").trim();
            let v = if numeric[f] {
                FeatureValue::Numeric(parse_number(cell, row, name)?)
            } else {
                FeatureValue::Nominal(cell.to_string())
            };
            values.insert(name.to_string(), v);
        }
        let entry = members.entry(member.clone()).or_insert(Partial {
            close,
            records: Vec::new(),
        });
        if entry.close != close {
            return Err(Error::Validation(format!(
                "member `{member}` has inconsistent close_month values"
            )));
        }
        entry.records.push(MonthRecord { month, values });
    }

    members
        .into_iter()
        .map(|(id, mut p)| {
            p.records.sort_by_key(|r| r.month);
            MemberHistory::new(id, p.records, p.close)
        })
        .collect()
}
