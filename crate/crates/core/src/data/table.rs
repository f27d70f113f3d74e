use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::{ConceptSpec, Task};
use crate::error::{CatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    /// `None` marks a missing cell.
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnValues {
    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnValues::Numeric(_) => ColumnKind::Numeric,
            ColumnValues::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn missing(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
            ColumnValues::Categorical(v) => v.iter().filter(|x| x.is_none()).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub concept: usize,
    pub values: ColumnValues,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawTarget {
    Regression(Vec<f64>),
    /// Class labels as they appear in the file.
    Classification(Vec<String>),
}

/// Columns referenced by a concept spec, before encoding and scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub rows: usize,
    /// In concept-spec order.
    pub columns: Vec<RawColumn>,
    pub target: RawTarget,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

fn data_err(row: Option<usize>, detail: impl Into<String>) -> CatError {
    CatError::Data {
        row,
        detail: detail.into(),
    }
}

/// Reads the spec's columns from a CSV file with a header row.
pub fn load_csv(path: impl AsRef<Path>, spec: &ConceptSpec) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CatError::io(path, e))?;
    read_csv(file, spec, None)
}

/// Like [`load_csv`] but forces each feature's kind, as recorded at training
/// time. A cell that does not fit a numeric column is an error.
pub fn load_csv_with_kinds(path: impl AsRef<Path>, spec: &ConceptSpec, kinds: &HashMap<String, ColumnKind>) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CatError::io(path, e))?;
    read_csv(file, spec, Some(kinds))
}

/// Row numbers in errors are file line numbers (the header is line 1).
pub fn read_csv<R: Read>(reader: R, spec: &ConceptSpec, kinds: Option<&HashMap<String, ColumnKind>>) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| data_err(Some(1), format!("cannot read header: {e}")))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(data_err(None, "file is empty or has no header"));
    }
    let position: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let lookup = |name: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| CatError::SchemaMismatch(format!("column {name:?} not found in header")))
    };
    let target_idx = lookup(&spec.target)?;
    let features: Vec<(usize, &str, usize)> = spec
        .feature_names()
        .map(|(concept, name)| lookup(name).map(|i| (concept, name, i)))
        .collect::<Result<_>>()?;

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); features.len()];
    let mut target_cells = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize).unwrap_or(line);
            data_err(Some(row), format!("malformed record: {e}"))
        })?;
        for (slot, &(_, _, idx)) in cells.iter_mut().zip(&features) {
            let cell = &record[idx];
            slot.push(if is_missing(cell) { None } else { Some(cell.trim().to_string()) });
        }
        let t = record[target_idx].trim();
        if is_missing(t) {
            return Err(data_err(Some(line), format!("missing target {:?}", spec.target)));
        }
        target_cells.push((line, t.to_string()));
    }
    let rows = target_cells.len();
    if rows == 0 {
        return Err(data_err(None, "file has a header but no data rows"));
    }

    let target = match spec.task {
        Task::Regression => RawTarget::Regression(
            target_cells
                .iter()
                .map(|(line, t)| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| data_err(Some(*line), format!("target {t:?} is not a finite number")))
                })
                .collect::<Result<_>>()?,
        ),
        Task::Classification => RawTarget::Classification(target_cells.into_iter().map(|(_, t)| t).collect()),
    };

    let mut columns = Vec::with_capacity(features.len());
    for ((concept, name, _), values) in features.into_iter().zip(cells) {
        let parsed: Vec<Option<Option<f64>>> = values
            .iter()
            .map(|c| match c {
                None => Some(None),
                Some(s) => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
            })
            .collect();
        let forced = kinds.and_then(|k| k.get(name)).copied();
        let all_numeric = parsed.iter().all(Option::is_some);
        let kind = forced.unwrap_or(if all_numeric { ColumnKind::Numeric } else { ColumnKind::Categorical });
        let values = match kind {
            ColumnKind::Numeric => {
                if let Some(bad) = parsed.iter().position(Option::is_none) {
                    return Err(data_err(
                        Some(bad + 2),
                        format!("column {name:?} expects a number, found {:?}", values[bad].as_deref().unwrap_or("")),
                    ));
                }
                ColumnValues::Numeric(parsed.into_iter().map(Option::unwrap).collect())
            }
            ColumnKind::Categorical => ColumnValues::Categorical(values),
        };
        columns.push(RawColumn {
            name: name.to_string(),
            concept,
            values,
        });
    }
    Ok(RawTable { rows, columns, target })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ConceptSpec {
        ConceptSpec::parse(
            r#"{"task":"regression","target":"y","concepts":[
                {"name":"g1","features":["a","c"]},{"name":"g2","features":["b"]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn reads_hand_fixture() {
        let text = "a,b,c,y\n1.5,red,3,10\n-2,blue,,20\n0,red,4,30\n";
        let t = read_csv(text.as_bytes(), &spec(), None).unwrap();
        assert_eq!(t.rows, 3);
        assert_eq!(t.columns[0].name, "a");
        assert_eq!(t.columns[0].values, ColumnValues::Numeric(vec![Some(1.5), Some(-2.0), Some(0.0)]));
        assert_eq!(t.columns[1].name, "c");
        assert_eq!(t.columns[1].values, ColumnValues::Numeric(vec![Some(3.0), None, Some(4.0)]));
        assert_eq!(t.columns[2].concept, 1);
        assert_eq!(t.columns[2].values.kind(), ColumnKind::Categorical);
        assert_eq!(t.target, RawTarget::Regression(vec![10.0, 20.0, 30.0]));
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_csv("a,b,y\n1,2,3\n".as_bytes(), &spec(), None).unwrap_err();
        assert!(err.to_string().contains("\"c\""), "{err}");
        assert_eq!(err.class(), "SCHEMA_MISMATCH");
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(read_csv("".as_bytes(), &spec(), None).is_err());
        assert!(read_csv("a,b,c,y\n".as_bytes(), &spec(), None).is_err());
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = read_csv("a,b,c,y\n1,x,2,3\n4,y\n".as_bytes(), &spec(), None).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn bad_regression_target_reports_line() {
        let err = read_csv("a,b,c,y\n1,x,2,3\n4,y,5,oops\n".as_bytes(), &spec(), None).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn forced_numeric_kind_rejects_text() {
        let kinds: HashMap<String, ColumnKind> = [("c".to_string(), ColumnKind::Numeric)].into();
        let err = read_csv("a,b,c,y\n1,x,2,3\n4,y,five,5\n".as_bytes(), &spec(), Some(&kinds)).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }
}
