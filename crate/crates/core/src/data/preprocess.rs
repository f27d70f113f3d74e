//! Train-split-fitted encoding: z-scored numerics with mean imputation,
//! one-hot categoricals, and a class vocabulary for classification targets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::spec::{ConceptSpec, Task};
use super::table::{ColumnKind, ColumnValues, RawTable, RawTarget};
use super::{Dataset, Targets};
use crate::error::{CatError, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureEncoding {
    Numeric { mean: f64, std: f64 },
    Categorical { categories: Vec<String> },
    Dropped { reason: String, source_kind: ColumnKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePlan {
    pub name: String,
    pub concept: usize,
    #[serde(flatten)]
    pub encoding: FeatureEncoding,
}

impl FeaturePlan {
    pub fn source_kind(&self) -> ColumnKind {
        match &self.encoding {
            FeatureEncoding::Numeric { .. } => ColumnKind::Numeric,
            FeatureEncoding::Categorical { .. } => ColumnKind::Categorical,
            FeatureEncoding::Dropped { source_kind, .. } => *source_kind,
        }
    }

    fn width(&self) -> usize {
        match &self.encoding {
            FeatureEncoding::Numeric { .. } => 1,
            FeatureEncoding::Categorical { categories } => categories.len(),
            FeatureEncoding::Dropped { .. } => 0,
        }
    }
}

/// One column of the encoded feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedColumn {
    pub name: String,
    pub raw_feature: String,
    pub concept: usize,
    /// `None` for numeric columns, the category for indicator columns.
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum TargetPlan {
    Regression,
    Classification { labels: Vec<String> },
}

/// Fitted preprocessing state; applying it needs nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub concept_names: Vec<String>,
    pub features: Vec<FeaturePlan>,
    pub target: TargetPlan,
}

/// What a transform did to one table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    /// Missing numeric cells filled with the train mean, per feature.
    pub imputed: BTreeMap<String, usize>,
    /// Cells whose category was not seen in training, per feature.
    pub unseen_categories: BTreeMap<String, usize>,
    /// Missing categorical cells (encoded as all zeros), per feature.
    pub missing_categories: BTreeMap<String, usize>,
}

impl TransformReport {
    pub fn warnings(&self) -> Vec<String> {
        self.unseen_categories
            .iter()
            .map(|(f, n)| format!("{n} unseen categories in {f:?} encoded as zeros"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub feature: String,
    pub reason: String,
}

/// Machine-readable summary written next to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub format_version: u32,
    pub dropped: Vec<DroppedFeature>,
    pub imputation_counts: BTreeMap<String, usize>,
    pub category_maps: BTreeMap<String, Vec<String>>,
    pub standardization: BTreeMap<String, [f64; 2]>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> Option<(f64, f64)> {
    let n = values.clone().count();
    if n == 0 {
        return None;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Some((mean, var.sqrt()))
}

fn sorted_labels(labels: impl IntoIterator<Item = String>) -> Vec<String> {
    let set: BTreeSet<String> = labels.into_iter().collect();
    let mut v: Vec<String> = set.into_iter().collect();
    if v.iter().all(|l| l.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    v
}

impl Preprocessor {
    /// Fits statistics on the `train` rows only.
    pub fn fit(table: &RawTable, spec: &ConceptSpec, train: &[usize]) -> Result<Self> {
        if train.is_empty() {
            return Err(CatError::Data {
                row: None,
                detail: "training split is empty".into(),
            });
        }
        let mut features = Vec::with_capacity(table.columns.len());
        for col in &table.columns {
            let encoding = match &col.values {
                ColumnValues::Numeric(v) => {
                    let observed = train.iter().filter_map(|&i| v[i]);
                    match mean_std(observed) {
                        None => FeatureEncoding::Dropped {
                            reason: "no observed values in training rows".into(),
                            source_kind: ColumnKind::Numeric,
                        },
                        Some((_, std)) if std == 0.0 => FeatureEncoding::Dropped {
                            reason: "constant in training rows".into(),
                            source_kind: ColumnKind::Numeric,
                        },
                        Some((mean, std)) => FeatureEncoding::Numeric { mean, std },
                    }
                }
                ColumnValues::Categorical(v) => {
                    let cats: BTreeSet<&str> = train.iter().filter_map(|&i| v[i].as_deref()).collect();
                    if cats.is_empty() {
                        FeatureEncoding::Dropped {
                            reason: "no observed categories in training rows".into(),
                            source_kind: ColumnKind::Categorical,
                        }
                    } else {
                        FeatureEncoding::Categorical {
                            categories: cats.into_iter().map(str::to_string).collect(),
                        }
                    }
                }
            };
            features.push(FeaturePlan {
                name: col.name.clone(),
                concept: col.concept,
                encoding,
            });
        }
        let target = match (&table.target, spec.task) {
            (RawTarget::Regression(_), Task::Regression) => TargetPlan::Regression,
            (RawTarget::Classification(labels), Task::Classification) => TargetPlan::Classification {
                labels: sorted_labels(labels.iter().cloned()),
            },
            _ => return Err(CatError::Config("target type does not match task".into())),
        };
        let pre = Self {
            concept_names: spec.concepts.iter().map(|g| g.name.clone()).collect(),
            features,
            target,
        };
        for (m, name) in pre.concept_names.iter().enumerate() {
            if !pre.features.iter().any(|f| f.concept == m && f.width() > 0) {
                return Err(CatError::Config(format!("concept {name:?} has no usable features after preprocessing")));
            }
        }
        Ok(pre)
    }

    pub fn task(&self) -> Task {
        match self.target {
            TargetPlan::Regression => Task::Regression,
            TargetPlan::Classification { .. } => Task::Classification,
        }
    }

    /// Output dimension of a model predicting this target.
    pub fn output_dim(&self) -> usize {
        match &self.target {
            TargetPlan::Regression => 1,
            TargetPlan::Classification { labels } => labels.len(),
        }
    }

    pub fn class_labels(&self) -> &[String] {
        match &self.target {
            TargetPlan::Regression => &[],
            TargetPlan::Classification { labels } => labels,
        }
    }

    pub fn encoded_columns(&self) -> Vec<EncodedColumn> {
        let mut out = Vec::new();
        for f in &self.features {
            match &f.encoding {
                FeatureEncoding::Numeric { .. } => out.push(EncodedColumn {
                    name: f.name.clone(),
                    raw_feature: f.name.clone(),
                    concept: f.concept,
                    category: None,
                }),
                FeatureEncoding::Categorical { categories } => {
                    out.extend(categories.iter().map(|c| EncodedColumn {
                        name: format!("{}={c}", f.name),
                        raw_feature: f.name.clone(),
                        concept: f.concept,
                        category: Some(c.clone()),
                    }))
                }
                FeatureEncoding::Dropped { .. } => {}
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.features.iter().map(FeaturePlan::width).sum()
    }

    /// Encoded column indices of each concept, in concept order.
    pub fn concept_columns(&self) -> Vec<(String, Vec<usize>)> {
        let cols = self.encoded_columns();
        self.concept_names
            .iter()
            .enumerate()
            .map(|(m, name)| {
                let idx = cols.iter().enumerate().filter(|(_, c)| c.concept == m).map(|(i, _)| i).collect();
                (name.clone(), idx)
            })
            .collect()
    }

    pub fn column_kinds(&self) -> std::collections::HashMap<String, ColumnKind> {
        self.features.iter().map(|f| (f.name.clone(), f.source_kind())).collect()
    }

    /// Encodes every row of `table`.
    pub fn transform(&self, table: &RawTable) -> Result<(Dataset, TransformReport)> {
        if table.columns.len() != self.features.len()
            || table.columns.iter().zip(&self.features).any(|(c, f)| c.name != f.name)
        {
            return Err(CatError::SchemaMismatch("table columns differ from the fitted feature list".into()));
        }
        let n = table.rows;
        let width = self.width();
        let mut x = Matrix::zeros(n, width);
        let mut report = TransformReport::default();
        let mut offset = 0;
        for (col, plan) in table.columns.iter().zip(&self.features) {
            match (&plan.encoding, &col.values) {
                (FeatureEncoding::Numeric { mean, std }, ColumnValues::Numeric(v)) => {
                    let mut imputed = 0;
                    for (r, cell) in v.iter().enumerate() {
                        let value = cell.unwrap_or_else(|| {
                            imputed += 1;
                            *mean
                        });
                        x.set(r, offset, (value - mean) / std);
                    }
                    if imputed > 0 {
                        report.imputed.insert(plan.name.clone(), imputed);
                    }
                }
                (FeatureEncoding::Categorical { categories }, ColumnValues::Categorical(v)) => {
                    let (mut unseen, mut missing) = (0, 0);
                    for (r, cell) in v.iter().enumerate() {
                        match cell {
                            None => missing += 1,
                            Some(c) => match categories.binary_search(c) {
                                Ok(k) => x.set(r, offset + k, 1.0),
                                Err(_) => unseen += 1,
                            },
                        }
                    }
                    if unseen > 0 {
                        report.unseen_categories.insert(plan.name.clone(), unseen);
                    }
                    if missing > 0 {
                        report.missing_categories.insert(plan.name.clone(), missing);
                    }
                }
                (FeatureEncoding::Categorical { categories }, ColumnValues::Numeric(v)) => {
                    // numeric-looking cells of a categorical feature
                    let mut unseen = 0;
                    for (r, cell) in v.iter().enumerate() {
                        if let Some(val) = cell {
                            let key = val.to_string();
                            match categories.binary_search(&key) {
                                Ok(k) => x.set(r, offset + k, 1.0),
                                Err(_) => unseen += 1,
                            }
                        }
                    }
                    if unseen > 0 {
                        report.unseen_categories.insert(plan.name.clone(), unseen);
                    }
                }
                (FeatureEncoding::Dropped { .. }, _) => {}
                (FeatureEncoding::Numeric { .. }, ColumnValues::Categorical(_)) => {
                    return Err(CatError::SchemaMismatch(format!("feature {:?} was numeric at training time", plan.name)));
                }
            }
            offset += plan.width();
        }
        let targets = match (&self.target, &table.target) {
            (TargetPlan::Regression, RawTarget::Regression(y)) => Targets::Regression(y.clone()),
            (TargetPlan::Classification { labels }, RawTarget::Classification(raw)) => {
                let index = raw
                    .iter()
                    .enumerate()
                    .map(|(r, l)| {
                        labels.iter().position(|x| x == l).ok_or_else(|| CatError::Data {
                            row: Some(r + 2),
                            detail: format!("unknown class label {l:?}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Targets::Classification {
                    labels: index,
                    classes: labels.len(),
                }
            }
            _ => return Err(CatError::SchemaMismatch("target type does not match the fitted task".into())),
        };
        Ok((Dataset { features: x, targets }, report))
    }

    pub fn report(&self, transform: &TransformReport) -> PreprocessReport {
        let mut dropped = Vec::new();
        let mut category_maps = BTreeMap::new();
        let mut standardization = BTreeMap::new();
        for f in &self.features {
            match &f.encoding {
                FeatureEncoding::Dropped { reason, .. } => dropped.push(DroppedFeature {
                    feature: f.name.clone(),
                    reason: reason.clone(),
                }),
                FeatureEncoding::Categorical { categories } => {
                    category_maps.insert(f.name.clone(), categories.clone());
                }
                FeatureEncoding::Numeric { mean, std } => {
                    standardization.insert(f.name.clone(), [*mean, *std]);
                }
            }
        }
        PreprocessReport {
            format_version: 1,
            dropped,
            imputation_counts: transform.imputed.clone(),
            category_maps,
            standardization,
        }
    }
}
