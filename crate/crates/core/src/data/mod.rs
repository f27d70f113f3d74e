//! Concept specs, CSV ingestion, preprocessing and splitting.

mod preprocess;
mod spec;
mod split;
mod table;

pub use preprocess::{
    DroppedFeature, EncodedColumn, FeatureEncoding, FeaturePlan, PreprocessReport, Preprocessor, TargetPlan, TransformReport,
};
pub use spec::{ConceptGroup, ConceptSpec, Task};
pub use split::{split, SplitIndices, DEFAULT_RATIOS};
pub use table::{load_csv, load_csv_with_kinds, read_csv, ColumnKind, ColumnValues, RawColumn, RawTable, RawTarget};

use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Targets {
    Regression(Vec<f64>),
    Classification { labels: Vec<usize>, classes: usize },
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Regression(y) => y.len(),
            Targets::Classification { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Targets::Regression(_) => Task::Regression,
            Targets::Classification { .. } => Task::Classification,
        }
    }

    fn subset(&self, rows: &[usize]) -> Targets {
        match self {
            Targets::Regression(y) => Targets::Regression(rows.iter().map(|&r| y[r]).collect()),
            Targets::Classification { labels, classes } => Targets::Classification {
                labels: rows.iter().map(|&r| labels[r]).collect(),
                classes: *classes,
            },
        }
    }
}

/// Encoded feature matrix plus targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Matrix,
    pub targets: Targets,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Targets) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(CatError::Shape(format!(
                "{} feature rows but {} targets",
                features.rows(),
                targets.len()
            )));
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.subset_rows(rows),
            targets: self.targets.subset(rows),
        }
    }
}

/// Train/validation/test datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl DataSplits {
    pub fn from_indices(data: &Dataset, idx: &SplitIndices) -> Self {
        Self {
            train: data.subset(&idx.train),
            val: data.subset(&idx.val),
            test: data.subset(&idx.test),
        }
    }
}

/// Everything needed to go from a CSV file to model-ready splits.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub preprocessor: Preprocessor,
    pub indices: SplitIndices,
    pub splits: DataSplits,
    pub report: PreprocessReport,
    pub warnings: Vec<String>,
}

/// Split, fit the preprocessor on train rows, and encode all rows.
pub fn prepare(table: &RawTable, spec: &ConceptSpec, split_seed: u64) -> Result<PreparedData> {
    let indices = split(table.rows, DEFAULT_RATIOS, split_seed)?;
    let preprocessor = Preprocessor::fit(table, spec, &indices.train)?;
    let (all, transform) = preprocessor.transform(table)?;
    let report = preprocessor.report(&transform);
    Ok(PreparedData {
        splits: DataSplits::from_indices(&all, &indices),
        warnings: transform.warnings(),
        preprocessor,
        indices,
        report,
    })
}
