//! File-in, file-out operations behind the `cat-model` binary.
//!
//! Each command reads CSV/JSON inputs, writes its artifacts atomically into
//! an output directory, and returns a summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::archive::{write_atomic, CatModelArchive, HistoryDigest};
use crate::data::{load_csv, load_csv_with_kinds, prepare, ConceptSpec, PreprocessReport};
use crate::error::{CatError, Result};
use crate::interpret::{
    model_expansion, render_polynomial_with_labels, shape_function_table, standardized_contributions, ContributionReport,
    ShapeFunctionTable,
};
use crate::metrics::EvalResult;
use crate::oracle::{run_oracle_suites, OracleConfig, OracleReport};
use crate::params::Parameterized;
use crate::svg::{contributions_svg, shapes_svg};
use crate::train::{evaluate, grid_search, train, GridSpec, Leaderboard, TrainConfig};

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub order: Option<usize>,
    pub rank: Option<usize>,
    pub learning_rate: Option<f64>,
    pub dropout_encoder: Option<f64>,
    pub dropout_taylor: Option<f64>,
    pub bypass_encoders: bool,
    pub patience: Option<usize>,
    pub batch_size: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: TrainConfig) -> TrainConfig {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.order {
            if v != cfg.order {
                cfg.ranks = None;
            }
            cfg.order = v;
        }
        if let Some(v) = self.rank {
            cfg.rank = Some(v);
            cfg.ranks = None;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.dropout_encoder {
            cfg.dropout_encoder = v;
        }
        if let Some(v) = self.dropout_taylor {
            cfg.dropout_taylor = v;
        }
        if self.bypass_encoders {
            cfg.bypass_encoders = true;
        }
        if let Some(v) = self.patience {
            cfg.patience = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        cfg
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CatError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CatError::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn load_spec(path: &Path) -> Result<ConceptSpec> {
    ConceptSpec::parse(&read_text(path)?)
}

pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<TrainConfig> {
    let base = match path {
        Some(p) => TrainConfig::parse(&read_text(p)?)?,
        None => TrainConfig::default(),
    };
    let cfg = overrides.apply(base);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub format_version: u32,
    pub split: String,
    pub metrics: Vec<EvalResult>,
}

fn metrics_csv(docs: &[MetricsDoc]) -> String {
    let mut s = String::from("split,metric,value,count\n");
    for d in docs {
        for m in &d.metrics {
            s.push_str(&format!("{},{},{:?},{}\n", d.split, m.metric, m.value, m.count));
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub archive: CatModelArchive,
    pub validation: Vec<EvalResult>,
    pub test: Vec<EvalResult>,
    pub param_count: usize,
    pub report: PreprocessReport,
    pub warnings: Vec<String>,
}

pub const ARCHIVE_FILE: &str = "model.json";
pub const HISTORY_FILE: &str = "history.csv";

/// Split, preprocess, train; writes `model.json`, `history.csv`,
/// `preprocess.json`, `metrics.json` and `metrics.csv` into `out`.
pub fn cmd_train(data: &Path, spec: &Path, config: Option<&Path>, overrides: &Overrides, out: &Path) -> Result<TrainSummary> {
    let spec = load_spec(spec)?;
    let config = load_config(config, overrides)?;
    let table = load_csv(data, &spec)?;
    let prep = prepare(&table, &spec, config.split_seed)?;
    let model_spec = config.model_spec(&prep.preprocessor);
    let model = config.init_model(&model_spec)?;
    let outcome = train(model, &prep.splits.train, &prep.splits.val, &config)?;
    let validation = evaluate(&outcome.model, &prep.splits.val)?;
    let test = evaluate(&outcome.model, &prep.splits.test)?;
    let archive = CatModelArchive {
        format_version: crate::archive::ARCHIVE_FORMAT_VERSION,
        spec,
        preprocessor: prep.preprocessor,
        model: outcome.model,
        config,
        split: prep.indices,
        history: HistoryDigest::of(&outcome.history),
    };
    ensure_dir(out)?;
    archive.save(out.join(ARCHIVE_FILE))?;
    write_atomic(out.join(HISTORY_FILE), outcome.history.to_csv().as_bytes())?;
    write_atomic(out.join("preprocess.json"), to_json(&prep.report).as_bytes())?;
    let docs = [
        MetricsDoc {
            format_version: 1,
            split: "validation".into(),
            metrics: validation.clone(),
        },
        MetricsDoc {
            format_version: 1,
            split: "test".into(),
            metrics: test.clone(),
        },
    ];
    write_atomic(out.join("metrics.json"), to_json(&docs).as_bytes())?;
    write_atomic(out.join("metrics.csv"), metrics_csv(&docs).as_bytes())?;
    Ok(TrainSummary {
        param_count: archive.model.param_count(),
        archive,
        validation,
        test,
        report: prep.report,
        warnings: prep.warnings,
    })
}

#[derive(Debug, Clone)]
pub struct EvaluateSummary {
    pub metrics: Vec<EvalResult>,
    pub warnings: Vec<String>,
}

/// Applies a stored model to every row of `data`. With `out`, writes
/// `metrics.json` and `metrics.csv` there.
pub fn cmd_evaluate(archive: &Path, data: &Path, out: Option<&Path>) -> Result<EvaluateSummary> {
    let archive = CatModelArchive::load(archive)?;
    let table = load_csv_with_kinds(data, &archive.spec, &archive.preprocessor.column_kinds())?;
    let (dataset, report) = archive.preprocessor.transform(&table)?;
    let metrics = evaluate(&archive.model, &dataset)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let docs = [MetricsDoc {
            format_version: 1,
            split: data.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            metrics: metrics.clone(),
        }];
        write_atomic(dir.join("metrics.json"), to_json(&docs).as_bytes())?;
        write_atomic(dir.join("metrics.csv"), metrics_csv(&docs).as_bytes())?;
    }
    Ok(EvaluateSummary {
        metrics,
        warnings: report.warnings(),
    })
}

#[derive(Debug, Clone)]
pub struct ExplainSummary {
    pub polynomial: String,
    pub contributions: ContributionReport,
    pub shapes: ShapeFunctionTable,
    pub files: Vec<PathBuf>,
}

/// Writes `polynomial.txt`, `contributions.{json,csv,svg}` and
/// `shapes.{json,csv,svg}` for a stored model over reference rows.
pub fn cmd_explain(archive: &Path, reference: &Path, out: &Path) -> Result<ExplainSummary> {
    let archive = CatModelArchive::load(archive)?;
    let expansion = model_expansion(&archive.model)?;
    let table = load_csv_with_kinds(reference, &archive.spec, &archive.preprocessor.column_kinds())?;
    let (dataset, _) = archive.preprocessor.transform(&table)?;
    let labels: Vec<String> = match archive.preprocessor.class_labels() {
        [] => vec![archive.spec.target.clone()],
        l => l.to_vec(),
    };
    let contributions = standardized_contributions(&archive.model, &dataset, &labels)?;
    let z = archive.model.concepts(&dataset.features)?;
    let shapes = shape_function_table(&expansion, &z, labels.clone())?;

    let mut polynomial = String::new();
    for (i, name) in expansion.concept_names().iter().enumerate() {
        polynomial.push_str(&format!("# z{} = {name}\n", i + 1));
    }
    polynomial.push_str(&render_polynomial_with_labels(&expansion, 4, &labels));
    polynomial.push('\n');

    ensure_dir(out)?;
    let files: Vec<(&str, String)> = vec![
        ("polynomial.txt", polynomial.clone()),
        ("contributions.json", to_json(&contributions)),
        ("contributions.csv", contributions.to_csv()),
        ("contributions.svg", contributions_svg(&contributions, 30)),
        ("shapes.json", to_json(&shapes)),
        ("shapes.csv", shapes.to_csv()),
        ("shapes.svg", shapes_svg(&shapes)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = out.join(name);
        write_atomic(&p, body.as_bytes())?;
        written.push(p);
    }
    Ok(ExplainSummary {
        polynomial,
        contributions,
        shapes,
        files: written,
    })
}

/// Trains every cell of `grid.json` on one split; writes
/// `leaderboard.csv` and `leaderboard.json`.
pub fn cmd_sweep(data: &Path, spec: &Path, grid: &Path, overrides: &Overrides, out: &Path) -> Result<Leaderboard> {
    let spec = load_spec(spec)?;
    let mut grid = GridSpec::parse(&read_text(grid)?)?;
    grid.base = overrides.apply(grid.base);
    grid.base.validate()?;
    let table = load_csv(data, &spec)?;
    let prep = prepare(&table, &spec, grid.base.split_seed)?;
    let model_spec = grid.base.model_spec(&prep.preprocessor);
    let board = grid_search(&grid, &model_spec, &prep.splits)?;
    ensure_dir(out)?;
    write_atomic(out.join("leaderboard.csv"), board.to_csv().as_bytes())?;
    write_atomic(out.join("leaderboard.json"), to_json(&board).as_bytes())?;
    Ok(board)
}

/// Runs the oracle suites and writes `oracle_report.{txt,json}` when `out`
/// is given. Use [`OracleReport::check`] to turn failures into an error.
pub fn cmd_oracle_check(config: &OracleConfig, out: Option<&Path>) -> Result<OracleReport> {
    let report = run_oracle_suites(config)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_atomic(dir.join("oracle_report.txt"), report.to_text().as_bytes())?;
        write_atomic(dir.join("oracle_report.json"), to_json(&report).as_bytes())?;
    }
    Ok(report)
}
