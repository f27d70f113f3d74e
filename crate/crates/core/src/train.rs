//! Minibatch training with early stopping, and grid search over
//! hyperparameters.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DataSplits, Preprocessor, Targets, Task};
use crate::encoder::{EncoderConfig, DEFAULT_HIDDEN, DEFAULT_NEGATIVE_SLOPE};
use crate::error::{CatError, Result};
use crate::loss::{mse_loss, softmax_xent_loss};
use crate::metrics::{evaluate_classification, evaluate_regression, EvalResult};
use crate::model::{CatModel, ModelSpec};
use crate::optim::{adamw_step, AdamWState};
use crate::params::Parameterized;
use crate::taylornet::RankConfig;
use crate::tensor::Matrix;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout_encoder: f64,
    pub dropout_taylor: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Seeds initialization, shuffling and dropout.
    pub seed: u64,
    /// Seeds the train/validation/test split.
    pub split_seed: u64,
    pub order: usize,
    /// Uniform rank for every order; `None` picks 8 for order ≤ 2 and 16 above.
    pub rank: Option<usize>,
    /// Full per-order ranks; overrides `rank`.
    pub ranks: Option<RankConfig>,
    pub encoder_hidden: Vec<usize>,
    pub bypass_encoders: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            weight_decay: 1e-5,
            dropout_encoder: 0.0,
            dropout_taylor: 0.0,
            batch_size: 256,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            split_seed: 0,
            order: 2,
            rank: None,
            ranks: None,
            encoder_hidden: DEFAULT_HIDDEN.to_vec(),
            bypass_encoders: false,
        }
    }
}

pub const DROPOUT_GRID: [f64; 7] = [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5];

impl TrainConfig {
    pub fn parse(document: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(document).map_err(|e| CatError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn rank_config(&self) -> RankConfig {
        match (&self.ranks, self.rank) {
            (Some(r), _) => r.clone(),
            (None, Some(r)) => RankConfig::uniform(self.order, r),
            (None, None) => RankConfig::default_for_order(self.order),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CatError::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay {} must be non-negative", self.weight_decay));
        }
        for (name, p) in [("encoder", self.dropout_encoder), ("taylor", self.dropout_taylor)] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} dropout {p} outside [0, 1)"));
            }
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch size and max epochs must be positive".into());
        }
        if self.order == 0 || self.order > crate::taylornet::MAX_ORDER {
            return bad(format!("order must be in 1..={}", crate::taylornet::MAX_ORDER));
        }
        if self.rank == Some(0) {
            return bad("rank must be at least 1".into());
        }
        if let Some(r) = &self.ranks {
            if r.order() != self.order {
                return bad(format!("ranks list {} orders, config order is {}", r.order(), self.order));
            }
        }
        EncoderConfig {
            hidden: self.encoder_hidden.clone(),
            negative_slope: DEFAULT_NEGATIVE_SLOPE,
            dropout: self.dropout_encoder,
        }
        .validate()
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            hidden: self.encoder_hidden.clone(),
            negative_slope: DEFAULT_NEGATIVE_SLOPE,
            dropout: self.dropout_encoder,
        }
    }

    /// Model architecture for data encoded by `pre`.
    pub fn model_spec(&self, pre: &Preprocessor) -> ModelSpec {
        let columns = pre.encoded_columns();
        let feature_names = columns.iter().map(|c| c.name.clone()).collect();
        ModelSpec {
            task: pre.task(),
            input_width: columns.len(),
            groups: pre.concept_columns(),
            feature_names,
            output_dim: pre.output_dim(),
            ranks: self.rank_config(),
            encoder: self.encoder_config(),
            bypass_encoders: self.bypass_encoders,
            taylor_dropout: self.dropout_taylor,
        }
    }

    /// Initializes a model from `spec` with this config's seed.
    pub fn init_model(&self, spec: &ModelSpec) -> Result<CatModel> {
        CatModel::init(spec, &mut ChaCha8Rng::seed_from_u64(self.seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// `rmse` or `accuracy`.
    pub metric: String,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_metric: f64,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_metric,lr\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{:?},{:?},{:?}", e.epoch, e.train_loss, e.val_metric, e.lr);
        }
        s
    }
}

/// Validation metric used for early stopping and model selection.
pub fn selection_metric(task: Task) -> &'static str {
    match task {
        Task::Regression => "rmse",
        Task::Classification => "accuracy",
    }
}

/// Whether `a` is strictly better than `b` under the task's metric.
pub fn is_better(task: Task, a: f64, b: f64) -> bool {
    match task {
        Task::Regression => a < b,
        Task::Classification => a > b,
    }
}

/// RMSE for regression; accuracy and macro-F1 for classification.
pub fn evaluate(model: &CatModel, data: &Dataset) -> Result<Vec<EvalResult>> {
    match &data.targets {
        Targets::Regression(y) => {
            let pred = model.predict(&data.features)?;
            Ok(vec![evaluate_regression(pred.as_slice(), y)?])
        }
        Targets::Classification { labels, classes } => {
            let pred = model.predict_labels(&data.features)?;
            Ok(evaluate_classification(&pred, labels, *classes)?.to_vec())
        }
    }
}

pub fn validation_metric(model: &CatModel, data: &Dataset) -> Result<f64> {
    Ok(evaluate(model, data)?[0].value)
}

fn batch_loss(model: &CatModel, out: &Matrix, targets: &Targets, rows: &[usize]) -> Result<(f64, Matrix)> {
    match targets {
        Targets::Regression(y) => {
            if model.task != Task::Regression {
                return Err(CatError::Config("regression targets for a classification model".into()));
            }
            let t: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
            mse_loss(out, &t)
        }
        Targets::Classification { labels, .. } => {
            if model.task != Task::Classification {
                return Err(CatError::Config("class labels for a regression model".into()));
            }
            let t: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
            softmax_xent_loss(out, &t)
        }
    }
}

pub struct TrainOutcome {
    /// Snapshot with the best validation metric.
    pub model: CatModel,
    pub history: History,
}

/// Trains `model` on `train`, selecting the epoch with the best metric on
/// `val`. Stops once `patience` epochs pass without strict improvement.
pub fn train(mut model: CatModel, train: &Dataset, val: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(CatError::Data {
            row: None,
            detail: "training and validation splits must be nonempty".into(),
        });
    }
    model.bank.set_dropout(config.dropout_encoder);
    model.taylor_dropout = config.dropout_taylor;
    model.validate()?;

    // separate stream from initialization, which also uses `seed`
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut state = AdamWState::default();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let metric = selection_metric(model.task);
    let mut best: Option<(usize, f64, CatModel)> = None;
    let mut since_best = 0;
    let mut epochs = Vec::new();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let x = train.features.subset_rows(rows);
            let (out, cache) = model.forward_train(&x, &mut rng)?;
            let (loss, up) = batch_loss(&model, &out, &train.targets, rows)?;
            if !loss.is_finite() {
                return Err(CatError::Divergence {
                    epoch,
                    batch: b + 1,
                    detail: format!("loss is {loss}"),
                });
            }
            total += loss * rows.len() as f64;
            let grads = model.backward(&up, &cache)?;
            adamw_step(
                &mut model.params_mut(),
                &grads.params(),
                &mut state,
                config.learning_rate,
                config.weight_decay,
            )
            .map_err(|e| match e {
                CatError::NonFinite(detail) => CatError::Divergence {
                    epoch,
                    batch: b + 1,
                    detail,
                },
                other => other,
            })?;
        }
        let val_metric = validation_metric(&model, val).map_err(|e| match e {
            CatError::NonFinite(detail) => CatError::Divergence { epoch, batch: 0, detail },
            other => other,
        })?;
        if !val_metric.is_finite() {
            return Err(CatError::Divergence {
                epoch,
                batch: 0,
                detail: format!("validation {metric} is {val_metric}"),
            });
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            val_metric,
            lr: config.learning_rate,
        });
        match &best {
            Some((_, b, _)) if !is_better(model.task, val_metric, *b) => since_best += 1,
            _ => {
                best = Some((epoch, val_metric, model.clone()));
                since_best = 0;
            }
        }
        if since_best > config.patience {
            break;
        }
    }
    let (best_epoch, best_val_metric, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        history: History {
            metric: metric.to_string(),
            epochs,
            best_epoch,
            best_val_metric,
        },
    })
}

/// Values to try for each hyperparameter; a missing list keeps the base
/// config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub base: TrainConfig,
    pub order: Vec<usize>,
    pub rank: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub dropout_encoder: Vec<f64>,
    pub dropout_taylor: Vec<f64>,
    pub weight_decay: Vec<f64>,
}

fn or_base<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

impl GridSpec {
    pub fn parse(document: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(document).map_err(|e| CatError::Config(format!("grid: {e}")))?;
        g.base.validate()?;
        Ok(g)
    }

    /// Cartesian product in order × rank × lr × encoder dropout × taylor
    /// dropout × weight decay order, last axis fastest.
    pub fn cells(&self) -> Vec<TrainConfig> {
        let b = &self.base;
        let base_rank = b.rank.unwrap_or_else(|| RankConfig::default_for_order(b.order).input[0]);
        let mut out = Vec::new();
        for &order in &or_base(&self.order, b.order) {
            for rank in or_base(&self.rank, base_rank) {
                for &lr in &or_base(&self.learning_rate, b.learning_rate) {
                    for &de in &or_base(&self.dropout_encoder, b.dropout_encoder) {
                        for &dt in &or_base(&self.dropout_taylor, b.dropout_taylor) {
                            for &wd in &or_base(&self.weight_decay, b.weight_decay) {
                                let explicit_rank = !self.rank.is_empty() || b.rank.is_some();
                                out.push(TrainConfig {
                                    order,
                                    rank: if explicit_rank { Some(rank) } else { None },
                                    ranks: None,
                                    learning_rate: lr,
                                    dropout_encoder: de,
                                    dropout_taylor: dt,
                                    weight_decay: wd,
                                    ..b.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    /// Position in [`GridSpec::cells`] order.
    pub index: usize,
    pub config: TrainConfig,
    pub param_count: usize,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok {
        val_metric: f64,
        test: Vec<EvalResult>,
        best_epoch: usize,
        epochs: usize,
    },
    Failed {
        error_class: String,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub metric: String,
    /// Successful cells best first, then failed cells in grid order.
    pub cells: Vec<CellResult>,
}

impl Leaderboard {
    pub fn best(&self) -> Option<&CellResult> {
        self.cells.first().filter(|c| matches!(c.outcome, CellOutcome::Ok { .. }))
    }

    pub fn failed(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| matches!(c.outcome, CellOutcome::Failed { .. }))
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "rank,cell,status,order,rank_r,learning_rate,dropout_encoder,dropout_taylor,weight_decay,param_count,val_{},test_metrics,best_epoch,epochs,error\n",
            self.metric
        );
        for (pos, c) in self.cells.iter().enumerate() {
            let cfg = &c.config;
            let r = cfg.rank_config().input[0];
            let common = format!(
                "{},{},{:?},{:?},{:?},{:?},{}",
                cfg.order, r, cfg.learning_rate, cfg.dropout_encoder, cfg.dropout_taylor, cfg.weight_decay, c.param_count
            );
            match &c.outcome {
                CellOutcome::Ok {
                    val_metric,
                    test,
                    best_epoch,
                    epochs,
                } => {
                    let tests: Vec<String> = test.iter().map(|t| format!("{}={:?}", t.metric, t.value)).collect();
                    let _ = writeln!(
                        s,
                        "{},{},ok,{common},{val_metric:?},{},{best_epoch},{epochs},",
                        pos + 1,
                        c.index,
                        tests.join(";")
                    );
                }
                CellOutcome::Failed { error_class, detail } => {
                    let _ = writeln!(
                        s,
                        "{},{},failed,{common},,,,,{error_class}: {}",
                        pos + 1,
                        c.index,
                        detail.replace([',', '\n'], " ")
                    );
                }
            }
        }
        s
    }
}

/// Thread cap for grid search from `CAT_THREADS`, if set and valid.
pub fn thread_cap() -> Option<usize> {
    std::env::var("CAT_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Trains one cell; errors become a failed cell.
pub fn run_cell(index: usize, config: &TrainConfig, pre: &Preprocessor, splits: &DataSplits) -> CellResult {
    let spec = config.model_spec(pre);
    run_cell_with_spec(index, config, &spec, splits)
}

fn run_cell_with_spec(index: usize, config: &TrainConfig, spec: &ModelSpec, splits: &DataSplits) -> CellResult {
    let attempt = || -> Result<(usize, CellOutcome)> {
        config.validate()?;
        let spec = ModelSpec {
            ranks: config.rank_config(),
            encoder: config.encoder_config(),
            bypass_encoders: config.bypass_encoders,
            taylor_dropout: config.dropout_taylor,
            ..spec.clone()
        };
        let model = config.init_model(&spec)?;
        let count = model.param_count();
        let out = train(model, &splits.train, &splits.val, config)?;
        Ok((
            count,
            CellOutcome::Ok {
                val_metric: out.history.best_val_metric,
                test: evaluate(&out.model, &splits.test)?,
                best_epoch: out.history.best_epoch,
                epochs: out.history.epochs.len(),
            },
        ))
    };
    match attempt() {
        Ok((param_count, outcome)) => CellResult {
            index,
            config: config.clone(),
            param_count,
            outcome,
        },
        Err(e) => CellResult {
            index,
            config: config.clone(),
            param_count: 0,
            outcome: CellOutcome::Failed {
                error_class: e.class().to_string(),
                detail: e.to_string(),
            },
        },
    }
}

/// Trains every grid cell (in parallel, capped by `CAT_THREADS`) and ranks
/// them by validation metric, then lower parameter count, then grid order.
pub fn grid_search(grid: &GridSpec, spec: &ModelSpec, splits: &DataSplits) -> Result<Leaderboard> {
    let cells = grid.cells();
    let run = || -> Vec<CellResult> {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, cfg)| run_cell_with_spec(i, cfg, spec, splits))
            .collect()
    };
    let results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CatError::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(rank_cells(spec.task, results))
}

/// Orders cell results for a leaderboard.
pub fn rank_cells(task: Task, results: Vec<CellResult>) -> Leaderboard {
    let (mut ok, failed): (Vec<_>, Vec<_>) = results
        .into_iter()
        .partition(|c| matches!(c.outcome, CellOutcome::Ok { .. }));
    let val = |c: &CellResult| match c.outcome {
        CellOutcome::Ok { val_metric, .. } => val_metric,
        CellOutcome::Failed { .. } => unreachable!(),
    };
    ok.sort_by(|a, b| {
        let (va, vb) = (val(a), val(b));
        let by_metric = match task {
            Task::Regression => va.total_cmp(&vb),
            Task::Classification => vb.total_cmp(&va),
        };
        by_metric
            .then(a.param_count.cmp(&b.param_count))
            .then(a.index.cmp(&b.index))
    });
    let mut failed = failed;
    failed.sort_by_key(|c| c.index);
    ok.extend(failed);
    Leaderboard {
        metric: selection_metric(task).to_string(),
        cells: ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn linear_splits(seed: u64) -> (ModelSpec, DataSplits) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let make = |rng: &mut ChaCha8Rng, n: usize| {
            let mut x = Matrix::zeros(n, 2);
            let mut y = Vec::with_capacity(n);
            for r in 0..n {
                let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                x.set(r, 0, a);
                x.set(r, 1, b);
                y.push(0.5 + 1.5 * a - 0.8 * b);
            }
            Dataset::new(x, Targets::Regression(y)).unwrap()
        };
        let splits = DataSplits {
            train: make(&mut rng, 400),
            val: make(&mut rng, 50),
            test: make(&mut rng, 50),
        };
        let spec = ModelSpec {
            task: Task::Regression,
            input_width: 2,
            groups: Vec::new(),
            feature_names: vec!["a".into(), "b".into()],
            output_dim: 1,
            ranks: RankConfig::uniform(1, 2),
            encoder: EncoderConfig::default(),
            bypass_encoders: true,
            taylor_dropout: 0.0,
        };
        (spec, splits)
    }

    fn linear_config() -> TrainConfig {
        TrainConfig {
            order: 1,
            rank: Some(2),
            bypass_encoders: true,
            batch_size: 32,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn recovers_linear_target() {
        let (spec, splits) = linear_splits(1);
        let cfg = linear_config();
        let out = train(cfg.init_model(&spec).unwrap(), &splits.train, &splits.val, &cfg).unwrap();
        assert!(out.history.best_val_metric < 0.05, "{:?}", out.history.best_val_metric);
    }

    #[test]
    fn same_seed_same_history() {
        let (spec, splits) = linear_splits(2);
        let cfg = TrainConfig {
            max_epochs: 5,
            ..linear_config()
        };
        let a = train(cfg.init_model(&spec).unwrap(), &splits.train, &splits.val, &cfg).unwrap();
        let b = train(cfg.init_model(&spec).unwrap(), &splits.train, &splits.val, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn patience_zero_stops_one_epoch_after_last_improvement() {
        let (spec, splits) = linear_splits(3);
        // a huge learning rate makes the validation metric bounce
        let cfg = TrainConfig {
            patience: 0,
            learning_rate: 0.09,
            ..linear_config()
        };
        let out = train(cfg.init_model(&spec).unwrap(), &splits.train, &splits.val, &cfg).unwrap();
        let h = &out.history;
        let last = h.epochs.len();
        if last < cfg.max_epochs {
            assert_eq!(last, h.best_epoch + 1);
            assert!(h.epochs[last - 1].val_metric >= h.best_val_metric);
        }
        for e in &h.epochs {
            assert!(e.val_metric >= h.best_val_metric);
        }
    }

    #[test]
    fn best_snapshot_is_returned() {
        let (spec, splits) = linear_splits(4);
        let cfg = TrainConfig {
            max_epochs: 15,
            ..linear_config()
        };
        let out = train(cfg.init_model(&spec).unwrap(), &splits.train, &splits.val, &cfg).unwrap();
        assert_eq!(validation_metric(&out.model, &splits.val).unwrap(), out.history.best_val_metric);
        assert!(out.history.epochs.iter().all(|e| e.val_metric >= out.history.best_val_metric));
    }

    #[test]
    fn divergence_reports_epoch_and_batch() {
        let (spec, mut splits) = linear_splits(5);
        if let Targets::Regression(y) = &mut splits.train.targets {
            y[3] = 1e200;
        }
        let cfg = linear_config();
        let err = train(cfg.init_model(&spec).unwrap(), &splits.train, &splits.val, &cfg).err().unwrap();
        assert!(matches!(err, CatError::Divergence { epoch: 1, .. }), "{err}");
        assert_eq!(err.class(), "DIVERGED");
    }

    #[test]
    fn grid_with_failing_cell_reports_it() {
        let (spec, splits) = linear_splits(6);
        let grid = GridSpec {
            base: TrainConfig {
                max_epochs: 20,
                ..linear_config()
            },
            learning_rate: vec![0.02, -1.0],
            ..GridSpec::default()
        };
        let board = grid_search(&grid, &spec, &splits).unwrap();
        assert_eq!(board.cells.len(), 2);
        assert_eq!(board.best().unwrap().config.learning_rate, 0.02);
        let failed: Vec<_> = board.failed().collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].index, 1);
        assert!(board.to_csv().contains("failed"));
    }

    #[test]
    fn one_cell_grid_matches_direct_training() {
        let (spec, splits) = linear_splits(7);
        let cfg = TrainConfig {
            max_epochs: 10,
            ..linear_config()
        };
        let grid = GridSpec {
            base: cfg.clone(),
            ..GridSpec::default()
        };
        let board = grid_search(&grid, &spec, &splits).unwrap();
        let direct = train(cfg.init_model(&spec).unwrap(), &splits.train, &splits.val, &cfg).unwrap();
        match &board.best().unwrap().outcome {
            CellOutcome::Ok { val_metric, .. } => assert_eq!(*val_metric, direct.history.best_val_metric),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ties_prefer_fewer_parameters_then_grid_order() {
        let cell = |index, param_count, v| CellResult {
            index,
            config: TrainConfig::default(),
            param_count,
            outcome: CellOutcome::Ok {
                val_metric: v,
                test: Vec::new(),
                best_epoch: 1,
                epochs: 1,
            },
        };
        let board = rank_cells(
            Task::Classification,
            vec![cell(0, 100, 0.7), cell(1, 50, 0.7), cell(2, 50, 0.7), cell(3, 10, 0.6)],
        );
        let order: Vec<usize> = board.cells.iter().map(|c| c.index).collect();
        assert_eq!(order, [1, 2, 0, 3]);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_fields() {
        let cfg = TrainConfig {
            rank: Some(4),
            ..TrainConfig::default()
        };
        assert_eq!(TrainConfig::parse(&cfg.to_json()).unwrap(), cfg);
        assert!(TrainConfig::parse(r#"{"lr": 0.1}"#).is_err());
        assert!(TrainConfig::parse(r#"{"dropout_taylor": 1.0}"#).is_err());
        assert_eq!(TrainConfig::parse("{}").unwrap(), TrainConfig::default());
    }

    #[test]
    fn grid_cells_enumerate_last_axis_fastest() {
        let grid = GridSpec {
            order: vec![1, 2],
            learning_rate: vec![0.1, 0.01],
            ..GridSpec::default()
        };
        let cells = grid.cells();
        let got: Vec<(usize, f64)> = cells.iter().map(|c| (c.order, c.learning_rate)).collect();
        assert_eq!(got, [(1, 0.1), (1, 0.01), (2, 0.1), (2, 0.01)]);
        assert!(cells.iter().all(|c| c.rank.is_none()));
    }
}
