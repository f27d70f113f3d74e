mod common;

use std::path::Path;
use std::process::Command;

use cat_core::cli::{cmd_sweep, cmd_train, Overrides};
use cat_core::train::{CellOutcome, Leaderboard};
use common::*;

fn val_metric(board: &Leaderboard, order: usize, rank: usize) -> f64 {
    let cell = board
        .cells
        .iter()
        .find(|c| c.config.order == order && c.config.rank == Some(rank))
        .unwrap();
    match &cell.outcome {
        CellOutcome::Ok { val_metric, .. } => *val_metric,
        CellOutcome::Failed { error_class, detail } => panic!("cell failed: {error_class} {detail}"),
    }
}

fn write_grid(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("grid.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn quadratic_data_prefers_order_two_over_order_one() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["a", "b", "c"];
    let (data, spec) = write_dataset(dir.path(), &synthetic_csv(&names, 800, 0.01, 4, quadratic), &one_feature_spec(&names));
    let grid = write_grid(
        dir.path(),
        r#"{"base": {"bypass_encoders": true, "max_epochs": 30, "patience": 5}, "order": [1, 2, 3], "rank": [1, 8, 32]}"#,
    );
    let board = cmd_sweep(&data, &spec, &grid, &Overrides::default(), &dir.path().join("out")).unwrap();
    assert_eq!(board.cells.len(), 9);
    assert_eq!(board.failed().count(), 0);
    let worst_order2 = [1, 8, 32].map(|r| val_metric(&board, 2, r)).into_iter().fold(0.0, f64::max);
    let best_order1 = [1, 8, 32].map(|r| val_metric(&board, 1, r)).into_iter().fold(f64::INFINITY, f64::min);
    assert!(worst_order2 < best_order1, "order 2 worst {worst_order2} vs order 1 best {best_order1}");

    // sorted by validation RMSE
    let metrics: Vec<f64> = board.cells.iter().map(|c| match c.outcome {
        CellOutcome::Ok { val_metric, .. } => val_metric,
        _ => unreachable!(),
    }).collect();
    assert!(metrics.windows(2).all(|w| w[0] <= w[1]), "{metrics:?}");
    let csv = std::fs::read_to_string(dir.path().join("out/leaderboard.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn rank_eight_beats_rank_one_on_full_rank_interactions() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"];
    let weights = [1.0, -0.9, 0.8, -0.7, 0.6, -0.5, 0.4, -0.3];
    let f = |x: &[f64]| x.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>() + 0.5 * x[0] * x[7] - 0.4 * x[2] * x[5];
    let (data, spec) = write_dataset(dir.path(), &synthetic_csv(&names, 2000, 0.01, 5, f), &one_feature_spec(&names));
    let grid = write_grid(
        dir.path(),
        r#"{"base": {"bypass_encoders": true, "order": 2, "max_epochs": 60}, "rank": [1, 8]}"#,
    );
    let board = cmd_sweep(&data, &spec, &grid, &Overrides::default(), &dir.path().join("out")).unwrap();
    let (r1, r8) = (val_metric(&board, 2, 1), val_metric(&board, 2, 8));
    assert!(r8 < r1, "rank 8 rmse {r8} vs rank 1 rmse {r1}");
    assert_eq!(board.best().unwrap().config.rank, Some(8));
}

#[test]
fn one_cell_sweep_matches_train() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path(), r#"{"base": {"patience": 2, "seed": 4}}"#);
    let board = cmd_sweep(&compas_csv(), &compas_spec(), &grid, &Overrides::default(), &dir.path().join("sweep")).unwrap();
    let overrides = Overrides {
        patience: Some(2),
        seed: Some(4),
        ..Overrides::default()
    };
    let trained = cmd_train(&compas_csv(), &compas_spec(), None, &overrides, &dir.path().join("train")).unwrap();
    let cell = &board.cells[0];
    assert_eq!(board.cells.len(), 1);
    assert_eq!(cell.param_count, trained.param_count);
    match &cell.outcome {
        CellOutcome::Ok {
            val_metric,
            test,
            best_epoch,
            ..
        } => {
            assert_eq!(*val_metric, trained.archive.history.best_val_metric);
            assert_eq!(*best_epoch, trained.archive.history.best_epoch);
            assert_eq!(test, &trained.test);
        }
        CellOutcome::Failed { detail, .. } => panic!("{detail}"),
    }
}

#[test]
fn leaderboard_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["a", "b", "c"];
    let (data, spec) = write_dataset(dir.path(), &synthetic_csv(&names, 600, 0.05, 6, quadratic), &one_feature_spec(&names));
    let grid = write_grid(
        dir.path(),
        r#"{"base": {"bypass_encoders": true, "max_epochs": 15}, "order": [1, 2], "learning_rate": [0.003, 0.03]}"#,
    );
    let run = |threads: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = Command::new(env!("CARGO_BIN_EXE_cat-model"))
            .args(["sweep", p(&data), p(&spec), p(&grid), "--out", p(&out)])
            .env("CAT_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("leaderboard.json")).unwrap()
    };
    assert_eq!(run("1", "serial"), run("4", "parallel"));
}
