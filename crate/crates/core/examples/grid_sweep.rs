// Grid search over Taylor order and learning rate on COMPAS, ranked by
// validation accuracy.
//
// ```text
// CAT_THREADS=4 cargo run --release --example grid_sweep
// ```

use std::path::Path;

use cat_core::data::{load_csv, prepare, ConceptSpec};
use cat_core::train::{grid_search, CellOutcome, GridSpec, TrainConfig};

pub fn run_example() -> cat_core::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let spec = ConceptSpec::parse(&std::fs::read_to_string(root.join("compas_spec.json")).unwrap())?;
    let table = load_csv(root.join("compas.csv"), &spec)?;
    let grid = GridSpec {
        base: TrainConfig {
            max_epochs: 30,
            ..TrainConfig::default()
        },
        order: vec![1, 2],
        learning_rate: vec![1e-3, 1e-2],
        ..GridSpec::default()
    };
    let prep = prepare(&table, &spec, grid.base.split_seed)?;
    let board = grid_search(&grid, &grid.base.model_spec(&prep.preprocessor), &prep.splits)?;
    for cell in &board.cells {
        match &cell.outcome {
            CellOutcome::Ok { val_metric, best_epoch, .. } => println!(
                "cell {}: order {} lr {:e} params {:>5}  val {} {val_metric:.4} (epoch {best_epoch})",
                cell.index, cell.config.order, cell.config.learning_rate, cell.param_count, board.metric
            ),
            CellOutcome::Failed { error_class, detail } => println!("cell {}: {error_class} {detail}", cell.index),
        }
    }
    let best = board.best().expect("at least one cell trains");
    println!("best: order {} lr {:e}", best.config.order, best.config.learning_rate);
    Ok(())
}

#[allow(dead_code)]
fn main() -> cat_core::Result<()> {
    run_example()
}
