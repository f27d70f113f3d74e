// Train the two-concept model on the COMPAS recidivism table and report
// validation and test metrics.
//
// ```text
// cargo run --release --example train_compas
// ```

use std::path::Path;

use cat_core::data::{load_csv, prepare, ConceptSpec};
use cat_core::train::{evaluate, train, TrainConfig};
use cat_core::Parameterized;

pub fn run_example() -> cat_core::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let spec = ConceptSpec::parse(&std::fs::read_to_string(root.join("compas_spec.json")).unwrap())?;
    let table = load_csv(root.join("compas.csv"), &spec)?;
    let config = TrainConfig::default();
    let prep = prepare(&table, &spec, config.split_seed)?;
    let (n_train, n_val, n_test) = prep.indices.sizes();
    println!("rows: train {n_train}, validation {n_val}, test {n_test}");

    let model = config.init_model(&config.model_spec(&prep.preprocessor))?;
    println!("parameters: {}", model.param_count());
    let start = std::time::Instant::now();
    let outcome = train(model, &prep.splits.train, &prep.splits.val, &config)?;
    let h = &outcome.history;
    println!(
        "{} epochs in {:.1?}, best epoch {} ({} {:.4})",
        h.epochs.len(),
        start.elapsed(),
        h.best_epoch,
        h.metric,
        h.best_val_metric
    );
    for m in evaluate(&outcome.model, &prep.splits.test)? {
        println!("test {} {:.4}", m.metric, m.value);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cat_core::Result<()> {
    run_example()
}
