// Train on COMPAS, then print the learned polynomial over the two concepts,
// the standardized contribution ranking and a coarse view of each shape
// function.
//
// ```text
// cargo run --release --example explain_model
// ```

use std::path::Path;

use cat_core::data::{load_csv, prepare, ConceptSpec};
use cat_core::interpret::{model_expansion, render_polynomial_with_labels, shape_function_table, standardized_contributions};
use cat_core::train::{train, TrainConfig};

pub fn run_example() -> cat_core::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let spec = ConceptSpec::parse(&std::fs::read_to_string(root.join("compas_spec.json")).unwrap())?;
    let table = load_csv(root.join("compas.csv"), &spec)?;
    let config = TrainConfig::default();
    let prep = prepare(&table, &spec, config.split_seed)?;
    let model = config.init_model(&config.model_spec(&prep.preprocessor))?;
    let model = train(model, &prep.splits.train, &prep.splits.val, &config)?.model;

    let labels = prep.preprocessor.class_labels().to_vec();
    let expansion = model_expansion(&model)?;
    for (i, name) in expansion.concept_names().iter().enumerate() {
        println!("z{} = {name}", i + 1);
    }
    println!("{}", render_polynomial_with_labels(&expansion, 3, &labels));

    let reference = &prep.splits.train;
    let report = standardized_contributions(&model, reference, &labels)?;
    println!("contributions ({}):", report.denominator);
    for c in report.ranked() {
        println!("  {:<40} {:.4}", c.concepts, c.score);
    }

    let z = model.concepts(&reference.features)?;
    let shapes = shape_function_table(&expansion, &z, labels)?;
    for s in &shapes.concepts {
        let n = s.grid.len();
        let picks = [0, n / 4, n / 2, 3 * n / 4, n - 1];
        let points: Vec<String> = picks
            .iter()
            .map(|&i| format!("s({:.2})={:+.3}", s.grid[i], s.values[i].last().unwrap()))
            .collect();
        println!("shape of {}: {}", s.concept, points.join("  "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cat_core::Result<()> {
    run_example()
}
