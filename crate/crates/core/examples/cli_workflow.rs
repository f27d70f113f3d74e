// The file-based train, evaluate and explain workflow that the
// `cat-model` binary wraps, run into a temporary directory.
//
// ```text
// cargo run --release --example cli_workflow
// ```

use std::path::Path;

use cat_core::cli::{cmd_evaluate, cmd_explain, cmd_train, Overrides, ARCHIVE_FILE};

pub fn run_example() -> cat_core::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let (data, spec) = (root.join("compas.csv"), root.join("compas_spec.json"));
    let dir = tempfile::tempdir().expect("temporary directory");
    let out = dir.path().join("run");

    let overrides = Overrides {
        seed: Some(1),
        patience: Some(5),
        ..Overrides::default()
    };
    let trained = cmd_train(&data, &spec, None, &overrides, &out)?;
    println!("trained {} parameters", trained.param_count);
    for m in &trained.test {
        println!("  test {} {:.4}", m.metric, m.value);
    }

    let archive = out.join(ARCHIVE_FILE);
    let scored = cmd_evaluate(&archive, &data, None)?;
    for m in &scored.metrics {
        println!("  all rows {} {:.4} (n={})", m.metric, m.value, m.count);
    }

    let explained = cmd_explain(&archive, &data, &out.join("explain"))?;
    print!("{}", explained.polynomial);
    for f in &explained.files {
        println!("  wrote {}", f.file_name().unwrap().to_string_lossy());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cat_core::Result<()> {
    run_example()
}
