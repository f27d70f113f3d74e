#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn compas_csv() -> PathBuf {
    data_dir().join("compas.csv")
}

pub fn compas_spec() -> PathBuf {
    data_dir().join("compas_spec.json")
}

pub fn cat_model(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cat-model"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// First line of stderr starting with `ERROR`, split into class and detail.
pub fn error_line(out: &Output) -> (String, String) {
    let text = stderr(out);
    let line = text.lines().next().unwrap_or_default().to_string();
    let rest = line.strip_prefix("ERROR ").unwrap_or_else(|| panic!("no error line in {text:?}"));
    let (class, detail) = rest.split_once(' ').unwrap_or((rest, ""));
    (class.to_string(), detail.to_string())
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Regression spec with one single-feature concept per name.
pub fn one_feature_spec(names: &[&str]) -> String {
    let groups: Vec<String> = names
        .iter()
        .map(|n| format!(r#"{{"name": "{n}", "features": ["{n}"]}}"#))
        .collect();
    format!(
        r#"{{"task": "regression", "target": "y", "concepts": [{}]}}"#,
        groups.join(", ")
    )
}

/// CSV of uniform `[-1, 1]` features named `names` and target `f(x) + noise`.
pub fn synthetic_csv(names: &[&str], n: usize, noise: f64, seed: u64, f: impl Fn(&[f64]) -> f64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
    let mut s = format!("{},y\n", names.join(","));
    for _ in 0..n {
        let x: Vec<f64> = names.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
        let eps = if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        let y = f(&x) + eps;
        for v in &x {
            let _ = write!(s, "{v},");
        }
        let _ = writeln!(s, "{y}");
    }
    s
}

/// Writes `data.csv` and `spec.json` into `dir`.
pub fn write_dataset(dir: &Path, csv: &str, spec: &str) -> (PathBuf, PathBuf) {
    let data = dir.join("data.csv");
    let spec_path = dir.join("spec.json");
    std::fs::write(&data, csv).unwrap();
    std::fs::write(&spec_path, spec).unwrap();
    (data, spec_path)
}

/// `y = 0.5 + x1 - 0.8 x2 + 0.6 x1² + 0.9 x1 x2 - 0.7 x2 x3`
pub fn quadratic(x: &[f64]) -> f64 {
    0.5 + x[0] - 0.8 * x[1] + 0.6 * x[0] * x[0] + 0.9 * x[0] * x[1] - 0.7 * x[1] * x[2]
}
