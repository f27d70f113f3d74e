// Fit a known degree-2 polynomial of three concepts with encoders bypassed
// and compare the recovered monomial coefficients to the generator.
//
// ```text
// cargo run --release --example synthetic_recovery
// ```

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cat_core::data::{split, DataSplits, Dataset, Targets, Task, DEFAULT_RATIOS};
use cat_core::interpret::{model_expansion, render_polynomial};
use cat_core::train::{evaluate, train, TrainConfig};
use cat_core::{Matrix, ModelSpec};

/// Generator coefficients keyed by exponent vector over `(z1, z2, z3)`.
pub fn generator() -> BTreeMap<Vec<u32>, f64> {
    [
        (vec![0, 0, 0], 0.5),
        (vec![1, 0, 0], 1.0),
        (vec![0, 1, 0], -0.8),
        (vec![0, 0, 1], 0.6),
        (vec![2, 0, 0], 0.4),
        (vec![0, 2, 0], -0.3),
        (vec![0, 0, 2], 0.25),
        (vec![1, 1, 0], 0.7),
        (vec![1, 0, 1], -0.5),
        (vec![0, 1, 1], 0.35),
    ]
    .into()
}

fn eval_generator(z: &[f64]) -> f64 {
    generator()
        .iter()
        .map(|(e, c)| c * e.iter().zip(z).map(|(&p, v)| v.powi(p as i32)).product::<f64>())
        .sum()
}

/// `n` rows of uniform concepts in `[-1, 1]` with `N(0, noise²)` target noise.
pub fn synthetic_dataset(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
        y.push(eval_generator(&z) + normal.sample(&mut rng));
        rows.push(z);
    }
    Dataset::new(Matrix::from_rows(&rows).unwrap(), Targets::Regression(y)).unwrap()
}

/// Bypass-mode architecture: each raw column is its own concept.
pub fn bypass_spec(config: &TrainConfig, names: &[&str]) -> ModelSpec {
    ModelSpec {
        task: Task::Regression,
        input_width: names.len(),
        groups: names.iter().enumerate().map(|(i, n)| (n.to_string(), vec![i])).collect(),
        feature_names: names.iter().map(|n| n.to_string()).collect(),
        output_dim: 1,
        ranks: config.rank_config(),
        encoder: config.encoder_config(),
        bypass_encoders: true,
        taylor_dropout: config.dropout_taylor,
    }
}

pub fn run_example() -> cat_core::Result<()> {
    let data = synthetic_dataset(5000, 0.01, 7);
    let splits = DataSplits::from_indices(&data, &split(data.len(), DEFAULT_RATIOS, 0)?);
    let config = TrainConfig {
        order: 2,
        rank: Some(4),
        bypass_encoders: true,
        ..TrainConfig::default()
    };
    let model = config.init_model(&bypass_spec(&config, &["z1", "z2", "z3"]))?;
    let outcome = train(model, &splits.train, &splits.val, &config)?;
    let rmse = evaluate(&outcome.model, &splits.test)?[0].value;
    println!("test rmse {rmse:.4} after {} epochs", outcome.history.epochs.len());

    let expansion = model_expansion(&outcome.model)?;
    println!("{}", render_polynomial(&expansion, 3));
    let mut worst: f64 = 0.0;
    for (exponents, truth) in generator() {
        let got = expansion.get(&exponents).map(|m| m.coefficients[0]).unwrap_or(0.0);
        let rel = (got - truth).abs() / truth.abs();
        worst = worst.max(rel);
        println!("{exponents:?}: generator {truth:+.3}, recovered {got:+.4} ({:.2}%)", rel * 100.0);
    }
    println!("worst relative coefficient error {:.2}%", worst * 100.0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> cat_core::Result<()> {
    run_example()
}
