//! Independent reference computations: dense-tensor evaluation, central
//! finite differences and expansion evaluation, packaged as suites over
//! random networks.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};
use crate::params::Parameterized;
use crate::taylornet::{KronOrder, RankConfig, TaylorNet};
use crate::tensor::Matrix;

/// `max |a - b| / max |b|`, the infinity-norm relative error of `a` against
/// the reference `b`. An all-zero reference falls back to absolute error.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "compared arrays differ in length");
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..=scale)).collect();
    Matrix::new(rows, cols, data).expect("shape matches data")
}

/// Network with every parameter, including `β`, uniform in `[-1, 1]`.
pub fn random_taylornet<R: Rng>(rng: &mut R, input_dim: usize, output_dim: usize, order: usize, rank: usize) -> TaylorNet {
    let mut net = TaylorNet::zeros(input_dim, output_dim, &RankConfig::uniform(order, rank)).expect("valid sizes");
    for p in net.params_mut() {
        for v in p.values.iter_mut() {
            *v = rng.random_range(-1.0..=1.0);
        }
    }
    net
}

/// Worst disagreement found by a gradient check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_error: f64,
    /// Parameter array (or `input`) where `max_error` occurred.
    pub worst: String,
    pub arrays: usize,
    pub entries: usize,
}

impl GradCheckReport {
    fn new() -> Self {
        Self {
            max_error: 0.0,
            worst: String::new(),
            arrays: 0,
            entries: 0,
        }
    }

    fn record(&mut self, name: &str, analytic: &[f64], numeric: &[f64]) {
        let mut err = max_relative_error(analytic, numeric);
        if err.is_nan() {
            err = f64::INFINITY;
        }
        self.arrays += 1;
        self.entries += analytic.len();
        if self.worst.is_empty() || err > self.max_error {
            self.max_error = err;
            self.worst = name.to_string();
        }
    }
}

/// Central-difference gradient of `loss` with respect to every parameter
/// array of `model`, in `params()` order.
pub fn numeric_gradients<P, F>(model: &P, h: f64, mut loss: F) -> Result<Vec<Vec<f64>>>
where
    P: Parameterized + Clone,
    F: FnMut(&P) -> Result<f64>,
{
    let mut probe = model.clone();
    let sizes: Vec<usize> = probe.params().iter().map(|p| p.values.len()).collect();
    let mut out = Vec::with_capacity(sizes.len());
    for (a, &len) in sizes.iter().enumerate() {
        let mut grad = vec![0.0; len];
        for (i, g) in grad.iter_mut().enumerate() {
            let orig = probe.params()[a].values[i];
            probe.params_mut()[a].values[i] = orig + h;
            let plus = loss(&probe)?;
            probe.params_mut()[a].values[i] = orig - h;
            let minus = loss(&probe)?;
            probe.params_mut()[a].values[i] = orig;
            *g = (plus - minus) / (2.0 * h);
        }
        out.push(grad);
    }
    Ok(out)
}

/// Compares analytic gradient arrays against numeric ones, by name.
pub fn compare_gradients(names: &[String], analytic: &[Vec<f64>], numeric: &[Vec<f64>]) -> GradCheckReport {
    let mut report = GradCheckReport::new();
    for ((name, a), n) in names.iter().zip(analytic).zip(numeric) {
        report.record(name, a, n);
    }
    report
}

fn weighted_sum(out: &Matrix, upstream: &Matrix) -> f64 {
    out.as_slice().iter().zip(upstream.as_slice()).map(|(a, b)| a * b).sum()
}

/// Checks [`TaylorNet::backward`] for the scalar `Σ ⟨upstream, f(z)⟩`
/// against central differences with step `h`, parameters and inputs alike.
pub fn finite_difference_check(net: &TaylorNet, z: &Matrix, upstream: &Matrix, h: f64) -> Result<GradCheckReport> {
    let (grads, dz) = net.backward(z, upstream)?;
    let names: Vec<String> = net.params().iter().map(|p| p.name.clone()).collect();
    let analytic: Vec<Vec<f64>> = grads.params().iter().map(|p| p.values.to_vec()).collect();
    let numeric = numeric_gradients(net, h, |n| Ok(weighted_sum(&n.forward(z)?, upstream)))?;
    let mut report = compare_gradients(&names, &analytic, &numeric);

    let mut numeric_input = vec![0.0; z.as_slice().len()];
    let mut probe = z.clone();
    for (i, g) in numeric_input.iter_mut().enumerate() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + h;
        let plus = weighted_sum(&net.forward(&probe)?, upstream);
        probe.as_mut_slice()[i] = orig - h;
        let minus = weighted_sum(&net.forward(&probe)?, upstream);
        probe.as_mut_slice()[i] = orig;
        *g = (plus - minus) / (2.0 * h);
    }
    report.record("input", dz.as_slice(), &numeric_input);
    Ok(report)
}

/// Sizes and seed for [`run_oracle_suites`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub seed: u64,
    pub forward_instances: usize,
    pub gradient_instances: usize,
    pub expansion_instances: usize,
    pub max_input_dim: usize,
    pub max_output_dim: usize,
    pub max_order: usize,
    pub max_rank: usize,
    pub samples_per_instance: usize,
    pub forward_tolerance: f64,
    pub gradient_tolerance: f64,
    pub expansion_tolerance: f64,
    /// Evaluates the factored forward pass with the Kronecker operands in the
    /// wrong order. Negative control: the forward suite must then fail.
    #[doc(hidden)]
    pub corrupt_kronecker_order: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            forward_instances: 500,
            gradient_instances: 40,
            expansion_instances: 100,
            max_input_dim: 6,
            max_output_dim: 3,
            max_order: 3,
            max_rank: 4,
            samples_per_instance: 4,
            forward_tolerance: 1e-10,
            gradient_tolerance: 1e-4,
            expansion_tolerance: 1e-9,
            corrupt_kronecker_order: false,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_input_dim == 0 || self.max_output_dim == 0 || self.max_rank == 0 {
            return Err(CatError::Config("oracle sizes must be positive".into()));
        }
        if self.max_order == 0 || self.max_order > crate::taylornet::MAX_ORDER {
            return Err(CatError::Config(format!(
                "oracle max_order must be in 1..={}",
                crate::taylornet::MAX_ORDER
            )));
        }
        if self.samples_per_instance == 0 {
            return Err(CatError::Config("samples_per_instance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub instances: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Sizes `(d, o, N, r)` of the worst instance.
    pub worst_instance: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub format_version: u32,
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn failed_invariants(&self) -> Vec<&str> {
        self.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect()
    }

    /// `ORACLE_FAILURE` naming the violated invariants, if any.
    pub fn check(&self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(CatError::OracleFailure(format!(
                "invariant(s) violated: {}",
                self.failed_invariants().join(", ")
            )))
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("oracle check (seed {})\n", self.seed);
        for r in &self.suites {
            let [d, o, n, k] = r.worst_instance;
            let _ = writeln!(
                s,
                "{} {:<30} instances={:<4} max_rel_error={:.3e} tol={:.0e} worst=(d={d},o={o},N={n},r={k})",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.instances,
                r.max_error,
                r.tolerance
            );
        }
        let _ = writeln!(s, "{}", if self.passed() { "all oracle suites passed" } else { "oracle check FAILED" });
        s
    }
}

struct SuiteAcc {
    name: &'static str,
    instances: usize,
    max_error: f64,
    worst: [usize; 4],
}

impl SuiteAcc {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            instances: 0,
            max_error: 0.0,
            worst: [0; 4],
        }
    }

    fn add(&mut self, err: f64, sizes: [usize; 4]) {
        let err = if err.is_nan() { f64::INFINITY } else { err };
        self.instances += 1;
        if self.instances == 1 || err > self.max_error {
            self.max_error = err;
            self.worst = sizes;
        }
    }

    fn finish(self, tolerance: f64) -> SuiteResult {
        SuiteResult {
            name: self.name.to_string(),
            instances: self.instances,
            max_error: self.max_error,
            tolerance,
            passed: self.max_error <= tolerance,
            worst_instance: self.worst,
        }
    }
}

fn random_sizes<R: Rng>(rng: &mut R, cfg: &OracleConfig) -> [usize; 4] {
    [
        rng.random_range(1..=cfg.max_input_dim),
        rng.random_range(1..=cfg.max_output_dim),
        rng.random_range(1..=cfg.max_order),
        rng.random_range(1..=cfg.max_rank),
    ]
}

/// Runs the forward, gradient and expansion suites over random networks.
pub fn run_oracle_suites(cfg: &OracleConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kron = if cfg.corrupt_kronecker_order {
        KronOrder::Ascending
    } else {
        KronOrder::Descending
    };
    let s = cfg.samples_per_instance;

    let mut fwd = SuiteAcc::new("forward_vs_full_tensor");
    for _ in 0..cfg.forward_instances {
        let sizes @ [d, o, n, r] = random_sizes(&mut rng, cfg);
        let net = random_taylornet(&mut rng, d, o, n, r);
        let z = random_matrix(&mut rng, s, d, 1.0);
        let out = net.forward_with_kron_order(&z, kron)?;
        let err = (0..s)
            .map(|i| net.forward_full_tensor(z.row(i)).map(|dense| max_relative_error(out.row(i), &dense)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        fwd.add(err, sizes);
    }

    let mut grad = SuiteAcc::new("gradient_vs_finite_difference");
    for _ in 0..cfg.gradient_instances {
        let sizes @ [d, o, n, r] = random_sizes(&mut rng, cfg);
        let mut net = random_taylornet(&mut rng, d, o, n, r);
        net.expansion_point = (0..d).map(|_| rng.random_range(-0.5..=0.5)).collect();
        let z = random_matrix(&mut rng, s, d, 1.0);
        let up = random_matrix(&mut rng, s, o, 1.0);
        grad.add(finite_difference_check(&net, &z, &up, 1e-5)?.max_error, sizes);
    }

    let mut exp = SuiteAcc::new("expansion_evaluation");
    for _ in 0..cfg.expansion_instances {
        let sizes @ [d, o, n, r] = random_sizes(&mut rng, cfg);
        let net = random_taylornet(&mut rng, d, o, n, r);
        let z = random_matrix(&mut rng, s, d, 1.0);
        let out = net.forward_with_kron_order(&z, kron)?;
        let poly = net.expand_monomials()?;
        let err = (0..s)
            .map(|i| max_relative_error(&poly.evaluate(z.row(i)), out.row(i)))
            .fold(0.0, f64::max);
        exp.add(err, sizes);
    }

    Ok(OracleReport {
        format_version: 1,
        seed: cfg.seed,
        suites: vec![
            fwd.finish(cfg.forward_tolerance),
            grad.finish(cfg.gradient_tolerance),
            exp.finish(cfg.expansion_tolerance),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_definition() {
        assert_eq!(max_relative_error(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(max_relative_error(&[1.0, 2.5], &[1.0, 2.0]), 0.25);
        assert_eq!(max_relative_error(&[0.5], &[0.0]), 0.5);
    }

    #[test]
    fn small_default_run_passes() {
        let cfg = OracleConfig {
            forward_instances: 50,
            gradient_instances: 5,
            expansion_instances: 20,
            ..OracleConfig::default()
        };
        let report = run_oracle_suites(&cfg).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        assert_eq!(report.suites.len(), 3);
    }

    #[test]
    fn corrupted_kronecker_order_is_caught() {
        let cfg = OracleConfig {
            forward_instances: 50,
            gradient_instances: 1,
            expansion_instances: 20,
            corrupt_kronecker_order: true,
            ..OracleConfig::default()
        };
        let report = run_oracle_suites(&cfg).unwrap();
        assert!(!report.passed());
        assert!(report.failed_invariants().contains(&"forward_vs_full_tensor"));
        assert!(report.to_text().contains("FAIL forward_vs_full_tensor"));
    }

    #[test]
    fn report_text_is_reproducible() {
        let cfg = OracleConfig {
            forward_instances: 10,
            gradient_instances: 2,
            expansion_instances: 5,
            seed: 42,
            ..OracleConfig::default()
        };
        assert_eq!(run_oracle_suites(&cfg).unwrap().to_text(), run_oracle_suites(&cfg).unwrap().to_text());
    }

    #[test]
    fn numeric_gradients_of_a_quadratic() {
        let net = {
            let mut n = TaylorNet::zeros(1, 1, &RankConfig::uniform(1, 1)).unwrap();
            n.bias = vec![3.0];
            n
        };
        // L = β²
        let g = numeric_gradients(&net, 1e-5, |n| Ok(n.bias[0] * n.bias[0])).unwrap();
        let beta_idx = net.params().iter().position(|p| p.name == "taylor.beta").unwrap();
        assert!((g[beta_idx][0] - 6.0).abs() < 1e-8);
    }
}
