//! Explanations of a fitted model: polynomial text, standardized monomial
//! contributions and per-concept shape functions with data densities.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Targets, Task};
use crate::error::{CatError, Result};
use crate::model::CatModel;
use crate::polynomial::{monomial_value, Monomial, PolynomialExpansion};
use crate::tensor::Matrix;

pub const DENSITY_BINS: usize = 25;
pub const SHAPE_GRID_POINTS: usize = 200;

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Monomial expansion of the model's network, labelled with concept names.
///
/// Requires the expansion point to be zero.
pub fn model_expansion(model: &CatModel) -> Result<PolynomialExpansion> {
    if model.net.expansion_point.iter().any(|&v| v != 0.0) {
        return Err(CatError::ExpansionUnsupported(
            "monomial expansion needs the expansion point at zero".into(),
        ));
    }
    model.net.expand_monomials()?.with_names(model.concept_names())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    /// Label such as `z1*z2`.
    pub monomial: String,
    /// Label using concept names.
    pub concepts: String,
    pub exponents: Vec<u32>,
    pub degree: u32,
    /// Raw coefficient per output.
    pub coefficients: Vec<f64>,
    /// Standard deviation of the monomial's value over the reference data.
    pub monomial_std: f64,
    /// Standardized coefficient per output.
    pub standardized: Vec<f64>,
    /// Largest absolute standardized coefficient across outputs.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionReport {
    pub format_version: u32,
    pub task: Task,
    /// `target_std` for regression; `centered_logit_std` for classification,
    /// where class logits and coefficients are centered across classes.
    pub denominator: String,
    /// Denominator per output.
    pub denominator_values: Vec<f64>,
    pub output_labels: Vec<String>,
    /// Every non-constant monomial, in expansion order.
    pub entries: Vec<Contribution>,
    /// Indices into `entries` with nonzero score, largest first.
    pub ranking: Vec<usize>,
}

impl ContributionReport {
    pub fn ranked(&self) -> impl Iterator<Item = &Contribution> {
        self.ranking.iter().map(|&i| &self.entries[i])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,monomial,concepts,degree,monomial_std");
        for l in &self.output_labels {
            let _ = write!(s, ",coef[{l}],standardized[{l}]");
        }
        s.push_str(",score\n");
        let mut rank_of = vec![None; self.entries.len()];
        for (r, &i) in self.ranking.iter().enumerate() {
            rank_of[i] = Some(r + 1);
        }
        let order = self.ranking.iter().copied().chain((0..self.entries.len()).filter(|i| rank_of[*i].is_none()));
        for i in order {
            let e = &self.entries[i];
            let rank = rank_of[i].map(|r| r.to_string()).unwrap_or_default();
            let _ = write!(s, "{rank},{},{},{},{:?}", e.monomial, e.concepts, e.degree, e.monomial_std);
            for (c, z) in e.coefficients.iter().zip(&e.standardized) {
                let _ = write!(s, ",{c:?},{z:?}");
            }
            let _ = writeln!(s, ",{:?}", e.score);
        }
        s
    }
}

fn monomial_stds(terms: &[&Monomial], z: &Matrix) -> Vec<f64> {
    terms
        .iter()
        .map(|m| {
            let values: Vec<f64> = (0..z.rows()).map(|r| monomial_value(&m.exponents, z.row(r))).collect();
            population_std(&values)
        })
        .collect()
}

fn build_report(
    expansion: &PolynomialExpansion,
    task: Task,
    denominator: &str,
    denominators: Vec<f64>,
    coefficients: impl Fn(&Monomial) -> Vec<f64>,
    z: &Matrix,
    output_labels: Vec<String>,
) -> ContributionReport {
    let terms: Vec<&Monomial> = expansion.terms().iter().filter(|m| !m.is_constant()).collect();
    let stds = monomial_stds(&terms, z);
    let entries: Vec<Contribution> = terms
        .iter()
        .zip(stds)
        .map(|(m, sd)| {
            let coefficients = coefficients(m);
            let standardized: Vec<f64> = coefficients.iter().zip(&denominators).map(|(c, d)| c * sd / d).collect();
            let score = standardized.iter().map(|v| v.abs()).fold(0.0, f64::max);
            Contribution {
                monomial: m.label(),
                concepts: m.named_label(expansion.concept_names()),
                exponents: m.exponents.clone(),
                degree: m.degree(),
                coefficients,
                monomial_std: sd,
                standardized,
                score,
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].score != 0.0).collect();
    ranking.sort_by(|&a, &b| entries[b].score.total_cmp(&entries[a].score));
    ContributionReport {
        format_version: 1,
        task,
        denominator: denominator.to_string(),
        denominator_values: denominators,
        output_labels,
        entries,
        ranking,
    }
}

fn check_reference(expansion: &PolynomialExpansion, z: &Matrix) -> Result<()> {
    if z.rows() == 0 {
        return Err(CatError::Data {
            row: None,
            detail: "reference data is empty".into(),
        });
    }
    if z.cols() != expansion.dim() {
        return Err(CatError::Shape(format!(
            "concept matrix has {} columns, expansion has {} concepts",
            z.cols(),
            expansion.dim()
        )));
    }
    Ok(())
}

/// Coefficient × std(monomial) / std(target) for every monomial of a
/// single-output expansion, over concept rows `z`.
pub fn regression_contributions(expansion: &PolynomialExpansion, z: &Matrix, targets: &[f64]) -> Result<ContributionReport> {
    check_reference(expansion, z)?;
    if expansion.outputs() != 1 {
        return Err(CatError::Shape("regression contributions need a single output".into()));
    }
    if targets.len() != z.rows() {
        return Err(CatError::Shape(format!("{} targets for {} rows", targets.len(), z.rows())));
    }
    let sd = population_std(targets);
    if sd == 0.0 || !sd.is_finite() {
        return Err(CatError::Degenerate("target has zero standard deviation".into()));
    }
    Ok(build_report(
        expansion,
        Task::Regression,
        "target_std",
        vec![sd],
        |m| m.coefficients.clone(),
        z,
        vec!["y".into()],
    ))
}

/// Classification variant: class coefficients are centered across classes
/// (softmax is invariant to a shared shift) and divided by the std of the
/// matching centered logit over `z`.
pub fn classification_contributions(
    expansion: &PolynomialExpansion,
    z: &Matrix,
    class_labels: &[String],
) -> Result<ContributionReport> {
    check_reference(expansion, z)?;
    let o = expansion.outputs();
    if class_labels.len() != o {
        return Err(CatError::Shape(format!("{} class labels for {o} outputs", class_labels.len())));
    }
    let center = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - mean).collect::<Vec<f64>>()
    };
    let logits: Vec<Vec<f64>> = (0..z.rows()).map(|r| center(&expansion.evaluate(z.row(r)))).collect();
    let mut denominators = Vec::with_capacity(o);
    for c in 0..o {
        let col: Vec<f64> = logits.iter().map(|l| l[c]).collect();
        let sd = population_std(&col);
        if sd == 0.0 || !sd.is_finite() {
            return Err(CatError::Degenerate(format!(
                "centered logit of class {:?} is constant over the reference data",
                class_labels[c]
            )));
        }
        denominators.push(sd);
    }
    Ok(build_report(
        expansion,
        Task::Classification,
        "centered_logit_std",
        denominators,
        |m| center(&m.coefficients),
        z,
        class_labels.to_vec(),
    ))
}

/// Standardized contributions of `model` over a reference dataset.
pub fn standardized_contributions(model: &CatModel, data: &Dataset, class_labels: &[String]) -> Result<ContributionReport> {
    let expansion = model_expansion(model)?;
    let z = model.concepts(&data.features)?;
    match &data.targets {
        Targets::Regression(y) => regression_contributions(&expansion, &z, y),
        Targets::Classification { .. } => classification_contributions(&expansion, &z, class_labels),
    }
}

/// `s_m(v)` per grid value and output: the sum of the pure powers of
/// concept `m`, other concepts held at zero.
pub fn shape_function(expansion: &PolynomialExpansion, concept: usize, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if concept >= expansion.dim() {
        return Err(CatError::Shape(format!(
            "concept index {concept} out of range for {} concepts",
            expansion.dim()
        )));
    }
    let pure: Vec<(i32, &[f64])> = expansion
        .terms()
        .iter()
        .filter(|m| {
            m.exponents[concept] > 0 && m.exponents.iter().enumerate().all(|(j, &e)| j == concept || e == 0)
        })
        .map(|m| (m.exponents[concept] as i32, m.coefficients.as_slice()))
        .collect();
    Ok(grid
        .iter()
        .map(|&v| {
            let mut out = vec![0.0; expansion.outputs()];
            for (p, coef) in &pure {
                let x = v.powi(*p);
                for (o, c) in out.iter_mut().zip(coef.iter()) {
                    *o += c * x;
                }
            }
            out
        })
        .collect())
}

/// Equal-width histogram normalized to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` monotone edges; a constant sample has edges `[v, v]`.
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
}

pub fn density_bins(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(CatError::Data {
            row: None,
            detail: "density of an empty sample".into(),
        });
    }
    if bins == 0 {
        return Err(CatError::Config("histogram needs at least one bin".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CatError::NonFinite("concept values".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(Histogram {
            edges: vec![min, max],
            mass: vec![1.0],
        });
    }
    let width = (max - min) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| min + width * i as f64).collect();
    edges.push(max);
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = (((v - min) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = values.len() as f64;
    Ok(Histogram {
        edges,
        mass: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

/// `points` evenly spaced values over `[min, max]` of `values`.
pub fn default_grid(values: &[f64], points: usize) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || points == 0 {
        return Vec::new();
    }
    if points == 1 || max == min {
        return vec![min];
    }
    (0..points)
        .map(|i| if i + 1 == points { max } else { min + (max - min) * i as f64 / (points - 1) as f64 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    pub concept: String,
    pub index: usize,
    pub grid: Vec<f64>,
    /// `values[i][o]`: contribution to output `o` at `grid[i]`.
    pub values: Vec<Vec<f64>>,
    pub density: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunctionTable {
    pub format_version: u32,
    /// What the y values mean.
    pub y_scale: String,
    pub output_labels: Vec<String>,
    pub concepts: Vec<ShapeFunction>,
}

impl ShapeFunctionTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("concept,v");
        for l in &self.output_labels {
            let _ = write!(s, ",s[{l}]");
        }
        s.push('\n');
        for c in &self.concepts {
            for (v, ys) in c.grid.iter().zip(&c.values) {
                let _ = write!(s, "{},{v:?}", c.concept);
                for y in ys {
                    let _ = write!(s, ",{y:?}");
                }
                s.push('\n');
            }
        }
        s
    }
}

/// Shape functions of every concept over `z` (rows are samples), with grids
/// spanning the observed range and 25-bin densities.
pub fn shape_function_table(expansion: &PolynomialExpansion, z: &Matrix, output_labels: Vec<String>) -> Result<ShapeFunctionTable> {
    check_reference(expansion, z)?;
    let mut concepts = Vec::with_capacity(expansion.dim());
    for m in 0..expansion.dim() {
        let observed: Vec<f64> = (0..z.rows()).map(|r| z.get(r, m)).collect();
        let grid = default_grid(&observed, SHAPE_GRID_POINTS);
        concepts.push(ShapeFunction {
            concept: expansion.concept_names()[m].clone(),
            index: m,
            values: shape_function(expansion, m, &grid)?,
            grid,
            density: density_bins(&observed, DENSITY_BINS)?,
        });
    }
    Ok(ShapeFunctionTable {
        format_version: 1,
        y_scale: "raw model output (not standardized)".into(),
        output_labels,
        concepts,
    })
}

fn format_coefficient(c: f64, precision: usize) -> String {
    let s = format!("{:.precision$}", c.abs());
    if s.contains('.') {
        let t = s.trim_end_matches('0');
        if t.ends_with('.') {
            format!("{t}0")
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

fn render_output(expansion: &PolynomialExpansion, output: usize, precision: usize) -> String {
    let mut s = String::new();
    let nonconst = expansion.terms().iter().filter(|m| !m.is_constant());
    let constant = expansion.terms().iter().filter(|m| m.is_constant());
    for m in nonconst.chain(constant) {
        let c = m.coefficients[output];
        let text = format_coefficient(c, precision);
        if text.parse::<f64>().map(|v| v == 0.0).unwrap_or(false) {
            continue;
        }
        let negative = c < 0.0;
        if s.is_empty() {
            if negative {
                s.push('-');
            }
        } else {
            s.push_str(if negative { " - " } else { " + " });
        }
        s.push_str(&text);
        if !m.is_constant() {
            s.push('*');
            s.push_str(&m.label());
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// Polynomial text with coefficients rounded to `precision` decimals.
/// Multi-output expansions get one block per output.
pub fn render_polynomial(expansion: &PolynomialExpansion, precision: usize) -> String {
    let labels: Vec<String> = (0..expansion.outputs()).map(|o| o.to_string()).collect();
    render_polynomial_with_labels(expansion, precision, &labels)
}

pub fn render_polynomial_with_labels(expansion: &PolynomialExpansion, precision: usize, labels: &[String]) -> String {
    if expansion.outputs() == 1 {
        return render_output(expansion, 0, precision);
    }
    let mut s = String::new();
    for o in 0..expansion.outputs() {
        let label = labels.get(o).cloned().unwrap_or_else(|| o.to_string());
        let _ = writeln!(s, "class {label}:");
        let _ = writeln!(s, "  {}", render_output(expansion, o, precision));
    }
    s.pop();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn poly(dim: usize, order: usize, terms: &[(&[u32], f64)]) -> PolynomialExpansion {
        let map: BTreeMap<Vec<u32>, Vec<f64>> = terms.iter().map(|(a, c)| (a.to_vec(), vec![*c])).collect();
        PolynomialExpansion::from_coefficients(dim, order, 1, map).unwrap()
    }

    #[test]
    fn golden_polynomial_text() {
        let p = poly(2, 2, &[(&[2, 0], 0.5), (&[1, 1], 1.0), (&[0, 0], -0.03)]);
        assert_eq!(render_polynomial(&p, 2), "0.5*z1^2 + 1.0*z1*z2 - 0.03");
        let c = poly(2, 2, &[(&[0, 0], -0.03)]);
        assert_eq!(render_polynomial(&c, 2), "-0.03");
        let tiny = poly(1, 1, &[(&[1], 0.004), (&[0], 2.0)]);
        assert_eq!(render_polynomial(&tiny, 2), "2.0");
        assert_eq!(render_polynomial(&poly(1, 1, &[]), 3), "0");
        let neg = poly(2, 1, &[(&[1, 0], -1.25), (&[0, 1], 0.125)]);
        assert_eq!(render_polynomial(&neg, 3), "-1.25*z1 + 0.125*z2");
    }

    #[test]
    fn multi_output_text_has_one_block_per_class() {
        let map: BTreeMap<Vec<u32>, Vec<f64>> = [(vec![1], vec![1.0, -1.0]), (vec![0], vec![0.0, 0.5])].into();
        let p = PolynomialExpansion::from_coefficients(1, 1, 2, map).unwrap();
        let text = render_polynomial_with_labels(&p, 2, &["no".into(), "yes".into()]);
        assert_eq!(text, "class no:\n  1.0*z1\nclass yes:\n  -1.0*z1 + 0.5");
    }

    #[test]
    fn quoted_coefficients_give_shape_value() {
        // 0.69 z1 + 0.02 z1^2 at v = 1
        let p = poly(2, 2, &[(&[1, 0], 0.69), (&[2, 0], 0.02), (&[1, 1], 5.0), (&[0, 1], 3.0)]);
        let s = shape_function(&p, 0, &[1.0]).unwrap();
        assert!((s[0][0] - 0.71).abs() < 1e-12);
        assert!(shape_function(&p, 2, &[1.0]).is_err());
    }

    #[test]
    fn linear_contribution_is_textbook_formula() {
        let beta = 2.5;
        let p = poly(1, 1, &[(&[1], beta)]);
        let zs = [0.0, 1.0, 2.0, 5.0];
        let z = Matrix::new(4, 1, zs.to_vec()).unwrap();
        let y: Vec<f64> = zs.iter().map(|v| beta * v + if *v > 1.0 { 0.3 } else { -0.3 }).collect();
        let r = regression_contributions(&p, &z, &y).unwrap();
        let expect = beta * population_std(&zs) / population_std(&y);
        assert!((r.entries[0].standardized[0] - expect).abs() < 1e-12);
        assert_eq!(r.entries.len(), 1);
    }

    #[test]
    fn zero_model_has_empty_ranking() {
        let p = poly(3, 2, &[(&[0, 0, 0], 1.0)]);
        let z = Matrix::new(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let r = regression_contributions(&p, &z, &[1.0, 2.0]).unwrap();
        assert_eq!(r.entries.len(), p.len() - 1);
        assert!(r.ranking.is_empty());
    }

    #[test]
    fn constant_target_is_degenerate() {
        let p = poly(1, 1, &[(&[1], 1.0)]);
        let z = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let err = regression_contributions(&p, &z, &[3.0, 3.0]).unwrap_err();
        assert_eq!(err.class(), "DEGENERATE");
    }

    #[test]
    fn densities() {
        let h = density_bins(&[2.0; 7], 25).unwrap();
        assert_eq!(h.mass, vec![1.0]);
        let grid: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let h = density_bins(&grid, 25).unwrap();
        assert!(h.mass.iter().all(|&m| (m - 0.04).abs() < 1e-15));
        assert_eq!(h.edges.len(), 26);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
        assert!(density_bins(&[], 25).is_err());
    }

    #[test]
    fn normal_sample_is_heavier_in_the_middle() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
        let h = density_bins(&v, 25).unwrap();
        let center: f64 = h.mass[9..16].iter().sum();
        let tails: f64 = h.mass[..4].iter().chain(&h.mass[21..]).sum();
        assert!(center > tails, "{center} vs {tails}");
        assert!((h.mass.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_spans_range() {
        let g = default_grid(&[3.0, -1.0, 2.0], 5);
        assert_eq!(g, [-1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(default_grid(&[1.0, 1.0], 200), [1.0]);
    }
}
