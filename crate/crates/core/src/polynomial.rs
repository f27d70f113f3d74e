//! Explicit monomial form of a Taylor network.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};

/// One monomial `z^α` and its per-output coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coefficients: Vec<f64>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Value of `z^α` at `z`.
    pub fn value_at(&self, z: &[f64]) -> f64 {
        monomial_value(&self.exponents, z)
    }

    /// Concepts involved, as (index, power) pairs.
    pub fn factors(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i, e))
    }

    /// Label such as `z1^2*z3`, using 1-based concept indices.
    pub fn label(&self) -> String {
        if self.is_constant() {
            return "1".to_string();
        }
        self.factors()
            .map(|(i, e)| {
                if e == 1 {
                    format!("z{}", i + 1)
                } else {
                    format!("z{}^{e}", i + 1)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Label using concept names, e.g. `location*property`.
    pub fn named_label(&self, names: &[String]) -> String {
        if self.is_constant() {
            return "1".to_string();
        }
        self.factors()
            .map(|(i, e)| {
                let name = names.get(i).cloned().unwrap_or_else(|| format!("z{}", i + 1));
                if e == 1 {
                    name
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

pub fn monomial_value(exponents: &[u32], z: &[f64]) -> f64 {
    exponents
        .iter()
        .zip(z)
        .filter(|(&e, _)| e > 0)
        .map(|(&e, &v)| v.powi(e as i32))
        .product()
}

/// Every monomial of total degree at most `order` over `dim` variables.
///
/// Ordered lexicographically descending by exponent vector, so terms are
/// grouped by their leading variable and the constant comes last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialExpansion {
    dim: usize,
    order: usize,
    outputs: usize,
    concept_names: Vec<String>,
    terms: Vec<Monomial>,
}

impl PolynomialExpansion {
    /// Builds an expansion from accumulated coefficients. Monomials missing
    /// from `coefficients` get zero coefficients.
    pub fn from_coefficients(
        dim: usize,
        order: usize,
        outputs: usize,
        coefficients: BTreeMap<Vec<u32>, Vec<f64>>,
    ) -> Result<Self> {
        let mut table: BTreeMap<Vec<u32>, Vec<f64>> = all_exponents(dim, order)
            .into_iter()
            .map(|a| (a, vec![0.0; outputs]))
            .collect();
        for (alpha, coef) in coefficients {
            if coef.len() != outputs {
                return Err(CatError::Shape(format!(
                    "monomial {alpha:?} has {} coefficients, expected {outputs}",
                    coef.len()
                )));
            }
            match table.get_mut(&alpha) {
                Some(slot) => slot.copy_from_slice(&coef),
                None => {
                    return Err(CatError::Shape(format!(
                        "exponent {alpha:?} is not a monomial of degree <= {order} in {dim} variables"
                    )))
                }
            }
        }
        let terms = table
            .into_iter()
            .rev()
            .map(|(exponents, coefficients)| Monomial {
                exponents,
                coefficients,
            })
            .collect();
        Ok(Self {
            dim,
            order,
            outputs,
            concept_names: default_names(dim),
            terms,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(CatError::Shape(format!(
                "{} concept names for {} concepts",
                names.len(),
                self.dim
            )));
        }
        self.concept_names = names;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn concept_names(&self) -> &[String] {
        &self.concept_names
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, exponents: &[u32]) -> Option<&Monomial> {
        self.terms.iter().find(|m| m.exponents == exponents)
    }

    pub fn constant(&self) -> &[f64] {
        // constant is lexicographically smallest, so it sits last
        &self.terms.last().expect("expansion always has a constant").coefficients
    }

    /// Terms with at least one nonzero coefficient.
    pub fn nonzero_terms(&self) -> impl Iterator<Item = &Monomial> {
        self.terms
            .iter()
            .filter(|m| m.coefficients.iter().any(|&c| c != 0.0))
    }

    pub fn evaluate(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs];
        for m in &self.terms {
            let v = m.value_at(z);
            for (o, c) in out.iter_mut().zip(&m.coefficients) {
                *o += c * v;
            }
        }
        out
    }

    /// Returns a copy with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.terms {
            for c in &mut m.coefficients {
                *c *= factor;
            }
        }
        out
    }
}

fn default_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("z{i}")).collect()
}

/// All exponent vectors of length `dim` with total degree `<= order`.
pub fn all_exponents(dim: usize, order: usize) -> Vec<Vec<u32>> {
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[pos] = e;
            rec(pos + 1, left - e, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    rec(0, order as u32, &mut vec![0; dim], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn exponent_count_is_binomial() {
        for dim in 1..=6 {
            for order in 0..=3 {
                assert_eq!(all_exponents(dim, order).len(), binomial(dim + order, order));
            }
        }
        assert_eq!(all_exponents(6, 2).len(), 28);
    }

    #[test]
    fn ordering_groups_by_leading_variable() {
        let p = PolynomialExpansion::from_coefficients(2, 2, 1, BTreeMap::new()).unwrap();
        let labels: Vec<_> = p.terms().iter().map(Monomial::label).collect();
        assert_eq!(labels, ["z1^2", "z1*z2", "z1", "z2^2", "z2", "1"]);
    }

    #[test]
    fn evaluate_and_lookup() {
        let mut c = BTreeMap::new();
        c.insert(vec![1, 1], vec![2.0]);
        c.insert(vec![0, 0], vec![-1.0]);
        c.insert(vec![2, 0], vec![0.5]);
        let p = PolynomialExpansion::from_coefficients(2, 2, 1, c).unwrap();
        assert_eq!(p.evaluate(&[2.0, 3.0]), vec![0.5 * 4.0 + 2.0 * 6.0 - 1.0]);
        assert_eq!(p.constant(), &[-1.0]);
        assert_eq!(p.nonzero_terms().count(), 3);
        assert_eq!(p.get(&[1, 1]).unwrap().coefficients, vec![2.0]);
    }

    #[test]
    fn rejects_out_of_range_exponent() {
        let mut c = BTreeMap::new();
        c.insert(vec![3, 0], vec![1.0]);
        assert!(PolynomialExpansion::from_coefficients(2, 2, 1, c).is_err());
    }

    #[test]
    fn named_labels() {
        let m = Monomial {
            exponents: vec![1, 0, 2],
            coefficients: vec![1.0],
        };
        let names = vec!["a".into(), "b".into(), "c".into()];
        assert_eq!(m.named_label(&names), "a*c^2");
        assert_eq!(m.label(), "z1*z3^2");
    }
}
