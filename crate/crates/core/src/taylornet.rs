//! Single-layer Taylor polynomial network with Tucker-factored coefficients.
//!
//! The order-`k` term of the polynomial is
//!
//! ```text
//! O_k · G_k · [(I_kkᵀ Δz) ⊗ ... ⊗ (I_k1ᵀ Δz)],   Δz = z − z0
//! ```
//!
//! where `G_k` is the mode-0 unfolding of the term's core tensor. Summing the
//! terms for `k = 1..N` and adding the bias `β = f(z0)` gives the prediction.
//! [`TaylorNet::forward_full_tensor`] evaluates the same polynomial by
//! reconstructing each dense coefficient tensor, and serves as the oracle for
//! the factored forward pass.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};
use crate::params::{ParamMut, ParamRef, Parameterized};
use crate::polynomial::PolynomialExpansion;
use crate::tensor::{dot, fold, kronecker_vec, mode_n_vector_product, tucker_reconstruct, DenseTensor, Matrix};

/// Largest `d^N` accepted by the dense-tensor routines.
pub const DENSE_GUARD: usize = 10_000_000;

/// Highest supported polynomial order.
pub const MAX_ORDER: usize = 4;

pub const FORMAT_VERSION: u32 = 1;

/// Tucker ranks per polynomial order (index 0 is order 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankConfig {
    /// Input rank shared by all `k` input modes of term `k`.
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    /// Permits output ranks larger than the output dimension.
    #[serde(default = "default_true")]
    pub allow_wide_output: bool,
}

fn default_true() -> bool {
    true
}

impl RankConfig {
    /// Same rank `r` for inputs and outputs of every order.
    ///
    /// Output ranks may exceed the output dimension (binary classification
    /// with `r = 8` is the common case), so the wide-output flag is set.
    pub fn uniform(order: usize, rank: usize) -> Self {
        Self {
            input: vec![rank; order],
            output: vec![rank; order],
            allow_wide_output: true,
        }
    }

    /// Rank 8 for order 2, 16 for order 3 and above, 8 otherwise.
    pub fn default_for_order(order: usize) -> Self {
        Self::uniform(order, if order >= 3 { 16 } else { 8 })
    }

    pub fn order(&self) -> usize {
        self.input.len()
    }

    pub fn validate(&self, order: usize, output_dim: usize) -> Result<()> {
        if self.input.len() != order || self.output.len() != order {
            return Err(CatError::Config(format!(
                "rank config lists {} input / {} output ranks for order {order}",
                self.input.len(),
                self.output.len()
            )));
        }
        if self.input.iter().chain(&self.output).any(|&r| r == 0) {
            return Err(CatError::Config("ranks must be at least 1".into()));
        }
        if !self.allow_wide_output {
            if let Some(k) = self.output.iter().position(|&r| r > output_dim) {
                return Err(CatError::Config(format!(
                    "output rank {} of order {} exceeds output dimension {output_dim}",
                    self.output[k],
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

/// One order-`k` term: core unfolding, output factor and `k` input factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuckerTerm {
    /// `r_out × Π_j r_j`, mode-0 unfolding of the core.
    pub core: Matrix,
    /// `o × r_out`
    pub output: Matrix,
    /// `d × r_j` for `j = 1..k`.
    pub inputs: Vec<Matrix>,
}

impl TuckerTerm {
    pub fn order(&self) -> usize {
        self.inputs.len()
    }

    pub fn zeros(input_dim: usize, output_dim: usize, order: usize, r_in: usize, r_out: usize) -> Self {
        Self {
            core: Matrix::zeros(r_out, r_in.pow(order as u32)),
            output: Matrix::zeros(output_dim, r_out),
            inputs: (0..order).map(|_| Matrix::zeros(input_dim, r_in)).collect(),
        }
    }

    fn input_ranks(&self) -> Vec<usize> {
        self.inputs.iter().map(Matrix::cols).collect()
    }

    fn check(&self, k: usize, input_dim: usize, output_dim: usize) -> Result<()> {
        let ranks = self.input_ranks();
        let width: usize = ranks.iter().product();
        let bad = |what: &str| Err(CatError::Shape(format!("term of order {k}: {what}")));
        if self.inputs.len() != k {
            return bad(&format!("{} input factors", self.inputs.len()));
        }
        if self.inputs.iter().any(|m| m.rows() != input_dim) {
            return bad("input factor rows differ from input dimension");
        }
        if self.core.cols() != width {
            return bad(&format!("core has {} columns, ranks need {width}", self.core.cols()));
        }
        if self.output.shape() != (output_dim, self.core.rows()) {
            return bad(&format!(
                "output factor is {:?}, expected ({output_dim}, {})",
                self.output.shape(),
                self.core.rows()
            ));
        }
        let finite = self.core.is_finite() && self.output.is_finite() && self.inputs.iter().all(Matrix::is_finite);
        if !finite {
            return Err(CatError::NonFinite(format!("term of order {k}")));
        }
        Ok(())
    }

    /// Reconstructs the dense coefficient tensor `(o, d, ..., d)`.
    pub fn dense_coefficients(&self) -> Result<DenseTensor> {
        let mut shape = vec![self.core.rows()];
        shape.extend(self.input_ranks());
        let core = fold(&self.core, 0, &shape)?;
        let mut factors = vec![self.output.clone()];
        factors.extend(self.inputs.iter().cloned());
        tucker_reconstruct(&core, &factors)
    }
}

/// Order in which per-mode projections are Kronecker-multiplied.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KronOrder {
    /// `u_k ⊗ ... ⊗ u_1`, consistent with the unfolding convention.
    Descending,
    /// `u_1 ⊗ ... ⊗ u_k`. Only for negative-control tests.
    Ascending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TaylorNetDoc", try_from = "TaylorNetDoc")]
pub struct TaylorNet {
    input_dim: usize,
    output_dim: usize,
    pub bias: Vec<f64>,
    pub expansion_point: Vec<f64>,
    pub terms: Vec<TuckerTerm>,
}

/// Serialized layout of a [`TaylorNet`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TaylorNetDoc {
    format_version: u32,
    dims: NetDims,
    order: usize,
    ranks: RankConfig,
    z0: Vec<f64>,
    beta: Vec<f64>,
    terms: Vec<TuckerTerm>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct NetDims {
    input: usize,
    output: usize,
}

impl From<TaylorNet> for TaylorNetDoc {
    fn from(net: TaylorNet) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            dims: NetDims {
                input: net.input_dim,
                output: net.output_dim,
            },
            order: net.order(),
            ranks: net.ranks(),
            z0: net.expansion_point,
            beta: net.bias,
            terms: net.terms,
        }
    }
}

impl TryFrom<TaylorNetDoc> for TaylorNet {
    type Error = CatError;

    fn try_from(doc: TaylorNetDoc) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(CatError::Archive(format!(
                "taylor net format_version {} (supported: {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        if doc.terms.len() != doc.order {
            return Err(CatError::Archive(format!(
                "order {} but {} terms",
                doc.order,
                doc.terms.len()
            )));
        }
        let net = TaylorNet {
            input_dim: doc.dims.input,
            output_dim: doc.dims.output,
            bias: doc.beta,
            expansion_point: doc.z0,
            terms: doc.terms,
        };
        net.validate()?;
        Ok(net)
    }
}

/// Gradients with the same layout as a [`TaylorNet`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorGrads {
    pub bias: Vec<f64>,
    pub terms: Vec<TermGrads>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermGrads {
    pub core: Matrix,
    pub output: Matrix,
    pub inputs: Vec<Matrix>,
}

/// Closed-form parameter counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamCount {
    pub per_term: Vec<usize>,
    /// Terms plus the bias.
    pub total: usize,
    /// Parameters of the same polynomial with dense coefficient tensors.
    pub dense_equivalent: usize,
}

/// Parameter count of a Taylor network with uniform per-order input ranks.
pub fn param_count(input_dim: usize, output_dim: usize, order: usize, ranks: &RankConfig) -> ParamCount {
    let per_term: Vec<usize> = (1..=order)
        .map(|k| {
            let r_in = ranks.input[k - 1];
            let r_out = ranks.output[k - 1];
            r_out * r_in.pow(k as u32) + output_dim * r_out + k * input_dim * r_in
        })
        .collect();
    let total = per_term.iter().sum::<usize>() + output_dim;
    let dense_equivalent = output_dim * (1..=order).map(|k| input_dim.pow(k as u32)).sum::<usize>() + output_dim;
    ParamCount {
        per_term,
        total,
        dense_equivalent,
    }
}

/// Contracts `t`, laid out like `a_{k-1} ⊗ ... ⊗ a_0` (mode 0 fastest), with
/// every `vectors[l]` except `l = keep`, leaving a vector over mode `keep`.
fn contract_except(t: &[f64], vectors: &[&[f64]], keep: usize) -> Vec<f64> {
    let mut cur = t.to_vec();
    // fastest modes below `keep`: dot each contiguous run
    for v in &vectors[..keep] {
        cur = cur.chunks_exact(v.len()).map(|c| dot(c, v)).collect();
    }
    // slowest modes above `keep`: weighted sum of contiguous blocks
    for v in vectors[keep + 1..].iter().rev() {
        let block = cur.len() / v.len();
        let mut next = vec![0.0; block];
        for (&w, chunk) in v.iter().zip(cur.chunks_exact(block)) {
            for (o, &x) in next.iter_mut().zip(chunk) {
                *o += w * x;
            }
        }
        cur = next;
    }
    cur
}

fn kron_descending(projections: &[&[f64]], order: KronOrder) -> Vec<f64> {
    let mut it: Box<dyn Iterator<Item = &&[f64]>> = match order {
        KronOrder::Descending => Box::new(projections.iter()),
        KronOrder::Ascending => Box::new(projections.iter().rev()),
    };
    let first = it.next().expect("at least one projection").to_vec();
    it.fold(first, |acc, u| kronecker_vec(u, &acc))
}

impl TaylorNet {
    /// All-zero network (`β = 0`, `z0 = 0`).
    pub fn zeros(input_dim: usize, output_dim: usize, ranks: &RankConfig) -> Result<Self> {
        let order = ranks.order();
        if order == 0 || order > MAX_ORDER {
            return Err(CatError::Config(format!("order must be in 1..={MAX_ORDER}, got {order}")));
        }
        if input_dim == 0 || output_dim == 0 {
            return Err(CatError::Config("input and output dimensions must be positive".into()));
        }
        ranks.validate(order, output_dim)?;
        let terms = (1..=order)
            .map(|k| TuckerTerm::zeros(input_dim, output_dim, k, ranks.input[k - 1], ranks.output[k - 1]))
            .collect();
        Ok(Self {
            input_dim,
            output_dim,
            bias: vec![0.0; output_dim],
            expansion_point: vec![0.0; input_dim],
            terms,
        })
    }

    /// Uniform `[-a, a]` initialization with `a = sqrt(1 / columns)` per
    /// matrix; `β` and `z0` start at zero.
    pub fn init<R: Rng>(input_dim: usize, output_dim: usize, ranks: &RankConfig, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(input_dim, output_dim, ranks)?;
        for term in &mut net.terms {
            fill_uniform(&mut term.core, rng);
            fill_uniform(&mut term.output, rng);
            for m in &mut term.inputs {
                fill_uniform(m, rng);
            }
        }
        Ok(net)
    }

    pub fn init_seeded(input_dim: usize, output_dim: usize, ranks: &RankConfig, seed: u64) -> Result<Self> {
        Self::init(input_dim, output_dim, ranks, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn ranks(&self) -> RankConfig {
        RankConfig {
            input: self.terms.iter().map(|t| t.inputs.first().map_or(0, Matrix::cols)).collect(),
            output: self.terms.iter().map(|t| t.core.rows()).collect(),
            allow_wide_output: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bias.len() != self.output_dim {
            return Err(CatError::Shape(format!("bias has length {}, expected {}", self.bias.len(), self.output_dim)));
        }
        if self.expansion_point.len() != self.input_dim {
            return Err(CatError::Shape(format!(
                "expansion point has length {}, expected {}",
                self.expansion_point.len(),
                self.input_dim
            )));
        }
        if !self.bias.iter().chain(&self.expansion_point).all(|v| v.is_finite()) {
            return Err(CatError::NonFinite("bias or expansion point".into()));
        }
        if self.terms.is_empty() || self.terms.len() > MAX_ORDER {
            return Err(CatError::Shape(format!("order {} outside 1..={MAX_ORDER}", self.terms.len())));
        }
        for (i, t) in self.terms.iter().enumerate() {
            t.check(i + 1, self.input_dim, self.output_dim)?;
        }
        Ok(())
    }

    fn check_batch(&self, z: &Matrix) -> Result<()> {
        if z.cols() != self.input_dim {
            return Err(CatError::Shape(format!("inputs have width {}, network expects {}", z.cols(), self.input_dim)));
        }
        if !z.is_finite() {
            return Err(CatError::NonFinite("network input".into()));
        }
        Ok(())
    }

    fn centered(&self, z: &Matrix) -> Matrix {
        let mut dz = z.clone();
        if self.expansion_point.iter().any(|&v| v != 0.0) {
            for r in 0..dz.rows() {
                for (v, z0) in dz.row_mut(r).iter_mut().zip(&self.expansion_point) {
                    *v -= z0;
                }
            }
        }
        dz
    }

    /// Batched factored forward pass; rows of `z` are samples.
    pub fn forward(&self, z: &Matrix) -> Result<Matrix> {
        self.forward_with_kron_order(z, KronOrder::Descending)
    }

    #[doc(hidden)]
    pub fn forward_with_kron_order(&self, z: &Matrix, order: KronOrder) -> Result<Matrix> {
        self.check_batch(z)?;
        let dz = self.centered(z);
        let n = z.rows();
        let mut out = Matrix::zeros(n, self.output_dim);
        for r in 0..n {
            out.row_mut(r).copy_from_slice(&self.bias);
        }
        for term in &self.terms {
            let projections: Vec<Matrix> = term.inputs.iter().map(|m| dz.matmul(m)).collect::<Result<_>>()?;
            for s in 0..n {
                let rows: Vec<&[f64]> = projections.iter().map(|p| p.row(s)).collect();
                let kron = kron_descending(&rows, order);
                let hidden = term.core.matvec(&kron);
                let y = term.output.matvec(&hidden);
                for (o, v) in out.row_mut(s).iter_mut().zip(y) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }

    /// Evaluates one sample through the reconstructed dense coefficient
    /// tensors and repeated mode-n vector products.
    pub fn forward_full_tensor(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.dense_guard()?;
        if z.len() != self.input_dim {
            return Err(CatError::Shape(format!("input has length {}, expected {}", z.len(), self.input_dim)));
        }
        let dz: Vec<f64> = z.iter().zip(&self.expansion_point).map(|(a, b)| a - b).collect();
        let mut out = self.bias.clone();
        for term in &self.terms {
            let mut w = term.dense_coefficients()?;
            for mode in (1..=term.order()).rev() {
                w = mode_n_vector_product(&w, &dz, mode)?;
            }
            for (o, v) in out.iter_mut().zip(w.data()) {
                *o += v;
            }
        }
        Ok(out)
    }

    fn dense_guard(&self) -> Result<()> {
        let size = (self.input_dim as u128).pow(self.order() as u32);
        if size > DENSE_GUARD as u128 {
            return Err(CatError::SizeGuard(format!(
                "d^N = {}^{} exceeds {DENSE_GUARD}",
                self.input_dim,
                self.order()
            )));
        }
        Ok(())
    }

    /// Reverse-mode gradients of `Σ_s ⟨upstream_s, f(z_s)⟩` with respect to
    /// every parameter and every input.
    pub fn backward(&self, z: &Matrix, upstream: &Matrix) -> Result<(TaylorGrads, Matrix)> {
        self.check_batch(z)?;
        if upstream.shape() != (z.rows(), self.output_dim) {
            return Err(CatError::Shape(format!(
                "upstream is {:?}, expected ({}, {})",
                upstream.shape(),
                z.rows(),
                self.output_dim
            )));
        }
        let n = z.rows();
        let dz = self.centered(z);
        let mut grads = self.zero_grads();
        let mut input_grad = Matrix::zeros(n, self.input_dim);

        for s in 0..n {
            for (b, g) in grads.bias.iter_mut().zip(upstream.row(s)) {
                *b += g;
            }
        }

        for (term, tg) in self.terms.iter().zip(&mut grads.terms) {
            let ranks = term.input_ranks();
            let projections: Vec<Matrix> = term.inputs.iter().map(|m| dz.matmul(m)).collect::<Result<_>>()?;
            let mut proj_grads: Vec<Matrix> = ranks.iter().map(|&r| Matrix::zeros(n, r)).collect();
            for s in 0..n {
                let g = upstream.row(s);
                if g.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let rows: Vec<&[f64]> = projections.iter().map(|p| p.row(s)).collect();
                let kron = kron_descending(&rows, KronOrder::Descending);
                let hidden = term.core.matvec(&kron);

                tg.output.add_outer(g, &hidden, 1.0);
                let d_hidden = term.output.matvec_t(g);
                tg.core.add_outer(&d_hidden, &kron, 1.0);
                let d_kron = term.core.matvec_t(&d_hidden);
                for (j, pg) in proj_grads.iter_mut().enumerate() {
                    pg.row_mut(s).copy_from_slice(&contract_except(&d_kron, &rows, j));
                }
            }

            let dz_t = dz.transpose();
            for (j, pg) in proj_grads.iter().enumerate() {
                tg.inputs[j] = dz_t.matmul(pg)?;
                let back = pg.matmul(&term.inputs[j].transpose())?;
                for (a, b) in input_grad.as_mut_slice().iter_mut().zip(back.as_slice()) {
                    *a += b;
                }
            }
        }
        Ok((grads, input_grad))
    }

    pub fn zero_grads(&self) -> TaylorGrads {
        TaylorGrads {
            bias: vec![0.0; self.output_dim],
            terms: self
                .terms
                .iter()
                .map(|t| TermGrads {
                    core: Matrix::zeros(t.core.rows(), t.core.cols()),
                    output: Matrix::zeros(t.output.rows(), t.output.cols()),
                    inputs: t.inputs.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect(),
                })
                .collect(),
        }
    }

    /// Explicit monomial form. Each monomial's coefficient sums the dense
    /// coefficient entries over all index tuples with that multiset.
    pub fn expand_monomials(&self) -> Result<PolynomialExpansion> {
        if self.expansion_point.iter().any(|&v| v != 0.0) {
            return Err(CatError::ExpansionUnsupported("expansion point is not zero".into()));
        }
        self.dense_guard()?;
        let d = self.input_dim;
        let o = self.output_dim;
        let mut coefficients: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
        coefficients.insert(vec![0; d], self.bias.clone());
        for term in &self.terms {
            let k = term.order();
            let w = term.dense_coefficients()?;
            let block = d.pow(k as u32);
            let mut digits = vec![0usize; k];
            for flat in 0..block {
                let mut alpha = vec![0u32; d];
                for &i in &digits {
                    alpha[i] += 1;
                }
                let entry = coefficients.entry(alpha).or_insert_with(|| vec![0.0; o]);
                for (c, slot) in entry.iter_mut().enumerate() {
                    *slot += w.data()[c * block + flat];
                }
                for pos in (0..k).rev() {
                    digits[pos] += 1;
                    if digits[pos] < d {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
        }
        PolynomialExpansion::from_coefficients(d, self.order(), o, coefficients)
    }
}

fn fill_uniform<R: Rng>(m: &mut Matrix, rng: &mut R) {
    let a = (1.0 / m.cols() as f64).sqrt();
    for v in m.as_mut_slice() {
        *v = rng.random_range(-a..=a);
    }
}

impl Parameterized for TaylorNet {
    fn params(&self) -> Vec<ParamRef<'_>> {
        let mut out = vec![ParamRef {
            name: "taylor.beta".into(),
            values: &self.bias,
        }];
        for (i, t) in self.terms.iter().enumerate() {
            let k = i + 1;
            out.push(ParamRef {
                name: format!("taylor.term{k}.core"),
                values: t.core.as_slice(),
            });
            out.push(ParamRef {
                name: format!("taylor.term{k}.output"),
                values: t.output.as_slice(),
            });
            for (j, m) in t.inputs.iter().enumerate() {
                out.push(ParamRef {
                    name: format!("taylor.term{k}.input{}", j + 1),
                    values: m.as_slice(),
                });
            }
        }
        out
    }

    fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        let mut out = vec![ParamMut {
            name: "taylor.beta".into(),
            values: &mut self.bias,
            decay: false,
        }];
        for (i, t) in self.terms.iter_mut().enumerate() {
            let k = i + 1;
            out.push(ParamMut {
                name: format!("taylor.term{k}.core"),
                values: t.core.as_mut_slice(),
                decay: true,
            });
            out.push(ParamMut {
                name: format!("taylor.term{k}.output"),
                values: t.output.as_mut_slice(),
                decay: true,
            });
            for (j, m) in t.inputs.iter_mut().enumerate() {
                out.push(ParamMut {
                    name: format!("taylor.term{k}.input{}", j + 1),
                    values: m.as_mut_slice(),
                    decay: true,
                });
            }
        }
        out
    }
}

impl Parameterized for TaylorGrads {
    fn params(&self) -> Vec<ParamRef<'_>> {
        let mut out = vec![ParamRef {
            name: "taylor.beta".into(),
            values: &self.bias,
        }];
        for (i, t) in self.terms.iter().enumerate() {
            let k = i + 1;
            out.push(ParamRef {
                name: format!("taylor.term{k}.core"),
                values: t.core.as_slice(),
            });
            out.push(ParamRef {
                name: format!("taylor.term{k}.output"),
                values: t.output.as_slice(),
            });
            for (j, m) in t.inputs.iter().enumerate() {
                out.push(ParamRef {
                    name: format!("taylor.term{k}.input{}", j + 1),
                    values: m.as_slice(),
                });
            }
        }
        out
    }

    fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        let mut out = vec![ParamMut {
            name: "taylor.beta".into(),
            values: &mut self.bias,
            decay: false,
        }];
        for (i, t) in self.terms.iter_mut().enumerate() {
            let k = i + 1;
            out.push(ParamMut {
                name: format!("taylor.term{k}.core"),
                values: t.core.as_mut_slice(),
                decay: true,
            });
            out.push(ParamMut {
                name: format!("taylor.term{k}.output"),
                values: t.output.as_mut_slice(),
                decay: true,
            });
            for (j, m) in t.inputs.iter_mut().enumerate() {
                out.push(ParamMut {
                    name: format!("taylor.term{k}.input{}", j + 1),
                    values: m.as_mut_slice(),
                    decay: true,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{finite_difference_check, max_relative_error, random_matrix, random_taylornet};

    fn sample_inputs(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
        random_matrix(rng, n, d, 1.0)
    }

    #[test]
    fn zero_polynomial_returns_bias() {
        let mut net = TaylorNet::zeros(3, 2, &RankConfig::uniform(2, 2)).unwrap();
        net.bias = vec![1.5, -2.0];
        let z = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-4.0, 0.0, 9.0]]).unwrap();
        let out = net.forward(&z).unwrap();
        assert_eq!(out.row(0), &[1.5, -2.0]);
        assert_eq!(out.row(1), &[1.5, -2.0]);
        assert_eq!(net.forward_full_tensor(&[1.0, 2.0, 3.0]).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn expansion_point_returns_bias_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut net = random_taylornet(&mut rng, 3, 2, 3, 2);
        net.expansion_point = vec![0.3, -0.7, 1.1];
        let z = Matrix::new(1, 3, net.expansion_point.clone()).unwrap();
        assert_eq!(net.forward(&z).unwrap().row(0), net.bias.as_slice());
    }

    #[test]
    fn factored_forward_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = random_taylornet(&mut rng, 3, 2, 3, 2);
        let z = sample_inputs(&mut rng, 10, 3);
        let out = net.forward(&z).unwrap();
        for s in 0..10 {
            let dense = net.forward_full_tensor(z.row(s)).unwrap();
            assert!(max_relative_error(out.row(s), &dense) < 1e-10);
        }
    }

    #[test]
    fn first_order_matches_matrix_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = random_taylornet(&mut rng, 4, 3, 1, 2);
        let t = &net.terms[0];
        let m = t.output.matmul(&t.core).unwrap().matmul(&t.inputs[0].transpose()).unwrap();
        let z = [0.4, -1.2, 0.9, 2.0];
        let mut expect = m.matvec(&z);
        for (e, b) in expect.iter_mut().zip(&net.bias) {
            *e += b;
        }
        let got = net.forward_full_tensor(&z).unwrap();
        assert!(max_relative_error(&got, &expect) < 1e-12);
    }

    #[test]
    fn ascending_kronecker_order_breaks_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let net = random_taylornet(&mut rng, 3, 1, 2, 3);
        let z = sample_inputs(&mut rng, 1, 3);
        let wrong = net.forward_with_kron_order(&z, KronOrder::Ascending).unwrap();
        let dense = net.forward_full_tensor(z.row(0)).unwrap();
        assert!(max_relative_error(wrong.row(0), &dense) > 1e-6);
    }

    #[test]
    fn size_guard_rejects_huge_dense_tensors() {
        let net = TaylorNet::zeros(400, 1, &RankConfig::uniform(3, 1)).unwrap();
        assert!(matches!(net.forward_full_tensor(&vec![0.0; 400]), Err(CatError::SizeGuard(_))));
        assert!(matches!(net.expand_monomials(), Err(CatError::SizeGuard(_))));
    }

    #[test]
    fn forward_rejects_bad_inputs() {
        let net = TaylorNet::zeros(2, 1, &RankConfig::uniform(1, 1)).unwrap();
        assert!(net.forward(&Matrix::zeros(1, 3)).is_err());
        let bad = Matrix::new(1, 2, vec![f64::NAN, 0.0]).unwrap();
        assert!(matches!(net.forward(&bad), Err(CatError::NonFinite(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = random_taylornet(&mut rng, 3, 2, 2, 2);
        let z = sample_inputs(&mut rng, 4, 3);
        let (g, dz) = net.backward(&z, &Matrix::zeros(4, 2)).unwrap();
        assert_eq!(g, net.zero_grads());
        assert!(dz.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bias_gradient_sums_upstream() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = random_taylornet(&mut rng, 2, 2, 2, 2);
        let z = sample_inputs(&mut rng, 3, 2);
        let up = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 0.0]]).unwrap();
        let (g, _) = net.backward(&z, &up).unwrap();
        assert_eq!(g.bias, vec![4.5, 1.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for order in 1..=3 {
            let mut net = random_taylornet(&mut rng, 3, 2, order, 2);
            net.expansion_point = vec![0.1, -0.2, 0.05];
            let z = sample_inputs(&mut rng, 4, 3);
            let up = random_matrix(&mut rng, 4, 2, 1.0);
            let report = finite_difference_check(&net, &z, &up, 1e-5).unwrap();
            assert!(report.max_error < 1e-4, "order {order}: {report:?}");
        }
    }

    #[test]
    fn single_term_is_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for k in 1..=3 {
            let mut net = random_taylornet(&mut rng, 3, 2, 3, 2);
            net.bias = vec![0.0; 2];
            for (i, t) in net.terms.iter_mut().enumerate() {
                if i + 1 != k {
                    t.core = Matrix::zeros(t.core.rows(), t.core.cols());
                }
            }
            let z = sample_inputs(&mut rng, 3, 3);
            let mut z2 = z.clone();
            z2.as_mut_slice().iter_mut().for_each(|v| *v *= 2.0);
            let a = net.forward(&z).unwrap();
            let b = net.forward(&z2).unwrap();
            let c = 2f64.powi(k as i32);
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(x * c, *y);
            }
        }
    }

    #[test]
    fn expansion_of_zero_cores_is_constant() {
        let mut net = TaylorNet::zeros(3, 1, &RankConfig::uniform(2, 2)).unwrap();
        net.bias = vec![0.7];
        let p = net.expand_monomials().unwrap();
        let nz: Vec<_> = p.nonzero_terms().collect();
        assert_eq!(nz.len(), 1);
        assert!(nz[0].is_constant());
        assert_eq!(p.constant(), &[0.7]);
    }

    #[test]
    fn linear_expansion_reads_off_matrix_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let net = random_taylornet(&mut rng, 3, 2, 1, 2);
        let t = &net.terms[0];
        let m = t.output.matmul(&t.core).unwrap().matmul(&t.inputs[0].transpose()).unwrap();
        let p = net.expand_monomials().unwrap();
        for j in 0..3 {
            let mut alpha = vec![0; 3];
            alpha[j] = 1;
            let coef = &p.get(&alpha).unwrap().coefficients;
            let col: Vec<f64> = (0..2).map(|r| m.get(r, j)).collect();
            assert!(max_relative_error(coef, &col) < 1e-12);
        }
    }

    #[test]
    fn expansion_evaluates_like_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let net = random_taylornet(&mut rng, 4, 2, 2, 3);
        let p = net.expand_monomials().unwrap();
        let z = sample_inputs(&mut rng, 50, 4);
        let f = net.forward(&z).unwrap();
        for s in 0..50 {
            assert!(max_relative_error(&p.evaluate(z.row(s)), f.row(s)) < 1e-9);
        }
    }

    #[test]
    fn expansion_requires_zero_expansion_point() {
        let mut net = TaylorNet::zeros(2, 1, &RankConfig::uniform(1, 1)).unwrap();
        net.expansion_point = vec![1.0, 0.0];
        assert!(matches!(net.expand_monomials(), Err(CatError::ExpansionUnsupported(_))));
    }

    #[test]
    fn param_count_closed_form() {
        let c = param_count(2, 2, 2, &RankConfig::uniform(2, 8));
        assert_eq!(c.per_term, vec![96, 560]);
        assert_eq!(c.total, 658);
        assert_eq!(c.dense_equivalent, 14);
    }

    #[test]
    fn param_count_matches_allocated_arrays() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let d = rng.random_range(1..=6);
            let o = rng.random_range(1..=3);
            let n = rng.random_range(1..=3);
            let ranks = RankConfig {
                input: (0..n).map(|_| rng.random_range(1..=4)).collect(),
                output: (0..n).map(|_| rng.random_range(1..=4)).collect(),
                allow_wide_output: true,
            };
            let net = TaylorNet::zeros(d, o, &ranks).unwrap();
            assert_eq!(param_count(d, o, n, &ranks).total, net.param_count());
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let ranks = RankConfig::uniform(2, 4);
        let a = TaylorNet::init_seeded(5, 2, &ranks, 42).unwrap();
        let b = TaylorNet::init_seeded(5, 2, &ranks, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bias, vec![0.0, 0.0]);
        let core = &a.terms[1].core;
        let bound = (1.0 / core.cols() as f64).sqrt();
        assert!(core.as_slice().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn init_spread_matches_uniform_moment() {
        // a 1 x 10^4 core of a rank-1 order-1 term: a = sqrt(1/10^4)
        let ranks = RankConfig {
            input: vec![10_000],
            output: vec![1],
            allow_wide_output: true,
        };
        let net = TaylorNet::init_seeded(1, 1, &ranks, 3).unwrap();
        let v = net.terms[0].core.as_slice();
        let a = (1.0 / v.len() as f64).sqrt();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        let expected = a / 3f64.sqrt();
        assert!((sd - expected).abs() / expected < 0.1, "sd {sd} vs {expected}");
    }

    #[test]
    fn rank_config_validation() {
        assert!(RankConfig::uniform(2, 8).validate(2, 2).is_ok());
        let narrow = RankConfig {
            allow_wide_output: false,
            ..RankConfig::uniform(2, 8)
        };
        assert!(narrow.validate(2, 2).is_err());
        assert!(RankConfig::uniform(2, 0).validate(2, 1).is_err());
        assert!(RankConfig::uniform(1, 2).validate(2, 1).is_err());
        assert_eq!(RankConfig::default_for_order(3).input, vec![16; 3]);
    }

    #[test]
    fn dense_count_exceeds_factored_for_default_configs() {
        // ranks below d and o
        for (order, r) in [(2, 8), (3, 16)] {
            let c = param_count(64, 32, order, &RankConfig::uniform(order, r));
            assert!(c.dense_equivalent >= c.total);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = random_taylornet(&mut rng, 3, 2, 3, 2);
        let text = serde_json::to_string(&net).unwrap();
        assert!(text.contains("\"format_version\":1"));
        let back: TaylorNet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, net);

        let tampered = text.replace("\"format_version\":1", "\"format_version\":99");
        assert!(serde_json::from_str::<TaylorNet>(&tampered).is_err());
    }
}
