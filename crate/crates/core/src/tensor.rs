//! Dense small-tensor kernels.
//!
//! Conventions used throughout the crate:
//!
//! * modes are zero-based (`mode 0` is the first mode);
//! * [`DenseTensor`] data is row-major, the last index varies fastest;
//! * [`matricize`] follows Kolda & Bader: the column index enumerates the
//!   remaining modes with the *lower-numbered* mode varying fastest;
//! * [`kronecker_vec`] lets the right operand's index vary fastest.
//!
//! With this pairing the mode-0 unfolding of a Tucker core multiplies a
//! Kronecker product of factor projections written in *descending* mode
//! order, `u_k ⊗ ... ⊗ u_1`, which is how the Taylor network evaluates each
//! term.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CatError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(CatError::Shape(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(CatError::Shape(format!(
                "ragged matrix: row {i} has {} columns, expected {cols}",
                r.len()
            )));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Single-column matrix holding `v`.
    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(CatError::Shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `selfᵀ · x`
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a * xr;
            }
        }
        out
    }

    /// `self += scale · a bᵀ`
    pub fn add_outer(&mut self, a: &[f64], b: &[f64], scale: f64) {
        debug_assert_eq!((a.len(), b.len()), (self.rows, self.cols));
        for (r, &ar) in a.iter().enumerate() {
            let s = ar * scale;
            if s == 0.0 {
                continue;
            }
            for (o, &bc) in self.row_mut(r).iter_mut().zip(b) {
                *o += s * bc;
            }
        }
    }

    /// Copies the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four independent partial sums so long products are not latency-bound
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// N-way dense array, row-major with the last index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if let Some(m) = shape.iter().position(|&s| s == 0) {
            return Err(CatError::Shape(format!("mode {m} has size 0")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(CatError::Shape(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            shape: vec![m.rows(), m.cols()],
            data: m.as_slice().to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndims(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Splits the shape around `mode` into (product before, size, product after).
    fn split_at_mode(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.shape[..mode].iter().product();
        let right = self.shape[mode + 1..].iter().product();
        (left, self.shape[mode], right)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.shape.len() {
            return Err(CatError::Shape(format!(
                "mode {mode} out of range for a {}-way tensor",
                self.shape.len()
            )));
        }
        Ok(())
    }
}

/// `T ×_mode M`: contracts `mode` of `tensor` with the columns of `m`.
pub fn mode_n_matrix_product(tensor: &DenseTensor, m: &Matrix, mode: usize) -> Result<DenseTensor> {
    tensor.check_mode(mode)?;
    let (left, size, right) = tensor.split_at_mode(mode);
    if m.cols() != size {
        return Err(CatError::Shape(format!(
            "mode {mode}: tensor size {size} but matrix has {} columns",
            m.cols()
        )));
    }
    let out_size = m.rows();
    let mut shape = tensor.shape.clone();
    shape[mode] = out_size;
    let mut data = vec![0.0; left * out_size * right];
    for l in 0..left {
        let src = &tensor.data[l * size * right..(l + 1) * size * right];
        let dst = &mut data[l * out_size * right..(l + 1) * out_size * right];
        for r in 0..out_size {
            let dst_row = &mut dst[r * right..(r + 1) * right];
            for (j, &w) in m.row(r).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (d, &s) in dst_row.iter_mut().zip(&src[j * right..(j + 1) * right]) {
                    *d += w * s;
                }
            }
        }
    }
    DenseTensor::new(shape, data)
}

/// `T ×̄_mode v`: contracts `mode` with a vector and drops that mode.
pub fn mode_n_vector_product(tensor: &DenseTensor, v: &[f64], mode: usize) -> Result<DenseTensor> {
    tensor.check_mode(mode)?;
    let (left, size, right) = tensor.split_at_mode(mode);
    if v.len() != size {
        return Err(CatError::Shape(format!(
            "mode {mode}: tensor size {size} but vector has length {}",
            v.len()
        )));
    }
    let mut shape = tensor.shape.clone();
    shape.remove(mode);
    let mut data = vec![0.0; left * right];
    for l in 0..left {
        let src = &tensor.data[l * size * right..(l + 1) * size * right];
        let dst = &mut data[l * right..(l + 1) * right];
        for (j, &w) in v.iter().enumerate() {
            for (d, &s) in dst.iter_mut().zip(&src[j * right..(j + 1) * right]) {
                *d += w * s;
            }
        }
    }
    DenseTensor::new(shape, data)
}

/// Column strides of the mode-`mode` unfolding, indexed by original mode.
fn unfolding_strides(shape: &[usize], mode: usize) -> Vec<usize> {
    let mut strides = vec![0; shape.len()];
    let mut acc = 1;
    for (k, &s) in shape.iter().enumerate() {
        if k != mode {
            strides[k] = acc;
            acc *= s;
        }
    }
    strides
}

/// Visits every multi-index of `shape` in row-major order.
fn for_each_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = shape.iter().product();
    let mut index = vec![0usize; shape.len()];
    for flat in 0..total {
        f(flat, &index);
        for k in (0..shape.len()).rev() {
            index[k] += 1;
            if index[k] < shape[k] {
                break;
            }
            index[k] = 0;
        }
    }
}

/// Mode-`mode` unfolding (Kolda & Bader column order).
pub fn matricize(tensor: &DenseTensor, mode: usize) -> Result<Matrix> {
    tensor.check_mode(mode)?;
    let rows = tensor.shape[mode];
    let cols = tensor.len() / rows;
    let strides = unfolding_strides(&tensor.shape, mode);
    let mut out = Matrix::zeros(rows, cols);
    for_each_index(&tensor.shape, |flat, idx| {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out.set(idx[mode], col, tensor.data[flat]);
    });
    Ok(out)
}

/// Inverse of [`matricize`].
pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    let mut out = DenseTensor::zeros(shape.to_vec());
    out.check_mode(mode)?;
    if m.rows() != shape[mode] || m.rows() * m.cols() != out.len() {
        return Err(CatError::Shape(format!(
            "cannot fold a {}x{} matrix along mode {mode} into {shape:?}",
            m.rows(),
            m.cols()
        )));
    }
    let strides = unfolding_strides(shape, mode);
    for_each_index(shape, |flat, idx| {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        out.data[flat] = m.get(idx[mode], col);
    });
    Ok(out)
}

/// `u ⊗ v` with `v`'s index varying fastest.
pub fn kronecker_vec(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for &a in u {
        out.extend(v.iter().map(|&b| a * b));
    }
    out
}

/// Matrix Kronecker product `A ⊗ B`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a.get(i, j);
            for k in 0..br {
                for l in 0..bc {
                    out.set(i * br + k, j * bc + l, s * b.get(k, l));
                }
            }
        }
    }
    out
}

/// `G ×_0 U⁽⁰⁾ ×_1 U⁽¹⁾ ... ×_{N-1} U⁽ᴺ⁻¹⁾`.
pub fn tucker_reconstruct(core: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if factors.len() != core.ndims() {
        return Err(CatError::Shape(format!(
            "{}-way core needs {} factors, got {}",
            core.ndims(),
            core.ndims(),
            factors.len()
        )));
    }
    factors
        .iter()
        .enumerate()
        .try_fold(core.clone(), |t, (mode, u)| mode_n_matrix_product(&t, u, mode))
}
