//! Dense linear algebra used throughout the crate.
//!
//! Everything here works on row-major `f64` storage. Problem sizes are small
//! enough (supra matrices of a few thousand rows at most) that dense storage
//! and straightforward loops are adequate; the only performance-sensitive
//! routine is the block power iteration behind [`leading_eigenpair`].

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default convergence tolerance for the eigen solvers.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
/// Default iteration cap for the eigen solvers.
pub const DEFAULT_EIGEN_MAX_ITER: usize = 100_000;
/// Relative threshold on the QR R-diagonal below which a design is rank deficient.
pub const RANK_TOL: f64 = 1e-12;
/// Relative tolerance used by [`DenseMatrix::is_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-12;

const BLOCK_WIDTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dims(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds an `n x k` matrix from `k` columns of length `n`.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        if let Some((j, c)) = columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.as_ref().len() != rows)
        {
            return Err(Error::dims(format!(
                "column {j} has {} entries, expected {rows}",
                c.as_ref().len()
            )));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j].as_ref()[i]))
    }

    pub fn column_vector(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
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

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dims(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::dims(format!(
                "vector of length {} against {} rows",
                x.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::dims(format!(
                "{}x{} against {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Largest asymmetry `|M[i,j] − M[j,i]|` and where it occurs.
    pub fn symmetry_defect(&self) -> Option<(usize, usize, f64)> {
        if !self.is_square() {
            return None;
        }
        let mut worst = (0, 0, 0.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = (self[(i, j)] - self[(j, i)]).abs();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        Some(worst)
    }

    pub fn is_symmetric(&self) -> bool {
        self.check_symmetric().is_ok()
    }

    /// Errors unless square and symmetric to `1e-12 · max(1, max|M|)`.
    pub fn check_symmetric(&self) -> Result<()> {
        let (row, col, diff) = self
            .symmetry_defect()
            .ok_or_else(|| Error::dims(format!("{}x{} matrix is not square", self.rows, self.cols)))?;
        if diff > SYMMETRY_TOL * self.max_abs().max(1.0) {
            return Err(Error::AsymmetricInput { row, col, diff });
        }
        Ok(())
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hstack(blocks: &[&DenseMatrix]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::dims(format!(
                "cannot stack a block with {} rows next to {rows} rows",
                b.rows
            )));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn select_columns(&self, keep: &[usize]) -> Self {
        Self::from_fn(self.rows, keep.len(), |i, j| self[(i, keep[j])])
    }

    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips `v` so that its entries sum to a nonnegative value. An exactly zero
/// sum falls back to making the first nonzero entry positive.
pub fn resolve_sign(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    let flip = if s != 0.0 {
        s < 0.0
    } else {
        v.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0)
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub value: f64,
    /// Unit-norm eigenvector with nonnegative component sum.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `‖Mv − λv‖₂` at return.
    pub residual: f64,
}

/// Eigen-decomposition of a small symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: DenseMatrix,
}

/// Cyclic Jacobi eigen-decomposition. Intended for small matrices
/// (Rayleigh–Ritz blocks, `L x L` Gram matrices); cost is O(n³) per sweep.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<SymmetricEigen> {
    m.check_symmetric()?;
    let n = m.rows();
    let mut a = m.clone();
    // exact symmetrization so rotations stay consistent
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut vecs = DenseMatrix::identity(n);
    let scale = a.frobenius_norm();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * scale * 1e-2 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = vecs[(k, p)];
                    let vkq = vecs[(k, q)];
                    vecs[(k, p)] = c * vkp - s * vkq;
                    vecs[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| a[(i, i)]).collect(),
        vectors: vecs.select_columns(&order),
    })
}

/// `M + shift·I − deflation_weight · v vᵀ`, applied to blocks of vectors.
struct ShiftedOperator<'a> {
    m: &'a DenseMatrix,
    shift: f64,
    deflation: Option<(&'a [f64], f64)>,
}

impl ShiftedOperator<'_> {
    fn dim(&self) -> usize {
        self.m.rows()
    }

    /// `y = op(x)` for an `n x k` row-major block `x`.
    fn apply(&self, x: &[f64], k: usize, y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let yi = &mut y[i * k..(i + 1) * k];
            yi.fill(0.0);
            for (j, &a) in self.m.row(i).iter().enumerate() {
                let xj = &x[j * k..(j + 1) * k];
                for (o, &xv) in yi.iter_mut().zip(xj) {
                    *o += a * xv;
                }
            }
            if self.shift != 0.0 {
                for (o, &xv) in yi.iter_mut().zip(&x[i * k..(i + 1) * k]) {
                    *o += self.shift * xv;
                }
            }
        }
        if let Some((v, weight)) = self.deflation {
            for c in 0..k {
                let proj: f64 = (0..n).map(|i| v[i] * x[i * k + c]).sum();
                for i in 0..n {
                    y[i * k + c] -= weight * proj * v[i];
                }
            }
        }
    }

    /// Rayleigh quotient and residual norm of a unit vector.
    fn rayleigh_residual(&self, x: &[f64]) -> (f64, f64) {
        let mut y = vec![0.0; x.len()];
        self.apply(x, 1, &mut y);
        let theta = dot(x, &y);
        let r = y
            .iter()
            .zip(x)
            .map(|(a, b)| (a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        (theta, r)
    }
}

/// Gershgorin lower bound on the smallest eigenvalue.
fn gershgorin_lower(m: &DenseMatrix) -> f64 {
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let off: f64 = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.abs())
                .sum();
            row[i] - off
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest nonnegative shift `s` with `|λ + s| ≤ top + s` for every
/// eigenvalue `λ ≥ lower`, given `top_bound ≤ top`. Under it the wanted
/// eigenvalue is among the dominant ones of the shifted operator.
fn safe_shift(top_bound: f64, lower: f64) -> f64 {
    (-(top_bound + lower) / 2.0).max(0.0)
}

/// Deterministic fill values for the starting block, in [-1, 1).
struct FillSequence(u64);

impl FillSequence {
    fn next(&mut self) -> f64 {
        // splitmix64
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

/// Modified Gram–Schmidt (two passes) on the columns of an `n x k` row-major
/// block. Columns that collapse are replaced by the matching column of
/// `fallback`, then by pseudo-random directions.
fn orthonormalize(q: &mut [f64], n: usize, k: usize, fallback: &[f64], fill: &mut FillSequence) {
    for c in 0..k {
        let original = (0..n).map(|i| q[i * k + c].powi(2)).sum::<f64>().sqrt();
        let mut attempt = 0;
        loop {
            for _pass in 0..2 {
                for p in 0..c {
                    let proj: f64 = (0..n).map(|i| q[i * k + p] * q[i * k + c]).sum();
                    for i in 0..n {
                        q[i * k + c] -= proj * q[i * k + p];
                    }
                }
            }
            let norm = (0..n).map(|i| q[i * k + c].powi(2)).sum::<f64>().sqrt();
            if norm > 1e-10 * original.max(f64::MIN_POSITIVE) && norm > 0.0 {
                for i in 0..n {
                    q[i * k + c] /= norm;
                }
                break;
            }
            for i in 0..n {
                q[i * k + c] = if attempt == 0 { fallback[i * k + c] } else { fill.next() };
            }
            attempt += 1;
        }
    }
}

struct BlockOutcome {
    value: f64,
    vector: Vec<f64>,
    iterations: usize,
    residual: f64,
    /// Ritz values of the final block, descending.
    ritz_values: Vec<f64>,
    /// Final orthonormal `n x k` block, row-major.
    basis: Vec<f64>,
}

/// Block (simultaneous) power iteration with Rayleigh–Ritz extraction.
/// Returns the top Ritz pair of `op`. Without `warm`, the first starting
/// column is the normalized all-ones vector.
fn block_power(op: &ShiftedOperator<'_>, tol: f64, max_iter: usize, warm: Option<&[f64]>) -> Result<BlockOutcome> {
    let n = op.dim();
    let k = n.min(BLOCK_WIDTH);
    let mut fill = FillSequence(0x5EED_u64);
    let mut q = vec![0.0; n * k];
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    for i in 0..n {
        q[i * k] = inv_sqrt_n;
        for c in 1..k {
            q[i * k + c] = fill.next();
        }
    }
    if let Some(w) = warm.filter(|w| w.len() == n * k) {
        q.copy_from_slice(w);
    }
    let start = q.clone();
    orthonormalize(&mut q, n, k, &start, &mut fill);

    let mut y = vec![0.0; n * k];
    let mut next = vec![0.0; n * k];
    let mut prev: Option<Vec<f64>> = None;
    let mut last_residual = f64::INFINITY;
    for iter in 1..=max_iter {
        op.apply(&q, k, &mut y);
        let t = DenseMatrix::from_fn(k, k, |a, b| {
            let ab: f64 = (0..n).map(|i| q[i * k + a] * y[i * k + b]).sum();
            let ba: f64 = (0..n).map(|i| q[i * k + b] * y[i * k + a]).sum();
            0.5 * (ab + ba)
        });
        let ritz = symmetric_eigen(&t)?;
        let e = &ritz.vectors;

        let mut x: Vec<f64> = (0..n)
            .map(|i| (0..k).map(|a| q[i * k + a] * e[(a, 0)]).sum())
            .collect();
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        resolve_sign(&mut x);

        if let Some(p) = &prev {
            let diff = x.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if diff < tol {
                let (theta, residual) = op.rayleigh_residual(&x);
                last_residual = residual;
                if residual <= tol {
                    return Ok(BlockOutcome {
                        value: theta,
                        vector: x,
                        iterations: iter,
                        residual,
                        ritz_values: ritz.values,
                        basis: q,
                    });
                }
            }
        }
        prev = Some(x);

        for i in 0..n {
            for c in 0..k {
                next[i * k + c] = (0..k).map(|a| y[i * k + a] * e[(a, c)]).sum();
            }
        }
        orthonormalize(&mut next, n, k, &q, &mut fill);
        std::mem::swap(&mut q, &mut next);
    }
    if !last_residual.is_finite() {
        if let Some(p) = &prev {
            last_residual = op.rayleigh_residual(p).1;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: last_residual,
    })
}

fn check_solver_args(m: &DenseMatrix, tol: f64) -> Result<()> {
    if m.rows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    m.check_symmetric()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn leading_outcome(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<(EigenResult, BlockOutcome)> {
    check_solver_args(m, tol)?;
    let n = m.rows();
    // the all-ones Rayleigh quotient bounds λ₁ from below
    let shift = safe_shift(m.sum() / n as f64, gershgorin_lower(m));
    let op = ShiftedOperator {
        m,
        shift,
        deflation: None,
    };
    let out = block_power(&op, tol, max_iter, None)?;
    let lead = EigenResult {
        value: out.value - shift,
        vector: out.vector.clone(),
        iterations: out.iterations,
        residual: out.residual,
    };
    Ok((lead, out))
}

/// Algebraically largest eigenpair of a symmetric matrix.
///
/// Runs shifted block power iteration with Rayleigh–Ritz extraction. The
/// shift comes from the Gershgorin lower bound on the spectrum and the
/// all-ones Rayleigh quotient, and is just large enough that no eigenvalue of
/// `M + sI` exceeds `λ₁ + s` in magnitude. The first starting direction is the
/// normalized all-ones vector, which overlaps the Perron vector of any
/// nonnegative matrix. Convergence requires both a successive-iterate distance
/// below `tol` and `‖Mv − λv‖₂ ≤ tol`.
pub fn leading_eigenpair(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<EigenResult> {
    Ok(leading_outcome(m, tol, max_iter)?.0)
}

/// Top Ritz value of the shifted deflated operator `(M + sI) − (λ₁ + s)·v₁v₁ᵀ`,
/// with `lambda2_bound ≤ λ₂`.
fn deflated_top(
    m: &DenseMatrix,
    lead: &EigenResult,
    lambda2_bound: f64,
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
) -> Result<f64> {
    // v₁ maps to 0, so λ₂ + s must also stay nonnegative
    let shift = safe_shift(lambda2_bound, gershgorin_lower(m)).max(-lambda2_bound);
    let op = ShiftedOperator {
        m,
        shift,
        deflation: Some((&lead.vector, lead.value + shift)),
    };
    Ok(block_power(&op, tol, max_iter, warm)?.value - shift)
}

fn check_lead(m: &DenseMatrix, lead: &EigenResult) -> Result<()> {
    if lead.vector.len() != m.rows() {
        return Err(Error::dims(format!(
            "leading eigenvector has length {}, matrix has {} rows",
            lead.vector.len(),
            m.rows()
        )));
    }
    Ok(())
}

/// Second-largest algebraic eigenvalue, found by block power iteration on the
/// shifted deflated matrix `(M + sI) − (λ₁ + s)·v₁v₁ᵀ`.
pub fn second_eigenvalue(m: &DenseMatrix, lead: &EigenResult, tol: f64, max_iter: usize) -> Result<f64> {
    check_solver_args(m, tol)?;
    check_lead(m, lead)?;
    let n = m.rows();
    if n == 1 {
        // no second eigenvalue; report the deflated 1x1 matrix
        return Ok(0.0);
    }
    // the Rayleigh quotient of any unit w ⊥ v₁ is at most λ₂
    let v = &lead.vector;
    let project = |mut w: Vec<f64>| {
        let p = dot(&w, v);
        w.iter_mut().zip(v).for_each(|(a, b)| *a -= p * b);
        let nw = norm2(&w);
        w.iter_mut().for_each(|a| *a /= nw);
        (w, nw)
    };
    let (mut w, nw) = project(vec![1.0 / (n as f64).sqrt(); n]);
    if !(nw > 1e-3) {
        let i = (0..n).min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        w = project(e).0;
    }
    let bound = dot(&w, &m.matvec(&w)?);
    deflated_top(m, lead, bound, tol, max_iter, None)
}

/// Leading eigenpair and second eigenvalue together. The deflated solve is
/// warm-started from the final block of the leading solve, whose second Ritz
/// value bounds `λ₂` from below.
pub fn leading_eigenpair_and_second(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<(EigenResult, f64)> {
    let (lead, out) = leading_outcome(m, tol, max_iter)?;
    if m.rows() == 1 {
        return Ok((lead, 0.0));
    }
    // Ritz values are of M + sI, with s = out.value − λ₁
    let bound = out.ritz_values[1] - (out.value - lead.value);
    let lambda2 = deflated_top(m, &lead, bound, tol, max_iter, Some(&out.basis))?;
    Ok((lead, lambda2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresResult {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// `rss / (n − q)`.
    pub sigma2_hat: f64,
    /// Diagonal of `(WᵀW)⁻¹`.
    pub xtx_inverse_diag: Vec<f64>,
}

/// Householder QR factorization of a tall matrix, kept in compact form.
#[derive(Debug, Clone)]
pub struct QrFactorization {
    rows: usize,
    cols: usize,
    /// Householder vectors, one per column, each of length `rows - j`.
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular factor, `cols x cols` row-major.
    r: DenseMatrix,
}

impl QrFactorization {
    /// Factors `w`; errors with `RankDeficient` when the smallest |R_ii| is below
    /// `1e-12` times the largest.
    pub fn new(w: &DenseMatrix) -> Result<Self> {
        let (n, q) = w.shape();
        if q == 0 || n < q {
            return Err(Error::dims(format!("QR needs rows >= cols >= 1, got {n}x{q}")));
        }
        let mut cols: Vec<Vec<f64>> = w.columns();
        let mut reflectors = Vec::with_capacity(q);
        let mut r = DenseMatrix::zeros(q, q);
        for j in 0..q {
            let x = &cols[j][j..];
            let xnorm = norm2(x);
            let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm2 = dot(&v, &v);
            if vnorm2 > 0.0 {
                for col in cols.iter_mut().skip(j) {
                    let seg = &mut col[j..];
                    let f = 2.0 * dot(&v, seg) / vnorm2;
                    for (s, vi) in seg.iter_mut().zip(&v) {
                        *s -= f * vi;
                    }
                }
            }
            for (jj, col) in cols.iter().enumerate().skip(j) {
                r[(j, jj)] = col[j];
            }
            reflectors.push(v);
        }
        let diag: Vec<f64> = (0..q).map(|i| r[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if max == 0.0 || min < RANK_TOL * max {
            return Err(Error::RankDeficient {
                ratio: if max == 0.0 { 0.0 } else { min / max },
            });
        }
        Ok(Self {
            rows: n,
            cols: q,
            reflectors,
            r,
        })
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// `Qᵀ y`.
    fn apply_qt(&self, y: &[f64]) -> Vec<f64> {
        let mut z = y.to_vec();
        for (j, v) in self.reflectors.iter().enumerate() {
            let vnorm2 = dot(v, v);
            if vnorm2 == 0.0 {
                continue;
            }
            let seg = &mut z[j..];
            let f = 2.0 * dot(v, seg) / vnorm2;
            for (s, vi) in seg.iter_mut().zip(v) {
                *s -= f * vi;
            }
        }
        z
    }

    /// Least-squares coefficients for right-hand side `y`.
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::dims(format!(
                "response has length {}, design has {} rows",
                y.len(),
                self.rows
            )));
        }
        let z = self.apply_qt(y);
        let q = self.cols;
        let mut beta = vec![0.0; q];
        for i in (0..q).rev() {
            let s: f64 = ((i + 1)..q).map(|j| self.r[(i, j)] * beta[j]).sum();
            beta[i] = (z[i] - s) / self.r[(i, i)];
        }
        Ok(beta)
    }

    /// Diagonal of `(WᵀW)⁻¹ = R⁻¹R⁻ᵀ`.
    pub fn gram_inverse_diag(&self) -> Vec<f64> {
        let q = self.cols;
        let mut rinv = DenseMatrix::zeros(q, q);
        for j in 0..q {
            rinv[(j, j)] = 1.0 / self.r[(j, j)];
            for i in (0..j).rev() {
                let s: f64 = ((i + 1)..=j).map(|k| self.r[(i, k)] * rinv[(k, j)]).sum();
                rinv[(i, j)] = -s / self.r[(i, i)];
            }
        }
        (0..q).map(|i| rinv.row(i).iter().map(|v| v * v).sum()).collect()
    }
}

/// Ordinary least squares by Householder QR.
pub fn least_squares(w: &DenseMatrix, y: &[f64]) -> Result<LeastSquaresResult> {
    let (n, q) = w.shape();
    if q == 0 || n <= q {
        return Err(Error::dims(format!("least squares needs n > q >= 1, got n = {n}, q = {q}")));
    }
    let qr = QrFactorization::new(w)?;
    let coefficients = qr.solve(y)?;
    let fitted = w.matvec(&coefficients)?;
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss = dot(&residuals, &residuals);
    Ok(LeastSquaresResult {
        xtx_inverse_diag: qr.gram_inverse_diag(),
        sigma2_hat: rss / (n - q) as f64,
        coefficients,
        residuals,
        rss,
    })
}

/// Face-splitting (transposed Khatri–Rao) product: row `k` of the result is
/// `a.row(k) ⊗ b.row(k)`.
pub fn face_splitting(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != b.rows() {
        return Err(Error::dims(format!(
            "face-splitting needs equal row counts, got {} and {}",
            a.rows(),
            b.rows()
        )));
    }
    let (i_cols, j_cols) = (a.cols(), b.cols());
    let mut data = Vec::with_capacity(a.rows() * i_cols * j_cols);
    for k in 0..a.rows() {
        for &x in a.row(k) {
            data.extend(b.row(k).iter().map(|y| x * y));
        }
    }
    DenseMatrix::new(a.rows(), i_cols * j_cols, data)
}

/// Residual of each column of `v` after projecting out the column span of `x`.
/// `x` may have zero columns, in which case `v` is returned unchanged.
pub fn projection_residual(x: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    if x.rows() != v.rows() {
        return Err(Error::dims(format!(
            "X has {} rows, V has {}",
            x.rows(),
            v.rows()
        )));
    }
    if x.cols() == 0 {
        return Ok(v.clone());
    }
    let qr = QrFactorization::new(x)?;
    let mut cols = Vec::with_capacity(v.cols());
    for col in v.columns() {
        let beta = qr.solve(&col)?;
        let fitted = x.matvec(&beta)?;
        cols.push(col.iter().zip(&fitted).map(|(a, b)| a - b).collect::<Vec<_>>());
    }
    DenseMatrix::from_columns(&cols)
}

/// `σ_min((I − P_X) V)`, via the smallest eigenvalue of the `L x L` Gram
/// matrix of the projected columns.
pub fn smallest_singular_value_residual(x: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    let (n, p, l) = (v.rows(), x.cols(), v.cols());
    if l == 0 {
        return Err(Error::EmptyMatrix);
    }
    if n <= p + l {
        return Err(Error::dims(format!("need n > P + L, got n = {n}, P = {p}, L = {l}")));
    }
    let resid = projection_residual(x, v)?;
    let gram = resid.transpose().matmul(&resid)?;
    let eig = symmetric_eigen(&gram)?;
    let smallest = *eig.values.last().expect("nonempty");
    Ok(smallest.max(0.0).sqrt())
}
