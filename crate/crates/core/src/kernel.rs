//! Dense complex matrices for the small (d <= 16) problems in this crate.
//!
//! Everything here is a plain value type. The SVD is a one-sided Jacobi
//! iteration, which is accurate to a few ulps at these sizes.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Relative tolerance for reconstruction and orthonormality checks.
pub const EPS_ORTHO: f64 = 1e-10;
/// Rank threshold relative to the largest singular value.
pub const EPS_RANK: f64 = 1e-12;
/// Tolerance used when grouping entanglement values.
pub const EPS_GROUP: f64 = 1e-9;
/// Absolute tolerance on condition residuals.
pub const EPS_COND: f64 = 1e-9;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(i·theta)`.
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid("matrix dimensions must be positive");
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Builds a matrix from real row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|row| row.iter().map(|&x| c(x, 0.0))).collect();
        Self::new(r, cols, data)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(r, cols, rows.concat())
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

    /// Row-major entries.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &z) in v.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    /// Copies the sub-block with the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Keeps the first `n` columns.
    pub fn leading_columns(&self, n: usize) -> Self {
        Self::from_fn(self.rows, n, |i, j| self[(i, j)])
    }

    /// Frobenius distance to another matrix of the same shape.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "distance between different shapes");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Aligns the global phase of `self` to `target` and returns the residual distance.
    pub fn distance_up_to_phase(&self, target: &Self) -> f64 {
        let overlap: C64 = self.data.iter().zip(&target.data).map(|(a, b)| a.conj() * b).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
        self.scale(phase).distance(target)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Matrix product; panics on mismatched inner dimensions (use `try_mul` at API boundaries).
impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.try_mul(rhs).expect("matrix product dimensions")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum dimensions");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference dimensions");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }
}

/// Kronecker product: `out[ia*rB + ib, ja*cB + jb] = A[ia,ja] * B[ib,jb]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (rb, cb) = b.shape();
    CMatrix::from_fn(a.rows * rb, a.cols * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// `‖M†M − I‖_F`.
pub fn unitarity_defect(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return invalid(format!("unitarity of a non-square {}x{} matrix", m.rows, m.cols));
    }
    let g = &m.adjoint() * m;
    Ok((&g - &CMatrix::identity(m.rows)).frobenius_norm())
}

/// Thin singular value decomposition `M = U · diag(s) · Vh`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub vh: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let k = self.singular_values.len();
        let us = CMatrix::from_fn(self.u.rows, k, |i, j| self.u[(i, j)] * self.singular_values[j]);
        &us * &self.vh
    }

    /// Number of singular values above `EPS_RANK` times the largest one.
    pub fn rank(&self) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > EPS_RANK * smax).count()
    }
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    if !m.is_finite() {
        return invalid("SVD of a matrix with non-finite entries");
    }
    if m.rows >= m.cols {
        let (u, s, v) = jacobi_tall(m);
        Ok(Svd { u, singular_values: s, vh: v.adjoint() })
    } else {
        // M† = U' S V'†  =>  M = V' S U'†
        let (u, s, v) = jacobi_tall(&m.adjoint());
        Ok(Svd { u: v, singular_values: s, vh: u.adjoint() })
    }
}

/// One-sided Jacobi on the columns of a tall matrix; returns (U, s, V) with M = U diag(s) V†.
fn jacobi_tall(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n);

    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for i in 0..rows {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    alpha += ap.norm_sqr();
                    beta += aq.norm_sqr();
                    gamma += ap.conj() * aq;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut a, p, q, e, cs, sn);
                rotate(&mut v, p, q, e, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut norms: Vec<(f64, usize)> =
        (0..n).map(|j| ((0..rows).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt(), j)).collect();
    norms.sort_by(|x, y| y.0.total_cmp(&x.0));

    let smax = norms.first().map_or(0.0, |x| x.0);
    let mut u = CMatrix::zeros(rows, n);
    let mut vs = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &(sigma, j)) in norms.iter().enumerate() {
        s.push(sigma);
        vs.set_column(k, &v.column(j));
        if sigma > 0.0 && sigma > 1e-13 * smax {
            let col: Vec<C64> = a.column(j).iter().map(|z| z / sigma).collect();
            u.set_column(k, &col);
        } else {
            missing.push(k);
        }
    }
    complete_columns(&mut u, &missing);
    (u, s, vs)
}

fn rotate(m: &mut CMatrix, p: usize, q: usize, e: C64, cs: f64, sn: f64) {
    let ec = e.conj();
    for i in 0..m.rows {
        let ap = m[(i, p)];
        let aq = m[(i, q)] * ec;
        m[(i, p)] = ap * cs - aq * sn;
        m[(i, q)] = ap * sn + aq * cs;
    }
}

/// Fills the listed columns of `m` with unit vectors orthogonal to all other columns.
pub(crate) fn complete_columns(m: &mut CMatrix, missing: &[usize]) {
    let rows = m.rows;
    let mut filled: Vec<usize> = (0..m.cols).filter(|j| !missing.contains(j)).collect();
    for &k in missing {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for e in 0..rows {
            let mut cand = vec![ZERO; rows];
            cand[e] = ONE;
            for _ in 0..2 {
                for &j in &filled {
                    let col = m.column(j);
                    let ov: C64 = col.iter().zip(&cand).map(|(x, y)| x.conj() * y).sum();
                    for (x, y) in cand.iter_mut().zip(&col) {
                        *x -= ov * y;
                    }
                }
            }
            let nrm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|b| nrm > b.0) {
                best = Some((nrm, cand));
            }
        }
        if let Some((nrm, cand)) = best {
            let col: Vec<C64> = cand.iter().map(|z| z / nrm).collect();
            m.set_column(k, &col);
            filled.push(k);
        }
    }
}
