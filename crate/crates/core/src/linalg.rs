//! Dense complex linear algebra for small Hermitian problems.
//!
//! Matrices are stored row-major. The Hermitian eigensolver is a cyclic
//! complex Jacobi iteration, which is accurate to a few ulps of the spectral
//! radius for the dimensions used here (at most a few dozen).

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar type used everywhere.
pub type C64 = Complex64;

/// Default relative kernel threshold: eigenvalues at or below
/// `DEFAULT_KERNEL_EPS * max(lambda_max, 0)` are treated as exact zeros.
pub const DEFAULT_KERNEL_EPS: f64 = 1e-12;

/// Inputs whose anti-Hermitian part is below this (relative) size are
/// silently Hermitized; larger asymmetries are rejected.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerance on the weight a state may leave outside the support of another
/// operator before the two are considered not support-dominated.
pub const SUPPORT_TOL: f64 = 1e-10;

const MAX_JACOBI_SWEEPS: usize = 80;
/// Off-diagonal entries below this multiple of `sqrt(|a_pp a_qq|)` are zeroed.
const JACOBI_RELATIVE_TOL: f64 = 1e-16;
/// Off-diagonal entries below this magnitude are zeroed.
const JACOBI_ABSOLUTE_FLOOR: f64 = 1e-300;

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// All-zero `rows x cols` matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("matrix contains non-finite entries"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Diagonal matrix with real entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(d, 0.0);
        }
        m
    }

    /// Rank-one operator `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i])
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Matrix product, or a dimension error.
    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.matmul_unchecked(other))
    }

    fn matmul_unchecked(&self, other: &Self) -> Self {
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![C64::new(0.0, 0.0); n * p];
        for i in 0..n {
            let row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[k * p..(k + 1) * p];
                for (o, b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix {
            rows: n,
            cols: p,
            data: out,
        }
    }

    /// Matrix-vector product.
    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `self * inner * self`, the sandwich used by the sandwiched divergences.
    pub fn sandwich(&self, inner: &Self) -> Self {
        &(self * inner) * self
    }

    /// `u * self * u^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    /// Real part of the trace.
    pub fn trace_re(&self) -> f64 {
        self.trace().re
    }

    /// `Re tr(self * other)`, the real Hilbert-Schmidt pairing for Hermitian operands.
    pub fn re_trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = 0.0;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                let b = other.data[k * other.cols + i];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry of `|M - M^dagger|`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = self.data[i * n + j] - self.data[j * n + i].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitize(&self) -> Self {
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
            }
        }
        out
    }

    /// Hermitizes a near-Hermitian square matrix and rejects anything else.
    pub fn ensure_hermitian(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::dimension(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !self.is_finite() {
            return Err(Error::validation("matrix contains non-finite entries"));
        }
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::validation(format!(
                "matrix is not Hermitian (asymmetry {defect:.3e})"
            )));
        }
        Ok(self.hermitize())
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r1, c1, r2, c2) = (self.rows, self.cols, other.rows, other.cols);
        let mut out = Self::zeros(r1 * r2, c1 * c2);
        let oc = c1 * c2;
        for i1 in 0..r1 {
            for j1 in 0..c1 {
                let a = self.data[i1 * c1 + j1];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for i2 in 0..r2 {
                    let row = (i1 * r2 + i2) * oc + j1 * c2;
                    for j2 in 0..c2 {
                        out.data[row + j2] = a * other.data[i2 * c2 + j2];
                    }
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    /// Panics on incompatible shapes; use [`ComplexMatrix::try_matmul`] for fallible products.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "cannot multiply {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        self.matmul_unchecked(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-1.0)
    }
}

/// Kronecker product of two operators.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Kronecker product of a list of operators, left to right.
pub fn tensor_product_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut it = factors.iter();
    let first = match it.next() {
        Some(f) => (*f).clone(),
        None => return ComplexMatrix::identity(1),
    };
    it.fold(first, |acc, f| acc.kron(f))
}

/// Kronecker product of state vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Spectral decomposition `M = U diag(values) U^dagger` with ascending eigenvalues.
///
/// Column `k` of `vectors` is the eigenvector for `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Scalar functions with accurate divided differences, used for Frechet derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralFn {
    /// `x^p` restricted to the support.
    Power(f64),
    /// Natural logarithm restricted to the support.
    Ln,
    /// Exponential on the whole spectrum.
    Exp,
}

impl SpectralFn {
    fn restricted_to_support(self) -> bool {
        !matches!(self, SpectralFn::Exp)
    }

    fn value(self, x: f64) -> f64 {
        match self {
            SpectralFn::Power(p) => x.powf(p),
            SpectralFn::Ln => x.ln(),
            SpectralFn::Exp => x.exp(),
        }
    }

    /// `(f(a) - f(b)) / (a - b)`, or `f'(a)` when `a == b`, evaluated without cancellation.
    fn divided_difference(self, a: f64, b: f64) -> f64 {
        match self {
            SpectralFn::Exp => {
                let d = a - b;
                if d == 0.0 {
                    a.exp()
                } else {
                    b.exp() * d.exp_m1() / d
                }
            }
            SpectralFn::Ln => {
                let l = (a / b).ln();
                if l == 0.0 {
                    1.0 / b
                } else {
                    l / (b * l.exp_m1())
                }
            }
            SpectralFn::Power(p) => {
                let l = (a / b).ln();
                if l == 0.0 {
                    p * b.powf(p - 1.0)
                } else {
                    b.powf(p - 1.0) * (p * l).exp_m1() / l.exp_m1()
                }
            }
        }
    }
}

impl HermitianEigenSystem {
    /// Dimension of the underlying space.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Largest eigenvalue (negative infinity for an empty system).
    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Smallest eigenvalue.
    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    /// Absolute threshold below which eigenvalues count as kernel.
    pub fn kernel_threshold(&self, eps: f64) -> f64 {
        eps * self.max_value().max(0.0)
    }

    /// Mask of eigenvalues strictly above the kernel threshold.
    pub fn support_mask(&self, eps: f64) -> Vec<bool> {
        let t = self.kernel_threshold(eps);
        self.values.iter().map(|&v| v > t).collect()
    }

    /// `U diag(f(lambda)) U^dagger`.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> ComplexMatrix {
        let weights: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        self.apply_weights(&weights)
    }

    /// `U diag(w) U^dagger` for explicit weights.
    pub fn apply_weights(&self, weights: &[f64]) -> ComplexMatrix {
        let n = self.dim();
        let u = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let uik = u[(i, k)] * w;
                if uik.re == 0.0 && uik.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += uik * u[(j, k)].conj();
                }
            }
        }
        out
    }

    /// Rebuilds the matrix from its eigen-decomposition.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|x| x)
    }

    /// `M^p` on the support of `M` (kernel mapped to zero, `p = 0` gives the support projector).
    pub fn power_on_support(&self, p: f64, eps: f64) -> ComplexMatrix {
        let t = self.kernel_threshold(eps);
        self.apply(|x| if x > t { x.powf(p) } else { 0.0 })
    }

    /// Projector onto the support.
    pub fn support_projector(&self, eps: f64) -> ComplexMatrix {
        self.power_on_support(0.0, eps)
    }

    /// Natural logarithm on the support.
    pub fn ln_on_support(&self, eps: f64) -> ComplexMatrix {
        let t = self.kernel_threshold(eps);
        self.apply(|x| if x > t { x.ln() } else { 0.0 })
    }

    /// Eigen-decomposition of `self (x) other` without a new diagonalization.
    pub fn kron(&self, other: &Self) -> Self {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(self.dim() * other.dim());
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                pairs.push((self.values[i] * other.values[j], i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (na, nb) = (self.dim(), other.dim());
        let n = na * nb;
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (col, &(_, i, j)) in pairs.iter().enumerate() {
            for a in 0..na {
                let ua = self.vectors[(a, i)];
                for b in 0..nb {
                    vectors.data[(a * nb + b) * n + col] = ua * other.vectors[(b, j)];
                }
            }
        }
        HermitianEigenSystem {
            values: pairs.iter().map(|p| p.0).collect(),
            vectors,
        }
    }

    /// Frechet derivative of `X -> f(X)` at this operator applied to the Hermitian
    /// direction `k` (Daleckii-Krein formula). The map is self-adjoint with respect
    /// to `Re tr(A B)`, so the same call also pulls gradients back through `f`.
    ///
    /// For support-restricted functions the kernel rows and columns are zeroed.
    pub fn frechet(&self, f: SpectralFn, k: &ComplexMatrix, eps: f64) -> ComplexMatrix {
        let n = self.dim();
        let u = &self.vectors;
        let mut inner = &(&u.adjoint() * k) * u;
        let mask = if f.restricted_to_support() {
            self.support_mask(eps)
        } else {
            vec![true; n]
        };
        for i in 0..n {
            for j in 0..n {
                let g = if mask[i] && mask[j] {
                    let (a, b) = (self.values[i], self.values[j]);
                    if a == b {
                        f.divided_difference(a, a)
                    } else if matches!(f, SpectralFn::Exp) {
                        f.divided_difference(a, b)
                    } else if (a - b).abs() <= 1e-300 {
                        f.divided_difference(a, a)
                    } else {
                        let direct = (f.value(a) - f.value(b)) / (a - b);
                        if (a - b).abs() > 0.5 * a.abs().max(b.abs()) {
                            direct
                        } else {
                            f.divided_difference(a, b)
                        }
                    }
                } else {
                    0.0
                };
                inner.data[i * n + j] *= g;
            }
        }
        &(u * &inner) * &u.adjoint()
    }
}

/// Diagonalizes a Hermitian matrix (near-Hermitian inputs are symmetrized first).
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigenSystem> {
    let h = m.ensure_hermitian()?;
    Ok(jacobi_eigh(&h))
}

/// Diagonalizes a matrix the caller guarantees to be Hermitian.
pub(crate) fn eigh_trusted(m: &ComplexMatrix) -> HermitianEigenSystem {
    jacobi_eigh(&m.hermitize())
}

fn jacobi_eigh(m: &ComplexMatrix) -> HermitianEigenSystem {
    let n = m.rows;
    let mut a = m.data.clone();
    let mut v = ComplexMatrix::identity(n).data;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotations = 0;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = apq.norm();
                // Off-diagonal entries are compared with their diagonal neighbours rather
                // than with the whole matrix, so that small eigenvalues of graded
                // positive matrices keep their relative accuracy.
                let local = (a[p * n + p].re * a[q * n + q].re).abs().sqrt();
                if g <= JACOBI_RELATIVE_TOL * local || g <= JACOBI_ABSOLUTE_FLOOR {
                    a[p * n + q] = C64::new(0.0, 0.0);
                    a[q * n + p] = C64::new(0.0, 0.0);
                    continue;
                }
                rotations += 1;
                let phase = apq / g;
                let phase_c = phase.conj();
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * phase_c * s;
                    a[k * n + q] = akp * s + akq * phase_c * c;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * phase * s;
                    a[q * n + k] = apk * s + aqk * phase * c;
                }
                a[p * n + q] = C64::new(0.0, 0.0);
                a[q * n + p] = C64::new(0.0, 0.0);
                a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = C64::new(a[q * n + q].re, 0.0);
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - vkq * phase_c * s;
                    v[k * n + q] = vkp * s + vkq * phase_c * c;
                }
            }
        }
        if rotations == 0 {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| v[i * n + order[k]]);
    HermitianEigenSystem { values, vectors }
}

/// `M^p` on the support of a positive semidefinite `M`.
///
/// Eigenvalues at or below `DEFAULT_KERNEL_EPS * lambda_max` are treated as kernel.
/// A clearly negative eigenvalue is a validation error.
pub fn mat_power_on_support(m: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    mat_power_on_support_with(m, p, DEFAULT_KERNEL_EPS)
}

/// [`mat_power_on_support`] with an explicit relative kernel threshold.
pub fn mat_power_on_support_with(m: &ComplexMatrix, p: f64, eps: f64) -> Result<ComplexMatrix> {
    if !p.is_finite() {
        return Err(Error::validation("matrix power exponent must be finite"));
    }
    let eig = eigh(m)?;
    check_psd(&eig)?;
    Ok(eig.power_on_support(p, eps))
}

/// Rejects eigen-systems with eigenvalues clearly below zero.
pub fn check_psd(eig: &HermitianEigenSystem) -> Result<()> {
    let tol = HERMITIAN_TOL * eig.max_value().abs().max(1.0);
    if eig.min_value() < -tol {
        return Err(Error::validation(format!(
            "operator is not positive semidefinite (eigenvalue {:.3e})",
            eig.min_value()
        )));
    }
    Ok(())
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let gram = if m.rows <= m.cols {
        m * &m.adjoint()
    } else {
        &m.adjoint() * m
    };
    let eig = eigh_trusted(&gram);
    let mut s: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0).sqrt()).collect();
    s.reverse();
    s
}

/// Schatten `p`-(quasi)norm for `p > 0`; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::validation(format!("Schatten index must be positive, got {p}")));
    }
    let s = singular_values(m);
    if p.is_infinite() {
        return Ok(s.first().copied().unwrap_or(0.0));
    }
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = s.iter().map(|&x| (x / smax).powf(p)).sum();
    Ok(smax * sum.powf(1.0 / p))
}

fn check_shape(shape: &[usize], n: usize) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::dimension("subsystem dimensions must be positive"));
    }
    let total: usize = shape.iter().product();
    if total != n {
        return Err(Error::dimension(format!(
            "subsystem dimensions {shape:?} multiply to {total}, operator has size {n}"
        )));
    }
    Ok(())
}

/// Multi-index decomposition of a flat composite index.
fn digits(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        out[k] = idx % shape[k];
        idx /= shape[k];
    }
}

/// Traces out every subsystem not listed in `keep` (indices into `shape`).
pub fn partial_trace(m: &ComplexMatrix, shape: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::dimension("partial trace needs a square operator"));
    }
    check_shape(shape, m.rows)?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= shape.len()) {
        return Err(Error::dimension(format!(
            "invalid subsystem selection {keep:?} for {} factors",
            shape.len()
        )));
    }
    let n = m.rows;
    let out_dim: usize = keep_sorted.iter().map(|&k| shape[k]).product();
    let mut kept_idx = vec![0usize; n];
    let mut traced_idx = vec![0usize; n];
    let mut d = vec![0usize; shape.len()];
    for i in 0..n {
        digits(i, shape, &mut d);
        let (mut kv, mut tv) = (0usize, 0usize);
        for (k, &dk) in d.iter().enumerate() {
            if keep_sorted.binary_search(&k).is_ok() {
                kv = kv * shape[k] + dk;
            } else {
                tv = tv * shape[k] + dk;
            }
        }
        kept_idx[i] = kv;
        traced_idx[i] = tv;
    }
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for i in 0..n {
        for j in 0..n {
            if traced_idx[i] == traced_idx[j] {
                out.data[kept_idx[i] * out_dim + kept_idx[j]] += m.data[i * n + j];
            }
        }
    }
    Ok(out)
}

/// Index map for a reordering of tensor factors: output factor `k` is input factor `perm[k]`.
fn permutation_map(shape: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; shape.len()];
    if perm.len() != shape.len() {
        return Err(Error::dimension("permutation length does not match the factor count"));
    }
    for &p in perm {
        if p >= shape.len() || seen[p] {
            return Err(Error::dimension(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let n: usize = shape.iter().product();
    let new_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let mut d = vec![0usize; shape.len()];
    let mut map = vec![0usize; n];
    for (i, slot) in map.iter_mut().enumerate() {
        digits(i, shape, &mut d);
        let mut idx = 0;
        for (k, &p) in perm.iter().enumerate() {
            idx = idx * new_shape[k] + d[p];
        }
        *slot = idx;
    }
    Ok(map)
}

/// Reorders tensor factors of an operator: output factor `k` is input factor `perm[k]`.
pub fn permute_subsystems(m: &ComplexMatrix, shape: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::dimension("subsystem permutation needs a square operator"));
    }
    check_shape(shape, m.rows)?;
    let map = permutation_map(shape, perm)?;
    let n = m.rows;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.data[map[i] * n + map[j]] = m.data[i * n + j];
        }
    }
    Ok(out)
}

/// Reorders tensor factors of a state vector.
pub fn permute_vector(v: &[C64], shape: &[usize], perm: &[usize]) -> Result<Vec<C64>> {
    check_shape(shape, v.len())?;
    let map = permutation_map(shape, perm)?;
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (i, &z) in v.iter().enumerate() {
        out[map[i]] = z;
    }
    Ok(out)
}

/// How the support of `rho` sits relative to the support of `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportRelation {
    /// `supp(rho)` is contained in `supp(sigma)`.
    Dominates,
    /// `rho` has no weight on `supp(sigma)`.
    Perpendicular,
    /// Partial overlap.
    Neither,
}

/// Support relation of `rho` (positive semidefinite) with respect to `sigma`.
pub fn support_relation(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<SupportRelation> {
    if rho.rows != sigma.rows || !rho.is_square() || !sigma.is_square() {
        return Err(Error::dimension("support relation needs square operators of equal size"));
    }
    let eig = eigh(sigma)?;
    check_psd(&eig)?;
    Ok(support_relation_eig(&rho.hermitize(), &eig, DEFAULT_KERNEL_EPS))
}

/// Support relation against a precomputed eigen-system of `sigma`.
pub(crate) fn support_relation_eig(
    rho: &ComplexMatrix,
    sigma: &HermitianEigenSystem,
    eps: f64,
) -> SupportRelation {
    let mask = sigma.support_mask(eps);
    let n = sigma.dim();
    let total = rho.trace_re().abs().max(f64::MIN_POSITIVE);
    let mut outside = 0.0;
    let mut inside = 0.0;
    for (k, &on) in mask.iter().enumerate() {
        let mut w = 0.0;
        for i in 0..n {
            let ui = sigma.vectors[(i, k)].conj();
            if ui.re == 0.0 && ui.im == 0.0 {
                continue;
            }
            for j in 0..n {
                w += (ui * rho[(i, j)] * sigma.vectors[(j, k)]).re;
            }
        }
        if on {
            inside += w;
        } else {
            outside += w;
        }
    }
    let tol = SUPPORT_TOL * total.max(1.0);
    if outside <= tol {
        SupportRelation::Dominates
    } else if inside <= tol {
        SupportRelation::Perpendicular
    } else {
        SupportRelation::Neither
    }
}
