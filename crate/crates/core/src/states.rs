//! Density matrices, random state generation, bases, measurement channels and purifications.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianEigenSystem, C64};

/// A density matrix must have trace one up to this tolerance.
pub const TRACE_TOL: f64 = 1e-10;

/// A positive semidefinite, unit-trace operator on a tensor product of finite systems.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    shape: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity (tiny asymmetries are repaired), shape, trace and positivity.
    pub fn new(matrix: ComplexMatrix, shape: &[usize]) -> Result<Self> {
        let h = matrix.ensure_hermitian()?;
        validate_shape(shape, h.rows())?;
        let tr = h.trace_re();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::validation(format!("density matrix has trace {tr}, expected 1")));
        }
        let eig = linalg::eigh_trusted(&h);
        linalg::check_psd(&eig)?;
        Ok(DensityMatrix {
            matrix: h,
            shape: shape.to_vec(),
        })
    }

    /// Single-system density matrix.
    pub fn single(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.rows();
        Self::new(matrix, &[n])
    }

    /// Diagonal (classical) state with the given probabilities.
    pub fn diagonal(probabilities: &[f64], shape: &[usize]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(probabilities), shape)
    }

    /// `|psi><psi|` for a state vector; the vector is normalized first.
    pub fn from_pure(vector: &[C64], shape: &[usize]) -> Result<Self> {
        let norm = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::validation("pure state vector must be finite and nonzero"));
        }
        let v: Vec<C64> = vector.iter().map(|z| z / norm).collect();
        validate_shape(shape, v.len())?;
        Ok(DensityMatrix {
            matrix: ComplexMatrix::outer(&v, &v),
            shape: shape.to_vec(),
        })
    }

    /// `I / d` on the given shape.
    pub fn maximally_mixed(shape: &[usize]) -> Result<Self> {
        let d: usize = shape.iter().product();
        validate_shape(shape, d)?;
        Ok(DensityMatrix {
            matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64),
            shape: shape.to_vec(),
        })
    }

    /// Wraps an operator produced by a trusted computation from valid states.
    pub(crate) fn from_trusted(matrix: ComplexMatrix, shape: &[usize]) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), matrix.rows());
        DensityMatrix {
            matrix: matrix.hermitize(),
            shape: shape.to_vec(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Dimension of factor `k`.
    pub fn factor_dim(&self, k: usize) -> usize {
        self.shape[k]
    }

    /// Requires exactly two tensor factors and returns their dimensions.
    pub fn bipartite_dims(&self) -> Result<(usize, usize)> {
        if self.shape.len() != 2 {
            return Err(Error::dimension(format!(
                "expected a bipartite state, got shape {:?}",
                self.shape
            )));
        }
        Ok((self.shape[0], self.shape[1]))
    }

    /// Reduced state on the listed factors.
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = linalg::partial_trace(&self.matrix, &self.shape, keep)?;
        let mut ks = keep.to_vec();
        ks.sort_unstable();
        let shape: Vec<usize> = ks.iter().map(|&k| self.shape[k]).collect();
        Ok(Self::from_trusted(m, &shape))
    }

    /// Reorders tensor factors: output factor `k` is input factor `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<DensityMatrix> {
        let m = linalg::permute_subsystems(&self.matrix, &self.shape, perm)?;
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        Ok(DensityMatrix { matrix: m, shape })
    }

    /// Exchanges the two factors of a bipartite state.
    pub fn swap(&self) -> Result<DensityMatrix> {
        self.bipartite_dims()?;
        self.permute(&[1, 0])
    }

    /// Eigen-decomposition of the state.
    pub fn eigen(&self) -> HermitianEigenSystem {
        linalg::eigh_trusted(&self.matrix)
    }

    /// Purity `tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.matrix.re_trace_product(&self.matrix)
    }

    /// Applies a unitary on the whole space.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<DensityMatrix> {
        if u.rows() != self.dim() || !u.is_square() {
            return Err(Error::dimension("unitary size does not match the state"));
        }
        Ok(Self::from_trusted(self.matrix.conjugate_by(u), &self.shape))
    }

    /// Tensor product of two states.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        DensityMatrix {
            matrix: self.matrix.kron(&other.matrix),
            shape,
        }
    }
}

fn validate_shape(shape: &[usize], n: usize) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::dimension("subsystem dimensions must be positive"));
    }
    let total: usize = shape.iter().product();
    if total != n {
        return Err(Error::dimension(format!(
            "shape {shape:?} has total dimension {total}, operator has size {n}"
        )));
    }
    Ok(())
}

/// Families of random states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// Haar-random pure state on the whole space.
    HaarPure,
    /// Hilbert-Schmidt mixed state: partial trace of a Haar pure state with a same-size ancilla.
    HsMixed,
    /// Tensor product of independent Hilbert-Schmidt states on each factor.
    Product,
    /// Random joint distribution placed on the diagonal of a bipartite space.
    ClassicalQuantum,
    /// Maximally entangled state of Schmidt rank `min(dA, dB)`.
    MaxEntangled,
    /// `sum_y p_y rho_y (x) |y><y|`: random quantum states on factor 0 correlated with a
    /// classical memory on factor 1.
    ClassicalMemory,
}

/// Mixes a parent seed with a stream index (SplitMix64 finalizer).
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    let mut z = parent ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-random unit vector in dimension `d`.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the diagonal of `R` made positive.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    orthonormalize_columns(&g)
}

/// Gram-Schmidt (two passes) on the columns; each column keeps a positive component
/// along its own direction, which fixes the phase freedom of the QR factorization.
fn orthonormalize_columns(g: &ComplexMatrix) -> ComplexMatrix {
    let d = g.rows();
    let mut cols: Vec<Vec<C64>> = (0..g.cols()).map(|j| g.column(j)).collect();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for k in 0..j {
                let proj: C64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let qk = cols[k].clone();
                for (x, q) in cols[j].iter_mut().zip(&qk) {
                    *x -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(d, cols.len(), |i, j| cols[j][i])
}

/// Draws a random state of the requested family. Deterministic in `seed`.
pub fn random_state(kind: StateKind, shape: &[usize], seed: u64) -> Result<DensityMatrix> {
    let d: usize = shape.iter().product();
    validate_shape(shape, d)?;
    let mut rng = rng_from_seed(seed);
    match kind {
        StateKind::HaarPure => {
            let v = haar_vector(d, &mut rng);
            DensityMatrix::from_pure(&v, shape)
        }
        StateKind::HsMixed => Ok(hs_mixed(shape, &mut rng)),
        StateKind::Product => {
            let mut out: Option<DensityMatrix> = None;
            for &dk in shape {
                let f = hs_mixed(&[dk], &mut rng);
                out = Some(match out {
                    None => f,
                    Some(acc) => acc.tensor(&f),
                });
            }
            Ok(out.expect("shape is non-empty"))
        }
        StateKind::ClassicalQuantum => {
            if shape.len() != 2 {
                return Err(Error::dimension("classical-quantum states need two factors"));
            }
            let w: Vec<f64> = (0..d).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|x| x / total).collect();
            Ok(DensityMatrix::from_trusted(ComplexMatrix::from_real_diagonal(&p), shape))
        }
        StateKind::MaxEntangled => {
            if shape.len() != 2 {
                return Err(Error::dimension("maximally entangled states need two factors"));
            }
            let (da, db) = (shape[0], shape[1]);
            let r = da.min(db);
            let mut v = vec![C64::new(0.0, 0.0); d];
            for i in 0..r {
                v[i * db + i] = C64::new(1.0, 0.0);
            }
            DensityMatrix::from_pure(&v, shape)
        }
        StateKind::ClassicalMemory => {
            if shape.len() != 2 {
                return Err(Error::dimension("classical-memory states need two factors"));
            }
            let (da, db) = (shape[0], shape[1]);
            let w: Vec<f64> = (0..db).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = w.iter().sum();
            let mut m = ComplexMatrix::zeros(d, d);
            for (y, wy) in w.iter().enumerate() {
                let block = hs_mixed(&[da], &mut rng);
                for i in 0..da {
                    for j in 0..da {
                        m[(i * db + y, j * db + y)] = block.matrix[(i, j)] * (wy / total);
                    }
                }
            }
            Ok(DensityMatrix::from_trusted(m, shape))
        }
    }
}

fn hs_mixed<R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> DensityMatrix {
    let d: usize = shape.iter().product();
    let v = haar_vector(d * d, rng);
    let pure = ComplexMatrix::outer(&v, &v);
    let m = linalg::partial_trace(&pure, &[d, d], &[0]).expect("valid ancilla shape");
    DensityMatrix::from_trusted(m, shape)
}

/// An orthonormal basis stored as the columns of a unitary matrix.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    vectors: ComplexMatrix,
}

impl OrthonormalBasis {
    /// Validates that the columns are orthonormal.
    pub fn new(vectors: ComplexMatrix) -> Result<Self> {
        if !vectors.is_square() {
            return Err(Error::dimension("basis matrix must be square"));
        }
        let g = &vectors.adjoint() * &vectors;
        let err = (&g - &ComplexMatrix::identity(vectors.rows())).max_abs();
        if !err.is_finite() || err > 1e-10 {
            return Err(Error::validation(format!("basis is not orthonormal (defect {err:.3e})")));
        }
        Ok(OrthonormalBasis { vectors })
    }

    /// Standard basis.
    pub fn computational(d: usize) -> Self {
        OrthonormalBasis {
            vectors: ComplexMatrix::identity(d),
        }
    }

    /// Discrete Fourier basis, mutually unbiased with the standard basis.
    pub fn fourier(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let vectors = ComplexMatrix::from_fn(d, d, |j, k| {
            let phase = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
            C64::from_polar(s, phase)
        });
        OrthonormalBasis { vectors }
    }

    /// Haar-random basis.
    pub fn haar(d: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        OrthonormalBasis {
            vectors: random_unitary(d, &mut rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    /// The unitary whose columns are the basis vectors.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.vectors
    }

    /// Basis vector `k`.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }
}

/// Two measurement bases on the same system.
#[derive(Clone, Debug)]
pub struct MeasurementPair {
    pub x: OrthonormalBasis,
    pub z: OrthonormalBasis,
}

impl MeasurementPair {
    pub fn new(x: OrthonormalBasis, z: OrthonormalBasis) -> Result<Self> {
        if x.dim() != z.dim() {
            return Err(Error::dimension("measurement bases act on different dimensions"));
        }
        Ok(MeasurementPair { x, z })
    }

    /// Standard and Fourier bases.
    pub fn mutually_unbiased(d: usize) -> Self {
        MeasurementPair {
            x: OrthonormalBasis::computational(d),
            z: OrthonormalBasis::fourier(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Maximal overlap `c = max |<e_x|f_z>|^2`.
    pub fn overlap(&self) -> f64 {
        overlap_c(&self.x, &self.z)
    }
}

/// Maximal overlap `max_{x,z} |<e_x|f_z>|^2` of two bases.
pub fn overlap_c(x: &OrthonormalBasis, z: &OrthonormalBasis) -> f64 {
    let g = &x.vectors.adjoint() * &z.vectors;
    g.as_slice().iter().map(|w| w.norm_sqr()).fold(0.0, f64::max)
}

/// Pinching of the first factor in `basis`: `sum_x (P_x (x) I) rho (P_x (x) I)`.
///
/// The result is the post-measurement state with the outcome register written in
/// the measured basis itself, so the map is idempotent.
pub fn pinch_measure(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<DensityMatrix> {
    let d = rho.shape[0];
    if basis.dim() != d {
        return Err(Error::dimension(format!(
            "basis of dimension {} cannot measure a factor of dimension {d}",
            basis.dim()
        )));
    }
    let rest = rho.dim() / d;
    let w = basis.vectors.adjoint().kron(&ComplexMatrix::identity(rest));
    let mut inner = rho.matrix.conjugate_by(&w);
    let n = rho.dim();
    for i in 0..n {
        for j in 0..n {
            if i / rest != j / rest {
                inner[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    let u = basis.vectors.kron(&ComplexMatrix::identity(rest));
    Ok(DensityMatrix::from_trusted(inner.conjugate_by(&u), &rho.shape))
}

/// Stinespring dilation of the measurement of the first factor:
/// `V = sum_z |f_z>|f_z><f_z|`, output factors `(Z, Z', rest...)`.
pub fn stinespring_measure(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<DensityMatrix> {
    let d = rho.shape[0];
    if basis.dim() != d {
        return Err(Error::dimension("basis dimension does not match the measured factor"));
    }
    let mut v = ComplexMatrix::zeros(d * d, d);
    for z in 0..d {
        let f = basis.vector(z);
        let ff = linalg::kron_vec(&f, &f);
        for (r, amp) in ff.iter().enumerate() {
            for c in 0..d {
                v[(r, c)] += amp * f[c].conj();
            }
        }
    }
    let rest = rho.dim() / d;
    let iso = v.kron(&ComplexMatrix::identity(rest));
    let out = &(&iso * &rho.matrix) * &iso.adjoint();
    let mut shape = vec![d, d];
    shape.extend_from_slice(&rho.shape[1..]);
    Ok(DensityMatrix::from_trusted(out, &shape))
}

/// A pure state vector together with its tensor shape.
#[derive(Clone, Debug)]
pub struct PureState {
    pub amplitudes: Vec<C64>,
    pub shape: Vec<usize>,
}

impl PureState {
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(ComplexMatrix::outer(&self.amplitudes, &self.amplitudes), &self.shape)
    }
}

/// Canonical purification `sum_i sqrt(lambda_i) |v_i>|i>` with the purifying factor
/// appended last (its dimension equals the dimension of `rho`). Eigenvalues are used in
/// descending order, so a pure input is purified as `|psi> (x) |0>`. Eigenvalues below
/// the kernel threshold are treated as zero.
pub fn purify_vector(rho: &DensityMatrix) -> PureState {
    let eig = rho.eigen();
    let kernel = eig.kernel_threshold(linalg::DEFAULT_KERNEL_EPS);
    let n = rho.dim();
    let mut amplitudes = vec![C64::new(0.0, 0.0); n * n];
    for (anc, k) in (0..n).rev().enumerate() {
        let lam = eig.values[k];
        if lam <= kernel {
            continue;
        }
        let s = lam.sqrt();
        for i in 0..n {
            amplitudes[i * n + anc] = eig.vectors[(i, k)] * s;
        }
    }
    let mut shape = rho.shape.clone();
    shape.push(n);
    PureState { amplitudes, shape }
}

/// Density matrix of the canonical purification.
pub fn purify(rho: &DensityMatrix) -> DensityMatrix {
    purify_vector(rho).density()
}

/// Operator form of a vector on a tensor product: the linear map from the factors in
/// `inputs` to the remaining factors, fixed by `|e_i> (x) |f_j> -> |f_j><e_i|`.
#[derive(Clone, Debug)]
pub struct OperatorForm {
    pub matrix: ComplexMatrix,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
}

/// Builds the operator form of `psi` mapping the `inputs` factors to the others
/// (outputs keep their original order, inputs follow the order given).
pub fn op_vec(psi: &[C64], shape: &[usize], inputs: &[usize]) -> Result<OperatorForm> {
    let (in_pos, out_pos) = split_factors(shape, inputs, psi.len())?;
    let input_shape: Vec<usize> = in_pos.iter().map(|&k| shape[k]).collect();
    let output_shape: Vec<usize> = out_pos.iter().map(|&k| shape[k]).collect();
    let din: usize = input_shape.iter().product();
    let dout: usize = output_shape.iter().product();
    let mut m = ComplexMatrix::zeros(dout, din);
    let mut d = vec![0usize; shape.len()];
    for (idx, &amp) in psi.iter().enumerate() {
        multi_index(idx, shape, &mut d);
        let i = in_pos.iter().fold(0, |acc, &k| acc * shape[k] + d[k]);
        let o = out_pos.iter().fold(0, |acc, &k| acc * shape[k] + d[k]);
        m[(o, i)] = amp;
    }
    Ok(OperatorForm {
        matrix: m,
        input_shape,
        output_shape,
    })
}

/// Inverse of [`op_vec`].
pub fn vec_op(form: &OperatorForm, shape: &[usize], inputs: &[usize]) -> Result<Vec<C64>> {
    let n: usize = shape.iter().product();
    let (in_pos, out_pos) = split_factors(shape, inputs, n)?;
    let din: usize = in_pos.iter().map(|&k| shape[k]).product();
    let dout: usize = out_pos.iter().map(|&k| shape[k]).product();
    if form.matrix.rows() != dout || form.matrix.cols() != din {
        return Err(Error::dimension("operator form does not match the requested shape"));
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut d = vec![0usize; shape.len()];
    for (idx, slot) in out.iter_mut().enumerate() {
        multi_index(idx, shape, &mut d);
        let i = in_pos.iter().fold(0, |acc, &k| acc * shape[k] + d[k]);
        let o = out_pos.iter().fold(0, |acc, &k| acc * shape[k] + d[k]);
        *slot = form.matrix[(o, i)];
    }
    Ok(out)
}

fn split_factors(shape: &[usize], inputs: &[usize], len: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    validate_shape(shape, len)?;
    let mut seen = vec![false; shape.len()];
    for &k in inputs {
        if k >= shape.len() || seen[k] {
            return Err(Error::dimension(format!("invalid input factors {inputs:?}")));
        }
        seen[k] = true;
    }
    let outputs = (0..shape.len()).filter(|&k| !seen[k]).collect();
    Ok((inputs.to_vec(), outputs))
}

fn multi_index(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        out[k] = idx % shape[k];
        idx /= shape[k];
    }
}
