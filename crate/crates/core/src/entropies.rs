//! Sandwiched Rényi divergences, Rényi entropies and conditional entropies.
//!
//! All logarithms are base two, so every value is in bits.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianEigenSystem, SpectralFn, SupportRelation, DEFAULT_KERNEL_EPS};
use crate::optimize::{optimize_blocks, DensityObjective, OptResult, Sense, SimplexOptConfig};
use crate::orders::RenyiOrder;
use crate::states::DensityMatrix;

/// An entropic quantity in bits; may be `+inf` or `-inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EntropicValue(pub f64);

impl EntropicValue {
    pub fn bits(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for EntropicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

impl Neg for EntropicValue {
    type Output = EntropicValue;
    fn neg(self) -> EntropicValue {
        EntropicValue(-self.0)
    }
}

impl Add for EntropicValue {
    type Output = EntropicValue;
    fn add(self, rhs: EntropicValue) -> EntropicValue {
        EntropicValue(self.0 + rhs.0)
    }
}

impl Sub for EntropicValue {
    type Output = EntropicValue;
    fn sub(self, rhs: EntropicValue) -> EntropicValue {
        EntropicValue(self.0 - rhs.0)
    }
}

const LN2: f64 = std::f64::consts::LN_2;

/// `sigma^s rho sigma^s` expressed in the eigenbasis of `sigma`, where it is the graded
/// matrix `D A D` with `D = diag(sigma_i^s)` on the support and `A = U^dag rho U`.
/// Diagonalizing the graded form keeps its small eigenvalues relatively accurate, which
/// matters for small orders where `s` is large and those eigenvalues are raised to a
/// small power.
struct Sandwich {
    /// Diagonal of `D`.
    weights: Vec<f64>,
    /// `A = U^dag rho U`.
    rotated: ComplexMatrix,
    /// Eigen-system of `D A D`, in the eigenbasis of `sigma`.
    eig: HermitianEigenSystem,
    /// Eigenvalues counted as support of the sandwich.
    keep: Vec<bool>,
}

impl Sandwich {
    fn new(rho: &ComplexMatrix, sigma: &HermitianEigenSystem, s: f64, eps: f64) -> Sandwich {
        let t = sigma.kernel_threshold(eps);
        let weights: Vec<f64> = sigma.values.iter().map(|&v| if v > t { v.powf(s) } else { 0.0 }).collect();
        let u = &sigma.vectors;
        let rotated = (&(&u.adjoint() * rho) * u).hermitize();
        let n = weights.len();
        let graded = ComplexMatrix::from_fn(n, n, |i, j| rotated[(i, j)] * (weights[i] * weights[j]));
        let eig = linalg::eigh_trusted(&graded);
        let top = eig.max_value();
        let cutoff = eig.kernel_threshold(eps);
        let keep = if eig.values.iter().all(|&v| v > cutoff) || !(top > 0.0) {
            eig.values.iter().map(|&v| v > cutoff).collect()
        } else {
            // Eigenvalues below the relative cutoff are either genuine kernel or a wide
            // dynamic range from the power; the rank of `A` on the support of `sigma`
            // (which `D` does not change) tells them apart.
            let support: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
            let block = ComplexMatrix::from_fn(support.len(), support.len(), |i, j| rotated[(support[i], support[j])]);
            let block_eig = linalg::eigh_trusted(&block);
            let block_cutoff = block_eig.kernel_threshold(eps);
            let rank = block_eig.values.iter().filter(|&&v| v > block_cutoff).count();
            (0..n).map(|k| k + rank >= n && eig.values[k] > 0.0).collect()
        };
        Sandwich { weights, rotated, eig, keep }
    }

    /// `(lambda_max, sum (lambda / lambda_max)^alpha)` over the kept spectrum, or `None`
    /// for a zero operator.
    fn scaled_power_sum(&self, alpha: f64) -> Option<(f64, f64)> {
        let top = self.eig.max_value();
        if !(top > 0.0) {
            return None;
        }
        let q = self
            .eig
            .values
            .iter()
            .zip(&self.keep)
            .filter(|(_, &k)| k)
            .map(|(v, _)| (v / top).powf(alpha))
            .sum();
        Some((top, q))
    }
}

/// `log2 tr[(sigma^s rho sigma^s)^alpha]` with `s = (1 - alpha) / (2 alpha)` and powers
/// taken on supports. Evaluated relative to the largest eigenvalue so that large
/// orders do not overflow. Returns `-inf` when the trace vanishes.
pub(crate) fn log2_sandwiched_trace(rho: &ComplexMatrix, sigma: &HermitianEigenSystem, alpha: f64, eps: f64) -> f64 {
    let s = (1.0 - alpha) / (2.0 * alpha);
    Sandwich::new(rho, sigma, s, eps)
        .scaled_power_sum(alpha)
        .map_or(f64::NEG_INFINITY, |(top, q)| alpha * top.log2() + q.log2())
}

/// `sum_i lambda_i log2 lambda_i` over the spectrum of `rho`.
fn neg_entropy_bits(rho: &ComplexMatrix, eps: f64) -> f64 {
    let e = linalg::eigh_trusted(rho);
    let t = e.kernel_threshold(eps);
    e.values.iter().filter(|&&v| v > t).map(|v| v * v.log2()).sum()
}

/// Divergence against a precomputed eigen-system of the second argument.
/// `rho` must be positive semidefinite; `sigma` need not be normalized.
pub(crate) fn divergence_eig(rho: &ComplexMatrix, sigma: &HermitianEigenSystem, alpha: RenyiOrder, eps: f64) -> f64 {
    divergence_core(rho, sigma, alpha, eps, false).0
}

/// Divergence together with its gradient with respect to `sigma` (when smooth).
pub(crate) fn divergence_and_gradient(
    rho: &ComplexMatrix,
    sigma: &HermitianEigenSystem,
    alpha: RenyiOrder,
    eps: f64,
) -> (f64, Option<ComplexMatrix>) {
    divergence_core(rho, sigma, alpha, eps, true)
}

fn divergence_core(
    rho: &ComplexMatrix,
    sigma: &HermitianEigenSystem,
    alpha: RenyiOrder,
    eps: f64,
    want_gradient: bool,
) -> (f64, Option<ComplexMatrix>) {
    let relation = linalg::support_relation_eig(rho, sigma, eps);
    if relation == SupportRelation::Perpendicular {
        return (f64::INFINITY, None);
    }
    let a = alpha.value();
    if a >= 1.0 && relation != SupportRelation::Dominates {
        return (f64::INFINITY, None);
    }
    if alpha.is_infinite() {
        let inv_sqrt = sigma.power_on_support(-0.5, eps);
        let m = inv_sqrt.sandwich(rho);
        let top = linalg::eigh_trusted(&m).max_value();
        return (top.log2(), None);
    }
    if alpha.is_one() {
        let log_sigma = sigma.ln_on_support(eps);
        let cross = rho.re_trace_product(&log_sigma) / LN2;
        let value = neg_entropy_bits(rho, eps) - cross;
        let grad = want_gradient.then(|| sigma.frechet(SpectralFn::Ln, rho, eps).scale(-1.0 / LN2));
        return (value, grad);
    }
    let s = (1.0 - a) / (2.0 * a);
    let sandwich = Sandwich::new(rho, sigma, s, eps);
    let Some((top, q)) = sandwich.scaled_power_sum(a) else {
        return (f64::INFINITY, None);
    };
    let value = (a * top.log2() + q.log2()) / (a - 1.0);
    if !want_gradient {
        return (value, None);
    }
    // Gradient of log Q: (alpha / Q) DF_s[rho S M^(alpha-1) + h.c.], with M^(alpha-1) / Q
    // rewritten through M / lambda_max to stay in range. Assembled in the eigenbasis of
    // sigma, where S is the diagonal D.
    let weights: Vec<f64> = sandwich
        .eig
        .values
        .iter()
        .zip(&sandwich.keep)
        .map(|(&v, &k)| if k { (v / top).powf(a - 1.0) } else { 0.0 })
        .collect();
    let m_pow = sandwich.eig.apply_weights(&weights);
    let d = &sandwich.weights;
    let n = d.len();
    let rho_d = ComplexMatrix::from_fn(n, n, |i, j| sandwich.rotated[(i, j)] * d[j]);
    let half = &rho_d * &m_pow;
    let k_rotated = (&half + &half.adjoint()).scale(a / (top * q));
    let u = &sigma.vectors;
    let k = &(u * &k_rotated) * &u.adjoint();
    let grad = sigma.frechet(SpectralFn::Power(s), &k, eps);
    (value, Some(grad.scale(1.0 / ((a - 1.0) * LN2))))
}

/// Sandwiched Rényi divergence `D_alpha(rho || sigma)` in bits.
///
/// `sigma` may be any positive semidefinite operator (not necessarily normalized).
/// Returns `+inf` when the supports are orthogonal, or when `alpha >= 1` and the
/// support of `sigma` does not contain that of `rho`.
pub fn renyi_divergence(rho: &DensityMatrix, sigma: &ComplexMatrix, alpha: RenyiOrder) -> Result<EntropicValue> {
    if sigma.rows() != rho.dim() || !sigma.is_square() {
        return Err(Error::dimension(format!(
            "second argument has size {}x{}, state has dimension {}",
            sigma.rows(),
            sigma.cols(),
            rho.dim()
        )));
    }
    let eig = linalg::eigh(sigma)?;
    linalg::check_psd(&eig)?;
    Ok(EntropicValue(divergence_eig(rho.matrix(), &eig, alpha, DEFAULT_KERNEL_EPS)))
}

/// Rényi entropy of a spectrum.
pub fn entropy_of_spectrum(eigenvalues: &[f64], alpha: RenyiOrder) -> f64 {
    let top = eigenvalues.iter().copied().fold(0.0, f64::max);
    let t = DEFAULT_KERNEL_EPS * top;
    let support = eigenvalues.iter().copied().filter(|&v| v > t);
    if alpha.is_infinite() {
        return -top.log2();
    }
    if alpha.is_one() {
        return -support.map(|v| v * v.log2()).sum::<f64>();
    }
    let a = alpha.value();
    let sum: f64 = support.map(|v| v.powf(a)).sum();
    sum.log2() / (1.0 - a)
}

/// Rényi entropy `H_alpha(rho)` of the whole state.
pub fn entropy(rho: &DensityMatrix, alpha: RenyiOrder) -> EntropicValue {
    EntropicValue(entropy_of_spectrum(&rho.eigen().values, alpha))
}

/// Rényi entropy of the listed factors.
pub fn marginal_entropy(rho: &DensityMatrix, keep: &[usize], alpha: RenyiOrder) -> Result<EntropicValue> {
    Ok(entropy(&rho.marginal(keep)?, alpha))
}

/// Which conditional entropy to evaluate.
#[derive(Clone, Debug)]
pub enum CondVariant {
    /// `-D_alpha(rho_AB || I_A (x) rho_B)`.
    Down,
    /// `-inf_sigma D_alpha(rho_AB || I_A (x) sigma_B)`.
    Up,
    /// `-D_alpha(rho_AB || I_A (x) tau_B)` for a given positive `tau_B`.
    Generalized(ComplexMatrix),
}

/// Conditional entropy `H(A|B)` of a bipartite state (factor 0 conditioned on factor 1).
///
/// The optimized variant uses [`SimplexOptConfig::default`] with a single start for
/// `alpha >= 1/2` (where the problem is convex) and random restarts below; a run that
/// fails to converge is reported as [`Error::NonConvergence`].
pub fn cond_entropy(rho: &DensityMatrix, alpha: RenyiOrder, variant: &CondVariant) -> Result<EntropicValue> {
    let (da, db) = rho.bipartite_dims()?;
    match variant {
        CondVariant::Down => {
            let rb = rho.marginal(&[1])?;
            let omega = ComplexMatrix::identity(da).kron(rb.matrix());
            Ok(-EntropicValue(divergence_eig(
                rho.matrix(),
                &linalg::eigh_trusted(&omega),
                alpha,
                DEFAULT_KERNEL_EPS,
            )))
        }
        CondVariant::Generalized(tau) => {
            if tau.rows() != db || !tau.is_square() {
                return Err(Error::dimension("conditioning operator does not match factor B"));
            }
            let eig = linalg::eigh(tau)?;
            linalg::check_psd(&eig)?;
            let omega_eig = HermitianEigenSystem {
                values: vec![1.0; da],
                vectors: ComplexMatrix::identity(da),
            }
            .kron(&eig);
            Ok(-EntropicValue(divergence_eig(rho.matrix(), &omega_eig, alpha, DEFAULT_KERNEL_EPS)))
        }
        CondVariant::Up => {
            let cfg = default_config_for(alpha);
            let res = cond_entropy_up_detailed(rho, alpha, &cfg)?;
            if !res.converged {
                return Err(Error::NonConvergence {
                    iterations: res.iterations,
                    last_value: res.value,
                });
            }
            Ok(EntropicValue(res.value))
        }
    }
}

/// Optimizer settings used by the convenience entry points: one start where the
/// optimization is convex (`alpha >= 1/2`), random restarts otherwise.
pub fn default_config_for(alpha: RenyiOrder) -> SimplexOptConfig {
    let restarts = if alpha.value() >= 0.5 { 0 } else { 3 };
    SimplexOptConfig::default().with_restarts(restarts)
}

/// `H^up_alpha(A|B)` with the full optimizer report. The reported value is the
/// conditional entropy (the negated minimal divergence), warm-started at `rho_B`.
pub fn cond_entropy_up_detailed(rho: &DensityMatrix, alpha: RenyiOrder, config: &SimplexOptConfig) -> Result<OptResult> {
    let (da, db) = rho.bipartite_dims()?;
    let identity = HermitianEigenSystem {
        values: vec![1.0; da],
        vectors: ComplexMatrix::identity(da),
    };
    let objective = KronDivergence::new(
        rho.matrix().clone(),
        alpha,
        vec![KronFactor::Fixed(identity), KronFactor::Free(db)],
    );
    let warm = vec![rho.marginal(&[1])?.matrix().clone()];
    let cfg = config.clone().with_sense(Sense::Minimize);
    let mut res = optimize_blocks(&objective, &cfg, Some(&warm))?;
    res.value = -res.value;
    for v in res.restart_values.iter_mut() {
        *v = -*v;
    }
    Ok(res)
}

/// One tensor factor of the second argument of a divergence being optimized.
#[derive(Clone, Debug)]
pub(crate) enum KronFactor {
    /// A fixed positive operator, given by its eigen-system.
    Fixed(HermitianEigenSystem),
    /// A free density matrix of the given dimension.
    Free(usize),
}

/// `D_alpha(rho || F_1 (x) F_2 (x) ...)` as a function of the free factors.
pub(crate) struct KronDivergence {
    rho: ComplexMatrix,
    alpha: RenyiOrder,
    factors: Vec<KronFactor>,
    eps: f64,
}

impl KronDivergence {
    pub(crate) fn new(rho: ComplexMatrix, alpha: RenyiOrder, factors: Vec<KronFactor>) -> Self {
        KronDivergence {
            rho,
            alpha,
            factors,
            eps: DEFAULT_KERNEL_EPS,
        }
    }

    fn factor_dims(&self) -> Vec<usize> {
        self.factors
            .iter()
            .map(|f| match f {
                KronFactor::Fixed(e) => e.dim(),
                KronFactor::Free(d) => *d,
            })
            .collect()
    }

    /// Eigen-systems and matrices of every factor for the given free blocks.
    fn assemble(&self, blocks: &[ComplexMatrix]) -> (Vec<HermitianEigenSystem>, Vec<ComplexMatrix>) {
        let mut eigs = Vec::with_capacity(self.factors.len());
        let mut mats = Vec::with_capacity(self.factors.len());
        let mut next = 0;
        for f in &self.factors {
            match f {
                KronFactor::Fixed(e) => {
                    eigs.push(e.clone());
                    mats.push(e.reconstruct());
                }
                KronFactor::Free(_) => {
                    let b = &blocks[next];
                    next += 1;
                    eigs.push(linalg::eigh_trusted(b));
                    mats.push(b.clone());
                }
            }
        }
        (eigs, mats)
    }

    fn product_eig(eigs: &[HermitianEigenSystem]) -> HermitianEigenSystem {
        let mut it = eigs.iter();
        let first = it.next().expect("at least one factor").clone();
        it.fold(first, |acc, e| acc.kron(e))
    }
}

impl DensityObjective for KronDivergence {
    fn block_dims(&self) -> Vec<usize> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                KronFactor::Free(d) => Some(*d),
                KronFactor::Fixed(_) => None,
            })
            .collect()
    }

    fn value(&self, blocks: &[ComplexMatrix]) -> f64 {
        let (eigs, _) = self.assemble(blocks);
        divergence_eig(&self.rho, &Self::product_eig(&eigs), self.alpha, self.eps)
    }

    fn value_and_gradient(&self, blocks: &[ComplexMatrix]) -> Option<(f64, Vec<ComplexMatrix>)> {
        if self.alpha.is_infinite() {
            return None;
        }
        let (eigs, mats) = self.assemble(blocks);
        let (value, grad) = divergence_and_gradient(&self.rho, &Self::product_eig(&eigs), self.alpha, self.eps);
        let dims = self.factor_dims();
        let Some(g) = grad else {
            let zeros = self
                .block_dims()
                .iter()
                .map(|&d| ComplexMatrix::zeros(d, d))
                .collect();
            return Some((value, zeros));
        };
        let mut out = Vec::new();
        for (k, f) in self.factors.iter().enumerate() {
            if let KronFactor::Free(_) = f {
                let parts: Vec<ComplexMatrix> = mats
                    .iter()
                    .enumerate()
                    .map(|(j, m)| if j == k { ComplexMatrix::identity(dims[k]) } else { m.clone() })
                    .collect();
                let refs: Vec<&ComplexMatrix> = parts.iter().collect();
                let weight = linalg::tensor_product_all(&refs);
                let pulled = linalg::partial_trace(&(&weight * &g), &dims, &[k]).expect("consistent factor dims");
                out.push(pulled.hermitize());
            }
        }
        Some((value, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{random_state, StateKind};

    fn o(x: f64) -> RenyiOrder {
        RenyiOrder::new(x).unwrap()
    }

    fn diag_state(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p, &[p.len()]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let rho = diag_state(&[0.75, 0.25]);
        assert!((entropy(&rho, o(2.0)).bits() - (8.0f64 / 5.0).log2()).abs() < 1e-14);
        assert!((entropy(&rho, RenyiOrder::INFINITY).bits() - (4.0f64 / 3.0).log2()).abs() < 1e-14);
        let half = 2.0 * ((3f64.sqrt() + 1.0) / 2.0).log2();
        assert!((entropy(&rho, o(0.5)).bits() - half).abs() < 1e-14);
        let h1 = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((entropy(&rho, RenyiOrder::ONE).bits() - h1).abs() < 1e-14);
    }

    #[test]
    fn commuting_divergence_example() {
        let rho = diag_state(&[0.5, 0.5]);
        let sigma = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        let d = renyi_divergence(&rho, &sigma, o(2.0)).unwrap().bits();
        assert!((d - (4.0f64 / 3.0).log2()).abs() < 1e-14);
    }

    #[test]
    fn support_conventions() {
        let rho = diag_state(&[1.0, 0.0]);
        let orth = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        for a in [0.5, 1.0, 2.0, f64::INFINITY] {
            assert_eq!(renyi_divergence(&rho, &orth, o(a)).unwrap().bits(), f64::INFINITY);
        }
        let mixed = diag_state(&[0.5, 0.5]);
        let pure = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert_eq!(renyi_divergence(&mixed, &pure, o(2.0)).unwrap().bits(), f64::INFINITY);
        assert!(renyi_divergence(&mixed, &pure, o(0.5)).unwrap().is_finite());
    }

    #[test]
    fn divergence_to_identity_is_negative_entropy() {
        let rho = random_state(StateKind::HsMixed, &[3], 4).unwrap();
        for a in [0.3, 0.5, 0.8, 1.0, 1.7, 3.0] {
            let d = renyi_divergence(&rho, &ComplexMatrix::identity(3), o(a)).unwrap().bits();
            assert!((d + entropy(&rho, o(a)).bits()).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_conditional_entropies() {
        let bell = random_state(StateKind::MaxEntangled, &[2, 2], 0).unwrap();
        for a in [0.5, 0.75, 1.0, 2.0, 5.0, f64::INFINITY] {
            let h = cond_entropy(&bell, o(a), &CondVariant::Down).unwrap().bits();
            assert!((h + 1.0).abs() < 1e-10, "alpha {a}: {h}");
        }
    }

    #[test]
    fn infinite_order_is_large_order_limit() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 7).unwrap();
        let sigma = random_state(StateKind::HsMixed, &[2, 2], 8).unwrap();
        let dinf = renyi_divergence(&rho, sigma.matrix(), RenyiOrder::INFINITY).unwrap().bits();
        let dbig = renyi_divergence(&rho, sigma.matrix(), o(1e3)).unwrap().bits();
        assert!((dinf - dbig).abs() < 1e-2, "{dinf} {dbig}");
    }

    #[test]
    fn analytic_gradient_matches_finite_difference() {
        let rho = random_state(StateKind::HsMixed, &[3], 1).unwrap();
        let sigma = random_state(StateKind::HsMixed, &[3], 2).unwrap();
        let dir = random_state(StateKind::HsMixed, &[3], 3).unwrap();
        let dir = dir.matrix() - &ComplexMatrix::identity(3).scale(1.0 / 3.0);
        for a in [0.4, 0.7, 1.0, 1.5, 4.0] {
            let e = linalg::eigh_trusted(sigma.matrix());
            let (_, g) = divergence_and_gradient(rho.matrix(), &e, o(a), 0.0);
            let g = g.unwrap();
            let h = 1e-6;
            let f = |m: &ComplexMatrix| divergence_eig(rho.matrix(), &linalg::eigh_trusted(m), o(a), 0.0);
            let fd = (f(&(sigma.matrix() + &dir.scale(h))) - f(&(sigma.matrix() - &dir.scale(h)))) / (2.0 * h);
            let an = g.re_trace_product(&dir);
            assert!((fd - an).abs() < 1e-6, "alpha {a}: fd {fd} analytic {an}");
        }
    }

    #[test]
    fn up_dominates_down_and_order_one_coincide() {
        let rho = random_state(StateKind::HsMixed, &[2, 3], 11).unwrap();
        for a in [0.6, 1.0, 2.0] {
            let down = cond_entropy(&rho, o(a), &CondVariant::Down).unwrap().bits();
            let up = cond_entropy(&rho, o(a), &CondVariant::Up).unwrap().bits();
            assert!(up >= down - 1e-9);
            if a == 1.0 {
                assert!((up - down).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn generalized_with_marginal_is_down() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 12).unwrap();
        let rb = rho.marginal(&[1]).unwrap();
        let a = cond_entropy(&rho, o(1.5), &CondVariant::Down).unwrap();
        let b = cond_entropy(&rho, o(1.5), &CondVariant::Generalized(rb.matrix().clone())).unwrap();
        assert!((a.bits() - b.bits()).abs() < 1e-12);
    }
}
