//! Operator-norm expressions for conditional entropy, entropy and mutual information.
//!
//! A bipartite state `rho_AB` is purified to `|phi>` on `A (x) B (x) C` and turned into
//! the operator `X = Op_{B -> AC}(|phi>)`. Then, with `a' = (alpha - 1)/alpha`:
//!
//! * conditional: `H_alpha(rho_AB || sigma_A) = -log2 sup_tau ||(sigma_A^-1 (x) tau_C)^(a'/2) X||_2^(2/a')`
//! * entropy:     `H_alpha(B) = -log2 ||X||_{2 alpha}^(2/a')`
//! * mutual:      `I_alpha(rho_AB || sigma_A) = log2 sup_tau ||(sigma_A^-1 (x) tau_C)^(a'/2) X||_{2 alpha_hat}^(2/a')`
//!
//! Here `H_alpha(rho_AB || sigma_A) = -D_alpha(rho_AB || sigma_A (x) I_B)`, i.e. the
//! conditioning system is A, and the mutual form matches the generalized mutual
//! information with `sigma_A` as the fixed reference. The exponents are evaluated with
//! their signs as written, so `2/a'` is negative for `alpha < 1`.

use crate::entropies::EntropicValue;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianEigenSystem, SpectralFn, SupportRelation, C64, DEFAULT_KERNEL_EPS};
use crate::optimize::{optimize_blocks, DensityObjective, OptResult, SimplexOptConfig};
use crate::orders::RenyiOrder;
use crate::states::{op_vec, purify_vector, DensityMatrix, PureState};

/// Which operator-norm expression to evaluate. The matrices are the reference `sigma_A`.
#[derive(Clone, Debug)]
pub enum NormFormKind {
    Conditional(ComplexMatrix),
    Entropy,
    Mutual(ComplexMatrix),
}

/// Norm-form value of `rho_AB` using its canonical purification and default optimizer
/// settings. Non-convergence of the supremum over `tau_C` is an error.
pub fn norm_form_value(rho: &DensityMatrix, alpha: RenyiOrder, kind: &NormFormKind) -> Result<EntropicValue> {
    let psi = purify_vector(rho);
    let res = norm_form_from_purification(&psi, alpha, kind, &SimplexOptConfig::maximize().with_restarts(0))?;
    if !res.converged {
        return Err(Error::NonConvergence {
            iterations: res.iterations,
            last_value: res.value,
        });
    }
    Ok(EntropicValue(res.value))
}

/// Restricts the purifying factor to the support of its marginal.
///
/// Directions of the purifying factor outside that support carry no amplitude, yet for
/// orders below one the optimization over its states could place weight there and
/// inflate the value; the compressed purification is equivalent and free of them.
fn compress_purifying_factor(psi: &PureState) -> Result<PureState> {
    let (dab, dc) = (psi.shape[0] * psi.shape[1], psi.shape[2]);
    let rho_c = psi.density().marginal(&[2])?;
    let eig = rho_c.eigen();
    let cutoff = DEFAULT_KERNEL_EPS * eig.values.iter().copied().fold(0.0, f64::max);
    let support: Vec<usize> = (0..dc).filter(|&k| eig.values[k] > cutoff).collect();
    if support.len() == dc {
        return Ok(psi.clone());
    }
    let r = support.len();
    let mut amplitudes = vec![C64::new(0.0, 0.0); dab * r];
    for ab in 0..dab {
        for (new_c, &k) in support.iter().enumerate() {
            amplitudes[ab * r + new_c] = (0..dc).map(|c| eig.vectors[(c, k)].conj() * psi.amplitudes[ab * dc + c]).sum();
        }
    }
    Ok(PureState {
        amplitudes,
        shape: vec![psi.shape[0], psi.shape[1], r],
    })
}

/// Norm-form value for an explicit purification `psi` on `A (x) B (x) C`.
///
/// The returned `OptResult` carries the entropic value (already negated for the
/// entropy forms) and, for the optimized forms, the maximizing `tau_C`.
pub fn norm_form_from_purification(
    psi: &PureState,
    alpha: RenyiOrder,
    kind: &NormFormKind,
    config: &SimplexOptConfig,
) -> Result<OptResult> {
    if alpha.is_one() || alpha.is_infinite() {
        return Err(Error::validation("norm forms need a finite order different from 1"));
    }
    if psi.shape.len() != 3 {
        return Err(Error::dimension("norm forms need a purification on three factors"));
    }
    let psi = &compress_purifying_factor(psi)?;
    let (da, dc) = (psi.shape[0], psi.shape[2]);
    let x = op_vec(&psi.amplitudes, &psi.shape, &[1])?.matrix;
    let a_prime = alpha.prime();
    let (sigma, index, sign) = match kind {
        NormFormKind::Entropy => {
            let norm = linalg::schatten_norm(&x, 2.0 * alpha.value())?;
            let value = -(2.0 / a_prime) * norm.log2();
            return Ok(OptResult {
                value,
                blocks: Vec::new(),
                iterations: 0,
                converged: true,
                restart_values: vec![value],
            });
        }
        NormFormKind::Conditional(s) => (s, 2.0, -1.0),
        NormFormKind::Mutual(s) => {
            let hat = alpha
                .hat()
                .ok_or_else(|| Error::validation("the mutual norm form needs alpha >= 1/2"))?;
            let index = if hat.is_infinite() { f64::INFINITY } else { 2.0 * hat.value() };
            (s, index, 1.0)
        }
    };
    if sigma.rows() != da || !sigma.is_square() {
        return Err(Error::dimension("reference operator does not match factor A"));
    }
    let sigma_eig = linalg::eigh(sigma)?;
    linalg::check_psd(&sigma_eig)?;
    let psi_density = psi.density();
    let rho_a = psi_density.marginal(&[0])?;
    if linalg::support_relation_eig(rho_a.matrix(), &sigma_eig, DEFAULT_KERNEL_EPS) != SupportRelation::Dominates {
        return Err(Error::validation("reference operator does not dominate the marginal"));
    }
    let objective = NormObjective {
        reference_power: sigma_eig.power_on_support(-a_prime, DEFAULT_KERNEL_EPS),
        x: x.clone(),
        dims: [da, dc],
        a_prime,
        index,
    };
    let warm = polar_reduction(&x, da, dc)?;
    let cfg = config.clone().with_sense(crate::optimize::Sense::Maximize);
    let mut res = optimize_blocks(&objective, &cfg, Some(&[warm]))?;
    res.value *= sign;
    for v in &mut res.restart_values {
        *v *= sign;
    }
    Ok(res)
}

/// Normalized reduction on C of the range projector of `X` (its polar part times its
/// adjoint); the warm start for the supremum over `tau_C`.
fn polar_reduction(x: &ComplexMatrix, da: usize, dc: usize) -> Result<ComplexMatrix> {
    let gram = linalg::eigh_trusted(&(&x.adjoint() * x));
    let pseudo_inverse = gram.power_on_support(-1.0, DEFAULT_KERNEL_EPS);
    let projector = &(x * &pseudo_inverse) * &x.adjoint();
    let reduced = linalg::partial_trace(&projector, &[da, dc], &[1])?;
    let t = reduced.trace_re();
    Ok(reduced.scale(1.0 / t).hermitize())
}

/// `tau -> log2 ||(S (x) tau^a')^(1/2) X||_p^(2/a')` with `S = sigma_A^-a'`.
struct NormObjective {
    reference_power: ComplexMatrix,
    x: ComplexMatrix,
    dims: [usize; 2],
    a_prime: f64,
    index: f64,
}

impl NormObjective {
    /// Kernel cutoff for powers of `tau`. A negative power diverges on the kernel of
    /// `tau`, so it is only truncated at exact zeros (where [`Self::inner`] gives up).
    fn tau_eps(&self) -> f64 {
        if self.a_prime < 0.0 {
            0.0
        } else {
            DEFAULT_KERNEL_EPS
        }
    }

    /// `N = X^dag (S (x) tau^a') X` and the eigen-system of `tau`; `None` when a negative
    /// power meets a singular `tau`, where the norm is infinite.
    fn inner(&self, tau: &ComplexMatrix) -> Option<(HermitianEigenSystem, HermitianEigenSystem)> {
        let tau_eig = linalg::eigh_trusted(tau);
        if self.a_prime < 0.0 && !(tau_eig.min_value() > 0.0) {
            return None;
        }
        let tau_power = tau_eig.power_on_support(self.a_prime, self.tau_eps());
        let middle = self.reference_power.kron(&tau_power);
        let n = (&self.x.adjoint() * &(&middle * &self.x)).hermitize();
        Some((tau_eig, linalg::eigh_trusted(&n)))
    }

    /// `log2 tr N^(p/2)`, or `log2 lambda_max(N)` when the index is infinite.
    fn log_trace(&self, n_eig: &HermitianEigenSystem) -> f64 {
        if self.index.is_infinite() {
            return n_eig.max_value().max(0.0).log2();
        }
        let t = n_eig.kernel_threshold(DEFAULT_KERNEL_EPS);
        let half = self.index / 2.0;
        let sum: f64 = n_eig.values.iter().filter(|&&v| v > t).map(|v| v.powf(half)).sum();
        sum.log2()
    }

    fn scaled(&self, log_trace: f64) -> f64 {
        if self.index.is_infinite() {
            log_trace / self.a_prime
        } else {
            2.0 / (self.index * self.a_prime) * log_trace
        }
    }
}

impl DensityObjective for NormObjective {
    fn block_dims(&self) -> Vec<usize> {
        vec![self.dims[1]]
    }

    fn value(&self, blocks: &[ComplexMatrix]) -> f64 {
        let Some((_, n_eig)) = self.inner(&blocks[0]) else {
            return f64::NEG_INFINITY;
        };
        let v = self.scaled(self.log_trace(&n_eig));
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn value_and_gradient(&self, blocks: &[ComplexMatrix]) -> Option<(f64, Vec<ComplexMatrix>)> {
        if self.index.is_infinite() {
            return None;
        }
        let (tau_eig, n_eig) = self.inner(&blocks[0])?;
        let log_trace = self.log_trace(&n_eig);
        let value = self.scaled(log_trace);
        if !value.is_finite() {
            return None;
        }
        // d tr N^(p/2) = (p/2) tr[X N^(p/2-1) X^dag (S (x) d tau^a')].
        let n_power = n_eig.power_on_support(self.index / 2.0 - 1.0, DEFAULT_KERNEL_EPS);
        let y = &(&self.x * &n_power) * &self.x.adjoint();
        let weighted = &self.reference_power.kron(&ComplexMatrix::identity(self.dims[1])) * &y;
        let reduced = linalg::partial_trace(&weighted, &self.dims, &[1]).ok()?.hermitize();
        let pulled = tau_eig.frechet(SpectralFn::Power(self.a_prime), &reduced, self.tau_eps());
        let trace = log_trace.exp2();
        let grad = pulled.scale(1.0 / (self.a_prime * trace * std::f64::consts::LN_2));
        Some((value, vec![grad.hermitize()]))
    }
}

/// `A^(i t)` on the support of `A` (identity on its kernel); unitary for every real `t`.
pub fn imaginary_power(op: &HermitianEigenSystem, t: f64) -> ComplexMatrix {
    let threshold = op.kernel_threshold(DEFAULT_KERNEL_EPS);
    let n = op.dim();
    let phases: Vec<C64> = op
        .values
        .iter()
        .map(|&v| if v > threshold { C64::from_polar(1.0, t * v.ln()) } else { C64::new(1.0, 0.0) })
        .collect();
    ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| op.vectors[(i, k)] * phases[k] * op.vectors[(j, k)].conj())
            .sum()
    })
}

/// `p_theta` from `1/p_theta = (1 - theta)/p_0 + theta/p_1` (infinite indices allowed).
pub fn interpolation_index(p0: f64, p1: f64, theta: f64) -> f64 {
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    1.0 / ((1.0 - theta) * inv(p0) + theta * inv(p1))
}

/// Target norm of an interpolation between two norm-form endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpolationTarget {
    /// Endpoints `2 beta` and `2 gamma_hat`, target the conditional form (index 2).
    Conditional,
    /// Endpoints `2 beta` and `2`, target the mutual form (index `2 gamma_hat`).
    Mutual,
    /// Endpoints `2 gamma_hat` and `2`, target the entropy form (index `2 beta`).
    Entropy,
}

/// Endpoint indices, interpolation parameter and resulting index for orders linked by
/// `1/alpha' = 1/beta' + 1/gamma'`.
#[derive(Clone, Copy, Debug)]
pub struct InterpolationIndices {
    pub theta: f64,
    pub p0: f64,
    pub p1: f64,
    pub p_theta: f64,
    /// The index of the target norm form.
    pub expected: f64,
}

/// Computes the interpolation bookkeeping for a finite triple of orders different from 1.
pub fn interpolation_indices(alpha: f64, beta: f64, gamma: f64, target: InterpolationTarget) -> InterpolationIndices {
    let prime = |x: f64| (x - 1.0) / x;
    let hat = |x: f64| x / (2.0 * x - 1.0);
    let (ap, bp, gp) = (prime(alpha), prime(beta), prime(gamma));
    let (theta, p0, p1, expected) = match target {
        InterpolationTarget::Conditional => (ap / gp, 2.0 * beta, 2.0 * hat(gamma), 2.0),
        InterpolationTarget::Mutual => (gp / ap, 2.0 * beta, 2.0, 2.0 * hat(gamma)),
        InterpolationTarget::Entropy => (bp / ap, 2.0 * hat(gamma), 2.0, 2.0 * beta),
    };
    InterpolationIndices {
        theta,
        p0,
        p1,
        p_theta: interpolation_index(p0, p1, theta),
        expected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropies::{cond_entropy, entropy, renyi_divergence, CondVariant};
    use crate::mutual::{mutual_info, MutualVariant};
    use crate::states::{random_state, random_unitary, rng_from_seed, StateKind};

    fn o(x: f64) -> RenyiOrder {
        RenyiOrder::new(x).unwrap()
    }

    #[test]
    fn entropy_form_on_diagonal_state() {
        let rho_b = DensityMatrix::diagonal(&[0.75, 0.25], &[2]).unwrap();
        let rho = DensityMatrix::maximally_mixed(&[1]).unwrap().tensor(&rho_b);
        let v = norm_form_value(&rho, o(2.0), &NormFormKind::Entropy).unwrap().bits();
        assert!((v - (1.6f64).log2()).abs() < 1e-12);
        assert!((v - entropy(&rho_b, o(2.0)).bits()).abs() < 1e-12);
    }

    #[test]
    fn conditional_form_matches_direct_divergence() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 4).unwrap();
        let ra = rho.marginal(&[0]).unwrap();
        for a in [0.6, 0.75, 2.0, 3.0] {
            let form = norm_form_value(&rho, o(a), &NormFormKind::Conditional(ra.matrix().clone())).unwrap().bits();
            let reference = ra.matrix().kron(&ComplexMatrix::identity(2));
            let direct = -renyi_divergence(&rho, &reference, o(a)).unwrap().bits();
            assert!((form - direct).abs() < 1e-7, "alpha {a}: {form} vs {direct}");
            let via_entropies = cond_entropy(&rho.swap().unwrap(), o(a), &CondVariant::Generalized(ra.matrix().clone()))
                .unwrap()
                .bits();
            assert!((form - via_entropies).abs() < 1e-7);
        }
    }

    #[test]
    fn mutual_form_matches_generalized_mutual_information() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 8).unwrap();
        let ra = rho.marginal(&[0]).unwrap();
        for a in [0.6, 0.75, 2.0, 3.0] {
            let form = norm_form_value(&rho, o(a), &NormFormKind::Mutual(ra.matrix().clone())).unwrap().bits();
            let entropic = mutual_info(&rho, o(a), &MutualVariant::Generalized(ra.matrix().clone())).unwrap().bits();
            assert!((form - entropic).abs() < 1e-6, "alpha {a}: {form} vs {entropic}");
        }
    }

    #[test]
    fn mutual_form_on_rank_deficient_states() {
        for (kind, seed) in [(StateKind::HaarPure, 6), (StateKind::MaxEntangled, 0)] {
            let rho = random_state(kind, &[2, 2], seed).unwrap();
            let ra = rho.marginal(&[0]).unwrap();
            for a in [0.6, 0.75, 2.0] {
                let form = norm_form_value(&rho, o(a), &NormFormKind::Mutual(ra.matrix().clone())).unwrap().bits();
                let entropic = mutual_info(&rho, o(a), &MutualVariant::Generalized(ra.matrix().clone())).unwrap().bits();
                assert!((form - entropic).abs() < 1e-5, "{kind:?} alpha {a}: {form} vs {entropic}");
            }
        }
    }

    #[test]
    fn mutual_form_vanishes_on_products() {
        let rho = random_state(StateKind::Product, &[2, 2], 2).unwrap();
        let ra = rho.marginal(&[0]).unwrap();
        let v = norm_form_value(&rho, o(2.0), &NormFormKind::Mutual(ra.matrix().clone())).unwrap().bits();
        assert!(v.abs() < 1e-6);
    }

    #[test]
    fn purification_choice_does_not_matter() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 12).unwrap();
        let ra = rho.marginal(&[0]).unwrap();
        let psi = purify_vector(&rho);
        let u = random_unitary(4, &mut rng_from_seed(5));
        let rotation = ComplexMatrix::identity(4).kron(&u);
        let rotated = PureState {
            amplitudes: rotation.mat_vec(&psi.amplitudes),
            shape: psi.shape.clone(),
        };
        let cfg = SimplexOptConfig::maximize().with_restarts(0);
        for kind in [NormFormKind::Entropy, NormFormKind::Conditional(ra.matrix().clone()), NormFormKind::Mutual(ra.matrix().clone())] {
            let a = norm_form_from_purification(&psi, o(2.0), &kind, &cfg).unwrap().value;
            let b = norm_form_from_purification(&rotated, o(2.0), &kind, &cfg).unwrap().value;
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn imaginary_powers_preserve_schatten_norms() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 3).unwrap();
        let psi = purify_vector(&rho);
        let x = op_vec(&psi.amplitudes, &psi.shape, &[1]).unwrap().matrix;
        let sigma = random_state(StateKind::HsMixed, &[2], 6).unwrap();
        let tau = random_state(StateKind::HsMixed, &[4], 7).unwrap();
        let op = linalg::eigh(&linalg::mat_power_on_support(sigma.matrix(), -1.0).unwrap().kron(tau.matrix())).unwrap();
        for t in [-3.0, 0.4, 2.5] {
            let u = imaginary_power(&op, t * 0.37);
            for p in [1.2, 2.0, 3.0] {
                let lhs = linalg::schatten_norm(&(&u * &x), p).unwrap();
                let rhs = linalg::schatten_norm(&x, p).unwrap();
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn interpolation_bookkeeping() {
        for (a, b) in [(1.5, 3.0), (0.8, 0.6), (3.0, 1.5)] {
            let ap = (a - 1.0) / a;
            let bp = (b - 1.0) / b;
            let gp = 1.0 / (1.0 / ap - 1.0 / bp);
            let g = 1.0 / (1.0 - gp);
            let r = interpolation_indices(a, b, g, InterpolationTarget::Conditional);
            assert!((r.p_theta - r.expected).abs() < 1e-9);
        }
        let r = interpolation_indices(2.0, 0.75, 1.5, InterpolationTarget::Mutual);
        assert!(r.p_theta.is_finite());
    }

    #[test]
    fn order_one_is_rejected() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 1).unwrap();
        assert!(norm_form_value(&rho, RenyiOrder::ONE, &NormFormKind::Entropy).is_err());
        let singular = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(norm_form_value(&rho, o(2.0), &NormFormKind::Conditional(singular)).is_err());
    }
}
