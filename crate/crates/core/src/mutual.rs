//! Rényi mutual informations built on the sandwiched divergence.
//!
//! * `I^up_alpha(A;B)   = inf_sigma_B D_alpha(rho_AB || rho_A (x) sigma_B)`
//! * `I^down_alpha(A:B) = inf_{sigma_A, sigma_B} D_alpha(rho_AB || sigma_A (x) sigma_B)`
//! * `I_alpha(rho_AB || tau_A) = inf_sigma_B D_alpha(rho_AB || tau_A (x) sigma_B)` for any
//!   positive semidefinite `tau_A` (it need not be normalized).

use crate::entropies::{default_config_for, divergence_eig, log2_sandwiched_trace, EntropicValue, KronDivergence, KronFactor};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianEigenSystem, DEFAULT_KERNEL_EPS};
use crate::optimize::{optimize_blocks, OptResult, Sense, SimplexOptConfig};
use crate::orders::RenyiOrder;
use crate::states::{DensityMatrix, OrthonormalBasis};

/// Restarts used for the joint two-sided minimization, which is not convex in general.
pub const JOINT_RESTARTS: usize = 3;

/// Which mutual information to evaluate.
#[derive(Clone, Debug)]
pub enum MutualVariant {
    Up,
    Down,
    Generalized(ComplexMatrix),
}

/// Mutual information with default optimizer settings; non-convergence is an error.
pub fn mutual_info(rho: &DensityMatrix, alpha: RenyiOrder, variant: &MutualVariant) -> Result<EntropicValue> {
    let cfg = match variant {
        MutualVariant::Down => SimplexOptConfig::default().with_restarts(JOINT_RESTARTS),
        _ => default_config_for(alpha),
    };
    let res = mutual_info_detailed(rho, alpha, variant, &cfg)?;
    if !res.converged {
        return Err(Error::NonConvergence {
            iterations: res.iterations,
            last_value: res.value,
        });
    }
    Ok(EntropicValue(res.value))
}

/// Mutual information with explicit optimizer settings and the full optimizer report.
/// The minimization is warm-started at the marginals of `rho`.
pub fn mutual_info_detailed(
    rho: &DensityMatrix,
    alpha: RenyiOrder,
    variant: &MutualVariant,
    config: &SimplexOptConfig,
) -> Result<OptResult> {
    let (da, db) = rho.bipartite_dims()?;
    let cfg = config.clone().with_sense(Sense::Minimize);
    let ra = rho.marginal(&[0])?;
    let rb = rho.marginal(&[1])?;
    match variant {
        MutualVariant::Up => {
            let eig = ra.eigen();
            let obj = KronDivergence::new(rho.matrix().clone(), alpha, vec![KronFactor::Fixed(eig), KronFactor::Free(db)]);
            optimize_blocks(&obj, &cfg, Some(&[rb.matrix().clone()]))
        }
        MutualVariant::Generalized(tau) => {
            if tau.rows() != da || !tau.is_square() {
                return Err(Error::dimension("reference operator does not match factor A"));
            }
            let eig = linalg::eigh(tau)?;
            linalg::check_psd(&eig)?;
            let obj = KronDivergence::new(rho.matrix().clone(), alpha, vec![KronFactor::Fixed(eig), KronFactor::Free(db)]);
            optimize_blocks(&obj, &cfg, Some(&[rb.matrix().clone()]))
        }
        MutualVariant::Down => {
            let obj = KronDivergence::new(rho.matrix().clone(), alpha, vec![KronFactor::Free(da), KronFactor::Free(db)]);
            optimize_blocks(&obj, &cfg, Some(&[ra.matrix().clone(), rb.matrix().clone()]))
        }
    }
}

/// `D_alpha(rho || tau_A (x) sigma_B)` at a given `sigma_B`; an upper bound on the
/// generalized mutual information and a convenient certified candidate.
pub fn mutual_info_candidate(rho: &DensityMatrix, tau_a: &ComplexMatrix, sigma_b: &ComplexMatrix, alpha: RenyiOrder) -> Result<EntropicValue> {
    let (da, db) = rho.bipartite_dims()?;
    if tau_a.rows() != da || sigma_b.rows() != db {
        return Err(Error::dimension("candidate operators do not match the factors"));
    }
    let omega = linalg::eigh(&tau_a.kron(sigma_b))?;
    linalg::check_psd(&omega)?;
    Ok(EntropicValue(divergence_eig(rho.matrix(), &omega, alpha, DEFAULT_KERNEL_EPS)))
}

/// `inf_q D_alpha(sum_x |x><x| (x) block_x || q (x) tau)` over probability vectors `q`,
/// for subnormalized blocks `block_x` summing to a state. Closed form:
/// `alpha/(alpha-1) log2 sum_x Q_alpha(block_x || tau)^(1/alpha)`, with the Holevo-type
/// expression at `alpha = 1` and `log2 sum_x 2^{D_max(block_x || tau)}` at infinity.
pub fn optimized_register_divergence(blocks: &[ComplexMatrix], tau: &HermitianEigenSystem, alpha: RenyiOrder) -> f64 {
    let eps = DEFAULT_KERNEL_EPS;
    let present: Vec<&ComplexMatrix> = blocks.iter().filter(|b| b.trace_re() > 0.0).collect();
    if alpha.is_infinite() {
        let sum: f64 = present
            .iter()
            .map(|b| {
                let w = b.trace_re();
                let normalized = b.scale(1.0 / w);
                w * divergence_eig(&normalized, tau, alpha, eps).exp2()
            })
            .sum();
        return sum.log2();
    }
    if alpha.is_one() {
        let log_tau = tau.ln_on_support(eps);
        let mut total = 0.0;
        for b in &present {
            let e = linalg::eigh_trusted(b);
            let t = e.kernel_threshold(eps);
            let neg_ent: f64 = e.values.iter().filter(|&&v| v > t).map(|v| v * v.log2()).sum();
            total += neg_ent - b.re_trace_product(&log_tau) / std::f64::consts::LN_2;
            let w = b.trace_re();
            total -= w * w.log2();
        }
        return total;
    }
    let a = alpha.value();
    // Sum of Q_x^(1/alpha) in log space: log2 Q_x / alpha per block.
    let logs: Vec<f64> = present.iter().map(|b| log2_sandwiched_trace(b, tau, a, eps) / a).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return if top == f64::NEG_INFINITY { f64::INFINITY } else { top };
    }
    let sum: f64 = logs.iter().map(|l| (l - top).exp2()).sum();
    a / (a - 1.0) * (top + sum.log2())
}

/// `I^up_alpha(B;X)` where `X` is the outcome of measuring factor 0 of `rho_AB` in `basis`:
/// `inf_sigma_X D_alpha(rho_XB || sigma_X (x) rho_B)`. The post-measurement state is
/// block diagonal in the measured basis, so the optimal `sigma_X` is diagonal there and
/// the infimum has a closed form.
pub fn measured_register_mutual_info(rho: &DensityMatrix, basis: &OrthonormalBasis, alpha: RenyiOrder) -> Result<EntropicValue> {
    let rb = rho.marginal(&[1])?;
    let blocks = conditional_blocks(rho, basis)?;
    Ok(EntropicValue(optimized_register_divergence(&blocks, &rb.eigen(), alpha)))
}

/// Subnormalized conditional states `(<e_x| (x) I) rho (|e_x> (x) I)` on factor 1.
pub fn conditional_blocks(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<Vec<ComplexMatrix>> {
    let (da, db) = rho.bipartite_dims()?;
    if basis.dim() != da {
        return Err(Error::dimension("basis does not match the measured factor"));
    }
    let m = rho.matrix();
    Ok((0..da)
        .map(|x| {
            let e = basis.vector(x);
            ComplexMatrix::from_fn(db, db, |i, j| {
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for a in 0..da {
                    for b in 0..da {
                        acc += e[a].conj() * m[(a * db + i, b * db + j)] * e[b];
                    }
                }
                acc
            })
            .hermitize()
        })
        .collect())
}

/// `I_alpha(rho_AB || tau_A) + I_alpha_hat(rho_AC || tau_A^{-1})` for a pure `rho_ABC`.
/// The two terms cancel exactly, so the return value measures numerical error.
pub fn duality_gap(rho_abc: &DensityMatrix, tau_a: &ComplexMatrix, alpha: RenyiOrder, config: &SimplexOptConfig) -> Result<f64> {
    if rho_abc.shape().len() != 3 {
        return Err(Error::dimension("duality needs a tripartite state"));
    }
    if (rho_abc.purity() - 1.0).abs() > 1e-9 {
        return Err(Error::validation("duality needs a pure tripartite state"));
    }
    let hat = alpha
        .hat()
        .ok_or_else(|| Error::validation("duality needs alpha >= 1/2"))?;
    let da = rho_abc.shape()[0];
    if tau_a.rows() != da || !tau_a.is_square() {
        return Err(Error::dimension("reference operator does not match factor A"));
    }
    let eig = linalg::eigh(tau_a)?;
    linalg::check_psd(&eig)?;
    if eig.min_value() <= DEFAULT_KERNEL_EPS * eig.max_value() {
        return Err(Error::validation("reference operator must be full rank"));
    }
    let inverse = eig.power_on_support(-1.0, DEFAULT_KERNEL_EPS);
    let rab = rho_abc.marginal(&[0, 1])?;
    let rac = rho_abc.marginal(&[0, 2])?;
    let first = mutual_info_detailed(&rab, alpha, &MutualVariant::Generalized(tau_a.clone()), config)?;
    let second = mutual_info_detailed(&rac, hat, &MutualVariant::Generalized(inverse), config)?;
    Ok(first.value + second.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropies::{cond_entropy, entropy, CondVariant};
    use crate::states::{pinch_measure, random_state, StateKind};

    fn o(x: f64) -> RenyiOrder {
        RenyiOrder::new(x).unwrap()
    }

    #[test]
    fn bell_mutual_information_is_two_bits() {
        let bell = random_state(StateKind::MaxEntangled, &[2, 2], 0).unwrap();
        let up = mutual_info(&bell, RenyiOrder::ONE, &MutualVariant::Up).unwrap().bits();
        let down = mutual_info(&bell, RenyiOrder::ONE, &MutualVariant::Down).unwrap().bits();
        assert!((up - 2.0).abs() < 1e-7);
        assert!((down - 2.0).abs() < 1e-7);
    }

    #[test]
    fn product_states_have_zero_information() {
        let rho = random_state(StateKind::Product, &[2, 3], 3).unwrap();
        for a in [0.6, 1.0, 2.0] {
            let up = mutual_info(&rho, o(a), &MutualVariant::Up).unwrap().bits();
            assert!(up.abs() < 1e-7, "alpha {a}: {up}");
        }
    }

    #[test]
    fn order_one_matches_entropy_decomposition() {
        let rho = random_state(StateKind::HsMixed, &[2, 3], 5).unwrap();
        let i = mutual_info(&rho, RenyiOrder::ONE, &MutualVariant::Up).unwrap().bits();
        let ha = entropy(&rho.marginal(&[0]).unwrap(), RenyiOrder::ONE).bits();
        let hb = entropy(&rho.marginal(&[1]).unwrap(), RenyiOrder::ONE).bits();
        let hab = entropy(&rho, RenyiOrder::ONE).bits();
        assert!((i - (ha + hb - hab)).abs() < 1e-7);
        let hab_cond = cond_entropy(&rho, RenyiOrder::ONE, &CondVariant::Down).unwrap().bits();
        assert!((i - (ha - hab_cond)).abs() < 1e-7);
    }

    #[test]
    fn measured_register_closed_form_matches_optimizer() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 9).unwrap();
        let basis = OrthonormalBasis::haar(2, 10);
        let pinched = pinch_measure(&rho, &basis).unwrap();
        // I^up(B;X) optimizes over the register, which is factor 0 of the pinched state.
        let swapped = pinched.swap().unwrap();
        for a in [0.6, 1.0, 1.5, 3.0] {
            let closed = measured_register_mutual_info(&rho, &basis, o(a)).unwrap().bits();
            let numeric = mutual_info_detailed(&swapped, o(a), &MutualVariant::Up, &SimplexOptConfig::default().with_restarts(1))
                .unwrap()
                .value;
            assert!((closed - numeric).abs() < 1e-6, "alpha {a}: {closed} vs {numeric}");
        }
    }

    #[test]
    fn down_is_below_up_and_symmetric() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 13).unwrap();
        for a in [0.7, 2.0] {
            let up = mutual_info(&rho, o(a), &MutualVariant::Up).unwrap().bits();
            let down = mutual_info(&rho, o(a), &MutualVariant::Down).unwrap().bits();
            let down_swapped = mutual_info(&rho.swap().unwrap(), o(a), &MutualVariant::Down).unwrap().bits();
            assert!(down <= up + 1e-9);
            assert!((down - down_swapped).abs() < 1e-6);
        }
    }

    #[test]
    fn duality_closes() {
        let rho = random_state(StateKind::HaarPure, &[2, 2, 4], 21).unwrap();
        let ra = rho.marginal(&[0]).unwrap();
        for a in [0.75, 1.0, 2.0] {
            let gap = duality_gap(&rho, ra.matrix(), o(a), &SimplexOptConfig::default().with_restarts(0)).unwrap();
            assert!(gap.abs() < 1e-4, "alpha {a}: gap {gap}");
        }
    }

    #[test]
    fn duality_validation() {
        let mixed = random_state(StateKind::HsMixed, &[2, 2, 2], 1).unwrap();
        let tau = ComplexMatrix::identity(2).scale(0.5);
        assert!(duality_gap(&mixed, &tau, o(2.0), &SimplexOptConfig::default()).is_err());
        let pure = random_state(StateKind::HaarPure, &[2, 2, 2], 1).unwrap();
        let singular = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(duality_gap(&pure, &singular, o(2.0), &SimplexOptConfig::default()).is_err());
    }
}
