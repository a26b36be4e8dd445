//! Worked examples for every module, checked against independent oracles: brute-force
//! root finding, scalar and classical closed forms, direct index arithmetic and
//! Monte-Carlo sampling. Published order relations are checked exactly.

use num_complex::Complex64 as C64;

use renyi_core::entropies::{cond_entropy, entropy, marginal_entropy, renyi_divergence, CondVariant};
use renyi_core::linalg::{
    eigh, mat_power_on_support, partial_trace, schatten_norm, support_relation, tensor_product, ComplexMatrix,
    SupportRelation,
};
use renyi_core::mutual::{duality_gap, mutual_info, mutual_info_detailed, MutualVariant};
use renyi_core::normforms::{norm_form_value, NormFormKind};
use renyi_core::optimize::{optimize_over_density, qubit_grid_oracle, Sense, SimplexOptConfig};
use renyi_core::orders::{
    classify_triple, min_entropy_partner, derived_quantities, solve_third, exclusion_feasible, CaseTag, RenyiOrder,
    SignProduct,
};
use renyi_core::relations::{
    sanity_trial, verify_chain_rules, verify_exclusion, verify_gbur, verify_decomposition, ChainForm, DecompositionForm,
    ExclusionMode, UncertaintyRelation, VerifyOptions,
};
use renyi_core::states::{
    op_vec, overlap_c, pinch_measure, purify, purify_vector, random_state, stinespring_measure, DensityMatrix,
    MeasurementPair, OrthonormalBasis, StateKind,
};

fn o(x: f64) -> RenyiOrder {
    RenyiOrder::new(x).unwrap()
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn diag(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(values)
}

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn bell() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::from_pure(&[c(s), c(0.0), c(0.0), c(s)], &[2, 2]).unwrap()
}

fn plus() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::from_pure(&[c(s), c(s)], &[2]).unwrap()
}

fn log2_sum(xs: impl Iterator<Item = f64>) -> f64 {
    xs.sum::<f64>().log2()
}

fn von_neumann(values: &[f64]) -> f64 {
    -values.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

// ---------------------------------------------------------------- linalg

/// Determinant by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn determinant(m: &ComplexMatrix) -> C64 {
    let n = m.rows();
    let mut a: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    let mut det = c(1.0);
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].norm().total_cmp(&a[y][k].norm())).unwrap();
        if a[p][k].norm() == 0.0 {
            return c(0.0);
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
        }
    }
    det
}

/// Roots of `det(H - x I)` located by a sign scan and refined by bisection.
fn charpoly_roots(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.rows();
    let shifted = |x: f64| {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] -= c(x);
        }
        determinant(&m).re
    };
    let bound = h.frobenius_norm() + 1.0;
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev_f = shifted(prev_x);
    for k in 1..=steps {
        let x = -bound + 2.0 * bound * k as f64 / steps as f64;
        let f = shifted(x);
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if prev_f.signum() != f.signum() && f != 0.0 {
            let (mut lo, mut hi, mut flo) = (prev_x, x, prev_f);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = shifted(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_f = f;
    }
    roots
}

#[test]
fn eigenvalues_of_simple_operators() {
    let id = eigh(&ComplexMatrix::identity(3)).unwrap();
    assert!(id.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
    let d = eigh(&diag(&[0.25, 0.75])).unwrap();
    assert!((d.values[0] - 0.25).abs() < 1e-15 && (d.values[1] - 0.75).abs() < 1e-15);
}

#[test]
fn eigenvalues_match_characteristic_polynomial_roots() {
    for seed in 0..5 {
        let u = renyi_core::states::random_unitary(4, &mut renyi_core::states::rng_from_seed(seed));
        // Random Hermitian operator with spread-out spectrum: U diag U^dagger plus a
        // Hermitian perturbation.
        let base = diag(&[-1.3, -0.2, 0.55, 1.7]).conjugate_by(&u);
        let mut h = base.clone();
        for i in 0..4 {
            for j in 0..4 {
                let z = C64::new(0.01 * (i + 2 * j) as f64, 0.02 * (j as f64 - i as f64));
                h[(i, j)] += z + z.conj();
            }
        }
        let h = h.hermitize();
        let roots = charpoly_roots(&h);
        let eig = eigh(&h).unwrap();
        assert_eq!(roots.len(), 4, "seed {seed}: roots {roots:?}");
        for (r, v) in roots.iter().zip(&eig.values) {
            assert!((r - v).abs() < 1e-9, "seed {seed}: root {r} vs eigenvalue {v}");
        }
    }
}

#[test]
fn powers_on_support() {
    let id = mat_power_on_support(&ComplexMatrix::identity(2), -0.5).unwrap();
    assert!(max_diff(&id, &ComplexMatrix::identity(2)) < 1e-14);
    let kernel = mat_power_on_support(&diag(&[4.0, 0.0]), 0.5).unwrap();
    assert!(max_diff(&kernel, &diag(&[2.0, 0.0])) < 1e-14);
    let inverse = mat_power_on_support(&diag(&[0.25, 0.75]), -1.0).unwrap();
    assert!(max_diff(&inverse, &diag(&[1.0 / 0.25, 1.0 / 0.75])) < 1e-12);
}

#[test]
fn schatten_norm_values() {
    for d in 1..5 {
        let v = schatten_norm(&ComplexMatrix::identity(d), 2.0).unwrap();
        assert!((v - (d as f64).sqrt()).abs() < 1e-14);
    }
    assert!((schatten_norm(&diag(&[3.0, 4.0]), 1.0).unwrap() - 7.0).abs() < 1e-13);
    // (1^(1/2) + 1^(1/2))^2 = 4.
    assert!((schatten_norm(&diag(&[1.0, 1.0]), 0.5).unwrap() - 4.0).abs() < 1e-13);
}

#[test]
fn tensor_products() {
    let id = tensor_product(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3));
    assert!(max_diff(&id, &ComplexMatrix::identity(6)) < 1e-15);
    // Index bookkeeping: |0><0| (x) |1><1| = |01><01|, the second basis vector.
    let t = tensor_product(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]));
    assert!(max_diff(&t, &diag(&[0.0, 1.0, 0.0, 0.0])) < 1e-15);
    let rho = random_state(StateKind::HsMixed, &[2], 3).unwrap();
    let sigma = random_state(StateKind::HsMixed, &[3], 4).unwrap();
    let scaled = sigma.matrix().scale(2.5);
    assert!((tensor_product(rho.matrix(), &scaled).trace_re() - 2.5).abs() < 1e-12);
}

#[test]
fn partial_traces() {
    let ra = random_state(StateKind::HsMixed, &[2], 5).unwrap();
    let sb = random_state(StateKind::HsMixed, &[3], 6).unwrap();
    let joint = tensor_product(ra.matrix(), sb.matrix());
    let back = partial_trace(&joint, &[2, 3], &[0]).unwrap();
    assert!(max_diff(&back, ra.matrix()) < 1e-14);
    let b = bell();
    let reduced = partial_trace(b.matrix(), &[2, 2], &[1]).unwrap();
    assert!(max_diff(&reduced, &diag(&[0.5, 0.5])) < 1e-15);
    let whole = partial_trace(&joint, &[2, 3], &[0, 1]).unwrap();
    assert!(max_diff(&whole, &joint) < 1e-15);
}

#[test]
fn support_relations() {
    let rho = random_state(StateKind::HsMixed, &[2], 7).unwrap();
    assert_eq!(support_relation(rho.matrix(), rho.matrix()).unwrap(), SupportRelation::Dominates);
    assert_eq!(
        support_relation(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap(),
        SupportRelation::Perpendicular
    );
    assert_eq!(
        support_relation(&diag(&[0.5, 0.5]), &diag(&[1.0, 0.0])).unwrap(),
        SupportRelation::Neither
    );
}

// ---------------------------------------------------------------- states

#[test]
fn maximally_entangled_state_has_mixed_marginals() {
    for seed in [0, 1, 99] {
        let rho = random_state(StateKind::MaxEntangled, &[2, 2], seed).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        for k in 0..2 {
            assert!(max_diff(rho.marginal(&[k]).unwrap().matrix(), &diag(&[0.5, 0.5])) < 1e-12);
        }
    }
}

#[test]
fn product_states_carry_no_correlation() {
    let rho = random_state(StateKind::Product, &[2, 3], 11).unwrap();
    for a in [0.6, 1.0, 2.0] {
        let up = mutual_info(&rho, o(a), &MutualVariant::Up).unwrap().bits();
        assert!(up.abs() < 1e-6, "alpha {a}: {up}");
    }
}

#[test]
fn hilbert_schmidt_qubits_are_uniform_in_the_bloch_ball() {
    // Uniform density 3 r^2 on [0, 1] gives mean Bloch radius 3/4; the eigenvalue gap of
    // a qubit state equals its Bloch radius.
    let samples = 10_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for seed in 0..samples {
        let rho = random_state(StateKind::HsMixed, &[2], seed).unwrap();
        let v = rho.eigen().values;
        let gap = v[1] - v[0];
        sum += gap;
        sum_sq += gap * gap;
    }
    let n = samples as f64;
    let mean = sum / n;
    let mean_sq = sum_sq / n;
    // Standard error of the mean is about 0.0019; the second moment is 3/5.
    assert!((mean - 0.75).abs() < 0.01, "mean gap {mean}");
    assert!((mean_sq - 0.6).abs() < 0.01, "mean squared gap {mean_sq}");
}

#[test]
fn purifications() {
    let mixed = DensityMatrix::maximally_mixed(&[2]).unwrap();
    let p = purify(&mixed);
    assert_eq!(p.shape(), &[2, 2]);
    assert!((p.purity() - 1.0).abs() < 1e-12);
    assert!(max_diff(p.marginal(&[0]).unwrap().matrix(), &diag(&[0.5, 0.5])) < 1e-12);

    let pure = random_state(StateKind::HaarPure, &[3], 2).unwrap();
    let psi = purify_vector(&pure);
    let ev = pure.eigen();
    let top = ev.vectors.column(2);
    for (i, amp) in top.iter().enumerate() {
        // Amplitude of |i>|0> is the input amplitude (up to a global phase), others vanish.
        assert!(psi.amplitudes[i * 3 + 1].norm() < 1e-12 && psi.amplitudes[i * 3 + 2].norm() < 1e-12);
        assert!((psi.amplitudes[i * 3].norm() - amp.norm()).abs() < 1e-12);
    }

    let rho = random_state(StateKind::HsMixed, &[2, 3], 8).unwrap();
    let p = purify(&rho);
    assert_eq!(p.shape(), &[2, 3, 6]);
    assert!(max_diff(p.marginal(&[0, 1]).unwrap().matrix(), rho.matrix()) < 1e-12);
}

#[test]
fn operator_forms() {
    // |0> (x) |1> maps the first factor to the second: |1><0|.
    let v = [c(0.0), c(1.0), c(0.0), c(0.0)];
    let x = op_vec(&v, &[2, 2], &[0]).unwrap();
    let mut unit = ComplexMatrix::zeros(2, 2);
    unit[(1, 0)] = c(1.0);
    assert!(max_diff(&x.matrix, &unit) < 1e-15);
    let omega = [c(1.0), c(0.0), c(0.0), c(1.0)];
    let x = op_vec(&omega, &[2, 2], &[0]).unwrap();
    assert!(max_diff(&x.matrix, &ComplexMatrix::identity(2)) < 1e-15);
    let psi = renyi_core::states::haar_vector(6, &mut renyi_core::states::rng_from_seed(4));
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let x = op_vec(&psi, &[2, 3], &[1]).unwrap();
    let hs = (&x.matrix.adjoint() * &x.matrix).trace_re();
    assert!((hs - norm).abs() < 1e-12);
}

#[test]
fn pinching_examples() {
    let comp = OrthonormalBasis::computational(2);
    let d = DensityMatrix::diagonal(&[0.3, 0.7], &[2]).unwrap();
    assert!(max_diff(pinch_measure(&d, &comp).unwrap().matrix(), d.matrix()) < 1e-15);
    assert!(max_diff(pinch_measure(&plus(), &comp).unwrap().matrix(), &diag(&[0.5, 0.5])) < 1e-15);
    let measured = pinch_measure(&bell(), &comp).unwrap();
    assert!(max_diff(measured.matrix(), &diag(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
}

#[test]
fn coherent_measurement_examples() {
    let comp = OrthonormalBasis::computational(2);
    let d = DensityMatrix::diagonal(&[0.3, 0.7], &[2]).unwrap();
    let out = stinespring_measure(&d, &comp).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let on_copy = [0, 3].contains(&i) && [0, 3].contains(&j);
            if !on_copy {
                assert!(out.matrix()[(i, j)].norm() < 1e-15);
            }
        }
    }
    let out = stinespring_measure(&plus(), &comp).unwrap();
    assert!((out.purity() - 1.0).abs() < 1e-12);
    assert!(max_diff(out.marginal(&[0]).unwrap().matrix(), &diag(&[0.5, 0.5])) < 1e-15);
    let pure = random_state(StateKind::HaarPure, &[2, 2], 12).unwrap();
    let out = stinespring_measure(&pure, &OrthonormalBasis::haar(2, 5)).unwrap();
    assert!((out.purity() - 1.0).abs() < 1e-12);
}

#[test]
fn basis_overlaps() {
    let comp = OrthonormalBasis::computational(2);
    assert!((overlap_c(&comp, &comp) - 1.0).abs() < 1e-15);
    assert!((overlap_c(&comp, &OrthonormalBasis::fourier(2)) - 0.5).abs() < 1e-15);
    for d in 2..6 {
        let v = overlap_c(&OrthonormalBasis::computational(d), &OrthonormalBasis::fourier(d));
        assert!((v - 1.0 / d as f64).abs() < 1e-14);
    }
}

// ---------------------------------------------------------------- orders

#[test]
fn derived_order_values() {
    let two = derived_quantities(o(2.0));
    assert!((two.prime - 0.5).abs() < 1e-15);
    assert!((two.hat.unwrap().value() - 2.0 / 3.0).abs() < 1e-15);
    let one = derived_quantities(o(1.0));
    assert_eq!(one.prime, 0.0);
    assert_eq!(one.hat.unwrap().value(), 1.0);
    assert!(derived_quantities(o(0.5)).hat.unwrap().is_infinite());
}

#[test]
fn third_order_of_the_relation() {
    assert!((solve_third(o(4.0 / 3.0), o(2.0)).unwrap().value() - 2.0).abs() < 1e-12);
    assert!((solve_third(o(2.0 / 3.0), o(0.5)).unwrap().value() - 0.5).abs() < 1e-12);
    assert_eq!(solve_third(o(1.0), o(1.0)).unwrap().value(), 1.0);
}

#[test]
fn triple_classification() {
    let t = classify_triple(o(4.0 / 3.0), o(2.0), o(2.0));
    assert_eq!((t.case, t.sign), (CaseTag::Case1, SignProduct::Positive));
    let t = classify_triple(o(2.0 / 3.0), o(0.5), o(0.5));
    assert_eq!((t.case, t.sign), (CaseTag::Case2, SignProduct::Negative));
    assert_eq!(classify_triple(o(3.0), o(0.8), o(0.9)).case, CaseTag::Invalid);
}

#[test]
fn exclusion_feasibility() {
    assert!(exclusion_feasible(RenyiOrder::INFINITY, o(0.5), o(4.0 / 3.0)));
    assert!(exclusion_feasible(o(2.0), o(0.5), o(1.25)));
    assert!(exclusion_feasible(o(1.0), o(1.0), o(1.0)));
    assert!((min_entropy_partner(o(0.5)).unwrap().value() - 4.0 / 3.0).abs() < 1e-12);
}

// ---------------------------------------------------------------- entropies

fn classical_divergence(p: &[f64], q: &[f64], a: f64) -> f64 {
    log2_sum(p.iter().zip(q).map(|(x, y)| x.powf(a) * y.powf(1.0 - a))) / (a - 1.0)
}

#[test]
fn divergence_examples() {
    for a in [0.5, 0.9, 1.0, 2.0, f64::INFINITY] {
        for seed in 0..3 {
            let rho = random_state(StateKind::HsMixed, &[3], seed).unwrap();
            assert!(renyi_divergence(&rho, rho.matrix(), o(a)).unwrap().bits().abs() < 1e-10);
        }
    }
    let rho = DensityMatrix::diagonal(&[0.5, 0.5], &[2]).unwrap();
    let d = renyi_divergence(&rho, &diag(&[0.25, 0.75]), o(2.0)).unwrap().bits();
    assert!((d - classical_divergence(&[0.5, 0.5], &[0.25, 0.75], 2.0)).abs() < 1e-13);
    assert!((d - (4.0f64 / 3.0).log2()).abs() < 1e-13);
    let zero = DensityMatrix::diagonal(&[1.0, 0.0], &[2]).unwrap();
    for a in [0.6, 1.0, 3.0] {
        assert_eq!(renyi_divergence(&zero, &diag(&[0.0, 1.0]), o(a)).unwrap().bits(), f64::INFINITY);
    }
}

#[test]
fn entropy_examples() {
    for d in 2..5 {
        let mm = DensityMatrix::maximally_mixed(&[d]).unwrap();
        for a in [0.5, 1.0, 2.0, f64::INFINITY] {
            assert!((entropy(&mm, o(a)).bits() - (d as f64).log2()).abs() < 1e-13);
        }
    }
    let pure = random_state(StateKind::HaarPure, &[3], 1).unwrap();
    for a in [0.5, 1.0, 2.0, f64::INFINITY] {
        assert!(entropy(&pure, o(a)).bits().abs() < 1e-10);
    }
    let rho = DensityMatrix::diagonal(&[0.75, 0.25], &[2]).unwrap();
    assert!((entropy(&rho, o(2.0)).bits() - (8.0f64 / 5.0).log2()).abs() < 1e-13);
    assert!((entropy(&rho, RenyiOrder::INFINITY).bits() - (4.0f64 / 3.0).log2()).abs() < 1e-13);
    let half = 2.0 * ((3.0f64.sqrt() + 1.0) / 2.0).log2();
    assert!((entropy(&rho, o(0.5)).bits() - half).abs() < 1e-13);
}

#[test]
fn conditional_entropy_of_products_and_bell_states() {
    let ra = random_state(StateKind::HsMixed, &[2], 21).unwrap();
    let rb = random_state(StateKind::HsMixed, &[3], 22).unwrap();
    let rho = ra.tensor(&rb);
    for a in [0.6, 1.0, 2.0] {
        let h = entropy(&ra, o(a)).bits();
        for variant in [CondVariant::Down, CondVariant::Up] {
            let v = cond_entropy(&rho, o(a), &variant).unwrap().bits();
            assert!((v - h).abs() < 1e-6, "alpha {a}, {variant:?}: {v} vs {h}");
        }
    }
    for a in [0.5, 2.0 / 3.0, 1.0, 2.0, f64::INFINITY] {
        let v = cond_entropy(&bell(), o(a), &CondVariant::Down).unwrap().bits();
        assert!((v + 1.0).abs() < 1e-10, "alpha {a}: {v}");
    }
}

/// Joint distribution `p[a][b]` on a 3 x 2 alphabet.
const JOINT: [[f64; 2]; 3] = [[0.3, 0.05], [0.1, 0.2], [0.15, 0.2]];

fn classical_state() -> DensityMatrix {
    let flat: Vec<f64> = JOINT.iter().flatten().copied().collect();
    DensityMatrix::diagonal(&flat, &[3, 2]).unwrap()
}

fn classical_cond_down(a: f64) -> f64 {
    let pb: Vec<f64> = (0..2).map(|b| JOINT.iter().map(|row| row[b]).sum()).collect();
    let s = (0..2).flat_map(|b| JOINT.iter().map(move |row| (row[b], b))).map(|(p, b)| p.powf(a) * pb[b].powf(1.0 - a));
    log2_sum(s) / (1.0 - a)
}

fn classical_cond_up(a: f64) -> f64 {
    let s = (0..2).map(|b| JOINT.iter().map(|row| row[b].powf(a)).sum::<f64>().powf(1.0 / a));
    a / (1.0 - a) * log2_sum(s)
}

#[test]
fn classical_conditional_entropies() {
    let rho = classical_state();
    for a in [0.6, 0.75, 1.5, 2.0, 3.0] {
        let down = cond_entropy(&rho, o(a), &CondVariant::Down).unwrap().bits();
        assert!((down - classical_cond_down(a)).abs() < 1e-10, "alpha {a}: {down}");
        let up = cond_entropy(&rho, o(a), &CondVariant::Up).unwrap().bits();
        assert!((up - classical_cond_up(a)).abs() < 1e-6, "alpha {a}: {up} vs {}", classical_cond_up(a));
    }
}

// ---------------------------------------------------------------- optimize

#[test]
fn optimizer_recovers_divergence_minimizer() {
    let rb = random_state(StateKind::HsMixed, &[2], 31).unwrap();
    let res = optimize_over_density(
        |s| renyi_divergence(&rb, s, o(2.0)).map(|v| v.bits()).unwrap_or(f64::INFINITY),
        2,
        &SimplexOptConfig::minimize(),
        None,
    )
    .unwrap();
    assert!(res.value.abs() < 1e-9, "value {}", res.value);
    assert!(max_diff(res.optimizer(), rb.matrix()) < 1e-5);
}

#[test]
fn order_one_mutual_information_minimizer_is_the_marginal() {
    let rho = random_state(StateKind::HsMixed, &[2, 2], 32).unwrap();
    let cfg = SimplexOptConfig::minimize();
    let res = mutual_info_detailed(&rho, RenyiOrder::ONE, &MutualVariant::Up, &cfg).unwrap();
    let closed = von_neumann(&rho.marginal(&[0]).unwrap().eigen().values)
        + von_neumann(&rho.marginal(&[1]).unwrap().eigen().values)
        - von_neumann(&rho.eigen().values);
    assert!((res.value - closed).abs() < 1e-8, "{} vs {closed}", res.value);
    assert!(max_diff(res.optimizer(), rho.marginal(&[1]).unwrap().matrix()) < 1e-5);
}

#[test]
fn optimizer_agrees_with_grid_oracle() {
    let rho = random_state(StateKind::HsMixed, &[2, 2], 33).unwrap();
    let ra = rho.marginal(&[0]).unwrap().matrix().clone();
    let objective = |s: &ComplexMatrix| renyi_divergence(&rho, &ra.kron(s), o(1.5)).map(|v| v.bits()).unwrap_or(f64::INFINITY);
    let opt = optimize_over_density(objective, 2, &SimplexOptConfig::minimize(), None).unwrap();
    let grid = qubit_grid_oracle(objective, 60, Sense::Minimize).unwrap();
    assert!((opt.value - grid.value).abs() < 1e-4, "{} vs {}", opt.value, grid.value);
    assert!(opt.value <= grid.value + 1e-9);
}

#[test]
fn grid_oracle_examples() {
    let rho = DensityMatrix::diagonal(&[0.7, 0.3], &[2]).unwrap();
    let d2 = |s: &ComplexMatrix| renyi_divergence(&rho, s, o(2.0)).map(|v| v.bits()).unwrap_or(f64::INFINITY);
    let res = qubit_grid_oracle(d2, 40, Sense::Minimize).unwrap();
    assert!(max_diff(res.optimizer(), rho.matrix()) < 1e-3);
    assert!(res.value.abs() < 1e-6);

    let proj = diag(&[1.0, 0.0]);
    let linear = qubit_grid_oracle(|s| s.re_trace_product(&proj), 40, Sense::Maximize).unwrap();
    assert!((linear.value - 1.0).abs() < 1e-12);
    assert!(max_diff(linear.optimizer(), &proj) < 1e-6);

    let joint = random_state(StateKind::HsMixed, &[2, 2], 34).unwrap();
    let ra = joint.marginal(&[0]).unwrap().matrix().clone();
    let sandwiched = |s: &ComplexMatrix| renyi_divergence(&joint, &ra.kron(s), o(2.0)).map(|v| v.bits()).unwrap_or(f64::INFINITY);
    let coarse = qubit_grid_oracle(sandwiched, 40, Sense::Minimize).unwrap();
    let fine = qubit_grid_oracle(sandwiched, 80, Sense::Minimize).unwrap();
    assert!((coarse.value - fine.value).abs() < 5e-3);
}

// ---------------------------------------------------------------- mutual

#[test]
fn mutual_information_examples() {
    let product = random_state(StateKind::Product, &[2, 2], 41).unwrap();
    for a in [0.6, 1.0, 2.0] {
        for variant in [MutualVariant::Up, MutualVariant::Down] {
            let v = mutual_info(&product, o(a), &variant).unwrap().bits();
            assert!(v.abs() < 1e-6, "alpha {a}, {variant:?}: {v}");
        }
    }
    for seed in 0..5 {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 42 + seed).unwrap();
        let closed = marginal_entropy(&rho, &[0], RenyiOrder::ONE).unwrap().bits()
            + marginal_entropy(&rho, &[1], RenyiOrder::ONE).unwrap().bits()
            - entropy(&rho, RenyiOrder::ONE).bits();
        let v = mutual_info(&rho, RenyiOrder::ONE, &MutualVariant::Up).unwrap().bits();
        assert!((v - closed).abs() < 1e-6);
    }
    let v = mutual_info(&bell(), RenyiOrder::ONE, &MutualVariant::Up).unwrap().bits();
    assert!((v - 2.0).abs() < 1e-8);
}

#[test]
fn duality_examples() {
    let psi = random_state(StateKind::HaarPure, &[2, 2, 2], 51).unwrap();
    let tau = psi.marginal(&[0]).unwrap();
    let cfg = SimplexOptConfig::default().with_seed(1);
    let gap = duality_gap(&psi, tau.matrix(), RenyiOrder::ONE, &cfg).unwrap();
    assert!(gap.abs() < 1e-5, "gap {gap}");
    let psi = random_state(StateKind::HaarPure, &[2, 2, 4], 52).unwrap();
    let tau = psi.marginal(&[0]).unwrap();
    let gap = duality_gap(&psi, tau.matrix(), o(2.0), &cfg).unwrap();
    assert!(gap.abs() < 1e-4, "gap {gap}");
}

// ---------------------------------------------------------------- normforms

#[test]
fn norm_form_examples() {
    let rho = DensityMatrix::diagonal(&[0.75, 0.25], &[1, 2]).unwrap();
    let v = norm_form_value(&rho, o(2.0), &NormFormKind::Entropy).unwrap().bits();
    assert!((v - (8.0f64 / 5.0).log2()).abs() < 1e-9, "{v}");

    let product = random_state(StateKind::Product, &[2, 2], 61).unwrap();
    let ra = product.marginal(&[0]).unwrap();
    let v = norm_form_value(&product, o(2.0), &NormFormKind::Mutual(ra.matrix().clone())).unwrap().bits();
    assert!(v.abs() < 1e-5, "{v}");

    let rho = random_state(StateKind::HsMixed, &[2, 2], 62).unwrap();
    let ra = rho.marginal(&[0]).unwrap();
    let v = norm_form_value(&rho, o(2.0), &NormFormKind::Conditional(ra.matrix().clone())).unwrap().bits();
    let direct = -renyi_divergence(&rho, &ra.matrix().kron(&ComplexMatrix::identity(2)), o(2.0)).unwrap().bits();
    assert!((v - direct).abs() < 1e-7, "{v} vs {direct}");
}

// ---------------------------------------------------------------- relations

#[test]
fn decomposition_examples() {
    let opts = VerifyOptions::default();
    let unit = classify_triple(RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE);
    let rho = random_state(StateKind::HsMixed, &[2, 2], 71).unwrap();
    for form in [DecompositionForm::OptimizedAtLeast, DecompositionForm::MinimizedAtLeast] {
        let r = verify_decomposition(&rho, &unit, form, false, &opts).unwrap();
        assert!(r.margin_bits >= -1e-6, "{r:?}");
    }

    let case1 = classify_triple(o(4.0 / 3.0), o(2.0), o(2.0));
    for seed in 0..100 {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 1000 + seed).unwrap();
        let r = verify_decomposition(&rho, &case1, DecompositionForm::OptimizedAtLeast, false, &opts).unwrap();
        assert!(r.margin_bits >= -1e-6, "seed {seed}: {r:?}");
    }

    let case2 = classify_triple(o(2.0 / 3.0), o(0.5), o(0.5));
    let r = verify_decomposition(&bell(), &case2, DecompositionForm::OptimizedAtMost, false, &opts).unwrap();
    assert!(r.margin_bits >= -1e-6, "{r:?}");
    let h = cond_entropy(&bell(), o(2.0 / 3.0), &CondVariant::Down).unwrap().bits();
    assert!((h + 1.0).abs() < 1e-10);
}

#[test]
fn chain_rule_examples() {
    let opts = VerifyOptions::default();
    let negative = classify_triple(o(2.0 / 3.0), o(0.5), o(0.5));
    let r = verify_chain_rules(&bell(), &negative, &ChainForm::Marginal, &opts).unwrap();
    assert!(r.margin_bits >= -1e-6, "{r:?}");
    let psi = random_state(StateKind::HaarPure, &[2, 2, 2], 72).unwrap();
    let sigma_c = random_state(StateKind::HsMixed, &[2], 73).unwrap();
    let r = verify_chain_rules(&psi, &negative, &ChainForm::Generalized(sigma_c.matrix().clone()), &opts).unwrap();
    assert!(r.margin_bits >= -1e-6, "{r:?}");
}

#[test]
fn uncertainty_examples() {
    let opts = VerifyOptions::default();
    let orders = (o(2.0 / 3.0), o(0.5), o(0.5));
    let mixed = DensityMatrix::maximally_mixed(&[2, 2]).unwrap();
    let mub = MeasurementPair::mutually_unbiased(2);
    let r = verify_gbur(&mixed, &mub, orders, UncertaintyRelation::Consistent, None, &opts).unwrap();
    assert!(r.margin_bits >= -1e-12, "{r:?}");
    let comp = OrthonormalBasis::computational(2);
    let same = MeasurementPair::new(comp.clone(), comp).unwrap();
    for seed in 0..10 {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 80 + seed).unwrap();
        let r = verify_gbur(&rho, &same, orders, UncertaintyRelation::Consistent, None, &opts).unwrap();
        assert!(r.margin_bits >= -1e-6, "{r:?}");
    }
    let rho = random_state(StateKind::HsMixed, &[2, 2], 90).unwrap();
    let r = verify_gbur(&rho, &mub, (RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE), UncertaintyRelation::Consistent, None, &opts)
        .unwrap();
    assert!(r.margin_bits >= -1e-6, "{r:?}");
}

#[test]
fn exclusion_examples() {
    let opts = VerifyOptions::default();
    let mub = MeasurementPair::mutually_unbiased(2);
    let memory = random_state(StateKind::ClassicalMemory, &[2, 2], 91).unwrap();
    let r = verify_exclusion(&memory, &mub, (RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE), ExclusionMode::HallLimit, &opts)
        .unwrap();
    assert!((r.rhs_bits - 1.0).abs() < 1e-12);
    assert_eq!(renyi_core::sweep::quantize(r.rhs_bits), 1.0);
    assert!(r.margin_bits >= 0.0, "{r:?}");
    for seed in 0..10 {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 92 + seed).unwrap();
        let r = verify_exclusion(&rho, &mub, (o(2.0), o(0.5), o(1.25)), ExclusionMode::General, &opts).unwrap();
        assert!(r.margin_bits >= -1e-6, "{r:?}");
        let r = verify_exclusion(&rho, &mub, (RenyiOrder::INFINITY, o(0.5), RenyiOrder::ONE), ExclusionMode::MinEntropy, &opts)
            .unwrap();
        assert!((r.gamma.unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!(r.margin_bits >= -1e-6, "{r:?}");
    }
}

#[test]
fn sanity_battery_examples() {
    let opts = VerifyOptions::default();
    // Trial indices follow the cycle of state kinds.
    let trial = renyi_core::relations::SANITY_KINDS.iter().position(|k| *k == StateKind::MaxEntangled).unwrap() as u64;
    let records = sanity_trial((2, 2), 5, trial, &opts).unwrap();
    assert!(!records.is_empty());
    for r in &records {
        assert!(r.margin_bits >= -1e-6, "{r:?}");
    }
    let product = renyi_core::relations::SANITY_KINDS.iter().position(|k| *k == StateKind::Product).unwrap() as u64;
    for r in sanity_trial((2, 3), 5, product, &opts).unwrap() {
        assert!(r.margin_bits >= -1e-6, "{r:?}");
    }
}
