//! Acceptance battery.
//!
//! Each criterion runs a fixed, seeded workload, emits its individual checks as
//! [`InequalityRecord`]s (suite `selftest`) and reports one pass/fail outcome. The
//! battery is deterministic: two runs with the same seed produce byte-identical record
//! CSV, which the last criterion checks by running the battery twice.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::entropies::{cond_entropy, cond_entropy_up_detailed, default_config_for, divergence_eig, entropy, CondVariant};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, DEFAULT_KERNEL_EPS};
use crate::mutual::{duality_gap, mutual_info, mutual_info_detailed, MutualVariant};
use crate::normforms::{norm_form_value, NormFormKind};
use crate::optimize::{qubit_grid_oracle, Sense, SimplexOptConfig};
use crate::orders::{
    classify_triple, min_entropy_partner, sample_case_triple, sample_exclusion_triple, sign_product, CaseTag, RenyiOrder,
    SignProduct,
};
use crate::relations::{
    decomposition_records, sanity_trial, verify_exclusion, verify_gbur, ExclusionMode, InequalityRecord, Soundness,
    UncertaintyRelation, VerifyOptions,
};
use crate::report::records_to_csv;
use crate::states::{derive_seed, random_state, rng_from_seed, DensityMatrix, MeasurementPair, OrthonormalBasis, StateKind};
use crate::sweep::{quantize_record as quantized, uncertainty_orders};

/// Pinned thresholds of the battery.
pub mod limits {
    /// Order-one equivalences, in bits.
    pub const ORDER_ONE_TOL: f64 = 1e-6;
    pub const ORDER_ONE_SECONDS: f64 = 60.0;
    /// Decomposition margins, in bits.
    pub const DECOMPOSITION_TOL: f64 = 1e-6;
    pub const DECOMPOSITION_SECONDS: f64 = 600.0;
    /// Entropic value against norm-form value, in bits.
    pub const NORM_FORM_TOL: f64 = 1e-5;
    /// Duality gap, in bits.
    pub const DUALITY_TOL: f64 = 1e-4;
    /// Uncertainty and exclusion margins, in bits.
    pub const EXCLUSION_TOL: f64 = 1e-6;
    /// Data-processing margins, in bits.
    pub const DPI_TOL: f64 = 1e-8;
    /// Remaining sanity margins, in bits.
    pub const SANITY_TOL: f64 = 1e-6;
    /// Optimizer against grid oracle, in bits.
    pub const GRID_AGREEMENT_TOL: f64 = 1e-3;
    pub const GRID_RESOLUTION: usize = 60;
    /// Spread of restart outcomes on convex problems, in bits.
    pub const RESTART_SPREAD_TOL: f64 = 1e-6;
    /// Wall time of the whole selftest (both runs).
    pub const SELFTEST_SECONDS: f64 = 900.0;
}

/// Workload sizes of the battery.
pub mod workload {
    pub const ORDER_ONE_STATES: u64 = 200;
    pub const ORDER_ONE_SHAPES: [(usize, usize); 3] = [(2, 2), (2, 3), (3, 3)];
    pub const TRIPLES_PER_CASE: usize = 20;
    pub const DECOMPOSITION_STATES: u64 = 100;
    pub const DECOMPOSITION_SHAPES: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 2), (3, 3)];
    pub const NORM_FORM_ORDERS: [f64; 4] = [0.6, 0.75, 2.0, 3.0];
    pub const NORM_FORM_STATES: u64 = 50;
    pub const DUALITY_STATES: u64 = 50;
    /// Distance above 1/2 of the smallest duality order.
    pub const DUALITY_EPSILON: f64 = 0.01;
    pub const CLASSIFICATION_TRIPLES: u64 = 100_000;
    pub const EXCLUSION_DIMS: [usize; 2] = [2, 3];
    pub const HAAR_PAIRS: u64 = 20;
    pub const EXCLUSION_STATES: u64 = 100;
    pub const EXCLUSION_ORDER_SAMPLES: usize = 10;
    /// Sanity states per shape (500 in total).
    pub const SANITY_PLAN: [((usize, usize), u64); 3] = [((2, 2), 250), ((2, 3), 150), ((3, 3), 100)];
    pub const GRID_OBJECTIVES: u64 = 50;
    pub const GRID_ORDERS: [f64; 6] = [0.6, 0.75, 1.0, 1.5, 2.0, 3.0];
    pub const CONVEX_RESTARTS: usize = 3;
}

/// Outcome of one criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    /// One summary line: `[PASS] 3 norm-form equivalence: ...`.
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

/// Result of the battery.
#[derive(Clone, Debug)]
pub struct SelftestOutcome {
    pub criteria: Vec<CriterionOutcome>,
    pub records: Vec<InequalityRecord>,
}

impl SelftestOutcome {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// Records as CSV (timing is not part of the records).
    pub fn csv(&self) -> String {
        records_to_csv(&self.records)
    }
}

/// Settings of a selftest run.
#[derive(Clone, Debug)]
#[derive(Default)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Worker threads; `None` uses one per core. Does not affect results.
    pub workers: Option<usize>,
}


fn order(x: f64) -> RenyiOrder {
    RenyiOrder::new(x).expect("constant orders are valid")
}

fn check_record(name: &str, orders: [Option<f64>; 3], dims: (usize, usize), seed: u64, trial: u64, value: f64, reference: f64) -> InequalityRecord {
    InequalityRecord {
        suite: "selftest".to_string(),
        name: name.to_string(),
        alpha: orders[0],
        beta: orders[1],
        gamma: orders[2],
        delta: None,
        dim_a: dims.0,
        dim_b: dims.1,
        seed,
        trial,
        lhs_bits: value,
        rhs_bits: reference,
        margin_bits: -(value - reference).abs(),
        soundness: Soundness::Heuristic,
        converged: true,
    }
}

/// Count, number below `-tol` and smallest margin of `records`.
fn tally<'a>(records: impl Iterator<Item = &'a InequalityRecord>, tol: f64) -> (usize, usize, f64) {
    let mut count = 0;
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for r in records {
        count += 1;
        if !(r.margin_bits >= -tol) {
            failures += 1;
        }
        if !(r.margin_bits >= worst) {
            worst = r.margin_bits;
        }
    }
    (count, failures, worst)
}

/// Per-criterion seed stream.
fn stream(seed: u64, criterion: u64) -> u64 {
    derive_seed(seed, 0x5e1f_7e57_0000 + criterion)
}

/// State families used for generic random states.
const STATE_KINDS: [StateKind; 5] = [
    StateKind::HsMixed,
    StateKind::HaarPure,
    StateKind::HsMixed,
    StateKind::Product,
    StateKind::ClassicalQuantum,
];

fn generic_state(shape: (usize, usize), seed: u64, index: u64) -> Result<DensityMatrix> {
    let kind = STATE_KINDS[(index % STATE_KINDS.len() as u64) as usize];
    random_state(kind, &[shape.0, shape.1], derive_seed(seed, index))
}

fn order_one_recovery(seed: u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)> {
    let start = Instant::now();
    let base = stream(seed, 1);
    let one = RenyiOrder::ONE;
    let tasks: Vec<((usize, usize), u64)> = workload::ORDER_ONE_SHAPES
        .iter()
        .flat_map(|&s| (0..workload::ORDER_ONE_STATES).map(move |t| (s, t)))
        .collect();
    let batches: Vec<Vec<InequalityRecord>> = tasks
        .par_iter()
        .map(|&(shape, t)| -> Result<Vec<InequalityRecord>> {
            let state_seed = derive_seed(base, (shape.0 * 16 + shape.1) as u64);
            let rho = generic_state(shape, state_seed, t)?;
            let info = mutual_info(&rho, one, &MutualVariant::Up)?.bits();
            let h_a = entropy(&rho.marginal(&[0])?, one).bits();
            let h_b = entropy(&rho.marginal(&[1])?, one).bits();
            let h_ab = entropy(&rho, one).bits();
            let h_a_given_b = cond_entropy(&rho, one, &CondVariant::Down)?.bits();
            let orders = [Some(1.0), None, None];
            Ok(vec![
                check_record("order1-conditional", orders, shape, seed, t, info, h_a - h_a_given_b),
                check_record("order1-joint", orders, shape, seed, t, info, h_a + h_b - h_ab),
            ])
        })
        .collect::<Result<_>>()?;
    let records: Vec<InequalityRecord> = batches.into_iter().flatten().collect();
    let seconds = start.elapsed().as_secs_f64();
    let (count, failures, worst) = tally(records.iter(), limits::ORDER_ONE_TOL);
    let enough = count == 2 * workload::ORDER_ONE_STATES as usize * workload::ORDER_ONE_SHAPES.len();
    let in_time = seconds <= limits::ORDER_ONE_SECONDS;
    Ok((
        CriterionOutcome {
            id: 1,
            title: "order-one equality recovery",
            passed: failures == 0 && enough && in_time,
            detail: format!(
                "{count} checks on 2x2, 2x3, 3x3, {failures} beyond {:e} bits, largest deviation {:.3e}, time limit {} s {}",
                limits::ORDER_ONE_TOL,
                -worst,
                limits::ORDER_ONE_SECONDS,
                if in_time { "met" } else { "exceeded" }
            ),
            seconds,
        },
        records,
    ))
}

fn decomposition_sweep(seed: u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)> {
    let start = Instant::now();
    let base = stream(seed, 2);
    let mut rng = rng_from_seed(derive_seed(base, 0));
    let mut triples = Vec::new();
    for case in [CaseTag::Case1, CaseTag::Case2, CaseTag::Case3, CaseTag::Case4] {
        for _ in 0..workload::TRIPLES_PER_CASE {
            let t = sample_case_triple(case, &mut rng)?;
            // Present the pair in a random arrangement to exercise canonicalization.
            let (a, b, g) = t.original();
            triples.push(if rng.random_bool(0.5) { (a, g, b) } else { (a, b, g) });
        }
    }
    let expected_sign = |case: CaseTag| match case {
        CaseTag::Case1 | CaseTag::Case4 => SignProduct::Positive,
        _ => SignProduct::Negative,
    };
    let mut directions_ok = true;
    for &(a, b, g) in &triples {
        let t = classify_triple(a, b, g);
        directions_ok &= t.sign == expected_sign(t.case) && t.sign == sign_product(&[a, b, g]);
    }
    let tasks: Vec<(usize, u64)> = (0..triples.len())
        .flat_map(|k| (0..workload::DECOMPOSITION_STATES).map(move |t| (k, t)))
        .collect();
    let batches: Vec<Vec<InequalityRecord>> = tasks
        .par_iter()
        .map(|&(k, t)| -> Result<Vec<InequalityRecord>> {
            let shapes = &workload::DECOMPOSITION_SHAPES;
            let shape = shapes[(t % shapes.len() as u64) as usize];
            let trial_seed = derive_seed(derive_seed(base, 1 + k as u64), t);
            let rho = generic_state(shape, trial_seed, t)?;
            let opts = VerifyOptions {
                tolerance_bits: limits::DECOMPOSITION_TOL,
                optimizer_seed: derive_seed(trial_seed, 7),
                ..VerifyOptions::default()
            };
            Ok(decomposition_records(&rho, triples[k], &opts)?
                .into_iter()
                .map(|r| r.with_provenance(seed, k as u64 * workload::DECOMPOSITION_STATES + t))
                .collect())
        })
        .collect::<Result<_>>()?;
    let records: Vec<InequalityRecord> = batches.into_iter().flatten().map(quantized).collect();
    let seconds = start.elapsed().as_secs_f64();
    let (count, failures, worst) = tally(records.iter(), limits::DECOMPOSITION_TOL);
    let swapped = records.iter().filter(|r| r.name.ends_with(":swap")).count();
    let enough = count == 4 * triples.len() * workload::DECOMPOSITION_STATES as usize;
    let in_time = seconds <= limits::DECOMPOSITION_SECONDS;
    Ok((
        CriterionOutcome {
            id: 2,
            title: "decomposition sweep",
            passed: failures == 0 && enough && directions_ok && in_time,
            detail: format!(
                "{} triples x {} states, {count} records ({swapped} with exchanged systems), {failures} below -{:e}, min margin {:.3e}, directions {}, time limit {} s {}",
                triples.len(),
                workload::DECOMPOSITION_STATES,
                limits::DECOMPOSITION_TOL,
                worst,
                if directions_ok { "consistent" } else { "INCONSISTENT" },
                limits::DECOMPOSITION_SECONDS,
                if in_time { "met" } else { "exceeded" }
            ),
            seconds,
        },
        records,
    ))
}

fn norm_form_equivalence(seed: u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)> {
    let start = Instant::now();
    let base = stream(seed, 3);
    let tasks: Vec<(f64, u64)> = workload::NORM_FORM_ORDERS
        .iter()
        .flat_map(|&a| (0..workload::NORM_FORM_STATES).map(move |t| (a, t)))
        .collect();
    let batches: Vec<Vec<InequalityRecord>> = tasks
        .par_iter()
        .map(|&(a, t)| -> Result<Vec<InequalityRecord>> {
            let alpha = order(a);
            let rho = generic_state((2, 2), base, t)?;
            let reference = random_state(StateKind::HsMixed, &[2], derive_seed(base, 1000 + t))?;
            let sigma = reference.matrix().clone();
            let orders = [Some(a), None, None];
            let re_form = norm_form_value(&rho, alpha, &NormFormKind::Entropy)?.bits();
            let re = entropy(&rho.marginal(&[1])?, alpha).bits();
            let cre_form = norm_form_value(&rho, alpha, &NormFormKind::Conditional(sigma.clone()))?.bits();
            let cre = cond_entropy(&rho.swap()?, alpha, &CondVariant::Generalized(sigma.clone()))?.bits();
            let mi_form = norm_form_value(&rho, alpha, &NormFormKind::Mutual(sigma.clone()))?.bits();
            let mi = mutual_info(&rho, alpha, &MutualVariant::Generalized(sigma))?.bits();
            Ok(vec![
                check_record("normform-entropy", orders, (2, 2), seed, t, re_form, re),
                check_record("normform-conditional", orders, (2, 2), seed, t, cre_form, cre),
                check_record("normform-mutual", orders, (2, 2), seed, t, mi_form, mi),
            ])
        })
        .collect::<Result<_>>()?;
    let records: Vec<InequalityRecord> = batches.into_iter().flatten().map(quantized).collect();
    let seconds = start.elapsed().as_secs_f64();
    let (count, failures, worst) = tally(records.iter(), limits::NORM_FORM_TOL);
    let enough = count == 3 * tasks.len();
    Ok((
        CriterionOutcome {
            id: 3,
            title: "norm-form equivalence",
            passed: failures == 0 && enough,
            detail: format!(
                "{count} comparisons (entropy, conditional, mutual) at orders 0.6, 0.75, 2, 3, {failures} beyond {:e} bits, largest deviation {:.3e}",
                limits::NORM_FORM_TOL,
                -worst
            ),
            seconds,
        },
        records,
    ))
}

fn duality(seed: u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)> {
    let start = Instant::now();
    let base = stream(seed, 4);
    let orders = [0.5 + workload::DUALITY_EPSILON, 1.0, 2.0];
    let tasks: Vec<(f64, u64)> = orders
        .iter()
        .flat_map(|&a| (0..workload::DUALITY_STATES).map(move |t| (a, t)))
        .collect();
    let records: Vec<InequalityRecord> = tasks
        .par_iter()
        .map(|&(a, t)| -> Result<InequalityRecord> {
            let psi = random_state(StateKind::HaarPure, &[2, 2, 4], derive_seed(base, t))?;
            let tau = psi.marginal(&[0])?;
            let cfg = SimplexOptConfig::default().with_seed(derive_seed(base, 1000 + t));
            let gap = duality_gap(&psi, tau.matrix(), order(a), &cfg)?;
            Ok(check_record("duality-gap", [Some(a), None, None], (2, 8), seed, t, gap, 0.0))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(quantized)
        .collect();
    let seconds = start.elapsed().as_secs_f64();
    let (count, failures, worst) = tally(records.iter(), limits::DUALITY_TOL);
    Ok((
        CriterionOutcome {
            id: 4,
            title: "duality",
            passed: failures == 0 && count == tasks.len(),
            detail: format!(
                "{count} pure 2x2x4 states at orders {}, 1, 2, {failures} gaps beyond {:e} bits, largest gap {:.3e}",
                0.5 + workload::DUALITY_EPSILON,
                limits::DUALITY_TOL,
                -worst
            ),
            seconds,
        },
        records,
    ))
}

/// Regime of a triple by direct interval membership, without canonicalization helpers.
fn range_oracle(alpha: f64, beta: f64, gamma: f64) -> CaseTag {
    if alpha == 1.0 && beta == 1.0 && gamma == 1.0 {
        return CaseTag::UnitLimit;
    }
    if [alpha, beta, gamma].contains(&1.0) {
        return CaseTag::Invalid;
    }
    let w = |x: f64| if x.is_infinite() { 1.0 } else { x / (x - 1.0) };
    let lhs = w(alpha);
    let rhs = w(beta) + w(gamma);
    if (lhs - rhs).abs() > 1e-6 * lhs.abs().max(rhs.abs()).max(1.0) {
        return CaseTag::Invalid;
    }
    let (hi, lo) = if beta >= gamma { (beta, gamma) } else { (gamma, beta) };
    if lo < 0.5 {
        return CaseTag::Invalid;
    }
    let case1 = alpha > 1.0 && alpha < 2.0 && lo > 1.0;
    let case2 = (2.0 / 3.0..1.0).contains(&alpha) && hi < 1.0;
    let case3 = alpha > 1.0 && hi > 1.0 && hi < 2.0 && lo < 1.0;
    let case4 = alpha > 0.0 && alpha < 1.0 && lo < 1.0 && hi > 1.0;
    match (case1, case2, case3, case4) {
        (true, false, false, false) => CaseTag::Case1,
        (false, true, false, false) => CaseTag::Case2,
        (false, false, true, false) => CaseTag::Case3,
        (false, false, false, true) => CaseTag::Case4,
        _ => CaseTag::Invalid,
    }
}

fn random_classification_triple<R: Rng>(rng: &mut R) -> Result<(f64, f64, f64)> {
    let w = |x: f64| x / (x - 1.0);
    let from_w = |v: f64| v / (v - 1.0);
    loop {
        let kind = rng.random_range(0..20u8);
        let triple = match kind {
            0..=11 => {
                let alpha: f64 = rng.random_range(0.05..6.0);
                let beta: f64 = rng.random_range(0.3..8.0);
                if (alpha - 1.0).abs() < 1e-3 || (beta - 1.0).abs() < 1e-3 {
                    continue;
                }
                let mut wg = w(alpha) - w(beta);
                if kind >= 8 {
                    // Off the relation by a clear margin.
                    let shift = rng.random_range(1e-3..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    wg += shift * wg.abs().max(1.0);
                }
                let gamma = from_w(wg);
                if !(gamma.is_finite() && gamma > 0.0) || (gamma - 1.0).abs() < 1e-9 {
                    continue;
                }
                (alpha, beta, gamma)
            }
            12 => (1.0, 1.0, 1.0),
            _ => {
                let case = [CaseTag::Case1, CaseTag::Case2, CaseTag::Case3, CaseTag::Case4][rng.random_range(0..4)];
                let (a, b, g) = sample_case_triple(case, rng)?.original();
                (a.value(), b.value(), g.value())
            }
        };
        return Ok(if rng.random_bool(0.5) { (triple.0, triple.2, triple.1) } else { triple });
    }
}

fn classification(seed: u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)> {
    let start = Instant::now();
    let mut rng = rng_from_seed(stream(seed, 5));
    let mut disagreements = 0u64;
    let mut sign_violations = 0u64;
    let mut counts = [0u64; 6];
    let mut first_disagreement = None;
    for k in 0..workload::CLASSIFICATION_TRIPLES {
        let (a, b, g) = random_classification_triple(&mut rng)?;
        let t = classify_triple(order(a), order(b), order(g));
        let expected = range_oracle(a, b, g);
        let slot = match t.case {
            CaseTag::Case1 => 0,
            CaseTag::Case2 => 1,
            CaseTag::Case3 => 2,
            CaseTag::Case4 => 3,
            CaseTag::UnitLimit => 4,
            CaseTag::Invalid => 5,
        };
        counts[slot] += 1;
        if t.case != expected {
            disagreements += 1;
            first_disagreement.get_or_insert((k, a, b, g, t.case, expected));
        }
        if t.is_valid() && t.case != CaseTag::UnitLimit {
            // A valid triple has alpha outside [min, max] of the other two; alpha below
            // both forces a positive sign product and alpha above both a negative one.
            let (hi, lo) = (b.max(g), b.min(g));
            let sign = (a - 1.0) * (b - 1.0) * (g - 1.0);
            let consistent = (a < lo && sign > 0.0 && t.sign == SignProduct::Positive)
                || (a > hi && sign < 0.0 && t.sign == SignProduct::Negative);
            if !consistent {
                sign_violations += 1;
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let record = check_record(
        "classification-disagreements",
        [None, None, None],
        (0, 0),
        seed,
        0,
        (disagreements + sign_violations) as f64,
        0.0,
    );
    let mut detail = format!(
        "{} triples (case1 {}, case2 {}, case3 {}, case4 {}, unit {}, invalid {}), {disagreements} disagreements with the range oracle, {sign_violations} sign-ordering violations",
        workload::CLASSIFICATION_TRIPLES,
        counts[0],
        counts[1],
        counts[2],
        counts[3],
        counts[4],
        counts[5]
    );
    if let Some((k, a, b, g, got, want)) = first_disagreement {
        detail.push_str(&format!("; first at #{k}: ({a}, {b}, {g}) classified {got:?}, oracle {want:?}"));
    }
    Ok((
        CriterionOutcome {
            id: 5,
            title: "order classification",
            passed: disagreements == 0 && sign_violations == 0 && counts[..4].iter().all(|&c| c > 0) && counts[5] > 0,
            detail,
            seconds,
        },
        vec![record],
    ))
}

fn exclusion(seed: u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)> {
    let start = Instant::now();
    let base = stream(seed, 6);
    let mut rng = rng_from_seed(derive_seed(base, 0));
    let mut exclusion_orders = vec![(order(2.0), order(0.5), order(1.25))];
    while exclusion_orders.len() < workload::EXCLUSION_ORDER_SAMPLES {
        exclusion_orders.push(sample_exclusion_triple(&mut rng));
    }
    let mut uncertainty = Vec::new();
    for &(_, b, g) in &exclusion_orders {
        uncertainty.push(uncertainty_orders(b, g).ok_or_else(|| Error::validation("no uncertainty orders"))?);
    }
    let pairing = order(0.5);
    let partner = min_entropy_partner(pairing).ok_or_else(|| Error::validation("no partner order"))?;
    uncertainty.push(uncertainty_orders(pairing, partner).ok_or_else(|| Error::validation("no uncertainty orders"))?);

    let mut configs = Vec::new();
    for &d in &workload::EXCLUSION_DIMS {
        configs.push((d, "mub", MeasurementPair::mutually_unbiased(d)));
        for k in 0..workload::HAAR_PAIRS {
            let pair = MeasurementPair::new(
                OrthonormalBasis::haar(d, derive_seed(base, 100 * d as u64 + 2 * k + 1)),
                OrthonormalBasis::haar(d, derive_seed(base, 100 * d as u64 + 2 * k + 2)),
            )?;
            configs.push((d, "haar", pair));
        }
    }
    let tasks: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|c| (0..workload::EXCLUSION_STATES).map(move |t| (c, t)))
        .collect();
    let opts = VerifyOptions {
        tolerance_bits: limits::EXCLUSION_TOL,
        ..VerifyOptions::default()
    };
    let one = RenyiOrder::ONE;
    let batches: Vec<Vec<InequalityRecord>> = tasks
        .par_iter()
        .map(|&(c, t)| -> Result<Vec<InequalityRecord>> {
            let (d, tag, pair) = &configs[c];
            let shape = [*d, *d];
            let trial_seed = derive_seed(derive_seed(base, 1000 + c as u64), t);
            let rho = generic_state((*d, *d), trial_seed, t)?;
            let memory = random_state(StateKind::ClassicalMemory, &shape, derive_seed(trial_seed, 1))?;
            let mut out = Vec::new();
            let mut push = |mut r: InequalityRecord| {
                r.name = format!("{}:{tag}", r.name);
                out.push(r.with_provenance(seed, c as u64 * workload::EXCLUSION_STATES + t));
            };
            for &triple in &uncertainty {
                push(verify_gbur(&rho, pair, triple, UncertaintyRelation::Consistent, None, &opts)?);
            }
            for &triple in &exclusion_orders {
                push(verify_exclusion(&rho, pair, triple, ExclusionMode::General, &opts)?);
            }
            push(verify_exclusion(&rho, pair, (RenyiOrder::INFINITY, pairing, one), ExclusionMode::MinEntropy, &opts)?);
            push(verify_exclusion(&memory, pair, (one, one, one), ExclusionMode::HallLimit, &opts)?);
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let records: Vec<InequalityRecord> = batches.into_iter().flatten().map(quantized).collect();
    let seconds = start.elapsed().as_secs_f64();
    let (count, failures, worst) = tally(records.iter(), limits::EXCLUSION_TOL);
    let (gbur_count, gbur_failures, _) = tally(records.iter().filter(|r| r.suite == "gbur"), limits::EXCLUSION_TOL);
    let qubit_hall: Vec<&InequalityRecord> = records
        .iter()
        .filter(|r| r.name == "hall_limit:mub" && r.dim_a == 2)
        .collect();
    let hall_bound_exact = !qubit_hall.is_empty() && qubit_hall.iter().all(|r| r.rhs_bits == 1.0);
    let includes_standard = exclusion_orders[0] == (order(2.0), order(0.5), order(1.25));
    Ok((
        CriterionOutcome {
            id: 6,
            title: "uncertainty and exclusion relations",
            passed: failures == 0 && hall_bound_exact && includes_standard && exclusion_orders.len() >= 10,
            detail: format!(
                "{} basis pairs x {} states, {} exclusion order samples incl. (2, 1/2, 5/4) and the (1/2, 4/3) pairing, {count} records ({gbur_count} uncertainty, {gbur_failures} failing), {failures} below -{:e}, min margin {:.3e}, qubit MUB Hall bound {}",
                configs.len(),
                workload::EXCLUSION_STATES,
                exclusion_orders.len(),
                limits::EXCLUSION_TOL,
                worst,
                if hall_bound_exact { "exactly 1.0 bits" } else { "NOT 1.0 bits" }
            ),
            seconds,
        },
        records,
    ))
}

fn sanity(seed: u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)> {
    let start = Instant::now();
    let base = stream(seed, 7);
    let tasks: Vec<((usize, usize), u64)> = workload::SANITY_PLAN
        .iter()
        .flat_map(|&(shape, n)| (0..n).map(move |t| (shape, t)))
        .collect();
    let opts = VerifyOptions {
        tolerance_bits: limits::SANITY_TOL,
        ..VerifyOptions::default()
    };
    let batches: Vec<Vec<InequalityRecord>> = tasks
        .par_iter()
        .map(|&(shape, t)| {
            let shape_seed = derive_seed(base, (shape.0 * 16 + shape.1) as u64);
            let opts = VerifyOptions {
                optimizer_seed: derive_seed(shape_seed, 1_000_000 + t),
                ..opts.clone()
            };
            sanity_trial(shape, shape_seed, t, &opts).map(|v| v.into_iter().map(|r| r.with_provenance(seed, t)).collect())
        })
        .collect::<Result<_>>()?;
    let records: Vec<InequalityRecord> = batches.into_iter().flatten().map(quantized).collect();
    let seconds = start.elapsed().as_secs_f64();
    let is_dpi = |r: &&InequalityRecord| r.name.starts_with("dpi-");
    let (dpi_count, dpi_failures, dpi_worst) = tally(records.iter().filter(is_dpi), limits::DPI_TOL);
    let (other_count, other_failures, other_worst) =
        tally(records.iter().filter(|r| !r.name.starts_with("dpi-")), limits::SANITY_TOL);
    let states: u64 = workload::SANITY_PLAN.iter().map(|&(_, n)| n).sum();
    Ok((
        CriterionOutcome {
            id: 7,
            title: "sanity battery",
            passed: dpi_failures == 0 && other_failures == 0,
            detail: format!(
                "{states} states, {dpi_count} data-processing checks ({dpi_failures} below -{:e}, min {:.3e}), {other_count} other checks ({other_failures} below -{:e}, min {:.3e})",
                limits::DPI_TOL,
                dpi_worst,
                limits::SANITY_TOL,
                other_worst
            ),
            seconds,
        },
        records,
    ))
}

fn optimizer_validation(seed: u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)> {
    let start = Instant::now();
    let base = stream(seed, 8);
    let tasks: Vec<u64> = (0..workload::GRID_OBJECTIVES).collect();
    let batches: Vec<Vec<InequalityRecord>> = tasks
        .par_iter()
        .map(|&k| -> Result<Vec<InequalityRecord>> {
            let orders = &workload::GRID_ORDERS;
            let a = orders[(k / 2 % orders.len() as u64) as usize];
            let alpha = order(a);
            let rho = generic_state((2, 2), base, k)?;
            let cfg = default_config_for(alpha).with_seed(derive_seed(base, 1000 + k));
            let identity = ComplexMatrix::identity(2);
            let rho_a = rho.marginal(&[0])?.matrix().clone();
            let tag = [Some(a), None, None];
            let (name, optimized, grid) = if k % 2 == 0 {
                let res = cond_entropy_up_detailed(&rho, alpha, &cfg)?;
                let grid = qubit_grid_oracle(
                    |s| -divergence_eig(rho.matrix(), &linalg::eigh_trusted(&identity.kron(s)), alpha, DEFAULT_KERNEL_EPS),
                    limits::GRID_RESOLUTION,
                    Sense::Maximize,
                )?;
                ("grid-conditional", res.value, grid.value)
            } else {
                let res = mutual_info_detailed(&rho, alpha, &MutualVariant::Up, &cfg)?;
                let grid = qubit_grid_oracle(
                    |s| divergence_eig(rho.matrix(), &linalg::eigh_trusted(&rho_a.kron(s)), alpha, DEFAULT_KERNEL_EPS),
                    limits::GRID_RESOLUTION,
                    Sense::Minimize,
                )?;
                ("grid-mutual", res.value, grid.value)
            };
            let mut out = vec![check_record(name, tag, (2, 2), seed, k, optimized, grid)];
            if a >= 1.0 {
                let cfg = cfg.with_restarts(workload::CONVEX_RESTARTS);
                let res = if k % 2 == 0 {
                    cond_entropy_up_detailed(&rho, alpha, &cfg)?
                } else {
                    mutual_info_detailed(&rho, alpha, &MutualVariant::Up, &cfg)?
                };
                let spread = res.restart_spread();
                out.push(check_record(&format!("{name}-restart-spread"), tag, (2, 2), seed, k, spread, 0.0));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let records: Vec<InequalityRecord> = batches.into_iter().flatten().map(quantized).collect();
    let seconds = start.elapsed().as_secs_f64();
    let (grid_count, grid_failures, grid_worst) =
        tally(records.iter().filter(|r| !r.name.ends_with("restart-spread")), limits::GRID_AGREEMENT_TOL);
    let (spread_count, spread_failures, spread_worst) =
        tally(records.iter().filter(|r| r.name.ends_with("restart-spread")), limits::RESTART_SPREAD_TOL);
    Ok((
        CriterionOutcome {
            id: 8,
            title: "optimizer validation",
            passed: grid_failures == 0 && spread_failures == 0 && grid_count == workload::GRID_OBJECTIVES as usize && spread_count > 0,
            detail: format!(
                "{grid_count} qubit objectives against a resolution-{} grid ({grid_failures} beyond {:e} bits, largest difference {:.3e}), {spread_count} convex restart spreads ({spread_failures} beyond {:e}, largest {:.3e})",
                limits::GRID_RESOLUTION,
                limits::GRID_AGREEMENT_TOL,
                -grid_worst,
                limits::RESTART_SPREAD_TOL,
                -spread_worst
            ),
            seconds,
        },
        records,
    ))
}

type CriterionRun = fn(u64) -> Result<(CriterionOutcome, Vec<InequalityRecord>)>;

const CRITERIA: [CriterionRun; 8] = [
    order_one_recovery,
    decomposition_sweep,
    norm_form_equivalence,
    duality,
    classification,
    exclusion,
    sanity,
    optimizer_validation,
];

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs criteria 1 to 8 once, calling `progress` after each.
pub fn run_battery(options: &SelftestOptions, mut progress: impl FnMut(&CriterionOutcome)) -> Result<SelftestOutcome> {
    let mut criteria = Vec::new();
    let mut records = Vec::new();
    for run in CRITERIA {
        let (outcome, recs) = with_pool(options.workers, || run(options.seed))??;
        progress(&outcome);
        criteria.push(outcome);
        records.extend(recs);
    }
    Ok(SelftestOutcome { criteria, records })
}

/// Runs the battery twice and adds the determinism criterion comparing the two record
/// CSVs. The criteria of the first run are reported.
pub fn run_selftest(options: &SelftestOptions, mut progress: impl FnMut(&CriterionOutcome)) -> Result<SelftestOutcome> {
    let start = Instant::now();
    let mut first = run_battery(options, &mut progress)?;
    let second = run_battery(options, |_| {})?;
    let (a, b) = (first.csv(), second.csv());
    let identical = a == b;
    let seconds = start.elapsed().as_secs_f64();
    let in_time = seconds <= limits::SELFTEST_SECONDS;
    let differing = a.lines().zip(b.lines()).filter(|(x, y)| x != y).count();
    let outcome = CriterionOutcome {
        id: 9,
        title: "determinism",
        passed: identical && in_time,
        detail: format!(
            "two runs with seed {}: record CSVs {} ({} bytes, {differing} differing lines), total selftest time {:.0} s against a limit of {} s",
            options.seed,
            if identical { "byte-identical" } else { "DIFFER" },
            a.len(),
            seconds,
            limits::SELFTEST_SECONDS
        ),
        seconds,
    };
    progress(&outcome);
    first.criteria.push(outcome);
    Ok(first)
}
