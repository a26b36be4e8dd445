//! Acceptance suite: pins every battery threshold, then runs the full selftest and
//! prints one pass/fail line per criterion. Exits with status 1 on any failure.

use std::process::ExitCode;

use renyi_core::relations::{DEFAULT_TOLERANCE_BITS, MONOTONE_GRID, RECHECK_BITS, RECHECK_GRID_RESOLUTION};
use renyi_core::selftest::{limits, run_selftest, workload, SelftestOptions};

struct Pin {
    label: &'static str,
    actual: f64,
    expected: f64,
}

fn pin(label: &'static str, actual: f64, expected: f64) -> Pin {
    Pin { label, actual, expected }
}

fn pins() -> Vec<Pin> {
    vec![
        pin("order-one tolerance (bits)", limits::ORDER_ONE_TOL, 1e-6),
        pin("order-one runtime (s)", limits::ORDER_ONE_SECONDS, 60.0),
        pin("decomposition tolerance (bits)", limits::DECOMPOSITION_TOL, 1e-6),
        pin("decomposition runtime (s)", limits::DECOMPOSITION_SECONDS, 600.0),
        pin("norm-form tolerance (bits)", limits::NORM_FORM_TOL, 1e-5),
        pin("duality tolerance (bits)", limits::DUALITY_TOL, 1e-4),
        pin("exclusion tolerance (bits)", limits::EXCLUSION_TOL, 1e-6),
        pin("data-processing tolerance (bits)", limits::DPI_TOL, 1e-8),
        pin("sanity tolerance (bits)", limits::SANITY_TOL, 1e-6),
        pin("grid agreement tolerance (bits)", limits::GRID_AGREEMENT_TOL, 1e-3),
        pin("grid resolution", limits::GRID_RESOLUTION as f64, 60.0),
        pin("restart spread tolerance (bits)", limits::RESTART_SPREAD_TOL, 1e-6),
        pin("selftest runtime (s)", limits::SELFTEST_SECONDS, 900.0),
        pin("default record tolerance (bits)", DEFAULT_TOLERANCE_BITS, 1e-6),
        pin("recheck tolerance (bits)", RECHECK_BITS, 1e-5),
        pin("recheck grid resolution", RECHECK_GRID_RESOLUTION as f64, 40.0),
        pin("monotonicity grid points", MONOTONE_GRID.len() as f64, 8.0),
        pin("order-one states per shape", workload::ORDER_ONE_STATES as f64, 200.0),
        pin("order-one shapes", workload::ORDER_ONE_SHAPES.len() as f64, 3.0),
        pin("triples per case", workload::TRIPLES_PER_CASE as f64, 20.0),
        pin("decomposition states", workload::DECOMPOSITION_STATES as f64, 100.0),
        pin("norm-form states", workload::NORM_FORM_STATES as f64, 50.0),
        pin("duality states", workload::DUALITY_STATES as f64, 50.0),
        pin("classification triples", workload::CLASSIFICATION_TRIPLES as f64, 1e5),
        pin("Haar basis pairs", workload::HAAR_PAIRS as f64, 20.0),
        pin("exclusion states", workload::EXCLUSION_STATES as f64, 100.0),
        pin("exclusion order samples", workload::EXCLUSION_ORDER_SAMPLES as f64, 10.0),
        pin(
            "sanity states",
            workload::SANITY_PLAN.iter().map(|(_, n)| *n).sum::<u64>() as f64,
            500.0,
        ),
        pin("grid objectives", workload::GRID_OBJECTIVES as f64, 50.0),
    ]
}

fn main() -> ExitCode {
    let mut ok = true;
    for p in pins() {
        let pass = p.actual == p.expected;
        ok &= pass;
        println!(
            "[{}] pinned {}: {} (expected {})",
            if pass { "PASS" } else { "FAIL" },
            p.label,
            p.actual,
            p.expected
        );
    }
    let norm_orders_ok = workload::NORM_FORM_ORDERS == [0.6, 0.75, 2.0, 3.0];
    let exclusion_dims_ok = workload::EXCLUSION_DIMS == [2, 3];
    for (label, pass) in [("norm-form orders {0.6, 0.75, 2, 3}", norm_orders_ok), ("exclusion dimensions {2, 3}", exclusion_dims_ok)] {
        ok &= pass;
        println!("[{}] pinned {label}", if pass { "PASS" } else { "FAIL" });
    }

    match run_selftest(&SelftestOptions::default(), |c| println!("{}", c.line())) {
        Ok(outcome) => {
            let failed = outcome.criteria.iter().filter(|c| !c.passed).count();
            println!("{} of {} criteria passed", outcome.criteria.len() - failed, outcome.criteria.len());
            ok &= failed == 0;
        }
        Err(e) => {
            println!("[FAIL] selftest aborted: {e}");
            ok = false;
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
