//! Sweep configuration and the randomized batch runner.
//!
//! A sweep evaluates one or more inequality suites over random states. Every record can
//! be recomputed from its suite, the sweep seed, its subsystem shape and its trial index:
//! state and optimizer seeds are derived from those coordinates only, and order samples
//! from the sweep seed and suite.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orders::{
    classify_quad, classify_triple, unconditional_witness, min_entropy_partner, monotone_witness, sample_case_triple, sample_exclusion_triple,
    solve_delta, exclusion_feasible, exclusion_tight_alpha, CaseTag, OrderQuad, QuadDirection, RenyiOrder,
    SignProduct,
};
use crate::relations::{
    decomposition_records, sanity_trial, verify_chain_rules, verify_unconditional, verify_exclusion, verify_gbur,
    ChainForm, ExclusionMode, InequalityRecord, Soundness, UncertaintyRelation,
    VerifyOptions,
};
use crate::states::{derive_seed, random_state, rng_from_seed, MeasurementPair, OrthonormalBasis, StateKind};

/// Largest total dimension accepted for a bipartite shape.
pub const MAX_TOTAL_DIM: usize = 32;

/// Inequality families a sweep can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Thm1,
    Cor1,
    Chain,
    Gbur,
    Exclusion,
    Sanity,
    All,
}

impl Suite {
    /// Concrete suites in the order `all` runs them.
    pub const CONCRETE: [Suite; 6] = [Suite::Thm1, Suite::Cor1, Suite::Chain, Suite::Gbur, Suite::Exclusion, Suite::Sanity];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::Cor1 => "cor1",
            Suite::Chain => "chain",
            Suite::Gbur => "gbur",
            Suite::Exclusion => "exclusion",
            Suite::Sanity => "sanity",
            Suite::All => "all",
        }
    }

    fn stream(self) -> u64 {
        Suite::CONCRETE.iter().position(|&s| s == self).unwrap_or(99) as u64 + 1
    }

    fn expand(self) -> Vec<Suite> {
        if self == Suite::All {
            Suite::CONCRETE.to_vec()
        } else {
            vec![self]
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Suite::CONCRETE
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|suite| suite.as_str() == t)
            .copied()
            .ok_or_else(|| Error::config("suite", format!("unknown suite `{t}` (expected thm1, cor1, chain, gbur, exclusion, sanity or all)")))
    }
}

/// Serialization format of a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config("output_format", format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

/// Where the orders of a sweep come from.
#[derive(Clone, Debug, PartialEq)]
pub enum OrderSpec {
    /// Number of random order samples per regime.
    Samples(usize),
    /// Explicit order tuples (three orders, or four for the unconditional decomposition).
    Explicit(Vec<Vec<RenyiOrder>>),
}

/// Parses `2x2,2x3` into bipartite shapes.
pub fn parse_dims(text: &str) -> Result<Vec<(usize, usize)>> {
    let field = "dims";
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (a, b) = item
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::config(field, format!("shape `{item}` is not of the form AxB")))?;
        let parse = |s: &str| -> Result<usize> {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(field, format!("`{s}` in `{item}` is not a positive integer")))
        };
        let (da, db) = (parse(a)?, parse(b)?);
        if da < 2 || db < 2 {
            return Err(Error::config(field, format!("factor dimensions must be at least 2 in `{item}`")));
        }
        if da.saturating_mul(db) > MAX_TOTAL_DIM {
            return Err(Error::config(field, format!("`{item}` exceeds the total dimension limit {MAX_TOTAL_DIM}")));
        }
        out.push((da, db));
    }
    if out.is_empty() {
        return Err(Error::config(field, "no shapes given"));
    }
    Ok(out)
}

/// Parses order tuples such as `4/3,2,2; 2/3,1/2,1/2` (orders may be fractions or `inf`).
pub fn parse_orders(text: &str) -> Result<Vec<Vec<RenyiOrder>>> {
    let field = "orders";
    let mut out = Vec::new();
    for group in text.split(';') {
        let group = group.trim();
        if group.is_empty() {
            continue;
        }
        let orders = group
            .split(',')
            .map(|s| s.parse::<RenyiOrder>().map_err(|e| Error::config(field, format!("in `{group}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if !(3..=4).contains(&orders.len()) {
            return Err(Error::config(field, format!("`{group}` must list three or four orders")));
        }
        out.push(orders);
    }
    if out.is_empty() {
        return Err(Error::config(field, "no order tuples given"));
    }
    Ok(out)
}

fn format_order(o: RenyiOrder) -> String {
    o.to_string()
}

/// Configuration of one sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub suite: Suite,
    pub dims: Vec<(usize, usize)>,
    pub trials: u64,
    pub seed: u64,
    pub orders: OrderSpec,
    pub tolerance_bits: f64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    /// Worker threads; `None` uses one per core. Does not affect results.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            suite: Suite::All,
            dims: vec![(2, 2)],
            trials: 10,
            seed: 0,
            orders: OrderSpec::Samples(4),
            tolerance_bits: crate::relations::DEFAULT_TOLERANCE_BITS,
            output_path: None,
            output_format: OutputFormat::Csv,
            workers: None,
        }
    }
}

/// Field names accepted in configuration files (flags use the same names).
pub const CONFIG_FIELDS: [&str; 10] = [
    "suite",
    "dims",
    "trials",
    "seed",
    "orders",
    "order_samples",
    "tolerance_bits",
    "output_path",
    "output_format",
    "workers",
];

impl SweepConfig {
    /// Sets one field from its textual value.
    pub fn set_field(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let int = |field: &str| -> Result<u64> {
            value
                .parse::<u64>()
                .map_err(|_| Error::config(field, format!("`{value}` is not a non-negative integer")))
        };
        match key {
            "suite" => self.suite = value.parse()?,
            "dims" => self.dims = parse_dims(value)?,
            "trials" => self.trials = int(key)?,
            "seed" => self.seed = int(key)?,
            "orders" => self.orders = OrderSpec::Explicit(parse_orders(value)?),
            "order_samples" => self.orders = OrderSpec::Samples(int(key)? as usize),
            "tolerance_bits" => {
                self.tolerance_bits = value
                    .parse::<f64>()
                    .map_err(|_| Error::config(key, format!("`{value}` is not a number")))?
            }
            "output_path" => self.output_path = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            "output_format" => self.output_format = value.parse()?,
            "workers" => {
                let n = int(key)? as usize;
                self.workers = if n == 0 { None } else { Some(n) };
            }
            other => return Err(Error::config(other, "unknown field")),
        }
        Ok(())
    }

    /// Parses a `key = value` file. Blank lines and `#` comments are ignored; a field may
    /// appear at most once. Missing fields keep their defaults.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", lineno + 1), "expected `key = value`"))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "field given more than once"));
            }
            cfg.set_field(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the invariants not enforced by the field parsers.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if !(self.tolerance_bits >= 0.0 && self.tolerance_bits.is_finite()) {
            return Err(Error::config("tolerance_bits", "must be a finite non-negative number"));
        }
        if self.dims.is_empty() {
            return Err(Error::config("dims", "no shapes given"));
        }
        for &(da, db) in &self.dims {
            if da < 2 || db < 2 {
                return Err(Error::config("dims", format!("factor dimensions must be at least 2 in `{da}x{db}`")));
            }
            if da.saturating_mul(db) > MAX_TOTAL_DIM {
                return Err(Error::config("dims", format!("`{da}x{db}` exceeds the total dimension limit {MAX_TOTAL_DIM}")));
            }
        }
        match &self.orders {
            OrderSpec::Samples(0) => return Err(Error::config("order_samples", "must be at least 1")),
            OrderSpec::Samples(_) => {}
            OrderSpec::Explicit(list) => {
                for suite in self.suite.expand() {
                    for orders in list {
                        check_explicit(suite, orders)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Renders the configuration in the file format read by [`SweepConfig::from_kv_text`].
    pub fn to_kv_text(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|(a, b)| format!("{a}x{b}")).collect();
        let mut lines = vec![
            format!("suite = {}", self.suite),
            format!("dims = {}", dims.join(",")),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.seed),
        ];
        match &self.orders {
            OrderSpec::Samples(n) => lines.push(format!("order_samples = {n}")),
            OrderSpec::Explicit(list) => {
                let groups: Vec<String> = list
                    .iter()
                    .map(|g| g.iter().map(|&o| format_order(o)).collect::<Vec<_>>().join(","))
                    .collect();
                lines.push(format!("orders = {}", groups.join("; ")));
            }
        }
        lines.push(format!("tolerance_bits = {:e}", self.tolerance_bits));
        if let Some(p) = &self.output_path {
            lines.push(format!("output_path = {}", p.display()));
        }
        lines.push(format!("output_format = {}", self.output_format.as_str()));
        lines.push(format!("workers = {}", self.workers.unwrap_or(0)));
        lines.join("\n") + "\n"
    }
}

fn check_explicit(suite: Suite, orders: &[RenyiOrder]) -> Result<()> {
    let field = "orders";
    let text = orders.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",");
    let need_three = || -> Result<(RenyiOrder, RenyiOrder, RenyiOrder)> {
        if orders.len() != 3 {
            return Err(Error::config(field, format!("suite {suite} takes order triples, got `{text}`")));
        }
        Ok((orders[0], orders[1], orders[2]))
    };
    match suite {
        Suite::Thm1 => {
            let (a, b, g) = need_three()?;
            if !classify_triple(a, b, g).is_valid() && monotone_witness(a, b, g).is_none() {
                return Err(Error::config(field, format!("`{text}` is neither a valid triple nor reachable by monotonicity")));
            }
        }
        Suite::Chain => {
            let (a, b, g) = need_three()?;
            if !classify_triple(a, b, g).is_valid() {
                return Err(Error::config(field, format!("`{text}` is not a valid triple")));
            }
        }
        Suite::Cor1 => {
            quad_from_orders(orders).map_err(|e| Error::config(field, format!("`{text}`: {e}")))?;
        }
        Suite::Gbur => {
            let (a, b, g) = need_three()?;
            if a.value() < 0.5 || b.value() < 0.5 || g.value() < 0.5 {
                return Err(Error::config(field, format!("`{text}` has an order below 1/2")));
            }
        }
        Suite::Exclusion => {
            let (a, b, g) = need_three()?;
            if !exclusion_feasible(a, b, g) {
                return Err(Error::config(field, format!("`{text}` is outside the exclusion feasible region")));
            }
        }
        Suite::Sanity | Suite::All => {}
    }
    Ok(())
}

fn quad_from_orders(orders: &[RenyiOrder]) -> Result<OrderQuad> {
    let quad = match orders {
        [a, b, g] => {
            let d = solve_delta(*a, *b, *g).ok_or_else(|| Error::validation("no completing order above 1/2"))?;
            classify_quad(*a, *b, *g, d)
        }
        [a, b, g, d] => classify_quad(*a, *b, *g, *d),
        _ => return Err(Error::validation("expected three or four orders")),
    };
    if quad.direction == QuadDirection::Invalid {
        return Err(Error::validation("orders do not form a valid quadruple"));
    }
    Ok(quad)
}

/// Per-suite aggregate of a report.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteSummary {
    pub suite: String,
    pub records: usize,
    pub passed: usize,
    pub failed: usize,
    pub certified: usize,
    pub min_margin_bits: f64,
    pub mean_margin_bits: f64,
    /// Records still below tolerance after re-evaluation.
    pub counterexample_candidates: usize,
}

/// Configuration echo and run metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub config: String,
    pub library_version: String,
    pub wall_time_seconds: f64,
}

/// Result of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub records: Vec<InequalityRecord>,
    pub summary: Vec<SuiteSummary>,
    pub provenance: Provenance,
}

impl SweepReport {
    pub fn counterexample_candidates(&self) -> usize {
        self.summary.iter().map(|s| s.counterexample_candidates).sum()
    }
}

/// Aggregates records per suite, in first-appearance order.
pub fn summarize(records: &[InequalityRecord], tolerance_bits: f64) -> Vec<SuiteSummary> {
    let mut out: Vec<SuiteSummary> = Vec::new();
    for r in records {
        let idx = match out.iter().position(|s| s.suite == r.suite) {
            Some(i) => i,
            None => {
                out.push(SuiteSummary {
                    suite: r.suite.clone(),
                    records: 0,
                    passed: 0,
                    failed: 0,
                    certified: 0,
                    min_margin_bits: f64::INFINITY,
                    mean_margin_bits: 0.0,
                    counterexample_candidates: 0,
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.records += 1;
        if r.passes(tolerance_bits) {
            s.passed += 1;
        } else {
            s.failed += 1;
            s.counterexample_candidates += 1;
        }
        if r.soundness == Soundness::Certified {
            s.certified += 1;
        }
        if !(r.margin_bits >= s.min_margin_bits) {
            s.min_margin_bits = r.margin_bits;
        }
        s.mean_margin_bits += r.margin_bits;
    }
    for s in &mut out {
        s.mean_margin_bits = quantize(s.mean_margin_bits / s.records as f64);
        s.min_margin_bits = quantize(s.min_margin_bits);
    }
    out
}

/// Rounds to 12 significant digits.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub(crate) fn quantize_record(mut r: InequalityRecord) -> InequalityRecord {
    let q = |v: Option<f64>| v.map(quantize);
    r.alpha = q(r.alpha);
    r.beta = q(r.beta);
    r.gamma = q(r.gamma);
    r.delta = q(r.delta);
    r.lhs_bits = quantize(r.lhs_bits);
    r.rhs_bits = quantize(r.rhs_bits);
    r.margin_bits = quantize(r.margin_bits);
    r
}

/// State families cycled through by the inequality suites.
const STATE_KINDS: [StateKind; 6] = [
    StateKind::HsMixed,
    StateKind::HaarPure,
    StateKind::HsMixed,
    StateKind::MaxEntangled,
    StateKind::Product,
    StateKind::ClassicalQuantum,
];

/// Orders of the min-entropy exclusion relation exercised in every exclusion trial.
const MIN_ENTROPY_ORDERS: [f64; 6] = [0.5, 0.6, 0.75, 0.9, 1.1, 4.0 / 3.0];

/// Seed of the state used by `(suite, shape, trial)`.
pub fn trial_seed(seed: u64, suite: Suite, shape: (usize, usize), trial: u64) -> u64 {
    let shape_tag = (shape.0 as u64) << 16 | shape.1 as u64;
    derive_seed(derive_seed(derive_seed(seed, suite.stream()), shape_tag), trial)
}

fn state_kind(trial: u64) -> StateKind {
    STATE_KINDS[(trial % STATE_KINDS.len() as u64) as usize]
}

fn order(x: f64) -> RenyiOrder {
    RenyiOrder::new(x).expect("constant orders are valid")
}

/// Orders used by one suite, fixed for the whole sweep.
#[derive(Clone, Debug)]
enum SuiteOrders {
    Triples(Vec<(RenyiOrder, RenyiOrder, RenyiOrder)>),
    Quads(Vec<OrderQuad>),
    None,
}

const CASES: [CaseTag; 4] = [CaseTag::Case1, CaseTag::Case2, CaseTag::Case3, CaseTag::Case4];

/// The uncertainty-relation triple associated with exclusion orders `(alpha, beta, gamma)`.
pub fn uncertainty_orders(beta: RenyiOrder, gamma: RenyiOrder) -> Option<(RenyiOrder, RenyiOrder, RenyiOrder)> {
    let alpha = exclusion_tight_alpha(beta, gamma)?;
    let b = RenyiOrder::new(1.0 / (2.0 - beta.value())).ok()?;
    let g = RenyiOrder::new(1.0 / (2.0 - gamma.value())).ok()?;
    Some((alpha, b, g))
}

fn suite_orders(cfg: &SweepConfig, suite: Suite) -> Result<SuiteOrders> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 1000 + suite.stream()));
    let explicit_triples = |list: &Vec<Vec<RenyiOrder>>| -> Vec<(RenyiOrder, RenyiOrder, RenyiOrder)> {
        list.iter().filter(|g| g.len() == 3).map(|g| (g[0], g[1], g[2])).collect()
    };
    Ok(match (suite, &cfg.orders) {
        (Suite::Sanity, _) | (Suite::All, _) => SuiteOrders::None,
        (Suite::Cor1, OrderSpec::Explicit(list)) => {
            SuiteOrders::Quads(list.iter().map(|g| quad_from_orders(g)).collect::<Result<_>>()?)
        }
        (Suite::Cor1, OrderSpec::Samples(n)) => {
            let mut quads = Vec::new();
            for direction in [QuadDirection::Lower, QuadDirection::Upper] {
                let mut found = 0;
                while found < *n {
                    let draw = |rng: &mut rand_chacha::ChaCha8Rng| order(rng.random_range(0.55..4.0));
                    let (a, b, g) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
                    let Some(d) = solve_delta(a, b, g) else { continue };
                    let quad = classify_quad(a, b, g, d);
                    if quad.direction == direction && unconditional_witness(&quad).is_some() {
                        quads.push(quad);
                        found += 1;
                    }
                }
            }
            SuiteOrders::Quads(quads)
        }
        (_, OrderSpec::Explicit(list)) => SuiteOrders::Triples(explicit_triples(list)),
        (Suite::Thm1 | Suite::Chain, OrderSpec::Samples(n)) => {
            let mut triples = Vec::new();
            for case in CASES {
                for _ in 0..*n {
                    triples.push(sample_case_triple(case, &mut rng)?.original());
                }
            }
            SuiteOrders::Triples(triples)
        }
        (Suite::Gbur, OrderSpec::Samples(n)) => {
            let mut triples = vec![(order(2.0), order(2.0 / 3.0), order(4.0 / 3.0))];
            while triples.len() < *n {
                let (_, b, g) = sample_exclusion_triple(&mut rng);
                if let Some(t) = uncertainty_orders(b, g) {
                    triples.push(t);
                }
            }
            SuiteOrders::Triples(triples)
        }
        (Suite::Exclusion, OrderSpec::Samples(n)) => {
            let mut triples = vec![(order(2.0), order(0.5), order(1.25))];
            while triples.len() < *n {
                triples.push(sample_exclusion_triple(&mut rng));
            }
            SuiteOrders::Triples(triples)
        }
    })
}

fn run_trial(
    suite: Suite,
    orders: &SuiteOrders,
    shape: (usize, usize),
    seed: u64,
    trial: u64,
    tolerance_bits: f64,
) -> Result<Vec<InequalityRecord>> {
    let state_seed = trial_seed(seed, suite, shape, trial);
    let opts = VerifyOptions {
        tolerance_bits,
        optimizer_seed: derive_seed(state_seed, 7),
        ..VerifyOptions::default()
    };
    let dims = [shape.0, shape.1];
    let mut out = Vec::new();
    match (suite, orders) {
        (Suite::Sanity, _) => out = sanity_trial(shape, derive_seed(seed, suite.stream()), trial, &opts)?,
        (Suite::Thm1, SuiteOrders::Triples(list)) => {
            let rho = random_state(state_kind(trial), &dims, state_seed)?;
            for &t in list {
                out.extend(decomposition_records(&rho, t, &opts)?);
            }
        }
        (Suite::Cor1, SuiteOrders::Quads(list)) => {
            let rho = random_state(state_kind(trial), &dims, state_seed)?;
            for quad in list {
                out.push(verify_unconditional(&rho, quad, quad.direction, &opts)?);
            }
        }
        (Suite::Chain, SuiteOrders::Triples(list)) => {
            let rho = random_state(state_kind(trial), &dims, state_seed)?;
            let swapped = rho.swap()?;
            let pure = random_state(StateKind::HaarPure, &[shape.0, shape.1, 2], derive_seed(state_seed, 1))?;
            let sigma_c = random_state(StateKind::HsMixed, &[2], derive_seed(state_seed, 2))?;
            for &(a, b, g) in list {
                let triple = classify_triple(a, b, g);
                let forms = match triple.sign {
                    SignProduct::Positive => vec![ChainForm::Optimized],
                    SignProduct::Negative => vec![ChainForm::Marginal, ChainForm::Generalized(sigma_c.matrix().clone())],
                    SignProduct::Zero => vec![ChainForm::Optimized, ChainForm::Marginal],
                };
                for form in &forms {
                    if let ChainForm::Generalized(_) = form {
                        out.push(verify_chain_rules(&pure, &triple, form, &opts)?);
                        continue;
                    }
                    out.push(verify_chain_rules(&rho, &triple, form, &opts)?);
                    let mut r = verify_chain_rules(&swapped, &triple, form, &opts)?;
                    r.name.push_str(":swap");
                    out.push(r);
                }
            }
        }
        (Suite::Gbur, SuiteOrders::Triples(list)) => {
            let rho = random_state(state_kind(trial), &dims, state_seed)?;
            for (tag, pair) in measurement_pairs(shape.0, state_seed)? {
                for &t in list {
                    let mut r = verify_gbur(&rho, &pair, t, UncertaintyRelation::Consistent, None, &opts)?;
                    r.name = format!("{}:{tag}", r.name);
                    out.push(r);
                }
            }
        }
        (Suite::Exclusion, SuiteOrders::Triples(list)) => {
            let rho = random_state(state_kind(trial), &dims, state_seed)?;
            let memory = random_state(StateKind::ClassicalMemory, &dims, derive_seed(state_seed, 4))?;
            let one = RenyiOrder::ONE;
            for (tag, pair) in measurement_pairs(shape.0, state_seed)? {
                let mut push = |mut r: InequalityRecord| {
                    r.name = format!("{}:{tag}", r.name);
                    out.push(r);
                };
                for &t in list {
                    push(verify_exclusion(&rho, &pair, t, ExclusionMode::General, &opts)?);
                }
                for &a in &MIN_ENTROPY_ORDERS {
                    let a = order(a);
                    if min_entropy_partner(a).is_some() {
                        push(verify_exclusion(&rho, &pair, (RenyiOrder::INFINITY, a, one), ExclusionMode::MinEntropy, &opts)?);
                    }
                }
                push(verify_exclusion(&memory, &pair, (one, one, one), ExclusionMode::HallLimit, &opts)?);
            }
        }
        _ => return Err(Error::validation(format!("suite {suite} has no orders for this run"))),
    }
    Ok(out.into_iter().map(|r| r.with_provenance(seed, trial)).collect())
}

/// The mutually unbiased pair and one Haar-random pair of bases on dimension `d`.
fn measurement_pairs(d: usize, state_seed: u64) -> Result<Vec<(&'static str, MeasurementPair)>> {
    let haar = MeasurementPair::new(
        OrthonormalBasis::haar(d, derive_seed(state_seed, 5)),
        OrthonormalBasis::haar(d, derive_seed(state_seed, 6)),
    )?;
    Ok(vec![("mub", MeasurementPair::mutually_unbiased(d)), ("haar", haar)])
}

/// Runs the configured suites over every shape and trial.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let mut records = Vec::new();
    for suite in cfg.suite.expand() {
        let orders = suite_orders(cfg, suite)?;
        let tasks: Vec<((usize, usize), u64)> = cfg
            .dims
            .iter()
            .flat_map(|&shape| (0..cfg.trials).map(move |t| (shape, t)))
            .collect();
        let batches: Vec<Vec<InequalityRecord>> = pool.install(|| {
            tasks
                .par_iter()
                .map(|&(shape, t)| run_trial(suite, &orders, shape, cfg.seed, t, cfg.tolerance_bits))
                .collect::<Result<_>>()
        })?;
        records.extend(batches.into_iter().flatten().map(quantize_record));
    }
    let summary = summarize(&records, cfg.tolerance_bits);
    Ok(SweepReport {
        records,
        summary,
        provenance: Provenance {
            config: cfg.to_kv_text(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: quantize(start.elapsed().as_secs_f64()),
        },
    })
}
