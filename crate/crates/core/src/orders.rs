//! Rényi orders, the order relations used by the decomposition rules, their case
//! classification, and the feasibility regions of the exclusion relations.
//!
//! The central relation between three orders is
//! `w(alpha) = w(beta) + w(gamma)` with `w(x) = x / (x - 1)`, equivalently
//! `1/alpha' = 1/beta' + 1/gamma'` with `x' = (x - 1) / x`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual below which an order relation counts as satisfied.
pub const RELATION_TOL: f64 = 1e-9;

/// Slack on closed interval endpoints (`1/2`, `2/3`, `4/3`) when testing membership.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A Rényi order `alpha` in `(0, inf]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub const ONE: RenyiOrder = RenyiOrder(1.0);
    pub const HALF: RenyiOrder = RenyiOrder(0.5);
    pub const TWO: RenyiOrder = RenyiOrder(2.0);
    pub const INFINITY: RenyiOrder = RenyiOrder(f64::INFINITY);

    /// Accepts any positive value, including `+inf`.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::validation(format!("Rényi order must be positive, got {value}")));
        }
        Ok(RenyiOrder(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }

    /// `alpha' = (alpha - 1) / alpha`, equal to `1` at infinity.
    pub fn prime(self) -> f64 {
        if self.is_infinite() {
            1.0
        } else {
            (self.0 - 1.0) / self.0
        }
    }

    /// `w(alpha) = alpha / (alpha - 1) = 1 / alpha'`; `1` at infinity, `+inf` at one.
    pub fn inverse_prime(self) -> f64 {
        if self.is_infinite() {
            1.0
        } else {
            self.0 / (self.0 - 1.0)
        }
    }

    /// Builds the order whose `w` value is `w`; `w = 1` gives infinity.
    pub fn from_inverse_prime(w: f64) -> Result<Self> {
        if w == 1.0 {
            return Ok(RenyiOrder::INFINITY);
        }
        if w.is_infinite() {
            return Ok(RenyiOrder::ONE);
        }
        RenyiOrder::new(w / (w - 1.0))
    }

    /// The dual order `alpha / (2 alpha - 1)`, defined for `alpha >= 1/2`
    /// (`1/2` maps to infinity and infinity to `1/2`).
    pub fn hat(self) -> Option<RenyiOrder> {
        if self.is_infinite() {
            Some(RenyiOrder::HALF)
        } else if self.0 == 0.5 {
            Some(RenyiOrder::INFINITY)
        } else if self.0 > 0.5 {
            Some(RenyiOrder(self.0 / (2.0 * self.0 - 1.0)))
        } else {
            None
        }
    }
}

impl TryFrom<f64> for RenyiOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        RenyiOrder::new(v)
    }
}

impl From<RenyiOrder> for f64 {
    fn from(o: RenyiOrder) -> f64 {
        o.0
    }
}

impl fmt::Display for RenyiOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for RenyiOrder {
    type Err = Error;

    /// Accepts decimals, fractions such as `4/3`, and `inf`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        if matches!(lower.as_str(), "inf" | "+inf" | "infinity" | "∞") {
            return Ok(RenyiOrder::INFINITY);
        }
        let value = if let Some((num, den)) = t.split_once('/') {
            let n: f64 = num
                .trim()
                .parse()
                .map_err(|_| Error::validation(format!("bad order numerator in `{t}`")))?;
            let d: f64 = den
                .trim()
                .parse()
                .map_err(|_| Error::validation(format!("bad order denominator in `{t}`")))?;
            if d == 0.0 {
                return Err(Error::validation(format!("zero denominator in `{t}`")));
            }
            n / d
        } else {
            t.parse::<f64>()
                .map_err(|_| Error::validation(format!("cannot parse order `{t}`")))?
        };
        if value.is_infinite() {
            return Err(Error::validation(format!("write infinite orders as `inf`, got `{t}`")));
        }
        RenyiOrder::new(value)
    }
}

/// Quantities derived from an order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedOrders {
    pub prime: f64,
    pub hat: Option<RenyiOrder>,
}

pub fn derived_quantities(alpha: RenyiOrder) -> DerivedOrders {
    DerivedOrders {
        prime: alpha.prime(),
        hat: alpha.hat(),
    }
}

/// Sign of `(alpha - 1)(beta - 1)(gamma - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignProduct {
    Positive,
    Negative,
    Zero,
}

/// Sign of the product of `(x - 1)` over the given orders.
pub fn sign_product(orders: &[RenyiOrder]) -> SignProduct {
    let mut negatives = 0;
    for o in orders {
        if o.is_one() {
            return SignProduct::Zero;
        }
        if o.value() < 1.0 {
            negatives += 1;
        }
    }
    if negatives % 2 == 0 {
        SignProduct::Positive
    } else {
        SignProduct::Negative
    }
}

/// Which parameter regime a valid triple falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// `alpha in (1,2)`, `beta, gamma in (1, inf)`.
    Case1,
    /// `alpha in [2/3, 1)`, `beta, gamma in [1/2, 1)`.
    Case2,
    /// `gamma in [1/2, 1)`, `beta in (1, 2)`, `alpha in (1, inf)`.
    Case3,
    /// `alpha in (0, 1)`, `gamma in [1/2, 1)`, `beta in (1, inf)`.
    Case4,
    /// All three orders equal to one (the von Neumann limit of the relation).
    UnitLimit,
    Invalid,
}

/// A classified order triple in canonical form (`beta >= gamma`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderTriple {
    pub alpha: RenyiOrder,
    pub beta: RenyiOrder,
    pub gamma: RenyiOrder,
    /// Relative residual of `w(alpha) - w(beta) - w(gamma)`.
    pub residual: f64,
    pub case: CaseTag,
    pub sign: SignProduct,
    /// Whether `beta` and `gamma` were exchanged to reach canonical form.
    pub swapped: bool,
}

impl OrderTriple {
    pub fn is_valid(&self) -> bool {
        self.case != CaseTag::Invalid
    }

    /// Orders in the caller's original `(alpha, beta, gamma)` arrangement.
    pub fn original(&self) -> (RenyiOrder, RenyiOrder, RenyiOrder) {
        if self.swapped {
            (self.alpha, self.gamma, self.beta)
        } else {
            (self.alpha, self.beta, self.gamma)
        }
    }
}

/// Relative residual of `w(a) = sum w(others)`, with the unit order handled as a joint limit:
/// zero when every order equals one, infinite when only some do.
pub fn relation_residual(a: RenyiOrder, others: &[RenyiOrder]) -> f64 {
    let ones = std::iter::once(a).chain(others.iter().copied()).filter(|o| o.is_one()).count();
    if ones == others.len() + 1 {
        return 0.0;
    }
    if ones > 0 {
        return f64::INFINITY;
    }
    let wa = a.inverse_prime();
    let ws: Vec<f64> = others.iter().map(|o| o.inverse_prime()).collect();
    let sum: f64 = ws.iter().sum();
    let scale = ws.iter().fold(wa.abs().max(1.0), |m, w| m.max(w.abs()));
    (wa - sum).abs() / scale
}

fn in_open(x: f64, lo: f64, hi: f64) -> bool {
    x > lo && x < hi
}

/// Classifies `(alpha, beta, gamma)` into the four parameter regimes.
///
/// The pair `(beta, gamma)` is first put in canonical order `beta >= gamma`.
/// A triple is valid when the relation holds to [`RELATION_TOL`], `beta, gamma >= 1/2`,
/// and the orders fall in one of the regimes.
pub fn classify_triple(alpha: RenyiOrder, beta: RenyiOrder, gamma: RenyiOrder) -> OrderTriple {
    let swapped = gamma.value() > beta.value();
    let (b, g) = if swapped { (gamma, beta) } else { (beta, gamma) };
    let residual = relation_residual(alpha, &[b, g]);
    let sign = sign_product(&[alpha, b, g]);
    let (a, bv, gv) = (alpha.value(), b.value(), g.value());
    let half = 0.5 - BOUNDARY_TOL;
    let case = if residual > RELATION_TOL || gv < half {
        CaseTag::Invalid
    } else if alpha.is_one() && b.is_one() && g.is_one() {
        CaseTag::UnitLimit
    } else if in_open(a, 1.0, 2.0) && in_open(gv, 1.0, f64::INFINITY) && in_open(bv, 1.0, f64::INFINITY) {
        CaseTag::Case1
    } else if (2.0 / 3.0 - BOUNDARY_TOL..1.0).contains(&a) && bv < 1.0 {
        CaseTag::Case2
    } else if gv < 1.0 && in_open(bv, 1.0, 2.0) && in_open(a, 1.0, f64::INFINITY) {
        CaseTag::Case3
    } else if in_open(a, 0.0, 1.0) && gv < 1.0 && in_open(bv, 1.0, f64::INFINITY) {
        CaseTag::Case4
    } else {
        CaseTag::Invalid
    };
    OrderTriple {
        alpha,
        beta: b,
        gamma: g,
        residual,
        case,
        sign,
        swapped,
    }
}

/// The order completing `(alpha, beta)` to a triple on the relation, if it is a
/// valid order `>= 1/2`. `(1, 1)` completes to `1`; any other use of order one is infeasible.
pub fn solve_third(alpha: RenyiOrder, beta: RenyiOrder) -> Option<RenyiOrder> {
    if alpha.is_one() || beta.is_one() {
        return if alpha.is_one() && beta.is_one() {
            Some(RenyiOrder::ONE)
        } else {
            None
        };
    }
    let w = alpha.inverse_prime() - beta.inverse_prime();
    if !w.is_finite() {
        return None;
    }
    let gamma = RenyiOrder::from_inverse_prime(w).ok()?;
    if gamma.value() < 0.5 - BOUNDARY_TOL {
        return None;
    }
    Some(gamma)
}

/// Which inequality a four-order tuple supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadDirection {
    /// `delta` below the other three orders: lower bound on the minimized mutual information.
    Lower,
    /// `delta` above the other three orders: upper bound on the optimized mutual information.
    Upper,
    /// All four orders equal to one: the decomposition holds with equality.
    UnitLimit,
    Invalid,
}

/// A classified `(alpha, beta, gamma, delta)` tuple for the unconditional decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderQuad {
    pub alpha: RenyiOrder,
    pub beta: RenyiOrder,
    pub gamma: RenyiOrder,
    pub delta: RenyiOrder,
    pub residual: f64,
    pub direction: QuadDirection,
}

/// Checks `w(delta) = w(alpha) + w(beta) + w(gamma)` with all orders above `1/2`
/// and determines the direction from the position of `delta`.
pub fn classify_quad(alpha: RenyiOrder, beta: RenyiOrder, gamma: RenyiOrder, delta: RenyiOrder) -> OrderQuad {
    let residual = relation_residual(delta, &[alpha, beta, gamma]);
    let all = [alpha, beta, gamma, delta];
    let ok = residual <= RELATION_TOL && all.iter().all(|o| o.value() > 0.5);
    let (a, b, g, d) = (alpha.value(), beta.value(), gamma.value(), delta.value());
    let direction = if !ok {
        QuadDirection::Invalid
    } else if all.iter().all(|o| o.is_one()) {
        QuadDirection::UnitLimit
    } else if d < a && d < b && d < g {
        QuadDirection::Lower
    } else if d > a && d > b && d > g {
        QuadDirection::Upper
    } else {
        QuadDirection::Invalid
    };
    OrderQuad {
        alpha,
        beta,
        gamma,
        delta,
        residual,
        direction,
    }
}

/// Order `delta` completing `(alpha, beta, gamma)` on the unconditional relation.
pub fn solve_delta(alpha: RenyiOrder, beta: RenyiOrder, gamma: RenyiOrder) -> Option<RenyiOrder> {
    if [alpha, beta, gamma].iter().any(|o| o.is_one()) {
        return None;
    }
    let w = alpha.inverse_prime() + beta.inverse_prime() + gamma.inverse_prime();
    RenyiOrder::from_inverse_prime(w).ok().filter(|d| d.value() > 0.5)
}

/// `1/(x - 1)` with the unit order mapped to an infinity of undetermined sign.
fn reciprocal_shift(x: RenyiOrder) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / (x.value() - 1.0)
    }
}

/// The exclusion-relation conditions exactly as usually stated: `alpha > 2/3`,
/// `1/2 <= beta, gamma <= 4/3`, `w(alpha) <= 1/(beta-1) + 1/(gamma-1)` and a negative
/// sign product. The all-ones triple is accepted as the limiting case.
///
/// This region contains a spurious component (`alpha < 1 < beta, gamma`) on which the
/// relation fails; use [`exclusion_feasible`] to select orders.
pub fn exclusion_conditions_as_printed(alpha: RenyiOrder, beta: RenyiOrder, gamma: RenyiOrder) -> bool {
    if alpha.is_one() && beta.is_one() && gamma.is_one() {
        return true;
    }
    if alpha.value() <= 2.0 / 3.0 {
        return false;
    }
    for o in [beta, gamma] {
        let v = o.value();
        if !(0.5 - BOUNDARY_TOL..=4.0 / 3.0 + BOUNDARY_TOL).contains(&v) {
            return false;
        }
    }
    if sign_product(&[alpha, beta, gamma]) != SignProduct::Negative {
        return false;
    }
    let rhs = reciprocal_shift(beta) + reciprocal_shift(gamma);
    let lhs = alpha.inverse_prime();
    lhs <= rhs + RELATION_TOL * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Order `alpha` at which the exclusion condition `w(alpha) <= 1/(beta-1) + 1/(gamma-1)`
/// is tight, or `None` when no positive order attains it.
pub fn exclusion_tight_alpha(beta: RenyiOrder, gamma: RenyiOrder) -> Option<RenyiOrder> {
    if beta.is_one() || gamma.is_one() {
        return None;
    }
    let mut rhs = reciprocal_shift(beta) + reciprocal_shift(gamma);
    if (rhs - 1.0).abs() <= BOUNDARY_TOL {
        rhs = 1.0;
    }
    if (0.0..1.0).contains(&rhs) {
        return None;
    }
    RenyiOrder::from_inverse_prime(rhs).ok()
}

/// Orders for which the exclusion relation is established by its derivation:
/// the stated conditions, plus `alpha` on the same side of one as the tight order
/// `exclusion_tight_alpha(beta, gamma)`. This removes the component
/// `alpha < 1 < beta, gamma`, where the measured-register triples cannot be valid.
pub fn exclusion_feasible(alpha: RenyiOrder, beta: RenyiOrder, gamma: RenyiOrder) -> bool {
    if !exclusion_conditions_as_printed(alpha, beta, gamma) {
        return false;
    }
    if alpha.is_one() {
        return true;
    }
    match exclusion_tight_alpha(beta, gamma) {
        Some(t) => (t.value() > 1.0) == (alpha.value() > 1.0),
        None => false,
    }
}

/// The partner order `(2a - 3) / (a - 2)` used with a min-entropy conditional term.
/// Returns `None` outside `[1/2, 4/3]` or when the partner drops below `1/2`.
pub fn min_entropy_partner(a: RenyiOrder) -> Option<RenyiOrder> {
    let v = a.value();
    if v.is_infinite() || v < 0.5 - BOUNDARY_TOL {
        return None;
    }
    if a.is_one() {
        return Some(RenyiOrder::ONE);
    }
    let p = (2.0 * v - 3.0) / (v - 2.0);
    if !(0.5 - BOUNDARY_TOL..=4.0 / 3.0 + BOUNDARY_TOL).contains(&p) {
        return None;
    }
    RenyiOrder::new(p).ok()
}

/// The paired measured-register order used when an exclusion-relation order `x`
/// is traced back to the uncertainty relation: `1 / (2 - x)`.
pub fn measured_register_order(x: RenyiOrder) -> Option<RenyiOrder> {
    let v = x.value();
    if !(v < 2.0) {
        return None;
    }
    RenyiOrder::new(1.0 / (2.0 - v)).ok()
}

/// For a triple off the relation, the order `alpha0` on the relation with the same
/// `(beta, gamma)`, provided `alpha` and `alpha0` lie on the same branch and
/// `(alpha0, beta, gamma)` is valid. Monotonicity in the orders then extends the
/// decomposition inequality of that sign to `(alpha, beta, gamma)` when
/// `alpha <= alpha0` (positive sign) or `alpha >= alpha0` (negative sign).
pub fn monotone_witness(alpha: RenyiOrder, beta: RenyiOrder, gamma: RenyiOrder) -> Option<OrderTriple> {
    if beta.is_one() || gamma.is_one() || alpha.is_one() {
        return None;
    }
    let w0 = beta.inverse_prime() + gamma.inverse_prime();
    let alpha0 = RenyiOrder::from_inverse_prime(w0).ok()?;
    if alpha0.is_one() || (alpha0.value() > 1.0) != (alpha.value() > 1.0) {
        return None;
    }
    let t = classify_triple(alpha0, beta, gamma);
    if !t.is_valid() {
        return None;
    }
    let ok = match t.sign {
        SignProduct::Positive => alpha.value() <= alpha0.value(),
        SignProduct::Negative => alpha.value() >= alpha0.value(),
        SignProduct::Zero => false,
    };
    ok.then_some(t)
}

/// Intermediate order through which the unconditional decomposition follows from a
/// decomposition inequality composed with a chain rule.
///
/// Lower direction: either `(a1; alpha, gamma)` or `(a1; beta, gamma)` is a valid
/// positive-sign triple and `(delta; a1, other)` has a positive sign product, where
/// `other` is the remaining marginal order. Upper direction: `(a1; beta, gamma)` is a
/// valid negative-sign triple and `(delta; a1, alpha)` has a negative sign product.
/// Returns `None` when no such order exists (including the unit limit, which holds
/// with equality).
pub fn unconditional_witness(quad: &OrderQuad) -> Option<RenyiOrder> {
    let chain_ok = |a1: RenyiOrder, other: RenyiOrder, want: SignProduct| {
        [quad.delta, a1, other].iter().all(|o| o.value() >= 0.5) && sign_product(&[quad.delta, a1, other]) == want
    };
    let through = |marginal: RenyiOrder, other: RenyiOrder, want: SignProduct| -> Option<RenyiOrder> {
        let a1 = RenyiOrder::from_inverse_prime(marginal.inverse_prime() + quad.gamma.inverse_prime()).ok()?;
        let t = classify_triple(a1, marginal, quad.gamma);
        (t.is_valid() && t.sign == want && chain_ok(a1, other, want)).then_some(a1)
    };
    if [quad.alpha, quad.beta, quad.gamma, quad.delta].iter().any(|o| o.is_one()) {
        return None;
    }
    match quad.direction {
        QuadDirection::Lower => through(quad.alpha, quad.beta, SignProduct::Positive)
            .or_else(|| through(quad.beta, quad.alpha, SignProduct::Positive)),
        QuadDirection::Upper => through(quad.beta, quad.alpha, SignProduct::Negative),
        _ => None,
    }
}

/// Draws a valid triple from the given regime (orders bounded away from the poles).
pub fn sample_case_triple<R: Rng + ?Sized>(case: CaseTag, rng: &mut R) -> Result<OrderTriple> {
    let w = |x: f64| x / (x - 1.0);
    for _ in 0..1000 {
        let (a, wb, wg) = match case {
            CaseTag::Case1 => {
                let a = rng.random_range(1.05..1.95);
                let wa = w(a);
                let wb = rng.random_range(1.02..(wa - 1.02));
                (a, wb, wa - wb)
            }
            CaseTag::Case2 => {
                let a = rng.random_range((2.0 / 3.0)..0.95);
                let wa = w(a);
                let wb = rng.random_range((wa + 1.0)..-1.0);
                (a, wb, wa - wb)
            }
            CaseTag::Case3 => {
                let a = rng.random_range(1.05..12.0);
                let g = rng.random_range(0.5..0.95);
                let wg = w(g);
                (a, w(a) - wg, wg)
            }
            CaseTag::Case4 => {
                let a = rng.random_range(0.05..0.95);
                let wa = w(a);
                let wg = wa - 1.0 - rng.random_range(0.05..15.0);
                (a, wa - wg, wg)
            }
            CaseTag::UnitLimit => return Ok(classify_triple(RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE)),
            CaseTag::Invalid => return Err(Error::validation("cannot sample an invalid regime")),
        };
        let (Ok(alpha), Ok(beta), Ok(gamma)) = (
            RenyiOrder::new(a),
            RenyiOrder::from_inverse_prime(wb),
            RenyiOrder::from_inverse_prime(wg),
        ) else {
            continue;
        };
        if beta.value() > 60.0 || gamma.value() > 60.0 {
            continue;
        }
        let t = classify_triple(alpha, beta, gamma);
        if t.case == case {
            return Ok(t);
        }
    }
    Err(Error::validation(format!("failed to sample a triple for {case:?}")))
}

/// Draws `(alpha, beta, gamma)` in the exclusion-relation feasible region.
pub fn sample_exclusion_triple<R: Rng + ?Sized>(rng: &mut R) -> (RenyiOrder, RenyiOrder, RenyiOrder) {
    loop {
        let pattern = rng.random_range(0..3u8);
        let (b, g) = match pattern {
            0 => (rng.random_range(0.5..0.66), rng.random_range(1.02..(4.0 / 3.0))),
            1 => (rng.random_range(1.02..(4.0 / 3.0)), rng.random_range(0.5..0.66)),
            _ => (rng.random_range(0.5..0.97), rng.random_range(0.5..0.97)),
        };
        let (Ok(beta), Ok(gamma)) = (RenyiOrder::new(b), RenyiOrder::new(g)) else {
            continue;
        };
        let Some(tight) = exclusion_tight_alpha(beta, gamma) else {
            continue;
        };
        let alpha = if tight.value() > 1.0 {
            match rng.random_range(0..3u8) {
                0 => tight,
                1 => RenyiOrder::INFINITY,
                _ => RenyiOrder(tight.value() * rng.random_range(1.0..3.0)),
            }
        } else {
            RenyiOrder(tight.value() + (1.0 - tight.value()) * rng.random_range(0.0..0.9))
        };
        if tight.is_infinite() || !exclusion_feasible(alpha, beta, gamma) {
            continue;
        }
        return (alpha, beta, gamma);
    }
}
