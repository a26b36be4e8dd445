//! Numerical verifiers for the entropic inequalities.
//!
//! Every verifier evaluates both sides of one inequality on one state and returns an
//! [`InequalityRecord`] whose `margin_bits` is non-negative exactly when the claim holds.
//!
//! Terms computed by an optimizer are one-sided approximations: an infimum is only ever
//! over-estimated and a supremum under-estimated. Each term carries that information,
//! and a record is marked [`Soundness::Certified`] only when every approximation can
//! only lower the computed margin, so that a non-negative margin is a proof up to
//! floating point. Margins below the re-check threshold trigger a second evaluation
//! with a tighter optimizer (and an exhaustive Bloch-ball grid for qubit blocks); the
//! better bound of the two evaluations is kept for every term.

use crate::entropies::{cond_entropy_up_detailed, default_config_for, divergence_eig, entropy, renyi_divergence};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianEigenSystem, DEFAULT_KERNEL_EPS};
use crate::mutual::{measured_register_mutual_info, mutual_info_detailed, MutualVariant, JOINT_RESTARTS};
use crate::normforms::{norm_form_from_purification, NormFormKind};
use crate::optimize::{qubit_grid_oracle, OptResult, Sense, SimplexOptConfig};
use crate::orders::{
    classify_triple, unconditional_witness, min_entropy_partner, monotone_witness, relation_residual, exclusion_feasible, CaseTag, OrderQuad,
    OrderTriple, QuadDirection, RenyiOrder, SignProduct, BOUNDARY_TOL, RELATION_TOL,
};
use crate::states::{
    derive_seed, pinch_measure, purify_vector, random_state, DensityMatrix, MeasurementPair, OrthonormalBasis, StateKind,
};

/// Default pass threshold for margins, in bits.
pub const DEFAULT_TOLERANCE_BITS: f64 = 1e-6;
/// Margins below minus this value are re-evaluated before being reported.
pub const RECHECK_BITS: f64 = 1e-5;
/// Bloch-ball grid resolution used when re-checking qubit optimizations.
pub const RECHECK_GRID_RESOLUTION: usize = 40;

/// Whether a record's pass is backed by one-sided approximations only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Soundness {
    Certified,
    Heuristic,
}

impl Soundness {
    pub fn as_str(self) -> &'static str {
        match self {
            Soundness::Certified => "certified",
            Soundness::Heuristic => "heuristic",
        }
    }
}

impl std::str::FromStr for Soundness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certified" => Ok(Soundness::Certified),
            "heuristic" => Ok(Soundness::Heuristic),
            other => Err(Error::validation(format!("unknown soundness `{other}`"))),
        }
    }
}

/// One evaluated inequality instance.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityRecord {
    pub suite: String,
    pub name: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub dim_a: usize,
    pub dim_b: usize,
    pub seed: u64,
    pub trial: u64,
    pub lhs_bits: f64,
    pub rhs_bits: f64,
    pub margin_bits: f64,
    pub soundness: Soundness,
    pub converged: bool,
}

impl InequalityRecord {
    /// Whether the margin clears `-tolerance`. A NaN margin never passes.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.margin_bits >= -tolerance
    }

    /// Attaches the sweep coordinates that allow the record to be recomputed.
    pub fn with_provenance(mut self, seed: u64, trial: u64) -> Self {
        self.seed = seed;
        self.trial = trial;
        self
    }
}

/// Knobs shared by all verifiers.
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Pass threshold for margins, in bits.
    pub tolerance_bits: f64,
    /// Margins below `-recheck_bits` (or below `-tolerance_bits`, whichever is
    /// stricter) are re-evaluated.
    pub recheck_bits: f64,
    pub grid_resolution: usize,
    /// Seed for optimizer restarts.
    pub optimizer_seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tolerance_bits: DEFAULT_TOLERANCE_BITS,
            recheck_bits: RECHECK_BITS,
            grid_resolution: RECHECK_GRID_RESOLUTION,
            optimizer_seed: 0,
        }
    }
}

/// How a computed term relates to its exact value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Approximation {
    /// Closed spectral formula, exact to floating point.
    Exact,
    /// Result of a minimization: never below the exact value.
    UpperBound,
    /// Result of a maximization: never above the exact value.
    LowerBound,
}

/// A computed quantity entering one side of an inequality.
#[derive(Clone, Copy, Debug)]
pub struct Term {
    pub value: f64,
    pub approximation: Approximation,
    pub converged: bool,
}

impl Term {
    pub fn exact(value: f64) -> Self {
        Term {
            value,
            approximation: Approximation::Exact,
            converged: true,
        }
    }

    fn from_opt(res: &OptResult, approximation: Approximation) -> Self {
        Term {
            value: res.value,
            approximation,
            converged: res.converged,
        }
    }

    /// The tighter of two evaluations of the same quantity.
    fn tighter(self, other: Term) -> Term {
        let take_other = match self.approximation {
            Approximation::Exact => true,
            Approximation::UpperBound => other.value < self.value || self.value.is_nan(),
            Approximation::LowerBound => other.value > self.value || self.value.is_nan(),
        };
        if take_other {
            other
        } else {
            self
        }
    }
}

/// Direction of a claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `lhs >= rhs`
    AtLeast,
    /// `lhs <= rhs`
    AtMost,
    /// `lhs == rhs`; the margin is `-|lhs - rhs|`.
    Equal,
}

/// Two sides of an inequality, each a signed sum of terms.
#[derive(Clone, Debug)]
pub struct Claim {
    pub relation: Relation,
    pub lhs: Vec<(f64, Term)>,
    pub rhs: Vec<(f64, Term)>,
}

impl Claim {
    pub fn new(relation: Relation) -> Self {
        Claim {
            relation,
            lhs: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn left(mut self, coefficient: f64, term: Term) -> Self {
        self.lhs.push((coefficient, term));
        self
    }

    pub fn right(mut self, coefficient: f64, term: Term) -> Self {
        self.rhs.push((coefficient, term));
        self
    }

    fn side(terms: &[(f64, Term)]) -> f64 {
        terms.iter().map(|(c, t)| c * t.value).sum()
    }

    pub fn lhs_value(&self) -> f64 {
        Self::side(&self.lhs)
    }

    pub fn rhs_value(&self) -> f64 {
        Self::side(&self.rhs)
    }

    pub fn margin(&self) -> f64 {
        let (l, r) = (self.lhs_value(), self.rhs_value());
        match self.relation {
            Relation::AtLeast => l - r,
            Relation::AtMost => r - l,
            Relation::Equal => -(l - r).abs(),
        }
    }

    /// Every term with the sign it carries into the margin.
    fn contributions(&self) -> impl Iterator<Item = (f64, &Term)> {
        let lhs_sign = if self.relation == Relation::AtMost { -1.0 } else { 1.0 };
        self.lhs
            .iter()
            .map(move |(c, t)| (lhs_sign * c, t))
            .chain(self.rhs.iter().map(move |(c, t)| (-lhs_sign * c, t)))
    }

    pub fn soundness(&self) -> Soundness {
        let harmless = |(c, t): (f64, &Term)| match t.approximation {
            Approximation::Exact => true,
            _ if self.relation == Relation::Equal => false,
            Approximation::UpperBound => c <= 0.0,
            Approximation::LowerBound => c >= 0.0,
        };
        if self.contributions().all(harmless) {
            Soundness::Certified
        } else {
            Soundness::Heuristic
        }
    }

    pub fn converged(&self) -> bool {
        self.lhs.iter().chain(&self.rhs).all(|(_, t)| t.converged)
    }

    fn has_approximations(&self) -> bool {
        self.lhs
            .iter()
            .chain(&self.rhs)
            .any(|(_, t)| t.approximation != Approximation::Exact)
    }

    fn merge(self, other: Claim) -> Claim {
        let pick = |a: Vec<(f64, Term)>, b: Vec<(f64, Term)>| -> Vec<(f64, Term)> {
            a.into_iter().zip(b).map(|((c, x), (_, y))| (c, x.tighter(y))).collect()
        };
        Claim {
            relation: self.relation,
            lhs: pick(self.lhs, other.lhs),
            rhs: pick(self.rhs, other.rhs),
        }
    }
}

/// Computes the terms of a claim at standard or refined precision.
pub struct Evaluator<'a> {
    options: &'a VerifyOptions,
    refined: bool,
}

impl<'a> Evaluator<'a> {
    pub fn new(options: &'a VerifyOptions, refined: bool) -> Self {
        Evaluator { options, refined }
    }

    fn config(&self, restarts: usize) -> SimplexOptConfig {
        let cfg = SimplexOptConfig::default()
            .with_restarts(restarts)
            .with_seed(self.options.optimizer_seed);
        if self.refined {
            cfg.refined()
        } else {
            cfg
        }
    }

    fn grid(&self, dim: usize) -> bool {
        self.refined && dim == 2
    }

    /// `H_alpha` of the marginal on `keep`.
    pub fn entropy(&self, rho: &DensityMatrix, keep: &[usize], alpha: RenyiOrder) -> Result<Term> {
        Ok(Term::exact(entropy(&rho.marginal(keep)?, alpha).bits()))
    }

    /// `-D_alpha(rho || I (x) tau)` for factor 0 conditioned on factor 1.
    pub fn cond_with(&self, rho: &DensityMatrix, alpha: RenyiOrder, tau: &ComplexMatrix) -> Result<Term> {
        let (da, _) = rho.bipartite_dims()?;
        let omega = ComplexMatrix::identity(da).kron(tau);
        let eig = linalg::eigh(&omega)?;
        linalg::check_psd(&eig)?;
        Ok(Term::exact(-divergence_eig(rho.matrix(), &eig, alpha, DEFAULT_KERNEL_EPS)))
    }

    /// `H^down_alpha(0|1)`.
    pub fn cond_down(&self, rho: &DensityMatrix, alpha: RenyiOrder) -> Result<Term> {
        let rb = rho.marginal(&[1])?;
        self.cond_with(rho, alpha, rb.matrix())
    }

    /// `H^up_alpha(0|1)`, a supremum.
    pub fn cond_up(&self, rho: &DensityMatrix, alpha: RenyiOrder) -> Result<Term> {
        let (da, db) = rho.bipartite_dims()?;
        let cfg = self.config(default_config_for(alpha).restarts);
        let res = cond_entropy_up_detailed(rho, alpha, &cfg)?;
        let mut term = Term::from_opt(&res, Approximation::LowerBound);
        if self.grid(db) {
            let identity = ComplexMatrix::identity(da);
            let grid = qubit_grid_oracle(
                |s| -divergence_eig(rho.matrix(), &linalg::eigh_trusted(&identity.kron(s)), alpha, DEFAULT_KERNEL_EPS),
                self.options.grid_resolution,
                Sense::Maximize,
            )?;
            term.value = term.value.max(grid.value);
        }
        Ok(term)
    }

    fn mutual_with_reference(&self, rho: &DensityMatrix, alpha: RenyiOrder, reference: &ComplexMatrix) -> Result<Term> {
        let (_, db) = rho.bipartite_dims()?;
        let cfg = self.config(default_config_for(alpha).restarts);
        let res = mutual_info_detailed(rho, alpha, &MutualVariant::Generalized(reference.clone()), &cfg)?;
        let mut term = Term::from_opt(&res, Approximation::UpperBound);
        if self.grid(db) {
            let grid = qubit_grid_oracle(
                |s| divergence_eig(rho.matrix(), &linalg::eigh_trusted(&reference.kron(s)), alpha, DEFAULT_KERNEL_EPS),
                self.options.grid_resolution,
                Sense::Minimize,
            )?;
            term.value = term.value.min(grid.value);
        }
        Ok(term)
    }

    /// `I^up_alpha(0;1) = inf_sigma D_alpha(rho || rho_0 (x) sigma)`.
    pub fn mutual_up(&self, rho: &DensityMatrix, alpha: RenyiOrder) -> Result<Term> {
        let ra = rho.marginal(&[0])?;
        self.mutual_with_reference(rho, alpha, ra.matrix())
    }

    /// `I_alpha(rho || tau_0)` for a positive semidefinite reference on factor 0.
    pub fn mutual_generalized(&self, rho: &DensityMatrix, alpha: RenyiOrder, tau: &ComplexMatrix) -> Result<Term> {
        self.mutual_with_reference(rho, alpha, tau)
    }

    /// `I^down_alpha(0:1)`, a joint minimization.
    pub fn mutual_down(&self, rho: &DensityMatrix, alpha: RenyiOrder) -> Result<Term> {
        let cfg = self.config(JOINT_RESTARTS);
        let res = mutual_info_detailed(rho, alpha, &MutualVariant::Down, &cfg)?;
        Ok(Term::from_opt(&res, Approximation::UpperBound))
    }

    /// `I^up_alpha(B;X)` with `X` the outcome of measuring factor 0 in `basis`.
    pub fn measured_mutual(&self, rho: &DensityMatrix, basis: &OrthonormalBasis, alpha: RenyiOrder) -> Result<Term> {
        Ok(Term::exact(measured_register_mutual_info(rho, basis, alpha)?.bits()))
    }
}

/// Evaluates a claim, re-evaluating at refined precision when the margin is suspicious.
pub fn settle<F>(options: &VerifyOptions, build: F) -> Result<Claim>
where
    F: Fn(&Evaluator) -> Result<Claim>,
{
    let claim = build(&Evaluator::new(options, false))?;
    let threshold = options.recheck_bits.min(options.tolerance_bits);
    let margin = claim.margin();
    if margin >= -threshold || !claim.has_approximations() {
        return Ok(claim);
    }
    let refined = build(&Evaluator::new(options, true))?;
    Ok(claim.merge(refined))
}

/// Order columns of a record.
#[derive(Clone, Copy, Debug, Default)]
pub struct OrderColumns {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
}

impl OrderColumns {
    pub fn triple(alpha: RenyiOrder, beta: RenyiOrder, gamma: RenyiOrder) -> Self {
        OrderColumns {
            alpha: Some(alpha.value()),
            beta: Some(beta.value()),
            gamma: Some(gamma.value()),
            delta: None,
        }
    }

    pub fn single(alpha: RenyiOrder) -> Self {
        OrderColumns {
            alpha: Some(alpha.value()),
            ..Default::default()
        }
    }
}

/// Turns an evaluated claim into a record.
pub fn record_from_claim(suite: &str, name: &str, orders: OrderColumns, dims: (usize, usize), claim: &Claim) -> InequalityRecord {
    InequalityRecord {
        suite: suite.to_string(),
        name: name.to_string(),
        alpha: orders.alpha,
        beta: orders.beta,
        gamma: orders.gamma,
        delta: orders.delta,
        dim_a: dims.0,
        dim_b: dims.1,
        seed: 0,
        trial: 0,
        lhs_bits: claim.lhs_value(),
        rhs_bits: claim.rhs_value(),
        margin_bits: claim.margin(),
        soundness: claim.soundness(),
        converged: claim.converged(),
    }
}

/// The four decomposition inequalities relating mutual information to entropy minus
/// conditional entropy, for orders with `w(alpha) = w(beta) + w(gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompositionForm {
    /// `I^up_gamma(A;B) >= H_beta(B) - H^down_alpha(B|A)` (positive sign product).
    OptimizedAtLeast,
    /// `I^down_gamma(A:B) >= H_beta(B) - H^up_alpha(B|A)` (positive sign product).
    MinimizedAtLeast,
    /// `I^up_gamma(A;B) <= H_beta(B) - H^down_alpha(B|A)` (negative sign product).
    OptimizedAtMost,
    /// `I^down_gamma(A:B) <= H_beta(B) - H^up_alpha(B|A)` (negative sign product).
    MinimizedAtMost,
}

impl DecompositionForm {
    pub const ALL: [DecompositionForm; 4] = [
        DecompositionForm::OptimizedAtLeast,
        DecompositionForm::MinimizedAtLeast,
        DecompositionForm::OptimizedAtMost,
        DecompositionForm::MinimizedAtMost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DecompositionForm::OptimizedAtLeast => "res1-1",
            DecompositionForm::MinimizedAtLeast => "res1-2",
            DecompositionForm::OptimizedAtMost => "res1-3",
            DecompositionForm::MinimizedAtMost => "app",
        }
    }

    pub fn required_sign(self) -> SignProduct {
        match self {
            DecompositionForm::OptimizedAtLeast | DecompositionForm::MinimizedAtLeast => SignProduct::Positive,
            _ => SignProduct::Negative,
        }
    }

    /// The pair of forms that applies to a sign product (both pairs at the unit limit).
    pub fn for_sign(sign: SignProduct) -> &'static [DecompositionForm] {
        match sign {
            SignProduct::Positive => &Self::ALL[..2],
            SignProduct::Negative => &Self::ALL[2..],
            SignProduct::Zero => &Self::ALL,
        }
    }

    fn minimized(self) -> bool {
        matches!(self, DecompositionForm::MinimizedAtLeast | DecompositionForm::MinimizedAtMost)
    }

    fn relation(self) -> Relation {
        match self.required_sign() {
            SignProduct::Positive => Relation::AtLeast,
            _ => Relation::AtMost,
        }
    }
}

/// Builds the decomposition claim for explicit orders. With `swap_ab` the right-hand
/// side is evaluated with the roles of A and B exchanged (the minimized mutual
/// information is symmetric, so the left-hand side is unchanged).
fn decomposition_claim(
    ev: &Evaluator,
    rho: &DensityMatrix,
    (alpha, beta, gamma): (RenyiOrder, RenyiOrder, RenyiOrder),
    form: DecompositionForm,
    relation: Relation,
    swap_ab: bool,
) -> Result<Claim> {
    let lhs = if form.minimized() {
        ev.mutual_down(rho, gamma)?
    } else {
        ev.mutual_up(rho, gamma)?
    };
    // Conditional entropies are evaluated for factor 0 given factor 1, so the
    // conditional term H(B|A) uses the exchanged state.
    let (entropy_state, cond_state) = if swap_ab { (rho.swap()?, rho.clone()) } else { (rho.clone(), rho.swap()?) };
    let h_beta = ev.entropy(&entropy_state, &[1], beta)?;
    let cond = if form.minimized() {
        ev.cond_up(&cond_state, alpha)?
    } else {
        ev.cond_down(&cond_state, alpha)?
    };
    Ok(Claim::new(relation).left(1.0, lhs).right(1.0, h_beta).right(-1.0, cond))
}

/// Verifies one decomposition inequality for a valid triple.
///
/// The triple must carry the sign product required by `form` (the unit limit accepts
/// every form and is checked as an equality). `swap_ab` is only meaningful for the
/// minimized forms.
pub fn verify_decomposition(
    rho: &DensityMatrix,
    triple: &OrderTriple,
    form: DecompositionForm,
    swap_ab: bool,
    options: &VerifyOptions,
) -> Result<InequalityRecord> {
    let dims = rho.bipartite_dims()?;
    if !triple.is_valid() {
        return Err(Error::validation("the order triple is not in a valid regime"));
    }
    let relation = if triple.case == CaseTag::UnitLimit {
        Relation::Equal
    } else if triple.sign != form.required_sign() {
        return Err(Error::validation(format!(
            "form {} needs a {:?} sign product, the triple has {:?}",
            form.as_str(),
            form.required_sign(),
            triple.sign
        )));
    } else {
        form.relation()
    };
    if swap_ab && !form.minimized() {
        return Err(Error::validation("only the minimized forms have a swapped variant"));
    }
    let orders = triple.original();
    let claim = settle(options, |ev| decomposition_claim(ev, rho, orders, form, relation, swap_ab))?;
    let name = if swap_ab { format!("{}:swap", form.as_str()) } else { form.as_str().to_string() };
    Ok(record_from_claim("thm1", &name, OrderColumns::triple(orders.0, orders.1, orders.2), dims, &claim))
}

/// Verifies a decomposition inequality off the relation, justified by monotonicity of
/// the conditional entropies in the order: there must be an order `alpha0` on the
/// relation with the same `(beta, gamma)`, on the same side of one as `alpha`, forming
/// a valid triple whose sign matches `form`, with `alpha <= alpha0` for the lower
/// bounds and `alpha >= alpha0` for the upper bounds.
pub fn verify_monotone_extension(
    rho: &DensityMatrix,
    alpha: RenyiOrder,
    beta: RenyiOrder,
    gamma: RenyiOrder,
    form: DecompositionForm,
    swap_ab: bool,
    options: &VerifyOptions,
) -> Result<InequalityRecord> {
    let on_relation = classify_triple(alpha, beta, gamma);
    if on_relation.is_valid() {
        return verify_decomposition(rho, &on_relation, form, swap_ab, options);
    }
    let witness = monotone_witness(alpha, beta, gamma)
        .ok_or_else(|| Error::validation("the orders are not reachable from a valid triple by monotonicity"))?;
    if witness.sign != form.required_sign() {
        return Err(Error::validation(format!(
            "the relaxed orders support the {:?} forms only",
            witness.sign
        )));
    }
    if swap_ab && !form.minimized() {
        return Err(Error::validation("only the minimized forms have a swapped variant"));
    }
    let dims = rho.bipartite_dims()?;
    let claim = settle(options, |ev| {
        decomposition_claim(ev, rho, (alpha, beta, gamma), form, form.relation(), swap_ab)
    })?;
    let mut name = format!("{}:mono", form.as_str());
    if swap_ab {
        name.push_str(":swap");
    }
    Ok(record_from_claim("thm1", &name, OrderColumns::triple(alpha, beta, gamma), dims, &claim))
}

/// All decomposition records for one order triple on one state: the two forms of the
/// triple's sign, each in both orientations of the bipartition. Triples off the relation
/// are verified through monotonicity. At the unit limit only the two lower-bound forms
/// are emitted (all four coincide there).
pub fn decomposition_records(rho: &DensityMatrix, (a, b, g): (RenyiOrder, RenyiOrder, RenyiOrder), opts: &VerifyOptions) -> Result<Vec<InequalityRecord>> {
    let triple = classify_triple(a, b, g);
    let on_relation = triple.is_valid();
    let sign = if on_relation {
        triple.sign
    } else {
        monotone_witness(a, b, g)
            .ok_or_else(|| Error::validation("orders are not reachable by monotonicity"))?
            .sign
    };
    let forms: &[DecompositionForm] = if sign == SignProduct::Zero {
        &DecompositionForm::ALL[..2]
    } else {
        DecompositionForm::for_sign(sign)
    };
    let swapped = rho.swap()?;
    let verify = |state: &DensityMatrix, form: DecompositionForm, swap_ab: bool| {
        if on_relation {
            verify_decomposition(state, &triple, form, swap_ab, opts)
        } else {
            verify_monotone_extension(state, a, b, g, form, swap_ab, opts)
        }
    };
    let mut out = Vec::new();
    for &form in forms {
        out.push(verify(rho, form, false)?);
        if matches!(form, DecompositionForm::MinimizedAtLeast | DecompositionForm::MinimizedAtMost) {
            out.push(verify(rho, form, true)?);
        } else {
            let mut r = verify(&swapped, form, false)?;
            r.name.push_str(":swap");
            out.push(r);
        }
    }
    Ok(out)
}

/// Verifies the unconditional decomposition
/// `I_gamma(A:B)` versus `H_alpha(A) + H_beta(B) - H_delta(AB)`: a lower bound on the
/// minimized mutual information when `delta` lies below the other orders, an upper
/// bound on the optimized one when it lies above, and equality at the unit limit.
///
/// The ordering of `delta` alone does not guarantee the inequality; it follows from
/// the decomposition and chain-rule inequalities only when [`unconditional_witness`]
/// finds an intermediate order. Records of quads without one are named with an
/// `:unproved` suffix.
pub fn verify_unconditional(rho: &DensityMatrix, quad: &OrderQuad, direction: QuadDirection, options: &VerifyOptions) -> Result<InequalityRecord> {
    let dims = rho.bipartite_dims()?;
    if quad.direction == QuadDirection::Invalid {
        return Err(Error::validation("the order quadruple is not valid"));
    }
    if quad.direction != QuadDirection::UnitLimit && quad.direction != direction {
        return Err(Error::validation(format!(
            "delta ordering gives the {:?} direction, {:?} was requested",
            quad.direction, direction
        )));
    }
    let (relation, minimized) = match quad.direction {
        QuadDirection::Lower => (Relation::AtLeast, true),
        QuadDirection::Upper => (Relation::AtMost, false),
        _ => (Relation::Equal, false),
    };
    let claim = settle(options, |ev| {
        let lhs = if minimized {
            ev.mutual_down(rho, quad.gamma)?
        } else {
            ev.mutual_up(rho, quad.gamma)?
        };
        Ok(Claim::new(relation)
            .left(1.0, lhs)
            .right(1.0, ev.entropy(rho, &[0], quad.alpha)?)
            .right(1.0, ev.entropy(rho, &[1], quad.beta)?)
            .right(-1.0, ev.entropy(rho, &[0, 1], quad.delta)?))
    })?;
    let direction = match quad.direction {
        QuadDirection::Lower => "cor1-lower",
        QuadDirection::Upper => "cor1-upper",
        _ => "cor1-unit",
    };
    let name = if quad.direction == QuadDirection::UnitLimit || unconditional_witness(quad).is_some() {
        direction.to_string()
    } else {
        format!("{direction}:unproved")
    };
    let orders = OrderColumns {
        delta: Some(quad.delta.value()),
        ..OrderColumns::triple(quad.alpha, quad.beta, quad.gamma)
    };
    Ok(record_from_claim("cor1", &name, orders, dims, &claim))
}

/// Conditional-entropy chain rules.
#[derive(Clone, Debug)]
pub enum ChainForm {
    /// `H^up_beta(A|B) <= H_alpha(AB) - H_gamma(B)` (positive sign product).
    Optimized,
    /// `H^down_beta(B|A) >= H_alpha(AB) - H_gamma(A)` (negative sign product).
    Marginal,
    /// On a tripartite state `rho_ABC` with a reference `sigma_C` (negative sign product):
    /// `sup_{sigma_BC} H_beta(rho || sigma_BC) >= H_alpha(rho || sigma_C) - H_gamma(rho_BC || sigma_C)`.
    Generalized(ComplexMatrix),
}

impl ChainForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChainForm::Optimized => "cr1",
            ChainForm::Marginal => "cr2",
            ChainForm::Generalized(_) => "chain-generalized",
        }
    }

    fn required_sign(&self) -> SignProduct {
        match self {
            ChainForm::Optimized => SignProduct::Positive,
            _ => SignProduct::Negative,
        }
    }
}

/// Verifies a chain rule. The triple's original arrangement is used: `alpha` on the
/// joint entropy, `beta` on the conditional entropy, `gamma` on the marginal term.
pub fn verify_chain_rules(rho: &DensityMatrix, triple: &OrderTriple, form: &ChainForm, options: &VerifyOptions) -> Result<InequalityRecord> {
    if !triple.is_valid() && triple.case != CaseTag::UnitLimit {
        return Err(Error::validation("the order triple is not in a valid regime"));
    }
    let relation_override = triple.case == CaseTag::UnitLimit;
    if !relation_override && triple.sign != form.required_sign() {
        return Err(Error::validation(format!(
            "chain rule {} needs a {:?} sign product",
            form.as_str(),
            form.required_sign()
        )));
    }
    let (alpha, beta, gamma) = triple.original();
    let pick = |r: Relation| if relation_override { Relation::Equal } else { r };
    let (claim, dims) = match form {
        ChainForm::Optimized => {
            let dims = rho.bipartite_dims()?;
            let claim = settle(options, |ev| {
                Ok(Claim::new(pick(Relation::AtMost))
                    .left(1.0, ev.cond_up(rho, beta)?)
                    .right(1.0, ev.entropy(rho, &[0, 1], alpha)?)
                    .right(-1.0, ev.entropy(rho, &[1], gamma)?))
            })?;
            (claim, dims)
        }
        ChainForm::Marginal => {
            let dims = rho.bipartite_dims()?;
            let swapped = rho.swap()?;
            let claim = settle(options, |ev| {
                Ok(Claim::new(pick(Relation::AtLeast))
                    .left(1.0, ev.cond_down(&swapped, beta)?)
                    .right(1.0, ev.entropy(rho, &[0, 1], alpha)?)
                    .right(-1.0, ev.entropy(rho, &[0], gamma)?))
            })?;
            (claim, dims)
        }
        ChainForm::Generalized(sigma_c) => {
            let shape = rho.shape();
            if shape.len() != 3 {
                return Err(Error::dimension("the generalized chain rule needs a tripartite state"));
            }
            let (da, db, dc) = (shape[0], shape[1], shape[2]);
            if sigma_c.rows() != dc || !sigma_c.is_square() {
                return Err(Error::dimension("reference operator does not match factor C"));
            }
            let a_bc = DensityMatrix::new(rho.matrix().clone(), &[da, db * dc])?;
            let ab_c = DensityMatrix::new(rho.matrix().clone(), &[da * db, dc])?;
            let bc = rho.marginal(&[1, 2])?;
            let claim = settle(options, |ev| {
                Ok(Claim::new(pick(Relation::AtLeast))
                    .left(1.0, ev.cond_up(&a_bc, beta)?)
                    .right(1.0, ev.cond_with(&ab_c, alpha, sigma_c)?)
                    .right(-1.0, ev.cond_with(&bc, gamma, sigma_c)?))
            })?;
            (claim, (da, db * dc))
        }
    };
    Ok(record_from_claim("chain", form.as_str(), OrderColumns::triple(alpha, beta, gamma), dims, &claim))
}

/// Which order relation the bipartite uncertainty relation is checked under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UncertaintyRelation {
    /// `w(alpha) = w(beta) + w(gamma)` with `w(x) = x/(x-1)`, the relation under which
    /// the chain-rule argument goes through.
    Consistent,
    /// `w(alpha) = beta/(1-beta) + w(gamma)`, the form with the flipped first term.
    AsPrinted,
}

/// Relative residual of the requested uncertainty relation.
pub fn uncertainty_residual(alpha: RenyiOrder, beta: RenyiOrder, gamma: RenyiOrder, relation: UncertaintyRelation) -> f64 {
    match relation {
        UncertaintyRelation::Consistent => relation_residual(alpha, &[beta, gamma]),
        UncertaintyRelation::AsPrinted => {
            if alpha.is_one() || beta.is_one() || gamma.is_one() {
                return relation_residual(alpha, &[beta, gamma]);
            }
            let (wa, wb, wg) = (alpha.inverse_prime(), -beta.inverse_prime(), gamma.inverse_prime());
            let scale = wa.abs().max(wb.abs()).max(wg.abs()).max(1.0);
            (wa - wb - wg).abs() / scale
        }
    }
}

/// Verifies the bipartite uncertainty relation
/// `H_beta(M_X(rho) || sigma_B) + H_gamma(M_Z(rho) || sigma_B) >= H_alpha(rho || sigma_B) - log c`
/// for orders at least `1/2` with a negative sign product (or all equal to one).
/// `sigma_b` defaults to `rho_B`.
pub fn verify_gbur(
    rho: &DensityMatrix,
    pair: &MeasurementPair,
    (alpha, beta, gamma): (RenyiOrder, RenyiOrder, RenyiOrder),
    relation: UncertaintyRelation,
    sigma_b: Option<&ComplexMatrix>,
    options: &VerifyOptions,
) -> Result<InequalityRecord> {
    let dims = rho.bipartite_dims()?;
    if pair.dim() != dims.0 {
        return Err(Error::dimension("measurement bases do not match factor A"));
    }
    let unit = alpha.is_one() && beta.is_one() && gamma.is_one();
    if !unit {
        if [alpha, beta, gamma].iter().any(|o| o.value() < 0.5 - BOUNDARY_TOL) {
            return Err(Error::validation("uncertainty-relation orders must be at least 1/2"));
        }
        if crate::orders::sign_product(&[alpha, beta, gamma]) != SignProduct::Negative {
            return Err(Error::validation("the uncertainty relation needs a negative sign product"));
        }
        if uncertainty_residual(alpha, beta, gamma, relation) > RELATION_TOL {
            return Err(Error::validation("orders do not satisfy the uncertainty-relation order condition"));
        }
    }
    let reference = match sigma_b {
        Some(s) => s.clone(),
        None => rho.marginal(&[1])?.matrix().clone(),
    };
    let measured_x = pinch_measure(rho, &pair.x)?;
    let measured_z = pinch_measure(rho, &pair.z)?;
    let log_c = pair.overlap().log2();
    let claim = settle(options, |ev| {
        Ok(Claim::new(Relation::AtLeast)
            .left(1.0, ev.cond_with(&measured_x, beta, &reference)?)
            .left(1.0, ev.cond_with(&measured_z, gamma, &reference)?)
            .right(1.0, ev.cond_with(rho, alpha, &reference)?)
            .right(-1.0, Term::exact(log_c)))
    })?;
    let name = match relation {
        UncertaintyRelation::Consistent => "gbur",
        UncertaintyRelation::AsPrinted => "gbur:printed",
    };
    Ok(record_from_claim("gbur", name, OrderColumns::triple(alpha, beta, gamma), dims, &claim))
}

/// Variants of the information exclusion relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExclusionMode {
    /// `I^up_beta(B;X) + I^up_gamma(B;Z) <= log(d^2 c) - H^down_alpha(A|B)`.
    General,
    /// Min-entropy version with orders `(a, (2a-3)/(a-2))`; `beta` is `a`.
    MinEntropy,
    /// All orders one with a classical memory: `I(X:B) + I(Z:B) <= log(d^2 c)`.
    HallLimit,
}

impl ExclusionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionMode::General => "thm2",
            ExclusionMode::MinEntropy => "res2c",
            ExclusionMode::HallLimit => "hall_limit",
        }
    }
}

/// Whether factor 1 of `rho` is classical in the computational basis.
pub fn has_classical_memory(rho: &DensityMatrix) -> Result<bool> {
    let (_, db) = rho.bipartite_dims()?;
    let m = rho.matrix();
    let n = m.rows();
    for i in 0..n {
        for j in 0..n {
            if i % db != j % db && m[(i, j)].norm() > 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Verifies an information exclusion relation. For [`ExclusionMode::General`] the
/// orders must satisfy [`exclusion_feasible`]; for [`ExclusionMode::MinEntropy`] only
/// `beta` is used and its partner order is derived. The record name of the min-entropy
/// mode carries a gate label: `both` when the orders also pass the general feasibility
/// test, `partner-only` when only the weaker `a >= 1/2` hypothesis admits them.
pub fn verify_exclusion(
    rho: &DensityMatrix,
    pair: &MeasurementPair,
    (alpha, beta, gamma): (RenyiOrder, RenyiOrder, RenyiOrder),
    mode: ExclusionMode,
    options: &VerifyOptions,
) -> Result<InequalityRecord> {
    let dims = rho.bipartite_dims()?;
    let d = dims.0;
    if pair.dim() != d {
        return Err(Error::dimension("measurement bases do not match factor A"));
    }
    let bound = ((d * d) as f64 * pair.overlap()).log2();
    let (orders, name) = match mode {
        ExclusionMode::General => {
            if !exclusion_feasible(alpha, beta, gamma) {
                return Err(Error::validation("orders are outside the exclusion-relation feasible region"));
            }
            ((alpha, beta, gamma), "thm2".to_string())
        }
        ExclusionMode::MinEntropy => {
            let partner = min_entropy_partner(beta)
                .ok_or_else(|| Error::validation("no partner order for the min-entropy exclusion relation"))?;
            let gate = if exclusion_feasible(RenyiOrder::INFINITY, beta, partner) && beta.value() > 2.0 / 3.0 && partner.value() > 2.0 / 3.0 {
                "both"
            } else {
                "partner-only"
            };
            ((RenyiOrder::INFINITY, beta, partner), format!("res2c:{gate}"))
        }
        ExclusionMode::HallLimit => {
            if !has_classical_memory(rho)? {
                return Err(Error::validation("the Hall limit needs a classical memory on factor B"));
            }
            ((RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE), "hall_limit".to_string())
        }
    };
    let (a, b, g) = orders;
    let claim = settle(options, |ev| {
        let mut claim = Claim::new(Relation::AtMost)
            .left(1.0, ev.measured_mutual(rho, &pair.x, b)?)
            .left(1.0, ev.measured_mutual(rho, &pair.z, g)?)
            .right(1.0, Term::exact(bound));
        if mode != ExclusionMode::HallLimit {
            claim = claim.right(-1.0, ev.cond_down(rho, a)?);
        }
        Ok(claim)
    })?;
    Ok(record_from_claim("exclusion", &name, OrderColumns::triple(a, b, g), dims, &claim))
}

/// Orders cycled through by the sanity battery.
pub const SANITY_ORDERS: [f64; 6] = [0.6, 0.75, 1.0, 1.5, 2.0, 3.0];
/// Eight-point order grid for the monotonicity check.
pub const MONOTONE_GRID: [f64; 8] = [0.5, 0.6, 0.75, 0.9, 1.0, 1.5, 2.0, f64::INFINITY];
/// State families cycled through by the sanity battery.
pub const SANITY_KINDS: [StateKind; 5] = [
    StateKind::HsMixed,
    StateKind::HaarPure,
    StateKind::MaxEntangled,
    StateKind::Product,
    StateKind::ClassicalQuantum,
];

/// Sibson-type closed form of `inf_q D_alpha(P_AB || P_A (x) q)` for a joint distribution.
fn classical_mutual_up(p: &[f64], da: usize, db: usize, alpha: f64) -> f64 {
    let pa: Vec<f64> = (0..da).map(|a| (0..db).map(|b| p[a * db + b]).sum()).collect();
    if alpha == 1.0 {
        let pb: Vec<f64> = (0..db).map(|b| (0..da).map(|a| p[a * db + b]).sum()).collect();
        return (0..da)
            .flat_map(|a| (0..db).map(move |b| (a, b)))
            .filter(|&(a, b)| p[a * db + b] > 0.0)
            .map(|(a, b)| {
                let v = p[a * db + b];
                v * (v / (pa[a] * pb[b])).log2()
            })
            .sum();
    }
    let total: f64 = (0..db)
        .map(|b| {
            let c: f64 = (0..da)
                .filter(|&a| p[a * db + b] > 0.0)
                .map(|a| p[a * db + b].powf(alpha) * pa[a].powf(1.0 - alpha))
                .sum();
            c.powf(1.0 / alpha)
        })
        .sum();
    alpha / (alpha - 1.0) * total.log2()
}

/// `H^down_alpha(A|B)` of a joint distribution.
fn classical_cond_down(p: &[f64], da: usize, db: usize, alpha: f64) -> f64 {
    let pb: Vec<f64> = (0..db).map(|b| (0..da).map(|a| p[a * db + b]).sum()).collect();
    let cells = (0..da).flat_map(|a| (0..db).map(move |b| (a, b))).filter(|&(a, b)| p[a * db + b] > 0.0);
    if alpha == 1.0 {
        return -cells.map(|(a, b)| p[a * db + b] * (p[a * db + b] / pb[b]).log2()).sum::<f64>();
    }
    let s: f64 = cells.map(|(a, b)| p[a * db + b].powf(alpha) * pb[b].powf(1.0 - alpha)).sum();
    s.log2() / (1.0 - alpha)
}

fn order(v: f64) -> RenyiOrder {
    RenyiOrder::new(v).expect("constant orders are valid")
}

/// The sanity battery on one state: data processing under pinching and partial trace,
/// monotonicity in the order, non-negativity, `H^up >= H^down`, `I^down <= I^up`,
/// symmetry of `I^down`, duality, norm-form equivalence, order-one equivalence, and
/// classical closed forms when the state is diagonal.
pub fn sanity_trial(shape: (usize, usize), seed: u64, trial: u64, options: &VerifyOptions) -> Result<Vec<InequalityRecord>> {
    let (da, db) = shape;
    let kind = SANITY_KINDS[(trial % SANITY_KINDS.len() as u64) as usize];
    let alpha = order(SANITY_ORDERS[(trial % SANITY_ORDERS.len() as u64) as usize]);
    let state_seed = derive_seed(seed, trial);
    let rho = random_state(kind, &[da, db], state_seed)?;
    let sigma = random_state(StateKind::HsMixed, &[da, db], derive_seed(state_seed, 1))?;
    let basis = OrthonormalBasis::haar(da, derive_seed(state_seed, 2));
    let dims = (da, db);
    let mut out = Vec::new();
    let mut push = |name: &str, orders: OrderColumns, claim: Claim| {
        out.push(record_from_claim("sanity", name, orders, dims, &claim).with_provenance(seed, trial));
    };
    let div = |r: &DensityMatrix, s: &DensityMatrix, a: RenyiOrder| -> Result<Term> {
        Ok(Term::exact(renyi_divergence(r, s.matrix(), a)?.bits()))
    };

    let full = div(&rho, &sigma, alpha)?;
    let pinched = div(&pinch_measure(&rho, &basis)?, &pinch_measure(&sigma, &basis)?, alpha)?;
    push("dpi-pinch", OrderColumns::single(alpha), Claim::new(Relation::AtLeast).left(1.0, full).right(1.0, pinched));
    let traced = div(&rho.marginal(&[0])?, &sigma.marginal(&[0])?, alpha)?;
    push("dpi-ptrace", OrderColumns::single(alpha), Claim::new(Relation::AtLeast).left(1.0, full).right(1.0, traced));
    push("nonneg-divergence", OrderColumns::single(alpha), Claim::new(Relation::AtLeast).left(1.0, full).right(1.0, Term::exact(0.0)));

    let grid: Vec<f64> = MONOTONE_GRID
        .iter()
        .map(|&a| renyi_divergence(&rho, sigma.matrix(), order(a)).map(|v| v.bits()))
        .collect::<Result<_>>()?;
    let steps = grid.windows(2).map(|w| w[1] - w[0]);
    let (worst_index, _) = steps
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
    let monotone_orders = OrderColumns {
        alpha: Some(MONOTONE_GRID[worst_index]),
        beta: Some(MONOTONE_GRID[worst_index + 1]),
        ..Default::default()
    };
    push(
        "alpha-monotone",
        monotone_orders,
        Claim::new(Relation::AtLeast)
            .left(1.0, Term::exact(grid[worst_index + 1]))
            .right(1.0, Term::exact(grid[worst_index])),
    );

    let swapped = rho.swap()?;
    let claim = settle(options, |ev| {
        Ok(Claim::new(Relation::AtLeast)
            .left(1.0, ev.cond_up(&rho, alpha)?)
            .right(1.0, ev.cond_down(&rho, alpha)?))
    })?;
    push("cond-up-ge-down", OrderColumns::single(alpha), claim);
    let claim = settle(options, |ev| {
        Ok(Claim::new(Relation::AtMost)
            .left(1.0, ev.mutual_down(&rho, alpha)?)
            .right(1.0, ev.mutual_up(&rho, alpha)?))
    })?;
    push("mutual-down-le-up", OrderColumns::single(alpha), claim);
    let claim = settle(options, |ev| {
        Ok(Claim::new(Relation::AtLeast)
            .left(1.0, ev.mutual_down(&rho, alpha)?)
            .right(1.0, Term::exact(0.0)))
    })?;
    push("nonneg-mutual-down", OrderColumns::single(alpha), claim);
    let claim = settle(options, |ev| {
        Ok(Claim::new(Relation::Equal)
            .left(1.0, ev.mutual_down(&rho, alpha)?)
            .right(1.0, ev.mutual_down(&swapped, alpha)?))
    })?;
    push("mutual-down-symmetry", OrderColumns::single(alpha), claim);

    // Duality on the canonical purification with the marginal on A as reference.
    let psi = purify_vector(&rho);
    let tripartite = psi.density();
    let rho_a = rho.marginal(&[0])?;
    let hat = alpha.hat().expect("sanity orders are at least 1/2");
    let rho_a_eig: HermitianEigenSystem = rho_a.eigen();
    if rho_a_eig.min_value() > 1e-9 {
        let inverse = rho_a_eig.power_on_support(-1.0, DEFAULT_KERNEL_EPS);
        let ab = tripartite.marginal(&[0, 1])?;
        let ac = tripartite.marginal(&[0, 2])?;
        let claim = settle(options, |ev| {
            Ok(Claim::new(Relation::Equal)
                .left(1.0, ev.mutual_generalized(&ab, alpha, rho_a.matrix())?)
                .right(-1.0, ev.mutual_generalized(&ac, hat, &inverse)?))
        })?;
        push("duality", OrderColumns::triple(alpha, hat, hat), claim);
    }

    // Norm-form equivalence for the mutual form (order one has no norm form).
    let nf_alpha = if alpha.is_one() { order(0.75) } else { alpha };
    let claim = settle(options, |ev| {
        let cfg = SimplexOptConfig::maximize().with_seed(options.optimizer_seed);
        let cfg = if ev.refined { cfg.refined() } else { cfg };
        let form = norm_form_from_purification(&psi, nf_alpha, &NormFormKind::Mutual(rho_a.matrix().clone()), &cfg)?;
        Ok(Claim::new(Relation::Equal)
            .left(1.0, Term::from_opt(&form, Approximation::LowerBound))
            .right(1.0, ev.mutual_generalized(&rho, nf_alpha, rho_a.matrix())?))
    })?;
    push("normform-mutual", OrderColumns::single(nf_alpha), claim);

    let one = RenyiOrder::ONE;
    let claim = settle(options, |ev| {
        Ok(Claim::new(Relation::Equal)
            .left(1.0, ev.mutual_up(&rho, one)?)
            .right(1.0, ev.entropy(&rho, &[0], one)?)
            .right(1.0, ev.entropy(&rho, &[1], one)?)
            .right(-1.0, ev.entropy(&rho, &[0, 1], one)?))
    })?;
    push("order1-equivalence", OrderColumns::single(one), claim);

    if kind == StateKind::ClassicalQuantum {
        let p: Vec<f64> = (0..da * db).map(|i| rho.matrix()[(i, i)].re).collect();
        let claim = settle(options, |ev| {
            Ok(Claim::new(Relation::Equal)
                .left(1.0, ev.mutual_up(&rho, alpha)?)
                .right(1.0, Term::exact(classical_mutual_up(&p, da, db, alpha.value()))))
        })?;
        push("classical-mutual-up", OrderColumns::single(alpha), claim);
        let claim = settle(options, |ev| {
            Ok(Claim::new(Relation::Equal)
                .left(1.0, ev.cond_down(&rho, alpha)?)
                .right(1.0, Term::exact(classical_cond_down(&p, da, db, alpha.value()))))
        })?;
        push("classical-cond-down", OrderColumns::single(alpha), claim);
    }
    Ok(out)
}

/// Runs [`sanity_trial`] for `trials` consecutive trials on every shape.
pub fn sanity_suite(seed: u64, dims: &[(usize, usize)], trials: u64, options: &VerifyOptions) -> Result<Vec<InequalityRecord>> {
    let mut out = Vec::new();
    for &shape in dims {
        for t in 0..trials {
            out.extend(sanity_trial(shape, seed, t, options)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::{classify_quad, solve_delta, solve_third};

    fn o(x: f64) -> RenyiOrder {
        RenyiOrder::new(x).unwrap()
    }

    fn opts() -> VerifyOptions {
        VerifyOptions::default()
    }

    #[test]
    fn unit_limit_is_an_equality() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 1).unwrap();
        let t = classify_triple(RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE);
        for form in DecompositionForm::ALL {
            let r = verify_decomposition(&rho, &t, form, false, &opts()).unwrap();
            assert!(r.margin_bits.abs() <= 1e-6, "{}: {}", r.name, r.margin_bits);
        }
    }

    #[test]
    fn case_one_example_holds() {
        let t = classify_triple(o(4.0 / 3.0), o(2.0), o(2.0));
        for seed in 0..5 {
            let rho = random_state(StateKind::HsMixed, &[2, 2], seed).unwrap();
            for &form in DecompositionForm::for_sign(t.sign) {
                let r = verify_decomposition(&rho, &t, form, false, &opts()).unwrap();
                assert!(r.passes(1e-6), "{}: {}", r.name, r.margin_bits);
            }
            let r = verify_decomposition(&rho, &t, DecompositionForm::MinimizedAtLeast, true, &opts()).unwrap();
            assert!(r.passes(1e-6));
        }
    }

    #[test]
    fn case_two_bell_example() {
        let bell = random_state(StateKind::MaxEntangled, &[2, 2], 0).unwrap();
        let t = classify_triple(o(2.0 / 3.0), o(0.5), o(0.5));
        let r = verify_decomposition(&bell, &t, DecompositionForm::OptimizedAtMost, false, &opts()).unwrap();
        assert!(r.passes(1e-6));
        // H^down_{2/3}(B|A) of a Bell state is -1 bit, so the right side is 1 + 1.
        assert!((r.rhs_bits - 2.0).abs() < 1e-9);
        assert_eq!(r.soundness, Soundness::Certified);
    }

    #[test]
    fn sign_mismatch_is_rejected() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 1).unwrap();
        let t = classify_triple(o(4.0 / 3.0), o(2.0), o(2.0));
        assert!(verify_decomposition(&rho, &t, DecompositionForm::OptimizedAtMost, false, &opts()).is_err());
        assert!(verify_decomposition(&rho, &t, DecompositionForm::OptimizedAtLeast, true, &opts()).is_err());
    }

    #[test]
    fn monotone_extension_examples() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 3).unwrap();
        // (1.2, 2, 2) sits below the tight order 4/3 on the positive branch.
        let r = verify_monotone_extension(&rho, o(1.2), o(2.0), o(2.0), DecompositionForm::OptimizedAtLeast, false, &opts()).unwrap();
        assert!(r.passes(1e-6));
        assert_eq!(r.name, "res1-1:mono");
        let r = verify_monotone_extension(&rho, o(0.7), o(0.5), o(0.5), DecompositionForm::MinimizedAtMost, false, &opts()).unwrap();
        assert!(r.passes(1e-6));
        assert!(verify_monotone_extension(&rho, o(1.5), o(2.0), o(2.0), DecompositionForm::OptimizedAtLeast, false, &opts()).is_err());
    }

    #[test]
    fn unconditional_examples() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 4).unwrap();
        let q = classify_quad(RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE);
        let r = verify_unconditional(&rho, &q, QuadDirection::Lower, &opts()).unwrap();
        assert!(r.margin_bits.abs() < 1e-6);
        let d = solve_delta(o(2.0), o(2.0), o(2.0)).unwrap();
        let q = classify_quad(o(2.0), o(2.0), o(2.0), d);
        let r = verify_unconditional(&rho, &q, QuadDirection::Lower, &opts()).unwrap();
        assert!(r.passes(1e-6));
        assert!(verify_unconditional(&rho, &q, QuadDirection::Upper, &opts()).is_err());
        let product = random_state(StateKind::Product, &[2, 2], 5).unwrap();
        let d = solve_delta(o(0.9), o(0.9), o(0.9)).unwrap();
        let q = classify_quad(o(0.9), o(0.9), o(0.9), d);
        let r = verify_unconditional(&product, &q, QuadDirection::Upper, &opts()).unwrap();
        assert!(r.passes(1e-6));
        assert_eq!(r.soundness, Soundness::Certified);
    }

    #[test]
    fn upper_decomposition_without_intermediate_order_fails() {
        // Nearly product pure state: the optimized mutual information scales like the
        // square root of the small Schmidt weight, the entropy sum like a higher power.
        let eps: f64 = 1e-3;
        let amp = |x: f64| linalg::C64::new(x.sqrt(), 0.0);
        let zero = linalg::C64::new(0.0, 0.0);
        let psi = DensityMatrix::from_pure(&[amp(1.0 - eps), zero, zero, amp(eps)], &[2, 2]).unwrap();
        let (a, b, g) = (o(0.61), o(3.87), o(3.76));
        let quad = classify_quad(a, b, g, solve_delta(a, b, g).unwrap());
        assert_eq!(quad.direction, QuadDirection::Upper);
        assert!(unconditional_witness(&quad).is_none());
        let r = verify_unconditional(&psi, &quad, QuadDirection::Upper, &opts()).unwrap();
        assert_eq!(r.name, "cor1-upper:unproved");
        assert!(r.margin_bits < -0.1, "{}", r.margin_bits);
    }

    #[test]
    fn chain_rule_examples() {
        let rho = random_state(StateKind::HsMixed, &[2, 2], 6).unwrap();
        let g = solve_third(o(1.3), o(3.0)).unwrap();
        let t = classify_triple(o(1.3), o(3.0), g);
        let r = verify_chain_rules(&rho, &t, &ChainForm::Optimized, &opts()).unwrap();
        assert!(r.passes(1e-6));
        let bell = random_state(StateKind::MaxEntangled, &[2, 2], 0).unwrap();
        let g = solve_third(o(0.8), o(0.6)).unwrap();
        let t = classify_triple(o(0.8), o(0.6), g);
        let r = verify_chain_rules(&bell, &t, &ChainForm::Marginal, &opts()).unwrap();
        assert!(r.passes(1e-6));
        let pure = random_state(StateKind::HaarPure, &[2, 2, 2], 7).unwrap();
        let sigma_c = random_state(StateKind::HsMixed, &[2], 8).unwrap();
        let r = verify_chain_rules(&pure, &t, &ChainForm::Generalized(sigma_c.matrix().clone()), &opts()).unwrap();
        assert!(r.passes(1e-6), "{}", r.margin_bits);
        assert_eq!(r.soundness, Soundness::Certified);
    }

    #[test]
    fn uncertainty_relation_examples() {
        let pair = MeasurementPair::mutually_unbiased(2);
        // Maximally mixed product: both measured entropies are one bit.
        let mixed = DensityMatrix::maximally_mixed(&[2, 2]).unwrap();
        let g = solve_third(o(2.0), o(0.75)).unwrap();
        let r = verify_gbur(&mixed, &pair, (o(2.0), o(0.75), g), UncertaintyRelation::Consistent, None, &opts()).unwrap();
        assert!((r.lhs_bits - 2.0).abs() < 1e-9);
        assert!(r.passes(1e-9));
        let rho = random_state(StateKind::HsMixed, &[2, 2], 9).unwrap();
        let r = verify_gbur(&rho, &pair, (RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE), UncertaintyRelation::Consistent, None, &opts()).unwrap();
        assert!(r.passes(1e-9));
        let same = MeasurementPair::new(OrthonormalBasis::computational(2), OrthonormalBasis::computational(2)).unwrap();
        let r = verify_gbur(&rho, &same, (o(2.0), o(0.75), g), UncertaintyRelation::Consistent, None, &opts()).unwrap();
        assert!(r.passes(1e-9));
        assert!(verify_gbur(&rho, &pair, (o(2.0), o(0.75), g), UncertaintyRelation::AsPrinted, None, &opts()).is_err());
    }

    #[test]
    fn exclusion_examples() {
        let pair = MeasurementPair::mutually_unbiased(2);
        let rho = random_state(StateKind::ClassicalMemory, &[2, 3], 10).unwrap();
        let r = verify_exclusion(&rho, &pair, (RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE), ExclusionMode::HallLimit, &opts()).unwrap();
        assert!((r.rhs_bits - 1.0).abs() < 1e-12);
        assert!(r.passes(1e-9));
        let quantum = random_state(StateKind::HsMixed, &[2, 2], 11).unwrap();
        assert!(verify_exclusion(&quantum, &pair, (RenyiOrder::ONE, RenyiOrder::ONE, RenyiOrder::ONE), ExclusionMode::HallLimit, &opts()).is_err());
        let r = verify_exclusion(&quantum, &pair, (o(2.0), o(0.5), o(1.25)), ExclusionMode::General, &opts()).unwrap();
        assert!(r.passes(1e-6));
        assert_eq!(r.soundness, Soundness::Certified);
        let r = verify_exclusion(&quantum, &pair, (RenyiOrder::INFINITY, o(0.5), RenyiOrder::ONE), ExclusionMode::MinEntropy, &opts()).unwrap();
        assert!((r.gamma.unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.name, "res2c:partner-only");
        assert!(r.passes(1e-6));
        assert!(verify_exclusion(&quantum, &pair, (o(0.9), o(1.2), o(1.2)), ExclusionMode::General, &opts()).is_err());
    }

    #[test]
    fn soundness_bookkeeping() {
        let upper = Term {
            value: 1.0,
            approximation: Approximation::UpperBound,
            converged: true,
        };
        let claim = Claim::new(Relation::AtMost).left(1.0, upper).right(1.0, Term::exact(2.0));
        assert_eq!(claim.soundness(), Soundness::Certified);
        let claim = Claim::new(Relation::AtLeast).left(1.0, upper).right(1.0, Term::exact(0.0));
        assert_eq!(claim.soundness(), Soundness::Heuristic);
        // A subtracted infimum on the right inflates the margin.
        let claim = Claim::new(Relation::AtLeast).left(1.0, Term::exact(3.0)).right(-1.0, upper);
        assert_eq!(claim.soundness(), Soundness::Heuristic);
        assert_eq!(claim.margin(), 4.0);
        let lower = Term {
            approximation: Approximation::LowerBound,
            ..upper
        };
        let claim = Claim::new(Relation::AtLeast).left(1.0, Term::exact(3.0)).right(-1.0, lower);
        assert_eq!(claim.soundness(), Soundness::Certified);
        let claim = Claim::new(Relation::Equal).left(1.0, lower).right(1.0, Term::exact(1.0));
        assert_eq!(claim.soundness(), Soundness::Heuristic);
    }

    #[test]
    fn classical_formulas_agree_with_spectral_ones() {
        let rho = random_state(StateKind::ClassicalQuantum, &[2, 3], 12).unwrap();
        let p: Vec<f64> = (0..6).map(|i| rho.matrix()[(i, i)].re).collect();
        let h = crate::entropies::cond_entropy(&rho, o(2.0), &crate::entropies::CondVariant::Down).unwrap().bits();
        assert!((h - classical_cond_down(&p, 2, 3, 2.0)).abs() < 1e-12);
    }

    #[test]
    fn sanity_battery_passes() {
        let recs = sanity_suite(7, &[(2, 2)], 10, &opts()).unwrap();
        assert!(recs.len() >= 100);
        for r in &recs {
            assert!(r.passes(1e-6), "{} trial {}: {}", r.name, r.trial, r.margin_bits);
        }
    }
}
