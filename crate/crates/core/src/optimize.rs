//! Optimization over (products of) density matrices.
//!
//! Each density block is parameterized as `sigma = exp(H) / tr exp(H)` with `H`
//! Hermitian, which keeps iterates strictly positive and unit-trace. The search
//! runs a limited-memory quasi-Newton method with Armijo backtracking in the
//! coordinates of `H`. Gradients come from the objective when it supplies them
//! and from central finite differences otherwise. A qubit Bloch-ball grid search
//! is provided as an independent reference.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianEigenSystem, SpectralFn, C64};
use crate::states::{derive_seed, random_state, StateKind};

/// Direction of optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Settings for [`optimize_blocks`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexOptConfig {
    /// Stop once successive objective changes fall below `tol * (1 + |f|)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Random starts in addition to the warm start.
    pub restarts: usize,
    pub sense: Sense,
    /// Seed for the random starts.
    pub seed: u64,
    /// Relative step for central finite-difference gradients.
    pub fd_step: f64,
}

impl Default for SimplexOptConfig {
    fn default() -> Self {
        SimplexOptConfig {
            tol: 1e-9,
            max_iters: 10_000,
            restarts: 3,
            sense: Sense::Minimize,
            seed: 0,
            fd_step: 1e-5,
        }
    }
}

impl SimplexOptConfig {
    pub fn minimize() -> Self {
        Self::default()
    }

    pub fn maximize() -> Self {
        SimplexOptConfig {
            sense: Sense::Maximize,
            ..Self::default()
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }

    /// A tighter configuration used when re-checking suspicious results.
    pub fn refined(&self) -> Self {
        SimplexOptConfig {
            tol: (self.tol * 1e-3).max(1e-15),
            max_iters: self.max_iters * 2,
            restarts: self.restarts + 2,
            ..self.clone()
        }
    }
}

/// Outcome of an optimization.
#[derive(Clone, Debug)]
pub struct OptResult {
    /// Best objective value found (in the requested sense).
    pub value: f64,
    /// Optimizing density blocks.
    pub blocks: Vec<ComplexMatrix>,
    /// Total iterations over all starts.
    pub iterations: usize,
    /// Whether the run that produced `value` met its stopping tolerance.
    pub converged: bool,
    /// Final value of every start, warm start first.
    pub restart_values: Vec<f64>,
}

impl OptResult {
    /// The single optimizing density matrix of a one-block problem.
    pub fn optimizer(&self) -> &ComplexMatrix {
        &self.blocks[0]
    }

    /// Largest difference between restart outcomes.
    pub fn restart_spread(&self) -> f64 {
        let finite: Vec<f64> = self.restart_values.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return f64::INFINITY;
        }
        let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// A real function of one or more density matrices.
pub trait DensityObjective: Sync {
    /// Dimension of each density block.
    fn block_dims(&self) -> Vec<usize>;

    /// Objective value; may be `+inf` outside the natural domain.
    fn value(&self, blocks: &[ComplexMatrix]) -> f64;

    /// Value and the Hermitian gradient of every block (`df = sum_k Re tr(G_k dsigma_k)`),
    /// or `None` to request finite differences.
    fn value_and_gradient(&self, _blocks: &[ComplexMatrix]) -> Option<(f64, Vec<ComplexMatrix>)> {
        None
    }
}

/// Wraps a closure of a single density matrix (finite-difference gradients).
pub struct ClosureObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&ComplexMatrix) -> f64 + Sync> ClosureObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        ClosureObjective { dim, f }
    }
}

impl<F: Fn(&ComplexMatrix) -> f64 + Sync> DensityObjective for ClosureObjective<F> {
    fn block_dims(&self) -> Vec<usize> {
        vec![self.dim]
    }

    fn value(&self, blocks: &[ComplexMatrix]) -> f64 {
        (self.f)(&blocks[0])
    }
}

/// Optimizes a closure over density matrices of dimension `dim`.
pub fn optimize_over_density<F>(
    objective: F,
    dim: usize,
    config: &SimplexOptConfig,
    warm_start: Option<&ComplexMatrix>,
) -> Result<OptResult>
where
    F: Fn(&ComplexMatrix) -> f64 + Sync,
{
    let obj = ClosureObjective::new(dim, objective);
    let warm = warm_start.map(|w| vec![w.clone()]);
    optimize_blocks(&obj, config, warm.as_deref())
}

/// Number of real coordinates of a Hermitian `d x d` matrix.
fn param_len(d: usize) -> usize {
    d * d
}

fn hermitian_from_params(x: &[f64], d: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(d, d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = 0;
    for i in 0..d {
        h[(i, i)] = C64::new(x[k], 0.0);
        k += 1;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let z = C64::new(x[k] * s, x[k + 1] * s);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// Coordinates of a Hermitian matrix in an orthonormal basis for `Re tr(A B)`;
/// applied to a gradient matrix it yields the Euclidean gradient in those coordinates.
fn params_from_hermitian(h: &ComplexMatrix, out: &mut Vec<f64>) {
    let d = h.rows();
    let s = std::f64::consts::SQRT_2;
    for i in 0..d {
        out.push(h[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let z = h[(i, j)];
            out.push(z.re * s);
            out.push(z.im * s);
        }
    }
}

struct Block {
    sigma: ComplexMatrix,
    shifted: HermitianEigenSystem,
    partition: f64,
}

fn block_from_params(x: &[f64], d: usize) -> Block {
    let h = hermitian_from_params(x, d);
    let mut eig = linalg::eigh_trusted(&h);
    let top = eig.max_value();
    for v in eig.values.iter_mut() {
        *v -= top;
    }
    let weights: Vec<f64> = eig.values.iter().map(|v| v.exp()).collect();
    let partition: f64 = weights.iter().sum();
    let normalized: Vec<f64> = weights.iter().map(|w| w / partition).collect();
    let sigma = eig.apply_weights(&normalized);
    Block {
        sigma,
        shifted: eig,
        partition,
    }
}

/// Parameters of `log((1 - mix) sigma + mix I / d)`.
fn params_from_density(sigma: &ComplexMatrix, mix: f64) -> Vec<f64> {
    let d = sigma.rows();
    let m = &sigma.hermitize().scale(1.0 - mix) + &ComplexMatrix::identity(d).scale(mix / d as f64);
    let eig = linalg::eigh_trusted(&m);
    let log = eig.apply(|v| v.max(1e-300).ln());
    let mut out = Vec::with_capacity(d * d);
    params_from_hermitian(&log, &mut out);
    out
}

struct Parameterized<'a> {
    objective: &'a dyn DensityObjective,
    dims: Vec<usize>,
    sign: f64,
    fd_step: f64,
}

impl Parameterized<'_> {
    fn blocks(&self, x: &[f64]) -> Vec<Block> {
        let mut off = 0;
        self.dims
            .iter()
            .map(|&d| {
                let b = block_from_params(&x[off..off + param_len(d)], d);
                off += param_len(d);
                b
            })
            .collect()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let blocks: Vec<ComplexMatrix> = self.blocks(x).into_iter().map(|b| b.sigma).collect();
        let v = self.sign * self.objective.value(&blocks);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let blocks = self.blocks(x);
        let sigmas: Vec<ComplexMatrix> = blocks.iter().map(|b| b.sigma.clone()).collect();
        if let Some((v, grads)) = self.objective.value_and_gradient(&sigmas) {
            let v = self.sign * v;
            if !v.is_finite() {
                return (if v.is_nan() { f64::INFINITY } else { v }, vec![0.0; x.len()]);
            }
            let mut g = Vec::with_capacity(x.len());
            for (b, gs) in blocks.iter().zip(&grads) {
                let gs = gs.scale(self.sign);
                let mean = gs.re_trace_product(&b.sigma);
                let pulled = b.shifted.frechet(SpectralFn::Exp, &gs, 0.0).scale(1.0 / b.partition);
                let grad_h = &pulled - &b.sigma.scale(mean);
                params_from_hermitian(&grad_h, &mut g);
            }
            return (v, g);
        }
        let v = self.value(x);
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for k in 0..x.len() {
            let h = self.fd_step * x[k].abs().max(1.0);
            xp[k] = x[k] + h;
            let fp = self.value(&xp);
            xp[k] = x[k] - h;
            let fm = self.value(&xp);
            xp[k] = x[k];
            g[k] = (fp - fm) / (2.0 * h);
            if !g[k].is_finite() {
                g[k] = 0.0;
            }
        }
        (v, g)
    }
}

struct RunOutcome {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

const LBFGS_MEMORY: usize = 10;

fn lbfgs_direction(g: &[f64], s_hist: &VecDeque<Vec<f64>>, y_hist: &VecDeque<Vec<f64>>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let k = s_hist.len();
    let mut alphas = vec![0.0; k];
    let rhos: Vec<f64> = (0..k).map(|i| 1.0 / dot(&y_hist[i], &s_hist[i])).collect();
    for i in (0..k).rev() {
        let a = rhos[i] * dot(&s_hist[i], &q);
        alphas[i] = a;
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= a * yj;
        }
    }
    if k > 0 {
        let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
        for qj in q.iter_mut() {
            *qj *= gamma;
        }
    } else {
        let scale = 1.0 / max_abs(g).max(1.0);
        for qj in q.iter_mut() {
            *qj *= scale;
        }
    }
    for i in 0..k {
        let b = rhos[i] * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alphas[i] - b) * sj;
        }
    }
    q.iter().map(|v| -v).collect()
}

fn run_lbfgs(problem: &Parameterized<'_>, x0: Vec<f64>, tol: f64, max_iters: usize) -> RunOutcome {
    let mut x = x0;
    let (mut f, mut g) = problem.value_and_gradient(&x);
    if !f.is_finite() {
        return RunOutcome {
            x,
            f,
            iterations: 0,
            converged: false,
        };
    }
    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut small_steps = 0;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        if max_abs(&g) <= 1e-14 * (1.0 + f.abs()) {
            return RunOutcome { x, f, iterations, converged: true };
        }
        let mut dir = lbfgs_direction(&g, &s_hist, &y_hist);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            dir = lbfgs_direction(&g, &s_hist, &y_hist);
            slope = dot(&g, &dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let fn_ = problem.value(&xn);
            if fn_.is_finite() && fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, _)) = accepted else {
            if !s_hist.is_empty() {
                s_hist.clear();
                y_hist.clear();
                continue;
            }
            let converged = max_abs(&g) <= tol.sqrt();
            return RunOutcome { x, f, iterations, converged };
        };
        let (fn_, gn) = problem.value_and_gradient(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if s_hist.len() == LBFGS_MEMORY {
                s_hist.pop_front();
                y_hist.pop_front();
            }
            s_hist.push_back(s);
            y_hist.push_back(y);
        }
        let decrease = f - fn_;
        x = xn;
        f = fn_;
        g = gn;
        if decrease <= tol * (1.0 + f.abs()) {
            small_steps += 1;
            if small_steps >= 2 {
                return RunOutcome { x, f, iterations, converged: true };
            }
        } else {
            small_steps = 0;
        }
    }
    RunOutcome {
        x,
        f,
        iterations,
        converged: false,
    }
}

/// Optimizes `objective` over products of density matrices.
///
/// The first start is `warm_start` (mixed with a little of the identity so it lies in
/// the interior) or the maximally mixed state; `config.restarts` further starts are
/// Hilbert-Schmidt random states derived from `config.seed`. The best outcome wins.
pub fn optimize_blocks(
    objective: &dyn DensityObjective,
    config: &SimplexOptConfig,
    warm_start: Option<&[ComplexMatrix]>,
) -> Result<OptResult> {
    let dims = objective.block_dims();
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::dimension("optimization blocks must have positive dimension"));
    }
    if let Some(w) = warm_start {
        if w.len() != dims.len() || w.iter().zip(&dims).any(|(m, &d)| m.rows() != d || !m.is_square()) {
            return Err(Error::dimension("warm start does not match the block dimensions"));
        }
    }
    if !(config.tol > 0.0) || config.max_iters == 0 {
        return Err(Error::validation("optimizer tolerance and iteration budget must be positive"));
    }
    let sign = match config.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let problem = Parameterized {
        objective,
        dims: dims.clone(),
        sign,
        fd_step: config.fd_step,
    };
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(1 + config.restarts);
    let mut first = Vec::new();
    for (k, &d) in dims.iter().enumerate() {
        match warm_start {
            Some(w) => first.extend(params_from_density(&w[k], 1e-8)),
            None => first.extend(vec![0.0; param_len(d)]),
        }
    }
    starts.push(first);
    for r in 0..config.restarts {
        let mut x = Vec::new();
        for (k, &d) in dims.iter().enumerate() {
            let seed = derive_seed(derive_seed(config.seed, r as u64 + 1), k as u64);
            let s = random_state(StateKind::HsMixed, &[d], seed)?;
            x.extend(params_from_density(s.matrix(), 1e-3));
        }
        starts.push(x);
    }
    let mut best: Option<RunOutcome> = None;
    let mut restart_values = Vec::with_capacity(starts.len());
    let mut iterations = 0;
    for x0 in starts {
        let out = run_lbfgs(&problem, x0, config.tol, config.max_iters);
        iterations += out.iterations;
        restart_values.push(sign * out.f);
        let better = match &best {
            None => true,
            Some(b) => out.f < b.f,
        };
        if better {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let blocks = problem.blocks(&best.x).into_iter().map(|b| b.sigma).collect();
    Ok(OptResult {
        value: sign * best.f,
        blocks,
        iterations,
        converged: best.converged,
        restart_values,
    })
}

/// Qubit density matrix with Bloch vector `r (sin t cos p, sin t sin p, cos t)`.
pub fn bloch_state(r: f64, theta: f64, phi: f64) -> ComplexMatrix {
    let (x, y, z) = (r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos());
    ComplexMatrix::from_vec(
        2,
        2,
        vec![
            C64::new((1.0 + z) / 2.0, 0.0),
            C64::new(x / 2.0, -y / 2.0),
            C64::new(x / 2.0, y / 2.0),
            C64::new((1.0 - z) / 2.0, 0.0),
        ],
    )
    .expect("finite Bloch state")
}

/// Points per axis of each local refinement scan.
pub const GRID_REFINE_POINTS: usize = 11;
/// Number of local refinement scans after the global one.
pub const GRID_REFINE_LEVELS: usize = 4;

/// Exhaustive search over the qubit Bloch ball: `resolution` radii (the last one on the
/// pure-state shell), `resolution` polar angles including both poles, `resolution`
/// azimuths, plus the maximally mixed center. Non-finite objective values are skipped.
///
/// The global scan is followed by [`GRID_REFINE_LEVELS`] local scans of
/// [`GRID_REFINE_POINTS`] points per axis on a box of plus or minus one grid step around
/// the incumbent, each shrinking the step. Every reported value is attained by an actual
/// grid state, so the result is a feasible bound for the optimum.
pub fn qubit_grid_oracle<F>(objective: F, resolution: usize, sense: Sense) -> Result<OptResult>
where
    F: Fn(&ComplexMatrix) -> f64,
{
    use std::f64::consts::PI;
    if resolution < 2 {
        return Err(Error::validation("grid resolution must be at least 2"));
    }
    let n = resolution;
    let better = |a: f64, b: f64| match sense {
        Sense::Minimize => a < b,
        Sense::Maximize => a > b,
    };
    let mut best_val = objective(&ComplexMatrix::identity(2).scale(0.5));
    if !best_val.is_finite() {
        best_val = match sense {
            Sense::Minimize => f64::INFINITY,
            Sense::Maximize => f64::NEG_INFINITY,
        };
    }
    let mut best = (0.0, 0.0, 0.0);
    let mut evaluations = 1;
    let mut visit = |r: f64, theta: f64, phi: f64, best_val: &mut f64, best: &mut (f64, f64, f64)| {
        let v = objective(&bloch_state(r, theta, phi));
        evaluations += 1;
        if v.is_finite() && better(v, *best_val) {
            *best_val = v;
            *best = (r, theta, phi);
        }
    };
    for i in 1..=n {
        let r = i as f64 / n as f64;
        for j in 0..n {
            let theta = PI * j as f64 / (n - 1) as f64;
            let azimuths = if j == 0 || j == n - 1 { 1 } else { n };
            for k in 0..azimuths {
                visit(r, theta, 2.0 * PI * k as f64 / n as f64, &mut best_val, &mut best);
            }
        }
    }
    let mut steps = (1.0 / n as f64, PI / (n - 1) as f64, 2.0 * PI / n as f64);
    let m = GRID_REFINE_POINTS;
    for _ in 0..GRID_REFINE_LEVELS {
        let (r0, t0, p0) = best;
        let offset = |k: usize| 2.0 * k as f64 / (m - 1) as f64 - 1.0;
        for i in 0..m {
            let r = (r0 + steps.0 * offset(i)).clamp(0.0, 1.0);
            for j in 0..m {
                let theta = (t0 + steps.1 * offset(j)).clamp(0.0, PI);
                for k in 0..m {
                    visit(r, theta, p0 + steps.2 * offset(k), &mut best_val, &mut best);
                }
            }
        }
        let shrink = 2.0 / (m - 1) as f64;
        steps = (steps.0 * shrink, steps.1 * shrink, steps.2 * shrink);
    }
    let (r, theta, phi) = best;
    Ok(OptResult {
        value: best_val,
        blocks: vec![bloch_state(r, theta, phi)],
        iterations: evaluations,
        converged: best_val.is_finite(),
        restart_values: vec![best_val],
    })
}
