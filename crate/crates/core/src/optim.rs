//! Iterative solvers for the trace-ratio objective on the Grassmann manifold.
//!
//! * [`pmo_optimize`] keeps an unconstrained proxy matrix `P` in ambient space
//!   and evaluates the loss at its retraction `r(P) = U Vᵀ`. The gradient is
//!   pulled back through the retraction, so each step moves `P` itself.
//! * [`two_step_optimize`] is the classical baseline: an ambient gradient
//!   step, projection onto the tangent space at the current point, then
//!   retraction back onto the manifold.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GildaError, Result};
use crate::grassmann::{self, AmbientMatrix, GrassmannPoint, ThinSvd};
use crate::lda::{objective_and_gradient, ScatterPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    /// Fixed step size β.
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop once `|f_{i+1} − f_i| <= rel_tol · |f_i|`.
    pub rel_tol: f64,
    /// The proxy's smallest singular value must be at least this fraction of
    /// its largest for the retraction to be differentiated.
    pub svd_gap_min: f64,
    /// Classical (heavy-ball) momentum coefficient; 0 is plain gradient descent.
    #[serde(default)]
    pub momentum: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-2,
            max_iters: 1000,
            rel_tol: 1e-9,
            svd_gap_min: 1e-6,
            momentum: 0.0,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(GildaError::InvalidConfig(format!("step_size must be > 0, got {}", self.step_size)));
        }
        if self.max_iters == 0 {
            return Err(GildaError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(GildaError::InvalidConfig(format!("rel_tol must be >= 0, got {}", self.rel_tol)));
        }
        if !(self.svd_gap_min > 0.0 && self.svd_gap_min < 1.0) {
            return Err(GildaError::InvalidConfig(format!(
                "svd_gap_min must lie in (0, 1), got {}",
                self.svd_gap_min
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(GildaError::InvalidConfig(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Objective at this iterate.
    pub objective: f64,
    /// Lowest objective seen up to and including this iterate.
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptRun {
    /// Best iterate encountered, not necessarily the last.
    pub final_point: GrassmannPoint,
    pub final_objective: f64,
    pub best_iteration: usize,
    /// One entry per evaluated iterate, starting with the initial point.
    pub trace: Vec<TraceEntry>,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Tracks the stopping rule and the best iterate for both solvers.
struct Progress {
    trace: Vec<TraceEntry>,
    best_point: GrassmannPoint,
    best_objective: f64,
    best_iteration: usize,
}

impl Progress {
    fn new(point: &GrassmannPoint, objective: f64, capacity: usize) -> Self {
        let mut trace = Vec::with_capacity(capacity + 1);
        trace.push(TraceEntry { iteration: 0, objective, best: objective });
        Self {
            trace,
            best_point: point.clone(),
            best_objective: objective,
            best_iteration: 0,
        }
    }

    /// Records iterate `iteration`; returns true when the stopping rule fires.
    fn record(&mut self, iteration: usize, point: &GrassmannPoint, objective: f64, rel_tol: f64) -> bool {
        let previous = self.trace.last().expect("trace starts non-empty").objective;
        if objective < self.best_objective {
            self.best_objective = objective;
            self.best_point = point.clone();
            self.best_iteration = iteration;
        }
        self.trace.push(TraceEntry { iteration, objective, best: self.best_objective });
        (objective - previous).abs() <= rel_tol * previous.abs()
    }

    fn finish(self, iterations_used: usize, converged: bool) -> OptRun {
        OptRun {
            final_point: self.best_point,
            final_objective: self.best_objective,
            best_iteration: self.best_iteration,
            trace: self.trace,
            iterations_used,
            converged,
        }
    }
}

/// Proxy SVD after checking that it is safe to differentiate through.
fn differentiable_svd(p: &DMatrix<f64>, svd_gap_min: f64) -> Result<ThinSvd> {
    let (m, k) = p.shape();
    if k == 0 || k >= m {
        return Err(GildaError::InvalidShape(format!("proxy needs m > p >= 1, got {m} x {k}")));
    }
    let svd = ThinSvd::compute(p);
    svd.check_rank()?;
    let ratio = svd.sigma_min() / svd.sigma_max();
    if ratio < svd_gap_min {
        return Err(GildaError::DegenerateSpectrum { ratio, min: svd_gap_min });
    }
    Ok(svd)
}

/// Pullback of `upstream = dL/dQ` through `Q = r(P) = U Vᵀ`, given the SVD of `P`.
///
/// With `A = Uᵀ G V`, the differential of the polar factor gives
///
/// ```text
/// dL/dP = U K Vᵀ + (I − UUᵀ) G V Σ⁻¹ Vᵀ,   K_ij = (A_ij − A_ji) / (σ_i + σ_j)
/// ```
fn polar_vjp(svd: &ThinSvd, upstream: &DMatrix<f64>) -> DMatrix<f64> {
    let u = &svd.u;
    let v = svd.v_t.transpose();
    let k = svd.sigma.len();
    let a = u.transpose() * upstream * &v;
    let skew = DMatrix::from_fn(k, k, |i, j| (a[(i, j)] - a[(j, i)]) / (svd.sigma[i] + svd.sigma[j]));
    let inv_sigma = DMatrix::from_diagonal(&svd.sigma.map(|s| 1.0 / s));
    let g_v = upstream * &v;
    let horizontal = &g_v - u * (u.transpose() * &g_v);
    u * skew * &svd.v_t + horizontal * inv_sigma * &svd.v_t
}

/// Vector-Jacobian product of the polar retraction at `p`.
pub fn retraction_vjp(p: &AmbientMatrix, upstream: &AmbientMatrix, svd_gap_min: f64) -> Result<AmbientMatrix> {
    if p.shape() != upstream.shape() {
        return Err(GildaError::DimensionMismatch {
            expected: p.shape(),
            got: upstream.shape(),
        });
    }
    let svd = differentiable_svd(p.as_matrix(), svd_gap_min)?;
    Ok(AmbientMatrix::from_finite(polar_vjp(&svd, upstream.as_matrix())))
}

fn check_problem(scatter: &ScatterPair, shape: (usize, usize), cfg: &OptConfig) -> Result<()> {
    cfg.validate()?;
    let m = scatter.dim();
    if shape.0 != m {
        return Err(GildaError::DimensionMismatch {
            expected: (m, shape.1),
            got: shape,
        });
    }
    if shape.1 == 0 || shape.1 >= m {
        return Err(GildaError::InvalidShape(format!("need 1 <= p < m, got p = {}, m = {m}", shape.1)));
    }
    Ok(())
}

/// Heavy-ball update direction: `v ← μ v + g`.
fn momentum_step(velocity: &mut Option<DMatrix<f64>>, grad: DMatrix<f64>, momentum: f64) -> &DMatrix<f64> {
    match velocity {
        Some(v) if momentum > 0.0 => {
            *v *= momentum;
            *v += grad;
        }
        _ => *velocity = Some(grad),
    }
    velocity.as_ref().expect("velocity just set")
}

/// Proxy matrix optimization.
///
/// Each iteration retracts the proxy, evaluates the objective and its
/// Euclidean gradient at `Y = r(P)`, maps that to the Riemannian gradient
/// `G − Y Gᵀ Y`, pulls it back through the retraction and takes a fixed step
/// on `P`. Errors carry the index of the iteration that produced them.
pub fn pmo_optimize(scatter: &ScatterPair, p0: &AmbientMatrix, cfg: &OptConfig) -> Result<OptRun> {
    pmo_optimize_observed(scatter, p0, cfg, |_, _, _| {})
}

/// [`pmo_optimize`] with a callback receiving `(iteration, point, objective)`
/// for every evaluated iterate, including the initial one.
pub fn pmo_optimize_observed<F>(scatter: &ScatterPair, p0: &AmbientMatrix, cfg: &OptConfig, mut observe: F) -> Result<OptRun>
where
    F: FnMut(usize, &GrassmannPoint, f64),
{
    check_problem(scatter, p0.shape(), cfg)?;

    let mut proxy = p0.as_matrix().clone();
    let mut svd = differentiable_svd(&proxy, cfg.svd_gap_min).map_err(|e| e.at_iteration(0))?;
    let mut point = GrassmannPoint::from_orthonormal(svd.polar());
    let (mut objective, mut grad) = objective_and_gradient(point.as_matrix(), scatter).map_err(|e| e.at_iteration(0))?;
    observe(0, &point, objective);
    let mut progress = Progress::new(&point, objective, cfg.max_iters);
    let mut velocity = None;

    for iter in 1..=cfg.max_iters {
        let riemannian = grassmann::riemannian_gradient(&point, &grad).map_err(|e| e.at_iteration(iter))?;
        let proxy_grad = polar_vjp(&svd, riemannian.as_matrix());
        let direction = momentum_step(&mut velocity, proxy_grad, cfg.momentum);
        proxy -= direction * cfg.step_size;

        svd = differentiable_svd(&proxy, cfg.svd_gap_min).map_err(|e| e.at_iteration(iter))?;
        point = GrassmannPoint::from_orthonormal(svd.polar());
        (objective, grad) = objective_and_gradient(point.as_matrix(), scatter).map_err(|e| e.at_iteration(iter))?;
        observe(iter, &point, objective);
        if progress.record(iter, &point, objective, cfg.rel_tol) {
            return Ok(progress.finish(iter, true));
        }
    }
    Ok(progress.finish(cfg.max_iters, false))
}

/// Two-step baseline: ambient step, tangent projection, retraction.
///
/// The ambient iterate `Z = R − β ∂f/∂R` is turned into the displacement
/// `Z − R`, projected onto the tangent space at `R`, and `R + π_R(Z − R)` is
/// retracted to give the next point.
pub fn two_step_optimize(scatter: &ScatterPair, r0: &GrassmannPoint, cfg: &OptConfig) -> Result<OptRun> {
    two_step_optimize_observed(scatter, r0, cfg, |_, _, _| {})
}

/// [`two_step_optimize`] with a per-iterate callback, as in [`pmo_optimize_observed`].
pub fn two_step_optimize_observed<F>(
    scatter: &ScatterPair,
    r0: &GrassmannPoint,
    cfg: &OptConfig,
    mut observe: F,
) -> Result<OptRun>
where
    F: FnMut(usize, &GrassmannPoint, f64),
{
    check_problem(scatter, (r0.ambient_dim(), r0.subspace_dim()), cfg)?;

    let mut point = r0.clone();
    let (mut objective, mut grad) = objective_and_gradient(point.as_matrix(), scatter).map_err(|e| e.at_iteration(0))?;
    observe(0, &point, objective);
    let mut progress = Progress::new(&point, objective, cfg.max_iters);
    let mut velocity = None;

    for iter in 1..=cfg.max_iters {
        let direction = momentum_step(&mut velocity, grad.into_inner(), cfg.momentum);
        let displacement = AmbientMatrix::from_finite(-(direction * cfg.step_size));
        let tangent = grassmann::tangent_project(&point, &displacement).map_err(|e| e.at_iteration(iter))?;
        let moved = AmbientMatrix::from_finite(point.as_matrix() + tangent.as_matrix());
        point = grassmann::retract(&moved).map_err(|e| e.at_iteration(iter))?;

        (objective, grad) = objective_and_gradient(point.as_matrix(), scatter).map_err(|e| e.at_iteration(iter))?;
        observe(iter, &point, objective);
        if progress.record(iter, &point, objective, cfg.rel_tol) {
            return Ok(progress.finish(iter, true));
        }
    }
    Ok(progress.finish(cfg.max_iters, false))
}
