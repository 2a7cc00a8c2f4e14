//! Discrete truncated energy
//! `I(u) = ∫ Φ(|u'|) ω r^{N-1} dr − λ ∫ F(u) ω r^{N-1} dr` and its box-projected
//! minimization.
//!
//! The gradient term uses the per-cell difference quotient against the exact cell
//! volume; the source term uses lumped nodal weights. The last node carries the
//! Dirichlet condition and is never moved.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{GridError, GridFunction, RadialGrid};
use crate::nfunction::{NFunctionError, NFunctionSpec};
use crate::nonlinearity::Forcing;
use crate::numerics::solve_tridiagonal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    NFunction(#[from] NFunctionError),
    #[error("lambda must be finite and non-negative, got {0}")]
    Lambda(f64),
    #[error("u(R) = {0} violates the Dirichlet condition")]
    Boundary(f64),
}

pub type Result<T> = std::result::Result<T, EnergyError>;

/// Direction metric used by [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    /// Lumped-mass scaled gradient `−g_i / w_i`.
    None,
    /// Diagonal of the curvature metric.
    Diagonal,
    /// Tridiagonal curvature metric: per-cell `max(G(s)/s, G'(s))` stiffness plus the
    /// decreasing part of `λ f'`, restricted to the free variables.
    #[default]
    Tridiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Stop when the mass-scaled projected gradient `max |Pg_i| / w_i`, relative to
    /// [`EnergyProblem::gradient_scale`], is below this.
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    /// Keep the energy after every accepted step.
    pub record_history: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            preconditioner: Preconditioner::Tridiagonal,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 60,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No step length satisfied the sufficient-decrease test.
    LineSearch,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub u: GridFunction,
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// `max(0, max_i −u_i, max_i u_i − ub)`.
    pub box_violation: f64,
    /// `max_i |∂I/∂u_i| / w_i` over every interior hat function, without projection,
    /// relative to the gradient scale.
    pub weak_residual: f64,
    pub converged: bool,
    pub stop: StopReason,
    /// Trial points rejected because the energy was not finite.
    pub rejected_nonfinite: usize,
    pub history: Vec<f64>,
}

impl MinimizeResult {
    pub fn sup_norm(&self) -> f64 {
        self.u.sup_norm()
    }
}

/// The discrete energy for one `(grid, Φ, f, λ)`.
pub struct EnergyProblem<'a, F: Forcing + ?Sized> {
    grid: &'a RadialGrid,
    nf: &'a NFunctionSpec,
    forcing: &'a F,
    lambda: f64,
}

impl<'a, F: Forcing + ?Sized> EnergyProblem<'a, F> {
    pub fn new(
        grid: &'a RadialGrid,
        nf: &'a NFunctionSpec,
        forcing: &'a F,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(EnergyError::Lambda(lambda));
        }
        Ok(Self {
            grid,
            nf,
            forcing,
            lambda,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn slope(&self, u: &[f64], c: usize) -> f64 {
        (u[c + 1] - u[c]) / self.grid.cell_width(c)
    }

    /// `I(u)`; `+∞` when `Φ(|u'|)` overflows.
    pub fn value(&self, u: &[f64]) -> Result<f64> {
        let vols = self.grid.cell_volumes();
        let mut grad_term = 0.0;
        for (c, &vol) in vols.iter().enumerate() {
            grad_term += vol * self.nf.big_phi_abs(self.slope(u, c).abs())?;
        }
        let source: f64 = u
            .iter()
            .zip(self.grid.weights())
            .map(|(&v, &w)| w * self.forcing.primitive(v))
            .sum();
        Ok(grad_term - self.lambda * source)
    }

    /// `∂I/∂u_i`, with the Dirichlet entry set to zero.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut g: Vec<f64> = u
            .iter()
            .zip(self.grid.weights())
            .map(|(&v, &w)| -self.lambda * w * self.forcing.value(v))
            .collect();
        for (c, &vol) in self.grid.cell_volumes().iter().enumerate() {
            let s = self.slope(u, c);
            let flux = vol * s.signum() * self.nf.g_abs(s.abs()) / self.grid.cell_width(c);
            g[c] -= flux;
            g[c + 1] += flux;
        }
        g[n - 1] = 0.0;
        g
    }

    /// `1 + max_i Σ|terms of ∂I/∂u_i| / w_i`: the size of the mass-scaled gradient
    /// before cancellation. Stopping tests are relative to it.
    pub fn gradient_scale(&self, u: &[f64]) -> f64 {
        let n = u.len();
        let mut a: Vec<f64> = u
            .iter()
            .zip(self.grid.weights())
            .map(|(&v, &w)| (self.lambda * w * self.forcing.value(v)).abs())
            .collect();
        for (c, &vol) in self.grid.cell_volumes().iter().enumerate() {
            let s = self.slope(u, c).abs();
            let flux = vol * self.nf.g_abs(s) / self.grid.cell_width(c);
            a[c] += flux;
            a[c + 1] += flux;
        }
        let w = self.grid.weights();
        1.0 + (0..n - 1).map(|i| a[i] / w[i]).fold(0.0, f64::max)
    }

    /// `I(v) − I(u)` accumulated term by term. Small per-term increments use Simpson's
    /// rule on `Φ' = G` and `F' = f`, so the difference keeps its relative accuracy
    /// long after `I(v)` and `I(u)` agree to machine precision.
    pub fn change(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (c, &vol) in self.grid.cell_volumes().iter().enumerate() {
            let s0 = self.slope(u, c);
            let s1 = self.slope(v, c);
            total += vol * self.phi_increment(s0, s1)?;
        }
        let mut source = 0.0;
        for ((&x0, &x1), &w) in u.iter().zip(v).zip(self.grid.weights()) {
            source += w * self.primitive_increment(x0, x1);
        }
        Ok(total - self.lambda * source)
    }

    fn phi_increment(&self, s0: f64, s1: f64) -> Result<f64> {
        let d = s1 - s0;
        if d == 0.0 {
            return Ok(0.0);
        }
        if d.abs() <= 1e-3 * (1.0 + s0.abs()) {
            let g = |s: f64| s.signum() * self.nf.g_abs(s.abs());
            Ok(d / 6.0 * (g(s0) + 4.0 * g(0.5 * (s0 + s1)) + g(s1)))
        } else {
            Ok(self.nf.big_phi_abs(s1.abs())? - self.nf.big_phi_abs(s0.abs())?)
        }
    }

    fn primitive_increment(&self, x0: f64, x1: f64) -> f64 {
        let d = x1 - x0;
        if d == 0.0 {
            0.0
        } else if d.abs() <= 1e-3 * (1.0 + x0.abs()) {
            let f = |s: f64| self.forcing.value(s);
            d / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1))
        } else {
            self.forcing.primitive(x1) - self.forcing.primitive(x0)
        }
    }

    /// Tridiagonal curvature metric `(diag, off)` at `u`.
    fn metric(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = u.len();
        let slopes: Vec<f64> = (0..n - 1).map(|c| self.slope(u, c).abs()).collect();
        let floor_s = 1e-8 * (1.0 + slopes.iter().fold(0.0_f64, |m, &s| m.max(s)));
        let mut off: Vec<f64> = slopes
            .iter()
            .enumerate()
            .map(|(c, &s)| {
                let s = s.max(floor_s);
                let secant = self.nf.g_abs(s) / s;
                let tangent = self.nf.g_prime(s);
                let curv = secant.max(tangent);
                let h = self.grid.cell_width(c);
                let k = self.grid.cell_volumes()[c] * curv / (h * h);
                if k.is_finite() {
                    k
                } else {
                    f64::MAX.sqrt()
                }
            })
            .collect();
        let kmax = off.iter().fold(0.0_f64, |m, &k| m.max(k));
        for k in off.iter_mut() {
            *k = k.max(1e-14 * kmax).max(f64::MIN_POSITIVE);
        }
        let mut diag: Vec<f64> = u
            .iter()
            .zip(self.grid.weights())
            .map(|(&v, &w)| self.lambda * w * (-self.forcing.slope(v)).max(0.0))
            .collect();
        for (c, &k) in off.iter().enumerate() {
            diag[c] += k;
            diag[c + 1] += k;
        }
        for k in off.iter_mut() {
            *k = -*k;
        }
        (diag, off)
    }
}

fn check_inputs(grid: &RadialGrid, u: &GridFunction) -> Result<()> {
    u.check_grid(grid)?;
    let last = *u.values().last().unwrap();
    if last != 0.0 {
        return Err(EnergyError::Boundary(last));
    }
    Ok(())
}

/// `I_k(λ, u)` for a nodal `u` with `u(R) = 0`.
pub fn energy_value<F: Forcing + ?Sized>(
    grid: &RadialGrid,
    nf: &NFunctionSpec,
    forcing: &F,
    lambda: f64,
    u: &GridFunction,
) -> Result<f64> {
    check_inputs(grid, u)?;
    EnergyProblem::new(grid, nf, forcing, lambda)?.value(u.values())
}

/// Exact gradient of [`energy_value`] with respect to the nodal values.
pub fn energy_gradient<F: Forcing + ?Sized>(
    grid: &RadialGrid,
    nf: &NFunctionSpec,
    forcing: &F,
    lambda: f64,
    u: &GridFunction,
) -> Result<GridFunction> {
    check_inputs(grid, u)?;
    let g = EnergyProblem::new(grid, nf, forcing, lambda)?.gradient(u.values());
    Ok(GridFunction::new(u.grid().clone(), g)?)
}

/// Whether clipping to `[0, ub]` does not increase the energy (up to roundoff).
pub fn clip_monotonicity_check<F: Forcing + ?Sized>(
    grid: &RadialGrid,
    nf: &NFunctionSpec,
    forcing: &F,
    lambda: f64,
    u: &GridFunction,
) -> Result<bool> {
    check_inputs(grid, u)?;
    let problem = EnergyProblem::new(grid, nf, forcing, lambda)?;
    let ub = forcing.upper_bound();
    let clipped: Vec<f64> = u.values().iter().map(|&v| v.clamp(0.0, ub)).collect();
    let before = problem.value(u.values())?;
    let after = problem.value(&clipped)?;
    Ok(after <= before + 1e-12 * before.abs().max(1.0))
}

/// The plateau profile `w_δ`: equal to `height` on `[0, R − δ]`, linear down to zero
/// at `R`.
pub fn plateau_guess(grid: &Arc<RadialGrid>, height: f64, delta: f64) -> GridFunction {
    let radius = grid.radius();
    let mut u = GridFunction::from_fn(grid.clone(), |r| {
        if r <= radius - delta {
            height
        } else {
            height * (radius - r) / delta
        }
    });
    *u.values_mut().last_mut().unwrap() = 0.0;
    u
}

fn box_violation(u: &[f64], ub: f64) -> f64 {
    u.iter().fold(0.0_f64, |m, &v| {
        m.max(-v).max(if ub.is_finite() { v - ub } else { 0.0 })
    })
}

fn projected_norm(u: &[f64], g: &[f64], w: &[f64], ub: f64) -> f64 {
    let n = u.len();
    (0..n - 1)
        .map(|i| {
            let blocked = (u[i] <= 0.0 && g[i] > 0.0) || (u[i] >= ub && g[i] < 0.0);
            if blocked {
                0.0
            } else {
                g[i].abs() / w[i]
            }
        })
        .fold(0.0, f64::max)
}

fn weak_residual(g: &[f64], w: &[f64]) -> f64 {
    let n = g.len();
    (0..n - 1).map(|i| g[i].abs() / w[i]).fold(0.0, f64::max)
}

/// Two-metric projected descent on `[0, ub]^n` with Armijo backtracking.
///
/// Variables at a bound whose gradient pushes outward (within a shrinking margin) are
/// moved along the scaled gradient; the rest follow the chosen metric. Steps whose
/// energy is not finite count as failed trials. If the line search fails under a
/// non-trivial metric it is retried once with the plain scaled gradient before the
/// run is reported as non-converged.
pub fn minimize<F: Forcing + ?Sized>(
    grid: &RadialGrid,
    nf: &NFunctionSpec,
    forcing: &F,
    lambda: f64,
    u0: &GridFunction,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    u0.check_grid(grid)?;
    let problem = EnergyProblem::new(grid, nf, forcing, lambda)?;
    let ub = forcing.upper_bound();
    let n = grid.len();
    let w = grid.weights();
    let mut x: Vec<f64> = u0.values().iter().map(|&v| v.clamp(0.0, ub)).collect();
    x[n - 1] = 0.0;

    let mut energy = problem.value(&x)?;
    let mut history = Vec::new();
    if opts.record_history {
        history.push(energy);
    }
    let mut rejected_nonfinite = 0;
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;
    let mut g = problem.gradient(&x);
    let mut scale = problem.gradient_scale(&x);
    let eps_bar = 1e-6
        * if ub.is_finite() {
            ub
        } else {
            1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        };

    while iterations < opts.max_iter {
        if projected_norm(&x, &g, w, ub) / scale <= opts.tol {
            stop = StopReason::Converged;
            break;
        }
        iterations += 1;
        let mut accepted = None;
        let metrics: &[Preconditioner] = if opts.preconditioner == Preconditioner::None {
            &[Preconditioner::None]
        } else {
            &[opts.preconditioner, Preconditioner::None]
        };
        for &metric in metrics {
            let (d, active) = direction(&problem, &x, &g, ub, eps_bar, metric);
            if let Some(step) = line_search(
                &problem,
                &x,
                &g,
                &d,
                &active,
                ub,
                opts,
                &mut rejected_nonfinite,
            )? {
                accepted = Some(step);
                break;
            }
        }
        match accepted {
            Some((next, delta)) => {
                x = next;
                energy += delta;
                if opts.record_history {
                    history.push(energy);
                }
                g = problem.gradient(&x);
                scale = problem.gradient_scale(&x);
            }
            None => {
                stop = StopReason::LineSearch;
                break;
            }
        }
    }
    let grad_norm = projected_norm(&x, &g, w, ub) / scale;
    if stop == StopReason::MaxIterations && grad_norm <= opts.tol {
        stop = StopReason::Converged;
    }
    let weak = weak_residual(&g, w) / scale;
    let energy = problem.value(&x)?;
    let box_violation = box_violation(&x, ub);
    Ok(MinimizeResult {
        u: GridFunction::new(u0.grid().clone(), x)?,
        energy,
        iterations,
        grad_norm,
        box_violation,
        weak_residual: weak,
        converged: stop == StopReason::Converged,
        stop,
        rejected_nonfinite,
        history,
    })
}

/// Search direction and the ε-active set for the current iterate.
fn direction<F: Forcing + ?Sized>(
    problem: &EnergyProblem<'_, F>,
    x: &[f64],
    g: &[f64],
    ub: f64,
    eps_bar: f64,
    metric: Preconditioner,
) -> (Vec<f64>, Vec<bool>) {
    let n = x.len();
    let w = problem.grid.weights();
    let (diag, off) = match metric {
        Preconditioner::None => (w.to_vec(), vec![0.0; n - 1]),
        Preconditioner::Diagonal => {
            let (d, _) = problem.metric(x);
            (d, vec![0.0; n - 1])
        }
        Preconditioner::Tridiagonal => problem.metric(x),
    };
    // margin: distance moved by a diagonally scaled projected step
    let wk = (0..n - 1)
        .map(|i| (x[i] - (x[i] - g[i] / diag[i]).clamp(0.0, ub)).abs())
        .fold(0.0, f64::max);
    let eps = eps_bar.min(wk);
    let mut active = vec![false; n];
    active[n - 1] = true;
    for i in 0..n - 1 {
        active[i] = (x[i] <= eps && g[i] > 0.0) || (x[i] >= ub - eps && g[i] < 0.0);
    }
    let mut d = vec![0.0; n];
    let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
    if !free.is_empty() {
        let fd: Vec<f64> = free.iter().map(|&i| diag[i]).collect();
        let fo: Vec<f64> = free
            .windows(2)
            .map(|p| if p[1] == p[0] + 1 { off[p[0]] } else { 0.0 })
            .collect();
        let mut rhs: Vec<f64> = free.iter().map(|&i| -g[i]).collect();
        solve_tridiagonal(&fd, &fo, &mut rhs);
        for (&i, v) in free.iter().zip(rhs) {
            d[i] = v;
        }
    }
    for i in 0..n - 1 {
        if active[i] {
            d[i] = -g[i] / diag[i];
        }
    }
    (d, active)
}

#[allow(clippy::too_many_arguments)]
fn line_search<F: Forcing + ?Sized>(
    problem: &EnergyProblem<'_, F>,
    x: &[f64],
    g: &[f64],
    d: &[f64],
    active: &[bool],
    ub: f64,
    opts: &MinimizeOptions,
    rejected_nonfinite: &mut usize,
) -> Result<Option<(Vec<f64>, f64)>> {
    let n = x.len();
    let free_slope: f64 = (0..n - 1)
        .filter(|&i| !active[i])
        .map(|i| -g[i] * d[i])
        .sum();
    let mut t = opts.initial_step;
    for _ in 0..=opts.max_backtracks {
        let mut trial: Vec<f64> = x
            .iter()
            .zip(d)
            .map(|(&xi, &di)| (xi + t * di).clamp(0.0, ub))
            .collect();
        trial[n - 1] = 0.0;
        let active_part: f64 = (0..n - 1)
            .filter(|&i| active[i])
            .map(|i| g[i] * (x[i] - trial[i]))
            .sum();
        let predicted = t * free_slope + active_part;
        if !(predicted > 0.0) {
            return Ok(None);
        }
        let delta = problem.change(x, &trial)?;
        if !delta.is_finite() {
            *rejected_nonfinite += 1;
        } else if delta <= -opts.sufficient_decrease * predicted {
            return Ok(Some((trial, delta)));
        }
        t *= opts.shrink;
    }
    Ok(None)
}

/// Results of [`minimize_multistart`], one entry per start.
#[derive(Debug, Clone)]
pub struct MultistartResult {
    pub labels: Vec<String>,
    pub runs: Vec<MinimizeResult>,
    pub best: usize,
}

impl MultistartResult {
    pub fn best(&self) -> &MinimizeResult {
        &self.runs[self.best]
    }
}

/// Minimizes from the plateau profiles `w_δ` (`δ = R/4, R/8, R/16`, height `ub`) and
/// from `u ≡ 0`, keeping the lowest energy. A start that runs out of iterations is
/// resumed once with twice the budget.
pub fn minimize_multistart<F: Forcing + ?Sized>(
    grid: &Arc<RadialGrid>,
    nf: &NFunctionSpec,
    forcing: &F,
    lambda: f64,
    opts: &MinimizeOptions,
) -> Result<MultistartResult> {
    let radius = grid.radius();
    let ub = forcing.upper_bound();
    let height = if ub.is_finite() { ub } else { 1.0 };
    let mut starts: Vec<(String, GridFunction)> = [4.0, 8.0, 16.0]
        .iter()
        .map(|&q| {
            (
                format!("plateau R/{q}"),
                plateau_guess(grid, height, radius / q),
            )
        })
        .collect();
    starts.push(("zero".to_string(), GridFunction::zeros(grid.clone())));

    let runs = starts
        .par_iter()
        .map(|(_, u0)| {
            let first = minimize(grid, nf, forcing, lambda, u0, opts)?;
            if first.converged || first.stop == StopReason::LineSearch {
                return Ok(first);
            }
            let retry = MinimizeOptions {
                max_iter: 2 * opts.max_iter,
                ..*opts
            };
            minimize(grid, nf, forcing, lambda, &first.u, &retry)
        })
        .collect::<Result<Vec<_>>>()?;

    // a converged critical point (u ≡ 0 when f(0) = 0) must not mask a lower run
    // that stalled, so the unconverged winner is reported as such
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy))
        .map_or(0, |(i, _)| i);
    Ok(MultistartResult {
        labels: starts.into_iter().map(|(l, _)| l).collect(),
        runs,
        best,
    })
}
