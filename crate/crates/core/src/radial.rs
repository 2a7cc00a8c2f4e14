//! Shooting oracle for radial solutions.
//!
//! A radial solution with `u(0) = d`, `u'(0) = 0` satisfies the flux identity
//! `−r^{N−1} G(u'(r)) = H(r)`, `H(r) = λ ∫₀ʳ f(u(t)) t^{N−1} dt`, so the pair `(u, H)`
//! solves the first-order system `u' = −G⁻¹(H / r^{N−1})`, `H' = λ f(u) r^{N−1}`.
//! It is integrated with classical RK4; steps are split where `u` crosses a kink of
//! `f` so the order survives piecewise nonlinearities. For `N ≥ 2` the integration
//! starts just off the center from the leading-order expansion `H ≈ λ f(d) r^N / N`.
//!
//! Roots of `d ↦ u(R)` are Dirichlet solutions. They are bracketed on a `d`-scan and
//! refined by bisection.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, GridFunction, RadialGrid};
use crate::nfunction::{NFunctionError, NFunctionSpec};
use crate::nonlinearity::{BumpNonlinearity, Forcing};
use crate::numerics::{adaptive_simpson, adaptive_simpson_abs};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error(transparent)]
    NFunction(#[from] NFunctionError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("center value must be positive and finite, got {0}")]
    Center(f64),
    #[error("need at least 16 steps, got {0}")]
    Steps(usize),
    #[error("lambda must be non-negative and finite, got {0}")]
    Lambda(f64),
    #[error("state became non-finite at r = {r}")]
    NonFinite { r: f64 },
    #[error("residual quadrature failed on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },
    #[error("d-grid must be non-empty, positive and increasing")]
    DGrid,
}

pub type Result<T> = std::result::Result<T, RadialError>;

/// For `N ≥ 2` the expansion supplies the state at `ORIGIN_START·r_1`; from there
/// steps grow geometrically by `1 + 1/ORIGIN_RATIO` until they reach the grid spacing.
/// RK4 stage errors near the origin are amplified by `r^{1−N}`, so steps there must
/// stay small relative to `r`.
const ORIGIN_START: f64 = 1e-3;
const ORIGIN_RATIO: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootOptions {
    pub n_steps: usize,
    /// Points of the uniform `d`-scan over `(0, d_max]`.
    pub scan_points: usize,
    /// Bisection stops once `|u(R)|` is at most this.
    pub boundary_tol: f64,
    /// Three or more consecutive scan points with `|u(R)| ≤ degenerate_tol·max(1, d)`
    /// are reported as a continuum of solutions instead of roots.
    pub degenerate_tol: f64,
    pub max_bisections: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            n_steps: 2000,
            scan_points: 400,
            boundary_tol: 1e-10,
            degenerate_tol: 1e-8,
            max_bisections: 200,
        }
    }
}

impl ShootOptions {
    /// `scan_points` uniform center values in `(0, d_max]`.
    pub fn d_grid(&self, d_max: f64) -> Vec<f64> {
        let n = self.scan_points.max(2);
        (1..=n).map(|i| d_max * i as f64 / n as f64).collect()
    }
}

/// One integrated profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootResult {
    pub d: f64,
    pub lambda: f64,
    pub profile: GridFunction,
    /// `u'` at the nodes, recovered from the flux.
    pub slope: Vec<f64>,
    /// `H(r)` at the nodes.
    pub flux: Vec<f64>,
    pub boundary_value: f64,
    pub sup_norm: f64,
    /// `u' ≤ 0` at every node.
    pub monotone_flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claims {
    /// `‖u‖∞ > b_k`.
    pub sup_gt_b: bool,
    /// `∫_{a_k}^{‖u‖∞} f`, exact.
    pub integral_positive: f64,
}

/// A refined root of `d ↦ u(R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Root {
    pub shoot: ShootResult,
    /// Final sign-change bracket in `d`. Near-plateau roots can be so ill-conditioned
    /// that `|u(R)|` stays large even when this is a pair of adjacent floats.
    pub bracket: (f64, f64),
}

impl Root {
    /// Whether the bracket cannot be split further in double precision.
    pub fn at_float_resolution(&self) -> bool {
        let (lo, hi) = self.bracket;
        hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs())
    }
}

/// A root whose sup-norm lies in the window `a_k < ‖u‖∞ ≤ a_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSolution {
    pub k: usize,
    pub lambda: f64,
    pub shoot: ShootResult,
    pub bracket: (f64, f64),
    pub claims: Claims,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootScan {
    /// `(d, u(R))` on the scan grid.
    pub samples: Vec<(f64, f64)>,
    /// Refined roots in increasing `d`.
    pub roots: Vec<Root>,
    /// `[d_lo, d_hi]` ranges where `u(R)` vanishes identically.
    pub degenerate: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchScan {
    pub lambda: f64,
    pub samples: Vec<(f64, f64)>,
    pub degenerate: Vec<(f64, f64)>,
    pub branches: Vec<BranchSolution>,
    /// Roots whose sup-norm is in no window, e.g. `‖u‖∞ ≤ a_1`.
    pub unclassified: Vec<ShootResult>,
}

impl BranchScan {
    /// Branches in window `k`.
    pub fn in_window(&self, k: usize) -> impl Iterator<Item = &BranchSolution> {
        self.branches.iter().filter(move |b| b.k == k)
    }
}

#[derive(Clone, Copy)]
struct State {
    u: f64,
    h: f64,
}

struct System<'a, F: Forcing + ?Sized> {
    nf: &'a NFunctionSpec,
    /// Last `|u'|`, used to warm-start `G⁻¹`.
    hint: std::cell::Cell<f64>,
    f: &'a F,
    lambda: f64,
    power: i32,
    kinks: Vec<f64>,
}

impl<'a, F: Forcing + ?Sized> System<'a, F> {
    fn rho(&self, r: f64) -> f64 {
        if self.power == 0 {
            1.0
        } else {
            r.powi(self.power)
        }
    }

    fn slope(&self, r: f64, h: f64) -> Result<f64> {
        if self.power > 0 && r == 0.0 {
            return Ok(0.0);
        }
        let w = h / self.rho(r);
        if !w.is_finite() {
            return Err(RadialError::NonFinite { r });
        }
        let z = self.nf.g_inverse_abs_near(w.abs(), self.hint.get())?;
        self.hint.set(z);
        Ok(-w.signum() * z)
    }

    fn deriv(&self, r: f64, y: State) -> Result<State> {
        Ok(State {
            u: self.slope(r, y.h)?,
            h: self.lambda * self.f.value(y.u) * self.rho(r),
        })
    }

    fn rk4(&self, r: f64, y: State, dr: f64) -> Result<State> {
        let at = |s: State, k: State, c: f64| State {
            u: s.u + c * k.u,
            h: s.h + c * k.h,
        };
        let k1 = self.deriv(r, y)?;
        let k2 = self.deriv(r + 0.5 * dr, at(y, k1, 0.5 * dr))?;
        let k3 = self.deriv(r + 0.5 * dr, at(y, k2, 0.5 * dr))?;
        let k4 = self.deriv(r + dr, at(y, k3, dr))?;
        let out = State {
            u: y.u + dr / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
            h: y.h + dr / 6.0 * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h),
        };
        if out.u.is_finite() && out.h.is_finite() {
            Ok(out)
        } else {
            Err(RadialError::NonFinite { r: r + dr })
        }
    }

    /// First kink strictly between `u0` and `u1`, in the direction of travel.
    fn crossing(&self, u0: f64, u1: f64) -> Option<f64> {
        let near = |c: f64| (u0 - c).abs() <= 1e-12 * (1.0 + c.abs());
        let inside = self
            .kinks
            .iter()
            .copied()
            .filter(|&c| (u0 - c) * (u1 - c) < 0.0 && !near(c));
        if u1 > u0 {
            inside.fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.min(c))))
        } else {
            inside.fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))))
        }
    }

    /// Integrates from `r0` to `r1`, landing on every kink crossing.
    fn advance(&self, r0: f64, y0: State, r1: f64) -> Result<State> {
        let mut r = r0;
        let mut y = y0;
        for _ in 0..=self.kinks.len() {
            let trial = self.rk4(r, y, r1 - r)?;
            let Some(c) = self.crossing(y.u, trial.u) else {
                return Ok(trial);
            };
            let rc = self.locate(r, y, r1, trial.u, c)?;
            if rc <= r || rc >= r1 {
                return Ok(trial);
            }
            y = self.rk4(r, y, rc - r)?;
            r = rc;
        }
        self.rk4(r, y, r1 - r)
    }

    /// `r* ∈ (r, r1)` with `u(r*) ≈ c` by Illinois regula falsi on the step length.
    fn locate(&self, r: f64, y: State, r1: f64, u1: f64, c: f64) -> Result<f64> {
        let dr = r1 - r;
        let (mut t0, mut g0) = (0.0, y.u - c);
        let (mut t1, mut g1) = (1.0, u1 - c);
        let tol = 1e-14 * (1.0 + c.abs());
        let mut t = 0.5;
        for _ in 0..60 {
            t = (t0 * g1 - t1 * g0) / (g1 - g0);
            let (lo, hi) = (t0.min(t1), t0.max(t1));
            if !(t > lo && t < hi) {
                t = 0.5 * (lo + hi);
            }
            let g = self.rk4(r, y, t * dr)?.u - c;
            if g.abs() <= tol || hi - lo <= 1e-13 {
                break;
            }
            if g * g1 < 0.0 {
                (t0, g0) = (t1, g1);
            } else {
                g0 *= 0.5;
            }
            (t1, g1) = (t, g);
        }
        Ok(r + t.clamp(0.0, 1.0) * dr)
    }

    /// State at `r` from the leading-order expansion about the center.
    fn series(&self, d: f64, r: f64) -> Result<State> {
        let n = f64::from(self.power + 1);
        let c = self.lambda * self.f.value(d) / n;
        let h = c * r * self.rho(r);
        if c == 0.0 || r == 0.0 {
            return Ok(State { u: d, h });
        }
        let drop = adaptive_simpson(
            |s| self.nf.g_inverse(c * s).unwrap_or(f64::NAN),
            0.0,
            r,
            1e-13,
        )
        .map_err(|_| RadialError::NonFinite { r })?;
        Ok(State { u: d - drop, h })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(RadialError::Lambda(lambda))
    }
}

/// Integrates the center-value problem on a uniform grid with `n_steps` cells.
pub fn shoot<F: Forcing + ?Sized>(
    nf: &NFunctionSpec,
    f: &F,
    lambda: f64,
    dimension: usize,
    radius: f64,
    d: f64,
    n_steps: usize,
) -> Result<ShootResult> {
    if n_steps < 16 {
        return Err(RadialError::Steps(n_steps));
    }
    let grid = Arc::new(RadialGrid::uniform(radius, dimension, n_steps + 1)?);
    shoot_on(&grid, nf, f, lambda, d)
}

/// As [`shoot`], reporting the profile on the nodes of `grid`.
pub fn shoot_on<F: Forcing + ?Sized>(
    grid: &Arc<RadialGrid>,
    nf: &NFunctionSpec,
    f: &F,
    lambda: f64,
    d: f64,
) -> Result<ShootResult> {
    check_lambda(lambda)?;
    if !(d.is_finite() && d > 0.0) {
        return Err(RadialError::Center(d));
    }
    if grid.len() < 17 {
        return Err(RadialError::Steps(grid.len() - 1));
    }
    let system = System {
        nf,
        hint: std::cell::Cell::new(f64::NAN),
        f,
        lambda,
        power: grid.dimension() as i32 - 1,
        kinks: f.breakpoints(),
    };
    let r = grid.nodes();
    let mut u = Vec::with_capacity(r.len());
    let mut flux = Vec::with_capacity(r.len());
    let mut y = State { u: d, h: 0.0 };
    u.push(d);
    flux.push(0.0);
    let mut at = 0.0;
    for i in 1..r.len() {
        if system.power > 0 && at == 0.0 {
            at = ORIGIN_START * r[1];
            y = system.series(d, at)?;
        }
        while at < r[i] {
            let mut next = if system.power > 0 {
                at + at / ORIGIN_RATIO
            } else {
                r[i]
            };
            if next >= r[i] - 1e-9 * (r[i] - r[i - 1]) {
                next = r[i];
            }
            y = system.advance(at, y, next)?;
            at = next;
        }
        u.push(y.u);
        flux.push(y.h);
    }
    let slope = r
        .iter()
        .zip(&flux)
        .map(|(&ri, &hi)| system.slope(ri, hi))
        .collect::<Result<Vec<_>>>()?;
    let boundary_value = *u.last().unwrap();
    let sup_norm = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let monotone_flag = slope.iter().all(|&s| s <= 0.0);
    Ok(ShootResult {
        d,
        lambda,
        profile: GridFunction::new(grid.clone(), u)?,
        slope,
        flux,
        boundary_value,
        sup_norm,
        monotone_flag,
    })
}

/// Scans `d ↦ u(R)` over `d_grid`, bisects every sign change and flags degenerate
/// stretches where `u(R)` vanishes identically.
#[allow(clippy::too_many_arguments)]
pub fn scan_boundary<F: Forcing + ?Sized>(
    nf: &NFunctionSpec,
    f: &F,
    lambda: f64,
    dimension: usize,
    radius: f64,
    d_grid: &[f64],
    opts: &ShootOptions,
) -> Result<RootScan> {
    check_lambda(lambda)?;
    if d_grid.is_empty() || d_grid[0] <= 0.0 || d_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RadialError::DGrid);
    }
    if opts.n_steps < 16 {
        return Err(RadialError::Steps(opts.n_steps));
    }
    let grid = Arc::new(RadialGrid::uniform(radius, dimension, opts.n_steps + 1)?);
    let shots = d_grid
        .par_iter()
        .map(|&d| shoot_on(&grid, nf, f, lambda, d))
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64)> = shots.iter().map(|s| (s.d, s.boundary_value)).collect();

    let flat: Vec<bool> = samples
        .iter()
        .map(|&(d, b)| b.abs() <= opts.degenerate_tol * d.max(1.0))
        .collect();
    let mut degenerate = Vec::new();
    let mut in_run = vec![false; samples.len()];
    let mut i = 0;
    while i < samples.len() {
        let start = i;
        while i < samples.len() && flat[i] {
            i += 1;
        }
        if i - start >= 3 {
            degenerate.push((samples[start].0, samples[i - 1].0));
            in_run[start..i].iter_mut().for_each(|x| *x = true);
        }
        i = i.max(start + 1);
    }

    let mut brackets = Vec::new();
    for j in 0..samples.len() {
        if in_run[j] {
            continue;
        }
        if samples[j].1 == 0.0 {
            brackets.push((j, j));
        } else if j + 1 < samples.len() && !in_run[j + 1] && samples[j].1 * samples[j + 1].1 < 0.0 {
            brackets.push((j, j + 1));
        }
    }
    let roots = brackets
        .par_iter()
        .map(|&(j0, j1)| {
            if j0 == j1 {
                Ok(Root {
                    shoot: shots[j0].clone(),
                    bracket: (shots[j0].d, shots[j0].d),
                })
            } else {
                bisect(&grid, nf, f, lambda, &shots[j0], &shots[j1], opts)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RootScan {
        samples,
        roots,
        degenerate,
    })
}

/// Bisection on a sign change of `u(R)`. Continues below any fixed `d` resolution
/// until `|u(R)| ≤ boundary_tol` or the bracket is a pair of adjacent floats, and
/// returns the best endpoint seen.
fn bisect<F: Forcing + ?Sized>(
    grid: &Arc<RadialGrid>,
    nf: &NFunctionSpec,
    f: &F,
    lambda: f64,
    lo: &ShootResult,
    hi: &ShootResult,
    opts: &ShootOptions,
) -> Result<Root> {
    let mut lo = lo.clone();
    let mut hi = hi.clone();
    for _ in 0..opts.max_bisections {
        let best = if lo.boundary_value.abs() <= hi.boundary_value.abs() {
            &lo
        } else {
            &hi
        };
        if best.boundary_value.abs() <= opts.boundary_tol {
            break;
        }
        let mid = 0.5 * (lo.d + hi.d);
        if mid <= lo.d || mid >= hi.d {
            break;
        }
        let s = shoot_on(grid, nf, f, lambda, mid)?;
        if s.boundary_value == 0.0 {
            return Ok(Root {
                shoot: s,
                bracket: (mid, mid),
            });
        }
        if (s.boundary_value < 0.0) == (lo.boundary_value < 0.0) {
            lo = s;
        } else {
            hi = s;
        }
    }
    let bracket = (lo.d, hi.d);
    let shoot = if lo.boundary_value.abs() <= hi.boundary_value.abs() {
        lo
    } else {
        hi
    };
    Ok(Root { shoot, bracket })
}

/// Sets the claims for the window `k` of `bs`: `‖u‖∞ > b_k` and the exact
/// `∫_{a_k}^{‖u‖∞} f`.
pub fn verify_claims(mut bs: BranchSolution, bn: &BumpNonlinearity) -> BranchSolution {
    let sup = bs.shoot.sup_norm.min(bn.a_max());
    bs.claims = Claims {
        sup_gt_b: bs.shoot.sup_norm > bn.b(bs.k),
        integral_positive: bn.integral(bn.a(bs.k), sup),
    };
    bs
}

/// Roots of `u(R)` for the untruncated `f`, classified by the window of their
/// sup-norm, with both claims evaluated.
#[allow(clippy::too_many_arguments)]
pub fn find_branches(
    nf: &NFunctionSpec,
    bn: &BumpNonlinearity,
    lambda: f64,
    dimension: usize,
    radius: f64,
    d_grid: &[f64],
    opts: &ShootOptions,
) -> Result<BranchScan> {
    let scan = scan_boundary(nf, bn, lambda, dimension, radius, d_grid, opts)?;
    let mut branches = Vec::new();
    let mut unclassified = Vec::new();
    for Root { shoot, bracket } in scan.roots {
        match bn.window_of(shoot.sup_norm) {
            Some(k) => {
                let bs = BranchSolution {
                    k,
                    lambda,
                    shoot,
                    bracket,
                    claims: Claims {
                        sup_gt_b: false,
                        integral_positive: 0.0,
                    },
                };
                branches.push(verify_claims(bs, bn));
            }
            None => unclassified.push(shoot),
        }
    }
    Ok(BranchScan {
        lambda,
        samples: scan.samples,
        degenerate: scan.degenerate,
        branches,
        unclassified,
    })
}

/// `max_i |r_i^{N−1} G(u'(r_i)) + λ ∫₀^{r_i} f(u) t^{N−1} dt|`.
///
/// The integral is recomputed from the nodal data alone: `u` is interpolated by the
/// cubic Hermite polynomial through `(u, u')` on each cell and integrated by adaptive
/// Simpson, so kinks of `f(u(t))` are resolved.
pub fn integral_identity_residual<F: Forcing + ?Sized>(
    nf: &NFunctionSpec,
    f: &F,
    shoot: &ShootResult,
) -> Result<f64> {
    let grid = shoot.profile.grid();
    let r = grid.nodes();
    let u = shoot.profile.values();
    let s = &shoot.slope;
    let power = grid.dimension() as i32 - 1;
    let lambda = shoot.lambda;
    // quadrature error stays far below the 1e-6·(1 + λ) scale of interest
    let cell_tol = 1e-13 * (1.0 + lambda) / grid.radius();
    let mut integral = 0.0;
    let mut worst = (nf.g_eval(s[0])? * r[0].powi(power)).abs();
    for i in 0..r.len() - 1 {
        let (r0, r1) = (r[i], r[i + 1]);
        let h = r1 - r0;
        let hermite = |t: f64| {
            let x = (t - r0) / h;
            let x2 = x * x;
            let x3 = x2 * x;
            (2.0 * x3 - 3.0 * x2 + 1.0) * u[i]
                + (x3 - 2.0 * x2 + x) * h * s[i]
                + (-2.0 * x3 + 3.0 * x2) * u[i + 1]
                + (x3 - x2) * h * s[i + 1]
        };
        let cell = adaptive_simpson_abs(
            |t| lambda * f.value(hermite(t)) * t.powi(power),
            r0,
            r1,
            cell_tol * h,
        )
        .map_err(|_| RadialError::Quadrature { lo: r0, hi: r1 })?;
        integral += cell;
        let lhs = r1.powi(power) * nf.g_eval(s[i + 1])?;
        worst = worst.max((lhs + integral).abs());
    }
    Ok(worst)
}
