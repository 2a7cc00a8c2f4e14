//! λ evaluation and the λ̄ search.
//!
//! Window `k` (1-based, `1 ≤ k ≤ m−1`) is `(a_k, a_{k+1}]`. The energy path fills it
//! with the minimizer of the truncated energy at level `k + 1`; the radial path with
//! every shooting root whose sup-norm falls inside it.

use std::sync::Arc;

use log::{debug, info};
use philap_core::{
    find_branches, integral_identity_residual, minimize_multistart, BumpNonlinearity, Claims,
    NFunctionSpec, RadialGrid, StopReason,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, ConfigError, SweepConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBranch {
    /// Target window.
    pub k: usize,
    /// Truncation level, `k + 1`.
    pub level: usize,
    pub start: String,
    pub sup_norm: f64,
    pub energy: f64,
    pub converged: bool,
    pub stop: String,
    pub iterations: usize,
    pub grad_norm: f64,
    pub weak_residual: f64,
    pub box_violation: f64,
    pub rejected_nonfinite: usize,
    /// `a_k < ‖u‖∞ ≤ a_{k+1}`.
    pub in_window: bool,
    pub claims: Claims,
    /// Index into [`LambdaPoint::radial`] of the nearest-sup root in the same window.
    pub matched: Option<usize>,
    pub sup_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialBranch {
    pub k: usize,
    pub d: f64,
    pub sup_norm: f64,
    pub boundary_value: f64,
    pub bracket: (f64, f64),
    /// The bracket is a pair of neighbouring floats, so `|u(R)|` cannot shrink further.
    pub at_float_resolution: bool,
    pub monotone: bool,
    pub claims: Claims,
    /// Integral-identity residual; absent if the check itself failed.
    pub identity_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub energy: Vec<EnergyBranch>,
    pub radial: Vec<RadialBranch>,
    /// Sup-norms of shooting roots outside every window.
    pub unclassified: Vec<f64>,
    /// `d`-intervals on which `u(R)` vanished identically.
    pub degenerate: Vec<(f64, f64)>,
    /// Every energy branch converged inside its window.
    pub energy_ordering: bool,
    /// Every window holds at least one shooting root.
    pub radial_ordering: bool,
    pub ordering_ok: bool,
    /// Largest energy/radial sup-norm gap over matched windows.
    pub max_sup_gap: Option<f64>,
    pub inconclusive: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBar {
    /// Largest tested λ below `hi` (0 if none), where the chain was absent.
    pub lo: f64,
    /// Smallest tested λ with the full ordered chain.
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: Config,
    /// Sorted by λ.
    pub points: Vec<LambdaPoint>,
    pub lambda_bar: Option<LambdaBar>,
    /// The λ re-evaluated past the threshold (`2·λ̄_hi` in auto mode).
    pub confirmation: Option<f64>,
    pub findings: Vec<String>,
}

impl SweepReport {
    pub fn point(&self, lambda: f64) -> Option<&LambdaPoint> {
        self.points.iter().find(|p| p.lambda == lambda)
    }

    pub fn any_inconclusive(&self) -> bool {
        self.points.iter().any(|p| p.inconclusive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileSource {
    Energy,
    /// Position in [`LambdaPoint::radial`].
    Radial(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub lambda: f64,
    pub k: usize,
    pub source: ProfileSource,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: SweepReport,
    /// Profiles of the reported points: every point of a grid sweep, the
    /// confirmation point of an automatic one, the single point of a solve.
    pub profiles: Vec<Profile>,
}

/// Validated inputs shared by every λ.
pub struct Problem {
    pub config: Config,
    pub nf: NFunctionSpec,
    pub bn: BumpNonlinearity,
    pub grid: Arc<RadialGrid>,
}

impl Problem {
    pub fn new(config: Config) -> Result<Self, ConfigError> {
        config.check_schema()?;
        let nf = config.nfunction()?;
        let bn = config.bumps()?;
        let d = &config.domain;
        let grid = RadialGrid::uniform(d.radius, d.dimension, d.nodes)
            .map_err(|e| ConfigError::Schema(e.to_string()))?;
        Ok(Self {
            config,
            nf,
            bn,
            grid: Arc::new(grid),
        })
    }

    fn claims(&self, k: usize, sup: f64) -> Claims {
        Claims {
            sup_gt_b: sup > self.bn.b(k),
            integral_positive: self.bn.integral(self.bn.a(k), sup.min(self.bn.a_max())),
        }
    }

    /// Both paths at one λ.
    pub fn evaluate(&self, lambda: f64) -> (LambdaPoint, Vec<Profile>) {
        let windows = self.bn.m() - 1;
        let mut notes = Vec::new();
        let mut profiles = Vec::new();
        let opts = self.config.minimize_options();

        let runs: Vec<_> = (1..=windows)
            .into_par_iter()
            .map(|k| {
                let tf = self.bn.truncate(k + 1).expect("level within 2..=m");
                minimize_multistart(&self.grid, &self.nf, &tf, lambda, &opts)
            })
            .collect();
        let mut energy = Vec::new();
        let mut inconclusive = false;
        for (k, run) in (1..=windows).zip(runs) {
            let ms = match run {
                Ok(ms) => ms,
                Err(e) => {
                    notes.push(format!("energy level {}: {e}", k + 1));
                    inconclusive = true;
                    continue;
                }
            };
            let best = ms.best();
            if !best.converged {
                inconclusive = true;
                notes.push(format!(
                    "energy level {} did not converge ({:?}, projected gradient {:.3e})",
                    k + 1,
                    best.stop,
                    best.grad_norm
                ));
            }
            let sup = best.sup_norm();
            profiles.push(Profile {
                lambda,
                k,
                source: ProfileSource::Energy,
                r: self.grid.nodes().to_vec(),
                u: best.u.values().to_vec(),
            });
            energy.push(EnergyBranch {
                k,
                level: k + 1,
                start: ms.labels[ms.best].clone(),
                sup_norm: sup,
                energy: best.energy,
                converged: best.converged,
                stop: stop_name(best.stop).to_string(),
                iterations: best.iterations,
                grad_norm: best.grad_norm,
                weak_residual: best.weak_residual,
                box_violation: best.box_violation,
                rejected_nonfinite: ms.runs.iter().map(|r| r.rejected_nonfinite).sum(),
                in_window: self.bn.window_of(sup) == Some(k),
                claims: self.claims(k, sup),
                matched: None,
                sup_gap: None,
            });
        }

        let d = &self.config.domain;
        let sopts = self.config.shoot_options();
        let d_grid = sopts.d_grid(self.bn.a_max());
        let mut radial = Vec::new();
        let mut unclassified = Vec::new();
        let mut degenerate = Vec::new();
        match find_branches(
            &self.nf,
            &self.bn,
            lambda,
            d.dimension,
            d.radius,
            &d_grid,
            &sopts,
        ) {
            Ok(scan) => {
                degenerate = scan.degenerate;
                unclassified = scan.unclassified.iter().map(|s| s.sup_norm).collect();
                let residuals: Vec<_> = scan
                    .branches
                    .par_iter()
                    .map(|b| integral_identity_residual(&self.nf, &self.bn, &b.shoot).ok())
                    .collect();
                for (i, (b, res)) in scan.branches.into_iter().zip(residuals).enumerate() {
                    let (lo, hi) = b.bracket;
                    let at_float = hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs());
                    profiles.push(Profile {
                        lambda,
                        k: b.k,
                        source: ProfileSource::Radial(i),
                        r: b.shoot.profile.grid().nodes().to_vec(),
                        u: b.shoot.profile.values().to_vec(),
                    });
                    radial.push(RadialBranch {
                        k: b.k,
                        d: b.shoot.d,
                        sup_norm: b.shoot.sup_norm,
                        boundary_value: b.shoot.boundary_value,
                        bracket: b.bracket,
                        at_float_resolution: at_float,
                        monotone: b.shoot.monotone_flag,
                        claims: b.claims,
                        identity_residual: res,
                    });
                }
            }
            Err(e) => {
                notes.push(format!("shooting: {e}"));
                inconclusive = true;
            }
        }

        for r in &radial {
            if !(r.claims.sup_gt_b && r.claims.integral_positive > 0.0) {
                notes.push(format!(
                    "shooting root d = {} in window {} fails a claim ({:?}, |u(R)| = {:e})",
                    r.d,
                    r.k,
                    r.claims,
                    r.boundary_value.abs()
                ));
            }
        }

        let mut max_gap: Option<f64> = None;
        for e in &mut energy {
            let nearest = radial
                .iter()
                .enumerate()
                .filter(|(_, r)| r.k == e.k)
                .min_by(|a, b| {
                    let da = (a.1.sup_norm - e.sup_norm).abs();
                    let db = (b.1.sup_norm - e.sup_norm).abs();
                    da.total_cmp(&db)
                });
            if let Some((i, r)) = nearest {
                let gap = (r.sup_norm - e.sup_norm).abs();
                e.matched = Some(i);
                e.sup_gap = Some(gap);
                max_gap = Some(max_gap.map_or(gap, |g| g.max(gap)));
            }
        }

        let energy_ordering =
            energy.len() == windows && energy.iter().all(|e| e.converged && e.in_window);
        let radial_ordering = (1..=windows).all(|k| radial.iter().any(|r| r.k == k));
        let ordering_ok = energy_ordering && radial_ordering && !inconclusive;
        debug!(
            "lambda {lambda}: energy ordering {energy_ordering}, radial ordering {radial_ordering}"
        );
        let point = LambdaPoint {
            lambda,
            energy,
            radial,
            unclassified,
            degenerate,
            energy_ordering,
            radial_ordering,
            ordering_ok,
            max_sup_gap: max_gap,
            inconclusive,
            notes,
        };
        (point, profiles)
    }
}

fn stop_name(stop: StopReason) -> &'static str {
    match stop {
        StopReason::Converged => "converged",
        StopReason::MaxIterations => "max_iterations",
        StopReason::LineSearch => "line_search",
    }
}

fn tool_version() -> String {
    format!("philap {}", env!("CARGO_PKG_VERSION"))
}

/// Smallest tested λ with the full chain, and the largest tested λ below it.
pub fn lambda_bar(points: &[LambdaPoint]) -> Option<LambdaBar> {
    let hi = points.iter().find(|p| p.ordering_ok)?.lambda;
    let lo = points
        .iter()
        .map(|p| p.lambda)
        .filter(|&l| l < hi)
        .fold(0.0, f64::max);
    Some(LambdaBar { lo, hi })
}

/// Tested λ above the first success where the chain is missing again.
pub fn monotonicity_findings(points: &[LambdaPoint]) -> Vec<String> {
    let Some(first) = points.iter().position(|p| p.ordering_ok) else {
        return Vec::new();
    };
    let star = points[first].lambda;
    points[first + 1..]
        .iter()
        .filter(|p| !p.ordering_ok)
        .map(|p| {
            format!(
                "ordering holds at lambda = {star} but fails at lambda = {}{}",
                p.lambda,
                if p.inconclusive {
                    " (inconclusive)"
                } else {
                    ""
                }
            )
        })
        .collect()
}

fn assemble(
    problem: &Problem,
    evaluated: Vec<(LambdaPoint, Vec<Profile>)>,
    keep_profiles: impl Fn(f64) -> bool,
    confirmation: Option<f64>,
    mut findings: Vec<String>,
) -> SweepOutcome {
    let mut evaluated = evaluated;
    evaluated.sort_by(|a, b| a.0.lambda.total_cmp(&b.0.lambda));
    evaluated.dedup_by(|a, b| a.0.lambda == b.0.lambda);
    let mut points = Vec::with_capacity(evaluated.len());
    let mut profiles = Vec::new();
    for (p, prof) in evaluated {
        if keep_profiles(p.lambda) {
            profiles.extend(prof);
        }
        points.push(p);
    }
    findings.extend(monotonicity_findings(&points));
    for p in &points {
        for n in &p.notes {
            findings.push(format!("lambda = {}: {n}", p.lambda));
        }
    }
    let report = SweepReport {
        schema_version: SCHEMA_VERSION,
        tool_version: tool_version(),
        config: problem.config.clone(),
        lambda_bar: lambda_bar(&points),
        points,
        confirmation,
        findings,
    };
    SweepOutcome { report, profiles }
}

/// One λ, reported like a one-point grid sweep.
pub fn solve_one(problem: &Problem, lambda: f64) -> SweepOutcome {
    let point = problem.evaluate(lambda);
    assemble(problem, vec![point], |_| true, None, Vec::new())
}

pub fn run_sweep(config: &Config) -> Result<SweepOutcome, ConfigError> {
    let problem = Problem::new(config.clone())?;
    Ok(sweep_problem(&problem))
}

pub fn sweep_problem(problem: &Problem) -> SweepOutcome {
    match problem.config.sweep.clone() {
        SweepConfig::Grid { lambdas } => {
            let evaluated: Vec<_> = lambdas.par_iter().map(|&l| problem.evaluate(l)).collect();
            assemble(problem, evaluated, |_| true, None, Vec::new())
        }
        SweepConfig::Auto {
            start,
            max,
            rel_width,
        } => auto_sweep(problem, start, max, rel_width),
    }
}

fn auto_sweep(problem: &Problem, start: f64, max: f64, rel_width: f64) -> SweepOutcome {
    let mut evaluated: Vec<(LambdaPoint, Vec<Profile>)> = Vec::new();
    let mut eval = |lambda: f64| -> bool {
        let (p, prof) = problem.evaluate(lambda);
        info!(
            "lambda {lambda}: ordering {}{}",
            p.ordering_ok,
            if p.inconclusive {
                " (inconclusive)"
            } else {
                ""
            }
        );
        let ok = p.ordering_ok;
        evaluated.push((p, prof));
        ok
    };

    let mut findings = Vec::new();
    let mut lo = 0.0;
    let mut hi = start;
    let mut found = eval(hi);
    while !found {
        lo = hi;
        hi *= 2.0;
        if hi > max {
            findings.push(format!(
                "no ordered chain up to lambda = {lo}; lambda_bar not found below {max}"
            ));
            return assemble(problem, evaluated, |_| false, None, findings);
        }
        found = eval(hi);
    }
    while hi - lo > rel_width * hi {
        let mid = 0.5 * (lo + hi);
        if eval(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let confirm = 2.0 * hi;
    eval(confirm);
    assemble(
        problem,
        evaluated,
        move |l| l == confirm,
        Some(confirm),
        findings,
    )
}
