//! N-functions `Φ(t) = ∫₀ᵗ s φ(s) ds` and the quantities derived from them.
//!
//! `G(z) = z φ(|z|)` is the flux function of the operator `div(φ(|∇u|)∇u)`; it is
//! extended oddly to the whole line and `Φ` evenly. The conjugate `Φ̃` is evaluated
//! through the equality case of Young's inequality, `Φ̃(G(t)) = t G(t) − Φ(t)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridFunction;
use crate::numerics::{adaptive_simpson, log_space};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NFunctionError {
    #[error("argument is not finite: {0}")]
    NonFinite(f64),
    #[error("invalid N-function parameters: {0}")]
    InvalidParameter(String),
    #[error("quadrature for Φ({t}) did not converge")]
    Quadrature { t: f64 },
    #[error("G⁻¹({w}) is out of range: bracket expansion overflowed")]
    Range { w: f64 },
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("invalid sample range [{t_min}, {t_max}] with {samples} samples")]
    SampleRange {
        t_min: f64,
        t_max: f64,
        samples: usize,
    },
}

pub type Result<T> = std::result::Result<T, NFunctionError>;

/// Families of `φ`. Closed forms are used for everything except `Custom`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NFunctionKind {
    /// `φ(t) = t^{p-2}`, `Φ(t) = t^p / p`.
    Power { p: f64 },
    /// `Φ(t) = e^t − t − 1`. Not Δ₂.
    ExpGrowth,
    /// `Φ(t) = (1 + t²)^γ − 1`, `γ > 1/2`.
    PowerGamma { gamma: f64 },
    /// `Φ(t) = t^p log(1 + t)`, `p ≥ 1`. The conjugate is not Δ₂ for `p = 1`.
    PLog { p: f64 },
    /// `φ(t) = t^{p-2} + t^{q-2}`, the `(p, q)`-Laplacian.
    TwoPower { p: f64, q: f64 },
    /// Tabulated `φ` at knots `t`, interpolated linearly in log-log coordinates and
    /// extrapolated with the end slopes. `Φ` is computed by adaptive quadrature.
    Custom { t: Vec<f64>, phi: Vec<f64> },
}

fn default_quadrature_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NFunctionSpec {
    #[serde(flatten)]
    pub kind: NFunctionKind,
    #[serde(default = "default_quadrature_tol")]
    pub quadrature_tol: f64,
}

/// Sampled check of the structural hypotheses on `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiHypotheses {
    /// `tφ(t) → 0` as `t → 0⁺`.
    pub vanishes_at_zero: bool,
    /// `tφ(t) → ∞` as `t → ∞`.
    pub unbounded: bool,
    /// `tφ(t)` strictly increasing on the sample grid.
    pub strictly_increasing: bool,
}

impl PhiHypotheses {
    pub fn all(&self) -> bool {
        self.vanishes_at_zero && self.unbounded && self.strictly_increasing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Report {
    /// Infimum of `tΦ'(t)/Φ(t)` over the samples.
    pub ell_estimate: f64,
    /// Supremum of `tΦ'(t)/Φ(t)` over the samples.
    pub m_estimate: f64,
    /// Supremum of the same ratio for the conjugate `Φ̃` over `[G(t_min), G(t_max)]`.
    pub conjugate_m_estimate: f64,
    pub holds_phi: bool,
    pub holds_conjugate: bool,
    pub sample_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta2Options {
    /// A sampled ratio above this is treated as divergent.
    pub divergence_threshold: f64,
}

impl Default for Delta2Options {
    fn default() -> Self {
        Self {
            divergence_threshold: 1e3,
        }
    }
}

impl NFunctionSpec {
    /// Validated spec with the default quadrature tolerance.
    pub fn new(kind: NFunctionKind) -> Result<Self> {
        let spec = Self {
            kind,
            quadrature_tol: default_quadrature_tol(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(NFunctionKind::Power { p })
    }

    pub fn exp_growth() -> Self {
        Self::new(NFunctionKind::ExpGrowth).expect("parameter-free family")
    }

    pub fn power_gamma(gamma: f64) -> Result<Self> {
        Self::new(NFunctionKind::PowerGamma { gamma })
    }

    pub fn p_log(p: f64) -> Result<Self> {
        Self::new(NFunctionKind::PLog { p })
    }

    pub fn two_power(p: f64, q: f64) -> Result<Self> {
        Self::new(NFunctionKind::TwoPower { p, q })
    }

    pub fn custom(t: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        Self::new(NFunctionKind::Custom { t, phi })
    }

    /// Checks family parameters. For the closed-form families the parameter ranges
    /// imply the hypotheses on `φ`; tabulated data is checked segment by segment.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(NFunctionError::InvalidParameter(msg));
        if !(self.quadrature_tol > 0.0 && self.quadrature_tol < 1.0) {
            return bad(format!("quadrature_tol = {}", self.quadrature_tol));
        }
        match &self.kind {
            NFunctionKind::Power { p } if !(p.is_finite() && *p > 1.0) => {
                bad(format!("power needs p > 1, got {p}"))
            }
            NFunctionKind::PowerGamma { gamma } if !(gamma.is_finite() && *gamma > 0.5) => {
                bad(format!("power_gamma needs gamma > 1/2, got {gamma}"))
            }
            NFunctionKind::PLog { p } if !(p.is_finite() && *p >= 1.0) => {
                bad(format!("p_log needs p >= 1, got {p}"))
            }
            NFunctionKind::TwoPower { p, q }
                if !(p.is_finite() && q.is_finite() && *p > 1.0 && q > p) =>
            {
                bad(format!("two_power needs 1 < p < q, got p={p}, q={q}"))
            }
            NFunctionKind::Custom { t, phi } => {
                if t.len() < 2 || t.len() != phi.len() {
                    return bad("custom needs at least two (t, phi) knots of equal length".into());
                }
                if t.iter().chain(phi).any(|v| !(v.is_finite() && *v > 0.0)) {
                    return bad("custom knots and values must be positive and finite".into());
                }
                if t.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("custom knots must increase strictly".into());
                }
                // tφ(t) increasing on a power-law segment ⇔ log-slope of φ > −1
                if let Some(k) = (0..t.len() - 1).find(|&k| custom_slope(t, phi, k) <= -1.0) {
                    return bad(format!(
                        "t·phi(t) is not increasing on [{}, {}]",
                        t[k],
                        t[k + 1]
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Samples `G` on `[1e-100, 1e100]` (where finite) to check the hypotheses on `φ`.
    pub fn check_hypotheses(&self) -> PhiHypotheses {
        let samples: Vec<(f64, f64)> = log_space(1e-100, 1e100, 801)
            .into_iter()
            .map(|t| (t, self.g_abs(t)))
            .take_while(|(_, g)| g.is_finite())
            .collect();
        let g_one = self.g_abs(1.0);
        let vanishes_at_zero = samples.first().is_some_and(|&(_, g)| g < 1e-3 * g_one);
        let unbounded =
            samples.len() < 801 || samples.last().is_some_and(|&(_, g)| g > 10.0 * g_one);
        let strictly_increasing = samples.windows(2).all(|w| w[1].1 > w[0].1)
            && samples.first().is_some_and(|&(_, g)| g > 0.0);
        PhiHypotheses {
            vanishes_at_zero,
            unbounded,
            strictly_increasing,
        }
    }

    /// `φ(t)` for `t > 0`.
    pub fn phi(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            NFunctionKind::Power { p } => t.powf(p - 2.0),
            NFunctionKind::TwoPower { p, q } => t.powf(p - 2.0) + t.powf(q - 2.0),
            NFunctionKind::Custom { t: knots, phi } => custom_phi(knots, phi, t),
            _ => self.g_abs(t) / t,
        }
    }

    /// `Φ(|t|)`.
    pub fn big_phi(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(NFunctionError::NonFinite(t));
        }
        self.big_phi_abs(t.abs())
    }

    pub(crate) fn big_phi_abs(&self, t: f64) -> Result<f64> {
        Ok(match &self.kind {
            NFunctionKind::Power { p } => t.powf(*p) / p,
            NFunctionKind::ExpGrowth => {
                if t < 1e-2 {
                    // e^t − 1 − t without cancellation
                    let mut term = t * t / 2.0;
                    let mut sum = term;
                    for k in 3..12 {
                        term *= t / k as f64;
                        sum += term;
                    }
                    sum
                } else {
                    t.exp_m1() - t
                }
            }
            NFunctionKind::PowerGamma { gamma } => (gamma * (t * t).ln_1p()).exp_m1(),
            NFunctionKind::PLog { p } => t.powf(*p) * t.ln_1p(),
            NFunctionKind::TwoPower { p, q } => t.powf(*p) / p + t.powf(*q) / q,
            NFunctionKind::Custom { t: knots, phi } => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                // integrate knot-to-knot so every panel sees a smooth power law
                let mut total = 0.0;
                let mut lo = 0.0;
                for &k in knots.iter().chain(std::iter::once(&f64::INFINITY)) {
                    let hi = k.min(t);
                    if hi > lo {
                        total += adaptive_simpson(
                            |s| s * custom_phi(knots, phi, s),
                            lo,
                            hi,
                            self.quadrature_tol,
                        )
                        .map_err(|_| NFunctionError::Quadrature { t })?;
                    }
                    if k >= t {
                        break;
                    }
                    lo = k;
                }
                total
            }
        })
    }

    /// `G(z) = φ(|z|) z`, odd in `z`.
    pub fn g_eval(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(NFunctionError::NonFinite(z));
        }
        Ok(z.signum() * self.g_abs(z.abs()))
    }

    /// `G(t)` for `t ≥ 0`.
    pub(crate) fn g_abs(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match &self.kind {
            NFunctionKind::Power { p } => t.powf(p - 1.0),
            NFunctionKind::ExpGrowth => t.exp_m1(),
            NFunctionKind::PowerGamma { gamma } => {
                2.0 * gamma * t * (1.0 + t * t).powf(gamma - 1.0)
            }
            NFunctionKind::PLog { p } => p * t.powf(p - 1.0) * t.ln_1p() + t.powf(*p) / (1.0 + t),
            NFunctionKind::TwoPower { p, q } => t.powf(p - 1.0) + t.powf(q - 1.0),
            NFunctionKind::Custom { t: knots, phi } => t * custom_phi(knots, phi, t),
        }
    }

    /// `G'(|z|)`, the tangent curvature `Φ''`.
    pub fn g_prime(&self, z: f64) -> f64 {
        let t = z.abs();
        match &self.kind {
            NFunctionKind::Power { p } => (p - 1.0) * t.powf(p - 2.0),
            NFunctionKind::ExpGrowth => t.exp(),
            NFunctionKind::PowerGamma { gamma } => {
                let s = 1.0 + t * t;
                2.0 * gamma * s.powf(gamma - 2.0) * (1.0 + (2.0 * gamma - 1.0) * t * t)
            }
            NFunctionKind::PLog { p } => {
                if t == 0.0 {
                    return if *p == 1.0 { 2.0 } else { 0.0 };
                }
                let log_term = if *p == 1.0 {
                    0.0
                } else {
                    p * (p - 1.0) * t.powf(p - 2.0) * t.ln_1p()
                };
                log_term + 2.0 * p * t.powf(p - 1.0) / (1.0 + t)
                    - t.powf(*p) / ((1.0 + t) * (1.0 + t))
            }
            NFunctionKind::TwoPower { p, q } => {
                (p - 1.0) * t.powf(p - 2.0) + (q - 1.0) * t.powf(q - 2.0)
            }
            NFunctionKind::Custom { t: knots, phi } => {
                let k = custom_segment(knots, t);
                custom_phi(knots, phi, t) * (1.0 + custom_slope(knots, phi, k))
            }
        }
    }

    /// The unique `z` with `G(z) = w`.
    ///
    /// Closed forms for the power and exponential families; otherwise geometric
    /// bracket expansion from `[0, 1]` followed by safeguarded Newton.
    pub fn g_inverse(&self, w: f64) -> Result<f64> {
        if !w.is_finite() {
            return Err(NFunctionError::NonFinite(w));
        }
        Ok(w.signum() * self.g_inverse_abs(w.abs())?)
    }

    pub(crate) fn g_inverse_abs(&self, w: f64) -> Result<f64> {
        if w == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            NFunctionKind::Power { p } => Ok(w.powf(1.0 / (p - 1.0))),
            NFunctionKind::ExpGrowth => Ok(w.ln_1p()),
            _ => self.g_inverse_bracketed(w),
        }
    }

    /// `G⁻¹(w)` for `w ≥ 0`, with the bracket search started around `hint` (a nearby
    /// solution) instead of `[0, 1]`.
    pub(crate) fn g_inverse_abs_near(&self, w: f64, hint: f64) -> Result<f64> {
        match &self.kind {
            NFunctionKind::Power { .. } | NFunctionKind::ExpGrowth => self.g_inverse_abs(w),
            _ if w == 0.0 => Ok(0.0),
            _ if hint > 0.0 && hint.is_finite() => {
                let (mut lo, mut hi) = (0.5 * hint, 2.0 * hint);
                while self.g_abs(lo) > w {
                    hi = lo;
                    lo *= 0.25;
                    if lo < f64::MIN_POSITIVE {
                        lo = 0.0;
                        break;
                    }
                }
                while self.g_abs(hi) < w {
                    lo = hi;
                    hi *= 4.0;
                    if hi > 1e300 {
                        return Err(NFunctionError::Range { w });
                    }
                }
                Ok(self.g_inverse_in(w, lo, hi, hint))
            }
            _ => self.g_inverse_bracketed(w),
        }
    }

    fn g_inverse_bracketed(&self, w: f64) -> Result<f64> {
        let mut lo = 0.0;
        let mut hi = 1.0;
        // NaN/inf from overflow counts as "past w"
        while self.g_abs(hi) < w {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(NFunctionError::Range { w });
            }
        }
        Ok(self.g_inverse_in(w, lo, hi, f64::NAN))
    }

    /// Safeguarded Newton for `G(z) = w` on a bracket `G(lo) ≤ w ≤ G(hi)`.
    fn g_inverse_in(&self, w: f64, mut lo: f64, mut hi: f64, start: f64) -> f64 {
        const REL_TOL: f64 = 1e-15;
        let mut z = if start > lo && start < hi {
            start
        } else {
            0.5 * (lo + hi)
        };
        let mut last_step = hi - lo;
        for _ in 0..300 {
            let residual = self.g_abs(z) - w;
            if residual == 0.0 {
                return z;
            }
            if residual > 0.0 || residual.is_nan() {
                hi = z;
            } else {
                lo = z;
            }
            let slope = self.g_prime(z);
            let newton = z - residual / slope;
            let next = if newton.is_finite()
                && newton > lo
                && newton < hi
                && (newton - z).abs() < 0.5 * last_step
            {
                newton
            } else {
                0.5 * (lo + hi)
            };
            last_step = (next - z).abs();
            z = next;
            if last_step <= REL_TOL * z || hi - lo <= 4.0 * f64::EPSILON * hi {
                return z;
            }
        }
        z
    }

    /// `Φ̃(|s|) = s z* − Φ(z*)` with `z* = G⁻¹(|s|)`.
    pub fn conjugate_eval(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(NFunctionError::NonFinite(s));
        }
        let s = s.abs();
        if s == 0.0 {
            return Ok(0.0);
        }
        let z = self.g_inverse_abs(s)?;
        Ok((s * z - self.big_phi_abs(z)?).max(0.0))
    }

    /// `tΦ'(t)/Φ(t)`.
    pub fn growth_ratio(&self, t: f64) -> Result<f64> {
        Ok(t * self.g_abs(t) / self.big_phi_abs(t)?)
    }

    /// `sΦ̃'(s)/Φ̃(s)`, using `Φ̃' = G⁻¹`.
    pub fn conjugate_growth_ratio(&self, s: f64) -> Result<f64> {
        Ok(s * self.g_inverse_abs(s)? / self.conjugate_eval(s)?)
    }
}

fn custom_segment(knots: &[f64], t: f64) -> usize {
    let n = knots.len();
    match knots.partition_point(|&k| k <= t) {
        0 => 0,
        i if i >= n => n - 2,
        i => i - 1,
    }
}

fn custom_slope(knots: &[f64], phi: &[f64], k: usize) -> f64 {
    (phi[k + 1] / phi[k]).ln() / (knots[k + 1] / knots[k]).ln()
}

fn custom_phi(knots: &[f64], phi: &[f64], t: f64) -> f64 {
    let k = custom_segment(knots, t);
    let alpha = custom_slope(knots, phi, k);
    phi[k] * (t / knots[k]).powf(alpha)
}

/// Luxemburg norm `inf{λ > 0 : ∫ Φ(u/λ) ≤ 1}` with the grid's lumped quadrature.
///
/// The discrete modular is continuous and strictly decreasing in `λ`, so bisection
/// (in `log λ`) converges to the point where it equals one.
pub fn luxemburg_norm(spec: &NFunctionSpec, u: &GridFunction, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(NFunctionError::Tolerance(tol));
    }
    let scale = u.sup_norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if !scale.is_finite() {
        return Err(NFunctionError::NonFinite(scale));
    }
    let modular = |lambda: f64| -> Result<f64> {
        let mut total = 0.0;
        for (&v, &w) in u.values().iter().zip(u.grid().weights()) {
            if v != 0.0 {
                total += w * spec.big_phi_abs(v.abs() / lambda)?;
            }
        }
        Ok(total)
    };
    // exceeds(λ): modular(λ) > 1, with overflow counted as exceeding
    let exceeds = |lambda: f64| -> Result<bool> {
        let m = modular(lambda)?;
        Ok(!(m <= 1.0))
    };
    let mut lo = scale;
    let mut hi = scale;
    if exceeds(scale)? {
        while exceeds(hi)? {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while !exceeds(lo)? {
            hi = lo;
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return Ok(0.0);
            }
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let m = modular(mid)?;
        if (m - 1.0).abs() <= tol * 1e-6 && hi / lo - 1.0 < 1e-14 {
            return Ok(mid);
        }
        if !(m <= 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Sampled Δ₂ diagnostics with default options.
pub fn delta2_index(
    spec: &NFunctionSpec,
    t_min: f64,
    t_max: f64,
    samples: usize,
) -> Result<Delta2Report> {
    delta2_index_with(spec, t_min, t_max, samples, Delta2Options::default())
}

/// Estimates `ℓ ≤ tΦ'(t)/Φ(t) ≤ m` on a log grid over `[t_min, t_max]`.
///
/// `holds_phi` fails when the sampled supremum exceeds the divergence threshold or
/// the ratio keeps growing across `t_max, 2 t_max, 4 t_max`. The conjugate side is
/// checked the same way on `Φ̃` over `[G(t_min), G(t_max)]`, which is where the
/// `ℓ → 1` degeneracy of `Φ` shows up as unbounded growth.
pub fn delta2_index_with(
    spec: &NFunctionSpec,
    t_min: f64,
    t_max: f64,
    samples: usize,
    opts: Delta2Options,
) -> Result<Delta2Report> {
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || samples < 2 {
        return Err(NFunctionError::SampleRange {
            t_min,
            t_max,
            samples,
        });
    }
    let grid = log_space(t_min, t_max, samples);
    let ratios = grid
        .iter()
        .map(|&t| spec.growth_ratio(t))
        .collect::<Result<Vec<_>>>()?;
    let (ell, m) = min_max(&ratios);
    let tail = [t_max, 2.0 * t_max, 4.0 * t_max]
        .iter()
        .map(|&t| spec.growth_ratio(t))
        .collect::<Result<Vec<_>>>()?;
    let holds_phi = m.is_finite() && m <= opts.divergence_threshold && !keeps_growing(&tail);

    let s_min = spec.g_abs(t_min);
    let s_max = spec.g_abs(t_max);
    let (conj_m, holds_conjugate) = if s_min.is_finite() && s_max.is_finite() && s_max > s_min {
        let conj = log_space(s_min, s_max, samples)
            .iter()
            .map(|&s| spec.conjugate_growth_ratio(s))
            .collect::<Result<Vec<_>>>()?;
        let (_, conj_m) = min_max(&conj);
        let conj_tail = [s_max, 2.0 * s_max, 4.0 * s_max]
            .iter()
            .map(|&s| spec.conjugate_growth_ratio(s))
            .collect::<Result<Vec<_>>>()?;
        (
            conj_m,
            conj_m.is_finite() && conj_m <= opts.divergence_threshold && !keeps_growing(&conj_tail),
        )
    } else {
        (f64::NAN, false)
    };
    Ok(Delta2Report {
        ell_estimate: ell,
        m_estimate: m,
        conjugate_m_estimate: conj_m,
        holds_phi,
        holds_conjugate,
        sample_range: (t_min, t_max),
    })
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            if v.is_nan() {
                (lo, f64::INFINITY)
            } else {
                (lo.min(v), hi.max(v))
            }
        })
}

/// Ratios at `t, 2t, 4t` still rising without geometric slowdown.
fn keeps_growing(tail: &[f64]) -> bool {
    if tail.iter().any(|v| !v.is_finite()) {
        return true;
    }
    let first = tail[1] - tail[0];
    let second = tail[2] - tail[1];
    first > 0.0 && second > 0.0 && second >= 0.5 * first && tail[2] - tail[0] > 1e-6 * tail[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn families() -> Vec<NFunctionSpec> {
        vec![
            NFunctionSpec::power(2.0).unwrap(),
            NFunctionSpec::power(1.5).unwrap(),
            NFunctionSpec::power(3.5).unwrap(),
            NFunctionSpec::exp_growth(),
            NFunctionSpec::power_gamma(0.75).unwrap(),
            NFunctionSpec::power_gamma(2.0).unwrap(),
            NFunctionSpec::p_log(1.0).unwrap(),
            NFunctionSpec::p_log(2.5).unwrap(),
            NFunctionSpec::two_power(1.5, 3.0).unwrap(),
            NFunctionSpec::custom(vec![0.5, 1.0, 4.0], vec![1.0, 1.2, 3.0]).unwrap(),
        ]
    }

    #[test]
    fn big_phi_examples() {
        let p2 = NFunctionSpec::power(2.0).unwrap();
        assert_eq!(p2.big_phi(2.0).unwrap(), 2.0);
        let e = NFunctionSpec::exp_growth();
        assert!((e.big_phi(1.0).unwrap() - (E - 2.0)).abs() < 1e-15);
        for spec in families() {
            assert_eq!(spec.big_phi(0.0).unwrap(), 0.0);
        }
        assert!(matches!(
            p2.big_phi(f64::NAN),
            Err(NFunctionError::NonFinite(_))
        ));
    }

    #[test]
    fn big_phi_is_even() {
        for spec in families() {
            assert_eq!(spec.big_phi(-1.3).unwrap(), spec.big_phi(1.3).unwrap());
        }
    }

    #[test]
    fn g_examples() {
        let p3 = NFunctionSpec::power(3.0).unwrap();
        assert_eq!(p3.g_eval(2.0).unwrap(), 4.0);
        assert_eq!(p3.g_eval(-2.0).unwrap(), -4.0);
        let e = NFunctionSpec::exp_growth();
        assert!((e.g_eval(1.0).unwrap() - (E - 1.0)).abs() < 1e-15);
        for spec in families() {
            assert_eq!(spec.g_eval(0.0).unwrap(), 0.0);
        }
        assert!(p3.g_eval(f64::INFINITY).is_err());
    }

    #[test]
    fn g_inverse_examples() {
        let p3 = NFunctionSpec::power(3.0).unwrap();
        assert!((p3.g_inverse(4.0).unwrap() - 2.0).abs() < 1e-14);
        let e = NFunctionSpec::exp_growth();
        assert!((e.g_inverse(E - 1.0).unwrap() - 1.0).abs() < 1e-14);
        for spec in families() {
            assert_eq!(spec.g_inverse(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn g_inverse_range_error() {
        // G(z) = t^{0.01}: w = 1e10 needs z = 1e1000
        let spec = NFunctionSpec::two_power(1.005, 1.01).unwrap();
        assert!(matches!(
            spec.g_inverse(1e10),
            Err(NFunctionError::Range { .. })
        ));
    }

    #[test]
    fn conjugate_examples() {
        let p2 = NFunctionSpec::power(2.0).unwrap();
        assert!((p2.conjugate_eval(1.0).unwrap() - 0.5).abs() < 1e-15);
        let e = NFunctionSpec::exp_growth();
        assert!((e.conjugate_eval(E - 1.0).unwrap() - 1.0).abs() < 1e-14);
        // closed form (1+s)log(1+s) − s
        for &s in &[0.1f64, 2.0, 30.0] {
            let exact = (1.0 + s) * (1.0 + s).ln() - s;
            assert!((e.conjugate_eval(s).unwrap() - exact).abs() < 1e-12 * (1.0 + exact));
        }
        for spec in families() {
            assert_eq!(spec.conjugate_eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn g_prime_matches_difference_quotient() {
        for spec in families() {
            // away from the knots of the tabulated family
            for &t in &[0.3, 1.3, 2.7, 9.0] {
                let h = 1e-6 * t;
                let fd = (spec.g_abs(t + h) - spec.g_abs(t - h)) / (2.0 * h);
                let rel = (fd - spec.g_prime(t)).abs() / spec.g_prime(t);
                assert!(rel < 1e-6, "{:?} t={t} rel={rel}", spec.kind);
            }
        }
    }

    #[test]
    fn custom_quadrature_matches_power_law() {
        // φ ≡ 1 tabulated: Φ(t) = t²/2 everywhere, including extrapolated ends
        let spec = NFunctionSpec::custom(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        for &t in &[0.25, 1.5, 7.0] {
            assert!((spec.big_phi(t).unwrap() - t * t / 2.0).abs() < 1e-10 * t * t);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(NFunctionSpec::power(1.0).is_err());
        assert!(NFunctionSpec::power_gamma(0.5).is_err());
        assert!(NFunctionSpec::p_log(0.9).is_err());
        assert!(NFunctionSpec::two_power(3.0, 2.0).is_err());
        // t·φ(t) decreasing on the second segment
        assert!(NFunctionSpec::custom(vec![1.0, 2.0, 4.0], vec![1.0, 1.0, 0.1]).is_err());
    }

    #[test]
    fn hypotheses_hold_for_families() {
        for spec in families() {
            assert!(spec.check_hypotheses().all(), "{:?}", spec.kind);
        }
    }

    #[test]
    fn deserializes_kind_and_params() {
        let spec: NFunctionSpec = serde_json::from_str(r#"{"kind":"p_log","p":1.0}"#).unwrap();
        assert_eq!(spec.kind, NFunctionKind::PLog { p: 1.0 });
        assert_eq!(spec.quadrature_tol, 1e-10);
        let spec: NFunctionSpec =
            serde_json::from_str(r#"{"kind":"exp_growth","quadrature_tol":1e-8}"#).unwrap();
        assert_eq!(spec.kind, NFunctionKind::ExpGrowth);
        let back: NFunctionSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
