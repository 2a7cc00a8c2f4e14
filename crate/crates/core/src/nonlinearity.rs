//! Multi-bump nonlinearities `f` and their truncations `f_k`.
//!
//! `f` is stored as a continuous piecewise polynomial on `[0, a_m]` so hypothesis
//! integrals and primitives are exact. Outside that range it is extended by `f(0)`
//! on the left and frozen at `f(a_m)` on the right.
//!
//! Truncation levels follow the convention `k = 2..=m`: `f_k` agrees with `f` on
//! `[0, a_k]`, equals `f(0)` below zero and vanishes above `a_k`, so a minimizer of
//! the level-`k` energy is expected in `(a_{k-1}, a_k]`. Some texts index the
//! primitives `F_k` by `k = 1..m-1` instead; this crate does not.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::chebyshev_points;

/// A source term `s ↦ f(s)` with an exact primitive.
pub trait Forcing: Send + Sync {
    fn value(&self, s: f64) -> f64;
    /// `∫₀ˢ f`.
    fn primitive(&self, s: f64) -> f64;
    /// Right derivative of `f`, zero where `f` is frozen.
    fn slope(&self, s: f64) -> f64;
    /// Upper end of the admissible box `[0, ub]` for minimization.
    fn upper_bound(&self) -> f64 {
        f64::INFINITY
    }
    /// Values of `s` where `f` may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignInterval {
    /// `(a_k, b_k)`, where `f ≤ 0` is required.
    Negative { k: usize },
    /// `(b_k, a_{k+1})`, where `f ≥ 0` is required.
    Positive { k: usize },
}

impl fmt::Display for SignInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignInterval::Negative { k } => write!(f, "(a_{k}, b_{k}) requires f <= 0"),
            SignInterval::Positive { k } => write!(f, "(b_{k}, a_{}) requires f >= 0", k + 1),
        }
    }
}

/// One violated hypothesis on the bump data.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Ordering(String),
    /// `f(0) ≥ 0` fails.
    F1 {
        f0: f64,
    },
    /// Sign condition fails on the given interval.
    F2 {
        interval: SignInterval,
        at: f64,
        value: f64,
    },
    /// `∫_{a_k}^{a_{k+1}} f ≤ 0`.
    F3 {
        k: usize,
        integral: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Ordering(msg) => write!(f, "ordering: {msg}"),
            Violation::F1 { f0 } => write!(f, "(f1): f(0) = {f0} < 0"),
            Violation::F2 {
                interval,
                at,
                value,
            } => write!(f, "(f2): {interval}, but f({at}) = {value}"),
            Violation::F3 { k, integral } => write!(
                f,
                "(f3): integral of f over [a_{k}, a_{}] is {integral} <= 0",
                k + 1
            ),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("hypotheses violated: {}", list(.0))]
    Hypotheses(Vec<Violation>),
    #[error("invalid piecewise representation: {0}")]
    Representation(String),
    #[error("truncation level {k} outside 2..={m}")]
    Truncation { k: usize, m: usize },
}

fn list(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl NonlinearityError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            NonlinearityError::Hypotheses(v) => v,
            _ => &[],
        }
    }
}

/// Continuous piecewise polynomial; segment `j` holds coefficients in powers of
/// `s − breaks[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePolynomial {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self, NonlinearityError> {
        let bad = |m: String| Err(NonlinearityError::Representation(m));
        if breaks.len() < 2 || coeffs.len() + 1 != breaks.len() {
            return bad("need n+1 breaks for n segments, n >= 1".into());
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return bad("breaks must be finite and strictly increasing".into());
        }
        if coeffs
            .iter()
            .any(|c| c.is_empty() || c.iter().any(|v| !v.is_finite()))
        {
            return bad("every segment needs finite coefficients".into());
        }
        let mut pp = Self {
            breaks,
            coeffs,
            cumulative: Vec::new(),
        };
        let scale = pp.scale().max(1.0);
        for j in 1..pp.coeffs.len() {
            let x = pp.breaks[j];
            let left = horner(&pp.coeffs[j - 1], x - pp.breaks[j - 1]);
            let right = pp.coeffs[j][0];
            if (left - right).abs() > 1e-12 * scale {
                return bad(format!("discontinuity at s = {x}: {left} vs {right}"));
            }
        }
        pp.rebuild_cumulative();
        Ok(pp)
    }

    /// Piecewise-linear interpolant of `(s, f(s))` nodes.
    pub fn linear(nodes: &[(f64, f64)]) -> Result<Self, NonlinearityError> {
        if nodes.len() < 2 {
            return Err(NonlinearityError::Representation(
                "need at least two nodes".into(),
            ));
        }
        let breaks = nodes.iter().map(|n| n.0).collect();
        let coeffs = nodes
            .windows(2)
            .map(|w| vec![w[0].1, (w[1].1 - w[0].1) / (w[1].0 - w[0].0)])
            .collect();
        Self::new(breaks, coeffs)
    }

    fn rebuild_cumulative(&mut self) {
        let mut cum = Vec::with_capacity(self.breaks.len());
        cum.push(0.0);
        for (j, c) in self.coeffs.iter().enumerate() {
            let h = self.breaks[j + 1] - self.breaks[j];
            cum.push(cum[j] + antiderivative(c, h));
        }
        self.cumulative = cum;
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn start(&self) -> f64 {
        self.breaks[0]
    }

    pub fn end(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    fn segment(&self, s: f64) -> usize {
        let n = self.coeffs.len();
        self.breaks.partition_point(|&b| b <= s).clamp(1, n) - 1
    }

    /// Value, clamped to the end values outside `[start, end]`.
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(self.start(), self.end());
        let j = self.segment(s);
        horner(&self.coeffs[j], s - self.breaks[j])
    }

    /// Right derivative inside `[start, end)`, zero outside.
    pub fn derivative(&self, s: f64) -> f64 {
        if s < self.start() || s >= self.end() {
            return 0.0;
        }
        let j = self.segment(s);
        let x = s - self.breaks[j];
        let c = &self.coeffs[j];
        let mut d = 0.0;
        for i in (1..c.len()).rev() {
            d = d * x + i as f64 * c[i];
        }
        d
    }

    /// `∫_{start}^{s}` for `s` inside the domain.
    fn integral_from_start(&self, s: f64) -> f64 {
        let s = s.clamp(self.start(), self.end());
        let j = self.segment(s);
        self.cumulative[j] + antiderivative(&self.coeffs[j], s - self.breaks[j])
    }

    /// Exact `∫_lo^hi`, `lo, hi` within the domain.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.integral_from_start(hi) - self.integral_from_start(lo)
    }

    fn scale(&self) -> f64 {
        self.breaks
            .iter()
            .map(|&b| self.eval(b).abs())
            .fold(0.0, f64::max)
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// `∫₀ʰ Σ c_i x^i dx`.
fn antiderivative(c: &[f64], h: f64) -> f64 {
    c.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (i, &v)| acc * h + v / (i + 1) as f64)
        * h
}

/// A validated multi-bump nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpNonlinearity {
    a: Vec<f64>,
    b: Vec<f64>,
    f: PiecewisePolynomial,
}

/// Checks the ordering `0 < a_1 < b_1 < … < b_{m-1} < a_m`, `f(0) ≥ 0`, the sign
/// pattern on every `(a_k, b_k)` and `(b_k, a_{k+1})`, and positive net area on
/// every `[a_k, a_{k+1}]`. All violations are reported together.
pub fn validate(
    a: Vec<f64>,
    b: Vec<f64>,
    f: PiecewisePolynomial,
) -> Result<BumpNonlinearity, NonlinearityError> {
    check_ordering(&a, &b)?;
    let a_m = *a.last().unwrap();
    if f.start() != 0.0 || (f.end() - a_m).abs() > 1e-12 * a_m {
        return Err(NonlinearityError::Representation(format!(
            "f must be given on [0, {a_m}], got [{}, {}]",
            f.start(),
            f.end()
        )));
    }
    let bn = BumpNonlinearity { a, b, f };
    let violations = bn.hypothesis_violations();
    if violations.is_empty() {
        Ok(bn)
    } else {
        Err(NonlinearityError::Hypotheses(violations))
    }
}

fn check_ordering(a: &[f64], b: &[f64]) -> Result<(), NonlinearityError> {
    let fail = |msg: String| {
        Err(NonlinearityError::Hypotheses(vec![Violation::Ordering(
            msg,
        )]))
    };
    if a.len() < 2 {
        return fail(format!("need m >= 2 breakpoints a_k, got {}", a.len()));
    }
    if b.len() + 1 != a.len() {
        return fail(format!(
            "b must have m-1 = {} entries, got {}",
            a.len() - 1,
            b.len()
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return fail("breakpoints must be finite".into());
    }
    if a[0] <= 0.0 {
        return fail(format!("a_1 = {} must be positive", a[0]));
    }
    for k in 0..b.len() {
        if !(a[k] < b[k] && b[k] < a[k + 1]) {
            return fail(format!(
                "need a_{} < b_{} < a_{}, got {} , {}, {}",
                k + 1,
                k + 1,
                k + 2,
                a[k],
                b[k],
                a[k + 1]
            ));
        }
    }
    Ok(())
}

impl BumpNonlinearity {
    /// Skips hypothesis checks. Only for building counterexamples.
    pub fn new_unchecked(a: Vec<f64>, b: Vec<f64>, f: PiecewisePolynomial) -> Self {
        Self { a, b, f }
    }

    /// Number of breakpoints `a_k`.
    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// `a_k`, 1-based.
    pub fn a(&self, k: usize) -> f64 {
        self.a[k - 1]
    }

    /// `b_k`, 1-based.
    pub fn b(&self, k: usize) -> f64 {
        self.b[k - 1]
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b
    }

    pub fn a_max(&self) -> f64 {
        *self.a.last().unwrap()
    }

    pub fn pieces(&self) -> &PiecewisePolynomial {
        &self.f
    }

    /// `f(s)` with the constant extensions outside `[0, a_m]`.
    pub fn eval(&self, s: f64) -> f64 {
        self.f.eval(s)
    }

    /// Exact `∫_lo^hi f` for `0 ≤ lo, hi ≤ a_m`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.f.integral(lo, hi)
    }

    /// Window `j` with `a_j < sup ≤ a_{j+1}`, if any.
    pub fn window_of(&self, sup: f64) -> Option<usize> {
        (1..self.m()).find(|&j| self.a(j) < sup && sup <= self.a(j + 1))
    }

    /// Truncation `f_k`, `2 ≤ k ≤ m`.
    pub fn truncate(&self, k: usize) -> Result<TruncatedF, NonlinearityError> {
        if k < 2 || k > self.m() {
            return Err(NonlinearityError::Truncation { k, m: self.m() });
        }
        Ok(TruncatedF {
            parent: self.clone(),
            level: k,
        })
    }

    /// All hypothesis violations (empty when valid). Assumes the ordering holds.
    pub fn hypothesis_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let f0 = self.f.eval(0.0);
        if f0 < 0.0 {
            out.push(Violation::F1 { f0 });
        }
        let tol = 1e-12 * self.f.scale().max(f64::MIN_POSITIVE);
        for k in 1..self.m() {
            if let Some((at, value)) = self.worst_sign(self.a(k), self.b(k), 1.0, tol) {
                out.push(Violation::F2 {
                    interval: SignInterval::Negative { k },
                    at,
                    value,
                });
            }
            if let Some((at, value)) = self.worst_sign(self.b(k), self.a(k + 1), -1.0, tol) {
                out.push(Violation::F2 {
                    interval: SignInterval::Positive { k },
                    at,
                    value,
                });
            }
        }
        for k in 1..self.m() {
            let integral = self.integral(self.a(k), self.a(k + 1));
            if !(integral > 0.0) {
                out.push(Violation::F3 { k, integral });
            }
        }
        out
    }

    /// Largest `sign·f` on `[lo, hi]` when it exceeds `tol`. Samples every polynomial
    /// piece at its end points and Chebyshev points, which is exact for linear pieces.
    fn worst_sign(&self, lo: f64, hi: f64, sign: f64, tol: f64) -> Option<(f64, f64)> {
        let breaks = self.f.breaks();
        let mut worst: Option<(f64, f64)> = None;
        for w in breaks.windows(2) {
            let (x0, x1) = (w[0].max(lo), w[1].min(hi));
            if x0 >= x1 {
                continue;
            }
            let probes = [x0, x1].into_iter().chain(chebyshev_points(x0, x1, 8));
            for s in probes {
                let v = self.f.eval(s);
                if sign * v > tol && !worst.is_some_and(|(_, wv)| sign * v <= sign * wv) {
                    worst = Some((s, v));
                }
            }
        }
        worst
    }
}

impl Forcing for BumpNonlinearity {
    fn value(&self, s: f64) -> f64 {
        self.f.eval(s)
    }

    fn primitive(&self, s: f64) -> f64 {
        if s <= 0.0 {
            self.f.eval(0.0) * s
        } else if s <= self.a_max() {
            self.f.integral_from_start(s)
        } else {
            let a_m = self.a_max();
            self.f.integral_from_start(a_m) + self.f.eval(a_m) * (s - a_m)
        }
    }

    fn slope(&self, s: f64) -> f64 {
        self.f.derivative(s)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.f.breaks().to_vec()
    }
}

/// `f_k`: `f(0)` for `s ≤ 0`, `f(s)` on `[0, a_k]`, zero above `a_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedF {
    parent: BumpNonlinearity,
    level: usize,
}

impl TruncatedF {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parent(&self) -> &BumpNonlinearity {
        &self.parent
    }

    /// The truncation point `a_k`.
    pub fn cap(&self) -> f64 {
        self.parent.a(self.level)
    }

    /// `sup |f_k|`.
    pub fn sup_abs(&self) -> f64 {
        let cap = self.cap();
        let f = &self.parent.f;
        let mut sup = f.eval(0.0).abs();
        for w in f.breaks().windows(2) {
            let (x0, x1) = (w[0], w[1].min(cap));
            if x0 >= x1 {
                break;
            }
            for s in [x0, x1].into_iter().chain(chebyshev_points(x0, x1, 16)) {
                sup = sup.max(f.eval(s).abs());
            }
        }
        sup
    }
}

impl Forcing for TruncatedF {
    fn value(&self, s: f64) -> f64 {
        if s <= 0.0 {
            self.parent.f.eval(0.0)
        } else if s <= self.cap() {
            self.parent.f.eval(s)
        } else {
            0.0
        }
    }

    fn primitive(&self, s: f64) -> f64 {
        if s <= 0.0 {
            self.parent.f.eval(0.0) * s
        } else {
            self.parent.f.integral_from_start(s.min(self.cap()))
        }
    }

    fn slope(&self, s: f64) -> f64 {
        if s < 0.0 || s >= self.cap() {
            0.0
        } else {
            self.parent.f.derivative(s)
        }
    }

    fn upper_bound(&self) -> f64 {
        self.cap()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let cap = self.cap();
        let mut out: Vec<f64> = self
            .parent
            .f
            .breaks()
            .iter()
            .copied()
            .filter(|&b| b < cap)
            .collect();
        out.push(cap);
        out
    }
}

/// `f(s) = Σ c_i s^i` on the whole line. Useful for closed-form checks such as
/// `f ≡ 1` or `f(u) = u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }
}

impl Forcing for Polynomial {
    fn value(&self, s: f64) -> f64 {
        horner(&self.coeffs, s)
    }

    fn primitive(&self, s: f64) -> f64 {
        antiderivative(&self.coeffs, s)
    }

    fn slope(&self, s: f64) -> f64 {
        let mut d = 0.0;
        for i in (1..self.coeffs.len()).rev() {
            d = d * s + i as f64 * self.coeffs[i];
        }
        d
    }
}

/// Canonical tent family: piecewise-linear `f` vanishing at `0` and at every `a_k`,
/// `b_k`, with a positive tent on `(0, a_1)` and on each `(b_k, a_{k+1})` and a
/// negative tent on each `(a_k, b_k)`.
///
/// `amplitudes` is either `[positive, negative]` (shared by all lobes) or one
/// magnitude per lobe in left-to-right order (`2m − 1` values). Signs are implied.
pub fn default_bump_builder(
    a: &[f64],
    b: &[f64],
    amplitudes: &[f64],
) -> Result<BumpNonlinearity, NonlinearityError> {
    check_ordering(a, b)?;
    let m = a.len();
    let lobes = 2 * m - 1;
    let mags: Vec<f64> = match amplitudes.len() {
        2 => (0..lobes)
            .map(|i| {
                if i % 2 == 0 {
                    amplitudes[0]
                } else {
                    amplitudes[1]
                }
            })
            .collect(),
        n if n == lobes => amplitudes.to_vec(),
        n => {
            return Err(NonlinearityError::Representation(format!(
                "expected 2 or {lobes} amplitudes, got {n}"
            )))
        }
    };
    if mags.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(NonlinearityError::Representation(
            "amplitudes are magnitudes and must be finite and non-negative".into(),
        ));
    }
    let mut ends = vec![0.0];
    for k in 0..m {
        ends.push(a[k]);
        if k < b.len() {
            ends.push(b[k]);
        }
    }
    let mut nodes = vec![(0.0, 0.0)];
    for (i, w) in ends.windows(2).enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        nodes.push((0.5 * (w[0] + w[1]), sign * mags[i]));
        nodes.push((w[1], 0.0));
    }
    validate(a.to_vec(), b.to_vec(), PiecewisePolynomial::linear(&nodes)?)
}
