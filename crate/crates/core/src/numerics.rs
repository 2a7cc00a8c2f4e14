//! Small numerical kernels shared by the solver modules.

/// Outcome of [`adaptive_simpson`] when the refinement budget runs out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureFailure {
    pub estimate: f64,
    pub interval: (f64, f64),
}

const MAX_SIMPSON_DEPTH: u32 = 48;
const MAX_SIMPSON_EVALS: usize = 1 << 20;

/// Adaptive Simpson quadrature of `f` on `[a, b]` with relative tolerance `rel_tol`.
///
/// The tolerance is taken relative to a coarse estimate of `∫|f|`. See
/// [`adaptive_simpson_abs`] for the failure modes.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64, QuadratureFailure>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let scale = ((b - a) / 6.0 * (f(a).abs() + 4.0 * f(m).abs() + f(b).abs())).abs();
    adaptive_simpson_abs(f, a, b, rel_tol * scale.max(f64::MIN_POSITIVE))
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` with absolute tolerance `abs_tol`.
///
/// Uses the Richardson-corrected estimate on every accepted panel. Panels still
/// unresolved after `MAX_SIMPSON_DEPTH` bisections are accepted as they are. Fails on
/// non-finite values or when more than `MAX_SIMPSON_EVALS` evaluations are needed.
pub fn adaptive_simpson_abs<F>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64, QuadratureFailure>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = MAX_SIMPSON_EVALS;
    let panel = Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
    };
    simpson_panel(&f, panel, abs_tol, MAX_SIMPSON_DEPTH, &mut budget).map_err(|_| {
        QuadratureFailure {
            estimate: whole,
            interval: (a, b),
        }
    })
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_panel<F>(f: &F, p: Panel, tol: f64, depth: u32, budget: &mut usize) -> Result<f64, ()>
where
    F: Fn(f64) -> f64,
{
    if *budget < 2 {
        return Err(());
    }
    *budget -= 2;
    let m = 0.5 * (p.a + p.b);
    let flm = f(0.5 * (p.a + m));
    let frm = f(0.5 * (m + p.b));
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let delta = left + right - p.whole;
    if !delta.is_finite() {
        return Err(());
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        // the panel is 2^-48 of the interval; its leftover error is negligible
        return Ok(left + right);
    }
    let lp = Panel {
        a: p.a,
        b: m,
        fa: p.fa,
        fm: flm,
        fb: p.fm,
        whole: left,
    };
    let rp = Panel {
        a: m,
        b: p.b,
        fa: p.fm,
        fm: frm,
        fb: p.fb,
        whole: right,
    };
    let l = simpson_panel(f, lp, 0.5 * tol, depth - 1, budget)?;
    let r = simpson_panel(f, rp, 0.5 * tol, depth - 1, budget)?;
    Ok(l + r)
}

/// Solves a symmetric tridiagonal system in place with the Thomas algorithm.
///
/// `diag` has length n, `off` has length n-1 (`off[i]` couples i and i+1), `rhs` is
/// overwritten with the solution. The matrix is assumed positive definite.
pub fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert!(n == 0 || off.len() + 1 == n);
    if n == 0 {
        return;
    }
    let mut c_prime = vec![0.0; n];
    let mut denom = diag[0];
    if n > 1 {
        c_prime[0] = off[0] / denom;
    }
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c_prime[i - 1];
        if i + 1 < n {
            c_prime[i] = off[i] / denom;
        }
        rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
}

/// Cumulative integral of tabulated samples on a uniform grid with spacing `h`.
///
/// Even indices use composite Simpson; odd indices add the third-order three-point
/// rule on the last panel. Entry 0 is zero.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    out[1] = if n > 2 {
        h / 12.0 * (5.0 * values[0] + 8.0 * values[1] - values[2])
    } else {
        0.5 * h * (values[0] + values[1])
    };
    for i in 2..n {
        if i % 2 == 0 {
            out[i] = out[i - 2] + h / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
        } else {
            out[i] =
                out[i - 1] + h / 12.0 * (-values[i - 2] + 8.0 * values[i - 1] + 5.0 * values[i]);
        }
    }
    out
}

/// `n` Chebyshev points of the first kind mapped into the open interval `(a, b)`.
pub fn chebyshev_points(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..n).map(move |j| {
        let theta = std::f64::consts::PI * (2 * j + 1) as f64 / (2 * n) as f64;
        mid - half * theta.cos()
    })
}

/// Logarithmically spaced samples on `[lo, hi]`, both ends included.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|x: f64| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
        let v = adaptive_simpson(|x: f64| x.sqrt(), 0.0, 4.0, 1e-10).unwrap();
        assert!((v - 16.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn simpson_gives_up_on_unattainable_tolerance() {
        // roundoff noise never meets a zero tolerance
        let noisy = |x: f64| (x * 1e8).sin() * 1e-300;
        assert!(adaptive_simpson_abs(noisy, 0.0, 1.0, 0.0).is_err());
        assert_eq!(adaptive_simpson_abs(|_| 0.0, 0.0, 1.0, 0.0), Ok(0.0));
    }

    #[test]
    fn simpson_reports_non_finite_integrand() {
        assert!(adaptive_simpson(|x: f64| 1.0 / (x - 0.5), 0.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn thomas_matches_dense_solution() {
        // 1-D Dirichlet Laplacian, rhs chosen so the answer is i+1
        let n = 6;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let x: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 2.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                s
            })
            .collect();
        solve_tridiagonal(&diag, &off, &mut rhs);
        for (a, b) in rhs.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_simpson_is_exact_for_quadratics() {
        let h = 0.1;
        let vals: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(2)).collect();
        let cum = cumulative_simpson(&vals, h);
        for (i, c) in cum.iter().enumerate().skip(1) {
            let x = i as f64 * h;
            assert!((c - x.powi(3) / 3.0).abs() < 1e-13, "i={i}");
        }
    }
}
