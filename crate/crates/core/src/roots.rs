//! Scalar root finding: bisection, Brent, and bracketed Newton.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub x_abs: f64,
    pub x_rel: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            x_abs: 0.0,
            x_rel: 4.0 * f64::EPSILON,
            max_iter: 400,
        }
    }
}

fn tol(opts: &RootOptions, x: f64) -> f64 {
    (opts.x_abs + opts.x_rel * x.abs()).max(f64::MIN_POSITIVE)
}

fn check_bracket(fa: f64, fb: f64, a: f64, b: f64) -> Result<()> {
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::Root(format!(
            "non-finite value at bracket [{a:e}, {b:e}]: f = ({fa:e}, {fb:e})"
        )));
    }
    if fa * fb > 0.0 {
        return Err(Error::Root(format!(
            "no sign change on [{a:e}, {b:e}]: f = ({fa:e}, {fb:e})"
        )));
    }
    Ok(())
}

/// Plain bisection; useful when `f` is only piecewise smooth.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, opts: &RootOptions) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    check_bracket(fa, fb, a, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    for _ in 0..opts.max_iter.max(2200) {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol(opts, m) || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Brent's method on a sign-changing bracket.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: &RootOptions) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    brent_with(f, a, b, fa, fb, opts)
}

/// Brent's method with the endpoint values already known.
pub fn brent_with<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    opts: &RootOptions,
) -> Result<f64> {
    check_bracket(fa, fb, a, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let t = 0.5 * tol(opts, b) + 2.0 * f64::EPSILON * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= t || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= t && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (t * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > t { d } else { t.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Root(format!("non-finite function value at {b:e}")));
        }
    }
    Err(Error::Root(format!(
        "brent did not converge in {} iterations near {b:e}",
        opts.max_iter
    )))
}

/// Newton's method safeguarded by a sign-changing bracket `[lo, hi]`.
///
/// `fdf` returns the value and derivative. Steps leaving the bracket, or
/// failing to halve it, fall back to bisection; on positive brackets spanning
/// more than a factor 8 the bisection is geometric so that roots many decades
/// below `hi` are reached in logarithmically many steps.
pub fn newton_bracketed<F: FnMut(f64) -> (f64, f64)>(
    mut fdf: F,
    lo: f64,
    hi: f64,
    x0: f64,
    opts: &RootOptions,
) -> Result<f64> {
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    check_bracket(flo, fhi, lo, hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    newton_with_signs(fdf, lo, hi, flo < 0.0, x0, opts)
}

/// [`newton_bracketed`] for a bracket whose end signs are already known:
/// `f(lo) < 0` exactly when `lo_neg`, and `f(hi)` has the other sign.
pub fn newton_with_signs<F: FnMut(f64) -> (f64, f64)>(
    mut fdf: F,
    mut lo: f64,
    mut hi: f64,
    lo_neg: bool,
    x0: f64,
    opts: &RootOptions,
) -> Result<f64> {
    let mut x = if x0 > lo && x0 < hi { x0 } else { split(lo, hi) };
    let mut step_old = (hi - lo).abs();
    for _ in 0..opts.max_iter {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if !fx.is_finite() {
            return Err(Error::Root(format!("non-finite function value at {x:e}")));
        }
        if (fx < 0.0) == lo_neg {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol(opts, x) {
            return Ok(x);
        }
        let newton = x - fx / dfx;
        let usable = dfx != 0.0
            && newton.is_finite()
            && newton > lo
            && newton < hi
            && (newton - x).abs() < 0.5 * step_old;
        let next = if usable { newton } else { split(lo, hi) };
        step_old = (next - x).abs();
        if step_old <= tol(opts, x) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Root(format!(
        "bracketed newton did not converge in [{lo:e}, {hi:e}]"
    )))
}

/// Midpoint of a bracket, geometric when both ends are positive and far apart.
pub fn split(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > 8.0 * lo {
        (lo.ln() * 0.5 + hi.ln() * 0.5).exp().clamp(lo, hi)
    } else if lo == 0.0 && hi > 0.0 && hi > 1e-300 {
        // treat the open end as the smallest normal scale we care about
        (1e-300f64.ln() * 0.5 + hi.ln() * 0.5).exp()
    } else {
        0.5 * (lo + hi)
    }
}

/// Scans `[a, b]` on `n` uniform cells and refines every sign change with Brent.
pub fn all_roots<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize, opts: &RootOptions) -> Result<Vec<f64>> {
    let n = n.max(1);
    let mut roots = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a);
    if f0 == 0.0 {
        roots.push(a);
    }
    for i in 1..=n {
        let x1 = a + (b - a) * i as f64 / n as f64;
        let f1 = f(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && f0 * f1 < 0.0 {
            roots.push(brent_with(&mut f, x0, x1, f0, f1, opts)?);
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(roots)
}
