//! Dormand–Prince 5(4) with continuous output and terminal events.

use crate::error::{Error, Result};
use crate::roots::{brent_with, RootOptions};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

/// One accepted step with its quartic interpolant.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }

    pub fn start(&self) -> [f64; N] {
        self.r[0]
    }
}

#[derive(Debug, Clone, Default)]
pub struct DenseSolution<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(f64::NAN, |s| s.t0)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.t0 + s.h)
    }

    /// Evaluates the interpolant; `t` is clamped to the integrated range.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let i = self.steps.partition_point(|s| s.t0 + s.h < t);
        let step = &self.steps[i.min(self.steps.len() - 1)];
        step.eval(t.clamp(step.t0, step.t0 + step.h))
    }

    /// Step start points followed by the final point.
    pub fn nodes(&self) -> Vec<(f64, [f64; N])> {
        let mut out: Vec<_> = self.steps.iter().map(|s| (s.t0, s.start())).collect();
        if let Some(last) = self.steps.last() {
            out.push((last.t0 + last.h, last.eval(last.t0 + last.h)));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct OdeOutcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dense: DenseSolution<N>,
    /// True when integration stopped at a zero of the event function.
    pub event: bool,
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = rhs(t, y)` forward from `t0` to `t_end`.
pub fn solve<const N: usize, F>(rhs: F, t0: f64, y0: [f64; N], t_end: f64, opts: &OdeOptions) -> Result<OdeOutcome<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    solve_with_event(rhs, t0, y0, t_end, opts, |_: f64, _: &[f64; N]| 1.0)
}

/// As [`solve`], stopping at the first sign change of `event(t, y)`.
pub fn solve_with_event<const N: usize, F, G>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut event: G,
) -> Result<OdeOutcome<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    G: FnMut(f64, &[f64; N]) -> f64,
{
    if !(t_end > t0) {
        return Err(Error::Ode {
            t: t0,
            reason: format!("end time {t_end} does not exceed start time {t0}"),
        });
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut g_prev = event(t, &y);
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(&mut rhs, t, &y, &k1, opts))
        .min(opts.h_max)
        .min(t_end - t0);
    let mut dense = DenseSolution { steps: Vec::new() };
    let mut accepted = 0;
    let mut rejected = 0;

    for _ in 0..opts.max_steps {
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let y2 = axpy(&y, h, &[(A21, &k1)]);
        let k2 = rhs(t + C2 * h, &y2);
        let y3 = axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + C3 * h, &y3);
        let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + C4 * h, &y4);
        let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + C5 * h, &y5);
        let y6 = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = rhs(t + h, &y6);
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t + h, &y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.1;
            rejected += 1;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Ode {
                    t,
                    reason: "non-finite solution".into(),
                });
            }
            continue;
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
        if err > 1.0 {
            h *= fac.min(1.0);
            rejected += 1;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Ode {
                    t,
                    reason: "step size underflow".into(),
                });
            }
            continue;
        }

        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let step = DenseStep { t0: t, h, r };
        accepted += 1;
        let t_new = t + h;
        let g_new = event(t_new, &y_new);
        if g_new == 0.0 || g_prev * g_new < 0.0 {
            let t_hit = if g_new == 0.0 {
                t_new
            } else {
                let ev = &mut event;
                brent_with(
                    |s| ev(s, &step.eval(s)),
                    t,
                    t_new,
                    g_prev,
                    g_new,
                    &RootOptions {
                        x_abs: 1e-15 * h.abs(),
                        x_rel: 2.0 * f64::EPSILON,
                        max_iter: 200,
                    },
                )?
            };
            let y_hit = step.eval(t_hit);
            dense.steps.push(step);
            return Ok(OdeOutcome {
                t: t_hit,
                y: y_hit,
                dense,
                event: true,
                accepted,
                rejected,
            });
        }
        dense.steps.push(step);
        t = t_new;
        y = y_new;
        k1 = k7;
        g_prev = g_new;
        if last {
            return Ok(OdeOutcome {
                t,
                y,
                dense,
                event: false,
                accepted,
                rejected,
            });
        }
        h = (h * fac).min(opts.h_max);
    }
    Err(Error::Ode {
        t,
        reason: format!("exceeded {} steps", opts.max_steps),
    })
}

fn initial_step<const N: usize, F>(rhs: &mut F, t: f64, y: &[f64; N], f0: &[f64; N], opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let norm = |v: &[f64; N]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let f1 = rhs(t + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_weights_are_consistent() {
        // the interpolant must reproduce the fifth-order solution at θ = 1, which
        // holds for any d; the d's must sum to zero so constants are untouched
        let s = D1 + D3 + D4 + D5 + D6 + D7;
        assert!(s.abs() < 1e-13, "{s}");
        // propagation weights sum to one
        assert!((A71 + A73 + A74 + A75 + A76 - 1.0).abs() < 1e-15);
        assert!((E1 + E3 + E4 + E5 + E6 + E7).abs() < 1e-16);
    }

    #[test]
    fn exponential_growth() {
        let out = solve(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, &OdeOptions::default()).unwrap();
        assert!((out.y[0] - 2f64.exp()).abs() < 1e-8);
        for k in 0..40 {
            let t = 0.05 * k as f64 + 0.013;
            assert!((out.dense.eval(t)[0] - t.exp()).abs() < 2e-8 * t.exp());
        }
    }

    #[test]
    fn dense_output_is_fourth_order() {
        // single fixed step of y' = cos t: interpolation error scales like h^5
        let mut errs = Vec::new();
        for &h in &[0.4, 0.2] {
            let opts = OdeOptions {
                h_init: Some(h),
                rtol: 1.0,
                atol: 1.0,
                ..OdeOptions::default()
            };
            let out = solve(|t, _: &[f64; 1]| [t.cos()], 0.0, [0.0], h, &opts).unwrap();
            assert_eq!(out.accepted, 1);
            let t = 0.37 * h;
            errs.push((out.dense.eval(t)[0] - t.sin()).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 4.5, "observed dense order {order}");
    }

    #[test]
    fn event_stops_at_crossing() {
        // harmonic oscillator from (1, 0): x crosses zero at π/2
        let out = solve_with_event(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &OdeOptions::default(),
            |_, y| y[0],
        )
        .unwrap();
        assert!(out.event);
        assert!((out.t - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
        assert!((out.y[1] + 1.0).abs() < 1e-8);
    }
}
