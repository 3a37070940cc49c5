//! Adaptive Gauss–Kronrod quadrature and the turning-point kernel.
//!
//! The turning-point kernel evaluates integrals of the form
//!
//! ```text
//!     ∫_0^span dt / sqrt(2 G(t)),     G(0) = 0,  G'(0) > 0,
//! ```
//!
//! which appear both in the layer half-widths and in the small-parameter
//! integral of the asymptotics module. The inverse square-root singularity at
//! `t = 0` is removed with `t = t1 σ²`; beyond the natural length scale of the
//! problem the remaining range is integrated in `τ = ln t`, where the integrand
//! is nearly flat even when `span / scale` covers hundreds of decades.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn tight() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-14,
            max_intervals: 4000,
        }
    }

    pub fn with_rel(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// 10-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss10<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for j in 0..5 {
        let dx = half * XGK[2 * j + 1];
        acc += WG[j] * (f(center - dx) + f(center + dx));
    }
    acc * half
}

/// 21-point Kronrod rule with embedded 10-point Gauss rule on `[a, b]`.
///
/// Returns `(kronrod, error_estimate, ∫|f|)` with the QUADPACK error rescaling.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = fc.abs() * WGK[10];
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let res_k = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g * half) as f64).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k, err, res_abs)
}

/// Globally adaptive bisection driven by the 21-point Kronrod rule.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error, abs_value) = gk21(&mut f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value,
        error,
        abs_value,
    });
    let mut total = value;
    let mut total_err = error;
    let mut total_abs = abs_value;
    // intervals too narrow to split are retired here with their error
    let mut retired_err = 0.0;
    let mut retired_val = 0.0;

    loop {
        let target = opts
            .abs_tol
            .max(opts.rel_tol * total.abs())
            .max(100.0 * f64::EPSILON * total_abs);
        if total_err <= target {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                a,
                b,
                achieved: total_err,
                requested: target,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b))
            || (worst.b - worst.a).abs() <= 1e3 * f64::EPSILON * worst.a.abs().max(worst.b.abs())
        {
            retired_err += worst.error;
            retired_val += worst.value;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1, r1) = gk21(&mut f, worst.a, mid);
        let (v2, e2, r2) = gk21(&mut f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_abs += r1 + r2 - worst.abs_value;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            abs_value: r1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            abs_value: r2,
        });
    }
    // Recompute from the panels to shed accumulated update rounding.
    let value = heap.iter().map(|p| p.value).sum::<f64>() + retired_val;
    let error = heap.iter().map(|p| p.error).sum::<f64>() + retired_err;
    let target = opts
        .abs_tol
        .max(opts.rel_tol * value.abs())
        .max(100.0 * f64::EPSILON * total_abs);
    if retired_err > target {
        return Err(Error::Quadrature {
            a,
            b,
            achieved: error,
            requested: target,
        });
    }
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// `∫_ta^tb dt / sqrt(2 gap(t))` for `0 <= ta <= tb`, where `gap` has a simple
/// zero at `t = 0` and `scale` is the length over which `gap` is linear.
pub fn turning_point_segment<G: FnMut(f64) -> f64>(
    mut gap: G,
    ta: f64,
    tb: f64,
    scale: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    debug_assert!(ta >= 0.0 && tb >= ta && scale > 0.0);
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    if tb <= ta {
        return Ok(out);
    }
    let split = scale.clamp(ta, tb);
    if split > ta {
        // t = σ², dt = 2σ dσ
        let r = integrate(
            |sigma: f64| {
                let t = sigma * sigma;
                let g = gap(t);
                if g > 0.0 {
                    2.0 * sigma / (2.0 * g).sqrt()
                } else {
                    0.0
                }
            },
            ta.sqrt(),
            split.sqrt(),
            opts,
        )?;
        accumulate(&mut out, r);
    }
    if tb > split {
        // t = e^τ, dt = t dτ
        let r = integrate(
            |tau: f64| {
                let t = tau.exp();
                let g = gap(t);
                if g > 0.0 {
                    t / (2.0 * g).sqrt()
                } else {
                    0.0
                }
            },
            split.ln(),
            tb.ln(),
            opts,
        )?;
        accumulate(&mut out, r);
    }
    Ok(out)
}

/// `∫_0^span dt / sqrt(2 gap(t))`; see [`turning_point_segment`].
pub fn turning_point_integral<G: FnMut(f64) -> f64>(
    gap: G,
    span: f64,
    scale: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    turning_point_segment(gap, 0.0, span, scale, opts)
}

fn accumulate(out: &mut QuadResult, r: QuadResult) {
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
}
