//! Logarithmic law for integrals over a concave potential with a turning point.
//!
//! For `g(0) = g′(0) = 0`, `g′ < 0`, `g″ < 0` on `(0, 1)`,
//!
//! ```text
//!     I(a) = ∫_a^1 dx / √(2 (g(a) − g(x))) = log(1/a) / √|g″(0)| + O(1),   a ↓ 0.
//! ```
//!
//! The half-widths `M(k)` and `N(p)` of the layer solutions are integrals of
//! exactly this kind, with `|g″(0)|` replaced by `|F0′(0)|` and `|F1′(u1)|`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{gk21, integrate, turning_point_segment, QuadOptions};
use crate::stationary::{LayerFamily, Shot};

type Fun = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `g` on `[0, 1]` with its first two derivatives.
#[derive(Clone)]
pub struct SingularIntegrand {
    g: Fun,
    dg: Fun,
    d2g: Fun,
    /// Hölder exponent and constant of `g″`, when known.
    pub holder: Option<(f64, f64)>,
}

impl std::fmt::Debug for SingularIntegrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularIntegrand")
            .field("A", &self.curvature())
            .field("holder", &self.holder)
            .finish()
    }
}

impl SingularIntegrand {
    /// Checks `g(0) = g′(0) = 0` and the signs of `g′`, `g″` on 1000 interior points.
    pub fn new<G, D, D2>(g: G, dg: D, d2g: D2) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if g(0.0) != 0.0 || dg(0.0) != 0.0 {
            return Err(Error::InvalidInput(format!(
                "integrand needs g(0) = g'(0) = 0, got {} and {}",
                g(0.0),
                dg(0.0)
            )));
        }
        for i in 1..1000 {
            let x = i as f64 / 1000.0;
            if !(dg(x) < 0.0 && d2g(x) < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "integrand needs g' < 0 and g'' < 0 on (0, 1); at x = {x}: g' = {}, g'' = {}",
                    dg(x),
                    d2g(x)
                )));
            }
        }
        Ok(Self {
            g: Arc::new(g),
            dg: Arc::new(dg),
            d2g: Arc::new(d2g),
            holder: None,
        })
    }

    pub fn with_holder(mut self, exponent: f64, constant: f64) -> Self {
        self.holder = Some((exponent, constant));
        self
    }

    /// `g = −x²/2`, for which `I(a) = arccosh(1/a)`.
    pub fn quadratic() -> Self {
        Self::new(|x| -0.5 * x * x, |x| -x, |_| -1.0)
            .expect("valid integrand")
            .with_holder(1.0, 0.0)
    }

    /// `g = −x²(1 + x)/2`.
    pub fn cubic() -> Self {
        Self::new(|x| -0.5 * x * x * (1.0 + x), |x| -x - 1.5 * x * x, |x| -1.0 - 3.0 * x)
            .expect("valid integrand")
            .with_holder(1.0, 3.0)
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    /// `A = |g″(0)|`.
    pub fn curvature(&self) -> f64 {
        (self.d2g)(0.0).abs()
    }

    /// `g(a) − g(a + t)`, accurate for small `t`.
    fn gap(&self, a: f64, t: f64) -> f64 {
        if t < 0.1 * a.max(1e-300) {
            let mut neg = |x: f64| -(self.dg)(x);
            gk21(&mut neg, a, a + t).0
        } else {
            (self.g)(a) - (self.g)(a + t)
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LayerIntegral {
    pub value: f64,
    /// `∫_a^δ`, the piece with the turning point.
    pub near: f64,
    /// `∫_δ^1`.
    pub far: f64,
}

pub const DEFAULT_SPLIT: f64 = 0.5;

fn opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 2000,
    }
}

/// `I(a)` split at `δ = 1/2`.
pub fn layer_integral(s: &SingularIntegrand, a: f64) -> Result<LayerIntegral> {
    layer_integral_split(s, a, DEFAULT_SPLIT)
}

pub fn layer_integral_split(s: &SingularIntegrand, a: f64, delta: f64) -> Result<LayerIntegral> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidInput(format!("layer integral needs 0 < a < 1, got {a}")));
    }
    // the far piece must stay clear of the turning point
    let split = if delta >= 2.0 * a && delta < 1.0 { delta } else { 1.0 };
    let near = turning_point_segment(|t| s.gap(a, t), 0.0, split - a, a, &opts())?.value;
    let ga = s.g(a);
    let far = if split < 1.0 {
        integrate(|x| 1.0 / (2.0 * (ga - s.g(x))).sqrt(), split, 1.0, &opts())?.value
    } else {
        0.0
    };
    Ok(LayerIntegral {
        value: near + far,
        near,
        far,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitRow {
    pub a: f64,
    pub value: f64,
    pub log_inv_a: f64,
    /// Distance to the fitted line.
    pub residual: f64,
    /// `value − log(1/a)·law_slope`, the `O(1)` remainder.
    pub remainder: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogSlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Slope the log law predicts.
    pub law_slope: f64,
    /// Smallest and largest remainder about the predicted law.
    pub band: (f64, f64),
    pub rows: Vec<FitRow>,
}

impl LogSlopeFit {
    pub fn band_width(&self) -> f64 {
        self.band.1 - self.band.0
    }
}

/// Least-squares line `value ≈ slope·log(1/a) + intercept`, with the
/// remainder band taken about `law_slope·log(1/a)`.
pub fn fit_log_law(points: &[(f64, f64)], law_slope: f64) -> Result<LogSlopeFit> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("log-law fit needs at least two points".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| (1.0 / p.0).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rows: Vec<FitRow> = xs
        .iter()
        .zip(points)
        .map(|(&x, p)| FitRow {
            a: p.0,
            value: p.1,
            log_inv_a: x,
            residual: p.1 - slope * x - intercept,
            remainder: p.1 - law_slope * x,
        })
        .collect();
    let band = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |b, r| (b.0.min(r.remainder), b.1.max(r.remainder)));
    Ok(LogSlopeFit {
        slope,
        intercept,
        law_slope,
        band,
        rows,
    })
}

/// Slope of `I(a)` against `log(1/a)`; `a_sequence` must be geometric, span
/// at least three decades and stay below 0.1.
pub fn log_slope_fit(s: &SingularIntegrand, a_sequence: &[f64]) -> Result<LogSlopeFit> {
    let n = a_sequence.len();
    if n < 3 {
        return Err(Error::InvalidInput("need at least three values of a".into()));
    }
    let (lo, hi) = a_sequence
        .iter()
        .fold((f64::INFINITY, 0.0f64), |b, &a| (b.0.min(a), b.1.max(a)));
    if !(hi < 0.1 && lo > 0.0) || (hi / lo).log10() < 3.0 - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "a sequence must lie in (0, 0.1) and span three decades, got [{lo:e}, {hi:e}]"
        )));
    }
    let ratio = a_sequence[1] / a_sequence[0];
    if a_sequence.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) {
        return Err(Error::InvalidInput("a sequence must be geometric".into()));
    }
    let pts: Vec<(f64, f64)> = a_sequence
        .par_iter()
        .map(|&a| Ok((a, layer_integral(s, a)?.value)))
        .collect::<Result<_>>()?;
    fit_log_law(&pts, 1.0 / s.curvature().sqrt())
}

/// `a_j = hi · 10^(−j·decades/(n−1))`.
pub fn geometric_sequence(hi: f64, decades: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|j| hi * 10f64.powf(-decades * j as f64 / (n - 1) as f64)).collect()
}

/// Log-law fits of `M` against `log(1/k)` and of `N` against `log(1/(u1 − p))`
/// along shots approaching the supremum slope.
pub fn half_width_fits(family: &LayerFamily, gaps: &[f64]) -> Result<(LogSlopeFit, LogSlopeFit)> {
    let sols: Vec<(f64, f64, f64, f64)> = gaps
        .par_iter()
        .map(|&r| {
            let s = family.solve(Shot::Gap(r))?;
            Ok((s.k, s.m_half, s.u1_minus_p(), s.n_half))
        })
        .collect::<Result<_>>()?;
    let m: Vec<(f64, f64)> = sols.iter().map(|s| (s.0, s.1)).collect();
    let n: Vec<(f64, f64)> = sols.iter().map(|s| (s.2, s.3)).collect();
    let (a, b) = family.potentials().log_slopes();
    Ok((fit_log_law(&m, a)?, fit_log_law(&n, b)?))
}
