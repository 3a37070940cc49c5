//! One side of a layer solution, written relative to its equilibrium.
//!
//! A well is anchored at an equilibrium `(u_a, v_a)` lying on a stable branch
//! of `g = 0`. The coordinate `z ≥ 0` is the distance from the anchor into the
//! layer (`u = u_a + sgn·z`) and `φ(z) ≥ 0` the restoring force, so that the
//! stretched profile obeys `z'' = φ(z)` with energy `G(z) = ∫_0^z φ`.
//!
//! Writing the branch as `v = v_a + w` with
//!
//! ```text
//!     (δ/m4) w [1 + σ(3v_a² + 3v_a w + w²) − β_l(2v_a + w)] = s,   s = u − u_a,
//! ```
//!
//! keeps full relative accuracy of `φ` and `G` as `z → 0`, which is what lets
//! the turning values approach the anchor by hundreds of decades.

use crate::error::{Error, Result};
use crate::kinetics::Kinetics;
use crate::quad::{integrate, turning_point_segment, QuadOptions};
use crate::roots::{newton_bracketed, newton_with_signs, RootOptions};

const CACHE_CELLS: usize = 1024;
/// Smallest offset handed to the quadrature kernels.
pub(crate) const Z_FLOOR: f64 = 1e-280;

fn energy_quad() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-14,
        max_intervals: 4000,
    }
}

fn kernel_quad() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

fn root_opts() -> RootOptions {
    RootOptions {
        x_abs: 0.0,
        x_rel: 4.0 * f64::EPSILON,
        max_iter: 400,
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Well {
    kin: Kinetics,
    pub u_a: f64,
    pub v_a: f64,
    pub sgn: f64,
    /// Distance from the anchor to the fold ending the branch.
    pub z_max: f64,
    v_lo: f64,
    v_hi: f64,
    /// `φ′(0) = |F′(u_a)|`.
    pub stiffness: f64,
    h: f64,
    cum: Vec<f64>,
}

impl Well {
    /// `v` range of the branch is `[v_lo, v_hi]`.
    pub fn new(kin: Kinetics, u_a: f64, v_a: f64, sgn: f64, z_max: f64, v_lo: f64, v_hi: f64) -> Result<Self> {
        let mut well = Self {
            kin,
            u_a,
            v_a,
            sgn,
            z_max,
            v_lo,
            v_hi,
            stiffness: 0.0,
            h: z_max / CACHE_CELLS as f64,
            cum: Vec::new(),
        };
        well.stiffness = well.phi_prime(0.0)?;
        if !(well.stiffness > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "equilibrium u = {u_a} is not a strict minimum of the layer potential (F' = {})",
                -well.stiffness
            )));
        }
        let mut cum = Vec::with_capacity(CACHE_CELLS + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..CACHE_CELLS {
            let a = i as f64 * well.h;
            let b = if i + 1 == CACHE_CELLS { z_max } else { (i + 1) as f64 * well.h };
            acc += well.direct(a, b - a)?;
            cum.push(acc);
        }
        well.cum = cum;
        Ok(well)
    }

    /// Branch offset `w = h(u_a + s) − v_a`.
    pub fn w_of_s(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let p = self.kin.params();
        let (va, k) = (self.v_a, p.delta / p.m4);
        let q = |w: f64| k * w * (1.0 + p.sigma * (3.0 * va * va + 3.0 * va * w + w * w) - p.beta_l * (2.0 * va + w)) - s;
        let (lo, hi) = if s > 0.0 {
            let mut hi = self.v_hi - va;
            if !hi.is_finite() {
                hi = va.max(1.0);
                while q(hi) < 0.0 {
                    hi *= 2.0;
                }
            }
            (0.0, hi)
        } else {
            (self.v_lo - va, 0.0)
        };
        let guess = (s / self.kin.psi_prime(va)).clamp(lo, hi);
        let kin = self.kin;
        newton_bracketed(|w| (q(w), kin.psi_prime(va + w)), lo, hi, guess, &root_opts())
    }

    /// `Φ(u_a + s) − Φ(u_a)`.
    fn dphi(&self, s: f64) -> f64 {
        let (c, k, bp) = self.kin.sink_constants();
        let mu3 = self.kin.params().mu3;
        mu3 * s + c * k * s / ((k + bp * (self.u_a + s)) * (k + bp * self.u_a))
    }

    /// `F(u) = f(u, h(u))` at `u = u_a + s`.
    pub fn reaction(&self, s: f64) -> Result<f64> {
        Ok(self.w_of_s(s)? - self.dphi(s))
    }

    /// Branch value `h(u_a + s)`.
    pub fn branch_v(&self, s: f64) -> Result<f64> {
        Ok(self.v_a + self.w_of_s(s)?)
    }

    pub fn phi(&self, z: f64) -> Result<f64> {
        Ok(-self.sgn * self.reaction(self.sgn * z)?)
    }

    pub fn phi_prime(&self, z: f64) -> Result<f64> {
        let s = self.sgn * z;
        let w = self.w_of_s(s)?;
        Ok(self.kin.phi_prime(self.u_a + s) - 1.0 / self.kin.psi_prime(self.v_a + w))
    }

    fn phi_unchecked(&self, z: f64) -> f64 {
        self.phi(z).unwrap_or(f64::NAN)
    }

    /// `∫_0^t φ(base + τ) dτ` by adaptive quadrature.
    fn direct(&self, base: f64, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let r = integrate(|tau| self.phi_unchecked(base + tau), 0.0, t, &energy_quad())?;
        if !r.value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "layer potential undefined on [{base:e}, {:e}]",
                base + t
            )));
        }
        Ok(r.value)
    }

    /// `G(z) = ∫_0^z φ`.
    pub fn energy(&self, z: f64) -> Result<f64> {
        if z <= 2.0 * self.h || z > self.z_max {
            return self.direct(0.0, z);
        }
        let i = ((z / self.h).floor() as usize).min(CACHE_CELLS - 1);
        let zi = i as f64 * self.h;
        Ok(self.cum[i] + self.direct(zi, z - zi)?)
    }

    /// `∫_base^{base+t} φ`, accurate relative to itself for every `t ≥ 0`.
    pub fn energy_from(&self, base: f64, t: f64) -> Result<f64> {
        if t <= 2.0 * self.h || base < 0.0 || base + t > self.z_max {
            return self.direct(base, t);
        }
        Ok(self.energy(base + t)? - self.energy(base)?)
    }

    /// `z` in `(0, z_lim)` with `G(z) = r`.
    pub fn turning_from_gap(&self, r: f64, z_lim: f64) -> Result<f64> {
        let guess = (2.0 * r / self.stiffness).sqrt();
        newton_bracketed(
            |z| match (self.energy(z), self.phi(z)) {
                (Ok(g), Ok(d)) => (g - r, d),
                _ => (f64::NAN, f64::NAN),
            },
            0.0,
            z_lim,
            guess,
            &root_opts(),
        )
    }

    /// Drop `t` in `(0, z_b)` with `∫_{z_b−t}^{z_b} φ = e`.
    pub fn drop_from_energy(&self, z_b: f64, e: f64) -> Result<f64> {
        let guess = e / self.phi(z_b)?;
        newton_bracketed(
            |t| match (self.energy_from(z_b - t, t), self.phi(z_b - t)) {
                (Ok(g), Ok(d)) => (g - e, d),
                _ => (f64::NAN, f64::NAN),
            },
            0.0,
            z_b,
            guess,
            &root_opts(),
        )
    }

    /// Stretched distance from the turning point `z_t` to `z_t + t`.
    pub fn stretched_span(&self, z_t: f64, t_lo: f64, t_hi: f64) -> Result<f64> {
        let scale = z_t.max(Z_FLOOR);
        let r = turning_point_segment(
            |tau| self.energy_from(z_t, tau).unwrap_or(f64::NAN),
            t_lo,
            t_hi,
            scale,
            &kernel_quad(),
        )?;
        if !r.value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "half-width integral undefined from z = {z_t:e}"
            )));
        }
        Ok(r.value)
    }

    /// Table of the stretched distance `H(t)` on graded nodes for inversion.
    pub fn inversion_table(&self, z_t: f64, span: f64) -> Result<InversionTable> {
        let scale = z_t.max(Z_FLOOR).min(span);
        let mut t = Vec::new();
        let n_sqrt = 48;
        for i in 0..=n_sqrt {
            let s = i as f64 / n_sqrt as f64;
            t.push(scale * s * s);
        }
        if span > scale {
            let decades = (span / scale).log10();
            let n_log = ((decades * 12.0).ceil() as usize).max(24);
            for i in 1..=n_log {
                t.push(scale * (span / scale).powf(i as f64 / n_log as f64));
            }
        }
        let last = t.len() - 1;
        t[last] = span;
        let mut h = vec![0.0; t.len()];
        for i in 1..t.len() {
            h[i] = h[i - 1] + self.stretched_span(z_t, t[i - 1], t[i])?;
        }
        Ok(InversionTable { z_t, t, h })
    }

    /// `dH/ds` at `t = s²`.
    fn span_slope(&self, z_t: f64, s: f64) -> Option<f64> {
        let d = if s == 0.0 {
            2.0 / (2.0 * self.phi(z_t).ok()?).sqrt()
        } else {
            2.0 * s / (2.0 * self.energy_from(z_t, s * s).ok()?).sqrt()
        };
        d.is_finite().then_some(d)
    }

    /// Root of the cubic Hermite interpolant of `H` in `s = √t` on table cell `i`.
    fn hermite_guess(&self, table: &InversionTable, i: usize, eta: f64) -> Option<f64> {
        let (s0, s1) = (table.t[i].sqrt(), table.t[i + 1].sqrt());
        let (h0, h1) = (table.h[i], table.h[i + 1]);
        let w = s1 - s0;
        let (m0, m1) = (w * self.span_slope(table.z_t, s0)?, w * self.span_slope(table.z_t, s1)?);
        let p = |x: f64| {
            let (x2, x3) = (x * x, x * x * x);
            (2.0 * x3 - 3.0 * x2 + 1.0) * h0 + (x3 - 2.0 * x2 + x) * m0 + (-2.0 * x3 + 3.0 * x2) * h1 + (x3 - x2) * m1
        };
        let dp = |x: f64| {
            let x2 = x * x;
            (6.0 * x2 - 6.0 * x) * (h0 - h1) + (3.0 * x2 - 4.0 * x + 1.0) * m0 + (3.0 * x2 - 2.0 * x) * m1
        };
        let mut x = (eta - h0) / (h1 - h0);
        for _ in 0..6 {
            x = (x - (p(x) - eta) / dp(x)).clamp(0.0, 1.0);
        }
        let s = s0 + x * w;
        (s.is_finite() && s > s0 && s < s1).then_some(s)
    }

    /// `t` with `H(t) = eta`.
    pub fn invert(&self, table: &InversionTable, eta: f64) -> Result<f64> {
        let (t, h) = (&table.t, &table.h);
        let total = *h.last().unwrap();
        if eta <= 0.0 {
            return Ok(0.0);
        }
        if eta >= total {
            return Ok(*t.last().unwrap());
        }
        let i = h.partition_point(|&x| x <= eta).clamp(1, h.len() - 1) - 1;
        let (t0, t1) = (t[i], t[i + 1]);
        let (s0, s1) = (t0.sqrt(), t1.sqrt());
        let z_t = table.z_t;
        let fdf = |s: f64| {
            let ts = s * s;
            let val = if ts <= t0 {
                h[i]
            } else {
                h[i] + self.stretched_span(z_t, t0, ts).unwrap_or(f64::NAN)
            };
            let g = self.energy_from(z_t, ts).unwrap_or(f64::NAN);
            let d = if s == 0.0 {
                2.0 / (2.0 * self.phi(z_t).unwrap_or(f64::NAN)).sqrt()
            } else {
                2.0 * s / (2.0 * g).sqrt()
            };
            (val - eta, d)
        };
        let guess = self.hermite_guess(table, i, eta).unwrap_or(s0 + (eta - h[i]) / (h[i + 1] - h[i]) * (s1 - s0));
        let opts = RootOptions {
            x_abs: 0.0,
            x_rel: 1e-14,
            max_iter: 200,
        };
        match newton_with_signs(fdf, s0, s1, true, guess, &opts) {
            Ok(s) => Ok(s * s),
            // eta within rounding of a node
            Err(Error::Root(_)) if (h[i + 1] - eta).abs() <= 1e-13 * total => Ok(t1),
            Err(e) => Err(e),
        }
    }
}

/// Graded nodes `t_i` with cumulative stretched distance `H(t_i)`.
#[derive(Debug, Clone)]
pub(crate) struct InversionTable {
    pub z_t: f64,
    pub t: Vec<f64>,
    pub h: Vec<f64>,
}
