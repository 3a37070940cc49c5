use serde::Serialize;

use super::{simulate_observed, SimState, StepControl, SystemKind};
use crate::error::{Error, Result};
use crate::kinetics::Kinetics;

/// Box `(0, ρ3) × (0, ρ4)` for `(u3, u4)` together with the bound on `u1 + u2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantRectangle {
    pub rho3: f64,
    pub rho4: f64,
    /// `m1/μ_B + max(u1⁰ + u2⁰)`.
    pub m_bound: f64,
    pub m_prime: f64,
    /// Where the line `u4 = μ3 u3 − d M′` meets `G = 0`.
    pub rho_star: f64,
}

const SCAN: usize = 4000;

/// `Ψ(v) − (v + d M′)/μ3` on a `v` grid wide enough to hold every crossing.
fn crossings(kin: &Kinetics, m_prime: f64) -> Vec<f64> {
    let p = kin.params();
    let h = |v: f64| kin.psi(v) - (v + p.d * m_prime) / p.mu3;
    // beyond this v the cubic term dominates the line
    let v_max = {
        let mut v = 1.0;
        while !(h(v) > 0.0 && kin.psi_prime(v) > 1.0 / p.mu3 && kin.psi_second(v) > 0.0) {
            v *= 2.0;
        }
        v
    };
    let mut out = Vec::new();
    let mut prev = (0.0, h(0.0));
    for i in 1..=SCAN {
        let v = v_max * i as f64 / SCAN as f64;
        let hv = h(v);
        if prev.1 * hv <= 0.0 && prev.1 != 0.0 {
            let (mut a, mut b) = (prev.0, v);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if (h(mid) < 0.0) == (prev.1 < 0.0) {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = (v, hv);
    }
    out
}

/// Invariant box containing the range of a full-system state.
pub fn invariant_rectangle(init: &SimState, kin: &Kinetics) -> Result<InvariantRectangle> {
    if init.kind != SystemKind::Full {
        return Err(Error::InvalidInput("invariant rectangle needs a four-field state".into()));
    }
    if init.min_value() <= 0.0 {
        return Err(Error::InvalidInput("initial data must be positive".into()));
    }
    let p = kin.params();
    let mu_b = p.mu1.min(p.mu2);
    let mass0 = init.fields[0]
        .iter()
        .zip(&init.fields[1])
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    let m_bound = p.m1 / mu_b + mass0;

    let single = |m: f64| crossings(kin, m).len() == 1;
    let m_prime = if single(m_bound) {
        m_bound
    } else {
        let mut hi = 2.0 * m_bound;
        while !single(hi) {
            hi *= 2.0;
        }
        let mut lo = m_bound;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if single(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let v_star = crossings(kin, m_prime)[0];
    let rho_star = kin.psi(v_star);

    let (_, u3_max) = init.field_range(2);
    let (_, u4_max) = init.field_range(3);
    let mut rho3 = 1.1 * rho_star.max(u3_max);
    while p.mu3 * rho3 - p.d * m_prime <= 1.1 * u4_max {
        rho3 *= 1.5;
    }
    Ok(InvariantRectangle {
        rho3,
        rho4: p.mu3 * rho3 - p.d * m_prime,
        m_bound,
        m_prime,
        rho_star,
    })
}

impl InvariantRectangle {
    /// Every point strictly inside the box and under the mass bound.
    pub fn contains(&self, s: &SimState) -> bool {
        (0..s.grid.n_cells).all(|i| {
            s.fields[0][i] + s.fields[1][i] <= self.m_bound + 1e-9
                && s.fields[2][i] < self.rho3
                && s.fields[3][i] < self.rho4
        })
    }

    /// Largest `F(ρ3, u4)` over the right edge and `G(u3, ρ4)` over the top
    /// edge, sampling `n` points of each with receptors anywhere in the
    /// mass-bounded triangle.
    pub fn edge_maxima(&self, kin: &Kinetics, n: usize) -> (f64, f64) {
        let mut f_max = f64::NEG_INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            // worst receptor split: no free receptors, all mass bound
            let y = [0.0, self.m_prime, self.rho3, t * self.rho4];
            f_max = f_max.max(kin.full_reaction(&y)[2]);
            let y = [0.0, 0.0, t * self.rho3, self.rho4];
            g_max = g_max.max(kin.full_reaction(&y)[3]);
        }
        (f_max, g_max)
    }
}

/// Outcome of a run monitored against its invariant rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub rectangle: InvariantRectangle,
    /// First time the state left the rectangle, if ever.
    pub exit_time: Option<f64>,
    /// Smallest field value over all steps.
    pub min_value: f64,
    /// Largest `u1 + u2 − M` over all steps.
    pub mass_excess: f64,
}

impl BoundednessReport {
    pub fn passed(&self, positivity_tol: f64) -> bool {
        self.exit_time.is_none() && self.min_value > -positivity_tol && self.mass_excess <= 1e-9
    }
}

/// Simulates the full system and checks the rectangle after every step.
pub fn bounded_run(init: &SimState, kin: &Kinetics, t_end: f64, control: &StepControl) -> Result<BoundednessReport> {
    let rectangle = invariant_rectangle(init, kin)?;
    let mut exit_time = None;
    let mut mass_excess = f64::NEG_INFINITY;
    let traj = simulate_observed(init, kin, t_end, control, |s| {
        if exit_time.is_none() && !rectangle.contains(s) {
            exit_time = Some(s.time);
        }
        let mass = s.fields[0].iter().zip(&s.fields[1]).map(|(a, b)| a + b).fold(0.0, f64::max);
        mass_excess = mass_excess.max(mass - rectangle.m_bound);
        Ok(())
    })?;
    Ok(BoundednessReport {
        rectangle,
        exit_time,
        min_value: traj.min_value,
        mass_excess,
    })
}
