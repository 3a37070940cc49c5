//! Monotone stationary solutions of the reduced problem
//!
//! ```text
//!     (1/γ) u'' + f(u, v) = 0,   g(u, v) = 0,   u'(0) = u'(1) = 0,
//! ```
//!
//! with `v = h0(u)` left of a jump point `l` and `v = h1(u)` right of it.
//! In the stretched variable `y = √γ x` each side is a conservative
//! oscillator `u_yy = −F_j(u)`, so the whole family at fixed jump value `β`
//! follows from the energy integrals of `F0` and `F1`.

mod family;
mod gamma;
mod modes;
mod potentials;
mod shooting;
mod uniqueness;
mod well;

use rayon::prelude::*;
use serde::Serialize;

pub use family::{
    approach_sequence, critical_beta, layer_limit_diagnostics, LayerFamily, LayerSolution, LimitCase, LimitRow, Shot,
    BALANCE_TOL,
};
pub use shooting::{shoot_from_jump, shooting_deviation};
pub use gamma::{solve_for_gamma, GammaScan, GammaScanOptions};
pub use modes::{Pattern, PatternSign};
pub use potentials::Potentials;
pub use uniqueness::{delta_window, log_k_grid, uniqueness_scan, UniquenessReport};

use crate::error::Result;
use crate::kinetics::{Branch, Kinetics};
use crate::quad::gauss10;

/// Pointwise state of a stationary profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub u: f64,
    /// `du/dx`
    pub du: f64,
    pub v: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Increasing,
    Decreasing,
}

/// A piecewise-smooth stationary solution on `[0, 1]`.
pub trait StationaryProfile: Sync {
    fn gamma(&self) -> f64;
    /// Points where `v` changes branch, increasing.
    fn jumps(&self) -> Vec<f64>;
    /// State at `x`; at a jump the right-hand state.
    fn state_at(&self, x: f64) -> Result<PointState>;
    /// `F_j(u)` on the branch reported by [`StationaryProfile::state_at`].
    fn reaction(&self, branch: Branch, u: f64) -> Result<f64>;
}

/// Scalar description carried alongside a sampled profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileHeader {
    pub beta: f64,
    pub m: f64,
    pub k: f64,
    pub p: f64,
    #[serde(rename = "M")]
    pub m_half: f64,
    #[serde(rename = "N")]
    pub n_half: f64,
    pub gamma: f64,
    pub l: f64,
    pub mode: usize,
    pub orientation: Orientation,
}

impl ProfileHeader {
    pub fn of(sol: &LayerSolution) -> Self {
        Self {
            beta: sol.beta,
            m: sol.m,
            k: sol.k,
            p: sol.p,
            m_half: sol.m_half,
            n_half: sol.n_half,
            gamma: sol.gamma,
            l: sol.l,
            mode: 1,
            orientation: Orientation::Increasing,
        }
    }
}

/// A profile sampled on a uniform grid; every jump appears twice, first
/// with the left state and then with the right state.
#[derive(Debug, Clone, Serialize)]
pub struct LayerProfile {
    pub header: ProfileHeader,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub v: Vec<f64>,
    pub branch: Vec<Branch>,
}

impl LayerProfile {
    /// Samples `profile` at `x_i = i / cells`, `i = 0..=cells`, plus both
    /// sides of each jump.
    pub fn sample<P: StationaryProfile + ?Sized>(profile: &P, header: ProfileHeader, cells: usize) -> Result<Self> {
        let cells = cells.max(1);
        let jumps = profile.jumps();
        let mut pts: Vec<(f64, f64)> = (0..=cells).map(|i| (i as f64 / cells as f64, i as f64 / cells as f64)).collect();
        for &j in &jumps {
            // left state evaluated one ulp below the jump, reported at the jump
            pts.push((j, j - j * f64::EPSILON));
            pts.push((j, j));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        let states: Vec<PointState> = pts.par_iter().map(|&(_, xe)| profile.state_at(xe)).collect::<Result<_>>()?;
        Ok(Self {
            header,
            x: pts.iter().map(|p| p.0).collect(),
            u: states.iter().map(|s| s.u).collect(),
            du: states.iter().map(|s| s.du).collect(),
            v: states.iter().map(|s| s.v).collect(),
            branch: states.iter().map(|s| s.branch).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Cell-wise residual of the integrated equation on a uniform grid,
/// `(u'(b) − u'(a))/γ + ∫_a^b F(u) dx`, with cells split at the jumps and
/// integrated by the 10-point Gauss rule.
#[derive(Debug, Clone, Serialize)]
pub struct WeakResidual {
    pub cells: Vec<(f64, f64, f64)>,
    pub max_abs: f64,
}

pub fn weak_residual<P: StationaryProfile + ?Sized>(profile: &P, cells: usize) -> Result<WeakResidual> {
    let cells = cells.max(1);
    let mut edges: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    edges.extend(profile.jumps());
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let gamma = profile.gamma();
    let du: Vec<f64> = edges.par_iter().map(|&x| Ok(profile.state_at(x)?.du)).collect::<Result<_>>()?;
    let out: Vec<(f64, f64, f64)> = (0..edges.len() - 1)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (edges[i], edges[i + 1]);
            let mut failed = None;
            // no jump inside the cell, so each point's own branch is the cell's
            let mut f = |x: f64| match profile.state_at(x).and_then(|s| profile.reaction(s.branch, s.u)) {
                Ok(f) => f,
                Err(e) => {
                    failed.get_or_insert(e);
                    f64::NAN
                }
            };
            let value = gauss10(&mut f, a, b);
            if let Some(e) = failed {
                return Err(e);
            }
            Ok((a, b, (du[i + 1] - du[i]) / gamma + value))
        })
        .collect::<Result<_>>()?;
    let max_abs = out.iter().map(|c| c.2.abs()).fold(0.0, f64::max);
    Ok(WeakResidual { cells: out, max_abs })
}

/// The four-field stationary state behind a profile: quasi-steady receptors
/// `(u1, u2)` from `u3 = u`, and `u4 = v`.
#[derive(Debug, Clone, Serialize)]
pub struct FullStationaryState {
    pub x: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u3: Vec<f64>,
    pub u4: Vec<f64>,
}

pub fn full_state_representation(profile: &LayerProfile, kin: &Kinetics) -> FullStationaryState {
    let (u1, u2) = profile.u.iter().map(|&u| kin.quasi_steady_receptors(u)).unzip();
    FullStationaryState {
        x: profile.x.clone(),
        u1,
        u2,
        u3: profile.u.clone(),
        u4: profile.v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::ModelParams;
    use std::sync::Arc;

    fn family(beta: f64) -> LayerFamily {
        let kin = Kinetics::new(ModelParams::reference()).unwrap();
        LayerFamily::new(Arc::new(Potentials::new(&kin).unwrap()), beta).unwrap()
    }

    #[test]
    fn sampled_profile_is_monotone_with_duplicated_jump() {
        let f = family(3.6);
        let s = f.solve(Shot::Slope(0.5 * f.m_sup())).unwrap();
        let prof = LayerProfile::sample(&s, ProfileHeader::of(&s), 64).unwrap();
        assert_eq!(prof.len(), 65 + 2);
        assert!(prof.u.windows(2).all(|w| w[1] >= w[0]));
        let i = prof.x.iter().position(|&x| x == s.l).unwrap();
        assert_eq!(prof.x[i + 1], s.l);
        assert_eq!(prof.branch[i], Branch::Lower);
        assert_eq!(prof.branch[i + 1], Branch::Upper);
        let t = f.potentials().branches();
        assert!((prof.v[i] - t.h(Branch::Lower, s.beta).unwrap()).abs() < 1e-9);
        assert!((prof.v[i + 1] - t.h(Branch::Upper, s.beta).unwrap()).abs() < 1e-9);
        let kin = f.potentials().kinetics();
        for j in 0..prof.len() {
            assert!(kin.g(prof.u[j], prof.v[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_refinement_leaves_l_alone() {
        let f = family(3.6);
        let s = f.solve(Shot::Slope(0.5 * f.m_sup())).unwrap();
        let a = LayerProfile::sample(&s, ProfileHeader::of(&s), 50).unwrap();
        let b = LayerProfile::sample(&s, ProfileHeader::of(&s), 200).unwrap();
        assert!((a.header.l - b.header.l).abs() < 1e-6);
    }

    #[test]
    fn weak_residual_small() {
        let f = family(3.6);
        let s = f.solve(Shot::Slope(0.7 * f.m_sup())).unwrap();
        let r = weak_residual(&s, 40).unwrap();
        assert!(r.max_abs < 1e-6, "{}", r.max_abs);
        assert_eq!(r.cells.len(), 41);
    }

    #[test]
    fn receptor_representation_monotone() {
        let f = family(3.6);
        let s = f.solve(Shot::Slope(0.5 * f.m_sup())).unwrap();
        let prof = LayerProfile::sample(&s, ProfileHeader::of(&s), 64).unwrap();
        let kin = *f.potentials().kinetics();
        let full = full_state_representation(&prof, &kin);
        assert!(full.u1.windows(2).all(|w| w[1] <= w[0]));
        assert!(full.u2.windows(2).all(|w| w[1] >= w[0]));
        assert!(full.u4.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!((full.u1[0], full.u2[0]), kin.quasi_steady_receptors(s.k));
    }
}
