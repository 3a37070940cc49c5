use serde::Serialize;

use super::{LayerSolution, Orientation, PointState, ProfileHeader, StationaryProfile};
use crate::error::{Error, Result};
use crate::kinetics::Branch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PatternSign {
    /// First piece increasing.
    Plus,
    /// First piece decreasing.
    Minus,
}

/// Mode-`n` solution tiled from `n` reflected copies of an increasing base
/// profile, a solution for `γ = n² γ_base`.
#[derive(Debug, Clone)]
pub struct Pattern {
    base: LayerSolution,
    pub n: usize,
    pub sign: PatternSign,
}

impl Pattern {
    pub fn new(base: LayerSolution, n: usize, sign: PatternSign) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("mode must be at least 1".into()));
        }
        Ok(Self { base, n, sign })
    }

    pub fn base(&self) -> &LayerSolution {
        &self.base
    }

    /// Piece `j` runs on `u*(1 − ξ)` instead of `u*(ξ)`.
    fn reversed(&self, j: usize) -> bool {
        (j % 2 == 1) ^ (self.sign == PatternSign::Minus)
    }

    pub fn header(&self) -> ProfileHeader {
        ProfileHeader {
            mode: self.n,
            gamma: self.gamma(),
            orientation: if self.reversed(0) {
                Orientation::Decreasing
            } else {
                Orientation::Increasing
            },
            ..ProfileHeader::of(&self.base)
        }
    }
}

impl StationaryProfile for Pattern {
    fn gamma(&self) -> f64 {
        (self.n * self.n) as f64 * self.base.gamma
    }

    fn jumps(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.n)
            .map(|j| {
                let off = if self.reversed(j) { 1.0 - self.base.l } else { self.base.l };
                (j as f64 + off) / n
            })
            .collect()
    }

    fn state_at(&self, x: f64) -> Result<PointState> {
        let n = self.n as f64;
        let y = x.clamp(0.0, 1.0) * n;
        let j = (y.floor() as usize).min(self.n - 1);
        let xi = y - j as f64;
        if self.reversed(j) {
            let s = self.base.state_at(1.0 - xi)?;
            Ok(PointState { du: -n * s.du, ..s })
        } else {
            let s = self.base.state_at(xi)?;
            Ok(PointState { du: n * s.du, ..s })
        }
    }

    fn reaction(&self, branch: Branch, u: f64) -> Result<f64> {
        self.base.reaction(branch, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{Kinetics, ModelParams};
    use crate::stationary::{weak_residual, LayerFamily, LayerProfile, Potentials, Shot};
    use std::sync::Arc;

    fn base() -> LayerSolution {
        let kin = Kinetics::new(ModelParams::reference()).unwrap();
        let f = LayerFamily::new(Arc::new(Potentials::new(&kin).unwrap()), 3.6).unwrap();
        f.solve(Shot::Slope(0.6 * f.m_sup())).unwrap()
    }

    #[test]
    fn mode_one_plus_is_the_base() {
        let b = base();
        let p = Pattern::new(b.clone(), 1, PatternSign::Plus).unwrap();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert_eq!(p.state_at(x).unwrap(), b.state_at(x).unwrap());
        }
        assert_eq!(p.gamma(), b.gamma);
    }

    #[test]
    fn mode_one_minus_is_the_reflection() {
        let b = base();
        let p = Pattern::new(b.clone(), 1, PatternSign::Minus).unwrap();
        for i in 1..10 {
            let x = i as f64 / 10.0;
            let s = p.state_at(x).unwrap();
            let r = b.state_at(1.0 - x).unwrap();
            assert_eq!((s.u, s.v, s.du), (r.u, r.v, -r.du));
        }
        let prof = LayerProfile::sample(&p, p.header(), 40).unwrap();
        assert!(prof.u.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(prof.header.orientation, Orientation::Decreasing);
    }

    #[test]
    fn mode_two_has_interior_critical_point() {
        let b = base();
        let p = Pattern::new(b.clone(), 2, PatternSign::Plus).unwrap();
        let mid = p.state_at(0.5).unwrap();
        assert!(mid.du.abs() < 1e-8 * p.gamma().sqrt());
        assert!((mid.u - b.p).abs() < 1e-12);
        assert!((p.gamma() - 4.0 * b.gamma).abs() < 1e-12 * b.gamma);
        assert!(weak_residual(&p, 40).unwrap().max_abs < 1e-6);
    }

    #[test]
    fn zero_mode_rejected() {
        assert!(Pattern::new(base(), 0, PatternSign::Plus).is_err());
    }
}
