//! Reaction terms of the receptor-ligand model and their phase-plane geometry.
//!
//! The reduced system is
//!
//! ```text
//!     u_t = (1/γ) u_xx + f(u, v),      v_t = g(u, v),
//!     f(u, v) = v − μ3 u − m1 μ2 b u / (μ1 (μ2 + d) + μ2 b u),
//!     g(u, v) = −δ v + u S(v),         S(v) = m4 / (1 + σ v² − β_l v).
//! ```
//!
//! `f = 0` is the graph `v = Φ(u)` and `g = 0` is the cubic `u = Ψ(v)`, whose
//! three monotone pieces are the branches `h0`, `hm`, `h1`.

mod branches;
mod equilibria;
mod manifold;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use branches::{Branch, BranchTable};
pub use equilibria::{equilibria, mu3_window, Equilibrium, EquilibriumKind, Mu3Window};
pub use manifold::{stable_manifold, ManifoldOptions, PhasePortrait, Region, StableManifold};

/// Rate constants of the four-field model. `gamma` is the inverse diffusivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub m1: f64,
    pub m4: f64,
    pub sigma: f64,
    pub beta_l: f64,
    pub delta: f64,
    pub b: f64,
    pub d: f64,
    pub gamma: f64,
}

impl ModelParams {
    /// The parameter set of the gradient-like pattern figure.
    pub fn reference() -> Self {
        Self {
            mu1: 1.0,
            mu2: 1.0,
            mu3: 1.5,
            m1: 1.5,
            m4: 0.75,
            sigma: 0.01,
            beta_l: 0.195,
            delta: 2.5,
            b: 2.0,
            d: 1.0,
            gamma: 1.0 / 0.100044,
        }
    }

    fn named(&self) -> [(&'static str, f64); 11] {
        [
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
            ("m1", self.m1),
            ("m4", self.m4),
            ("sigma", self.sigma),
            ("beta_l", self.beta_l),
            ("delta", self.delta),
            ("b", self.b),
            ("d", self.d),
            ("gamma", self.gamma),
        ]
    }

    /// `c0 = 1 − β_l² / (4σ)`; positive exactly when `S` has no pole.
    pub fn c0(&self) -> f64 {
        1.0 - self.beta_l * self.beta_l / (4.0 * self.sigma)
    }

    /// Condition (A1): `β_l² < 4σ`.
    pub fn positivity_holds(&self) -> bool {
        self.c0() > 0.0
    }

    /// Condition (A2): `3σ < β_l² < 4σ`, i.e. the cubic nullcline folds.
    pub fn has_hysteresis(&self) -> bool {
        let b2 = self.beta_l * self.beta_l;
        3.0 * self.sigma < b2 && b2 < 4.0 * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "{name} = {value} must be finite and strictly positive"
                )));
            }
        }
        if !self.positivity_holds() {
            return Err(Error::InvalidParameters(format!(
                "beta_l^2 = {:e} must be below 4*sigma = {:e} so that S stays positive",
                self.beta_l * self.beta_l,
                4.0 * self.sigma
            )));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Validated parameters with the derived constants of the receptor sink.
///
/// The sink term of `f` is `c u / (K + b' u)` with `c = m1 μ2 b`,
/// `K = μ1 (μ2 + d)` and `b' = μ2 b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinetics {
    p: ModelParams,
    c: f64,
    k: f64,
    bp: f64,
}

impl Kinetics {
    pub fn new(p: ModelParams) -> Result<Self> {
        p.validate()?;
        Ok(Self {
            p,
            c: p.m1 * p.mu2 * p.b,
            k: p.mu1 * (p.mu2 + p.d),
            bp: p.mu2 * p.b,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.p
    }

    /// Same constants with a different `μ3`; used by the window search.
    pub fn with_mu3(&self, mu3: f64) -> Result<Self> {
        Self::new(ModelParams { mu3, ..self.p })
    }

    /// Same constants with a different `γ`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(ModelParams { gamma, ..self.p })
    }

    /// `(c, K, b')` of the sink `c u / (K + b' u)`.
    pub fn sink_constants(&self) -> (f64, f64, f64) {
        (self.c, self.k, self.bp)
    }

    fn s_denominator(&self, v: f64) -> f64 {
        1.0 + self.p.sigma * v * v - self.p.beta_l * v
    }

    pub fn s(&self, v: f64) -> f64 {
        self.p.m4 / self.s_denominator(v)
    }

    pub fn s_prime(&self, v: f64) -> f64 {
        let q = self.s_denominator(v);
        -self.p.m4 * (2.0 * self.p.sigma * v - self.p.beta_l) / (q * q)
    }

    pub fn sink(&self, u: f64) -> f64 {
        self.c * u / (self.k + self.bp * u)
    }

    pub fn sink_prime(&self, u: f64) -> f64 {
        let q = self.k + self.bp * u;
        self.c * self.k / (q * q)
    }

    pub fn f(&self, u: f64, v: f64) -> f64 {
        v - self.p.mu3 * u - self.sink(u)
    }

    pub fn g(&self, u: f64, v: f64) -> f64 {
        -self.p.delta * v + u * self.s(v)
    }

    /// `v = Φ(u)` solves `f(u, v) = 0`.
    pub fn phi(&self, u: f64) -> f64 {
        self.p.mu3 * u + self.sink(u)
    }

    pub fn phi_prime(&self, u: f64) -> f64 {
        self.p.mu3 + self.sink_prime(u)
    }

    /// `u = Ψ(v)` solves `g(u, v) = 0`.
    pub fn psi(&self, v: f64) -> f64 {
        self.p.delta * v * self.s_denominator(v) / self.p.m4
    }

    pub fn psi_prime(&self, v: f64) -> f64 {
        let p = &self.p;
        p.delta * (1.0 + 3.0 * p.sigma * v * v - 2.0 * p.beta_l * v) / p.m4
    }

    pub fn psi_second(&self, v: f64) -> f64 {
        let p = &self.p;
        p.delta * (6.0 * p.sigma * v - 2.0 * p.beta_l) / p.m4
    }

    /// `[[f_u, f_v], [g_u, g_v]]`.
    pub fn jacobian(&self, u: f64, v: f64) -> [[f64; 2]; 2] {
        [
            [-self.p.mu3 - self.sink_prime(u), 1.0],
            [self.s(v), -self.p.delta + u * self.s_prime(v)],
        ]
    }

    /// `Δ = f_u g_v − f_v g_u`.
    pub fn jacobian_det(&self, u: f64, v: f64) -> f64 {
        let j = self.jacobian(u, v);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Reduced vector field `(f, g)`.
    pub fn reduced(&self, y: &[f64; 2]) -> [f64; 2] {
        [self.f(y[0], y[1]), self.g(y[0], y[1])]
    }

    /// Free and bound receptors in quasi-steady state with ligand level `u3`.
    pub fn quasi_steady_receptors(&self, u3: f64) -> (f64, f64) {
        let p = &self.p;
        let den = p.mu1 * (p.d + p.mu2) + p.mu2 * p.b * u3;
        (p.m1 * (p.d + p.mu2) / den, p.m1 * p.b * u3 / den)
    }

    /// Reaction part of the four-field model at one point.
    pub fn full_reaction(&self, u: &[f64; 4]) -> [f64; 4] {
        let p = &self.p;
        let bind = p.b * u[0] * u[2] - p.d * u[1];
        [
            -p.mu1 * u[0] - bind + p.m1,
            -p.mu2 * u[1] + bind,
            -p.mu3 * u[2] - bind + u[3],
            -p.delta * u[3] + u[2] * self.s(u[3]),
        ]
    }

    /// Diagonal of the reaction Jacobian of the four-field model.
    pub fn full_reaction_diagonal(&self, u: &[f64; 4]) -> [f64; 4] {
        let p = &self.p;
        [
            -p.mu1 - p.b * u[2],
            -p.mu2 - p.d,
            -p.mu3 - p.b * u[0],
            -p.delta + u[2] * self.s_prime(u[3]),
        ]
    }

    pub fn branches(&self) -> Result<BranchTable> {
        BranchTable::new(*self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kin() -> Kinetics {
        Kinetics::new(ModelParams::reference()).unwrap()
    }

    #[test]
    fn s_at_zero_and_at_its_peak() {
        let k = kin();
        let p = k.params();
        assert_eq!(k.s(0.0), p.m4);
        let vpk = p.beta_l / (2.0 * p.sigma);
        assert!((k.s(vpk) - p.m4 / p.c0()).abs() < 1e-12 * k.s(vpk));
    }

    #[test]
    fn s_shape_for_the_s_curve_figure() {
        let p = ModelParams {
            sigma: 0.1,
            beta_l: 0.6244,
            m4: 0.1,
            ..ModelParams::reference()
        };
        let k = Kinetics::new(p).unwrap();
        let peak = p.beta_l / (2.0 * p.sigma);
        let mut prev = k.s(-5.0);
        for i in 1..2000 {
            let v = -5.0 + i as f64 * 0.05;
            let s = k.s(v);
            assert!(s > 0.0);
            if v < peak - 0.05 {
                assert!(s > prev);
            } else if v > peak + 0.05 {
                assert!(s < prev);
            }
            prev = s;
        }
        assert!(k.s(1e6) < 1e-9);
    }

    #[test]
    fn f_and_g_reference_values() {
        let k = kin();
        assert_eq!(k.f(0.0, 0.0), 0.0);
        assert_eq!(k.g(0.0, 0.0), 0.0);
        // −μ3 − m1 μ2 b / (μ1(μ2+d) + μ2 b) = −1.5 − 3/4
        assert!((k.f(1.0, 0.0) + 2.25).abs() < 1e-15);
        // −δ + m4/(1 + σ − β_l)
        assert!((k.g(1.0, 1.0) - (-2.5 + 0.75 / 0.815)).abs() < 1e-15);
        assert!((k.g(1.0, 1.0) + 1.579_754_601_226_993_8).abs() < 1e-12);
    }

    #[test]
    fn nullclines_zero_their_kinetics() {
        let k = kin();
        for i in 0..50 {
            let x = 0.3 * i as f64;
            assert!(k.f(x, k.phi(x)).abs() < 1e-13);
            assert!(k.g(k.psi(x), x).abs() < 1e-12 * (1.0 + x));
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        let mut p = ModelParams::reference();
        p.beta_l = 0.25;
        assert!(matches!(Kinetics::new(p), Err(Error::InvalidParameters(_))));
        let mut p = ModelParams::reference();
        p.delta = 0.0;
        assert!(Kinetics::new(p).is_err());
        let mut p = ModelParams::reference();
        p.mu1 = f64::NAN;
        assert!(Kinetics::new(p).is_err());
    }

    #[test]
    fn jacobian_at_origin() {
        let k = kin();
        let j = k.jacobian(0.0, 0.0);
        assert_eq!(j[1][0], 0.75);
        assert_eq!(j[1][1], -2.5);
        assert_eq!(j[0][1], 1.0);
        assert!((j[0][0] + 1.5 + 1.5).abs() < 1e-15);
    }

    #[test]
    fn receptor_limits_and_monotonicity() {
        let k = kin();
        assert_eq!(k.quasi_steady_receptors(0.0), (1.5, 0.0));
        let (a1, a2) = k.quasi_steady_receptors(1.0);
        let (b1, b2) = k.quasi_steady_receptors(2.0);
        assert!(b1 < a1 && b2 > a2);
        let (f1, f2) = k.quasi_steady_receptors(1e12);
        assert!(f1 < 1e-11 && (f2 - 1.5).abs() < 1e-11);
    }

    #[test]
    fn quasi_steady_receptors_reduce_the_full_system() {
        // with (u1, u2) quasi-steady, the ligand equation reduces to f
        let k = kin();
        for &u3 in &[0.1, 1.0, 4.0, 9.0] {
            let (u1, u2) = k.quasi_steady_receptors(u3);
            let v = 2.0;
            let r = k.full_reaction(&[u1, u2, u3, v]);
            assert!(r[0].abs() < 1e-13 && r[1].abs() < 1e-13);
            assert!((r[2] - k.f(u3, v)).abs() < 1e-13);
            assert!((r[3] - k.g(u3, v)).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn jacobian_matches_central_differences(u in 0.05f64..15.0, v in 0.05f64..20.0) {
            let k = kin();
            let j = k.jacobian(u, v);
            let hu = 1e-6 * u.max(1.0);
            let hv = 1e-6 * v.max(1.0);
            let fd = [
                [(k.f(u + hu, v) - k.f(u - hu, v)) / (2.0 * hu), (k.f(u, v + hv) - k.f(u, v - hv)) / (2.0 * hv)],
                [(k.g(u + hu, v) - k.g(u - hu, v)) / (2.0 * hu), (k.g(u, v + hv) - k.g(u, v - hv)) / (2.0 * hv)],
            ];
            for r in 0..2 {
                for c in 0..2 {
                    let scale = j[r][c].abs().max(1e-3);
                    prop_assert!((fd[r][c] - j[r][c]).abs() < 1e-5 * scale, "entry {r}{c}: {} vs {}", fd[r][c], j[r][c]);
                }
            }
        }

        #[test]
        fn s_positive_under_positivity_condition(sigma in 0.001f64..1.0, ratio in 0.0f64..0.999, v in -100.0f64..100.0) {
            let p = ModelParams { sigma, beta_l: ratio * (4.0 * sigma).sqrt(), ..ModelParams::reference() };
            let k = Kinetics::new(p).unwrap();
            prop_assert!(k.s(v) > 0.0);
            prop_assert!(k.s(v) <= p.m4 / p.c0() * (1.0 + 1e-12));
        }

        #[test]
        fn phi_strictly_increasing(u in 0.0f64..100.0) {
            prop_assert!(kin().phi_prime(u) > 0.0);
        }
    }
}
