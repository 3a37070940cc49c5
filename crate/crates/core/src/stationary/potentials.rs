use crate::error::{Error, Result};
use crate::kinetics::{equilibria, Branch, BranchTable, EquilibriumKind, Kinetics};

use super::well::Well;

/// Branch reactions `F_j(u) = f(u, h_j(u))` and their potentials
/// `𝓕0(W) = ∫_0^W F0`, `𝓕1(W) = ∫_{u1}^W F1`.
#[derive(Debug, Clone)]
pub struct Potentials {
    kin: Kinetics,
    table: BranchTable,
    pub(crate) left: Well,
    pub(crate) right: Well,
    /// Saddle on `hm`.
    pub u_m: f64,
    pub v_m: f64,
    /// Stable equilibrium on `h1`.
    pub u1: f64,
    pub v1: f64,
}

impl Potentials {
    pub fn new(kin: &Kinetics) -> Result<Self> {
        let table = kin.branches()?;
        let eq = equilibria(kin)?;
        if eq.len() != 3 || eq[1].kind != EquilibriumKind::Saddle {
            return Err(Error::NoSaddle);
        }
        let (sad, top) = (eq[1], eq[2]);
        if !(sad.v > table.v_minus && sad.v < table.v_plus && top.v > table.v_plus) {
            return Err(Error::InvalidParameters(format!(
                "mu3 = {} puts the positive equilibria at v = {} and v = {}; the layer construction needs the saddle on hm ({}, {}) and the stable state on h1",
                kin.params().mu3,
                sad.v,
                top.v,
                table.v_minus,
                table.v_plus
            )));
        }
        let left = Well::new(*kin, 0.0, 0.0, 1.0, table.u_plus, 0.0, table.v_minus)?;
        let right = Well::new(*kin, top.u, top.v, -1.0, top.u - table.u_minus, table.v_plus, f64::INFINITY)?;
        Ok(Self {
            kin: *kin,
            table,
            left,
            right,
            u_m: sad.u,
            v_m: sad.v,
            u1: top.u,
            v1: top.v,
        })
    }

    pub fn kinetics(&self) -> &Kinetics {
        &self.kin
    }

    pub fn branches(&self) -> &BranchTable {
        &self.table
    }

    /// Open interval `(u-, min{u+, u1})` of jump values.
    pub fn admissible_beta(&self) -> (f64, f64) {
        (self.table.u_minus, self.table.u_plus.min(self.u1))
    }

    fn side(&self, branch: Branch) -> Result<&Well> {
        match branch {
            Branch::Lower => Ok(&self.left),
            Branch::Upper => Ok(&self.right),
            Branch::Middle => Err(Error::InvalidInput("layer potentials live on h0 and h1 only".into())),
        }
    }

    fn check_domain(&self, branch: Branch, u: f64) -> Result<()> {
        if self.table.contains(branch, u) {
            Ok(())
        } else {
            let (lo, hi) = self.table.domain(branch);
            Err(Error::BranchDomain {
                branch,
                u,
                nearest_fold: if (u - lo).abs() < (u - hi).abs() { lo } else { hi },
            })
        }
    }

    /// `F_j(u)`.
    pub fn reaction(&self, branch: Branch, u: f64) -> Result<f64> {
        self.check_domain(branch, u)?;
        let w = self.side(branch)?;
        w.reaction(u - w.u_a)
    }

    /// `F_j′` at the anchoring equilibrium (`u0 = 0` or `u1`).
    pub fn anchor_slope(&self, branch: Branch) -> Result<f64> {
        Ok(-self.side(branch)?.stiffness)
    }

    /// `𝓕_j(W)`.
    pub fn potential(&self, branch: Branch, w: f64) -> Result<f64> {
        self.check_domain(branch, w)?;
        let side = self.side(branch)?;
        Ok(-side.energy(side.sgn * (w - side.u_a))?)
    }

    /// `𝓕0(β) − 𝓕1(β)`; strictly decreasing in `β`.
    pub fn balance(&self, beta: f64) -> Result<f64> {
        Ok(self.right.energy(self.u1 - beta)? - self.left.energy(beta)?)
    }

    /// `l* = √|F1′(u1)| / (√|F1′(u1)| + √|F0′(0)|)`.
    pub fn l_star(&self) -> f64 {
        let a = self.right.stiffness.sqrt();
        let b = self.left.stiffness.sqrt();
        a / (a + b)
    }

    /// `(1/√|F0′(0)|, 1/√|F1′(u1)|)`, the log-slopes of `M` and `N`.
    pub fn log_slopes(&self) -> (f64, f64) {
        (1.0 / self.left.stiffness.sqrt(), 1.0 / self.right.stiffness.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::ModelParams;
    use crate::quad::{integrate, QuadOptions};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn pot() -> &'static Potentials {
        static P: OnceLock<Potentials> = OnceLock::new();
        P.get_or_init(|| Potentials::new(&Kinetics::new(ModelParams::reference()).unwrap()).unwrap())
    }

    /// `F_j` straight from the branch solver and `f`, with no local coordinates.
    fn naive_reaction(branch: Branch, u: f64) -> f64 {
        let p = pot();
        let v = p.branches().h(branch, u).unwrap();
        p.kinetics().f(u, v)
    }

    #[test]
    fn reactions_vanish_at_equilibria() {
        let p = pot();
        assert_eq!(p.reaction(Branch::Lower, 0.0).unwrap(), 0.0);
        assert_eq!(p.reaction(Branch::Upper, p.u1).unwrap(), 0.0);
    }

    #[test]
    fn local_reaction_matches_naive_evaluation() {
        let p = pot();
        for i in 1..100 {
            let u = p.branches().u_plus * i as f64 / 100.0;
            let a = p.reaction(Branch::Lower, u).unwrap();
            assert!((a - naive_reaction(Branch::Lower, u)).abs() < 1e-12, "u={u}");
            let u = p.branches().u_minus + (12.0 - p.branches().u_minus) * i as f64 / 100.0;
            let b = p.reaction(Branch::Upper, u).unwrap();
            assert!((b - naive_reaction(Branch::Upper, u)).abs() < 1e-11, "u={u}");
        }
    }

    #[test]
    fn lower_reaction_negative_on_its_branch() {
        let p = pot();
        for i in 1..1000 {
            let u = p.branches().u_plus * i as f64 / 1000.0;
            assert!(p.reaction(Branch::Lower, u).unwrap() < 0.0);
        }
    }

    #[test]
    fn anchor_slopes_negative_and_match_differences() {
        let p = pot();
        let s0 = p.anchor_slope(Branch::Lower).unwrap();
        let s1 = p.anchor_slope(Branch::Upper).unwrap();
        assert!(s0 < 0.0 && s1 < 0.0);
        assert!((s0 + 2.7).abs() < 1e-12, "{s0}");
        let h = 1e-6;
        let fd0 = (naive_reaction(Branch::Lower, h) - 0.0) / h;
        let fd1 = (naive_reaction(Branch::Upper, p.u1 + h) - naive_reaction(Branch::Upper, p.u1 - h)) / (2.0 * h);
        assert!((fd0 - s0).abs() < 1e-5 && (fd1 - s1).abs() < 1e-6);
        assert!((s1 + 1.256_71).abs() < 1e-5, "{s1}");
    }

    #[test]
    fn potentials_negative_and_anchored() {
        let p = pot();
        assert_eq!(p.potential(Branch::Lower, 0.0).unwrap(), 0.0);
        assert_eq!(p.potential(Branch::Upper, p.u1).unwrap(), 0.0);
        for i in 1..200 {
            let w = p.branches().u_plus * i as f64 / 200.0;
            assert!(p.potential(Branch::Lower, w).unwrap() < 0.0);
            let w = p.branches().u_minus + (p.u1 - p.branches().u_minus) * i as f64 / 200.0;
            assert!(p.potential(Branch::Upper, w).unwrap() < 0.0);
        }
    }

    #[test]
    fn potential_matches_independent_quadrature() {
        let p = pot();
        let opts = QuadOptions::with_rel(1e-12);
        for &w in &[0.5, 2.0, 3.7, 5.0] {
            let direct = integrate(|z| naive_reaction(Branch::Lower, z), 0.0, w, &opts).unwrap().value;
            assert!((p.potential(Branch::Lower, w).unwrap() - direct).abs() < 1e-11);
        }
        for &w in &[1.7, 3.7, 6.0, 9.0] {
            let direct = integrate(|z| naive_reaction(Branch::Upper, z), p.u1, w, &opts).unwrap().value;
            assert!((p.potential(Branch::Upper, w).unwrap() - direct).abs() < 1e-11);
        }
    }

    #[test]
    fn reference_balance_values() {
        let p = pot();
        let b = 3.731132;
        let f0 = p.potential(Branch::Lower, b).unwrap();
        let f1 = p.potential(Branch::Upper, b).unwrap();
        assert!((f0 + 11.168_63).abs() < 1e-4, "{f0}");
        assert!((f1 + 11.189_08).abs() < 1e-4, "{f1}");
        assert!((p.l_star() - 0.405_555).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn potential_derivative_is_the_reaction(w in 0.2f64..5.0) {
            let p = pot();
            let h = 1e-5;
            let fd = (p.potential(Branch::Lower, w + h).unwrap() - p.potential(Branch::Lower, w - h).unwrap()) / (2.0 * h);
            prop_assert!((fd - p.reaction(Branch::Lower, w).unwrap()).abs() < 1e-8);
            let w1 = w + 1.6;
            let fd = (p.potential(Branch::Upper, w1 + h).unwrap() - p.potential(Branch::Upper, w1 - h).unwrap()) / (2.0 * h);
            prop_assert!((fd - p.reaction(Branch::Upper, w1).unwrap()).abs() < 1e-8);
        }

        #[test]
        fn balance_is_decreasing(a in 1.7f64..5.0, d in 0.01f64..0.1) {
            let p = pot();
            prop_assert!(p.balance(a + d).unwrap() < p.balance(a).unwrap());
        }
    }
}
