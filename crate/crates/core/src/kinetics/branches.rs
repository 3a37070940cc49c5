use std::fmt;

use serde::{Deserialize, Serialize};

use super::Kinetics;
use crate::error::{Error, Result};
use crate::roots::{newton_bracketed, RootOptions};

/// The three monotone pieces of `u = Ψ(v)`, read as functions `v = h(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `h0`: from the origin up to the fold `(u+, v-)`.
    Lower,
    /// `hm`: between the two folds, decreasing in `u`.
    Middle,
    /// `h1`: from the fold `(u-, v+)` to infinity.
    Upper,
}

impl Branch {
    /// Column value used in profile files: 0, 1 (middle) or 2.
    pub fn id(self) -> u8 {
        match self {
            Branch::Lower => 0,
            Branch::Middle => 1,
            Branch::Upper => 2,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Lower => "h0",
            Branch::Middle => "hm",
            Branch::Upper => "h1",
        })
    }
}

/// Fold points of the cubic nullcline and evaluators for its branches.
#[derive(Debug, Clone, Copy)]
pub struct BranchTable {
    kin: Kinetics,
    /// Local maximum of `Ψ`.
    pub v_minus: f64,
    /// Local minimum of `Ψ`.
    pub v_plus: f64,
    /// `Ψ(v_minus)`, the right end of `h0`.
    pub u_plus: f64,
    /// `Ψ(v_plus)`, the left end of `h1`.
    pub u_minus: f64,
}

impl BranchTable {
    pub fn new(kin: Kinetics) -> Result<Self> {
        let p = kin.params();
        let disc = p.beta_l * p.beta_l - 3.0 * p.sigma;
        if !(disc > 0.0) || !p.has_hysteresis() {
            return Err(Error::NoFold {
                beta_l_sq: p.beta_l * p.beta_l,
                three_sigma: 3.0 * p.sigma,
            });
        }
        // roots of 3σv² − 2β_l v + 1; the smaller one via the product of roots
        let big = (p.beta_l + disc.sqrt()) / (3.0 * p.sigma);
        let small = 1.0 / (3.0 * p.sigma * big);
        Ok(Self {
            kin,
            v_minus: small,
            v_plus: big,
            u_plus: kin.psi(small),
            u_minus: kin.psi(big),
        })
    }

    pub fn kinetics(&self) -> &Kinetics {
        &self.kin
    }

    /// Closed `u`-interval on which the branch is defined.
    pub fn domain(&self, branch: Branch) -> (f64, f64) {
        match branch {
            Branch::Lower => (0.0, self.u_plus),
            Branch::Middle => (self.u_minus, self.u_plus),
            Branch::Upper => (self.u_minus, f64::INFINITY),
        }
    }

    pub fn contains(&self, branch: Branch, u: f64) -> bool {
        let (lo, hi) = self.domain(branch);
        u >= lo && u <= hi
    }

    /// `v = h_j(u)`.
    pub fn h(&self, branch: Branch, u: f64) -> Result<f64> {
        let (lo, hi) = self.domain(branch);
        if !(u >= lo && u <= hi) {
            let nearest_fold = if (u - self.u_minus).abs() < (u - self.u_plus).abs() {
                self.u_minus
            } else {
                self.u_plus
            };
            return Err(Error::BranchDomain {
                branch,
                u,
                nearest_fold,
            });
        }
        let (vlo, vhi) = match branch {
            Branch::Lower => (0.0, self.v_minus),
            Branch::Middle => (self.v_minus, self.v_plus),
            Branch::Upper => {
                let mut hi = 2.0 * self.v_plus;
                while self.kin.psi(hi) < u {
                    hi *= 2.0;
                }
                (self.v_plus, hi)
            }
        };
        if u == self.kin.psi(vlo) {
            return Ok(vlo);
        }
        if u == self.kin.psi(vhi) {
            return Ok(vhi);
        }
        let kin = self.kin;
        let guess = vlo + (vhi - vlo) * 0.5;
        newton_bracketed(
            |v| (kin.psi(v) - u, kin.psi_prime(v)),
            vlo,
            vhi,
            guess,
            &RootOptions {
                x_abs: 1e-300,
                x_rel: 2.0 * f64::EPSILON,
                max_iter: 300,
            },
        )
    }

    /// `h_j′(u) = 1 / Ψ′(h_j(u))`; infinite at the folds.
    pub fn h_prime(&self, branch: Branch, u: f64) -> Result<f64> {
        let v = self.h(branch, u)?;
        Ok(1.0 / self.kin.psi_prime(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::ModelParams;
    use proptest::prelude::*;

    fn table() -> BranchTable {
        Kinetics::new(ModelParams::reference()).unwrap().branches().unwrap()
    }

    #[test]
    fn reference_folds_match_quadratic_formula() {
        let t = table();
        let (s, b) = (0.01f64, 0.195f64);
        let r = (b * b - 3.0 * s).sqrt();
        assert!((t.v_minus - (b - r) / (3.0 * s)).abs() < 1e-12);
        assert!((t.v_plus - (b + r) / (3.0 * s)).abs() < 1e-12);
        assert!((t.v_minus - 3.513_92).abs() < 1e-5);
        assert!((t.v_plus - 9.486_08).abs() < 1e-5);
        assert!(t.u_minus < t.u_plus);
        assert!((t.u_plus - 5.133_39).abs() < 1e-5);
        assert!((t.u_minus - 1.583_28).abs() < 1e-5);
    }

    #[test]
    fn degenerate_discriminant_has_no_fold() {
        let p = ModelParams {
            sigma: 0.01,
            beta_l: 0.03f64.sqrt(),
            ..ModelParams::reference()
        };
        let k = Kinetics::new(p).unwrap();
        assert!(matches!(k.branches(), Err(Error::NoFold { .. })));
    }

    #[test]
    fn s_curve_figure_parameters_fold() {
        let p = ModelParams {
            sigma: 0.1,
            beta_l: 0.6244,
            m4: 0.1,
            ..ModelParams::reference()
        };
        let t = Kinetics::new(p).unwrap().branches().unwrap();
        assert!(t.v_minus < t.v_plus);
    }

    #[test]
    fn branch_values_at_ends() {
        let t = table();
        assert_eq!(t.h(Branch::Lower, 0.0).unwrap(), 0.0);
        let a = t.h(Branch::Middle, t.u_minus).unwrap();
        let b = t.h(Branch::Upper, t.u_minus).unwrap();
        assert!((a - t.v_plus).abs() < 1e-7 && (b - t.v_plus).abs() < 1e-7);
        let c = t.h(Branch::Lower, t.u_plus).unwrap();
        let d = t.h(Branch::Middle, t.u_plus).unwrap();
        assert!((c - t.v_minus).abs() < 1e-7 && (d - t.v_minus).abs() < 1e-7);
    }

    #[test]
    fn out_of_domain_names_nearest_fold() {
        let t = table();
        match t.h(Branch::Lower, 6.0) {
            Err(Error::BranchDomain { nearest_fold, .. }) => assert_eq!(nearest_fold, t.u_plus),
            other => panic!("{other:?}"),
        }
        match t.h(Branch::Upper, 1.0) {
            Err(Error::BranchDomain { nearest_fold, .. }) => assert_eq!(nearest_fold, t.u_minus),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn branches_ordered_and_on_nullcline(frac in 0.001f64..0.999) {
            let t = table();
            let k = t.kinetics();
            let u = t.u_minus + frac * (t.u_plus - t.u_minus);
            let v0 = t.h(Branch::Lower, u).unwrap();
            let vm = t.h(Branch::Middle, u).unwrap();
            let v1 = t.h(Branch::Upper, u).unwrap();
            prop_assert!(v0 < vm && vm < v1);
            for v in [v0, vm, v1] {
                prop_assert!((k.psi(v) - u).abs() <= 1e-12 * u);
                prop_assert!(k.g(u, v).abs() <= 1e-12 * (k.params().delta * v));
            }
        }

        #[test]
        fn outer_branches_increase_middle_decreases(u in 0.01f64..30.0, du in 1e-4f64..0.5) {
            let t = table();
            for br in [Branch::Lower, Branch::Middle, Branch::Upper] {
                if t.contains(br, u) && t.contains(br, u + du) {
                    let a = t.h(br, u).unwrap();
                    let b = t.h(br, u + du).unwrap();
                    if br == Branch::Middle { prop_assert!(b < a) } else { prop_assert!(b > a) }
                }
            }
        }
    }
}
