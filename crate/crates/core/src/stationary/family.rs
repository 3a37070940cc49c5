use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::potentials::Potentials;
use super::well::{InversionTable, Well};
use super::{PointState, StationaryProfile};
use crate::error::{Error, Result};
use crate::kinetics::Branch;
use crate::roots::{brent, RootOptions};

/// Relative size below which `𝓕0(β) − 𝓕1(β)` counts as zero.
pub const BALANCE_TOL: f64 = 1e-12;

/// Which limit the layer approaches as `m` tends to its supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitCase {
    /// `𝓕0(β) > 𝓕1(β)`: the jump moves to `x = 1`.
    Right,
    /// `𝓕0(β) = 𝓕1(β)`: the jump settles at `l*`.
    Interior,
    /// `𝓕0(β) < 𝓕1(β)`: the jump moves to `x = 0`.
    Left,
}

/// A point of the one-parameter family at fixed `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shot {
    /// Stretched slope at the jump, `0 < m < m_sup`.
    Slope(f64),
    /// Distance `m_sup²/2 − m²/2` to the supremum, resolvable down to ~1e-200.
    Gap(f64),
}

/// Layer solutions with a given jump value `β`.
#[derive(Debug, Clone)]
pub struct LayerFamily {
    pot: Arc<Potentials>,
    pub beta: f64,
    /// `|𝓕0(β)|`
    pub e0: f64,
    /// `|𝓕1(β)|`
    pub e1: f64,
    /// `𝓕0(β) − 𝓕1(β)`, snapped to zero within [`BALANCE_TOL`].
    pub balance: f64,
}

impl LayerFamily {
    pub fn new(pot: Arc<Potentials>, beta: f64) -> Result<Self> {
        let (lo, hi) = pot.admissible_beta();
        if !(beta > lo && beta < hi) {
            return Err(Error::InadmissibleBeta { beta, lo, hi });
        }
        let e0 = pot.left.energy(beta)?;
        let e1 = pot.right.energy(pot.u1 - beta)?;
        let mut balance = e1 - e0;
        if balance.abs() <= BALANCE_TOL * e0.max(e1) {
            balance = 0.0;
        }
        Ok(Self {
            pot,
            beta,
            e0,
            e1,
            balance,
        })
    }

    pub fn potentials(&self) -> &Arc<Potentials> {
        &self.pot
    }

    pub fn case(&self) -> LimitCase {
        if self.balance > 0.0 {
            LimitCase::Right
        } else if self.balance < 0.0 {
            LimitCase::Left
        } else {
            LimitCase::Interior
        }
    }

    /// `min{|𝓕0(β)|, |𝓕1(β)|}`.
    pub fn e_min(&self) -> f64 {
        self.e0.min(self.e1)
    }

    /// Supremum of admissible slopes.
    pub fn m_sup(&self) -> f64 {
        (2.0 * self.e_min()).sqrt()
    }

    /// Per-side gaps `(r0, r1)` given the common gap `r`.
    fn side_gaps(&self, r: f64) -> (f64, f64) {
        if self.balance >= 0.0 {
            (r, r + self.balance)
        } else {
            (r - self.balance, r)
        }
    }

    pub fn solve(&self, shot: Shot) -> Result<LayerSolution> {
        let (e, r) = match shot {
            Shot::Slope(m) => {
                if !(m > 0.0) {
                    return Err(Error::InfeasibleSlope {
                        m,
                        bound: 0.0,
                        which: "m > 0",
                    });
                }
                if !(m < self.m_sup()) {
                    return Err(Error::InfeasibleSlope {
                        m,
                        bound: self.m_sup(),
                        which: if self.e0 <= self.e1 {
                            "m < sqrt(2|F0(beta)|)"
                        } else {
                            "m < sqrt(2|F1(beta)|)"
                        },
                    });
                }
                let e = 0.5 * m * m;
                (e, self.e_min() - e)
            }
            Shot::Gap(r) => {
                if !(r > 0.0 && r < self.e_min()) {
                    return Err(Error::InfeasibleSlope {
                        m: (2.0 * (self.e_min() - r)).max(0.0).sqrt(),
                        bound: self.m_sup(),
                        which: "0 < gap < min(|F0(beta)|, |F1(beta)|)",
                    });
                }
                (self.e_min() - r, r)
            }
        };
        let (r0, r1) = self.side_gaps(r);
        let left = side(&self.pot.left, self.beta, e, r0)?;
        let right = side(&self.pot.right, self.pot.u1 - self.beta, e, r1)?;
        self.assemble(e, r, left, right)
    }

    /// Member with turning value `u(0) = k`.
    pub fn at_k(&self, k: f64) -> Result<LayerSolution> {
        if !(k > 0.0 && k < self.beta) {
            return Err(Error::InvalidInput(format!("turning value k = {k} outside (0, {})", self.beta)));
        }
        let r0 = self.pot.left.energy(k)?;
        let r1 = r0 + self.balance;
        let e = self.e0 - r0;
        if !(r1 > 0.0 && e > 0.0) {
            return Err(Error::InfeasibleSlope {
                m: (2.0 * e).max(0.0).sqrt(),
                bound: self.m_sup(),
                which: "m < sqrt(2|F1(beta)|)",
            });
        }
        let left = (k, self.beta - k);
        let right = side(&self.pot.right, self.pot.u1 - self.beta, e, r1)?;
        self.assemble(e, r0.min(r1), left, right)
    }

    /// `p(k)` solving `𝓕1(p) = 𝓕0(k) − 𝓕0(β) + 𝓕1(β)`.
    pub fn p_of_k(&self, k: f64) -> Result<f64> {
        let r0 = self.pot.left.energy(k)?;
        let r1 = r0 + self.balance;
        let e = self.e0 - r0;
        let (z, _) = side(&self.pot.right, self.pot.u1 - self.beta, e, r1)?;
        Ok(self.pot.u1 - z)
    }

    fn assemble(&self, e: f64, gap: f64, left: (f64, f64), right: (f64, f64)) -> Result<LayerSolution> {
        let pot = &self.pot;
        let m_half = pot.left.stretched_span(left.0, 0.0, left.1)?;
        let n_half = pot.right.stretched_span(right.0, 0.0, right.1)?;
        let width = m_half + n_half;
        Ok(LayerSolution {
            pot: Arc::clone(pot),
            beta: self.beta,
            m: (2.0 * e).sqrt(),
            gap,
            k: left.0,
            p: pot.u1 - right.0,
            m_half,
            n_half,
            gamma: width * width,
            l: m_half / width,
            z_q: right.0,
            spans: (left.1, right.1),
            tables: OnceLock::new(),
        })
    }
}

/// Turning point and span `z_b − z_t` of one side, from whichever of the
/// drop `e` and the residual gap `r` is smaller.
fn side(well: &Well, z_b: f64, e: f64, r: f64) -> Result<(f64, f64)> {
    if r < e {
        let z = well.turning_from_gap(r, z_b)?;
        Ok((z, z_b - z))
    } else {
        let t = well.drop_from_energy(z_b, e)?;
        Ok((z_b - t, t))
    }
}

/// A monotone increasing layer solution `(γ, u, v)` on `[0, 1]`.
#[derive(Debug)]
pub struct LayerSolution {
    pot: Arc<Potentials>,
    pub beta: f64,
    /// Stretched slope at the jump.
    pub m: f64,
    /// `m_sup²/2 − m²/2`.
    pub gap: f64,
    pub k: f64,
    pub p: f64,
    /// Stretched half-widths `M` and `N`.
    pub m_half: f64,
    pub n_half: f64,
    pub gamma: f64,
    pub l: f64,
    z_q: f64,
    spans: (f64, f64),
    tables: OnceLock<(InversionTable, InversionTable)>,
}

impl Clone for LayerSolution {
    fn clone(&self) -> Self {
        let tables = OnceLock::new();
        if let Some(t) = self.tables.get() {
            let _ = tables.set(t.clone());
        }
        Self {
            pot: Arc::clone(&self.pot),
            tables,
            ..*self
        }
    }
}

impl LayerSolution {
    pub fn potentials(&self) -> &Arc<Potentials> {
        &self.pot
    }

    fn tables(&self) -> Result<&(InversionTable, InversionTable)> {
        if let Some(t) = self.tables.get() {
            return Ok(t);
        }
        let a = self.pot.left.inversion_table(self.k, self.spans.0)?;
        let b = self.pot.right.inversion_table(self.z_q, self.spans.1)?;
        let _ = self.tables.set((a, b));
        Ok(self.tables.get().expect("just set"))
    }

    /// Builds the inversion tables now instead of on first evaluation.
    pub fn prepare(&self) -> Result<()> {
        self.tables().map(|_| ())
    }

    /// `u1 − p`, kept to full relative accuracy.
    pub fn u1_minus_p(&self) -> f64 {
        self.z_q
    }

    /// Physical slope `u′(l) = √γ m`.
    pub fn slope_at_jump(&self) -> f64 {
        self.gamma.sqrt() * self.m
    }
}

impl StationaryProfile for LayerSolution {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn jumps(&self) -> Vec<f64> {
        vec![self.l]
    }

    fn state_at(&self, x: f64) -> Result<PointState> {
        let (tl, tr) = self.tables()?;
        let root_g = self.gamma.sqrt();
        let x = x.clamp(0.0, 1.0);
        if x < self.l {
            let w = &self.pot.left;
            let t = w.invert(tl, root_g * x)?;
            let z = self.k + t;
            Ok(PointState {
                u: z.min(self.beta),
                du: root_g * (2.0 * w.energy_from(self.k, t)?).sqrt(),
                v: w.branch_v(z)?,
                branch: Branch::Lower,
            })
        } else {
            let w = &self.pot.right;
            let t = w.invert(tr, root_g * (1.0 - x))?;
            let z = self.z_q + t;
            Ok(PointState {
                u: (self.pot.u1 - z).max(self.beta),
                du: root_g * (2.0 * w.energy_from(self.z_q, t)?).sqrt(),
                v: w.branch_v(-z)?,
                branch: Branch::Upper,
            })
        }
    }

    fn reaction(&self, branch: Branch, u: f64) -> Result<f64> {
        self.pot.reaction(branch, u)
    }
}

/// Balanced jump value `β*` with `𝓕0(β*) = 𝓕1(β*)`.
pub fn critical_beta(pot: &Potentials) -> Result<f64> {
    let (lo, hi) = pot.admissible_beta();
    let (dlo, dhi) = (pot.balance(lo)?, pot.balance(hi)?);
    if dlo * dhi > 0.0 {
        return Err(Error::NoBalancedBeta {
            lo,
            hi,
            sign: dlo.signum(),
        });
    }
    let opts = RootOptions {
        x_abs: 0.0,
        x_rel: 2.0 * f64::EPSILON,
        max_iter: 200,
    };
    brent(|b| pot.balance(b).unwrap_or(f64::NAN), lo, hi, &opts)
}

/// One row of the layer-limit table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitRow {
    pub m: f64,
    pub gap: f64,
    pub gamma: f64,
    pub l: f64,
    pub k: f64,
    pub p: f64,
    /// `sup u` over `[0, 1 − ε]`.
    pub sup_u_left: f64,
    /// `inf u` over `[ε, 1]`.
    pub inf_u_right: f64,
}

/// `(m, γ, l, u-range)` along a sequence of shots; `u` is monotone so the
/// range reduces to `u(1 − ε)` and `u(ε)`.
pub fn layer_limit_diagnostics(family: &LayerFamily, shots: &[Shot], eps: f64) -> Result<Vec<LimitRow>> {
    use rayon::prelude::*;
    shots
        .par_iter()
        .map(|&s| {
            let sol = family.solve(s)?;
            Ok(LimitRow {
                m: sol.m,
                gap: sol.gap,
                gamma: sol.gamma,
                l: sol.l,
                k: sol.k,
                p: sol.p,
                sup_u_left: sol.state_at(1.0 - eps)?.u,
                inf_u_right: sol.state_at(eps)?.u,
            })
        })
        .collect()
}

/// Gaps `r_j` falling geometrically from `e_min/2` to `r_min`, i.e. slopes
/// increasing toward the supremum.
pub fn approach_sequence(family: &LayerFamily, n: usize, r_min: f64) -> Vec<Shot> {
    let r0 = 0.5 * family.e_min();
    let n = n.max(2);
    (0..n)
        .map(|j| Shot::Gap(r0 * (r_min / r0).powf(j as f64 / (n - 1) as f64)))
        .collect()
}
