//! Spatially homogeneous equilibria and the `μ3` window with two positive ones.
//!
//! Equilibria are the zeros of `E(v) = Φ(Ψ(v)) − v` on `v ≥ 0`, with
//! `u = Ψ(v)`. Since `∂E/∂μ3 = Ψ(v) > 0`, every sign condition on `E` is
//! monotone in `μ3`, which makes the window edges well defined by bisection.

use serde::Serialize;

use super::{BranchTable, Kinetics};
use crate::error::{Error, Result};
use crate::roots::{bisect, brent_with, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    Stable,
    Saddle,
    Unstable,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Equilibrium {
    pub u: f64,
    pub v: f64,
    pub kind: EquilibriumKind,
    pub jacobian: [[f64; 2]; 2],
}

/// Range of `μ3` in which the layer construction applies.
///
/// Inside `(lower, upper)` there are exactly two positive equilibria, the
/// saddle on `hm` and the stable state on `h1`. Both edges are fold
/// crossings: at `lower` the saddle reaches the fold `(u+, v-)`, at `upper`
/// the stable state reaches `(u-, v+)`. Slightly above `upper` the two
/// positive equilibria survive on `h1` until they annihilate at `tangency`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mu3Window {
    pub lower: f64,
    pub upper: f64,
    pub tangency: f64,
}

impl Mu3Window {
    pub fn is_empty(&self) -> bool {
        !(self.lower < self.upper)
    }

    pub fn contains(&self, mu3: f64) -> bool {
        mu3 > self.lower && mu3 < self.upper
    }
}

const SCAN_CELLS: usize = 4000;
const COALESCE_TOL: f64 = 1e-8;

fn e_value(kin: &Kinetics, mu3: f64, v: f64) -> f64 {
    let u = kin.psi(v);
    mu3 * u + kin.sink(u) - v
}

/// Beyond this `v`, `E(v) ≥ μ3 Ψ(v) − v > 0`.
fn scan_limit(kin: &Kinetics, mu3: f64) -> f64 {
    let p = kin.params();
    // μ3 δ (1 + σ v² − β_l v) / m4 − 1 = 0
    let a = mu3 * p.delta * p.sigma / p.m4;
    let b = -mu3 * p.delta * p.beta_l / p.m4;
    let c = mu3 * p.delta / p.m4 - 1.0;
    let disc = b * b - 4.0 * a * c;
    let root = if disc > 0.0 { (-b + disc.sqrt()) / (2.0 * a) } else { 0.0 };
    let folds = (p.beta_l + (p.beta_l * p.beta_l - 3.0 * p.sigma).max(0.0).sqrt()) / (3.0 * p.sigma);
    1.25 * root.max(folds).max(1.0)
}

fn classify(kin: &Kinetics, u: f64, v: f64) -> Equilibrium {
    let j = kin.jacobian(u, v);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let tr = j[0][0] + j[1][1];
    let kind = if det < 0.0 {
        EquilibriumKind::Saddle
    } else if tr < 0.0 {
        EquilibriumKind::Stable
    } else {
        EquilibriumKind::Unstable
    };
    Equilibrium {
        u,
        v,
        kind,
        jacobian: j,
    }
}

/// All equilibria ordered by `u`, starting with the origin.
pub fn equilibria(kin: &Kinetics) -> Result<Vec<Equilibrium>> {
    let mu3 = kin.params().mu3;
    let vmax = scan_limit(kin, mu3);
    let e = |v: f64| e_value(kin, mu3, v);
    let opts = RootOptions {
        x_abs: 0.0,
        x_rel: 2.0 * f64::EPSILON,
        max_iter: 300,
    };
    let mut out = vec![classify(kin, 0.0, 0.0)];
    let h = vmax / SCAN_CELLS as f64;
    // skip the trivial zero at v = 0
    let mut v0 = 1e-6 * h;
    let mut e0 = e(v0);
    for i in 1..=SCAN_CELLS {
        let v1 = i as f64 * h;
        let e1 = e(v1);
        if e1 == 0.0 || e0 * e1 < 0.0 {
            let v = if e1 == 0.0 { v1 } else { brent_with(e, v0, v1, e0, e1, &opts)? };
            out.push(classify(kin, kin.psi(v), v));
        } else if i > 1 && e0.abs() < 1e-10 * v0 && e0 * e1 > 0.0 {
            // touching zero without crossing
            return Err(Error::DegenerateEquilibria { u: kin.psi(v0) });
        }
        v0 = v1;
        e0 = e1;
    }
    for w in out.windows(2).skip(1) {
        if (w[1].u - w[0].u).abs() < COALESCE_TOL {
            return Err(Error::DegenerateEquilibria { u: w[0].u });
        }
    }
    Ok(out)
}

/// Minimum of `E` over `(lo, hi]` by scan plus golden-section refinement.
fn min_e(kin: &Kinetics, mu3: f64, lo: f64, hi: f64) -> f64 {
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let mut best = (f64::INFINITY, lo);
    for i in 1..=n {
        let v = lo + i as f64 * h;
        let ev = e_value(kin, mu3, v);
        if ev < best.0 {
            best = (ev, v);
        }
    }
    let (mut a, mut b) = ((best.1 - h).max(lo + 1e-3 * h), (best.1 + h).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = b - r * (b - a);
        let x2 = a + r * (b - a);
        if e_value(kin, mu3, x1) < e_value(kin, mu3, x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.0.min(e_value(kin, mu3, 0.5 * (a + b)))
}

/// Edges of the `μ3` window; `tol` applies to the tangency edge.
///
/// `E(v)` is affine in `μ3`, so `E(v-) = 0` and `E(v+) = 0` give the fold
/// edges in closed form. The lower edge also keeps `E′(0) > 0`, without
/// which a further equilibrium appears next to the origin.
pub fn mu3_window(table: &BranchTable, tol: f64) -> Result<Mu3Window> {
    let kin = table.kinetics();
    let (c, k, _) = kin.sink_constants();
    let p = kin.params();
    let at_fold = |v: f64| {
        let u = kin.psi(v);
        (v - kin.sink(u)) / u
    };
    let origin = p.m4 / p.delta - c / k;
    let lower = at_fold(table.v_minus).max(origin).max(0.0);
    let upper = at_fold(table.v_plus);

    let has_dip = |mu3: f64| min_e(kin, mu3, 0.0, scan_limit(kin, mu3)) < 0.0;
    let mut hi = upper.max(1.0);
    while has_dip(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Root("mu3 tangency edge not bracketed".into()));
        }
    }
    let opts = RootOptions {
        x_abs: tol,
        x_rel: 0.0,
        max_iter: 400,
    };
    let tangency = bisect(|m| if has_dip(m) { -1.0 } else { 1.0 }, upper.min(hi), hi, &opts)?;
    Ok(Mu3Window { lower, upper, tangency })
}
