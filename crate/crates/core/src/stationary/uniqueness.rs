//! Monotonicity of the total stretched width `T(k) = M(k) + N(p(k))`.
//!
//! `γ = T²`, so `T′ < 0` on the whole `k` range means each `γ` is met by
//! exactly one member of the family. A sufficient condition is
//! `Δ_j = f_u g_v − f_v g_u > 0` along both branches between the turning
//! values and the jump, which pins `β` to the window `(β_Δ, B_Δ)`.

use rayon::prelude::*;
use serde::Serialize;

use super::{LayerFamily, Potentials};
use crate::error::{Error, Result};
use crate::kinetics::Branch;
use crate::roots::{brent, RootOptions};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TSample {
    pub k: f64,
    pub p: f64,
    #[serde(rename = "M")]
    pub m_half: f64,
    #[serde(rename = "N")]
    pub n_half: f64,
    pub t: f64,
    /// `F0(k) / F1(p(k))`
    pub dpdk: f64,
    /// Central-difference estimate of `dp/dk`.
    pub dpdk_fd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub beta: f64,
    pub beta_window: (f64, f64),
    pub in_window: bool,
    pub samples: Vec<TSample>,
    /// `T` strictly decreasing over the samples.
    pub monotone: bool,
    /// Above this `γ` the sampled `T` meets each level once; zero when monotone.
    pub gamma_star: f64,
    pub max_dpdk_rel_err: f64,
}

fn delta(pot: &Potentials, branch: Branch, u: f64) -> f64 {
    match pot.branches().h(branch, u) {
        Ok(v) => pot.kinetics().jacobian_det(u, v),
        Err(_) => f64::NAN,
    }
}

fn sign_changes(f: impl Fn(f64) -> f64 + Sync, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let fs: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect();
    let opts = RootOptions {
        x_abs: 0.0,
        x_rel: 4.0 * f64::EPSILON,
        max_iter: 200,
    };
    let mut out = Vec::new();
    for i in 0..n {
        if fs[i] * fs[i + 1] < 0.0 {
            out.push(brent(&f, xs[i], xs[i + 1], &opts)?);
        }
    }
    Ok(out)
}

/// `(β_Δ, B_Δ)`: `B_Δ` is the first zero of `Δ0` along `h0`, `β_Δ` the last
/// zero of `Δ1` along `h1` below `u1`.
pub fn delta_window(pot: &Potentials) -> Result<(f64, f64)> {
    let t = pot.branches();
    let upper = sign_changes(|u| delta(pot, Branch::Lower, u), 0.0, t.u_plus, 4000)?
        .first()
        .copied()
        .unwrap_or(t.u_plus);
    let lower = sign_changes(|u| delta(pot, Branch::Upper, u), t.u_minus, pot.u1, 4000)?
        .last()
        .copied()
        .unwrap_or(t.u_minus);
    Ok((lower, upper))
}

/// `n` turning values spaced geometrically over the admissible `k` range,
/// from `k_lo_rel·β` (or just above the smallest feasible `k`) to `0.999 β`.
pub fn log_k_grid(family: &LayerFamily, n: usize, k_lo_rel: f64) -> Result<Vec<f64>> {
    let beta = family.beta;
    let mut lo = k_lo_rel * beta;
    if family.balance < 0.0 {
        // 𝓕1(p) must stay below zero: G0(k) > −D
        let k_min = family.potentials().left.turning_from_gap(-family.balance, beta)?;
        lo = lo.max(k_min + k_lo_rel * (beta - k_min));
    }
    let hi = 0.999 * beta;
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("empty k range ({lo}, {hi})")));
    }
    let n = n.max(2);
    Ok((0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect())
}

fn central_dpdk(family: &LayerFamily, k: f64) -> Result<f64> {
    let h = 1e-4 * k.min(family.beta - k);
    let d = |h: f64| -> Result<f64> { Ok((family.p_of_k(k + h)? - family.p_of_k(k - h)?) / (2.0 * h)) };
    // Richardson on the O(h²) error
    let (a, b) = (d(h)?, d(0.5 * h)?);
    Ok(b + (b - a) / 3.0)
}

pub fn uniqueness_scan(family: &LayerFamily, k_grid: &[f64]) -> Result<UniquenessReport> {
    let pot = family.potentials();
    let mut ks = k_grid.to_vec();
    ks.sort_by(f64::total_cmp);
    let samples: Vec<TSample> = ks
        .par_iter()
        .map(|&k| {
            let sol = family.at_k(k)?;
            let f0 = pot.reaction(Branch::Lower, k)?;
            let f1 = pot.reaction(Branch::Upper, sol.p)?;
            Ok(TSample {
                k,
                p: sol.p,
                m_half: sol.m_half,
                n_half: sol.n_half,
                t: sol.m_half + sol.n_half,
                dpdk: f0 / f1,
                dpdk_fd: central_dpdk(family, k)?,
            })
        })
        .collect::<Result<_>>()?;
    let first_fail = samples.windows(2).position(|w| !(w[1].t < w[0].t));
    let gamma_star = match first_fail {
        None => 0.0,
        Some(i) => samples[i..].iter().map(|s| s.t).fold(0.0, f64::max).powi(2),
    };
    let max_dpdk_rel_err = samples
        .iter()
        .map(|s| ((s.dpdk_fd - s.dpdk) / s.dpdk).abs())
        .fold(0.0, f64::max);
    let beta_window = delta_window(pot)?;
    Ok(UniquenessReport {
        beta: family.beta,
        beta_window,
        in_window: family.beta > beta_window.0 && family.beta < beta_window.1,
        samples,
        monotone: first_fail.is_none(),
        gamma_star,
        max_dpdk_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{Kinetics, ModelParams};
    use std::sync::Arc;

    fn pot() -> Arc<Potentials> {
        let kin = Kinetics::new(ModelParams::reference()).unwrap();
        Arc::new(Potentials::new(&kin).unwrap())
    }

    #[test]
    fn reference_delta_window() {
        let (lo, hi) = delta_window(&pot()).unwrap();
        assert!((lo - 1.829_199).abs() < 1e-5, "{lo}");
        assert!((hi - 4.843_536).abs() < 1e-5, "{hi}");
    }

    #[test]
    fn delta_signs_match_reaction_slopes() {
        // Δ_j = F_j′ g_v with g_v < 0 on the stable branches
        let p = pot();
        for &u in &[0.5, 2.0, 4.0] {
            let h = 1e-6;
            let fd = (p.reaction(Branch::Lower, u + h).unwrap() - p.reaction(Branch::Lower, u - h).unwrap()) / (2.0 * h);
            let v = p.branches().h(Branch::Lower, u).unwrap();
            let gv = p.kinetics().jacobian(u, v)[1][1];
            assert!((delta(&p, Branch::Lower, u) - fd * gv).abs() < 1e-6);
        }
    }

    #[test]
    fn scan_inside_window_is_monotone() {
        let f = LayerFamily::new(pot(), 3.0).unwrap();
        let grid = log_k_grid(&f, 60, 1e-3).unwrap();
        let r = uniqueness_scan(&f, &grid).unwrap();
        assert!(r.in_window);
        assert!(r.monotone);
        assert_eq!(r.gamma_star, 0.0);
        assert!(r.max_dpdk_rel_err < 1e-4, "{}", r.max_dpdk_rel_err);
        assert!(r.samples.iter().all(|s| s.dpdk < 0.0));
    }

    #[test]
    fn half_width_decreases_for_small_k() {
        let f = LayerFamily::new(pot(), 3.0).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| 3.0 * 1e-2 * 10f64.powf(-(i as f64) / 4.0)).rev().collect();
        let r = uniqueness_scan(&f, &grid).unwrap();
        assert!(r.samples.windows(2).all(|w| w[1].m_half < w[0].m_half));
    }

    #[test]
    fn left_case_grid_stays_feasible() {
        let f = LayerFamily::new(pot(), 4.3).unwrap();
        let grid = log_k_grid(&f, 30, 1e-3).unwrap();
        let r = uniqueness_scan(&f, &grid).unwrap();
        assert!(r.samples.iter().all(|s| s.t.is_finite() && s.p < f.potentials().u1));
    }
}
