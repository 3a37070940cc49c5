//! All members of a family with a prescribed `γ`.
//!
//! The family is scanned on one log coordinate `s` that covers both ends:
//! `s ≤ 0` sets the drop `m²/2 = (e_min/2)·10^s`, `s ≥ 0` sets the gap
//! `m_sup²/2 − m²/2 = (e_min/2)·10^(−s)`. `m` increases with `s`, and `γ`
//! grows like `log(1/gap)²` at the far end.

use rayon::prelude::*;
use serde::Serialize;

use super::{LayerFamily, LayerSolution, Shot};
use crate::error::Result;
use crate::roots::{brent_with, RootOptions};

#[derive(Debug, Clone, Copy)]
pub struct GammaScanOptions {
    pub points_per_decade: usize,
    /// Decades of `m²` scanned below `e_min/2`.
    pub slope_decades: f64,
    /// Smallest gap to the supremum.
    pub gap_floor: f64,
    /// Root tolerance in the scan coordinate (decades).
    pub s_tol: f64,
}

impl Default for GammaScanOptions {
    fn default() -> Self {
        Self {
            points_per_decade: 8,
            slope_decades: 40.0,
            gap_floor: 1e-200,
            s_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaSample {
    pub s: f64,
    pub m: f64,
    pub gap: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct GammaScan {
    pub solutions: Vec<LayerSolution>,
    pub samples: Vec<GammaSample>,
    pub points_per_decade: usize,
}

fn shot(family: &LayerFamily, s: f64) -> Shot {
    let half = 0.5 * family.e_min();
    if s <= 0.0 {
        Shot::Slope((2.0 * half * 10f64.powf(s)).sqrt())
    } else {
        Shot::Gap(half * 10f64.powf(-s))
    }
}

fn sample(family: &LayerFamily, s: f64) -> Result<GammaSample> {
    let sol = family.solve(shot(family, s))?;
    Ok(GammaSample {
        s,
        m: sol.m,
        gap: sol.gap,
        gamma: sol.gamma,
    })
}

pub fn solve_for_gamma(family: &LayerFamily, gamma: f64, opts: &GammaScanOptions) -> Result<GammaScan> {
    let ppd = opts.points_per_decade.max(1);
    let step = 1.0 / ppd as f64;
    let s_min = -opts.slope_decades;
    let s_max = (0.5 * family.e_min() / opts.gap_floor).log10();

    let grid = |a: f64, b: f64| -> Vec<f64> {
        let n = ((b - a) / step).round() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    };
    let mut samples: Vec<GammaSample> = grid(s_min, 0.0).par_iter().map(|&s| sample(family, s)).collect::<Result<_>>()?;
    // the far end, one decade at a time until γ has clearly passed the target
    let mut lo = 0.0;
    let mut above = 0;
    while lo < s_max {
        let hi = (lo + 1.0).min(s_max);
        let block: Vec<GammaSample> = grid(lo, hi)
            .into_iter()
            .skip(1)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&s| sample(family, s))
            .collect::<Result<_>>()?;
        let rising = block.windows(2).all(|w| w[1].gamma > w[0].gamma);
        if rising && block.iter().all(|b| b.gamma > 4.0 * gamma) {
            above += 1;
        } else {
            above = 0;
        }
        samples.extend(block);
        lo = hi;
        if above >= 2 {
            break;
        }
    }

    let root_opts = RootOptions {
        x_abs: opts.s_tol,
        x_rel: 0.0,
        max_iter: 200,
    };
    let brackets: Vec<(f64, f64, f64, f64)> = samples
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (w[0].gamma / gamma - 1.0, w[1].gamma / gamma - 1.0);
            (a == 0.0 || a * b < 0.0).then_some((w[0].s, w[1].s, a, b))
        })
        .collect();
    let solutions: Vec<LayerSolution> = brackets
        .par_iter()
        .map(|&(a, b, fa, fb)| {
            let s = if fa == 0.0 {
                a
            } else {
                brent_with(
                    |s| match family.solve(shot(family, s)) {
                        Ok(sol) => sol.gamma / gamma - 1.0,
                        Err(_) => f64::NAN,
                    },
                    a,
                    b,
                    fa,
                    fb,
                    &root_opts,
                )?
            };
            family.solve(shot(family, s))
        })
        .collect::<Result<_>>()?;
    Ok(GammaScan {
        solutions,
        samples,
        points_per_decade: ppd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{Kinetics, ModelParams};
    use crate::stationary::Potentials;
    use std::sync::Arc;

    fn family(beta: f64) -> LayerFamily {
        let kin = Kinetics::new(ModelParams::reference()).unwrap();
        LayerFamily::new(Arc::new(Potentials::new(&kin).unwrap()), beta).unwrap()
    }

    #[test]
    fn finds_solutions_across_scales() {
        let f = family(3.5);
        for &g in &[1e-4, 1.0, 50.0, 2e3] {
            let scan = solve_for_gamma(&f, g, &GammaScanOptions::default()).unwrap();
            assert!(!scan.solutions.is_empty(), "gamma {g}");
            for s in &scan.solutions {
                assert!((s.gamma - g).abs() < 1e-9 * g, "{} vs {g}", s.gamma);
            }
        }
    }

    #[test]
    fn samples_ordered_by_slope() {
        let f = family(3.5);
        let scan = solve_for_gamma(&f, 10.0, &GammaScanOptions::default()).unwrap();
        assert!(scan.samples.windows(2).all(|w| w[1].m >= w[0].m));
        assert!(scan.samples.windows(2).all(|w| w[1].s > w[0].s));
        assert_eq!(scan.points_per_decade, 8);
    }
}
