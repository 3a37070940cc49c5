//! Cross-check of the quadrature profiles against direct integration of
//! `u″ = −γ f(u, h_j(u))` from the jump.

use rayon::prelude::*;

use super::{LayerSolution, StationaryProfile};
use crate::error::Result;
use crate::kinetics::Branch;
use crate::ode::{solve, OdeOptions};

/// `u` at `x` from shooting out of `(l, β)` with the slope the profile has there.
pub fn shoot_from_jump(sol: &LayerSolution, x: f64, tol: f64) -> Result<f64> {
    let pot = sol.potentials();
    let (kin, table) = (pot.kinetics(), pot.branches());
    let g = sol.gamma;
    let opts = OdeOptions {
        rtol: tol,
        atol: 1e-3 * tol,
        ..OdeOptions::default()
    };
    let du = sol.slope_at_jump();
    let rhs = |branch: Branch| {
        move |_: f64, y: &[f64; 2]| {
            let (lo, hi) = table.domain(branch);
            let u = y[0].clamp(lo, hi);
            let v = table.h(branch, u).unwrap_or(f64::NAN);
            [y[1], -g * kin.f(u, v)]
        }
    };
    if x == sol.l {
        return Ok(sol.beta);
    }
    if x < sol.l {
        // reflected time s = l − x
        let out = solve(rhs(Branch::Lower), 0.0, [sol.beta, -du], sol.l - x, &opts)?;
        Ok(out.y[0])
    } else {
        let out = solve(rhs(Branch::Upper), sol.l, [sol.beta, du], x, &opts)?;
        Ok(out.y[0])
    }
}

/// Largest `|u_quad − u_shoot|` over `points + 1` equally spaced abscissae.
pub fn shooting_deviation(sol: &LayerSolution, points: usize, tol: f64) -> Result<f64> {
    let points = points.max(1);
    let errs: Vec<f64> = (0..=points)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / points as f64;
            Ok((sol.state_at(x)?.u - shoot_from_jump(sol, x, tol)?).abs())
        })
        .collect::<Result<_>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}
