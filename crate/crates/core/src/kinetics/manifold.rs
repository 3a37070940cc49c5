//! Stable manifold of the saddle and the basin classifier built on it.

use serde::Serialize;

use super::equilibria::{equilibria, Equilibrium, EquilibriumKind};
use super::Kinetics;
use crate::error::{Error, Result};
use crate::ode::{solve_with_event, OdeOptions};

#[derive(Debug, Clone, Copy)]
pub struct ManifoldOptions {
    /// Seed offset from the saddle, relative to `max(u_m, v_m)`.
    pub epsilon: f64,
    pub rtol: f64,
    pub arclength_budget: f64,
    /// Allowed change of the intercepts when the offset is halved.
    pub tol: f64,
    /// Points closer than this to the polyline are reported as on the manifold.
    pub on_tol: f64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            rtol: 1e-9,
            arclength_budget: 1e4,
            tol: 1e-6,
            on_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StableManifold {
    /// Ordered by increasing `u`, from `(0, V_s)` through the saddle to `(U_s, 0)`.
    pub points: Vec<(f64, f64)>,
    pub u_s: f64,
    pub v_s: f64,
    /// Change of `(U_s, V_s)` between offsets `ε` and `ε/2`.
    pub drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Basin of the origin.
    S1,
    /// Basin of the upper stable equilibrium.
    S2,
    OnManifold,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhasePortrait {
    pub equilibria: Vec<Equilibrium>,
    pub manifold: StableManifold,
    #[serde(skip)]
    on_tol: f64,
}

impl PhasePortrait {
    pub fn compute(kin: &Kinetics, opts: &ManifoldOptions) -> Result<Self> {
        let equilibria = equilibria(kin)?;
        let saddle = *equilibria
            .iter()
            .find(|e| e.kind == EquilibriumKind::Saddle)
            .ok_or(Error::NoSaddle)?;
        let manifold = stable_manifold(kin, &saddle, opts)?;
        Ok(Self {
            equilibria,
            manifold,
            on_tol: opts.on_tol,
        })
    }

    pub fn saddle(&self) -> &Equilibrium {
        self.equilibria
            .iter()
            .find(|e| e.kind == EquilibriumKind::Saddle)
            .expect("portrait always holds a saddle")
    }

    /// The stable equilibrium with the largest `u`.
    pub fn upper_state(&self) -> &Equilibrium {
        self.equilibria.last().expect("portrait always holds the origin")
    }

    /// Which side of `W^s` a first-quadrant point lies on.
    pub fn classify_region(&self, u: f64, v: f64) -> Region {
        let pts = &self.manifold.points;
        let scale = self.saddle().u.max(self.saddle().v);
        if distance_to_polyline(pts, u, v) <= self.on_tol * scale {
            return Region::OnManifold;
        }
        if u >= self.manifold.u_s {
            return Region::S2;
        }
        if v >= self.manifold.v_s {
            return Region::S2;
        }
        let i = pts.partition_point(|p| p.0 <= u).clamp(1, pts.len() - 1);
        let (a, b) = (pts[i - 1], pts[i]);
        let vm = if b.0 > a.0 {
            a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
        } else {
            a.1.min(b.1)
        };
        if v > vm {
            Region::S2
        } else {
            Region::S1
        }
    }

    /// `v` on the manifold above a given `u` in `[0, U_s]`.
    pub fn manifold_v_at(&self, u: f64) -> f64 {
        let pts = &self.manifold.points;
        if u <= pts[0].0 {
            return pts[0].1;
        }
        let i = pts.partition_point(|p| p.0 <= u).clamp(1, pts.len() - 1);
        let (a, b) = (pts[i - 1], pts[i]);
        if u >= b.0 {
            return b.1;
        }
        a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
    }
}

fn distance_to_polyline(pts: &[(f64, f64)], u: f64, v: f64) -> f64 {
    let mut best = f64::INFINITY;
    for w in pts.windows(2) {
        let (ax, ay) = w[0];
        let (bx, by) = w[1];
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((u - ax) * dx + (v - ay) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (px, py) = (ax + t * dx, ay + t * dy);
        best = best.min(((u - px).powi(2) + (v - py).powi(2)).sqrt());
    }
    best
}

struct Arm {
    points: Vec<(f64, f64)>,
    end: (f64, f64),
}

fn trace_arm(kin: &Kinetics, start: [f64; 2], opts: &ManifoldOptions) -> Result<Arm> {
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.rtol * 1e-3,
        max_steps: 1_000_000,
        ..OdeOptions::default()
    };
    let reversed = |_: f64, y: &[f64; 2]| {
        let r = kin.reduced(y);
        [-r[0], -r[1]]
    };
    let out = solve_with_event(reversed, 0.0, start, 1e4, &ode, |_, y: &[f64; 2]| y[0].min(y[1]))?;
    let mut points = Vec::new();
    for step in &out.dense.steps {
        let t_stop = (step.t0 + step.h).min(out.t);
        for j in 0..4 {
            let t = step.t0 + (t_stop - step.t0) * j as f64 / 4.0;
            let y = step.eval(t);
            points.push((y[0], y[1]));
        }
    }
    points.push((out.y[0], out.y[1]));
    let arclength: f64 = points
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .sum();
    if !out.event || arclength > opts.arclength_budget {
        return Err(Error::IncompleteManifold {
            arclength,
            points: points.len(),
            partial: points,
        });
    }
    Ok(Arm {
        end: (out.y[0], out.y[1]),
        points,
    })
}

fn trace(kin: &Kinetics, saddle: &Equilibrium, eps: f64, opts: &ManifoldOptions) -> Result<(Arm, Arm)> {
    let j = saddle.jacobian;
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let lambda_s = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
    // (J − λ I) e = 0 with f_v = 1 gives e = (1, λ − f_u)
    let (e1, e2) = (1.0, lambda_s - j[0][0]);
    let n = (e1 * e1 + e2 * e2).sqrt();
    let scale = saddle.u.max(saddle.v);
    let d = eps * scale / n;
    let to_u_axis = trace_arm(kin, [saddle.u + d * e1, saddle.v + d * e2], opts)?;
    let to_v_axis = trace_arm(kin, [saddle.u - d * e1, saddle.v - d * e2], opts)?;
    Ok((to_u_axis, to_v_axis))
}

/// Both arms of `W^s` traced backwards in time from the saddle to the axes.
pub fn stable_manifold(kin: &Kinetics, saddle: &Equilibrium, opts: &ManifoldOptions) -> Result<StableManifold> {
    let (ua, va) = trace(kin, saddle, opts.epsilon, opts)?;
    let (ub, vb) = trace(kin, saddle, 0.5 * opts.epsilon, opts)?;
    let drift = (ua.end.0 - ub.end.0).abs().max((va.end.1 - vb.end.1).abs());
    let scale = saddle.u.max(saddle.v);
    if drift > opts.tol * scale {
        return Err(Error::ManifoldNotConverged {
            drift,
            tol: opts.tol * scale,
        });
    }
    if ua.end.1.abs() > 1e-9 * scale || va.end.0.abs() > 1e-9 * scale {
        return Err(Error::IncompleteManifold {
            arclength: f64::NAN,
            points: ua.points.len() + va.points.len(),
            partial: ua.points,
        });
    }
    let mut pts: Vec<(f64, f64)> = vb.points.iter().rev().copied().collect();
    pts.push((saddle.u, saddle.v));
    pts.extend(ub.points.iter().copied());
    let (u_end, v_end) = (ub.end.0, vb.end.1);
    if let Some(first) = pts.first_mut() {
        *first = (0.0, v_end);
    }
    if let Some(last) = pts.last_mut() {
        *last = (u_end, 0.0);
    }
    // the seeds sit within ε of the saddle; drop samples that break u-monotonicity there
    let mut mono: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        if mono.last().is_none_or(|q: &(f64, f64)| p.0 > q.0) {
            mono.push(p);
        }
    }
    Ok(StableManifold {
        points: mono,
        u_s: u_end,
        v_s: v_end,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::ModelParams;

    fn portrait() -> PhasePortrait {
        let k = Kinetics::new(ModelParams::reference()).unwrap();
        PhasePortrait::compute(&k, &ManifoldOptions::default()).unwrap()
    }

    #[test]
    fn manifold_reaches_both_axes_and_is_a_graph() {
        let p = portrait();
        let m = &p.manifold;
        assert!(m.u_s > p.saddle().u && m.v_s > p.saddle().v);
        assert!(m.points.windows(2).all(|w| w[1].0 > w[0].0));
        assert!(m.points.windows(2).all(|w| w[1].1 < w[0].1));
        assert_eq!(m.points[0].0, 0.0);
        assert_eq!(m.points.last().unwrap().1, 0.0);
    }

    #[test]
    fn manifold_points_flow_into_the_saddle() {
        // forward integration from a manifold point stays near it for a long time
        let k = Kinetics::new(ModelParams::reference()).unwrap();
        let p = portrait();
        let s = *p.saddle();
        let m = &p.manifold;
        let start = m.points[m.points.len() / 3];
        let out = crate::ode::solve(|_, y: &[f64; 2]| k.reduced(y), 0.0, [start.0, start.1], 20.0, &OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            ..OdeOptions::default()
        })
        .unwrap();
        let dist = (0..2000)
            .map(|i| out.dense.eval(0.01 * i as f64))
            .map(|y| ((y[0] - s.u).powi(2) + (y[1] - s.v).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(dist < 1e-4, "distance to saddle {dist}");
    }

    #[test]
    fn classifier_regions() {
        let p = portrait();
        let s = *p.saddle();
        let up = *p.upper_state();
        assert_eq!(p.classify_region(up.u, up.v), Region::S2);
        assert_eq!(p.classify_region(s.u, s.v), Region::OnManifold);
        let mid = p.manifold.points[p.manifold.points.len() / 4];
        assert_eq!(p.classify_region(0.5 * mid.0, 0.5 * mid.1), Region::S1);
        assert_eq!(p.classify_region(0.1, 0.1), Region::S1);
        assert_eq!(p.classify_region(2.0 * p.manifold.u_s, 0.1), Region::S2);
    }

    #[test]
    fn crossing_the_manifold_flips_the_region() {
        let p = portrait();
        let pts = &p.manifold.points;
        for i in (5..pts.len() - 5).step_by(pts.len() / 20) {
            let (u, v) = pts[i];
            let h = 1e-3 * p.manifold.v_s;
            assert_eq!(p.classify_region(u, v + h), Region::S2);
            assert_eq!(p.classify_region(u, (v - h).max(1e-9)), Region::S1);
        }
    }

    #[test]
    fn halving_seed_is_stable() {
        assert!(portrait().manifold.drift < 1e-6);
    }
}
