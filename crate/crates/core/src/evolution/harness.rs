use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{simulate_observed, simulate_reduced, Discretization, Grid1D, Scheme, SimState, StepControl, SystemKind};
use crate::error::{Error, Result};
use crate::kinetics::{Kinetics, PhasePortrait, Region};
use crate::stationary::LayerProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Smallest `u_high − u_low` over all cells and steps.
    pub min_du: f64,
    pub min_dv: f64,
    pub tolerance: f64,
    pub steps: usize,
    pub passed: bool,
}

/// Runs an ordered pair of reduced states in lockstep with the explicit
/// monotone scheme and records how far the ordering is ever violated.
pub fn comparison_harness(low: &SimState, high: &SimState, kin: &Kinetics, t_end: f64) -> Result<ComparisonReport> {
    const TOL: f64 = 1e-9;
    if low.kind != SystemKind::Reduced || high.kind != SystemKind::Reduced {
        return Err(Error::InvalidInput("comparison needs reduced states".into()));
    }
    if low.grid != high.grid {
        return Err(Error::InvalidInput("comparison needs a common grid".into()));
    }
    let ordered = low
        .fields
        .iter()
        .zip(&high.fields)
        .all(|(a, b)| a.iter().zip(b).all(|(x, y)| y >= x));
    if !ordered {
        return Err(Error::InvalidInput("high state must dominate low state componentwise".into()));
    }
    let disc = Discretization::new(kin, SystemKind::Reduced, low.grid);
    let control = StepControl::explicit();
    let (mut a, mut b) = (low.clone(), high.clone());
    let mut min_d = [f64::INFINITY; 2];
    let mut record = |a: &SimState, b: &SimState| {
        for j in 0..2 {
            let m = a.fields[j].iter().zip(&b.fields[j]).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min);
            min_d[j] = min_d[j].min(m);
        }
    };
    record(&a, &b);
    let mut steps = 0;
    while a.time < t_end {
        let mut dt = disc.stable_dt(&a, &control).min(disc.stable_dt(&b, &control));
        if a.time + dt > t_end {
            dt = t_end - a.time;
        }
        disc.step(&mut a, Scheme::SspRk3, dt);
        disc.step(&mut b, Scheme::SspRk3, dt);
        super::check_finite(&a, &a)?;
        super::check_finite(&b, &b)?;
        record(&a, &b);
        steps += 1;
        if t_end - a.time < 1e-14 * t_end.max(1.0) {
            break;
        }
    }
    Ok(ComparisonReport {
        min_du: min_d[0],
        min_dv: min_d[1],
        tolerance: TOL,
        steps,
        passed: min_d[0] >= -TOL && min_d[1] >= -TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasinVerdict {
    ToOrigin,
    ToUpper,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinReport {
    /// From the position of the initial range relative to the stable manifold.
    pub predicted: BasinVerdict,
    /// From the final sup-distance to the two stable states.
    pub verdict: BasinVerdict,
    pub distance_to_origin: f64,
    pub distance_to_upper: f64,
    pub t_end: f64,
}

impl BasinReport {
    /// The outcome matches a definite prediction.
    pub fn confirmed(&self) -> bool {
        self.predicted != BasinVerdict::Undecided && self.predicted == self.verdict
    }
}

/// Predicts the limit from the corners of the initial range, then simulates.
pub fn basin_convergence(
    init: &SimState,
    portrait: &PhasePortrait,
    kin: &Kinetics,
    t_end: f64,
    tol: f64,
) -> Result<BasinReport> {
    if init.kind != SystemKind::Reduced {
        return Err(Error::InvalidInput("basin convergence needs a reduced state".into()));
    }
    let (u_lo, u_hi) = init.field_range(0);
    let (v_lo, v_hi) = init.field_range(1);
    let predicted = if portrait.classify_region(u_lo, v_lo) == Region::S2 {
        BasinVerdict::ToUpper
    } else if portrait.classify_region(u_hi, v_hi) == Region::S1 {
        BasinVerdict::ToOrigin
    } else {
        BasinVerdict::Undecided
    };
    let out = simulate_reduced(init, kin, t_end, &StepControl::default())?.final_state;
    let upper = portrait.upper_state();
    let dist = |u: f64, v: f64| {
        out.fields[0]
            .iter()
            .zip(&out.fields[1])
            .map(|(a, b)| (a - u).abs().max((b - v).abs()))
            .fold(0.0, f64::max)
    };
    let (d0, d1) = (dist(0.0, 0.0), dist(upper.u, upper.v));
    let verdict = if d1 < tol {
        BasinVerdict::ToUpper
    } else if d0 < tol {
        BasinVerdict::ToOrigin
    } else {
        BasinVerdict::Undecided
    };
    Ok(BasinReport {
        predicted,
        verdict,
        distance_to_origin: d0,
        distance_to_upper: d1,
        t_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRow {
    pub time: f64,
    /// `sup |u(t) − u*|` against the unperturbed profile.
    pub sup_drift_u: f64,
    /// Cell interface with the largest `|Δu|`.
    pub jump_proxy: f64,
    /// Cell interface with the largest `|Δv|`.
    pub v_jump: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub amplitude: f64,
    pub seed: u64,
    pub rows: Vec<DriftRow>,
}

impl DriftReport {
    pub fn max_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.sup_drift_u).fold(0.0, f64::max)
    }
}

fn argmax_interface(f: &[f64], grid: Grid1D) -> f64 {
    let i = f
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best })
        .0;
    (i + 1) as f64 * grid.spacing()
}

impl SimState {
    /// Reduced state sampled at cell centres from a stationary profile,
    /// interpolating linearly between samples on the same side of a jump.
    pub fn from_profile(profile: &LayerProfile, grid: Grid1D) -> Result<Self> {
        let xs = &profile.x;
        let at = |f: &[f64], x: f64| {
            let j = xs.partition_point(|&p| p <= x).clamp(1, xs.len() - 1);
            let (a, b) = (xs[j - 1], xs[j]);
            if b > a {
                f[j - 1] + (f[j] - f[j - 1]) * (x - a) / (b - a)
            } else {
                f[j]
            }
        };
        let fields = vec![
            grid.nodes().iter().map(|&x| at(&profile.u, x)).collect(),
            grid.nodes().iter().map(|&x| at(&profile.v, x)).collect(),
        ];
        SimState::new(grid, SystemKind::Reduced, fields)
    }
}

/// Perturbs `u` of a stationary profile by a seeded sum of cosine modes of
/// sup-norm at most `amplitude`, keeps `v` as given, and records the drift
/// at `samples` equally spaced times.
pub fn stability_probe(
    profile: &LayerProfile,
    kin: &Kinetics,
    grid: Grid1D,
    amplitude: f64,
    t_end: f64,
    samples: usize,
    seed: u64,
) -> Result<DriftReport> {
    let g = kin.params().gamma;
    if ((profile.header.gamma - g) / g).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "profile was built for gamma {} but the model has {g}",
            profile.header.gamma
        )));
    }
    let base = SimState::from_profile(profile, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..=4).map(|_| rng.gen_range(-1.0..1.0) / 5.0).collect();
    let mut init = base.clone();
    for (u, x) in init.fields[0].iter_mut().zip(grid.nodes()) {
        let noise: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * (k as f64 * std::f64::consts::PI * x).cos())
            .sum();
        *u = (*u + amplitude * noise).max(0.0);
    }
    let samples = samples.max(1);
    let times: Vec<f64> = (0..=samples).map(|i| t_end * i as f64 / samples as f64).collect();
    let control = StepControl::default().with_snapshots(times);
    let traj = simulate_observed(&init, kin, t_end, &control, |_| Ok(()))?;
    let rows = traj
        .snapshots
        .iter()
        .map(|s| DriftRow {
            time: s.time,
            sup_drift_u: s.fields[0].iter().zip(&base.fields[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            jump_proxy: argmax_interface(&s.fields[0], grid),
            v_jump: argmax_interface(&s.fields[1], grid),
        })
        .collect();
    Ok(DriftReport { amplitude, seed, rows })
}

/// Positive data `a_j (1 + Σ_k c_jk cos(kπx))` for every field, with levels
/// `a_j` log-uniform in `levels` and `Σ|c_jk| ≤ 0.9`.
pub fn random_positive_state(grid: Grid1D, kind: SystemKind, levels: (f64, f64), rng: &mut impl Rng) -> Result<SimState> {
    let n = kind.n_fields();
    let spec: Vec<(f64, [f64; 3])> = (0..n)
        .map(|_| {
            let a = levels.0 * (levels.1 / levels.0).powf(rng.gen::<f64>());
            let c = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            (a, c)
        })
        .collect();
    SimState::from_fn(grid, kind, |x| {
        spec.iter()
            .map(|(a, c)| {
                let wave: f64 = c.iter().enumerate().map(|(k, ck)| ck * ((k + 1) as f64 * std::f64::consts::PI * x).cos()).sum();
                a * (1.0 + wave)
            })
            .collect()
    })
}

/// A reduced state and a second one above it by a random nonnegative smooth shift.
pub fn random_ordered_pair(grid: Grid1D, levels: (f64, f64), rng: &mut impl Rng) -> Result<(SimState, SimState)> {
    let low = random_positive_state(grid, SystemKind::Reduced, levels, rng)?;
    let mut high = low.clone();
    for f in high.fields.iter_mut() {
        let base = rng.gen_range(0.0..0.5);
        let amp = rng.gen_range(0.0..0.5);
        let k = rng.gen_range(1..4) as f64;
        for (v, x) in f.iter_mut().zip(grid.nodes()) {
            *v += base + amp * (1.0 + (k * std::f64::consts::PI * x).cos());
        }
    }
    Ok((low, high))
}
