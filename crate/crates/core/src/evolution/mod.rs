//! Method-of-lines simulation on `[0, 1]` with no-flux boundaries.
//!
//! Cells are uniform with centres `x_i = (i + ½)h`; the Neumann condition is
//! imposed by reflecting the first and last cell into ghost cells, which
//! keeps the discrete total flux exactly zero. Only the ligand (`u3`, or `u`
//! in the reduced model) diffuses, with coefficient `1/γ`.

mod bounds;
mod harness;

use serde::Serialize;

pub use bounds::{bounded_run, invariant_rectangle, BoundednessReport, InvariantRectangle};
pub use harness::{
    basin_convergence, comparison_harness, random_ordered_pair, random_positive_state, stability_probe, BasinReport,
    BasinVerdict, ComparisonReport, DriftReport, DriftRow,
};

use crate::error::{Error, Result};
use crate::kinetics::Kinetics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grid1D {
    pub n_cells: usize,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 16;

    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < Self::MIN_CELLS {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {} cells, got {n_cells}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { n_cells })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SystemKind {
    /// `(u1, u2, u3, u4)`: receptors, ligand, transcript.
    Full,
    /// `(u, v)`.
    Reduced,
}

impl SystemKind {
    pub fn n_fields(self) -> usize {
        match self {
            SystemKind::Full => 4,
            SystemKind::Reduced => 2,
        }
    }

    /// Index of the diffusing field.
    pub fn diffusing(self) -> usize {
        match self {
            SystemKind::Full => 2,
            SystemKind::Reduced => 0,
        }
    }

    pub fn field_names(self) -> &'static [&'static str] {
        match self {
            SystemKind::Full => &["u1", "u2", "u3", "u4"],
            SystemKind::Reduced => &["u", "v"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Strang splitting: half reaction step, Crank–Nicolson diffusion, half reaction step.
    Imex,
    /// Explicit SSP-RK3 under the forward-Euler monotonicity bound.
    SspRk3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeMeta {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimState {
    pub time: f64,
    pub grid: Grid1D,
    pub kind: SystemKind,
    /// `fields[j][i]`: field `j` in cell `i`.
    pub fields: Vec<Vec<f64>>,
    pub meta: SchemeMeta,
}

impl SimState {
    pub fn new(grid: Grid1D, kind: SystemKind, fields: Vec<Vec<f64>>) -> Result<Self> {
        if fields.len() != kind.n_fields() || fields.iter().any(|f| f.len() != grid.n_cells) {
            return Err(Error::InvalidInput(format!(
                "{kind:?} state needs {} fields of {} cells",
                kind.n_fields(),
                grid.n_cells
            )));
        }
        if let Some((j, _)) = fields.iter().enumerate().find(|(_, f)| f.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput(format!("field {} has non-finite values", kind.field_names()[j])));
        }
        Ok(Self {
            time: 0.0,
            grid,
            kind,
            fields,
            meta: SchemeMeta {
                scheme: Scheme::Imex,
                dt: 0.0,
                steps: 0,
            },
        })
    }

    /// Every field sampled from `init(x)`.
    pub fn from_fn(grid: Grid1D, kind: SystemKind, init: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut fields = vec![Vec::with_capacity(grid.n_cells); kind.n_fields()];
        for x in grid.nodes() {
            let vals = init(x);
            if vals.len() != kind.n_fields() {
                return Err(Error::InvalidInput(format!("initial data returned {} values", vals.len())));
            }
            for (f, v) in fields.iter_mut().zip(vals) {
                f.push(v);
            }
        }
        Self::new(grid, kind, fields)
    }

    pub fn constant(grid: Grid1D, kind: SystemKind, values: &[f64]) -> Result<Self> {
        Self::from_fn(grid, kind, |_| values.to_vec())
    }

    pub fn field(&self, j: usize) -> &[f64] {
        &self.fields[j]
    }

    pub fn min_value(&self) -> f64 {
        self.fields.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn field_range(&self, j: usize) -> (f64, f64) {
        self.fields[j]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |r, &x| (r.0.min(x), r.1.max(x)))
    }

    /// Largest pointwise difference over all fields.
    pub fn sup_distance(&self, other: &SimState) -> f64 {
        self.fields
            .iter()
            .zip(&other.fields)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    fn point(&self, i: usize) -> [f64; 4] {
        let mut y = [0.0; 4];
        for (j, f) in self.fields.iter().enumerate() {
            y[j] = f[i];
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub scheme: Scheme,
    pub dt_max: f64,
    /// Fraction of the stability bound used per step.
    pub safety: f64,
    /// Times at which a copy of the state is kept.
    pub snapshots: Vec<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            scheme: Scheme::Imex,
            dt_max: 0.05,
            safety: 0.9,
            snapshots: Vec::new(),
        }
    }
}

impl StepControl {
    pub fn explicit() -> Self {
        Self {
            scheme: Scheme::SspRk3,
            ..Self::default()
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshots = times;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<SimState>,
    pub final_state: SimState,
    /// Smallest field value seen at any step.
    pub min_value: f64,
}

/// Spatially discrete right-hand side of either model.
#[derive(Debug, Clone, Copy)]
pub struct Discretization<'a> {
    kin: &'a Kinetics,
    kind: SystemKind,
    diffusivity: f64,
    inv_h2: f64,
}

impl<'a> Discretization<'a> {
    pub fn new(kin: &'a Kinetics, kind: SystemKind, grid: Grid1D) -> Self {
        let h = grid.spacing();
        Self {
            kin,
            kind,
            diffusivity: 1.0 / kin.params().gamma,
            inv_h2: 1.0 / (h * h),
        }
    }

    fn reaction_point(&self, y: &[f64; 4]) -> [f64; 4] {
        match self.kind {
            SystemKind::Full => self.kin.full_reaction(y),
            SystemKind::Reduced => {
                let r = self.kin.reduced(&[y[0], y[1]]);
                [r[0], r[1], 0.0, 0.0]
            }
        }
    }

    /// Bound on `|∂r_j/∂y_j|` and on the linear loss rates at one point.
    fn rate_point(&self, y: &[f64; 4]) -> f64 {
        let p = self.kin.params();
        match self.kind {
            SystemKind::Full => {
                let d = self.kin.full_reaction_diagonal(y);
                let loss = [p.mu1 + p.b * y[2], p.mu2 + p.d, p.mu3 + p.b * y[0], p.delta];
                d.iter().zip(loss).map(|(a, b)| a.abs().max(b)).fold(0.0, f64::max)
            }
            SystemKind::Reduced => {
                let j = self.kin.jacobian(y[0], y[1]);
                let (c, k, _) = self.kin.sink_constants();
                j[0][0].abs().max(p.mu3 + c / k).max(j[1][1].abs()).max(p.delta)
            }
        }
    }

    fn max_rate(&self, s: &SimState) -> f64 {
        (0..s.grid.n_cells).map(|i| self.rate_point(&s.point(i))).fold(0.0, f64::max)
    }

    /// Largest step for which forward Euler is monotone.
    pub fn euler_bound(&self, s: &SimState) -> f64 {
        1.0 / (2.0 * self.diffusivity * self.inv_h2 + self.max_rate(s))
    }

    fn reaction_bound(&self, s: &SimState) -> f64 {
        1.0 / self.max_rate(s).max(1e-12)
    }

    fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        for i in 0..n {
            let l = if i == 0 { u[0] } else { u[i - 1] };
            let r = if i + 1 == n { u[n - 1] } else { u[i + 1] };
            out[i] = (l - 2.0 * u[i] + r) * self.inv_h2;
        }
    }

    fn reaction(&self, fields: &[Vec<f64>], out: &mut [Vec<f64>]) {
        let n = fields[0].len();
        let mut y = [0.0; 4];
        for i in 0..n {
            for (j, f) in fields.iter().enumerate() {
                y[j] = f[i];
            }
            let r = self.reaction_point(&y);
            for (j, o) in out.iter_mut().enumerate() {
                o[i] = r[j];
            }
        }
    }

    /// Full semi-discrete right-hand side.
    pub fn rhs(&self, fields: &[Vec<f64>], out: &mut [Vec<f64>]) {
        self.reaction(fields, out);
        let k = self.kind.diffusing();
        let mut lap = vec![0.0; fields[k].len()];
        self.laplacian(&fields[k], &mut lap);
        for (o, l) in out[k].iter_mut().zip(lap) {
            *o += self.diffusivity * l;
        }
    }

    /// `∂_t` of every field at a state.
    pub fn time_derivative(&self, s: &SimState) -> Vec<Vec<f64>> {
        let mut out = s.fields.clone();
        self.rhs(&s.fields, &mut out);
        out
    }

    fn ssp_rk3<F: Fn(&[Vec<f64>], &mut [Vec<f64>])>(f: F, y: &mut [Vec<f64>], dt: f64) {
        let mut k = y.to_vec();
        f(y, &mut k);
        let y1: Vec<Vec<f64>> = y.iter().zip(&k).map(|(a, b)| axpy(a, dt, b)).collect();
        f(&y1, &mut k);
        let y2: Vec<Vec<f64>> = y
            .iter()
            .zip(y1.iter().zip(&k))
            .map(|(a, (b, c))| a.iter().zip(b).zip(c).map(|((a, b), c)| 0.75 * a + 0.25 * (b + dt * c)).collect())
            .collect();
        f(&y2, &mut k);
        for (yj, (bj, cj)) in y.iter_mut().zip(y2.iter().zip(&k)) {
            for ((a, b), c) in yj.iter_mut().zip(bj).zip(cj) {
                *a = *a / 3.0 + 2.0 / 3.0 * (b + dt * c);
            }
        }
    }

    /// `(I − θ) u_new = (I + θ) u` with `θ = (dt/2) D Δ_h`.
    fn crank_nicolson(&self, u: &mut [f64], dt: f64) {
        let n = u.len();
        let a = 0.5 * dt * self.diffusivity * self.inv_h2;
        let mut lap = vec![0.0; n];
        self.laplacian(u, &mut lap);
        let rhs: Vec<f64> = u.iter().zip(&lap).map(|(x, l)| x + 0.5 * dt * self.diffusivity * l).collect();
        // tridiagonal: −a, 1 + 2a (1 + a at the ends), −a
        let diag = |i: usize| if i == 0 || i + 1 == n { 1.0 + a } else { 1.0 + 2.0 * a };
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = -a / diag(0);
        d[0] = rhs[0] / diag(0);
        for i in 1..n {
            let m = diag(i) + a * c[i - 1];
            c[i] = -a / m;
            d[i] = (rhs[i] + a * d[i - 1]) / m;
        }
        u[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            u[i] = d[i] - c[i] * u[i + 1];
        }
    }

    /// One step of length `dt`.
    pub fn step(&self, s: &mut SimState, scheme: Scheme, dt: f64) {
        match scheme {
            Scheme::SspRk3 => Self::ssp_rk3(|y, o| self.rhs(y, o), &mut s.fields, dt),
            Scheme::Imex => {
                Self::ssp_rk3(|y, o| self.reaction(y, o), &mut s.fields, 0.5 * dt);
                let k = self.kind.diffusing();
                self.crank_nicolson(&mut s.fields[k], dt);
                Self::ssp_rk3(|y, o| self.reaction(y, o), &mut s.fields, 0.5 * dt);
            }
        }
        s.time += dt;
        s.meta = SchemeMeta {
            scheme,
            dt,
            steps: s.meta.steps + 1,
        };
    }

    /// Step size the control allows at this state.
    pub fn stable_dt(&self, s: &SimState, control: &StepControl) -> f64 {
        let bound = match control.scheme {
            Scheme::SspRk3 => self.euler_bound(s),
            Scheme::Imex => 0.5 * self.reaction_bound(s),
        };
        (control.safety * bound).min(control.dt_max)
    }
}

fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

fn check_finite(s: &SimState, last: &SimState) -> Result<()> {
    for (j, f) in s.fields.iter().enumerate() {
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::BlowUp {
                time: s.time,
                field: j,
                last_finite: Box::new(last.clone()),
            });
        }
    }
    Ok(())
}

/// Advances `init` to `t_end`, calling `observe` after every step.
pub fn simulate_observed(
    init: &SimState,
    kin: &Kinetics,
    t_end: f64,
    control: &StepControl,
    mut observe: impl FnMut(&SimState) -> Result<()>,
) -> Result<Trajectory> {
    if !(t_end >= init.time) {
        return Err(Error::InvalidInput(format!("t_end {t_end} precedes the initial time {}", init.time)));
    }
    let disc = Discretization::new(kin, init.kind, init.grid);
    let mut stops: Vec<f64> = control.snapshots.iter().copied().filter(|&t| t > init.time && t <= t_end).collect();
    stops.sort_by(f64::total_cmp);
    let mut snapshots = Vec::new();
    if control.snapshots.contains(&init.time) {
        snapshots.push(init.clone());
    }
    let mut s = init.clone();
    let mut min_value = s.min_value();
    let mut next = 0;
    while s.time < t_end {
        let target = stops.get(next).copied().unwrap_or(t_end);
        let mut dt = disc.stable_dt(&s, control);
        let left = target - s.time;
        if dt >= left * (1.0 - 1e-12) {
            dt = left;
        } else if dt > 0.5 * left {
            dt = 0.5 * left;
        }
        let prev = s.clone();
        disc.step(&mut s, control.scheme, dt);
        if dt == left {
            s.time = target;
        }
        check_finite(&s, &prev)?;
        min_value = min_value.min(s.min_value());
        observe(&s)?;
        if s.time == target && next < stops.len() {
            snapshots.push(s.clone());
            next += 1;
        }
    }
    Ok(Trajectory {
        snapshots,
        final_state: s,
        min_value,
    })
}

fn require(init: &SimState, kind: SystemKind) -> Result<()> {
    if init.kind != kind {
        return Err(Error::InvalidInput(format!("expected a {kind:?} state, got {:?}", init.kind)));
    }
    Ok(())
}

/// Four-field model.
pub fn simulate_full(init: &SimState, kin: &Kinetics, t_end: f64, control: &StepControl) -> Result<Trajectory> {
    require(init, SystemKind::Full)?;
    simulate_observed(init, kin, t_end, control, |_| Ok(()))
}

/// Reduced `(u, v)` model.
pub fn simulate_reduced(init: &SimState, kin: &Kinetics, t_end: f64, control: &StepControl) -> Result<Trajectory> {
    require(init, SystemKind::Reduced)?;
    simulate_observed(init, kin, t_end, control, |_| Ok(()))
}
