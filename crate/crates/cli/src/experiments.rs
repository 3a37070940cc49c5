use std::sync::Arc;

use anyhow::{bail, Context, Result};
use hyslab::asymptotics::{geometric_sequence, half_width_fits, log_slope_fit, LogSlopeFit, SingularIntegrand};
use hyslab::evolution::{
    basin_convergence, bounded_run, comparison_harness, invariant_rectangle, random_ordered_pair,
    random_positive_state, simulate_observed, stability_probe, Grid1D, Scheme, SimState, StepControl, SystemKind,
};
use hyslab::io::{self, Cell, Table};
use hyslab::kinetics::{Branch, ManifoldOptions, PhasePortrait};
use hyslab::stationary::{
    approach_sequence, critical_beta, layer_limit_diagnostics, log_k_grid, shooting_deviation, solve_for_gamma,
    uniqueness_scan, weak_residual, GammaScanOptions, LayerFamily, LayerProfile, LayerSolution, LimitCase, Pattern,
    PatternSign, Potentials, ProfileHeader, Shot, StationaryProfile,
};
use hyslab::Kinetics;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Config, DiffusionReading, ExperimentId, SnapshotFormat};
use crate::svg::{Chart, Series};

pub enum Artifact {
    Csv(String, Table),
    Svg(String, String),
}

impl Artifact {
    pub fn name(&self) -> &str {
        match self {
            Artifact::Csv(n, _) | Artifact::Svg(n, _) => n,
        }
    }
}

#[derive(Default)]
pub struct Outcome {
    /// `None` when the experiment carries no assertion.
    pub passed: Option<bool>,
    pub message: String,
    pub summary: Vec<(String, Cell)>,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: String) {
        self.passed = Some(self.passed.unwrap_or(true) && ok);
        if !self.message.is_empty() {
            self.message.push_str("; ");
        }
        self.message.push_str(&format!("{} {what}", if ok { "ok" } else { "FAILED" }));
    }

    fn note(&mut self, what: String) {
        if !self.message.is_empty() {
            self.message.push_str("; ");
        }
        self.message.push_str(&what);
    }

    fn put(&mut self, key: &str, v: impl Into<Cell>) {
        self.summary.push((key.to_string(), v.into()));
    }

    fn csv(&mut self, name: &str, t: Table) {
        self.artifacts.push(Artifact::Csv(format!("{name}.csv"), t));
    }

    fn svg(&mut self, cfg: &Config, name: &str, chart: Chart) {
        if cfg.svg {
            self.artifacts.push(Artifact::Svg(format!("{name}.svg"), chart.render()));
        }
    }
}

pub fn run_experiment(cfg: &Config) -> Result<Outcome> {
    match cfg.experiment {
        ExperimentId::PhasePlane => phase_plane(cfg),
        ExperimentId::Stationary => stationary(cfg),
        ExperimentId::GammaSolve => gamma_solve(cfg),
        ExperimentId::LayerAsymptotics => layer_asymptotics(cfg),
        ExperimentId::UniquenessScan => uniqueness(cfg),
        ExperimentId::Modes => modes(cfg),
        ExperimentId::SimulateFull => simulate_full(cfg),
        ExperimentId::SimulateReduced => simulate_reduced(cfg),
        ExperimentId::Basin => basin(cfg),
        ExperimentId::Comparison => comparison(cfg),
        ExperimentId::AppendixLemma => appendix_lemma(cfg),
        ExperimentId::AllPresets => bail!("all-presets is handled by the runner"),
    }
}

fn kinetics(cfg: &Config) -> Result<Kinetics> {
    Ok(Kinetics::new(cfg.model.resolve())?)
}

fn potentials(cfg: &Config) -> Result<Arc<Potentials>> {
    Ok(Arc::new(Potentials::new(&kinetics(cfg)?).context("building branch potentials")?))
}

fn family(cfg: &Config, pot: &Arc<Potentials>) -> Result<LayerFamily> {
    let beta = match cfg.options.beta {
        Some(b) => b,
        None => critical_beta(pot)?,
    };
    Ok(LayerFamily::new(pot.clone(), beta)?)
}

/// `γ` from `diffusion` under the configured reading, else `gamma`, else the model's.
fn target_gamma(cfg: &Config) -> (f64, DiffusionReading) {
    let reading = cfg.options.reading.unwrap_or_default();
    let g = match (cfg.options.diffusion, cfg.options.gamma) {
        (Some(d), _) => reading.gamma(d),
        (None, Some(g)) => g,
        (None, None) => cfg.model.resolve().gamma,
    };
    (g, reading)
}

fn scan_options(cfg: &Config) -> GammaScanOptions {
    GammaScanOptions {
        points_per_decade: cfg.options.points_per_decade.unwrap_or(8),
        ..GammaScanOptions::default()
    }
}

fn slope_shot(cfg: &Config, fam: &LayerFamily) -> Shot {
    match cfg.options.slope {
        Some(m) => Shot::Slope(m),
        None => Shot::Slope(cfg.options.slope_fraction.unwrap_or(0.5) * fam.m_sup()),
    }
}

fn profile_chart(title: &str, p: &LayerProfile) -> Chart {
    let u: Vec<(f64, f64)> = p.x.iter().copied().zip(p.u.iter().copied()).collect();
    let v: Vec<(f64, f64)> = p.x.iter().copied().zip(p.v.iter().copied()).collect();
    Chart::new(title, "x", "u, v").with(Series::line("u", u)).with(Series::line("v", v))
}

fn put_header(o: &mut Outcome, h: &ProfileHeader) {
    o.put("beta", h.beta);
    o.put("m", h.m);
    o.put("k", h.k);
    o.put("p", h.p);
    o.put("M", h.m_half);
    o.put("N", h.n_half);
    o.put("gamma", h.gamma);
    o.put("l", h.l);
}

fn phase_plane(cfg: &Config) -> Result<Outcome> {
    let kin = kinetics(cfg)?;
    let pp = PhasePortrait::compute(&kin, &ManifoldOptions::default())?;
    let mut o = Outcome::default();
    let upper = *pp.upper_state();
    let saddle = *pp.saddle();
    o.put("equilibria", pp.equilibria.len());
    o.put("saddle_u", saddle.u);
    o.put("saddle_v", saddle.v);
    o.put("upper_u", upper.u);
    o.put("upper_v", upper.v);
    o.put("U_s", pp.manifold.u_s);
    o.put("V_s", pp.manifold.v_s);
    o.note(format!("{} equilibria, W^s meets the axes at U_s={:.6} and V_s={:.6}", pp.equilibria.len(), pp.manifold.u_s, pp.manifold.v_s));

    let u_max = 1.25 * upper.u;
    let v_max = 1.25 * upper.v;
    let f_null: Vec<(f64, f64)> = (0..=400).map(|i| u_max * i as f64 / 400.0).map(|u| (u, kin.phi(u))).collect();
    let g_null: Vec<(f64, f64)> = (0..=400).map(|i| v_max * i as f64 / 400.0).map(|v| (kin.psi(v), v)).collect();
    let mut nt = Table::new(&["curve", "u", "v"]);
    for &(u, v) in &f_null {
        nt.push(vec!["f".into(), u.into(), v.into()]);
    }
    for &(u, v) in &g_null {
        nt.push(vec!["g".into(), u.into(), v.into()]);
    }
    o.csv("equilibria", io::equilibria_table(&pp.equilibria));
    o.csv("manifold", io::manifold_table(&pp.manifold));
    o.csv("nullclines", nt);
    let clip = |pts: Vec<(f64, f64)>| pts.into_iter().filter(|p| p.0 <= u_max && p.1 <= v_max).collect();
    let chart = Chart::new("phase plane", "u", "v")
        .with(Series::line("f = 0", clip(f_null)))
        .with(Series::line("g = 0", clip(g_null)))
        .with(Series::line("W^s", clip(pp.manifold.points.clone())))
        .with(Series::markers("equilibria", pp.equilibria.iter().map(|e| (e.u, e.v)).collect()));
    o.svg(cfg, "phase_plane", chart);
    Ok(o)
}

/// Structural checks shared by the profile experiments: `u` nondecreasing
/// and `v` jumping from `h0(β)` to `h1(β)`.
fn structure_ok(pot: &Potentials, prof: &LayerProfile) -> Result<bool> {
    let monotone = prof.u.windows(2).all(|w| w[1] >= w[0]);
    let beta = prof.header.beta;
    let (h0, h1) = (pot.branches().h(Branch::Lower, beta)?, pot.branches().h(Branch::Upper, beta)?);
    let j = prof.x.windows(2).position(|w| w[0] == w[1]).context("profile has no jump")?;
    let jump_ok = (prof.v[j] - h0).abs() <= 1e-8 * h0.abs().max(1.0) && (prof.v[j + 1] - h1).abs() <= 1e-8 * h1.abs().max(1.0);
    Ok(monotone && jump_ok)
}

fn gamma_solve(cfg: &Config) -> Result<Outcome> {
    let pot = potentials(cfg)?;
    let fam = family(cfg, &pot)?;
    let (gamma, reading) = target_gamma(cfg);
    let scan = solve_for_gamma(&fam, gamma, &scan_options(cfg))?;
    let cells = cfg.options.profile_cells.unwrap_or(400);
    let mut o = Outcome::default();
    o.put("reading", reading.name());
    o.put("solutions", scan.solutions.len());
    o.csv("gamma_scan", io::gamma_scan_table(&scan));
    let mut profiles = Vec::new();
    for (i, sol) in scan.solutions.iter().enumerate() {
        let prof = LayerProfile::sample(sol, ProfileHeader::of(sol), cells)?;
        o.csv(&format!("profile_{i}"), io::profile_table(&prof));
        o.svg(cfg, &format!("profile_{i}"), profile_chart(&format!("beta = {:.6}, gamma = {:.6}", fam.beta, sol.gamma), &prof));
        profiles.push(prof);
    }
    if let Some(first) = profiles.first() {
        put_header(&mut o, &first.header);
    } else {
        o.put("beta", fam.beta);
        o.put("gamma", gamma);
    }
    let ls: Vec<String> = profiles.iter().map(|p| format!("{:.7}", p.header.l)).collect();
    o.note(format!("beta={} gamma={gamma:.9} ({}): {} solution(s), l = [{}]", fam.beta, reading.name(), ls.len(), ls.join(", ")));
    if let Some(expect) = cfg.options.expect_l {
        let tol = cfg.options.l_tol.unwrap_or(1e-3);
        let mut hit = false;
        for p in &profiles {
            if (p.header.l - expect).abs() <= tol && structure_ok(&pot, p)? {
                hit = true;
            }
        }
        let measured = profiles.first().map(|p| p.header.l).unwrap_or(f64::NAN);
        o.check(hit, format!("l = {measured:.7} vs expected {expect} +- {tol:e} (|diff| = {:.3e})", (measured - expect).abs()));
        if !hit {
            if let Some(d) = cfg.options.diffusion {
                let alt = reading.other();
                let alt_scan = solve_for_gamma(&fam, alt.gamma(d), &scan_options(cfg))?;
                let alt_l: Vec<String> = alt_scan.solutions.iter().map(|s| format!("{:.7}", s.l)).collect();
                o.note(format!("under the {} reading (gamma = {:.6}) l = [{}]", alt.name(), alt.gamma(d), alt_l.join(", ")));
                o.put("alt_l", alt_scan.solutions.first().map(|s| s.l).unwrap_or(f64::NAN));
            }
            let beta_star = critical_beta(&pot)?;
            if (beta_star - fam.beta).abs() > 1e-9 {
                let star = solve_for_gamma(&LayerFamily::new(pot.clone(), beta_star)?, gamma, &scan_options(cfg))?;
                let l_star = star.solutions.first().map(|s| s.l).unwrap_or(f64::NAN);
                o.note(format!("at the balanced beta* = {beta_star:.7} the same gamma gives l = {l_star:.7}"));
                o.put("l_at_beta_star", l_star);
            }
        }
    }
    Ok(o)
}

fn stationary(cfg: &Config) -> Result<Outcome> {
    let pot = potentials(cfg)?;
    let fam = family(cfg, &pot)?;
    let opts = &cfg.options;
    let mut o = Outcome::default();

    let sol = fam.solve(slope_shot(cfg, &fam))?;
    let prof = LayerProfile::sample(&sol, ProfileHeader::of(&sol), opts.profile_cells.unwrap_or(400))?;
    put_header(&mut o, &prof.header);
    o.put("case", format!("{:?}", fam.case()).to_lowercase());
    o.csv("profile", io::profile_table(&prof));
    o.svg(cfg, "profile", profile_chart(&format!("beta = {:.6}, m = {:.6}", fam.beta, sol.m), &prof));
    o.note(format!("beta={} m={:.6}: gamma={:.6e} l={:.7}", fam.beta, sol.m, sol.gamma, sol.l));

    if let Some(n) = opts.oracle_pairs {
        let worst = oracle_pairs(&pot, n, opts.seed.unwrap_or(1), opts.oracle_points.unwrap_or(50), opts.oracle_rtol.unwrap_or(1e-10))?;
        let tol = opts.oracle_tol.unwrap_or(1e-6);
        o.put("oracle_max_error", worst);
        o.check(worst < tol, format!("{n} random (beta, m) pairs: quadrature vs shooting max error {worst:.3e} < {tol:e}"));
    }
    if let Some(decades) = opts.slope_decades {
        small_slope_limit(cfg, &fam, decades, &mut o)?;
    }
    if opts.betas.is_some() || opts.include_critical == Some(true) {
        large_slope_limits(cfg, &pot, &mut o)?;
    }
    Ok(o)
}

fn oracle_pairs(pot: &Arc<Potentials>, n: usize, seed: u64, points: usize, rtol: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = pot.admissible_beta();
    let draws: Vec<(f64, f64)> = (0..n)
        .map(|_| (lo + (hi - lo) * rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)))
        .collect();
    let mut worst = 0.0f64;
    for (beta, frac) in draws {
        let fam = LayerFamily::new(pot.clone(), beta)?;
        let sol = fam.solve(Shot::Slope(frac * fam.m_sup()))?;
        worst = worst.max(shooting_deviation(&sol, points, rtol)?);
    }
    Ok(worst)
}

fn small_slope_limit(cfg: &Config, fam: &LayerFamily, decades: usize, o: &mut Outcome) -> Result<()> {
    let shots: Vec<Shot> = (1..=decades.max(1)).map(|j| Shot::Slope(fam.m_sup() * 10f64.powi(-(j as i32)))).collect();
    let rows = layer_limit_diagnostics(fam, &shots, 0.0)?;
    o.csv("small_slope", io::limit_table(&rows));
    let decreasing = rows.windows(2).all(|w| w[1].gamma < w[0].gamma);
    let last = rows.last().context("empty slope sequence")?;
    let sup_dev = (fam.beta - last.k).max(last.p - fam.beta);
    let g_tol = cfg.options.gamma_small.unwrap_or(1e-3);
    let u_tol = cfg.options.u_tol.unwrap_or(1e-3);
    o.put("gamma_smallest_m", last.gamma);
    o.put("sup_u_minus_beta", sup_dev);
    o.check(
        decreasing && last.gamma < g_tol && sup_dev < u_tol,
        format!(
            "small m: gamma decreasing={decreasing}, gamma={:.3e} < {g_tol:e}, sup|u-beta|={sup_dev:.3e} < {u_tol:e}",
            last.gamma
        ),
    );
    Ok(())
}

fn large_slope_limits(cfg: &Config, pot: &Arc<Potentials>, o: &mut Outcome) -> Result<()> {
    let opts = &cfg.options;
    let mut betas = opts.betas.clone().unwrap_or_default();
    if opts.include_critical == Some(true) {
        betas.push(critical_beta(pot)?);
    }
    let tol = opts.limit_tol.unwrap_or(0.02);
    let g_min = opts.gamma_large.unwrap_or(1e4);
    let mut all = Table::new(&["beta", "case", "target_l", "m", "gap", "gamma", "l"]);
    for (i, &beta) in betas.iter().enumerate() {
        let fam = LayerFamily::new(pot.clone(), beta)?;
        let shots = approach_sequence(&fam, opts.approach_points.unwrap_or(8), opts.gap_floor.unwrap_or(1e-200));
        let rows = layer_limit_diagnostics(&fam, &shots, 1e-3)?;
        let target = match fam.case() {
            LimitCase::Right => 1.0,
            LimitCase::Interior => pot.l_star(),
            LimitCase::Left => 0.0,
        };
        let case = format!("{:?}", fam.case()).to_lowercase();
        o.csv(&format!("limits_{i}"), io::limit_table(&rows).meta("beta", beta).meta("case", case.as_str()));
        let last = rows.last().context("empty approach sequence")?;
        for r in &rows {
            all.push(vec![beta.into(), case.as_str().into(), target.into(), r.m.into(), r.gap.into(), r.gamma.into(), r.l.into()]);
        }
        o.check(
            (last.l - target).abs() < tol && last.gamma > g_min,
            format!("beta={beta:.7} ({case}): l={:.5} -> {target:.5} +- {tol}, gamma={:.3e} > {g_min:e}", last.l, last.gamma),
        );
    }
    let chart = betas.iter().fold(Chart::new("jump location along the family", "gamma", "l"), |c, &b| {
        let pts = all
            .rows
            .iter()
            .filter(|r| matches!(r[0], Cell::Num(x) if x == b))
            .map(|r| match (&r[5], &r[6]) {
                (Cell::Num(g), Cell::Num(l)) => (*g, *l),
                _ => (f64::NAN, f64::NAN),
            })
            .collect();
        c.with(Series::line(&format!("beta = {b:.4}"), pts))
    });
    let mut chart = chart;
    chart.log_x = true;
    o.csv("limits", all);
    o.svg(cfg, "limits", chart);
    Ok(())
}

fn layer_asymptotics(cfg: &Config) -> Result<Outcome> {
    let pot = potentials(cfg)?;
    let fam = family(cfg, &pot)?;
    let opts = &cfg.options;
    let hi = opts.gap_hi.unwrap_or(1e-20);
    let lo = opts.gap_lo.unwrap_or(1e-182);
    let gaps = geometric_sequence(hi, (hi / lo).log10(), opts.points.unwrap_or(12));
    let (m_fit, n_fit) = half_width_fits(&fam, &gaps)?;
    let tol = opts.slope_tol.unwrap_or(0.02);
    let mut o = Outcome::default();
    o.put("beta", fam.beta);
    for (name, fit) in [("M", &m_fit), ("N", &n_fit)] {
        let rel = (fit.slope / fit.law_slope - 1.0).abs();
        o.put(&format!("{name}_slope"), fit.slope);
        o.put(&format!("{name}_law"), fit.law_slope);
        o.check(rel < tol, format!("{name} slope {:.6} vs {:.6} (rel {rel:.2e} < {tol})", fit.slope, fit.law_slope));
        o.csv(&format!("fit_{name}"), io::fit_table(fit));
    }
    o.svg(cfg, "half_widths", fit_chart("half widths against log(1/a)", &[("M vs k", &m_fit), ("N vs u1 - p", &n_fit)]));
    Ok(o)
}

fn fit_chart(title: &str, fits: &[(&str, &LogSlopeFit)]) -> Chart {
    fits.iter().fold(Chart::new(title, "log(1/a)", "value"), |c, (name, f)| {
        let pts = f.rows.iter().map(|r| (r.log_inv_a, r.value)).collect();
        let line = f.rows.iter().map(|r| (r.log_inv_a, f.slope * r.log_inv_a + f.intercept)).collect();
        c.with(Series::markers(name, pts)).with(Series::line(&format!("{name} fit"), line))
    })
}

fn uniqueness(cfg: &Config) -> Result<Outcome> {
    let pot = potentials(cfg)?;
    let fam = family(cfg, &pot)?;
    let grid = log_k_grid(&fam, cfg.options.k_points.unwrap_or(200), cfg.options.k_lo_rel.unwrap_or(1e-3))?;
    let r = uniqueness_scan(&fam, &grid)?;
    let mut o = Outcome::default();
    o.put("beta", r.beta);
    o.put("window_lo", r.beta_window.0);
    o.put("window_hi", r.beta_window.1);
    o.put("in_window", r.in_window);
    o.put("monotone", r.monotone);
    o.put("gamma_star", r.gamma_star);
    o.put("max_dpdk_rel_err", r.max_dpdk_rel_err);
    let tol = cfg.options.dpdk_tol.unwrap_or(1e-4);
    if r.in_window {
        o.check(r.monotone, format!("T strictly decreasing on {} points", r.samples.len()));
        o.check(r.max_dpdk_rel_err < tol, format!("dp/dk relative error {:.2e} < {tol:e}", r.max_dpdk_rel_err));
    } else {
        o.note(format!(
            "beta={} outside the window ({:.6}, {:.6}); monotone={}, gamma*={:.4e}",
            r.beta, r.beta_window.0, r.beta_window.1, r.monotone, r.gamma_star
        ));
    }
    let mut chart = Chart::new("total width T(k)", "k", "T")
        .with(Series::line("T", r.samples.iter().map(|s| (s.k, s.t)).collect()))
        .with(Series::line("M", r.samples.iter().map(|s| (s.k, s.m_half)).collect()))
        .with(Series::line("N", r.samples.iter().map(|s| (s.k, s.n_half)).collect()));
    chart.log_x = true;
    o.csv("uniqueness", io::uniqueness_table(&r));
    o.svg(cfg, "uniqueness", chart);
    Ok(o)
}

/// Base solution: the first member with the target `γ` when one is given,
/// otherwise the configured slope.
fn base_solution(cfg: &Config, fam: &LayerFamily) -> Result<LayerSolution> {
    if cfg.options.gamma.is_some() || cfg.options.diffusion.is_some() {
        let (g, _) = target_gamma(cfg);
        let scan = solve_for_gamma(fam, g, &scan_options(cfg))?;
        scan.solutions.into_iter().next().context("no layer solution with the requested gamma")
    } else {
        Ok(fam.solve(slope_shot(cfg, fam))?)
    }
}

fn modes(cfg: &Config) -> Result<Outcome> {
    let pot = potentials(cfg)?;
    let fam = family(cfg, &pot)?;
    let base = base_solution(cfg, &fam)?;
    let ns = cfg.options.modes.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
    let cells = cfg.options.residual_cells.unwrap_or(100);
    let tol = cfg.options.residual_tol.unwrap_or(1e-6);
    let mut o = Outcome::default();
    o.put("beta", fam.beta);
    o.put("gamma_base", base.gamma);
    let mut worst = 0.0f64;
    let mut chart = Chart::new("mode-n patterns", "x", "u");
    for &n in &ns {
        for sign in [PatternSign::Plus, PatternSign::Minus] {
            let pat = Pattern::new(base.clone(), n, sign)?;
            let res = weak_residual(&pat, cells * n)?.max_abs;
            worst = worst.max(res);
            let tag = format!("{n}{}", if sign == PatternSign::Plus { "plus" } else { "minus" });
            let prof = LayerProfile::sample(&pat, pat.header(), cfg.options.profile_cells.unwrap_or(400))?;
            if sign == PatternSign::Plus {
                chart = chart.with(Series::line(&format!("n = {n}"), prof.x.iter().copied().zip(prof.u.iter().copied()).collect()));
            }
            o.csv(&format!("mode_{tag}"), io::profile_table(&prof).meta("weak_residual", res));
            let gamma_ok = (pat.gamma() - (n * n) as f64 * base.gamma).abs() <= 1e-12 * pat.gamma();
            o.check(res < tol && gamma_ok, format!("mode {n} {sign:?}: residual {res:.2e}, gamma {:.6e}", pat.gamma()));
        }
    }
    o.put("max_residual", worst);
    o.svg(cfg, "modes", chart);
    Ok(o)
}

fn appendix_lemma(cfg: &Config) -> Result<Outcome> {
    let opts = &cfg.options;
    let which = opts.integrand.clone().unwrap_or_else(|| "both".into());
    let mut list: Vec<(&str, SingularIntegrand)> = Vec::new();
    if which == "quadratic" || which == "both" {
        list.push(("quadratic", SingularIntegrand::quadratic()));
    }
    if which == "cubic" || which == "both" {
        list.push(("cubic", SingularIntegrand::cubic()));
    }
    if list.is_empty() {
        bail!("integrand must be quadratic, cubic or both, got `{which}`");
    }
    let seq = geometric_sequence(opts.a_hi.unwrap_or(0.05), opts.decades.unwrap_or(6.0), opts.points.unwrap_or(13));
    let tol = opts.slope_tol.unwrap_or(0.01);
    let mut o = Outcome::default();
    let mut fits = Vec::new();
    for (name, s) in &list {
        let fit = log_slope_fit(s, &seq)?;
        let rel = (fit.slope / fit.law_slope - 1.0).abs();
        o.put(&format!("{name}_slope"), fit.slope);
        o.put(&format!("{name}_band"), fit.band_width());
        o.check(rel < tol, format!("{name}: slope {:.6} vs {:.6} (rel {rel:.2e} < {tol})", fit.slope, fit.law_slope));
        o.csv(&format!("fit_{name}"), io::fit_table(&fit));
        fits.push((*name, fit));
    }
    let refs: Vec<(&str, &LogSlopeFit)> = fits.iter().map(|(n, f)| (*n, f)).collect();
    o.svg(cfg, "appendix_lemma", fit_chart("I(a) against log(1/a)", &refs));
    Ok(o)
}

fn control(cfg: &Config, default: Scheme) -> Result<StepControl> {
    let scheme = match cfg.options.scheme.as_deref() {
        None => default,
        Some("imex") => Scheme::Imex,
        Some("ssp-rk3") => Scheme::SspRk3,
        Some(s) => bail!("scheme must be imex or ssp-rk3, got `{s}`"),
    };
    Ok(StepControl {
        scheme,
        dt_max: cfg.options.dt_max.unwrap_or(0.05),
        snapshots: cfg.options.snapshots.clone().unwrap_or_default(),
        ..StepControl::default()
    })
}

fn grid(cfg: &Config, default: usize) -> Result<Grid1D> {
    Ok(Grid1D::new(cfg.options.cells.unwrap_or(default))?)
}

fn levels(cfg: &Config) -> (f64, f64) {
    (cfg.options.level_lo.unwrap_or(0.05), cfg.options.level_hi.unwrap_or(20.0))
}

fn emit_snapshots(cfg: &Config, o: &mut Outcome, snaps: &[SimState]) {
    for s in snaps {
        let tag = io::time_tag(s.time);
        match cfg.options.snapshot_format.unwrap_or_default() {
            SnapshotFormat::Wide => o.csv(&format!("snapshot_{tag}"), io::snapshot_wide(s)),
            SnapshotFormat::PerField => {
                for (name, t) in io::snapshot_per_field(s) {
                    o.csv(&format!("snapshot_{tag}_{name}"), t);
                }
            }
        }
    }
    if let Some(last) = snaps.last() {
        let x = last.grid.nodes();
        let chart = last
            .kind
            .field_names()
            .iter()
            .enumerate()
            .fold(Chart::new(&format!("state at t = {:.4}", last.time), "x", "value"), |c, (j, name)| {
                c.with(Series::line(name, x.iter().copied().zip(last.fields[j].iter().copied()).collect()))
            });
        o.svg(cfg, "final_state", chart);
    }
}

fn final_summary(o: &mut Outcome, s: &SimState) {
    o.put("t_end", s.time);
    o.put("steps", s.meta.steps);
    for (j, name) in s.kind.field_names().iter().enumerate() {
        let (lo, hi) = s.field_range(j);
        o.put(&format!("{name}_min"), lo);
        o.put(&format!("{name}_max"), hi);
    }
}

fn simulate_full(cfg: &Config) -> Result<Outcome> {
    let kin = kinetics(cfg)?;
    let g = grid(cfg, 32)?;
    let t_end = cfg.options.t_end.unwrap_or(10.0);
    let pos_tol = cfg.options.positivity_tol.unwrap_or(1e-12);
    let mut o = Outcome::default();
    if let Some(n) = cfg.options.random_inits {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.options.seed.unwrap_or(7));
        let inits: Vec<SimState> =
            (0..n).map(|_| random_positive_state(g, SystemKind::Full, levels(cfg), &mut rng)).collect::<hyslab::Result<_>>()?;
        let ctl = control(cfg, Scheme::SspRk3)?;
        let mut t = Table::new(&["run", "rho3", "rho4", "m_bound", "min_value", "mass_excess", "exit_time", "passed"]);
        let mut all = true;
        let mut min_all = f64::INFINITY;
        for (i, init) in inits.iter().enumerate() {
            let r = bounded_run(init, &kin, t_end, &ctl)?;
            let ok = r.passed(pos_tol);
            all &= ok;
            min_all = min_all.min(r.min_value);
            t.push(vec![
                i.into(),
                r.rectangle.rho3.into(),
                r.rectangle.rho4.into(),
                r.rectangle.m_bound.into(),
                r.min_value.into(),
                r.mass_excess.into(),
                r.exit_time.unwrap_or(f64::NAN).into(),
                ok.into(),
            ]);
        }
        o.put("runs", n);
        o.put("min_value", min_all);
        o.csv("boundedness", t);
        o.check(all, format!("{n} random positive runs stay in their rectangles and above -{pos_tol:e} up to t={t_end}"));
        return Ok(o);
    }
    let values = cfg.options.init.clone().unwrap_or_else(|| vec![1.0, 0.5, 3.0, 5.0]);
    let init = SimState::constant(g, SystemKind::Full, &values)?;
    let rect = invariant_rectangle(&init, &kin)?;
    let mut ctl = control(cfg, Scheme::Imex)?;
    if ctl.snapshots.is_empty() {
        ctl.snapshots = vec![0.0, t_end];
    }
    let mut inside = true;
    let traj = simulate_observed(&init, &kin, t_end, &ctl, |s| {
        inside &= rect.contains(s);
        Ok(())
    })?;
    final_summary(&mut o, &traj.final_state);
    o.put("min_value", traj.min_value);
    emit_snapshots(cfg, &mut o, &traj.snapshots);
    o.check(inside && traj.min_value > -pos_tol, format!("inside rectangle rho3={:.4} rho4={:.4}, min value {:.3e}", rect.rho3, rect.rho4, traj.min_value));
    Ok(o)
}

fn simulate_reduced(cfg: &Config) -> Result<Outcome> {
    let kin = kinetics(cfg)?;
    let g = grid(cfg, 64)?;
    let t_end = cfg.options.t_end.unwrap_or(10.0);
    let mut o = Outcome::default();
    if let Some(amp) = cfg.options.probe_amplitude {
        let pot = potentials(cfg)?;
        let fam = family(cfg, &pot)?;
        let base = base_solution(cfg, &fam)?;
        let kin = kin.with_gamma(base.gamma)?;
        let prof = LayerProfile::sample(&base, ProfileHeader::of(&base), cfg.options.profile_cells.unwrap_or(2000))?;
        let r = stability_probe(&prof, &kin, g, amp, t_end, cfg.options.probe_samples.unwrap_or(20), cfg.options.seed.unwrap_or(1))?;
        o.put("gamma", base.gamma);
        o.put("l", base.l);
        o.put("max_drift", r.max_drift());
        if let Some(last) = r.rows.last() {
            o.put("final_jump_proxy", last.jump_proxy);
            o.put("final_v_jump", last.v_jump);
        }
        o.note(format!("probe amplitude {amp:e}: max sup drift {:.3e}", r.max_drift()));
        o.svg(
            cfg,
            "drift",
            Chart::new("drift from the stationary profile", "t", "sup |u - u*|")
                .with(Series::line("drift", r.rows.iter().map(|x| (x.time, x.sup_drift_u)).collect())),
        );
        o.csv("drift", io::drift_table(&r));
        return Ok(o);
    }
    let values = cfg.options.init.clone().unwrap_or_else(|| vec![4.0, 6.0]);
    let init = SimState::constant(g, SystemKind::Reduced, &values)?;
    let mut ctl = control(cfg, Scheme::Imex)?;
    if ctl.snapshots.is_empty() {
        ctl.snapshots = vec![0.0, t_end];
    }
    let traj = simulate_observed(&init, &kin, t_end, &ctl, |_| Ok(()))?;
    final_summary(&mut o, &traj.final_state);
    emit_snapshots(cfg, &mut o, &traj.snapshots);
    o.note(format!("reached t={t_end} in {} steps", traj.final_state.meta.steps));
    Ok(o)
}

fn basin(cfg: &Config) -> Result<Outcome> {
    let kin = kinetics(cfg)?;
    let pp = PhasePortrait::compute(&kin, &ManifoldOptions::default())?;
    let g = grid(cfg, 32)?;
    let t_end = cfg.options.t_end.unwrap_or(200.0);
    let tol = cfg.options.tol.unwrap_or(1e-6);
    let up = cfg.options.upper_init.clone().unwrap_or_else(|| vec![12.0, 20.0]);
    let down = cfg.options.lower_init.clone().unwrap_or_else(|| vec![0.5, 0.5]);
    let mut o = Outcome::default();
    let mut t = Table::new(&["u0", "v0", "predicted", "verdict", "distance_to_origin", "distance_to_upper"]);
    for (name, vals) in [("upper", up), ("lower", down)] {
        let init = SimState::constant(g, SystemKind::Reduced, &vals)?;
        let r = basin_convergence(&init, &pp, &kin, t_end, tol)?;
        t.push(vec![
            vals[0].into(),
            vals[1].into(),
            format!("{:?}", r.predicted).into(),
            format!("{:?}", r.verdict).into(),
            r.distance_to_origin.into(),
            r.distance_to_upper.into(),
        ]);
        o.put(&format!("{name}_distance"), r.distance_to_origin.min(r.distance_to_upper));
        o.check(
            r.confirmed(),
            format!(
                "({}, {}) predicted {:?}, got {:?} (sup distance {:.2e} < {tol:e})",
                vals[0],
                vals[1],
                r.predicted,
                r.verdict,
                r.distance_to_origin.min(r.distance_to_upper)
            ),
        );
    }
    o.csv("basin", t);
    Ok(o)
}

fn comparison(cfg: &Config) -> Result<Outcome> {
    let kin = kinetics(cfg)?;
    let g = grid(cfg, 32)?;
    let t_end = cfg.options.t_end.unwrap_or(5.0);
    let n = cfg.options.pairs.unwrap_or(20);
    let tol = cfg.options.order_tol.unwrap_or(1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.options.seed.unwrap_or(11));
    let mut t = Table::new(&["pair", "min_du", "min_dv", "steps"]);
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let (low, high) = random_ordered_pair(g, levels(cfg), &mut rng)?;
        let r = comparison_harness(&low, &high, &kin, t_end)?;
        worst = worst.min(r.min_du.min(r.min_dv));
        t.push(vec![i.into(), r.min_du.into(), r.min_dv.into(), r.steps.into()]);
    }
    let mut o = Outcome::default();
    o.put("pairs", n);
    o.put("min_difference", worst);
    o.csv("comparison", t);
    o.check(worst >= -tol, format!("{n} ordered pairs: min difference {worst:.3e} >= -{tol:e} up to t={t_end}"));
    Ok(o)
}
