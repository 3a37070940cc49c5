use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use hyslab::ModelParams;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    PhasePlane,
    Stationary,
    GammaSolve,
    LayerAsymptotics,
    UniquenessScan,
    Modes,
    SimulateFull,
    SimulateReduced,
    Basin,
    Comparison,
    AppendixLemma,
    AllPresets,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::PhasePlane => "phase-plane",
            ExperimentId::Stationary => "stationary",
            ExperimentId::GammaSolve => "gamma-solve",
            ExperimentId::LayerAsymptotics => "layer-asymptotics",
            ExperimentId::UniquenessScan => "uniqueness-scan",
            ExperimentId::Modes => "modes",
            ExperimentId::SimulateFull => "simulate-full",
            ExperimentId::SimulateReduced => "simulate-reduced",
            ExperimentId::Basin => "basin",
            ExperimentId::Comparison => "comparison",
            ExperimentId::AppendixLemma => "appendix-lemma",
            ExperimentId::AllPresets => "all-presets",
        }
    }
}

/// How a configured diffusion coefficient `D` maps to `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionReading {
    /// `D = 1/γ`.
    #[default]
    InverseGamma,
    /// `D = 1/√γ`.
    InverseSqrtGamma,
}

impl DiffusionReading {
    pub fn gamma(self, d: f64) -> f64 {
        match self {
            DiffusionReading::InverseGamma => 1.0 / d,
            DiffusionReading::InverseSqrtGamma => 1.0 / (d * d),
        }
    }

    pub fn other(self) -> Self {
        match self {
            DiffusionReading::InverseGamma => DiffusionReading::InverseSqrtGamma,
            DiffusionReading::InverseSqrtGamma => DiffusionReading::InverseGamma,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DiffusionReading::InverseGamma => "inverse-gamma",
            DiffusionReading::InverseSqrtGamma => "inverse-sqrt-gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    #[default]
    Wide,
    PerField,
}

/// Overrides on top of the reference parameter set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub mu3: Option<f64>,
    pub m1: Option<f64>,
    pub m4: Option<f64>,
    pub sigma: Option<f64>,
    pub beta_l: Option<f64>,
    pub delta: Option<f64>,
    pub b: Option<f64>,
    pub d: Option<f64>,
    pub gamma: Option<f64>,
}

impl ModelBlock {
    pub fn resolve(&self) -> ModelParams {
        let r = ModelParams::reference();
        ModelParams {
            mu1: self.mu1.unwrap_or(r.mu1),
            mu2: self.mu2.unwrap_or(r.mu2),
            mu3: self.mu3.unwrap_or(r.mu3),
            m1: self.m1.unwrap_or(r.m1),
            m4: self.m4.unwrap_or(r.m4),
            sigma: self.sigma.unwrap_or(r.sigma),
            beta_l: self.beta_l.unwrap_or(r.beta_l),
            delta: self.delta.unwrap_or(r.delta),
            b: self.b.unwrap_or(r.b),
            d: self.d.unwrap_or(r.d),
            gamma: self.gamma.unwrap_or(r.gamma),
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "mu1" => &mut self.mu1,
            "mu2" => &mut self.mu2,
            "mu3" => &mut self.mu3,
            "m1" => &mut self.m1,
            "m4" => &mut self.m4,
            "sigma" => &mut self.sigma,
            "beta_l" => &mut self.beta_l,
            "delta" => &mut self.delta,
            "b" => &mut self.b,
            "d" => &mut self.d,
            "gamma" => &mut self.gamma,
            _ => return None,
        })
    }
}

/// Numeric knobs; each experiment reads the ones it needs and falls back to
/// its own defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    // stationary family
    pub beta: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub include_critical: Option<bool>,
    pub slope: Option<f64>,
    pub slope_fraction: Option<f64>,
    pub gamma: Option<f64>,
    pub diffusion: Option<f64>,
    pub reading: Option<DiffusionReading>,
    pub expect_l: Option<f64>,
    pub l_tol: Option<f64>,
    pub profile_cells: Option<usize>,
    pub points_per_decade: Option<usize>,
    // limits
    pub slope_decades: Option<usize>,
    pub approach_points: Option<usize>,
    pub gap_floor: Option<f64>,
    pub gamma_small: Option<f64>,
    pub u_tol: Option<f64>,
    pub gamma_large: Option<f64>,
    pub limit_tol: Option<f64>,
    // oracle comparison
    pub oracle_pairs: Option<usize>,
    pub oracle_points: Option<usize>,
    pub oracle_rtol: Option<f64>,
    pub oracle_tol: Option<f64>,
    // uniqueness
    pub k_points: Option<usize>,
    pub k_lo_rel: Option<f64>,
    pub dpdk_tol: Option<f64>,
    // modes
    pub modes: Option<Vec<usize>>,
    pub residual_cells: Option<usize>,
    pub residual_tol: Option<f64>,
    // asymptotics
    pub integrand: Option<String>,
    pub a_hi: Option<f64>,
    pub decades: Option<f64>,
    pub points: Option<usize>,
    pub gap_hi: Option<f64>,
    pub gap_lo: Option<f64>,
    pub slope_tol: Option<f64>,
    // simulation
    pub cells: Option<usize>,
    pub t_end: Option<f64>,
    pub dt_max: Option<f64>,
    pub scheme: Option<String>,
    pub snapshots: Option<Vec<f64>>,
    pub snapshot_format: Option<SnapshotFormat>,
    pub init: Option<Vec<f64>>,
    pub random_inits: Option<usize>,
    pub pairs: Option<usize>,
    pub level_lo: Option<f64>,
    pub level_hi: Option<f64>,
    pub seed: Option<u64>,
    pub positivity_tol: Option<f64>,
    pub order_tol: Option<f64>,
    pub upper_init: Option<Vec<f64>>,
    pub lower_init: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub probe_amplitude: Option<f64>,
    pub probe_samples: Option<usize>,
}

impl Options {
    fn slot(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "beta" => &mut self.beta,
            "slope" => &mut self.slope,
            "slope_fraction" => &mut self.slope_fraction,
            "gamma" => &mut self.gamma,
            "diffusion" => &mut self.diffusion,
            "t_end" => &mut self.t_end,
            "probe_amplitude" => &mut self.probe_amplitude,
            _ => return None,
        })
    }

    fn tolerances(&self) -> [(&'static str, Option<f64>); 11] {
        [
            ("l_tol", self.l_tol),
            ("u_tol", self.u_tol),
            ("limit_tol", self.limit_tol),
            ("oracle_rtol", self.oracle_rtol),
            ("oracle_tol", self.oracle_tol),
            ("dpdk_tol", self.dpdk_tol),
            ("residual_tol", self.residual_tol),
            ("slope_tol", self.slope_tol),
            ("positivity_tol", self.positivity_tol),
            ("order_tol", self.order_tol),
            ("tol", self.tol),
        ]
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub param: String,
    pub values: Option<Vec<f64>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
    #[serde(default)]
    pub log: bool,
    pub param2: Option<String>,
    pub values2: Option<Vec<f64>>,
    pub threads: Option<usize>,
}

impl SweepBlock {
    pub fn first_axis(&self) -> Result<Vec<f64>> {
        match (&self.values, self.from, self.to, self.steps) {
            (Some(v), None, None, None) => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) if n >= 1 => {
                if n == 1 {
                    return Ok(vec![a]);
                }
                Ok((0..n)
                    .map(|i| {
                        let t = i as f64 / (n - 1) as f64;
                        if self.log {
                            a * (b / a).powf(t)
                        } else {
                            a + (b - a) * t
                        }
                    })
                    .collect())
            }
            _ => bail!("sweep needs either `values` or all of `from`, `to`, `steps`"),
        }
    }

    /// Grid points in row-major order of `(param, param2)`.
    pub fn points(&self) -> Result<Vec<Vec<(String, f64)>>> {
        let first = self.first_axis()?;
        let second = match (&self.param2, &self.values2) {
            (Some(p), Some(v)) => Some((p.clone(), v.clone())),
            (None, None) => None,
            _ => bail!("`param2` and `values2` go together"),
        };
        let mut out = Vec::new();
        for &a in &first {
            match &second {
                None => out.push(vec![(self.param.clone(), a)]),
                Some((p2, vs)) => {
                    for &b in vs {
                        out.push(vec![(self.param.clone(), a), (p2.clone(), b)]);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentId,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub options: Options,
    pub sweep: Option<SweepBlock>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).context("config parse error")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.options.tolerances() {
            if let Some(v) = v {
                if !(v > 0.0) {
                    bail!("tolerance `{name}` must be positive, got {v}");
                }
            }
        }
        if let Some(d) = self.options.diffusion {
            if !(d > 0.0) {
                bail!("`diffusion` must be positive, got {d}");
            }
        }
        if self.options.gamma.is_some() && self.options.diffusion.is_some() {
            bail!("give either `gamma` or `diffusion`, not both");
        }
        self.model.resolve().validate().context("model block")?;
        Ok(())
    }

    /// Sets a sweep parameter: `model.<field>` or one of the scalar options.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name.strip_prefix("model.") {
            Some(field) => self.model.slot(field),
            None => self.options.slot(name),
        };
        match slot {
            Some(s) => {
                *s = Some(value);
                Ok(())
            }
            None => bail!("unknown sweep parameter `{name}`"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = Config::parse("experiment = \"phase-plane\"").unwrap();
        assert_eq!(c.experiment, ExperimentId::PhasePlane);
        assert_eq!(c.model.resolve(), ModelParams::reference());
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = Config::parse("experiment = \"modes\"\n[options]\nbogus = 1\n").unwrap_err();
        assert!(format!("{e:#}").contains("bogus"));
        assert!(Config::parse("experiment = \"modes\"\n[model]\nmu4 = 1\n").is_err());
        assert!(Config::parse("experiment = \"nope\"").is_err());
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(Config::parse("experiment = \"modes\"\n[options]\nresidual_tol = 0.0\n").is_err());
        assert!(Config::parse("experiment = \"modes\"\n[options]\nresidual_tol = -1e-6\n").is_err());
    }

    #[test]
    fn readings() {
        assert_eq!(DiffusionReading::InverseGamma.gamma(0.5), 2.0);
        assert_eq!(DiffusionReading::InverseSqrtGamma.gamma(0.5), 4.0);
    }

    #[test]
    fn sweep_grid_is_row_major() {
        let s: SweepBlock = toml::from_str("param = \"beta\"\nfrom = 1.0\nto = 3.0\nsteps = 3\nparam2 = \"model.mu3\"\nvalues2 = [1.0, 2.0]").unwrap();
        let p = s.points().unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![("beta".to_string(), 1.0), ("model.mu3".to_string(), 2.0)]);
        assert_eq!(p[2][0].1, 2.0);
    }

    #[test]
    fn set_routes_model_and_options() {
        let mut c = Config::parse("experiment = \"stationary\"").unwrap();
        c.set("beta", 3.2).unwrap();
        c.set("model.mu3", 1.4).unwrap();
        assert_eq!(c.options.beta, Some(3.2));
        assert_eq!(c.model.resolve().mu3, 1.4);
        assert!(c.set("model.zeta", 1.0).is_err());
    }
}
