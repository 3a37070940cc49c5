//! Built-in configurations; each one asserts one acceptance check.

pub struct Preset {
    pub name: &'static str,
    pub about: &'static str,
    pub config: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig-gradient",
        about: "gradient-like profile on the reference parameters; l = 0.46973 +- 1e-3 under D = 1/gamma",
        config: r#"
experiment = "gamma-solve"
svg = true

[options]
beta = 3.731132
diffusion = 0.100044
reading = "inverse-gamma"
expect_l = 0.46973
l_tol = 1e-3
"#,
    },
    Preset {
        name: "oracle-equivalence",
        about: "quadrature profiles against ODE shooting for 20 random (beta, m) pairs",
        config: r#"
experiment = "stationary"

[options]
oracle_pairs = 20
oracle_points = 50
oracle_rtol = 1e-10
oracle_tol = 1e-6
seed = 2024
"#,
    },
    Preset {
        name: "layer-limits",
        about: "gamma -> 0 as m -> 0, and l -> 1, l*, 0 for beta below, at, above the critical value",
        config: r#"
experiment = "stationary"
svg = true

[options]
beta = 3.5
slope_decades = 6
gamma_small = 1e-3
u_tol = 1e-3
betas = [3.0, 4.3]
include_critical = true
approach_points = 8
gap_floor = 1e-200
limit_tol = 0.02
gamma_large = 1e4
"#,
    },
    Preset {
        name: "uniqueness",
        about: "T(k) strictly decreasing on 200 log-spaced k inside the Delta-window",
        config: r#"
experiment = "uniqueness-scan"
svg = true

[options]
beta = 3.0
k_points = 200
k_lo_rel = 1e-3
dpdk_tol = 1e-4
"#,
    },
    Preset {
        name: "modes",
        about: "mode-n tilings for n = 1..4 satisfy the weak stationary equation",
        config: r#"
experiment = "modes"
svg = true

[options]
beta = 3.731132
diffusion = 0.100044
modes = [1, 2, 3, 4]
residual_cells = 100
residual_tol = 1e-6
"#,
    },
    Preset {
        name: "appendix-lemma",
        about: "log-slope of the turning-point integral for -x^2/2 and -x^2(1+x)/2",
        config: r#"
experiment = "appendix-lemma"
svg = true

[options]
integrand = "both"
a_hi = 0.05
decades = 6.0
points = 13
slope_tol = 0.01
"#,
    },
    Preset {
        name: "layer-asymptotics",
        about: "log-slopes of the half widths M(k), N(p) at the critical beta",
        config: r#"
experiment = "layer-asymptotics"
svg = true

[options]
gap_hi = 1e-20
gap_lo = 1e-182
points = 12
slope_tol = 0.02
"#,
    },
    Preset {
        name: "boundedness",
        about: "50 random positive full-system runs stay in their invariant rectangles up to t = 10",
        config: r#"
experiment = "simulate-full"

[options]
random_inits = 50
cells = 32
t_end = 10.0
scheme = "ssp-rk3"
positivity_tol = 1e-12
seed = 7
"#,
    },
    Preset {
        name: "comparison",
        about: "20 random ordered reduced pairs stay ordered up to t = 5",
        config: r#"
experiment = "comparison"

[options]
pairs = 20
cells = 32
t_end = 5.0
order_tol = 1e-9
seed = 11
"#,
    },
    Preset {
        name: "basin",
        about: "constant data above / below the stable manifold converge to the upper state / origin by t = 200",
        config: r#"
experiment = "basin"

[options]
upper_init = [12.0, 20.0]
lower_init = [0.5, 0.5]
cells = 32
t_end = 200.0
tol = 1e-6
"#,
    },
    Preset {
        name: "phase-plane",
        about: "nullclines, equilibria and the stable manifold of the saddle",
        config: r#"
experiment = "phase-plane"
svg = true
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn every_preset_parses() {
        for p in PRESETS {
            Config::parse(p.config).unwrap_or_else(|e| panic!("{}: {e:#}", p.name));
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), PRESETS.len());
        assert!(find("fig-gradient").is_some());
    }
}
