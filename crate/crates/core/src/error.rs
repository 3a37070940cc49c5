use thiserror::Error;

use crate::kinetics::Branch;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("no fold: beta_l^2 = {beta_l_sq:.6e} must lie strictly above 3*sigma = {three_sigma:.6e}")]
    NoFold { beta_l_sq: f64, three_sigma: f64 },

    #[error("u = {u} outside the domain of branch {branch:?}; nearest fold at u = {nearest_fold}")]
    BranchDomain {
        branch: Branch,
        u: f64,
        nearest_fold: f64,
    },

    #[error("degenerate parameters: positive equilibria coalesce near u = {u}")]
    DegenerateEquilibria { u: f64 },

    #[error("no saddle equilibrium for these parameters")]
    NoSaddle,

    #[error("stable manifold incomplete after arclength {arclength:.3e} ({points} points computed)")]
    IncompleteManifold {
        arclength: f64,
        points: usize,
        partial: Vec<(f64, f64)>,
    },

    #[error("stable manifold not converged: halving the seed offset moved the intercepts by {drift:.3e} (tol {tol:.1e})")]
    ManifoldNotConverged { drift: f64, tol: f64 },

    #[error("jump value beta = {beta} outside the admissible interval ({lo}, {hi})")]
    InadmissibleBeta { beta: f64, lo: f64, hi: f64 },

    #[error("infeasible slope m = {m}: must satisfy 0 < m < {bound} ({which})")]
    InfeasibleSlope {
        m: f64,
        bound: f64,
        which: &'static str,
    },

    #[error("no balanced jump value: F0 - F1 keeps sign {sign} on ({lo}, {hi})")]
    NoBalancedBeta { lo: f64, hi: f64, sign: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {achieved:.3e} > requested {requested:.3e}")]
    Quadrature {
        a: f64,
        b: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("root finder failed: {0}")]
    Root(String),

    #[error("ODE integration failed at t = {t}: {reason}")]
    Ode { t: f64, reason: String },

    #[error("blow-up at t = {time}: non-finite value in field {field}")]
    BlowUp {
        time: f64,
        field: usize,
        last_finite: Box<crate::evolution::SimState>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
