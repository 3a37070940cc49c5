//! Numerical laboratory for a receptor-based diffusion-ODE model whose
//! ligand-production kinetics exhibit hysteresis.
//!
//! [`kinetics`] holds the reaction terms, the S-shaped nullcline with its
//! branches, the equilibria and the stable manifold of the saddle.
//! [`stationary`] builds monotone layer solutions from energy quadratures and
//! studies their limits, their uniqueness and the tiled mode-`n` patterns.
//! [`asymptotics`] fits the logarithmic law for integrals with a simple turning
//! point, and [`evolution`] runs method-of-lines simulations of the four-field
//! and reduced models with boundedness, comparison and basin harnesses.
//!
//! [`quad`], [`roots`] and [`ode`] supply the quadrature, root finding and
//! adaptive Runge-Kutta integration used throughout.

pub mod asymptotics;
pub mod error;
pub mod evolution;
pub mod io;
pub mod kinetics;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod stationary;

pub use error::{Error, Result};
pub use kinetics::{Branch, BranchTable, Kinetics, ModelParams};
