//! Stochastic exponentials, Monte-Carlo estimators and the comparison of
//! `E[B e_f]` against the parabolic solvers.

pub mod check;
pub mod estimate;
pub mod exponential;

pub use check::{
    duality_check, moment_check, monte_carlo_v, pde_v, two_solution_comparison, DualityReport, DualitySetup,
};
pub use estimate::{estimate_moments, estimate_v, Estimate};
pub use exponential::{martingale_check, MartingaleReport, StochasticExponential};
