//! Finite-difference solvers for the expected-value equation and the
//! second-moment system, with energy and bilinear-form diagnostics.

pub mod control;
pub mod energy;
pub mod expected;
pub mod moments;
pub mod stepper;

pub use control::Control;
pub use energy::{bilinear_diagnostics, bilinear_form, energy_diagnostics, BilinearReport, EnergySummary};
pub use expected::{transport_bracket, ExpectedValueProblem};
pub use moments::{outer_square, sym_index, sym_len, MomentCoefficients, MomentProblem};
pub use stepper::{diagnostics_csv, evolve, DiagnosticRow, Evolution, NodeDrift, ParabolicState};
