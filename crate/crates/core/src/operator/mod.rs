//! Lie brackets and the second-order operator `𝓛 = ½ Σ_k [σ_k, [σ_k, ·]]`.

pub mod bracket;
pub mod coefficients;
pub mod diagnostics;

pub use bracket::{lie_bracket, lie_bracket_grid};
pub use coefficients::{
    apply_l_adjoint_by_transport, apply_l_by_brackets, CoefficientJet, GridCoefficients, OperatorCoefficients,
};
pub use diagnostics::{coercivity_check, interpolation_ratio, CoercivityReport};
