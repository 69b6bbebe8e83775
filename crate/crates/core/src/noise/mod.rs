//! Noise bases, their covariance and Brownian drivers.

pub mod basis;
pub mod brownian;

pub use basis::{lattice, CovarianceBounds, CovarianceJet, EllipticityReport, ModeSpec, NoiseBasis, Slot};
pub use brownian::{BrownianEnsemble, BrownianPath};
