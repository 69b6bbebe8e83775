//! Analytic and grid-sampled vector fields.

pub mod analytic;
pub mod grid;
pub mod interp;
pub mod io;
pub mod mollify;

pub use analytic::{AnalyticField, Jet, SharedField};
pub use grid::{divergence, Grid, GridField};
pub use interp::Interpolated;
pub use mollify::Mollifier;
