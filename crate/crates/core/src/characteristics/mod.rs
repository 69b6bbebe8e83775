//! Stochastic characteristics and the pathwise representation of solutions.

pub mod flow;
pub mod representation;
pub mod weak;

pub use flow::{Characteristics, FlowPoint, InversePoint};
pub use representation::{SpdeSampleField, MAX_FAILED_FRACTION, TOL_INV};
pub use weak::{weak_form_residual, WeakFormProbe};
