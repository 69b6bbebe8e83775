pub mod characteristics;
pub mod duality;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod noise;
pub mod operator;
pub mod parabolic;
pub mod random_fields;
pub mod stats;

pub use error::{Error, Result};
