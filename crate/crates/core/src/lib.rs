pub mod algebra;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fidelity;
pub mod numkernel;
pub mod prep;
pub mod random;
pub mod spectral;

pub use error::{Error, Result};
