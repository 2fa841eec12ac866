pub mod error;
pub mod estimation;
pub mod exec;
pub mod fockspace;
pub mod interferometry;
pub mod linalg;
pub mod noise;
pub mod preparation;
pub mod scenarios;
pub mod sideband;
pub mod validation;

pub use error::{Error, Result};
