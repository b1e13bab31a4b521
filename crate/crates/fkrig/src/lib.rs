pub mod basis;
pub mod error;
pub mod geo;
pub mod mean;
pub mod numeric;
pub mod optim;
pub mod profile;
pub mod sparse;

pub use error::{Error, Result};
