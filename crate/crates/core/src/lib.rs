pub mod alpha;
pub mod barycenter;
pub mod cli;
pub mod error;
pub mod fisher;
pub mod hyperbolic;
pub mod io;
pub mod measure;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
