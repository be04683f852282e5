pub mod eigenwave;
pub mod envelope;
pub mod error;
pub mod quad;
pub mod quadrep;
pub mod saddle;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};

/// Version of this crate, embedded in command-line reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
