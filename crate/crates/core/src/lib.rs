//! Numerical laboratory for swarming models with sharp, velocity-dependent
//! sensitivity regions.
//!
//! The crate is split along the objects it manipulates:
//!
//! * [`regions`]: the sets `K(v)`, their boundary surrogates `Θ(v)`,
//!   mollified indicators and Monte Carlo measure estimators.
//! * [`forces`]: Cucker-Smale, attractive-repulsive and first-order
//!   interaction laws evaluated with Filippov slope selection or mollified
//!   indicators.
//! * [`dynamics`]: explicit Euler integration of the particle system.
//! * [`transport`]: exact Wasserstein-1 distances between discrete measures.
//! * [`harness`]: convergence, stability and hypothesis studies.
//!
//! Vectors are stored as `[f64; 3]`; in two dimensions the last component is
//! kept at zero, which leaves every norm and dot product unchanged.

pub mod dynamics;
pub mod error;
pub mod forces;
pub mod geom;
pub mod harness;
pub mod io;
pub mod regions;
pub mod transport;

pub use error::{Error, Result};

/// Version string recorded in run manifests.
pub const VERSION: &str = concat!("swarmlab ", env!("CARGO_PKG_VERSION"));
