//! Phase-space quantization on a lattice: grids and Fourier conventions, exact
//! symbolic star calculus, numerical star products, quasi-distributions,
//! spectra and time evolution.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod oracles;
pub mod poly;
pub mod spectra;
pub mod star;
pub mod wave;
pub mod wigner;

pub use error::{Error, Result};

/// Library version, as reported by the command-line front end.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
