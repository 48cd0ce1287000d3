//! Characterization of multi-photon split states with static coupled-waveguide
//! circuits.
//!
//! The crate covers the whole pipeline:
//!
//! * [`combinatorics`]: permutation and detector-set enumeration, parameter
//!   counts and minimum port numbers;
//! * [`states`]: split-state density matrices, their free-parameter vector and
//!   construction from spectral overlaps;
//! * [`circuit`]: segmented waveguide arrays with hidden phase layers;
//! * [`tomography`]: measurement matrix, correlation prediction, pseudoinverse
//!   reconstruction, physical projection and fidelity;
//! * [`fock_oracle`]: a brute-force Fock-space simulator used to check the
//!   measurement matrix;
//! * [`optimize`]: Nelder–Mead design of phase programs;
//! * [`analysis`]: Monte Carlo noise and fabrication-tolerance studies.

pub mod analysis;
pub mod circuit;
pub mod combinatorics;
pub mod error;
pub mod fock_oracle;
pub mod linalg;
pub mod optimize;
mod par;
pub mod permanent;
pub mod report;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
