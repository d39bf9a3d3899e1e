//! Certified two-dimensional lattice Gaussian sums.
//!
//! `E_L(z; alpha) = sum_{lambda in L} exp(-pi alpha |lambda + z|^2)` over unit-covolume
//! planar lattices, the shifted and charged theta families built from it, global
//! minimization over the torus, sweeps over the modular fundamental domain, numerical
//! checks of the quantitative lemmas behind the hexagonal optimality result, and the
//! downstream applications (Gabor frame bounds, torus heat kernels, completely
//! monotone and Riesz energies, Born charges, Landau constants).

pub mod applications;
pub mod error;
pub mod lattice;
pub mod optimize;
pub mod proofcheck;
pub mod special;
pub mod sum;
pub mod theta;

pub use error::{Error, Result};
pub use lattice::{Frame, Lattice, PhasePoint};
pub use theta::{CertifiedValue, TruncationPolicy};
