//! Narrow-strip von Kármán energies and their one-dimensional ribbon limits.
//!
//! The crate covers the density algebra (`quadform`), finite element
//! minimization of the three ribbon functionals (`ribbon1d`) and of the
//! scaled plate energies (`plate2d`), explicit recovery fields
//! (`recovery`), and the ε-sweeps that compare them (`sweep`).

pub mod error;
pub mod hermite;
pub mod oracle;
pub mod plate2d;
pub mod profile;
pub mod quadform;
pub mod quadrature;
pub mod recovery;
pub mod reduction;
pub mod ribbon1d;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use quadform::{Material, QuadForm2, QuadForm3, RelaxConstants, RelaxedDensity, SymMat2};
