//! Mean-field quantum lattice systems: finite-volume partition functions,
//! tilted pressures, their Legendre transforms and the variational formula
//! for the limiting free energy.

pub mod error;
pub mod exec;
pub mod harness;
pub mod hermitian;
pub mod lattice;
pub mod ncpoly;
pub mod optim;
pub mod spectral;
pub mod thermo;
pub mod tilted;
pub mod varprinciple;

pub use error::{Error, Result};
pub use exec::Execution;
pub use hermitian::{DenseHermitian, C64};
pub use lattice::{Interaction, LocalObservable, Volume};
pub use ncpoly::NcPolynomial;
pub use spectral::{DensityMatrix, Spectrum};
