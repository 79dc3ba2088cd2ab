//! Phase-space dynamics of quantum and classical characteristic functions.
//!
//! A characteristic function is sampled on a uniform `(λ, μ)` grid and
//! evolved by convolving it with a polynomial Hamiltonian's characteristic
//! symbol through one of four kernels (normal, symmetric, antinormal,
//! classical). A truncated Fock-space solver provides independent ground
//! truth, and a Wigner/Moyal view gives a spectral fast path.

pub mod charfn;
pub mod classical;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod kernels;
pub mod poly;
pub mod series;
pub mod stencil;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::{CharField, GridSpec, Ordering, PhaseGrid};
pub use num_complex::Complex64 as C64;
