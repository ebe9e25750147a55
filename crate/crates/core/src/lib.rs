//! Boundary value problems on the domains `Ω_x` of the Sierpinski gasket:
//! the part of the gasket above a horizontal line at depth `x` below the top
//! vertex, whose boundary is the Cantor slice `S(x)` together with the top
//! vertex `q0`.
//!
//! The crate is organised bottom-up:
//!
//! * [`dyadic`] holds exponent sequences, Haar words and cell addresses.
//! * [`ratios`] evaluates the ratio `m0(x)` and the multipliers derived from it.
//! * [`mesh`] and [`solver`] provide level-`k` graph approximations, energies,
//!   quadrature and a brute-force Dirichlet solver used as an oracle.
//! * [`harmonics`] builds the harmonic basis `h0`, `h1`, `h_ω` and Haar spectra.
//! * [`flux`] covers normal derivatives and the Dirichlet-to-Neumann map.
//! * [`extension`] glues functions across `S(x)` and extends them below it.
//! * [`greens`] assembles the Green's kernel of `Ω_x` and solves `-Δu = F`.
//! * [`verify`] runs the numerical check groups shared by the CLI and tests.

#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod dyadic;
pub mod error;
pub mod extension;
pub mod flux;
pub mod greens;
pub mod harmonics;
pub mod mesh;
pub mod ratios;
pub mod solver;
pub mod verify;

pub use dyadic::{hausdorff_deficit, hausdorff_dimension, CellAddress, DyadicSequence, Word};
pub use error::{GasketError, Result};
pub use harmonics::{EnergyReport, HaarSpectrum, HarmonicBasis};
pub use mesh::{Cell, DomainMask, GasketMesh, MeshFunction};
pub use ratios::{RatioTable, RatioTriple};
