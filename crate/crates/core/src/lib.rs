//! One-dimensional acoustics of a compressible fluid in a pipe coupled to
//! thin oscillating walls (acoustic point interactions).
//!
//! The library covers four layers that cross-validate each other:
//!
//! * [`single_wall`]: the exactly solvable single-oscillator problem
//!   (d'Alembert free fields, memory kernel, wall trajectory, decay rate);
//! * [`krein`]: the finite-array resolvent machinery (coupling matrix
//!   `Γ(ζ)`, Green vectors, zero modes, generalized eigenfunctions,
//!   transmission spectra);
//! * [`timedomain`]: a unit-CFL characteristics simulator used as the
//!   independent dynamical oracle;
//! * [`bands`]: the periodic (Kronig-Penney) lattice with its transcendental
//!   dispersion relation, band edges, gaps and Bloch eigenfunctions.
//!
//! Shared physical parameters, discretized states, the energy scalar product
//! and quadrature live in [`medium`], [`grid`] and [`state`].

pub mod bands;
pub mod grid;
pub mod krein;
pub mod medium;
pub mod output;
pub mod profiles;
pub mod single_wall;
pub mod state;
pub mod timedomain;

pub use grid::{Grid, Layout};
pub use medium::{Medium, OscillatorArray};
pub use state::{energy, inner_product, EnergyBreakdown, Side, SystemState};
