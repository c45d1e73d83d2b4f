//! Fiber Hamiltonians of two-particle Schrödinger operators on `Z^d`.
//!
//! After separating the centre of mass, the two-particle operator with
//! masses `m1`, `m2` decomposes into fibers `h(k) = h0(k) + v` indexed by a
//! quasi-momentum `k`. This crate assembles truncations of `h(k)`, computes
//! its band and discrete spectrum, evaluates Birman–Schwinger counts, and
//! splits `h(k)` into lower-dimensional fibers when the band degenerates.

pub mod banded;
pub mod birman_schwinger;
pub mod dispersion;
pub mod error;
pub mod experiment;
pub mod fiber;
pub mod lanczos;
pub mod lattice;
pub mod operator;
pub mod plot;
pub mod potential;
pub mod sparse;
pub mod spectral;

pub use dispersion::{band_params, BandParams, MassPair, QuasiMomentum};
pub use error::{Error, Result};
pub use lattice::{Boundary, LatticeBox};
pub use operator::{assemble, FiberOperator};
pub use potential::Potential;
