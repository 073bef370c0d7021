//! Wave dynamics interpolating between quantum and classical behaviour.
//!
//! Each degree of freedom carries a classicality parameter `λ ∈ [0, 1]`; the
//! quantum potential it generates is subtracted from the external potential
//! with weight `λ`, so `λ = 0` is the Schrödinger limit and `λ = 1` evolves the
//! phase by the classical Hamilton-Jacobi equation.

pub mod density;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod potential;
pub mod schedule;
pub mod spectra;
pub mod stencil;
pub mod trajectories;

pub use error::{Error, Result};
pub use field::{ComplexField, Dof, PolarField};
pub use grid::{Boundary, Grid, Grid1D, Grid2D};
pub use num_complex::Complex64;
