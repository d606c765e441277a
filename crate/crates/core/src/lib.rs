//! Structure-preserving matrix model of axisymmetric ideal MHD on S³.
//!
//! The reduced four-field system lives on su(N) through the Hoppe–Yau
//! quantization of S² ([`quantization`]). [`dynamics`] holds the right-hand
//! sides and the Lie-algebraic operators, [`integrator`] the isospectral
//! midpoint scheme, [`diagnostics`] the Casimirs and Hamiltonian, and
//! [`sphere_analysis`] the continuous-side quadrature used for convergence
//! studies. [`cli`] drives experiments from the command line.

pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod matrix_core;
pub mod quantization;
pub mod sphere_analysis;

pub use error::{Error, Result};
