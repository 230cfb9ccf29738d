//! Degree-0 two-parameter persistence invariants of Rips/codensity
//! bifiltrations, and classifiers built from meet/join lattice convolutions.
//!
//! Pipeline: [`mesh_io`] turns OFF meshes into point clouds,
//! [`persistence::featurize`] computes the Hilbert function and the
//! multi-graded Betti numbers on a grid, [`datasets`] assembles labelled
//! splits, and [`nn`] / [`training`] fit either a lattice-convolution or a
//! standard-convolution network.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod gf2;
pub mod grid_lattice;
pub mod mesh_io;
pub mod nn;
pub mod persistence;
pub mod training;

pub use error::{Error, Result};
