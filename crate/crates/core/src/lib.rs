//! Kernel networks built from eigenfunction expansions on the circle and the
//! sphere, with quadrature, localized filters and numerical experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eignet;
pub mod geometry;
pub mod manifold;
pub mod quadrature;
pub mod spectral;
pub mod harness;
pub mod io;
pub mod cli;
