//! Wave-physics toolkit for locating interfaces and vertices of a
//! piecewise-homogeneous simplicial domain from sampled field traces.

// Negated float comparisons are used on purpose so that NaN falls into the
// rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustic;
pub mod cli;
pub mod config;
pub mod coupled_mode;
pub mod detect;
pub mod fresnel;
pub mod fwm;
pub mod geometry;
pub mod io;
pub mod medium;
pub mod waveguide;
