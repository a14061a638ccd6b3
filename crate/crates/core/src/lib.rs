//! Second-order coverage control for multi-agent photogrammetry.
//!
//! Agents are assigned to pairs through the second-order Voronoi partition of
//! a convex region, and a feature density weights the photogrammetry and
//! auxiliary coverage costs minimized by the additive-centroid controller.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod cost;
pub mod density;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod quadrature;
pub mod simulator;

pub use error::{Error, Result};
