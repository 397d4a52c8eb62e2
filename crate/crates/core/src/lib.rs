//! ICP-based 6-DoF object pose refinement.
//!
//! The crate covers the full refinement pipeline for a single rigid object
//! observed by a depth camera:
//!
//! - [`se3`]: rigid transforms, exponential/logarithm maps, perturbation
//!   sampling and on-manifold fusion of pose estimates with covariances.
//! - [`geometry`]: triangle meshes, pinhole cameras, z-buffer depth
//!   rendering, back-projection, normal estimation and depth noise models.
//! - [`association`]: nearest-neighbour and projective data association
//!   with distance/normal-compatibility rejection.
//! - [`icp`]: point-to-point and point-to-plane solvers plus the generic
//!   ICP loop with per-iteration tracing.
//! - [`vsd`]: the Visible Surface Discrepancy pose error, its
//!   multi-tolerance mean, and the online mean-VSD-estimate (MVE) proxy.
//! - [`hybrid`]: Dynamic Switching, Cascading ICP with divergence rollback,
//!   and the Hybrid ICP orchestration loop.
//! - [`sequential`]: sequential pose estimation from a moving camera with
//!   six initialisation/fusion strategies.

pub mod association;
pub mod geometry;
pub mod hybrid;
pub mod icp;
pub mod se3;
pub mod sequential;
pub mod vsd;

mod error;

pub use error::{Error, Result};
