//! Thick embeddings of voxel grid graphs into round balls.
//!
//! The pipeline partitions a voxel domain into pieces certified by good
//! G-balls ([`good_balls`]), places the pieces isometrically in disjoint
//! balls near the boundary of a large ball, routes cut edges to the
//! boundary with integral max-flow ([`flow_router`]) and reconnects them
//! with randomized waypoint routing ([`kb_router`]). [`embedder`] assembles
//! and validates the result; [`analysis`] holds dilation and winding
//! utilities and the three-dimensional counterexample family.

pub mod analysis;
pub mod embedder;
pub mod error;
pub mod flow_router;
pub mod geometry;
pub mod good_balls;
pub mod kb_router;
pub mod voxel_domain;

pub use error::{Error, Result};
pub use geometry::Point;
pub use voxel_domain::{g_ball, Cell, GBall, GridGraph, VoxelDomain};
