//! Axis-order optimization for sets of star glyphs and RadViz plots.
//!
//! Given a labeled multivariate dataset, the same permutation of coordinate
//! axes is applied to every star glyph in the set. The choice of permutation
//! changes the glyph shapes and therefore how clearly the classes separate
//! visually. This crate scores that separation with a silhouette coefficient
//! over shape-context distances between glyph contours, and searches for good
//! permutations with:
//!
//! - a set-to-sequence attention policy trained with actor-critic REINFORCE
//!   ([`ordernet`]), optionally accelerated by a learned approximation of the
//!   contour distance ([`distnet`]);
//! - reference optimizers: random swapping, exhaustive search, and a salient
//!   (adjacent-dissimilarity) ordering ([`baselines`]).
//!
//! RadViz plots are supported through the same pipeline with a
//! Davies-Bouldin ratio objective ([`separation`]).

pub mod axis_order;
pub mod baselines;
pub mod dataset;
pub mod distnet;
pub mod error;
pub mod geometry;
pub mod nn;
pub mod ordernet;
pub mod render;
pub mod separation;

pub use axis_order::AxisOrder;
pub use dataset::{ClusterCenters, CoordinateEncoding, DataSet};
pub use error::{Error, Result};
