//! Training-free 3D part segmentation from multi-view image features.
//!
//! The pipeline renders a point cloud from a fixed set of cameras, lifts
//! per-pixel features back onto the points, smooths them with geometric
//! feature aggregation, clusters the points into parts and names the
//! clusters by matching them against back-projected image-text similarity
//! scores. Image models are kept outside the crate; their outputs come in as
//! FTNS tensor files.
//!
//! | stage | module |
//! |---|---|
//! | point cloud, FPS, k-NN | [`geometry`] |
//! | cameras and rasterization | [`render`] |
//! | upsampling, back-projection | [`featmap`] |
//! | feature aggregation | [`gfa`] |
//! | clustering and labelling | [`segment`] |
//! | metrics | [`eval`] |
//! | files, config, stage runners | [`io`], [`pipeline`] |
//! | synthetic fixtures | [`synth`] |

// `!(x >= 0.0)` is used on purpose: it rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// test oracles spell their loops out
#![cfg_attr(test, allow(clippy::needless_range_loop))]

pub mod assignment;
pub mod error;
pub mod eval;
pub mod featmap;
pub mod geometry;
pub mod gfa;
pub mod io;
pub mod matrix;
pub mod pipeline;
pub mod render;
pub mod segment;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::PointCloud;
pub use matrix::Matrix;
