//! Temporal alignment of skeletal motion sequences.
//!
//! Motions live on normalized time `[0, 1]`. Alignments are computed by
//! dynamic programming over one of four local costs (square-root velocities
//! of joint trajectories, pose Gram matrices, curvature/torsion of arclength
//! reparameterized trajectories, square-root velocities of joint directions on
//! the sphere), optionally anchored at elevation keyframes, and returned as
//! piecewise-linear time warps. The [`consistency`] module checks any of them
//! against known reparameterizations.

pub mod align;
pub mod consistency;
pub mod dp;
pub mod error;
pub mod features;
pub mod keyframes;
pub mod motion;
pub mod plot;
pub mod warping;

pub use error::{Error, Result};
