//! Feature transforms that feed the DP engine.
//!
//! Each transform turns a motion (or one joint trajectory) into a sequence of
//! samples at known normalized times, and a pair of such sequences into a
//! [`CostOracle`](crate::dp::CostOracle) over sample pairs.

pub mod frenet;
pub mod gram;
pub mod sphere;
pub mod srv;

pub use frenet::{frenet_cost, frenet_frames, FrenetData};
pub use gram::{gram_cost, gram_sequence, psd_distance, GramSequence};
pub use sphere::{
    sphere_curve, sphere_curve_from_offsets, sphere_srv, sphere_srv_cost, sphere_srv_times, SphereCurve,
};
pub use srv::{srv_cost, srvt_r3, SrvCurve};

/// Speeds below this (m per unit normalized time, or per meter of arclength)
/// count as zero.
pub const ZERO_VELOCITY: f64 = 1e-8;

/// Midpoints of consecutive sample times.
pub(crate) fn midpoints(times: &[f64]) -> Vec<f64> {
    times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}
