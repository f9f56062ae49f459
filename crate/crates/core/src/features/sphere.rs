//! Joint directions seen from the body center, as curves on the unit sphere,
//! and their square-root velocity transform.
//!
//! Tangent vectors live at different base points, so before comparison each
//! one is parallel-transported along the great circle to a common reference
//! point, the first sample of the first curve.

use serde::{Deserialize, Serialize};

use super::{midpoints, ZERO_VELOCITY};
use crate::dp::CostOracle;
use crate::error::{Error, Result};
use crate::motion::{Motion, Vec3};

/// Consecutive samples closer than this to antipodal make the log map
/// ill-defined.
const ANTIPODAL_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereCurve {
    pub u: Vec<Vec3>,
    pub times: Vec<f64>,
}

/// Normalizes offsets from the center. Fails if any offset is shorter than
/// [`ZERO_VELOCITY`].
pub fn sphere_curve_from_offsets(offsets: &[Vec3], times: &[f64]) -> Result<SphereCurve> {
    if offsets.len() != times.len() {
        return Err(Error::InvalidInput("offsets and times differ in length".into()));
    }
    let u = offsets
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let n = d.norm();
            if n < ZERO_VELOCITY {
                Err(Error::Degenerate(format!("joint meets the center at frame {k}")))
            } else {
                Ok(d / n)
            }
        })
        .collect::<Result<_>>()?;
    Ok(SphereCurve {
        u,
        times: times.to_vec(),
    })
}

/// Direction of `joint` from the mean of the `center` joints.
pub fn sphere_curve(m: &Motion, joint: usize, center: &[usize]) -> Result<SphereCurve> {
    if center.is_empty() {
        return Err(Error::InvalidInput("empty center joint list".into()));
    }
    if center.contains(&joint) {
        return Err(Error::InvalidInput(format!("joint {joint} is part of the center")));
    }
    if let Some(&j) = std::iter::once(&joint)
        .chain(center)
        .find(|&&j| j >= m.joint_count())
    {
        return Err(Error::UnknownJoint(j.to_string()));
    }
    let offsets: Vec<Vec3> = m
        .poses()
        .map(|p| {
            let c = center.iter().map(|&k| p[k]).sum::<Vec3>() / center.len() as f64;
            p[joint] - c
        })
        .collect();
    sphere_curve_from_offsets(&offsets, m.times())
}

/// Riemannian log map of the sphere at `x`.
fn log_map(x: &Vec3, y: &Vec3) -> Result<Vec3> {
    let cos = x.dot(y).clamp(-1.0, 1.0);
    if cos < -1.0 + ANTIPODAL_GAP {
        return Err(Error::Degenerate("consecutive samples are antipodal".into()));
    }
    let perp = y - x * cos;
    let sin = perp.norm();
    if sin == 0.0 {
        return Ok(Vec3::zeros());
    }
    Ok(perp * (sin.atan2(cos) / sin))
}

/// Transport of tangent `v` at `x` to `r` along the connecting great circle.
fn transport(x: &Vec3, r: &Vec3, v: &Vec3) -> Result<Vec3> {
    let denom = 1.0 + x.dot(r);
    if denom < ANTIPODAL_GAP {
        return Err(Error::Degenerate("sample is antipodal to the reference point".into()));
    }
    Ok(v - (x + r) * (r.dot(v) / denom))
}

/// Square-root velocity vectors `q_i`, tangent at `u_i`, on the midpoint grid.
pub fn sphere_srv(curve: &SphereCurve) -> Result<Vec<Vec3>> {
    if curve.u.len() < 2 {
        return Err(Error::InvalidInput("sphere curve needs 2 samples".into()));
    }
    curve
        .u
        .windows(2)
        .zip(curve.times.windows(2))
        .map(|(u, t)| {
            let w = log_map(&u[0], &u[1])? / (t[1] - t[0]);
            let speed = w.norm();
            Ok(if speed < ZERO_VELOCITY {
                Vec3::zeros()
            } else {
                w / speed.sqrt()
            })
        })
        .collect()
}

/// Sample times of [`sphere_srv`] output.
pub fn sphere_srv_times(curve: &SphereCurve) -> Vec<f64> {
    midpoints(&curve.times)
}

/// `c(i, j) = ‖P q_a(i) − P q_b(j)‖²` with `P` the transport to `u_a(0)`.
pub fn sphere_srv_cost(a: &SphereCurve, b: &SphereCurve) -> Result<CostOracle<'static>> {
    let r = *a
        .u
        .first()
        .ok_or_else(|| Error::InvalidInput("empty sphere curve".into()))?;
    let moved = |c: &SphereCurve| -> Result<Vec<Vec3>> {
        sphere_srv(c)?
            .iter()
            .zip(&c.u)
            .map(|(q, x)| transport(x, &r, q))
            .collect()
    };
    Ok(CostOracle::pairwise(moved(a)?, moved(b)?, |x, y| (x - y).norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{uniform_times, SkeletonTopology};
    use std::sync::Arc;

    fn pair_motion(offsets: &[Vec3]) -> Motion {
        let topo = Arc::new(SkeletonTopology::unlinked(vec!["c".into(), "j".into()]).unwrap());
        let center = Vec3::new(0.3, -1.0, 2.0);
        let poses = offsets.iter().map(|d| vec![center, center + d]).collect();
        Motion::new(topo, uniform_times(offsets.len()), poses).unwrap()
    }

    #[test]
    fn normalizes_offsets() {
        let m = pair_motion(&[Vec3::new(0.0, 0.0, 5.0); 3]);
        let s = sphere_curve(&m, 1, &[0]).unwrap();
        assert!(s.u.iter().all(|u| (u - Vec3::z()).norm() < 1e-15));
        let m = pair_motion(&[Vec3::new(1.0, 1.0, 0.0); 2]);
        let u = sphere_curve(&m, 1, &[0]).unwrap().u[0];
        let r = 0.5f64.sqrt();
        assert!((u - Vec3::new(r, r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_input() {
        let m = pair_motion(&[Vec3::x(), Vec3::zeros()]);
        assert!(sphere_curve(&m, 1, &[0]).is_err());
        assert!(sphere_curve(&m, 0, &[0]).is_err());
        let flip = SphereCurve {
            u: vec![Vec3::x(), -Vec3::x()],
            times: vec![0.0, 1.0],
        };
        assert!(sphere_srv(&flip).is_err());
    }

    #[test]
    fn constant_curves_cost_nothing() {
        let c = SphereCurve {
            u: vec![Vec3::y(); 4],
            times: uniform_times(4),
        };
        let cost = sphere_srv_cost(&c, &c).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(cost.cost(i, j), 0.0);
            }
        }
    }

    #[test]
    fn orthogonal_great_circles() {
        // u(t) = cos(ωt) r + sin(ωt) e, so ‖q‖² = ω
        let omega = 1.2;
        let times = uniform_times(9);
        let arc = |e: Vec3| SphereCurve {
            u: times
                .iter()
                .map(|&t| Vec3::z() * (omega * t).cos() + e * (omega * t).sin())
                .collect(),
            times: times.clone(),
        };
        let (a, b) = (arc(Vec3::x()), arc(Vec3::y()));
        let cost = sphere_srv_cost(&a, &b).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((cost.cost(i, j) - 2.0 * omega).abs() < 1e-12);
            }
        }
    }
}
