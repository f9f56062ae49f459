//! Moving frames, curvature and torsion of joint trajectories.
//!
//! A trajectory is first resampled to uniform arclength with the same number
//! of samples, using cubic Hermite interpolation over the cumulative chord
//! length. Derivatives on that grid come from central differences; `c‴` uses
//! the five-point stencil when there are at least five samples.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::ZERO_VELOCITY;
use crate::dp::CostOracle;
use crate::error::{Error, Result};
use crate::motion::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrenetData {
    /// Columns are tangent, normal and binormal.
    pub frames: Vec<Matrix3<f64>>,
    pub curvature: Vec<f64>,
    /// `None` where `‖c′ × c″‖` vanishes.
    pub torsion: Vec<Option<f64>>,
    /// Cumulative arclength (m) of every sample.
    pub arclength: Vec<f64>,
    /// Normalized time at which the curve passes each arclength sample.
    pub times: Vec<f64>,
    /// False when torsion is undefined everywhere, e.g. on a straight line.
    pub torsion_defined: bool,
}

impl FrenetData {
    pub fn len(&self) -> usize {
        self.curvature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curvature.is_empty()
    }
}

fn chord_lengths(c: &[Vec3]) -> Vec<f64> {
    let mut u = Vec::with_capacity(c.len());
    u.push(0.0);
    for w in c.windows(2) {
        u.push(u.last().unwrap() + (w[1] - w[0]).norm());
    }
    u
}

fn tangents(c: &[Vec3], u: &[f64]) -> Vec<Vec3> {
    let n = c.len();
    (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            let du = u[b] - u[a];
            if du > 0.0 {
                (c[b] - c[a]) / du
            } else {
                Vec3::zeros()
            }
        })
        .collect()
}

/// Points at parameter values `targets` of the Hermite spline through
/// `(u_k, c_k)`, plus the linearly interpolated `times`.
fn hermite_resample(c: &[Vec3], times: &[f64], u: &[f64], targets: &[f64]) -> (Vec<Vec3>, Vec<f64>) {
    let m = tangents(c, u);
    let mut points = Vec::with_capacity(targets.len());
    let mut ts = Vec::with_capacity(targets.len());
    let mut k = 0;
    for &s in targets {
        while k + 2 < u.len() && u[k + 1] <= s {
            k += 1;
        }
        let h = u[k + 1] - u[k];
        if h <= 0.0 {
            points.push(c[k]);
            ts.push(times[k]);
            continue;
        }
        let x = ((s - u[k]) / h).clamp(0.0, 1.0);
        let (x2, x3) = (x * x, x * x * x);
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        points.push(c[k] * h00 + m[k] * (h10 * h) + c[k + 1] * h01 + m[k + 1] * (h11 * h));
        ts.push(times[k] + x * (times[k + 1] - times[k]));
    }
    (points, ts)
}

struct Derivatives {
    d1: Vec<Vec3>,
    d2: Vec<Vec3>,
    d3: Vec<Vec3>,
}

fn derivatives(c: &[Vec3], h: f64) -> Derivatives {
    let n = c.len();
    let mut d1 = vec![Vec3::zeros(); n];
    let mut d2 = vec![Vec3::zeros(); n];
    for i in 1..n - 1 {
        d1[i] = (c[i + 1] - c[i - 1]) / (2.0 * h);
        d2[i] = (c[i + 1] - 2.0 * c[i] + c[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (2.0 * h);
    d1[n - 1] = (3.0 * c[n - 1] - 4.0 * c[n - 2] + c[n - 3]) / (2.0 * h);
    d2[0] = (2.0 * c[0] - 5.0 * c[1] + 4.0 * c[2] - c[3]) / (h * h);
    d2[n - 1] = (2.0 * c[n - 1] - 5.0 * c[n - 2] + 4.0 * c[n - 3] - c[n - 4]) / (h * h);

    let h3 = h * h * h;
    let d3 = if n == 4 {
        vec![(c[3] - 3.0 * c[2] + 3.0 * c[1] - c[0]) / h3; 4]
    } else {
        let mut d3 = vec![Vec3::zeros(); n];
        for i in 2..n - 2 {
            d3[i] = (c[i + 2] - 2.0 * c[i + 1] + 2.0 * c[i - 1] - c[i - 2]) / (2.0 * h3);
        }
        d3[0] = d3[2];
        d3[1] = d3[2];
        d3[n - 1] = d3[n - 3];
        d3[n - 2] = d3[n - 3];
        d3
    };
    Derivatives { d1, d2, d3 }
}

/// Frenet data of a sampled space curve; needs at least 4 samples.
pub fn frenet_frames(positions: &[Vec3], times: &[f64]) -> Result<FrenetData> {
    let n = positions.len();
    if n < 4 || times.len() != n {
        return Err(Error::InvalidInput(format!(
            "moving frames need at least 4 samples with matching times, got {n} and {}",
            times.len()
        )));
    }
    let u = chord_lengths(positions);
    let total = u[n - 1];
    if total < ZERO_VELOCITY {
        return Err(Error::Degenerate("trajectory has zero length".into()));
    }
    let h = total / (n - 1) as f64;
    let arclength: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let (c, sample_times) = hermite_resample(positions, times, &u, &arclength);
    let d = derivatives(&c, h);

    let mut curvature = Vec::with_capacity(n);
    let mut torsion = Vec::with_capacity(n);
    let mut frames: Vec<Option<Matrix3<f64>>> = Vec::with_capacity(n);
    for i in 0..n {
        let (v, a, j) = (d.d1[i], d.d2[i], d.d3[i]);
        let speed = v.norm();
        let cross = v.cross(&a);
        let cn = cross.norm();
        curvature.push(if speed < ZERO_VELOCITY { 0.0 } else { cn / speed.powi(3) });
        torsion.push((cn >= ZERO_VELOCITY).then(|| cross.dot(&j) / (cn * cn)));
        frames.push(if speed < ZERO_VELOCITY {
            None
        } else {
            let t = v / speed;
            let normal = a - t * t.dot(&a);
            let nn = normal.norm();
            (nn >= ZERO_VELOCITY).then(|| {
                let nv = normal / nn;
                Matrix3::from_columns(&[t, nv, t.cross(&nv)])
            })
        });
    }

    // carry the last valid frame forward, and the first one backward
    let first_valid = frames.iter().flatten().next().copied().unwrap_or_else(|| {
        let t = (c[n - 1] - c[0]).normalize();
        let helper = if t.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let nv = (helper - t * t.dot(&helper)).normalize();
        Matrix3::from_columns(&[t, nv, t.cross(&nv)])
    });
    let mut last = first_valid;
    let frames = frames
        .into_iter()
        .map(|f| {
            if let Some(f) = f {
                last = f;
            }
            last
        })
        .collect();

    let torsion_defined = torsion.iter().any(Option::is_some);
    Ok(FrenetData {
        frames,
        curvature,
        torsion,
        arclength,
        times: sample_times,
        torsion_defined,
    })
}

/// `c(i, j) = (κ_a(i) − κ_b(j))² + λ_τ (τ_a(i) − τ_b(j))²`; the torsion term is
/// dropped when either torsion is undefined.
pub fn frenet_cost(a: &FrenetData, b: &FrenetData, lambda_tau: f64) -> CostOracle<'static> {
    let pa: Vec<(f64, Option<f64>)> = a.curvature.iter().copied().zip(a.torsion.iter().copied()).collect();
    let pb: Vec<(f64, Option<f64>)> = b.curvature.iter().copied().zip(b.torsion.iter().copied()).collect();
    CostOracle::pairwise(pa, pb, move |x, y| {
        let dk = x.0 - y.0;
        let tau = match (x.1, y.1) {
            (Some(s), Some(t)) => lambda_tau * (s - t) * (s - t),
            _ => 0.0,
        };
        dk * dk + tau
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::uniform_times;
    use std::f64::consts::TAU;

    fn helix(a: f64, b: f64, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|k| {
                let th = TAU * k as f64 / (n - 1) as f64;
                Vec3::new(a * th.cos(), a * th.sin(), b * th)
            })
            .collect()
    }

    fn interior_error(f: &FrenetData, kappa: f64, tau: f64) -> (f64, f64) {
        let n = f.len();
        let ek = (2..n - 2).map(|i| (f.curvature[i] - kappa).abs()).fold(0.0, f64::max);
        let et = (2..n - 2)
            .map(|i| (f.torsion[i].unwrap() - tau).abs())
            .fold(0.0, f64::max);
        (ek, et)
    }

    #[test]
    fn helix_converges() {
        let (a, b) = (1.5, 0.4);
        let kappa = a / (a * a + b * b);
        let tau = b / (a * a + b * b);
        let coarse = frenet_frames(&helix(a, b, 200), &uniform_times(200)).unwrap();
        let fine = frenet_frames(&helix(a, b, 400), &uniform_times(400)).unwrap();
        let (ek1, et1) = interior_error(&coarse, kappa, tau);
        let (ek2, et2) = interior_error(&fine, kappa, tau);
        assert!(ek1 < 0.01 * kappa && et1 < 0.01 * tau, "{ek1} {et1}");
        assert!(ek2 < ek1 / 3.0 && et2 < et1 / 3.0, "{ek1}->{ek2} {et1}->{et2}");
    }

    #[test]
    fn straight_line_has_no_torsion() {
        let c: Vec<Vec3> = (0..10).map(|k| Vec3::new(k as f64, 2.0 * k as f64, 0.5)).collect();
        let f = frenet_frames(&c, &uniform_times(10)).unwrap();
        assert!(f.curvature.iter().all(|&k| k.abs() < 1e-9));
        assert!(!f.torsion_defined);
        for m in &f.frames {
            assert!((m.transpose() * m - Matrix3::identity()).amax() < 1e-9);
            assert!((m.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn frames_are_rotations() {
        let f = frenet_frames(&helix(1.0, 0.3, 50), &uniform_times(50)).unwrap();
        for m in &f.frames {
            assert!((m.transpose() * m - Matrix3::identity()).amax() < 1e-6);
            assert!((m.determinant() - 1.0).abs() < 1e-6);
        }
        assert_eq!(f.times.first(), Some(&0.0));
        assert!((f.times.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn needs_four_samples() {
        let c = helix(1.0, 0.3, 3);
        assert!(frenet_frames(&c, &uniform_times(3)).is_err());
        let still = vec![Vec3::zeros(); 5];
        assert!(frenet_frames(&still, &uniform_times(5)).is_err());
    }

    #[test]
    fn cost_values() {
        let make = |k: f64| FrenetData {
            frames: vec![Matrix3::identity()],
            curvature: vec![k],
            torsion: vec![Some(0.2)],
            arclength: vec![0.0],
            times: vec![0.0],
            torsion_defined: true,
        };
        assert_eq!(frenet_cost(&make(1.0), &make(3.0), 1.0).cost(0, 0), 4.0);
        let mut flat = make(1.0);
        flat.torsion = vec![None];
        assert_eq!(frenet_cost(&flat, &make(1.0), 5.0).cost(0, 0), 0.0);
    }
}
