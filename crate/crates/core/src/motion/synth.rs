//! Deterministic forehand-like arm swing on a rigid 12-joint skeleton.
//!
//! Every joint is placed by forward kinematics from unit directions scaled by
//! fixed bone lengths, so noiseless motions keep their bone lengths exactly.
//! The racket arm's elevation follows one high–low–high cycle while the swing
//! azimuth advances monotonically.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{uniform_times, Motion, Pose, SkeletonTopology, Vec3};
use crate::error::{Error, Result};

pub const JOINT_NAMES: [&str; 12] = [
    "Spine low",
    "Spine high",
    "Hip left",
    "Hip right",
    "Knee left",
    "Knee right",
    "Ankle left",
    "Ankle right",
    "Shoulder right",
    "Elbow right",
    "Racket hand",
    "Racket top",
];

const LINKS: [(usize, usize); 11] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (2, 4),
    (3, 5),
    (4, 6),
    (5, 7),
    (1, 8),
    (8, 9),
    (9, 10),
    (10, 11),
];

const SPINE: f64 = 0.5;
const HIP_HALF_WIDTH: f64 = 0.12;
const THIGH: f64 = 0.45;
const SHIN: f64 = 0.45;
const SHOULDER_OFFSET: f64 = 0.2;
const UPPER_ARM: f64 = 0.3;
const FOREARM: f64 = 0.28;
const RACKET: f64 = 0.65;

const BONE_LENGTHS: [f64; 11] = [
    SPINE,
    HIP_HALF_WIDTH,
    HIP_HALF_WIDTH,
    THIGH,
    THIGH,
    SHIN,
    SHIN,
    SHOULDER_OFFSET,
    UPPER_ARM,
    FOREARM,
    RACKET,
];

/// Shape of the synthetic swing. Every time-varying term is multiplied by
/// `amplitude`, so `amplitude = 0` yields a motionless pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwingProfile {
    pub amplitude: f64,
    /// Swing of the arm elevation angle (rad).
    pub elevation_amplitude: f64,
    /// Mean arm elevation (rad).
    pub elevation_offset: f64,
    /// Linear drop of elevation over the motion (rad); makes the first high
    /// the global maximum.
    pub elevation_trend: f64,
    /// Normalized time of the low point.
    pub low_time: f64,
    /// Duration of the high–low–high cycle in normalized time.
    pub cycle: f64,
    /// Total horizontal swing of the arm relative to the trunk (rad).
    pub azimuth_span: f64,
    pub azimuth_wobble: f64,
    pub trunk_yaw_span: f64,
    pub knee_amplitude: f64,
    pub wrist_amplitude: f64,
    /// Phase offset (rad) of the secondary oscillations (trunk lean, knees, wrist).
    pub phase: f64,
}

impl Default for SwingProfile {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            elevation_amplitude: 0.9,
            elevation_offset: 0.2,
            elevation_trend: 0.15,
            low_time: 0.5,
            cycle: 0.6,
            azimuth_span: 2.4,
            azimuth_wobble: 0.3,
            trunk_yaw_span: 1.0,
            knee_amplitude: 0.25,
            wrist_amplitude: 0.35,
            phase: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub frame_count: usize,
    pub swing: SwingProfile,
    /// Standard deviation (m) of Gaussian noise added to every coordinate.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            frame_count: 100,
            swing: SwingProfile::default(),
            noise_scale: 0.0,
            seed: 0,
        }
    }
}

fn rot_z(angle: f64, v: Vec3) -> Vec3 {
    let (s, c) = angle.sin_cos();
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

fn direction(azimuth: f64, elevation: f64) -> Vec3 {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

impl SwingProfile {
    fn elevation(&self, t: f64) -> f64 {
        let a = self.amplitude;
        let first_high = self.low_time - self.cycle / 2.0;
        self.elevation_offset + a * self.elevation_amplitude * (TAU * (t - first_high) / self.cycle).cos()
            - a * self.elevation_trend * t
    }

    fn pose(&self, t: f64) -> Pose {
        let a = self.amplitude;
        let w = TAU * t;
        // monotone: d/dt (t − sin(2πt)/(4π)) ≥ 1/2
        let progress = t - (w.sin()) / (2.0 * TAU);
        let yaw = a * self.trunk_yaw_span * (progress - 0.5);
        let hip_yaw = 0.5 * yaw;

        let pelvis = Vec3::new(
            a * 0.15 * t,
            a * 0.03 * w.sin(),
            0.95 - a * 0.02 * (1.0 - w.cos()),
        );
        let lean = 0.1 + a * 0.15 * (w + self.phase).sin();
        let spine_high = pelvis + SPINE * rot_z(yaw, Vec3::new(lean.sin(), 0.0, lean.cos()));

        let hip_l = pelvis + HIP_HALF_WIDTH * rot_z(hip_yaw, Vec3::new(0.0, 1.0, 0.0));
        let hip_r = pelvis + HIP_HALF_WIDTH * rot_z(hip_yaw, Vec3::new(0.0, -1.0, 0.0));
        let bend_l = 0.15 + a * self.knee_amplitude * 0.5 * (1.0 - (w + self.phase).cos());
        let bend_r = 0.15 + a * self.knee_amplitude * 0.5 * (1.0 - w.cos());
        let thigh = |bend: f64| rot_z(hip_yaw, Vec3::new(bend.sin(), 0.0, -bend.cos()));
        let shin = |bend: f64| rot_z(hip_yaw, Vec3::new(-(0.8 * bend).sin(), 0.0, -(0.8 * bend).cos()));
        let knee_l = hip_l + THIGH * thigh(bend_l);
        let knee_r = hip_r + THIGH * thigh(bend_r);
        let ankle_l = knee_l + SHIN * shin(bend_l);
        let ankle_r = knee_r + SHIN * shin(bend_r);

        let shoulder = spine_high + SHOULDER_OFFSET * rot_z(yaw, Vec3::new(0.0, -1.0, 0.0));
        let azimuth = yaw - a * self.azimuth_span / 2.0
            + a * self.azimuth_span * t
            + a * self.azimuth_wobble * w.sin();
        let elevation = self.elevation(t);
        let elbow = shoulder + UPPER_ARM * direction(azimuth, elevation);
        let flex = -0.2 + a * 0.2 * (w + self.phase).sin();
        let hand = elbow + FOREARM * direction(azimuth + 0.3, elevation + flex);
        let wrist = a * self.wrist_amplitude * (w + 2.0 * self.phase).sin();
        let top = hand + RACKET * direction(azimuth + 0.5 + wrist, elevation + 0.5 * flex);

        vec![
            pelvis, spine_high, hip_l, hip_r, knee_l, knee_r, ankle_l, ankle_r, shoulder, elbow,
            hand, top,
        ]
    }
}

/// Topology shared by all synthetic motions, with exact rest lengths.
pub fn synthetic_topology() -> SkeletonTopology {
    SkeletonTopology::new(
        JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
        LINKS.to_vec(),
        Some(BONE_LENGTHS.to_vec()),
    )
    .expect("static topology is valid")
}

pub fn synth_motion(spec: &SyntheticSpec) -> Result<Motion> {
    if spec.frame_count < 2 {
        return Err(Error::InvalidInput("frame_count must be at least 2".into()));
    }
    if !(spec.noise_scale >= 0.0) {
        return Err(Error::InvalidInput("noise_scale must be nonnegative".into()));
    }
    if !(spec.swing.cycle > 0.0) {
        return Err(Error::InvalidInput("swing cycle must be positive".into()));
    }
    let times = uniform_times(spec.frame_count);
    let mut poses: Vec<Pose> = times.iter().map(|&t| spec.swing.pose(t)).collect();
    if spec.noise_scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_scale)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        for p in poses.iter_mut().flatten() {
            for c in p.iter_mut() {
                *c += normal.sample(&mut rng);
            }
        }
    }
    Motion::new(Arc::new(synthetic_topology()), times, poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::validate_skeleton;

    #[test]
    fn noiseless_is_rigid() {
        let m = synth_motion(&SyntheticSpec::default()).unwrap();
        let r = validate_skeleton(&m, 1e-12).unwrap();
        assert!(r.passed, "deviation {}", r.max_relative_bone_deviation);
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec {
            noise_scale: 0.01,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(synth_motion(&spec).unwrap(), synth_motion(&spec).unwrap());
        let other = SyntheticSpec { seed: 10, ..spec };
        assert_ne!(synth_motion(&spec).unwrap(), synth_motion(&other).unwrap());
        let noiseless = SyntheticSpec::default();
        assert_eq!(
            synth_motion(&noiseless).unwrap(),
            synth_motion(&SyntheticSpec { seed: 77, ..noiseless }).unwrap()
        );
    }

    #[test]
    fn zero_amplitude_is_constant() {
        let spec = SyntheticSpec {
            swing: SwingProfile {
                amplitude: 0.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let m = synth_motion(&spec).unwrap();
        for k in 1..m.frame_count() {
            assert_eq!(m.frame(k), m.frame(0));
        }
    }

    #[test]
    fn elevation_has_high_low_high() {
        let m = synth_motion(&SyntheticSpec::default()).unwrap();
        for joint in [10, 11] {
            let z = m.elevation(joint);
            let first_max = argmax(&z, 0);
            let min = argmin(&z, first_max + 1);
            let second_max = argmax(&z, min + 1);
            assert!(first_max < min && min < second_max, "{first_max} {min} {second_max}");
            assert!(second_max < z.len() - 1);
            assert!(first_max > 0);
        }
    }

    fn argmax(z: &[f64], from: usize) -> usize {
        (from..z.len()).fold(from, |b, k| if z[k] > z[b] { k } else { b })
    }

    fn argmin(z: &[f64], from: usize) -> usize {
        (from..z.len()).fold(from, |b, k| if z[k] < z[b] { k } else { b })
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = SyntheticSpec {
            frame_count: 1,
            ..Default::default()
        };
        assert!(synth_motion(&spec).is_err());
    }
}
