//! Skeletal motions on normalized time.
//!
//! A [`Motion`] is a sequence of poses (one 3-vector per joint) sampled at
//! strictly increasing times in `[0, 1]`, with the vertical axis along `z`.

mod io;
mod synth;

use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::warping::Diffeomorphism;

pub use io::{load_motion, write_motion, MotionFormat};
pub use synth::{synth_motion, synthetic_topology, SwingProfile, SyntheticSpec, JOINT_NAMES};

pub type Vec3 = Vector3<f64>;

/// One skeleton pose: a position per joint.
pub type Pose = Vec<Vec3>;

/// Default relative tolerance on bone-length constancy.
pub const DEFAULT_BONE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonTopology {
    joint_names: Vec<String>,
    links: Vec<(usize, usize)>,
    /// Rest length per link, in link order. `None` means "measure on frame 0".
    bone_lengths: Option<Vec<f64>>,
}

impl SkeletonTopology {
    pub fn new(
        joint_names: Vec<String>,
        links: Vec<(usize, usize)>,
        bone_lengths: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = joint_names.len();
        if n == 0 {
            return Err(Error::Topology("no joints".into()));
        }
        for &(j, k) in &links {
            if j >= n || k >= n {
                return Err(Error::Topology(format!("link ({j}, {k}) out of range")));
            }
            if j == k {
                return Err(Error::Topology(format!("self-link on joint {j}")));
            }
        }
        if let Some(lengths) = &bone_lengths {
            if lengths.len() != links.len() {
                return Err(Error::Topology(format!(
                    "{} bone lengths for {} links",
                    lengths.len(),
                    links.len()
                )));
            }
            if lengths.iter().any(|&c| !(c > 0.0)) {
                return Err(Error::Topology("bone lengths must be positive".into()));
            }
        }
        Ok(Self {
            joint_names,
            links,
            bone_lengths,
        })
    }

    /// Joints without links, e.g. when read from CSV.
    pub fn unlinked(joint_names: Vec<String>) -> Result<Self> {
        Self::new(joint_names, Vec::new(), None)
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn bone_lengths(&self) -> Option<&[f64]> {
        self.bone_lengths.as_deref()
    }

    pub fn joint_index(&self, name: &str) -> Result<usize> {
        self.joint_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownJoint(name.to_string()))
    }

    /// Resolves joint names or decimal indices.
    pub fn resolve_joints<S: AsRef<str>>(&self, specs: &[S]) -> Result<Vec<usize>> {
        specs
            .iter()
            .map(|s| {
                let s = s.as_ref();
                match self.joint_index(s) {
                    Ok(i) => Ok(i),
                    Err(e) => match s.parse::<usize>() {
                        Ok(i) if i < self.joint_count() => Ok(i),
                        _ => Err(e),
                    },
                }
            })
            .collect()
    }
}

/// Affinely maps strictly increasing timestamps onto `[0, 1]`.
pub fn normalize_times(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a motion needs at least 2 frames, got {}",
            raw.len()
        )));
    }
    if let Some(k) = raw.iter().position(|t| !t.is_finite()) {
        return Err(Error::Parse(format!("non-finite timestamp at frame {k}")));
    }
    if let Some(k) = raw.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneTimes { frame: k + 1 });
    }
    let (t0, t1) = (raw[0], raw[raw.len() - 1]);
    let span = t1 - t0;
    let mut out: Vec<f64> = raw.iter().map(|&t| (t - t0) / span).collect();
    let last = out.len() - 1;
    out[0] = 0.0;
    out[last] = 1.0;
    if let Some(k) = out.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneTimes { frame: k + 1 });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    topology: Arc<SkeletonTopology>,
    times: Vec<f64>,
    /// Frame-major: `positions[frame * joints + joint]`.
    positions: Vec<Vec3>,
    /// Timestamps as read from a document, kept so they can be written back.
    source_times: Option<Vec<f64>>,
}

impl Motion {
    /// Builds a motion on an already normalized time grid.
    pub fn new(topology: Arc<SkeletonTopology>, times: Vec<f64>, poses: Vec<Pose>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a motion needs at least 2 frames, got {}",
                times.len()
            )));
        }
        if times[0] != 0.0 || times[times.len() - 1] != 1.0 {
            return Err(Error::InvalidInput(
                "normalized times must start at 0 and end at 1".into(),
            ));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneTimes { frame: k + 1 });
        }
        if poses.len() != times.len() {
            return Err(Error::InvalidInput(format!(
                "{} poses for {} timestamps",
                poses.len(),
                times.len()
            )));
        }
        let n = topology.joint_count();
        let mut positions = Vec::with_capacity(n * poses.len());
        for (frame, pose) in poses.into_iter().enumerate() {
            if pose.len() != n {
                return Err(Error::JointCountMismatch {
                    frame,
                    found: pose.len(),
                    expected: n,
                });
            }
            if pose.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
                return Err(Error::Parse(format!("non-finite coordinate in frame {frame}")));
            }
            positions.extend(pose);
        }
        Ok(Self {
            topology,
            times,
            positions,
            source_times: None,
        })
    }

    /// Builds a motion from raw timestamps, normalizing them to `[0, 1]`.
    pub fn from_timestamps(
        topology: Arc<SkeletonTopology>,
        timestamps: Vec<f64>,
        poses: Vec<Pose>,
    ) -> Result<Self> {
        let times = normalize_times(&timestamps)?;
        let mut m = Self::new(topology, times, poses)?;
        m.source_times = Some(timestamps);
        Ok(m)
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    pub fn shared_topology(&self) -> Arc<SkeletonTopology> {
        Arc::clone(&self.topology)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn source_times(&self) -> Option<&[f64]> {
        self.source_times.as_deref()
    }

    pub fn frame_count(&self) -> usize {
        self.times.len()
    }

    pub fn joint_count(&self) -> usize {
        self.topology.joint_count()
    }

    pub fn frame(&self, k: usize) -> &[Vec3] {
        let n = self.joint_count();
        &self.positions[k * n..(k + 1) * n]
    }

    pub fn position(&self, frame: usize, joint: usize) -> Vec3 {
        self.positions[frame * self.joint_count() + joint]
    }

    /// Trajectory of one joint across all frames.
    pub fn trajectory(&self, joint: usize) -> Vec<Vec3> {
        (0..self.frame_count()).map(|k| self.position(k, joint)).collect()
    }

    /// Vertical (`z`) coordinate of one joint across all frames.
    pub fn elevation(&self, joint: usize) -> Vec<f64> {
        (0..self.frame_count()).map(|k| self.position(k, joint).z).collect()
    }

    pub fn poses(&self) -> impl Iterator<Item = &[Vec3]> + '_ {
        self.positions.chunks(self.joint_count())
    }

    /// Pose at normalized time `t` by per-coordinate linear interpolation.
    pub fn pose_at(&self, t: f64) -> Pose {
        let times = &self.times;
        let k = times.len();
        if t <= 0.0 {
            return self.frame(0).to_vec();
        }
        if t >= 1.0 {
            return self.frame(k - 1).to_vec();
        }
        let idx = times.partition_point(|&x| x <= t);
        let lo = idx - 1;
        if times[lo] == t {
            return self.frame(lo).to_vec();
        }
        let s = (t - times[lo]) / (times[idx] - times[lo]);
        self.frame(lo)
            .iter()
            .zip(self.frame(idx))
            .map(|(a, b)| a + (b - a) * s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub max_relative_bone_deviation: f64,
    /// `(frame, link)` pairs exceeding the tolerance.
    pub offending_frames: Vec<(usize, (usize, usize))>,
    pub passed: bool,
}

/// Checks bone-length constancy over every frame and link.
pub fn validate_skeleton(m: &Motion, bone_tolerance: f64) -> Result<ValidationReport> {
    let topo = m.topology();
    if topo.links().is_empty() {
        return Err(Error::Topology("skeleton has no links to validate".into()));
    }
    let rest: Vec<f64> = match topo.bone_lengths() {
        Some(l) => l.to_vec(),
        None => topo
            .links()
            .iter()
            .map(|&(j, k)| (m.position(0, j) - m.position(0, k)).norm())
            .collect(),
    };
    if let Some(l) = topo.links().iter().zip(&rest).find(|(_, &c)| !(c > 0.0)) {
        return Err(Error::Topology(format!("link {:?} has zero rest length", l.0)));
    }
    let mut max_dev = 0.0f64;
    let mut offending = Vec::new();
    for frame in 0..m.frame_count() {
        for (&(j, k), &c) in topo.links().iter().zip(&rest) {
            let len = (m.position(frame, j) - m.position(frame, k)).norm();
            let dev = (len - c).abs() / c;
            max_dev = max_dev.max(dev);
            if dev > bone_tolerance {
                offending.push((frame, (j, k)));
            }
        }
    }
    Ok(ValidationReport {
        max_relative_bone_deviation: max_dev,
        passed: max_dev <= bone_tolerance,
        offending_frames: offending,
    })
}

/// Poses at each query time, linearly interpolated in normalized time.
pub fn resample(m: &Motion, query_times: &[f64]) -> Result<Vec<Pose>> {
    if query_times.is_empty() {
        return Err(Error::InvalidInput("no query times".into()));
    }
    if let Some(t) = query_times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidInput(format!("query time {t} outside [0, 1]")));
    }
    if query_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("query times must be increasing".into()));
    }
    Ok(query_times.iter().map(|&t| m.pose_at(t)).collect())
}

/// Uniform time grid `i / (n − 1)` with exact endpoints.
pub fn uniform_times(n: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    if let Some(last) = t.last_mut() {
        *last = 1.0;
    }
    t
}

/// The reparameterized motion `m ∘ φ` sampled on `out_frames` uniform times.
pub fn apply_warp(m: &Motion, phi: &Diffeomorphism, out_frames: usize) -> Result<Motion> {
    if out_frames < 2 {
        return Err(Error::InvalidInput("out_frames must be at least 2".into()));
    }
    let grid = uniform_times(out_frames);
    let query: Vec<f64> = grid.iter().map(|&u| phi.eval(u)).collect();
    let poses = resample(m, &query)?;
    Motion::new(m.shared_topology(), grid, poses)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rod(frames: &[(f64, [f64; 3], [f64; 3])]) -> Motion {
        let topo = SkeletonTopology::new(vec!["a".into(), "b".into()], vec![(0, 1)], None).unwrap();
        Motion::from_timestamps(
            Arc::new(topo),
            frames.iter().map(|f| f.0).collect(),
            frames
                .iter()
                .map(|f| vec![Vec3::from(f.1), Vec3::from(f.2)])
                .collect(),
        )
        .unwrap()
    }

    fn line(k: usize) -> Motion {
        let topo = Arc::new(SkeletonTopology::unlinked(vec!["p".into()]).unwrap());
        let times = uniform_times(k);
        let poses = times.iter().map(|&t| vec![Vec3::new(t, 0.0, 0.0)]).collect();
        Motion::new(topo, times, poses).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_times(&[10.0, 12.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(normalize_times(&[2.0, 3.0, 6.0]).unwrap(), vec![0.0, 0.25, 1.0]);
        assert!(matches!(
            normalize_times(&[0.0, 5.0, 3.0]),
            Err(Error::NonMonotoneTimes { frame: 2 })
        ));
        let once = normalize_times(&[1.0, 1.7, 2.2, 9.0]).unwrap();
        assert_eq!(normalize_times(&once).unwrap(), once);
    }

    #[test]
    fn topology_rejects_bad_links() {
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(SkeletonTopology::new(names.clone(), vec![(0, 0)], None).is_err());
        assert!(SkeletonTopology::new(names.clone(), vec![(0, 2)], None).is_err());
        assert!(SkeletonTopology::new(names, vec![(0, 1)], Some(vec![0.0])).is_err());
    }

    #[test]
    fn rigid_rod_passes() {
        let m = rod(&[
            (0.0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            (1.0, [2.0, 1.0, 0.0], [3.0, 1.0, 0.0]),
            (2.0, [5.0, 1.0, 3.0], [6.0, 1.0, 3.0]),
        ]);
        let r = validate_skeleton(&m, DEFAULT_BONE_TOLERANCE).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_relative_bone_deviation, 0.0);
    }

    #[test]
    fn stretched_rod() {
        let m = rod(&[
            (0.0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            (1.0, [0.0, 0.0, 0.0], [1.1, 0.0, 0.0]),
        ]);
        let r = validate_skeleton(&m, 0.05).unwrap();
        assert!(!r.passed);
        assert!((r.max_relative_bone_deviation - 0.10).abs() < 1e-12);
        assert_eq!(r.offending_frames, vec![(1, (0, 1))]);
        assert!(validate_skeleton(&m, 0.2).unwrap().passed);
    }

    #[test]
    fn resample_exact_and_linear() {
        let m = line(5);
        let poses = resample(&m, m.times()).unwrap();
        for (k, p) in poses.iter().enumerate() {
            assert_eq!(p.as_slice(), m.frame(k));
        }
        assert_eq!(resample(&m, &[0.5]).unwrap()[0][0], Vec3::new(0.5, 0.0, 0.0));
        assert!(resample(&m, &[]).is_err());
        assert!(resample(&m, &[1.5]).is_err());

        let topo = Arc::new(SkeletonTopology::unlinked(vec!["p".into()]).unwrap());
        let two = Motion::new(
            topo,
            vec![0.0, 1.0],
            vec![vec![Vec3::zeros()], vec![Vec3::new(2.0, 0.0, 0.0)]],
        )
        .unwrap();
        assert_eq!(resample(&two, &[0.25]).unwrap()[0][0].x, 0.5);
    }

    #[test]
    fn warp_by_square() {
        let m = line(201);
        let knots = uniform_times(201);
        let values = knots.iter().map(|t| t * t).collect();
        let phi = Diffeomorphism::new(knots, values).unwrap();
        let w = apply_warp(&m, &phi, 101).unwrap();
        // frame 50 sits at u = 0.5
        assert!((w.position(50, 0).x - 0.25).abs() < 1e-12);

        let same = apply_warp(&m, &Diffeomorphism::identity(), 201).unwrap();
        assert_eq!(same.frame(77), m.frame(77));
    }
}
