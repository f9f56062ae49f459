//! Elevation keyframes and the coarse piecewise-linear alignment they induce.
//!
//! Three keyframes are read off a joint's vertical coordinate: the first
//! maximum, the first minimum after it, and the first maximum after that.
//! Each search starts after the previous keyframe and stops early enough to
//! leave a frame for every keyframe still to come, so the triple is always
//! ordered.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::Motion;
use crate::warping::{combine_warps, CombineMethod, Diffeomorphism, FrameCorrespondence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyframes {
    pub high1: usize,
    pub low: usize,
    pub high2: usize,
}

impl Keyframes {
    pub fn as_array(&self) -> [usize; 3] {
        [self.high1, self.low, self.high2]
    }
}

fn first_argmax(z: &[f64], range: std::ops::Range<usize>) -> usize {
    range.reduce(|best, k| if z[k] > z[best] { k } else { best }).expect("non-empty range")
}

fn first_argmin(z: &[f64], range: std::ops::Range<usize>) -> usize {
    range.reduce(|best, k| if z[k] < z[best] { k } else { best }).expect("non-empty range")
}

pub fn detect_keyframes(z: &[f64]) -> Result<Keyframes> {
    if z.len() < 3 {
        return Err(Error::Keyframes(format!("need at least 3 frames, got {}", z.len())));
    }
    if z.iter().all(|&v| v == z[0]) {
        return Err(Error::Keyframes("elevation signal is constant".into()));
    }
    let k = z.len();
    let high1 = first_argmax(z, 0..k - 2);
    let low = first_argmin(z, high1 + 1..k - 1);
    let high2 = first_argmax(z, low + 1..k);
    if !(z[low] < z[high1] && z[low] < z[high2]) {
        return Err(Error::Keyframes(format!(
            "no high-low-high pattern (frames {high1}, {low}, {high2})"
        )));
    }
    Ok(Keyframes { high1, low, high2 })
}

/// Centered moving average; `window <= 1` returns the signal unchanged.
/// The window shrinks symmetrically near the ends.
pub fn smooth(z: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return z.to_vec();
    }
    let half = window / 2;
    let n = z.len();
    (0..n)
        .map(|k| {
            let r = half.min(k).min(n - 1 - k);
            let slice = &z[k - r..=k + r];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Appends the lattice points from `a` (exclusive) to `b` (inclusive) that
/// follow the straight segment between them.
pub(crate) fn lattice_segment(a: (usize, usize), b: (usize, usize), out: &mut Vec<(usize, usize)>) {
    debug_assert!(b.0 >= a.0 && b.1 >= a.1);
    let di = b.0 - a.0;
    let dj = b.1 - a.1;
    if di == 0 {
        out.extend((a.1 + 1..=b.1).map(|j| (a.0, j)));
        return;
    }
    let target = |i: usize| -> usize {
        let frac = (i - a.0) as f64 / di as f64;
        a.1 + (frac * dj as f64).round() as usize
    };
    let mut prev = a.1;
    for i in a.0..b.0 {
        let next = target(i + 1).max(prev);
        if next == prev {
            out.push((i + 1, prev));
            continue;
        }
        let climb = next - prev - 1;
        let before = climb / 2;
        out.extend((prev + 1..=prev + before).map(|j| (i, j)));
        out.push((i + 1, prev + before + 1));
        out.extend((prev + before + 2..=next).map(|j| (i + 1, j)));
        prev = next;
    }
}

fn anchor_chain(k1: &Keyframes, k2: &Keyframes, n1: usize, n2: usize) -> Result<Vec<(usize, usize)>> {
    for (k, n) in [(k1, n1), (k2, n2)] {
        if !(k.high1 < k.low && k.low < k.high2 && k.high2 < n) {
            return Err(Error::Keyframes(format!("keyframes {k:?} invalid for {n} frames")));
        }
    }
    Ok(vec![
        (0, 0),
        (k1.high1, k2.high1),
        (k1.low, k2.low),
        (k1.high2, k2.high2),
        (n1 - 1, n2 - 1),
    ])
}

/// Lattice path through `(0,0)`, the three keyframe pairs and the last
/// frames, following straight segments in between.
pub fn keyframe_correspondence(
    k1: &Keyframes,
    k2: &Keyframes,
    n1: usize,
    n2: usize,
) -> Result<FrameCorrespondence> {
    let chain = anchor_chain(k1, k2, n1, n2)?;
    let mut pairs = vec![(0, 0)];
    for w in chain.windows(2) {
        lattice_segment(w[0], w[1], &mut pairs);
    }
    FrameCorrespondence::new(pairs)
}

/// Piecewise-linear warp through the normalized keyframe pairs. Pairs that
/// would break strict monotonicity (e.g. a keyframe on the first frame of one
/// motion only) are dropped.
pub fn keyframe_warp(k1: &Keyframes, k2: &Keyframes, n1: usize, n2: usize) -> Result<Diffeomorphism> {
    let chain = anchor_chain(k1, k2, n1, n2)?;
    let mut knots = vec![0.0];
    let mut values = vec![0.0];
    for &(i, j) in &chain[1..chain.len() - 1] {
        let x = i as f64 / (n1 - 1) as f64;
        let y = j as f64 / (n2 - 1) as f64;
        if x > *knots.last().unwrap() && y > *values.last().unwrap() && x < 1.0 && y < 1.0 {
            knots.push(x);
            values.push(y);
        }
    }
    knots.push(1.0);
    values.push(1.0);
    Diffeomorphism::new(knots, values)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointKeyframes {
    pub joint: usize,
    pub first: Keyframes,
    pub second: Keyframes,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoarseAlignment {
    /// Maps normalized time of the first motion to the second.
    pub warp: Diffeomorphism,
    pub joints: Vec<JointKeyframes>,
}

impl CoarseAlignment {
    /// Keyframe pairs averaged over joints and rounded to frames.
    pub fn anchor_pairs(&self) -> [(usize, usize); 3] {
        let n = self.joints.len() as f64;
        let mean = |f: &dyn Fn(&JointKeyframes) -> usize| -> usize {
            (self.joints.iter().map(|j| f(j) as f64).sum::<f64>() / n).round() as usize
        };
        [
            (mean(&|j| j.first.high1), mean(&|j| j.second.high1)),
            (mean(&|j| j.first.low), mean(&|j| j.second.low)),
            (mean(&|j| j.first.high2), mean(&|j| j.second.high2)),
        ]
    }
}

/// Per-joint keyframe warps from `z`, averaged with uniform weights.
pub fn coarse_align(
    m1: &Motion,
    m2: &Motion,
    arm_joints: &[usize],
    smoothing_window: usize,
) -> Result<CoarseAlignment> {
    if arm_joints.is_empty() {
        return Err(Error::InvalidInput("no arm joints selected".into()));
    }
    let (n1, n2) = (m1.frame_count(), m2.frame_count());
    let mut warps = Vec::new();
    let mut joints = Vec::new();
    let mut last_err = None;
    for &joint in arm_joints {
        if joint >= m1.joint_count() || joint >= m2.joint_count() {
            return Err(Error::UnknownJoint(joint.to_string()));
        }
        let detected = detect_keyframes(&smooth(&m1.elevation(joint), smoothing_window))
            .and_then(|a| Ok((a, detect_keyframes(&smooth(&m2.elevation(joint), smoothing_window))?)))
            .and_then(|(a, b)| Ok((a, b, keyframe_warp(&a, &b, n1, n2)?)));
        match detected {
            Ok((first, second, warp)) => {
                warps.push(warp);
                joints.push(JointKeyframes { joint, first, second });
            }
            Err(e) => {
                log::warn!("keyframe detection failed on joint {joint}: {e}");
                last_err = Some(e);
            }
        }
    }
    if warps.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Keyframes("no usable joint".into())));
    }
    let warp = combine_warps(&warps, None, CombineMethod::WeightedMean)?;
    Ok(CoarseAlignment { warp, joints })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_triple() {
        let k = detect_keyframes(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(k, Keyframes { high1: 0, low: 1, high2: 2 });
    }

    #[test]
    fn tie_rule() {
        let k = detect_keyframes(&[0.0, 1.0, 1.0, 0.0, 2.0]).unwrap();
        assert_eq!(k.as_array(), [1, 3, 4]);
    }

    #[test]
    fn sampled_cosine() {
        let z: Vec<f64> = (0..101)
            .map(|i| (std::f64::consts::TAU * i as f64 / 100.0).cos())
            .collect();
        assert_eq!(detect_keyframes(&z).unwrap().as_array(), [0, 50, 100]);
    }

    #[test]
    fn degenerate_signals() {
        assert!(detect_keyframes(&[1.0, 1.0, 1.0]).is_err());
        assert!(detect_keyframes(&[0.0, 1.0]).is_err());
        assert!(detect_keyframes(&[0.0, 1.0, 2.0]).is_err());
        assert!(detect_keyframes(&[3.0, 2.0, 1.0, 0.0]).is_err());
        assert_eq!(detect_keyframes(&[2.0, 0.0, 1.0, -1.0]).unwrap().as_array(), [0, 1, 2]);
    }

    #[test]
    fn affine_invariance_not_negation() {
        let z = [0.2, 0.9, 0.4, -0.3, 0.1, 0.8, 0.5];
        let base = detect_keyframes(&z).unwrap();
        let shifted: Vec<f64> = z.iter().map(|v| 3.0 * v + 7.0).collect();
        assert_eq!(detect_keyframes(&shifted).unwrap(), base);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        assert_ne!(detect_keyframes(&neg).ok(), Some(base));
    }

    #[test]
    fn smoothing_window() {
        let z = [0.0, 3.0, 0.0, 3.0, 0.0];
        assert_eq!(smooth(&z, 1), z.to_vec());
        assert_eq!(smooth(&z, 3), vec![0.0, 1.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn correspondence_identical_is_diagonal() {
        let k = Keyframes { high1: 10, low: 40, high2: 70 };
        let p = keyframe_correspondence(&k, &k, 90, 90).unwrap();
        assert_eq!(p.pairs(), (0..90).map(|i| (i, i)).collect::<Vec<_>>().as_slice());
        assert!(keyframe_warp(&k, &k, 90, 90).unwrap().is_identity());
    }

    #[test]
    fn correspondence_through_anchors() {
        let k1 = Keyframes { high1: 25, low: 50, high2: 75 };
        let k2 = Keyframes { high1: 10, low: 50, high2: 90 };
        let p = keyframe_correspondence(&k1, &k2, 101, 101).unwrap();
        for pair in [(25, 10), (50, 50), (75, 90)] {
            assert!(p.pairs().contains(&pair));
        }
        // pointwise check of the linear piece between (25,10) and (50,50)
        for i in 26..50 {
            let expected = (10.0 + (i - 25) as f64 * 40.0 / 25.0).round() as usize;
            assert!(p.pairs().contains(&(i, expected)), "missing ({i}, {expected})");
        }
        assert_eq!(p.shape(), (101, 101));
    }

    #[test]
    fn lattice_segment_vertical() {
        let mut out = vec![(0, 0)];
        lattice_segment((0, 0), (0, 3), &mut out);
        assert_eq!(out, vec![(0, 0), (0, 1), (0, 2), (0, 3)]);
    }
}
