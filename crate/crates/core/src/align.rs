//! Alignment of two motions with one of the feature costs, optionally
//! anchored at elevation keyframes.
//!
//! Per-joint methods solve one grid per joint in parallel and combine the
//! resulting warps; the Gram method solves a single grid for the whole pose.
//! Feature samples sit at known normalized times (frame times, midpoints, or
//! the times at which arclength samples are reached), and every DP path is
//! turned into a warp on those times.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{
    energy_landscape, solve_anchored, solve_dtw, tolerance_from_fraction, AlignmentResult, Anchor, CostOracle,
    DpSolution, Landscape,
};
use crate::error::{Error, Result};
use crate::features::{
    frenet_cost, frenet_frames, gram_cost, gram_sequence, midpoints, sphere_curve, sphere_srv_cost, srv_cost, srvt_r3,
};
use crate::keyframes::coarse_align;
use crate::motion::Motion;
use crate::warping::{combine_warps, path_from_warp_on, warp_from_path_on, CombineMethod, Diffeomorphism};

pub const DEFAULT_ARM_JOINTS: [&str; 2] = ["Racket hand", "Racket top"];

pub const DEFAULT_GRAM_JOINTS: [&str; 10] = [
    "Ankle left",
    "Ankle right",
    "Hip left",
    "Hip right",
    "Knee left",
    "Knee right",
    "Spine low",
    "Spine high",
    "Racket hand",
    "Racket top",
];

pub const DEFAULT_CENTER_JOINTS: [&str; 2] = ["Spine low", "Spine high"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SrvtR3,
    Gram,
    Frenet,
    SphereSrv,
    /// Coarse keyframe alignment alone, without DP.
    Keyframes,
}

impl Method {
    pub const DP_METHODS: [Method; 4] = [Method::SrvtR3, Method::Gram, Method::Frenet, Method::SphereSrv];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SrvtR3 => "srvt_r3",
            Method::Gram => "gram",
            Method::Frenet => "frenet",
            Method::SphereSrv => "sphere_srv",
            Method::Keyframes => "keyframes",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::SrvtR3 => "SRVT in R3",
            Method::Gram => "Gram matrices",
            Method::Frenet => "Moving frames",
            Method::SphereSrv => "SRVT on S2",
            Method::Keyframes => "Keyframes",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "srvt_r3" | "srvt" | "srv" => Ok(Method::SrvtR3),
            "gram" => Ok(Method::Gram),
            "frenet" | "moving_frames" => Ok(Method::Frenet),
            "sphere_srv" | "sphere" => Ok(Method::SphereSrv),
            "keyframes" | "keyframe" => Ok(Method::Keyframes),
            other => Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorTolerance {
    /// Fraction of the larger grid dimension, rounded up.
    Fraction(f64),
    Frames(usize),
}

impl AnchorTolerance {
    pub fn frames(&self, rows: usize, cols: usize) -> usize {
        match *self {
            AnchorTolerance::Fraction(f) => tolerance_from_fraction(f, rows.max(cols)),
            AnchorTolerance::Frames(w) => w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchoring {
    None,
    Keyframes(AnchorTolerance),
}

impl Anchoring {
    pub fn is_anchored(&self) -> bool {
        matches!(self, Anchoring::Keyframes(_))
    }
}

/// Joint selections are names or decimal indices, resolved against the
/// motions' topology; `None` picks the defaults above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignOptions {
    pub method: Method,
    pub joints: Option<Vec<String>>,
    pub combine: CombineMethod,
    /// Per-joint weights for the weighted mean; uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub anchoring: Anchoring,
    pub arm_joints: Option<Vec<String>>,
    pub center_joints: Option<Vec<String>>,
    pub lambda_tau: f64,
    /// Moving-average window applied to elevations before keyframe detection.
    pub smoothing_window: usize,
}

impl AlignOptions {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            joints: None,
            combine: CombineMethod::WeightedMean,
            weights: None,
            anchoring: Anchoring::None,
            arm_joints: None,
            center_joints: None,
            lambda_tau: 1.0,
            smoothing_window: 1,
        }
    }

    pub fn with_anchoring(mut self, anchoring: Anchoring) -> Self {
        self.anchoring = anchoring;
        self
    }
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self::new(Method::SrvtR3)
    }
}

fn resolve(m: &Motion, given: &Option<Vec<String>>, default: &[&str]) -> Result<Vec<usize>> {
    match given {
        Some(specs) => m.topology().resolve_joints(specs),
        None => m.topology().resolve_joints(default),
    }
}

/// One DP grid with the normalized times of its rows and columns.
struct Grid {
    cost: CostOracle<'static>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn build_grid(m1: &Motion, m2: &Motion, opts: &AlignOptions, joint: usize, center: &[usize]) -> Result<Grid> {
    match opts.method {
        Method::SrvtR3 => {
            let a = srvt_r3(&m1.trajectory(joint), m1.times())?;
            let b = srvt_r3(&m2.trajectory(joint), m2.times())?;
            Ok(Grid {
                cost: srv_cost(&a, &b),
                xs: a.times,
                ys: b.times,
            })
        }
        Method::Frenet => {
            let a = frenet_frames(&m1.trajectory(joint), m1.times())?;
            let b = frenet_frames(&m2.trajectory(joint), m2.times())?;
            Ok(Grid {
                cost: frenet_cost(&a, &b, opts.lambda_tau),
                xs: a.times,
                ys: b.times,
            })
        }
        Method::SphereSrv => {
            let a = sphere_curve(m1, joint, center)?;
            let b = sphere_curve(m2, joint, center)?;
            Ok(Grid {
                cost: sphere_srv_cost(&a, &b)?,
                xs: midpoints(&a.times),
                ys: midpoints(&b.times),
            })
        }
        Method::Gram | Method::Keyframes => unreachable!("not a per-joint method"),
    }
}

fn nearest(grid: &[f64], t: f64) -> usize {
    let idx = grid.partition_point(|&v| v < t);
    if idx == 0 {
        0
    } else if idx == grid.len() || t - grid[idx - 1] <= grid[idx] - t {
        idx - 1
    } else {
        idx
    }
}

/// Keyframe pairs (frame indices) moved to the nearest samples of a grid.
fn grid_anchors(grid: &Grid, frames: &[(usize, usize)], m1: &Motion, m2: &Motion, tol: AnchorTolerance) -> Vec<Anchor> {
    let w = tol.frames(grid.xs.len(), grid.ys.len());
    frames
        .iter()
        .map(|&(i, j)| Anchor::new(nearest(&grid.xs, m1.times()[i]), nearest(&grid.ys, m2.times()[j]), w))
        .collect()
}

struct Solved {
    warp: Diffeomorphism,
    solution: DpSolution,
    fallback: bool,
}

fn solve_grid(grid: &Grid, anchors: Option<&[Anchor]>) -> Result<Solved> {
    let (n, m) = (grid.xs.len(), grid.ys.len());
    let (solution, fallback) = match anchors {
        None => (solve_dtw(&grid.cost, n, m)?, false),
        Some(anchors) => match solve_anchored(&grid.cost, n, m, anchors) {
            Ok(s) => (s, false),
            Err(Error::InfeasibleAnchors(reason)) => {
                log::warn!("anchors infeasible ({reason}); falling back to plain DP");
                (solve_dtw(&grid.cost, n, m)?, true)
            }
            Err(e) => return Err(e),
        },
    };
    let warp = warp_from_path_on(&solution.path, &grid.xs, &grid.ys)?;
    Ok(Solved {
        warp,
        solution,
        fallback,
    })
}

fn check_compatible(m1: &Motion, m2: &Motion) -> Result<()> {
    if m1.topology().joint_names() != m2.topology().joint_names() {
        return Err(Error::InvalidInput("motions do not share a joint set".into()));
    }
    Ok(())
}

/// Aligns `m1` to `m2`. The returned warp maps normalized time of `m1` to
/// that of `m2`, so for `m1 = m2 ∘ φ` it approximates `φ`.
pub fn align_motions(m1: &Motion, m2: &Motion, opts: &AlignOptions) -> Result<AlignmentResult> {
    let started = Instant::now();
    check_compatible(m1, m2)?;

    let anchor_frames = match (opts.anchoring, opts.method) {
        (_, Method::Keyframes) | (Anchoring::Keyframes(_), _) => {
            let arm = resolve(m1, &opts.arm_joints, &DEFAULT_ARM_JOINTS)?;
            Some(coarse_align(m1, m2, &arm, opts.smoothing_window)?)
        }
        (Anchoring::None, _) => None,
    };

    if opts.method == Method::Keyframes {
        let coarse = anchor_frames.expect("computed above");
        let path = path_from_warp_on(&coarse.warp, m1.times(), m2.times())?;
        return Ok(AlignmentResult {
            path,
            warp: coarse.warp,
            total_cost: 0.0,
            cells_visited: 0,
            wall_time: started.elapsed(),
            anchor_fallback: false,
        });
    }

    let anchor_pairs = anchor_frames.as_ref().map(|c| c.anchor_pairs());
    let tolerance = match opts.anchoring {
        Anchoring::Keyframes(t) => Some(t),
        Anchoring::None => None,
    };
    let solve_with = |grid: &Grid| -> Result<Solved> {
        match (&anchor_pairs, tolerance) {
            (Some(pairs), Some(tol)) => {
                let anchors = grid_anchors(grid, pairs, m1, m2, tol);
                solve_grid(grid, Some(&anchors))
            }
            _ => solve_grid(grid, None),
        }
    };

    let solved: Vec<Solved> = if opts.method == Method::Gram {
        let active = resolve(m1, &opts.joints, &DEFAULT_GRAM_JOINTS)?;
        let a = gram_sequence(m1, &active)?;
        let b = gram_sequence(m2, &active)?;
        let grid = Grid {
            cost: gram_cost(&a, &b)?,
            xs: m1.times().to_vec(),
            ys: m2.times().to_vec(),
        };
        vec![solve_with(&grid)?]
    } else {
        let joints = resolve(m1, &opts.joints, &DEFAULT_ARM_JOINTS)?;
        let center = if opts.method == Method::SphereSrv {
            resolve(m1, &opts.center_joints, &DEFAULT_CENTER_JOINTS)?
        } else {
            Vec::new()
        };
        joints
            .par_iter()
            .map(|&j| solve_with(&build_grid(m1, m2, opts, j, &center)?))
            .collect::<Result<_>>()?
    };

    let warps: Vec<Diffeomorphism> = solved.iter().map(|s| s.warp.clone()).collect();
    let warp = if warps.len() == 1 {
        warps[0].clone()
    } else {
        combine_warps(&warps, opts.weights.as_deref(), opts.combine)?
    };
    let path = path_from_warp_on(&warp, m1.times(), m2.times())?;
    Ok(AlignmentResult {
        path,
        warp,
        total_cost: solved.iter().map(|s| s.solution.total_cost).sum(),
        cells_visited: solved.iter().map(|s| s.solution.cells_visited).sum(),
        wall_time: started.elapsed(),
        anchor_fallback: solved.iter().any(|s| s.fallback),
    })
}

/// Local-cost landscape of one grid (the whole pose for Gram, otherwise
/// `joint` or the first selected joint) and the optimal path through it.
/// Anchoring restricts the landscape exactly as in [`align_motions`].
pub fn alignment_landscape(
    m1: &Motion,
    m2: &Motion,
    opts: &AlignOptions,
    joint: Option<usize>,
) -> Result<(Landscape, DpSolution)> {
    check_compatible(m1, m2)?;
    let grid = match opts.method {
        Method::Keyframes => {
            return Err(Error::InvalidInput("keyframe alignment has no DP landscape".into()))
        }
        Method::Gram => {
            let active = resolve(m1, &opts.joints, &DEFAULT_GRAM_JOINTS)?;
            Grid {
                cost: gram_cost(&gram_sequence(m1, &active)?, &gram_sequence(m2, &active)?)?,
                xs: m1.times().to_vec(),
                ys: m2.times().to_vec(),
            }
        }
        _ => {
            let joint = match joint {
                Some(j) => j,
                None => resolve(m1, &opts.joints, &DEFAULT_ARM_JOINTS)?[0],
            };
            let center = resolve(m1, &opts.center_joints, &DEFAULT_CENTER_JOINTS).unwrap_or_default();
            build_grid(m1, m2, opts, joint, &center)?
        }
    };
    let anchors = match opts.anchoring {
        Anchoring::None => Vec::new(),
        Anchoring::Keyframes(tol) => {
            let arm = resolve(m1, &opts.arm_joints, &DEFAULT_ARM_JOINTS)?;
            let coarse = coarse_align(m1, m2, &arm, opts.smoothing_window)?;
            grid_anchors(&grid, &coarse.anchor_pairs(), m1, m2, tol)
        }
    };
    energy_landscape(&grid.cost, grid.xs.len(), grid.ys.len(), &anchors)
}

/// Per-sample feature values of one motion: `(time, values)` rows for each
/// selected joint (a single entry named `pose` for Gram). Columns are
/// `q` for the square-root velocity methods, `κ, τ, s` for moving frames
/// (τ is `NaN` where undefined) and the flattened Gram matrix.
pub fn feature_rows(m: &Motion, opts: &AlignOptions) -> Result<Vec<(String, Vec<(f64, Vec<f64>)>)>> {
    let names = m.topology().joint_names();
    match opts.method {
        Method::Keyframes => Err(Error::InvalidInput("keyframe alignment has no features".into())),
        Method::Gram => {
            let active = resolve(m, &opts.joints, &DEFAULT_GRAM_JOINTS)?;
            let g = gram_sequence(m, &active)?;
            let rows = m
                .times()
                .iter()
                .zip(&g.matrices)
                .map(|(&t, g)| (t, g.iter().copied().collect()))
                .collect();
            Ok(vec![("pose".to_string(), rows)])
        }
        method => {
            let joints = resolve(m, &opts.joints, &DEFAULT_ARM_JOINTS)?;
            let center = if method == Method::SphereSrv {
                resolve(m, &opts.center_joints, &DEFAULT_CENTER_JOINTS)?
            } else {
                Vec::new()
            };
            joints
                .iter()
                .map(|&j| {
                    let rows: Vec<(f64, Vec<f64>)> = match method {
                        Method::SrvtR3 => {
                            let c = srvt_r3(&m.trajectory(j), m.times())?;
                            c.times.iter().zip(&c.q).map(|(&t, q)| (t, q.iter().copied().collect())).collect()
                        }
                        Method::Frenet => {
                            let f = frenet_frames(&m.trajectory(j), m.times())?;
                            (0..f.len())
                                .map(|i| {
                                    let tau = f.torsion[i].unwrap_or(f64::NAN);
                                    (f.times[i], vec![f.curvature[i], tau, f.arclength[i]])
                                })
                                .collect()
                        }
                        _ => {
                            let c = sphere_curve(m, j, &center)?;
                            let q = crate::features::sphere_srv(&c)?;
                            midpoints(&c.times)
                                .into_iter()
                                .zip(&q)
                                .map(|(t, q)| (t, q.iter().copied().collect()))
                                .collect()
                        }
                    };
                    Ok((names[j].clone(), rows))
                })
                .collect()
        }
    }
}
