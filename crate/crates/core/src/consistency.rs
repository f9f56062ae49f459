//! Consistency check: align a reparameterized copy of a motion back to the
//! motion and measure how far the recovered warp is from the true inverse.
//!
//! The benchmark repeats the check over seeded frame counts and warps for
//! several methods, with plain and keyframe-anchored DP.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{align_motions, AlignOptions, AnchorTolerance, Anchoring, Method};
use crate::dp::AlignmentResult;
use crate::error::{Error, Result};
use crate::motion::{apply_warp, Motion};
use crate::warping::{invert, l1_distance, random_diffeo, DiffeoSpec, Diffeomorphism};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    /// `100 ∫ |ψ − φ⁻¹|`, with `ψ` the recovered alignment warp.
    pub l1_error_percent: f64,
    pub ground_truth: Diffeomorphism,
    pub result: AlignmentResult,
}

/// Aligns `apply_warp(m, φ, out_frames)` to `m` for `φ = random_diffeo(spec)`.
pub fn consistency_check(m: &Motion, opts: &AlignOptions, spec: &DiffeoSpec, out_frames: usize) -> Result<CheckOutcome> {
    let phi = random_diffeo(spec)?;
    let warped = apply_warp(m, &phi, out_frames)?;
    finish_check(&warped, m, opts, phi)
}

/// Variant where both the reference and the warped input are resampled from
/// `source` to `frames` frames, so neither is an interpolation of the other.
pub fn consistency_check_resampled(
    source: &Motion,
    opts: &AlignOptions,
    spec: &DiffeoSpec,
    frames: usize,
) -> Result<CheckOutcome> {
    let phi = random_diffeo(spec)?;
    let reference = apply_warp(source, &Diffeomorphism::identity(), frames)?;
    let warped = apply_warp(source, &phi, frames)?;
    finish_check(&warped, &reference, opts, phi)
}

fn finish_check(warped: &Motion, reference: &Motion, opts: &AlignOptions, phi: Diffeomorphism) -> Result<CheckOutcome> {
    let result = align_motions(warped, reference, opts)?;
    let truth = invert(&phi);
    Ok(CheckOutcome {
        l1_error_percent: l1_distance(&result.alignment_warp(), &truth),
        ground_truth: truth,
        result,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub frame_count: usize,
    pub diffeo_seed: u64,
    pub l1_error_percent: Option<f64>,
    #[serde(with = "secs")]
    pub wall_time: Duration,
    pub cells_visited: usize,
    pub anchor_fallback: bool,
    pub error: Option<String>,
}

impl Experiment {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub method: Method,
    pub anchoring: Anchoring,
    pub per_experiment: Vec<Experiment>,
    /// Means over successful experiments; `NaN` (serialized as null) if none.
    pub mean_l1_error_percent: f64,
    #[serde(with = "secs")]
    pub mean_wall_time: Duration,
    pub mean_cells_visited: f64,
}

impl ConsistencyReport {
    fn from_experiments(method: Method, anchoring: Anchoring, per_experiment: Vec<Experiment>) -> Self {
        let ok: Vec<&Experiment> = per_experiment.iter().filter(|e| !e.failed()).collect();
        let n = ok.len() as f64;
        let mean = |f: &dyn Fn(&Experiment) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|e| f(e)).sum::<f64>() / n
            }
        };
        let mean_secs = mean(&|e| e.wall_time.as_secs_f64());
        Self {
            method,
            anchoring,
            mean_l1_error_percent: mean(&|e| e.l1_error_percent.unwrap_or(f64::NAN)),
            mean_wall_time: Duration::try_from_secs_f64(mean_secs).unwrap_or_default(),
            mean_cells_visited: mean(&|e| e.cells_visited as f64),
            per_experiment,
        }
    }

    pub fn failures(&self) -> usize {
        self.per_experiment.iter().filter(|e| e.failed()).count()
    }

    pub fn is_anchored(&self) -> bool {
        self.anchoring.is_anchored()
    }
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Duration::try_from_secs_f64(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub n_experiments: usize,
    /// Inclusive range of frame counts.
    pub frame_range: (usize, usize),
    pub master_seed: u64,
    pub n_basis: usize,
    pub max_slope_ratio: f64,
    pub tolerance: AnchorTolerance,
    /// Joint selections and combination settings shared by every run; the
    /// method and anchoring fields are overridden.
    pub base: AlignOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let spec = DiffeoSpec::default();
        Self {
            n_experiments: 7,
            frame_range: (50, 185),
            master_seed: 0,
            n_basis: spec.n_basis,
            max_slope_ratio: spec.max_slope_ratio,
            tolerance: AnchorTolerance::Fraction(0.05),
            base: AlignOptions::default(),
        }
    }
}

/// Frame counts and warp seeds of every experiment; shared by all methods.
pub fn experiment_plan(config: &BenchConfig) -> Result<Vec<(usize, u64)>> {
    let (lo, hi) = config.frame_range;
    if lo < 4 || hi < lo {
        return Err(Error::InvalidInput(format!("bad frame range ({lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    Ok((0..config.n_experiments)
        .map(|_| (rng.random_range(lo..=hi), rng.random::<u64>()))
        .collect())
}

fn run_one(source: &Motion, opts: &AlignOptions, config: &BenchConfig, frames: usize, seed: u64) -> Experiment {
    let spec = DiffeoSpec {
        seed,
        n_basis: config.n_basis,
        max_slope_ratio: config.max_slope_ratio,
    };
    match consistency_check_resampled(source, opts, &spec, frames) {
        Ok(out) => Experiment {
            frame_count: frames,
            diffeo_seed: seed,
            l1_error_percent: Some(out.l1_error_percent),
            wall_time: out.result.wall_time,
            cells_visited: out.result.cells_visited,
            anchor_fallback: out.result.anchor_fallback,
            error: None,
        },
        Err(e) => Experiment {
            frame_count: frames,
            diffeo_seed: seed,
            l1_error_percent: None,
            wall_time: Duration::ZERO,
            cells_visited: 0,
            anchor_fallback: false,
            error: Some(e.to_string()),
        },
    }
}

/// One report per (method, anchoring): DP and ADP for feature methods, a
/// single report for the keyframe baseline. Experiments run in parallel;
/// reports come back in input order.
pub fn benchmark_suite(source: &Motion, methods: &[Method], config: &BenchConfig) -> Result<Vec<ConsistencyReport>> {
    let plan = experiment_plan(config)?;
    let mut runs: Vec<(Method, Anchoring)> = Vec::new();
    for &method in methods {
        if method == Method::Keyframes {
            runs.push((method, Anchoring::None));
        } else {
            runs.push((method, Anchoring::None));
            runs.push((method, Anchoring::Keyframes(config.tolerance)));
        }
    }
    let cells: Vec<(usize, usize)> = (0..runs.len())
        .flat_map(|r| (0..plan.len()).map(move |e| (r, e)))
        .collect();
    let results: Vec<Experiment> = cells
        .par_iter()
        .map(|&(r, e)| {
            let (method, anchoring) = runs[r];
            let mut opts = config.base.clone();
            opts.method = method;
            opts.anchoring = anchoring;
            let (frames, seed) = plan[e];
            run_one(source, &opts, config, frames, seed)
        })
        .collect();
    let mut results = results.into_iter();
    Ok(runs
        .iter()
        .map(|&(method, anchoring)| {
            let exps: Vec<Experiment> = results.by_ref().take(plan.len()).collect();
            ConsistencyReport::from_experiments(method, anchoring, exps)
        })
        .collect())
}

fn format_duration(d: Duration) -> String {
    let ms = d.as_secs_f64() * 1e3;
    if ms >= 1000.0 {
        format!("{}s {}ms", (ms / 1000.0).floor(), (ms % 1000.0).floor())
    } else {
        format!("{ms:.1}ms")
    }
}

fn format_error(r: &ConsistencyReport) -> String {
    let base = if r.mean_l1_error_percent.is_nan() {
        "n/a".to_string()
    } else {
        format!("{:.2}%", r.mean_l1_error_percent)
    };
    match r.failures() {
        0 => base,
        f => format!("{base} ({f} failed)"),
    }
}

/// Markdown table with DP and ADP side by side, one row per method, followed
/// by the keyframe baseline when present. `with_timing = false` blanks the
/// wall-time columns so the output is reproducible.
pub fn markdown_table(reports: &[ConsistencyReport], with_timing: bool) -> String {
    let time = |r: &ConsistencyReport| {
        if with_timing {
            format_duration(r.mean_wall_time)
        } else {
            "-".to_string()
        }
    };
    let mut out = String::from(
        "| L1 error | Error with DP | Time with DP | Cells with DP | Error with ADP | Time with ADP | Cells with ADP |\n\
         |---|---:|---:|---:|---:|---:|---:|\n",
    );
    let mut seen = Vec::new();
    for r in reports {
        if r.method == Method::Keyframes || seen.contains(&r.method) {
            continue;
        }
        seen.push(r.method);
        let dp = reports.iter().find(|x| x.method == r.method && !x.is_anchored());
        let adp = reports.iter().find(|x| x.method == r.method && x.is_anchored());
        let cols = |x: Option<&ConsistencyReport>| match x {
            Some(x) => format!("{} | {} | {:.0}", format_error(x), time(x), x.mean_cells_visited),
            None => "- | - | -".to_string(),
        };
        out.push_str(&format!("| {} | {} | {} |\n", r.method.label(), cols(dp), cols(adp)));
    }
    if let Some(b) = reports.iter().find(|r| r.method == Method::Keyframes) {
        out.push_str(&format!(
            "\nBaseline: L1 error of keyframe alignment = {}, computational time = {}\n",
            format_error(b),
            time(b)
        ));
    }
    out
}
