mod args;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use motion_sync::align::{
    alignment_landscape, align_motions, feature_rows, AlignOptions, AnchorTolerance, Anchoring, Method,
    DEFAULT_ARM_JOINTS,
};
use motion_sync::consistency::{
    benchmark_suite, consistency_check, consistency_check_resampled, markdown_table, BenchConfig,
};
use motion_sync::keyframes::{detect_keyframes, smooth};
use motion_sync::motion::{apply_warp, load_motion, synth_motion, write_motion, Motion, MotionFormat, SwingProfile, SyntheticSpec};
use motion_sync::plot::{correspondence_plot, elevation_plot, landscape_csv, warp_plot, PlotFormat};
use motion_sync::warping::{random_diffeo, CombineMethod, DiffeoSpec, Diffeomorphism, FrameCorrespondence};
use serde_json::json;

use args::*;

/// Frames of the bundled synthetic swing used when no motion is supplied.
const BUNDLED_FRAMES: usize = 1000;

enum Failure {
    Usage(String),
    Data(String),
    Strict(String),
}

impl From<motion_sync::Error> for Failure {
    fn from(e: motion_sync::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

/// Runs the command line and returns the process exit status.
fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init()
        .ok();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    if let Some(n) = std::env::var("MOTION_SYNC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Strict(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Convert(a) => convert(a),
        Command::Keyframes(a) => keyframes(a),
        Command::Align(a) => align(a, cli.strict),
        Command::Reparam(a) => reparam(a, cli.seed),
        Command::Check(a) => check(a, cli.seed, cli.strict),
        Command::Bench(a) => bench(a, cli.seed),
        Command::Synth(a) => synth(a, cli.seed),
        Command::Plot(a) => plot(a),
    }
}

fn motion_format(path: &Path, given: Option<FileFormat>) -> Result<MotionFormat, Failure> {
    match given {
        Some(FileFormat::Json) => Ok(MotionFormat::Json),
        Some(FileFormat::Csv) => Ok(MotionFormat::Csv),
        None => MotionFormat::from_path(path).ok_or_else(|| {
            Failure::Usage(format!("cannot tell the format of {}; pass it explicitly", path.display()))
        }),
    }
}

fn read_motion(path: &Path) -> Result<Motion, Failure> {
    let format = motion_format(path, None)?;
    let bytes = fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(load_motion(&bytes, format)?)
}

fn bundled_motion() -> Result<Motion, Failure> {
    Ok(synth_motion(&SyntheticSpec {
        frame_count: BUNDLED_FRAMES,
        ..Default::default()
    })?)
}

fn write_out(path: Option<&Path>, data: &[u8]) -> Outcome {
    match path {
        Some(p) => fs::write(p, data).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(data)?;
            Ok(())
        }
    }
}

fn read_warp(path: &Path) -> Result<Diffeomorphism, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn align_options(a: &MethodArgs) -> Result<AlignOptions, Failure> {
    let method: Method = a.method.parse().map_err(|e: motion_sync::Error| Failure::Usage(e.to_string()))?;
    if !(a.tolerance_frac >= 0.0) {
        return Err(Failure::Usage("--tolerance-frac must be nonnegative".into()));
    }
    let tolerance = match a.anchor_tolerance {
        Some(w) => AnchorTolerance::Frames(w),
        None => AnchorTolerance::Fraction(a.tolerance_frac),
    };
    Ok(AlignOptions {
        method,
        joints: a.joints.clone(),
        combine: match a.combine {
            CombineArg::WeightedMean => CombineMethod::WeightedMean,
            CombineArg::Median => CombineMethod::Median,
        },
        weights: a.weights.clone(),
        anchoring: match a.anchoring {
            AnchoringArg::None => Anchoring::None,
            AnchoringArg::Keyframes => Anchoring::Keyframes(tolerance),
        },
        arm_joints: a.arm_joints.clone(),
        center_joints: a.center_joints.clone(),
        lambda_tau: a.lambda_tau,
        smoothing_window: a.smoothing,
    })
}

fn warp_spec(a: &WarpArgs, seed: u64) -> DiffeoSpec {
    DiffeoSpec {
        seed,
        n_basis: a.n_basis,
        max_slope_ratio: a.max_slope_ratio,
    }
}

fn fallback_check(fallback: bool, strict: bool) -> Outcome {
    if fallback {
        let msg = "keyframe anchors were infeasible; plain DP was used";
        if strict {
            return Err(Failure::Strict(msg.into()));
        }
        log::warn!("{msg}");
    }
    Ok(())
}

fn convert(a: &ConvertArgs) -> Outcome {
    let from = motion_format(&a.input, a.from)?;
    let to = motion_format(&a.out, a.to)?;
    let bytes = fs::read(&a.input).map_err(|e| Failure::Data(format!("{}: {e}", a.input.display())))?;
    let m = load_motion(&bytes, from)?;
    write_out(Some(&a.out), &write_motion(&m, to)?)
}

fn keyframes(a: &KeyframesArgs) -> Outcome {
    let m = read_motion(&a.input)?;
    let joints = match &a.joints {
        Some(j) => m.topology().resolve_joints(j)?,
        None => m.topology().resolve_joints(&DEFAULT_ARM_JOINTS)?,
    };
    let mut doc = serde_json::Map::new();
    for j in joints {
        let k = detect_keyframes(&smooth(&m.elevation(j), a.smoothing))?;
        doc.insert(m.topology().joint_names()[j].clone(), serde_json::to_value(k)?);
    }
    let mut text = serde_json::to_vec_pretty(&doc)?;
    text.push(b'\n');
    write_out(a.out.as_deref(), &text)
}

fn dump_features(path: &Path, motions: &[(&str, &Motion)], opts: &AlignOptions) -> Outcome {
    let mut out = String::from("motion,joint,sample,t,values\n");
    for (label, m) in motions {
        for (joint, rows) in feature_rows(m, opts)? {
            for (k, (t, v)) in rows.iter().enumerate() {
                let vals: Vec<String> = v.iter().map(f64::to_string).collect();
                let _ = writeln!(out, "{label},\"{joint}\",{k},{t},{}", vals.join(";"));
            }
        }
    }
    write_out(Some(path), out.as_bytes())
}

fn align(a: &AlignArgs, strict: bool) -> Outcome {
    let opts = align_options(&a.method)?;
    let m1 = read_motion(&a.input)?;
    let m2 = read_motion(&a.reference)?;
    if let Some(p) = &a.dump_features {
        dump_features(p, &[("input", &m1), ("reference", &m2)], &opts)?;
    }
    let result = align_motions(&m1, &m2, &opts)?;
    if let Some(p) = &a.result {
        write_out(Some(p), &serde_json::to_vec_pretty(&result)?)?;
    }
    if let Some(p) = &a.path {
        let mut buf = Vec::new();
        result.path.write_csv(&mut buf)?;
        write_out(Some(p), &buf)?;
    }
    let mut warp = serde_json::to_vec_pretty(&result.warp)?;
    warp.push(b'\n');
    write_out(a.out.as_deref(), &warp)?;
    fallback_check(result.anchor_fallback, strict)
}

fn reparam(a: &ReparamArgs, seed: u64) -> Outcome {
    let m = read_motion(&a.input)?;
    let phi = match &a.warp {
        Some(p) => read_warp(p)?,
        None => random_diffeo(&warp_spec(&a.random, seed))?,
    };
    let frames = a.frames.unwrap_or(m.frame_count());
    let out = apply_warp(&m, &phi, frames)?;
    let format = motion_format(&a.out, None)?;
    write_out(Some(&a.out), &write_motion(&out, format)?)?;
    if let Some(p) = &a.warp_out {
        write_out(Some(p), &serde_json::to_vec_pretty(&phi)?)?;
    }
    Ok(())
}

fn check(a: &CheckArgs, seed: u64, strict: bool) -> Outcome {
    let opts = align_options(&a.method)?;
    let spec = warp_spec(&a.random, seed);
    let (source, bundled) = match &a.input {
        Some(p) => (read_motion(p)?, false),
        None => (bundled_motion()?, true),
    };
    let run = |opts: &AlignOptions| {
        if bundled {
            consistency_check_resampled(&source, opts, &spec, a.frames)
        } else {
            consistency_check(&source, opts, &spec, a.frames)
        }
    };
    let out = run(&opts)?;
    let mut doc = json!({
        "method": opts.method,
        "anchoring": opts.anchoring,
        "frames": a.frames,
        "seed": seed,
        "l1_error_percent": out.l1_error_percent,
        "cells_visited": out.result.cells_visited,
        "wall_time": out.result.wall_time.as_secs_f64(),
        "anchor_fallback": out.result.anchor_fallback,
        "ground_truth": out.ground_truth,
        "recovered": out.result.alignment_warp(),
    });
    if opts.anchoring.is_anchored() {
        let plain = run(&AlignOptions {
            anchoring: Anchoring::None,
            ..opts.clone()
        })?;
        doc["unanchored"] = json!({
            "l1_error_percent": plain.l1_error_percent,
            "cells_visited": plain.result.cells_visited,
            "wall_time": plain.result.wall_time.as_secs_f64(),
        });
    }
    let mut text = serde_json::to_vec_pretty(&doc)?;
    text.push(b'\n');
    write_out(a.out.as_deref(), &text)?;
    fallback_check(out.result.anchor_fallback, strict)
}

fn bench(a: &BenchArgs, seed: u64) -> Outcome {
    let methods: Vec<Method> = match &a.methods {
        Some(list) => list
            .iter()
            .map(|s| s.parse().map_err(|e: motion_sync::Error| Failure::Usage(e.to_string())))
            .collect::<Result<_, _>>()?,
        None => {
            let mut all = Method::DP_METHODS.to_vec();
            all.push(Method::Keyframes);
            all
        }
    };
    let source = match &a.input {
        Some(p) => read_motion(p)?,
        None => bundled_motion()?,
    };
    let config = BenchConfig {
        n_experiments: a.experiments,
        frame_range: (a.min_frames, a.max_frames),
        master_seed: seed,
        n_basis: a.random.n_basis,
        max_slope_ratio: a.random.max_slope_ratio,
        tolerance: match a.anchor_tolerance {
            Some(w) => AnchorTolerance::Frames(w),
            None => AnchorTolerance::Fraction(a.tolerance_frac),
        },
        base: AlignOptions::default(),
    };
    let reports = benchmark_suite(&source, &methods, &config)?;
    let table = markdown_table(&reports, !a.no_timing);
    let mut json = serde_json::to_vec_pretty(&reports)?;
    json.push(b'\n');
    if let Some(p) = &a.json {
        write_out(Some(p), &json)?;
    }
    match &a.out {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => write_out(Some(p), &json),
        Some(p) => write_out(Some(p), table.as_bytes()),
        None => write_out(None, table.as_bytes()),
    }
}

fn synth(a: &SynthArgs, seed: u64) -> Outcome {
    let spec = SyntheticSpec {
        frame_count: a.frames,
        swing: SwingProfile {
            amplitude: a.amplitude,
            ..Default::default()
        },
        noise_scale: a.noise,
        seed,
    };
    let m = synth_motion(&spec)?;
    let format = motion_format(&a.out, a.format)?;
    write_out(Some(&a.out), &write_motion(&m, format)?)
}

fn plot(a: &PlotArgs) -> Outcome {
    let format = match a.format {
        PlotFormatArg::Csv => PlotFormat::Csv,
        PlotFormatArg::Svg => PlotFormat::Svg,
    };
    let name = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let text = match a.kind {
        PlotKind::Warp => {
            if a.warp.is_empty() {
                return Err(Failure::Usage("warp plots need at least one --warp".into()));
            }
            let warps: Vec<(String, Diffeomorphism)> =
                a.warp.iter().map(|p| Ok((name(p), read_warp(p)?))).collect::<Result<_, Failure>>()?;
            let refs: Vec<(&str, &Diffeomorphism)> = warps.iter().map(|(n, w)| (n.as_str(), w)).collect();
            warp_plot(&refs)?.render(format)
        }
        PlotKind::Correspondence => {
            if a.path.is_empty() {
                return Err(Failure::Usage("correspondence plots need at least one --path".into()));
            }
            let paths: Vec<(String, FrameCorrespondence)> = a
                .path
                .iter()
                .map(|p| {
                    let f = fs::File::open(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
                    Ok((name(p), FrameCorrespondence::read_csv(f)?))
                })
                .collect::<Result<_, Failure>>()?;
            let refs: Vec<(&str, &FrameCorrespondence)> = paths.iter().map(|(n, p)| (n.as_str(), p)).collect();
            correspondence_plot(&refs)?.render(format)
        }
        PlotKind::Elevation => {
            if a.input.is_empty() {
                return Err(Failure::Usage("elevation plots need at least one --in".into()));
            }
            let motions: Vec<(String, Motion)> =
                a.input.iter().map(|p| Ok((name(p), read_motion(p)?))).collect::<Result<_, Failure>>()?;
            let joints = match &a.method.joints {
                Some(j) => motions[0].1.topology().resolve_joints(j)?,
                None => motions[0].1.topology().resolve_joints(&DEFAULT_ARM_JOINTS)?,
            };
            let refs: Vec<(&str, &Motion)> = motions.iter().map(|(n, m)| (n.as_str(), m)).collect();
            elevation_plot(&refs, &joints)?.render(format)
        }
        PlotKind::Landscape => {
            let (Some(input), Some(reference)) = (a.input.first(), a.reference.as_ref()) else {
                return Err(Failure::Usage("landscape plots need --in and --ref".into()));
            };
            let opts = align_options(&a.method)?;
            let m1 = read_motion(input)?;
            let m2 = read_motion(reference)?;
            let joint = a.joint.as_ref().map(|j| m1.topology().resolve_joints(&[j])).transpose()?.map(|v| v[0]);
            let (landscape, solution) = alignment_landscape(&m1, &m2, &opts, joint)?;
            landscape_csv(&landscape, Some(&solution.path))
        }
    };
    write_out(a.out.as_deref(), text.as_bytes())
}
