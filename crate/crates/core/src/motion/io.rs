use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Motion, Pose, SkeletonTopology, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionFormat {
    Json,
    Csv,
}

impl MotionFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

impl FromStr for MotionFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidInput(format!("unknown motion format `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonFrame {
    t: f64,
    pos: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct JsonMotion {
    joints: Vec<String>,
    #[serde(default)]
    links: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bone_lengths: Option<Vec<f64>>,
    frames: Vec<JsonFrame>,
}

const LINKS_PREFIX: &str = "# links:";
const BONES_PREFIX: &str = "# bone_lengths:";

pub fn load_motion(bytes: &[u8], format: MotionFormat) -> Result<Motion> {
    match format {
        MotionFormat::Json => load_json(bytes),
        MotionFormat::Csv => load_csv(bytes),
    }
}

fn load_json(bytes: &[u8]) -> Result<Motion> {
    let doc: JsonMotion = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let topo = SkeletonTopology::new(
        doc.joints,
        doc.links.iter().map(|l| (l[0], l[1])).collect(),
        doc.bone_lengths,
    )?;
    let (times, poses): (Vec<f64>, Vec<Pose>) = doc
        .frames
        .into_iter()
        .map(|f| (f.t, f.pos.into_iter().map(Vec3::from).collect()))
        .unzip();
    Motion::from_timestamps(Arc::new(topo), times, poses)
}

fn load_csv(bytes: &[u8]) -> Result<Motion> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let mut links = Vec::new();
    let mut bones = None;
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.starts_with('#') {
            break;
        }
        if let Some(rest) = trimmed.strip_prefix(LINKS_PREFIX) {
            let parsed: Vec<[usize; 2]> =
                serde_json::from_str(rest.trim()).map_err(|e| Error::Parse(e.to_string()))?;
            links = parsed.iter().map(|l| (l[0], l[1])).collect();
        } else if let Some(rest) = trimmed.strip_prefix(BONES_PREFIX) {
            bones = Some(serde_json::from_str::<Vec<f64>>(rest.trim()).map_err(|e| Error::Parse(e.to_string()))?);
        }
        body_start += line.len();
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text[body_start..].as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.get(0).map(str::trim) != Some("t") {
        return Err(Error::Parse("CSV header must start with `t`".into()));
    }
    let cols: Vec<&str> = header.iter().skip(1).map(str::trim).collect();
    if cols.len() % 3 != 0 {
        return Err(Error::Parse(format!(
            "{} coordinate columns is not a multiple of 3",
            cols.len()
        )));
    }
    let mut names = Vec::with_capacity(cols.len() / 3);
    for triple in cols.chunks(3) {
        let base = triple[0]
            .strip_suffix("_x")
            .ok_or_else(|| Error::Parse(format!("column `{}` should end in _x", triple[0])))?;
        if triple[1] != format!("{base}_y") || triple[2] != format!("{base}_z") {
            return Err(Error::Parse(format!("columns for joint `{base}` are not _x,_y,_z")));
        }
        names.push(base.to_string());
    }
    let n = names.len();

    let mut times = Vec::new();
    let mut poses = Vec::new();
    for (frame, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let values: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("row {frame}: {e}")))?;
        if values.len() != 1 + 3 * n {
            return Err(Error::JointCountMismatch {
                frame,
                found: values.len().saturating_sub(1) / 3,
                expected: n,
            });
        }
        times.push(values[0]);
        poses.push(
            values[1..]
                .chunks(3)
                .map(|c| Vec3::new(c[0], c[1], c[2]))
                .collect(),
        );
    }
    let topo = SkeletonTopology::new(names, links, bones)?;
    Motion::from_timestamps(Arc::new(topo), times, poses)
}

fn output_times(m: &Motion) -> &[f64] {
    m.source_times().unwrap_or(m.times())
}

/// Serializes a motion. Timestamps are written as read when the motion came
/// from a document, otherwise as normalized times.
pub fn write_motion(m: &Motion, format: MotionFormat) -> Result<Vec<u8>> {
    match format {
        MotionFormat::Json => {
            let topo = m.topology();
            let doc = JsonMotion {
                joints: topo.joint_names().to_vec(),
                links: topo.links().iter().map(|&(j, k)| [j, k]).collect(),
                bone_lengths: topo.bone_lengths().map(<[f64]>::to_vec),
                frames: output_times(m)
                    .iter()
                    .zip(m.poses())
                    .map(|(&t, pose)| JsonFrame {
                        t,
                        pos: pose.iter().map(|p| [p.x, p.y, p.z]).collect(),
                    })
                    .collect(),
            };
            Ok(serde_json::to_vec_pretty(&doc)?)
        }
        MotionFormat::Csv => {
            let mut out = Vec::new();
            let topo = m.topology();
            if !topo.links().is_empty() {
                let links: Vec<[usize; 2]> = topo.links().iter().map(|&(j, k)| [j, k]).collect();
                out.extend_from_slice(
                    format!("{LINKS_PREFIX} {}\n", serde_json::to_string(&links)?).as_bytes(),
                );
            }
            if let Some(bones) = topo.bone_lengths() {
                out.extend_from_slice(
                    format!("{BONES_PREFIX} {}\n", serde_json::to_string(bones)?).as_bytes(),
                );
            }
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec!["t".to_string()];
            for name in topo.joint_names() {
                header.extend(["x", "y", "z"].iter().map(|c| format!("{name}_{c}")));
            }
            w.write_record(&header)?;
            for (&t, pose) in output_times(m).iter().zip(m.poses()) {
                let mut row = vec![t.to_string()];
                for p in pose {
                    row.extend([p.x, p.y, p.z].iter().map(f64::to_string));
                }
                w.write_record(&row)?;
            }
            w.flush()?;
            drop(w);
            Ok(out)
        }
    }
}
