//! Plot data for warps, correspondences, elevations and DP energy
//! landscapes, rendered as CSV or as a bare SVG of polylines.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dp::Landscape;
use crate::error::{Error, Result};
use crate::motion::Motion;
use crate::warping::{Diffeomorphism, FrameCorrespondence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotFormat {
    Csv,
    Svg,
}

impl FromStr for PlotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            other => Err(Error::InvalidInput(format!("unknown plot format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotDocument {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl PlotDocument {
    pub fn new(title: &str, x_label: &str, y_label: &str, series: Vec<Series>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::InvalidInput("plot has no series".into()));
        }
        if let Some(s) = series.iter().find(|s| s.points.is_empty()) {
            return Err(Error::InvalidInput(format!("series `{}` is empty", s.name)));
        }
        Ok(Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series,
        })
    }

    pub fn render(&self, format: PlotFormat) -> String {
        match format {
            PlotFormat::Csv => self.to_csv(),
            PlotFormat::Svg => self.to_svg(),
        }
    }

    /// Long format: one `series,x,y` row per point.
    pub fn to_csv(&self) -> String {
        let mut out = format!("series,{},{}\n", csv_field(&self.x_label), csv_field(&self.y_label));
        for s in &self.series {
            for (x, y) in &s.points {
                let _ = writeln!(out, "{},{x},{y}", csv_field(&s.name));
            }
        }
        out
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 480.0;
        const PAD: f64 = 50.0;
        const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#17becf"];

        let all = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = writeln!(out, r#"<text x="{}" y="30" text-anchor="middle">{}</text>"#, W / 2.0, xml(&self.title));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 15.0,
            xml(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            xml(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                pts.join(" "),
                xml(&s.name)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                PAD + 10.0,
                PAD + 18.0 * (k + 1) as f64,
                xml(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Graphs of warps on `[0, 1]`.
pub fn warp_plot(warps: &[(&str, &Diffeomorphism)]) -> Result<PlotDocument> {
    let series = warps
        .iter()
        .map(|(name, w)| Series {
            name: name.to_string(),
            points: w.knots().iter().copied().zip(w.values().iter().copied()).collect(),
        })
        .collect();
    PlotDocument::new("Time warps", "time of input", "time of reference", series)
}

/// Correspondence drawn in normalized coordinates.
pub fn correspondence_plot(paths: &[(&str, &FrameCorrespondence)]) -> Result<PlotDocument> {
    let series = paths
        .iter()
        .map(|(name, p)| {
            let (k1, k2) = p.shape();
            let sx = (k1.max(2) - 1) as f64;
            let sy = (k2.max(2) - 1) as f64;
            Series {
                name: name.to_string(),
                points: p.pairs().iter().map(|&(i, j)| (i as f64 / sx, j as f64 / sy)).collect(),
            }
        })
        .collect();
    PlotDocument::new("Frame correspondence", "frame of input (normalized)", "frame of reference (normalized)", series)
}

/// Vertical coordinate of the given joints over normalized time.
pub fn elevation_plot(motions: &[(&str, &Motion)], joints: &[usize]) -> Result<PlotDocument> {
    let mut series = Vec::new();
    for (name, m) in motions {
        for &j in joints {
            if j >= m.joint_count() {
                return Err(Error::UnknownJoint(j.to_string()));
            }
            series.push(Series {
                name: format!("{name}: {}", m.topology().joint_names()[j]),
                points: m.times().iter().copied().zip(m.elevation(j)).collect(),
            });
        }
    }
    PlotDocument::new("Elevation", "normalized time", "z (m)", series)
}

/// Dense `rows × cols` CSV of local costs; unvisited cells are left empty.
pub fn landscape_csv(landscape: &Landscape, path: Option<&FrameCorrespondence>) -> String {
    let mut on_path = vec![false; landscape.rows * landscape.cols];
    if let Some(p) = path {
        for &(i, j) in p.pairs() {
            on_path[i * landscape.cols + j] = true;
        }
    }
    let mut out = String::from("i,j,cost,on_path\n");
    for i in 0..landscape.rows {
        for j in 0..landscape.cols {
            let c = landscape.get(i, j);
            let cost = if c.is_nan() { String::new() } else { c.to_string() };
            let _ = writeln!(out, "{i},{j},{cost},{}", on_path[i * landscape.cols + j] as u8);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_series() {
        assert!(PlotDocument::new("t", "x", "y", vec![]).is_err());
        let empty = Series {
            name: "a".into(),
            points: vec![],
        };
        assert!(PlotDocument::new("t", "x", "y", vec![empty]).is_err());
    }

    #[test]
    fn warp_csv_and_svg() {
        let id = Diffeomorphism::identity();
        let doc = warp_plot(&[("identity", &id)]).unwrap();
        assert_eq!(doc.to_csv(), "series,time of input,time of reference\nidentity,0,0\nidentity,1,1\n");
        let svg = doc.to_svg();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn landscape_marks_path() {
        let l = Landscape {
            rows: 2,
            cols: 2,
            cost: vec![1.0, f64::NAN, 2.0, 0.5],
        };
        let p = FrameCorrespondence::new(vec![(0, 0), (1, 1)]).unwrap();
        assert_eq!(landscape_csv(&l, Some(&p)), "i,j,cost,on_path\n0,0,1,1\n0,1,,0\n1,0,2,0\n1,1,0.5,1\n");
    }
}
