//! Time warps of the unit interval and discrete frame correspondences.
//!
//! A [`Diffeomorphism`] is stored as a strictly increasing piecewise-linear
//! graph through `(0, 0)` and `(1, 1)`. Piecewise-linear maps are closed under
//! inversion (graph reflection), composition (on a merged knot grid), pointwise
//! means and pointwise medians, so every group operation here is exact up to
//! floating-point round-off.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope given to plateaus (horizontal or vertical runs) of a lattice path
/// when it is turned into a strictly increasing warp.
pub const PLATEAU_SLOPE: f64 = 1e-6;

/// Knots closer than this are merged when grids are combined.
const KNOT_MERGE_TOL: f64 = 1e-13;

/// Orientation-preserving, endpoint-fixing piecewise-linear self-map of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWarp", into = "RawWarp")]
pub struct Diffeomorphism {
    knots: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawWarp {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawWarp> for Diffeomorphism {
    type Error = Error;

    fn try_from(raw: RawWarp) -> Result<Self> {
        Diffeomorphism::new(raw.knots, raw.values)
    }
}

impl From<Diffeomorphism> for RawWarp {
    fn from(d: Diffeomorphism) -> Self {
        RawWarp {
            knots: d.knots,
            values: d.values,
        }
    }
}

fn check_grid(name: &str, xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput(format!("{name}: need at least 2 points")));
    }
    if xs[0] != 0.0 || xs[xs.len() - 1] != 1.0 {
        return Err(Error::InvalidInput(format!(
            "{name}: must start at 0 and end at 1"
        )));
    }
    if let Some(k) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "{name}: not strictly increasing at index {}",
            k + 1
        )));
    }
    Ok(())
}

impl Diffeomorphism {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "warp has {} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        check_grid("knots", &knots)?;
        check_grid("values", &values)?;
        Ok(Self { knots, values })
    }

    pub fn identity() -> Self {
        Self {
            knots: vec![0.0, 1.0],
            values: vec![0.0, 1.0],
        }
    }

    /// Builds a warp from samples of a map already known to be increasing,
    /// dropping samples that fail to increase strictly after round-off.
    fn from_samples(knots: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(knots.len(), values.len());
        let n = knots.len();
        let mut ks = Vec::with_capacity(n);
        let mut vs = Vec::with_capacity(n);
        ks.push(0.0);
        vs.push(0.0);
        for idx in 1..n.saturating_sub(1) {
            let (k, v) = (knots[idx], values[idx]);
            if k > *ks.last().unwrap() && v > *vs.last().unwrap() && k < 1.0 && v < 1.0 {
                ks.push(k);
                vs.push(v);
            }
        }
        ks.push(1.0);
        vs.push(1.0);
        Self {
            knots: ks,
            values: vs,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_identity(&self) -> bool {
        self.knots == self.values
    }

    /// Evaluates the warp at `t`, clamped to `[0, 1]`. Exact at knots.
    pub fn eval(&self, t: f64) -> f64 {
        eval_pl(&self.knots, &self.values, t)
    }

    /// Evaluates the inverse warp at `y`.
    pub fn eval_inverse(&self, y: f64) -> f64 {
        eval_pl(&self.values, &self.knots, y)
    }

    pub fn inverse(&self) -> Self {
        Self {
            knots: self.values.clone(),
            values: self.knots.clone(),
        }
    }

    /// `self ∘ inner`, i.e. `t ↦ self(inner(t))`.
    pub fn compose(&self, inner: &Diffeomorphism) -> Self {
        let pulled: Vec<f64> = self.knots.iter().map(|&k| inner.eval_inverse(k)).collect();
        let grid = merge_grids(&[&inner.knots, &pulled]);
        let values = grid.iter().map(|&t| self.eval(inner.eval(t))).collect();
        Self::from_samples(grid, values)
    }

    /// Slopes of the linear pieces.
    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .collect()
    }
}

pub(crate) fn eval_pl(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = xs.len();
    if t <= xs[0] {
        return ys[0];
    }
    if t >= xs[n - 1] {
        return ys[n - 1];
    }
    // first index with xs[idx] > t; the segment is [idx-1, idx]
    let idx = xs.partition_point(|&x| x <= t);
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    if t == x0 {
        return ys[idx - 1];
    }
    let s = (t - x0) / (x1 - x0);
    ys[idx - 1] + s * (ys[idx] - ys[idx - 1])
}

/// Sorted union of several grids over `[0, 1]`, merging near-duplicates.
pub fn merge_grids(grids: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = grids.iter().flat_map(|g| g.iter().copied()).collect();
    all.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        match out.last() {
            Some(&last) if x - last <= KNOT_MERGE_TOL => {}
            _ => out.push(x),
        }
    }
    // keep the exact endpoints
    if let Some(last) = out.last_mut() {
        if (*last - 1.0).abs() <= KNOT_MERGE_TOL {
            *last = 1.0;
        }
    }
    out
}

pub fn invert(phi: &Diffeomorphism) -> Diffeomorphism {
    phi.inverse()
}

/// `phi ∘ psi`.
pub fn compose(phi: &Diffeomorphism, psi: &Diffeomorphism) -> Diffeomorphism {
    phi.compose(psi)
}

/// `100 · ∫₀¹ |φ(t) − ψ(t)| dt`, integrated exactly on the merged knot grid.
pub fn l1_distance(phi: &Diffeomorphism, psi: &Diffeomorphism) -> f64 {
    let grid = merge_grids(&[&phi.knots, &psi.knots]);
    let diffs: Vec<f64> = grid.iter().map(|&t| phi.eval(t) - psi.eval(t)).collect();
    let mut total = 0.0;
    for (x, d) in grid.windows(2).zip(diffs.windows(2)) {
        let h = x[1] - x[0];
        let (a, b) = (d[0], d[1]);
        if a * b >= 0.0 {
            total += h * (a.abs() + b.abs()) / 2.0;
        } else {
            // linear piece crosses zero
            total += h * (a * a + b * b) / (2.0 * (a.abs() + b.abs()));
        }
    }
    100.0 * total
}

/// Largest pointwise gap `sup |φ − ψ|`; attained on the merged knot grid.
pub fn sup_distance(phi: &Diffeomorphism, psi: &Diffeomorphism) -> f64 {
    merge_grids(&[&phi.knots, &psi.knots])
        .iter()
        .map(|&t| (phi.eval(t) - psi.eval(t)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMethod {
    WeightedMean,
    Median,
}

impl std::str::FromStr for CombineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted_mean" | "mean" => Ok(Self::WeightedMean),
            "median" => Ok(Self::Median),
            other => Err(Error::InvalidInput(format!("unknown combine method `{other}`"))),
        }
    }
}

/// Combines per-joint warps pointwise on the union of their knot grids.
///
/// `weights` defaults to uniform and is ignored by the median.
pub fn combine_warps(
    warps: &[Diffeomorphism],
    weights: Option<&[f64]>,
    method: CombineMethod,
) -> Result<Diffeomorphism> {
    if warps.is_empty() {
        return Err(Error::InvalidInput("no warps to combine".into()));
    }
    let uniform;
    let weights = match weights {
        Some(w) => w,
        None => {
            uniform = vec![1.0 / warps.len() as f64; warps.len()];
            &uniform
        }
    };
    if weights.len() != warps.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} warps",
            weights.len(),
            warps.len()
        )));
    }
    if method == CombineMethod::WeightedMean {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
    }
    if warps.len() == 1 {
        return Ok(warps[0].clone());
    }

    let grids: Vec<&[f64]> = warps.iter().map(|w| w.knots()).collect();
    let grid = merge_grids(&grids);
    let mut column = vec![0.0; warps.len()];
    let values = grid
        .iter()
        .map(|&t| {
            for (c, w) in column.iter_mut().zip(warps) {
                *c = w.eval(t);
            }
            match method {
                CombineMethod::WeightedMean => {
                    column.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>()
                }
                CombineMethod::Median => median(&mut column),
            }
        })
        .collect();
    Ok(Diffeomorphism::from_samples(grid, values))
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Parameters of a seeded random warp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffeoSpec {
    pub seed: u64,
    pub n_basis: usize,
    /// Upper bound on `sup φ′ / inf φ′`.
    pub max_slope_ratio: f64,
}

impl Default for DiffeoSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_basis: 6,
            max_slope_ratio: 4.0,
        }
    }
}

/// Integrates a seeded positive step density with `n_basis` equal-width
/// steps whose heights lie in `[1, max_slope_ratio]`, normalized so `φ(1) = 1`.
pub fn random_diffeo(spec: &DiffeoSpec) -> Result<Diffeomorphism> {
    if spec.n_basis == 0 {
        return Err(Error::InvalidInput("n_basis must be at least 1".into()));
    }
    if !(spec.max_slope_ratio >= 1.0) {
        return Err(Error::InvalidInput("max_slope_ratio must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_basis;
    let heights: Vec<f64> = (0..n)
        .map(|_| 1.0 + (spec.max_slope_ratio - 1.0) * rng.random::<f64>())
        .collect();
    let total: f64 = heights.iter().sum();
    let mut knots = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    knots.push(0.0);
    values.push(0.0);
    for (k, h) in heights.iter().enumerate().take(n - 1) {
        acc += h;
        knots.push((k + 1) as f64 / n as f64);
        values.push(acc / total);
    }
    knots.push(1.0);
    values.push(1.0);
    Diffeomorphism::new(knots, values)
}

/// Monotone lattice path pairing frames of two motions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct FrameCorrespondence {
    pairs: Vec<(usize, usize)>,
}

impl TryFrom<Vec<(usize, usize)>> for FrameCorrespondence {
    type Error = Error;

    fn try_from(pairs: Vec<(usize, usize)>) -> Result<Self> {
        FrameCorrespondence::new(pairs)
    }
}

impl From<FrameCorrespondence> for Vec<(usize, usize)> {
    fn from(c: FrameCorrespondence) -> Self {
        c.pairs
    }
}

impl FrameCorrespondence {
    /// Validates start at `(0, 0)` and unit steps in `{(1,0), (0,1), (1,1)}`.
    /// The grid size is implied by the final pair.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.first() != Some(&(0, 0)) {
            return Err(Error::InvalidInput("correspondence must start at (0, 0)".into()));
        }
        for (k, w) in pairs.windows(2).enumerate() {
            let di = w[1].0.wrapping_sub(w[0].0);
            let dj = w[1].1.wrapping_sub(w[0].1);
            if !matches!((di, dj), (1, 0) | (0, 1) | (1, 1)) {
                return Err(Error::InvalidInput(format!(
                    "illegal step {:?} -> {:?} at position {}",
                    w[0],
                    w[1],
                    k + 1
                )));
            }
        }
        Ok(Self { pairs })
    }

    /// Checks that the path ends at `(k1 − 1, k2 − 1)`.
    pub fn check_shape(&self, k1: usize, k2: usize) -> Result<()> {
        let last = *self.pairs.last().expect("non-empty by construction");
        if k1 == 0 || k2 == 0 || last != (k1 - 1, k2 - 1) {
            return Err(Error::InvalidInput(format!(
                "correspondence ends at {last:?}, grid is {k1}x{k2}"
            )));
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Grid size `(K₁, K₂)` implied by the final pair.
    pub fn shape(&self) -> (usize, usize) {
        let last = self.pairs[self.pairs.len() - 1];
        (last.0 + 1, last.1 + 1)
    }

    /// The same correspondence with the roles of the two motions swapped.
    pub fn transposed(&self) -> Self {
        Self {
            pairs: self.pairs.iter().map(|&(i, j)| (j, i)).collect(),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "j"])?;
        for &(i, j) in &self.pairs {
            w.write_record([i.to_string(), j.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut pairs = Vec::new();
        for rec in r.deserialize::<(usize, usize)>() {
            pairs.push(rec?);
        }
        Self::new(pairs)
    }
}

fn step_of(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
    (b.0 - a.0, b.1 - a.1)
}

/// Turns a lattice path into a strictly increasing warp through its
/// normalized vertices.
///
/// Horizontal and vertical runs are tilted to slope [`PLATEAU_SLOPE`] (resp.
/// its reciprocal) around their original height (resp. abscissa); runs touching
/// an endpoint tilt away from it so the endpoints stay fixed.
pub fn warp_from_path(path: &FrameCorrespondence, k1: usize, k2: usize) -> Result<Diffeomorphism> {
    if k1 < 2 || k2 < 2 {
        return Err(Error::DegeneratePath(format!("grid {k1}x{k2} is too small")));
    }
    warp_from_path_on(path, &crate::motion::uniform_times(k1), &crate::motion::uniform_times(k2))
}

/// [`warp_from_path`] for sample grids at arbitrary times: row `i` of the path
/// sits at `xs[i]`, column `j` at `ys[j]`. Both grids must be strictly
/// increasing inside `[0, 1]`; `(0, 0)` and `(1, 1)` are added when the grids
/// do not reach the ends.
pub fn warp_from_path_on(path: &FrameCorrespondence, xs: &[f64], ys: &[f64]) -> Result<Diffeomorphism> {
    let (k1, k2) = (xs.len(), ys.len());
    if k1 < 2 || k2 < 2 {
        return Err(Error::DegeneratePath(format!("grid {k1}x{k2} is too small")));
    }
    for g in [xs, ys] {
        if g[0] < 0.0 || g[g.len() - 1] > 1.0 || g.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "sample times must increase strictly inside [0, 1]".into(),
            ));
        }
    }
    path.check_shape(k1, k2)?;
    let pairs = path.pairs();
    let n = pairs.len();

    let mut vertices = vec![(0.0, 0.0)];
    let mut push = |v: (f64, f64)| {
        if vertices.last() != Some(&v) {
            vertices.push(v);
        }
    };
    push((xs[pairs[0].0], ys[pairs[0].1]));
    for v in 1..n - 1 {
        if step_of(pairs[v - 1], pairs[v]) != step_of(pairs[v], pairs[v + 1]) {
            push((xs[pairs[v].0], ys[pairs[v].1]));
        }
    }
    push((xs[pairs[n - 1].0], ys[pairs[n - 1].1]));
    push((1.0, 1.0));
    regularize(vertices)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Run {
    Horizontal,
    Vertical,
    Rising,
}

fn run_kind(a: (f64, f64), b: (f64, f64)) -> Run {
    if a.1 == b.1 {
        Run::Horizontal
    } else if a.0 == b.0 {
        Run::Vertical
    } else {
        Run::Rising
    }
}

/// Tilts the flat and vertical runs of a monotone polyline from `(0,0)` to
/// `(1,1)` so that it becomes strictly increasing.
fn regularize(mut v: Vec<(f64, f64)>) -> Result<Diffeomorphism> {
    // merge consecutive runs of the same flat kind
    let mut k = 1;
    while k + 1 < v.len() {
        let before = run_kind(v[k - 1], v[k]);
        if before != Run::Rising && before == run_kind(v[k], v[k + 1]) {
            v.remove(k);
        } else {
            k += 1;
        }
    }
    let last = v.len() - 1;
    let mut dx = vec![0.0; v.len()];
    let mut dy = vec![0.0; v.len()];
    for s in 0..last {
        let (a, b) = (v[s], v[s + 1]);
        let (spread, along) = match run_kind(a, b) {
            Run::Horizontal => (b.0 - a.0, &mut dy),
            Run::Vertical => (b.1 - a.1, &mut dx),
            Run::Rising => continue,
        };
        if spread >= 1.0 {
            return Err(Error::DegeneratePath(
                "a single run spans an entire axis".into(),
            ));
        }
        let delta = PLATEAU_SLOPE * spread / 2.0;
        if s == 0 {
            along[s + 1] += 2.0 * delta;
        } else if s + 1 == last {
            along[s] -= 2.0 * delta;
        } else {
            along[s] -= delta;
            along[s + 1] += delta;
        }
    }
    let mut knots: Vec<f64> = v.iter().zip(&dx).map(|(p, d)| p.0 + d).collect();
    let mut values: Vec<f64> = v.iter().zip(&dy).map(|(p, d)| p.1 + d).collect();
    knots[0] = 0.0;
    values[0] = 0.0;
    knots[last] = 1.0;
    values[last] = 1.0;
    Diffeomorphism::new(knots, values).map_err(|e| Error::DegeneratePath(e.to_string()))
}

/// Joins per-row targets `targets[i]` (non-decreasing, first 0) into a
/// connected lattice path; a climb of `d` rows is split around one diagonal
/// step.
fn connect_targets(targets: &[usize]) -> Result<FrameCorrespondence> {
    let mut pairs = Vec::with_capacity(2 * targets.len());
    pairs.push((0, 0));
    for i in 0..targets.len() - 1 {
        let (j0, j1) = (targets[i], targets[i + 1]);
        if j1 == j0 {
            pairs.push((i + 1, j0));
            continue;
        }
        let climb = j1 - j0 - 1;
        let before = climb / 2;
        pairs.extend((j0 + 1..=j0 + before).map(|j| (i, j)));
        pairs.push((i + 1, j0 + before + 1));
        pairs.extend((j0 + before + 2..=j1).map(|j| (i + 1, j)));
    }
    FrameCorrespondence::new(pairs)
}

fn finish_targets(mut targets: Vec<usize>, k2: usize) -> Vec<usize> {
    let k1 = targets.len();
    targets[0] = 0;
    targets[k1 - 1] = k2 - 1;
    for i in 1..k1 {
        targets[i] = targets[i].max(targets[i - 1]);
    }
    targets
}

/// Samples a warp on the frame grid: frame `i` of the first motion pairs with
/// `round(φ(i / (K₁−1)) · (K₂−1))`, and consecutive pairs are joined by a
/// monotone run.
pub fn path_from_warp(phi: &Diffeomorphism, k1: usize, k2: usize) -> Result<FrameCorrespondence> {
    if k1 < 2 || k2 < 2 {
        return Err(Error::InvalidInput(format!("grid {k1}x{k2} is too small")));
    }
    let targets = (0..k1)
        .map(|i| {
            let t = i as f64 / (k1 - 1) as f64;
            ((phi.eval(t) * (k2 - 1) as f64).round() as usize).min(k2 - 1)
        })
        .collect();
    connect_targets(&finish_targets(targets, k2))
}

/// [`path_from_warp`] for frames at arbitrary normalized times: frame `i`
/// pairs with the frame of the second motion nearest to `φ(xs[i])`.
pub fn path_from_warp_on(phi: &Diffeomorphism, xs: &[f64], ys: &[f64]) -> Result<FrameCorrespondence> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::InvalidInput("grids need at least 2 frames".into()));
    }
    let targets = xs
        .iter()
        .map(|&t| {
            let y = phi.eval(t);
            let idx = ys.partition_point(|&v| v < y);
            if idx == 0 {
                0
            } else if idx == ys.len() {
                ys.len() - 1
            } else if y - ys[idx - 1] < ys[idx] - y {
                idx - 1
            } else {
                idx
            }
        })
        .collect();
    connect_targets(&finish_targets(targets, ys.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(points: &[(f64, f64)]) -> Diffeomorphism {
        Diffeomorphism::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert!(Diffeomorphism::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.2, 0.3, 1.0]).is_err());
        assert!(Diffeomorphism::new(vec![0.0, 1.0], vec![0.1, 1.0]).is_err());
        assert!(Diffeomorphism::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn invert_reflects_graph() {
        let phi = pl(&[(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]);
        let inv = invert(&phi);
        assert_eq!(inv.knots(), &[0.0, 0.25, 1.0]);
        assert_eq!(inv.values(), &[0.0, 0.5, 1.0]);
        assert_eq!(invert(&inv), phi);
        assert_eq!(invert(&Diffeomorphism::identity()), Diffeomorphism::identity());
    }

    #[test]
    fn compose_pointwise() {
        let phi = pl(&[(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]);
        let c = compose(&phi, &phi);
        assert_eq!(c.eval(0.5), 0.125);
        let id = Diffeomorphism::identity();
        assert_eq!(compose(&phi, &id), phi);
        assert_eq!(compose(&id, &phi), phi);
    }

    #[test]
    fn l1_hand_integral() {
        let id = Diffeomorphism::identity();
        // t vs max(0, 2t − 1), made strictly increasing by a vanishing tilt
        let psi = pl(&[(0.0, 0.0), (0.5, 1e-15), (1.0, 1.0)]);
        assert!((l1_distance(&id, &psi) - 25.0).abs() < 1e-9);
        assert_eq!(l1_distance(&psi, &psi), 0.0);
    }

    #[test]
    fn l1_with_crossing() {
        // φ above identity on [0, .5], below on [.5, 1]
        let phi = pl(&[(0.0, 0.0), (0.25, 0.5), (0.75, 0.5 + 1e-12), (1.0, 1.0)]);
        let brute: f64 = {
            let n = 200_000;
            (0..n)
                .map(|k| {
                    let t = (k as f64 + 0.5) / n as f64;
                    (phi.eval(t) - t).abs()
                })
                .sum::<f64>()
                / n as f64
        };
        assert!((l1_distance(&phi, &Diffeomorphism::identity()) - 100.0 * brute).abs() < 1e-6);
    }

    #[test]
    fn random_diffeo_properties() {
        let id = random_diffeo(&DiffeoSpec { seed: 3, n_basis: 1, max_slope_ratio: 4.0 }).unwrap();
        assert!(id.is_identity());
        let spec = DiffeoSpec { seed: 11, ..Default::default() };
        let a = random_diffeo(&spec).unwrap();
        assert_eq!(a, random_diffeo(&spec).unwrap());
        let s = a.slopes();
        let (lo, hi) = s.iter().fold((f64::MAX, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        assert!(lo > 0.0);
        assert!(hi / lo <= 4.0 + 1e-12);
    }

    #[test]
    fn combine_single_and_median() {
        let phi = random_diffeo(&DiffeoSpec { seed: 5, ..Default::default() }).unwrap();
        assert_eq!(combine_warps(&[phi.clone()], Some(&[1.0]), CombineMethod::WeightedMean).unwrap(), phi);
        let id = Diffeomorphism::identity();
        let med = combine_warps(&[id.clone(), id.clone(), id.clone()], None, CombineMethod::Median).unwrap();
        assert!(med.is_identity());
        assert!(combine_warps(&[id.clone(), id], Some(&[0.5, 0.6]), CombineMethod::WeightedMean).is_err());
    }

    #[test]
    fn combine_mean_of_warp_and_inverse() {
        let phi = pl(&[(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]);
        let inv = invert(&phi);
        let mean = combine_warps(&[phi.clone(), inv.clone()], None, CombineMethod::WeightedMean).unwrap();
        for &t in &[0.25, 0.5] {
            let expected = 0.5 * (phi.eval(t) + inv.eval(t));
            assert!((mean.eval(t) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn warp_from_path_plateau() {
        let p = FrameCorrespondence::new(vec![(0, 0), (1, 1), (2, 1), (3, 2)]).unwrap();
        let w = warp_from_path(&p, 4, 3).unwrap();
        let delta = PLATEAU_SLOPE * (1.0 / 3.0) / 2.0;
        assert_eq!(w.knots().len(), 4);
        assert!((w.knots()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((w.knots()[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.values()[1] - (0.5 - delta)).abs() < 1e-15);
        assert!((w.values()[2] - (0.5 + delta)).abs() < 1e-15);
    }

    #[test]
    fn warp_from_diagonal_is_identity() {
        let p = FrameCorrespondence::new((0..10).map(|i| (i, i)).collect()).unwrap();
        assert!(warp_from_path(&p, 10, 10).unwrap().is_identity());
    }

    #[test]
    fn warp_from_path_rejects_full_axis_runs() {
        let p = FrameCorrespondence::new(vec![(0, 0), (1, 0), (2, 0), (2, 1)]).unwrap();
        assert!(matches!(warp_from_path(&p, 3, 2), Err(Error::DegeneratePath(_))));
    }

    #[test]
    fn warp_from_path_corner_runs() {
        let p = FrameCorrespondence::new(vec![(0, 0), (1, 0), (1, 1), (1, 2), (2, 3), (3, 3), (4, 4)])
            .unwrap();
        let w = warp_from_path(&p, 5, 5).unwrap();
        assert!(w.slopes().iter().all(|&s| s > 0.0));
    }

    #[test]
    fn path_from_identity() {
        let p = path_from_warp(&Diffeomorphism::identity(), 6, 6).unwrap();
        assert_eq!(p.pairs(), (0..6).map(|i| (i, i)).collect::<Vec<_>>().as_slice());

        let p = path_from_warp(&Diffeomorphism::identity(), 3, 5).unwrap();
        for anchor in [(0, 0), (1, 2), (2, 4)] {
            assert!(p.pairs().contains(&anchor));
        }
        assert_eq!(p.shape(), (3, 5));
    }

    #[test]
    fn correspondence_validation() {
        assert!(FrameCorrespondence::new(vec![(0, 0), (2, 1)]).is_err());
        assert!(FrameCorrespondence::new(vec![(1, 0)]).is_err());
        assert!(FrameCorrespondence::new(vec![(0, 0), (0, 0)]).is_err());
    }

    #[test]
    fn correspondence_csv_roundtrip() {
        let p = FrameCorrespondence::new(vec![(0, 0), (1, 0), (2, 1)]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(FrameCorrespondence::read_csv(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn warp_json_shape() {
        let phi = pl(&[(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]);
        let s = serde_json::to_string(&phi).unwrap();
        assert_eq!(s, r#"{"knots":[0.0,0.5,1.0],"values":[0.0,0.25,1.0]}"#);
        let back: Diffeomorphism = serde_json::from_str(&s).unwrap();
        assert_eq!(back, phi);
        assert!(serde_json::from_str::<Diffeomorphism>(r#"{"knots":[0,1],"values":[1,0]}"#).is_err());
    }
}
