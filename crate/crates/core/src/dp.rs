//! Dynamic-programming alignment over a local cost grid.
//!
//! Paths are monotone lattice paths from `(0, 0)` to `(N−1, M−1)` with steps
//! `(1,1)`, `(1,0)` and `(0,1)`; the total cost sums the local cost of every
//! visited cell, both endpoints included. On ties the diagonal predecessor
//! wins, then the `(1,0)` step.
//!
//! The anchored variant forces the path through a Chebyshev window around each
//! anchor node and only ever evaluates cells inside the bounding rectangles
//! between consecutive windows. Time is `O(N·M)` for the plain solver and
//! proportional to the union of those rectangles for the anchored one.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::warping::{warp_from_path, Diffeomorphism, FrameCorrespondence};

/// Local cost over the grid `[0, rows) × [0, cols)`, counting evaluations.
pub struct CostOracle<'a> {
    rows: usize,
    cols: usize,
    eval: Box<dyn Fn(usize, usize) -> f64 + Send + Sync + 'a>,
    evaluations: AtomicUsize,
}

impl std::fmt::Debug for CostOracle<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CostOracle")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

impl<'a> CostOracle<'a> {
    pub fn new<F>(rows: usize, cols: usize, eval: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'a,
    {
        Self {
            rows,
            cols,
            eval: Box::new(eval),
            evaluations: AtomicUsize::new(0),
        }
    }

    /// Row-major dense matrix.
    pub fn from_matrix(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "matrix size mismatch");
        Self::new(rows, cols, move |i, j| values[i * cols + j])
    }

    /// `f(a[i], b[j])` over two feature sequences.
    pub fn pairwise<T, F>(a: Vec<T>, b: Vec<T>, f: F) -> Self
    where
        T: Send + Sync + 'a,
        F: Fn(&T, &T) -> f64 + Send + Sync + 'a,
    {
        let (rows, cols) = (a.len(), b.len());
        Self::new(rows, cols, move |i, j| f(&a[i], &b[j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        (self.eval)(i, j)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub i: usize,
    pub j: usize,
    /// Chebyshev radius (frames) of the window the path must touch.
    pub tolerance: usize,
}

impl Anchor {
    pub fn new(i: usize, j: usize, tolerance: usize) -> Self {
        Self { i, j, tolerance }
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub path: FrameCorrespondence,
    /// Maps normalized time of the first sequence to the second.
    pub warp: Diffeomorphism,
    pub total_cost: f64,
    pub cells_visited: usize,
    /// Seconds.
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
    /// Set when requested anchors were infeasible and the plain solver ran.
    #[serde(default)]
    pub anchor_fallback: bool,
}

impl AlignmentResult {
    /// The warp `ψ` with `first ∘ ψ ≈ second`, i.e. mapping the second
    /// sequence's time onto the first's.
    pub fn alignment_warp(&self) -> Diffeomorphism {
        self.warp.inverse()
    }
}

/// Local cost on the visited region, `NaN` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub rows: usize,
    pub cols: usize,
    pub cost: Vec<f64>,
}

impl Landscape {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.cols + j]
    }
}

/// Output of the raw solver: lattice path, cost and work done.
#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    pub path: FrameCorrespondence,
    pub total_cost: f64,
    pub cells_visited: usize,
}

#[derive(Clone, Copy)]
struct Rect {
    r0: usize,
    r1: usize,
    c0: usize,
    c1: usize,
}

impl Rect {
    fn contains(&self, i: usize, j: usize) -> bool {
        (self.r0..=self.r1).contains(&i) && (self.c0..=self.c1).contains(&j)
    }

    fn width(&self) -> usize {
        self.c1 - self.c0 + 1
    }

    fn index(&self, i: usize, j: usize) -> usize {
        (i - self.r0) * self.width() + (j - self.c0)
    }

    fn area(&self) -> usize {
        (self.r1 - self.r0 + 1) * self.width()
    }
}

#[derive(Clone, Copy)]
struct Window {
    i: usize,
    j: usize,
    w: usize,
}

impl Window {
    fn contains(&self, i: usize, j: usize) -> bool {
        i.abs_diff(self.i) <= self.w && j.abs_diff(self.j) <= self.w
    }
}

const BACK_START: u8 = 0;
const BACK_DIAG: u8 = 1;
const BACK_UP: u8 = 2; // predecessor (i−1, j)
const BACK_LEFT: u8 = 3; // predecessor (i, j−1)
const BACK_STAGE: u8 = 4; // same cell, previous stage

/// Staged solver: stage `s` holds paths that have touched windows `0..=s`.
/// Stage `s` lives on the rectangle spanned by windows `s` and `s + 1`.
fn solve(
    cost: &CostOracle<'_>,
    n: usize,
    m: usize,
    windows: &[Window],
    mut landscape: Option<&mut Vec<f64>>,
) -> Result<DpSolution> {
    let stages = windows.len() - 1;
    let rects: Vec<Rect> = (0..stages)
        .map(|s| {
            let (a, b) = (windows[s], windows[s + 1]);
            Rect {
                r0: a.i.saturating_sub(a.w),
                r1: (b.i + b.w).min(n - 1),
                c0: a.j.saturating_sub(a.w),
                c1: (b.j + b.w).min(m - 1),
            }
        })
        .collect();
    let mut acc: Vec<Vec<f64>> = rects.iter().map(|r| vec![f64::INFINITY; r.area()]).collect();
    let mut back: Vec<Vec<u8>> = rects.iter().map(|r| vec![BACK_START; r.area()]).collect();

    let row_lo = rects.iter().map(|r| r.r0).min().unwrap_or(0);
    let row_hi = rects.iter().map(|r| r.r1).max().unwrap_or(0);
    let mut visited = 0usize;
    let mut active: Vec<usize> = Vec::with_capacity(stages);

    for i in row_lo..=row_hi {
        // union of the stage rectangles on this row
        let spans: Vec<(usize, usize)> = rects
            .iter()
            .filter(|r| (r.r0..=r.r1).contains(&i))
            .map(|r| (r.c0, r.c1))
            .collect();
        let Some(c_lo) = spans.iter().map(|s| s.0).min() else {
            continue;
        };
        let c_hi = spans.iter().map(|s| s.1).max().unwrap();
        for j in c_lo..=c_hi {
            active.clear();
            active.extend((0..stages).filter(|&s| rects[s].contains(i, j)));
            if active.is_empty() {
                continue;
            }
            let c = cost.cost(i, j);
            visited += 1;
            if let Some(l) = landscape.as_deref_mut() {
                l[i * m + j] = c;
            }
            for &s in &active {
                let rect = rects[s];
                let here = rect.index(i, j);
                let (mut best, mut dir) = if i == 0 && j == 0 && s == 0 {
                    (0.0, BACK_START)
                } else {
                    let at = |ii: usize, jj: usize| -> f64 {
                        if rect.contains(ii, jj) {
                            acc[s][rect.index(ii, jj)]
                        } else {
                            f64::INFINITY
                        }
                    };
                    let mut best = f64::INFINITY;
                    let mut dir = BACK_START;
                    if i > 0 && j > 0 {
                        best = at(i - 1, j - 1);
                        dir = BACK_DIAG;
                    }
                    if i > 0 {
                        let v = at(i - 1, j);
                        if v < best {
                            best = v;
                            dir = BACK_UP;
                        }
                    }
                    if j > 0 {
                        let v = at(i, j - 1);
                        if v < best {
                            best = v;
                            dir = BACK_LEFT;
                        }
                    }
                    (best, dir)
                };
                best += c;
                if s > 0 && windows[s].contains(i, j) && rects[s - 1].contains(i, j) {
                    let prev = acc[s - 1][rects[s - 1].index(i, j)];
                    if prev < best {
                        best = prev;
                        dir = BACK_STAGE;
                    }
                }
                acc[s][here] = best;
                back[s][here] = dir;
            }
        }
    }

    let last = stages - 1;
    let total = acc[last][rects[last].index(n - 1, m - 1)];
    if !total.is_finite() {
        return Err(Error::InfeasibleAnchors(
            "no monotone path touches every anchor window".into(),
        ));
    }

    let (mut i, mut j, mut s) = (n - 1, m - 1, last);
    let mut pairs = vec![(i, j)];
    loop {
        match back[s][rects[s].index(i, j)] {
            BACK_START => break,
            BACK_STAGE => {
                s -= 1;
                continue;
            }
            BACK_DIAG => {
                i -= 1;
                j -= 1;
            }
            BACK_UP => i -= 1,
            _ => j -= 1,
        }
        pairs.push((i, j));
    }
    pairs.reverse();
    Ok(DpSolution {
        path: FrameCorrespondence::new(pairs)?,
        total_cost: total,
        cells_visited: visited,
    })
}

fn check_grid(cost: &CostOracle<'_>, n: usize, m: usize) -> Result<()> {
    if n < 2 || m < 2 {
        return Err(Error::InvalidInput(format!("grid {n}x{m} is too small")));
    }
    if cost.rows() != n || cost.cols() != m {
        return Err(Error::InvalidInput(format!(
            "cost oracle is {}x{}, grid is {n}x{m}",
            cost.rows(),
            cost.cols()
        )));
    }
    Ok(())
}

fn endpoint_windows(n: usize, m: usize, anchors: &[Anchor]) -> Result<Vec<Window>> {
    for a in anchors {
        if a.i >= n || a.j >= m {
            return Err(Error::InvalidInput(format!(
                "anchor ({}, {}) outside {n}x{m} grid",
                a.i, a.j
            )));
        }
    }
    if anchors.windows(2).any(|w| !(w[1].i > w[0].i && w[1].j > w[0].j)) {
        return Err(Error::InfeasibleAnchors(
            "anchors are not strictly increasing in both coordinates".into(),
        ));
    }
    let mut windows = vec![Window { i: 0, j: 0, w: 0 }];
    windows.extend(anchors.iter().map(|a| Window {
        i: a.i,
        j: a.j,
        w: a.tolerance,
    }));
    windows.push(Window {
        i: n - 1,
        j: m - 1,
        w: 0,
    });
    Ok(windows)
}

/// Minimal-cost monotone path on the raw lattice, without building a warp.
pub fn solve_dtw(cost: &CostOracle<'_>, n: usize, m: usize) -> Result<DpSolution> {
    check_grid(cost, n, m)?;
    solve(cost, n, m, &endpoint_windows(n, m, &[])?, None)
}

/// Anchored counterpart of [`solve_dtw`].
pub fn solve_anchored(
    cost: &CostOracle<'_>,
    n: usize,
    m: usize,
    anchors: &[Anchor],
) -> Result<DpSolution> {
    check_grid(cost, n, m)?;
    solve(cost, n, m, &endpoint_windows(n, m, anchors)?, None)
}

fn into_result(sol: DpSolution, n: usize, m: usize, started: Instant) -> Result<AlignmentResult> {
    let warp = warp_from_path(&sol.path, n, m)?;
    Ok(AlignmentResult {
        path: sol.path,
        warp,
        total_cost: sol.total_cost,
        cells_visited: sol.cells_visited,
        wall_time: started.elapsed(),
        anchor_fallback: false,
    })
}

/// Classical dynamic time warping over all `N·M` cells.
pub fn dtw(cost: &CostOracle<'_>, n: usize, m: usize) -> Result<AlignmentResult> {
    let started = Instant::now();
    let sol = solve_dtw(cost, n, m)?;
    into_result(sol, n, m, started)
}

/// Dynamic time warping constrained through anchor windows.
pub fn anchored_dtw(
    cost: &CostOracle<'_>,
    n: usize,
    m: usize,
    anchors: &[Anchor],
) -> Result<AlignmentResult> {
    let started = Instant::now();
    let sol = solve_anchored(cost, n, m, anchors)?;
    into_result(sol, n, m, started)
}

/// Local costs over the region an (optionally anchored) solve visits, and the
/// optimal path through it.
pub fn energy_landscape(
    cost: &CostOracle<'_>,
    n: usize,
    m: usize,
    anchors: &[Anchor],
) -> Result<(Landscape, DpSolution)> {
    check_grid(cost, n, m)?;
    let windows = endpoint_windows(n, m, anchors)?;
    let mut values = vec![f64::NAN; n * m];
    let sol = solve(cost, n, m, &windows, Some(&mut values))?;
    Ok((
        Landscape {
            rows: n,
            cols: m,
            cost: values,
        },
        sol,
    ))
}

/// Tolerance `⌈fraction · frames⌉`.
pub fn tolerance_from_fraction(fraction: f64, frames: usize) -> usize {
    (fraction * frames as f64 - 1e-9).ceil().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CostOracle<'static> {
        let v = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        CostOracle::from_matrix(rows, cols, v)
    }

    #[test]
    fn zero_grid_takes_diagonal() {
        let c = grid(3, 3, |_, _| 0.0);
        let r = dtw(&c, 3, 3).unwrap();
        assert_eq!(r.total_cost, 0.0);
        assert_eq!(r.path.pairs(), &[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(r.cells_visited, 9);
        assert!(r.warp.is_identity());
    }

    #[test]
    fn zero_diagonal_grid() {
        let c = grid(5, 5, |i, j| if i == j { 0.0 } else { 1.0 });
        let r = dtw(&c, 5, 5).unwrap();
        assert_eq!(r.total_cost, 0.0);
        assert_eq!(r.path.pairs(), (0..5).map(|i| (i, i)).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn endpoints_are_counted() {
        let c = grid(2, 2, |i, j| (1 + i + 2 * j) as f64);
        // (0,0)=1, (1,1)=4 via diagonal
        assert_eq!(dtw(&c, 2, 2).unwrap().total_cost, 5.0);
    }

    #[test]
    fn anchor_forces_detour() {
        let c = grid(4, 4, |i, j| if i == j { 0.0 } else { 1.0 });
        let r = anchored_dtw(&c, 4, 4, &[Anchor::new(2, 1, 0)]).unwrap();
        assert!(r.path.pairs().contains(&(2, 1)));
        assert!(r.total_cost >= 1.0);
        assert!(r.cells_visited < 16);
    }

    #[test]
    fn vacuous_anchor_matches_dtw() {
        let c = grid(6, 5, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let plain = dtw(&c, 6, 5).unwrap();
        let anchored = anchored_dtw(&c, 6, 5, &[Anchor::new(3, 2, 6)]).unwrap();
        assert_eq!(plain.total_cost, anchored.total_cost);
        assert_eq!(plain.path, anchored.path);
        assert_eq!(anchored.cells_visited, 30);
    }

    #[test]
    fn crossing_anchors_are_infeasible() {
        let c = grid(5, 5, |_, _| 1.0);
        let err = anchored_dtw(&c, 5, 5, &[Anchor::new(3, 1, 0), Anchor::new(2, 3, 0)]);
        assert!(matches!(err, Err(Error::InfeasibleAnchors(_))));
        assert!(anchored_dtw(&c, 5, 5, &[Anchor::new(7, 1, 0)]).is_err());
    }

    #[test]
    fn oracle_counts_evaluations() {
        let c = grid(4, 6, |_, _| 1.0);
        dtw(&c, 4, 6).unwrap();
        assert_eq!(c.evaluations(), 24);
        assert!(dtw(&c, 4, 5).is_err());
    }

    #[test]
    fn landscape_marks_unvisited() {
        let c = grid(10, 10, |i, j| i.abs_diff(j) as f64);
        let (land, sol) = energy_landscape(&c, 10, 10, &[Anchor::new(5, 5, 1)]).unwrap();
        assert!(land.get(0, 9).is_nan());
        assert_eq!(land.get(5, 5), 0.0);
        assert_eq!(land.cost.iter().filter(|v| !v.is_nan()).count(), sol.cells_visited);
    }

    #[test]
    fn tolerance_fraction_rounds_up() {
        assert_eq!(tolerance_from_fraction(0.25, 100), 25);
        assert_eq!(tolerance_from_fraction(0.25, 101), 26);
        assert_eq!(tolerance_from_fraction(0.05, 100), 5);
        assert_eq!(tolerance_from_fraction(0.0, 100), 0);
    }
}
