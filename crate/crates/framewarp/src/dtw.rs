//! Baseline dynamic time warping between two plain time series.
//!
//! Allowed grid transitions are vertical (0,1), horizontal (1,0) and diagonal
//! (1,1), weighted by the penalty r = tau + tau', so a diagonal move and a
//! horizontal-plus-vertical detour carry the same weight. The forward pass
//! minimizes the penalty-weighted accumulated cost; the reported score is
//! the unweighted mean frame distance along the optimal path, which keeps
//! scores comparable across paths of different lengths.

use crate::error::{Error, Result};
use crate::types::{AlignmentPath, FrameVector, PathStep, TimeSeries};

/// Maximum squared distance assigned when either frame is the degenerate
/// empty frame.
pub const EMPTY_FRAME_DISTANCE: f64 = 2.0;

/// Squared Euclidean distance between two unit frames (2 - 2<a,b> for unit
/// vectors). Empty frames sit at the fixed maximum of 2.
pub fn frame_distance(a: &FrameVector, b: &FrameVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.is_empty_frame() || b.is_empty_frame() {
        return Ok(EMPTY_FRAME_DISTANCE);
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// Transition penalty: tau + tau' for the three allowed moves, infinite
/// otherwise.
pub fn transition_penalty(tau: i64, tau_prime: i64) -> f64 {
    match (tau, tau_prime) {
        (0, 1) | (1, 0) | (1, 1) => (tau + tau_prime) as f64,
        _ => f64::INFINITY,
    }
}

/// The three moves in the tie-break order used everywhere: diagonal beats
/// horizontal beats vertical.
pub(crate) const MOVES: [(usize, usize); 3] = [(1, 1), (1, 0), (0, 1)];

/// Result of a sequence alignment.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub path: AlignmentPath,
    /// Optimal penalty-weighted accumulated cost at the terminal cell.
    pub accumulated: f64,
    /// Unweighted mean frame distance along the optimal path.
    pub score: f64,
}

/// Dense accumulated-cost grid with single-predecessor back-pointers.
pub(crate) struct CostGrid {
    pub rows: usize,
    pub cols: usize,
    pub cost: Vec<f64>,
    /// Flat index of the predecessor cell; usize::MAX marks the origin.
    pub back: Vec<usize>,
}

impl CostGrid {
    #[inline]
    pub fn idx(&self, t: usize, tp: usize) -> usize {
        (t - 1) * self.cols + (tp - 1)
    }

    /// Runs the forward pass over a distance table `dist(t, t')` (1-based).
    pub fn forward(rows: usize, cols: usize, dist: impl Fn(usize, usize) -> f64) -> CostGrid {
        let mut grid = CostGrid {
            rows,
            cols,
            cost: vec![f64::INFINITY; rows * cols],
            back: vec![usize::MAX; rows * cols],
        };
        for t in 1..=rows {
            for tp in 1..=cols {
                let i = grid.idx(t, tp);
                if t == 1 && tp == 1 {
                    grid.cost[i] = dist(1, 1);
                    continue;
                }
                let d = dist(t, tp);
                let mut best = f64::INFINITY;
                let mut best_from = usize::MAX;
                for (dt, dtp) in MOVES {
                    if t < dt + 1 || tp < dtp + 1 {
                        continue;
                    }
                    let j = grid.idx(t - dt, tp - dtp);
                    let cand = grid.cost[j] + (dt + dtp) as f64 * d;
                    if cand < best {
                        best = cand;
                        best_from = j;
                    }
                }
                grid.cost[i] = best;
                grid.back[i] = best_from;
            }
        }
        grid
    }

    /// Backtracks from the terminal cell to (1,1).
    pub fn backtrack(&self, label: u32) -> Vec<PathStep> {
        let mut steps = Vec::new();
        let mut i = self.idx(self.rows, self.cols);
        loop {
            let t = i / self.cols + 1;
            let tp = i % self.cols + 1;
            steps.push(PathStep { t, t_prime: tp, label });
            if self.back[i] == usize::MAX {
                break;
            }
            i = self.back[i];
        }
        steps.reverse();
        steps
    }
}

/// Aligns `z` against `y` under a caller-provided frame distance, returning
/// the optimal path, the weighted accumulated cost and the normalized score.
pub fn dtw_align_with(
    z_len: usize,
    y_len: usize,
    label: u32,
    dist: impl Fn(usize, usize) -> f64,
) -> Result<Alignment> {
    if z_len == 0 || y_len == 0 {
        return Err(Error::InvalidInput("cannot align an empty series".into()));
    }
    let grid = CostGrid::forward(z_len, y_len, &dist);
    let steps = grid.backtrack(label);
    let accumulated = grid.cost[grid.idx(z_len, y_len)];
    let raw: f64 = steps.iter().map(|s| dist(s.t, s.t_prime)).sum();
    let score = raw / steps.len() as f64;
    Ok(Alignment {
        path: AlignmentPath::new(steps)?,
        accumulated,
        score,
    })
}

/// Aligns two time series with the default squared-Euclidean frame distance.
pub fn dtw_align(z: &TimeSeries, y: &TimeSeries) -> Result<Alignment> {
    dtw_align_custom(z, y, frame_distance)
}

/// Aligns two time series under a custom frame distance.
pub fn dtw_align_custom(
    z: &TimeSeries,
    y: &TimeSeries,
    dist: impl Fn(&FrameVector, &FrameVector) -> Result<f64>,
) -> Result<Alignment> {
    if z.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: y.dim(),
        });
    }
    // Precompute the distance table so the DP closure is infallible.
    let mut table = vec![0.0f64; z.len() * y.len()];
    for t in 1..=z.len() {
        for tp in 1..=y.len() {
            table[(t - 1) * y.len() + (tp - 1)] = dist(z.frame(t), y.frame(tp))?;
        }
    }
    let cols = y.len();
    dtw_align_with(z.len(), y.len(), 0, move |t, tp| {
        table[(t - 1) * cols + (tp - 1)]
    })
}
