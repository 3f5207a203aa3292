//! Runtime-scaling measurements: wall time and exact distance-evaluation
//! counts of the one-pass recognizer over increasing test lengths, with a
//! least-squares linear fit.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::DistanceConfig;
use crate::error::{Error, Result};
use crate::onepass::{op_dfw_segment, OnePassOptions};
use crate::templates::SuperTemplate;
use crate::twopass::subsequence_count;
use crate::types::{FrameVector, TimeSeries};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub t_z: usize,
    /// Median wall time over the repeats.
    pub wall_time_s: f64,
    pub distance_evals: u64,
    /// Admissible two-pass sub-sequences at this length.
    pub tp_subsequences: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least-squares fit of y on x with intercept.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LinearFit { slope, intercept, r2 }
}

/// Deterministic random unit series in the model's dimension.
pub fn random_series(dim: usize, len: usize, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames: Vec<FrameVector> = (0..len)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            FrameVector::from_raw(v).expect("random frame").0
        })
        .collect();
    TimeSeries::new(frames).expect("non-empty series")
}

/// Times the one-pass recognizer at each length (median of `repeats` runs)
/// and fits wall time against length.
pub fn benchmark_scaling(
    model: &SuperTemplate,
    cfg: &DistanceConfig,
    lengths: &[usize],
    t_min: usize,
    seed: u64,
    repeats: usize,
) -> Result<(Vec<ScalingRow>, LinearFit)> {
    if lengths.is_empty() {
        return Err(Error::InvalidInput("no lengths".into()));
    }
    if lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("lengths must be strictly increasing".into()));
    }
    let repeats = repeats.max(1);
    let opts = OnePassOptions { enforce_lengths: false, keep_grid: false };
    let mut rows = Vec::with_capacity(lengths.len());
    for (i, &t_z) in lengths.iter().enumerate() {
        let z = random_series(model.dim(), t_z, seed.wrapping_add(i as u64));
        let mut times = Vec::with_capacity(repeats);
        let mut evals = 0u64;
        for _ in 0..repeats {
            let start = Instant::now();
            let res = op_dfw_segment(&z, model, cfg, opts)?;
            times.push(start.elapsed().as_secs_f64());
            evals = res.distance_evals;
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(ScalingRow {
            t_z,
            wall_time_s: times[times.len() / 2],
            distance_evals: evals,
            tp_subsequences: subsequence_count(t_z, t_min),
        });
    }
    let fit = linear_fit(
        &rows
            .iter()
            .map(|r| (r.t_z as f64, r.wall_time_s))
            .collect::<Vec<_>>(),
    );
    Ok((rows, fit))
}
