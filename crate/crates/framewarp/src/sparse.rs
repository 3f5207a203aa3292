//! Sparse reconstruction distance between a test frame and a set of
//! metaframe columns.
//!
//! Support selection runs orthogonal matching pursuit: greedily pick the
//! column with the largest absolute correlation to the residual, refit least
//! squares on the support, stop when the residual is small enough or the
//! support is full. The distance is then the closed form 2 - 2*||P z|| where
//! P projects onto the span of the selected columns, evaluated by solving
//! the |S| x |S| normal equations.

use crate::error::{Error, Result};
use crate::types::FrameVector;

/// Numerical floor treated as "residual reached zero" so a gamma of 0 still
/// terminates on exact reconstructions.
const RESIDUAL_EPS: f64 = 1e-12;
/// Ridge added to the Gram diagonal when the plain solve is rank-deficient.
const RIDGE: f64 = 1e-10;

/// Outcome of the greedy support selection.
#[derive(Debug, Clone)]
pub struct SparseCode {
    /// Dense coefficients, one per input column; exactly zero outside the
    /// support.
    pub coefficients: Vec<f64>,
    /// Selected column indices in selection order.
    pub support: Vec<usize>,
    /// Final residual norm.
    pub residual: f64,
    /// Residual norm after each iteration (non-increasing).
    pub residual_history: Vec<f64>,
}

/// Greedy basis-pursuit support selection via OMP.
///
/// All-zero columns are excluded from selection; if every column is zero the
/// support comes back empty with the residual at ||z||.
pub fn sparse_code(
    z: &FrameVector,
    columns: &[&FrameVector],
    gamma: f64,
    max_support: usize,
) -> Result<SparseCode> {
    if gamma < 0.0 {
        return Err(Error::InvalidInput("gamma must be >= 0".into()));
    }
    if max_support < 1 {
        return Err(Error::InvalidInput("max_support must be >= 1".into()));
    }
    let k = z.dim();
    for c in columns {
        if c.dim() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: c.dim(),
            });
        }
    }
    let candidates: Vec<usize> = (0..columns.len())
        .filter(|&j| !columns[j].is_empty_frame())
        .collect();

    let z_norm = z.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut code = SparseCode {
        coefficients: vec![0.0; columns.len()],
        support: Vec::new(),
        residual: z_norm,
        residual_history: Vec::new(),
    };
    if candidates.is_empty() {
        return Ok(code);
    }

    let limit = max_support.min(candidates.len()).min(k);
    let mut residual: Vec<f64> = z.values().to_vec();
    let mut coeffs: Vec<f64> = Vec::new();

    while code.residual > gamma.max(RESIDUAL_EPS) && code.support.len() < limit {
        // Largest absolute correlation with the residual; ties and an
        // all-zero correlation round still pick the lowest index.
        let mut best_j = usize::MAX;
        let mut best_corr = -1.0f64;
        for &j in &candidates {
            if code.support.contains(&j) {
                continue;
            }
            let corr: f64 = columns[j]
                .values()
                .iter()
                .zip(&residual)
                .map(|(a, b)| a * b)
                .sum();
            if corr.abs() > best_corr {
                best_corr = corr.abs();
                best_j = j;
            }
        }
        if best_j == usize::MAX {
            break;
        }
        code.support.push(best_j);

        let cols: Vec<&[f64]> = code.support.iter().map(|&j| columns[j].values()).collect();
        coeffs = least_squares(&cols, z.values());
        for (i, v) in residual.iter_mut().enumerate() {
            let mut rec = 0.0;
            for (c, col) in coeffs.iter().zip(&cols) {
                rec += c * col[i];
            }
            *v = z.values()[i] - rec;
        }
        let r = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
        code.residual = r;
        code.residual_history.push(r);
    }

    for (&j, &c) in code.support.iter().zip(&coeffs) {
        code.coefficients[j] = c;
    }
    Ok(code)
}

/// Least-squares coefficients for `cols * w ~= target` via the normal
/// equations, retried with a small ridge when rank-deficient.
fn least_squares(cols: &[&[f64]], target: &[f64]) -> Vec<f64> {
    let n = cols.len();
    let mut gram = vec![0.0f64; n * n];
    let mut rhs = vec![0.0f64; n];
    for i in 0..n {
        for j in i..n {
            let g: f64 = cols[i].iter().zip(cols[j]).map(|(a, b)| a * b).sum();
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
        rhs[i] = cols[i].iter().zip(target).map(|(a, b)| a * b).sum();
    }
    match solve_spd(&gram, &rhs, n) {
        Some(w) => w,
        None => {
            let mut ridged = gram;
            for i in 0..n {
                ridged[i * n + i] += RIDGE;
            }
            solve_spd(&ridged, &rhs, n).unwrap_or_else(|| vec![0.0; n])
        }
    }
}

/// Cholesky solve of a symmetric positive-definite system; None when a pivot
/// collapses.
fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 1e-14 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// Closed-form frame-to-metaframe distance on a fixed support:
/// 2 - 2*||P z|| with P the orthogonal projection onto the span of the
/// selected columns, clamped to [0, 2].
///
/// For a single column this equals 2 - 2*|<z, x>|; the sign is dropped
/// because the optimal reconstruction direction is free in the span.
pub fn frame_to_metaframe(z: &FrameVector, selected: &[&FrameVector]) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::InvalidInput("empty support".into()));
    }
    let k = z.dim();
    for c in selected {
        if c.dim() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: c.dim(),
            });
        }
    }
    let cols: Vec<&[f64]> = selected.iter().map(|c| c.values()).collect();
    let n = cols.len();
    let mut rhs = vec![0.0f64; n];
    for (i, col) in cols.iter().enumerate() {
        rhs[i] = col.iter().zip(z.values()).map(|(a, b)| a * b).sum();
    }
    let w = least_squares(&cols, z.values());
    // ||P z||^2 = <z, X w> with w the normal-equation solution.
    let proj_sq: f64 = rhs.iter().zip(&w).map(|(b, c)| b * c).sum();
    let proj = proj_sq.clamp(0.0, 1.0).sqrt();
    Ok((2.0 - 2.0 * proj).clamp(0.0, 2.0))
}
