//! Frame-to-metaframe distance used by all recognition grids: OMP support
//! selection followed by the closed-form projection distance, with optional
//! pooling of neighboring metaframes of the same template.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{frame_to_metaframe, sparse_code};
use crate::templates::{subsample_indices, ClassTemplate};
use crate::types::FrameVector;

/// Distance assigned when either side carries no usable content.
pub const MAX_DISTANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceConfig {
    /// Residual-norm stopping threshold of the greedy support selection.
    pub gamma: f64,
    /// Support size cap (further capped by the column count and dimension).
    pub max_support: usize,
    /// Symmetric metaframe pooling window; must be odd.
    pub w_meta: usize,
    /// Metaframes larger than this are uniformly subsampled before coding.
    pub null_max_frames: usize,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            gamma: 0.05,
            max_support: 8,
            w_meta: 1,
            null_max_frames: 512,
        }
    }
}

impl DistanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma < 0.0 {
            return Err(Error::InvalidInput("gamma must be >= 0".into()));
        }
        if self.max_support < 1 {
            return Err(Error::InvalidInput("max_support must be >= 1".into()));
        }
        if self.w_meta < 1 || self.w_meta % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "w_meta must be odd and >= 1, got {}",
                self.w_meta
            )));
        }
        if self.null_max_frames < 1 {
            return Err(Error::InvalidInput("null_max_frames must be >= 1".into()));
        }
        Ok(())
    }
}

/// Distance between a test frame and an explicit set of metaframe columns.
pub fn metaframe_distance(
    z: &FrameVector,
    frames: &[&FrameVector],
    cfg: &DistanceConfig,
) -> Result<f64> {
    if z.is_empty_frame() {
        return Ok(MAX_DISTANCE);
    }
    let columns: Vec<&FrameVector> = frames
        .iter()
        .copied()
        .filter(|f| !f.is_empty_frame())
        .collect();
    if columns.is_empty() {
        return Ok(MAX_DISTANCE);
    }
    let columns: Vec<&FrameVector> = if columns.len() > cfg.null_max_frames {
        subsample_indices(columns.len(), cfg.null_max_frames)
            .into_iter()
            .map(|i| columns[i])
            .collect()
    } else {
        columns
    };
    let code = sparse_code(z, &columns, cfg.gamma, cfg.max_support)?;
    if code.support.is_empty() {
        return Ok(MAX_DISTANCE);
    }
    let selected: Vec<&FrameVector> = code.support.iter().map(|&j| columns[j]).collect();
    frame_to_metaframe(z, &selected)
}

/// Pooled distance against metaframes `t' - h ..= t' + h` of one template
/// (h = (w_meta - 1) / 2), clamped to the template.
pub fn pooled_distance(
    z: &FrameVector,
    template: &ClassTemplate,
    t_prime: usize,
    cfg: &DistanceConfig,
) -> Result<f64> {
    cfg.validate()?;
    if t_prime < 1 || t_prime > template.len() {
        return Err(Error::InvalidInput(format!(
            "metaframe index {t_prime} outside [1, {}]",
            template.len()
        )));
    }
    let half = (cfg.w_meta - 1) / 2;
    let lo = t_prime.saturating_sub(half).max(1);
    let hi = (t_prime + half).min(template.len());
    let mut union: Vec<&FrameVector> = Vec::new();
    for tp in lo..=hi {
        union.extend(template.metaframe(tp).frames().iter());
    }
    metaframe_distance(z, &union, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::{ClassTemplate, Metaframe};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(values: Vec<f64>) -> FrameVector {
        FrameVector::unit(values)
    }

    fn template_from(frames: Vec<Vec<FrameVector>>) -> ClassTemplate {
        let metaframes = frames
            .into_iter()
            .map(|f| {
                let n = f.len();
                Metaframe::new(f, vec![(0, 0); n]).unwrap()
            })
            .collect();
        ClassTemplate::new(1, metaframes, 1, 100, false, false).unwrap()
    }

    #[test]
    fn w_meta_one_matches_single_metaframe() {
        let cfg = DistanceConfig { gamma: 0.0, ..Default::default() };
        let t = template_from(vec![
            vec![unit(vec![1.0, 0.0, 0.0])],
            vec![unit(vec![0.0, 1.0, 0.0])],
        ]);
        let z = unit(vec![0.0, 1.0, 0.0]);
        let pooled = pooled_distance(&z, &t, 2, &cfg).unwrap();
        let direct =
            metaframe_distance(&z, &[&t.metaframe(2).frames()[0]], &cfg).unwrap();
        assert_abs_diff_eq!(pooled, direct, epsilon = 1e-12);
    }

    #[test]
    fn saturated_window_ignores_position() {
        let cfg = DistanceConfig { w_meta: 9, gamma: 0.0, ..Default::default() };
        let t = template_from(vec![
            vec![unit(vec![1.0, 0.0, 0.0])],
            vec![unit(vec![0.0, 1.0, 0.0])],
            vec![unit(vec![0.0, 0.0, 1.0])],
        ]);
        let z = unit(vec![0.6, 0.0, 0.8]);
        let d1 = pooled_distance(&z, &t, 1, &cfg).unwrap();
        let d2 = pooled_distance(&z, &t, 2, &cfg).unwrap();
        let d3 = pooled_distance(&z, &t, 3, &cfg).unwrap();
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-12);
        assert_abs_diff_eq!(d2, d3, epsilon = 1e-12);
    }

    #[test]
    fn pooling_never_hurts_exact_projection() {
        // With gamma 0 and a support cap covering the union, a larger
        // dictionary can only improve the projection.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let dim = 6;
            let rand_unit = |rng: &mut ChaCha8Rng| {
                unit((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            };
            let t = template_from(vec![
                vec![rand_unit(&mut rng)],
                vec![rand_unit(&mut rng), rand_unit(&mut rng)],
                vec![rand_unit(&mut rng)],
            ]);
            let z = rand_unit(&mut rng);
            let narrow = DistanceConfig { gamma: 0.0, max_support: 8, w_meta: 1, ..Default::default() };
            let wide = DistanceConfig { gamma: 0.0, max_support: 8, w_meta: 3, ..Default::default() };
            let d_narrow = pooled_distance(&z, &t, 2, &narrow).unwrap();
            let d_wide = pooled_distance(&z, &t, 2, &wide).unwrap();
            assert!(d_wide <= d_narrow + 1e-9, "pooled {d_wide} > unpooled {d_narrow}");
        }
    }

    #[test]
    fn empty_test_frame_maxes_out() {
        let cfg = DistanceConfig::default();
        let t = template_from(vec![vec![unit(vec![1.0, 0.0])]]);
        let (zero, _) = FrameVector::from_raw(vec![0.0, 0.0]).unwrap();
        assert_eq!(pooled_distance(&zero, &t, 1, &cfg).unwrap(), MAX_DISTANCE);
    }

    #[test]
    fn even_w_meta_rejected() {
        let cfg = DistanceConfig { w_meta: 2, ..Default::default() };
        let t = template_from(vec![vec![unit(vec![1.0, 0.0])]]);
        let z = unit(vec![1.0, 0.0]);
        assert!(pooled_distance(&z, &t, 1, &cfg).is_err());
    }
}
