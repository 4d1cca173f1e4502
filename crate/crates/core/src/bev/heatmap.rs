use serde::{Deserialize, Serialize};

use super::{GridSpec, PillarGrid};
use crate::geometry::WorldPoint;

/// Scalar map over a grid with values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.n_cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.spec.n_cols + col] = v;
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Flat indices of the cells holding the maximum value.
    pub fn argmax_set(&self) -> Vec<usize> {
        let m = self.max();
        if m <= 0.0 {
            return Vec::new();
        }
        (0..self.values.len()).filter(|&i| self.values[i] == m).collect()
    }

    pub fn value_at(&self, p: &WorldPoint) -> Option<f64> {
        self.spec.index_of(p.x(), p.y()).map(|i| self.values[i])
    }
}

/// Weights of the deterministic occupancy score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreWeights {
    /// Weight of the fraction of views whose clouds reach the pillar.
    pub views: f64,
    /// Weight of a standing point landing in the pillar.
    pub anchor: f64,
    /// Weight of the saturated point density.
    pub density: f64,
    /// Point count at which the density term saturates.
    pub density_ref: f64,
    /// Blur standard deviation in cells; 0 disables blurring.
    pub blur_sigma: f64,
    /// Blur of the finer map that peaks are moved to after detection, in
    /// cells; 0 reports peaks where the coarse map has them.
    pub refine_sigma: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            views: 0.5,
            anchor: 0.4,
            density: 0.1,
            density_ref: 50.0,
            blur_sigma: 8.0,
            refine_sigma: 2.0,
        }
    }
}

impl ScoreWeights {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            views: self.views * k,
            anchor: self.anchor * k,
            density: self.density * k,
            ..*self
        }
    }
}

/// Per-pillar occupancy score, blurred and normalized so the maximum is 1.
///
/// The raw score of a pillar is
/// `views * seen_by / n_views + anchor * min(anchor_hits, 1) + density * min(count / density_ref, 1)`.
pub fn score_occupancy(pillars: &PillarGrid, weights: &ScoreWeights) -> Heatmap {
    smoothed(raw_score(pillars, weights), weights.blur_sigma)
}

/// The same score blurred with `refine_sigma` instead of `blur_sigma`.
pub fn refinement_map(pillars: &PillarGrid, weights: &ScoreWeights) -> Heatmap {
    smoothed(raw_score(pillars, weights), weights.refine_sigma)
}

fn raw_score(pillars: &PillarGrid, weights: &ScoreWeights) -> Heatmap {
    let mut hm = Heatmap::zeros(pillars.spec);
    let n_views = pillars.n_views.max(1) as f64;
    for (i, s) in pillars.occupied() {
        let views = f64::from(s.view_count()) / n_views;
        let anchor = f64::from(s.anchor_hits.min(1));
        let density = if weights.density_ref > 0.0 {
            (f64::from(s.point_count) / weights.density_ref).min(1.0)
        } else {
            0.0
        };
        hm.values[i] = weights.views * views + weights.anchor * anchor + weights.density * density;
    }
    hm
}

fn smoothed(mut hm: Heatmap, sigma: f64) -> Heatmap {
    if sigma > 0.0 {
        gaussian_blur(&mut hm, sigma);
    }
    let max = hm.max();
    if max > 0.0 {
        for v in &mut hm.values {
            *v = (*v / max).clamp(0.0, 1.0);
        }
    } else {
        hm.values.iter_mut().for_each(|v| *v = 0.0);
    }
    hm
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with a unit-sum kernel of radius `ceil(3 sigma)`
/// cells; cells beyond the border count as zero.
pub fn gaussian_blur(hm: &mut Heatmap, sigma: f64) {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let (rows, cols) = (hm.spec.n_rows, hm.spec.n_cols);
    let mut tmp = vec![0.0; hm.values.len()];

    // Occupied rows only: most of the grid is empty.
    for r in 0..rows {
        let src = &hm.values[r * cols..(r + 1) * cols];
        if src.iter().all(|&v| v == 0.0) {
            continue;
        }
        let dst = &mut tmp[r * cols..(r + 1) * cols];
        for (c, &v) in src.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let lo = (c as i64 - radius).max(0) as usize;
            let hi = ((c as i64 + radius) as usize).min(cols - 1);
            for (cc, d) in (lo..=hi).zip(dst[lo..=hi].iter_mut()) {
                *d += v * kernel[(cc as i64 - c as i64 + radius) as usize];
            }
        }
    }
    hm.values.iter_mut().for_each(|v| *v = 0.0);
    for r in 0..rows {
        let src = &tmp[r * cols..(r + 1) * cols];
        if src.iter().all(|&v| v == 0.0) {
            continue;
        }
        let lo = (r as i64 - radius).max(0) as usize;
        let hi = ((r as i64 + radius) as usize).min(rows - 1);
        for rr in lo..=hi {
            let w = kernel[(rr as i64 - r as i64 + radius) as usize];
            let dst = &mut hm.values[rr * cols..(rr + 1) * cols];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
}

/// Ground-truth map: each position splats `exp(-d^2 / (2 sigma^2))`, with
/// `d` in cells from the position's cell, over a `(6 sigma + 1)^2` window.
/// Overlapping splats combine by maximum.
pub fn encode_gaussian_gt(positions: &[WorldPoint], spec: &GridSpec, sigma: f64) -> Heatmap {
    assert!(sigma > 0.0, "gaussian sigma must be positive");
    let mut hm = Heatmap::zeros(*spec);
    let radius = (3.0 * sigma).ceil() as i64;
    let (rows, cols) = (spec.n_rows as i64, spec.n_cols as i64);
    for p in positions {
        let col = ((p.x() - spec.origin_x) / spec.cell_size_x).floor() as i64;
        let row = ((p.y() - spec.origin_y) / spec.cell_size_y).floor() as i64;
        for dr in -radius..=radius {
            let r = row + dr;
            if r < 0 || r >= rows {
                continue;
            }
            for dc in -radius..=radius {
                let c = col + dc;
                if c < 0 || c >= cols {
                    continue;
                }
                let d2 = (dr * dr + dc * dc) as f64;
                let v = (-d2 / (2.0 * sigma * sigma)).exp();
                let cell = &mut hm.values[(r * cols + c) as usize];
                *cell = cell.max(v);
            }
        }
    }
    hm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bev::bin_clouds;
    use crate::cardboard::{CardboardCloud, CloudPoint, NEUTRAL_GRAY};
    use proptest::prelude::*;

    fn small() -> GridSpec {
        GridSpec::new(0.0, 0.0, 0.1, 0.1, 40, 50).unwrap()
    }

    #[test]
    fn empty_grid_scores_zero() {
        let hm = score_occupancy(&PillarGrid::empty(small(), 3), &ScoreWeights::default());
        assert!(hm.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn score_is_normalized() {
        let cloud = CardboardCloud {
            pedestrian_id: None,
            view: Some(1),
            points: (0..30)
                .map(|i| CloudPoint {
                    position: WorldPoint::new(1.0 + 0.05 * i as f64, 2.0, 0.5),
                    color: NEUTRAL_GRAY,
                })
                .collect(),
            anchor: None,
        };
        let hm = score_occupancy(&bin_clouds(&[cloud], &small(), 3), &ScoreWeights::default());
        assert!((hm.max() - 1.0).abs() < 1e-12);
        assert!(hm.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn blur_preserves_mass_away_from_border() {
        let mut hm = Heatmap::zeros(small());
        hm.set(20, 25, 1.0);
        gaussian_blur(&mut hm, 2.0);
        let total: f64 = hm.values.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(hm.argmax_set(), vec![20 * 50 + 25]);
        assert!((hm.get(20, 24) - hm.get(20, 26)).abs() < 1e-15);
        assert!((hm.get(19, 25) - hm.get(21, 25)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_center_and_sigma() {
        let spec = small();
        let p = spec.cell_center(20, 25);
        let hm = encode_gaussian_gt(&[p], &spec, 3.0);
        assert_eq!(hm.get(20, 25), 1.0);
        assert!((hm.get(20, 28) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((hm.get(23, 25) - (-0.5f64).exp()).abs() < 1e-12);
        // window is 6 sigma + 1 wide
        assert!(hm.get(20, 34) > 0.0);
        assert_eq!(hm.get(20, 35), 0.0);
        assert_eq!(encode_gaussian_gt(&[p, p], &spec, 3.0), hm);
    }

    proptest! {
        #[test]
        fn gaussian_gt_reflection_symmetry(
            cells in prop::collection::vec((0usize..40, 0usize..50), 1..5),
            sigma in 0.5f64..4.0,
        ) {
            let spec = small();
            let pts: Vec<WorldPoint> = cells.iter().map(|&(r, c)| spec.cell_center(r, c)).collect();
            let mirrored: Vec<WorldPoint> = cells.iter().map(|&(r, c)| spec.cell_center(r, 49 - c)).collect();
            let a = encode_gaussian_gt(&pts, &spec, sigma);
            let b = encode_gaussian_gt(&mirrored, &spec, sigma);
            for r in 0..40 {
                for c in 0..50 {
                    prop_assert_eq!(a.get(r, c), b.get(r, 49 - c));
                }
            }
            prop_assert!(a.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
