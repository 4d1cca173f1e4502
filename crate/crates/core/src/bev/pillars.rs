use std::collections::HashMap;

use rayon::prelude::*;

use super::GridSpec;
use crate::cardboard::CardboardCloud;

/// Views are tracked in a `u64` bitset.
pub const MAX_VIEWS: usize = 64;

/// Colors are accumulated as integers in units of `1 / COLOR_SCALE` so that
/// merging is exact and order-independent.
const COLOR_SCALE: f64 = 65535.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PillarStats {
    pub point_count: u32,
    pub view_mask: u64,
    color_sum: [u64; 3],
    /// Highest point in the pillar, `-inf` when empty.
    pub height_max: f64,
    pub anchor_hits: u32,
}

impl Default for PillarStats {
    fn default() -> Self {
        Self {
            point_count: 0,
            view_mask: 0,
            color_sum: [0; 3],
            height_max: f64::NEG_INFINITY,
            anchor_hits: 0,
        }
    }
}

impl PillarStats {
    fn add_point(&mut self, view: Option<usize>, z: f64, color: [f32; 3]) {
        self.point_count += 1;
        if let Some(v) = view {
            self.view_mask |= 1 << v;
        }
        for (sum, c) in self.color_sum.iter_mut().zip(color) {
            *sum += (f64::from(c).clamp(0.0, 1.0) * COLOR_SCALE).round() as u64;
        }
        self.height_max = self.height_max.max(z);
    }

    /// Associative, commutative merge.
    pub fn merge(&mut self, other: &PillarStats) {
        self.point_count += other.point_count;
        self.view_mask |= other.view_mask;
        for (a, b) in self.color_sum.iter_mut().zip(other.color_sum) {
            *a += b;
        }
        self.height_max = self.height_max.max(other.height_max);
        self.anchor_hits += other.anchor_hits;
    }

    pub fn view_count(&self) -> u32 {
        self.view_mask.count_ones()
    }

    pub fn mean_color(&self) -> [f64; 3] {
        if self.point_count == 0 {
            return [0.0; 3];
        }
        let n = f64::from(self.point_count) * COLOR_SCALE;
        self.color_sum.map(|s| s as f64 / n)
    }
}

/// Sparse pillar statistics over a grid; only occupied cells are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PillarGrid {
    pub spec: GridSpec,
    pub n_views: usize,
    cells: HashMap<usize, PillarStats>,
    /// Points that fell outside the grid.
    pub dropped_points: usize,
    pub binned_points: usize,
}

impl PillarGrid {
    pub fn empty(spec: GridSpec, n_views: usize) -> Self {
        Self {
            spec,
            n_views,
            cells: HashMap::new(),
            dropped_points: 0,
            binned_points: 0,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> PillarStats {
        self.cells
            .get(&(row * self.spec.n_cols + col))
            .copied()
            .unwrap_or_default()
    }

    /// Occupied cells as `(flat index, stats)`, in no particular order.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, &PillarStats)> {
        self.cells.iter().map(|(&i, s)| (i, s))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.len()
    }

    /// Merges another partial grid over the same spec.
    pub fn merge(&mut self, other: &PillarGrid) {
        debug_assert_eq!(self.spec, other.spec);
        for (&i, s) in &other.cells {
            self.cells.entry(i).or_default().merge(s);
        }
        self.dropped_points += other.dropped_points;
        self.binned_points += other.binned_points;
        self.n_views = self.n_views.max(other.n_views);
    }

    fn add_cloud(&mut self, cloud: &CardboardCloud) {
        for p in &cloud.points {
            match self.spec.index_of(p.position.x(), p.position.y()) {
                Some(i) => {
                    self.cells
                        .entry(i)
                        .or_default()
                        .add_point(cloud.view, p.position.z(), p.color);
                    self.binned_points += 1;
                }
                None => self.dropped_points += 1,
            }
        }
        if let Some(anchor) = &cloud.anchor {
            let s = &anchor.standing_world;
            if let Some(i) = self.spec.index_of(s.x(), s.y()) {
                self.cells.entry(i).or_default().anchor_hits += 1;
            }
        }
    }
}

/// Bins every cloud point into its ground cell; anchors of detection clouds
/// are counted in the cell of their standing point. Clouds without a view
/// add points but no view evidence.
///
/// # Panics
///
/// If a cloud's view index is not below `n_views` or `n_views` exceeds
/// [`MAX_VIEWS`].
pub fn bin_clouds(clouds: &[CardboardCloud], spec: &GridSpec, n_views: usize) -> PillarGrid {
    assert!(n_views <= MAX_VIEWS, "at most {MAX_VIEWS} views are supported");
    assert!(
        clouds.iter().all(|c| c.view.is_none_or(|v| v < n_views)),
        "cloud view index out of range"
    );
    clouds
        .par_iter()
        .fold(
            || PillarGrid::empty(*spec, n_views),
            |mut grid, cloud| {
                grid.add_cloud(cloud);
                grid
            },
        )
        .reduce(
            || PillarGrid::empty(*spec, n_views),
            |mut a, b| {
                a.merge(&b);
                a
            },
        )
}
