use super::Heatmap;
use crate::geometry::WorldPoint;

/// Cells at or above `threshold` that are 3x3 local maxima, kept greedily
/// in descending score so that no two kept peaks are closer than
/// `min_dist` meters. Peaks are reported at cell centers.
pub fn extract_peaks(hm: &Heatmap, threshold: f64, min_dist: f64) -> Vec<WorldPoint> {
    let (rows, cols) = (hm.spec.n_rows, hm.spec.n_cols);
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = hm.values[r * cols + c];
            if v <= 0.0 || v < threshold {
                continue;
            }
            let is_max = (r.saturating_sub(1)..=(r + 1).min(rows - 1))
                .flat_map(|rr| (c.saturating_sub(1)..=(c + 1).min(cols - 1)).map(move |cc| (rr, cc)))
                .all(|(rr, cc)| hm.values[rr * cols + cc] <= v);
            if is_max {
                candidates.push((v, r * cols + c));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut kept: Vec<WorldPoint> = Vec::new();
    for (_, i) in candidates {
        let p = hm.spec.cell_center(i / cols, i % cols);
        if kept.iter().all(|k| k.ground_distance(&p) >= min_dist) {
            kept.push(p);
        }
    }
    kept
}

/// Moves each peak to the highest cell of `fine` within `radius` cells of
/// it. Ties keep the cell nearest the original peak.
pub fn refine_peaks(peaks: &[WorldPoint], fine: &Heatmap, radius: usize) -> Vec<WorldPoint> {
    let spec = fine.spec;
    peaks
        .iter()
        .map(|p| {
            let Some((r0, c0)) = spec.cell_of(p.x(), p.y()) else {
                return *p;
            };
            let mut best = (fine.get(r0, c0), 0usize, r0, c0);
            for r in r0.saturating_sub(radius)..=(r0 + radius).min(spec.n_rows - 1) {
                for c in c0.saturating_sub(radius)..=(c0 + radius).min(spec.n_cols - 1) {
                    let v = fine.get(r, c);
                    let d2 = r.abs_diff(r0).pow(2) + c.abs_diff(c0).pow(2);
                    if v > best.0 || (v == best.0 && d2 < best.1) {
                        best = (v, d2, r, c);
                    }
                }
            }
            spec.cell_center(best.2, best.3)
        })
        .collect()
}
