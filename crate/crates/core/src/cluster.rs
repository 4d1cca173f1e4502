//! Geometry-only baseline: fuse per-view standing points on the ground by
//! greedy distance clustering.

use std::cmp::Ordering;

use crate::geometry::WorldPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundObservation {
    pub view: usize,
    pub position: WorldPoint,
    pub confidence: f64,
}

fn observation_order(a: &GroundObservation, b: &GroundObservation) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.view.cmp(&b.view))
        .then(a.position.x().total_cmp(&b.position.x()))
        .then(a.position.y().total_cmp(&b.position.y()))
}

/// Greedy agglomeration in descending confidence. Each unassigned
/// observation seeds a cluster that absorbs unassigned observations within
/// `radius` of the seed, nearest first and at most one per view. Clusters
/// backed by at least `min_views` views emit their centroid.
pub fn cluster_standing_points(obs: &[GroundObservation], radius: f64, min_views: usize) -> Vec<WorldPoint> {
    assert!(radius > 0.0, "cluster radius must be positive");
    let mut order: Vec<&GroundObservation> = obs.iter().collect();
    order.sort_by(|a, b| observation_order(a, b));

    let mut assigned = vec![false; order.len()];
    let mut centroids = Vec::new();
    for seed_idx in 0..order.len() {
        if assigned[seed_idx] {
            continue;
        }
        assigned[seed_idx] = true;
        let seed = order[seed_idx];
        let mut members = vec![seed];
        let mut views: u64 = 1 << (seed.view % 64);

        let mut near: Vec<(f64, usize)> = (seed_idx + 1..order.len())
            .filter(|&j| !assigned[j])
            .map(|j| (seed.position.ground_distance(&order[j].position), j))
            .filter(|&(d, _)| d <= radius)
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, j) in near {
            let bit = 1 << (order[j].view % 64);
            if views & bit != 0 {
                continue;
            }
            views |= bit;
            assigned[j] = true;
            members.push(order[j]);
        }

        if views.count_ones() as usize >= min_views {
            let n = members.len() as f64;
            let x = members.iter().map(|m| m.position.x()).sum::<f64>() / n;
            let y = members.iter().map(|m| m.position.y()).sum::<f64>() / n;
            centroids.push(WorldPoint::ground(x, y));
        }
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(view: usize, x: f64, y: f64, confidence: f64) -> GroundObservation {
        GroundObservation {
            view,
            position: WorldPoint::ground(x, y),
            confidence,
        }
    }

    #[test]
    fn one_pedestrian_many_views() {
        let o: Vec<_> = (0..7).map(|v| obs(v, 3.0, 4.0, 1.0)).collect();
        let c = cluster_standing_points(&o, 0.5, 2);
        assert_eq!(c, vec![WorldPoint::ground(3.0, 4.0)]);
        assert!(cluster_standing_points(&o, 0.5, 8).is_empty());
    }

    #[test]
    fn separated_pedestrians() {
        let mut o = Vec::new();
        for v in 0..3 {
            o.push(obs(v, 0.0, 0.0, 0.9));
            o.push(obs(v, 2.0, 0.0, 0.8));
        }
        let c = cluster_standing_points(&o, 0.5, 2);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn one_observation_per_view() {
        // two observations from the same view never merge
        let o = vec![obs(0, 0.0, 0.0, 1.0), obs(0, 0.1, 0.0, 0.9)];
        assert_eq!(cluster_standing_points(&o, 0.5, 1).len(), 2);
        assert!(cluster_standing_points(&o, 0.5, 2).is_empty());
    }

    #[test]
    fn output_is_independent_of_input_order() {
        let mut o = vec![
            obs(0, 1.0, 1.0, 0.5),
            obs(1, 1.2, 1.1, 0.5),
            obs(2, 1.1, 0.8, 0.7),
            obs(0, 5.0, 5.0, 0.9),
            obs(1, 5.3, 5.0, 0.9),
        ];
        let a = cluster_standing_points(&o, 0.5, 2);
        o.reverse();
        assert_eq!(cluster_standing_points(&o, 0.5, 2), a);
        assert_eq!(a.len(), 2);
    }
}
