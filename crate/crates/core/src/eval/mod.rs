//! CLEAR-style detection metrics on the ground plane: distance-gated
//! one-to-one matching, MODA, MODP, precision and recall, and the border
//! mask applied to both predictions and ground truth.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::{GroundRect, WorldPoint};

pub mod assignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Maximum ground distance for a true positive, meters.
    pub match_radius: f64,
    /// Regions excluded from both predictions and ground truth.
    pub mask: Vec<GroundRect>,
    /// Optimal assignment when true, greedy nearest-first otherwise.
    pub use_hungarian: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            match_radius: 0.5,
            mask: Vec::new(),
            use_hungarian: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub pred: usize,
    pub gt: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub n_pred: usize,
    pub n_gt: usize,
}

impl Matching {
    pub fn total_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.distance).sum()
    }

    /// Assignment objective: more matches first, then less total distance.
    pub fn objective(&self) -> (std::cmp::Reverse<usize>, f64) {
        (std::cmp::Reverse(self.pairs.len()), self.total_distance())
    }
}

/// Removes points inside any of the mask rectangles.
pub fn apply_mask(points: &[WorldPoint], mask: &[GroundRect]) -> Vec<WorldPoint> {
    points
        .iter()
        .filter(|p| !mask.iter().any(|r| r.contains(p)))
        .copied()
        .collect()
}

/// One-to-one matching of predictions to ground truth; pairs farther than
/// the match radius are never matched.
///
/// The optimal matcher maximizes the number of matches and, among those,
/// minimizes the summed distance. The greedy matcher takes pairs in order
/// of increasing distance.
pub fn match_points(pred: &[WorldPoint], gt: &[WorldPoint], cfg: &EvalConfig) -> Matching {
    let pairs = if cfg.use_hungarian {
        hungarian_pairs(pred, gt, cfg.match_radius)
    } else {
        greedy_pairs(pred, gt, cfg.match_radius)
    };
    Matching {
        pairs,
        n_pred: pred.len(),
        n_gt: gt.len(),
    }
}

fn hungarian_pairs(pred: &[WorldPoint], gt: &[WorldPoint], radius: f64) -> Vec<MatchedPair> {
    if pred.is_empty() || gt.is_empty() {
        return Vec::new();
    }
    // Every allowed pair earns a bonus larger than any achievable distance
    // sum, so cardinality dominates; forbidden pairs cost nothing and are
    // discarded afterwards.
    let bonus = radius * (pred.len().min(gt.len()) as f64 + 1.0);
    let cost: Vec<Vec<f64>> = pred
        .iter()
        .map(|p| {
            gt.iter()
                .map(|g| {
                    let d = p.ground_distance(g);
                    if d <= radius {
                        d - bonus
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut pairs: Vec<MatchedPair> = assignment::solve(&cost)
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| {
            let j = j?;
            let distance = pred[i].ground_distance(&gt[j]);
            (distance <= radius).then_some(MatchedPair {
                pred: i,
                gt: j,
                distance,
            })
        })
        .collect();
    pairs.sort_by_key(|p| (p.pred, p.gt));
    pairs
}

fn greedy_pairs(pred: &[WorldPoint], gt: &[WorldPoint], radius: f64) -> Vec<MatchedPair> {
    let mut candidates: Vec<MatchedPair> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let distance = p.ground_distance(g);
            if distance <= radius {
                candidates.push(MatchedPair { pred: i, gt: j, distance });
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.pred.cmp(&b.pred))
            .then(a.gt.cmp(&b.gt))
    });
    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if !pred_used[c.pred] && !gt_used[c.gt] {
            pred_used[c.pred] = true;
            gt_used[c.gt] = true;
            pairs.push(c);
        }
    }
    pairs.sort_by_key(|p| (p.pred, p.gt));
    pairs
}

/// Raw per-frame counts; metrics are derived from (summed) counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub gt: usize,
    /// Sum of `1 - d / r` over true positives.
    pub precision_sum: f64,
}

impl Counts {
    pub fn from_matching(m: &Matching, cfg: &EvalConfig) -> Self {
        let tp = m.pairs.len();
        Self {
            tp,
            fp: m.n_pred - tp,
            fn_: m.n_gt - tp,
            gt: m.n_gt,
            precision_sum: m
                .pairs
                .iter()
                .map(|p| 1.0 - p.distance / cfg.match_radius)
                .sum(),
        }
    }

    pub fn add(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.gt += other.gt;
        self.precision_sum += other.precision_sum;
    }

    /// `1 - (FN + FP) / GT`; with no ground truth, 1 if there are no false
    /// positives and `-FP` otherwise.
    pub fn moda(&self) -> f64 {
        if self.gt > 0 {
            1.0 - (self.fn_ + self.fp) as f64 / self.gt as f64
        } else if self.fp == 0 {
            1.0
        } else {
            -(self.fp as f64)
        }
    }

    pub fn modp(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.precision_sum / self.tp as f64
        }
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: usize,
    #[serde(flatten)]
    pub counts: Counts,
    pub moda: f64,
    pub modp: f64,
    pub precision: f64,
    pub recall: f64,
}

impl FrameMetrics {
    fn new(frame: usize, counts: Counts) -> Self {
        Self {
            frame,
            counts,
            moda: counts.moda(),
            modp: counts.modp(),
            precision: counts.precision(),
            recall: counts.recall(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub gt: usize,
    pub moda: f64,
    pub modp: f64,
    pub precision: f64,
    pub recall: f64,
    pub frames: Vec<FrameMetrics>,
}

impl EvalReport {
    /// Aggregates frames by summing their counts.
    pub fn from_frames(frames: Vec<FrameMetrics>) -> Self {
        let mut total = Counts::default();
        for f in &frames {
            total.add(&f.counts);
        }
        Self {
            tp: total.tp,
            fp: total.fp,
            fn_: total.fn_,
            gt: total.gt,
            moda: total.moda(),
            modp: total.modp(),
            precision: total.precision(),
            recall: total.recall(),
            frames,
        }
    }

    /// CSV with one row per frame: `frame,TP,FP,FN,MODA,MODP,P,R`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "frame,TP,FP,FN,MODA,MODP,P,R")?;
        for f in &self.frames {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                f.frame, f.counts.tp, f.counts.fp, f.counts.fn_, f.moda, f.modp, f.precision, f.recall
            )?;
        }
        Ok(())
    }
}

/// Metrics of a single matched frame.
pub fn compute_metrics(matching: &Matching, cfg: &EvalConfig) -> EvalReport {
    EvalReport::from_frames(vec![FrameMetrics::new(0, Counts::from_matching(matching, cfg))])
}

/// Masks, matches and scores a sequence of `(predictions, ground truth)`
/// frames; the aggregate uses summed counts.
pub fn evaluate_frames(frames: &[(Vec<WorldPoint>, Vec<WorldPoint>)], cfg: &EvalConfig) -> EvalReport {
    let rows = frames
        .iter()
        .enumerate()
        .map(|(k, (pred, gt))| {
            let pred = apply_mask(pred, &cfg.mask);
            let gt = apply_mask(gt, &cfg.mask);
            FrameMetrics::new(k, Counts::from_matching(&match_points(&pred, &gt, cfg), cfg))
        })
        .collect();
    EvalReport::from_frames(rows)
}
