use serde::{Deserialize, Serialize};

use crate::engine::EventCounts;

/// One evaluation on a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Curriculum stage (0 outside curricula).
    pub stage: usize,
    /// Training episodes completed before the evaluation.
    pub episode: u64,
    pub opponent: String,
    pub mean_score: f64,
    pub counts: EventCounts,
}

/// Points of `curve` against one opponent, in order.
pub fn series<'a>(curve: &'a [CurvePoint], opponent: &'a str) -> impl Iterator<Item = &'a CurvePoint> {
    curve.iter().filter(move |p| p.opponent == opponent)
}

/// First episode at which the score has flattened: the mean over the last
/// `window` points differs from the mean over the `window` points before
/// them by at most `threshold`. `None` if the curve never settles.
pub fn plateau_episode(points: &[(u64, f64)], window: usize, threshold: f64) -> Option<u64> {
    if window == 0 {
        return None;
    }
    let mean = |xs: &[(u64, f64)]| xs.iter().map(|p| p.1).sum::<f64>() / xs.len() as f64;
    (2 * window..=points.len()).find_map(|end| {
        let recent = &points[end - window..end];
        let before = &points[end - 2 * window..end - window];
        ((mean(recent) - mean(before)).abs() <= threshold).then(|| points[end - 1].0)
    })
}
