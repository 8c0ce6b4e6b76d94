//! Confidence-gated routing simulators.
//!
//! A query whose confidence is at least the threshold is answered directly
//! (parametric answer, or the small model); otherwise it falls back (retrieval
//! augmentation, or the large model). Fallback cost is additive: the direct
//! attempt is paid for on every query.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingRecord {
    pub query_id: String,
    pub confidence: f64,
    pub correct_direct: bool,
    pub correct_fallback: bool,
    pub cost_direct: f64,
    pub cost_fallback: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub accuracy: f64,
    pub fallback_rate: f64,
    pub expected_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPoint {
    pub point: SweepPoint,
    /// False when no threshold reaches the baseline accuracy; `point` is then
    /// the most accurate one.
    pub meets_baseline: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingReport {
    pub points: Vec<SweepPoint>,
    pub optimal: OptimalPoint,
    pub direct_only_accuracy: f64,
    pub fallback_only_accuracy: f64,
}

fn check(records: &[RoutingRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::domain("routing needs at least one record"));
    }
    for r in records {
        if !r.confidence.is_finite() {
            return Err(Error::domain(format!("record {}: non-finite confidence", r.query_id)));
        }
        if !(r.cost_direct >= 0.0) || !(r.cost_fallback >= 0.0) {
            return Err(Error::domain(format!("record {}: negative cost", r.query_id)));
        }
    }
    Ok(())
}

/// Evaluates every distinct threshold: `-inf`, each observed confidence in
/// ascending order, then `+inf`.
pub fn sweep(records: &[RoutingRecord]) -> Result<Vec<SweepPoint>> {
    check(records)?;
    let mut sorted: Vec<&RoutingRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));
    let m = records.len() as f64;

    let direct_correct: usize = sorted.iter().filter(|r| r.correct_direct).count();
    let direct_cost: f64 = sorted.iter().map(|r| r.cost_direct).sum();

    // Running totals over the fallback prefix (the lowest confidences).
    let mut fb_count = 0usize;
    let mut fb_correct = 0usize;
    let mut prefix_direct_correct = 0usize;
    let mut fb_cost = 0.0;
    let point = |threshold: f64, fb_count: usize, fb_correct: usize, prefix_direct: usize, fb_cost: f64| SweepPoint {
        threshold,
        accuracy: (fb_correct + direct_correct - prefix_direct) as f64 / m,
        fallback_rate: fb_count as f64 / m,
        expected_cost: (direct_cost + fb_cost) / m,
    };

    let mut points = vec![point(f64::NEG_INFINITY, 0, 0, 0, 0.0)];
    let mut i = 0;
    while i < sorted.len() {
        let tau = sorted[i].confidence;
        points.push(point(tau, fb_count, fb_correct, prefix_direct_correct, fb_cost));
        while i < sorted.len() && sorted[i].confidence == tau {
            let r = sorted[i];
            fb_count += 1;
            fb_correct += usize::from(r.correct_fallback);
            prefix_direct_correct += usize::from(r.correct_direct);
            fb_cost += r.cost_fallback;
            i += 1;
        }
    }
    points.push(point(f64::INFINITY, fb_count, fb_correct, prefix_direct_correct, fb_cost));
    Ok(points)
}

/// The cheapest point that keeps at least `baseline` accuracy: minimal
/// fallback rate, then lower expected cost, then lower threshold.
pub fn optimal_point(points: &[SweepPoint], baseline: f64) -> Result<OptimalPoint> {
    if points.is_empty() {
        return Err(Error::domain("empty sweep"));
    }
    let qualifying = points
        .iter()
        .filter(|p| p.accuracy >= baseline - 1e-12)
        .min_by(|a, b| {
            a.fallback_rate
                .total_cmp(&b.fallback_rate)
                .then(a.expected_cost.total_cmp(&b.expected_cost))
                .then(a.threshold.total_cmp(&b.threshold))
        });
    if let Some(p) = qualifying {
        return Ok(OptimalPoint {
            point: *p,
            meets_baseline: true,
        });
    }
    let best = points
        .iter()
        .min_by(|a, b| {
            b.accuracy
                .total_cmp(&a.accuracy)
                .then(a.fallback_rate.total_cmp(&b.fallback_rate))
                .then(a.threshold.total_cmp(&b.threshold))
        })
        .copied()
        .unwrap();
    Ok(OptimalPoint {
        point: best,
        meets_baseline: false,
    })
}

/// Sweep plus the optimal point against the always-fallback baseline.
pub fn simulate(records: &[RoutingRecord]) -> Result<RoutingReport> {
    let points = sweep(records)?;
    let direct_only_accuracy = points[0].accuracy;
    let fallback_only_accuracy = points[points.len() - 1].accuracy;
    let optimal = optimal_point(&points, fallback_only_accuracy)?;
    Ok(RoutingReport {
        points,
        optimal,
        direct_only_accuracy,
        fallback_only_accuracy,
    })
}

/// Small/large model cascade with fixed per-query costs for each model.
pub fn cascade_sim(records: &[RoutingRecord], small_cost: f64, large_cost: f64) -> Result<RoutingReport> {
    if !(small_cost >= 0.0) || !(large_cost >= 0.0) {
        return Err(Error::domain("model costs must be nonnegative"));
    }
    let priced: Vec<RoutingRecord> = records
        .iter()
        .map(|r| RoutingRecord {
            cost_direct: small_cost,
            cost_fallback: large_cost,
            ..r.clone()
        })
        .collect();
    simulate(&priced)
}
