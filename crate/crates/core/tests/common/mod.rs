//! Brute-force reference implementations used by the integration suites.
//! Each one is written from the metric's definition, not from the crate's
//! implementation path.

#![allow(dead_code)]

use intconf::routing::RoutingRecord;

/// Counts ordered positive/negative pairs; ties count one half.
pub fn pair_count_auroc(confident: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi && !yj {
                pairs += 1.0;
                if confident[i] > confident[j] {
                    wins += 1.0;
                } else if confident[i] == confident[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn trapezoid(curve: &[f64]) -> f64 {
    let m = (curve.len() - 1) as f64;
    let mut area = 0.0;
    for j in 0..curve.len() - 1 {
        area += 0.5 * (curve[j] + curve[j + 1]) / m;
    }
    area
}

/// PRR from explicit rejection orders: every permutation consistent with
/// ascending confidence is enumerated and the resulting curves averaged.
pub fn enumerated_prr(confident: &[f64], labels: &[bool]) -> f64 {
    let m = labels.len();
    let errors = labels.iter().filter(|&&l| !l).count();
    let mut avg = vec![0.0; m + 1];
    let mut count = 0.0;
    for perm in permutations(m) {
        if perm.windows(2).any(|w| confident[w[0]] > confident[w[1]]) {
            continue;
        }
        for j in 0..=m {
            let retained_errors = perm[j..].iter().filter(|&&i| !labels[i]).count();
            avg[j] += retained_errors as f64 / m as f64;
        }
        count += 1.0;
    }
    for v in &mut avg {
        *v /= count;
    }
    let random: Vec<f64> = (0..=m)
        .map(|j| errors as f64 / m as f64 * (m - j) as f64 / m as f64)
        .collect();
    let oracle: Vec<f64> = (0..=m)
        .map(|j| if errors > j { (errors - j) as f64 / m as f64 } else { 0.0 })
        .collect();
    (trapezoid(&random) - trapezoid(&avg)) / (trapezoid(&random) - trapezoid(&oracle))
}

/// (accuracy, fallback_rate, expected_cost) with fallback iff confidence < tau.
pub fn route_at(records: &[RoutingRecord], tau: f64) -> (f64, f64, f64) {
    let m = records.len() as f64;
    let mut correct = 0.0;
    let mut fallbacks = 0.0;
    let mut cost = 0.0;
    for r in records {
        cost += r.cost_direct;
        if r.confidence >= tau {
            correct += if r.correct_direct { 1.0 } else { 0.0 };
        } else {
            fallbacks += 1.0;
            cost += r.cost_fallback;
            correct += if r.correct_fallback { 1.0 } else { 0.0 };
        }
    }
    (correct / m, fallbacks / m, cost / m)
}
