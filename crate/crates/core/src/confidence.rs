//! Internal Confidence: a weighted ensemble of per-token, per-layer P(Yes)
//! values centred on a decision cell.
//!
//! Weights come from a Gaussian-decay ("attenuated") profile around the
//! centre along each axis. Token and layer profiles share one `alpha`, and
//! the 2-D weight of a cell is the product of its token and layer weights.
//! All indices in this module are 1-based, matching [`ConfidenceGrid::cell`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, Orientation};
use crate::model::{ConfidenceGrid, QueryRecord};

pub const DEFAULT_ALPHA: f64 = 1.0;

/// Two-way softmax over the Yes/No logits, stable for large magnitudes.
pub fn yes_prob_from_logits(logit_yes: f64, logit_no: f64) -> Result<f64> {
    if !logit_yes.is_finite() || !logit_no.is_finite() {
        return Err(Error::domain(format!(
            "logits must be finite, got yes={logit_yes}, no={logit_no}"
        )));
    }
    let max = logit_yes.max(logit_no);
    let yes = (logit_yes - max).exp();
    let no = (logit_no - max).exp();
    Ok(yes / (yes + no))
}

/// A normalized weight vector peaked at `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    weights: Vec<f64>,
    center: usize,
    alpha: f64,
}

impl WeightProfile {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// 1-based centre index.
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Concentration of the profile around its centre, in `[0, 1]`.
    pub fn locality(&self) -> f64 {
        locality(self)
    }
}

/// `w_j = exp(-alpha |i - j|^2) / sum_j' exp(-alpha |i - j'|^2)` for `j = 1..=len`.
pub fn attenuated_weights(len: usize, center: usize, alpha: f64) -> Result<WeightProfile> {
    if len == 0 {
        return Err(Error::domain("weight profile length must be at least 1"));
    }
    if center == 0 || center > len {
        return Err(Error::Range {
            what: "center index",
            index: center,
            max: len,
        });
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    let raw: Vec<f64> = (1..=len)
        .map(|j| {
            let d = center.abs_diff(j) as f64;
            (-alpha * d * d).exp()
        })
        .collect();
    // The centre term is exp(0) = 1, so the sum never underflows.
    let total: f64 = raw.iter().sum();
    Ok(WeightProfile {
        weights: raw.into_iter().map(|w| w / total).collect(),
        center,
        alpha,
    })
}

/// `sum_j w_j / 2^|i - j|`: 1 for a one-hot profile, smaller as weight spreads.
pub fn locality(profile: &WeightProfile) -> f64 {
    profile
        .weights
        .iter()
        .enumerate()
        .map(|(j0, w)| w * 0.5f64.powi(profile.center.abs_diff(j0 + 1) as i32))
        .sum()
}

/// Grid cell used as the peak of the token and layer weight profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecisionCenter {
    pub token: usize,
    pub layer: usize,
}

impl DecisionCenter {
    pub fn new(token: usize, layer: usize) -> Self {
        Self { token, layer }
    }

    /// Last token, last layer.
    pub fn top_right(grid: &ConfidenceGrid) -> Self {
        Self::new(grid.k(), grid.layers())
    }

    pub fn check(&self, grid: &ConfidenceGrid) -> Result<()> {
        grid.cell(self.token, self.layer).map(|_| ())
    }
}

/// Token and layer weight profiles for a grid shape.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationWeights {
    pub token: WeightProfile,
    pub layer: WeightProfile,
}

impl AggregationWeights {
    pub fn new(k: usize, layers: usize, center: DecisionCenter, alpha: f64) -> Result<Self> {
        Ok(Self {
            token: attenuated_weights(k, center.token, alpha)?,
            layer: attenuated_weights(layers, center.layer, alpha)?,
        })
    }

    /// Two-step aggregation: a layer-weighted sum per token, then a
    /// token-weighted sum of those.
    pub fn apply(&self, grid: &ConfidenceGrid) -> Result<f64> {
        if grid.k() != self.token.len() || grid.layers() != self.layer.len() {
            return Err(Error::domain(format!(
                "weights are for a {}x{} grid, got {}x{}",
                self.token.len(),
                self.layer.len(),
                grid.k(),
                grid.layers()
            )));
        }
        let lw = self.layer.weights();
        Ok(self
            .token
            .weights()
            .iter()
            .enumerate()
            .map(|(n0, tw)| {
                let per_token: f64 = grid.row(n0).iter().zip(lw).map(|(p, w)| p * w).sum();
                tw * per_token
            })
            .sum())
    }
}

pub fn internal_confidence(grid: &ConfidenceGrid, center: DecisionCenter, alpha: f64) -> Result<f64> {
    center.check(grid)?;
    AggregationWeights::new(grid.k(), grid.layers(), center, alpha)?.apply(grid)
}

/// P(Yes) at the last token and last layer.
pub fn score_top_right(grid: &ConfidenceGrid) -> f64 {
    grid.values()[grid.values().len() - 1]
}

/// Unweighted mean of every cell.
pub fn score_naive_avg(grid: &ConfidenceGrid) -> f64 {
    grid.values().iter().sum::<f64>() / grid.values().len() as f64
}

/// Per-cell AUROC of P(Yes) as a confidence score, row-major like the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub k: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, n: usize, l: usize) -> Option<f64> {
        if n == 0 || l == 0 || n > self.k || l > self.layers {
            return None;
        }
        Some(self.values[(n - 1) * self.layers + (l - 1)])
    }

    /// Best cell; ties go to the later layer, then the later token.
    pub fn argmax(&self) -> (DecisionCenter, f64) {
        let mut best = (DecisionCenter::new(1, 1), f64::NEG_INFINITY);
        for n in 1..=self.k {
            for l in 1..=self.layers {
                let v = self.values[(n - 1) * self.layers + (l - 1)];
                let (c, bv) = best;
                let better = v > bv || (v == bv && (l, n) > (c.layer, c.token));
                if better {
                    best = (DecisionCenter::new(n, l), v);
                }
            }
        }
        best
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / self.layers + 1, i % self.layers + 1, v))
    }
}

fn labels_and_shape(records: &[QueryRecord]) -> Result<(Vec<bool>, usize, usize)> {
    let first = records
        .first()
        .ok_or_else(|| Error::domain("no records to evaluate"))?;
    let (k, layers) = (first.grid.k(), first.grid.layers());
    let mut labels = Vec::with_capacity(records.len());
    for rec in records {
        if rec.grid.k() != k || rec.grid.layers() != layers {
            return Err(Error::domain(format!(
                "record {} has a {}x{} grid, expected {k}x{layers}",
                rec.query_id,
                rec.grid.k(),
                rec.grid.layers()
            )));
        }
        labels.push(
            rec.label
                .ok_or_else(|| Error::domain(format!("record {} is unlabeled", rec.query_id)))?,
        );
    }
    Ok((labels, k, layers))
}

pub fn auroc_heatmap(records: &[QueryRecord]) -> Result<Heatmap> {
    let (labels, k, layers) = labels_and_shape(records)?;
    let mut column = vec![0.0; records.len()];
    let mut values = Vec::with_capacity(k * layers);
    for idx in 0..k * layers {
        for (slot, rec) in column.iter_mut().zip(records) {
            *slot = rec.grid.values()[idx];
        }
        values.push(metrics::auroc(&column, &labels, Orientation::HigherIsConfident)?);
    }
    Ok(Heatmap { k, layers, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterSearch {
    pub center: DecisionCenter,
    pub auroc: f64,
    pub heatmap: Heatmap,
}

/// Picks the decision centre with the best per-cell AUROC on labeled records.
pub fn search_decision_center(records: &[QueryRecord]) -> Result<CenterSearch> {
    let heatmap = auroc_heatmap(records)?;
    let (center, auroc) = heatmap.argmax();
    Ok(CenterSearch {
        center,
        auroc,
        heatmap,
    })
}
