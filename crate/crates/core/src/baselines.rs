//! Query-level baselines computed from token log-probabilities, attention
//! weights and hidden-state similarity, plus [`score_all`] which runs every
//! method (including the P(Yes) family) over one record.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::{self, DecisionCenter, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::metrics::Orientation;
use crate::model::QueryRecord;

pub const DEFAULT_K_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MaxNegLogprob,
    PredictiveEntropy,
    MinKEntropy,
    AttentionalEntropy,
    Perplexity,
    InternalSim,
    PyesTopRight,
    PyesNaiveAvg,
    InternalConfidence,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::MaxNegLogprob,
        Method::PredictiveEntropy,
        Method::MinKEntropy,
        Method::AttentionalEntropy,
        Method::Perplexity,
        Method::InternalSim,
        Method::PyesTopRight,
        Method::PyesNaiveAvg,
        Method::InternalConfidence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MaxNegLogprob => "max_neg_logprob",
            Method::PredictiveEntropy => "predictive_entropy",
            Method::MinKEntropy => "min_k_entropy",
            Method::AttentionalEntropy => "attentional_entropy",
            Method::Perplexity => "perplexity",
            Method::InternalSim => "internal_sim",
            Method::PyesTopRight => "pyes_top_right",
            Method::PyesNaiveAvg => "pyes_naive_avg",
            Method::InternalConfidence => "internal_confidence",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            Method::MaxNegLogprob
            | Method::PredictiveEntropy
            | Method::MinKEntropy
            | Method::AttentionalEntropy
            | Method::Perplexity => Orientation::HigherIsUncertain,
            Method::InternalSim
            | Method::PyesTopRight
            | Method::PyesNaiveAvg
            | Method::InternalConfidence => Orientation::HigherIsConfident,
        }
    }

    /// Whether scores are probabilities in `[0, 1]`, so ECE applies.
    pub fn is_probability(self) -> bool {
        matches!(
            self,
            Method::PyesTopRight | Method::PyesNaiveAvg | Method::InternalConfidence
        )
    }

    pub fn is_entropy_family(self) -> bool {
        self.orientation() == Orientation::HigherIsUncertain
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredQuery {
    pub query_id: String,
    pub method: Method,
    pub score: f64,
    pub orientation: Orientation,
}

fn nonempty(logprobs: &[f64]) -> Result<()> {
    if logprobs.is_empty() {
        Err(Error::domain("token log-probabilities are empty"))
    } else {
        Ok(())
    }
}

/// Surprise of the least likely query token.
pub fn max_neg_logprob(logprobs: &[f64]) -> Result<f64> {
    nonempty(logprobs)?;
    Ok(logprobs.iter().map(|lp| -lp).fold(f64::NEG_INFINITY, f64::max))
}

pub fn predictive_entropy(logprobs: &[f64]) -> Result<f64> {
    nonempty(logprobs)?;
    Ok(-logprobs.iter().sum::<f64>())
}

/// Mean surprise of the `max(1, ceil(k_fraction * N))` least likely tokens.
pub fn min_k_entropy(logprobs: &[f64], k_fraction: f64) -> Result<f64> {
    nonempty(logprobs)?;
    if !(k_fraction > 0.0 && k_fraction <= 1.0) {
        return Err(Error::domain(format!("k_fraction must be in (0, 1], got {k_fraction}")));
    }
    let count = ((k_fraction * logprobs.len() as f64).ceil() as usize).clamp(1, logprobs.len());
    let mut surprise: Vec<f64> = logprobs.iter().map(|lp| -lp).collect();
    surprise.sort_by(|a, b| b.total_cmp(a));
    Ok(surprise[..count].iter().sum::<f64>() / count as f64)
}

pub fn attentional_entropy(logprobs: &[f64], attn_weights: &[f64]) -> Result<f64> {
    nonempty(logprobs)?;
    if logprobs.len() != attn_weights.len() {
        return Err(Error::domain(format!(
            "{} log-probs but {} attention weights",
            logprobs.len(),
            attn_weights.len()
        )));
    }
    let sum: f64 = attn_weights.iter().sum();
    if (sum - 1.0).abs() > crate::model::ATTENTION_SUM_TOL || attn_weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::domain(format!(
            "attention weights must be nonnegative and sum to 1, sum is {sum}"
        )));
    }
    Ok(-logprobs.iter().zip(attn_weights).map(|(lp, w)| w * lp).sum::<f64>())
}

pub fn perplexity(logprobs: &[f64]) -> Result<f64> {
    Ok((predictive_entropy(logprobs)? / logprobs.len() as f64).exp())
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Mean pairwise cosine similarity over per-layer last-token hidden states.
pub fn internal_semantic_similarity<V: AsRef<[f64]>>(layer_vectors: &[V]) -> Result<f64> {
    if layer_vectors.len() < 2 {
        return Err(Error::domain("need at least two layer vectors"));
    }
    let dim = layer_vectors[0].as_ref().len();
    for (i, v) in layer_vectors.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::domain(format!(
                "vector {i} has dimension {}, expected {dim}",
                v.len()
            )));
        }
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::domain(format!("vector {i} is all zeros")));
        }
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..layer_vectors.len() {
        for j in i + 1..layer_vectors.len() {
            total += cosine(layer_vectors[i].as_ref(), layer_vectors[j].as_ref());
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Settings shared by every record when scoring a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub alpha: f64,
    /// `None` uses the top-right cell of each grid.
    pub center: Option<DecisionCenter>,
    pub k_fraction: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            center: None,
            k_fraction: DEFAULT_K_FRACTION,
        }
    }
}

/// Every computable method for one record. Methods whose inputs are absent
/// (attention weights, layer similarity) are skipped.
pub fn score_all(record: &QueryRecord, config: &ScoreConfig) -> Result<Vec<ScoredQuery>> {
    let lp = &record.token_logprobs;
    let grid = &record.grid;
    let center = config.center.unwrap_or_else(|| DecisionCenter::top_right(grid));

    let mut scores = vec![
        (Method::MaxNegLogprob, max_neg_logprob(lp)?),
        (Method::PredictiveEntropy, predictive_entropy(lp)?),
        (Method::MinKEntropy, min_k_entropy(lp, config.k_fraction)?),
    ];
    if let Some(w) = &record.attention_weights {
        scores.push((Method::AttentionalEntropy, attentional_entropy(lp, w)?));
    }
    scores.push((Method::Perplexity, perplexity(lp)?));
    if let Some(sim) = record.internal_sim {
        scores.push((Method::InternalSim, sim));
    }
    scores.push((Method::PyesTopRight, confidence::score_top_right(grid)));
    scores.push((Method::PyesNaiveAvg, confidence::score_naive_avg(grid)));
    scores.push((
        Method::InternalConfidence,
        confidence::internal_confidence(grid, center, config.alpha)?,
    ));

    Ok(scores
        .into_iter()
        .map(|(method, score)| ScoredQuery {
            query_id: record.query_id.clone(),
            method,
            score,
            orientation: method.orientation(),
        })
        .collect())
}
