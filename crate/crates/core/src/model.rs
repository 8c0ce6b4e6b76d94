//! Data model for self-evaluation grids, query records and dataset manifests.
//!
//! A [`ConfidenceGrid`] holds P(Yes) for the last `k` query tokens (outer
//! axis, left to right) at each of `L` transformer block outputs (inner
//! axis, the embedding layer is not included). Values are stored flat in
//! row-major order, so the cell for token `n` and layer `l` (both 1-based)
//! lives at `(n - 1) * L + (l - 1)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of trailing query tokens kept in a grid.
pub const DEFAULT_K: usize = 10;

/// Tolerance on the attention-weight normalization.
pub const ATTENTION_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceGrid {
    k: usize,
    #[serde(rename = "L")]
    layers: usize,
    values: Vec<f64>,
}

impl ConfidenceGrid {
    /// Builds a grid from row-major values. Only the shape is checked here;
    /// cell ranges are reported by [`validate_record`].
    pub fn new(k: usize, layers: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || layers == 0 {
            return Err(Error::domain(format!(
                "grid dimensions must be positive, got k={k}, L={layers}"
            )));
        }
        if values.len() != k * layers {
            return Err(Error::domain(format!(
                "grid values length {} does not match k*L = {}",
                values.len(),
                k * layers
            )));
        }
        Ok(Self { k, layers, values })
    }

    /// A `k x L` grid filled with one value.
    pub fn constant(k: usize, layers: usize, value: f64) -> Result<Self> {
        Self::new(k, layers, vec![value; k * layers])
    }

    /// Builds a grid by evaluating `f(n, l)` with 1-based indices.
    pub fn from_fn(k: usize, layers: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(k * layers);
        for n in 1..=k {
            for l in 1..=layers {
                values.push(f(n, l));
            }
        }
        Self::new(k, layers, values)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// P(Yes) at token `n`, layer `l` (1-based).
    pub fn cell(&self, n: usize, l: usize) -> Result<f64> {
        if n == 0 || n > self.k {
            return Err(Error::Range {
                what: "token index",
                index: n,
                max: self.k,
            });
        }
        if l == 0 || l > self.layers {
            return Err(Error::Range {
                what: "layer index",
                index: l,
                max: self.layers,
            });
        }
        Ok(self.values[(n - 1) * self.layers + (l - 1)])
    }

    /// Layer values for token `n` (0-based row).
    pub(crate) fn row(&self, n0: usize) -> &[f64] {
        &self.values[n0 * self.layers..(n0 + 1) * self.layers]
    }

    fn shape_ok(&self) -> bool {
        self.k >= 1 && self.layers >= 1 && self.values.len() == self.k * self.layers
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub grid: ConfidenceGrid,
    /// Natural-log probabilities `log P(x_n | x_<n)` over the full query.
    pub token_logprobs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal_sim: Option<f64>,
    /// `true` when the query is answerable (inside the knowledge boundary).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl QueryRecord {
    pub fn new(query_id: impl Into<String>, grid: ConfidenceGrid, token_logprobs: Vec<f64>) -> Self {
        Self {
            query_id: query_id.into(),
            grid,
            token_logprobs,
            attention_weights: None,
            internal_sim: None,
            label: None,
            meta: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub model_name: String,
    pub k: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub prompt_template_hash: String,
    pub n_shots: usize,
    pub record_count: usize,
    /// Producer-specific settings (resolved token ids, norm convention, ...).
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl DatasetManifest {
    pub fn new(model_name: impl Into<String>, k: usize, layers: usize) -> Self {
        Self {
            model_name: model_name.into(),
            k,
            layers,
            prompt_template_hash: String::new(),
            n_shots: 0,
            record_count: 0,
            extra: BTreeMap::new(),
        }
    }
}

/// One broken invariant found by [`validate_record`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    GridShape { k: usize, layers: usize, len: usize },
    CellOutOfRange { token: usize, layer: usize, value: f64 },
    DimensionMismatch { axis: &'static str, record: usize, manifest: usize },
    EmptyLogprobs,
    BadLogprob { index: usize, value: f64 },
    AttentionLength { weights: usize, tokens: usize },
    NegativeAttention { index: usize, value: f64 },
    AttentionNotNormalized { sum: f64 },
    InternalSimOutOfRange { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GridShape { k, layers, len } => {
                write!(f, "grid shape invalid: k={k}, L={layers}, {len} values")
            }
            Violation::CellOutOfRange { token, layer, value } => {
                write!(f, "cell out of [0,1] at token {token}, layer {layer}: {value}")
            }
            Violation::DimensionMismatch {
                axis,
                record,
                manifest,
            } => write!(
                f,
                "dimension mismatch: record {axis}={record}, manifest {axis}={manifest}"
            ),
            Violation::EmptyLogprobs => f.write_str("token_logprobs is empty"),
            Violation::BadLogprob { index, value } => {
                write!(f, "token_logprobs[{index}] = {value} is not a finite value <= 0")
            }
            Violation::AttentionLength { weights, tokens } => write!(
                f,
                "attention_weights length {weights} does not match {tokens} token log-probs"
            ),
            Violation::NegativeAttention { index, value } => {
                write!(f, "attention_weights[{index}] = {value} is negative or non-finite")
            }
            Violation::AttentionNotNormalized { sum } => {
                write!(f, "attention_weights sum to {sum}, expected 1")
            }
            Violation::InternalSimOutOfRange { value } => {
                write!(f, "internal_sim {value} outside [-1,1]")
            }
        }
    }
}

/// Checks every record invariant and the manifest dimensions. An empty
/// vector means the record is valid.
pub fn validate_record(record: &QueryRecord, manifest: &DatasetManifest) -> Vec<Violation> {
    let mut out = Vec::new();
    let grid = &record.grid;

    if !grid.shape_ok() {
        out.push(Violation::GridShape {
            k: grid.k,
            layers: grid.layers,
            len: grid.values.len(),
        });
    } else {
        for (idx, &v) in grid.values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                out.push(Violation::CellOutOfRange {
                    token: idx / grid.layers + 1,
                    layer: idx % grid.layers + 1,
                    value: v,
                });
            }
        }
    }
    if grid.k != manifest.k {
        out.push(Violation::DimensionMismatch {
            axis: "k",
            record: grid.k,
            manifest: manifest.k,
        });
    }
    if grid.layers != manifest.layers {
        out.push(Violation::DimensionMismatch {
            axis: "L",
            record: grid.layers,
            manifest: manifest.layers,
        });
    }

    if record.token_logprobs.is_empty() {
        out.push(Violation::EmptyLogprobs);
    }
    for (index, &value) in record.token_logprobs.iter().enumerate() {
        if !(value <= 0.0) || value.is_infinite() {
            out.push(Violation::BadLogprob { index, value });
        }
    }

    if let Some(weights) = &record.attention_weights {
        if weights.len() != record.token_logprobs.len() {
            out.push(Violation::AttentionLength {
                weights: weights.len(),
                tokens: record.token_logprobs.len(),
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value >= 0.0) || value.is_infinite() {
                out.push(Violation::NegativeAttention { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if !((sum - 1.0).abs() <= ATTENTION_SUM_TOL) {
            out.push(Violation::AttentionNotNormalized { sum });
        }
    }

    if let Some(value) = record.internal_sim {
        if !(-1.0..=1.0).contains(&value) {
            out.push(Violation::InternalSimOutOfRange { value });
        }
    }
    out
}
