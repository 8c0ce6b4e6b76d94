//! Synthetic labeled datasets with a planted decision centre.
//!
//! Each cell is `clamp01(base + y * gap * exp(-decay * d^2) + noise)` where
//! `y` is the 0/1 label, `d` the grid distance to the planted centre and
//! `base = 0.5 - gap / 2`. Token log-probabilities, attention weights and the
//! layer-similarity scalar are drawn independently of the label, so every
//! baseline other than the P(Yes) family is uninformative.
//!
//! The generator is `ChaCha8Rng::seed_from_u64(seed)` from `rand_chacha`.
//! Draw order per record: label, the `k * L` cell noises in row-major order,
//! token count, log-probs, attention weights, similarity.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde_json::json;

use crate::confidence::DecisionCenter;
use crate::error::{Error, Result};
use crate::model::{ConfidenceGrid, DatasetManifest, QueryRecord};

pub const RNG_NAME: &str = "chacha8/seed_from_u64";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_queries: usize,
    pub k: usize,
    pub layers: usize,
    pub planted_center: DecisionCenter,
    pub signal_gap: f64,
    pub decay: f64,
    pub noise_sd: f64,
    pub pos_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_queries: 500,
            k: 10,
            layers: 32,
            planted_center: DecisionCenter::new(5, 27),
            signal_gap: 0.3,
            decay: 1.0,
            noise_sd: 0.05,
            pos_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.layers == 0 {
            return Err(Error::domain("grid dimensions must be positive"));
        }
        let c = self.planted_center;
        if c.token == 0 || c.token > self.k || c.layer == 0 || c.layer > self.layers {
            return Err(Error::domain(format!(
                "planted centre ({}, {}) outside a {}x{} grid",
                c.token, c.layer, self.k, self.layers
            )));
        }
        if !(self.signal_gap >= 0.0 && self.signal_gap <= 1.0) {
            return Err(Error::domain(format!("signal_gap {} outside [0, 1]", self.signal_gap)));
        }
        if !(self.decay > 0.0) || !self.decay.is_finite() {
            return Err(Error::domain("decay must be positive"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::domain("noise_sd must be nonnegative"));
        }
        if !(self.pos_fraction > 0.0 && self.pos_fraction < 1.0) {
            return Err(Error::domain("pos_fraction must be in (0, 1)"));
        }
        Ok(())
    }

    pub fn manifest(&self) -> DatasetManifest {
        let mut m = DatasetManifest::new("synthetic", self.k, self.layers);
        m.record_count = self.n_queries;
        m.extra.insert("rng".into(), json!(RNG_NAME));
        m.extra.insert("seed".into(), json!(self.seed));
        m.extra.insert(
            "planted_center".into(),
            json!([self.planted_center.token, self.planted_center.layer]),
        );
        m.extra.insert("signal_gap".into(), json!(self.signal_gap));
        m.extra.insert("decay".into(), json!(self.decay));
        m.extra.insert("noise_sd".into(), json!(self.noise_sd));
        m
    }
}

/// Generates `spec.n_queries` labeled records. Deterministic in `spec.seed`.
pub fn synth_dataset(spec: &SyntheticSpec) -> Result<Vec<QueryRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // noise_sd = 0 is allowed: Normal with zero sd yields the mean exactly.
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::domain(e.to_string()))?;
    let surprise = Exp::new(1.0).map_err(|e| Error::domain(e.to_string()))?;
    let base = 0.5 - spec.signal_gap / 2.0;
    let center = spec.planted_center;
    let width = spec.n_queries.max(1).to_string().len();

    let mut records = Vec::with_capacity(spec.n_queries);
    for i in 0..spec.n_queries {
        let label = rng.random_bool(spec.pos_fraction);
        let y = if label { 1.0 } else { 0.0 };
        let grid = ConfidenceGrid::from_fn(spec.k, spec.layers, |n, l| {
            let dn = n.abs_diff(center.token) as f64;
            let dl = l.abs_diff(center.layer) as f64;
            let signal = y * spec.signal_gap * (-spec.decay * (dn * dn + dl * dl)).exp();
            (base + signal + noise.sample(&mut rng)).clamp(0.0, 1.0)
        })?;

        let n_tokens = rng.random_range(spec.k..=spec.k + 20);
        let token_logprobs: Vec<f64> = (0..n_tokens).map(|_| -surprise.sample(&mut rng)).collect();
        let raw: Vec<f64> = (0..n_tokens).map(|_| surprise.sample(&mut rng) + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let attention: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let internal_sim = rng.random_range(-1.0..=1.0);

        let mut rec = QueryRecord::new(format!("q{i:0width$}"), grid, token_logprobs);
        rec.attention_weights = Some(attention);
        rec.internal_sim = Some(internal_sim);
        rec.label = Some(label);
        records.push(rec);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_center_cells() {
        let spec = SyntheticSpec {
            n_queries: 40,
            k: 4,
            layers: 6,
            planted_center: DecisionCenter::new(2, 5),
            signal_gap: 0.4,
            noise_sd: 0.0,
            ..SyntheticSpec::default()
        };
        let recs = synth_dataset(&spec).unwrap();
        for r in &recs {
            let v = r.grid.cell(2, 5).unwrap();
            let want = if r.label.unwrap() { 0.7 } else { 0.3 };
            assert!((v - want).abs() < 1e-15, "{v}");
            // Far from the centre the signal has decayed away.
            assert!((r.grid.cell(4, 1).unwrap() - 0.3).abs() < 1e-6);
        }
        assert!(recs.iter().any(|r| r.label == Some(true)));
        assert!(recs.iter().any(|r| r.label == Some(false)));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec {
            n_queries: 30,
            ..SyntheticSpec::default()
        };
        assert_eq!(synth_dataset(&spec).unwrap(), synth_dataset(&spec).unwrap());
        let other = SyntheticSpec { seed: 1, ..spec.clone() };
        assert_ne!(synth_dataset(&spec).unwrap(), synth_dataset(&other).unwrap());
    }

    #[test]
    fn records_are_valid() {
        let spec = SyntheticSpec {
            n_queries: 50,
            noise_sd: 0.3,
            ..SyntheticSpec::default()
        };
        let m = spec.manifest();
        for r in synth_dataset(&spec).unwrap() {
            assert!(crate::model::validate_record(&r, &m).is_empty());
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            SyntheticSpec { k: 0, ..Default::default() },
            SyntheticSpec { planted_center: DecisionCenter::new(11, 1), ..Default::default() },
            SyntheticSpec { decay: 0.0, ..Default::default() },
            SyntheticSpec { noise_sd: -0.1, ..Default::default() },
            SyntheticSpec { pos_fraction: 1.0, ..Default::default() },
            SyntheticSpec { signal_gap: 1.5, ..Default::default() },
        ];
        for spec in bad {
            assert!(matches!(synth_dataset(&spec), Err(Error::Domain(_))), "{spec:?}");
        }
    }
}
