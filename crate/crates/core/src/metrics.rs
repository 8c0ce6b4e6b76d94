//! Ranking, rejection and calibration metrics, plus ROUGE-L answer labeling.
//!
//! Labels are `true` for answerable queries. Scores are paired with an
//! [`Orientation`]; ranking metrics flip uncertainty-style scores so that
//! higher always means "more confident the query is answerable".

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ECE_BINS: usize = 10;
pub const DEFAULT_ROUGE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsConfident,
    HigherIsUncertain,
}

impl Orientation {
    /// Maps a raw score onto the "higher is confident" axis.
    pub fn confident(self, score: f64) -> f64 {
        match self {
            Orientation::HigherIsConfident => score,
            Orientation::HigherIsUncertain => -score,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::HigherIsConfident => Orientation::HigherIsUncertain,
            Orientation::HigherIsUncertain => Orientation::HigherIsConfident,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub method: String,
    pub auroc: f64,
    pub prr: f64,
    /// Only present for methods whose scores are probabilities.
    pub ece: Option<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::domain(format!("non-finite score {bad}")));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels { n_pos, n_neg });
    }
    Ok((n_pos, n_neg))
}

/// Sorts indices by ascending score and splits them into runs of equal score.
fn sorted_tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[idx] => g.push(idx),
            _ => groups.push(vec![idx]),
        }
    }
    groups
}

/// Area under the ROC curve as the Mann-Whitney statistic
/// `P(pos > neg) + 0.5 P(pos == neg)`, computed from tie-averaged ranks.
pub fn auroc(scores: &[f64], labels: &[bool], orientation: Orientation) -> Result<f64> {
    let (n_pos, n_neg) = check_inputs(scores, labels)?;
    let confident: Vec<f64> = scores.iter().map(|&s| orientation.confident(s)).collect();

    // Average ranks are half-integers, so the rank sum is exact in f64.
    let mut pos_rank_sum = 0.0;
    let mut seen = 0usize;
    for group in sorted_tie_groups(&confident) {
        let first = seen + 1;
        let last = seen + group.len();
        let avg_rank = (first + last) as f64 / 2.0;
        let pos_in_group = group.iter().filter(|&&i| labels[i]).count();
        pos_rank_sum += avg_rank * pos_in_group as f64;
        seen = last;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Trapezoidal area over rejection fractions `0, 1/M, ..., 1`.
fn curve_area(risk: &[f64]) -> f64 {
    let m = (risk.len() - 1) as f64;
    risk.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum::<f64>() / m
}

/// Rejection curve of a scorer: entry `j` is the number of errors still
/// retained after rejecting the `j` least confident queries, divided by `M`.
/// Within a tie group the expected curve over all orderings is used.
pub fn rejection_curve(scores: &[f64], labels: &[bool], orientation: Orientation) -> Result<Vec<f64>> {
    check_inputs(scores, labels)?;
    let m = scores.len();
    let confident: Vec<f64> = scores.iter().map(|&s| orientation.confident(s)).collect();
    let total_errors = labels.iter().filter(|&&l| !l).count() as f64;

    let mut risk = Vec::with_capacity(m + 1);
    risk.push(total_errors / m as f64);
    let mut rejected_errors = 0.0;
    for group in sorted_tie_groups(&confident) {
        let size = group.len() as f64;
        let group_errors = group.iter().filter(|&&i| !labels[i]).count() as f64;
        for taken in 1..=group.len() {
            let partial = rejected_errors + group_errors * taken as f64 / size;
            risk.push((total_errors - partial) / m as f64);
        }
        rejected_errors += group_errors;
    }
    Ok(risk)
}

/// Prediction rejection ratio: the share of the random-to-oracle area gap
/// recovered by rejecting queries in order of the scorer's uncertainty.
/// Risk is unnormalized (retained errors over `M`).
pub fn prr(scores: &[f64], labels: &[bool], orientation: Orientation) -> Result<f64> {
    let method = rejection_curve(scores, labels, orientation)?;
    let m = scores.len();
    let errors = labels.iter().filter(|&&l| !l).count();
    let base = errors as f64 / m as f64;

    let random: Vec<f64> = (0..=m).map(|j| base * (m - j) as f64 / m as f64).collect();
    let oracle: Vec<f64> = (0..=m)
        .map(|j| errors.saturating_sub(j) as f64 / m as f64)
        .collect();

    let auc_random = curve_area(&random);
    let auc_oracle = curve_area(&oracle);
    let denom = auc_random - auc_oracle;
    if denom.abs() <= f64::EPSILON {
        return Err(Error::UndefinedPrr);
    }
    Ok((auc_random - curve_area(&method)) / denom)
}

fn ece_bin(conf: f64, n_bins: usize) -> usize {
    let nb = n_bins as f64;
    let mut b = ((conf * nb).ceil() as usize).saturating_sub(1).min(n_bins - 1);
    // Bin b covers (b/n, (b+1)/n], the first bin also holds 0. Correct for
    // rounding in conf * n near an edge.
    while b > 0 && conf <= b as f64 / nb {
        b -= 1;
    }
    while b + 1 < n_bins && conf > (b + 1) as f64 / nb {
        b += 1;
    }
    b
}

/// Expected calibration error over `n_bins` equal-width bins.
pub fn ece(confidences: &[f64], labels: &[bool], n_bins: usize) -> Result<f64> {
    if n_bins == 0 {
        return Err(Error::domain("ECE needs at least one bin"));
    }
    if confidences.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} confidences but {} labels",
            confidences.len(),
            labels.len()
        )));
    }
    if confidences.is_empty() {
        return Err(Error::domain("ECE of an empty set"));
    }
    if let Some(bad) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::domain(format!("confidence {bad} outside [0,1]")));
    }

    let mut count = vec![0usize; n_bins];
    let mut correct = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0; n_bins];
    for (&c, &y) in confidences.iter().zip(labels) {
        let b = ece_bin(c, n_bins);
        count[b] += 1;
        conf_sum[b] += c;
        correct[b] += usize::from(y);
    }
    let m = confidences.len() as f64;
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let n = count[b] as f64;
            (n / m) * (correct[b] as f64 / n - conf_sum[b] / n).abs()
        })
        .sum())
}

static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}").unwrap());

/// Lowercases, strips Unicode punctuation, splits on whitespace.
pub fn rouge_tokens(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    PUNCTUATION
        .replace_all(&lowered, "")
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F-measure over whitespace tokens.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    let cand = rouge_tokens(candidate);
    let refr = rouge_tokens(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&cand, &refr);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / cand.len() as f64;
    let r = lcs as f64 / refr.len() as f64;
    2.0 * p * r / (p + r)
}

/// Best ROUGE-L of `answer` against any gold reference.
pub fn best_rouge_l<S: AsRef<str>>(answer: &str, gold_answers: &[S]) -> Result<f64> {
    if gold_answers.is_empty() {
        return Err(Error::domain("at least one reference answer is required"));
    }
    Ok(gold_answers
        .iter()
        .map(|g| rouge_l(answer, g.as_ref()))
        .fold(0.0, f64::max))
}

/// An answer counts as correct when its best ROUGE-L strictly exceeds `threshold`.
pub fn label_by_rouge<S: AsRef<str>>(answer: &str, gold_answers: &[S], threshold: f64) -> Result<bool> {
    Ok(best_rouge_l(answer, gold_answers)? > threshold)
}

/// AUROC, PRR and (optionally) ECE for one method's scores. ECE treats the
/// scores as probabilities that the query is answerable.
pub fn evaluate(
    method: &str,
    scores: &[f64],
    labels: &[bool],
    orientation: Orientation,
    ece_bins: Option<usize>,
) -> Result<EvalResult> {
    let (n_pos, n_neg) = check_inputs(scores, labels)?;
    let ece = match ece_bins {
        Some(_) if orientation == Orientation::HigherIsUncertain => {
            return Err(Error::domain(format!(
                "ECE needs probability-of-answerable scores, {method} is an uncertainty"
            )))
        }
        Some(bins) => Some(ece(scores, labels, bins)?),
        None => None,
    };
    Ok(EvalResult {
        method: method.to_owned(),
        auroc: auroc(scores, labels, orientation)?,
        prr: prr(scores, labels, orientation)?,
        ece,
        n_pos,
        n_neg,
    })
}
