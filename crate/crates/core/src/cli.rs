//! Command-line front end. CSV goes to `--out` (or stdout); summaries and
//! notices go to stderr.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::baselines::{score_all, Method, ScoreConfig, DEFAULT_K_FRACTION};
use crate::confidence::{self, AggregationWeights, DecisionCenter, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{self, EvalResult, DEFAULT_ECE_BINS, DEFAULT_ROUGE_THRESHOLD};
use crate::model::{DatasetManifest, QueryRecord};
use crate::routing::{self, RoutingReport};
use crate::synth::{synth_dataset, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(name = "intconf", version, about = "Query-level uncertainty from layer-wise P(Yes) grids")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a dataset against its manifest and the record invariants.
    Validate { data: PathBuf },
    /// Score every record with every applicable method (wide CSV).
    Score {
        data: PathBuf,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// AUROC / PRR / ECE per method on labeled records.
    Eval {
        data: PathBuf,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[arg(long, default_value_t = DEFAULT_ECE_BINS)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-cell AUROC of P(Yes).
    Heatmap {
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the best decision centre on labeled records.
    CenterSearch {
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Internal Confidence metrics across a list of alpha values.
    SweepAlpha {
        data: PathBuf,
        /// Comma-separated alpha values.
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long, value_parser = parse_center)]
        center: Option<DecisionCenter>,
        #[arg(long, default_value_t = DEFAULT_ECE_BINS)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrieval gating simulation over a routing CSV.
    Route {
        records: PathBuf,
        /// Curve CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Small/large model cascade simulation over a routing CSV.
    Cascade {
        records: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        small_cost: f64,
        #[arg(long, default_value_t = 10.0)]
        large_cost: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a labeled dataset with a planted decision centre.
    Synth(SynthArgs),
    /// Label answers by ROUGE-L against gold references.
    RougeLabel {
        /// NDJSON lines of {"query_id", "answer", "gold_answers": [...]}.
        answers: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ROUGE_THRESHOLD)]
        rouge_threshold: f64,
        /// Write these labels into a dataset instead of emitting CSV.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ScoringArgs {
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Decision centre as `token,layer` (1-based); defaults to the top-right cell.
    #[arg(long, value_parser = parse_center)]
    center: Option<DecisionCenter>,
    #[arg(long, default_value_t = DEFAULT_K_FRACTION)]
    k_fraction: f64,
}

impl ScoringArgs {
    fn config(&self) -> ScoreConfig {
        ScoreConfig {
            alpha: self.alpha,
            center: self.center,
            k_fraction: self.k_fraction,
        }
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 32)]
    layers: usize,
    #[arg(long, value_parser = parse_center, default_value = "5,27")]
    center: DecisionCenter,
    #[arg(long, default_value_t = 0.3)]
    gap: f64,
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0.5)]
    pos_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_center(s: &str) -> std::result::Result<DecisionCenter, String> {
    let (n, l) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `token,layer`, got {s:?}"))?;
    let parse = |x: &str| usize::from_str(x.trim()).map_err(|e| format!("{x:?}: {e}"));
    let c = DecisionCenter::new(parse(n)?, parse(l)?);
    if c.token == 0 || c.layer == 0 {
        return Err("centre indices are 1-based".into());
    }
    Ok(c)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

fn labeled(records: &[QueryRecord]) -> Result<Vec<&QueryRecord>> {
    let out: Vec<&QueryRecord> = records.iter().filter(|r| r.label.is_some()).collect();
    if out.is_empty() {
        return Err(Error::domain("no labeled records"));
    }
    if out.len() < records.len() {
        eprintln!("note: skipping {} unlabeled records", records.len() - out.len());
    }
    Ok(out)
}

/// Evaluates each method on the labeled records that carry it.
pub fn evaluate_records(records: &[QueryRecord], config: &ScoreConfig, bins: usize) -> Result<Vec<EvalResult>> {
    let labeled = labeled(records)?;
    let mut per_method: BTreeMap<Method, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for rec in &labeled {
        for s in score_all(rec, config)? {
            let entry = per_method.entry(s.method).or_default();
            entry.0.push(s.score);
            entry.1.push(rec.label.unwrap());
        }
    }
    let mut results = Vec::new();
    for (method, (scores, labels)) in per_method {
        if scores.len() < labeled.len() {
            eprintln!(
                "note: {method} evaluated on {} of {} records (missing inputs)",
                scores.len(),
                labeled.len()
            );
        }
        let bins = method.is_probability().then_some(bins);
        results.push(metrics::evaluate(method.name(), &scores, &labels, method.orientation(), bins)?);
    }
    Ok(results)
}

#[derive(Serialize)]
struct AlphaRow {
    alpha: f64,
    token_locality: f64,
    layer_locality: f64,
    auroc: f64,
    prr: f64,
    ece: f64,
}

#[derive(Serialize)]
struct HeatRow {
    token: usize,
    layer: usize,
    auroc: f64,
}

#[derive(Deserialize)]
struct AnswerLine {
    query_id: String,
    answer: String,
    gold_answers: Vec<String>,
}

#[derive(Serialize)]
struct LabelRow<'a> {
    query_id: &'a str,
    rouge_l: f64,
    label: bool,
}

fn read_answers(path: &Path) -> Result<Vec<AnswerLine>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn report_routing(report: &RoutingReport, out: Option<&Path>) -> Result<()> {
    io::write_curve_csv(&report.points, output(out)?)?;
    let p = report.optimal.point;
    eprintln!(
        "optimal: threshold={} accuracy={} fallback_rate={} expected_cost={} meets_baseline={}",
        p.threshold, p.accuracy, p.fallback_rate, p.expected_cost, report.optimal.meets_baseline
    );
    eprintln!(
        "direct_only_accuracy={} fallback_only_accuracy={}",
        report.direct_only_accuracy, report.fallback_only_accuracy
    );
    Ok(())
}

fn load(path: &Path) -> Result<(DatasetManifest, Vec<QueryRecord>)> {
    io::read_dataset(path)
}

impl Cli {
    pub fn run(self) -> Result<()> {
        match self.command {
            Command::Validate { data } => {
                let (manifest, records) = load(&data)?;
                eprintln!(
                    "ok: {} records, k={}, L={}, model {}",
                    records.len(),
                    manifest.k,
                    manifest.layers,
                    manifest.model_name
                );
                Ok(())
            }
            Command::Score { data, scoring, out } => {
                let (_, records) = load(&data)?;
                let config = scoring.config();
                let mut w = csv::Writer::from_writer(output(out.as_deref())?);
                let mut header = vec!["query_id"];
                header.extend(Method::ALL.iter().map(|m| m.name()));
                w.write_record(&header)?;
                for rec in &records {
                    let scores = score_all(rec, &config)?;
                    let mut row = vec![rec.query_id.clone()];
                    for m in Method::ALL {
                        row.push(
                            scores
                                .iter()
                                .find(|s| s.method == m)
                                .map(|s| s.score.to_string())
                                .unwrap_or_default(),
                        );
                    }
                    w.write_record(&row)?;
                }
                w.flush().map_err(|e| Error::io("<output>", e))
            }
            Command::Eval {
                data,
                scoring,
                bins,
                out,
            } => {
                let (_, records) = load(&data)?;
                let results = evaluate_records(&records, &scoring.config(), bins)?;
                io::write_eval_csv(&results, output(out.as_deref())?)
            }
            Command::Heatmap { data, out } => {
                let (_, records) = load(&data)?;
                let heat = confidence::auroc_heatmap(&records)?;
                let mut w = csv::Writer::from_writer(output(out.as_deref())?);
                for (token, layer, auroc) in heat.iter() {
                    w.serialize(HeatRow { token, layer, auroc })?;
                }
                w.flush().map_err(|e| Error::io("<output>", e))
            }
            Command::CenterSearch { data, out } => {
                let (_, records) = load(&data)?;
                let found = confidence::search_decision_center(&records)?;
                let mut w = csv::Writer::from_writer(output(out.as_deref())?);
                w.serialize(HeatRow {
                    token: found.center.token,
                    layer: found.center.layer,
                    auroc: found.auroc,
                })?;
                w.flush().map_err(|e| Error::io("<output>", e))
            }
            Command::SweepAlpha {
                data,
                alphas,
                center,
                bins,
                out,
            } => {
                let (manifest, records) = load(&data)?;
                let records: Vec<QueryRecord> = labeled(&records)?.into_iter().cloned().collect();
                let labels: Vec<bool> = records.iter().map(|r| r.label.unwrap()).collect();
                let center = center.unwrap_or(DecisionCenter::new(manifest.k, manifest.layers));
                let mut w = csv::Writer::from_writer(output(out.as_deref())?);
                for alpha in alphas {
                    let weights = AggregationWeights::new(manifest.k, manifest.layers, center, alpha)?;
                    let scores = records
                        .iter()
                        .map(|r| weights.apply(&r.grid))
                        .collect::<Result<Vec<f64>>>()?;
                    let ev = metrics::evaluate(
                        Method::InternalConfidence.name(),
                        &scores,
                        &labels,
                        Method::InternalConfidence.orientation(),
                        Some(bins),
                    )?;
                    w.serialize(AlphaRow {
                        alpha,
                        token_locality: weights.token.locality(),
                        layer_locality: weights.layer.locality(),
                        auroc: ev.auroc,
                        prr: ev.prr,
                        ece: ev.ece.unwrap_or(f64::NAN),
                    })?;
                }
                w.flush().map_err(|e| Error::io("<output>", e))
            }
            Command::Route { records, out } => {
                let recs = io::read_routing_file(&records)?;
                report_routing(&routing::simulate(&recs)?, out.as_deref())
            }
            Command::Cascade {
                records,
                small_cost,
                large_cost,
                out,
            } => {
                let recs = io::read_routing_file(&records)?;
                report_routing(&routing::cascade_sim(&recs, small_cost, large_cost)?, out.as_deref())
            }
            Command::Synth(args) => {
                let spec = SyntheticSpec {
                    n_queries: args.n,
                    k: args.k,
                    layers: args.layers,
                    planted_center: args.center,
                    signal_gap: args.gap,
                    decay: args.decay,
                    noise_sd: args.noise,
                    pos_fraction: args.pos_fraction,
                    seed: args.seed,
                };
                let records = synth_dataset(&spec)?;
                io::write_dataset_to(&spec.manifest(), &records, output(args.out.as_deref())?)
            }
            Command::RougeLabel {
                answers,
                rouge_threshold,
                dataset,
                out,
            } => {
                let answers = read_answers(&answers)?;
                let mut scored = Vec::with_capacity(answers.len());
                for a in &answers {
                    let f = metrics::best_rouge_l(&a.answer, &a.gold_answers)
                        .map_err(|e| Error::domain(format!("{}: {e}", a.query_id)))?;
                    scored.push((a.query_id.as_str(), f, f > rouge_threshold));
                }
                match dataset {
                    None => {
                        let mut w = csv::Writer::from_writer(output(out.as_deref())?);
                        for &(query_id, rouge_l, label) in &scored {
                            w.serialize(LabelRow {
                                query_id,
                                rouge_l,
                                label,
                            })?;
                        }
                        w.flush().map_err(|e| Error::io("<output>", e))
                    }
                    Some(path) => {
                        let (manifest, mut records) = load(&path)?;
                        let labels: BTreeMap<&str, bool> = scored.iter().map(|&(q, _, l)| (q, l)).collect();
                        let mut hit = 0;
                        for rec in &mut records {
                            if let Some(&l) = labels.get(rec.query_id.as_str()) {
                                rec.label = Some(l);
                                hit += 1;
                            }
                        }
                        if hit < labels.len() {
                            return Err(Error::domain(format!(
                                "{} answers have no matching record",
                                labels.len() - hit
                            )));
                        }
                        io::write_dataset_to(&manifest, &records, output(out.as_deref())?)
                    }
                }
            }
        }
    }
}

/// Entry point for the `intconf` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
