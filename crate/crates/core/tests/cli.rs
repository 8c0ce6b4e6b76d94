use std::path::Path;
use std::process::{Command, Output};

fn intconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intconf"))
        .args(args)
        .output()
        .expect("failed to run intconf")
}

fn ok(args: &[&str]) -> String {
    let out = intconf(args);
    assert!(
        out.status.success(),
        "intconf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name).to_str().unwrap().to_owned();
    let mut args = vec!["synth", "--out", &path];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn validate_accepts_synthetic_and_rejects_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.ndjson", &["--n", "20", "--seed", "1"]);
    ok(&["validate", &data]);

    let text = std::fs::read_to_string(&data).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines[4] = lines[4][..lines[4].len() / 2].to_owned();
    let bad = dir.path().join("bad.ndjson");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let out = intconf(&["validate", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");

    let out = intconf(&["validate", dir.path().join("missing.ndjson").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_flag_fails() {
    let out = intconf(&["eval", "x.ndjson", "--no-such-flag"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--no-such-flag"));
}

#[test]
fn eval_ranks_internal_confidence_first_on_planted_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "p.ndjson",
        &["--n", "400", "--center", "10,32", "--noise", "0.2", "--decay", "0.3", "--seed", "3"],
    );
    let out_path = dir.path().join("eval.csv");
    ok(&["eval", &data, "--out", out_path.to_str().unwrap()]);
    let rows = csv_rows(&std::fs::read_to_string(&out_path).unwrap());
    assert_eq!(rows[0], ["method", "auroc", "prr", "ece", "n_pos", "n_neg"]);
    assert_eq!(rows.len(), 10);

    let best = rows[1..]
        .iter()
        .max_by(|a, b| a[1].parse::<f64>().unwrap().total_cmp(&b[1].parse::<f64>().unwrap()))
        .unwrap();
    assert_eq!(best[0], "internal_confidence");
    for row in &rows[1..] {
        let has_ece = !row[3].is_empty();
        let prob = ["pyes_top_right", "pyes_naive_avg", "internal_confidence"].contains(&row[0].as_str());
        assert_eq!(has_ece, prob, "{row:?}");
    }
}

#[test]
fn outputs_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a.ndjson", &["--n", "50", "--seed", "9"]);
    let b = synth(dir.path(), "b.ndjson", &["--n", "50", "--seed", "9"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ok(&["eval", &a]), ok(&["eval", &a]));
    assert_eq!(ok(&["score", &a]), ok(&["score", &b]));
}

#[test]
fn score_is_wide_with_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "s.ndjson", &["--n", "5", "--k", "3", "--layers", "4", "--center", "2,2"]);
    let rows = csv_rows(&ok(&["score", &data, "--alpha", "2", "--center", "1,1", "--k-fraction", "0.5"]));
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0].len(), 10);
    assert_eq!(rows[0][0], "query_id");
    assert_eq!(rows[0][9], "internal_confidence");
    assert!(rows[1..].iter().all(|r| r.iter().all(|c| !c.is_empty())));
}

#[test]
fn sweep_alpha_extremes_match_variants() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "s.ndjson", &["--n", "300", "--seed", "4", "--noise", "0.1"]);
    let sweep = csv_rows(&ok(&["sweep-alpha", &data, "--alphas", "1e-9,1.0,1e6"]));
    assert_eq!(sweep[0], ["alpha", "token_locality", "layer_locality", "auroc", "prr", "ece"]);
    let eval = csv_rows(&ok(&["eval", &data]));
    let metric = |method: &str| -> Vec<f64> {
        let row = eval.iter().find(|r| r[0] == method).unwrap();
        row[1..4].iter().map(|x| x.parse().unwrap()).collect()
    };
    let ic_at = |i: usize| -> Vec<f64> { sweep[i][3..6].iter().map(|x| x.parse().unwrap()).collect() };

    let naive = metric("pyes_naive_avg");
    let top_right = metric("pyes_top_right");
    let low = ic_at(1);
    let high = ic_at(3);
    // Rank metrics agree exactly; ECE within the limit tolerance.
    assert_eq!(low[0], naive[0]);
    assert_eq!(low[1], naive[1]);
    assert!((low[2] - naive[2]).abs() < 1e-6);
    assert_eq!(high, top_right);
    assert_eq!(sweep[3][1], "1.0");
    let mid: f64 = sweep[2][1].parse().unwrap();
    assert!((mid - 0.8573311080860333).abs() < 1e-12);
}

#[test]
fn center_search_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "c.ndjson", &["--n", "300", "--k", "6", "--layers", "12", "--center", "3,9", "--seed", "2"]);
    let rows = csv_rows(&ok(&["center-search", &data]));
    assert_eq!(rows[0], ["token", "layer", "auroc"]);
    assert_eq!(&rows[1][..2], ["3", "9"]);

    let heat = csv_rows(&ok(&["heatmap", &data]));
    assert_eq!(heat.len(), 1 + 6 * 12);
    assert_eq!(&heat[1][..2], ["1", "1"]);
    assert_eq!(&heat[72][..2], ["6", "12"]);
}

const ROUTING: &str = "query_id,confidence,correct_direct,correct_fallback,cost_direct,cost_fallback
a,0.95,1,1,1,3
b,0.80,1,1,1,3
c,0.60,1,0,1,3
d,0.30,0,1,1,3
e,0.10,0,1,1,3
";

#[test]
fn route_and_cascade() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("r.csv");
    std::fs::write(&input, ROUTING).unwrap();
    let curve_path = dir.path().join("curve.csv");

    let out = intconf(&["route", input.to_str().unwrap(), "--out", curve_path.to_str().unwrap()]);
    assert!(out.status.success());
    let curve = csv_rows(&std::fs::read_to_string(&curve_path).unwrap());
    assert_eq!(curve[0], ["threshold", "accuracy", "fallback_rate", "expected_cost"]);
    assert_eq!(curve.len(), 1 + 7);
    assert_eq!(curve[1][0], "-inf");
    assert_eq!(curve[7][0], "inf");
    let summary = String::from_utf8_lossy(&out.stderr);
    assert!(summary.contains("optimal: threshold=0.3 accuracy=0.8 fallback_rate=0.2"), "{summary}");

    let out = intconf(&["cascade", input.to_str().unwrap(), "--small-cost", "1", "--large-cost", "9"]);
    assert!(out.status.success());
    let curve = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(curve[7][3], "10.0");
    let summary = String::from_utf8_lossy(&out.stderr);
    assert!(summary.contains("fallback_only_accuracy=0.8"), "{summary}");
}

#[test]
fn rouge_label_csv_and_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.ndjson", &["--n", "3", "--k", "2", "--layers", "2", "--center", "1,1"]);
    let answers = dir.path().join("answers.ndjson");
    std::fs::write(
        &answers,
        concat!(
            r#"{"query_id":"q0","answer":"The Eiffel Tower.","gold_answers":["eiffel tower","la tour eiffel"]}"#,
            "\n",
            r#"{"query_id":"q1","answer":"Berlin","gold_answers":["Paris"]}"#,
            "\n",
            r#"{"query_id":"q2","answer":"the cat sat","gold_answers":["the cat ran"]}"#,
            "\n"
        ),
    )
    .unwrap();
    let rows = csv_rows(&ok(&["rouge-label", answers.to_str().unwrap()]));
    assert_eq!(rows[0], ["query_id", "rouge_l", "label"]);
    assert_eq!(rows[1][2], "true");
    assert_eq!(rows[2], ["q1", "0.0", "false"]);
    assert_eq!(rows[3][2], "true");

    let strict = csv_rows(&ok(&["rouge-label", answers.to_str().unwrap(), "--rouge-threshold", "0.9"]));
    assert_eq!(strict[3][2], "false");

    let labeled = dir.path().join("labeled.ndjson");
    ok(&[
        "rouge-label",
        answers.to_str().unwrap(),
        "--dataset",
        &data,
        "--out",
        labeled.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&labeled).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[2].contains(r#""label":false"#));
    assert!(lines[1].contains(r#""label":true"#));
    ok(&["validate", labeled.to_str().unwrap()]);
}
