use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_error, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> MeanStd {
    if values.is_empty() {
        return MeanStd { mean: 0.0, std: 0.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub instances: usize,
    pub exact_match: f64,
    pub inverse_levenshtein: f64,
    pub mean_rouge: f64,
    pub backend_errors: usize,
    pub parse_failures: usize,
    /// Solved count before any refinement, then after each round.
    pub solved_per_round: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub solved_per_seed: Vec<usize>,
    pub exact_match: MeanStd,
    /// Seeds whose solved count dropped relative to the previous round.
    pub decreased_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_digest: String,
    pub critique_source: String,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedRow>,
    pub aggregate: BTreeMap<String, MeanStd>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rounds: Option<Vec<RoundSummary>>,
}

pub(crate) const METRICS: [&str; 3] = ["exact_match", "inverse_levenshtein", "mean_rouge"];

pub(crate) fn metric(row: &SeedRow, name: &str) -> f64 {
    match name {
        "exact_match" => row.exact_match,
        "inverse_levenshtein" => row.inverse_levenshtein,
        "mean_rouge" => row.mean_rouge,
        "backend_errors" => row.backend_errors as f64,
        "parse_failures" => row.parse_failures as f64,
        _ => unreachable!("unknown metric {name}"),
    }
}

pub(crate) fn aggregate(rows: &[SeedRow]) -> BTreeMap<String, MeanStd> {
    METRICS
        .iter()
        .chain(&["backend_errors", "parse_failures"])
        .map(|m| {
            let v: Vec<f64> = rows.iter().map(|r| metric(r, m)).collect();
            (m.to_string(), mean_std(&v))
        })
        .collect()
}

pub(crate) fn round_summaries(rows: &[SeedRow]) -> Vec<RoundSummary> {
    let rounds = rows.iter().map(|r| r.solved_per_round.len()).min().unwrap_or(0);
    (0..rounds)
        .map(|k| {
            let solved: Vec<usize> = rows.iter().map(|r| r.solved_per_round[k]).collect();
            let em: Vec<f64> = rows
                .iter()
                .map(|r| r.solved_per_round[k] as f64 / r.instances.max(1) as f64)
                .collect();
            let decreased_seeds = if k == 0 {
                Vec::new()
            } else {
                rows.iter()
                    .filter(|r| r.solved_per_round[k] < r.solved_per_round[k - 1])
                    .map(|r| r.seed)
                    .collect()
            };
            RoundSummary {
                round: k,
                solved_per_seed: solved,
                exact_match: mean_std(&em),
                decreased_seeds,
            }
        })
        .collect()
}

/// Aligned text rendering of a report.
pub fn render_table(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "critique source: {}", report.critique_source);
    let _ = writeln!(
        s,
        "{:>8} {:>9} {:>12} {:>12} {:>12} {:>8} {:>8}",
        "seed", "instances", "exact_match", "inv_lev", "mean_rouge", "errors", "unparsed"
    );
    for r in &report.per_seed {
        let _ = writeln!(
            s,
            "{:>8} {:>9} {:>12.4} {:>12.4} {:>12.4} {:>8} {:>8}",
            r.seed,
            r.instances,
            r.exact_match,
            r.inverse_levenshtein,
            r.mean_rouge,
            r.backend_errors,
            r.parse_failures
        );
    }
    let agg = |m: &str| report.aggregate.get(m).copied().unwrap_or(MeanStd { mean: 0.0, std: 0.0 });
    let _ = writeln!(
        s,
        "{:>8} {:>9} {:>12} {:>12} {:>12}",
        "mean±std",
        "",
        format!("{:.4}±{:.4}", agg("exact_match").mean, agg("exact_match").std),
        format!("{:.4}±{:.4}", agg("inverse_levenshtein").mean, agg("inverse_levenshtein").std),
        format!("{:.4}±{:.4}", agg("mean_rouge").mean, agg("mean_rouge").std),
    );
    if let Some(rounds) = &report.rounds {
        let _ = writeln!(s, "\n{:>6} {:>16} {:>24}  decreased", "round", "exact_match", "solved per seed");
        for r in rounds {
            let solved: Vec<String> = r.solved_per_seed.iter().map(|v| v.to_string()).collect();
            let dec: Vec<String> = r.decreased_seeds.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                s,
                "{:>6} {:>16} {:>24}  {}",
                r.round,
                format!("{:.4}±{:.4}", r.exact_match.mean, r.exact_match.std),
                solved.join(" "),
                if dec.is_empty() { "-".to_owned() } else { dec.join(" ") }
            );
        }
    }
    s
}

/// Writes `{stem}.json` and `{stem}.txt` into `dir`; returns the JSON path.
pub fn write_report(dir: &Path, stem: &str, report: &EvalReport) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let json = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&json, text + "\n").map_err(|e| io_error(&json, e))?;
    let txt = dir.join(format!("{stem}.txt"));
    std::fs::write(&txt, render_table(report)).map_err(|e| io_error(&txt, e))?;
    Ok(json)
}
