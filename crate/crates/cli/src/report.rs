//! Artifact files: `results.csv`, `summary.json`, `summary.txt`.
//!
//! Numbers are printed with the default float formatter (shortest
//! round-trip form), so a rerun of the same resolved config reproduces the
//! files byte for byte. All three files are written to a temp sibling and
//! renamed into place after the experiment has finished computing.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use margin_paths_core::solvers::SweepResult;

/// One gating invariant of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            label: label.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Provenance lines shared by all three artifact files.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub experiment: String,
    /// Statement ids the experiment exercises, fixed strings in code.
    pub statements: Vec<&'static str>,
    pub dataset: String,
    pub predictor: String,
    pub norm: String,
    pub seed: u64,
    pub grid: String,
    pub config_sha256: String,
}

/// Everything an experiment hands back for emission.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub meta: RunMeta,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Machine-readable attachments (stationarity certificates, oracle
    /// solutions); lands under "extra" in summary.json.
    pub extra: serde_json::Value,
}

impl ExperimentOutput {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Canonical CSV shape for a single sweep: one row per record, margins
/// sorted ascending, then the full parameter vector.
pub fn sweep_columns(sw: &SweepResult) -> Vec<String> {
    let n = sw.records[0].profile.sorted_margins.len();
    let dim = sw.records[0].theta.theta.len();
    let mut cols = vec![
        String::from("kind"),
        String::from("scale"),
        String::from("log_loss"),
        String::from("min_margin"),
    ];
    cols.extend((0..n).map(|i| format!("m{i}")));
    cols.extend((0..dim).map(|j| format!("theta{j}")));
    cols.push(String::from("pg_norm"));
    cols.push(String::from("restarts_used"));
    cols
}

pub fn sweep_rows(sw: &SweepResult) -> Vec<Vec<String>> {
    sw.records
        .iter()
        .map(|r| {
            let mut row = vec![
                String::from(r.kind.label()),
                num(r.scale),
                num(r.log_loss),
                num(r.min_margin()),
            ];
            row.extend(r.profile.sorted_margins.iter().map(|&m| num(m)));
            row.extend(r.theta.theta.iter().map(|&t| num(t)));
            row.push(num(r.meta.projected_grad_norm));
            row.push(format!("{}", r.meta.restarts_used));
            row
        })
        .collect()
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    statements: &'a [&'static str],
    dataset: &'a str,
    predictor: &'a str,
    norm: &'a str,
    seed: u64,
    grid: &'a str,
    config_sha256: &'a str,
    pass: bool,
    checks: &'a [Check],
    notes: &'a [String],
    extra: &'a serde_json::Value,
}

fn csv_text(out: &ExperimentOutput) -> String {
    let m = &out.meta;
    let mut s = String::new();
    s.push_str(&format!("# experiment: {}\n", m.experiment));
    s.push_str(&format!("# statements: {}\n", m.statements.join(" ")));
    s.push_str(&format!("# dataset: {}\n", m.dataset));
    s.push_str(&format!("# predictor: {}\n", m.predictor));
    s.push_str(&format!("# norm: {}\n", m.norm));
    s.push_str(&format!("# seed: {}\n", m.seed));
    s.push_str(&format!("# grid: {}\n", m.grid));
    s.push_str(&format!("# config_sha256: {}\n", m.config_sha256));
    s.push_str(&out.columns.join(","));
    s.push('\n');
    for row in &out.rows {
        debug_assert_eq!(row.len(), out.columns.len());
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn text_summary(out: &ExperimentOutput) -> String {
    let m = &out.meta;
    let mut s = String::new();
    s.push_str(&format!("experiment: {}\n", m.experiment));
    s.push_str(&format!("statements: {}\n", m.statements.join(" ")));
    s.push_str(&format!("dataset: {}\n", m.dataset));
    s.push_str(&format!("predictor: {}\n", m.predictor));
    s.push_str(&format!("norm: {}\n", m.norm));
    s.push_str(&format!("seed: {}\n", m.seed));
    s.push_str(&format!("grid: {}\n", m.grid));
    s.push_str(&format!("config_sha256: {}\n", m.config_sha256));
    s.push_str("checks:\n");
    for c in &out.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        s.push_str(&format!("  {}: {} ({})\n", c.label, verdict, c.detail));
    }
    if !out.notes.is_empty() {
        s.push_str("notes:\n");
        for n in &out.notes {
            s.push_str(&format!("  {n}\n"));
        }
    }
    let verdict = if out.pass() { "PASS" } else { "FAIL" };
    s.push_str(&format!("result: {verdict}\n"));
    s
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut name = path
        .file_name()
        .context("artifact path has no file name")?
        .to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Writes the three artifact files and returns whether every check passed.
pub fn write_artifacts(out_dir: &Path, out: &ExperimentOutput) -> Result<bool> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    let m = &out.meta;
    let summary = Summary {
        experiment: &m.experiment,
        statements: &m.statements,
        dataset: &m.dataset,
        predictor: &m.predictor,
        norm: &m.norm,
        seed: m.seed,
        grid: &m.grid,
        config_sha256: &m.config_sha256,
        pass: out.pass(),
        checks: &out.checks,
        notes: &out.notes,
        extra: &out.extra,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_atomic(&out_dir.join("results.csv"), &csv_text(out))?;
    write_atomic(&out_dir.join("summary.json"), &json)?;
    write_atomic(&out_dir.join("summary.txt"), &text_summary(out))?;
    Ok(out.pass())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_output() -> ExperimentOutput {
        ExperimentOutput {
            meta: RunMeta {
                experiment: String::from("margin_gap"),
                statements: vec!["L2", "L3"],
                dataset: String::from("N=2 d=2 seed=11"),
                predictor: String::from("linear(2)"),
                norm: String::from("l2"),
                seed: 7,
                grid: String::from("12-point geometric"),
                config_sha256: String::from("deadbeef"),
            },
            columns: vec![String::from("a"), String::from("b")],
            rows: vec![vec![num(1.0), num(0.5)]],
            checks: vec![Check::new("gap <= log N", true, "max gap 0.1")],
            notes: vec![String::from("warm-started")],
            extra: serde_json::Value::Null,
        }
    }

    #[test]
    fn csv_has_eight_comment_lines_then_header() {
        let text = csv_text(&sample_output());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.iter().take_while(|l| l.starts_with('#')).count(), 8);
        assert_eq!(lines[8], "a,b");
        assert_eq!(lines[9], "1,0.5");
    }

    #[test]
    fn text_summary_names_each_check_with_a_verdict() {
        let text = text_summary(&sample_output());
        assert!(text.contains("gap <= log N: PASS"));
        assert!(text.ends_with("result: PASS\n"));
    }

    #[test]
    fn artifacts_land_in_the_output_dir() {
        let dir = tempfile::tempdir().unwrap();
        let out = sample_output();
        let pass = write_artifacts(dir.path(), &out).unwrap();
        assert!(pass);
        for f in ["results.csv", "summary.json", "summary.txt"] {
            assert!(dir.path().join(f).is_file());
        }
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(json["experiment"], "margin_gap");
        assert_eq!(json["pass"], true);
    }
}
