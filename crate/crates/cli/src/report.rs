//! `summary.json`, `detail.csv` and the zoo listing.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::run::Outcome;

pub const SUMMARY_FILE: &str = "summary.json";
pub const DETAIL_FILE: &str = "detail.csv";

/// The summary document. Object keys are sorted, so equal inputs give
/// equal bytes once the timestamp is dropped.
pub fn summary(cfg: &RunConfig, outcome: &Outcome, timestamp: bool) -> anyhow::Result<Value> {
    let mut doc = json!({
        "tool": "perilimit",
        "version": env!("CARGO_PKG_VERSION"),
        "task": cfg.task.as_str(),
        "status": outcome.status.as_str(),
        "verdict": outcome.verdict,
        "exit_code": outcome.status.exit_code(),
        "config": serde_json::to_value(cfg).context("serializing config")?,
        "result": outcome.result,
        "notes": outcome.notes,
    });
    if let crate::run::Status::Diverged(msg) = &outcome.status {
        doc["diagnostic"] = json!(msg);
    }
    if timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        doc["timestamp_unix"] = json!(secs);
    }
    Ok(doc)
}

pub fn write_reports(dir: &Path, cfg: &RunConfig, outcome: &Outcome, timestamp: bool) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let doc = summary(cfg, outcome, timestamp)?;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;

    let path = dir.join(DETAIL_FILE);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(&outcome.detail.headers)?;
    for row in &outcome.detail.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One line per built-in model: family, name, parameters, formula.
pub fn zoo_text() -> String {
    let entries = perilimit::potentials::zoo();
    let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for e in entries {
        let params = if e.params.is_empty() { "-" } else { e.params };
        out.push_str(&format!("{:<9} {:<width$}  {}  [{}]\n", e.family, e.name, e.summary, params));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoo_lists_required_models() {
        let text = zoo_text();
        for name in ["mooney-rivlin", "neo-hookean", "incompressible-mr", "power-bond", "profile-cof"] {
            assert!(text.contains(name), "{name} missing");
        }
        assert_eq!(text, zoo_text());
    }
}
