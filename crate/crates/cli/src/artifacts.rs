//! Run artifacts: content-addressed output directories with a manifest.
//!
//! Layout: `<out>/<confighash16>/{manifest.json, results.csv, details.json}`.
//! The hash is SHA-256 over the canonical JSON serialization of the
//! effective config (after flag overrides), so identical experiments land
//! in the same directory and reruns must reproduce the same result bytes.
//! The manifest records the hash, tool version, wall-clock stamp, seed and
//! a verbatim config copy; `report` recomputes the hash from that copy, so
//! a tampered or bit-rotted run fails the merge.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{CliError, CliResult, ExperimentConfig};
use crate::rows::{parse_csv, render_csv, sort_rows, ReportRow};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const DETAILS_FILE: &str = "details.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema: u32,
    pub config_hash: String,
    pub tool_version: String,
    pub created_unix: u64,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub result_files: Vec<String>,
}

/// Hex SHA-256 of the canonical (struct-ordered) JSON bytes of a config.
pub fn config_hash(config: &ExperimentConfig) -> CliResult<String> {
    let bytes = serde_json::to_vec(config)
        .map_err(|e| CliError::Runtime(format!("config serialization failed: {e}")))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Write `results.csv`, `details.json` and `manifest.json` under
/// `<root>/<hash16>/`; returns the run directory.
pub fn write_run(
    root: &Path,
    config: &ExperimentConfig,
    rows: &[ReportRow],
    details: &serde_json::Value,
) -> CliResult<PathBuf> {
    for row in rows {
        row.validate()?;
    }
    let hash = config_hash(config)?;
    let dir = root.join(&hash[..16]);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(RESULTS_FILE), render_csv(rows))?;
    let mut details_text = serde_json::to_string_pretty(details)
        .map_err(|e| CliError::Runtime(format!("details serialization failed: {e}")))?;
    details_text.push('\n');
    fs::write(dir.join(DETAILS_FILE), details_text)?;
    let manifest = RunManifest {
        schema: 1,
        config_hash: hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed: config.seed,
        config: config.clone(),
        result_files: vec![RESULTS_FILE.into(), DETAILS_FILE.into()],
    };
    let mut manifest_text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Runtime(format!("manifest serialization failed: {e}")))?;
    manifest_text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), manifest_text)?;
    Ok(dir)
}

/// Per-run summary entry in `summary.json`.
#[derive(Debug, Serialize)]
struct RunSummary {
    dir: String,
    config_hash: String,
    task: String,
    seed: u64,
    rows: usize,
}

/// Merge every run under `root` into `merged.csv` + `summary.json`.
/// Returns `(merged csv text, summary value)`. Missing or corrupt
/// artifacts abort the merge.
pub fn merge_reports(root: &Path) -> CliResult<(String, serde_json::Value)> {
    if !root.is_dir() {
        return Err(CliError::MissingArtifacts(format!(
            "`{}` is not a directory",
            root.display()
        )));
    }
    let mut run_dirs: Vec<PathBuf> = fs::read_dir(root)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.join(MANIFEST_FILE).is_file())
        .collect();
    run_dirs.sort();
    if run_dirs.is_empty() {
        return Err(CliError::MissingArtifacts(format!(
            "no run manifests under `{}`",
            root.display()
        )));
    }
    let mut all_rows: Vec<ReportRow> = Vec::new();
    let mut summaries: Vec<RunSummary> = Vec::new();
    for dir in &run_dirs {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest_path).map_err(|e| {
            CliError::MissingArtifacts(format!("unreadable `{}`: {e}", manifest_path.display()))
        })?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| {
            CliError::MissingArtifacts(format!("corrupt `{}`: {e}", manifest_path.display()))
        })?;
        let recomputed = config_hash(&manifest.config)?;
        if recomputed != manifest.config_hash {
            return Err(CliError::MissingArtifacts(format!(
                "config hash mismatch in `{}`: stored {}, recomputed {recomputed}",
                manifest_path.display(),
                manifest.config_hash
            )));
        }
        let results_path = dir.join(RESULTS_FILE);
        let csv = fs::read_to_string(&results_path).map_err(|e| {
            CliError::MissingArtifacts(format!("unreadable `{}`: {e}", results_path.display()))
        })?;
        let rows = parse_csv(&csv)?;
        summaries.push(RunSummary {
            dir: dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            config_hash: manifest.config_hash,
            task: task_name(&manifest.config),
            seed: manifest.seed,
            rows: rows.len(),
        });
        all_rows.extend(rows);
    }
    sort_rows(&mut all_rows);
    let summary = serde_json::json!({
        "schema": 1,
        "runs": summaries.iter().map(|s| serde_json::to_value(s).unwrap()).collect::<Vec<_>>(),
        "total_rows": all_rows.len(),
    });
    Ok((render_csv(&all_rows), summary))
}

fn task_name(config: &ExperimentConfig) -> String {
    match serde_json::to_value(&config.task) {
        Ok(serde_json::Value::Object(map)) => map
            .get("kind")
            .and_then(|v| v.as_str())
            .unwrap_or("unknown")
            .to_string(),
        _ => "unknown".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TaskConfig;

    fn sample_config(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            schema: 1,
            seed,
            grid: None,
            task: TaskConfig::Classify { symbol: "xi1^2".into(), dim: None },
        }
    }

    #[test]
    fn hash_is_stable_and_seed_sensitive() {
        let a = config_hash(&sample_config(1)).unwrap();
        let b = config_hash(&sample_config(1)).unwrap();
        let c = config_hash(&sample_config(2)).unwrap();
        assert_eq!(a, b, "same config, same hash");
        assert_ne!(a, c, "seed participates in the address");
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn merge_round_trips_and_verifies_integrity() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        let rows = vec![ReportRow::new("xi1^2", "classify", "flag-h", 1.0)];
        write_run(root, &sample_config(1), &rows, &serde_json::json!({"ok": true})).unwrap();
        write_run(root, &sample_config(2), &rows, &serde_json::json!({"ok": true})).unwrap();
        let (csv1, summary) = merge_reports(root).unwrap();
        assert_eq!(csv1.lines().count(), 3, "header + one row per run");
        assert_eq!(summary["total_rows"], 2);
        let (csv2, _) = merge_reports(root).unwrap();
        assert_eq!(csv1, csv2, "re-merge is byte identical");

        // Corrupt one manifest: flip the stored hash.
        let dir = fs::read_dir(root)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.is_dir())
            .unwrap();
        let mpath = dir.join(MANIFEST_FILE);
        let mut manifest: RunManifest =
            serde_json::from_str(&fs::read_to_string(&mpath).unwrap()).unwrap();
        manifest.config.seed ^= 1;
        fs::write(&mpath, serde_json::to_string(&manifest).unwrap()).unwrap();
        let err = merge_reports(root).unwrap_err();
        assert_eq!(err.exit_code(), 4, "integrity failure is a missing-artifact error: {err}");
    }

    #[test]
    fn empty_directory_is_a_missing_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let err = merge_reports(tmp.path()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
