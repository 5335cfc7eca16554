use std::path::Path;

use serde::Serialize;

/// Shortest round-trip form, in exponent notation for very small or large
/// magnitudes. Negative zero prints as zero.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    let fail = |e: csv::Error| format!("writing {}: {e}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(header).map_err(fail)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row).map_err(fail)?;
    }
    w.flush().map_err(|e| format!("writing {}: {e}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct Versions {
    #[serde(rename = "quench-cli")]
    pub cli: &'static str,
    #[serde(rename = "quench-core")]
    pub core: &'static str,
}

/// Everything needed to rerun and audit one invocation. Timestamps live here
/// and never in the CSV bodies.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, P: Serialize> {
    pub command: &'a str,
    pub versions: Versions,
    pub params: &'a P,
    pub seed: u64,
    pub threads: usize,
    pub output_dir: String,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
    pub violations: usize,
    pub exit_code: u8,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
}

pub fn write_manifest<P: Serialize>(path: &Path, manifest: &Manifest<'_, P>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| e.to_string())?;
    std::fs::write(path, text + "\n").map_err(|e| format!("writing {}: {e}", path.display()))
}
