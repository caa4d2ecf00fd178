use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Interpretation choices every manifest carries verbatim.
pub const DECISIONS: &[&str] = &[
    "metrics are computed on pooled held-out predictions per repeat, then averaged over repeats (unless metric_pooling = perfold)",
    "stratified k-fold: MOS ranked into equal-frequency bins, each bin shuffled and dealt round-robin",
    "RMSE* margin: per-sample CI95 column when present, else the global epsilon, else not attempted",
    "significance tests assume the same sample size (significance_n) for every model",
    "GP: protected operators below 1e-6, constants uniform on [-1, 1], full initialization depth 2..6, depth cap 17",
    "MLP: hidden width defaults to the input feature count",
    "synthetic MOS is a monotone surrogate, not subjective scores",
];

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Where an input file lives relative to the run outputs.
#[derive(Debug, Clone)]
pub enum InputRecord {
    /// Written by this run into its own output directory.
    Local { file: String, sha256: String },
    External { path: PathBuf, sha256: String },
}

impl InputRecord {
    pub fn to_json(&self) -> Value {
        match self {
            InputRecord::Local { file, sha256 } => json!({"location": "out_dir", "path": file, "sha256": sha256}),
            InputRecord::External { path, sha256 } => {
                json!({"location": "external", "path": path.display().to_string(), "sha256": sha256})
            }
        }
    }
}

pub fn build(subcommand: &str, seed: u64, surrogate: bool, inputs: Value, parameters: Value) -> Value {
    json!({
        "tool": "avqual",
        "version": TOOL_VERSION,
        "subcommand": subcommand,
        "seed": seed,
        "surrogate": surrogate,
        "inputs": inputs,
        "parameters": parameters,
        "decisions": DECISIONS,
    })
}

/// `<out>.manifest.json` next to a single-file output.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn write(path: &Path, manifest: &Value) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Recomputes every recorded input hash; `dir` resolves `out_dir` entries.
pub fn verify(manifest: &Value, dir: &Path) -> Result<Vec<String>> {
    let inputs = manifest["inputs"].as_object().context("manifest has no inputs")?;
    let mut lines = Vec::new();
    for (name, rec) in inputs {
        let path = rec["path"].as_str().with_context(|| format!("input {name} has no path"))?;
        let want = rec["sha256"].as_str().with_context(|| format!("input {name} has no hash"))?;
        let full = match rec["location"].as_str() {
            Some("out_dir") => dir.join(path),
            _ => PathBuf::from(path),
        };
        let got = sha256_file(&full)?;
        if got != want {
            anyhow::bail!("{name}: hash mismatch for {} (recorded {want}, found {got})", full.display());
        }
        lines.push(format!("{name}: ok {}", full.display()));
    }
    Ok(lines)
}
