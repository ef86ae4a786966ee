//! Output files: structured JSON run records and CSV tables.
//!
//! Everything here is a pure string builder plus one `write_text` helper,
//! so the exact bytes are easy to test and identical across reruns with
//! the same inputs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use qnv_core::classical::EstimateResult;
use qnv_core::model::OrderDecision;
use qnv_core::optimizer::{EstimatorChoice, Heatmap};

use crate::CliError;

/// One solve or estimate run, serialized as the command's JSON output.
#[derive(Serialize)]
pub struct RunRecord<'a> {
    pub command: &'static str,
    pub description: Option<&'a str>,
    pub seed: u64,
    pub estimator: &'a EstimatorChoice,
    /// Order quantity per supplier.
    pub q: &'a [u32],
    /// Supplier activation indicators derived from `q`.
    pub x: Vec<u8>,
    pub total_units: u64,
    pub objective: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples_or_shots: u64,
    pub oracle_queries: u64,
}

impl<'a> RunRecord<'a> {
    pub fn new(
        command: &'static str,
        description: Option<&'a str>,
        seed: u64,
        estimator: &'a EstimatorChoice,
        decision: &'a OrderDecision,
        result: &EstimateResult,
    ) -> Self {
        RunRecord {
            command,
            description,
            seed,
            estimator,
            q: decision.q(),
            x: decision.x(),
            total_units: decision.total(),
            objective: result.estimate,
            ci_low: result.ci_low,
            ci_high: result.ci_high,
            samples_or_shots: result.samples_or_shots,
            oracle_queries: result.oracle_queries,
        }
    }
}

/// Renders a heatmap as CSV: header `r1,r2,objective,q1,q2`, rows in
/// row-major order (axis1 outer, axis2 inner), reliabilities and
/// objectives with six decimal places.
pub fn heatmap_csv(map: &Heatmap) -> String {
    let mut out = String::from("r1,r2,objective,q1,q2\n");
    for (i, &r1) in map.axis1.iter().enumerate() {
        for (j, &r2) in map.axis2.iter().enumerate() {
            let q = map.decision[i][j].q();
            out.push_str(&format!(
                "{:.6},{:.6},{:.6},{},{}\n",
                r1, r2, map.objective[i][j], q[0], q[1]
            ));
        }
    }
    out
}

/// Renders the loader comparison table: `index,target_prob,learned_prob`
/// with six decimal places.
pub fn load_dist_csv(target: &[f64], learned: &[f64]) -> String {
    let mut out = String::from("index,target_prob,learned_prob\n");
    for (i, (t, l)) in target.iter().zip(learned).enumerate() {
        out.push_str(&format!("{i},{t:.6},{l:.6}\n"));
    }
    out
}

/// Serializes a value as pretty JSON with a trailing newline. Field order
/// follows the struct definition, so the bytes are stable.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing output: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes `content` under `out_dir`, creating the directory first, and
/// returns the full path for reporting.
pub fn write_text(out_dir: &Path, file_name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| {
        CliError::Runtime(format!("creating {}: {e}", out_dir.display()))
    })?;
    let path = out_dir.join(file_name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}
