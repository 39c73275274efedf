//! Result-file writers. Every result is deterministic for a fixed config
//! and seed; timing fields only ever appear in probe logs and manifests.

use crate::manifest::{atomic_write, RunManifest};
use entrolab_core::validate::ConvergenceSeries;
use entrolab_core::{Error, Result};
use serde::Serialize;
use std::path::Path;

/// The metric convention stamped into every resolution-dependent report.
pub const METRIC_NOTE: &str = "d(x,y) = 2^-min{i: x_i != y_i}; eps = 2^-k";

pub fn write_json<T: Serialize>(path: &Path, value: &T, manifest: &mut RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())?;
    manifest.record_output(path)?;
    Ok(())
}

pub fn write_json_lines<T: Serialize>(
    path: &Path,
    values: &[T],
    manifest: &mut RunManifest,
) -> Result<()> {
    let mut text = String::new();
    for v in values {
        text.push_str(
            &serde_json::to_string(v)
                .map_err(|e| Error::internal(format!("serialization failed: {e}")))?,
        );
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())?;
    manifest.record_output(path)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str, manifest: &mut RunManifest) -> Result<()> {
    atomic_write(path, text.as_bytes())?;
    manifest.record_output(path)?;
    Ok(())
}

/// `n,value,ci` rows for a convergence series.
pub fn series_csv(series: &ConvergenceSeries) -> String {
    let mut out = String::from("n,value,ci\n");
    for i in 0..series.ns.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            series.ns[i], series.values[i], series.ci_halfwidth[i]
        ));
    }
    out
}

/// Torus samples with 17 significant digits per coordinate.
pub fn points_csv(points: &[entrolab_core::carpet::TorusPoint]) -> String {
    let mut out = String::from("x1,x2\n");
    for p in points {
        out.push_str(&format!("{:.16e},{:.16e}\n", p.x1, p.x2));
    }
    out
}

/// Convert a natural-log value for reporting. Accepted bases: e, 2, 10.
pub fn convert_base(value_nats: f64, base: &str) -> Result<f64> {
    match base {
        "e" => Ok(value_nats),
        "2" => Ok(value_nats / 2f64.ln()),
        "10" => Ok(value_nats / 10f64.ln()),
        other => Err(Error::invalid(format!(
            "unsupported log base {other:?} (use e, 2, or 10)"
        ))),
    }
}
