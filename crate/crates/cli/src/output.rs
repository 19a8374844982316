//! Artifact serialization: atomic file writes, the fixed-column scan CSV,
//! and the stdout summary object.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;

use lgsim_core::threelevel::ScanGrid;

/// Fixed, documented column order of scan CSV files.
pub const CSV_HEADER: &str = "theta,phi,chi,delta_a_A,delta_a_B,delta_a_C,\
delta_A,delta_B,delta_C,K,K_A,Delta,Delta_A,weak_K,flags";

/// Write bytes atomically: temp file in the destination directory, then
/// rename.  No partial files on failure.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// 17 significant digits: round-trips f64 exactly and is byte-stable.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a completed scan grid as CSV (UTF-8, LF, header row, fixed
/// column order).  Points without a chi-root keep empty numeric fields and
/// are flagged `no-root`.
pub fn scan_csv(grid: &ScanGrid) -> String {
    let mut out = String::with_capacity(grid.records.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &grid.records {
        out.push_str(&fmt_f64(r.theta));
        out.push(',');
        out.push_str(&fmt_f64(r.phi));
        match (&r.chi, &r.metrics) {
            (Some(chi), Some(m)) => {
                out.push(',');
                out.push_str(&fmt_f64(*chi));
                for v in [
                    m.delta_a[0], m.delta_a[1], m.delta_a[2],
                    m.delta[0], m.delta[1], m.delta[2],
                    m.k, m.k_a, m.delta_total, m.delta_a_total, m.weak_k,
                ] {
                    out.push(',');
                    out.push_str(&fmt_f64(v));
                }
                let violated = m.k_a > 1.0 + m.delta_a_total + 1e-10;
                out.push(',');
                out.push_str(if violated { "violation" } else { "ok" });
            }
            _ => {
                out.push_str(&",".repeat(12));
                out.push_str(",no-root");
            }
        }
        out.push('\n');
    }
    out
}

/// Print the single machine-readable summary object to stdout.
pub fn emit_summary(summary: &Value) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer(&mut stdout, summary)?;
    stdout.write_all(b"\n")?;
    Ok(())
}
