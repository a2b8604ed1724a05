use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// What a command prints: a JSON summary for `--json`, a table otherwise.
pub struct Report {
    pub summary: serde_json::Value,
    pub text: String,
    /// Nonzero exit without an error, e.g. a failed self-check.
    pub failed: bool,
}

impl Report {
    pub fn new(summary: impl Serialize, text: String) -> anyhow::Result<Self> {
        Ok(Report { summary: serde_json::to_value(summary)?, text, failed: false })
    }
}

/// Write via a temporary file in the target directory, then rename over the target.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn write_text(path: &Path, mut s: String) -> anyhow::Result<()> {
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn write_csv(path: &Path, table: &starkplan::data::Table) -> anyhow::Result<()> {
    write_atomic(path, table.to_csv_string().as_bytes())
}

/// Fixed-width text table.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        s.join("  ").trim_end().to_string()
    };
    let mut out = vec![line(headers.to_vec())];
    out.push(line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(|s| s.as_str()).collect()));
    for r in rows {
        out.push(line(r.iter().map(|s| s.as_str()).collect()));
    }
    out.join("\n")
}

pub fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if (1e-3..1e6).contains(&a) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}
