//! Artifact output: JSON and CSV rendering with atomic file writes.
//!
//! `-` sends the artifact to stdout, which stays reserved for it; all
//! diagnostics go to stderr.  File writes land in a temporary sibling first
//! and are renamed into place, so readers never observe a half-written
//! artifact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

pub fn write_json<T: Serialize>(output: &str, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing the artifact")?;
    text.push('\n');
    write_bytes(output, text.as_bytes())
}

pub fn write_csv(output: &str, header: &str, rows: &[String]) -> anyhow::Result<()> {
    let mut text = String::with_capacity(header.len() + 1 + rows.iter().map(|r| r.len() + 1).sum::<usize>());
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_bytes(output, text.as_bytes())
}

fn write_bytes(output: &str, bytes: &[u8]) -> anyhow::Result<()> {
    if output == "-" {
        std::io::stdout()
            .write_all(bytes)
            .context("writing to stdout")?;
        return Ok(());
    }
    let path = Path::new(output);
    let tmp = temp_sibling(path);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("moving the artifact into {}", path.display()))?;
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}
