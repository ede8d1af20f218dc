//! File plumbing shared by the subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use memir::eval::{read_qrels, Qrels};
use memir::record::{read_jsonl, MemoryRecord};
use memir::workload::{read_queries_tsv, Query};

use crate::config::RunConfig;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn read_corpus(path: &Path) -> Result<Vec<MemoryRecord>> {
    read_jsonl(open(path)?).with_context(|| format!("reading corpus {}", path.display()))
}

pub fn read_queries(path: &Path) -> Result<Vec<Query>> {
    read_queries_tsv(open(path)?).with_context(|| format!("reading queries {}", path.display()))
}

pub fn read_qrels_file(path: &Path) -> Result<Qrels> {
    let (qrels, skipped) = read_qrels(open(path)?).with_context(|| format!("reading qrels {}", path.display()))?;
    if skipped > 0 {
        log::warn!("{}: ignored {skipped} judgments with non-numeric doc ids", path.display());
    }
    Ok(qrels)
}

/// CSV writer whose first line records the command, config hash and seed.
pub fn csv(path: &Path, command: &str, cfg: &RunConfig, columns: &str) -> Result<BufWriter<File>> {
    let mut w = create(path)?;
    writeln!(w, "# memir {command} config_sha256={} seed={}", cfg.sha256(), cfg.seed)?;
    writeln!(w, "{columns}")?;
    Ok(w)
}

/// Empty string for absent values in CSV cells.
pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flushes a buffered writer so write errors are not lost on drop.
pub fn finish<W: Write>(mut w: W) -> Result<()> {
    w.flush()?;
    Ok(())
}
