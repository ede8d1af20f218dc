//! TREC qrels (`qid iter doc rel`) and run (`qid Q0 doc rank score tag`)
//! files. Document ids must be non-negative integers; qrels lines with
//! other ids are skipped and counted.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::eval::metrics::Rels;
use crate::ranking::{DocId, RankedList, Scored};

pub type Qrels = BTreeMap<String, Rels>;

pub fn read_qrels<R: BufRead>(r: R) -> Result<(Qrels, usize)> {
    let mut out = Qrels::new();
    let mut skipped = 0;
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 4 {
            return Err(Error::MalformedLine {
                line: n + 1,
                reason: format!("expected 4 columns, found {}", f.len()),
            });
        }
        let rel: i64 = f[3].parse().map_err(|_| Error::MalformedLine {
            line: n + 1,
            reason: format!("relevance {:?} is not an integer", f[3]),
        })?;
        let Ok(doc) = f[2].parse::<DocId>() else {
            skipped += 1;
            continue;
        };
        out.entry(f[0].to_string()).or_default().insert(doc, rel.max(0) as u32);
    }
    Ok((out, skipped))
}

pub fn write_qrels<W: Write>(mut w: W, qrels: &Qrels) -> Result<()> {
    for (q, rels) in qrels {
        let mut docs: Vec<_> = rels.iter().collect();
        docs.sort();
        for (d, r) in docs {
            writeln!(w, "{q} 0 {d} {r}")?;
        }
    }
    Ok(())
}

pub fn write_run<W: Write>(mut w: W, qid: &str, list: &RankedList, tag: &str) -> Result<()> {
    for (i, s) in list.entries().iter().enumerate() {
        writeln!(w, "{qid} Q0 {} {} {} {tag}", s.doc, i + 1, s.score)?;
    }
    Ok(())
}

/// Reads a run file; each query's entries are re-sorted by score with the
/// ascending-doc-id tie rule.
pub fn read_run<R: BufRead>(r: R) -> Result<BTreeMap<String, RankedList>> {
    let mut raw: BTreeMap<String, Vec<Scored>> = BTreeMap::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedLine { line: n + 1, reason };
        if f.len() != 6 {
            return Err(bad(format!("expected 6 columns, found {}", f.len())));
        }
        let doc: DocId = f[2].parse().map_err(|_| bad(format!("doc id {:?} is not an integer", f[2])))?;
        let score: f64 = f[4].parse().map_err(|_| bad(format!("score {:?} is not a number", f[4])))?;
        raw.entry(f[0].to_string()).or_default().push(Scored::new(doc, score));
    }
    Ok(raw
        .into_iter()
        .map(|(q, v)| {
            let n = v.len();
            (q, RankedList::from_unsorted(v, n))
        })
        .collect())
}
