//! Memory records and their JSONL corpus format.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::DocId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
    ToolCall,
    ToolOutput,
    System,
    Planning,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::User,
        Role::Assistant,
        Role::ToolCall,
        Role::ToolOutput,
        Role::System,
        Role::Planning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::ToolCall => "tool_call",
            Role::ToolOutput => "tool_output",
            Role::System => "system",
            Role::Planning => "planning",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown role {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub id: DocId,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f32>>,
    pub role: Role,
    pub session: String,
    pub agent: String,
    #[serde(default)]
    pub tool_type: Option<String>,
    pub ts_ms: i64,
    pub weight: f64,
}

impl MemoryRecord {
    /// Minimal record for tests and loaders; metadata gets neutral values.
    pub fn new(id: DocId, text: impl Into<String>, ts_ms: i64) -> Self {
        Self {
            id,
            text: text.into(),
            embedding: None,
            role: Role::User,
            session: String::new(),
            agent: String::new(),
            tool_type: None,
            ts_ms,
            weight: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(Error::InvalidParameter(format!(
                "record {}: weight {} outside [0, 1]",
                self.id, self.weight
            )));
        }
        if self.ts_ms < 0 {
            return Err(Error::InvalidParameter(format!("record {}: negative timestamp", self.id)));
        }
        Ok(())
    }
}

/// Reads a JSONL corpus, validating every record.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<MemoryRecord>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedLine { line: n + 1, reason };
        let rec: MemoryRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        rec.validate().map_err(|e| bad(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[MemoryRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Id-keyed view over a record slice.
#[derive(Debug, Clone)]
pub struct RecordStore<'a> {
    by_id: HashMap<DocId, &'a MemoryRecord>,
}

impl<'a> RecordStore<'a> {
    pub fn new(records: &'a [MemoryRecord]) -> Self {
        Self {
            by_id: records.iter().map(|r| (r.id, r)).collect(),
        }
    }

    pub fn get(&self, id: DocId) -> Result<&'a MemoryRecord> {
        self.by_id.get(&id).copied().ok_or(Error::MissingRecord(id))
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}
