//! LongMemEval and LoCoMo JSON layouts mapped into records, queries and
//! qrels. Each dialogue turn becomes one record; all conversations are
//! pooled into a single corpus.

use std::collections::{BTreeMap, HashMap};

use anyhow::{bail, Context, Result};
use chrono::NaiveDateTime;
use memir::record::{MemoryRecord, Role};
use memir::workload::Query;
use memir::DocId;
use serde::Deserialize;

#[derive(Debug, Default)]
pub struct Imported {
    pub records: Vec<MemoryRecord>,
    pub queries: Vec<Query>,
    /// Evidence references that matched no turn.
    pub unresolved: usize,
}

fn clean(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn role_of(s: &str) -> Role {
    s.parse().unwrap_or(Role::User)
}

#[derive(Deserialize)]
struct LmeTurn {
    role: String,
    content: String,
    #[serde(default)]
    has_answer: bool,
}

#[derive(Deserialize)]
struct LmeEntry {
    question_id: String,
    question_type: String,
    question: String,
    question_date: String,
    haystack_session_ids: Vec<String>,
    haystack_dates: Vec<String>,
    haystack_sessions: Vec<Vec<LmeTurn>>,
    #[serde(default)]
    answer_session_ids: Vec<String>,
}

fn lme_time(s: &str) -> Result<i64> {
    let t = NaiveDateTime::parse_from_str(s.trim(), "%Y/%m/%d (%a) %H:%M")
        .with_context(|| format!("unrecognized LongMemEval date {s:?}"))?;
    Ok(t.and_utc().timestamp_millis())
}

/// LongMemEval: a list of questions, each with its own haystack of
/// sessions. Sessions shared between questions are stored once. Gold turns
/// are those marked `has_answer`; without marks, every turn of the answer
/// sessions is gold.
pub fn longmemeval(json: &str) -> Result<Imported> {
    let entries: Vec<LmeEntry> = serde_json::from_str(json).context("parsing LongMemEval JSON")?;
    let mut out = Imported::default();
    let mut sessions: HashMap<String, Vec<DocId>> = HashMap::new();
    for e in &entries {
        if e.haystack_session_ids.len() != e.haystack_sessions.len() || e.haystack_dates.len() != e.haystack_sessions.len() {
            bail!("question {}: haystack ids, dates and sessions differ in length", e.question_id);
        }
        let mut marked = Vec::new();
        for ((sid, date), turns) in e.haystack_session_ids.iter().zip(&e.haystack_dates).zip(&e.haystack_sessions) {
            let ids = match sessions.get(sid) {
                Some(ids) => ids.clone(),
                None => {
                    let start = lme_time(date)?;
                    let mut ids = Vec::with_capacity(turns.len());
                    for (i, t) in turns.iter().enumerate() {
                        let id = out.records.len() as DocId;
                        let mut r = MemoryRecord::new(id, clean(&t.content), start + i as i64 * 1000);
                        r.role = role_of(&t.role);
                        r.session = sid.clone();
                        r.agent = "longmemeval".into();
                        out.records.push(r);
                        ids.push(id);
                    }
                    sessions.insert(sid.clone(), ids.clone());
                    ids
                }
            };
            for (t, id) in turns.iter().zip(&ids) {
                if t.has_answer {
                    marked.push(*id);
                }
            }
        }
        let mut gold = marked;
        if gold.is_empty() {
            for sid in &e.answer_session_ids {
                match sessions.get(sid) {
                    Some(ids) => gold.extend(ids),
                    None => out.unresolved += 1,
                }
            }
        }
        gold.sort_unstable();
        gold.dedup();
        out.queries.push(Query {
            qid: e.question_id.clone(),
            text: clean(&e.question),
            gold,
            ts_ms: lme_time(&e.question_date)?,
            qtype: e.question_type.clone(),
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct LocomoTurn {
    speaker: String,
    dia_id: String,
    text: String,
}

#[derive(Deserialize)]
struct LocomoQa {
    question: String,
    #[serde(default)]
    evidence: Vec<String>,
    category: serde_json::Value,
}

#[derive(Deserialize)]
struct LocomoSample {
    sample_id: String,
    conversation: serde_json::Map<String, serde_json::Value>,
    qa: Vec<LocomoQa>,
}

fn locomo_time(s: &str) -> Result<i64> {
    let t = NaiveDateTime::parse_from_str(s.trim(), "%I:%M %p on %d %B, %Y")
        .with_context(|| format!("unrecognized LoCoMo date {s:?}"))?;
    Ok(t.and_utc().timestamp_millis())
}

/// LoCoMo: a list of conversations with numbered `session_N` turn lists,
/// `session_N_date_time` stamps, and QA items citing turns by `dia_id`.
/// Queries are issued just after the conversation's last turn.
pub fn locomo(json: &str) -> Result<Imported> {
    let samples: Vec<LocomoSample> = serde_json::from_str(json).context("parsing LoCoMo JSON")?;
    let mut out = Imported::default();
    for s in &samples {
        let conv = &s.conversation;
        let speaker_b = conv.get("speaker_b").and_then(|v| v.as_str()).unwrap_or_default().to_string();
        let mut numbered: BTreeMap<u32, &serde_json::Value> = BTreeMap::new();
        for (k, v) in conv {
            if let Some(n) = k.strip_prefix("session_").and_then(|n| n.parse::<u32>().ok()) {
                numbered.insert(n, v);
            }
        }
        let mut by_dia: HashMap<String, DocId> = HashMap::new();
        let mut last_ts = 0i64;
        for (n, v) in numbered {
            let date = conv
                .get(&format!("session_{n}_date_time"))
                .and_then(|d| d.as_str())
                .with_context(|| format!("{}: session_{n} has no date_time", s.sample_id))?;
            let start = locomo_time(date)?;
            let turns: Vec<LocomoTurn> =
                serde_json::from_value(v.clone()).with_context(|| format!("{}: session_{n} turns", s.sample_id))?;
            for (i, t) in turns.iter().enumerate() {
                let id = out.records.len() as DocId;
                let ts = start + i as i64 * 1000;
                let mut r = MemoryRecord::new(id, clean(&t.text), ts);
                r.role = if t.speaker == speaker_b { Role::Assistant } else { Role::User };
                r.session = format!("{}/session_{n}", s.sample_id);
                r.agent = s.sample_id.clone();
                out.records.push(r);
                by_dia.insert(t.dia_id.clone(), id);
                last_ts = last_ts.max(ts);
            }
        }
        for (i, qa) in s.qa.iter().enumerate() {
            let mut gold = Vec::new();
            for ev in &qa.evidence {
                for d in ev.split([';', ',', ' ']).filter(|d| !d.is_empty()) {
                    match by_dia.get(d) {
                        Some(&id) => gold.push(id),
                        None => out.unresolved += 1,
                    }
                }
            }
            gold.sort_unstable();
            gold.dedup();
            let category = match &qa.category {
                serde_json::Value::String(c) => c.clone(),
                other => other.to_string(),
            };
            out.queries.push(Query {
                qid: format!("{}_q{i}", s.sample_id),
                text: clean(&qa.question),
                gold,
                ts_ms: last_ts + 1000,
                qtype: format!("category_{category}"),
            });
        }
    }
    Ok(out)
}
