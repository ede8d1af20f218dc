//! Run configuration: one TOML document holding every parameter block,
//! with environment overrides applied before deserialization.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use memir::cascade::CascadeConfig;
use memir::experiment::CascadeBench;
use memir::fusion::FusionParams;
use memir::router::TrainConfig;
use memir::session::SessionSpec;
use memir::sparse::{Bm25Params, DEFAULT_CHUNK_SIZE};
use memir::temporal::{TemporalParams, DAY_MS};
use memir::tokenizer::TokenizerMode;
use memir::workload::WorkloadSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Prefix for overrides: `MEMIR_BM25__K1=0.9` sets `bm25.k1`.
pub const ENV_PREFIX: &str = "MEMIR_";
/// Legacy switch for the analyzer.
pub const TOK_MODE_ENV: &str = "HYBRID_TOK_MODE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads for inter-query dispatch; 0 uses every core.
    pub workers: usize,
    pub tokenizer: TokenizerSection,
    pub bm25: Bm25Section,
    pub temporal: TemporalSection,
    pub dense: DenseSection,
    pub fusion: FusionParams,
    pub cascade: CascadeConfig,
    pub router: RouterSection,
    pub workload: WorkloadSpec,
    pub session: SessionSpec,
    pub bench: BenchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            workers: 0,
            tokenizer: TokenizerSection::default(),
            bm25: Bm25Section::default(),
            temporal: TemporalSection::default(),
            dense: DenseSection::default(),
            fusion: FusionParams::default(),
            cascade: CascadeConfig::default(),
            router: RouterSection::default(),
            workload: WorkloadSpec::default(),
            session: SessionSpec::default(),
            bench: BenchSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TokenizerSection {
    pub mode: TokenizerMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bm25Section {
    pub k1: f64,
    pub b: f64,
    pub top_k: usize,
    pub chunk_size: usize,
}

impl Default for Bm25Section {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            top_k: 100,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

impl Bm25Section {
    pub fn params(&self) -> Result<Bm25Params> {
        Ok(Bm25Params::new(self.k1, self.b)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemporalSection {
    pub window_days: f64,
    pub epsilon: f64,
    pub lambda_hat: f64,
    pub k_max_partitions: usize,
}

impl Default for TemporalSection {
    fn default() -> Self {
        let p = TemporalParams::default();
        Self {
            window_days: p.window_ms as f64 / DAY_MS as f64,
            epsilon: p.epsilon,
            lambda_hat: p.lambda_hat,
            k_max_partitions: p.k_max_partitions,
        }
    }
}

impl TemporalSection {
    pub fn params(&self) -> Result<TemporalParams> {
        let p = TemporalParams {
            window_ms: (self.window_days * DAY_MS as f64).round() as i64,
            epsilon: self.epsilon,
            lambda_hat: self.lambda_hat,
            k_max_partitions: self.k_max_partitions,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    Hash,
    /// Hash embedding that folds synthetic paraphrase tokens onto their
    /// originals; only meaningful on generated corpora.
    Concept,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenseSection {
    pub dim: usize,
    pub seed: u64,
    pub embedder: EmbedderKind,
    /// Candidate depth of each list fed to fusion.
    pub candidates: usize,
}

impl Default for DenseSection {
    fn default() -> Self {
        Self {
            dim: 384,
            seed: 7,
            embedder: EmbedderKind::Hash,
            candidates: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouterSection {
    pub folds: usize,
    pub train: TrainConfig,
    /// Best retrieval system per qtype, used by discrete routing.
    pub best_system: BTreeMap<String, String>,
}

impl Default for RouterSection {
    fn default() -> Self {
        Self {
            folds: 5,
            train: TrainConfig::default(),
            best_system: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub sizes: Vec<usize>,
    pub queries: usize,
    pub grid_steps: usize,
    pub noise_margin: f64,
    pub metric: String,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            sizes: vec![4_096, 16_384, 65_536, 262_144, 524_288],
            queries: 200,
            grid_steps: 20,
            noise_margin: 0.005,
            metric: "ndcg@10".into(),
        }
    }
}

impl RunConfig {
    /// Reads `path` (or starts from defaults) and applies overrides from
    /// `env`, a list of `(name, value)` pairs.
    pub fn load<I>(path: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut doc: toml::Table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                text.parse().with_context(|| format!("parsing config {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        let mut vars: Vec<(String, String)> = env.into_iter().collect();
        vars.sort();
        for (name, value) in vars {
            if name == TOK_MODE_ENV {
                set_path(&mut doc, &["tokenizer", "mode"], toml::Value::String(value.to_ascii_lowercase()))?;
            } else if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
                let keys: Vec<String> = rest.split("__").map(|k| k.to_ascii_lowercase()).collect();
                let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
                set_path(&mut doc, &keys, parse_scalar(&value))?;
            }
        }
        let cfg: RunConfig = doc.try_into().context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.bm25.params()?;
        if self.bm25.top_k == 0 || self.bm25.chunk_size == 0 {
            bail!("bm25.top_k and bm25.chunk_size must be positive");
        }
        self.temporal.params()?;
        self.fusion.validate()?;
        self.cascade.validate()?;
        self.workload.validate()?;
        self.session.validate()?;
        if self.dense.dim == 0 || self.dense.candidates == 0 {
            bail!("dense.dim and dense.candidates must be positive");
        }
        if self.bench.sizes.windows(2).any(|w| w[0] >= w[1]) {
            bail!("bench.sizes must be strictly ascending");
        }
        if self.router.folds < 2 {
            bail!("router.folds must be at least 2");
        }
        self.bench.metric.parse::<memir::eval::Metric>()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn cascade_bench(&self) -> Result<CascadeBench> {
        Ok(CascadeBench {
            k: 10,
            candidates: self.dense.candidates,
            dim: self.dense.dim,
            embed_seed: self.dense.seed,
            proxy: self.cascade.proxy,
            epsilon_guard: self.cascade.epsilon_guard,
            metric: self.bench.metric.clone(),
            mode: self.tokenizer.mode,
            bm25: self.bm25.params()?,
            fusion: self.fusion.clone(),
        })
    }
}

fn parse_scalar(v: &str) -> toml::Value {
    // Reuse TOML's literal grammar so numbers, booleans and arrays keep
    // their types; anything else is a bare string.
    let probe = format!("v = {v}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(v.to_string())),
        Err(_) => toml::Value::String(v.to_string()),
    }
}

fn set_path(doc: &mut toml::Table, keys: &[&str], value: toml::Value) -> Result<()> {
    let (last, parents) = keys.split_last().context("empty override key")?;
    let mut table = doc;
    for k in parents {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("override path {} crosses a non-table value", keys.join(".")),
        };
    }
    table.insert(last.to_string(), value);
    Ok(())
}
