//! Question-type router: TF-IDF unigram+bigram features, multinomial
//! logistic regression trained by full-batch gradient descent, and discrete
//! or posterior-weighted routing to per-type systems.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::dense::{Embedder, HashEmbedder};
use crate::error::{Error, Result};
use crate::fusion::soft_rrf;
use crate::ranking::RankedList;
use crate::tokenizer::{tokenize, TokenizerMode};

/// Sparse feature vector: `(feature id, value)` with ascending ids.
pub type Features = Vec<(usize, f64)>;

/// Per-type winners observed on LongMemEval; an example table, not ground
/// truth for other workloads.
pub fn default_best_system() -> BTreeMap<String, String> {
    [
        ("knowledge-update", "rrf"),
        ("multi-session", "agent_rrf"),
        ("single-session-assistant", "dense"),
        ("single-session-preference", "rrf"),
        ("single-session-user", "dense"),
        ("temporal-reasoning", "bm25"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Appends a hash embedding of this dimension to the TF-IDF features.
    pub embed_dim: Option<usize>,
    pub embed_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.5,
            l2: 1e-3,
            embed_dim: None,
            embed_seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterModel {
    pub labels: Vec<String>,
    pub vocab: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub embed_dim: Option<usize>,
    pub embed_seed: u64,
    /// `weights[c][f]`, one row per label.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub best_system: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingDecision {
    pub predicted_qtype: String,
    pub posterior: BTreeMap<String, f64>,
    pub chosen_system: String,
    pub soft_weights: BTreeMap<String, f64>,
}

fn ngrams(text: &str) -> Vec<String> {
    let toks = tokenize(text, TokenizerMode::Minimal);
    let mut out = toks.clone();
    out.extend(toks.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

fn softmax(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in z.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in z.iter_mut() {
        *x /= s;
    }
}

impl RouterModel {
    pub fn num_features(&self) -> usize {
        self.idf.len() + self.embed_dim.unwrap_or(0)
    }

    /// L2-normalized TF-IDF vector, followed by the optional embedding.
    pub fn featurize(&self, text: &str) -> Features {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(text) {
            if let Some(&f) = self.vocab.get(&g) {
                *counts.entry(f).or_insert(0.0) += 1.0;
            }
        }
        let mut v: Features = counts.into_iter().map(|(f, c)| (f, c * self.idf[f])).collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        if let Some(dim) = self.embed_dim {
            let e = HashEmbedder { dim, seed: self.embed_seed }.embed(text);
            let base = self.idf.len();
            v.extend(e.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, &x)| (base + i, x as f64)));
        }
        v
    }

    fn logits(&self, x: &Features) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| b + x.iter().map(|&(f, v)| w[f] * v).sum::<f64>())
            .collect()
    }

    /// Posterior over labels, in label order.
    pub fn predict_proba(&self, x: &Features) -> Vec<f64> {
        let mut z = self.logits(x);
        softmax(&mut z);
        z
    }

    /// Mean cross-entropy plus `l2/2·‖W‖²` (biases unpenalized), and its
    /// gradient.
    pub fn loss_and_gradient(&self, data: &[(Features, usize)], l2: f64) -> (f64, Gradient) {
        let c = self.labels.len();
        let nf = self.num_features();
        let n = data.len() as f64;
        let mut gw = vec![vec![0.0; nf]; c];
        let mut gb = vec![0.0; c];
        let mut loss = 0.0;
        for (x, y) in data {
            let p = self.predict_proba(x);
            loss -= p[*y].max(f64::MIN_POSITIVE).ln();
            for k in 0..c {
                let r = (p[k] - if k == *y { 1.0 } else { 0.0 }) / n;
                gb[k] += r;
                for &(f, v) in x {
                    gw[k][f] += r * v;
                }
            }
        }
        loss /= n;
        let mut reg = 0.0;
        for k in 0..c {
            for f in 0..nf {
                let w = self.weights[k][f];
                reg += w * w;
                gw[k][f] += l2 * w;
            }
        }
        loss += 0.5 * l2 * reg;
        (loss, Gradient { weights: gw, biases: gb })
    }

    pub fn classify(&self, text: &str) -> RoutingDecision {
        let p = self.predict_proba(&self.featurize(text));
        let mut best = 0;
        for (i, &x) in p.iter().enumerate() {
            if x > p[best] {
                best = i;
            }
        }
        let posterior: BTreeMap<String, f64> = self.labels.iter().cloned().zip(p.iter().copied()).collect();
        let mut soft_weights: BTreeMap<String, f64> = BTreeMap::new();
        for (label, &w) in self.labels.iter().zip(&p) {
            *soft_weights.entry(self.best_system[label].clone()).or_insert(0.0) += w;
        }
        RoutingDecision {
            predicted_qtype: self.labels[best].clone(),
            chosen_system: self.best_system[&self.labels[best]].clone(),
            posterior,
            soft_weights,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        let nf = m.num_features();
        if m.weights.len() != m.labels.len()
            || m.biases.len() != m.labels.len()
            || m.weights.iter().any(|w| w.len() != nf)
        {
            return Err(Error::InvalidParameter("router model shapes are inconsistent".into()));
        }
        if let Some(l) = m.labels.iter().find(|l| !m.best_system.contains_key(*l)) {
            return Err(Error::InvalidParameter(format!("best_system has no entry for {l:?}")));
        }
        Ok(m)
    }
}

/// Output of [`train_router`].
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: RouterModel,
    /// Objective value before each epoch's update, then the final value.
    pub loss_history: Vec<f64>,
}

/// Fits the classifier. Labels are sorted; every label must have a
/// `best_system` entry, and labels missing from `best_system` are an error.
pub fn train_router(
    labeled: &[(String, String)],
    cfg: &TrainConfig,
    best_system: &BTreeMap<String, String>,
) -> Result<Trained> {
    let labels: Vec<String> = labeled.iter().map(|(_, l)| l.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if labels.len() < 2 {
        return Err(Error::InvalidParameter("router training needs at least two labels".into()));
    }
    if let Some(l) = labels.iter().find(|l| !best_system.contains_key(*l)) {
        return Err(Error::MissingSystem(format!("no best system configured for qtype {l:?}")));
    }
    if let Some(d) = cfg.embed_dim {
        HashEmbedder::new(d, cfg.embed_seed)?;
    }
    if cfg.learning_rate <= 0.0 || cfg.l2 < 0.0 {
        return Err(Error::InvalidParameter("learning rate must be positive and l2 non-negative".into()));
    }

    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for (text, _) in labeled {
        for g in ngrams(text).into_iter().collect::<BTreeSet<_>>() {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let n = labeled.len() as f64;
    let vocab: BTreeMap<String, usize> = df.keys().enumerate().map(|(i, g)| (g.clone(), i)).collect();
    let idf: Vec<f64> = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();

    let label_ix: HashMap<String, usize> = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let mut model = RouterModel {
        best_system: labels.iter().map(|l| (l.clone(), best_system[l].clone())).collect(),
        labels,
        vocab,
        idf,
        embed_dim: cfg.embed_dim,
        embed_seed: cfg.embed_seed,
        weights: Vec::new(),
        biases: Vec::new(),
    };
    let nf = model.num_features();
    model.weights = vec![vec![0.0; nf]; model.labels.len()];
    model.biases = vec![0.0; model.labels.len()];

    let data: Vec<(Features, usize)> = labeled
        .iter()
        .map(|(t, l)| (model.featurize(t), label_ix[l]))
        .collect();
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    for _ in 0..cfg.epochs {
        let (loss, g) = model.loss_and_gradient(&data, cfg.l2);
        history.push(loss);
        for (w, gw) in model.weights.iter_mut().zip(&g.weights) {
            for (x, d) in w.iter_mut().zip(gw) {
                *x -= cfg.learning_rate * d;
            }
        }
        for (b, d) in model.biases.iter_mut().zip(&g.biases) {
            *b -= cfg.learning_rate * d;
        }
    }
    history.push(model.loss_and_gradient(&data, cfg.l2).0);
    Ok(Trained {
        model,
        loss_history: history,
    })
}

/// Returns the chosen system's list unchanged.
pub fn route_discrete(decision: &RoutingDecision, per_system: &BTreeMap<String, RankedList>) -> Result<RankedList> {
    per_system
        .get(&decision.chosen_system)
        .cloned()
        .ok_or_else(|| Error::MissingSystem(decision.chosen_system.clone()))
}

/// Weight-prefactored RRF over systems using the decision's soft weights.
pub fn route_soft(
    decision: &RoutingDecision,
    per_system: &BTreeMap<String, RankedList>,
    k_rrf: f64,
) -> Result<RankedList> {
    soft_rrf(per_system, &decision.soft_weights, k_rrf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class() -> (Vec<(String, String)>, BTreeMap<String, String>) {
        let a = ["when", "date", "yesterday", "before", "after"];
        let b = ["prefer", "like", "favorite", "enjoy", "love"];
        let mut data = Vec::new();
        for i in 0..20 {
            data.push((format!("{} {}", a[i % 5], a[(i + 2) % 5]), "temporal".to_string()));
            data.push((format!("{} {}", b[i % 5], b[(i + 3) % 5]), "preference".to_string()));
        }
        let best = [("temporal", "bm25"), ("preference", "dense")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        (data, best)
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![("x".to_string(), "a".to_string())];
        let best = [("a".to_string(), "bm25".to_string())].into_iter().collect();
        assert!(train_router(&data, &TrainConfig::default(), &best).is_err());
    }

    #[test]
    fn fits_training_data_and_loss_descends() {
        let (data, best) = two_class();
        let t = train_router(&data, &TrainConfig::default(), &best).unwrap();
        for w in t.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        for (text, label) in &data {
            assert_eq!(&t.model.classify(text).predicted_qtype, label);
        }
    }

    #[test]
    fn empty_query_uses_biases_only() {
        let (data, best) = two_class();
        let m = train_router(&data, &TrainConfig::default(), &best).unwrap().model;
        let d = m.classify("");
        let mut z = m.biases.clone();
        softmax(&mut z);
        assert_eq!(d.posterior.values().copied().collect::<Vec<_>>(), z);
    }

    #[test]
    fn soft_weights_sum_posteriors_per_system() {
        let (data, mut best) = two_class();
        best.insert("preference".into(), "bm25".into());
        let m = train_router(&data, &TrainConfig::default(), &best).unwrap().model;
        let d = m.classify("favorite thing");
        assert_eq!(d.soft_weights.len(), 1);
        assert!((d.soft_weights["bm25"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let (data, best) = two_class();
        let cfg = TrainConfig {
            embed_dim: Some(16),
            epochs: 20,
            ..Default::default()
        };
        let m = train_router(&data, &cfg, &best).unwrap().model;
        let back = RouterModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.classify("when before"), m.classify("when before"));
    }

    #[test]
    fn missing_system_errors() {
        let d = RoutingDecision {
            predicted_qtype: "a".into(),
            posterior: BTreeMap::new(),
            chosen_system: "dense".into(),
            soft_weights: BTreeMap::new(),
        };
        assert!(matches!(route_discrete(&d, &BTreeMap::new()), Err(Error::MissingSystem(_))));
    }
}
