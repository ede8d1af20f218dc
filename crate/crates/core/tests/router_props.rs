use std::collections::BTreeMap;

use memir::router::{route_discrete, route_soft, train_router, RouterModel, TrainConfig};
use memir::{DocId, RankedList, Scored};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: [&str; 8] = ["when", "date", "yesterday", "before", "after", "week", "month", "ago"];
const B: [&str; 8] = ["prefer", "like", "favorite", "enjoy", "love", "taste", "style", "hobby"];
const C: [&str; 8] = ["error", "stack", "compile", "crash", "bug", "trace", "panic", "fault"];

fn sample(rng: &mut ChaCha8Rng, words: &[&str], n: usize, label: &str) -> Vec<(String, String)> {
    (0..n)
        .map(|_| {
            let len = rng.random_range(2..5);
            let q: Vec<&str> = (0..len).map(|_| *words.choose(rng).unwrap()).collect();
            (q.join(" "), label.to_string())
        })
        .collect()
}

fn best() -> BTreeMap<String, String> {
    [("temporal", "bm25"), ("preference", "dense"), ("debug", "rrf")]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

fn separable(seed: u64, per_class: usize) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = sample(&mut rng, &A, per_class, "temporal");
    d.extend(sample(&mut rng, &B, per_class, "preference"));
    d.extend(sample(&mut rng, &C, per_class, "debug"));
    d
}

fn trained() -> RouterModel {
    train_router(&separable(1, 50), &TrainConfig::default(), &best()).unwrap().model
}

#[test]
fn separable_held_out_accuracy() {
    let model = trained();
    let test = separable(2, 100);
    let correct = test.iter().filter(|(q, l)| &model.classify(q).predicted_qtype == l).count();
    let acc = correct as f64 / test.len() as f64;
    assert!(acc >= 0.95, "accuracy {acc}");
    let d = model.classify("when yesterday before");
    assert!(d.posterior["temporal"] > 0.9, "{:?}", d.posterior);
}

#[test]
fn posteriors_are_normalized() {
    let model = trained();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let all: Vec<&str> = A.iter().chain(&B).chain(&C).copied().chain(["unseen", "words"]).collect();
    for _ in 0..500 {
        let len = rng.random_range(0..6);
        let q: Vec<&str> = (0..len).map(|_| *all.choose(&mut rng).unwrap()).collect();
        let d = model.classify(&q.join(" "));
        let s: f64 = d.posterior.values().sum();
        assert!((s - 1.0).abs() < 1e-9);
        let w: f64 = d.soft_weights.values().sum();
        assert!((w - 1.0).abs() < 1e-9);
        assert_eq!(d.chosen_system, best()[&d.predicted_qtype]);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let data = separable(4, 2);
    let cfg = TrainConfig { epochs: 3, ..Default::default() };
    let mut model = train_router(&data[..5], &cfg, &best()).unwrap().model;
    let lookup: BTreeMap<&str, usize> = model.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let feats: Vec<_> = data[..5].iter().map(|(q, l)| (model.featurize(q), lookup[l.as_str()])).collect();
    let l2 = 0.01;
    let (_, g) = model.loss_and_gradient(&feats, l2);
    let h = 1e-6;
    for k in 0..model.labels.len() {
        for f in 0..model.num_features() {
            let orig = model.weights[k][f];
            model.weights[k][f] = orig + h;
            let up = model.loss_and_gradient(&feats, l2).0;
            model.weights[k][f] = orig - h;
            let down = model.loss_and_gradient(&feats, l2).0;
            model.weights[k][f] = orig;
            let fd = (up - down) / (2.0 * h);
            let an = g.weights[k][f];
            assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-3), "w[{k}][{f}]: {fd} vs {an}");
        }
        let orig = model.biases[k];
        model.biases[k] = orig + h;
        let up = model.loss_and_gradient(&feats, l2).0;
        model.biases[k] = orig - h;
        let down = model.loss_and_gradient(&feats, l2).0;
        model.biases[k] = orig;
        let fd = (up - down) / (2.0 * h);
        assert!((fd - g.biases[k]).abs() <= 1e-4 * g.biases[k].abs().max(1e-3));
    }
}

fn ranked(docs: &[DocId]) -> RankedList {
    let n = docs.len();
    RankedList::from_unsorted(docs.iter().enumerate().map(|(i, &d)| Scored::new(d, (n - i) as f64)).collect(), n)
}

#[test]
fn one_hot_soft_routing_equals_discrete() {
    let model = trained();
    let per: BTreeMap<String, RankedList> = [
        ("bm25".to_string(), ranked(&[4, 1, 7, 2])),
        ("dense".to_string(), ranked(&[9, 4, 3])),
        ("rrf".to_string(), ranked(&[2, 8, 1, 5, 6])),
    ]
    .into();
    for q in ["when date ago", "prefer love hobby", "error panic trace"] {
        let mut d = model.classify(q);
        for w in d.soft_weights.values_mut() {
            *w = 0.0;
        }
        d.soft_weights.insert(d.chosen_system.clone(), 1.0);
        let soft: Vec<DocId> = route_soft(&d, &per, 60.0).unwrap().docs().collect();
        let hard: Vec<DocId> = route_discrete(&d, &per).unwrap().docs().collect();
        assert_eq!(soft, hard, "{q}");
    }
}

#[test]
fn identical_training_gives_identical_model() {
    let a = trained().to_json().unwrap();
    assert_eq!(a, trained().to_json().unwrap());
    assert_eq!(RouterModel::from_json(&a).unwrap().to_json().unwrap(), a);
}

#[test]
fn embedding_features_extend_the_vector() {
    let cfg = TrainConfig { embed_dim: Some(32), ..Default::default() };
    let m = train_router(&separable(5, 20), &cfg, &best()).unwrap().model;
    assert_eq!(m.num_features(), m.idf.len() + 32);
    let acc = separable(6, 30).iter().filter(|(q, l)| &m.classify(q).predicted_qtype == l).count();
    assert!(acc as f64 / 90.0 >= 0.9);
}
