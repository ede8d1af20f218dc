
use std::collections::{BTreeMap, BTreeSet, HashMap};

use memir::fusion::{agent_rrf, apply_filters, rrf, soft_rrf, FusionParams};
use memir::record::{MemoryRecord, RecordStore, Role};
use memir::temporal::DAY_MS;
use memir::{DocId, RankedList, Scored};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ranked(docs: &[DocId]) -> RankedList {
    let n = docs.len();
    RankedList::from_unsorted(docs.iter().enumerate().map(|(i, &d)| Scored::new(d, (n - i) as f64)).collect(), n)
}

fn random_list(rng: &mut ChaCha8Rng, universe: u32, len: usize) -> Vec<DocId> {
    let mut all: Vec<DocId> = (0..universe).collect();
    all.shuffle(rng);
    all.truncate(len);
    all
}

/// Σ_lists w / (k + rank) over the union, straight from the definition.
fn rrf_formula(lists: &[(f64, &[DocId])], k: f64) -> Vec<(DocId, f64)> {
    let mut acc: BTreeMap<DocId, f64> = BTreeMap::new();
    for &(w, l) in lists {
        for (i, &d) in l.iter().enumerate() {
            *acc.entry(d).or_insert(0.0) += w / (k + (i + 1) as f64);
        }
    }
    acc.into_iter().collect()
}

fn scores_match(got: &RankedList, want: &[(DocId, f64)]) {
    let want: HashMap<DocId, f64> = want.iter().copied().collect();
    assert_eq!(got.len(), want.len());
    for s in got.entries() {
        assert!((s.score - want[&s.doc]).abs() < 1e-15, "doc {}", s.doc);
    }
}

#[test]
fn rrf_equals_formula_on_random_lists() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..300 {
        let a = random_list(&mut rng, 40, 15);
        let b = random_list(&mut rng, 40, 20);
        let got = rrf(&[&ranked(&a), &ranked(&b)], 60.0);
        scores_match(&got, &rrf_formula(&[(1.0, &a), (1.0, &b)], 60.0));
    }
}

#[test]
fn soft_rrf_equals_formula_on_random_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..300 {
        let names = ["bm25", "dense", "rrf"];
        let lists: Vec<Vec<DocId>> = names.iter().map(|_| random_list(&mut rng, 30, 12)).collect();
        let weights: Vec<f64> = names.iter().map(|_| rng.random_range(0.0..1.0)).collect();
        let per: BTreeMap<String, RankedList> = names.iter().zip(&lists).map(|(n, l)| (n.to_string(), ranked(l))).collect();
        let w: BTreeMap<String, f64> = names.iter().zip(&weights).map(|(n, &w)| (n.to_string(), w)).collect();
        let got = soft_rrf(&per, &w, 60.0).unwrap();
        let spec: Vec<(f64, &[DocId])> = weights.iter().zip(&lists).map(|(&w, l)| (w, l.as_slice())).collect();
        scores_match(&got, &rrf_formula(&spec, 60.0));
    }
}

#[test]
fn equal_weights_over_identical_lists_match_rrf() {
    let l = ranked(&[5, 2, 9, 1]);
    let per: BTreeMap<String, RankedList> = [("a".to_string(), l.clone()), ("b".to_string(), l.clone())].into();
    let w: BTreeMap<String, f64> = [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into();
    let soft: Vec<DocId> = soft_rrf(&per, &w, 60.0).unwrap().docs().collect();
    assert_eq!(soft, rrf(&[&l, &l], 60.0).docs().collect::<Vec<_>>());
}

#[test]
fn role_filter_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let recs: Vec<MemoryRecord> = (0..500)
        .map(|i| {
            let mut r = MemoryRecord::new(i, "x", 0);
            r.role = Role::ALL[rng.random_range(0..Role::ALL.len())];
            r.session = format!("s{}", rng.random_range(0..5));
            r
        })
        .collect();
    let roles: BTreeSet<Role> = [Role::ToolOutput].into();
    let got: Vec<DocId> = apply_filters(&recs, None, Some(&roles)).iter().map(|r| r.id).collect();
    let mut want = Vec::new();
    for r in &recs {
        if r.role == Role::ToolOutput {
            want.push(r.id);
        }
    }
    assert_eq!(got, want);
    let s2: Vec<DocId> = apply_filters(&recs, Some("s2"), None).iter().map(|r| r.id).collect();
    assert!(s2.iter().all(|&i| recs[i as usize].session == "s2"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bonus_never_overrides_gaps_above_alpha(seed in any::<u64>(), alpha in 0.0f64..=0.005) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sparse = random_list(&mut rng, 50, 30);
        let dense = random_list(&mut rng, 50, 30);
        let recs: Vec<MemoryRecord> = (0..50)
            .map(|i| MemoryRecord::new(i, "x", rng.random_range(0..400) * DAY_MS))
            .collect();
        let store = RecordStore::new(&recs);
        let p = FusionParams { alpha, ..Default::default() };
        let base: HashMap<DocId, f64> = rrf_formula(&[(1.0, &sparse), (1.0, &dense)], 60.0).into_iter().collect();
        let fused = agent_rrf(&ranked(&sparse), &ranked(&dense), &store, 400 * DAY_MS, None, &p).unwrap();
        let order: Vec<DocId> = fused.docs().collect();
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                // b ranks below a, so b cannot lead a by more than alpha.
                prop_assert!(base[&b] - base[&a] <= alpha + 1e-15);
            }
        }
    }

    #[test]
    fn importance_boost_is_monotone(seed in any::<u64>(), boost in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sparse = random_list(&mut rng, 30, 20);
        let dense = random_list(&mut rng, 30, 20);
        let mut recs: Vec<MemoryRecord> = (0..30)
            .map(|i| {
                let mut r = MemoryRecord::new(i, "x", rng.random_range(0..100) * DAY_MS);
                r.weight = rng.random_range(0.0..0.5);
                r
            })
            .collect();
        let p = FusionParams { beta: 0.01, ..Default::default() };
        let target = sparse[rng.random_range(0..sparse.len())];
        let before = agent_rrf(&ranked(&sparse), &ranked(&dense), &RecordStore::new(&recs), 100 * DAY_MS, None, &p)
            .unwrap()
            .rank_of(target)
            .unwrap();
        recs[target as usize].weight += boost * 0.5;
        let after = agent_rrf(&ranked(&sparse), &ranked(&dense), &RecordStore::new(&recs), 100 * DAY_MS, None, &p)
            .unwrap()
            .rank_of(target)
            .unwrap();
        prop_assert!(after <= before);
    }

    #[test]
    fn rrf_depends_only_on_ranks(seed in any::<u64>(), scale in 0.001f64..1000.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_list(&mut rng, 30, 15);
        let b = random_list(&mut rng, 30, 15);
        let rescaled = |l: &[DocId]| {
            let n = l.len();
            RankedList::from_unsorted(
                l.iter().enumerate().map(|(i, &d)| Scored::new(d, scale * ((n - i) as f64).powi(3))).collect(),
                n,
            )
        };
        prop_assert_eq!(rrf(&[&ranked(&a), &ranked(&b)], 60.0), rrf(&[&rescaled(&a), &rescaled(&b)], 60.0));
    }
}
