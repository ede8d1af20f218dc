use memir::dense::{dot, hash_embed, Embedder, EmbeddingMatrix, HashEmbedder};
use memir::par::Dispatch;
use memir::DocId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dense_topk_matches_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let dim = 48;
    let mut m = EmbeddingMatrix::new(dim).unwrap();
    let mut rows = Vec::new();
    for i in 0..1000u32 {
        let mut v: Vec<f32> = (0..dim).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect();
        let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        m.push(i * 2 + 5, v.clone()).unwrap();
        rows.push((i * 2 + 5, v));
    }
    for _ in 0..50 {
        let q: Vec<f32> = (0..dim).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect();
        let mut all: Vec<(DocId, f64)> = rows
            .iter()
            .map(|(d, v)| (*d, v.iter().zip(&q).map(|(a, b)| *a as f64 * *b as f64).sum()))
            .collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for k in [1, 10, 100] {
            let got: Vec<DocId> = m.dense_topk(&q, k).unwrap().docs().collect();
            let want: Vec<DocId> = all[..k].iter().map(|p| p.0).collect();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn embedding_is_independent_of_dispatch() {
    let e = HashEmbedder::new(64, 3).unwrap();
    let texts: Vec<(DocId, String)> = (0..300).map(|i| (i, format!("w{} w{} w{}", i % 17, i % 5, i))).collect();
    let a = EmbeddingMatrix::from_texts(&e, texts.iter().map(|(d, t)| (*d, t.as_str())), Dispatch::Sequential).unwrap();
    let b = EmbeddingMatrix::from_texts(&e, texts.iter().map(|(d, t)| (*d, t.as_str())), Dispatch::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.row(7), &e.embed(&texts[7].1)[..]);
}

#[test]
fn hashed_vectors_are_unit_length() {
    for t in ["alpha", "alpha beta gamma", "one two three four five six"] {
        let v = hash_embed(t, 384, 0).unwrap();
        assert!((dot(&v, &v) - 1.0).abs() < 1e-5);
    }
}
