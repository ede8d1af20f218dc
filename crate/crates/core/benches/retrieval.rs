use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use memir::par::Dispatch;
use memir::sparse::{Bm25Params, CsrIndex, DEFAULT_CHUNK_SIZE};
use memir::temporal::{TemporalIndex, TemporalParams};
use memir::tokenizer::{tokenize, TokenizerMode};
use memir::workload::{gen_corpus, gen_queries, WorkloadSpec};

const DISPATCH: [(&str, Dispatch); 2] = [("sequential", Dispatch::Sequential), ("parallel", Dispatch::Parallel)];

fn batch_search(c: &mut Criterion) {
    let spec = WorkloadSpec {
        n_records: 65_536,
        ..Default::default()
    };
    let corpus = gen_corpus(&spec).unwrap();
    let queries = gen_queries(&corpus, 512, &spec).unwrap();
    let mode = TokenizerMode::default();
    let p = Bm25Params::default();
    let tp = TemporalParams::default();
    let terms: Vec<Vec<String>> = queries.iter().map(|q| tokenize(&q.text, mode)).collect();
    let flat = CsrIndex::build(corpus.iter().map(|r| (r.id, r.text.as_str())), mode, DEFAULT_CHUNK_SIZE, p).unwrap();
    let tidx = TemporalIndex::build(&corpus, &tp, mode, p).unwrap();

    let mut g = c.benchmark_group("batch_search");
    for (name, d) in DISPATCH {
        g.bench_with_input(BenchmarkId::new("maxscore", name), &d, |b, &d| {
            b.iter(|| flat.bm25_topk_batch(&terms, 10, &p, d).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("temporal", name), &d, |b, &d| {
            b.iter(|| tidx.temporal_topk_batch(&terms, 10, &tp, &p, d).unwrap())
        });
    }
    g.finish();
}

fn temporal_build(c: &mut Criterion) {
    let spec = WorkloadSpec {
        n_records: 32_768,
        ..Default::default()
    };
    let corpus = gen_corpus(&spec).unwrap();
    let mut g = c.benchmark_group("temporal_build");
    g.sample_size(10);
    for (name, d) in DISPATCH {
        g.bench_with_input(BenchmarkId::from_parameter(name), &d, |b, &d| {
            b.iter(|| {
                TemporalIndex::build_with(&corpus, &TemporalParams::default(), TokenizerMode::default(), Bm25Params::default(), d)
                    .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, batch_search, temporal_build);
criterion_main!(benches);
