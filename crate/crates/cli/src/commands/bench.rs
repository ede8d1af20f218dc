use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use memir::cascade::{
    cross_validate, default_grid, sweep_optimum, sweep_thresholds, tune_per_qtype_thresholds, write_sweep_csv, CvItem,
};
use memir::experiment::{cascade_outcomes, scaling_point};
use memir::par::Dispatch;
use memir::session::{simulate_session, write_session_csv, LatencyCurve};
use memir::workload::{gen_corpus, gen_queries, WorkloadSpec};

use crate::config::RunConfig;
use crate::io;

#[derive(clap::Args)]
pub struct ScalingArgs {
    /// Work counters per size and strategy.
    #[arg(long)]
    out: PathBuf,
    /// Wall-clock latency percentiles (default: the output path with `.latency.csv`).
    #[arg(long)]
    latency_out: Option<PathBuf>,
    /// Corpus sizes, ascending (default: bench.sizes).
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Queries per size (default: bench.queries).
    #[arg(long)]
    queries: Option<usize>,
}

pub fn scaling(args: ScalingArgs, cfg: &RunConfig, dispatch: Dispatch) -> Result<()> {
    let sizes = if args.sizes.is_empty() { cfg.bench.sizes.clone() } else { args.sizes };
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        bail!("sizes must be non-empty and strictly ascending");
    }
    let nq = args.queries.unwrap_or(cfg.bench.queries);
    let latency_path = args.latency_out.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".latency.csv");
        p.into()
    });
    let mut counts = io::csv(&args.out, "bench-scaling", cfg, "n,strategy,mean_postings,searched_pct,hit_at_10")?;
    let mut lat = io::csv(&latency_path, "bench-scaling", cfg, "n,strategy,p50_ms,p95_ms,p99_ms")?;
    for n in sizes {
        let spec = WorkloadSpec {
            n_records: n,
            ..cfg.workload.clone()
        };
        let p = scaling_point(&spec, nq, &cfg.temporal.params()?, cfg.bm25.params()?, cfg.tokenizer.mode, dispatch)?;
        for r in &p.counts {
            writeln!(counts, "{},{},{:.3},{:.4},{:.4}", r.n, r.strategy, r.mean_postings, r.searched_pct, r.hit_at_10)?;
        }
        for r in &p.latency {
            writeln!(lat, "{},{},{:.6},{:.6},{:.6}", r.n, r.strategy, r.p50_ms, r.p95_ms, r.p99_ms)?;
            log::info!("N={} {}: p50 {:.3} ms", r.n, r.strategy, r.p50_ms);
        }
    }
    io::finish(counts)?;
    io::finish(lat)
}

#[derive(clap::Args)]
pub struct CascadeArgs {
    /// Threshold sweep CSV.
    #[arg(long)]
    out: PathBuf,
    /// Per-qtype tuned thresholds CSV.
    #[arg(long)]
    thresholds_out: Option<PathBuf>,
    /// Cross-validation CSV; needs at least two qtypes in the workload.
    #[arg(long)]
    cv_out: Option<PathBuf>,
    /// Queries (default: bench.queries).
    #[arg(long)]
    queries: Option<usize>,
}

fn tau(t: f64) -> String {
    if t.is_infinite() {
        "inf".into()
    } else {
        format!("{t:.4}")
    }
}

pub fn cascade(args: CascadeArgs, cfg: &RunConfig, dispatch: Dispatch) -> Result<()> {
    let corpus = gen_corpus(&cfg.workload)?;
    let queries = gen_queries(&corpus, args.queries.unwrap_or(cfg.bench.queries), &cfg.workload)?;
    let outcomes = cascade_outcomes(&corpus, &queries, cfg.workload.vocab_size, &cfg.cascade_bench()?, dispatch)?;
    let grid = default_grid(cfg.bench.grid_steps);
    let rows = sweep_thresholds(&outcomes, &grid, &cfg.cascade)?;

    let mut w = io::create(&args.out)?;
    writeln!(w, "# memir bench-cascade config_sha256={} seed={}", cfg.sha256(), cfg.seed)?;
    write_sweep_csv(&mut w, &rows)?;
    io::finish(w)?;
    if let Some(best) = sweep_optimum(&rows) {
        println!(
            "optimum tau_c={} skip_rate={:.3} {}={:.4} amortized_ms={:.3}",
            tau(best.tau_c),
            best.skip_rate,
            cfg.bench.metric,
            best.metric,
            best.amortized_ms
        );
    }

    if let Some(path) = args.thresholds_out {
        let t = tune_per_qtype_thresholds(&outcomes, &grid, cfg.bench.noise_margin, &[], cfg.cascade.conf_threshold)?;
        let mut w = io::csv(&path, "bench-cascade", cfg, "qtype,tau_c")?;
        for (q, v) in &t {
            writeln!(w, "{q},{}", tau(*v))?;
        }
        io::finish(w)?;
    }

    if let Some(path) = args.cv_out {
        let qtypes: BTreeSet<&str> = queries.iter().map(|q| q.qtype.as_str()).collect();
        if qtypes.len() < 2 {
            bail!("cross-validation needs at least two qtypes; raise workload.paraphrase_rate");
        }
        let items: Vec<CvItem> = queries
            .iter()
            .zip(&outcomes)
            .map(|(q, o)| CvItem {
                text: q.text.clone(),
                qtype: q.qtype.clone(),
                outcome: o.clone(),
            })
            .collect();
        let r = cross_validate(
            &items,
            cfg.router.folds,
            &grid,
            cfg.bench.noise_margin,
            &cfg.cascade,
            &cfg.router.train,
            cfg.seed,
        )?;
        let mut w = io::csv(
            &path,
            "bench-cascade",
            cfg,
            "fold,n_test,classifier_accuracy,skip_rate,amortized_ms,quality,hybrid_quality,speedup",
        )?;
        for f in &r.folds {
            writeln!(
                w,
                "{},{},{:.4},{:.4},{:.4},{:.6},{:.6},{:.4}",
                f.fold, f.n_test, f.classifier_accuracy, f.skip_rate, f.amortized_ms, f.quality, f.hybrid_quality, f.speedup
            )?;
        }
        writeln!(w, "mean,,,,,{:+.6},,{:.4}", r.mean_quality_delta, r.mean_speedup)?;
        io::finish(w)?;
        println!("cv mean speedup {:.2}x, quality delta {:+.4}", r.mean_speedup, r.mean_quality_delta);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Statistic {
    P50,
    P95,
    P99,
}

#[derive(clap::Args)]
pub struct SessionArgs {
    /// Latency CSV written by bench-scaling.
    #[arg(long)]
    latency: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Percentile column used as each strategy's curve.
    #[arg(long, value_enum, default_value = "p50")]
    statistic: Statistic,
    /// Strategies to simulate (default: all in the latency file).
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<String>,
}

/// Reads `(strategy → [(N, ms)])` from a bench-scaling latency CSV.
fn read_latency(path: &std::path::Path, stat: Statistic) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let col = match stat {
        Statistic::P50 => 2,
        Statistic::P95 => 3,
        Statistic::P99 => 4,
    };
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, line) in io::open(path)?.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.starts_with("n,") || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || format!("{}:{}: malformed latency row", path.display(), i + 1);
        if f.len() != 5 {
            bail!(bad());
        }
        let n: f64 = f[0].parse().with_context(bad)?;
        let ms: f64 = f[col].parse().with_context(bad)?;
        out.entry(f[1].to_string()).or_default().push((n, ms.max(1e-6)));
    }
    Ok(out)
}

pub fn session(args: SessionArgs, cfg: &RunConfig) -> Result<()> {
    let table = read_latency(&args.latency, args.statistic)?;
    let mut curves = Vec::new();
    for (name, pts) in table {
        if args.strategies.is_empty() || args.strategies.contains(&name) {
            curves.push((name, LatencyCurve::points(pts)?));
        }
    }
    if curves.is_empty() {
        bail!("no matching strategies in {}", args.latency.display());
    }
    let rows = simulate_session(&cfg.session, &curves, cfg.seed)?;
    let mut w = io::create(&args.out)?;
    writeln!(w, "# memir simulate-session config_sha256={} seed={}", cfg.sha256(), cfg.seed)?;
    write_session_csv(&mut w, &rows)?;
    io::finish(w)?;
    for r in &rows {
        println!("{}\t{:.2}s total\t{:.1}% over budget", r.strategy, r.cumulative_s, r.pct_over_budget);
    }
    Ok(())
}
