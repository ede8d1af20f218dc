use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use memir::eval::{paired_bootstrap, read_run, Metric, MetricSummary, Qrels};
use memir::RankedList;

use crate::config::RunConfig;
use crate::io;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Comma-separated metrics, e.g. ndcg@10,mrr@10,recall@100.
    #[arg(long, value_delimiter = ',', default_value = "ndcg@10,mrr@10,recall@100")]
    metrics: Vec<Metric>,
    /// Per-query and mean metric CSV.
    #[arg(long)]
    out: PathBuf,
    /// Second run to compare against with a paired bootstrap.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    /// Bootstrap CSV (default: the output path with `.bootstrap.csv`).
    #[arg(long)]
    bootstrap_out: Option<PathBuf>,
}

type PerQuery = BTreeMap<Metric, BTreeMap<String, Option<f64>>>;

fn score(runs: &BTreeMap<String, RankedList>, qrels: &Qrels, metrics: &[Metric], label: &str) -> PerQuery {
    let missing_in_qrels = runs.keys().filter(|q| !qrels.contains_key(*q)).count();
    let missing_in_run = qrels.keys().filter(|q| !runs.contains_key(*q)).count();
    if missing_in_qrels + missing_in_run > 0 {
        log::warn!(
            "{label}: {missing_in_qrels} run queries have no judgments and {missing_in_run} judged queries are absent from the run; both are skipped"
        );
    }
    let mut out = PerQuery::new();
    for &m in metrics {
        let per = out.entry(m).or_default();
        for (qid, list) in runs {
            if let Some(rels) = qrels.get(qid) {
                per.insert(qid.clone(), m.eval(list, rels));
            }
        }
    }
    out
}

pub fn run(args: Args, cfg: &RunConfig) -> Result<()> {
    if args.metrics.is_empty() {
        bail!("no metrics requested");
    }
    let qrels = io::read_qrels_file(&args.qrels)?;
    let runs = read_run(io::open(&args.run)?)?;
    let per = score(&runs, &qrels, &args.metrics, "run");

    let mut w = io::csv(&args.out, "eval", cfg, "qid,metric,value")?;
    for (m, values) in &per {
        for (qid, v) in values {
            writeln!(w, "{qid},{m},{}", io::opt(v.map(|x| format!("{x:.6}"))))?;
        }
    }
    for (m, values) in &per {
        let s = MetricSummary::from_values(values.values().copied());
        writeln!(w, "all,{m},{:.6}", s.mean)?;
        writeln!(w, "evaluated,{m},{}", s.evaluated)?;
        writeln!(w, "excluded,{m},{}", s.excluded)?;
        println!("{m}\t{:.4}\t({} evaluated, {} excluded)", s.mean, s.evaluated, s.excluded);
    }
    io::finish(w)?;

    let Some(base_path) = args.baseline else {
        return Ok(());
    };
    let base = score(&read_run(io::open(&base_path)?)?, &qrels, &args.metrics, "baseline");
    let path = args.bootstrap_out.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".bootstrap.csv");
        p.into()
    });
    let mut w = io::csv(
        &path,
        "eval",
        cfg,
        "metric,n,delta_mean,ci_low,ci_high,p_value,p_value_capped,resamples",
    )?;
    for (m, values) in &per {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (qid, v) in values {
            if let (Some(x), Some(Some(y))) = (v, base[m].get(qid)) {
                a.push(*x);
                b.push(*y);
            }
        }
        let r = paired_bootstrap(&a, &b, args.resamples, cfg.seed)?;
        writeln!(
            w,
            "{m},{},{:.6},{:.6},{:.6},{:.4},{:.4},{}",
            a.len(),
            r.delta_mean,
            r.ci_low,
            r.ci_high,
            r.p_value,
            r.p_value_capped,
            r.resamples
        )?;
        println!("{m}\tdelta {:+.4}\tp={:.3}", r.delta_mean, r.p_value);
    }
    io::finish(w)
}
