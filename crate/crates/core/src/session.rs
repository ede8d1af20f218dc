//! Agent-session cost simulation: a corpus growing linearly over many
//! turns, a clipped-Poisson number of retrievals per turn, and log-normal
//! jitter around a per-strategy latency curve.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::percentile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionSpec {
    pub turns: usize,
    pub corpus_start: usize,
    pub corpus_end: usize,
    pub retrievals_mean: f64,
    pub retrievals_min: usize,
    pub retrievals_max: usize,
    pub jitter_sigma: f64,
    pub budget_ms: f64,
}

impl Default for SessionSpec {
    fn default() -> Self {
        Self {
            turns: 800,
            corpus_start: 4_052,
            corpus_end: 4_998_640,
            retrievals_mean: 8.0,
            retrievals_min: 3,
            retrievals_max: 20,
            jitter_sigma: 0.30,
            budget_ms: 200.0,
        }
    }
}

impl SessionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.turns == 0 {
            return bad("a session needs at least one turn");
        }
        if self.corpus_start > self.corpus_end {
            return bad("corpus_start must not exceed corpus_end");
        }
        if self.retrievals_min > self.retrievals_max || !(self.retrievals_mean > 0.0) {
            return bad("retrieval count bounds are invalid");
        }
        if !(self.jitter_sigma >= 0.0) || !(self.budget_ms > 0.0) {
            return bad("jitter must be non-negative and the budget positive");
        }
        Ok(())
    }

    /// Corpus size at turn `t`.
    pub fn corpus_at(&self, t: usize) -> f64 {
        if self.turns == 1 {
            return self.corpus_start as f64;
        }
        let f = t as f64 / (self.turns - 1) as f64;
        self.corpus_start as f64 + f * (self.corpus_end - self.corpus_start) as f64
    }
}

/// Per-retrieval latency in milliseconds as a function of corpus size.
#[derive(Debug, Clone, PartialEq)]
pub enum LatencyCurve {
    Constant(f64),
    Linear { intercept_ms: f64, ms_per_record: f64 },
    /// Measured `(N, ms)` points, interpolated linearly in log-log space.
    Points(Vec<(f64, f64)>),
}

impl LatencyCurve {
    pub fn points(mut pts: Vec<(f64, f64)>) -> Result<Self> {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.is_empty() || pts.iter().any(|&(n, ms)| !(n > 0.0 && ms > 0.0)) {
            return Err(Error::InvalidParameter("curve points must be positive".into()));
        }
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("curve points need distinct sizes".into()));
        }
        Ok(Self::Points(pts))
    }

    fn covers(&self, lo: f64, hi: f64) -> bool {
        match self {
            Self::Points(p) => p[0].0 <= lo * (1.0 + 1e-9) && p[p.len() - 1].0 >= hi * (1.0 - 1e-9),
            _ => true,
        }
    }

    pub fn at(&self, n: f64) -> f64 {
        match self {
            Self::Constant(ms) => *ms,
            Self::Linear { intercept_ms, ms_per_record } => intercept_ms + ms_per_record * n,
            Self::Points(p) => {
                if p.len() == 1 || n <= p[0].0 {
                    return p[0].1;
                }
                let i = p.partition_point(|q| q.0 < n).min(p.len() - 1);
                let (a, b) = (p[i - 1], p[i]);
                let f = (n.ln() - a.0.ln()) / (b.0.ln() - a.0.ln());
                (a.1.ln() + f * (b.1.ln() - a.1.ln())).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionRow {
    pub strategy: String,
    pub cumulative_s: f64,
    pub p99_ms_per_step: f64,
    /// Percentage of turns whose memory time exceeds the budget.
    pub pct_over_budget: f64,
    pub p99_us_per_q: f64,
}

/// Simulates one session per strategy. All strategies see the same
/// retrieval counts and jitter draws.
pub fn simulate_session(spec: &SessionSpec, curves: &[(String, LatencyCurve)], seed: u64) -> Result<Vec<SessionRow>> {
    spec.validate()?;
    let (lo, hi) = (spec.corpus_start as f64, spec.corpus_end as f64);
    for (name, c) in curves {
        if !c.covers(lo, hi) {
            return Err(Error::InvalidParameter(format!(
                "latency curve {name:?} does not cover corpus sizes {lo}..{hi}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(spec.retrievals_mean).map_err(|e| Error::InvalidParameter(format!("poisson: {e}")))?;
    let mut jitter: Vec<Vec<f64>> = Vec::with_capacity(spec.turns);
    for _ in 0..spec.turns {
        let r = (poisson.sample(&mut rng) as usize).clamp(spec.retrievals_min, spec.retrievals_max);
        jitter.push(
            (0..r)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (spec.jitter_sigma * z).exp()
                })
                .collect(),
        );
    }

    let mut rows = Vec::with_capacity(curves.len());
    for (name, curve) in curves {
        let mut steps = Vec::with_capacity(spec.turns);
        let mut per_q = Vec::new();
        for (t, js) in jitter.iter().enumerate() {
            let base = curve.at(spec.corpus_at(t));
            let mut step = 0.0;
            for &j in js {
                let ms = base * j;
                step += ms;
                per_q.push(ms);
            }
            steps.push(step);
        }
        let total: f64 = steps.iter().sum();
        let over = steps.iter().filter(|&&s| s > spec.budget_ms).count();
        steps.sort_by(f64::total_cmp);
        per_q.sort_by(f64::total_cmp);
        rows.push(SessionRow {
            strategy: name.clone(),
            cumulative_s: total / 1000.0,
            p99_ms_per_step: percentile(&steps, 0.99),
            pct_over_budget: 100.0 * over as f64 / spec.turns as f64,
            p99_us_per_q: percentile(&per_q, 0.99) * 1000.0,
        });
    }
    Ok(rows)
}

pub fn write_session_csv<W: Write>(mut w: W, rows: &[SessionRow]) -> Result<()> {
    writeln!(w, "strategy,cumulative_s,p99_ms_per_step,pct_over_budget,p99_us_per_q")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{:.4},{:.2},{:.2}",
            r.strategy, r.cumulative_s, r.p99_ms_per_step, r.pct_over_budget, r.p99_us_per_q
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_hits_the_points() {
        let c = LatencyCurve::points(vec![(1000.0, 0.1), (100_000.0, 10.0)]).unwrap();
        assert!((c.at(1000.0) - 0.1).abs() < 1e-12);
        assert!((c.at(100_000.0) - 10.0).abs() < 1e-9);
        assert!((c.at(10_000.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uncovered_range_is_rejected() {
        let spec = SessionSpec::default();
        let c = LatencyCurve::points(vec![(4_000.0, 0.1), (512_000.0, 1.0)]).unwrap();
        assert!(simulate_session(&spec, &[("t".into(), c)], 42).is_err());
    }

    #[test]
    fn retrieval_counts_respect_clip() {
        let spec = SessionSpec {
            jitter_sigma: 0.0,
            turns: 2_000,
            ..Default::default()
        };
        let rows = simulate_session(&spec, &[("c".into(), LatencyCurve::Constant(1.0))], 1).unwrap();
        // Each turn costs its retrieval count in ms.
        assert!(rows[0].p99_ms_per_step <= 20.0);
        assert!(rows[0].cumulative_s >= 2_000.0 * 3.0 / 1000.0);
    }
}
