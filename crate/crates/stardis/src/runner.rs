//! Parallel episode execution, parameter sweeps and the scheduler quality report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use stardis_core::engine::{run_episode, summarize, EpisodeMetrics, PolicyKind, PolicySummary, Prepared};
use stardis_core::instances::{random_instance, Instance};
use stardis_core::star::{check_plan, plan_objective, HorizonPlan, TsMode};

use crate::Error;

/// Runs every `(policy, seed)` pair in parallel; results come back in input order.
pub fn run_all(prep: &Prepared, policies: &[PolicyKind], seeds: &[u64]) -> Result<Vec<EpisodeMetrics>, Error> {
    if policies.is_empty() {
        return Err(Error::Usage("empty policy list".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Usage("empty seed range".into()));
    }
    let jobs: Vec<(PolicyKind, u64)> = policies.iter().flat_map(|&p| seeds.iter().map(move |&s| (p, s))).collect();
    jobs.par_iter()
        .map(|&(p, s)| run_episode(prep, p, s).map(|e| e.metrics).map_err(Error::from))
        .collect()
}

pub fn benchmark(prep: &Prepared, policies: &[PolicyKind], seeds: &[u64]) -> Result<Vec<PolicySummary>, Error> {
    Ok(summarize(&run_all(prep, policies, seeds)?))
}

/// Mean of `metric` per policy across `seeds`, paired by seed.
pub fn paired(episodes: &[EpisodeMetrics], policy: PolicyKind, seeds: &[u64], metric: impl Fn(&EpisodeMetrics) -> f64) -> Vec<f64> {
    seeds
        .iter()
        .map(|s| episodes.iter().find(|e| e.policy == policy && e.seed == *s).map(&metric).unwrap_or(f64::NAN))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Per-slot credibility budget C.
    Credibility,
    /// Prior probability that the IDS is active.
    Prior,
    /// Mean SNR at closest approach, in dB.
    Channel,
}

impl SweepParam {
    pub fn defaults(self) -> Vec<f64> {
        match self {
            SweepParam::Credibility => vec![0.01, 0.1, 0.2, 0.5],
            SweepParam::Prior => vec![0.3, 0.4, 0.5, 0.6, 0.7],
            SweepParam::Channel => vec![0.0, 5.0, 10.0, 15.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: Vec<PolicySummary>,
}

/// Re-runs the suite at each value of `param`.
pub fn sweep(
    base: &Prepared,
    param: SweepParam,
    values: &[f64],
    policies: &[PolicyKind],
    seeds: &[u64],
) -> Result<Vec<SweepPoint>, Error> {
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let prep = match param {
            // Budget changes reuse the tabulated designs.
            SweepParam::Credibility => base.with_credibility(v)?,
            SweepParam::Prior => {
                let mut c = base.config.clone();
                c.deception.prior_active = v;
                Prepared::new(c)?
            }
            SweepParam::Channel => {
                let mut c = base.config.clone();
                c.geometry.peak_snr_db = Some(v);
                Prepared::new(c)?
            }
        };
        out.push(SweepPoint { value: v, summary: benchmark(&prep, policies, seeds)? });
    }
    Ok(out)
}

/// One small instance with both plans, for golden-trace regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub seed: u64,
    pub max_len: u32,
    pub greedy: HorizonPlan,
    pub greedy_objective: f64,
    pub exact_objective: Option<f64>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub instances: usize,
    pub compared: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Mean greedy/exact objective ratio over instances with a positive optimum.
    pub mean_ratio: f64,
    pub min_ratio: f64,
}

fn record(seed: u64, max_len: u32, exact: bool) -> InstanceRecord {
    let inst: Instance = random_instance(seed, 5..=max_len);
    let greedy = inst.greedy();
    let violations = check_plan(&greedy, &inst.specs, &inst.star.scan, TsMode::Capped).len();
    let exact_objective = if exact { inst.exact(&greedy).ok().map(|p| plan_objective(&p, &inst.utility)) } else { None };
    InstanceRecord { seed, max_len, greedy_objective: plan_objective(&greedy, &inst.utility), greedy, exact_objective, violations }
}

/// Greedy versus exact on the first `count` instances from `first_seed` that
/// the exact oracle can solve; larger ones are counted as skipped.
pub fn quality(first_seed: u64, count: usize, max_len: u32) -> (QualitySummary, Vec<InstanceRecord>) {
    const BATCH: u64 = 64;
    let mut records: Vec<InstanceRecord> = Vec::new();
    let mut next = first_seed;
    let solved = |r: &[InstanceRecord]| r.iter().filter(|x| x.exact_objective.is_some()).count();
    while solved(&records) < count {
        records.extend((next..next + BATCH).into_par_iter().map(|s| record(s, max_len, true)).collect::<Vec<_>>());
        next += BATCH;
    }
    // Cut right after the count-th solved instance so the result is independent of BATCH.
    let mut seen = 0;
    let keep = records
        .iter()
        .position(|r| {
            seen += usize::from(r.exact_objective.is_some());
            seen == count
        })
        .map_or(0, |i| i + 1);
    records.truncate(keep);
    let ratios: Vec<f64> = records
        .iter()
        .filter_map(|r| r.exact_objective.filter(|e| *e > 0.0).map(|e| r.greedy_objective / e))
        .collect();
    let summary = QualitySummary {
        instances: records.len(),
        compared: solved(&records),
        skipped: records.len() - solved(&records),
        violations: records.iter().map(|r| r.violations).sum(),
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len().max(1) as f64,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
    };
    (summary, records)
}

/// Seeds whose regenerated greedy plan differs from the stored one.
pub fn check_golden(records: &[InstanceRecord]) -> Vec<u64> {
    records
        .par_iter()
        .filter(|r| record(r.seed, r.max_len, false).greedy != r.greedy)
        .map(|r| r.seed)
        .collect()
}
