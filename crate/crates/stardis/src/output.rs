//! Result files. Every CSV carries a fixed header; `SCHEMA_VERSION` bumps on any column change.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use stardis_core::engine::{Episode, EpisodeMetrics, PolicySummary, ScenarioConfig};

use crate::runner::{QualitySummary, SweepParam, SweepPoint};
use crate::Error;

pub const SCHEMA_VERSION: u32 = 1;

pub fn build_id() -> &'static str {
    env!("STARDIS_BUILD_ID")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance wrapper for every JSON document.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub build: &'a str,
    pub schema: u32,
    pub command: &'a str,
    pub config: &'a ScenarioConfig,
    pub result: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, config: &'a ScenarioConfig, result: T) -> Self {
        Report { build: build_id(), schema: SCHEMA_VERSION, command, config, result }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Where results go: a directory, or stdout when none is given.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self, Error> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink { dir: dir.map(Path::to_path_buf) })
    }

    pub fn write(&self, name: &str, body: &[u8]) -> Result<(), Error> {
        match &self.dir {
            Some(d) => fs::write(d.join(name), body)?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(body)?;
                out.flush()?;
            }
        }
        Ok(())
    }

    pub fn is_dir(&self) -> bool {
        self.dir.is_some()
    }
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// `t,x_scan,z,running,omega,signal,budget,snr_pred_db,delay_ms,arrival,snr_db,xi,belief,x_att,a,reward`.
pub fn slots_csv(e: &Episode) -> Result<Vec<u8>, Error> {
    csv_rows(&e.slots)
}

pub fn windows_csv(e: &Episode) -> Result<Vec<u8>, Error> {
    csv_rows(&e.windows)
}

#[derive(Serialize)]
struct MetricRow<'a> {
    policy: &'a str,
    seed: u64,
    metric: String,
    value: f64,
}

/// Long format: `policy,seed,metric,value`.
pub fn metrics_csv(episodes: &[EpisodeMetrics]) -> Result<Vec<u8>, Error> {
    let rows: Vec<MetricRow> = episodes
        .iter()
        .flat_map(|e| {
            e.scalars().into_iter().map(move |(metric, value)| MetricRow { policy: e.policy.name(), seed: e.seed, metric, value })
        })
        .collect();
    csv_rows(&rows)
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    param: &'a str,
    value: f64,
    policy: &'a str,
    episodes: usize,
    metric: &'a str,
    mean: f64,
    std: f64,
}

fn summary_rows<'a>(param: &'a str, value: f64, summary: &'a [PolicySummary]) -> impl Iterator<Item = SummaryRow<'a>> {
    summary.iter().flat_map(move |s| {
        s.stats.iter().map(move |st| SummaryRow {
            param,
            value,
            policy: s.policy.name(),
            episodes: s.episodes,
            metric: &st.metric,
            mean: st.mean,
            std: st.std,
        })
    })
}

#[derive(Serialize)]
struct StatRow<'a> {
    policy: &'a str,
    episodes: usize,
    metric: &'a str,
    mean: f64,
    std: f64,
}

/// `policy,episodes,metric,mean,std`.
pub fn summary_csv(summary: &[PolicySummary]) -> Result<Vec<u8>, Error> {
    let rows: Vec<StatRow> = summary_rows("", 0.0, summary)
        .map(|r| StatRow { policy: r.policy, episodes: r.episodes, metric: r.metric, mean: r.mean, std: r.std })
        .collect();
    csv_rows(&rows)
}

/// `param,value,policy,episodes,metric,mean,std`.
pub fn sweep_csv(param: SweepParam, points: &[SweepPoint]) -> Result<Vec<u8>, Error> {
    let name = match param {
        SweepParam::Credibility => "credibility",
        SweepParam::Prior => "prior_active",
        SweepParam::Channel => "peak_snr_db",
    };
    let rows: Vec<SummaryRow> = points.iter().flat_map(|p| summary_rows(name, p.value, &p.summary)).collect();
    csv_rows(&rows)
}

pub fn quality_csv(q: &QualitySummary) -> Result<Vec<u8>, Error> {
    csv_rows(std::slice::from_ref(q))
}

/// Fixed-width table of the headline metrics, one row per policy.
pub fn summary_table(summary: &[PolicySummary]) -> String {
    const COLS: [&str; 7] = [
        "relay_miss",
        "routine_completion",
        "defender_utility_normalized",
        "scan_fraction",
        "attacker_realized",
        "attacks",
        "violations",
    ];
    let mut s = format!("{:<22}", "policy");
    for c in COLS {
        s.push_str(&format!(" {:>28}", c));
    }
    s.push('\n');
    for p in summary {
        s.push_str(&format!("{:<22}", p.policy.name()));
        for c in COLS {
            let cell = p
                .stats
                .iter()
                .find(|st| st.metric == c)
                .map(|st| format!("{:.4} ± {:.4}", st.mean, st.std))
                .unwrap_or_else(|| "-".into());
            s.push_str(&format!(" {:>28}", cell));
        }
        s.push('\n');
    }
    s
}
