use std::ops::Range;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stardis_core::channel::{sample_envelope, shadowed_rician_cdf, shadowed_rician_pdf, outage_probability, ChannelParams};
use stardis_core::engine::{run_episode, PolicyKind, Prepared, ScenarioConfig};
use stardis_core::math::integrate;
use stardis_core::persuasion::{default_resolution, solve_for, PersuasionGame, Receiver};

use crate::config::{load_game, load_or_default, to_toml};
use crate::output::{self, Format, Report, Sink};
use crate::runner::{self, InstanceRecord, SweepParam};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "stardis", version = env!("STARDIS_BUILD_ID"), about = "Satellite IDS scheduling and deception simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file; the built-in reference scenario when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; results go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SeedRange {
    /// Half-open seed range `N..M`, or a single seed.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<Range<u64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One episode with full per-slot and per-window traces.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Policy; the scenario's own when omitted.
        #[arg(long)]
        policy: Option<PolicyKind>,
    },
    /// Policy comparison over seeds, plus the greedy-versus-exact scheduler report.
    Benchmark {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: SeedRange,
        /// Comma-separated policies; all five when omitted.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<PolicyKind>,
        /// Small scheduling instances to compare against the exact oracle; 0 skips the report.
        #[arg(long, default_value_t = 100)]
        quality: usize,
        /// Longest window in the scheduler report.
        #[arg(long, default_value_t = 10)]
        quality_max_len: u32,
        /// Writes the scheduler-report plans to this JSON file.
        #[arg(long)]
        write_plans: Option<PathBuf>,
        /// Regenerates the plans in this JSON file and fails on any difference.
        #[arg(long)]
        plans: Option<PathBuf>,
    },
    /// Suite re-run across one scenario parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: SeedRange,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values; a built-in grid when omitted.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated policies; the three scan-capable ones when omitted.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<PolicyKind>,
    },
    /// Optimal credibility-constrained signaling for one game.
    PersuasionSolve {
        #[command(flatten)]
        common: Common,
        /// Game file; the scenario's scheduling game when omitted.
        #[arg(long)]
        game: Option<PathBuf>,
        /// Budget C in nats; overrides the game file or scenario.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        resolution: Option<u32>,
        /// Objective and cost over C = 0.01, 0.02, …, 0.5 as CSV.
        #[arg(long)]
        sweep: bool,
    },
    /// Envelope density tables and sampler agreement for the scenario's channel.
    ChannelValidate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Prints the reference scenario as TOML.
    DefaultConfig,
}

pub fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let parse = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("bad seed '{x}': {e}"));
    let r = match s.split_once("..") {
        Some((a, b)) => parse(a)?..parse(b)?,
        None => {
            let n = parse(s)?;
            n..n + 1
        }
    };
    if r.is_empty() {
        return Err(format!("empty seed range '{s}'"));
    }
    Ok(r)
}

fn seeds_of(range: &Option<Range<u64>>, config: &ScenarioConfig) -> Vec<u64> {
    match range {
        Some(r) => r.clone().collect(),
        None => (config.scenario.seeds[0]..config.scenario.seeds[1]).collect(),
    }
}

fn or_default(policies: Vec<PolicyKind>, default: &[PolicyKind]) -> Vec<PolicyKind> {
    if policies.is_empty() {
        default.to_vec()
    } else {
        policies
    }
}

fn prepare(path: Option<&Path>) -> Result<Prepared, Error> {
    Ok(Prepared::new(load_or_default(path)?)?)
}

pub fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { common, seed, policy } => simulate(&common, seed, policy),
        Command::Benchmark { common, seeds, policies, quality, quality_max_len, write_plans, plans } => {
            benchmark(&common, &seeds, policies, quality, quality_max_len, write_plans.as_deref(), plans.as_deref())
        }
        Command::Sweep { common, seeds, param, values, policies } => sweep(&common, &seeds, param, values, policies),
        Command::PersuasionSolve { common, game, budget, resolution, sweep } => {
            persuasion(&common, game.as_deref(), budget, resolution, sweep)
        }
        Command::ChannelValidate { common, points, draws, seed } => channel(&common, points, draws, seed),
        Command::DefaultConfig => {
            print!("{}", to_toml(&ScenarioConfig::default())?);
            Ok(())
        }
    }
}

fn simulate(common: &Common, seed: u64, policy: Option<PolicyKind>) -> Result<(), Error> {
    let prep = prepare(common.config.as_deref())?;
    let policy = policy.unwrap_or(prep.config.scenario.policy);
    let episode = run_episode(&prep, policy, seed)?;
    let sink = Sink::new(common.out.as_deref())?;
    match common.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Run<'a> {
                policy: PolicyKind,
                seed: u64,
                episode: &'a stardis_core::engine::Episode,
            }
            let report = Report::new("simulate", &prep.config, Run { policy, seed, episode: &episode });
            sink.write("episode.json", output::to_json(&report)?.as_bytes())
        }
        Format::Csv if sink.is_dir() => {
            sink.write("slots.csv", &output::slots_csv(&episode)?)?;
            sink.write("windows.csv", &output::windows_csv(&episode)?)?;
            sink.write("metrics.csv", &output::metrics_csv(std::slice::from_ref(&episode.metrics))?)?;
            manifest(&sink, "simulate", &prep.config, &["slots.csv", "windows.csv", "metrics.csv"])
        }
        Format::Csv => sink.write("metrics.csv", &output::metrics_csv(std::slice::from_ref(&episode.metrics))?),
    }
}

fn manifest(sink: &Sink, command: &str, config: &ScenarioConfig, files: &[&str]) -> Result<(), Error> {
    sink.write("manifest.json", output::to_json(&Report::new(command, config, files))?.as_bytes())
}

fn benchmark(
    common: &Common,
    seeds: &SeedRange,
    policies: Vec<PolicyKind>,
    quality: usize,
    max_len: u32,
    write_plans: Option<&Path>,
    golden: Option<&Path>,
) -> Result<(), Error> {
    let prep = prepare(common.config.as_deref())?;
    let seeds = seeds_of(&seeds.seeds, &prep.config);
    let policies = or_default(policies, &PolicyKind::ALL);
    if let Some(path) = golden {
        let records: Vec<InstanceRecord> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let bad = runner::check_golden(&records);
        if !bad.is_empty() {
            return Err(Error::Golden(bad));
        }
        eprintln!("{} golden plans reproduced", records.len());
    }
    let summary = runner::benchmark(&prep, &policies, &seeds)?;
    let report = (quality > 0).then(|| runner::quality(0, quality, max_len.max(5)));
    if let (Some(path), Some((_, records))) = (write_plans, &report) {
        std::fs::write(path, output::to_json(records)?)?;
    }
    let sink = Sink::new(common.out.as_deref())?;
    let q = report.as_ref().map(|r| &r.0);
    eprint!("{}", output::summary_table(&summary));
    if let Some(q) = q {
        eprintln!(
            "scheduler: {} instances, {} compared, mean greedy/exact {:.4}, min {:.4}, {} violations",
            q.instances, q.compared, q.mean_ratio, q.min_ratio, q.violations
        );
    }
    match common.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Bench<'a> {
                seeds: &'a [u64],
                summary: &'a [stardis_core::engine::PolicySummary],
                scheduler: Option<&'a runner::QualitySummary>,
            }
            let doc = Report::new("benchmark", &prep.config, Bench { seeds: &seeds, summary: &summary, scheduler: q });
            sink.write("benchmark.json", output::to_json(&doc)?.as_bytes())
        }
        Format::Csv => {
            sink.write("summary.csv", &output::summary_csv(&summary)?)?;
            if let Some(q) = q {
                sink.write("scheduler.csv", &output::quality_csv(q)?)?;
            }
            if sink.is_dir() {
                manifest(&sink, "benchmark", &prep.config, &["summary.csv", "scheduler.csv"])?;
            }
            Ok(())
        }
    }
}

fn sweep(common: &Common, seeds: &SeedRange, param: SweepParam, values: Vec<f64>, policies: Vec<PolicyKind>) -> Result<(), Error> {
    let prep = prepare(common.config.as_deref())?;
    let seeds = seeds_of(&seeds.seeds, &prep.config);
    let policies = or_default(policies, &[PolicyKind::Star, PolicyKind::StarStaticDeception, PolicyKind::Stardis]);
    let values = if values.is_empty() { param.defaults() } else { values };
    let points = runner::sweep(&prep, param, &values, &policies, &seeds)?;
    let sink = Sink::new(common.out.as_deref())?;
    match common.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Sweep<'a> {
                param: SweepParam,
                seeds: &'a [u64],
                points: &'a [runner::SweepPoint],
            }
            let doc = Report::new("sweep", &prep.config, Sweep { param, seeds: &seeds, points: &points });
            sink.write("sweep.json", output::to_json(&doc)?.as_bytes())
        }
        Format::Csv => {
            sink.write("sweep.csv", &output::sweep_csv(param, &points)?)?;
            if sink.is_dir() {
                manifest(&sink, "sweep", &prep.config, &["sweep.csv"])?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SolveRow {
    budget: f64,
    objective: f64,
    cost: f64,
}

fn persuasion(
    common: &Common,
    game_path: Option<&Path>,
    budget: Option<f64>,
    resolution: Option<u32>,
    sweep: bool,
) -> Result<(), Error> {
    let config = load_or_default(common.config.as_deref())?;
    let (game, file_budget, file_res, receiver): (PersuasionGame, f64, Option<u32>, Receiver) = match game_path {
        Some(p) => {
            let f = load_game(p)?;
            (f.game, f.budget, f.resolution, f.receiver.unwrap_or(Receiver::BestResponse))
        }
        None => {
            let d = &config.deception;
            let game = PersuasionGame::from_schedule(d.z_bins, d.prior_active, &config.attacker.params(), d.signals);
            (game, d.credibility, d.resolution, Receiver::BestResponse)
        }
    };
    let budget = budget.unwrap_or(file_budget);
    if !(budget >= 0.0) {
        return Err(Error::Config("budget must be non-negative".into()));
    }
    let res = resolution.or(file_res).unwrap_or_else(|| default_resolution(game.n_states()));
    let sink = Sink::new(common.out.as_deref())?;
    if sweep {
        let rows: Vec<SolveRow> = (1..=50)
            .map(|i| {
                let c = 0.01 * i as f64;
                solve_for(&game, receiver, c, res).map(|s| SolveRow { budget: c, objective: s.objective, cost: s.cost })
            })
            .collect::<Result<_, _>>()?;
        let body = match common.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &rows {
                    w.serialize(r)?;
                }
                w.into_inner().map_err(|e| Error::Io(e.into_error()))?
            }
            Format::Json => output::to_json(&Report::new("persuasion-solve", &config, &rows))?.into_bytes(),
        };
        let name = if common.format == Format::Csv { "persuasion_sweep.csv" } else { "persuasion_sweep.json" };
        return sink.write(name, &body);
    }
    let sol = solve_for(&game, receiver, budget, res)?;
    #[derive(Serialize)]
    struct Solved<'a> {
        game: &'a PersuasionGame,
        budget: f64,
        resolution: u32,
        solution: &'a stardis_core::persuasion::PersuasionSolution,
    }
    let doc = Report::new("persuasion-solve", &config, Solved { game: &game, budget, resolution: res, solution: &sol });
    sink.write("persuasion.json", output::to_json(&doc)?.as_bytes())
}

#[derive(Serialize)]
struct DensityRow {
    r: f64,
    pdf: f64,
    cdf: f64,
}

#[derive(Debug, Serialize)]
pub struct ChannelSummary {
    pub mass: f64,
    pub mean_power: f64,
    pub model_mean_power: f64,
    pub ks_distance: f64,
    pub draws: usize,
    pub outage_at_peak: Option<f64>,
}

/// Numeric mass, second moment and sampler KS distance for `p`.
pub fn channel_summary(p: &ChannelParams, draws: usize, seed: u64, peak_snr_db: Option<f64>) -> Result<ChannelSummary, Error> {
    use rand::SeedableRng;
    let lim = p.support_limit();
    let pdf = |r: f64| shadowed_rician_pdf(r, p).unwrap_or(f64::NAN);
    let mass = integrate(pdf, 0.0, lim, 1e-12);
    let mean_power = integrate(|r| r * r * pdf(r), 0.0, lim, 1e-12);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stardis_core::engine::CHANNEL_STREAM);
    let mut v: Vec<f64> = (0..draws).map(|_| sample_envelope(p, &mut rng)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &r) in v.iter().enumerate() {
        let f = shadowed_rician_cdf(r, p);
        ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(ChannelSummary {
        mass,
        mean_power,
        model_mean_power: p.mean_power(),
        ks_distance: ks,
        draws,
        outage_at_peak: peak_snr_db.map(|s| outage_probability(s, p)),
    })
}

fn channel(common: &Common, points: usize, draws: usize, seed: u64) -> Result<(), Error> {
    let config = load_or_default(common.config.as_deref())?;
    let p = config.channel_params()?;
    let lim = p.support_limit();
    let n = points.max(2);
    let rows: Vec<DensityRow> = (0..n)
        .map(|i| {
            let r = lim * i as f64 / (n - 1) as f64;
            Ok(DensityRow { r, pdf: shadowed_rician_pdf(r, &p).map_err(|e| Error::Config(e.to_string()))?, cdf: shadowed_rician_cdf(r, &p) })
        })
        .collect::<Result<_, Error>>()?;
    let summary = channel_summary(&p, draws, seed, config.geometry.peak_snr_db)?;
    eprintln!(
        "mass {:.9}  E[r^2] {:.9} (model {:.9})  KS {:.5} over {} draws",
        summary.mass, summary.mean_power, summary.model_mean_power, summary.ks_distance, summary.draws
    );
    let sink = Sink::new(common.out.as_deref())?;
    match common.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            sink.write("channel.csv", &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
            if sink.is_dir() {
                sink.write("channel_summary.json", output::to_json(&Report::new("channel-validate", &config, &summary))?.as_bytes())?;
            }
            Ok(())
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                summary: &'a ChannelSummary,
                table: &'a [DensityRow],
            }
            let doc = Report::new("channel-validate", &config, Doc { summary: &summary, table: &rows });
            sink.write("channel.json", output::to_json(&doc)?.as_bytes())
        }
    }
}
