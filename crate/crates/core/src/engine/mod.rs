//! Integrated episode loop: plan each window, broadcast a signal about every
//! planned slot through the fading downlink, execute, and let the attacker act
//! on whatever it believes.

pub mod baselines;
pub mod config;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attacker::{
    best_response, belief_update, intensity_update, slot_reward, threshold_decision, AttackerParams, Decision,
    Observation, SlotOutlook,
};
use crate::channel::{outage_probability, predict_mean_snr, sample_slot, total_delay, ChannelParams};
use crate::persuasion::{
    allocate_budget, choose_artificial_delay, lyapunov_drift, quantize_state, solve_for, BudgetCurve,
    PersuasionError, PersuasionGame, Receiver, SignalingPolicy,
};
use crate::star::{
    check_plan, detection_performance, plan_horizon, ready_view, slot_utility, HorizonPlan, PlannedTask, SchedEnv,
    SlotScheduler, StarScheduler, TsMode, Violation, WindowState,
};
use crate::workload::{generate_arrivals, Accounting, InstanceId, InstanceState, Priority, Slot, TaskQueue};

pub use baselines::{AnyScheduler, FcfsScheduler, SpScheduler};
pub use config::*;

pub const CHANNEL_STREAM: u64 = 2;
pub const SIGNAL_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("persuasion: {0}")]
    Persuasion(#[from] PersuasionError),
    #[error("empty policy list")]
    EmptyPolicies,
    #[error("no seeds given")]
    EmptySeeds,
}

/// A committed signaling policy with its drift at the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub budget: f64,
    pub policy: SignalingPolicy,
    pub drift: f64,
}

impl Design {
    fn new(budget: f64, policy: SignalingPolicy, game: &PersuasionGame) -> Self {
        let drift = lyapunov_drift(&game.prior, &policy, game);
        Design { budget, policy, drift }
    }
}

/// Seed-independent precomputation shared by every episode of a scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub channel: ChannelParams,
    pub game: PersuasionGame,
    pub receiver: Receiver,
    pub resolution: u32,
    /// Optimal objective against the per-slot budget, tabulated up to `H(μ0)`.
    pub curve: BudgetCurve,
    /// Optimal design at every grid budget of `curve`.
    pub designs: Vec<Design>,
    /// Uniform-budget design used by the static deception baseline.
    pub static_design: Design,
    /// Fully revealing telemetry of the non-deceptive policies.
    pub truthful: Design,
}

impl Prepared {
    pub fn new(config: ScenarioConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let channel = config.channel_params()?;
        let d = &config.deception;
        let game = PersuasionGame::from_schedule(d.z_bins, d.prior_active, &config.attacker.params(), d.signals);
        let receiver = match config.attacker.mode {
            AttackerMode::Threshold => Receiver::Threshold { bins: d.z_bins, threshold: d.threshold },
            AttackerMode::Dp | AttackerMode::None => Receiver::BestResponse,
        };
        let resolution = d.resolution.unwrap_or_else(|| crate::persuasion::default_resolution(game.n_states()));
        let (curve, policies) = BudgetCurve::tabulate(&game, receiver, d.budget_step, f64::INFINITY, resolution)?;
        let designs = policies
            .into_iter()
            .enumerate()
            .map(|(i, p)| Design::new(i as f64 * curve.step, p, &game))
            .collect();
        let static_design = Design::new(d.credibility, solve_for(&game, receiver, d.credibility, resolution)?.policy, &game);
        let truthful = Design::new(0.0, SignalingPolicy::identity(game.n_states()), &game);
        Ok(Prepared { config, channel, game, receiver, resolution, curve, designs, static_design, truthful })
    }

    /// Same scenario with a different per-slot budget; the tabulated designs are reused.
    pub fn with_credibility(&self, c: f64) -> Result<Self, EngineError> {
        let mut config = self.config.clone();
        config.deception.credibility = c;
        config.validate()?;
        let static_design = Design::new(c, solve_for(&self.game, self.receiver, c, self.resolution)?.policy, &self.game);
        Ok(Prepared { config, static_design, ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationCounts {
    pub capacity: u64,
    pub power: u64,
    pub scan_duration: u64,
    pub stability: u64,
    pub task_window: u64,
}

impl ViolationCounts {
    fn add(&mut self, v: &[Violation]) {
        for v in v {
            match v {
                Violation::Capacity { .. } => self.capacity += 1,
                Violation::Power { .. } => self.power += 1,
                Violation::ScanDuration { .. } => self.scan_duration += 1,
                Violation::Stability { .. } => self.stability += 1,
                Violation::TaskWindow { .. } => self.task_window += 1,
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.capacity + self.power + self.scan_duration + self.stability + self.task_window
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub policy: PolicyKind,
    pub seed: u64,
    /// Mean per-resource utilization, percent.
    pub utilization: Vec<f64>,
    pub routine_completion: f64,
    pub relay_miss: f64,
    pub defender_utility: f64,
    pub scan_fraction: f64,
    pub attacker_realized: f64,
    pub attacker_believed: f64,
    pub attacks: u64,
    pub erasures: u64,
    pub signals_received: u64,
    pub signals_erased: u64,
    pub mean_belief_active: f64,
    pub mean_drift: f64,
    pub mean_delay_ms: f64,
    pub infeasible_slots: u64,
    pub violations: ViolationCounts,
    pub accounting: Accounting,
    pub residual: u64,
    pub accounting_ok: bool,
    /// Every allocation gave no less budget to slots with higher predicted SNR.
    pub budget_monotone: bool,
    pub delay_warnings: u64,
}

impl EpisodeMetrics {
    /// Named scalar view used for aggregation and tables.
    pub fn scalars(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for (k, u) in self.utilization.iter().enumerate() {
            out.push((alloc::format!("utilization_{k}"), *u));
        }
        let rows: [(&str, f64); 14] = [
            ("routine_completion", self.routine_completion),
            ("relay_miss", self.relay_miss),
            ("defender_utility", self.defender_utility),
            ("scan_fraction", self.scan_fraction),
            ("attacker_realized", self.attacker_realized),
            ("attacker_believed", self.attacker_believed),
            ("attacks", self.attacks as f64),
            ("erasures", self.erasures as f64),
            ("mean_belief_active", self.mean_belief_active),
            ("mean_drift", self.mean_drift),
            ("mean_delay_ms", self.mean_delay_ms),
            ("infeasible_slots", self.infeasible_slots as f64),
            ("violations", self.violations.total() as f64),
            ("residual", self.residual as f64),
        ];
        out.extend(rows.iter().map(|(k, v)| (String::from(*k), *v)));
        out
    }
}

/// One row of the per-slot trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotTrace {
    pub t: Slot,
    pub x_scan: bool,
    pub z: f64,
    pub running: u32,
    /// Planned state the slot's telemetry describes.
    pub omega: usize,
    pub signal: usize,
    pub budget: f64,
    pub snr_pred_db: f64,
    pub delay_ms: f64,
    pub arrival: Slot,
    pub snr_db: f64,
    pub xi: bool,
    pub belief: f64,
    pub x_att: bool,
    pub a: f64,
    pub reward: f64,
}

/// One row of the per-window trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTrace {
    pub start: Slot,
    pub len: u32,
    pub plan_f: f64,
    pub plan_z_avg: f64,
    pub f: f64,
    pub z_avg: f64,
    pub infeasible: u32,
    pub violations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub metrics: EpisodeMetrics,
    pub slots: Vec<SlotTrace>,
    pub windows: Vec<WindowTrace>,
}

struct Packet<'p> {
    sent: Slot,
    arrival: Slot,
    message: usize,
    policy: &'p SignalingPolicy,
}

fn p_active(mu: &[f64], bins: usize) -> f64 {
    mu[bins.min(mu.len())..].iter().sum()
}

/// Expected reward of attacking under belief `mu`, before the intensity cost.
fn believed_gain(mu: &[f64], bins: usize, p: &AttackerParams) -> f64 {
    mu.iter()
        .enumerate()
        .map(|(w, m)| {
            if w >= bins {
                -m * p.detection_penalty
            } else {
                m * p.reward * (1.0 - (w as f64 + 0.5) / bins as f64)
            }
        })
        .sum()
}

/// Realized window record for the constraint checker.
struct WindowRecord {
    plan: HorizonPlan,
    index: BTreeMap<InstanceId, usize>,
}

impl WindowRecord {
    fn open(queue: &TaskQueue, w: &WindowState, d_s: u32, p_max: f64) -> Self {
        let mut index = BTreeMap::new();
        let mut tasks = Vec::new();
        for i in queue.active() {
            index.insert(i.id, tasks.len());
            tasks.push(PlannedTask { id: i.id, spec: i.spec, release: i.req.max(w.start), deadline: i.d, work: i.remaining });
        }
        let plan = HorizonPlan {
            start: w.start,
            len: w.len,
            tasks,
            runs: Vec::new(),
            x_scan: Vec::new(),
            z: Vec::new(),
            f: 0.0,
            d_s,
            p_max,
            z_avg: 0.0,
            infeasible_slots: Vec::new(),
        };
        WindowRecord { plan, index }
    }

    fn admit(&mut self, queue: &TaskQueue, ids: &[InstanceId]) {
        for id in ids {
            if let Some(i) = queue.instance(*id) {
                if i.state != InstanceState::Dropped {
                    self.index.insert(i.id, self.plan.tasks.len());
                    self.plan.tasks.push(PlannedTask { id: i.id, spec: i.spec, release: i.req, deadline: i.d, work: i.remaining });
                }
            }
        }
    }
}

fn baseline_scheduler(policy: PolicyKind, packing: Packing) -> Option<AnyScheduler> {
    match policy {
        PolicyKind::Fcfs => Some(AnyScheduler::Fcfs(FcfsScheduler::new(packing))),
        PolicyKind::Sp => Some(AnyScheduler::Sp(SpScheduler::new(packing))),
        _ => None,
    }
}

/// Per-slot budgets over one prediction block.
struct Allocation {
    start: Slot,
    snr_db: Vec<f64>,
    budgets: Vec<f64>,
}

impl Allocation {
    fn at(&self, t: Slot) -> Option<(f64, f64)> {
        let i = t.checked_sub(self.start)? as usize;
        Some((*self.snr_db.get(i)?, self.budgets[i]))
    }
}

/// Runs one episode. Deterministic in `(config, policy, seed)`.
pub fn run_episode(prep: &Prepared, policy: PolicyKind, seed: u64) -> Result<Episode, EngineError> {
    let cfg = &prep.config;
    let horizon = cfg.scenario.horizon;
    let window_len = cfg.scenario.window;
    let specs = cfg.tasks.clone();
    let star_cfg = cfg.star_config();
    let env = SchedEnv { specs: &specs, utility: &cfg.utility, star: &star_cfg };
    let scan = cfg.scan_spec();
    let d = &cfg.deception;
    let bins = d.z_bins;
    let ap = cfg.attacker.params();
    let prior = prep.game.prior.clone();
    let geom = &cfg.geometry;
    let proc_ms = cfg.channel.proc_delay_ms;

    let mut arrivals = generate_arrivals(&specs, horizon, seed).into_iter().peekable();
    let mut channel_rng = ChaCha8Rng::seed_from_u64(seed);
    channel_rng.set_stream(CHANNEL_STREAM);
    let mut signal_rng = ChaCha8Rng::seed_from_u64(seed);
    signal_rng.set_stream(SIGNAL_STREAM);

    let mut queue = TaskQueue::new(specs.clone());
    let mut baseline = baseline_scheduler(policy, cfg.baselines.packing);
    let mut window = WindowState::new(0, window_len.min(horizon), specs.len());

    let mut slots = Vec::with_capacity(horizon as usize);
    let mut windows: Vec<WindowTrace> = Vec::new();
    let mut used_sum = vec![0.0; cfg.dim()];
    let mut violations = ViolationCounts::default();
    let mut infeasible = 0u64;
    let mut bd_sum = 0.0;
    let mut scan_slots = 0u64;

    let mut belief = prior.clone();
    let mut intensity = 0.0;
    let mut realized = 0.0;
    let mut believed = 0.0;
    let mut attacks = 0u64;
    let mut erasures = 0u64;
    let mut received_signals = 0u64;
    let mut erased_signals = 0u64;
    let mut belief_sum = 0.0;
    let mut drift_sum = 0.0;
    let mut delay_sum = 0.0;
    let mut budget_monotone = true;
    let mut delay_warnings = 0u64;
    let mut alloc_block = Allocation { start: 0, snr_db: Vec::new(), budgets: Vec::new() };
    let mut in_flight: Vec<Packet> = Vec::new();

    let mut k: Slot = 0;
    while k < horizon {
        let len = window_len.min(horizon - k);
        if k > 0 {
            window = window.next(len);
        }

        // Phase 1: plan the window. STAR variants then execute the planned scan starts.
        let plan = match &baseline {
            Some(s) => plan_horizon(&queue, &window, s, &env),
            None => plan_horizon(&queue, &window, &StarScheduler::new(), &env),
        };
        let mut committed = StarScheduler::committed(&plan);

        let mut record = WindowRecord::open(&queue, &window, scan.duration, star_cfg.p_max);
        let mut window_bd = Vec::with_capacity(len as usize);
        let mut window_infeasible = 0u32;
        for t in k..k + len {
            let offset = (t - k) as usize;

            // Phase 3a: execute the slot.
            queue.expire(t);
            let mut now = Vec::new();
            while arrivals.peek().is_some_and(|i| i.req <= t) {
                now.push(arrivals.next().expect("peeked"));
            }
            let ids: Vec<InstanceId> = now.iter().map(|i| i.id).collect();
            queue.push_arrivals(t, now);
            record.admit(&queue, &ids);

            let ready = ready_view(&queue, t);
            let decision = match baseline.as_mut() {
                Some(s) => s.schedule(t, &ready, &mut window, &env),
                None => committed.schedule(t, &ready, &mut window, &env),
            };
            window.record(&decision, &ready);
            drop(ready);
            queue.execute(&decision.run).map_err(|e| EngineError::Config(alloc::format!("scheduler contract: {e}")))?;
            infeasible += u64::from(decision.infeasible);
            window_infeasible += u32::from(decision.infeasible);
            for (s, u) in used_sum.iter_mut().zip(&decision.used) {
                *s += u;
            }
            scan_slots += u64::from(decision.scan);
            record.plan.runs.push(decision.run.iter().filter_map(|id| record.index.get(id).copied()).collect());
            record.plan.x_scan.push(decision.scan);
            record.plan.z.push(decision.z);
            window_bd.push((decision.scan, decision.z));

            // Phase 2: budget, signal and delay for this slot's telemetry.
            let omega = quantize_state(plan.x_scan[offset], plan.z[offset], bins);
            let (design, snr_hat, delay_ms) = match policy {
                PolicyKind::Stardis => {
                    if alloc_block.at(t).is_none() {
                        let span = d.prediction_slots.min(horizon - t);
                        let pred = predict_mean_snr(t, span, geom).map_err(|e| EngineError::Config(alloc::format!("{e}")))?;
                        let p_out: Vec<f64> = pred.values_db.iter().map(|&g| outage_probability(g, &prep.channel)).collect();
                        let budgets = allocate_budget(&p_out, d.credibility, &prep.curve);
                        budget_monotone &= allocation_monotone(&pred.values_db, &budgets);
                        alloc_block = Allocation { start: t, snr_db: pred.values_db, budgets };
                    }
                    let (snr_hat, budget) = alloc_block.at(t).expect("block covers t");
                    let choice =
                        choose_artificial_delay(snr_hat, geom.propagation_ms(t as f64), proc_ms, d.max_delay_ms, &d.ramp);
                    delay_warnings += u64::from(choice.no_headroom);
                    let design = &prep.designs[prep.curve.grid_index(budget)];
                    (design, snr_hat, choice.delay_ms)
                }
                PolicyKind::StarStaticDeception => (&prep.static_design, geom.mean_snr_db(t as f64), 0.0),
                _ => (&prep.truthful, geom.mean_snr_db(t as f64), 0.0),
            };
            let u: f64 = signal_rng.random();
            let message = design.policy.sample(omega, u);
            let total = total_delay(t, geom, proc_ms, delay_ms);
            let arrival = t + (libm::ceil(total / cfg.scenario.slot_ms) as Slot).max(1);
            in_flight.push(Packet { sent: t, arrival, message, policy: &design.policy });
            drift_sum += design.drift;
            delay_sum += delay_ms;

            // Phase 3b: downlink. Packets landing now are intercepted or lost together.
            let sample = sample_slot(t, geom, &prep.channel, proc_ms, delay_ms, &mut channel_rng);
            let xi = cfg.channel.forced(t).unwrap_or(sample.received);
            erasures += u64::from(!xi);
            let mut freshest: Option<Packet> = None;
            let mut landed = 0u64;
            let mut i = 0;
            while i < in_flight.len() {
                if in_flight[i].arrival <= t {
                    let p = in_flight.swap_remove(i);
                    landed += 1;
                    if freshest.as_ref().is_none_or(|f| p.sent > f.sent) {
                        freshest = Some(p);
                    }
                } else {
                    i += 1;
                }
            }
            if let Some(p) = freshest {
                if xi {
                    received_signals += landed;
                    belief = belief_update(&prior, Observation::Signal(p.message), &p.policy.0, &prior)
                        .unwrap_or_else(|_| prior.clone());
                } else {
                    erased_signals += landed;
                    belief = prior.clone();
                }
            }

            // Phase 3c: the attacker acts on its belief.
            let pa = p_active(&belief, bins);
            let gain = believed_gain(&belief, bins, &ap);
            let attack = match cfg.attacker.mode {
                AttackerMode::None => false,
                AttackerMode::Threshold => threshold_decision(pa, d.threshold) == Decision::Attack,
                AttackerMode::Dp => {
                    let rest = (k + len - t) as usize;
                    let outlook = vec![SlotOutlook { gain, forbidden: false }; rest];
                    best_response(&outlook, intensity, &ap).map(|p| p.attacks[0]).unwrap_or(false)
                }
            };
            let reward = slot_reward(attack, decision.z, xi, decision.scan, intensity, &ap);
            if attack {
                attacks += 1;
                believed += gain - ap.attack_cost(intensity);
            }
            realized += reward;
            intensity = intensity_update(intensity, attack, ap.memory);
            belief_sum += pa;
            slots.push(SlotTrace {
                t,
                x_scan: decision.scan,
                z: decision.z,
                running: decision.run.len() as u32,
                omega,
                signal: message,
                budget: design.budget,
                snr_pred_db: snr_hat,
                delay_ms,
                arrival,
                snr_db: sample.snr_db,
                xi,
                belief: pa,
                x_att: attack,
                a: intensity,
                reward,
            });
        }

        // Window bookkeeping: realized objective and constraint check.
        let f = window_bd.iter().filter(|(s, _)| *s).count() as f64 / len as f64;
        let y = detection_performance(f, scan.duration, &cfg.utility);
        bd_sum += window_bd.iter().map(|&(s, z)| slot_utility(y, s, z, &cfg.utility)).sum::<f64>();
        record.plan.f = f;
        record.plan.z_avg = window_bd.iter().map(|(_, z)| z).sum::<f64>() / len as f64;
        let found = check_plan(&record.plan, &specs, &scan, TsMode::Capped);
        violations.add(&found);
        windows.push(WindowTrace {
            start: k,
            len,
            plan_f: plan.f,
            plan_z_avg: plan.z_avg,
            f,
            z_avg: record.plan.z_avg,
            infeasible: window_infeasible,
            violations: found.len() as u32,
        });

        k += len;
    }

    let n = horizon as f64;
    let (totals, residual) = queue.totals();
    let acc = queue.accounting();
    let mut mission = 0.0;
    let (mut routine_done, mut routine_total, mut relay_failed, mut relay_total) = (0u64, 0u64, 0u64, 0u64);
    for (spec, a) in specs.iter().zip(acc) {
        let failed = a.missed + a.dropped;
        mission += spec.value * (a.completed as f64 - cfg.mission.failure_penalty * failed as f64);
        match spec.priority {
            Priority::Low => {
                routine_done += a.completed;
                routine_total += a.completed + failed;
            }
            Priority::High => {
                relay_failed += failed;
                relay_total += a.completed + failed;
            }
        }
    }
    let accounting_ok = totals.generated == totals.completed + totals.dropped + totals.missed + residual;
    let pct = |num: u64, den: u64| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    let metrics = EpisodeMetrics {
        policy,
        seed,
        utilization: used_sum.iter().map(|s| 100.0 * s / n).collect(),
        routine_completion: if routine_total == 0 { 100.0 } else { pct(routine_done, routine_total) },
        relay_miss: pct(relay_failed, relay_total),
        defender_utility: (bd_sum + mission) / n,
        scan_fraction: scan_slots as f64 / n,
        attacker_realized: realized / n,
        attacker_believed: believed / n,
        attacks,
        erasures,
        signals_received: received_signals,
        signals_erased: erased_signals,
        mean_belief_active: belief_sum / n,
        mean_drift: drift_sum / n,
        mean_delay_ms: delay_sum / n,
        infeasible_slots: infeasible,
        violations,
        accounting: totals,
        residual,
        accounting_ok,
        budget_monotone,
        delay_warnings,
    };
    Ok(Episode { metrics, slots, windows })
}

/// Budget never decreases as predicted SNR increases.
pub fn allocation_monotone(snr: &[f64], budgets: &[f64]) -> bool {
    snr.iter().zip(budgets).all(|(gi, bi)| {
        snr.iter().zip(budgets).all(|(gj, bj)| !(gi < gj) || *bi <= bj + 1e-9)
    })
}

/// Mean and sample standard deviation of one metric for one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub episodes: usize,
    pub stats: Vec<Stat>,
}

impl PolicySummary {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.stats.iter().find(|s| s.metric == metric).map(|s| s.mean)
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// Per-policy mean ± std of every metric. Defender utility is also reported
/// normalized by the FCFS mean when FCFS is present.
pub fn summarize(episodes: &[EpisodeMetrics]) -> Vec<PolicySummary> {
    let mut policies: Vec<PolicyKind> = episodes.iter().map(|e| e.policy).collect();
    policies.sort();
    policies.dedup();
    let fcfs: Vec<f64> = episodes.iter().filter(|e| e.policy == PolicyKind::Fcfs).map(|e| e.defender_utility).collect();
    let norm = if fcfs.is_empty() { None } else { Some(mean_std(&fcfs).0).filter(|m| *m > 0.0) };
    policies
        .into_iter()
        .map(|policy| {
            let eps: Vec<&EpisodeMetrics> = episodes.iter().filter(|e| e.policy == policy).collect();
            let names: Vec<String> = eps[0].scalars().into_iter().map(|(k, _)| k).collect();
            let mut stats: Vec<Stat> = names
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let v: Vec<f64> = eps.iter().map(|e| e.scalars()[i].1).collect();
                    let (mean, std) = mean_std(&v);
                    Stat { metric: name.clone(), mean, std }
                })
                .collect();
            if let Some(norm) = norm {
                let v: Vec<f64> = eps.iter().map(|e| e.defender_utility / norm).collect();
                let (mean, std) = mean_std(&v);
                stats.push(Stat { metric: "defender_utility_normalized".into(), mean, std });
            }
            PolicySummary { policy, episodes: eps.len(), stats }
        })
        .collect()
}

/// Sequential suite over policies × seeds.
pub fn run_benchmark_suite(prep: &Prepared, policies: &[PolicyKind], seeds: &[u64]) -> Result<Vec<PolicySummary>, EngineError> {
    if policies.is_empty() {
        return Err(EngineError::EmptyPolicies);
    }
    if seeds.is_empty() {
        return Err(EngineError::EmptySeeds);
    }
    let mut all = Vec::new();
    for &p in policies {
        for &s in seeds {
            all.push(run_episode(prep, p, s)?.metrics);
        }
    }
    Ok(summarize(&all))
}

/// One-sided sign test: probability of at least `wins` successes in `n` fair trials.
pub fn sign_test_p(wins: usize, n: usize) -> f64 {
    let mut p = 0.0;
    for k in wins..=n {
        p += binomial(n, k);
    }
    p / libm::pow(2.0, n as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.scenario.horizon = 200;
        c.geometry.pass_slots = 200;
        c.geometry.episode_slots = 200;
        c.geometry.center_slot = 100.0;
        c
    }

    #[test]
    fn default_config_is_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn episode_is_deterministic() {
        let prep = Prepared::new(short()).unwrap();
        let a = run_episode(&prep, PolicyKind::Stardis, 3).unwrap();
        let b = run_episode(&prep, PolicyKind::Stardis, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.metrics.accounting_ok);
    }

    #[test]
    fn fcfs_without_scans_or_attacker() {
        let mut c = short();
        c.scan.enabled = false;
        c.attacker.mode = AttackerMode::None;
        let prep = Prepared::new(c).unwrap();
        let e = run_episode(&prep, PolicyKind::Fcfs, 1).unwrap();
        assert_eq!(e.metrics.scan_fraction, 0.0);
        assert_eq!(e.metrics.attacks, 0);
        assert!(e.metrics.defender_utility.is_finite());
        assert!(e.metrics.accounting_ok);
        // Occupancy equals the summed demand of the running work.
        let cpu: f64 = e.slots.iter().map(|s| s.running as f64).sum::<f64>();
        assert!(cpu > 0.0);
    }

    #[test]
    fn sign_test_values() {
        assert!((sign_test_p(20, 20) - 1.0 / 1_048_576.0).abs() < 1e-15);
        assert!((sign_test_p(0, 20) - 1.0).abs() < 1e-12);
        assert!(sign_test_p(15, 20) < 0.05);
        assert!(sign_test_p(14, 20) > 0.05);
    }

    #[test]
    fn monotone_check() {
        assert!(allocation_monotone(&[1.0, 2.0, 3.0], &[0.0, 0.1, 0.1]));
        assert!(!allocation_monotone(&[1.0, 2.0], &[0.2, 0.1]));
        assert!(allocation_monotone(&[2.0, 2.0], &[0.2, 0.1]));
    }
}
