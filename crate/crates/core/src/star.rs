//! Defender-side scheduling: detection curve, slot utility, the greedy
//! per-slot heuristic, window planning, a constraint checker and an exact
//! brute-force oracle for small windows.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::workload::{
    ArrivalPattern, InstanceId, Priority, ResourceVector, Slot, TaskInstance, TaskQueue, TaskSpec,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StarError {
    #[error("invalid utility parameters: {0}")]
    InvalidUtility(&'static str),
    #[error("instance too large: {0} candidate decision strings")]
    TooLarge(u128),
    #[error("no schedule satisfies the constraints")]
    Infeasible,
    #[error("invalid scheduler configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Weights of the defender's slot utility and the detection sigmoid shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub steepness: f64,
    pub center: f64,
    #[serde(default = "one")]
    pub y_max: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for UtilityParams {
    fn default() -> Self {
        UtilityParams { alpha: 10.0, beta: 0.5, gamma: 2.0, steepness: 0.5, center: 0.5, y_max: 1.0 }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<(), StarError> {
        let v = [self.alpha, self.beta, self.gamma, self.steepness, self.center, self.y_max];
        if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(StarError::InvalidUtility("all weights must be positive and finite"));
        }
        Ok(())
    }
}

/// `y = y_max / (1 + exp(−k (f·d_s − θ)))`.
pub fn detection_performance(f: f64, d_s: u32, p: &UtilityParams) -> f64 {
    p.y_max / (1.0 + libm::exp(-p.steepness * (f * d_s as f64 - p.center)))
}

/// `U = α y² − β x_scan² − γ y² (1 − z)`.
pub fn slot_utility(y: f64, scan: bool, z: f64, p: &UtilityParams) -> f64 {
    let x = if scan { 1.0 } else { 0.0 };
    p.alpha * y * y - p.beta * x * x - p.gamma * y * y * (1.0 - z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalRule {
    /// ΔU evaluated with the window frequency f updated by the candidate scan.
    #[default]
    Window,
    /// ΔU evaluated with y(x_scan, d_s), ignoring the window.
    PerSlot,
}

/// The IDS scan as a schedulable block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub demand: ResourceVector,
    #[serde(default)]
    pub power_weight: Option<f64>,
    pub duration: u32,
}

impl ScanSpec {
    pub fn power(&self) -> f64 {
        self.power_weight.unwrap_or_else(|| self.demand.mean())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarConfig {
    pub scan: ScanSpec,
    pub p_max: f64,
    pub marginal: MarginalRule,
    pub scanning: bool,
}

impl StarConfig {
    pub fn validate(&self, dim: usize) -> Result<(), StarError> {
        if self.scan.demand.dim() != dim {
            return Err(StarError::InvalidConfig("scan demand dimension mismatch"));
        }
        if self.scan.demand.0.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(StarError::InvalidConfig("scan demand entries must lie in [0, 1]"));
        }
        if self.scan.duration == 0 {
            return Err(StarError::InvalidConfig("scan duration must be at least one slot"));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) || self.scan.power() < 0.0 {
            return Err(StarError::InvalidConfig("power budget must be positive"));
        }
        Ok(())
    }
}

/// Everything a slot scheduler reads but never mutates.
#[derive(Debug, Clone, Copy)]
pub struct SchedEnv<'a> {
    pub specs: &'a [TaskSpec],
    pub utility: &'a UtilityParams,
    pub star: &'a StarConfig,
}

/// One buffered instance as presented to a slot scheduler.
#[derive(Debug, Clone, Copy)]
pub struct ReadyTask<'a> {
    pub id: InstanceId,
    pub spec_index: usize,
    pub spec: &'a TaskSpec,
    pub release: Slot,
    pub deadline: Slot,
    pub remaining: u32,
    pub running: bool,
}

/// Released, unfinished instances of the queue at slot `t`, in arrival order.
pub fn ready_view(queue: &TaskQueue, t: Slot) -> Vec<ReadyTask<'_>> {
    queue
        .active()
        .filter(|i| i.a <= t)
        .map(|i| ReadyTask {
            id: i.id,
            spec_index: i.spec,
            spec: &queue.specs[i.spec],
            release: i.req,
            deadline: i.d,
            remaining: i.remaining,
            running: i.state == crate::workload::InstanceState::Running,
        })
        .collect()
}

/// Per-window bookkeeping carried across slots.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowState {
    pub start: Slot,
    pub len: u32,
    /// Slots left in the scan block currently executing.
    pub scan_left: u32,
    /// Scan slots committed inside this window so far.
    pub scan_slots: u32,
    /// Instance-slots executed per spec in this window.
    pub delivered: Vec<u32>,
}

impl WindowState {
    pub fn new(start: Slot, len: u32, n_specs: usize) -> Self {
        WindowState { start, len, scan_left: 0, scan_slots: 0, delivered: vec![0; n_specs] }
    }

    /// Next window, inheriting any scan block still executing.
    pub fn next(&self, len: u32) -> Self {
        let mut w = WindowState::new(self.start + self.len, len, self.delivered.len());
        w.scan_left = self.scan_left;
        w.scan_slots = self.scan_left.min(len);
        w
    }

    pub fn end(&self) -> Slot {
        self.start + self.len
    }

    pub fn record(&mut self, decision: &SlotDecision, ready: &[ReadyTask]) {
        for r in ready {
            if decision.run.contains(&r.id) {
                self.delivered[r.spec_index] += 1;
            }
        }
        if decision.scan {
            self.scan_left = self.scan_left.saturating_sub(1);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotDecision {
    pub run: Vec<InstanceId>,
    pub scan: bool,
    pub scan_started: bool,
    /// Idle capacity after all allocations.
    pub z: f64,
    pub used: Vec<f64>,
    pub power: f64,
    /// High-priority or committed work could not be placed.
    pub infeasible: bool,
}

/// Capacity accounting for one slot.
#[derive(Debug, Clone)]
pub struct Packer {
    pub used: Vec<f64>,
    pub power: f64,
    p_max: f64,
    /// Scalar packing charges every item its largest component on a single pool.
    scalar: Option<f64>,
}

impl Packer {
    pub fn new(dim: usize, p_max: f64) -> Self {
        Packer { used: vec![0.0; dim], power: 0.0, p_max, scalar: None }
    }

    pub fn scalar(dim: usize, p_max: f64) -> Self {
        Packer { used: vec![0.0; dim], power: 0.0, p_max, scalar: Some(0.0) }
    }

    pub fn fits(&self, demand: &ResourceVector, power: f64) -> bool {
        if self.power + power > self.p_max + 1e-12 {
            return false;
        }
        match self.scalar {
            Some(s) => s + demand.max() <= 1.0 + 1e-12,
            None => self.used.iter().zip(&demand.0).all(|(u, r)| u + r <= 1.0 + 1e-12),
        }
    }

    pub fn add(&mut self, demand: &ResourceVector, power: f64) {
        for (u, r) in self.used.iter_mut().zip(&demand.0) {
            *u += r;
        }
        self.power += power;
        if let Some(s) = self.scalar.as_mut() {
            *s += demand.max();
        }
    }

    pub fn try_add(&mut self, demand: &ResourceVector, power: f64) -> bool {
        let ok = self.fits(demand, power);
        if ok {
            self.add(demand, power);
        }
        ok
    }

    /// Idle capacity `min_k (1 − used_k)`.
    pub fn z(&self) -> f64 {
        self.used.iter().map(|u| 1.0 - u).fold(1.0, f64::min)
    }

    fn z_with(&self, demand: &ResourceVector) -> f64 {
        self.used.iter().zip(&demand.0).map(|(u, r)| 1.0 - u - r).fold(1.0, f64::min)
    }
}

/// Marginal utility of starting a scan now, given the capacity already allocated.
pub fn scan_marginal(packer: &Packer, window: &WindowState, env: &SchedEnv) -> f64 {
    let p = env.utility;
    let scan = &env.star.scan;
    let d_s = scan.duration;
    let z0 = packer.z();
    let z1 = packer.z_with(&scan.demand);
    match env.star.marginal {
        MarginalRule::Window => {
            let n = window.len.max(1) as f64;
            let f0 = window.scan_slots as f64 / n;
            let f1 = ((window.scan_slots + d_s) as f64 / n).min(1.0);
            let y0 = detection_performance(f0, d_s, p);
            let y1 = detection_performance(f1, d_s, p);
            slot_utility(y1, true, z1, p) - slot_utility(y0, false, z0, p)
        }
        MarginalRule::PerSlot => {
            let y0 = detection_performance(0.0, d_s, p);
            let y1 = detection_performance(1.0, d_s, p);
            slot_utility(y1, true, z1, p) - slot_utility(y0, false, z0, p)
        }
    }
}

/// A per-slot scheduling rule.
pub trait SlotScheduler {
    fn schedule(&mut self, t: Slot, ready: &[ReadyTask], window: &mut WindowState, env: &SchedEnv) -> SlotDecision;
}

/// Greedy slot rule: mandatory work, conditional scan, then low-priority fill.
#[derive(Debug, Clone, Default)]
pub struct StarScheduler {
    /// Scan start offsets fixed by a window plan; when set, the scan step follows them.
    committed: Option<Vec<bool>>,
}

impl StarScheduler {
    pub fn new() -> Self {
        StarScheduler { committed: None }
    }

    /// Follows the scan starts of `plan` instead of deciding them online.
    pub fn committed(plan: &HorizonPlan) -> Self {
        StarScheduler { committed: Some(plan.scan_starts()) }
    }
}

/// One online greedy slot decision.
pub fn greedy_schedule_slot(t: Slot, ready: &[ReadyTask], window: &mut WindowState, env: &SchedEnv) -> SlotDecision {
    StarScheduler::new().schedule(t, ready, window, env)
}

fn edf_key(r: &ReadyTask) -> (Slot, bool, InstanceId) {
    (r.deadline, !r.running, r.id)
}

impl SlotScheduler for StarScheduler {
    fn schedule(&mut self, t: Slot, ready: &[ReadyTask], window: &mut WindowState, env: &SchedEnv) -> SlotDecision {
        let star = env.star;
        let dim = star.scan.demand.dim();
        let mut packer = Packer::new(dim, star.p_max);
        let mut out = SlotDecision::default();
        let mut taken = vec![false; ready.len()];

        // In-flight scan block (SD).
        if window.scan_left > 0 {
            if !packer.try_add(&star.scan.demand, star.scan.power()) {
                out.infeasible = true;
            }
            out.scan = true;
        }

        // High-priority work, earliest deadline first.
        let mut order: Vec<usize> = (0..ready.len()).collect();
        order.sort_by_key(|&i| edf_key(&ready[i]));
        for &i in &order {
            let r = &ready[i];
            if r.spec.priority == Priority::High {
                if packer.try_add(&r.spec.demand, r.spec.power()) {
                    taken[i] = true;
                } else {
                    out.infeasible = true;
                }
            }
        }

        // Then low-priority instances owed to the stability constraint.
        let elapsed = t.saturating_sub(window.start) + 1;
        for (j, spec) in env.specs.iter().enumerate() {
            let Some(rate) = spec.stability_requirement() else { continue };
            if spec.priority == Priority::High {
                continue;
            }
            let target = libm::ceil(rate * elapsed as f64 - 1e-9).max(0.0) as u32;
            let mut owed = target.saturating_sub(window.delivered[j]);
            for &i in &order {
                if owed == 0 {
                    break;
                }
                let r = &ready[i];
                if !taken[i] && r.spec_index == j && packer.try_add(&r.spec.demand, r.spec.power()) {
                    taken[i] = true;
                    owed -= 1;
                }
            }
        }

        // Conditional scan start.
        if star.scanning && window.scan_left == 0 {
            let d_s = star.scan.duration;
            let fits_window = t + d_s <= window.end();
            let wanted = match &self.committed {
                Some(starts) => starts.get((t - window.start) as usize).copied().unwrap_or(false),
                None => {
                    fits_window
                        && packer.z() >= star.scan.demand.max() - 1e-12
                        && packer.fits(&star.scan.demand, star.scan.power())
                        && scan_marginal(&packer, window, env) > 0.0
                }
            };
            if wanted {
                if packer.try_add(&star.scan.demand, star.scan.power()) && fits_window {
                    out.scan = true;
                    out.scan_started = true;
                    window.scan_left = d_s;
                    window.scan_slots += d_s;
                } else {
                    out.infeasible = true;
                }
            }
        }

        // Fill with low-priority work, EDF then id.
        for &i in &order {
            let r = &ready[i];
            if !taken[i] && r.spec.priority == Priority::Low && packer.try_add(&r.spec.demand, r.spec.power()) {
                taken[i] = true;
            }
        }

        out.run = order.iter().filter(|&&i| taken[i]).map(|&i| ready[i].id).collect();
        out.run.sort();
        out.z = packer.z();
        out.power = packer.power;
        out.used = packer.used;
        out
    }
}

/// Work item referenced by a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTask {
    pub id: InstanceId,
    pub spec: usize,
    pub release: Slot,
    pub deadline: Slot,
    /// Work outstanding at the later of release and window start.
    pub work: u32,
}

/// A window schedule with its realized capacity profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonPlan {
    pub start: Slot,
    pub len: u32,
    pub tasks: Vec<PlannedTask>,
    /// Indices into `tasks` executed in each slot.
    pub runs: Vec<Vec<usize>>,
    pub x_scan: Vec<bool>,
    pub z: Vec<f64>,
    pub f: f64,
    pub d_s: u32,
    pub p_max: f64,
    pub z_avg: f64,
    pub infeasible_slots: Vec<Slot>,
}

impl HorizonPlan {
    /// Scan block starts, splitting each run of scan slots into `d_s` blocks.
    pub fn scan_starts(&self) -> Vec<bool> {
        let mut starts = vec![false; self.x_scan.len()];
        let mut run = 0u32;
        for (i, &s) in self.x_scan.iter().enumerate() {
            if s {
                if run % self.d_s.max(1) == 0 {
                    starts[i] = true;
                }
                run += 1;
            } else {
                run = 0;
            }
        }
        starts
    }

    /// Whether a scan is active in a majority of the window's slots.
    pub fn scan_status(&self) -> bool {
        self.f >= 0.5
    }
}

/// Simulates `scheduler` over a window starting from `queue` plus `arrivals`.
///
/// Arrivals must carry ids unused by the queue. The queue is cloned; the caller's state is untouched.
pub fn plan_window<S: SlotScheduler + Clone>(
    queue: &TaskQueue,
    arrivals: Vec<TaskInstance>,
    window: &WindowState,
    scheduler: &S,
    env: &SchedEnv,
) -> HorizonPlan {
    let mut q = queue.clone();
    let mut sched = scheduler.clone();
    let mut w = window.clone();
    let k = window.start;
    let len = window.len;

    let mut tasks: Vec<PlannedTask> = q
        .active()
        .map(|i| PlannedTask { id: i.id, spec: i.spec, release: i.req.max(k), deadline: i.d, work: i.remaining })
        .collect();
    for a in &arrivals {
        tasks.push(PlannedTask { id: a.id, spec: a.spec, release: a.req, deadline: a.d, work: a.remaining });
    }

    let mut pending = arrivals.into_iter().peekable();
    let mut runs = Vec::with_capacity(len as usize);
    let mut x_scan = Vec::with_capacity(len as usize);
    let mut z = Vec::with_capacity(len as usize);
    let mut infeasible_slots = Vec::new();
    for t in k..k + len {
        q.expire(t);
        let mut now = Vec::new();
        while pending.peek().is_some_and(|i| i.req <= t) {
            now.push(pending.next().expect("peeked"));
        }
        q.push_arrivals(t, now);
        let ready = ready_view(&q, t);
        let d = sched.schedule(t, &ready, &mut w, env);
        w.record(&d, &ready);
        drop(ready);
        if d.infeasible {
            infeasible_slots.push(t);
        }
        runs.push(d.run.iter().filter_map(|id| tasks.iter().position(|p| p.id == *id)).collect());
        x_scan.push(d.scan);
        z.push(d.z);
        q.execute(&d.run).expect("scheduler selects buffered instances");
    }
    let n = len.max(1) as f64;
    let f = x_scan.iter().filter(|&&s| s).count() as f64 / n;
    let z_avg = z.iter().sum::<f64>() / n;
    HorizonPlan {
        start: k,
        len,
        tasks,
        runs,
        x_scan,
        z,
        f,
        d_s: env.star.scan.duration,
        p_max: env.star.p_max,
        z_avg,
        infeasible_slots,
    }
}

/// Receding-horizon plan for `[k, k + len)` against projected arrivals.
///
/// Periodic specs are projected exactly and aperiodic specs at their expected rate.
pub fn plan_horizon<S: SlotScheduler + Clone>(
    queue: &TaskQueue,
    window: &WindowState,
    scheduler: &S,
    env: &SchedEnv,
) -> HorizonPlan {
    // Projected ids live far above any generated id.
    let arrivals = crate::workload::project_arrivals(env.specs, window.start, window.len, 1 << 62);
    plan_window(queue, arrivals, window, scheduler, env)
}

/// Window-average [BD] objective of a plan.
pub fn plan_objective(plan: &HorizonPlan, p: &UtilityParams) -> f64 {
    let y = detection_performance(plan.f, plan.d_s, p);
    let n = plan.len.max(1) as f64;
    plan.x_scan.iter().zip(&plan.z).map(|(&s, &z)| slot_utility(y, s, z, p)).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsMode {
    /// λ·r̄·N instance-slots regardless of available work.
    Strict,
    /// Requirement capped by what a work-conserving schedule delivers once
    /// high-priority work and the scan are placed.
    Capped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    Capacity { slot: Slot, resource: usize, used: f64 },
    Power { slot: Slot, used: f64 },
    ScanDuration { slot: Slot, run: u32 },
    Stability { spec: usize, delivered: f64, required: f64 },
    TaskWindow { slot: Slot, task: usize },
}

/// Checks (PS), (PC), (SD) and (TS) on a plan.
pub fn check_plan(plan: &HorizonPlan, specs: &[TaskSpec], scan: &ScanSpec, mode: TsMode) -> Vec<Violation> {
    let mut out = Vec::new();
    let dim = scan.demand.dim();
    let mut work_done = vec![0u32; plan.tasks.len()];
    for (i, run) in plan.runs.iter().enumerate() {
        let t = plan.start + i as Slot;
        let mut used = vec![0.0; dim];
        let mut power = 0.0;
        for &j in run {
            let task = &plan.tasks[j];
            let spec = &specs[task.spec];
            for (u, r) in used.iter_mut().zip(&spec.demand.0) {
                *u += r;
            }
            power += spec.power();
            work_done[j] += 1;
            if t < task.release || t >= task.deadline || work_done[j] > task.work {
                out.push(Violation::TaskWindow { slot: t, task: j });
            }
        }
        if plan.x_scan[i] {
            for (u, r) in used.iter_mut().zip(&scan.demand.0) {
                *u += r;
            }
            power += scan.power();
        }
        for (k, u) in used.iter().enumerate() {
            if *u > 1.0 + 1e-9 {
                out.push(Violation::Capacity { slot: t, resource: k, used: *u });
            }
        }
        if power > plan.p_max + 1e-9 {
            out.push(Violation::Power { slot: t, used: power });
        }
    }

    let mut run = 0u32;
    for (i, &s) in plan.x_scan.iter().chain(core::iter::once(&false)).enumerate() {
        if s {
            run += 1;
        } else {
            if run % plan.d_s.max(1) != 0 {
                out.push(Violation::ScanDuration { slot: plan.start + i as Slot, run });
            }
            run = 0;
        }
    }

    out.extend(stability_violations(plan, specs, scan, mode));
    out
}

/// Instance-slots of spec `j` a work-conserving schedule owes the window: in
/// each slot, the lesser of the instances still pending and the room left by
/// high-priority work and the scan.
fn deliverable(plan: &HorizonPlan, specs: &[TaskSpec], scan: &ScanSpec, j: usize) -> u32 {
    let spec = &specs[j];
    let mut done = vec![0u32; plan.tasks.len()];
    let mut total = 0u32;
    for (i, run) in plan.runs.iter().enumerate().take(plan.len as usize) {
        let t = plan.start + i as Slot;
        let mut packer = Packer::new(spec.demand.dim(), plan.p_max);
        if plan.x_scan.get(i).copied().unwrap_or(false) {
            packer.add(&scan.demand, scan.power());
        }
        for &k in run {
            let other = &specs[plan.tasks[k].spec];
            if plan.tasks[k].spec != j && other.priority == Priority::High {
                packer.add(&other.demand, other.power());
            }
        }
        let pending = plan
            .tasks
            .iter()
            .zip(&done)
            .filter(|(p, &d)| p.spec == j && p.release <= t && t < p.deadline && d < p.work)
            .count() as u32;
        let mut room = 0;
        while room < pending && packer.try_add(&spec.demand, spec.power()) {
            room += 1;
        }
        total += room;
        for &k in run {
            done[k] += 1;
        }
    }
    total
}

fn stability_violations(plan: &HorizonPlan, specs: &[TaskSpec], scan: &ScanSpec, mode: TsMode) -> Vec<Violation> {
    let n = plan.len as f64;
    let mut out = Vec::new();
    for (j, spec) in specs.iter().enumerate() {
        let Some(rate) = spec.stability_requirement() else { continue };
        let delivered = plan.runs.iter().flatten().filter(|&&i| plan.tasks[i].spec == j).count() as f64;
        let mut required = rate * n;
        if mode == TsMode::Capped {
            required = required.min(deliverable(plan, specs, scan, j) as f64);
        }
        if delivered + 1e-9 < required {
            out.push(Violation::Stability { spec: j, delivered, required });
        }
    }
    out
}

/// Candidate-string budget for the exact oracle.
pub const EXACT_LIMIT: u128 = 1 << 24;
/// Longest window the exact oracle accepts.
pub const EXACT_MAX_WINDOW: u32 = 12;

/// Exhaustive [BD] optimum over binary task and scan decisions for a small window.
///
/// Ties go to fewer scan slots, then the lexicographically smallest decision
/// string `(x_scan(t), x_1(t), …, x_J(t))` over `t`.
pub fn exact_schedule(
    tasks: &[PlannedTask],
    specs: &[TaskSpec],
    start: Slot,
    len: u32,
    env: &SchedEnv,
    mode: TsMode,
) -> Result<HorizonPlan, StarError> {
    if len == 0 || len > EXACT_MAX_WINDOW {
        return Err(StarError::TooLarge(u128::MAX));
    }
    let scan = &env.star.scan;
    let d_s = scan.duration;
    let mut size: u128 = 1;
    for t in start..start + len {
        let live = tasks.iter().filter(|p| p.release <= t && t < p.deadline && p.work > 0).count();
        size = size.saturating_mul(1u128 << live.min(100));
    }
    if env.star.scanning {
        size = size.saturating_mul(1u128 << (len / d_s.max(1)).min(100));
    }
    if size > EXACT_LIMIT {
        return Err(StarError::TooLarge(size));
    }

    let mut search = Exact {
        tasks,
        specs,
        env,
        start,
        len,
        mode,
        x_scan: Vec::new(),
        runs: Vec::new(),
        z: Vec::new(),
        work: vec![0; tasks.len()],
        best: None,
    };
    search.dfs(0, 0);
    let Some((_, x_scan, runs, z)) = search.best else { return Err(StarError::Infeasible) };
    let n = len as f64;
    let f = x_scan.iter().filter(|&&s| s).count() as f64 / n;
    let z_avg = z.iter().sum::<f64>() / n;
    Ok(HorizonPlan {
        start,
        len,
        tasks: tasks.to_vec(),
        runs,
        x_scan,
        z,
        f,
        d_s,
        p_max: env.star.p_max,
        z_avg,
        infeasible_slots: Vec::new(),
    })
}

type Incumbent = (f64, Vec<bool>, Vec<Vec<usize>>, Vec<f64>);

struct Exact<'a> {
    tasks: &'a [PlannedTask],
    specs: &'a [TaskSpec],
    env: &'a SchedEnv<'a>,
    start: Slot,
    len: u32,
    mode: TsMode,
    x_scan: Vec<bool>,
    runs: Vec<Vec<usize>>,
    z: Vec<f64>,
    work: Vec<u32>,
    best: Option<Incumbent>,
}

impl Exact<'_> {
    fn dfs(&mut self, i: u32, scan_left: u32) {
        if i == self.len {
            self.leaf();
            return;
        }
        let t = self.start + i;
        let scan = &self.env.star.scan;
        let d_s = scan.duration;
        let scan_options: &[bool] = if scan_left > 0 {
            &[true]
        } else if self.env.star.scanning && i + d_s <= self.len {
            &[false, true]
        } else {
            &[false]
        };
        let live: Vec<usize> = (0..self.tasks.len())
            .filter(|&j| {
                let p = &self.tasks[j];
                p.release <= t && t < p.deadline && self.work[j] < p.work
            })
            .collect();
        for &s in scan_options {
            let next_left = if scan_left > 0 { scan_left - 1 } else if s { d_s - 1 } else { 0 };
            let l = live.len();
            for mask in 0u64..(1u64 << l) {
                // Bit l−1−b selects live[b] so that the first task is most significant.
                let chosen: Vec<usize> = (0..l).filter(|&b| mask >> (l - 1 - b) & 1 == 1).map(|b| live[b]).collect();
                let mut packer = Packer::new(scan.demand.dim(), self.env.star.p_max);
                if s && !packer.try_add(&scan.demand, scan.power()) {
                    continue;
                }
                let fits = chosen.iter().all(|&j| {
                    let spec = &self.specs[self.tasks[j].spec];
                    packer.try_add(&spec.demand, spec.power())
                });
                if !fits {
                    continue;
                }
                for &j in &chosen {
                    self.work[j] += 1;
                }
                self.x_scan.push(s);
                self.z.push(packer.z());
                self.runs.push(chosen.clone());
                self.dfs(i + 1, next_left);
                self.runs.pop();
                self.z.pop();
                self.x_scan.pop();
                for &j in &chosen {
                    self.work[j] -= 1;
                }
            }
        }
    }

    fn leaf(&mut self) {
        let n = self.len as f64;
        let scans = self.x_scan.iter().filter(|&&s| s).count();
        let y = detection_performance(scans as f64 / n, self.env.star.scan.duration, self.env.utility);
        let value =
            self.x_scan.iter().zip(&self.z).map(|(&s, &z)| slot_utility(y, s, z, self.env.utility)).sum::<f64>() / n;
        let better = match &self.best {
            None => true,
            Some((v, xs, _, _)) => {
                let best_scans = xs.iter().filter(|&&s| s).count();
                value > v + 1e-12 || (value >= v - 1e-12 && scans < best_scans)
            }
        };
        if !better {
            return;
        }
        // Only candidates that would replace the incumbent pay for the stability check.
        let plan = HorizonPlan {
            start: self.start,
            len: self.len,
            tasks: self.tasks.to_vec(),
            runs: self.runs.clone(),
            x_scan: self.x_scan.clone(),
            z: self.z.clone(),
            f: scans as f64 / n,
            d_s: self.env.star.scan.duration,
            p_max: self.env.star.p_max,
            z_avg: 0.0,
            infeasible_slots: Vec::new(),
        };
        if stability_violations(&plan, self.specs, &self.env.star.scan, self.mode).is_empty() {
            self.best = Some((value, plan.x_scan, plan.runs, plan.z));
        }
    }
}

/// Aperiodic rate of a spec, zero for periodic ones.
pub fn arrival_rate(spec: &TaskSpec) -> f64 {
    match spec.arrival {
        ArrivalPattern::Aperiodic { rate } => rate,
        ArrivalPattern::Periodic { interval } => 1.0 / interval.max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{DeadlineKind, Nature};

    fn scan_spec() -> ScanSpec {
        ScanSpec { demand: ResourceVector(vec![0.15, 0.05]), power_weight: None, duration: 5 }
    }

    fn config() -> StarConfig {
        StarConfig { scan: scan_spec(), p_max: 1.0, marginal: MarginalRule::Window, scanning: true }
    }

    fn spec(id: u32, priority: Priority, demand: [f64; 2], p: u32, dl: u32, rate: f64) -> TaskSpec {
        TaskSpec {
            id,
            name: Default::default(),
            nature: Nature::Mission,
            priority,
            arrival: ArrivalPattern::Aperiodic { rate },
            demand: ResourceVector(demand.to_vec()),
            power_weight: None,
            processing: p,
            relative_deadline: dl,
            mean_demand: None,
            deadline: DeadlineKind::Soft,
            value: 1.0,
        }
    }

    #[test]
    fn detection_curve_values() {
        let p = UtilityParams::default();
        assert!((detection_performance(0.1, 5, &p) - 0.5).abs() < 1e-15);
        assert!((detection_performance(0.2, 5, &p) - 0.562_176_500_885_798).abs() < 1e-12);
        assert!(detection_performance(1.0, 1_000, &p) > 1.0 - 1e-12);
    }

    #[test]
    fn slot_utility_values() {
        let p = UtilityParams::default();
        assert!((slot_utility(0.5, true, 0.65, &p) - 1.825).abs() < 1e-12);
        assert!((slot_utility(0.7, false, 1.0, &p) - 4.9).abs() < 1e-12);
        assert_eq!(slot_utility(0.0, true, 0.3, &p), -0.5);
    }

    #[test]
    fn empty_queue_starts_scan() {
        let specs = vec![];
        let u = UtilityParams::default();
        let c = config();
        let env = SchedEnv { specs: &specs, utility: &u, star: &c };
        let mut w = WindowState::new(0, 10, 0);
        let d = StarScheduler::new().schedule(0, &[], &mut w, &env);
        assert!(d.scan && d.scan_started && d.run.is_empty());
        assert!((d.z - 0.85).abs() < 1e-12);
    }

    #[test]
    fn relay_first_routine_deferred() {
        let relay = spec(2, Priority::High, [0.2, 0.1], 5, 15, 0.1);
        let routine = spec(1, Priority::Low, [0.05, 0.15], 10, 50, 0.3);
        let specs = vec![routine, relay];
        let u = UtilityParams::default();
        let mut c = config();
        c.scanning = false;
        let env = SchedEnv { specs: &specs, utility: &u, star: &c };
        let mut ready = Vec::new();
        for i in 0..8 {
            ready.push(ReadyTask {
                id: InstanceId(i),
                spec_index: 0,
                spec: &specs[0],
                release: 0,
                deadline: 40,
                remaining: 5,
                running: true,
            });
        }
        ready.push(ReadyTask { id: InstanceId(99), spec_index: 1, spec: &specs[1], release: 0, deadline: 5, remaining: 5, running: false });
        let mut w = WindowState::new(0, 10, 2);
        let d = StarScheduler::new().schedule(0, &ready, &mut w, &env);
        assert!(d.run.contains(&InstanceId(99)));
        assert_eq!(d.run.len(), 7);
        assert!(!d.infeasible);
    }

    #[test]
    fn scan_in_flight_coexists_with_relay() {
        let relay = spec(2, Priority::High, [0.2, 0.1], 5, 15, 0.1);
        let specs = vec![relay];
        let u = UtilityParams::default();
        let c = config();
        let env = SchedEnv { specs: &specs, utility: &u, star: &c };
        let mut w = WindowState::new(0, 10, 1);
        w.scan_left = 3;
        w.scan_slots = 5;
        let ready = [ReadyTask { id: InstanceId(1), spec_index: 0, spec: &specs[0], release: 0, deadline: 15, remaining: 5, running: false }];
        let d = StarScheduler::new().schedule(2, &ready, &mut w, &env);
        assert!(d.scan && !d.scan_started);
        assert_eq!(d.run, [InstanceId(1)]);
        assert!((d.used[0] - 0.35).abs() < 1e-12 && (d.used[1] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn quiet_plan_is_idle() {
        let specs: Vec<TaskSpec> = vec![];
        let u = UtilityParams::default();
        let mut c = config();
        c.scanning = false;
        let env = SchedEnv { specs: &specs, utility: &u, star: &c };
        let q = TaskQueue::new(specs.clone());
        let plan = plan_horizon(&q, &WindowState::new(0, 20, 0), &StarScheduler::new(), &env);
        assert!(plan.z.iter().all(|&z| z == 1.0));
        assert_eq!(plan.f, 0.0);
    }

    #[test]
    fn window_of_scan_length_is_full() {
        let specs: Vec<TaskSpec> = vec![];
        let u = UtilityParams::default();
        let c = config();
        let env = SchedEnv { specs: &specs, utility: &u, star: &c };
        let q = TaskQueue::new(specs.clone());
        let plan = plan_horizon(&q, &WindowState::new(0, 5, 0), &StarScheduler::new(), &env);
        assert_eq!(plan.f, 1.0);
        assert!(check_plan(&plan, &specs, &c.scan, TsMode::Strict).is_empty());
    }

    #[test]
    fn exact_packs_scans_without_tasks() {
        let specs: Vec<TaskSpec> = vec![];
        let u = UtilityParams::default();
        let c = config();
        let env = SchedEnv { specs: &specs, utility: &u, star: &c };
        let plan = exact_schedule(&[], &specs, 0, 10, &env, TsMode::Strict).unwrap();
        assert_eq!(plan.f, 1.0);
        // Oracle: objective for each SD-feasible scan count.
        let values: Vec<f64> = (0..=2)
            .map(|s| {
                let f = (5 * s) as f64 / 10.0;
                let y = detection_performance(f, 5, &u);
                let busy = 5 * s;
                (busy as f64 * slot_utility(y, true, 0.85, &u) + (10 - busy) as f64 * slot_utility(y, false, 1.0, &u)) / 10.0
            })
            .collect();
        assert!(values[2] > values[1] && values[1] > values[0]);
        assert!((plan_objective(&plan, &u) - values[2]).abs() < 1e-12);
    }

    #[test]
    fn exact_reports_unsatisfiable_stability() {
        let mut s = spec(1, Priority::Low, [0.05, 0.15], 3, 10, 0.5);
        s.mean_demand = Some(3.0);
        let specs = vec![s];
        let u = UtilityParams::default();
        let c = config();
        let env = SchedEnv { specs: &specs, utility: &u, star: &c };
        let tasks = [PlannedTask { id: InstanceId(0), spec: 0, release: 0, deadline: 10, work: 3 }];
        assert_eq!(exact_schedule(&tasks, &specs, 0, 6, &env, TsMode::Strict), Err(StarError::Infeasible));
    }

    #[test]
    fn exact_rejects_large_instances() {
        let specs: Vec<TaskSpec> = vec![];
        let u = UtilityParams::default();
        let c = config();
        let env = SchedEnv { specs: &specs, utility: &u, star: &c };
        assert!(matches!(exact_schedule(&[], &specs, 0, 13, &env, TsMode::Strict), Err(StarError::TooLarge(_))));
    }
}
