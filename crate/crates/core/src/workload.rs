//! Task model, arrival generation, admission control and per-slot idle capacity.

use alloc::vec::Vec;
use alloc::string::String;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Discrete slot index.
pub type Slot = u32;

/// RNG stream reserved for arrival generation.
pub const ARRIVAL_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("resource vector has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("task spec {id}: {reason}")]
    InvalidSpec { id: u32, reason: &'static str },
    #[error("contract violation: {0}")]
    Contract(&'static str),
    #[error("illegal state transition {from:?} -> {to:?}")]
    Transition { from: InstanceState, to: InstanceState },
}

/// Normalized usage per resource type, each entry in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceVector(pub Vec<f64>);

impl ResourceVector {
    pub fn zeros(dim: usize) -> Self {
        ResourceVector(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().sum::<f64>() / self.0.len() as f64
        }
    }

    pub fn add_assign(&mut self, other: &ResourceVector) -> Result<(), WorkloadError> {
        self.check_dim(other.dim())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        Ok(())
    }

    /// True when `self + other` stays within unit capacity on every type.
    pub fn fits_with(&self, other: &ResourceVector) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a + b <= 1.0 + 1e-12)
    }

    fn check_dim(&self, got: usize) -> Result<(), WorkloadError> {
        if got != self.dim() {
            return Err(WorkloadError::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nature {
    Mission,
    Security,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalPattern {
    Periodic { interval: u32 },
    Aperiodic { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlineKind {
    Soft,
    Firm,
}

fn default_value() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: u32,
    #[serde(default)]
    pub name: String,
    pub nature: Nature,
    pub priority: Priority,
    pub arrival: ArrivalPattern,
    pub demand: ResourceVector,
    /// Normalized power draw; defaults to the mean resource demand.
    #[serde(default)]
    pub power_weight: Option<f64>,
    pub processing: u32,
    pub relative_deadline: u32,
    /// Activation factor r̄ for the task-stability constraint; defaults to `processing`.
    #[serde(default)]
    pub mean_demand: Option<f64>,
    pub deadline: DeadlineKind,
    /// Mission value credited on completion and charged on failure.
    #[serde(default = "default_value")]
    pub value: f64,
}

impl TaskSpec {
    pub fn power(&self) -> f64 {
        self.power_weight.unwrap_or_else(|| self.demand.mean())
    }

    pub fn activation_factor(&self) -> f64 {
        self.mean_demand.unwrap_or(self.processing as f64)
    }

    /// Required time-average activation λ·r̄ for aperiodic mission tasks, if any.
    pub fn stability_requirement(&self) -> Option<f64> {
        match (self.nature, self.arrival) {
            (Nature::Mission, ArrivalPattern::Aperiodic { rate }) => Some(rate * self.activation_factor()),
            _ => None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), WorkloadError> {
        let bad = |reason| Err(WorkloadError::InvalidSpec { id: self.id, reason });
        if self.demand.dim() != dim {
            return Err(WorkloadError::DimensionMismatch { expected: dim, got: self.demand.dim() });
        }
        if self.demand.0.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("demand entries must lie in [0, 1]");
        }
        if self.processing < 1 {
            return bad("processing must be at least one slot");
        }
        if self.relative_deadline < self.processing {
            return bad("relative deadline shorter than processing time");
        }
        match self.arrival {
            ArrivalPattern::Periodic { interval } if interval < 1 => return bad("periodic interval must be >= 1"),
            ArrivalPattern::Aperiodic { rate } if !(rate > 0.0 && rate.is_finite()) => {
                return bad("aperiodic rate must be positive and finite")
            }
            _ => {}
        }
        if self.power() < 0.0 || !self.power().is_finite() {
            return bad("power weight must be non-negative");
        }
        if self.activation_factor() < 0.0 || !self.value.is_finite() || self.value < 0.0 {
            return bad("mean demand and value must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceState {
    Queued,
    Admitted,
    Running,
    Preempted,
    Completed,
    Dropped,
    Missed,
}

impl InstanceState {
    pub fn is_terminal(self) -> bool {
        matches!(self, InstanceState::Completed | InstanceState::Dropped | InstanceState::Missed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: InstanceId,
    /// Index into the scenario's spec list.
    pub spec: usize,
    pub req: Slot,
    pub a: Slot,
    pub d: Slot,
    pub remaining: u32,
    pub state: InstanceState,
}

impl TaskInstance {
    pub fn new(id: InstanceId, spec_index: usize, spec: &TaskSpec, arrival: Slot) -> Self {
        TaskInstance {
            id,
            spec: spec_index,
            req: arrival,
            a: arrival,
            d: arrival + spec.relative_deadline,
            remaining: spec.processing,
            state: InstanceState::Queued,
        }
    }

    pub fn transition(&mut self, to: InstanceState) -> Result<(), WorkloadError> {
        use InstanceState::*;
        let ok = matches!(
            (self.state, to),
            (Queued, Admitted)
                | (Queued, Dropped)
                | (Admitted, Dropped)
                | (Admitted, Running)
                | (Running, Running)
                | (Running, Preempted)
                | (Running, Completed)
                | (Preempted, Admitted)
                | (Admitted, Missed)
                | (Running, Missed)
                | (Preempted, Missed)
        );
        if !ok {
            return Err(WorkloadError::Transition { from: self.state, to });
        }
        self.state = to;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admitted,
    Dropped,
}

/// Schedulability test at slot `t`: admitted iff `d − t ≥ remaining`.
pub fn admit(inst: &mut TaskInstance, t: Slot) -> Result<Admission, WorkloadError> {
    if inst.state != InstanceState::Queued {
        return Err(WorkloadError::Contract("admit called on a non-queued instance"));
    }
    if inst.remaining == 0 {
        return Err(WorkloadError::Contract("queued instance with no remaining work"));
    }
    if inst.d >= t && inst.d - t >= inst.remaining {
        inst.transition(InstanceState::Admitted)?;
        Ok(Admission::Admitted)
    } else {
        inst.transition(InstanceState::Dropped)?;
        Ok(Admission::Dropped)
    }
}

/// Stochastic arrival stream over `[0, horizon)`, ids assigned in output order.
pub fn generate_arrivals(specs: &[TaskSpec], horizon: Slot, seed: u64) -> Vec<TaskInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ARRIVAL_STREAM);
    let mut raw: Vec<(Slot, usize)> = Vec::new();
    for (idx, spec) in specs.iter().enumerate() {
        match spec.arrival {
            ArrivalPattern::Periodic { interval } => {
                let step = interval.max(1);
                raw.extend((0..horizon).step_by(step as usize).map(|t| (t, idx)));
            }
            ArrivalPattern::Aperiodic { rate } => {
                if !(rate > 0.0) {
                    continue;
                }
                let Ok(dist) = Poisson::new(rate) else { continue };
                for t in 0..horizon {
                    let n: f64 = dist.sample(&mut rng);
                    for _ in 0..n as u64 {
                        raw.push((t, idx));
                    }
                }
            }
        }
    }
    into_instances(specs, raw, 0)
}

/// Deterministic arrival projection over `[start, start + len)` at expected rates.
///
/// Aperiodic specs emit `floor((s+1)λ) − floor(sλ)` instances at slot `s`.
pub fn project_arrivals(specs: &[TaskSpec], start: Slot, len: u32, first_id: u64) -> Vec<TaskInstance> {
    let mut raw = Vec::new();
    for (idx, spec) in specs.iter().enumerate() {
        for s in start..start + len {
            let n = match spec.arrival {
                ArrivalPattern::Periodic { interval } => u64::from(s % interval.max(1) == 0),
                ArrivalPattern::Aperiodic { rate } => {
                    let hi = libm::floor((s as f64 + 1.0) * rate);
                    let lo = libm::floor(s as f64 * rate);
                    (hi - lo).max(0.0) as u64
                }
            };
            for _ in 0..n {
                raw.push((s, idx));
            }
        }
    }
    into_instances(specs, raw, first_id)
}

fn into_instances(specs: &[TaskSpec], mut raw: Vec<(Slot, usize)>, first_id: u64) -> Vec<TaskInstance> {
    raw.sort_by_key(|&(t, idx)| (t, specs[idx].priority, specs[idx].id));
    raw.into_iter()
        .enumerate()
        .map(|(n, (t, idx))| TaskInstance::new(InstanceId(first_id + n as u64), idx, &specs[idx], t))
        .collect()
}

/// Idle capacity of a slot: `min_k (1 − Σ r_jk − r_sk·x_scan)`.
pub fn idle_capacity(
    active_demands: &[&ResourceVector],
    scan_active: bool,
    scan_demand: &ResourceVector,
) -> Result<f64, WorkloadError> {
    let mut used = ResourceVector::zeros(scan_demand.dim());
    for d in active_demands {
        used.add_assign(d)?;
    }
    if scan_active {
        used.add_assign(scan_demand)?;
    }
    Ok(used.0.iter().map(|u| 1.0 - u).fold(f64::INFINITY, f64::min).min(1.0))
}

/// Lifecycle totals over one episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Accounting {
    pub generated: u64,
    pub completed: u64,
    pub dropped: u64,
    pub missed: u64,
}

/// Admitted-instance buffer plus the full lifecycle record for an episode.
#[derive(Debug, Clone)]
pub struct TaskQueue {
    pub specs: Vec<TaskSpec>,
    instances: Vec<TaskInstance>,
    active: Vec<usize>,
    per_spec: Vec<Accounting>,
}

impl TaskQueue {
    pub fn new(specs: Vec<TaskSpec>) -> Self {
        let n = specs.len();
        TaskQueue { specs, instances: Vec::new(), active: Vec::new(), per_spec: alloc::vec![Accounting::default(); n] }
    }

    /// Registers new arrivals at slot `t` and runs admission on each.
    pub fn push_arrivals(&mut self, t: Slot, arrivals: impl IntoIterator<Item = TaskInstance>) {
        for mut inst in arrivals {
            self.per_spec[inst.spec].generated += 1;
            // Remaining is at least one for every generated instance.
            match admit(&mut inst, t).expect("fresh instance is queued") {
                Admission::Admitted => self.active.push(self.instances.len()),
                Admission::Dropped => self.per_spec[inst.spec].dropped += 1,
            }
            self.instances.push(inst);
        }
    }

    /// Marks every active instance whose deadline has passed (`t ≥ d`) as missed.
    pub fn expire(&mut self, t: Slot) {
        let instances = &mut self.instances;
        let per_spec = &mut self.per_spec;
        self.active.retain(|&i| {
            let inst = &mut instances[i];
            if t >= inst.d && inst.remaining > 0 {
                if inst.state == InstanceState::Running {
                    inst.state = InstanceState::Preempted;
                }
                inst.transition(InstanceState::Missed).expect("active instance can miss");
                per_spec[inst.spec].missed += 1;
                false
            } else {
                true
            }
        });
    }

    /// Active instances in arrival order.
    pub fn active(&self) -> impl Iterator<Item = &TaskInstance> {
        self.active.iter().map(move |&i| &self.instances[i])
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    /// Executes one slot of work for every instance in `run`; others are preempted if they were running.
    pub fn execute(&mut self, run: &[InstanceId]) -> Result<(), WorkloadError> {
        let known = run.iter().all(|id| self.active.iter().any(|&i| self.instances[i].id == *id));
        if !known {
            return Err(WorkloadError::Contract("schedule names instances outside the buffer"));
        }
        let mut finished = Vec::new();
        for &i in &self.active {
            let inst = &mut self.instances[i];
            if run.contains(&inst.id) {
                if inst.state == InstanceState::Admitted || inst.state == InstanceState::Running {
                    inst.transition(InstanceState::Running)?;
                } else {
                    return Err(WorkloadError::Contract("scheduled instance is not runnable"));
                }
                inst.remaining -= 1;
                if inst.remaining == 0 {
                    inst.transition(InstanceState::Completed)?;
                    self.per_spec[inst.spec].completed += 1;
                    finished.push(i);
                }
            } else if inst.state == InstanceState::Running {
                inst.transition(InstanceState::Preempted)?;
                inst.transition(InstanceState::Admitted)?;
            }
        }
        self.active.retain(|i| !finished.contains(i));
        Ok(())
    }

    pub fn instance(&self, id: InstanceId) -> Option<&TaskInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn accounting(&self) -> &[Accounting] {
        &self.per_spec
    }

    /// Totals across all specs, with instances still in the buffer as residual.
    pub fn totals(&self) -> (Accounting, u64) {
        let mut acc = Accounting::default();
        for a in &self.per_spec {
            acc.generated += a.generated;
            acc.completed += a.completed;
            acc.dropped += a.dropped;
            acc.missed += a.missed;
        }
        (acc, self.active.len() as u64)
    }

    pub fn residual_for(&self, spec: usize) -> u64 {
        self.active().filter(|i| i.spec == spec).count() as u64
    }
}
