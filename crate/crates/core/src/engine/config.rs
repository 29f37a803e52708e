//! Scenario configuration with the reference case-study defaults.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attacker::AttackerParams;
use crate::channel::{ChannelParams, PassGeometry};
use crate::persuasion::DelayRamp;
use crate::star::{MarginalRule, ScanSpec, StarConfig, UtilityParams};
use crate::workload::{ArrivalPattern, DeadlineKind, Nature, Priority, ResourceVector, Slot, TaskSpec};

use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Fcfs,
    Sp,
    Star,
    StarStaticDeception,
    Stardis,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::Fcfs, PolicyKind::Sp, PolicyKind::Star, PolicyKind::StarStaticDeception, PolicyKind::Stardis];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Fcfs => "fcfs",
            PolicyKind::Sp => "sp",
            PolicyKind::Star => "star",
            PolicyKind::StarStaticDeception => "star_static_deception",
            PolicyKind::Stardis => "stardis",
        }
    }

    /// Scheduled by the greedy, and so bound by the stability constraint.
    pub fn star_scheduled(self) -> bool {
        !matches!(self, PolicyKind::Fcfs | PolicyKind::Sp)
    }

    pub fn deceptive(self) -> bool {
        matches!(self, PolicyKind::StarStaticDeception | PolicyKind::Stardis)
    }
}

impl core::str::FromStr for PolicyKind {
    type Err = EngineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or(EngineError::Config(alloc::format!("unknown policy '{s}'")))
    }
}

/// How the baselines account for heterogeneous resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Packing {
    /// Per-resource capacity check.
    Vector,
    /// Each item charged its largest component against one shared pool.
    #[default]
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerMode {
    /// Attack iff the believed probability of an active IDS is below the threshold.
    #[default]
    Threshold,
    /// Best response to the believed per-slot payoff over the rest of the window.
    Dp,
    /// No attacker.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub horizon: Slot,
    /// Receding-horizon window, in slots.
    pub window: u32,
    pub slot_ms: f64,
    #[serde(default = "one")]
    pub p_max: f64,
    #[serde(default = "default_resources")]
    pub resources: Vec<String>,
    #[serde(default = "default_policy")]
    pub policy: PolicyKind,
    /// Half-open seed range used when none is given on the command line.
    #[serde(default = "default_seeds")]
    pub seeds: [u64; 2],
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_resources() -> Vec<String> {
    vec!["cpu".into(), "fpga".into()]
}
fn default_policy() -> PolicyKind {
    PolicyKind::Stardis
}
fn default_seeds() -> [u64; 2] {
    [0, 20]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub demand: ResourceVector,
    #[serde(default)]
    pub power_weight: Option<f64>,
    pub duration: u32,
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub marginal: MarginalRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSection {
    /// Weight of a failed instance's value relative to a completed one's.
    pub failure_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    #[serde(default)]
    pub packing: Packing,
}

/// Forces the reception indicator over `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErasureOverride {
    pub start: Slot,
    pub end: Slot,
    pub received: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub b0: f64,
    pub m: f64,
    pub omega: f64,
    pub threshold_db: f64,
    pub proc_delay_ms: f64,
    #[serde(default)]
    pub overrides: Vec<ErasureOverride>,
}

impl ChannelSection {
    pub fn forced(&self, t: Slot) -> Option<bool> {
        self.overrides.iter().rev().find(|o| o.start <= t && t < o.end).map(|o| o.received)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerSection {
    #[serde(default)]
    pub mode: AttackerMode,
    pub reward: f64,
    pub base_cost: f64,
    pub intensity_cost: f64,
    pub memory: f64,
    pub detection_penalty: f64,
    #[serde(default = "default_grid")]
    pub a_grid: usize,
    #[serde(default = "default_exact")]
    pub exact_limit: usize,
}

fn default_grid() -> usize {
    512
}
fn default_exact() -> usize {
    24
}

impl AttackerSection {
    pub fn params(&self) -> AttackerParams {
        AttackerParams {
            reward: self.reward,
            base_cost: self.base_cost,
            intensity_cost: self.intensity_cost,
            memory: self.memory,
            detection_penalty: self.detection_penalty,
            a_grid: self.a_grid,
            exact_limit: self.exact_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeceptionSection {
    pub z_bins: usize,
    /// Per-slot credibility budget C in nats.
    pub credibility: f64,
    /// Prior probability that the IDS is active.
    pub prior_active: f64,
    /// Attack threshold on the believed probability of an active IDS.
    pub threshold: f64,
    #[serde(default)]
    pub signals: Option<usize>,
    #[serde(default)]
    pub resolution: Option<u32>,
    pub budget_step: f64,
    /// Slots covered by one budget allocation.
    pub prediction_slots: u32,
    pub max_delay_ms: f64,
    pub ramp: DelayRamp,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "yes")]
    pub traces: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub tasks: Vec<TaskSpec>,
    pub scan: ScanSection,
    pub utility: UtilityParams,
    pub mission: MissionSection,
    #[serde(default)]
    pub baselines: BaselineSection,
    pub channel: ChannelSection,
    pub geometry: PassGeometry,
    pub attacker: AttackerSection,
    pub deception: DeceptionSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Routine payload processing: FPGA-heavy, preemptible, low priority.
pub fn routine_spec() -> TaskSpec {
    TaskSpec {
        id: 1,
        name: "routine".into(),
        nature: Nature::Mission,
        priority: Priority::Low,
        arrival: ArrivalPattern::Aperiodic { rate: 0.3 },
        demand: ResourceVector(vec![0.05, 0.15]),
        power_weight: None,
        processing: 17,
        relative_deadline: 50,
        mean_demand: None,
        deadline: DeadlineKind::Soft,
        value: 5.0,
    }
}

/// Relay traffic: CPU-heavy, high priority with a firm deadline.
pub fn relay_spec() -> TaskSpec {
    TaskSpec {
        id: 2,
        name: "relay".into(),
        nature: Nature::Mission,
        priority: Priority::High,
        arrival: ArrivalPattern::Periodic { interval: 30 },
        demand: ResourceVector(vec![0.20, 0.10]),
        power_weight: None,
        processing: 5,
        relative_deadline: 15,
        mean_demand: None,
        deadline: DeadlineKind::Firm,
        value: 10.0,
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let horizon = 2000;
        ScenarioConfig {
            scenario: ScenarioSection {
                horizon,
                window: 20,
                slot_ms: 100.0,
                p_max: 1.0,
                resources: default_resources(),
                policy: PolicyKind::Stardis,
                seeds: default_seeds(),
            },
            tasks: vec![routine_spec(), relay_spec()],
            scan: ScanSection {
                demand: ResourceVector(vec![0.15, 0.05]),
                power_weight: None,
                duration: 5,
                enabled: true,
                marginal: MarginalRule::Window,
            },
            utility: UtilityParams::default(),
            mission: MissionSection { failure_penalty: 2.0 },
            baselines: BaselineSection { packing: Packing::Scalar },
            channel: ChannelSection {
                b0: 0.158,
                m: 19.4,
                omega: 1.29,
                threshold_db: 5.0,
                proc_delay_ms: 1.0,
                overrides: Vec::new(),
            },
            geometry: PassGeometry {
                min_range_km: 550.0,
                max_range_km: 2000.0,
                pass_slots: horizon,
                center_slot: horizon as f64 / 2.0,
                episode_slots: horizon,
                peak_snr_db: Some(10.0),
                path_loss_exponent: 2.0,
                link: Default::default(),
            },
            attacker: AttackerSection {
                mode: AttackerMode::Threshold,
                reward: 10.0,
                base_cost: 0.1,
                intensity_cost: 0.5,
                memory: 0.1,
                detection_penalty: 4.0,
                a_grid: 512,
                exact_limit: 24,
            },
            deception: DeceptionSection {
                z_bins: 2,
                credibility: 0.2,
                prior_active: 0.5,
                threshold: 0.55,
                signals: None,
                resolution: None,
                budget_step: 0.005,
                prediction_slots: 200,
                max_delay_ms: 400.0,
                ramp: DelayRamp { snr_low_db: 0.0, snr_high_db: 10.0 },
            },
            output: OutputSection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn dim(&self) -> usize {
        self.scenario.resources.len()
    }

    pub fn channel_params(&self) -> Result<ChannelParams, EngineError> {
        let c = &self.channel;
        ChannelParams::new(c.b0, c.m, c.omega, c.threshold_db).map_err(|e| EngineError::Config(alloc::format!("channel: {e}")))
    }

    pub fn scan_spec(&self) -> ScanSpec {
        ScanSpec { demand: self.scan.demand.clone(), power_weight: self.scan.power_weight, duration: self.scan.duration }
    }

    pub fn star_config(&self) -> StarConfig {
        StarConfig {
            scan: self.scan_spec(),
            p_max: self.scenario.p_max,
            marginal: self.scan.marginal,
            scanning: self.scan.enabled,
        }
    }

    /// Prior over quantized states `(scan, z-bin)`.
    pub fn state_prior(&self) -> Vec<f64> {
        let bins = self.deception.z_bins;
        let pa = self.deception.prior_active;
        (0..2 * bins).map(|i| if i < bins { (1.0 - pa) / bins as f64 } else { pa / bins as f64 }).collect()
    }

    /// Checks every module-level invariant; nothing runs on an invalid config.
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |s: &str| Err(EngineError::Config(s.into()));
        let s = &self.scenario;
        if s.horizon == 0 || s.window == 0 {
            return bad("horizon and window must be positive");
        }
        if !(s.slot_ms > 0.0 && s.slot_ms.is_finite()) {
            return bad("slot_ms must be positive");
        }
        if s.resources.is_empty() {
            return bad("at least one resource type is required");
        }
        if s.seeds[1] <= s.seeds[0] {
            return bad("seed range must be non-empty");
        }
        let dim = self.dim();
        for spec in &self.tasks {
            spec.validate(dim).map_err(|e| EngineError::Config(alloc::format!("task: {e}")))?;
        }
        let mut ids: Vec<u32> = self.tasks.iter().map(|t| t.id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.tasks.len() {
            return bad("task ids must be unique");
        }
        self.star_config().validate(dim).map_err(|e| EngineError::Config(alloc::format!("scan: {e}")))?;
        if self.scan.duration > s.window && self.scan.enabled {
            return bad("a scan must fit inside one window");
        }
        self.utility.validate().map_err(|e| EngineError::Config(alloc::format!("utility: {e}")))?;
        if !(self.mission.failure_penalty >= 0.0) {
            return bad("failure penalty must be non-negative");
        }
        self.channel_params()?;
        if !(self.channel.proc_delay_ms >= 0.0) {
            return bad("processing delay must be non-negative");
        }
        if self.channel.overrides.iter().any(|o| o.end < o.start) {
            return bad("override ranges must be ordered");
        }
        self.geometry.validate().map_err(|e| EngineError::Config(alloc::format!("geometry: {e}")))?;
        self.attacker.params().validate().map_err(|e| EngineError::Config(alloc::format!("attacker: {e}")))?;
        let d = &self.deception;
        if d.z_bins == 0 {
            return bad("z_bins must be positive");
        }
        if !(d.credibility >= 0.0) {
            return bad("credibility budget must be non-negative");
        }
        if !(d.prior_active > 0.0 && d.prior_active < 1.0) {
            return bad("prior_active must lie in (0, 1)");
        }
        if !(d.threshold > 0.0 && d.threshold < 1.0) {
            return bad("threshold must lie in (0, 1)");
        }
        if d.signals.is_some_and(|m| m == 0) {
            return bad("signal count must be positive");
        }
        if !(d.budget_step > 0.0) || d.prediction_slots == 0 {
            return bad("budget step and prediction length must be positive");
        }
        if !(d.max_delay_ms >= 0.0) {
            return bad("max delay must be non-negative");
        }
        Ok(())
    }
}
