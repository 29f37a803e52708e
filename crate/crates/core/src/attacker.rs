//! The intercepting adversary: soft-cost intensity dynamics, realized
//! utility, best response by dynamic programming, and belief updates.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttackerError {
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("horizon must be at least one slot")]
    EmptyHorizon,
    #[error("invalid attacker parameters: {0}")]
    InvalidParams(&'static str),
    #[error("signal {0} has zero probability under the prior and policy")]
    ZeroProbabilitySignal(usize),
    #[error("belief and policy dimensions differ")]
    Shape,
}

/// Attacker weights. `reward`, `base_cost` and `intensity_cost` are the
/// attacker's α, β and k, renamed to keep them apart from the defender's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerParams {
    pub reward: f64,
    pub base_cost: f64,
    pub intensity_cost: f64,
    pub memory: f64,
    /// Extra loss for an attack launched while a scan is running.
    #[serde(default = "default_penalty")]
    pub detection_penalty: f64,
    #[serde(default = "default_grid")]
    pub a_grid: usize,
    /// Longest horizon solved with exact intensity tracking.
    #[serde(default = "default_exact")]
    pub exact_limit: usize,
}

fn default_penalty() -> f64 {
    4.0
}
fn default_grid() -> usize {
    512
}
fn default_exact() -> usize {
    24
}

impl Default for AttackerParams {
    fn default() -> Self {
        AttackerParams {
            reward: 10.0,
            base_cost: 0.1,
            intensity_cost: 0.5,
            memory: 0.1,
            detection_penalty: default_penalty(),
            a_grid: default_grid(),
            exact_limit: default_exact(),
        }
    }
}

impl AttackerParams {
    pub fn validate(&self) -> Result<(), AttackerError> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.reward) || !pos(self.base_cost) || !pos(self.intensity_cost) {
            return Err(AttackerError::InvalidParams("reward and costs must be positive"));
        }
        if !(self.memory > 0.0 && self.memory <= 1.0) {
            return Err(AttackerError::InvalidParams("memory factor must lie in (0, 1]"));
        }
        if !(self.detection_penalty >= 0.0 && self.detection_penalty.is_finite()) {
            return Err(AttackerError::InvalidParams("detection penalty must be non-negative"));
        }
        if self.a_grid < 2 {
            return Err(AttackerError::InvalidParams("intensity grid needs at least two points"));
        }
        Ok(())
    }

    /// Cost of attacking with prior intensity `a_prev`.
    pub fn attack_cost(&self, a_prev: f64) -> f64 {
        self.base_cost * (1.0 + self.intensity_cost * a_prev)
    }
}

/// `a = (1 − η)·a_prev + η·x`.
pub fn intensity_update(a_prev: f64, attack: bool, eta: f64) -> f64 {
    (1.0 - eta) * a_prev + if attack { eta } else { 0.0 }
}

/// Time-averaged utility with the reward gated by reception and the cost ungated.
pub fn realized_utility(x_att: &[bool], z: &[f64], xi: &[bool], p: &AttackerParams) -> Result<f64, AttackerError> {
    if x_att.len() != z.len() {
        return Err(AttackerError::LengthMismatch(x_att.len(), z.len()));
    }
    if x_att.len() != xi.len() {
        return Err(AttackerError::LengthMismatch(x_att.len(), xi.len()));
    }
    if x_att.is_empty() {
        return Ok(0.0);
    }
    let mut a = 0.0;
    let mut total = 0.0;
    for ((&x, &z), &xi) in x_att.iter().zip(z).zip(xi) {
        total += slot_reward(x, z, xi, false, a, p);
        a = intensity_update(a, x, p.memory);
    }
    Ok(total / x_att.len() as f64)
}

/// One slot of realized utility. An attack that lands on a running scan earns
/// nothing and pays the detection penalty.
pub fn slot_reward(attack: bool, z: f64, xi: bool, scanning: bool, a_prev: f64, p: &AttackerParams) -> f64 {
    if !attack {
        return 0.0;
    }
    let gain = if scanning {
        -p.detection_penalty
    } else if xi {
        p.reward * (1.0 - z)
    } else {
        0.0
    };
    gain - p.attack_cost(a_prev)
}

/// What the attacker expects from attacking in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotOutlook {
    /// Expected reward before the intensity cost.
    pub gain: f64,
    /// Attacks are ruled out in this slot.
    pub forbidden: bool,
}

/// Outlook against a known schedule: gain `α_A(1 − z)`, scans forbidden.
pub fn outlook_from_schedule(z: &[f64], x_scan: &[bool], p: &AttackerParams) -> Result<Vec<SlotOutlook>, AttackerError> {
    if z.len() != x_scan.len() {
        return Err(AttackerError::LengthMismatch(z.len(), x_scan.len()));
    }
    Ok(z.iter().zip(x_scan).map(|(&z, &s)| SlotOutlook { gain: p.reward * (1.0 - z), forbidden: s }).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub attacks: Vec<bool>,
    /// Time-averaged utility of the plan under the outlook.
    pub value: f64,
}

/// Optimal attack sequence for the outlook, starting from intensity `a0`.
///
/// Ties go to not attacking, earliest slot first. Horizons up to
/// `exact_limit` are solved exactly; longer ones on the intensity grid.
pub fn best_response(outlook: &[SlotOutlook], a0: f64, p: &AttackerParams) -> Result<AttackPlan, AttackerError> {
    if outlook.is_empty() {
        return Err(AttackerError::EmptyHorizon);
    }
    let attacks = if outlook.len() <= p.exact_limit.min(64) { exact_plan(outlook, a0, p) } else { grid_plan(outlook, a0, p) };
    let value = plan_value(outlook, &attacks, a0, p);
    Ok(AttackPlan { attacks, value })
}

/// Time-averaged value of `attacks` under `outlook`, accumulated front to back.
pub fn plan_value(outlook: &[SlotOutlook], attacks: &[bool], a0: f64, p: &AttackerParams) -> f64 {
    let mut a = a0;
    let mut acc = 0.0;
    for (o, &x) in outlook.iter().zip(attacks) {
        if x {
            acc += o.gain - p.attack_cost(a);
        }
        a = intensity_update(a, x, p.memory);
    }
    acc / outlook.len() as f64
}

struct Node {
    a: f64,
    acc: f64,
    /// Attack bits so far, slot 0 in the least significant position.
    bits: u64,
}

/// Forward search over (intensity, accumulated value) with Pareto pruning.
///
/// A prefix is discarded only when another has no larger intensity and a
/// strictly larger accumulated value, so no optimal completion is lost.
fn exact_plan(outlook: &[SlotOutlook], a0: f64, p: &AttackerParams) -> Vec<bool> {
    let n = outlook.len();
    let mut front = vec![Node { a: a0, acc: 0.0, bits: 0 }];
    for (t, o) in outlook.iter().enumerate() {
        let mut next = Vec::with_capacity(front.len() * 2);
        for node in &front {
            next.push(Node { a: intensity_update(node.a, false, p.memory), acc: node.acc, bits: node.bits });
            if !o.forbidden {
                next.push(Node {
                    a: intensity_update(node.a, true, p.memory),
                    acc: node.acc + (o.gain - p.attack_cost(node.a)),
                    bits: node.bits | 1 << t,
                });
            }
        }
        front = pareto(next);
    }
    let mut best = &front[0];
    for node in &front[1..] {
        if node.acc > best.acc || (node.acc == best.acc && lex_less(node.bits, best.bits, n)) {
            best = node;
        }
    }
    (0..n).map(|t| best.bits >> t & 1 == 1).collect()
}

/// Plan order with slot 0 most significant and not attacking before attacking.
fn lex_less(x: u64, y: u64, n: usize) -> bool {
    (0..n).map(|t| (x >> t & 1, y >> t & 1)).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b)
}

fn pareto(mut nodes: Vec<Node>) -> Vec<Node> {
    nodes.sort_by(|x, y| x.a.total_cmp(&y.a).then(y.acc.total_cmp(&x.acc)));
    let mut kept: Vec<Node> = Vec::with_capacity(nodes.len());
    let mut best_acc = f64::NEG_INFINITY;
    for node in nodes {
        if let Some(last) = kept.last_mut() {
            if last.a == node.a && last.acc == node.acc {
                // Identical futures: keep the smaller plan prefix.
                if node.bits.reverse_bits() < last.bits.reverse_bits() {
                    *last = node;
                }
                continue;
            }
        }
        if node.acc < best_acc {
            continue;
        }
        best_acc = best_acc.max(node.acc);
        kept.push(node);
    }
    kept
}

/// Backward value iteration on a uniform intensity grid, then a forward pass
/// with exact intensities choosing an attack only on a strict improvement.
fn grid_plan(outlook: &[SlotOutlook], a0: f64, p: &AttackerParams) -> Vec<bool> {
    let g = p.a_grid;
    let step = 1.0 / (g - 1) as f64;
    let n = outlook.len();
    let mut values: Vec<Vec<f64>> = vec![vec![0.0; g]; n + 1];
    let interp = |v: &[f64], a: f64| -> f64 {
        let x = (a.clamp(0.0, 1.0)) / step;
        let i = (x as usize).min(g - 2);
        let w = x - i as f64;
        v[i] * (1.0 - w) + v[i + 1] * w
    };
    for t in (0..n).rev() {
        let (head, tail) = values.split_at_mut(t + 1);
        let next = &tail[0];
        let o = &outlook[t];
        for (i, v) in head[t].iter_mut().enumerate() {
            let a = i as f64 * step;
            let wait = interp(next, intensity_update(a, false, p.memory));
            let attack = if o.forbidden {
                f64::NEG_INFINITY
            } else {
                o.gain - p.attack_cost(a) + interp(next, intensity_update(a, true, p.memory))
            };
            *v = wait.max(attack);
        }
    }
    let mut a = a0;
    let mut out = Vec::with_capacity(n);
    for (t, o) in outlook.iter().enumerate() {
        let wait = interp(&values[t + 1], intensity_update(a, false, p.memory));
        let attack = o.gain - p.attack_cost(a) + interp(&values[t + 1], intensity_update(a, true, p.memory));
        let x = !o.forbidden && attack > wait;
        out.push(x);
        a = intensity_update(a, x, p.memory);
    }
    out
}

/// Row-stochastic signaling matrix `π(m|ω)`, states by rows.
pub type PolicyMatrix = [Vec<f64>];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observation {
    Signal(usize),
    Erasure,
}

/// Bayes update on a received signal; erasure resets to `reset`.
pub fn belief_update(
    prior: &[f64],
    observation: Observation,
    policy: &PolicyMatrix,
    reset: &[f64],
) -> Result<Vec<f64>, AttackerError> {
    let m = match observation {
        Observation::Erasure => return Ok(reset.to_vec()),
        Observation::Signal(m) => m,
    };
    if policy.len() != prior.len() || policy.iter().any(|row| m >= row.len()) {
        return Err(AttackerError::Shape);
    }
    let joint: Vec<f64> = prior.iter().zip(policy).map(|(mu, row)| mu * row[m]).collect();
    let mass: f64 = joint.iter().sum();
    if !(mass > 0.0) {
        return Err(AttackerError::ZeroProbabilitySignal(m));
    }
    Ok(joint.into_iter().map(|j| j / mass).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Attack,
    Wait,
}

/// Beliefs within this distance of the threshold count as equal to it.
pub const BELIEF_TIE_TOL: f64 = 1e-9;

/// Attack iff the believed probability of an active IDS is below the
/// threshold; ties, up to [`BELIEF_TIE_TOL`], favor waiting.
pub fn threshold_decision(p_active: f64, threshold: f64) -> Decision {
    if p_active < threshold - BELIEF_TIE_TOL {
        Decision::Attack
    } else {
        Decision::Wait
    }
}

/// Running attacker state across an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerState {
    pub intensity: f64,
    pub belief: Vec<f64>,
    pub last_xi: bool,
}

impl AttackerState {
    pub fn new(prior: &[f64]) -> Self {
        AttackerState { intensity: 0.0, belief: prior.to_vec(), last_xi: true }
    }
}
