//! Deceptive signaling: a credibility-constrained persuasion problem solved
//! as a linear program over posterior splits, plus per-slot budget
//! allocation, artificial delay selection and belief-drift instrumentation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attacker::AttackerParams;
use crate::lp::{self, LinearProgram, LpError};
use crate::math::entropy;

/// Grid points allowed before the default resolution is lowered.
pub const GRID_BUDGET: u64 = 20_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PersuasionError {
    #[error("credibility budget must be non-negative, got {0}")]
    NegativeBudget(f64),
    #[error("invalid game: {0}")]
    InvalidGame(&'static str),
    #[error("invalid policy: {0}")]
    InvalidPolicy(&'static str),
    #[error("no Bayes-plausible split on the grid meets the budget (residual {residual:.3e})")]
    Infeasible { residual: f64, certificate: Vec<f64> },
    #[error("linear program failed: {0}")]
    Solver(LpError),
    #[error("grid resolution {0} too coarse or too fine")]
    Resolution(u32),
}

/// Attacker's decision problem against a hidden state `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersuasionGame {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// `payoffs[a][ω]`.
    pub payoffs: Vec<Vec<f64>>,
    pub prior: Vec<f64>,
    pub signals: usize,
}

impl PersuasionGame {
    pub fn validate(&self) -> Result<(), PersuasionError> {
        let n = self.prior.len();
        if n == 0 || self.states.len() != n {
            return Err(PersuasionError::InvalidGame("state labels and prior disagree"));
        }
        if self.payoffs.is_empty() || self.actions.len() != self.payoffs.len() {
            return Err(PersuasionError::InvalidGame("action labels and payoff rows disagree"));
        }
        if self.payoffs.iter().any(|row| row.len() != n || row.iter().any(|v| !v.is_finite())) {
            return Err(PersuasionError::InvalidGame("payoff rows must be finite with one entry per state"));
        }
        if !on_simplex(&self.prior, 1e-9) {
            return Err(PersuasionError::InvalidGame("prior must be a probability vector"));
        }
        if self.signals == 0 {
            return Err(PersuasionError::InvalidGame("at least one signal is required"));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.prior.len()
    }

    /// Two-action game `{wait, attack}` with the given attack payoffs.
    pub fn attack_or_wait(attack: Vec<f64>, prior: Vec<f64>, signals: usize) -> Self {
        let n = prior.len();
        PersuasionGame {
            states: (0..n).map(|i| alloc::format!("s{i}")).collect(),
            actions: vec!["wait".into(), "attack".into()],
            payoffs: vec![vec![0.0; n], attack],
            prior,
            signals,
        }
    }

    /// Game over quantized scheduling states `(scan, z-bin)`.
    ///
    /// Attacking an idle-IDS state pays `α_A(1 − z_mid) − β_A`; attacking while
    /// a scan runs pays `−β_A − P_det`; waiting pays nothing.
    pub fn from_schedule(bins: usize, prior_active: f64, p: &AttackerParams, signals: Option<usize>) -> Self {
        let bins = bins.max(1);
        let mut attack = Vec::with_capacity(2 * bins);
        let mut prior = Vec::with_capacity(2 * bins);
        let mut states = Vec::with_capacity(2 * bins);
        for scan in [false, true] {
            for b in 0..bins {
                let z_mid = (b as f64 + 0.5) / bins as f64;
                attack.push(if scan { -p.base_cost - p.detection_penalty } else { p.reward * (1.0 - z_mid) - p.base_cost });
                prior.push(if scan { prior_active } else { 1.0 - prior_active } / bins as f64);
                states.push(alloc::format!("scan{}_z{}", u8::from(scan), b));
            }
        }
        let n = 2 * bins;
        PersuasionGame {
            states,
            actions: vec!["wait".into(), "attack".into()],
            payoffs: vec![vec![0.0; n], attack],
            prior,
            signals: signals.unwrap_or(n + 2),
        }
    }
}

fn on_simplex(v: &[f64], tol: f64) -> bool {
    v.iter().all(|x| *x >= 0.0 && x.is_finite()) && libm::fabs(v.iter().sum::<f64>() - 1.0) <= tol
}

/// State index `scan·bins + bin`; a value on a bin edge goes to the upper bin.
pub fn quantize_state(scan: bool, z_avg: f64, bins: usize) -> usize {
    let bins = bins.max(1);
    let bin = (libm::floor(z_avg.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
    usize::from(scan) * bins + bin
}

/// Whether state index `omega` has the scan flag set.
pub fn state_scanning(omega: usize, bins: usize) -> bool {
    omega >= bins.max(1)
}

/// `π(m|ω)`, one row per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalingPolicy(pub Vec<Vec<f64>>);

impl SignalingPolicy {
    pub fn validate(&self) -> Result<(), PersuasionError> {
        let Some(width) = self.0.first().map(Vec::len) else {
            return Err(PersuasionError::InvalidPolicy("empty policy"));
        };
        if self.0.iter().any(|r| r.len() != width || !on_simplex(r, 1e-12)) {
            return Err(PersuasionError::InvalidPolicy("rows must be probability vectors of equal length"));
        }
        Ok(())
    }

    pub fn identity(n: usize) -> Self {
        SignalingPolicy((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect())
    }

    pub fn uninformative(n: usize) -> Self {
        SignalingPolicy(vec![vec![1.0]; n])
    }

    pub fn n_signals(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    /// Signal index for state `omega` at uniform draw `u ∈ [0, 1)`.
    pub fn sample(&self, omega: usize, u: f64) -> usize {
        let row = &self.0[omega];
        let mut acc = 0.0;
        for (m, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return m;
            }
        }
        row.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }

    /// Posterior split induced under `prior`; zero-probability signals are skipped.
    pub fn split(&self, prior: &[f64]) -> PosteriorSplit {
        let mut support = Vec::new();
        let mut weights = Vec::new();
        let mut signals = Vec::new();
        for m in 0..self.n_signals() {
            let joint: Vec<f64> = prior.iter().zip(&self.0).map(|(mu, row)| mu * row[m]).collect();
            let pm: f64 = joint.iter().sum();
            if pm > 0.0 {
                // A signal equally likely in every state leaves the belief exactly where it was.
                let mut live = self.0.iter().zip(prior).filter(|(_, mu)| **mu > 0.0).map(|(row, _)| row[m]);
                let first = live.next();
                let flat = live.all(|v| Some(v) == first);
                support.push(if flat { prior.to_vec() } else { joint.iter().map(|j| j / pm).collect() });
                weights.push(pm);
                signals.push(m);
            }
        }
        PosteriorSplit { support, weights, signals }
    }
}

/// Distribution over posteriors; Bayes-plausible when the weighted mean is the prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSplit {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Signal index carrying each posterior.
    pub signals: Vec<usize>,
}

impl PosteriorSplit {
    pub fn mean(&self) -> Vec<f64> {
        let n = self.support.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for (mu, p) in self.support.iter().zip(&self.weights) {
            for (o, m) in out.iter_mut().zip(mu) {
                *o += p * m;
            }
        }
        out
    }

    /// `E[H(μ_m)]`, the expected surprise of the true state.
    pub fn expected_entropy(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(mu, p)| p * entropy(mu)).sum()
    }

    pub fn expected_value(&self, game: &PersuasionGame) -> f64 {
        self.support.iter().zip(&self.weights).map(|(mu, p)| p * attacker_value(mu, game)).sum()
    }
}

/// `E_{ω,m}[−ln μ_m(ω)]` under the joint `μ0·π`.
pub fn credibility_cost(policy: &SignalingPolicy, prior: &[f64]) -> f64 {
    let mut cost = 0.0;
    for m in 0..policy.n_signals() {
        let pm: f64 = prior.iter().zip(&policy.0).map(|(mu, row)| mu * row[m]).sum();
        if pm <= 0.0 {
            continue;
        }
        for (mu, row) in prior.iter().zip(&policy.0) {
            let joint = mu * row[m];
            if joint > 0.0 {
                cost -= joint * libm::log(joint / pm);
            }
        }
    }
    cost
}

/// `H(Ω|M) = H(Ω, M) − H(M)` of the joint `μ0·π`.
pub fn conditional_entropy(policy: &SignalingPolicy, prior: &[f64]) -> f64 {
    let joint: Vec<f64> =
        prior.iter().zip(&policy.0).flat_map(|(mu, row)| row.iter().map(move |p| mu * p)).collect();
    let marginal: Vec<f64> =
        (0..policy.n_signals()).map(|m| prior.iter().zip(&policy.0).map(|(mu, row)| mu * row[m]).sum()).collect();
    entropy(&joint) - entropy(&marginal)
}

/// `V(μ) = max_a Σ_ω u(a, ω) μ(ω)`.
pub fn attacker_value(mu: &[f64], game: &PersuasionGame) -> f64 {
    game.payoffs
        .iter()
        .map(|row| crate::math::dot(row, mu))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Index of the attacker's best action at `mu`; ties go to the lowest index.
pub fn best_action(mu: &[f64], game: &PersuasionGame) -> usize {
    let mut best = 0;
    let mut value = f64::NEG_INFINITY;
    for (a, row) in game.payoffs.iter().enumerate() {
        let v = crate::math::dot(row, mu);
        if v > value {
            value = v;
            best = a;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersuasionSolution {
    pub split: PosteriorSplit,
    pub policy: SignalingPolicy,
    pub objective: f64,
    pub cost: f64,
}

/// Number of points `k/res` on the simplex with `n` coordinates.
pub fn grid_size(n: usize, res: u32) -> u64 {
    // C(res + n − 1, n − 1), computed incrementally.
    let mut c: u128 = 1;
    for i in 1..n as u128 {
        c = c * (res as u128 + i) / i;
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

/// 200 steps per coordinate when it fits the grid budget, otherwise the finest that does.
pub fn default_resolution(n: usize) -> u32 {
    let mut res = 200;
    while res > 1 && grid_size(n, res) > GRID_BUDGET {
        res -= 1;
    }
    res
}

fn simplex_grid(n: usize, res: u32) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut counts = vec![0u32; n];
    fn rec(i: usize, left: u32, res: u32, counts: &mut Vec<u32>, out: &mut Vec<Vec<f64>>) {
        let n = counts.len();
        if i == n - 1 {
            counts[i] = left;
            out.push(counts.iter().map(|&c| c as f64 / res as f64).collect());
            return;
        }
        for c in (0..=left).rev() {
            counts[i] = c;
            rec(i + 1, left - c, res, counts, out);
        }
    }
    rec(0, res, res, &mut counts, &mut out);
    out
}

/// How the attacker turns a posterior into an action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    /// Expected-payoff maximizer: value `V(μ)`.
    BestResponse,
    /// Attacks iff the believed probability of an active IDS is below
    /// `threshold`; states at index `bins` and above are the active ones.
    Threshold { bins: usize, threshold: f64 },
}

impl Receiver {
    /// Attacker's expected payoff at posterior `mu`. For the threshold rule
    /// the attack row is the last payoff row.
    pub fn value(&self, mu: &[f64], game: &PersuasionGame) -> f64 {
        match *self {
            Receiver::BestResponse => attacker_value(mu, game),
            Receiver::Threshold { bins, threshold } => {
                let p_active: f64 = mu[bins.min(mu.len())..].iter().sum();
                match crate::attacker::threshold_decision(p_active, threshold) {
                    crate::attacker::Decision::Attack => {
                        crate::math::dot(game.payoffs.last().expect("validated game has actions"), mu)
                    }
                    crate::attacker::Decision::Wait => 0.0,
                }
            }
        }
    }
}

/// Minimizes `E[V(μ)]` over Bayes-plausible splits on a simplex grid subject
/// to `E[H(μ)] ≤ budget`, then recovers `π(m|ω) = p_m μ_m(ω) / μ0(ω)`.
pub fn solve_persuasion(game: &PersuasionGame, budget: f64, resolution: u32) -> Result<PersuasionSolution, PersuasionError> {
    solve_for(game, Receiver::BestResponse, budget, resolution)
}

/// [`solve_persuasion`] against an arbitrary receiver model.
pub fn solve_for(
    game: &PersuasionGame,
    receiver: Receiver,
    budget: f64,
    resolution: u32,
) -> Result<PersuasionSolution, PersuasionError> {
    game.validate()?;
    if !(budget >= 0.0) {
        return Err(PersuasionError::NegativeBudget(budget));
    }
    let n = game.n_states();
    if resolution == 0 || grid_size(n, resolution) > 50 * GRID_BUDGET {
        return Err(PersuasionError::Resolution(resolution));
    }
    let mut points = simplex_grid(n, resolution);
    points.push(game.prior.clone());

    let objective: Vec<f64> = points.iter().map(|mu| receiver.value(mu, game)).collect();
    let cost: Vec<f64> = points.iter().map(|mu| entropy(mu)).collect();
    let eq = (0..n).map(|w| (points.iter().map(|mu| mu[w]).collect(), game.prior[w])).collect();
    let lp = LinearProgram { objective, eq, le: vec![(cost, budget)] };
    let sol = lp::solve(&lp).map_err(|e| match e {
        LpError::Infeasible { residual, farkas } => PersuasionError::Infeasible { residual, certificate: farkas },
        other => PersuasionError::Solver(other),
    })?;

    let mut chosen: Vec<(f64, &Vec<f64>)> =
        sol.x.iter().zip(&points).filter(|(p, _)| **p > 1e-12).map(|(p, mu)| (*p, mu)).collect();
    chosen.sort_by(|a, b| b.0.total_cmp(&a.0));
    let signals = game.signals.max(chosen.len());
    let mut rows = vec![vec![0.0; signals]; n];
    for (w, row) in rows.iter_mut().enumerate() {
        if game.prior[w] <= 0.0 {
            row[0] = 1.0;
            continue;
        }
        for (m, (p, mu)) in chosen.iter().enumerate() {
            row[m] = p * mu[w] / game.prior[w];
        }
        let s: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    let policy = SignalingPolicy(rows);
    let split = policy.split(&game.prior);
    let objective = split.support.iter().zip(&split.weights).map(|(mu, p)| p * receiver.value(mu, game)).sum();
    let cost = credibility_cost(&policy, &game.prior);
    Ok(PersuasionSolution { split, policy, objective, cost })
}

/// `E_{ω∼μ, m∼π}[V(μ_m)] − V(μ)`.
pub fn lyapunov_drift(mu: &[f64], policy: &SignalingPolicy, game: &PersuasionGame) -> f64 {
    let split = policy.split(mu);
    let v0 = attacker_value(mu, game);
    split.support.iter().zip(&split.weights).map(|(m, p)| p * (attacker_value(m, game) - v0)).sum()
}

/// Minimum of `V` over the simplex, by linear programming.
pub fn min_attacker_value(game: &PersuasionGame) -> Result<f64, PersuasionError> {
    let n = game.n_states();
    // Variables: μ (n), t⁺, t⁻.
    let mut objective = vec![0.0; n + 2];
    objective[n] = 1.0;
    objective[n + 1] = -1.0;
    let mut simplex = vec![1.0; n + 2];
    simplex[n] = 0.0;
    simplex[n + 1] = 0.0;
    let le = game
        .payoffs
        .iter()
        .map(|row| {
            let mut r: Vec<f64> = row.clone();
            r.push(-1.0);
            r.push(1.0);
            (r, 0.0)
        })
        .collect();
    let lp = LinearProgram { objective, eq: vec![(simplex, 1.0)], le };
    lp::solve(&lp).map(|s| s.objective).map_err(PersuasionError::Solver)
}

/// Whether `mu` attains the global minimum of `V`, within `tol`.
pub fn in_equilibrium_set(mu: &[f64], game: &PersuasionGame, tol: f64) -> Result<bool, PersuasionError> {
    Ok(attacker_value(mu, game) <= min_attacker_value(game)? + tol)
}

/// Optimal persuasion objective as a function of the per-slot budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCurve {
    pub step: f64,
    /// Objective at budgets `0, step, 2·step, …`; non-increasing.
    pub values: Vec<f64>,
    /// Attacker value at the prior, the payoff of an erased slot.
    pub prior_value: f64,
}

impl BudgetCurve {
    /// Tabulates the solver on `[0, max_budget]`, stopping once the budget exceeds `H(μ0)`.
    pub fn build(
        game: &PersuasionGame,
        receiver: Receiver,
        step: f64,
        max_budget: f64,
        resolution: u32,
    ) -> Result<Self, PersuasionError> {
        Ok(Self::tabulate(game, receiver, step, max_budget, resolution)?.0)
    }

    /// As [`BudgetCurve::build`], also returning the optimal policy at every grid budget.
    pub fn tabulate(
        game: &PersuasionGame,
        receiver: Receiver,
        step: f64,
        max_budget: f64,
        resolution: u32,
    ) -> Result<(Self, Vec<SignalingPolicy>), PersuasionError> {
        if !(step > 0.0) {
            return Err(PersuasionError::InvalidGame("budget step must be positive"));
        }
        let cap = max_budget.min(entropy(&game.prior) + step);
        let n = (libm::ceil(cap / step - 1e-9) as usize).max(0) + 1;
        let mut values = Vec::with_capacity(n);
        let mut policies: Vec<SignalingPolicy> = Vec::with_capacity(n);
        let mut last = f64::INFINITY;
        for i in 0..n {
            let sol = solve_for(game, receiver, i as f64 * step, resolution)?;
            // The solver is monotone up to LP tolerance; keep the better earlier design on a tie.
            if sol.objective < last {
                last = sol.objective;
                policies.push(sol.policy);
            } else {
                let prev = policies.last().cloned().unwrap_or(sol.policy);
                policies.push(prev);
            }
            values.push(last);
        }
        let curve = BudgetCurve { step, values, prior_value: receiver.value(&game.prior, game) };
        Ok((curve, policies))
    }

    /// Index of the largest grid budget not exceeding `c`.
    pub fn grid_index(&self, c: f64) -> usize {
        let i = libm::floor(c.max(0.0) / self.step + 1e-9) as usize;
        i.min(self.values.len() - 1)
    }

    /// Linear interpolation, constant beyond the last tabulated budget.
    pub fn value(&self, c: f64) -> f64 {
        let x = c.max(0.0) / self.step;
        let i = libm::floor(x) as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().expect("curve is non-empty");
        }
        let w = x - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Expected attacker value of one slot with outage `p_out` and budget `c`.
    pub fn slot_value(&self, c: f64, p_out: f64) -> f64 {
        (1.0 - p_out) * self.value(c) + p_out * self.prior_value
    }
}

/// Splits `W·C` across slots by greedy marginal gain on the budget grid.
///
/// Slots with equal marginal gain receive budget together; a remainder too
/// small to give each a full step is shared equally.
pub fn allocate_budget(p_out: &[f64], budget: f64, curve: &BudgetCurve) -> Vec<f64> {
    let w = p_out.len();
    let mut alloc = vec![0.0; w];
    if w == 0 || !(budget > 0.0) {
        return alloc;
    }
    let step = curve.step;
    let mut units = vec![0usize; w];
    let mut left = budget * w as f64;
    let gain = |t: usize, u: usize| -> f64 {
        let c = u as f64 * step;
        (1.0 - p_out[t]) * (curve.value(c) - curve.value(c + step))
    };
    let max_units = curve.values.len();
    while left > 1e-12 {
        let gains: Vec<f64> = (0..w).map(|t| if units[t] < max_units { gain(t, units[t]) } else { 0.0 }).collect();
        let best = gains.iter().cloned().fold(0.0, f64::max);
        if best <= 1e-15 {
            break;
        }
        let group: Vec<usize> = (0..w).filter(|&t| gains[t] >= best * (1.0 - 1e-12)).collect();
        let need = group.len() as f64 * step;
        if left + 1e-12 >= need {
            for &t in &group {
                units[t] += 1;
                alloc[t] += step;
            }
            left -= need;
        } else {
            let share = left / group.len() as f64;
            for &t in &group {
                alloc[t] += share;
            }
            left = 0.0;
        }
    }
    alloc
}

/// Total expected attacker value of an allocation.
pub fn allocation_value(p_out: &[f64], alloc: &[f64], curve: &BudgetCurve) -> f64 {
    p_out.iter().zip(alloc).map(|(&p, &c)| curve.slot_value(c, p)).sum()
}

/// Affine ramp `ρ(γ̂)` between two SNR levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayRamp {
    pub snr_low_db: f64,
    pub snr_high_db: f64,
}

impl DelayRamp {
    pub fn rho(&self, snr_db: f64) -> f64 {
        if self.snr_high_db <= self.snr_low_db {
            return if snr_db >= self.snr_high_db { 1.0 } else { 0.0 };
        }
        ((snr_db - self.snr_low_db) / (self.snr_high_db - self.snr_low_db)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayChoice {
    pub delay_ms: f64,
    /// Propagation plus processing already exceeds the latency bound.
    pub no_headroom: bool,
}

/// `δ_add = ρ(γ̂)·(D_max − τ_prop − τ_proc)`, zero when there is no headroom.
pub fn choose_artificial_delay(snr_db: f64, prop_ms: f64, proc_ms: f64, max_ms: f64, ramp: &DelayRamp) -> DelayChoice {
    let headroom = max_ms - prop_ms - proc_ms;
    if !(headroom > 0.0) {
        return DelayChoice { delay_ms: 0.0, no_headroom: headroom < 0.0 };
    }
    DelayChoice { delay_ms: ramp.rho(snr_db) * headroom, no_headroom: false }
}
