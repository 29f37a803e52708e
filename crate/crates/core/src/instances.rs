//! Seeded random scheduling instances for the greedy-versus-exact benchmark.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::star::{
    exact_schedule, plan_objective, plan_window, HorizonPlan, MarginalRule, SchedEnv, ScanSpec, StarConfig,
    StarError, StarScheduler, TsMode, UtilityParams, WindowState,
};
use crate::workload::{
    generate_arrivals, ArrivalPattern, DeadlineKind, Nature, Priority, ResourceVector, TaskQueue, TaskSpec,
};

/// One low-priority aperiodic mission spec plus one or two high-priority specs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub len: u32,
    pub specs: Vec<TaskSpec>,
    pub star: StarConfig,
    pub utility: UtilityParams,
}

fn demand(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> ResourceVector {
    ResourceVector(vec![rng.random_range(lo..hi), rng.random_range(lo..hi)])
}

/// Instance with a window length drawn from `lens`.
pub fn random_instance(seed: u64, lens: core::ops::RangeInclusive<u32>) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.random_range(lens);
    let processing = rng.random_range(1..=4);
    let mut specs = vec![TaskSpec {
        id: 0,
        name: "routine".into(),
        nature: Nature::Mission,
        priority: Priority::Low,
        arrival: ArrivalPattern::Aperiodic { rate: rng.random_range(0.1..0.8) },
        demand: demand(&mut rng, 0.02, 0.3),
        power_weight: None,
        processing,
        relative_deadline: processing + rng.random_range(0..=10),
        mean_demand: None,
        deadline: DeadlineKind::Soft,
        value: 1.0,
    }];
    for id in 1..=rng.random_range(1..=2) {
        let processing = rng.random_range(1..=3);
        let arrival = if rng.random_bool(0.5) {
            ArrivalPattern::Periodic { interval: rng.random_range(3..=15) }
        } else {
            ArrivalPattern::Aperiodic { rate: rng.random_range(0.05..0.3) }
        };
        specs.push(TaskSpec {
            id,
            name: "relay".into(),
            nature: Nature::Mission,
            priority: Priority::High,
            arrival,
            demand: demand(&mut rng, 0.05, 0.4),
            power_weight: None,
            processing,
            relative_deadline: processing + rng.random_range(0..=6),
            mean_demand: None,
            deadline: DeadlineKind::Firm,
            value: 1.0,
        });
    }
    let star = StarConfig {
        scan: ScanSpec {
            demand: demand(&mut rng, 0.05, 0.4),
            power_weight: None,
            duration: rng.random_range(1..=len.clamp(1, 4)),
        },
        p_max: rng.random_range(0.6..1.2),
        marginal: MarginalRule::Window,
        scanning: rng.random_bool(0.8),
    };
    Instance { seed, len, specs, star, utility: UtilityParams::default() }
}

impl Instance {
    pub fn env(&self) -> SchedEnv<'_> {
        SchedEnv { specs: &self.specs, utility: &self.utility, star: &self.star }
    }

    /// Greedy plan over the instance's own arrival stream.
    pub fn greedy(&self) -> HorizonPlan {
        let arrivals = generate_arrivals(&self.specs, self.len, self.seed);
        let window = WindowState::new(0, self.len, self.specs.len());
        plan_window(&TaskQueue::new(self.specs.clone()), arrivals, &window, &StarScheduler::new(), &self.env())
    }

    /// Exact optimum over the same work items as `greedy`.
    pub fn exact(&self, greedy: &HorizonPlan) -> Result<HorizonPlan, StarError> {
        exact_schedule(&greedy.tasks, &self.specs, 0, self.len, &self.env(), TsMode::Capped)
    }
}

/// Greedy and exact objectives over small instances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityReport {
    pub pairs: Vec<(f64, f64)>,
    pub skipped: usize,
}

impl QualityReport {
    /// Mean of greedy/exact over instances with a positive optimum.
    pub fn mean_ratio(&self) -> f64 {
        let r: Vec<f64> = self.pairs.iter().filter(|p| p.1 > 0.0).map(|p| p.0 / p.1).collect();
        r.iter().sum::<f64>() / r.len().max(1) as f64
    }
}

/// Compares greedy with exact on `count` solvable instances, seeds from `first_seed`.
pub fn quality(first_seed: u64, count: usize, max_len: u32) -> QualityReport {
    let mut out = QualityReport::default();
    let mut seed = first_seed;
    while out.pairs.len() < count {
        let inst = random_instance(seed, 5..=max_len);
        seed += 1;
        let greedy = inst.greedy();
        match inst.exact(&greedy) {
            Ok(exact) => {
                let u = &inst.utility;
                out.pairs.push((plan_objective(&greedy, u), plan_objective(&exact, u)));
            }
            Err(_) => out.skipped += 1,
        }
    }
    out
}
