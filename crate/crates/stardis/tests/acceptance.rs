//! Acceptance suite: one PASS/FAIL line per criterion. The exit status is
//! non-zero on any failure outside `KNOWN_FAILURES`, and on any known failure
//! that starts passing.

use std::f64::consts::LN_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stardis::runner;
use stardis_core::attacker::{best_response, AttackerParams, SlotOutlook};
use stardis_core::channel::{sample_envelope, shadowed_rician_cdf, shadowed_rician_pdf, ChannelParams};
use stardis_core::engine::{
    run_episode, sign_test_p, EpisodeMetrics, ErasureOverride, PolicyKind, Prepared, ScenarioConfig, SlotTrace,
};
use stardis_core::instances::random_instance;
use stardis_core::persuasion::{
    conditional_entropy, credibility_cost, default_resolution, lyapunov_drift, solve_persuasion, PersuasionGame,
    SignalingPolicy,
};
use stardis_core::star::{check_plan, TsMode};

type Outcome = Result<String, String>;

/// Criteria that fail with the model as specified; the README explains why.
const KNOWN_FAILURES: &[u32] = &[9];

fn criterion(n: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let dt = t0.elapsed();
    let r = match (r, limit) {
        (Ok(d), Some(l)) if dt > l => Err(format!("{d}; runtime {dt:.1?} over {l:?}")),
        (r, _) => r,
    };
    let (tag, detail) = match &r {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let known = KNOWN_FAILURES.contains(&n);
    let note = match (r.is_ok(), known) {
        (false, true) => " [known failure, see README]",
        (true, true) => " [listed as a known failure; remove it from KNOWN_FAILURES]",
        _ => "",
    };
    println!("{tag} criterion {n} [{name}] ({:.1?}): {detail}{note}", dt);
    r.is_ok() != known
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- channel

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Upper bound on sup |F_n − F| from a grid: both CDFs are monotone, so
/// inside each cell the gap is bounded by the cell's end values.
fn ks_bound(sorted: &[f64], p: &ChannelParams, cells: usize) -> f64 {
    let n = sorted.len() as f64;
    let hi = p.support_limit().max(*sorted.last().unwrap());
    let grid: Vec<f64> = (0..=cells).map(|i| hi * i as f64 / cells as f64).collect();
    let f: Vec<f64> = grid.iter().map(|&r| shadowed_rician_cdf(r, p)).collect();
    let below = |r: f64| sorted.partition_point(|&x| x < r) as f64 / n;
    let at = |r: f64| sorted.partition_point(|&x| x <= r) as f64 / n;
    let mut ks: f64 = 0.0;
    for k in 0..cells {
        ks = ks.max(below(grid[k + 1]) - f[k]).max(f[k + 1] - at(grid[k]));
    }
    ks.max(1.0 - f[cells])
}

fn channel_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut cases = vec![ChannelParams::reference()];
    for _ in 0..10 {
        let (b0, m, om) = (rng.random_range(0.05..0.5), rng.random_range(0.5..25.0), rng.random_range(0.05..2.0));
        cases.push(ChannelParams::new(b0, m, om, 5.0).map_err(|e| e.to_string())?);
    }
    let worst = cases
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let lim = p.support_limit();
            let pdf = |r: f64| shadowed_rician_pdf(r, p).unwrap();
            let mass = simpson(pdf, 0.0, lim, 8_000);
            let m2 = simpson(|r| r * r * pdf(r), 0.0, lim, 8_000);
            let mut draw = ChaCha8Rng::seed_from_u64(1_000 + i as u64);
            let mut xs: Vec<f64> = (0..1_000_000).map(|_| sample_envelope(p, &mut draw)).collect();
            xs.sort_by(f64::total_cmp);
            let ks = ks_bound(&xs, p, 4_000);
            check((mass - 1.0).abs() < 1e-6, || format!("mass {mass} for {p:?}"))?;
            check((m2 - p.mean_power()).abs() < 1e-4, || format!("E[r²] {m2} vs {} for {p:?}", p.mean_power()))?;
            check(ks < 0.01, || format!("KS bound {ks} for {p:?}"))?;
            Ok(ks)
        })
        .collect::<Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(format!("11 laws, unit mass and power, worst KS bound {worst:.5} at 1e6 draws"))
}

// --------------------------------------------------------------- attacker

/// Exhaustive search; counting masks down lands `>=` on the lexicographically
/// smallest optimum, the documented tie-break.
fn enumerate(outlook: &[SlotOutlook], a0: f64, p: &AttackerParams) -> (Vec<bool>, f64) {
    let n = outlook.len();
    let mut best: Option<(Vec<bool>, f64)> = None;
    for mask in (0u32..1 << n).rev() {
        let plan: Vec<bool> = (0..n).map(|t| mask >> (n - 1 - t) & 1 == 1).collect();
        if plan.iter().zip(outlook).any(|(&x, o)| x && o.forbidden) {
            continue;
        }
        let mut a = a0;
        let mut acc = 0.0;
        for (o, &x) in outlook.iter().zip(&plan) {
            if x {
                acc += o.gain - p.base_cost * (1.0 + p.intensity_cost * a);
            }
            a = (1.0 - p.memory) * a + if x { p.memory } else { 0.0 };
        }
        let v = acc / n as f64;
        if best.as_ref().is_none_or(|(_, b)| v >= *b) {
            best = Some((plan, v));
        }
    }
    best.expect("waiting throughout is always allowed")
}

fn attacker_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for i in 0..50 {
        let n = rng.random_range(1..=12);
        let o: Vec<SlotOutlook> = (0..n)
            .map(|_| SlotOutlook { gain: rng.random_range(-1.0..10.0), forbidden: rng.random_bool(0.2) })
            .collect();
        let a0 = rng.random_range(0.0..1.0);
        let p = AttackerParams {
            base_cost: rng.random_range(0.05..3.0),
            intensity_cost: rng.random_range(0.1..5.0),
            memory: rng.random_range(0.05..1.0),
            ..AttackerParams::default()
        };
        let dp = best_response(&o, a0, &p).map_err(|e| e.to_string())?;
        let (plan, value) = enumerate(&o, a0, &p);
        check(dp.attacks == plan, || format!("instance {i}: plan {:?} vs {plan:?}", dp.attacks))?;
        check((dp.value - value).abs() <= 1e-12, || format!("instance {i}: value {} vs {value}", dp.value))?;
    }
    Ok("50 instances, horizons 1..=12, identical plans and values".into())
}

// ------------------------------------------------------------- persuasion

fn h2(q: f64) -> f64 {
    let f = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    f(q) + f(1.0 - q)
}

fn convex_envelope_at(g: &[f64], x: f64) -> f64 {
    let n = g.len() - 1;
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for (i, &y) in g.iter().enumerate() {
        let p = (i as f64 / n as f64, y);
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let k = hull.partition_point(|p| p.0 < x).clamp(1, hull.len() - 1);
    let (a, b) = (hull[k - 1], hull[k]);
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Minimum attacker value over Bayes-plausible two-state splits with
/// E[H(μ_m)] ≤ C, by duality: `max_λ≥0 conv(V + λH)(q0) − λC`, concave in λ.
fn two_state_oracle(payoffs: &[[f64; 2]], q0: f64, c: f64) -> f64 {
    const N: usize = 20_000;
    let v = |q: f64| payoffs.iter().map(|r| r[0] * q + r[1] * (1.0 - q)).fold(f64::NEG_INFINITY, f64::max);
    if c <= 0.0 {
        return q0 * v(1.0) + (1.0 - q0) * v(0.0);
    }
    let dual = |lam: f64| {
        let g: Vec<f64> = (0..=N).map(|i| i as f64 / N as f64).map(|q| v(q) + lam * h2(q)).collect();
        convex_envelope_at(&g, q0) - lam * c
    };
    let span = payoffs.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let (mut lo, mut hi) = (0.0, 4.0 * span / c + 1.0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if dual(a) < dual(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    dual(0.5 * (lo + hi))
}

fn two_state_game(rows: &[[f64; 2]], q0: f64) -> PersuasionGame {
    PersuasionGame {
        states: vec!["a".into(), "b".into()],
        actions: (0..rows.len()).map(|i| format!("x{i}")).collect(),
        payoffs: rows.iter().map(|r| r.to_vec()).collect(),
        prior: vec![q0, 1.0 - q0],
        signals: 3,
    }
}

fn persuasion_oracle() -> Outcome {
    let coin = PersuasionGame::attack_or_wait(vec![1.0, -1.0], vec![0.5, 0.5], 4);
    let at_ln2 = solve_persuasion(&coin, LN_2, 200).map_err(|e| e.to_string())?.objective;
    let at_zero = solve_persuasion(&coin, 0.0, 200).map_err(|e| e.to_string())?.objective;
    check(at_ln2.abs() < 1e-9, || format!("coin game at ln 2: {at_ln2}"))?;
    check((at_zero - 0.5).abs() < 1e-9, || format!("coin game at 0: {at_zero}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let games: Vec<(Vec<[f64; 2]>, f64)> = (0..20)
        .map(|_| {
            let k = rng.random_range(2..=3);
            let rows = (0..k).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            (rows, rng.random_range(0.1..0.9))
        })
        .collect();
    let jobs: Vec<(usize, f64)> = (0..games.len()).flat_map(|g| [0.0, 0.1, 0.3, LN_2].map(|c| (g, c))).collect();
    let worst = jobs
        .par_iter()
        .map(|&(g, c)| {
            let (rows, q0) = &games[g];
            let s = solve_persuasion(&two_state_game(rows, *q0), c, 4000).map_err(|e| e.to_string())?;
            let oracle = two_state_oracle(rows, *q0, c);
            let gap = (s.objective - oracle).abs();
            check(gap < 1e-3, || format!("game {g} at C={c}: {} vs oracle {oracle}", s.objective))?;
            Ok(gap)
        })
        .collect::<Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(format!("anchors exact; 80 solves, worst gap {worst:.2e}"))
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn random_policy(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SignalingPolicy {
    SignalingPolicy((0..n).map(|_| random_simplex(rng, m)).collect())
}

fn credibility_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let prior = random_simplex(&mut rng, 4);
        let pi = random_policy(&mut rng, 4, 5);
        let mut direct = 0.0;
        for m in 0..5 {
            let pm: f64 = (0..4).map(|w| prior[w] * pi.0[w][m]).sum();
            for w in 0..4 {
                let joint = prior[w] * pi.0[w][m];
                if joint > 0.0 {
                    direct -= joint * (joint / pm).ln();
                }
            }
        }
        let (cost, h) = (credibility_cost(&pi, &prior), conditional_entropy(&pi, &prior));
        worst = worst.max((cost - direct).abs()).max((h - direct).abs());
        check(worst < 1e-9, || format!("policy {i}: cost {cost}, H {h}, direct {direct}"))?;
        let reveal = credibility_cost(&SignalingPolicy::identity(4), &prior);
        check(reveal == 0.0, || format!("revealing policy costs {reveal}"))?;
    }
    Ok(format!("100 policies, worst deviation {worst:.1e}; revealing cost 0"))
}

fn lyapunov_suite() -> Outcome {
    let g = PersuasionGame::from_schedule(2, 0.5, &AttackerParams::default(), None);
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut min_drift = f64::INFINITY;
    for i in 0..100 {
        let mu = random_simplex(&mut rng, 4);
        let pi = random_policy(&mut rng, 4, 3);
        let d = lyapunov_drift(&mu, &pi, &g);
        min_drift = min_drift.min(d);
        check(d >= -1e-9, || format!("policy {i}: drift {d}"))?;
        let flat = lyapunov_drift(&mu, &SignalingPolicy::uninformative(4), &g);
        check(flat == 0.0, || format!("uninformative drift {flat}"))?;
    }
    let res = default_resolution(4);
    let curve = (1..=50)
        .into_par_iter()
        .map(|i| solve_persuasion(&g, 0.01 * i as f64, res).map(|s| s.objective))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| e.to_string())?;
    for (i, w) in curve.windows(2).enumerate() {
        check(w[1] <= w[0] + 1e-9, || format!("objective rises from {} to {} at C={:.2}", w[0], w[1], 0.01 * (i + 2) as f64))?;
    }
    Ok(format!("min drift {min_drift:.3e}; objective {:.4} → {:.4} over C ∈ [0.01, 0.5]", curve[0], curve[49]))
}

// -------------------------------------------------------------- scheduler

fn scheduler_quality() -> Outcome {
    let violating: Vec<u64> = (0..1000u64)
        .into_par_iter()
        .filter(|&s| {
            let inst = random_instance(s, 5..=100);
            !check_plan(&inst.greedy(), &inst.specs, &inst.star.scan, TsMode::Capped).is_empty()
        })
        .collect();
    check(violating.is_empty(), || format!("checker violations on seeds {violating:?}"))?;
    let (q, _) = runner::quality(10_000, 100, 10);
    check(q.violations == 0, || format!("{} violations on small instances", q.violations))?;
    check(q.mean_ratio >= 0.85, || format!("mean greedy/exact ratio {:.4} over {} instances", q.mean_ratio, q.compared))?;
    Ok(format!(
        "1000 instances clean; greedy/exact mean ratio {:.4} (min {:.4}) over {} instances, {} larger ones skipped",
        q.mean_ratio, q.min_ratio, q.compared, q.skipped
    ))
}

// ------------------------------------------------------------- benchmark

fn mean(policy: PolicyKind, episodes: &[EpisodeMetrics], f: impl Fn(&EpisodeMetrics) -> f64) -> f64 {
    let v: Vec<f64> = episodes.iter().filter(|e| e.policy == policy).map(f).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn orderings(eps: &[EpisodeMetrics]) -> Outcome {
    use PolicyKind::*;
    let miss = |p| mean(p, eps, |e| e.relay_miss);
    let routine = |p| mean(p, eps, |e| e.routine_completion);
    let util = |p| mean(p, eps, |e| e.defender_utility);
    let detail = format!(
        "relay miss STAR {:.3}% FCFS {:.2}%; routine STAR {:.2}% SP {:.2}%; utility/FCFS STAR {:.3} SP {:.3} FCFS 1.000",
        miss(Star),
        miss(Fcfs),
        routine(Star),
        routine(Sp),
        util(Star) / util(Fcfs),
        util(Sp) / util(Fcfs)
    );
    check(miss(Star) <= 0.1, || format!("STAR relay miss too high; {detail}"))?;
    check(miss(Fcfs) > 5.0, || format!("FCFS relay miss too low; {detail}"))?;
    check(routine(Star) > routine(Sp), || format!("routine ordering; {detail}"))?;
    check(util(Star) > util(Sp) && util(Sp) > util(Fcfs), || format!("utility ordering; {detail}"))?;
    Ok(detail)
}

fn paired_wins(eps: &[EpisodeMetrics], seeds: &[u64], lower: PolicyKind, higher: PolicyKind) -> (usize, f64, f64) {
    let a = runner::paired(eps, lower, seeds, |e| e.attacker_realized);
    let b = runner::paired(eps, higher, seeds, |e| e.attacker_realized);
    let wins = a.iter().zip(&b).filter(|(x, y)| x < y).count();
    let gap = a.iter().zip(&b).map(|(x, y)| y - x).sum::<f64>() / seeds.len() as f64;
    (wins, sign_test_p(wins, seeds.len()), gap)
}

fn deception(eps: &[EpisodeMetrics], seeds: &[u64]) -> Outcome {
    use PolicyKind::*;
    let (w1, p1, g1) = paired_wins(eps, seeds, Stardis, StarStaticDeception);
    let (w2, p2, g2) = paired_wins(eps, seeds, StarStaticDeception, Star);
    let detail = format!(
        "realized STARDIS {:.4} < static {:.4} ({w1}/{} wins, p={p1:.2e}, gap {g1:.4}) < STAR {:.4} ({w2}/{} wins, p={p2:.2e}, gap {g2:.4})",
        mean(Stardis, eps, |e| e.attacker_realized),
        mean(StarStaticDeception, eps, |e| e.attacker_realized),
        seeds.len(),
        mean(Star, eps, |e| e.attacker_realized),
        seeds.len(),
    );
    check(p1 < 0.05 && g1 > 0.0, || format!("STARDIS vs static; {detail}"))?;
    check(p2 < 0.05 && g2 > 0.0, || format!("static vs STAR; {detail}"))?;
    let bad: Vec<u64> = eps.iter().filter(|e| e.policy == Stardis && !e.budget_monotone).map(|e| e.seed).collect();
    check(bad.is_empty(), || format!("allocation not monotone in predicted SNR on seeds {bad:?}"))?;
    Ok(format!("{detail}; allocation monotone on every episode"))
}

fn credibility_sweep(prep: &Prepared, seeds: &[u64]) {
    use PolicyKind::*;
    for c in [0.01, 0.1, 0.2, 0.5] {
        let line = prep
            .with_credibility(c)
            .map_err(|e| e.to_string())
            .and_then(|p| runner::run_all(&p, &[Star, Stardis], seeds).map_err(|e| e.to_string()))
            .map(|eps| {
                let (wins, p, gap) = paired_wins(&eps, seeds, Stardis, Star);
                format!(
                    "STARDIS realized {:.4}, below STAR on {wins}/{} seeds (p={p:.2e}, mean gap {gap:.4})",
                    mean(Stardis, &eps, |e| e.attacker_realized),
                    seeds.len()
                )
            });
        match line {
            Ok(l) => println!("INFO credibility C={c}: {l}"),
            Err(e) => println!("INFO credibility C={c}: error {e}"),
        }
    }
}

// ---------------------------------------------------------- belief dynamics

/// Slots whose belief was set by a delivered packet, with that packet's send slot.
/// A packet sent at `s` lands at `arrival[s]`; it is delivered when that slot
/// receives, and the freshest landing packet wins. Erasures reset the source.
fn belief_sources(slots: &[SlotTrace]) -> Vec<Option<usize>> {
    let mut landing: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
    for (s, tr) in slots.iter().enumerate() {
        if let Some(l) = landing.get_mut(tr.arrival as usize) {
            l.push(s);
        }
    }
    let mut src = None;
    slots
        .iter()
        .enumerate()
        .map(|(t, tr)| {
            if let Some(&s) = landing[t].iter().max() {
                src = tr.xi.then_some(s);
            }
            src
        })
        .collect()
}

fn belief_dynamics() -> Outcome {
    const H: u32 = 400;
    let mut c = ScenarioConfig::default();
    c.scenario.horizon = H;
    c.geometry.pass_slots = H;
    c.geometry.episode_slots = H;
    c.geometry.center_slot = H as f64 / 2.0;
    c.deception.prediction_slots = c.deception.prediction_slots.min(H);
    let spans = [(0, 100, true), (100, 140, false), (140, 260, true), (260, 300, false), (300, 400, true)];
    c.channel.overrides = spans.iter().map(|&(start, end, received)| ErasureOverride { start, end, received }).collect();
    let (mu0, th) = (c.deception.prior_active, c.deception.threshold);
    let prep = Prepared::new(c).map_err(|e| e.to_string())?;
    let e = run_episode(&prep, PolicyKind::Stardis, 0).map_err(|e| e.to_string())?;
    let src = belief_sources(&e.slots);

    let erased: Vec<&SlotTrace> = e.slots.iter().filter(|s| !s.xi).collect();
    let reset: Vec<&&SlotTrace> = erased.iter().filter(|s| src[s.t as usize].is_none()).collect();
    let erased_attacks: Vec<&&SlotTrace> = erased.iter().filter(|s| s.x_att).collect();
    let erased_reward: f64 = erased_attacks.iter().map(|s| s.reward).sum();
    check(reset.iter().all(|s| s.belief == mu0), || "erased belief differs from the prior".into())?;
    check(!erased_attacks.is_empty(), || "no attacks in erasure windows".into())?;
    check(erased_attacks.iter().all(|s| s.reward < 0.0), || {
        let t: Vec<u32> = erased_attacks.iter().filter(|s| s.reward >= 0.0).map(|s| s.t as u32).collect();
        format!("non-negative attack rewards in erasure windows at {t:?}")
    })?;
    let erasure = format!(
        "erasure: {} slots, {} attacks, realized {:.2} (all negative)",
        erased.len(),
        erased_attacks.len(),
        erased_reward
    );

    let deceptive: Vec<&SlotTrace> = e
        .slots
        .iter()
        .filter(|s| s.xi && src[s.t as usize].is_some_and(|p| e.slots[p].budget > 0.0))
        .collect();
    let low = deceptive.iter().filter(|s| s.belief < th - 1e-9).count();
    let attacked: Vec<&&SlotTrace> = deceptive.iter().filter(|s| s.x_att).collect();
    let lured = attacked.iter().filter(|s| s.reward < 0.0).count();
    let detail = format!(
        "{erasure}; deception: {} slots, {low} below the threshold, {} attacks ({lured} losing, realized {:.2})",
        deceptive.len(),
        attacked.len(),
        attacked.iter().map(|s| s.reward).sum::<f64>()
    );
    check(!deceptive.is_empty(), || format!("no deception slots; {detail}"))?;
    check(low == 0 && attacked.is_empty(), || detail.clone())?;
    Ok(detail)
}

fn main() {
    let mut ok = true;
    ok &= criterion(1, "channel validity", Some(Duration::from_secs(30)), channel_validity);
    ok &= criterion(2, "attacker oracle", Some(Duration::from_secs(60)), attacker_oracle);
    ok &= criterion(3, "persuasion oracle", None, persuasion_oracle);
    ok &= criterion(4, "credibility identity", None, credibility_identity);
    ok &= criterion(5, "drift and monotonicity", None, lyapunov_suite);
    ok &= criterion(6, "scheduler quality", Some(Duration::from_secs(300)), scheduler_quality);

    let t0 = Instant::now();
    let prep = Prepared::new(ScenarioConfig::default()).expect("reference scenario");
    let seeds: Vec<u64> = (0..20).collect();
    let episodes = runner::run_all(&prep, &PolicyKind::ALL, &seeds);
    let suite_time = t0.elapsed();
    let episodes = episodes.map_err(|e| e.to_string());
    ok &= criterion(7, "benchmark orderings", None, || {
        let d = orderings(episodes.as_ref().map_err(Clone::clone)?)?;
        check(suite_time < Duration::from_secs(600), || format!("suite took {suite_time:.1?}"))?;
        Ok(format!("{d}; 100 episodes in {suite_time:.1?}"))
    });
    ok &= criterion(8, "deception effectiveness", None, || deception(episodes.as_ref().map_err(Clone::clone)?, &seeds));
    credibility_sweep(&prep, &seeds);
    ok &= criterion(9, "belief dynamics", None, belief_dynamics);

    if !ok {
        std::process::exit(1);
    }
}
