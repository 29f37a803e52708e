use proptest::prelude::*;
use stardis_core::instances::{quality, random_instance};
use stardis_core::star::*;

#[test]
fn greedy_plans_pass_the_checker() {
    for seed in 0..300 {
        let inst = random_instance(seed, 5..=100);
        let plan = inst.greedy();
        let v = check_plan(&plan, &inst.specs, &inst.star.scan, TsMode::Capped);
        assert!(v.is_empty(), "seed {seed}: {v:?}");
    }
}

#[test]
fn exact_dominates_greedy() {
    let report = quality(10_000, 30, 8);
    for (i, &(g, e)) in report.pairs.iter().enumerate() {
        assert!(g <= e + 1e-9, "instance {i}: greedy {g} above exact {e}");
    }
    assert!(report.mean_ratio() > 0.5, "{}", report.mean_ratio());
}

#[test]
fn exact_plans_pass_the_checker() {
    let mut checked = 0;
    for seed in 20_000..20_060 {
        let inst = random_instance(seed, 5..=8);
        let greedy = inst.greedy();
        let Ok(exact) = inst.exact(&greedy) else { continue };
        let v = check_plan(&exact, &inst.specs, &inst.star.scan, TsMode::Capped);
        assert!(v.is_empty(), "seed {seed}: {v:?}");
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn planning_is_deterministic() {
    for seed in [3, 17, 99] {
        let inst = random_instance(seed, 20..=60);
        assert_eq!(inst.greedy(), inst.greedy());
    }
}

#[test]
fn scan_blocks_stay_whole_and_inside_the_window() {
    for seed in 0..100 {
        let inst = random_instance(seed, 5..=40);
        let plan = inst.greedy();
        let d = inst.star.scan.duration as usize;
        let mut run = 0;
        for &s in plan.x_scan.iter().chain([false].iter()) {
            if s {
                run += 1;
            } else {
                assert_eq!(run % d, 0, "seed {seed}");
                run = 0;
            }
        }
    }
}

proptest! {
    #[test]
    fn detection_is_increasing(f in 0.0f64..1.0, df in 1e-6f64..1.0, d_s in 1u32..10) {
        let p = UtilityParams::default();
        prop_assert!(detection_performance(f + df, d_s, &p) > detection_performance(f, d_s, &p));
        prop_assert!(detection_performance(f.max(1e-3), d_s + 1, &p) > detection_performance(f.max(1e-3), d_s, &p));
    }

    #[test]
    fn utility_falls_with_load(y in 0.0f64..1.0, z in 0.0f64..1.0, dz in 0.0f64..1.0, scan: bool) {
        let p = UtilityParams::default();
        let lower = (z - dz).max(0.0);
        prop_assert!(slot_utility(y, scan, lower, &p) <= slot_utility(y, scan, z, &p));
    }
}

#[test]
fn slot_utility_examples() {
    let p = UtilityParams::default();
    assert!((slot_utility(1.0, false, 1.0, &p) - 10.0).abs() < 1e-12);
    assert!((slot_utility(1.0, true, 0.0, &p) - (10.0 - 0.5 - 2.0)).abs() < 1e-12);
    assert_eq!(slot_utility(0.0, false, 0.3, &p), 0.0);
}
