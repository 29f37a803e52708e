//! Reference schedulers: first-come-first-served and static priority.

use alloc::vec::Vec;

use crate::star::{scan_marginal, Packer, ReadyTask, SchedEnv, SlotDecision, SlotScheduler, WindowState};
use crate::workload::{Priority, Slot};

use super::config::Packing;

fn packer(packing: Packing, env: &SchedEnv) -> Packer {
    let dim = env.star.scan.demand.dim();
    match packing {
        Packing::Vector => Packer::new(dim, env.star.p_max),
        Packing::Scalar => Packer::scalar(dim, env.star.p_max),
    }
}

fn finish(mut out: SlotDecision, p: Packer) -> SlotDecision {
    out.run.sort();
    out.z = p.z();
    out.power = p.power;
    out.used = p.used;
    out
}

/// Non-preemptive arrival-order service with head-of-line blocking.
///
/// Scans enter the same FIFO as jobs, one pending at a time, when the
/// marginal-utility rule asks for one.
#[derive(Debug, Clone)]
pub struct FcfsScheduler {
    packing: Packing,
    scan_pending: Option<Slot>,
}

impl FcfsScheduler {
    pub fn new(packing: Packing) -> Self {
        FcfsScheduler { packing, scan_pending: None }
    }
}

impl SlotScheduler for FcfsScheduler {
    fn schedule(&mut self, t: Slot, ready: &[ReadyTask], window: &mut WindowState, env: &SchedEnv) -> SlotDecision {
        let scan = &env.star.scan;
        let mut p = packer(self.packing, env);
        let mut out = SlotDecision::default();

        if window.scan_left > 0 {
            if !p.try_add(&scan.demand, scan.power()) {
                out.infeasible = true;
            }
            out.scan = true;
        }
        for r in ready.iter().filter(|r| r.running) {
            if p.try_add(&r.spec.demand, r.spec.power()) {
                out.run.push(r.id);
            } else {
                out.infeasible = true;
            }
        }

        if env.star.scanning && self.scan_pending.is_none() && window.scan_left == 0 && scan_marginal(&p, window, env) > 0.0 {
            self.scan_pending = Some(t);
        }

        // Waiting jobs by release, the pending scan after jobs released no later than it.
        let mut waiting: Vec<(Slot, u8, usize)> =
            ready.iter().enumerate().filter(|(_, r)| !r.running).map(|(i, r)| (r.release, 0, i)).collect();
        if let Some(s) = self.scan_pending {
            waiting.push((s, 1, usize::MAX));
        }
        waiting.sort();
        for (_, kind, i) in waiting {
            if kind == 1 {
                if window.scan_left > 0 || t + scan.duration > window.end() {
                    // Cannot complete inside the window: withdrawn, re-requested later.
                    self.scan_pending = None;
                    continue;
                }
                if !p.try_add(&scan.demand, scan.power()) {
                    break;
                }
                self.scan_pending = None;
                out.scan = true;
                out.scan_started = true;
                window.scan_left = scan.duration;
                window.scan_slots += scan.duration;
            } else {
                let r = &ready[i];
                if !p.try_add(&r.spec.demand, r.spec.power()) {
                    break;
                }
                out.run.push(r.id);
            }
        }
        finish(out, p)
    }
}

/// Preemptive fixed priority: scan, then high-priority work by deadline,
/// then low-priority work in arrival order.
#[derive(Debug, Clone)]
pub struct SpScheduler {
    packing: Packing,
}

impl SpScheduler {
    pub fn new(packing: Packing) -> Self {
        SpScheduler { packing }
    }
}

impl SlotScheduler for SpScheduler {
    fn schedule(&mut self, t: Slot, ready: &[ReadyTask], window: &mut WindowState, env: &SchedEnv) -> SlotDecision {
        let scan = &env.star.scan;
        let mut p = packer(self.packing, env);
        let mut out = SlotDecision::default();

        if window.scan_left > 0 {
            if !p.try_add(&scan.demand, scan.power()) {
                out.infeasible = true;
            }
            out.scan = true;
        } else if env.star.scanning
            && t + scan.duration <= window.end()
            && scan_marginal(&p, window, env) > 0.0
            && p.try_add(&scan.demand, scan.power())
        {
            out.scan = true;
            out.scan_started = true;
            window.scan_left = scan.duration;
            window.scan_slots += scan.duration;
        }

        let mut high: Vec<&ReadyTask> = ready.iter().filter(|r| r.spec.priority == Priority::High).collect();
        high.sort_by_key(|r| (r.deadline, r.id));
        for r in high {
            if p.try_add(&r.spec.demand, r.spec.power()) {
                out.run.push(r.id);
            } else {
                out.infeasible = true;
            }
        }
        let mut low: Vec<&ReadyTask> = ready.iter().filter(|r| r.spec.priority == Priority::Low).collect();
        low.sort_by_key(|r| (r.release, r.id));
        for r in low {
            if p.try_add(&r.spec.demand, r.spec.power()) {
                out.run.push(r.id);
            }
        }
        finish(out, p)
    }
}

/// Any of the three schedulers behind one type.
#[derive(Debug, Clone)]
pub enum AnyScheduler {
    Fcfs(FcfsScheduler),
    Sp(SpScheduler),
    Star(crate::star::StarScheduler),
}

impl SlotScheduler for AnyScheduler {
    fn schedule(&mut self, t: Slot, ready: &[ReadyTask], window: &mut WindowState, env: &SchedEnv) -> SlotDecision {
        match self {
            AnyScheduler::Fcfs(s) => s.schedule(t, ready, window, env),
            AnyScheduler::Sp(s) => s.schedule(t, ready, window, env),
            AnyScheduler::Star(s) => s.schedule(t, ready, window, env),
        }
    }
}
