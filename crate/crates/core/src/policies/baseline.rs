use super::pools::{FcfsPool, SrptPool};
use super::SekSize;
use crate::sim::{Allocation, Directive, Event, JobTable, Policy, RankKey, Slot};

/// Central-queue FCFS over `n` servers, non-preemptive.
pub struct FcfsN {
    n: usize,
    pool: FcfsPool,
}

impl FcfsN {
    pub fn new(n: usize) -> Self {
        Self { n, pool: FcfsPool::new((0..n).collect()) }
    }
}

impl Policy for FcfsN {
    fn label(&self) -> String {
        "fcfs".into()
    }

    fn servers(&self) -> usize {
        self.n
    }

    fn update(&mut self, event: Event, _jobs: &JobTable, alloc: &mut Allocation) {
        match event {
            Event::Arrival(s) => self.pool.insert(s),
            Event::Completion(s) => {
                self.pool.remove(s);
            }
            Event::Migration(_) | Event::Reevaluate => {}
        }
        self.pool.rebalance(self.n, None, alloc);
    }
}

/// Preemptive SRPT over `n` servers.
pub struct SrptN {
    n: usize,
    pool: SrptPool,
}

impl SrptN {
    pub fn new(n: usize) -> Self {
        Self { n, pool: SrptPool::new((0..n).collect()) }
    }
}

impl Policy for SrptN {
    fn label(&self) -> String {
        "srpt".into()
    }

    fn servers(&self) -> usize {
        self.n
    }

    fn update(&mut self, event: Event, jobs: &JobTable, alloc: &mut Allocation) {
        match event {
            Event::Arrival(s) => self.pool.insert(jobs, s),
            Event::Completion(s) => {
                self.pool.remove(jobs, s);
            }
            Event::Migration(_) | Event::Reevaluate => {}
        }
        self.pool.rebalance(jobs, self.n, alloc);
    }
}

/// SRPT-n with the SEK exception.
///
/// A job counts as large when its size exceeds `eps` and as small
/// otherwise, so a remaining size that shrinks onto `eps` switches class
/// at exactly that instant. Under the remaining-size reading a served job
/// can cross `eps` between events; the policy asks for a re-evaluation at
/// the earliest such crossing whenever `n+1` jobs are present.
pub struct SekN {
    n: usize,
    eps: f64,
    size: SekSize,
    pool: SrptPool,
    ranked: Vec<RankKey>,
    desired: Vec<Slot>,
    exception_events: u64,
}

impl SekN {
    pub fn new(n: usize, eps: f64, size: SekSize) -> Self {
        Self {
            n,
            eps,
            size,
            pool: SrptPool::new((0..n).collect()),
            ranked: Vec::with_capacity(n + 1),
            desired: Vec::with_capacity(n),
            exception_events: 0,
        }
    }

    fn key(&self, jobs: &JobTable, s: Slot) -> RankKey {
        match self.size {
            SekSize::Remaining => RankKey::remaining(jobs, s),
            SekSize::Original => RankKey::original(jobs, s),
        }
    }
}

impl Policy for SekN {
    fn label(&self) -> String {
        match self.size {
            SekSize::Remaining => format!("sek:eps={}", self.eps),
            SekSize::Original => format!("sek:eps={},size=original", self.eps),
        }
    }

    fn servers(&self) -> usize {
        self.n
    }

    fn update(&mut self, event: Event, jobs: &JobTable, alloc: &mut Allocation) {
        match event {
            Event::Arrival(s) => self.pool.insert(jobs, s),
            Event::Completion(s) => {
                self.pool.remove(jobs, s);
            }
            Event::Migration(_) | Event::Reevaluate => {}
        }
        alloc.reevaluate_in = None;
        if self.pool.len() != self.n + 1 {
            self.pool.rebalance(jobs, self.n, alloc);
            return;
        }
        let mut ranked = std::mem::take(&mut self.ranked);
        ranked.clear();
        ranked.extend(self.pool.served().chain(self.pool.waiting()).map(|s| self.key(jobs, s)));
        ranked.sort_unstable();
        let largest = ranked[self.n];
        let exception = largest.size > self.eps && ranked[self.n - 1].size <= self.eps;
        if exception {
            self.exception_events += 1;
            self.desired.clear();
            self.desired.extend(ranked[..self.n - 1].iter().map(|k| k.slot));
            self.desired.push(largest.slot);
            let desired = std::mem::take(&mut self.desired);
            self.pool.assign(jobs, &desired, self.n, alloc);
            self.desired = desired;
            if self.size == SekSize::Remaining {
                alloc.reevaluate_in = Some(largest.size - self.eps);
            }
        } else {
            self.pool.rebalance(jobs, self.n, alloc);
            if self.size == SekSize::Remaining {
                alloc.reevaluate_in = self
                    .pool
                    .served()
                    .map(|s| jobs[s].remaining - self.eps)
                    .filter(|&gap| gap > 0.0)
                    .min_by(f64::total_cmp);
            }
        }
        self.ranked = ranked;
    }

    fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![("sek_exception_events", self.exception_events)]
    }
}

/// Every job shares one server equally.
pub struct SinglePs;

impl SinglePs {
    pub fn new() -> Self {
        SinglePs
    }
}

impl Default for SinglePs {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for SinglePs {
    fn label(&self) -> String {
        "ps".into()
    }

    fn servers(&self) -> usize {
        1
    }

    fn dedicated_server(&self) -> Option<usize> {
        Some(0)
    }

    fn update(&mut self, event: Event, _jobs: &JobTable, alloc: &mut Allocation) {
        match event {
            Event::Arrival(s) => alloc.shared.push(s),
            Event::Completion(s) => {
                if let Some(i) = alloc.shared.iter().position(|&x| x == s) {
                    alloc.shared.remove(i);
                }
            }
            Event::Migration(_) | Event::Reevaluate => {}
        }
        alloc.servers[0] = if alloc.shared.is_empty() { Directive::Idle } else { Directive::ShareEqually };
    }
}
