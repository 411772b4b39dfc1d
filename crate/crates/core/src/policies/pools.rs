//! Server groups reused by the composite policies. A pool owns a fixed list
//! of server indices, of which the first `capacity` are usable at any time.

use std::collections::{BTreeSet, VecDeque};

use crate::sim::{Allocation, Directive, JobTable, RankKey, Slot};

/// Preemptive shortest-remaining-first over a group of servers.
///
/// Waiting jobs are keyed by their remaining size, which is frozen while
/// they wait; served jobs only shrink, so an SRPT order is stable between
/// events.
#[derive(Debug, Clone)]
pub struct SrptPool {
    positions: Vec<usize>,
    served: Vec<Option<Slot>>,
    waiting: BTreeSet<RankKey>,
    scratch: Vec<RankKey>,
    desired: Vec<Slot>,
}

impl SrptPool {
    pub fn new(positions: Vec<usize>) -> Self {
        let served = vec![None; positions.len()];
        Self { positions, served, waiting: BTreeSet::new(), scratch: Vec::new(), desired: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.waiting.len() + self.served.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.waiting.is_empty() && self.served.iter().all(Option::is_none)
    }

    pub fn insert(&mut self, jobs: &JobTable, slot: Slot) {
        self.waiting.insert(RankKey::remaining(jobs, slot));
    }

    /// Drops a job wherever it sits. Returns false if it was not here.
    pub fn remove(&mut self, jobs: &JobTable, slot: Slot) -> bool {
        if let Some(p) = self.served.iter().position(|s| *s == Some(slot)) {
            self.served[p] = None;
            return true;
        }
        self.waiting.remove(&RankKey::remaining(jobs, slot))
    }

    pub fn contains(&self, jobs: &JobTable, slot: Slot) -> bool {
        self.served.contains(&Some(slot)) || self.waiting.contains(&RankKey::remaining(jobs, slot))
    }

    pub fn served(&self) -> impl Iterator<Item = Slot> + '_ {
        self.served.iter().flatten().copied()
    }

    pub fn waiting(&self) -> impl Iterator<Item = Slot> + '_ {
        self.waiting.iter().map(|k| k.slot)
    }

    /// Serves the `capacity` smallest remaining sizes.
    pub fn rebalance(&mut self, jobs: &JobTable, capacity: usize, alloc: &mut Allocation) {
        let capacity = capacity.min(self.positions.len());
        self.vacate_from(jobs, capacity);
        let mut cands = std::mem::take(&mut self.scratch);
        cands.clear();
        cands.extend(self.served[..capacity].iter().flatten().map(|&s| RankKey::remaining(jobs, s)));
        cands.extend(self.waiting.iter().take(capacity).copied());
        cands.sort_unstable();
        cands.truncate(capacity);
        let mut desired = std::mem::take(&mut self.desired);
        desired.clear();
        desired.extend(cands.iter().map(|k| k.slot));
        self.scratch = cands;
        self.assign(jobs, &desired, capacity, alloc);
        self.desired = desired;
    }

    /// Serves exactly `desired` (at most `capacity` jobs of this pool).
    pub fn assign(&mut self, jobs: &JobTable, desired: &[Slot], capacity: usize, alloc: &mut Allocation) {
        let capacity = capacity.min(self.positions.len());
        debug_assert!(desired.len() <= capacity);
        self.vacate_from(jobs, capacity);
        for p in 0..capacity {
            if let Some(s) = self.served[p] {
                if !desired.contains(&s) {
                    self.waiting.insert(RankKey::remaining(jobs, s));
                    self.served[p] = None;
                }
            }
        }
        for &s in desired {
            if self.served[..capacity].contains(&Some(s)) {
                continue;
            }
            let removed = self.waiting.remove(&RankKey::remaining(jobs, s));
            debug_assert!(removed, "assigning a job the pool does not hold");
            let p = self.served[..capacity]
                .iter()
                .position(Option::is_none)
                .expect("free position");
            self.served[p] = Some(s);
        }
        for p in 0..capacity {
            alloc.servers[self.positions[p]] = match self.served[p] {
                Some(s) => Directive::serve(s),
                None => Directive::Idle,
            };
        }
    }

    fn vacate_from(&mut self, jobs: &JobTable, capacity: usize) {
        for p in capacity..self.positions.len() {
            if let Some(s) = self.served[p].take() {
                self.waiting.insert(RankKey::remaining(jobs, s));
            }
        }
    }
}

/// Non-preemptive first-come-first-served with a central queue.
#[derive(Debug, Clone)]
pub struct FcfsPool {
    positions: Vec<usize>,
    in_service: Vec<Option<Slot>>,
    queue: VecDeque<Slot>,
}

impl FcfsPool {
    pub fn new(positions: Vec<usize>) -> Self {
        let in_service = vec![None; positions.len()];
        Self { positions, in_service, queue: VecDeque::new() }
    }

    pub fn len(&self) -> usize {
        self.queue.len() + self.in_service.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty() && self.in_service.iter().all(Option::is_none)
    }

    pub fn insert(&mut self, slot: Slot) {
        self.queue.push_back(slot);
    }

    pub fn remove(&mut self, slot: Slot) -> bool {
        if let Some(p) = self.in_service.iter().position(|s| *s == Some(slot)) {
            self.in_service[p] = None;
            return true;
        }
        match self.queue.iter().position(|&s| s == slot) {
            Some(i) => {
                self.queue.remove(i);
                true
            }
            None => false,
        }
    }

    pub fn in_service(&self) -> impl Iterator<Item = Slot> + '_ {
        self.in_service.iter().flatten().copied()
    }

    pub fn queued(&self) -> impl Iterator<Item = Slot> + '_ {
        self.queue.iter().copied()
    }

    /// Jobs keep their server; free positions below `capacity` take the
    /// queue head in order. A job on a position at or beyond `capacity` is
    /// preempted back to the head of the queue, which it left last.
    pub fn rebalance(&mut self, capacity: usize, migrate_at: Option<f64>, alloc: &mut Allocation) -> usize {
        let capacity = capacity.min(self.positions.len());
        let mut preempted = 0;
        for p in (capacity..self.positions.len()).rev() {
            if let Some(s) = self.in_service[p].take() {
                self.queue.push_front(s);
                preempted += 1;
            }
        }
        for p in 0..capacity {
            if self.in_service[p].is_none() {
                self.in_service[p] = self.queue.pop_front();
            }
            alloc.servers[self.positions[p]] = match self.in_service[p] {
                Some(job) => Directive::Serve { job, migrate_at },
                None => Directive::Idle,
            };
        }
        preempted
    }
}
