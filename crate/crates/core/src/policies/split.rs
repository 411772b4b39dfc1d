use std::collections::BTreeSet;

use super::pools::SrptPool;
use crate::sim::{Allocation, Directive, Event, JobTable, Policy, RankKey, Slot};

/// Server 0 is a non-preemptive largest-job-first server; servers
/// `1..n` run SRPT over everything else.
///
/// Whenever the LJF server is free it commits to the live job with the
/// largest original size, pulling it off an SRPT server if necessary, and
/// keeps it until completion. An empty system makes the next arrival the
/// largest job, so the LJF server takes it.
pub struct Split {
    n: usize,
    ljf: Option<Slot>,
    pool: SrptPool,
    by_size: BTreeSet<RankKey>,
    commits: u64,
    pulled: u64,
}

impl Split {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "SPLIT needs at least two servers");
        Self {
            n,
            ljf: None,
            pool: SrptPool::new((1..n).collect()),
            by_size: BTreeSet::new(),
            commits: 0,
            pulled: 0,
        }
    }

    pub fn committed(&self) -> Option<Slot> {
        self.ljf
    }
}

impl Policy for Split {
    fn label(&self) -> String {
        "split".into()
    }

    fn servers(&self) -> usize {
        self.n
    }

    fn dedicated_server(&self) -> Option<usize> {
        Some(0)
    }

    fn update(&mut self, event: Event, jobs: &JobTable, alloc: &mut Allocation) {
        match event {
            Event::Arrival(s) => {
                self.pool.insert(jobs, s);
                self.by_size.insert(RankKey::largest_first(jobs, s));
            }
            Event::Completion(s) => {
                if self.ljf == Some(s) {
                    self.ljf = None;
                } else {
                    self.pool.remove(jobs, s);
                    self.by_size.remove(&RankKey::largest_first(jobs, s));
                }
            }
            Event::Migration(_) | Event::Reevaluate => {}
        }
        if self.ljf.is_none() {
            if let Some(top) = self.by_size.pop_first() {
                if self.pool.served().any(|s| s == top.slot) {
                    self.pulled += 1;
                }
                self.pool.remove(jobs, top.slot);
                self.ljf = Some(top.slot);
                self.commits += 1;
            }
        }
        self.pool.rebalance(jobs, self.n - 1, alloc);
        alloc.servers[0] = match self.ljf {
            Some(s) => Directive::serve(s),
            None => Directive::Idle,
        };
    }

    fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![("ljf_commits", self.commits), ("ljf_pulled_from_srpt", self.pulled)]
    }
}
