use super::pools::{FcfsPool, SrptPool};
use super::SmallPolicy;
use crate::sim::{Allocation, Event, JobTable, Policy, Slot};

enum SmallServers {
    Fcfs(FcfsPool),
    Srpt(SrptPool),
}

/// Size-threshold split: jobs with original size above `d` are big and
/// run SRPT-1 on server 0; small jobs run on servers `1..n` under FCFS or
/// SRPT-(n-1).
///
/// With stealing, server 0 joins the small pool as its last position
/// whenever no big job is present, so it only picks up a small job once
/// the small servers are all busy. A big arrival shrinks the pool back and
/// the stolen job is preempted.
pub struct SplitThresh {
    n: usize,
    d: f64,
    steal: bool,
    big: SrptPool,
    small: SmallServers,
    stolen: Option<Slot>,
    steals: u64,
    steal_preemptions: u64,
}

impl SplitThresh {
    pub fn new(n: usize, d: f64, small: SmallPolicy, steal: bool) -> Self {
        assert!(n >= 2, "SplitThresh needs at least two servers");
        let mut positions: Vec<usize> = (1..n).collect();
        if steal {
            positions.push(0);
        }
        let small = match small {
            SmallPolicy::Fcfs => SmallServers::Fcfs(FcfsPool::new(positions)),
            SmallPolicy::Srpt => SmallServers::Srpt(SrptPool::new(positions)),
        };
        Self {
            n,
            d,
            steal,
            big: SrptPool::new(vec![0]),
            small,
            stolen: None,
            steals: 0,
            steal_preemptions: 0,
        }
    }

    fn is_big(&self, jobs: &JobTable, s: Slot) -> bool {
        jobs[s].original_size > self.d
    }
}

impl Policy for SplitThresh {
    fn label(&self) -> String {
        let small = match self.small {
            SmallServers::Fcfs(_) => "fcfs",
            SmallServers::Srpt(_) => "srpt",
        };
        format!("splitthresh:d={},small={small},steal={}", self.d, self.steal)
    }

    fn servers(&self) -> usize {
        self.n
    }

    fn dedicated_server(&self) -> Option<usize> {
        Some(0)
    }

    fn update(&mut self, event: Event, jobs: &JobTable, alloc: &mut Allocation) {
        match event {
            Event::Arrival(s) if self.is_big(jobs, s) => self.big.insert(jobs, s),
            Event::Arrival(s) => match &mut self.small {
                SmallServers::Fcfs(p) => p.insert(s),
                SmallServers::Srpt(p) => p.insert(jobs, s),
            },
            Event::Completion(s) if self.is_big(jobs, s) => {
                self.big.remove(jobs, s);
            }
            Event::Completion(s) => {
                if self.stolen == Some(s) {
                    self.stolen = None;
                }
                match &mut self.small {
                    SmallServers::Fcfs(p) => p.remove(s),
                    SmallServers::Srpt(p) => p.remove(jobs, s),
                };
            }
            Event::Migration(_) | Event::Reevaluate => {}
        }

        let lend = self.steal && self.big.is_empty();
        let capacity = self.n - 1 + lend as usize;
        match &mut self.small {
            SmallServers::Fcfs(p) => {
                p.rebalance(capacity, None, alloc);
            }
            SmallServers::Srpt(p) => p.rebalance(jobs, capacity, alloc),
        }
        if lend {
            let on_zero = alloc.servers[0].job();
            if on_zero.is_some() && on_zero != self.stolen {
                self.steals += 1;
            }
            self.stolen = on_zero;
        } else {
            if self.stolen.take().is_some() {
                self.steal_preemptions += 1;
            }
            self.big.rebalance(jobs, 1, alloc);
        }
    }

    fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![("steals", self.steals), ("steal_preemptions", self.steal_preemptions)]
    }
}
