use super::pools::FcfsPool;
use crate::sim::{Allocation, Directive, Event, JobTable, Policy, Stage};

/// Size-oblivious split. Every arrival queues for the FCFS servers
/// `1..n`; a job that reaches `d` units of service without finishing
/// leaves its server and joins the processor-sharing set on server 0.
pub struct TagSplit {
    n: usize,
    d: f64,
    fcfs: FcfsPool,
    migrations: u64,
}

impl TagSplit {
    pub fn new(n: usize, d: f64) -> Self {
        assert!(n >= 2, "TAG-SPLIT needs at least two servers");
        Self { n, d, fcfs: FcfsPool::new((1..n).collect()), migrations: 0 }
    }
}

impl Policy for TagSplit {
    fn label(&self) -> String {
        format!("tagsplit:d={}", self.d)
    }

    fn servers(&self) -> usize {
        self.n
    }

    fn dedicated_server(&self) -> Option<usize> {
        Some(0)
    }

    fn update(&mut self, event: Event, jobs: &JobTable, alloc: &mut Allocation) {
        match event {
            Event::Arrival(s) => self.fcfs.insert(s),
            Event::Completion(s) if jobs[s].stage == Stage::MigratedToPs => {
                let i = alloc.shared.iter().position(|&x| x == s).expect("PS job in shared set");
                alloc.shared.remove(i);
            }
            Event::Completion(s) => {
                self.fcfs.remove(s);
            }
            Event::Migration(s) => {
                self.fcfs.remove(s);
                alloc.shared.push(s);
                self.migrations += 1;
            }
            Event::Reevaluate => {}
        }
        self.fcfs.rebalance(self.n - 1, Some(self.d), alloc);
        alloc.servers[0] = if alloc.shared.is_empty() { Directive::Idle } else { Directive::ShareEqually };
    }

    fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![("migrations", self.migrations)]
    }
}
