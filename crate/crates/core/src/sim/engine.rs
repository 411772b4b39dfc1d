use serde::Serialize;
use thiserror::Error;

use super::{
    Allocation, Arrivals, Completion, Directive, Event, Interval, Job, JobTable, Observer, Policy,
    Slot, Stage,
};

/// Remaining sizes at or below this are treated as finished.
pub const COMPLETION_EPS: f64 = 1e-12;

/// Consecutive zero-length events tolerated before declaring a livelock.
const MAX_ZERO_STREAK: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation stalled at t={time}: {live} live jobs but no pending event")]
    Stalled { time: f64, live: usize },
    #[error("invalid allocation at t={time}: {reason}")]
    InvalidAllocation { time: f64, reason: String },
    #[error("arrival at {time} precedes clock {clock}")]
    UnsortedArrivals { time: f64, clock: f64 },
}

/// Aggregate outputs of one run. Means cover recorded (post-warmup) jobs.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub policy: String,
    pub arrivals: u64,
    pub completions: u64,
    pub recorded: u64,
    pub mean_response: f64,
    pub mean_size: f64,
    pub max_response: f64,
    pub end_time: f64,
    pub events: u64,
    pub work_arrived: f64,
    pub work_served: f64,
    pub counters: Vec<(String, u64)>,
}

impl SimResult {
    /// Mean of `T - S` over recorded jobs; the FCFS waiting time.
    pub fn mean_wait(&self) -> f64 {
        self.mean_response - self.mean_size
    }
}

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

#[derive(Debug, Clone, Copy)]
enum Next {
    Completion(Slot),
    Migration(Slot, f64),
    Arrival,
    Reevaluate,
}

pub struct Engine<P, A> {
    policy: P,
    arrivals: A,
    n: usize,
    clock: f64,
    jobs: JobTable,
    alloc: Allocation,
    served: Vec<Option<Slot>>,
    pending: Option<(f64, f64)>,
    /// Time left until the policy's requested re-evaluation. Kept relative
    /// to the clock so that tiny gaps are not lost to rounding.
    reevaluate_in: Option<f64>,
    next_id: u64,
    warmup: u64,
    events: u64,
    zero_streak: u64,
    completions: u64,
    recorded: u64,
    response_sum: KahanSum,
    size_sum: KahanSum,
    max_response: f64,
    work_arrived: KahanSum,
    work_served: KahanSum,
}

impl<P: Policy, A: Arrivals> Engine<P, A> {
    /// Jobs with id below `warmup` are simulated but not recorded.
    pub fn new(policy: P, mut arrivals: A, warmup: u64) -> Self {
        let n = policy.servers();
        let pending = arrivals.next_arrival();
        Self {
            policy,
            arrivals,
            n,
            clock: 0.0,
            jobs: JobTable::new(),
            alloc: Allocation::idle(n),
            served: vec![None; n],
            pending,
            reevaluate_in: None,
            next_id: 0,
            warmup,
            events: 0,
            zero_streak: 0,
            completions: 0,
            recorded: 0,
            response_sum: KahanSum::default(),
            size_sum: KahanSum::default(),
            max_response: 0.0,
            work_arrived: KahanSum::default(),
            work_served: KahanSum::default(),
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn jobs(&self) -> &JobTable {
        &self.jobs
    }

    pub fn allocation(&self) -> &Allocation {
        &self.alloc
    }

    pub fn policy(&self) -> &P {
        &self.policy
    }

    pub fn work_arrived(&self) -> f64 {
        self.work_arrived.sum
    }

    pub fn work_served(&self) -> f64 {
        self.work_served.sum
    }

    /// `arrived - remaining - served`; zero up to rounding.
    pub fn work_residual(&self) -> f64 {
        self.work_arrived.sum - self.jobs.remaining_work() - self.work_served.sum
    }

    fn next_event(&self) -> Option<(f64, Next)> {
        let mut best: Option<(f64, u8, u64, Next)> = None;
        let mut consider = |dt: f64, rank: u8, id: u64, next: Next| {
            let dt = dt.max(0.0);
            let better = match best {
                None => true,
                Some((bdt, brank, bid, _)) => (dt, rank, id) < (bdt, brank, bid),
            };
            if better {
                best = Some((dt, rank, id, next));
            }
        };
        for d in &self.alloc.servers {
            match *d {
                Directive::Idle => {}
                Directive::Serve { job, migrate_at } => {
                    let j = &self.jobs[job];
                    consider(j.remaining, 0, j.id, Next::Completion(job));
                    if let Some(m) = migrate_at {
                        if m < j.original_size {
                            consider(m - j.attained, 1, j.id, Next::Migration(job, m));
                        }
                    }
                }
                Directive::ShareEqually => {
                    let k = self.alloc.shared.len() as f64;
                    for &s in &self.alloc.shared {
                        let j = &self.jobs[s];
                        consider(j.remaining * k, 0, j.id, Next::Completion(s));
                    }
                }
            }
        }
        if let Some((t, _)) = self.pending {
            consider(t - self.clock, 2, self.next_id, Next::Arrival);
        }
        if let Some(dt) = self.reevaluate_in {
            consider(dt, 3, 0, Next::Reevaluate);
        }
        best.map(|(dt, _, _, next)| (dt, next))
    }

    fn advance(&mut self, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        let mut busy = 0usize;
        for d in &self.alloc.servers {
            match *d {
                Directive::Idle => {}
                Directive::Serve { job, .. } => {
                    busy += 1;
                    drain(&mut self.jobs[job], dt);
                }
                Directive::ShareEqually => {
                    if self.alloc.shared.is_empty() {
                        continue;
                    }
                    busy += 1;
                    let per = dt / self.alloc.shared.len() as f64;
                    for &s in &self.alloc.shared {
                        drain(&mut self.jobs[s], per);
                    }
                }
            }
        }
        self.work_served.add(dt * busy as f64);
        self.clock += dt;
        if let Some(r) = &mut self.reevaluate_in {
            *r = (*r - dt).max(0.0);
        }
    }

    /// Processes the next event. Returns `None` once arrivals are exhausted
    /// and the system has drained.
    pub fn step(&mut self, observers: &mut [&mut dyn Observer]) -> Result<Option<Event>, SimError> {
        let Some((dt, next)) = self.next_event() else {
            if self.jobs.is_empty() {
                return Ok(None);
            }
            return Err(SimError::Stalled { time: self.clock, live: self.jobs.live() });
        };
        if dt > 0.0 {
            self.zero_streak = 0;
            if !observers.is_empty() {
                let iv = Interval { start: self.clock, duration: dt, alloc: &self.alloc, jobs: &self.jobs };
                for o in observers.iter_mut() {
                    o.on_interval(&iv);
                }
            }
        } else {
            self.zero_streak += 1;
            if self.zero_streak > MAX_ZERO_STREAK {
                return Err(SimError::Stalled { time: self.clock, live: self.jobs.live() });
            }
        }
        self.advance(dt);
        self.events += 1;

        let event = match next {
            Next::Completion(slot) => {
                let job = &mut self.jobs[slot];
                job.remaining = 0.0;
                job.attained = job.original_size;
                let done = Completion {
                    id: job.id,
                    arrival_time: job.arrival_time,
                    original_size: job.original_size,
                    response_time: self.clock - job.arrival_time,
                    recorded: job.id >= self.warmup,
                };
                self.completions += 1;
                if done.recorded {
                    self.recorded += 1;
                    self.response_sum.add(done.response_time);
                    self.size_sum.add(done.original_size);
                    self.max_response = self.max_response.max(done.response_time);
                }
                for o in observers.iter_mut() {
                    o.on_completion(&done);
                }
                Event::Completion(slot)
            }
            Next::Migration(slot, at) => {
                let job = &mut self.jobs[slot];
                job.attained = at;
                job.remaining = job.original_size - at;
                job.stage = Stage::MigratedToPs;
                Event::Migration(slot)
            }
            Next::Arrival => {
                let (time, size) = self.pending.take().expect("arrival event without pending arrival");
                self.clock = time;
                let slot = self.jobs.insert(Job {
                    id: self.next_id,
                    arrival_time: time,
                    original_size: size,
                    remaining: size,
                    attained: 0.0,
                    stage: Stage::Queued,
                });
                self.next_id += 1;
                self.work_arrived.add(size);
                self.pending = self.arrivals.next_arrival();
                if let Some((t, _)) = self.pending {
                    if t < time {
                        return Err(SimError::UnsortedArrivals { time: t, clock: time });
                    }
                }
                Event::Arrival(slot)
            }
            Next::Reevaluate => {
                self.reevaluate_in = None;
                Event::Reevaluate
            }
        };

        self.policy.update(event, &self.jobs, &mut self.alloc);
        self.reevaluate_in = self.alloc.reevaluate_in.take().map(|d| d.max(0.0));
        if let Event::Completion(slot) = event {
            self.jobs.remove(slot);
        }
        if cfg!(debug_assertions) {
            self.validate()?;
        }
        self.sync_stages();
        Ok(Some(event))
    }

    fn sync_stages(&mut self) {
        for s in 0..self.n {
            if let Some(old) = self.served[s] {
                if self.jobs.is_live(old) && self.jobs[old].stage == Stage::InService(s) {
                    self.jobs[old].stage = Stage::Queued;
                }
            }
        }
        for s in 0..self.n {
            let now = self.alloc.servers[s].job();
            if let Some(job) = now {
                self.jobs[job].stage = Stage::InService(s);
            }
            self.served[s] = now;
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |reason: String| Err(SimError::InvalidAllocation { time: self.clock, reason });
        if self.alloc.servers.len() != self.n {
            return bad(format!("{} directives for {} servers", self.alloc.servers.len(), self.n));
        }
        for (s, d) in self.alloc.servers.iter().enumerate() {
            match *d {
                Directive::Idle => {}
                Directive::Serve { job, .. } => {
                    if !self.jobs.is_live(job) {
                        return bad(format!("server {s} serves a dead job"));
                    }
                    let twice = self.alloc.servers[s + 1..].iter().any(|o| o.job() == Some(job));
                    if twice || self.alloc.shared.contains(&job) {
                        return bad(format!("job {} allocated twice", self.jobs[job].id));
                    }
                }
                Directive::ShareEqually => {
                    if self.policy.dedicated_server() != Some(s) {
                        return bad(format!("server {s} shares but is not the designated PS server"));
                    }
                }
            }
        }
        if let Some(&s) = self.alloc.shared.iter().find(|&&s| !self.jobs.is_live(s)) {
            return bad(format!("dead job in shared set (slot {})", s.index()));
        }
        Ok(())
    }

    /// Runs to completion and summarises.
    pub fn run(mut self, observers: &mut [&mut dyn Observer]) -> Result<SimResult, SimError> {
        while self.step(observers)?.is_some() {}
        Ok(self.finish())
    }

    pub fn finish(self) -> SimResult {
        let recorded = self.recorded.max(1) as f64;
        SimResult {
            policy: self.policy.label(),
            arrivals: self.next_id,
            completions: self.completions,
            recorded: self.recorded,
            mean_response: self.response_sum.sum / recorded,
            mean_size: self.size_sum.sum / recorded,
            max_response: self.max_response,
            end_time: self.clock,
            events: self.events,
            work_arrived: self.work_arrived.sum,
            work_served: self.work_served.sum,
            counters: self.policy.counters().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

fn drain(job: &mut Job, amount: f64) {
    job.remaining -= amount;
    job.attained += amount;
    if job.remaining <= COMPLETION_EPS {
        job.remaining = 0.0;
        job.attained = job.original_size;
    }
}

/// Convenience wrapper around [`Engine`].
pub fn simulate<P: Policy, A: Arrivals>(
    policy: P,
    arrivals: A,
    warmup: u64,
    observers: &mut [&mut dyn Observer],
) -> Result<SimResult, SimError> {
    Engine::new(policy, arrivals, warmup).run(observers)
}
