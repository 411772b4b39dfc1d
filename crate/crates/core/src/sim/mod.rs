//! Event-driven M/G/n engine with preempt-resume service.
//!
//! Between events every allocated job drains at a constant rate: 1 on a
//! dedicated server, `1/k` when `k` jobs share the processor-sharing
//! server. Policies see every event and rewrite the [`Allocation`] in
//! place; the engine only moves time forward and keeps the books.

mod arrivals;
mod engine;
mod job;

pub use arrivals::{parse_trace, rng_stream, Arrivals, PoissonArrivals, TraceArrivals, TraceError};
pub use engine::{simulate, Engine, SimError, SimResult, COMPLETION_EPS};
pub use job::{Job, JobTable, RankKey, Slot, Stage};

/// What a single server does until the next event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Directive {
    Idle,
    /// Serve one job at rate 1. With `migrate_at`, the engine raises a
    /// migration event when the job's attained service reaches that value.
    Serve { job: Slot, migrate_at: Option<f64> },
    /// Serve every job in [`Allocation::shared`] at rate `1/k`.
    ShareEqually,
}

impl Directive {
    pub fn serve(job: Slot) -> Self {
        Directive::Serve { job, migrate_at: None }
    }

    pub fn job(&self) -> Option<Slot> {
        match *self {
            Directive::Serve { job, .. } => Some(job),
            _ => None,
        }
    }
}

/// Per-server service assignment.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub servers: Vec<Directive>,
    /// Jobs in processor-sharing service.
    pub shared: Vec<Slot>,
    /// Ask to be consulted again after this much time even if nothing
    /// else happens (for policies whose decision depends on a moving
    /// remaining size).
    pub reevaluate_in: Option<f64>,
}

impl Allocation {
    pub fn idle(n: usize) -> Self {
        Self { servers: vec![Directive::Idle; n], shared: Vec::new(), reevaluate_in: None }
    }

    /// Sum of service rates handed out. Processor sharing counts once.
    pub fn total_rate(&self) -> usize {
        self.servers
            .iter()
            .filter(|d| match d {
                Directive::Idle => false,
                Directive::Serve { .. } => true,
                Directive::ShareEqually => !self.shared.is_empty(),
            })
            .count()
    }

    /// Service rate a given server gives to each of its jobs.
    pub fn share_rate(&self) -> f64 {
        1.0 / self.shared.len().max(1) as f64
    }
}

/// What just happened, as seen by a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Arrival(Slot),
    /// The job has `remaining == 0` and is removed right after the policy
    /// returns; the policy must drop every reference to it.
    Completion(Slot),
    /// The job's attained service reached its `migrate_at` threshold.
    Migration(Slot),
    Reevaluate,
}

/// A scheduling policy: it keeps private bookkeeping and rewrites the
/// allocation after each event.
pub trait Policy {
    fn label(&self) -> String;

    fn servers(&self) -> usize;

    /// Index of the server with a dedicated role (LJF, big-job, or PS).
    fn dedicated_server(&self) -> Option<usize> {
        None
    }

    fn update(&mut self, event: Event, jobs: &JobTable, alloc: &mut Allocation);

    fn counters(&self) -> Vec<(&'static str, u64)> {
        Vec::new()
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn label(&self) -> String {
        (**self).label()
    }
    fn servers(&self) -> usize {
        (**self).servers()
    }
    fn dedicated_server(&self) -> Option<usize> {
        (**self).dedicated_server()
    }
    fn update(&mut self, event: Event, jobs: &JobTable, alloc: &mut Allocation) {
        (**self).update(event, jobs, alloc)
    }
    fn counters(&self) -> Vec<(&'static str, u64)> {
        (**self).counters()
    }
}

/// A period of constant allocation, reported before time advances.
pub struct Interval<'a> {
    pub start: f64,
    pub duration: f64,
    pub alloc: &'a Allocation,
    pub jobs: &'a JobTable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completion {
    pub id: u64,
    pub arrival_time: f64,
    pub original_size: f64,
    pub response_time: f64,
    /// False for warmup jobs, which statistics sinks skip.
    pub recorded: bool,
}

/// Passive listener attached to a run.
pub trait Observer {
    fn on_interval(&mut self, _iv: &Interval<'_>) {}
    fn on_completion(&mut self, _done: &Completion) {}
}

impl<T: Observer + ?Sized> Observer for &mut T {
    fn on_interval(&mut self, iv: &Interval<'_>) {
        (**self).on_interval(iv)
    }
    fn on_completion(&mut self, done: &Completion) {
        (**self).on_completion(done)
    }
}

/// Collects every recorded completion; meant for traces and tests.
#[derive(Debug, Default, Clone)]
pub struct CompletionLog {
    pub completions: Vec<Completion>,
}

impl CompletionLog {
    /// Response times indexed by job id.
    pub fn response_times(&self) -> Vec<f64> {
        let mut v = self.completions.clone();
        v.sort_by_key(|c| c.id);
        v.iter().map(|c| c.response_time).collect()
    }
}

impl Observer for CompletionLog {
    fn on_completion(&mut self, done: &Completion) {
        if done.recorded {
            self.completions.push(*done);
        }
    }
}
