//! Invariant checks that watch every inter-event interval of a run.
//!
//! Each audit is an [`Observer`]; attach it to a run and inspect the
//! report afterwards. They walk the whole job table per interval, so they
//! are meant for audit runs, not for production-length experiments.

use crate::sim::{Directive, Interval, JobTable, Observer, Slot, Stage};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub intervals: u64,
    pub violations: u64,
    pub first: Option<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn flag(&mut self, what: impl FnOnce() -> String) {
        self.violations += 1;
        if self.first.is_none() {
            self.first = Some(what());
        }
    }
}

/// Total service rate equals `min(live jobs, n)` on every interval.
#[derive(Debug, Default)]
pub struct WorkConservationAudit {
    pub report: AuditReport,
}

impl Observer for WorkConservationAudit {
    fn on_interval(&mut self, iv: &Interval<'_>) {
        self.report.intervals += 1;
        let rate = iv.alloc.total_rate();
        let want = iv.jobs.live().min(iv.alloc.servers.len());
        if rate != want {
            self.report.flag(|| format!("t={}: rate {rate} with {} live jobs", iv.start, iv.jobs.live()));
        }
    }
}

fn served_on(iv: &Interval<'_>, servers: impl Iterator<Item = usize>) -> Vec<Slot> {
    servers.filter_map(|s| iv.alloc.servers[s].job()).collect()
}

fn unserved<'a>(iv: &'a Interval<'_>, jobs: &'a JobTable) -> impl Iterator<Item = Slot> + 'a {
    jobs.iter_live().filter(|(_, j)| j.stage == Stage::Queued).map(|(s, _)| s).filter(move |&s| {
        !iv.alloc.servers.iter().any(|d| d.job() == Some(s)) && !iv.alloc.shared.contains(&s)
    })
}

/// No waiting job in `pool` has a smaller remaining size than a job being
/// served there (ties go to the earlier arrival).
fn srpt_ordered(iv: &Interval<'_>, served: &[Slot], waiting: impl Iterator<Item = Slot>) -> Result<(), String> {
    let key = |s: Slot| (iv.jobs[s].remaining, iv.jobs[s].id);
    let Some(worst) = served.iter().map(|&s| key(s)).max_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))) else {
        return Ok(());
    };
    for w in waiting {
        let k = key(w);
        if k.0 < worst.0 || (k.0 == worst.0 && k.1 < worst.1) {
            return Err(format!("t={}: job {} waits with remaining {} while job {} runs with {}", iv.start, k.1, k.0, worst.1, worst.0));
        }
    }
    Ok(())
}

/// SPLIT: the LJF server never switches away from an unfinished job, and
/// the other servers hold the smallest remaining sizes among the rest.
#[derive(Debug, Default)]
pub struct SplitAudit {
    pub report: AuditReport,
    ljf: Option<(Slot, u64)>,
}

impl Observer for SplitAudit {
    fn on_interval(&mut self, iv: &Interval<'_>) {
        self.report.intervals += 1;
        let now = iv.alloc.servers[0].job().map(|s| (s, iv.jobs[s].id));
        if let Some((slot, id)) = self.ljf {
            let alive = iv.jobs.is_live(slot) && iv.jobs[slot].id == id;
            if alive && now != self.ljf {
                self.report.flag(|| format!("t={}: LJF server dropped unfinished job {id}", iv.start));
            }
        }
        self.ljf = now;
        let n = iv.alloc.servers.len();
        let served = served_on(iv, 1..n);
        let waiting = unserved(iv, iv.jobs);
        if let Err(e) = srpt_ordered(iv, &served, waiting) {
            self.report.flag(|| e);
        }
        if served.len() < n - 1 && unserved(iv, iv.jobs).next().is_some() {
            self.report.flag(|| format!("t={}: SRPT server idle while jobs wait", iv.start));
        }
    }
}

/// SplitThresh: big jobs only ever on server 0; small jobs on server 0
/// only when stealing and no big job is present; SRPT order on the big
/// server.
#[derive(Debug)]
pub struct ThreshPartitionAudit {
    pub report: AuditReport,
    d: f64,
    steal: bool,
}

impl ThreshPartitionAudit {
    pub fn new(d: f64, steal: bool) -> Self {
        Self { report: AuditReport::default(), d, steal }
    }
}

impl Observer for ThreshPartitionAudit {
    fn on_interval(&mut self, iv: &Interval<'_>) {
        self.report.intervals += 1;
        let d = self.d;
        let any_big = iv.jobs.iter_live().any(|(_, j)| j.original_size > d);
        for (i, dir) in iv.alloc.servers.iter().enumerate() {
            let Some(s) = dir.job() else { continue };
            let big = iv.jobs[s].original_size > d;
            let ok = match (i, big) {
                (0, true) => true,
                (0, false) => self.steal && !any_big,
                (_, true) => false,
                (_, false) => true,
            };
            if !ok {
                let id = iv.jobs[s].id;
                self.report.flag(|| format!("t={}: job {id} (big={big}) on server {i}", iv.start));
            }
        }
        if any_big {
            let served = served_on(iv, 0..1);
            let waiting = unserved(iv, iv.jobs).filter(|&s| iv.jobs[s].original_size > d);
            if let Err(e) = srpt_ordered(iv, &served, waiting) {
                self.report.flag(|| e);
            }
        }
    }
}

/// TAG-SPLIT: FCFS-stage service never exceeds `d`, only jobs larger than
/// `d` reach the processor-sharing server, and that server does nothing
/// else.
#[derive(Debug)]
pub struct TagSplitAudit {
    pub report: AuditReport,
    d: f64,
    /// Largest attained service seen on an FCFS server, including the
    /// service delivered during the interval.
    pub max_fcfs_attained: f64,
}

impl TagSplitAudit {
    pub fn new(d: f64) -> Self {
        Self { report: AuditReport::default(), d, max_fcfs_attained: 0.0 }
    }
}

impl Observer for TagSplitAudit {
    fn on_interval(&mut self, iv: &Interval<'_>) {
        self.report.intervals += 1;
        let d = self.d;
        for (i, dir) in iv.alloc.servers.iter().enumerate() {
            match (*dir, i) {
                (Directive::Serve { job, .. }, i) if i > 0 => {
                    let end = iv.jobs[job].attained + iv.duration;
                    self.max_fcfs_attained = self.max_fcfs_attained.max(end);
                    if end > d + 1e-9 {
                        let id = iv.jobs[job].id;
                        self.report.flag(|| format!("t={}: job {id} reaches {end} FCFS service", iv.start));
                    }
                }
                (Directive::Idle, _) | (Directive::ShareEqually, 0) => {}
                (other, i) => {
                    self.report.flag(|| format!("t={}: server {i} has unexpected {other:?}", iv.start));
                }
            }
        }
        for &s in &iv.alloc.shared {
            if iv.jobs[s].original_size <= d {
                let id = iv.jobs[s].id;
                self.report.flag(|| format!("t={}: job {id} of size <= d is at the PS server", iv.start));
            }
        }
    }
}

/// SRPT-n: the served set is the `n` smallest remaining sizes.
#[derive(Debug, Default)]
pub struct SrptAudit {
    pub report: AuditReport,
}

impl Observer for SrptAudit {
    fn on_interval(&mut self, iv: &Interval<'_>) {
        self.report.intervals += 1;
        let served = served_on(iv, 0..iv.alloc.servers.len());
        if let Err(e) = srpt_ordered(iv, &served, unserved(iv, iv.jobs)) {
            self.report.flag(|| e);
        }
    }
}
