//! Closed-form queueing results and a deliberately naive reference engine.
//!
//! The reference engine shares nothing with [`crate::sim`] except the
//! policy description: it rebuilds the whole allocation from the list of
//! live jobs after every event, using sorts and linear scans.

use serde::Serialize;
use thiserror::Error;

use crate::distributions::{Moment, SizeDistribution};
use crate::policies::{PolicyError, PolicySpec, SekSize, SmallPolicy};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("unstable system: load {rho} >= 1")]
    Unstable { rho: f64 },
    #[error("oracle does not apply: {0}")]
    Inapplicable(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("reference engine made no progress at t={0}")]
    Stuck(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub name: &'static str,
    pub value: f64,
    pub units: &'static str,
}

/// M/M/1 mean response time `1/(mu - lambda)`.
pub fn mm1_mean_response(lambda: f64, mu: f64) -> Result<OracleResult, OracleError> {
    if lambda >= mu {
        return Err(OracleError::Unstable { rho: lambda / mu });
    }
    Ok(OracleResult { name: "mm1_mean_response", value: 1.0 / (mu - lambda), units: "time" })
}

/// Pollaczek-Khinchine mean waiting time of M/G/1 FCFS.
pub fn pk_mean_wait(lambda: f64, dist: &SizeDistribution) -> Result<OracleResult, OracleError> {
    let rho = lambda * dist.mean();
    if rho >= 1.0 {
        return Err(OracleError::Unstable { rho });
    }
    let m2 = match dist.second_moment() {
        Moment::Finite(m) => m,
        Moment::Infinite => return Err(OracleError::Inapplicable(format!("{dist} has an infinite second moment"))),
    };
    Ok(OracleResult { name: "pk_mean_wait", value: lambda * m2 / (2.0 * (1.0 - rho)), units: "time" })
}

/// M/G/1 processor-sharing mean response time, `E[S]/(1 - rho)`.
pub fn ps_mean_response(lambda: f64, dist: &SizeDistribution) -> Result<OracleResult, OracleError> {
    let rho = lambda * dist.mean();
    if rho >= 1.0 {
        return Err(OracleError::Unstable { rho });
    }
    Ok(OracleResult { name: "ps_mean_response", value: dist.mean() / (1.0 - rho), units: "time" })
}

const EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct RefJob {
    arrival: f64,
    size: f64,
    rem: f64,
    attained: f64,
    migrated: bool,
    done: Option<f64>,
}

/// One service assignment: job index, rate, and an optional migration
/// point in attained service.
type Grant = (usize, f64, Option<f64>);

struct Naive {
    n: usize,
    spec: PolicySpec,
    /// Job held by each server for disciplines where that matters (FCFS
    /// positions, the LJF commitment).
    holder: Vec<Option<usize>>,
}

impl Naive {
    fn allocate(&mut self, jobs: &[RefJob], live: &[usize]) -> (Vec<Grant>, Option<f64>) {
        let n = self.n;
        match self.spec {
            PolicySpec::Fcfs => {
                let order: Vec<usize> = (0..n).collect();
                let served = self.fcfs_fill(live, &order, |_| true);
                (served.into_iter().map(|j| (j, 1.0, None)).collect(), None)
            }
            PolicySpec::Srpt => (smallest_remaining(jobs, live, n).into_iter().map(|j| (j, 1.0, None)).collect(), None),
            PolicySpec::Sek { eps, size } => self.sek(jobs, live, eps, size),
            PolicySpec::Split => {
                if self.holder[0].is_none_or(|j| jobs[j].done.is_some()) {
                    // largest original size, earliest arrival on ties
                    self.holder[0] = live.iter().copied().reduce(|a, b| if jobs[b].size > jobs[a].size { b } else { a });
                }
                let ljf = self.holder[0];
                let rest: Vec<usize> = live.iter().copied().filter(|&j| Some(j) != ljf).collect();
                let mut out: Vec<Grant> = smallest_remaining(jobs, &rest, n - 1).into_iter().map(|j| (j, 1.0, None)).collect();
                out.extend(ljf.map(|j| (j, 1.0, None)));
                (out, None)
            }
            PolicySpec::SplitThresh { d, small, steal } => {
                let big: Vec<usize> = live.iter().copied().filter(|&j| jobs[j].size > d).collect();
                let little: Vec<usize> = live.iter().copied().filter(|&j| jobs[j].size <= d).collect();
                let lend = steal && big.is_empty();
                let mut out: Vec<Grant> = Vec::new();
                match small {
                    SmallPolicy::Fcfs => {
                        let mut order: Vec<usize> = (1..n).collect();
                        if lend {
                            order.push(0);
                        }
                        let served = self.fcfs_fill(&little, &order, |j| jobs[j].size <= d);
                        out.extend(served.into_iter().map(|j| (j, 1.0, None)));
                    }
                    SmallPolicy::Srpt => {
                        let cap = n - 1 + lend as usize;
                        out.extend(smallest_remaining(jobs, &little, cap).into_iter().map(|j| (j, 1.0, None)));
                    }
                }
                out.extend(smallest_remaining(jobs, &big, 1).into_iter().map(|j| (j, 1.0, None)));
                (out, None)
            }
            PolicySpec::TagSplit { d } => {
                let fresh: Vec<usize> = live.iter().copied().filter(|&j| !jobs[j].migrated).collect();
                let order: Vec<usize> = (1..n).collect();
                let served = self.fcfs_fill(&fresh, &order, |j| !jobs[j].migrated);
                let mut out: Vec<Grant> = served.into_iter().map(|j| (j, 1.0, Some(d))).collect();
                let ps: Vec<usize> = live.iter().copied().filter(|&j| jobs[j].migrated).collect();
                let k = ps.len() as f64;
                out.extend(ps.into_iter().map(|j| (j, 1.0 / k, None)));
                (out, None)
            }
            PolicySpec::Ps => {
                let k = live.len() as f64;
                (live.iter().map(|&j| (j, 1.0 / k, None)).collect(), None)
            }
        }
    }

    /// Non-preemptive FCFS over server positions `order`: holders keep
    /// their server while it stays in `order` and they stay eligible; free
    /// positions take waiting jobs in arrival order.
    fn fcfs_fill(&mut self, live: &[usize], order: &[usize], eligible: impl Fn(usize) -> bool) -> Vec<usize> {
        for s in 0..self.n {
            if let Some(j) = self.holder[s] {
                if !order.contains(&s) || !live.contains(&j) || !eligible(j) {
                    self.holder[s] = None;
                }
            }
        }
        let mut waiting: Vec<usize> = live.iter().copied().filter(|j| !self.holder.contains(&Some(*j))).collect();
        waiting.sort();
        let mut waiting = waiting.into_iter();
        for &s in order {
            if self.holder[s].is_none() {
                self.holder[s] = waiting.next();
            }
        }
        order.iter().filter_map(|&s| self.holder[s]).collect()
    }

    fn sek(&self, jobs: &[RefJob], live: &[usize], eps: f64, size: SekSize) -> (Vec<Grant>, Option<f64>) {
        let n = self.n;
        let key = |j: usize| match size {
            SekSize::Remaining => jobs[j].rem,
            SekSize::Original => jobs[j].size,
        };
        if live.len() != n + 1 {
            return (smallest_remaining(jobs, live, n).into_iter().map(|j| (j, 1.0, None)).collect(), None);
        }
        // the exception predicate reads sizes through `key`; otherwise SRPT
        let mut sorted = live.to_vec();
        sorted.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        let largest = sorted[n];
        let served: Vec<usize> = if key(largest) > eps && key(sorted[n - 1]) <= eps {
            sorted[..n - 1].iter().copied().chain([largest]).collect()
        } else {
            smallest_remaining(jobs, live, n)
        };
        let wake = match size {
            SekSize::Original => None,
            SekSize::Remaining => served.iter().map(|&j| jobs[j].rem - eps).filter(|&g| g > 0.0).reduce(f64::min),
        };
        (served.into_iter().map(|j| (j, 1.0, None)).collect(), wake)
    }
}

fn smallest_remaining(jobs: &[RefJob], pool: &[usize], k: usize) -> Vec<usize> {
    let mut v = pool.to_vec();
    v.sort_by(|&a, &b| jobs[a].rem.total_cmp(&jobs[b].rem).then(a.cmp(&b)));
    v.truncate(k);
    v
}

#[derive(Clone, Copy)]
enum Step {
    Complete(usize),
    Migrate(usize, f64),
    Arrive,
    Wake,
}

/// Per-job response times for a scripted trace of `(arrival_time, size)`
/// pairs sorted by time.
pub fn reference_simulate(trace: &[(f64, f64)], spec: &PolicySpec, n: usize) -> Result<Vec<f64>, OracleError> {
    spec.validate(n)?;
    let mut naive = Naive { n, spec: *spec, holder: vec![None; n] };
    let mut jobs: Vec<RefJob> = Vec::with_capacity(trace.len());
    let mut clock = 0.0;
    let mut next = 0;
    let budget = 100 * trace.len() + 1000;
    for _ in 0..budget {
        let live: Vec<usize> = (0..jobs.len()).filter(|&j| jobs[j].done.is_none()).collect();
        if live.is_empty() && next == trace.len() {
            return Ok(jobs.iter().map(|j| j.done.unwrap() - j.arrival).collect());
        }
        let (grants, wake) = naive.allocate(&jobs, &live);

        // (dt, rank, job id) decides; completions before migrations before
        // arrivals before re-evaluations.
        let mut best: Option<(f64, u8, usize, Step)> = None;
        let mut offer = |dt: f64, rank: u8, id: usize, step: Step| {
            let dt = dt.max(0.0);
            if best.is_none_or(|(bd, br, bi, _)| (dt, rank, id) < (bd, br, bi)) {
                best = Some((dt, rank, id, step));
            }
        };
        for &(j, rate, migrate) in &grants {
            offer(jobs[j].rem / rate, 0, j, Step::Complete(j));
            if let Some(m) = migrate {
                if m < jobs[j].size {
                    offer((m - jobs[j].attained) / rate, 1, j, Step::Migrate(j, m));
                }
            }
        }
        if next < trace.len() {
            offer(trace[next].0 - clock, 2, jobs.len(), Step::Arrive);
        }
        if let Some(w) = wake {
            offer(w, 3, 0, Step::Wake);
        }
        let Some((dt, _, _, step)) = best else {
            return Err(OracleError::Stuck(clock));
        };

        for &(j, rate, _) in &grants {
            let job = &mut jobs[j];
            job.rem -= dt * rate;
            job.attained += dt * rate;
            if job.rem <= EPS {
                job.rem = 0.0;
                job.attained = job.size;
            }
        }
        clock += dt;
        match step {
            Step::Complete(j) => {
                jobs[j].rem = 0.0;
                jobs[j].done = Some(clock);
            }
            Step::Migrate(j, m) => {
                jobs[j].attained = m;
                jobs[j].rem = jobs[j].size - m;
                jobs[j].migrated = true;
            }
            Step::Arrive => {
                let (t, size) = trace[next];
                clock = t;
                jobs.push(RefJob { arrival: t, size, rem: size, attained: 0.0, migrated: false, done: None });
                next += 1;
            }
            Step::Wake => {}
        }
    }
    Err(OracleError::Stuck(clock))
}

/// A short randomized trace for engine cross-checks: Poisson arrivals at
/// a random load with sizes from one of several laws, and occasional
/// simultaneous arrivals so tie rules get exercised.
pub fn random_trace(seed: u64, jobs: usize, n: usize) -> Vec<(f64, f64)> {
    use rand::Rng;
    let mut rng = crate::sim::rng_stream(seed, "random-trace");
    let dist = match rng.gen_range(0..4) {
        0 => SizeDistribution::pareto(1.5, 1.0),
        1 => SizeDistribution::exponential(0.5),
        2 => SizeDistribution::deterministic(2.0),
        _ => SizeDistribution::bounded_pareto(1.2, 1.0, 200.0),
    }
    .expect("fixed parameters are valid");
    let rho = rng.gen_range(0.3..0.95);
    let lambda = n as f64 * rho / dist.mean();
    let mut t = 0.0;
    (0..jobs)
        .map(|_| {
            if rng.gen::<f64>() >= 0.1 {
                t += -(1.0 - rng.gen::<f64>()).ln() / lambda;
            }
            (t, dist.sample(&mut rng))
        })
        .collect()
}
