//! Streaming response-time tails on a fixed log-spaced grid.
//!
//! Nothing stores raw samples. Each record lands in the histogram bucket
//! between two grid points, and exceedance counts `#{T > t_j}` are suffix
//! sums of the buckets, so they are exact at grid points and merging two
//! estimates is plain integer addition.

use std::collections::HashMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{SizeDistribution, SystemParams};
use crate::sim::{Completion, Directive, Interval, Observer};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("estimate is empty")]
    Empty,
    #[error("t={t} lies below the first grid point {first}")]
    BelowGrid { t: f64, first: f64 },
    #[error("percentile {p} is beyond the grid's resolution")]
    OutOfGrid { p: f64 },
    #[error("cannot merge estimates built on different grids")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no qualifying jobs")]
    NoQualifyingJobs,
}

/// Strictly increasing evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn from_points(points: Vec<f64>) -> Result<Self, StatsError> {
        if points.is_empty() {
            return Err(StatsError::InvalidGrid("no points".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(StatsError::InvalidGrid("non-finite point".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StatsError::InvalidGrid("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `count` points spaced evenly in log scale, both ends included.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self, StatsError> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
            return Err(StatsError::InvalidGrid(format!("need 0 < lo < hi and >= 2 points, got lo={lo} hi={hi} count={count}")));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (count - 1) as f64;
        let mut points: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
        points[0] = lo;
        points[count - 1] = hi;
        Self::from_points(points)
    }

    /// From the median job size up to ten times the `1 - 1e-8` size quantile.
    pub fn for_distribution(dist: &SizeDistribution, count: usize) -> Result<Self, StatsError> {
        let lo = dist.tail_quantile(0.5);
        let hi = dist.tail_quantile(1e-8) * 10.0;
        Self::log_spaced(lo, hi, count)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of grid points strictly below `x`.
    fn rank(&self, x: f64) -> usize {
        self.points.partition_point(|&t| t < x)
    }
}

/// Empirical tail of response times, with the tail of the job sizes of
/// the same completed jobs kept alongside for pathwise comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    grid: Grid,
    /// `response[k]` counts records with exactly `k` grid points below them.
    response: Vec<u64>,
    size: Vec<u64>,
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl TailEstimate {
    pub fn new(grid: Grid) -> Self {
        let buckets = grid.len() + 1;
        Self { grid, response: vec![0; buckets], size: vec![0; buckets], count: 0, sum: 0.0, sum_sq: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn record(&mut self, original_size: f64, response_time: f64) {
        debug_assert!(response_time >= 0.0);
        self.response[self.grid.rank(response_time)] += 1;
        self.size[self.grid.rank(original_size)] += 1;
        self.count += 1;
        self.sum += response_time;
        self.sum_sq += response_time * response_time;
    }

    /// Adds another estimate on the same grid, as if its records had been
    /// fed to this one.
    pub fn merge(&mut self, other: &TailEstimate) -> Result<(), StatsError> {
        if self.grid != other.grid {
            return Err(StatsError::GridMismatch);
        }
        for (a, b) in self.response.iter_mut().zip(&other.response) {
            *a += b;
        }
        for (a, b) in self.size.iter_mut().zip(&other.size) {
            *a += b;
        }
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        Ok(())
    }

    /// `#{T > t_j}` for every grid point.
    pub fn exceedances(&self) -> Vec<u64> {
        suffix_counts(&self.response)
    }

    /// `#{S > t_j}` over the same completed jobs.
    pub fn size_exceedances(&self) -> Vec<u64> {
        suffix_counts(&self.size)
    }

    /// `P{T > t}`, exact at grid points and constant between them.
    pub fn ccdf(&self, t: f64) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        let pts = self.grid.points();
        let j = pts.partition_point(|&g| g <= t);
        if j == 0 {
            return Err(StatsError::BelowGrid { t, first: pts[0] });
        }
        let above: u64 = self.response[j..].iter().sum();
        Ok(above as f64 / self.count as f64)
    }

    /// Smallest grid point whose empirical tail is at most `1 - p`. This
    /// is a grid-resolution quantile: the true one lies between this point
    /// and its predecessor.
    pub fn percentile(&self, p: f64) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        assert!(p > 0.0 && p < 1.0, "percentile level must lie in (0, 1)");
        let allowed = (1.0 - p) * self.count as f64;
        let c = self.exceedances();
        c.iter()
            .position(|&cj| cj as f64 <= allowed)
            .map(|j| self.grid.points()[j])
            .ok_or(StatsError::OutOfGrid { p })
    }

    /// Index of the grid point closest (in log scale) to the `p` percentile.
    pub fn percentile_index(&self, p: f64) -> Result<usize, StatsError> {
        let t = self.percentile(p)?;
        Ok(self.grid.points().partition_point(|&g| g < t))
    }

    pub fn mean(&self) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        Ok(self.sum / self.count as f64)
    }

    pub fn second_moment(&self) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        Ok(self.sum_sq / self.count as f64)
    }

    /// First grid index where fewer jobs exceed it in response time than in
    /// size. Response time is at least size for every job, so any hit is a
    /// bookkeeping bug.
    pub fn dominance_violation(&self) -> Option<usize> {
        let t = self.exceedances();
        let s = self.size_exceedances();
        t.iter().zip(&s).position(|(ct, cs)| ct < cs)
    }

    /// `P{T > t_j} / P{S > t_j}` against the law's tail, one row per grid
    /// point where both are positive.
    pub fn ratio_table<F: Fn(f64) -> f64>(&self, denominator: F) -> Vec<TailRow> {
        if self.count == 0 {
            return Vec::new();
        }
        let n = self.count as f64;
        self.grid
            .points()
            .iter()
            .zip(self.exceedances())
            .filter_map(|(&t, c)| {
                let den = denominator(t);
                if c == 0 || !(den >= 1e-300) {
                    return None;
                }
                let ccdf = c as f64 / n;
                Some(TailRow { t, ccdf, denominator: den, ratio: ccdf / den })
            })
            .collect()
    }
}

fn suffix_counts(buckets: &[u64]) -> Vec<u64> {
    let mut out = vec![0; buckets.len() - 1];
    let mut acc = 0;
    for j in (0..out.len()).rev() {
        acc += buckets[j + 1];
        out[j] = acc;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub ccdf: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// The lower-bound denominator for a system: `P{S > t}` below the high-load
/// regime, `P{S > n(1-rho) t}` in it.
pub fn tail_denominator(dist: &SizeDistribution, params: &SystemParams, t: f64) -> f64 {
    if params.is_high_load() {
        dist.tail(params.n as f64 * (1.0 - params.rho) * t)
    } else {
        dist.tail(t)
    }
}

/// `P{T > t}` over the regime's lower bound, one row per grid point.
/// Rows with an empty tail or a vanishing denominator are dropped.
pub fn normalized_tail(estimate: &TailEstimate, dist: &SizeDistribution, params: &SystemParams) -> Vec<TailRow> {
    estimate.ratio_table(|t| tail_denominator(dist, params, t))
}

pub fn write_tail_csv<W: Write>(mut out: W, rows: &[TailRow]) -> io::Result<()> {
    writeln!(out, "t,ccdf_T,denominator,normalized")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.t, r.ccdf, r.denominator, r.ratio)?;
    }
    Ok(())
}

/// Observer feeding completed post-warmup jobs into a tail estimate, plus
/// optional per-size-class estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailSink {
    pub all: TailEstimate,
    /// Split at a threshold `d`: `(d, S <= d, S > d)`.
    pub by_threshold: Option<(f64, TailEstimate, TailEstimate)>,
    /// Size deciles of the law: upper edges of the first nine classes.
    pub decile_edges: Vec<f64>,
    pub deciles: Vec<TailEstimate>,
}

impl TailSink {
    pub fn new(grid: Grid) -> Self {
        Self { all: TailEstimate::new(grid), by_threshold: None, decile_edges: Vec::new(), deciles: Vec::new() }
    }

    pub fn with_threshold(mut self, d: f64) -> Self {
        let g = self.all.grid().clone();
        self.by_threshold = Some((d, TailEstimate::new(g.clone()), TailEstimate::new(g)));
        self
    }

    pub fn with_deciles(mut self, dist: &SizeDistribution) -> Self {
        let g = self.all.grid().clone();
        self.decile_edges = (1..10).map(|k| dist.tail_quantile(1.0 - k as f64 / 10.0)).collect();
        self.deciles = vec![TailEstimate::new(g); 10];
        self
    }

    pub fn record(&mut self, size: f64, response: f64) {
        self.all.record(size, response);
        if let Some((d, small, big)) = &mut self.by_threshold {
            if size <= *d {
                small.record(size, response);
            } else {
                big.record(size, response);
            }
        }
        if !self.deciles.is_empty() {
            let k = self.decile_edges.partition_point(|&e| e < size);
            self.deciles[k].record(size, response);
        }
    }

    pub fn merge(&mut self, other: &TailSink) -> Result<(), StatsError> {
        self.all.merge(&other.all)?;
        match (&mut self.by_threshold, &other.by_threshold) {
            (Some((d, s, b)), Some((od, os, ob))) if d == od => {
                s.merge(os)?;
                b.merge(ob)?;
            }
            (None, None) => {}
            _ => return Err(StatsError::GridMismatch),
        }
        if self.decile_edges != other.decile_edges {
            return Err(StatsError::GridMismatch);
        }
        for (a, b) in self.deciles.iter_mut().zip(&other.deciles) {
            a.merge(b)?;
        }
        Ok(())
    }
}

impl Observer for TailSink {
    fn on_completion(&mut self, done: &Completion) {
        if done.recorded {
            self.record(done.original_size, done.response_time);
        }
    }
}

/// For jobs of size `x >= size_floor`, whether the dedicated (LJF) server
/// started them within `sqrt(x)` of their arrival.
#[derive(Debug, Clone, Default)]
pub struct LjfPromptness {
    size_floor: f64,
    server: usize,
    current: Option<u64>,
    started: HashMap<u64, f64>,
    qualifying: u64,
    prompt: u64,
}

impl LjfPromptness {
    pub fn new(size_floor: f64) -> Self {
        assert!(size_floor > 0.0);
        Self { size_floor, ..Default::default() }
    }

    pub fn qualifying(&self) -> u64 {
        self.qualifying
    }

    pub fn prompt(&self) -> u64 {
        self.prompt
    }

    pub fn fraction(&self) -> Result<f64, StatsError> {
        if self.qualifying == 0 {
            return Err(StatsError::NoQualifyingJobs);
        }
        Ok(self.prompt as f64 / self.qualifying as f64)
    }
}

impl Observer for LjfPromptness {
    fn on_interval(&mut self, iv: &Interval<'_>) {
        let on = iv.alloc.servers[self.server].job().map(|s| &iv.jobs[s]);
        let id = on.map(|j| j.id);
        if id != self.current {
            if let Some(j) = on {
                if j.original_size >= self.size_floor {
                    self.started.entry(j.id).or_insert(iv.start);
                }
            }
            self.current = id;
        }
    }

    fn on_completion(&mut self, done: &Completion) {
        let start = self.started.remove(&done.id);
        if !done.recorded || done.original_size < self.size_floor {
            return;
        }
        self.qualifying += 1;
        if start.is_some_and(|s| s <= done.arrival_time + done.original_size.sqrt()) {
            self.prompt += 1;
        }
    }
}

/// Service received by one tagged job and how much of it overlapped with
/// idle servers elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PackingRecord {
    pub id: u64,
    pub size: f64,
    pub service_time: f64,
    /// Time-weighted idle fraction of the other servers, integrated over
    /// the tagged job's service.
    pub idle_time: f64,
}

/// Packing quality while very large jobs run: how much of their service
/// time the other servers sit idle.
#[derive(Debug, Clone, Default)]
pub struct PackingProbe {
    floor: f64,
    open: HashMap<u64, PackingRecord>,
    pub records: Vec<PackingRecord>,
}

impl PackingProbe {
    /// Jobs with original size at or above `floor` are tagged.
    pub fn new(floor: f64) -> Self {
        Self { floor, ..Default::default() }
    }

    /// Tags the top `1e-4` of the size law.
    pub fn for_distribution(dist: &SizeDistribution) -> Self {
        Self::new(dist.tail_quantile(1e-4))
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn p_idle(&self) -> Result<f64, StatsError> {
        let service: f64 = self.records.iter().map(|r| r.service_time).sum();
        if self.records.is_empty() || service <= 0.0 {
            return Err(StatsError::NoQualifyingJobs);
        }
        let idle: f64 = self.records.iter().map(|r| r.idle_time).sum();
        Ok(idle / service)
    }

    fn credit(&mut self, id: u64, size: f64, dt: f64, idle_share: f64) {
        let r = self.open.entry(id).or_insert(PackingRecord { id, size, ..Default::default() });
        r.service_time += dt;
        r.idle_time += dt * idle_share;
    }
}

impl Observer for PackingProbe {
    fn on_interval(&mut self, iv: &Interval<'_>) {
        let n = iv.alloc.servers.len();
        if n < 2 {
            return;
        }
        let idle = iv.alloc.servers.iter().filter(|d| **d == Directive::Idle).count();
        let share = idle as f64 / (n - 1) as f64;
        for d in &iv.alloc.servers {
            match *d {
                Directive::Serve { job, .. } => {
                    let j = &iv.jobs[job];
                    if j.original_size >= self.floor {
                        self.credit(j.id, j.original_size, iv.duration, share);
                    }
                }
                Directive::ShareEqually => {
                    for &s in &iv.alloc.shared {
                        let j = &iv.jobs[s];
                        if j.original_size >= self.floor {
                            self.credit(j.id, j.original_size, iv.duration, share);
                        }
                    }
                }
                Directive::Idle => {}
            }
        }
    }

    fn on_completion(&mut self, done: &Completion) {
        if let Some(r) = self.open.remove(&done.id) {
            if done.recorded {
                self.records.push(r);
            }
        }
    }
}
