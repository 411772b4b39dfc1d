use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::distributions::SizeDistribution;

/// Source of `(arrival_time, size)` pairs in non-decreasing time order.
pub trait Arrivals {
    fn next_arrival(&mut self) -> Option<(f64, f64)>;
}

/// Deterministic RNG substream named after its role, so that e.g. the
/// size sequence does not depend on how many inter-arrival draws happened.
pub fn rng_stream(seed: u64, name: &str) -> ChaCha8Rng {
    // FNV-1a; stable across platforms and releases
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

/// Poisson arrivals with i.i.d. sizes.
pub struct PoissonArrivals {
    lambda: f64,
    dist: SizeDistribution,
    gaps: ChaCha8Rng,
    sizes: ChaCha8Rng,
    clock: f64,
    left: u64,
}

impl PoissonArrivals {
    pub fn new(lambda: f64, dist: SizeDistribution, count: u64, seed: u64) -> Self {
        Self {
            lambda,
            dist,
            gaps: rng_stream(seed, "arrivals"),
            sizes: rng_stream(seed, "sizes"),
            clock: 0.0,
            left: count,
        }
    }
}

impl Arrivals for PoissonArrivals {
    fn next_arrival(&mut self) -> Option<(f64, f64)> {
        if self.left == 0 || self.lambda <= 0.0 {
            return None;
        }
        self.left -= 1;
        let u: f64 = self.gaps.gen();
        self.clock += -(1.0 - u).ln() / self.lambda;
        Some((self.clock, self.dist.sample(&mut self.sizes)))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("arrivals not sorted: line {line} has time {time} after {previous}")]
    Unsorted { line: usize, time: f64, previous: f64 },
}

/// Explicit arrival list.
#[derive(Debug, Clone, Default)]
pub struct TraceArrivals {
    items: Vec<(f64, f64)>,
    next: usize,
}

impl TraceArrivals {
    pub fn new(items: Vec<(f64, f64)>) -> Result<Self, TraceError> {
        let mut previous = f64::NEG_INFINITY;
        for (i, &(time, size)) in items.iter().enumerate() {
            if !(time.is_finite() && time >= 0.0) {
                return Err(TraceError::Malformed { line: i + 1, reason: format!("bad time {time}") });
            }
            if !(size.is_finite() && size > 0.0) {
                return Err(TraceError::Malformed { line: i + 1, reason: format!("bad size {size}") });
            }
            if time < previous {
                return Err(TraceError::Unsorted { line: i + 1, time, previous });
            }
            previous = time;
        }
        Ok(Self { items, next: 0 })
    }

    pub fn items(&self) -> &[(f64, f64)] {
        &self.items
    }
}

impl Arrivals for TraceArrivals {
    fn next_arrival(&mut self) -> Option<(f64, f64)> {
        let item = self.items.get(self.next).copied();
        self.next += 1;
        item
    }
}

/// Parses `arrival_time,size` lines. A first line that does not parse as
/// numbers is taken as a header; blank lines and `#` comments are skipped.
pub fn parse_trace(text: &str) -> Result<TraceArrivals, TraceError> {
    let mut items = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| TraceError::Malformed { line: i + 1, reason };
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| malformed(format!("expected `time,size`, got `{line}`")))?;
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(t), Ok(s)) => items.push((t, s)),
            _ if items.is_empty() && i == 0 => continue,
            _ => return Err(malformed(format!("not numeric: `{line}`"))),
        }
    }
    let trace = TraceArrivals::new(items)?;
    Ok(trace)
}
