//! Job-size laws, their samplers, and the load/threshold formulas built on
//! top of them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("probability {0} outside [0, 1)")]
    Domain(f64),
    #[error("cannot parse distribution spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },
}

/// Analytic job-size distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeDistribution {
    /// `P{S>t} = (t/x_min)^-alpha` for `t >= x_min`.
    Pareto { alpha: f64, x_min: f64 },
    /// Pareto truncated to `[x_min, x_max]`.
    BoundedPareto { alpha: f64, x_min: f64, x_max: f64 },
    Exponential { rate: f64 },
    Deterministic { value: f64 },
}

/// A moment that may diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn finite(self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Infinite => None,
        }
    }
}

impl SizeDistribution {
    pub fn pareto(alpha: f64, x_min: f64) -> Result<Self, DistError> {
        Self::Pareto { alpha, x_min }.validated()
    }

    pub fn bounded_pareto(alpha: f64, x_min: f64, x_max: f64) -> Result<Self, DistError> {
        Self::BoundedPareto { alpha, x_min, x_max }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self, DistError> {
        Self::Exponential { rate }.validated()
    }

    pub fn deterministic(value: f64) -> Result<Self, DistError> {
        Self::Deterministic { value }.validated()
    }

    fn validated(self) -> Result<Self, DistError> {
        let bad = |msg: String| Err(DistError::InvalidParameter(msg));
        match self {
            Self::Pareto { alpha, x_min } => {
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return bad(format!("pareto alpha must be > 1 (finite mean), got {alpha}"));
                }
                if !(x_min > 0.0 && x_min.is_finite()) {
                    return bad(format!("pareto xmin must be > 0, got {x_min}"));
                }
            }
            Self::BoundedPareto { alpha, x_min, x_max } => {
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return bad(format!("bpareto alpha must be > 1, got {alpha}"));
                }
                if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
                    return bad(format!("bpareto needs 0 < xmin < xmax, got {x_min}, {x_max}"));
                }
            }
            Self::Exponential { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return bad(format!("exp rate must be > 0, got {rate}"));
                }
            }
            Self::Deterministic { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return bad(format!("det value must be > 0, got {value}"));
                }
            }
        }
        Ok(self)
    }

    /// `P{S > t}`. Right-continuous, so a deterministic atom at `v` gives
    /// `tail(v) == 0`.
    pub fn tail(&self, t: f64) -> f64 {
        match *self {
            Self::Pareto { alpha, x_min } => {
                if t <= x_min {
                    1.0
                } else {
                    (t / x_min).powf(-alpha)
                }
            }
            Self::BoundedPareto { alpha, x_min, x_max } => {
                if t <= x_min {
                    1.0
                } else if t >= x_max {
                    0.0
                } else {
                    let cut = (x_min / x_max).powf(alpha);
                    ((x_min / t).powf(alpha) - cut) / (1.0 - cut)
                }
            }
            Self::Exponential { rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-rate * t).exp()
                }
            }
            Self::Deterministic { value } => {
                if t < value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Smallest `t` with `P{S > t} <= q`, for `q` in `(0, 1]`.
    ///
    /// Working from the tail mass directly keeps full relative precision
    /// far out in the tail, where `1 - p` would cancel.
    pub fn tail_quantile(&self, q: f64) -> f64 {
        debug_assert!(q > 0.0 && q <= 1.0);
        match *self {
            Self::Pareto { alpha, x_min } => x_min * q.powf(-1.0 / alpha),
            Self::BoundedPareto { alpha, x_min, x_max } => {
                let cut = (x_min / x_max).powf(alpha);
                let mass = q * (1.0 - cut) + cut;
                (x_min * mass.powf(-1.0 / alpha)).min(x_max)
            }
            Self::Exponential { rate } => -q.ln() / rate,
            Self::Deterministic { value } => value,
        }
    }

    /// Smallest `t` with `P{S <= t} >= p`.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(0.0..1.0).contains(&p) {
            return Err(DistError::Domain(p));
        }
        Ok(self.tail_quantile(1.0 - p))
    }

    pub fn mean(&self) -> f64 {
        self.partial_mean(0.0)
    }

    pub fn second_moment(&self) -> Moment {
        match *self {
            Self::Pareto { alpha, x_min } => {
                if alpha <= 2.0 {
                    Moment::Infinite
                } else {
                    Moment::Finite(alpha * x_min * x_min / (alpha - 2.0))
                }
            }
            Self::BoundedPareto { alpha, x_min, x_max } => {
                let norm = alpha * x_min.powf(alpha) / (1.0 - (x_min / x_max).powf(alpha));
                let integral = if (alpha - 2.0).abs() < 1e-12 {
                    (x_max / x_min).ln()
                } else {
                    (x_max.powf(2.0 - alpha) - x_min.powf(2.0 - alpha)) / (2.0 - alpha)
                };
                Moment::Finite(norm * integral)
            }
            Self::Exponential { rate } => Moment::Finite(2.0 / (rate * rate)),
            Self::Deterministic { value } => Moment::Finite(value * value),
        }
    }

    /// `E[S * 1{S > x}]`.
    pub fn partial_mean(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { alpha, x_min } => {
                let from = x.max(x_min);
                alpha * x_min.powf(alpha) * from.powf(1.0 - alpha) / (alpha - 1.0)
            }
            Self::BoundedPareto { alpha, x_min, x_max } => {
                if x >= x_max {
                    return 0.0;
                }
                let from = x.max(x_min);
                let norm = alpha * x_min.powf(alpha) / (1.0 - (x_min / x_max).powf(alpha));
                norm * (from.powf(1.0 - alpha) - x_max.powf(1.0 - alpha)) / (alpha - 1.0)
            }
            Self::Exponential { rate } => {
                let from = x.max(0.0);
                (from + 1.0 / rate) * (-rate * from).exp()
            }
            Self::Deterministic { value } => {
                if x < value {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    /// `E[(S - x)^+]`, the work a job still carries past `x` units of
    /// service.
    pub fn excess_mean(&self, x: f64) -> f64 {
        match *self {
            // closed form avoids the cancellation in partial_mean - x * tail
            Self::Pareto { alpha, x_min } if x >= x_min => {
                x_min.powf(alpha) * x.powf(1.0 - alpha) / (alpha - 1.0)
            }
            Self::Exponential { rate } => (-rate * x.max(0.0)).exp() / rate,
            _ => (self.partial_mean(x) - x.max(0.0) * self.tail(x)).max(0.0),
        }
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match *self {
            Self::Pareto { x_min, .. } | Self::BoundedPareto { x_min, .. } => x_min,
            Self::Exponential { .. } => 0.0,
            Self::Deterministic { value } => value,
        }
    }

    /// Inverse-transform sample from a uniform draw `u` in `[0, 1)`.
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        self.tail_quantile(1.0 - u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_from_uniform(rng.gen::<f64>())
    }
}

impl fmt::Display for SizeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Pareto { alpha, x_min } => write!(f, "pareto:alpha={alpha},xmin={x_min}"),
            Self::BoundedPareto { alpha, x_min, x_max } => {
                write!(f, "bpareto:alpha={alpha},xmin={x_min},xmax={x_max}")
            }
            Self::Exponential { rate } => write!(f, "exp:rate={rate}"),
            Self::Deterministic { value } => write!(f, "det:value={value}"),
        }
    }
}

/// Splits `kind:key=value,key=value` into a lowercase kind and key/value
/// pairs. Shared with the policy spec parser.
pub(crate) fn split_spec(spec: &str) -> Result<(String, Vec<(String, String)>), String> {
    let spec = spec.trim().to_ascii_lowercase();
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k.trim().to_string(), r.trim().to_string()),
        None => (spec.clone(), String::new()),
    };
    if kind.is_empty() {
        return Err("missing kind".into());
    }
    let mut pairs = Vec::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{item}`"))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if pairs.iter().any(|(seen, _)| *seen == k) {
            return Err(format!("duplicate key `{k}`"));
        }
        pairs.push((k, v));
    }
    Ok((kind, pairs))
}

impl FromStr for SizeDistribution {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: String| DistError::Parse { spec: s.to_string(), reason };
        let (kind, pairs) = split_spec(s).map_err(err)?;
        let allowed: &[&str] = match kind.as_str() {
            "pareto" => &["alpha", "xmin"],
            "bpareto" => &["alpha", "xmin", "xmax"],
            "exp" => &["rate"],
            "det" => &["value"],
            other => return Err(err(format!("unknown distribution `{other}`"))),
        };
        let mut values = vec![None; allowed.len()];
        for (k, v) in &pairs {
            let slot = allowed
                .iter()
                .position(|a| a == k)
                .ok_or_else(|| err(format!("unknown key `{k}` for `{kind}`")))?;
            let parsed: f64 = v
                .parse()
                .map_err(|_| err(format!("`{k}` is not a number: `{v}`")))?;
            values[slot] = Some(parsed);
        }
        let get = |i: usize| values[i].ok_or_else(|| err(format!("missing key `{}`", allowed[i])));
        let dist = match kind.as_str() {
            "pareto" => Self::pareto(get(0)?, values[1].unwrap_or(1.0)),
            "bpareto" => Self::bounded_pareto(get(0)?, values[1].unwrap_or(1.0), get(2)?),
            "exp" => Self::exponential(get(0)?),
            _ => Self::deterministic(get(0)?),
        };
        dist.map_err(|e| err(e.to_string()))
    }
}

/// Server count, load, and the arrival rate they imply for a size law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub rho: f64,
    pub lambda: f64,
}

impl SystemParams {
    pub fn new(n: usize, rho: f64, dist: &SizeDistribution) -> Result<Self, DistError> {
        if n == 0 {
            return Err(DistError::InvalidParameter("server count must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(DistError::InvalidParameter(format!("load must lie in [0, 1), got {rho}")));
        }
        Ok(Self { n, rho, lambda: n as f64 * rho / dist.mean() })
    }

    /// `n * rho`, the minimum number of servers needed for stability.
    pub fn resource_requirement(&self) -> f64 {
        self.n as f64 * self.rho
    }

    /// `rho >= (n-1)/n`: the big-job server must carry part of the load for
    /// the other `n-1` servers to be stable.
    pub fn is_high_load(&self) -> bool {
        self.rho * self.n as f64 >= (self.n - 1) as f64
    }

    /// Big-server load needed to keep the other `n-1` servers critically
    /// loaded: `n*rho - (n-1)`.
    pub fn critical_big_load(&self) -> f64 {
        self.resource_requirement() - (self.n - 1) as f64
    }
}

/// `r_{>x} = lambda * E[S 1{S > x}]`.
pub fn resource_above(params: &SystemParams, dist: &SizeDistribution, x: f64) -> f64 {
    params.lambda * dist.partial_mean(x)
}

/// Load on the processor-sharing server of the size-oblivious split when
/// jobs migrate after `d` units of service: `lambda * P{S>d} * (E[S|S>d] - d)`.
pub fn tags_large_load(params: &SystemParams, dist: &SizeDistribution, d: f64) -> f64 {
    params.lambda * dist.excess_mean(d)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    /// `rho < (n-1)/n`: every threshold keeps the small-job side stable.
    #[error("no constraint: rho < (n-1)/n, any threshold keeps the small-job servers stable")]
    NoConstraint,
    #[error("target load {target} is not attainable (achievable range is ({low}, {high}])")]
    Unattainable { target: f64, low: f64, high: f64 },
}

const ROOT_REL_TOL: f64 = 1e-13;

/// Smallest `d >= 0` with `f(d) <= target` for a non-increasing `f`,
/// by bracket doubling and bisection.
pub fn invert_decreasing<F: Fn(f64) -> f64>(
    f: F,
    start: f64,
    target: f64,
) -> Result<f64, ThresholdError> {
    let high_value = f(0.0);
    if high_value <= target {
        return Ok(0.0);
    }
    let mut hi = start.max(1e-12);
    while f(hi) > target {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(ThresholdError::Unattainable { target, low: 0.0, high: high_value });
        }
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        if hi - lo <= ROOT_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn solve_for(
    params: &SystemParams,
    dist: &SizeDistribution,
    load: impl Fn(f64) -> f64,
) -> Result<f64, ThresholdError> {
    if !params.is_high_load() {
        return Err(ThresholdError::NoConstraint);
    }
    let target = params.critical_big_load();
    invert_decreasing(load, dist.support_min().max(1.0), target)
}

/// Smallest `d` with `r_{>d} = n*rho - (n-1)`.
pub fn solve_dstar(params: &SystemParams, dist: &SizeDistribution) -> Result<f64, ThresholdError> {
    solve_for(params, dist, |d| resource_above(params, dist, d))
}

/// Smallest `d` with `tags_large_load(d) = n*rho - (n-1)`.
pub fn solve_tags_dstar(
    params: &SystemParams,
    dist: &SizeDistribution,
) -> Result<f64, ThresholdError> {
    solve_for(params, dist, |d| tags_large_load(params, dist, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    fn p15() -> SizeDistribution {
        SizeDistribution::pareto(1.5, 1.0).unwrap()
    }

    #[test]
    fn tail_values() {
        assert_eq!(p15().tail(1.0), 1.0);
        assert!(close(p15().tail(4.0), 0.125, 1e-15));
        assert_eq!(SizeDistribution::deterministic(5.0).unwrap().tail(5.0), 0.0);
        assert_eq!(SizeDistribution::deterministic(5.0).unwrap().tail(4.999), 1.0);
    }

    #[test]
    fn quantile_values() {
        assert_eq!(p15().quantile(0.0).unwrap(), 1.0);
        assert!(close(p15().quantile(0.99).unwrap(), 100f64.powf(2.0 / 3.0), 1e-12));
        assert!(close(p15().quantile(0.99).unwrap(), 21.5443469, 1e-8));
        let e = SizeDistribution::exponential(1.0).unwrap();
        assert!(close(e.quantile(1.0 - (-1f64).exp()).unwrap(), 1.0, 1e-12));
        assert_eq!(p15().quantile(1.0), Err(DistError::Domain(1.0)));
        assert_eq!(p15().quantile(-0.1), Err(DistError::Domain(-0.1)));
    }

    #[test]
    fn moments() {
        assert!(close(p15().mean(), 3.0, 1e-14));
        assert_eq!(SizeDistribution::deterministic(5.0).unwrap().mean(), 5.0);
        let p25 = SizeDistribution::pareto(2.5, 1.0).unwrap();
        assert!(close(p25.second_moment().finite().unwrap(), 5.0, 1e-14));
        assert_eq!(p15().second_moment(), Moment::Infinite);
        assert!(close(SizeDistribution::exponential(2.0).unwrap().mean(), 0.5, 1e-15));
    }

    #[test]
    fn samples_from_uniform() {
        assert!(close(p15().sample_from_uniform(0.99), 21.5443469, 1e-8));
        let det = SizeDistribution::deterministic(5.0).unwrap();
        assert_eq!(det.sample_from_uniform(0.0), 5.0);
        assert_eq!(det.sample_from_uniform(0.7), 5.0);
        let e = SizeDistribution::exponential(1.0).unwrap();
        assert!(close(e.sample_from_uniform(1.0 - (-2f64).exp()), 2.0, 1e-12));
    }

    #[test]
    fn resource_above_values() {
        let d = p15();
        let p = SystemParams::new(3, 0.8, &d).unwrap();
        assert!(close(resource_above(&p, &d, 0.5), 2.4, 1e-14));
        assert!(close(resource_above(&p, &d, 0.0), 2.4, 1e-12));
        assert!(close(resource_above(&p, &d, 36.0), 0.4, 1e-13));
        let p = SystemParams::new(3, 0.5, &d).unwrap();
        assert!(close(resource_above(&p, &d, 100.0), 0.15, 1e-13));
    }

    #[test]
    fn tags_load_values() {
        let d = p15();
        let p = SystemParams::new(3, 0.8, &d).unwrap();
        assert!(close(tags_large_load(&p, &d, 1.0), 1.6, 1e-13));
        assert!(close(tags_large_load(&p, &d, 16.0), 0.4, 1e-13));
        let det = SizeDistribution::deterministic(5.0).unwrap();
        let p = SystemParams::new(3, 0.8, &det).unwrap();
        assert_eq!(tags_large_load(&p, &det, 10.0), 0.0);
    }

    #[test]
    fn dstar_values() {
        let d = p15();
        let p = SystemParams::new(3, 0.8, &d).unwrap();
        assert!(close(solve_dstar(&p, &d).unwrap(), 36.0, 1e-10));
        assert!(close(solve_tags_dstar(&p, &d).unwrap(), 16.0, 1e-10));
        let p = SystemParams::new(10, 0.94, &d).unwrap();
        assert!(close(solve_dstar(&p, &d).unwrap(), 552.25, 1e-10));
        let p = SystemParams::new(3, 0.5, &d).unwrap();
        assert_eq!(solve_dstar(&p, &d), Err(ThresholdError::NoConstraint));
        assert_eq!(solve_tags_dstar(&p, &d), Err(ThresholdError::NoConstraint));
    }

    #[test]
    fn tags_dstar_alpha_25_two_servers() {
        let d = SizeDistribution::pareto(2.5, 1.0).unwrap();
        let p = SystemParams::new(2, 0.75, &d).unwrap();
        assert!(close(p.lambda, 0.9, 1e-14));
        let closed_form = (0.6f64 / 0.5).powf(1.0 / 1.5);
        assert!(close(closed_form, 1.1292, 1e-4));
        assert!(close(solve_tags_dstar(&p, &d).unwrap(), closed_form, 1e-10));
    }

    #[test]
    fn parse_specs() {
        assert_eq!("pareto:alpha=1.5,xmin=1".parse::<SizeDistribution>().unwrap(), p15());
        assert_eq!("PARETO:Alpha=1.5".parse::<SizeDistribution>().unwrap(), p15());
        assert_eq!(
            "bpareto:alpha=1.5,xmin=1,xmax=1e6".parse::<SizeDistribution>().unwrap(),
            SizeDistribution::bounded_pareto(1.5, 1.0, 1e6).unwrap()
        );
        assert_eq!(
            "exp:rate=1".parse::<SizeDistribution>().unwrap(),
            SizeDistribution::exponential(1.0).unwrap()
        );
        assert_eq!(
            "det:value=5".parse::<SizeDistribution>().unwrap(),
            SizeDistribution::deterministic(5.0).unwrap()
        );
        for bad in ["pareto:alpha=1.5,beta=2", "gamma:k=2", "exp", "pareto:alpha=0.9", "det:value=x"] {
            assert!(bad.parse::<SizeDistribution>().is_err(), "{bad}");
        }
        let d = SizeDistribution::bounded_pareto(1.5, 1.0, 1e6).unwrap();
        assert_eq!(d.to_string().parse::<SizeDistribution>().unwrap(), d);
    }

    #[test]
    fn bounded_pareto_consistency() {
        let d = SizeDistribution::bounded_pareto(1.5, 1.0, 1e4).unwrap();
        // mean by integrating the tail numerically (trapezoid on a log grid)
        let mut integral = 1.0;
        let steps = 200_000;
        let (a, b) = (0f64, 4f64);
        for i in 0..steps {
            let x0 = 10f64.powf(a + (b - a) * i as f64 / steps as f64);
            let x1 = 10f64.powf(a + (b - a) * (i + 1) as f64 / steps as f64);
            integral += 0.5 * (d.tail(x0) + d.tail(x1)) * (x1 - x0);
        }
        assert!(close(d.mean(), integral, 1e-6), "{} vs {integral}", d.mean());
        assert_eq!(d.tail(1e4), 0.0);
        assert!(close(d.tail_quantile(d.tail(100.0)), 100.0, 1e-10));
    }

    #[test]
    fn round_trip_on_log_grid() {
        let dists = [
            p15(),
            SizeDistribution::pareto(2.5, 2.0).unwrap(),
            SizeDistribution::bounded_pareto(1.5, 1.0, 1e6).unwrap(),
            SizeDistribution::exponential(0.5).unwrap(),
        ];
        for d in dists {
            let lo = d.support_min().max(0.1);
            for i in 0..=60 {
                let t = lo * 10f64.powf(i as f64 / 20.0);
                let q = d.tail(t);
                if q <= 0.0 {
                    continue;
                }
                assert!(close(d.tail_quantile(q), t, 1e-12), "{d} t={t}");
                if q > 1e-4 {
                    assert!(close(d.quantile(1.0 - q).unwrap(), t, 1e-9), "{d} t={t}");
                }
            }
        }
    }

    #[test]
    fn resource_above_monotone_and_dstar_roundtrip() {
        let dists = [
            p15(),
            SizeDistribution::pareto(2.5, 1.0).unwrap(),
            SizeDistribution::bounded_pareto(1.5, 1.0, 1e6).unwrap(),
            SizeDistribution::exponential(1.0).unwrap(),
        ];
        for d in dists {
            for (n, rho) in [(2, 0.6), (3, 0.8), (10, 0.94)] {
                let p = SystemParams::new(n, rho, &d).unwrap();
                let mut prev = f64::INFINITY;
                for i in 0..200 {
                    let x = 1e-3 * 1.1f64.powi(i);
                    let r = resource_above(&p, &d, x);
                    assert!(r <= prev + 1e-12);
                    prev = r;
                }
                let target = p.critical_big_load();
                let ds = solve_dstar(&p, &d).unwrap();
                assert!((resource_above(&p, &d, ds) - target).abs() <= 1e-9, "{d} {n} {rho}");
                let dt = solve_tags_dstar(&p, &d).unwrap();
                assert!((tags_large_load(&p, &d, dt) - target).abs() <= 1e-9, "{d} {n} {rho}");
            }
        }
    }

    #[test]
    fn sampler_matches_tail_at_percentiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 1_000_000;
        let d = p15();
        let ts: Vec<f64> = [0.5, 0.9, 0.99].iter().map(|&p| d.quantile(p).unwrap()).collect();
        let mut counts = [0u64; 3];
        for _ in 0..draws {
            let s = d.sample(&mut rng);
            for (c, &t) in counts.iter_mut().zip(&ts) {
                if s > t {
                    *c += 1;
                }
            }
        }
        for (c, &t) in counts.iter().zip(&ts) {
            let p = d.tail(t);
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            let emp = *c as f64 / draws as f64;
            assert!((emp - p).abs() <= 3.0 * se, "t={t}: {emp} vs {p}");
        }
    }

    #[test]
    fn sample_mean_for_finite_variance_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [
            SizeDistribution::pareto(2.5, 1.0).unwrap(),
            SizeDistribution::exponential(2.0).unwrap(),
            SizeDistribution::bounded_pareto(2.0, 1.0, 1e3).unwrap(),
        ] {
            let draws = 1_000_000;
            let mean: f64 = (0..draws).map(|_| d.sample(&mut rng)).sum::<f64>() / draws as f64;
            assert!(close(mean, d.mean(), 0.05), "{d}: {mean}");
        }
    }
}
