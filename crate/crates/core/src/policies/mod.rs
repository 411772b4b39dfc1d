//! Scheduling policies behind the [`Policy`](crate::sim::Policy) contract.
//!
//! Composite policies reserve server 0 for their dedicated role (the LJF
//! server of [`Split`], the big-job server of [`SplitThresh`], the
//! processor-sharing server of [`TagSplit`]) and run the remaining `n-1`
//! servers as a pool.

mod baseline;
mod pools;
mod split;
mod split_thresh;
mod tag_split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::split_spec;
use crate::sim::Policy;

pub use baseline::{FcfsN, SekN, SinglePs, SrptN};
pub use pools::{FcfsPool, SrptPool};
pub use split::Split;
pub use split_thresh::SplitThresh;
pub use tag_split::TagSplit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("cannot parse policy spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },
    #[error("policy `{policy}` needs {need}, got n={n}")]
    ServerCount { policy: String, need: &'static str, n: usize },
    #[error("policy `{policy}`: {reason}")]
    InvalidParameter { policy: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallPolicy {
    Fcfs,
    Srpt,
}

/// Which size the SEK exception predicate looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SekSize {
    #[default]
    Remaining,
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolicySpec {
    Fcfs,
    Srpt,
    /// SRPT-n, except that with exactly `n+1` jobs of which one exceeds
    /// `eps`, the largest is served in place of the second largest.
    Sek { eps: f64, size: SekSize },
    /// `n-1` SRPT servers plus one non-preemptive largest-job-first server.
    Split,
    /// Jobs above `d` go to one SRPT server, the rest to `n-1` servers.
    SplitThresh { d: f64, small: SmallPolicy, steal: bool },
    /// Everyone starts on `n-1` FCFS servers; after `d` units of service a
    /// job migrates to a processor-sharing server.
    TagSplit { d: f64 },
    /// Single-server processor sharing.
    Ps,
}

impl PolicySpec {
    /// Size threshold that separates small and big jobs, if any.
    pub fn threshold(&self) -> Option<f64> {
        match *self {
            PolicySpec::SplitThresh { d, .. } | PolicySpec::TagSplit { d } => Some(d),
            _ => None,
        }
    }

    /// Never leaves a server idle while a job waits.
    pub fn is_work_conserving(&self) -> bool {
        matches!(self, PolicySpec::Fcfs | PolicySpec::Srpt | PolicySpec::Sek { .. } | PolicySpec::Split | PolicySpec::Ps)
            || matches!(self, PolicySpec::SplitThresh { steal: true, .. })
    }

    /// File-name friendly label.
    pub fn slug(&self) -> String {
        self.to_string()
            .chars()
            .map(|c| match c {
                ':' | ',' | '=' => '_',
                c => c,
            })
            .collect()
    }

    pub fn validate(&self, n: usize) -> Result<(), PolicyError> {
        let label = self.to_string();
        let bad = |reason: String| Err(PolicyError::InvalidParameter { policy: label.clone(), reason });
        match *self {
            PolicySpec::Sek { eps, .. } if !(eps > 0.0 && eps.is_finite()) => {
                return bad(format!("eps must be > 0, got {eps}"));
            }
            PolicySpec::SplitThresh { d, .. } | PolicySpec::TagSplit { d } if !(d > 0.0) || d.is_nan() => {
                return bad(format!("d must be > 0, got {d}"));
            }
            _ => {}
        }
        match self {
            PolicySpec::Split | PolicySpec::SplitThresh { .. } | PolicySpec::TagSplit { .. } if n < 2 => {
                Err(PolicyError::ServerCount { policy: label, need: "n >= 2", n })
            }
            PolicySpec::Ps if n != 1 => Err(PolicyError::ServerCount { policy: label, need: "n = 1", n }),
            _ if n == 0 => Err(PolicyError::ServerCount { policy: label, need: "n >= 1", n }),
            _ => Ok(()),
        }
    }

    pub fn build(&self, n: usize) -> Result<Box<dyn Policy + Send>, PolicyError> {
        self.validate(n)?;
        Ok(match *self {
            PolicySpec::Fcfs => Box::new(FcfsN::new(n)),
            PolicySpec::Srpt => Box::new(SrptN::new(n)),
            PolicySpec::Sek { eps, size } => Box::new(SekN::new(n, eps, size)),
            PolicySpec::Split => Box::new(Split::new(n)),
            PolicySpec::SplitThresh { d, small, steal } => Box::new(SplitThresh::new(n, d, small, steal)),
            PolicySpec::TagSplit { d } => Box::new(TagSplit::new(n, d)),
            PolicySpec::Ps => Box::new(SinglePs::new()),
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PolicySpec::Fcfs => write!(f, "fcfs"),
            PolicySpec::Srpt => write!(f, "srpt"),
            PolicySpec::Sek { eps, size: SekSize::Remaining } => write!(f, "sek:eps={eps}"),
            PolicySpec::Sek { eps, size: SekSize::Original } => write!(f, "sek:eps={eps},size=original"),
            PolicySpec::Split => write!(f, "split"),
            PolicySpec::SplitThresh { d, small, steal } => {
                let small = match small {
                    SmallPolicy::Fcfs => "fcfs",
                    SmallPolicy::Srpt => "srpt",
                };
                write!(f, "splitthresh:d={d},small={small},steal={steal}")
            }
            PolicySpec::TagSplit { d } => write!(f, "tagsplit:d={d}"),
            PolicySpec::Ps => write!(f, "ps"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: String| PolicyError::Parse { spec: s.to_string(), reason };
        let (kind, pairs) = split_spec(s).map_err(err)?;
        let allowed: &[&str] = match kind.as_str() {
            "fcfs" | "srpt" | "split" | "ps" => &[],
            "sek" => &["eps", "size"],
            "splitthresh" => &["d", "small", "steal"],
            "tagsplit" => &["d"],
            other => return Err(err(format!("unknown policy `{other}`"))),
        };
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(err(format!("unknown key `{k}` for `{kind}`")));
        }
        let get = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let number = |key: &str| -> Result<f64, PolicyError> {
            let v = get(key).ok_or_else(|| err(format!("missing key `{key}`")))?;
            v.parse().map_err(|_| err(format!("`{key}` is not a number: `{v}`")))
        };
        let spec = match kind.as_str() {
            "fcfs" => PolicySpec::Fcfs,
            "srpt" => PolicySpec::Srpt,
            "split" => PolicySpec::Split,
            "ps" => PolicySpec::Ps,
            "sek" => {
                let size = match get("size") {
                    None | Some("remaining") => SekSize::Remaining,
                    Some("original") => SekSize::Original,
                    Some(v) => return Err(err(format!("size must be remaining|original, got `{v}`"))),
                };
                PolicySpec::Sek { eps: number("eps")?, size }
            }
            "splitthresh" => {
                let small = match get("small") {
                    None | Some("fcfs") => SmallPolicy::Fcfs,
                    Some("srpt") => SmallPolicy::Srpt,
                    Some(v) => return Err(err(format!("small must be fcfs|srpt, got `{v}`"))),
                };
                let steal = match get("steal") {
                    None | Some("false") => false,
                    Some("true") => true,
                    Some(v) => return Err(err(format!("steal must be true|false, got `{v}`"))),
                };
                PolicySpec::SplitThresh { d: number("d")?, small, steal }
            }
            _ => PolicySpec::TagSplit { d: number("d")? },
        };
        if let PolicySpec::Sek { eps, .. } | PolicySpec::SplitThresh { d: eps, .. } | PolicySpec::TagSplit { d: eps } = spec {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(err(format!("threshold must be a positive number, got {eps}")));
            }
        }
        Ok(spec)
    }
}
