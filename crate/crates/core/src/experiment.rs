//! Experiment configurations, the preset matrix, and the replication
//! runner that turns them into CSV tables.

use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::distributions::{
    resource_above, solve_dstar, solve_tags_dstar, tags_large_load, invert_decreasing, DistError,
    SizeDistribution, SystemParams, ThresholdError,
};
use crate::policies::{PolicyError, PolicySpec, SmallPolicy};
use crate::sim::{simulate, Observer, PoissonArrivals, SimError, SimResult};
use crate::stats::{normalized_tail, write_tail_csv, Grid, LjfPromptness, PackingProbe, StatsError, TailSink};

pub const DEFAULT_ARRIVALS: u64 = 10_000_000;
pub const DEFAULT_WARMUP_FRAC: f64 = 0.01;
pub const DEFAULT_GRID_POINTS: usize = 400;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl ExperimentError {
    pub fn is_io(&self) -> bool {
        matches!(self, ExperimentError::Io { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    /// Idle fraction of the other servers while very large jobs run.
    Pidle,
    /// How often large jobs reach the LJF server within `sqrt(x)`.
    Ljf,
}

impl std::str::FromStr for Probe {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pidle" => Ok(Probe::Pidle),
            "ljf" => Ok(Probe::Ljf),
            other => Err(format!("unknown probe `{other}` (expected pidle or ljf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `d` is this quantile of the size law.
    Quantile,
    /// `d` puts this load on the big-job server: `r_{>d} = target`.
    BigLoad,
    /// `d` puts this load on the PS server of the size-oblivious split.
    TagsLoad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRule {
    pub mode: ThresholdMode,
    pub target: f64,
}

/// Resolves a threshold target to a size `d`.
pub fn threshold_helper(
    params: &SystemParams,
    dist: &SizeDistribution,
    mode: ThresholdMode,
    target: f64,
) -> Result<f64, ExperimentError> {
    let cfg = |m: String| ExperimentError::Config(m);
    match mode {
        ThresholdMode::Quantile => dist.quantile(target).map_err(|e| cfg(format!("quantile target {target}: {e}"))),
        ThresholdMode::BigLoad | ThresholdMode::TagsLoad => {
            let tags = mode == ThresholdMode::TagsLoad;
            let load = |d: f64| if tags { tags_large_load(params, dist, d) } else { resource_above(params, dist, d) };
            let critical = params.critical_big_load();
            if params.is_high_load() && target < critical {
                let dstar = if tags { solve_tags_dstar(params, dist) } else { solve_dstar(params, dist) };
                let dstar = dstar.map_err(|e| cfg(e.to_string()))?;
                return Err(cfg(format!(
                    "target load {target} is below the critical load {critical}: the small-job servers need d < d* = {dstar}"
                )));
            }
            if !(target > 0.0) {
                return Err(cfg(format!("target load must be positive, got {target}")));
            }
            invert_decreasing(load, dist.support_min().max(1.0), target).map_err(|e| match e {
                ThresholdError::Unattainable { low, high, .. } => {
                    cfg(format!("target load {target} is not attainable (achievable range is ({low}, {high}])"))
                }
                other => cfg(other.to_string()),
            })
        }
    }
}

/// One simulated setting and policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Short name of the setting, used as file-name prefix.
    pub setting: String,
    pub n: usize,
    pub rho: f64,
    pub dist: SizeDistribution,
    pub policy: PolicySpec,
    pub arrivals: u64,
    pub seed: u64,
    pub warmup_frac: f64,
    pub grid_points: usize,
    pub probe: Option<Probe>,
    /// How the policy threshold was chosen, when it was derived.
    pub threshold_rule: Option<ThresholdRule>,
}

impl ExperimentConfig {
    pub fn new(setting: &str, n: usize, rho: f64, dist: SizeDistribution, policy: PolicySpec) -> Self {
        Self {
            setting: setting.to_string(),
            n,
            rho,
            dist,
            policy,
            arrivals: DEFAULT_ARRIVALS,
            seed: DEFAULT_SEED,
            warmup_frac: DEFAULT_WARMUP_FRAC,
            grid_points: DEFAULT_GRID_POINTS,
            probe: None,
            threshold_rule: None,
        }
    }

    pub fn params(&self) -> Result<SystemParams, ExperimentError> {
        Ok(SystemParams::new(self.n, self.rho, &self.dist)?)
    }

    pub fn warmup(&self) -> u64 {
        (self.arrivals as f64 * self.warmup_frac).floor() as u64
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.params()?;
        self.policy.validate(self.n)?;
        if !(0.0..1.0).contains(&self.warmup_frac) {
            return Err(ExperimentError::Config(format!("warmup fraction must lie in [0, 1), got {}", self.warmup_frac)));
        }
        if self.arrivals == 0 || self.arrivals <= self.warmup() {
            return Err(ExperimentError::Config(format!("arrivals ({}) must exceed warmup ({})", self.arrivals, self.warmup())));
        }
        if self.grid_points < 2 {
            return Err(ExperimentError::Config("need at least 2 grid points".into()));
        }
        Ok(())
    }

    pub fn stem(&self) -> String {
        format!("{}-{}", self.setting, self.policy.slug())
    }

    pub fn grid(&self) -> Result<Grid, ExperimentError> {
        Ok(Grid::for_distribution(&self.dist, self.grid_points)?)
    }

    /// Size-class threshold for split tails, if the policy has one.
    pub fn class_threshold(&self) -> Option<f64> {
        self.policy.threshold()
    }

    pub fn new_sink(&self) -> Result<TailSink, ExperimentError> {
        let sink = TailSink::new(self.grid()?);
        Ok(match self.class_threshold() {
            Some(d) => sink.with_threshold(d),
            None => sink,
        })
    }

    /// Load figures that make a threshold auditable.
    pub fn threshold_loads(&self) -> Result<Option<ThresholdLoads>, ExperimentError> {
        let Some(d) = self.class_threshold() else { return Ok(None) };
        let p = self.params()?;
        let r_above = resource_above(&p, &self.dist, d);
        Ok(Some(ThresholdLoads {
            d,
            r_above_d: r_above,
            rho_tags_large: tags_large_load(&p, &self.dist, d),
            r_small: p.resource_requirement() - r_above,
        }))
    }

    /// A stealing or non-stealing SplitThresh whose small-job servers get
    /// at least `n-1` units of work per unit time cannot be stable.
    pub fn warnings(&self) -> Result<Vec<String>, ExperimentError> {
        let mut out = Vec::new();
        if let (PolicySpec::SplitThresh { .. }, Some(loads)) = (&self.policy, self.threshold_loads()?) {
            let cap = (self.n - 1) as f64;
            if loads.r_small >= cap {
                out.push(format!(
                    "{}: small-job load {} >= {} servers; the small-job system is unstable",
                    self.stem(),
                    loads.r_small,
                    self.n - 1
                ));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdLoads {
    pub d: f64,
    pub r_above_d: f64,
    pub rho_tags_large: f64,
    pub r_small: f64,
}

/// A named list of configurations.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub configs: Vec<ExperimentConfig>,
}

struct Setting {
    name: &'static str,
    n: usize,
    rho: f64,
    alpha: f64,
}

const EXP1: Setting = Setting { name: "exp1", n: 3, rho: 0.5, alpha: 1.5 };
const EXP2: Setting = Setting { name: "exp2", n: 3, rho: 0.8, alpha: 1.5 };
const EXP3: Setting = Setting { name: "exp3", n: 10, rho: 0.94, alpha: 1.5 };
const ALPHA14: Setting = Setting { name: "alpha14", n: 3, rho: 0.5, alpha: 1.4 };
const ALPHA20: Setting = Setting { name: "alpha20", n: 3, rho: 0.5, alpha: 2.0 };

const QUANTILES: [f64; 3] = [0.99, 0.999, 0.9999];
const BIG_LOADS: [f64; 3] = [0.45, 0.5, 0.6];
pub const SEK_SWEEP: [f64; 4] = [1.0, 10.0, 50.0, 200.0];

impl Setting {
    fn dist(&self) -> SizeDistribution {
        SizeDistribution::pareto(self.alpha, 1.0).expect("preset alpha > 1")
    }

    fn config(&self, policy: PolicySpec) -> ExperimentConfig {
        ExperimentConfig::new(self.name, self.n, self.rho, self.dist(), policy)
    }

    fn baselines(&self, split: bool) -> Vec<ExperimentConfig> {
        let mut v = vec![
            self.config(PolicySpec::Fcfs),
            self.config(PolicySpec::Srpt),
            self.config(PolicySpec::Sek { eps: 200.0, size: Default::default() }),
        ];
        if split {
            v.push(self.config(PolicySpec::Split));
        }
        v
    }

    fn thresholded(
        &self,
        mode: ThresholdMode,
        targets: &[f64],
        make: impl Fn(f64) -> PolicySpec,
    ) -> Result<Vec<ExperimentConfig>, ExperimentError> {
        let dist = self.dist();
        let params = SystemParams::new(self.n, self.rho, &dist)?;
        targets
            .iter()
            .map(|&target| {
                let d = threshold_helper(&params, &dist, mode, target)?;
                let mut c = self.config(make(d));
                c.threshold_rule = Some(ThresholdRule { mode, target });
                Ok(c)
            })
            .collect()
    }

    fn thresh(&self, mode: ThresholdMode, targets: &[f64], small: SmallPolicy) -> Result<Vec<ExperimentConfig>, ExperimentError> {
        self.thresholded(mode, targets, |d| PolicySpec::SplitThresh { d, small, steal: true })
    }

    fn sek_sweep(&self) -> Vec<ExperimentConfig> {
        SEK_SWEEP.iter().map(|&eps| self.config(PolicySpec::Sek { eps, size: Default::default() })).collect()
    }
}

pub const PRESET_NAMES: [&str; 10] = [
    "exp1",
    "exp1-thresh",
    "exp2",
    "exp3",
    "alpha14",
    "alpha20",
    "tags-low",
    "tags-high",
    "appendix-fcfs-vs-srpt",
    "appendix-sek-sweep",
];

pub fn preset(name: &str) -> Result<Preset, ExperimentError> {
    use ThresholdMode::*;
    let (description, configs): (&'static str, Vec<ExperimentConfig>) = match name {
        "exp1" => (
            "low load, n=3 rho=0.5 Pareto(1.5): baselines, SPLIT, SplitThresh at the 99/99.9/99.99% size quantiles",
            [EXP1.baselines(true), EXP1.thresh(Quantile, &QUANTILES, SmallPolicy::Fcfs)?].concat(),
        ),
        "exp1-thresh" => (
            "low load, n=3 rho=0.5 Pareto(1.5): SplitThresh (FCFS small servers) at the 99/99.9/99.99% size quantiles",
            EXP1.thresh(Quantile, &QUANTILES, SmallPolicy::Fcfs)?,
        ),
        "exp2" => (
            "high load, n=3 rho=0.8 Pareto(1.5): baselines and SplitThresh (SRPT small servers) at big-server load 0.45/0.5/0.6",
            [EXP2.baselines(false), EXP2.thresh(BigLoad, &BIG_LOADS, SmallPolicy::Srpt)?].concat(),
        ),
        "exp3" => (
            "high load, n=10 rho=0.94 Pareto(1.5): baselines and SplitThresh (SRPT small servers) at big-server load 0.45/0.5/0.6",
            [EXP3.baselines(false), EXP3.thresh(BigLoad, &BIG_LOADS, SmallPolicy::Srpt)?].concat(),
        ),
        "alpha14" => ("n=3 rho=0.5 Pareto(1.4): baselines and SPLIT", ALPHA14.baselines(true)),
        "alpha20" => ("n=3 rho=0.5 Pareto(2.0): baselines and SPLIT", ALPHA20.baselines(true)),
        "tags-low" => (
            "n=3 rho=0.5 Pareto(1.5): TAG-SPLIT at the 99/99.9/99.99% size quantiles",
            EXP1.thresholded(Quantile, &QUANTILES, |d| PolicySpec::TagSplit { d })?,
        ),
        "tags-high" => (
            "n=3 rho=0.8 Pareto(1.5): TAG-SPLIT with PS-server load 0.45/0.5/0.6",
            EXP2.thresholded(TagsLoad, &BIG_LOADS, |d| PolicySpec::TagSplit { d })?,
        ),
        "appendix-fcfs-vs-srpt" => (
            "SplitThresh with FCFS versus SRPT small servers in the exp1, exp2 and exp3 settings",
            [
                EXP1.thresh(Quantile, &QUANTILES, SmallPolicy::Fcfs)?,
                EXP1.thresh(Quantile, &QUANTILES, SmallPolicy::Srpt)?,
                EXP2.thresh(BigLoad, &BIG_LOADS, SmallPolicy::Fcfs)?,
                EXP2.thresh(BigLoad, &BIG_LOADS, SmallPolicy::Srpt)?,
                EXP3.thresh(BigLoad, &BIG_LOADS, SmallPolicy::Fcfs)?,
                EXP3.thresh(BigLoad, &BIG_LOADS, SmallPolicy::Srpt)?,
            ]
            .concat(),
        ),
        "appendix-sek-sweep" => (
            "SEK-eps for eps in {1, 10, 50, 200} in the exp1, exp2, exp3, alpha14 and alpha20 settings",
            [EXP1, EXP2, EXP3, ALPHA14, ALPHA20].iter().flat_map(Setting::sek_sweep).collect(),
        ),
        other => {
            return Err(ExperimentError::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let name = PRESET_NAMES.iter().find(|&&p| p == name).copied().expect("matched above");
    Ok(Preset { name, description, configs })
}

pub fn list_presets() -> Vec<(&'static str, &'static str)> {
    PRESET_NAMES.iter().map(|&n| (n, preset(n).expect("built-in presets resolve").description)).collect()
}

/// Everything one replication produced.
#[derive(Debug)]
pub struct Replication {
    pub seed: u64,
    pub result: SimResult,
    pub sink: TailSink,
    pub probe: Option<ProbeOutcome>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub probe: Probe,
    /// Tagging floor on original size.
    pub size_floor: f64,
    pub jobs: u64,
    /// `P_idle` or the prompt-start fraction; `None` when no job qualified.
    pub value: Option<f64>,
}

/// Runs one replication with `seed`, optionally feeding extra observers.
pub fn run_replication(
    cfg: &ExperimentConfig,
    seed: u64,
    extra: &mut [&mut dyn Observer],
) -> Result<Replication, ExperimentError> {
    cfg.validate()?;
    let start = Instant::now();
    let params = cfg.params()?;
    let mut sink = cfg.new_sink()?;
    let policy = cfg.policy.build(cfg.n)?;
    let arrivals = PoissonArrivals::new(params.lambda, cfg.dist, cfg.arrivals, seed);
    let floor = cfg.dist.tail_quantile(1e-4);
    let mut pidle = PackingProbe::new(floor);
    let mut ljf = LjfPromptness::new(floor);
    let mut observers: Vec<&mut dyn Observer> = vec![&mut sink];
    match cfg.probe {
        Some(Probe::Pidle) => observers.push(&mut pidle),
        Some(Probe::Ljf) => observers.push(&mut ljf),
        None => {}
    }
    for o in extra.iter_mut() {
        observers.push(&mut **o);
    }
    let result = simulate(policy, arrivals, cfg.warmup(), &mut observers)?;
    let probe = cfg.probe.map(|p| match p {
        Probe::Pidle => {
            ProbeOutcome { probe: p, size_floor: floor, jobs: pidle.records.len() as u64, value: pidle.p_idle().ok() }
        }
        Probe::Ljf => ProbeOutcome { probe: p, size_floor: floor, jobs: ljf.qualifying(), value: ljf.fraction().ok() },
    });
    Ok(Replication { seed, result, sink, probe, wall_seconds: start.elapsed().as_secs_f64() })
}

#[derive(Debug, Serialize)]
struct RepSummary {
    seed: u64,
    completions: u64,
    recorded: u64,
    events: u64,
    end_time: f64,
    mean_response: f64,
    max_response: f64,
    wall_seconds: f64,
    counters: Vec<(String, u64)>,
    probe: Option<ProbeOutcome>,
}

#[derive(Debug, Serialize)]
struct Percentiles {
    p50: Option<f64>,
    p99: Option<f64>,
    p999: Option<f64>,
    p9999: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    config: &'a ExperimentConfig,
    policy_label: String,
    seeds: Vec<u64>,
    warmup: u64,
    regime: &'static str,
    threshold: Option<ThresholdLoads>,
    completions: u64,
    recorded: u64,
    mean_response: Option<f64>,
    percentiles_grid_resolution: Percentiles,
    wall_seconds: f64,
    warnings: Vec<String>,
    replications: Vec<RepSummary>,
}

/// What [`run_experiment`] wrote.
#[derive(Debug, Default)]
pub struct ExperimentOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Runs every configuration for `reps` replications with seeds
/// `cfg.seed + 1 ..= cfg.seed + reps`, then writes per-replication CSVs,
/// a merged CSV per configuration, size-class CSVs for thresholded
/// policies, and a JSON sidecar.
pub fn run_experiment(configs: &[ExperimentConfig], reps: u64, out: &Path) -> Result<ExperimentOutput, ExperimentError> {
    if reps == 0 {
        return Err(ExperimentError::Config("need at least one replication".into()));
    }
    let mut output = ExperimentOutput::default();
    for c in configs {
        c.validate()?;
        output.warnings.extend(c.warnings()?);
    }
    fs::create_dir_all(out).map_err(io_err(out))?;

    let jobs: Vec<(usize, u64)> = (0..configs.len()).flat_map(|i| (1..=reps).map(move |r| (i, r))).collect();
    let runs: Vec<Result<Replication, ExperimentError>> =
        jobs.par_iter().map(|&(i, r)| run_replication(&configs[i], configs[i].seed + r, &mut [])).collect();
    let mut runs = runs.into_iter();

    for cfg in configs {
        let reps: Vec<Replication> = runs.by_ref().take(reps as usize).collect::<Result<_, _>>()?;
        output.files.extend(write_config(cfg, &reps, out)?);
    }
    Ok(output)
}

fn write_rows(path: &Path, est: &crate::stats::TailEstimate, cfg: &ExperimentConfig) -> Result<PathBuf, ExperimentError> {
    let params = cfg.params()?;
    let rows = normalized_tail(est, &cfg.dist, &params);
    let f = fs::File::create(path).map_err(io_err(path))?;
    write_tail_csv(BufWriter::new(f), &rows).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

fn write_config(cfg: &ExperimentConfig, reps: &[Replication], out: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let stem = cfg.stem();
    let mut files = Vec::new();
    let mut merged = cfg.new_sink()?;
    for rep in reps {
        let path = out.join(format!("{stem}_rep{}.csv", rep.seed - cfg.seed));
        files.push(write_rows(&path, &rep.sink.all, cfg)?);
        merged.merge(&rep.sink)?;
    }
    files.push(write_rows(&out.join(format!("{stem}.csv")), &merged.all, cfg)?);
    if let Some((_, small, big)) = &merged.by_threshold {
        files.push(write_rows(&out.join(format!("{stem}_small.csv")), small, cfg)?);
        files.push(write_rows(&out.join(format!("{stem}_big.csv")), big, cfg)?);
    }

    let all = &merged.all;
    let pct = |p: f64| all.percentile(p).ok();
    let params = cfg.params()?;
    let meta = Metadata {
        config: cfg,
        policy_label: reps.first().map(|r| r.result.policy.clone()).unwrap_or_default(),
        seeds: reps.iter().map(|r| r.seed).collect(),
        warmup: cfg.warmup(),
        regime: if params.is_high_load() { "high_load" } else { "low_load" },
        threshold: cfg.threshold_loads()?,
        completions: reps.iter().map(|r| r.result.completions).sum(),
        recorded: all.count(),
        mean_response: all.mean().ok(),
        percentiles_grid_resolution: Percentiles { p50: pct(0.5), p99: pct(0.99), p999: pct(0.999), p9999: pct(0.9999) },
        wall_seconds: reps.iter().map(|r| r.wall_seconds).sum(),
        warnings: cfg.warnings()?,
        replications: reps
            .iter()
            .map(|r| RepSummary {
                seed: r.seed,
                completions: r.result.completions,
                recorded: r.result.recorded,
                events: r.result.events,
                end_time: r.result.end_time,
                mean_response: r.result.mean_response,
                max_response: r.result.max_response,
                wall_seconds: r.wall_seconds,
                counters: r.result.counters.clone(),
                probe: r.probe.clone(),
            })
            .collect(),
    };
    let path = out.join(format!("{stem}.json"));
    let f = fs::File::create(&path).map_err(io_err(&path))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &meta).map_err(|e| io_err(&path)(e.into()))?;
    files.push(path);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p15() -> SizeDistribution {
        SizeDistribution::pareto(1.5, 1.0).unwrap()
    }

    #[test]
    fn threshold_helper_examples() {
        let high = SystemParams::new(3, 0.8, &p15()).unwrap();
        let d = threshold_helper(&high, &p15(), ThresholdMode::BigLoad, 0.45).unwrap();
        assert!((d - (2.4f64 / 0.45).powi(2)).abs() < 1e-9 * d);
        let d = threshold_helper(&high, &p15(), ThresholdMode::TagsLoad, 0.45).unwrap();
        assert!((d - (1.6f64 / 0.45).powi(2)).abs() < 1e-9 * d);
        let low = SystemParams::new(3, 0.5, &p15()).unwrap();
        let d = threshold_helper(&low, &p15(), ThresholdMode::Quantile, 0.999).unwrap();
        assert!((d - 100.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_helper_cites_dstar() {
        let high = SystemParams::new(3, 0.8, &p15()).unwrap();
        let err = threshold_helper(&high, &p15(), ThresholdMode::BigLoad, 0.3).unwrap_err().to_string();
        assert!(err.contains("d* = 36"), "{err}");
        let err = threshold_helper(&high, &p15(), ThresholdMode::TagsLoad, 0.3).unwrap_err().to_string();
        assert!(err.contains("d* = 16"), "{err}");
        // a target at or above the whole load is met by any threshold
        assert!(threshold_helper(&high, &p15(), ThresholdMode::BigLoad, 3.0).is_ok_and(|d| d == 0.0));
        assert!(threshold_helper(&high, &p15(), ThresholdMode::Quantile, 1.0).is_err());
    }

    #[test]
    fn presets_resolve() {
        for (name, desc) in list_presets() {
            let p = preset(name).unwrap();
            assert!(!p.configs.is_empty(), "{name}");
            assert!(!desc.is_empty());
            for c in &p.configs {
                c.validate().unwrap();
                assert_eq!(c.arrivals, DEFAULT_ARRIVALS);
            }
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn preset_contents() {
        let exp1 = preset("exp1").unwrap();
        let labels: Vec<String> = exp1.configs.iter().map(|c| c.policy.to_string()).collect();
        assert_eq!(&labels[..4], ["fcfs", "srpt", "sek:eps=200", "split"]);
        let ds: Vec<f64> = exp1.configs[4..].iter().map(|c| c.policy.threshold().unwrap()).collect();
        for (d, q) in ds.iter().zip(QUANTILES) {
            assert!((p15().tail(*d) - (1.0 - q)).abs() < 1e-12);
        }
        let exp3 = preset("exp3").unwrap();
        assert!(exp3.configs.iter().all(|c| c.n == 10 && c.rho == 0.94));
        let a20 = preset("alpha20").unwrap();
        assert!(a20.configs.iter().all(|c| c.n == 3 && c.rho == 0.5 && c.dist == SizeDistribution::pareto(2.0, 1.0).unwrap()));
        let sweep = preset("appendix-sek-sweep").unwrap();
        assert!(sweep.configs.iter().any(|c| c.policy == PolicySpec::Sek { eps: 200.0, size: Default::default() }));
        let exp2 = preset("exp2").unwrap();
        for c in exp2.configs.iter().filter(|c| c.policy.threshold().is_some()) {
            let loads = c.threshold_loads().unwrap().unwrap();
            assert!(BIG_LOADS.iter().any(|&t| (loads.r_above_d - t).abs() < 1e-9));
            assert!(matches!(c.policy, PolicySpec::SplitThresh { small: SmallPolicy::Srpt, steal: true, .. }));
        }
    }

    #[test]
    fn unstable_small_system_warns() {
        // at rho=0.8 a threshold of 100 leaves too much work on the small side
        let c = ExperimentConfig::new("x", 3, 0.8, p15(), "splitthresh:d=100".parse().unwrap());
        assert_eq!(c.warnings().unwrap().len(), 1);
        let c = ExperimentConfig::new("x", 3, 0.8, p15(), "splitthresh:d=20".parse().unwrap());
        assert!(c.warnings().unwrap().is_empty());
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new("x", 3, 0.5, p15(), PolicySpec::Split);
        c.arrivals = 100;
        c.warmup_frac = 0.5;
        assert!(c.validate().is_ok());
        c.warmup_frac = 1.0;
        assert!(c.validate().is_err());
        c.warmup_frac = 0.0;
        c.n = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn small_experiment_writes_expected_files() {
        let dir = std::env::temp_dir().join(format!("splitsim-exp-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let mut c = ExperimentConfig::new("t", 3, 0.5, p15(), "splitthresh:d=50,steal=true".parse().unwrap());
        c.arrivals = 20_000;
        c.grid_points = 40;
        c.probe = Some(Probe::Ljf);
        let out = run_experiment(&[c.clone()], 2, &dir).unwrap();
        let names: Vec<String> = out.files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        let stem = c.stem();
        for want in ["_rep1.csv", "_rep2.csv", ".csv", "_small.csv", "_big.csv", ".json"] {
            assert!(names.contains(&format!("{stem}{want}")), "{names:?}");
        }
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap()).unwrap();
        assert_eq!(meta["seeds"], serde_json::json!([2, 3]));
        assert_eq!(meta["threshold"]["d"], 50.0);
        assert_eq!(meta["recorded"], 2 * 19_800);
        let csv = fs::read_to_string(dir.join(format!("{stem}.csv"))).unwrap();
        assert!(csv.starts_with("t,ccdf_T,denominator,normalized\n"));
        fs::remove_dir_all(&dir).unwrap();
    }
}
