//! `splitsim`: runs M/G/n scheduling experiments and writes normalized
//! response-time tails as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser};
use splitsim::distributions::SizeDistribution;
use splitsim::experiment::{
    list_presets, preset, run_experiment, threshold_helper, ExperimentConfig, ExperimentError, Probe, ThresholdMode,
};
use splitsim::policies::PolicySpec;

mod config;

use config::Settings;

#[derive(Debug, Parser)]
#[command(name = "splitsim", version, about = "Tail-latency experiments for multiserver scheduling policies")]
pub struct Cli {
    /// Built-in experiment (see --list-presets).
    #[arg(long)]
    preset: Option<String>,
    /// Number of servers.
    #[arg(long)]
    n: Option<usize>,
    /// Per-server load.
    #[arg(long)]
    rho: Option<f64>,
    /// Size law, e.g. `pareto:alpha=1.5,xmin=1`.
    #[arg(long)]
    dist: Option<String>,
    /// Policy spec, e.g. `split` or `splitthresh:d=36,small=srpt,steal=true`.
    /// Repeat for several policies.
    #[arg(long)]
    policy: Vec<String>,
    /// Arrivals per replication.
    #[arg(long)]
    arrivals: Option<u64>,
    /// Fraction of arrivals excluded from statistics.
    #[arg(long)]
    warmup_frac: Option<f64>,
    /// Base seed; replication k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Points on the log-spaced evaluation grid.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Extra instrumentation: `pidle` or `ljf`.
    #[arg(long)]
    probe: Option<String>,
    /// Plain-text `key=value` file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Resolve a threshold (`quantile=0.999`, `big_load=0.45`,
    /// `tags_load=0.45`) for the given system and exit.
    #[arg(long)]
    threshold: Option<String>,
    /// Print the built-in presets and exit.
    #[arg(long)]
    list_presets: bool,
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.list_presets {
        for (name, desc) in list_presets() {
            println!("{name:<24} {desc}");
        }
        return Ok(());
    }
    let mut settings = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            Settings::parse(&text).map_err(Failure::Config)?
        }
        None => Settings::default(),
    };
    settings.override_with(&cli);

    if let Some(spec) = &cli.threshold {
        return print_threshold(&settings, spec);
    }

    let configs = settings.configs()?;
    let reps = settings.reps.unwrap_or(1);
    let out = settings.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let written = run_experiment(&configs, reps, &out)?;
    for w in &written.warnings {
        eprintln!("warning: {w}");
    }
    for c in &configs {
        println!("{} -> {}", c.stem(), out.join(format!("{}.csv", c.stem())).display());
    }
    eprintln!("wrote {} files to {}", written.files.len(), out.display());
    Ok(())
}

fn print_threshold(settings: &Settings, spec: &str) -> Result<(), Failure> {
    let (mode, target) = spec
        .split_once('=')
        .ok_or_else(|| Failure::Config(format!("threshold `{spec}` must look like mode=target")))?;
    let mode = match mode.trim() {
        "quantile" => ThresholdMode::Quantile,
        "big_load" => ThresholdMode::BigLoad,
        "tags_load" => ThresholdMode::TagsLoad,
        other => return Err(Failure::Config(format!("unknown threshold mode `{other}`"))),
    };
    let target: f64 = target.trim().parse().map_err(|_| Failure::Config(format!("bad threshold target `{target}`")))?;
    let probe = ExperimentConfig::new("threshold", settings.n()?, settings.rho()?, settings.dist()?, PolicySpec::Fcfs);
    let params = probe.params()?;
    let d = threshold_helper(&params, &probe.dist, mode, target)?;
    println!("{d}");
    Ok(())
}

impl Settings {
    fn n(&self) -> Result<usize, Failure> {
        self.n.ok_or_else(|| Failure::Config("missing --n".into()))
    }

    fn rho(&self) -> Result<f64, Failure> {
        self.rho.ok_or_else(|| Failure::Config("missing --rho".into()))
    }

    fn dist(&self) -> Result<SizeDistribution, Failure> {
        let text = self.dist.as_deref().unwrap_or("pareto:alpha=1.5,xmin=1");
        text.parse().map_err(|e| Failure::Config(format!("--dist: {e}")))
    }

    /// The configurations to run, with every override applied.
    fn configs(&self) -> Result<Vec<ExperimentConfig>, Failure> {
        let mut configs = match &self.preset {
            Some(name) => {
                if self.n.is_some() || self.rho.is_some() || self.dist.is_some() || !self.policies.is_empty() {
                    return Err(Failure::Config("--preset cannot be combined with --n, --rho, --dist or --policy".into()));
                }
                preset(name)?.configs
            }
            None => {
                if self.policies.is_empty() {
                    return Err(Failure::Config("give --preset or at least one --policy".into()));
                }
                let (n, rho, dist) = (self.n()?, self.rho()?, self.dist()?);
                self.policies
                    .iter()
                    .map(|p| {
                        let policy: PolicySpec = p.parse().map_err(|e| Failure::Config(format!("--policy: {e}")))?;
                        Ok(ExperimentConfig::new("custom", n, rho, dist, policy))
                    })
                    .collect::<Result<_, Failure>>()?
            }
        };
        let probe: Option<Probe> =
            self.probe.as_deref().map(str::parse).transpose().map_err(|e| Failure::Config(format!("--probe: {e}")))?;
        for c in &mut configs {
            if let Some(a) = self.arrivals {
                c.arrivals = a;
            }
            if let Some(s) = self.seed {
                c.seed = s;
            }
            if let Some(w) = self.warmup_frac {
                c.warmup_frac = w;
            }
            if let Some(g) = self.grid_points {
                c.grid_points = g;
            }
            if probe.is_some() {
                c.probe = probe;
            }
            c.validate()?;
        }
        Ok(configs)
    }
}
