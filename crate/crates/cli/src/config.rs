//! `key=value` configuration files. Keys are the long flag names, with
//! `-` or `_` accepted interchangeably; `policy` may repeat.

use std::path::PathBuf;
use std::str::FromStr;

use crate::Cli;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Settings {
    pub preset: Option<String>,
    pub n: Option<usize>,
    pub rho: Option<f64>,
    pub dist: Option<String>,
    pub policies: Vec<String>,
    pub arrivals: Option<u64>,
    pub warmup_frac: Option<f64>,
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub out: Option<PathBuf>,
    pub grid_points: Option<usize>,
    pub probe: Option<String>,
}

fn number<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("line {line}: `{key}` expects a number, got `{value}`"))
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| format!("line {line}: expected key=value, got `{body}`"))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim().to_string();
            match key.as_str() {
                "preset" => s.preset = Some(value),
                "n" => s.n = Some(number(line, &key, &value)?),
                "rho" => s.rho = Some(number(line, &key, &value)?),
                "dist" => s.dist = Some(value),
                "policy" => s.policies.push(value),
                "arrivals" => s.arrivals = Some(number(line, &key, &value)?),
                "warmup-frac" => s.warmup_frac = Some(number(line, &key, &value)?),
                "seed" => s.seed = Some(number(line, &key, &value)?),
                "reps" => s.reps = Some(number(line, &key, &value)?),
                "out" => s.out = Some(PathBuf::from(value)),
                "grid-points" => s.grid_points = Some(number(line, &key, &value)?),
                "probe" => s.probe = Some(value),
                other => return Err(format!("line {line}: unknown key `{other}`")),
            }
        }
        Ok(s)
    }

    /// Flags win over the file.
    pub fn override_with(&mut self, cli: &Cli) {
        fn take<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        take(&mut self.preset, &cli.preset);
        take(&mut self.n, &cli.n);
        take(&mut self.rho, &cli.rho);
        take(&mut self.dist, &cli.dist);
        take(&mut self.arrivals, &cli.arrivals);
        take(&mut self.warmup_frac, &cli.warmup_frac);
        take(&mut self.seed, &cli.seed);
        take(&mut self.reps, &cli.reps);
        take(&mut self.out, &cli.out);
        take(&mut self.grid_points, &cli.grid_points);
        take(&mut self.probe, &cli.probe);
        if !cli.policy.is_empty() {
            self.policies.clone_from(&cli.policy);
        }
    }
}
