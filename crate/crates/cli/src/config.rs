use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

/// A single value or a list; `--T 1024,2048` and `"T": [1024, 2048]` both work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<usize> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// `N` means seeds `0..N`; a comma-separated list (or JSON array) is used as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

fn parse_horizons(s: &str) -> Result<OneOrMany, String> {
    let vals = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad horizon `{p}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match vals.as_slice() {
        [one] => OneOrMany::One(*one),
        _ => OneOrMany::Many(vals),
    })
}

fn parse_seeds(s: &str) -> Result<SeedSpec, String> {
    if s.contains(',') {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<u64>().map_err(|e| format!("bad seed `{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(SeedSpec::List)
    } else {
        s.trim().parse::<u64>().map(SeedSpec::Count).map_err(|e| format!("bad seed count `{s}`: {e}"))
    }
}

/// Experiment parameters. Every field is optional; config-file values are
/// layered under command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Horizon(s), comma separated
    #[arg(long = "T", value_parser = parse_horizons)]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none", default)]
    pub horizon: Option<OneOrMany>,

    /// Number of actions
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,

    /// Number of resources
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<usize>,

    /// Feedback delay in rounds
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,

    /// Per-round budget
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<f64>,

    /// Total budget per resource (overrides --rho)
    #[arg(long = "B")]
    #[serde(rename = "B", skip_serializing_if = "Option::is_none", default)]
    pub budget: Option<f64>,

    /// Confidence parameter
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,

    /// Seed count `N` (seeds 0..N) or a comma-separated list
    #[arg(long, value_parser = parse_seeds)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seeds: Option<SeedSpec>,

    /// Instance generator
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generator: Option<String>,

    /// Learning algorithm
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub algo: Option<String>,

    /// Output directory (falls back to $ROML_OUT_DIR)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<PathBuf>,

    /// Maximum number of parallel trials
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jobs: Option<usize>,

    /// Loss gap of gap_bandit instances
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gap: Option<f64>,

    /// Label noise of threshold_labels instances
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise: Option<f64>,

    /// Threshold grid size of threshold_labels instances
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<usize>,

    /// Seed of the instance generator
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub instance_seed: Option<u64>,

    /// Resamples for `tau` and `bounds`
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials: Option<usize>,
}

macro_rules! layer {
    ($base:ident, $top:ident; $($field:ident),*) => {
        ExperimentConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl ExperimentConfig {
    /// Fields set in `self` take precedence over `base`.
    pub fn over(self, base: ExperimentConfig) -> ExperimentConfig {
        let top = self;
        layer!(base, top; horizon, k, m, d, rho, budget, delta, seeds, generator, algo, out, jobs, gap,
            noise, grid, instance_seed, trials)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<(), String> {
        let text = serde_json::to_string_pretty(self).map_err(|e| e.to_string())?;
        std::fs::write(path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))
    }

    pub fn horizons(&self) -> Result<Vec<usize>, String> {
        let hs = self.horizon.as_ref().ok_or("missing required --T")?.values();
        if hs.is_empty() || hs.contains(&0) {
            return Err("--T needs positive horizons".into());
        }
        Ok(hs)
    }

    pub fn seed_list(&self) -> Result<Vec<u64>, String> {
        let seeds = self.seeds.clone().unwrap_or(SeedSpec::Count(1)).seeds();
        if seeds.is_empty() {
            return Err("--seeds selects no seeds".into());
        }
        Ok(seeds)
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.out.clone().or_else(|| std::env::var_os("ROML_OUT_DIR").map(PathBuf::from))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file = ExperimentConfig { k: Some(4), d: Some(2), ..Default::default() };
        let flags = ExperimentConfig { k: Some(3), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!((merged.k, merged.d), (Some(3), Some(2)));
    }

    #[test]
    fn seed_and_horizon_syntax() {
        assert_eq!(parse_seeds("3").unwrap().seeds(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5,9").unwrap().seeds(), vec![5, 9]);
        assert_eq!(parse_seeds("7,").unwrap().seeds(), vec![7]);
        assert!(parse_seeds("x").is_err());
        assert_eq!(parse_horizons("16").unwrap(), OneOrMany::One(16));
        assert_eq!(parse_horizons("16,32").unwrap().values(), vec![16, 32]);
    }

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig {
            horizon: Some(OneOrMany::Many(vec![64, 128])),
            seeds: Some(SeedSpec::List(vec![1, 2])),
            budget: Some(16.0),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"T\":[64,128]") && text.contains("\"B\":16.0"));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        assert!(serde_json::from_str::<ExperimentConfig>("{\"bogus\": 1}").is_err());
    }
}
