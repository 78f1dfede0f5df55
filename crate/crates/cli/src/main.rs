//! `roml`: experiment runner for the random-order online learning library.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roml::concentration::{hoeffding_wor_eps, serfling_eps, wor_exceedance};
use roml::experts::{expected_tau_exact, monte_carlo_tau};
use roml::harness::{
    run_trials, write_reports_csv, write_trajectory_csv, Algorithm, GeneratorKind, InstanceSpec, RegretReport,
    TrialSummary,
};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "roml", version, about = "Random-order online learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Birthday-Test on the adversarial and the i.i.d. instance
    Separation(CommandArgs),
    /// Simulation with FTL under delayed feedback
    Delayed(CommandArgs),
    /// Budget-constrained simulation with a primal-dual routine
    Constrained(CommandArgs),
    /// Successive elimination with switching costs
    Switching(CommandArgs),
    /// Random-order ERM over threshold classifiers
    Classify(CommandArgs),
    /// Coverage of the without-replacement deviation bounds
    Bounds(CommandArgs),
    /// Expected birthday stopping time, exact and Monte-Carlo
    Tau(CommandArgs),
}

#[derive(Args)]
struct CommandArgs {
    #[command(flatten)]
    flags: ExperimentConfig,

    /// Read parameters from a JSON file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write the effective parameters as JSON to this file
    #[arg(long)]
    dump_config: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Suite(String),
    Run(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Suite(_) => 3,
            Failure::Run(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Suite(m) | Failure::Run(m) => m,
        }
    }
}

impl From<roml::Error> for Failure {
    fn from(e: roml::Error) -> Self {
        let mut root = &e;
        while let roml::Error::Trial { source, .. } = root {
            root = source;
        }
        match root {
            roml::Error::Config(_) | roml::Error::Validation(_) | roml::Error::Usage(_) | roml::Error::Domain(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Outcome {
    let (name, args) = match command {
        Command::Separation(a) => ("separation", a),
        Command::Delayed(a) => ("delayed", a),
        Command::Constrained(a) => ("constrained", a),
        Command::Switching(a) => ("switching", a),
        Command::Classify(a) => ("classify", a),
        Command::Bounds(a) => ("bounds", a),
        Command::Tau(a) => ("tau", a),
    };
    let cfg = match &args.config {
        Some(path) => args.flags.over(ExperimentConfig::load(path).map_err(Failure::Config)?),
        None => args.flags,
    };
    if let Some(path) = &args.dump_config {
        cfg.save(path).map_err(Failure::Run)?;
    }
    match name {
        "separation" => separation(&cfg),
        "delayed" => losses_command(&cfg, GeneratorKind::GapBandit, "sim-ftl"),
        "constrained" => constrained(&cfg),
        "switching" => losses_command(&cfg, GeneratorKind::GapBandit, "sse"),
        "classify" => classify(&cfg),
        "bounds" => bounds(&cfg),
        _ => tau(&cfg),
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Config(msg.into()))
}

fn generator(cfg: &ExperimentConfig, default: GeneratorKind) -> Result<GeneratorKind, Failure> {
    match &cfg.generator {
        Some(name) => Ok(name.parse()?),
        None => Ok(default),
    }
}

fn algorithm(cfg: &ExperimentConfig, default: &str, allowed: &[&str]) -> Result<Algorithm, Failure> {
    let name = cfg.algo.as_deref().unwrap_or(default);
    if !allowed.contains(&name) {
        return config_err(format!("algorithm `{name}` is not available here (choose from {})", allowed.join(", ")));
    }
    let delta = cfg.delta.unwrap_or(0.1);
    Ok(match name {
        "ftl" => Algorithm::Ftl,
        "birthday" => Algorithm::Birthday,
        "sim-ftl" => Algorithm::SimFtl { delay: cfg.d.unwrap_or(0) },
        "sim-constrained" => Algorithm::SimConstrained { delta },
        "sse" => Algorithm::Sse,
        "erm" => Algorithm::Erm,
        other => return config_err(format!("unknown algorithm `{other}`")),
    })
}

fn spec(cfg: &ExperimentConfig, generator: GeneratorKind, horizon: usize) -> Result<InstanceSpec, Failure> {
    let mut spec = InstanceSpec::new(generator, horizon);
    spec.actions = cfg.k.unwrap_or(spec.actions);
    spec.resources = cfg.m.unwrap_or(spec.resources);
    spec.rho = match cfg.budget {
        Some(b) => b / horizon as f64,
        None => cfg.rho.unwrap_or(spec.rho),
    };
    spec.gap = cfg.gap.unwrap_or(spec.gap);
    spec.noise = cfg.noise.unwrap_or(spec.noise);
    spec.grid = cfg.grid.unwrap_or(spec.grid);
    spec.seed = cfg.instance_seed.unwrap_or(0);
    if spec.actions == 0 {
        return config_err("--k must be positive");
    }
    if !(spec.rho > 0.0 && spec.rho <= 1.0) {
        return config_err(format!("per-round budget {} must lie in (0,1]", spec.rho));
    }
    Ok(spec)
}

struct Group {
    generator: GeneratorKind,
    horizon: usize,
    summary: TrialSummary,
}

fn run_groups(cfg: &ExperimentConfig, generators: &[GeneratorKind], algo: Algorithm) -> Result<Vec<Group>, Failure> {
    let seeds = cfg.seed_list().map_err(Failure::Config)?;
    let jobs = cfg.jobs.unwrap_or(1);
    if jobs == 0 {
        return config_err("--jobs must be positive");
    }
    let mut groups = Vec::new();
    for &generator in generators {
        for horizon in cfg.horizons().map_err(Failure::Config)? {
            let spec = spec(cfg, generator, horizon)?;
            let summary = run_trials(algo, &spec, &seeds, jobs)?;
            eprintln!(
                "{} {} T={horizon}: mean regret {:.4} (std {:.4}, min {:.4}, max {:.4}) over {} seeds",
                algo.name(),
                generator.name(),
                summary.mean,
                summary.std,
                summary.min,
                summary.max,
                seeds.len()
            );
            groups.push(Group { generator, horizon, summary });
        }
    }
    Ok(groups)
}

fn emit(cfg: &ExperimentConfig, groups: &[Group], per_generator: bool) -> Outcome {
    let reports: Vec<RegretReport> = groups.iter().flat_map(|g| g.summary.reports.iter().cloned()).collect();
    let mut stdout = io::stdout().lock();
    write_reports_csv(&mut stdout, &reports)?;
    stdout.flush()?;

    let Some(dir) = cfg.out_dir() else { return Ok(()) };
    fs::create_dir_all(&dir)?;
    write_reports_csv(fs::File::create(dir.join("results.csv"))?, &reports)?;
    if per_generator {
        let mut seen: Vec<GeneratorKind> = groups.iter().map(|g| g.generator).collect();
        seen.dedup();
        for g in seen {
            let own: Vec<RegretReport> = groups
                .iter()
                .filter(|x| x.generator == g)
                .flat_map(|x| x.summary.reports.iter().cloned())
                .collect();
            write_reports_csv(fs::File::create(dir.join(format!("results_{}.csv", g.name())))?, &own)?;
        }
    }
    for g in groups {
        let sub = if groups.len() == 1 {
            dir.clone()
        } else {
            dir.join(format!("{}_T{}", g.generator.name(), g.horizon))
        };
        fs::create_dir_all(&sub)?;
        for r in &g.summary.reports {
            write_trajectory_csv(fs::File::create(sub.join(format!("trajectory_{}.csv", r.seed)))?, r)?;
        }
    }
    Ok(())
}

fn separation(cfg: &ExperimentConfig) -> Outcome {
    let generators = match &cfg.generator {
        Some(_) => vec![generator(cfg, GeneratorKind::BirthdayAdversarial)?],
        None => vec![GeneratorKind::BirthdayAdversarial, GeneratorKind::IidUniformSupport],
    };
    if let Some(g) = generators.iter().find(|g| !is_loss_generator(**g)) {
        return config_err(format!("generator `{}` does not produce loss vectors", g.name()));
    }
    let algo = algorithm(cfg, "birthday", &["birthday", "ftl"])?;
    let groups = run_groups(cfg, &generators, algo)?;
    emit(cfg, &groups, true)
}

fn is_loss_generator(g: GeneratorKind) -> bool {
    matches!(g, GeneratorKind::BirthdayAdversarial | GeneratorKind::IidUniformSupport | GeneratorKind::GapBandit)
}

fn losses_command(cfg: &ExperimentConfig, default: GeneratorKind, algo: &str) -> Outcome {
    let g = generator(cfg, default)?;
    if !is_loss_generator(g) {
        return config_err(format!("generator `{}` does not produce loss vectors", g.name()));
    }
    let algo = algorithm(cfg, algo, &[algo, "ftl"])?;
    let groups = run_groups(cfg, &[g], algo)?;
    emit(cfg, &groups, false)
}

fn constrained(cfg: &ExperimentConfig) -> Outcome {
    let g = generator(cfg, GeneratorKind::ConstrainedRandom)?;
    if g != GeneratorKind::ConstrainedRandom {
        return config_err("constrained runs need the constrained_random generator");
    }
    let delta = cfg.delta.unwrap_or(0.1);
    if !(delta > 0.0 && delta < 1.0) {
        return config_err("--delta must lie in (0,1)");
    }
    let algo = algorithm(cfg, "sim-constrained", &["sim-constrained"])?;
    let groups = run_groups(cfg, &[g], algo)?;
    emit(cfg, &groups, false)
}

fn classify(cfg: &ExperimentConfig) -> Outcome {
    let g = generator(cfg, GeneratorKind::ThresholdLabels)?;
    if g != GeneratorKind::ThresholdLabels {
        return config_err("classify runs need the threshold_labels generator");
    }
    let algo = algorithm(cfg, "erm", &["erm"])?;
    let groups = run_groups(cfg, &[g], algo)?;
    emit(cfg, &groups, false)
}

fn write_table(cfg: &ExperimentConfig, file: &str, header: &[&str], rows: &[Vec<String>]) -> Outcome {
    let render = |w: &mut dyn Write| -> io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    };
    render(&mut io::stdout().lock())?;
    if let Some(dir) = cfg.out_dir() {
        fs::create_dir_all(&dir)?;
        render(&mut fs::File::create(Path::new(&dir).join(file))?)?;
    }
    Ok(())
}

fn bounds(cfg: &ExperimentConfig) -> Outcome {
    let horizons = match cfg.horizon {
        Some(_) => cfg.horizons().map_err(Failure::Config)?,
        None => vec![1024],
    };
    let delta = cfg.delta.unwrap_or(0.1);
    let trials = cfg.trials.unwrap_or(10_000);
    let seed = cfg.seed_list().map_err(Failure::Config)?[0];
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for t in horizons {
        let population: Vec<f64> = (0..t).map(|i| (i % 2) as f64).collect();
        for s in [16usize, 128].into_iter().filter(|&s| s <= t) {
            let eh = hoeffding_wor_eps(s, delta)?;
            let es = serfling_eps(s, t, delta)?;
            let xh = wor_exceedance(&population, s, eh, trials, seed)?;
            let xs = wor_exceedance(&population, s, es, trials, seed)?;
            if xh > delta || xs > delta {
                failures.push(format!("T={t} s={s}"));
            }
            rows.push(vec![t, s].into_iter().map(|v| v.to_string()).chain(
                [delta, eh, es, xh, xs].map(|v| v.to_string()),
            ).collect());
        }
    }
    write_table(
        cfg,
        "bounds.csv",
        &["T", "s", "delta", "eps_hoeffding", "eps_serfling", "exceed_hoeffding", "exceed_serfling"],
        &rows,
    )?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Suite(format!("exceedance above delta at {}", failures.join(", "))))
    }
}

fn tau(cfg: &ExperimentConfig) -> Outcome {
    let trials = cfg.trials.unwrap_or(10_000);
    let seed = cfg.seed_list().map_err(Failure::Config)?[0];
    let mut rows = Vec::new();
    for t in cfg.horizons().map_err(Failure::Config)? {
        let exact = expected_tau_exact(t)?;
        let (mc, se) = monte_carlo_tau(t, trials, seed)?;
        rows.push([t as f64, exact, mc, se, exact / (t as f64).sqrt()].map(|v| v.to_string()).to_vec());
    }
    write_table(cfg, "tau.csv", &["T", "expected_tau", "mc_mean", "mc_stderr", "ratio_sqrt_T"], &rows)
}
