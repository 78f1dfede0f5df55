//! Regret evaluation, instance generators and multi-seed trial orchestration.
//!
//! Benchmarks are always computed from the instance multiset, never from the
//! order in which a trial saw it, so every seed of a trial shares the same
//! benchmark value.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classification::{self, FiniteHypothesisClass, LabeledDataset, Threshold};
use crate::constrained::{self, ConstrainedInstance};
use crate::delayed;
use crate::experts::{self, FtlState};
use crate::instance::LossInstance;
use crate::lp::solve_opt_lp;
use crate::rng::{trial_rng, Purpose};
use crate::stream::{Action, PlayLog};
use crate::switching;
use crate::{Error, Result};

/// Per-block parameters recorded by the block-based learners.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDiagnostic {
    pub block: u32,
    /// First real round of the block (0-based).
    pub start: usize,
    /// Rounds actually played in the block (after truncation at `T`).
    pub len: usize,
    pub eps: f64,
    /// Shrunk per-round budget, constrained setting only.
    pub rho: Option<f64>,
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub seed: u64,
    pub horizon: usize,
    pub actions: usize,
    /// Learner's cumulative loss; cumulative reward up to the stopping time
    /// in the constrained setting. Includes switching costs when charged.
    pub learner_total: f64,
    pub benchmark: f64,
    pub regret: f64,
    /// Prefix regret after each round; the last entry equals `regret`.
    pub trajectory: Vec<f64>,
    pub switches: Option<usize>,
    pub violation_max: Option<f64>,
    pub stop_time: Option<usize>,
    pub diagnostics: Vec<BlockDiagnostic>,
}

/// Which regret definition to apply to a play log.
#[derive(Debug, Clone, Copy)]
pub enum Setting<'a> {
    /// `sum_t l_t(a_t) - min_a sum_t h_t(a)`.
    Standard(&'a LossInstance),
    /// Standard regret plus one unit per change of arm (`a_{T+1} = a_T`).
    Switching(&'a LossInstance),
    /// `T * OPT_LP - sum_{t <= tau} r_t . x_t`.
    Constrained { instance: &'a ConstrainedInstance, stop_time: Option<usize> },
}

fn check_log(log: &PlayLog, horizon: usize, actions: usize) -> Result<()> {
    if log.len() != horizon {
        return Err(Error::Validation(format!(
            "play log has {} rounds, instance has {horizon}",
            log.len()
        )));
    }
    for rec in log {
        if rec.row >= horizon {
            return Err(Error::Validation(format!("row {} out of range", rec.row)));
        }
        let ok = match &rec.action {
            Action::Pure(a) => *a < actions,
            Action::Mixed(x) => x.len() == actions,
        };
        if !ok {
            return Err(Error::Validation("play does not match the action count".into()));
        }
    }
    Ok(())
}

pub fn evaluate_regret(log: &PlayLog, setting: Setting<'_>, seed: u64) -> Result<RegretReport> {
    match setting {
        Setting::Standard(inst) => evaluate_losses(log, inst, false, seed),
        Setting::Switching(inst) => evaluate_losses(log, inst, true, seed),
        Setting::Constrained { instance, stop_time } => {
            evaluate_constrained(log, instance, stop_time, seed)
        }
    }
}

fn evaluate_losses(
    log: &PlayLog,
    inst: &LossInstance,
    switching: bool,
    seed: u64,
) -> Result<RegretReport> {
    check_log(log, inst.horizon(), inst.actions())?;
    let mut prefix = vec![0.0; inst.actions()];
    let mut learner = 0.0;
    let mut switches = 0usize;
    let mut trajectory = Vec::with_capacity(log.len());
    for (t, rec) in log.iter().enumerate() {
        let row = inst.row(rec.row);
        learner += rec.action.loss(row);
        for (p, v) in prefix.iter_mut().zip(row) {
            *p += v;
        }
        if switching {
            let Action::Pure(a) = rec.action else {
                return Err(Error::Validation("switching regret needs pure plays".into()));
            };
            if t > 0 && matches!(log[t - 1].action, Action::Pure(b) if b != a) {
                switches += 1;
            }
        }
        let best = prefix.iter().cloned().fold(f64::INFINITY, f64::min);
        trajectory.push(learner + switches as f64 - best);
    }
    let benchmark = inst.best_fixed_loss();
    let learner_total = learner + switches as f64;
    Ok(RegretReport {
        seed,
        horizon: inst.horizon(),
        actions: inst.actions(),
        learner_total,
        benchmark,
        regret: learner_total - benchmark,
        trajectory,
        switches: switching.then_some(switches),
        violation_max: None,
        stop_time: None,
        diagnostics: Vec::new(),
    })
}

fn evaluate_constrained(
    log: &PlayLog,
    inst: &ConstrainedInstance,
    stop_time: Option<usize>,
    seed: u64,
) -> Result<RegretReport> {
    check_log(log, inst.horizon(), inst.actions())?;
    let opt = solve_opt_lp(&inst.mean_rewards(), &inst.mean_costs(), inst.rho())?.value;
    let horizon = inst.horizon();
    let counted = stop_time.unwrap_or(horizon);
    let mut reward = 0.0;
    let mut consumed = vec![0.0; inst.resources()];
    let mut violation: f64 = 0.0;
    let mut trajectory = Vec::with_capacity(horizon);
    for (t, rec) in log.iter().enumerate() {
        if t < counted {
            reward += rec.action.loss(inst.reward_row(rec.row));
        }
        for (j, c) in consumed.iter_mut().enumerate() {
            *c += rec.action.loss(inst.cost_row(j, rec.row));
            violation = violation.max(*c - inst.budget());
        }
        trajectory.push((t + 1) as f64 * opt - reward);
    }
    let benchmark = horizon as f64 * opt;
    Ok(RegretReport {
        seed,
        horizon,
        actions: inst.actions(),
        learner_total: reward,
        benchmark,
        regret: benchmark - reward,
        trajectory,
        switches: None,
        violation_max: Some(violation.max(0.0)),
        stop_time,
        diagnostics: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    BirthdayAdversarial,
    IidUniformSupport,
    GapBandit,
    ConstrainedRandom,
    ThresholdLabels,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        GeneratorKind::BirthdayAdversarial,
        GeneratorKind::IidUniformSupport,
        GeneratorKind::GapBandit,
        GeneratorKind::ConstrainedRandom,
        GeneratorKind::ThresholdLabels,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::BirthdayAdversarial => "birthday_adversarial",
            GeneratorKind::IidUniformSupport => "iid_uniform_support",
            GeneratorKind::GapBandit => "gap_bandit",
            GeneratorKind::ConstrainedRandom => "constrained_random",
            GeneratorKind::ThresholdLabels => "threshold_labels",
        }
    }
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown generator `{s}`")))
    }
}

/// Parameters of a generated instance. Fields a generator does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub generator: GeneratorKind,
    pub horizon: usize,
    pub actions: usize,
    pub resources: usize,
    pub rho: f64,
    pub gap: f64,
    pub noise: f64,
    pub grid: usize,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(generator: GeneratorKind, horizon: usize) -> Self {
        Self {
            generator,
            horizon,
            actions: 2,
            resources: 1,
            rho: 0.25,
            gap: 0.3,
            noise: 0.1,
            grid: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum GeneratedInstance {
    Losses(LossInstance),
    Constrained(ConstrainedInstance),
    Labels { dataset: LabeledDataset, class: FiniteHypothesisClass<Threshold> },
}

impl GeneratedInstance {
    pub fn horizon(&self) -> usize {
        match self {
            GeneratedInstance::Losses(i) => i.horizon(),
            GeneratedInstance::Constrained(i) => i.horizon(),
            GeneratedInstance::Labels { dataset, .. } => dataset.len(),
        }
    }
}

pub fn generate_instance(spec: &InstanceSpec) -> Result<GeneratedInstance> {
    let t = spec.horizon;
    if t == 0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    let mut rng = trial_rng(spec.seed, Purpose::Instance);
    let grid = |i: usize| i as f64 / t as f64;
    Ok(match spec.generator {
        GeneratorKind::BirthdayAdversarial => {
            let rows: Vec<Vec<f64>> = (1..=t).map(|i| vec![grid(i), 0.0]).collect();
            GeneratedInstance::Losses(LossInstance::from_rows(&rows)?)
        }
        GeneratorKind::IidUniformSupport => {
            let rows: Vec<Vec<f64>> =
                (0..t).map(|_| vec![grid(rng.gen_range(1..=t)), 0.0]).collect();
            GeneratedInstance::Losses(LossInstance::from_rows(&rows)?)
        }
        GeneratorKind::GapBandit => GeneratedInstance::Losses(gap_bandit(spec, &mut rng)?),
        GeneratorKind::ConstrainedRandom => {
            GeneratedInstance::Constrained(constrained_random(spec, &mut rng)?)
        }
        GeneratorKind::ThresholdLabels => {
            if spec.grid == 0 || !(0.0..=0.5).contains(&spec.noise) {
                return Err(Error::Config("threshold_labels needs grid >= 1 and noise in [0, 0.5]".into()));
            }
            let class = FiniteHypothesisClass::threshold_grid(spec.grid);
            let target = spec.grid / 2;
            let theta = target as f64 / spec.grid as f64;
            let dataset = classification::threshold_dataset(t, theta, spec.noise, &mut rng);
            GeneratedInstance::Labels { dataset, class }
        }
    })
}

/// Binary losses with exact column counts: action 0 has mean `(1 - gap)/2`,
/// every other action `gap` more (up to rounding `gap * T` to an integer).
fn gap_bandit(spec: &InstanceSpec, rng: &mut impl Rng) -> Result<LossInstance> {
    let (t, k) = (spec.horizon, spec.actions);
    if k == 0 || !(0.0..=1.0).contains(&spec.gap) {
        return Err(Error::Config("gap_bandit needs k >= 1 and gap in [0,1]".into()));
    }
    let best_ones = ((1.0 - spec.gap) / 2.0 * t as f64).round() as usize;
    let other_ones = (best_ones + (spec.gap * t as f64).round() as usize).min(t);
    let mut losses = vec![0.0; t * k];
    for a in 0..k {
        let ones = if a == 0 { best_ones } else { other_ones };
        let mut column: Vec<f64> = (0..t).map(|i| if i < ones { 1.0 } else { 0.0 }).collect();
        column.shuffle(rng);
        for (i, v) in column.into_iter().enumerate() {
            losses[i * k + a] = v;
        }
    }
    LossInstance::new(t, k, losses)
}

/// Bernoulli rewards and costs around per-action means drawn once; the last
/// action is the null action (zero reward, zero cost).
fn constrained_random(spec: &InstanceSpec, rng: &mut impl Rng) -> Result<ConstrainedInstance> {
    let (t, k, m) = (spec.horizon, spec.actions, spec.resources);
    if k < 2 || m == 0 {
        return Err(Error::Config("constrained_random needs k >= 2 (null included) and m >= 1".into()));
    }
    let null = k - 1;
    let reward_means: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let cost_means: Vec<Vec<f64>> = (0..m).map(|_| (0..k).map(|_| rng.gen::<f64>()).collect()).collect();
    let mut rewards = vec![0.0; t * k];
    let mut costs = vec![vec![0.0; t * k]; m];
    for row in 0..t {
        for a in 0..k {
            if a == null {
                continue;
            }
            rewards[row * k + a] = f64::from(rng.gen_bool(reward_means[a]) as u8);
            for j in 0..m {
                costs[j][row * k + a] = f64::from(rng.gen_bool(cost_means[j][a]) as u8);
            }
        }
    }
    ConstrainedInstance::new(t, k, null, rewards, costs, spec.rho * t as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "id")]
pub enum Algorithm {
    Ftl,
    Birthday,
    SimFtl { delay: usize },
    SimConstrained { delta: f64 },
    Sse,
    Erm,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ftl => "ftl",
            Algorithm::Birthday => "birthday",
            Algorithm::SimFtl { .. } => "sim-ftl",
            Algorithm::SimConstrained { .. } => "sim-constrained",
            Algorithm::Sse => "sse",
            Algorithm::Erm => "erm",
        }
    }
}

pub fn run_trial(algo: Algorithm, instance: &GeneratedInstance, seed: u64) -> Result<RegretReport> {
    match (algo, instance) {
        (Algorithm::Ftl, GeneratedInstance::Losses(i)) => experts::run_ftl(i, seed),
        (Algorithm::Birthday, GeneratedInstance::Losses(i)) => experts::run_birthday(i, seed),
        (Algorithm::SimFtl { delay }, GeneratedInstance::Losses(i)) => {
            delayed::run_sim_delayed(i, delay, FtlState::new, seed).map(|run| run.report)
        }
        (Algorithm::Sse, GeneratedInstance::Losses(i)) => switching::run_sse(i, seed).map(|r| r.report),
        (Algorithm::SimConstrained { delta }, GeneratedInstance::Constrained(i)) => {
            constrained::run_sim_constrained(i, delta, seed).map(|run| run.report)
        }
        (Algorithm::Erm, GeneratedInstance::Labels { dataset, class }) => {
            classification::run_random_order_erm(class, dataset, seed).map(|run| run.report)
        }
        (algo, _) => Err(Error::Config(format!(
            "algorithm `{}` does not apply to this instance type",
            algo.name()
        ))),
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Per-seed reports, in the order of the requested seeds.
    pub reports: Vec<RegretReport>,
}

impl TrialSummary {
    pub fn from_reports(reports: Vec<RegretReport>) -> Self {
        let n = reports.len();
        let regrets: Vec<f64> = reports.iter().map(|r| r.regret).collect();
        let mean = if n == 0 { f64::NAN } else { compensated_sum(regrets.iter().copied()) / n as f64 };
        let std = if n < 2 {
            0.0
        } else {
            (compensated_sum(regrets.iter().map(|r| (r - mean).powi(2))) / (n - 1) as f64).sqrt()
        };
        Self {
            mean,
            std,
            min: regrets.iter().cloned().fold(f64::INFINITY, f64::min),
            max: regrets.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            reports,
        }
    }
}

/// Runs `algo` on the instance described by `spec` once per seed. With
/// `jobs > 1` trials run on scoped threads; results are merged in seed order.
pub fn run_trials(algo: Algorithm, spec: &InstanceSpec, seeds: &[u64], jobs: usize) -> Result<TrialSummary> {
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("trial seeds must be distinct".into()));
    }
    let instance = generate_instance(spec)?;
    let run = |seed: u64| {
        run_trial(algo, &instance, seed).map_err(|e| Error::Trial { seed, source: Box::new(e) })
    };
    let jobs = jobs.max(1).min(seeds.len().max(1));
    let results: Vec<Result<RegretReport>> = if jobs == 1 {
        seeds.iter().map(|&s| run(s)).collect()
    } else {
        let chunk = seeds.len().div_ceil(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(|&s| run(s)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("trial thread panicked"))
                .collect()
        })
    };
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(TrialSummary::from_reports(reports))
}

pub const REPORT_HEADER: [&str; 7] = ["seed", "T", "k", "regret", "switches", "violation_max", "stop_time"];

/// Writes `seed,T,k,regret,switches,violation_max,stop_time`, one row per report.
pub fn write_reports_csv<W: Write>(writer: W, reports: &[RegretReport]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(REPORT_HEADER)?;
    for r in reports {
        let opt = |v: Option<String>| v.unwrap_or_default();
        wtr.write_record([
            r.seed.to_string(),
            r.horizon.to_string(),
            r.actions.to_string(),
            r.regret.to_string(),
            opt(r.switches.map(|s| s.to_string())),
            opt(r.violation_max.map(|v| v.to_string())),
            opt(r.stop_time.map(|s| s.to_string())),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `t,cum_regret` with 1-based rounds.
pub fn write_trajectory_csv<W: Write>(writer: W, report: &RegretReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["t", "cum_regret"])?;
    for (t, v) in report.trajectory.iter().enumerate() {
        wtr.write_record([(t + 1).to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
