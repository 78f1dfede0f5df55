//! Online learning with long-term resource constraints in random order.
//!
//! Each round the learner plays a mixture `x_t`, then sees a reward vector and
//! `m` cost vectors. Consumption is fractional (`c_{j,t} . x_t`) and the budget
//! `B` per resource is enforced as a hard guard: once a resource could overrun
//! in the next round, the learner plays the zero-cost null action forever.
//!
//! The simulation trains a primal-dual routine on i.i.d. draws from the
//! observed tuples with a budget shrunk by `2 eps_i`, then replays its
//! average play on the real block. Blocks where the shrunk budget falls below
//! `rho / 2` are forfeited to the null action.

use std::io::{Read, Write};

use rand::Rng;

use crate::concentration::PrecisionSchedule;
use crate::harness::{evaluate_regret, BlockDiagnostic, RegretReport, Setting};
use crate::instance::{parse_real, Permutation};
use crate::lp::solve_opt_lp;
use crate::rng::{trial_rng, Purpose};
use crate::stream::{Action, MixedAction, PlayRecord};
use crate::{Error, Result};

/// Multiset of `T` tuples `(r, c_1, ..., c_m)` plus the budget `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedInstance {
    horizon: usize,
    actions: usize,
    null_action: usize,
    rewards: Vec<f64>,
    costs: Vec<Vec<f64>>,
    budget: f64,
}

impl ConstrainedInstance {
    /// `rewards` is `T x k` row-major; `costs[j]` likewise for resource `j`.
    pub fn new(
        horizon: usize,
        actions: usize,
        null_action: usize,
        rewards: Vec<f64>,
        costs: Vec<Vec<f64>>,
        budget: f64,
    ) -> Result<Self> {
        if horizon == 0 || actions == 0 || null_action >= actions {
            return Err(Error::Validation("need T >= 1, k >= 1 and a null action index below k".into()));
        }
        if costs.is_empty() {
            return Err(Error::Validation("need at least one resource".into()));
        }
        let size = horizon * actions;
        if rewards.len() != size || costs.iter().any(|c| c.len() != size) {
            return Err(Error::Validation("reward/cost tables do not match T x k".into()));
        }
        let in_unit = |v: &f64| (0.0..=1.0).contains(v);
        if !rewards.iter().all(in_unit) || !costs.iter().flatten().all(in_unit) {
            return Err(Error::Validation("rewards and costs must lie in [0,1]".into()));
        }
        for (j, c) in costs.iter().enumerate() {
            if (0..horizon).any(|t| c[t * actions + null_action] != 0.0) {
                return Err(Error::Validation(format!(
                    "null action has nonzero cost on resource {j}"
                )));
            }
        }
        let rho = budget / horizon as f64;
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Validation(format!("per-round budget {rho} must lie in (0,1]")));
        }
        Ok(Self { horizon, actions, null_action, rewards, costs, budget })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn resources(&self) -> usize {
        self.costs.len()
    }

    pub fn null_action(&self) -> usize {
        self.null_action
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn rho(&self) -> f64 {
        self.budget / self.horizon as f64
    }

    pub fn reward_row(&self, row: usize) -> &[f64] {
        &self.rewards[row * self.actions..(row + 1) * self.actions]
    }

    pub fn cost_row(&self, resource: usize, row: usize) -> &[f64] {
        &self.costs[resource][row * self.actions..(row + 1) * self.actions]
    }

    /// Flattened tuple `(r, c_1, ..., c_m)` of one row.
    pub fn tuple(&self, row: usize) -> Vec<f64> {
        let mut out = self.reward_row(row).to_vec();
        for j in 0..self.resources() {
            out.extend_from_slice(self.cost_row(j, row));
        }
        out
    }

    fn column_means(&self, table: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.actions];
        for row in table.chunks_exact(self.actions) {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        m.iter().map(|v| v / self.horizon as f64).collect()
    }

    pub fn mean_rewards(&self) -> Vec<f64> {
        self.column_means(&self.rewards)
    }

    pub fn mean_costs(&self) -> Vec<Vec<f64>> {
        self.costs.iter().map(|c| self.column_means(c)).collect()
    }

    /// Reads `t,r_1..r_k,c_1_1..c_m_k` (cost columns grouped by resource).
    /// The null action is the last action; the budget comes from the caller.
    pub fn read_csv<R: Read>(reader: R, budget: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let k = headers.iter().filter(|h| h.starts_with("r_")).count();
        let cost_cols = headers.iter().filter(|h| h.starts_with("c_")).count();
        if headers.get(0) != Some("t") || k == 0 || cost_cols == 0 || cost_cols % k != 0 {
            return Err(Error::Validation("constrained CSV header must be `t,r_1..r_k,c_1_1..c_m_k`".into()));
        }
        let m = cost_cols / k;
        let mut rewards = Vec::new();
        let mut costs = vec![Vec::new(); m];
        let mut horizon = 0;
        for record in rdr.records() {
            let record = record?;
            let vals = record.iter().skip(1).map(parse_real).collect::<Result<Vec<_>>>()?;
            if vals.len() != k + cost_cols {
                return Err(Error::Validation(format!("row {} has {} values", horizon + 1, vals.len())));
            }
            rewards.extend_from_slice(&vals[..k]);
            for (j, c) in costs.iter_mut().enumerate() {
                c.extend_from_slice(&vals[k + j * k..k + (j + 1) * k]);
            }
            horizon += 1;
        }
        Self::new(horizon, k, k - 1, rewards, costs, budget)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.actions).map(|a| format!("r_{a}")));
        for j in 1..=self.resources() {
            header.extend((1..=self.actions).map(|a| format!("c_{j}_{a}")));
        }
        wtr.write_record(&header)?;
        for t in 0..self.horizon {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(self.tuple(t).iter().map(f64::to_string));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Multiplicative weights on the Lagrangian payoff with projected dual ascent.
#[derive(Debug, Clone)]
pub struct PrimalDualState {
    null_action: usize,
    rho: f64,
    horizon: usize,
    eta_primal: f64,
    eta_dual: f64,
    log_weights: Vec<f64>,
    lambda: Vec<f64>,
    consumed: Vec<f64>,
    stopped: bool,
    last: Option<MixedAction>,
    play_sum: Vec<f64>,
    rounds: usize,
}

impl PrimalDualState {
    /// Routine for `horizon` simulated rounds with per-round budget `rho`.
    pub fn new(actions: usize, resources: usize, null_action: usize, rho: f64, horizon: usize) -> Result<Self> {
        if actions == 0 || null_action >= actions || horizon == 0 || !(rho > 0.0) {
            return Err(Error::Validation("primal-dual routine needs k >= 1, n >= 1, rho > 0".into()));
        }
        let n = horizon as f64;
        Ok(Self {
            null_action,
            rho,
            horizon,
            eta_primal: ((actions as f64).ln() / n).sqrt(),
            eta_dual: 1.0 / n.sqrt(),
            log_weights: vec![0.0; actions],
            lambda: vec![0.0; resources],
            consumed: vec![0.0; resources],
            stopped: false,
            last: None,
            play_sum: vec![0.0; actions],
            rounds: 0,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn consumed(&self) -> &[f64] {
        &self.consumed
    }

    pub fn stopped(&self) -> bool {
        self.stopped
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    fn weights_mixture(&self) -> MixedAction {
        let max = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|l| (l - max).exp()).collect();
        MixedAction::from_weights(&w).expect("softmax weights are positive")
    }

    /// Mixture for the next simulated round. Switches to the null action for
    /// good once a full unit of consumption could overrun `rho * n`.
    pub fn play(&mut self) -> MixedAction {
        let cap = self.rho * self.horizon as f64;
        if !self.stopped && self.consumed.iter().any(|c| c + 1.0 > cap) {
            self.stopped = true;
        }
        let x = if self.stopped {
            MixedAction::pure(self.log_weights.len(), self.null_action)
        } else {
            self.weights_mixture()
        };
        for (s, p) in self.play_sum.iter_mut().zip(x.probs()) {
            *s += p;
        }
        self.rounds += 1;
        self.last = Some(x.clone());
        x
    }

    /// Feeds the outcome of the last played round.
    pub fn update(&mut self, reward: &[f64], costs: &[&[f64]]) -> Result<()> {
        let x = self
            .last
            .take()
            .ok_or_else(|| Error::Usage("update called before play".into()))?;
        for (j, c) in costs.iter().enumerate() {
            let used = x.expected(c);
            self.consumed[j] += used;
            let cap = 1.0 / self.rho;
            self.lambda[j] = (self.lambda[j] + self.eta_dual * (used - self.rho)).clamp(0.0, cap);
        }
        if !self.stopped {
            for (a, lw) in self.log_weights.iter_mut().enumerate() {
                let penalty: f64 = self.lambda.iter().zip(costs).map(|(l, c)| l * c[a]).sum();
                *lw += self.eta_primal * (reward[a] - penalty);
            }
        }
        Ok(())
    }

    /// Average mixture played so far.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.rounds.max(1) as f64;
        self.play_sum.iter().map(|s| s / n).collect()
    }
}

/// Updates the routine with one observed round and returns its next mixture.
pub fn primal_dual_step(state: &mut PrimalDualState, reward: &[f64], costs: &[&[f64]]) -> Result<MixedAction> {
    state.update(reward, costs)?;
    Ok(state.play())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedBlock {
    pub index: u32,
    pub start: usize,
    pub len: usize,
    pub eps: f64,
    /// Shrunk budget `rho - 2 eps_i`.
    pub rho_block: f64,
    pub delta_prime: f64,
    pub forfeited: bool,
    pub pool_size: usize,
    pub pool_mean_reward: Vec<f64>,
    pub pool_mean_costs: Vec<Vec<f64>>,
    /// LP value on the pool means with budget `rho_block` (played blocks only).
    pub block_opt: Option<f64>,
    pub play: MixedAction,
}

#[derive(Debug, Clone)]
pub struct ConstrainedRun {
    pub report: RegretReport,
    pub blocks: Vec<ConstrainedBlock>,
    /// Per-resource realized consumption after every round.
    pub consumption: Vec<Vec<f64>>,
}

/// Runs the budget-shrunk simulation over one random-order pass.
pub fn run_sim_constrained(instance: &ConstrainedInstance, delta: f64, seed: u64) -> Result<ConstrainedRun> {
    let horizon = instance.horizon();
    let (k, m) = (instance.actions(), instance.resources());
    let null = instance.null_action();
    let rho = instance.rho();
    let budget = instance.budget();
    let perm = Permutation::from_seed(horizon, seed);
    let mut rng = trial_rng(seed, Purpose::Training);

    let mut pool: Vec<usize> = Vec::with_capacity(horizon);
    let mut log = Vec::with_capacity(horizon);
    let mut consumed = vec![0.0; m];
    let mut consumption = Vec::with_capacity(horizon);
    let mut stop_time: Option<usize> = None;
    let mut blocks = Vec::new();

    let mut play_round = |t: usize, x: &MixedAction, log: &mut Vec<PlayRecord>, pool: &mut Vec<usize>| {
        let row = perm.get(t);
        let x = if stop_time.is_none() && consumed.iter().any(|c| c + 1.0 > budget) {
            stop_time = Some(t);
            MixedAction::pure(k, null)
        } else if stop_time.is_some() {
            MixedAction::pure(k, null)
        } else {
            x.clone()
        };
        for (j, c) in consumed.iter_mut().enumerate() {
            *c += x.expected(instance.cost_row(j, row));
        }
        consumption.push(consumed.clone());
        log.push(PlayRecord { row, action: Action::Mixed(x) });
        pool.push(row);
    };

    let null_play = MixedAction::pure(k, null);
    play_round(0, &null_play, &mut log, &mut pool);

    if horizon > 1 {
        let schedule = PrecisionSchedule::Constrained { horizon, actions: k, resources: m, delta };
        schedule.validate()?;
        let delta_prime = delta / (3.0 * (horizon as f64).log2());
        let mut index = 0u32;
        let mut start = 1usize;
        while start < horizon {
            let train_len = 1usize << index;
            let end = (start + train_len).min(horizon);
            let eps = schedule.block_eps(index)?;
            let rho_block = rho - 2.0 * eps;
            let forfeited = rho_block < rho / 2.0;

            let mean = |table: &dyn Fn(usize) -> Vec<f64>| {
                let mut acc = vec![0.0; k];
                for &row in &pool {
                    for (a, v) in acc.iter_mut().zip(table(row)) {
                        *a += v;
                    }
                }
                acc.iter().map(|v| v / pool.len() as f64).collect::<Vec<f64>>()
            };
            let pool_mean_reward = mean(&|r| instance.reward_row(r).to_vec());
            let pool_mean_costs: Vec<Vec<f64>> =
                (0..m).map(|j| mean(&|r| instance.cost_row(j, r).to_vec())).collect();

            let (play, block_opt) = if forfeited {
                (null_play.clone(), None)
            } else {
                let mut routine = PrimalDualState::new(k, m, null, rho_block, train_len)?;
                for _ in 0..train_len {
                    routine.play();
                    let row = pool[rng.gen_range(0..pool.len())];
                    let costs: Vec<&[f64]> = (0..m).map(|j| instance.cost_row(j, row)).collect();
                    routine.update(instance.reward_row(row), &costs)?;
                }
                let opt = solve_opt_lp(&pool_mean_reward, &pool_mean_costs, rho_block)?.value;
                (MixedAction::new(routine.frequencies())?, Some(opt))
            };

            blocks.push(ConstrainedBlock {
                index,
                start,
                len: end - start,
                eps,
                rho_block,
                delta_prime,
                forfeited,
                pool_size: pool.len(),
                pool_mean_reward,
                pool_mean_costs,
                block_opt,
                play: play.clone(),
            });
            for t in start..end {
                play_round(t, &play, &mut log, &mut pool);
            }
            start = end;
            index += 1;
        }
    }

    let mut report = evaluate_regret(&log, Setting::Constrained { instance, stop_time }, seed)?;
    report.diagnostics = blocks
        .iter()
        .map(|b| BlockDiagnostic {
            block: b.index,
            start: b.start,
            len: b.len,
            eps: b.eps,
            rho: Some(b.rho_block),
        })
        .collect();
    Ok(ConstrainedRun { report, blocks, consumption })
}
