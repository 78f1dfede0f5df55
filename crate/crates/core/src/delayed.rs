//! Block simulation for prediction with a fixed, known feedback delay `d`.
//!
//! Round 0 plays action 0. Block `i` then consists of a buffer of `d` rounds
//! (waiting for the feedback of everything played before it) followed by
//! `2^i` test rounds, truncated at `T`. At the start of each block the pool of
//! observed losses holds round 0 plus every earlier test round, exactly `2^i`
//! vectors; a fresh stochastic learner is trained on `2^i` i.i.d. draws from
//! that pool and its play frequencies are used on the real test rounds.
//! Buffer rounds replay the previous frequencies and their losses are
//! discarded from the pool.

use rand::Rng;

use crate::concentration::PrecisionSchedule;
use crate::experts::Learner;
use crate::harness::{evaluate_regret, BlockDiagnostic, RegretReport, Setting};
use crate::instance::LossInstance;
use crate::rng::{trial_rng, Purpose};
use crate::stream::{Action, FeedbackKind, MixedAction, RoundStream};
use crate::{Error, Result};

/// Multiset of loss vectors revealed from non-buffer rounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservedPool {
    rows: Vec<Vec<f64>>,
}

impl ObservedPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, loss: Vec<f64>) {
        self.rows.push(loss);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Exact per-action mean of the uniform distribution over the pool.
    pub fn mean(&self) -> Vec<f64> {
        let k = self.rows.first().map_or(0, Vec::len);
        let mut m = vec![0.0; k];
        for row in &self.rows {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let n = self.rows.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// One uniform draw (with replacement).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[f64] {
        &self.rows[rng.gen_range(0..self.rows.len())]
    }
}

/// Placement of block `i` on the real time line (0-based rounds).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPlan {
    pub index: u32,
    pub buffer_start: usize,
    pub test_start: usize,
    /// Exclusive end of the test rounds, clipped to the horizon.
    pub test_end: usize,
}

impl BlockPlan {
    pub fn train_len(&self) -> usize {
        1 << self.index
    }

    pub fn test_len(&self) -> usize {
        self.test_end - self.test_start
    }
}

/// Buffers and test blocks tiling rounds `1..T` (round 0 is played separately).
pub fn block_plans(horizon: usize, delay: usize) -> Vec<BlockPlan> {
    let mut plans = Vec::new();
    let mut next = 1;
    let mut index = 0u32;
    while next < horizon {
        let test_start = (next + delay).min(horizon);
        let test_end = (test_start + (1usize << index)).min(horizon);
        plans.push(BlockPlan { index, buffer_start: next, test_start, test_end });
        next = test_end;
        index += 1;
    }
    plans
}

/// Trains a fresh learner on `train_len` i.i.d. draws from the pool and
/// returns how often it played each action. Never touches the environment.
pub fn train_counts<L: Learner, R: Rng + ?Sized>(
    pool: &ObservedPool,
    train_len: usize,
    mut learner: L,
    actions: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Err(Error::Usage("cannot train on an empty pool".into()));
    }
    let mut counts = vec![0usize; actions];
    for _ in 0..train_len {
        counts[learner.act()] += 1;
        learner.observe(pool.sample(rng));
    }
    Ok(counts)
}

/// What happened in one block, for diagnostics and invariant checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedBlock {
    pub plan: BlockPlan,
    pub eps: f64,
    pub pool_size: usize,
    /// Mean of the training distribution at the start of the block.
    pub pool_mean: Vec<f64>,
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DelayedRun {
    pub report: RegretReport,
    pub blocks: Vec<DelayedBlock>,
    /// Real environment interactions.
    pub interactions: usize,
}

/// Runs the delayed-feedback simulation with a stochastic learner built by
/// `make_learner(k)` for every block.
pub fn run_sim_delayed<L, F>(
    instance: &LossInstance,
    delay: usize,
    mut make_learner: F,
    seed: u64,
) -> Result<DelayedRun>
where
    L: Learner,
    F: FnMut(usize) -> L,
{
    let horizon = instance.horizon();
    let k = instance.actions();
    let mut stream = RoundStream::new(instance.clone(), seed, FeedbackKind::Delayed(delay))?;
    let mut train_rng = trial_rng(seed, Purpose::Training);
    let schedule = PrecisionSchedule::Delayed { horizon };
    let plans = block_plans(horizon, delay);

    let mut keep = vec![false; horizon];
    keep[0] = true;
    for p in &plans {
        keep[p.test_start..p.test_end].iter_mut().for_each(|v| *v = true);
    }

    let mut pool = ObservedPool::new();
    let play = |stream: &mut RoundStream, action: Action, pool: &mut ObservedPool| -> Result<()> {
        let out = stream.step(action)?;
        for r in out.observation.vectors() {
            if keep[r.round] {
                pool.add(r.loss.clone());
            }
        }
        Ok(())
    };

    play(&mut stream, Action::Pure(0), &mut pool)?;
    let mut current = MixedAction::pure(k, 0);
    let mut blocks = Vec::with_capacity(plans.len());
    for plan in &plans {
        for _ in plan.buffer_start..plan.test_start {
            play(&mut stream, Action::Mixed(current.clone()), &mut pool)?;
        }
        if plan.test_start == plan.test_end {
            break;
        }
        let pool_mean = pool.mean();
        let counts = train_counts(&pool, plan.train_len(), make_learner(k), k, &mut train_rng)?;
        let n = plan.train_len() as f64;
        let frequencies: Vec<f64> = counts.iter().map(|c| *c as f64 / n).collect();
        current = MixedAction::new(frequencies.clone())?;
        blocks.push(DelayedBlock {
            plan: *plan,
            eps: schedule.block_eps(plan.index)?,
            pool_size: pool.len(),
            pool_mean,
            frequencies,
        });
        for _ in plan.test_start..plan.test_end {
            play(&mut stream, Action::Mixed(current.clone()), &mut pool)?;
        }
    }

    let interactions = stream.interaction_count();
    let mut report = evaluate_regret(stream.log(), Setting::Standard(instance), seed)?;
    report.diagnostics = blocks
        .iter()
        .map(|b| BlockDiagnostic {
            block: b.plan.index,
            start: b.plan.test_start,
            len: b.plan.test_len(),
            eps: b.eps,
            rho: None,
        })
        .collect();
    Ok(DelayedRun { report, blocks, interactions })
}
