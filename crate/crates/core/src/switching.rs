//! Simulation-successive-elimination for bandits with switching costs.
//!
//! After an initial round-robin over all arms, block `i` (rounds
//! `2^i + 1 ..= 2^{i+1}`) plays every active arm for `floor(2^i / |A|)`
//! consecutive rounds in index order, gives the remainder to the last active
//! arm, and eliminates at the block end. Each block costs at most `|A|`
//! switches, so the total is `O(k log T)`.

use crate::concentration::PrecisionSchedule;
use crate::harness::{evaluate_regret, BlockDiagnostic, RegretReport, Setting};
use crate::instance::LossInstance;
use crate::stream::{Action, FeedbackKind, Observation, RoundStream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SseState {
    active: Vec<usize>,
    counts: Vec<usize>,
    sums: Vec<f64>,
    block: u32,
    switches: usize,
    last: Option<usize>,
}

impl SseState {
    pub fn new(actions: usize) -> Self {
        Self {
            active: (0..actions).collect(),
            counts: vec![0; actions],
            sums: vec![0.0; actions],
            block: 0,
            switches: 0,
            last: None,
        }
    }

    /// Active arms in increasing index order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn count(&self, action: usize) -> usize {
        self.counts[action]
    }

    /// Running mean of the observed losses of `action` (0 if never played).
    pub fn mean(&self, action: usize) -> f64 {
        match self.counts[action] {
            0 => 0.0,
            n => self.sums[action] / n as f64,
        }
    }

    pub fn block(&self) -> u32 {
        self.block
    }

    pub fn switches(&self) -> usize {
        self.switches
    }

    pub fn last(&self) -> Option<usize> {
        self.last
    }

    /// Records that `action` was played and showed `loss`.
    pub fn record(&mut self, action: usize, loss: f64) {
        if self.last.is_some_and(|l| l != action) {
            self.switches += 1;
        }
        self.last = Some(action);
        self.counts[action] += 1;
        self.sums[action] += loss;
    }
}

/// Drops every active arm with `mean(a) - eps > min_{a'} (mean(a') + eps)`.
pub fn eliminate(state: &mut SseState, eps: f64) -> &[usize] {
    let floor = state
        .active
        .iter()
        .map(|&a| state.mean(a) + eps)
        .fold(f64::INFINITY, f64::min);
    let means: Vec<f64> = state.active.iter().map(|&a| state.mean(a)).collect();
    let mut keep = means.iter().map(|m| m - eps <= floor);
    state.active.retain(|_| keep.next().unwrap_or(true));
    &state.active
}

/// Arm schedule of one block of `len` rounds over `active`.
pub fn block_schedule(active: &[usize], len: usize) -> Vec<usize> {
    let share = len / active.len();
    let mut plays: Vec<usize> = active
        .iter()
        .flat_map(|&a| std::iter::repeat_n(a, share))
        .collect();
    let last = *active.last().expect("active set is never empty");
    plays.resize(len, last);
    plays
}

#[derive(Debug, Clone)]
pub struct SseRun {
    pub report: RegretReport,
    /// Block at whose end each arm was eliminated.
    pub eliminated_at: Vec<Option<u32>>,
    /// Index of the last (possibly truncated) block.
    pub final_block: u32,
    /// Arms still active while the final block is played.
    pub final_active: Vec<usize>,
    pub state: SseState,
}

impl SseRun {
    /// Whether some arm with the smallest total loss survived into the final block.
    pub fn best_survived(&self, instance: &LossInstance) -> bool {
        let sums = instance.column_sums();
        let best = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        self.final_active.iter().any(|&a| sums[a] == best)
    }

    /// Whether `action` was eliminated before the final block started.
    pub fn eliminated_early(&self, action: usize) -> bool {
        self.eliminated_at[action].is_some_and(|b| b < self.final_block)
    }
}

/// Runs simulation-successive-elimination under bandit feedback.
pub fn run_sse(instance: &LossInstance, seed: u64) -> Result<SseRun> {
    let horizon = instance.horizon();
    let k = instance.actions();
    let mut stream = RoundStream::new(instance.clone(), seed, FeedbackKind::Bandit)?;
    let mut state = SseState::new(k);
    let mut eliminated_at = vec![None; k];
    let mut diagnostics = Vec::new();

    let play = |stream: &mut RoundStream, state: &mut SseState, a: usize| -> Result<()> {
        let out = stream.step(Action::Pure(a))?;
        match out.observation {
            Observation::Bandit { action, loss } => state.record(action, loss),
            Observation::Vectors(_) => return Err(Error::Usage("expected bandit feedback".into())),
        }
        Ok(())
    };

    let first = k.next_power_of_two().trailing_zeros();
    let warmup = (1usize << first).min(horizon);
    for t in 0..warmup {
        play(&mut stream, &mut state, t % k)?;
    }

    let mut final_block = first;
    let mut final_active = state.active.clone();
    if horizon > warmup {
        let schedule = PrecisionSchedule::Sse { horizon, actions: k };
        let mut i = first;
        loop {
            let start = 1usize << i;
            let end = (start << 1).min(horizon);
            state.block = i;
            final_block = i;
            final_active = state.active.clone();
            for a in block_schedule(&state.active, start).into_iter().take(end - start) {
                play(&mut stream, &mut state, a)?;
            }
            let eps = schedule.block_eps(i)?;
            diagnostics.push(BlockDiagnostic { block: i, start, len: end - start, eps, rho: None });
            if end == horizon {
                break;
            }
            let before = state.active.clone();
            eliminate(&mut state, eps);
            for a in before {
                if !state.active.contains(&a) {
                    eliminated_at[a] = Some(i);
                }
            }
            i += 1;
        }
    }

    let mut report = evaluate_regret(stream.log(), Setting::Switching(instance), seed)?;
    report.diagnostics = diagnostics;
    Ok(SseRun { report, eliminated_at, final_block, final_active, state })
}

/// `(k+1)(ceil(log2 T) + 1)`.
pub fn switch_cap(horizon: usize, actions: usize) -> usize {
    (actions + 1) * (horizon.next_power_of_two().trailing_zeros() as usize + 1)
}
