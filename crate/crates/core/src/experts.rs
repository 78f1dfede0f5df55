//! Prediction with experts: Follow-The-Leader and the Birthday-Test learner.
//!
//! Birthday-Test plays action 0 while the losses of that action look like
//! draws *without replacement* from the grid `{1/T, ..., T/T}`. The first time
//! a value falls off the grid or repeats, it stops (at round `tau`) and hands
//! over to a fresh Follow-The-Leader. On i.i.d. inputs the birthday paradox
//! makes `tau` of order `sqrt(T)`; on the random-order instance whose action-0
//! column is a permutation of the grid, `tau` never fires.

use std::collections::HashSet;

use rand::Rng;

use crate::harness::{evaluate_regret, RegretReport, Setting};
use crate::instance::LossInstance;
use crate::rng::{trial_rng, Purpose};
use crate::stream::{Action, FeedbackKind, Observation, RoundStream};
use crate::{Error, Result};

const GRID_TOL: f64 = 1e-9;

/// A full-feedback learner: picks an action, then sees the whole loss vector.
pub trait Learner {
    fn act(&mut self) -> usize;
    fn observe(&mut self, loss: &[f64]);
}

/// Running sums for Follow-The-Leader.
#[derive(Debug, Clone, PartialEq)]
pub struct FtlState {
    cumulative: Vec<f64>,
    rounds: usize,
}

impl FtlState {
    pub fn new(actions: usize) -> Self {
        Self { cumulative: vec![0.0; actions], rounds: 0 }
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }
}

/// Argmin of the cumulative losses; ties go to the lowest index.
pub fn ftl_choose(state: &FtlState) -> usize {
    let mut best = 0;
    for (a, v) in state.cumulative.iter().enumerate().skip(1) {
        if *v < state.cumulative[best] {
            best = a;
        }
    }
    best
}

impl Learner for FtlState {
    fn act(&mut self) -> usize {
        ftl_choose(self)
    }

    fn observe(&mut self, loss: &[f64]) {
        for (c, v) in self.cumulative.iter_mut().zip(loss) {
            *c += v;
        }
        self.rounds += 1;
    }
}

#[derive(Debug, Clone)]
pub struct BirthdayState {
    horizon: usize,
    seen: HashSet<u64>,
    rounds: usize,
    stop_time: Option<usize>,
    inner: FtlState,
}

impl BirthdayState {
    pub fn new(horizon: usize, actions: usize) -> Self {
        Self {
            horizon,
            seen: HashSet::new(),
            rounds: 0,
            stop_time: None,
            inner: FtlState::new(actions),
        }
    }

    pub fn stopped(&self) -> bool {
        self.stop_time.is_some()
    }

    /// 1-based round at which the test fired.
    pub fn stop_time(&self) -> Option<usize> {
        self.stop_time
    }

    pub fn inner(&self) -> &FtlState {
        &self.inner
    }

    /// Grid key `i` when `value == i/T` (within `1e-9` on `value * T`), `i >= 1`.
    fn grid_key(&self, value: f64) -> Option<u64> {
        let scaled = value * self.horizon as f64;
        let nearest = scaled.round();
        ((scaled - nearest).abs() <= GRID_TOL && nearest >= 1.0).then_some(nearest as u64)
    }
}

impl Learner for BirthdayState {
    fn act(&mut self) -> usize {
        if self.stopped() {
            self.inner.act()
        } else {
            0
        }
    }

    fn observe(&mut self, loss: &[f64]) {
        self.rounds += 1;
        if self.stopped() {
            self.inner.observe(loss);
            return;
        }
        let fresh = match self.grid_key(loss[0]) {
            Some(key) => self.seen.insert(key),
            None => false,
        };
        if !fresh {
            self.stop_time = Some(self.rounds);
            self.inner = FtlState::new(loss.len());
        }
    }
}

/// Feeds one observed loss vector and returns the action for the next round.
pub fn birthday_step(state: &mut BirthdayState, observed: &[f64]) -> usize {
    state.observe(observed);
    state.act()
}

/// `E[tau]` for i.i.d. uniform draws from a `T`-point support, where `tau` is
/// the round of the first repeated value:
/// `sum_{t=0}^{T} prod_{j<t} (T-j)/T`, accumulated without factorials.
pub fn expected_tau_exact(horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::Domain("expected_tau_exact needs T >= 1".into()));
    }
    let n = horizon as f64;
    let mut total = 0.0;
    let mut survive = 1.0;
    for t in 0..=horizon {
        total += survive;
        survive *= (n - t as f64) / n;
        if survive == 0.0 {
            break;
        }
    }
    Ok(total)
}

/// Round of the first repeat among i.i.d. uniform draws from `0..horizon`.
pub fn sample_tau<R: Rng + ?Sized>(horizon: usize, rng: &mut R, scratch: &mut Vec<bool>) -> usize {
    scratch.clear();
    scratch.resize(horizon, false);
    let mut t = 0;
    loop {
        t += 1;
        let v = rng.gen_range(0..horizon);
        if std::mem::replace(&mut scratch[v], true) {
            return t;
        }
    }
}

/// Monte-Carlo estimate of `E[tau]`: `(mean, standard error)`.
pub fn monte_carlo_tau(horizon: usize, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if horizon == 0 || trials < 2 {
        return Err(Error::Domain("need T >= 1 and at least two trials".into()));
    }
    let mut rng = trial_rng(seed, Purpose::Resampling);
    let mut scratch = Vec::new();
    let samples: Vec<f64> = (0..trials)
        .map(|_| sample_tau(horizon, &mut rng, &mut scratch) as f64)
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok((mean, (var / trials as f64).sqrt()))
}

/// Runs a full-feedback learner over one random-order pass.
pub fn run_full_feedback<L: Learner>(
    instance: &LossInstance,
    learner: &mut L,
    seed: u64,
) -> Result<RegretReport> {
    let mut stream = RoundStream::new(instance.clone(), seed, FeedbackKind::Full)?;
    while !stream.is_finished() {
        let a = learner.act();
        let out = stream.step(Action::Pure(a))?;
        if let Observation::Vectors(revealed) = out.observation {
            for r in revealed {
                learner.observe(&r.loss);
            }
        }
    }
    evaluate_regret(stream.log(), Setting::Standard(instance), seed)
}

pub fn run_ftl(instance: &LossInstance, seed: u64) -> Result<RegretReport> {
    run_full_feedback(instance, &mut FtlState::new(instance.actions()), seed)
}

pub fn run_birthday(instance: &LossInstance, seed: u64) -> Result<RegretReport> {
    let mut state = BirthdayState::new(instance.horizon(), instance.actions());
    let mut report = run_full_feedback(instance, &mut state, seed)?;
    report.stop_time = state.stop_time();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn ftl_strict_and_tied_argmin() {
        let s = FtlState { cumulative: vec![0.2, 0.5], rounds: 1 };
        assert_eq!(ftl_choose(&s), 0);
        let s = FtlState { cumulative: vec![0.3, 0.3], rounds: 1 };
        assert_eq!(ftl_choose(&s), 0);
        let s = FtlState { cumulative: vec![0.3, 0.3, 0.1, 0.1], rounds: 1 };
        assert_eq!(ftl_choose(&s), 2);
    }

    #[test]
    fn ftl_matches_exhaustive_argmin() {
        let mut rng = trial_rng(3, Purpose::Resampling);
        for _ in 0..200 {
            let k = rng.gen_range(1..6);
            let mut s = FtlState::new(k);
            for _ in 0..10 {
                let row: Vec<f64> = (0..k).map(|_| rng.gen_range(0..4) as f64 / 4.0).collect();
                s.observe(&row);
            }
            let min = s.cumulative.iter().cloned().fold(f64::INFINITY, f64::min);
            let brute = (0..k).find(|&a| s.cumulative[a] == min).unwrap();
            assert_eq!(ftl_choose(&s), brute);
        }
    }

    #[test]
    fn duplicate_stops_the_test() {
        let mut s = BirthdayState::new(10, 2);
        assert_eq!(s.act(), 0);
        assert_eq!(birthday_step(&mut s, &[0.3, 0.0]), 0);
        assert!(!s.stopped());
        // round 3 is played by a fresh FTL (empty sums, tie -> action 0)
        assert_eq!(birthday_step(&mut s, &[0.3, 0.0]), 0);
        assert_eq!(s.stop_time(), Some(2));
        assert_eq!(s.inner().rounds(), 0);
        assert_eq!(birthday_step(&mut s, &[0.5, 0.1]), 1);
    }

    #[test]
    fn off_grid_value_stops_immediately() {
        let mut s = BirthdayState::new(10, 2);
        birthday_step(&mut s, &[0.33, 0.0]);
        assert_eq!(s.stop_time(), Some(1));
        let mut s = BirthdayState::new(10, 2);
        birthday_step(&mut s, &[0.0, 0.0]);
        assert_eq!(s.stop_time(), Some(1), "0/T is not on the grid");
    }

    #[test]
    fn adversarial_grid_never_stops() {
        let t = 64;
        let rows: Vec<Vec<f64>> = (1..=t).map(|i| vec![i as f64 / t as f64, 0.0]).collect();
        let inst = LossInstance::from_rows(&rows).unwrap();
        for seed in 0..5 {
            let report = run_birthday(&inst, seed).unwrap();
            assert_eq!(report.stop_time, None);
            // sum_{i=1}^T i/T = (T+1)/2
            assert!((report.regret - (t as f64 + 1.0) / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_tau_small_values() {
        assert_eq!(expected_tau_exact(1).unwrap(), 2.0);
        assert_eq!(expected_tau_exact(2).unwrap(), 2.5);
        assert!((expected_tau_exact(3).unwrap() - 26.0 / 9.0).abs() < 1e-15);
        assert!(expected_tau_exact(0).is_err());
    }

    /// Exhaustive expectation over all draw sequences, truncated at the first collision.
    fn tau_by_enumeration(n: usize) -> f64 {
        fn go(n: usize, seen: &mut Vec<bool>, depth: usize, prob: f64) -> f64 {
            let mut acc = 0.0;
            for v in 0..n {
                let p = prob / n as f64;
                if seen[v] {
                    acc += p * (depth + 1) as f64;
                } else {
                    seen[v] = true;
                    acc += go(n, seen, depth + 1, p);
                    seen[v] = false;
                }
            }
            acc
        }
        go(n, &mut vec![false; n], 0, 1.0)
    }

    #[test]
    fn exact_tau_matches_enumeration() {
        for n in 1..=6 {
            let e = expected_tau_exact(n).unwrap();
            assert!((e - tau_by_enumeration(n)).abs() < 1e-12, "T={n}");
        }
    }

    #[test]
    fn exact_tau_high_precision_values() {
        assert!((expected_tau_exact(10).unwrap() - 4.66021568).abs() < 1e-12);
        let want = 125.999_121_868_081_161_459_041_887_605_340_2;
        assert!((expected_tau_exact(10_000).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn exact_tau_bounded_by_two_sqrt_t() {
        for t in (100..3000).step_by(37) {
            assert!(expected_tau_exact(t).unwrap() <= 2.0 * (t as f64).sqrt());
        }
    }
}
