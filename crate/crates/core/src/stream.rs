//! The random-order environment: one pass over a permuted [`LossInstance`]
//! with a feedback channel attached.
//!
//! Rounds are 0-based throughout the API. Under [`FeedbackKind::Delayed`]
//! with delay `d`, the loss of round `t` is revealed at the end of round
//! `t + d`; losses whose reveal round falls past the horizon never arrive.

use std::collections::VecDeque;

use rand::Rng;

use crate::instance::{LossInstance, Permutation};
use crate::rng::{trial_rng, Purpose, TrialRng};
use crate::{Error, Result};

const MIXTURE_SUM_TOL: f64 = 1e-9;
const MIXTURE_NEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackKind {
    Full,
    Delayed(usize),
    Bandit,
}

/// A probability vector over the `k` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedAction(Vec<f64>);

impl MixedAction {
    /// Validates a mixture: entries may dip to `-1e-12` (clamped to zero) and
    /// must sum to one within `1e-9`.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("empty mixture".into()));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -MIXTURE_NEG_TOL {
                return Err(Error::Validation(format!("mixture entry {p} is negative")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MIXTURE_SUM_TOL {
            return Err(Error::Validation(format!("mixture sums to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights into a mixture.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Validation("weights must be nonnegative with positive sum".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn pure(actions: usize, action: usize) -> Self {
        let mut probs = vec![0.0; actions];
        probs[action] = 1.0;
        Self(probs)
    }

    pub fn uniform(actions: usize) -> Self {
        Self(vec![1.0 / actions as f64; actions])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn expected(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Inverse-CDF draw of a pure action.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (a, p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        // u landed in the rounding gap above the last partial sum
        self.0.iter().rposition(|p| *p > 0.0).unwrap_or(self.0.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Pure(usize),
    Mixed(MixedAction),
}

impl Action {
    pub fn loss(&self, row: &[f64]) -> f64 {
        match self {
            Action::Pure(a) => row[*a],
            Action::Mixed(x) => x.expected(row),
        }
    }
}

/// A loss vector delivered to the learner together with the round it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Revealed {
    pub round: usize,
    pub loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// Full or delayed feedback: every loss vector whose reveal time is now.
    Vectors(Vec<Revealed>),
    /// Bandit feedback: only the loss of the arm actually pulled.
    Bandit { action: usize, loss: f64 },
}

impl Observation {
    /// Revealed loss vectors (empty under bandit feedback).
    pub fn vectors(&self) -> &[Revealed] {
        match self {
            Observation::Vectors(v) => v,
            Observation::Bandit { .. } => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub incurred: f64,
    pub observation: Observation,
}

/// One real round: which instance row was shown and what the learner played.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayRecord {
    pub row: usize,
    pub action: Action,
}

pub type PlayLog = Vec<PlayRecord>;

#[derive(Debug, Clone)]
pub struct RoundStream {
    instance: LossInstance,
    permutation: Permutation,
    feedback: FeedbackKind,
    cursor: usize,
    pending: VecDeque<(usize, usize)>,
    interactions: usize,
    arm_rng: TrialRng,
    log: PlayLog,
}

impl RoundStream {
    pub fn new(instance: LossInstance, seed: u64, feedback: FeedbackKind) -> Result<Self> {
        let horizon = instance.horizon();
        if let FeedbackKind::Delayed(d) = feedback {
            if d >= horizon {
                return Err(Error::Config(format!(
                    "delay {d} is not smaller than the horizon {horizon}"
                )));
            }
        }
        Ok(Self {
            permutation: Permutation::from_seed(horizon, seed),
            instance,
            feedback,
            cursor: 0,
            pending: VecDeque::new(),
            interactions: 0,
            arm_rng: trial_rng(seed, Purpose::ArmSampling),
            log: Vec::with_capacity(horizon),
        })
    }

    pub fn instance(&self) -> &LossInstance {
        &self.instance
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn feedback(&self) -> FeedbackKind {
        self.feedback
    }

    pub fn horizon(&self) -> usize {
        self.instance.horizon()
    }

    pub fn actions(&self) -> usize {
        self.instance.actions()
    }

    /// Next round to be played (0-based).
    pub fn round(&self) -> usize {
        self.cursor
    }

    pub fn is_finished(&self) -> bool {
        self.cursor >= self.horizon()
    }

    pub fn interaction_count(&self) -> usize {
        self.interactions
    }

    pub fn log(&self) -> &PlayLog {
        &self.log
    }

    pub fn into_log(self) -> PlayLog {
        self.log
    }

    /// Plays one round. Mixed plays incur their expected loss, except under
    /// bandit feedback where a pure arm is drawn from the mixture.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let t = self.cursor;
        if t >= self.horizon() {
            return Err(Error::Usage(format!("stream already played all {} rounds", t)));
        }
        let k = self.actions();
        let action = match action {
            Action::Pure(a) if a >= k => {
                return Err(Error::Validation(format!("action {a} out of range for k={k}")));
            }
            Action::Mixed(x) if x.len() != k => {
                return Err(Error::Validation(format!(
                    "mixture has {} entries for k={k}",
                    x.len()
                )));
            }
            Action::Mixed(x) if self.feedback == FeedbackKind::Bandit => {
                Action::Pure(x.sample(&mut self.arm_rng))
            }
            other => other,
        };
        let row = self.permutation.get(t);
        let losses = self.instance.row(row);
        let incurred = action.loss(losses);
        let observation = match (self.feedback, &action) {
            (FeedbackKind::Bandit, Action::Pure(a)) => {
                Observation::Bandit { action: *a, loss: losses[*a] }
            }
            (FeedbackKind::Bandit, Action::Mixed(_)) => unreachable!("bandit plays are pure"),
            (FeedbackKind::Full, _) => {
                Observation::Vectors(vec![Revealed { round: t, loss: losses.to_vec() }])
            }
            (FeedbackKind::Delayed(d), _) => {
                self.pending.push_back((t + d, t));
                let mut out = Vec::new();
                while let Some(&(due, round)) = self.pending.front() {
                    if due > t {
                        break;
                    }
                    self.pending.pop_front();
                    let row = self.permutation.get(round);
                    out.push(Revealed { round, loss: self.instance.row(row).to_vec() });
                }
                Observation::Vectors(out)
            }
        };
        self.log.push(PlayRecord { row, action });
        self.cursor += 1;
        self.interactions += 1;
        Ok(StepOutcome { incurred, observation })
    }
}

/// Builds a stream over `instance` ordered by the permutation drawn from `seed`.
pub fn make_stream(instance: LossInstance, seed: u64, feedback: FeedbackKind) -> Result<RoundStream> {
    RoundStream::new(instance, seed, feedback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> LossInstance {
        LossInstance::from_rows(&[
            vec![0.1, 0.9],
            vec![0.2, 0.8],
            vec![0.3, 0.7],
            vec![0.4, 0.6],
            vec![0.5, 0.5],
        ])
        .unwrap()
    }

    #[test]
    fn single_round_emits_the_only_row() {
        let inst = LossInstance::from_rows(&[vec![0.3, 0.6]]).unwrap();
        let mut s = make_stream(inst, 99, FeedbackKind::Full).unwrap();
        let out = s.step(Action::Pure(1)).unwrap();
        assert_eq!(out.incurred, 0.6);
        assert_eq!(out.observation.vectors()[0].loss, vec![0.3, 0.6]);
        assert!(s.is_finished());
    }

    #[test]
    fn zero_instance_has_zero_loss() {
        let inst = LossInstance::new(4, 3, vec![0.0; 12]).unwrap();
        let mut s = make_stream(inst, 1, FeedbackKind::Full).unwrap();
        while !s.is_finished() {
            let out = s.step(Action::Mixed(MixedAction::uniform(3))).unwrap();
            assert_eq!(out.incurred, 0.0);
        }
    }

    #[test]
    fn mixed_play_incurs_dot_product() {
        let inst = LossInstance::from_rows(&[vec![0.2, 0.8]]).unwrap();
        let mut s = make_stream(inst, 0, FeedbackKind::Full).unwrap();
        let x = MixedAction::new(vec![0.5, 0.5]).unwrap();
        assert!((s.step(Action::Mixed(x)).unwrap().incurred - 0.5).abs() < 1e-15);
    }

    #[test]
    fn delay_two_reveals_round_one_at_round_three() {
        let mut s = make_stream(small(), 3, FeedbackKind::Delayed(2)).unwrap();
        let first = s.instance().row(s.permutation().get(0)).to_vec();
        assert!(s.step(Action::Pure(0)).unwrap().observation.vectors().is_empty());
        assert!(s.step(Action::Pure(0)).unwrap().observation.vectors().is_empty());
        let third = s.step(Action::Pure(0)).unwrap();
        assert_eq!(third.observation.vectors(), &[Revealed { round: 0, loss: first }]);
    }

    #[test]
    fn delay_not_below_horizon_is_rejected() {
        let err = make_stream(small(), 0, FeedbackKind::Delayed(5)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn stepping_past_horizon_is_usage_error() {
        let inst = LossInstance::from_rows(&[vec![0.5]]).unwrap();
        let mut s = make_stream(inst, 0, FeedbackKind::Full).unwrap();
        s.step(Action::Pure(0)).unwrap();
        assert!(matches!(s.step(Action::Pure(0)), Err(Error::Usage(_))));
    }

    #[test]
    fn mixture_validation() {
        assert!(MixedAction::new(vec![0.5, 0.5 + 2e-9]).is_err());
        assert!(MixedAction::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        assert!(MixedAction::new(vec![-1e-6, 1.0]).is_err());
        assert_eq!(MixedAction::new(vec![-1e-13, 1.0]).unwrap().probs()[0], 0.0);
    }

    #[test]
    fn bandit_mixture_is_realized_as_pure_arm() {
        let mut s = make_stream(small(), 5, FeedbackKind::Bandit).unwrap();
        let out = s.step(Action::Mixed(MixedAction::pure(2, 1))).unwrap();
        match out.observation {
            Observation::Bandit { action, loss } => {
                assert_eq!(action, 1);
                assert_eq!(loss, out.incurred);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.log()[0].action, Action::Pure(1));
    }

    #[test]
    fn emitted_rows_form_the_instance_multiset() {
        // sort-and-compare over the emitted sequence
        let inst = small();
        let mut s = make_stream(inst.clone(), 11, FeedbackKind::Full).unwrap();
        let mut emitted = Vec::new();
        while !s.is_finished() {
            let out = s.step(Action::Pure(0)).unwrap();
            emitted.push(out.observation.vectors()[0].loss.clone());
        }
        let mut expected: Vec<Vec<f64>> = inst.rows().map(<[f64]>::to_vec).collect();
        emitted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(emitted, expected);
    }

    fn arb_instance() -> impl Strategy<Value = LossInstance> {
        (1usize..40, 1usize..4).prop_flat_map(|(t, k)| {
            proptest::collection::vec(0.0f64..=1.0, t * k)
                .prop_map(move |v| LossInstance::new(t, k, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn delayed_reveals_each_round_exactly_at_t_plus_d(
            inst in arb_instance(), seed in any::<u64>(), d in 0usize..8
        ) {
            let horizon = inst.horizon();
            prop_assume!(d < horizon);
            let mut s = make_stream(inst, seed, FeedbackKind::Delayed(d)).unwrap();
            let mut seen = vec![None; horizon];
            while !s.is_finished() {
                let t = s.round();
                let out = s.step(Action::Pure(0)).unwrap();
                for r in out.observation.vectors() {
                    prop_assert!(seen[r.round].is_none());
                    seen[r.round] = Some(t);
                }
            }
            for (round, at) in seen.iter().enumerate() {
                if round + d < horizon {
                    prop_assert_eq!(*at, Some(round + d));
                } else {
                    prop_assert_eq!(*at, None);
                }
            }
        }

        #[test]
        fn full_feedback_conserves_multiset_and_benchmark(inst in arb_instance(), seed in any::<u64>()) {
            let mut s = make_stream(inst.clone(), seed, FeedbackKind::Full).unwrap();
            let mut sums = vec![0.0; inst.actions()];
            while !s.is_finished() {
                let out = s.step(Action::Pure(0)).unwrap();
                for r in out.observation.vectors() {
                    for (acc, v) in sums.iter_mut().zip(&r.loss) { *acc += v; }
                }
            }
            prop_assert_eq!(s.interaction_count(), inst.horizon());
            let best = sums.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!((best - inst.best_fixed_loss()).abs() < 1e-9);
        }
    }
}
