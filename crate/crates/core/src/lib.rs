//! Online learning in the random-order input model.
//!
//! An adversary fixes a multiset of `T` loss vectors; a uniformly random
//! permutation decides the order in which the learner sees them. This crate
//! provides the environments for that model, the learners built for it, and
//! the tooling used to measure their regret:
//!
//! * [`instance`] and [`stream`]: loss instances, seeded permutations and the
//!   full / delayed / bandit feedback channels.
//! * [`concentration`]: without-replacement deviation bounds and per-block
//!   precision schedules.
//! * [`experts`]: Follow-The-Leader and the Birthday-Test separation learner.
//! * [`delayed`]: block simulation for prediction with delayed feedback.
//! * [`constrained`] and [`lp`]: long-term budget constraints with an LP benchmark.
//! * [`switching`]: successive elimination with few switches under bandit feedback.
//! * [`classification`]: empirical risk minimization over finite classes.
//! * [`harness`]: regret evaluation, instance generators and trial orchestration.

pub mod classification;
pub mod concentration;
pub mod constrained;
pub mod delayed;
mod error;
pub mod experts;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod rng;
pub mod stream;
pub mod switching;

pub use error::{Error, Result};
pub use instance::{LossInstance, Permutation};
pub use stream::{Action, FeedbackKind, MixedAction, Observation, PlayLog, RoundStream};
