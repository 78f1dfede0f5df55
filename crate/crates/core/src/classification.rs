//! Random-order online classification over finite hypothesis classes.
//!
//! Each round the learner predicts with the empirical risk minimizer on the
//! revealed prefix and pays the 0-1 loss. For finite classes the supremum of
//! the prefix/population deviation is computed exactly by scanning the class.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::harness::{evaluate_regret, RegretReport, Setting};
use crate::instance::{parse_real, LossInstance};
use crate::rng::{trial_rng, Purpose};
use crate::stream::{Action, FeedbackKind, Observation, RoundStream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    xs: Vec<f64>,
    ys: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(xs: Vec<f64>, ys: Vec<u8>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::Validation("dataset needs equally many (>= 1) features and labels".into()));
        }
        if ys.iter().any(|&y| y > 1) {
            return Err(Error::Validation("labels must be 0 or 1".into()));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("features must be finite".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.xs[i]
    }

    pub fn y(&self, i: usize) -> u8 {
        self.ys[i]
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?;
        if headers.iter().collect::<Vec<_>>() != ["x", "y"] {
            return Err(Error::Validation("dataset CSV header must be `x,y`".into()));
        }
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for record in rdr.records() {
            let record = record?;
            xs.push(parse_real(&record[0])?);
            ys.push(match &record[1] {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Validation(format!("label `{other}` is not 0 or 1"))),
            });
        }
        Self::new(xs, ys)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["x", "y"])?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            wtr.write_record([x.to_string(), y.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub trait Hypothesis {
    fn predict(&self, x: f64) -> u8;
}

/// `x >= theta` predicts 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub theta: f64,
}

impl Hypothesis for Threshold {
    fn predict(&self, x: f64) -> u8 {
        u8::from(x >= self.theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHypothesisClass<H> {
    hypotheses: Vec<H>,
    vc_dim: usize,
}

impl<H: Hypothesis> FiniteHypothesisClass<H> {
    pub fn new(hypotheses: Vec<H>, vc_dim: usize) -> Result<Self> {
        if hypotheses.is_empty() || vc_dim == 0 {
            return Err(Error::Validation("class needs at least one hypothesis and d_VC >= 1".into()));
        }
        Ok(Self { hypotheses, vc_dim })
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn vc_dim(&self) -> usize {
        self.vc_dim
    }

    pub fn hypotheses(&self) -> &[H] {
        &self.hypotheses
    }

    /// 0-1 loss of every hypothesis on every example: `T x |H|`.
    pub fn loss_instance(&self, data: &LabeledDataset) -> LossInstance {
        let losses = (0..data.len())
            .flat_map(|i| {
                self.hypotheses
                    .iter()
                    .map(move |h| f64::from(u8::from(h.predict(data.x(i)) != data.y(i))))
            })
            .collect();
        LossInstance::new(data.len(), self.len(), losses).expect("0-1 losses are valid")
    }
}

impl FiniteHypothesisClass<Threshold> {
    /// Thresholds `0, 1/G, ..., (G-1)/G`.
    pub fn threshold_grid(grid: usize) -> Self {
        let hypotheses = (0..grid.max(1)).map(|i| Threshold { theta: i as f64 / grid.max(1) as f64 }).collect();
        Self { hypotheses, vc_dim: 1 }
    }
}

/// Uniform features on `[0,1)`, labels `1{x >= theta}` flipped with probability `noise`.
pub fn threshold_dataset<R: Rng + ?Sized>(len: usize, theta: f64, noise: f64, rng: &mut R) -> LabeledDataset {
    let mut xs = Vec::with_capacity(len);
    let mut ys = Vec::with_capacity(len);
    for _ in 0..len {
        let x: f64 = rng.gen();
        let clean = u8::from(x >= theta);
        xs.push(x);
        ys.push(if rng.gen_bool(noise) { 1 - clean } else { clean });
    }
    LabeledDataset { xs, ys }
}

/// Lowest-index minimizer of the accumulated mistakes.
fn argmin(mistakes: &[f64]) -> usize {
    let mut best = 0;
    for (h, m) in mistakes.iter().enumerate().skip(1) {
        if *m < mistakes[best] {
            best = h;
        }
    }
    best
}

/// Empirical risk minimizer over the examples `prefix` (indices into `data`).
pub fn erm_choose<H: Hypothesis>(class: &FiniteHypothesisClass<H>, data: &LabeledDataset, prefix: &[usize]) -> usize {
    let mistakes: Vec<f64> = class
        .hypotheses
        .iter()
        .map(|h| prefix.iter().filter(|&&i| h.predict(data.x(i)) != data.y(i)).count() as f64)
        .collect();
    argmin(&mistakes)
}

/// `(sqrt((8d/n) ln(2en/d)) + sqrt((8/n) ln(2/delta))) / 2` with `n` past samples.
pub fn deviation_eps(vc_dim: usize, prev: usize, delta: f64) -> Result<f64> {
    if vc_dim == 0 || prev == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "deviation_eps needs d_VC >= 1, t-1 >= 1, delta in (0,1); got ({vc_dim}, {prev}, {delta})"
        )));
    }
    let (d, n) = (vc_dim as f64, prev as f64);
    let capacity = (8.0 * d / n * (2.0 * std::f64::consts::E * n / d).ln()).sqrt();
    let confidence = (8.0 / n * (2.0 / delta).ln()).sqrt();
    Ok(0.5 * (capacity + confidence))
}

/// `sup_h |mean loss of h - prefix mean loss of h|` for mistake counts on a prefix of length `n`.
fn sup_deviation(totals: &[f64], prefix: &[f64], horizon: usize, n: usize) -> f64 {
    totals
        .iter()
        .zip(prefix)
        .map(|(tot, pre)| (tot / horizon as f64 - pre / n as f64).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct ErmRun {
    pub report: RegretReport,
    /// Entry `n - 1` is the sup-deviation after `n` revealed examples.
    pub sup_deviation: Vec<f64>,
    /// Hypothesis chosen each round.
    pub choices: Vec<usize>,
}

/// Streams the dataset in random order, predicting with ERM on the revealed prefix.
pub fn run_random_order_erm<H: Hypothesis>(
    class: &FiniteHypothesisClass<H>,
    data: &LabeledDataset,
    seed: u64,
) -> Result<ErmRun> {
    let instance = class.loss_instance(data);
    let totals = instance.column_sums();
    let horizon = data.len();
    let mut stream = RoundStream::new(instance.clone(), seed, FeedbackKind::Full)?;
    let mut prefix = vec![0.0; class.len()];
    let mut sup = Vec::with_capacity(horizon);
    let mut choices = Vec::with_capacity(horizon);
    while !stream.is_finished() {
        let h = argmin(&prefix);
        choices.push(h);
        if let Observation::Vectors(revealed) = stream.step(Action::Pure(h))?.observation {
            for r in revealed {
                for (p, v) in prefix.iter_mut().zip(&r.loss) {
                    *p += v;
                }
            }
        }
        sup.push(sup_deviation(&totals, &prefix, horizon, stream.round()));
    }
    let report = evaluate_regret(stream.log(), Setting::Standard(&instance), seed)?;
    Ok(ErmRun { report, sup_deviation: sup, choices })
}

/// Fraction of `trials` random orders whose sup-deviation after `prev` examples exceeds `eps`.
pub fn deviation_exceedance<H: Hypothesis>(
    class: &FiniteHypothesisClass<H>,
    data: &LabeledDataset,
    prev: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let horizon = data.len();
    if prev == 0 || prev > horizon || trials == 0 {
        return Err(Error::Domain("need 1 <= t-1 <= T and at least one trial".into()));
    }
    let instance = class.loss_instance(data);
    let totals = instance.column_sums();
    let mut rng = trial_rng(seed, Purpose::Resampling);
    let mut order: Vec<usize> = (0..horizon).collect();
    let mut hits = 0usize;
    let mut prefix = vec![0.0; class.len()];
    for _ in 0..trials {
        let (head, _) = order.partial_shuffle(&mut rng, prev);
        prefix.iter_mut().for_each(|p| *p = 0.0);
        for &i in head.iter() {
            for (p, v) in prefix.iter_mut().zip(instance.row(i)) {
                *p += v;
            }
        }
        if sup_deviation(&totals, &prefix, horizon, prev) > eps {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
