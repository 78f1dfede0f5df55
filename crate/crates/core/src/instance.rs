//! Adversarial loss multisets and the permutations that order them.

use std::io::{Read, Write};

use rand::Rng;

use crate::rng::{trial_rng, Purpose};
use crate::{Error, Result};

/// The adversary's multiset of `T` loss vectors in `[0,1]^k`.
///
/// Rows are stored in the adversary's order, which carries no meaning: the
/// environment only ever exposes them through a [`Permutation`].
#[derive(Debug, Clone, PartialEq)]
pub struct LossInstance {
    horizon: usize,
    actions: usize,
    losses: Vec<f64>,
}

impl LossInstance {
    /// Builds an instance from row-major losses (`horizon * actions` entries).
    pub fn new(horizon: usize, actions: usize, losses: Vec<f64>) -> Result<Self> {
        if horizon == 0 || actions == 0 {
            return Err(Error::Validation(format!(
                "instance needs T >= 1 and k >= 1, got T={horizon}, k={actions}"
            )));
        }
        if losses.len() != horizon * actions {
            return Err(Error::Validation(format!(
                "expected {} losses for a {horizon}x{actions} instance, got {}",
                horizon * actions,
                losses.len()
            )));
        }
        if let Some(pos) = losses.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation(format!(
                "loss {} at row {}, action {} is outside [0,1]",
                losses[pos],
                pos / actions,
                pos % actions
            )));
        }
        Ok(Self { horizon, actions, losses })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != actions) {
            return Err(Error::Validation("rows have different lengths".into()));
        }
        Self::new(rows.len(), actions, rows.concat())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.losses[index * self.actions..(index + 1) * self.actions]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.losses.chunks_exact(self.actions)
    }

    /// Total loss of every fixed action over the whole multiset.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.actions];
        for row in self.rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// `min_a sum_t h_t(a)`, the loss of the best fixed action in hindsight.
    pub fn best_fixed_loss(&self) -> f64 {
        self.column_sums().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Reads the `t,a1,...,ak` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(Error::Validation("instance CSV header must be `t,a1,...,ak`".into()));
        }
        let actions = headers.len() - 1;
        let mut losses = Vec::new();
        let mut horizon = 0;
        for record in rdr.records() {
            let record = record?;
            for field in record.iter().skip(1) {
                losses.push(parse_real(field)?);
            }
            horizon += 1;
        }
        Self::new(horizon, actions, losses)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.actions).map(|a| format!("a{a}")));
        wtr.write_record(&header)?;
        for (t, row) in self.rows().enumerate() {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(row.iter().map(f64::to_string));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn parse_real(field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Validation(format!("`{field}` is not a decimal number")))
}

/// A uniformly random bijection on `0..T`, fully determined by its seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
    seed: u64,
}

impl Permutation {
    /// Fisher-Yates shuffle of the identity, driven by the seed's permutation stream.
    pub fn from_seed(len: usize, seed: u64) -> Self {
        let mut rng = trial_rng(seed, Purpose::Permutation);
        let mut map: Vec<usize> = (0..len).collect();
        for i in (1..len).rev() {
            let j = rng.gen_range(0..=i);
            map.swap(i, j);
        }
        Self { map, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Instance row shown at (0-based) round `t`.
    pub fn get(&self, t: usize) -> usize {
        self.map[t]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}
