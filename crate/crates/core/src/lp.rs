//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Sized for the benchmark LP of the constrained setting (a handful of
//! actions and resources); every pivot rebuilds reduced costs from scratch.

use crate::stream::MixedAction;
use crate::{Error, Result};

const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        self.rows[row].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `obj . x` over columns `allowed` from the current feasible basis.
    fn optimize(&mut self, obj: &[f64], allowed: &[bool]) -> Result<()> {
        let limit = 100 * (self.rows.len() + self.cols) + 1000;
        for _ in 0..limit {
            let entering = (0..self.cols).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let z: f64 = self
                        .rows
                        .iter()
                        .zip(&self.basis)
                        .map(|(r, &b)| obj[b] * r[j])
                        .sum();
                    obj[j] - z > COST_TOL
                }
            });
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            let mut tiny_positive = false;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - PIVOT_TOL
                                || (ratio <= lr + PIVOT_TOL && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                } else if a > 0.0 {
                    tiny_positive = true;
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None if tiny_positive => {
                    return Err(Error::Degenerate(format!(
                        "column {col} has only pivots below {PIVOT_TOL:e}"
                    )))
                }
                None => return Err(Error::Unbounded),
            }
        }
        Err(Error::Degenerate("simplex iteration limit reached".into()))
    }
}

/// Maximizes `objective . x` subject to `constraints` and `x >= 0`.
/// Returns the optimal point and value.
pub fn maximize(objective: &[f64], constraints: &[Constraint]) -> Result<(Vec<f64>, f64)> {
    let n = objective.len();
    if constraints.iter().any(|c| c.coeffs.len() != n) {
        return Err(Error::Validation("constraint width differs from objective".into()));
    }
    let needs_art = |c: &Constraint| c.kind == RowKind::Eq || c.rhs < 0.0;
    let slack_count = constraints.iter().filter(|c| c.kind == RowKind::Le).count();
    let art_count = constraints.iter().filter(|c| needs_art(c)).count();
    let cols = n + slack_count + art_count;
    let mut rows = Vec::with_capacity(constraints.len());
    let mut basis = Vec::with_capacity(constraints.len());
    let (mut next_slack, mut next_art) = (n, n + slack_count);
    let mut artificial = vec![false; cols];
    for c in constraints {
        let mut row = vec![0.0; cols + 1];
        let sign = if c.rhs < 0.0 { -1.0 } else { 1.0 };
        for (v, a) in row.iter_mut().zip(&c.coeffs) {
            *v = sign * a;
        }
        row[cols] = sign * c.rhs;
        if c.kind == RowKind::Le {
            // a flipped `<=` row becomes `>=`: surplus instead of slack
            row[next_slack] = sign;
            if sign > 0.0 {
                basis.push(next_slack);
            }
            next_slack += 1;
        }
        if needs_art(c) {
            row[next_art] = 1.0;
            artificial[next_art] = true;
            basis.push(next_art);
            next_art += 1;
        }
        rows.push(row);
    }

    let mut tab = Tableau { rows, basis, cols };
    if artificial.iter().any(|a| *a) {
        let phase1: Vec<f64> = artificial.iter().map(|&a| if a { -1.0 } else { 0.0 }).collect();
        tab.optimize(&phase1, &vec![true; cols])?;
        let infeas: f64 = (0..tab.rows.len())
            .filter(|&i| artificial[tab.basis[i]])
            .map(|i| tab.rhs(i))
            .sum();
        if infeas > FEAS_TOL {
            return Err(Error::Infeasible);
        }
        for i in 0..tab.rows.len() {
            if artificial[tab.basis[i]] {
                if let Some(j) = (0..cols).find(|&j| !artificial[j] && tab.rows[i][j].abs() > PIVOT_TOL) {
                    tab.pivot(i, j);
                }
            }
        }
    }
    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(objective);
    let allowed: Vec<bool> = artificial.iter().map(|a| !a).collect();
    tab.optimize(&obj, &allowed)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(i).max(0.0);
        }
    }
    let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
    Ok((x, value))
}

/// Optimum of `max r.x` over the simplex subject to `c_j . x <= rho` for every resource.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: MixedAction,
    pub value: f64,
    /// `rho - c_j . x` per resource.
    pub slack: Vec<f64>,
}

pub fn solve_opt_lp(mean_reward: &[f64], mean_costs: &[Vec<f64>], rho: f64) -> Result<LpSolution> {
    let k = mean_reward.len();
    let in_unit = |v: &f64| (0.0..=1.0).contains(v);
    if k == 0 || !mean_reward.iter().all(in_unit) {
        return Err(Error::Validation("mean rewards must be a nonempty vector in [0,1]".into()));
    }
    if mean_costs.iter().any(|c| c.len() != k || !c.iter().all(in_unit)) {
        return Err(Error::Validation("mean costs must be k-vectors in [0,1]".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::Validation(format!("rho must be positive, got {rho}")));
    }
    let mut constraints = vec![Constraint { coeffs: vec![1.0; k], kind: RowKind::Eq, rhs: 1.0 }];
    constraints.extend(mean_costs.iter().map(|c| Constraint {
        coeffs: c.clone(),
        kind: RowKind::Le,
        rhs: rho,
    }));
    let (x, _) = maximize(mean_reward, &constraints)?;
    let x = MixedAction::from_weights(&x)?;
    let value = x.expected(mean_reward);
    let slack = mean_costs.iter().map(|c| rho - x.expected(c)).collect();
    Ok(LpSolution { x, value, slack })
}
