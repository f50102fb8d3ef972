//! Dense tableau simplex for small linear programs in standard form
//! `min c·x  s.t.  A x = b, x ≥ 0`.
//!
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of degenerate pivots so
//! that cycling cannot occur.

use crate::error::{CurrentsError, Result};

const EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// rows × (cols + 1), right-hand side in the last column.
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs (length cols) followed by minus the objective value.
    cost: Vec<f64>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn set_costs(&mut self, c: &[f64]) {
        let w = self.cols + 1;
        self.cost = c.to_vec();
        self.cost.push(0.0);
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = self.cost[bj];
            if cb != 0.0 {
                for j in 0..w {
                    self.cost[j] -= cb * self.a[i * w + j];
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.cols + 1;
        let p = self.a[row * w + col];
        for j in 0..w {
            self.a[row * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.a[row * w..(row + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.a[i * w + col];
            if f != 0.0 {
                for j in 0..w {
                    self.a[i * w + j] -= f * pivot_row[j];
                }
                self.a[i * w + col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for j in 0..w {
                self.cost[j] -= f * pivot_row[j];
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Runs the simplex iterations over the columns allowed by `active`. Returns false when
    /// the problem is unbounded.
    fn optimize(&mut self, active: &dyn Fn(usize) -> bool) -> Result<bool> {
        let mut degenerate_run = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let mut entering = None;
            let mut best = -EPS;
            for j in 0..self.cols {
                if !active(j) || self.cost[j] >= -EPS {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if self.cost[j] < best {
                    best = self.cost[j];
                    entering = Some(j);
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aij = self.at(i, col);
                if aij > EPS {
                    let ratio = self.rhs(i) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            if ratio < best_ratio - EPS || (ratio <= best_ratio + EPS && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((row, ratio)) = leave else {
                return Ok(false);
            };
            if ratio.abs() <= EPS {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col);
        }
        Err(CurrentsError::Solver(format!(
            "no convergence after {MAX_PIVOTS} pivots"
        )))
    }
}

/// Solves `min c·x, A x = b, x ≥ 0`. When `basis` is given, its columns must form a signed
/// identity (±e_i in row i) and the point it defines must be feasible; otherwise phase one
/// with artificial variables finds a start.
pub(crate) fn minimize(a: &[Vec<f64>], b: &[f64], c: &[f64], basis: Option<&[usize]>) -> Result<LpOutcome> {
    let rows = a.len();
    let cols = c.len();
    if b.len() != rows || a.iter().any(|r| r.len() != cols) {
        return Err(CurrentsError::Solver("inconsistent program dimensions".into()));
    }
    if rows == 0 {
        return Ok(if c.iter().any(|&x| x < 0.0) {
            LpOutcome::Unbounded
        } else {
            LpOutcome::Optimal {
                x: vec![0.0; cols],
                objective: 0.0,
            }
        });
    }

    match basis {
        Some(start) => {
            let w = cols + 1;
            let mut t = Tableau {
                rows,
                cols,
                a: vec![0.0; rows * w],
                basis: start.to_vec(),
                cost: vec![],
            };
            for i in 0..rows {
                let sign = a[i][start[i]];
                if sign.abs() != 1.0 {
                    return Err(CurrentsError::Solver("starting basis is not a signed identity".into()));
                }
                for j in 0..cols {
                    t.a[i * w + j] = a[i][j] * sign;
                }
                t.a[i * w + cols] = b[i] * sign;
                if t.a[i * w + cols] < -EPS {
                    return Err(CurrentsError::Solver("starting basis is infeasible".into()));
                }
            }
            t.set_costs(c);
            if !t.optimize(&|_| true)? {
                return Ok(LpOutcome::Unbounded);
            }
            Ok(extract(&t, c))
        }
        None => two_phase(a, b, c),
    }
}

fn two_phase(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpOutcome> {
    let rows = a.len();
    let cols = c.len();
    let total = cols + rows;
    let w = total + 1;
    let mut t = Tableau {
        rows,
        cols: total,
        a: vec![0.0; rows * w],
        basis: (cols..total).collect(),
        cost: vec![],
    };
    for i in 0..rows {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..cols {
            t.a[i * w + j] = a[i][j] * sign;
        }
        t.a[i * w + cols + i] = 1.0;
        t.a[i * w + total] = b[i] * sign;
    }
    let mut phase_one = vec![0.0; total];
    for x in &mut phase_one[cols..] {
        *x = 1.0;
    }
    t.set_costs(&phase_one);
    t.optimize(&|_| true)?;
    let infeasibility = -t.cost[total];
    if infeasibility > 1e-7 {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive remaining artificial variables out of the basis; rows where that is impossible
    // are redundant and are dropped.
    let mut keep = vec![true; rows];
    for i in 0..rows {
        if t.basis[i] < cols {
            continue;
        }
        match (0..cols).find(|&j| t.at(i, j).abs() > EPS) {
            Some(j) => t.pivot(i, j),
            None => keep[i] = false,
        }
    }
    let kept: Vec<usize> = (0..rows).filter(|&i| keep[i]).collect();
    let mut reduced = Tableau {
        rows: kept.len(),
        cols,
        a: Vec::with_capacity(kept.len() * (cols + 1)),
        basis: kept.iter().map(|&i| t.basis[i]).collect(),
        cost: vec![],
    };
    for &i in &kept {
        for j in 0..cols {
            reduced.a.push(t.at(i, j));
        }
        reduced.a.push(t.rhs(i));
    }
    reduced.set_costs(c);
    if !reduced.optimize(&|_| true)? {
        return Ok(LpOutcome::Unbounded);
    }
    Ok(extract(&reduced, c))
}

fn extract(t: &Tableau, c: &[f64]) -> LpOutcome {
    let mut x = vec![0.0; c.len()];
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < c.len() {
            x[bj] = t.rhs(i).max(0.0);
        }
    }
    let objective = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { x, objective }
}
