//! Flat norm, minimal fillings and homology tests.
//!
//! The flat norm 𝔽(T) = min { M(S) + M(R) : T = S + ∂R } is solved as a linear program over
//! the positive and negative parts of S and R. On grid-like complexes the relaxation is
//! integral; when it is not, small instances are certified by exhaustive search over R.

use serde::{Deserialize, Serialize};

use crate::chain::{Chain, ChainDoc};
use crate::complex::SimplicialComplex;
use crate::error::{CurrentsError, Result};
use crate::lp::{minimize, LpOutcome};

const INTEGRALITY_TOL: f64 = 1e-6;

/// Largest instance the exhaustive searches accept: (2K+1)^cells ≤ 3^20.
pub const BRUTE_FORCE_LIMIT: f64 = 3_486_784_401.0;

/// Largest number of (n+1)-cells for which a fractional relaxation is certified by search.
pub const CERTIFY_CELLS: usize = 20;

/// A decomposition T = S + ∂R with its value M(S) + M(R).
#[derive(Clone, Debug, PartialEq)]
pub struct FlatDecomposition {
    pub s: Chain,
    pub r: Chain,
    pub value: f64,
    /// The value is the integral minimum (by an integral relaxation or by exhaustive search).
    pub optimal: bool,
    /// The linear relaxation itself returned integer coefficients.
    pub integral: bool,
    /// Optimal value of the linear relaxation, a lower bound for `value`.
    pub relaxation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatDecompositionDoc {
    pub s: ChainDoc,
    pub r: ChainDoc,
    pub value: f64,
    pub optimal: bool,
    pub integral: bool,
    pub relaxation: f64,
}

impl FlatDecomposition {
    pub fn to_doc(&self) -> FlatDecompositionDoc {
        FlatDecompositionDoc {
            s: self.s.to_doc(),
            r: self.r.to_doc(),
            value: self.value,
            optimal: self.optimal,
            integral: self.integral,
            relaxation: self.relaxation,
        }
    }
}

fn check_chain(complex: &SimplicialComplex, t: &Chain) -> Result<()> {
    if t.complex_id() != complex.id() {
        return Err(CurrentsError::ComplexMismatch);
    }
    if t.degree() + 1 > complex.max_degree() {
        return Err(CurrentsError::NoFillingSpace { degree: t.degree() });
    }
    Ok(())
}

fn is_integral(values: &[f64]) -> bool {
    values.iter().all(|v| (v - v.round()).abs() <= INTEGRALITY_TOL)
}

fn rounded(values: &[f64]) -> Vec<i64> {
    values.iter().map(|v| v.round() as i64).collect()
}

fn search_size(cells: usize, bound: i64) -> f64 {
    ((2 * bound + 1) as f64).powi(cells as i32)
}

fn capacity_error(stage: &str, cells: usize, bound: i64) -> CurrentsError {
    CurrentsError::Capacity {
        stage: stage.into(),
        states: format!("{}^{}", 2 * bound + 1, cells),
        limit: "3^20".into(),
    }
}

/// Computes 𝔽(T) with a certificate (S, R).
pub fn flat_norm(complex: &SimplicialComplex, t: &Chain) -> Result<FlatDecomposition> {
    check_chain(complex, t)?;
    let n = t.degree();
    if t.is_zero() {
        return Ok(FlatDecomposition {
            s: t.clone(),
            r: complex.zero_chain(n + 1),
            value: 0.0,
            optimal: true,
            integral: true,
            relaxation: 0.0,
        });
    }
    let p = complex.num_cells(n);
    let q = complex.num_cells(n + 1);
    let tv = complex.dense(t);

    // Columns: s⁺ (p), s⁻ (p), r⁺ (q), r⁻ (q).
    let mut a = vec![vec![0.0; 2 * p + 2 * q]; p];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
        row[p + i] = -1.0;
    }
    for j in 0..q {
        for &(i, s) in complex.faces(n + 1, j) {
            a[i][2 * p + j] = s as f64;
            a[i][2 * p + q + j] = -(s as f64);
        }
    }
    let b: Vec<f64> = tv.iter().map(|&x| x as f64).collect();
    let mut c = Vec::with_capacity(2 * p + 2 * q);
    c.extend_from_slice(complex.volumes(n));
    c.extend_from_slice(complex.volumes(n));
    c.extend_from_slice(complex.volumes(n + 1));
    c.extend_from_slice(complex.volumes(n + 1));
    let basis: Vec<usize> = (0..p).map(|i| if tv[i] >= 0 { i } else { p + i }).collect();

    let (x, relaxation) = match minimize(&a, &b, &c, Some(&basis))? {
        LpOutcome::Optimal { x, objective } => (x, objective),
        other => return Err(CurrentsError::Solver(format!("flat norm program returned {other:?}"))),
    };
    let rv: Vec<f64> = (0..q).map(|j| x[2 * p + j] - x[2 * p + q + j]).collect();
    let sv: Vec<f64> = (0..p).map(|i| x[i] - x[p + i]).collect();
    let integral = is_integral(&rv) && is_integral(&sv);

    if !integral && q <= CERTIFY_CELLS {
        let bound = t.max_abs_coefficient().max(1);
        if search_size(q, bound) <= BRUTE_FORCE_LIMIT {
            let mut exact = flat_norm_bruteforce(complex, t, bound)?;
            exact.integral = false;
            exact.relaxation = relaxation;
            return Ok(exact);
        }
    }

    let r = complex.from_dense(n + 1, &rounded(&rv));
    let s = t - &complex.boundary(&r)?;
    let value = complex.mass(&s) + complex.mass(&r);
    Ok(FlatDecomposition {
        s,
        r,
        value,
        optimal: integral && (value - relaxation).abs() <= 1e-6,
        integral,
        relaxation,
    })
}

/// What the exhaustive search over R optimizes.
#[derive(Clone, Copy, PartialEq)]
enum SearchMode {
    /// min M(T − ∂R) + M(R)
    Flat,
    /// min M(R) subject to ∂R = T
    Filling,
}

struct FillingSearch<'a> {
    complex: &'a SimplicialComplex,
    n: usize,
    mode: SearchMode,
    bound: i64,
    /// n-cells whose S-coefficient becomes final once (n+1)-cell j is assigned.
    finalized_at: Vec<Vec<usize>>,
    s: Vec<i64>,
    r: Vec<i64>,
    best: f64,
    best_r: Option<Vec<i64>>,
}

impl FillingSearch<'_> {
    fn final_cost(&self, cells: &[usize]) -> Option<f64> {
        let mut cost = 0.0;
        for &i in cells {
            if self.mode == SearchMode::Filling {
                if self.s[i] != 0 {
                    return None;
                }
            } else {
                cost += self.s[i].unsigned_abs() as f64 * self.complex.volume(self.n, i);
            }
        }
        Some(cost)
    }

    fn dfs(&mut self, j: usize, cost: f64) {
        if cost >= self.best - 1e-12 {
            return;
        }
        if j == self.r.len() {
            self.best = cost;
            self.best_r = Some(self.r.clone());
            return;
        }
        let vol = self.complex.volume(self.n + 1, j);
        let faces = self.complex.faces(self.n + 1, j).to_vec();
        let finalized = std::mem::take(&mut self.finalized_at[j]);
        let mut order = vec![0i64];
        for v in 1..=self.bound {
            order.push(v);
            order.push(-v);
        }
        for &v in &order {
            if v != 0 {
                for &(i, s) in &faces {
                    self.s[i] -= s * v;
                }
            }
            self.r[j] = v;
            if let Some(extra) = self.final_cost(&finalized) {
                self.dfs(j + 1, cost + extra + v.unsigned_abs() as f64 * vol);
            }
            if v != 0 {
                for &(i, s) in &faces {
                    self.s[i] += s * v;
                }
            }
        }
        self.r[j] = 0;
        self.finalized_at[j] = finalized;
    }
}

/// Exhaustive search over integer R with coefficients in [−K, K]; `None` when no candidate
/// meets the constraints (filling mode only).
fn exhaustive(
    complex: &SimplicialComplex,
    t: &Chain,
    bound: i64,
    mode: SearchMode,
    stage: &str,
) -> Result<Option<(Vec<i64>, f64)>> {
    let n = t.degree();
    let q = complex.num_cells(n + 1);
    if search_size(q, bound) > BRUTE_FORCE_LIMIT {
        return Err(capacity_error(stage, q, bound));
    }
    let p = complex.num_cells(n);
    let mut last = vec![None; p];
    for j in 0..q {
        for &(i, _) in complex.faces(n + 1, j) {
            last[i] = Some(j);
        }
    }
    let mut finalized_at = vec![Vec::new(); q];
    let mut free = Vec::new();
    for (i, l) in last.iter().enumerate() {
        match l {
            Some(j) => finalized_at[*j].push(i),
            None => free.push(i),
        }
    }
    let mut search = FillingSearch {
        complex,
        n,
        mode,
        bound,
        finalized_at,
        s: complex.dense(t),
        r: vec![0; q],
        best: f64::INFINITY,
        best_r: None,
    };
    if mode == SearchMode::Flat {
        // R = 0 is always admissible.
        search.best = complex.mass(t) + 1e-9;
        search.best_r = Some(vec![0; q]);
    }
    let Some(start) = search.final_cost(&free) else {
        return Ok(None);
    };
    search.dfs(0, start);
    Ok(search.best_r.map(|r| {
        let best = search.best;
        (r, best)
    }))
}

/// Exact 𝔽 over R with coefficients in [−K, K].
pub fn flat_norm_bruteforce(complex: &SimplicialComplex, t: &Chain, bound: i64) -> Result<FlatDecomposition> {
    check_chain(complex, t)?;
    if bound < 0 {
        return Err(CurrentsError::InvalidArgument(
            "coefficient bound must be non-negative".into(),
        ));
    }
    let n = t.degree();
    let (rv, _) =
        exhaustive(complex, t, bound, SearchMode::Flat, "flat_norm_bruteforce")?.expect("R = 0 is always feasible");
    let r = complex.from_dense(n + 1, &rv);
    let s = t - &complex.boundary(&r)?;
    let value = complex.mass(&s) + complex.mass(&r);
    Ok(FlatDecomposition {
        s,
        r,
        value,
        optimal: true,
        integral: true,
        relaxation: value,
    })
}

/// Minimum-mass R with ∂R = D, or `None` if D is not a boundary.
fn min_mass_filling(complex: &SimplicialComplex, d: &Chain, stage: &str) -> Result<Option<Chain>> {
    let n = d.degree();
    if d.is_zero() {
        return Ok(Some(complex.zero_chain(n + 1)));
    }
    let p = complex.num_cells(n);
    let q = complex.num_cells(n + 1);
    let mut a = vec![vec![0.0; 2 * q]; p];
    for j in 0..q {
        for &(i, s) in complex.faces(n + 1, j) {
            a[i][j] = s as f64;
            a[i][q + j] = -(s as f64);
        }
    }
    let b: Vec<f64> = complex.dense(d).iter().map(|&x| x as f64).collect();
    let mut c = complex.volumes(n + 1).to_vec();
    c.extend_from_slice(complex.volumes(n + 1));
    let x = match minimize(&a, &b, &c, None)? {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => return Ok(None),
        LpOutcome::Unbounded => return Err(CurrentsError::Solver("filling program is unbounded".into())),
    };
    let rv: Vec<f64> = (0..q).map(|j| x[j] - x[q + j]).collect();
    if is_integral(&rv) {
        return Ok(Some(complex.from_dense(n + 1, &rounded(&rv))));
    }
    let bound = d.max_abs_coefficient().max(1);
    if q <= CERTIFY_CELLS && search_size(q, bound) <= BRUTE_FORCE_LIMIT {
        return Ok(
            exhaustive(complex, d, bound, SearchMode::Filling, stage)?.map(|(r, _)| complex.from_dense(n + 1, &r))
        );
    }
    let r = complex.from_dense(n + 1, &rounded(&rv));
    if complex.boundary(&r)? == *d {
        Ok(Some(r))
    } else {
        Err(CurrentsError::Solver(format!(
            "fractional filling on {q} cells cannot be certified"
        )))
    }
}

/// Minimum-mass R with ∂R = T for a cycle T. Fails with `FillingObstruction` when the flat
/// norm is realized more cheaply with S ≠ 0.
pub fn minimal_filling(complex: &SimplicialComplex, t: &Chain) -> Result<Chain> {
    check_chain(complex, t)?;
    if t.degree() > 0 {
        let bd = complex.boundary(t)?;
        if !bd.is_zero() {
            return Err(CurrentsError::NotACycle {
                boundary_mass: complex.mass(&bd),
            });
        }
    }
    let r = min_mass_filling(complex, t, "minimal_filling")?.ok_or(CurrentsError::NotNullHomologous)?;
    let filling_mass = complex.mass(&r);
    let flat = flat_norm(complex, t)?;
    if flat.value < filling_mass - 1e-9 {
        return Err(CurrentsError::FillingObstruction {
            flat_norm: flat.value,
            filling_mass,
        });
    }
    Ok(r)
}

/// A witness R with ∂R = T − Σ, or `None` when T and Σ are not homologous.
pub fn is_homologous(complex: &SimplicialComplex, t: &Chain, sigma: &Chain) -> Result<Option<Chain>> {
    if t.complex_id() != complex.id() || sigma.complex_id() != complex.id() {
        return Err(CurrentsError::ComplexMismatch);
    }
    if t.degree() != sigma.degree() {
        return Err(CurrentsError::InvalidArgument("chains have different degrees".into()));
    }
    if t.degree() > 0 && complex.boundary(t)? != complex.boundary(sigma)? {
        return Err(CurrentsError::BoundaryMismatch);
    }
    let d = t - sigma;
    if t.degree() + 1 > complex.max_degree() {
        return Ok(d.is_zero().then(|| complex.zero_chain(t.degree() + 1)));
    }
    min_mass_filling(complex, &d, "is_homologous")
}

/// Empirical filling radius: the largest 𝔽(T) over the given cycles such that every
/// null-homologous cycle with flat norm at most that value is filled by its flat decomposition,
/// i.e. 𝔽(T) = M(minimal filling). Cycles that are not null-homologous are ignored. Returns 0
/// when the smallest tested cycle already fails, and `None` when no cycle was usable.
pub fn filling_radius(complex: &SimplicialComplex, cycles: &[Chain]) -> Result<Option<f64>> {
    let mut samples = Vec::with_capacity(cycles.len());
    for t in cycles {
        check_chain(complex, t)?;
        if t.degree() > 0 && !complex.boundary(t)?.is_zero() {
            return Err(CurrentsError::NotACycle {
                boundary_mass: complex.mass(&complex.boundary(t)?),
            });
        }
        let Some(r) = min_mass_filling(complex, t, "filling_radius")? else {
            continue;
        };
        let flat = flat_norm(complex, t)?.value;
        samples.push((flat, complex.mass(&r) <= flat + 1e-9));
    }
    if samples.is_empty() {
        return Ok(None);
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut radius = 0.0;
    for (i, &(flat, ok)) in samples.iter().enumerate() {
        // Ties at the same value must all hold before the value counts.
        if !ok || samples[i..].iter().take_while(|s| s.0 <= flat + 1e-12).any(|s| !s.1) {
            break;
        }
        radius = flat;
    }
    Ok(Some(radius))
}
