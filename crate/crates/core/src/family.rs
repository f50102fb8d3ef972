//! Bounded enumeration of a homology class {Σ + ∂R}.
//!
//! R ranges over integer (n+1)-chains with coefficients in [−K, K]. The search walks the
//! (n+1)-cells in index order; once every coface of an n-cell has been assigned, that cell's
//! coefficient in T is final and its F-weight is added to a running lower bound, so branches
//! whose bound exceeds the value cap are cut. The cut is exact: every T with F(T) ≤ cap is
//! produced.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::chain::Chain;
use crate::complex::SimplicialComplex;
use crate::error::{CurrentsError, Result};
use crate::flatnorm::{flat_norm, is_homologous, BRUTE_FORCE_LIMIT};
use crate::integrand::Integrand;

/// Hard limit on the number of distinct candidates kept in memory.
pub const MAX_CANDIDATES: usize = 2_000_000;

/// Search bounds for enumerating a homology class.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchBounds {
    /// K: coefficients of the witness R lie in [−K, K].
    pub coeff_bound: i64,
    /// Explicit candidate chains replacing the enumeration (each is checked for homology).
    pub candidates: Option<Vec<Chain>>,
}

impl SearchBounds {
    pub fn new(coeff_bound: i64) -> Self {
        SearchBounds {
            coeff_bound,
            candidates: None,
        }
    }

    pub fn with_candidates(coeff_bound: i64, candidates: Vec<Chain>) -> Self {
        SearchBounds {
            coeff_bound,
            candidates: Some(candidates),
        }
    }
}

/// One member T = Σ + ∂R of the class.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub chain: Chain,
    pub filling: Chain,
    pub f_value: f64,
    pub mass: f64,
    /// 𝔽(T − Σ).
    pub flat_distance: f64,
}

/// Members of the class of Σ with F(T) ≤ cap, each with its flat distance to Σ.
#[derive(Clone, Debug)]
pub struct ClassFamily {
    sigma: Chain,
    f_sigma: f64,
    cap: f64,
    candidates: Vec<Candidate>,
    searched: u64,
    pruned: bool,
}

struct Walker<'a> {
    integrand: &'a Integrand,
    bound: i64,
    cap: f64,
    finalized_at: Vec<Vec<usize>>,
    faces: Vec<Vec<(usize, i64)>>,
    t: Vec<i64>,
    r: Vec<i64>,
    seen: HashMap<Vec<i64>, usize>,
    found: Vec<(Vec<i64>, Vec<i64>, f64)>,
    leaves: u64,
    pruned: bool,
    overflow: bool,
}

impl Walker<'_> {
    fn cost(&self, cells: &[usize]) -> f64 {
        cells
            .iter()
            .map(|&i| {
                let c = self.t[i];
                if c == 0 {
                    0.0
                } else {
                    c.unsigned_abs() as f64 * self.integrand.weight(i, c)
                }
            })
            .sum()
    }

    fn dfs(&mut self, j: usize, cost: f64) {
        if self.overflow {
            return;
        }
        if cost > self.cap + 1e-9 {
            self.pruned = true;
            return;
        }
        if j == self.r.len() {
            self.leaves += 1;
            if !self.seen.contains_key(&self.t) {
                if self.found.len() >= MAX_CANDIDATES {
                    self.overflow = true;
                    return;
                }
                self.seen.insert(self.t.clone(), self.found.len());
                self.found.push((self.t.clone(), self.r.clone(), cost));
            }
            return;
        }
        let finalized = std::mem::take(&mut self.finalized_at[j]);
        let faces = std::mem::take(&mut self.faces[j]);
        let mut values = vec![0i64];
        for v in 1..=self.bound {
            values.push(v);
            values.push(-v);
        }
        for v in values {
            for &(i, s) in &faces {
                self.t[i] += s * v;
            }
            self.r[j] = v;
            let extra = self.cost(&finalized);
            self.dfs(j + 1, cost + extra);
            for &(i, s) in &faces {
                self.t[i] -= s * v;
            }
        }
        self.r[j] = 0;
        self.faces[j] = faces;
        self.finalized_at[j] = finalized;
    }
}

fn check_inputs(complex: &SimplicialComplex, sigma: &Chain, integrand: &Integrand) -> Result<()> {
    if sigma.complex_id() != complex.id() || integrand.complex_id() != complex.id() {
        return Err(CurrentsError::ComplexMismatch);
    }
    if sigma.degree() != integrand.degree() {
        return Err(CurrentsError::InvalidArgument("Σ and F have different degrees".into()));
    }
    if sigma.degree() + 1 > complex.max_degree() {
        return Err(CurrentsError::NoFillingSpace { degree: sigma.degree() });
    }
    Ok(())
}

impl ClassFamily {
    /// Enumerates every T = Σ + ∂R (R within the bounds) with F(T) ≤ `cap`.
    pub fn enumerate(
        complex: &SimplicialComplex,
        sigma: &Chain,
        integrand: &Integrand,
        bounds: &SearchBounds,
        cap: f64,
    ) -> Result<Self> {
        check_inputs(complex, sigma, integrand)?;
        if bounds.coeff_bound < 1 {
            return Err(CurrentsError::InvalidArgument(
                "coefficient bound K must be at least 1".into(),
            ));
        }
        let n = sigma.degree();
        let f_sigma = integrand.evaluate(sigma)?;
        if let Some(list) = &bounds.candidates {
            return ClassFamily::from_list(complex, sigma, integrand, list, cap, f_sigma);
        }
        let q = complex.num_cells(n + 1);
        let states = ((2 * bounds.coeff_bound + 1) as f64).powi(q as i32);
        if states > BRUTE_FORCE_LIMIT {
            return Err(CurrentsError::Capacity {
                stage: "class enumeration".into(),
                states: format!("{}^{}", 2 * bounds.coeff_bound + 1, q),
                limit: "3^20".into(),
            });
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
        let mut walker = Walker {
            integrand,
            bound: bounds.coeff_bound,
            cap,
            finalized_at,
            faces: (0..q).map(|j| complex.faces(n + 1, j).to_vec()).collect(),
            t: complex.dense(sigma),
            r: vec![0; q],
            seen: HashMap::new(),
            found: Vec::new(),
            leaves: 0,
            pruned: false,
            overflow: false,
        };
        let start = walker.cost(&free);
        walker.dfs(0, start);
        if walker.overflow {
            return Err(CurrentsError::Capacity {
                stage: "class enumeration".into(),
                states: format!("> {MAX_CANDIDATES} candidates"),
                limit: MAX_CANDIDATES.to_string(),
            });
        }
        let pruned = walker.pruned;
        let searched = walker.leaves;
        let found = walker.found;
        let candidates = found
            .into_par_iter()
            .map(|(t, r, f)| {
                let chain = complex.from_dense(n, &t);
                let filling = complex.from_dense(n + 1, &r);
                let flat = flat_norm(complex, &(&chain - sigma))?.value;
                Ok(Candidate {
                    mass: complex.mass(&chain),
                    chain,
                    filling,
                    f_value: f,
                    flat_distance: flat,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClassFamily {
            sigma: sigma.clone(),
            f_sigma,
            cap,
            candidates,
            searched,
            pruned,
        })
    }

    fn from_list(
        complex: &SimplicialComplex,
        sigma: &Chain,
        integrand: &Integrand,
        list: &[Chain],
        cap: f64,
        f_sigma: f64,
    ) -> Result<Self> {
        let mut all = vec![sigma.clone()];
        all.extend(list.iter().cloned());
        let mut seen = HashMap::new();
        let mut unique = Vec::new();
        for t in all {
            if seen.insert(t.clone(), ()).is_none() {
                unique.push(t);
            }
        }
        let mut pruned = false;
        let candidates: Vec<Option<Candidate>> = unique
            .par_iter()
            .map(|t| {
                let filling = is_homologous(complex, t, sigma)?.ok_or(CurrentsError::NotHomologous)?;
                let f_value = integrand.evaluate(t)?;
                if f_value > cap + 1e-9 {
                    return Ok(None);
                }
                Ok(Some(Candidate {
                    flat_distance: flat_norm(complex, &(t - sigma))?.value,
                    mass: complex.mass(t),
                    chain: t.clone(),
                    filling,
                    f_value,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        if candidates.iter().any(|c| c.is_none()) {
            pruned = true;
        }
        Ok(ClassFamily {
            sigma: sigma.clone(),
            f_sigma,
            cap,
            searched: unique.len() as u64,
            candidates: candidates.into_iter().flatten().collect(),
            pruned,
        })
    }

    pub fn sigma(&self) -> &Chain {
        &self.sigma
    }

    /// F(Σ).
    pub fn f_sigma(&self) -> f64 {
        self.f_sigma
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    /// Number of witnesses R visited at the leaves of the search (before deduplication).
    pub fn searched(&self) -> u64 {
        self.searched
    }

    /// Whether the cap removed any part of the search space.
    pub fn pruned(&self) -> bool {
        self.pruned
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_grid_complex;
    use crate::integrand::make_area_integrand;

    #[test]
    fn unit_cell_class() {
        let c = build_grid_complex(&[1, 1], false).unwrap();
        let f = make_area_integrand(&c, 1).unwrap();
        let sigma = c.chain(1, &[(0, 1)]).unwrap();
        let fam = ClassFamily::enumerate(&c, &sigma, &f, &SearchBounds::new(1), f64::INFINITY).unwrap();
        assert_eq!(fam.candidates().len(), 3);
        assert!(!fam.pruned());
        let mut values: Vec<(f64, f64)> = fam.candidates().iter().map(|c| (c.f_value, c.flat_distance)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(values, vec![(1.0, 0.0), (3.0, 1.0), (5.0, 1.0)]);
        let capped = ClassFamily::enumerate(&c, &sigma, &f, &SearchBounds::new(1), 3.0).unwrap();
        assert_eq!(capped.candidates().len(), 2);
        assert!(capped.pruned());
        for cand in fam.candidates() {
            assert_eq!(&cand.chain - &sigma, c.boundary(&cand.filling).unwrap());
            assert!((cand.f_value - f.evaluate(&cand.chain).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn capped_enumeration_matches_filtered_full_enumeration() {
        let c = build_grid_complex(&[3, 2], false).unwrap();
        let f = Integrand::from_density(&c, 1, |i, _| (1.0 + 0.1 * (i % 4) as f64, 1.2)).unwrap();
        let sigma = c.chain(1, &[(0, 1)]).unwrap();
        let full = ClassFamily::enumerate(&c, &sigma, &f, &SearchBounds::new(1), f64::INFINITY).unwrap();
        assert_eq!(full.candidates().len(), 729);
        let cap = 6.0;
        let capped = ClassFamily::enumerate(&c, &sigma, &f, &SearchBounds::new(1), cap).unwrap();
        let expected = full.candidates().iter().filter(|c| c.f_value <= cap + 1e-9).count();
        assert_eq!(capped.candidates().len(), expected);
    }

    #[test]
    fn explicit_candidates_are_checked() {
        let c = build_grid_complex(&[1, 1], false).unwrap();
        let f = make_area_integrand(&c, 1).unwrap();
        let sigma = c.chain(1, &[(0, 1)]).unwrap();
        let bad = SearchBounds::with_candidates(1, vec![c.chain(1, &[(1, 1)]).unwrap()]);
        assert!(ClassFamily::enumerate(&c, &sigma, &f, &bad, f64::INFINITY).is_err());
        let path = &sigma + &c.boundary(&c.chain(2, &[(0, 1)]).unwrap()).unwrap();
        let ok = SearchBounds::with_candidates(1, vec![path]);
        let fam = ClassFamily::enumerate(&c, &sigma, &f, &ok, f64::INFINITY).unwrap();
        assert_eq!(fam.candidates().len(), 2);
    }

    #[test]
    fn guard_applies() {
        let c = build_grid_complex(&[7, 3], false).unwrap();
        let f = make_area_integrand(&c, 1).unwrap();
        let sigma = c.chain(1, &[(0, 1)]).unwrap();
        assert!(matches!(
            ClassFamily::enumerate(&c, &sigma, &f, &SearchBounds::new(1), 1.0),
            Err(CurrentsError::Capacity { .. })
        ));
    }
}
