//! Penalized minimization over a homology class, the λ₀ threshold, almost-minimality checks
//! and calibration/linear-deficit certificates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::complex::SimplicialComplex;
use crate::error::{CurrentsError, Result};
use crate::family::{ClassFamily, SearchBounds};
use crate::flatnorm::{flat_norm, is_homologous};
use crate::integrand::Integrand;

/// Tolerance for ties between functional values.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    /// λ·|𝔽(T−Σ) − η|
    Absolute,
    /// λ·(𝔽(T−Σ) − η)²
    Quadratic,
}

impl Penalty {
    pub fn apply(self, flat_distance: f64, eta: f64) -> f64 {
        match self {
            Penalty::Absolute => (flat_distance - eta).abs(),
            Penalty::Quadratic => (flat_distance - eta).powi(2),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PenalizedProblem {
    pub sigma: Chain,
    pub integrand: Integrand,
    pub eta: f64,
    pub lambda: f64,
    pub penalty: Penalty,
    pub search: SearchBounds,
}

impl PenalizedProblem {
    pub fn new(
        sigma: Chain,
        integrand: Integrand,
        eta: f64,
        lambda: f64,
        penalty: Penalty,
        search: SearchBounds,
    ) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(CurrentsError::InvalidArgument(format!(
                "η = {eta} must be non-negative"
            )));
        }
        // λ = 0 is admitted and switches the penalty off.
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(CurrentsError::InvalidArgument(format!(
                "λ = {lambda} must be non-negative"
            )));
        }
        if search.coeff_bound < 1 {
            return Err(CurrentsError::InvalidArgument(
                "coefficient bound K must be at least 1".into(),
            ));
        }
        if sigma.complex_id() != integrand.complex_id() {
            return Err(CurrentsError::ComplexMismatch);
        }
        Ok(PenalizedProblem {
            sigma,
            integrand,
            eta,
            lambda,
            penalty,
            search,
        })
    }

    /// The value at T given F(T) and 𝔽(T−Σ).
    pub fn combine(&self, f_value: f64, flat_distance: f64) -> f64 {
        f_value + self.lambda * self.penalty.apply(flat_distance, self.eta)
    }

    /// F_{δ,λ}(Σ) = F(Σ) + λ·penalty(0): every minimizer has F(T) below it.
    pub fn sigma_value(&self) -> f64 {
        self.combine(self.integrand.value(&self.sigma), 0.0)
    }
}

/// F(T) + λ·penalty(𝔽(T−Σ)) for T homologous to Σ.
pub fn penalized_value(complex: &SimplicialComplex, problem: &PenalizedProblem, t: &Chain) -> Result<f64> {
    let f = problem.integrand.evaluate(t)?;
    if is_homologous(complex, t, &problem.sigma)?.is_none() {
        return Err(CurrentsError::NotHomologous);
    }
    let flat = flat_norm(complex, &(t - &problem.sigma))?.value;
    Ok(problem.combine(f, flat))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimizer {
    pub chain: Chain,
    pub filling: Chain,
    pub value: f64,
    pub f_value: f64,
    pub flat_distance: f64,
    pub support_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizerSet {
    pub minimizers: Vec<Minimizer>,
    pub value: f64,
    /// Distinct candidates compared.
    pub searched: usize,
    /// a-priori bound F(T) ≤ F_{δ,λ}(Σ) used to prune.
    pub cap: f64,
}

impl MinimizerSet {
    /// The set is exactly {Σ}.
    pub fn is_only(&self, sigma: &Chain) -> bool {
        self.minimizers.len() == 1 && &self.minimizers[0].chain == sigma
    }

    pub fn max_support_distance(&self) -> f64 {
        self.minimizers.iter().map(|m| m.support_distance).fold(0.0, f64::max)
    }
}

/// Enumerates the class once with the given value cap; reusable across (η, λ) pairs whose
/// a-priori bound does not exceed it.
pub fn class_family(
    complex: &SimplicialComplex,
    sigma: &Chain,
    integrand: &Integrand,
    search: &SearchBounds,
    cap: f64,
) -> Result<ClassFamily> {
    ClassFamily::enumerate(complex, sigma, integrand, search, cap)
}

/// Minimizers of the problem among the members of a precomputed family.
pub fn minimize_in_family(
    complex: &SimplicialComplex,
    problem: &PenalizedProblem,
    family: &ClassFamily,
) -> Result<MinimizerSet> {
    if family.sigma() != &problem.sigma {
        return Err(CurrentsError::InvalidArgument(
            "family was built for a different Σ".into(),
        ));
    }
    let bound = problem.sigma_value();
    if bound > family.cap() + TIE_TOL {
        return Err(CurrentsError::InvalidArgument(format!(
            "family cap {} is below the a-priori bound {bound}",
            family.cap()
        )));
    }
    let scored: Vec<(usize, f64)> = family
        .candidates()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.f_value <= bound + TIE_TOL)
        .map(|(i, c)| (i, problem.combine(c.f_value, c.flat_distance)))
        .collect();
    let best = scored.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let mut minimizers = Vec::new();
    for &(i, v) in &scored {
        if v <= best + TIE_TOL {
            let c = &family.candidates()[i];
            minimizers.push(Minimizer {
                chain: c.chain.clone(),
                filling: c.filling.clone(),
                value: v,
                f_value: c.f_value,
                flat_distance: c.flat_distance,
                support_distance: complex.support_distance(&c.chain, &problem.sigma)?,
            });
        }
    }
    for m in &minimizers {
        if !(m.f_value <= m.value + TIE_TOL && m.value <= bound + TIE_TOL) {
            return Err(CurrentsError::Solver(format!(
                "minimizer violates F ≤ F_δλ ≤ F_δλ(Σ): {} / {} / {bound}",
                m.f_value, m.value
            )));
        }
    }
    Ok(MinimizerSet {
        minimizers,
        value: best,
        searched: scored.len(),
        cap: bound,
    })
}

/// Exact minimization of F_{δ,λ} (or its quadratic variant) over the bounded class of Σ.
pub fn minimize_penalized(complex: &SimplicialComplex, problem: &PenalizedProblem) -> Result<MinimizerSet> {
    let cap = problem.sigma_value();
    let family = class_family(complex, &problem.sigma, &problem.integrand, &problem.search, cap)?;
    minimize_in_family(complex, problem, &family)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub minimizers: usize,
    pub sigma_unique: bool,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSweep {
    /// Smallest grid λ from which on every grid point selects exactly {Σ}; +∞ if none.
    pub lambda0: f64,
    /// sup over T ≠ Σ in the class of (F(Σ) − F(T)) / 𝔽(T − Σ), clipped at 0: for λ above it
    /// Σ is the unique minimizer of F_{0,λ}.
    pub threshold: f64,
    pub rows: Vec<LambdaRow>,
}

/// Scans a λ-grid with η = 0 for the threshold beyond which Σ is the only minimizer.
pub fn find_lambda0(
    complex: &SimplicialComplex,
    sigma: &Chain,
    integrand: &Integrand,
    search: &SearchBounds,
    lambda_grid: &[f64],
) -> Result<LambdaSweep> {
    if lambda_grid.is_empty() || lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CurrentsError::InvalidArgument(
            "λ grid must be nonempty and strictly ascending".into(),
        ));
    }
    // With η = 0 the a-priori bound F(T) ≤ F(Σ) does not depend on λ.
    let f_sigma = integrand.evaluate(sigma)?;
    let family = class_family(complex, sigma, integrand, search, f_sigma)?;
    let mut rows = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let problem = PenalizedProblem::new(
            sigma.clone(),
            integrand.clone(),
            0.0,
            lambda,
            Penalty::Absolute,
            search.clone(),
        )?;
        let set = minimize_in_family(complex, &problem, &family)?;
        rows.push(LambdaRow {
            lambda,
            minimizers: set.minimizers.len(),
            sigma_unique: set.is_only(sigma),
            value: set.value,
        });
    }
    let mut lambda0 = f64::INFINITY;
    for row in rows.iter().rev() {
        if !row.sigma_unique {
            break;
        }
        lambda0 = row.lambda;
    }
    let threshold = family
        .candidates()
        .iter()
        .filter(|c| &c.chain != sigma)
        .map(|c| (f_sigma - c.f_value) / c.flat_distance)
        .fold(0.0, f64::max);
    Ok(LambdaSweep {
        lambda0,
        threshold,
        rows,
    })
}

/// C = 4Λ²λ/(n+1) and r₀ = (n+1)/(4λΛ).
pub fn almost_min_constant(lambda: f64, big_lambda: f64, n: usize) -> Result<(f64, f64)> {
    if !(lambda > 0.0) || !(big_lambda > 0.0) {
        return Err(CurrentsError::InvalidArgument("λ and Λ must be positive".into()));
    }
    let m = (n + 1) as f64;
    Ok((
        4.0 * big_lambda * big_lambda * lambda / m,
        m / (4.0 * lambda * big_lambda),
    ))
}

/// A closed perturbation X = ∂Y supported in a ball around a centre.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub center: Vec<f64>,
    /// Infimum of the radii r with spt(Y) inside the open ball B_r(center).
    pub radius: f64,
    pub x: Chain,
    pub y: Chain,
}

/// Largest ball search exhausted fully: (2K+1)^cells ≤ 3^8.
const FULL_BALL_STATES: f64 = 6561.0;

/// Closed n-chains X = ∂Y with Y an (n+1)-chain with coefficients in [−K, K] on the cells
/// of balls of radius below `r_max`. Centres are the vertices and the barycenters of all
/// cells. Large balls are sampled by supports of at most two cells; the second return value
/// reports whether that happened.
pub fn ball_perturbations(
    complex: &SimplicialComplex,
    n: usize,
    r_max: f64,
    coeff_bound: i64,
) -> Result<(Vec<Perturbation>, bool)> {
    if !(r_max > 0.0) {
        return Err(CurrentsError::InvalidArgument("r_max must be positive".into()));
    }
    if n + 1 > complex.max_degree() {
        return Err(CurrentsError::NoFillingSpace { degree: n });
    }
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for k in 0..=complex.max_degree() {
        for i in 0..complex.num_cells(k) {
            let b = complex.barycenter(k, i).to_vec();
            if !centers.iter().any(|c| SimplicialComplex::point_distance(c, &b) < 1e-12) {
                centers.push(b);
            }
        }
    }
    let verts = complex.vertices();
    let reach = |center: &[f64], cell: &[usize]| {
        cell.iter()
            .map(|&v| SimplicialComplex::point_distance(center, &verts[v]))
            .fold(0.0, f64::max)
    };
    let mut values = Vec::new();
    for v in 1..=coeff_bound {
        values.push(v);
        values.push(-v);
    }
    let mut out = Vec::new();
    let mut partial = false;
    let mut seen: HashMap<(Vec<i64>, Vec<i64>), ()> = HashMap::new();
    for center in &centers {
        let mut cells: Vec<(usize, f64)> = (0..complex.num_cells(n + 1))
            .map(|j| (j, reach(center, complex.cell(n + 1, j))))
            .filter(|&(_, r)| r < r_max)
            .collect();
        cells.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if cells.is_empty() {
            continue;
        }
        let mut push = |y: Vec<(usize, i64)>, radius: f64| -> Result<()> {
            let y = complex.chain(n + 1, &y)?;
            let x = complex.boundary(&y)?;
            if x.is_zero() {
                return Ok(());
            }
            let key = (
                center.iter().map(|c| (c * 1e9).round() as i64).collect(),
                x.iter().flat_map(|(i, c)| [i as i64, c]).collect(),
            );
            if seen.insert(key, ()).is_none() {
                out.push(Perturbation {
                    center: center.clone(),
                    radius,
                    x,
                    y,
                });
            }
            Ok(())
        };
        let states = ((2 * coeff_bound + 1) as f64).powi(cells.len() as i32);
        if states <= FULL_BALL_STATES {
            let m = cells.len();
            let mut digits = vec![0usize; m];
            loop {
                let mut i = 0;
                while i < m {
                    digits[i] += 1;
                    if digits[i] <= values.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == m {
                    break;
                }
                let y: Vec<(usize, i64)> = digits
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| d > 0)
                    .map(|(k, &d)| (cells[k].0, values[d - 1]))
                    .collect();
                let radius = digits
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| d > 0)
                    .map(|(k, _)| cells[k].1)
                    .fold(0.0, f64::max);
                push(y, radius)?;
            }
        } else {
            partial = true;
            for a in 0..cells.len() {
                for &va in &values {
                    push(vec![(cells[a].0, va)], cells[a].1)?;
                    for b in a + 1..cells.len() {
                        for &vb in &values {
                            push(vec![(cells[a].0, va), (cells[b].0, vb)], cells[a].1.max(cells[b].1))?;
                        }
                    }
                }
            }
        }
    }
    Ok((out, partial))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub perturbation: Perturbation,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlmostMinReport {
    pub pass: bool,
    /// No perturbation passed the side conditions.
    pub vacuous: bool,
    pub tests: usize,
    /// Perturbations discarded because 𝔽(X) ≥ 1.
    pub skipped: usize,
    /// Some balls were sampled instead of exhausted.
    pub partial: bool,
    /// Smallest value of F(S+X) + C·r·M(S↾K + X) − F(S) seen.
    pub worst_margin: f64,
    pub violation: Option<Violation>,
}

/// Flat norms of perturbations, cached by chain.
pub struct FlatCache<'a> {
    complex: &'a SimplicialComplex,
    cache: HashMap<Chain, f64>,
}

impl<'a> FlatCache<'a> {
    pub fn new(complex: &'a SimplicialComplex) -> Self {
        FlatCache {
            complex,
            cache: HashMap::new(),
        }
    }

    pub fn get(&mut self, x: &Chain) -> Result<f64> {
        if let Some(v) = self.cache.get(x) {
            return Ok(*v);
        }
        let v = flat_norm(self.complex, x)?.value;
        self.cache.insert(x.clone(), v);
        Ok(v)
    }
}

/// Tests F(S) ≤ F(S+X) + C·r·M(S↾K + X) for closed X in small balls with 𝔽(X) < 1, where K
/// is the closed ball of radius r.
pub fn check_almost_minimizing(
    complex: &SimplicialComplex,
    s: &Chain,
    integrand: &Integrand,
    c: f64,
    r_max: f64,
    coeff_bound: i64,
) -> Result<AlmostMinReport> {
    let (perturbations, partial) = ball_perturbations(complex, s.degree(), r_max, coeff_bound)?;
    let mut flats = FlatCache::new(complex);
    check_with_perturbations(complex, s, integrand, c, &perturbations, partial, &mut flats)
}

pub fn check_with_perturbations(
    complex: &SimplicialComplex,
    s: &Chain,
    integrand: &Integrand,
    c: f64,
    perturbations: &[Perturbation],
    partial: bool,
    flats: &mut FlatCache,
) -> Result<AlmostMinReport> {
    let fs = integrand.evaluate(s)?;
    let n = s.degree();
    let verts = complex.vertices();
    let mut report = AlmostMinReport {
        pass: true,
        vacuous: true,
        tests: 0,
        skipped: 0,
        partial,
        worst_margin: f64::INFINITY,
        violation: None,
    };
    for p in perturbations {
        if complex.mass(&p.y) >= 1.0 && flats.get(&p.x)? >= 1.0 {
            report.skipped += 1;
            continue;
        }
        let in_ball = |i: usize| {
            complex
                .cell(n, i)
                .iter()
                .all(|&v| SimplicialComplex::point_distance(&p.center, &verts[v]) <= p.radius + 1e-12)
        };
        let local = &s.restrict(in_ball) + &p.x;
        let margin = integrand.value(&(s + &p.x)) + c * p.radius * complex.mass(&local) - fs;
        report.tests += 1;
        report.vacuous = false;
        if margin < report.worst_margin {
            report.worst_margin = margin;
        }
        if margin < -TIE_TOL && report.violation.as_ref().map_or(true, |v| margin < v.margin) {
            report.pass = false;
            report.violation = Some(Violation {
                perturbation: p.clone(),
                margin,
            });
        }
    }
    Ok(report)
}

/// Largest violation of F(R) ≤ F(R+X) + λ·𝔽(X) over the perturbations; non-negative
/// margins mean the inequality holds.
pub fn perturbation_margin(
    r: &Chain,
    integrand: &Integrand,
    lambda: f64,
    perturbations: &[Perturbation],
    flats: &mut FlatCache,
) -> Result<(f64, Option<Perturbation>)> {
    let fr = integrand.evaluate(r)?;
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for p in perturbations {
        let margin = integrand.value(&(r + &p.x)) + lambda * flats.get(&p.x)? - fr;
        if margin < worst {
            worst = margin;
            witness = Some(p.clone());
        }
    }
    Ok((worst, witness))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    /// dω per (n+1)-cell, per unit volume.
    pub d_omega: Vec<f64>,
    /// ‖dω‖_∞: M(Σ) − M(T) ≤ ‖dω‖_∞·M(R) for every filling T − Σ = ∂R, hence
    /// ≤ ‖dω‖_∞·𝔽(Σ − T) whenever 𝔽 is realized by a pure filling.
    pub constant: f64,
    /// max(1, ‖dω‖_∞): M(Σ) − M(T) ≤ this·𝔽(Σ − T) for every T homologous to Σ.
    pub general_constant: f64,
    /// Largest (M(Σ) − M(T))/𝔽(Σ − T) over the enumerated class, when searched.
    pub observed: Option<f64>,
    pub examined: usize,
}

/// Checks that ω (per unit volume, per n-cell, reference orientation) is a calibration of Σ
/// for the area integrand and derives the linear deficit constant.
pub fn verify_calibration(
    complex: &SimplicialComplex,
    omega: &[f64],
    sigma: &Chain,
    integrand: &Integrand,
    search: Option<&SearchBounds>,
) -> Result<CalibrationReport> {
    let n = sigma.degree();
    if integrand.complex_id() != complex.id() || sigma.complex_id() != complex.id() {
        return Err(CurrentsError::ComplexMismatch);
    }
    let is_area = integrand.degree() == n
        && (0..complex.num_cells(n)).all(|i| {
            let v = complex.volume(n, i);
            (integrand.weight_plus()[i] - v).abs() <= 1e-12 * v && (integrand.weight_minus()[i] - v).abs() <= 1e-12 * v
        });
    if !is_area {
        return Err(CurrentsError::InvalidArgument(
            "calibrations are checked for the area integrand".into(),
        ));
    }
    if omega.len() != complex.num_cells(n) {
        return Err(CurrentsError::InvalidArgument("ω needs one value per n-cell".into()));
    }
    if let Some((i, w)) = omega.iter().enumerate().find(|(_, w)| w.abs() > 1.0 + 1e-12) {
        return Err(CurrentsError::NotACalibration(format!(
            "|ω| = {} > 1 on cell {i}",
            w.abs()
        )));
    }
    for (i, c) in sigma.iter() {
        if (omega[i] * c.signum() as f64 - 1.0).abs() > 1e-12 {
            return Err(CurrentsError::NotACalibration(format!(
                "ω does not equal 1 on cell {i} of Σ"
            )));
        }
    }
    let d_omega: Vec<f64> = (0..complex.num_cells(n + 1))
        .map(|j| {
            complex
                .faces(n + 1, j)
                .iter()
                .map(|&(i, s)| s as f64 * omega[i] * complex.volume(n, i))
                .sum::<f64>()
                / complex.volume(n + 1, j)
        })
        .collect();
    let constant = d_omega.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let general_constant = constant.max(1.0);
    let mut observed = None;
    let mut examined = 0;
    if let Some(bounds) = search {
        let family = ClassFamily::enumerate(complex, sigma, integrand, bounds, f64::INFINITY)?;
        let m_sigma = complex.mass(sigma);
        let mut worst: f64 = 0.0;
        for cand in family.candidates() {
            if cand.flat_distance <= 0.0 {
                continue;
            }
            examined += 1;
            worst = worst.max((m_sigma - cand.mass) / cand.flat_distance);
            // The pairing argument: ω(Σ) − ω(T) = −dω(R) for T − Σ = ∂R.
            let paired: f64 = cand
                .filling
                .iter()
                .map(|(j, k)| k as f64 * d_omega[j] * complex.volume(n + 1, j))
                .sum();
            let deficit = m_sigma - cand.mass;
            if deficit > constant * complex.mass(&cand.filling) + 1e-9 || deficit > -paired + 1e-9 {
                return Err(CurrentsError::NotACalibration(format!(
                    "deficit {deficit} exceeds the calibration bound"
                )));
            }
        }
        observed = Some(worst);
    }
    Ok(CalibrationReport {
        d_omega,
        constant,
        general_constant,
        observed,
        examined,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeficitBound {
    /// C* = max (F(Σ) − F(T))₊ / 𝔽(T − Σ) over 0 < 𝔽 ≤ ε.
    pub constant: f64,
    pub worst: Option<Chain>,
    pub examined: usize,
}

/// Empirical linear deficit constant of Σ within flat distance ε.
pub fn linear_deficit_bound(
    complex: &SimplicialComplex,
    sigma: &Chain,
    integrand: &Integrand,
    epsilon: f64,
    search: &SearchBounds,
) -> Result<DeficitBound> {
    // Only T with F(T) < F(Σ) contribute.
    let f_sigma = integrand.evaluate(sigma)?;
    let family = ClassFamily::enumerate(complex, sigma, integrand, search, f_sigma)?;
    let mut out = DeficitBound {
        constant: 0.0,
        worst: None,
        examined: 0,
    };
    for cand in family.candidates() {
        if cand.flat_distance <= 0.0 || cand.flat_distance > epsilon + TIE_TOL {
            continue;
        }
        out.examined += 1;
        let ratio = (f_sigma - cand.f_value).max(0.0) / cand.flat_distance;
        if ratio > out.constant {
            out.constant = ratio;
            out.worst = Some(cand.chain.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_grid_complex, GridSpec};
    use crate::integrand::make_area_integrand;

    fn unit_cell() -> (SimplicialComplex, Chain, Chain) {
        let c = build_grid_complex(&[1, 1], false).unwrap();
        let bottom = c.chain(1, &[(0, 1)]).unwrap();
        let cell = c.chain(2, &[(0, 1)]).unwrap();
        let bd = c.boundary(&cell).unwrap();
        let sign = bd.get(0);
        let long = &bottom - &bd.scaled(sign);
        (c, bottom, long)
    }

    #[test]
    fn penalized_values_on_the_unit_cell() {
        let (c, bottom, long) = unit_cell();
        assert!((c.mass(&long) - 3.0).abs() < 1e-12);
        let f = make_area_integrand(&c, 1).unwrap();
        let p = PenalizedProblem::new(
            bottom.clone(),
            f.clone(),
            0.0,
            1.0,
            Penalty::Absolute,
            SearchBounds::new(1),
        )
        .unwrap();
        assert!((penalized_value(&c, &p, &bottom).unwrap() - 1.0).abs() < 1e-12);
        assert!((penalized_value(&c, &p, &long).unwrap() - 4.0).abs() < 1e-12);
        let p = PenalizedProblem::new(bottom.clone(), f, 0.3, 2.0, Penalty::Absolute, SearchBounds::new(1)).unwrap();
        assert!((penalized_value(&c, &p, &bottom).unwrap() - 1.6).abs() < 1e-12);
        assert!(matches!(
            penalized_value(&c, &p, &c.chain(1, &[(1, 1)]).unwrap()),
            Err(CurrentsError::BoundaryMismatch)
        ));
    }

    #[test]
    fn long_path_threshold() {
        let (c, bottom, long) = unit_cell();
        let f = make_area_integrand(&c, 1).unwrap();
        for (lambda, expect_sigma) in [(1.0, false), (1.9, false), (2.5, true), (10.0, true)] {
            let p = PenalizedProblem::new(
                long.clone(),
                f.clone(),
                0.0,
                lambda,
                Penalty::Absolute,
                SearchBounds::new(1),
            )
            .unwrap();
            let set = minimize_penalized(&c, &p).unwrap();
            assert_eq!(set.is_only(&long), expect_sigma, "λ = {lambda}");
            if !expect_sigma {
                assert_eq!(set.minimizers[0].chain, bottom);
                assert!((set.value - (1.0 + lambda)).abs() < 1e-12);
            }
        }
        let sweep = find_lambda0(&c, &long, &f, &SearchBounds::new(1), &[0.5, 1.0, 1.5, 2.0, 2.5, 3.0]).unwrap();
        assert_eq!(sweep.lambda0, 2.5);
        assert!((sweep.threshold - 2.0).abs() < 1e-12);
        let at_two = &sweep.rows[3];
        assert_eq!(at_two.minimizers, 2);
        let none = find_lambda0(&c, &long, &f, &SearchBounds::new(1), &[0.5, 1.0]).unwrap();
        assert!(none.lambda0.is_infinite());
        assert!(find_lambda0(&c, &long, &f, &SearchBounds::new(1), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn minimizing_sigma_is_selected_for_every_lambda() {
        let (c, bottom, _) = unit_cell();
        let f = make_area_integrand(&c, 1).unwrap();
        let sweep = find_lambda0(&c, &bottom, &f, &SearchBounds::new(1), &[0.1, 1.0]).unwrap();
        assert_eq!(sweep.lambda0, 0.1);
        let p = PenalizedProblem::new(bottom.clone(), f, 0.0, 0.0, Penalty::Absolute, SearchBounds::new(1)).unwrap();
        assert!(minimize_penalized(&c, &p).unwrap().is_only(&bottom));
    }

    #[test]
    fn equal_length_competitor_is_rejected_by_any_penalty() {
        // Two monotone staircases from (0,0) to (2,1) on the 2×1 strip.
        let c = build_grid_complex(&[2, 1], false).unwrap();
        let v = |x: f64, y: f64| c.find_vertex(&[x, y]).unwrap();
        let path = |pts: &[(f64, f64)]| {
            let mut pairs = Vec::new();
            for w in pts.windows(2) {
                let (a, b) = (v(w[0].0, w[0].1), v(w[1].0, w[1].1));
                let e = c.find_cell(1, &[a, b]).unwrap();
                pairs.push((e, if c.cell(1, e)[0] == a { 1 } else { -1 }));
            }
            c.chain(1, &pairs).unwrap()
        };
        let sigma = path(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (2.0, 1.0)]);
        let other = path(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]);
        let f = make_area_integrand(&c, 1).unwrap();
        let p = PenalizedProblem::new(
            sigma.clone(),
            f.clone(),
            0.0,
            0.0,
            Penalty::Absolute,
            SearchBounds::new(1),
        )
        .unwrap();
        let set = minimize_penalized(&c, &p).unwrap();
        assert!(set.minimizers.iter().any(|m| m.chain == other));
        let sweep = find_lambda0(&c, &sigma, &f, &SearchBounds::new(1), &[0.01, 0.5, 1.0]).unwrap();
        assert_eq!(sweep.lambda0, 0.01);
    }

    #[test]
    fn almost_min_constants() {
        assert_eq!(almost_min_constant(1.0, 1.0, 1).unwrap(), (2.0, 0.5));
        assert_eq!(almost_min_constant(2.0, 1.0, 1).unwrap(), (4.0, 0.25));
        let (c1, r1) = almost_min_constant(0.7, 1.3, 2).unwrap();
        let (c2, r2) = almost_min_constant(1.4, 1.3, 2).unwrap();
        assert!((c2 - 2.0 * c1).abs() < 1e-12 && (r2 - r1 / 2.0).abs() < 1e-12);
        assert!(almost_min_constant(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn minimizer_is_almost_minimizing_and_swap_is_caught() {
        let c = SimplicialComplex::grid(&GridSpec::new(&[3, 3]).spacing(0.25)).unwrap();
        let f = make_area_integrand(&c, 1).unwrap();
        let row = |y: f64| {
            let pairs: Vec<(usize, i64)> = (0..c.num_cells(1))
                .filter(|&e| c.cell(1, e).iter().all(|&v| (c.vertices()[v][1] - y).abs() < 1e-12))
                .map(|e| (e, 1))
                .collect();
            c.chain(1, &pairs).unwrap()
        };
        let sigma = row(0.25);
        let report = check_almost_minimizing(&c, &sigma, &f, 0.0, 0.5, 1).unwrap();
        assert!(report.pass && !report.vacuous, "{report:?}");
        assert!(report.worst_margin >= 0.0);
        // push the middle edge of Σ up by one layer
        let middle = c.find_cell(2, &[5, 6, 9, 10]).unwrap();
        let bump = &sigma + &c.boundary(&c.chain(2, &[(middle, 1)]).unwrap()).unwrap();
        let bump = if c.mass(&bump) > 1.0 {
            &sigma - &c.boundary(&c.chain(2, &[(middle, 1)]).unwrap()).unwrap()
        } else {
            bump
        };
        assert!((c.mass(&bump) - 1.25).abs() < 1e-12);
        let report = check_almost_minimizing(&c, &bump, &f, 0.0, 0.5, 1).unwrap();
        assert!(!report.pass);
        let v = report.violation.unwrap();
        assert!(f.value(&(&bump + &v.perturbation.x)) < f.value(&bump));
    }

    #[test]
    fn calibration_of_a_straight_path() {
        let c = build_grid_complex(&[4, 1], false).unwrap();
        let f = make_area_integrand(&c, 1).unwrap();
        let horizontal: Vec<bool> = (0..c.num_cells(1))
            .map(|e| {
                let cell = c.cell(1, e);
                (c.vertices()[cell[0]][1] - c.vertices()[cell[1]][1]).abs() < 1e-12
            })
            .collect();
        let sigma = c
            .chain(
                1,
                &(0..c.num_cells(1))
                    .filter(|&e| horizontal[e] && c.barycenter(1, e)[1] < 0.5)
                    .map(|e| (e, 1))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
        let omega: Vec<f64> = horizontal.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
        let report = verify_calibration(&c, &omega, &sigma, &f, Some(&SearchBounds::new(1))).unwrap();
        assert_eq!(report.constant, 0.0);
        assert_eq!(report.observed, Some(0.0));
        assert_eq!(report.examined, 80);
        let mut bad = omega.clone();
        bad[0] = 1.5;
        assert!(matches!(
            verify_calibration(&c, &bad, &sigma, &f, None),
            Err(CurrentsError::NotACalibration(_))
        ));
    }

    #[test]
    fn deficit_of_the_long_path() {
        let (c, bottom, long) = unit_cell();
        let f = make_area_integrand(&c, 1).unwrap();
        let d = linear_deficit_bound(&c, &long, &f, 10.0, &SearchBounds::new(1)).unwrap();
        assert!((d.constant - 2.0).abs() < 1e-12);
        assert_eq!(d.worst, Some(bottom.clone()));
        let d = linear_deficit_bound(&c, &bottom, &f, 10.0, &SearchBounds::new(1)).unwrap();
        assert_eq!(d.constant, 0.0);
    }
}
