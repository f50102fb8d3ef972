//! Parametric integrands discretized as per-oriented-cell weight tables.
//!
//! `weight_plus[σ]` is the value of the functional on σ with its reference orientation,
//! `weight_minus[σ]` on the reversed cell; both already include the cell volume. The tables
//! need not be even, and the only certified property is the mass comparability
//! Λ⁻¹·vol(σ) ≤ w±(σ) ≤ Λ·vol(σ). Which tables come from elliptic integrands is not decided
//! here; the flat-norm oracle checks ellipticity-type comparisons a posteriori on small cases.
//!
//! Evaluation is continuous in the coefficients, so lower semicontinuity is automatic in this
//! finite-dimensional model.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chain::Chain;
use crate::complex::{CellShape, ComplexId, SimplicialComplex};
use crate::error::{CurrentsError, Result};

const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Integrand {
    complex: ComplexId,
    degree: usize,
    weight_plus: Vec<f64>,
    weight_minus: Vec<f64>,
    lambda: f64,
}

/// Edge vectors spanning a cell (first vertex as origin for simplices, binary corners for cubes).
pub(crate) fn spanning_vectors(complex: &SimplicialComplex, degree: usize, index: usize) -> Vec<Vec<f64>> {
    let cell = complex.cell(degree, index);
    let verts = complex.vertices();
    let origin = &verts[cell[0]];
    let tips: Vec<usize> = match complex.shape() {
        CellShape::Simplex => cell[1..].to_vec(),
        CellShape::Cube => (0..degree).map(|i| cell[1 << i]).collect(),
    };
    tips.iter()
        .map(|&v| verts[v].iter().zip(origin).map(|(a, b)| a - b).collect())
        .collect()
}

/// Cosine of the angle between the oriented n-planes of two cells.
fn alignment(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let cross = DMatrix::from_fn(n, n, |i, j| dot(&a[i], &b[j])).determinant();
    let ga = DMatrix::from_fn(n, n, |i, j| dot(&a[i], &a[j])).determinant();
    let gb = DMatrix::from_fn(n, n, |i, j| dot(&b[i], &b[j])).determinant();
    cross / (ga * gb).sqrt()
}

/// Unit tangent of an oriented edge.
fn edge_direction(complex: &SimplicialComplex, index: usize) -> Vec<f64> {
    let v = &spanning_vectors(complex, 1, index)[0];
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / len).collect()
}

impl Integrand {
    pub fn new(
        complex: &SimplicialComplex,
        degree: usize,
        weight_plus: Vec<f64>,
        weight_minus: Vec<f64>,
        lambda: f64,
    ) -> Result<Self> {
        if degree > complex.max_degree() {
            return Err(CurrentsError::InvalidDegree {
                degree,
                reason: "integrand degree exceeds the complex".into(),
            });
        }
        let n = complex.num_cells(degree);
        if weight_plus.len() != n || weight_minus.len() != n {
            return Err(CurrentsError::InvalidIntegrand(format!(
                "weight tables must have {n} entries"
            )));
        }
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(CurrentsError::InvalidIntegrand(format!(
                "ellipticity bound {lambda} must be >= 1"
            )));
        }
        for (i, (&wp, &wm)) in weight_plus.iter().zip(&weight_minus).enumerate() {
            let vol = complex.volume(degree, i);
            for w in [wp, wm] {
                if !(w > 0.0) || !w.is_finite() {
                    return Err(CurrentsError::InvalidIntegrand(format!(
                        "weight {w} on cell {i} is not positive"
                    )));
                }
                if w < vol / lambda * (1.0 - BOUND_SLACK) || w > vol * lambda * (1.0 + BOUND_SLACK) {
                    return Err(CurrentsError::InvalidIntegrand(format!(
                        "weight {w} on cell {i} violates the bound with Λ = {lambda} (volume {vol})"
                    )));
                }
            }
        }
        Ok(Integrand {
            complex: complex.id(),
            degree,
            weight_plus,
            weight_minus,
            lambda,
        })
    }

    /// Builds the table from per-unit-volume densities `(plus, minus)` evaluated on each cell;
    /// Λ is the smallest admissible constant (at least 1).
    pub fn from_density(
        complex: &SimplicialComplex,
        degree: usize,
        density: impl Fn(usize, &[f64]) -> (f64, f64),
    ) -> Result<Self> {
        let n = complex.num_cells(degree);
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        let mut lambda: f64 = 1.0;
        for i in 0..n {
            let (p, m) = density(i, complex.barycenter(degree, i));
            for d in [p, m] {
                if !(d > 0.0) || !d.is_finite() {
                    return Err(CurrentsError::InvalidIntegrand(format!(
                        "density {d} on cell {i} is not positive"
                    )));
                }
                lambda = lambda.max(d).max(1.0 / d);
            }
            let vol = complex.volume(degree, i);
            plus.push(p * vol);
            minus.push(m * vol);
        }
        Integrand::new(complex, degree, plus, minus, lambda)
    }

    /// Per-unit weight a on cells whose barycenter has x < `split`, b elsewhere.
    pub fn two_zone(complex: &SimplicialComplex, degree: usize, split: f64, a: f64, b: f64) -> Result<Self> {
        Integrand::from_density(complex, degree, |_, x| if x[0] < split { (a, a) } else { (b, b) })
    }

    /// Orientation-dependent constant densities: `plus` along the reference orientation,
    /// `minus` against it.
    pub fn drift(complex: &SimplicialComplex, degree: usize, plus: f64, minus: f64) -> Result<Self> {
        Integrand::from_density(complex, degree, |_, _| (plus, minus))
    }

    /// Curve integrand F(τ) = sqrt((aτ_x)² + (bτ_y)² + τ_z²) on 1-chains.
    pub fn anisotropic_xy(complex: &SimplicialComplex, degree: usize, a: f64, b: f64) -> Result<Self> {
        if degree != 1 {
            return Err(CurrentsError::InvalidIntegrand(
                "anisotropic-xy is defined on 1-chains only".into(),
            ));
        }
        Integrand::from_density(complex, 1, |i, _| {
            let t = edge_direction(complex, i);
            let mut s = (a * t[0]).powi(2) + (b * t[1]).powi(2);
            if t.len() > 2 {
                s += t[2] * t[2];
            }
            (s.sqrt(), s.sqrt())
        })
    }

    pub fn complex_id(&self) -> ComplexId {
        self.complex
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The ellipticity-bound constant Λ.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weight_plus(&self) -> &[f64] {
        &self.weight_plus
    }

    pub fn weight_minus(&self) -> &[f64] {
        &self.weight_minus
    }

    /// Weight of a cell traversed with the given coefficient sign.
    pub fn weight(&self, index: usize, coefficient: i64) -> f64 {
        if coefficient >= 0 {
            self.weight_plus[index]
        } else {
            self.weight_minus[index]
        }
    }

    fn check(&self, chain: &Chain) -> Result<()> {
        if chain.complex_id() != self.complex {
            return Err(CurrentsError::ComplexMismatch);
        }
        if chain.degree() != self.degree {
            return Err(CurrentsError::InvalidArgument(format!(
                "integrand of degree {} applied to a {}-chain",
                self.degree,
                chain.degree()
            )));
        }
        Ok(())
    }

    /// F(T) = Σ |θ_σ| · w_{sign θ_σ}(σ).
    pub fn evaluate(&self, chain: &Chain) -> Result<f64> {
        self.check(chain)?;
        Ok(self.value(chain))
    }

    /// Unchecked evaluation for hot loops where degree and complex are known to match.
    pub(crate) fn value(&self, chain: &Chain) -> f64 {
        chain
            .iter()
            .map(|(i, c)| c.unsigned_abs() as f64 * self.weight(i, c))
            .sum()
    }

    /// The integrand multiplied by a positive constant.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(CurrentsError::InvalidIntegrand("scale factor must be positive".into()));
        }
        Ok(Integrand {
            complex: self.complex,
            degree: self.degree,
            weight_plus: self.weight_plus.iter().map(|w| w * factor).collect(),
            weight_minus: self.weight_minus.iter().map(|w| w * factor).collect(),
            lambda: self.lambda * factor.max(1.0 / factor),
        })
    }

    /// Nearest-neighbour freezing at `x`: every cell takes the per-unit weights of the cell
    /// whose orientation is best aligned with its own, ties broken by distance of the
    /// barycenter to `x`, then by index.
    pub fn freeze(&self, complex: &SimplicialComplex, x: &[f64]) -> Result<Self> {
        if complex.id() != self.complex {
            return Err(CurrentsError::ComplexMismatch);
        }
        if x.len() != complex.ambient_dim() {
            return Err(CurrentsError::InvalidArgument("point has the wrong dimension".into()));
        }
        for (a, &xa) in x.iter().enumerate() {
            let lo = complex.vertices().iter().map(|v| v[a]).fold(f64::INFINITY, f64::min);
            let hi = complex
                .vertices()
                .iter()
                .map(|v| v[a])
                .fold(f64::NEG_INFINITY, f64::max);
            if xa < lo - 1e-12 || xa > hi + 1e-12 {
                return Err(CurrentsError::InvalidArgument(format!(
                    "freeze point {x:?} lies outside the bounding box"
                )));
            }
        }
        let n = complex.num_cells(self.degree);
        let frames: Vec<Vec<Vec<f64>>> = (0..n).map(|i| spanning_vectors(complex, self.degree, i)).collect();
        let dist: Vec<f64> = (0..n)
            .map(|i| SimplicialComplex::point_distance(complex.barycenter(self.degree, i), x))
            .collect();
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for i in 0..n {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                let cos = alignment(&frames[i], &frames[j]);
                let better = match best {
                    None => true,
                    Some((b, bc)) => {
                        let (abs_new, abs_old) = (cos.abs(), bc.abs());
                        abs_new > abs_old + 1e-9 || (abs_new > abs_old - 1e-9 && dist[j] < dist[b] - 1e-12)
                    }
                };
                if better {
                    best = Some((j, cos));
                }
            }
            let (j, cos) = best.expect("at least one cell");
            let vol_j = complex.volume(self.degree, j);
            let (p, m) = (self.weight_plus[j] / vol_j, self.weight_minus[j] / vol_j);
            let (p, m) = if cos >= 0.0 { (p, m) } else { (m, p) };
            let vol = complex.volume(self.degree, i);
            plus.push(p * vol);
            minus.push(m * vol);
        }
        Ok(Integrand {
            complex: self.complex,
            degree: self.degree,
            weight_plus: plus,
            weight_minus: minus,
            lambda: self.lambda,
        })
    }
}

/// F(x, τ) = ‖τ‖: weights equal to volumes, Λ = 1.
pub fn make_area_integrand(complex: &SimplicialComplex, degree: usize) -> Result<Integrand> {
    let vols = complex.volumes(degree).to_vec();
    Integrand::new(complex, degree, vols.clone(), vols, 1.0)
}

/// Scalar map on ℝ^k with φ(0) = 0 and a known bound on |Dφ|.
#[derive(Clone)]
pub enum Phi {
    Zero,
    /// φ(v) = ⟨a, v⟩.
    Linear(Vec<f64>),
    /// φ(v) = Σ a_j sin(v_j).
    SinSum(Vec<f64>),
    Custom {
        map: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        lipschitz: f64,
    },
}

impl fmt::Debug for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phi::Zero => write!(f, "Zero"),
            Phi::Linear(a) => f.debug_tuple("Linear").field(a).finish(),
            Phi::SinSum(a) => f.debug_tuple("SinSum").field(a).finish(),
            Phi::Custom { lipschitz, .. } => f.debug_struct("Custom").field("lipschitz", lipschitz).finish(),
        }
    }
}

impl Phi {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Phi::Zero => 0.0,
            Phi::Linear(a) => a.iter().zip(v).map(|(x, y)| x * y).sum(),
            Phi::SinSum(a) => a.iter().zip(v).map(|(x, y)| x * y.sin()).sum(),
            Phi::Custom { map, .. } => map(v),
        }
    }

    /// Declared sup |Dφ| (Euclidean norm of the gradient).
    pub fn lipschitz(&self) -> f64 {
        match self {
            Phi::Zero => 0.0,
            Phi::Linear(a) | Phi::SinSum(a) => a.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Phi::Custom { lipschitz, .. } => *lipschitz,
        }
    }
}

/// G(T) = F(T) + φ(∫ f dF‖T‖) with sup|Dφ|·sup|f| < 1.
#[derive(Clone, Debug)]
pub struct GFunctional {
    base: Integrand,
    f_values: Vec<Vec<f64>>,
    phi: Phi,
    b: f64,
}

impl GFunctional {
    /// `f_values[σ]` samples f at the barycenter of σ; it must vanish on spt(Σ).
    pub fn new(base: Integrand, f_values: Vec<Vec<f64>>, phi: Phi, sigma: &Chain) -> Result<Self> {
        if f_values.len() != base.weight_plus.len() {
            return Err(CurrentsError::InvalidFunctional(format!(
                "f must have one sample per {}-cell",
                base.degree
            )));
        }
        let k = f_values.first().map_or(0, |v| v.len());
        if f_values.iter().any(|v| v.len() != k) {
            return Err(CurrentsError::InvalidFunctional(
                "f samples have mixed dimensions".into(),
            ));
        }
        if let Phi::Linear(a) | Phi::SinSum(a) = &phi {
            if a.len() != k {
                return Err(CurrentsError::InvalidFunctional(format!(
                    "φ acts on ℝ^{} but f takes values in ℝ^{k}",
                    a.len()
                )));
            }
        }
        if phi.eval(&vec![0.0; k]).abs() > 1e-12 {
            return Err(CurrentsError::InvalidFunctional("φ(0) must vanish".into()));
        }
        if sigma.complex_id() != base.complex || sigma.degree() != base.degree {
            return Err(CurrentsError::ComplexMismatch);
        }
        for (i, _) in sigma.iter() {
            if f_values[i].iter().any(|x| x.abs() > 1e-12) {
                return Err(CurrentsError::InvalidFunctional(format!(
                    "f does not vanish on cell {i} of spt(Σ)"
                )));
            }
        }
        let sup_f = f_values
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let b = phi.lipschitz() * sup_f;
        if !(b < 1.0) {
            return Err(CurrentsError::InvalidFunctional(format!(
                "sup|Dφ|·sup|f| = {b} must be below 1"
            )));
        }
        Ok(GFunctional { base, f_values, phi, b })
    }

    pub fn base(&self) -> &Integrand {
        &self.base
    }

    /// b = sup|Dφ|·sup|f|, so that (1−b)F ≤ G ≤ (1+b)F.
    pub fn bound(&self) -> f64 {
        self.b
    }

    pub fn evaluate(&self, chain: &Chain) -> Result<f64> {
        let f = self.base.evaluate(chain)?;
        let k = self.f_values.first().map_or(0, |v| v.len());
        let mut v = vec![0.0; k];
        for (i, c) in chain.iter() {
            let w = c.unsigned_abs() as f64 * self.base.weight(i, c);
            for (acc, fj) in v.iter_mut().zip(&self.f_values[i]) {
                *acc += fj * w;
            }
        }
        Ok(f + self.phi.eval(&v))
    }
}
