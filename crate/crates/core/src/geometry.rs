//! Distance functions, tubular neighbourhoods, slicing and cone fillings.

use crate::chain::Chain;
use crate::complex::{permutation_sign, CellSet, CellShape, ComplexId, SimplicialComplex};
use crate::error::{CurrentsError, Result};

const LEVEL_TOL: f64 = 1e-12;

/// Per-vertex values d(v) ≥ 0 with a Lipschitz constant over the edges.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFunction {
    complex: ComplexId,
    values: Vec<f64>,
    lipschitz: f64,
}

/// Largest |d(v) − d(w)| / |v − w| over the edges of the complex.
fn edge_slope(complex: &SimplicialComplex, values: &[f64]) -> f64 {
    if complex.max_degree() == 0 {
        return 0.0;
    }
    complex
        .cells(1)
        .iter()
        .enumerate()
        .map(|(e, cell)| (values[cell[0]] - values[cell[cell.len() - 1]]).abs() / complex.volume(1, e))
        .fold(0.0, f64::max)
}

impl LevelFunction {
    pub fn new(complex: &SimplicialComplex, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if values.len() != complex.vertices().len() {
            return Err(CurrentsError::InvalidArgument(
                "one value per vertex is required".into(),
            ));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(CurrentsError::InvalidArgument(
                "level values must be finite and non-negative".into(),
            ));
        }
        let slope = edge_slope(complex, &values);
        if slope > lipschitz * (1.0 + 1e-12) + 1e-12 {
            return Err(CurrentsError::InvalidArgument(format!(
                "edge slope {slope} exceeds the declared Lipschitz constant {lipschitz}"
            )));
        }
        Ok(LevelFunction {
            complex: complex.id(),
            values,
            lipschitz,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn value(&self, vertex: usize) -> f64 {
        self.values[vertex]
    }

    fn check(&self, complex: &SimplicialComplex) -> Result<()> {
        if complex.id() != self.complex {
            return Err(CurrentsError::ComplexMismatch);
        }
        Ok(())
    }
}

/// d(v) = distance from v to the nearest vertex of spt(Σ); the Lipschitz constant is the
/// measured maximal edge slope.
pub fn distance_to(complex: &SimplicialComplex, sigma: &Chain) -> Result<LevelFunction> {
    if sigma.complex_id() != complex.id() {
        return Err(CurrentsError::ComplexMismatch);
    }
    if sigma.is_zero() {
        return Err(CurrentsError::InvalidArgument("distance to the zero chain".into()));
    }
    let targets = complex.support_vertices(sigma);
    let verts = complex.vertices();
    let values: Vec<f64> = verts
        .iter()
        .map(|p| {
            targets
                .iter()
                .map(|&t| SimplicialComplex::point_distance(p, &verts[t]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let slope = edge_slope(complex, &values);
    Ok(LevelFunction {
        complex: complex.id(),
        values,
        lipschitz: slope,
    })
}

/// The tubular neighbourhood B_t: cells all of whose vertices have d(v) < t.
pub fn sublevel(complex: &SimplicialComplex, d: &LevelFunction, t: f64) -> Result<CellSet> {
    d.check(complex)?;
    if !(t >= 0.0) {
        return Err(CurrentsError::InvalidArgument(format!(
            "level {t} must be non-negative"
        )));
    }
    Ok(CellSet::from_vertex_predicate(complex, |v| d.values[v] < t))
}

/// ⟨S, d, t⟩ = ∂(S↾B_t) − (∂S)↾B_t.
pub fn slice(complex: &SimplicialComplex, s: &Chain, d: &LevelFunction, t: f64) -> Result<Chain> {
    d.check(complex)?;
    if s.degree() == 0 {
        return Err(CurrentsError::InvalidDegree {
            degree: 0,
            reason: "slicing needs a chain of degree at least 1".into(),
        });
    }
    if let Some(_) = d.values.iter().find(|v| (*v - t).abs() <= LEVEL_TOL) {
        return Err(CurrentsError::NonRegularLevel { t });
    }
    let ball = sublevel(complex, d, t)?;
    let inside = s.restrict_to(&ball);
    let result = &complex.boundary(&inside)? - &complex.boundary(s)?.restrict_to(&ball);
    debug_assert!(result.iter().all(|(i, _)| crosses(complex, s, &ball, i)));
    Ok(result)
}

/// An (n−1)-cell in B_t that is a face of a cell of spt(S) outside B_t.
fn crosses(complex: &SimplicialComplex, s: &Chain, ball: &CellSet, face: usize) -> bool {
    let k = s.degree();
    ball.contains(k - 1, face)
        && complex
            .cofaces(k - 1, face)
            .iter()
            .any(|&(c, _)| s.get(c) != 0 && !ball.contains(k, c))
}

/// Slice with minimal mass among the regular levels of a window.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSelection {
    pub level: f64,
    pub slice: Chain,
    pub mass: f64,
    /// mass(slice)·(b − a) / mass(S on cells meeting the band a < d < b); `None` when S
    /// does not meet the band.
    pub ratio: Option<f64>,
    /// Every scanned level with the mass of its slice.
    pub levels: Vec<(f64, f64)>,
}

/// Midpoints between consecutive distinct vertex values inside (a, b), with a and b as
/// outer endpoints.
pub fn regular_levels(d: &LevelFunction, a: f64, b: f64) -> Vec<f64> {
    let mut cuts: Vec<f64> = d.values.iter().copied().filter(|&v| v > a && v < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= LEVEL_TOL);
    cuts.windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .filter(|t| d.values.iter().all(|v| (v - t).abs() > LEVEL_TOL))
        .collect()
}

pub fn select_slice(
    complex: &SimplicialComplex,
    s: &Chain,
    d: &LevelFunction,
    a: f64,
    b: f64,
) -> Result<SliceSelection> {
    d.check(complex)?;
    let levels = if a < b { regular_levels(d, a, b) } else { Vec::new() };
    if levels.is_empty() {
        return Err(CurrentsError::EmptyWindow { a, b });
    }
    let mut scanned = Vec::with_capacity(levels.len());
    let mut best: Option<(f64, Chain, f64)> = None;
    for &t in &levels {
        let sl = slice(complex, s, d, t)?;
        let m = complex.mass(&sl);
        scanned.push((t, m));
        if best.as_ref().map_or(true, |(_, _, bm)| m < *bm) {
            best = Some((t, sl, m));
        }
    }
    let (level, slice, mass) = best.expect("at least one level");
    let k = s.degree();
    let band = s.restrict(|i| {
        let vals = complex.cell(k, i).iter().map(|&v| d.values[v]);
        let lo = vals.clone().fold(f64::INFINITY, f64::min);
        let hi = vals.fold(f64::NEG_INFINITY, f64::max);
        lo < b && hi > a
    });
    let band_mass = complex.mass(&band);
    Ok(SliceSelection {
        level,
        slice,
        mass,
        ratio: (band_mass > 0.0).then(|| mass * (b - a) / band_mass),
        levels: scanned,
    })
}

/// Cone over a cycle with its mass diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Cone {
    pub chain: Chain,
    /// Largest distance from the apex to a vertex of spt(X).
    pub radius: f64,
    /// r/(n+1)·M(X).
    pub bound: f64,
    /// max(0, M(cone)/bound − 1).
    pub tol_mesh: f64,
}

/// Joins every cell of spt(X) to `apex`. Cells containing the apex give degenerate joins
/// and contribute nothing.
pub fn cone(complex: &SimplicialComplex, x: &Chain, apex: usize) -> Result<Cone> {
    if x.complex_id() != complex.id() {
        return Err(CurrentsError::ComplexMismatch);
    }
    if complex.shape() != CellShape::Simplex {
        return Err(CurrentsError::NotConeComplete("cones need a simplicial complex".into()));
    }
    if apex >= complex.vertices().len() {
        return Err(CurrentsError::InvalidArgument(format!("no vertex {apex}")));
    }
    let n = x.degree();
    if n == 0 {
        if x.iter().map(|(_, c)| c).sum::<i64>() != 0 {
            return Err(CurrentsError::NotACycle { boundary_mass: 1.0 });
        }
    } else {
        let bd = complex.boundary(x)?;
        if !bd.is_zero() {
            return Err(CurrentsError::NotACycle {
                boundary_mass: complex.mass(&bd),
            });
        }
    }
    if x.is_zero() {
        return Ok(Cone {
            chain: complex.zero_chain(n + 1),
            radius: 0.0,
            bound: 0.0,
            tol_mesh: 0.0,
        });
    }
    if n + 1 > complex.max_degree() {
        return Err(CurrentsError::NoFillingSpace { degree: n });
    }
    let mut pairs = Vec::new();
    for (i, c) in x.iter() {
        let cell = complex.cell(n, i);
        if cell.contains(&apex) {
            continue;
        }
        let mut joined = vec![apex];
        joined.extend_from_slice(cell);
        let j = complex
            .find_cell(n + 1, &joined)
            .ok_or_else(|| CurrentsError::NotConeComplete(format!("cell {i} has no join with vertex {apex}")))?;
        pairs.push((j, c * permutation_sign(&joined, complex.cell(n + 1, j))));
    }
    let chain = complex.chain(n + 1, &pairs)?;
    let bd = complex.boundary(&chain)?;
    if &bd != x {
        return Err(CurrentsError::NotConeComplete(
            "boundary of the join differs from X".into(),
        ));
    }
    let apex_pt = &complex.vertices()[apex];
    let radius = complex
        .support_vertices(x)
        .iter()
        .map(|&v| SimplicialComplex::point_distance(apex_pt, &complex.vertices()[v]))
        .fold(0.0, f64::max);
    let bound = radius / (n + 1) as f64 * complex.mass(x);
    let m = complex.mass(&chain);
    Ok(Cone {
        chain,
        radius,
        bound,
        tol_mesh: if bound > 0.0 { (m / bound - 1.0).max(0.0) } else { 0.0 },
    })
}
