//! Normal graphs over Σ, the discrete second variation, quadratic-growth profiles and the
//! W^{1,2} / L¹ / flat-norm comparison.
//!
//! Two evaluation regimes coexist. Graph chains live on the lattice (node displacements are
//! whole layers of cells) and feed the flat-norm side. The Jacobi form uses the smooth
//! surrogate F_smooth(u) = Σ_i c_i·|segment_i(u)| on the piecewise-linear graph, with c_i the
//! per-unit weight of the i-th edge of Σ.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::complex::{CellShape, ComplexId, SimplicialComplex};
use crate::error::{CurrentsError, Result};
use crate::family::{ClassFamily, SearchBounds};
use crate::flatnorm::flat_norm;
use crate::integrand::Integrand;

/// Normal graphs over a straight axis-aligned path Σ in a planar cubical grid.
#[derive(Clone, Debug)]
pub struct GraphFamily {
    complex: ComplexId,
    sigma: Chain,
    /// Node positions along Σ, in the orientation of Σ.
    nodes: Vec<Vec<f64>>,
    /// Σ's edge between node i and node i+1, with its coefficient.
    edges: Vec<(usize, i64)>,
    normal: Vec<f64>,
    spacing: f64,
}

impl GraphFamily {
    /// Builds the family from Σ, which must be a straight path of unit-multiplicity edges in
    /// a two-dimensional cubical grid.
    pub fn from_path(complex: &SimplicialComplex, sigma: &Chain) -> Result<Self> {
        if sigma.complex_id() != complex.id() {
            return Err(CurrentsError::ComplexMismatch);
        }
        if complex.shape() != CellShape::Cube || complex.ambient_dim() != 2 || sigma.degree() != 1 {
            return Err(CurrentsError::InvalidArgument(
                "graph families need a 1-chain on a planar cubical grid".into(),
            ));
        }
        if sigma.is_zero() || sigma.iter().any(|(_, c)| c.abs() != 1) {
            return Err(CurrentsError::InvalidArgument(
                "Σ must be a path with coefficients ±1".into(),
            ));
        }
        let bd = complex.boundary(sigma)?;
        let start = bd.iter().find(|(_, c)| *c == -1).map(|(v, _)| v);
        let end = bd.iter().find(|(_, c)| *c == 1).map(|(v, _)| v);
        let (Some(start), Some(_)) = (start, end) else {
            return Err(CurrentsError::InvalidArgument("Σ must be an open path".into()));
        };
        if bd.len() != 2 {
            return Err(CurrentsError::InvalidArgument("Σ must be a single simple path".into()));
        }
        let verts = complex.vertices();
        let mut nodes = vec![verts[start].clone()];
        let mut edges = Vec::new();
        let mut current = start;
        let mut remaining: Vec<(usize, i64)> = sigma.iter().collect();
        while !remaining.is_empty() {
            let pos = remaining
                .iter()
                .position(|&(e, c)| {
                    let cell = complex.cell(1, e);
                    let tail = if c > 0 { cell[0] } else { cell[1] };
                    tail == current
                })
                .ok_or_else(|| CurrentsError::InvalidArgument("Σ is not a connected oriented path".into()))?;
            let (e, c) = remaining.swap_remove(pos);
            let cell = complex.cell(1, e);
            current = if c > 0 { cell[1] } else { cell[0] };
            nodes.push(verts[current].clone());
            edges.push((e, c));
        }
        let spacing = complex.volume(1, edges[0].0);
        let dir: Vec<f64> = nodes[1].iter().zip(&nodes[0]).map(|(a, b)| (a - b) / spacing).collect();
        for w in nodes.windows(2) {
            let step: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
            let same = step
                .iter()
                .zip(&dir)
                .all(|(s, d)| (s - d * spacing).abs() < 1e-9 * spacing);
            if !same {
                return Err(CurrentsError::InvalidArgument("Σ must be a straight path".into()));
            }
        }
        let normal = vec![-dir[1], dir[0]];
        Ok(GraphFamily {
            complex: complex.id(),
            sigma: sigma.clone(),
            nodes,
            edges,
            normal,
            spacing,
        })
    }

    pub fn sigma(&self) -> &Chain {
        &self.sigma
    }

    /// Number of nodes including both endpoints.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    /// Node spacing h, which is also the layer height of the amplitude grid.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// |Σ|.
    pub fn length(&self) -> f64 {
        self.spacing * self.edges.len() as f64
    }

    fn layers(&self, u: &[f64]) -> Result<Vec<i64>> {
        if u.len() != self.nodes.len() {
            return Err(CurrentsError::InvalidArgument(format!(
                "expected {} node displacements",
                self.nodes.len()
            )));
        }
        for &node in &[0, u.len() - 1] {
            if u[node] != 0.0 {
                return Err(CurrentsError::BoundaryDisplacement { node, value: u[node] });
            }
        }
        u.iter()
            .enumerate()
            .map(|(i, &x)| {
                let k = (x / self.spacing).round();
                if (x - k * self.spacing).abs() > 1e-9 * self.spacing {
                    Err(CurrentsError::Quantization(format!(
                        "node {i}: {x} is not a multiple of the layer height {}",
                        self.spacing
                    )))
                } else {
                    Ok(k as i64)
                }
            })
            .collect()
    }

    /// The filling between Σ and the staircase graph of u: column i (between nodes i and
    /// i+1) is filled up to height u_i.
    pub fn witness(&self, complex: &SimplicialComplex, u: &[f64]) -> Result<Chain> {
        if complex.id() != self.complex {
            return Err(CurrentsError::ComplexMismatch);
        }
        let layers = self.layers(u)?;
        let h = self.spacing;
        let mut pairs = Vec::new();
        for (i, &(edge, coeff)) in self.edges.iter().enumerate() {
            let k = layers[i];
            if k == 0 {
                continue;
            }
            let mut column_sign = None;
            for layer in 0..k.abs() {
                let offset = (layer as f64 + 0.5) * h * k.signum() as f64;
                let centre: Vec<f64> = self.nodes[i]
                    .iter()
                    .zip(&self.nodes[i + 1])
                    .zip(&self.normal)
                    .map(|((a, b), n)| 0.5 * (a + b) + offset * n)
                    .collect();
                let cell = find_face(complex, &centre)
                    .ok_or_else(|| CurrentsError::Quantization(format!("node {i}: {} layers leave the complex", k)))?;
                let sign = *column_sign.get_or_insert_with(|| {
                    let incidence = complex
                        .faces(2, cell)
                        .iter()
                        .find(|(f, _)| *f == edge)
                        .map(|(_, s)| *s)
                        .unwrap_or(1);
                    -coeff * incidence
                });
                pairs.push((cell, sign));
            }
        }
        complex.chain(2, &pairs)
    }

    /// Σ displaced node-wise by u along the normal, as a lattice staircase.
    pub fn graph_chain(&self, complex: &SimplicialComplex, u: &[f64]) -> Result<Chain> {
        let r = self.witness(complex, u)?;
        let graph = &self.sigma + &complex.boundary(&r)?;
        Ok(graph)
    }

    /// Per-unit weights c_i of the edges of Σ in their orientation along Σ.
    fn segment_weights(&self, integrand: &Integrand) -> Vec<f64> {
        self.edges
            .iter()
            .map(|&(e, c)| integrand.weight(e, c) / self.spacing)
            .collect()
    }

    /// F_smooth(u) − F_smooth(0), evaluated without cancellation.
    pub fn smooth_excess(&self, integrand: &Integrand, u: &[f64]) -> f64 {
        let c = self.segment_weights(integrand);
        (0..self.edges.len())
            .map(|i| c[i] * segment_excess(self.spacing, u[i + 1] - u[i]))
            .sum()
    }

    /// F_smooth(u) on the piecewise-linear graph.
    pub fn smooth_value(&self, integrand: &Integrand, u: &[f64]) -> f64 {
        let c = self.segment_weights(integrand);
        let base: f64 = c.iter().map(|ci| ci * self.spacing).sum();
        base + self.smooth_excess(integrand, u)
    }
}

/// sqrt(h² + d²) − h.
fn segment_excess(h: f64, d: f64) -> f64 {
    d * d / ((h * h + d * d).sqrt() + h)
}

fn find_face(complex: &SimplicialComplex, centre: &[f64]) -> Option<usize> {
    (0..complex.num_cells(2)).find(|&j| SimplicialComplex::point_distance(complex.barycenter(2, j), centre) < 1e-9)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiSpectrum {
    /// Hessian of F_smooth at u = 0 on interior node displacements.
    pub hessian: DMatrix<f64>,
    /// The mass-normalized form M^{-1/2}·Hessian·M^{-1/2} with the lumped node mass h.
    pub q: DMatrix<f64>,
    /// Eigenvalues of `q`, ascending.
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
    pub strictly_stable: bool,
    pub tol: f64,
    pub stability_floor: f64,
}

/// Second variation of F_smooth at Σ, assembled from per-segment second differences with
/// step 1e-4·h and one Richardson extrapolation.
pub fn second_variation_form(
    family: &GraphFamily,
    integrand: &Integrand,
    stability_floor: Option<f64>,
) -> Result<JacobiSpectrum> {
    if integrand.complex_id() != family.complex {
        return Err(CurrentsError::ComplexMismatch);
    }
    let h = family.spacing;
    let nodes = family.num_nodes();
    let interior = nodes - 2;
    if interior == 0 {
        return Err(CurrentsError::InsufficientData("Σ has no interior nodes".into()));
    }
    let gradient = smooth_gradient(family, integrand);
    let gradient_norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    if gradient_norm > 1e-8 {
        return Err(CurrentsError::NotCritical {
            gradient_norm,
            gradient,
        });
    }
    let c = family.segment_weights(integrand);
    let step = 1e-4 * h;
    let second = |ci: f64| {
        let d = |s: f64| 2.0 * ci * segment_excess(h, s) / (s * s);
        (4.0 * d(step / 2.0) - d(step)) / 3.0
    };
    let mut k = DMatrix::zeros(interior, interior);
    for (i, &ci) in c.iter().enumerate() {
        // segment i couples nodes i and i+1; interior node j sits at matrix index j − 1
        let kii = second(ci);
        let a = i.checked_sub(1).filter(|&x| x < interior);
        let b = if i < interior { Some(i) } else { None };
        if let Some(a) = a {
            k[(a, a)] += kii;
        }
        if let Some(b) = b {
            k[(b, b)] += kii;
        }
        if let (Some(a), Some(b)) = (a, b) {
            k[(a, b)] -= kii;
            k[(b, a)] -= kii;
        }
    }
    let q = &k / h;
    let eig = SymmetricEigen::new(q.clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let norm = eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let tol = 1e-8 * norm;
    let floor = stability_floor.unwrap_or(tol);
    let index = eigenvalues.iter().filter(|&&x| x < -tol).count();
    let nullity = eigenvalues.iter().filter(|&&x| x.abs() <= tol).count();
    let strictly_stable = floor > 0.0 && eigenvalues[0] >= floor;
    Ok(JacobiSpectrum {
        hessian: k,
        q,
        eigenvalues,
        index,
        nullity,
        strictly_stable,
        tol,
        stability_floor: floor,
    })
}

/// Central-difference gradient of F_smooth at u = 0 over the interior nodes.
fn smooth_gradient(family: &GraphFamily, integrand: &Integrand) -> Vec<f64> {
    let step = 1e-4 * family.spacing;
    let nodes = family.num_nodes();
    (1..nodes - 1)
        .map(|j| {
            let mut plus = vec![0.0; nodes];
            let mut minus = vec![0.0; nodes];
            plus[j] = step;
            minus[j] = -step;
            (family.smooth_excess(integrand, &plus) - family.smooth_excess(integrand, &minus)) / (2.0 * step)
        })
        .collect()
}

/// Largest relative gap between vᵀHv and the central second difference of F_smooth along v,
/// over random unit directions.
pub fn hessian_consistency(
    family: &GraphFamily,
    integrand: &Integrand,
    spectrum: &JacobiSpectrum,
    directions: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior = family.num_nodes() - 2;
    let step = 1e-4 * family.spacing;
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let mut v: Vec<f64> = (0..interior).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let hv = &spectrum.hessian * nalgebra::DVector::from_vec(v.clone());
        let quad: f64 = hv.iter().zip(&v).map(|(a, b)| a * b).sum();
        let along = |s: f64| {
            let mut u = vec![0.0; interior + 2];
            for (j, x) in v.iter().enumerate() {
                u[j + 1] = s * x;
            }
            family.smooth_excess(integrand, &u)
        };
        let fd = (along(step) + along(-step)) / (step * step);
        worst = worst.max((fd - quad).abs() / quad.abs().max(f64::MIN_POSITIVE));
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub eta: f64,
    /// min F(S) over the bin, or `None` if the bin is empty.
    pub g: Option<f64>,
    /// 𝔽(S − Σ) of the witness.
    pub flat: Option<f64>,
    /// Members of the class found in the bin.
    pub count: usize,
    /// The bin minimum is exact (the search covered every chain with F ≤ g, or the whole class).
    pub certified: bool,
    #[serde(skip)]
    pub witness: Option<Chain>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub f_sigma: f64,
    pub bin_tol: f64,
    pub rows: Vec<ProfileRow>,
    /// Value cap of the final enumeration.
    pub cap: f64,
}

/// Rounds of cap doubling in `stability_profile`.
const PROFILE_ROUNDS: usize = 6;

/// g(η) = min { F(S) : S ~ Σ, |𝔽(S−Σ) − η| ≤ bin_tol } for each η of the grid.
pub fn stability_profile(
    complex: &SimplicialComplex,
    sigma: &Chain,
    integrand: &Integrand,
    eta_grid: &[f64],
    search: &SearchBounds,
    bin_tol: f64,
) -> Result<Profile> {
    if eta_grid.is_empty() || eta_grid.iter().any(|e| !(*e >= 0.0)) {
        return Err(CurrentsError::InvalidArgument(
            "η grid must be nonempty and non-negative".into(),
        ));
    }
    let f_sigma = integrand.evaluate(sigma)?;
    let mut cap = 2.0 * f_sigma;
    let mut last: Option<Profile> = None;
    for round in 0..PROFILE_ROUNDS {
        let family = match ClassFamily::enumerate(complex, sigma, integrand, search, cap) {
            Ok(f) => f,
            Err(e @ CurrentsError::Capacity { .. }) if round > 0 && search.candidates.is_none() => {
                let _ = e;
                break;
            }
            Err(e) => return Err(e),
        };
        let rows = profile_rows(&family, eta_grid, bin_tol);
        let done = rows.iter().all(|r| r.certified);
        last = Some(Profile {
            f_sigma,
            bin_tol,
            rows,
            cap,
        });
        if done || search.candidates.is_some() {
            break;
        }
        cap *= 2.0;
    }
    Ok(last.expect("first round succeeded"))
}

fn profile_rows(family: &ClassFamily, eta_grid: &[f64], bin_tol: f64) -> Vec<ProfileRow> {
    eta_grid
        .iter()
        .map(|&eta| {
            let mut row = ProfileRow {
                eta,
                g: None,
                flat: None,
                count: 0,
                certified: !family.pruned(),
                witness: None,
            };
            for cand in family.candidates() {
                if (cand.flat_distance - eta).abs() > bin_tol {
                    continue;
                }
                row.count += 1;
                if row.g.map_or(true, |g| cand.f_value < g) {
                    row.g = Some(cand.f_value);
                    row.flat = Some(cand.flat_distance);
                    row.witness = Some(cand.chain.clone());
                }
            }
            if let Some(g) = row.g {
                row.certified |= g <= family.cap();
            }
            row
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub c_fit: f64,
    pub pass: bool,
    /// Bins with 0 < η ≤ ε that entered the fit.
    pub bins: usize,
}

/// C_fit = min over nonempty bins with 0 < η ≤ ε of (g(η) − F(Σ))/η².
pub fn quadratic_growth_fit(profile: &Profile, f_sigma: f64, eps: f64) -> Result<GrowthFit> {
    let used: Vec<f64> = profile
        .rows
        .iter()
        .filter(|r| r.eta > 0.0 && r.eta <= eps)
        .filter_map(|r| r.g.map(|g| (g - f_sigma) / (r.eta * r.eta)))
        .collect();
    if used.is_empty() {
        return Err(CurrentsError::InsufficientData(format!(
            "no nonempty profile bin with 0 < η ≤ {eps}"
        )));
    }
    let c_fit = used.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GrowthFit {
        c_fit,
        pass: c_fit > 0.0,
        bins: used.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrictMinimality {
    /// F(S) > F(Σ) for every other S of the class with 𝔽(S − Σ) ≤ ε.
    pub holds: bool,
    /// Members of the class with F(S) ≤ F(Σ), Σ excluded.
    pub competitors: usize,
    pub worst: Option<Chain>,
}

/// Checks strict F-minimality of Σ in its bounded class within flat distance ε
/// (ε = ∞ checks unique minimality).
pub fn strict_minimality(
    complex: &SimplicialComplex,
    sigma: &Chain,
    integrand: &Integrand,
    eps: f64,
    search: &SearchBounds,
) -> Result<StrictMinimality> {
    let f_sigma = integrand.evaluate(sigma)?;
    let family = ClassFamily::enumerate(complex, sigma, integrand, search, f_sigma)?;
    let competitors: Vec<&Chain> = family
        .candidates()
        .iter()
        .filter(|c| &c.chain != sigma && c.flat_distance <= eps + 1e-9)
        .map(|c| &c.chain)
        .collect();
    Ok(StrictMinimality {
        holds: competitors.is_empty(),
        competitors: competitors.len(),
        worst: competitors.first().map(|c| (*c).clone()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// Σ_nodes h·u² + Σ_segments h·(Δu/h)².
    pub w12_sq: f64,
    /// Σ_nodes h·|u|.
    pub l1: f64,
    /// 𝔽(graph(u) − Σ).
    pub flat: f64,
    /// ‖u‖²_{W^{1,2}} ≥ ‖u‖²_{L¹}/|Σ|.
    pub holder: bool,
    /// 𝔽 ≤ ‖u‖_{L¹}.
    pub flat_bound: bool,
    /// ‖u‖²_{W^{1,2}} / 𝔽², when 𝔽 > 0.
    pub c1: Option<f64>,
}

pub fn norm_chain_check(complex: &SimplicialComplex, family: &GraphFamily, u: &[f64]) -> Result<NormReport> {
    let graph = family.graph_chain(complex, u)?;
    let h = family.spacing;
    let interior = &u[1..u.len() - 1];
    let l2: f64 = interior.iter().map(|x| h * x * x).sum();
    let grad: f64 = u.windows(2).map(|w| h * ((w[1] - w[0]) / h).powi(2)).sum();
    let w12_sq = l2 + grad;
    let l1: f64 = interior.iter().map(|x| h * x.abs()).sum();
    let flat = flat_norm(complex, &(&graph - family.sigma()))?.value;
    Ok(NormReport {
        w12_sq,
        l1,
        flat,
        holder: w12_sq * (1.0 + 1e-12) >= l1 * l1 / family.length(),
        flat_bound: flat <= l1 * (1.0 + 1e-12),
        c1: (flat > 0.0).then(|| w12_sq / (flat * flat)),
    })
}
