//! Oriented cell complexes (simplicial or cubical) embedded in ℝ^m.
//!
//! A complex stores, per degree k, an ordered list of cells given by vertex tuples. The tuple
//! order fixes the reference orientation: for simplices any vertex order is admitted and faces
//! are related to their stored orientation by a permutation sign; for cubes the corners are
//! listed in binary order over the spanning axes (corner `b` is the base plus the axes whose bit
//! is set in `b`).

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{CurrentsError, Result};

static NEXT_COMPLEX_ID: AtomicU64 = AtomicU64::new(1);

/// Identity of a constructed complex. Chains and integrands carry it so that mixing objects
/// from different complexes is caught.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComplexId(u64);

impl ComplexId {
    fn fresh() -> Self {
        ComplexId(NEXT_COMPLEX_ID.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellShape {
    Simplex,
    Cube,
}

/// Signed incidence `(index, sign)` with sign in {-1, +1}.
pub type Incidence = (usize, i64);

#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    id: ComplexId,
    ambient_dim: usize,
    shape: CellShape,
    vertices: Vec<Vec<f64>>,
    cells: Vec<Vec<Vec<usize>>>,
    faces: Vec<Vec<Vec<Incidence>>>,
    cofaces: Vec<Vec<Vec<Incidence>>>,
    volumes: Vec<Vec<f64>>,
    barycenters: Vec<Vec<Vec<f64>>>,
    lookup: Vec<HashMap<Vec<usize>, usize>>,
}

/// Serialized form of a complex. `cells[k]` lists the k-cells; `cells[0]` must be the vertex
/// singletons `[[0], [1], ...]` in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexDoc {
    pub ambient_dim: usize,
    pub shape: CellShape,
    pub vertices: Vec<Vec<f64>>,
    pub cells: Vec<Vec<Vec<usize>>>,
}

/// Rectangular lattice description used by [`SimplicialComplex::grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub extent: Vec<usize>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default)]
    pub triangulate: bool,
    /// Lattice coordinates of unit cells left out of the complex.
    #[serde(default)]
    pub holes: Vec<Vec<usize>>,
}

fn default_spacing() -> f64 {
    1.0
}

impl GridSpec {
    pub fn new(extent: &[usize]) -> Self {
        GridSpec {
            extent: extent.to_vec(),
            spacing: 1.0,
            triangulate: false,
            holes: Vec::new(),
        }
    }

    pub fn spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn triangulate(mut self, triangulate: bool) -> Self {
        self.triangulate = triangulate;
        self
    }

    pub fn hole(mut self, cell: &[usize]) -> Self {
        self.holes.push(cell.to_vec());
        self
    }
}

/// Unit-lattice grid over `extent`, cubical unless `triangulate` is set.
pub fn build_grid_complex(extent: &[usize], triangulate: bool) -> Result<SimplicialComplex> {
    SimplicialComplex::grid(&GridSpec::new(extent).triangulate(triangulate))
}

/// Sign of the permutation taking `from` to `to` (both orderings of the same set).
pub(crate) fn permutation_sign(from: &[usize], to: &[usize]) -> i64 {
    let mut perm: Vec<usize> = from
        .iter()
        .map(|v| to.iter().position(|w| w == v).expect("same vertex set"))
        .collect();
    let mut sign = 1;
    for i in 0..perm.len() {
        while perm[i] != i {
            let j = perm[i];
            perm.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

fn sorted_key(tuple: &[usize]) -> Vec<usize> {
    let mut key = tuple.to_vec();
    key.sort_unstable();
    key
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl SimplicialComplex {
    /// Builds a complex from explicit cells. `cells[k]` lists k-cells, `cells[0]` the vertices.
    pub fn new(
        ambient_dim: usize,
        shape: CellShape,
        vertices: Vec<Vec<f64>>,
        cells: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(CurrentsError::InvalidDomain("ambient dimension is zero".into()));
        }
        if vertices.is_empty() {
            return Err(CurrentsError::InvalidDomain("complex has no vertices".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != ambient_dim || v.iter().any(|x| !x.is_finite()) {
                return Err(CurrentsError::InvalidDomain(format!(
                    "vertex {i} does not have {ambient_dim} finite coordinates"
                )));
            }
        }
        if cells.is_empty()
            || cells[0].len() != vertices.len()
            || cells[0].iter().enumerate().any(|(i, c)| c.as_slice() != [i])
        {
            return Err(CurrentsError::InvalidDomain(
                "cells[0] must list the vertex singletons in order".into(),
            ));
        }
        let top = cells.len() - 1;
        if top > ambient_dim {
            return Err(CurrentsError::InvalidDomain(format!(
                "cells of degree {top} exceed ambient dimension {ambient_dim}"
            )));
        }

        let mut lookup = Vec::with_capacity(cells.len());
        for (k, list) in cells.iter().enumerate() {
            let expected = match shape {
                CellShape::Simplex => k + 1,
                CellShape::Cube => 1 << k,
            };
            let mut map = HashMap::with_capacity(list.len());
            for (i, cell) in list.iter().enumerate() {
                if cell.len() != expected {
                    return Err(CurrentsError::InvalidDomain(format!(
                        "{k}-cell {i} has {} vertices, expected {expected}",
                        cell.len()
                    )));
                }
                if cell.iter().any(|&v| v >= vertices.len()) {
                    return Err(CurrentsError::InvalidDomain(format!(
                        "{k}-cell {i} references a missing vertex"
                    )));
                }
                let key = sorted_key(cell);
                if key.windows(2).any(|w| w[0] == w[1]) {
                    return Err(CurrentsError::InvalidDomain(format!("{k}-cell {i} repeats a vertex")));
                }
                if map.insert(key, i).is_some() {
                    return Err(CurrentsError::InvalidDomain(format!("{k}-cell {i} is listed twice")));
                }
            }
            lookup.push(map);
        }

        let mut faces: Vec<Vec<Vec<Incidence>>> = vec![vec![Vec::new(); vertices.len()]];
        for k in 1..cells.len() {
            let mut per_cell = Vec::with_capacity(cells[k].len());
            for (i, cell) in cells[k].iter().enumerate() {
                let incidences = match shape {
                    CellShape::Simplex => simplex_faces(cell, &cells[k - 1], &lookup[k - 1]),
                    CellShape::Cube => cube_faces(cell, k, &cells[k - 1], &lookup[k - 1]),
                }
                .map_err(|msg| CurrentsError::InvalidDomain(format!("{k}-cell {i}: {msg}")))?;
                per_cell.push(incidences);
            }
            faces.push(per_cell);
        }

        let mut cofaces: Vec<Vec<Vec<Incidence>>> = cells.iter().map(|list| vec![Vec::new(); list.len()]).collect();
        for k in 1..cells.len() {
            for (i, incidences) in faces[k].iter().enumerate() {
                for &(f, s) in incidences {
                    cofaces[k - 1][f].push((i, s));
                }
            }
        }

        let mut volumes = Vec::with_capacity(cells.len());
        let mut barycenters = Vec::with_capacity(cells.len());
        for (k, list) in cells.iter().enumerate() {
            let mut vols = Vec::with_capacity(list.len());
            let mut centers = Vec::with_capacity(list.len());
            for (i, cell) in list.iter().enumerate() {
                let pts: Vec<&[f64]> = cell.iter().map(|&v| vertices[v].as_slice()).collect();
                let vol = match shape {
                    CellShape::Simplex => simplex_volume(&pts),
                    CellShape::Cube => cube_volume(&pts, k),
                };
                if !(vol > 0.0) || !vol.is_finite() {
                    return Err(CurrentsError::InvalidDomain(format!(
                        "{k}-cell {i} has non-positive volume {vol}"
                    )));
                }
                vols.push(vol);
                let mut c = vec![0.0; ambient_dim];
                for p in &pts {
                    for (a, x) in c.iter_mut().zip(p.iter()) {
                        *a += x;
                    }
                }
                c.iter_mut().for_each(|a| *a /= pts.len() as f64);
                centers.push(c);
            }
            volumes.push(vols);
            barycenters.push(centers);
        }

        let complex = SimplicialComplex {
            id: ComplexId::fresh(),
            ambient_dim,
            shape,
            vertices,
            cells,
            faces,
            cofaces,
            volumes,
            barycenters,
            lookup,
        };
        complex.check_boundary_squared()?;
        Ok(complex)
    }

    /// Closure of a list of top simplices (any orientation). Faces are stored with ascending
    /// vertex order; the top simplices keep the given order.
    pub fn from_simplices(vertices: Vec<Vec<f64>>, top: &[Vec<usize>]) -> Result<Self> {
        let ambient_dim = vertices.first().map(|v| v.len()).unwrap_or(0);
        let degree = top.iter().map(|s| s.len().saturating_sub(1)).max().unwrap_or(0);
        let mut sets: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); degree + 1];
        for s in top {
            if s.is_empty() {
                return Err(CurrentsError::InvalidDomain("empty simplex".into()));
            }
            let key = sorted_key(s);
            let k = key.len();
            for mask in 1u32..(1u32 << k) {
                let sub: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| key[i]).collect();
                let d = sub.len() - 1;
                sets[d].insert(sub);
            }
        }
        let mut cells: Vec<Vec<Vec<usize>>> = vec![(0..vertices.len()).map(|v| vec![v]).collect()];
        for set in sets.iter().skip(1) {
            cells.push(set.iter().cloned().collect());
        }
        // keep the caller's orientation on listed simplices
        for s in top {
            let key = sorted_key(s);
            let d = key.len() - 1;
            if d == 0 {
                continue;
            }
            if let Some(pos) = cells[d].iter().position(|c| *c == key) {
                cells[d][pos] = s.clone();
            }
        }
        SimplicialComplex::new(ambient_dim, CellShape::Simplex, vertices, cells)
    }

    /// Lattice grid `[0, extent_0] × ... ` scaled by `spacing`; unit cells are kept as cubes or
    /// split into m! simplices (Kuhn triangulation) when `triangulate` is set.
    pub fn grid(spec: &GridSpec) -> Result<Self> {
        let m = spec.extent.len();
        if !(2..=3).contains(&m) {
            return Err(CurrentsError::InvalidDomain(format!(
                "grid complexes support 2 or 3 axes, got {m}"
            )));
        }
        if spec.extent.iter().any(|&e| e == 0) {
            return Err(CurrentsError::InvalidDomain(format!(
                "extent {:?} has a zero-length axis",
                spec.extent
            )));
        }
        if !(spec.spacing > 0.0) || !spec.spacing.is_finite() {
            return Err(CurrentsError::InvalidDomain(format!(
                "spacing {} must be positive",
                spec.spacing
            )));
        }
        for hole in &spec.holes {
            if hole.len() != m || hole.iter().zip(&spec.extent).any(|(h, e)| h >= e) {
                return Err(CurrentsError::InvalidDomain(format!(
                    "hole {hole:?} is not a cell of extent {:?}",
                    spec.extent
                )));
            }
        }

        let strides: Vec<usize> = (0..m)
            .map(|a| spec.extent[..a].iter().map(|e| e + 1).product())
            .collect();
        let lattice_index = |p: &[usize]| -> usize { p.iter().zip(&strides).map(|(x, s)| x * s).sum() };

        let holes: BTreeSet<Vec<usize>> = spec.holes.iter().cloned().collect();
        let mut bases = Vec::new();
        let mut p = vec![0usize; m];
        loop {
            if !holes.contains(&p) {
                bases.push(p.clone());
            }
            let mut a = 0;
            loop {
                if a == m {
                    break;
                }
                p[a] += 1;
                if p[a] < spec.extent[a] {
                    break;
                }
                p[a] = 0;
                a += 1;
            }
            if a == m {
                break;
            }
        }
        if bases.is_empty() {
            return Err(CurrentsError::InvalidDomain("every grid cell is a hole".into()));
        }

        let coords = |lattice: &[usize]| -> Vec<f64> { lattice.iter().map(|&x| x as f64 * spec.spacing).collect() };

        if spec.triangulate {
            let mut sets: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); m + 1];
            let mut points: HashMap<usize, Vec<usize>> = HashMap::new();
            for base in &bases {
                for perm in permutations(m) {
                    let mut q = base.clone();
                    let mut simplex = vec![lattice_index(&q)];
                    points.insert(lattice_index(&q), q.clone());
                    for &axis in &perm {
                        q[axis] += 1;
                        simplex.push(lattice_index(&q));
                        points.insert(lattice_index(&q), q.clone());
                    }
                    for mask in 1u32..(1u32 << (m + 1)) {
                        let sub: Vec<usize> = (0..=m).filter(|i| mask & (1 << i) != 0).map(|i| simplex[i]).collect();
                        sets[sub.len() - 1].insert(sub);
                    }
                }
            }
            let lattice_vertices: Vec<usize> = sets[0].iter().map(|s| s[0]).collect();
            let renumber: HashMap<usize, usize> = lattice_vertices.iter().enumerate().map(|(i, &l)| (l, i)).collect();
            let vertices: Vec<Vec<f64>> = lattice_vertices.iter().map(|l| coords(&points[l])).collect();
            let cells: Vec<Vec<Vec<usize>>> = sets
                .iter()
                .map(|set| set.iter().map(|s| s.iter().map(|l| renumber[l]).collect()).collect())
                .collect();
            return SimplicialComplex::new(m, CellShape::Simplex, vertices, cells);
        }

        // cubes keyed by (lattice index of base, axis mask)
        let full_mask = (1usize << m) - 1;
        let mut sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); m + 1];
        let mut points: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut stack: Vec<(Vec<usize>, usize)> = bases.iter().map(|b| (b.clone(), full_mask)).collect();
        while let Some((base, mask)) = stack.pop() {
            let k = mask.count_ones() as usize;
            let li = lattice_index(&base);
            if !sets[k].insert((li, mask)) {
                continue;
            }
            points.insert(li, base.clone());
            for a in 0..m {
                if mask & (1 << a) != 0 {
                    let sub = mask & !(1 << a);
                    stack.push((base.clone(), sub));
                    let mut upper = base.clone();
                    upper[a] += 1;
                    stack.push((upper, sub));
                }
            }
        }
        let lattice_vertices: Vec<usize> = sets[0].iter().map(|&(l, _)| l).collect();
        let renumber: HashMap<usize, usize> = lattice_vertices.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let vertices: Vec<Vec<f64>> = lattice_vertices.iter().map(|l| coords(&points[l])).collect();
        let cells: Vec<Vec<Vec<usize>>> = sets
            .iter()
            .map(|set| {
                set.iter()
                    .map(|&(li, mask)| {
                        let base = &points[&li];
                        let axes: Vec<usize> = (0..m).filter(|a| mask & (1 << a) != 0).collect();
                        (0..(1usize << axes.len()))
                            .map(|b| {
                                let mut q = base.clone();
                                for (i, &axis) in axes.iter().enumerate() {
                                    if b & (1 << i) != 0 {
                                        q[axis] += 1;
                                    }
                                }
                                renumber[&lattice_index(&q)]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        SimplicialComplex::new(m, CellShape::Cube, vertices, cells)
    }

    /// Fan in the plane: apex at the origin (vertex 0) joined to a straight path of `k` unit
    /// edges on the line y = `height`, centred above the apex.
    pub fn fan(k: usize, height: f64) -> Result<Self> {
        if k == 0 || !(height > 0.0) {
            return Err(CurrentsError::InvalidDomain("fan needs k >= 1 and height > 0".into()));
        }
        let mut vertices = vec![vec![0.0, 0.0]];
        for i in 0..=k {
            vertices.push(vec![i as f64 - k as f64 / 2.0, height]);
        }
        let top: Vec<Vec<usize>> = (1..=k).map(|i| vec![0, i, i + 1]).collect();
        SimplicialComplex::from_simplices(vertices, &top)
    }

    /// Regular `k`-gon of circumradius `radius` triangulated from its centre (vertex 0).
    pub fn wheel(k: usize, radius: f64) -> Result<Self> {
        if k < 3 || !(radius > 0.0) {
            return Err(CurrentsError::InvalidDomain("wheel needs k >= 3 and radius > 0".into()));
        }
        let mut vertices = vec![vec![0.0, 0.0]];
        for i in 0..k {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            vertices.push(vec![radius * theta.cos(), radius * theta.sin()]);
        }
        let top: Vec<Vec<usize>> = (0..k).map(|i| vec![0, 1 + i, 1 + (i + 1) % k]).collect();
        SimplicialComplex::from_simplices(vertices, &top)
    }

    pub fn from_doc(doc: ComplexDoc) -> Result<Self> {
        SimplicialComplex::new(doc.ambient_dim, doc.shape, doc.vertices, doc.cells)
    }

    pub fn to_doc(&self) -> ComplexDoc {
        ComplexDoc {
            ambient_dim: self.ambient_dim,
            shape: self.shape,
            vertices: self.vertices.clone(),
            cells: self.cells.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("complex serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ComplexDoc = serde_json::from_str(text).map_err(|e| CurrentsError::Config(e.to_string()))?;
        SimplicialComplex::from_doc(doc)
    }

    fn check_boundary_squared(&self) -> Result<()> {
        for k in 2..self.cells.len() {
            for i in 0..self.cells[k].len() {
                let mut acc: HashMap<usize, i64> = HashMap::new();
                for &(f, s) in &self.faces[k][i] {
                    for &(g, t) in &self.faces[k - 1][f] {
                        *acc.entry(g).or_insert(0) += s * t;
                    }
                }
                if acc.values().any(|&v| v != 0) {
                    return Err(CurrentsError::InvalidDomain(format!(
                        "boundary of boundary is nonzero on {k}-cell {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn id(&self) -> ComplexId {
        self.id
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn shape(&self) -> CellShape {
        self.shape
    }

    /// Highest cell degree present.
    pub fn max_degree(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn num_cells(&self, degree: usize) -> usize {
        self.cells.get(degree).map_or(0, |c| c.len())
    }

    pub fn cells(&self, degree: usize) -> &[Vec<usize>] {
        self.cells.get(degree).map_or(&[], |c| c.as_slice())
    }

    pub fn cell(&self, degree: usize, index: usize) -> &[usize] {
        &self.cells[degree][index]
    }

    /// Oriented faces of a cell: one column of the boundary matrix.
    pub fn faces(&self, degree: usize, index: usize) -> &[Incidence] {
        &self.faces[degree][index]
    }

    /// Cells of degree `degree + 1` having this cell as a face, with incidence signs.
    pub fn cofaces(&self, degree: usize, index: usize) -> &[Incidence] {
        &self.cofaces[degree][index]
    }

    pub fn volume(&self, degree: usize, index: usize) -> f64 {
        self.volumes[degree][index]
    }

    pub fn volumes(&self, degree: usize) -> &[f64] {
        self.volumes.get(degree).map_or(&[], |v| v.as_slice())
    }

    pub fn barycenter(&self, degree: usize, index: usize) -> &[f64] {
        &self.barycenters[degree][index]
    }

    /// Looks a cell up by its vertex set (any order).
    pub fn find_cell(&self, degree: usize, vertices: &[usize]) -> Option<usize> {
        self.lookup.get(degree)?.get(&sorted_key(vertices)).copied()
    }

    /// Index of the vertex at the given coordinates (within 1e-9).
    pub fn find_vertex(&self, point: &[f64]) -> Option<usize> {
        self.vertices.iter().position(|v| distance(v, point) < 1e-9)
    }

    /// Dense boundary matrix rows = (degree-1)-cells, columns = degree-cells.
    pub fn boundary_matrix(&self, degree: usize) -> Vec<Vec<i64>> {
        let rows = self.num_cells(degree.saturating_sub(1));
        let cols = self.num_cells(degree);
        let mut m = vec![vec![0i64; cols]; rows];
        if degree == 0 {
            return m;
        }
        for j in 0..cols {
            for &(i, s) in self.faces(degree, j) {
                m[i][j] = s;
            }
        }
        m
    }

    fn ensure_same(&self, chain: &Chain) -> Result<()> {
        if chain.complex_id() != self.id {
            return Err(CurrentsError::ComplexMismatch);
        }
        if chain.degree() > self.max_degree() {
            return Err(CurrentsError::InvalidDegree {
                degree: chain.degree(),
                reason: format!("complex has cells up to degree {}", self.max_degree()),
            });
        }
        Ok(())
    }

    /// Builds a chain on this complex from `(cell index, coefficient)` pairs. Repeated
    /// indices are summed and zero entries dropped.
    pub fn chain(&self, degree: usize, pairs: &[(usize, i64)]) -> Result<Chain> {
        if degree > self.max_degree() {
            return Err(CurrentsError::InvalidDegree {
                degree,
                reason: format!("complex has cells up to degree {}", self.max_degree()),
            });
        }
        if let Some(&(i, _)) = pairs.iter().find(|(i, _)| *i >= self.num_cells(degree)) {
            return Err(CurrentsError::InvalidArgument(format!(
                "no {degree}-cell with index {i}"
            )));
        }
        Ok(Chain::from_pairs(self.id, degree, pairs.iter().copied()))
    }

    pub fn zero_chain(&self, degree: usize) -> Chain {
        Chain::zero(self.id, degree)
    }

    /// Dense coefficient vector over the chain's degree.
    pub fn dense(&self, chain: &Chain) -> Vec<i64> {
        let mut v = vec![0; self.num_cells(chain.degree())];
        for (i, c) in chain.iter() {
            v[i] = c;
        }
        v
    }

    pub fn from_dense(&self, degree: usize, values: &[i64]) -> Chain {
        Chain::from_pairs(
            self.id,
            degree,
            values.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (i, c)),
        )
    }

    pub fn boundary(&self, chain: &Chain) -> Result<Chain> {
        self.ensure_same(chain)?;
        let k = chain.degree();
        if k == 0 {
            return Err(CurrentsError::InvalidDegree {
                degree: 0,
                reason: "0-chains have no boundary".into(),
            });
        }
        let mut out = Vec::new();
        for (i, c) in chain.iter() {
            for &(f, s) in self.faces(k, i) {
                out.push((f, s * c));
            }
        }
        Ok(Chain::from_pairs(self.id, k - 1, out))
    }

    /// Σ |coefficient| · volume.
    pub fn mass(&self, chain: &Chain) -> f64 {
        debug_assert_eq!(chain.complex_id(), self.id);
        chain
            .iter()
            .map(|(i, c)| c.unsigned_abs() as f64 * self.volumes[chain.degree()][i])
            .sum()
    }

    /// Vertices touched by the support of a chain.
    pub fn support_vertices(&self, chain: &Chain) -> Vec<usize> {
        let set: BTreeSet<usize> = chain
            .iter()
            .flat_map(|(i, _)| self.cells[chain.degree()][i].iter().copied())
            .collect();
        set.into_iter().collect()
    }

    /// Largest distance from a barycenter of spt(T) to the nearest barycenter of spt(Σ).
    pub fn support_distance(&self, t: &Chain, sigma: &Chain) -> Result<f64> {
        self.ensure_same(t)?;
        self.ensure_same(sigma)?;
        if sigma.is_zero() {
            return Err(CurrentsError::InvalidArgument(
                "support distance to the zero chain is undefined".into(),
            ));
        }
        let targets: Vec<&[f64]> = sigma.iter().map(|(i, _)| self.barycenter(sigma.degree(), i)).collect();
        let mut worst: f64 = 0.0;
        for (i, _) in t.iter() {
            if t.degree() == sigma.degree() && sigma.get(i) != 0 {
                continue;
            }
            let b = self.barycenter(t.degree(), i);
            let nearest = targets.iter().map(|q| distance(b, q)).fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
        Ok(worst)
    }

    /// Distance between two points of the ambient space.
    pub fn point_distance(a: &[f64], b: &[f64]) -> f64 {
        distance(a, b)
    }
}

fn simplex_faces(
    cell: &[usize],
    lower: &[Vec<usize>],
    lookup: &HashMap<Vec<usize>, usize>,
) -> std::result::Result<Vec<Incidence>, String> {
    let mut out = Vec::with_capacity(cell.len());
    for i in 0..cell.len() {
        let face: Vec<usize> = cell
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &v)| v)
            .collect();
        let idx = *lookup
            .get(&sorted_key(&face))
            .ok_or_else(|| format!("face {face:?} is missing"))?;
        let base = if i % 2 == 0 { 1 } else { -1 };
        out.push((idx, base * permutation_sign(&face, &lower[idx])));
    }
    Ok(out)
}

fn cube_faces(
    cell: &[usize],
    k: usize,
    lower: &[Vec<usize>],
    lookup: &HashMap<Vec<usize>, usize>,
) -> std::result::Result<Vec<Incidence>, String> {
    let mut out = Vec::with_capacity(2 * k);
    for i in 0..k {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        for (upper, s) in [(false, -sign), (true, sign)] {
            let face: Vec<usize> = (0..cell.len())
                .filter(|b| ((b >> i) & 1 == 1) == upper)
                .map(|b| cell[b])
                .collect();
            let idx = *lookup
                .get(&sorted_key(&face))
                .ok_or_else(|| format!("face {face:?} is missing"))?;
            if lower[idx] != face {
                return Err(format!("face {face:?} is stored with corner order {:?}", lower[idx]));
            }
            out.push((idx, s));
        }
    }
    Ok(out)
}

fn simplex_volume(pts: &[&[f64]]) -> f64 {
    let k = pts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect())
        .collect();
    let gram = DMatrix::from_fn(k, k, |i, j| {
        edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum::<f64>()
    });
    let det = gram.determinant().max(0.0);
    let factorial: f64 = (1..=k).map(|x| x as f64).product();
    det.sqrt() / factorial
}

fn cube_volume(pts: &[&[f64]], k: usize) -> f64 {
    (0..k).map(|i| distance(pts[1 << i], pts[0])).product()
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, m: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for a in 0..m {
            if !prefix.contains(&a) {
                prefix.push(a);
                rec(prefix, m, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), m, &mut out);
    out
}

/// Per-degree membership table, e.g. a tubular neighbourhood or a ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet {
    members: Vec<Vec<bool>>,
}

impl CellSet {
    pub fn empty(complex: &SimplicialComplex) -> Self {
        CellSet {
            members: (0..=complex.max_degree())
                .map(|k| vec![false; complex.num_cells(k)])
                .collect(),
        }
    }

    pub fn all(complex: &SimplicialComplex) -> Self {
        CellSet {
            members: (0..=complex.max_degree())
                .map(|k| vec![true; complex.num_cells(k)])
                .collect(),
        }
    }

    /// Cells all of whose vertices satisfy `keep`.
    pub fn from_vertex_predicate(complex: &SimplicialComplex, keep: impl Fn(usize) -> bool) -> Self {
        let inside: Vec<bool> = (0..complex.vertices().len()).map(keep).collect();
        CellSet {
            members: (0..=complex.max_degree())
                .map(|k| complex.cells(k).iter().map(|c| c.iter().all(|&v| inside[v])).collect())
                .collect(),
        }
    }

    pub fn contains(&self, degree: usize, index: usize) -> bool {
        self.members
            .get(degree)
            .and_then(|m| m.get(index))
            .copied()
            .unwrap_or(false)
    }

    pub fn insert(&mut self, degree: usize, index: usize) {
        self.members[degree][index] = true;
    }

    pub fn complement(&self) -> Self {
        CellSet {
            members: self.members.iter().map(|m| m.iter().map(|b| !b).collect()).collect(),
        }
    }

    pub fn count(&self, degree: usize) -> usize {
        self.members.get(degree).map_or(0, |m| m.iter().filter(|b| **b).count())
    }

    pub fn indices(&self, degree: usize) -> Vec<usize> {
        self.members
            .get(degree)
            .map(|m| m.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect())
            .unwrap_or_default()
    }
}
