//! Scenario documents: a TOML description of a complex, Σ, an integrand and the pipeline
//! stages to run.
//!
//! ```toml
//! name = "unit-cell"
//! seed = 1
//!
//! [complex]
//! extent = [1, 1]          # cells per axis
//! spacing = 1.0            # optional
//! triangulate = false      # optional
//! holes = []               # optional, lattice indices of removed top cells
//!
//! [sigma]
//! kind = "row"             # row | path | explicit
//! row = 0                  # lattice row; optional `from`/`to` column limits
//!
//! [integrand]
//! kind = "area"            # area | anisotropic-xy | drift | two-zone | table
//!
//! [selection]
//! penalty = "absolute"     # absolute | quadratic
//! eta = [0.0, 1.0]
//! lambda = [1.0]
//! coeff_bound = 1
//! flat_scale = 1.0         # optional, multiplies every η
//!
//! [almost_min]             # checks the selection minimizers
//! coeff_bound = 1
//!
//! [lambda_search]          # optional [lambda_search.sigma] overrides Σ
//! lambda = [0.5, 1.0, 2.5]
//! coeff_bound = 1
//!
//! [stability]
//! eta = [0.0, 1.0]
//! epsilon = 1.0
//! bin_tol = 1e-6
//! coeff_bound = 1
//!
//! [spectrum]
//! directions = 10          # optional; `floor` sets the stability floor
//!
//! [expect]                 # optional exact targets
//! lambda0 = 2.0
//! g = [[1.0, 3.0]]
//! c_fit = 2.0
//! ```
//!
//! Lattice coordinates (`row`, `path.points`) count grid steps, not world units.

use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::chain::Chain;
use crate::complex::{GridSpec, SimplicialComplex};
use crate::error::{CurrentsError, Result};
use crate::integrand::{make_area_integrand, Integrand};
use crate::selection::Penalty;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub sigma: SigmaSpec,
    pub integrand: IntegrandSpec,
    pub selection: Option<SelectionStage>,
    pub almost_min: Option<AlmostMinStage>,
    pub lambda_search: Option<LambdaStage>,
    pub stability: Option<StabilityStage>,
    pub spectrum: Option<SpectrumStage>,
    pub expect: Expectations,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigmaSpec {
    /// Horizontal edges on lattice row `row`, oriented along +x.
    Row {
        row: usize,
        from: Option<usize>,
        to: Option<usize>,
    },
    /// Polygonal path through lattice points; consecutive points share a grid line or an edge.
    Path { points: Vec<Vec<usize>> },
    Explicit {
        degree: usize,
        coefficients: Vec<(usize, i64)>,
    },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IntegrandSpec {
    Area,
    AnisotropicXy {
        a: f64,
        b: f64,
    },
    Drift {
        plus: f64,
        minus: f64,
    },
    TwoZone {
        split: f64,
        a: f64,
        b: f64,
    },
    Table {
        plus: Vec<f64>,
        minus: Vec<f64>,
        lambda: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionStage {
    pub penalty: Penalty,
    /// η values after `flat_scale` was applied.
    pub eta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub coeff_bound: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlmostMinStage {
    pub coeff_bound: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaStage {
    pub sigma: Option<SigmaSpec>,
    pub lambda: Vec<f64>,
    pub coeff_bound: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityStage {
    pub eta: Vec<f64>,
    pub epsilon: f64,
    pub bin_tol: f64,
    pub coeff_bound: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumStage {
    pub floor: Option<f64>,
    pub directions: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub lambda0: Option<f64>,
    /// (η, g(η)) pairs.
    #[serde(default)]
    pub g: Vec<(f64, f64)>,
    pub c_fit: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    /// Relative tolerance for `min_eigenvalue`.
    #[serde(default = "default_eig_tol")]
    pub eigenvalue_rel_tol: f64,
    /// Along decreasing η the support distance of the minimizers never grows and ends
    /// within one cell diameter.
    #[serde(default)]
    pub localization: bool,
}

fn default_eig_tol() -> f64 {
    1e-9
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    seed: u64,
    complex: Spanned<RawComplex>,
    sigma: Spanned<SigmaSpec>,
    integrand: Spanned<IntegrandSpec>,
    selection: Option<Spanned<RawSelection>>,
    almost_min: Option<Spanned<RawAlmostMin>>,
    lambda_search: Option<Spanned<RawLambda>>,
    stability: Option<Spanned<RawStability>>,
    spectrum: Option<Spanned<RawSpectrum>>,
    #[serde(default)]
    expect: Expectations,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComplex {
    extent: Spanned<Vec<usize>>,
    #[serde(default = "one")]
    spacing: Spanned<f64>,
    #[serde(default)]
    triangulate: bool,
    #[serde(default)]
    holes: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSelection {
    #[serde(default = "absolute")]
    penalty: Penalty,
    eta: Spanned<Vec<f64>>,
    lambda: Spanned<Vec<f64>>,
    #[serde(default = "one_k")]
    coeff_bound: Spanned<i64>,
    #[serde(default = "one")]
    flat_scale: Spanned<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlmostMin {
    #[serde(default = "one_k")]
    coeff_bound: Spanned<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLambda {
    sigma: Option<SigmaSpec>,
    lambda: Spanned<Vec<f64>>,
    #[serde(default = "one_k")]
    coeff_bound: Spanned<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStability {
    eta: Spanned<Vec<f64>>,
    epsilon: Spanned<f64>,
    #[serde(default = "default_bin_tol")]
    bin_tol: Spanned<f64>,
    #[serde(default = "one_k")]
    coeff_bound: Spanned<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    floor: Option<f64>,
    #[serde(default = "default_directions")]
    directions: usize,
}

fn one() -> Spanned<f64> {
    Spanned::new(0..0, 1.0)
}

fn one_k() -> Spanned<i64> {
    Spanned::new(0..0, 1)
}

fn absolute() -> Penalty {
    Penalty::Absolute
}

fn default_bin_tol() -> Spanned<f64> {
    Spanned::new(0..0, 1e-6)
}

fn default_directions() -> usize {
    10
}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn fail(&self, span: Range<usize>, message: &str) -> CurrentsError {
        if span.is_empty() && span.start == 0 {
            return CurrentsError::Config(message.to_string());
        }
        let (line, col) = position(self.text, span.start);
        CurrentsError::Config(format!("line {line}, column {col}: {message}"))
    }

    fn grid(&self, values: &Spanned<Vec<f64>>, name: &str, allow_zero: bool) -> Result<Vec<f64>> {
        let v = values.get_ref();
        if v.is_empty() {
            return Err(self.fail(values.span(), &format!("`{name}` must not be empty")));
        }
        let bad = v
            .iter()
            .any(|x| !x.is_finite() || *x < 0.0 || (!allow_zero && *x == 0.0));
        if bad {
            let kind = if allow_zero { "non-negative" } else { "positive" };
            return Err(self.fail(values.span(), &format!("`{name}` entries must be finite and {kind}")));
        }
        Ok(v.clone())
    }

    fn bound(&self, k: &Spanned<i64>) -> Result<i64> {
        if *k.get_ref() < 1 {
            return Err(self.fail(k.span(), "`coeff_bound` must be at least 1"));
        }
        Ok(*k.get_ref())
    }

    fn positive(&self, x: &Spanned<f64>, name: &str) -> Result<f64> {
        let v = *x.get_ref();
        if !(v > 0.0) || !v.is_finite() {
            return Err(self.fail(x.span(), &format!("`{name}` must be positive")));
        }
        Ok(v)
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| CurrentsError::Config(e.to_string().trim_end().to_string()))?;
        let check = Checker { text };
        let complex = raw.complex.get_ref();
        let extent = complex.extent.get_ref();
        if extent.is_empty() || extent.contains(&0) {
            return Err(check.fail(complex.extent.span(), "`extent` needs positive cell counts"));
        }
        let spacing = check.positive(&complex.spacing, "spacing")?;
        let mut grid = GridSpec::new(extent).spacing(spacing).triangulate(complex.triangulate);
        for hole in &complex.holes {
            if hole.len() != extent.len() || hole.iter().zip(extent).any(|(h, e)| h >= e) {
                return Err(check.fail(raw.complex.span(), &format!("hole {hole:?} lies outside the grid")));
            }
            grid = grid.hole(hole);
        }
        let selection = match &raw.selection {
            None => None,
            Some(s) => {
                let s = s.get_ref();
                let scale = check.positive(&s.flat_scale, "flat_scale")?;
                let eta = check.grid(&s.eta, "eta", true)?;
                Some(SelectionStage {
                    penalty: s.penalty,
                    eta: eta.iter().map(|e| e * scale).collect(),
                    lambda: check.grid(&s.lambda, "lambda", false)?,
                    coeff_bound: check.bound(&s.coeff_bound)?,
                })
            }
        };
        let almost_min = match &raw.almost_min {
            None => None,
            Some(a) => {
                if selection.is_none() {
                    return Err(check.fail(a.span(), "[almost_min] needs a [selection] section"));
                }
                Some(AlmostMinStage {
                    coeff_bound: check.bound(&a.get_ref().coeff_bound)?,
                })
            }
        };
        let lambda_search = match &raw.lambda_search {
            None => None,
            Some(l) => {
                let l = l.get_ref();
                let grid = check.grid(&l.lambda, "lambda", false)?;
                if grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(check.fail(l.lambda.span(), "`lambda` must be strictly ascending"));
                }
                Some(LambdaStage {
                    sigma: l.sigma.clone(),
                    lambda: grid,
                    coeff_bound: check.bound(&l.coeff_bound)?,
                })
            }
        };
        let stability = match &raw.stability {
            None => None,
            Some(s) => {
                let s = s.get_ref();
                Some(StabilityStage {
                    eta: check.grid(&s.eta, "eta", true)?,
                    epsilon: check.positive(&s.epsilon, "epsilon")?,
                    bin_tol: check.positive(&s.bin_tol, "bin_tol")?,
                    coeff_bound: check.bound(&s.coeff_bound)?,
                })
            }
        };
        let spectrum = match &raw.spectrum {
            None => None,
            Some(s) => {
                let inner = s.get_ref();
                if inner.directions == 0 {
                    return Err(check.fail(s.span(), "`directions` must be at least 1"));
                }
                Some(SpectrumStage {
                    floor: inner.floor,
                    directions: inner.directions,
                })
            }
        };
        if let IntegrandSpec::Table { plus, minus, .. } = raw.integrand.get_ref() {
            if plus.len() != minus.len() {
                return Err(check.fail(raw.integrand.span(), "`plus` and `minus` differ in length"));
            }
        }
        Ok(Scenario {
            name: raw.name,
            seed: raw.seed,
            grid,
            sigma: raw.sigma.into_inner(),
            integrand: raw.integrand.into_inner(),
            selection,
            almost_min,
            lambda_search,
            stability,
            spectrum,
            expect: raw.expect,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Scenario::parse(&text).map_err(|e| match e {
            CurrentsError::Config(m) => CurrentsError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn complex(&self) -> Result<SimplicialComplex> {
        SimplicialComplex::grid(&self.grid)
    }
}

impl SigmaSpec {
    pub fn build(&self, complex: &SimplicialComplex, spacing: f64) -> Result<Chain> {
        let lattice = |p: &[usize]| -> Result<usize> {
            let x: Vec<f64> = p.iter().map(|&c| c as f64 * spacing).collect();
            complex
                .find_vertex(&x)
                .ok_or_else(|| CurrentsError::Config(format!("lattice point {p:?} is not a vertex")))
        };
        match self {
            SigmaSpec::Row { row, from, to } => {
                let verts = complex.vertices();
                let y = *row as f64 * spacing;
                let lo = from.map_or(f64::NEG_INFINITY, |f| f as f64 * spacing - 1e-9);
                let hi = to.map_or(f64::INFINITY, |t| t as f64 * spacing + 1e-9);
                let mut pairs = Vec::new();
                for e in 0..complex.num_cells(1) {
                    let cell = complex.cell(1, e);
                    let (a, b) = (&verts[cell[0]], &verts[cell[1]]);
                    let flat = [a, b]
                        .iter()
                        .all(|p| (p[1] - y).abs() < 1e-9 && p[0] >= lo && p[0] <= hi);
                    if flat && (a[0] - b[0]).abs() > 1e-12 {
                        pairs.push((e, if b[0] > a[0] { 1 } else { -1 }));
                    }
                }
                if pairs.is_empty() {
                    return Err(CurrentsError::Config(format!("row {row} contains no edges")));
                }
                complex.chain(1, &pairs)
            }
            SigmaSpec::Path { points } => {
                if points.len() < 2 {
                    return Err(CurrentsError::Config("a path needs at least two points".into()));
                }
                let mut chain = complex.zero_chain(1);
                for w in points.windows(2) {
                    let steps = lattice_steps(&w[0], &w[1])?;
                    for s in steps.windows(2) {
                        let (a, b) = (lattice(&s[0])?, lattice(&s[1])?);
                        let e = complex.find_cell(1, &[a, b]).ok_or_else(|| {
                            CurrentsError::Config(format!("no edge between {:?} and {:?}", s[0], s[1]))
                        })?;
                        let sign = if complex.cell(1, e)[0] == a { 1 } else { -1 };
                        chain = &chain + &complex.chain(1, &[(e, sign)])?;
                    }
                }
                Ok(chain)
            }
            SigmaSpec::Explicit { degree, coefficients } => complex.chain(*degree, coefficients),
        }
    }
}

/// Lattice points from `a` to `b`: unit steps along an axis-parallel line, otherwise the
/// single jump (which must then be an edge of the complex).
fn lattice_steps(a: &[usize], b: &[usize]) -> Result<Vec<Vec<usize>>> {
    if a.len() != b.len() {
        return Err(CurrentsError::Config("path points differ in dimension".into()));
    }
    let moving: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
    match moving.as_slice() {
        [] => Err(CurrentsError::Config(format!("repeated path point {a:?}"))),
        [axis] => {
            let axis = *axis;
            let mut out = vec![a.to_vec()];
            let mut p = a.to_vec();
            while p[axis] != b[axis] {
                if p[axis] < b[axis] {
                    p[axis] += 1;
                } else {
                    p[axis] -= 1;
                }
                out.push(p.clone());
            }
            Ok(out)
        }
        _ => Ok(vec![a.to_vec(), b.to_vec()]),
    }
}

impl IntegrandSpec {
    pub fn build(&self, complex: &SimplicialComplex, degree: usize) -> Result<Integrand> {
        match self {
            IntegrandSpec::Area => make_area_integrand(complex, degree),
            IntegrandSpec::AnisotropicXy { a, b } => Integrand::anisotropic_xy(complex, degree, *a, *b),
            IntegrandSpec::Drift { plus, minus } => Integrand::drift(complex, degree, *plus, *minus),
            IntegrandSpec::TwoZone { split, a, b } => Integrand::two_zone(complex, degree, *split, *a, *b),
            IntegrandSpec::Table { plus, minus, lambda } => {
                Integrand::new(complex, degree, plus.clone(), minus.clone(), *lambda)
            }
        }
    }
}
