//! Python bindings for `currents-core`, importable as `pycurrents`.

use std::path::PathBuf;
use std::sync::Arc;

use currents::stability::GraphFamily;
use currents::{
    CurrentsError, GridSpec, Integrand, PenalizedProblem, Penalty, RunOptions, Scenario, SearchBounds,
    SimplicialComplex,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: CurrentsError) -> PyErr {
    match e {
        CurrentsError::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(frozen, name = "Complex", module = "pycurrents")]
struct PyComplex {
    inner: Arc<SimplicialComplex>,
}

#[pyclass(frozen, eq, skip_from_py_object, name = "Chain", module = "pycurrents")]
#[derive(Clone, PartialEq)]
struct PyChain {
    inner: currents::Chain,
}

#[pyclass(frozen, name = "Integrand", module = "pycurrents")]
struct PyIntegrand {
    inner: Integrand,
}

#[pyclass(frozen, get_all, name = "FlatDecomposition", module = "pycurrents")]
struct PyFlat {
    value: f64,
    s: PyChain,
    r: PyChain,
    optimal: bool,
}

#[pyclass(frozen, get_all, name = "Minimizer", module = "pycurrents")]
struct PyMinimizer {
    chain: PyChain,
    filling: PyChain,
    value: f64,
    f_value: f64,
    flat_distance: f64,
    support_distance: f64,
}

#[pyclass(frozen, get_all, name = "Spectrum", module = "pycurrents")]
struct PySpectrum {
    eigenvalues: Vec<f64>,
    index: usize,
    nullity: usize,
    strictly_stable: bool,
}

fn wrap(c: currents::Chain) -> PyChain {
    PyChain { inner: c }
}

fn same_space(a: &PyChain, b: &PyChain) -> PyResult<()> {
    if a.inner.complex_id() != b.inner.complex_id() {
        return Err(err(CurrentsError::ComplexMismatch));
    }
    if a.inner.degree() != b.inner.degree() {
        return Err(PyValueError::new_err("chains have different degrees"));
    }
    Ok(())
}

#[pymethods]
impl PyComplex {
    #[staticmethod]
    #[pyo3(signature = (extent, spacing = 1.0, triangulate = false))]
    fn grid(extent: Vec<usize>, spacing: f64, triangulate: bool) -> PyResult<Self> {
        let spec = GridSpec::new(&extent).spacing(spacing).triangulate(triangulate);
        let inner = SimplicialComplex::grid(&spec).map_err(err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[staticmethod]
    fn from_simplices(vertices: Vec<Vec<f64>>, top: Vec<Vec<usize>>) -> PyResult<Self> {
        let inner = SimplicialComplex::from_simplices(vertices, &top).map_err(err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = SimplicialComplex::from_json(text).map_err(err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn max_degree(&self) -> usize {
        self.inner.max_degree()
    }

    #[getter]
    fn vertices(&self) -> Vec<Vec<f64>> {
        self.inner.vertices().to_vec()
    }

    fn num_cells(&self, degree: usize) -> usize {
        self.inner.num_cells(degree)
    }

    fn cells(&self, degree: usize) -> Vec<Vec<usize>> {
        self.inner.cells(degree).to_vec()
    }

    fn find_vertex(&self, point: Vec<f64>) -> Option<usize> {
        self.inner.find_vertex(&point)
    }

    fn find_cell(&self, degree: usize, vertices: Vec<usize>) -> Option<usize> {
        self.inner.find_cell(degree, &vertices)
    }

    fn chain(&self, degree: usize, pairs: Vec<(usize, i64)>) -> PyResult<PyChain> {
        self.inner.chain(degree, &pairs).map(wrap).map_err(err)
    }

    fn boundary(&self, chain: &PyChain) -> PyResult<PyChain> {
        self.inner.boundary(&chain.inner).map(wrap).map_err(err)
    }

    fn mass(&self, chain: &PyChain) -> PyResult<f64> {
        if chain.inner.complex_id() != self.inner.id() {
            return Err(err(CurrentsError::ComplexMismatch));
        }
        Ok(self.inner.mass(&chain.inner))
    }

    fn __repr__(&self) -> String {
        let counts: Vec<String> = (0..=self.inner.max_degree())
            .map(|k| self.inner.num_cells(k).to_string())
            .collect();
        format!("Complex(cells=[{}])", counts.join(", "))
    }
}

#[pymethods]
impl PyChain {
    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn items(&self) -> Vec<(usize, i64)> {
        self.inner.iter().collect()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn __add__(&self, other: &PyChain) -> PyResult<PyChain> {
        same_space(self, other)?;
        Ok(wrap(&self.inner + &other.inner))
    }

    fn __sub__(&self, other: &PyChain) -> PyResult<PyChain> {
        same_space(self, other)?;
        Ok(wrap(&self.inner - &other.inner))
    }

    fn __neg__(&self) -> PyChain {
        wrap(-&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let terms: Vec<String> = self.inner.iter().map(|(i, c)| format!("{c}*e{i}")).collect();
        format!(
            "Chain(degree={}, {})",
            self.inner.degree(),
            if terms.is_empty() {
                "0".into()
            } else {
                terms.join(" + ")
            }
        )
    }
}

#[pymethods]
impl PyIntegrand {
    #[staticmethod]
    fn area(complex: &PyComplex, degree: usize) -> PyResult<Self> {
        currents::make_area_integrand(&complex.inner, degree)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn anisotropic_xy(complex: &PyComplex, a: f64, b: f64) -> PyResult<Self> {
        Integrand::anisotropic_xy(&complex.inner, 1, a, b)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn drift(complex: &PyComplex, degree: usize, plus: f64, minus: f64) -> PyResult<Self> {
        Integrand::drift(&complex.inner, degree, plus, minus)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn two_zone(complex: &PyComplex, degree: usize, split: f64, a: f64, b: f64) -> PyResult<Self> {
        Integrand::two_zone(&complex.inner, degree, split, a, b)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    /// Ellipticity constant Λ.
    #[getter]
    fn big_lambda(&self) -> f64 {
        self.inner.lambda()
    }

    fn evaluate(&self, chain: &PyChain) -> PyResult<f64> {
        self.inner.evaluate(&chain.inner).map_err(err)
    }
}

#[pyfunction]
fn flat_norm(complex: &PyComplex, t: &PyChain) -> PyResult<PyFlat> {
    let d = currents::flat_norm(&complex.inner, &t.inner).map_err(err)?;
    Ok(PyFlat {
        value: d.value,
        s: wrap(d.s),
        r: wrap(d.r),
        optimal: d.optimal,
    })
}

#[pyfunction]
fn minimal_filling(complex: &PyComplex, t: &PyChain) -> PyResult<PyChain> {
    currents::minimal_filling(&complex.inner, &t.inner)
        .map(wrap)
        .map_err(err)
}

/// Returns R with t − sigma = ∂R, or None.
#[pyfunction]
fn is_homologous(complex: &PyComplex, t: &PyChain, sigma: &PyChain) -> PyResult<Option<PyChain>> {
    Ok(currents::is_homologous(&complex.inner, &t.inner, &sigma.inner)
        .map_err(err)?
        .map(wrap))
}

#[pyfunction]
#[pyo3(signature = (complex, sigma, integrand, eta, lam, penalty = "absolute", coeff_bound = 1))]
fn minimize(
    complex: &PyComplex,
    sigma: &PyChain,
    integrand: &PyIntegrand,
    eta: f64,
    lam: f64,
    penalty: &str,
    coeff_bound: i64,
) -> PyResult<(f64, Vec<PyMinimizer>)> {
    let penalty = match penalty {
        "absolute" => Penalty::Absolute,
        "quadratic" => Penalty::Quadratic,
        other => return Err(PyValueError::new_err(format!("unknown penalty {other:?}"))),
    };
    let problem = PenalizedProblem::new(
        sigma.inner.clone(),
        integrand.inner.clone(),
        eta,
        lam,
        penalty,
        SearchBounds::new(coeff_bound),
    )
    .map_err(err)?;
    let set = currents::minimize_penalized(&complex.inner, &problem).map_err(err)?;
    let minimizers = set
        .minimizers
        .into_iter()
        .map(|m| PyMinimizer {
            chain: wrap(m.chain),
            filling: wrap(m.filling),
            value: m.value,
            f_value: m.f_value,
            flat_distance: m.flat_distance,
            support_distance: m.support_distance,
        })
        .collect();
    Ok((set.value, minimizers))
}

/// Returns (grid λ₀, exact threshold).
#[pyfunction]
#[pyo3(signature = (complex, sigma, integrand, lambdas, coeff_bound = 1))]
fn find_lambda0(
    complex: &PyComplex,
    sigma: &PyChain,
    integrand: &PyIntegrand,
    lambdas: Vec<f64>,
    coeff_bound: i64,
) -> PyResult<(f64, f64)> {
    let sweep = currents::find_lambda0(
        &complex.inner,
        &sigma.inner,
        &integrand.inner,
        &SearchBounds::new(coeff_bound),
        &lambdas,
    )
    .map_err(err)?;
    Ok((sweep.lambda0, sweep.threshold))
}

/// Returns (C, r0).
#[pyfunction]
fn almost_min_constant(lam: f64, big_lambda: f64, n: usize) -> PyResult<(f64, f64)> {
    currents::almost_min_constant(lam, big_lambda, n).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (complex, sigma, integrand, floor = None))]
fn second_variation(
    complex: &PyComplex,
    sigma: &PyChain,
    integrand: &PyIntegrand,
    floor: Option<f64>,
) -> PyResult<PySpectrum> {
    let family = GraphFamily::from_path(&complex.inner, &sigma.inner).map_err(err)?;
    let s = currents::second_variation_form(&family, &integrand.inner, floor).map_err(err)?;
    Ok(PySpectrum {
        eigenvalues: s.eigenvalues,
        index: s.index,
        nullity: s.nullity,
        strictly_stable: s.strictly_stable,
    })
}

/// Runs a scenario file and returns the summary as JSON. Writes the bundle when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (path, out_dir = None, jobs = None))]
fn run_scenario(path: PathBuf, out_dir: Option<PathBuf>, jobs: Option<usize>) -> PyResult<String> {
    let scenario = Scenario::load(&path).map_err(err)?;
    let bundle = currents::run_scenario(&scenario, &RunOptions { jobs, verbose: false }).map_err(err)?;
    if let Some(dir) = out_dir {
        bundle.write(&dir).map_err(err)?;
    }
    serde_json::to_string_pretty(&bundle.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn pycurrents(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyComplex>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<PyIntegrand>()?;
    m.add_class::<PyFlat>()?;
    m.add_class::<PyMinimizer>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(flat_norm, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_filling, m)?)?;
    m.add_function(wrap_pyfunction!(is_homologous, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(find_lambda0, m)?)?;
    m.add_function(wrap_pyfunction!(almost_min_constant, m)?)?;
    m.add_function(wrap_pyfunction!(second_variation, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
