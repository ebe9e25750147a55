//! Python bindings for the gasket boundary value problem library.

use std::collections::HashMap;
use std::sync::Arc;

use gasket_bvp::extension::{growth_csv, obstruction_experiment};
use gasket_bvp::greens::GreenKernel;
use gasket_bvp::ratios::{dtn_multiplier, ratio_triple};
use gasket_bvp::verify::{self, Group, VerifyConfig};
use gasket_bvp::{DyadicSequence, GasketError, GasketMesh, HaarSpectrum, HarmonicBasis, MeshFunction, RatioTable, Word};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: GasketError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Exponent sequence of a point `x` in (0, 1].
#[pyclass(name = "DyadicSequence", module = "gasket_bvp_py", frozen)]
struct PySequence {
    inner: DyadicSequence,
}

#[pymethods]
impl PySequence {
    /// `spec` is a decimal, an exponent list "1,3,5", "arith:a,d" or "periodic:p1,..".
    #[new]
    #[pyo3(signature = (spec, depth = None))]
    fn new(spec: &str, depth: Option<usize>) -> PyResult<Self> {
        DyadicSequence::parse_spec(spec, depth).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn from_exponents(exponents: Vec<u32>) -> PyResult<Self> {
        DyadicSequence::from_exponents(&exponents).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn exponents(&self) -> Vec<u32> {
        self.inner.exponents()
    }

    #[getter]
    fn is_periodic(&self) -> bool {
        self.inner.is_periodic()
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.value()
    }

    fn nonconsecutive_bound(&self) -> Option<u32> {
        self.inner.nonconsecutive_bound()
    }

    /// `(m0, m1, m2)` at the top level.
    fn ratios(&self) -> PyResult<(f64, f64, f64)> {
        let t = ratio_triple(&self.inner).map_err(py_err)?;
        Ok((t.m0, t.m1, t.m2))
    }

    /// Per-level `m0` values.
    fn m0_table(&self) -> PyResult<Vec<f64>> {
        Ok(RatioTable::compute(&self.inner).map_err(py_err)?.m0_per_level)
    }

    fn dtn_multiplier(&self, m: usize) -> PyResult<f64> {
        dtn_multiplier(&self.inner, m).map_err(py_err)
    }

    fn energy_h0(&self) -> PyResult<f64> {
        Ok(HarmonicBasis::new(&self.inner).map_err(py_err)?.energy_h0().value)
    }

    fn energy_h1(&self) -> PyResult<f64> {
        Ok(HarmonicBasis::new(&self.inner).map_err(py_err)?.energy_h1().value)
    }

    /// Energy of `h_ω` for a word over {1, 2} such as "12".
    fn energy_h_omega(&self, word: &str) -> PyResult<f64> {
        let w: Word = word.parse().map_err(py_err)?;
        Ok(HarmonicBasis::new(&self.inner).map_err(py_err)?.energy_h_omega(&w).map_err(py_err)?.value)
    }

    fn __repr__(&self) -> String {
        format!("DyadicSequence(exponents={:?}, periodic={})", self.inner.exponents(), self.inner.is_periodic())
    }
}

/// Boundary data: `a` at the top vertex, mean `b` on the slice, Haar coefficients by word.
#[pyclass(name = "HaarSpectrum", module = "gasket_bvp_py", frozen)]
struct PySpectrum {
    inner: HaarSpectrum,
}

#[pymethods]
impl PySpectrum {
    #[new]
    #[pyo3(signature = (a, b, coeffs = None))]
    fn new(a: f64, b: f64, coeffs: Option<HashMap<String, f64>>) -> PyResult<Self> {
        let mut inner = HaarSpectrum { a, b, ..Default::default() };
        for (w, c) in coeffs.unwrap_or_default() {
            inner = inner.with_coeff(w.parse().map_err(py_err)?, c);
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        HaarSpectrum::from_json(text).map(|inner| Self { inner }).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    #[getter]
    fn coeffs(&self) -> HashMap<String, f64> {
        self.inner.coeffs.iter().map(|(w, c)| (w.to_string(), *c)).collect()
    }
}

/// Level-`L` graph approximation of the gasket.
#[pyclass(name = "GasketMesh", module = "gasket_bvp_py", frozen)]
struct PyMesh {
    inner: Arc<GasketMesh>,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(level: u32) -> PyResult<Self> {
        GasketMesh::shared(level).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level()
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    /// Planar coordinates of every vertex.
    fn coords(&self) -> Vec<(f64, f64)> {
        (0..self.inner.num_vertices()).map(|v| self.inner.coords(v)).collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }
}

/// Values of the harmonic function with the given spectrum; NaN outside the domain.
#[pyfunction]
fn synthesize(seq: &PySequence, spectrum: &PySpectrum, mesh: &PyMesh) -> PyResult<Vec<f64>> {
    let basis = HarmonicBasis::new(&seq.inner).map_err(py_err)?;
    Ok(basis.synthesize(&mesh.inner, &spectrum.inner).map_err(py_err)?.values)
}

/// Normal derivative on the slice as a JSON string.
#[pyfunction]
fn normal_derivative(seq: &PySequence, spectrum: &PySpectrum) -> PyResult<String> {
    Ok(gasket_bvp::flux::normal_derivative(&seq.inner, &spectrum.inner).map_err(py_err)?.to_json().to_string())
}

/// Solves `-Δu = F` with zero boundary values using the kernel truncated at `m`.
/// `forcing` holds one value per mesh vertex.
#[pyfunction]
fn solve_green(seq: &PySequence, forcing: Vec<f64>, m: usize, mesh: &PyMesh) -> PyResult<Vec<f64>> {
    let f = MeshFunction::from_values(&mesh.inner, forcing).map_err(py_err)?;
    let kernel = GreenKernel::new(&seq.inner, m, mesh.inner.clone()).map_err(py_err)?;
    Ok(kernel.solve(&f).map_err(py_err)?.values)
}

/// Runs one check group; returns whether it passed and the printed report.
#[pyfunction]
#[pyo3(signature = (group, seed = 42, trials = None))]
fn verify_group(py: Python<'_>, group: &str, seed: u64, trials: Option<usize>) -> PyResult<(bool, String)> {
    let g: Group = group.parse().map_err(py_err)?;
    let cfg = VerifyConfig { seed, trials, ..Default::default() };
    let r = py.detach(|| verify::run(g, &cfg)).map_err(py_err)?;
    Ok((r.passed, r.to_string()))
}

#[pyfunction]
fn hausdorff_dimension(n: u32) -> PyResult<f64> {
    gasket_bvp::hausdorff_dimension(n).map_err(py_err)
}

/// Minimal extension energies for `N` in `n_min..=n_max` as CSV.
#[pyfunction]
fn growth(py: Python<'_>, n_min: u32, n_max: u32) -> PyResult<String> {
    let rows = py.detach(|| obstruction_experiment(n_min..=n_max)).map_err(py_err)?;
    Ok(growth_csv(&rows))
}

#[pymodule]
fn gasket_bvp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySequence>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyMesh>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(normal_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(solve_green, m)?)?;
    m.add_function(wrap_pyfunction!(verify_group, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(growth, m)?)?;
    Ok(())
}
