//! Python bindings for `longmem`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use longmem::risk::montecarlo::{replicate, Generator};
use longmem::{AutocovSeq, Error, LongMemoryModel, SamplePath};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Argument(_) | Error::Domain(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

/// F(d) or FARIMA(p, d, q) model.
#[pyclass(name = "Model", frozen, skip_from_py_object, module = "pylongmem")]
#[derive(Clone)]
pub struct PyModel {
    inner: LongMemoryModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (d, sigma2 = 1.0))]
    fn fi(d: f64, sigma2: f64) -> PyResult<Self> {
        Ok(Self { inner: LongMemoryModel::fi(d, sigma2).map_err(to_py)? })
    }

    /// `ar` holds φ_1..φ_p of `φ(z) = 1 - Σ φ_i z^i`, `ma` holds θ_1..θ_q of
    /// `θ(z) = 1 + Σ θ_i z^i`.
    #[staticmethod]
    #[pyo3(signature = (d, ar, ma, sigma2 = 1.0))]
    fn farima(d: f64, ar: Vec<f64>, ma: Vec<f64>, sigma2: f64) -> PyResult<Self> {
        Ok(Self { inner: LongMemoryModel::farima(d, ar, ma, sigma2).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: LongMemoryModel::from_json(s).map_err(to_py)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn d(&self) -> f64 {
        self.inner.d()
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2()
    }

    /// `a_0..a_n` with `a_0 = 1`.
    fn ar_coeffs(&self, n: usize) -> Vec<f64> {
        longmem::ar_inf_coeffs(&self.inner, n).values
    }

    /// `b_0..b_n` with `b_0 = 1`.
    fn ma_coeffs(&self, n: usize) -> Vec<f64> {
        longmem::ma_inf_coeffs(&self.inner, n).values
    }

    /// `σ(0..m)`.
    fn autocov(&self, m: usize) -> PyResult<Vec<f64>> {
        Ok(longmem::exact_autocov(&self.inner, m).map_err(to_py)?.values)
    }

    fn spectral_density(&self, lam: f64) -> PyResult<f64> {
        longmem::spectral_density(&self.inner, lam).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.to_json())
    }
}

/// Order-k Yule-Walker fit: forecast weights `phi`, error variance `v` and
/// partial autocorrelations.
#[pyclass(name = "ArkModel", frozen, module = "pylongmem")]
pub struct PyArkModel {
    #[pyo3(get)]
    k: usize,
    #[pyo3(get)]
    phi: Vec<f64>,
    #[pyo3(get)]
    v: f64,
    #[pyo3(get)]
    partials: Vec<f64>,
}

impl From<longmem::ArkModel> for PyArkModel {
    fn from(m: longmem::ArkModel) -> Self {
        Self { k: m.k, phi: m.phi, v: m.v, partials: m.partials }
    }
}

#[pyclass(name = "WhittleFit", frozen, module = "pylongmem")]
pub struct PyWhittleFit {
    #[pyo3(get)]
    d_hat: f64,
    #[pyo3(get)]
    sigma2_hat: f64,
    #[pyo3(get)]
    objective: f64,
}

#[pyfunction]
fn c_of_d(d: f64) -> PyResult<f64> {
    longmem::c_of_d(d).map_err(to_py)
}

#[pyfunction]
fn r_of_k(d: f64, k: usize) -> PyResult<f64> {
    longmem::r_of_k(d, k).map_err(to_py)
}

#[pyfunction]
fn truncation_excess(model: &PyModel, k: usize) -> PyResult<f64> {
    longmem::truncation_excess(&model.inner, k).map_err(to_py)
}

#[pyfunction]
fn ark_excess(model: &PyModel, k: usize) -> PyResult<f64> {
    longmem::ark_excess(&model.inner, k).map_err(to_py)
}

/// `(term1, term2, term3)` of the AR(k) excess for F(d).
#[pyfunction]
fn excess_decomposition(d: f64, k: usize) -> PyResult<(f64, f64, f64)> {
    let t = longmem::excess_decomposition(d, k).map_err(to_py)?;
    Ok((t.term1, t.term2, t.term3))
}

#[pyfunction]
fn durbin_levinson(acov: Vec<f64>, k: usize) -> PyResult<PyArkModel> {
    let acov = AutocovSeq::from_values(acov).map_err(to_py)?;
    Ok(longmem::durbin_levinson(&acov, k).map_err(to_py)?.into())
}

#[pyfunction]
fn fi_ark_closed_form(d: f64, k: usize) -> PyResult<PyArkModel> {
    Ok(longmem::fi_ark_closed_form(d, k).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (values, d_min = longmem::spectral::DEFAULT_D_BOUNDS.0, d_max = longmem::spectral::DEFAULT_D_BOUNDS.1))]
fn whittle_fit(py: Python<'_>, values: Vec<f64>, d_min: f64, d_max: f64) -> PyResult<PyWhittleFit> {
    let sample = SamplePath::new(values).map_err(to_py)?;
    let fit = py.detach(|| longmem::whittle_fit(&sample, (d_min, d_max))).map_err(to_py)?;
    Ok(PyWhittleFit { d_hat: fit.d_hat, sigma2_hat: fit.sigma2_hat, objective: fit.objective })
}

/// `reps` exact Gaussian paths of length `n`.
#[pyfunction]
#[pyo3(signature = (model, n, reps = 1, seed = 0))]
fn simulate(py: Python<'_>, model: &PyModel, n: usize, reps: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let inner = model.inner.clone();
    py.detach(move || {
        let gen = Generator::new(&inner, n)?;
        let paths = replicate(reps, seed, 0, |stream| gen.draw(stream))?;
        Ok(paths.into_iter().map(|p| p.values).collect())
    })
    .map_err(to_py)
}

/// Truncated Wiener-Kolmogorov forecast from the last `k` values.
#[pyfunction]
fn wk_predict(model: &PyModel, window: Vec<f64>, k: usize) -> PyResult<f64> {
    let window = SamplePath::new(window).map_err(to_py)?;
    if k == 0 || k > window.len() {
        return Err(PyValueError::new_err(format!("k must lie in 1..={}", window.len())));
    }
    let recent = SamplePath::new(window.last(k).to_vec()).map_err(to_py)?;
    Ok(longmem::wk_truncated_predict(&longmem::ar_inf_coeffs(&model.inner, k), &recent).map_err(to_py)?.value)
}

/// Yule-Walker AR(k) forecast with coefficients estimated from `train`.
#[pyfunction]
fn ark_plugin_predict(train: Vec<f64>, window: Vec<f64>, k: usize) -> PyResult<f64> {
    let train = SamplePath::new(train).map_err(to_py)?;
    let window = SamplePath::new(window).map_err(to_py)?;
    Ok(longmem::ark_plugin_predict(&train, &window, k).map_err(to_py)?.value)
}

#[pymodule]
fn pylongmem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyArkModel>()?;
    m.add_class::<PyWhittleFit>()?;
    m.add_function(wrap_pyfunction!(c_of_d, m)?)?;
    m.add_function(wrap_pyfunction!(r_of_k, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_excess, m)?)?;
    m.add_function(wrap_pyfunction!(ark_excess, m)?)?;
    m.add_function(wrap_pyfunction!(excess_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(durbin_levinson, m)?)?;
    m.add_function(wrap_pyfunction!(fi_ark_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(whittle_fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(wk_predict, m)?)?;
    m.add_function(wrap_pyfunction!(ark_plugin_predict, m)?)?;
    Ok(())
}
