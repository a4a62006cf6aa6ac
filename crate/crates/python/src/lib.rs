//! Python bindings. Arrays cross as plain lists; complex values as Python
//! `complex`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use weakval_core::classical::{self, Binning, PhaseSpaceDensity, PhaseSpaceObservable};
use weakval_core::measurement::{self, PointerState};
use weakval_core::quasiprob::{self, QuasiprobField};
use weakval_core::{self as core, CoherentAmplitude, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidRange { .. }
        | Error::InvalidPoints(_)
        | Error::InvalidParameter(_)
        | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone)]
struct Grid(core::QuadratureGrid);

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (q_min=-16.0, q_max=16.0, n_points=1024))]
    fn new(q_min: f64, q_max: f64, n_points: usize) -> PyResult<Self> {
        core::QuadratureGrid::new(q_min, q_max, n_points)
            .map(Grid)
            .map_err(to_py)
    }

    #[getter]
    fn dq(&self) -> f64 {
        self.0.dq()
    }

    #[getter]
    fn dp(&self) -> f64 {
        self.0.dp()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn q_values(&self) -> Vec<f64> {
        self.0.q_values()
    }

    fn p_values(&self) -> Vec<f64> {
        self.0.p_values()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(q_min={}, q_max={}, n_points={})",
            self.0.q_min(),
            self.0.q_max(),
            self.0.len()
        )
    }
}

/// Pure or mixed state in the position basis.
#[pyclass(name = "State", frozen, from_py_object)]
#[derive(Clone)]
struct State(core::MixedState);

#[pymethods]
impl State {
    #[staticmethod]
    #[pyo3(signature = (alpha_r, alpha_i, grid))]
    fn coherent(alpha_r: f64, alpha_i: f64, grid: &Grid) -> PyResult<Self> {
        let wf = core::coherent_state(
            CoherentAmplitude::from_quadratures(alpha_r, alpha_i),
            &grid.0,
        )
        .map_err(to_py)?;
        Ok(State(core::MixedState::pure(wf)))
    }

    #[staticmethod]
    fn fock(n: usize, grid: &Grid) -> PyResult<Self> {
        Ok(State(core::MixedState::pure(
            core::fock_state(n, &grid.0).map_err(to_py)?,
        )))
    }

    #[staticmethod]
    fn vacuum(grid: &Grid) -> PyResult<Self> {
        Ok(State(core::MixedState::pure(
            core::vacuum(&grid.0).map_err(to_py)?,
        )))
    }

    /// Incoherent mixture of `(weight, state)` pairs of pure states.
    #[staticmethod]
    fn mixture(parts: Vec<(f64, State)>) -> PyResult<Self> {
        let mut components = Vec::new();
        for (w, s) in parts {
            if !s.0.is_pure() {
                return Err(PyValueError::new_err(
                    "mixture components must be pure states",
                ));
            }
            components.push((w, s.0.components()[0].1.clone()));
        }
        core::mix(components).map(State).map_err(to_py)
    }

    /// Position amplitudes of a pure state.
    fn amplitudes(&self) -> PyResult<Vec<Complex64>> {
        if !self.0.is_pure() {
            return Err(PyValueError::new_err(
                "mixed states have no single amplitude vector",
            ));
        }
        Ok(self.0.components()[0].1.in_position().amplitudes().to_vec())
    }

    fn position_density(&self) -> Vec<f64> {
        self.0.position_density()
    }

    fn momentum_density(&self) -> Vec<f64> {
        self.0.momentum_density()
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid(*self.0.grid())
    }
}

#[pyclass(name = "WeakValueProfile", frozen)]
struct Profile(core::WeakValueProfile);

#[pymethods]
impl Profile {
    fn q(&self) -> Vec<f64> {
        self.0.grid().q_values()
    }

    /// Weak values, NaN where the postselection density is below the floor.
    fn values(&self) -> Vec<Complex64> {
        self.0.values().to_vec()
    }

    fn density(&self) -> Vec<f64> {
        self.0.postselection_density().to_vec()
    }

    fn valid(&self) -> Vec<bool> {
        self.0.valid_mask().to_vec()
    }

    fn at(&self, q: f64) -> PyResult<Complex64> {
        self.0.at(q).map_err(to_py)
    }
}

#[pyclass(name = "Field", frozen)]
struct Field(QuasiprobField);

#[pymethods]
impl Field {
    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind().name()
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid(*self.0.grid())
    }

    /// Values row-major in q then p.
    fn values(&self) -> Vec<Complex64> {
        self.0.values().to_vec()
    }

    fn at(&self, q: f64, p: f64) -> Complex64 {
        self.0.at(q, p)
    }

    fn q_marginal(&self) -> Vec<Complex64> {
        self.0.q_marginal()
    }

    fn p_marginal(&self) -> Vec<Complex64> {
        self.0.p_marginal()
    }

    fn min_real(&self) -> f64 {
        self.0.min_real()
    }

    fn negativity_volume(&self) -> PyResult<f64> {
        self.0.negativity_volume().map_err(to_py)
    }

    /// `∫p^n F dp / ∫F dp` per q, None where masked.
    fn conditional_moments(&self, n: u32) -> Vec<Option<f64>> {
        self.0.conditional_moments(n)
    }
}

fn observable(name: &str) -> PyResult<core::ObservableSpec> {
    core::ObservableSpec::from_name(name).map_err(to_py)
}

#[pyfunction]
fn weak_value(obs: &str, state: &State) -> PyResult<Profile> {
    core::weak_value(&observable(obs)?, &state.0)
        .map(Profile)
        .map_err(to_py)
}

#[pyfunction]
fn weak_energy_relation(state: &State) -> PyResult<Profile> {
    core::weak_energy_relation(&state.0)
        .map(Profile)
        .map_err(to_py)
}

#[pyfunction]
fn coherent_p2_closed_form(alpha_r: f64, alpha_i: f64, q: f64) -> Complex64 {
    core::coherent_p2_closed_form(CoherentAmplitude::from_quadratures(alpha_r, alpha_i), q)
}

#[pyfunction]
fn negativity_region(alpha_r: f64, alpha_i: f64) -> (f64, f64) {
    core::negativity_region(CoherentAmplitude::from_quadratures(alpha_r, alpha_i))
}

#[pyfunction]
fn negativity_probability(alpha_r: f64, alpha_i: f64) -> f64 {
    core::negativity_probability(CoherentAmplitude::from_quadratures(alpha_r, alpha_i))
}

#[pyfunction]
fn negativity_probability_numeric(alpha_r: f64, alpha_i: f64, grid: &Grid) -> PyResult<f64> {
    core::negativity_probability_numeric(
        CoherentAmplitude::from_quadratures(alpha_r, alpha_i),
        &grid.0,
    )
    .map_err(to_py)
}

#[pyfunction]
fn erfc(x: f64) -> f64 {
    core::special::erfc(x)
}

#[pyfunction]
#[pyo3(signature = (state, kind="margenau_hill"))]
fn quasiprobability(state: &State, kind: &str) -> PyResult<Field> {
    let field = match kind {
        "standard" | "standard_ordered" => quasiprob::standard_ordered(&state.0),
        "kirkwood" => quasiprob::kirkwood(&state.0),
        "margenau_hill" | "mh" => quasiprob::margenau_hill(&state.0),
        "wigner" => quasiprob::wigner(&state.0),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown field kind `{other}`"
            )))
        }
    };
    Ok(Field(field))
}

#[pyclass(name = "JointDistribution", frozen)]
struct Joint(measurement::JointDistribution);

#[pymethods]
impl Joint {
    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    fn conditional_pointer_mean(&self, q: f64) -> PyResult<f64> {
        self.0.conditional_pointer_mean(q).map_err(to_py)
    }

    fn conditional_pointer_means(&self) -> Vec<Option<f64>> {
        self.0.conditional_pointer_means()
    }

    fn extracted_weak_values(&self) -> Vec<Option<f64>> {
        self.0.extracted_weak_values()
    }

    fn pointer_slice(&self, q: f64) -> Vec<f64> {
        self.0.pointer_slice(q).to_vec()
    }

    fn pointer_q(&self) -> Vec<f64> {
        self.0.pointer_grid().q_values()
    }

    fn total(&self) -> f64 {
        self.0.total()
    }
}

/// Exact joint distribution after the coupling `exp(−iε c P)` with a
/// Gaussian pointer of spread `sigma` (or a mixture of `(weight, width)`
/// components in units of `sigma`).
#[pyfunction]
#[pyo3(signature = (state, obs="p2", epsilon=0.01, sigma=1.0, mixture=None, pointer_points=512))]
fn simulate(
    state: &State,
    obs: &str,
    epsilon: f64,
    sigma: f64,
    mixture: Option<Vec<(f64, f64)>>,
    pointer_points: usize,
) -> PyResult<Joint> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(PyValueError::new_err("sigma must be positive"));
    }
    let parts = mixture.unwrap_or_else(|| vec![(1.0, 1.0)]);
    let widest = parts.iter().map(|p| p.1).fold(0.0, f64::max) * sigma;
    let grid = core::QuadratureGrid::symmetric(12.0 * widest, pointer_points).map_err(to_py)?;
    let scaled: Vec<(f64, f64)> = parts.iter().map(|(w, s)| (*w, s * sigma)).collect();
    let pointer = PointerState::gaussian_mixture(&scaled, &grid).map_err(to_py)?;
    measurement::evolve_joint(&state.0, &pointer, &observable(obs)?, epsilon)
        .map(Joint)
        .map_err(to_py)
}

/// Classical Monte-Carlo kick on the Gaussian density with means
/// `(alpha_r, alpha_i)` and vacuum widths. Returns one dict per bin.
#[pyfunction]
#[pyo3(signature = (alpha_r=0.0, alpha_i=0.0, obs="p2", epsilon=0.01, sigma=1.0, samples=1_000_000, seed=0, bins=64))]
#[allow(clippy::too_many_arguments)]
fn simulate_classical(
    py: Python<'_>,
    alpha_r: f64,
    alpha_i: f64,
    obs: &str,
    epsilon: f64,
    sigma: f64,
    samples: usize,
    seed: u64,
    bins: usize,
) -> PyResult<Vec<Py<pyo3::types::PyDict>>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let object = PhaseSpaceDensity::gaussian(alpha_r, alpha_i, s, s).map_err(to_py)?;
    let pointer = PhaseSpaceDensity::gaussian_pointer(sigma, 0.0).map_err(to_py)?;
    let c = PhaseSpaceObservable::from_name(obs).map_err(to_py)?;
    let ensemble =
        classical::sample_product_state(&object, &pointer, samples, seed).map_err(to_py)?;
    let kicked = classical::apply_kick(&ensemble, &c, epsilon).map_err(to_py)?;
    let base = Binning::default_for(&object);
    let binning = Binning::new(base.low, base.high, bins).map_err(to_py)?;
    let reference =
        |q: f64| classical::classical_weak_value(&c, &object, q).map_or(f64::NAN, |v| epsilon * v);
    let stats = classical::conditional_mean_pointer(&kicked, &binning, Some(&reference));
    stats
        .iter()
        .map(|b| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("q_center", b.q_center)?;
            d.set_item("mean_Q", b.mean_pointer_q)?;
            d.set_item("stderr", b.stderr)?;
            d.set_item("count", b.count)?;
            d.set_item("eps_times_cw", b.eps_times_cw)?;
            d.set_item("empty", b.empty)?;
            Ok(d.unbind())
        })
        .collect()
}

/// Conditional expectation of `obs` over a Gaussian phase-space density.
#[pyfunction]
#[pyo3(signature = (q, obs="p2", alpha_r=0.0, alpha_i=0.0))]
fn classical_weak_value(q: f64, obs: &str, alpha_r: f64, alpha_i: f64) -> PyResult<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let object = PhaseSpaceDensity::gaussian(alpha_r, alpha_i, s, s).map_err(to_py)?;
    let c = PhaseSpaceObservable::from_name(obs).map_err(to_py)?;
    classical::classical_weak_value(&c, &object, q).map_err(to_py)
}

#[pymodule]
fn weakval(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<State>()?;
    m.add_class::<Profile>()?;
    m.add_class::<Field>()?;
    m.add_class::<Joint>()?;
    m.add_function(wrap_pyfunction!(weak_value, m)?)?;
    m.add_function(wrap_pyfunction!(weak_energy_relation, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_p2_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(negativity_region, m)?)?;
    m.add_function(wrap_pyfunction!(negativity_probability, m)?)?;
    m.add_function(wrap_pyfunction!(negativity_probability_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(erfc, m)?)?;
    m.add_function(wrap_pyfunction!(quasiprobability, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_classical, m)?)?;
    m.add_function(wrap_pyfunction!(classical_weak_value, m)?)?;
    Ok(())
}
