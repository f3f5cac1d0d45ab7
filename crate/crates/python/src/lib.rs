//! Python bindings. Sessions cross the boundary as `(onsets, T)` pairs with
//! times in minutes; parameters as `{name: value}` dicts.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tpplab::evaluate::LoglikMatrix;
use tpplab::infer::{ChainConfig, PriorSpec, SamplerKind};
use tpplab::simulate::SimConfig;
use tpplab::{Dataset, EventSequence, ModelFamily, TppError};

fn err(e: TppError) -> PyErr {
    match e {
        TppError::Explosion { .. } | TppError::Sampler(_) | TppError::Domain(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn family(s: &str) -> PyResult<ModelFamily> {
    s.parse().map_err(err)
}

fn sequence(id: String, onsets: Vec<f64>, duration: f64) -> PyResult<EventSequence> {
    EventSequence::new(id, onsets, duration).map_err(err)
}

fn dataset(sessions: Vec<(Vec<f64>, f64)>) -> PyResult<Dataset> {
    let seqs = sessions
        .into_iter()
        .enumerate()
        .map(|(i, (on, t))| sequence(format!("s{i}"), on, t))
        .collect::<PyResult<Vec<_>>>()?;
    Dataset::new(seqs).map_err(err)
}

/// Constraint-checked parameters of one model family.
#[pyclass(name = "ParamSet", module = "tpplab_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyParamSet {
    inner: tpplab::ParamSet,
}

#[pymethods]
impl PyParamSet {
    #[new]
    fn new(family_name: &str, params: BTreeMap<String, f64>) -> PyResult<Self> {
        let inner = tpplab::ParamSet::from_named(family(family_name)?, &params).map_err(err)?;
        Ok(PyParamSet { inner })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().tag()
    }

    #[getter]
    fn names(&self) -> Vec<&'static str> {
        self.inner.family().param_names().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn as_dict(&self) -> BTreeMap<&'static str, f64> {
        self.inner.named().into_iter().collect()
    }

    /// λ*(t) given the onsets strictly before `t`.
    fn intensity(&self, onsets: Vec<f64>, duration: f64, t: f64) -> PyResult<f64> {
        Ok(self.inner.intensity(&sequence("s".into(), onsets, duration)?, t))
    }

    /// Λ*(t) = ∫₀ᵗ λ*(s) ds.
    fn cumulative_intensity(&self, onsets: Vec<f64>, duration: f64, t: f64) -> PyResult<f64> {
        Ok(self.inner.cumulative_intensity(&sequence("s".into(), onsets, duration)?, t))
    }

    fn log_likelihood(&self, onsets: Vec<f64>, duration: f64) -> PyResult<f64> {
        Ok(self.inner.log_likelihood(&sequence("s".into(), onsets, duration)?))
    }

    fn grad_log_likelihood(&self, onsets: Vec<f64>, duration: f64) -> PyResult<Vec<f64>> {
        self.inner.grad_log_likelihood(&sequence("s".into(), onsets, duration)?).map_err(err)
    }

    /// `(value, regime)`; raises for non-Hawkes families.
    fn branching_factor(&self) -> PyResult<(f64, String)> {
        let b = self.inner.branching_factor().map_err(err)?;
        Ok((b.value, format!("{:?}", b.regime).to_lowercase()))
    }

    fn __repr__(&self) -> String {
        self.inner.to_string()
    }
}

/// Simulates one session per duration by Ogata thinning.
#[pyfunction]
#[pyo3(signature = (params, durations, seed, max_events = tpplab::simulate::DEFAULT_MAX_EVENTS))]
fn simulate(params: &PyParamSet, durations: Vec<f64>, seed: u64, max_events: usize) -> PyResult<Vec<Vec<f64>>> {
    let cfg = SimConfig {
        max_events,
        ..SimConfig::new(seed)
    };
    let ds = tpplab::simulate::simulate_dataset(&params.inner, &durations, &cfg).map_err(err)?;
    Ok(ds.sequences.into_iter().map(|s| s.onsets).collect())
}

/// Samples the posterior with NUTS. Returns a dict with `names`, `draws`
/// (chain × draw × parameter), `diagnostics` and `divergences`.
#[pyfunction]
#[pyo3(signature = (
    sessions, family_name, chains = 4, warmup = 6000, draws = 4000,
    target_accept = 0.99, max_depth = 10, seed = 0, prior_json = None
))]
#[allow(clippy::too_many_arguments)]
fn fit<'py>(
    py: Python<'py>,
    sessions: Vec<(Vec<f64>, f64)>,
    family_name: &str,
    chains: usize,
    warmup: usize,
    draws: usize,
    target_accept: f64,
    max_depth: usize,
    seed: u64,
    prior_json: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let fam = family(family_name)?;
    let prior = match prior_json {
        Some(s) => PriorSpec::from_json(s).map_err(err)?,
        None => PriorSpec::default_for(fam),
    };
    if prior.family != fam {
        return Err(PyValueError::new_err(format!("prior is for {}, not {fam}", prior.family)));
    }
    let ds = dataset(sessions)?;
    let cfg = ChainConfig {
        n_chains: chains,
        warmup,
        draws,
        target_accept,
        max_depth,
        seed,
        sampler: SamplerKind::Nuts,
    };
    let s = py.detach(|| tpplab::infer::run_nuts(&ds, &prior, &cfg)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("family", fam.tag())?;
    out.set_item("names", fam.param_names().to_vec())?;
    out.set_item("draws", s.draws.clone())?;
    out.set_item("divergences", s.divergences)?;
    let diags = s
        .diagnostics
        .iter()
        .map(|d| {
            let e = PyDict::new(py);
            e.set_item("name", &d.name)?;
            e.set_item("mean", d.mean)?;
            e.set_item("sd", d.sd)?;
            e.set_item("q5", d.q5)?;
            e.set_item("median", d.median)?;
            e.set_item("q95", d.q95)?;
            e.set_item("r_hat", d.r_hat)?;
            e.set_item("ess_bulk", d.ess_bulk)?;
            e.set_item("ess_tail", d.ess_tail)?;
            e.set_item("mcse_mean", d.mcse_mean)?;
            e.set_item("mcse_sd", d.mcse_sd)?;
            Ok(e)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("diagnostics", diags)?;
    Ok(out)
}

/// Time-rescaled inter-onset gaps; Exp(1) under a correct model.
#[pyfunction]
fn rtc_gaps(params: &PyParamSet, onsets: Vec<f64>, duration: f64) -> PyResult<Vec<f64>> {
    Ok(tpplab::diagnose::rtc_gaps(&params.inner, &sequence("s".into(), onsets, duration)?))
}

/// One-sample KS test against Exp(1): `(statistic, p_value)`.
#[pyfunction]
fn ks_exp1(gaps: Vec<f64>) -> (f64, f64) {
    let r = tpplab::stats::ks_test_exp1(&gaps);
    (r.statistic, r.p_value)
}

/// N(T) − Λ*(T).
#[pyfunction]
fn raw_residual(params: &PyParamSet, onsets: Vec<f64>, duration: f64) -> PyResult<f64> {
    Ok(tpplab::diagnose::raw_residual(&params.inner, &sequence("s".into(), onsets, duration)?).residual)
}

#[pyfunction]
fn wasserstein(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    tpplab::diagnose::wasserstein_1d(&a, &b).map_err(err)
}

#[pyfunction]
fn ripley_k(onsets: Vec<f64>, duration: f64, lags: Vec<f64>) -> PyResult<Vec<f64>> {
    tpplab::diagnose::ripley_k(&sequence("s".into(), onsets, duration)?, &lags).map_err(err)
}

#[pyfunction]
fn roc_auc(labels: Vec<bool>, scores: Vec<f64>) -> PyResult<Option<f64>> {
    if labels.len() != scores.len() {
        return Err(PyValueError::new_err("labels and scores differ in length"));
    }
    Ok(tpplab::evaluate::roc_auc(&labels, &scores))
}

/// PSIS-LOO from a draws × sessions log-likelihood matrix.
#[pyfunction]
fn psis_loo<'py>(py: Python<'py>, loglik: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let n = loglik.first().map_or(0, Vec::len);
    if loglik.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("log-likelihood matrix is ragged"));
    }
    let m = LoglikMatrix {
        session_ids: (0..n).map(|i| format!("s{i}")).collect(),
        counts: vec![0; n],
        values: loglik,
        nonfinite: Vec::new(),
    };
    let r = tpplab::evaluate::psis_loo(&m).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("elpd", r.elpd)?;
    out.set_item("se", r.se)?;
    out.set_item("p_loo", r.p_loo)?;
    out.set_item("pointwise", r.sessions.iter().map(|s| s.elpd).collect::<Vec<_>>())?;
    out.set_item("k_hat", r.sessions.iter().map(|s| s.k_hat).collect::<Vec<_>>())?;
    out.set_item("category", r.sessions.iter().map(|s| s.category.as_str()).collect::<Vec<_>>())?;
    Ok(out)
}

/// Posterior-predictive count distribution on `(t_start, t_start + dt]`.
#[pyfunction]
#[pyo3(signature = (draws, onsets, duration, t_start, dt, n_traj = 250, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn forecast<'py>(
    py: Python<'py>,
    draws: Vec<PyParamSet>,
    onsets: Vec<f64>,
    duration: f64,
    t_start: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let seq = sequence("s".into(), onsets, duration)?;
    let draws: Vec<tpplab::ParamSet> = draws.into_iter().map(|d| d.inner).collect();
    let fc = tpplab::simulate::forecast_counts(&draws, &seq, t_start, dt, n_traj, &SimConfig::new(seed)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("counts", fc.counts.clone())?;
    out.set_item("quantiles", fc.quantiles.to_vec())?;
    out.set_item("median", fc.median())?;
    out.set_item("mean", fc.mean())?;
    out.set_item("observed", seq.count_in(t_start, t_start + dt))?;
    Ok(out)
}

#[pymodule]
fn tpplab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add(
        "FAMILIES",
        ModelFamily::ALL.iter().map(|f| f.tag()).collect::<Vec<_>>(),
    )?;
    m.add_class::<PyParamSet>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(rtc_gaps, m)?)?;
    m.add_function(wrap_pyfunction!(ks_exp1, m)?)?;
    m.add_function(wrap_pyfunction!(raw_residual, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(ripley_k, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(psis_loo, m)?)?;
    m.add_function(wrap_pyfunction!(forecast, m)?)?;
    Ok(())
}
