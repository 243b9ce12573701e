//! Python bindings: games and their equilibria, learner steps, seeded
//! experiments and the mean ODEs.

use std::path::PathBuf;

use codipas::config::Overrides;
use codipas::equilibrium::solve_logit_default;
use codipas::learners::{softmax as softmax_map, step, StepParams};
use codipas::sim::{column_names, records_from_ode, run_seeds, Record};
use codipas::{
    DynamicsSystem, Error, Experiment, ExperimentConfig, GameSpec, LearnerState, MixedStrategy, NoiseModel, OdeState,
    Player, Scheme, SystemKind,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Dimension { .. } | Error::ActionOutOfRange { .. } | Error::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn strategy(p: Vec<f64>) -> PyResult<MixedStrategy> {
    MixedStrategy::new(p).map_err(py_err)
}

fn player(index: usize) -> PyResult<Player> {
    match index {
        1 => Ok(Player::P1),
        2 => Ok(Player::P2),
        _ => Err(PyValueError::new_err(format!("player must be 1 or 2, got {index}"))),
    }
}

/// A two-player zero-sum matrix game. `matrix[i][j]` is player 1's payoff;
/// player 2 receives `c - U`. `noise` is the `(lo, hi)` of additive uniform
/// noise.
#[pyclass(name = "Game", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGame {
    spec: GameSpec,
}

#[pyclass(name = "Saddle", frozen, get_all)]
struct PySaddle {
    f_star: Vec<f64>,
    g_star: Vec<f64>,
    value: f64,
}

#[pyclass(name = "LogitEquilibrium", frozen, get_all)]
struct PyLogit {
    f: Vec<f64>,
    g: Vec<f64>,
    epsilon: f64,
    residual: f64,
    iterations: u64,
    converged: bool,
}

#[pymethods]
impl PyGame {
    #[new]
    #[pyo3(signature = (matrix, c = 0.0, noise = None))]
    fn new(matrix: Vec<Vec<f64>>, c: f64, noise: Option<(f64, f64)>) -> PyResult<Self> {
        let noise = match noise {
            Some((lo, hi)) => NoiseModel::uniform(lo, hi).map_err(py_err)?,
            None => NoiseModel::None,
        };
        let spec = GameSpec::from_rows(matrix).map_err(py_err)?.with_constant(c).with_noise(noise);
        Ok(Self { spec })
    }

    /// `(rows, cols)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.spec.matrix.rows(), self.spec.matrix.cols())
    }

    fn saddle(&self) -> PyResult<PySaddle> {
        let s = codipas::solve_saddle(&self.spec).map_err(py_err)?;
        Ok(PySaddle { f_star: s.f_star.into_vec(), g_star: s.g_star.into_vec(), value: s.value })
    }

    fn logit(&self, epsilon: f64) -> PyResult<PyLogit> {
        let l = solve_logit_default(&self.spec, epsilon).map_err(py_err)?;
        Ok(PyLogit {
            f: l.f_eps.into_vec(),
            g: l.g_eps.into_vec(),
            epsilon: l.epsilon,
            residual: l.residual,
            iterations: l.iterations,
            converged: l.converged,
        })
    }

    fn exploitability(&self, f: Vec<f64>, g: Vec<f64>) -> PyResult<f64> {
        self.spec.exploitability(&strategy(f)?, &strategy(g)?).map_err(py_err)
    }

    /// Expected payoff to player 1.
    fn expected_value(&self, f: Vec<f64>, g: Vec<f64>) -> PyResult<f64> {
        self.spec.expected_value(&strategy(f)?, &strategy(g)?).map_err(py_err)
    }

    /// Expected payoff of each pure action of `player` (1 or 2) against `opponent`.
    fn payoff_vector(&self, player_index: usize, opponent: Vec<f64>) -> PyResult<Vec<f64>> {
        self.spec.payoff_vector(player(player_index)?, &strategy(opponent)?).map_err(py_err)
    }
}

/// Recorded rows in the CSV column order (without `t`).
#[pyclass(name = "Trajectory", frozen, get_all)]
struct PyTrajectory {
    seed: Option<u64>,
    columns: Vec<String>,
    t: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl PyTrajectory {
    fn from_records(seed: Option<u64>, records: &[Record]) -> Self {
        let (n1, n2) = records.first().map_or((0, 0), |r| (r.f.len(), r.g.len()));
        Self {
            seed,
            columns: column_names(n1, n2),
            t: records.iter().map(|r| r.t).collect(),
            rows: records.iter().map(Record::values).collect(),
        }
    }
}

#[pymethods]
impl PyTrajectory {
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| PyValueError::new_err(format!("no column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    fn __len__(&self) -> usize {
        self.t.len()
    }
}

/// A validated experiment file.
#[pyclass(name = "Experiment")]
struct PyExperiment {
    exp: Experiment,
    warnings: Vec<String>,
}

impl PyExperiment {
    fn build(
        mut cfg: ExperimentConfig,
        horizon: Option<u64>,
        seeds: Option<Vec<u64>>,
        epsilon: Option<f64>,
    ) -> PyResult<Self> {
        cfg.apply(&Overrides { horizon, seeds, epsilon });
        let (exp, warnings) = cfg.experiment_with_warnings().map_err(py_err)?;
        Ok(Self { exp, warnings })
    }
}

#[pymethods]
impl PyExperiment {
    #[staticmethod]
    #[pyo3(signature = (path, horizon = None, seeds = None, epsilon = None))]
    fn from_file(path: PathBuf, horizon: Option<u64>, seeds: Option<Vec<u64>>, epsilon: Option<f64>) -> PyResult<Self> {
        Self::build(ExperimentConfig::load(path).map_err(py_err)?, horizon, seeds, epsilon)
    }

    #[staticmethod]
    #[pyo3(signature = (text, horizon = None, seeds = None, epsilon = None))]
    fn from_toml(text: &str, horizon: Option<u64>, seeds: Option<Vec<u64>>, epsilon: Option<f64>) -> PyResult<Self> {
        Self::build(ExperimentConfig::from_toml_str(text).map_err(py_err)?, horizon, seeds, epsilon)
    }

    #[getter]
    fn game(&self) -> PyGame {
        PyGame { spec: self.exp.spec.clone() }
    }

    #[getter]
    fn horizon(&self) -> u64 {
        self.exp.horizon
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.exp.seeds.clone()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.warnings.clone()
    }

    /// One trajectory per seed, in seed order. Releases the GIL while running.
    #[pyo3(signature = (jobs = None))]
    fn run(&self, py: Python<'_>, jobs: Option<usize>) -> PyResult<Vec<PyTrajectory>> {
        let runs = py.detach(|| run_seeds(&self.exp, jobs)).map_err(py_err)?;
        Ok(runs.iter().map(|t| PyTrajectory::from_records(Some(t.seed), &t.records)).collect())
    }
}

/// Integrates a mean ODE by name; see `SYSTEMS`.
#[pyfunction]
#[pyo3(signature = (game, system, epsilon = 0.05, k1 = 1.0, k2 = 1.0, dt = 1e-3, t_end = 10.0, t0 = None, f0 = None, g0 = None, stride = 100))]
#[allow(clippy::too_many_arguments)]
fn integrate(
    py: Python<'_>,
    game: &PyGame,
    system: &str,
    epsilon: f64,
    k1: f64,
    k2: f64,
    dt: f64,
    t_end: f64,
    t0: Option<f64>,
    f0: Option<Vec<f64>>,
    g0: Option<Vec<f64>>,
    stride: usize,
) -> PyResult<PyTrajectory> {
    let (n1, n2) = (game.spec.matrix.rows(), game.spec.matrix.cols());
    let f0 = f0.map(strategy).transpose()?.unwrap_or_else(|| MixedStrategy::uniform(n1));
    let g0 = g0.map(strategy).transpose()?.unwrap_or_else(|| MixedStrategy::uniform(n2));
    let kind = SystemKind::from_name(system, epsilon, k1, k2, Some(f0.clone()), n1).map_err(py_err)?;
    let sys = DynamicsSystem::new(kind, game.spec.clone()).map_err(py_err)?;
    let t0 = t0.unwrap_or(if system == "composite_T2" { dt } else { 0.0 });
    let mut init = OdeState::new(f0, g0).at_time(t0);
    if sys.carries_estimates() {
        init = init.with_estimates(vec![0.0; n1]);
    }
    let records = py
        .detach(|| sys.integrate(&init, t_end, dt, stride).and_then(|traj| records_from_ode(&game.spec, &traj)))
        .map_err(py_err)?;
    Ok(PyTrajectory::from_records(None, &records))
}

/// Logit map `softmax(u / epsilon)`.
#[pyfunction]
fn softmax(u: Vec<f64>, epsilon: f64) -> PyResult<Vec<f64>> {
    Ok(softmax_map(&u, epsilon).map_err(py_err)?.into_vec())
}

/// One update of `scheme` after playing `action` and observing `payoff`.
/// Returns the new `(strategy, estimates)`.
#[pyfunction]
#[pyo3(signature = (scheme, strategy, estimates, action, payoff, lam, mu = 0.0, epsilon = 0.05, rl3_n = 1.0, rl3_c = None))]
#[allow(clippy::too_many_arguments)]
fn learner_step(
    scheme: &str,
    strategy: Vec<f64>,
    estimates: Vec<f64>,
    action: usize,
    payoff: f64,
    lam: f64,
    mu: f64,
    epsilon: f64,
    rl3_n: f64,
    rl3_c: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let scheme: Scheme = scheme.parse().map_err(py_err)?;
    if scheme == Scheme::RL3 && rl3_c.is_none() {
        return Err(PyValueError::new_err("RL3 needs the payoff bound rl3_c"));
    }
    let state = LearnerState::new(MixedStrategy::new(strategy).map_err(py_err)?, estimates).map_err(py_err)?;
    let params = StepParams { lambda: lam, mu, epsilon, rl3_n, rl3_c: rl3_c.unwrap_or(1.0) };
    let next = step(scheme, &state, action, payoff, &params).map_err(py_err)?;
    Ok((next.strategy.into_vec(), next.estimates))
}

#[pymodule]
fn codipas_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_class::<PySaddle>()?;
    m.add_class::<PyLogit>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(learner_step, m)?)?;
    m.add("SYSTEMS", SystemKind::NAMES.to_vec())?;
    Ok(())
}
