//! Python bindings: the float-mode game types and operations, plus the
//! exact-rational LP oracle and closed forms surfaced as fraction strings.
//!
//! Usage from Python:
//!
//!     import covgame
//!     rule = covgame.mc_rule(3)
//!     game = covgame.build_gf(rule, 2)
//!     covgame.empirical_pob(game, rule, k=2)   # 0.5

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use covgame_core::constructions;
use covgame_core::dynamics;
use covgame_core::error::Error;
use covgame_core::game::{JointAction, Resource, SetCoveringGame};
use covgame_core::lp;
use covgame_core::montecarlo::{self, ExperimentConfig};
use covgame_core::rules::{self, ParetoParameter, UtilityRule};
use covgame_core::scalar::{Rational, Scalar};

fn py_err(err: Error) -> PyErr {
    match err {
        Error::Internal(_) | Error::LpInfeasible | Error::LpUnbounded => {
            PyRuntimeError::new_err(err.to_string())
        }
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// A per-resource payoff schedule f(1..n_max).
#[pyclass(name = "Rule", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRule {
    inner: UtilityRule<f64>,
}

#[pymethods]
impl PyRule {
    /// Builds a rule from explicit values.
    #[new]
    fn new(name: String, values: Vec<f64>) -> PyResult<Self> {
        Ok(PyRule {
            inner: UtilityRule::new(name, values).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn is_nonincreasing(&self) -> bool {
        self.inner.is_nonincreasing()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Rule({:?}, n_max={})",
            self.inner.name(),
            self.inner.n_max()
        )
    }
}

/// A set covering game over valued resources.
#[pyclass(name = "Game", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGame {
    inner: SetCoveringGame<f64>,
}

#[pymethods]
impl PyGame {
    /// Builds a game from (id, value) resources and per-agent actions given
    /// as lists of resource-id lists; `null_index[i]` marks agent i's empty
    /// action.
    #[new]
    fn new(
        resources: Vec<(String, f64)>,
        actions: Vec<Vec<Vec<String>>>,
        null_index: Vec<usize>,
    ) -> PyResult<Self> {
        let resources: Vec<Resource<f64>> = resources
            .into_iter()
            .map(|(id, value)| Resource::new(id, value))
            .collect();
        let index: std::collections::HashMap<&str, u32> = resources
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i as u32))
            .collect();
        let actions = actions
            .iter()
            .map(|agent| {
                agent
                    .iter()
                    .map(|action| {
                        action
                            .iter()
                            .map(|id| {
                                index.get(id.as_str()).copied().ok_or_else(|| {
                                    PyValueError::new_err(format!("unknown resource id {id:?}"))
                                })
                            })
                            .collect::<PyResult<Vec<u32>>>()
                    })
                    .collect::<PyResult<Vec<_>>>()
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyGame {
            inner: SetCoveringGame::new(resources, actions, null_index).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGame {
            inner: SetCoveringGame::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn resources(&self) -> Vec<(String, f64)> {
        self.inner
            .resources()
            .iter()
            .map(|r| (r.id.clone(), r.value))
            .collect()
    }

    fn action_count(&self, agent: usize) -> usize {
        self.inner.action_count(agent)
    }

    fn all_null(&self) -> Vec<u32> {
        self.inner.all_null().choices().to_vec()
    }

    fn welfare(&self, choices: Vec<u32>) -> PyResult<f64> {
        self.inner
            .welfare(&JointAction::new(choices))
            .map_err(py_err)
    }

    fn coverage_count(&self, choices: Vec<u32>, resource_id: &str) -> PyResult<usize> {
        self.inner
            .coverage_count(&JointAction::new(choices), resource_id)
            .map_err(py_err)
    }

    fn utility(&self, rule: &PyRule, agent: usize, choices: Vec<u32>) -> PyResult<f64> {
        self.inner
            .utility(&rule.inner, agent, &JointAction::new(choices))
            .map_err(py_err)
    }

    fn potential(&self, rule: &PyRule, choices: Vec<u32>) -> PyResult<f64> {
        self.inner
            .potential(&rule.inner, &JointAction::new(choices))
            .map_err(py_err)
    }

    fn optimal_welfare(&self) -> PyResult<(f64, Vec<u32>)> {
        let (value, witness) = self.inner.optimal_welfare().map_err(py_err)?;
        Ok((value, witness.choices().to_vec()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Game(n={}, resources={})",
            self.inner.n(),
            self.inner.resources().len()
        )
    }
}

/// Marginal contribution rule: f = (1, 0, 0, ...).
#[pyfunction]
fn mc_rule(n_max: usize) -> PyResult<PyRule> {
    Ok(PyRule {
        inner: rules::mc_rule(n_max).map_err(py_err)?,
    })
}

/// The PoA-optimal rule from factorial tail sums.
#[pyfunction]
#[pyo3(signature = (n_max, tol = rules::DEFAULT_POA_RULE_TOL))]
fn poa_optimal_rule(n_max: usize, tol: f64) -> PyResult<PyRule> {
    Ok(PyRule {
        inner: rules::poa_optimal_rule(n_max, tol).map_err(py_err)?,
    })
}

/// The Pareto rule f^X for slack x >= 0.
#[pyfunction]
fn pareto_rule(x: f64, n_max: usize) -> PyResult<PyRule> {
    let p = ParetoParameter::from_slack(x).map_err(py_err)?;
    Ok(PyRule {
        inner: rules::pareto_rule(&p, n_max).map_err(py_err)?,
    })
}

/// Closed-form one-round price of best response.
#[pyfunction]
fn pob_one_round(rule: &PyRule, n: usize) -> PyResult<f64> {
    rules::pob_one_round(&rule.inner, n).map_err(py_err)
}

/// Closed-form price of anarchy.
#[pyfunction]
fn poa_value(rule: &PyRule, n: usize) -> PyResult<f64> {
    rules::poa_value(&rule.inner, n).map_err(py_err)
}

/// Optimal (poa, pob) pair at PoA target c in [1/2, 1 - 1/e].
#[pyfunction]
fn frontier_point(c: f64) -> PyResult<(f64, f64)> {
    let point = rules::frontier_point(c).map_err(py_err)?;
    Ok((point.poa, point.pob))
}

/// Maps `frontier_point` over a grid of targets.
#[pyfunction]
fn frontier_sweep(grid: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    Ok(rules::frontier_sweep(&grid)
        .map_err(py_err)?
        .into_iter()
        .map(|p| (p.poa, p.pob))
        .collect())
}

/// The two-agent construction with optimal welfare 2 and a reachable
/// welfare-1 end state for every number of rounds.
#[pyfunction]
fn build_gf(rule: &PyRule, n: usize) -> PyResult<PyGame> {
    Ok(PyGame {
        inner: constructions::build_gf(&rule.inner, n).map_err(py_err)?,
    })
}

/// The one-round worst-case construction attaining the closed-form bound.
#[pyfunction]
fn worst_case_one_round(rule: &PyRule, n: usize) -> PyResult<PyGame> {
    Ok(PyGame {
        inner: constructions::worst_case_one_round(&rule.inner, n).map_err(py_err)?,
    })
}

/// The full best-response set of `agent` against the rest of the profile.
#[pyfunction]
fn best_responses(
    game: &PyGame,
    rule: &PyRule,
    agent: usize,
    choices: Vec<u32>,
) -> PyResult<Vec<u32>> {
    dynamics::best_responses(&game.inner, &rule.inner, agent, &JointAction::new(choices))
        .map_err(py_err)
}

/// (step, agent, action, welfare, potential)
type StepRow = (usize, usize, u32, f64, f64);

/// Runs k rounds from all-null; returns (step, agent, action, welfare,
/// potential) tuples.
#[pyfunction]
#[pyo3(signature = (game, rule, k, policy = "lowest-action-index", seed = 0))]
fn run_round(
    game: &PyGame,
    rule: &PyRule,
    k: usize,
    policy: &str,
    seed: u64,
) -> PyResult<Vec<StepRow>> {
    let policy: dynamics::TiePolicy = policy.parse().map_err(py_err)?;
    let trajectory =
        dynamics::run_round(&game.inner, &rule.inner, k, policy, seed).map_err(py_err)?;
    Ok(trajectory
        .steps
        .iter()
        .map(|s| (s.step, s.agent, s.action, s.welfare, s.potential))
        .collect())
}

/// Every tie-consistent end state after k rounds.
#[pyfunction]
fn enumerate_end_states(game: &PyGame, rule: &PyRule, k: usize) -> PyResult<Vec<Vec<u32>>> {
    Ok(dynamics::enumerate_end_states(&game.inner, &rule.inner, k)
        .map_err(py_err)?
        .into_iter()
        .map(|state| state.choices().to_vec())
        .collect())
}

/// Exact empirical PoB: worst end state over optimal welfare.
#[pyfunction]
fn empirical_pob(game: &PyGame, rule: &PyRule, k: usize) -> PyResult<f64> {
    Ok(dynamics::empirical_pob(&game.inner, &rule.inner, k)
        .map_err(py_err)?
        .pob_empirical)
}

/// Exact empirical PoA: worst Nash welfare over optimal welfare.
#[pyfunction]
fn empirical_poa(game: &PyGame, rule: &PyRule) -> PyResult<f64> {
    Ok(dynamics::empirical_poa(&game.inner, &rule.inner)
        .map_err(py_err)?
        .0)
}

/// Whether the profile is a Nash equilibrium.
#[pyfunction]
fn is_nash(game: &PyGame, rule: &PyRule, choices: Vec<u32>) -> PyResult<bool> {
    dynamics::is_nash(&game.inner, &rule.inner, &JointAction::new(choices)).map_err(py_err)
}

/// Exact-rational LP value of the one-round PoB for a rule given as
/// fraction/decimal strings; returns a fraction string.
#[pyfunction]
fn lp_pob(values: Vec<String>, n: usize) -> PyResult<String> {
    let values = values
        .iter()
        .map(|v| Rational::parse_number(v))
        .collect::<Result<Vec<_>, _>>()
        .map_err(py_err)?;
    let rule = UtilityRule::new("custom", values).map_err(py_err)?;
    Ok(lp::lp_pob(&rule, n).map_err(py_err)?.render())
}

/// Runs the Monte Carlo experiment; returns per-step lists
/// {"mean", "min", "max", "excluded"}.
#[pyfunction]
#[pyo3(signature = (runs = 200, n = 10, set_size = 10, rounds = 4, seed = 0))]
fn run_experiment<'py>(
    py: Python<'py>,
    runs: usize,
    n: usize,
    set_size: usize,
    rounds: usize,
    seed: u64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    use pyo3::types::PyDict;
    let cfg = ExperimentConfig {
        runs,
        n,
        set_size,
        rounds,
        seed,
        tie_policy: dynamics::TiePolicy::LowestActionIndex,
    };
    let series = montecarlo::run_experiment(&cfg).map_err(py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("mean", series.mean.clone())?;
    dict.set_item("min", series.min.clone())?;
    dict.set_item("max", series.max.clone())?;
    dict.set_item("excluded", series.excluded.clone())?;
    Ok(dict)
}

#[pymodule]
fn covgame(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRule>()?;
    m.add_class::<PyGame>()?;
    m.add_function(wrap_pyfunction!(mc_rule, m)?)?;
    m.add_function(wrap_pyfunction!(poa_optimal_rule, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_rule, m)?)?;
    m.add_function(wrap_pyfunction!(pob_one_round, m)?)?;
    m.add_function(wrap_pyfunction!(poa_value, m)?)?;
    m.add_function(wrap_pyfunction!(frontier_point, m)?)?;
    m.add_function(wrap_pyfunction!(frontier_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(build_gf, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_one_round, m)?)?;
    m.add_function(wrap_pyfunction!(best_responses, m)?)?;
    m.add_function(wrap_pyfunction!(run_round, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_end_states, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_pob, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_poa, m)?)?;
    m.add_function(wrap_pyfunction!(is_nash, m)?)?;
    m.add_function(wrap_pyfunction!(lp_pob, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
