//! Seeded Monte Carlo study: random games played once under the
//! marginal-contribution rule and once under the anarchy-optimal rule, with
//! per-step statistics of the welfare ratio between the two.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_round, TiePolicy};
use crate::error::{Error, Result};
use crate::game::{Resource, SetCoveringGame};
use crate::rules::{mc_rule, poa_optimal_rule};
use crate::scalar::Scalar;

/// Experiment parameters. Defaults mirror the simulation study: 200 runs of
/// 10 agents over two sets of 10 resources, 4 best-response rounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub runs: usize,
    pub n: usize,
    pub set_size: usize,
    pub rounds: usize,
    pub seed: u64,
    pub tie_policy: TiePolicy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            runs: 200,
            n: 10,
            set_size: 10,
            rounds: 4,
            seed: 0,
            tie_policy: TiePolicy::LowestActionIndex,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.n < 2 || self.set_size == 0 || self.rounds == 0 {
            return Err(Error::InvalidInput(format!(
                "config needs runs >= 1, n >= 2, set_size >= 1, rounds >= 1; got {self:?}"
            )));
        }
        if self.tie_policy == TiePolicy::EnumerateAll {
            return Err(Error::InvalidInput(
                "Monte Carlo runs sample single paths; enumerate-all is not a sampling policy"
                    .into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("config json: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Per-step statistics of `W_MC / W_PoA` across runs, step 0 (all null)
/// through step `n * rounds`. At step 0 the ratio is 1 by convention; steps
/// where only the PoA welfare is zero are excluded and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub excluded: Vec<u64>,
}

impl RatioSeries {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// CSV with columns `step, mean, min, max, excluded_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,mean,min,max,excluded_count\n");
        for step in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                step,
                self.mean[step].render(),
                self.min[step].render(),
                self.max[step].render(),
                self.excluded[step]
            ));
        }
        out
    }

    pub fn summary(&self, cfg: &ExperimentConfig) -> Summary {
        Summary {
            first_round_end_mean: self.mean[cfg.n.min(self.len() - 1)],
            final_mean: *self.mean.last().expect("non-empty series"),
            excluded_total: self.excluded.iter().sum(),
        }
    }
}

/// Headline numbers of a finished experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub first_round_end_mean: f64,
    pub final_mean: f64,
    pub excluded_total: u64,
}

/// Stable per-run seed derivation (splitmix64 of the master seed and index),
/// so runs are independent and insensitive to execution order.
pub fn derive_run_seed(master: u64, run_index: u64) -> u64 {
    let mut z = master.wrapping_add(
        run_index
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One random game: two resource sets of `set_size` each with values drawn
/// uniformly from `[0, 1)`, and per-agent actions `{null, one resource from
/// set 1, one resource from set 2}`. Deterministic in `run_seed`.
///
/// Draw order is fixed: all values for set 1, all values for set 2, then per
/// agent its set-1 pick followed by its set-2 pick.
pub fn random_game(cfg: &ExperimentConfig, run_seed: u64) -> Result<SetCoveringGame<f64>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let mut resources = Vec::with_capacity(2 * cfg.set_size);
    for set in 0..2 {
        for idx in 0..cfg.set_size {
            resources.push(Resource::new(
                format!("s{}r{}", set + 1, idx),
                rng.random::<f64>(),
            ));
        }
    }
    let mut actions = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let first = rng.random_range(0..cfg.set_size) as u32;
        let second = (cfg.set_size + rng.random_range(0..cfg.set_size)) as u32;
        actions.push(vec![vec![], vec![first], vec![second]]);
    }
    SetCoveringGame::new(resources, actions, vec![0; cfg.n])
}

/// Runs the full experiment: for every run the same game is played under
/// both rules with the same tie policy and seed, and the per-step welfare
/// ratios are aggregated across runs in run order (so the output is
/// byte-stable for any worker count).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RatioSeries> {
    cfg.validate()?;
    let steps = cfg.n * cfg.rounds + 1;
    let mc = mc_rule::<f64>(cfg.n)?;
    let poa = poa_optimal_rule(cfg.n, 1e-15)?;

    let per_run: Vec<Vec<Option<f64>>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| -> Result<Vec<Option<f64>>> {
            let run_seed = derive_run_seed(cfg.seed, run);
            let game = random_game(cfg, run_seed)?;
            let mc_path = run_round(&game, &mc, cfg.rounds, cfg.tie_policy, run_seed)?;
            let poa_path = run_round(&game, &poa, cfg.rounds, cfg.tie_policy, run_seed)?;
            let mc_welfare = mc_path.welfare_series(&game)?;
            let poa_welfare = poa_path.welfare_series(&game)?;
            let ratios = mc_welfare
                .iter()
                .zip(&poa_welfare)
                .map(|(&m, &p)| {
                    if p == 0.0 {
                        if m == 0.0 {
                            Some(1.0)
                        } else {
                            None // excluded: positive over zero
                        }
                    } else {
                        Some(m / p)
                    }
                })
                .collect();
            Ok(ratios)
        })
        .collect::<Result<_>>()?;

    let mut mean = Vec::with_capacity(steps);
    let mut min = Vec::with_capacity(steps);
    let mut max = Vec::with_capacity(steps);
    let mut excluded = Vec::with_capacity(steps);
    for step in 0..steps {
        let mut sum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut kept = 0u64;
        let mut dropped = 0u64;
        for run in &per_run {
            match run[step] {
                Some(ratio) => {
                    sum += ratio;
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                    kept += 1;
                }
                None => dropped += 1,
            }
        }
        if kept == 0 {
            mean.push(f64::NAN);
            min.push(f64::NAN);
            max.push(f64::NAN);
        } else {
            mean.push(sum / kept as f64);
            min.push(lo);
            max.push(hi);
        }
        excluded.push(dropped);
    }
    Ok(RatioSeries {
        mean,
        min,
        max,
        excluded,
    })
}

/// Writes the CSV to `path`, creating parent directories.
pub fn write_series(series: &RatioSeries, path: &std::path::Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(path, e))?;
        }
    }
    std::fs::write(path, series.to_csv()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            runs: 8,
            n: 4,
            set_size: 3,
            rounds: 2,
            seed: 11,
            tie_policy: TiePolicy::LowestActionIndex,
        }
    }

    #[test]
    fn random_game_is_deterministic_and_in_range() {
        let cfg = small_cfg();
        let a = random_game(&cfg, 99).unwrap();
        let b = random_game(&cfg, 99).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.resources().len(), 2 * cfg.set_size);
        for r in a.resources() {
            assert!((0.0..1.0).contains(&r.value));
        }
        for agent in 0..cfg.n {
            assert_eq!(a.action_count(agent), 3);
            assert!(a.action(agent, 1)[0] < cfg.set_size as u32);
            assert!(a.action(agent, 2)[0] >= cfg.set_size as u32);
        }
        let c = random_game(&cfg, 100).unwrap();
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    }

    #[test]
    fn paper_scale_game_shape() {
        let cfg = ExperimentConfig::default();
        let game = random_game(&cfg, 1).unwrap();
        assert_eq!(game.resources().len(), 20);
        assert_eq!(game.n(), 10);
    }

    #[test]
    fn experiment_series_shape_and_start() {
        let cfg = small_cfg();
        let series = run_experiment(&cfg).unwrap();
        assert_eq!(series.len(), cfg.n * cfg.rounds + 1);
        assert_eq!(series.mean[0], 1.0);
        assert_eq!(series.min[0], 1.0);
        assert_eq!(series.max[0], 1.0);
        for step in 0..series.len() {
            if series.excluded[step] < cfg.runs as u64 {
                assert!(series.min[step] <= series.mean[step]);
                assert!(series.mean[step] <= series.max[step]);
            }
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let cfg = small_cfg();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let mut other = cfg;
        other.seed = 12;
        let c = run_experiment(&other).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }

    #[test]
    fn csv_has_header_plus_one_line_per_step() {
        let cfg = small_cfg();
        let series = run_experiment(&cfg).unwrap();
        let csv = series.to_csv();
        assert_eq!(csv.lines().count(), series.len() + 1);
        assert!(csv.starts_with("step,mean,min,max,excluded_count\n"));
        let empty = RatioSeries {
            mean: vec![],
            min: vec![],
            max: vec![],
            excluded: vec![],
        };
        assert_eq!(empty.to_csv(), "step,mean,min,max,excluded_count\n");
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_json().unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.runs, 200);
        assert_eq!(back.tie_policy, TiePolicy::LowestActionIndex);
        // defaults fill missing fields
        let partial = ExperimentConfig::from_json(r#"{"runs": 3, "seed": 5}"#).unwrap();
        assert_eq!(partial.runs, 3);
        assert_eq!(partial.n, 10);
        assert!(ExperimentConfig::from_json(r#"{"runs": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"tie_policy": "enumerate-all"}"#).is_err());
    }

    #[test]
    fn welfare_under_mc_is_nondecreasing_within_runs() {
        let cfg = small_cfg();
        let mc = mc_rule::<f64>(cfg.n).unwrap();
        for run in 0..cfg.runs as u64 {
            let game = random_game(&cfg, derive_run_seed(cfg.seed, run)).unwrap();
            let path = run_round(&game, &mc, cfg.rounds, cfg.tie_policy, run).unwrap();
            let series = path.welfare_series(&game).unwrap();
            for pair in series.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-12);
            }
        }
    }
}
