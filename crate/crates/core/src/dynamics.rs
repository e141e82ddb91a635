//! Best responses, the ordered k-round best-response process, exhaustive
//! tie-branch enumeration of reachable end states, Nash detection, and
//! empirical PoB/PoA on concrete games.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{JointAction, SetCoveringGame};
use crate::rules::UtilityRule;
use crate::scalar::Scalar;

/// Default cap on the per-step frontier of distinct profiles during
/// tie-branch enumeration.
pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;

/// How a best-responding agent picks among tied best responses.
///
/// `EnumerateAll` is the only mode valid for exact PoB, which takes a
/// minimum over every tie-consistent end state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    EnumerateAll,
    LowestActionIndex,
    PreferStay,
    SeededRandom,
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "enumerate-all" => Ok(TiePolicy::EnumerateAll),
            "lowest-action-index" => Ok(TiePolicy::LowestActionIndex),
            "prefer-stay" => Ok(TiePolicy::PreferStay),
            "seeded-random" => Ok(TiePolicy::SeededRandom),
            other => Err(Error::Parse(format!("unknown tie policy {other:?}"))),
        }
    }
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TiePolicy::EnumerateAll => "enumerate-all",
            TiePolicy::LowestActionIndex => "lowest-action-index",
            TiePolicy::PreferStay => "prefer-stay",
            TiePolicy::SeededRandom => "seeded-random",
        };
        f.write_str(name)
    }
}

/// One move of a best-response process.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep<S> {
    /// 0-based step index; the acting agent is `step % n`.
    pub step: usize,
    pub agent: usize,
    pub action: u32,
    pub welfare: S,
    pub potential: S,
}

/// A recorded best-response path. `steps.len() == n * k` for a k-round run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub start: JointAction,
    pub steps: Vec<TrajectoryStep<S>>,
    pub end: JointAction,
}

impl<S: Scalar> Trajectory<S> {
    /// CSV export with columns `step, agent, action_index, welfare, potential`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,agent,action_index,welfare,potential\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.step,
                s.agent,
                s.action,
                s.welfare.render(),
                s.potential.render()
            ));
        }
        out
    }

    /// Welfare after each step, prefixed with the start profile's welfare.
    pub fn welfare_series(&self, game: &SetCoveringGame<S>) -> Result<Vec<S>> {
        let mut series = vec![game.welfare(&self.start)?];
        series.extend(self.steps.iter().map(|s| s.welfare.clone()));
        Ok(series)
    }
}

/// The full set of best responses for `agent` against `a_{-agent}`,
/// as sorted action indices. Never empty; includes the null action on ties.
pub fn best_responses<S: Scalar>(
    game: &SetCoveringGame<S>,
    rule: &UtilityRule<S>,
    agent: usize,
    a: &JointAction,
) -> Result<Vec<u32>> {
    game.validate(a)?;
    if agent >= game.n() {
        return Err(Error::InvalidInput(format!("no agent {agent}")));
    }
    // Coverage by everyone else; each candidate adds one on its own resources.
    let mut others = a.clone();
    others = others.with_choice(agent, game.null_index(agent) as u32);
    let base_counts = game.coverage_counts(&others)?;

    let mut best: Option<S> = None;
    let mut arg = Vec::new();
    for action in 0..game.action_count(agent) as u32 {
        let mut utility = S::zero();
        for &r in game.action(agent, action) {
            let coverage = base_counts[r as usize] as usize + 1;
            utility = utility
                + game.resources()[r as usize].value.clone() * rule.value(coverage)?.clone();
        }
        match &best {
            Some(incumbent) if *incumbent > utility => {}
            Some(incumbent) if *incumbent == utility => arg.push(action),
            _ => {
                best = Some(utility);
                arg = vec![action];
            }
        }
    }
    Ok(arg)
}

/// Runs a k-round best-response process from the all-null profile with a
/// deterministic-or-seeded tie policy. Agents act cyclically in index order.
pub fn run_round<S: Scalar>(
    game: &SetCoveringGame<S>,
    rule: &UtilityRule<S>,
    rounds: usize,
    policy: TiePolicy,
    seed: u64,
) -> Result<Trajectory<S>> {
    if policy == TiePolicy::EnumerateAll {
        return Err(Error::Precondition(
            "run_round needs a single-path tie policy; use enumerate_end_states".into(),
        ));
    }
    if rounds == 0 {
        return Err(Error::Precondition("rounds must be at least 1".into()));
    }
    let n = game.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = game.all_null();
    let mut current = start.clone();
    let mut steps = Vec::with_capacity(n * rounds);
    for step in 0..n * rounds {
        let agent = step % n;
        let brs = best_responses(game, rule, agent, &current)?;
        let action = match policy {
            TiePolicy::LowestActionIndex => brs[0],
            TiePolicy::PreferStay => {
                let staying = current.choice(agent);
                if brs.contains(&staying) {
                    staying
                } else {
                    brs[0]
                }
            }
            TiePolicy::SeededRandom => brs[rng.random_range(0..brs.len())],
            TiePolicy::EnumerateAll => unreachable!(),
        };
        current = current.with_choice(agent, action);
        steps.push(TrajectoryStep {
            step,
            agent,
            action,
            welfare: game.welfare(&current)?,
            potential: game.potential(rule, &current)?,
        });
    }
    Ok(Trajectory {
        start,
        steps,
        end: current,
    })
}

/// The exact set `E(k)` of end states reachable by some tie-consistent
/// k-round trajectory, via breadth-first traversal over all tie branches
/// with per-step deduplication of identical profiles.
pub fn enumerate_end_states<S: Scalar>(
    game: &SetCoveringGame<S>,
    rule: &UtilityRule<S>,
    rounds: usize,
) -> Result<BTreeSet<JointAction>> {
    enumerate_end_states_with_cap(game, rule, rounds, DEFAULT_BRANCH_CAP)
}

pub fn enumerate_end_states_with_cap<S: Scalar>(
    game: &SetCoveringGame<S>,
    rule: &UtilityRule<S>,
    rounds: usize,
    cap: usize,
) -> Result<BTreeSet<JointAction>> {
    if rounds == 0 {
        return Err(Error::Precondition("rounds must be at least 1".into()));
    }
    let n = game.n();
    let mut frontier = BTreeSet::from([game.all_null()]);
    for step in 0..n * rounds {
        let agent = step % n;
        let mut next = BTreeSet::new();
        for profile in &frontier {
            for action in best_responses(game, rule, agent, profile)? {
                next.insert(profile.with_choice(agent, action));
            }
            if next.len() > cap {
                return Err(Error::ResourceLimit(format!(
                    "tie-branch frontier exceeded {cap} profiles at step {step}"
                )));
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

/// Side-by-side efficiency numbers for one game. Formula fields hold the
/// class-level closed forms when they apply to (rule, n).
#[derive(Debug, Clone)]
pub struct EfficiencyReport<S> {
    pub n: usize,
    pub k: usize,
    pub pob_empirical: S,
    pub pob_formula: Option<S>,
    pub poa_empirical: Option<S>,
    pub poa_formula: Option<S>,
    /// Worst end state of `E(k)`.
    pub witness_end: JointAction,
    /// Welfare-maximizing profile.
    pub witness_opt: JointAction,
}

/// Exact empirical price of best response:
/// `min_{a in E(k)} W(a) / max_a W(a)`, with witnesses for both sides.
pub fn empirical_pob<S: Scalar>(
    game: &SetCoveringGame<S>,
    rule: &UtilityRule<S>,
    rounds: usize,
) -> Result<EfficiencyReport<S>> {
    let end_states = enumerate_end_states(game, rule, rounds)?;
    let (optimal, witness_opt) = game.optimal_welfare()?;
    if optimal <= S::zero() {
        return Err(Error::UndefinedRatio);
    }
    let mut worst: Option<(S, JointAction)> = None;
    for state in end_states {
        let welfare = game.welfare(&state)?;
        match &worst {
            Some((incumbent, _)) if *incumbent <= welfare => {}
            _ => worst = Some((welfare, state)),
        }
    }
    let (min_welfare, witness_end) = worst.expect("E(k) is never empty");
    Ok(EfficiencyReport {
        n: game.n(),
        k: rounds,
        pob_empirical: min_welfare / optimal,
        pob_formula: crate::rules::pob_one_round(rule, game.n()).ok(),
        poa_empirical: None,
        poa_formula: crate::rules::poa_value(rule, game.n()).ok(),
        witness_end,
        witness_opt,
    })
}

/// Whether every agent's current action is one of its best responses.
pub fn is_nash<S: Scalar>(
    game: &SetCoveringGame<S>,
    rule: &UtilityRule<S>,
    a: &JointAction,
) -> Result<bool> {
    for agent in 0..game.n() {
        if !best_responses(game, rule, agent, a)?.contains(&a.choice(agent)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact empirical price of anarchy: the minimum-welfare Nash equilibrium
/// over exhaustive profile enumeration, divided by the optimal welfare.
/// Returns the ratio and the worst equilibrium.
pub fn empirical_poa<S: Scalar>(
    game: &SetCoveringGame<S>,
    rule: &UtilityRule<S>,
) -> Result<(S, JointAction)> {
    empirical_poa_with_cap(game, rule, crate::game::DEFAULT_ENUMERATION_CAP)
}

pub fn empirical_poa_with_cap<S: Scalar>(
    game: &SetCoveringGame<S>,
    rule: &UtilityRule<S>,
    cap: u128,
) -> Result<(S, JointAction)> {
    let count = game.joint_action_count();
    if count > cap {
        return Err(Error::ResourceLimit(format!(
            "joint action space has {count} profiles, cap is {cap}"
        )));
    }
    let (optimal, _) = game.optimal_welfare_with_cap(cap)?;
    if optimal <= S::zero() {
        return Err(Error::UndefinedRatio);
    }
    let mut worst: Option<(S, JointAction)> = None;
    for profile in game.profiles() {
        if !is_nash(game, rule, &profile)? {
            continue;
        }
        let welfare = game.welfare(&profile)?;
        match &worst {
            Some((incumbent, _)) if *incumbent <= welfare => {}
            _ => worst = Some((welfare, profile)),
        }
    }
    // A finite potential game always has a pure Nash equilibrium.
    let (min_welfare, witness) = worst.ok_or_else(|| {
        Error::Internal("no Nash equilibrium found in a finite potential game".into())
    })?;
    Ok((min_welfare / optimal, witness))
}

/// JSON export of an end-state set with welfare annotations.
pub fn end_states_to_json<S: Scalar>(
    game: &SetCoveringGame<S>,
    states: &BTreeSet<JointAction>,
) -> Result<String> {
    #[derive(Serialize)]
    struct Entry {
        choices: Vec<u32>,
        welfare: String,
    }
    let entries = states
        .iter()
        .map(|state| {
            Ok(Entry {
                choices: state.choices().to_vec(),
                welfare: game.welfare(state)?.render(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    serde_json::to_string_pretty(&entries).map_err(|e| Error::Parse(e.to_string()))
}
