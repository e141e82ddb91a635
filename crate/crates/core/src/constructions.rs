//! Worst-case game instances whose dynamics achieve the closed-form bounds,
//! plus a brute-force search over small game families as an independent
//! check that no game beats the class bound.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{empirical_pob, run_round, TiePolicy, Trajectory};
use crate::error::{Error, Result};
use crate::game::{JointAction, Resource, SetCoveringGame};
use crate::rules::{pob_one_round, UtilityRule};
use crate::scalar::Scalar;

/// Default cap on the number of candidate games a family search may visit.
pub const DEFAULT_SEARCH_CAP: u128 = 2_000_000;

/// Outcome of verifying a construction against its predicted bound.
#[derive(Debug, Clone)]
pub struct ConstructionReport<S> {
    pub game: SetCoveringGame<S>,
    pub predicted: S,
    pub achieved: S,
    pub matched: bool,
    /// The adversarial lowest-index trajectory on the construction.
    pub witness: Trajectory<S>,
}

fn values_match<S: Scalar>(a: &S, b: &S) -> bool {
    if S::EXACT {
        a == b
    } else {
        let (a, b) = (a.to_f64(), b.to_f64());
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }
}

/// The one-round worst case: a shared resource `r1` of value 1 that every
/// agent can take, plus per-agent alternatives valued `f(i)/f(1)` so that
/// agent `i` is exactly indifferent after `i - 1` agents have piled onto
/// `r1`. Agent `n` has only `r1` and the null action. The `r1` action comes
/// first so lowest-index tie-breaking walks the bad path.
///
/// Applicable when `min_{j<=n} f(j) = f(n)`, which every non-increasing rule
/// satisfies; otherwise the optimum would not match the closed form.
pub fn worst_case_one_round<S: Scalar>(
    rule: &UtilityRule<S>,
    n: usize,
) -> Result<SetCoveringGame<S>> {
    if n < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 agents, got {n}"
        )));
    }
    if n > rule.n_max() {
        return Err(Error::Precondition(format!(
            "{}: n = {n} exceeds rule n_max = {}",
            rule.name(),
            rule.n_max()
        )));
    }
    let f1 = rule.value(1)?.clone();
    let f_last = rule.value(n)?.clone();
    for j in 1..=n {
        if *rule.value(j)? < f_last {
            return Err(Error::ConstructionInapplicable(format!(
                "{}: f({j}) < f({n}), so min f over 1..{n} is not attained at j = {n}",
                rule.name()
            )));
        }
    }

    let mut resources = vec![Resource::new("r1", S::one())];
    for i in 1..n {
        resources.push(Resource::new(
            format!("alt{i}"),
            rule.value(i)?.clone() / f1.clone(),
        ));
    }
    let mut actions = Vec::with_capacity(n);
    let mut null_index = Vec::with_capacity(n);
    for i in 1..n {
        actions.push(vec![vec![0], vec![i as u32], vec![]]);
        null_index.push(2);
    }
    actions.push(vec![vec![0], vec![]]);
    null_index.push(1);
    SetCoveringGame::new(resources, actions, null_index)
}

/// Builds the one-round worst case and checks that its exact empirical PoB
/// equals the closed form.
pub fn verify_worst_case<S: Scalar>(
    rule: &UtilityRule<S>,
    n: usize,
) -> Result<ConstructionReport<S>> {
    let game = worst_case_one_round(rule, n)?;
    let predicted = pob_one_round(rule, n)?;
    let report = empirical_pob(&game, rule, 1)?;
    let achieved = report.pob_empirical;
    let witness = run_round(&game, rule, 1, TiePolicy::LowestActionIndex, 0)?;
    Ok(ConstructionReport {
        matched: values_match(&predicted, &achieved),
        game,
        predicted,
        achieved,
        witness,
    })
}

/// The two-agent construction showing PoB <= 1/2 for every rule and every
/// number of rounds: resources `r1, r2` of value 1, `r3` of value `f(2)`,
/// and a zero-value `r4` for padding agents beyond the first two.
///
/// Agent 1 chooses among `{r1}, {r1}, {r2}` (the duplicate keeps the
/// adversarial switch available), agent 2 among `{r3}, {r1}, {r1}`; agents
/// 3..n only have `{r4}`. Optimal welfare is 2 while a tie-consistent path
/// parks both agents on `r1` in the final round, for welfare 1.
pub fn build_gf<S: Scalar>(rule: &UtilityRule<S>, n: usize) -> Result<SetCoveringGame<S>> {
    if n < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 agents, got {n}"
        )));
    }
    let f2 = rule.value(2)?.clone();
    let resources = vec![
        Resource::new("r1", S::one()),
        Resource::new("r2", S::one()),
        Resource::new("r3", f2),
        Resource::new("r4", S::zero()),
    ];
    let mut actions = vec![
        vec![vec![0], vec![0], vec![1], vec![]],
        vec![vec![2], vec![0], vec![0], vec![]],
    ];
    let mut null_index = vec![3, 3];
    for _ in 2..n {
        actions.push(vec![vec![], vec![3]]);
        null_index.push(0);
    }
    SetCoveringGame::new(resources, actions, null_index)
}

/// Builds the two-agent construction and checks its k-round empirical PoB
/// against the predicted 1/2 (exact for rules with `f(1) = 1`).
pub fn verify_gf<S: Scalar>(
    rule: &UtilityRule<S>,
    n: usize,
    rounds: usize,
) -> Result<ConstructionReport<S>> {
    let game = build_gf(rule, n)?;
    let predicted = S::from_ratio(1, 2);
    let report = empirical_pob(&game, rule, rounds)?;
    let achieved = report.pob_empirical;
    let witness = run_round(&game, rule, rounds, TiePolicy::LowestActionIndex, 0)?;
    Ok(ConstructionReport {
        matched: values_match(&predicted, &achieved),
        game,
        predicted,
        achieved,
        witness,
    })
}

/// A finite family of small games to search exhaustively: every game with
/// `agents` players, up to `max_actions` non-null actions per agent over up
/// to `max_resources` resources, with values drawn from `value_grid`.
#[derive(Debug, Clone)]
pub struct GameFamily<S> {
    pub agents: usize,
    pub max_actions: usize,
    pub max_resources: usize,
    pub value_grid: Vec<S>,
}

impl<S: Scalar> GameFamily<S> {
    /// The default family grid `{0, f(2), 1/2, 1}`; both paper constructions
    /// hinge on the `f(2)` value.
    pub fn standard(agents: usize, rule: &UtilityRule<S>) -> Result<Self> {
        let mut grid = vec![
            S::zero(),
            rule.value(2)?.clone(),
            S::from_ratio(1, 2),
            S::one(),
        ];
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        grid.dedup();
        Ok(GameFamily {
            agents,
            max_actions: 2,
            max_resources: 2,
            value_grid: grid,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = FamilyDoc {
            n: self.agents,
            max_actions: self.max_actions,
            max_resources: self.max_resources,
            value_grid: self.value_grid.iter().map(Scalar::render).collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FamilyDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("family json: {e}")))?;
        let mut grid = doc
            .value_grid
            .iter()
            .map(|v| S::parse_number(v))
            .collect::<Result<Vec<_>>>()?;
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        grid.dedup();
        Ok(GameFamily {
            agents: doc.n,
            max_actions: doc.max_actions,
            max_resources: doc.max_resources,
            value_grid: grid,
        })
    }

    /// Number of distinct per-agent action collections.
    fn collections_per_agent(&self) -> u128 {
        let subsets = (1u128 << self.max_resources) - 1;
        let mut total = 0u128;
        let mut binomial = 1u128;
        for size in 1..=self.max_actions.min(subsets as usize) {
            binomial = binomial * (subsets - size as u128 + 1) / size as u128;
            total += binomial;
        }
        total
    }

    /// Upper bound on games visited by [`search_games`].
    pub fn game_count(&self) -> u128 {
        let value_multisets = multiset_count(self.value_grid.len(), self.max_resources);
        let per_agent = self.collections_per_agent();
        (0..self.agents).fold(value_multisets, |acc, _| acc.saturating_mul(per_agent))
    }
}

fn multiset_count(options: usize, slots: usize) -> u128 {
    // C(options + slots - 1, slots)
    let mut result = 1u128;
    for i in 0..slots as u128 {
        result = result * (options as u128 + i) / (i + 1);
    }
    result
}

#[derive(Serialize, Deserialize)]
struct FamilyDoc {
    n: usize,
    max_actions: usize,
    max_resources: usize,
    value_grid: Vec<String>,
}

/// The family minimum of empirical k-round PoB and a witness game.
#[derive(Debug, Clone)]
pub struct SearchOutcome<S> {
    pub pob: S,
    pub witness: SetCoveringGame<S>,
    pub games_visited: u64,
}

/// Exhaustively evaluates every game in the family and returns the minimum
/// empirical PoB. Value assignments are canonicalized by sorting (resource
/// relabeling), agent order is kept as-is since the round order matters.
/// Games whose optimal welfare is zero are outside the metric and skipped.
///
/// Runs value assignments in parallel; the result is deterministic because
/// ties are resolved toward the lowest assignment index.
pub fn search_games<S: Scalar>(
    family: &GameFamily<S>,
    rule: &UtilityRule<S>,
    rounds: usize,
    cap: u128,
) -> Result<SearchOutcome<S>> {
    if family.agents == 0 || family.max_resources == 0 || family.max_actions == 0 {
        return Err(Error::InvalidInput("family must be non-degenerate".into()));
    }
    if family.agents > rule.n_max() {
        return Err(Error::Precondition(format!(
            "{}: family has {} agents, rule n_max = {}",
            rule.name(),
            family.agents,
            rule.n_max()
        )));
    }
    let count = family.game_count();
    if count > cap {
        return Err(Error::ResourceLimit(format!(
            "family spans {count} games, cap is {cap}"
        )));
    }

    // Non-empty resource subsets as sorted index lists.
    let subsets: Vec<Vec<u32>> = (1u32..(1 << family.max_resources))
        .map(|mask| {
            (0..family.max_resources as u32)
                .filter(|r| mask >> r & 1 == 1)
                .collect()
        })
        .collect();
    // Every per-agent collection of 1..=max_actions distinct subsets.
    let mut collections: Vec<Vec<Vec<u32>>> = Vec::new();
    for size in 1..=family.max_actions.min(subsets.len()) {
        for combo in subsets.iter().combinations(size) {
            let mut actions: Vec<Vec<u32>> = vec![vec![]];
            actions.extend(combo.into_iter().cloned());
            collections.push(actions);
        }
    }
    // Value multisets, descending so relabelings collapse.
    let assignments: Vec<Vec<S>> = family
        .value_grid
        .iter()
        .cloned()
        .combinations_with_replacement(family.max_resources)
        .map(|mut values| {
            values.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
            values
        })
        .collect();

    let per_assignment: Vec<Option<(S, SetCoveringGame<S>, u64)>> = assignments
        .par_iter()
        .map(|values| search_assignment(family, rule, rounds, values, &collections))
        .collect::<Result<_>>()?;

    let mut best: Option<(S, SetCoveringGame<S>)> = None;
    let mut games_visited = 0u64;
    for outcome in per_assignment.into_iter().flatten() {
        let (pob, game, visited) = outcome;
        games_visited += visited;
        match &best {
            Some((incumbent, _)) if *incumbent <= pob => {}
            _ => best = Some((pob, game)),
        }
    }
    let (pob, witness) = best.ok_or_else(|| {
        Error::InvalidInput("family contains no game with positive welfare".into())
    })?;
    Ok(SearchOutcome {
        pob,
        witness,
        games_visited,
    })
}

fn search_assignment<S: Scalar>(
    family: &GameFamily<S>,
    rule: &UtilityRule<S>,
    rounds: usize,
    values: &[S],
    collections: &[Vec<Vec<u32>>],
) -> Result<Option<(S, SetCoveringGame<S>, u64)>> {
    let resources: Vec<Resource<S>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| Resource::new(format!("r{i}"), v.clone()))
        .collect();
    let mut best: Option<(S, SetCoveringGame<S>)> = None;
    let mut visited = 0u64;
    let mut picks = vec![0usize; family.agents];
    loop {
        let actions: Vec<Vec<Vec<u32>>> =
            picks.iter().map(|&idx| collections[idx].clone()).collect();
        let null_index = vec![0usize; family.agents];
        let game = SetCoveringGame::new(resources.clone(), actions, null_index)?;
        visited += 1;
        match empirical_pob(&game, rule, rounds) {
            Ok(report) => {
                let pob = report.pob_empirical;
                match &best {
                    Some((incumbent, _)) if *incumbent <= pob => {}
                    _ => best = Some((pob, game)),
                }
            }
            Err(Error::UndefinedRatio) => {}
            Err(e) => return Err(e),
        }
        // odometer over per-agent collection picks
        let mut done = true;
        for slot in (0..picks.len()).rev() {
            picks[slot] += 1;
            if picks[slot] < collections.len() {
                done = false;
                break;
            }
            picks[slot] = 0;
        }
        if done {
            break;
        }
    }
    Ok(best.map(|(pob, game)| (pob, game, visited)))
}

/// The welfare-2 profile of a `build_gf` game: agent 1 on `r2`, agent 2 on
/// `r1`, padding agents null.
pub fn gf_optimal_profile<S: Scalar>(game: &SetCoveringGame<S>) -> JointAction {
    let mut choices = vec![2u32, 1u32];
    for agent in 2..game.n() {
        choices.push(game.null_index(agent) as u32);
    }
    JointAction::new(choices)
}
