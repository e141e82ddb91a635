//! Set covering games: agents pick resource subsets, welfare is the value of
//! the covered union, and per-agent utility is shaped by a [`UtilityRule`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::UtilityRule;
use crate::scalar::Scalar;

/// Default cap on exhaustive joint-action enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// A coverable resource with a nonnegative system value.
#[derive(Debug, Clone, PartialEq)]
pub struct Resource<S> {
    pub id: String,
    pub value: S,
}

impl<S> Resource<S> {
    pub fn new(id: impl Into<String>, value: S) -> Self {
        Resource {
            id: id.into(),
            value,
        }
    }
}

/// One agent's choice per agent, as indices into each agent's action list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction {
    choices: Vec<u32>,
}

impl JointAction {
    pub fn new(choices: Vec<u32>) -> Self {
        JointAction { choices }
    }

    pub fn choices(&self) -> &[u32] {
        &self.choices
    }

    pub fn choice(&self, agent: usize) -> u32 {
        self.choices[agent]
    }

    pub fn with_choice(&self, agent: usize, action: u32) -> Self {
        let mut next = self.clone();
        next.choices[agent] = action;
        next
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

impl From<Vec<u32>> for JointAction {
    fn from(choices: Vec<u32>) -> Self {
        JointAction::new(choices)
    }
}

/// A finite set covering game: `n` agents, valued resources, and per-agent
/// action lists over resource subsets. Every agent has a null (empty) action.
///
/// Immutable after construction; all operations are pure.
#[derive(Debug, Clone)]
pub struct SetCoveringGame<S> {
    resources: Vec<Resource<S>>,
    index_by_id: HashMap<String, usize>,
    /// `actions[agent][action]` is a sorted list of resource indices.
    actions: Vec<Vec<Vec<u32>>>,
    null_index: Vec<usize>,
}

impl<S: Scalar> SetCoveringGame<S> {
    /// Builds a game from resource-index action lists and validates every
    /// structural invariant.
    pub fn new(
        resources: Vec<Resource<S>>,
        actions: Vec<Vec<Vec<u32>>>,
        null_index: Vec<usize>,
    ) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidInput(
                "a game needs at least one agent".into(),
            ));
        }
        if null_index.len() != actions.len() {
            return Err(Error::InvalidInput(format!(
                "null_index has {} entries for {} agents",
                null_index.len(),
                actions.len()
            )));
        }
        let mut index_by_id = HashMap::new();
        for (idx, resource) in resources.iter().enumerate() {
            if resource.value < S::zero() || !resource.value.to_f64().is_finite() {
                return Err(Error::InvalidInput(format!(
                    "resource {:?} has invalid value {}",
                    resource.id, resource.value
                )));
            }
            if index_by_id.insert(resource.id.clone(), idx).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate resource id {:?}",
                    resource.id
                )));
            }
        }
        let mut actions = actions;
        for (agent, list) in actions.iter_mut().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "agent {agent} has an empty action list"
                )));
            }
            let null = null_index[agent];
            if null >= list.len() || !list[null].is_empty() {
                return Err(Error::InvalidInput(format!(
                    "agent {agent}: action {null} is not a null action"
                )));
            }
            for action in list.iter_mut() {
                action.sort_unstable();
                action.dedup();
                for &r in action.iter() {
                    if r as usize >= resources.len() {
                        return Err(Error::InvalidInput(format!(
                            "agent {agent} references unknown resource index {r}"
                        )));
                    }
                }
            }
        }
        Ok(SetCoveringGame {
            resources,
            index_by_id,
            actions,
            null_index,
        })
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.actions.len()
    }

    pub fn resources(&self) -> &[Resource<S>] {
        &self.resources
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.index_by_id.get(id).copied()
    }

    pub fn action_count(&self, agent: usize) -> usize {
        self.actions[agent].len()
    }

    /// Resource indices selected by `action` of `agent`.
    pub fn action(&self, agent: usize, action: u32) -> &[u32] {
        &self.actions[agent][action as usize]
    }

    pub fn null_index(&self, agent: usize) -> usize {
        self.null_index[agent]
    }

    /// The all-null profile the dynamics start from.
    pub fn all_null(&self) -> JointAction {
        JointAction::new(self.null_index.iter().map(|&i| i as u32).collect())
    }

    /// Total number of joint actions.
    pub fn joint_action_count(&self) -> u128 {
        self.actions
            .iter()
            .fold(1u128, |acc, list| acc.saturating_mul(list.len() as u128))
    }

    pub fn validate(&self, a: &JointAction) -> Result<()> {
        if a.len() != self.n() {
            return Err(Error::InvalidInput(format!(
                "profile has {} choices for {} agents",
                a.len(),
                self.n()
            )));
        }
        for (agent, &choice) in a.choices().iter().enumerate() {
            if choice as usize >= self.actions[agent].len() {
                return Err(Error::InvalidInput(format!(
                    "agent {agent} has no action {choice}"
                )));
            }
        }
        Ok(())
    }

    /// Per-resource coverage multiplicities `|a|_r` under profile `a`.
    pub fn coverage_counts(&self, a: &JointAction) -> Result<Vec<u32>> {
        self.validate(a)?;
        let mut counts = vec![0u32; self.resources.len()];
        for (agent, &choice) in a.choices().iter().enumerate() {
            for &r in self.action(agent, choice) {
                counts[r as usize] += 1;
            }
        }
        Ok(counts)
    }

    /// Number of agents covering resource `id` under `a`.
    pub fn coverage_count(&self, a: &JointAction, id: &str) -> Result<usize> {
        let idx = self
            .resource_index(id)
            .ok_or_else(|| Error::InvalidInput(format!("unknown resource id {id:?}")))?;
        Ok(self.coverage_counts(a)?[idx] as usize)
    }

    /// Welfare `W(a)`: summed value of the union of selected resources.
    pub fn welfare(&self, a: &JointAction) -> Result<S> {
        let counts = self.coverage_counts(a)?;
        let mut total = S::zero();
        for (idx, &count) in counts.iter().enumerate() {
            if count > 0 {
                total = total + self.resources[idx].value.clone();
            }
        }
        Ok(total)
    }

    /// Agent `i`'s utility `sum_{r in a_i} v_r * f(|a|_r)`.
    pub fn utility(&self, rule: &UtilityRule<S>, agent: usize, a: &JointAction) -> Result<S> {
        if agent >= self.n() {
            return Err(Error::InvalidInput(format!("no agent {agent}")));
        }
        let counts = self.coverage_counts(a)?;
        self.utility_from_counts(rule, agent, a.choice(agent), &counts)
    }

    /// Utility evaluated against precomputed coverage counts that already
    /// include agent `agent` playing `choice`.
    fn utility_from_counts(
        &self,
        rule: &UtilityRule<S>,
        agent: usize,
        choice: u32,
        counts: &[u32],
    ) -> Result<S> {
        let mut total = S::zero();
        for &r in self.action(agent, choice) {
            let coverage = counts[r as usize] as usize;
            total =
                total + self.resources[r as usize].value.clone() * rule.value(coverage)?.clone();
        }
        Ok(total)
    }

    /// Rosenthal potential `phi(a) = sum_r v_r sum_{l=1}^{|a|_r} f(l)`.
    ///
    /// Its unilateral differences equal utility differences, so it is
    /// non-decreasing along best responses.
    pub fn potential(&self, rule: &UtilityRule<S>, a: &JointAction) -> Result<S> {
        let counts = self.coverage_counts(a)?;
        let mut total = S::zero();
        for (idx, &count) in counts.iter().enumerate() {
            if count > 0 {
                total =
                    total + self.resources[idx].value.clone() * rule.prefix_sum(count as usize)?;
            }
        }
        Ok(total)
    }

    /// Exact welfare maximizer by exhaustive enumeration, with the
    /// lexicographically smallest index vector among ties.
    pub fn optimal_welfare(&self) -> Result<(S, JointAction)> {
        self.optimal_welfare_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn optimal_welfare_with_cap(&self, cap: u128) -> Result<(S, JointAction)> {
        let count = self.joint_action_count();
        if count > cap {
            return Err(Error::ResourceLimit(format!(
                "joint action space has {count} profiles, cap is {cap}"
            )));
        }
        let mut best: Option<(S, JointAction)> = None;
        let mut current = JointAction::new(vec![0; self.n()]);
        loop {
            let welfare = self.welfare(&current)?;
            match &best {
                Some((incumbent, _)) if welfare <= *incumbent => {}
                _ => best = Some((welfare, current.clone())),
            }
            if !self.advance(&mut current) {
                break;
            }
        }
        Ok(best.expect("at least one profile"))
    }

    /// Advances `profile` to the lexicographically next index vector.
    /// Returns false after the last one.
    fn advance(&self, profile: &mut JointAction) -> bool {
        for agent in (0..self.n()).rev() {
            let next = profile.choices[agent] + 1;
            if (next as usize) < self.actions[agent].len() {
                profile.choices[agent] = next;
                return true;
            }
            profile.choices[agent] = 0;
        }
        false
    }

    /// Iterates every joint action in lexicographic order.
    pub fn profiles(&self) -> ProfileIter<'_, S> {
        ProfileIter {
            game: self,
            next: Some(JointAction::new(vec![0; self.n()])),
        }
    }

    /// Serializes to the game JSON document (0-based indexing, values as
    /// exact strings).
    pub fn to_json(&self) -> Result<String> {
        let doc = GameDoc {
            indexing: INDEXING_NOTE.to_string(),
            n: self.n(),
            resources: self
                .resources
                .iter()
                .map(|r| ResourceDoc {
                    id: r.id.clone(),
                    value: r.value.render(),
                })
                .collect(),
            actions: self
                .actions
                .iter()
                .map(|list| {
                    list.iter()
                        .map(|action| {
                            action
                                .iter()
                                .map(|&r| self.resources[r as usize].id.clone())
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            null_index: self.null_index.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GameDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("game json: {e}")))?;
        let resources: Vec<Resource<S>> = doc
            .resources
            .iter()
            .map(|r| Ok(Resource::new(r.id.clone(), S::parse_number(&r.value)?)))
            .collect::<Result<_>>()?;
        let index_by_id: HashMap<&str, u32> = resources
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i as u32))
            .collect();
        let actions = doc
            .actions
            .iter()
            .map(|list| {
                list.iter()
                    .map(|action| {
                        action
                            .iter()
                            .map(|id| {
                                index_by_id.get(id.as_str()).copied().ok_or_else(|| {
                                    Error::InvalidInput(format!("unknown resource id {id:?}"))
                                })
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        if doc.n != doc.actions.len() {
            return Err(Error::InvalidInput(format!(
                "document says n={} but lists {} agents",
                doc.n,
                doc.actions.len()
            )));
        }
        SetCoveringGame::new(resources, actions, doc.null_index)
    }
}

const INDEXING_NOTE: &str = "0-based agents and actions";

#[derive(Serialize, Deserialize)]
struct GameDoc {
    /// Indexing convention marker for humans reading the file.
    #[serde(default = "default_indexing")]
    indexing: String,
    n: usize,
    resources: Vec<ResourceDoc>,
    actions: Vec<Vec<Vec<String>>>,
    null_index: Vec<usize>,
}

fn default_indexing() -> String {
    INDEXING_NOTE.to_string()
}

#[derive(Serialize, Deserialize)]
struct ResourceDoc {
    id: String,
    value: String,
}

pub struct ProfileIter<'g, S> {
    game: &'g SetCoveringGame<S>,
    next: Option<JointAction>,
}

impl<S: Scalar> Iterator for ProfileIter<'_, S> {
    type Item = JointAction;

    fn next(&mut self) -> Option<JointAction> {
        let current = self.next.take()?;
        let mut upcoming = current.clone();
        if self.game.advance(&mut upcoming) {
            self.next = Some(upcoming);
        }
        Some(current)
    }
}
