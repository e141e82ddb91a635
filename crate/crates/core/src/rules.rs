//! Utility rules and the closed-form efficiency expressions attached to them:
//! the marginal-contribution rule, the anarchy-optimal rule, the Pareto family
//! `f^X`, one-round price of best response, price of anarchy, and the
//! (PoA, PoB) trade-off frontier.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{factorial, Scalar};

/// Default relative truncation tolerance for the anarchy-optimal rule's
/// factorial tail sums.
pub const DEFAULT_POA_RULE_TOL: f64 = 1e-15;

/// A designable per-resource payoff schedule `f(1..n_max)`.
///
/// Validity: every value is nonnegative and `f(1) > 0` (it divides the
/// efficiency formulas).
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityRule<S> {
    name: String,
    values: Vec<S>,
}

impl<S: Scalar> UtilityRule<S> {
    pub fn new(name: impl Into<String>, values: Vec<S>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidRule(format!("{name}: no values")));
        }
        for (idx, value) in values.iter().enumerate() {
            if *value < S::zero() || !value.to_f64().is_finite() {
                return Err(Error::InvalidRule(format!(
                    "{name}: f({}) = {value} is not a nonnegative number",
                    idx + 1
                )));
            }
        }
        if values[0] <= S::zero() {
            return Err(Error::InvalidRule(format!("{name}: f(1) must be positive")));
        }
        Ok(UtilityRule { name, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Largest supported multiplicity.
    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// `f(multiplicity)` for `1 <= multiplicity <= n_max`.
    pub fn value(&self, multiplicity: usize) -> Result<&S> {
        if multiplicity == 0 {
            return Err(Error::InvalidInput(
                "multiplicity 0 has no rule value".into(),
            ));
        }
        self.values
            .get(multiplicity - 1)
            .ok_or(Error::RuleCapacity {
                coverage: multiplicity,
                n_max: self.values.len(),
            })
    }

    /// `f(j)` with the convention that `f(0)` and out-of-range values are 0.
    pub fn value_or_zero(&self, multiplicity: usize) -> S {
        if multiplicity == 0 {
            return S::zero();
        }
        self.values
            .get(multiplicity - 1)
            .cloned()
            .unwrap_or_else(S::zero)
    }

    /// `sum_{l=1}^{count} f(l)`, the per-resource potential weight.
    pub fn prefix_sum(&self, count: usize) -> Result<S> {
        if count > self.values.len() {
            return Err(Error::RuleCapacity {
                coverage: count,
                n_max: self.values.len(),
            });
        }
        Ok(self.values[..count]
            .iter()
            .fold(S::zero(), |acc, v| acc + v.clone()))
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    /// The uniformly rescaled rule `f'(j) = f(j) / divisor`, which leaves
    /// every efficiency metric unchanged.
    pub fn scaled(&self, divisor: &S) -> Result<Self> {
        if *divisor <= S::zero() {
            return Err(Error::InvalidRule("scale divisor must be positive".into()));
        }
        UtilityRule::new(
            format!("{}/{divisor}", self.name),
            self.values
                .iter()
                .map(|v| v.clone() / divisor.clone())
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = RuleDoc {
            name: self.name.clone(),
            values: self.values.iter().map(Scalar::render).collect(),
            n_max: self.values.len(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RuleDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("rule json: {e}")))?;
        if doc.n_max != doc.values.len() {
            return Err(Error::InvalidRule(format!(
                "{}: n_max {} does not match {} values",
                doc.name,
                doc.n_max,
                doc.values.len()
            )));
        }
        let values = doc
            .values
            .iter()
            .map(|v| S::parse_number(v))
            .collect::<Result<Vec<_>>>()?;
        UtilityRule::new(doc.name, values)
    }
}

#[derive(Serialize, Deserialize)]
struct RuleDoc {
    name: String,
    values: Vec<String>,
    n_max: usize,
}

/// Marginal contribution rule: `f(1) = 1`, `f(j) = 0` for `j >= 2`.
/// The induced utility is each agent's added welfare over its null action.
pub fn mc_rule<S: Scalar>(n_max: usize) -> Result<UtilityRule<S>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let mut values = vec![S::zero(); n_max];
    values[0] = S::one();
    UtilityRule::new("mc", values)
}

/// The constant rule `f(j) = 1` for every `j`.
pub fn constant_rule<S: Scalar>(n_max: usize) -> Result<UtilityRule<S>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    UtilityRule::new("const", vec![S::one(); n_max])
}

/// The rule attaining the best possible price of anarchy, `1 - 1/e`:
/// `f(j) = sum_{l=j}^inf (j-1)! / (l! (e-1))`, each tail sum truncated when
/// the next term falls below `tol` relative to the partial sum.
///
/// Values are normalized by the computed `j = 1` tail (which is `e - 1`
/// analytically), so `f(1)` is exactly 1 and the exact tie structure of the
/// worst-case constructions survives the float round trip.
pub fn poa_optimal_rule(n_max: usize, tol: f64) -> Result<UtilityRule<f64>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let tail = |j: u32| {
        // terms (j-1)!/l! starting at l = j, each next term divided by l+1
        let mut term = 1.0 / j as f64;
        let mut sum = term;
        let mut l = j;
        loop {
            l += 1;
            term /= l as f64;
            sum += term;
            if term < tol * sum {
                return sum;
            }
        }
    };
    let e_minus_one = tail(1);
    let values = (1..=n_max as u32)
        .map(|j| tail(j) / e_minus_one)
        .collect::<Vec<_>>();
    debug_assert!(values[0] == 1.0);
    debug_assert!(values.windows(2).all(|w| w[0] > w[1]));
    UtilityRule::new("poa-opt", values)
}

/// The slack `X` whose Pareto rule coincides with the anarchy-optimal rule:
/// `1 / (e - 1)`, evaluated from `terms` factorial-series terms. With the
/// rational instance and `terms >= 30` this pins `X` far beyond f64 precision.
pub fn poa_optimal_slack<S: Scalar>(terms: u32) -> S {
    S::one() / S::recip_factorial_sum(terms)
}

/// PoA slack parameter for the Pareto rule family. `PoA(f^X) = 1 / (1 + X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoParameter<S> {
    slack: S,
}

impl<S: Scalar> ParetoParameter<S> {
    /// From the slack `X >= 0` directly.
    pub fn from_slack(slack: S) -> Result<Self> {
        if slack < S::zero() {
            return Err(Error::Domain(format!("slack X = {slack} must be >= 0")));
        }
        Ok(ParetoParameter { slack })
    }

    /// From a PoA target `C` in `(0, 1]`, via `X = (1 - C) / C`.
    pub fn from_poa_target(target: S) -> Result<Self> {
        if target <= S::zero() || target > S::one() {
            return Err(Error::Domain(format!(
                "PoA target C = {target} must lie in (0, 1]"
            )));
        }
        let slack = (S::one() - target.clone()) / target;
        Ok(ParetoParameter { slack })
    }

    pub fn slack(&self) -> &S {
        &self.slack
    }

    /// `1 / (1 + X)`.
    pub fn poa_target(&self) -> S {
        S::one() / (S::one() + self.slack.clone())
    }
}

/// The Pareto rule `f^X` from its closed form
/// `f(j) = max[(j-1)! (1 - X sum_{t=1}^{j-1} 1/t!), 0]`.
///
/// The clamp factor is evaluated before multiplying by the factorial, and
/// once a value reaches 0 every later value is 0 without evaluating further
/// factorials.
pub fn pareto_rule<S: Scalar>(p: &ParetoParameter<S>, n_max: usize) -> Result<UtilityRule<S>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let x = p.slack();
    let mut values = Vec::with_capacity(n_max);
    values.push(S::one());
    let mut truncated = false;
    for j in 2..=n_max as u32 {
        if truncated {
            values.push(S::zero());
            continue;
        }
        let factor = S::one() - x.clone() * S::recip_factorial_sum(j - 1);
        if factor <= S::zero() {
            truncated = true;
            values.push(S::zero());
        } else {
            values.push(factorial::<S>(j - 1) * factor);
        }
    }
    UtilityRule::new(format!("pareto:X={}", x.render()), values)
}

/// The same family from the raw recursion
/// `f(1) = 1, f(j+1) = max{j f(j) - X, 0}`; kept for cross-checking against
/// the closed form. In float mode the recursion multiplies rounding error by
/// `j` per step, so the closed form is the primary path.
pub fn pareto_rule_recursive<S: Scalar>(
    p: &ParetoParameter<S>,
    n_max: usize,
) -> Result<UtilityRule<S>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let x = p.slack();
    let mut values = Vec::with_capacity(n_max);
    values.push(S::one());
    for j in 1..n_max as u32 {
        let candidate = S::from_u32(j) * values[j as usize - 1].clone() - x.clone();
        values.push(if candidate > S::zero() {
            candidate
        } else {
            S::zero()
        });
    }
    UtilityRule::new(format!("pareto:X={}", x.render()), values)
}

/// One-round price of best response:
/// `1 / PoB = (sum_{j=1}^n f(j) - min_{j<=n} f(j)) / f(1) + 1`.
pub fn pob_one_round<S: Scalar>(rule: &UtilityRule<S>, n: usize) -> Result<S> {
    check_agent_range(rule, n)?;
    let f1 = rule.value(1)?.clone();
    if f1 <= S::zero() {
        return Err(Error::InvalidRule(format!(
            "{}: f(1) must be positive",
            rule.name()
        )));
    }
    let mut sum = S::zero();
    let mut min: Option<S> = None;
    for j in 1..=n {
        let v = rule.value(j)?.clone();
        sum = sum + v.clone();
        min = Some(match min {
            Some(m) if m <= v => m,
            _ => v,
        });
    }
    let inverse = (sum - min.expect("n >= 2")) / f1 + S::one();
    Ok(S::one() / inverse)
}

/// Price of anarchy for an arbitrary rule:
/// `1 / PoA = 1 + max_{1<=j<=n-1} {(j+1)f(j+1) - f(1), jf(j) - f(j+1), jf(j+1)} / f(1)`.
pub fn poa_value<S: Scalar>(rule: &UtilityRule<S>, n: usize) -> Result<S> {
    check_agent_range(rule, n)?;
    let f1 = rule.value(1)?.clone();
    if f1 <= S::zero() {
        return Err(Error::InvalidRule(format!(
            "{}: f(1) must be positive",
            rule.name()
        )));
    }
    let mut best: Option<S> = None;
    for j in 1..=n - 1 {
        let fj = rule.value_or_zero(j);
        let fj1 = rule.value_or_zero(j + 1);
        let candidates = [
            S::from_u32(j as u32 + 1) * fj1.clone() - f1.clone(),
            S::from_u32(j as u32) * fj - fj1.clone(),
            S::from_u32(j as u32) * fj1,
        ];
        for c in candidates {
            best = Some(match best {
                Some(b) if b >= c => b,
                _ => c,
            });
        }
    }
    let inverse = S::one() + best.expect("n >= 2") / f1;
    Ok(S::one() / inverse)
}

/// Price of anarchy reduction for non-increasing rules with `f(1) = 1`:
/// `1 / PoA = 1 + max_{1<=j<=n-1} {jf(j) - f(j+1), (n-1)f(n)}`.
/// Agrees exactly with [`poa_value`] on its precondition domain.
pub fn poa_value_nonincreasing<S: Scalar>(rule: &UtilityRule<S>, n: usize) -> Result<S> {
    check_agent_range(rule, n)?;
    if !rule.is_nonincreasing() {
        return Err(Error::Precondition(format!(
            "{}: rule is not non-increasing",
            rule.name()
        )));
    }
    if *rule.value(1)? != S::one() {
        return Err(Error::Precondition(format!(
            "{}: requires f(1) = 1",
            rule.name()
        )));
    }
    let mut best = S::from_u32(n as u32 - 1) * rule.value(n)?.clone();
    for j in 1..=n - 1 {
        let c = S::from_u32(j as u32) * rule.value(j)?.clone() - rule.value(j + 1)?.clone();
        if c > best {
            best = c;
        }
    }
    Ok(S::one() / (S::one() + best))
}

fn check_agent_range<S: Scalar>(rule: &UtilityRule<S>, n: usize) -> Result<()> {
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
    Ok(())
}

/// Largest achievable PoA over utility rules, `1 - 1/e`.
pub fn poa_upper_limit() -> f64 {
    1.0 - std::f64::consts::E.recip()
}

/// One point of the (PoA, optimal one-round PoB) trade-off curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub poa: f64,
    pub pob: f64,
}

/// Optimal one-round PoB at a fixed PoA target `C in [1/2, 1 - 1/e]`:
/// `[sum_{j>=0} max{j! (1 - ((1-C)/C) sum_{t=1}^j 1/t!), 0} + 1]^-1`.
///
/// The series terms reach 0 at a finite index for `C < 1 - 1/e`; at the
/// endpoint the series diverges and the PoB is exactly 0, so targets within
/// `1e-9` of the endpoint short-circuit to 0 instead of summing.
pub fn frontier_point(target: f64) -> Result<FrontierPoint> {
    let endpoint = poa_upper_limit();
    if !target.is_finite() || target < 0.5 - 1e-12 || target > endpoint + 1e-12 {
        return Err(Error::Domain(format!(
            "PoA target {target} outside [1/2, 1 - 1/e] = [0.5, {endpoint}]"
        )));
    }
    let target = target.clamp(0.5, endpoint);
    if endpoint - target <= 1e-9 {
        return Ok(FrontierPoint {
            poa: target,
            pob: 0.0,
        });
    }
    let x = (1.0 - target) / target;
    // j = 0 term is 1, plus the trailing +1 of the formula.
    let mut denominator = 2.0f64;
    let mut fact = 1.0f64;
    for j in 1..=MAX_FRONTIER_TERMS {
        fact *= j as f64;
        let factor = 1.0 - x * f64::recip_factorial_sum(j);
        if factor <= 0.0 {
            return Ok(FrontierPoint {
                poa: target,
                pob: denominator.recip(),
            });
        }
        denominator += fact * factor;
    }
    Err(Error::Internal(format!(
        "frontier series did not terminate for C = {target}"
    )))
}

const MAX_FRONTIER_TERMS: u32 = 200;

/// Maps [`frontier_point`] over a grid of PoA targets, in input order.
pub fn frontier_sweep(grid: &[f64]) -> Result<Vec<FrontierPoint>> {
    grid.iter().map(|&c| frontier_point(c)).collect()
}

/// Evenly spaced PoA targets spanning `[1/2, 1 - 1/e]` inclusive.
pub fn frontier_grid(points: usize) -> Vec<f64> {
    let endpoint = poa_upper_limit();
    if points <= 1 {
        return vec![0.5];
    }
    (0..points)
        .map(|i| 0.5 + (endpoint - 0.5) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Command-line rule specifier: `mc`, `poa-opt`, `pareto:X=<v>`,
/// `pareto:C=<v>`, or `custom:@<file.json>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleSpec {
    Mc,
    PoaOpt,
    ParetoSlack(String),
    ParetoTarget(String),
    Custom(PathBuf),
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        match text {
            "mc" => return Ok(RuleSpec::Mc),
            "poa-opt" => return Ok(RuleSpec::PoaOpt),
            _ => {}
        }
        if let Some(rest) = text.strip_prefix("pareto:") {
            if let Some(x) = rest.strip_prefix("X=") {
                return Ok(RuleSpec::ParetoSlack(x.to_string()));
            }
            if let Some(c) = rest.strip_prefix("C=") {
                return Ok(RuleSpec::ParetoTarget(c.to_string()));
            }
            return Err(Error::Parse(format!(
                "pareto rule wants X=<value> or C=<value>, got {rest:?}"
            )));
        }
        if let Some(rest) = text.strip_prefix("custom:@") {
            return Ok(RuleSpec::Custom(PathBuf::from(rest)));
        }
        Err(Error::Parse(format!(
            "unknown rule spec {text:?}; expected mc, poa-opt, pareto:X=<v>, pareto:C=<v>, or custom:@<file>"
        )))
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::Mc => write!(f, "mc"),
            RuleSpec::PoaOpt => write!(f, "poa-opt"),
            RuleSpec::ParetoSlack(x) => write!(f, "pareto:X={x}"),
            RuleSpec::ParetoTarget(c) => write!(f, "pareto:C={c}"),
            RuleSpec::Custom(path) => write!(f, "custom:@{}", path.display()),
        }
    }
}

impl RuleSpec {
    /// Whether exact-rational construction is impossible for this spec
    /// (the anarchy-optimal rule's values are irrational).
    pub fn requires_float(&self) -> bool {
        matches!(self, RuleSpec::PoaOpt)
    }

    /// Builds the rule at the requested multiplicity bound. For `poa-opt`
    /// under an exact scalar, the float values are carried over exactly
    /// (every finite float is rational).
    pub fn build<S: Scalar>(&self, n_max: usize) -> Result<UtilityRule<S>> {
        match self {
            RuleSpec::Mc => mc_rule(n_max),
            RuleSpec::PoaOpt => {
                let float = poa_optimal_rule(n_max, DEFAULT_POA_RULE_TOL)?;
                let values = float
                    .values()
                    .iter()
                    .map(|&v| S::from_f64_lossless(v))
                    .collect();
                UtilityRule::new("poa-opt", values)
            }
            RuleSpec::ParetoSlack(text) => {
                let x = S::parse_number(text)?;
                pareto_rule(&ParetoParameter::from_slack(x)?, n_max)
            }
            RuleSpec::ParetoTarget(text) => {
                let c = S::parse_number(text)?;
                pareto_rule(&ParetoParameter::from_poa_target(c)?, n_max)
            }
            RuleSpec::Custom(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.clone(), e))?;
                let rule = UtilityRule::from_json(&text)?;
                if rule.n_max() < n_max {
                    return Err(Error::InvalidRule(format!(
                        "{}: provides {} values, need {n_max}",
                        rule.name(),
                        rule.n_max()
                    )));
                }
                Ok(rule)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_traits::One;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn mc_rule_values() {
        let rule: UtilityRule<Rational> = mc_rule(3).unwrap();
        assert_eq!(rule.values(), &[rat(1, 1), rat(0, 1), rat(0, 1)]);
        let tiny: UtilityRule<Rational> = mc_rule(1).unwrap();
        assert_eq!(tiny.values(), &[rat(1, 1)]);
        assert!(mc_rule::<Rational>(0).is_err());
    }

    #[test]
    fn rule_validation() {
        assert!(UtilityRule::new("bad", vec![rat(0, 1)]).is_err());
        assert!(UtilityRule::new("bad", vec![rat(1, 1), rat(-1, 2)]).is_err());
        assert!(UtilityRule::<Rational>::new("bad", vec![]).is_err());
    }

    #[test]
    fn poa_optimal_rule_against_exact_tail_oracle() {
        // Oracle: f(j) = (j-1)! (e - sum_{t=0}^{j-1} 1/t!) / (e - 1) evaluated
        // in exact rationals with e from a 40-term series (error < 1/40!).
        let rule = poa_optimal_rule(6, 1e-15).unwrap();
        let e_minus_one = Rational::recip_factorial_sum(40);
        for j in 1..=6u32 {
            // sum_{t=j}^inf 1/t!
            let tail = e_minus_one.clone() - Rational::recip_factorial_sum(j - 1);
            let oracle = (factorial::<Rational>(j - 1) * tail / e_minus_one.clone()).to_f64();
            assert!(
                (rule.values()[j as usize - 1] - oracle).abs() < 1e-12,
                "f({j}) = {} vs oracle {oracle}",
                rule.values()[j as usize - 1]
            );
        }
        // normalization pins f(1) bitwise
        assert_eq!(rule.values()[0], 1.0);
        // f(2) = (e-2)/(e-1)
        let e = std::f64::consts::E;
        assert!((rule.values()[1] - (e - 2.0) / (e - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn pareto_rule_hand_values() {
        let p = ParetoParameter::from_slack(rat(1, 1)).unwrap();
        let rule = pareto_rule(&p, 4).unwrap();
        assert_eq!(rule.values(), &[rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)]);

        let p = ParetoParameter::from_slack(rat(4, 5)).unwrap();
        let rule = pareto_rule(&p, 4).unwrap();
        assert_eq!(rule.values(), &[rat(1, 1), rat(1, 5), rat(0, 1), rat(0, 1)]);
    }

    #[test]
    fn pareto_closed_form_matches_recursion_exactly() {
        for (n, d) in [
            (0i64, 1i64),
            (1, 2),
            (4, 5),
            (9, 10),
            (1, 1),
            (3, 5),
            (7, 4),
        ] {
            let p = ParetoParameter::from_slack(rat(n, d)).unwrap();
            let closed = pareto_rule(&p, 12).unwrap();
            let recursive = pareto_rule_recursive(&p, 12).unwrap();
            assert_eq!(closed.values(), recursive.values(), "X = {n}/{d}");
        }
    }

    #[test]
    fn pareto_rule_matches_poa_optimal_at_critical_slack() {
        let x: Rational = poa_optimal_slack(40);
        let p = ParetoParameter::from_slack(x).unwrap();
        let exact = pareto_rule(&p, 15).unwrap();
        let float = poa_optimal_rule(15, 1e-15).unwrap();
        for j in 0..15 {
            assert!(
                (exact.values()[j].to_f64() - float.values()[j]).abs() < 1e-10,
                "j = {}: {} vs {}",
                j + 1,
                exact.values()[j].to_f64(),
                float.values()[j]
            );
        }
    }

    #[test]
    fn pareto_parameter_conversions() {
        let p = ParetoParameter::from_poa_target(rat(1, 2)).unwrap();
        assert_eq!(*p.slack(), rat(1, 1));
        assert_eq!(p.poa_target(), rat(1, 2));
        let p = ParetoParameter::from_slack(rat(4, 5)).unwrap();
        assert_eq!(p.poa_target(), rat(5, 9));
        assert!(ParetoParameter::from_slack(rat(-1, 2)).is_err());
        assert!(ParetoParameter::from_poa_target(rat(0, 1)).is_err());
    }

    #[test]
    fn pob_one_round_known_values() {
        let mc: UtilityRule<Rational> = mc_rule(5).unwrap();
        for n in 2..=5 {
            assert_eq!(pob_one_round(&mc, n).unwrap(), rat(1, 2));
        }
        let ones: UtilityRule<Rational> = constant_rule(6).unwrap();
        for n in 2..=6 {
            assert_eq!(pob_one_round(&ones, n).unwrap(), rat(1, n as i64));
        }
        let p = ParetoParameter::from_slack(rat(4, 5)).unwrap();
        let rule = pareto_rule(&p, 6).unwrap();
        // (1 + 1/5)/1 + 1 = 11/5, so PoB = 5/11 = 1/2.2
        assert_eq!(pob_one_round(&rule, 6).unwrap(), rat(5, 11));
    }

    #[test]
    fn pob_one_round_preconditions() {
        let mc: UtilityRule<Rational> = mc_rule(3).unwrap();
        assert!(pob_one_round(&mc, 1).is_err());
        assert!(pob_one_round(&mc, 4).is_err());
    }

    #[test]
    fn poa_known_values() {
        let mc: UtilityRule<Rational> = mc_rule(10).unwrap();
        for n in 2..=10 {
            assert_eq!(poa_value(&mc, n).unwrap(), rat(1, 2));
            assert_eq!(poa_value_nonincreasing(&mc, n).unwrap(), rat(1, 2));
        }
        let ones: UtilityRule<Rational> = constant_rule(8).unwrap();
        for n in 2..=8 {
            assert_eq!(poa_value(&ones, n).unwrap(), rat(1, n as i64));
        }
    }

    #[test]
    fn poa_of_anarchy_optimal_rule_approaches_limit() {
        let rule = poa_optimal_rule(40, 1e-15).unwrap();
        let value = poa_value(&rule, 40).unwrap();
        assert!((value - poa_upper_limit()).abs() < 1e-3, "PoA = {value}");
        assert!((0.62..=poa_upper_limit()).contains(&value));
    }

    #[test]
    fn pareto_poa_equals_slack_target() {
        for (n, d) in [(1i64, 1i64), (4, 5), (9, 10), (3, 4)] {
            let p = ParetoParameter::from_slack(rat(n, d)).unwrap();
            let rule = pareto_rule(&p, 8).unwrap();
            // before truncation to zero the PoA equals 1/(1+X)
            let expected = Rational::one() / (Rational::one() + rat(n, d));
            assert_eq!(poa_value_nonincreasing(&rule, 4).unwrap(), expected);
            assert_eq!(poa_value(&rule, 4).unwrap(), expected);
        }
    }

    #[test]
    fn poa_nonincreasing_preconditions() {
        let increasing = UtilityRule::new("inc", vec![rat(1, 1), rat(2, 1)]).unwrap();
        assert!(poa_value_nonincreasing(&increasing, 2).is_err());
        let scaled = UtilityRule::new("s", vec![rat(2, 1), rat(1, 1)]).unwrap();
        assert!(poa_value_nonincreasing(&scaled, 2).is_err());
        // but the general formula accepts both
        assert!(poa_value(&increasing, 2).is_ok());
        assert!(poa_value(&scaled, 2).is_ok());
    }

    #[test]
    fn scaling_leaves_metrics_unchanged() {
        let p = ParetoParameter::from_slack(rat(4, 5)).unwrap();
        let rule = pareto_rule(&p, 5).unwrap();
        let scaled = rule.scaled(&rat(7, 3)).unwrap();
        for n in 2..=5 {
            assert_eq!(
                pob_one_round(&rule, n).unwrap(),
                pob_one_round(&scaled, n).unwrap()
            );
            assert_eq!(poa_value(&rule, n).unwrap(), poa_value(&scaled, n).unwrap());
        }
    }

    #[test]
    fn frontier_endpoints_and_hand_points() {
        let left = frontier_point(0.5).unwrap();
        assert_eq!(left.pob, 0.5);
        let right = frontier_point(poa_upper_limit()).unwrap();
        assert_eq!(right.pob, 0.0);
        // C = 1/1.8 gives X = 0.8: terms 1, 0.2, then clamp -> 1/2.2
        let mid = frontier_point(1.0 / 1.8).unwrap();
        assert!((mid.pob - 1.0 / 2.2).abs() < 1e-12);
        assert!(frontier_point(0.4).is_err());
        assert!(frontier_point(0.7).is_err());
    }

    #[test]
    fn frontier_sweep_is_nonincreasing() {
        let grid = frontier_grid(50);
        let points = frontier_sweep(&grid).unwrap();
        assert_eq!(points.len(), 50);
        for pair in points.windows(2) {
            assert!(pair[0].pob >= pair[1].pob);
        }
        assert_eq!(points[0].pob, 0.5);
        assert_eq!(points[49].pob, 0.0);
    }

    #[test]
    fn frontier_matches_rule_formula() {
        for c in [0.52, 0.55, 0.58, 0.61] {
            let point = frontier_point(c).unwrap();
            let x = (1.0 - c) / c;
            let p = ParetoParameter::from_slack(x).unwrap();
            let rule = pareto_rule(&p, 24).unwrap();
            // past the truncation point the rule's tail is zero, so min f = 0
            assert_eq!(rule.values()[23], 0.0);
            let pob = pob_one_round(&rule, 24).unwrap();
            assert!((point.pob - pob).abs() < 1e-9, "C = {c}");
        }
    }

    #[test]
    fn rule_spec_parsing_and_building() {
        assert_eq!("mc".parse::<RuleSpec>().unwrap(), RuleSpec::Mc);
        assert_eq!("poa-opt".parse::<RuleSpec>().unwrap(), RuleSpec::PoaOpt);
        assert_eq!(
            "pareto:X=4/5".parse::<RuleSpec>().unwrap(),
            RuleSpec::ParetoSlack("4/5".into())
        );
        assert!("pareto:Y=1".parse::<RuleSpec>().is_err());
        assert!("nope".parse::<RuleSpec>().is_err());

        let rule: UtilityRule<Rational> = "pareto:C=0.5"
            .parse::<RuleSpec>()
            .unwrap()
            .build(3)
            .unwrap();
        assert_eq!(rule.values(), mc_rule::<Rational>(3).unwrap().values());

        let from_spec: UtilityRule<f64> = RuleSpec::PoaOpt.build(4).unwrap();
        let direct = poa_optimal_rule(4, DEFAULT_POA_RULE_TOL).unwrap();
        assert_eq!(from_spec.values(), direct.values());
    }

    #[test]
    fn rule_json_round_trip() {
        let p = ParetoParameter::from_slack(rat(4, 5)).unwrap();
        let rule = pareto_rule(&p, 4).unwrap();
        let text = rule.to_json().unwrap();
        let back: UtilityRule<Rational> = UtilityRule::from_json(&text).unwrap();
        assert_eq!(back.values(), rule.values());
        assert_eq!(back.name(), rule.name());
    }
}
