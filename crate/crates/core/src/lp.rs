//! Exact-rational linear program oracle for the one-round price of best
//! response: one dual constraint per resource signature, solved with an
//! exact simplex and certified by feasibility plus strong duality. This is
//! the independent check that the closed form is right.

pub mod simplex;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rules::UtilityRule;
use crate::scalar::{Rational, Scalar};

/// Hard cap on agents: the signature count is `4^n - 1`.
pub const MAX_LP_AGENTS: usize = 8;

/// Which agents select a resource in the best-response profile (`br_set`)
/// and in the optimal profile (`opt_set`); agents are bits 0..n-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceSignature {
    pub br_set: u32,
    pub opt_set: u32,
}

impl ResourceSignature {
    fn members(mask: u32, n: usize) -> Vec<usize> {
        (0..n).filter(|&i| mask >> i & 1 == 1).collect()
    }

    /// Human-readable 1-indexed agent sets, e.g. `br={1,2} opt={2}`.
    pub fn describe(&self, n: usize) -> String {
        let fmt = |mask: u32| {
            let members: Vec<String> = Self::members(mask, n)
                .iter()
                .map(|i| (i + 1).to_string())
                .collect();
            members.join(",")
        };
        format!("br={{{}}} opt={{{}}}", fmt(self.br_set), fmt(self.opt_set))
    }
}

/// One dual constraint: `mu * mu_coeff >= rhs + sum_i lambda_gain[i] * lambda_i`.
#[derive(Debug, Clone)]
pub struct DualConstraint {
    pub signature: ResourceSignature,
    /// `min(|br_set|, 1)`.
    pub mu_coeff: Rational,
    /// `(1_br(i) - 1_opt(i)) * f(|br_set ∩ {1..i-1}| + 1)` per agent.
    pub lambda_gain: Vec<Rational>,
    /// `min(|opt_set|, 1)`.
    pub rhs: Rational,
}

impl DualConstraint {
    /// Evaluates feasibility slack `mu * mu_coeff - rhs - lambda_gain . lambda`.
    pub fn slack(&self, mu: &Rational, lambda: &[Rational]) -> Rational {
        let mut value = mu.clone() * self.mu_coeff.clone() - self.rhs.clone();
        for (gain, l) in self.lambda_gain.iter().zip(lambda) {
            value -= gain.clone() * l.clone();
        }
        value
    }
}

/// The dual program of the one-round PoB characterization:
/// `min mu` over `lambda_1..lambda_n >= 0` and free `mu`, one constraint per
/// signature, `4^n - 1` constraints in total.
#[derive(Debug, Clone)]
pub struct DualLp {
    pub n: usize,
    pub constraints: Vec<DualConstraint>,
}

/// Builds the dual LP for a rational rule and `n` agents.
pub fn build_dual_lp(rule: &UtilityRule<Rational>, n: usize) -> Result<DualLp> {
    if n == 0 {
        return Err(Error::Precondition("need at least 1 agent".into()));
    }
    if n > MAX_LP_AGENTS {
        return Err(Error::ResourceLimit(format!(
            "n = {n} means {} signatures; the cap is n <= {MAX_LP_AGENTS}",
            (1u64 << (2 * n)) - 1
        )));
    }
    if n > rule.n_max() {
        return Err(Error::Precondition(format!(
            "{}: n = {n} exceeds rule n_max = {}",
            rule.name(),
            rule.n_max()
        )));
    }
    let size = 1u32 << n;
    let mut constraints = Vec::with_capacity((size as usize * size as usize) - 1);
    for br in 0..size {
        for opt in 0..size {
            if br == 0 && opt == 0 {
                continue;
            }
            let mut lambda_gain = Vec::with_capacity(n);
            for i in 0..n {
                let in_br = br >> i & 1 == 1;
                let in_opt = opt >> i & 1 == 1;
                if in_br == in_opt {
                    lambda_gain.push(Rational::zero());
                    continue;
                }
                let prefix = (br & ((1u32 << i) - 1)).count_ones() as usize;
                let weight = rule.value(prefix + 1)?.clone();
                lambda_gain.push(if in_br { weight } else { -weight });
            }
            constraints.push(DualConstraint {
                signature: ResourceSignature {
                    br_set: br,
                    opt_set: opt,
                },
                mu_coeff: if br == 0 {
                    Rational::zero()
                } else {
                    Rational::one()
                },
                lambda_gain,
                rhs: if opt == 0 {
                    Rational::zero()
                } else {
                    Rational::one()
                },
            });
        }
    }
    Ok(DualLp { n, constraints })
}

/// Exact optimal `(mu*, lambda*)` of the dual LP.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub mu: Rational,
    pub lambda: Vec<Rational>,
}

/// Solves the dual LP exactly.
///
/// Internally pivots on the LP's own dual (one column per signature, `n + 1`
/// rows), where the optimal row multipliers are exactly `(mu*, lambda*)`;
/// the returned pair is then certified against every constraint of `lp`, so
/// a conventions bug cannot produce a silently wrong optimum.
pub fn solve_lp(lp: &DualLp) -> Result<LpSolution> {
    let columns = lp.constraints.len();
    let mut objective = Vec::with_capacity(columns);
    let mut normalization = Vec::with_capacity(columns);
    let mut balance = vec![Vec::with_capacity(columns); lp.n];
    for c in &lp.constraints {
        objective.push(-c.rhs.clone());
        normalization.push(c.mu_coeff.clone());
        for (i, gain) in c.lambda_gain.iter().enumerate() {
            balance[i].push(gain.clone());
        }
    }
    let mut rows = vec![(normalization, simplex::Rel::Eq, Rational::one())];
    for coeffs in balance {
        rows.push((coeffs, simplex::Rel::Ge, Rational::zero()));
    }
    let optimum = simplex::solve(&simplex::Problem { objective, rows })?;

    let mu = -optimum.objective.clone();
    let lambda = optimum.duals[1..].to_vec();

    // Certificate: (mu, lambda) must be feasible for every constraint and
    // match the attained objective; otherwise the solver has a bug.
    for l in &lambda {
        if *l < Rational::zero() {
            return Err(Error::Internal(format!("negative multiplier {l}")));
        }
    }
    for c in &lp.constraints {
        if c.slack(&mu, &lambda) < Rational::zero() {
            return Err(Error::Internal(format!(
                "optimum violates constraint {}",
                c.signature.describe(lp.n)
            )));
        }
    }
    if optimum.duals[0] != optimum.objective {
        return Err(Error::Internal(
            "normalization multiplier does not match the objective".into(),
        ));
    }
    Ok(LpSolution { mu, lambda })
}

/// One-round PoB by LP: `1 / mu*`. Equals the closed form exactly.
pub fn lp_pob(rule: &UtilityRule<Rational>, n: usize) -> Result<Rational> {
    let lp = build_dual_lp(rule, n)?;
    let solution = solve_lp(&lp)?;
    if solution.mu <= Rational::zero() {
        return Err(Error::Internal(format!(
            "nonpositive LP optimum {}",
            solution.mu
        )));
    }
    Ok(Rational::one() / solution.mu)
}

impl DualLp {
    /// Plain-text listing of the program for external cross-checking.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("minimize mu\n");
        out.push_str(&format!(
            "variables: mu free; lambda1..lambda{} >= 0\n",
            self.n
        ));
        out.push_str("subject to:\n");
        for c in &self.constraints {
            let mut line = format!("  {}*mu >= {}", c.mu_coeff.render(), c.rhs.render());
            for (i, gain) in c.lambda_gain.iter().enumerate() {
                if !gain.is_zero() {
                    line.push_str(&format!(" + ({})*lambda{}", gain.render(), i + 1));
                }
            }
            line.push_str(&format!("   ; {}\n", c.signature.describe(self.n)));
            out.push_str(&line);
        }
        out
    }
}
