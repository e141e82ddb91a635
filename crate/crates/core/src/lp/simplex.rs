//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Small and auditable rather than fast: the LPs in this crate have at most
//! a handful of rows, and exactness is the point.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Ge,
    Le,
}

/// `min c'x  s.t.  rows, x >= 0`. Free variables must be split by the caller.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Vec<Rational>,
    pub rows: Vec<(Vec<Rational>, Rel, Rational)>,
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub objective: Rational,
    pub x: Vec<Rational>,
    /// One multiplier per input row, in the `y'b = objective` convention
    /// (>= 0 on binding `Ge` rows, <= 0 on `Le`, free on `Eq`).
    pub duals: Vec<Rational>,
}

struct Tableau {
    /// m x (columns + 1) matrix; last column is the right-hand side.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    columns: usize,
    artificial_start: usize,
    /// +1 if the input row kept its sign during normalization, -1 if negated.
    row_sign: Vec<i32>,
}

pub fn solve(problem: &Problem) -> Result<Optimum> {
    let vars = problem.objective.len();
    let m = problem.rows.len();
    for (coeffs, _, _) in &problem.rows {
        if coeffs.len() != vars {
            return Err(Error::Internal("ragged LP row".into()));
        }
    }

    // Layout: structural vars | one slack/surplus per inequality | artificials.
    let slack_count = problem
        .rows
        .iter()
        .filter(|(_, rel, _)| *rel != Rel::Eq)
        .count();
    let structural = vars + slack_count;
    let columns = structural + m;
    let mut rows = Vec::with_capacity(m);
    let mut row_sign = vec![1i32; m];
    let mut slack_cursor = vars;
    for (i, (coeffs, rel, rhs)) in problem.rows.iter().enumerate() {
        let mut row = vec![Rational::zero(); columns + 1];
        for (j, c) in coeffs.iter().enumerate() {
            row[j] = c.clone();
        }
        match rel {
            Rel::Eq => {}
            Rel::Ge => {
                row[slack_cursor] = -Rational::one();
                slack_cursor += 1;
            }
            Rel::Le => {
                row[slack_cursor] = Rational::one();
                slack_cursor += 1;
            }
        }
        row[columns] = rhs.clone();
        if row[columns] < Rational::zero() {
            for entry in row.iter_mut() {
                *entry = -entry.clone();
            }
            row_sign[i] = -1;
        }
        // artificial for this row
        row[structural + i] = Rational::one();
        rows.push(row);
    }

    let mut tableau = Tableau {
        rows,
        basis: (structural..columns).collect(),
        columns,
        artificial_start: structural,
        row_sign,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![Rational::zero(); columns];
    for cost in phase1[structural..].iter_mut() {
        *cost = Rational::one();
    }
    run_simplex(&mut tableau, &phase1, true)?;
    let infeasibility = objective_value(&tableau, &phase1);
    if !infeasibility.is_zero() {
        return Err(Error::LpInfeasible);
    }

    // Drive basic artificials out on a degenerate pivot wherever the row has
    // a nonzero structural entry; rows without one are redundant and inert.
    for i in 0..m {
        if tableau.basis[i] < tableau.artificial_start {
            continue;
        }
        let swap = (0..tableau.artificial_start)
            .find(|&j| !tableau.basis.contains(&j) && !tableau.rows[i][j].is_zero());
        if let Some(j) = swap {
            pivot(&mut tableau, i, j);
        }
    }

    // Phase 2: the real objective; artificials can never re-enter.
    let mut phase2 = vec![Rational::zero(); columns];
    for (j, c) in problem.objective.iter().enumerate() {
        phase2[j] = c.clone();
    }
    run_simplex(&mut tableau, &phase2, false)?;

    let mut x = vec![Rational::zero(); vars];
    for (i, &b) in tableau.basis.iter().enumerate() {
        if b < vars {
            x[b] = tableau.rows[i][columns].clone();
        }
    }
    // Multiplier for row i is the reduced objective weight on its artificial
    // column, un-flipping any normalization negation.
    let duals = (0..m)
        .map(|i| {
            let z = column_price(&tableau, &phase2, tableau.artificial_start + i);
            if tableau.row_sign[i] < 0 {
                -z
            } else {
                z
            }
        })
        .collect();
    Ok(Optimum {
        objective: objective_value(&tableau, &phase2),
        x,
        duals,
    })
}

/// `z_j = c_B' B^-1 A_j` for column `j` of the current tableau.
fn column_price(t: &Tableau, costs: &[Rational], j: usize) -> Rational {
    let mut z = Rational::zero();
    for (i, &b) in t.basis.iter().enumerate() {
        if !costs[b].is_zero() {
            z += costs[b].clone() * t.rows[i][j].clone();
        }
    }
    z
}

fn objective_value(t: &Tableau, costs: &[Rational]) -> Rational {
    let mut value = Rational::zero();
    for (i, &b) in t.basis.iter().enumerate() {
        if !costs[b].is_zero() {
            value += costs[b].clone() * t.rows[i][t.columns].clone();
        }
    }
    value
}

fn run_simplex(t: &mut Tableau, costs: &[Rational], allow_artificials: bool) -> Result<()> {
    loop {
        // Bland: entering column is the lowest index with negative reduced cost.
        let mut entering = None;
        for j in 0..t.columns {
            if !allow_artificials && j >= t.artificial_start {
                break;
            }
            if t.basis.contains(&j) {
                continue;
            }
            let reduced = costs[j].clone() - column_price(t, costs, j);
            if reduced < Rational::zero() {
                entering = Some(j);
                break;
            }
        }
        let Some(entering) = entering else {
            return Ok(());
        };

        // Ratio test; Bland tie-break on the smallest basis column.
        let mut leaving: Option<(usize, Rational)> = None;
        for i in 0..t.rows.len() {
            let coeff = &t.rows[i][entering];
            if *coeff <= Rational::zero() {
                continue;
            }
            let ratio = t.rows[i][t.columns].clone() / coeff.clone();
            match &leaving {
                Some((row, best)) => {
                    if ratio < *best || (ratio == *best && t.basis[i] < t.basis[*row]) {
                        leaving = Some((i, ratio));
                    }
                }
                None => leaving = Some((i, ratio)),
            }
        }
        let Some((pivot_row, _)) = leaving else {
            return Err(Error::LpUnbounded);
        };
        pivot(t, pivot_row, entering);
    }
}

fn pivot(t: &mut Tableau, pivot_row: usize, entering: usize) {
    let divisor = t.rows[pivot_row][entering].clone();
    for entry in t.rows[pivot_row].iter_mut() {
        *entry /= divisor.clone();
    }
    for i in 0..t.rows.len() {
        if i == pivot_row {
            continue;
        }
        let factor = t.rows[i][entering].clone();
        if factor.is_zero() {
            continue;
        }
        for j in 0..=t.columns {
            let delta = factor.clone() * t.rows[pivot_row][j].clone();
            t.rows[i][j] -= delta;
        }
    }
    t.basis[pivot_row] = entering;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn minimizes_free_variable_against_lower_bound() {
        // min mu s.t. mu >= 5, with mu = u - w split into nonnegatives.
        let p = Problem {
            objective: vec![rat(1, 1), rat(-1, 1)],
            rows: vec![(vec![rat(1, 1), rat(-1, 1)], Rel::Ge, rat(5, 1))],
        };
        let opt = solve(&p).unwrap();
        assert_eq!(opt.objective, rat(5, 1));
        assert_eq!(opt.duals, vec![rat(1, 1)]);
    }

    #[test]
    fn solves_small_dense_program() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6  (as min of the negation)
        let p = Problem {
            objective: vec![rat(-1, 1), rat(-1, 1)],
            rows: vec![
                (vec![rat(1, 1), rat(2, 1)], Rel::Le, rat(4, 1)),
                (vec![rat(3, 1), rat(1, 1)], Rel::Le, rat(6, 1)),
            ],
        };
        let opt = solve(&p).unwrap();
        assert_eq!(opt.objective, rat(-14, 5));
        assert_eq!(opt.x, vec![rat(8, 5), rat(6, 5)]);
        // y'b = objective
        let paid = opt.duals[0].clone() * rat(4, 1) + opt.duals[1].clone() * rat(6, 1);
        assert_eq!(paid, opt.objective);
    }

    #[test]
    fn detects_infeasible() {
        let p = Problem {
            objective: vec![rat(1, 1)],
            rows: vec![
                (vec![rat(1, 1)], Rel::Le, rat(1, 1)),
                (vec![rat(1, 1)], Rel::Ge, rat(2, 1)),
            ],
        };
        assert!(matches!(solve(&p), Err(Error::LpInfeasible)));
    }

    #[test]
    fn detects_unbounded() {
        let p = Problem {
            objective: vec![rat(-1, 1)],
            rows: vec![(vec![rat(1, 1)], Rel::Ge, rat(0, 1))],
        };
        assert!(matches!(solve(&p), Err(Error::LpUnbounded)));
    }

    #[test]
    fn equality_rows_and_duals() {
        // min x + y s.t. x + y = 2, x >= 0, y >= 0
        let p = Problem {
            objective: vec![rat(1, 1), rat(1, 1)],
            rows: vec![(vec![rat(1, 1), rat(1, 1)], Rel::Eq, rat(2, 1))],
        };
        let opt = solve(&p).unwrap();
        assert_eq!(opt.objective, rat(2, 1));
        assert_eq!(opt.duals, vec![rat(1, 1)]);
    }
}
