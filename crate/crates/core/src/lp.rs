//! Dense two-phase simplex with Bland's rule.
//!
//! Small exact LPs only: chargeable cells of the relaxed dual, the relaxed
//! dual itself, cover and capacity relaxations, and the largest mass a full
//! coupling can put on a cell set. All variables are nonnegative; callers split
//! free variables themselves.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    num_vars: usize,
    sense: Sense,
    objective: Vec<T>,
    constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, x: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T: Scalar> LpOutcome<T> {
    pub fn optimal(self) -> Option<(T, Vec<T>)> {
        match self {
            LpOutcome::Optimal { value, x } => Some((value, x)),
            _ => None,
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        Self {
            num_vars,
            sense,
            objective: vec![T::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, var: usize, coeff: T) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) {
        debug_assert!(coeffs.iter().all(|(v, _)| *v < self.num_vars));
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpOutcome<T> {
        let mut tableau = Tableau::new(self);
        if !tableau.phase_one() {
            return LpOutcome::Infeasible;
        }
        let cost: Vec<T> = self
            .objective
            .iter()
            .map(|c| match self.sense {
                Sense::Minimize => c.clone(),
                Sense::Maximize => -c.clone(),
            })
            .collect();
        if !tableau.phase_two(&cost) {
            return LpOutcome::Unbounded;
        }
        let x = tableau.primal(self.num_vars);
        let value = x
            .iter()
            .zip(&self.objective)
            .fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
        LpOutcome::Optimal { value, x }
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// First artificial column; columns from here on are artificial.
    first_artificial: usize,
    num_cols: usize,
}

impl<T: Scalar> Tableau<T> {
    fn new(lp: &LinearProgram<T>) -> Self {
        let m = lp.constraints.len();
        let n = lp.num_vars;
        let slack_count = lp
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let first_artificial = n + slack_count;
        let artificial_count = lp
            .constraints
            .iter()
            .filter(|c| {
                let flipped = c.rhs.is_negative();
                let rel = flip(c.relation, flipped);
                rel != Relation::Le
            })
            .count();
        let num_cols = first_artificial + artificial_count;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_slack = n;
        let mut next_art = first_artificial;
        for c in &lp.constraints {
            let flipped = c.rhs.is_negative();
            let sign = if flipped { -T::one() } else { T::one() };
            let mut row = vec![T::zero(); num_cols];
            for (v, a) in &c.coeffs {
                row[*v] = row[*v].clone() + sign.clone() * a.clone();
            }
            let rel = flip(c.relation, flipped);
            if c.relation != Relation::Eq {
                row[next_slack] = if rel == Relation::Le { T::one() } else { -T::one() };
            }
            match rel {
                Relation::Le => basis.push(next_slack),
                _ => {
                    row[next_art] = T::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            if c.relation != Relation::Eq {
                next_slack += 1;
            }
            rows.push(row);
            rhs.push(sign * c.rhs.clone());
        }
        Self {
            rows,
            rhs,
            basis,
            first_artificial,
            num_cols,
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for k in 0..self.rows.len() {
            if k == r {
                continue;
            }
            let f = self.rows[k][col].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pv) in self.rows[k].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            self.rows[k][col] = T::zero();
            self.rhs[k] = self.rhs[k].clone() - f * pivot_rhs.clone();
        }
        self.basis[r] = col;
    }

    /// Minimizes `cost . x` over columns `< allowed`. False when unbounded.
    fn optimize(&mut self, cost: &[T], allowed: usize) -> bool {
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j].clone();
                for (r, &b) in self.basis.iter().enumerate() {
                    if b < cost.len() && !self.rows[r][j].is_zero() {
                        rc = rc - cost[b].clone() * self.rows[r][j].clone();
                    }
                }
                if rc.is_negative_tol() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return true };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if !a.is_positive_tol() {
                    continue;
                }
                let ratio = self.rhs[r].clone() / a.clone();
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio && !ratio.approx_eq(&lratio) {
                            Some((r, ratio))
                        } else if ratio.approx_eq(&lratio) && self.basis[r] < self.basis[lr] {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, col);
        }
    }

    fn phase_one(&mut self) -> bool {
        if self.first_artificial == self.num_cols {
            return true;
        }
        let mut cost = vec![T::zero(); self.num_cols];
        for c in cost.iter_mut().skip(self.first_artificial) {
            *c = T::one();
        }
        let bounded = self.optimize(&cost, self.num_cols);
        debug_assert!(bounded);
        let infeasibility = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(b, _)| **b >= self.first_artificial)
            .fold(T::zero(), |acc, (_, v)| acc + v.clone());
        if infeasibility.is_positive_tol() {
            return false;
        }
        // drive remaining artificials out of the basis; drop redundant rows
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| !self.rows[r][j].is_negligible());
                match col {
                    Some(col) => {
                        self.pivot(r, col);
                        r += 1;
                    }
                    None => {
                        self.rows.remove(r);
                        self.rhs.remove(r);
                        self.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        true
    }

    fn phase_two(&mut self, objective: &[T]) -> bool {
        let mut cost = objective.to_vec();
        cost.resize(self.first_artificial, T::zero());
        self.optimize(&cost, self.first_artificial)
    }

    fn primal(&self, n: usize) -> Vec<T> {
        let mut x = vec![T::zero(); n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs[r].clone();
            }
        }
        x
    }
}

fn flip(rel: Relation, flipped: bool) -> Relation {
    match (rel, flipped) {
        (r, false) => r,
        (Relation::Le, true) => Relation::Ge,
        (Relation::Ge, true) => Relation::Le,
        (Relation::Eq, true) => Relation::Eq,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rational, Rational};

    #[test]
    fn textbook_max() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LinearProgram::<Rational>::new(2, Sense::Maximize);
        lp.set_objective(0, int(3));
        lp.set_objective(1, int(5));
        lp.add_constraint(vec![(0, int(1))], Relation::Le, int(4));
        lp.add_constraint(vec![(1, int(2))], Relation::Le, int(12));
        lp.add_constraint(vec![(0, int(3)), (1, int(2))], Relation::Le, int(18));
        let (v, x) = lp.solve().optimal().unwrap();
        assert_eq!(v, int(36));
        assert_eq!(x, vec![int(2), int(6)]);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y s.t. x + y >= 1, x - y = 1/2
        let mut lp = LinearProgram::<Rational>::new(2, Sense::Minimize);
        lp.set_objective(0, int(1));
        lp.set_objective(1, int(1));
        lp.add_constraint(vec![(0, int(1)), (1, int(1))], Relation::Ge, int(1));
        lp.add_constraint(vec![(0, int(1)), (1, int(-1))], Relation::Eq, rational(1, 2));
        let (v, x) = lp.solve().optimal().unwrap();
        assert_eq!(v, int(1));
        assert_eq!(x, vec![rational(3, 4), rational(1, 4)]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::<Rational>::new(1, Sense::Minimize);
        lp.add_constraint(vec![(0, int(1))], Relation::Le, int(-1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::<Rational>::new(1, Sense::Maximize);
        lp.set_objective(0, int(1));
        lp.add_constraint(vec![(0, int(1))], Relation::Ge, int(1));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        // transportation 2x2 with a redundant marginal equation
        let mut lp = LinearProgram::<Rational>::new(4, Sense::Minimize);
        for (k, c) in [1, 3, 2, 1].into_iter().enumerate() {
            lp.set_objective(k, int(c));
        }
        let half = rational(1, 2);
        lp.add_constraint(vec![(0, int(1)), (1, int(1))], Relation::Eq, half.clone());
        lp.add_constraint(vec![(2, int(1)), (3, int(1))], Relation::Eq, half.clone());
        lp.add_constraint(vec![(0, int(1)), (2, int(1))], Relation::Eq, half.clone());
        lp.add_constraint(vec![(1, int(1)), (3, int(1))], Relation::Eq, half);
        let (v, _) = lp.solve().optimal().unwrap();
        assert_eq!(v, int(1));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::<Rational>::new(4, Sense::Minimize);
        lp.set_objective(0, rational(-3, 4));
        lp.set_objective(1, int(150));
        lp.set_objective(2, rational(-1, 50));
        lp.set_objective(3, int(6));
        lp.add_constraint(
            vec![(0, rational(1, 4)), (1, int(-60)), (2, rational(-1, 25)), (3, int(9))],
            Relation::Le,
            int(0),
        );
        lp.add_constraint(
            vec![(0, rational(1, 2)), (1, int(-90)), (2, rational(-1, 50)), (3, int(3))],
            Relation::Le,
            int(0),
        );
        lp.add_constraint(vec![(2, int(1))], Relation::Le, int(1));
        let (v, _) = lp.solve().optimal().unwrap();
        assert_eq!(v, rational(-1, 20));
    }
}
