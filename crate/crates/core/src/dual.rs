//! Dual values and certificates.
//!
//! Potentials take values in `[-inf, inf)`. The dual objective uses the
//! convention `(-inf) · 0 = 0`, so a `-inf` potential on a zero-weight atom
//! costs nothing, and `-inf + anything` satisfies every constraint.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{solve_profile, PotentialPair};
use crate::kellerer::CellSet;
use crate::lp::{LinearProgram, Relation, Sense};
use crate::measure::{cost_of, truncate_cost_const, CostMatrix, Coupling, ExtendedCost, Marginal};
use crate::primal::{primal_value, relaxed_value};
use crate::scalar::Scalar;

/// A value in `[-inf, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential<T> {
    NegInfinite,
    Finite(T),
}

impl<T: Scalar> Potential<T> {
    pub fn finite(&self) -> Option<&T> {
        match self {
            Potential::Finite(v) => Some(v),
            Potential::NegInfinite => None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (Potential::Finite(a), Potential::Finite(b)) => Potential::Finite(a.clone() + b.clone()),
            _ => Potential::NegInfinite,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Potential::Finite(v) => v.render(),
            Potential::NegInfinite => "-inf".to_string(),
        }
    }
}

impl<T: Scalar> fmt::Display for Potential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Potentials `(φ, ψ)` with their objective `Σ φ μ + Σ ψ ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair<T> {
    pub phi: Vec<Potential<T>>,
    pub psi: Vec<Potential<T>>,
    pub objective: Potential<T>,
}

impl<T: Scalar> DualPair<T> {
    pub fn new(
        phi: Vec<Potential<T>>,
        psi: Vec<Potential<T>>,
        mu: &Marginal<T>,
        nu: &Marginal<T>,
    ) -> Result<Self> {
        if phi.len() != mu.len() {
            return Err(Error::LengthMismatch {
                expected: mu.len(),
                got: phi.len(),
            });
        }
        if psi.len() != nu.len() {
            return Err(Error::LengthMismatch {
                expected: nu.len(),
                got: psi.len(),
            });
        }
        let objective = objective(&phi, mu).add(&objective(&psi, nu));
        Ok(Self {
            phi,
            psi,
            objective,
        })
    }

    pub fn from_finite(u: Vec<T>, v: Vec<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<Self> {
        Self::new(
            u.into_iter().map(Potential::Finite).collect(),
            v.into_iter().map(Potential::Finite).collect(),
            mu,
            nu,
        )
    }

    pub fn zero(mu: &Marginal<T>, nu: &Marginal<T>) -> Self {
        Self::from_finite(vec![T::zero(); mu.len()], vec![T::zero(); nu.len()], mu, nu)
            .expect("lengths match")
    }

    /// `φ_i + ψ_j`.
    pub fn sum_at(&self, i: usize, j: usize) -> Potential<T> {
        self.phi[i].add(&self.psi[j])
    }
}

fn objective<T: Scalar>(values: &[Potential<T>], weights: &Marginal<T>) -> Potential<T> {
    let mut total = T::zero();
    for (p, w) in values.iter().zip(weights.weights()) {
        if w.is_zero() {
            continue;
        }
        match p {
            Potential::Finite(v) => total = total + v.clone() * w.clone(),
            Potential::NegInfinite => return Potential::NegInfinite,
        }
    }
    Potential::Finite(total)
}

/// Direction along which the dual objective grows without bound: raise `φ`
/// on `rows` and lower `ψ` on `cols` by the same amount `t`. Every finite cell
/// leaving `rows` lands in `cols`, so feasibility is kept, and the objective
/// grows at `rate = μ(rows) - ν(cols) > 0` per unit of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovingRay<T> {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub rate: T,
}

impl<T: Scalar> ImprovingRay<T> {
    pub fn is_certified(&self, c: &CostMatrix<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> bool {
        let in_cols = |j: usize| self.cols.contains(&j);
        let closed = self
            .rows
            .iter()
            .all(|&i| (0..c.ny()).all(|j| c.get(i, j).is_infinite() || in_cols(j)));
        let rate = mu.measure_of(self.rows.iter().copied()) - nu.measure_of(self.cols.iter().copied());
        closed && rate.approx_eq(&self.rate) && rate.is_positive_tol()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution<T> {
    pub value: ExtendedCost<T>,
    /// An optimal feasible pair when the value is finite; the zero pair
    /// otherwise (feasible because costs are nonnegative).
    pub pair: DualPair<T>,
    /// Present iff the dual is unbounded.
    pub ray: Option<ImprovingRay<T>>,
}

/// `D = sup{Σ φ μ + Σ ψ ν : φ_i + ψ_j <= c(i, j)}`.
///
/// Read off the flow potentials at full mass. Those potentials keep every
/// finite cell's reduced cost nonnegative, including cells touching
/// zero-weight atoms or nodes the flow never reached, so the pair is feasible
/// everywhere. Without a finite-cost full coupling the maximum flow's cut
/// yields an [`ImprovingRay`] and the value is infinite.
pub fn dual_value<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<DualSolution<T>> {
    mu.require_probability()?;
    nu.require_probability()?;
    let profile = solve_profile(c, mu, nu)?;
    if T::one().approx_le(profile.max_mass()) {
        let PotentialPair { u, v } = profile.final_potentials().clone();
        let pair = DualPair::from_finite(u, v, mu, nu)?;
        let value = match &pair.objective {
            Potential::Finite(v) => ExtendedCost::Finite(v.clone()),
            Potential::NegInfinite => unreachable!("finite potentials"),
        };
        return Ok(DualSolution {
            value,
            pair,
            ray: None,
        });
    }
    let cut = profile.min_cut();
    let rows: Vec<usize> = (0..c.nx()).filter(|&i| cut.x[i]).collect();
    let cols: Vec<usize> = (0..c.ny()).filter(|&j| cut.y[j]).collect();
    let rate = mu.measure_of(rows.iter().copied()) - nu.measure_of(cols.iter().copied());
    Ok(DualSolution {
        value: ExtendedCost::Infinite,
        pair: DualPair::zero(mu, nu),
        ray: Some(ImprovingRay { rows, cols, rate }),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// First violated cell in row-major order.
    pub first_violation: Option<(usize, usize)>,
}

/// Exhaustive check of `φ_i + ψ_j <= c(i, j)`; infinite cells and `-inf`
/// potentials never violate.
pub fn verify_feasible<T: Scalar>(pair: &DualPair<T>, c: &CostMatrix<T>) -> Feasibility {
    let violation = c.finite_cells().find(|(i, j, cij)| match pair.sum_at(*i, *j) {
        Potential::NegInfinite => false,
        Potential::Finite(s) => !s.approx_le(cij),
    });
    Feasibility {
        feasible: violation.is_none(),
        first_violation: violation.map(|(i, j, _)| (i, j)),
    }
}

/// `J_c(φ, ψ) = ∫ (φ(x) + ψ(y)) dπ` over a finite-cost coupling. For an
/// integrable pair and a full coupling it equals the dual objective, and it
/// does not depend on which finite-cost coupling is used.
pub fn j_functional<T: Scalar>(
    pair: &DualPair<T>,
    pi: &Coupling<T>,
    c: &CostMatrix<T>,
) -> Result<Potential<T>> {
    if cost_of(c, pi)?.is_infinite() {
        return Err(Error::PreconditionViolated(
            "the coupling charges an infinite-cost cell".into(),
        ));
    }
    if let Some((i, j)) = verify_feasible(pair, c).first_violation {
        return Err(Error::PreconditionViolated(format!(
            "dual pair violates the constraint at ({i}, {j})"
        )));
    }
    let mut total = T::zero();
    for ((i, j), mass) in pi.entries() {
        match pair.sum_at(*i, *j) {
            Potential::NegInfinite => return Ok(Potential::NegInfinite),
            Potential::Finite(s) => total = total + s * mass.clone(),
        }
    }
    Ok(Potential::Finite(total))
}

/// Cells charged by at least one finite-cost full coupling.
///
/// One LP per cell, `max π_ij` over full couplings supported on finite cells.
/// Every optimal solution also marks the other cells it charges, so those
/// LPs are skipped.
pub fn chargeable_set<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<CellSet> {
    let (nx, ny) = c.dims();
    let vars: Vec<(usize, usize)> = c.finite_cells().map(|(i, j, _)| (i, j)).collect();
    let mut base = LinearProgram::<T>::new(vars.len(), Sense::Maximize);
    for i in 0..nx {
        let row = vars
            .iter()
            .enumerate()
            .filter(|(_, (a, _))| *a == i)
            .map(|(k, _)| (k, T::one()))
            .collect();
        base.add_constraint(row, Relation::Eq, mu.weight(i).clone());
    }
    for j in 0..ny {
        let col = vars
            .iter()
            .enumerate()
            .filter(|(_, (_, b))| *b == j)
            .map(|(k, _)| (k, T::one()))
            .collect();
        base.add_constraint(col, Relation::Eq, nu.weight(j).clone());
    }

    let mut charged = CellSet::empty(nx, ny);
    let mut decided = vec![false; vars.len()];
    // Solve in waves: each batch runs in parallel, results merge in cell order.
    let mut next = 0;
    while next < vars.len() {
        let batch: Vec<usize> = (next..vars.len()).filter(|&k| !decided[k]).take(8).collect();
        if batch.is_empty() {
            break;
        }
        let results: Vec<Option<Vec<T>>> = batch
            .par_iter()
            .map(|&k| {
                let mut lp = base.clone();
                lp.set_objective(k, T::one());
                lp.solve().optimal().map(|(_, x)| x)
            })
            .collect();
        for (&k, x) in batch.iter().zip(results) {
            decided[k] = true;
            let Some(x) = x else {
                return Err(Error::NotApplicable("no finite-cost full coupling exists".into()));
            };
            for (m, xm) in x.iter().enumerate() {
                if xm.is_positive_tol() {
                    let (i, j) = vars[m];
                    charged.insert(i, j);
                    decided[m] = true;
                }
            }
        }
        next = *batch.last().expect("nonempty batch") + 1;
    }
    Ok(charged)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedDual<T> {
    pub value: T,
    pub chargeable: CellSet,
    pub pair: DualPair<T>,
}

/// The relaxed dual: constraints are imposed only on cells charged by some
/// finite-cost full coupling. Satisfies `D <= D^rel <= P`.
pub fn relaxed_dual_value<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<RelaxedDual<T>> {
    mu.require_probability()?;
    nu.require_probability()?;
    if primal_value(c, mu, nu)?.is_infinite() {
        return Err(Error::NotApplicable(
            "no full coupling of finite cost exists".into(),
        ));
    }
    let chargeable = chargeable_set(c, mu, nu)?;
    let (nx, ny) = c.dims();
    // φ_i = a_i - b_i, ψ_j = a'_j - b'_j with all parts nonnegative
    let phi_pos = |i: usize| i;
    let phi_neg = |i: usize| nx + i;
    let psi_pos = |j: usize| 2 * nx + j;
    let psi_neg = |j: usize| 2 * nx + ny + j;
    let mut lp = LinearProgram::<T>::new(2 * (nx + ny), Sense::Maximize);
    for i in 0..nx {
        lp.set_objective(phi_pos(i), mu.weight(i).clone());
        lp.set_objective(phi_neg(i), -mu.weight(i).clone());
    }
    for j in 0..ny {
        lp.set_objective(psi_pos(j), nu.weight(j).clone());
        lp.set_objective(psi_neg(j), -nu.weight(j).clone());
    }
    for (i, j) in chargeable.cells() {
        let cij = c.get(i, j).finite().expect("chargeable cells are finite").clone();
        lp.add_constraint(
            vec![
                (phi_pos(i), T::one()),
                (phi_neg(i), -T::one()),
                (psi_pos(j), T::one()),
                (psi_neg(j), -T::one()),
            ],
            Relation::Le,
            cij,
        );
    }
    let (value, x) = lp.solve().optimal().ok_or_else(|| {
        Error::PostconditionViolated("relaxed dual LP is not bounded".into())
    })?;
    let phi = (0..nx)
        .map(|i| x[phi_pos(i)].clone() - x[phi_neg(i)].clone())
        .collect();
    let psi = (0..ny)
        .map(|j| x[psi_pos(j)].clone() - x[psi_neg(j)].clone())
        .collect();
    Ok(RelaxedDual {
        value,
        chargeable,
        pair: DualPair::from_finite(phi, psi, mu, nu)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attainment<T> {
    pub attained: bool,
    /// Least grid level `M` with `P_{c∧M} = P^rel`.
    pub level: Option<T>,
    /// Optimal dual pair of the truncated problem at that level.
    pub pair: Option<DualPair<T>>,
    /// `h(x, y) = (φ(x) + ψ(y))_+` for that pair.
    pub h: Option<CostMatrix<T>>,
}

/// Scans an ascending grid of constant truncation levels for the first one
/// where truncation stops changing the value.
pub fn attainment_check<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    m_grid: &[T],
) -> Result<Attainment<T>> {
    if let Some(k) = (1..m_grid.len()).find(|&k| m_grid[k] < m_grid[k - 1]) {
        return Err(Error::NonMonotoneLevels(k));
    }
    let none = Attainment {
        attained: false,
        level: None,
        pair: None,
        h: None,
    };
    let target = relaxed_value(c, mu, nu)?;
    if target.is_infinite() {
        return Ok(none);
    }
    for m in m_grid {
        let truncated = truncate_cost_const(c, m)?;
        if !primal_value(&truncated, mu, nu)?.approx_eq(&target) {
            continue;
        }
        let pair = dual_value(&truncated, mu, nu)?.pair;
        let h = positive_part_matrix(&pair, c.nx(), c.ny())?;
        return Ok(Attainment {
            attained: true,
            level: Some(m.clone()),
            pair: Some(pair),
            h: Some(h),
        });
    }
    Ok(none)
}

fn positive_part_matrix<T: Scalar>(pair: &DualPair<T>, nx: usize, ny: usize) -> Result<CostMatrix<T>> {
    CostMatrix::from_fn(nx, ny, |i, j| match pair.sum_at(i, j) {
        Potential::Finite(s) => ExtendedCost::Finite(T::max_of(s, T::zero())),
        Potential::NegInfinite => ExtendedCost::Finite(T::zero()),
    })
}

/// A constant level `M` with `P_{c∧M} = P`, certified by an optimal dual pair:
/// when `M >= max (φ_i + ψ_j)_+` over all cells the pair stays feasible for
/// `c∧M`, so the truncated value cannot drop below `P`.
pub fn certified_truncation_level<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<Option<T>> {
    let sol = dual_value(c, mu, nu)?;
    if sol.value.is_infinite() {
        return Ok(None);
    }
    let h = positive_part_matrix(&sol.pair, c.nx(), c.ny())?;
    Ok(Some(h.max_finite().unwrap_or_else(T::zero)))
}
