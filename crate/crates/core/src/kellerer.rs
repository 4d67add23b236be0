//! Product-band covers of cell sets and the largest sub-coupling mass they
//! can carry.
//!
//! For `L ⊆ X × Y` the cover functional is
//! `m(L) = min{μ(A) + ν(B) : L ⊆ A×Y ∪ X×B}` and, on a square with a shared
//! marginal `λ`, the capacity is
//! `γ(L) = min{Σ λ_x f_x : 0 <= f <= 1, f_x + f_y >= 1 on L}`.
//! The cover LP is the dual of the max-flow over `L`'s cells, so
//! `m(L) = max_mass_on(L)`; thresholding an admissible `f` at one half gives a
//! cover, so `γ <= m <= 4γ`.

use crate::error::{Error, Result};
use crate::flow::{optimal_coupling_at, solve_profile};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::measure::{CostMatrix, Coupling, ExtendedCost, Marginal};
use crate::relaxation::complete_partial;
use crate::scalar::Scalar;

/// A subset of `X × Y` as a dense membership grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    nx: usize,
    ny: usize,
    member: Vec<bool>,
}

impl CellSet {
    pub fn empty(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            member: vec![false; nx * ny],
        }
    }

    pub fn full(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            member: vec![true; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let member = (0..nx * ny).map(|k| f(k / ny, k % ny)).collect();
        Self { nx, ny, member }
    }

    pub fn from_pairs(nx: usize, ny: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut set = Self::empty(nx, ny);
        for &(i, j) in pairs {
            if i >= nx || j >= ny {
                return Err(Error::DimensionMismatch {
                    expected: (nx, ny),
                    got: (i + 1, j + 1),
                });
            }
            set.insert(i, j);
        }
        Ok(set)
    }

    /// `{c = inf}`.
    pub fn infinite_cells<T: Scalar>(c: &CostMatrix<T>) -> Self {
        Self::from_fn(c.nx(), c.ny(), |i, j| c.get(i, j).is_infinite())
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.member[i * self.ny + j]
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        self.member[i * self.ny + j] = true;
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|b| *b)
    }

    /// Members in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let ny = self.ny;
        self.member
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(k, _)| (k / ny, k % ny))
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!((self.nx, self.ny), (other.nx, other.ny));
        Self {
            nx: self.nx,
            ny: self.ny,
            member: self.member.iter().zip(&other.member).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ny, self.nx, |i, j| self.contains(j, i))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.member.iter().zip(&other.member).all(|(a, b)| !*a || *b)
    }

    fn check<T: Scalar>(&self, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<()> {
        if (self.nx, self.ny) != (mu.len(), nu.len()) {
            return Err(Error::DimensionMismatch {
                expected: (self.nx, self.ny),
                got: (mu.len(), nu.len()),
            });
        }
        Ok(())
    }

    /// Zero cost on the set, infinite elsewhere.
    fn indicator_cost<T: Scalar>(&self) -> CostMatrix<T> {
        CostMatrix::from_fn(self.nx, self.ny, |i, j| {
            if self.contains(i, j) {
                ExtendedCost::zero()
            } else {
                ExtendedCost::Infinite
            }
        })
        .expect("nonempty grid")
    }
}

/// `A × Y ∪ X × B` covering a cell set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverCertificate<T> {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub value: T,
}

impl<T: Scalar> CoverCertificate<T> {
    pub fn covers(&self, l: &CellSet) -> bool {
        l.cells()
            .all(|(i, j)| self.rows.contains(&i) || self.cols.contains(&j))
    }
}

fn certificate<T: Scalar>(rows: Vec<usize>, cols: Vec<usize>, mu: &Marginal<T>, nu: &Marginal<T>) -> CoverCertificate<T> {
    let value = mu.measure_of(rows.iter().copied()) + nu.measure_of(cols.iter().copied());
    CoverCertificate { rows, cols, value }
}

/// Largest mass of a partial coupling of `(μ, ν)` supported on `L`.
pub fn max_mass_on<T: Scalar>(l: &CellSet, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<(T, Coupling<T>)> {
    l.check(mu, nu)?;
    let c = l.indicator_cost();
    let profile = solve_profile(&c, mu, nu)?;
    let mass = profile.max_mass().clone();
    let witness = optimal_coupling_at(&c, mu, nu, &mass)?;
    Ok((mass, witness))
}

/// Min-cut cover left by the maximum flow over `L`: rows the source cannot
/// reach and columns it can.
fn min_cut_cover<T: Scalar>(l: &CellSet, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<CoverCertificate<T>> {
    let profile = solve_profile(&l.indicator_cost(), mu, nu)?;
    let cut = profile.min_cut();
    let rows = (0..l.nx).filter(|&i| !cut.x[i]).collect();
    let cols = (0..l.ny).filter(|&j| cut.y[j]).collect();
    Ok(certificate(rows, cols, mu, nu))
}

/// `m(L)` with an optimal cover.
///
/// Solves the LP relaxation (`x_a + y_b >= 1` on `L`, `0 <= x, y <= 1`). A
/// fractional optimum is rounded by keeping the coordinates `>= 1/2`; the
/// rounded cover is accepted only if it matches the maximum mass on `L`, and
/// otherwise the flow's min-cut cover is used.
pub fn cover_value<T: Scalar>(
    l: &CellSet,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<(T, CoverCertificate<T>)> {
    l.check(mu, nu)?;
    if l.is_empty() {
        return Ok((T::zero(), certificate(Vec::new(), Vec::new(), mu, nu)));
    }
    let (nx, ny) = (l.nx, l.ny);
    let mut lp = LinearProgram::<T>::new(nx + ny, Sense::Minimize);
    for i in 0..nx {
        lp.set_objective(i, mu.weight(i).clone());
        lp.add_constraint(vec![(i, T::one())], Relation::Le, T::one());
    }
    for j in 0..ny {
        lp.set_objective(nx + j, nu.weight(j).clone());
        lp.add_constraint(vec![(nx + j, T::one())], Relation::Le, T::one());
    }
    for (i, j) in l.cells() {
        lp.add_constraint(vec![(i, T::one()), (nx + j, T::one())], Relation::Ge, T::one());
    }
    let (lp_value, x) = lp
        .solve()
        .optimal()
        .ok_or_else(|| Error::PostconditionViolated("cover LP has no optimum".into()))?;

    let half = T::one() / (T::one() + T::one());
    let rows: Vec<usize> = (0..nx).filter(|&i| half.approx_le(&x[i])).collect();
    let cols: Vec<usize> = (0..ny).filter(|&j| half.approx_le(&x[nx + j])).collect();
    let rounded = certificate(rows, cols, mu, nu);

    let (flow_mass, _) = max_mass_on(l, mu, nu)?;
    if !lp_value.approx_eq(&flow_mass) {
        return Err(Error::PostconditionViolated(format!(
            "cover LP value {} differs from maximum mass {}",
            lp_value.render(),
            flow_mass.render()
        )));
    }
    let cert = if rounded.covers(l) && rounded.value.approx_eq(&flow_mass) {
        rounded
    } else {
        min_cut_cover(l, mu, nu)?
    };
    debug_assert!(cert.covers(l));
    Ok((cert.value.clone(), cert))
}

/// Outcome of the null-set decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition<T> {
    /// `L ⊆ M×Y ∪ X×N` with `μ(M) = ν(N) = 0`.
    NullCover { rows: Vec<usize>, cols: Vec<usize> },
    /// A full coupling with `π(L) > 0`.
    Witness(Coupling<T>),
}

/// Either null bands covering `L`, or a full coupling charging `L`.
///
/// The witness is the maximum-mass sub-coupling on `L` completed to a full
/// coupling by adding the normalized product of the leftover marginals.
pub fn kellerer_decompose<T: Scalar>(
    l: &CellSet,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<Decomposition<T>> {
    l.check(mu, nu)?;
    let (mass, sub) = max_mass_on(l, mu, nu)?;
    if mass.is_negligible() {
        let rows = (0..l.nx)
            .filter(|&i| mu.weight(i).is_negligible() && (0..l.ny).any(|j| l.contains(i, j)))
            .collect();
        let cols = (0..l.ny)
            .filter(|&j| nu.weight(j).is_negligible() && (0..l.nx).any(|i| l.contains(i, j)))
            .collect();
        let cover = certificate(rows, cols, mu, nu);
        if !cover.covers(l) {
            return Err(Error::PostconditionViolated(
                "null bands do not cover the set".into(),
            ));
        }
        return Ok(Decomposition::NullCover {
            rows: cover.rows,
            cols: cover.cols,
        });
    }
    mu.require_probability()?;
    nu.require_probability()?;
    let full = complete_partial(&sub, mu, nu)?;
    Ok(Decomposition::Witness(full))
}

/// `γ(L)` and an optimal `f`.
pub fn capacity_value<T: Scalar>(l: &CellSet, lambda: &Marginal<T>) -> Result<(T, Vec<T>)> {
    let n = lambda.len();
    if (l.nx, l.ny) != (n, n) {
        return Err(Error::NotSquare {
            size: n,
            got: (l.nx, l.ny),
        });
    }
    if l.is_empty() {
        return Ok((T::zero(), vec![T::zero(); n]));
    }
    let mut lp = LinearProgram::<T>::new(n, Sense::Minimize);
    for x in 0..n {
        lp.set_objective(x, lambda.weight(x).clone());
        lp.add_constraint(vec![(x, T::one())], Relation::Le, T::one());
    }
    for (x, y) in l.cells() {
        let coeffs = if x == y {
            vec![(x, T::one() + T::one())]
        } else {
            vec![(x, T::one()), (y, T::one())]
        };
        lp.add_constraint(coeffs, Relation::Ge, T::one());
    }
    lp.solve()
        .optimal()
        .ok_or_else(|| Error::PostconditionViolated("capacity LP has no optimum".into()))
}

/// True iff every full coupling of `(μ, ν)` gives `L` zero mass, decided by
/// the LP `max π(L)` over full couplings.
pub fn null_for_all_couplings<T: Scalar>(l: &CellSet, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<bool> {
    l.check(mu, nu)?;
    mu.require_probability()?;
    nu.require_probability()?;
    if l.is_empty() {
        return Ok(true);
    }
    let (nx, ny) = (l.nx, l.ny);
    let var = |i: usize, j: usize| i * ny + j;
    let mut lp = LinearProgram::<T>::new(nx * ny, Sense::Maximize);
    for (i, j) in l.cells() {
        lp.set_objective(var(i, j), T::one());
    }
    for i in 0..nx {
        lp.add_constraint((0..ny).map(|j| (var(i, j), T::one())).collect(), Relation::Eq, mu.weight(i).clone());
    }
    for j in 0..ny {
        lp.add_constraint((0..nx).map(|i| (var(i, j), T::one())).collect(), Relation::Eq, nu.weight(j).clone());
    }
    let (value, _) = lp
        .solve()
        .optimal()
        .ok_or_else(|| Error::PostconditionViolated("coupling LP has no optimum".into()))?;
    Ok(value.is_negligible())
}
