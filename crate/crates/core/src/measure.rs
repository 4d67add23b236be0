//! Finite spaces, marginals, `[0, inf]`-valued costs and couplings.
//!
//! Infinity is a symbolic tag, never a large finite number. Cost integrals use
//! the measure-theoretic convention `0 * inf = 0`: cells a coupling does not
//! charge contribute nothing, whatever their cost.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteSpace {
    size: usize,
    labels: Option<Vec<String>>,
}

impl DiscreteSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptySpace);
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut seen = BTreeSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, index: usize) -> String {
        match &self.labels {
            Some(labels) => labels[index].clone(),
            None => index.to_string(),
        }
    }
}

/// Nonnegative weights over a [`DiscreteSpace`]. Probability status is a
/// checked predicate ([`Marginal::is_probability`]), not a separate type.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal<T> {
    space: DiscreteSpace,
    weights: Vec<T>,
    mass: T,
}

impl<T: Scalar> Marginal<T> {
    pub fn new(space: DiscreteSpace, weights: Vec<T>) -> Result<Self> {
        if weights.len() != space.size() {
            return Err(Error::LengthMismatch {
                expected: space.size(),
                got: weights.len(),
            });
        }
        if let Some((index, w)) = weights.iter().enumerate().find(|(_, w)| w.is_negative()) {
            return Err(Error::NegativeWeight {
                index,
                value: w.render(),
            });
        }
        let mass = crate::scalar::sum(&weights);
        Ok(Self {
            space,
            weights,
            mass,
        })
    }

    /// Convenience constructor over an unlabeled space of `weights.len()` points.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let space = DiscreteSpace::new(weights.len())?;
        Self::new(space, weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        let w = T::one() / T::from_usize(n.max(1));
        Self::from_weights(vec![w; n])
    }

    pub fn zero(space: DiscreteSpace) -> Self {
        let n = space.size();
        Self {
            space,
            weights: vec![T::zero(); n],
            mass: T::zero(),
        }
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> &T {
        &self.weights[index]
    }

    pub fn mass(&self) -> &T {
        &self.mass
    }

    pub fn is_probability(&self) -> bool {
        self.mass.approx_eq(&T::one())
    }

    pub fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::NotProbability(self.mass.render()))
        }
    }

    /// Measure of a set of atoms.
    pub fn measure_of<I: IntoIterator<Item = usize>>(&self, atoms: I) -> T {
        atoms
            .into_iter()
            .fold(T::zero(), |acc, i| acc + self.weights[i].clone())
    }

    pub fn scaled(&self, factor: &T) -> Result<Self> {
        if factor.is_negative() {
            return Err(Error::NegativeScale(factor.render()));
        }
        let weights = self.weights.iter().map(|w| w.clone() * factor.clone()).collect();
        Self::new(self.space.clone(), weights)
    }

    /// Componentwise product `density * self`, i.e. the measure `f mu`.
    pub fn with_density(&self, density: &[T]) -> Result<Self> {
        if density.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: density.len(),
            });
        }
        let weights = self
            .weights
            .iter()
            .zip(density)
            .map(|(w, f)| w.clone() * f.clone())
            .collect();
        Self::new(self.space.clone(), weights)
    }

    /// Componentwise `self <= other` up to tolerance.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.approx_le(b))
    }

    /// Componentwise difference `self - other`, which must stay nonnegative.
    pub fn deficit(&self, other: &Self) -> Result<Self> {
        let weights: Vec<T> = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| {
                let d = a.clone() - b.clone();
                if d.is_negligible() {
                    T::zero()
                } else {
                    d
                }
            })
            .collect();
        Self::new(self.space.clone(), weights)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Marginal<U> {
        let weights: Vec<U> = self.weights.iter().map(f).collect();
        let mass = crate::scalar::sum(&weights);
        Marginal {
            space: self.space.clone(),
            weights,
            mass,
        }
    }
}

/// Validated marginal over an unlabeled space of the given size.
pub fn make_marginal<T: Scalar>(space: DiscreteSpace, weights: Vec<T>) -> Result<Marginal<T>> {
    Marginal::new(space, weights)
}

/// A value in `[0, inf]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedCost<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> ExtendedCost<T> {
    pub fn zero() -> Self {
        ExtendedCost::Finite(T::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedCost::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedCost::Infinite)
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            ExtendedCost::Finite(v) => Some(v),
            ExtendedCost::Infinite => None,
        }
    }

    pub fn into_finite(self) -> Option<T> {
        match self {
            ExtendedCost::Finite(v) => Some(v),
            ExtendedCost::Infinite => None,
        }
    }

    pub fn min(&self, other: &Self) -> Self {
        match (self, other) {
            (ExtendedCost::Infinite, x) | (x, ExtendedCost::Infinite) => x.clone(),
            (ExtendedCost::Finite(a), ExtendedCost::Finite(b)) => {
                ExtendedCost::Finite(T::min_of(a.clone(), b.clone()))
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (ExtendedCost::Finite(a), ExtendedCost::Finite(b)) => {
                ExtendedCost::Finite(a.clone() + b.clone())
            }
            _ => ExtendedCost::Infinite,
        }
    }

    /// Exact or tolerance-aware equality.
    pub fn approx_eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ExtendedCost::Finite(a), ExtendedCost::Finite(b)) => a.approx_eq(b),
            (ExtendedCost::Infinite, ExtendedCost::Infinite) => true,
            _ => false,
        }
    }

    pub fn approx_le(&self, other: &Self) -> bool {
        match (self, other) {
            (_, ExtendedCost::Infinite) => true,
            (ExtendedCost::Infinite, ExtendedCost::Finite(_)) => false,
            (ExtendedCost::Finite(a), ExtendedCost::Finite(b)) => a.approx_le(b),
        }
    }

    /// `"p/q"`, a decimal, or `"inf"`.
    pub fn render(&self) -> String {
        match self {
            ExtendedCost::Finite(v) => v.render(),
            ExtendedCost::Infinite => "inf".to_string(),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ExtendedCost<U> {
        match self {
            ExtendedCost::Finite(v) => ExtendedCost::Finite(f(v)),
            ExtendedCost::Infinite => ExtendedCost::Infinite,
        }
    }
}

impl<T: Scalar> PartialOrd for ExtendedCost<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtendedCost::Infinite, ExtendedCost::Infinite) => Some(Ordering::Equal),
            (ExtendedCost::Infinite, _) => Some(Ordering::Greater),
            (_, ExtendedCost::Infinite) => Some(Ordering::Less),
            (ExtendedCost::Finite(a), ExtendedCost::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl<T: Scalar> fmt::Display for ExtendedCost<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<T: Scalar> From<T> for ExtendedCost<T> {
    fn from(v: T) -> Self {
        ExtendedCost::Finite(v)
    }
}

/// Row-major `nx x ny` grid of extended costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    nx: usize,
    ny: usize,
    cells: Vec<ExtendedCost<T>>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(nx: usize, ny: usize, cells: Vec<ExtendedCost<T>>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::EmptySpace);
        }
        if cells.len() != nx * ny {
            return Err(Error::LengthMismatch {
                expected: nx * ny,
                got: cells.len(),
            });
        }
        if let Some(v) = cells
            .iter()
            .filter_map(|c| c.finite())
            .find(|v| v.is_negative_tol())
        {
            return Err(Error::Parse(format!("negative cost {}", v.render())));
        }
        Ok(Self { nx, ny, cells })
    }

    pub fn from_rows(rows: Vec<Vec<ExtendedCost<T>>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ny) {
            return Err(Error::LengthMismatch {
                expected: ny,
                got: bad.len(),
            });
        }
        Self::new(nx, ny, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> ExtendedCost<T>) -> Result<Self> {
        let cells = (0..nx)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(nx, ny, cells)
    }

    pub fn constant(nx: usize, ny: usize, value: ExtendedCost<T>) -> Result<Self> {
        Self::new(nx, ny, vec![value; nx * ny])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn get(&self, i: usize, j: usize) -> &ExtendedCost<T> {
        &self.cells[i * self.ny + j]
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, &ExtendedCost<T>)> {
        let ny = self.ny;
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, c)| (k / ny, k % ny, c))
    }

    pub fn finite_cells(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.cells().filter_map(|(i, j, c)| c.finite().map(|v| (i, j, v)))
    }

    pub fn has_finite_cell(&self) -> bool {
        self.cells.iter().any(ExtendedCost::is_finite)
    }

    pub fn max_finite(&self) -> Option<T> {
        self.finite_cells()
            .map(|(_, _, v)| v.clone())
            .fold(None, |acc, v| match acc {
                None => Some(v),
                Some(a) => Some(T::max_of(a, v)),
            })
    }

    /// Cellwise `self <= other` in the extended order.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.dims() == other.dims()
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.approx_le(b))
    }

    pub fn check_dims(&self, nx: usize, ny: usize) -> Result<()> {
        if self.dims() != (nx, ny) {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: (nx, ny),
            });
        }
        Ok(())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> CostMatrix<U> {
        CostMatrix {
            nx: self.nx,
            ny: self.ny,
            cells: self.cells.iter().map(|c| c.map(&f)).collect(),
        }
    }

    /// Copy with every cell outside `keep` set to infinity.
    pub fn restricted(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let ny = self.ny;
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if keep(k / ny, k % ny) {
                    c.clone()
                } else {
                    ExtendedCost::Infinite
                }
            })
            .collect();
        Self {
            nx: self.nx,
            ny: self.ny,
            cells,
        }
    }
}

/// Cellwise minimum `c ∧ h` under the extended order.
pub fn truncate_cost<T: Scalar>(c: &CostMatrix<T>, h: &CostMatrix<T>) -> Result<CostMatrix<T>> {
    h.check_dims(c.nx, c.ny)?;
    let cells = c.cells.iter().zip(&h.cells).map(|(a, b)| a.min(b)).collect();
    CostMatrix::new(c.nx, c.ny, cells)
}

/// `c ∧ M` for a constant level.
pub fn truncate_cost_const<T: Scalar>(c: &CostMatrix<T>, level: &T) -> Result<CostMatrix<T>> {
    let h = CostMatrix::constant(c.nx, c.ny, ExtendedCost::Finite(level.clone()))?;
    truncate_cost(c, &h)
}

/// Sparse nonnegative measure on `X x Y`. Entries are strictly positive; zero
/// masses are dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<T> {
    nx: usize,
    ny: usize,
    entries: BTreeMap<(usize, usize), T>,
    row_sums: Vec<T>,
    col_sums: Vec<T>,
    mass: T,
}

impl<T: Scalar> Coupling<T> {
    pub fn empty(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            entries: BTreeMap::new(),
            row_sums: vec![T::zero(); nx],
            col_sums: vec![T::zero(); ny],
            mass: T::zero(),
        }
    }

    /// Builds a coupling, summing repeated cells and dropping zeros.
    pub fn from_entries<I>(nx: usize, ny: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), T)>,
    {
        let mut map: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for ((i, j), v) in entries {
            if i >= nx || j >= ny {
                return Err(Error::DimensionMismatch {
                    expected: (nx, ny),
                    got: (i + 1, j + 1),
                });
            }
            if v.is_negative_tol() {
                return Err(Error::NegativeMass(v.render()));
            }
            let slot = map.entry((i, j)).or_insert_with(T::zero);
            *slot = slot.clone() + v;
        }
        map.retain(|_, v| v.is_positive_tol());
        let mut out = Self::empty(nx, ny);
        for ((i, j), v) in &map {
            out.row_sums[*i] = out.row_sums[*i].clone() + v.clone();
            out.col_sums[*j] = out.col_sums[*j].clone() + v.clone();
            out.mass = out.mass.clone() + v.clone();
        }
        out.entries = map;
        Ok(out)
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, v)| ((i, j), v.clone())));
        Self::from_entries(nx, ny, entries)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), T> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(T::zero)
    }

    pub fn mass(&self) -> &T {
        &self.mass
    }

    pub fn row_sums(&self) -> &[T] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[T] {
        &self.col_sums
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Mass placed on the cells selected by `member`.
    pub fn mass_on(&self, member: impl Fn(usize, usize) -> bool) -> T {
        self.entries
            .iter()
            .filter(|((i, j), _)| member(*i, *j))
            .fold(T::zero(), |acc, (_, v)| acc + v.clone())
    }

    /// Row sums equal `mu` and column sums equal `nu`.
    pub fn is_coupling_of(&self, mu: &Marginal<T>, nu: &Marginal<T>) -> bool {
        self.nx == mu.len()
            && self.ny == nu.len()
            && self.row_sums.iter().zip(mu.weights()).all(|(a, b)| a.approx_eq(b))
            && self.col_sums.iter().zip(nu.weights()).all(|(a, b)| a.approx_eq(b))
    }

    /// Row sums `<= mu` and column sums `<= nu`.
    pub fn is_partial_coupling_of(&self, mu: &Marginal<T>, nu: &Marginal<T>) -> bool {
        self.nx == mu.len()
            && self.ny == nu.len()
            && self.row_sums.iter().zip(mu.weights()).all(|(a, b)| a.approx_le(b))
            && self.col_sums.iter().zip(nu.weights()).all(|(a, b)| a.approx_le(b))
    }

    /// Entrywise `self <= other`.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.entries
            .iter()
            .all(|((i, j), v)| v.approx_le(&other.get(*i, *j)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.nx, self.ny) != (other.nx, other.ny) {
            return Err(Error::DimensionMismatch {
                expected: (self.nx, self.ny),
                got: (other.nx, other.ny),
            });
        }
        let entries = self
            .entries
            .iter()
            .chain(other.entries.iter())
            .map(|(k, v)| (*k, v.clone()));
        Self::from_entries(self.nx, self.ny, entries)
    }

    pub fn scaled(&self, factor: &T) -> Result<Self> {
        if factor.is_negative() {
            return Err(Error::NegativeScale(factor.render()));
        }
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| (*k, v.clone() * factor.clone()));
        Self::from_entries(self.nx, self.ny, entries)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Coupling<U> {
        let entries = self.entries.iter().map(|(k, v)| (*k, f(v)));
        Coupling::from_entries(self.nx, self.ny, entries).expect("mapped coupling stays valid")
    }
}

/// A cost matrix together with its two marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<T> {
    pub cost: CostMatrix<T>,
    pub mu: Marginal<T>,
    pub nu: Marginal<T>,
}

impl<T: Scalar> Problem<T> {
    pub fn new(cost: CostMatrix<T>, mu: Marginal<T>, nu: Marginal<T>) -> Result<Self> {
        cost.check_dims(mu.len(), nu.len())?;
        Ok(Self { cost, mu, nu })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Problem<U> {
        Problem {
            cost: self.cost.map(&f),
            mu: self.mu.map(&f),
            nu: self.nu.map(&f),
        }
    }
}

/// `⟨c, π⟩`, infinite iff `π` charges an infinite cell.
pub fn cost_of<T: Scalar>(c: &CostMatrix<T>, pi: &Coupling<T>) -> Result<ExtendedCost<T>> {
    c.check_dims(pi.nx, pi.ny)?;
    let mut total = T::zero();
    for ((i, j), mass) in &pi.entries {
        match c.get(*i, *j) {
            ExtendedCost::Infinite => return Ok(ExtendedCost::Infinite),
            ExtendedCost::Finite(v) => total = total + v.clone() * mass.clone(),
        }
    }
    Ok(ExtendedCost::Finite(total))
}

/// Row and column sums of `π` as marginals.
pub fn coupling_marginals<T: Scalar>(pi: &Coupling<T>) -> (Marginal<T>, Marginal<T>) {
    let rows = Marginal::from_weights(pi.row_sums.clone()).expect("row sums are nonnegative");
    let cols = Marginal::from_weights(pi.col_sums.clone()).expect("column sums are nonnegative");
    (rows, cols)
}

/// `scale · α ⊗ β`.
pub fn product_coupling<T: Scalar>(
    alpha: &Marginal<T>,
    beta: &Marginal<T>,
    scale: &T,
) -> Result<Coupling<T>> {
    if scale.is_negative() {
        return Err(Error::NegativeScale(scale.render()));
    }
    let entries = alpha.weights().iter().enumerate().flat_map(|(i, a)| {
        beta.weights()
            .iter()
            .enumerate()
            .map(move |(j, b)| ((i, j), scale.clone() * a.clone() * b.clone()))
    });
    Coupling::from_entries(alpha.len(), beta.len(), entries)
}
