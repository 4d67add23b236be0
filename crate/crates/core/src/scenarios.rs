//! Deterministic instance generators.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{CostMatrix, ExtendedCost, Marginal, Problem};
use crate::scalar::{int, rational, Rational};

/// Largest denominator of a random finite cost.
pub const MAX_COST_DENOMINATOR: i64 = 8;
/// Random finite costs lie in `[0, MAX_COST]`.
pub const MAX_COST: i64 = 4;
/// Random marginal weights are integers in `0..=MAX_WEIGHT` before normalization.
pub const MAX_WEIGHT: i64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalKind {
    Uniform,
    /// Random integer weights, normalized; may contain zero-weight atoms.
    Random,
}

/// The three-valued cost on `n` uniform atoms: zero strictly below the
/// diagonal, one on it, infinite above. The only finite-cost full coupling
/// is the diagonal one, so `P = 1` for every `n`, while shifting mass one
/// step down ships `1 - 1/n` units at no cost.
pub fn example_diagonal(n: usize) -> Result<Problem<Rational>> {
    if n < 1 {
        return Err(Error::InvalidSize);
    }
    let cost = CostMatrix::from_fn(n, n, |i, j| match j.cmp(&i) {
        Ordering::Less => ExtendedCost::Finite(int(0)),
        Ordering::Equal => ExtendedCost::Finite(int(1)),
        Ordering::Greater => ExtendedCost::Infinite,
    })?;
    let mu = Marginal::uniform(n)?;
    Problem::new(cost, mu.clone(), mu)
}

/// Reproducible random instance. Each cell is infinite with probability
/// `inf_density`; finite cells are rationals in `[0, MAX_COST]` with
/// denominators at most [`MAX_COST_DENOMINATOR`].
pub fn random_instance(
    nx: usize,
    ny: usize,
    inf_density: f64,
    kind: MarginalKind,
    seed: u64,
) -> Result<Problem<Rational>> {
    if !(0.0..=1.0).contains(&inf_density) {
        return Err(Error::InvalidProbability(inf_density));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidSize);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = Vec::with_capacity(nx * ny);
    for _ in 0..nx * ny {
        if rng.gen_bool(inf_density) {
            cells.push(ExtendedCost::Infinite);
        } else {
            let den = rng.gen_range(1..=MAX_COST_DENOMINATOR);
            let num = rng.gen_range(0..=MAX_COST * den);
            cells.push(ExtendedCost::Finite(rational(num, den)));
        }
    }
    let cost = CostMatrix::new(nx, ny, cells)?;
    let mu = random_marginal(&mut rng, nx, kind)?;
    let nu = random_marginal(&mut rng, ny, kind)?;
    Problem::new(cost, mu, nu)
}

fn random_marginal(rng: &mut ChaCha8Rng, n: usize, kind: MarginalKind) -> Result<Marginal<Rational>> {
    match kind {
        MarginalKind::Uniform => Marginal::uniform(n),
        MarginalKind::Random => {
            let mut w: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=MAX_WEIGHT)).collect();
            if w.iter().all(|&x| x == 0) {
                let k = rng.gen_range(0..n);
                w[k] = 1;
            }
            let total: i64 = w.iter().sum();
            Marginal::from_weights(w.into_iter().map(|x| rational(x, total)).collect())
        }
    }
}

/// Zero cost except on the band `1 <= j - i <= bandwidth`, which is infinite.
pub fn closed_inf_band(n: usize, bandwidth: usize) -> Result<Problem<Rational>> {
    if n < 1 {
        return Err(Error::InvalidSize);
    }
    if bandwidth >= n {
        return Err(Error::BandTooWide { bandwidth, n });
    }
    let cost = CostMatrix::from_fn(n, n, |i, j| {
        if j > i && j - i <= bandwidth {
            ExtendedCost::Infinite
        } else {
            ExtendedCost::Finite(int(0))
        }
    })?;
    let mu = Marginal::uniform(n)?;
    Problem::new(cost, mu.clone(), mu)
}

/// A family of instances indexed by size.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Diagonal,
    Band { bandwidth: usize },
    Random {
        inf_density: f64,
        kind: MarginalKind,
        seed: u64,
    },
}

impl Family {
    pub fn instance(&self, n: usize) -> Result<Problem<Rational>> {
        match self {
            Family::Diagonal => example_diagonal(n),
            Family::Band { bandwidth } => closed_inf_band(n, (*bandwidth).min(n.saturating_sub(1))),
            Family::Random {
                inf_density,
                kind,
                seed,
            } => random_instance(n, n, *inf_density, *kind, seed.wrapping_add(n as u64)),
        }
    }
}
