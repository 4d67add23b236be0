//! Brute-force references for tiny instances. Nothing here calls the flow,
//! LP or cover solvers, and the arithmetic is separate: plain `i128`
//! integers for the transport oracle and `Ratio<i128>` for covers.
//!
//! `brute_primal` rewrites the fixed-mass partial problem as a balanced
//! transportation problem with a slack row `x*` (supply `ν(Y) - m`) and a slack
//! column `y*` (demand `μ(X) - m`), zero-cost slack cells and `(x*, y*)`
//! forbidden. Every vertex of that polytope is the unique solution supported
//! on some maximal forest of the allowed-cell graph, so enumerating all
//! maximal forests and keeping the feasible ones finds the minimum. After
//! scaling supplies and masses to a common denominator every forest solution
//! is integral (the incidence matrix is totally unimodular).

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::kellerer::CellSet;
use crate::measure::{CostMatrix, ExtendedCost, Marginal};
use crate::scalar::Rational;

/// Largest side accepted by [`brute_primal`].
pub const MAX_PRIMAL_SIDE: usize = 4;
/// Largest `nx + ny` accepted by [`brute_cover`].
pub const MAX_COVER_ATOMS: usize = 20;

const NODE_CAP: usize = 2 * (MAX_PRIMAL_SIDE + 1);

type Q = Ratio<i128>;

fn too_large(x: &Rational) -> Error {
    Error::TooLarge(format!("{x} does not fit the oracle arithmetic"))
}

fn to_q(x: &Rational) -> Result<Q> {
    match (x.numer().to_i128(), x.denom().to_i128()) {
        (Some(n), Some(d)) => Ok(Q::new(n, d)),
        _ => Err(too_large(x)),
    }
}

fn from_q(x: &Q) -> Rational {
    Rational::new((*x.numer()).into(), (*x.denom()).into())
}

fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Result<i128> {
    values.into_iter().try_fold(1i128, |acc, x| {
        let d = x.denom().to_i128().ok_or_else(|| too_large(x))?;
        Ok(acc.lcm(&d))
    })
}

/// `x · scale` as an integer; `scale` must clear the denominator of `x`.
fn scaled(x: &Rational, scale: i128) -> Result<i128> {
    let v = x.clone() * Rational::from_integer(scale.into());
    debug_assert!(v.is_integer());
    v.to_integer().to_i128().ok_or_else(|| too_large(x))
}

/// `a + b·M` for the scaled shipped mass `M`.
#[derive(Clone, Copy, Debug, Default)]
struct Lin {
    a: i128,
    b: i128,
}

impl Lin {
    fn at(self, m: i128) -> i128 {
        self.a + self.b * m
    }
}

struct Transport {
    nodes: usize,
    /// `(row node, column node, scaled cost)`.
    edges: Vec<(usize, usize, i128)>,
    /// Rows: supply; columns: demand.
    requirement: [Lin; NODE_CAP],
}

fn find(parent: &[usize], mut v: usize) -> usize {
    while parent[v] != v {
        v = parent[v];
    }
    v
}

impl Transport {
    fn build(c: &CostMatrix<Rational>, mu: &Marginal<Rational>, nu: &Marginal<Rational>, mass_scale: i128, cost_scale: i128) -> Result<Self> {
        let (nx, ny) = (c.nx(), c.ny());
        let rows = nx + 1;
        let nodes = rows + ny + 1;
        let col = |j: usize| rows + j;
        let mu_s = mu.weights().iter().map(|w| scaled(w, mass_scale)).collect::<Result<Vec<_>>>()?;
        let nu_s = nu.weights().iter().map(|w| scaled(w, mass_scale)).collect::<Result<Vec<_>>>()?;

        let mut requirement = [Lin::default(); NODE_CAP];
        for (i, w) in mu_s.iter().enumerate() {
            requirement[i] = Lin { a: *w, b: 0 };
        }
        requirement[nx] = Lin {
            a: nu_s.iter().sum(),
            b: -1,
        };
        for (j, w) in nu_s.iter().enumerate() {
            requirement[col(j)] = Lin { a: *w, b: 0 };
        }
        requirement[col(ny)] = Lin {
            a: mu_s.iter().sum(),
            b: -1,
        };

        let mut edges = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                if let ExtendedCost::Finite(v) = c.get(i, j) {
                    edges.push((i, col(j), scaled(v, cost_scale)?));
                }
            }
            edges.push((i, col(ny), 0));
        }
        for j in 0..ny {
            edges.push((nx, col(j), 0));
        }
        Ok(Self {
            nodes,
            edges,
            requirement,
        })
    }

    fn forest_size(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.nodes).collect();
        let mut merged = 0;
        for &(r, c, _) in &self.edges {
            let (a, b) = (find(&parent, r), find(&parent, c));
            if a != b {
                parent[a] = b;
                merged += 1;
            }
        }
        merged
    }

    /// Peels leaves off the forest; each leaf fixes the flow on its last open
    /// edge. Leaves `remaining` holding what each node still needs, which must
    /// vanish for the forest system to be consistent.
    fn solve(&self, forest: &[usize], flows: &mut [Lin], remaining: &mut [Lin; NODE_CAP]) {
        *remaining = self.requirement;
        let mut degree = [0u8; NODE_CAP];
        let mut open = [true; NODE_CAP];
        for &e in forest {
            let (r, c, _) = self.edges[e];
            degree[r] += 1;
            degree[c] += 1;
        }
        let mut stack = [0usize; NODE_CAP];
        let mut top = 0;
        for v in 0..self.nodes {
            if degree[v] == 1 {
                stack[top] = v;
                top += 1;
            }
        }
        while top > 0 {
            top -= 1;
            let v = stack[top];
            if degree[v] != 1 {
                continue;
            }
            let k = (0..forest.len())
                .find(|&k| open[k] && (self.edges[forest[k]].0 == v || self.edges[forest[k]].1 == v))
                .expect("leaf keeps one open edge");
            let (r, c, _) = self.edges[forest[k]];
            let other = if v == r { c } else { r };
            let x = remaining[v];
            flows[k] = x;
            open[k] = false;
            remaining[v] = Lin::default();
            remaining[other] = Lin {
                a: remaining[other].a - x.a,
                b: remaining[other].b - x.b,
            };
            degree[v] = 0;
            degree[other] -= 1;
            if degree[other] == 1 {
                stack[top] = other;
                top += 1;
            }
        }
    }

    fn enumerate(&self, visit: &mut impl FnMut(&[usize])) {
        let target = self.forest_size();
        let mut parent: Vec<usize> = (0..self.nodes).collect();
        let mut chosen = Vec::with_capacity(target);
        self.extend(0, target, &mut parent, &mut chosen, visit);
    }

    fn extend(
        &self,
        next: usize,
        target: usize,
        parent: &mut Vec<usize>,
        chosen: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if chosen.len() == target {
            visit(chosen);
            return;
        }
        if chosen.len() + (self.edges.len() - next) < target {
            return;
        }
        let (r, c, _) = self.edges[next];
        let (a, b) = (find(parent, r), find(parent, c));
        if a != b {
            parent[a] = b;
            chosen.push(next);
            self.extend(next + 1, target, parent, chosen, visit);
            chosen.pop();
            parent[a] = a;
        }
        self.extend(next + 1, target, parent, chosen, visit);
    }
}

fn check_primal_size(c: &CostMatrix<Rational>, mu: &Marginal<Rational>, nu: &Marginal<Rational>) -> Result<()> {
    if c.nx() > MAX_PRIMAL_SIDE || c.ny() > MAX_PRIMAL_SIDE {
        return Err(Error::TooLarge(format!(
            "{}x{} exceeds the oracle limit {MAX_PRIMAL_SIDE}x{MAX_PRIMAL_SIDE}",
            c.nx(),
            c.ny()
        )));
    }
    if (c.nx(), c.ny()) != (mu.len(), nu.len()) {
        return Err(Error::DimensionMismatch {
            expected: (c.nx(), c.ny()),
            got: (mu.len(), nu.len()),
        });
    }
    Ok(())
}

/// Least cost of a partial coupling of mass exactly `m`, for each `m`.
pub fn brute_primal_many(
    c: &CostMatrix<Rational>,
    mu: &Marginal<Rational>,
    nu: &Marginal<Rational>,
    masses: &[Rational],
) -> Result<Vec<ExtendedCost<Rational>>> {
    check_primal_size(c, mu, nu)?;
    if let Some(m) = masses.iter().find(|m| *m < &Rational::zero()) {
        return Err(Error::NegativeMass(m.to_string()));
    }
    let mass_scale = common_denominator(mu.weights().iter().chain(nu.weights()).chain(masses))?;
    let cost_scale = common_denominator(c.finite_cells().map(|(_, _, v)| v))?;
    let net = Transport::build(c, mu, nu, mass_scale, cost_scale)?;
    let scaled_masses = masses.iter().map(|m| scaled(m, mass_scale)).collect::<Result<Vec<_>>>()?;
    // the slack supplies ν(Y)·D - M and μ(X)·D - M must stay nonnegative
    let cap = net.requirement[c.nx()].a.min(net.requirement[net.nodes - 1].a);

    let mut best: Vec<Option<i128>> = vec![None; masses.len()];
    let mut flows = vec![Lin::default(); net.nodes];
    let mut remaining = [Lin::default(); NODE_CAP];
    net.enumerate(&mut |forest| {
        net.solve(forest, &mut flows, &mut remaining);
        let flows = &flows[..forest.len()];
        let cost = forest.iter().zip(flows).fold(Lin::default(), |acc, (&e, x)| {
            let w = net.edges[e].2;
            Lin {
                a: acc.a + w * x.a,
                b: acc.b + w * x.b,
            }
        });
        for (k, &m) in scaled_masses.iter().enumerate() {
            if m > cap {
                continue;
            }
            let feasible = flows.iter().all(|x| x.at(m) >= 0) && remaining[..net.nodes].iter().all(|r| r.at(m) == 0);
            if feasible {
                let value = cost.at(m);
                if best[k].map_or(true, |b| value < b) {
                    best[k] = Some(value);
                }
            }
        }
    });
    let denom = Rational::from_integer((mass_scale * cost_scale).into());
    Ok(best
        .into_iter()
        .map(|b| b.map_or(ExtendedCost::Infinite, |v| ExtendedCost::Finite(Rational::from_integer(v.into()) / denom.clone())))
        .collect())
}

pub fn brute_primal(
    c: &CostMatrix<Rational>,
    mu: &Marginal<Rational>,
    nu: &Marginal<Rational>,
    m: &Rational,
) -> Result<ExtendedCost<Rational>> {
    Ok(brute_primal_many(c, mu, nu, std::slice::from_ref(m))?.remove(0))
}

/// `min μ(A) + ν(B)` over every pair of subsets with `L ⊆ A×Y ∪ X×B`.
pub fn brute_cover(l: &CellSet, mu: &Marginal<Rational>, nu: &Marginal<Rational>) -> Result<Rational> {
    let (nx, ny) = (l.nx(), l.ny());
    if nx + ny > MAX_COVER_ATOMS {
        return Err(Error::TooLarge(format!(
            "{} atoms exceed the oracle limit {MAX_COVER_ATOMS}",
            nx + ny
        )));
    }
    if (nx, ny) != (mu.len(), nu.len()) {
        return Err(Error::DimensionMismatch {
            expected: (nx, ny),
            got: (mu.len(), nu.len()),
        });
    }
    let subset_sums = |w: &[Rational]| -> Result<Vec<Q>> {
        let w = w.iter().map(to_q).collect::<Result<Vec<_>>>()?;
        Ok((0..1usize << w.len())
            .map(|mask| (0..w.len()).filter(|k| mask >> k & 1 == 1).map(|k| w[k]).sum())
            .collect())
    };
    let row_sums = subset_sums(mu.weights())?;
    let col_sums = subset_sums(nu.weights())?;
    let row_cols: Vec<usize> = (0..nx)
        .map(|i| (0..ny).filter(|&j| l.contains(i, j)).fold(0, |acc, j| acc | 1 << j))
        .collect();

    let mut best: Option<Q> = None;
    for a in 0..1usize << nx {
        for b in 0..1usize << ny {
            let covers = (0..nx).all(|i| a >> i & 1 == 1 || row_cols[i] & !b == 0);
            if covers {
                let value = row_sums[a] + col_sums[b];
                if best.map_or(true, |v| value < v) {
                    best = Some(value);
                }
            }
        }
    }
    Ok(from_q(&best.expect("A = X always covers")))
}
