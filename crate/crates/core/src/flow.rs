//! Parametric min-cost flow over the bipartite transport network.
//!
//! The network is `source -> x_i` (capacity `mu_i`), `x_i -> y_j` (unbounded
//! capacity, cost `c(i, j)`, finite cells only) and `y_j -> sink` (capacity
//! `nu_j`). Successive shortest augmenting paths with node potentials produce
//! the whole convex cost-versus-mass curve in one run: every augmentation ships
//! mass along a path whose length is the slope of the current segment, and path
//! lengths never decrease.
//!
//! After each Dijkstra pass every potential moves by `min(dist(v), dist(sink))`,
//! so unreachable nodes are shifted by the sink distance. That keeps reduced
//! costs nonnegative on every residual arc, including arcs into parts of the
//! network the current flow cannot reach, and the potentials certify dual
//! feasibility on all finite cells rather than only reachable ones.
//!
//! Zero-weight atoms stay in the network with zero capacity so indices line
//! up with the input.

use crate::error::{Error, Result};
use crate::measure::{CostMatrix, Coupling, ExtendedCost, Marginal};
use crate::scalar::Scalar;

/// Potentials `(u, v)` with `c(i, j) - u_i - v_j >= 0` on every finite cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair<T> {
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> PotentialPair<T> {
    pub fn reduced_cost(&self, c: &CostMatrix<T>, i: usize, j: usize) -> Option<T> {
        c.get(i, j)
            .finite()
            .map(|cij| cij.clone() - self.u[i].clone() - self.v[j].clone())
    }

    /// True when every finite cell has nonnegative reduced cost.
    pub fn certifies(&self, c: &CostMatrix<T>) -> bool {
        c.finite_cells().all(|(i, j, cij)| {
            !(cij.clone() - self.u[i].clone() - self.v[j].clone()).is_negative_tol()
        })
    }
}

/// Source side of the minimum cut left by a maximum flow.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    /// `x_i` reachable from the source in the final residual network.
    pub x: Vec<bool>,
    /// `y_j` reachable from the source in the final residual network.
    pub y: Vec<bool>,
}

/// Convex piecewise-linear map from shipped mass to least cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProfile<T> {
    breakpoints: Vec<(T, T)>,
    potentials_at: Vec<PotentialPair<T>>,
    cut: MinCut,
}

impl<T: Scalar> TransportProfile<T> {
    pub fn breakpoints(&self) -> &[(T, T)] {
        &self.breakpoints
    }

    pub fn potentials_at(&self) -> &[PotentialPair<T>] {
        &self.potentials_at
    }

    pub fn max_mass(&self) -> &T {
        &self.breakpoints.last().expect("profile starts at (0, 0)").0
    }

    pub fn min_cut(&self) -> &MinCut {
        &self.cut
    }

    /// Slope of each segment, in order.
    pub fn slopes(&self) -> Vec<T> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[1].1.clone() - w[0].1.clone()) / (w[1].0.clone() - w[0].0.clone()))
            .collect()
    }

    /// Potentials certifying the flow at the largest mass.
    pub fn final_potentials(&self) -> &PotentialPair<T> {
        self.potentials_at.last().expect("profile starts at (0, 0)")
    }
}

#[derive(Debug, Clone)]
struct Edge<T> {
    to: usize,
    /// `None` means unbounded.
    residual: Option<T>,
    cost: T,
    rev: usize,
}

impl<T: Scalar> Edge<T> {
    fn open(&self) -> bool {
        self.residual.as_ref().map_or(true, T::is_positive_tol)
    }
}

struct Network<T> {
    nx: usize,
    ny: usize,
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge<T>>,
    potential: Vec<T>,
    /// Edge index of each `x_i -> y_j` arc, keyed by cell.
    cell_edges: Vec<((usize, usize), usize)>,
}

struct Run<T> {
    breakpoints: Vec<(T, T)>,
    potentials_at: Vec<PotentialPair<T>>,
    /// Potentials of the last Dijkstra update; certify the final flow even
    /// when the run stopped inside a segment.
    last_potentials: PotentialPair<T>,
    coupling: Coupling<T>,
    cut: MinCut,
}

impl<T: Scalar> Network<T> {
    const SOURCE: usize = 0;

    fn x(&self, i: usize) -> usize {
        1 + i
    }

    fn y(&self, j: usize) -> usize {
        1 + self.nx + j
    }

    fn sink(&self) -> usize {
        1 + self.nx + self.ny
    }

    fn build(c: &CostMatrix<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<Self> {
        c.check_dims(mu.len(), nu.len())?;
        let (nx, ny) = c.dims();
        let n = nx + ny + 2;
        let mut net = Network {
            nx,
            ny,
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
            potential: vec![T::zero(); n],
            cell_edges: Vec::new(),
        };
        for i in 0..nx {
            let to = net.x(i);
            net.link(Self::SOURCE, to, Some(mu.weight(i).clone()), T::zero());
        }
        for (i, j, cost) in c.finite_cells() {
            let (from, to) = (net.x(i), net.y(j));
            let e = net.link(from, to, None, cost.clone());
            net.cell_edges.push(((i, j), e));
        }
        for j in 0..ny {
            let (from, to) = (net.y(j), net.sink());
            net.link(from, to, Some(nu.weight(j).clone()), T::zero());
        }
        Ok(net)
    }

    fn link(&mut self, from: usize, to: usize, cap: Option<T>, cost: T) -> usize {
        let e = self.edges.len();
        self.edges.push(Edge {
            to,
            residual: cap,
            cost: cost.clone(),
            rev: e + 1,
        });
        self.edges.push(Edge {
            to: from,
            residual: Some(T::zero()),
            cost: -cost,
            rev: e,
        });
        self.adj[from].push(e);
        self.adj[to].push(e + 1);
        e
    }

    fn reduced(&self, from: usize, e: &Edge<T>) -> T {
        let rc = e.cost.clone() + self.potential[from].clone() - self.potential[e.to].clone();
        if rc.is_negative() {
            debug_assert!(rc.is_negligible(), "negative reduced cost {rc:?}");
            T::zero()
        } else {
            rc
        }
    }

    /// Dense Dijkstra on reduced costs. Ties go to the smaller node index and
    /// parents change only on strict improvement, so paths are chosen
    /// lexicographically by `(x, y)`.
    fn dijkstra(&self) -> (Vec<Option<T>>, Vec<Option<usize>>) {
        let n = self.adj.len();
        let mut dist: Vec<Option<T>> = vec![None; n];
        let mut parent = vec![None; n];
        let mut done = vec![false; n];
        dist[Self::SOURCE] = Some(T::zero());
        loop {
            let mut best: Option<usize> = None;
            for v in 0..n {
                if done[v] {
                    continue;
                }
                if let Some(dv) = &dist[v] {
                    match best {
                        Some(b) if dist[b].as_ref().is_some_and(|db| db <= dv) => {}
                        _ => best = Some(v),
                    }
                }
            }
            let Some(u) = best else { break };
            done[u] = true;
            let du = dist[u].clone().expect("selected node has a distance");
            for &ei in &self.adj[u] {
                let e = &self.edges[ei];
                if done[e.to] || !e.open() {
                    continue;
                }
                let nd = du.clone() + self.reduced(u, e);
                let better = match &dist[e.to] {
                    None => true,
                    Some(d) => nd < *d && !nd.approx_eq(d),
                };
                if better {
                    dist[e.to] = Some(nd);
                    parent[e.to] = Some(ei);
                }
            }
        }
        (dist, parent)
    }

    fn pair(&self) -> PotentialPair<T> {
        PotentialPair {
            u: (0..self.nx).map(|i| -self.potential[self.x(i)].clone()).collect(),
            v: (0..self.ny).map(|j| self.potential[self.y(j)].clone()).collect(),
        }
    }

    fn run(&mut self, limit: Option<&T>) -> Run<T> {
        let sink = self.sink();
        let mut mass = T::zero();
        let mut cost = T::zero();
        let mut breakpoints = vec![(T::zero(), T::zero())];
        let mut slopes: Vec<T> = Vec::new();
        let mut potentials_at = vec![self.pair()];
        let mut last_potentials = self.pair();

        loop {
            if let Some(cap) = limit {
                if !mass.approx_le(cap) || mass.approx_eq(cap) {
                    break;
                }
            }
            let (dist, parent) = self.dijkstra();
            let Some(dist_sink) = dist[sink].clone() else {
                break;
            };
            for (p, d) in self.potential.iter_mut().zip(&dist) {
                let shift = match d {
                    Some(d) if *d < dist_sink => d.clone(),
                    _ => dist_sink.clone(),
                };
                *p = p.clone() + shift;
            }
            last_potentials = self.pair();
            let slope = self.potential[sink].clone() - self.potential[Self::SOURCE].clone();

            let mut path = Vec::new();
            let mut v = sink;
            while let Some(ei) = parent[v] {
                path.push(ei);
                v = self.edges[self.edges[ei].rev].to;
            }
            let mut delta: Option<T> = None;
            for &ei in &path {
                if let Some(r) = &self.edges[ei].residual {
                    delta = Some(match delta {
                        None => r.clone(),
                        Some(d) => T::min_of(d, r.clone()),
                    });
                }
            }
            let mut delta = delta.expect("source arcs bound every path");
            if let Some(cap) = limit {
                delta = T::min_of(delta, cap.clone() - mass.clone());
            }
            for &ei in &path {
                let rev = self.edges[ei].rev;
                if let Some(r) = self.edges[ei].residual.as_mut() {
                    *r = r.clone() - delta.clone();
                }
                if let Some(r) = self.edges[rev].residual.as_mut() {
                    *r = r.clone() + delta.clone();
                }
            }

            mass = mass + delta.clone();
            cost = cost + delta * slope.clone();
            let merge = slopes.last().is_some_and(|s| s.approx_eq(&slope));
            if merge {
                *breakpoints.last_mut().expect("nonempty") = (mass.clone(), cost.clone());
                *potentials_at.last_mut().expect("nonempty") = self.pair();
            } else {
                breakpoints.push((mass.clone(), cost.clone()));
                potentials_at.push(self.pair());
                slopes.push(slope);
            }
        }

        let coupling = Coupling::from_entries(
            self.nx,
            self.ny,
            self.cell_edges.iter().map(|&(cell, e)| {
                let rev = self.edges[e].rev;
                let flow = self.edges[rev].residual.clone().unwrap_or_else(T::zero);
                (cell, flow)
            }),
        )
        .expect("flows are nonnegative");

        Run {
            breakpoints,
            potentials_at,
            last_potentials,
            coupling,
            cut: self.source_side(),
        }
    }

    fn source_side(&self) -> MinCut {
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![Self::SOURCE];
        seen[Self::SOURCE] = true;
        while let Some(u) = stack.pop() {
            for &ei in &self.adj[u] {
                let e = &self.edges[ei];
                if e.open() && !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        MinCut {
            x: (0..self.nx).map(|i| seen[self.x(i)]).collect(),
            y: (0..self.ny).map(|j| seen[self.y(j)]).collect(),
        }
    }
}

/// The full transport profile `m -> min{<c, pi> : pi partial, mass(pi) = m}`.
///
/// Costs are nonnegative, so the profile is nondecreasing and the least cost
/// over `mass >= m` equals the least cost at exactly `m`. Partial problems with
/// a lower bound on the mass are therefore solved at the bound itself.
pub fn solve_profile<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<TransportProfile<T>> {
    let mut net = Network::build(c, mu, nu)?;
    let run = net.run(None);
    Ok(TransportProfile {
        breakpoints: run.breakpoints,
        potentials_at: run.potentials_at,
        cut: run.cut,
    })
}

/// Linear interpolation of the breakpoints; infinite beyond the largest
/// shippable mass.
pub fn evaluate_profile<T: Scalar>(profile: &TransportProfile<T>, m: &T) -> Result<ExtendedCost<T>> {
    if m.is_negative_tol() {
        return Err(Error::NegativeMass(m.render()));
    }
    let pts = profile.breakpoints();
    let max = profile.max_mass();
    if !m.approx_le(max) {
        return Ok(ExtendedCost::Infinite);
    }
    if m.approx_eq(max) {
        return Ok(ExtendedCost::Finite(pts.last().expect("nonempty").1.clone()));
    }
    for w in pts.windows(2) {
        let (m0, c0) = &w[0];
        let (m1, c1) = &w[1];
        if m <= m1 {
            let t = (m.clone() - m0.clone()) / (m1.clone() - m0.clone());
            return Ok(ExtendedCost::Finite(c0.clone() + t * (c1.clone() - c0.clone())));
        }
    }
    Ok(ExtendedCost::Finite(pts[0].1.clone()))
}

/// A least-cost partial coupling of a given mass with its certificate.
#[derive(Debug, Clone)]
pub struct PartialOptimum<T> {
    pub coupling: Coupling<T>,
    /// Potentials with nonnegative reduced cost on every finite cell and zero
    /// reduced cost on every charged cell.
    pub potentials: PotentialPair<T>,
}

/// Runs the augmentation sequence until exactly `m` units have been shipped.
pub fn optimal_partial_at<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    m: &T,
) -> Result<PartialOptimum<T>> {
    if m.is_negative_tol() {
        return Err(Error::NegativeMass(m.render()));
    }
    let mut net = Network::build(c, mu, nu)?;
    let run = net.run(Some(m));
    let shipped = run.coupling.mass().clone();
    if !shipped.approx_eq(m) {
        return Err(Error::InfeasibleMass {
            requested: m.render(),
            max: shipped.render(),
        });
    }
    Ok(PartialOptimum {
        coupling: run.coupling,
        potentials: run.last_potentials,
    })
}

pub fn optimal_coupling_at<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    m: &T,
) -> Result<Coupling<T>> {
    optimal_partial_at(c, mu, nu, m).map(|opt| opt.coupling)
}
