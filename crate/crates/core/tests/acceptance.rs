//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every comparison is exact (rational arithmetic, zero tolerance); the only
//! numeric limits are the wall-clock budgets below.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use kantgap::dual::{chargeable_set, certified_truncation_level, dual_value, j_functional, relaxed_dual_value, verify_feasible, Potential};
use kantgap::flow::{evaluate_profile, optimal_coupling_at, solve_profile};
use kantgap::kellerer::{capacity_value, cover_value, kellerer_decompose, max_mass_on, null_for_all_couplings, CellSet, Decomposition};
use kantgap::measure::{cost_of, truncate_cost_const, CostMatrix, Coupling, ExtendedCost, Marginal, Problem};
use kantgap::oracle::{brute_cover, brute_primal, brute_primal_many};
use kantgap::primal::{partial_value, primal_value, relaxed_value, truncation_sweep_const};
use kantgap::relaxation::{complete_partial_bounded, shrink_to_partial};
use kantgap::scalar::{int, rational, Rational};
use kantgap::scenarios::{closed_inf_band, example_diagonal, random_instance, MarginalKind};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOLERANCE: &str = "0 (exact rational)";
const BUDGET_NO_GAP: Duration = Duration::from_secs(10);
const BUDGET_DIAGONAL: Duration = Duration::from_secs(5);
const BUDGET_ORACLE: Duration = Duration::from_secs(60);

const NO_GAP_SEEDS: u64 = 200;
const NO_GAP_MAX_SIDE: usize = 8;
const ORACLE_SEEDS: u64 = 500;
const ORACLE_MAX_SIDE: usize = 4;
const COVER_SEEDS: u64 = 500;
const COVER_MAX_ATOMS: usize = 12;
const APPENDIX_SEEDS: u64 = 300;
const SHRINK_SEEDS: u64 = 300;
const DUAL_SEEDS: u64 = 120;

type Q = Rational;

fn fin(v: Q) -> ExtendedCost<Q> {
    ExtendedCost::Finite(v)
}

fn densities() -> [f64; 5] {
    [0.0, 0.2, 0.4, 0.6, 1.0]
}

/// Random instance with sides in `1..=max_side`, all parameters derived from `seed`.
fn seeded_instance(seed: u64, max_side: usize) -> Problem<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let nx = rng.gen_range(1..=max_side);
    let ny = rng.gen_range(1..=max_side);
    let density = densities()[rng.gen_range(0..densities().len())];
    let kind = if rng.gen_bool(0.5) {
        MarginalKind::Uniform
    } else {
        MarginalKind::Random
    };
    random_instance(nx, ny, density, kind, seed).unwrap()
}

fn random_cells(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> CellSet {
    let p = rng.gen_range(0.0..=1.0);
    let mut l = CellSet::empty(nx, ny);
    for i in 0..nx {
        for j in 0..ny {
            if rng.gen_bool(p) {
                l.insert(i, j);
            }
        }
    }
    l
}

fn random_marginal(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64) -> Marginal<Q> {
    let mut w: Vec<i64> = (0..n)
        .map(|_| if rng.gen_bool(zero_prob) { 0 } else { rng.gen_range(1..=6) })
        .collect();
    if w.iter().all(|&x| x == 0) {
        w[rng.gen_range(0..n)] = 1;
    }
    let total: i64 = w.iter().sum();
    Marginal::from_weights(w.into_iter().map(|x| rational(x, total)).collect()).unwrap()
}

/// Row and column sums computed here rather than through the crate.
fn sums(pi: &Coupling<Q>) -> (Vec<Q>, Vec<Q>) {
    let mut rows = vec![int(0); pi.nx()];
    let mut cols = vec![int(0); pi.ny()];
    for (&(i, j), v) in pi.entries() {
        rows[i] += v.clone();
        cols[j] += v.clone();
    }
    (rows, cols)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, budget: Duration) -> Result<String, String> {
    let t = start.elapsed();
    check(t < budget, || format!("took {t:.2?}, budget {budget:?}"))?;
    Ok(format!("{t:.2?} of {budget:?}"))
}

fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let (mut finite, mut infinite) = (0, 0);
    for seed in 0..NO_GAP_SEEDS {
        let p = seeded_instance(seed, NO_GAP_MAX_SIDE);
        let primal = primal_value(&p.cost, &p.mu, &p.nu).map_err(|e| e.to_string())?;
        let dual = dual_value(&p.cost, &p.mu, &p.nu).map_err(|e| e.to_string())?;
        check(primal == dual.value, || format!("seed {seed}: P = {primal}, D = {}", dual.value))?;
        if primal.is_finite() {
            finite += 1;
        } else {
            infinite += 1;
            let ray = dual.ray.as_ref().ok_or(format!("seed {seed}: no improving ray"))?;
            check(ray.is_certified(&p.cost, &p.mu, &p.nu), || format!("seed {seed}: bad ray"))?;
        }
    }
    let time = within(start, BUDGET_NO_GAP)?;
    Ok(format!("{NO_GAP_SEEDS} instances up to {NO_GAP_MAX_SIDE}x{NO_GAP_MAX_SIDE}: P = D on {finite} finite, both inf on {infinite}; {time}"))
}

fn criterion_2() -> Result<String, String> {
    let start = Instant::now();
    let mut table = Vec::new();
    for n in 2..=50usize {
        let p = example_diagonal(n).unwrap();
        let profile = solve_profile(&p.cost, &p.mu, &p.nu).unwrap();
        let primal = evaluate_profile(&profile, &int(1)).unwrap();
        let dual = dual_value(&p.cost, &p.mu, &p.nu).unwrap().value;
        check(primal == fin(int(1)) && dual == fin(int(1)), || format!("n = {n}: P = {primal}, D = {dual}"))?;
        let n_q = int(n as i64);
        for eps in [int(1) / n_q.clone(), int(2) / n_q.clone(), rational(1, 2), int(1)] {
            if eps < int(1) / n_q.clone() {
                continue;
            }
            let value = partial_value(&p.cost, &p.mu, &p.nu, &eps).unwrap();
            check(value == fin(int(0)), || format!("n = {n}: P^{eps} = {value}"))?;
        }
        // just below 1/n the diagonal must carry mass again
        let below = partial_value(&p.cost, &p.mu, &p.nu, &(int(1) / (n_q.clone() * int(2)))).unwrap();
        check(below == fin(rational(1, 2)), || format!("n = {n}: P^(1/2n) = {below}"))?;
        table.push(format!("n={n}:P^(1/n)=0"));
    }
    let p = example_diagonal(3).unwrap();
    let profile = solve_profile(&p.cost, &p.mu, &p.nu).unwrap();
    let expected = vec![(int(0), int(0)), (rational(2, 3), int(0)), (int(1), int(1))];
    check(profile.breakpoints() == expected.as_slice(), || format!("n = 3 breakpoints {:?}", profile.breakpoints()))?;
    let time = within(start, BUDGET_DIAGONAL)?;
    Ok(format!("n = 2..50: P = D = 1, P^eps = 0 for eps >= 1/n, P^(1/2n) = 1/2; n = 3 breakpoints (0,0),(2/3,0),(1,1); {time}"))
}

fn criterion_3() -> Result<String, String> {
    let mut instances: Vec<Problem<Q>> = (0..100).map(|s| seeded_instance(1000 + s, 5)).collect();
    instances.extend((1..=6).map(|n| example_diagonal(n).unwrap()));
    instances.extend((2..=6).flat_map(|n| (0..n).map(move |b| closed_inf_band(n, b).unwrap())));
    let mut reached = 0;
    for (k, p) in instances.iter().enumerate() {
        let target = relaxed_value(&p.cost, &p.mu, &p.nu).unwrap();
        let top = p.cost.max_finite().unwrap_or_else(|| int(0));
        let cert = certified_truncation_level(&p.cost, &p.mu, &p.nu).unwrap();
        let mut levels: Vec<Q> = (0..=8).map(|k| rational(k, 2)).collect();
        levels.push(top.clone() + int(1));
        if let Some(c) = &cert {
            levels.push(top.clone() + c.clone());
        }
        levels.sort();
        levels.dedup();
        let sweep = truncation_sweep_const(&p.cost, &p.mu, &p.nu, &levels).unwrap();
        for w in sweep.windows(2) {
            check(w[0].1 <= w[1].1, || format!("instance {k}: sweep decreases {} -> {}", w[0].1, w[1].1))?;
        }
        if target.is_finite() {
            let cert = cert.ok_or(format!("instance {k}: finite P without certified level"))?;
            let level = top + cert;
            let at = kantgap::primal::truncated_value(&p.cost, &p.mu, &p.nu, &level).unwrap();
            check(at == target, || format!("instance {k}: P_(c^{level}) = {at}, P_rel = {target}"))?;
            reached += 1;
        } else {
            check(sweep.iter().all(|(_, v)| v.is_finite()), || format!("instance {k}: infinite truncated value"))?;
        }
    }
    let p = example_diagonal(3).unwrap();
    let c2 = truncate_cost_const(&p.cost, &int(2)).unwrap();
    let value = primal_value(&c2, &p.mu, &p.nu).unwrap();
    let oracle = brute_primal(&c2, &p.mu, &p.nu, &int(1)).unwrap();
    check(value == fin(rational(2, 3)) && oracle == value, || format!("P_(c^2) = {value}, oracle {oracle}"))?;
    Ok(format!(
        "{} instances nondecreasing in M; P_rel reached at max finite + certified level on {reached} finite ones; diagonal n=3 P_(c^2) = 2/3 = oracle; tolerance {TOLERANCE}",
        instances.len()
    ))
}

/// All breakpoints, midpoints, a twelfth-grid and points past the maximum mass.
fn probe_masses(breakpoints: &[(Q, Q)], max_mass: &Q) -> Vec<Q> {
    let mut masses: Vec<Q> = (0..=12).map(|k| rational(k, 12)).collect();
    for w in breakpoints.windows(2) {
        masses.push((w[0].0.clone() + w[1].0.clone()) / int(2));
    }
    masses.extend(breakpoints.iter().map(|(m, _)| m.clone()));
    masses.push(max_mass.clone() + rational(1, 7));
    masses.sort();
    masses.dedup();
    masses
}

fn criterion_4() -> Result<String, String> {
    let start = Instant::now();
    let mut probes = 0usize;
    for seed in 0..ORACLE_SEEDS {
        let p = seeded_instance(20_000 + seed, ORACLE_MAX_SIDE);
        let profile = solve_profile(&p.cost, &p.mu, &p.nu).unwrap();
        let masses = probe_masses(profile.breakpoints(), profile.max_mass());
        let oracle = brute_primal_many(&p.cost, &p.mu, &p.nu, &masses).unwrap();
        for (m, want) in masses.iter().zip(&oracle) {
            let got = evaluate_profile(&profile, m).unwrap();
            check(&got == want, || format!("seed {seed}, mass {m}: profile {got}, oracle {want}"))?;
        }
        probes += masses.len();
    }

    let mut cell_sets = 0usize;
    for seed in 0..COVER_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + seed);
        let nx = rng.gen_range(1..COVER_MAX_ATOMS);
        let ny = rng.gen_range(1..=COVER_MAX_ATOMS - nx);
        let mu = random_marginal(&mut rng, nx, 0.2);
        let nu = random_marginal(&mut rng, ny, 0.2);
        for _ in 0..4 {
            let l = random_cells(&mut rng, nx, ny);
            let (got, cert) = cover_value(&l, &mu, &nu).unwrap();
            let want = brute_cover(&l, &mu, &nu).unwrap();
            check(got == want && cert.covers(&l), || format!("seed {seed}: cover {got}, oracle {want}"))?;
            cell_sets += 1;
        }
    }
    // every cell set of the 2x2 and 2x3 grids
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (nx, ny) in [(2usize, 2usize), (2, 3), (3, 2)] {
        let mu = random_marginal(&mut rng, nx, 0.25);
        let nu = random_marginal(&mut rng, ny, 0.25);
        for mask in 0u32..1 << (nx * ny) {
            let l = CellSet::from_fn(nx, ny, |i, j| mask >> (i * ny + j) & 1 == 1);
            let (got, _) = cover_value(&l, &mu, &nu).unwrap();
            let want = brute_cover(&l, &mu, &nu).unwrap();
            check(got == want, || format!("{nx}x{ny} mask {mask}: cover {got}, oracle {want}"))?;
            cell_sets += 1;
        }
    }
    let time = within(start, BUDGET_ORACLE)?;
    Ok(format!(
        "{ORACLE_SEEDS} instances up to {ORACLE_MAX_SIDE}x{ORACLE_MAX_SIDE}, {probes} masses; {cell_sets} cell sets with nx + ny <= {COVER_MAX_ATOMS}; all equal; {time}"
    ))
}

fn criterion_5() -> Result<String, String> {
    let mut zero_cases = 0;
    for seed in 0..APPENDIX_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(60_000 + seed);
        let n = rng.gen_range(1..=6);
        let lambda = random_marginal(&mut rng, n, 0.3);
        let l = random_cells(&mut rng, n, n);
        let (gamma, f) = capacity_value(&l, &lambda).unwrap();
        let (m, _) = cover_value(&l, &lambda, &lambda).unwrap();
        let (mass, _) = max_mass_on(&l, &lambda, &lambda).unwrap();
        check(gamma <= m && m <= int(4) * gamma.clone(), || format!("seed {seed}: gamma {gamma}, m {m}"))?;
        check(m == mass, || format!("seed {seed}: m {m}, max mass {mass}"))?;
        for (x, y) in l.cells() {
            check(f[x].clone() + f[y].clone() >= int(1), || format!("seed {seed}: f infeasible at ({x},{y})"))?;
        }
        // gamma(L) = m(L ∪ Lᵀ)/2, through the brute-force cover
        let sym = brute_cover(&l.union(&l.transpose()), &lambda, &lambda).unwrap();
        check(gamma.clone() * int(2) == sym, || format!("seed {seed}: gamma {gamma}, symmetric cover {sym}"))?;

        let mu = random_marginal(&mut rng, n, 0.4);
        let ny = rng.gen_range(1..=6);
        let nu = random_marginal(&mut rng, ny, 0.4);
        let l2 = random_cells(&mut rng, mu.len(), nu.len());
        // restrict to null atoms half the time so the zero side is exercised
        let l2 = if rng.gen_bool(0.5) {
            CellSet::from_fn(mu.len(), nu.len(), |i, j| {
                l2.contains(i, j) && (mu.weight(i) == &int(0) || nu.weight(j) == &int(0))
            })
        } else {
            l2
        };
        for (l, mu, nu) in [(&l, &lambda, &lambda), (&l2, &mu, &nu)] {
            let (m, _) = cover_value(l, mu, nu).unwrap();
            let (mass, _) = max_mass_on(l, mu, nu).unwrap();
            let null = null_for_all_couplings(l, mu, nu).unwrap();
            let decomposition = kellerer_decompose(l, mu, nu).unwrap();
            let null_cover = match &decomposition {
                Decomposition::NullCover { rows, cols } => {
                    let ok = rows.iter().all(|&i| mu.weight(i) == &int(0))
                        && cols.iter().all(|&j| nu.weight(j) == &int(0))
                        && l.cells().all(|(i, j)| rows.contains(&i) || cols.contains(&j));
                    check(ok, || format!("seed {seed}: invalid null cover"))?;
                    true
                }
                Decomposition::Witness(pi) => {
                    let (rows, cols) = sums(pi);
                    let charged = pi.entries().iter().any(|(&(i, j), _)| l.contains(i, j));
                    check(
                        rows == mu.weights() && cols == nu.weights() && charged,
                        || format!("seed {seed}: invalid witness"),
                    )?;
                    false
                }
            };
            let flags = [m == int(0), mass == int(0), null, null_cover];
            check(flags.iter().all(|&b| b == flags[0]), || format!("seed {seed}: zero chain broken {flags:?}"))?;
            if flags[0] {
                zero_cases += 1;
            }
        }
    }
    Ok(format!(
        "{APPENDIX_SEEDS} square instances: gamma <= m <= 4 gamma, m = max mass, gamma = m(L u L^T)/2; zero chain consistent ({zero_cases} zero cases); tolerance {TOLERANCE}"
    ))
}

fn criterion_6() -> Result<String, String> {
    let (mut completions, mut sub_unit) = (0, 0);
    for seed in 0..SHRINK_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(80_000 + seed);
        let (nx, ny) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let mu = random_marginal(&mut rng, nx, 0.2);
        let nu = random_marginal(&mut rng, ny, 0.2);
        // a plan on the charged atoms with perturbed marginals
        let sub_marginal = rng.gen_bool(0.5);
        let entries: Vec<((usize, usize), Q)> = (0..nx)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .filter(|&(i, j)| mu.weight(i) > &int(0) && nu.weight(j) > &int(0))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|(i, j)| {
                let v = if sub_marginal {
                    // μ_i ν_j r with r in [0, 1] keeps f, g <= 1
                    mu.weight(i).clone() * nu.weight(j).clone() * rational(rng.gen_range(0..=6), 6)
                } else {
                    rational(rng.gen_range(0..=4), rng.gen_range(4..=20))
                };
                ((i, j), v)
            })
            .collect();
        let pi = Coupling::from_entries(nx, ny, entries).unwrap();
        let shrunk = shrink_to_partial(&pi, &mu, &nu).map_err(|e| format!("seed {seed}: {e}"))?;

        let (rows, cols) = sums(&pi);
        let (srows, scols) = sums(&shrunk);
        let mass: Q = rows.iter().cloned().sum();
        check(shrunk.entries().iter().all(|(&(i, j), v)| *v <= pi.get(i, j)), || format!("seed {seed}: not dominated"))?;
        check(
            srows.iter().zip(mu.weights()).all(|(a, b)| a <= b) && scols.iter().zip(nu.weights()).all(|(a, b)| a <= b),
            || format!("seed {seed}: exceeds marginals"),
        )?;
        if mass > int(0) {
            // Jensen under π/‖π‖: deviations weighted by π's marginals, and by
            // μ, ν themselves once the densities are at most one
            let kept: Q = srows.iter().cloned().sum();
            let bound = |a: Q, b: Q| mass.clone() / ((int(1) + a / mass.clone()) * (int(1) + b / mass.clone()));
            let dev = |s: &[Q], w: &[Q], by_plan: bool| -> (Q, bool) {
                let mut total = int(0);
                let mut small = true;
                for (s, w) in s.iter().zip(w).filter(|(_, w)| **w > int(0)) {
                    let f = s.clone() / w.clone();
                    small &= f <= int(1);
                    total += (f - int(1)).abs() * if by_plan { s.clone() } else { w.clone() };
                }
                (total, small)
            };
            let (a, _) = dev(&rows, mu.weights(), true);
            let (b, _) = dev(&cols, nu.weights(), true);
            let weighted = bound(a, b);
            check(kept >= weighted, || format!("seed {seed}: kept {kept} < Jensen bound {weighted}"))?;
            let (a, fa) = dev(&rows, mu.weights(), false);
            let (b, fb) = dev(&cols, nu.weights(), false);
            if fa && fb {
                let plain = bound(a, b);
                check(kept >= plain, || format!("seed {seed}: kept {kept} < L1 bound {plain}"))?;
                sub_unit += 1;
            }
        }

        // complete the shrunk plan under a bounded random cost
        let bound = int(rng.gen_range(0..=5));
        let c = CostMatrix::from_fn(nx, ny, |i, j| {
            let k = ((i * 7 + j * 3 + seed as usize) % 6) as i64;
            fin(bound.clone() * rational(k, 5).min(int(1)))
        })
        .unwrap();
        let full = complete_partial_bounded(&shrunk, &mu, &nu, &c, &bound).map_err(|e| format!("seed {seed}: {e}"))?;
        let (frows, fcols) = sums(&full);
        check(frows == mu.weights() && fcols == nu.weights(), || format!("seed {seed}: completion marginals"))?;
        let eps = int(1) - shrunk.mass().clone();
        let before = cost_of(&c, &shrunk).unwrap().into_finite().unwrap();
        let after = cost_of(&c, &full).unwrap().into_finite().unwrap();
        check(after <= before.clone() + eps.clone() * bound.clone(), || {
            format!("seed {seed}: cost {after} > {before} + {eps}*{bound}")
        })?;
        completions += 1;
    }
    Ok(format!(
        "{SHRINK_SEEDS} perturbed plans: domination, sub-marginals, Jensen bound (L1(mu) form on {sub_unit} with f, g <= 1); {completions} completions exact with cost <= cost + eps M; tolerance {TOLERANCE}"
    ))
}

fn criterion_7() -> Result<String, String> {
    let mut instances: Vec<Problem<Q>> = (0..DUAL_SEEDS).map(|s| seeded_instance(90_000 + s, 4)).collect();
    instances.extend((1..=4).map(|n| example_diagonal(n).unwrap()));
    instances.extend((2..=4).flat_map(|n| (0..n).map(move |b| closed_inf_band(n, b).unwrap())));
    let (mut certified, mut invariant, mut sandwiched) = (0, 0, 0);
    for (k, p) in instances.iter().enumerate() {
        let sol = dual_value(&p.cost, &p.mu, &p.nu).unwrap();
        let primal = primal_value(&p.cost, &p.mu, &p.nu).unwrap();
        if primal.is_infinite() {
            continue;
        }
        let pair = &sol.pair;
        check(verify_feasible(pair, &p.cost).feasible, || format!("instance {k}: infeasible pair"))?;
        let phi: Vec<Q> = pair.phi.iter().map(|x| x.finite().unwrap().clone()).collect();
        let psi: Vec<Q> = pair.psi.iter().map(|x| x.finite().unwrap().clone()).collect();
        for (i, j, c) in p.cost.finite_cells() {
            check(phi[i].clone() + psi[j].clone() <= *c, || format!("instance {k}: violated at ({i},{j})"))?;
        }
        let pi = optimal_coupling_at(&p.cost, &p.mu, &p.nu, &int(1)).unwrap();
        for (&(i, j), _) in pi.entries() {
            let c = p.cost.get(i, j).finite().unwrap().clone();
            check(phi[i].clone() + psi[j].clone() == c, || format!("instance {k}: slack at charged ({i},{j})"))?;
        }
        check(pair.objective == Potential::Finite(primal.finite().unwrap().clone()), || format!("instance {k}: objective"))?;
        certified += 1;

        // a second finite-cost plan: optimal for a reshuffled finite cost
        let alt_cost = CostMatrix::from_fn(p.cost.nx(), p.cost.ny(), |i, j| match p.cost.get(i, j) {
            ExtendedCost::Finite(_) => fin(int(((i * 5 + j * 3 + k) % 4) as i64)),
            ExtendedCost::Infinite => ExtendedCost::Infinite,
        })
        .unwrap();
        let alt = optimal_coupling_at(&alt_cost, &p.mu, &p.nu, &int(1)).unwrap();
        let mix = pi.add(&alt).unwrap().scaled(&rational(1, 2)).unwrap();
        let plans: Vec<&Coupling<Q>> = [&pi, &alt, &mix].into_iter().fold(Vec::new(), |mut acc, x| {
            if !acc.contains(&x) {
                acc.push(x);
            }
            acc
        });
        let values: Vec<Potential<Q>> = plans.iter().map(|x| j_functional(pair, x, &p.cost).unwrap()).collect();
        check(values.iter().all(|v| *v == values[0]), || format!("instance {k}: J varies {values:?}"))?;
        if plans.len() >= 2 {
            invariant += 1;
        }

        let rel = relaxed_dual_value(&p.cost, &p.mu, &p.nu).unwrap();
        let s = chargeable_set(&p.cost, &p.mu, &p.nu).unwrap();
        check(rel.chargeable == s, || format!("instance {k}: chargeable set mismatch"))?;
        let d = sol.value.finite().unwrap().clone();
        let pv = primal.finite().unwrap().clone();
        check(d <= rel.value && rel.value <= pv, || format!("instance {k}: D {d}, D_rel {}, P {pv}", rel.value))?;
        sandwiched += 1;
    }
    let p = example_diagonal(3).unwrap();
    let rel = relaxed_dual_value(&p.cost, &p.mu, &p.nu).unwrap();
    check(rel.value == int(1), || format!("diagonal n=3 D_rel = {}", rel.value))?;
    check(invariant > 0, || "no instance with two distinct finite-cost plans".into())?;
    Ok(format!(
        "{certified} optimal pairs feasible with exact slackness; J invariant on {invariant} instances with >= 2 plans; D <= D_rel <= P on {sandwiched}; D_rel = 1 on diagonal n=3"
    ))
}

const STUDY_ARGS: [&str; 9] = [
    "study",
    "--family",
    "diagonal",
    "--n-list",
    "2-12",
    "--eps-grid",
    "1/n,1/2n,1/4",
    "--m-grid",
    "1,2,4,8",
];

fn criterion_8() -> Result<String, String> {
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_kantgap"))
            .args(STUDY_ARGS)
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    check(a == b, || "study output differs between runs".into())?;
    let text = String::from_utf8(a).map_err(|e| e.to_string())?;
    check(text.starts_with("n,epsilon,M,P,P_eps,P_trunc,D\n"), || "wrong CSV header".into())?;
    check(text.contains("\n3,1/3,2,1,0,2/3,1\n"), || "missing pinned row".into())?;
    Ok(format!("two runs of `kantgap {}` byte-identical ({} bytes)", STUDY_ARGS.join(" "), text.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Result<String, String>); 8] = [
        ("finite no-gap", criterion_1),
        ("diagonal mechanism", criterion_2),
        ("truncation limit", criterion_3),
        ("oracle equivalence", criterion_4),
        ("cover and capacity functionals", criterion_5),
        ("shrink and completion", criterion_6),
        ("dual certificates", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
