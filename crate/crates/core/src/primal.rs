//! Primal values: the full transport value, partial values for every mass
//! deficit, the relaxed value, the cost functional of sub-marginal pairs, and
//! truncated-cost sweeps.

use rayon::prelude::*;

use crate::dual::dual_value;
use crate::error::{Error, Result};
use crate::flow::{evaluate_profile, optimal_coupling_at, solve_profile, TransportProfile};
use crate::measure::{
    truncate_cost, truncate_cost_const, CostMatrix, Coupling, ExtendedCost, Marginal, Problem,
};
use crate::scalar::{Rational, Scalar};
use crate::scenarios::Family;

/// Attached to every relaxed value computed on a single finite instance.
pub const FINITE_COLLAPSE_NOTE: &str = "on a finite space every cost is lower semicontinuous and the \
profile is continuous at full mass, so the relaxed value equals the primal value; a gap can only \
appear along a refinement family";

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalReport<T> {
    pub primal: ExtendedCost<T>,
    /// `(eps, P^eps)` in the order requested.
    pub partials: Vec<(T, ExtendedCost<T>)>,
    pub relaxed: ExtendedCost<T>,
    pub max_mass: T,
    /// An optimal full coupling when one of finite cost exists.
    pub witness: Option<Coupling<T>>,
}

/// Least cost over full couplings; infinite iff no full coupling avoids the
/// infinite cells.
pub fn primal_value<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<ExtendedCost<T>> {
    mu.require_probability()?;
    nu.require_probability()?;
    let profile = solve_profile(c, mu, nu)?;
    evaluate_profile(&profile, &T::one())
}

fn check_epsilon<T: Scalar>(eps: &T) -> Result<()> {
    if eps.is_negative_tol() || !eps.approx_le(&T::one()) {
        return Err(Error::EpsilonOutOfRange(eps.render()));
    }
    Ok(())
}

fn partial_from_profile<T: Scalar>(profile: &TransportProfile<T>, eps: &T) -> Result<ExtendedCost<T>> {
    check_epsilon(eps)?;
    let mass = T::max_of(T::one() - eps.clone(), T::zero());
    evaluate_profile(profile, &mass)
}

/// Least cost over partial couplings of mass `1 - eps`.
pub fn partial_value<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    eps: &T,
) -> Result<ExtendedCost<T>> {
    check_epsilon(eps)?;
    let profile = solve_profile(c, mu, nu)?;
    partial_from_profile(&profile, eps)
}

/// Limit of the partial values as `eps -> 0`, read off as the left limit of
/// the profile at mass one. See [`FINITE_COLLAPSE_NOTE`].
pub fn relaxed_value<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
) -> Result<ExtendedCost<T>> {
    mu.require_probability()?;
    nu.require_probability()?;
    let profile = solve_profile(c, mu, nu)?;
    Ok(left_limit_at_one(&profile))
}

fn left_limit_at_one<T: Scalar>(profile: &TransportProfile<T>) -> ExtendedCost<T> {
    if T::one().approx_le(profile.max_mass()) {
        // piecewise linear, hence continuous on [0, max_mass]
        evaluate_profile(profile, &T::one()).expect("mass one is nonnegative")
    } else {
        ExtendedCost::Infinite
    }
}

pub fn primal_report<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    eps_grid: &[T],
) -> Result<PrimalReport<T>> {
    mu.require_probability()?;
    nu.require_probability()?;
    let profile = solve_profile(c, mu, nu)?;
    let primal = evaluate_profile(&profile, &T::one())?;
    let partials = eps_grid
        .iter()
        .map(|eps| Ok((eps.clone(), partial_from_profile(&profile, eps)?)))
        .collect::<Result<Vec<_>>>()?;
    let witness = if primal.is_finite() {
        Some(optimal_coupling_at(c, mu, nu, &T::one())?)
    } else {
        None
    };
    Ok(PrimalReport {
        relaxed: left_limit_at_one(&profile),
        primal,
        partials,
        max_mass: profile.max_mass().clone(),
        witness,
    })
}

/// `Φ(f, g)`: least cost of a full coupling between `f·mu` and `g·nu`.
pub fn phi_value<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    f: &[T],
    g: &[T],
) -> Result<ExtendedCost<T>> {
    let fmu = mu.with_density(f)?;
    let gnu = nu.with_density(g)?;
    if !fmu.mass().approx_eq(gnu.mass()) {
        return Err(Error::NotInV {
            left: fmu.mass().render(),
            right: gnu.mass().render(),
        });
    }
    let profile = solve_profile(c, &fmu, &gnu)?;
    evaluate_profile(&profile, fmu.mass())
}

/// `P_{c∧h}` for each level of a nondecreasing sequence of finite matrices.
pub fn truncation_sweep<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    levels: &[CostMatrix<T>],
) -> Result<Vec<(usize, ExtendedCost<T>)>> {
    for (k, h) in levels.iter().enumerate() {
        h.check_dims(c.nx(), c.ny())?;
        if let Some((row, col, _)) = h.cells().find(|(_, _, v)| v.is_infinite()) {
            return Err(Error::InfiniteLevel { level: k, row, col });
        }
        if k > 0 && !levels[k - 1].dominated_by(h) {
            return Err(Error::NonMonotoneLevels(k));
        }
    }
    levels
        .par_iter()
        .enumerate()
        .map(|(k, h)| {
            let truncated = truncate_cost(c, h)?;
            Ok((k, primal_value(&truncated, mu, nu)?))
        })
        .collect()
}

/// [`truncation_sweep`] with constant levels `h ≡ M`.
pub fn truncation_sweep_const<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    levels: &[T],
) -> Result<Vec<(usize, ExtendedCost<T>)>> {
    let matrices = levels
        .iter()
        .map(|m| CostMatrix::constant(c.nx(), c.ny(), ExtendedCost::Finite(m.clone())))
        .collect::<Result<Vec<_>>>()?;
    truncation_sweep(c, mu, nu, &matrices)
}

/// `P_{c∧M}` for a single constant level.
pub fn truncated_value<T: Scalar>(
    c: &CostMatrix<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    level: &T,
) -> Result<ExtendedCost<T>> {
    primal_value(&truncate_cost_const(c, level)?, mu, nu)
}

/// An epsilon of a refinement study, either absolute or a multiple of `1/n`.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonSpec {
    Absolute(Rational),
    PerN(Rational),
}

impl EpsilonSpec {
    pub fn resolve(&self, n: usize) -> Rational {
        match self {
            EpsilonSpec::Absolute(e) => e.clone(),
            EpsilonSpec::PerN(k) => k.clone() / Rational::from_usize(n),
        }
    }

    /// Tokens ending in `n` are relative: `k/n` scales `k`, `a/bn` scales `a/b`.
    pub fn parse(token: &str) -> Result<Self> {
        let t = token.trim();
        if let Some(head) = t.strip_suffix('n') {
            let coeff = head.strip_suffix('/').unwrap_or(head);
            return Ok(EpsilonSpec::PerN(crate::scalar::parse_rational(coeff)?));
        }
        Ok(EpsilonSpec::Absolute(crate::scalar::parse_rational(t)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow<T> {
    pub n: usize,
    pub epsilon: T,
    pub level: T,
    pub primal: ExtendedCost<T>,
    pub partial: ExtendedCost<T>,
    pub truncated: ExtendedCost<T>,
    pub dual: ExtendedCost<T>,
}

pub const STUDY_CSV_HEADER: &str = "n,epsilon,M,P,P_eps,P_trunc,D";

/// One row per `(n, eps, M)` in grid order: the double-limit table showing
/// how the partial and truncated values behave as the instance refines.
pub fn refinement_study<T: Scalar>(
    family: &Family,
    n_list: &[usize],
    eps_list: &[EpsilonSpec],
    m_list: &[Rational],
) -> Result<Vec<StudyRow<T>>> {
    let per_n: Vec<Vec<StudyRow<T>>> = n_list
        .par_iter()
        .map(|&n| {
            let problem: Problem<T> = family.instance(n)?.map(T::from_rational);
            let Problem { cost, mu, nu } = &problem;
            let profile = solve_profile(cost, mu, nu)?;
            let primal = evaluate_profile(&profile, &T::one())?;
            let dual = dual_value(cost, mu, nu)?.value;
            let truncated = m_list
                .iter()
                .map(|m| truncated_value(cost, mu, nu, &T::from_rational(m)))
                .collect::<Result<Vec<_>>>()?;
            let mut rows = Vec::with_capacity(eps_list.len() * m_list.len());
            for spec in eps_list {
                let eps = T::from_rational(&spec.resolve(n));
                let partial = partial_from_profile(&profile, &eps)?;
                for (m, trunc) in m_list.iter().zip(&truncated) {
                    rows.push(StudyRow {
                        n,
                        epsilon: eps.clone(),
                        level: T::from_rational(m),
                        primal: primal.clone(),
                        partial: partial.clone(),
                        truncated: trunc.clone(),
                        dual: dual.clone(),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_n.into_iter().flatten().collect())
}

pub fn study_csv<T: Scalar>(rows: &[StudyRow<T>]) -> String {
    let mut out = String::from(STUDY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.epsilon.render(),
            r.level.render(),
            r.primal,
            r.partial,
            r.truncated,
            r.dual
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rational};
    use crate::scenarios::example_diagonal;

    fn fin(v: Rational) -> ExtendedCost<Rational> {
        ExtendedCost::Finite(v)
    }

    #[test]
    fn diagonal_values() {
        let p = example_diagonal(3).unwrap();
        assert_eq!(primal_value(&p.cost, &p.mu, &p.nu).unwrap(), fin(int(1)));
        assert_eq!(partial_value(&p.cost, &p.mu, &p.nu, &rational(1, 3)).unwrap(), fin(int(0)));
        assert_eq!(partial_value(&p.cost, &p.mu, &p.nu, &rational(1, 6)).unwrap(), fin(rational(1, 2)));
        assert_eq!(partial_value(&p.cost, &p.mu, &p.nu, &int(1)).unwrap(), fin(int(0)));
        assert_eq!(relaxed_value(&p.cost, &p.mu, &p.nu).unwrap(), fin(int(1)));
        assert!(matches!(
            partial_value(&p.cost, &p.mu, &p.nu, &rational(3, 2)),
            Err(Error::EpsilonOutOfRange(_))
        ));
    }

    #[test]
    fn trivial_costs() {
        let mu = Marginal::<Rational>::uniform(3).unwrap();
        let zero = CostMatrix::constant(3, 3, ExtendedCost::zero()).unwrap();
        assert_eq!(primal_value(&zero, &mu, &mu).unwrap(), fin(int(0)));
        assert_eq!(relaxed_value(&zero, &mu, &mu).unwrap(), fin(int(0)));
        let inf = CostMatrix::constant(3, 3, ExtendedCost::Infinite).unwrap();
        assert_eq!(primal_value(&inf, &mu, &mu).unwrap(), ExtendedCost::Infinite);
        assert_eq!(relaxed_value(&inf, &mu, &mu).unwrap(), ExtendedCost::Infinite);
        assert_eq!(partial_value(&inf, &mu, &mu, &int(1)).unwrap(), fin(int(0)));

        let half = Marginal::from_weights(vec![rational(1, 2), int(0), int(0)]).unwrap();
        assert!(matches!(primal_value(&zero, &half, &mu), Err(Error::NotProbability(_))));
    }

    #[test]
    fn phi_examples() {
        let p = example_diagonal(3).unwrap();
        let ones = vec![int(1); 3];
        let zeros = vec![int(0); 3];
        assert_eq!(phi_value(&p.cost, &p.mu, &p.nu, &ones, &ones).unwrap(), fin(int(1)));
        assert_eq!(phi_value(&p.cost, &p.mu, &p.nu, &zeros, &zeros).unwrap(), fin(int(0)));
        let f = vec![int(0), int(1), int(1)];
        let g = vec![int(1), int(1), int(0)];
        assert_eq!(phi_value(&p.cost, &p.mu, &p.nu, &f, &g).unwrap(), fin(int(0)));
        assert!(matches!(
            phi_value(&p.cost, &p.mu, &p.nu, &ones, &zeros),
            Err(Error::NotInV { .. })
        ));
    }

    #[test]
    fn truncation_examples() {
        let p = example_diagonal(3).unwrap();
        let sweep = truncation_sweep_const(&p.cost, &p.mu, &p.nu, &[int(1), int(2), int(3), int(100)]).unwrap();
        let values: Vec<_> = sweep.into_iter().map(|(_, v)| v).collect();
        assert_eq!(
            values,
            vec![fin(rational(1, 3)), fin(rational(2, 3)), fin(int(1)), fin(int(1))]
        );

        let err = truncation_sweep_const(&p.cost, &p.mu, &p.nu, &[int(2), int(1)]).unwrap_err();
        assert_eq!(err, Error::NonMonotoneLevels(1));

        let inf_level = CostMatrix::constant(3, 3, ExtendedCost::Infinite).unwrap();
        assert!(matches!(
            truncation_sweep(&p.cost, &p.mu, &p.nu, &[inf_level]),
            Err(Error::InfiniteLevel { .. })
        ));

        let zero = CostMatrix::constant(3, 3, ExtendedCost::zero()).unwrap();
        let sweep = truncation_sweep_const(&zero, &p.mu, &p.nu, &[int(1), int(5)]).unwrap();
        assert!(sweep.iter().all(|(_, v)| *v == fin(int(0))));
    }

    #[test]
    fn report_collects_everything() {
        let p = example_diagonal(4).unwrap();
        let r = primal_report(&p.cost, &p.mu, &p.nu, &[rational(1, 4), rational(1, 8)]).unwrap();
        assert_eq!(r.primal, fin(int(1)));
        assert_eq!(r.relaxed, r.primal);
        assert_eq!(r.partials[0].1, fin(int(0)));
        assert_eq!(r.partials[1].1, fin(rational(1, 2)));
        assert_eq!(r.max_mass, int(1));
        assert!(r.witness.unwrap().is_coupling_of(&p.mu, &p.nu));
    }

    #[test]
    fn epsilon_specs() {
        assert_eq!(EpsilonSpec::parse("1/n").unwrap().resolve(4), rational(1, 4));
        assert_eq!(EpsilonSpec::parse("2/n").unwrap().resolve(8), rational(1, 4));
        assert_eq!(EpsilonSpec::parse("1/10").unwrap().resolve(4), rational(1, 10));
        assert_eq!(EpsilonSpec::parse("1/2n").unwrap().resolve(3), rational(1, 6));
        assert!(EpsilonSpec::parse("x/n").is_err());
    }

    #[test]
    fn small_study() {
        let rows = refinement_study::<Rational>(
            &Family::Diagonal,
            &[3, 4],
            &[EpsilonSpec::PerN(int(1))],
            &[int(2)],
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].truncated, fin(rational(2, 3)));
        assert_eq!(rows[1].truncated, fin(rational(1, 2)));
        assert!(rows.iter().all(|r| r.partial == fin(int(0)) && r.primal == fin(int(1))));
        let csv = study_csv(&rows);
        assert_eq!(csv, "n,epsilon,M,P,P_eps,P_trunc,D\n3,1/3,2,1,0,2/3,1\n4,1/4,2,1,0,1/2,1\n");
    }
}
