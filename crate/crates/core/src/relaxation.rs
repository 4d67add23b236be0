//! The two coupling surgeries: shrinking a coupling of perturbed marginals
//! into a partial coupling, and completing a partial coupling to a full one.

use crate::error::{Error, Result};
use crate::measure::{cost_of, product_coupling, CostMatrix, Coupling, ExtendedCost, Marginal};
use crate::scalar::Scalar;

/// Densities `f = p_X(π)/μ`, `g = p_Y(π)/ν`. Atoms of zero weight get density
/// one; they carry no mass of `π` so the value never matters.
pub fn densities<T: Scalar>(pi: &Coupling<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<(Vec<T>, Vec<T>)> {
    fn ratio<T: Scalar>(sums: &[T], weights: &Marginal<T>, side: &'static str) -> Result<Vec<T>> {
        sums.iter()
            .zip(weights.weights())
            .enumerate()
            .map(|(index, (s, w))| {
                if w.is_negligible() {
                    if s.is_positive_tol() {
                        Err(Error::DensityUndefined { side, index })
                    } else {
                        Ok(T::one())
                    }
                } else {
                    Ok(s.clone() / w.clone())
                }
            })
            .collect()
    }
    if (pi.nx(), pi.ny()) != (mu.len(), nu.len()) {
        return Err(Error::DimensionMismatch {
            expected: (mu.len(), nu.len()),
            got: (pi.nx(), pi.ny()),
        });
    }
    Ok((ratio(pi.row_sums(), mu, "X")?, ratio(pi.col_sums(), nu, "Y")?))
}

/// `Σ |f_i - 1| w_i`.
fn weighted_deviation<T: Scalar>(density: &[T], weights: &[T]) -> T {
    density
        .iter()
        .zip(weights)
        .fold(T::zero(), |acc, (f, w)| acc + (f.clone() - T::one()).abs() * w.clone())
}

fn damping<T: Scalar>(f: &T) -> T {
    T::one() / (T::one() + (f.clone() - T::one()).abs())
}

fn bound_from<T: Scalar>(mass: T, a: T, b: T) -> T {
    let a = a / mass.clone();
    let b = b / mass.clone();
    mass / ((T::one() + a) * (T::one() + b))
}

/// `‖π‖ · F(∫|f-1| dπ/‖π‖, ∫|g-1| dπ/‖π‖)` with `F(a, b) = 1/((1+a)(1+b))`:
/// Jensen's inequality for the convex `F` under the normalized `π`, hence a
/// lower bound on the mass kept by [`shrink_to_partial`].
pub fn jensen_lower_bound<T: Scalar>(pi: &Coupling<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<T> {
    let mass = pi.mass().clone();
    if mass.is_negligible() {
        return Ok(T::zero());
    }
    let (f, g) = densities(pi, mu, nu)?;
    let a = weighted_deviation(&f, pi.row_sums());
    let b = weighted_deviation(&g, pi.col_sums());
    Ok(bound_from(mass, a, b))
}

/// The same bound with the deviations measured in `L¹(μ)` and `L¹(ν)`, i.e.
/// `‖π‖ · F(‖f-1‖_{L¹(μ)}/‖π‖, ‖g-1‖_{L¹(ν)}/‖π‖)`. `F` is decreasing and
/// `∫|f-1| dπ = Σ |f_i-1| f_i μ_i`, so this is implied by
/// [`jensen_lower_bound`] when `f, g <= 1`; for larger densities it can fail
/// and `None` is returned.
pub fn marginal_norm_bound<T: Scalar>(pi: &Coupling<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<Option<T>> {
    let mass = pi.mass().clone();
    let (f, g) = densities(pi, mu, nu)?;
    if f.iter().chain(&g).any(|x| !x.approx_le(&T::one())) {
        return Ok(None);
    }
    if mass.is_negligible() {
        return Ok(Some(T::zero()));
    }
    let a = weighted_deviation(&f, mu.weights());
    let b = weighted_deviation(&g, nu.weights());
    Ok(Some(bound_from(mass, a, b)))
}

/// Multiplies `π` by the density `1/((1+|f(x)-1|)(1+|g(y)-1|))`.
///
/// The result is dominated by `π`, its marginals are dominated by `μ` and `ν`
/// (since `f/(1+|f-1|) <= 1` for `f >= 0`), and its mass is at least
/// [`jensen_lower_bound`] (and [`marginal_norm_bound`] where defined). All of
/// these are re-checked on every call.
pub fn shrink_to_partial<T: Scalar>(pi: &Coupling<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<Coupling<T>> {
    let (f, g) = densities(pi, mu, nu)?;
    let row_factor: Vec<T> = f.iter().map(damping).collect();
    let col_factor: Vec<T> = g.iter().map(damping).collect();
    let shrunk = Coupling::from_entries(
        pi.nx(),
        pi.ny(),
        pi.entries()
            .iter()
            .map(|(&(i, j), v)| ((i, j), v.clone() * row_factor[i].clone() * col_factor[j].clone())),
    )?;

    if !shrunk.dominated_by(pi) {
        return Err(Error::PostconditionViolated("shrunk plan exceeds the original".into()));
    }
    if !shrunk.is_partial_coupling_of(mu, nu) {
        return Err(Error::PostconditionViolated(
            "shrunk plan exceeds a marginal".into(),
        ));
    }
    let bounds = [Some(jensen_lower_bound(pi, mu, nu)?), marginal_norm_bound(pi, mu, nu)?];
    for bound in bounds.iter().flatten() {
        if !bound.approx_le(shrunk.mass()) {
            return Err(Error::PostconditionViolated(format!(
                "kept mass {} is below the Jensen bound {}",
                shrunk.mass().render(),
                bound.render()
            )));
        }
    }
    Ok(shrunk)
}

/// `π = π^ε + ε⁻¹ (μ - μ^ε) ⊗ (ν - ν^ε)`, where `μ^ε`, `ν^ε` are the marginals
/// of the partial coupling and `ε` is the common mass deficit. A full coupling
/// is returned unchanged.
pub fn complete_partial<T: Scalar>(partial: &Coupling<T>, mu: &Marginal<T>, nu: &Marginal<T>) -> Result<Coupling<T>> {
    if !partial.is_partial_coupling_of(mu, nu) {
        return Err(Error::PreconditionViolated(
            "plan is not dominated by the marginals".into(),
        ));
    }
    let row_deficit = mu.mass().clone() - partial.mass().clone();
    let col_deficit = nu.mass().clone() - partial.mass().clone();
    if !row_deficit.approx_eq(&col_deficit) {
        return Err(Error::DeficitMismatch {
            rows: row_deficit.render(),
            cols: col_deficit.render(),
            expected: row_deficit.render(),
        });
    }
    if row_deficit.is_negligible() {
        return Ok(partial.clone());
    }
    let mu_left = mu.deficit(&Marginal::from_weights(partial.row_sums().to_vec())?)?;
    let nu_left = nu.deficit(&Marginal::from_weights(partial.col_sums().to_vec())?)?;
    let fill = product_coupling(&mu_left, &nu_left, &(T::one() / row_deficit))?;
    let full = partial.add(&fill)?;
    if !full.is_coupling_of(mu, nu) {
        return Err(Error::PostconditionViolated(
            "completion does not reproduce the marginals".into(),
        ));
    }
    Ok(full)
}

/// [`complete_partial`] for a cost bounded by `bound`, asserting
/// `⟨c, π⟩ <= ⟨c, π^ε⟩ + ε·bound`.
pub fn complete_partial_bounded<T: Scalar>(
    partial: &Coupling<T>,
    mu: &Marginal<T>,
    nu: &Marginal<T>,
    c: &CostMatrix<T>,
    bound: &T,
) -> Result<Coupling<T>> {
    if let Some((i, j, _)) = c.cells().find(|(_, _, v)| !v.approx_le(&ExtendedCost::Finite(bound.clone()))) {
        return Err(Error::PreconditionViolated(format!(
            "cost at ({i}, {j}) exceeds the bound {}",
            bound.render()
        )));
    }
    let full = complete_partial(partial, mu, nu)?;
    let eps = mu.mass().clone() - partial.mass().clone();
    let before = cost_of(c, partial)?;
    let after = cost_of(c, &full)?;
    let allowed = before.add(&ExtendedCost::Finite(eps * bound.clone()));
    if !after.approx_le(&allowed) {
        return Err(Error::PostconditionViolated(format!(
            "completed cost {after} exceeds {allowed}"
        )));
    }
    Ok(full)
}
