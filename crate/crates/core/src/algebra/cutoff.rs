//! Integrated cutoff quantities `𝔥_δ`, `ĥ_δ`, their ε-regularized variants,
//! and the primitives `Γ_ε(u) = α∫₀ᵘ(|s|+ε)^{α−1}s ds`,
//! `B_ε(u) = α∫₀ᵘ(|s|+ε)^{α−1} ds` used by the discrete energy identity.

use super::integrate::{default_tolerance, integrate};
use super::{ramp, spow_unchecked, Alpha};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(())
}

fn check_finite<T: Scalar>(what: &str, xs: &[T]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Weight under the cutoff together with its antiderivative.
#[derive(Clone, Copy)]
enum Weight<T> {
    /// `α|s|^{α−1}`, antiderivative `|s|^{α−1}s`.
    Plain(T),
    /// `d/ds[(|s|+ε)^{α−1}s]`.
    Regularized(T, T),
}

impl<T: Scalar> Weight<T> {
    fn density(self, s: T) -> T {
        match self {
            Weight::Plain(a) => {
                if s == T::zero() {
                    // only reached for α ≥ 1 on a breakpoint-free piece
                    if a == T::one() { a } else { T::zero() }
                } else {
                    a * s.abs().powf(a - T::one())
                }
            }
            Weight::Regularized(a, eps) => {
                let r = s.abs() + eps;
                (a - T::one()) * r.powf(a - T::lit(2.0)) * s.abs() + r.powf(a - T::one())
            }
        }
    }

    fn antiderivative(self, s: T) -> T {
        match self {
            Weight::Plain(a) => spow_unchecked(s, a),
            Weight::Regularized(a, eps) => (s.abs() + eps).powf(a - T::one()) * s,
        }
    }
}

/// `∫_{z₀}^{z} ℌ_δ(s − z₀) w(s) ds`: ramp part by adaptive quadrature,
/// plateau part from the antiderivative.
fn forward<T: Scalar>(z: T, z0: T, delta: T, weight: Weight<T>) -> Result<T> {
    if z <= z0 {
        return Ok(T::zero());
    }
    let ramp_end = z.min(z0 + delta);
    let ramp_part = integrate(
        |s| ramp(s - z0, delta) * weight.density(s),
        z0,
        ramp_end,
        &[T::zero()],
        default_tolerance(),
    )?
    .value;
    let plateau = if z > z0 + delta {
        weight.antiderivative(z) - weight.antiderivative(z0 + delta)
    } else {
        T::zero()
    };
    Ok((ramp_part + plateau).max(T::zero()))
}

/// `∫_{z₀}^{z} ℌ̂_δ(s − z₀) w(s) ds` with the odd reflection `ℌ̂_δ(s) = −ℌ_δ(−s)`.
fn reflected<T: Scalar>(z: T, z0: T, delta: T, weight: Weight<T>) -> Result<T> {
    if z >= z0 {
        return Ok(T::zero());
    }
    let ramp_start = z.max(z0 - delta);
    let ramp_part = integrate(
        |s| ramp(z0 - s, delta) * weight.density(s),
        ramp_start,
        z0,
        &[T::zero()],
        default_tolerance(),
    )?
    .value;
    let plateau = if z < z0 - delta {
        weight.antiderivative(z0 - delta) - weight.antiderivative(z)
    } else {
        T::zero()
    };
    Ok((ramp_part + plateau).max(T::zero()))
}

/// `𝔥_δ(z, z₀) = ∫_{z₀}^{z} ℌ_δ(s − z₀) α|s|^{α−1} ds`.
pub fn h_delta<T: Scalar>(z: T, z0: T, alpha: Alpha<T>, delta: T) -> Result<T> {
    check_delta(delta)?;
    check_finite("h_delta arguments", &[z, z0])?;
    forward(z, z0, delta, Weight::Plain(alpha.value()))
}

/// `ĥ_δ(z, z₀)`, nonzero only for `z < z₀`.
pub fn hat_h_delta<T: Scalar>(z: T, z0: T, alpha: Alpha<T>, delta: T) -> Result<T> {
    check_delta(delta)?;
    check_finite("hat_h_delta arguments", &[z, z0])?;
    reflected(z, z0, delta, Weight::Plain(alpha.value()))
}

/// ε-regularized cutoff integral with weight
/// `(α−1)(|s|+ε)^{α−2}|s| + (|s|+ε)^{α−1}`; `reflected` selects the
/// odd-reflected cutoff.
pub fn h_delta_eps<T: Scalar>(
    z: T,
    z0: T,
    alpha: Alpha<T>,
    delta: T,
    epsilon: T,
    reflected_cutoff: bool,
) -> Result<T> {
    check_delta(delta)?;
    check_finite("h_delta_eps arguments", &[z, z0, epsilon])?;
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let w = Weight::Regularized(alpha.value(), epsilon);
    if reflected_cutoff {
        reflected(z, z0, delta, w)
    } else {
        forward(z, z0, delta, w)
    }
}

/// `Γ_ε(u) = α∫₀ᵘ (|s|+ε)^{α−1} s ds` by adaptive quadrature.
pub fn gamma_eps<T: Scalar>(u: T, alpha: Alpha<T>, epsilon: T) -> Result<T> {
    let a = alpha.value();
    Ok(integrate(
        |s: T| a * (s.abs() + epsilon).powf(a - T::one()) * s,
        T::zero(),
        u,
        &[],
        default_tolerance(),
    )?
    .value)
}

/// `B_ε(u) = α∫₀ᵘ (|s|+ε)^{α−1} ds` by adaptive quadrature.
pub fn primitive_b_eps<T: Scalar>(u: T, alpha: Alpha<T>, epsilon: T) -> Result<T> {
    let a = alpha.value();
    Ok(integrate(
        |s: T| a * (s.abs() + epsilon).powf(a - T::one()),
        T::zero(),
        u,
        &[],
        default_tolerance(),
    )?
    .value)
}

/// Closed form of [`gamma_eps`].
pub fn gamma_eps_closed_form<T: Scalar>(u: T, alpha: Alpha<T>, epsilon: T) -> T {
    let a = alpha.value();
    let r = u.abs() + epsilon;
    a / (a + T::one()) * (r.powf(a + T::one()) - epsilon.powf(a + T::one()))
        - epsilon * (r.powf(a) - epsilon.powf(a))
}

/// Closed form of [`primitive_b_eps`].
pub fn primitive_b_eps_closed_form<T: Scalar>(u: T, alpha: Alpha<T>, epsilon: T) -> T {
    if u == T::zero() {
        return T::zero();
    }
    let a = alpha.value();
    ((u.abs() + epsilon).powf(a) - epsilon.powf(a)).copysign(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::spow;
    use proptest::prelude::*;

    fn al(a: f64) -> Alpha<f64> {
        Alpha::new(a).unwrap()
    }

    /// Midpoint Riemann sum with `panels` cells; independent of the
    /// adaptive quadrature.
    fn riemann(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn h_delta_trivial_cases() {
        assert_eq!(h_delta(1.3, 1.3, al(0.5), 0.1).unwrap(), 0.0);
        assert_eq!(h_delta(-1.0, 0.5, al(2.0), 0.1).unwrap(), 0.0);
        assert_eq!(hat_h_delta(0.7, 0.7, al(0.5), 0.1).unwrap(), 0.0);
        assert_eq!(hat_h_delta(2.0, 0.5, al(2.0), 0.1).unwrap(), 0.0);
        assert!(h_delta(1.0, 0.0, al(1.0), 0.0).is_err());
    }

    #[test]
    fn h_delta_matches_riemann_oracle() {
        // z=2, z0=0, α=1, δ=0.1: ∫_0^2 ℌ_δ(s) ds = 2 − δ/2
        let got = h_delta(2.0, 0.0, al(1.0), 0.1).unwrap();
        let oracle = riemann(|s| ramp(s, 0.1), 0.0, 2.0, 1_000_000);
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
        assert!((0.0..=2.0).contains(&got));
        // shrinking δ approaches the limit 2
        let small = h_delta(2.0, 0.0, al(1.0), 1e-4).unwrap();
        assert!((small - 2.0).abs() < 1e-4);
    }

    #[test]
    fn hat_h_delta_matches_riemann_oracle() {
        let got = hat_h_delta(0.0, 2.0, al(1.0), 0.1).unwrap();
        let oracle = riemann(|s| ramp(2.0 - s, 0.1), 0.0, 2.0, 1_000_000);
        assert!((got - oracle).abs() < 1e-9);
        assert!((0.0..=2.0).contains(&got));
    }

    #[test]
    fn h_delta_singular_weight_matches_oracle() {
        // α = 0.5, interval crossing the singular point 0
        let (z, z0, d) = (1.5, -0.2, 0.5);
        let got = h_delta(z, z0, al(0.5), d).unwrap();
        let oracle = riemann(|s| ramp(s - z0, d) * 0.5 * s.abs().powf(-0.5), z0, z, 4_000_000);
        assert!((got - oracle).abs() < 2e-4, "{got} vs {oracle}");
    }

    #[test]
    fn gamma_and_b_primitives_match_closed_forms() {
        for &a in &[0.25, 0.5, 1.0, 2.0, 3.0] {
            for &eps in &[0.1, 1e-3] {
                for &u in &[-2.0, -0.3, 0.0, 0.01, 1.7] {
                    let g = gamma_eps(u, al(a), eps).unwrap();
                    let gc = gamma_eps_closed_form(u, al(a), eps);
                    assert!((g - gc).abs() < 1e-10, "Γ a={a} eps={eps} u={u}: {g} vs {gc}");
                    let b = primitive_b_eps(u, al(a), eps).unwrap();
                    let bc = primitive_b_eps_closed_form(u, al(a), eps);
                    assert!((b - bc).abs() < 1e-10, "B a={a} eps={eps} u={u}: {b} vs {bc}");
                }
            }
        }
    }

    #[test]
    fn eps_variant_tends_to_plain_as_eps_vanishes() {
        let plain = h_delta(1.2, 0.3, al(2.0), 0.2).unwrap();
        let reg = h_delta_eps(1.2, 0.3, al(2.0), 0.2, 1e-9, false).unwrap();
        assert!((plain - reg).abs() < 1e-6);
        let plain_hat = hat_h_delta(0.3, 1.2, al(2.0), 0.2).unwrap();
        let reg_hat = h_delta_eps(0.3, 1.2, al(2.0), 0.2, 1e-9, true).unwrap();
        assert!((plain_hat - reg_hat).abs() < 1e-6);
    }

    fn upper(z: f64, z0: f64, a: f64) -> f64 {
        (spow(z, a).unwrap() - spow(z0, a).unwrap()).max(0.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn h_delta_bounds_and_monotone_in_delta(
            z in -3.0f64..3.0, z0 in -3.0f64..3.0, a in 0.25f64..3.0, d in 0.01f64..1.0
        ) {
            let tol = 1e-9;
            let h = h_delta(z, z0, al(a), d).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= upper(z, z0, a) + tol);
            let h_half = h_delta(z, z0, al(a), d / 2.0).unwrap();
            prop_assert!(h_half >= h - tol);
        }

        #[test]
        fn hat_h_delta_bounds_and_reflection(
            z in -3.0f64..3.0, z0 in -3.0f64..3.0, a in 0.25f64..3.0, d in 0.01f64..1.0
        ) {
            let tol = 1e-9;
            let h = hat_h_delta(z, z0, al(a), d).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= upper(z0, z, a) + tol);
            let mirrored = h_delta(-z, -z0, al(a), d).unwrap();
            prop_assert!((h - mirrored).abs() < tol);
        }
    }
}
