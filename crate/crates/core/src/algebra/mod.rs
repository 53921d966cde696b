//! Scalar algebra behind the scheme: sign-preserving powers, the Bregman gap
//! `b_α`, the cutoff `ℌ_δ` and its integrated quantities, exponential time
//! mollification, and an empirical sweep over the elementary inequalities.

pub mod cutoff;
pub mod integrate;
pub mod mollify;
pub mod sweep;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use cutoff::{
    gamma_eps, gamma_eps_closed_form, h_delta, h_delta_eps, hat_h_delta, primitive_b_eps,
    primitive_b_eps_closed_form,
};
pub use integrate::{integrate, Integral};
pub use mollify::{exp_mollify, TimeSeries};
pub use sweep::{lemma_sweep, LemmaEntry, LemmaKind, LemmaReport};

/// Exponent of the time-derivative nonlinearity `|u|^{α-1}u`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha<T>(T);

impl<T: Scalar> Alpha<T> {
    pub fn new(value: T) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite("alpha".into()));
        }
        if value <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {value}"
            )));
        }
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// `α < 1`: the time weight is singular at `u = 0`.
    #[inline]
    pub fn is_singular(self) -> bool {
        self.0 < T::one()
    }
}

/// `a ↦ |a|^{γ-1} a`, without the finiteness check.
#[inline]
pub fn spow_unchecked<T: Scalar>(a: T, gamma: T) -> T {
    if a == T::zero() {
        T::zero()
    } else {
        a.abs().powf(gamma).copysign(a)
    }
}

/// Sign-preserving power `|a|^{γ-1} a`.
pub fn spow<T: Scalar>(a: T, gamma: T) -> Result<T> {
    if !a.is_finite() || !gamma.is_finite() {
        return Err(Error::NonFinite(format!("spow({a}, {gamma})")));
    }
    if gamma <= T::zero() {
        return Err(Error::InvalidParameter(format!(
            "spow exponent must be positive, got {gamma}"
        )));
    }
    Ok(spow_unchecked(a, gamma))
}

/// `b_α[v,w] = α/(α+1)(|v|^{α+1} − |w|^{α+1}) − w(|v|^{α−1}v − |w|^{α−1}w)`.
pub fn b_alpha<T: Scalar>(v: T, w: T, alpha: Alpha<T>) -> Result<T> {
    if !v.is_finite() || !w.is_finite() {
        return Err(Error::NonFinite(format!("b_alpha({v}, {w})")));
    }
    if v == w {
        return Ok(T::zero());
    }
    Ok(b_alpha_unchecked(v, w, alpha.value()))
}

#[inline]
pub(crate) fn b_alpha_unchecked<T: Scalar>(v: T, w: T, a: T) -> T {
    if v == w {
        return T::zero();
    }
    let ap1 = a + T::one();
    a / ap1 * (v.abs().powf(ap1) - w.abs().powf(ap1))
        - w * (spow_unchecked(v, a) - spow_unchecked(w, a))
}

/// The second closed form, `(|w|^{α+1} − |v|^{α+1})/(α+1) + |v|^{α−1}v (v − w)`.
#[inline]
pub fn b_alpha_convex_form<T: Scalar>(v: T, w: T, alpha: Alpha<T>) -> T {
    let a = alpha.value();
    let ap1 = a + T::one();
    (w.abs().powf(ap1) - v.abs().powf(ap1)) / ap1 + spow_unchecked(v, a) * (v - w)
}

/// Lipschitz ramp: 0 for `s ≤ 0`, `s/δ` on `(0, δ)`, 1 for `s ≥ δ`.
pub fn big_h_delta<T: Scalar>(s: T, delta: T) -> Result<T> {
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if s.is_nan() {
        return Err(Error::NonFinite("H_delta argument".into()));
    }
    Ok(ramp(s, delta))
}

#[inline]
pub(crate) fn ramp<T: Scalar>(s: T, delta: T) -> T {
    if s <= T::zero() {
        T::zero()
    } else if s >= delta {
        T::one()
    } else {
        s / delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn al(a: f64) -> Alpha<f64> {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn spow_examples() {
        assert_eq!(spow(-3.0, 2.0).unwrap(), -9.0);
        assert_eq!(spow(0.0, 0.5).unwrap(), 0.0);
        assert!((spow(4.0f64, 0.5).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spow_rejects_non_finite() {
        assert!(spow(f64::NAN, 2.0).is_err());
        assert!(spow(f64::INFINITY, 2.0).is_err());
        assert!(spow(1.0, 0.0).is_err());
    }

    #[test]
    fn alpha_must_be_positive() {
        assert!(Alpha::new(0.0).is_err());
        assert!(Alpha::new(-1.0).is_err());
        assert!(Alpha::new(f64::NAN).is_err());
    }

    #[test]
    fn b_alpha_examples() {
        for a in [0.3, 1.0, 2.5] {
            assert_eq!(b_alpha(1.7, 1.7, al(a)).unwrap(), 0.0);
        }
        assert!((b_alpha(2.0, 0.0, al(1.0)).unwrap() - 2.0).abs() < 1e-15);
        let first = b_alpha(1.0, 2.0, al(0.5)).unwrap();
        let second = b_alpha_convex_form(1.0, 2.0, al(0.5));
        assert!((first - second).abs() <= 1e-12 * first.abs().max(1.0));
        assert!(first > 0.0);
    }

    #[test]
    fn h_delta_examples() {
        assert_eq!(big_h_delta(-1.0, 0.5).unwrap(), 0.0);
        assert_eq!(big_h_delta(0.25, 0.5).unwrap(), 0.5);
        assert_eq!(big_h_delta(2.0, 0.5).unwrap(), 1.0);
        assert!(big_h_delta(0.1, 0.0).is_err());
        assert!(big_h_delta(0.1, -1.0).is_err());
    }

    fn magnitude() -> impl Strategy<Value = f64> {
        (-12.0f64..12.0, any::<bool>()).prop_map(|(e, neg)| {
            let m = 10f64.powf(e);
            if neg { -m } else { m }
        })
    }

    proptest! {
        #[test]
        fn spow_is_odd_and_invertible(a in magnitude(), g in 0.1f64..5.0) {
            let s = spow(a, g).unwrap();
            prop_assert_eq!(spow(-a, g).unwrap(), -s);
            let back = spow(s, 1.0 / g).unwrap();
            prop_assert!((back - a).abs() <= 1e-12 * a.abs());
        }

        #[test]
        fn spow_is_increasing(a in magnitude(), b in magnitude(), g in 0.1f64..5.0) {
            prop_assume!(a < b);
            prop_assert!(spow(a, g).unwrap() <= spow(b, g).unwrap());
        }

        #[test]
        fn b_alpha_nonnegative_and_forms_agree(
            v in magnitude(), w in magnitude(), a in 0.05f64..4.0
        ) {
            let alpha = al(a);
            let b1 = b_alpha(v, w, alpha).unwrap();
            let b2 = b_alpha_convex_form(v, w, alpha);
            let scale = v.abs().powf(a + 1.0) + w.abs().powf(a + 1.0);
            prop_assert!(b1 >= -1e-12 * scale);
            prop_assert!((b1 - b2).abs() <= 1e-12 * scale);
        }

        #[test]
        fn ramp_is_monotone_and_lipschitz(s1 in -3.0f64..3.0, s2 in -3.0f64..3.0, d in 0.01f64..2.0) {
            let (h1, h2) = (big_h_delta(s1, d).unwrap(), big_h_delta(s2, d).unwrap());
            prop_assert!((0.0..=1.0).contains(&h1));
            if s1 <= s2 { prop_assert!(h1 <= h2); }
            prop_assert!((h1 - h2).abs() <= (s1 - s2).abs() / d + 1e-15);
        }
    }
}
