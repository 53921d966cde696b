//! Exponential time mollification of sampled signals.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Scalar samples on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidParameter("empty time series".into()));
        }
        if times[0] < T::zero() {
            return Err(Error::InvalidParameter("times must lie in [0, T]".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "times must be strictly increasing".into(),
            ));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("time series".into()));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` on `count` uniform points of `[0, horizon]`.
    pub fn sample(horizon: T, count: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        let step = horizon / T::of_usize(count - 1);
        let times: Vec<T> = (0..count).map(|k| step * T::of_usize(k)).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Trapezoid-weighted discrete `Lᵖ(0,T)` norm of the samples.
    pub fn lp_norm(&self, p: T) -> T {
        let n = self.len();
        if n == 1 {
            return self.values[0].abs();
        }
        let half = T::lit(0.5);
        let mut acc = T::zero();
        for k in 0..n {
            let left = if k > 0 { self.times[k] - self.times[k - 1] } else { T::zero() };
            let right = if k + 1 < n { self.times[k + 1] - self.times[k] } else { T::zero() };
            acc = acc + half * (left + right) * self.values[k].abs().powf(p);
        }
        acc.powf(T::one() / p)
    }
}

/// Exponential mollification `v_h(t) = (1/h)∫₀ᵗ e^{(s−t)/h} v(s) ds`, or its
/// reversed counterpart `(1/h)∫ₜᵀ e^{(t−s)/h} v(s) ds` when `reversed`.
///
/// `v` is reconstructed piecewise linearly between samples and the
/// convolution is advanced by the exact exponential update on each segment,
/// so the result is exact for the reconstruction at every grid point. The
/// first sample is the origin of integration.
pub fn exp_mollify<T: Scalar>(v: &TimeSeries<T>, h: T, reversed: bool) -> Result<TimeSeries<T>> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mollification parameter must be positive, got {h}"
        )));
    }
    let n = v.len();
    let mut out = vec![T::zero(); n];
    let advance = |prev: T, start: T, end: T, dt: T| -> T {
        // (1/h)∫₀^Δ e^{(s−Δ)/h} [start + (end−start)s/Δ] ds
        let decay = (-dt / h).exp();
        let one_minus = -(-dt / h).exp_m1();
        decay * prev + end - decay * start - (end - start) * (h / dt) * one_minus
    };
    if reversed {
        for k in (0..n - 1).rev() {
            let dt = v.times[k + 1] - v.times[k];
            out[k] = advance(out[k + 1], v.values[k + 1], v.values[k], dt);
        }
    } else {
        for k in 1..n {
            let dt = v.times[k] - v.times[k - 1];
            out[k] = advance(out[k - 1], v.values[k - 1], v.values[k], dt);
        }
    }
    TimeSeries::new(v.times.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_closed_forms() {
        let c = 1.7;
        let h: f64 = 0.05;
        let v = TimeSeries::sample(1.0, 1001, |_| c).unwrap();
        let fwd = exp_mollify(&v, h, false).unwrap();
        let rev = exp_mollify(&v, h, true).unwrap();
        for (k, &t) in v.times().iter().enumerate() {
            let exact_fwd = c * (1.0 - (-t / h).exp());
            let exact_rev = c * (1.0 - ((t - 1.0) / h).exp());
            assert!((fwd.values()[k] - exact_fwd).abs() < 1e-12);
            assert!((rev.values()[k] - exact_rev).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_input_is_exact() {
        // v(t) = t: v_h(t) = t − h(1 − e^{−t/h})
        let h: f64 = 0.1;
        let v = TimeSeries::sample(2.0, 37, |t| t).unwrap();
        let m = exp_mollify(&v, h, false).unwrap();
        for (k, &t) in v.times().iter().enumerate() {
            let exact = t - h * (1.0 - (-t / h).exp());
            assert!((m.values()[k] - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn converges_to_signal_as_h_vanishes() {
        // error at t = 1 for v(t) = t is h(1 − e^{−1/h}) ≈ h
        let v = TimeSeries::sample(1.0f64, 2001, |t| t).unwrap();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let m = exp_mollify(&v, h, false).unwrap();
                (*m.values().last().unwrap() - 1.0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 1.0).abs() < 0.05, "rate {rate}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let v = TimeSeries::sample(1.0, 5, |t| t).unwrap();
        assert!(exp_mollify(&v, 0.0, false).is_err());
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![-1.0, 1.0], vec![1.0, 1.0]).is_err());
    }
}
