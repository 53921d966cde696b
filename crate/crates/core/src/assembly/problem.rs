//! Problem data of the Cauchy–Dirichlet problem and the Galerkin state.

use std::sync::Arc;

use super::field::{constant_space, constant_space_time, FieldSpec, SpaceFn, SpaceTimeFn};
use crate::algebra::Alpha;
use crate::basis::{BoxDomain, GalerkinBasis, ModeTable, Quadrature};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gradient of a space-time function, written into the output slice.
pub type GradFn<T> = Arc<dyn Fn(&[T], T, &mut [T]) + Send + Sync>;

/// The exponent pair `(α, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exponents<T> {
    alpha: Alpha<T>,
    p: Vec<T>,
}

impl<T: Scalar> Exponents<T> {
    pub fn new(alpha: T, p: Vec<T>) -> Result<Self> {
        let alpha = Alpha::new(alpha)?;
        if p.is_empty() {
            return Err(Error::InvalidParameter("p must have one entry per dimension".into()));
        }
        if let Some(bad) = p.iter().find(|&&pi| !(pi > T::one()) || !pi.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {bad}")));
        }
        Ok(Self { alpha, p })
    }

    pub fn alpha(&self) -> Alpha<T> {
        self.alpha
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }
}

/// Boundary lift `g` with its time derivative and spatial gradient.
#[derive(Clone)]
pub struct BoundaryLift<T> {
    value: SpaceTimeFn<T>,
    time_derivative: SpaceTimeFn<T>,
    gradient: GradFn<T>,
    zero: bool,
}

impl<T: Scalar> BoundaryLift<T> {
    pub fn zero() -> Self {
        Self {
            value: constant_space_time(T::zero()),
            time_derivative: constant_space_time(T::zero()),
            gradient: Arc::new(|_, _, out: &mut [T]| out.iter_mut().for_each(|o| *o = T::zero())),
            zero: true,
        }
    }

    pub fn new(value: SpaceTimeFn<T>, time_derivative: SpaceTimeFn<T>, gradient: GradFn<T>) -> Self {
        Self {
            value,
            time_derivative,
            gradient,
            zero: false,
        }
    }

    /// Lift whose derivatives are taken by fourth-order central differences
    /// with step `1e-3·(1 + |coordinate|)`.
    pub fn with_numeric_derivatives(value: SpaceTimeFn<T>) -> Self {
        let v = value.clone();
        let time_derivative: SpaceTimeFn<T> =
            Arc::new(move |x: &[T], t: T| central_difference(|s| v(x, s), t));
        let v = value.clone();
        let gradient: GradFn<T> = Arc::new(move |x: &[T], t: T, out: &mut [T]| {
            let mut y = x.to_vec();
            for j in 0..x.len() {
                out[j] = central_difference(
                    |s| {
                        y[j] = s;
                        v(&y, t)
                    },
                    x[j],
                );
                y[j] = x[j];
            }
        });
        Self::new(value, time_derivative, gradient)
    }

    /// `g ≡ 0`, so `K`, `∇g` and the lift terms vanish.
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn value(&self, x: &[T], t: T) -> T {
        (self.value)(x, t)
    }

    pub fn time_derivative(&self, x: &[T], t: T) -> T {
        (self.time_derivative)(x, t)
    }

    pub fn gradient(&self, x: &[T], t: T, out: &mut [T]) {
        (self.gradient)(x, t, out)
    }
}

/// Fourth-order central difference `f'(s)` with step `1e-3·(1+|s|)`.
pub fn central_difference<T: Scalar>(f: impl FnMut(T) -> T, s: T) -> T {
    central_difference_step(f, s, T::lit(1e-3) * (T::one() + s.abs()))
}

/// Fourth-order central difference `f'(s)` with step `h`.
pub fn central_difference_step<T: Scalar>(mut f: impl FnMut(T) -> T, s: T, h: T) -> T {
    let (f1, f_1) = (f(s + h), f(s - h));
    let (f2, f_2) = (f(s + h + h), f(s - h - h));
    (T::lit(8.0) * (f1 - f_1) - (f2 - f_2)) / (T::lit(12.0) * h)
}

/// Data of the Cauchy–Dirichlet problem on a box.
#[derive(Clone)]
pub struct ProblemData<T> {
    domain: BoxDomain<T>,
    horizon: T,
    exponents: Exponents<T>,
    field: FieldSpec<T>,
    initial: SpaceFn<T>,
    lift: BoundaryLift<T>,
    source: SpaceTimeFn<T>,
    source_time_independent: bool,
}

impl<T: Scalar> std::fmt::Debug for ProblemData<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("domain", &self.domain)
            .field("horizon", &self.horizon)
            .field("exponents", &self.exponents)
            .field("field", &self.field)
            .field("zero_lift", &self.lift.is_zero())
            .finish()
    }
}

impl<T: Scalar> ProblemData<T> {
    /// Problem with `u₀ = 0`, `g = 0`, `f = 0`; see the `with_*` builders.
    pub fn new(
        domain: BoxDomain<T>,
        horizon: T,
        exponents: Exponents<T>,
        field: FieldSpec<T>,
    ) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if exponents.p().len() != domain.dim() {
            return Err(Error::InvalidParameter(format!(
                "{} exponents p for a {}-dimensional domain",
                exponents.p().len(),
                domain.dim()
            )));
        }
        if field.dim() != domain.dim() {
            return Err(Error::InvalidParameter(format!(
                "field has {} components for a {}-dimensional domain",
                field.dim(),
                domain.dim()
            )));
        }
        Ok(Self {
            domain,
            horizon,
            exponents,
            field,
            initial: constant_space(T::zero()),
            lift: BoundaryLift::zero(),
            source: constant_space_time(T::zero()),
            source_time_independent: true,
        })
    }

    pub fn with_initial(mut self, u0: SpaceFn<T>) -> Self {
        self.initial = u0;
        self
    }

    pub fn with_lift(mut self, g: BoundaryLift<T>) -> Self {
        self.lift = g;
        self
    }

    /// Right-hand side `f(x,t)`; `time_independent` records whether it
    /// ignores `t`.
    pub fn with_source(mut self, f: SpaceTimeFn<T>, time_independent: bool) -> Self {
        self.source = f;
        self.source_time_independent = time_independent;
        self
    }

    pub fn with_field(mut self, field: FieldSpec<T>) -> Result<Self> {
        if field.dim() != self.domain.dim() {
            return Err(Error::InvalidParameter("field dimension mismatch".into()));
        }
        self.field = field;
        Ok(self)
    }

    pub fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn exponents(&self) -> &Exponents<T> {
        &self.exponents
    }

    pub fn alpha(&self) -> T {
        self.exponents.alpha().value()
    }

    pub fn field(&self) -> &FieldSpec<T> {
        &self.field
    }

    pub fn lift(&self) -> &BoundaryLift<T> {
        &self.lift
    }

    pub fn initial(&self, x: &[T]) -> T {
        (self.initial)(x)
    }

    pub fn source(&self, x: &[T], t: T) -> T {
        (self.source)(x, t)
    }

    pub fn source_is_time_independent(&self) -> bool {
        self.source_time_independent
    }

    /// Checks that `u₀`, `g`, `∂_t g`, `∇g` and `f` are finite on every node
    /// of `quad` at `samples` uniformly spaced times.
    pub fn validate_on(&self, quad: &Quadrature<T>, samples: usize) -> Result<()> {
        let dim = self.domain.dim();
        let mut grad = vec![T::zero(); dim];
        let samples = samples.max(2);
        for q in 0..quad.len() {
            let x = quad.node(q);
            let bad = |what: &str| {
                Error::NonFinite(format!(
                    "{what} at x = {:?}",
                    x.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>()
                ))
            };
            if !self.initial(x).is_finite() {
                return Err(bad("u0"));
            }
            for s in 0..samples {
                let t = self.horizon * T::of_usize(s) / T::of_usize(samples - 1);
                if !self.lift.value(x, t).is_finite() {
                    return Err(bad("g"));
                }
                if !self.lift.time_derivative(x, t).is_finite() {
                    return Err(bad("dg/dt"));
                }
                self.lift.gradient(x, t, &mut grad);
                if grad.iter().any(|g| !g.is_finite()) {
                    return Err(bad("grad g"));
                }
                if !self.source(x, t).is_finite() {
                    return Err(bad("f"));
                }
            }
        }
        Ok(())
    }
}

/// Coefficients `ξ` at time `t` with regularization `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState<T> {
    pub xi: Vec<T>,
    pub t: T,
    pub epsilon: T,
}

impl<T: Scalar> GalerkinState<T> {
    pub fn new(xi: Vec<T>, t: T, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !t.is_finite() || xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Galerkin state".into()));
        }
        Ok(Self { xi, t, epsilon })
    }
}

/// Basis, quadrature and the tabulated modes at the quadrature nodes.
#[derive(Debug, Clone)]
pub struct Discretization<T> {
    basis: GalerkinBasis<T>,
    quad: Quadrature<T>,
    table: ModeTable<T>,
}

impl<T: Scalar> Discretization<T> {
    /// `quad_order = None` uses the basis default.
    pub fn new(basis: GalerkinBasis<T>, quad_order: Option<usize>) -> Result<Self> {
        let order = quad_order.unwrap_or_else(|| basis.default_quadrature_order());
        let quad = Quadrature::tensor(basis.domain(), order)?;
        let table = ModeTable::new(&basis, &quad);
        Ok(Self { basis, quad, table })
    }

    pub fn basis(&self) -> &GalerkinBasis<T> {
        &self.basis
    }

    pub fn quadrature(&self) -> &Quadrature<T> {
        &self.quad
    }

    pub fn table(&self) -> &ModeTable<T> {
        &self.table
    }

    pub fn modes(&self) -> usize {
        self.basis.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_reject_p_at_one() {
        let err = Exponents::new(1.0, vec![2.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("p must exceed 1"));
        assert!(Exponents::new(0.0, vec![2.0]).is_err());
        assert!(Exponents::new(0.5, vec![1.8, 2.4]).is_ok());
    }

    #[test]
    fn numeric_lift_derivatives() {
        let g = BoundaryLift::with_numeric_derivatives(Arc::new(|x: &[f64], t: f64| {
            (x[0] * 2.0).sin() * x[1] * x[1] * (1.0 + t * t)
        }));
        let (x, t) = ([0.3, 0.7], 0.4);
        let mut grad = [0.0; 2];
        g.gradient(&x, t, &mut grad);
        let s = 1.0 + t * t;
        assert!((grad[0] - 2.0 * (0.6f64).cos() * 0.49 * s).abs() < 1e-10);
        assert!((grad[1] - (0.6f64).sin() * 1.4 * s).abs() < 1e-10);
        let dt = g.time_derivative(&x, t);
        assert!((dt - (0.6f64).sin() * 0.49 * 2.0 * t).abs() < 1e-10);
    }

    #[test]
    fn problem_dimension_checks() {
        let d = BoxDomain::unit(2).unwrap();
        let e1 = Exponents::new(1.0, vec![2.0]).unwrap();
        assert!(ProblemData::new(d.clone(), 1.0, e1, FieldSpec::model(&[2.0, 2.0])).is_err());
        let e2 = Exponents::new(1.0, vec![2.0, 2.0]).unwrap();
        assert!(ProblemData::new(d.clone(), 1.0, e2.clone(), FieldSpec::model(&[2.0])).is_err());
        assert!(ProblemData::new(d.clone(), 0.0, e2.clone(), FieldSpec::model(&[2.0, 2.0])).is_err());
        assert!(ProblemData::new(d, 1.0, e2, FieldSpec::model(&[2.0, 2.0])).is_ok());
    }

    #[test]
    fn validation_flags_singular_data() {
        let d = BoxDomain::unit(1).unwrap();
        let p = ProblemData::new(d, 1.0, Exponents::new(1.0, vec![2.0]).unwrap(), FieldSpec::model(&[2.0]))
            .unwrap()
            .with_source(Arc::new(|x: &[f64], t: f64| 1.0 / (x[0] - 0.5) / t), false);
        let q = Quadrature::tensor(p.domain(), 4).unwrap();
        assert!(p.validate_on(&q, 3).is_err());
    }

    #[test]
    fn state_requires_positive_epsilon() {
        assert!(GalerkinState::new(vec![0.0], 0.0, 0.0).is_err());
        assert!(GalerkinState::new(vec![f64::NAN], 0.0, 0.1).is_err());
        assert!(GalerkinState::new(vec![1.0], 0.0, 0.1).is_ok());
    }
}
