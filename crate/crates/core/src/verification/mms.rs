//! Manufactured solutions: the source that makes a chosen `u` exact, and
//! error norms of a trajectory against it.

use std::sync::Arc;

use crate::algebra::spow_unchecked;
use crate::assembly::{central_difference_step, FieldSpec, ProblemData, SpaceTimeFn};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::{trapezoid, SolutionTrajectory};

/// An exact solution `u(x, t)` differentiated numerically with fourth-order
/// central differences of step `1e-4 · scale`.
#[derive(Clone)]
pub struct ManufacturedSolution<T> {
    exact: SpaceTimeFn<T>,
    step: T,
}

impl<T: Scalar> ManufacturedSolution<T> {
    /// `scale` is the length scale of the problem (box side, horizon).
    pub fn new(exact: SpaceTimeFn<T>, scale: T) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "difference scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            exact,
            step: T::lit(1e-4) * scale,
        })
    }

    pub fn value(&self, x: &[T], t: T) -> T {
        (self.exact)(x, t)
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn gradient(&self, x: &[T], t: T, out: &mut [T]) {
        let mut y = x.to_vec();
        for i in 0..x.len() {
            out[i] = central_difference_step(
                |s| {
                    y[i] = s;
                    (self.exact)(&y, t)
                },
                x[i],
                self.step,
            );
            y[i] = x[i];
        }
    }

    /// `f = ∂_t(|u|^{α−1}u) − ∇·A(x, t, u, ∇u)`.
    pub fn source(&self, field: &FieldSpec<T>, alpha: T) -> SpaceTimeFn<T> {
        let me = self.clone();
        let field = field.clone();
        Arc::new(move |x: &[T], t: T| {
            let dim = x.len();
            let time = central_difference_step(|s| spow_unchecked(me.value(x, s), alpha), t, me.step);
            let mut y = x.to_vec();
            let mut grad = vec![T::zero(); dim];
            let mut flux = vec![T::zero(); dim];
            let mut divergence = T::zero();
            for i in 0..dim {
                divergence = divergence
                    + central_difference_step(
                        |s| {
                            y[i] = s;
                            me.gradient(&y, t, &mut grad);
                            field.eval(&y, t, me.value(&y, t), &grad, &mut flux);
                            flux[i]
                        },
                        x[i],
                        me.step,
                    );
                y[i] = x[i];
            }
            time - divergence
        })
    }

    /// `base` with `u₀ = u(·, 0)` and the manufactured source.
    pub fn problem(&self, base: ProblemData<T>) -> ProblemData<T> {
        let f = self.source(base.field(), base.alpha());
        let exact = self.exact.clone();
        let time_independent = false;
        base.with_initial(Arc::new(move |x: &[T]| exact(x, T::zero())))
            .with_source(f, time_independent)
    }
}

/// Errors of a trajectory against an exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNorms<T> {
    /// `sup_t ‖u − u_exact‖_{L^{α+1}(Ω)}` over the grid.
    pub sup_lp: T,
    /// `‖u − u_exact‖_{L^{α+1}(Ω_T)}`.
    pub space_time_lp: T,
    /// `sup_t ‖u − u_exact‖_{L²(Ω)}` over the grid.
    pub sup_l2: T,
}

/// Error norms by quadrature on the trajectory's nodes and grid times.
pub fn manufactured_error<T: Scalar>(
    traj: &SolutionTrajectory<T>,
    exact: impl Fn(&[T], T) -> T,
) -> Result<ErrorNorms<T>> {
    let ap1 = traj.alpha() + T::one();
    let quad = traj.discretization().quadrature();
    let mut lp = Vec::with_capacity(traj.times().len());
    let mut l2 = Vec::with_capacity(traj.times().len());
    for (k, &t) in traj.times().iter().enumerate() {
        let u = traj.node_values(k)?;
        let (mut a, mut b) = (T::zero(), T::zero());
        for (q, &uq) in u.iter().enumerate() {
            let e = (uq - exact(quad.node(q), t)).abs();
            a = a + quad.weight(q) * e.powf(ap1);
            b = b + quad.weight(q) * e * e;
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFiniteNorm {
                index: k,
                t: t.to_f64_lossy(),
            });
        }
        lp.push(a);
        l2.push(b);
    }
    let inv = T::one() / ap1;
    Ok(ErrorNorms {
        sup_lp: lp.iter().copied().fold(T::zero(), T::max).powf(inv),
        space_time_lp: trapezoid(traj.times(), &lp).powf(inv),
        sup_l2: l2.iter().copied().fold(T::zero(), T::max).sqrt(),
    })
}
