//! Implicit time integration of `F(ξ,t) ξ' + K + G = J`.
//!
//! Each step solves `R(y) = F(y,t⁺)(a₀y + a₁ξₙ + a₂ξₙ₋₁) + dt (K + G − J)(y,t⁺) = 0`
//! by damped Newton iteration. Implicit Euler uses `(a₀,a₁,a₂) = (1,−1,0)`;
//! the variable-step BDF2 option uses
//! `((1+2ω)/(1+ω), −(1+ω), ω²/(1+ω))` with `ω = dtₙ/dtₙ₋₁`. The Jacobian is
//! `a₀F(y)` plus `dt` times a forward difference of `K + G` with step
//! `1e-6·(1 + |y_k|)`. A step whose Newton iteration fails is redone as two
//! implicit Euler half steps, recursively, until the step falls below
//! `dt_min`.

use rayon::prelude::*;

use crate::assembly::{Assembler, GalerkinState, NodeData};
use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::scalar::Scalar;

/// Backtracking halvings per Newton iteration.
const MAX_BACKTRACKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    Bdf2,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit-euler",
            Scheme::Bdf2 => "bdf2",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "implicit-euler" | "implicit_euler" | "euler" => Ok(Scheme::ImplicitEuler),
            "bdf2" => Ok(Scheme::Bdf2),
            other => Err(Error::InvalidParameter(format!(
                "unknown time scheme '{other}' (expected implicit-euler or bdf2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig<T> {
    pub dt: T,
    pub newton_tol: T,
    pub newton_max_iters: usize,
    pub dt_min: T,
    pub scheme: Scheme,
}

impl<T: Scalar> StepperConfig<T> {
    pub fn new(dt: T, newton_tol: T, newton_max_iters: usize, dt_min: T) -> Result<Self> {
        let cfg = Self {
            dt,
            newton_tol,
            newton_max_iters,
            dt_min,
            scheme: Scheme::ImplicitEuler,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Tolerance `1e-10`, 30 Newton iterations, `dt_min = dt/1024`.
    pub fn with_dt(dt: T) -> Result<Self> {
        Self::new(dt, T::lit(1e-10), 30, dt / T::lit(1024.0))
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.newton_tol > T::zero()) {
            return Err(Error::InvalidParameter("newton_tol must be positive".into()));
        }
        if !(self.dt_min > T::zero()) || self.dt_min > self.dt {
            return Err(Error::InvalidParameter(format!(
                "dt_min must lie in (0, dt], got {}",
                self.dt_min
            )));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::InvalidParameter("newton_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// One accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub t: T,
    pub xi: Vec<T>,
    pub newton_iters: usize,
    pub residual: T,
    /// Number of half-step retries needed to reach `t`.
    pub halvings: usize,
}

/// Coefficients on the time grid together with the step log.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration<T> {
    pub times: Vec<T>,
    pub coefficients: Vec<Vec<T>>,
    pub records: Vec<StepRecord<T>>,
}

impl<T: Scalar> Integration<T> {
    /// CSV rows `t,residual,newton_iters,halvings` for the step log.
    pub fn log_rows(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| format!("{},{},{},{}", r.t, r.residual, r.newton_iters, r.halvings))
            .collect()
    }
}

/// The uniform grid `0, dt, 2dt, …, T` (last step possibly shorter).
pub fn time_grid<T: Scalar>(horizon: T, dt: T) -> Vec<T> {
    let ratio = (horizon / dt).to_f64_lossy();
    let steps = ((ratio - 1e-9).ceil() as usize).max(1);
    let mut times: Vec<T> = (0..steps).map(|k| dt * T::of_usize(k)).collect();
    times.push(horizon);
    times
}

/// Newton iterate with its residual, mass matrix, rate vector and norm.
type Candidate<T> = (Vec<T>, Vec<T>, Matrix<T>, Vec<T>, T);

struct Newton<T> {
    y: Vec<T>,
    iters: usize,
    residual: T,
}

struct Stepper<'a, 'b, T> {
    asm: &'b Assembler<'a, T>,
    config: &'b StepperConfig<T>,
    epsilon: T,
}

impl<T: Scalar> Stepper<'_, '_, T> {
    /// `F(y)·(a₀y + Σ aⱼ histⱼ) + dt (K + G − J)`.
    fn residual(
        &self,
        y: &[T],
        data: &NodeData<T>,
        j: &[T],
        coeffs: &[T],
        history: &[&[T]],
        dt: T,
    ) -> Result<(Vec<T>, Matrix<T>, Vec<T>)> {
        let fields = self.asm.fields(y, data);
        let mass = self.asm.mass(&fields, self.epsilon);
        let load = self.asm.nonlinear_load_from(&fields, data, self.epsilon)?;
        let n = y.len();
        let rate: Vec<T> = (0..n)
            .map(|k| {
                history
                    .iter()
                    .zip(&coeffs[1..])
                    .fold(coeffs[0] * y[k], |acc, (h, &c)| acc + c * h[k])
            })
            .collect();
        let mut r = mass.mul_vec(&rate);
        for k in 0..n {
            r[k] = r[k] + dt * (load[k] - j[k]);
        }
        Ok((r, mass, rate))
    }

    fn jacobian(
        &self,
        y: &[T],
        data: &NodeData<T>,
        mass: &Matrix<T>,
        rate: &[T],
        a0: T,
        dt: T,
    ) -> Result<Matrix<T>> {
        let n = y.len();
        let fields = self.asm.fields(y, data);
        let dmass = self.asm.mass_derivative(&fields, self.epsilon, rate);
        let base = self.asm.nonlinear_load_from(&fields, data, self.epsilon)?;
        let columns: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let h = T::lit(1e-6) * (T::one() + y[k].abs());
                let shifted = self.asm.perturb(&fields, k, h);
                let load = self.asm.nonlinear_load_from(&shifted, data, self.epsilon)?;
                Ok((0..n).map(|m| (load[m] - base[m]) / h).collect())
            })
            .collect::<Result<_>>()?;
        Ok(Matrix::from_fn(n, |m, k| {
            a0 * mass[(m, k)] + dmass[(m, k)] + dt * columns[k][m]
        }))
    }

    /// Newton solve for one implicit step ending at `t_new`.
    fn solve(
        &self,
        guesses: &[&[T]],
        t_new: T,
        coeffs: &[T],
        history: &[&[T]],
        dt: T,
    ) -> Result<Option<Newton<T>>> {
        let data = self.asm.node_data(t_new)?;
        let j = self.asm.source_load(&data);
        let target = self.config.newton_tol * (T::one() + norm2(&j));

        let mut best: Option<Candidate<T>> = None;
        for g in guesses {
            let (r, mass, rate) = match self.residual(g, &data, &j, coeffs, history, dt) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let norm = norm2(&r);
            if norm.is_finite() && best.as_ref().is_none_or(|b| norm < b.4) {
                best = Some((g.to_vec(), r, mass, rate, norm));
            }
        }
        let Some((mut y, mut r, mut mass, mut rate, mut norm)) = best else {
            return Ok(None);
        };

        for iter in 0..=self.config.newton_max_iters {
            if norm <= target {
                return Ok(Some(Newton {
                    y,
                    iters: iter,
                    residual: norm,
                }));
            }
            if iter == self.config.newton_max_iters {
                break;
            }
            let jac = match self.jacobian(&y, &data, &mass, &rate, coeffs[0], dt) {
                Ok(jac) => jac,
                Err(_) => return Ok(None),
            };
            let delta = match jac.lu() {
                Ok(lu) => lu.solve(&r),
                Err(_) => return Ok(None),
            };
            let mut scale = T::one();
            let mut accepted = None;
            for _ in 0..=MAX_BACKTRACKS {
                let trial: Vec<T> = y.iter().zip(&delta).map(|(&a, &d)| a - scale * d).collect();
                if let Ok((rt, mt, at)) = self.residual(&trial, &data, &j, coeffs, history, dt) {
                    let nt = norm2(&rt);
                    if nt.is_finite() && nt < norm {
                        accepted = Some((trial, rt, mt, at, nt));
                        break;
                    }
                }
                scale = scale * T::lit(0.5);
            }
            match accepted {
                Some((yt, rt, mt, at, nt)) => {
                    y = yt;
                    r = rt;
                    mass = mt;
                    rate = at;
                    norm = nt;
                }
                None => return Ok(None),
            }
        }
        Ok(None)
    }

    /// Implicit Euler from `(xi, t)` to `t_end`, halving on failure.
    fn euler_to(&self, xi: &[T], t: T, t_end: T, guess: Option<&[T]>) -> Result<(Vec<T>, usize, T, usize)> {
        let dt = t_end - t;
        let one = [T::one(), -T::one()];
        let mut guesses: Vec<&[T]> = vec![xi];
        if let Some(g) = guess {
            guesses.push(g);
        }
        if let Some(sol) = self.solve(&guesses, t_end, &one, &[xi], dt)? {
            return Ok((sol.y, sol.iters, sol.residual, 0));
        }
        let half = dt * T::lit(0.5);
        if half < self.config.dt_min {
            let data = self.asm.node_data(t_end)?;
            let j = self.asm.source_load(&data);
            let residual = self
                .residual(xi, &data, &j, &one, &[xi], dt)
                .map(|(r, _, _)| norm2(&r).to_f64_lossy())
                .unwrap_or(f64::NAN);
            return Err(Error::StepFailed {
                t: t.to_f64_lossy(),
                dt_min: self.config.dt_min.to_f64_lossy(),
                residual,
            });
        }
        let mid = t + half;
        let (y1, i1, _, h1) = self.euler_to(xi, t, mid, None)?;
        let (y2, i2, r2, h2) = self.euler_to(&y1, mid, t_end, guess)?;
        Ok((y2, i1 + i2, r2, 1 + h1 + h2))
    }
}

/// Advances one implicit Euler step of size `dt` from `state`, retrying with
/// halved steps down to `config.dt_min`.
pub fn step<T: Scalar>(
    asm: &Assembler<'_, T>,
    state: &GalerkinState<T>,
    dt: T,
    config: &StepperConfig<T>,
) -> Result<(GalerkinState<T>, StepRecord<T>)> {
    config.validate()?;
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let stepper = Stepper {
        asm,
        config,
        epsilon: state.epsilon,
    };
    let t_new = state.t + dt;
    let (xi, iters, residual, halvings) = stepper.euler_to(&state.xi, state.t, t_new, None)?;
    let record = StepRecord {
        t: t_new,
        xi: xi.clone(),
        newton_iters: iters,
        residual,
        halvings,
    };
    Ok((GalerkinState::new(xi, t_new, state.epsilon)?, record))
}

/// Integrates from `initial` at `t = 0` to the problem horizon on the
/// uniform grid of step `config.dt`. `warm_start`, when given, supplies an
/// extra Newton starting point per grid time (same grid).
pub fn integrate<T: Scalar>(
    asm: &Assembler<'_, T>,
    config: &StepperConfig<T>,
    epsilon: T,
    initial: Vec<T>,
    warm_start: Option<&[Vec<T>]>,
) -> Result<Integration<T>> {
    config.validate()?;
    GalerkinState::new(initial.clone(), T::zero(), epsilon)?;
    if initial.len() != asm.modes() {
        return Err(Error::InvalidParameter(format!(
            "{} initial coefficients for {} modes",
            initial.len(),
            asm.modes()
        )));
    }
    let times = time_grid(asm.problem().horizon(), config.dt);
    let warm = warm_start.filter(|w| w.len() == times.len());
    let stepper = Stepper {
        asm,
        config,
        epsilon,
    };
    let mut coefficients = vec![initial];
    let mut records = Vec::with_capacity(times.len() - 1);
    for k in 1..times.len() {
        let (t0, t1) = (times[k - 1], times[k]);
        let dt = t1 - t0;
        let prev = &coefficients[k - 1];
        let guess = warm.map(|w| w[k].as_slice());
        let bdf = config.scheme == Scheme::Bdf2 && k >= 2;
        let solved = if bdf {
            let older = &coefficients[k - 2];
            let omega = dt / (t0 - times[k - 2]);
            let one = T::one();
            let coeffs = [
                (one + omega + omega) / (one + omega),
                -(one + omega),
                omega * omega / (one + omega),
            ];
            // Extrapolated predictor alongside the previous value.
            let predictor: Vec<T> = prev
                .iter()
                .zip(older)
                .map(|(&a, &b)| a + omega * (a - b))
                .collect();
            let mut guesses: Vec<&[T]> = vec![prev, &predictor];
            if let Some(g) = guess {
                guesses.push(g);
            }
            stepper
                .solve(&guesses, t1, &coeffs, &[prev, older], dt)?
                .map(|s| (s.y, s.iters, s.residual, 0))
        } else {
            None
        };
        let (xi, iters, residual, halvings) = match solved {
            Some(v) => v,
            None => stepper.euler_to(prev, t0, t1, guess)?,
        };
        records.push(StepRecord {
            t: t1,
            xi: xi.clone(),
            newton_iters: iters,
            residual,
            halvings,
        });
        coefficients.push(xi);
    }
    Ok(Integration {
        times,
        coefficients,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{Discretization, Exponents, FieldSpec, ProblemData};
    use crate::basis::{BoxDomain, GalerkinBasis};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn heat(m: usize, horizon: f64, source: f64) -> (ProblemData<f64>, Discretization<f64>) {
        let d = BoxDomain::unit(1).unwrap();
        let p = ProblemData::new(
            d.clone(),
            horizon,
            Exponents::new(1.0, vec![2.0]).unwrap(),
            FieldSpec::model(&[2.0]),
        )
        .unwrap()
        .with_source(Arc::new(move |_, _| source), true);
        (p, Discretization::new(GalerkinBasis::new(d, m).unwrap(), None).unwrap())
    }

    #[test]
    fn time_grid_covers_horizon() {
        assert_eq!(time_grid(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = time_grid(1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = time_grid(0.1, 1e-3);
        assert_eq!(g.len(), 101);
    }

    #[test]
    fn stationary_system_stays_put() {
        let (p, d) = heat(3, 1.0, 0.0);
        let a = Assembler::new(&p, &d).unwrap();
        let cfg = StepperConfig::with_dt(0.1).unwrap();
        let s = GalerkinState::new(vec![0.0; 3], 0.0, 0.1).unwrap();
        let (next, rec) = step(&a, &s, 0.1, &cfg).unwrap();
        assert_eq!(next.xi, vec![0.0; 3]);
        assert_eq!(rec.newton_iters, 0);
    }

    #[test]
    fn heat_step_matches_scalar_formula() {
        let (p, d) = heat(4, 1.0, 1.0);
        let a = Assembler::new(&p, &d).unwrap();
        let cfg = StepperConfig::with_dt(0.01).unwrap();
        let j = a.assemble_j(0.0).unwrap();
        let xi0 = vec![0.7, -0.2, 0.05, 0.3];
        let mut state = GalerkinState::new(xi0.clone(), 0.0, 0.1).unwrap();
        let mut expected = xi0;
        for _ in 0..5 {
            let (next, rec) = step(&a, &state, 0.01, &cfg).unwrap();
            for k in 0..4 {
                let lam = ((k + 1) as f64 * PI).powi(2);
                expected[k] = (expected[k] + 0.01 * j[k]) / (1.0 + 0.01 * lam);
                assert!((next.xi[k] - expected[k]).abs() < 1e-10);
            }
            assert!(rec.residual <= 1e-10 * (1.0 + norm2(&j)));
            state = next;
        }
    }

    #[test]
    fn heat_integration_converges_at_first_order() {
        let err = |dt: f64| {
            let (p, d) = heat(1, 0.1, 0.0);
            let a = Assembler::new(&p, &d).unwrap();
            let cfg = StepperConfig::with_dt(dt).unwrap();
            let run = integrate(&a, &cfg, 0.1, vec![1.0], None).unwrap();
            (run.coefficients.last().unwrap()[0] - (-PI * PI * 0.1).exp()).abs()
        };
        let (e1, e2) = (err(2e-3), err(1e-3));
        let order = (e1 / e2).log2();
        assert!((0.9..1.2).contains(&order), "order {order}");
    }

    #[test]
    fn bdf2_converges_at_second_order() {
        let err = |dt: f64| {
            let (p, d) = heat(1, 0.1, 0.0);
            let a = Assembler::new(&p, &d).unwrap();
            let cfg = StepperConfig::with_dt(dt).unwrap().scheme(Scheme::Bdf2);
            let run = integrate(&a, &cfg, 0.1, vec![1.0], None).unwrap();
            (run.coefficients.last().unwrap()[0] - (-PI * PI * 0.1).exp()).abs()
        };
        let (e1, e2) = (err(2e-3), err(1e-3));
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn nonlinear_model_step_is_accepted() {
        let d = BoxDomain::unit(2).unwrap();
        let p = ProblemData::new(
            d.clone(),
            0.02,
            Exponents::new(0.5, vec![1.8, 2.4]).unwrap(),
            FieldSpec::model(&[1.8, 2.4]),
        )
        .unwrap()
        .with_source(Arc::new(|x, _| x[0]), true);
        let disc = Discretization::new(GalerkinBasis::new(d, 3).unwrap(), None).unwrap();
        let a = Assembler::new(&p, &disc).unwrap();
        let cfg = StepperConfig::with_dt(1e-3).unwrap();
        let xi0: Vec<f64> = (0..9).map(|k| 0.2 * ((k + 1) as f64).sin()).collect();
        let run = integrate(&a, &cfg, 1e-2, xi0, None).unwrap();
        let j = a.assemble_j(0.0).unwrap();
        for rec in &run.records {
            assert!(rec.residual <= 1e-10 * (1.0 + norm2(&j)));
            assert!(rec.xi.iter().all(|v| v.is_finite()));
        }
        assert_eq!(run.times.len(), 21);
    }

    #[test]
    fn failure_reports_step_failed() {
        let (p, d) = heat(2, 1.0, 0.0);
        let a = Assembler::new(&p, &d).unwrap();
        let mut cfg = StepperConfig::new(0.1, 1e-300, 1, 0.05).unwrap();
        cfg.newton_tol = 1e-300;
        let s = GalerkinState::new(vec![1.0, 1.0], 0.0, 0.1).unwrap();
        let err = step(&a, &s, 0.1, &cfg).unwrap_err();
        assert!(matches!(err, Error::StepFailed { .. }), "{err:?}");
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::new(0.0, 1e-8, 10, 0.0).is_err());
        assert!(StepperConfig::new(0.1, 1e-8, 10, 0.2).is_err());
        assert!(StepperConfig::new(0.1, 0.0, 10, 0.01).is_err());
        assert_eq!(Scheme::parse("bdf2").unwrap(), Scheme::Bdf2);
        assert!(Scheme::parse("rk4").is_err());
    }
}
