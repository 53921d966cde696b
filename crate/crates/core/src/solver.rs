//! Problem-level drivers: the regularized Galerkin solve on a box with an
//! ε-continuation, and the expanding-box approximation of the Cauchy
//! problem on the whole space.

use std::sync::Arc;

use crate::assembly::{Assembler, Discretization, ProblemData};
use crate::basis::{BoxDomain, GalerkinBasis};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timestep::{integrate, StepRecord, StepperConfig};

/// Strictly decreasing positive regularization levels `ε₁ > ε₂ > …`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule<T>(Vec<T>);

impl<T: Scalar> EpsilonSchedule<T> {
    pub fn new(levels: Vec<T>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("epsilon schedule is empty".into()));
        }
        if levels.iter().any(|&e| !(e > T::zero()) || !e.is_finite()) {
            return Err(Error::InvalidParameter("epsilon levels must be positive".into()));
        }
        if levels.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter(
                "epsilon levels must be strictly decreasing".into(),
            ));
        }
        Ok(Self(levels))
    }

    pub fn levels(&self) -> &[T] {
        &self.0
    }
}

impl<T: Scalar> Default for EpsilonSchedule<T> {
    /// `10^{-k}`, `k = 1..4`.
    fn default() -> Self {
        Self((1..=4).map(|k| T::lit(10f64.powi(-k))).collect())
    }
}

/// `u(x,t) = g(x,t) + Σ ξ_k(t) v_k(x)` on a time grid.
#[derive(Clone)]
pub struct SolutionTrajectory<T> {
    problem: ProblemData<T>,
    disc: Arc<Discretization<T>>,
    epsilon: T,
    times: Vec<T>,
    coefficients: Vec<Vec<T>>,
    records: Vec<StepRecord<T>>,
}

impl<T: Scalar> std::fmt::Debug for SolutionTrajectory<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionTrajectory")
            .field("epsilon", &self.epsilon)
            .field("steps", &(self.times.len() - 1))
            .field("modes", &self.disc.modes())
            .finish()
    }
}

impl<T: Scalar> SolutionTrajectory<T> {
    pub fn new(
        problem: ProblemData<T>,
        disc: Arc<Discretization<T>>,
        epsilon: T,
        times: Vec<T>,
        coefficients: Vec<Vec<T>>,
        records: Vec<StepRecord<T>>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != coefficients.len() {
            return Err(Error::InvalidParameter(
                "trajectory needs one coefficient row per time".into(),
            ));
        }
        if times[0] != T::zero() || *times.last().unwrap() != problem.horizon() {
            return Err(Error::InvalidParameter("trajectory must span [0, T]".into()));
        }
        if let Some(k) = coefficients
            .iter()
            .position(|row| row.len() != disc.modes() || row.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFiniteNorm {
                index: k,
                t: times[k].to_f64_lossy(),
            });
        }
        Ok(Self {
            problem,
            disc,
            epsilon,
            times,
            coefficients,
            records,
        })
    }

    pub fn problem(&self) -> &ProblemData<T> {
        &self.problem
    }

    pub fn discretization(&self) -> &Discretization<T> {
        &self.disc
    }

    pub fn basis(&self) -> &GalerkinBasis<T> {
        self.disc.basis()
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn alpha(&self) -> T {
        self.problem.alpha()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn coefficients(&self) -> &[Vec<T>] {
        &self.coefficients
    }

    pub fn records(&self) -> &[StepRecord<T>] {
        &self.records
    }

    /// Coefficients at `t`, linearly interpolated between grid times.
    pub fn coefficients_at(&self, t: T) -> Result<Vec<T>> {
        let horizon = self.problem.horizon();
        if !(t >= T::zero() && t <= horizon) {
            return Err(Error::OutOfDomain {
                point: vec![t.to_f64_lossy()],
            });
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len().max(2) - 1);
        if self.times.len() == 1 {
            return Ok(self.coefficients[0].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.coefficients[k - 1]
            .iter()
            .zip(&self.coefficients[k])
            .map(|(&a, &b)| a + w * (b - a))
            .collect())
    }

    /// `u(x, t)`.
    pub fn evaluate(&self, x: &[T], t: T) -> Result<T> {
        let c = self.coefficients_at(t)?;
        let v = self.disc.basis().combine(&c, x)?;
        Ok(self.problem.lift().value(x, t) + v)
    }

    /// `u(x, t)`, or zero when `x` lies outside the box.
    pub fn evaluate_extended(&self, x: &[T], t: T) -> Result<T> {
        if self.problem.domain().contains(x) {
            self.evaluate(x, t)
        } else {
            Ok(T::zero())
        }
    }

    /// `u` at every quadrature node at grid time `k`.
    pub fn node_values(&self, k: usize) -> Result<Vec<T>> {
        let asm = Assembler::new(&self.problem, &self.disc)?;
        let data = asm.node_data(self.times[k])?;
        Ok(asm.fields(&self.coefficients[k], &data).u)
    }

    /// `∫ Φ(u, ∇u) dx` at every grid time.
    pub fn slice_integrals(&self, phi: impl Fn(T, &[T]) -> T) -> Result<Vec<T>> {
        let asm = Assembler::new(&self.problem, &self.disc)?;
        let table = self.disc.table();
        let dim = table.dim();
        let mut out = Vec::with_capacity(self.times.len());
        for (k, c) in self.coefficients.iter().enumerate() {
            let data = asm.node_data(self.times[k])?;
            let fields = asm.fields(c, &data);
            let mut acc = T::zero();
            for q in 0..table.nodes() {
                acc = acc + table.weight(q) * phi(fields.u[q], &fields.grad_u[q * dim..(q + 1) * dim]);
            }
            if !acc.is_finite() {
                return Err(Error::NonFiniteNorm {
                    index: k,
                    t: self.times[k].to_f64_lossy(),
                });
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `∫ |u(·,t)|^{α+1}` at every grid time.
    pub fn power_norms(&self) -> Result<Vec<T>> {
        let ap1 = self.alpha() + T::one();
        self.slice_integrals(|u, _| u.abs().powf(ap1))
    }

    /// Values of `u` on a uniform lattice (`per_dim` points per side,
    /// boundary included) at every `every`-th grid time and at `T`.
    pub fn lattice_values(&self, per_dim: usize, every: usize) -> Result<LatticeSnapshot<T>> {
        let points = self.problem.domain().lattice(per_dim);
        let every = every.max(1);
        let mut indices: Vec<usize> = (0..self.times.len()).step_by(every).collect();
        if *indices.last().unwrap() != self.times.len() - 1 {
            indices.push(self.times.len() - 1);
        }
        let basis = self.disc.basis();
        let tables: Vec<Vec<T>> = points
            .iter()
            .map(|p| basis.eval_modes(p))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(indices.len());
        for &k in &indices {
            let t = self.times[k];
            let c = &self.coefficients[k];
            let row: Vec<T> = points
                .iter()
                .zip(&tables)
                .map(|(p, v)| {
                    self.problem.lift().value(p, t)
                        + v.iter().zip(c).map(|(&a, &b)| a * b).sum::<T>()
                })
                .collect();
            values.push(row);
        }
        Ok(LatticeSnapshot {
            times: indices.iter().map(|&k| self.times[k]).collect(),
            time_indices: indices,
            points,
            values,
        })
    }
}

/// Lattice values of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSnapshot<T> {
    pub times: Vec<T>,
    pub time_indices: Vec<usize>,
    pub points: Vec<Vec<T>>,
    /// `values[i][j]` = `u(points[j], times[i])`.
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> LatticeSnapshot<T> {
    /// CSV rows `t,x1,…,xN,u`.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::with_capacity(self.times.len() * self.points.len());
        for (t, row) in self.times.iter().zip(&self.values) {
            for (p, u) in self.points.iter().zip(row) {
                let coords: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                rows.push(format!("{t},{},{u}", coords.join(",")));
            }
        }
        rows
    }
}

/// `‖a − b‖_{L^{α+1}(Ω_T)}` for two trajectories on the same box, basis and
/// time grid, by quadrature in space and the trapezoid rule in time.
pub fn space_time_distance<T: Scalar>(
    a: &SolutionTrajectory<T>,
    b: &SolutionTrajectory<T>,
) -> Result<T> {
    if a.times() != b.times() || a.disc.modes() != b.disc.modes() || a.problem.domain() != b.problem.domain() {
        return Err(Error::InvalidParameter(
            "trajectories live on different grids".into(),
        ));
    }
    let ap1 = a.alpha() + T::one();
    let table = a.disc.table();
    let slices: Vec<T> = (0..a.times.len())
        .map(|k| {
            let (ua, ub) = (a.node_values(k)?, b.node_values(k)?);
            Ok((0..table.nodes())
                .map(|q| table.weight(q) * (ua[q] - ub[q]).abs().powf(ap1))
                .sum())
        })
        .collect::<Result<_>>()?;
    Ok(trapezoid(a.times(), &slices).powf(T::one() / ap1))
}

/// Trapezoid rule over a grid.
pub fn trapezoid<T: Scalar>(times: &[T], values: &[T]) -> T {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * (v[0] + v[1]) * T::lit(0.5))
        .sum()
}

/// Trajectories for each completed ε level, the distances between
/// successive levels, and the failure that stopped the schedule, if any.
#[derive(Clone)]
pub struct ScheduleRun<T> {
    pub trajectories: Vec<SolutionTrajectory<T>>,
    pub distances: Vec<T>,
    pub failure: Option<(T, Error)>,
}

impl<T: Scalar> ScheduleRun<T> {
    pub fn finest(&self) -> Option<&SolutionTrajectory<T>> {
        self.trajectories.last()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Discretization for `problem` with `modes_per_dim` modes per direction.
pub fn discretize<T: Scalar>(
    problem: &ProblemData<T>,
    modes_per_dim: usize,
    quad_order: Option<usize>,
) -> Result<Arc<Discretization<T>>> {
    let basis = GalerkinBasis::new(problem.domain().clone(), modes_per_dim)?;
    Ok(Arc::new(Discretization::new(basis, quad_order)?))
}

/// Initial coefficients: the L² projection of `u₀ − g(·, 0)`.
pub fn initial_coefficients<T: Scalar>(
    problem: &ProblemData<T>,
    disc: &Discretization<T>,
) -> Result<Vec<T>> {
    disc.basis().project_l2(
        |x| problem.initial(x) - problem.lift().value(x, T::zero()),
        disc.quadrature(),
    )
}

/// Solves the regularized Galerkin system once per ε level, warm-starting
/// each level's Newton iterations from the previous level.
pub fn solve_cauchy_dirichlet<T: Scalar>(
    problem: &ProblemData<T>,
    disc: Arc<Discretization<T>>,
    schedule: &EpsilonSchedule<T>,
    stepper: &StepperConfig<T>,
) -> Result<ScheduleRun<T>> {
    stepper.validate()?;
    problem.validate_on(disc.quadrature(), 3)?;
    let asm = Assembler::new(problem, &disc)?;
    let initial = initial_coefficients(problem, &disc)?;
    let mut run = ScheduleRun {
        trajectories: Vec::new(),
        distances: Vec::new(),
        failure: None,
    };
    for &eps in schedule.levels() {
        let warm = run.trajectories.last().map(|t| t.coefficients.as_slice());
        match integrate(&asm, stepper, eps, initial.clone(), warm) {
            Ok(out) => {
                let traj = SolutionTrajectory::new(
                    problem.clone(),
                    disc.clone(),
                    eps,
                    out.times,
                    out.coefficients,
                    out.records,
                )?;
                if let Some(prev) = run.trajectories.last() {
                    run.distances.push(space_time_distance(prev, &traj)?);
                }
                run.trajectories.push(traj);
            }
            Err(e) => {
                run.failure = Some((eps, e));
                break;
            }
        }
    }
    Ok(run)
}

/// Nested-box runs for the whole-space problem.
#[derive(Clone)]
pub struct ExpandingRun<T> {
    pub half_widths: Vec<T>,
    /// Finest-ε trajectory on each box.
    pub trajectories: Vec<SolutionTrajectory<T>>,
    /// `sup_t ∫|u|^{α+1} + Σ_j ∬|∂_j u|^{p_j}` on each box.
    pub energies: Vec<T>,
    /// Largest difference between consecutive boxes over a lattice of the
    /// smallest box and every grid time.
    pub common_differences: Vec<T>,
}

/// Energy `sup_t ∫|u|^{α+1} + Σ_j ∬|∂_j u|^{p_j}` of a trajectory.
pub fn trajectory_energy<T: Scalar>(traj: &SolutionTrajectory<T>) -> Result<T> {
    let sup = traj.power_norms()?.into_iter().fold(T::zero(), T::max);
    let p = traj.problem().exponents().p().to_vec();
    let grad = traj.slice_integrals(|_, g| {
        g.iter().zip(&p).map(|(&gj, &pj)| gj.abs().powf(pj)).sum()
    })?;
    Ok(sup + trapezoid(traj.times(), &grad))
}

/// Solves the zero-boundary problem on `(−L, L)^N` for each half width `L`
/// (`problem_on` builds the data restricted to a box), using
/// `modes_per_dim[i]` modes on box `i`.
pub fn solve_cauchy_expanding<T: Scalar>(
    problem_on: impl Fn(BoxDomain<T>) -> Result<ProblemData<T>> + Sync,
    dim: usize,
    half_widths: &[T],
    modes_per_dim: &[usize],
    schedule: &EpsilonSchedule<T>,
    stepper: &StepperConfig<T>,
    lattice_per_dim: usize,
) -> Result<ExpandingRun<T>> {
    use rayon::prelude::*;
    if half_widths.is_empty() || half_widths.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "half widths must be increasing".into(),
        ));
    }
    if modes_per_dim.len() != half_widths.len() {
        return Err(Error::InvalidParameter(
            "one modes_per_dim entry per box is required".into(),
        ));
    }
    let trajectories: Vec<SolutionTrajectory<T>> = half_widths
        .par_iter()
        .zip(modes_per_dim)
        .map(|(&l, &m)| {
            let problem = problem_on(BoxDomain::centered(dim, l)?)?;
            if !problem.lift().is_zero() {
                return Err(Error::InvalidParameter(
                    "expanding boxes require zero boundary data".into(),
                ));
            }
            let disc = discretize(&problem, m, None)?;
            let run = solve_cauchy_dirichlet(&problem, disc, schedule, stepper)?;
            if let Some((_, e)) = run.failure {
                return Err(e);
            }
            Ok(run.trajectories.last().cloned().expect("non-empty schedule"))
        })
        .collect::<Result<_>>()?;

    let energies = trajectories
        .iter()
        .map(trajectory_energy)
        .collect::<Result<Vec<_>>>()?;

    let probe = BoxDomain::centered(dim, half_widths[0])?.lattice(lattice_per_dim);
    let mut common_differences = Vec::new();
    for pair in trajectories.windows(2) {
        if pair[0].times() != pair[1].times() {
            return Err(Error::InvalidParameter("boxes use different time grids".into()));
        }
        let mut worst = T::zero();
        for &t in pair[0].times() {
            for x in &probe {
                let d = (pair[0].evaluate_extended(x, t)? - pair[1].evaluate_extended(x, t)?).abs();
                worst = worst.max(d);
            }
        }
        common_differences.push(worst);
    }
    Ok(ExpandingRun {
        half_widths: half_widths.to_vec(),
        trajectories,
        energies,
        common_differences,
    })
}
