//! Comparison principle checks: precondition audit, lattice gap between two
//! trajectories, the seeded trial family, and the uniqueness check.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{BoundaryLift, Exponents, FieldSpec, ProblemData};
use crate::basis::{BoxDomain, Quadrature};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::{space_time_distance, SolutionTrajectory};

/// Default evaluation lattice: points per side and time stride.
pub const LATTICE_PER_DIM: usize = 64;
pub const LATTICE_EVERY: usize = 10;

/// `max(10·dt, 1e-6)`.
pub fn default_tolerance<T: Scalar>(dt: T) -> T {
    (T::lit(10.0) * dt).max(T::lit(1e-6))
}

/// What the precondition audit looked at.
#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionSummary {
    pub initial_nodes: usize,
    pub source_samples: usize,
    pub boundary_samples: usize,
    /// A source depends on time, outside the setting the principle covers.
    pub exploratory: bool,
}

fn slack<T: Scalar>(a: T, b: T) -> T {
    T::lit(1e-12) * (T::one() + a.abs() + b.abs())
}

fn audit_fail<T>(msg: String) -> Result<T> {
    Err(Error::Audit(msg))
}

/// Checks that `(v, w)` is an admissible comparison experiment: same box,
/// horizon, exponents and field; the field declared time independent and
/// Lipschitz in `u`; `v` with zero boundary data; `g_w ≥ 0` on the lateral
/// boundary; `v₀ ≤ w₀` on the quadrature nodes; `f₁ ≤ f₂` on the nodes at
/// `time_samples` uniformly spaced times.
pub fn comparison_preconditions<T: Scalar>(
    v: &ProblemData<T>,
    w: &ProblemData<T>,
    quad: &Quadrature<T>,
    time_samples: usize,
) -> Result<PreconditionSummary> {
    if v.domain() != w.domain() {
        return audit_fail("problems live on different boxes".into());
    }
    if v.horizon() != w.horizon() {
        return audit_fail("problems have different horizons".into());
    }
    if v.exponents() != w.exponents() {
        return audit_fail("problems have different exponents".into());
    }
    let (fv, fw) = (v.field(), w.field());
    if fv.name() != fw.name() || fv.lambda() != fw.lambda() || fv.flags() != fw.flags() {
        return audit_fail("problems do not share a vector field".into());
    }
    let flags = fw.flags();
    if !flags.time_independent {
        return audit_fail("field is not declared time independent".into());
    }
    if !flags.lipschitz_in_u {
        return audit_fail("field is not declared Lipschitz in u".into());
    }

    let horizon = v.horizon();
    let steps = time_samples.max(2) - 1;
    let times: Vec<T> = (0..=steps)
        .map(|k| horizon * T::of_usize(k) / T::of_usize(steps))
        .collect();

    let domain = v.domain();
    let boundary: Vec<Vec<T>> = domain
        .lattice(16)
        .into_iter()
        .filter(|x| domain.on_boundary(x))
        .collect();
    let mut boundary_samples = 0;
    for &t in &times {
        for x in &boundary {
            boundary_samples += 1;
            let gv = v.lift().value(x, t);
            if !v.lift().is_zero() && gv.abs() > slack(gv, T::zero()) {
                return audit_fail(format!(
                    "v has nonzero boundary data {gv} at x = {x:?}, t = {t}"
                ));
            }
            let gw = w.lift().value(x, t);
            if gw < -slack(gw, T::zero()) {
                return audit_fail(format!(
                    "w has negative boundary data {gw} at x = {x:?}, t = {t}"
                ));
            }
        }
    }

    for q in 0..quad.len() {
        let x = quad.node(q);
        let (a, b) = (v.initial(x), w.initial(x));
        if a > b + slack(a, b) {
            return audit_fail(format!("v0 = {a} exceeds w0 = {b} at x = {x:?}"));
        }
    }
    let mut source_samples = 0;
    for &t in &times {
        for q in 0..quad.len() {
            let x = quad.node(q);
            let (a, b) = (v.source(x, t), w.source(x, t));
            source_samples += 1;
            if a > b + slack(a, b) {
                return audit_fail(format!("f1 = {a} exceeds f2 = {b} at x = {x:?}, t = {t}"));
            }
        }
    }
    Ok(PreconditionSummary {
        initial_nodes: quad.len(),
        source_samples,
        boundary_samples,
        exploratory: !(v.source_is_time_independent() && w.source_is_time_independent()),
    })
}

/// Outcome of a lattice comparison `v ≤ w + tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<T> {
    /// `min (w − v)` over the lattice.
    pub min_gap: T,
    pub min_point: Vec<T>,
    pub min_time: T,
    pub violation_count: usize,
    pub samples: usize,
    pub tol: T,
    pub per_dim: usize,
    pub every: usize,
    pub time_slices: usize,
    pub preconditions: PreconditionSummary,
}

impl<T: Scalar> ComparisonReport<T> {
    pub fn passed(&self) -> bool {
        self.min_gap >= -self.tol
    }

    pub fn describe_lattice(&self) -> String {
        format!(
            "{}^{} points x {} time slices (every {} steps)",
            self.per_dim,
            self.min_point.len(),
            self.time_slices,
            self.every
        )
    }

    /// CSV rows `quantity,value`.
    pub fn csv_rows(&self) -> Vec<String> {
        let point: Vec<String> = self.min_point.iter().map(|v| v.to_string()).collect();
        vec![
            format!("min_gap,{}", self.min_gap),
            format!("min_time,{}", self.min_time),
            format!("min_point,{}", point.join(" ")),
            format!("violation_count,{}", self.violation_count),
            format!("samples,{}", self.samples),
            format!("tol,{}", self.tol),
            format!("lattice,{}", self.describe_lattice()),
            format!("exploratory,{}", self.preconditions.exploratory),
            format!("passed,{}", self.passed()),
        ]
    }
}

/// Audits the preconditions, then evaluates `w − v` on a lattice of
/// `per_dim` points per side at every `every`-th grid time.
pub fn check_comparison<T: Scalar>(
    v: &SolutionTrajectory<T>,
    w: &SolutionTrajectory<T>,
    per_dim: usize,
    every: usize,
    tol: T,
) -> Result<ComparisonReport<T>> {
    let preconditions =
        comparison_preconditions(v.problem(), w.problem(), w.discretization().quadrature(), 11)?;
    if v.times() != w.times() {
        return Err(Error::InvalidParameter(
            "comparison needs trajectories on the same time grid".into(),
        ));
    }
    let sv = v.lattice_values(per_dim, every)?;
    let sw = w.lattice_values(per_dim, every)?;
    let mut min_gap = T::infinity();
    let (mut min_point, mut min_time) = (Vec::new(), T::zero());
    let mut violation_count = 0;
    for (i, (rv, rw)) in sv.values.iter().zip(&sw.values).enumerate() {
        for (j, (&a, &b)) in rv.iter().zip(rw).enumerate() {
            let gap = b - a;
            if gap < -tol {
                violation_count += 1;
            }
            if gap < min_gap {
                min_gap = gap;
                min_point = sv.points[j].clone();
                min_time = sv.times[i];
            }
        }
    }
    Ok(ComparisonReport {
        min_gap,
        min_point,
        min_time,
        violation_count,
        samples: sv.times.len() * sv.points.len(),
        tol,
        per_dim,
        every,
        time_slices: sv.times.len(),
        preconditions,
    })
}

/// One seeded member of the comparison family on the unit box:
/// `w₀` a random combination of low sine modes, `v₀ = w₀ − b` with `b` a
/// nonnegative Gaussian bump times `Π sin(πx_i)` (so it vanishes on the
/// boundary and is resolved by a few modes), `f₁ = 0 ≤ f₂ = c`, `g_v = 0` and `g_w = γ t ≥ 0`.
/// With `nonnegativity` set, `v ≡ 0` and `w₀ = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTrial {
    pub seed: u64,
    pub mode_amplitudes: Vec<(Vec<usize>, f64)>,
    pub bump_center: Vec<f64>,
    pub bump_width: f64,
    pub bump_height: f64,
    pub source: f64,
    pub lift_rate: f64,
    pub nonnegativity: bool,
}

impl ComparisonTrial {
    pub fn generate(seed: u64, dim: usize, nonnegativity: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mode_amplitudes = Vec::new();
        if !nonnegativity {
            for _ in 0..3 {
                let k: Vec<usize> = (0..dim).map(|_| rng.gen_range(1..=3)).collect();
                mode_amplitudes.push((k, rng.gen_range(-1.0..1.0)));
            }
        }
        let bump_center = (0..dim).map(|_| rng.gen_range(0.3..0.7)).collect();
        Self {
            seed,
            mode_amplitudes,
            bump_center,
            bump_width: rng.gen_range(0.2..0.3),
            bump_height: rng.gen_range(0.2..1.0),
            source: rng.gen_range(0.0..1.0),
            lift_rate: rng.gen_range(0.0..1.0),
            nonnegativity,
        }
    }

    fn bump(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.bump_center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let walls: f64 = x.iter().map(|&v| (std::f64::consts::PI * v).sin()).product();
        self.bump_height * (-0.5 * r2 / (self.bump_width * self.bump_width)).exp() * walls
    }

    fn modes(&self, x: &[f64]) -> f64 {
        self.mode_amplitudes
            .iter()
            .map(|(k, a)| {
                a * k
                    .iter()
                    .zip(x)
                    .map(|(&ki, &xi)| (ki as f64 * std::f64::consts::PI * xi).sin())
                    .product::<f64>()
            })
            .sum()
    }

    /// `(v, w)` problem pair with the model field.
    pub fn problems<T: Scalar>(
        &self,
        alpha: T,
        p: &[T],
        horizon: T,
    ) -> Result<(ProblemData<T>, ProblemData<T>)> {
        let dim = p.len();
        if self.bump_center.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "trial generated for dimension {}, exponents have {dim}",
                self.bump_center.len()
            )));
        }
        let domain = BoxDomain::unit(dim)?;
        let exps = Exponents::new(alpha, p.to_vec())?;
        let base = ProblemData::new(domain, horizon, exps, FieldSpec::model(p))?;

        let (tw, tv) = (Arc::new(self.clone()), Arc::new(self.clone()));
        let w0 = move |x: &[T]| {
            let y: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
            T::lit(if tw.nonnegativity { tw.bump(&y) } else { tw.modes(&y) })
        };
        let v0 = move |x: &[T]| {
            let y: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
            T::lit(if tv.nonnegativity { 0.0 } else { tv.modes(&y) - tv.bump(&y) })
        };
        let c = T::lit(self.source);
        let gamma = T::lit(self.lift_rate);
        let lift = BoundaryLift::new(
            Arc::new(move |_: &[T], t: T| gamma * t),
            Arc::new(move |_: &[T], _: T| gamma),
            Arc::new(|_: &[T], _: T, out: &mut [T]| out.iter_mut().for_each(|o| *o = T::zero())),
        );
        let v = base.clone().with_initial(Arc::new(v0));
        let w = base
            .with_initial(Arc::new(w0))
            .with_source(Arc::new(move |_: &[T], _: T| c), true)
            .with_lift(lift);
        Ok((v, w))
    }
}

/// Two solves of the same problem compared in `L^{α+1}(Ω_T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport<T> {
    pub distance: T,
    pub tolerance: T,
}

impl<T: Scalar> UniquenessReport<T> {
    pub fn passed(&self) -> bool {
        self.distance <= self.tolerance
    }
}

/// Compares two independently computed trajectories of one zero-boundary
/// problem against `10 × calibrated_error`.
pub fn uniqueness_check<T: Scalar>(
    a: &SolutionTrajectory<T>,
    b: &SolutionTrajectory<T>,
    calibrated_error: T,
) -> Result<UniquenessReport<T>> {
    if !a.problem().lift().is_zero() || !b.problem().lift().is_zero() {
        return Err(Error::Audit("uniqueness check needs zero boundary data".into()));
    }
    Ok(UniquenessReport {
        distance: space_time_distance(a, b)?,
        tolerance: T::lit(10.0) * calibrated_error,
    })
}
