//! The a-priori energy estimate: solution-side quantities against the
//! data-side budget.

use crate::assembly::Assembler;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::{trapezoid, SolutionTrajectory};

/// Left side `sup_t ∫|u|^{α+1} + Σ_j ∬|∂_j u|^{p_j}` and the data budget
/// `∫|u₀|^{α+1} + ∬|f|^{(α+1)/α} + sup_t ∫|g|^{α+1} + ∬|∂_t g|^{α+1}
///  + Σ_j ∬|∂_j g|^{p_j} + ∬(ã + b̃) + |Ω|`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport<T> {
    pub sup_norm_term: T,
    /// Time of the slice attaining the sup term.
    pub sup_time: T,
    pub gradient_terms: Vec<T>,
    /// `∫|u(·,t)|^{α+1}` on the trajectory's grid.
    pub slice_norms: Vec<T>,
    pub initial_term: T,
    pub source_term: T,
    pub lift_sup_term: T,
    pub lift_time_term: T,
    pub lift_gradient_term: T,
    pub structure_term: T,
    pub volume_term: T,
    pub rhs_budget: T,
    /// `lhs / rhs_budget`, zero when the left side vanishes.
    pub ratio: T,
}

impl<T: Scalar> EnergyReport<T> {
    pub fn lhs(&self) -> T {
        self.sup_norm_term + self.gradient_terms.iter().copied().sum::<T>()
    }

    /// `∫|u(·,t)|^{α+1}` never increases along the grid (up to `slack`
    /// relative to the initial value).
    pub fn sup_term_nonincreasing(&self, slack: T) -> bool {
        let scale = self.slice_norms.first().copied().unwrap_or(T::zero()).max(T::one());
        self.slice_norms.windows(2).all(|w| w[1] <= w[0] + slack * scale)
    }

    /// CSV rows `quantity,value`.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = vec![
            format!("sup_norm_term,{}", self.sup_norm_term),
            format!("sup_time,{}", self.sup_time),
        ];
        for (j, g) in self.gradient_terms.iter().enumerate() {
            rows.push(format!("gradient_term_{},{g}", j + 1));
        }
        rows.extend([
            format!("lhs,{}", self.lhs()),
            format!("initial_term,{}", self.initial_term),
            format!("source_term,{}", self.source_term),
            format!("lift_sup_term,{}", self.lift_sup_term),
            format!("lift_time_term,{}", self.lift_time_term),
            format!("lift_gradient_term,{}", self.lift_gradient_term),
            format!("structure_term,{}", self.structure_term),
            format!("volume_term,{}", self.volume_term),
            format!("rhs_budget,{}", self.rhs_budget),
            format!("ratio,{}", self.ratio),
        ]);
        rows
    }
}

fn finite<T: Scalar>(v: T, index: usize, t: T) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteNorm {
            index,
            t: t.to_f64_lossy(),
        })
    }
}

/// Evaluates both sides of the energy estimate on the trajectory's grid:
/// quadrature in space, the trapezoid rule in time.
pub fn energy_report<T: Scalar>(traj: &SolutionTrajectory<T>) -> Result<EnergyReport<T>> {
    let problem = traj.problem();
    let asm = Assembler::new(problem, traj.discretization())?;
    let quad = traj.discretization().quadrature();
    let dim = quad.dim();
    let alpha = problem.alpha();
    let ap1 = alpha + T::one();
    let f_power = ap1 / alpha;
    let p = problem.exponents().p();
    let field = problem.field();
    let times = traj.times();

    let nt = times.len();
    let mut slice_norms = Vec::with_capacity(nt);
    let mut grad_slices = vec![Vec::with_capacity(nt); dim];
    let mut f_slices = Vec::with_capacity(nt);
    let mut g_slices = Vec::with_capacity(nt);
    let mut gt_slices = Vec::with_capacity(nt);
    let mut gg_slices = Vec::with_capacity(nt);
    let mut ab_slices = Vec::with_capacity(nt);

    for (k, (&t, xi)) in times.iter().zip(traj.coefficients()).enumerate() {
        let data = asm.node_data(t)?;
        let fields = asm.fields(xi, &data);
        let mut norm = T::zero();
        let mut grads = vec![T::zero(); dim];
        let (mut fs, mut gs, mut gts, mut ggs, mut abs) =
            (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for q in 0..quad.len() {
            let w = quad.weight(q);
            norm = norm + w * fields.u[q].abs().powf(ap1);
            for j in 0..dim {
                grads[j] = grads[j] + w * fields.grad_u[q * dim + j].abs().powf(p[j]);
                ggs = ggs + w * data.grad_g[q * dim + j].abs().powf(p[j]);
            }
            fs = fs + w * data.f[q].abs().powf(f_power);
            gs = gs + w * data.g[q].abs().powf(ap1);
            gts = gts + w * data.g_t[q].abs().powf(ap1);
            let x = quad.node(q);
            abs = abs + w * (field.a_tilde(x, t) + field.b_tilde(x, t));
        }
        slice_norms.push(finite(norm, k, t)?);
        for j in 0..dim {
            grad_slices[j].push(finite(grads[j], k, t)?);
        }
        f_slices.push(finite(fs, k, t)?);
        g_slices.push(finite(gs, k, t)?);
        gt_slices.push(finite(gts, k, t)?);
        gg_slices.push(finite(ggs, k, t)?);
        ab_slices.push(finite(abs, k, t)?);
    }

    let (sup_index, sup_norm_term) = slice_norms
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::zero()), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    let gradient_terms: Vec<T> = grad_slices.iter().map(|s| trapezoid(times, s)).collect();
    let initial_term = quad.integrate(|x| problem.initial(x).abs().powf(ap1));
    let initial_term = finite(initial_term, 0, T::zero())?;
    let source_term = trapezoid(times, &f_slices);
    let lift_sup_term = g_slices.iter().copied().fold(T::zero(), T::max);
    let lift_time_term = trapezoid(times, &gt_slices);
    let lift_gradient_term = trapezoid(times, &gg_slices);
    let structure_term = trapezoid(times, &ab_slices);
    let volume_term = problem.domain().volume();
    let rhs_budget = initial_term
        + source_term
        + lift_sup_term
        + lift_time_term
        + lift_gradient_term
        + structure_term
        + volume_term;

    let mut report = EnergyReport {
        sup_norm_term,
        sup_time: times[sup_index],
        gradient_terms,
        slice_norms,
        initial_term,
        source_term,
        lift_sup_term,
        lift_time_term,
        lift_gradient_term,
        structure_term,
        volume_term,
        rhs_budget,
        ratio: T::zero(),
    };
    let lhs = report.lhs();
    if lhs > T::zero() {
        report.ratio = lhs / rhs_budget;
    }
    if !report.ratio.is_finite() {
        return Err(Error::NonFiniteNorm {
            index: sup_index,
            t: report.sup_time.to_f64_lossy(),
        });
    }
    Ok(report)
}
