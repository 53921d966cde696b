//! Weak-form residuals against `φ = v_m(x) ψ_ε(t)` with trapezoid time
//! cutoffs.

use crate::algebra::spow_unchecked;
use crate::assembly::Assembler;
use crate::basis::gauss_legendre;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::SolutionTrajectory;

/// Trapezoid `ψ_ε`: zero outside `[t₁, t₂]`, linear ramps of width `ε`,
/// one in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeCutoff<T> {
    pub t1: T,
    pub t2: T,
    pub eps: T,
}

impl<T: Scalar> TimeCutoff<T> {
    pub fn new(t1: T, t2: T, eps: T) -> Result<Self> {
        if !(t1 >= T::zero() && t1 < t2) {
            return Err(Error::InvalidParameter(format!(
                "cutoff needs 0 <= t1 < t2, got t1 = {t1}, t2 = {t2}"
            )));
        }
        if !(eps > T::zero() && eps + eps <= t2 - t1) {
            return Err(Error::InvalidParameter(format!(
                "ramp width {eps} must be positive and at most (t2 - t1)/2"
            )));
        }
        Ok(Self { t1, t2, eps })
    }

    pub fn value(&self, t: T) -> T {
        if t <= self.t1 || t >= self.t2 {
            T::zero()
        } else if t < self.t1 + self.eps {
            (t - self.t1) / self.eps
        } else if t > self.t2 - self.eps {
            (self.t2 - t) / self.eps
        } else {
            T::one()
        }
    }

    /// `ψ_ε'`, taken from the right at the kinks.
    pub fn derivative(&self, t: T) -> T {
        if t < self.t1 || t >= self.t2 {
            T::zero()
        } else if t < self.t1 + self.eps {
            T::one() / self.eps
        } else if t >= self.t2 - self.eps {
            -T::one() / self.eps
        } else {
            T::zero()
        }
    }

    fn kinks(&self) -> [T; 4] {
        [self.t1, self.t1 + self.eps, self.t2 - self.eps, self.t2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidualRow<T> {
    pub mode: usize,
    pub cutoff: TimeCutoff<T>,
    /// `∬ A·∇φ − |u|^{α−1}u ∂_tφ − fφ`.
    pub residual: T,
    /// `∬ |A·∇φ| + ||u|^{α−1}u ∂_tφ| + |fφ|`, for relative comparisons.
    pub scale: T,
}

impl<T: Scalar> WeakResidualRow<T> {
    pub fn relative(&self) -> T {
        if self.scale > T::zero() {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

/// Residual rows `mode,t1,t2,eps,residual,scale`.
pub fn residual_csv_rows<T: Scalar>(rows: &[WeakResidualRow<T>]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.mode, r.cutoff.t1, r.cutoff.t2, r.cutoff.eps, r.residual, r.scale
            )
        })
        .collect()
}

/// Residuals for the first `test_mode_count` basis modes and each cutoff.
/// Time integrals use three-point Gauss rules on the pieces between grid
/// times and cutoff kinks; `u` is linear in time between grid points.
pub fn weak_residual<T: Scalar>(
    traj: &SolutionTrajectory<T>,
    test_mode_count: usize,
    cutoffs: &[TimeCutoff<T>],
) -> Result<Vec<WeakResidualRow<T>>> {
    let problem = traj.problem();
    let disc = traj.discretization();
    let table = disc.table();
    if test_mode_count > table.modes() {
        return Err(Error::InvalidParameter(format!(
            "{test_mode_count} test modes requested, basis has {}",
            table.modes()
        )));
    }
    let horizon = problem.horizon();
    for c in cutoffs {
        if c.t2 > horizon {
            return Err(Error::InvalidParameter(format!(
                "cutoff end {} exceeds the horizon {horizon}",
                c.t2
            )));
        }
    }
    let asm = Assembler::new(problem, disc)?;
    let (nodes, dim) = (table.nodes(), table.dim());
    let alpha = problem.alpha();
    let (gx, gw) = gauss_legendre(3);

    let mut breaks: Vec<T> = traj.times().to_vec();
    for c in cutoffs {
        breaks.extend(c.kinks());
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    breaks.dedup();

    let rows = cutoffs.len() * test_mode_count;
    let mut residual = vec![T::zero(); rows];
    let mut scale = vec![T::zero(); rows];
    let mut flux = vec![T::zero(); dim];

    for piece in breaks.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        if !(b > a) {
            continue;
        }
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let active: Vec<usize> = (0..cutoffs.len())
            .filter(|&c| cutoffs[c].value(mid) != T::zero() || cutoffs[c].derivative(mid) != T::zero())
            .collect();
        if active.is_empty() {
            continue;
        }
        for (&s, &ws) in gx.iter().zip(&gw) {
            let t = mid + half * T::lit(s);
            let wt = half * T::lit(ws);
            let xi = traj.coefficients_at(t)?;
            let data = asm.node_data(t)?;
            let fields = asm.fields(&xi, &data);
            // Per-mode space integrals of A·∇v_m, |u|^{α−1}u v_m and f v_m.
            let n = test_mode_count;
            let (mut a_term, mut u_term, mut f_term) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
            let (mut a_abs, mut u_abs, mut f_abs) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
            for q in 0..nodes {
                let w = table.weight(q);
                let x = disc.quadrature().node(q);
                let u = fields.u[q];
                problem
                    .field()
                    .eval(x, t, u, &fields.grad_u[q * dim..(q + 1) * dim], &mut flux);
                let su = spow_unchecked(u, alpha);
                let f = data.f[q];
                let vals = table.values(q);
                let grads = table.grads(q);
                for m in 0..n {
                    let ag: T = (0..dim).map(|j| flux[j] * grads[m * dim + j]).sum();
                    a_term[m] = a_term[m] + w * ag;
                    a_abs[m] = a_abs[m] + w * ag.abs();
                    u_term[m] = u_term[m] + w * su * vals[m];
                    u_abs[m] = u_abs[m] + w * (su * vals[m]).abs();
                    f_term[m] = f_term[m] + w * f * vals[m];
                    f_abs[m] = f_abs[m] + w * (f * vals[m]).abs();
                }
            }
            for &c in &active {
                let psi = cutoffs[c].value(t);
                let dpsi = cutoffs[c].derivative(t);
                for m in 0..n {
                    let r = c * n + m;
                    residual[r] = residual[r] + wt * (psi * (a_term[m] - f_term[m]) - dpsi * u_term[m]);
                    scale[r] = scale[r] + wt * (psi * (a_abs[m] + f_abs[m]) + dpsi.abs() * u_abs[m]);
                }
            }
        }
    }

    Ok((0..rows)
        .map(|r| WeakResidualRow {
            mode: r % test_mode_count.max(1),
            cutoff: cutoffs[r / test_mode_count.max(1)],
            residual: residual[r],
            scale: scale[r],
        })
        .collect())
}
