//! Discrete form of the energy identity obtained by testing the Galerkin
//! system with its own coefficients.
//!
//! With `w = u − g`, `Γ_ε` and `B_ε` the primitives of
//! `α(|s|+ε)^{α−1}s` and `α(|s|+ε)^{α−1}`, the continuous identity reads
//!
//! `∫Γ_ε(u)|₀ᵗ − ∫B_ε(u)g|₀ᵗ + ∬B_ε(u)∂_t g + ∬A·∇w = ∬f w`.
//!
//! Each step replaces the time integrals by the right endpoint value; an
//! implicit Euler solution then balances up to `O(dt²)` per step.

use crate::algebra::{gamma_eps, primitive_b_eps, Alpha};
use crate::assembly::{Assembler, NodeData, NodeFields};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::solver::SolutionTrajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityStep<T> {
    pub t: T,
    pub lhs: T,
    pub rhs: T,
    pub gap: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport<T> {
    pub steps: Vec<IdentityStep<T>>,
    /// Sum of the per-step gaps.
    pub cumulative_gap: T,
    pub max_step_gap: T,
    /// Sum of the absolute values of every term, for relative comparisons.
    pub scale: T,
}

impl<T: Scalar> IdentityReport<T> {
    /// CSV rows `t,lhs,rhs,gap`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| format!("{},{},{},{}", s.t, s.lhs, s.rhs, s.gap))
            .collect()
    }
}

struct Slice<T> {
    gamma: T,
    b_g: T,
    b_gt: T,
    flux: T,
    source: T,
}

fn slice<T: Scalar>(
    asm: &Assembler<'_, T>,
    fields: &NodeFields<T>,
    data: &NodeData<T>,
    alpha: Alpha<T>,
    eps: T,
) -> Result<Slice<T>> {
    let problem = asm.problem();
    let disc = asm.discretization();
    let quad = disc.quadrature();
    let dim = quad.dim();
    let mut flux = vec![T::zero(); dim];
    let mut s = Slice {
        gamma: T::zero(),
        b_g: T::zero(),
        b_gt: T::zero(),
        flux: T::zero(),
        source: T::zero(),
    };
    for q in 0..quad.len() {
        let w = quad.weight(q);
        let u = fields.u[q];
        let grad = &fields.grad_u[q * dim..(q + 1) * dim];
        s.gamma = s.gamma + w * gamma_eps(u, alpha, eps)?;
        if data.g[q] != T::zero() || data.g_t[q] != T::zero() {
            let b = primitive_b_eps(u, alpha, eps)?;
            s.b_g = s.b_g + w * b * data.g[q];
            s.b_gt = s.b_gt + w * b * data.g_t[q];
        }
        problem.field().eval(quad.node(q), data.t, u, grad, &mut flux);
        let pairing: T = (0..dim)
            .map(|j| flux[j] * (grad[j] - data.grad_g[q * dim + j]))
            .sum();
        s.flux = s.flux + w * pairing;
        s.source = s.source + w * data.f[q] * (u - data.g[q]);
    }
    Ok(s)
}

/// Per-step balance of the discrete energy identity; `Γ_ε` and `B_ε` are
/// evaluated by adaptive quadrature at every node.
pub fn discrete_energy_identity<T: Scalar>(traj: &SolutionTrajectory<T>) -> Result<IdentityReport<T>> {
    let problem = traj.problem();
    let asm = Assembler::new(problem, traj.discretization())?;
    let alpha = problem.exponents().alpha();
    let eps = traj.epsilon();
    let times = traj.times();

    let mut prev = {
        let data = asm.node_data(times[0])?;
        let fields = asm.fields(&traj.coefficients()[0], &data);
        slice(&asm, &fields, &data, alpha, eps)?
    };
    let mut steps = Vec::with_capacity(times.len().saturating_sub(1));
    let (mut cumulative_gap, mut max_step_gap, mut scale) = (T::zero(), T::zero(), T::zero());
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        let data = asm.node_data(times[k])?;
        let fields = asm.fields(&traj.coefficients()[k], &data);
        let next = slice(&asm, &fields, &data, alpha, eps)?;
        let lhs = (next.gamma - prev.gamma) - (next.b_g - prev.b_g) + h * (next.b_gt + next.flux);
        let rhs = h * next.source;
        let gap = lhs - rhs;
        cumulative_gap = cumulative_gap + gap;
        max_step_gap = max_step_gap.max(gap.abs());
        scale = scale
            + (next.gamma - prev.gamma).abs()
            + (next.b_g - prev.b_g).abs()
            + h * (next.b_gt.abs() + next.flux.abs() + next.source.abs());
        steps.push(IdentityStep {
            t: times[k],
            lhs,
            rhs,
            gap,
        });
        prev = next;
    }
    Ok(IdentityReport {
        steps,
        cumulative_gap,
        max_step_gap,
        scale,
    })
}
