//! The Galerkin system `F(ξ,t) ξ' + K(ξ,t) + G(ξ,t) = J(t)` for
//! `u = g + Σ ξ_k v_k` with the regularized weight
//! `θ² = (|u| + ε)^{α−1}`.
//!
//! All integrals use the tensor quadrature of a [`Discretization`]. Sums
//! over nodes run in a fixed sequential order, so results are reproducible
//! bit for bit.

pub mod audit;
pub mod field;
pub mod problem;

pub use audit::{structure_condition_audit, AuditEntry, AuditRegion, AuditReport};
pub use field::{
    constant_space, constant_space_time, field_variables, ExprField, FieldFlags, FieldSpec,
    ModelField, SpaceFn, SpaceTimeFn, VectorField,
};
pub use problem::{
    central_difference, central_difference_step, BoundaryLift, Discretization, Exponents, GalerkinState, GradFn,
    ProblemData,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Data sampled at every quadrature node at one time: `g`, `∂_t g`, `∇g`
/// (node-major, `dim` per node) and `f`.
#[derive(Debug, Clone)]
pub struct NodeData<T> {
    pub t: T,
    pub g: Vec<T>,
    pub g_t: Vec<T>,
    pub grad_g: Vec<T>,
    pub f: Vec<T>,
}

/// `u` and `∇u` at every quadrature node.
#[derive(Debug, Clone)]
pub struct NodeFields<T> {
    pub u: Vec<T>,
    pub grad_u: Vec<T>,
}

/// Builds the Galerkin maps for one problem on one discretization.
#[derive(Clone, Copy)]
pub struct Assembler<'a, T> {
    problem: &'a ProblemData<T>,
    disc: &'a Discretization<T>,
}

impl<'a, T: Scalar> Assembler<'a, T> {
    pub fn new(problem: &'a ProblemData<T>, disc: &'a Discretization<T>) -> Result<Self> {
        if problem.domain() != disc.basis().domain() {
            return Err(Error::InvalidParameter(
                "problem and basis live on different boxes".into(),
            ));
        }
        Ok(Self { problem, disc })
    }

    pub fn problem(&self) -> &'a ProblemData<T> {
        self.problem
    }

    pub fn discretization(&self) -> &'a Discretization<T> {
        self.disc
    }

    pub fn modes(&self) -> usize {
        self.disc.modes()
    }

    /// Samples the data at every node at time `t`.
    pub fn node_data(&self, t: T) -> Result<NodeData<T>> {
        let quad = self.disc.quadrature();
        let (nq, dim) = (quad.len(), quad.dim());
        let lift = self.problem.lift();
        let mut data = NodeData {
            t,
            g: vec![T::zero(); nq],
            g_t: vec![T::zero(); nq],
            grad_g: vec![T::zero(); nq * dim],
            f: vec![T::zero(); nq],
        };
        for q in 0..nq {
            let x = quad.node(q);
            if !lift.is_zero() {
                data.g[q] = lift.value(x, t);
                data.g_t[q] = lift.time_derivative(x, t);
                lift.gradient(x, t, &mut data.grad_g[q * dim..(q + 1) * dim]);
            }
            data.f[q] = self.problem.source(x, t);
            let finite = data.g[q].is_finite()
                && data.g_t[q].is_finite()
                && data.f[q].is_finite()
                && data.grad_g[q * dim..(q + 1) * dim].iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFinite(format!(
                    "problem data at node {q} (x = {:?}, t = {t})",
                    x.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>()
                )));
            }
        }
        Ok(data)
    }

    /// `u = g + Σ ξ_k v_k` and its gradient at every node.
    pub fn fields(&self, xi: &[T], data: &NodeData<T>) -> NodeFields<T> {
        let table = self.disc.table();
        let (nq, dim) = (table.nodes(), table.dim());
        let mut u = vec![T::zero(); nq];
        let mut grad_u = vec![T::zero(); nq * dim];
        for q in 0..nq {
            u[q] = data.g[q] + table.combine(xi, q);
            let out = &mut grad_u[q * dim..(q + 1) * dim];
            table.combine_grad(xi, q, out);
            for j in 0..dim {
                out[j] = out[j] + data.grad_g[q * dim + j];
            }
        }
        NodeFields { u, grad_u }
    }

    #[inline]
    fn weight_sq(&self, u: T, epsilon: T) -> T {
        let alpha = self.problem.alpha();
        if alpha == T::one() {
            T::one()
        } else {
            (u.abs() + epsilon).powf(alpha - T::one())
        }
    }

    /// `θ_{ξ,t}(x) = (|g + Σ ξ_j v_j| + ε)^{(α−1)/2}` at an arbitrary point.
    pub fn theta(&self, state: &GalerkinState<T>, x: &[T]) -> Result<T> {
        let v = self.disc.basis().eval_modes(x)?;
        let u = self.problem.lift().value(x, state.t)
            + v.iter().zip(&state.xi).map(|(&a, &b)| a * b).sum::<T>();
        let half = (self.problem.alpha() - T::one()) * T::lit(0.5);
        Ok((u.abs() + state.epsilon).powf(half))
    }

    /// `F_{mk} = α ∫ θ² v_k v_m`.
    pub fn mass(&self, fields: &NodeFields<T>, epsilon: T) -> Matrix<T> {
        let table = self.disc.table();
        let n = table.modes();
        let alpha = self.problem.alpha();
        let mut m = Matrix::zeros(n);
        for q in 0..table.nodes() {
            let c = alpha * table.weight(q) * self.weight_sq(fields.u[q], epsilon);
            let v = table.values(q);
            for a in 0..n {
                let ca = c * v[a];
                for b in a..n {
                    m[(a, b)] = m[(a, b)] + ca * v[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                m[(a, b)] = m[(b, a)];
            }
        }
        m
    }

    /// `∂/∂ξ_k (F(ξ) r)_m = α ∫ ∂_u θ² (Σ_b r_b v_b) v_k v_m`, the part of
    /// the Newton matrix that comes from the state-dependent mass.
    pub fn mass_derivative(&self, fields: &NodeFields<T>, epsilon: T, rate: &[T]) -> Matrix<T> {
        let table = self.disc.table();
        let n = table.modes();
        let alpha = self.problem.alpha();
        let mut m = Matrix::zeros(n);
        if alpha == T::one() {
            return m;
        }
        for q in 0..table.nodes() {
            let u = fields.u[q];
            let sign = if u > T::zero() {
                T::one()
            } else if u < T::zero() {
                -T::one()
            } else {
                continue;
            };
            let dw = (alpha - T::one()) * (u.abs() + epsilon).powf(alpha - T::lit(2.0)) * sign;
            let v = table.values(q);
            let c = alpha * table.weight(q) * dw * table.combine(rate, q);
            for a in 0..n {
                let ca = c * v[a];
                for b in a..n {
                    m[(a, b)] = m[(a, b)] + ca * v[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                m[(a, b)] = m[(b, a)];
            }
        }
        m
    }

    /// `K_m = α ∫ θ² ∂_t g v_m`.
    pub fn lift_load(&self, fields: &NodeFields<T>, data: &NodeData<T>, epsilon: T) -> Vec<T> {
        let table = self.disc.table();
        let alpha = self.problem.alpha();
        let mut out = vec![T::zero(); table.modes()];
        if self.problem.lift().is_zero() {
            return out;
        }
        for q in 0..table.nodes() {
            let c = alpha * table.weight(q) * self.weight_sq(fields.u[q], epsilon) * data.g_t[q];
            for (o, &v) in out.iter_mut().zip(table.values(q)) {
                *o = *o + c * v;
            }
        }
        out
    }

    /// `G_m = ∫ A(x, t, u, ∇u) · ∇v_m`.
    pub fn flux_load(&self, fields: &NodeFields<T>, t: T) -> Result<Vec<T>> {
        let table = self.disc.table();
        let quad = self.disc.quadrature();
        let (n, dim) = (table.modes(), table.dim());
        let field = self.problem.field();
        let mut out = vec![T::zero(); n];
        let mut a = [T::zero(); 3];
        for q in 0..table.nodes() {
            let x = quad.node(q);
            field.eval(x, t, fields.u[q], &fields.grad_u[q * dim..(q + 1) * dim], &mut a[..dim]);
            if a[..dim].iter().any(|v| !v.is_finite()) {
                return Err(Error::FieldNonFinite {
                    node: q,
                    x: x.iter().map(|v| v.to_f64_lossy()).collect(),
                });
            }
            let w = table.weight(q);
            for aj in a[..dim].iter_mut() {
                *aj = *aj * w;
            }
            let g = table.grads(q);
            for (k, o) in out.iter_mut().enumerate() {
                let mut s = T::zero();
                for j in 0..dim {
                    s = s + a[j] * g[k * dim + j];
                }
                *o = *o + s;
            }
        }
        Ok(out)
    }

    /// `J_m = ∫ f v_m`.
    pub fn source_load(&self, data: &NodeData<T>) -> Vec<T> {
        self.disc.table().moments(&data.f)
    }

    /// `K + G` at `ξ`, the part of the residual differentiated numerically.
    pub fn nonlinear_load(&self, xi: &[T], data: &NodeData<T>, epsilon: T) -> Result<Vec<T>> {
        self.nonlinear_load_from(&self.fields(xi, data), data, epsilon)
    }

    /// `K + G` for precomputed node fields.
    pub fn nonlinear_load_from(
        &self,
        fields: &NodeFields<T>,
        data: &NodeData<T>,
        epsilon: T,
    ) -> Result<Vec<T>> {
        let mut out = self.flux_load(fields, data.t)?;
        for (o, k) in out.iter_mut().zip(self.lift_load(fields, data, epsilon)) {
            *o = *o + k;
        }
        Ok(out)
    }

    /// Node fields after adding `h` to coefficient `k`.
    pub fn perturb(&self, fields: &NodeFields<T>, k: usize, h: T) -> NodeFields<T> {
        let table = self.disc.table();
        let dim = table.dim();
        let mut out = fields.clone();
        for q in 0..table.nodes() {
            out.u[q] = out.u[q] + h * table.values(q)[k];
            let g = &table.grads(q)[k * dim..(k + 1) * dim];
            for j in 0..dim {
                out.grad_u[q * dim + j] = out.grad_u[q * dim + j] + h * g[j];
            }
        }
        out
    }

    pub fn assemble_f(&self, state: &GalerkinState<T>) -> Result<Matrix<T>> {
        let data = self.node_data(state.t)?;
        Ok(self.mass(&self.fields(&state.xi, &data), state.epsilon))
    }

    pub fn assemble_k(&self, state: &GalerkinState<T>) -> Result<Vec<T>> {
        let data = self.node_data(state.t)?;
        Ok(self.lift_load(&self.fields(&state.xi, &data), &data, state.epsilon))
    }

    pub fn assemble_g(&self, state: &GalerkinState<T>) -> Result<Vec<T>> {
        let data = self.node_data(state.t)?;
        self.flux_load(&self.fields(&state.xi, &data), state.t)
    }

    pub fn assemble_j(&self, t: T) -> Result<Vec<T>> {
        Ok(self.source_load(&self.node_data(t)?))
    }

    /// `H = F⁻¹ (J − K − G)`.
    pub fn reduced_rhs(&self, state: &GalerkinState<T>) -> Result<Vec<T>> {
        let data = self.node_data(state.t)?;
        let fields = self.fields(&state.xi, &data);
        let f = self.mass(&fields, state.epsilon);
        let k = self.lift_load(&fields, &data, state.epsilon);
        let g = self.flux_load(&fields, state.t)?;
        let j = self.source_load(&data);
        let rhs: Vec<T> = (0..j.len()).map(|m| j[m] - k[m] - g[m]).collect();
        Ok(f.cholesky()?.solve(&rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BoxDomain, GalerkinBasis};
    use std::f64::consts::{PI, SQRT_2};
    use std::sync::Arc;

    fn setup(dim: usize, m: usize, alpha: f64, p: f64) -> (ProblemData<f64>, Discretization<f64>) {
        let domain = BoxDomain::unit(dim).unwrap();
        let ps = vec![p; dim];
        let problem = ProblemData::new(
            domain.clone(),
            1.0,
            Exponents::new(alpha, ps.clone()).unwrap(),
            FieldSpec::model(&ps),
        )
        .unwrap();
        let disc = Discretization::new(GalerkinBasis::new(domain, m).unwrap(), None).unwrap();
        (problem, disc)
    }

    #[test]
    fn theta_examples() {
        let (p1, d1) = setup(1, 2, 1.0, 2.0);
        let a1 = Assembler::new(&p1, &d1).unwrap();
        let s = GalerkinState::new(vec![0.3, -2.0], 0.2, 0.01).unwrap();
        assert_eq!(a1.theta(&s, &[0.37]).unwrap(), 1.0);

        let (p, d) = setup(1, 2, 0.4, 2.0);
        let a = Assembler::new(&p, &d).unwrap();
        let zero = GalerkinState::new(vec![0.0, 0.0], 0.0, 0.01).unwrap();
        assert!((a.theta(&zero, &[0.37]).unwrap() - 0.01f64.powf(-0.3)).abs() < 1e-12);

        // α = 3 with u = 2: θ = 2.01.
        let (p3, d3) = setup(1, 1, 3.0, 2.0);
        let p3 = p3.with_lift(BoundaryLift::new(
            Arc::new(|_, _| 2.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _, o: &mut [f64]| o[0] = 0.0),
        ));
        let a3 = Assembler::new(&p3, &d3).unwrap();
        let s3 = GalerkinState::new(vec![0.0], 0.0, 0.01).unwrap();
        assert!((a3.theta(&s3, &[0.5]).unwrap() - 2.01).abs() < 1e-12);
    }

    #[test]
    fn mass_derivative_matches_finite_difference() {
        for alpha in [0.5, 1.0, 2.5] {
            let (p, d) = setup(2, 3, alpha, 2.0);
            let a = Assembler::new(&p, &d).unwrap();
            let data = a.node_data(0.0).unwrap();
            let xi: Vec<f64> = (0..9).map(|k| (k as f64 * 1.3).cos()).collect();
            let rate: Vec<f64> = (0..9).map(|k| (k as f64 * 0.4).sin()).collect();
            let eps = 0.05;
            let exact = a.mass_derivative(&a.fields(&xi, &data), eps, &rate);
            let h = 1e-6;
            for k in 0..9 {
                let mut up = xi.clone();
                let mut down = xi.clone();
                up[k] += h;
                down[k] -= h;
                let fu = a.mass(&a.fields(&up, &data), eps).mul_vec(&rate);
                let fd = a.mass(&a.fields(&down, &data), eps).mul_vec(&rate);
                for m in 0..9 {
                    let fdiff = (fu[m] - fd[m]) / (2.0 * h);
                    assert!((exact[(m, k)] - fdiff).abs() < 1e-5, "alpha {alpha} ({m},{k})");
                }
            }
        }
    }

    #[test]
    fn mass_is_identity_for_alpha_one() {
        let (p, d) = setup(2, 4, 1.0, 2.0);
        let a = Assembler::new(&p, &d).unwrap();
        let xi: Vec<f64> = (0..16).map(|k| (k as f64 * 0.7).sin()).collect();
        let f = a.assemble_f(&GalerkinState::new(xi, 0.3, 1e-3).unwrap()).unwrap();
        assert!(f.max_abs_diff(&Matrix::identity(16)) < 1e-10);
    }

    #[test]
    fn mass_single_mode_closed_form() {
        for alpha in [0.3, 0.5, 2.0, 3.0] {
            let (p, d) = setup(1, 1, alpha, 2.0);
            let a = Assembler::new(&p, &d).unwrap();
            let eps = 0.05;
            let f = a.assemble_f(&GalerkinState::new(vec![0.0], 0.0, eps).unwrap()).unwrap();
            let expected = alpha * eps.powf(alpha - 1.0);
            assert!((f[(0, 0)] - expected).abs() < 1e-12 * expected, "alpha {alpha}");
        }
    }

    #[test]
    fn lift_load_examples() {
        let (p, d) = setup(1, 3, 0.5, 2.0);
        let a = Assembler::new(&p, &d).unwrap();
        let s = GalerkinState::new(vec![0.1, 0.2, 0.3], 0.4, 0.01).unwrap();
        assert!(a.assemble_k(&s).unwrap().iter().all(|&v| v == 0.0));

        // α = 1, ∂_t g ≡ 1: K_m = ∫ v_m.
        let (p1, d1) = setup(1, 3, 1.0, 2.0);
        let p1 = p1.with_lift(BoundaryLift::new(
            Arc::new(|_, t| t),
            Arc::new(|_, _| 1.0),
            Arc::new(|_, _, o: &mut [f64]| o[0] = 0.0),
        ));
        let a1 = Assembler::new(&p1, &d1).unwrap();
        let k = a1.assemble_k(&s).unwrap();
        for (i, km) in k.iter().enumerate() {
            let m = (i + 1) as f64;
            let exact = if (i + 1) % 2 == 1 { 2.0 * SQRT_2 / (m * PI) } else { 0.0 };
            assert!((km - exact).abs() < 1e-12);
        }

        // α = 0.5, g = t, ξ = 0: K₁ = 0.5 (t+ε)^{-1/2} · 2√2/π.
        let (p5, d5) = setup(1, 1, 0.5, 2.0);
        let p5 = p5.with_lift(BoundaryLift::with_numeric_derivatives(Arc::new(|_, t| t)));
        let a5 = Assembler::new(&p5, &d5).unwrap();
        let (t, eps) = (0.3, 0.01);
        let k = a5.assemble_k(&GalerkinState::new(vec![0.0], t, eps).unwrap()).unwrap();
        let exact = 0.5 * (t + eps).powf(-0.5) * 2.0 * SQRT_2 / PI;
        assert!((k[0] - exact).abs() < 1e-10, "{} vs {exact}", k[0]);
    }

    #[test]
    fn flux_load_is_spectral_stiffness_for_p_two() {
        let domain = BoxDomain::new(vec![0.0, -1.0], vec![2.0, 0.5]).unwrap();
        let problem = ProblemData::new(
            domain.clone(),
            1.0,
            Exponents::new(1.0, vec![2.0, 2.0]).unwrap(),
            FieldSpec::model(&[2.0, 2.0]),
        )
        .unwrap();
        let disc = Discretization::new(GalerkinBasis::new(domain, 5).unwrap(), None).unwrap();
        let a = Assembler::new(&problem, &disc).unwrap();
        let xi: Vec<f64> = (0..25).map(|k| ((k * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let g = a.assemble_g(&GalerkinState::new(xi.clone(), 0.0, 0.1).unwrap()).unwrap();
        for k in 0..25 {
            let exact = disc.basis().eigenvalue(k) * xi[k];
            assert!((g[k] - exact).abs() < 1e-8 * (1.0 + exact.abs()), "mode {k}");
        }
        let zero = a.assemble_g(&GalerkinState::new(vec![0.0; 25], 0.0, 0.1).unwrap()).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn source_load_examples() {
        let (p, d) = setup(1, 4, 1.0, 2.0);
        let a = Assembler::new(&p, &d).unwrap();
        assert!(a.assemble_j(0.5).unwrap().iter().all(|&v| v == 0.0));
        let p1 = p.clone().with_source(Arc::new(|_, _| 1.0), true);
        let j = Assembler::new(&p1, &d).unwrap().assemble_j(0.0).unwrap();
        assert!((j[0] - 2.0 * SQRT_2 / PI).abs() < 1e-13);
        let basis = d.basis().clone();
        let p3 = p.with_source(Arc::new(move |x, _| basis.eval_modes(x).unwrap()[2]), true);
        let j3 = Assembler::new(&p3, &d).unwrap().assemble_j(0.0).unwrap();
        for (k, v) in j3.iter().enumerate() {
            assert!((v - if k == 2 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_rhs_solves_the_system() {
        let (p, d) = setup(2, 3, 0.5, 1.8);
        let p = p
            .with_source(Arc::new(|x, _| x[0] - x[1] * x[1]), true)
            .with_lift(BoundaryLift::with_numeric_derivatives(Arc::new(|x, t| {
                0.5 + x[0] * t
            })));
        let a = Assembler::new(&p, &d).unwrap();
        let xi: Vec<f64> = (0..9).map(|k| 0.3 * (k as f64).cos()).collect();
        let s = GalerkinState::new(xi, 0.25, 0.01).unwrap();
        let h = a.reduced_rhs(&s).unwrap();
        let f = a.assemble_f(&s).unwrap();
        let (j, k, g) = (a.assemble_j(0.25).unwrap(), a.assemble_k(&s).unwrap(), a.assemble_g(&s).unwrap());
        let fh = f.mul_vec(&h);
        let scale = j.iter().chain(&k).chain(&g).fold(0.0f64, |m, v| m.max(v.abs()));
        for m in 0..9 {
            assert!((fh[m] - (j[m] - k[m] - g[m])).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn reduced_rhs_heat_case_is_spectral_ode() {
        let (p, d) = setup(1, 6, 1.0, 2.0);
        let p = p.with_source(Arc::new(|x, _| x[0]), true);
        let a = Assembler::new(&p, &d).unwrap();
        let xi = vec![1.0, -0.5, 0.25, 0.0, 0.1, -0.1];
        let h = a.reduced_rhs(&GalerkinState::new(xi.clone(), 0.0, 0.1).unwrap()).unwrap();
        let j = a.assemble_j(0.0).unwrap();
        for k in 0..6 {
            let lam = ((k + 1) as f64 * PI).powi(2);
            assert!((h[k] - (-lam * xi[k] + j[k])).abs() < 1e-8 * lam);
        }
    }
}
