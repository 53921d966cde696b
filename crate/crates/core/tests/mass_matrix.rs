//! Spectral bounds of the regularized mass matrix against nalgebra's
//! symmetric eigensolver.

use dnaniso::assembly::{Assembler, Discretization, Exponents, FieldSpec, GalerkinState, ProblemData};
use dnaniso::basis::{BoxDomain, GalerkinBasis};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(alpha: f64, m: usize) -> (ProblemData<f64>, Discretization<f64>) {
    let d = BoxDomain::unit(2).unwrap();
    let p = ProblemData::new(
        d.clone(),
        1.0,
        Exponents::new(alpha, vec![1.8, 2.4]).unwrap(),
        FieldSpec::model(&[1.8, 2.4]),
    )
    .unwrap();
    let disc = Discretization::new(GalerkinBasis::new(d, m).unwrap(), None).unwrap();
    (p, disc)
}

fn eigen_range(f: &dnaniso::linalg::Matrix<f64>) -> (f64, f64) {
    let n = f.dim();
    let m = DMatrix::from_row_slice(n, n, f.as_slice());
    let e = m.symmetric_eigenvalues();
    (e.min(), e.max())
}

/// `F = Vᵀ W D V` with `V` orthonormal under the quadrature, so the
/// eigenvalues lie between the extreme node weights `α(|u|+ε)^{α−1}`.
fn weight_range(asm: &Assembler<'_, f64>, s: &GalerkinState<f64>, alpha: f64) -> (f64, f64) {
    let data = asm.node_data(s.t).unwrap();
    let u = asm.fields(&s.xi, &data).u;
    u.iter()
        .map(|&v| alpha * (v.abs() + s.epsilon).powf(alpha - 1.0))
        .fold((f64::INFINITY, 0.0), |(lo, hi), w| (lo.min(w), hi.max(w)))
}

#[test]
fn mass_is_spd_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for alpha in [0.5, 1.0, 2.0] {
        let (p, d) = setup(alpha, 3);
        let asm = Assembler::new(&p, &d).unwrap();
        for _ in 0..1000 {
            let scale = 10f64.powf(rng.gen_range(-3.0..1.0));
            let xi: Vec<f64> = (0..9).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
            let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
            let s = GalerkinState::new(xi, 0.0, eps).unwrap();
            let f = asm.assemble_f(&s).unwrap();
            assert!(f.cholesky().is_ok(), "alpha {alpha}");
            assert!(f.max_abs_diff(&f.transpose()) == 0.0);
        }
    }
}

#[test]
fn mass_eigenvalues_lie_between_node_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for alpha in [0.25, 0.5, 1.0, 2.0, 3.0] {
        let (p, d) = setup(alpha, 4);
        let asm = Assembler::new(&p, &d).unwrap();
        for _ in 0..20 {
            let xi: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = GalerkinState::new(xi, 0.0, 1e-3).unwrap();
            let (lo, hi) = eigen_range(&asm.assemble_f(&s).unwrap());
            let (wlo, whi) = weight_range(&asm, &s, alpha);
            assert!(lo >= wlo * (1.0 - 1e-9), "alpha {alpha}: {lo} < {wlo}");
            assert!(hi <= whi * (1.0 + 1e-9), "alpha {alpha}: {hi} > {whi}");
            if alpha >= 1.0 {
                assert!(lo >= alpha * 1e-3f64.powf(alpha - 1.0) * (1.0 - 1e-9));
            }
        }
    }
}

#[test]
fn heat_stiffness_matches_spectrum() {
    let d = BoxDomain::new(vec![0.0, -1.0], vec![2.0, 0.5]).unwrap();
    let p = ProblemData::new(
        d.clone(),
        1.0,
        Exponents::new(1.0, vec![2.0, 2.0]).unwrap(),
        FieldSpec::model(&[2.0, 2.0]),
    )
    .unwrap();
    let disc = Discretization::new(GalerkinBasis::new(d, 5).unwrap(), None).unwrap();
    let asm = Assembler::new(&p, &disc).unwrap();
    for k in 0..25 {
        let mut xi = vec![0.0; 25];
        xi[k] = 1.0;
        let g = asm.assemble_g(&GalerkinState::new(xi, 0.0, 0.1).unwrap()).unwrap();
        let lambda: f64 = disc.basis().eigenvalue(k);
        for (m, &v) in g.iter().enumerate() {
            let expected = if m == k { lambda } else { 0.0 };
            assert!((v - expected).abs() < 1e-8 * (1.0 + lambda), "{k} {m} {v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flux_load_obeys_growth(xi in proptest::collection::vec(-2.0f64..2.0, 9)) {
        // |G_m| ≤ Σ_i ∫ |∂_i u|^{p_i−1} |∂_i v_m|, the model growth bound.
        let (p, d) = setup(0.5, 3);
        let asm = Assembler::new(&p, &d).unwrap();
        let s = GalerkinState::new(xi.clone(), 0.0, 0.01).unwrap();
        let g = asm.assemble_g(&s).unwrap();
        let data = asm.node_data(0.0).unwrap();
        let fields = asm.fields(&xi, &data);
        let table = d.table();
        let exps = [1.8, 2.4];
        for m in 0..9 {
            let mut bound = 0.0f64;
            for q in 0..table.nodes() {
                let grads = table.grads(q);
                for i in 0..2 {
                    bound += table.weight(q)
                        * fields.grad_u[q * 2 + i].abs().powf(exps[i] - 1.0)
                        * grads[m * 2 + i].abs();
                }
            }
            prop_assert!(g[m].abs() <= bound * (1.0 + 1e-12) + 1e-15);
        }
    }
}
