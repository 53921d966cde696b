//! Checks built on solved trajectories: the energy estimate, comparison and
//! uniqueness, weak-form residuals, manufactured-solution errors and the
//! discrete energy identity.

pub mod comparison;
pub mod energy;
pub mod identity;
pub mod mms;
pub mod weak;

pub use comparison::{
    check_comparison, comparison_preconditions, default_tolerance, uniqueness_check,
    ComparisonReport, ComparisonTrial, PreconditionSummary, UniquenessReport, LATTICE_EVERY,
    LATTICE_PER_DIM,
};
pub use energy::{energy_report, EnergyReport};
pub use identity::{discrete_energy_identity, IdentityReport, IdentityStep};
pub use mms::{manufactured_error, ErrorNorms, ManufacturedSolution};
pub use weak::{residual_csv_rows, weak_residual, TimeCutoff, WeakResidualRow};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{Exponents, FieldSpec, ProblemData};
    use crate::basis::BoxDomain;
    use crate::error::Error;
    use crate::solver::{discretize, solve_cauchy_dirichlet, EpsilonSchedule, SolutionTrajectory};
    use crate::timestep::StepperConfig;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn heat(dim: usize, horizon: f64) -> ProblemData<f64> {
        ProblemData::new(
            BoxDomain::unit(dim).unwrap(),
            horizon,
            Exponents::new(1.0, vec![2.0; dim]).unwrap(),
            FieldSpec::model(&vec![2.0; dim]),
        )
        .unwrap()
        .with_initial(Arc::new(|x: &[f64]| x.iter().map(|&v| (PI * v).sin()).product()))
    }

    fn solve(problem: &ProblemData<f64>, m: usize, dt: f64, eps: f64) -> SolutionTrajectory<f64> {
        let disc = discretize(problem, m, None).unwrap();
        let sched = EpsilonSchedule::new(vec![eps]).unwrap();
        let run = solve_cauchy_dirichlet(problem, disc, &sched, &StepperConfig::with_dt(dt).unwrap()).unwrap();
        assert!(run.is_complete());
        run.trajectories.into_iter().next().unwrap()
    }

    fn zero_problem() -> ProblemData<f64> {
        ProblemData::new(
            BoxDomain::unit(2).unwrap(),
            0.02,
            Exponents::new(0.5, vec![1.8, 2.4]).unwrap(),
            FieldSpec::model(&[1.8, 2.4]),
        )
        .unwrap()
    }

    #[test]
    fn zero_solution_reports_zero() {
        let traj = solve(&zero_problem(), 3, 0.01, 0.01);
        let e = energy_report(&traj).unwrap();
        assert_eq!(e.lhs(), 0.0);
        assert_eq!(e.ratio, 0.0);
        assert!((e.volume_term - 1.0).abs() < 1e-15);

        let cut = [TimeCutoff::new(0.0, 0.02, 0.005).unwrap()];
        for row in weak_residual(&traj, 9, &cut).unwrap() {
            assert_eq!(row.residual, 0.0);
        }
        let id = discrete_energy_identity(&traj).unwrap();
        assert_eq!(id.cumulative_gap, 0.0);
        assert_eq!(id.steps.len(), 2);

        let own = traj.clone();
        let err = manufactured_error(&traj, |x, t| own.evaluate(x, t).unwrap()).unwrap();
        assert!(err.sup_lp < 1e-14 && err.space_time_lp < 1e-14);
    }

    #[test]
    fn heat_energy_starts_at_initial_norm_and_decays() {
        let traj = solve(&heat(2, 0.05), 4, 2e-3, 0.1);
        let e = energy_report(&traj).unwrap();
        assert!((e.slice_norms[0] - 0.25).abs() < 1e-12);
        assert_eq!(e.sup_time, 0.0);
        assert!(e.sup_term_nonincreasing(0.0));
        assert!((e.initial_term - 0.25).abs() < 1e-12);
        assert!(e.ratio > 0.0 && e.ratio < 10.0);
        // ∬|∂_1 u|² = (1 − e^{−4π²T})/16 for the exact solution.
        let exact = (1.0 - (-4.0 * PI * PI * 0.05f64).exp()) / 16.0;
        assert!((e.gradient_terms[0] - exact).abs() / exact < 0.05, "{} {exact}", e.gradient_terms[0]);
    }

    #[test]
    fn cutoff_shape() {
        let c = TimeCutoff::new(0.2f64, 1.0, 0.1).unwrap();
        assert_eq!(c.value(0.1), 0.0);
        assert!((c.value(0.25) - 0.5).abs() < 1e-12);
        assert_eq!(c.value(0.5), 1.0);
        assert!((c.value(0.95) - 0.5).abs() < 1e-12);
        assert_eq!(c.value(1.2), 0.0);
        assert!((c.derivative(0.25) - 10.0).abs() < 1e-12);
        assert!((c.derivative(0.95) + 10.0).abs() < 1e-12);
        assert!(TimeCutoff::new(0.5, 0.4, 0.01).is_err());
        assert!(TimeCutoff::new(0.0, 0.1, 0.06).is_err());
    }

    #[test]
    fn heat_weak_residual_shrinks_under_refinement() {
        let cut = [
            TimeCutoff::new(0.0, 0.05, 0.01).unwrap(),
            TimeCutoff::new(0.01, 0.04, 0.005).unwrap(),
        ];
        let p = heat(2, 0.05);
        let worst = |m, dt| {
            let traj = solve(&p, m, dt, 0.1);
            weak_residual(&traj, 4, &cut)
                .unwrap()
                .iter()
                .map(|r| r.residual.abs())
                .fold(0.0, f64::max)
        };
        let coarse = worst(3, 5e-3);
        let fine = worst(6, 2.5e-3);
        assert!(fine < 0.7 * coarse, "{coarse} {fine}");
    }

    #[test]
    fn heat_identity_gap_is_first_order() {
        let p = heat(2, 0.05);
        let gap = |dt| discrete_energy_identity(&solve(&p, 4, dt, 0.1)).unwrap().cumulative_gap.abs();
        let (a, b) = (gap(5e-3), gap(2.5e-3));
        let order = (a / b).log2();
        assert!(order > 0.8 && order < 1.3, "{a} {b} {order}");
    }

    #[test]
    fn model_identity_gap_shrinks_with_dt() {
        let p = zero_problem()
            .with_initial(Arc::new(|x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin()));
        let gap = |dt| discrete_energy_identity(&solve(&p, 3, dt, 0.01)).unwrap();
        let (a, b) = (gap(4e-3), gap(2e-3));
        assert!(b.cumulative_gap.abs() < 0.75 * a.cumulative_gap.abs(), "{a:?} {b:?}");
        assert!(a.cumulative_gap.abs() < 0.05 * a.scale);
    }

    #[test]
    fn heat_source_of_exact_solution_vanishes() {
        let exact = ManufacturedSolution::new(
            Arc::new(|x: &[f64], t: f64| (-2.0 * PI * PI * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin()),
            1.0,
        )
        .unwrap();
        let f = exact.source(&FieldSpec::model(&[2.0, 2.0]), 1.0);
        for x in [[0.3, 0.6], [0.5, 0.5], [0.91, 0.07]] {
            assert!(f(&x, 0.03).abs() < 1e-5, "{}", f(&x, 0.03));
        }
        let mut g = [0.0; 2];
        exact.gradient(&[0.25, 0.5], 0.0, &mut g);
        assert!((g[0] - PI * (PI * 0.25).cos()).abs() < 1e-9);
    }

    #[test]
    fn heat_oracle_error_is_small() {
        let traj = solve(&heat(2, 0.05), 4, 1e-3, 0.1);
        let err = manufactured_error(&traj, |x, t| {
            (-2.0 * PI * PI * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin()
        })
        .unwrap();
        assert!(err.sup_l2 < 2e-3, "{err:?}");
    }

    #[test]
    fn nonnegativity_trial_passes() {
        let trial = ComparisonTrial::generate(3, 2, true);
        let (v, w) = trial.problems(1.0, &[2.0, 2.0], 0.05).unwrap();
        let tv = solve(&v, 4, 5e-3, 0.1);
        let tw = solve(&w, 4, 5e-3, 0.1);
        let r = check_comparison(&tv, &tw, 16, 2, default_tolerance(5e-3)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(!r.preconditions.exploratory);
        assert_eq!(r.samples, 16 * 16 * 6);
    }

    #[test]
    fn swapped_initial_data_fails_the_audit() {
        let trial = ComparisonTrial::generate(5, 2, false);
        let (v, w) = trial.problems(0.5, &[1.8, 2.4], 0.05).unwrap();
        let disc = discretize(&w, 3, None).unwrap();
        assert!(comparison_preconditions(&v, &w, disc.quadrature(), 5).is_ok());
        match comparison_preconditions(&w, &v, disc.quadrature(), 5) {
            Err(Error::Audit(_)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uniqueness_needs_zero_boundary() {
        let trial = ComparisonTrial::generate(5, 2, false);
        let (v, w) = trial.problems(1.0, &[2.0, 2.0], 0.02).unwrap();
        let a = solve(&v, 3, 0.01, 0.1);
        let b = solve(&v, 3, 0.01, 0.1);
        let r = uniqueness_check(&a, &b, 1e-6).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.passed());
        let c = solve(&w, 3, 0.01, 0.1);
        assert!(uniqueness_check(&c, &c, 1.0).is_err());
    }
}
