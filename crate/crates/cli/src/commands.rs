//! The subcommands. Each returns `Ok` when every requested check passes.

use dnaniso::algebra::{lemma_sweep, Alpha};
use dnaniso::assembly::{structure_condition_audit, AuditRegion, ProblemData};
use dnaniso::basis::BoxDomain;
use dnaniso::solver::{
    discretize, solve_cauchy_dirichlet, solve_cauchy_expanding, ScheduleRun, SolutionTrajectory,
};
use dnaniso::timestep::StepperConfig;
use dnaniso::verification::{
    check_comparison, comparison_preconditions, default_tolerance, discrete_energy_identity,
    energy_report, manufactured_error, residual_csv_rows, weak_residual, ComparisonTrial,
    ManufacturedSolution, TimeCutoff,
};
use dnaniso::Error;

use crate::config::{field_error, ProblemConfig, RunConfig};
use crate::output::{RunDir, Summary};
use crate::Failure;

fn require<'a>(block: &'a Option<ProblemConfig>, name: &str) -> Result<&'a ProblemConfig, Failure> {
    block
        .as_ref()
        .ok_or_else(|| Failure::Input(format!("config has no [{name}] block")))
}

fn write_steps(run: &RunDir, name: &str, traj: &SolutionTrajectory<f64>) -> Result<(), Failure> {
    let rows: Vec<String> = traj
        .records()
        .iter()
        .map(|r| format!("{},{:e},{},{}", r.t, r.residual, r.newton_iters, r.halvings))
        .collect();
    run.write_csv(name, "t,residual,newton_iters,halvings", &rows)
}

fn write_trajectories(run: &RunDir, cfg: &RunConfig, sched: &ScheduleRun<f64>) -> Result<(), Failure> {
    for (k, traj) in sched.trajectories.iter().enumerate() {
        let snap = traj
            .lattice_values(cfg.output.lattice_per_dim, cfg.output.lattice_every)
            .map_err(Failure::from_core)?;
        let dim = traj.problem().domain().dim();
        let cols: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        run.with_meta("epsilon", traj.epsilon()).write_csv(
            &format!("trajectory_eps{}.csv", k + 1),
            &format!("t,{},u", cols.join(",")),
            &snap.csv_rows(),
        )?;
        if run.verbose {
            write_steps(run, &format!("steps_eps{}.csv", k + 1), traj)?;
        }
    }
    Ok(())
}

fn solve_schedule(
    problem: &ProblemData<f64>,
    cfg: &RunConfig,
    modes: usize,
    stepper: &StepperConfig<f64>,
) -> Result<ScheduleRun<f64>, Failure> {
    let disc = discretize(problem, modes, cfg.discretization.quadrature_order)
        .map_err(|e| field_error("discretization", e))?;
    solve_cauchy_dirichlet(problem, disc, &cfg.schedule.build()?, stepper).map_err(Failure::from_core)
}

fn finest_or_fail(sched: &ScheduleRun<f64>) -> Result<&SolutionTrajectory<f64>, Failure> {
    if let Some((eps, e)) = &sched.failure {
        return Err(Failure::Solver(format!("epsilon = {eps}: {e}")));
    }
    sched
        .finest()
        .ok_or_else(|| Failure::Solver("no epsilon level completed".into()))
}

pub fn solve(cfg: &RunConfig, run: &RunDir) -> Result<(), Failure> {
    if cfg.expanding.is_some() {
        return solve_expanding(cfg, run);
    }
    let pc = require(&cfg.problem, "problem")?;
    let problem = pc.build("problem")?;
    let exact = pc.exact("problem")?;
    let stepper = cfg.discretization.stepper()?;
    let checks = &cfg.checks;
    let mut summary = Summary::default();

    let sched = solve_schedule(&problem, cfg, cfg.discretization.modes_per_dim, &stepper)?;
    write_trajectories(run, cfg, &sched)?;
    let rows: Vec<String> = sched
        .distances
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let lv = cfg.schedule.epsilon.as_slice();
            format!("{},{},{d}", lv[k], lv[k + 1])
        })
        .collect();
    run.write_csv("distances.csv", "epsilon_from,epsilon_to,distance", &rows)?;
    let traj = finest_or_fail(&sched)?;

    if checks.energy {
        let mut rows = Vec::new();
        let mut lhs = Vec::new();
        for t in &sched.trajectories {
            let e = energy_report(t).map_err(Failure::from_core)?;
            rows.extend(e.csv_rows().into_iter().map(|r| format!("{},{r}", t.epsilon())));
            lhs.push(e.lhs());
        }
        run.write_csv("energy.csv", "epsilon,quantity,value", &rows)?;
        summary.record("energy_finite", lhs.last().copied().unwrap_or(0.0), "finite", lhs.iter().all(|v| v.is_finite()));
        if let Some(limit) = checks.energy_variation {
            let variation = match lhs.as_slice() {
                [.., a, b] if a.max(*b) > 0.0 => (a - b).abs() / a.max(*b),
                _ => 0.0,
            };
            summary.record("energy_variation", variation, limit, variation <= limit);
        }
        if checks.sup_nonincreasing {
            let e = energy_report(traj).map_err(Failure::from_core)?;
            let ok = e.sup_term_nonincreasing(1e-12);
            summary.record("sup_term_nonincreasing", ok, true, ok);
        }
    }

    if let Some(exact) = &exact {
        let err = manufactured_error(traj, |x, t| exact(x, t)).map_err(Failure::from_core)?;
        run.write_csv(
            "error.csv",
            "epsilon,dt,sup_lp,space_time_lp,sup_l2",
            &[format!("{},{},{},{},{}", traj.epsilon(), stepper.dt, err.sup_lp, err.space_time_lp, err.sup_l2)],
        )?;
        if let Some(tol) = checks.exact_error_tol {
            summary.record("exact_error_sup_l2", err.sup_l2, tol, err.sup_l2 <= tol);
        }
        if let Some(min_order) = checks.dt_refinement_order {
            let half = StepperConfig {
                dt: stepper.dt / 2.0,
                dt_min: stepper.dt_min / 2.0,
                ..stepper
            };
            let fine = solve_schedule(&problem, cfg, cfg.discretization.modes_per_dim, &half)?;
            let fine = finest_or_fail(&fine)?;
            let err2 = manufactured_error(fine, |x, t| exact(x, t)).map_err(Failure::from_core)?;
            let order = (err.sup_l2 / err2.sup_l2).log2();
            summary.record("dt_refinement_order", order, min_order, order >= min_order);
        }
    } else if checks.exact_error_tol.is_some() || checks.dt_refinement_order.is_some() {
        return Err(Failure::Input("checks need problem.exact".into()));
    }

    if checks.identity {
        let id = discrete_energy_identity(traj).map_err(Failure::from_core)?;
        run.with_meta("cumulative_gap", id.cumulative_gap)
            .write_csv("identity.csv", "t,lhs,rhs,gap", &id.csv_rows())?;
    }
    if let Some(w) = &checks.weak_residual {
        let cutoffs = w
            .cutoffs
            .iter()
            .map(|c| TimeCutoff::new(c[0], c[1], c[2]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| field_error("checks.weak_residual.cutoffs", e))?;
        let rows = weak_residual(traj, w.test_modes, &cutoffs).map_err(|e| field_error("checks.weak_residual", e))?;
        run.write_csv("weak_residual.csv", "mode,t1,t2,eps,residual,scale", &residual_csv_rows(&rows))?;
    }
    summary.finish(run)
}

fn solve_expanding(cfg: &RunConfig, run: &RunDir) -> Result<(), Failure> {
    let ex = cfg.expanding.as_ref().expect("checked by caller");
    let pc = require(&cfg.problem, "problem")?;
    pc.build("problem")?;
    let stepper = cfg.discretization.stepper()?;
    let sched = cfg.schedule.build()?;
    let out = solve_cauchy_expanding(
        |d: BoxDomain<f64>| {
            pc.build_on("problem", Some(d))
                .map_err(|f| Error::InvalidParameter(f.message().to_string()))
        },
        pc.dim(),
        &ex.half_widths,
        &ex.modes_per_dim,
        &sched,
        &stepper,
        ex.lattice_per_dim,
    )
    .map_err(Failure::from_core)?;
    let rows: Vec<String> = (0..out.half_widths.len())
        .map(|k| {
            let diff = if k == 0 { String::new() } else { out.common_differences[k - 1].to_string() };
            format!("{},{},{}", out.half_widths[k], out.energies[k], diff)
        })
        .collect();
    run.write_csv("expanding.csv", "half_width,energy,common_difference", &rows)?;
    let mut summary = Summary::default();
    let (lo, hi) = out
        .energies
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    summary.record("energy_spread", spread, ex.energy_tol, spread <= ex.energy_tol);
    let decreasing = out.common_differences.windows(2).all(|w| w[1] <= w[0]);
    summary.record("common_difference_decreasing", decreasing, true, decreasing);
    summary.finish(run)
}

pub fn compare(cfg: &RunConfig, run: &RunDir, seed: u64) -> Result<(), Failure> {
    let cc = cfg.comparison.clone().unwrap_or(crate::config::ComparisonConfig {
        tol: None,
        lattice_per_dim: 64,
        lattice_every: 10,
        family: None,
    });
    let stepper = cfg.discretization.stepper()?;
    let tol = cc.tol.unwrap_or_else(|| default_tolerance(stepper.dt));
    let modes = cfg.discretization.modes_per_dim;

    let pairs: Vec<(String, ProblemData<f64>, ProblemData<f64>)> = match &cc.family {
        Some(fam) => (0..fam.trials as u64)
            .map(|i| {
                let trial = ComparisonTrial::generate(seed + i, fam.p.len(), fam.nonnegativity);
                let (v, w) = trial
                    .problems(fam.alpha, &fam.p, fam.horizon)
                    .map_err(|e| field_error("comparison.family", e))?;
                Ok((format!("{}", seed + i), v, w))
            })
            .collect::<Result<_, Failure>>()?,
        None => {
            let v = require(&cfg.problem_v, "problem_v")?.build("problem_v")?;
            let w = require(&cfg.problem_w, "problem_w")?.build("problem_w")?;
            vec![("pair".into(), v, w)]
        }
    };

    // Every precondition is audited before anything is solved.
    for (label, v, w) in &pairs {
        let disc = discretize(w, modes, cfg.discretization.quadrature_order)
            .map_err(|e| field_error("discretization", e))?;
        comparison_preconditions(v, w, disc.quadrature(), 11)
            .map_err(|e| Failure::Input(format!("trial {label}: {e}")))?;
    }

    let mut rows = Vec::new();
    let mut summary = Summary::default();
    for (label, v, w) in &pairs {
        let sv = solve_schedule(v, cfg, modes, &stepper)?;
        let sw = solve_schedule(w, cfg, modes, &stepper)?;
        let (tv, tw) = (finest_or_fail(&sv)?, finest_or_fail(&sw)?);
        let r = check_comparison(tv, tw, cc.lattice_per_dim, cc.lattice_every, tol).map_err(Failure::from_core)?;
        run.log(&format!("trial {label}: min_gap {:e}", r.min_gap));
        rows.push(format!(
            "{label},{},{},{},{},{},{}",
            r.min_gap,
            r.tol,
            r.violation_count,
            r.samples,
            r.preconditions.exploratory,
            r.passed()
        ));
        summary.record(&format!("comparison_{label}"), r.min_gap, -r.tol, r.passed());
    }
    run.with_meta("lattice", format!("{}^d x every {} steps", cc.lattice_per_dim, cc.lattice_every))
        .write_csv("comparison.csv", "trial,min_gap,tol,violations,samples,exploratory,passed", &rows)?;
    summary.finish(run)
}

pub fn lemmas(alphas: &[f64], samples: usize, seed: u64, run: &RunDir) -> Result<(), Failure> {
    let mut rows = Vec::new();
    let mut summary = Summary::default();
    for &a in alphas {
        let alpha = Alpha::new(a).map_err(|e| field_error("--alphas", e))?;
        let report = lemma_sweep(alpha, samples, seed);
        rows.extend(report.csv_rows());
        summary.record(&format!("lemmas_alpha_{a}"), report.all_pass(), true, report.all_pass());
    }
    run.write_csv("lemmas.csv", "lemma_id,alpha,samples,worst_ratio,pass", &rows)?;
    summary.finish(run)
}

pub fn mms(cfg: &RunConfig, run: &RunDir) -> Result<(), Failure> {
    let pc = require(&cfg.problem, "problem")?;
    let mc = cfg
        .mms
        .as_ref()
        .ok_or_else(|| Failure::Input("config has no [mms] block".into()))?;
    if mc.modes.len() < 2 || mc.modes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Failure::Input("mms.modes: need at least two increasing entries".into()));
    }
    let (exact, _) = crate::config::space_time_fn(&mc.exact, pc.dim(), "mms.exact")?;
    let ms = ManufacturedSolution::new(exact.clone(), mc.scale).map_err(|e| field_error("mms.scale", e))?;
    let problem = ms.problem(pc.build("problem")?);
    let stepper = cfg.discretization.stepper()?;

    let mut errors = Vec::new();
    for &m in &mc.modes {
        let sched = solve_schedule(&problem, cfg, m, &stepper)?;
        let traj = finest_or_fail(&sched)?;
        let err = manufactured_error(traj, |x, t| exact(x, t)).map_err(Failure::from_core)?;
        run.log(&format!("modes {m}: sup L^(a+1) error {:e}", err.sup_lp));
        errors.push(err);
    }
    let all_zero = errors.iter().all(|e| e.sup_lp <= 1e-12);
    let mut rows = Vec::new();
    let mut summary = Summary::default();
    for (k, (m, e)) in mc.modes.iter().zip(&errors).enumerate() {
        let ratio = if k == 0 { None } else { Some(errors[k - 1].sup_lp / e.sup_lp) };
        rows.push(format!(
            "{m},{},{},{},{}",
            e.sup_lp,
            e.space_time_lp,
            e.sup_l2,
            ratio.map_or(String::new(), |r| r.to_string())
        ));
        if let (Some(r), false) = (ratio, all_zero) {
            summary.record(&format!("ratio_modes_{m}"), r, mc.min_ratio, r >= mc.min_ratio);
        }
    }
    if all_zero {
        summary.record("zero_errors", errors.last().map_or(0.0, |e| e.sup_lp), 1e-12, true);
    }
    run.write_csv("mms.csv", "modes,sup_lp,space_time_lp,sup_l2,ratio", &rows)?;
    summary.finish(run)
}

pub fn audit(cfg: &RunConfig, samples: usize, seed: u64, run: &RunDir) -> Result<(), Failure> {
    let blocks: Vec<(&str, &ProblemConfig)> = [
        ("problem", &cfg.problem),
        ("problem_v", &cfg.problem_v),
        ("problem_w", &cfg.problem_w),
    ]
    .into_iter()
    .filter_map(|(n, b)| b.as_ref().map(|b| (n, b)))
    .collect();
    if blocks.is_empty() {
        return Err(Failure::Input("config has no problem block to audit".into()));
    }
    let mut rows = Vec::new();
    let mut inconsistent = Vec::new();
    for (name, pc) in &blocks {
        let problem = pc.build(name)?;
        let region = AuditRegion {
            domain: problem.domain().clone(),
            horizon: problem.horizon(),
        };
        let report = structure_condition_audit(problem.field(), problem.exponents(), &region, samples, seed);
        rows.extend(report.csv_rows().into_iter().map(|r| format!("{name},{r}")));
        if !report.declared_consistent() {
            inconsistent.push(name.to_string());
        }
    }
    let mut precondition = None;
    if let (Some(v), Some(w)) = (&cfg.problem_v, &cfg.problem_w) {
        let (v, w) = (v.build("problem_v")?, w.build("problem_w")?);
        let disc = discretize(&w, cfg.discretization.modes_per_dim, cfg.discretization.quadrature_order)
            .map_err(|e| field_error("discretization", e))?;
        precondition = Some(comparison_preconditions(&v, &w, disc.quadrature(), 11));
    }
    run.write_csv("audit.csv", "block,condition,declared,samples,violations,worst_margin", &rows)?;
    if let Some(p) = &precondition {
        let row = match p {
            Ok(s) => format!("passed,{},{},{},{}", s.initial_nodes, s.source_samples, s.boundary_samples, s.exploratory),
            Err(e) => format!("failed,,,,,{}", e.to_string().replace(',', ";")),
        };
        run.write_csv(
            "comparison_audit.csv",
            "status,initial_nodes,source_samples,boundary_samples,exploratory,reason",
            &[row],
        )?;
    }
    if !inconsistent.is_empty() {
        return Err(Failure::Input(format!(
            "declared field properties contradicted in {}",
            inconsistent.join(", ")
        )));
    }
    if let Some(Err(e)) = precondition {
        return Err(Failure::Input(e.to_string()));
    }
    Ok(())
}
