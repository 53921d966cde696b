//! TOML run configuration and its translation into solver objects.

use std::path::Path;
use std::sync::Arc;

use dnaniso::assembly::{
    field_variables, BoundaryLift, ExprField, Exponents, FieldFlags, FieldSpec, ProblemData,
    SpaceFn, SpaceTimeFn, VectorField,
};
use dnaniso::basis::BoxDomain;
use dnaniso::expr::Expr;
use dnaniso::solver::EpsilonSchedule;
use dnaniso::timestep::{Scheme, StepperConfig};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<ProblemConfig>,
    pub problem_v: Option<ProblemConfig>,
    pub problem_w: Option<ProblemConfig>,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub comparison: Option<ComparisonConfig>,
    pub mms: Option<MmsConfig>,
    pub expanding: Option<ExpandingConfig>,
}

/// A built-in field name or one expression per component.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum FieldChoice {
    Named(String),
    Components(Vec<String>),
}

impl Default for FieldChoice {
    fn default() -> Self {
        FieldChoice::Named("model".into())
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsConfig {
    #[serde(default)]
    pub time_independent: bool,
    #[serde(default)]
    pub lipschitz_in_u: bool,
    #[serde(default)]
    pub strictly_monotone: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub horizon: f64,
    pub alpha: f64,
    pub p: Vec<f64>,
    #[serde(default)]
    pub field: FieldChoice,
    pub lambda: Option<f64>,
    pub flags: Option<FlagsConfig>,
    pub a_tilde: Option<String>,
    pub b_tilde: Option<String>,
    pub c_tilde: Option<String>,
    #[serde(default = "zero_expr")]
    pub u0: String,
    pub g: Option<String>,
    pub f: Option<String>,
    /// Exact solution for error checks.
    pub exact: Option<String>,
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    #[serde(default = "default_modes")]
    pub modes_per_dim: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub quadrature_order: Option<usize>,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_iters")]
    pub newton_max_iters: usize,
    pub dt_min: Option<f64>,
}

fn default_modes() -> usize {
    8
}
fn default_dt() -> f64 {
    1e-3
}
fn default_scheme() -> String {
    Scheme::ImplicitEuler.name().into()
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_newton_iters() -> usize {
    30
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            modes_per_dim: default_modes(),
            dt: default_dt(),
            quadrature_order: None,
            scheme: default_scheme(),
            newton_tol: default_newton_tol(),
            newton_max_iters: default_newton_iters(),
            dt_min: None,
        }
    }
}

impl DiscretizationConfig {
    pub fn stepper(&self) -> Result<StepperConfig<f64>, Failure> {
        let scheme = Scheme::parse(&self.scheme).map_err(|e| field_error("discretization.scheme", e))?;
        StepperConfig::new(
            self.dt,
            self.newton_tol,
            self.newton_max_iters,
            self.dt_min.unwrap_or(self.dt / 1024.0),
        )
        .map(|s| s.scheme(scheme))
        .map_err(|e| field_error("discretization", e))
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
}

fn default_epsilon() -> Vec<f64> {
    EpsilonSchedule::<f64>::default().levels().to_vec()
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<EpsilonSchedule<f64>, Failure> {
        EpsilonSchedule::new(self.epsilon.clone()).map_err(|e| field_error("schedule.epsilon", e))
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeakConfig {
    pub test_modes: usize,
    /// `[t1, t2, ramp]` triples.
    pub cutoffs: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "yes")]
    pub energy: bool,
    /// Largest relative change of the energy between the last two ε levels.
    pub energy_variation: Option<f64>,
    #[serde(default)]
    pub sup_nonincreasing: bool,
    /// Largest admissible `sup_t L²` error against `problem.exact`.
    pub exact_error_tol: Option<f64>,
    /// Smallest admissible observed order when `dt` is halved.
    pub dt_refinement_order: Option<f64>,
    #[serde(default)]
    pub identity: bool,
    pub weak_residual: Option<WeakConfig>,
}

fn yes() -> bool {
    true
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            energy: true,
            energy_variation: None,
            sup_nonincreasing: false,
            exact_error_tol: None,
            dt_refinement_order: None,
            identity: false,
            weak_residual: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    #[serde(default)]
    pub verbose: bool,
    #[serde(default = "default_snapshot_lattice")]
    pub lattice_per_dim: usize,
    #[serde(default = "default_every")]
    pub lattice_every: usize,
}

fn default_snapshot_lattice() -> usize {
    17
}
fn default_every() -> usize {
    10
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            verbose: false,
            lattice_per_dim: default_snapshot_lattice(),
            lattice_every: default_every(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub trials: usize,
    #[serde(default)]
    pub nonnegativity: bool,
    pub alpha: f64,
    pub p: Vec<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    /// Defaults to `max(10·dt, 1e-6)`.
    pub tol: Option<f64>,
    #[serde(default = "default_comparison_lattice")]
    pub lattice_per_dim: usize,
    #[serde(default = "default_every")]
    pub lattice_every: usize,
    pub family: Option<FamilyConfig>,
}

fn default_comparison_lattice() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MmsConfig {
    pub exact: String,
    #[serde(default = "default_mms_modes")]
    pub modes: Vec<usize>,
    #[serde(default = "default_min_ratio")]
    pub min_ratio: f64,
    /// Length scale of the difference step `1e-4 · scale`.
    #[serde(default = "one")]
    pub scale: f64,
}

fn default_mms_modes() -> Vec<usize> {
    vec![2, 4, 8]
}
fn default_min_ratio() -> f64 {
    1.5
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandingConfig {
    pub half_widths: Vec<f64>,
    pub modes_per_dim: Vec<usize>,
    #[serde(default = "default_expanding_lattice")]
    pub lattice_per_dim: usize,
    /// Largest relative spread of the box energies.
    #[serde(default = "default_energy_spread")]
    pub energy_tol: f64,
}

fn default_expanding_lattice() -> usize {
    9
}
fn default_energy_spread() -> f64 {
    0.01
}

pub fn field_error(field: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{field}: {e}"))
}

/// Reads and parses a config file; TOML errors carry line and column.
pub fn load(path: &Path) -> Result<(RunConfig, String), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let config = parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok((config, text))
}

pub fn parse(text: &str) -> Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn space_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

fn space_time_names(dim: usize) -> Vec<String> {
    let mut n = space_names(dim);
    n.push("t".into());
    n
}

fn compile(src: &str, names: &[String], field: &str) -> Result<Expr, Failure> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Expr::parse(src, &refs).map_err(|e| field_error(field, e))
}

pub fn space_fn(src: &str, dim: usize, field: &str) -> Result<SpaceFn<f64>, Failure> {
    let e = compile(src, &space_names(dim), field)?;
    Ok(Arc::new(move |x: &[f64]| e.eval(x)))
}

pub fn space_time_fn(src: &str, dim: usize, field: &str) -> Result<(SpaceTimeFn<f64>, bool), Failure> {
    let e = compile(src, &space_time_names(dim), field)?;
    let steady = !e.uses("t");
    Ok((
        Arc::new(move |x: &[f64], t: f64| {
            let mut v = [0.0; 4];
            v[..x.len()].copy_from_slice(x);
            v[x.len()] = t;
            e.eval(&v[..=x.len()])
        }),
        steady,
    ))
}

fn is_zero_expr(src: &str) -> bool {
    src.trim().parse::<f64>().is_ok_and(|v| v == 0.0)
}

impl ProblemConfig {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn domain(&self, block: &str) -> Result<BoxDomain<f64>, Failure> {
        let dim = self.dim();
        let lower = self.lower.clone().unwrap_or_else(|| vec![0.0; dim]);
        let upper = self.upper.clone().unwrap_or_else(|| vec![1.0; dim]);
        if lower.len() != dim || upper.len() != dim {
            return Err(Failure::Input(format!(
                "{block}.lower/upper: expected {dim} entries to match p"
            )));
        }
        BoxDomain::new(lower, upper).map_err(|e| field_error(&format!("{block}.lower/upper"), e))
    }

    pub fn field_spec(&self, block: &str) -> Result<FieldSpec<f64>, Failure> {
        let dim = self.dim();
        let spec = match &self.field {
            FieldChoice::Named(name) if name == "model" => FieldSpec::model(&self.p),
            FieldChoice::Named(name) => {
                return Err(Failure::Input(format!(
                    "{block}.field: unknown field '{name}' (use \"model\" or a list of expressions over {})",
                    field_variables(dim).join(", ")
                )))
            }
            FieldChoice::Components(c) => {
                if c.len() != dim {
                    return Err(Failure::Input(format!(
                        "{block}.field: {} components for dimension {dim}",
                        c.len()
                    )));
                }
                let refs: Vec<&str> = c.iter().map(String::as_str).collect();
                let field: Arc<dyn VectorField<f64>> =
                    Arc::new(ExprField::parse(&refs).map_err(|e| field_error(&format!("{block}.field"), e))?);
                let lambda = self.lambda.unwrap_or(1.0);
                let flags = self.flags.unwrap_or(FlagsConfig {
                    time_independent: false,
                    lipschitz_in_u: false,
                    strictly_monotone: false,
                });
                FieldSpec::custom("expression", field, lambda)
                    .map_err(|e| field_error(&format!("{block}.lambda"), e))?
                    .with_flags(FieldFlags {
                        time_independent: flags.time_independent,
                        lipschitz_in_u: flags.lipschitz_in_u,
                        strictly_monotone: flags.strictly_monotone,
                    })
            }
        };
        let mut spec = spec;
        if let Some(a) = &self.a_tilde {
            spec = spec.with_a_tilde(space_time_fn(a, dim, &format!("{block}.a_tilde"))?.0);
        }
        if let Some(b) = &self.b_tilde {
            spec = spec.with_b_tilde(space_time_fn(b, dim, &format!("{block}.b_tilde"))?.0);
        }
        if let Some(c) = &self.c_tilde {
            spec = spec.with_c_tilde(space_fn(c, dim, &format!("{block}.c_tilde"))?);
        }
        Ok(spec)
    }

    pub fn exponents(&self, block: &str) -> Result<Exponents<f64>, Failure> {
        Exponents::new(self.alpha, self.p.clone()).map_err(|e| field_error(&format!("{block}.alpha/p"), e))
    }

    /// Problem data on `domain` (the configured box when `None`).
    pub fn build_on(&self, block: &str, domain: Option<BoxDomain<f64>>) -> Result<ProblemData<f64>, Failure> {
        let exps = self.exponents(block)?;
        let dim = self.dim();
        let domain = match domain {
            Some(d) => d,
            None => self.domain(block)?,
        };
        let field = self.field_spec(block)?;
        let mut problem = ProblemData::new(domain, self.horizon, exps, field)
            .map_err(|e| field_error(block, e))?
            .with_initial(space_fn(&self.u0, dim, &format!("{block}.u0"))?);
        if let Some(g) = self.g.as_deref().filter(|g| !is_zero_expr(g)) {
            let (value, _) = space_time_fn(g, dim, &format!("{block}.g"))?;
            problem = problem.with_lift(BoundaryLift::with_numeric_derivatives(value));
        }
        if let Some(f) = self.f.as_deref().filter(|f| !is_zero_expr(f)) {
            let (value, steady) = space_time_fn(f, dim, &format!("{block}.f"))?;
            problem = problem.with_source(value, steady);
        }
        Ok(problem)
    }

    pub fn build(&self, block: &str) -> Result<ProblemData<f64>, Failure> {
        self.build_on(block, None)
    }

    pub fn exact(&self, block: &str) -> Result<Option<SpaceTimeFn<f64>>, Failure> {
        self.exact
            .as_deref()
            .map(|e| space_time_fn(e, self.dim(), &format!("{block}.exact")).map(|v| v.0))
            .transpose()
    }
}
