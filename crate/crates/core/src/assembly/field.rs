//! Flux vector fields `A(x, t, u, ξ)` and their structure metadata.

use std::sync::Arc;

use crate::algebra::spow_unchecked;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::Scalar;

/// Scalar function of a point.
pub type SpaceFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
/// Scalar function of a point and a time.
pub type SpaceTimeFn<T> = Arc<dyn Fn(&[T], T) -> T + Send + Sync>;

pub fn constant_space<T: Scalar>(c: T) -> SpaceFn<T> {
    Arc::new(move |_| c)
}

pub fn constant_space_time<T: Scalar>(c: T) -> SpaceTimeFn<T> {
    Arc::new(move |_, _| c)
}

/// A Carathéodory vector field evaluated pointwise.
pub trait VectorField<T>: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `A(x, t, u, ξ)` into `out` (length `dim`).
    fn eval(&self, x: &[T], t: T, u: T, xi: &[T], out: &mut [T]);
}

/// The anisotropic model field `A_i = |ξ_i|^{p_i−2} ξ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelField<T> {
    p: Vec<T>,
}

impl<T: Scalar> ModelField<T> {
    pub fn new(p: Vec<T>) -> Self {
        Self { p }
    }
}

impl<T: Scalar> VectorField<T> for ModelField<T> {
    fn dim(&self) -> usize {
        self.p.len()
    }

    #[inline]
    fn eval(&self, _x: &[T], _t: T, _u: T, xi: &[T], out: &mut [T]) {
        for i in 0..self.p.len() {
            out[i] = spow_unchecked(xi[i], self.p[i] - T::one());
        }
    }
}

/// Field given by one expression per component over
/// `x1..xN, t, u, xi1..xiN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprField {
    components: Vec<Expr>,
}

/// Variable names available to an [`ExprField`] in dimension `dim`.
pub fn field_variables(dim: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    names.push("t".into());
    names.push("u".into());
    names.extend((1..=dim).map(|i| format!("xi{i}")));
    names
}

impl ExprField {
    pub fn parse(components: &[&str]) -> Result<Self> {
        let dim = components.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let names = field_variables(dim);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let components = components
            .iter()
            .map(|c| Expr::parse(c, &refs))
            .collect::<Result<_>>()?;
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

impl<T: Scalar> VectorField<T> for ExprField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, x: &[T], t: T, u: T, xi: &[T], out: &mut [T]) {
        let dim = self.components.len();
        let mut vars = [T::zero(); 8];
        vars[..dim].copy_from_slice(&x[..dim]);
        vars[dim] = t;
        vars[dim + 1] = u;
        vars[dim + 2..2 * dim + 2].copy_from_slice(&xi[..dim]);
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(&vars[..2 * dim + 2]);
        }
    }
}

/// Properties a field declares about itself; checked by the structure audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldFlags {
    pub time_independent: bool,
    pub lipschitz_in_u: bool,
    pub strictly_monotone: bool,
}

/// A vector field with its structure constants: `Λ`, the integrable data
/// `ã(x,t)`, `b̃(x,t)`, `c̃(x)`, and the declared flags.
#[derive(Clone)]
pub struct FieldSpec<T> {
    name: String,
    field: Arc<dyn VectorField<T>>,
    lambda: T,
    a_tilde: SpaceTimeFn<T>,
    b_tilde: SpaceTimeFn<T>,
    c_tilde: SpaceFn<T>,
    flags: FieldFlags,
}

impl<T: Scalar> std::fmt::Debug for FieldSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSpec")
            .field("name", &self.name)
            .field("dim", &self.field.dim())
            .field("lambda", &self.lambda)
            .field("flags", &self.flags)
            .finish()
    }
}

impl<T: Scalar> FieldSpec<T> {
    /// Built-in model field with `Λ = 1`, `ã = b̃ = c̃ = 0` and all flags set.
    pub fn model(p: &[T]) -> Self {
        Self {
            name: "model".into(),
            field: Arc::new(ModelField::new(p.to_vec())),
            lambda: T::one(),
            a_tilde: constant_space_time(T::zero()),
            b_tilde: constant_space_time(T::zero()),
            c_tilde: constant_space(T::zero()),
            flags: FieldFlags {
                time_independent: true,
                lipschitz_in_u: true,
                strictly_monotone: true,
            },
        }
    }

    /// User field with constant structure data (defaults zero) and no flags.
    pub fn custom(name: &str, field: Arc<dyn VectorField<T>>, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            name: name.into(),
            field,
            lambda,
            a_tilde: constant_space_time(T::zero()),
            b_tilde: constant_space_time(T::zero()),
            c_tilde: constant_space(T::zero()),
            flags: FieldFlags {
                time_independent: false,
                lipschitz_in_u: false,
                strictly_monotone: false,
            },
        })
    }

    pub fn with_flags(mut self, flags: FieldFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_a_tilde(mut self, a: SpaceTimeFn<T>) -> Self {
        self.a_tilde = a;
        self
    }

    pub fn with_b_tilde(mut self, b: SpaceTimeFn<T>) -> Self {
        self.b_tilde = b;
        self
    }

    pub fn with_c_tilde(mut self, c: SpaceFn<T>) -> Self {
        self.c_tilde = c;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn flags(&self) -> FieldFlags {
        self.flags
    }

    #[inline]
    pub fn eval(&self, x: &[T], t: T, u: T, xi: &[T], out: &mut [T]) {
        self.field.eval(x, t, u, xi, out)
    }

    pub fn a_tilde(&self, x: &[T], t: T) -> T {
        (self.a_tilde)(x, t)
    }

    pub fn b_tilde(&self, x: &[T], t: T) -> T {
        (self.b_tilde)(x, t)
    }

    pub fn c_tilde(&self, x: &[T]) -> T {
        (self.c_tilde)(x)
    }
}
