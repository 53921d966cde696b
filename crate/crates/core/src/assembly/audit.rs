//! Sampling audit of the structure conditions a vector field must satisfy.
//!
//! Arguments are drawn with `x` uniform in the box, `t` uniform in
//! `[0, T]`, and `u`, `ξ_i` with log-uniform magnitudes in `[1e-3, 1e2]` and
//! random signs. Each condition `lhs ≤ rhs` is scored by the relative margin
//! `(rhs − lhs)/(1 + |lhs| + |rhs|)`; margins below `−1e-10` count as
//! violations. Strict monotonicity additionally counts a vanishing pairing as
//! a violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::FieldSpec;
use super::problem::Exponents;
use crate::basis::BoxDomain;
use crate::scalar::Scalar;

pub const AUDIT_SLACK: f64 = 1e-10;

pub const COERCIVITY: &str = "coercivity";
pub const GROWTH: &str = "growth";
pub const STRICT_MONOTONICITY: &str = "strict_monotonicity";
pub const WEAK_MONOTONICITY: &str = "weak_monotonicity";
pub const LIPSCHITZ_IN_U: &str = "lipschitz_in_u";
pub const TIME_INDEPENDENT: &str = "time_independent";

/// Where the field's arguments `(x, t)` are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRegion<T> {
    pub domain: BoxDomain<T>,
    pub horizon: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub condition: &'static str,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    /// Whether the field declares this property (always true for the
    /// conditions every admissible field must satisfy).
    pub declared: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn entry(&self, condition: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.condition == condition)
    }

    pub fn violations(&self, condition: &str) -> usize {
        self.entry(condition).map_or(0, |e| e.violations)
    }

    /// No declared property is contradicted by a sample.
    pub fn declared_consistent(&self) -> bool {
        self.entries.iter().all(|e| !e.declared || e.violations == 0)
    }

    /// CSV rows `condition,declared,samples,violations,worst_margin`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                format!(
                    "{},{},{},{},{}",
                    e.condition, e.declared, e.samples, e.violations, e.worst_margin
                )
            })
            .collect()
    }
}

struct Tally {
    condition: &'static str,
    declared: bool,
    samples: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(condition: &'static str, declared: bool) -> Self {
        Self {
            condition,
            declared,
            samples: 0,
            violations: 0,
            worst: f64::INFINITY,
        }
    }

    /// Records `lhs ≤ rhs`.
    fn bound(&mut self, lhs: f64, rhs: f64) {
        let margin = (rhs - lhs) / (1.0 + lhs.abs() + rhs.abs());
        self.record(margin, margin < -AUDIT_SLACK || !margin.is_finite());
    }

    fn record(&mut self, margin: f64, violated: bool) {
        self.samples += 1;
        if violated {
            self.violations += 1;
        }
        if margin.is_nan() || margin < self.worst {
            self.worst = margin;
        }
    }

    fn finish(self) -> AuditEntry {
        AuditEntry {
            condition: self.condition,
            samples: self.samples,
            violations: self.violations,
            worst_margin: if self.samples == 0 { 0.0 } else { self.worst },
            declared: self.declared,
        }
    }
}

fn signed_log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    let m = 10f64.powf(rng.gen_range(-3.0..2.0));
    if rng.gen::<bool>() {
        m
    } else {
        -m
    }
}

/// Audits coercivity, growth, strict and weak monotonicity, Lipschitz
/// continuity in `u` (constant `Λ`, weight `c̃`), and time independence.
pub fn structure_condition_audit<T: Scalar>(
    field: &FieldSpec<T>,
    exponents: &Exponents<T>,
    region: &AuditRegion<T>,
    samples: usize,
    seed: u64,
) -> AuditReport {
    let dim = field.dim();
    let flags = field.flags();
    let lambda = field.lambda().to_f64_lossy();
    let p: Vec<f64> = exponents.p().iter().map(|v| v.to_f64_lossy()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut coercivity = Tally::new(COERCIVITY, true);
    let mut growth = Tally::new(GROWTH, true);
    let mut strict = Tally::new(STRICT_MONOTONICITY, flags.strictly_monotone);
    let mut weak = Tally::new(WEAK_MONOTONICITY, true);
    let mut lipschitz = Tally::new(LIPSCHITZ_IN_U, flags.lipschitz_in_u);
    let mut steady = Tally::new(TIME_INDEPENDENT, flags.time_independent);

    let eval = |x: &[T], t: f64, u: f64, xi: &[f64]| -> Vec<f64> {
        let xi_t: Vec<T> = xi.iter().map(|&v| T::lit(v)).collect();
        let mut out = vec![T::zero(); dim];
        field.eval(x, T::lit(t), T::lit(u), &xi_t, &mut out);
        out.iter().map(|v| v.to_f64_lossy()).collect()
    };

    for _ in 0..samples.max(1) {
        let x: Vec<T> = (0..dim)
            .map(|i| {
                let s: f64 = rng.gen();
                region.domain.lower()[i] + region.domain.length(i) * T::lit(s)
            })
            .collect();
        let horizon = region.horizon.to_f64_lossy();
        let t = rng.gen::<f64>() * horizon;
        let t2 = rng.gen::<f64>() * horizon;
        let u = signed_log_uniform(&mut rng);
        let u2 = signed_log_uniform(&mut rng);
        let xi: Vec<f64> = (0..dim).map(|_| signed_log_uniform(&mut rng)).collect();
        let eta: Vec<f64> = (0..dim).map(|_| signed_log_uniform(&mut rng)).collect();

        let a_tilde = field.a_tilde(&x, T::lit(t)).to_f64_lossy();
        let b_tilde = field.b_tilde(&x, T::lit(t)).to_f64_lossy();
        let c_tilde = field.c_tilde(&x).to_f64_lossy();
        let energy: f64 = (0..dim).map(|i| xi[i].abs().powf(p[i])).sum();

        let a = eval(&x, t, u, &xi);
        let pairing: f64 = (0..dim).map(|i| a[i] * xi[i]).sum();
        coercivity.bound(energy / lambda - a_tilde, pairing);

        for i in 0..dim {
            let cap = lambda * (energy + b_tilde).powf((p[i] - 1.0) / p[i]);
            growth.bound(a[i].abs(), cap);
        }

        let b = eval(&x, t, u, &eta);
        let mono: f64 = (0..dim).map(|i| (a[i] - b[i]) * (xi[i] - eta[i])).sum();
        let scale: f64 = 1.0
            + (0..dim)
                .map(|i| (a[i].abs() + b[i].abs()) * (xi[i] - eta[i]).abs())
                .sum::<f64>();
        weak.bound(-mono, 0.0);
        let distinct = xi.iter().zip(&eta).any(|(p, q)| p != q);
        if distinct {
            strict.record(mono / scale, !(mono > 0.0));
        }

        let a2 = eval(&x, t, u2, &xi);
        for i in 0..dim {
            let cap = lambda * (u - u2).abs() * (c_tilde + energy).powf((p[i] - 1.0) / p[i]);
            lipschitz.bound((a[i] - a2[i]).abs(), cap);
        }

        let a3 = eval(&x, t2, u, &xi);
        for i in 0..dim {
            steady.bound((a[i] - a3[i]).abs(), 0.0);
        }
    }

    AuditReport {
        entries: vec![
            coercivity.finish(),
            growth.finish(),
            strict.finish(),
            weak.finish(),
            lipschitz.finish(),
            steady.finish(),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::field::{ExprField, FieldFlags, VectorField};
    use std::sync::Arc;

    fn region(dim: usize) -> AuditRegion<f64> {
        AuditRegion {
            domain: BoxDomain::unit(dim).unwrap(),
            horizon: 1.0,
        }
    }

    #[test]
    fn model_field_has_no_violations() {
        for p in [vec![2.0], vec![1.8, 2.4], vec![1.2, 3.0, 5.0]] {
            let f = FieldSpec::model(&p);
            let e = Exponents::new(0.5, p.clone()).unwrap();
            let r = structure_condition_audit(&f, &e, &region(p.len()), 5000, 3);
            for entry in &r.entries {
                assert_eq!(entry.violations, 0, "{p:?} {}", entry.condition);
                assert!(entry.samples > 0);
            }
            assert!(r.declared_consistent());
        }
    }

    #[test]
    fn reversed_field_violates_coercivity() {
        let field: Arc<dyn VectorField<f64>> = Arc::new(ExprField::parse(&["-xi1", "-xi2"]).unwrap());
        let f = FieldSpec::custom("reversed", field, 1.0).unwrap();
        let e = Exponents::new(1.0, vec![2.0, 2.0]).unwrap();
        let r = structure_condition_audit(&f, &e, &region(2), 500, 1);
        assert!(r.violations(COERCIVITY) > 400);
        assert!(r.violations(WEAK_MONOTONICITY) > 400);
    }

    #[test]
    fn time_dependence_contradicts_declared_flag() {
        let field: Arc<dyn VectorField<f64>> =
            Arc::new(ExprField::parse(&["(1 + t) * xi1"]).unwrap());
        let f = FieldSpec::custom("drifting", field, 4.0).unwrap().with_flags(FieldFlags {
            time_independent: true,
            lipschitz_in_u: true,
            strictly_monotone: true,
        });
        let e = Exponents::new(1.0, vec![2.0]).unwrap();
        let r = structure_condition_audit(&f, &e, &region(1), 500, 1);
        assert!(r.violations(TIME_INDEPENDENT) > 0);
        assert_eq!(r.violations(LIPSCHITZ_IN_U), 0);
        assert!(!r.declared_consistent());
    }

    #[test]
    fn audit_is_deterministic() {
        let f = FieldSpec::model(&[1.5, 2.5]);
        let e = Exponents::new(2.0, vec![1.5, 2.5]).unwrap();
        let a = structure_condition_audit(&f, &e, &region(2), 300, 9);
        let b = structure_condition_audit(&f, &e, &region(2), 300, 9);
        assert_eq!(a, b);
    }
}
