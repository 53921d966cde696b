//! Empirical audit of the elementary inequalities for `spow` and `b_α`.
//!
//! Pairs `(v, w)` are drawn with log-uniform magnitudes in `[1e-6, 1e6]` and
//! independent random signs. Inequalities with an explicit constant are
//! checked against a slack of `1e-12` times the natural scale
//! `|v|^{α+1} + |w|^{α+1}`; inequalities whose constant is only known to
//! exist are reported as the worst observed ratio, which must be finite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{b_alpha_convex_form, b_alpha_unchecked, spow_unchecked, Alpha};
use crate::scalar::Scalar;

/// Relative slack for exact-constant inequalities and identities.
pub const EXACT_SLACK: f64 = 1e-12;
/// Largest worst-case ratio still reported as "finite".
pub const RATIO_CEILING: f64 = 1e6;
/// Ratios whose denominator is below this fraction of the scale are
/// dominated by rounding and skipped.
pub const DEGENERATE_FRACTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaKind {
    /// `worst` is the largest normalized violation `(lhs − rhs)/scale`.
    Exact,
    /// `worst` is the largest observed `lhs / rhs`.
    Ratio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaEntry {
    pub id: &'static str,
    pub kind: LemmaKind,
    pub samples: usize,
    pub skipped: usize,
    pub worst: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub alpha: f64,
    pub entries: Vec<LemmaEntry>,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, id: &str) -> Option<&LemmaEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// CSV rows `lemma_id,alpha,samples,worst_ratio,pass`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| format!("{},{},{},{:e},{}", e.id, self.alpha, e.samples, e.worst, e.pass))
            .collect()
    }
}

/// One sampled observation for a given check.
#[derive(Clone, Copy)]
enum Obs {
    /// Normalized violation of an exact inequality.
    Margin(f64),
    Ratio(f64),
    Skip,
}

type Check = (&'static str, LemmaKind, fn(f64, f64, f64) -> Obs);

fn scale(v: f64, w: f64, a: f64) -> f64 {
    v.abs().powf(a + 1.0) + w.abs().powf(a + 1.0)
}

fn ratio(num: f64, den: f64, sc: f64) -> Obs {
    if den <= DEGENERATE_FRACTION * sc || !den.is_finite() || !num.is_finite() {
        Obs::Skip
    } else {
        Obs::Ratio(num / den)
    }
}

fn mono_convex(a: f64, b: f64, al: f64) -> Obs {
    let lhs = (spow_unchecked(a, al) - spow_unchecked(b, al)) * a;
    let rhs = al / (al + 1.0) * (a.abs().powf(al + 1.0) - b.abs().powf(al + 1.0));
    Obs::Margin((rhs - lhs) / scale(a, b, al))
}

fn b_nonnegative(v: f64, w: f64, al: f64) -> Obs {
    Obs::Margin(-b_alpha_unchecked(v, w, al) / scale(v, w, al))
}

fn b_below_monotone_product(v: f64, w: f64, al: f64) -> Obs {
    let prod = (spow_unchecked(v, al) - spow_unchecked(w, al)) * (v - w);
    Obs::Margin((b_alpha_unchecked(v, w, al) - prod) / scale(v, w, al))
}

fn b_symmetric_identity(v: f64, w: f64, al: f64) -> Obs {
    let prod = (spow_unchecked(v, al) - spow_unchecked(w, al)) * (v - w);
    let sum = b_alpha_unchecked(v, w, al) + b_alpha_unchecked(w, v, al);
    Obs::Margin((sum - prod).abs() / scale(v, w, al))
}

fn b_closed_forms_agree(v: f64, w: f64, al: f64) -> Obs {
    let alpha = Alpha::new(al).expect("alpha validated by caller");
    let diff = b_alpha_unchecked(v, w, al) - b_alpha_convex_form(v, w, alpha);
    Obs::Margin(diff.abs() / scale(v, w, al))
}

fn b_controls_half_power_gap(v: f64, w: f64, al: f64) -> Obs {
    let h = (al + 1.0) / 2.0;
    let gap = spow_unchecked(w, h) - spow_unchecked(v, h);
    let sc = scale(v, w, al);
    ratio(gap * gap, b_alpha_unchecked(v, w, al), sc)
}

fn power_gap_inside(a: f64, b: f64, al: f64) -> Obs {
    let g = al + 1.0;
    let lhs = (a - b).abs().powf(g);
    let rhs = (spow_unchecked(a, g) - spow_unchecked(b, g)).abs();
    ratio(lhs, rhs, a.abs().powf(g) + b.abs().powf(g))
}

fn distance_by_spow_gap(u: f64, v: f64, al: f64) -> Obs {
    let lhs = (u - v).abs();
    let rhs = (spow_unchecked(u, al) - spow_unchecked(v, al)).abs()
        * (u.abs().powf(1.0 - al) + v.abs().powf(1.0 - al));
    ratio(lhs, rhs, u.abs() + v.abs())
}

fn b_two_sided_lower(v: f64, w: f64, al: f64) -> Obs {
    let q = (w.abs() + v.abs()).powf(al - 1.0) * (w - v).powi(2);
    ratio(q, b_alpha_unchecked(v, w, al), scale(v, w, al))
}

fn b_two_sided_upper(v: f64, w: f64, al: f64) -> Obs {
    let q = (w.abs() + v.abs()).powf(al - 1.0) * (w - v).powi(2);
    ratio(b_alpha_unchecked(v, w, al), q, scale(v, w, al))
}

fn b_below_distance_power(v: f64, w: f64, al: f64) -> Obs {
    ratio(
        b_alpha_unchecked(v, w, al),
        (v - w).abs().powf(1.0 + al),
        scale(v, w, al),
    )
}

fn spow_gap_dual_power_below_b(v: f64, w: f64, al: f64) -> Obs {
    let gap = (spow_unchecked(v, al) - spow_unchecked(w, al)).abs();
    ratio(gap.powf((al + 1.0) / al), b_alpha_unchecked(v, w, al), scale(v, w, al))
}

fn b_below_spow_gap_dual_power(v: f64, w: f64, al: f64) -> Obs {
    let gap = (spow_unchecked(v, al) - spow_unchecked(w, al)).abs();
    ratio(b_alpha_unchecked(v, w, al), gap.powf((al + 1.0) / al), scale(v, w, al))
}

fn distance_power_below_b(v: f64, w: f64, al: f64) -> Obs {
    ratio((v - w).abs().powf(al + 1.0), b_alpha_unchecked(v, w, al), scale(v, w, al))
}

fn distance_power_below_monotone_product(v: f64, w: f64, al: f64) -> Obs {
    let prod = (spow_unchecked(v, al) - spow_unchecked(w, al)) * (v - w);
    ratio((v - w).abs().powf(al + 1.0), prod, scale(v, w, al))
}

fn checks_for(alpha: f64) -> Vec<Check> {
    let mut checks: Vec<Check> = vec![
        ("mono_convex", LemmaKind::Exact, mono_convex),
        ("b_nonnegative", LemmaKind::Exact, b_nonnegative),
        ("b_below_monotone_product", LemmaKind::Exact, b_below_monotone_product),
        ("b_symmetric_identity", LemmaKind::Exact, b_symmetric_identity),
        ("b_closed_forms_agree", LemmaKind::Exact, b_closed_forms_agree),
        ("b_controls_half_power_gap", LemmaKind::Ratio, b_controls_half_power_gap),
        ("power_gap_inside", LemmaKind::Ratio, power_gap_inside),
    ];
    if alpha < 1.0 {
        checks.extend_from_slice(&[
            ("distance_by_spow_gap", LemmaKind::Ratio, distance_by_spow_gap as fn(f64, f64, f64) -> Obs),
            ("b_two_sided_lower", LemmaKind::Ratio, b_two_sided_lower),
            ("b_two_sided_upper", LemmaKind::Ratio, b_two_sided_upper),
            ("b_below_distance_power", LemmaKind::Ratio, b_below_distance_power),
            ("spow_gap_dual_power_below_b", LemmaKind::Ratio, spow_gap_dual_power_below_b),
        ]);
    } else {
        checks.extend_from_slice(&[
            ("b_below_spow_gap_dual_power", LemmaKind::Ratio, b_below_spow_gap_dual_power as fn(f64, f64, f64) -> Obs),
            ("distance_power_below_b", LemmaKind::Ratio, distance_power_below_b),
            (
                "distance_power_below_monotone_product",
                LemmaKind::Ratio,
                distance_power_below_monotone_product,
            ),
        ]);
    }
    checks
}

/// Draws `count` pairs with log-uniform magnitudes in `[1e-6, 1e6]`.
pub fn sample_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mag = 10f64.powf(rng.gen_range(-6.0..6.0));
        if rng.gen::<bool>() {
            -mag
        } else {
            mag
        }
    };
    (0..count).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

/// Runs every inequality check relevant for `alpha` on `sample_count`
/// seeded pairs. Results are independent of the thread count.
pub fn lemma_sweep<T: Scalar>(alpha: Alpha<T>, sample_count: usize, seed: u64) -> LemmaReport {
    let al = alpha.value().to_f64_lossy();
    let pairs = sample_pairs(sample_count.max(1), seed);
    let entries = checks_for(al)
        .into_iter()
        .map(|(id, kind, check)| {
            let observations: Vec<Obs> = pairs.par_iter().map(|&(v, w)| check(v, w, al)).collect();
            let mut worst = f64::NEG_INFINITY;
            let mut used = 0;
            let mut skipped = 0;
            let mut non_finite = false;
            for obs in observations {
                match obs {
                    Obs::Margin(m) | Obs::Ratio(m) => {
                        used += 1;
                        if !m.is_finite() {
                            non_finite = true;
                        }
                        worst = worst.max(m);
                    }
                    Obs::Skip => skipped += 1,
                }
            }
            if used == 0 {
                worst = 0.0;
            }
            let pass = !non_finite
                && match kind {
                    LemmaKind::Exact => worst <= EXACT_SLACK,
                    LemmaKind::Ratio => worst.is_finite() && worst <= RATIO_CEILING,
                };
            LemmaEntry {
                id,
                kind,
                samples: used,
                skipped,
                worst: if non_finite { f64::INFINITY } else { worst },
                pass,
            }
        })
        .collect();
    LemmaReport { alpha: al, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn al(a: f64) -> Alpha<f64> {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn alpha_one_identities_are_exact() {
        let r = lemma_sweep(al(1.0), 10_000, 7);
        assert!(r.all_pass(), "{r:#?}");
        for id in ["b_symmetric_identity", "b_closed_forms_agree", "mono_convex"] {
            assert!(r.entry(id).unwrap().worst <= EXACT_SLACK);
        }
    }

    #[test]
    fn alpha_half_has_finite_constants() {
        let r = lemma_sweep(al(0.5), 10_000, 7);
        assert!(r.all_pass(), "{r:#?}");
        assert!(r.entry("b_two_sided_lower").is_some());
        assert!(r.entry("distance_power_below_b").is_none());
    }

    #[test]
    fn alpha_two_has_finite_constants() {
        let r = lemma_sweep(al(2.0), 10_000, 7);
        assert!(r.all_pass(), "{r:#?}");
        assert!(r.entry("distance_power_below_b").unwrap().worst.is_finite());
    }

    #[test]
    fn sweep_is_deterministic_in_seed() {
        let a = lemma_sweep(al(0.7), 2_000, 11);
        let b = lemma_sweep(al(0.7), 2_000, 11);
        assert_eq!(a, b);
        let c = lemma_sweep(al(0.7), 2_000, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn csv_rows_have_five_columns() {
        let r = lemma_sweep(al(1.5), 100, 1);
        for row in r.csv_rows() {
            assert_eq!(row.split(',').count(), 5);
        }
    }
}
