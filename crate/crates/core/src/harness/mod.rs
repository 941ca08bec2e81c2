//! End-to-end attack and defense experiments.
//!
//! The harness generates a desk-scale synthetic signature corpus
//! ([`synth`]), trains the baseline verifier, produces forgeries two ways —
//! re-drawing genuine signatures through the plotter toolchain
//! ([`forgery`]) and sampling the conditional GAN — then measures false
//! acceptance before and after a one-epoch fine-tuning defense
//! ([`attack`]), and assembles the whole experiment into a reproducible
//! report bundle ([`pipeline`]).

pub mod attack;
pub mod forgery;
pub mod pipeline;
pub mod synth;

pub use attack::{run_attack, run_defense};
pub use forgery::{gray_to_sample, robot_forge};
pub use pipeline::{full_pipeline, PipelineConfig, PipelineOutcome};
pub use synth::{synth_corpus, SyntheticSignatureSpec};

use thiserror::Error;

/// Everything the experiment harness can turn down.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid synthesis spec: {0}")]
    BadSpec(String),
    #[error("invalid pipeline config: {0}")]
    BadConfig(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("tune and attack sets share {shared} image(s)")]
    Overlap { shared: usize },
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Labels a module error with the pipeline stage it came from.
pub(crate) fn stage(stage: &'static str, err: impl std::fmt::Display) -> HarnessError {
    HarnessError::Stage { stage, message: err.to_string() }
}

/// Forgery production method, as reported in the result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMethod {
    /// Plotter re-drawing with the `idraw2` device profile.
    Idraw2,
    /// Plotter re-drawing with the `lineus` device profile.
    Lineus,
    /// Conditional-GAN samples conditioned on the genuine class.
    Cgan,
}

impl AttackMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackMethod::Idraw2 => "idraw2",
            AttackMethod::Lineus => "lineus",
            AttackMethod::Cgan => "cgan",
        }
    }

    pub fn parse(s: &str) -> Option<AttackMethod> {
        match s {
            "idraw2" => Some(AttackMethod::Idraw2),
            "lineus" => Some(AttackMethod::Lineus),
            "cgan" => Some(AttackMethod::Cgan),
            _ => None,
        }
    }
}

impl std::fmt::Display for AttackMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Success percentage of `n` out of `t`, exact to 1 decimal with ties
/// rounded up: `round(1000 n / t) / 10`.
pub(crate) fn percent_of(n_success: usize, n_total: usize) -> f64 {
    debug_assert!(n_total > 0);
    let tenths = (2000 * n_success + n_total) / (2 * n_total);
    tenths as f64 / 10.0
}

/// Outcome of one attack run: how many forgeries the verifier accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackReport {
    pub method: AttackMethod,
    /// Forgeries classified genuine (false acceptances).
    pub n_success: usize,
    pub n_total: usize,
    /// `100 * n_success / n_total`, one decimal, ties up.
    pub percent: f64,
}

impl AttackReport {
    /// Builds a report from counts; `n_success <= n_total`, `n_total >= 1`.
    pub fn from_counts(method: AttackMethod, n_success: usize, n_total: usize) -> AttackReport {
        assert!(n_total >= 1, "attack on an empty forgery set");
        assert!(n_success <= n_total, "more successes than attempts");
        AttackReport { method, n_success, n_total, percent: percent_of(n_success, n_total) }
    }
}

/// Attack success before and after the fine-tuning defense.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefenseReport {
    pub before: AttackReport,
    pub after: AttackReport,
    /// Percentage points of attack success removed by the defense:
    /// `before.percent - after.percent`.
    pub delta_points: f64,
}

impl DefenseReport {
    pub fn new(before: AttackReport, after: AttackReport) -> DefenseReport {
        DefenseReport { before, after, delta_points: before.percent - after.percent }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_attack_rates_are_exact() {
        for (n, t, expect) in [
            (8, 25, 32.0),
            (6, 25, 24.0),
            (10, 25, 40.0),
            (297, 1000, 29.7),
            (0, 25, 0.0),
            (2, 25, 8.0),
            (3, 25, 12.0),
            (1, 25, 4.0),
            (50, 1000, 5.0),
            (25, 25, 100.0),
        ] {
            let report = AttackReport::from_counts(AttackMethod::Idraw2, n, t);
            assert_eq!(report.percent, expect, "{n}/{t}");
        }
    }

    #[test]
    fn ties_round_up() {
        // 1/16 = 6.25% -> 6.3; 1/2000 = 0.05% -> 0.1.
        assert_eq!(percent_of(1, 16), 6.3);
        assert_eq!(percent_of(1, 2000), 0.1);
        // 3/16 = 18.75 -> 18.8.
        assert_eq!(percent_of(3, 16), 18.8);
    }

    #[test]
    fn reference_defense_deltas_are_exact() {
        let cases = [
            ((8, 25), (2, 25), 24.0),
            ((6, 25), (3, 25), 12.0),
            ((10, 25), (1, 25), 36.0),
        ];
        for ((bn, bt), (an, at), delta) in cases {
            let before = AttackReport::from_counts(AttackMethod::Lineus, bn, bt);
            let after = AttackReport::from_counts(AttackMethod::Lineus, an, at);
            let report = DefenseReport::new(before, after);
            assert_eq!(report.delta_points, delta);
        }
        // The fractional case: 29.7 - 5.0. Both percentages live in
        // binades with identical spacing, so the subtraction is exact.
        let before = AttackReport::from_counts(AttackMethod::Cgan, 297, 1000);
        let after = AttackReport::from_counts(AttackMethod::Cgan, 50, 1000);
        let report = DefenseReport::new(before, after);
        assert_eq!(report.delta_points, 29.7 - 5.0);
        assert!((report.delta_points - 24.7).abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [AttackMethod::Idraw2, AttackMethod::Lineus, AttackMethod::Cgan] {
            assert_eq!(AttackMethod::parse(m.as_str()), Some(m));
        }
        assert_eq!(AttackMethod::parse("fax"), None);
    }

    #[test]
    #[should_panic(expected = "more successes")]
    fn counts_must_be_consistent() {
        AttackReport::from_counts(AttackMethod::Cgan, 3, 2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Round-half-up to one decimal, characterized without the
        /// production formula: the reported tenths are the smallest k with
        /// 1000*n/t < k + 1/2, i.e. 2000*n < t*(2k + 1).
        fn oracle_tenths(n: u64, t: u64) -> u64 {
            (0..=1000).find(|k| 2000 * n < t * (2 * k + 1)).expect("n <= t caps tenths at 1000")
        }

        proptest! {
            #[test]
            fn percent_matches_rounding_oracle(t in 1usize..5000, frac in 0.0f64..=1.0) {
                let n = ((t as f64) * frac).floor() as usize;
                let expect = oracle_tenths(n as u64, t as u64) as f64 / 10.0;
                prop_assert_eq!(percent_of(n, t), expect);
            }

            #[test]
            fn percent_is_bounded_and_monotone(t in 1usize..2000, n in 0usize..2000) {
                let n = n.min(t);
                let p = percent_of(n, t);
                prop_assert!((0.0..=100.0).contains(&p));
                if n < t {
                    prop_assert!(percent_of(n + 1, t) >= p);
                }
            }

            #[test]
            fn defense_delta_sign_follows_success_counts(
                t in 1usize..500,
                before_n in 0usize..500,
                after_n in 0usize..500,
            ) {
                let before_n = before_n.min(t);
                let after_n = after_n.min(t);
                let before = AttackReport::from_counts(AttackMethod::Cgan, before_n, t);
                let after = AttackReport::from_counts(AttackMethod::Cgan, after_n, t);
                let delta = DefenseReport::new(before, after).delta_points;
                if after_n < before_n {
                    prop_assert!(delta >= 0.0);
                } else if after_n > before_n {
                    prop_assert!(delta <= 0.0);
                } else {
                    prop_assert_eq!(delta, 0.0);
                }
            }
        }
    }
}
