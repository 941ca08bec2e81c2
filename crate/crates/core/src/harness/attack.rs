//! Attack and defense measurement.
//!
//! An attack run scores a set of forgeries with a trained verifier and
//! counts false acceptances. A defense run measures the attack, fine-tunes
//! the verifier for one epoch on a disjoint batch of the same kind of
//! forgeries (labeled forged, mixed with the original training data), and
//! measures the attack again.

use std::collections::HashSet;

use super::{stage, AttackMethod, AttackReport, DefenseReport, HarnessError};
use crate::verify::{fine_tune, scores, Sample, TrainSettings, TrainedModel, DECISION_THRESHOLD};

/// Scores every forgery and counts the ones classified genuine.
/// Permutation-invariant: only the counts enter the report.
pub fn run_attack(
    model: &TrainedModel,
    forgeries: &[Sample],
    method: AttackMethod,
) -> Result<AttackReport, HarnessError> {
    if forgeries.is_empty() {
        return Err(HarnessError::BadInput("attack needs at least one forgery".into()));
    }
    let scores = scores(model, forgeries).map_err(|e| stage("attack scoring", e))?;
    let n_success = scores.iter().filter(|&&p| p >= DECISION_THRESHOLD).count();
    Ok(AttackReport::from_counts(method, n_success, forgeries.len()))
}

/// Bit-exact pixel fingerprints, for overlap detection between sets.
fn fingerprints(samples: &[Sample]) -> HashSet<Vec<u64>> {
    samples.iter().map(|s| s.pixels.iter().map(|p| p.to_bits()).collect()).collect()
}

/// Measures an attack before and after the one-epoch fine-tuning defense.
///
/// `tune_set` are forgeries of the same production method, disjoint from
/// `attack_set` (checked bit-exactly); they join `original_train` labeled
/// forged for a single epoch of further training. The baseline model is
/// left untouched; the report compares it against the tuned copy.
pub fn run_defense(
    model: &TrainedModel,
    original_train: &[Sample],
    tune_set: &[Sample],
    attack_set: &[Sample],
    method: AttackMethod,
    settings: &TrainSettings,
) -> Result<DefenseReport, HarnessError> {
    if tune_set.is_empty() {
        return Err(HarnessError::BadInput("defense needs at least one tuning forgery".into()));
    }
    let tune_prints = fingerprints(tune_set);
    let shared = attack_set
        .iter()
        .filter(|s| tune_prints.contains(&s.pixels.iter().map(|p| p.to_bits()).collect::<Vec<_>>()))
        .count();
    if shared > 0 {
        return Err(HarnessError::Overlap { shared });
    }

    let before = run_attack(model, attack_set, method)?;
    let tune_forged: Vec<Sample> =
        tune_set.iter().map(|s| Sample::new(s.pixels.clone(), false)).collect();
    let tuned = fine_tune(model, original_train, &tune_forged, settings, 1)
        .map_err(|e| stage("fine-tune", e))?;
    let after = run_attack(&tuned, attack_set, method)?;
    Ok(DefenseReport::new(before, after))
}
