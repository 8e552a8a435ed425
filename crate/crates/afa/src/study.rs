//! Domain types: studies, view slots, acquisition states, and actions.
//!
//! A study is an ordered list of view slots, each carrying a pre-encoded
//! feature vector and an acquisition cost. The acquisition state tracks which
//! slots have been acquired so far; unacquired rows are kept exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagnosis label: 0 = none, 1 = early, 2 = significant.
pub type Label = u8;

/// Number of diagnosis classes.
pub const N_CLASSES: usize = 3;

/// One feature slot of a study: a named view, its acquisition cost, and the
/// encoded feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSlot {
    pub view: String,
    pub cost: f32,
    pub features: Vec<f32>,
}

/// One patient study: an identifier, a diagnosis label, and a fixed-order
/// list of view slots. Slot order in `slots` is the canonical order and never
/// changes after load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub study_id: String,
    pub label: Label,
    pub slots: Vec<ViewSlot>,
}

impl StudyRecord {
    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    /// Feature dimension of the first slot, if any.
    pub fn feature_dim(&self) -> Option<usize> {
        self.slots.first().map(|s| s.features.len())
    }

    /// Check every record invariant. `expected_d` of `None` accepts any
    /// dimension as long as it is consistent across slots. Returns the
    /// feature dimension.
    pub fn validate(&self, expected_n: usize, expected_d: Option<usize>) -> Result<usize> {
        if self.slots.len() != expected_n {
            return Err(Error::WrongSlotCount {
                study_id: self.study_id.clone(),
                expected: expected_n,
                got: self.slots.len(),
            });
        }
        if self.label as usize >= N_CLASSES {
            return Err(Error::LabelOutOfRange {
                study_id: self.study_id.clone(),
                label: self.label,
            });
        }
        let d = expected_d
            .or_else(|| self.feature_dim())
            .ok_or(Error::EmptyDataset)?;
        for (i, slot) in self.slots.iter().enumerate() {
            if slot.features.len() != d {
                return Err(Error::InconsistentDim {
                    study_id: self.study_id.clone(),
                    expected: d,
                    got: slot.features.len(),
                });
            }
            if slot.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature {
                    study_id: self.study_id.clone(),
                    slot: i,
                });
            }
            if !(slot.cost >= 0.0) {
                return Err(Error::NegativeCost {
                    study_id: self.study_id.clone(),
                    slot: i,
                    cost: slot.cost,
                });
            }
        }
        Ok(d)
    }

    /// Sum of costs over the set of acquired slots.
    pub fn cost_of_mask(&self, mask: &[bool]) -> f64 {
        self.slots
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(s, _)| s.cost as f64)
            .sum()
    }
}

/// The per-slot view layout of a study. Each slot belongs to a view family
/// (e.g. PLAX, PSAX); families may occur more than once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewScheme {
    pub families: Vec<String>,
}

impl Default for ViewScheme {
    /// Two PLAX slots followed by two PSAX slots.
    fn default() -> Self {
        ViewScheme {
            families: ["PLAX", "PLAX", "PSAX", "PSAX"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl ViewScheme {
    pub fn n_slots(&self) -> usize {
        self.families.len()
    }

    pub fn family(&self, slot: usize) -> &str {
        &self.families[slot]
    }

    /// Display name of a slot: family plus occurrence number, e.g. `PSAX_1`.
    pub fn slot_name(&self, slot: usize) -> String {
        let fam = &self.families[slot];
        let occurrence = self.families[..=slot].iter().filter(|f| *f == fam).count();
        format!("{fam}_{occurrence}")
    }

    /// Slot indices belonging to each distinct family, in first-seen order.
    pub fn family_slots(&self) -> Vec<(String, Vec<usize>)> {
        let mut out: Vec<(String, Vec<usize>)> = Vec::new();
        for (i, fam) in self.families.iter().enumerate() {
            match out.iter_mut().find(|(f, _)| f == fam) {
                Some((_, slots)) => slots.push(i),
                None => out.push((fam.clone(), vec![i])),
            }
        }
        out
    }
}

/// Acquisition state: the boolean mask of acquired slots plus the feature
/// matrix where unacquired rows are exactly zero. `steps_taken` counts
/// actions taken so far in the episode.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionState {
    mask: Vec<bool>,
    features: Vec<f32>, // n x d, row-major
    d: usize,
    steps_taken: usize,
}

impl AcquisitionState {
    /// The all-unacquired state: zero matrix, zero steps.
    pub fn empty(n: usize, d: usize) -> Self {
        AcquisitionState {
            mask: vec![false; n],
            features: vec![0.0; n * d],
            d,
            steps_taken: 0,
        }
    }

    /// Assemble a state from raw parts without zeroing unacquired rows.
    /// Consumers that promise masked content cannot influence them are
    /// tested against states built this way.
    pub fn from_raw(mask: Vec<bool>, features: Vec<f32>, d: usize, steps_taken: usize) -> Self {
        assert_eq!(features.len(), mask.len() * d, "feature matrix shape");
        AcquisitionState {
            mask,
            features,
            d,
            steps_taken,
        }
    }

    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Number of acquired slots.
    pub fn acquired_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_acquired(&self, slot: usize) -> bool {
        self.mask[slot]
    }

    /// Successor state after acquiring `slot`: copies this state, fills the
    /// slot's row from the study, sets its mask bit, and counts one step.
    pub fn after_acquire(&self, study: &StudyRecord, slot: usize) -> Self {
        let mut next = self.clone();
        next.mask[slot] = true;
        next.features[slot * self.d..(slot + 1) * self.d]
            .copy_from_slice(&study.slots[slot].features);
        next.steps_taken += 1;
        next
    }

    /// Successor state after terminating: mask and features unchanged, one
    /// more step counted.
    pub fn after_terminate(&self) -> Self {
        let mut next = self.clone();
        // A terminated episode is over however many steps remain, so the
        // counter saturates at the budget: the state itself then rejects any
        // further step, not just states that ran out of budget.
        next.steps_taken = self.n() + 1;
        next
    }

    /// Flatten the feature matrix row-major into `out`. With `append_mask`
    /// the mask bits follow as 0.0/1.0 values.
    pub fn flatten_into(&self, out: &mut Vec<f32>, append_mask: bool) {
        out.clear();
        out.extend_from_slice(&self.features);
        if append_mask {
            out.extend(self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }));
        }
    }

    /// Input width of the flattened representation.
    pub fn flat_dim(n: usize, d: usize, append_mask: bool) -> usize {
        n * d + if append_mask { n } else { 0 }
    }
}

/// Build the state induced by an acquisition mask: acquired rows copy the
/// study's features, unacquired rows are zero, `steps_taken` equals the
/// number of acquired slots.
pub fn apply_mask(study: &StudyRecord, mask: &[bool]) -> Result<AcquisitionState> {
    let n = study.n_slots();
    if mask.len() != n {
        return Err(Error::MaskLength {
            expected: n,
            got: mask.len(),
        });
    }
    let d = study.feature_dim().unwrap_or(0);
    let mut state = AcquisitionState::empty(n, d);
    for (i, &m) in mask.iter().enumerate() {
        if m {
            state.mask[i] = true;
            state.features[i * d..(i + 1) * d].copy_from_slice(&study.slots[i].features);
            state.steps_taken += 1;
        }
    }
    Ok(state)
}

/// An agent action: stop acquiring, or acquire one slot.
///
/// Action indices place `Terminate` at 0 and `Acquire(i)` at `i + 1`, so a
/// study with `n` slots has exactly `n + 1` actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "usize", from = "usize")]
pub enum Action {
    Terminate,
    Acquire(usize),
}

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Terminate => 0,
            Action::Acquire(i) => i + 1,
        }
    }

    pub fn from_index(index: usize) -> Self {
        if index == 0 {
            Action::Terminate
        } else {
            Action::Acquire(index - 1)
        }
    }

    /// Number of distinct actions for an `n`-slot study.
    pub fn count(n: usize) -> usize {
        n + 1
    }
}

impl From<Action> for usize {
    fn from(a: Action) -> usize {
        a.index()
    }
}

impl From<usize> for Action {
    fn from(index: usize) -> Action {
        Action::from_index(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn study(n: usize, d: usize) -> StudyRecord {
        let scheme = ViewScheme::default();
        StudyRecord {
            study_id: "s0".into(),
            label: 1,
            slots: (0..n)
                .map(|i| ViewSlot {
                    view: scheme.families.get(i).cloned().unwrap_or_else(|| "V".into()),
                    cost: 1.0,
                    features: (0..d).map(|k| (i * d + k) as f32 + 0.5).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn apply_mask_all_false_gives_zero_matrix() {
        let s = study(4, 3);
        let st = apply_mask(&s, &[false; 4]).unwrap();
        assert!(st.features().iter().all(|&v| v == 0.0));
        assert_eq!(st.steps_taken(), 0);
        assert_eq!(st.acquired_count(), 0);
    }

    #[test]
    fn apply_mask_all_true_reproduces_study_features() {
        let s = study(4, 3);
        let st = apply_mask(&s, &[true; 4]).unwrap();
        for i in 0..4 {
            assert_eq!(st.row(i), &s.slots[i].features[..]);
        }
        assert_eq!(st.steps_taken(), 4);
    }

    #[test]
    fn apply_mask_single_slot() {
        let s = study(4, 3);
        let st = apply_mask(&s, &[true, false, false, false]).unwrap();
        assert_eq!(st.row(0), &s.slots[0].features[..]);
        for i in 1..4 {
            assert!(st.row(i).iter().all(|&v| v == 0.0));
        }
        assert_eq!(st.steps_taken(), 1);
    }

    #[test]
    fn apply_mask_rejects_length_mismatch() {
        let s = study(4, 3);
        assert!(matches!(
            apply_mask(&s, &[true; 3]),
            Err(Error::MaskLength { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn apply_mask_is_idempotent_in_content() {
        let s = study(4, 5);
        let mask = [true, false, true, false];
        let a = apply_mask(&s, &mask).unwrap();
        let b = apply_mask(&s, &mask).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn action_indexing_round_trips() {
        assert_eq!(Action::Terminate.index(), 0);
        assert_eq!(Action::Acquire(0).index(), 1);
        assert_eq!(Action::Acquire(3).index(), 4);
        for idx in 0..Action::count(4) {
            assert_eq!(Action::from_index(idx).index(), idx);
        }
    }

    #[test]
    fn scheme_slot_names_number_occurrences() {
        let scheme = ViewScheme::default();
        let names: Vec<String> = (0..4).map(|i| scheme.slot_name(i)).collect();
        assert_eq!(names, ["PLAX_1", "PLAX_2", "PSAX_1", "PSAX_2"]);
        let fams = scheme.family_slots();
        assert_eq!(fams[0], ("PLAX".to_string(), vec![0, 1]));
        assert_eq!(fams[1], ("PSAX".to_string(), vec![2, 3]));
    }

    #[test]
    fn validate_flags_bad_label() {
        let mut s = study(4, 3);
        s.label = 3;
        assert!(matches!(
            s.validate(4, None),
            Err(Error::LabelOutOfRange { label: 3, .. })
        ));
    }

    #[test]
    fn validate_flags_non_finite_feature() {
        let mut s = study(4, 3);
        s.slots[2].features[1] = f32::NAN;
        assert!(matches!(
            s.validate(4, None),
            Err(Error::NonFiniteFeature { slot: 2, .. })
        ));
    }
}
