//! Sequential acquisition environment.
//!
//! An episode starts from the empty acquisition state of one study. At each
//! step the policy either acquires one view slot (paying that slot's cost at
//! the end) or terminates, at which point a predictor reads the acquired
//! features and the episode is scored:
//!
//! ```text
//! reward = [prediction == label] - lambda * sum of acquired slot costs
//! ```
//!
//! Intermediate steps carry zero reward. Episodes are hard-capped at one more
//! action than there are slots; a policy that spends its whole budget without
//! terminating times out and receives exactly zero total reward (no
//! prediction is made). With re-selection disabled the cap is unreachable —
//! once every slot is acquired only termination remains valid — so timeouts
//! can only occur when `allow_reselect` permits wasted moves.
//!
//! `step` and `action_mask` are pure functions of the visible state, so the
//! same transition logic backs training, greedy evaluation, and the contract
//! tests that drive it with random action sequences.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study::{AcquisitionState, Action, Label, StudyRecord};
use crate::synth::BayesOracle;

/// Scoring rule applied when an episode terminates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardSpec {
    /// Weight on the total cost of acquired slots.
    pub lambda: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec { lambda: 0.05 }
    }
}

impl RewardSpec {
    pub fn new(lambda: f64) -> Self {
        RewardSpec { lambda }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Terminal reward for a prediction made from the given state.
    pub fn terminal_reward(&self, correct: bool, acquisition_cost: f64) -> f64 {
        let accuracy_term = if correct { 1.0 } else { 0.0 };
        accuracy_term - self.lambda * acquisition_cost
    }
}

/// Anything that can map an acquisition state to a label.
///
/// Implemented by the trained classifier and by the closed-form posterior
/// oracle; tests substitute fixed-output stubs.
pub trait Predictor {
    fn predict(&self, state: &AcquisitionState) -> Label;
}

impl Predictor for crate::classifier::Classifier<f32> {
    fn predict(&self, state: &AcquisitionState) -> Label {
        self.predict_label(state)
    }
}

impl Predictor for BayesOracle {
    fn predict(&self, state: &AcquisitionState) -> Label {
        BayesOracle::predict(self, state)
    }
}

/// Validity of each action index (`Action::count(n)` entries, terminate
/// first) in the given state.
///
/// Termination is always valid, including from the empty state. Acquiring a
/// slot is valid when the slot is unacquired, or unconditionally when
/// re-selection is allowed. The mask does not look ahead to the step budget:
/// an acquisition that would exhaust it is still "valid" — taking it is
/// exactly how a policy times out.
pub fn action_mask(state: &AcquisitionState, allow_reselect: bool) -> Vec<bool> {
    let mut valid = Vec::with_capacity(Action::count(state.n()));
    valid.push(true);
    for slot in 0..state.n() {
        valid.push(allow_reselect || !state.is_acquired(slot));
    }
    valid
}

/// Result of applying one action.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Successor state (step counter advanced; features updated on acquire).
    pub state: AcquisitionState,
    /// Zero for every non-terminal step and for timeouts.
    pub reward: f64,
    pub done: bool,
    /// The episode ended by exhausting its step budget, not by terminating.
    pub timeout: bool,
    /// Set when the episode ended with a termination.
    pub prediction: Option<Label>,
}

/// Apply one action to a state drawn from `study`.
///
/// Errors with [`Error::StepOnDone`] when the state has already used its
/// full budget, and with [`Error::InvalidAction`] for out-of-range slots or
/// re-selection when it is disabled.
pub fn step<P: Predictor + ?Sized>(
    study: &StudyRecord,
    state: &AcquisitionState,
    action: Action,
    reward: &RewardSpec,
    predictor: &P,
    allow_reselect: bool,
) -> Result<StepOutcome> {
    let n = state.n();
    let budget = n + 1;
    if state.steps_taken() >= budget {
        return Err(Error::StepOnDone);
    }
    match action {
        Action::Terminate => {
            let prediction = predictor.predict(state);
            let cost = study.cost_of_mask(state.mask());
            let r = reward.terminal_reward(prediction == study.label, cost);
            Ok(StepOutcome {
                state: state.after_terminate(),
                reward: r,
                done: true,
                timeout: false,
                prediction: Some(prediction),
            })
        }
        Action::Acquire(slot) => {
            if slot >= n {
                return Err(Error::InvalidAction(format!(
                    "slot {slot} out of range for {n} slots"
                )));
            }
            if state.is_acquired(slot) && !allow_reselect {
                return Err(Error::InvalidAction(format!(
                    "slot {slot} already acquired and re-selection is disabled"
                )));
            }
            let next = state.after_acquire(study, slot);
            let timed_out = next.steps_taken() == budget;
            Ok(StepOutcome {
                state: next,
                reward: 0.0,
                done: timed_out,
                timeout: timed_out,
                prediction: None,
            })
        }
    }
}

/// Full trace of one episode, in replay order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub study_id: String,
    pub label: Label,
    /// Action indices in the order taken (terminate = 0, acquire slot i = i+1).
    pub actions: Vec<usize>,
    /// Per-action rewards; all zero except possibly the last.
    pub rewards: Vec<f64>,
    /// Present unless the episode timed out.
    pub prediction: Option<Label>,
    pub timeout: bool,
    /// Acquisition mask when the episode ended.
    pub final_mask: Vec<bool>,
    pub acquired_count: usize,
    /// Total cost of the acquired slots (unweighted by lambda).
    pub acquisition_cost: f64,
    pub total_reward: f64,
}

impl EpisodeRecord {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    /// Label to score this episode with: the prediction when one was made,
    /// otherwise a label guaranteed to differ from the truth so a timed-out
    /// episode counts as a misclassification rather than being dropped.
    pub fn scored_prediction(&self) -> Label {
        self.prediction
            .unwrap_or(((self.label as usize + 1) % crate::study::N_CLASSES) as Label)
    }
}

/// Run one episode from the empty state, letting `policy` pick among valid
/// actions until the episode ends.
///
/// The policy receives the current state and the validity mask from
/// [`action_mask`] and must return one of the valid actions; an invalid
/// choice surfaces as the corresponding `step` error.
pub fn run_episode<P: Predictor + ?Sized>(
    study: &StudyRecord,
    reward: &RewardSpec,
    predictor: &P,
    allow_reselect: bool,
    mut policy: impl FnMut(&AcquisitionState, &[bool]) -> Action,
) -> Result<EpisodeRecord> {
    let first = &study.slots[0];
    let mut state = AcquisitionState::empty(study.slots.len(), first.features.len());
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    let (prediction, timeout) = loop {
        let valid = action_mask(&state, allow_reselect);
        let action = policy(&state, &valid);
        let outcome = step(study, &state, action, reward, predictor, allow_reselect)?;
        actions.push(action.index());
        rewards.push(outcome.reward);
        state = outcome.state;
        if outcome.done {
            break (outcome.prediction, outcome.timeout);
        }
    };
    let acquired_count = state.acquired_count();
    let acquisition_cost = study.cost_of_mask(state.mask());
    let total_reward = rewards.iter().sum();
    Ok(EpisodeRecord {
        study_id: study.study_id.clone(),
        label: study.label,
        actions,
        rewards,
        prediction,
        timeout,
        final_mask: state.mask().to_vec(),
        acquired_count,
        acquisition_cost,
        total_reward,
    })
}

/// Write episode records as JSON lines.
pub fn write_episodes(path: &Path, episodes: &[EpisodeRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = std::io::BufWriter::new(file);
    for ep in episodes {
        serde_json::to_writer(&mut out, ep)?;
        out.write_all(b"\n").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    out.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Read episode records written by [`write_episodes`].
pub fn load_episodes(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut episodes = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ep: EpisodeRecord =
            serde_json::from_str(&line).map_err(|source| Error::MalformedLine {
                line: idx + 1,
                source,
            })?;
        episodes.push(ep);
    }
    Ok(episodes)
}
