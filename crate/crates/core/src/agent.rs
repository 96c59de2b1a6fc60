//! The agent's generative model: a categorical POMDP with log-preferences.
//!
//! A [`GenerativeModel`] bundles the likelihood channel (states →
//! observations), one transition channel per action (states → states), a
//! log-preference vector over observations in natural-log units, and the
//! initial state prior. Models are immutable once constructed and validated;
//! [`validate_model`] runs over the raw [`ModelSpec`] form so that broken
//! inputs can be diagnosed instead of rejected wholesale.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{Categorical, Channel};
use crate::Real;

/// One factor of a product-structured observation space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modality {
    pub name: String,
    pub values: Vec<String>,
}

/// Joins modality components into the canonical product observation label.
pub fn product_label(components: &[&str]) -> String {
    components.join("|")
}

/// Expand modalities into the full product label set, rightmost modality
/// varying fastest.
pub fn product_labels(modalities: &[Modality]) -> Vec<String> {
    let mut labels = vec![String::new()];
    for m in modalities {
        let mut next = Vec::with_capacity(labels.len() * m.values.len());
        for prefix in &labels {
            for v in &m.values {
                if prefix.is_empty() {
                    next.push(v.clone());
                } else {
                    next.push(format!("{prefix}|{v}"));
                }
            }
        }
        labels = next;
    }
    labels
}

// ---------------------------------------------------------------------------
// Raw model form and validation
// ---------------------------------------------------------------------------

/// Unvalidated model description; the JSON model-file schema.
///
/// Matrix layout: `A[state][observation]`, `B[action][state][next_state]`,
/// `C[observation]` (natural-log preference), `D[state]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct ModelSpec<F> {
    pub states: Vec<String>,
    pub observations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modalities: Option<Vec<Modality>>,
    pub actions: Vec<String>,
    #[serde(rename = "A")]
    pub likelihood: Vec<Vec<F>>,
    #[serde(rename = "B")]
    pub transitions: Vec<Vec<Vec<F>>>,
    #[serde(rename = "C")]
    pub preferences: Vec<F>,
    #[serde(rename = "D")]
    pub initial_prior: Vec<F>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelViolation {
    #[error("duplicate {kind} label {label:?}")]
    DuplicateLabel { kind: &'static str, label: String },
    #[error("{kind} label set is empty")]
    EmptyLabelSet { kind: &'static str },
    #[error("likelihood has {got} rows, expected one per state ({expected})")]
    LikelihoodShapeMismatch { expected: usize, got: usize },
    #[error("likelihood row for state {state:?} sums to {sum}, not 1")]
    LikelihoodNotStochastic { state: String, sum: f64 },
    #[error("expected one transition matrix per action ({expected}), got {got}")]
    TransitionCountMismatch { expected: usize, got: usize },
    #[error("transition matrix for action {action:?} has {got} rows, expected {expected}")]
    TransitionShapeMismatch { action: String, expected: usize, got: usize },
    #[error("transition row for action {action:?} from state {state:?} sums to {sum}, not 1")]
    TransitionNotStochastic { action: String, state: String, sum: f64 },
    #[error("negative entry {value} in {location}")]
    NegativeEntry { location: String, value: f64 },
    #[error("preference vector has {got} entries, expected one per observation ({expected})")]
    PreferenceShapeMismatch { expected: usize, got: usize },
    #[error("preference for observation {observation:?} is not finite")]
    PreferenceNotFinite { observation: String },
    #[error("initial prior has {got} entries, expected one per state ({expected})")]
    PriorShapeMismatch { expected: usize, got: usize },
    #[error("initial prior sums to {sum}, not 1")]
    PriorNotNormalized { sum: f64 },
    #[error("modality product size {product} does not match {observations} observations")]
    ModalityProductMismatch { product: usize, observations: usize },
    #[error("observation {index} is {got:?}, expected product label {expected:?}")]
    ModalityLabelMismatch { index: usize, expected: String, got: String },
}

fn check_label_set(kind: &'static str, labels: &[String], out: &mut Vec<ModelViolation>) {
    if labels.is_empty() {
        out.push(ModelViolation::EmptyLabelSet { kind });
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            out.push(ModelViolation::DuplicateLabel { kind, label: l.clone() });
        }
    }
}

fn check_stochastic_row<F: Real>(
    row: &[F],
    location: &str,
    out: &mut Vec<ModelViolation>,
) -> Option<f64> {
    for &v in row {
        if v < F::zero() || v.is_nan() {
            out.push(ModelViolation::NegativeEntry {
                location: location.to_string(),
                value: v.to_f64().unwrap_or(f64::NAN),
            });
            return None;
        }
    }
    let sum: F = row.iter().copied().sum();
    if (sum - F::one()).abs() > F::NORM_TOL {
        return Some(sum.to_f64().unwrap_or(f64::NAN));
    }
    None
}

/// Check every structural invariant of a raw model, reporting all
/// violations instead of stopping at the first. An empty result means the
/// spec can be promoted to a [`GenerativeModel`].
pub fn validate_model<F: Real>(spec: &ModelSpec<F>) -> Vec<ModelViolation> {
    let mut out = Vec::new();
    check_label_set("state", &spec.states, &mut out);
    check_label_set("observation", &spec.observations, &mut out);
    check_label_set("action", &spec.actions, &mut out);

    let n_states = spec.states.len();
    let n_obs = spec.observations.len();

    if spec.likelihood.len() != n_states {
        out.push(ModelViolation::LikelihoodShapeMismatch {
            expected: n_states,
            got: spec.likelihood.len(),
        });
    } else {
        for (s, row) in spec.likelihood.iter().enumerate() {
            if row.len() != n_obs {
                out.push(ModelViolation::LikelihoodShapeMismatch { expected: n_obs, got: row.len() });
                continue;
            }
            let loc = format!("likelihood row {:?}", spec.states[s]);
            if let Some(sum) = check_stochastic_row(row, &loc, &mut out) {
                out.push(ModelViolation::LikelihoodNotStochastic {
                    state: spec.states[s].clone(),
                    sum,
                });
            }
        }
    }

    if spec.transitions.len() != spec.actions.len() {
        out.push(ModelViolation::TransitionCountMismatch {
            expected: spec.actions.len(),
            got: spec.transitions.len(),
        });
    } else {
        for (a, matrix) in spec.transitions.iter().enumerate() {
            let action = spec.actions[a].clone();
            if matrix.len() != n_states {
                out.push(ModelViolation::TransitionShapeMismatch {
                    action,
                    expected: n_states,
                    got: matrix.len(),
                });
                continue;
            }
            for (s, row) in matrix.iter().enumerate() {
                if row.len() != n_states {
                    out.push(ModelViolation::TransitionShapeMismatch {
                        action: action.clone(),
                        expected: n_states,
                        got: row.len(),
                    });
                    continue;
                }
                let loc = format!("transition {:?} from {:?}", action, spec.states[s]);
                if let Some(sum) = check_stochastic_row(row, &loc, &mut out) {
                    out.push(ModelViolation::TransitionNotStochastic {
                        action: action.clone(),
                        state: spec.states[s].clone(),
                        sum,
                    });
                }
            }
        }
    }

    if spec.preferences.len() != n_obs {
        out.push(ModelViolation::PreferenceShapeMismatch {
            expected: n_obs,
            got: spec.preferences.len(),
        });
    } else {
        for (o, &c) in spec.preferences.iter().enumerate() {
            if !c.is_finite() {
                out.push(ModelViolation::PreferenceNotFinite {
                    observation: spec.observations[o].clone(),
                });
            }
        }
    }

    if spec.initial_prior.len() != n_states {
        out.push(ModelViolation::PriorShapeMismatch {
            expected: n_states,
            got: spec.initial_prior.len(),
        });
    } else {
        let loc = "initial prior".to_string();
        if let Some(sum) = check_stochastic_row(&spec.initial_prior, &loc, &mut out) {
            out.push(ModelViolation::PriorNotNormalized { sum });
        }
    }

    if let Some(modalities) = &spec.modalities {
        let product: usize = modalities.iter().map(|m| m.values.len()).product();
        if product != n_obs {
            out.push(ModelViolation::ModalityProductMismatch { product, observations: n_obs });
        } else {
            let expected = product_labels(modalities);
            for (i, (e, g)) in expected.iter().zip(&spec.observations).enumerate() {
                if e != g {
                    out.push(ModelViolation::ModalityLabelMismatch {
                        index: i,
                        expected: e.clone(),
                        got: g.clone(),
                    });
                }
            }
        }
    }

    out
}

// ---------------------------------------------------------------------------
// GenerativeModel
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model is invalid:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ModelViolation>),
    #[error("failed to read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A validated POMDP generative model. Immutable; shape invariants hold by
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec<F>", into = "ModelSpec<F>")]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct GenerativeModel<F: Real> {
    state_labels: Vec<String>,
    obs_labels: Vec<String>,
    modalities: Option<Vec<Modality>>,
    action_labels: Vec<String>,
    likelihood: Channel<F>,
    transitions: Vec<Channel<F>>,
    preferences: Vec<F>,
    initial_prior: Categorical<F>,
}

impl<F: Real> TryFrom<ModelSpec<F>> for GenerativeModel<F> {
    type Error = ModelError;

    fn try_from(spec: ModelSpec<F>) -> Result<Self, ModelError> {
        let violations = validate_model(&spec);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let likelihood = Channel::new(spec.states.clone(), spec.observations.clone(), spec.likelihood)
            .expect("validated likelihood");
        let transitions = spec
            .transitions
            .into_iter()
            .map(|m| Channel::new(spec.states.clone(), spec.states.clone(), m).expect("validated transitions"))
            .collect();
        let initial_prior =
            Categorical::new(spec.states.clone(), spec.initial_prior).expect("validated prior");
        Ok(Self {
            state_labels: spec.states,
            obs_labels: spec.observations,
            modalities: spec.modalities,
            action_labels: spec.actions,
            likelihood,
            transitions,
            preferences: spec.preferences,
            initial_prior,
        })
    }
}

impl<F: Real> From<GenerativeModel<F>> for ModelSpec<F> {
    fn from(m: GenerativeModel<F>) -> Self {
        ModelSpec {
            likelihood: m.likelihood.rows().to_vec(),
            transitions: m.transitions.iter().map(|c| c.rows().to_vec()).collect(),
            preferences: m.preferences,
            initial_prior: m.initial_prior.probs().to_vec(),
            states: m.state_labels,
            observations: m.obs_labels,
            modalities: m.modalities,
            actions: m.action_labels,
        }
    }
}

impl<F: Real> GenerativeModel<F> {
    pub fn from_spec(spec: ModelSpec<F>) -> Result<Self, ModelError> {
        Self::try_from(spec)
    }

    pub fn to_spec(&self) -> ModelSpec<F> {
        self.clone().into()
    }

    /// Re-run the structural checks; empty by construction.
    pub fn validate(&self) -> Vec<ModelViolation> {
        validate_model(&self.to_spec())
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn obs_labels(&self) -> &[String] {
        &self.obs_labels
    }

    pub fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    pub fn modalities(&self) -> Option<&[Modality]> {
        self.modalities.as_deref()
    }

    /// Likelihood channel `p(observation | state)`.
    pub fn likelihood(&self) -> &Channel<F> {
        &self.likelihood
    }

    /// Transition channel `p(next state | state)` for one action.
    pub fn transition(&self, action: usize) -> &Channel<F> {
        &self.transitions[action]
    }

    /// Log-preference over observations, natural-log units.
    pub fn preferences(&self) -> &[F] {
        &self.preferences
    }

    pub fn initial_prior(&self) -> &Categorical<F> {
        &self.initial_prior
    }

    pub fn num_actions(&self) -> usize {
        self.action_labels.len()
    }

    pub fn action_index(&self, action: &str) -> Option<usize> {
        self.action_labels.iter().position(|a| a == action)
    }

    pub fn obs_index(&self, obs: &str) -> Option<usize> {
        self.obs_labels.iter().position(|o| o == obs)
    }

    /// Replace the preference vector (used by model manipulations). The new
    /// vector must have one finite entry per observation.
    pub fn with_preferences(&self, preferences: Vec<F>) -> Result<Self, ModelError> {
        let mut spec = self.to_spec();
        spec.preferences = preferences;
        Self::from_spec(spec)
    }

    /// Replace the likelihood matrix (used by model manipulations).
    pub fn with_likelihood(&self, rows: Vec<Vec<F>>) -> Result<Self, ModelError> {
        let mut spec = self.to_spec();
        spec.likelihood = rows;
        Self::from_spec(spec)
    }
}

impl<F: Real + Serialize + for<'de> Deserialize<'de>> GenerativeModel<F> {
    pub fn from_json_str(json: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Canonical pretty-printed JSON form, trailing newline included. Writing
    /// and re-reading this string reproduces the model bit-exactly.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        Ok(std::fs::write(path, self.to_json_string())?)
    }
}

// ---------------------------------------------------------------------------
// Belief
// ---------------------------------------------------------------------------

/// Posterior over hidden states at a point in an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct Belief<F: Real> {
    pub dist: Categorical<F>,
    pub step: usize,
}

impl<F: Real> Belief<F> {
    pub fn initial(model: &GenerativeModel<F>) -> Self {
        Self { dist: model.initial_prior().clone(), step: 0 }
    }
}
