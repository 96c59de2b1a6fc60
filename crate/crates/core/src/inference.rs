//! The agentic action chain: belief updating, expected-free-energy scoring,
//! policy selection, and episode execution.
//!
//! Action evaluation decomposes expected free energy into an epistemic term
//! (expected information gain about hidden states, in bits) and a pragmatic
//! term (expected log-preference, in nats):
//!
//! `efe(a) = −epistemic_nats(a) − pragmatic(a)`, lower is better.
//!
//! Minimizing it trades off resolving uncertainty against realizing
//! preferred observations without a separate exploration bonus.

use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Belief, GenerativeModel};
use crate::empowerment::{
    actual_empowerment, channel_capacity_bits, objective_channel, subjective_channel,
    EmpowermentError, EmpowermentReading, EmpowermentVariant,
};
use crate::env::Environment;
use crate::prob::{Categorical, ProbError};
use crate::Real;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("unknown observation {0:?}")]
    UnknownObservation(String),
    #[error(
        "observation {observation:?} has zero likelihood under the predictive state for action {action:?}"
    )]
    ImpossibleObservation { action: String, observation: String },
    #[error("model and environment labels do not match: {0}")]
    LabelMismatch(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Empowerment(#[from] EmpowermentError),
}

/// Expected-free-energy decomposition for one candidate action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct EfeBreakdown<F: Real> {
    pub action: String,
    /// Expected information gain about hidden states, bits, ≥ 0.
    pub epistemic_bits: F,
    /// Expected log-preference of the predicted observation, nats.
    pub pragmatic: F,
    /// `−epistemic_nats − pragmatic`; lower is better.
    pub efe: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// Deterministically take the minimal-EFE action, first index on ties.
    Argmax,
    /// Sample from the softmax policy.
    Softmax,
}

impl std::fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Argmax => f.write_str("argmax"),
            Self::Softmax => f.write_str("softmax"),
        }
    }
}

// ---------------------------------------------------------------------------
// One-step predictions and the Bayesian update
// ---------------------------------------------------------------------------

fn action_index<F: Real>(model: &GenerativeModel<F>, action: &str) -> Result<usize, InferenceError> {
    model
        .action_index(action)
        .ok_or_else(|| InferenceError::UnknownAction(action.to_string()))
}

/// Predicted hidden-state distribution one step ahead:
/// `q(s' | a) = transition_a · q(s)`.
pub fn predict_state<F: Real>(
    belief: &Belief<F>,
    action: &str,
    model: &GenerativeModel<F>,
) -> Result<Categorical<F>, InferenceError> {
    let a = action_index(model, action)?;
    Ok(model.transition(a).forward(&belief.dist)?)
}

/// Predicted observation distribution one step ahead:
/// `q(o' | a) = likelihood · q(s' | a)`.
pub fn predict_obs<F: Real>(
    belief: &Belief<F>,
    action: &str,
    model: &GenerativeModel<F>,
) -> Result<Categorical<F>, InferenceError> {
    let predicted = predict_state(belief, action, model)?;
    Ok(model.likelihood().forward(&predicted)?)
}

/// Exact posterior after acting and observing:
/// `q(s' | o, a) ∝ likelihood[s', o] · q(s' | a)`, step incremented.
pub fn bayesian_update<F: Real>(
    belief: &Belief<F>,
    action: &str,
    observation: &str,
    model: &GenerativeModel<F>,
) -> Result<Belief<F>, InferenceError> {
    let o = model
        .obs_index(observation)
        .ok_or_else(|| InferenceError::UnknownObservation(observation.to_string()))?;
    let predicted = predict_state(belief, action, model)?;
    let weights: Vec<F> = predicted
        .probs()
        .iter()
        .enumerate()
        .map(|(s, &p)| p * model.likelihood().row(s)[o])
        .collect();
    let dist = Categorical::normalize(model.state_labels().to_vec(), weights).map_err(|e| match e {
        ProbError::AllZeroWeights => InferenceError::ImpossibleObservation {
            action: action.to_string(),
            observation: observation.to_string(),
        },
        other => InferenceError::Prob(other),
    })?;
    Ok(Belief { dist, step: belief.step + 1 })
}

// ---------------------------------------------------------------------------
// Expected free energy
// ---------------------------------------------------------------------------

/// Expected reduction in hidden-state uncertainty from taking `action`:
/// `E_{q(o|a)} KL[ q(s'|o,a) ‖ q(s'|a) ]` in bits. Equals the mutual
/// information between predicted state and predicted observation.
pub fn expected_info_gain<F: Real>(
    belief: &Belief<F>,
    action: &str,
    model: &GenerativeModel<F>,
) -> Result<F, InferenceError> {
    let a = action_index(model, action)?;
    let predicted_state = model.transition(a).forward(&belief.dist)?;
    let predicted_obs = model.likelihood().forward(&predicted_state)?;

    let mut gain_nats = F::zero();
    for (o, &po) in predicted_obs.probs().iter().enumerate() {
        if po <= F::zero() {
            continue;
        }
        // Posterior given this hypothetical observation.
        for (s, &ps) in predicted_state.probs().iter().enumerate() {
            let joint = ps * model.likelihood().row(s)[o];
            if joint > F::zero() {
                let posterior = joint / po;
                gain_nats = gain_nats + po * posterior * (posterior / ps).ln();
            }
        }
    }
    Ok((gain_nats / F::LN_2()).max(F::zero()))
}

/// Preference-weighted forecast: `Σ_o q(o|a) · preference[o]`, nats.
pub fn expected_utility<F: Real>(
    belief: &Belief<F>,
    action: &str,
    model: &GenerativeModel<F>,
) -> Result<F, InferenceError> {
    let predicted_obs = predict_obs(belief, action, model)?;
    let mut total = F::zero();
    for (o, &po) in predicted_obs.probs().iter().enumerate() {
        if po > F::zero() {
            total = total + po * model.preferences()[o];
        }
    }
    Ok(total)
}

/// Score one action: epistemic and pragmatic terms plus their combination.
pub fn efe<F: Real>(
    belief: &Belief<F>,
    action: &str,
    model: &GenerativeModel<F>,
) -> Result<EfeBreakdown<F>, InferenceError> {
    let epistemic_bits = expected_info_gain(belief, action, model)?;
    let pragmatic = expected_utility(belief, action, model)?;
    let efe = -(epistemic_bits * F::LN_2()) - pragmatic;
    Ok(EfeBreakdown { action: action.to_string(), epistemic_bits, pragmatic, efe })
}

/// Score every action of the model at the given belief.
pub fn efe_all<F: Real>(
    belief: &Belief<F>,
    model: &GenerativeModel<F>,
) -> Result<Vec<EfeBreakdown<F>>, InferenceError> {
    model
        .action_labels()
        .iter()
        .map(|a| efe(belief, a, model))
        .collect()
}

// ---------------------------------------------------------------------------
// Policy selection
// ---------------------------------------------------------------------------

/// Softmax policy over actions: `p(a) ∝ exp(−gamma · efe(a))`.
pub fn softmax_policy<F: Real>(
    breakdowns: &[EfeBreakdown<F>],
    gamma: F,
) -> Result<Categorical<F>, ProbError> {
    let labels: Vec<String> = breakdowns.iter().map(|b| b.action.clone()).collect();
    let min_efe = breakdowns
        .iter()
        .map(|b| b.efe)
        .fold(F::infinity(), |acc, v| acc.min(v));
    let weights: Vec<F> = breakdowns
        .iter()
        .map(|b| (-gamma * (b.efe - min_efe)).exp())
        .collect();
    Categorical::normalize(labels, weights)
}

fn argmax_action<F: Real>(breakdowns: &[EfeBreakdown<F>]) -> usize {
    let mut best = 0;
    for i in 1..breakdowns.len() {
        if breakdowns[i].efe < breakdowns[best].efe {
            best = i;
        }
    }
    best
}

/// Select an action at the given belief. Returns the chosen action label and
/// the softmax policy. Argmax mode ignores the sampler and takes the
/// minimal-EFE action (first index on ties); softmax mode draws from the
/// policy using the provided generator.
pub fn select_action_with_rng<F: Real, R: Rng>(
    belief: &Belief<F>,
    model: &GenerativeModel<F>,
    gamma: F,
    mode: SelectionMode,
    rng: &mut R,
) -> Result<(String, Categorical<F>), InferenceError> {
    let breakdowns = efe_all(belief, model)?;
    let policy = softmax_policy(&breakdowns, gamma)?;
    let chosen = match mode {
        SelectionMode::Argmax => argmax_action(&breakdowns),
        SelectionMode::Softmax => {
            let weights: Vec<f64> = policy
                .probs()
                .iter()
                .map(|p| p.to_f64().expect("probability fits in f64"))
                .collect();
            rand::distributions::WeightedIndex::new(&weights)
                .expect("policy has positive mass")
                .sample(rng)
        }
    };
    Ok((model.action_labels()[chosen].clone(), policy))
}

/// [`select_action_with_rng`] with a fresh seeded generator.
pub fn select_action<F: Real>(
    belief: &Belief<F>,
    model: &GenerativeModel<F>,
    gamma: F,
    mode: SelectionMode,
    rng_seed: u64,
) -> Result<(String, Categorical<F>), InferenceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    select_action_with_rng(belief, model, gamma, mode, &mut rng)
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

/// Everything recorded at one time step of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct EpisodeStep<F: Real> {
    /// Belief the agent held before acting.
    pub prior: Categorical<F>,
    /// Expected-free-energy decomposition for every action.
    pub efe: Vec<EfeBreakdown<F>>,
    /// Softmax action policy at this belief.
    pub policy: Categorical<F>,
    pub action: String,
    pub observation: String,
    /// Belief after the Bayesian update on (action, observation).
    pub posterior: Categorical<F>,
    /// Subjective-potential, subjective-actual, and objective-potential
    /// empowerment at the pre-action belief.
    pub empowerment: Vec<EmpowermentReading<F>>,
}

impl<F: Real> EpisodeStep<F> {
    pub fn reading(&self, variant: EmpowermentVariant) -> Option<&EmpowermentReading<F>> {
        self.empowerment.iter().find(|r| r.variant == variant)
    }
}

/// Full record of one simulated episode; the unit of phenotyping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct EpisodeTrace<F: Real> {
    pub model_id: String,
    pub seed: u64,
    pub gamma: F,
    pub mode: SelectionMode,
    pub steps: Vec<EpisodeStep<F>>,
}

impl<F: Real + Serialize> EpisodeTrace<F> {
    /// Full-precision JSON form, trailing newline included.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serialization cannot fail");
        s.push('\n');
        s
    }
}

/// Run one episode: alternate policy selection, an environment step, and a
/// Bayesian belief update for `horizon` steps, recording EFE breakdowns and
/// empowerment readings along the way. Deterministic given the seed.
pub fn run_episode<F: Real>(
    model: &GenerativeModel<F>,
    model_id: &str,
    env: &mut dyn Environment<F>,
    horizon: usize,
    gamma: F,
    mode: SelectionMode,
    seed: u64,
) -> Result<EpisodeTrace<F>, InferenceError> {
    if model.action_labels() != env.action_labels() {
        return Err(InferenceError::LabelMismatch(format!(
            "model actions {:?} vs environment actions {:?}",
            model.action_labels(),
            env.action_labels()
        )));
    }
    if model.obs_labels() != env.observation_labels() {
        return Err(InferenceError::LabelMismatch(format!(
            "model has {} observations, environment {}",
            model.obs_labels().len(),
            env.observation_labels().len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut belief = Belief::initial(model);
    let mut steps = Vec::with_capacity(horizon);

    for _ in 0..horizon {
        let subjective = subjective_channel(model, &belief.dist)?;
        let subjective_potential = channel_capacity_bits(&subjective)?;
        let objective = objective_channel(env, &env.default_state_prior())?;
        let objective_potential = channel_capacity_bits(&objective)?
            .with_variant(EmpowermentVariant::ObjectivePotential);

        let breakdowns = efe_all(&belief, model)?;
        let policy = softmax_policy(&breakdowns, gamma)?;
        let (action, _) =
            select_action_with_rng(&belief, model, gamma, mode, &mut rng)?;

        // The distribution the agent actually draws from: a point mass under
        // argmax, the softmax policy otherwise.
        let realized = match mode {
            SelectionMode::Argmax => {
                Categorical::delta(model.action_labels().to_vec(), &action)?
            }
            SelectionMode::Softmax => policy.clone(),
        };
        let subjective_actual = actual_empowerment(&subjective, &realized)?;

        let action_idx = model.action_index(&action).expect("action from model labels");
        let obs_idx = env.step(action_idx);
        let observation = env.observation_labels()[obs_idx].clone();

        let posterior = bayesian_update(&belief, &action, &observation, model)?;

        steps.push(EpisodeStep {
            prior: belief.dist.clone(),
            efe: breakdowns,
            policy,
            action,
            observation,
            posterior: posterior.dist.clone(),
            empowerment: vec![subjective_potential, subjective_actual, objective_potential],
        });
        belief = posterior;
    }

    Ok(EpisodeTrace { model_id: model_id.to_string(), seed, gamma, mode, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tmaze::{build_canonical_model, Context, MinimalTMaze};
    use proptest::prelude::*;

    fn model() -> GenerativeModel<f64> {
        build_canonical_model()
    }

    fn start_belief(m: &GenerativeModel<f64>) -> Belief<f64> {
        Belief::initial(m)
    }

    fn delta_belief(m: &GenerativeModel<f64>, state: &str) -> Belief<f64> {
        Belief {
            dist: Categorical::delta(m.state_labels().to_vec(), state).unwrap(),
            step: 1,
        }
    }

    #[test]
    fn predict_state_cue_splits_over_cue_states() {
        let m = model();
        let p = predict_state(&start_belief(&m), "Cue", &m).unwrap();
        assert!((p.prob_of("CueRight").unwrap() - 0.5).abs() < 1e-15);
        assert!((p.prob_of("CueLeft").unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn predict_state_left_hits_trap() {
        let m = model();
        let p = predict_state(&start_belief(&m), "Left", &m).unwrap();
        assert_eq!(p.prob_of("Trap").unwrap(), 1.0);
    }

    #[test]
    fn predict_state_cue_state_absorbs_cue() {
        let m = model();
        let p = predict_state(&delta_belief(&m, "CueRight"), "Cue", &m).unwrap();
        assert_eq!(p.prob_of("CueRight").unwrap(), 1.0);
    }

    #[test]
    fn predict_obs_left_is_coin_toss() {
        let m = model();
        let p = predict_obs(&start_belief(&m), "Left", &m).unwrap();
        assert!((p.prob_of("Cheese").unwrap() - 0.5).abs() < 1e-15);
        assert!((p.prob_of("Shock").unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn predict_obs_cue_splits_cue_observations() {
        let m = model();
        let p = predict_obs(&start_belief(&m), "Cue", &m).unwrap();
        assert!((p.prob_of("RightObs").unwrap() - 0.5).abs() < 1e-15);
        assert!((p.prob_of("LeftObs").unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn predict_obs_post_cue_right_is_cheese() {
        let m = model();
        let p = predict_obs(&delta_belief(&m, "CueRight"), "Right", &m).unwrap();
        assert_eq!(p.prob_of("Cheese").unwrap(), 1.0);
    }

    #[test]
    fn update_cue_then_right_obs_resolves_context() {
        let m = model();
        let b = bayesian_update(&start_belief(&m), "Cue", "RightObs", &m).unwrap();
        assert_eq!(b.dist.prob_of("CueRight").unwrap(), 1.0);
        assert_eq!(b.step, 1);
    }

    #[test]
    fn update_left_then_cheese_lands_in_trap() {
        let m = model();
        let b = bayesian_update(&start_belief(&m), "Left", "Cheese", &m).unwrap();
        assert_eq!(b.dist.prob_of("Trap").unwrap(), 1.0);
    }

    #[test]
    fn update_uniform_cue_states_resolves_on_left_obs() {
        let m = model();
        let dist = Categorical::new(
            m.state_labels().to_vec(),
            vec![0.0, 0.0, 0.5, 0.5, 0.0, 0.0],
        )
        .unwrap();
        let b = Belief { dist, step: 1 };
        let after = bayesian_update(&b, "Cue", "LeftObs", &m).unwrap();
        assert_eq!(after.dist.prob_of("CueLeft").unwrap(), 1.0);
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let m = model();
        // After Left the predictive state is the trap, which never emits
        // cue observations.
        let err = bayesian_update(&start_belief(&m), "Left", "RightObs", &m).unwrap_err();
        assert!(matches!(err, InferenceError::ImpossibleObservation { .. }));
    }

    #[test]
    fn info_gain_cue_is_one_bit_others_zero() {
        let m = model();
        let b = start_belief(&m);
        assert!((expected_info_gain(&b, "Cue", &m).unwrap() - 1.0).abs() < 1e-12);
        assert!(expected_info_gain(&b, "Left", &m).unwrap().abs() < 1e-12);
        assert!(expected_info_gain(&b, "Right", &m).unwrap().abs() < 1e-12);
    }

    #[test]
    fn info_gain_zero_when_predictive_state_is_delta() {
        let m = model();
        let g = expected_info_gain(&delta_belief(&m, "CueRight"), "Right", &m).unwrap();
        assert!(g.abs() < 1e-12);
    }

    #[test]
    fn utility_post_cue_right_is_cheese_preference() {
        let m = model();
        let u = expected_utility(&delta_belief(&m, "CueRight"), "Right", &m).unwrap();
        assert!((u - 3.0).abs() < 1e-12);
    }

    #[test]
    fn utility_of_trap_entry_cancels() {
        let m = model();
        let u = expected_utility(&start_belief(&m), "Left", &m).unwrap();
        assert!(u.abs() < 1e-12);
    }

    #[test]
    fn utility_flat_preferences_is_zero() {
        let m = model().with_preferences(vec![0.0; 4]).unwrap();
        let u = expected_utility(&start_belief(&m), "Cue", &m).unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn efe_values_at_start() {
        let m = model();
        let b = start_belief(&m);
        let cue = efe(&b, "Cue", &m).unwrap();
        assert!((cue.epistemic_bits - 1.0).abs() < 1e-12);
        assert!(cue.pragmatic.abs() < 1e-12);
        assert!((cue.efe - (-std::f64::consts::LN_2)).abs() < 1e-12);

        let left = efe(&b, "Left", &m).unwrap();
        assert!(left.efe.abs() < 1e-12);
    }

    #[test]
    fn efe_post_cue_right_is_minus_three() {
        let m = model();
        let r = efe(&delta_belief(&m, "CueRight"), "Right", &m).unwrap();
        assert!((r.efe - (-3.0)).abs() < 1e-12);
    }

    #[test]
    fn efe_components_negate_to_total() {
        let m = model();
        for action in ["Left", "Right", "Cue"] {
            let b = efe(&start_belief(&m), action, &m).unwrap();
            let recombined = -(b.epistemic_bits * std::f64::consts::LN_2) - b.pragmatic;
            assert!((b.efe - recombined).abs() < 1e-10);
        }
    }

    #[test]
    fn argmax_at_start_is_cue() {
        let m = model();
        let (action, _) =
            select_action(&start_belief(&m), &m, 16.0, SelectionMode::Argmax, 0).unwrap();
        assert_eq!(action, "Cue");
    }

    #[test]
    fn argmax_after_cue_left_goes_left() {
        let m = model();
        let (action, _) =
            select_action(&delta_belief(&m, "CueLeft"), &m, 16.0, SelectionMode::Argmax, 0).unwrap();
        assert_eq!(action, "Left");
    }

    #[test]
    fn all_equal_efe_gives_uniform_policy() {
        // Flat preferences at a resolved belief: every action scores 0.
        let m = model().with_preferences(vec![0.0; 4]).unwrap();
        let (_, policy) =
            select_action(&delta_belief(&m, "CueLeft"), &m, 7.3, SelectionMode::Softmax, 5).unwrap();
        for &p in policy.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_converges_to_argmax_at_high_gamma() {
        let m = model();
        let b = start_belief(&m);
        let breakdowns = efe_all(&b, &m).unwrap();
        let policy = softmax_policy(&breakdowns, 1e4).unwrap();
        let argmax = Categorical::delta(m.action_labels().to_vec(), "Cue").unwrap();
        assert!(argmax.kl_bits(&policy).unwrap() < 1e-6);
    }

    #[test]
    fn preference_shift_leaves_argmax_unchanged() {
        let m = model();
        let shifted = {
            let c: Vec<f64> = m.preferences().iter().map(|&v| v + 5.0).collect();
            m.with_preferences(c).unwrap()
        };
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let weights: Vec<f64> = (0..6).map(|_| rng.gen_range(0.01..1.0)).collect();
            let dist = Categorical::normalize(m.state_labels().to_vec(), weights).unwrap();
            let b = Belief { dist, step: 0 };
            let (a1, _) = select_action(&b, &m, 16.0, SelectionMode::Argmax, 0).unwrap();
            let (a2, _) = select_action(&b, &shifted, 16.0, SelectionMode::Argmax, 0).unwrap();
            assert_eq!(a1, a2);
        }
    }

    #[test]
    fn episode_cheese_left_goes_cue_then_left() {
        let m = model();
        let mut env = MinimalTMaze::new(Context::CheeseLeft);
        let trace =
            run_episode(&m, "minimal-tmaze", &mut env, 2, 16.0, SelectionMode::Argmax, 0).unwrap();
        let actions: Vec<&str> = trace.steps.iter().map(|s| s.action.as_str()).collect();
        let obs: Vec<&str> = trace.steps.iter().map(|s| s.observation.as_str()).collect();
        assert_eq!(actions, ["Cue", "Left"]);
        assert_eq!(obs, ["LeftObs", "Cheese"]);
    }

    #[test]
    fn episode_is_deterministic_given_seed() {
        let m = model();
        let run = |seed| {
            let mut env = MinimalTMaze::from_seed(seed);
            run_episode(&m, "minimal-tmaze", &mut env, 2, 16.0, SelectionMode::Softmax, seed)
                .unwrap()
        };
        let a = run(42);
        let b = run(42);
        assert_eq!(a, b);
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn episode_empowerment_ordering_post_cue_beats_baseline_beats_trap() {
        let m = model();

        let mut env = MinimalTMaze::new(Context::CheeseLeft);
        let explorer =
            run_episode(&m, "minimal-tmaze", &mut env, 2, 16.0, SelectionMode::Argmax, 0).unwrap();
        let baseline = explorer.steps[0]
            .reading(EmpowermentVariant::SubjectivePotential)
            .unwrap()
            .bits;
        let post_cue = explorer.steps[1]
            .reading(EmpowermentVariant::SubjectivePotential)
            .unwrap()
            .bits;

        // Force the trap by swapping preferences (cheese aversion + cue
        // penalty), then read step-2 empowerment.
        let trap_model = m
            .with_preferences(vec![-3.0, 3.0, -1.0, -1.0])
            .unwrap();
        let mut env = MinimalTMaze::new(Context::CheeseLeft);
        let trapped = run_episode(
            &trap_model,
            "minimal-tmaze",
            &mut env,
            2,
            16.0,
            SelectionMode::Argmax,
            0,
        )
        .unwrap();
        assert!(matches!(trapped.steps[0].action.as_str(), "Left" | "Right"));
        let trap = trapped.steps[1]
            .reading(EmpowermentVariant::SubjectivePotential)
            .unwrap()
            .bits;

        assert!(post_cue > baseline && baseline > trap);
        assert!((post_cue - 3.0_f64.log2()).abs() < 1e-6);
        assert!((baseline - 1.0).abs() < 1e-6);
        assert!(trap.abs() < 1e-9);
    }

    #[test]
    fn episode_label_mismatch_rejected() {
        let m = model();
        let mut spec = m.to_spec();
        spec.actions[0] = "SomethingElse".into();
        let renamed = GenerativeModel::from_spec(spec).unwrap();
        let mut env = MinimalTMaze::new(Context::CheeseLeft);
        let err = run_episode(&renamed, "x", &mut env, 1, 16.0, SelectionMode::Argmax, 0)
            .unwrap_err();
        assert!(matches!(err, InferenceError::LabelMismatch(_)));
    }

    // Random-model generators for the property suites.
    fn arb_probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1e-3..1.0f64, n).prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
    }

    prop_compose! {
        fn arb_model()(
            (n_states, n_obs, n_actions) in (2usize..5, 2usize..5, 2usize..4)
        )(
            likelihood in prop::collection::vec(arb_probs(n_obs), n_states),
            transitions in prop::collection::vec(
                prop::collection::vec(arb_probs(n_states), n_states), n_actions),
            prior in arb_probs(n_states),
            n_obs in Just(n_obs),
            n_states in Just(n_states),
            n_actions in Just(n_actions),
        ) -> GenerativeModel<f64> {
            let spec = crate::agent::ModelSpec {
                states: (0..n_states).map(|i| format!("s{i}")).collect(),
                observations: (0..n_obs).map(|i| format!("o{i}")).collect(),
                modalities: None,
                actions: (0..n_actions).map(|i| format!("a{i}")).collect(),
                likelihood,
                transitions,
                preferences: vec![0.0; n_obs],
                initial_prior: prior,
            };
            GenerativeModel::from_spec(spec).unwrap()
        }
    }

    proptest! {
        // Mixing the posterior back over predicted observations recovers the
        // predictive state distribution.
        #[test]
        fn posterior_consistency(m in arb_model()) {
            let b = Belief::initial(&m);
            for action in m.action_labels() {
                let predicted = predict_state(&b, action, &m).unwrap();
                let obs_dist = predict_obs(&b, action, &m).unwrap();
                let mut mixed = vec![0.0; predicted.len()];
                for (o, obs_label) in m.obs_labels().iter().enumerate() {
                    let po = obs_dist.probs()[o];
                    if po > 0.0 {
                        let posterior = bayesian_update(&b, action, obs_label, &m).unwrap();
                        for (s, &q) in posterior.dist.probs().iter().enumerate() {
                            mixed[s] += po * q;
                        }
                    }
                }
                for (s, &p) in predicted.probs().iter().enumerate() {
                    prop_assert!((mixed[s] - p).abs() < 1e-10);
                }
            }
        }

        // The KL-based info gain equals the mutual information between
        // predicted state and predicted observation.
        #[test]
        fn info_gain_two_route_equivalence(m in arb_model()) {
            let b = Belief::initial(&m);
            for (a, action) in m.action_labels().iter().enumerate() {
                let gain = expected_info_gain(&b, action, &m).unwrap();
                let predicted = m.transition(a).forward(&b.dist).unwrap();
                let mi = crate::prob::mutual_information_bits(&predicted, m.likelihood()).unwrap();
                prop_assert!((gain - mi).abs() < 1e-10);
            }
        }
    }
}
