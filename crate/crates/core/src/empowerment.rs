//! Empowerment: channel capacity between current actions and next
//! observations.
//!
//! Potential empowerment maximizes mutual information over *all* action
//! distributions (the free-choice assumption) and is computed here with
//! Blahut–Arimoto alternating maximization; actual empowerment evaluates the
//! mutual information at the action distribution the agent really uses, with
//! no maximization. Each quantity exists in a subjective form (channel built
//! from the agent's model) and an objective form (channel built from the
//! true environment dynamics), giving four reading variants.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{product_labels, GenerativeModel, Modality};
use crate::env::Environment;
use crate::prob::{mutual_information_bits, mutual_information_bits_raw, Categorical, Channel, ProbError};
use crate::Real;

#[derive(Debug, Error)]
pub enum EmpowermentError {
    #[error("invalid channel: {0}")]
    InvalidChannel(ProbError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid oracle supports at most 3 inputs, channel has {0}")]
    TooManyInputs(usize),
    #[error("policy labels do not match channel inputs")]
    LabelMismatch,
    #[error("belief labels do not match model states")]
    ModelShapeMismatch,
    #[error("unknown modality {0:?}")]
    UnknownModality(String),
    #[error("channel outputs are not the declared modality product: {0}")]
    NotAProductSpace(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Which channel the reading was computed from, and whether the action
/// distribution was optimized (potential) or fixed by the agent (actual).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmpowermentVariant {
    SubjectivePotential,
    SubjectiveActual,
    ObjectivePotential,
    ObjectiveActual,
}

impl EmpowermentVariant {
    pub fn is_potential(self) -> bool {
        matches!(self, Self::SubjectivePotential | Self::ObjectivePotential)
    }
}

impl std::fmt::Display for EmpowermentVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::SubjectivePotential => "subjective-potential",
            Self::SubjectiveActual => "subjective-actual",
            Self::ObjectivePotential => "objective-potential",
            Self::ObjectiveActual => "objective-actual",
        };
        f.write_str(s)
    }
}

/// One empowerment measurement.
///
/// Potential readings carry the maximizing input distribution and the
/// optimality certificate gap from the solver; actual readings are plain
/// mutual-information evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct EmpowermentReading<F: Real> {
    pub variant: EmpowermentVariant,
    pub bits: F,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_input: Option<Categorical<F>>,
    pub iterations: usize,
    pub converged: bool,
    /// Kuhn–Tucker certificate: (max over inputs − mean over the input
    /// distribution) of the row-vs-marginal divergence, in bits. The true
    /// capacity lies within this gap above `bits`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_gap: Option<F>,
}

impl<F: Real> EmpowermentReading<F> {
    /// Relabel the reading; used when the same solver ran on an
    /// objectively-constructed channel.
    pub fn with_variant(mut self, variant: EmpowermentVariant) -> Self {
        self.variant = variant;
        self
    }
}

pub const DEFAULT_MAX_ITER: usize = 10_000;

// ---------------------------------------------------------------------------
// Blahut–Arimoto
// ---------------------------------------------------------------------------

/// Channel capacity by Blahut–Arimoto alternating maximization.
///
/// Starts from the uniform input distribution and repeats
/// `p(a) ∝ p(a) · exp D(row_a ‖ marginal)` until both the per-iteration
/// capacity change and the Kuhn–Tucker bound gap
/// `max_a D(row_a ‖ marginal) − Σ_a p(a) D(row_a ‖ marginal)` drop below
/// `tol` (bits). The returned `bits` is the mutual information of the
/// returned input distribution, a certified lower bound on capacity.
pub fn blahut_arimoto<F: Real>(
    ch: &Channel<F>,
    tol: F,
    max_iter: usize,
) -> Result<EmpowermentReading<F>, EmpowermentError> {
    if tol <= F::zero() {
        return Err(EmpowermentError::InvalidParameter("tol must be > 0".into()));
    }
    if max_iter == 0 {
        return Err(EmpowermentError::InvalidParameter("max_iter must be ≥ 1".into()));
    }

    let n_in = ch.num_inputs();
    let n_out = ch.num_outputs();
    let rows = ch.rows();
    let uniform = F::one() / F::of(n_in as f64);
    let mut p = vec![uniform; n_in];
    let mut marginal = vec![F::zero(); n_out];
    let mut divergences = vec![F::zero(); n_in]; // D(row_a ‖ marginal), nats

    let mut prev_bits = F::nan();
    let mut bits = F::zero();
    let mut gap_bits = F::infinity();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iter {
        iterations = it;
        for m in marginal.iter_mut() {
            *m = F::zero();
        }
        for (a, row) in rows.iter().enumerate() {
            let pa = p[a];
            if pa > F::zero() {
                for (o, &q) in row.iter().enumerate() {
                    marginal[o] = marginal[o] + pa * q;
                }
            }
        }

        let mut upper = F::neg_infinity();
        let mut lower = F::zero();
        for (a, row) in rows.iter().enumerate() {
            let mut d = F::zero();
            for (o, &q) in row.iter().enumerate() {
                if q > F::zero() {
                    d = d + q * (q / marginal[o]).ln();
                }
            }
            divergences[a] = d;
            if d > upper {
                upper = d;
            }
            lower = lower + p[a] * d;
        }

        bits = (lower / F::LN_2()).max(F::zero());
        gap_bits = ((upper - lower) / F::LN_2()).max(F::zero());
        let delta = (bits - prev_bits).abs();
        if gap_bits < tol && delta < tol {
            converged = true;
            break;
        }
        prev_bits = bits;

        // Multiplicative update, shifted by the max divergence so the
        // exponentials stay in range.
        let mut sum = F::zero();
        for a in 0..n_in {
            p[a] = p[a] * (divergences[a] - upper).exp();
            sum = sum + p[a];
        }
        for pa in p.iter_mut() {
            *pa = *pa / sum;
        }
    }

    let optimal_input = Categorical::normalize(ch.input_labels().to_vec(), p)?;
    Ok(EmpowermentReading {
        variant: EmpowermentVariant::SubjectivePotential,
        bits,
        optimal_input: Some(optimal_input),
        iterations,
        converged,
        bound_gap: Some(gap_bits),
    })
}

/// Capacity with the solver defaults: tolerance [`Real::CAPACITY_TOL`],
/// [`DEFAULT_MAX_ITER`] iterations.
pub fn channel_capacity_bits<F: Real>(ch: &Channel<F>) -> Result<EmpowermentReading<F>, EmpowermentError> {
    blahut_arimoto(ch, F::CAPACITY_TOL, DEFAULT_MAX_ITER)
}

// ---------------------------------------------------------------------------
// Grid-search oracle
// ---------------------------------------------------------------------------

/// Exhaustive lower bound on capacity: the best mutual information over the
/// simplex grid `{p : p_i = k_i / grid_steps}`. Independent of the
/// Blahut–Arimoto iteration; tractable only for channels with at most three
/// inputs.
pub fn capacity_oracle<F: Real>(ch: &Channel<F>, grid_steps: usize) -> Result<F, EmpowermentError> {
    if grid_steps == 0 {
        return Err(EmpowermentError::InvalidParameter("grid_steps must be ≥ 1".into()));
    }
    let n = ch.num_inputs();
    if n > 3 {
        return Err(EmpowermentError::TooManyInputs(n));
    }
    let rows = ch.rows();
    let g = F::of(grid_steps as f64);
    let mut best = F::zero();
    match n {
        1 => {}
        2 => {
            let mut p = [F::zero(); 2];
            for i in 0..=grid_steps {
                p[0] = F::of(i as f64) / g;
                p[1] = F::one() - p[0];
                let mi = mutual_information_bits_raw(&p, rows);
                if mi > best {
                    best = mi;
                }
            }
        }
        3 => {
            let mut p = [F::zero(); 3];
            for i in 0..=grid_steps {
                p[0] = F::of(i as f64) / g;
                for j in 0..=(grid_steps - i) {
                    p[1] = F::of(j as f64) / g;
                    p[2] = (F::one() - p[0] - p[1]).max(F::zero());
                    let mi = mutual_information_bits_raw(&p, rows);
                    if mi > best {
                        best = mi;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Actual empowerment
// ---------------------------------------------------------------------------

/// Mutual information at a fixed action distribution — the free-choice
/// assumption dropped. Always at most the channel capacity.
pub fn actual_empowerment<F: Real>(
    ch: &Channel<F>,
    policy: &Categorical<F>,
) -> Result<EmpowermentReading<F>, EmpowermentError> {
    if policy.labels() != ch.input_labels() {
        return Err(EmpowermentError::LabelMismatch);
    }
    let bits = mutual_information_bits(policy, ch)?;
    Ok(EmpowermentReading {
        variant: EmpowermentVariant::SubjectiveActual,
        bits,
        optimal_input: None,
        iterations: 0,
        converged: true,
        bound_gap: None,
    })
}

// ---------------------------------------------------------------------------
// Channel constructions
// ---------------------------------------------------------------------------

/// The action → predicted-observation channel under the agent's model: the
/// row for action `a` is the one-step observation forecast
/// `likelihood · (transition_a · belief)`.
pub fn subjective_channel<F: Real>(
    model: &GenerativeModel<F>,
    belief: &Categorical<F>,
) -> Result<Channel<F>, EmpowermentError> {
    if belief.labels() != model.state_labels() {
        return Err(EmpowermentError::ModelShapeMismatch);
    }
    let mut rows = Vec::with_capacity(model.num_actions());
    for a in 0..model.num_actions() {
        let predicted_state = model.transition(a).forward(belief)?;
        let predicted_obs = model.likelihood().forward(&predicted_state)?;
        rows.push(predicted_obs);
    }
    Ok(Channel::from_rows(model.action_labels().to_vec(), rows)?)
}

/// The action → observation channel under the true environment dynamics,
/// with the ground-truth state drawn from `state_prior`:
/// `row_a(o) = Σ_s prior(s) · p_true(o | s, a)`.
pub fn objective_channel<F: Real>(
    env: &dyn Environment<F>,
    state_prior: &Categorical<F>,
) -> Result<Channel<F>, EmpowermentError> {
    if state_prior.labels() != env.state_labels() {
        return Err(EmpowermentError::ModelShapeMismatch);
    }
    let n_actions = env.action_labels().len();
    let n_obs = env.observation_labels().len();
    let mut rows = Vec::with_capacity(n_actions);
    for a in 0..n_actions {
        let mut row = vec![F::zero(); n_obs];
        for (s, &ps) in state_prior.probs().iter().enumerate() {
            if ps > F::zero() {
                let emission = env.emission(s, a);
                for (o, &q) in emission.probs().iter().enumerate() {
                    row[o] = row[o] + ps * q;
                }
            }
        }
        rows.push(Categorical::normalize(env.observation_labels().to_vec(), row)?);
    }
    Ok(Channel::from_rows(env.action_labels().to_vec(), rows)?)
}

/// Marginalize a product-observation channel onto a subset of modalities.
///
/// Outputs of `ch` must be exactly the product labels of `modalities`
/// (rightmost varying fastest); the result keeps the named modalities in
/// their declared order and sums probability over the dropped coordinates.
/// By the data-processing inequality this never increases capacity.
pub fn modality_restricted_channel<F: Real>(
    ch: &Channel<F>,
    modalities: &[Modality],
    keep: &[&str],
) -> Result<Channel<F>, EmpowermentError> {
    if modalities.is_empty() {
        return Err(EmpowermentError::NotAProductSpace("no modalities declared".into()));
    }
    let product: usize = modalities.iter().map(|m| m.values.len()).product();
    if product != ch.num_outputs() {
        return Err(EmpowermentError::NotAProductSpace(format!(
            "product size {product} != {} outputs",
            ch.num_outputs()
        )));
    }
    let expected = product_labels(modalities);
    if expected != ch.output_labels() {
        return Err(EmpowermentError::NotAProductSpace(
            "output labels differ from the modality product".into(),
        ));
    }
    if keep.is_empty() {
        return Err(EmpowermentError::InvalidParameter("keep_modalities is empty".into()));
    }
    let mut keep_idx = Vec::with_capacity(keep.len());
    for name in keep {
        let idx = modalities
            .iter()
            .position(|m| m.name == *name)
            .ok_or_else(|| EmpowermentError::UnknownModality(name.to_string()))?;
        if !keep_idx.contains(&idx) {
            keep_idx.push(idx);
        }
    }
    keep_idx.sort_unstable();

    let kept: Vec<Modality> = keep_idx.iter().map(|&i| modalities[i].clone()).collect();
    let kept_labels = product_labels(&kept);

    // Mixed-radix strides of the full product, rightmost fastest.
    let mut strides = vec![1usize; modalities.len()];
    for i in (0..modalities.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * modalities[i + 1].values.len();
    }
    let mut kept_strides = vec![1usize; kept.len()];
    for i in (0..kept.len().saturating_sub(1)).rev() {
        kept_strides[i] = kept_strides[i + 1] * kept[i + 1].values.len();
    }

    // full output index -> kept output index
    let index_map: Vec<usize> = (0..product)
        .map(|full| {
            keep_idx
                .iter()
                .enumerate()
                .map(|(k, &m)| {
                    let coord = (full / strides[m]) % modalities[m].values.len();
                    coord * kept_strides[k]
                })
                .sum()
        })
        .collect();

    let mut rows = Vec::with_capacity(ch.num_inputs());
    for row in ch.rows() {
        let mut out = vec![F::zero(); kept_labels.len()];
        for (full, &p) in row.iter().enumerate() {
            out[index_map[full]] = out[index_map[full]] + p;
        }
        rows.push(Categorical::normalize(kept_labels.clone(), out)?);
    }
    Ok(Channel::from_rows(ch.input_labels().to_vec(), rows)?)
}
