//! Finite categorical distributions, discrete channels, and information
//! measures in bits.
//!
//! Everything downstream (belief updates, expected free energy, capacity
//! solving) is built from the two value types here. Both types validate
//! their invariants at construction and on deserialization, so holding a
//! `Categorical` or `Channel` is proof that the probabilities are
//! non-negative and normalized. Arithmetic that produces new distributions
//! renormalizes defensively to keep rounding drift from accumulating.
//!
//! Conventions: logarithms are base 2 unless a name says otherwise, and
//! `0 · log 0 = 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("all weights are zero; cannot normalize")]
    AllZeroWeights,
    #[error("negative weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("{labels} labels but {values} values")]
    LengthMismatch { labels: usize, values: usize },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("label set is empty")]
    EmptyLabelSet,
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("label sets do not match")]
    LabelMismatch,
    #[error("p has mass at {label:?} where q has none")]
    SupportMismatch { label: String },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("channel has no rows")]
    EmptyChannel,
}

fn check_labels(labels: &[String]) -> Result<(), ProbError> {
    if labels.is_empty() {
        return Err(ProbError::EmptyLabelSet);
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(ProbError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn check_non_negative<F: Real>(values: &[F]) -> Result<(), ProbError> {
    for (i, &v) in values.iter().enumerate() {
        if v < F::zero() || v.is_nan() {
            return Err(ProbError::NegativeWeight {
                index: i,
                weight: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Categorical
// ---------------------------------------------------------------------------

/// A normalized probability distribution over a finite, labeled set.
///
/// Invariants (enforced on every construction path, including serde):
/// labels are unique and non-empty, probabilities are non-negative, and the
/// total mass is 1 within [`Real::NORM_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCategorical<F>", into = "RawCategorical<F>")]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct Categorical<F: Real> {
    labels: Vec<String>,
    probs: Vec<F>,
}

#[derive(Serialize, Deserialize)]
struct RawCategorical<F> {
    labels: Vec<String>,
    probs: Vec<F>,
}

impl<F: Real> TryFrom<RawCategorical<F>> for Categorical<F> {
    type Error = ProbError;
    fn try_from(raw: RawCategorical<F>) -> Result<Self, ProbError> {
        Categorical::new(raw.labels, raw.probs)
    }
}

impl<F: Real> From<Categorical<F>> for RawCategorical<F> {
    fn from(c: Categorical<F>) -> Self {
        RawCategorical { labels: c.labels, probs: c.probs }
    }
}

impl<F: Real> Categorical<F> {
    /// Wrap an already-normalized probability vector. The sum must be 1
    /// within [`Real::NORM_TOL`]; entries are stored bit-for-bit as given.
    pub fn new(labels: Vec<String>, probs: Vec<F>) -> Result<Self, ProbError> {
        check_labels(&labels)?;
        if labels.len() != probs.len() {
            return Err(ProbError::LengthMismatch { labels: labels.len(), values: probs.len() });
        }
        check_non_negative(&probs)?;
        let sum: F = probs.iter().copied().sum();
        if (sum - F::one()).abs() > F::NORM_TOL {
            return Err(ProbError::NotNormalized { sum: sum.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { labels, probs })
    }

    /// Normalize non-negative weights into a distribution.
    pub fn normalize(labels: Vec<String>, weights: Vec<F>) -> Result<Self, ProbError> {
        check_labels(&labels)?;
        if labels.len() != weights.len() {
            return Err(ProbError::LengthMismatch { labels: labels.len(), values: weights.len() });
        }
        check_non_negative(&weights)?;
        let sum: F = weights.iter().copied().sum();
        if sum <= F::zero() {
            return Err(ProbError::AllZeroWeights);
        }
        let probs = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { labels, probs })
    }

    /// Uniform distribution over the given labels.
    pub fn uniform(labels: Vec<String>) -> Result<Self, ProbError> {
        let n = labels.len();
        Self::normalize(labels, vec![F::one(); n])
    }

    /// Point mass on one label.
    pub fn delta(labels: Vec<String>, on: &str) -> Result<Self, ProbError> {
        check_labels(&labels)?;
        let idx = labels
            .iter()
            .position(|l| l == on)
            .ok_or_else(|| ProbError::UnknownLabel(on.to_string()))?;
        let mut probs = vec![F::zero(); labels.len()];
        probs[idx] = F::one();
        Ok(Self { labels, probs })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Probability of a label; `None` if the label is not in the support set.
    pub fn prob_of(&self, label: &str) -> Option<F> {
        self.index_of(label).map(|i| self.probs[i])
    }

    /// Index of the largest probability, first index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.probs.len() {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy −Σ p log₂ p, in bits.
    pub fn entropy_bits(&self) -> F {
        entropy_bits_raw(&self.probs)
    }

    /// KL divergence Σ p log₂(p/q) in bits. Requires identical label sets
    /// and `q > 0` wherever `p > 0`.
    pub fn kl_bits(&self, q: &Categorical<F>) -> Result<F, ProbError> {
        if self.labels != q.labels {
            return Err(ProbError::LabelMismatch);
        }
        let mut nats = F::zero();
        for i in 0..self.probs.len() {
            let p = self.probs[i];
            if p > F::zero() {
                if q.probs[i] <= F::zero() {
                    return Err(ProbError::SupportMismatch { label: self.labels[i].clone() });
                }
                nats = nats + p * (p / q.probs[i]).ln();
            }
        }
        // Gibbs: non-negative up to rounding.
        Ok((nats / F::LN_2()).max(F::zero()))
    }
}

pub(crate) fn entropy_bits_raw<F: Real>(probs: &[F]) -> F {
    let mut nats = F::zero();
    for &p in probs {
        if p > F::zero() {
            nats = nats - p * p.ln();
        }
    }
    (nats / F::LN_2()).max(F::zero())
}

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

/// A discrete memoryless channel: one probability distribution over the
/// output labels per input label, stored as a row-stochastic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel<F>", into = "RawChannel<F>")]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct Channel<F: Real> {
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    rows: Vec<Vec<F>>,
}

#[derive(Serialize, Deserialize)]
struct RawChannel<F> {
    inputs: Vec<String>,
    outputs: Vec<String>,
    rows: Vec<Vec<F>>,
}

impl<F: Real> TryFrom<RawChannel<F>> for Channel<F> {
    type Error = ProbError;
    fn try_from(raw: RawChannel<F>) -> Result<Self, ProbError> {
        Channel::new(raw.inputs, raw.outputs, raw.rows)
    }
}

impl<F: Real> From<Channel<F>> for RawChannel<F> {
    fn from(ch: Channel<F>) -> Self {
        RawChannel { inputs: ch.input_labels, outputs: ch.output_labels, rows: ch.rows }
    }
}

impl<F: Real> Channel<F> {
    /// Build from raw rows; every row must be a distribution over the
    /// output labels (sum 1 within [`Real::NORM_TOL`]).
    pub fn new(
        input_labels: Vec<String>,
        output_labels: Vec<String>,
        rows: Vec<Vec<F>>,
    ) -> Result<Self, ProbError> {
        check_labels(&input_labels)?;
        check_labels(&output_labels)?;
        if rows.is_empty() {
            return Err(ProbError::EmptyChannel);
        }
        if rows.len() != input_labels.len() {
            return Err(ProbError::LengthMismatch {
                labels: input_labels.len(),
                values: rows.len(),
            });
        }
        for row in &rows {
            if row.len() != output_labels.len() {
                return Err(ProbError::LengthMismatch {
                    labels: output_labels.len(),
                    values: row.len(),
                });
            }
            check_non_negative(row)?;
            let sum: F = row.iter().copied().sum();
            if (sum - F::one()).abs() > F::NORM_TOL {
                return Err(ProbError::NotNormalized { sum: sum.to_f64().unwrap_or(f64::NAN) });
            }
        }
        Ok(Self { input_labels, output_labels, rows })
    }

    /// Build from one categorical row per input; all rows must share the
    /// same output label set.
    pub fn from_rows(
        input_labels: Vec<String>,
        rows: Vec<Categorical<F>>,
    ) -> Result<Self, ProbError> {
        let first = rows.first().ok_or(ProbError::EmptyChannel)?;
        let output_labels = first.labels().to_vec();
        for r in &rows {
            if r.labels() != output_labels.as_slice() {
                return Err(ProbError::LabelMismatch);
            }
        }
        let raw = rows.into_iter().map(|r| r.probs).collect();
        Channel::new(input_labels, output_labels, raw)
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn num_inputs(&self) -> usize {
        self.input_labels.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_labels.len()
    }

    pub fn row(&self, input: usize) -> &[F] {
        &self.rows[input]
    }

    pub fn rows(&self) -> &[Vec<F>] {
        &self.rows
    }

    pub fn row_categorical(&self, input: usize) -> Categorical<F> {
        Categorical::normalize(self.output_labels.clone(), self.rows[input].clone())
            .expect("stored row is a valid distribution")
    }

    /// Push an input distribution through the channel: the output marginal
    /// `out(o) = Σ_i p(i) · row_i(o)`, renormalized.
    pub fn forward(&self, input: &Categorical<F>) -> Result<Categorical<F>, ProbError> {
        if input.labels() != self.input_labels.as_slice() {
            return Err(ProbError::LabelMismatch);
        }
        let mut out = vec![F::zero(); self.output_labels.len()];
        for (i, &p) in input.probs().iter().enumerate() {
            if p > F::zero() {
                for (o, &q) in self.rows[i].iter().enumerate() {
                    out[o] = out[o] + p * q;
                }
            }
        }
        Categorical::normalize(self.output_labels.clone(), out)
    }
}

// ---------------------------------------------------------------------------
// Mutual information
// ---------------------------------------------------------------------------

/// Mutual information I(input; output) in bits:
///
/// `I = Σ_{i,o} p(i) p(o|i) log₂[ p(o|i) / Σ_j p(j) p(o|j) ]`
pub fn mutual_information_bits<F: Real>(
    input: &Categorical<F>,
    ch: &Channel<F>,
) -> Result<F, ProbError> {
    if input.labels() != ch.input_labels() {
        return Err(ProbError::LabelMismatch);
    }
    Ok(mutual_information_bits_raw(input.probs(), ch.rows()))
}

/// Label-free kernel shared by [`mutual_information_bits`] and the capacity
/// grid oracle. `rows` must be row-stochastic and `probs` normalized.
pub(crate) fn mutual_information_bits_raw<F: Real>(probs: &[F], rows: &[Vec<F>]) -> F {
    let n_out = rows[0].len();
    let mut marginal = vec![F::zero(); n_out];
    for (i, &p) in probs.iter().enumerate() {
        if p > F::zero() {
            for (o, &q) in rows[i].iter().enumerate() {
                marginal[o] = marginal[o] + p * q;
            }
        }
    }
    let mut nats = F::zero();
    for (i, &p) in probs.iter().enumerate() {
        if p > F::zero() {
            for (o, &q) in rows[i].iter().enumerate() {
                if q > F::zero() {
                    nats = nats + p * q * (q / marginal[o]).ln();
                }
            }
        }
    }
    (nats / F::LN_2()).max(F::zero())
}

pub(crate) fn string_labels(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}
