//! Manipulation batteries and agency phenotype classification.
//!
//! A battery takes a generative model, applies structural manipulations
//! (preference inversion, likelihood corruption, preference flattening),
//! runs seeded episodes for each manipulated model, and classifies the
//! per-step subjective-potential empowerment into the three-phenotype
//! ladder: Zero (bits ≈ 0), High (bits ≈ log₂ |actions|), Intermediate
//! between them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::GenerativeModel;
use crate::empowerment::EmpowermentVariant;
use crate::env::Environment;
use crate::inference::{run_episode, EpisodeTrace, InferenceError, SelectionMode};
use crate::Real;

#[derive(Debug, Error)]
pub enum PhenotypeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empowerment {bits} bits is outside [0, log2({n_actions})]")]
    OutOfRange { bits: f64, n_actions: usize },
    #[error("episode failed for spec {spec:?}, seed {seed}: {source}")]
    Episode {
        spec: String,
        seed: u64,
        #[source]
        source: InferenceError,
    },
    #[error("model error: {0}")]
    Model(#[from] crate::agent::ModelError),
}

// ---------------------------------------------------------------------------
// Phenotype classification
// ---------------------------------------------------------------------------

/// Agency classes, ordered Zero < Intermediate < High.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhenotypeClass {
    Zero,
    Intermediate,
    High,
}

impl std::fmt::Display for PhenotypeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Intermediate => f.write_str("Intermediate"),
            Self::High => f.write_str("High"),
        }
    }
}

/// Classification band around the exact endpoints.
pub const PHENOTYPE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct PhenotypeLabel<F: Real> {
    pub class: PhenotypeClass,
    pub bits: F,
    /// `log₂(number of actions)`, the ceiling of the ladder.
    pub max_bits: F,
}

/// Threshold an empowerment reading against the action-count ceiling:
/// Zero below `ε`, High above `log₂ n − ε`, Intermediate between.
pub fn classify_phenotype<F: Real>(
    bits: F,
    n_actions: usize,
) -> Result<PhenotypeLabel<F>, PhenotypeError> {
    if n_actions == 0 {
        return Err(PhenotypeError::InvalidParameter("n_actions must be ≥ 1".into()));
    }
    let eps = F::of(PHENOTYPE_EPSILON);
    let max_bits = F::of((n_actions as f64).log2());
    if bits < -eps || bits > max_bits + eps {
        return Err(PhenotypeError::OutOfRange {
            bits: bits.to_f64().unwrap_or(f64::NAN),
            n_actions,
        });
    }
    let class = if bits < eps {
        PhenotypeClass::Zero
    } else if bits > max_bits - eps {
        PhenotypeClass::High
    } else {
        PhenotypeClass::Intermediate
    };
    Ok(PhenotypeLabel { class, bits, max_bits })
}

// ---------------------------------------------------------------------------
// Manipulations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// The model unchanged.
    Standard,
    /// Swap the cheese/shock preference values and penalize the cue
    /// observations at −1, so the trap is entered at the first step.
    PreferenceInverted,
    /// Mix every likelihood row with the uniform distribution:
    /// `(1 − α) · row + α · uniform`.
    LikelihoodCorrupted,
    /// All preferences zero.
    FlatPreference,
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Standard => "standard",
            Self::PreferenceInverted => "preference-inverted",
            Self::LikelihoodCorrupted => "likelihood-corrupted",
            Self::FlatPreference => "flat-preference",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(Self::Standard),
            "preference-inverted" => Ok(Self::PreferenceInverted),
            "likelihood-corrupted" => Ok(Self::LikelihoodCorrupted),
            "flat-preference" => Ok(Self::FlatPreference),
            other => Err(format!("unknown preset {other:?}")),
        }
    }
}

/// A named manipulation of the generative model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationSpec {
    pub name: String,
    pub preset: Preset,
    /// Corruption mixing weight for [`Preset::LikelihoodCorrupted`],
    /// in `[0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl ManipulationSpec {
    pub fn new(preset: Preset) -> Self {
        Self { name: preset.to_string(), preset, alpha: None }
    }

    pub fn with_alpha(preset: Preset, alpha: f64) -> Self {
        Self { name: format!("{preset}-{alpha}"), preset, alpha: Some(alpha) }
    }
}

/// Apply a manipulation, returning the modified model. The input model is
/// untouched.
pub fn apply_manipulation<F: Real>(
    model: &GenerativeModel<F>,
    spec: &ManipulationSpec,
) -> Result<GenerativeModel<F>, PhenotypeError> {
    match spec.preset {
        Preset::Standard => Ok(model.clone()),
        Preset::FlatPreference => {
            Ok(model.with_preferences(vec![F::zero(); model.obs_labels().len()])?)
        }
        Preset::PreferenceInverted => {
            let cheese = model.obs_index("Cheese").ok_or_else(|| {
                PhenotypeError::InvalidParameter(
                    "preference inversion needs an observation named \"Cheese\"".into(),
                )
            })?;
            let shock = model.obs_index("Shock").ok_or_else(|| {
                PhenotypeError::InvalidParameter(
                    "preference inversion needs an observation named \"Shock\"".into(),
                )
            })?;
            let old = model.preferences();
            let mut inverted = vec![F::of(-1.0); old.len()];
            inverted[cheese] = old[shock];
            inverted[shock] = old[cheese];
            Ok(model.with_preferences(inverted)?)
        }
        Preset::LikelihoodCorrupted => {
            let alpha = spec.alpha.ok_or_else(|| {
                PhenotypeError::InvalidParameter("likelihood corruption requires alpha".into())
            })?;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(PhenotypeError::InvalidParameter(format!(
                    "alpha {alpha} outside [0, 1]"
                )));
            }
            let a = F::of(alpha);
            let uniform = F::one() / F::of(model.obs_labels().len() as f64);
            let rows = model
                .likelihood()
                .rows()
                .iter()
                .map(|row| row.iter().map(|&p| (F::one() - a) * p + a * uniform).collect())
                .collect();
            Ok(model.with_likelihood(rows)?)
        }
    }
}

// ---------------------------------------------------------------------------
// Batteries
// ---------------------------------------------------------------------------

/// One (manipulation, seed) episode with its per-step phenotype labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct BatteryCell<F: Real> {
    pub spec_name: String,
    pub seed: u64,
    pub trace: EpisodeTrace<F>,
    /// Per-step labels from the subjective-potential reading.
    pub phenotypes: Vec<PhenotypeLabel<F>>,
}

/// Across-seed statistics of the subjective-potential bits at one step of
/// one manipulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct StepAggregate<F: Real> {
    pub spec_name: String,
    pub step: usize,
    pub mean_bits: F,
    pub min_bits: F,
    pub max_bits: F,
    /// Classification of the mean.
    pub class: PhenotypeClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Clone",
    deserialize = "F: Deserialize<'de>"
))]
pub struct PhenotypeReport<F: Real> {
    pub cells: Vec<BatteryCell<F>>,
    pub aggregates: Vec<StepAggregate<F>>,
}

/// Run one battery cell: manipulate, simulate, classify.
pub fn run_cell<F: Real>(
    model: &GenerativeModel<F>,
    model_id: &str,
    env: &mut dyn Environment<F>,
    spec: &ManipulationSpec,
    seed: u64,
    horizon: usize,
    gamma: F,
    mode: SelectionMode,
) -> Result<BatteryCell<F>, PhenotypeError> {
    let manipulated = apply_manipulation(model, spec)?;
    let trace = run_episode(&manipulated, model_id, env, horizon, gamma, mode, seed).map_err(
        |source| PhenotypeError::Episode { spec: spec.name.clone(), seed, source },
    )?;
    let n_actions = manipulated.num_actions();
    let phenotypes = trace
        .steps
        .iter()
        .map(|step| {
            let bits = step
                .reading(EmpowermentVariant::SubjectivePotential)
                .expect("episodes record subjective-potential readings")
                .bits;
            classify_phenotype(bits, n_actions)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BatteryCell { spec_name: spec.name.clone(), seed, trace, phenotypes })
}

/// Aggregate finished cells into per-(spec, step) statistics. Cells are
/// reduced in (spec, seed) order so the result is independent of both input
/// permutation and execution order.
pub fn aggregate_cells<F: Real>(
    cells: &[BatteryCell<F>],
    spec_order: &[String],
) -> Result<Vec<StepAggregate<F>>, PhenotypeError> {
    let mut aggregates = Vec::new();
    for spec_name in spec_order {
        let mut group: Vec<&BatteryCell<F>> =
            cells.iter().filter(|c| &c.spec_name == spec_name).collect();
        group.sort_by_key(|c| c.seed);
        if group.is_empty() {
            continue;
        }
        let horizon = group[0].trace.steps.len();
        for step in 0..horizon {
            let bits: Vec<F> = group
                .iter()
                .map(|c| {
                    c.trace.steps[step]
                        .reading(EmpowermentVariant::SubjectivePotential)
                        .expect("subjective-potential recorded")
                        .bits
                })
                .collect();
            let n = F::of(bits.len() as f64);
            let mean = bits.iter().copied().sum::<F>() / n;
            let min = bits.iter().copied().fold(F::infinity(), F::min);
            let max = bits.iter().copied().fold(F::neg_infinity(), F::max);
            let n_actions = group[0].trace.steps[step].policy.len();
            let class = classify_phenotype(mean, n_actions)?.class;
            aggregates.push(StepAggregate {
                spec_name: spec_name.clone(),
                step,
                mean_bits: mean,
                min_bits: min,
                max_bits: max,
                class,
            });
        }
    }
    Ok(aggregates)
}

/// Run the full battery: every manipulation crossed with every seed.
/// `env_factory` builds a fresh environment for a seed; cells execute
/// independently and deterministically.
pub fn run_battery<F: Real>(
    model: &GenerativeModel<F>,
    model_id: &str,
    env_factory: &dyn Fn(u64) -> Box<dyn Environment<F>>,
    seeds: &[u64],
    specs: &[ManipulationSpec],
    horizon: usize,
    gamma: F,
    mode: SelectionMode,
) -> Result<PhenotypeReport<F>, PhenotypeError> {
    if seeds.is_empty() {
        return Err(PhenotypeError::InvalidParameter("seed list is empty".into()));
    }
    if specs.is_empty() {
        return Err(PhenotypeError::InvalidParameter("manipulation list is empty".into()));
    }
    let mut cells = Vec::with_capacity(seeds.len() * specs.len());
    for spec in specs {
        for &seed in seeds {
            let mut env = env_factory(seed);
            cells.push(run_cell(model, model_id, env.as_mut(), spec, seed, horizon, gamma, mode)?);
        }
    }
    let spec_order: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
    let aggregates = aggregate_cells(&cells, &spec_order)?;
    Ok(PhenotypeReport { cells, aggregates })
}

impl<F: Real + Serialize> PhenotypeReport<F> {
    /// Full-precision JSON form, trailing newline included.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    /// Flat CSV, one row per (spec, seed, step), for plotting.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "spec",
            "seed",
            "step",
            "action",
            "observation",
            "subjective_potential_bits",
            "subjective_actual_bits",
            "objective_potential_bits",
            "phenotype",
        ])
        .expect("csv header");
        for cell in &self.cells {
            for (i, step) in cell.trace.steps.iter().enumerate() {
                let get = |v: EmpowermentVariant| {
                    step.reading(v)
                        .map(|r| r.bits.to_f64().unwrap_or(f64::NAN))
                        .unwrap_or(f64::NAN)
                };
                w.write_record([
                    cell.spec_name.clone(),
                    cell.seed.to_string(),
                    i.to_string(),
                    step.action.clone(),
                    step.observation.clone(),
                    get(EmpowermentVariant::SubjectivePotential).to_string(),
                    get(EmpowermentVariant::SubjectiveActual).to_string(),
                    get(EmpowermentVariant::ObjectivePotential).to_string(),
                    cell.phenotypes[i].class.to_string(),
                ])
                .expect("csv row");
            }
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Belief;
    use crate::inference::expected_info_gain;
    use crate::tmaze::{build_canonical_model, MinimalTMaze};

    const LOG2_3: f64 = 1.584962500721156;

    fn factory(seed: u64) -> Box<dyn Environment<f64>> {
        Box::new(MinimalTMaze::from_seed(seed))
    }

    #[test]
    fn classify_ladder_values() {
        assert_eq!(classify_phenotype(0.0, 3).unwrap().class, PhenotypeClass::Zero);
        assert_eq!(classify_phenotype(1.0, 3).unwrap().class, PhenotypeClass::Intermediate);
        assert_eq!(classify_phenotype(1.58496, 3).unwrap().class, PhenotypeClass::High);
    }

    #[test]
    fn classify_rejects_out_of_range() {
        assert!(matches!(
            classify_phenotype(2.0, 3),
            Err(PhenotypeError::OutOfRange { .. })
        ));
        assert!(matches!(
            classify_phenotype(-0.5, 3),
            Err(PhenotypeError::OutOfRange { .. })
        ));
    }

    #[test]
    fn classify_is_monotone() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * LOG2_3 / 200.0).collect();
        for w in grid.windows(2) {
            let a = classify_phenotype(w[0], 3).unwrap().class;
            let b = classify_phenotype(w[1], 3).unwrap().class;
            assert!(a <= b);
        }
    }

    #[test]
    fn standard_preset_is_identity() {
        let m = build_canonical_model::<f64>();
        let out = apply_manipulation(&m, &ManipulationSpec::new(Preset::Standard)).unwrap();
        assert_eq!(m, out);
    }

    #[test]
    fn preference_inversion_swaps_and_penalizes_cue() {
        let m = build_canonical_model::<f64>();
        let out =
            apply_manipulation(&m, &ManipulationSpec::new(Preset::PreferenceInverted)).unwrap();
        assert_eq!(out.preferences(), &[-3.0, 3.0, -1.0, -1.0]);
    }

    #[test]
    fn full_corruption_kills_cue_info_gain() {
        let m = build_canonical_model::<f64>();
        let out = apply_manipulation(
            &m,
            &ManipulationSpec::with_alpha(Preset::LikelihoodCorrupted, 1.0),
        )
        .unwrap();
        let gain = expected_info_gain(&Belief::initial(&out), "Cue", &out).unwrap();
        assert!(gain.abs() < 1e-12);
    }

    #[test]
    fn corruption_requires_alpha_in_range() {
        let m = build_canonical_model::<f64>();
        let mut spec = ManipulationSpec::new(Preset::LikelihoodCorrupted);
        assert!(matches!(
            apply_manipulation(&m, &spec),
            Err(PhenotypeError::InvalidParameter(_))
        ));
        spec.alpha = Some(1.5);
        assert!(matches!(
            apply_manipulation(&m, &spec),
            Err(PhenotypeError::InvalidParameter(_))
        ));
    }

    #[test]
    fn corruption_sweep_is_non_increasing() {
        let m = build_canonical_model::<f64>();
        let mut last = f64::INFINITY;
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let out = apply_manipulation(
                &m,
                &ManipulationSpec::with_alpha(Preset::LikelihoodCorrupted, alpha),
            )
            .unwrap();
            let gain = expected_info_gain(&Belief::initial(&out), "Cue", &out).unwrap();
            assert!(gain <= last + 1e-12, "info gain rose at alpha {alpha}");
            last = gain;
        }
    }

    #[test]
    fn standard_battery_steps_are_intermediate_then_high() {
        let m = build_canonical_model::<f64>();
        let report = run_battery(
            &m,
            "minimal-tmaze",
            &factory,
            &[0, 1, 2, 3, 4],
            &[ManipulationSpec::new(Preset::Standard)],
            2,
            16.0,
            SelectionMode::Argmax,
        )
        .unwrap();
        for cell in &report.cells {
            assert_eq!(cell.phenotypes[0].class, PhenotypeClass::Intermediate);
            assert_eq!(cell.phenotypes[1].class, PhenotypeClass::High);
            assert!((cell.phenotypes[0].bits - 1.0).abs() < 1e-6);
            assert!((cell.phenotypes[1].bits - LOG2_3).abs() < 1e-6);
        }
    }

    #[test]
    fn inverted_battery_collapses_to_zero() {
        let m = build_canonical_model::<f64>();
        let report = run_battery(
            &m,
            "minimal-tmaze",
            &factory,
            &[0, 1, 2, 3, 4],
            &[ManipulationSpec::new(Preset::PreferenceInverted)],
            2,
            16.0,
            SelectionMode::Argmax,
        )
        .unwrap();
        for cell in &report.cells {
            assert!(matches!(cell.trace.steps[0].action.as_str(), "Left" | "Right"));
            assert_eq!(cell.phenotypes[0].class, PhenotypeClass::Intermediate);
            assert_eq!(cell.phenotypes[1].class, PhenotypeClass::Zero);
        }
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let m = build_canonical_model::<f64>();
        let specs = vec![
            ManipulationSpec::new(Preset::Standard),
            ManipulationSpec::new(Preset::FlatPreference),
        ];
        let a = run_battery(&m, "x", &factory, &[5, 1, 3], &specs, 2, 16.0, SelectionMode::Argmax)
            .unwrap();
        let b = run_battery(&m, "x", &factory, &[1, 3, 5], &specs, 2, 16.0, SelectionMode::Argmax)
            .unwrap();
        assert_eq!(a.aggregates, b.aggregates);
    }

    #[test]
    fn empty_inputs_rejected() {
        let m = build_canonical_model::<f64>();
        assert!(matches!(
            run_battery(&m, "x", &factory, &[], &[ManipulationSpec::new(Preset::Standard)], 2, 16.0, SelectionMode::Argmax),
            Err(PhenotypeError::InvalidParameter(_))
        ));
        assert!(matches!(
            run_battery(&m, "x", &factory, &[0], &[], 2, 16.0, SelectionMode::Argmax),
            Err(PhenotypeError::InvalidParameter(_))
        ));
    }

    #[test]
    fn csv_has_one_row_per_spec_seed_step() {
        let m = build_canonical_model::<f64>();
        let report = run_battery(
            &m,
            "x",
            &factory,
            &[0, 1],
            &[ManipulationSpec::new(Preset::Standard)],
            2,
            16.0,
            SelectionMode::Argmax,
        )
        .unwrap();
        let csv = report.to_csv_string();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert!(lines[0].starts_with("spec,seed,step"));
    }
}
