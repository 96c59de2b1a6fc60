//! Discrete active-inference agents and empowerment-based agency phenotyping.
//!
//! The crate simulates agents that hold a categorical POMDP world model
//! (likelihood, controlled transitions, log-preferences over observations,
//! initial state prior), act by minimizing expected free energy, and are
//! scored by *empowerment*: the channel capacity between present actions and
//! next observations. Empowerment trajectories are then thresholded into
//! agency phenotypes (zero / intermediate / high).
//!
//! Layout mirrors the processing chain:
//!
//! - [`prob`] — categorical distributions, channels, entropy / KL / mutual
//!   information in bits.
//! - [`agent`] — the generative model container, validation, JSON model files.
//! - [`env`] — the ground-truth environment interface driven during episodes.
//! - [`empowerment`] — Blahut–Arimoto capacity, a grid-search oracle, and the
//!   subjective/objective × potential/actual reading variants.
//! - [`inference`] — belief updates, expected-free-energy scoring, action
//!   selection, and the episode runner.
//! - [`tmaze`] — the minimal T-maze environment, its canonical agent model,
//!   and the multi-modality product-observation variant.
//! - [`phenotyping`] — model manipulations, phenotype classification, and
//!   batched episode batteries.
//!
//! All numeric code is generic over the scalar type through [`Real`];
//! concrete aliases for the common instantiations live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub mod agent;
pub mod empowerment;
pub mod env;
pub mod inference;
pub mod phenotyping;
pub mod prob;
pub mod tmaze;

/// Scalar type for all probability arithmetic.
///
/// Implementations fix the tolerance constants the library enforces; the
/// values are scaled to the precision of the type (a sum-to-one check at
/// `1e-12` is meaningless in `f32`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance on the sum-to-one invariant of probability vectors.
    const NORM_TOL: Self;

    /// Default convergence tolerance for the capacity solver, in bits.
    const CAPACITY_TOL: Self;

    /// Convert an `f64` constant, panicking only if the target type cannot
    /// represent any nearby value (never the case for f32/f64).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }
}

impl Real for f64 {
    const NORM_TOL: Self = 1e-12;
    const CAPACITY_TOL: Self = 1e-9;
}

impl Real for f32 {
    const NORM_TOL: Self = 1e-5;
    const CAPACITY_TOL: Self = 1e-5;
}

pub type Categorical64 = prob::Categorical<f64>;
pub type Channel64 = prob::Channel<f64>;
pub type GenerativeModel64 = agent::GenerativeModel<f64>;
pub type Belief64 = agent::Belief<f64>;
pub type EmpowermentReading64 = empowerment::EmpowermentReading<f64>;
pub type EpisodeTrace64 = inference::EpisodeTrace<f64>;
pub type PhenotypeReport64 = phenotyping::PhenotypeReport<f64>;

pub type Categorical32 = prob::Categorical<f32>;
pub type Channel32 = prob::Channel<f32>;
