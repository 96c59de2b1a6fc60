//! T-maze environments and their canonical agent models.
//!
//! The minimal maze has three actions (Left, Right, Cue) and four
//! observations (Cheese, Shock, RightObs, LeftObs). Cheese and shock are
//! placed left/right with equal probability; the cue observation reveals the
//! placement, and entering an arm is absorbing — every later action repeats
//! the arm's observation. The multi-modality variant factors the observation
//! into Position × Reward × Context (4 × 3 × 2 = 24 product observations),
//! which saturates empowerment at the first step unless readings are
//! restricted to a modality subset.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{GenerativeModel, Modality, ModelSpec};
use crate::env::Environment;
use crate::prob::{string_labels, Categorical};
use crate::Real;

/// Where the cheese was placed for this episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    CheeseLeft,
    CheeseRight,
}

impl Context {
    fn from_seed(seed: u64) -> Self {
        if ChaCha8Rng::seed_from_u64(seed).gen_bool(0.5) {
            Context::CheeseLeft
        } else {
            Context::CheeseRight
        }
    }

    fn label(self) -> &'static str {
        match self {
            Context::CheeseLeft => "CheeseLeft",
            Context::CheeseRight => "CheeseRight",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Center,
    ArmLeft,
    ArmRight,
    CueSite,
}

const POSITIONS: [Position; 4] =
    [Position::Center, Position::ArmLeft, Position::ArmRight, Position::CueSite];

impl Position {
    fn index(self) -> usize {
        POSITIONS.iter().position(|&p| p == self).unwrap()
    }

    fn label(self) -> &'static str {
        match self {
            Position::Center => "Center",
            Position::ArmLeft => "ArmLeft",
            Position::ArmRight => "ArmRight",
            Position::CueSite => "CueSite",
        }
    }

    /// Arms are absorbing; Center and the cue site move freely.
    fn after(self, action: usize) -> Position {
        match self {
            Position::ArmLeft | Position::ArmRight => self,
            Position::Center | Position::CueSite => match action {
                ACTION_LEFT => Position::ArmLeft,
                ACTION_RIGHT => Position::ArmRight,
                ACTION_CUE => Position::CueSite,
                _ => panic!("action index {action} out of range"),
            },
        }
    }
}

const ACTION_LEFT: usize = 0;
const ACTION_RIGHT: usize = 1;
const ACTION_CUE: usize = 2;

pub const ACTION_LABELS: [&str; 3] = ["Left", "Right", "Cue"];
pub const MINIMAL_OBS_LABELS: [&str; 4] = ["Cheese", "Shock", "RightObs", "LeftObs"];

// ---------------------------------------------------------------------------
// Minimal environment
// ---------------------------------------------------------------------------

/// Ground truth for the minimal maze. Observations are a deterministic
/// function of (context, position); the only randomness is the 50/50
/// context draw at construction.
#[derive(Debug, Clone)]
pub struct MinimalTMaze {
    context: Context,
    position: Position,
    action_labels: Vec<String>,
    obs_labels: Vec<String>,
    state_labels: Vec<String>,
}

impl MinimalTMaze {
    pub fn new(context: Context) -> Self {
        let mut state_labels = Vec::with_capacity(8);
        for ctx in [Context::CheeseLeft, Context::CheeseRight] {
            for pos in POSITIONS {
                state_labels.push(format!("{}|{}", ctx.label(), pos.label()));
            }
        }
        Self {
            context,
            position: Position::Center,
            action_labels: string_labels(&ACTION_LABELS),
            obs_labels: string_labels(&MINIMAL_OBS_LABELS),
            state_labels,
        }
    }

    /// Sample the cheese placement 50/50 from the seed.
    pub fn from_seed(seed: u64) -> Self {
        Self::new(Context::from_seed(seed))
    }

    pub fn context(&self) -> Context {
        self.context
    }

    pub fn position(&self) -> Position {
        self.position
    }

    /// Observation index emitted at a post-move position.
    fn observation_at(context: Context, position: Position) -> usize {
        match position {
            Position::ArmLeft => {
                if context == Context::CheeseLeft { 0 } else { 1 } // Cheese : Shock
            }
            Position::ArmRight => {
                if context == Context::CheeseRight { 0 } else { 1 }
            }
            Position::CueSite => {
                if context == Context::CheeseLeft { 3 } else { 2 } // LeftObs : RightObs
            }
            Position::Center => unreachable!("no action moves back to Center"),
        }
    }

    fn unpack(&self, state: usize) -> (Context, Position) {
        let ctx = if state < 4 { Context::CheeseLeft } else { Context::CheeseRight };
        (ctx, POSITIONS[state % 4])
    }
}

impl<F: Real> Environment<F> for MinimalTMaze {
    fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    fn observation_labels(&self) -> &[String] {
        &self.obs_labels
    }

    fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    fn current_state(&self) -> usize {
        let ctx = if self.context == Context::CheeseLeft { 0 } else { 1 };
        ctx * 4 + self.position.index()
    }

    fn emission(&self, state: usize, action: usize) -> Categorical<F> {
        let (ctx, pos) = self.unpack(state);
        let obs = Self::observation_at(ctx, pos.after(action));
        let mut probs = vec![F::zero(); 4];
        probs[obs] = F::one();
        Categorical::new(self.obs_labels.clone(), probs).expect("valid delta")
    }

    fn default_state_prior(&self) -> Categorical<F> {
        let mut probs = vec![F::zero(); 8];
        let half = F::of(0.5);
        probs[self.position.index()] = half;
        probs[4 + self.position.index()] = half;
        Categorical::new(self.state_labels.clone(), probs).expect("valid prior")
    }

    fn step(&mut self, action: usize) -> usize {
        self.position = self.position.after(action);
        Self::observation_at(self.context, self.position)
    }
}

// ---------------------------------------------------------------------------
// Canonical agent model
// ---------------------------------------------------------------------------

/// The six-state agent model paired with the minimal maze.
///
/// Hidden states: Start, Trap (both arms collapsed into one coin-toss
/// state), CueRight, CueLeft (cue seen, context resolved), CheeseTerm,
/// ShockTerm (deterministic terminal outcomes after the cue). The Start
/// likelihood row is uniform and never conditioned on: episodes begin at the
/// Start prior and the first observation arrives after the first action.
pub fn build_canonical_model<F: Real>() -> GenerativeModel<F> {
    let h = F::of(0.5);
    let q = F::of(0.25);
    let o = F::one();
    let z = F::zero();

    let states = string_labels(&["Start", "Trap", "CueRight", "CueLeft", "CheeseTerm", "ShockTerm"]);
    let observations = string_labels(&MINIMAL_OBS_LABELS);
    let actions = string_labels(&ACTION_LABELS);

    let likelihood = vec![
        vec![q, q, q, q], // Start: uniform, unused for conditioning
        vec![h, h, z, z], // Trap: coin toss between cheese and shock
        vec![z, z, o, z], // CueRight -> RightObs
        vec![z, z, z, o], // CueLeft -> LeftObs
        vec![o, z, z, z], // CheeseTerm -> Cheese
        vec![z, o, z, z], // ShockTerm -> Shock
    ];

    //                 Start Trap CueR CueL ChT ShT
    let left = vec![
        vec![z, o, z, z, z, z], // Start -> Trap
        vec![z, o, z, z, z, z], // Trap absorbing
        vec![z, z, z, z, z, o], // CueRight: cheese is right, going left shocks
        vec![z, z, z, z, o, z], // CueLeft: cheese is left
        vec![z, z, z, z, o, z], // terminals absorbing
        vec![z, z, z, z, z, o],
    ];
    let right = vec![
        vec![z, o, z, z, z, z],
        vec![z, o, z, z, z, z],
        vec![z, z, z, z, o, z], // CueRight: cheese is right
        vec![z, z, z, z, z, o], // CueLeft: going right shocks
        vec![z, z, z, z, o, z],
        vec![z, z, z, z, z, o],
    ];
    let cue = vec![
        vec![z, z, h, h, z, z], // Start -> either cue state
        vec![z, o, z, z, z, z],
        vec![z, z, o, z, z, z], // cue states absorbing
        vec![z, z, z, o, z, z],
        vec![z, z, z, z, o, z],
        vec![z, z, z, z, z, o],
    ];

    let spec = ModelSpec {
        states,
        observations,
        modalities: None,
        actions,
        likelihood,
        transitions: vec![left, right, cue],
        preferences: vec![F::of(3.0), F::of(-3.0), z, z],
        initial_prior: vec![o, z, z, z, z, z],
    };
    GenerativeModel::from_spec(spec).expect("canonical model is valid")
}

// ---------------------------------------------------------------------------
// Multi-modality variant
// ---------------------------------------------------------------------------

const LOC_CENTER: usize = 0;
const LOC_RIGHT: usize = 1;
const LOC_LEFT: usize = 2;
const LOC_CUE: usize = 3;

const LOCATION_VALUES: [&str; 4] = ["Center", "Right", "Left", "Cue"];
const REWARD_VALUES: [&str; 3] = ["None", "Cheese", "Shock"];
const CONTEXT_VALUES: [&str; 2] = ["Right", "Left"];

fn location_after(loc: usize, action: usize) -> usize {
    match loc {
        LOC_RIGHT | LOC_LEFT => loc,
        LOC_CENTER | LOC_CUE => match action {
            ACTION_LEFT => LOC_LEFT,
            ACTION_RIGHT => LOC_RIGHT,
            ACTION_CUE => LOC_CUE,
            _ => panic!("action index {action} out of range"),
        },
        _ => unreachable!(),
    }
}

/// Reward component index at a location: 0 None, 1 Cheese, 2 Shock.
fn reward_at(loc: usize, ctx: usize) -> usize {
    match loc {
        LOC_CENTER | LOC_CUE => 0,
        LOC_RIGHT => {
            if ctx == 0 { 1 } else { 2 }
        }
        LOC_LEFT => {
            if ctx == 1 { 1 } else { 2 }
        }
        _ => unreachable!(),
    }
}

/// Observation index in the 4 × 3 × 2 product, context varying fastest.
fn product_obs_index(loc: usize, reward: usize, ctx: usize) -> usize {
    loc * 6 + reward * 2 + ctx
}

pub fn multimodality_modalities() -> Vec<Modality> {
    vec![
        Modality { name: "Position".into(), values: string_labels(&LOCATION_VALUES) },
        Modality { name: "Reward".into(), values: string_labels(&REWARD_VALUES) },
        Modality { name: "Context".into(), values: string_labels(&CONTEXT_VALUES) },
    ]
}

fn multimodality_state_labels() -> Vec<String> {
    let mut labels = Vec::with_capacity(8);
    for loc in LOCATION_VALUES {
        for ctx in CONTEXT_VALUES {
            labels.push(format!("{loc}|{ctx}"));
        }
    }
    labels
}

/// Product-observation agent model: position is revealed deterministically,
/// reward is None away from the arms, and the context modality carries
/// uniform noise everywhere except the cue site, where it reveals the true
/// placement.
pub fn build_multimodality_model<F: Real>() -> GenerativeModel<F> {
    let modalities = multimodality_modalities();
    let observations = crate::agent::product_labels(&modalities);
    let states = multimodality_state_labels();
    let actions = string_labels(&ACTION_LABELS);
    let h = F::of(0.5);

    let mut likelihood = Vec::with_capacity(8);
    for loc in 0..4 {
        for ctx in 0..2 {
            let mut row = vec![F::zero(); 24];
            let reward = reward_at(loc, ctx);
            if loc == LOC_CUE {
                row[product_obs_index(loc, reward, ctx)] = F::one();
            } else {
                // Context modality is uninformative noise away from the cue.
                row[product_obs_index(loc, reward, 0)] = h;
                row[product_obs_index(loc, reward, 1)] = h;
            }
            likelihood.push(row);
        }
    }

    let mut transitions = Vec::with_capacity(3);
    for action in 0..3 {
        let mut matrix = Vec::with_capacity(8);
        for loc in 0..4 {
            for ctx in 0..2 {
                let mut row = vec![F::zero(); 8];
                row[location_after(loc, action) * 2 + ctx] = F::one();
                matrix.push(row);
            }
        }
        transitions.push(matrix);
    }

    let preferences = (0..24)
        .map(|obs| match (obs / 2) % 3 {
            1 => F::of(3.0),  // Cheese
            2 => F::of(-3.0), // Shock
            _ => F::zero(),
        })
        .collect();

    let mut initial_prior = vec![F::zero(); 8];
    initial_prior[LOC_CENTER * 2] = h;
    initial_prior[LOC_CENTER * 2 + 1] = h;

    let spec = ModelSpec {
        states,
        observations,
        modalities: Some(modalities),
        actions,
        likelihood,
        transitions,
        preferences,
        initial_prior,
    };
    GenerativeModel::from_spec(spec).expect("multimodality model is valid")
}

/// Ground truth for the multi-modality maze. The context modality of an
/// emitted observation is a fresh 50/50 draw away from the cue site, so the
/// environment needs its own seeded noise source.
#[derive(Debug, Clone)]
pub struct MultiModalityTMaze {
    /// Context modality index: 0 = cheese right, 1 = cheese left.
    context: usize,
    location: usize,
    rng: ChaCha8Rng,
    action_labels: Vec<String>,
    obs_labels: Vec<String>,
    state_labels: Vec<String>,
}

impl MultiModalityTMaze {
    /// `context`: 0 = cheese right, 1 = cheese left (the Context modality
    /// value order).
    pub fn new(context: Context, noise_seed: u64) -> Self {
        let ctx = match context {
            Context::CheeseRight => 0,
            Context::CheeseLeft => 1,
        };
        Self {
            context: ctx,
            location: LOC_CENTER,
            rng: ChaCha8Rng::seed_from_u64(noise_seed),
            action_labels: string_labels(&ACTION_LABELS),
            obs_labels: crate::agent::product_labels(&multimodality_modalities()),
            state_labels: multimodality_state_labels(),
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(Context::from_seed(seed), seed.wrapping_add(1))
    }
}

impl<F: Real> Environment<F> for MultiModalityTMaze {
    fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    fn observation_labels(&self) -> &[String] {
        &self.obs_labels
    }

    fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    fn current_state(&self) -> usize {
        self.location * 2 + self.context
    }

    fn emission(&self, state: usize, action: usize) -> Categorical<F> {
        let (loc, ctx) = (state / 2, state % 2);
        let new_loc = location_after(loc, action);
        let reward = reward_at(new_loc, ctx);
        let mut probs = vec![F::zero(); 24];
        if new_loc == LOC_CUE {
            probs[product_obs_index(new_loc, reward, ctx)] = F::one();
        } else {
            let h = F::of(0.5);
            probs[product_obs_index(new_loc, reward, 0)] = h;
            probs[product_obs_index(new_loc, reward, 1)] = h;
        }
        Categorical::new(self.obs_labels.clone(), probs).expect("valid emission")
    }

    fn default_state_prior(&self) -> Categorical<F> {
        let mut probs = vec![F::zero(); 8];
        let h = F::of(0.5);
        probs[self.location * 2] = h;
        probs[self.location * 2 + 1] = h;
        Categorical::new(self.state_labels.clone(), probs).expect("valid prior")
    }

    fn step(&mut self, action: usize) -> usize {
        self.location = location_after(self.location, action);
        let reward = reward_at(self.location, self.context);
        let ctx_component = if self.location == LOC_CUE {
            self.context
        } else if self.rng.gen_bool(0.5) {
            0
        } else {
            1
        };
        product_obs_index(self.location, reward, ctx_component)
    }
}

/// Build the paired multi-modality environment and agent model. The seed
/// fixes both the 50/50 context draw and the environment's context-noise
/// stream.
pub fn build_multimodality_env_and_model<F: Real>(
    seed: u64,
) -> (MultiModalityTMaze, GenerativeModel<F>) {
    (MultiModalityTMaze::from_seed(seed), build_multimodality_model())
}
