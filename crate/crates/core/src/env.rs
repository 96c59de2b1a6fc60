//! Interface between episode execution and ground-truth environments.

use crate::prob::Categorical;
use crate::Real;

/// A ground-truth environment with hidden state.
///
/// Implementations own their state machine and any noise source; an episode
/// drives one instance exclusively. The ground-truth state space, unlike the
/// agent's hidden-state space, is fully known to the simulator — that is what
/// makes objective empowerment computable.
pub trait Environment<F: Real> {
    fn action_labels(&self) -> &[String];

    fn observation_labels(&self) -> &[String];

    /// Labels of the ground-truth state space.
    fn state_labels(&self) -> &[String];

    /// Index of the current ground-truth state.
    fn current_state(&self) -> usize;

    /// True one-step observation distribution `p(o | s, a)`: take action `a`
    /// in state `s`, return the distribution of the resulting observation.
    fn emission(&self, state: usize, action: usize) -> Categorical<F>;

    /// The state prior used for default objective-empowerment readings:
    /// the current position with the hidden context marginalized out.
    fn default_state_prior(&self) -> Categorical<F>;

    /// Apply an action: advance the hidden state and return the index of the
    /// emitted observation. Panics if `action` is out of range; callers
    /// validate labels before stepping.
    fn step(&mut self, action: usize) -> usize;
}
