//! Experience replay: a bounded FIFO ring of transitions with uniform
//! minibatch sampling.

use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Default replay capacity.
pub const REPLAY_CAPACITY: usize = 20_000;

/// One environment transition in normalized action space.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    /// Normalized action, each coordinate in `[-1, 1]`.
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

impl Transition {
    /// Validate the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.state.len() != self.next_state.len() {
            return Err(Error::DimensionMismatch(format!(
                "state length {} != next-state length {}",
                self.state.len(),
                self.next_state.len()
            )));
        }
        if self.action.iter().any(|a| !(-1.0 - 1e-12..=1.0 + 1e-12).contains(a)) {
            return Err(Error::Domain(format!(
                "normalized action out of [-1,1]: {:?}",
                self.action
            )));
        }
        if !self.reward.is_finite() {
            return Err(Error::Domain(format!("non-finite reward {}", self.reward)));
        }
        Ok(())
    }
}

/// Bounded FIFO replay buffer.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    /// Buffer with the standard capacity.
    pub fn new() -> Self {
        Self::with_capacity(REPLAY_CAPACITY)
    }

    /// Buffer with a custom capacity (must be positive).
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            buf: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Append a transition, evicting the oldest when full.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        t.validate()?;
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
        Ok(())
    }

    /// Uniform sample of `batch` transitions (with replacement).
    pub fn sample<'a>(&'a self, batch: usize, rng: &mut ChaCha8Rng) -> Result<Vec<&'a Transition>> {
        if self.buf.is_empty() {
            return Err(Error::Contract("cannot sample an empty replay buffer".into()));
        }
        Ok((0..batch)
            .map(|_| &self.buf[rng.gen_range(0..self.buf.len())])
            .collect())
    }

    /// The `i`-th oldest stored transition.
    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.buf.get(i)
    }
}

impl Default for ReplayBuffer {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn t(tag: f64) -> Transition {
        Transition {
            state: vec![tag, 0.0],
            action: vec![0.5],
            reward: tag,
            next_state: vec![tag + 1.0, 0.0],
            done: false,
        }
    }

    #[test]
    fn never_exceeds_capacity_and_evicts_fifo() {
        let mut b = ReplayBuffer::with_capacity(3);
        for i in 0..5 {
            b.push(t(i as f64)).unwrap();
            assert!(b.len() <= 3);
        }
        // 0 and 1 were evicted; oldest remaining is 2.
        assert_eq!(b.get(0).unwrap().reward, 2.0);
        assert_eq!(b.get(2).unwrap().reward, 4.0);
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn default_capacity_is_twenty_thousand() {
        assert_eq!(ReplayBuffer::new().capacity(), 20_000);
    }

    #[test]
    fn rejects_malformed_transitions() {
        let mut b = ReplayBuffer::new();
        let mut bad = t(0.0);
        bad.next_state = vec![1.0];
        assert!(b.push(bad).is_err());
        let mut bad = t(0.0);
        bad.action = vec![1.5];
        assert!(b.push(bad).is_err());
        let mut bad = t(0.0);
        bad.reward = f64::NAN;
        assert!(b.push(bad).is_err());
        assert!(b.is_empty());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut b = ReplayBuffer::new();
        for i in 0..100 {
            b.push(t(i as f64)).unwrap();
        }
        let mut r1 = ChaCha8Rng::seed_from_u64(4);
        let mut r2 = ChaCha8Rng::seed_from_u64(4);
        let s1: Vec<f64> = b.sample(32, &mut r1).unwrap().iter().map(|t| t.reward).collect();
        let s2: Vec<f64> = b.sample(32, &mut r2).unwrap().iter().map(|t| t.reward).collect();
        assert_eq!(s1, s2);
        assert!(b.sample(4, &mut r1).is_ok());
        let empty = ReplayBuffer::new();
        assert!(empty.sample(4, &mut r1).is_err());
    }
}
