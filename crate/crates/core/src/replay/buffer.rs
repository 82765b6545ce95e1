use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Replay, ReplayError};
use crate::eval::{Part, TrainExample};

fn slot(part: Part) -> usize {
    match part {
        Part::ProverWon => 0,
        Part::AdversaryWon => 1,
        Part::Auxiliary => 2,
    }
}

/// Examples split by part.
///
/// With balancing on, every batch takes the same number of examples from
/// each nonempty part and the value loss of a prover-won or adversary-won
/// example is weighted by that part's share of all value-bearing examples.
/// With balancing off, batches are drawn uniformly from all examples and
/// value-bearing examples keep weight 1. Auxiliary examples always carry
/// weight 0.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    parts: [VecDeque<TrainExample>; 3],
    capacity: Option<usize>,
    balance: bool,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(seed: u64, balance: bool) -> ReplayBuffer {
        ReplayBuffer {
            parts: Default::default(),
            capacity: None,
            balance,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Keeps at most `capacity` examples per part, dropping the oldest.
    pub fn with_capacity(mut self, capacity: usize) -> ReplayBuffer {
        self.capacity = Some(capacity);
        self
    }

    pub fn balance(&self) -> bool {
        self.balance
    }

    pub fn push(&mut self, example: TrainExample) {
        let part = &mut self.parts[slot(example.part)];
        part.push_back(example);
        if let Some(cap) = self.capacity {
            while part.len() > cap {
                part.pop_front();
            }
        }
    }

    pub fn add_replay(&mut self, replay: &Replay) {
        for e in &replay.examples {
            self.push(e.clone());
        }
    }

    pub fn part_len(&self, part: Part) -> usize {
        self.parts[slot(part)].len()
    }

    pub fn len(&self) -> usize {
        self.parts.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.parts.iter_mut().for_each(VecDeque::clear);
    }

    pub fn examples(&self, part: Part) -> impl Iterator<Item = &TrainExample> {
        self.parts[slot(part)].iter()
    }

    /// Value-loss weight of examples drawn from `part`.
    pub fn value_weight(&self, part: Part) -> f64 {
        if part == Part::Auxiliary {
            return 0.0;
        }
        if !self.balance {
            return 1.0;
        }
        let total = self.part_len(Part::ProverWon) + self.part_len(Part::AdversaryWon);
        if total == 0 {
            return 0.0;
        }
        self.part_len(part) as f64 / total as f64
    }

    /// Draws `batch_size` examples with replacement.
    pub fn sample_batch(&mut self, batch_size: usize) -> Result<Vec<TrainExample>, ReplayError> {
        let nonempty: Vec<Part> = Part::ALL.into_iter().filter(|&p| self.part_len(p) > 0).collect();
        if nonempty.is_empty() {
            return Err(ReplayError::EmptyBuffer);
        }
        let mut batch = Vec::with_capacity(batch_size);
        if self.balance {
            if batch_size == 0 || batch_size % nonempty.len() != 0 {
                return Err(ReplayError::BatchSize {
                    batch: batch_size,
                    parts: nonempty.len(),
                });
            }
            let per_part = batch_size / nonempty.len();
            for part in nonempty {
                let weight = self.value_weight(part);
                let len = self.part_len(part);
                for _ in 0..per_part {
                    let i = self.rng.random_range(0..len);
                    let mut e = self.parts[slot(part)][i].clone();
                    e.value_weight = weight;
                    batch.push(e);
                }
            }
        } else {
            let total = self.len();
            for _ in 0..batch_size {
                let mut i = self.rng.random_range(0..total);
                let mut s = 0;
                while i >= self.parts[s].len() {
                    i -= self.parts[s].len();
                    s += 1;
                }
                let mut e = self.parts[s][i].clone();
                e.value_weight = self.value_weight(e.part);
                batch.push(e);
            }
        }
        Ok(batch)
    }

    pub fn nonempty_count(&self) -> usize {
        self.parts.iter().filter(|p| !p.is_empty()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::StateGraph;

    fn example(part: Part) -> TrainExample {
        TrainExample {
            graph: StateGraph::empty_for_tests(2),
            policy_target: vec![1.0, 0.0],
            value_target: 0.0,
            value_weight: 1.0,
            part,
        }
    }

    #[test]
    fn single_part_gets_whole_batch() {
        let mut b = ReplayBuffer::new(1, true);
        b.push(example(Part::AdversaryWon));
        let batch = b.sample_batch(10).unwrap();
        assert_eq!(batch.len(), 10);
        assert!(batch.iter().all(|e| e.part == Part::AdversaryWon && e.value_weight == 1.0));
    }

    #[test]
    fn batch_size_must_split_evenly() {
        let mut b = ReplayBuffer::new(1, true);
        assert!(matches!(b.sample_batch(4), Err(ReplayError::EmptyBuffer)));
        for p in Part::ALL {
            b.push(example(p));
        }
        assert!(matches!(b.sample_batch(64), Err(ReplayError::BatchSize { batch: 64, parts: 3 })));
        assert_eq!(b.sample_batch(63).unwrap().len(), 63);
    }

    #[test]
    fn capacity_drops_oldest() {
        let mut b = ReplayBuffer::new(1, true).with_capacity(2);
        for v in 0..5 {
            let mut e = example(Part::ProverWon);
            e.value_target = v as f64;
            b.push(e);
        }
        let kept: Vec<f64> = b.examples(Part::ProverWon).map(|e| e.value_target).collect();
        assert_eq!(kept, vec![3.0, 4.0]);
    }

    #[test]
    fn unbalanced_keeps_unit_weights() {
        let mut b = ReplayBuffer::new(3, false);
        for _ in 0..4 {
            b.push(example(Part::ProverWon));
        }
        b.push(example(Part::AdversaryWon));
        b.push(example(Part::Auxiliary));
        for e in b.sample_batch(50).unwrap() {
            let want = if e.part == Part::Auxiliary { 0.0 } else { 1.0 };
            assert_eq!(e.value_weight, want);
        }
    }
}
