use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

/// Draws fixed-size batches from a pool of node ids: without replacement
/// within a shuffled pass over the pool (an incomplete tail is dropped and the
/// pool reshuffled), or with replacement when the pool is smaller than a batch.
#[derive(Clone, Debug)]
pub struct BatchSampler {
    pool: Vec<usize>,
    order: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    pub fn new(pool: Vec<usize>) -> Self {
        assert!(!pool.is_empty(), "empty batch pool");
        let order = pool.clone();
        let cursor = order.len();
        BatchSampler { pool, order, cursor }
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    pub fn next_batch<R: Rng + ?Sized>(&mut self, m: usize, rng: &mut R) -> Vec<usize> {
        if self.pool.len() < m {
            return (0..m).map(|_| self.pool[rng.random_range(0..self.pool.len())]).collect();
        }
        if self.cursor + m > self.order.len() {
            self.order.copy_from_slice(&self.pool);
            self.order.shuffle(rng);
            self.cursor = 0;
        }
        let batch = self.order[self.cursor..self.cursor + m].to_vec();
        self.cursor += m;
        batch
    }
}
