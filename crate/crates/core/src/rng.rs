//! Counter-based standard normal variates.
//!
//! A variate is addressed by `(seed, stream, index)`. Any index can be
//! generated on its own, so paths, replicas and grid levels can be produced
//! independently and in any order with bit-identical results.

use core::f64::consts::PI;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const INDEX_OFFSET: i128 = 1 << 62;

#[derive(Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    next_index: i64,
}

impl core::fmt::Debug for NormalStream {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("NormalStream")
            .field("next_index", &self.next_index)
            .finish()
    }
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut s = NormalStream { rng, next_index: 0 };
        s.seek(0);
        s
    }

    /// Positions the stream so that the next call returns variate `index`.
    pub fn seek(&mut self, index: i64) {
        let pos = (index as i128 + INDEX_OFFSET) * 4;
        self.rng.set_word_pos(pos as u128);
        self.next_index = index;
    }

    pub fn next_normal(&mut self) -> f64 {
        let u1 = unit_open(self.rng.next_u64());
        let u2 = unit_open(self.rng.next_u64());
        self.next_index += 1;
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Variate at `index` without disturbing sequential use more than a seek.
    pub fn at(&mut self, index: i64) -> f64 {
        if index != self.next_index {
            self.seek(index);
        }
        self.next_normal()
    }

    pub fn fill(&mut self, start: i64, out: &mut [f64]) {
        self.seek(start);
        for v in out.iter_mut() {
            *v = self.next_normal();
        }
    }
}

/// Uniform on `(0, 1]`.
fn unit_open(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Plain uniform generator for resampling and permutations.
pub struct Uniform {
    rng: ChaCha8Rng,
}

impl Uniform {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Uniform { rng }
    }

    pub fn next_f64(&mut self) -> f64 {
        unit_open(self.rng.next_u64()) - f64::EPSILON / 2.0
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.rng.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.below(i + 1);
            v.swap(i, j);
        }
    }
}
