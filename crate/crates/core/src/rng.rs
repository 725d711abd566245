//! Counter-addressed Gaussian streams.
//!
//! A [`NoiseStream`] is keyed by `(seed, trajectory index)`. Each normal
//! draw is located at a fixed word offset of a ChaCha8 keystream
//! determined by `(step, mode)`, so any step can be regenerated without
//! replaying the ones before it and ensembles are independent of the order
//! in which trajectories are simulated.

use core::f64::consts::PI;

// inherent float methods shadow these when std is linked
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

// Stream-id tags separating unrelated uses of the same master seed.
const TAG_NOISE: u64 = 0;
const TAG_AUX: u64 = 1 << 62;

// words consumed by one Box–Muller normal (two u64)
const WORDS_PER_NORMAL: u128 = 4;

fn unit_open(x: u64) -> f64 {
    // (0, 1]
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(a: u64, b: u64) -> f64 {
    let r = (-2.0 * unit_open(a).ln()).sqrt();
    r * (2.0 * PI * unit_open(b)).cos()
}

/// i.i.d. `N(0, dt)` Wiener increments `ΔWₖᵐ` for one trajectory.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    seed: u64,
    index: u64,
    modes: usize,
    substeps: usize,
    rng: ChaCha8Rng,
    cursor: u128,
}

impl NoiseStream {
    pub fn new(seed: u64, index: u64, modes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(TAG_NOISE | (index & (TAG_AUX - 1)));
        Self {
            seed,
            index,
            modes: modes.max(1),
            substeps: 1,
            rng,
            cursor: 0,
        }
    }

    /// Coarse view of the same Brownian path: each step aggregates
    /// `substeps` consecutive increments of the fine stream.
    pub fn coarsened(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    fn normal_at(&mut self, fine_step: usize, mode: usize) -> f64 {
        let slot = fine_step as u128 * self.modes as u128 + mode as u128;
        let pos = slot * WORDS_PER_NORMAL;
        if pos != self.cursor {
            self.rng.set_word_pos(pos);
        }
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        self.cursor = pos + WORDS_PER_NORMAL;
        box_muller(a, b)
    }

    /// Fills `out` (one entry per mode) with the increments of step `step`
    /// of size `dt`.
    pub fn increments(&mut self, step: usize, dt: f64, out: &mut [f64]) {
        let sub = self.substeps;
        let scale = (dt / sub as f64).sqrt();
        for o in out.iter_mut() {
            *o = 0.0;
        }
        for s in 0..sub {
            let fine = step * sub + s;
            for (k, o) in out.iter_mut().enumerate().take(self.modes) {
                *o += self.normal_at(fine, k);
            }
        }
        for o in out.iter_mut() {
            *o *= scale;
        }
    }
}

/// Auxiliary standard-normal source for sampling controls and similar
/// inputs, addressed like [`NoiseStream`] but on a disjoint stream family.
#[derive(Clone, Debug)]
pub struct AuxNormals {
    rng: ChaCha8Rng,
}

impl AuxNormals {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(TAG_AUX | (index & (TAG_AUX - 1)));
        Self { rng }
    }

    pub fn normal(&mut self) -> f64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        box_muller(a, b)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        unit_open(self.rng.next_u64())
    }
}
