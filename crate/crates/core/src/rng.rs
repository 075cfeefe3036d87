//! Seeded sampling streams.
//!
//! Every randomized routine draws from a ChaCha8 stream keyed by `(seed,
//! stream)`. ChaCha is counter based, so substream `k` of a seed is the same
//! regardless of how many other substreams were consumed or by which worker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SampleRng = ChaCha8Rng;

/// Opens substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn normal(rng: &mut SampleRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normal_vec(rng: &mut SampleRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// Uniform point on the sphere of the given radius.
pub fn on_sphere(rng: &mut SampleRng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let v = normal_vec(rng, n);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| radius * x / norm).collect();
        }
    }
}
