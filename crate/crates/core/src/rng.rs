//! Seeded random streams.
//!
//! All randomness comes from ChaCha12. A user seed `s: u64` is expanded into
//! the 256-bit ChaCha key with `SeedableRng::seed_from_u64` (a PCG32 expansion
//! fixed by `rand_core`), and independent sub-streams are selected with the
//! 64-bit ChaCha stream id. Stream 0 drives tree construction; sampling for
//! node `i` uses stream `i + 1` of a caller-supplied sampling seed. ChaCha is a
//! counter-mode generator, so every sequence is identical across platforms.
//!
//! Normal variates come from `rand_distr::StandardNormal` (ziggurat) with the
//! pure-Rust `libm` backing, which keeps them bit-reproducible as well.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha12Rng;

/// Generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniformly distributed unit direction in `R^k` (normalized Gaussian draw).
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let mut g = gaussian_vec(rng, k);
        let n = crate::geometry::norm(&g);
        if n > 0.0 {
            g.iter_mut().for_each(|x| *x /= n);
            return g;
        }
    }
}
