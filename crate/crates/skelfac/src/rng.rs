//! Counter-based Gaussian sampling.
//!
//! Every random number is a pure function of `(seed, stream, counter)`, so
//! repeated runs are bit-identical and independent streams never share state.
//! The generator chains the SplitMix64 finalizer over the three words; entries
//! are mapped to standard normals with the Box-Muller transform.

use crate::mat::Mat;

/// Test matrices drawn for the forward operator.
pub const STREAM_OMEGA: u64 = 0;
/// Test matrices drawn for the adjoint operator.
pub const STREAM_PSI: u64 = 1;
/// Power-iteration start vectors.
pub const STREAM_POWER: u64 = 2;
/// Self-test and verification probes.
pub const STREAM_PROBE: u64 = 3;
/// Point-cloud geometry generation.
pub const STREAM_GEOMETRY: u64 = 4;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Raw 64-bit word for counter `ctr` of stream `(seed, stream)`.
#[inline]
pub fn raw_u64(seed: u64, stream: u64, ctr: u64) -> u64 {
    let a = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let b = mix64(a.wrapping_add(stream).wrapping_mul(0xd605_1a2f_159d_55d5) ^ stream);
    mix64(b ^ ctr.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ (ctr >> 7))
}

/// Uniform in the half-open interval `(0, 1]`; never returns zero.
#[inline]
fn uniform_pos(seed: u64, stream: u64, ctr: u64) -> f64 {
    (((raw_u64(seed, stream, ctr) >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
}

/// Uniform in `[0, 1)`.
#[inline]
pub fn uniform(seed: u64, stream: u64, ctr: u64) -> f64 {
    ((raw_u64(seed, stream, ctr) >> 11) as f64) * (1.0 / 9007199254740992.0)
}

/// The `k`-th standard-normal variate of stream `(seed, stream)`.
///
/// Each variate consumes its own pair of counters, so any entry can be
/// generated independently of the others.
#[inline]
pub fn standard_normal(seed: u64, stream: u64, k: u64) -> f64 {
    let u1 = uniform_pos(seed, stream, 2 * k);
    let u2 = uniform(seed, stream, 2 * k + 1);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Matrix with independent standard-normal entries, filled column-major.
pub fn gaussian(rows: usize, cols: usize, seed: u64, stream: u64) -> Mat {
    let mut m = Mat::zeros(rows, cols);
    for (k, v) in m.data_mut().iter_mut().enumerate() {
        *v = standard_normal(seed, stream, k as u64);
    }
    m
}
