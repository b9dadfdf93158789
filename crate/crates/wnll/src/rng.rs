//! Counter-based pseudo-random numbers.
//!
//! Every draw is a pure function of `(seed, index, draw)`, so points can be
//! generated independently, in any order and on any number of threads, and
//! still come out bitwise identical.

/// SplitMix64 finalizer. Good avalanche behaviour, cheap, stateless.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Draw `draw` for item `index` under `seed`, uniform in `[0, 1)`.
pub fn uniform01(seed: u64, index: u64, draw: u64) -> f64 {
    // Mix the three coordinates through two rounds so that nearby
    // (seed, index) pairs decorrelate.
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(index)).wrapping_add(draw));
    // 53 high bits -> [0, 1).
    (mixed >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
