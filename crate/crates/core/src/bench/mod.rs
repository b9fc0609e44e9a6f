//! Experiment harness: configuration, metrics, model files and the
//! benchmark runners behind the command-line tool.

pub mod config;
pub mod consistency;
pub mod counterexample;
pub mod metrics;
pub mod missing;
pub mod model;
pub mod outlier;
pub mod synthetic;

/// Mixes `parts` into `base` with the SplitMix64 finalizer, giving
/// independent-looking seeds for each job key.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}
