//! Named sub-seeds derived from one base seed.

use serde::{Deserialize, Serialize};

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one seed.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Layout = 1,
    Workload = 2,
    Epsilon = 3,
    Channels = 4,
    Obstacles = 5,
    Optimizer = 6,
    Start = 7,
    Random = 8,
}

/// Every seed one run consumes. Policy-independent, so all policies of a run
/// see the same world, tasks and weighting factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub run: usize,
    pub layout: u64,
    pub workload: u64,
    pub epsilon: u64,
    pub channels: u64,
    pub obstacles: u64,
    pub optimizer: u64,
    pub start: u64,
    pub random: u64,
}

impl RunSeeds {
    pub fn new(base_seed: u64, run: usize) -> Self {
        let s = |stream: Stream| derive(base_seed, &[run as u64, stream as u64]);
        Self {
            run,
            layout: s(Stream::Layout),
            workload: s(Stream::Workload),
            epsilon: s(Stream::Epsilon),
            channels: s(Stream::Channels),
            obstacles: s(Stream::Obstacles),
            optimizer: s(Stream::Optimizer),
            start: s(Stream::Start),
            random: s(Stream::Random),
        }
    }
}
