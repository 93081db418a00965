//! Gamma-density channel weighting and its integer apportionment.
//!
//! Each MD with pending work gets a weight proportional to the Gamma density
//! evaluated at its (normalized) pending input size; weights are then turned
//! into whole channels with the largest-remainder method so the total is
//! conserved exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelAllocation {
    /// Whole channels per MD, `C_j(t)`.
    pub channels: Vec<u32>,
    /// Proportions per MD, `omega_j(t)`; zero for idle MDs.
    pub weights: Vec<f64>,
}

impl ChannelAllocation {
    pub fn total(&self) -> u64 {
        self.channels.iter().map(|&c| c as u64).sum()
    }

    pub fn md_count(&self) -> usize {
        self.channels.len()
    }

    /// Build from explicit counts; weights are the counts' shares.
    pub fn from_counts(channels: Vec<u32>) -> Self {
        let total: u64 = channels.iter().map(|&c| c as u64).sum();
        let weights = channels
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        Self { channels, weights }
    }
}

/// Shape/rate of the weighting density and the unit task sizes are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaWeighting {
    pub shape: f64,
    pub rate: f64,
    /// Bits per normalized size unit (the mean input size by default).
    pub size_unit: f64,
}

impl GammaWeighting {
    pub fn new(shape: f64, rate: f64, size_unit: f64) -> Self {
        Self { shape, rate, size_unit }
    }
}

impl Default for GammaWeighting {
    fn default() -> Self {
        Self { shape: 2.0, rate: 2.0, size_unit: 1.0e6 }
    }
}

fn ln_gamma_weight(s: f64, shape: f64, rate: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("task size must be positive, got {s}")));
    }
    if !(shape > 0.0 && rate > 0.0) {
        return Err(Error::Domain(format!("Gamma shape {shape} and rate {rate} must be positive")));
    }
    Ok(shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * s.ln() - rate * s)
}

/// Gamma density `rate^shape / Gamma(shape) * s^(shape-1) * exp(-rate * s)`
/// at normalized size `s`.
pub fn gamma_weight(s: f64, shape: f64, rate: f64) -> Result<f64> {
    ln_gamma_weight(s, shape, rate).map(f64::exp)
}

/// Apportion `total` channels across MDs from their pending input sizes in bits.
/// MDs with nothing pending (size 0) get weight 0 and no channels.
pub fn allocate_channels(pending_bits: &[f64], total: u32, weighting: &GammaWeighting) -> Result<ChannelAllocation> {
    let mut logs = Vec::with_capacity(pending_bits.len());
    for &bits in pending_bits {
        if bits > 0.0 {
            logs.push(Some(ln_gamma_weight(bits / weighting.size_unit, weighting.shape, weighting.rate)?));
        } else {
            logs.push(None);
        }
    }
    // Normalize in log space so very large tasks cannot underflow every weight to zero.
    let max = logs
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptyAllocation);
    }
    let raw: Vec<f64> = logs.iter().map(|l| l.map_or(0.0, |l| (l - max).exp())).collect();
    let norm: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / norm).collect();
    let channels = largest_remainder(&weights, total);
    Ok(ChannelAllocation { channels, weights })
}

/// Largest-remainder rounding of `total * shares`; ties go to the lower index.
/// Entries with a zero share never receive a unit.
pub fn largest_remainder(shares: &[f64], total: u32) -> Vec<u32> {
    let quotas: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut counts: Vec<u32> = quotas.iter().map(|q| q.floor() as u32).collect();
    let assigned: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut left = (total as u64).saturating_sub(assigned);
    let mut order: Vec<usize> = (0..shares.len()).filter(|&i| shares[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    // More than one pass is only needed if rounding error left several units.
    while left > 0 && !order.is_empty() {
        for &i in &order {
            if left == 0 {
                break;
            }
            counts[i] += 1;
            left -= 1;
        }
    }
    counts
}

/// Each of the `total` channels goes to an MD chosen uniformly at random.
pub fn random_channels<R: Rng + ?Sized>(md_count: usize, total: u32, rng: &mut R) -> ChannelAllocation {
    let mut counts = vec![0u32; md_count];
    for _ in 0..total {
        counts[rng.random_range(0..md_count)] += 1;
    }
    ChannelAllocation::from_counts(counts)
}
