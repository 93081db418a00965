//! Stochastic task stream: Poisson arrivals per MD per slot, exponentially
//! distributed input/output sizes.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One offloadable job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub md: usize,
    pub index: usize,
    /// CPU cycles `c_ij`.
    pub cycles: f64,
    /// Input size `s_ij`, bits.
    pub input_bits: f64,
    /// Output size `o_ij`, bits.
    pub output_bits: f64,
    pub arrival_slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadParams {
    /// Arrival rate per MD, tasks per slot.
    pub arrival_rates: Vec<f64>,
    pub mean_input_bits: f64,
    pub mean_output_bits: f64,
    pub cycles_per_bit: f64,
    pub rng_seed: u64,
}

impl WorkloadParams {
    pub fn uniform(md_count: usize, rate: f64) -> Self {
        Self {
            arrival_rates: vec![rate; md_count],
            mean_input_bits: 1.0e6,
            mean_output_bits: 0.1e6,
            cycles_per_bit: 1000.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.arrival_rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!("arrival rate {r} must be >= 0")));
        }
        for (name, v) in [
            ("mean input size", self.mean_input_bits),
            ("mean output size", self.mean_output_bits),
            ("cycles per bit", self.cycles_per_bit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Number of tasks arriving at MD `md` in one slot.
pub fn generate_arrivals<R: Rng + ?Sized>(params: &WorkloadParams, md: usize, rng: &mut R) -> u64 {
    let rate = params.arrival_rates[md];
    if rate <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite rates, excluded above.
    let dist = Poisson::new(rate).expect("positive finite rate");
    dist.sample(rng) as u64
}

pub fn sample_task<R: Rng + ?Sized>(
    params: &WorkloadParams,
    md: usize,
    index: usize,
    slot: usize,
    rng: &mut R,
) -> Task {
    let input_bits = sample_positive_exp(params.mean_input_bits, rng);
    let output_bits = sample_positive_exp(params.mean_output_bits, rng);
    Task {
        md,
        index,
        cycles: params.cycles_per_bit * input_bits,
        input_bits,
        output_bits,
        arrival_slot: slot,
    }
}

fn sample_positive_exp<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    let dist = Exp::new(1.0 / mean).expect("positive mean");
    loop {
        let v: f64 = dist.sample(rng);
        if v > 0.0 {
            return v;
        }
    }
}

/// All tasks arriving in `slot`, MD by MD. Task indices restart at 0 per MD.
pub fn generate_slot<R: Rng + ?Sized>(params: &WorkloadParams, slot: usize, rng: &mut R) -> Vec<Task> {
    let mut tasks = Vec::new();
    for md in 0..params.arrival_rates.len() {
        let n = generate_arrivals(params, md, rng);
        for i in 0..n as usize {
            tasks.push(sample_task(params, md, i, slot, rng));
        }
    }
    tasks
}

/// The first non-empty slot's arrivals, scanning at most `max_slots` slots.
pub fn first_nonempty_batch<R: Rng + ?Sized>(
    params: &WorkloadParams,
    max_slots: usize,
    rng: &mut R,
) -> Result<Vec<Task>> {
    for slot in 0..max_slots {
        let tasks = generate_slot(params, slot, rng);
        if !tasks.is_empty() {
            return Ok(tasks);
        }
    }
    Err(Error::EmptyProblem)
}

/// Pending input bits per MD (zero for idle MDs).
pub fn pending_input_per_md(tasks: &[Task], md_count: usize) -> Vec<f64> {
    let mut sizes = vec![0.0; md_count];
    for t in tasks {
        sizes[t.md] += t.input_bits;
    }
    sizes
}

pub fn write_tasks_csv(tasks: &[Task], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "md,index,arrival_slot,cycles,input_bits,output_bits").map_err(io)?;
    for t in tasks {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t.md,
            t.index,
            t.arrival_slot,
            crate::report::sig9(t.cycles),
            crate::report::sig9(t.input_bits),
            crate::report::sig9(t.output_bits)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
