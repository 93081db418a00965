//! Particle swarm optimization over the joint assignment/resource encoding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{converged_at, Decision, Instance, OptimizerOutcome, StopRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub swarm_size: usize,
    /// Inertia weight `IP`.
    pub inertia: f64,
    /// Cognitive acceleration `AP1`.
    pub cognitive: f64,
    /// Social acceleration `AP2`.
    pub social: f64,
    /// Improvement threshold `xi`.
    pub threshold: f64,
    /// Consecutive sub-threshold iterations before stopping.
    pub patience: usize,
    pub max_iterations: usize,
    /// Velocity limit as a fraction of each coordinate's box width.
    pub velocity_clamp: f64,
    pub rng_seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            inertia: 0.65,
            cognitive: 2.0,
            social: 2.0,
            threshold: 0.01,
            patience: 10,
            max_iterations: 200,
            velocity_clamp: 0.2,
            rng_seed: 0,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::InvalidParameter("swarm size must be >= 2".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.inertia >= 0.0 && self.cognitive >= 0.0 && self.social >= 0.0) {
            return Err(Error::InvalidParameter("PSO coefficients must be nonnegative".into()));
        }
        if !(self.threshold > 0.0 && self.velocity_clamp > 0.0) {
            return Err(Error::InvalidParameter("threshold and velocity clamp must be positive".into()));
        }
        Ok(())
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule { threshold: self.threshold, patience: self.patience, max_iterations: self.max_iterations }
    }
}

pub fn pso_optimize(inst: &Instance<'_>, params: &PsoParams) -> Result<OptimizerOutcome> {
    pso_optimize_with(inst, params, None, |_| {})
}

/// PSO with an optional warm start (one particle placed at `warm_start`) and an
/// observer called with every decoded particle.
pub fn pso_optimize_with(
    inst: &Instance<'_>,
    params: &PsoParams,
    warm_start: Option<&[f64]>,
    mut observe: impl FnMut(&Decision),
) -> Result<OptimizerOutcome> {
    params.validate()?;
    if inst.task_count() == 0 {
        return Err(Error::EmptyProblem);
    }
    let dim = inst.dimension();
    if let Some(w) = warm_start {
        if w.len() != dim {
            return Err(Error::Encoding { expected: dim, got: w.len() });
        }
    }
    let bounds = inst.bounds();
    let vmax: Vec<f64> = bounds.iter().map(|b| params.velocity_clamp * b.width()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let mut pos: Vec<Vec<f64>> = (0..params.swarm_size)
        .map(|_| bounds.iter().map(|b| b.sample(&mut rng)).collect())
        .collect();
    if let Some(w) = warm_start {
        pos[0] = w.iter().zip(&bounds).map(|(&v, b)| b.clamp(v)).collect();
    }
    let mut vel = vec![vec![0.0; dim]; params.swarm_size];

    let mut eval = |x: &[f64]| -> Result<f64> {
        let d = inst.decode(x)?;
        observe(&d);
        Ok(inst.fitness(&d))
    };

    let mut pbest = pos.clone();
    let mut pbest_f = Vec::with_capacity(params.swarm_size);
    for p in &pos {
        pbest_f.push(eval(p)?);
    }
    let (mut g, mut g_f) = best_of(&pbest, &pbest_f);
    let mut trace = vec![g_f];
    let mut stall = params.stop_rule().tracker();
    let mut iteration = 0;

    loop {
        iteration += 1;
        for k in 0..params.swarm_size {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = params.inertia * vel[k][d]
                    + params.cognitive * r1 * (pbest[k][d] - pos[k][d])
                    + params.social * r2 * (g[d] - pos[k][d]);
                vel[k][d] = v.clamp(-vmax[d], vmax[d]);
                pos[k][d] = bounds[d].clamp(pos[k][d] + vel[k][d]);
            }
            let f = eval(&pos[k])?;
            if f < pbest_f[k] {
                pbest_f[k] = f;
                pbest[k].clone_from(&pos[k]);
            }
        }
        let prev = g_f;
        (g, g_f) = best_of(&pbest, &pbest_f);
        trace.push(g_f);
        if stall.step(iteration, prev, g_f) {
            break;
        }
    }

    let best = inst.decode(&g)?;
    Ok(OptimizerOutcome {
        solution: inst.solution(&best),
        converged_at: converged_at(&trace, params.threshold),
        trace,
        best_position: g,
        iterations: iteration,
    })
}

/// Best value with the lowest index winning ties.
pub(crate) fn best_of(xs: &[Vec<f64>], fs: &[f64]) -> (Vec<f64>, f64) {
    let mut bi = 0;
    for i in 1..fs.len() {
        if fs[i] < fs[bi] {
            bi = i;
        }
    }
    (xs[bi].clone(), fs[bi])
}
