//! Reference policies: uniformly random decisions and a genetic algorithm
//! over the same encoding the swarm uses.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::assign::pso::best_of;
use crate::assign::{converged_at, Decision, Instance, OptimizerOutcome, Solution, StopRule};
use crate::cost::{ResourceSetting, Site};
use crate::error::{Error, Result};

/// Uniform site per task (among sites with a link), uniform powers and
/// frequencies in their boxes. Channels are whatever the instance carries; the
/// harness builds RAN instances over a random channel split.
pub fn random_policy<R: Rng + ?Sized>(inst: &Instance<'_>, rng: &mut R) -> Result<Solution> {
    if inst.task_count() == 0 {
        return Err(Error::EmptyProblem);
    }
    let s = inst.scenario;
    let sites = inst
        .tasks
        .iter()
        .map(|t| {
            let open: Vec<Site> = Site::ALL.into_iter().filter(|&st| inst.site_available(t.md, st)).collect();
            *open.choose(rng).expect("local execution is always available")
        })
        .collect();
    let k = inst.md_count();
    let mut md_power = Vec::with_capacity(k);
    let mut md_freq = Vec::with_capacity(k);
    for _ in 0..k {
        md_power.push(s.md_power.sample(rng));
        md_freq.push(s.md_freq.sample(rng));
    }
    let resources =
        ResourceSetting { md_power, md_freq, uav_power: s.uav.power.sample(rng), uav_freq: s.uav.freq.sample(rng) };
    Ok(inst.solution(&Decision { sites, resources }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of the gene's box width.
    pub mutation_scale: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    /// Same improvement threshold and patience as the swarm, for a fair
    /// iterations-to-converge comparison.
    pub threshold: f64,
    pub patience: usize,
    pub rng_seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 30,
            generations: 200,
            crossover_rate: 0.8,
            mutation_rate: 0.05,
            mutation_scale: 0.1,
            tournament_size: 3,
            elitism: 1,
            threshold: 0.01,
            patience: 10,
            rng_seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("population {} must be even and >= 2", self.population)));
        }
        if self.generations == 0 || self.tournament_size == 0 {
            return Err(Error::InvalidParameter("generations and tournament size must be >= 1".into()));
        }
        if self.elitism >= self.population {
            return Err(Error::InvalidParameter("elitism must be smaller than the population".into()));
        }
        for (name, p) in [("crossover rate", self.crossover_rate), ("mutation rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} {p} outside [0, 1]")));
            }
        }
        if !(self.mutation_scale >= 0.0 && self.threshold > 0.0) {
            return Err(Error::InvalidParameter("mutation scale must be >= 0 and threshold > 0".into()));
        }
        Ok(())
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule { threshold: self.threshold, patience: self.patience, max_iterations: self.generations }
    }
}

pub fn ga_optimize(inst: &Instance<'_>, params: &GaParams) -> Result<OptimizerOutcome> {
    ga_optimize_from(inst, params, None, |_| {})
}

/// GA from an optional initial population (uniform over the boxes otherwise),
/// with an observer called on every decoded individual.
pub fn ga_optimize_from(
    inst: &Instance<'_>,
    params: &GaParams,
    initial: Option<Vec<Vec<f64>>>,
    mut observe: impl FnMut(&Decision),
) -> Result<OptimizerOutcome> {
    params.validate()?;
    if inst.task_count() == 0 {
        return Err(Error::EmptyProblem);
    }
    let dim = inst.dimension();
    let bounds = inst.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut pop = match initial {
        Some(p) => {
            if p.len() != params.population {
                return Err(Error::InvalidParameter(format!(
                    "initial population has {} members, expected {}",
                    p.len(),
                    params.population
                )));
            }
            if let Some(bad) = p.iter().find(|x| x.len() != dim) {
                return Err(Error::Encoding { expected: dim, got: bad.len() });
            }
            p
        }
        None => (0..params.population).map(|_| bounds.iter().map(|b| b.sample(&mut rng)).collect()).collect(),
    };
    let noise: Vec<Normal<f64>> = bounds
        .iter()
        .map(|b| Normal::new(0.0, params.mutation_scale * b.width()).expect("finite nonnegative sigma"))
        .collect();

    let mut eval = |x: &[f64]| -> Result<f64> {
        let d = inst.decode(x)?;
        observe(&d);
        Ok(inst.fitness(&d))
    };
    let mut fit = Vec::with_capacity(pop.len());
    for x in &pop {
        fit.push(eval(x)?);
    }
    let (mut best, mut best_f) = best_of(&pop, &fit);
    let mut trace = vec![best_f];
    let mut stall = params.stop_rule().tracker();
    let mut generation = 0;

    loop {
        generation += 1;
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)));
        let mut next: Vec<Vec<f64>> = order[..params.elitism].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < params.population {
            let mut a = pop[tournament(&fit, params.tournament_size, &mut rng)].clone();
            let mut b = pop[tournament(&fit, params.tournament_size, &mut rng)].clone();
            if dim > 1 && rng.random::<f64>() < params.crossover_rate {
                let cut = rng.random_range(1..dim);
                a[cut..].swap_with_slice(&mut b[cut..]);
            }
            for child in [&mut a, &mut b] {
                for d in 0..dim {
                    if rng.random::<f64>() < params.mutation_rate {
                        child[d] = bounds[d].clamp(child[d] + noise[d].sample(&mut rng));
                    }
                }
            }
            next.push(a);
            if next.len() < params.population {
                next.push(b);
            }
        }
        pop = next;
        fit.clear();
        for x in &pop {
            fit.push(eval(x)?);
        }
        let (cand, cand_f) = best_of(&pop, &fit);
        let prev = best_f;
        if cand_f < best_f {
            best = cand;
            best_f = cand_f;
        }
        trace.push(best_f);
        if stall.step(generation, prev, best_f) {
            break;
        }
    }

    let d = inst.decode(&best)?;
    Ok(OptimizerOutcome {
        solution: inst.solution(&d),
        converged_at: converged_at(&trace, params.threshold),
        trace,
        best_position: best,
        iterations: generation,
    })
}

fn tournament<R: Rng + ?Sized>(fit: &[f64], size: usize, rng: &mut R) -> usize {
    let mut winner = rng.random_range(0..fit.len());
    for _ in 1..size {
        let c = rng.random_range(0..fit.len());
        if fit[c] < fit[winner] {
            winner = c;
        }
    }
    winner
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::testutil::*;
    use crate::assign::validate;

    #[test]
    fn random_policy_is_reproducible_and_valid() {
        let o = random_owned(4, 6, 2);
        let inst = o.instance();
        let a = random_policy(&inst, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = random_policy(&inst, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        validate(&a, &inst).unwrap();
    }

    #[test]
    fn random_sites_are_uniform() {
        let mut o = random_owned(1, 1, 3);
        o.tasks = vec![task(0, 0, 1e6)];
        o.channels = crate::channel::ChannelAllocation::from_counts(vec![40]);
        let inst = o.instance();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let s = random_policy(&inst, &mut rng).unwrap();
            counts[s.assignments[0].site().unwrap().index()] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.02, "frequency {f}");
        }
    }

    #[test]
    fn frozen_ga_has_constant_trace() {
        let o = random_owned(3, 4, 6);
        let inst = o.instance();
        let params = GaParams { crossover_rate: 0.0, mutation_rate: 0.0, patience: 5, ..GaParams::default() };
        let x: Vec<f64> = inst.bounds().iter().map(|b| b.lerp(0.3)).collect();
        let out = ga_optimize_from(&inst, &params, Some(vec![x; params.population]), |_| {}).unwrap();
        assert!(out.trace.iter().all(|&f| f == out.trace[0]));
        assert_eq!(out.iterations, 5);
    }

    #[test]
    fn ga_trace_is_monotone_and_solutions_valid() {
        for seed in 0..4 {
            let o = random_owned(4, 6, seed + 20);
            let inst = o.instance();
            let params = GaParams { rng_seed: seed, ..GaParams::default() };
            let out = ga_optimize_from(&inst, &params, None, |d| validate(&inst.solution(d), &inst).unwrap()).unwrap();
            assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
            validate(&out.solution, &inst).unwrap();
            assert_eq!(out.solution.fitness, *out.trace.last().unwrap());
        }
    }

    #[test]
    fn ga_params_are_checked() {
        assert!(GaParams { population: 7, ..GaParams::default() }.validate().is_err());
        assert!(GaParams { mutation_rate: 1.5, ..GaParams::default() }.validate().is_err());
        assert!(GaParams::default().validate().is_ok());
    }
}
