//! Exact search over a discretized resource grid, for small instances.
//!
//! Once every power and frequency is fixed, each task's best site can be chosen
//! on its own, and for a fixed UAV setting the MDs do not interact. The search
//! therefore enumerates the UAV grid, then each MD's own grid, then takes the
//! per-task minimum over available sites. That is exactly the minimum over the
//! full product of sites and grid points, at a fraction of the cost.

use super::{Decision, Instance, Solution};
use crate::cost::{Rates, ResourceSetting, Site};
use crate::error::{Error, Result};
use crate::model::Bounds;

/// Largest task count accepted.
pub const MAX_TASKS: usize = 6;

/// `levels` evenly spaced values covering `b` (the midpoint when `levels == 1`).
pub fn grid_values(b: Bounds, levels: usize) -> Vec<f64> {
    match levels {
        0 => Vec::new(),
        1 => vec![b.midpoint()],
        n => (0..n).map(|k| b.lerp(k as f64 / (n - 1) as f64)).collect(),
    }
}

pub fn brute_force_assign(inst: &Instance<'_>, levels: usize) -> Result<Solution> {
    let n = inst.task_count();
    if n == 0 {
        return Err(Error::EmptyProblem);
    }
    if n > MAX_TASKS {
        return Err(Error::TooLarge(format!("{n} tasks, brute force handles at most {MAX_TASKS}")));
    }
    if levels == 0 {
        return Err(Error::InvalidParameter("grid needs at least one level".into()));
    }
    let s = inst.scenario;
    let k = inst.md_count();
    let md_p = grid_values(s.md_power, levels);
    let md_f = grid_values(s.md_freq, levels);
    let uav_p = grid_values(s.uav.power, levels);
    let uav_f = grid_values(s.uav.freq, levels);
    let by_md: Vec<Vec<usize>> = (0..k).map(|j| (0..n).filter(|&i| inst.tasks[i].md == j).collect()).collect();

    let mut best: Option<(f64, Decision)> = None;
    for &pu in &uav_p {
        for &fu in &uav_f {
            let mut res = ResourceSetting { md_power: vec![md_p[0]; k], md_freq: vec![md_f[0]; k], uav_power: pu, uav_freq: fu };
            let mut sites = vec![Site::Md; n];
            let mut total = 0.0;
            for (j, tasks) in by_md.iter().enumerate() {
                if tasks.is_empty() {
                    continue;
                }
                let mut md_best: Option<(f64, f64, f64, Vec<Site>)> = None;
                for &pj in &md_p {
                    for &fj in &md_f {
                        res.md_power[j] = pj;
                        res.md_freq[j] = fj;
                        let rates = Rates::new(inst.link(j), pj, pu, &s.radio).ok();
                        let mut sum = 0.0;
                        let mut chosen = Vec::with_capacity(tasks.len());
                        for &i in tasks {
                            let mut site_best = (f64::INFINITY, Site::Md);
                            for site in Site::ALL {
                                if !inst.site_available(j, site) {
                                    continue;
                                }
                                let c = inst.chosen_cost(&inst.tasks[i], site, &res, rates).weighted(s.epsilon);
                                if c < site_best.0 {
                                    site_best = (c, site);
                                }
                            }
                            sum += site_best.0;
                            chosen.push(site_best.1);
                        }
                        if md_best.as_ref().is_none_or(|b| sum < b.0) {
                            md_best = Some((sum, pj, fj, chosen));
                        }
                    }
                }
                let (sum, pj, fj, chosen) = md_best.expect("non-empty grid");
                res.md_power[j] = pj;
                res.md_freq[j] = fj;
                for (&i, site) in tasks.iter().zip(chosen) {
                    sites[i] = site;
                }
                total += sum;
            }
            if best.as_ref().is_none_or(|b| total < b.0) {
                best = Some((total, Decision { sites, resources: res }));
            }
        }
    }
    let (_, d) = best.expect("non-empty grid");
    Ok(inst.solution(&d))
}
