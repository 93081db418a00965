use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use uavfog::aco::{aco_plan_detailed, AcoParams};
use uavfog::assign::{pso_optimize, Instance, PsoParams};
use uavfog::config::ExperimentConfig;
use uavfog::experiment::{build_run_world, mean_relative_reduction, run_experiment, write_outputs, write_reduction_csv};
use uavfog::report::{read_report_csv, write_cost_breakdown_csv, ReportRow};

#[derive(Parser)]
#[command(name = "uavfog", version, about = "UAV-assisted fog computing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// TOML config file (defaults apply when omitted). `UAVFOG__SECTION__KEY` env vars override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for the experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated policy list, e.g. RAN,PSO,TDO.
    #[arg(long, global = true, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write SVG figures next to the CSVs.
    #[arg(long, global = true)]
    plots: bool,
    /// 50 MDs on a 100 x 100 grid instead of the desk-scale default.
    #[arg(long, global = true)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full multi-policy experiment.
    Simulate,
    /// Plan an obstacle-avoiding trajectory for one run.
    Plan {
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
    /// Optimize the task assignment at the UAV start position for one run.
    Assign {
        #[arg(long, default_value_t = 0)]
        run: usize,
        /// Also write per-task delay/energy at every site to this CSV.
        #[arg(long)]
        costs: Option<PathBuf>,
    },
    /// Re-aggregate an existing report.csv.
    Report {
        /// Report file (defaults to `<out>/report.csv`).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn load_config(o: &Opts) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(o.config.as_deref())?;
    if o.full_scale {
        cfg = cfg.full_scale();
    }
    if let Some(s) = o.seed {
        cfg.experiment.base_seed = s;
    }
    if let Some(p) = &o.policies {
        cfg.experiment.policies = p.clone();
    }
    if let Some(r) = o.runs {
        cfg.experiment.runs = r;
    }
    if let Some(d) = &o.out {
        cfg.experiment.output_dir = d.clone();
    }
    cfg.experiment.plots |= o.plots;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli.opts)?;
    match cli.command {
        Command::Simulate => simulate(&cfg),
        Command::Plan { run } => plan(&cfg, run),
        Command::Assign { run, costs } => assign(&cfg, run, costs.as_deref()),
        Command::Report { input } => {
            let path = input.unwrap_or_else(|| cfg.experiment.output_dir.join("report.csv"));
            report(&path, &cfg.experiment.output_dir)
        }
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let result = run_experiment(cfg)?;
    let dir = &cfg.experiment.output_dir;
    write_outputs(&result, dir, cfg.experiment.plots)?;
    print_summary(&result.rows)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn plan(cfg: &ExperimentConfig, run: usize) -> Result<()> {
    let w = build_run_world(cfg, run)?;
    let seed = uavfog::seeds::derive(w.seeds.optimizer, &[run as u64]);
    let params = AcoParams { rng_seed: seed, ..cfg.aco.clone() };
    let out = aco_plan_detailed(&w.obstacle_world, w.start, w.goal, &params)?;
    let t = &out.trajectory;
    print!("{}", w.obstacle_world.render_text(&t.cells));
    println!(
        "start {:?} goal {:?}: {} cells, length {:.1} m, {} turns, R = {:.3}",
        (w.start.x, w.start.y),
        (w.goal.x, w.goal.y),
        t.cells.len(),
        t.length(),
        t.turn_count,
        t.value
    );
    Ok(())
}

fn assign(cfg: &ExperimentConfig, run: usize, costs: Option<&std::path::Path>) -> Result<()> {
    let w = build_run_world(cfg, run)?;
    let pos = w.open_world.center(w.start);
    let inst = Instance::new(&w.scenario, &w.tasks, &w.gamma_channels, pos)?;
    let params = PsoParams { rng_seed: w.seeds.optimizer, ..cfg.pso.clone() };
    let out = pso_optimize(&inst, &params)?;
    println!("epsilon {:.4}, {} tasks, UAV at ({:.0}, {:.0}) m", w.scenario.epsilon, w.tasks.len(), pos.x, pos.y);
    for (t, a) in w.tasks.iter().zip(&out.solution.assignments) {
        println!(
            "  MD {:>2} task {:>2}: {:>7.3} Mbit -> {}",
            t.md,
            t.index,
            t.input_bits / 1e6,
            a.site()?.label()
        );
    }
    println!(
        "S = {:.6} (delay {:.6} s, energy {:.6} J) after {} iterations, converged at {}",
        out.solution.fitness, out.solution.delay_sum, out.solution.energy_sum, out.iterations, out.converged_at
    );
    if let Some(path) = costs {
        write_cost_breakdown_csv(&inst, &out.solution, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn report(input: &std::path::Path, out: &std::path::Path) -> Result<()> {
    let rows = read_report_csv(input).with_context(|| format!("reading {}", input.display()))?;
    if rows.is_empty() {
        bail!("{} has no rows", input.display());
    }
    print_summary(&rows)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("reduction.csv");
    write_reduction_csv(&rows, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn print_summary(rows: &[ReportRow]) -> Result<()> {
    let mut last: BTreeMap<(&str, usize), &ReportRow> = BTreeMap::new();
    for r in rows {
        let e = last.entry((r.policy.as_str(), r.run)).or_insert(r);
        if r.timeslot >= e.timeslot {
            *e = r;
        }
    }
    let mut per_policy: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for ((p, _), r) in &last {
        per_policy.entry(p).or_default().push(r.l);
    }
    println!("{:<6} {:>5} {:>14} {:>12}", "policy", "runs", "mean L", "vs RAN");
    for (p, ls) in &per_policy {
        let mean = ls.iter().sum::<f64>() / ls.len() as f64;
        let vs = if per_policy.contains_key("RAN") {
            format!("{:.2}%", 100.0 * mean_relative_reduction(rows, p, "RAN")?)
        } else {
            "-".into()
        };
        println!("{p:<6} {:>5} {mean:>14.6} {vs:>12}", ls.len());
    }
    Ok(())
}
