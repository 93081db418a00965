//! CSV and manifest output.
//!
//! Column order of `report.csv`:
//! `policy,run,seed,epsilon,timeslot,S,E_u_cum,L,delay_sum,energy_sum,iterations_to_converge`.
//! Floats are written with 9 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::RunSeeds;

/// `x` with 9 significant digits, trailing zeros trimmed.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// One slot of one policy in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub policy: String,
    pub run: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub timeslot: usize,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "E_u_cum")]
    pub e_u_cum: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub delay_sum: f64,
    pub energy_sum: f64,
    pub iterations_to_converge: usize,
}

pub const REPORT_HEADER: [&str; 11] = [
    "policy",
    "run",
    "seed",
    "epsilon",
    "timeslot",
    "S",
    "E_u_cum",
    "L",
    "delay_sum",
    "energy_sum",
    "iterations_to_converge",
];

impl ReportRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.policy.clone(),
            self.run.to_string(),
            self.seed.to_string(),
            sig9(self.epsilon),
            self.timeslot.to_string(),
            sig9(self.s),
            sig9(self.e_u_cum),
            sig9(self.l),
            sig9(self.delay_sum),
            sig9(self.energy_sum),
            self.iterations_to_converge.to_string(),
        ]
    }
}

/// Per policy and run: where it stopped and what it cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub run: usize,
    pub epsilon: f64,
    /// Slots on the flown path.
    pub path_slots: usize,
    /// Slot at which transmission happens (the last slot for non-stopping policies).
    pub t_stop: usize,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "E_u_cum")]
    pub e_u_cum: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// Movement energy of flying the whole path, joules.
    pub path_energy: f64,
    pub delay_sum: f64,
    pub energy_sum: f64,
    /// Iterations to converge of the slot-1 optimization (0 for non-iterative policies).
    pub first_slot_iterations: usize,
}

pub const SUMMARY_HEADER: [&str; 12] = [
    "policy",
    "run",
    "epsilon",
    "path_slots",
    "t_stop",
    "S",
    "E_u_cum",
    "L",
    "path_energy",
    "delay_sum",
    "energy_sum",
    "first_slot_iterations",
];

impl RunSummary {
    fn record(&self) -> Vec<String> {
        vec![
            self.policy.clone(),
            self.run.to_string(),
            sig9(self.epsilon),
            self.path_slots.to_string(),
            self.t_stop.to_string(),
            sig9(self.s),
            sig9(self.e_u_cum),
            sig9(self.l),
            sig9(self.path_energy),
            sig9(self.delay_sum),
            sig9(self.energy_sum),
            self.first_slot_iterations.to_string(),
        ]
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn write_records<'a>(
    path: &Path,
    header: &[&str],
    records: impl Iterator<Item = Vec<String>> + 'a,
) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_report_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    write_records(path, &REPORT_HEADER, rows.iter().map(ReportRow::record))
}

pub fn write_summary_csv(rows: &[RunSummary], path: &Path) -> Result<()> {
    write_records(path, &SUMMARY_HEADER, rows.iter().map(RunSummary::record))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(f));
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    read_csv(path)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<RunSummary>> {
    read_csv(path)
}

/// Best-so-far fitness per iteration for one optimizer invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub policy: String,
    pub run: usize,
    pub trace: Vec<f64>,
}

pub fn write_convergence_csv(traces: &[ConvergenceTrace], path: &Path) -> Result<()> {
    let records = traces.iter().flat_map(|t| {
        t.trace
            .iter()
            .enumerate()
            .map(move |(i, &f)| vec![t.policy.clone(), t.run.to_string(), i.to_string(), sig9(f)])
    });
    write_records(path, &["policy", "run", "iteration", "best_fitness"], records)
}

/// Per-task delay and energy at every site under `sol`'s resources, plus the chosen site.
pub fn write_cost_breakdown_csv(inst: &crate::assign::Instance<'_>, sol: &crate::assign::Solution, path: &Path) -> Result<()> {
    let costs = inst.site_costs(&sol.resources)?;
    let sites = sol.sites()?;
    let records = inst.tasks.iter().zip(&costs).zip(&sites).map(|((t, c), s)| {
        let mut r = vec![t.md.to_string(), t.index.to_string(), s.label().to_string()];
        for b in c {
            r.push(sig9(b.delay));
            r.push(sig9(b.energy));
        }
        r
    });
    let header =
        ["md", "task", "chosen", "md_delay", "md_energy", "uav_delay", "uav_energy", "dc_delay", "dc_energy"];
    write_records(path, &header, records)
}

/// Seeds behind every run, so any run can be replayed in isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub base_seed: u64,
    pub runs: usize,
    pub policies: Vec<String>,
    /// How runs are binned by weighting factor in the relative-reduction table.
    pub epsilon_binning: String,
    pub run: Vec<RunSeeds>,
}

pub fn write_manifest(m: &Manifest, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(m).map_err(|e| Error::Config(e.to_string()))?;
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
