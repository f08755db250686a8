//! Experiment runner: repeated trials with confidence intervals, sweeps
//! over problem size and client counts, and speedup-ratio analysis.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::ea::{self, EAConfig, Variant};
use crate::error::{Error, Result};
use crate::genome::Problem;
use crate::hub::{run_lockstep, DistConfig};
use crate::mutation::MutationSchedule;
use crate::rng::derive_seed;

/// Mutation schedule family for a sweep; materialized per problem size so
/// that 1/N-style rates track N across cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleSpec {
    /// Fixed rate for every cell.
    Fixed(f64),
    /// Rate 1/N per cell (the standard choice for AllOnes and OneMax).
    OneOverN,
    /// 1.5936/N, the optimal static rate for LeadingOnes.
    LoStaticOpt,
    /// 1/(1 + LO(x)) fitness-adaptive rate.
    LoAdaptive,
}

impl ScheduleSpec {
    pub fn materialize(&self, n: usize) -> MutationSchedule {
        match self {
            ScheduleSpec::Fixed(rate) => MutationSchedule::StaticRate(*rate),
            ScheduleSpec::OneOverN => MutationSchedule::StaticRate(1.0 / n as f64),
            ScheduleSpec::LoStaticOpt => MutationSchedule::StaticOptimalLo,
            ScheduleSpec::LoAdaptive => MutationSchedule::AdaptiveLo,
        }
    }

    /// Problem-appropriate default: 1/N static for AllOnes and OneMax,
    /// the optimal static rate for LeadingOnes.
    pub fn default_for(problem: Problem) -> Self {
        match problem {
            Problem::AllOnes | Problem::OneMax => ScheduleSpec::OneOverN,
            Problem::LeadingOnes => ScheduleSpec::LoStaticOpt,
        }
    }

    fn id_bits(&self) -> u64 {
        match self {
            ScheduleSpec::Fixed(r) => r.to_bits(),
            ScheduleSpec::OneOverN => 1,
            ScheduleSpec::LoStaticOpt => 2,
            ScheduleSpec::LoAdaptive => 3,
        }
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::Fixed(r) => write!(f, "static:{r}"),
            ScheduleSpec::OneOverN => f.write_str("static:1/n"),
            ScheduleSpec::LoStaticOpt => f.write_str("lo-static-opt"),
            ScheduleSpec::LoAdaptive => f.write_str("lo-adaptive"),
        }
    }
}

impl FromStr for ScheduleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lo-static-opt" => Ok(ScheduleSpec::LoStaticOpt),
            "lo-adaptive" => Ok(ScheduleSpec::LoAdaptive),
            _ => {
                let rate = s
                    .strip_prefix("static:")
                    .ok_or_else(|| Error::Config(format!("unknown schedule '{s}'")))?;
                if rate == "1/n" {
                    return Ok(ScheduleSpec::OneOverN);
                }
                let rate: f64 = rate
                    .parse()
                    .map_err(|_| Error::Config(format!("bad rate in schedule '{s}'")))?;
                if !(rate > 0.0 && rate <= 1.0) {
                    return Err(Error::Config(format!("rate {rate} must be in (0, 1]")));
                }
                Ok(ScheduleSpec::Fixed(rate))
            }
        }
    }
}

/// Aggregated statistics for one experiment cell. Non-converged trials are
/// counted and excluded from the means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialStats {
    pub runs: u32,
    pub mean_generations: f64,
    pub mean_total_evaluations: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub nonconverged: u32,
    pub sd_generations: f64,
    pub sd_total_evaluations: f64,
}

impl TrialStats {
    /// Standard error of the mean total evaluations.
    pub fn se_total_evaluations(&self) -> f64 {
        self.sd_total_evaluations / ((self.runs - self.nonconverged).max(1) as f64).sqrt()
    }
}

/// One cell of a sweep grid.
#[derive(Clone, Copy, Debug)]
pub struct Cell {
    pub problem: Problem,
    pub variant: Variant,
    pub schedule: ScheduleSpec,
    pub n: usize,
    pub clients: u32,
    pub runs: u32,
    pub base_seed: u64,
    pub max_iterations: Option<u64>,
}

impl Cell {
    fn trial_seed(&self, trial: u32) -> u64 {
        derive_seed(
            self.base_seed,
            &[
                self.problem as u64,
                self.variant as u64,
                self.schedule.id_bits(),
                self.n as u64,
                self.clients as u64,
                trial as u64,
            ],
        )
    }

    fn config(&self, trial: u32) -> EAConfig {
        let mut cfg = EAConfig::new(
            self.problem,
            self.n,
            self.variant,
            self.schedule.materialize(self.n),
            self.trial_seed(trial),
        );
        if let Some(cap) = self.max_iterations {
            cfg.max_iterations = cap;
        }
        cfg
    }
}

/// Execute one cell: `runs` independent trials, in parallel, aggregated in
/// trial order so the result is independent of scheduling.
pub fn run_cell(cell: &Cell) -> Result<TrialStats> {
    if cell.runs < 2 {
        return Err(Error::Config("a cell needs at least 2 runs".into()));
    }
    cell.config(0).validate()?;
    let outcomes: Vec<Result<(u64, u64, bool)>> = (0..cell.runs)
        .into_par_iter()
        .map(|trial| {
            let cfg = cell.config(trial);
            if cell.clients == 1 {
                let rec = ea::run(&cfg)?;
                Ok((rec.generations, rec.evaluations, rec.converged))
            } else {
                let rec = run_lockstep(&DistConfig::lockstep(cfg, cell.clients))?;
                Ok((rec.rounds, rec.total_evaluations, rec.converged))
            }
        })
        .collect();
    let mut gens = Vec::with_capacity(cell.runs as usize);
    let mut evals = Vec::with_capacity(cell.runs as usize);
    let mut nonconverged = 0u32;
    for outcome in outcomes {
        let (g, e, converged) = outcome?;
        if converged {
            gens.push(g as f64);
            evals.push(e as f64);
        } else {
            nonconverged += 1;
        }
    }
    if gens.is_empty() {
        return Err(Error::Numerical(format!(
            "no trial converged in cell (n={}, clients={})",
            cell.n, cell.clients
        )));
    }
    let (mean_g, sd_g) = mean_sd(&gens);
    let (mean_e, sd_e) = mean_sd(&evals);
    let half = 1.96 * sd_g / (gens.len() as f64).sqrt();
    Ok(TrialStats {
        runs: cell.runs,
        mean_generations: mean_g,
        mean_total_evaluations: mean_e,
        ci95_low: mean_g - half,
        ci95_high: mean_g + half,
        nonconverged,
        sd_generations: sd_g,
        sd_total_evaluations: sd_e,
    })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Ratio of single-client to multi-client mean total evaluations;
/// 1.0 means the distribution is perfectly efficient.
pub fn speedup_ratio(single: &TrialStats, multi: &TrialStats) -> f64 {
    single.mean_total_evaluations / multi.mean_total_evaluations
}

/// Speedup ratio with a delta-method 95% confidence interval.
pub fn speedup_ratio_ci(single: &TrialStats, multi: &TrialStats) -> (f64, f64, f64) {
    let ratio = speedup_ratio(single, multi);
    let rel_a = single.se_total_evaluations() / single.mean_total_evaluations;
    let rel_b = multi.se_total_evaluations() / multi.mean_total_evaluations;
    let se = ratio * (rel_a * rel_a + rel_b * rel_b).sqrt();
    (ratio, ratio - 1.96 * se, ratio + 1.96 * se)
}

/// Sweep grid over problem sizes, variants, and client counts.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub problem: Problem,
    pub variants: Vec<Variant>,
    pub schedule: ScheduleSpec,
    pub n_range: Vec<usize>,
    pub client_counts: Vec<u32>,
    pub runs: u32,
    pub base_seed: u64,
    pub max_iterations: Option<u64>,
}

/// One output row: a cell and its outcome (capacity or config failures
/// become error rows; the sweep continues).
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub cell: Cell,
    pub outcome: std::result::Result<TrialStats, String>,
}

pub fn sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &n in &spec.n_range {
        for &variant in &spec.variants {
            for &clients in &spec.client_counts {
                let cell = Cell {
                    problem: spec.problem,
                    variant,
                    schedule: spec.schedule,
                    n,
                    clients,
                    runs: spec.runs,
                    base_seed: spec.base_seed,
                    max_iterations: spec.max_iterations,
                };
                let outcome = run_cell(&cell).map_err(|e| e.to_string());
                rows.push(SweepRow { cell, outcome });
            }
        }
    }
    rows
}

pub const SWEEP_CSV_HEADER: &str = "problem,variant,schedule,n,clients,runs,mean_generations,ci95_low,ci95_high,mean_total_evals,nonconverged,seed";

/// Format with 6 significant digits, plain decimal notation.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // strip trailing zeros after the decimal point
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let c = &row.cell;
        let prefix = format!(
            "{},{},{},{},{},",
            c.problem.name(),
            c.variant.name(),
            c.schedule,
            c.n,
            c.clients
        );
        match &row.outcome {
            Ok(s) => {
                out.push_str(&format!(
                    "{prefix}{},{},{},{},{},{},{}\n",
                    s.runs,
                    format_sig(s.mean_generations),
                    format_sig(s.ci95_low),
                    format_sig(s.ci95_high),
                    format_sig(s.mean_total_evaluations),
                    s.nonconverged,
                    c.base_seed
                ));
            }
            Err(msg) => {
                let msg = msg.replace(',', ";");
                out.push_str(&format!("{prefix}0,ERROR:{msg},NA,NA,NA,0,{}\n", c.base_seed));
            }
        }
    }
    out
}
