//! `blade` command line: single runs, sweeps, exact chain analysis,
//! runtime bounds, speedup ratios, the network hub and client, and SVG
//! chart emission.

mod csvio;
mod svg;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blade::bench::{format_sig, sweep, sweep_to_csv, ScheduleSpec, SweepSpec};
use blade::ea::{self, EAConfig, Variant};
use blade::genome::Problem;
use blade::hub::{run_lockstep, run_network_client, serve_hub, DistConfig};
use blade::markov::{
    build_baseline_chain, build_blanket_chain, expected_absorption, iterate_to_convergence,
    spectrum, TransitionMatrix, BASELINE_MAX_N,
};
use blade::theory::{bound_distributed, bound_simplified, bound_single, levels};
use blade::Error;

#[derive(Parser)]
#[command(
    name = "blade",
    version,
    about = "Blanket-masked (1+1) evolutionary search: runs, sweeps, exact analysis, charts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single EA instance (one or more lock-step clients)
    Run(RunArgs),
    /// Sweep problem sizes, variants, and client counts; emit CSV
    Sweep(SweepArgs),
    /// Exact chain analysis: matrix, spectrum, convergence, absorption
    Markov(MarkovArgs),
    /// Fitness-level runtime bounds (and the exact hitting time when small)
    Bound(BoundArgs),
    /// Speedup ratios from a sweep CSV (single-client over multi-client)
    Ratio(RatioArgs),
    /// Serve the best-candidate hub over TCP
    Hub(HubArgs),
    /// Run an EA client against a network hub
    Client(ClientArgs),
    /// Render a sweep or ratio CSV as an SVG line chart
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    problem: Problem,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "blade")]
    variant: Variant,
    /// static:<rate>, static:1/n, lo-static-opt, or lo-adaptive
    #[arg(long)]
    schedule: Option<ScheduleSpec>,
    #[arg(long, default_value_t = 1)]
    clients: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    problem: Problem,
    #[arg(long, value_delimiter = ',', default_value = "baseline,blade")]
    variants: Vec<Variant>,
    #[arg(long)]
    schedule: Option<ScheduleSpec>,
    #[arg(long)]
    n_min: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value_t = 1)]
    n_step: usize,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    clients: Vec<u32>,
    #[arg(long, default_value_t = 100)]
    runs: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MarkovArgs {
    #[arg(long)]
    problem: Problem,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "baseline")]
    variant: Variant,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    problem: Problem,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 1)]
    clients: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatioArgs {
    /// Sweep CSV with a clients=1 row for every (problem, variant, schedule, n)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HubArgs {
    #[arg(long, default_value = "127.0.0.1:0")]
    bind: String,
    /// Genotype length all clients must use
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct ClientArgs {
    /// Hub address, e.g. 127.0.0.1:7700
    #[arg(long)]
    hub: String,
    #[arg(long)]
    problem: Problem,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "blade")]
    variant: Variant,
    #[arg(long)]
    schedule: Option<ScheduleSpec>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV (default mode) or ratio CSV (--ratio)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input is a ratio CSV; draw a reference line at 1.0
    #[arg(long)]
    ratio: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long)]
    title: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Markov(args) => cmd_markov(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Ratio(args) => cmd_ratio(args),
        Command::Hub(args) => cmd_hub(args),
        Command::Client(args) => cmd_client(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

/// Seed precedence: explicit flag, then BLADE_SEED, then 42.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("BLADE_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::Usage(format!("BLADE_SEED='{v}' is not a valid seed"))),
        Err(_) => Ok(42),
    }
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn ea_config(
    problem: Problem,
    n: usize,
    variant: Variant,
    schedule: Option<ScheduleSpec>,
    seed: u64,
    max_iters: Option<u64>,
) -> EAConfig {
    let spec = schedule.unwrap_or_else(|| ScheduleSpec::default_for(problem));
    let mut cfg = EAConfig::new(problem, n, variant, spec.materialize(n), seed);
    if let Some(cap) = max_iters {
        cfg.max_iterations = cap;
    }
    cfg
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let cfg = ea_config(
        args.problem,
        args.n,
        args.variant,
        args.schedule,
        seed,
        args.max_iters,
    );
    let mut out = String::from("metric,value\n");
    if args.clients == 1 {
        let rec = ea::run(&cfg)?;
        writeln!(out, "generations,{}", rec.generations).unwrap();
        writeln!(out, "evaluations,{}", rec.evaluations).unwrap();
        writeln!(out, "converged,{}", rec.converged).unwrap();
        writeln!(out, "final_fitness,{}", rec.final_fitness).unwrap();
    } else {
        let rec = run_lockstep(&DistConfig::lockstep(cfg, args.clients))?;
        writeln!(out, "rounds,{}", rec.rounds).unwrap();
        writeln!(out, "total_evaluations,{}", rec.total_evaluations).unwrap();
        writeln!(out, "converged,{}", rec.converged).unwrap();
    }
    write_output(args.out.as_ref(), &out)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.n_step == 0 {
        return Err(CliError::Usage("--n-step must be positive".into()));
    }
    if args.n_min > args.n_max {
        return Err(CliError::Usage(format!(
            "--n-min {} exceeds --n-max {}",
            args.n_min, args.n_max
        )));
    }
    let seed = resolve_seed(args.seed)?;
    let spec = SweepSpec {
        problem: args.problem,
        variants: args.variants,
        schedule: args
            .schedule
            .unwrap_or_else(|| ScheduleSpec::default_for(args.problem)),
        n_range: (args.n_min..=args.n_max).step_by(args.n_step).collect(),
        client_counts: args.clients,
        runs: args.runs,
        base_seed: seed,
        max_iterations: args.max_iters,
    };
    let csv = sweep_to_csv(&sweep(&spec));
    write_output(args.out.as_ref(), &csv)
}

fn build_chain(args: &MarkovArgs) -> Result<TransitionMatrix, Error> {
    match args.variant {
        Variant::Baseline => build_baseline_chain(args.problem, args.n, args.mu),
        Variant::Blanket => build_blanket_chain(args.problem, args.n, args.mu),
    }
}

fn cmd_markov(args: MarkovArgs) -> Result<(), CliError> {
    if !(args.mu > 0.0 && args.mu < 1.0) {
        return Err(CliError::Usage(format!("--mu {} must be in (0, 1)", args.mu)));
    }
    let chain = build_chain(&args)?;
    let mut out = String::new();
    writeln!(out, "# transition matrix ({} states)", chain.dim()).unwrap();
    let labels = chain.labels();
    out.push_str("state");
    for l in labels {
        write!(out, ",{l}").unwrap();
    }
    out.push('\n');
    for (i, label) in labels.iter().enumerate() {
        write!(out, "{label}").unwrap();
        for &p in chain.row(i) {
            write!(out, ",{}", format_sig(p)).unwrap();
        }
        out.push('\n');
    }

    let sp = spectrum(&chain)?;
    writeln!(out, "# spectrum (by modulus, descending)").unwrap();
    out.push_str("re,im,modulus\n");
    for e in &sp.eigenvalues {
        writeln!(
            out,
            "{},{},{}",
            format_sig(e.re),
            format_sig(e.im),
            format_sig(e.norm())
        )
        .unwrap();
    }
    writeln!(out, "# subdominant modulus").unwrap();
    writeln!(out, "lambda2,{}", format_sig(sp.subdominant_modulus())).unwrap();

    let steps = iterate_to_convergence(&chain, args.epsilon)?;
    writeln!(out, "# convergence from the uniform distribution").unwrap();
    writeln!(out, "epsilon,steps").unwrap();
    writeln!(out, "{},{steps}", args.epsilon).unwrap();

    let abs = expected_absorption(&chain)?;
    writeln!(out, "# expected steps to absorption").unwrap();
    out.push_str("state,expected_steps\n");
    for (k, &i) in abs.transient_states.iter().enumerate() {
        writeln!(out, "{},{}", labels[i], format_sig(abs.times[k])).unwrap();
    }
    writeln!(out, "transient_mean,{}", format_sig(abs.transient_mean)).unwrap();
    writeln!(out, "uniform_mean,{}", format_sig(abs.uniform_mean)).unwrap();
    writeln!(
        out,
        "ea_init_mean,{}",
        format_sig(abs.ea_init_mean(&chain, args.n))
    )
    .unwrap();
    write_output(args.out.as_ref(), &out)
}

fn cmd_bound(args: BoundArgs) -> Result<(), CliError> {
    if args.clients < 1 {
        return Err(CliError::Usage("--clients must be at least 1".into()));
    }
    let l = levels(args.problem, args.n, args.mu)?;
    let mut out = String::new();
    writeln!(out, "# fitness levels (m = {})", l.m).unwrap();
    out.push_str("level,s_i\n");
    for (i, &s) in l.s.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, format_sig(s)).unwrap();
    }
    writeln!(out, "# bounds on expected evaluations").unwrap();
    out.push_str("bound,value\n");
    writeln!(out, "single,{}", format_sig(bound_single(&l))).unwrap();
    writeln!(
        out,
        "distributed_c{},{}",
        args.clients,
        format_sig(bound_distributed(&l, args.clients))
    )
    .unwrap();
    writeln!(
        out,
        "simplified_c{},{}",
        args.clients,
        format_sig(bound_simplified(&l, args.clients))
    )
    .unwrap();
    if args.n <= BASELINE_MAX_N {
        let chain = build_baseline_chain(args.problem, args.n, args.mu)?;
        let abs = expected_absorption(&chain)?;
        let worst = abs.times.iter().fold(0.0f64, |a, &b| a.max(b));
        writeln!(out, "exact_worst_start,{}", format_sig(worst)).unwrap();
        writeln!(
            out,
            "exact_uniform_init,{}",
            format_sig(abs.ea_init_mean(&chain, args.n))
        )
        .unwrap();
    }
    write_output(args.out.as_ref(), &out)
}

fn cmd_ratio(args: RatioArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", args.input.display())))?;
    let records = csvio::parse_sweep_csv(&text).map_err(CliError::Runtime)?;
    let single = |r: &csvio::SweepRecord| {
        records.iter().find(|s| {
            s.clients == 1
                && s.problem == r.problem
                && s.variant == r.variant
                && s.schedule == r.schedule
                && s.n == r.n
        })
    };
    let mut out = String::from(csvio::RATIO_CSV_HEADER);
    out.push('\n');
    for r in records.iter().filter(|r| r.clients > 1) {
        let Some(s) = single(r) else {
            return Err(CliError::Runtime(format!(
                "no clients=1 row for {} {} {} n={}",
                r.problem, r.variant, r.schedule, r.n
            )));
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.problem,
            r.variant,
            r.schedule,
            r.n,
            r.clients,
            format_sig(s.mean_total_evals / r.mean_total_evals)
        )
        .unwrap();
    }
    write_output(args.out.as_ref(), &out)
}

fn cmd_hub(args: HubArgs) -> Result<(), CliError> {
    if !(2..=64).contains(&args.n) {
        return Err(CliError::Usage(format!("--n {} out of range 2..=64", args.n)));
    }
    let server = serve_hub(&args.bind, args.n)?;
    println!("LISTENING {}", server.addr());
    use std::io::Write as _;
    std::io::stdout().flush()?;
    // serve until killed
    loop {
        std::thread::park();
    }
}

fn cmd_client(args: ClientArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let cfg = ea_config(
        args.problem,
        args.n,
        args.variant,
        args.schedule,
        seed,
        args.max_iters,
    );
    let rec = run_network_client(&args.hub, &cfg)?;
    let mut out = String::from("metric,value\n");
    writeln!(out, "generations,{}", rec.generations).unwrap();
    writeln!(out, "evaluations,{}", rec.evaluations).unwrap();
    writeln!(out, "converged,{}", rec.converged).unwrap();
    writeln!(out, "final_fitness,{}", rec.final_fitness).unwrap();
    write_output(args.out.as_ref(), &out)
}

fn cmd_plot(args: PlotArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", args.input.display())))?;
    let (spec, series) = if args.ratio {
        let records = csvio::parse_ratio_csv(&text).map_err(CliError::Runtime)?;
        let spec = svg::ChartSpec {
            title: args.title.unwrap_or_else(|| "speedup ratio".into()),
            x_label: "N".into(),
            y_label: "single-client evals / multi-client evals".into(),
            log_y: args.log_y,
            reference_y: Some(1.0),
        };
        let mut series: Vec<svg::Series> = Vec::new();
        for r in &records {
            let name = format!("{} c={}", r.variant, r.clients);
            let s = match series.iter_mut().find(|s| s.name == name) {
                Some(s) => s,
                None => {
                    series.push(svg::Series {
                        name,
                        points: Vec::new(),
                        band: Vec::new(),
                    });
                    series.last_mut().unwrap()
                }
            };
            s.points.push((r.n as f64, r.ratio));
        }
        (spec, series)
    } else {
        let records = csvio::parse_sweep_csv(&text).map_err(CliError::Runtime)?;
        let spec = svg::ChartSpec {
            title: args.title.unwrap_or_else(|| "mean generations".into()),
            x_label: "N".into(),
            y_label: "mean generations (95% CI)".into(),
            log_y: args.log_y,
            reference_y: None,
        };
        let mut series: Vec<svg::Series> = Vec::new();
        for r in &records {
            let name = format!("{} c={}", r.variant, r.clients);
            let s = match series.iter_mut().find(|s| s.name == name) {
                Some(s) => s,
                None => {
                    series.push(svg::Series {
                        name,
                        points: Vec::new(),
                        band: Vec::new(),
                    });
                    series.last_mut().unwrap()
                }
            };
            s.points.push((r.n as f64, r.mean_generations));
            s.band.push((r.n as f64, r.ci95_low, r.ci95_high));
        }
        (spec, series)
    };
    let mut series = series;
    for s in series.iter_mut() {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        s.band.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(CliError::Runtime("no plottable rows in input".into()));
    }
    let doc = svg::render(&spec, &series);
    write_output(args.out.as_ref(), &doc)
}
