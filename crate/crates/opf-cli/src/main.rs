//! `opf` — run and compare tracking experiments from the command line.

mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use opf_core::scenario::{builtin_scenario, builtin_scenarios};
use opf_core::{
    compare_report, csv_string, format_table, run_experiment, table_csv, FilterKind, ResultLog,
    RunConfig, RunMetrics, ScenarioSource,
};

#[derive(Parser)]
#[command(
    name = "opf",
    about = "Multi-object 6-DoF tracking with an object-permanence particle filter",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its per-frame CSV log.
    Run(RunArgs),
    /// Run PF and OPF across seeds and print the comparison table.
    Compare(CompareArgs),
    /// List the builtin scenarios.
    Scenarios,
    /// Schema-check a scenario file.
    Validate(ValidateArgs),
    /// Measure tracking throughput (frames per second).
    Bench(BenchArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FilterArg {
    /// Standard particle filter baseline.
    Pf,
    /// Object-permanence filter.
    Opf,
}

impl From<FilterArg> for FilterKind {
    fn from(arg: FilterArg) -> Self {
        match arg {
            FilterArg::Pf => FilterKind::Standard,
            FilterArg::Opf => FilterKind::ObjectPermanence,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Builtin scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value_t = FilterArg::Opf)]
    filter: FilterArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Particles per portion per object.
    #[arg(long, default_value_t = 5000)]
    particles: usize,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file overriding tuning defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for SVG charts of the subject's error and trace columns.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: String,
    /// Number of seeds per filter.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// First seed; runs use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    particles: usize,
    /// Write the table as CSV here as well.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fail (exit 3) unless OPF means are at most half the PF means.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Path to the scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "general_op_tracking")]
    scenario: String,
    #[arg(long, value_enum, default_value_t = FilterArg::Opf)]
    filter: FilterArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    particles: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::Scenarios => scenarios(),
        Command::Validate(args) => validate(args),
        Command::Bench(args) => bench(args),
    }
}

/// Builtin name when it resolves, otherwise a file path.
fn scenario_source(name: &str) -> ScenarioSource {
    if builtin_scenario(name).is_some() {
        ScenarioSource::Builtin(name.to_string())
    } else {
        ScenarioSource::Path(PathBuf::from(name))
    }
}

fn build_config(
    scenario: &str,
    filter: FilterKind,
    seed: u64,
    particles: usize,
    config_path: Option<&PathBuf>,
) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(scenario_source(scenario), filter, seed);
    cfg.particles = particles;
    if let Some(path) = config_path {
        config::ConfigFile::load(path)?.apply(&mut cfg);
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = build_config(
        &args.scenario,
        args.filter.into(),
        args.seed,
        args.particles,
        args.config.as_ref(),
    )?;
    let log = run_experiment(&cfg)?;

    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            opf_core::write_csv(&log, std::io::BufWriter::new(file))?;
            eprintln!("wrote {} rows to {}", log.rows.len(), path.display());
        }
        None => print!("{}", csv_string(&log)?),
    }

    let metrics = log.subject_metrics()?;
    eprintln!(
        "{}: subject {:?}, translation error {:.6e} m, rotation error {:.6e} rad",
        log.scenario_name, log.subject_id, metrics.translation_error, metrics.rotation_error
    );

    if let Some(dir) = &args.svg {
        write_charts(&log, dir)?;
        eprintln!("charts in {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn write_charts(log: &ResultLog, dir: &PathBuf) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let track = log.track(&log.subject_id, 0);
    let errors: Vec<f64> = track
        .iter()
        .map(|r| (r.estimate.translation - r.truth.translation).norm())
        .collect();
    let traces: Vec<f64> = track.iter().map(|r| r.trace_q).collect();
    let filter = match log.filter {
        FilterKind::Standard => "pf",
        FilterKind::ObjectPermanence => "opf",
    };

    let error_chart = svg::line_chart(
        &format!("{} — {} translation error", log.scenario_name, filter),
        "error (m)",
        &[svg::Series {
            label: "translation error",
            values: &errors,
        }],
    );
    std::fs::write(dir.join("subject_error.svg"), error_chart)?;

    let trace_chart = svg::line_chart(
        &format!(
            "{} — {} trace of effective covariance",
            log.scenario_name, filter
        ),
        "trace",
        &[svg::Series {
            label: "trace_q",
            values: &traces,
        }],
    );
    std::fs::write(dir.join("subject_trace.svg"), trace_chart)?;
    Ok(())
}

fn compare(args: CompareArgs) -> Result<ExitCode> {
    let mut metrics: Vec<RunMetrics> = Vec::new();
    for i in 0..args.seeds {
        let seed = args.seed + i;
        for filter in [FilterKind::Standard, FilterKind::ObjectPermanence] {
            let cfg = build_config(
                &args.scenario,
                filter,
                seed,
                args.particles,
                args.config.as_ref(),
            )?;
            let log = run_experiment(&cfg)?;
            metrics.push(log.subject_metrics()?);
        }
    }
    let rows = compare_report(&metrics)?;
    print!("{}", format_table(&rows));

    if let Some(path) = &args.out {
        std::fs::write(path, table_csv(&rows))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }

    if args.check {
        for metric in ["translation", "rotation"] {
            let pf = rows
                .iter()
                .find(|r| r.metric == metric && r.filter == FilterKind::Standard)
                .expect("report always has both filters");
            let opf = rows
                .iter()
                .find(|r| r.metric == metric && r.filter == FilterKind::ObjectPermanence)
                .expect("report always has both filters");
            if opf.mean > 0.5 * pf.mean {
                eprintln!(
                    "check failed: {} error opf {:.6e} > 0.5 x pf {:.6e}",
                    metric, opf.mean, pf.mean
                );
                return Ok(ExitCode::from(3));
            }
        }
        eprintln!("check passed: opf means are at most half the pf means");
    }
    Ok(ExitCode::SUCCESS)
}

fn scenarios() -> Result<ExitCode> {
    for (name, spec) in builtin_scenarios() {
        println!(
            "{name}: {} objects, {:.1} s at {} Hz ({} frames)",
            spec.objects.len(),
            spec.duration(),
            spec.frame_rate,
            spec.frame_count()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.scenario)
        .with_context(|| format!("cannot read {}", args.scenario.display()))?;
    match opf_core::ScenarioSpec::from_json(&text) {
        Ok(spec) => {
            println!(
                "OK: {} objects, {:.1} s at {} Hz ({} frames)",
                spec.objects.len(),
                spec.duration(),
                spec.frame_rate,
                spec.frame_count()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("invalid scenario: {e}");
            Ok(ExitCode::from(2))
        }
    }
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let cfg = build_config(
        &args.scenario,
        args.filter.into(),
        args.seed,
        args.particles,
        None,
    )?;
    let start = Instant::now();
    let log = run_experiment(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let frames = log.rows.iter().map(|r| r.frame).max().map_or(0, |f| f + 1);
    if elapsed <= 0.0 || frames == 0 {
        bail!("benchmark produced no frames");
    }
    let fps = frames as f64 / elapsed;
    println!(
        "{}: {} objects, {} particles per portion, {} frames in {:.3} s -> {:.1} frames/s",
        log.scenario_name,
        log.rows.iter().filter(|r| r.frame == 0).count(),
        args.particles,
        frames,
        elapsed,
        fps
    );
    if fps < 100.0 {
        eprintln!("warning: below the 100 frames/s real-time target on this machine");
    }
    Ok(ExitCode::SUCCESS)
}
