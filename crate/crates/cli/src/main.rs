//! Command-line planner: scenario generation, single solves, multiplier
//! sweeps, exhaustive small-instance search, and frame simulation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use covcomp::clustering::{evaluate_with, stability, CoverageTerm, Stability, TopologyDoc};
use covcomp::coverage::CoverageEvaluator;
use covcomp::descent::{run_descent, DescentConfig};
use covcomp::framesim::{simulate_frame, throughput_check, ClusterLink};
use covcomp::linkmodel::build_alpha;
use covcomp::oracle::{oracle_best_with, oracle_pareto_with, DEFAULT_ENUMERATION_CAP};
use covcomp::pareto::{frontier_from_sweep, sweep, SweepConfig, SweepPoint};
use covcomp::scenario::{
    generate_scenario, load_scenario, scenario_to_string, uav_defaults, Region, Scenario,
};

#[derive(Parser)]
#[command(
    name = "covcomp",
    about = "Plan master/worker clusterings that trade sensing coverage against computation rate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random scenario file.
    Gen(GenArgs),
    /// Run the local search at one multiplier.
    Solve(SolveArgs),
    /// Run the local search across a multiplier grid and emit CSV.
    Sweep(SweepArgs),
    /// Exhaustively search a small instance (exact optimum or frontier).
    Oracle(OracleArgs),
    /// Simulate per-cluster frame schedules for a saved topology.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of nodes.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    /// Side length of the square region, km (2-d scenarios).
    #[arg(long, default_value_t = 10.0, conflicts_with = "line_km")]
    square_km: f64,
    /// Length of a 1-d interval region, km (switches to exact1d coverage).
    #[arg(long)]
    line_km: Option<f64>,
    /// RNG seed for node placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parameter preset.
    #[arg(long, value_enum, default_value_t = Preset::Uav)]
    preset: Preset,
    /// Path-loss exponent override.
    #[arg(long, default_value_t = 3.0)]
    pathloss_r: f64,
    /// Coverage radius override, meters.
    #[arg(long)]
    d_m: Option<f64>,
    /// Processing speed override, tasks/s.
    #[arg(long)]
    gamma: Option<f64>,
    /// Output scenario path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// UAV surveillance defaults: 2 km disks, 1/5.4 tasks/s, 4 Mbit inputs.
    Uav,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    lambda: f64,
    /// Write the resulting topology document here.
    #[arg(long)]
    out_topology: Option<PathBuf>,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Outer iteration cap (default 10n).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Coverage term entering the Lagrangian.
    #[arg(long, value_enum, default_value_t = TermArg::Fraction)]
    coverage_term: TermArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum TermArg {
    /// Covered fraction of the region (scale-free multipliers).
    Fraction,
    /// Raw covered measure in m^d.
    Absolute,
}

impl From<TermArg> for CoverageTerm {
    fn from(value: TermArg) -> Self {
        match value {
            TermArg::Fraction => CoverageTerm::Fraction,
            TermArg::Absolute => CoverageTerm::AbsoluteArea,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Explicit comma-separated multiplier list.
    #[arg(long, value_delimiter = ',', conflicts_with = "grid")]
    lambdas: Option<Vec<f64>>,
    /// Log-spaced grid as min,max,count (plus lambda = 0 unless --no-zero).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    grid: Option<Vec<f64>>,
    /// Leave lambda = 0 out of --grid.
    #[arg(long)]
    no_zero: bool,
    /// Local-search restarts per multiplier.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long)]
    out_csv: PathBuf,
    /// Keep only the Pareto frontier, sorted by coverage.
    #[arg(long)]
    pareto: bool,
    /// Also write one topology document per point into this directory.
    #[arg(long)]
    topology_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TermArg::Fraction)]
    coverage_term: TermArg,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Exact Lagrangian optimum at this multiplier.
    #[arg(long, conflicts_with = "pareto")]
    lambda: Option<f64>,
    /// Exact Pareto frontier over all clusterings.
    #[arg(long)]
    pareto: bool,
    /// Enumeration cap on n.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: usize,
    #[arg(long)]
    out_csv: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    topology: PathBuf,
    /// Tasks per frame.
    #[arg(long, default_value_t = 1.0, value_name = "T")]
    t: f64,
    /// Write schedule events (node, phase, start_s, end_s) here.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

/// Writes via a temp file and rename so partial output never lands.
fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<Scenario> {
    load_scenario(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let Preset::Uav = args.preset;
    let mut defaults = uav_defaults(args.pathloss_r);
    if let Some(d) = args.d_m {
        defaults.coverage_radius_m = d;
    }
    if let Some(g) = args.gamma {
        defaults.gamma = g;
    }
    let region = match args.line_km {
        Some(km) => {
            defaults.coverage_config = covcomp::CoverageConfig::Exact1d;
            Region::line(km * 1000.0)?
        }
        None => Region::square(args.square_km * 1000.0)?,
    };
    let scenario = generate_scenario(args.n as usize, region, &defaults, args.seed)?;
    write_atomic(&args.out, &scenario_to_string(&scenario))?;
    println!(
        "wrote {} ({} nodes, seed {})",
        args.out.display(),
        args.n,
        args.seed
    );
    Ok(())
}

fn print_summary(scenario: &Scenario, point: &SweepPoint) {
    let stable = match stability(&point.evaluation, &scenario.tasks) {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
    };
    println!(
        "lambda {:>10.6}: masters {:>3}, coverage {:.4}, rate {:.6} tasks/s ({}), L {:.6}, {} iters{}",
        point.lambda,
        point.clustering.master_count(),
        point.evaluation.coverage.fraction,
        point.evaluation.rate,
        stable,
        point.evaluation.lagrangian,
        point.iterations,
        if point.converged { "" } else { " (iteration cap)" },
    );
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<()> {
    let scenario = load(&args.scenario)?;
    let config = DescentConfig {
        lambda: args.lambda,
        tol: args.tol,
        max_outer_iters: args.max_iters,
        coverage_term: args.coverage_term.into(),
        coverage_config: None,
        scan_seed: None,
    };
    let outcome = run_descent(&scenario, &config)?;
    let alpha = build_alpha(&scenario);
    let doc = TopologyDoc::build(&scenario, &outcome.clustering, &outcome.evaluation, &alpha);
    print_summary(
        &scenario,
        &SweepPoint {
            lambda: args.lambda,
            iterations: outcome.trace.rows.len() - 1,
            converged: outcome.converged,
            clustering: outcome.clustering.clone(),
            evaluation: outcome.evaluation.clone(),
            restart: 0,
        },
    );
    if let Some(path) = &args.out_topology {
        write_atomic(path, &doc.to_json())?;
        println!("topology -> {}", path.display());
    }
    if let Some(path) = &args.trace {
        write_atomic(path, &outcome.trace.to_csv())?;
        println!("trace -> {}", path.display());
    }
    Ok(())
}

const SWEEP_HEADER: [&str; 7] = [
    "lambda",
    "coverage_fraction",
    "coverage_abs_m2",
    "rate_tasks_per_s",
    "master_count",
    "iterations",
    "stable",
];

struct SweepRow {
    lambda: Option<f64>,
    coverage_fraction: f64,
    coverage_abs: f64,
    rate: f64,
    master_count: usize,
    iterations: Option<usize>,
    stable: bool,
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(SWEEP_HEADER)?;
    for row in rows {
        writer.write_record([
            row.lambda.map(|l| l.to_string()).unwrap_or_default(),
            row.coverage_fraction.to_string(),
            row.coverage_abs.to_string(),
            row.rate.to_string(),
            row.master_count.to_string(),
            row.iterations.map(|i| i.to_string()).unwrap_or_default(),
            row.stable.to_string(),
        ])?;
    }
    let data = String::from_utf8(writer.into_inner()?)?;
    write_atomic(path, &data)
}

fn sweep_lambdas(args: &SweepArgs) -> anyhow::Result<Vec<f64>> {
    if let Some(lambdas) = &args.lambdas {
        if lambdas.is_empty() {
            bail!("--lambdas needs at least one value");
        }
        return Ok(lambdas.clone());
    }
    if let Some(grid) = &args.grid {
        let (min, max, count) = (grid[0], grid[1], grid[2]);
        if !(min > 0.0 && max >= min) || count < 1.0 || count.fract() != 0.0 {
            bail!("--grid expects min,max,count with 0 < min <= max and integer count >= 1");
        }
        let mut lambdas = if args.no_zero { vec![] } else { vec![0.0] };
        lambdas.extend(covcomp::pareto::log_spaced(min, max, count as usize));
        return Ok(lambdas);
    }
    Ok(SweepConfig::default_grid())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let scenario = load(&args.scenario)?;
    let mut config = SweepConfig::new(sweep_lambdas(&args)?);
    config.restarts = args.restarts;
    config.coverage_term = args.coverage_term.into();
    let points = sweep(&scenario, &config)?;
    for point in &points {
        print_summary(&scenario, point);
    }

    let rows: Vec<SweepRow> = if args.pareto {
        frontier_from_sweep(&points)
            .iter()
            .map(|f| SweepRow {
                lambda: f.lambda,
                coverage_fraction: f.coverage_fraction,
                coverage_abs: f.coverage_abs,
                rate: f.rate,
                master_count: f.master_count,
                iterations: None,
                stable: f.rate >= scenario.tasks.arrival_rate,
            })
            .collect()
    } else {
        points
            .iter()
            .map(|p| SweepRow {
                lambda: Some(p.lambda),
                coverage_fraction: p.evaluation.coverage.fraction,
                coverage_abs: p.evaluation.coverage.absolute,
                rate: p.evaluation.rate,
                master_count: p.clustering.master_count(),
                iterations: Some(p.iterations),
                stable: stability(&p.evaluation, &scenario.tasks) == Stability::Stable,
            })
            .collect()
    };
    write_sweep_csv(&args.out_csv, &rows)?;
    println!("{} rows -> {}", rows.len(), args.out_csv.display());

    if let Some(dir) = &args.topology_dir {
        std::fs::create_dir_all(dir)?;
        let alpha = build_alpha(&scenario);
        for (k, point) in points.iter().enumerate() {
            let doc = TopologyDoc::build(&scenario, &point.clustering, &point.evaluation, &alpha);
            let path = dir.join(format!("topology_{k:03}_lambda_{}.json", point.lambda));
            write_atomic(&path, &doc.to_json())?;
        }
        println!("{} topologies -> {}", points.len(), dir.display());
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> anyhow::Result<()> {
    let scenario = load(&args.scenario)?;
    if args.pareto {
        let frontier = oracle_pareto_with(&scenario, args.cap)?;
        let rows: Vec<SweepRow> = frontier
            .iter()
            .map(|f| SweepRow {
                lambda: None,
                coverage_fraction: f.coverage_fraction,
                coverage_abs: f.coverage_abs,
                rate: f.rate,
                master_count: f.master_count,
                iterations: None,
                stable: f.rate >= scenario.tasks.arrival_rate,
            })
            .collect();
        write_sweep_csv(&args.out_csv, &rows)?;
        println!(
            "exact frontier: {} points -> {}",
            rows.len(),
            args.out_csv.display()
        );
        return Ok(());
    }
    let Some(lambda) = args.lambda else {
        bail!("oracle needs --lambda <value> or --pareto");
    };
    let (clustering, evaluation) =
        oracle_best_with(&scenario, lambda, CoverageTerm::Fraction, args.cap)?;
    let row = SweepRow {
        lambda: Some(lambda),
        coverage_fraction: evaluation.coverage.fraction,
        coverage_abs: evaluation.coverage.absolute,
        rate: evaluation.rate,
        master_count: clustering.master_count(),
        iterations: None,
        stable: stability(&evaluation, &scenario.tasks) == Stability::Stable,
    };
    write_sweep_csv(&args.out_csv, &[row])?;
    println!(
        "exact optimum at lambda {}: masters {:?}, rate {:.6}, coverage {:.4} -> {}",
        lambda,
        clustering.masters(),
        evaluation.rate,
        evaluation.coverage.fraction,
        args.out_csv.display()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let scenario = load(&args.scenario)?;
    let text = std::fs::read_to_string(&args.topology)
        .with_context(|| format!("reading topology {}", args.topology.display()))?;
    let doc = TopologyDoc::from_json(&text)?;
    let clustering = doc.to_clustering(&scenario)?;

    let alpha = build_alpha(&scenario);
    let mut cov = CoverageEvaluator::new(&scenario, &scenario.coverage_config)?;
    let evaluation = evaluate_with(
        &clustering,
        doc.lambda,
        CoverageTerm::Fraction,
        &alpha,
        &mut cov,
    )?;

    let mut events: Vec<[String; 4]> = Vec::new();
    let mut simulated_network_rate = f64::INFINITY;
    let mut worst_rel = 0.0f64;
    for cluster in clustering.clusters() {
        let workers: Vec<_> = cluster
            .members
            .iter()
            .copied()
            .filter(|&j| j != cluster.master)
            .collect();
        let link = ClusterLink::from_scenario(&scenario, cluster.master, &workers)?;
        let split = covcomp::clustering::optimal_split(&cluster, &alpha);
        let frame = simulate_frame(&link, &split, args.t)?;
        let simulated = throughput_check(&frame, args.t);
        let analytical = evaluation.per_cluster_rates[&cluster.master];
        let rel = (simulated - analytical).abs() / analytical;
        worst_rel = worst_rel.max(rel);
        simulated_network_rate = simulated_network_rate.min(simulated);
        println!(
            "cluster {:>3}: {} members, analytical {:.9} tasks/s, simulated {:.9} tasks/s",
            cluster.master,
            cluster.members.len(),
            analytical,
            simulated
        );
        for sched in &frame.nodes {
            for (phase, iv) in [
                ("dispatch", sched.dispatch),
                ("compute", sched.compute),
                ("return", sched.ret),
            ] {
                events.push([
                    sched.node.to_string(),
                    phase.to_string(),
                    iv.start.to_string(),
                    iv.end.to_string(),
                ]);
            }
        }
    }
    println!(
        "network: analytical {:.9} tasks/s, simulated {:.9} tasks/s (worst cluster deviation {:.3e})",
        evaluation.rate, simulated_network_rate, worst_rel
    );

    if let Some(path) = &args.out_csv {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["node", "phase", "start_s", "end_s"])?;
        for event in &events {
            writer.write_record(event)?;
        }
        let data = String::from_utf8(writer.into_inner()?)?;
        write_atomic(path, &data)?;
        println!("{} events -> {}", events.len(), path.display());
    }

    // Mismatch between the schedule walk and the closed form indicates a
    // corrupted topology or model drift; fail loudly.
    if worst_rel > 1e-9 {
        bail!("simulated rates diverge from analytical rates (worst {worst_rel:.3e})");
    }
    Ok(())
}
