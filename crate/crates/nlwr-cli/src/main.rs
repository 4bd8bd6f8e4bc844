//! `nlwr`: run nonlocal traffic-flow models on road networks and emit
//! plot-ready CSV. See `nlwr --help` for the command list.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlwr::limit::riemann_limit_1to1;
use nlwr::measures::{l1_distance, report};
use nlwr::output::{write_profile_csv, write_results, write_sweep_csv, SweepRow};
use nlwr::scenario::{
    builtin_diamond, load_scenario, validate_scenario, Model, ModelFamily, Scenario,
    ScenarioConfig,
};
use nlwr::scheme::{simulate, CflMode};
use nlwr::{Error, Result};

#[derive(Parser)]
#[command(
    name = "nlwr",
    version,
    about = "Nonlocal traffic flow on road networks",
    after_help = "Exit codes: 0 success, 1 invalid scenario or arguments, 2 runtime failure."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario; write density profiles, measures and split ratios
    Simulate(SimulateArgs),
    /// Run one scenario per kernel range, plus the local baseline
    SweepEta(SweepArgs),
    /// Run a scenario under two models and report per-road L1 distances
    Compare(CompareArgs),
    /// Sample the exact limit-model solution of a 1-to-1 Riemann problem
    Riemann(RiemannArgs),
    /// Check a scenario and report every violation
    Validate(ScenarioArgs),
}

/// Scenario source plus overrides. Flags win over the corresponding
/// scenario-file fields.
#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (JSON)
    scenario: Option<PathBuf>,

    /// Built-in scenario instead of a file; the only one is "diamond"
    #[arg(long, conflicts_with = "scenario")]
    builtin: Option<String>,

    /// Kernel range override
    #[arg(long)]
    eta: Option<f64>,

    /// Model override: nonlocal-maxflux, nonlocal-distribution,
    /// local-maxflux, local-distribution, limit or limit-distribution
    #[arg(long)]
    model: Option<String>,

    /// Horizon override
    #[arg(long = "T")]
    horizon: Option<f64>,

    /// Cell width override
    #[arg(long)]
    dx: Option<f64>,

    /// Time-step rule: strict, relaxed or adaptive
    #[arg(long, default_value = "adaptive")]
    cfl: String,
}

impl ScenarioArgs {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut config = match (&self.scenario, self.builtin.as_deref()) {
            (Some(path), _) => load_scenario(path)?,
            (None, Some("diamond")) => builtin_diamond(),
            (None, Some(other)) => {
                return Err(Error::Config(format!(
                    "unknown builtin {other:?}; the only one is \"diamond\""
                )))
            }
            (None, None) => {
                return Err(Error::Config(
                    "pass a scenario file or --builtin diamond".into(),
                ))
            }
        };
        if let Some(eta) = self.eta {
            config.kernel = config.kernel.with_eta(eta);
        }
        if let Some(model) = &self.model {
            config.model = model.parse()?;
        }
        if let Some(t) = self.horizon {
            config.horizon = t;
        }
        if let Some(dx) = self.dx {
            config.grid.dx = dx;
        }
        Ok(config)
    }

    fn cfl(&self) -> Result<CflMode> {
        match self.cfl.as_str() {
            "strict" => Ok(CflMode::Strict),
            "relaxed" => Ok(CflMode::Relaxed),
            "adaptive" => Ok(CflMode::Adaptive),
            other => Err(Error::Config(format!(
                "unknown CFL mode {other:?}; use strict, relaxed or adaptive"
            ))),
        }
    }
}

/// `--out` beats the scenario's own output dir beats `./nlwr-out`.
fn out_dir(flag: &Option<PathBuf>, config: &ScenarioConfig) -> PathBuf {
    flag.clone()
        .or_else(|| config.outputs.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("nlwr-out"))
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let config = args.scenario.config()?;
    let out = out_dir(&args.out, &config);
    println!(
        "model {}  eta {}  dx {}  T {}",
        config.model,
        config.kernel.eta(),
        config.grid.dx,
        config.horizon
    );
    let sc = Scenario::build(config)?;
    let traj = simulate(&sc, args.scenario.cfl()?)?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }
    let rep = report(&traj);
    println!("steps: {}", traj.steps.len());
    println!("outflow: {}", rep.outflow);
    println!("total_travel_time: {}", rep.total_travel_time);
    println!("congestion: {}", rep.congestion);
    for path in write_results(&traj, &rep, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Kernel ranges to run, comma separated; an empty list emits only the
    /// table header
    #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "0.5,0.25,0.1,0.05")]
    etas: Vec<f64>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn nonlocal(family: ModelFamily) -> Model {
    match family {
        ModelFamily::Maxflux => Model::NonlocalMaxflux,
        ModelFamily::Distribution => Model::NonlocalDistribution,
    }
}

fn local(family: ModelFamily) -> Model {
    match family {
        ModelFamily::Maxflux => Model::LocalMaxflux,
        ModelFamily::Distribution => Model::LocalDistribution,
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let base = args.scenario.config()?;
    let mode = args.scenario.cfl()?;
    let family = base.model.family();

    let mut jobs: Vec<(Option<f64>, ScenarioConfig)> = args
        .etas
        .iter()
        .map(|&eta| {
            let mut c = base.clone();
            c.model = nonlocal(family);
            c.kernel = c.kernel.with_eta(eta);
            (Some(eta), c)
        })
        .collect();
    if !args.etas.is_empty() {
        let mut c = base.clone();
        c.model = local(family);
        jobs.push((None, c));
    }

    let rows: Result<Vec<SweepRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(eta, c)| {
                s.spawn(move || -> Result<SweepRow> {
                    let sc = Scenario::build(c)?;
                    let rep = report(&simulate(&sc, mode)?);
                    Ok(SweepRow {
                        eta,
                        outflow: rep.outflow,
                        total_travel_time: rep.total_travel_time,
                        congestion: rep.congestion,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let rows = rows?;

    println!("{:>8}  {:>10}  {:>10}  {:>10}", "eta", "outflow", "ttt", "cm");
    for row in &rows {
        let eta = row.eta.map_or("local".to_string(), |e| e.to_string());
        println!(
            "{:>8}  {:>10.4}  {:>10.4}  {:>10.4}",
            eta, row.outflow, row.total_travel_time, row.congestion
        );
    }

    let dir = out_dir(&args.out, &base);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("sweep.csv");
    write_sweep_csv(&path, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Exactly two model names, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<String>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let [a, b] = args.models.as_slice() else {
        return Err(Error::Config(format!(
            "--models needs exactly two names, got {}",
            args.models.len()
        )));
    };
    let base = args.scenario.config()?;
    let mode = args.scenario.cfl()?;
    let horizon = base.horizon;

    let run = |name: &str| -> Result<_> {
        let mut c = base.clone();
        c.model = name.parse()?;
        simulate(&Scenario::build(c)?, mode)
    };
    let (ta, tb) = (run(a)?, run(b)?);

    println!("L1 distance per road at t = {horizon} ({a} vs {b})");
    let mut rows = Vec::new();
    for road in &ta.roads {
        let d = l1_distance(&ta, &tb, road.id, horizon)?;
        println!("road {:>3}  {d}", road.id);
        rows.push((road.id, d));
    }

    let dir = out_dir(&args.out, &base);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("compare.csv");
    let mut text = String::from("road,l1\n");
    for (id, d) in &rows {
        text.push_str(&format!("{id},{d}\n"));
    }
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Args)]
struct RiemannArgs {
    /// Upstream state
    #[arg(long)]
    rho_l: f64,

    /// Downstream state
    #[arg(long)]
    rho_r: f64,

    /// Capacity of the receiving road
    #[arg(long, default_value_t = 1.0)]
    rho_max2: f64,

    /// Free-flow speed of the receiving road
    #[arg(long, default_value_t = 1.0)]
    v2: f64,

    /// Evaluation time
    #[arg(long)]
    t: f64,

    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    x_min: f64,

    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    x_max: f64,

    /// Number of sample points
    #[arg(long, default_value_t = 301)]
    points: usize,

    /// Write the profile here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_riemann(args: &RiemannArgs) -> Result<()> {
    if args.points < 2 || !(args.x_max > args.x_min) {
        return Err(Error::Config(format!(
            "need at least two sample points and x_max > x_min, got {} on [{}, {}]",
            args.points, args.x_min, args.x_max
        )));
    }
    let step = (args.x_max - args.x_min) / (args.points - 1) as f64;
    let xs: Vec<f64> = (0..args.points)
        .map(|i| args.x_min + i as f64 * step)
        .collect();
    let rho = xs
        .iter()
        .map(|&x| riemann_limit_1to1(args.rho_l, args.rho_r, args.rho_max2, args.v2, args.t, x))
        .collect::<Result<Vec<f64>>>()?;

    match &args.out {
        Some(path) => {
            write_profile_csv(path, &xs, &rho)?;
            println!("wrote {}", path.display());
        }
        None => {
            println!("x,rho");
            for (x, r) in xs.iter().zip(&rho) {
                println!("{x},{r}");
            }
        }
    }
    Ok(())
}

fn cmd_validate(args: &ScenarioArgs) -> Result<()> {
    let config = args.config()?;
    let violations = validate_scenario(&config);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    println!(
        "ok: {} roads, {} junctions, model {}, eta {}, T {}",
        config.roads.len(),
        config.junctions.len(),
        config.model,
        config.kernel.eta(),
        config.horizon
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::SweepEta(args) => cmd_sweep(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Riemann(args) => cmd_riemann(args),
        Cmd::Validate(args) => cmd_validate(args),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Invalid(_) | Error::Parse(..) | Error::Domain(_) => 1,
        Error::OutOfBounds { .. } | Error::Io(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
