//! `qlgraph`: command-line driver. Exit codes: 0 success, 2 bad input or
//! violated precondition, 3 solver failed to converge.

mod expr;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use qlgraph::landis::LandisOptions;
use qlgraph::solvers::SolveConfig;
use scenario::{
    csv_with_config, pretty, BetaTask, CliError, CliResult, Format, GraphSource, GreenMethod, GreenTask, HardyTask,
    LandisRegime, LandisTask, OperatorArgs, OutputArgs, ProbeTask, Scenario, SolveTask, Task,
};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "qlgraph", version, about = "Quasilinear Schrödinger operators on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    #[command(flatten)]
    graph: GraphSource,
    #[command(flatten)]
    operator: OperatorArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

impl Common {
    fn scenario(self, task: Task) -> Scenario {
        Scenario { name: None, graph: self.graph, operator: self.operator, task, seed: self.seed, output: self.output }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Check or write graph files.
    Graph {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
    /// Write model graph specs.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
    /// Dirichlet problem on the ball, boundary = outer sphere.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Boundary data, a radial expression.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        boundary: String,
        /// Right-hand side on the interior.
        #[arg(long, allow_hyphen_values = true)]
        source: Option<String>,
        #[arg(long)]
        residual_tol: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
        #[arg(long)]
        scaled_residual: bool,
    },
    /// Green function of Δ_p + alpha with pole at the root.
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t)]
        method: GreenMethod,
        /// Exhaustion radii, comma separated.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<usize>>,
        #[arg(long)]
        reference_radius: Option<usize>,
    },
    /// Decay rate β of (Δ_p + 1)-harmonic radial functions on the d-regular tree.
    Beta {
        #[command(flatten)]
        common: Common,
    },
    /// Optimal Hardy weight from G_0 on a model graph.
    Hardy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Randomized search for a test function with negative energy.
    EnergyProbe {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        support_radius: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Landis-type check of a function `u`.
    Landis {
        #[arg(value_enum)]
        regime: LandisRegime,
        #[command(flatten)]
        common: Common,
        /// The function, a radial expression or @file.json.
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        /// Take harmonicity of u as given.
        #[arg(long)]
        assume_harmonic: bool,
        /// Exclude the root from the harmonicity check.
        #[arg(long)]
        exceptional_root: bool,
        /// Run the check on -u as well.
        #[arg(long)]
        check_negative: bool,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        probe_radius: Option<usize>,
        /// Annulus radii, comma separated.
        #[arg(long, value_delimiter = ',')]
        annuli: Option<Vec<usize>>,
        /// Recurrent regime: V ≤ 0 is required outside B_k.
        #[arg(long, default_value_t = 0)]
        compact_radius: usize,
        #[arg(long)]
        declare_recurrent: bool,
    },
    /// Run one scenario JSON file.
    Run { file: PathBuf },
    /// Run a JSON array of scenarios in parallel; each needs its own output.out.
    Batch {
        file: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Parse a graph file and print a summary.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a model ball as a graph file.
    Build {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Write a model spec, with derived data.
    Build {
        #[command(flatten)]
        common: Common,
    },
}

fn scenario_of(cmd: Cmd) -> Scenario {
    match cmd {
        Cmd::Graph { cmd: GraphCmd::Validate { file, output } } => Scenario {
            name: None,
            graph: GraphSource { graph: Some(file), ..Default::default() },
            operator: OperatorArgs::default(),
            task: Task::GraphValidate,
            seed: 0,
            output,
        },
        Cmd::Graph { cmd: GraphCmd::Build { common } } => common.scenario(Task::GraphBuild),
        Cmd::Model { cmd: ModelCmd::Build { common } } => common.scenario(Task::ModelBuild),
        Cmd::Solve { common, boundary, source, residual_tol, max_sweeps, scaled_residual } => {
            let mut config = SolveConfig { scaled_residual, ..Default::default() };
            if let Some(t) = residual_tol {
                config.residual_tol = t;
            }
            if let Some(n) = max_sweeps {
                config.max_sweeps = n;
            }
            common.scenario(Task::Solve(SolveTask { boundary, source, config }))
        }
        Cmd::Green { common, alpha, method, radii, reference_radius } => {
            let mut t = GreenTask { alpha, method, ..Default::default() };
            if let Some(r) = radii {
                t.exhaustion.radii = r;
            }
            if let Some(r) = reference_radius {
                t.exhaustion.reference_radius = r;
            }
            common.scenario(Task::Green(t))
        }
        Cmd::Beta { common } => common.scenario(Task::Beta(BetaTask::default())),
        Cmd::Hardy { common, samples } => common.scenario(Task::Hardy(HardyTask { samples })),
        Cmd::EnergyProbe { common, samples, support_radius, tol } => {
            common.scenario(Task::EnergyProbe(ProbeTask { samples, support_radius, tol }))
        }
        Cmd::Landis {
            regime,
            common,
            u,
            assume_harmonic,
            exceptional_root,
            check_negative,
            samples,
            probe_radius,
            annuli,
            compact_radius,
            declare_recurrent,
        } => {
            let mut options = LandisOptions { assume_harmonic, check_negative_too: check_negative, probe_radius, annuli, ..Default::default() };
            if let Some(n) = samples {
                options.probe_samples = n;
            }
            common.scenario(Task::Landis(LandisTask { regime, u, compact_radius, declare_recurrent, exceptional_root, options }))
        }
        Cmd::Run { .. } | Cmd::Batch { .. } => unreachable!("not a single scenario"),
    }
}

fn read_scenarios(path: &Path) -> CliResult<Vec<Scenario>> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let list = match v {
        Value::Array(_) => v,
        Value::Object(mut o) if o.contains_key("scenarios") => o.remove("scenarios").expect("checked"),
        other => Value::Array(vec![other]),
    };
    Ok(serde_json::from_value(list)?)
}

/// Runs the scenario and writes or prints its artifacts.
fn emit(s: &Scenario) -> CliResult<()> {
    let art = s.run()?;
    if let Some(t) = &art.text {
        print!("{t}");
    }
    match &s.output.out {
        Some(out) => {
            art.write(out)?;
        }
        None if art.text.is_some() => {}
        None => match s.output.format {
            Format::Json => print!("{}", pretty(&art.report)),
            Format::Csv => {
                if art.tables.is_empty() {
                    return Err(CliError::precondition("this task produces no tables; use --format json"));
                }
                let single = art.tables.len() == 1;
                let body: Vec<String> = art
                    .tables
                    .iter()
                    .map(|t| if single { t.csv.clone() } else { format!("# table {}\n{}", t.name, t.csv) })
                    .collect();
                print!("{}", csv_with_config(art.config(), &body.join("\n")));
            }
        },
    }
    Ok(())
}

fn batch(file: &Path, jobs: Option<usize>) -> CliResult<u8> {
    let scenarios = read_scenarios(file)?;
    let mut outs = std::collections::BTreeSet::new();
    for (i, s) in scenarios.iter().enumerate() {
        match &s.output.out {
            None => return Err(CliError::precondition(format!("scenario {i} has no output.out"))),
            Some(o) if !outs.insert(o.clone()) => {
                return Err(CliError::precondition(format!("scenario {i} reuses output {}", o.display())))
            }
            _ => {}
        }
    }
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CliResult<()>>>> = Mutex::new((0..scenarios.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(scenarios.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(s) = scenarios.get(i) else { break };
                let r = s.run().and_then(|art| art.write(s.output.out.as_ref().expect("checked")).map(|_| ()));
                results.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let mut worst = 0;
    for (i, (s, r)) in scenarios.iter().zip(results.into_inner().expect("threads joined")).enumerate() {
        let name = s.name.clone().unwrap_or_else(|| format!("#{i}"));
        match r.expect("every scenario ran") {
            Ok(()) => println!("{name}\tok\t{}", s.output.out.as_ref().expect("checked").display()),
            Err(e) => {
                println!("{name}\texit {}\t{e}", e.code);
                worst = worst.max(e.code);
            }
        }
    }
    Ok(worst)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Batch { file, jobs } => batch(&file, jobs),
        Cmd::Run { file } => read_scenarios(&file).and_then(|list| match list.as_slice() {
            [s] => emit(s).map(|_| 0),
            _ => Err(CliError::precondition("run takes a single scenario; use batch for several")),
        }),
        cmd => emit(&scenario_of(cmd)).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
