use std::path::PathBuf;
use std::process::ExitCode;

use bspsim_core::collectives::Mode;
use bspsim_core::harness::{self, Axis, GoldenSet, RunContext, VerifyOptions};
use bspsim_core::topology::build_reference_topology;
use bspsim_core::{CostParams, Topology, TopologySpec};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bspsim",
    version,
    about = "Tile-machine cost model and benchmark harness"
)]
struct Cli {
    /// Topology description (TOML); the reference machine by default.
    #[arg(long, global = true)]
    topology: Option<PathBuf>,
    /// Cost parameters (TOML); the shipped calibration by default.
    #[arg(long, global = true)]
    costs: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the device-to-DNC map and the hop matrix.
    Topo,
    /// Run one experiment and compare it with its golden values.
    Run {
        id: String,
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Run the experiment suite against the golden data.
    Verify {
        /// Glob over experiment ids.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value = "analytic")]
        mode: String,
        /// Override every row's tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Print CSV instead of a table.
        #[arg(long)]
        csv: bool,
        /// Also write the CSV report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter of an experiment.
    Sweep {
        id: String,
        #[arg(long)]
        axis: String,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Fit the per-hop latency to a golden latency matrix and write new costs.
    Calibrate {
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Verification,
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(cli: &Cli) -> Result<(Topology, CostParams, String, u64), Failure> {
    let topology = match &cli.topology {
        Some(p) => build_reference_topology(&TopologySpec::from_toml_str(&read(p)?)?)?,
        None => Topology::reference(),
    };
    let costs_text = match &cli.costs {
        Some(p) => read(p)?,
        None => bspsim_core::REFERENCE_COSTS.to_string(),
    };
    let params = CostParams::from_toml_str(&costs_text)?;
    let seed = match std::env::var("BSPSIM_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| {
            Failure::Usage(format!(
                "BSPSIM_SEED must be an unsigned integer, got {s:?}"
            ))
        })?,
        Err(_) => params.harness.seed,
    };
    Ok((topology, params, costs_text, seed))
}

fn golden(dir: &Option<PathBuf>) -> Result<GoldenSet, Failure> {
    Ok(match dir {
        Some(d) => GoldenSet::load(d)?,
        None => GoldenSet::reference()?,
    })
}

fn topo(t: &Topology) -> Result<(), Failure> {
    println!("device -> dnc");
    for dev in 0..t.processor_count() {
        println!("  {dev:>2} -> {:>2}", t.device_to_dnc(dev)?);
    }
    let n = t.processor_count();
    println!("hop matrix (dnc)");
    print!("    ");
    for b in 0..n {
        print!("{b:>3}");
    }
    println!();
    for a in 0..n {
        print!("{a:>3} ");
        for b in 0..n {
            print!("{:>3}", t.hop_distance(a, b)?);
        }
        println!();
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (topology, params, costs_text, seed) = load(cli)?;
    match &cli.command {
        Command::Topo => topo(&topology),
        Command::Run { id, golden: dir } => {
            let exp = harness::find(id)?;
            let g = golden(dir)?;
            let ctx = RunContext {
                topology: &topology,
                params: &params,
                seed,
                golden: Some(&g),
            };
            let metrics = harness::run_experiment(&exp, &ctx)?;
            let goldens = g.by_experiment().remove(id).unwrap_or_default();
            println!("# {id} seed={seed} scope={:?}", exp.scope);
            for (m, v) in &metrics {
                match goldens.iter().find(|g| &g.metric == m) {
                    Some(gv) => println!(
                        "{m:<16} {v:>16.6e}  golden {:>12.6e}  error {:+.2}%",
                        gv.value,
                        100.0 * harness::rel_error(*v, gv.value)
                    ),
                    None => println!("{m:<16} {v:>16.6e}"),
                }
            }
            Ok(())
        }
        Command::Verify {
            filter,
            mode,
            tolerance,
            golden: dir,
            csv,
            out,
        } => {
            let mode: Mode = mode.parse()?;
            let mut opts = VerifyOptions {
                mode: Some(mode),
                tolerance: *tolerance,
                ..Default::default()
            };
            if let Some(f) = filter {
                opts = opts.with_filter(f)?;
            }
            let g = golden(dir)?;
            let ctx = RunContext {
                topology: &topology,
                params: &params,
                seed,
                golden: Some(&g),
            };
            let report = harness::verify(&ctx, &g, &opts)?;
            if report.rows.is_empty() {
                return Err(Failure::Usage("filter matches no experiment".into()));
            }
            if let Some(path) = out {
                std::fs::write(path, report.to_csv())?;
            }
            if *csv {
                print!("{}", report.to_csv());
            } else {
                print!("{}", report.to_text());
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Sweep { id, axis, plot } => {
            let exp = harness::find(id)?;
            let axis: Axis = axis.parse()?;
            let ctx = RunContext {
                topology: &topology,
                params: &params,
                seed,
                golden: None,
            };
            let curve = harness::sweep(&exp, axis, &ctx)?;
            print!("{}", curve.to_csv());
            if let Some(path) = plot {
                std::fs::write(path, curve.to_svg())?;
            }
            if curve.monotone {
                Ok(())
            } else {
                eprintln!("{} is not monotone along {axis}", curve.metric);
                Err(Failure::Verification)
            }
        }
        Command::Calibrate { golden: dir, out } => {
            let outcome = harness::calibrate_costs(dir, &costs_text)?;
            std::fs::write(out, &outcome.costs_toml)?;
            print!("{}", outcome.diagnostics());
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
