use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracheat_cli::{
    assemble_files, constants_json, evolve_files, kernel_files, load_scenario, run_suite, sweep,
    with_overrides, AssembleSpec, HarnessError, RunOptions, RunStore, Suite, Target, Written,
};
use fracheat_core::evolution::Scheme;

#[derive(Parser)]
#[command(
    name = "fracheat",
    version,
    about = "Fractional heat equation with a critical Hardy potential"
)]
struct Cli {
    /// Output root, or a file for single-artifact commands [default: $FRACHEAT_OUT or ./fracheat-out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recompute even if the store already holds the result
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the scenario seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario file (flat JSON)
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Print A(d,α), c*, β* and β(c) as JSON
    Constants {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        alpha: f64,
        /// Absolute value or "F*cstar"
        #[arg(long)]
        c: Option<String>,
    },
    /// Write the discrete operator as CSV triples plus a JSON header
    Assemble {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "0")]
        c: String,
        /// Truncation level of the potential (none if omitted)
        #[arg(long)]
        k: Option<f64>,
        /// lo,hi (or x_lo,x_hi,y_lo,y_hi for d = 2)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        domain: Vec<f64>,
        #[arg(long)]
        h: f64,
    },
    /// Run the monotone truncation scheme and write per-time CSVs
    Evolve {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        /// expm, crank-nicolson or implicit-euler
        #[arg(long)]
        scheme: Option<Scheme>,
    },
    /// Write the heat kernel at time T as CSV triples
    Kernel {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        t: f64,
        /// Grid level index (default: finest)
        #[arg(long)]
        level: Option<usize>,
    },
    /// Run a verification suite and write its report
    Verify {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// constants, operator, kernel, sharp, lp, blowup or all
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
    /// Run a suite over several couplings in parallel
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Couplings, e.g. 0.25*cstar,0.5*cstar,1.1*cstar
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<String>,
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
}

fn report_written(w: &Written) {
    let tag = match w {
        Written::Fresh(_) => "wrote",
        Written::Cached(_) => "cached",
    };
    for p in w.paths() {
        println!("{tag} {}", p.display());
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Usage(format!("--threads {n}: {e}")))?;
    }
    let target = Target::resolve(cli.out.as_deref());
    let opts = RunOptions { force: cli.force };
    match cli.command {
        Command::Constants { d, alpha, c } => {
            let v = constants_json(d, alpha, c.as_deref())?;
            let text = serde_json::to_string_pretty(&v).expect("json");
            println!("{text}");
            if let Target::File(p) = &target {
                fracheat_cli::store::write_atomic(p, text.as_bytes())?;
            }
        }
        Command::Assemble {
            d,
            alpha,
            c,
            k,
            domain,
            h,
        } => {
            let spec = AssembleSpec {
                d,
                alpha,
                c,
                k,
                domain,
                h,
            };
            report_written(&assemble_files(&spec, &target, cli.force)?);
        }
        Command::Evolve {
            scenario,
            times,
            scheme,
        } => {
            let s = with_overrides(load_scenario(&scenario.scenario)?, cli.seed, times, scheme)?;
            report_written(&evolve_files(&s, target.root()?, cli.force)?);
        }
        Command::Kernel { scenario, t, level } => {
            let s = with_overrides(load_scenario(&scenario.scenario)?, cli.seed, None, None)?;
            if !s.subcritical() {
                return Err(HarnessError::scenario(
                    scenario.scenario.display().to_string(),
                    format!("kernels need c ≤ c* = {}", s.c_star),
                ));
            }
            report_written(&kernel_files(&s, t, level, &target, cli.force)?);
        }
        Command::Verify { scenario, suite } => {
            let s = with_overrides(load_scenario(&scenario.scenario)?, cli.seed, None, None)?;
            let (root, copy_to) = match &target {
                Target::Root(r) => (r.clone(), None),
                Target::File(f) => (
                    std::env::var_os(fracheat_cli::OUT_ENV)
                        .map(PathBuf::from)
                        .unwrap_or_else(|| PathBuf::from(fracheat_cli::DEFAULT_OUT)),
                    Some(f.clone()),
                ),
            };
            let store = RunStore::open(root)?;
            let o = run_suite(&store, &s, suite, opts)?;
            println!(
                "{} {} {}",
                if o.cached { "cached" } else { "wrote" },
                o.report_path.display(),
                if o.pass { "PASS" } else { "FAIL" }
            );
            if let Some(f) = copy_to {
                let bytes = std::fs::read(&o.report_path)
                    .map_err(|e| HarnessError::io(&o.report_path, e))?;
                fracheat_cli::store::write_atomic(&f, &bytes)?;
                println!("wrote {}", f.display());
            }
            return Ok(if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
        Command::Sweep { scenario, c, suite } => {
            let s = with_overrides(load_scenario(&scenario.scenario)?, cli.seed, None, None)?;
            let (rows, summary) = sweep(&s, &c, suite, target.root()?, opts)?;
            for r in &rows {
                println!(
                    "c={} {} {} {}",
                    r.c_spec,
                    if r.cached { "cached" } else { "ran" },
                    if r.pass { "PASS" } else { "FAIL" },
                    r.report.display()
                );
            }
            println!("wrote {}", summary.display());
            return Ok(if rows.iter().all(|r| r.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
