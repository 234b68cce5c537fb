//! `infobound`: sweeps of generalization-error bounds from a TOML config.
//!
//! Exit status: 0 success, 2 configuration error, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infobound::mc::{mc_gen_error_scalar, mc_gen_error_vec};
use infobound::report::Report;
use infobound::svg::render_svg;
use infobound::sweep::{env_seed, parse_config, run_sweep, Diagnostic, McSettings, OutputFormat, PointProblem, ProblemKind, SweepConfig};
use infobound::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "infobound", version, about = "Information-theoretic generalization bounds for Gaussian location problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML sweep configuration.
    config: PathBuf,
    /// Overrides of the form key=value (dotted paths, TOML values).
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scalar-problem sweep.
    Scalar {
        #[command(flatten)]
        args: ConfigArgs,
        /// Write the report here instead of the configured output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a vector-problem sweep.
    Vector {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare the Monte Carlo gen-error estimate with the closed form at
    /// every sweep point; fails when any point is off by more than 3 SE.
    McValidate {
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Render a CSV report as a static SVG line chart.
    Render {
        csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a config and list every problem found.
    Validate {
        #[command(flatten)]
        args: ConfigArgs,
    },
}

enum Failure {
    Config(Vec<String>),
    Numerical(String),
}

impl From<Vec<Diagnostic>> for Failure {
    fn from(d: Vec<Diagnostic>) -> Self {
        Failure::Config(d.iter().map(ToString::to_string).collect())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => Failure::Numerical(e.to_string()),
            other => Failure::Config(vec![other.to_string()]),
        }
    }
}

fn load(args: &ConfigArgs, kind: Option<ProblemKind>) -> Result<SweepConfig, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(vec![format!("{}: cannot read: {e}", args.config.display())]))?;
    let seed = env_seed().map_err(|d| Failure::from(vec![d]))?;
    Ok(parse_config(&text, &args.overrides, kind, seed)?)
}

fn write_out(path: Option<&Path>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| Failure::Config(vec![format!("{}: cannot write: {e}", p.display())])),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn sweep(args: &ConfigArgs, kind: ProblemKind, output: Option<PathBuf>) -> Result<(), Failure> {
    let config = load(args, Some(kind))?;
    let report = run_sweep(&config)?;
    let body = match config.format {
        OutputFormat::Csv => report.to_csv(),
        OutputFormat::Json => report.to_json(),
    };
    write_out(output.as_deref().or(config.output.as_deref()), &body)
}

fn mc_validate(args: &ConfigArgs) -> Result<(), Failure> {
    let config = load(args, None)?;
    let mc = config.mc.unwrap_or(McSettings {
        samples: 100_000,
        seed: env_seed().ok().flatten().unwrap_or(0),
    });
    println!("{},true_gen,mc_mean,mc_se,z,ok", config.param);
    let mut failed = 0;
    for (k, &value) in config.values.iter().enumerate() {
        let point = config.problem_at(value)?;
        let seed = mc.seed.wrapping_add(k as u64);
        let est = match &point {
            PointProblem::Scalar(p) => mc_gen_error_scalar(p, mc.samples, seed)?,
            PointProblem::Vector(p) => mc_gen_error_vec(p, mc.samples, seed)?,
        };
        let truth = point.true_gen();
        let z = (est.mean - truth) / est.std_error;
        let ok = est.covers(truth, 3.0);
        failed += usize::from(!ok);
        println!("{value:.16e},{truth:.16e},{:.16e},{:.16e},{z:.3},{ok}", est.mean, est.std_error);
    }
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} point(s) outside 3 standard errors")));
    }
    Ok(())
}

fn render(csv: &Path, output: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(csv).map_err(|e| Failure::Config(vec![format!("{}: cannot read: {e}", csv.display())]))?;
    let report = Report::from_csv(&text)?;
    write_out(Some(output), &render_svg(&report)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scalar { args, output } => sweep(&args, ProblemKind::Scalar, output),
        Command::Vector { args, output } => sweep(&args, ProblemKind::Vector, output),
        Command::McValidate { args } => mc_validate(&args),
        Command::Render { csv, output } => render(&csv, &output),
        Command::Validate { args } => load(&args, None).map(|_| println!("ok")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(diags)) => {
            for d in diags {
                eprintln!("error: {d}");
            }
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
