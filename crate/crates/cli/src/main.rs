use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sphere_robin_cli::{execute, CliError, Command, RandomBodies, Real, RunConfig};

/// Robin eigenvalue comparisons for convex bodies on the sphere.
///
/// Exit status: 0 when every check passes, 1 on a verification failure,
/// 2 on bad input or geometry.
#[derive(Parser)]
#[command(name = "sphere-robin", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// First Robin eigenvalue of a geodesic ball; CSV holds the radial profile.
    BallEig(Params),
    /// Eigenvalue comparison with the ball of equal perimeter.
    VerifyThm1(Params),
    /// Quantitative form of the comparison.
    VerifyThm2(Params),
    /// Perimeter of inner parallel sets and its differential inequality.
    Profile(Params),
    /// Steiner formula against a Monte Carlo outer-parallel volume.
    SteinerCheck(Params),
    /// Alexandrov-Fenchel gap of the curvature measures.
    AfCheck(Params),
    /// Nonconvex inner parallel set of a hyperbolic cylinder.
    HypWitness(Params),
    /// Triangulate a body.
    Mesh(Params),
    /// Run a JSON config file.
    Run {
        config: PathBuf,
    },
}

#[derive(Args, Default)]
struct Params {
    /// JSON config; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Body file.
    body: Option<PathBuf>,
    /// Generated corpus bodies SEED, SEED+1, ... (COUNT of them).
    #[arg(long, num_args = 2, value_names = ["SEED", "COUNT"])]
    random: Option<Vec<u64>>,
    #[arg(long)]
    n: Option<usize>,
    /// Ball radius (expression).
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    /// Robin parameters, comma separated (expressions).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<String>>,
    /// Profile grid size, or number of profile samples for ball-eig.
    #[arg(long)]
    steps: Option<usize>,
    /// Also solve the discrete problem at this refinement level.
    #[arg(long)]
    fem_level: Option<usize>,
    /// Outer parallel distances, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    s: Option<Vec<String>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Inner parallel distances, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    delta: Option<Vec<String>>,
    #[arg(long)]
    dim: Option<usize>,
    /// Random geodesics for the cylinder convexity check.
    #[arg(long)]
    pairs: Option<usize>,
    /// Mesh refinement level.
    #[arg(long)]
    level: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the CSV table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the mesh here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exprs(v: Option<Vec<String>>) -> Option<Vec<Real>> {
    v.map(|v| v.into_iter().map(Real::Expr).collect())
}

impl Params {
    fn into_config(self, command: Command) -> Result<RunConfig, CliError> {
        let random = match self.random.as_deref() {
            None => None,
            Some(&[seed, count]) => Some(RandomBodies { seed, count: count as usize }),
            Some(_) => return Err(CliError::Input("--random takes SEED COUNT".into())),
        };
        let flags = RunConfig {
            command,
            n: self.n,
            r: self.r.map(Real::Expr),
            beta: exprs(self.beta),
            body: self.body,
            random,
            steps: self.steps,
            fem_level: self.fem_level,
            s: exprs(self.s),
            samples: self.samples,
            seed: self.seed,
            delta: exprs(self.delta),
            dim: self.dim,
            pairs: self.pairs,
            level: self.level,
            json: self.json,
            csv: self.csv,
            out: self.out,
        };
        match self.config {
            Some(path) => load_config(&path)?.overlay(flags),
            None => Ok(flags),
        }
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = match cli.command {
        Sub::BallEig(p) => p.into_config(Command::BallEig)?,
        Sub::VerifyThm1(p) => p.into_config(Command::VerifyThm1)?,
        Sub::VerifyThm2(p) => p.into_config(Command::VerifyThm2)?,
        Sub::Profile(p) => p.into_config(Command::Profile)?,
        Sub::SteinerCheck(p) => p.into_config(Command::SteinerCheck)?,
        Sub::AfCheck(p) => p.into_config(Command::AfCheck)?,
        Sub::HypWitness(p) => p.into_config(Command::HypWitness)?,
        Sub::Mesh(p) => p.into_config(Command::Mesh)?,
        Sub::Run { config } => load_config(&config)?,
    };
    let outcome = execute(&cfg)?;
    if let Some(p) = &cfg.json {
        write(p, &outcome.json)?;
    }
    if let Some(p) = &cfg.csv {
        write(p, &outcome.csv)?;
    }
    match (&outcome.mesh, &cfg.out) {
        (Some(m), Some(p)) => {
            write(p, m)?;
            print!("{}", outcome.summary);
        }
        (Some(m), None) => print!("{m}"),
        (None, _) => print!("{}", outcome.summary),
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
