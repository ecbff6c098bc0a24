//! `fbms`: spectral index checks for free-boundary minimal surfaces.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fbms_cli::{run, CliError, FormChoice, RunConfig};

#[derive(Parser)]
#[command(
    name = "fbms",
    version,
    about = "Morse index, nullity and inequality checks for free-boundary minimal surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Topology invariants, upsilon and the Riemann-Roch table.
    Topo(CommonArgs),
    /// Free-boundary validation residuals.
    Validate(CommonArgs),
    /// Low eigenvalues of the selected second-variation form.
    Spectrum(CommonArgs),
    /// Index/nullity classification of the selected form.
    Index(CommonArgs),
    /// Energy/area comparison identity, with the disk dbar solve.
    Compare(CommonArgs),
    /// Heat traces, eigenvalue-count checks and kernel domination.
    Heat(CommonArgs),
    /// Sobolev and boundary-trace ratio statistics over random fields.
    Sobolev(CommonArgs),
    /// Closed-form index bound evaluators.
    Bounds(CommonArgs),
    /// Full inequality report.
    Report(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Topo(_) => "topo",
            Command::Validate(_) => "validate",
            Command::Spectrum(_) => "spectrum",
            Command::Index(_) => "index",
            Command::Compare(_) => "compare",
            Command::Heat(_) => "heat",
            Command::Sobolev(_) => "sobolev",
            Command::Bounds(_) => "bounds",
            Command::Report(_) => "report",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Topo(a)
            | Command::Validate(a)
            | Command::Spectrum(a)
            | Command::Index(a)
            | Command::Compare(a)
            | Command::Heat(a)
            | Command::Sobolev(a)
            | Command::Bounds(a)
            | Command::Report(a) => a,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Base configuration as a JSON document; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in surface: flat_disk, critical_catenoid or flat_annulus.
    #[arg(long, conflicts_with = "mesh")]
    builtin: Option<String>,
    /// Mesh file to load instead of a built-in surface.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Mesh file format.
    #[arg(long, value_parser = ["off", "obj"])]
    format: Option<String>,
    /// Built-in surface resolution.
    #[arg(long)]
    resolution: Option<u32>,
    /// Uniform refinement levels applied after construction.
    #[arg(long)]
    refine: Option<u32>,
    /// Ambient space, e.g. unit_ball_3, euclidean_3 or space_form,kappa=-1.
    #[arg(long)]
    ambient: Option<String>,
    /// Second-variation form for spectral subcommands.
    #[arg(long, value_parser = ["area", "energy", "tangential"])]
    form: Option<String>,
    /// Number of eigenvalues to compute.
    #[arg(long)]
    k: Option<usize>,
    /// Threshold below which |eigenvalue| counts as zero.
    #[arg(long = "tol-zero")]
    tol_zero: Option<f64>,
    /// Heat-trace grid as lo,hi,count.
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    /// Sobolev constant of the closed-form bound.
    #[arg(long)]
    c1: Option<f64>,
    /// Volume-growth constant of the closed-form bound.
    #[arg(long)]
    c2: Option<f64>,
    /// Empirical constant of the composite topological bound.
    #[arg(long)]
    c: Option<f64>,
    /// Seed for the random test fields.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON artifact to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON artifact to standard output instead of the summary.
    #[arg(long)]
    json: bool,
}

fn parse_t_grid(s: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "t-grid must be lo,hi,count; got {s:?}"
        )));
    }
    let lo = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("bad t-grid lower bound {:?}", parts[0])))?;
    let hi = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("bad t-grid upper bound {:?}", parts[1])))?;
    let count = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("bad t-grid count {:?}", parts[2])))?;
    Ok((lo, hi, count))
}

fn build_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)?
    } else {
        RunConfig::default()
    };
    if args.builtin.is_some() {
        cfg.builtin = args.builtin.clone();
        cfg.mesh_path = None;
    }
    if let Some(mesh) = &args.mesh {
        cfg.mesh_path = Some(mesh.clone());
        cfg.builtin = None;
    }
    if args.format.is_some() {
        cfg.mesh_format = args.format.clone();
    }
    if let Some(r) = args.resolution {
        cfg.resolution = r;
    }
    if let Some(r) = args.refine {
        cfg.refine = r;
    }
    if let Some(a) = &args.ambient {
        cfg.ambient = a.clone();
    }
    if let Some(f) = &args.form {
        cfg.form = FormChoice::parse(f)?;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if args.tol_zero.is_some() {
        cfg.tol_zero = args.tol_zero;
    }
    if let Some(tg) = &args.t_grid {
        cfg.t_grid = parse_t_grid(tg)?;
    }
    if let Some(c1) = args.c1 {
        cfg.c1 = c1;
    }
    if let Some(c2) = args.c2 {
        cfg.c2 = c2;
    }
    if let Some(c) = args.c {
        cfg.c_empirical = c;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.capture_threads();
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let args = cli.command.args();
    let config = build_config(args)?;
    let outcome = run(cli.command.name(), &config)?;
    let rendered = serde_json::to_string_pretty(&outcome.artifact)?;
    if let Some(out) = &args.out {
        std::fs::write(out, format!("{rendered}\n"))?;
    }
    if args.json {
        println!("{rendered}");
    } else {
        print!("{}", outcome.summary);
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
