use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use steklov_patterns_cli::config::{
    CertificateMode, Command, DomainConfig, Family, InitialField, RunConfig, SweepStart,
};
use steklov_patterns_cli::{resolve_output_dir, run};

const PRECEDENCE: &str = "Settings are resolved in this order, later wins: built-in defaults, \
the JSON file given with --config, command-line flags. The output directory is taken from --out, \
else from the STEKLOV_PATTERNS_OUT environment variable, else from the config's output_dir.";

#[derive(Parser, Debug)]
#[command(name = "steklov-patterns", version, about = "Steklov spectra and boundary-reaction patterns on convex domains")]
#[command(after_help = PRECEDENCE)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the environment and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for random initial fields.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Target mesh size.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Domain: stadium:R,D | disk:R | ellipse:A,B | rounded-rectangle:W,H,C | square:S | polygon:PATH
    #[arg(long, global = true, value_parser = DomainConfig::parse)]
    domain: Option<DomainConfig>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Mesh the domain and write .node/.ele, VTK and quality figures.
    Mesh,
    /// Lowest Steklov eigenvalues.
    Steklov {
        #[arg(long)]
        k: Option<usize>,
    },
    /// mu1 across a diameter sweep at several resolutions.
    TraceProbe {
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        diameters: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<f64>>,
    },
    /// Closed-form recipe (bound) or computed membership search.
    Certificate {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Gradient flow from an initial field.
    Evolve(FlowArgs),
    /// Flow plus Newton polish to a stationary solution.
    Stationary(FlowArgs),
    /// Stationary solution plus linear stability classification.
    Stability(FlowArgs),
    /// (D, delta, lambda) grid of certificates and evolved classifications.
    Sweep {
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        diameters: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        delta_fractions: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        /// Random starts per cell instead of w0.
        #[arg(long)]
        random_starts: Option<u64>,
    },
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// w0:DELTA | random | constant:VALUE
    #[arg(long, value_parser = InitialField::parse)]
    initial: Option<InitialField>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Stadium,
    Disk,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Stadium => Family::Stadium,
            FamilyArg::Disk => Family::Disk,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Bound,
    Computed,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_flow(cfg: &mut RunConfig, a: FlowArgs) {
    set(&mut cfg.lambda, a.lambda);
    if a.dt.is_some() {
        cfg.dt = a.dt;
    }
    set(&mut cfg.tol, a.tol);
    set(&mut cfg.newton_tol, a.newton_tol);
    set(&mut cfg.max_steps, a.max_steps);
    set(&mut cfg.initial, a.initial);
    if a.snapshot_stride.is_some() {
        cfg.snapshot_stride = a.snapshot_stride;
    }
}

fn build_config(cli: Cli) -> Result<RunConfig, steklov_patterns_cli::CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.output_dir = resolve_output_dir(cli.out, cfg.output_dir.clone());
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.h, cli.h);
    set(&mut cfg.domain, cli.domain);
    let command = match cli.command {
        Sub::Mesh => Command::Mesh,
        Sub::Steklov { k } => {
            set(&mut cfg.k, k);
            Command::Steklov
        }
        Sub::TraceProbe { family, radius, diameters, resolutions } => {
            let t = &mut cfg.trace_probe;
            set(&mut t.family, family.map(Family::from));
            set(&mut t.radius, radius);
            set(&mut t.diameters, diameters);
            set(&mut t.resolutions, resolutions);
            Command::TraceProbe
        }
        Sub::Certificate { mode, r, d, c, deltas, lambdas } => {
            let cert = &mut cfg.certificate;
            set(
                &mut cert.mode,
                mode.map(|m| match m {
                    ModeArg::Bound => CertificateMode::Bound,
                    ModeArg::Computed => CertificateMode::Computed,
                }),
            );
            set(&mut cert.r, r);
            set(&mut cert.d, d);
            if c.is_some() {
                cert.c = c;
            }
            set(&mut cert.deltas, deltas);
            set(&mut cert.lambdas, lambdas);
            Command::Certificate
        }
        Sub::Evolve(a) => {
            apply_flow(&mut cfg, a);
            Command::Evolve
        }
        Sub::Stationary(a) => {
            apply_flow(&mut cfg, a);
            Command::Stationary
        }
        Sub::Stability(a) => {
            apply_flow(&mut cfg, a);
            Command::Stability
        }
        Sub::Sweep { family, radius, diameters, delta_fractions, lambdas, random_starts } => {
            let s = &mut cfg.sweep;
            set(&mut s.family, family.map(Family::from));
            set(&mut s.radius, radius);
            set(&mut s.diameters, diameters);
            set(&mut s.delta_fractions, delta_fractions);
            set(&mut s.lambdas, lambdas);
            set(&mut s.start, random_starts.map(|count| SweepStart::Random { count }));
            Command::Sweep
        }
    };
    cfg.command = Some(command);
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = build_config(cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            println!("{}", o.summary.trim_end());
            println!("wrote {} files to {}", o.files.len() + 1, o.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("steklov-patterns: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
