use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dupin::certify::{self, BaseKind, Settings};
use dupin::morse::TautOptions;
use dupin::report::RunReport;
use dupin::Error;

/// Construct compact proper Dupin hypersurfaces and certify their curvature
/// data numerically.
#[derive(Parser)]
#[command(name = "dupin", version)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "DUPIN_SEED", default_value_t = 7)]
    seed: u64,
    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Override the default number of samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    Cyclide,
    Cartan,
}

impl From<Base> for BaseKind {
    fn from(b: Base) -> Self {
        match b {
            Base::Cyclide => BaseKind::Cyclide,
            Base::Cartan => BaseKind::Cartan,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build and verify a Clifford system on R^l.
    Clifford {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        l: usize,
    },
    /// Spectra of the Clifford-Stiefel manifold and its tubes.
    Otfkm {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        l: usize,
        /// Random normals per sample.
        #[arg(long, default_value_t = 5)]
        normals: usize,
        /// Also check the tube of this radius.
        #[arg(long)]
        tube: Option<f64>,
    },
    /// Lie curvature of the deformation with the given alpha^2.
    Pt {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        l: usize,
        #[arg(long)]
        alpha2: f64,
        /// Random normals in the Lie curvature scan.
        #[arg(long, default_value_t = 100)]
        normals: usize,
    },
    /// Curvature doubling under the Hopf lift.
    Mo {
        #[arg(long, value_enum, default_value = "cyclide")]
        base: Base,
        /// Cyclide radius, or tube radius for the Cartan base.
        #[arg(long)]
        r: Option<f64>,
        /// Dilation factor of the conformal warp (1 = none).
        #[arg(long, default_value_t = 1.0)]
        warp: f64,
    },
    /// Critical-point doubling of height functions under the Hopf lift.
    Taut {
        #[arg(long, value_enum, default_value = "cyclide")]
        base: Base,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        warp: f64,
        #[arg(long, default_value_t = 20)]
        dirs: usize,
        /// Starts per search on the lift; the base uses a fifth as many.
        #[arg(long, default_value_t = dupin::morse::LIFT_STARTS)]
        starts: usize,
    },
    /// Cross-ratio invariance under random Lie sphere transformations.
    LieInvariance {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Every suite with standard parameters.
    All,
}

fn default_radius(base: Base, r: Option<f64>) -> f64 {
    r.unwrap_or(match base {
        Base::Cyclide => 0.6,
        Base::Cartan => std::f64::consts::PI / 6.0,
    })
}

fn run(cli: &Cli) -> dupin::Result<RunReport> {
    let s = Settings {
        seed: cli.seed,
        tol_scale: cli.tol_scale,
        samples: cli.samples,
    };
    match cli.command {
        Command::Clifford { m, l } => certify::clifford_suite(m, l, &s),
        Command::Otfkm { m, l, normals, tube } => certify::otfkm_suite(m, l, normals, tube, &s),
        Command::Pt { m, l, alpha2, normals } => certify::pt_suite(m, l, alpha2, normals, &s),
        Command::Mo { base, r, warp } => certify::mo_suite(base.into(), default_radius(base, r), warp, &s),
        Command::Taut { base, r, warp, dirs, starts } => {
            let opts = TautOptions {
                base_starts: (starts / 5).max(1),
                lift_starts: starts,
                ..TautOptions::default()
            };
            certify::taut_suite(base.into(), default_radius(base, r), warp, dirs, opts, &s)
        }
        Command::LieInvariance { trials } => Ok(certify::lie_invariance_suite(trials, &s)),
        Command::All => Ok(certify::all_suite(&s)),
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_) | Error::Inadmissible(_) | Error::PoleProximity { .. } | Error::ChartDomain { .. }
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if is_usage_error(&e) { 2 } else { 1 });
        }
    };
    let text = report.to_json();
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{text}"),
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        for c in report.failures() {
            eprintln!(
                "FAIL {}: measured {} expected {} tol {} ({}){}",
                c.name,
                c.measured,
                c.expected,
                c.tol,
                c.provenance,
                c.note.as_deref().map(|n| format!(" {n}")).unwrap_or_default()
            );
        }
        ExitCode::from(1)
    }
}
