//! Water-network CAR modeling toolkit: build precision matrices from pipe
//! schematics, fit hierarchical binary-outcome models, compare them by DIC,
//! and generate synthetic cohorts with known ground truth.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hydrocar::commands::{self, BuildQmatrixArgs, CompareArgs, FitArgs, SimulateArgs};
use hydrocar_core::precision::Weighting;

const SEED_ENV: &str = "HYDROCAR_SEED";

#[derive(Parser)]
#[command(
    name = "hydrocar",
    about = "CAR precision matrices and DIC model comparison for water networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightingArg {
    Border,
    Distance,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Border => Weighting::BorderCount,
            WeightingArg::Distance => Weighting::InverseDistance,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a sparse CAR precision matrix from network CSVs and write it as
    /// a coordinate list plus an index-map sidecar.
    BuildQmatrix {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        segments: PathBuf,
        #[arg(long, value_enum)]
        weighting: WeightingArg,
        /// Contract pass-through junctions before building the matrix.
        #[arg(long)]
        simplify: bool,
        /// Node ids that must survive simplification (repeatable).
        #[arg(long = "anchor")]
        anchors: Vec<String>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit one model specification and write a fit document.
    Fit {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        participants: PathBuf,
        /// Comma-separated terms from {age, gender, house, spatial, graph};
        /// the intercept is implicit.
        #[arg(long)]
        spec: String,
        #[arg(long, default_value = "outcome")]
        outcome: String,
        /// Spatial lattice cell size in meters.
        #[arg(long, default_value_t = 1000.0)]
        cell_size: f64,
        #[arg(long, default_value_t = 1000)]
        dic_draws: usize,
        /// Defaults to $HYDROCAR_SEED, then 1.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit a ladder of specifications and write the comparison table
    /// (`<prefix>.txt` aligned text, `<prefix>.tsv` machine-readable rows).
    Compare {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        participants: PathBuf,
        /// `default` for the six-row stepwise ladder, or semicolon-separated
        /// spec token lists, e.g. "age,gender;age,gender,graph".
        #[arg(long, default_value = "default")]
        ladder: String,
        #[arg(long, default_value = "outcome")]
        outcome: String,
        #[arg(long, default_value_t = 1000.0)]
        cell_size: f64,
        #[arg(long, default_value_t = 1000)]
        dic_draws: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_prefix: PathBuf,
    },
    /// Generate a synthetic network and cohort with a ground-truth file,
    /// in the same CSV schemas the other commands consume.
    Simulate {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        participants: usize,
        /// Log-odds contamination effect at the half-coverage node (0 = none).
        #[arg(long, default_value_t = 0.0)]
        effect: f64,
        /// Per-meter exponential decay of the contamination effect.
        #[arg(long, default_value_t = 0.0)]
        decay: f64,
        #[arg(long, default_value_t = 0.0)]
        tau_house: f64,
        #[arg(long, default_value_t = 0.0)]
        tau_spatial: f64,
        #[arg(long, default_value_t = 0.0)]
        tau_graph: f64,
        #[arg(long, default_value_t = 0.0)]
        beta0: f64,
        #[arg(long, default_value_t = 0.0)]
        beta_age: f64,
        #[arg(long, default_value_t = 0.0)]
        beta_gender: f64,
        #[arg(long, default_value_t = 50.0)]
        length_min: f64,
        #[arg(long, default_value_t = 150.0)]
        length_max: f64,
        /// Lattice cell size (meters) for drawing the spatial effect.
        #[arg(long, default_value_t = 1000.0)]
        cell_size: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// `--seed` wins; otherwise $HYDROCAR_SEED; otherwise 1.
fn resolve_seed(flag: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got `{text}`")),
        Err(_) => Ok(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildQmatrix {
            nodes,
            segments,
            weighting,
            simplify,
            anchors,
            output,
        } => commands::build_qmatrix(&BuildQmatrixArgs {
            nodes,
            segments,
            weighting: weighting.into(),
            simplify,
            anchors,
            output,
        }),
        Command::Fit {
            nodes,
            segments,
            participants,
            spec,
            outcome,
            cell_size,
            dic_draws,
            seed,
            output,
        } => resolve_seed(seed)
            .map_err(hydrocar::CliError::validation)
            .and_then(|seed| {
                commands::fit(&FitArgs {
                    nodes,
                    segments,
                    participants,
                    spec,
                    outcome,
                    cell_size,
                    dic_draws,
                    seed,
                    output,
                })
            }),
        Command::Compare {
            nodes,
            segments,
            participants,
            ladder,
            outcome,
            cell_size,
            dic_draws,
            seed,
            output_prefix,
        } => resolve_seed(seed)
            .map_err(hydrocar::CliError::validation)
            .and_then(|seed| {
                commands::compare(&CompareArgs {
                    nodes,
                    segments,
                    participants,
                    ladder,
                    outcome,
                    cell_size,
                    dic_draws,
                    seed,
                    output_prefix,
                })
            }),
        Command::Simulate {
            nodes,
            participants,
            effect,
            decay,
            tau_house,
            tau_spatial,
            tau_graph,
            beta0,
            beta_age,
            beta_gender,
            length_min,
            length_max,
            cell_size,
            seed,
            out_dir,
        } => resolve_seed(seed)
            .map_err(hydrocar::CliError::validation)
            .and_then(|seed| {
                commands::simulate(&SimulateArgs {
                    nodes,
                    participants,
                    effect,
                    decay,
                    tau_house,
                    tau_spatial,
                    tau_graph,
                    beta0,
                    beta_age,
                    beta_gender,
                    length_min,
                    length_max,
                    cell_size,
                    seed,
                    out_dir,
                })
            }),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.kind.code())
        }
    }
}
