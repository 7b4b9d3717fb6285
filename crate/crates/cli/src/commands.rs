//! Implementations of the four subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use hydrocar_core::inference::{fit_with, FitOptions};
use hydrocar_core::model::{Dataset, ModelSpec};
use hydrocar_core::network::NodeId;
use hydrocar_core::precision::{
    build_border_precision, build_distance_precision, Adjacency, Weighting,
};
use hydrocar_core::selection::{run_ladder, ModelLadder};
use hydrocar_core::synth::{
    half_coverage_origin, simulate_dataset, simulate_network, Branching, ContaminationEvent,
    LengthModel, SimulationConfig,
};
use hydrocar_core::WaterNetwork;

use crate::formats;
use crate::CliError;

fn validation(err: impl std::fmt::Display) -> CliError {
    CliError::validation(err)
}

/// Undirected neighbor lists of a network, for the border-count weighting.
fn network_adjacency(net: &WaterNetwork) -> Adjacency {
    let labels: Vec<String> = net.node_ids().iter().map(|n| n.as_str().to_string()).collect();
    let pairs: Vec<(usize, usize)> = net
        .segment_indices()
        .iter()
        .map(|&(f, t, _)| (f.min(t), f.max(t)))
        .collect();
    Adjacency::from_pairs(labels, &pairs)
}

pub struct BuildQmatrixArgs {
    pub nodes: PathBuf,
    pub segments: PathBuf,
    pub weighting: Weighting,
    pub simplify: bool,
    pub anchors: Vec<String>,
    pub output: PathBuf,
}

pub fn build_qmatrix(args: &BuildQmatrixArgs) -> Result<(), CliError> {
    let mut net = formats::read_network(&args.nodes, &args.segments).map_err(validation)?;
    for anchor in &args.anchors {
        net.anchor(&NodeId::from(anchor.as_str())).map_err(validation)?;
    }
    let net = if args.simplify { net.simplify() } else { net };
    let q = match args.weighting {
        Weighting::InverseDistance => build_distance_precision(&net).map_err(validation)?,
        Weighting::BorderCount => {
            build_border_precision(&network_adjacency(&net)).map_err(validation)?
        }
    };
    formats::write_precision_coo(&args.output, &q).map_err(validation)?;
    println!(
        "wrote {} ({} units, {} stored entries) and {}",
        args.output.display(),
        q.dim(),
        q.nnz(),
        formats::sidecar_path(&args.output).display()
    );
    Ok(())
}

pub struct FitArgs {
    pub nodes: PathBuf,
    pub segments: PathBuf,
    pub participants: PathBuf,
    pub spec: String,
    pub outcome: String,
    pub cell_size: f64,
    pub dic_draws: usize,
    pub seed: u64,
    pub output: PathBuf,
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let net = formats::read_network(&args.nodes, &args.segments).map_err(validation)?;
    let participants = formats::read_participants(&args.participants).map_err(validation)?;
    let ds = Dataset::new(participants, net, args.outcome.clone()).map_err(validation)?;
    let spec = ModelSpec::parse(&args.spec).map_err(validation)?;
    let options = FitOptions {
        cell_size: args.cell_size,
        dic_draws: args.dic_draws,
    };
    let result = fit_with(&ds, &spec, args.seed, &options)?;
    let doc = formats::fit_document(&result, ds.outcome_name());
    fs::write(&args.output, doc).map_err(validation)?;
    println!("dic: {:.6}", result.dic.dic);
    println!("p_eff: {:.6}", result.dic.p_eff);
    Ok(())
}

pub struct CompareArgs {
    pub nodes: PathBuf,
    pub segments: PathBuf,
    pub participants: PathBuf,
    pub ladder: String,
    pub outcome: String,
    pub cell_size: f64,
    pub dic_draws: usize,
    pub seed: u64,
    pub output_prefix: PathBuf,
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let net = formats::read_network(&args.nodes, &args.segments).map_err(validation)?;
    let participants = formats::read_participants(&args.participants).map_err(validation)?;
    let ds = Dataset::new(participants, net, args.outcome.clone()).map_err(validation)?;

    let ladder = if args.ladder == "default" {
        ModelLadder::default_six_rows()
    } else {
        let specs = args
            .ladder
            .split(';')
            .map(|tokens| ModelSpec::parse(tokens).map_err(validation))
            .collect::<Result<Vec<_>, _>>()?;
        ModelLadder::new(specs).map_err(validation)?
    };

    let options = FitOptions {
        cell_size: args.cell_size,
        dic_draws: args.dic_draws,
    };
    let table = run_ladder(&ds, &ladder, args.seed, &options).map_err(validation)?;
    if table.n_fitted() == 0 {
        return Err(CliError::numerical("every ladder row failed to fit"));
    }

    let text_path = args.output_prefix.with_extension("txt");
    let rows_path = args.output_prefix.with_extension("tsv");
    fs::write(&text_path, formats::comparison_text(&table)).map_err(validation)?;
    fs::write(&rows_path, formats::comparison_rows(&table)).map_err(validation)?;
    print!("{}", formats::comparison_text(&table));
    Ok(())
}

pub struct SimulateArgs {
    pub nodes: usize,
    pub participants: usize,
    pub effect: f64,
    pub decay: f64,
    pub tau_house: f64,
    pub tau_spatial: f64,
    pub tau_graph: f64,
    pub beta0: f64,
    pub beta_age: f64,
    pub beta_gender: f64,
    pub length_min: f64,
    pub length_max: f64,
    pub cell_size: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.nodes < 1 || args.participants < 1 {
        return Err(CliError::validation("need at least one node and one participant"));
    }
    if !(args.length_min > 0.0 && args.length_max > args.length_min) {
        return Err(CliError::validation("segment length range must be positive and increasing"));
    }
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| validation(format!("creating {}: {e}", args.out_dir.display())))?;

    let net = simulate_network(
        args.nodes,
        Branching::Uniform,
        LengthModel::Uniform {
            min: args.length_min,
            max: args.length_max,
        },
        args.seed,
    );
    let mut config = SimulationConfig::new(args.participants, args.seed);
    config.beta0 = args.beta0;
    config.beta_age = args.beta_age;
    config.beta_gender = args.beta_gender;
    config.tau_house = args.tau_house;
    config.tau_spatial = args.tau_spatial;
    config.tau_graph = args.tau_graph;
    config.cell_size = args.cell_size;
    if args.effect != 0.0 {
        // an event at the source would shift every node equally and be
        // absorbed by the intercept; pick the half-coverage node instead
        let origin = half_coverage_origin(&net)
            .ok_or_else(|| CliError::validation("network has no usable event origin"))?;
        config.events.push(ContaminationEvent {
            origin,
            effect_size: args.effect,
            decay: args.decay,
        });
    }
    let (ds, truth) = simulate_dataset(&net, &config).map_err(validation)?;

    let dir: &Path = &args.out_dir;
    formats::write_network(&dir.join("nodes.csv"), &dir.join("segments.csv"), &net)
        .map_err(validation)?;
    formats::write_participants(&dir.join("participants.csv"), &ds).map_err(validation)?;
    fs::write(dir.join("truth.txt"), formats::truth_document(&net, &config, &truth))
        .map_err(validation)?;
    println!(
        "wrote nodes.csv ({} rows), segments.csv ({} rows), participants.csv ({} rows), truth.txt to {}",
        net.node_count(),
        net.segment_count(),
        ds.len(),
        dir.display()
    );
    Ok(())
}
