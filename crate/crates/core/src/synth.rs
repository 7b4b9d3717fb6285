//! Synthetic networks and outcome data with known ground truth.
//!
//! Generation is directional: a contamination event raises the log-odds of
//! every node downstream of its origin, decaying with path distance. The
//! fitted models use the symmetrized precision, so recovery experiments
//! quantify exactly how much of the directed signal the undirected model
//! captures.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::gmrf::{factorize_intrinsic, sample, GmrfError, LinearConstraint};
use crate::model::{build_spatial_lattice, Dataset, Gender, ModelError, Participant};
use crate::network::{NetworkError, NodeId, WaterNetwork};
use crate::precision::{assemble_block_precision, build_border_precision, build_distance_precision, Block, PrecisionError};
use crate::rng::{poisson, standard_normal, stream};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error(transparent)]
    Gmrf(#[from] GmrfError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("spatial effect requested but network nodes carry no coordinates")]
    MissingCoordinates,
    #[error("simulation needs at least one participant")]
    NoParticipants,
    #[error("contamination origin `{0}` is not in the network")]
    UnknownOrigin(String),
}

/// How parents are chosen when growing a random out-tree.
#[derive(Clone, Copy, Debug)]
pub enum Branching {
    /// Any existing node, uniformly.
    Uniform,
    /// Uniform among nodes that still have fewer than `max` children.
    MaxChildren(usize),
}

/// Segment length model, meters.
#[derive(Clone, Copy, Debug)]
pub enum LengthModel {
    Constant(f64),
    Uniform { min: f64, max: f64 },
}

impl LengthModel {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            LengthModel::Constant(l) => *l,
            LengthModel::Uniform { min, max } => rng.gen_range(*min..*max),
        }
    }
}

/// One pipe-contamination episode on the log-odds scale.
#[derive(Clone, Debug)]
pub struct ContaminationEvent {
    pub origin: NodeId,
    pub effect_size: f64,
    /// Per-meter exponential decay of the effect along the flow path.
    pub decay: f64,
}

/// Full description of one simulated cohort. A precision of 0 disables the
/// corresponding latent effect.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub n_participants: usize,
    pub beta0: f64,
    pub beta_age: f64,
    pub beta_gender: f64,
    pub tau_house: f64,
    pub tau_spatial: f64,
    pub tau_graph: f64,
    pub events: Vec<ContaminationEvent>,
    /// Lattice cell size used when drawing the spatial effect.
    pub cell_size: f64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(n_participants: usize, seed: u64) -> Self {
        SimulationConfig {
            n_participants,
            beta0: 0.0,
            beta_age: 0.0,
            beta_gender: 0.0,
            tau_house: 0.0,
            tau_spatial: 0.0,
            tau_graph: 0.0,
            events: Vec::new(),
            cell_size: crate::model::DEFAULT_CELL_SIZE,
            seed,
        }
    }
}

/// What actually generated the outcomes, for recovery checks.
#[derive(Clone, Debug)]
pub struct SimulationTruth {
    /// Linear predictor per participant.
    pub linear_predictor: Vec<f64>,
    /// CAR draw per network node (zeros when the graph effect is disabled).
    pub graph_effects: Vec<f64>,
    /// Contamination added to each node's log-odds.
    pub contamination: Vec<f64>,
    /// Spatial draw per occupied cell with its labels.
    pub spatial_effects: Vec<f64>,
    pub spatial_labels: Vec<String>,
    /// Household draw per household with its labels.
    pub house_effects: Vec<f64>,
    pub house_labels: Vec<String>,
}

/// Grow a random out-tree: node 0 is the single source, every other node
/// attaches below an existing node, and all segments point away from the
/// source. Nodes are embedded in the plane by a random-direction walk so the
/// network also supports spatial effects.
pub fn simulate_network(
    n_nodes: usize,
    branching: Branching,
    lengths: LengthModel,
    seed: u64,
) -> WaterNetwork {
    assert!(n_nodes >= 1, "need at least one node");
    let mut rng = stream(seed, "network", 0);
    let width = {
        let mut w = 1;
        let mut m = n_nodes.saturating_sub(1);
        while m >= 10 {
            w += 1;
            m /= 10;
        }
        w
    };
    let name = |i: usize| alloc::format!("n{i:0width$}");

    let mut net = WaterNetwork::new();
    let mut positions: Vec<(f64, f64)> = Vec::with_capacity(n_nodes);
    let mut children = alloc::vec![0usize; n_nodes];
    net.add_node(name(0), Some((0.0, 0.0))).expect("fresh id");
    positions.push((0.0, 0.0));

    for i in 1..n_nodes {
        let parent = match branching {
            Branching::Uniform => rng.gen_range(0..i),
            Branching::MaxChildren(max) => {
                let eligible: Vec<usize> = (0..i).filter(|&p| children[p] < max).collect();
                // a tree always has an eligible parent for max >= 1
                eligible[rng.gen_range(0..eligible.len())]
            }
        };
        let length = lengths.draw(&mut rng);
        let angle = rng.gen_range(0.0..2.0 * core::f64::consts::PI);
        let (px, py) = positions[parent];
        let pos = (
            px + length * libm::cos(angle),
            py + length * libm::sin(angle),
        );
        net.add_node(name(i), Some(pos)).expect("fresh id");
        positions.push(pos);
        net.add_segment(&name(parent), &name(i), length)
            .expect("endpoints exist");
        children[parent] += 1;
    }
    net
}

/// Draw a cohort over `net`: households of mean size 2.5 (Poisson(1.5)+1),
/// ages uniform on 20-80, genders balanced, each participant at a uniform
/// random node with residence at the node's coordinates. Latent effects are
/// drawn from their priors at the configured precisions, contamination
/// events add `effect·exp(-decay·pathdist)` downstream, and outcomes are
/// Bernoulli(logistic(η)).
pub fn simulate_dataset(
    net: &WaterNetwork,
    config: &SimulationConfig,
) -> Result<(Dataset, SimulationTruth), SynthError> {
    if config.n_participants == 0 {
        return Err(SynthError::NoParticipants);
    }
    let n = config.n_participants;
    let seed = config.seed;

    // households
    let mut house_of = Vec::with_capacity(n);
    let mut house_labels: Vec<String> = Vec::new();
    {
        let mut rng = stream(seed, "households", 0);
        let mut assigned = 0usize;
        while assigned < n {
            let size = (poisson(&mut rng, 1.5) + 1) as usize;
            let house = house_labels.len();
            house_labels.push(alloc::format!("h{house:05}"));
            for _ in 0..size.min(n - assigned) {
                house_of.push(house);
                assigned += 1;
            }
        }
    }

    // demographics
    let ages: Vec<f64> = {
        let mut rng = stream(seed, "ages", 0);
        (0..n).map(|_| rng.gen_range(20.0..80.0)).collect()
    };
    let genders: Vec<Gender> = {
        let mut rng = stream(seed, "genders", 0);
        (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Gender::Male
                } else {
                    Gender::Female
                }
            })
            .collect()
    };

    // node assignment
    let node_of: Vec<usize> = {
        let mut rng = stream(seed, "nodes", 0);
        (0..n).map(|_| rng.gen_range(0..net.node_count())).collect()
    };

    // standardized ages, same convention as the model design matrix
    let age_mean = ages.iter().sum::<f64>() / n as f64;
    let age_var = ages.iter().map(|a| (a - age_mean) * (a - age_mean)).sum::<f64>() / n as f64;
    let age_sd = if age_var > 1e-24 { libm::sqrt(age_var) } else { 1.0 };

    // household effect
    let house_effects: Vec<f64> = if config.tau_house > 0.0 {
        let sd = 1.0 / libm::sqrt(config.tau_house);
        let mut rng = stream(seed, "house-effect", 0);
        (0..house_labels.len())
            .map(|_| sd * standard_normal(&mut rng))
            .collect()
    } else {
        alloc::vec![0.0; house_labels.len()]
    };

    // graph effect: intrinsic CAR over the distance-weighted precision
    let graph_effects: Vec<f64> = if config.tau_graph > 0.0 {
        let base = build_distance_precision(net)?;
        let scaled = assemble_block_precision(&[Block::Structured(&base)], &[config.tau_graph])?;
        let factor = factorize_intrinsic(&scaled)?;
        let groups = scaled.components();
        let constraint = LinearConstraint::sum_to_zero_groups(scaled.dim(), &groups)?;
        let mut rng = stream(seed, "graph-effect", 0);
        sample(&factor, Some(&constraint), &mut rng)?
    } else {
        alloc::vec![0.0; net.node_count()]
    };

    // contamination along flow direction
    let mut contamination = alloc::vec![0.0; net.node_count()];
    for event in &config.events {
        if net.index_of(&event.origin).is_none() {
            return Err(SynthError::UnknownOrigin(event.origin.as_str().to_string()));
        }
        let dist = net.downstream_distances(&event.origin)?;
        for (node, d) in dist.iter().enumerate() {
            if let Some(d) = d {
                contamination[node] += event.effect_size * libm::exp(-event.decay * d);
            }
        }
    }

    // locations come from node coordinates
    let locations: Vec<Option<(f64, f64)>> = node_of
        .iter()
        .map(|&v| net.coords_at(v))
        .collect();

    // spatial effect over the occupied lattice of those locations; needs a
    // provisional dataset only for the lattice geometry
    let (spatial_effects, spatial_labels, cell_of) = if config.tau_spatial > 0.0 {
        if locations.iter().any(Option::is_none) {
            return Err(SynthError::MissingCoordinates);
        }
        let provisional: Vec<Participant> = (0..n)
            .map(|i| Participant {
                id: alloc::format!("p{i:06}"),
                outcome: 0,
                age: ages[i],
                gender: genders[i],
                house_id: house_labels[house_of[i]].clone(),
                node_id: net.node_ids()[node_of[i]].clone(),
                location: locations[i],
            })
            .collect();
        let provisional = Dataset::new(provisional, net.clone(), "synthetic")?;
        let lattice = build_spatial_lattice(&provisional, config.cell_size)?;
        let base = build_border_precision(&lattice.adjacency)?;
        let scaled = assemble_block_precision(&[Block::Structured(&base)], &[config.tau_spatial])?;
        let factor = factorize_intrinsic(&scaled)?;
        let groups = scaled.components();
        let constraint = LinearConstraint::sum_to_zero_groups(scaled.dim(), &groups)?;
        let mut rng = stream(seed, "spatial-effect", 0);
        let draw = sample(&factor, Some(&constraint), &mut rng)?;
        (draw, lattice.cell_labels.clone(), Some(lattice.cell_of))
    } else {
        (Vec::new(), Vec::new(), None)
    };

    // linear predictor and outcomes
    let mut linear_predictor = Vec::with_capacity(n);
    for i in 0..n {
        let mut eta = config.beta0
            + config.beta_age * (ages[i] - age_mean) / age_sd
            + config.beta_gender * genders[i].as_f64()
            + house_effects[house_of[i]]
            + graph_effects[node_of[i]]
            + contamination[node_of[i]];
        if let Some(cells) = &cell_of {
            eta += spatial_effects[cells[i]];
        }
        linear_predictor.push(eta);
    }
    let outcomes: Vec<u8> = {
        let mut rng = stream(seed, "outcomes", 0);
        linear_predictor
            .iter()
            .map(|&eta| {
                let p = 1.0 / (1.0 + libm::exp(-eta));
                u8::from(rng.gen::<f64>() < p)
            })
            .collect()
    };

    let participants: Vec<Participant> = (0..n)
        .map(|i| Participant {
            id: alloc::format!("p{i:06}"),
            outcome: outcomes[i],
            age: ages[i],
            gender: genders[i],
            house_id: house_labels[house_of[i]].clone(),
            node_id: net.node_ids()[node_of[i]].clone(),
            location: locations[i],
        })
        .collect();
    let dataset = Dataset::new(participants, net.clone(), "synthetic")?;

    Ok((
        dataset,
        SimulationTruth {
            linear_predictor,
            graph_effects,
            contamination,
            spatial_effects,
            spatial_labels,
            house_effects,
            house_labels,
        },
    ))
}

/// The node whose downstream set is closest to covering half the network:
/// a deterministic default origin that makes a contamination event
/// informative (an event at the source shifts every node equally and is
/// absorbed by the intercept).
pub fn half_coverage_origin(net: &WaterNetwork) -> Option<NodeId> {
    let half = net.node_count() as f64 / 2.0;
    let mut best: Option<(f64, NodeId)> = None;
    for id in net.node_ids() {
        let size = net.downstream(id).ok()?.len() as f64;
        let score = (size - half).abs();
        match &best {
            Some((s, _)) if *s <= score => {}
            _ => best = Some((score, id.clone())),
        }
    }
    best.map(|(_, id)| id)
}
