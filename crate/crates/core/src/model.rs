//! Data model and likelihood: participants with covariates, model terms,
//! the stacked latent-field layout, the sparse observation matrix, and the
//! Bernoulli-logit likelihood with derivatives.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

use crate::network::{NodeId, WaterNetwork};
use crate::precision::Adjacency;

/// Gaussian prior precision on fixed-effect coefficients.
pub const FIXED_EFFECT_PRIOR_PRECISION: f64 = 1e-3;

/// Default spatial-lattice cell size in meters.
pub const DEFAULT_CELL_SIZE: f64 = 1000.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dataset has no participants")]
    EmptyDataset,
    #[error("participant `{id}` links to unknown node `{node}`")]
    UnknownNodeLink { id: String, node: String },
    #[error("participant `{id}` has invalid outcome {outcome} (must be 0 or 1)")]
    InvalidOutcome { id: String, outcome: f64 },
    #[error("participant `{id}` has invalid age {age}")]
    InvalidAge { id: String, age: f64 },
    #[error("spatial effect requested but participants lack locations: {}", ids.join(", "))]
    MissingLocations { ids: Vec<String> },
    #[error("cell size must be positive, got {0}")]
    NonPositiveCellSize(f64),
    #[error("unknown model term `{token}`; valid terms: age, gender, house, spatial, graph")]
    UnknownTerm { token: String },
    #[error("model term `{0}` appears more than once")]
    DuplicateTerm(String),
    #[error("outcome vector length {y} does not match predictor length {eta}")]
    LengthMismatch { y: usize, eta: usize },
    #[error("outcome value {0} is not 0 or 1")]
    NonBinaryOutcome(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn as_f64(self) -> f64 {
        match self {
            Gender::Female => 0.0,
            Gender::Male => 1.0,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Gender::Female),
            1 => Some(Gender::Male),
            _ => None,
        }
    }
}

/// One survey participant with a binary outcome and a network link.
#[derive(Clone, Debug)]
pub struct Participant {
    pub id: String,
    pub outcome: u8,
    pub age: f64,
    pub gender: Gender,
    pub house_id: String,
    pub node_id: NodeId,
    pub location: Option<(f64, f64)>,
}

/// Participants joined to the network they draw water from.
///
/// Nodes with linked participants are anchored in the stored network so that
/// simplification can never remove an observation's node.
#[derive(Clone, Debug)]
pub struct Dataset {
    participants: Vec<Participant>,
    network: WaterNetwork,
    outcome_name: String,
}

impl Dataset {
    pub fn new(
        participants: Vec<Participant>,
        mut network: WaterNetwork,
        outcome_name: impl Into<String>,
    ) -> Result<Self, ModelError> {
        if participants.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        for p in &participants {
            if p.outcome > 1 {
                return Err(ModelError::InvalidOutcome {
                    id: p.id.clone(),
                    outcome: f64::from(p.outcome),
                });
            }
            if !(p.age >= 0.0) || !p.age.is_finite() {
                return Err(ModelError::InvalidAge {
                    id: p.id.clone(),
                    age: p.age,
                });
            }
            if !network.contains(&p.node_id) {
                return Err(ModelError::UnknownNodeLink {
                    id: p.id.clone(),
                    node: p.node_id.as_str().to_string(),
                });
            }
        }
        for p in &participants {
            network
                .anchor(&p.node_id)
                .expect("links validated above");
        }
        Ok(Dataset {
            participants,
            network,
            outcome_name: outcome_name.into(),
        })
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn network(&self) -> &WaterNetwork {
        &self.network
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.participants
            .iter()
            .map(|p| f64::from(p.outcome))
            .collect()
    }

    /// Complete cases for a ladder that uses residence locations anywhere:
    /// keep only participants with known coordinates.
    pub fn retain_located(&self) -> Result<Dataset, ModelError> {
        let kept: Vec<Participant> = self
            .participants
            .iter()
            .filter(|p| p.location.is_some())
            .cloned()
            .collect();
        if kept.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        Ok(Dataset {
            participants: kept,
            network: self.network.clone(),
            outcome_name: self.outcome_name.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FixedEffect {
    Intercept,
    Age,
    Gender,
}

impl FixedEffect {
    pub fn name(self) -> &'static str {
        match self {
            FixedEffect::Intercept => "intercept",
            FixedEffect::Age => "age",
            FixedEffect::Gender => "gender",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LatentEffect {
    HouseholdIid,
    SpatialLattice,
    WaterGraph,
}

impl LatentEffect {
    pub fn name(self) -> &'static str {
        match self {
            LatentEffect::HouseholdIid => "house",
            LatentEffect::SpatialLattice => "spatial",
            LatentEffect::WaterGraph => "graph",
        }
    }

    /// Display wording used in comparison tables.
    pub fn table_label(self) -> &'static str {
        match self {
            LatentEffect::HouseholdIid => "House ID",
            LatentEffect::SpatialLattice => "Spatial Effect",
            LatentEffect::WaterGraph => "Water Graph",
        }
    }
}

/// Gamma(shape, rate) hyperprior on a latent precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for HyperPrior {
    fn default() -> Self {
        HyperPrior {
            shape: 1.0,
            rate: 5e-5,
        }
    }
}

impl HyperPrior {
    /// log p(θ) for θ = log τ, including the change-of-variables term.
    pub fn log_density_log_scale(&self, theta: f64) -> f64 {
        let tau = libm::exp(theta);
        self.shape * libm::log(self.rate) - libm::lgamma(self.shape) + self.shape * theta
            - self.rate * tau
    }
}

/// One fitted model: ordered fixed effects (intercept always included) plus
/// at most one of each latent effect, each with its hyperprior.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    fixed: Vec<FixedEffect>,
    latent: Vec<(LatentEffect, HyperPrior)>,
}

impl ModelSpec {
    pub fn new(fixed: Vec<FixedEffect>, latent: Vec<LatentEffect>) -> Result<Self, ModelError> {
        let mut all_fixed = alloc::vec![FixedEffect::Intercept];
        for f in fixed {
            if f == FixedEffect::Intercept {
                continue;
            }
            if all_fixed.contains(&f) {
                return Err(ModelError::DuplicateTerm(f.name().to_string()));
            }
            all_fixed.push(f);
        }
        let mut seen = BTreeSet::new();
        for (l, _) in latent.iter().map(|l| (l, ())) {
            if !seen.insert(*l) {
                return Err(ModelError::DuplicateTerm(l.name().to_string()));
            }
        }
        Ok(ModelSpec {
            fixed: all_fixed,
            latent: latent
                .into_iter()
                .map(|l| (l, HyperPrior::default()))
                .collect(),
        })
    }

    /// Intercept-only model.
    pub fn intercept_only() -> Self {
        ModelSpec::new(Vec::new(), Vec::new()).expect("empty spec is valid")
    }

    /// Parse comma-separated terms from `{age, gender, house, spatial, graph}`;
    /// the intercept is implicit. An empty string gives the intercept-only
    /// model.
    pub fn parse(tokens: &str) -> Result<Self, ModelError> {
        let mut fixed = Vec::new();
        let mut latent = Vec::new();
        for raw in tokens.split(',') {
            let t = raw.trim();
            if t.is_empty() {
                continue;
            }
            match t {
                "age" => fixed.push(FixedEffect::Age),
                "gender" => fixed.push(FixedEffect::Gender),
                "intercept" => {}
                "house" => latent.push(LatentEffect::HouseholdIid),
                "spatial" => latent.push(LatentEffect::SpatialLattice),
                "graph" => latent.push(LatentEffect::WaterGraph),
                other => {
                    return Err(ModelError::UnknownTerm {
                        token: other.to_string(),
                    })
                }
            }
        }
        ModelSpec::new(fixed, latent)
    }

    pub fn with_hyperprior(mut self, effect: LatentEffect, hp: HyperPrior) -> Self {
        for (l, p) in self.latent.iter_mut() {
            if *l == effect {
                *p = hp;
            }
        }
        self
    }

    pub fn fixed(&self) -> &[FixedEffect] {
        &self.fixed
    }

    pub fn latent(&self) -> impl Iterator<Item = LatentEffect> + '_ {
        self.latent.iter().map(|(l, _)| *l)
    }

    pub fn latent_with_hyperpriors(&self) -> &[(LatentEffect, HyperPrior)] {
        &self.latent
    }

    pub fn n_latent(&self) -> usize {
        self.latent.len()
    }

    pub fn has_latent(&self, effect: LatentEffect) -> bool {
        self.latent.iter().any(|(l, _)| *l == effect)
    }

    pub fn has_fixed(&self, effect: FixedEffect) -> bool {
        self.fixed.contains(&effect)
    }

    /// Human-readable label in canonical term order, e.g.
    /// "Age, Gender, House ID, Spatial Effect, Water Graph".
    pub fn label(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        if self.has_fixed(FixedEffect::Age) {
            parts.push("Age");
        }
        if self.has_fixed(FixedEffect::Gender) {
            parts.push("Gender");
        }
        for effect in [
            LatentEffect::HouseholdIid,
            LatentEffect::SpatialLattice,
            LatentEffect::WaterGraph,
        ] {
            if self.has_latent(effect) {
                parts.push(effect.table_label());
            }
        }
        if parts.is_empty() {
            parts.push("Intercept");
        }
        parts.join(", ")
    }

    /// Normalized token string accepted by [`ModelSpec::parse`].
    pub fn tokens(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        if self.has_fixed(FixedEffect::Age) {
            parts.push("age");
        }
        if self.has_fixed(FixedEffect::Gender) {
            parts.push("gender");
        }
        for (l, _) in &self.latent {
            parts.push(l.name());
        }
        parts.join(",")
    }
}

/// Index ranges of each effect block within the stacked latent vector.
///
/// Memory order is household, spatial, graph, then fixed coefficients; the
/// densely coupled fixed columns go last so the factorization stays sparse.
#[derive(Clone, Debug)]
pub struct LatentLayout {
    pub n: usize,
    pub fixed: Range<usize>,
    pub house: Option<Range<usize>>,
    pub spatial: Option<Range<usize>>,
    pub graph: Option<Range<usize>>,
    fixed_effects: Vec<FixedEffect>,
    house_labels: Vec<String>,
    house_of: Vec<usize>,
    cell_of: Option<Vec<usize>>,
    node_of: Vec<usize>,
    age_mean: f64,
    age_sd: f64,
}

impl LatentLayout {
    /// Plan the layout for `spec` over `ds`, reusing a previously built
    /// lattice when the spec has a spatial term.
    pub fn plan(
        ds: &Dataset,
        spec: &ModelSpec,
        lattice: Option<&SpatialLattice>,
    ) -> Result<Self, ModelError> {
        let n_obs = ds.len();

        let (age_mean, age_sd) = if spec.has_fixed(FixedEffect::Age) {
            age_standardization(ds)
        } else {
            (0.0, 1.0)
        };

        let mut house_labels = Vec::new();
        let mut house_of = alloc::vec![0usize; n_obs];
        if spec.has_latent(LatentEffect::HouseholdIid) {
            let mut index: BTreeMap<&str, usize> = BTreeMap::new();
            for p in ds.participants() {
                let next = index.len();
                index.entry(p.house_id.as_str()).or_insert(next);
            }
            house_labels = alloc::vec![String::new(); index.len()];
            for (label, &i) in &index {
                house_labels[i] = (*label).to_string();
            }
            for (k, p) in ds.participants().iter().enumerate() {
                house_of[k] = index[p.house_id.as_str()];
            }
        }

        let cell_of = if spec.has_latent(LatentEffect::SpatialLattice) {
            let lat = lattice.expect("caller provides the lattice for spatial specs");
            Some(lat.cell_of.clone())
        } else {
            None
        };

        let node_of: Vec<usize> = ds
            .participants()
            .iter()
            .map(|p| {
                ds.network()
                    .index_of(&p.node_id)
                    .expect("links validated at dataset construction")
            })
            .collect();

        let n_house = house_labels.len();
        let n_cells = lattice.map_or(0, |l| l.cell_labels.len());
        let n_graph = if spec.has_latent(LatentEffect::WaterGraph) {
            ds.network().node_count()
        } else {
            0
        };
        let n_fixed = spec.fixed().len();

        let mut cursor = 0usize;
        let house = spec.has_latent(LatentEffect::HouseholdIid).then(|| {
            let r = cursor..cursor + n_house;
            cursor += n_house;
            r
        });
        let spatial = spec.has_latent(LatentEffect::SpatialLattice).then(|| {
            let r = cursor..cursor + n_cells;
            cursor += n_cells;
            r
        });
        let graph = spec.has_latent(LatentEffect::WaterGraph).then(|| {
            let r = cursor..cursor + n_graph;
            cursor += n_graph;
            r
        });
        let fixed = cursor..cursor + n_fixed;
        cursor += n_fixed;

        Ok(LatentLayout {
            n: cursor,
            fixed,
            house,
            spatial,
            graph,
            fixed_effects: spec.fixed().to_vec(),
            house_labels,
            house_of,
            cell_of,
            node_of,
            age_mean,
            age_sd,
        })
    }

    pub fn fixed_effects(&self) -> &[FixedEffect] {
        &self.fixed_effects
    }

    pub fn fixed_index(&self, effect: FixedEffect) -> Option<usize> {
        self.fixed_effects
            .iter()
            .position(|&f| f == effect)
            .map(|k| self.fixed.start + k)
    }

    pub fn house_labels(&self) -> &[String] {
        &self.house_labels
    }

    pub fn house_of(&self) -> &[usize] {
        &self.house_of
    }

    pub fn node_of(&self) -> &[usize] {
        &self.node_of
    }

    pub fn cell_of(&self) -> Option<&[usize]> {
        self.cell_of.as_deref()
    }

    pub fn age_standardizer(&self) -> (f64, f64) {
        (self.age_mean, self.age_sd)
    }

    pub fn standardize_age(&self, age: f64) -> f64 {
        (age - self.age_mean) / self.age_sd
    }
}

/// Population mean and standard deviation of age; a zero spread falls back
/// to sd 1 so the column degenerates to zeros instead of dividing by zero.
fn age_standardization(ds: &Dataset) -> (f64, f64) {
    let n = ds.len() as f64;
    let mean = ds.participants().iter().map(|p| p.age).sum::<f64>() / n;
    let var = ds
        .participants()
        .iter()
        .map(|p| (p.age - mean) * (p.age - mean))
        .sum::<f64>()
        / n;
    let sd = libm::sqrt(var);
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

/// Sparse observation matrix, one row per participant.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl DesignMatrix {
    /// Zero-row design over `n_cols` latent coordinates.
    #[cfg(test)]
    pub(crate) fn empty(n_cols: usize) -> Self {
        DesignMatrix {
            n_rows: 0,
            n_cols,
            row_ptr: alloc::vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// η = A x
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(c, v)| v * x[*c]).sum()
            })
            .collect()
    }

    /// Aᵀ r
    pub fn mul_transpose(&self, r: &[f64]) -> Vec<f64> {
        debug_assert_eq!(r.len(), self.n_rows);
        let mut out = alloc::vec![0.0; self.n_cols];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                out[*c] += v * r[i];
            }
        }
        out
    }
}

/// Build the observation matrix: per row, the fixed covariate values plus a
/// single 1 in each latent block at the participant's household, spatial
/// cell, and network node index.
pub fn design_matrix(
    ds: &Dataset,
    spec: &ModelSpec,
    layout: &LatentLayout,
) -> Result<DesignMatrix, ModelError> {
    if spec.has_latent(LatentEffect::SpatialLattice) {
        let missing: Vec<String> = ds
            .participants()
            .iter()
            .filter(|p| p.location.is_none())
            .map(|p| p.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(ModelError::MissingLocations { ids: missing });
        }
    }

    let n_obs = ds.len();
    let mut row_ptr = Vec::with_capacity(n_obs + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();

    for (k, p) in ds.participants().iter().enumerate() {
        // latent blocks come first in the layout, keep columns sorted
        if let Some(house) = &layout.house {
            col_idx.push(house.start + layout.house_of[k]);
            values.push(1.0);
        }
        if let Some(spatial) = &layout.spatial {
            let cell = layout.cell_of.as_ref().expect("spatial layout has cells")[k];
            col_idx.push(spatial.start + cell);
            values.push(1.0);
        }
        if let Some(graph) = &layout.graph {
            col_idx.push(graph.start + layout.node_of[k]);
            values.push(1.0);
        }
        for (j, effect) in layout.fixed_effects.iter().enumerate() {
            let value = match effect {
                FixedEffect::Intercept => 1.0,
                FixedEffect::Age => layout.standardize_age(p.age),
                FixedEffect::Gender => p.gender.as_f64(),
            };
            col_idx.push(layout.fixed.start + j);
            values.push(value);
        }
        row_ptr.push(col_idx.len());
    }

    Ok(DesignMatrix {
        n_rows: n_obs,
        n_cols: layout.n,
        row_ptr,
        col_idx,
        values,
    })
}

/// Value, gradient, and negative second derivative of the Bernoulli-logit
/// log-likelihood at the linear predictor.
#[derive(Clone, Debug)]
pub struct LogLik {
    pub value: f64,
    /// d/dη = y - p
    pub gradient: Vec<f64>,
    /// -d²/dη² = p(1-p)
    pub weights: Vec<f64>,
}

/// `Σ [yᵢηᵢ - log(1 + exp(ηᵢ))]`, computed overflow-safely.
pub fn loglik(y: &[f64], eta: &[f64]) -> Result<LogLik, ModelError> {
    if y.len() != eta.len() {
        return Err(ModelError::LengthMismatch {
            y: y.len(),
            eta: eta.len(),
        });
    }
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(y.len());
    let mut weights = Vec::with_capacity(y.len());
    for (&yi, &e) in y.iter().zip(eta) {
        if yi != 0.0 && yi != 1.0 {
            return Err(ModelError::NonBinaryOutcome(yi));
        }
        let (p, one_minus_p, log1pexp) = if e >= 0.0 {
            let t = libm::exp(-e);
            // log(1+e^η) = η + log(1+e^-η)
            (1.0 / (1.0 + t), t / (1.0 + t), e + libm::log1p(t))
        } else {
            let t = libm::exp(e);
            (t / (1.0 + t), 1.0 / (1.0 + t), libm::log1p(t))
        };
        value += yi * e - log1pexp;
        gradient.push(yi - p);
        weights.push(p * one_minus_p);
    }
    Ok(LogLik {
        value,
        gradient,
        weights,
    })
}

/// Occupied cells of a square grid over participant locations, with rook
/// adjacency between occupied cells.
#[derive(Clone, Debug)]
pub struct SpatialLattice {
    pub adjacency: Adjacency,
    /// Cell index per participant, aligned with the dataset order.
    pub cell_of: Vec<usize>,
    pub cell_labels: Vec<String>,
}

/// Grid the bounding box of residence locations into `cell_size`-meter cells.
pub fn build_spatial_lattice(ds: &Dataset, cell_size: f64) -> Result<SpatialLattice, ModelError> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(ModelError::NonPositiveCellSize(cell_size));
    }
    let missing: Vec<String> = ds
        .participants()
        .iter()
        .filter(|p| p.location.is_none())
        .map(|p| p.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(ModelError::MissingLocations { ids: missing });
    }

    let locs: Vec<(f64, f64)> = ds
        .participants()
        .iter()
        .map(|p| p.location.expect("checked above"))
        .collect();
    let min_x = locs.iter().map(|l| l.0).fold(f64::INFINITY, f64::min);
    let min_y = locs.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);

    let grid_of = |x: f64, y: f64| -> (i64, i64) {
        (
            libm::floor((x - min_x) / cell_size) as i64,
            libm::floor((y - min_y) / cell_size) as i64,
        )
    };

    let mut occupied: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for &(x, y) in &locs {
        let key = grid_of(x, y);
        let next = occupied.len();
        occupied.entry(key).or_insert(next);
    }
    let mut cell_labels = alloc::vec![String::new(); occupied.len()];
    for (&(gx, gy), &i) in &occupied {
        cell_labels[i] = alloc::format!("cell_{gx}_{gy}");
    }
    let cell_of: Vec<usize> = locs
        .iter()
        .map(|&(x, y)| occupied[&grid_of(x, y)])
        .collect();

    let mut pairs = Vec::new();
    for (&(gx, gy), &i) in &occupied {
        for (nx, ny) in [(gx + 1, gy), (gx, gy + 1)] {
            if let Some(&j) = occupied.get(&(nx, ny)) {
                pairs.push((i, j));
            }
        }
    }
    let adjacency = Adjacency::from_pairs(cell_labels.clone(), &pairs);

    Ok(SpatialLattice {
        adjacency,
        cell_of,
        cell_labels,
    })
}
