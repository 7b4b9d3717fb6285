//! Model fitting: Gaussian (Laplace) approximation of the latent field by
//! constrained Newton iteration, empirical-Bayes hyperparameter optimization
//! by Nelder-Mead on the approximate marginal likelihood, and Monte Carlo DIC.
//!
//! The latent field stacks household, spatial, graph, and fixed-effect
//! coordinates; the posterior precision is `Q* = Qprior(θ) + AᵀWA` with `W`
//! the Bernoulli-logit curvature. Intrinsic blocks enter the prior with their
//! diagonal jitter and carry one sum-to-zero constraint per connected
//! component throughout: mode finding, sampling, and the marginal-likelihood
//! determinant corrections all condition on them.

use alloc::vec::Vec;
use core::cell::RefCell;
use core::ops::Range;

use thiserror::Error;

use crate::gmrf::{
    factorize_csr, factorize_with_jitter, floored_intrinsic_jitter, CholeskyFactor,
    ConstraintCorrection, GmrfError, LinearConstraint,
};
use crate::model::{
    build_spatial_lattice, design_matrix, loglik, Dataset, DesignMatrix, HyperPrior, LatentEffect,
    LatentLayout, ModelError, ModelSpec, DEFAULT_CELL_SIZE, FIXED_EFFECT_PRIOR_PRECISION,
};
use crate::precision::{build_border_precision, build_distance_precision, PrecisionError, PrecisionMatrix};
use crate::rng::{fill_standard_normal, stream};

const NEWTON_GRAD_TOL: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 50;
const NEWTON_MAX_HALVINGS: usize = 20;
const NM_OBJECTIVE_TOL: f64 = 1e-4;
const NM_INITIAL_STEP: f64 = 3.0;
const NM_MAX_EVALS: usize = 200;
const THETA_BOUND: f64 = 30.0;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error(transparent)]
    Gmrf(#[from] GmrfError),
    #[error("Newton iteration did not converge after {iterations} iterations (|grad| = {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },
    #[error("marginal-likelihood objective is not finite at the starting point")]
    ObjectiveNotFinite,
    #[error("hyperparameter count mismatch: spec has {expected} latent effects, got {got}")]
    ThetaDimension { expected: usize, got: usize },
    #[error("DIC needs at least 2 draws, got {0}")]
    TooFewDraws(usize),
}

/// Log-precisions, one per latent effect in spec order.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparameters(pub Vec<f64>);

impl Hyperparameters {
    pub fn zeros(dim: usize) -> Self {
        Hyperparameters(alloc::vec![0.0; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Tunables that are not part of the model definition.
#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub cell_size: f64,
    pub dic_draws: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            cell_size: DEFAULT_CELL_SIZE,
            dic_draws: 1000,
        }
    }
}

enum Structure {
    Iid,
    Car(PrecisionMatrix),
}

enum ScaleKind {
    Hyper { theta_index: usize, hyper: HyperPrior },
    Const(f64),
}

struct PriorBlock {
    range: Range<usize>,
    structure: Structure,
    scale: ScaleKind,
    /// Absolute diagonal jitter at unit scale (CAR blocks only).
    jitter_unit: f64,
    /// `log|B + jitter·I|` at unit scale.
    log_det_unit: f64,
    /// Sum-to-zero groups (global indices), one per connected component.
    constraint_groups: Vec<Vec<usize>>,
    /// `log|C (B + jitter·I)⁻¹ Cᵀ|` at unit scale.
    log_det_constraint_unit: f64,
}

impl PriorBlock {
    fn dim(&self) -> usize {
        self.range.end - self.range.start
    }
}

/// Precomputed sparsity pattern of `Q* = Qprior + AᵀWA` plus scatter lists
/// that refill its values for new `θ` and `W` without re-deriving structure.
struct PosteriorPattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// (slot, block, base value): `values[slot] += scale(block) * base`
    prior_scatter: Vec<(u32, u32, f64)>,
    /// (slot, observation, aᵢ·aⱼ): `values[slot] += w[obs] * coeff`
    obs_scatter: Vec<(u32, u32, f64)>,
}

impl PosteriorPattern {
    fn slot(&self, i: usize, j: usize) -> u32 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (r.start + self.col_idx[r.clone()].binary_search(&j).expect("slot in pattern")) as u32
    }
}

/// Everything derived from `(dataset, spec)` that fitting needs: outcomes,
/// design matrix, prior blocks, constraints, and the posterior pattern.
pub struct ModelFrame {
    y: Vec<f64>,
    design: DesignMatrix,
    layout: LatentLayout,
    blocks: Vec<PriorBlock>,
    constraint: Option<LinearConstraint>,
    pattern: PosteriorPattern,
    theta_dim: usize,
}

impl ModelFrame {
    pub fn build(ds: &Dataset, spec: &ModelSpec, cell_size: f64) -> Result<Self, InferenceError> {
        let lattice = if spec.has_latent(LatentEffect::SpatialLattice) {
            Some(build_spatial_lattice(ds, cell_size)?)
        } else {
            None
        };
        let layout = LatentLayout::plan(ds, spec, lattice.as_ref())?;
        let design = design_matrix(ds, spec, &layout)?;
        let y = ds.outcomes();

        let mut blocks = Vec::new();
        let mut theta_index = 0usize;
        for (effect, hyper) in spec.latent_with_hyperpriors() {
            let (range, structure) = match effect {
                LatentEffect::HouseholdIid => {
                    (layout.house.clone().expect("layout has house block"), Structure::Iid)
                }
                LatentEffect::SpatialLattice => {
                    let adj = &lattice.as_ref().expect("lattice built above").adjacency;
                    (
                        layout.spatial.clone().expect("layout has spatial block"),
                        Structure::Car(build_border_precision(adj)?),
                    )
                }
                LatentEffect::WaterGraph => (
                    layout.graph.clone().expect("layout has graph block"),
                    Structure::Car(build_distance_precision(ds.network())?),
                ),
            };
            blocks.push(make_block(
                range,
                structure,
                ScaleKind::Hyper {
                    theta_index,
                    hyper: *hyper,
                },
            )?);
            theta_index += 1;
        }
        blocks.push(make_block(
            layout.fixed.clone(),
            Structure::Iid,
            ScaleKind::Const(FIXED_EFFECT_PRIOR_PRECISION),
        )?);

        let groups: Vec<Vec<usize>> = blocks
            .iter()
            .flat_map(|b| b.constraint_groups.iter().cloned())
            .collect();
        let constraint = if groups.is_empty() {
            None
        } else {
            Some(LinearConstraint::sum_to_zero_groups(layout.n, &groups)?)
        };

        let pattern = build_pattern(layout.n, &blocks, &design);

        Ok(ModelFrame {
            y,
            design,
            layout,
            blocks,
            constraint,
            pattern,
            theta_dim: theta_index,
        })
    }

    pub fn theta_dim(&self) -> usize {
        self.theta_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.layout.n
    }

    pub fn n_observations(&self) -> usize {
        self.y.len()
    }

    pub fn layout(&self) -> &LatentLayout {
        &self.layout
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn constraint(&self) -> Option<&LinearConstraint> {
        self.constraint.as_ref()
    }

    fn scales(&self, theta: &Hyperparameters) -> Result<Vec<f64>, InferenceError> {
        if theta.len() != self.theta_dim {
            return Err(InferenceError::ThetaDimension {
                expected: self.theta_dim,
                got: theta.len(),
            });
        }
        Ok(self
            .blocks
            .iter()
            .map(|b| match &b.scale {
                ScaleKind::Hyper { theta_index, .. } => libm::exp(theta.0[*theta_index]),
                ScaleKind::Const(c) => *c,
            })
            .collect())
    }

    /// `Qprior(θ) x`, including the intrinsic-block jitter.
    fn prior_mul(&self, scales: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.layout.n];
        for (block, &tau) in self.blocks.iter().zip(scales) {
            let start = block.range.start;
            match &block.structure {
                Structure::Iid => {
                    for i in block.range.clone() {
                        out[i] += tau * x[i];
                    }
                }
                Structure::Car(q) => {
                    for local in 0..q.dim() {
                        let (cols, vals) = q.row(local);
                        let mut acc = block.jitter_unit * x[start + local];
                        for (c, v) in cols.iter().zip(vals) {
                            acc += v * x[start + c];
                        }
                        out[start + local] += tau * acc;
                    }
                }
            }
        }
        out
    }

    fn prior_quad(&self, scales: &[f64], x: &[f64]) -> f64 {
        self.prior_mul(scales, x)
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `log|Qprior(θ)| = Σ_b [n_b·log τ_b + log|B_b + jitter·I|]`
    fn log_det_prior(&self, scales: &[f64]) -> f64 {
        self.blocks
            .iter()
            .zip(scales)
            .map(|(b, &tau)| b.dim() as f64 * libm::log(tau) + b.log_det_unit)
            .sum()
    }

    /// `log|C Qprior(θ)⁻¹ Cᵀ| = Σ_b [-k_b·log τ_b + unit term]`
    fn log_det_prior_constraints(&self, scales: &[f64]) -> f64 {
        self.blocks
            .iter()
            .zip(scales)
            .map(|(b, &tau)| {
                let k = b.constraint_groups.len() as f64;
                if k > 0.0 {
                    -k * libm::log(tau) + b.log_det_constraint_unit
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn log_hyperprior(&self, theta: &Hyperparameters) -> f64 {
        self.blocks
            .iter()
            .map(|b| match &b.scale {
                ScaleKind::Hyper { theta_index, hyper } => {
                    hyper.log_density_log_scale(theta.0[*theta_index])
                }
                ScaleKind::Const(_) => 0.0,
            })
            .sum()
    }

    /// Assemble and factor `Q* = Qprior(θ) + AᵀWA`.
    fn posterior_factor(
        &self,
        scales: &[f64],
        weights: &[f64],
    ) -> Result<CholeskyFactor, InferenceError> {
        let mut values = alloc::vec![0.0; self.pattern.col_idx.len()];
        for &(slot, block, base) in &self.pattern.prior_scatter {
            values[slot as usize] += scales[block as usize] * base;
        }
        for &(slot, obs, coeff) in &self.pattern.obs_scatter {
            values[slot as usize] += weights[obs as usize] * coeff;
        }
        Ok(factorize_csr(
            self.layout.n,
            &self.pattern.row_ptr,
            &self.pattern.col_idx,
            &values,
            0.0,
        )?)
    }

    /// Unnormalized log-posterior of the latent field,
    /// `loglik(y, Ax) - ½ xᵀQprior(θ)x`.
    pub fn log_posterior(&self, theta: &Hyperparameters, x: &[f64]) -> Result<f64, InferenceError> {
        let scales = self.scales(theta)?;
        let eta = self.design.mul(x);
        let ll = loglik(&self.y, &eta)?;
        Ok(ll.value - 0.5 * self.prior_quad(&scales, x))
    }

    /// Gradient of [`ModelFrame::log_posterior`] with respect to `x`.
    pub fn log_posterior_gradient(
        &self,
        theta: &Hyperparameters,
        x: &[f64],
    ) -> Result<Vec<f64>, InferenceError> {
        let scales = self.scales(theta)?;
        let eta = self.design.mul(x);
        let ll = loglik(&self.y, &eta)?;
        let mut grad = self.design.mul_transpose(&ll.gradient);
        for (g, p) in grad.iter_mut().zip(self.prior_mul(&scales, x)) {
            *g -= p;
        }
        Ok(grad)
    }

    /// Project a gradient onto the constraint manifold `Cx = 0`.
    fn project_gradient(&self, grad: &[f64]) -> Vec<f64> {
        let Some(c) = &self.constraint else {
            return grad.to_vec();
        };
        // g - Cᵀ(CCᵀ)⁻¹Cg; rows are disjoint indicator groups, so CCᵀ is
        // diagonal with the group sizes.
        let mut out = grad.to_vec();
        for row in c.rows() {
            let total: f64 = row.iter().map(|&(i, coef)| coef * grad[i]).sum();
            let norm: f64 = row.iter().map(|&(_, coef)| coef * coef).sum();
            let shift = total / norm;
            for &(i, coef) in row {
                out[i] -= coef * shift;
            }
        }
        out
    }
}

fn make_block(
    range: Range<usize>,
    structure: Structure,
    scale: ScaleKind,
) -> Result<PriorBlock, InferenceError> {
    match structure {
        Structure::Iid => Ok(PriorBlock {
            range,
            structure,
            scale,
            jitter_unit: 0.0,
            log_det_unit: 0.0,
            constraint_groups: Vec::new(),
            log_det_constraint_unit: 0.0,
        }),
        Structure::Car(q) => {
            let jitter_unit = floored_intrinsic_jitter(&q);
            let unit_factor = factorize_with_jitter(&q, jitter_unit)?;
            let log_det_unit = 2.0 * unit_factor.half_log_det();
            let constraint_groups: Vec<Vec<usize>> = q
                .components()
                .into_iter()
                .map(|g| g.into_iter().map(|i| range.start + i).collect())
                .collect();
            // determinant of C (B + jI)⁻¹ Cᵀ at unit scale, via the local
            // (block-relative) constraint
            let local_groups: Vec<Vec<usize>> = q.components();
            let local = LinearConstraint::sum_to_zero_groups(q.dim(), &local_groups)?;
            let corr = ConstraintCorrection::prepare(&unit_factor, &local)?;
            let log_det_constraint_unit = corr.log_det_s();
            Ok(PriorBlock {
                range,
                structure: Structure::Car(q),
                scale,
                jitter_unit,
                log_det_unit,
                constraint_groups,
                log_det_constraint_unit,
            })
        }
    }
}

fn build_pattern(n: usize, blocks: &[PriorBlock], design: &DesignMatrix) -> PosteriorPattern {
    let mut entries: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for block in blocks {
        if let Structure::Car(q) = &block.structure {
            let s = block.range.start;
            for (i, j, _) in q.iter_all() {
                entries.push((s + i, s + j));
            }
        }
    }
    for r in 0..design.n_rows() {
        let (cols, _) = design.row(r);
        for &a in cols {
            for &b in cols {
                entries.push((a, b));
            }
        }
    }
    entries.sort_unstable();
    entries.dedup();

    let mut row_ptr = alloc::vec![0usize; n + 1];
    for &(i, _) in &entries {
        row_ptr[i + 1] += 1;
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    let col_idx: Vec<usize> = entries.iter().map(|&(_, j)| j).collect();

    let mut pattern = PosteriorPattern {
        row_ptr,
        col_idx,
        prior_scatter: Vec::new(),
        obs_scatter: Vec::new(),
    };

    for (b, block) in blocks.iter().enumerate() {
        let s = block.range.start;
        match &block.structure {
            Structure::Iid => {
                for i in block.range.clone() {
                    pattern
                        .prior_scatter
                        .push((pattern.slot(i, i), b as u32, 1.0));
                }
            }
            Structure::Car(q) => {
                for (i, j, v) in q.iter_all() {
                    pattern
                        .prior_scatter
                        .push((pattern.slot(s + i, s + j), b as u32, v));
                }
                for i in block.range.clone() {
                    pattern
                        .prior_scatter
                        .push((pattern.slot(i, i), b as u32, block.jitter_unit));
                }
            }
        }
    }

    for r in 0..design.n_rows() {
        let (cols, vals) = design.row(r);
        for (ka, &a) in cols.iter().enumerate() {
            for (kb, &bcol) in cols.iter().enumerate() {
                pattern.obs_scatter.push((
                    pattern.slot(a, bcol),
                    r as u32,
                    vals[ka] * vals[kb],
                ));
            }
        }
    }

    pattern
}

/// The Gaussian approximation at a hyperparameter configuration: latent mode,
/// posterior precision factor, constraints, and log-determinant terms.
#[derive(Debug)]
pub struct GaussianApproximation {
    pub mode: Vec<f64>,
    pub factor: CholeskyFactor,
    pub constraint: Option<LinearConstraint>,
    pub correction: Option<ConstraintCorrection>,
    pub loglik_at_mode: f64,
    pub prior_quad_at_mode: f64,
    pub log_det_prior: f64,
    pub log_det_posterior: f64,
    pub iterations: usize,
}

impl GaussianApproximation {
    /// Marginal standard deviation of latent coordinate `i`, accounting for
    /// the sum-to-zero conditioning.
    pub fn marginal_sd(&self, i: usize) -> Result<f64, GmrfError> {
        let mut e = alloc::vec![0.0; self.factor.dim()];
        e[i] = 1.0;
        let col = self.factor.solve(&e)?;
        let mut var = col[i];
        if let Some(corr) = &self.correction {
            var -= corr.variance_reduction(i);
        }
        Ok(libm::sqrt(var.max(0.0)))
    }

    /// One constrained draw from `N(mode, Q*⁻¹)` appended onto `out`.
    fn draw_into<R: rand::Rng>(
        &self,
        rng: &mut R,
        z: &mut [f64],
        out: &mut [f64],
    ) -> Result<(), GmrfError> {
        fill_standard_normal(rng, z);
        let mut dev = self.factor.solve_lower_transpose(z)?;
        if let (Some(c), Some(corr)) = (&self.constraint, &self.correction) {
            corr.apply(c, &mut dev);
        }
        for ((o, m), d) in out.iter_mut().zip(&self.mode).zip(&dev) {
            *o = m + d;
        }
        Ok(())
    }
}

/// Find the posterior mode of the latent field at fixed hyperparameters by
/// Newton iteration with step halving; constraints are enforced at every
/// step by conditioning the Newton target.
pub fn gaussian_approximation(
    ds: &Dataset,
    spec: &ModelSpec,
    theta: &Hyperparameters,
) -> Result<GaussianApproximation, InferenceError> {
    let frame = ModelFrame::build(ds, spec, DEFAULT_CELL_SIZE)?;
    newton_mode(&frame, theta, None)
}

/// Same as [`gaussian_approximation`] but reusing a built frame and an
/// optional warm start.
pub fn newton_mode(
    frame: &ModelFrame,
    theta: &Hyperparameters,
    warm_start: Option<&[f64]>,
) -> Result<GaussianApproximation, InferenceError> {
    let scales = frame.scales(theta)?;
    let n = frame.layout.n;
    let mut x = match warm_start {
        Some(w) if w.len() == n => w.to_vec(),
        _ => alloc::vec![0.0; n],
    };

    let mut last_grad_norm = f64::INFINITY;
    for iter in 0..NEWTON_MAX_ITER {
        let eta = frame.design.mul(&x);
        let ll = loglik(&frame.y, &eta)?;
        let prior_vec = frame.prior_mul(&scales, &x);
        let prior_quad: f64 = prior_vec.iter().zip(&x).map(|(a, b)| a * b).sum();

        let mut grad = frame.design.mul_transpose(&ll.gradient);
        for (g, p) in grad.iter_mut().zip(&prior_vec) {
            *g -= p;
        }
        let gproj = frame.project_gradient(&grad);
        let grad_norm = gproj.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        last_grad_norm = grad_norm;

        if grad_norm < NEWTON_GRAD_TOL {
            let factor = frame.posterior_factor(&scales, &ll.weights)?;
            let correction = match &frame.constraint {
                Some(c) => Some(ConstraintCorrection::prepare(&factor, c)?),
                None => None,
            };
            let log_det_posterior = 2.0 * factor.half_log_det();
            return Ok(GaussianApproximation {
                mode: x,
                factor,
                constraint: frame.constraint.clone(),
                correction,
                loglik_at_mode: ll.value,
                prior_quad_at_mode: prior_quad,
                log_det_prior: frame.log_det_prior(&scales),
                log_det_posterior,
                iterations: iter,
            });
        }

        let factor = frame.posterior_factor(&scales, &ll.weights)?;
        let step = factor.solve(&grad)?;
        let mut target: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        if let Some(c) = &frame.constraint {
            let corr = ConstraintCorrection::prepare(&factor, c)?;
            corr.apply(c, &mut target);
        }
        let direction: Vec<f64> = target.iter().zip(&x).map(|(t, a)| t - a).collect();

        // step halving: accept the first non-decreasing objective value
        let f_current = ll.value - 0.5 * prior_quad;
        let mut t = 1.0;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let trial: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(a, d)| a + t * d)
                .collect();
            let eta_t = frame.design.mul(&trial);
            let ll_t = loglik(&frame.y, &eta_t)?;
            let f_t = ll_t.value - 0.5 * frame.prior_quad(&scales, &trial);
            if f_t.is_finite() && f_t >= f_current - 1e-12 * (1.0 + f_current.abs()) {
                x = trial;
                break;
            }
            t *= 0.5;
        }
    }

    Err(InferenceError::NonConvergence {
        iterations: NEWTON_MAX_ITER,
        gradient_norm: last_grad_norm,
    })
}

/// Probe hook for examining the optimization surface in tests.
pub fn marginal_objective_probe(
    frame: &ModelFrame,
    theta: &Hyperparameters,
    approx: &GaussianApproximation,
) -> Result<f64, InferenceError> {
    marginal_objective(frame, theta, approx)
}

/// Laplace approximation to `log p(y|θ) + log p(θ)`, with determinant
/// corrections for the sum-to-zero conditioning.
fn marginal_objective(
    frame: &ModelFrame,
    theta: &Hyperparameters,
    approx: &GaussianApproximation,
) -> Result<f64, InferenceError> {
    let scales = frame.scales(theta)?;
    let mut obj = approx.loglik_at_mode - 0.5 * approx.prior_quad_at_mode;
    obj += 0.5 * approx.log_det_prior;
    obj -= 0.5 * approx.log_det_posterior;
    if let Some(corr) = &approx.correction {
        obj += 0.5 * frame.log_det_prior_constraints(&scales);
        obj -= 0.5 * corr.log_det_s();
    }
    obj += frame.log_hyperprior(theta);
    Ok(obj)
}

/// Maximize the approximate marginal likelihood over the log-precisions by
/// Nelder-Mead from θ = 0, tolerance 1e-4 on the objective spread, at most
/// 200 evaluations. Returns immediately when the spec has no latent effect.
pub fn optimize_hyperparameters(
    ds: &Dataset,
    spec: &ModelSpec,
) -> Result<Hyperparameters, InferenceError> {
    let frame = ModelFrame::build(ds, spec, DEFAULT_CELL_SIZE)?;
    optimize_hyperparameters_frame(&frame)
}

pub fn optimize_hyperparameters_frame(
    frame: &ModelFrame,
) -> Result<Hyperparameters, InferenceError> {
    let dim = frame.theta_dim();
    if dim == 0 {
        return Ok(Hyperparameters(Vec::new()));
    }

    let warm: RefCell<Option<Vec<f64>>> = RefCell::new(None);
    let evaluate = |theta_values: &[f64]| -> f64 {
        if theta_values.iter().any(|t| t.abs() > THETA_BOUND) {
            return f64::NEG_INFINITY;
        }
        let theta = Hyperparameters(theta_values.to_vec());
        let start = warm.borrow().clone();
        match newton_mode(frame, &theta, start.as_deref()) {
            Ok(approx) => {
                let obj = marginal_objective(frame, &theta, &approx).unwrap_or(f64::NEG_INFINITY);
                if obj.is_finite() {
                    *warm.borrow_mut() = Some(approx.mode);
                }
                obj
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let start = alloc::vec![0.0; dim];
    if !evaluate(&start).is_finite() {
        return Err(InferenceError::ObjectiveNotFinite);
    }

    // A wide initial simplex: the objective often has a shallow shelf at
    // large log-precisions (the hyperprior's own mode) next to a local
    // likelihood bump, and the simplex must span both to rank them.
    let best = nelder_mead_maximize(&evaluate, &start, NM_INITIAL_STEP, NM_OBJECTIVE_TOL, NM_MAX_EVALS);
    Ok(Hyperparameters(best))
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 0.5, shrink
/// 0.5) maximizing `f`; deterministic given the starting point.
fn nelder_mead_maximize(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    tol: f64,
    max_evals: usize,
) -> Vec<f64> {
    let dim = start.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        -f(x) // minimize the negation
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = start.to_vec();
    let f0 = eval(&v0, &mut evals);
    simplex.push((v0, f0));
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step;
        let fv = eval(&v, &mut evals);
        simplex.push((v, fv));
    }

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
        let spread = simplex[dim].1 - simplex[0].1;
        if spread.abs() < tol {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + (c - w))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if f_reflect < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            simplex[dim] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
            continue;
        }
        if f_reflect < simplex[dim - 1].1 {
            simplex[dim] = (reflect, f_reflect);
            continue;
        }

        let contract: Vec<f64> = if f_reflect < worst.1 {
            centroid
                .iter()
                .zip(&reflect)
                .map(|(c, r)| c + 0.5 * (r - c))
                .collect()
        } else {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + 0.5 * (w - c))
                .collect()
        };
        let f_contract = eval(&contract, &mut evals);
        if f_contract < worst.1.min(f_reflect) {
            simplex[dim] = (contract, f_contract);
            continue;
        }

        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for k in 1..=dim {
            let v: Vec<f64> = best
                .iter()
                .zip(&simplex[k].0)
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            let fv = eval(&v, &mut evals);
            simplex[k] = (v, fv);
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
    simplex.swap_remove(0).0
}

/// DIC decomposition from Monte Carlo draws of the Gaussian approximation.
#[derive(Clone, Copy, Debug)]
pub struct DicSummary {
    /// Mean deviance over posterior draws.
    pub deviance_bar: f64,
    /// Deviance at the draw mean.
    pub deviance_at_mean: f64,
    /// Effective number of parameters.
    pub p_eff: f64,
    pub dic: f64,
    pub n_draws: usize,
}

/// `deviance(x) = -2·loglik(y, Ax)`; DIC = D(x̄) + 2·(D̄ - D(x̄)) with both
/// terms estimated from `n_draws` constrained samples.
pub fn compute_dic(
    ds: &Dataset,
    spec: &ModelSpec,
    approx: &GaussianApproximation,
    n_draws: usize,
    seed: u64,
) -> Result<DicSummary, InferenceError> {
    let frame = ModelFrame::build(ds, spec, DEFAULT_CELL_SIZE)?;
    compute_dic_frame(&frame, approx, n_draws, seed)
}

pub fn compute_dic_frame(
    frame: &ModelFrame,
    approx: &GaussianApproximation,
    n_draws: usize,
    seed: u64,
) -> Result<DicSummary, InferenceError> {
    if n_draws < 2 {
        return Err(InferenceError::TooFewDraws(n_draws));
    }
    let n = approx.factor.dim();
    let mut rng = stream(seed, "dic-draws", 0);
    let mut z = alloc::vec![0.0; n];
    let mut draw = alloc::vec![0.0; n];
    let mut mean = alloc::vec![0.0; n];
    let mut dev_sum = 0.0;
    for _ in 0..n_draws {
        approx.draw_into(&mut rng, &mut z, &mut draw)?;
        let eta = frame.design.mul(&draw);
        let ll = loglik(&frame.y, &eta)?;
        dev_sum += -2.0 * ll.value;
        for (m, d) in mean.iter_mut().zip(&draw) {
            *m += d;
        }
    }
    let inv = 1.0 / n_draws as f64;
    for m in mean.iter_mut() {
        *m *= inv;
    }
    let deviance_bar = dev_sum * inv;
    let eta_mean = frame.design.mul(&mean);
    let deviance_at_mean = -2.0 * loglik(&frame.y, &eta_mean)?.value;
    let p_eff = deviance_bar - deviance_at_mean;
    Ok(DicSummary {
        deviance_bar,
        deviance_at_mean,
        p_eff,
        dic: deviance_at_mean + 2.0 * p_eff,
        n_draws,
    })
}

/// Posterior mean and standard deviation of one fixed-effect coefficient.
#[derive(Clone, Debug)]
pub struct FixedEffectSummary {
    pub name: &'static str,
    pub mean: f64,
    pub sd: f64,
}

/// A complete fit of one model specification.
#[derive(Debug)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub theta_hat: Hyperparameters,
    pub approximation: GaussianApproximation,
    pub log_marginal: f64,
    pub dic: DicSummary,
    pub fixed_effects: Vec<FixedEffectSummary>,
    pub n_observations: usize,
    pub seed: u64,
}

/// Fit a model: optimize hyperparameters, recompute the Gaussian
/// approximation at the optimum, and evaluate DIC. Deterministic given the
/// seed.
pub fn fit(ds: &Dataset, spec: &ModelSpec, seed: u64) -> Result<FitResult, InferenceError> {
    fit_with(ds, spec, seed, &FitOptions::default())
}

pub fn fit_with(
    ds: &Dataset,
    spec: &ModelSpec,
    seed: u64,
    options: &FitOptions,
) -> Result<FitResult, InferenceError> {
    let frame = ModelFrame::build(ds, spec, options.cell_size)?;
    let theta_hat = optimize_hyperparameters_frame(&frame)?;
    let approx = newton_mode(&frame, &theta_hat, None)?;
    let log_marginal = marginal_objective(&frame, &theta_hat, &approx)?;
    let dic = compute_dic_frame(&frame, &approx, options.dic_draws, crate::rng::derive_seed(seed, "dic", 0))?;

    let mut fixed_effects = Vec::new();
    for effect in frame.layout().fixed_effects().iter() {
        let idx = frame
            .layout()
            .fixed_index(*effect)
            .expect("fixed effect present in layout");
        fixed_effects.push(FixedEffectSummary {
            name: effect.name(),
            mean: approx.mode[idx],
            sd: approx.marginal_sd(idx)?,
        });
    }

    Ok(FitResult {
        spec: spec.clone(),
        theta_hat,
        approximation: approx,
        log_marginal,
        dic,
        fixed_effects,
        n_observations: frame.n_observations(),
        seed,
    })
}
