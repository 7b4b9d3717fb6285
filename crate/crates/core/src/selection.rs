//! Stepwise model comparison: fit a ladder of specifications on identical
//! observations and flag DIC reductions of 10 or more against the baseline
//! row.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::inference::{fit_with, FitOptions, FitResult};
use crate::model::{Dataset, FixedEffect, LatentEffect, ModelError, ModelSpec};
use crate::rng::derive_seed;

/// DIC reduction treated as meaningful.
pub const SUPPORT_THRESHOLD: f64 = 10.0;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("model ladder has no rows")]
    EmptyLadder,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Ordered sequence of model specifications fitted on the same data.
#[derive(Clone, Debug)]
pub struct ModelLadder {
    specs: Vec<ModelSpec>,
}

impl ModelLadder {
    pub fn new(specs: Vec<ModelSpec>) -> Result<Self, SelectionError> {
        if specs.is_empty() {
            return Err(SelectionError::EmptyLadder);
        }
        Ok(ModelLadder { specs })
    }

    /// The default six-row ladder: age/gender baseline, then household,
    /// spatial, and water-graph effects added stepwise, plus the two
    /// graph-focused rows.
    pub fn default_six_rows() -> Self {
        use FixedEffect::{Age, Gender};
        use LatentEffect::{HouseholdIid, SpatialLattice, WaterGraph};
        let spec = |fixed: &[FixedEffect], latent: &[LatentEffect]| {
            ModelSpec::new(fixed.to_vec(), latent.to_vec()).expect("static specs are valid")
        };
        ModelLadder {
            specs: alloc::vec![
                spec(&[Age, Gender], &[]),
                spec(&[Age, Gender], &[HouseholdIid]),
                spec(&[Age, Gender], &[HouseholdIid, SpatialLattice]),
                spec(&[Age, Gender], &[HouseholdIid, SpatialLattice, WaterGraph]),
                spec(&[Age, Gender], &[WaterGraph]),
                spec(&[], &[WaterGraph]),
            ],
        }
    }

    pub fn specs(&self) -> &[ModelSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    fn uses_spatial(&self) -> bool {
        self.specs
            .iter()
            .any(|s| s.has_latent(LatentEffect::SpatialLattice))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Significance {
    Supported,
    NotSupported,
}

/// `dic_b` is supported over `dic_a` when it is lower by at least 10.
pub fn significance(dic_a: f64, dic_b: f64) -> Significance {
    if dic_b <= dic_a - SUPPORT_THRESHOLD {
        Significance::Supported
    } else {
        Significance::NotSupported
    }
}

/// Outcome of one ladder row.
#[derive(Debug)]
pub enum RowOutcome {
    Fitted {
        fit: FitResult,
        /// DIC difference against the baseline (first) row; None when the
        /// baseline itself failed.
        delta_dic: Option<f64>,
        supported: bool,
    },
    Failed {
        message: String,
    },
}

#[derive(Debug)]
pub struct ComparisonRow {
    pub label: String,
    pub tokens: String,
    pub outcome: RowOutcome,
}

impl ComparisonRow {
    pub fn dic(&self) -> Option<f64> {
        match &self.outcome {
            RowOutcome::Fitted { fit, .. } => Some(fit.dic.dic),
            RowOutcome::Failed { .. } => None,
        }
    }

    pub fn is_supported(&self) -> bool {
        matches!(
            self.outcome,
            RowOutcome::Fitted {
                supported: true,
                ..
            }
        )
    }
}

/// Per-spec results over identical observations, in ladder order.
#[derive(Debug)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub n_observations: usize,
    pub outcome_name: String,
    pub seed: u64,
}

impl ComparisonTable {
    pub fn n_fitted(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| matches!(r.outcome, RowOutcome::Fitted { .. }))
            .count()
    }
}

/// Fit every ladder row with a per-row derived seed and flag DIC reductions.
///
/// Comparability rule: rows may only be compared on identical observations,
/// so participants missing any variable used anywhere in the ladder are
/// dropped up front (residence coordinates are the only optional variable).
/// A row that fails to fit is reported as failed; the others still produce
/// results.
pub fn run_ladder(
    ds: &Dataset,
    ladder: &ModelLadder,
    seed: u64,
    options: &FitOptions,
) -> Result<ComparisonTable, SelectionError> {
    let aligned;
    let data = if ladder.uses_spatial() {
        aligned = ds.retain_located()?;
        &aligned
    } else {
        ds
    };

    let mut rows: Vec<ComparisonRow> = Vec::with_capacity(ladder.len());
    let mut baseline_dic: Option<f64> = None;
    for (index, spec) in ladder.specs().iter().enumerate() {
        let row_seed = derive_seed(seed, "ladder-row", index as u64);
        let outcome = match fit_with(data, spec, row_seed, options) {
            Ok(fit) => {
                if index == 0 {
                    baseline_dic = Some(fit.dic.dic);
                }
                let delta_dic = baseline_dic.map(|b| fit.dic.dic - b);
                let supported = baseline_dic
                    .map(|b| significance(b, fit.dic.dic) == Significance::Supported)
                    .unwrap_or(false);
                RowOutcome::Fitted {
                    fit,
                    delta_dic,
                    supported,
                }
            }
            Err(err) => RowOutcome::Failed {
                message: alloc::format!("{err}"),
            },
        };
        rows.push(ComparisonRow {
            label: spec.label(),
            tokens: spec.tokens(),
            outcome,
        });
    }

    Ok(ComparisonTable {
        rows,
        n_observations: data.len(),
        outcome_name: data.outcome_name().to_string(),
        seed,
    })
}
