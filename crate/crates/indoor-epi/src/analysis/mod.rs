//! Statistical analysis of scenario batches: scaling, path models with
//! bootstrap effect decomposition, and propensity-weighted causal effects
//! with refutation checks.

pub mod causal;
pub mod linalg;
pub mod path;
pub mod stats;
pub mod table;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::derive_labeled;

pub use causal::{
    estimate_ate, logistic_irls, refute, AteEstimate, CausalData, RefutationMethod,
    RefutationResult, PROPENSITY_CLIP,
};
pub use path::{
    bootstrap_effects, decompose_effects, fit_path_model, BootstrapEffect, BootstrapReport,
    EffectEstimate, EffectKind, EffectReport, FitIndices, FittedPathModel, PathModel,
};
pub use table::{binarize, min_max_scale, SampleRow, SampleTable, COLUMNS};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub resamples: usize,
    pub ci_percent: f64,
    pub seed: u64,
    pub propensity_clip: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            resamples: 1000,
            ci_percent: 95.0,
            seed: 7,
            propensity_clip: PROPENSITY_CLIP,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CausalReport {
    pub outcome: String,
    pub estimate: AteEstimate,
    pub refutations: Vec<RefutationResult>,
}

/// Full downstream analysis of a sample table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rows: usize,
    pub model_a: BootstrapReport,
    pub model_b: BootstrapReport,
    pub causal_c_new: CausalReport,
    pub causal_e_ave: CausalReport,
}

/// Scales the table, bootstraps both path models, then estimates the
/// treatment effect of the binarized space deviation on each binarized
/// outcome with all three refutation checks.
pub fn analyze(table: &SampleTable, options: &AnalysisOptions) -> Result<AnalysisReport> {
    let scaled = min_max_scale(table)?;

    let model_a = bootstrap_effects(
        &scaled,
        &PathModel::model_a(),
        options.resamples,
        options.ci_percent,
        derive_labeled(options.seed, "model_a", &[]),
    )?;
    let model_b = bootstrap_effects(
        &scaled,
        &PathModel::model_b(),
        options.resamples,
        options.ci_percent,
        derive_labeled(options.seed, "model_b", &[]),
    )?;

    let causal_c_new = causal_pipeline(&scaled, "c_new", options)?;
    let causal_e_ave = causal_pipeline(&scaled, "e_ave", options)?;

    Ok(AnalysisReport {
        rows: table.len(),
        model_a,
        model_b,
        causal_c_new,
        causal_e_ave,
    })
}

fn causal_pipeline(
    scaled: &SampleTable,
    outcome: &str,
    options: &AnalysisOptions,
) -> Result<CausalReport> {
    let treatment = binarize(&scaled.column("sigma_spaces")?);
    let outcome_bin: Vec<f64> = binarize(&scaled.column(outcome)?)
        .into_iter()
        .map(f64::from)
        .collect();
    let confounders = ["n_crowding", "d_crowding", "n_stopping", "t_stopping"]
        .iter()
        .map(|c| scaled.column(c))
        .collect::<Result<Vec<_>>>()?;
    let data = CausalData {
        treatment,
        outcome: outcome_bin,
        confounders,
    };
    let estimate = estimate_ate(&data, options.propensity_clip)?;
    let refutations = RefutationMethod::ALL
        .iter()
        .map(|&method| {
            refute(
                &data,
                estimate.ate,
                method,
                derive_labeled(options.seed, outcome, &[method as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CausalReport {
        outcome: outcome.to_string(),
        estimate,
        refutations,
    })
}
