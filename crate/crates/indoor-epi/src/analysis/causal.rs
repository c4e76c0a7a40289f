//! Propensity-score-weighted treatment effects and refutation checks.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};

use super::linalg;
use super::stats::{mean, normal_cdf, stddev};

/// Default clipping bound for estimated propensities.
pub const PROPENSITY_CLIP: f64 = 0.01;
pub const IRLS_TOLERANCE: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;
/// L2 penalty on the propensity coefficients (intercept exempt), matching
/// the defaults of the reference weighting tools; keeps near-deterministic
/// treatments from saturating the weights.
pub const PROPENSITY_RIDGE: f64 = 1.0;
const REFUTATION_RUNS: usize = 100;
const SUBSET_FRACTION: f64 = 0.8;

/// Binary treatment/outcome with confounder columns.
#[derive(Clone, Debug)]
pub struct CausalData {
    pub treatment: Vec<u8>,
    pub outcome: Vec<f64>,
    /// Column-major confounders.
    pub confounders: Vec<Vec<f64>>,
}

impl CausalData {
    fn len(&self) -> usize {
        self.treatment.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Estimation("empty causal dataset".into()));
        }
        if self.outcome.len() != n || self.confounders.iter().any(|c| c.len() != n) {
            return Err(Error::Estimation("causal column lengths differ".into()));
        }
        let treated = self.treatment.iter().filter(|&&t| t == 1).count();
        if treated == 0 || treated == n {
            return Err(Error::Estimation(
                "treatment has no variation (all treated or all control)".into(),
            ));
        }
        Ok(())
    }
}

/// L2-penalized logistic regression by iteratively reweighted least squares
/// (the intercept is not penalized). Returns `[intercept, coefficients...]`.
pub fn logistic_irls(
    columns: &[&[f64]],
    y: &[u8],
    tolerance: f64,
    max_iter: usize,
    ridge: f64,
) -> Result<Vec<f64>> {
    let n = y.len();
    let k = columns.len() + 1;
    if n < k {
        return Err(Error::Estimation("too few observations for logistic fit".into()));
    }
    let design = |row: usize, col: usize| -> f64 {
        if col == 0 {
            1.0
        } else {
            columns[col - 1][row]
        }
    };

    let mut beta = vec![0.0; k];
    for _ in 0..max_iter {
        // Weighted normal equations for the penalized Newton step.
        let mut xtwx = vec![vec![0.0; k]; k];
        let mut score = vec![0.0; k];
        for row in 0..n {
            let eta: f64 = (0..k).map(|c| beta[c] * design(row, c)).sum();
            let p = sigmoid(eta).clamp(1e-10, 1.0 - 1e-10);
            let w = p * (1.0 - p);
            let resid = f64::from(y[row]) - p;
            for i in 0..k {
                let di = design(row, i);
                score[i] += di * resid;
                for j in i..k {
                    xtwx[i][j] += w * di * design(row, j);
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                xtwx[i][j] = xtwx[j][i];
            }
            if i > 0 {
                xtwx[i][i] += ridge;
                score[i] -= ridge * beta[i];
            }
            // Tiny floor keeps quasi-separated fits solvable.
            xtwx[i][i] += 1e-10;
        }
        let delta = linalg::solve(xtwx, score)?;
        let max_step = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for (b, d) in beta.iter_mut().zip(&delta) {
            *b += d;
        }
        if max_step < tolerance {
            break;
        }
    }
    Ok(beta)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AteEstimate {
    /// Inverse-propensity-weighted (normalized) outcome-mean difference.
    pub ate: f64,
    /// Unadjusted difference of outcome means, for comparison.
    pub naive_difference: f64,
    pub propensity_min: f64,
    pub propensity_max: f64,
    /// Propensities pulled back inside the clipping bounds.
    pub clipped: usize,
}

/// Fits a ridge-logistic propensity model of treatment on the confounders
/// and returns the normalized inverse-probability-weighted ATE.
pub fn estimate_ate(data: &CausalData, clip: f64) -> Result<AteEstimate> {
    data.validate()?;
    let columns: Vec<&[f64]> = data.confounders.iter().map(Vec::as_slice).collect();
    let beta = logistic_irls(
        &columns,
        &data.treatment,
        IRLS_TOLERANCE,
        IRLS_MAX_ITER,
        PROPENSITY_RIDGE,
    )?;

    let n = data.len();
    let mut propensity_min = f64::INFINITY;
    let mut propensity_max = f64::NEG_INFINITY;
    let mut clipped = 0;
    let (mut wy1, mut w1, mut wy0, mut w0) = (0.0, 0.0, 0.0, 0.0);
    let (mut sum1, mut n1, mut sum0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for row in 0..n {
        let eta: f64 = beta[0]
            + data
                .confounders
                .iter()
                .enumerate()
                .map(|(j, col)| beta[j + 1] * col[row])
                .sum::<f64>();
        let raw = sigmoid(eta);
        propensity_min = propensity_min.min(raw);
        propensity_max = propensity_max.max(raw);
        let e = raw.clamp(clip, 1.0 - clip);
        if e != raw {
            clipped += 1;
        }
        let y = data.outcome[row];
        if data.treatment[row] == 1 {
            wy1 += y / e;
            w1 += 1.0 / e;
            sum1 += y;
            n1 += 1;
        } else {
            wy0 += y / (1.0 - e);
            w0 += 1.0 / (1.0 - e);
            sum0 += y;
            n0 += 1;
        }
    }
    Ok(AteEstimate {
        ate: wy1 / w1 - wy0 / w0,
        naive_difference: sum1 / n1 as f64 - sum0 / n0 as f64,
        propensity_min,
        propensity_max,
        clipped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefutationMethod {
    RandomCommonCause,
    PlaceboTreatment,
    DataSubset,
}

impl RefutationMethod {
    pub const ALL: [RefutationMethod; 3] = [
        RefutationMethod::RandomCommonCause,
        RefutationMethod::PlaceboTreatment,
        RefutationMethod::DataSubset,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "random_common_cause" => Ok(RefutationMethod::RandomCommonCause),
            "placebo_treatment" => Ok(RefutationMethod::PlaceboTreatment),
            "data_subset" => Ok(RefutationMethod::DataSubset),
            other => Err(Error::Argument(format!("unknown refutation method '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RefutationMethod::RandomCommonCause => "random_common_cause",
            RefutationMethod::PlaceboTreatment => "placebo_treatment",
            RefutationMethod::DataSubset => "data_subset",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RefutationResult {
    pub method: RefutationMethod,
    /// Mean re-estimate over the refutation draws.
    pub new_estimate: f64,
    /// Two-sided p-value of the reference value (original ATE, or zero for
    /// the placebo) within the refutation distribution.
    pub p_value: f64,
    pub runs: usize,
}

/// Re-estimates the ATE under the chosen perturbation and reports how
/// consistent the original estimate is with the perturbed distribution.
pub fn refute(
    data: &CausalData,
    ate: f64,
    method: RefutationMethod,
    seed: u64,
) -> Result<RefutationResult> {
    data.validate()?;
    let n = data.len();
    let mut estimates = Vec::with_capacity(REFUTATION_RUNS);
    for run in 0..REFUTATION_RUNS {
        let mut rng = rng_from(derive_seed(seed, &[method as u64, run as u64]));
        let estimate = match method {
            RefutationMethod::RandomCommonCause => {
                let extra: Vec<f64> =
                    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let mut augmented = data.clone();
                augmented.confounders.push(extra);
                estimate_ate(&augmented, PROPENSITY_CLIP)?.ate
            }
            RefutationMethod::PlaceboTreatment => {
                let mut placebo = data.clone();
                placebo.treatment.shuffle(&mut rng);
                estimate_ate(&placebo, PROPENSITY_CLIP)?.ate
            }
            RefutationMethod::DataSubset => {
                let keep = ((n as f64) * SUBSET_FRACTION).round() as usize;
                let mut index: Vec<usize> = (0..n).collect();
                index.shuffle(&mut rng);
                index.truncate(keep);
                let subset = CausalData {
                    treatment: index.iter().map(|&i| data.treatment[i]).collect(),
                    outcome: index.iter().map(|&i| data.outcome[i]).collect(),
                    confounders: data
                        .confounders
                        .iter()
                        .map(|col| index.iter().map(|&i| col[i]).collect())
                        .collect(),
                };
                estimate_ate(&subset, PROPENSITY_CLIP)?.ate
            }
        };
        estimates.push(estimate);
    }

    let target = match method {
        RefutationMethod::PlaceboTreatment => 0.0,
        _ => ate,
    };
    let center = mean(&estimates);
    let spread = stddev(&estimates);
    let p_value = if spread < 1e-12 {
        1.0
    } else {
        2.0 * (1.0 - normal_cdf((target - center).abs() / spread))
    };
    Ok(RefutationResult {
        method,
        new_estimate: center,
        p_value,
        runs: REFUTATION_RUNS,
    })
}
