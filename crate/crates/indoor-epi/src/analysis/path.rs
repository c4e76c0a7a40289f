//! Recursive path models: equation-wise least squares, effect decomposition
//! along declared arrows, and bias-corrected bootstrap intervals.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};

use super::linalg;
use super::stats::{self, normal_cdf, normal_quantile, quantile};
use super::table::{SampleTable, COLUMNS};

/// Directed acyclic arrow set over the sample-table columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathModel {
    pub arrows: Vec<(String, String)>,
}

impl PathModel {
    pub fn new(arrows: Vec<(String, String)>) -> Result<Self> {
        if arrows.is_empty() {
            return Err(Error::Estimation("path model has no arrows".into()));
        }
        for (from, to) in &arrows {
            for node in [from, to] {
                if !COLUMNS.contains(&node.as_str()) {
                    return Err(Error::Estimation(format!("unknown variable '{node}'")));
                }
            }
            if from == to {
                return Err(Error::Estimation(format!("self-loop on '{from}'")));
            }
        }
        let model = PathModel { arrows };
        model.topological_order()?;
        let sinks = model.sinks();
        if sinks.len() != 1 {
            return Err(Error::Estimation(format!(
                "model must have exactly one outcome, found {sinks:?}"
            )));
        }
        Ok(model)
    }

    /// Structure shared by both transmission models: stopping factors drive
    /// total stop time; all four factors plus total stop time drive the
    /// space deviation; everything drives the outcome.
    fn transmission_arrows(outcome: &str) -> Vec<(String, String)> {
        let mut arrows = vec![
            ("n_stopping".into(), "t_total_stop".into()),
            ("t_stopping".into(), "t_total_stop".into()),
            ("n_crowding".into(), "sigma_spaces".into()),
            ("d_crowding".into(), "sigma_spaces".into()),
            ("n_stopping".into(), "sigma_spaces".into()),
            ("t_stopping".into(), "sigma_spaces".into()),
            ("t_total_stop".into(), "sigma_spaces".into()),
        ];
        for source in ["n_crowding", "d_crowding", "n_stopping", "t_stopping", "t_total_stop", "sigma_spaces"] {
            arrows.push((source.into(), outcome.into()));
        }
        arrows
    }

    /// Outcome: predicted new cases.
    pub fn model_a() -> Self {
        PathModel::new(Self::transmission_arrows("c_new")).expect("built-in model is valid")
    }

    /// Outcome: average exposure risk.
    pub fn model_b() -> Self {
        PathModel::new(Self::transmission_arrows("e_ave")).expect("built-in model is valid")
    }

    /// Reads `{"arrows": ["a -> b", ...]}`.
    pub fn from_json(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            arrows: Vec<String>,
        }
        let text = std::fs::read_to_string(path)?;
        let raw: Raw = serde_json::from_str(&text)?;
        let arrows = raw
            .arrows
            .iter()
            .map(|line| {
                let mut parts = line.split("->");
                match (parts.next(), parts.next(), parts.next()) {
                    (Some(from), Some(to), None) => {
                        Ok((from.trim().to_string(), to.trim().to_string()))
                    }
                    _ => Err(Error::Estimation(format!("bad arrow '{line}'"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        PathModel::new(arrows)
    }

    pub fn to_json(&self, path: &Path) -> Result<()> {
        let arrows: Vec<String> = self
            .arrows
            .iter()
            .map(|(a, b)| format!("{a} -> {b}"))
            .collect();
        std::fs::write(path, serde_json::to_string_pretty(&serde_json::json!({ "arrows": arrows }))?)?;
        Ok(())
    }

    pub fn nodes(&self) -> BTreeSet<&str> {
        self.arrows
            .iter()
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
            .collect()
    }

    fn parents(&self, node: &str) -> Vec<&str> {
        self.arrows
            .iter()
            .filter(|(_, to)| to == node)
            .map(|(from, _)| from.as_str())
            .collect()
    }

    fn children(&self, node: &str) -> Vec<&str> {
        self.arrows
            .iter()
            .filter(|(from, _)| from == node)
            .map(|(_, to)| to.as_str())
            .collect()
    }

    fn sinks(&self) -> Vec<&str> {
        self.nodes()
            .into_iter()
            .filter(|n| self.children(n).is_empty())
            .collect()
    }

    pub fn outcome(&self) -> &str {
        self.sinks()[0]
    }

    pub fn exogenous(&self) -> Vec<&str> {
        self.nodes()
            .into_iter()
            .filter(|n| self.parents(n).is_empty())
            .collect()
    }

    /// One regression per endogenous node, dependent on its parents,
    /// in topological order.
    pub fn equations(&self) -> Vec<(String, Vec<String>)> {
        let order = self.topological_order().expect("validated at construction");
        order
            .into_iter()
            .filter(|n| !self.parents(n).is_empty())
            .map(|n| {
                (
                    n.to_string(),
                    self.parents(&n).iter().map(|s| s.to_string()).collect(),
                )
            })
            .collect()
    }

    fn topological_order(&self) -> Result<Vec<String>> {
        let nodes = self.nodes();
        let mut in_degree: BTreeMap<&str, usize> =
            nodes.iter().map(|&n| (n, self.parents(n).len())).collect();
        let mut queue: Vec<&str> = in_degree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&n, _)| n)
            .collect();
        let mut order = Vec::new();
        while let Some(node) = queue.pop() {
            order.push(node.to_string());
            for child in self.children(node) {
                let d = in_degree.get_mut(child).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push(child);
                }
            }
        }
        if order.len() != nodes.len() {
            return Err(Error::Estimation("path model contains a cycle".into()));
        }
        Ok(order)
    }

    /// All simple directed paths from `source` to the outcome, as node
    /// chains.
    pub fn paths_to_outcome(&self, source: &str) -> Vec<Vec<String>> {
        let mut found = Vec::new();
        let mut chain = vec![source.to_string()];
        self.dfs(source, &mut chain, &mut found);
        found
    }

    fn dfs(&self, node: &str, chain: &mut Vec<String>, found: &mut Vec<Vec<String>>) {
        if node == self.outcome() {
            found.push(chain.clone());
            return;
        }
        for child in self.children(node) {
            chain.push(child.to_string());
            self.dfs(child, chain, found);
            chain.pop();
        }
    }
}

/// Trivial fit indices of a saturated recursive model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitIndices {
    pub chi_square: f64,
    pub df: usize,
    pub p_value: f64,
    pub gfi: f64,
    pub cfi: f64,
    pub rmsea: f64,
}

impl FitIndices {
    fn saturated() -> Self {
        FitIndices {
            chi_square: 0.0,
            df: 0,
            p_value: 1.0,
            gfi: 1.0,
            cfi: 1.0,
            rmsea: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquationFit {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub standardized: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedPathModel {
    pub equations: Vec<EquationFit>,
    pub fit: FitIndices,
}

impl FittedPathModel {
    pub fn edge(&self, from: &str, to: &str) -> Result<(f64, f64)> {
        let eq = self
            .equations
            .iter()
            .find(|e| e.dependent == to)
            .ok_or_else(|| Error::Estimation(format!("no equation for '{to}'")))?;
        let idx = eq
            .regressors
            .iter()
            .position(|r| r == from)
            .ok_or_else(|| Error::Estimation(format!("path {from} -> {to} not in model")))?;
        Ok((eq.coefficients[idx], eq.standardized[idx]))
    }

    /// Product of edge coefficients along a node chain.
    pub fn path_estimate(&self, chain: &[String]) -> Result<(f64, f64)> {
        if chain.len() < 2 {
            return Err(Error::Estimation("a path needs at least two nodes".into()));
        }
        let mut est = 1.0;
        let mut std = 1.0;
        for pair in chain.windows(2) {
            let (e, s) = self.edge(&pair[0], &pair[1])?;
            est *= e;
            std *= s;
        }
        Ok((est, std))
    }
}

/// Fits every equation of the model by OLS on the given table.
pub fn fit_path_model(table: &SampleTable, model: &PathModel) -> Result<FittedPathModel> {
    if table.is_empty() {
        return Err(Error::Estimation("empty table".into()));
    }
    let mut equations = Vec::new();
    for (dependent, regressors) in model.equations() {
        let y = table.column(&dependent)?;
        let columns: Vec<Vec<f64>> = regressors
            .iter()
            .map(|r| table.column(r))
            .collect::<Result<_>>()?;
        let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
        let (intercept, coefficients) = linalg::ols(&refs, &y)?;
        let sd_y = stats::stddev(&y);
        if sd_y == 0.0 {
            return Err(Error::ConstantColumn(dependent));
        }
        let standardized = coefficients
            .iter()
            .zip(&columns)
            .map(|(c, col)| c * stats::stddev(col) / sd_y)
            .collect();
        equations.push(EquationFit {
            dependent,
            regressors,
            intercept,
            coefficients,
            standardized,
        });
    }
    Ok(FittedPathModel {
        equations,
        fit: FitIndices::saturated(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectKind {
    Direct,
    Indirect,
    Total,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub independent: String,
    pub dependent: String,
    pub kind: EffectKind,
    /// Node chain for direct/indirect rows; empty for totals.
    pub path: Vec<String>,
    pub estimate: f64,
    pub standardized: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EffectReport {
    pub outcome: String,
    pub effects: Vec<EffectEstimate>,
}

/// Direct, per-path indirect, and total effects of every exogenous variable
/// on the outcome. Totals are the sums of all declared paths.
pub fn decompose_effects(fitted: &FittedPathModel, model: &PathModel) -> Result<EffectReport> {
    let outcome = model.outcome().to_string();
    let mut effects = Vec::new();
    for source in model.exogenous() {
        let mut total = 0.0;
        let mut total_std = 0.0;
        for chain in model.paths_to_outcome(source) {
            let (est, std) = fitted.path_estimate(&chain)?;
            total += est;
            total_std += std;
            effects.push(EffectEstimate {
                independent: source.to_string(),
                dependent: outcome.clone(),
                kind: if chain.len() == 2 {
                    EffectKind::Direct
                } else {
                    EffectKind::Indirect
                },
                path: chain,
                estimate: est,
                standardized: std,
            });
        }
        effects.push(EffectEstimate {
            independent: source.to_string(),
            dependent: outcome.clone(),
            kind: EffectKind::Total,
            path: Vec::new(),
            estimate: total,
            standardized: total_std,
        });
    }
    Ok(EffectReport { outcome, effects })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BootstrapEffect {
    pub independent: String,
    pub kind: EffectKind,
    pub path: Vec<String>,
    pub estimate: f64,
    pub standardized: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub significant: bool,
}

impl BootstrapEffect {
    /// Table-style significance marker (*** means p < 0.01).
    pub fn stars(&self) -> &'static str {
        if self.p_value < 0.01 {
            "***"
        } else {
            ""
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub outcome: String,
    pub resamples: usize,
    pub ci_percent: f64,
    pub fit: FitIndices,
    pub effects: Vec<BootstrapEffect>,
}

const RESAMPLE_RETRIES: usize = 20;

/// Row-resampling bootstrap of the effect decomposition with bias-corrected
/// percentile intervals. Resamples draw from per-index RNG streams, so the
/// result does not depend on evaluation order.
pub fn bootstrap_effects(
    table: &SampleTable,
    model: &PathModel,
    resamples: usize,
    ci_percent: f64,
    seed: u64,
) -> Result<BootstrapReport> {
    if resamples < 100 {
        return Err(Error::Estimation("need at least 100 resamples".into()));
    }
    if !(0.0 < ci_percent && ci_percent < 100.0) {
        return Err(Error::Estimation("confidence level must be in (0, 100)".into()));
    }
    let fitted = fit_path_model(table, model)?;
    let point = decompose_effects(&fitted, model)?;
    let n = table.len();

    let replicate_estimates: Vec<Result<Vec<(f64, f64)>>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            for attempt in 0..RESAMPLE_RETRIES {
                let mut rng = rng_from(derive_seed(seed, &[b as u64, attempt as u64]));
                let rows = (0..n)
                    .map(|_| table.rows[rng.random_range(0..n)])
                    .collect();
                let resampled = SampleTable { rows };
                if let Ok(f) = fit_path_model(&resampled, model) {
                    let report = decompose_effects(&f, model)?;
                    return Ok(report
                        .effects
                        .iter()
                        .map(|e| (e.estimate, e.standardized))
                        .collect());
                }
            }
            Err(Error::Estimation(
                "bootstrap resample stayed degenerate after bounded retries".into(),
            ))
        })
        .collect();

    let mut per_effect: Vec<Vec<f64>> = vec![Vec::with_capacity(resamples); point.effects.len()];
    for replicate in replicate_estimates {
        let replicate = replicate?;
        for (k, (est, _)) in replicate.into_iter().enumerate() {
            per_effect[k].push(est);
        }
    }

    let alpha = (1.0 - ci_percent / 100.0) / 2.0;
    let effects = point
        .effects
        .iter()
        .zip(per_effect.into_iter())
        .map(|(effect, mut samples)| {
            samples.sort_by(f64::total_cmp);
            let (ci_low, ci_high, p_value) =
                bias_corrected_interval(&samples, effect.estimate, alpha);
            BootstrapEffect {
                independent: effect.independent.clone(),
                kind: effect.kind,
                path: effect.path.clone(),
                estimate: effect.estimate,
                standardized: effect.standardized,
                ci_low,
                ci_high,
                p_value,
                significant: ci_low > 0.0 || ci_high < 0.0,
            }
        })
        .collect();

    Ok(BootstrapReport {
        outcome: point.outcome,
        resamples,
        ci_percent,
        fit: fitted.fit,
        effects,
    })
}

/// Bias-corrected percentile interval and the two-sided p-value obtained by
/// inverting it.
fn bias_corrected_interval(sorted: &[f64], point: f64, alpha: f64) -> (f64, f64, f64) {
    let b = sorted.len() as f64;
    let clamp = |fraction: f64| fraction.clamp(0.5 / b, 1.0 - 0.5 / b);
    let below_point = sorted.iter().filter(|&&v| v < point).count() as f64 / b;
    let z0 = normal_quantile(clamp(below_point));

    let lo_q = normal_cdf(2.0 * z0 + normal_quantile(alpha));
    let hi_q = normal_cdf(2.0 * z0 + normal_quantile(1.0 - alpha));
    let lo = quantile(sorted, lo_q);
    let hi = quantile(sorted, hi_q);

    let below_zero = clamp(sorted.iter().filter(|&&v| v < 0.0).count() as f64 / b);
    let beta = normal_cdf(normal_quantile(below_zero) - 2.0 * z0);
    let p = (2.0 * beta.min(1.0 - beta)).clamp(0.0, 1.0);
    (lo, hi, p)
}
