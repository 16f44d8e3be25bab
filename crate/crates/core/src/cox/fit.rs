use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::encode::{encode, Schema};
use super::likelihood::neg_log_partial_likelihood;
use crate::elaboration::TteRecord;
use crate::error::{Error, Result};
use crate::univariate::CumHazardCurve;

pub const DEFAULT_L2: f64 = 0.1;
pub const MAX_ITERATIONS: usize = 100;
pub const GRADIENT_TOLERANCE: f64 = 1e-7;
pub const RELATIVE_TOLERANCE: f64 = 1e-9;
/// Coefficients beyond this magnitude are taken as separation.
pub const MAX_ABS_BETA: f64 = 20.0;

const ROUNDOFF: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub neg_log_likelihood: f64,
    pub gradient_norm: f64,
    /// Objective at the start and after every accepted step.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub schema: Schema,
    pub beta: Vec<f64>,
    pub baseline: CumHazardCurve,
    pub diagnostics: FitDiagnostics,
    pub l2_scale: f64,
    pub warnings: Vec<String>,
}

impl CoxModel {
    pub fn coefficients(&self) -> Vec<(String, f64)> {
        self.schema
            .column_names()
            .into_iter()
            .zip(self.beta.iter().copied())
            .collect()
    }

    /// `beta^T x` for an encoded row.
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.beta).map(|(x, b)| x * b).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct View<'a> {
            beta: Vec<(String, f64)>,
            l2_scale: f64,
            diagnostics: &'a FitDiagnostics,
            baseline: &'a CumHazardCurve,
            schema: &'a Schema,
            warnings: &'a [String],
        }
        Ok(serde_json::to_string_pretty(&View {
            beta: self.coefficients(),
            l2_scale: self.l2_scale,
            diagnostics: &self.diagnostics,
            baseline: &self.baseline,
            schema: &self.schema,
            warnings: &self.warnings,
        })?)
    }
}

/// Penalized Newton-Raphson with step halving, starting from zero.
pub fn fit_matrix(
    x: &DMatrix<f64>,
    durations: &[f64],
    observed: &[bool],
    l2: f64,
    names: &[String],
) -> Result<(DVector<f64>, FitDiagnostics)> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::config(format!(
            "l2 scale {l2} must be a non-negative number"
        )));
    }
    let p = x.ncols();
    let mut beta = DVector::zeros(p);
    let (mut value, mut grad, mut hess) =
        neg_log_partial_likelihood(&beta, x, durations, observed, l2)?;
    let mut history = vec![value];
    let diagnostics =
        |iterations: usize, value: f64, grad: &DVector<f64>, history: &[f64]| FitDiagnostics {
            iterations,
            neg_log_likelihood: value,
            gradient_norm: grad.amax(),
            history: history.to_vec(),
        };

    let separated = |beta: &DVector<f64>| -> Result<()> {
        match (0..p).find(|&j| beta[j].abs() > MAX_ABS_BETA) {
            Some(j) => Err(Error::numerical(format!(
                "coefficient of {} diverges (|beta| > {MAX_ABS_BETA}); the covariate separates the data",
                names.get(j).map_or("?", String::as_str)
            ))),
            None => Ok(()),
        }
    };

    let mut stalled = 0;
    for iteration in 1..=MAX_ITERATIONS {
        if p == 0 || grad.amax() < GRADIENT_TOLERANCE {
            separated(&beta)?;
            return Ok((beta, diagnostics(iteration - 1, value, &grad, &history)));
        }
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => hess
                .clone()
                .lu()
                .solve(&grad)
                .ok_or_else(|| Error::numerical("singular Hessian in Newton step"))?,
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate = &beta - &step * scale;
            if let Ok(next) = neg_log_partial_likelihood(&candidate, x, durations, observed, l2) {
                // within a few ulps of the optimum the values stop being
                // comparable, so a falling gradient decides instead
                let flat = (next.0 - value).abs() <= ROUNDOFF * value.abs().max(1.0);
                if next.0.is_finite() && (next.0 <= value || flat && next.1.amax() < grad.amax()) {
                    accepted = Some((candidate, next));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((candidate, (next_value, next_grad, next_hess))) = accepted else {
            // no descent left along the Newton direction
            if grad.amax() < 1e-4 {
                separated(&beta)?;
                return Ok((beta, diagnostics(iteration - 1, value, &grad, &history)));
            }
            return Err(Error::numerical(format!(
                "line search failed at iteration {iteration} (objective {value}, gradient {})",
                grad.amax()
            )));
        };
        let change = (value - next_value).abs();
        beta = candidate;
        value = next_value;
        grad = next_grad;
        hess = next_hess;
        history.push(value);
        // a flat objective alone ends the fit only once it stays flat, so
        // Newton gets a chance to bring the gradient under tolerance first
        stalled = if change <= RELATIVE_TOLERANCE * value.abs() {
            stalled + 1
        } else {
            0
        };
        if grad.amax() < GRADIENT_TOLERANCE || stalled >= 3 {
            separated(&beta)?;
            return Ok((beta, diagnostics(iteration, value, &grad, &history)));
        }
    }
    separated(&beta)?;
    Err(Error::numerical(format!(
        "no convergence after {MAX_ITERATIONS} iterations (objective {value}, gradient {})",
        grad.amax()
    )))
}

/// Breslow estimate `H0(t) = sum_{t_i <= t} d_i / sum_{T_j >= t_i} exp(eta_j)`.
pub fn breslow_baseline(eta: &[f64], durations: &[f64], observed: &[bool]) -> CumHazardCurve {
    let mut times: Vec<f64> = durations
        .iter()
        .zip(observed)
        .filter(|(_, &o)| o)
        .map(|(&t, _)| t)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut cumhazard = Vec::with_capacity(times.len());
    let mut increments = Vec::with_capacity(times.len());
    let mut total = 0.0;
    for &t in &times {
        let deaths = durations
            .iter()
            .zip(observed)
            .filter(|(&d, &o)| o && d == t)
            .count() as f64;
        let risk: f64 = durations
            .iter()
            .zip(eta)
            .filter(|(&d, _)| d >= t)
            .map(|(_, &e)| e.exp())
            .sum();
        let inc = deaths / risk;
        total += inc;
        increments.push(inc);
        cumhazard.push(total);
    }
    CumHazardCurve {
        times,
        cumhazard,
        increments,
    }
}

/// Fit a Cox model to time-to-event records.
pub fn fit_cox(records: &[TteRecord], l2: f64) -> Result<CoxModel> {
    if records.len() < 2 {
        return Err(Error::data(format!(
            "need at least 2 records, got {}",
            records.len()
        )));
    }
    if !records.iter().any(|r| r.observed) {
        return Err(Error::data("no uncensored records"));
    }
    let design = encode(records)?;
    let durations: Vec<f64> = records.iter().map(|r| r.duration as f64).collect();
    let observed: Vec<bool> = records.iter().map(|r| r.observed).collect();
    let names = design.schema.column_names();
    let (beta, diagnostics) = fit_matrix(&design.x, &durations, &observed, l2, &names)?;
    let eta: Vec<f64> = (&design.x * &beta).iter().copied().collect();
    Ok(CoxModel {
        baseline: breslow_baseline(&eta, &durations, &observed),
        schema: design.schema,
        beta: beta.iter().copied().collect(),
        diagnostics,
        l2_scale: l2,
        warnings: design.warnings,
    })
}
