use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CoxModel;
use crate::elaboration::{CovariateSnapshot, TteRecord, SNAPSHOT_FIELDS};
use crate::error::{Error, Result};
use crate::univariate::{SurvivalCurve, GRID_YEARS};

fn grid() -> Vec<f64> {
    (0..GRID_YEARS).map(|t| t as f64).collect()
}

fn curve_from(cumhazard: &[f64]) -> SurvivalCurve {
    SurvivalCurve {
        times: grid(),
        survival: cumhazard.iter().map(|h| (-h).exp()).collect(),
        at_risk: None,
        deaths: None,
    }
}

impl CoxModel {
    /// `exp(beta^T x)`; unseen categorical levels are an error.
    pub fn partial_hazard(&self, snap: &CovariateSnapshot) -> Result<f64> {
        Ok(self.linear_predictor(&self.schema.encode_row(snap)?).exp())
    }

    /// Like [`CoxModel::partial_hazard`] but maps unseen levels to the
    /// reference level.
    pub fn partial_hazard_lenient(&self, snap: &CovariateSnapshot) -> f64 {
        self.linear_predictor(&self.schema.encode_row_lenient(snap).0)
            .exp()
    }

    fn cumhazard_scaled(&self, ph: f64) -> Vec<f64> {
        (0..GRID_YEARS)
            .map(|t| self.baseline.at(t as f64) * ph)
            .collect()
    }
}

/// `H(t | x) = H0(t) exp(beta^T x)` at years 0..=20.
pub fn predict_cumhazard(model: &CoxModel, snap: &CovariateSnapshot) -> Result<Vec<f64>> {
    Ok(model.cumhazard_scaled(model.partial_hazard(snap)?))
}

/// `S(t | x) = exp(-H0(t) exp(beta^T x))` at years 0..=20.
pub fn predict_survival(model: &CoxModel, snap: &CovariateSnapshot) -> Result<SurvivalCurve> {
    Ok(curve_from(&predict_cumhazard(model, snap)?))
}

/// Pointwise mean and population standard deviation of survival curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl AveragedCurve {
    pub fn from_curves(curves: &[Vec<f64>]) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::data("no curves to average"));
        }
        let n = curves.len() as f64;
        let mut mean = vec![0.0; GRID_YEARS];
        let mut sd = vec![0.0; GRID_YEARS];
        for t in 0..GRID_YEARS {
            let m = curves.iter().map(|c| c[t]).sum::<f64>() / n;
            let v = curves.iter().map(|c| (c[t] - m).powi(2)).sum::<f64>() / n;
            mean[t] = m.clamp(0.0, 1.0);
            sd[t] = v.sqrt();
        }
        // rounding in the mean can break monotonicity by an ulp
        for t in 1..GRID_YEARS {
            mean[t] = mean[t].min(mean[t - 1]);
        }
        Ok(AveragedCurve {
            times: grid(),
            mean,
            sd,
        })
    }

    pub fn as_curve(&self) -> SurvivalCurve {
        SurvivalCurve {
            times: self.times.clone(),
            survival: self.mean.clone(),
            at_risk: None,
            deaths: None,
        }
    }
}

fn grid_curves(
    model: &CoxModel,
    snaps: impl Iterator<Item = CovariateSnapshot>,
    lenient: bool,
) -> Result<Vec<Vec<f64>>> {
    snaps
        .map(|s| {
            let ph = if lenient {
                model.partial_hazard_lenient(&s)
            } else {
                model.partial_hazard(&s)?
            };
            Ok(model
                .cumhazard_scaled(ph)
                .iter()
                .map(|h| (-h).exp())
                .collect())
        })
        .collect()
}

/// Predict every record and average, marginalizing over the covariates.
pub fn average_survival(model: &CoxModel, records: &[TteRecord]) -> Result<AveragedCurve> {
    AveragedCurve::from_curves(&grid_curves(
        model,
        records.iter().map(|r| r.covariates),
        false,
    )?)
}

/// [`average_survival`] with unseen categorical levels mapped to the reference.
pub fn average_survival_lenient(model: &CoxModel, records: &[TteRecord]) -> Result<AveragedCurve> {
    AveragedCurve::from_curves(&grid_curves(
        model,
        records.iter().map(|r| r.covariates),
        true,
    )?)
}

/// For each level of `covariate`, the average predicted curve over all
/// records with that level substituted into their snapshots.
pub fn conditioned_curves(
    model: &CoxModel,
    records: &[TteRecord],
    covariate: &str,
) -> Result<BTreeMap<i32, AveragedCurve>> {
    if !SNAPSHOT_FIELDS.iter().any(|(n, _)| *n == covariate) {
        return Err(Error::data(format!("unknown covariate '{covariate}'")));
    }
    if records.is_empty() {
        return Err(Error::data("no records to condition"));
    }
    let levels: Vec<i32> = match model.schema.levels.get(covariate) {
        Some(l) => l.clone(),
        None => records
            .iter()
            .map(|r| r.covariates.get(covariate).expect("known field"))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let mut out = BTreeMap::new();
    for level in levels {
        let snaps: Vec<CovariateSnapshot> = records
            .iter()
            .map(|r| {
                let mut s = r.covariates;
                s.set(covariate, level).map(|_| s)
            })
            .collect::<Result<_>>()?;
        out.insert(
            level,
            AveragedCurve::from_curves(&grid_curves(model, snaps.into_iter(), true)?)?,
        );
    }
    Ok(out)
}
