//! Non-parametric survival estimators: Kaplan-Meier, Nelson-Aalen and the
//! empirical survival of fully observed ages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of yearly bins used for curve grids: years 0 through 20.
pub const GRID_YEARS: usize = 21;

/// Right-continuous step function `S(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Option<Vec<usize>>,
    pub deaths: Option<Vec<usize>>,
}

/// Right-continuous step function `H(t)` with its jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumHazardCurve {
    pub times: Vec<f64>,
    pub cumhazard: Vec<f64>,
    pub increments: Vec<f64>,
}

fn step_lookup(times: &[f64], values: &[f64], t: f64, before: f64) -> f64 {
    // number of listed times <= t
    let k = times.partition_point(|&x| x <= t);
    if k == 0 {
        before
    } else {
        values[k - 1]
    }
}

impl SurvivalCurve {
    /// `S(t)`; 1 before the first listed time.
    pub fn at(&self, t: f64) -> f64 {
        step_lookup(&self.times, &self.survival, t, 1.0)
    }

    /// Values at integer years 0..=20.
    pub fn on_grid(&self) -> Vec<f64> {
        (0..GRID_YEARS).map(|y| self.at(y as f64)).collect()
    }

    pub fn check(&self) -> Result<()> {
        if self.times.len() != self.survival.len() {
            return Err(Error::data(
                "survival curve: times and values differ in length",
            ));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::data("survival curve: times not strictly increasing"));
        }
        if self.survival.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::data("survival curve: value outside [0,1]"));
        }
        if self.survival.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::data("survival curve: increasing step"));
        }
        Ok(())
    }
}

impl CumHazardCurve {
    /// `H(t)`; 0 before the first listed time.
    pub fn at(&self, t: f64) -> f64 {
        step_lookup(&self.times, &self.cumhazard, t, 0.0)
    }

    pub fn on_grid(&self) -> Vec<f64> {
        (0..GRID_YEARS).map(|y| self.at(y as f64)).collect()
    }

    pub fn check(&self) -> Result<()> {
        if self.times.len() != self.cumhazard.len() || self.times.len() != self.increments.len() {
            return Err(Error::data("cumulative hazard: column lengths differ"));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::data(
                "cumulative hazard: times not strictly increasing",
            ));
        }
        if self.increments.iter().any(|&d| d < 0.0 || !d.is_finite()) {
            return Err(Error::data(
                "cumulative hazard: negative or non-finite increment",
            ));
        }
        if self.cumhazard.first().is_some_and(|&h| h < 0.0)
            || self.cumhazard.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::data("cumulative hazard: decreasing"));
        }
        Ok(())
    }
}

/// Distinct times with the number at risk (duration >= t) and the number of
/// observed events at each.
struct RiskTable {
    times: Vec<f64>,
    at_risk: Vec<usize>,
    deaths: Vec<usize>,
}

fn risk_table(durations: &[f64], observed: &[bool]) -> Result<RiskTable> {
    if durations.len() != observed.len() {
        return Err(Error::data(format!(
            "durations ({}) and observed ({}) differ in length",
            durations.len(),
            observed.len()
        )));
    }
    if durations.is_empty() {
        return Err(Error::data("no survival data"));
    }
    if let Some(d) = durations.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::data(format!("invalid duration {d}")));
    }
    let mut pairs: Vec<(f64, bool)> = durations
        .iter()
        .copied()
        .zip(observed.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut table = RiskTable {
        times: Vec::new(),
        at_risk: Vec::new(),
        deaths: Vec::new(),
    };
    let n = pairs.len();
    let mut i = 0;
    while i < n {
        let t = pairs[i].0;
        let mut j = i;
        let mut d = 0;
        while j < n && pairs[j].0 == t {
            d += usize::from(pairs[j].1);
            j += 1;
        }
        table.times.push(t);
        table.at_risk.push(n - i);
        table.deaths.push(d);
        i = j;
    }
    Ok(table)
}

/// Kaplan-Meier product-limit estimate.
pub fn km_fit(durations: &[f64], observed: &[bool]) -> Result<SurvivalCurve> {
    let table = risk_table(durations, observed)?;
    let mut s = 1.0;
    let survival = table
        .at_risk
        .iter()
        .zip(&table.deaths)
        .map(|(&n, &d)| {
            if d > 0 {
                s *= 1.0 - d as f64 / n as f64;
            }
            s
        })
        .collect();
    Ok(SurvivalCurve {
        times: table.times,
        survival,
        at_risk: Some(table.at_risk),
        deaths: Some(table.deaths),
    })
}

/// Nelson-Aalen cumulative hazard estimate.
pub fn na_fit(durations: &[f64], observed: &[bool]) -> Result<CumHazardCurve> {
    let table = risk_table(durations, observed)?;
    let increments: Vec<f64> = table
        .at_risk
        .iter()
        .zip(&table.deaths)
        .map(|(&n, &d)| d as f64 / n as f64)
        .collect();
    let mut h = 0.0;
    let cumhazard = increments
        .iter()
        .map(|inc| {
            h += inc;
            h
        })
        .collect();
    Ok(CumHazardCurve {
        times: table.times,
        cumhazard,
        increments,
    })
}

/// `S(t) = exp(-H(t))` at the same times.
pub fn survival_from_cumhazard(h: &CumHazardCurve) -> SurvivalCurve {
    SurvivalCurve {
        times: h.times.clone(),
        survival: h.cumhazard.iter().map(|x| (-x).exp()).collect(),
        at_risk: None,
        deaths: None,
    }
}

/// Counts per integer age, from the youngest to the oldest observed age.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<(u32, usize)>,
}

/// Histogram and `1 - ECDF` of fully observed ages. The last value is 0.
pub fn ecdf_survival(ages: &[u32]) -> Result<(Histogram, SurvivalCurve)> {
    let (&lo, &hi) = match (ages.iter().min(), ages.iter().max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::data("no ages to summarise")),
    };
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &a in ages {
        counts[(a - lo) as usize] += 1;
    }
    let n = ages.len();
    let mut cum = 0;
    let mut times = Vec::new();
    let mut survival = Vec::new();
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        cum += c;
        times.push((lo + k as u32) as f64);
        survival.push((n - cum) as f64 / n as f64);
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as u32, c))
        .collect();
    Ok((
        Histogram { bins },
        SurvivalCurve {
            times,
            survival,
            at_risk: None,
            deaths: None,
        },
    ))
}

/// Hazard increments summed per year 0..=20 and scaled so the largest is 1.
/// All-zero input stays all zeros.
pub fn normalized_hazard(h: &CumHazardCurve) -> Vec<f64> {
    let mut bins = [0.0; GRID_YEARS];
    for (&t, &inc) in h.times.iter().zip(&h.increments) {
        let y = t.floor();
        if y >= 0.0 && (y as usize) < GRID_YEARS {
            bins[y as usize] += inc;
        }
    }
    let max = bins.iter().copied().fold(0.0, f64::max);
    let denom = if max > 0.0 { max } else { 1.0 };
    bins.iter().map(|b| b / denom).collect()
}
