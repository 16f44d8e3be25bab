use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::calendar::Event;
use crate::cox::AveragedCurve;
use crate::discovery::MixedGraph;
use crate::error::{Error, Result};
use crate::univariate::{normalized_hazard, CumHazardCurve, Histogram, SurvivalCurve, GRID_YEARS};

/// One fitted (or failed) transition pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub cause: Event,
    pub effect: Event,
    pub sample_size: usize,
    pub c_index_train: Option<f64>,
    pub c_index_test: Option<f64>,
    /// `"ok"` or `"failed: <reason>"`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub algorithm: String,
    pub graph: String,
    pub same_mec: Option<bool>,
    pub persons: usize,
    pub pair_observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
    pub metadata: RunMetadata,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

impl FitReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("Cause,Effect,Sample size,C-index train,C-index test,Status\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.cause,
                r.effect,
                r.sample_size,
                fmt_opt(r.c_index_train),
                fmt_opt(r.c_index_test),
                r.status.replace(',', ";")
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Grid values of one edge: survival and normalized hazard at years 0..=20.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCurves {
    pub survival: Vec<f64>,
    pub hazard: Vec<f64>,
}

impl EdgeCurves {
    pub fn from_fits(km: &SurvivalCurve, na: &CumHazardCurve) -> Self {
        EdgeCurves {
            survival: km.on_grid(),
            hazard: normalized_hazard(na),
        }
    }
}

/// One row per ordered edge (undirected edges in both directions) with 21
/// survival and 21 normalized-hazard values.
pub fn emit_edge_map(
    graph: &MixedGraph,
    curves: &BTreeMap<(String, String), EdgeCurves>,
) -> Result<String> {
    let mut edges: Vec<(String, String)> = graph.directed.iter().cloned().collect();
    for (a, b) in &graph.undirected {
        edges.push((a.clone(), b.clone()));
        edges.push((b.clone(), a.clone()));
    }
    edges.sort();
    let mut s = String::from("cause,effect");
    for t in 0..GRID_YEARS {
        let _ = write!(s, ",S{t}");
    }
    for t in 0..GRID_YEARS {
        let _ = write!(s, ",h{t}");
    }
    s.push('\n');
    for (a, b) in edges {
        let c = curves
            .get(&(a.clone(), b.clone()))
            .ok_or_else(|| Error::data(format!("no curve for edge {a} -> {b}")))?;
        if c.survival.len() != GRID_YEARS || c.hazard.len() != GRID_YEARS {
            return Err(Error::data(format!(
                "curve for edge {a} -> {b} does not have {GRID_YEARS} values"
            )));
        }
        let _ = write!(s, "{a},{b}");
        for v in c.survival.iter().chain(&c.hazard) {
            let _ = write!(s, ",{v:.6}");
        }
        s.push('\n');
    }
    Ok(s)
}

/// `t,S` on the yearly grid.
pub fn survival_csv(curve: &SurvivalCurve) -> String {
    let mut s = String::from("t,S\n");
    for (t, v) in curve.on_grid().iter().enumerate() {
        let _ = writeln!(s, "{t},{v:.6}");
    }
    s
}

/// `t,H,increment,normalized` on the yearly grid.
pub fn cumhazard_csv(curve: &CumHazardCurve) -> String {
    let h = curve.on_grid();
    let norm = normalized_hazard(curve);
    let mut s = String::from("t,H,increment,normalized\n");
    for t in 0..GRID_YEARS {
        let inc = if t == 0 { h[0] } else { h[t] - h[t - 1] };
        let _ = writeln!(s, "{t},{:.6},{inc:.6},{:.6}", h[t], norm[t]);
    }
    s
}

/// `t,mean,sd`.
pub fn averaged_csv(curve: &AveragedCurve) -> String {
    let mut s = String::from("t,mean,sd\n");
    for ((t, m), sd) in curve.times.iter().zip(&curve.mean).zip(&curve.sd) {
        let _ = writeln!(s, "{t},{m:.6},{sd:.6}");
    }
    s
}

/// `level,t,mean,sd`, one block per covariate level.
pub fn conditioned_csv(curves: &BTreeMap<i32, AveragedCurve>) -> String {
    let mut s = String::from("level,t,mean,sd\n");
    for (level, c) in curves {
        for ((t, m), sd) in c.times.iter().zip(&c.mean).zip(&c.sd) {
            let _ = writeln!(s, "{level},{t},{m:.6},{sd:.6}");
        }
    }
    s
}

/// `age,count,S`.
pub fn ecdf_csv(hist: &Histogram, curve: &SurvivalCurve) -> String {
    let mut s = String::from("age,count,S\n");
    for &(age, count) in &hist.bins {
        let _ = writeln!(s, "{age},{count},{:.6}", curve.at(age as f64));
    }
    s
}
