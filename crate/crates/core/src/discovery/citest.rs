use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::DiscreteData;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub independent: bool,
}

/// Decides conditional independence of two variables given a set.
pub trait CiOracle {
    fn independent(&self, x: usize, y: usize, given: &[usize]) -> Result<bool>;
}

/// G² likelihood-ratio test of `x ⊥ y | given`.
///
/// The statistic is accumulated over every observed configuration of the
/// conditioning set; each configuration contributes
/// `(levels of x seen - 1) * (levels of y seen - 1)` degrees of freedom.
pub fn ci_test(
    data: &DiscreteData,
    x: usize,
    y: usize,
    given: &[usize],
    alpha: f64,
) -> Result<CiTestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha {alpha} outside (0,1)")));
    }
    let nvars = data.vars();
    if x >= nvars || y >= nvars || given.iter().any(|&s| s >= nvars) {
        return Err(Error::data("variable index out of range"));
    }
    if x == y || given.contains(&x) || given.contains(&y) {
        return Err(Error::data(
            "x, y and the conditioning set must be disjoint",
        ));
    }
    let rows = data.rows();
    if rows == 0 {
        return Err(Error::data("no observations"));
    }
    let (lx, ly) = (data.levels[x], data.levels[y]);
    let cells = lx * ly;
    let mut tables: HashMap<u64, Vec<u32>> = HashMap::new();
    for r in 0..rows {
        let key = data.config_key(given, r);
        let t = tables.entry(key).or_insert_with(|| vec![0; cells]);
        t[data.columns[x][r] as usize * ly + data.columns[y][r] as usize] += 1;
    }

    let mut g2 = 0.0;
    let mut dof = 0usize;
    let mut keys: Vec<&u64> = tables.keys().collect();
    keys.sort_unstable();
    for key in keys {
        let t = &tables[key];
        let row: Vec<f64> = (0..lx)
            .map(|i| t[i * ly..(i + 1) * ly].iter().map(|&c| c as f64).sum())
            .collect();
        let col: Vec<f64> = (0..ly)
            .map(|j| (0..lx).map(|i| t[i * ly + j] as f64).sum())
            .collect();
        let total: f64 = row.iter().sum();
        for i in 0..lx {
            for j in 0..ly {
                let o = t[i * ly + j] as f64;
                if o > 0.0 {
                    let e = row[i] * col[j] / total;
                    g2 += o * (o / e).ln();
                }
            }
        }
        let rx = row.iter().filter(|&&v| v > 0.0).count();
        let ry = col.iter().filter(|&&v| v > 0.0).count();
        dof += (rx - 1) * (ry - 1);
    }
    let statistic = (2.0 * g2).max(0.0);
    let p_value = if dof == 0 {
        1.0
    } else {
        let chi = ChiSquared::new(dof as f64).map_err(|e| Error::numerical(e.to_string()))?;
        chi.sf(statistic).clamp(0.0, 1.0)
    };
    Ok(CiTestResult {
        statistic,
        dof,
        p_value,
        independent: p_value > alpha,
    })
}

/// [`ci_test`] at a fixed level, usable as a PC oracle.
pub struct GTest<'a> {
    pub data: &'a DiscreteData,
    pub alpha: f64,
}

impl CiOracle for GTest<'_> {
    fn independent(&self, x: usize, y: usize, given: &[usize]) -> Result<bool> {
        Ok(ci_test(self.data, x, y, given, self.alpha)?.independent)
    }
}
