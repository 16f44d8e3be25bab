use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::elaboration::{CovariateKind, CovariateSnapshot, TteRecord, SNAPSHOT_FIELDS};
use crate::error::{Error, Result};

/// How one design column is derived from a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    /// 1 when the covariate equals `level`, else 0.
    Indicator { covariate: String, level: i32 },
    /// `(value - mean) / sd`.
    Standardized {
        covariate: String,
        mean: f64,
        sd: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub encoding: Encoding,
}

/// Column layout learned from training snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
    /// Observed levels of every categorical covariate, reference first.
    pub levels: BTreeMap<String, Vec<i32>>,
    /// Covariates without variation in the training data.
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub schema: Schema,
    /// One row per record.
    pub x: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl Schema {
    /// Learn the encoding from snapshots. Returns the schema and warnings
    /// about dropped covariates.
    pub fn fit(snapshots: &[CovariateSnapshot]) -> Result<(Schema, Vec<String>)> {
        if snapshots.is_empty() {
            return Err(Error::data("cannot encode an empty record set"));
        }
        let mut columns = Vec::new();
        let mut levels = BTreeMap::new();
        let mut dropped = Vec::new();
        let mut warnings = Vec::new();
        for (name, kind) in SNAPSHOT_FIELDS {
            let values: Vec<i32> = snapshots
                .iter()
                .map(|s| s.get(name).expect("known field"))
                .collect();
            match kind {
                CovariateKind::Categorical => {
                    let seen: Vec<i32> = values
                        .iter()
                        .copied()
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    if seen.len() < 2 {
                        dropped.push(name.to_string());
                        warnings.push(format!("covariate {name} is constant and was dropped"));
                    }
                    for &level in &seen[1..] {
                        columns.push(Column {
                            name: format!("{name}={level}"),
                            encoding: Encoding::Indicator {
                                covariate: name.to_string(),
                                level,
                            },
                        });
                    }
                    levels.insert(name.to_string(), seen);
                }
                CovariateKind::Discrete => {
                    let n = values.len() as f64;
                    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
                    let ss: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
                    let sd = if values.len() > 1 {
                        (ss / (n - 1.0)).sqrt()
                    } else {
                        0.0
                    };
                    if sd == 0.0 {
                        dropped.push(name.to_string());
                        warnings.push(format!("covariate {name} is constant and was dropped"));
                        continue;
                    }
                    columns.push(Column {
                        name: name.to_string(),
                        encoding: Encoding::Standardized {
                            covariate: name.to_string(),
                            mean,
                            sd,
                        },
                    });
                }
            }
        }
        Ok((
            Schema {
                columns,
                levels,
                dropped,
            },
            warnings,
        ))
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    fn encode_with(
        &self,
        snap: &CovariateSnapshot,
        lenient: bool,
    ) -> Result<(Vec<f64>, Vec<String>)> {
        let mut subst = *snap;
        let mut notes = Vec::new();
        for (name, levels) in &self.levels {
            let v = snap.get(name).expect("known field");
            if !levels.contains(&v) {
                if !lenient {
                    return Err(Error::data(format!("unseen level {v} of covariate {name}")));
                }
                notes.push(format!(
                    "unseen level {v} of covariate {name} mapped to reference {}",
                    levels[0]
                ));
                subst.set(name, levels[0])?;
            }
        }
        let row = self
            .columns
            .iter()
            .map(|c| match &c.encoding {
                Encoding::Indicator { covariate, level } => {
                    f64::from(u8::from(subst.get(covariate) == Some(*level)))
                }
                Encoding::Standardized {
                    covariate,
                    mean,
                    sd,
                } => (subst.get(covariate).expect("known field") as f64 - mean) / sd,
            })
            .collect();
        Ok((row, notes))
    }

    /// Encode one snapshot; an unseen categorical level is an error.
    pub fn encode_row(&self, snap: &CovariateSnapshot) -> Result<Vec<f64>> {
        self.encode_with(snap, false).map(|(r, _)| r)
    }

    /// Encode one snapshot, mapping unseen categorical levels to the
    /// reference level. Also returns a note per substitution.
    pub fn encode_row_lenient(&self, snap: &CovariateSnapshot) -> (Vec<f64>, Vec<String>) {
        self.encode_with(snap, true)
            .expect("lenient encoding cannot fail")
    }

    /// Named covariate values recovered from an encoded row. Dropped
    /// covariates are absent.
    pub fn decode_row(&self, row: &[f64]) -> Result<BTreeMap<String, f64>> {
        if row.len() != self.width() {
            return Err(Error::data(format!(
                "row has {} values, schema has {}",
                row.len(),
                self.width()
            )));
        }
        let mut out = BTreeMap::new();
        for (name, levels) in &self.levels {
            if !self.dropped.contains(name) {
                out.insert(name.clone(), levels[0] as f64);
            }
        }
        for (c, &v) in self.columns.iter().zip(row) {
            match &c.encoding {
                Encoding::Indicator { covariate, level } => {
                    if v > 0.5 {
                        out.insert(covariate.clone(), *level as f64);
                    }
                }
                Encoding::Standardized {
                    covariate,
                    mean,
                    sd,
                } => {
                    out.insert(covariate.clone(), v * sd + mean);
                }
            }
        }
        Ok(out)
    }
}

/// Design matrix of the records' covariate snapshots.
pub fn encode(records: &[TteRecord]) -> Result<DesignMatrix> {
    let snaps: Vec<CovariateSnapshot> = records.iter().map(|r| r.covariates).collect();
    let (schema, warnings) = Schema::fit(&snaps)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let p = schema.width();
    let mut x = DMatrix::zeros(snaps.len(), p);
    for (i, s) in snaps.iter().enumerate() {
        let row = schema.encode_row(s)?;
        for (j, v) in row.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(DesignMatrix {
        schema,
        x,
        warnings,
    })
}
