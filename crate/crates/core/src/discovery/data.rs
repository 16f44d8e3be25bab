use crate::error::{Error, Result};

/// Columns of small integer codes, recoded so each column uses the levels
/// `0..levels[j]` in order of the original values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteData {
    pub names: Vec<String>,
    pub columns: Vec<Vec<u8>>,
    pub levels: Vec<usize>,
}

impl DiscreteData {
    pub fn new(names: Vec<String>, columns: Vec<Vec<u8>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::data("number of names and columns differ"));
        }
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::data("columns differ in length"));
        }
        let mut levels = Vec::with_capacity(columns.len());
        let columns = columns
            .into_iter()
            .map(|col| {
                let mut present = [false; 256];
                for &v in &col {
                    present[v as usize] = true;
                }
                let mut code = [0u8; 256];
                let mut k = 0usize;
                for (v, p) in present.iter().enumerate() {
                    if *p {
                        code[v] = k as u8;
                        k += 1;
                    }
                }
                levels.push(k);
                col.into_iter().map(|v| code[v as usize]).collect()
            })
            .collect();
        Ok(DiscreteData {
            names,
            columns,
            levels,
        })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn vars(&self) -> usize {
        self.columns.len()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::data(format!("unknown variable {name}")))
    }

    /// Mixed-radix key of the joint value of `vars` in row `r`.
    pub(crate) fn config_key(&self, vars: &[usize], r: usize) -> u64 {
        vars.iter().fold(0u64, |acc, &v| {
            acc * self.levels[v] as u64 + self.columns[v][r] as u64
        })
    }

    /// Copy keeping only the given columns.
    pub fn select(&self, keep: &[usize]) -> DiscreteData {
        DiscreteData {
            names: keep.iter().map(|&i| self.names[i].clone()).collect(),
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            levels: keep.iter().map(|&i| self.levels[i]).collect(),
        }
    }
}
