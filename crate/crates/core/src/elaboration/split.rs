use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TteRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Vec<TteRecord>,
    pub test: Vec<TteRecord>,
    pub strata: String,
}

/// Split records into train and test within each (age group, nationality)
/// stratum. Each stratum is shuffled with the seeded generator and cut at
/// `round(train_frac * n)`; both halves keep the input order.
pub fn stratified_split(records: &[TteRecord], train_frac: f64, seed: u64) -> Result<SplitDataset> {
    if records.is_empty() {
        return Err(Error::data("cannot split an empty dataset"));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::config(format!(
            "train fraction {train_frac} outside (0,1)"
        )));
    }
    let mut strata: BTreeMap<(u8, u8), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        strata
            .entry((r.covariates.age_group, r.covariates.nationality))
            .or_default()
            .push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; records.len()];
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        let cut = (train_frac * members.len() as f64).round() as usize;
        for &i in &members[..cut] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = records.iter().zip(&in_train).partition(|(_, &t)| t);
    Ok(SplitDataset {
        train: train.into_iter().map(|(r, _)| r.clone()).collect(),
        test: test.into_iter().map(|(r, _)| r.clone()).collect(),
        strata: "age_group x nationality".into(),
    })
}
