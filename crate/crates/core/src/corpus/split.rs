use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, LabeledNote};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            seed: 42,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Seeded train/test partition. Both halves keep the input order.
///
/// The train size is `round(train_fraction * n)`. Under stratification each
/// class receives the floor of its share and the leftover slots go to the
/// classes with the largest fractional remainders, so no class deviates from
/// the requested fraction by more than one note.
pub fn split(
    labeled: &[LabeledNote],
    spec: &SplitSpec,
) -> Result<(Vec<LabeledNote>, Vec<LabeledNote>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_train = vec![false; labeled.len()];

    if spec.stratified {
        let mut classes: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
        for (i, n) in labeled.iter().enumerate() {
            classes.entry(n.label).or_default().push(i);
        }
        for (label, members) in &classes {
            if members.len() < 2 {
                return Err(Error::ClassTooSmall {
                    label: label.to_string(),
                    count: members.len(),
                });
            }
        }
        let total = (spec.train_fraction * labeled.len() as f64).round() as usize;
        let mut quota: Vec<(Label, usize, f64)> = classes
            .iter()
            .map(|(&label, m)| {
                let exact = spec.train_fraction * m.len() as f64;
                (label, exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let assigned: usize = quota.iter().map(|q| q.1).sum();
        let mut order: Vec<usize> = (0..quota.len()).collect();
        order.sort_by(|&a, &b| quota[b].2.total_cmp(&quota[a].2).then(a.cmp(&b)));
        for &k in order.iter().take(total.saturating_sub(assigned)) {
            quota[k].1 += 1;
        }
        for (label, take, _) in quota {
            let mut members = classes[&label].clone();
            members.shuffle(&mut rng);
            for &i in &members[..take] {
                in_train[i] = true;
            }
        }
    } else {
        let take = (spec.train_fraction * labeled.len() as f64).round() as usize;
        let mut all: Vec<usize> = (0..labeled.len()).collect();
        all.shuffle(&mut rng);
        for &i in &all[..take] {
            in_train[i] = true;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (note, keep) in labeled.iter().zip(in_train) {
        if keep {
            train.push(note.clone());
        } else {
            test.push(note.clone());
        }
    }
    Ok((train, test))
}
