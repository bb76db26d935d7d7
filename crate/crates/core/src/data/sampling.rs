use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::Dataset;

/// Image ids for one measurement episode.
///
/// `set_a` is fixed across episodes; everything else is re-drawn from the
/// episode seed. The calibration reserves are empty unless a held-out
/// calibration check was requested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSets {
    pub set_a: Vec<String>,
    pub set_b: Vec<String>,
    pub set_c: Vec<String>,
    #[serde(default)]
    pub calibration_seen: Vec<String>,
    #[serde(default)]
    pub calibration_unseen: Vec<String>,
}

/// Draws B and C uniformly without replacement from `dataset \ A`.
pub fn sample_episode_sets(
    dataset: &Dataset,
    set_a: &[String],
    n: usize,
    episode_seed: u64,
) -> Result<EpisodeSets> {
    EpisodeSampler::new(dataset, set_a, n)?.sample(episode_seed)
}

/// Reusable episode sampler with optional separate unseen pool and
/// held-out calibration reserves.
#[derive(Debug, Clone)]
pub struct EpisodeSampler<'a> {
    set_a: Vec<String>,
    seen_pool: Vec<&'a str>,
    unseen_pool: Option<Vec<&'a str>>,
    n: usize,
    reserve: usize,
}

impl<'a> EpisodeSampler<'a> {
    pub fn new(dataset: &'a Dataset, set_a: &[String], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("set size n must be at least 1".into()));
        }
        if set_a.len() != n {
            return Err(Error::Config(format!(
                "set A has {} images, expected n = {n}",
                set_a.len()
            )));
        }
        let a: HashSet<&str> = set_a.iter().map(String::as_str).collect();
        if a.len() != set_a.len() {
            return Err(Error::Config("set A contains duplicate ids".into()));
        }
        if let Some(missing) = set_a.iter().find(|id| !dataset.contains(id)) {
            return Err(Error::Config(format!("set A id {missing} not in dataset")));
        }
        let seen_pool = dataset.ids().filter(|id| !a.contains(id)).collect();
        let sampler = Self {
            set_a: set_a.to_vec(),
            seen_pool,
            unseen_pool: None,
            n,
            reserve: 0,
        };
        Ok(sampler)
    }

    /// Draw C (and the unseen calibration reserve) from a separate dataset.
    pub fn with_unseen_pool(mut self, dataset: &Dataset, unseen: &'a Dataset) -> Result<Self> {
        if let Some(clash) = unseen.ids().find(|id| dataset.contains(id)) {
            return Err(Error::Config(format!(
                "unseen pool id {clash} also appears in the main dataset"
            )));
        }
        if unseen.shape() != dataset.shape() {
            return Err(Error::Data(format!(
                "unseen pool images are {:?}, dataset images are {:?}",
                unseen.shape(),
                dataset.shape()
            )));
        }
        self.unseen_pool = Some(unseen.ids().collect());
        Ok(self)
    }

    /// Reserve `k` extra seen and `k` unseen images for calibration.
    pub fn with_calibration_reserve(mut self, k: usize) -> Self {
        self.reserve = k;
        self
    }

    /// Checks that the pools can supply every set.
    pub fn validate(&self) -> Result<()> {
        let (n, r) = (self.n, self.reserve);
        match &self.unseen_pool {
            None => {
                let need = 2 * n + 2 * r;
                if self.seen_pool.len() < need {
                    return Err(Error::Data(format!(
                        "dataset too small: need {} images (A plus {need} for B, C and reserves), have {}",
                        n + need,
                        n + self.seen_pool.len()
                    )));
                }
            }
            Some(unseen) => {
                if self.seen_pool.len() < n + r {
                    return Err(Error::Data(format!(
                        "dataset too small: need {} images besides A, have {}",
                        n + r,
                        self.seen_pool.len()
                    )));
                }
                if unseen.len() < n + r {
                    return Err(Error::Data(format!(
                        "unseen pool too small: need {}, have {}",
                        n + r,
                        unseen.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn set_a(&self) -> &[String] {
        &self.set_a
    }

    pub fn sample(&self, episode_seed: u64) -> Result<EpisodeSets> {
        self.validate()?;
        let (n, r) = (self.n, self.reserve);
        let mut rng = seed::rng(episode_seed);
        let owned = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut seen = self.seen_pool.clone();
        match &self.unseen_pool {
            None => {
                let (drawn, _) = seen.partial_shuffle(&mut rng, 2 * n + 2 * r);
                Ok(EpisodeSets {
                    set_a: self.set_a.clone(),
                    set_b: owned(&drawn[..n]),
                    set_c: owned(&drawn[n..2 * n]),
                    calibration_seen: owned(&drawn[2 * n..2 * n + r]),
                    calibration_unseen: owned(&drawn[2 * n + r..]),
                })
            }
            Some(unseen) => {
                let (drawn_seen, _) = seen.partial_shuffle(&mut rng, n + r);
                let mut unseen = unseen.clone();
                let (drawn_unseen, _) = unseen.partial_shuffle(&mut rng, n + r);
                Ok(EpisodeSets {
                    set_a: self.set_a.clone(),
                    set_b: owned(&drawn_seen[..n]),
                    set_c: owned(&drawn_unseen[..n]),
                    calibration_seen: owned(&drawn_seen[n..]),
                    calibration_unseen: owned(&drawn_unseen[n..]),
                })
            }
        }
    }
}
