use std::collections::BTreeMap;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EpisodeSampler, EpisodeSets, ImageTensor, SeenLabel};
use crate::error::{Error, Result};
use crate::scores::ScoreTable;
use crate::seed;
use crate::tensor::Machine;

use super::config::EpisodeConfig;
use super::stages::{stage_a, stage_b_epoch, stage_b_optimizer, stage_c, CalibrationSet};

/// Everything one episode produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_index: usize,
    pub episode_seed: u64,
    pub sets: EpisodeSets,
    pub stage_a_accuracy: f64,
    pub passed_gate: bool,
    /// 1-based stage-(b) epoch whose verdicts were kept.
    pub chosen_epoch: Option<usize>,
    /// Calibration error after each stage-(b) epoch.
    pub calibration_trace: Vec<f64>,
    /// Verdict per image of A; empty when the gate failed.
    pub seen_verdict: BTreeMap<String, SeenLabel>,
}

/// Earliest 1-based index of the smallest value; NaN counts as worst.
pub fn select_epoch(trace: &[f64]) -> Result<usize> {
    let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in trace.iter().enumerate() {
        if best.is_none_or(|(_, b)| key(v) < b) {
            best = Some((i, key(v)));
        }
    }
    best.map(|(i, _)| i + 1)
        .ok_or_else(|| Error::Usage("no calibration values to choose from".into()))
}

/// Hook into stage (b), mostly for tests that need to see which images a
/// machine trained on.
pub trait EpisodeObserver: Sync {
    fn stage_b_step(&self, _episode: usize, _image_id: &str, _label: SeenLabel) {}
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoopObserver;

impl EpisodeObserver for NoopObserver {}

/// Runs one independent episode given its index.
pub trait EpisodeRunner: Sync {
    fn run_episode(&self, index: usize) -> Result<EpisodeResult>;
}

/// The full three-stage protocol over a dataset.
pub struct ProtocolRunner<'a> {
    dataset: &'a Dataset,
    unseen: Option<&'a Dataset>,
    sampler: EpisodeSampler<'a>,
    config: EpisodeConfig,
    observer: &'a dyn EpisodeObserver,
}

impl<'a> ProtocolRunner<'a> {
    pub fn new(
        dataset: &'a Dataset,
        set_a: &[String],
        config: EpisodeConfig,
        options: &MeasureOptions<'a>,
    ) -> Result<Self> {
        config.validate()?;
        if dataset.shape() != config.machine.input {
            return Err(Error::Config(format!(
                "machine expects {:?} inputs, dataset images are {:?}",
                config.machine.input,
                dataset.shape()
            )));
        }
        let mut sampler = EpisodeSampler::new(dataset, set_a, config.n)?;
        if let Some(unseen) = options.unseen {
            sampler = sampler.with_unseen_pool(dataset, unseen)?;
        }
        let sampler = sampler.with_calibration_reserve(config.calibration_reserve());
        sampler.validate()?;
        Ok(Self {
            dataset,
            unseen: options.unseen,
            sampler,
            config,
            observer: options.observer.unwrap_or(&NoopObserver),
        })
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    fn seen_images(&self, ids: &[String]) -> Result<Vec<&'a ImageTensor>> {
        self.dataset.resolve(ids)
    }

    fn unseen_images(&self, ids: &[String]) -> Result<Vec<&'a ImageTensor>> {
        self.unseen.unwrap_or(self.dataset).resolve(ids)
    }
}

impl EpisodeRunner for ProtocolRunner<'_> {
    fn run_episode(&self, index: usize) -> Result<EpisodeResult> {
        let config = &self.config;
        let episode_seed = seed::derive(config.base_seed, "episode", index as u64);
        let sets = self.sampler.sample(seed::derive(episode_seed, "sample", 0))?;
        let set_a = self.seen_images(&sets.set_a)?;
        let set_b = self.seen_images(&sets.set_b)?;
        let set_c = self.unseen_images(&sets.set_c)?;
        let cal_seen = self.seen_images(&sets.calibration_seen)?;
        let cal_unseen = self.unseen_images(&sets.calibration_unseen)?;

        let mut machine = Machine::new(
            config.machine.clone(),
            config.pretext_mode.classes(),
            &mut seed::stream(episode_seed, "init", 0),
        )?;
        let observed: Vec<&ImageTensor> = set_a
            .iter()
            .chain(&set_b)
            .chain(&cal_seen)
            .copied()
            .collect();
        let stage_a_accuracy = stage_a(
            &mut machine,
            &observed,
            config,
            seed::derive(episode_seed, "stage_a", 0),
        )?;
        let mut result = EpisodeResult {
            episode_index: index,
            episode_seed,
            sets,
            stage_a_accuracy,
            passed_gate: stage_a_accuracy >= config.accuracy_gate,
            chosen_epoch: None,
            calibration_trace: Vec::new(),
            seen_verdict: BTreeMap::new(),
        };
        if !result.passed_gate {
            warn!(
                "episode {index}: rotation accuracy {stage_a_accuracy:.3} below gate {}, discarded",
                config.accuracy_gate
            );
            return Ok(result);
        }

        machine.replace_head(2, &mut seed::stream(episode_seed, "head", 0))?;
        let mut opt = stage_b_optimizer(config, set_b.len())?;
        let calibration = if cal_seen.is_empty() {
            CalibrationSet::SeenOnly
        } else {
            CalibrationSet::HeldOut {
                seen: &cal_seen,
                unseen: &cal_unseen,
            }
        };
        let stage_b_seed = seed::derive(episode_seed, "stage_b", 0);
        let mut per_epoch = Vec::with_capacity(config.epochs_b);
        for epoch in 1..=config.epochs_b {
            stage_b_epoch(
                &mut machine,
                &mut opt,
                &set_b,
                &set_c,
                stage_b_seed,
                epoch,
                index,
                self.observer,
            )?;
            let outcome = stage_c(&machine, &set_a, calibration)?;
            result.calibration_trace.push(outcome.calibration.rms_error);
            per_epoch.push(outcome.verdicts);
        }
        let chosen = select_epoch(&result.calibration_trace)?;
        result.chosen_epoch = Some(chosen);
        result.seen_verdict = per_epoch.swap_remove(chosen - 1).into_iter().collect();
        info!(
            "episode {index}: rotation accuracy {stage_a_accuracy:.3}, epoch {chosen} calibration {:.4}",
            result.calibration_trace[chosen - 1]
        );
        Ok(result)
    }
}

/// Runs episodes `0..m` on `workers` threads; results come back in index
/// order regardless of scheduling.
pub fn run_episodes(runner: &dyn EpisodeRunner, m: usize, workers: usize) -> Result<Vec<EpisodeResult>> {
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..m).into_par_iter().map(|i| runner.run_episode(i)).collect())
}

/// Score of each image of A: the fraction of gate-passing episodes that
/// judged it seen.
pub fn aggregate(
    set_a: &[String],
    results: &[EpisodeResult],
    machine: String,
    config_hash: String,
    base_seed: u64,
) -> Result<ScoreTable> {
    let passed: Vec<&EpisodeResult> = results.iter().filter(|r| r.passed_gate).collect();
    if passed.is_empty() {
        return Err(Error::MeasurementFailure(format!(
            "all {} episodes failed the rotation accuracy gate",
            results.len()
        )));
    }
    let m_effective = passed.len();
    let mut entries = Vec::with_capacity(set_a.len());
    for id in set_a {
        let mut seen = 0usize;
        for r in &passed {
            match r.seen_verdict.get(id) {
                Some(SeenLabel::Seen) => seen += 1,
                Some(SeenLabel::Unseen) => {}
                None => {
                    return Err(Error::Usage(format!(
                        "episode {} has no verdict for {id}",
                        r.episode_index
                    )))
                }
            }
        }
        entries.push((id.clone(), seen as f64 / m_effective as f64));
    }
    Ok(ScoreTable {
        entries,
        m_effective,
        machine,
        config_hash,
        base_seed,
    })
}

#[derive(Clone, Copy)]
pub struct MeasureOptions<'a> {
    /// Separate pool to draw never-seen images from.
    pub unseen: Option<&'a Dataset>,
    pub workers: usize,
    pub observer: Option<&'a dyn EpisodeObserver>,
}

impl Default for MeasureOptions<'_> {
    fn default() -> Self {
        Self {
            unseen: None,
            workers: 1,
            observer: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub table: ScoreTable,
    pub episodes: Vec<EpisodeResult>,
}

/// The first `n` images of the dataset in load order, the default set A.
pub fn default_set_a(dataset: &Dataset, n: usize) -> Result<Vec<String>> {
    if dataset.len() < n {
        return Err(Error::Data(format!(
            "dataset has {} images, set A needs {n}",
            dataset.len()
        )));
    }
    Ok(dataset.ids().take(n).map(str::to_owned).collect())
}

/// Runs all `config.m` episodes and aggregates the scores of `set_a`.
pub fn measure(
    dataset: &Dataset,
    set_a: &[String],
    config: &EpisodeConfig,
    options: MeasureOptions<'_>,
) -> Result<Measurement> {
    let runner = ProtocolRunner::new(dataset, set_a, config.clone(), &options)?;
    let episodes = run_episodes(&runner, config.m, options.workers)?;
    let table = aggregate(
        set_a,
        &episodes,
        config.machine.descriptor(),
        config.config_hash(),
        config.base_seed,
    )?;
    Ok(Measurement { table, episodes })
}
