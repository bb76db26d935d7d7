use std::collections::BTreeSet;
use std::sync::Mutex;

use memmeter_core::data::synthetic::{mixed_fixture, separable_fixture};
use memmeter_core::data::{Dataset, SeenLabel};
use memmeter_core::measurer::{
    default_set_a, measure, CalibrationMode, EpisodeConfig, EpisodeObserver, MeasureOptions,
};
use memmeter_core::tensor::MachineSpec;
use memmeter_core::Error;

fn quick_config(dataset: &Dataset, n: usize, m: usize) -> EpisodeConfig {
    let mut c = EpisodeConfig::new(MachineSpec::linear(dataset.shape()));
    c.n = n;
    c.m = m;
    c.epochs_a = 2;
    c.epochs_b = 2;
    c.accuracy_gate = 0.3;
    c.base_seed = 5;
    c
}

fn fixture() -> Dataset {
    mixed_fixture(30, 30, 1, 8, 3).unwrap()
}

#[test]
fn workers_do_not_change_results() {
    let data = fixture();
    let config = quick_config(&data, 12, 6);
    let set_a = default_set_a(&data, 12).unwrap();
    let run = |workers| {
        measure(
            &data,
            &set_a,
            &config,
            MeasureOptions {
                workers,
                ..Default::default()
            },
        )
        .unwrap()
    };
    let serial = run(1);
    assert_eq!(serial, run(4));
    assert_eq!(serial, run(1));
}

#[test]
fn scores_are_fractions_of_passing_episodes() {
    let data = fixture();
    let config = quick_config(&data, 12, 7);
    let set_a = default_set_a(&data, 12).unwrap();
    let m = measure(&data, &set_a, &config, MeasureOptions::default()).unwrap();
    let passed = m.episodes.iter().filter(|e| e.passed_gate).count();
    assert_eq!(m.table.m_effective, passed);
    assert_eq!(m.table.len(), 12);
    let ids: Vec<&String> = m.table.entries.iter().map(|e| &e.0).collect();
    assert_eq!(ids, set_a.iter().collect::<Vec<_>>());
    for (id, score) in &m.table.entries {
        let seen = m
            .episodes
            .iter()
            .filter(|e| e.passed_gate && e.seen_verdict[id] == SeenLabel::Seen)
            .count();
        assert_eq!(*score, seen as f64 / passed as f64);
        assert!((0.0..=1.0).contains(score));
    }
    for e in &m.episodes {
        let chosen = e.chosen_epoch.unwrap();
        let min = e.calibration_trace.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(e.calibration_trace[chosen - 1], min);
        assert_eq!(e.calibration_trace.len(), 2);
    }
}

#[test]
fn single_episode_scores_are_binary() {
    let data = fixture();
    let config = quick_config(&data, 12, 1);
    let set_a = default_set_a(&data, 12).unwrap();
    let m = measure(&data, &set_a, &config, MeasureOptions::default()).unwrap();
    assert!(m.table.entries.iter().all(|e| e.1 == 0.0 || e.1 == 1.0));
}

#[derive(Default)]
struct Recorder(Mutex<Vec<(usize, String)>>);

impl EpisodeObserver for Recorder {
    fn stage_b_step(&self, episode: usize, image_id: &str, _label: SeenLabel) {
        self.0.lock().unwrap().push((episode, image_id.to_owned()));
    }
}

#[test]
fn set_a_never_reaches_stage_b() {
    let (seen, unseen) = separable_fixture(40, 20, 1, 8, 4).unwrap();
    let mut config = quick_config(&seen, 10, 3);
    config.calibration_mode = CalibrationMode::HeldOut;
    let set_a = default_set_a(&seen, 10).unwrap();
    let recorder = Recorder::default();
    let m = measure(
        &seen,
        &set_a,
        &config,
        MeasureOptions {
            unseen: Some(&unseen),
            workers: 2,
            observer: Some(&recorder),
        },
    )
    .unwrap();
    let steps = recorder.0.into_inner().unwrap();
    assert!(!steps.is_empty());
    let a: BTreeSet<&String> = set_a.iter().collect();
    for (episode, id) in &steps {
        assert!(!a.contains(id), "{id} from set A used in stage b");
        let sets = &m.episodes[*episode].sets;
        assert!(sets.set_b.contains(id) || sets.set_c.contains(id));
    }
    for e in &m.episodes {
        let s = &e.sets;
        assert_eq!((s.calibration_seen.len(), s.calibration_unseen.len()), (2, 2));
        for id in s.calibration_seen.iter().chain(&s.calibration_unseen) {
            assert!(!a.contains(id) && !s.set_b.contains(id) && !s.set_c.contains(id));
        }
        assert!(s.set_c.iter().all(|id| unseen.contains(id)));
    }
}

#[test]
fn too_small_dataset_is_a_data_error() {
    let data = mixed_fixture(10, 10, 1, 8, 3).unwrap();
    let config = quick_config(&data, 8, 2);
    let set_a = default_set_a(&data, 8).unwrap();
    let err = measure(&data, &set_a, &config, MeasureOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Data(_)), "{err}");
    assert!(matches!(default_set_a(&data, 21), Err(Error::Data(_))));
}

#[test]
fn no_passing_episode_is_a_measurement_failure() {
    let data = fixture();
    let mut config = quick_config(&data, 12, 2);
    config.accuracy_gate = 1.0;
    config.epochs_a = 1;
    config.lr_a = 1e-12;
    let set_a = default_set_a(&data, 12).unwrap();
    let err = measure(&data, &set_a, &config, MeasureOptions::default()).unwrap_err();
    assert!(matches!(err, Error::MeasurementFailure(_)), "{err}");
}
