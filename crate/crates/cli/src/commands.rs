use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::{info, warn};
use memmeter_core::analysis::{
    attribute_columns, consistency_matrix, correlate, group_by_decile, rank_labels, read_columns_csv,
    write_correlation_csv, write_group_csv, write_matrix_csv, Column,
};
use memmeter_core::attributes::{extract, write_attribute_csv};
use memmeter_core::data::{load_cifar_binary, load_ppm_dir, Dataset};
use memmeter_core::measurer::{config_digest, default_set_a, measure as run_measure, MeasureOptions, Measurement};
use memmeter_core::predictor::{evaluate_predictor, train_predictor as fit, PredictorModel};
use memmeter_core::scores::{read_column_csv, ScoreMap};
use memmeter_core::{Error, Result};
use serde_json::json;

use crate::config::RunConfig;
use crate::output::Staging;

/// A `.bin` file, or a directory holding `.bin` files, is read as CIFAR
/// binary batches; anything else as a PPM directory.
pub fn load_dataset(path: &Path, manifest: Option<&Path>) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::Data(format!("dataset {} does not exist", path.display())));
    }
    let is_bin = |p: &Path| p.extension().is_some_and(|e| e == "bin");
    let cifar = if path.is_dir() {
        fs::read_dir(path)?.filter_map(|e| e.ok()).any(|e| is_bin(&e.path()))
    } else {
        is_bin(path)
    };
    let dataset = if cifar {
        load_cifar_binary(path)?
    } else if path.is_dir() {
        load_ppm_dir(path, manifest)?
    } else {
        return Err(Error::Data(format!(
            "{} is neither a CIFAR .bin file nor a PPM directory",
            path.display()
        )));
    };
    if dataset.is_empty() {
        return Err(Error::Data(format!("dataset {} holds no images", path.display())));
    }
    info!("loaded {} images from {}", dataset.len(), dataset.source());
    Ok(dataset)
}

fn main_dataset(cfg: &RunConfig) -> Result<Dataset> {
    load_dataset(cfg.data()?, cfg.manifest.as_deref())
}

fn read_scores(cfg: &RunConfig) -> Result<ScoreMap> {
    let path = cfg
        .scores
        .as_deref()
        .ok_or_else(|| Error::Config("no score table given (--scores or \"scores\")".into()))?;
    let scores = read_column_csv(fs::File::open(path)?, "score")?;
    if scores.is_empty() {
        return Err(Error::Data(format!("{} has no scores", path.display())));
    }
    Ok(scores)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn report(moved: &[PathBuf]) {
    for path in moved {
        println!("wrote {}", path.display());
    }
}

/// One measurement run, written under `prefix` in the staging directory.
fn measure_into(cfg: &RunConfig, dataset: &Dataset, unseen: Option<&Dataset>, staging: &Staging, prefix: &str) -> Result<Measurement> {
    let started = Instant::now();
    let started_unix = unix_now();
    let episode = cfg.episode_config(dataset.shape());
    let set_a = match &cfg.measure.set_a {
        Some(ids) => ids.clone(),
        None => default_set_a(dataset, episode.n)?,
    };
    let options = MeasureOptions {
        unseen,
        workers: cfg.workers(),
        observer: None,
    };
    let result = run_measure(dataset, &set_a, &episode, options)?;

    let mut w = staging.create(&format!("{prefix}scores.csv"))?;
    result.table.write_csv(&mut w)?;
    w.flush()?;
    let mut w = staging.create(&format!("{prefix}episodes.jsonl"))?;
    for ep in &result.episodes {
        serde_json::to_writer(&mut w, ep)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    staging.write_json(
        &format!("{prefix}run_manifest.json"),
        &json!({
            "command": "measure",
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "episode_config": episode,
            "config_hash": episode.config_hash(),
            "run_config_hash": config_digest(cfg),
            "dataset": dataset.source(),
            "started_unix": started_unix,
            "wall_time_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;
    let passed = result.episodes.iter().filter(|e| e.passed_gate).count();
    println!(
        "{}{} images scored, {passed}/{} episodes passed the gate, mean score {:.4}",
        prefix.strip_suffix('/').map_or_else(String::new, |label| format!("{label}: ")),
        result.table.len(),
        result.episodes.len(),
        result.table.mean().unwrap_or(f64::NAN)
    );
    Ok(result)
}

fn unseen_dataset(cfg: &RunConfig) -> Result<Option<Dataset>> {
    cfg.unseen_data.as_deref().map(|p| load_dataset(p, None)).transpose()
}

pub fn measure(cfg: &RunConfig) -> Result<()> {
    let dataset = main_dataset(cfg)?;
    let unseen = unseen_dataset(cfg)?;
    cfg.episode_config(dataset.shape()).validate()?;
    let staging = Staging::new(&cfg.out(), "measure")?;
    measure_into(cfg, &dataset, unseen.as_ref(), &staging, "")?;
    report(&staging.commit()?);
    Ok(())
}

pub fn attributes(cfg: &RunConfig) -> Result<()> {
    let dataset = main_dataset(cfg)?;
    let rows = dataset
        .images()
        .iter()
        .map(|img| Ok((img.id().to_owned(), extract(img)?)))
        .collect::<Result<Vec<_>>>()?;
    let staging = Staging::new(&cfg.out(), "attributes")?;
    let mut w = staging.create("attributes.csv")?;
    write_attribute_csv(&mut w, &rows)?;
    w.flush()?;
    report(&staging.commit()?);
    Ok(())
}

pub fn analyze(cfg: &RunConfig) -> Result<()> {
    let scores = read_scores(cfg)?;
    let dataset = cfg
        .data
        .as_deref()
        .map(|p| load_dataset(p, cfg.manifest.as_deref()))
        .transpose()?;
    let mut columns: Vec<Column> = Vec::new();
    if let Some(path) = &cfg.attributes {
        columns.extend(read_columns_csv(fs::File::open(path)?)?);
    } else if let Some(dataset) = &dataset {
        // Attributes computed on the fly when no attribute table is given.
        let rows = dataset
            .resolve(&scores.keys().collect::<Vec<_>>())?
            .into_iter()
            .map(|img| Ok((img.id().to_owned(), extract(img)?)))
            .collect::<Result<Vec<_>>>()?;
        columns.extend(attribute_columns(&rows));
    }
    for path in &cfg.merge_csv {
        columns.extend(read_columns_csv(fs::File::open(path)?)?);
    }
    if columns.is_empty() {
        return Err(Error::Config(
            "nothing to analyse against: give --attributes, --data or --merge-csv".into(),
        ));
    }

    let staging = Staging::new(&cfg.out(), "analyze")?;
    let groups = group_by_decile(&scores, &columns)?;
    let mut w = staging.create("groups.csv")?;
    write_group_csv(&mut w, &groups)?;
    w.flush()?;
    staging.write_json("groups.json", &groups)?;

    let correlations = correlate(&scores, &columns)?;
    let mut w = staging.create("correlations.csv")?;
    write_correlation_csv(&mut w, &correlations)?;
    w.flush()?;
    staging.write_json("correlations.json", &correlations)?;
    for c in &correlations.correlations {
        match c.rho {
            Some(rho) => println!("{:<16} rho {rho:+.4} ({}, n={})", c.column, c.band.as_deref().unwrap_or("-"), c.n),
            None => println!("{:<16} rho undefined (n={})", c.column, c.n),
        }
    }

    if let Some(dataset) = &dataset {
        if dataset.labels().is_empty() {
            info!("dataset carries no labels; skipping label ranking");
        } else {
            let ranking = rank_labels(&scores, dataset.labels(), cfg.analysis.k, cfg.analysis.min_label_count)?;
            staging.write_json("labels.json", &ranking)?;
        }
    }
    report(&staging.commit()?);
    Ok(())
}

pub fn train_predictor(cfg: &RunConfig) -> Result<()> {
    let scores = read_scores(cfg)?;
    let dataset = main_dataset(cfg)?;
    let config = cfg.regression_config(dataset.shape());
    let outcome = fit(&scores, &dataset, &config)?;
    let rho = |ids: &[String]| -> Result<Option<f64>> {
        if ids.len() < 3 {
            warn!("only {} images in a split; its rank correlation is left undefined", ids.len());
            return Ok(None);
        }
        evaluate_predictor(&outcome.model, &scores, &dataset, ids)
    };
    let test_rho = rho(&outcome.split.test)?;
    let train_rho = rho(&outcome.split.train)?;

    let staging = Staging::new(&cfg.out(), "train-predictor")?;
    outcome.model.save(&staging.path("predictor.mmt"))?;
    let mut w = csv::Writer::from_writer(staging.create("history.csv")?);
    w.write_record(["epoch", "train_mse"])?;
    for (epoch, mse) in outcome.history.iter().enumerate() {
        w.write_record([(epoch + 1).to_string(), mse.to_string()])?;
    }
    w.flush()?;
    drop(w);
    staging.write_json("split.json", &outcome.split)?;
    staging.write_json(
        "evaluation.json",
        &json!({
            "test_rho": test_rho,
            "train_rho": train_rho,
            "n_train": outcome.split.train.len(),
            "n_test": outcome.split.test.len(),
            "final_train_mse": outcome.history.last(),
        }),
    )?;
    match test_rho {
        Some(rho) => println!("test rho {rho:+.4} over {} images", outcome.split.test.len()),
        None => println!("test rho undefined (constant predictions or scores)"),
    }
    report(&staging.commit()?);
    Ok(())
}

pub fn predict(cfg: &RunConfig) -> Result<()> {
    let model_path = cfg.model.clone().unwrap_or_else(|| cfg.out().join("predictor.mmt"));
    if !model_path.exists() {
        return Err(Error::Config(format!(
            "no model at {}; run train-predictor first or pass --model",
            model_path.display()
        )));
    }
    let model = PredictorModel::load(&model_path)?;
    let dataset = main_dataset(cfg)?;
    let images: Vec<_> = dataset.images().iter().collect();
    let preds = model.predict(&images)?;

    let staging = Staging::new(&cfg.out(), "predict")?;
    let mut w = csv::Writer::from_writer(staging.create("predictions.csv")?);
    w.write_record(["image_id", "predicted_score"])?;
    for (img, p) in images.iter().zip(&preds) {
        w.write_record([img.id().to_owned(), p.to_string()])?;
    }
    w.flush()?;
    drop(w);
    report(&staging.commit()?);
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let variants = cfg.sweep_variants()?;
    let dataset = main_dataset(cfg)?;
    let unseen = unseen_dataset(cfg)?;
    for (_, variant) in &variants {
        variant.episode_config(dataset.shape()).validate()?;
    }
    let staging = Staging::new(&cfg.out(), "sweep")?;
    let mut tables = Vec::with_capacity(variants.len());
    for (label, variant) in &variants {
        let m = measure_into(variant, &dataset, unseen.as_ref(), &staging, &format!("{label}/"))?;
        tables.push((label.clone(), m.table.to_map()));
    }
    let matrix = consistency_matrix(&tables)?;
    let mut w = staging.create("matrix.csv")?;
    write_matrix_csv(&mut w, &matrix)?;
    w.flush()?;
    staging.write_json("matrix.json", &matrix)?;
    report(&staging.commit()?);
    Ok(())
}
