#![allow(dead_code)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use memmeter_core::data::{encode_ppm, Dataset};

pub fn memmeter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memmeter"))
        .args(args)
        .env("MEMMETER_LOG", "error")
        .output()
        .expect("binary runs")
}

/// Writes `dataset` as PPM files plus a manifest carrying its labels.
pub fn write_ppm_dir(dataset: &Dataset, dir: &Path) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let manifest = dir.join("manifest.csv");
    let mut m = fs::File::create(&manifest).unwrap();
    writeln!(m, "id,filename,label").unwrap();
    for img in dataset.images() {
        let file = format!("{}.ppm", img.id());
        fs::write(dir.join(&file), encode_ppm(img).unwrap()).unwrap();
        let label = dataset.labels().get(img.id()).cloned().unwrap_or_default();
        writeln!(m, "{},{file},{label}", img.id()).unwrap();
    }
    manifest
}

pub fn write_config(path: &Path, json: &str) -> String {
    fs::write(path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

pub fn entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|rd| rd.map(|e| e.unwrap().file_name().into_string().unwrap()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
