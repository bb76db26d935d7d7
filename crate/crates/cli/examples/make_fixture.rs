//! Writes a small synthetic PPM dataset for trying out the CLI.
//!
//! `cargo run --example make_fixture -- DIR [SEEN] [UNSEEN] [SIZE]`
//!
//! `DIR/seen` holds banded images with a manifest (labels `band-<k>`),
//! `DIR/unseen` holds noise images to draw never-seen images from.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use memmeter_core::data::{encode_ppm, synthetic::separable_fixture, Dataset};

fn arg<T: std::str::FromStr>(args: &[String], i: usize, default: T) -> T {
    args.get(i).and_then(|a| a.parse().ok()).unwrap_or(default)
}

fn write_dir(dataset: &Dataset, dir: &PathBuf, labelled: bool) -> memmeter_core::Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = fs::File::create(dir.join("manifest.csv"))?;
    writeln!(manifest, "id,filename,label")?;
    for (i, img) in dataset.images().iter().enumerate() {
        let file = format!("{}.ppm", img.id());
        fs::write(dir.join(&file), encode_ppm(img)?)?;
        let label = if labelled { format!("band-{}", i % 4) } else { String::new() };
        writeln!(manifest, "{},{file},{label}", img.id())?;
    }
    Ok(())
}

fn main() -> memmeter_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(root) = args.first().map(PathBuf::from) else {
        eprintln!("usage: make_fixture DIR [SEEN] [UNSEEN] [SIZE]");
        std::process::exit(2);
    };
    let (seen, unseen) = separable_fixture(arg(&args, 1, 96), arg(&args, 2, 64), 3, arg(&args, 3, 8), 7)?;
    write_dir(&seen, &root.join("seen"), true)?;
    write_dir(&unseen, &root.join("unseen"), false)?;
    println!("{} seen and {} unseen images under {}", seen.len(), unseen.len(), root.display());
    Ok(())
}
