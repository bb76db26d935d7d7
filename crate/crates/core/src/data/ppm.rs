//! Binary PPM (P6, maxval ≤ 255) images and manifest-driven directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{Dataset, ImageTensor};

struct Header {
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(Error::format(0, "missing P6 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(pos as u64, "expected a decimal header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::format(start as u64, "header field out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(pos as u64, "expected whitespace after maxval"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::format(3, "zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            pos as u64,
            format!("maxval {maxval} unsupported (1..=255)"),
        ));
    }
    Ok(Header {
        width,
        height,
        maxval,
        data_start: pos + 1,
    })
}

/// Decodes a P6 file into a 3-channel image scaled by `1/maxval`.
pub fn decode_ppm(bytes: &[u8], id: impl Into<String>) -> Result<ImageTensor> {
    let h = parse_header(bytes)?;
    let hw = h.width * h.height;
    let need = 3 * hw;
    let body = &bytes[h.data_start.min(bytes.len())..];
    if body.len() < need {
        return Err(Error::format(
            (h.data_start + body.len()) as u64,
            format!("truncated pixel data: {} of {need} bytes", body.len()),
        ));
    }
    let mut pixels = vec![0.0; need];
    let scale = h.maxval as f64;
    for (i, rgb) in body[..need].chunks_exact(3).enumerate() {
        for c in 0..3 {
            if rgb[c] as usize > h.maxval {
                return Err(Error::format(
                    (h.data_start + 3 * i + c) as u64,
                    format!("sample {} exceeds maxval {}", rgb[c], h.maxval),
                ));
            }
            pixels[c * hw + i] = f64::from(rgb[c]) / scale;
        }
    }
    Ok(ImageTensor::from_parts_unchecked(
        id.into(),
        3,
        h.height,
        h.width,
        pixels,
    ))
}

/// Encodes a 3-channel image as `P6\n<w> <h>\n255\n` + interleaved bytes.
pub fn encode_ppm(image: &ImageTensor) -> Result<Vec<u8>> {
    if image.channels() != 3 {
        return Err(Error::Shape(format!(
            "PPM needs 3 channels, image {} has {}",
            image.id(),
            image.channels()
        )));
    }
    let hw = image.height() * image.width();
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    for i in 0..hw {
        for c in 0..3 {
            out.push((image.pixels()[c * hw + i] * 255.0).round() as u8);
        }
    }
    Ok(out)
}

/// Loads a directory of PPM files.
///
/// With a manifest (CSV with header `id,filename[,label]`) only the listed
/// files are read, in manifest order, under the manifest ids. Without one,
/// every `*.ppm` file is read in name order with its file stem as id.
pub fn load_ppm_dir(dir: &Path, manifest: Option<&Path>) -> Result<Dataset> {
    let mut images = Vec::new();
    let mut labels = BTreeMap::new();
    match manifest {
        Some(manifest) => {
            let mut reader = csv::ReaderBuilder::new()
                .flexible(true)
                .trim(csv::Trim::All)
                .from_path(manifest)?;
            let headers = reader.headers()?.clone();
            if headers.get(0) != Some("id") || headers.get(1) != Some("filename") {
                return Err(Error::format(
                    0,
                    format!("manifest header must start with id,filename; got {headers:?}"),
                ));
            }
            for record in reader.records() {
                let record = record?;
                let offset = record.position().map_or(0, |p| p.byte());
                let (Some(id), Some(file)) = (record.get(0), record.get(1)) else {
                    return Err(Error::format(offset, "manifest row needs id and filename"));
                };
                let bytes = fs::read(dir.join(file))?;
                images.push(decode_ppm(&bytes, id).map_err(|e| in_file(e, file))?);
                if let Some(label) = record.get(2).filter(|l| !l.is_empty()) {
                    labels.insert(id.to_owned(), label.to_owned());
                }
            }
        }
        None => {
            let mut files: Vec<_> = fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "ppm"))
                .collect();
            files.sort();
            for file in files {
                let stem = file
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let bytes = fs::read(&file)?;
                let name = file.display().to_string();
                images.push(decode_ppm(&bytes, stem).map_err(|e| in_file(e, &name))?);
            }
        }
    }
    Dataset::new(images, labels, format!("ppm:{}", dir.display()))
}

fn in_file(err: Error, file: &str) -> Error {
    match err {
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{file}: {message}"),
        },
        other => other,
    }
}
