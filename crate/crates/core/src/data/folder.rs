//! Ingestion of user-supplied datasets from a directory tree.
//!
//! Two layouts are understood. Image layout: one subdirectory per class,
//! named `asphalt`/`paved`/`unpaved`, containing binary PGM (P5) or PPM (P6)
//! rasters; images are center-cropped square, box-resampled to 32x32, and
//! grayscale-normalized to [0, 1]. Vector layout: CSV files directly in the
//! root with rows `f1,...,fn,label` (header optional), where the label is a
//! class name or index and features are already in [0, 1]. Mixing the two
//! layouts is an error.

use std::path::{Path, PathBuf};

use crate::data::{split::split, Experience, Sample, CLASS_NAMES};
use crate::error::{Error, Result};
use crate::nn::Tensor;

pub const TARGET_SIDE: usize = 32;

/// Loads every sample under `root` (both layouts).
pub fn load_folder_samples(root: &Path) -> Result<Vec<Sample>> {
    let mut class_dirs = Vec::new();
    let mut csv_files = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", root.display())))?
        .map(|r| r.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();

    for path in entries {
        if path.is_dir() {
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            let Some(label) = CLASS_NAMES.iter().position(|&c| c == name) else {
                return Err(Error::Input(format!(
                    "unknown class directory \"{name}\" in {} (expected {})",
                    root.display(),
                    CLASS_NAMES.join("/")
                )));
            };
            class_dirs.push((label, path));
        } else if path.extension().is_some_and(|e| e == "csv") {
            csv_files.push(path);
        }
    }

    match (class_dirs.is_empty(), csv_files.is_empty()) {
        (false, false) => Err(Error::Input(format!(
            "{} mixes class directories and CSV files; use one layout",
            root.display()
        ))),
        (true, true) => Err(Error::Input(format!(
            "{} contains neither class directories nor CSV files",
            root.display()
        ))),
        (false, true) => load_image_dirs(&class_dirs),
        (true, false) => load_csv_files(&csv_files),
    }
}

/// Loads `root` and splits it into one train/test experience.
pub fn load_folder_dataset(
    root: &Path,
    name: &str,
    id: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<Experience> {
    let samples = load_folder_samples(root)?;
    let (train, test) = split(samples, test_fraction, seed)?;
    Ok(Experience {
        id,
        name: name.to_string(),
        train,
        test,
    })
}

fn load_image_dirs(class_dirs: &[(usize, PathBuf)]) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    for (label, dir) in class_dirs {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", dir.display())))?
            .map(|r| r.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.sort();
        for file in files {
            if file.is_dir() {
                continue;
            }
            match file.extension().and_then(|e| e.to_str()) {
                Some("pgm") | Some("ppm") => {}
                _ => {
                    return Err(Error::Input(format!(
                        "{}: not a PGM/PPM image (class directories may only hold rasters)",
                        file.display()
                    )))
                }
            }
            let bytes = std::fs::read(&file)?;
            let gray = decode_pnm(&bytes)
                .map_err(|e| Error::Input(format!("{}: {e}", file.display())))?;
            let resized = resize_to_square(&gray, TARGET_SIDE);
            let data: Vec<f32> = resized.into_iter().map(|v| v as f32).collect();
            samples.push(Sample {
                x: Tensor::from_vec(&[1, TARGET_SIDE, TARGET_SIDE], data)?,
                label: *label,
            });
        }
    }
    if samples.is_empty() {
        return Err(Error::Input("class directories contain no images".into()));
    }
    Ok(samples)
}

struct GrayImage {
    width: usize,
    height: usize,
    /// Luminance in [0, 1], row-major.
    pixels: Vec<f64>,
}

/// Decodes binary PGM (P5) or PPM (P6). Color is reduced to luminance with
/// the usual 0.299/0.587/0.114 weights; values are divided by the header's
/// maxval, so a uniform image at maxval/2 (even maxval) maps to exactly 0.5.
fn decode_pnm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let magic = header_token(bytes, &mut pos)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => {
            return Err(Error::Format(format!(
                "unsupported magic \"{other}\" (only binary P5/P6)"
            )))
        }
    };
    let width: usize = parse_header_number(bytes, &mut pos, "width")?;
    let height: usize = parse_header_number(bytes, &mut pos, "height")?;
    let maxval: usize = parse_header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("zero-sized image".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} out of range")));
    }
    // Header ends with exactly one whitespace byte before the raster.
    let wide = maxval > 255;
    let bytes_per_value = if wide { 2 } else { 1 };
    let expected = width * height * channels * bytes_per_value;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(Error::Format(format!(
            "raster truncated: {} bytes for {expected} expected",
            raster.len()
        )));
    }
    if raster.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after raster",
            raster.len() - expected
        )));
    }

    let read_value = |i: usize| -> f64 {
        let v = if wide {
            u16::from_be_bytes([raster[i * 2], raster[i * 2 + 1]]) as usize
        } else {
            raster[i] as usize
        };
        v as f64 / maxval as f64
    };

    let mut pixels = Vec::with_capacity(width * height);
    for p in 0..width * height {
        let v = if channels == 1 {
            read_value(p)
        } else {
            let r = read_value(p * 3);
            let g = read_value(p * 3 + 1);
            let b = read_value(p * 3 + 2);
            0.299 * r + 0.587 * g + 0.114 * b
        };
        pixels.push(v.clamp(0.0, 1.0));
    }
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

/// Reads the next header token, skipping whitespace and `#` comments, and
/// leaves `pos` one byte past the single whitespace that terminates it.
fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("unexpected end of header".into()));
    }
    let token = std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| Error::Format("non-ASCII header".into()))?
        .to_string();
    // Consume the one whitespace byte that closes the token.
    if *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Ok(token)
}

fn parse_header_number(bytes: &[u8], pos: &mut usize, field: &str) -> Result<usize> {
    // Numbers may still be preceded by whitespace/comments; step back one
    // byte so header_token's skipping logic applies uniformly.
    *pos = pos.saturating_sub(1);
    let token = header_token(bytes, pos)?;
    token
        .parse()
        .map_err(|_| Error::Format(format!("bad {field} \"{token}\"")))
}

/// Center-crops to a square, then box-resamples to `side` x `side`. Each
/// output pixel averages the source area it covers, weighted by overlap, so
/// constant images stay constant exactly.
fn resize_to_square(img: &GrayImage, side: usize) -> Vec<f64> {
    let crop = img.width.min(img.height);
    let x0 = (img.width - crop) / 2;
    let y0 = (img.height - crop) / 2;

    let scale = crop as f64 / side as f64;
    let mut out = Vec::with_capacity(side * side);
    for oy in 0..side {
        for ox in 0..side {
            let sy0 = oy as f64 * scale;
            let sy1 = (oy + 1) as f64 * scale;
            let sx0 = ox as f64 * scale;
            let sx1 = (ox + 1) as f64 * scale;
            let mut acc = 0.0f64;
            let mut weight = 0.0f64;
            let y_lo = sy0.floor() as usize;
            let y_hi = (sy1.ceil() as usize).min(crop);
            let x_lo = sx0.floor() as usize;
            let x_hi = (sx1.ceil() as usize).min(crop);
            for sy in y_lo..y_hi {
                let wy = overlap(sy as f64, sy as f64 + 1.0, sy0, sy1);
                if wy <= 0.0 {
                    continue;
                }
                for sx in x_lo..x_hi {
                    let wx = overlap(sx as f64, sx as f64 + 1.0, sx0, sx1);
                    if wx <= 0.0 {
                        continue;
                    }
                    let w = wy * wx;
                    acc += w * img.pixels[(y0 + sy) * img.width + (x0 + sx)];
                    weight += w;
                }
            }
            out.push(if weight > 0.0 { acc / weight } else { 0.0 });
        }
    }
    out
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

fn load_csv_files(files: &[PathBuf]) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    let mut dims: Option<usize> = None;
    for file in files {
        let text = std::fs::read_to_string(file)
            .map_err(|e| Error::Input(format!("{}: {e}", file.display())))?;
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 2 {
                return Err(Error::Input(format!(
                    "{} line {}: need at least one feature and a label",
                    file.display(),
                    line_no + 1
                )));
            }
            match parse_csv_row(&fields) {
                Ok((features, label)) => {
                    if *dims.get_or_insert(features.len()) != features.len() {
                        return Err(Error::Input(format!(
                            "{} line {}: {} features, earlier rows had {}",
                            file.display(),
                            line_no + 1,
                            features.len(),
                            dims.unwrap()
                        )));
                    }
                    samples.push(Sample {
                        x: Tensor::from_vec(&[features.len()], features)?,
                        label,
                    });
                }
                // The first line may be a header; anything later must parse.
                Err(e) if line_no == 0 => {
                    let looks_like_header = fields
                        .iter()
                        .take(fields.len() - 1)
                        .any(|f| f.parse::<f64>().is_err());
                    if !looks_like_header {
                        return Err(Error::Input(format!(
                            "{} line 1: {e}",
                            file.display()
                        )));
                    }
                }
                Err(e) => {
                    return Err(Error::Input(format!(
                        "{} line {}: {e}",
                        file.display(),
                        line_no + 1
                    )))
                }
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::Input("CSV files contain no data rows".into()));
    }
    Ok(samples)
}

fn parse_csv_row(fields: &[&str]) -> Result<(Vec<f32>, usize)> {
    let (label_field, feature_fields) = fields.split_last().unwrap();
    let label = match CLASS_NAMES.iter().position(|c| c == label_field) {
        Some(i) => i,
        None => label_field
            .parse::<usize>()
            .map_err(|_| Error::Input(format!("unknown label \"{label_field}\"")))?,
    };
    let mut features = Vec::with_capacity(feature_fields.len());
    for f in feature_fields {
        let v: f64 = f
            .parse()
            .map_err(|_| Error::Input(format!("bad feature value \"{f}\"")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Input(format!(
                "feature value {v} outside [0, 1]; scale inputs before loading"
            )));
        }
        features.push(v as f32);
    }
    Ok((features, label))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pgm(path: &Path, width: usize, height: usize, maxval: usize, value: usize) {
        let mut bytes = format!("P5\n# test image\n{width} {height}\n{maxval}\n").into_bytes();
        for _ in 0..width * height {
            if maxval > 255 {
                bytes.extend_from_slice(&(value as u16).to_be_bytes());
            } else {
                bytes.push(value as u8);
            }
        }
        std::fs::write(path, bytes).unwrap();
    }

    fn write_ppm(path: &Path, width: usize, height: usize, rgb: [u8; 3]) {
        let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
        for _ in 0..width * height {
            bytes.extend_from_slice(&rgb);
        }
        std::fs::write(path, bytes).unwrap();
    }

    fn class_tree(root: &Path) {
        for class in CLASS_NAMES {
            std::fs::create_dir(root.join(class)).unwrap();
        }
    }

    #[test]
    fn class_directories_map_to_labels() {
        let dir = tempfile::tempdir().unwrap();
        class_tree(dir.path());
        for (i, class) in CLASS_NAMES.iter().enumerate() {
            write_pgm(&dir.path().join(class).join("a.pgm"), 8, 8, 255, 10 * (i + 1));
            write_pgm(&dir.path().join(class).join("b.pgm"), 8, 8, 255, 10 * (i + 1));
        }
        let samples = load_folder_samples(dir.path()).unwrap();
        assert_eq!(samples.len(), 6);
        for label in 0..3 {
            assert_eq!(samples.iter().filter(|s| s.label == label).count(), 2);
        }
        assert_eq!(samples[0].x.shape(), &[1, 32, 32]);
    }

    #[test]
    fn uniform_mid_gray_normalizes_to_exact_half() {
        let dir = tempfile::tempdir().unwrap();
        class_tree(dir.path());
        // 100 / 200 is exactly one half; resizing a constant image must not
        // disturb it.
        write_pgm(&dir.path().join("asphalt").join("g.pgm"), 48, 20, 200, 100);
        let samples = load_folder_samples(dir.path()).unwrap();
        assert!(samples[0].x.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn sixteen_bit_pgm_and_color_ppm_decode() {
        let dir = tempfile::tempdir().unwrap();
        class_tree(dir.path());
        write_pgm(&dir.path().join("paved").join("w.pgm"), 4, 4, 1000, 500);
        write_ppm(&dir.path().join("unpaved").join("c.ppm"), 6, 6, [80, 80, 80]);
        let samples = load_folder_samples(dir.path()).unwrap();
        let wide = samples.iter().find(|s| s.label == 1).unwrap();
        assert!(wide.x.data().iter().all(|&v| v == 0.5));
        let gray = samples.iter().find(|s| s.label == 2).unwrap();
        let expected = 80.0f32 / 255.0;
        assert!(gray.x.data().iter().all(|&v| (v - expected).abs() < 1e-6));
    }

    #[test]
    fn resize_averages_blocks() {
        let dir = tempfile::tempdir().unwrap();
        class_tree(dir.path());
        // A 64x64 single-pixel checkerboard at 0 and maxval averages to 0.5
        // in every 2x2 box-filter window when downsampled to 32x32.
        let mut bytes = b"P5\n64 64\n200\n".to_vec();
        for y in 0..64 {
            for x in 0..64 {
                bytes.push(if (x + y) % 2 == 0 { 200 } else { 0 });
            }
        }
        std::fs::write(dir.path().join("asphalt").join("cb.pgm"), bytes).unwrap();
        let samples = load_folder_samples(dir.path()).unwrap();
        assert!(samples[0].x.data().iter().all(|&v| (v - 0.5).abs() < 1e-6));
    }

    #[test]
    fn unknown_class_directory_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("gravel")).unwrap();
        let err = load_folder_samples(dir.path()).unwrap_err();
        assert!(err.to_string().contains("gravel"), "{err}");
    }

    #[test]
    fn undecodable_file_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        class_tree(dir.path());
        std::fs::write(dir.path().join("paved").join("bad.pgm"), b"P5\nnot numbers\n").unwrap();
        let err = load_folder_samples(dir.path()).unwrap_err();
        assert!(err.to_string().contains("bad.pgm"), "{err}");
    }

    #[test]
    fn mixed_layout_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        class_tree(dir.path());
        write_pgm(&dir.path().join("asphalt").join("a.pgm"), 4, 4, 255, 9);
        std::fs::write(dir.path().join("extra.csv"), "0.1,0.2,asphalt\n").unwrap();
        let err = load_folder_samples(dir.path()).unwrap_err();
        assert!(err.to_string().contains("mixes"), "{err}");
    }

    #[test]
    fn csv_rows_parse_names_and_indices() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("data.csv"),
            "f1,f2,label\n0.1,0.9,asphalt\n0.3,0.4,2\n0.5,0.6,paved\n",
        )
        .unwrap();
        let samples = load_folder_samples(dir.path()).unwrap();
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[0].x.data(), &[0.1, 0.9]);
        assert_eq!(samples[0].label, 0);
        assert_eq!(samples[1].label, 2);
        assert_eq!(samples[2].label, 1);
    }

    #[test]
    fn csv_dimension_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("data.csv"),
            "0.1,0.9,asphalt\n0.3,0.4,0.5,paved\n",
        )
        .unwrap();
        let err = load_folder_samples(dir.path()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn folder_dataset_splits_stratified() {
        let dir = tempfile::tempdir().unwrap();
        let mut rows = String::new();
        for i in 0..30 {
            rows.push_str(&format!("0.{}1,0.5,{}\n", i % 9, i % 3));
        }
        std::fs::write(dir.path().join("data.csv"), rows).unwrap();
        let exp = load_folder_dataset(dir.path(), "field", 0, 0.2, 3).unwrap();
        assert_eq!(exp.train.len(), 24);
        assert_eq!(exp.test.len(), 6);
    }
}
