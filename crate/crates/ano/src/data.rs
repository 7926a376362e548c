//! Dataset ingestion, preprocessing and deterministic splitting.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Full,
    Train,
    Test,
}

/// Feature rows with integer class labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub split_tag: SplitTag,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
        split_tag: SplitTag,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::input("dataset has no samples".to_string()));
        }
        if features.len() != labels.len() {
            return Err(Error::input(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::input(format!(
                    "row {i} has {} features, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("row {i} has non-finite features")));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::input(format!(
                "label {bad} exceeds n_classes {n_classes}"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            n_classes,
            split_tag,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }
}

/// UCI banknote authentication CSV: four real features plus a binary label
/// per row, comma separated, with an optional single header line.
pub fn load_banknote_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut first_data_line = true;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::format(format!(
                "line {}: expected 5 comma-separated columns, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(e) => {
                if first_data_line {
                    // Header line.
                    first_data_line = false;
                    continue;
                }
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: e.to_string(),
                });
            }
        };
        first_data_line = false;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: "non-finite value".to_string(),
            });
        }
        let label = values[4];
        if label != 0.0 && label != 1.0 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("label must be 0 or 1, got {label}"),
            });
        }
        features.push(values[..4].to_vec());
        labels.push(label as usize);
    }
    if features.is_empty() {
        return Err(Error::format(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Dataset::new(features, labels, 2, SplitTag::Full)
}

fn read_be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(format!("truncated {what}")))
}

/// MNIST IDX pair: big-endian headers, magic 0x00000803 (images) and
/// 0x00000801 (labels), unsigned bytes. Pixels are scaled to [0, 1].
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img = std::fs::read(images_path)?;
    let lab = std::fs::read(labels_path)?;

    let magic = read_be_u32(&img, 0, "image header")?;
    if magic != 0x0000_0803 {
        return Err(Error::format(format!(
            "bad image magic 0x{magic:08x}, expected 0x00000803"
        )));
    }
    let count = read_be_u32(&img, 4, "image header")? as usize;
    let rows = read_be_u32(&img, 8, "image header")? as usize;
    let cols = read_be_u32(&img, 12, "image header")? as usize;
    if rows != 28 || cols != 28 {
        return Err(Error::format(format!(
            "expected 28x28 images, file says {rows}x{cols}"
        )));
    }
    let expected = 16 + count * rows * cols;
    if img.len() < expected {
        return Err(Error::format(format!(
            "image file holds {} bytes, header implies {expected}",
            img.len()
        )));
    }

    let magic = read_be_u32(&lab, 0, "label header")?;
    if magic != 0x0000_0801 {
        return Err(Error::format(format!(
            "bad label magic 0x{magic:08x}, expected 0x00000801"
        )));
    }
    let lab_count = read_be_u32(&lab, 4, "label header")? as usize;
    if lab_count != count {
        return Err(Error::format(format!(
            "{count} images but {lab_count} labels"
        )));
    }
    if lab.len() < 8 + count {
        return Err(Error::format("truncated label data".to_string()));
    }

    let mut features = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * rows * cols;
        features.push(
            img[start..start + rows * cols]
                .iter()
                .map(|&b| b as f64 / 255.0)
                .collect(),
        );
    }
    let labels: Vec<usize> = lab[8..8 + count].iter().map(|&b| b as usize).collect();
    if let Some(&bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::format(format!("label byte {bad} exceeds 9")));
    }
    Dataset::new(features, labels, 10, SplitTag::Full)
}

/// 28x28 -> 4x4 area resample: each output pixel is the mean of its 7x7
/// block, flattened row-major.
pub fn resize_block_mean(image: &[f64]) -> Result<Vec<f64>> {
    if image.len() != 28 * 28 {
        return Err(Error::input(format!(
            "expected 784 pixels, got {}",
            image.len()
        )));
    }
    let mut out = Vec::with_capacity(16);
    for br in 0..4 {
        for bc in 0..4 {
            let mut sum = 0.0;
            for r in 0..7 {
                for c in 0..7 {
                    sum += image[(br * 7 + r) * 28 + (bc * 7 + c)];
                }
            }
            out.push(sum / 49.0);
        }
    }
    Ok(out)
}

pub fn resize_dataset_4x4(ds: &Dataset) -> Result<Dataset> {
    let features = ds
        .features
        .iter()
        .map(|img| resize_block_mean(img))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(features, ds.labels.clone(), ds.n_classes, ds.split_tag)
}

/// Feature scaling applied identically to train and test, with statistics
/// fitted on the train split only.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Standardizer {
    /// Per-feature (x - mean) / std with a 1e-8 floor on std.
    ZScore {
        means: Vec<f64>,
        stds: Vec<f64>,
        fitted_on: SplitTag,
    },
    /// Linear map of [0, 1] features to encoding angles [0, pi].
    AngleScale,
}

pub const STD_FLOOR: f64 = 1e-8;

impl Standardizer {
    /// Fit z-score statistics. The input must be tagged as the train split;
    /// fitting on anything else is a leakage bug, not a parameter choice.
    pub fn fit_zscore(train: &Dataset) -> Result<Self> {
        if train.split_tag != SplitTag::Train {
            return Err(Error::input(format!(
                "z-score statistics must be fitted on the train split, got {:?}",
                train.split_tag
            )));
        }
        let dim = train.feature_dim();
        let m = train.len() as f64;
        let mut means = vec![0.0; dim];
        for row in &train.features {
            for (mean, v) in means.iter_mut().zip(row.iter()) {
                *mean += v;
            }
        }
        for mean in &mut means {
            *mean /= m;
        }
        let mut stds = vec![0.0; dim];
        for row in &train.features {
            for ((std, v), mean) in stds.iter_mut().zip(row.iter()).zip(means.iter()) {
                *std += (v - mean) * (v - mean);
            }
        }
        for std in &mut stds {
            *std = (*std / m).sqrt().max(STD_FLOOR);
        }
        Ok(Standardizer::ZScore {
            means,
            stds,
            fitted_on: SplitTag::Train,
        })
    }

    pub fn apply_features(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Standardizer::ZScore { means, stds, .. } => x
                .iter()
                .zip(means.iter().zip(stds.iter()))
                .map(|(v, (m, s))| (v - m) / s)
                .collect(),
            Standardizer::AngleScale => {
                x.iter().map(|v| v * std::f64::consts::PI).collect()
            }
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let features = ds
            .features
            .iter()
            .map(|row| self.apply_features(row))
            .collect();
        Dataset::new(features, ds.labels.clone(), ds.n_classes, ds.split_tag)
    }
}

/// Seeded shuffle then partition. The train side gets ceil(m * (1 - f))
/// samples, the test side the remainder; together they cover the input
/// exactly.
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    let m = ds.len();
    // The epsilon guards against float products like 10000 * 0.9 landing an
    // ulp above the exact integer.
    let train_size = ((m as f64) * (1.0 - test_fraction) - 1e-9).ceil() as usize;
    if train_size == 0 || train_size >= m {
        return Err(Error::config(format!(
            "degenerate split: {train_size} train / {} test",
            m - train_size
        )));
    }
    let mut indices: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let pick = |idx: &[usize], tag: SplitTag| -> Result<Dataset> {
        Dataset::new(
            idx.iter().map(|&i| ds.features[i].clone()).collect(),
            idx.iter().map(|&i| ds.labels[i]).collect(),
            ds.n_classes,
            tag,
        )
    };
    Ok((
        pick(&indices[..train_size], SplitTag::Train)?,
        pick(&indices[train_size..], SplitTag::Test)?,
    ))
}

/// First `count` samples, keeping the original order.
pub fn take_prefix(ds: &Dataset, count: usize) -> Result<Dataset> {
    if count == 0 || count > ds.len() {
        return Err(Error::config(format!(
            "prefix of {count} samples out of range 1..={}",
            ds.len()
        )));
    }
    Dataset::new(
        ds.features[..count].to_vec(),
        ds.labels[..count].to_vec(),
        ds.n_classes,
        ds.split_tag,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn write_temp(content: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content).unwrap();
        f
    }

    #[test]
    fn banknote_single_row_and_header() {
        let f = write_temp(b"1.0,2.0,3.0,4.0,1\n");
        let ds = load_banknote_csv(f.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.labels, vec![1]);
        assert_eq!(ds.features[0], vec![1.0, 2.0, 3.0, 4.0]);

        let f = write_temp(b"variance,skewness,curtosis,entropy,class\n1.0,2.0,3.0,4.0,0\n");
        let ds = load_banknote_csv(f.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.labels, vec![0]);
    }

    #[test]
    fn banknote_error_cases() {
        let f = write_temp(b"");
        assert!(matches!(
            load_banknote_csv(f.path()),
            Err(Error::Format(_))
        ));

        let f = write_temp(b"1.0,2.0,3.0,4.0\n");
        assert!(matches!(
            load_banknote_csv(f.path()),
            Err(Error::Format(_))
        ));

        let f = write_temp(b"1.0,2.0,3.0,4.0,0\n1.0,oops,3.0,4.0,1\n");
        match load_banknote_csv(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let f = write_temp(b"1.0,2.0,3.0,4.0,7\n");
        assert!(matches!(
            load_banknote_csv(f.path()),
            Err(Error::Parse { .. })
        ));
    }

    fn idx_fixture(images: &[[u8; 784]], labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::new();
        img.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        img.extend_from_slice(&(images.len() as u32).to_be_bytes());
        img.extend_from_slice(&28u32.to_be_bytes());
        img.extend_from_slice(&28u32.to_be_bytes());
        for im in images {
            img.extend_from_slice(im);
        }
        let mut lab = Vec::new();
        lab.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        lab.extend_from_slice(labels);
        (img, lab)
    }

    #[test]
    fn mnist_loader_roundtrip() {
        let mut a = [0u8; 784];
        a[0] = 255;
        a[783] = 51;
        let b = [128u8; 784];
        let (img, lab) = idx_fixture(&[a, b], &[5, 0]);
        let fi = write_temp(&img);
        let fl = write_temp(&lab);
        let ds = load_mnist_idx(fi.path(), fl.path()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels, vec![5, 0]);
        assert!((ds.features[0][0] - 1.0).abs() < 1e-15);
        assert!((ds.features[0][783] - 0.2).abs() < 1e-15);
        assert!((ds.features[1][100] - 128.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn mnist_loader_error_cases() {
        let (img, lab) = idx_fixture(&[[0u8; 784]], &[3]);

        // Bad magic.
        let mut bad = img.clone();
        bad[3] = 0x99;
        let fi = write_temp(&bad);
        let fl = write_temp(&lab);
        assert!(matches!(
            load_mnist_idx(fi.path(), fl.path()),
            Err(Error::Format(_))
        ));

        // Truncated image payload.
        let fi = write_temp(&img[..img.len() - 10]);
        let fl = write_temp(&lab);
        assert!(matches!(
            load_mnist_idx(fi.path(), fl.path()),
            Err(Error::Format(_))
        ));

        // Count mismatch between files.
        let (_, lab2) = idx_fixture(&[[0u8; 784]; 2], &[1, 2]);
        let fi = write_temp(&img);
        let fl = write_temp(&lab2);
        assert!(matches!(
            load_mnist_idx(fi.path(), fl.path()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn resize_examples() {
        let ones = vec![1.0; 784];
        assert_eq!(resize_block_mean(&ones).unwrap(), vec![1.0; 16]);

        // Indicator of the top-left 7x7 block.
        let mut img = vec![0.0; 784];
        for r in 0..7 {
            for c in 0..7 {
                img[r * 28 + c] = 1.0;
            }
        }
        let out = resize_block_mean(&img).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-15);
        assert!(out[1..].iter().all(|v| v.abs() < 1e-15));

        assert!(resize_block_mean(&vec![0.0; 100]).is_err());
    }

    #[test]
    fn resize_matches_naive_loop_and_conserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img: Vec<f64> = (0..784).map(|_| rng.gen_range(0.0..1.0)).collect();
        let fast = resize_block_mean(&img).unwrap();
        for br in 0..4 {
            for bc in 0..4 {
                let mut acc = 0.0;
                let mut count = 0;
                for r in 0..28 {
                    for c in 0..28 {
                        if r / 7 == br && c / 7 == bc {
                            acc += img[r * 28 + c];
                            count += 1;
                        }
                    }
                }
                assert_eq!(count, 49);
                assert!((fast[br * 4 + bc] - acc / 49.0).abs() < 1e-12);
            }
        }
        let in_mean: f64 = img.iter().sum::<f64>() / 784.0;
        let out_mean: f64 = fast.iter().sum::<f64>() / 16.0;
        assert!((in_mean - out_mean).abs() < 1e-12);
    }

    fn sample_dataset(m: usize) -> Dataset {
        let features = (0..m)
            .map(|i| vec![i as f64, (2 * i) as f64, 1.0, -(i as f64)])
            .collect();
        let labels = (0..m).map(|i| i % 2).collect();
        Dataset::new(features, labels, 2, SplitTag::Full).unwrap()
    }

    #[test]
    fn split_sizes_match_ceiling_rule() {
        let ds = sample_dataset(1372);
        let (train, test) = split(&ds, 0.1, 7).unwrap();
        assert_eq!((train.len(), test.len()), (1235, 137));

        let ds = sample_dataset(10000);
        let (train, test) = split(&ds, 0.1, 7).unwrap();
        assert_eq!((train.len(), test.len()), (9000, 1000));

        let ds = sample_dataset(2500);
        let (train, test) = split(&ds, 0.2, 7).unwrap();
        assert_eq!((train.len(), test.len()), (2000, 500));
    }

    #[test]
    fn split_is_deterministic_disjoint_and_covering() {
        let ds = sample_dataset(101);
        let (tr1, te1) = split(&ds, 0.25, 99).unwrap();
        let (tr2, te2) = split(&ds, 0.25, 99).unwrap();
        assert_eq!(tr1.features, tr2.features);
        assert_eq!(te1.labels, te2.labels);
        assert_eq!(tr1.split_tag, SplitTag::Train);
        assert_eq!(te1.split_tag, SplitTag::Test);

        // Every original row appears exactly once across the two sides
        // (rows are unique by construction).
        let mut seen: Vec<Vec<u64>> = Vec::new();
        for row in tr1.features.iter().chain(te1.features.iter()) {
            let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
            assert!(!seen.contains(&key));
            seen.push(key);
        }
        assert_eq!(seen.len(), 101);

        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
        let two = sample_dataset(2);
        assert!(split(&two, 0.5, 1).is_ok());
        // ceil(2 * 0.8) = 2 leaves the test side empty.
        assert!(split(&two, 0.2, 1).is_err());
        let one = sample_dataset(1);
        assert!(split(&one, 0.5, 1).is_err());
    }

    #[test]
    fn zscore_fit_and_apply() {
        let train = Dataset::new(
            vec![vec![1.0, 5.0], vec![3.0, 5.0]],
            vec![0, 1],
            2,
            SplitTag::Train,
        )
        .unwrap();
        let std = Standardizer::fit_zscore(&train).unwrap();
        let out = std.apply(&train).unwrap();
        // Feature 0: mean 2, std 1 -> (-1, 1). Feature 1 constant -> 0 via floor.
        assert!((out.features[0][0] + 1.0).abs() < 1e-12);
        assert!((out.features[1][0] - 1.0).abs() < 1e-12);
        assert!(out.features[0][1].abs() < 1e-6);

        // Already standardized columns stay put.
        let unit = Dataset::new(
            vec![vec![-1.0], vec![1.0]],
            vec![0, 1],
            2,
            SplitTag::Train,
        )
        .unwrap();
        let std = Standardizer::fit_zscore(&unit).unwrap();
        let out = std.apply(&unit).unwrap();
        assert!((out.features[0][0] + 1.0).abs() < 1e-12);

        // Provenance guard: fitting on a non-train split is an error.
        let full = sample_dataset(4);
        assert!(Standardizer::fit_zscore(&full).is_err());
    }

    #[test]
    fn angle_scale_endpoints() {
        let s = Standardizer::AngleScale;
        let out = s.apply_features(&[0.0, 1.0, 0.5]);
        assert_eq!(out[0], 0.0);
        assert!((out[1] - std::f64::consts::PI).abs() < 1e-15);
        assert!((out[2] - std::f64::consts::PI / 2.0).abs() < 1e-15);
    }
}
