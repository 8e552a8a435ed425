//! Dataset I/O: JSON-lines reading/writing and deterministic splits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study::{StudyRecord, N_CLASSES};

/// Shape and label-distribution summary of a loaded dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_studies: usize,
    pub n_slots: usize,
    pub feature_dim: usize,
    pub label_counts: Vec<usize>,
}

/// Load a JSON-lines dataset. Every study must have `expected_n` slots; the
/// feature dimension must be uniform and, when `expected_d` is given, equal
/// to it. Blank lines are skipped.
pub fn load_dataset(
    path: impl AsRef<Path>,
    expected_n: usize,
    expected_d: Option<usize>,
) -> Result<(Vec<StudyRecord>, DatasetSummary)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);

    let mut studies = Vec::new();
    let mut dim = expected_d;
    let mut label_counts = vec![0usize; N_CLASSES];
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StudyRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: lineno + 1,
            source: e,
        })?;
        let d = record.validate(expected_n, dim)?;
        dim = Some(d);
        label_counts[record.label as usize] += 1;
        studies.push(record);
    }
    if studies.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let summary = DatasetSummary {
        n_studies: studies.len(),
        n_slots: expected_n,
        feature_dim: dim.unwrap(),
        label_counts,
    };
    Ok((studies, summary))
}

/// Write studies as JSON lines, one study per line, in the given order.
pub fn write_dataset(path: impl AsRef<Path>, studies: &[StudyRecord]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for study in studies {
        serde_json::to_writer(&mut w, study)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Train/validation/test splits of a dataset.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Vec<StudyRecord>,
    pub val: Vec<StudyRecord>,
    pub test: Vec<StudyRecord>,
}

/// Shuffle studies with a seeded generator and split them. Validation and
/// test sizes are floors of their fractions; train takes the remainder, so
/// the three parts always cover the input exactly.
pub fn split_dataset(
    mut studies: Vec<StudyRecord>,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<SplitDataset> {
    if !(0.0..1.0).contains(&val_frac)
        || !(0.0..1.0).contains(&test_frac)
        || val_frac + test_frac >= 1.0
    {
        return Err(Error::InvalidConfig(format!(
            "split fractions val={val_frac} test={test_frac} must be in [0, 1) and sum below 1"
        )));
    }
    let n = studies.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    studies.shuffle(&mut rng);

    let n_val = (n as f64 * val_frac).floor() as usize;
    let n_test = (n as f64 * test_frac).floor() as usize;
    let test = studies.split_off(n - n_test);
    let val = studies.split_off(n - n_test - n_val);
    debug_assert_eq!(val.len(), n_val);
    Ok(SplitDataset {
        train: studies,
        val,
        test,
    })
}
