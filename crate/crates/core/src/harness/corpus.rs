//! Corpus directories: `case_<id>_img.pgm`, `case_<id>_gt.pgm` (0/255),
//! `case_<id>_seeds.pgm` (0/128/255) and a `manifest.csv` row per case.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{decode_labelmap, encode_labelmap, load_pgm, save_pgm, GrayImage, LabelMap, Mask};
use crate::seedgen::{PhantomCase, PhantomSpec};

pub const MANIFEST_FILE: &str = "manifest.csv";

/// A case ready for evaluation: image, ground truth and optional stored seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCase {
    pub id: String,
    pub image: GrayImage,
    pub gt: Mask,
    pub seeds: Option<LabelMap>,
}

impl From<&PhantomCase> for EvalCase {
    fn from(case: &PhantomCase) -> Self {
        Self {
            id: case.id.clone(),
            image: case.image.clone(),
            gt: case.gt.clone(),
            seeds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub rng_seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub center_row: f64,
    pub center_col: f64,
    pub semi_axis_rows: f64,
    pub semi_axis_cols: f64,
    pub corner_exponent: u32,
    pub bright_mean: u16,
    pub dark_mean: u16,
    pub background_mean: u16,
    pub noise_sigma: f64,
    pub dark_fraction: f64,
}

impl ManifestEntry {
    pub fn from_spec(id: &str, spec: &PhantomSpec) -> Self {
        Self {
            id: id.to_string(),
            rng_seed: spec.rng_seed,
            rows: spec.rows,
            cols: spec.cols,
            center_row: spec.center_row,
            center_col: spec.center_col,
            semi_axis_rows: spec.semi_axis_rows,
            semi_axis_cols: spec.semi_axis_cols,
            corner_exponent: spec.corner_exponent,
            bright_mean: spec.bright_mean,
            dark_mean: spec.dark_mean,
            background_mean: spec.background_mean,
            noise_sigma: spec.noise_sigma,
            dark_fraction: spec.dark_fraction,
        }
    }

    pub fn to_spec(&self) -> PhantomSpec {
        PhantomSpec {
            rows: self.rows,
            cols: self.cols,
            center_row: self.center_row,
            center_col: self.center_col,
            semi_axis_rows: self.semi_axis_rows,
            semi_axis_cols: self.semi_axis_cols,
            corner_exponent: self.corner_exponent,
            bright_mean: self.bright_mean,
            dark_mean: self.dark_mean,
            background_mean: self.background_mean,
            noise_sigma: self.noise_sigma,
            dark_fraction: self.dark_fraction,
            rng_seed: self.rng_seed,
        }
    }
}

pub fn case_paths(dir: &Path, id: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("case_{id}_img.pgm")),
        dir.join(format!("case_{id}_gt.pgm")),
        dir.join(format!("case_{id}_seeds.pgm")),
    )
}

/// Write every case with the given seeds (same order as `cases`) and the manifest.
pub fn write_corpus(dir: impl AsRef<Path>, cases: &[PhantomCase], seeds: &[LabelMap]) -> Result<()> {
    let dir = dir.as_ref();
    if cases.len() != seeds.len() {
        return Err(Error::InvalidParameter(format!(
            "{} cases but {} seed maps",
            cases.len(),
            seeds.len()
        )));
    }
    fs::create_dir_all(dir)?;
    let mut manifest = csv::Writer::from_path(dir.join(MANIFEST_FILE))?;
    for (case, seed) in cases.iter().zip(seeds) {
        let (img, gt, sd) = case_paths(dir, &case.id);
        save_pgm(&case.image, img)?;
        save_pgm(&case.gt.to_image(), gt)?;
        save_pgm(&encode_labelmap(seed), sd)?;
        manifest.serialize(ManifestEntry::from_spec(&case.id, &case.spec))?;
    }
    manifest.flush()?;
    Ok(())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::Reader::from_path(dir.as_ref().join(MANIFEST_FILE))?;
    Ok(reader.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

/// Load the rasters listed in the manifest, sorted by case id.
pub fn read_corpus(dir: impl AsRef<Path>) -> Result<Vec<EvalCase>> {
    let dir = dir.as_ref();
    let mut cases = read_manifest(dir)?
        .into_iter()
        .map(|entry| {
            let (img, gt, sd) = case_paths(dir, &entry.id);
            let image = load_pgm(img)?;
            let gt = Mask::from_image(&load_pgm(gt)?);
            let seeds = if sd.exists() {
                Some(decode_labelmap(&load_pgm(sd)?)?)
            } else {
                None
            };
            Ok(EvalCase {
                id: entry.id,
                image,
                gt,
                seeds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(cases)
}
