//! Synthetic vertebral-body phantoms: a bright rounded body with a dark
//! infiltration that is barely brighter than the surrounding background.
//!
//! Generation is a pure function of [`PhantomSpec`]. Randomness comes from
//! [`Lcg64`] and the pixel path uses only integer arithmetic plus IEEE-754
//! add/mul/div/round, so output is bit-identical across platforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{GrayImage, Mask};
use crate::rng::Lcg64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub rows: usize,
    pub cols: usize,
    pub center_row: f64,
    pub center_col: f64,
    pub semi_axis_rows: f64,
    pub semi_axis_cols: f64,
    /// Even superellipse exponent: 2 is an ellipse, larger values square the corners.
    pub corner_exponent: u32,
    pub bright_mean: u16,
    pub dark_mean: u16,
    pub background_mean: u16,
    pub noise_sigma: f64,
    /// Share of the body area covered by the dark blob, in [0, 1).
    pub dark_fraction: f64,
    pub rng_seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            rows: 96,
            cols: 96,
            center_row: 47.5,
            center_col: 47.5,
            semi_axis_rows: 18.0,
            semi_axis_cols: 26.0,
            corner_exponent: 4,
            bright_mean: 160,
            dark_mean: 70,
            background_mean: 60,
            noise_sigma: 8.0,
            dark_fraction: 0.25,
            rng_seed: 1,
        }
    }
}

pub const PHANTOM_MAX_VALUE: u16 = 255;

impl PhantomSpec {
    pub fn with_seed(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.rows == 0 || self.cols == 0 {
            return bad(format!("phantom grid {}x{} is empty", self.rows, self.cols));
        }
        for (name, v) in [
            ("bright_mean", self.bright_mean),
            ("dark_mean", self.dark_mean),
            ("background_mean", self.background_mean),
        ] {
            if v > PHANTOM_MAX_VALUE {
                return bad(format!("{name} {v} exceeds {PHANTOM_MAX_VALUE}"));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma {} must be finite and >= 0", self.noise_sigma));
        }
        if !(0.0..1.0).contains(&self.dark_fraction) {
            return bad(format!("dark_fraction {} outside [0,1)", self.dark_fraction));
        }
        if !(self.semi_axis_rows > 0.0 && self.semi_axis_cols > 0.0) {
            return bad("semi-axes must be positive".into());
        }
        if !(self.center_row.is_finite() && self.center_col.is_finite()) {
            return bad("center must be finite".into());
        }
        if self.corner_exponent < 2 || self.corner_exponent % 2 != 0 {
            return bad(format!(
                "corner_exponent {} must be an even integer >= 2",
                self.corner_exponent
            ));
        }
        Ok(())
    }

    /// Superellipse membership, scaled by `scale` (1.0 is the body outline).
    fn inside(&self, r: usize, c: usize, scale: f64) -> bool {
        let y = (r as f64 - self.center_row) / (self.semi_axis_rows * scale);
        let x = (c as f64 - self.center_col) / (self.semi_axis_cols * scale);
        int_pow(y, self.corner_exponent) + int_pow(x, self.corner_exponent) <= 1.0
    }
}

fn int_pow(base: f64, exp: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomCase {
    pub id: String,
    pub image: GrayImage,
    /// Body mask (bright and dark parts together).
    pub gt: Mask,
    /// The dark infiltration, a connected subset of `gt`.
    pub dark: Mask,
    pub spec: PhantomSpec,
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<PhantomCase> {
    generate_phantom_with_id(spec, format!("{:04}", spec.rng_seed))
}

pub fn generate_phantom_with_id(spec: &PhantomSpec, id: impl Into<String>) -> Result<PhantomCase> {
    spec.validate()?;
    let (rows, cols) = (spec.rows, spec.cols);
    let gt = Mask::from_fn(rows, cols, |r, c| spec.inside(r, c, 1.0))?;
    let body_area = gt.area();
    if body_area == 0 {
        return Err(Error::InvalidParameter(
            "degenerate geometry: body has zero area".into(),
        ));
    }

    let mut rng = Lcg64::new(spec.rng_seed);
    let dark = grow_dark_blob(spec, &gt, &mut rng);

    let sigma = spec.noise_sigma;
    let mut pixels = Vec::with_capacity(rows * cols);
    for idx in 0..rows * cols {
        let mean = if dark.bits()[idx] {
            spec.dark_mean
        } else if gt.bits()[idx] {
            spec.bright_mean
        } else {
            spec.background_mean
        };
        let value = if sigma > 0.0 {
            let v = (f64::from(mean) + sigma * rng.next_gaussian() + 0.5).floor();
            v.clamp(0.0, f64::from(PHANTOM_MAX_VALUE)) as u16
        } else {
            mean
        };
        pixels.push(value);
    }
    let image = GrayImage::new(rows, cols, PHANTOM_MAX_VALUE, pixels)?;

    Ok(PhantomCase {
        id: id.into(),
        image,
        gt,
        dark,
        spec: spec.clone(),
    })
}

/// Eden growth from a random pixel in the inner half of the body, one random
/// 4-connected frontier pixel at a time, until the area target is met.
fn grow_dark_blob(spec: &PhantomSpec, gt: &Mask, rng: &mut Lcg64) -> Mask {
    let (rows, cols) = gt.dims();
    let mut blob = Mask::empty(rows, cols).expect("valid dims");
    let target = (spec.dark_fraction * gt.area() as f64).round() as usize;
    if target == 0 {
        return blob;
    }

    let mut core: Vec<usize> = (0..rows * cols)
        .filter(|&idx| gt.bits()[idx] && spec.inside(idx / cols, idx % cols, 0.5))
        .collect();
    if core.is_empty() {
        core = (0..rows * cols).filter(|&idx| gt.bits()[idx]).collect();
    }
    let start = core[rng.below(core.len())];

    let mut queued = vec![false; rows * cols];
    let mut frontier = vec![start];
    queued[start] = true;
    let mut area = 0;
    while area < target && !frontier.is_empty() {
        let pick = rng.below(frontier.len());
        let idx = frontier.swap_remove(pick);
        let (r, c) = (idx / cols, idx % cols);
        blob.set(r, c, true);
        area += 1;
        let neighbours = [
            (r > 0).then(|| idx - cols),
            (c + 1 < cols).then(|| idx + 1),
            (r + 1 < rows).then(|| idx + cols),
            (c > 0).then(|| idx - 1),
        ];
        for n in neighbours.into_iter().flatten() {
            if gt.bits()[n] && !queued[n] {
                queued[n] = true;
                frontier.push(n);
            }
        }
    }
    blob
}

/// `count` phantoms with the default geometry; case `i` uses `rng_seed = base_seed + i`.
pub fn generate_corpus(count: usize, base_seed: u64) -> Result<Vec<PhantomCase>> {
    generate_corpus_from(&PhantomSpec::default(), count, base_seed)
}

pub fn generate_corpus_from(template: &PhantomSpec, count: usize, base_seed: u64) -> Result<Vec<PhantomCase>> {
    (0..count)
        .map(|i| {
            let spec = PhantomSpec {
                rng_seed: base_seed.wrapping_add(i as u64),
                ..template.clone()
            };
            generate_phantom_with_id(&spec, format!("{i:03}"))
        })
        .collect()
}
