//! Balanced Growth (BGrowth) seeded segmentation and its evaluation toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`imagecore`] holds the raster containers and the PGM / seed encodings.
//! * [`bgrowth`] is the Balanced Growth engine with its naive reference interpreter.
//! * [`baselines`] provides GrowCut (same scan, overwrite rule) and Otsu thresholding.
//! * [`metrics`] computes confusion counts and the six overlap/accuracy measures.
//! * [`seedgen`] generates annotation protocols and synthetic phantoms.
//! * [`harness`] drives experiments, sweeps, CSV tables and the rank-sum test.

pub mod baselines;
pub mod bgrowth;
pub mod error;
pub mod harness;
pub mod imagecore;
pub mod metrics;
pub mod rng;
pub mod seedgen;

pub use error::{Error, Result};
pub use imagecore::{GrayImage, Label, LabelMap, Mask, WeightMap};
