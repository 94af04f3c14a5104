//! Request/response bodies and the handler logic behind each endpoint.
//!
//! Handlers here are plain functions over decoded bodies so they can be
//! exercised without a socket; [`crate::router`] wires them to HTTP.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use bgrowth_core::harness::{segment, Method, MethodParams};
use bgrowth_core::imagecore::{decode_labelmap, encode_labelmap, PgmHeader};
use bgrowth_core::metrics::{Measures, MetricsRow};
use bgrowth_core::seedgen::{sloppy_seeds, generate_phantom, PhantomSpec, DEFAULT_EXTERIOR_DISTANCE, DEFAULT_INTERIOR_FRACTION};
use bgrowth_core::{GrayImage, LabelMap, Mask};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, BAD_ENCODING, DIMENSION_MISMATCH, INVALID_PARAMETER};
use crate::Config;

/// Most snapshots a single response may carry.
pub const MAX_TRACE_SNAPSHOTS: usize = 64;
/// Upper bound on `max_iters` accepted over the wire.
pub const MAX_ITERS_LIMIT: usize = 10_000;

fn default_max_iters() -> usize {
    30
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRequest {
    /// Base64 of a binary PGM.
    pub image: String,
    /// Base64 of a seed-encoded PGM (0 unlabelled, 128 background, 255 foreground).
    pub seeds: String,
    pub method: String,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub trace: bool,
    #[serde(default = "default_stride")]
    pub trace_stride: usize,
    /// Base64 of a mask PGM; any non-zero pixel belongs to the object.
    #[serde(default)]
    pub gt: Option<String>,
    /// Report `elapsed_s` as 0 so identical requests give identical bytes.
    #[serde(default)]
    pub omit_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub iteration: usize,
    pub labels: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub method: String,
    pub labels: String,
    pub iterations_run: usize,
    pub converged: bool,
    pub elapsed_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceFrame>>,
}

pub fn encode_pgm(image: &GrayImage) -> String {
    B64.encode(image.to_pgm_bytes())
}

/// Base64 then PGM decode, rejecting rasters over the pixel budget before
/// any pixel data is touched.
pub fn decode_raster(field: &str, text: &str, pixel_budget: usize) -> Result<GrayImage, ApiError> {
    let bytes = B64
        .decode(text.trim())
        .map_err(|e| ApiError::bad_request(BAD_ENCODING, format!("{field}: base64: {e}")))?;
    let header = PgmHeader::parse(&bytes).map_err(|e| ApiError::from_core(field, e))?;
    let pixels = header.rows.saturating_mul(header.cols);
    if pixels > pixel_budget {
        return Err(ApiError::too_large(format!(
            "{field}: {}x{} = {pixels} pixels exceeds budget of {pixel_budget}",
            header.rows, header.cols
        )));
    }
    GrayImage::from_pgm_bytes(&bytes).map_err(|e| ApiError::from_core(field, e))
}

fn check_dims(field: &str, expected: (usize, usize), got: (usize, usize)) -> Result<(), ApiError> {
    if expected == got {
        Ok(())
    } else {
        Err(ApiError::bad_request(
            DIMENSION_MISMATCH,
            format!(
                "{field} is {}x{} but image is {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
        ))
    }
}

/// Smallest stride at or above `requested` that keeps the snapshot count,
/// final iteration included, within [`MAX_TRACE_SNAPSHOTS`].
pub fn effective_stride(requested: usize, max_iters: usize) -> usize {
    requested.max(max_iters.div_ceil(MAX_TRACE_SNAPSHOTS - 1)).max(1)
}

pub fn handle_segment(config: &Config, req: &SegmentRequest) -> Result<SegmentResponse, ApiError> {
    let method: Method = req
        .method
        .parse()
        .map_err(|e| ApiError::from_core("method", e))?;
    if req.max_iters == 0 || req.max_iters > MAX_ITERS_LIMIT {
        return Err(ApiError::bad_request(
            INVALID_PARAMETER,
            format!("max_iters {} outside 1..={MAX_ITERS_LIMIT}", req.max_iters),
        ));
    }
    if req.trace_stride == 0 {
        return Err(ApiError::bad_request(INVALID_PARAMETER, "trace_stride must be >= 1"));
    }

    let image = decode_raster("image", &req.image, config.pixel_budget)?;
    let seed_raster = decode_raster("seeds", &req.seeds, config.pixel_budget)?;
    check_dims("seeds", image.dims(), seed_raster.dims())?;
    let seeds = decode_labelmap(&seed_raster).map_err(|e| ApiError::from_core("seeds", e))?;
    let gt = match &req.gt {
        Some(text) => {
            let raster = decode_raster("gt", text, config.pixel_budget)?;
            check_dims("gt", image.dims(), raster.dims())?;
            Some(Mask::from_image(&raster))
        }
        None => None,
    };

    let stride = effective_stride(req.trace_stride, req.max_iters);
    let params = MethodParams {
        max_iters: req.max_iters,
        capture_trace: req.trace,
        trace_stride: stride,
    };
    let result = segment(method, &image, &seeds, &params).map_err(|e| ApiError::from_core("request", e))?;
    let elapsed_s = if req.omit_timing { 0.0 } else { result.elapsed_secs() };

    let metrics = gt
        .map(|gt| {
            Measures::compare(&gt, &result.labels.foreground_mask())
                .map(|m| m.into_row("request", method.name(), elapsed_s))
        })
        .transpose()
        .map_err(|e| ApiError::from_core("gt", e))?;

    let trace = result.trace.as_ref().map(|snaps| {
        snaps
            .iter()
            .map(|s| TraceFrame {
                iteration: s.iteration,
                labels: encode_labels(&s.labels),
            })
            .collect::<Vec<_>>()
    });

    Ok(SegmentResponse {
        method: method.name().to_string(),
        labels: encode_labels(&result.labels),
        iterations_run: result.iterations_run,
        converged: result.converged,
        elapsed_s,
        metrics,
        trace_stride: req.trace.then_some(stride),
        trace,
    })
}

fn encode_labels(labels: &LabelMap) -> String {
    encode_pgm(&encode_labelmap(labels))
}

/// Query fields for `GET /api/phantom`; anything omitted takes the default geometry.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomQuery {
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub center_row: Option<f64>,
    pub center_col: Option<f64>,
    pub semi_axis_rows: Option<f64>,
    pub semi_axis_cols: Option<f64>,
    pub corner_exponent: Option<u32>,
    pub bright_mean: Option<u16>,
    pub dark_mean: Option<u16>,
    pub background_mean: Option<u16>,
    pub noise_sigma: Option<f64>,
    pub dark_fraction: Option<f64>,
    pub rng_seed: Option<u64>,
    pub interior_fraction: Option<f64>,
    pub exterior_distance: Option<usize>,
}

impl PhantomQuery {
    pub fn to_spec(&self) -> PhantomSpec {
        let d = PhantomSpec::default();
        let rows = self.rows.unwrap_or(d.rows);
        let cols = self.cols.unwrap_or(d.cols);
        PhantomSpec {
            rows,
            cols,
            // a resized grid keeps the body centred unless told otherwise
            center_row: self.center_row.unwrap_or((rows as f64 - 1.0) / 2.0),
            center_col: self.center_col.unwrap_or((cols as f64 - 1.0) / 2.0),
            semi_axis_rows: self.semi_axis_rows.unwrap_or(d.semi_axis_rows),
            semi_axis_cols: self.semi_axis_cols.unwrap_or(d.semi_axis_cols),
            corner_exponent: self.corner_exponent.unwrap_or(d.corner_exponent),
            bright_mean: self.bright_mean.unwrap_or(d.bright_mean),
            dark_mean: self.dark_mean.unwrap_or(d.dark_mean),
            background_mean: self.background_mean.unwrap_or(d.background_mean),
            noise_sigma: self.noise_sigma.unwrap_or(d.noise_sigma),
            dark_fraction: self.dark_fraction.unwrap_or(d.dark_fraction),
            rng_seed: self.rng_seed.unwrap_or(d.rng_seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomPayload {
    pub id: String,
    pub spec: PhantomSpec,
    pub image: String,
    pub gt: String,
    pub dark: String,
    /// Protocol seeds (interior erosion plus exterior ring), seed-encoded.
    pub seeds: String,
}

pub fn handle_phantom(config: &Config, query: &PhantomQuery) -> Result<PhantomPayload, ApiError> {
    let spec = query.to_spec();
    let pixels = spec.rows.saturating_mul(spec.cols);
    if pixels > config.pixel_budget {
        return Err(ApiError::too_large(format!(
            "{}x{} = {pixels} pixels exceeds budget of {}",
            spec.rows, spec.cols, config.pixel_budget
        )));
    }
    let case = generate_phantom(&spec).map_err(|e| ApiError::from_core("spec", e))?;
    let seeds = sloppy_seeds(
        &case.gt,
        query.interior_fraction.unwrap_or(DEFAULT_INTERIOR_FRACTION),
        query.exterior_distance.unwrap_or(DEFAULT_EXTERIOR_DISTANCE),
    )
    .map_err(|e| ApiError::from_core("seeds", e))?;
    Ok(PhantomPayload {
        id: case.id.clone(),
        spec,
        image: encode_pgm(&case.image),
        gt: encode_pgm(&case.gt.to_image()),
        dark: encode_pgm(&case.dark.to_image()),
        seeds: encode_labels(&seeds),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub name: String,
    pub version: String,
    pub build: BuildInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub profile: String,
    pub target_arch: String,
    pub target_os: String,
    pub pixel_budget: usize,
}

pub fn handle_health(config: &Config) -> Health {
    Health {
        status: "ok".into(),
        name: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        build: BuildInfo {
            profile: if cfg!(debug_assertions) { "debug" } else { "release" }.into(),
            target_arch: std::env::consts::ARCH.into(),
            target_os: std::env::consts::OS.into(),
            pixel_budget: config.pixel_budget,
        },
    }
}
