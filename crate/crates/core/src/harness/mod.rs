//! Experiment driver: case evaluation, annotation sweeps, CSV tables, corpora
//! on disk and the rank-sum comparison.

pub mod corpus;
pub mod ranksum;
pub mod sweep;
pub mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use corpus::{read_corpus, write_corpus, EvalCase};
pub use ranksum::{wilcoxon_ranksum, RankSumResult, SIGNIFICANCE_LEVEL};
pub use sweep::{run_sweep, SweepAxis, SweepOutcome, SweepSpec};
pub use table::{ResultRow, SummaryRow};

use crate::baselines::{run_growcut, run_otsu, GrowCutParams};
use crate::bgrowth::{run_bgrowth, BGrowthParams, SegmentationResult};
use crate::error::{Error, Result};
use crate::imagecore::{ensure_same_dims, GrayImage, LabelMap, Mask};
use crate::metrics::{Measures, MetricsRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    BGrowth,
    GrowCut,
    Otsu,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::BGrowth, Method::GrowCut, Method::Otsu];

    pub fn name(self) -> &'static str {
        match self {
            Method::BGrowth => "bgrowth",
            Method::GrowCut => "growcut",
            Method::Otsu => "otsu",
        }
    }

    pub fn needs_seeds(self) -> bool {
        !matches!(self, Method::Otsu)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bgrowth" | "bg" => Ok(Method::BGrowth),
            "growcut" | "gc" => Ok(Method::GrowCut),
            "otsu" | "ot" => Ok(Method::Otsu),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Engine settings shared by the seeded methods.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodParams {
    pub max_iters: usize,
    pub capture_trace: bool,
    pub trace_stride: usize,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            max_iters: 30,
            capture_trace: false,
            trace_stride: 1,
        }
    }
}

/// Run one method. Otsu ignores the seeds.
pub fn segment(method: Method, image: &GrayImage, seeds: &LabelMap, params: &MethodParams) -> Result<SegmentationResult> {
    match method {
        Method::BGrowth => run_bgrowth(
            image,
            seeds,
            &BGrowthParams {
                max_iters: params.max_iters,
                capture_trace: params.capture_trace,
                trace_stride: params.trace_stride,
                ..BGrowthParams::default()
            },
        ),
        Method::GrowCut => {
            let mut result = run_growcut(
                image,
                seeds,
                &GrowCutParams {
                    max_iters: params.max_iters,
                    capture_trace: params.capture_trace,
                },
            )?;
            if let Some(trace) = result.trace.as_mut() {
                let stride = params.trace_stride.max(1);
                let last = trace.last().map(|t| t.iteration);
                trace.retain(|t| t.iteration % stride == 0 || Some(t.iteration) == last);
            }
            Ok(result)
        }
        Method::Otsu => {
            ensure_same_dims(image.dims(), seeds.dims())?;
            Ok(run_otsu(image))
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseEvaluation {
    pub metrics: MetricsRow,
    pub result: SegmentationResult,
}

/// Segment, then score the foreground (+1) set against `gt`. `elapsed_s`
/// covers only the engine call.
pub fn evaluate_case(
    case_id: &str,
    method: Method,
    image: &GrayImage,
    gt: &Mask,
    seeds: &LabelMap,
    params: &MethodParams,
) -> Result<CaseEvaluation> {
    ensure_same_dims(image.dims(), gt.dims())?;
    let result = segment(method, image, seeds, params)?;
    let measures = Measures::compare(gt, &result.labels.foreground_mask())?;
    Ok(CaseEvaluation {
        metrics: measures.into_row(case_id, method.name(), result.elapsed_secs()),
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seedgen::{generate_phantom, sloppy_seeds, PhantomSpec};

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("chanvese".parse::<Method>().is_err());
    }

    #[test]
    fn perfect_contrast_phantom_scores_one() {
        let spec = PhantomSpec {
            noise_sigma: 0.0,
            dark_fraction: 0.0,
            background_mean: 0,
            bright_mean: 255,
            ..PhantomSpec::default()
        };
        let case = generate_phantom(&spec).unwrap();
        let seeds = sloppy_seeds(&case.gt, 0.5, 6).unwrap();
        let eval = evaluate_case("p", Method::BGrowth, &case.image, &case.gt, &seeds, &MethodParams::default()).unwrap();
        assert_eq!(eval.metrics.jaccard, 1.0);
        assert_eq!(eval.metrics.method, "bgrowth");
    }

    #[test]
    fn otsu_loses_dark_blob_matching_background() {
        let spec = PhantomSpec {
            noise_sigma: 0.0,
            dark_mean: 60,
            background_mean: 60,
            ..PhantomSpec::default()
        };
        let case = generate_phantom(&spec).unwrap();
        let seeds = sloppy_seeds(&case.gt, 0.5, 6).unwrap();
        let eval = evaluate_case("p", Method::Otsu, &case.image, &case.gt, &seeds, &MethodParams::default()).unwrap();
        assert!(eval.metrics.recall < 1.0);
        assert_eq!(eval.metrics.precision, 1.0);
    }

    #[test]
    fn growcut_trace_respects_stride() {
        let img = GrayImage::from_u8(1, 12, &[10; 12]).unwrap();
        let seeds = LabelMap::from_values(1, 12, &[0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]).unwrap();
        let params = MethodParams { max_iters: 30, capture_trace: true, trace_stride: 4 };
        let res = segment(Method::GrowCut, &img, &seeds, &params).unwrap();
        let iters: Vec<usize> = res.trace.unwrap().iter().map(|t| t.iteration).collect();
        assert_eq!(iters.last().copied(), Some(res.iterations_run));
        assert!(iters[..iters.len() - 1].iter().all(|i| i % 4 == 0));
    }
}
