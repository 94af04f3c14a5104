//! Annotation-variation sweeps over a corpus.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::seedgen::{
    compose_seeds, exterior_ring_seeds, interior_fraction_seeds, DEFAULT_EXTERIOR_DISTANCE,
    DEFAULT_INTERIOR_FRACTION,
};

use super::corpus::EvalCase;
use super::table::{aggregate, quantize, ResultRow, SummaryRow};
use super::{evaluate_case, Method, MethodParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Interior seeds shrink to a fraction of the ground truth; exterior ring fixed.
    InteriorFraction,
    /// Exterior ring moves outward; interior fraction fixed.
    ExteriorDistance,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::InteriorFraction => "interior_fraction",
            SweepAxis::ExteriorDistance => "exterior_distance",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" | "interior_fraction" => Ok(SweepAxis::InteriorFraction),
            "exterior" | "exterior_distance" => Ok(SweepAxis::ExteriorDistance),
            other => Err(Error::InvalidParameter(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Value of the axis that is not swept (exterior distance or interior fraction).
    pub fixed: f64,
}

impl SweepSpec {
    /// 10% to 100% in steps of 10%, exterior ring at the sloppy default.
    pub fn interior_default() -> Self {
        Self {
            axis: SweepAxis::InteriorFraction,
            values: (1..=10).map(|k| k as f64 / 10.0).collect(),
            fixed: DEFAULT_EXTERIOR_DISTANCE as f64,
        }
    }

    /// 3 to 30 pixels in steps of 3, interior at the sloppy default.
    pub fn exterior_default() -> Self {
        Self {
            axis: SweepAxis::ExteriorDistance,
            values: (1..=10).map(|k| 3.0 * k as f64).collect(),
            fixed: DEFAULT_INTERIOR_FRACTION,
        }
    }

    pub fn default_for(axis: SweepAxis) -> Self {
        match axis {
            SweepAxis::InteriorFraction => Self::interior_default(),
            SweepAxis::ExteriorDistance => Self::exterior_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter("sweep has no values".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("sweep values must be strictly increasing".into()));
        }
        let fraction_ok = |v: f64| v > 0.0 && v <= 1.0;
        let distance_ok = |v: f64| v >= 1.0 && v.fract() == 0.0;
        let (swept_ok, fixed_ok) = match self.axis {
            SweepAxis::InteriorFraction => (self.values.iter().all(|&v| fraction_ok(v)), distance_ok(self.fixed)),
            SweepAxis::ExteriorDistance => (self.values.iter().all(|&v| distance_ok(v)), fraction_ok(self.fixed)),
        };
        if !swept_ok || !fixed_ok {
            return Err(Error::InvalidParameter(format!(
                "sweep values outside protocol range for {}",
                self.axis
            )));
        }
        Ok(())
    }

    fn protocol(&self, value: f64) -> (f64, usize) {
        match self.axis {
            SweepAxis::InteriorFraction => (value, self.fixed as usize),
            SweepAxis::ExteriorDistance => (self.fixed, value as usize),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

/// For every axis value, regenerate seeds per protocol, evaluate every method
/// on every case, and aggregate.
pub fn run_sweep(corpus: &[EvalCase], spec: &SweepSpec, methods: &[Method], params: &MethodParams) -> Result<SweepOutcome> {
    if corpus.is_empty() {
        return Err(Error::InvalidParameter("empty corpus".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no methods to run".into()));
    }
    spec.validate()?;

    let mut rows = Vec::with_capacity(corpus.len() * spec.values.len() * methods.len());
    for &value in &spec.values {
        let (fraction, distance) = spec.protocol(value);
        for case in corpus {
            let interior = interior_fraction_seeds(&case.gt, fraction)?;
            let exterior = exterior_ring_seeds(&case.gt, distance, 1)?;
            let seeds = compose_seeds(&interior, &exterior)?;
            for &method in methods {
                let eval = evaluate_case(&case.id, method, &case.image, &case.gt, &seeds, params)?;
                rows.push(ResultRow::new(
                    &eval.metrics,
                    spec.axis.name(),
                    quantize(value),
                    eval.result.iterations_run,
                    eval.result.converged,
                ));
            }
        }
    }
    let summary = aggregate(&rows);
    Ok(SweepOutcome { rows, summary })
}
