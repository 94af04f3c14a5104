//! Balanced Growth: cellular-automaton label propagation where a conquering
//! neighbour's strength is averaged with the pixel's previous confidence.
//!
//! Scan semantics are shared with [`crate::baselines::run_growcut`]; the two
//! methods differ only in the [`UpdateRule`] applied on conquest.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::imagecore::{ensure_same_dims, GrayImage, Label, LabelMap, WeightMap};

/// Neighbour visiting order: N, NE, E, SE, S, SW, W, NW as (row, col) offsets.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

#[derive(Debug, Clone, PartialEq)]
pub struct BGrowthParams {
    pub max_iters: usize,
    /// Weight deltas at or below this do not count as a change for stopping.
    pub weight_epsilon: f64,
    pub capture_trace: bool,
    pub trace_stride: usize,
}

impl Default for BGrowthParams {
    fn default() -> Self {
        Self {
            max_iters: 30,
            weight_epsilon: 1e-9,
            capture_trace: false,
            trace_stride: 1,
        }
    }
}

impl BGrowthParams {
    pub fn with_max_iters(max_iters: usize) -> Self {
        Self {
            max_iters,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.weight_epsilon) {
            return Err(Error::InvalidParameter(format!(
                "weight_epsilon {} outside [0,1)",
                self.weight_epsilon
            )));
        }
        if self.trace_stride < 1 {
            return Err(Error::InvalidParameter("trace_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// How a conquered pixel's weight is replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// `W <- 0.5 W + 0.5 s` (Balanced Growth).
    Balanced,
    /// `W <- s` (GrowCut).
    Overwrite,
}

impl UpdateRule {
    #[inline(always)]
    pub fn apply(self, old: f64, strength: f64) -> f64 {
        match self {
            UpdateRule::Balanced => 0.5 * old + 0.5 * strength,
            UpdateRule::Overwrite => strength,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSnapshot {
    /// 1-based iteration after which the snapshot was taken.
    pub iteration: usize,
    pub labels: LabelMap,
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub labels: LabelMap,
    pub weights: WeightMap,
    pub iterations_run: usize,
    pub converged: bool,
    pub trace: Option<Vec<TraceSnapshot>>,
    pub elapsed: Duration,
}

impl SegmentationResult {
    pub fn elapsed_secs(&self) -> f64 {
        self.elapsed.as_secs_f64()
    }
}

/// Initial confidences: 1 on every seed, 0 elsewhere.
pub fn init_weights(seeds: &LabelMap) -> WeightMap {
    let weights = seeds
        .labels()
        .iter()
        .map(|l| if l.is_labelled() { 1.0 } else { 0.0 })
        .collect();
    WeightMap::from_raw(seeds.rows(), seeds.cols(), weights)
}

/// Denominator used to normalise intensity differences; all-zero images use 1.
pub fn intensity_denominator(i_max: u16) -> f64 {
    if i_max == 0 {
        1.0
    } else {
        f64::from(i_max)
    }
}

/// Attack strength of a neighbour: its weight scaled by intensity similarity.
pub fn strength_factor(w_neighbor: f64, i_cur: u16, i_neighbor: u16, i_max: u16) -> f64 {
    let diff = f64::from(i_cur.abs_diff(i_neighbor));
    w_neighbor * (1.0 - diff / intensity_denominator(i_max))
}

pub fn run_bgrowth(image: &GrayImage, seeds: &LabelMap, params: &BGrowthParams) -> Result<SegmentationResult> {
    run_engine(image, seeds, params, UpdateRule::Balanced)
}

/// Shared automaton loop. Row-major scan, in-place updates, fixed neighbour order,
/// strict `s > W` for conquest.
pub fn run_engine(
    image: &GrayImage,
    seeds: &LabelMap,
    params: &BGrowthParams,
    rule: UpdateRule,
) -> Result<SegmentationResult> {
    params.validate()?;
    ensure_same_dims(image.dims(), seeds.dims())?;
    if !seeds.has_seeds() {
        return Err(Error::NoSeeds);
    }

    let start = Instant::now();
    let (rows, cols) = image.dims();
    let pixels = image.pixels();
    let denom = intensity_denominator(image.max_value());
    // similarity[d] = 1 - d / i_max, evaluated exactly as in `strength_factor`.
    // Sized for every u16 difference so lookups need no bounds check.
    let mut table = vec![0.0f64; 1 << 16];
    for d in 0..=image.max_value().max(1) {
        table[usize::from(d)] = 1.0 - f64::from(d) / denom;
    }
    let similarity: &Similarity = table.as_slice().try_into().expect("table has 65536 entries");

    let mut state = State {
        labels: seeds.labels().iter().map(|l| l.value()).collect(),
        weights: init_weights(seeds).weights().to_vec(),
        pixels,
        similarity,
        rule,
        eps: params.weight_epsilon,
    };
    let mut trace = params.capture_trace.then(Vec::new);
    let mut iterations_run = 0;
    let mut converged = false;

    for iteration in 1..=params.max_iters {
        let mut changed = false;
        for r in 0..rows {
            if r == 0 || r + 1 == rows || cols < 3 {
                for c in 0..cols {
                    changed |= state.visit_border(r, c, rows, cols);
                }
                continue;
            }
            changed |= state.visit_border(r, 0, rows, cols);
            for c in 1..cols - 1 {
                let idx = r * cols + c;
                let around = [
                    idx - cols,
                    idx - cols + 1,
                    idx + 1,
                    idx + cols + 1,
                    idx + cols,
                    idx + cols - 1,
                    idx - 1,
                    idx - cols - 1,
                ];
                changed |= state.visit(idx, around);
            }
            changed |= state.visit_border(r, cols - 1, rows, cols);
        }
        iterations_run = iteration;
        let done = !changed;
        if let Some(trace) = trace.as_mut() {
            if iteration % params.trace_stride == 0 || done || iteration == params.max_iters {
                trace.push(TraceSnapshot {
                    iteration,
                    labels: to_labelmap(rows, cols, &state.labels),
                });
            }
        }
        if done {
            converged = true;
            break;
        }
    }

    let elapsed = start.elapsed();
    Ok(SegmentationResult {
        labels: to_labelmap(rows, cols, &state.labels),
        weights: WeightMap::from_raw(rows, cols, state.weights),
        iterations_run,
        converged,
        trace,
        elapsed,
    })
}

type Similarity = [f64; 1 << 16];

struct State<'a> {
    labels: Vec<i8>,
    weights: Vec<f64>,
    pixels: &'a [u16],
    similarity: &'a Similarity,
    rule: UpdateRule,
    eps: f64,
}

impl State<'_> {
    #[inline(always)]
    fn strength(&self, idx: usize, n: usize) -> f64 {
        self.weights[n] * self.similarity[usize::from(self.pixels[idx].abs_diff(self.pixels[n]))]
    }

    /// Apply the candidate attacks in neighbour order; true when the change
    /// counts toward non-convergence.
    #[inline(always)]
    fn settle(&mut self, idx: usize, w0: f64, attacks: impl Iterator<Item = (f64, usize)>) -> bool {
        let old_label = self.labels[idx];
        let (mut w, mut label) = (w0, old_label);
        for (s, n) in attacks {
            if s > w {
                w = self.rule.apply(w, s);
                label = self.labels[n];
            }
        }
        self.weights[idx] = w;
        self.labels[idx] = label;
        label != old_label || (w - w0).abs() > self.eps
    }

    /// Interior pixel; `around` lists the eight neighbours in scan order.
    #[inline(always)]
    fn visit(&mut self, idx: usize, around: [usize; 8]) -> bool {
        let w0 = self.weights[idx];
        // s <= w_neighbour <= 1, so a saturated pixel can never be conquered.
        if w0 >= 1.0 {
            return false;
        }
        let mut s = [0.0f64; 8];
        let mut strongest = 0.0f64;
        for k in 0..8 {
            s[k] = self.strength(idx, around[k]);
            strongest = if s[k] > strongest { s[k] } else { strongest };
        }
        if strongest <= w0 {
            return false;
        }
        self.settle(idx, w0, s.into_iter().zip(around))
    }

    fn visit_border(&mut self, r: usize, c: usize, rows: usize, cols: usize) -> bool {
        let idx = r * cols + c;
        let w0 = self.weights[idx];
        if w0 >= 1.0 {
            return false;
        }
        let mut attacks = [(0.0f64, 0usize); 8];
        let mut count = 0;
        for (dr, dc) in NEIGHBOR_OFFSETS {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                continue;
            }
            let n = nr as usize * cols + nc as usize;
            attacks[count] = (self.strength(idx, n), n);
            count += 1;
        }
        self.settle(idx, w0, attacks[..count].iter().copied())
    }
}

fn to_labelmap(rows: usize, cols: usize, values: &[i8]) -> LabelMap {
    let labels = values
        .iter()
        .map(|&v| Label::from_value(v).expect("engine only stores -1/0/1"))
        .collect();
    LabelMap::new(rows, cols, labels).expect("engine preserves dimensions")
}

/// Connected-component labelling for two-valued {0, i_max} images.
///
/// Every pixel takes the label of the seeds inside its 8-connected
/// equal-intensity component; seedless components stay unlabelled. A component
/// holding seeds of both classes is rejected as ambiguous.
pub fn max_contrast_reference(image: &GrayImage, seeds: &LabelMap) -> Result<LabelMap> {
    ensure_same_dims(image.dims(), seeds.dims())?;
    let i_max = image.max_value();
    if let Some(pos) = image.pixels().iter().position(|&p| p != 0 && p != i_max) {
        return Err(Error::Precondition(format!(
            "pixel index {pos} has intensity {} outside {{0, {i_max}}}",
            image.pixels()[pos]
        )));
    }

    let (rows, cols) = image.dims();
    let pixels = image.pixels();
    let mut out = vec![Label::Unlabelled; rows * cols];
    let mut visited = vec![false; rows * cols];
    let mut queue = VecDeque::new();
    let mut component = Vec::new();

    for start in 0..rows * cols {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        component.clear();
        let mut class = Label::Unlabelled;
        while let Some(idx) = queue.pop_front() {
            component.push(idx);
            let seed = seeds.labels()[idx];
            if seed.is_labelled() {
                if class.is_labelled() && class != seed {
                    return Err(Error::Precondition(format!(
                        "component containing ({},{}) holds both seed classes",
                        idx / cols,
                        idx % cols
                    )));
                }
                class = seed;
            }
            let (r, c) = ((idx / cols) as isize, (idx % cols) as isize);
            for (dr, dc) in NEIGHBOR_OFFSETS {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                    continue;
                }
                let nidx = nr as usize * cols + nc as usize;
                if !visited[nidx] && pixels[nidx] == pixels[idx] {
                    visited[nidx] = true;
                    queue.push_back(nidx);
                }
            }
        }
        for &idx in &component {
            out[idx] = class;
        }
    }
    LabelMap::new(rows, cols, out)
}

/// Straight-line interpreter of the automaton, kept as an oracle for the engine.
///
/// No lookup tables, no skipping, 2-D indexing with explicit bounds checks.
pub mod reference {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    pub struct ReferenceOutcome {
        pub labels: Vec<i8>,
        pub weights: Vec<f64>,
        pub iterations_run: usize,
        pub converged: bool,
    }

    pub fn run_reference(
        image: &GrayImage,
        seeds: &LabelMap,
        max_iters: usize,
        weight_epsilon: f64,
        rule: UpdateRule,
    ) -> ReferenceOutcome {
        let rows = image.rows();
        let cols = image.cols();
        let mut img = vec![vec![0u16; cols]; rows];
        let mut lab = vec![vec![0i8; cols]; rows];
        let mut wt = vec![vec![0.0f64; cols]; rows];
        let mut i_max = 0u16;
        for i in 0..rows {
            for j in 0..cols {
                img[i][j] = image.get(i, j);
                if img[i][j] > i_max {
                    i_max = img[i][j];
                }
                lab[i][j] = seeds.get(i, j).value();
                wt[i][j] = if lab[i][j] != 0 { 1.0 } else { 0.0 };
            }
        }
        let denom = if i_max == 0 { 1.0 } else { i_max as f64 };

        let mut iterations_run = 0;
        let mut converged = false;
        for it in 1..=max_iters {
            let mut changed = false;
            for i in 0..rows {
                for j in 0..cols {
                    let before_label = lab[i][j];
                    let before_weight = wt[i][j];
                    for (di, dj) in NEIGHBOR_OFFSETS {
                        let ni = i as isize + di;
                        let nj = j as isize + dj;
                        if ni < 0 || nj < 0 || ni >= rows as isize || nj >= cols as isize {
                            continue;
                        }
                        let (ni, nj) = (ni as usize, nj as usize);
                        if wt[ni][nj] == 0.0 {
                            continue;
                        }
                        let diff = (img[i][j] as f64 - img[ni][nj] as f64).abs();
                        let s = wt[ni][nj] * (1.0 - diff / denom);
                        if s > wt[i][j] {
                            lab[i][j] = lab[ni][nj];
                            wt[i][j] = match rule {
                                UpdateRule::Balanced => 0.5 * wt[i][j] + 0.5 * s,
                                UpdateRule::Overwrite => s,
                            };
                        }
                    }
                    if lab[i][j] != before_label || (wt[i][j] - before_weight).abs() > weight_epsilon {
                        changed = true;
                    }
                }
            }
            iterations_run = it;
            if !changed {
                converged = true;
                break;
            }
        }

        ReferenceOutcome {
            labels: lab.into_iter().flatten().collect(),
            weights: wt.into_iter().flatten().collect(),
            iterations_run,
            converged,
        }
    }
}
