//! `bgrowth` command line.
//!
//! ```text
//! bgrowth segment  --image x.pgm --seeds s.pgm --method bgrowth --out y.pgm [--gt m.pgm] [--trace-dir d/]
//! bgrowth phantoms --count 50 --seed 7 --out dir/
//! bgrowth sweep    --corpus dir/ --axis interior --methods bgrowth,growcut --out rows.csv [--summary s.csv]
//! bgrowth compare  --rows rows.csv --a bgrowth --b growcut [--metric jaccard]
//! bgrowth serve    [--addr 127.0.0.1:8080] [--pixel-budget N]
//! ```
//!
//! Exit status: 0 on success, 1 on a runtime error, 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bgrowth_core::harness::table::{aggregate, rows_to_csv, summary_to_csv, ResultRow};
use bgrowth_core::harness::{
    evaluate_case, read_corpus, run_sweep, segment, wilcoxon_ranksum, write_corpus, Method, MethodParams, SweepAxis,
    SweepSpec,
};
use bgrowth_core::imagecore::{decode_labelmap, encode_labelmap, load_pgm, save_pgm};
use bgrowth_core::seedgen::{generate_corpus, sloppy_seeds_for_case, DEFAULT_EXTERIOR_DISTANCE, DEFAULT_INTERIOR_FRACTION};
use bgrowth_core::{LabelMap, Mask};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bgrowth", version, about = "Seeded segmentation with Balanced Growth, GrowCut and Otsu")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one image and write the label raster.
    Segment(SegmentArgs),
    /// Generate a deterministic phantom corpus with protocol seeds and a manifest.
    Phantoms(PhantomsArgs),
    /// Sweep one seed-protocol parameter over a corpus and tabulate the measures.
    Sweep(SweepArgs),
    /// Rank-sum comparison of two methods from a rows CSV.
    Compare(CompareArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Seed raster: 0 unlabelled, 128 background, 255 foreground. Not needed for otsu.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    #[arg(long, default_value = "bgrowth")]
    pub method: Method,
    /// Output label raster, seed-encoded.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub max_iters: usize,
    /// Ground-truth mask; when given the six measures are printed.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Write one seed-encoded PGM per recorded iteration here.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trace_stride: usize,
}

#[derive(Debug, Args)]
pub struct PhantomsArgs {
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Case i uses rng seed `seed + i`.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_INTERIOR_FRACTION)]
    pub interior_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_EXTERIOR_DISTANCE)]
    pub exterior_distance: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `interior` (area fraction) or `exterior` (ring distance in pixels).
    #[arg(long)]
    pub axis: SweepAxis,
    /// Comma-separated swept values; defaults to 0.1..1.0 or 3..30.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Value of the other protocol parameter.
    #[arg(long)]
    pub fixed: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "bgrowth,growcut,otsu")]
    pub methods: Vec<Method>,
    /// Per-run rows CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Aggregate CSV (mean and sample std per method and axis value).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub max_iters: usize,
    /// Write elapsed_s as 0 so repeated runs are byte-identical.
    #[arg(long)]
    pub omit_timing: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub rows: PathBuf,
    #[arg(long, default_value = "bgrowth")]
    pub a: Method,
    #[arg(long, default_value = "growcut")]
    pub b: Method,
    /// One of accuracy, jaccard, dice, precision, recall, f_measure.
    #[arg(long, default_value = "jaccard")]
    pub metric: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Overrides SEGSERVE_ADDR.
    #[arg(long)]
    pub addr: Option<SocketAddr>,
    /// Overrides SEGSERVE_PIXEL_BUDGET.
    #[arg(long)]
    pub pixel_budget: Option<usize>,
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

/// Parse `argv` (program name first), run, and return the exit status.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let stdout = std::io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

/// Argument combinations clap cannot check on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn run(command: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Segment(a) => cmd_segment(a, out),
        Command::Phantoms(a) => cmd_phantoms(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn cmd_segment(a: SegmentArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let image = load_pgm(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let seeds = match &a.seeds {
        Some(p) => decode_labelmap(&load_pgm(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("decoding seeds {}", p.display()))?,
        None if a.method.needs_seeds() => {
            return Err(UsageError(format!("--seeds is required for {}", a.method)).into())
        }
        None => LabelMap::unlabelled(image.rows(), image.cols())?,
    };
    let params = MethodParams {
        max_iters: a.max_iters,
        capture_trace: a.trace_dir.is_some(),
        trace_stride: a.trace_stride,
    };

    let case_id = a
        .image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (result, metrics) = match &a.gt {
        Some(p) => {
            let gt = Mask::from_image(&load_pgm(p).with_context(|| format!("reading {}", p.display()))?);
            let eval = evaluate_case(&case_id, a.method, &image, &gt, &seeds, &params)?;
            (eval.result, Some(eval.metrics))
        }
        None => (segment(a.method, &image, &seeds, &params)?, None),
    };

    save_pgm(&encode_labelmap(&result.labels), &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let (Some(dir), Some(trace)) = (&a.trace_dir, &result.trace) {
        fs::create_dir_all(dir)?;
        for snap in trace {
            save_pgm(&encode_labelmap(&snap.labels), dir.join(format!("iter_{:04}.pgm", snap.iteration)))?;
        }
    }

    writeln!(
        out,
        "method={} iterations={} converged={} elapsed_s={:.6}",
        a.method,
        result.iterations_run,
        result.converged,
        result.elapsed_secs()
    )?;
    if let Some(m) = metrics {
        writeln!(
            out,
            "accuracy={:.6} jaccard={:.6} dice={:.6} precision={:.6} recall={:.6} f_measure={:.6}",
            m.accuracy, m.jaccard, m.dice, m.precision, m.recall, m.f_measure
        )?;
    }
    Ok(())
}

fn cmd_phantoms(a: PhantomsArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    if a.count == 0 {
        return Err(UsageError("--count must be at least 1".into()).into());
    }
    let cases = generate_corpus(a.count, a.seed)?;
    let seeds = cases
        .iter()
        .map(|c| sloppy_seeds_for_case(c, a.interior_fraction, a.exterior_distance).with_context(|| format!("seeds for case {}", c.id)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    write_corpus(&a.out, &cases, &seeds).with_context(|| format!("writing corpus to {}", a.out.display()))?;
    writeln!(out, "wrote {} cases to {}", cases.len(), a.out.display())?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let corpus = read_corpus(&a.corpus).with_context(|| format!("reading corpus {}", a.corpus.display()))?;
    let mut spec = SweepSpec::default_for(a.axis);
    if let Some(values) = a.values {
        spec.values = values;
    }
    if let Some(fixed) = a.fixed {
        spec.fixed = fixed;
    }
    let params = MethodParams {
        max_iters: a.max_iters,
        ..MethodParams::default()
    };
    let mut outcome = run_sweep(&corpus, &spec, &a.methods, &params)?;
    if a.omit_timing {
        for row in &mut outcome.rows {
            row.elapsed_s = 0.0;
        }
    }
    write_text(&a.out, &rows_to_csv(&outcome.rows))?;
    if let Some(path) = &a.summary {
        write_text(path, &summary_to_csv(&outcome.summary))?;
    }
    writeln!(
        out,
        "{} rows over {} cases, {} values of {}",
        outcome.rows.len(),
        corpus.len(),
        spec.values.len(),
        spec.axis
    )?;
    Ok(())
}

pub const METRICS: [&str; 6] = ["accuracy", "jaccard", "dice", "precision", "recall", "f_measure"];

fn metric_of(row: &ResultRow, metric: &str) -> Option<f64> {
    Some(match metric {
        "accuracy" => row.accuracy,
        "jaccard" => row.jaccard,
        "dice" => row.dice,
        "precision" => row.precision,
        "recall" => row.recall,
        "f_measure" => row.f_measure,
        _ => return None,
    })
}

pub const COMPARE_HEADER: &str = "axis,axis_value,metric,a,b,n_a,n_b,median_a,median_b,u_statistic,p_two_sided,p_method,significant";

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// One rank-sum line per (axis, axis value) group that holds both methods.
pub fn compare_rows(rows: &[ResultRow], a: Method, b: Method, metric: &str) -> anyhow::Result<String> {
    if !METRICS.contains(&metric) {
        bail!(UsageError(format!("unknown metric '{metric}'")));
    }
    let summary = aggregate(rows);
    let mut groups: Vec<(String, f64)> = summary.iter().map(|s| (s.axis.clone(), s.axis_value)).collect();
    groups.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    groups.dedup();

    let mut text = String::from(COMPARE_HEADER);
    text.push('\n');
    for (axis, value) in groups {
        let sample = |m: Method| -> Vec<f64> {
            rows.iter()
                .map(ResultRow::quantized)
                .filter(|r| r.method == m.name() && r.axis == axis && r.axis_value == value)
                .filter_map(|r| metric_of(&r, metric))
                .collect()
        };
        let (mut xa, mut xb) = (sample(a), sample(b));
        if xa.is_empty() || xb.is_empty() {
            continue;
        }
        let r = wilcoxon_ranksum(&xa, &xb)?;
        let method = match r.method {
            bgrowth_core::harness::ranksum::PValueMethod::Exact => "exact",
            bgrowth_core::harness::ranksum::PValueMethod::NormalApproximation => "normal",
        };
        text.push_str(&format!(
            "{axis},{value:.6},{metric},{a},{b},{},{},{:.6},{:.6},{:.1},{:.6e},{method},{}\n",
            r.n1,
            r.n2,
            median(&mut xa),
            median(&mut xb),
            r.u_statistic,
            r.p_two_sided,
            r.significant()
        ));
    }
    Ok(text)
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let rows = bgrowth_core::harness::table::read_rows_csv(&a.rows).with_context(|| format!("reading {}", a.rows.display()))?;
    if rows.is_empty() {
        bail!("{} has no rows", a.rows.display());
    }
    let text = compare_rows(&rows, a.a, a.b, &a.metric)?;
    match &a.out {
        Some(path) => write_text(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> anyhow::Result<()> {
    let mut config = segserve::Config::from_env().map_err(anyhow::Error::msg)?;
    if let Some(addr) = a.addr {
        config.addr = addr;
    }
    if let Some(budget) = a.pixel_budget {
        if budget == 0 {
            bail!(UsageError("--pixel-budget must be positive".into()));
        }
        config.pixel_budget = budget;
    }
    if let Some(dir) = a.static_dir {
        config.static_dir = dir;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(segserve::serve(config))?;
    Ok(())
}
