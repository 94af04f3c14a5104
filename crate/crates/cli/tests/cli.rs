use std::fs;
use std::path::Path;

use bgrowth_cli::{cli_main, compare_rows, run, Cli, COMPARE_HEADER, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use bgrowth_core::harness::table::read_rows_csv;
use bgrowth_core::harness::Method;
use bgrowth_core::imagecore::{decode_labelmap, load_pgm, save_pgm};
use bgrowth_core::{GrayImage, Label};
use clap::Parser;

fn exit_code(args: &[&str]) -> i32 {
    cli_main(std::iter::once("bgrowth").chain(args.iter().copied()))
}

fn run_captured(args: &[&str]) -> String {
    let cli = Cli::try_parse_from(std::iter::once("bgrowth").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    run(cli.command, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Left half dark, right half bright; one seed in each.
fn write_two_tone(dir: &Path) {
    let pixels: Vec<u8> = (0..64).map(|i| if i % 8 < 4 { 40 } else { 200 }).collect();
    save_pgm(&GrayImage::from_u8(8, 8, &pixels).unwrap(), dir.join("img.pgm")).unwrap();
    let mut seeds = vec![0u8; 64];
    seeds[8 * 4] = 128;
    seeds[8 * 4 + 7] = 255;
    save_pgm(&GrayImage::from_u8(8, 8, &seeds).unwrap(), dir.join("seeds.pgm")).unwrap();
    let gt: Vec<u8> = pixels.iter().map(|&p| if p > 100 { 255 } else { 0 }).collect();
    save_pgm(&GrayImage::from_u8(8, 8, &gt).unwrap(), dir.join("gt.pgm")).unwrap();
}

#[test]
fn segment_writes_labels_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_two_tone(d);
    let (img, seeds, gt, out, trace) = (d.join("img.pgm"), d.join("seeds.pgm"), d.join("gt.pgm"), d.join("out.pgm"), d.join("trace"));
    let text = run_captured(&[
        "segment", "--image", s(&img), "--seeds", s(&seeds), "--gt", s(&gt), "--out", s(&out), "--trace-dir", s(&trace),
    ]);
    assert!(text.starts_with("method=bgrowth "), "{text}");
    assert!(text.contains("jaccard=1.000000"), "{text}");

    let labels = decode_labelmap(&load_pgm(&out).unwrap()).unwrap();
    for c in 0..8 {
        let want = if c < 4 { Label::Background } else { Label::Foreground };
        assert_eq!(labels.get(0, c), want, "col {c}");
    }
    assert!(trace.join("iter_0001.pgm").exists());
    let frames = fs::read_dir(&trace).unwrap().count();
    assert!(frames >= 2, "{frames} frames");

    // otsu needs no seeds
    assert_eq!(exit_code(&["segment", "--image", s(&img), "--method", "otsu", "--out", s(&out)]), EXIT_OK);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_two_tone(d);
    let (img, out) = (d.join("img.pgm"), d.join("out.pgm"));
    assert_eq!(exit_code(&["--help"]), EXIT_OK);
    assert_eq!(exit_code(&["--version"]), EXIT_OK);
    assert_eq!(exit_code(&["segment", "--bogus"]), EXIT_USAGE);
    assert_eq!(exit_code(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(exit_code(&["segment", "--image", s(&img), "--out", s(&out)]), EXIT_USAGE);
    assert_eq!(exit_code(&["segment", "--image", s(&img), "--method", "chanvese", "--out", s(&out)]), EXIT_USAGE);
    let missing = d.join("missing.pgm");
    assert_eq!(
        exit_code(&["segment", "--image", s(&missing), "--seeds", s(&missing), "--out", s(&out)]),
        EXIT_RUNTIME
    );
    assert_eq!(exit_code(&["phantoms", "--count", "0", "--out", s(d)]), EXIT_USAGE);
}

#[test]
fn phantoms_sweep_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = d.join("corpus");
    let text = run_captured(&["phantoms", "--count", "6", "--seed", "4", "--out", s(&corpus)]);
    assert!(text.contains("wrote 6 cases"), "{text}");
    let pgms = fs::read_dir(&corpus).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "pgm").count();
    assert_eq!(pgms, 18);
    assert_eq!(fs::read_to_string(corpus.join("manifest.csv")).unwrap().lines().count(), 7);

    let (rows, summary) = (d.join("rows.csv"), d.join("summary.csv"));
    run_captured(&[
        "sweep", "--corpus", s(&corpus), "--axis", "interior", "--values", "0.2,0.6", "--methods", "bgrowth,growcut",
        "--out", s(&rows), "--summary", s(&summary), "--omit-timing",
    ]);
    let parsed = read_rows_csv(&rows).unwrap();
    assert_eq!(parsed.len(), 6 * 2 * 2);
    assert_eq!(fs::read_to_string(&summary).unwrap().lines().count(), 1 + 2 * 2);

    let cmp = d.join("cmp.csv");
    run_captured(&["compare", "--rows", s(&rows), "--out", s(&cmp)]);
    let text = fs::read_to_string(&cmp).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(COMPARE_HEADER));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 2);
    assert!(body[0].starts_with("interior_fraction,0.200000,jaccard,bgrowth,growcut,6,6,"), "{}", body[0]);
    assert!(body.iter().all(|l| l.contains(",exact,")), "{text}");
    assert_eq!(text, compare_rows(&parsed, Method::BGrowth, Method::GrowCut, "jaccard").unwrap());

    assert!(compare_rows(&parsed, Method::BGrowth, Method::GrowCut, "sharpness").is_err());
    assert_eq!(exit_code(&["compare", "--rows", s(&rows), "--metric", "sharpness"]), EXIT_USAGE);
}
