//! Randomised checks on the two automata: invariants, flood-fill behaviour on
//! two-valued images, and bit-exact agreement with the reference interpreter.

use bgrowth_core::bgrowth::{max_contrast_reference, reference::run_reference, run_engine, BGrowthParams, UpdateRule};
use bgrowth_core::{GrayImage, Label, LabelMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RULES: [UpdateRule; 2] = [UpdateRule::Balanced, UpdateRule::Overwrite];

fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> GrayImage {
    // smooth-ish field plus noise so that fronts actually compete
    let (a, b) = (rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4));
    let amp = rng.gen_range(20.0..120.0);
    let pixels: Vec<u8> = (0..rows * cols)
        .map(|i| {
            let (r, c) = ((i / cols) as f64, (i % cols) as f64);
            let v = 128.0 + amp * (a * r).sin() * (b * c).cos() + rng.gen_range(-25.0..25.0);
            v.clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::from_u8(rows, cols, &pixels).unwrap()
}

fn random_seeds(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> LabelMap {
    let mut seeds = LabelMap::unlabelled(rows, cols).unwrap();
    let n = rng.gen_range(1..=12);
    for k in 0..n {
        let label = if k % 2 == 0 { Label::Foreground } else { Label::Background };
        let (r0, c0) = (rng.gen_range(0..rows), rng.gen_range(0..cols));
        let len = rng.gen_range(1..6);
        for d in 0..len {
            seeds.set(r0, (c0 + d).min(cols - 1), label);
        }
    }
    seeds
}

#[test]
fn invariants_hold_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..100 {
        let image = random_image(&mut rng, 32, 32);
        let seeds = random_seeds(&mut rng, 32, 32);
        for rule in RULES {
            let params = BGrowthParams {
                capture_trace: true,
                ..BGrowthParams::default()
            };
            let full = run_engine(&image, &seeds, &params, rule).unwrap();
            assert!(full.iterations_run >= 1 && full.iterations_run <= params.max_iters);
            let trace = full.trace.as_ref().unwrap();
            assert_eq!(trace.len(), full.iterations_run);

            let mut prev_labelled: Vec<bool> = seeds.labels().iter().map(|l| l.is_labelled()).collect();
            for (k, snap) in trace.iter().enumerate() {
                assert_eq!(snap.iteration, k + 1);
                for (idx, (&seed, &now)) in seeds.labels().iter().zip(snap.labels.labels()).enumerate() {
                    if seed.is_labelled() {
                        assert_eq!(seed, now, "case {case} {rule:?}: seed {idx} changed");
                    }
                    assert!(!prev_labelled[idx] || now.is_labelled(), "case {case}: label lost at {idx}");
                    prev_labelled[idx] = now.is_labelled();
                }
                // a run capped at k+1 iterations is the state after that iteration
                let capped = run_engine(&image, &seeds, &BGrowthParams::with_max_iters(k + 1), rule).unwrap();
                assert_eq!(capped.labels, snap.labels);
                assert!(capped.weights.weights().iter().all(|w| (0.0..=1.0).contains(w)));
            }
            if !full.converged {
                assert_eq!(full.iterations_run, params.max_iters);
            }
        }
    }
}

/// Label every 8-connected equal-intensity component by whichever seed it
/// contains, using union-find rather than a flood.
fn component_oracle(image: &GrayImage, seeds: &LabelMap) -> Vec<i8> {
    let (rows, cols) = image.dims();
    let mut parent: Vec<usize> = (0..rows * cols).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            for (dr, dc) in [(0isize, 1isize), (1, -1), (1, 0), (1, 1)] {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                    continue;
                }
                let j = nr as usize * cols + nc as usize;
                if image.pixels()[i] == image.pixels()[j] {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
    }
    let mut root_label = vec![0i8; rows * cols];
    for (i, l) in seeds.values().into_iter().enumerate() {
        if l != 0 {
            let root = find(&mut parent, i);
            root_label[root] = l;
        }
    }
    (0..rows * cols).map(|i| root_label[find(&mut parent, i)]).collect()
}

fn blob_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> GrayImage {
    let blobs: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..5))
        .map(|_| {
            (
                rng.gen_range(0.0..rows as f64),
                rng.gen_range(0.0..cols as f64),
                rng.gen_range(2.0..9.0),
            )
        })
        .collect();
    let pixels: Vec<u8> = (0..rows * cols)
        .map(|i| {
            let (r, c) = ((i / cols) as f64, (i % cols) as f64);
            let inside = blobs.iter().any(|&(br, bc, rad)| (r - br).powi(2) + (c - bc).powi(2) <= rad * rad);
            if inside {
                255
            } else {
                0
            }
        })
        .collect();
    GrayImage::from_u8(rows, cols, &pixels).unwrap()
}

#[test]
fn two_valued_images_fill_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (rows, cols) = (32, 32);
    let mut done = 0;
    while done < 50 {
        let image = blob_image(&mut rng, rows, cols);
        // one seed class per component so the expected answer is unambiguous
        let mut seeds = LabelMap::unlabelled(rows, cols).unwrap();
        for _ in 0..rng.gen_range(1..5) {
            let (r, c) = (rng.gen_range(0..rows), rng.gen_range(0..cols));
            let label = if rng.gen_bool(0.5) { Label::Foreground } else { Label::Background };
            seeds.set(r, c, label);
        }
        if max_contrast_reference(&image, &seeds).is_err() {
            continue;
        }
        let expected = component_oracle(&image, &seeds);
        assert_eq!(max_contrast_reference(&image, &seeds).unwrap().values(), expected);
        for rule in RULES {
            let res = run_engine(&image, &seeds, &BGrowthParams::with_max_iters(200), rule).unwrap();
            assert_eq!(res.labels.values(), expected, "blob case {done} {rule:?}");
        }
        done += 1;
    }
}

#[test]
fn engine_matches_reference_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let rows = rng.gen_range(1..40);
        let cols = rng.gen_range(1..40);
        let image = random_image(&mut rng, rows, cols);
        let seeds = random_seeds(&mut rng, rows, cols);
        for rule in RULES {
            let fast = run_engine(&image, &seeds, &BGrowthParams::default(), rule).unwrap();
            let slow = run_reference(&image, &seeds, 30, 1e-9, rule);
            assert_eq!(fast.labels.values(), slow.labels, "case {case} {rule:?}");
            let fw: Vec<u64> = fast.weights.weights().iter().map(|w| w.to_bits()).collect();
            let sw: Vec<u64> = slow.weights.iter().map(|w| w.to_bits()).collect();
            assert_eq!(fw, sw, "case {case} {rule:?}");
            assert_eq!(fast.iterations_run, slow.iterations_run);
            assert_eq!(fast.converged, slow.converged);
        }
    }
}

#[test]
fn sixteen_bit_images_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..5 {
        let (rows, cols) = (24, 17);
        let pixels: Vec<u16> = (0..rows * cols).map(|_| rng.gen_range(0..4096)).collect();
        let image = GrayImage::new(rows, cols, 4095, pixels).unwrap();
        let seeds = random_seeds(&mut rng, rows, cols);
        for rule in RULES {
            let fast = run_engine(&image, &seeds, &BGrowthParams::default(), rule).unwrap();
            let slow = run_reference(&image, &seeds, 30, 1e-9, rule);
            assert_eq!(fast.labels.values(), slow.labels);
            assert_eq!(fast.weights.weights(), slow.weights.as_slice());
        }
    }
}
