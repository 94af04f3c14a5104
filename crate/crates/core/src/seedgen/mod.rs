//! Programmatic seed annotations: interior shrinking, exterior rings,
//! "sloppy" rectangle-like annotations, and synthetic phantoms to run them on.

pub mod morphology;
pub mod phantom;

pub use morphology::{chebyshev_distance, erode_square};
pub use phantom::{generate_corpus, generate_phantom, PhantomCase, PhantomSpec};

use crate::error::{Error, Result};
use crate::imagecore::{Label, LabelMap, Mask};

pub const DEFAULT_INTERIOR_FRACTION: f64 = 0.5;
pub const DEFAULT_EXTERIOR_DISTANCE: usize = 6;

/// Shrink the ground truth to roughly `fraction` of its area by repeated 3x3 erosion.
///
/// Stops at the first erosion whose area is at most `round(fraction * |gt|)`.
/// If that erosion is empty the previous (last non-empty) one is kept, and when
/// even the first erosion empties the mask, the single-pixel-thick run of
/// `gt` along its centroid row is returned instead.
pub fn interior_fraction_seeds(gt: &Mask, fraction: f64) -> Result<Mask> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "interior fraction {fraction} outside (0,1]"
        )));
    }
    let area = gt.area();
    if area == 0 {
        return Err(Error::EmptyMask);
    }
    let target = (fraction * area as f64).round() as usize;
    if area <= target {
        return Ok(gt.clone());
    }

    let mut previous = gt.clone();
    let mut steps = 0usize;
    loop {
        let eroded = erode_square(&previous);
        steps += 1;
        let eroded_area = eroded.area();
        if eroded_area == 0 {
            return Ok(if steps == 1 { centroid_row_run(gt) } else { previous });
        }
        if eroded_area <= target {
            return Ok(eroded);
        }
        previous = eroded;
    }
}

/// All `gt` pixels on the row nearest the centroid that contains any of them.
pub fn centroid_row_run(gt: &Mask) -> Mask {
    let (rows, cols) = gt.dims();
    let (sum, n) = gt.iter_set().fold((0usize, 0usize), |(s, n), (r, _)| (s + r, n + 1));
    let mut out = Mask::empty(rows, cols).expect("valid dims");
    if n == 0 {
        return out;
    }
    // round(sum / n) with halves rounded up
    let centre = (2 * sum + n) / (2 * n);
    let row_has = |r: usize| (0..cols).any(|c| gt.get(r, c));
    let row = (0..rows)
        .filter(|&r| row_has(r))
        .min_by_key(|&r| (r.abs_diff(centre), r))
        .expect("non-empty mask has a populated row");
    for c in 0..cols {
        if gt.get(row, c) {
            out.set(row, c, true);
        }
    }
    out
}

/// Background ring at Chebyshev distance `[distance_px, distance_px + thickness)`
/// from the ground truth. Where the ring would leave the grid, the grid border
/// pixels closer than `distance_px` (but outside `gt`) are used instead.
pub fn exterior_ring_seeds(gt: &Mask, distance_px: usize, thickness: usize) -> Result<Mask> {
    if distance_px < 1 {
        return Err(Error::InvalidParameter("exterior distance must be >= 1".into()));
    }
    if thickness < 1 {
        return Err(Error::InvalidParameter("ring thickness must be >= 1".into()));
    }
    let dist = chebyshev_distance(gt).ok_or(Error::EmptyMask)?;
    let (rows, cols) = gt.dims();
    let lo = distance_px as u32;
    let hi = (distance_px + thickness) as u32;
    Mask::from_fn(rows, cols, |r, c| {
        let d = dist[r * cols + c];
        let border = r == 0 || c == 0 || r + 1 == rows || c + 1 == cols;
        (lo <= d && d < hi) || (border && d > 0 && d < lo)
    })
}

/// Coarse annotation: shrunken interior as foreground, a ring outside as background.
pub fn sloppy_seeds(gt: &Mask, interior_fraction: f64, exterior_distance: usize) -> Result<LabelMap> {
    let interior = interior_fraction_seeds(gt, interior_fraction)?;
    let exterior = exterior_ring_seeds(gt, exterior_distance, 1)?;
    compose_seeds(&interior, &exterior)
}

/// +1 on `interior`, −1 on `exterior`; the two sets must not overlap.
pub fn compose_seeds(interior: &Mask, exterior: &Mask) -> Result<LabelMap> {
    crate::imagecore::ensure_same_dims(interior.dims(), exterior.dims())?;
    if interior.intersects(exterior) {
        return Err(Error::Precondition(
            "interior and exterior seed sets overlap".into(),
        ));
    }
    let labels = interior
        .bits()
        .iter()
        .zip(exterior.bits())
        .map(|(&i, &e)| match (i, e) {
            (true, _) => Label::Foreground,
            (_, true) => Label::Background,
            _ => Label::Unlabelled,
        })
        .collect();
    LabelMap::new(interior.rows(), interior.cols(), labels)
}

/// Sloppy seeds for a phantom, checked to cover both its dark and bright body parts.
pub fn sloppy_seeds_for_case(case: &PhantomCase, interior_fraction: f64, exterior_distance: usize) -> Result<LabelMap> {
    let seeds = sloppy_seeds(&case.gt, interior_fraction, exterior_distance)?;
    check_interior_coverage(case, &seeds)?;
    Ok(seeds)
}

/// Foreground seeds must touch the dark blob (when there is one) and the bright remainder.
pub fn check_interior_coverage(case: &PhantomCase, seeds: &LabelMap) -> Result<()> {
    let fg = seeds.foreground_mask();
    if !case.dark.is_empty_mask() && !fg.intersects(&case.dark) {
        return Err(Error::Precondition(format!(
            "case {}: interior seeds miss the dark region",
            case.id
        )));
    }
    let bright = Mask::from_fn(case.gt.rows(), case.gt.cols(), |r, c| {
        case.gt.get(r, c) && !case.dark.get(r, c)
    })?;
    if !fg.intersects(&bright) {
        return Err(Error::Precondition(format!(
            "case {}: interior seeds miss the bright region",
            case.id
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize, lo: usize, hi: usize) -> Mask {
        Mask::from_fn(n, n, |r, c| (lo..hi).contains(&r) && (lo..hi).contains(&c)).unwrap()
    }

    /// Disc minus a shifted disc.
    pub(crate) fn crescent() -> Mask {
        Mask::from_fn(24, 24, |r, c| {
            let (y, x) = (r as i64 - 12, c as i64 - 12);
            let (y2, x2) = (r as i64 - 9, c as i64 - 15);
            y * y + x * x <= 100 && y2 * y2 + x2 * x2 > 64
        })
        .unwrap()
    }

    /// Independent oracle: shrink by "all pixels within Chebyshev radius k are set".
    fn brute_interior(gt: &Mask, fraction: f64) -> Mask {
        let (rows, cols) = gt.dims();
        let target = (fraction * gt.area() as f64).round() as usize;
        if gt.area() <= target {
            return gt.clone();
        }
        let core = |k: usize| {
            Mask::from_fn(rows, cols, |r, c| {
                let k = k as i64;
                (-k..=k).all(|dr| {
                    (-k..=k).all(|dc| {
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        rr >= 0 && cc >= 0 && rr < rows as i64 && cc < cols as i64 && gt.get(rr as usize, cc as usize)
                    })
                })
            })
            .unwrap()
        };
        let mut k = 1;
        loop {
            let m = core(k);
            if m.is_empty_mask() {
                return if k == 1 { centroid_row_run(gt) } else { core(k - 1) };
            }
            if m.area() <= target {
                return m;
            }
            k += 1;
        }
    }

    #[test]
    fn full_fraction_is_identity() {
        let gt = crescent();
        assert_eq!(interior_fraction_seeds(&gt, 1.0).unwrap(), gt);
    }

    #[test]
    fn one_erosion_of_square() {
        let gt = Mask::from_fn(10, 10, |_, _| true).unwrap();
        let inner = interior_fraction_seeds(&gt, 0.64).unwrap();
        assert_eq!(inner, square(10, 1, 9));
    }

    #[test]
    fn crescent_fraction_matches_oracle() {
        let gt = crescent();
        for fraction in [0.1, 0.2, 0.3, 0.5, 0.7, 0.9] {
            let got = interior_fraction_seeds(&gt, fraction).unwrap();
            assert_eq!(got, brute_interior(&gt, fraction), "fraction {fraction}");
            assert!(got.is_subset_of(&gt));
            assert!(!got.is_empty_mask());
        }
    }

    #[test]
    fn thin_mask_falls_back_to_line() {
        let gt = Mask::from_fn(9, 9, |r, c| (3..5).contains(&r) && (1..8).contains(&c)).unwrap();
        let line = interior_fraction_seeds(&gt, 0.1).unwrap();
        assert_eq!(line.area(), 7);
        assert!(line.iter_set().all(|(r, _)| r == 4));
    }

    #[test]
    fn interior_errors() {
        let e = Mask::empty(4, 4).unwrap();
        assert!(matches!(interior_fraction_seeds(&e, 0.5), Err(Error::EmptyMask)));
        let gt = square(4, 1, 3);
        assert!(interior_fraction_seeds(&gt, 0.0).is_err());
        assert!(interior_fraction_seeds(&gt, 1.5).is_err());
        assert!(matches!(exterior_ring_seeds(&e, 3, 1), Err(Error::EmptyMask)));
        assert!(exterior_ring_seeds(&gt, 0, 1).is_err());
    }

    #[test]
    fn ring_around_square_is_concentric() {
        let gt = square(20, 8, 12);
        let ring = exterior_ring_seeds(&gt, 2, 1).unwrap();
        let outer = square(20, 6, 14);
        let inner = square(20, 7, 13);
        let expected = Mask::from_fn(20, 20, |r, c| outer.get(r, c) && !inner.get(r, c)).unwrap();
        assert_eq!(ring, expected);
        assert_eq!(ring.area(), 28);
    }

    #[test]
    fn ring_clamps_to_border() {
        let gt = square(10, 4, 6);
        let ring = exterior_ring_seeds(&gt, 30, 1).unwrap();
        let border = Mask::from_fn(10, 10, |r, c| r == 0 || c == 0 || r == 9 || c == 9).unwrap();
        assert_eq!(ring, border);
    }

    #[test]
    fn irregular_ring_matches_brute_force() {
        let gt = crescent();
        let set: Vec<(usize, usize)> = gt.iter_set().collect();
        let ring = exterior_ring_seeds(&gt, 6, 1).unwrap();
        let expected = Mask::from_fn(24, 24, |r, c| {
            let d = set.iter().map(|&(a, b)| r.abs_diff(a).max(c.abs_diff(b))).min().unwrap();
            let border = r == 0 || c == 0 || r == 23 || c == 23;
            d == 6 || (border && d > 0 && d < 6)
        })
        .unwrap();
        assert_eq!(ring, expected);
        assert!(!ring.intersects(&gt));
    }

    #[test]
    fn sloppy_defaults_on_square() {
        let gt = square(30, 10, 20);
        let seeds = sloppy_seeds(&gt, DEFAULT_INTERIOR_FRACTION, DEFAULT_EXTERIOR_DISTANCE).unwrap();
        let fg = seeds.foreground_mask();
        let bg = seeds.mask_of(Label::Background);
        // 100 px gt, target 50: erosions give 64 then 36
        assert_eq!(fg, square(30, 12, 18));
        let outer = square(30, 4, 26);
        let inner = square(30, 5, 25);
        assert_eq!(bg, Mask::from_fn(30, 30, |r, c| outer.get(r, c) && !inner.get(r, c)).unwrap());
    }

    #[test]
    fn tightest_annotation() {
        let gt = square(12, 4, 8);
        let seeds = sloppy_seeds(&gt, 1.0, 1).unwrap();
        assert_eq!(seeds.foreground_mask(), gt);
        assert_eq!(seeds.count(Label::Background), 6 * 6 - 16);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let a = square(5, 1, 3);
        assert!(matches!(compose_seeds(&a, &a), Err(Error::Precondition(_))));
    }
}
