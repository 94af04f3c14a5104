//! Binary morphology on 8-connected grids.

use crate::imagecore::Mask;

/// Erosion by a 3x3 square; pixels outside the grid count as unset.
pub fn erode_square(mask: &Mask) -> Mask {
    let (rows, cols) = mask.dims();
    Mask::from_fn(rows, cols, |r, c| {
        if r == 0 || c == 0 || r + 1 == rows || c + 1 == cols {
            return false;
        }
        (r - 1..=r + 1).all(|rr| (c - 1..=c + 1).all(|cc| mask.get(rr, cc)))
    })
    .expect("same dimensions as input")
}

/// Chebyshev distance from every pixel to the nearest set pixel of `mask`
/// (0 on the mask itself). `None` when the mask is empty.
///
/// Two raster passes with unit costs on all eight neighbours, which is exact
/// for the chessboard metric.
pub fn chebyshev_distance(mask: &Mask) -> Option<Vec<u32>> {
    if mask.is_empty_mask() {
        return None;
    }
    let (rows, cols) = mask.dims();
    let far = (rows + cols) as u32;
    let mut d: Vec<u32> = mask.bits().iter().map(|&b| if b { 0 } else { far }).collect();

    for r in 0..rows {
        for c in 0..cols {
            let idx = r * cols + c;
            let mut best = d[idx];
            if r > 0 {
                let up = idx - cols;
                best = best.min(d[up] + 1);
                if c > 0 {
                    best = best.min(d[up - 1] + 1);
                }
                if c + 1 < cols {
                    best = best.min(d[up + 1] + 1);
                }
            }
            if c > 0 {
                best = best.min(d[idx - 1] + 1);
            }
            d[idx] = best;
        }
    }
    for r in (0..rows).rev() {
        for c in (0..cols).rev() {
            let idx = r * cols + c;
            let mut best = d[idx];
            if r + 1 < rows {
                let down = idx + cols;
                best = best.min(d[down] + 1);
                if c > 0 {
                    best = best.min(d[down - 1] + 1);
                }
                if c + 1 < cols {
                    best = best.min(d[down + 1] + 1);
                }
            }
            if c + 1 < cols {
                best = best.min(d[idx + 1] + 1);
            }
            d[idx] = best;
        }
    }
    Some(d)
}
