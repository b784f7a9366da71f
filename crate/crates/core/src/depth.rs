//! Depth-layer preprocessing.

use std::collections::VecDeque;

use crate::error::{GbError, Result};
use crate::grid::{Mask, ScalarMap};

/// Indicator of the largest 4-connected region whose neighbouring pixels differ
/// in depth by at most `tolerance`.
///
/// Components are discovered in raster order, so on equal sizes the one
/// containing the earliest pixel wins.
pub fn depth_largest_component(depth: &ScalarMap, tolerance: f64) -> Result<Mask> {
    if !(tolerance > 0.0) {
        return Err(GbError::InvalidConfig("depth tolerance must be positive".into()));
    }
    if depth.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(GbError::InvalidStack("depth map contains non-finite values".into()));
    }
    let (w, h) = depth.dims();
    let d = depth.as_slice();
    let mut label = vec![u32::MAX; w * h];
    let mut best = (0usize, 0u32);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if label[start] != u32::MAX {
            continue;
        }
        label[start] = next;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if label[j] == u32::MAX && (d[j] - d[i]).abs() <= tolerance {
                    label[j] = next;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if size > best.0 {
            best = (size, next);
        }
        next += 1;
    }
    Ok(Mask::from_vec(w, h, label.into_iter().map(|l| l == best.1).collect()))
}
