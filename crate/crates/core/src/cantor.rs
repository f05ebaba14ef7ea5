//! Product fat Cantor sets.
//!
//! The 1-D set starts from `[0, 1]`; at step `n` the open middle interval of
//! length `4^{-n}` is removed from each of the `2^{n-1}` remaining intervals. The
//! limit has measure 1/2; the product with itself has area 1/4. Everything is
//! scaled by `scale` and translated to `anchor` (the lower-left corner).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::Circle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatCantorSpec {
    pub ax: f64,
    pub ay: f64,
    pub scale: f64,
    /// Depth of the approximation used for point membership.
    pub depth: u32,
}

/// Deepest level the exact-measure recursions will descend to.
const MAX_LEVEL: u32 = 1000;

/// Length of each depth-`d` interval of the unit 1-D set.
pub fn interval_length(d: u32) -> f64 {
    // (1 + 2^{-d}) / 2^{d+1}
    (1.0 + 0.5f64.powi(d as i32)) * 0.5f64.powi(d as i32 + 1)
}

/// Cantor measure carried by each depth-`d` interval of the unit 1-D set.
pub fn interval_measure(d: u32) -> f64 {
    0.5f64.powi(d as i32 + 1)
}

fn gap_length(step: u32) -> f64 {
    0.25f64.powi(step as i32)
}

/// Bracket `[lower, upper]` on a measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureBracket {
    pub lower: f64,
    pub upper: f64,
}

impl FatCantorSpec {
    pub fn new(anchor: Complex64, scale: f64, depth: u32) -> Self {
        FatCantorSpec {
            ax: anchor.re,
            ay: anchor.im,
            scale,
            depth,
        }
    }

    pub fn anchor(&self) -> Complex64 {
        Complex64::new(self.ax, self.ay)
    }

    /// Area of the limit set, `scale²/4`.
    pub fn area(&self) -> f64 {
        self.scale * self.scale / 4.0
    }

    /// Area of the depth-`d` union of `4^d` squares.
    pub fn approximation_area(&self, d: u32) -> f64 {
        let side = (1u64 << d.min(60)) as f64 * interval_length(d) * self.scale;
        side * side
    }

    /// The `4^d` squares of the depth-`d` approximation (lower-left corner, side).
    pub fn squares(&self, d: u32) -> Vec<(Complex64, f64)> {
        let starts = unit_interval_starts(d);
        let side = interval_length(d) * self.scale;
        let mut out = Vec::with_capacity(starts.len() * starts.len());
        for &y in &starts {
            for &x in &starts {
                out.push((self.anchor() + Complex64::new(x, y) * self.scale, side));
            }
        }
        out
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let u = (z - self.anchor()) / self.scale;
        in_unit_set(u.re, self.depth) && in_unit_set(u.im, self.depth)
    }

    pub fn intersects_closed_disk(&self, c: &Circle) -> bool {
        let d = self.depth.min(4);
        self.squares(d)
            .iter()
            .any(|&(corner, side)| square_disk_min_dist(corner, side, c.center()) <= c.radius())
    }

    /// Rigorous bracket on `m(P ∩ D̄(anchor, h))`, refining `extra_levels` below
    /// the scale of `h`.
    pub fn corner_disk_measure(&self, h: f64, extra_levels: u32) -> MeasureBracket {
        self.disk_measure(self.anchor(), h, extra_levels)
    }

    /// Rigorous bracket on `m(P ∩ D̄(center, h))`. Squares of the construction
    /// entirely inside the disk count fully, squares meeting its boundary are
    /// refined down to `extra_levels` below the scale of `h` and then count
    /// toward the upper bound only.
    pub fn disk_measure(&self, center: Complex64, h: f64, extra_levels: u32) -> MeasureBracket {
        if h <= 0.0 {
            return MeasureBracket {
                lower: 0.0,
                upper: 0.0,
            };
        }
        let t = h / self.scale;
        let p = (center - self.anchor()) / self.scale;
        let mut start = 0;
        while start < MAX_LEVEL && interval_length(start) > t {
            start += 1;
        }
        let max_level = (start + extra_levels).min(MAX_LEVEL);
        let mut lower = 0.0;
        let mut upper = 0.0;
        // (x, y, depth): lower-left corner of a construction square, unit scale
        let mut stack = vec![(0.0f64, 0.0f64, 0u32)];
        while let Some((x, y, d)) = stack.pop() {
            let len = interval_length(d);
            let corner = Complex64::new(x, y);
            let near = square_disk_min_dist(corner, len, p);
            if near > t {
                continue;
            }
            let fx = (p.re - x).abs().max((p.re - x - len).abs());
            let fy = (p.im - y).abs().max((p.im - y - len).abs());
            let mass = interval_measure(d) * interval_measure(d);
            if fx * fx + fy * fy <= t * t {
                lower += mass;
                upper += mass;
                continue;
            }
            if d >= max_level {
                upper += mass;
                continue;
            }
            let child = interval_length(d + 1);
            let offset = child + gap_length(d + 1);
            for (dx, dy) in [(0.0, 0.0), (offset, 0.0), (0.0, offset), (offset, offset)] {
                stack.push((x + dx, y + dy, d + 1));
            }
        }
        let s2 = self.scale * self.scale;
        MeasureBracket {
            lower: lower * s2,
            upper: upper * s2,
        }
    }

    /// Exact 1-D measure of the set intersected with `[0, t]` (unit scale).
    pub fn unit_cumulative(t: f64) -> f64 {
        let mut x = 0.0;
        let mut acc = 0.0;
        for d in 0..MAX_LEVEL {
            let len = interval_length(d);
            if t <= x {
                return acc;
            }
            if t >= x + len {
                return acc + interval_measure(d);
            }
            let child = interval_length(d + 1);
            let right = x + child + gap_length(d + 1);
            if t >= right {
                acc += interval_measure(d + 1);
                x = right;
            } else if t >= x + child {
                return acc + interval_measure(d + 1);
            }
        }
        acc
    }
}

fn unit_interval_starts(d: u32) -> Vec<f64> {
    let mut starts = vec![0.0];
    for step in 1..=d {
        let child = interval_length(step);
        let offset = child + gap_length(step);
        starts = starts.iter().flat_map(|&s| [s, s + offset]).collect();
    }
    starts
}

fn in_unit_set(mut x: f64, depth: u32) -> bool {
    if !(0.0..=1.0).contains(&x) {
        return false;
    }
    for step in 1..=depth {
        let len = interval_length(step - 1);
        let child = interval_length(step);
        if x > child && x < len - child {
            return false;
        }
        if x >= len - child {
            x -= len - child;
        }
    }
    true
}

fn square_disk_min_dist(corner: Complex64, side: f64, p: Complex64) -> f64 {
    let cx = p.re.clamp(corner.re, corner.re + side);
    let cy = p.im.clamp(corner.im, corner.im + side);
    (Complex64::new(cx, cy) - p).norm()
}
