//! Open intervals, open axis-aligned boxes, and the deterministic grids used
//! to probe them.

use crate::{Error, Result};

/// Open interval (lo, hi). Bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidInput(format!(
                "interval bounds must satisfy lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn all() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.lo && v < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Midpoint of a bounded interval.
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Open axis-aligned box, one open interval per spatial coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialBox {
    pub axes: Vec<Interval>,
}

impl SpatialBox {
    pub fn new(axes: Vec<Interval>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("a spatial box needs at least one axis".into()));
        }
        Ok(SpatialBox { axes })
    }

    /// Unbounded box of the given dimension.
    pub fn all(dim: usize) -> Self {
        SpatialBox { axes: vec![Interval::all(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.axes.len() && x.iter().zip(&self.axes).all(|(v, a)| a.contains(*v))
    }

    pub fn is_bounded(&self) -> bool {
        self.axes.iter().all(|a| a.is_bounded())
    }

    pub fn center(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.center()).collect()
    }

    /// Box scaled about its center by `factor` (bounded boxes only).
    pub fn scaled(&self, factor: f64) -> SpatialBox {
        let axes = self
            .axes
            .iter()
            .map(|a| {
                let c = a.center();
                let half = 0.5 * (a.hi - a.lo) * factor;
                Interval { lo: c - half, hi: c + half }
            })
            .collect();
        SpatialBox { axes }
    }
}

/// `count` evenly spaced values covering [lo, hi] inclusively. A single
/// sample lands at the midpoint.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// `count` points strictly inside the box, spread along its main diagonal
/// (cell midpoints). Deterministic; used for space probes where one point
/// per sample index is wanted rather than a full product grid.
pub fn diagonal_points(bx: &SpatialBox, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let s = (i as f64 + 0.5) / count as f64;
            bx.axes.iter().map(|a| a.lo + (a.hi - a.lo) * s).collect()
        })
        .collect()
}

/// Full product grid with `per_axis[j]` inclusive samples along axis `j`.
/// Row-major in the sense that the last axis varies fastest.
pub fn product_grid(bx: &SpatialBox, per_axis: &[usize]) -> Vec<Vec<f64>> {
    assert_eq!(per_axis.len(), bx.dim());
    let axis_values: Vec<Vec<f64>> = bx
        .axes
        .iter()
        .zip(per_axis)
        .map(|(a, &k)| linspace(a.lo, a.hi, k))
        .collect();
    let total: usize = per_axis.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; per_axis.len()];
    for _ in 0..total {
        out.push(idx.iter().enumerate().map(|(j, &i)| axis_values[j][i]).collect());
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < per_axis[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

/// Space-time probe grid: `t_count` times spread over the window paired with
/// `x_count` diagonal points of the box.
pub fn space_time_grid(
    window: Interval,
    bx: &SpatialBox,
    t_count: usize,
    x_count: usize,
) -> Vec<(f64, Vec<f64>)> {
    let times = linspace(window.lo, window.hi, t_count);
    let points = diagonal_points(bx, x_count);
    let mut grid = Vec::with_capacity(t_count * x_count);
    for &t in &times {
        for x in &points {
            grid.push((t, x.clone()));
        }
    }
    grid
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
