//! Shape-preserving cubic interpolation of sampled curves.
//!
//! Transformed solutions arrive as scattered samples (t_i, x_i) with
//! strictly increasing, generally non-uniform times. They are rebuilt as
//! C^1 piecewise cubics with Fritsch-Carlson slopes, which keeps the
//! interpolant monotone wherever the data is monotone and never overshoots
//! local extrema; spurious wiggles would otherwise leak into derivative
//! residuals and fake symmetry failures.

use crate::{Error, Result};

/// A componentwise monotone cubic through sample nodes, with derivatives.
#[derive(Debug, Clone)]
pub struct MappedCurve {
    ts: Vec<f64>,
    /// per component, per node
    ys: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl MappedCurve {
    /// Fit the interpolant. Needs at least two nodes with strictly
    /// increasing, finite times and finite states of a common dimension.
    pub fn fit(nodes: &[(f64, Vec<f64>)]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidInput("interpolation needs at least two nodes".into()));
        }
        let dim = nodes[0].1.len();
        if dim == 0 {
            return Err(Error::InvalidInput("interpolation nodes must carry a state".into()));
        }
        let mut ts = Vec::with_capacity(nodes.len());
        let mut ys = vec![Vec::with_capacity(nodes.len()); dim];
        for (t, x) in nodes {
            if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("interpolation nodes must be finite".into()));
            }
            if x.len() != dim {
                return Err(Error::InvalidInput("interpolation nodes have mixed dimensions".into()));
            }
            if let Some(prev) = ts.last() {
                if *t <= *prev {
                    return Err(Error::InvalidInput(
                        "interpolation times must increase strictly".into(),
                    ));
                }
            }
            ts.push(*t);
            for (col, v) in ys.iter_mut().zip(x) {
                col.push(*v);
            }
        }
        let slopes = ys.iter().map(|col| fritsch_carlson_slopes(&ts, col)).collect();
        Ok(MappedCurve { ts, ys, slopes })
    }

    pub fn dim(&self) -> usize {
        self.ys.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.ts
    }

    pub fn start_time(&self) -> f64 {
        self.ts[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn node_state(&self, k: usize) -> Vec<f64> {
        self.ys.iter().map(|col| col[k]).collect()
    }

    pub fn node_slope(&self, k: usize) -> Vec<f64> {
        self.slopes.iter().map(|col| col[k]).collect()
    }

    pub fn value(&self, t: f64) -> Result<Vec<f64>> {
        self.eval(t, false)
    }

    pub fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        self.eval(t, true)
    }

    fn eval(&self, t: f64, derivative: bool) -> Result<Vec<f64>> {
        let lo = self.start_time();
        let hi = self.end_time();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        // Exact nodes reproduce stored values and slopes bit for bit.
        if let Ok(k) = self.ts.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            return Ok(if derivative { self.node_slope(k) } else { self.node_state(k) });
        }
        let k = self.ts.partition_point(|&node| node < t) - 1;
        let h = self.ts[k + 1] - self.ts[k];
        let s = (t - self.ts[k]) / h;
        let out = (0..self.dim())
            .map(|c| {
                let (y0, y1) = (self.ys[c][k], self.ys[c][k + 1]);
                let (d0, d1) = (self.slopes[c][k], self.slopes[c][k + 1]);
                if derivative {
                    let h00 = 6.0 * s * s - 6.0 * s;
                    let h10 = 3.0 * s * s - 4.0 * s + 1.0;
                    let h01 = -h00;
                    let h11 = 3.0 * s * s - 2.0 * s;
                    h00 / h * y0 + h10 * d0 + h01 / h * y1 + h11 * d1
                } else {
                    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                    let h10 = s * (1.0 - s) * (1.0 - s);
                    let h01 = s * s * (3.0 - 2.0 * s);
                    let h11 = s * s * (s - 1.0);
                    h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1
                }
            })
            .collect();
        Ok(out)
    }
}

/// Node slopes for one component: weighted harmonic means inside (zero
/// across sign changes and flats), one-sided cubic fits at the ends clamped
/// back to the shape-preserving cone.
fn fritsch_carlson_slopes(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let m = n - 1;
    let h: Vec<f64> = (0..m).map(|k| ts[k + 1] - ts[k]).collect();
    let delta: Vec<f64> = (0..m).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }

    let mut d = vec![0.0; n];
    for k in 1..m {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = clamp_edge(edge_slope(ts, ys, false), delta[0], delta[1]);
    d[n - 1] = clamp_edge(edge_slope(ts, ys, true), delta[m - 1], delta[m - 2]);
    d
}

/// Derivative at the boundary of the cubic (quadratic when only three nodes
/// exist) through the outermost nodes, by Newton divided differences.
fn edge_slope(ts: &[f64], ys: &[f64], upper: bool) -> f64 {
    let n = ts.len();
    let take = n.min(4);
    let (t, y): (Vec<f64>, Vec<f64>) = if upper {
        (
            ts[n - take..].iter().rev().copied().collect(),
            ys[n - take..].iter().rev().copied().collect(),
        )
    } else {
        (ts[..take].to_vec(), ys[..take].to_vec())
    };
    let mut dd = y.clone();
    for level in 1..take {
        for i in (level..take).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (t[i] - t[i - level]);
        }
    }
    // p'(t0) from the Newton form anchored at t0
    let mut slope = dd[1];
    let mut prod = 1.0;
    for level in 2..take {
        prod *= t[0] - t[level - 1];
        slope += dd[level] * prod;
    }
    slope
}

/// Keep an edge slope shape-preserving: no sign flip against the first
/// secant, magnitude at most three times it near an interior sign change.
fn clamp_edge(d: f64, first: f64, second: f64) -> f64 {
    // zero-aware sign, so a flat first secant pins the edge slope to zero
    let sign = |v: f64| {
        if v == 0.0 {
            0.0
        } else {
            v.signum()
        }
    };
    if sign(d) != sign(first) {
        0.0
    } else if sign(first) != sign(second) && d.abs() > 3.0 * first.abs() {
        3.0 * first
    } else {
        d
    }
}
