//! Symmetries of the trivial equation x' = 0 and their conjugates.
//!
//! Every space-time symmetry of the trivial equation has the shape
//! h(t, x) = (f(t, x), g(x)): an arbitrary invertible time warp at each
//! point, riding on top of a permutation of the horizontal solutions that
//! must not look at time. Pairs (f, g) of that shape form a group under
//! composition (a wreath product of time warps by space maps), and
//! conjugating them through a rectification transports the whole group onto
//! the symmetries of the rectified field.

use crate::domain::{diagonal_points, euclidean_norm, linspace, Interval};
use crate::expr::Expression;
use crate::integrate::{integrate, SolutionCurve, Tolerances, VectorFieldSpec};
use crate::interp::MappedCurve;
use crate::rectify::{Rectification, SpaceTimeMap};
use crate::{Error, Result};

/// One element (f, g) of the symmetry group of x' = 0, acting as
/// (t, x) -> (f(t, x), g(x)). `g` is rejected at construction when it
/// references time; that is what keeps images of horizontal lines
/// horizontal. Inverse data is optional and enables `inverse`,
/// `act_inverse` and invertible maps.
#[derive(Debug, Clone)]
pub struct WreathElement {
    dim: usize,
    f: Expression,
    g: Vec<Expression>,
    /// t-slot inverse: f_inv(f(t, x), x) = t, written in (t, source x)
    f_inv: Option<Expression>,
    g_inv: Option<Vec<Expression>>,
}

impl WreathElement {
    pub fn new(f: Expression, g: Vec<Expression>) -> Result<Self> {
        let dim = g.len();
        if dim == 0 {
            return Err(Error::InvalidInput("a wreath element needs space components".into()));
        }
        if f.dim() != dim || g.iter().any(|e| e.dim() != dim) {
            return Err(Error::InvalidInput("wreath element components disagree in dimension".into()));
        }
        for (i, e) in g.iter().enumerate() {
            if e.references_time() {
                return Err(Error::InvalidInput(format!(
                    "space component {} references t; the space part must be a pure \
                     permutation of trajectories",
                    i + 1
                )));
            }
        }
        Ok(WreathElement { dim, f, g, f_inv: None, g_inv: None })
    }

    /// Attach closed-form inverse data: `f_inv(t, x)` undoes the time warp
    /// (with x the source point) and `g_inv` undoes the space part.
    pub fn with_inverse(mut self, f_inv: Expression, g_inv: Vec<Expression>) -> Result<Self> {
        if f_inv.dim() != self.dim
            || g_inv.len() != self.dim
            || g_inv.iter().any(|e| e.dim() != self.dim)
        {
            return Err(Error::InvalidInput("inverse components disagree in dimension".into()));
        }
        if g_inv.iter().any(|e| e.references_time()) {
            return Err(Error::InvalidInput("the inverse space part must not reference t".into()));
        }
        self.f_inv = Some(f_inv);
        self.g_inv = Some(g_inv);
        Ok(self)
    }

    /// The neutral element (t, x) -> (t, x).
    pub fn identity(dim: usize) -> Self {
        let f = Expression::time(dim);
        let g: Vec<_> = (0..dim).map(|j| Expression::spatial(j, dim).unwrap()).collect();
        WreathElement { dim, f: f.clone(), g: g.clone(), f_inv: Some(f), g_inv: Some(g) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn time_warp(&self) -> &Expression {
        &self.f
    }

    pub fn space_part(&self) -> &[Expression] {
        &self.g
    }

    pub fn has_inverse(&self) -> bool {
        self.f_inv.is_some() && self.g_inv.is_some()
    }

    pub fn act(&self, t: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let tp = self.f.eval(t, x)?;
        let mut xp = Vec::with_capacity(self.dim);
        for e in &self.g {
            xp.push(e.eval(t, x)?);
        }
        Ok((tp, xp))
    }

    pub fn act_inverse(&self, t: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (f_inv, g_inv) = self.inverse_parts()?;
        let mut xs = Vec::with_capacity(self.dim);
        for e in g_inv {
            xs.push(e.eval(t, x)?);
        }
        let ts = f_inv.eval(t, &xs)?;
        Ok((ts, xs))
    }

    fn inverse_parts(&self) -> Result<(&Expression, &[Expression])> {
        match (&self.f_inv, &self.g_inv) {
            (Some(f), Some(g)) => Ok((f, g)),
            _ => Err(Error::MissingInverse("element carries no inverse data".into())),
        }
    }

    /// (a . b)(p) = a(b(p)), built by symbolic substitution. Inverse data
    /// propagates when both factors carry it.
    pub fn compose(a: &WreathElement, b: &WreathElement) -> Result<WreathElement> {
        if a.dim != b.dim {
            return Err(Error::InvalidInput(format!(
                "cannot compose elements of dimensions {} and {}",
                a.dim, b.dim
            )));
        }
        let f = a.f.substitute(Some(&b.f), &b.g)?;
        let g = a
            .g
            .iter()
            .map(|e| e.substitute(None, &b.g))
            .collect::<Result<Vec<_>>>()?;

        let inverse = match (a.inverse_parts(), b.inverse_parts()) {
            (Ok((af_inv, ag_inv)), Ok((bf_inv, bg_inv))) => {
                // Undo a's warp at a's source point b.g(x), then b's warp at x.
                let inner = af_inv.substitute(None, &b.g)?;
                let idx: Vec<_> =
                    (0..a.dim).map(|j| Expression::spatial(j, a.dim).unwrap()).collect();
                let f_inv = bf_inv.substitute(Some(&inner), &idx)?;
                let g_inv = bg_inv
                    .iter()
                    .map(|e| e.substitute(None, ag_inv))
                    .collect::<Result<Vec<_>>>()?;
                Some((f_inv, g_inv))
            }
            _ => None,
        };
        let mut c = WreathElement::new(f, g)?;
        if let Some((fi, gi)) = inverse {
            c = c.with_inverse(fi, gi)?;
        }
        Ok(c)
    }

    /// The group inverse as an element of its own. Requires inverse data.
    pub fn inverse(&self) -> Result<WreathElement> {
        let (f_inv, g_inv) = self.inverse_parts()?;
        let f = f_inv.substitute(None, g_inv)?;
        let new_f_inv = self.f.substitute(None, g_inv)?;
        WreathElement::new(f, g_inv.to_vec())?
            .with_inverse(new_f_inv, self.g.clone())
    }

    /// The element as a general space-time map with symbolic derivatives.
    pub fn to_map(&self) -> Result<SpaceTimeMap> {
        let inverse = match (&self.f_inv, &self.g_inv) {
            (Some(fi), Some(gi)) => Some((fi.substitute(None, gi)?, gi.clone())),
            _ => None,
        };
        SpaceTimeMap::from_expressions(self.f.clone(), self.g.clone(), inverse)
    }

    /// Maximum round-trip defect max_p |p - h^{-1}(h(p))| over a probe grid,
    /// for checking user-supplied inverse data.
    pub fn validate_on_grid(&self, grid: &[(f64, Vec<f64>)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (t, x) in grid {
            let (tp, xp) = self.act(*t, x)?;
            let (tb, xb) = self.act_inverse(tp, &xp)?;
            let mut d = (tb - t) * (tb - t);
            for (u, v) in xb.iter().zip(x) {
                d += (u - v) * (u - v);
            }
            worst = worst.max(d.sqrt());
        }
        Ok(worst)
    }
}

/// Outcome of probing whether a map has the shape (f(t, x), g(x)).
#[derive(Debug, Clone, Copy)]
pub struct TrivialFormCheck {
    pub is_trivial: bool,
    /// largest observed |d(space output)/dt| over the grid
    pub witness: f64,
}

const TRIVIAL_FORM_THRESHOLD: f64 = 1e-8;

/// Probe the time column of the map's derivative over a grid: space outputs
/// of a symmetry of x' = 0 must not move when only t moves.
pub fn is_trivial_symmetry_form(
    map: &SpaceTimeMap,
    grid: &[(f64, Vec<f64>)],
) -> Result<TrivialFormCheck> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("trivial-form probe needs a non-empty grid".into()));
    }
    let mut witness: f64 = 0.0;
    for (t, x) in grid {
        let j = map.jacobian(*t, x)?;
        let mut col = 0.0;
        for i in 1..j.nrows() {
            col += j[(i, 0)] * j[(i, 0)];
        }
        witness = witness.max(col.sqrt());
    }
    Ok(TrivialFormCheck { is_trivial: witness <= TRIVIAL_FORM_THRESHOLD, witness })
}

/// A transformed solution graph, or the record that the image of the graph
/// is not a graph over time (so the map does not transform this solution
/// into a solution of anything).
#[derive(Debug, Clone)]
pub enum TransformedSolution {
    Curve(MappedCurve),
    Undefined { detail: String },
}

impl TransformedSolution {
    pub fn curve(&self) -> Option<&MappedCurve> {
        match self {
            TransformedSolution::Curve(c) => Some(c),
            TransformedSolution::Undefined { .. } => None,
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, TransformedSolution::Undefined { .. })
    }
}

/// Transformed times may run backwards as a whole (the image is still a
/// graph after reversal) but must clear their neighbours by this margin;
/// anything flatter or sign-mixed is treated as a fold.
const MONOTONE_MARGIN: f64 = 1e-10;

/// Push a solution graph through a map: sample it, map the samples, demand
/// strictly monotone image times, and rebuild a curve by monotone cubic
/// interpolation. Points where the map cannot be evaluated (a conjugated
/// map's trajectory escaping, a closed form leaving its domain) make the
/// transform undefined rather than erroring out.
pub fn transform_solution(
    map: &SpaceTimeMap,
    solution: &SolutionCurve,
    samples: usize,
) -> Result<TransformedSolution> {
    if samples < 4 {
        return Err(Error::InvalidInput("transforming a solution needs at least 4 samples".into()));
    }
    let (lo, hi) = solution.covered();
    if hi <= lo {
        return Err(Error::InvalidInput("solution covers a degenerate time range".into()));
    }
    let mut nodes = Vec::with_capacity(samples);
    for t in linspace(lo, hi, samples) {
        let x = solution.sample(t)?;
        nodes.push((t, x));
    }
    transform_samples(map, &nodes)
}

fn transform_samples(
    map: &SpaceTimeMap,
    nodes: &[(f64, Vec<f64>)],
) -> Result<TransformedSolution> {
    let mut image = Vec::with_capacity(nodes.len());
    for (t, x) in nodes {
        match map.apply(*t, x) {
            Ok(p) => image.push(p),
            Err(
                e @ (Error::TrajectoryEscaped { .. }
                | Error::TrajectoryBlowUp { .. }
                | Error::Eval(_)
                | Error::OutOfRange { .. }),
            ) => {
                return Ok(TransformedSolution::Undefined {
                    detail: format!("map undefined at t = {t}: {e}"),
                })
            }
            Err(other) => return Err(other),
        }
    }

    let increasing = image.windows(2).all(|w| w[1].0 - w[0].0 > MONOTONE_MARGIN);
    let decreasing = image.windows(2).all(|w| w[0].0 - w[1].0 > MONOTONE_MARGIN);
    if !increasing && !decreasing {
        let fold = image
            .windows(2)
            .position(|w| (w[1].0 - w[0].0).abs() <= MONOTONE_MARGIN)
            .map(|k| format!("image times stall near index {k}"))
            .unwrap_or_else(|| "image times change direction".into());
        return Ok(TransformedSolution::Undefined { detail: fold });
    }
    if decreasing {
        image.reverse();
    }
    Ok(TransformedSolution::Curve(MappedCurve::fit(&image)?))
}

/// Knobs for `is_symmetry`.
#[derive(Debug, Clone)]
pub struct SymmetryCheckConfig {
    /// sample count per solution graph
    pub samples: usize,
    /// residual ceiling for a pass verdict
    pub threshold: f64,
    /// integration control for the reference solutions
    pub tol: Tolerances,
}

impl Default for SymmetryCheckConfig {
    fn default() -> Self {
        SymmetryCheckConfig { samples: 201, threshold: 1e-4, tol: Tolerances::default() }
    }
}

/// What `is_symmetry` measured.
#[derive(Debug, Clone)]
pub struct SymmetryCheckReport {
    pub tested_solutions: usize,
    /// max over solutions and nodes of |x~'(t) - v(t, x~(t))|
    pub max_residual: f64,
    /// solutions whose image was not a solution graph
    pub undefined_transforms: usize,
    /// one line per initial condition
    pub notes: Vec<String>,
    pub verdict: bool,
}

/// Decide numerically whether a map sends solutions of x' = v(t, x) to
/// solutions. Each initial condition is integrated across the window from
/// the base time, the solution graph is pushed through the map, and the
/// derivative of the rebuilt image curve is compared against the field
/// along it. The verdict passes only when every transform stayed defined
/// and every residual cleared the threshold.
pub fn is_symmetry(
    map: &SpaceTimeMap,
    field: &VectorFieldSpec,
    base_time: f64,
    initial_conditions: &[Vec<f64>],
    window: Interval,
    config: &SymmetryCheckConfig,
) -> Result<SymmetryCheckReport> {
    if initial_conditions.is_empty() {
        return Err(Error::InvalidInput("symmetry check needs initial conditions".into()));
    }
    if !window.is_bounded() || !window.contains(base_time) {
        return Err(Error::InvalidInput(
            "symmetry check needs a bounded window containing the base time".into(),
        ));
    }
    if map.dim() != field.dim() {
        return Err(Error::InvalidInput("map and field dimensions disagree".into()));
    }
    config.tol.validate()?;
    if config.samples < 4 {
        return Err(Error::InvalidInput("symmetry check needs at least 4 samples".into()));
    }

    let mut report = SymmetryCheckReport {
        tested_solutions: 0,
        max_residual: 0.0,
        undefined_transforms: 0,
        notes: Vec::new(),
        verdict: false,
    };

    for (idx, x0) in initial_conditions.iter().enumerate() {
        let nodes = sample_solution(field, base_time, x0, window, config)?;
        report.tested_solutions += 1;
        match transform_samples(map, &nodes)? {
            TransformedSolution::Undefined { detail } => {
                report.undefined_transforms += 1;
                report.notes.push(format!("solution {idx}: undefined transform ({detail})"));
            }
            TransformedSolution::Curve(curve) => match residual_along(&curve, field) {
                Ok(res) => {
                    report.max_residual = report.max_residual.max(res);
                    report.notes.push(format!("solution {idx}: residual {res:.3e}"));
                }
                Err(e) => {
                    report.undefined_transforms += 1;
                    report
                        .notes
                        .push(format!("solution {idx}: field undefined along image ({e})"));
                }
            },
        }
    }

    report.verdict = report.undefined_transforms == 0
        && report.tested_solutions > 0
        && report.max_residual <= config.threshold;
    Ok(report)
}

/// Integrate one initial condition across the window (both directions from
/// the base time) and sample the covered part on a uniform grid.
fn sample_solution(
    field: &VectorFieldSpec,
    base_time: f64,
    x0: &[f64],
    window: Interval,
    config: &SymmetryCheckConfig,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let forward = integrate(field, base_time, x0, window.hi, &config.tol)?;
    let backward = integrate(field, base_time, x0, window.lo, &config.tol)?;
    let (_, hi) = forward.covered();
    let (lo, _) = backward.covered();
    if hi <= lo {
        return Err(Error::InvalidInput(format!(
            "solution from {x0:?} covers no time range inside the window"
        )));
    }
    let mut nodes = Vec::with_capacity(config.samples);
    for t in linspace(lo, hi, config.samples) {
        let x = if t < base_time { backward.sample(t)? } else { forward.sample(t)? };
        nodes.push((t, x));
    }
    Ok(nodes)
}

/// max over the curve's nodes of |curve'(t) - v(t, curve(t))|. Node slopes
/// are where the interpolant is most trustworthy.
/// Derivative at node `k` of the Newton interpolant through the (at most
/// four) nodes nearest to it. Third order on any spacing, and free of the
/// shape clamping the fitted curve applies, which would charge an O(h)
/// penalty at interior extrema to perfectly good symmetries.
fn stencil_slope(ts: &[f64], states: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = ts.len();
    let dim = states[0].len();
    let width = n.min(4);
    let lo = k.saturating_sub(1).min(n - width);
    let t = &ts[lo..lo + width];
    let at = ts[k];
    let window = &states[lo..lo + width];
    let mut out = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut dd: Vec<f64> = window.iter().map(|s| s[c]).collect();
        // divided difference table in place: dd[i] = f[t_0 .. t_i]
        for order in 1..width {
            for i in (order..width).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (t[i] - t[i - order]);
            }
        }
        // derivative of the Newton form at `at`
        let mut value = 0.0;
        let mut prod = 1.0; // prod_{j<order} (at - t_j)
        let mut prod_d = 0.0; // its derivative
        for (order, coeff) in dd.iter().enumerate().skip(1) {
            prod_d = prod_d * (at - t[order - 1]) + prod;
            prod *= at - t[order - 1];
            value += coeff * prod_d;
        }
        out.push(value);
    }
    out
}

fn residual_along(curve: &MappedCurve, field: &VectorFieldSpec) -> Result<f64> {
    let ts = curve.times().to_vec();
    let states: Vec<Vec<f64>> = (0..ts.len()).map(|k| curve.node_state(k)).collect();
    let mut worst: f64 = 0.0;
    for (k, t) in ts.iter().enumerate() {
        let d = stencil_slope(&ts, &states, k);
        let v = field.eval(*t, &states[k])?;
        let diff: Vec<f64> = d.iter().zip(&v).map(|(a, b)| a - b).collect();
        worst = worst.max(euclidean_norm(&diff));
    }
    Ok(worst)
}

/// Conjugate a symmetry of the trivial equation through a rectification:
/// Phi . alpha . Phi^{-1}. The candidate is first probed for the trivial
/// symmetry shape on a grid over the rectification's window and probe box
/// and must carry an inverse; the result then automatically carries
/// Phi . alpha^{-1} . Phi^{-1} as its inverse.
pub fn conjugate_symmetry(r: &Rectification, alpha: &SpaceTimeMap) -> Result<SpaceTimeMap> {
    if alpha.dim() != r.field().dim() {
        return Err(Error::InvalidInput("candidate dimension does not match the field".into()));
    }
    if !alpha.has_inverse() {
        return Err(Error::MissingInverse(
            "conjugation needs the candidate's inverse".into(),
        ));
    }
    let window = r.window();
    let mut grid = Vec::new();
    for t in linspace(window.lo, window.hi, 5) {
        for p in diagonal_points(r.probe_box(), 5) {
            grid.push((t, p));
        }
    }
    let check = is_trivial_symmetry_form(alpha, &grid)?;
    if !check.is_trivial {
        return Err(Error::NotTrivialForm { witness: check.witness });
    }
    let inner = SpaceTimeMap::compose(alpha, &r.inverse_map())?;
    SpaceTimeMap::compose(&r.forward_map(), &inner)
}
