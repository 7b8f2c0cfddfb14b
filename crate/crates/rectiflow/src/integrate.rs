//! Adaptive integration of x' = v(t, x) with an embedded Runge-Kutta 5(4)
//! pair (Dormand-Prince coefficients), PI step-size control, a 4th-order
//! dense interpolant on every accepted step, and event detection for domain
//! escape and blow-up. The variational equation J' = v_x(t, x(t)) J rides
//! along in the same step sequence when flow Jacobians are requested.

use crate::domain::{euclidean_norm, Interval, SpatialBox};
use crate::expr::{DiffVar, Expression};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Integration tolerances and event thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance per step. Must be at least 10 machine epsilons.
    pub rtol: f64,
    /// Absolute tolerance per step.
    pub atol: f64,
    /// State norm beyond which the trajectory counts as blown up.
    pub blowup_norm: f64,
    /// Smallest allowed step magnitude. `None` resolves to 1e-14 times the
    /// integration window width.
    pub min_step: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1.0e-9, atol: 1.0e-12, blowup_norm: 1.0e8, min_step: None }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let eps10 = 10.0 * f64::EPSILON;
        if !self.rtol.is_finite() || self.rtol < eps10 {
            return Err(Error::InvalidInput(format!(
                "rtol must be at least {eps10:e}, got {}",
                self.rtol
            )));
        }
        if self.atol.is_nan() || self.atol <= 0.0 || self.blowup_norm.is_nan() || self.blowup_norm <= 0.0 {
            return Err(Error::InvalidInput("atol and blowup_norm must be positive".into()));
        }
        if let Some(ms) = self.min_step {
            if ms.is_nan() || ms <= 0.0 {
                return Err(Error::InvalidInput("min_step must be positive".into()));
            }
        }
        Ok(())
    }

    fn resolved_min_step(&self, width: f64) -> f64 {
        self.min_step.unwrap_or(1.0e-14 * width)
    }
}

/// A first-order field x' = v(t, x) on an open time interval and an open
/// spatial box, with its symbolic Jacobian prepared at construction.
#[derive(Debug, Clone)]
pub struct VectorFieldSpec {
    components: Vec<Expression>,
    time_interval: Interval,
    domain: SpatialBox,
    jacobian: Vec<Vec<Expression>>,
}

impl VectorFieldSpec {
    pub fn new(
        components: Vec<Expression>,
        time_interval: Interval,
        domain: SpatialBox,
    ) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::InvalidInput("a field needs at least one component".into()));
        }
        for c in &components {
            if c.dim() != n {
                return Err(Error::InvalidInput(format!(
                    "component declared over dimension {} in a {n}-dimensional field",
                    c.dim()
                )));
            }
        }
        if domain.dim() != n {
            return Err(Error::InvalidInput(format!(
                "domain has dimension {}, field has {n}",
                domain.dim()
            )));
        }
        let jacobian = components
            .iter()
            .map(|c| (0..n).map(|j| c.differentiate(DiffVar::Spatial(j))).collect())
            .collect();
        Ok(VectorFieldSpec { components, time_interval, domain, jacobian })
    }

    /// Convenience constructor over all of space and time.
    pub fn unbounded(components: Vec<Expression>) -> Result<Self> {
        let n = components.len();
        VectorFieldSpec::new(components, Interval::all(), SpatialBox::all(n))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    pub fn time_interval(&self) -> Interval {
        self.time_interval
    }

    pub fn domain(&self) -> &SpatialBox {
        &self.domain
    }

    /// Symbolic entries of the spatial Jacobian, row i, column j.
    pub fn jacobian_entry(&self, i: usize, j: usize) -> &Expression {
        &self.jacobian[i][j]
    }

    pub fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(t, x)?;
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, x, &mut out)?;
        Ok(out)
    }

    /// Spatial Jacobian v_x evaluated at (t, x).
    pub fn eval_jacobian(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.jacobian[i][j].eval(t, x)?;
            }
        }
        Ok(m)
    }
}

/// Which face of the spatial box a trajectory left through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryFace {
    Lower(usize),
    Upper(usize),
}

impl BoundaryFace {
    pub fn axis(&self) -> usize {
        match self {
            BoundaryFace::Lower(a) | BoundaryFace::Upper(a) => *a,
        }
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedTarget,
    DomainEscape { t: f64, face: BoundaryFace },
    BlowUp { t: f64 },
    StepUnderflow { t: f64 },
}

impl Termination {
    pub fn reached_target(&self) -> bool {
        matches!(self, Termination::ReachedTarget)
    }

    /// The event time for any non-target termination.
    pub fn event_time(&self) -> Option<f64> {
        match self {
            Termination::ReachedTarget => None,
            Termination::DomainEscape { t, .. }
            | Termination::BlowUp { t }
            | Termination::StepUnderflow { t } => Some(*t),
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Error coefficients (difference of the embedded orders); the last entry
// weights the FSAL stage.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the 4th-order interpolant.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FACC1: f64 = 5.0; // reciprocal of the max shrink factor 0.2
const FACC2: f64 = 0.1; // reciprocal of the max growth factor 10
const MAX_STEPS: usize = 2_000_000;

/// One accepted step with its dense-output coefficients. `t_end` equals
/// `t_start + h` except when an event truncated the step.
#[derive(Debug, Clone)]
struct DenseSegment {
    t_start: f64,
    h: f64,
    t_end: f64,
    y_start: Vec<f64>,
    y_end: Vec<f64>,
    cont: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval_component(&self, s: f64, i: usize) -> f64 {
        let s1 = 1.0 - s;
        self.cont[0][i]
            + s * (self.cont[1][i]
                + s1 * (self.cont[2][i] + s * (self.cont[3][i] + s1 * self.cont[4][i])))
    }

    fn eval_range(&self, s: f64, lo: usize, hi: usize, out: &mut [f64]) {
        for (o, i) in out.iter_mut().zip(lo..hi) {
            *o = self.eval_component(s, i);
        }
    }
}

/// Numerical solution with dense output over the covered time range.
#[derive(Debug, Clone)]
pub struct SolutionCurve {
    dim: usize,
    base_time: f64,
    base_state: Vec<f64>,
    dir: f64,
    segments: Vec<DenseSegment>,
    termination: Termination,
    accepted: usize,
    rejected: usize,
}

impl SolutionCurve {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> (f64, &[f64]) {
        (self.base_time, &self.base_state)
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Accepted nodes (t_i, x_i) in integration order, starting at the base
    /// point.
    pub fn nodes(&self) -> Vec<(f64, Vec<f64>)> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push((self.base_time, self.base_state.clone()));
        for seg in &self.segments {
            out.push((seg.t_end, seg.y_end[..self.dim].to_vec()));
        }
        out
    }

    /// Time range covered by the curve, as (lower, upper) regardless of
    /// integration direction.
    pub fn covered(&self) -> (f64, f64) {
        let end = self.end_time();
        if self.base_time <= end {
            (self.base_time, end)
        } else {
            (end, self.base_time)
        }
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(self.base_time, |s| s.t_end)
    }

    pub fn end_state(&self) -> Vec<f64> {
        self.segments
            .last()
            .map_or(self.base_state.clone(), |s| s.y_end[..self.dim].to_vec())
    }

    /// Interpolated state at time `t` inside the covered range. Node times
    /// reproduce their node values exactly.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.covered();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        if t == self.base_time {
            return Ok(self.base_state.clone());
        }
        // first segment whose end lies at or past t in integration direction
        let idx = self
            .segments
            .partition_point(|seg| self.dir * (seg.t_end - t) < 0.0)
            .min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        if t == seg.t_start {
            return Ok(seg.y_start[..self.dim].to_vec());
        }
        if t == seg.t_end {
            return Ok(seg.y_end[..self.dim].to_vec());
        }
        let s = (t - seg.t_start) / seg.h;
        let mut out = vec![0.0; self.dim];
        seg.eval_range(s, 0, self.dim, &mut out);
        Ok(out)
    }
}

/// Flow Jacobians d phi / d x0 along a trajectory, one per accepted node.
/// The first node carries the identity.
#[derive(Debug, Clone)]
pub struct JacobianCurve {
    nodes: Vec<(f64, DMatrix<f64>)>,
}

impl JacobianCurve {
    pub fn nodes(&self) -> &[(f64, DMatrix<f64>)] {
        &self.nodes
    }

    pub fn final_jacobian(&self) -> &DMatrix<f64> {
        &self.nodes.last().expect("jacobian curve has at least the base node").1
    }
}

struct Stepper<'a> {
    field: &'a VectorFieldSpec,
    /// total integrated dimension (n, or n + n*n with the variational block)
    m: usize,
    variational: bool,
}

impl<'a> Stepper<'a> {
    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.field.dim();
        self.field.eval_into(t, &y[..n], &mut out[..n])?;
        if self.variational {
            // J' = A J, J stored row-major after the state
            for i in 0..n {
                let mut row = vec![0.0; n];
                for (k, r) in row.iter_mut().enumerate() {
                    *r = self.field.jacobian[i][k].eval(t, &y[..n])?;
                }
                for j in 0..n {
                    let mut acc = 0.0;
                    for (k, r) in row.iter().enumerate() {
                        acc += r * y[n + k * n + j];
                    }
                    out[n + i * n + j] = acc;
                }
            }
        }
        Ok(())
    }
}

fn rms_scaled(v: &[f64], y0: &[f64], y1: &[f64], atol: f64, rtol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..v.len() {
        let sk = atol + rtol * y0[i].abs().max(y1[i].abs());
        let q = v[i] / sk;
        acc += q * q;
    }
    (acc / v.len() as f64).sqrt()
}

fn initial_step(
    stepper: &Stepper,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    dir: f64,
    span: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let m = y0.len();
    let sk: Vec<f64> = y0.iter().map(|y| tol.atol + tol.rtol * y.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter().zip(&sk).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / m as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1.0e-5 || d1 < 1.0e-5 { 1.0e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + dir * h0 * f).collect();
    let mut f1 = vec![0.0; m];
    match stepper.rhs(t0 + dir * h0, &y1, &mut f1) {
        Ok(()) => {}
        Err(_) => return Ok(dir * (h0 * 1.0e-2).max(1.0e-10 * span)),
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let der = d1.max(d2);
    let h1 = if der <= 1.0e-15 {
        (1.0e-6f64).max(h0 * 1.0e-3)
    } else {
        (0.01 / der).powf(0.2)
    };
    Ok(dir * (100.0 * h0).min(h1).min(span))
}

struct EventHit {
    s: f64,
    termination: Termination,
}

/// Locate the earliest event inside an accepted step, if any. `check` maps a
/// dense-output parameter s in [0, 1] to a signed violation (positive once
/// the event has happened).
fn bisect_event(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // refine essentially to machine precision; the evaluations are cheap
    // polynomial work, so there is no reason to stop early
    let tol = 4.0 * f64::EPSILON;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn detect_events(seg: &DenseSegment, n: usize, domain: &SpatialBox, blowup_norm: f64) -> Option<EventHit> {
    let mut best: Option<EventHit> = None;
    let mut consider = |s: f64, termination: Termination| {
        if best.as_ref().is_none_or(|b| s < b.s) {
            best = Some(EventHit { s, termination });
        }
    };

    // domain faces: trajectory starts strictly inside each step
    for (axis, iv) in domain.axes.iter().enumerate() {
        if iv.lo.is_finite() {
            let g = |s: f64| iv.lo - seg.eval_component(s, axis);
            for probe in [0.5, 1.0] {
                if g(probe) >= 0.0 {
                    let s = bisect_event(&g, 0.0, probe);
                    let t = seg.t_start + s * seg.h;
                    consider(s, Termination::DomainEscape { t, face: BoundaryFace::Lower(axis) });
                    break;
                }
            }
        }
        if iv.hi.is_finite() {
            let g = |s: f64| seg.eval_component(s, axis) - iv.hi;
            for probe in [0.5, 1.0] {
                if g(probe) >= 0.0 {
                    let s = bisect_event(&g, 0.0, probe);
                    let t = seg.t_start + s * seg.h;
                    consider(s, Termination::DomainEscape { t, face: BoundaryFace::Upper(axis) });
                    break;
                }
            }
        }
    }

    // blow-up in norm
    let gnorm = |s: f64| {
        let mut state = vec![0.0; n];
        seg.eval_range(s, 0, n, &mut state);
        euclidean_norm(&state) - blowup_norm
    };
    for probe in [0.5, 1.0] {
        if gnorm(probe) >= 0.0 {
            let s = bisect_event(&gnorm, 0.0, probe);
            let t = seg.t_start + s * seg.h;
            consider(s, Termination::BlowUp { t });
            break;
        }
    }

    best
}

fn run(
    stepper: &Stepper,
    t0: f64,
    y0: Vec<f64>,
    t_target: f64,
    tol: &Tolerances,
) -> Result<SolutionCurve> {
    let n = stepper.field.dim();
    let m = stepper.m;
    tol.validate()?;
    if !stepper.field.time_interval.contains(t0) {
        return Err(Error::InvalidInput(format!(
            "base time {t0} lies outside the field's time interval"
        )));
    }
    {
        let iv = stepper.field.time_interval;
        if !(t_target >= iv.lo && t_target <= iv.hi) {
            return Err(Error::InvalidInput(format!(
                "target time {t_target} lies outside the closure of the time interval"
            )));
        }
    }
    if !stepper.field.domain.contains(&y0[..n]) {
        return Err(Error::InvalidInput("initial state lies outside the spatial domain".into()));
    }
    if euclidean_norm(&y0[..n]) > tol.blowup_norm {
        return Err(Error::InvalidInput("initial state already exceeds the blow-up norm".into()));
    }

    let dir = if t_target >= t0 { 1.0 } else { -1.0 };
    let span = (t_target - t0).abs();

    let mut curve = SolutionCurve {
        dim: n,
        base_time: t0,
        base_state: y0[..n].to_vec(),
        dir,
        segments: Vec::new(),
        termination: Termination::ReachedTarget,
        accepted: 0,
        rejected: 0,
    };
    if span == 0.0 {
        return Ok(curve);
    }

    let min_step = tol.resolved_min_step(span);
    let mut t = t0;
    let mut y = y0;
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; m]).collect();
    stepper.rhs(t, &y, &mut k[0])?;
    let mut h = initial_step(stepper, t, &y, &k[0], dir, span, tol)?;
    let mut facold: f64 = 1.0e-4;
    let mut rejected_last = false;
    let mut y_stage = vec![0.0; m];
    let mut y_new = vec![0.0; m];
    let mut err_vec = vec![0.0; m];

    for _step in 0..MAX_STEPS {
        if dir * (t - t_target) >= 0.0 {
            curve.termination = Termination::ReachedTarget;
            return Ok(curve);
        }
        let mut last = false;
        if dir * (t + h - t_target) >= 0.0 {
            h = t_target - t;
            last = true;
        }
        if h.abs() < min_step && !last {
            curve.termination = Termination::StepUnderflow { t };
            return Ok(curve);
        }
        if t + h == t {
            curve.termination = Termination::StepUnderflow { t };
            return Ok(curve);
        }

        // six derivative stages beyond the FSAL one
        let mut stage_error = None;
        for s in 0..6 {
            for i in 0..m {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            let t_stage = t + C[s] * h;
            let dst = if s < 5 { s + 1 } else { 6 };
            if dst == 6 {
                // the row s = 5 produces the 5th-order solution itself
                y_new.copy_from_slice(&y_stage);
            }
            let target = if dst == 6 { t + h } else { t_stage };
            let buf = if dst == 6 { &mut k[6] } else { &mut k[dst] };
            if let Err(e) = stepper.rhs(target, if dst == 6 { &y_new } else { &y_stage }, buf) {
                stage_error = Some(e);
                break;
            }
        }
        if let Some(e) = stage_error {
            // transient failure (a stage probed outside the expression's
            // domain): shrink and retry until the step floor
            if h.abs() * 0.5 < min_step {
                return Err(e);
            }
            h *= 0.5;
            rejected_last = true;
            curve.rejected += 1;
            continue;
        }

        for i in 0..m {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    acc += E[j] * kj[i];
                }
            }
            err_vec[i] = h * acc;
        }
        let err = rms_scaled(&err_vec, &y, &y_new, tol.atol, tol.rtol);

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // accepted
            curve.accepted += 1;

            let mut cont = [
                vec![0.0; m],
                vec![0.0; m],
                vec![0.0; m],
                vec![0.0; m],
                vec![0.0; m],
            ];
            for i in 0..m {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    if D[j] != 0.0 {
                        acc += D[j] * kj[i];
                    }
                }
                cont[4][i] = h * acc;
            }
            let t_end = if last { t_target } else { t + h };
            let mut seg = DenseSegment {
                t_start: t,
                h,
                t_end,
                y_start: y.clone(),
                y_end: y_new.clone(),
                cont,
            };

            if let Some(hit) = detect_events(&seg, n, &stepper.field.domain, tol.blowup_norm) {
                let t_hit = seg.t_start + hit.s * seg.h;
                let mut y_hit = vec![0.0; m];
                seg.eval_range(hit.s, 0, m, &mut y_hit);
                if let Termination::DomainEscape { face, .. } = hit.termination {
                    // land the reported state exactly on the face
                    let (axis, value) = match face {
                        BoundaryFace::Lower(a) => (a, stepper.field.domain.axes[a].lo),
                        BoundaryFace::Upper(a) => (a, stepper.field.domain.axes[a].hi),
                    };
                    y_hit[axis] = value;
                }
                seg.t_end = t_hit;
                seg.y_end = y_hit;
                curve.termination = hit.termination;
                curve.segments.push(seg);
                return Ok(curve);
            }

            t = t_end;
            y.copy_from_slice(&y_new);
            k.swap(0, 6); // FSAL
            curve.segments.push(seg);

            let mut fac = fac11 / facold.powf(BETA);
            fac = FACC2.max(FACC1.min(fac / SAFE));
            facold = err.max(1.0e-4);
            let mut h_new = h / fac;
            if rejected_last {
                // no growth immediately after a rejection
                h_new = dir * h_new.abs().min(h.abs());
                rejected_last = false;
            }
            h = h_new;
        } else {
            h /= FACC1.min(fac11 / SAFE);
            rejected_last = true;
            curve.rejected += 1;
        }
    }
    Err(Error::StepBudget { t })
}

/// Integrate from (t0, x0) toward `t_target` (either direction). Events are
/// reported in the curve's termination, not as errors.
pub fn integrate(
    field: &VectorFieldSpec,
    t0: f64,
    x0: &[f64],
    t_target: f64,
    tol: &Tolerances,
) -> Result<SolutionCurve> {
    if x0.len() != field.dim() {
        return Err(Error::InvalidInput(format!(
            "initial state has dimension {}, field has {}",
            x0.len(),
            field.dim()
        )));
    }
    let stepper = Stepper { field, m: field.dim(), variational: false };
    run(&stepper, t0, x0.to_vec(), t_target, tol)
}

/// Integrate the state together with the variational equation
/// J' = v_x(t, x(t)) J, J(t0) = I. Both share one step sequence; the error
/// control sees the augmented vector.
pub fn integrate_with_variational(
    field: &VectorFieldSpec,
    t0: f64,
    x0: &[f64],
    t_target: f64,
    tol: &Tolerances,
) -> Result<(SolutionCurve, JacobianCurve)> {
    let n = field.dim();
    if x0.len() != n {
        return Err(Error::InvalidInput(format!(
            "initial state has dimension {}, field has {n}",
            x0.len()
        )));
    }
    let stepper = Stepper { field, m: n + n * n, variational: true };
    let mut y0 = vec![0.0; n + n * n];
    y0[..n].copy_from_slice(x0);
    for i in 0..n {
        y0[n + i * n + i] = 1.0;
    }
    let curve = run(&stepper, t0, y0, t_target, tol)?;

    let unpack = |flat: &[f64]| DMatrix::from_fn(n, n, |i, j| flat[n + i * n + j]);
    let mut jac_nodes = Vec::with_capacity(curve.segments.len() + 1);
    jac_nodes.push((curve.base_time, DMatrix::identity(n, n)));
    for seg in &curve.segments {
        jac_nodes.push((seg.t_end, unpack(&seg.y_end)));
    }
    Ok((curve, JacobianCurve { nodes: jac_nodes }))
}

#[cfg(test)]
mod tests;
