//! The rectifying change of coordinates Phi(t, x) = (t, phi(t; t0, x)) built
//! from the flow of a field, its inverse (tau, xi) -> (tau, phi(t0; tau, xi)),
//! and the pushforward test that certifies the construction: transporting the
//! space-time direction field (1, v) through the inverse map must land on the
//! constant field (1, 0).

use crate::domain::{euclidean_norm, Interval, SpatialBox};
use crate::expr::{DiffVar, Expression};
use crate::flow::{flow, FlowQuery};
use crate::integrate::{integrate_with_variational, Termination, Tolerances, VectorFieldSpec};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

type PointFn = Arc<dyn Fn(f64, &[f64]) -> Result<(f64, Vec<f64>)> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(f64, &[f64]) -> Result<DMatrix<f64>> + Send + Sync>;

/// A map of extended space-time (t, x) -> (t', x') with an optional inverse
/// and a derivative provider. Expression-backed maps differentiate
/// symbolically; flow-backed maps use variational Jacobians.
#[derive(Clone)]
pub struct SpaceTimeMap {
    dim: usize,
    forward: PointFn,
    inverse: Option<PointFn>,
    jacobian: JacobianFn,
}

impl std::fmt::Debug for SpaceTimeMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpaceTimeMap")
            .field("dim", &self.dim)
            .field("has_inverse", &self.inverse.is_some())
            .finish()
    }
}

impl SpaceTimeMap {
    pub fn new(dim: usize, forward: PointFn, inverse: Option<PointFn>, jacobian: JacobianFn) -> Self {
        SpaceTimeMap { dim, forward, inverse, jacobian }
    }

    /// Identity on (t, x).
    pub fn identity(dim: usize) -> Self {
        let fwd: PointFn = Arc::new(move |t, x: &[f64]| Ok((t, x.to_vec())));
        let jac: JacobianFn =
            Arc::new(move |_t, _x: &[f64]| Ok(DMatrix::identity(dim + 1, dim + 1)));
        SpaceTimeMap { dim, forward: fwd.clone(), inverse: Some(fwd), jacobian: jac }
    }

    /// Build from closed-form outputs: `time_out` is the new time as an
    /// expression in (t, x), `space_out` the new space coordinates. The
    /// optional inverse is given the same way. Derivatives are symbolic.
    pub fn from_expressions(
        time_out: Expression,
        space_out: Vec<Expression>,
        inverse: Option<(Expression, Vec<Expression>)>,
    ) -> Result<Self> {
        let dim = space_out.len();
        if dim == 0 {
            return Err(Error::InvalidInput("a space-time map needs space outputs".into()));
        }
        for e in std::iter::once(&time_out).chain(&space_out) {
            if e.dim() != dim {
                return Err(Error::InvalidInput(format!(
                    "output declared over dimension {}, map has {dim}",
                    e.dim()
                )));
            }
        }
        let outputs: Arc<Vec<Expression>> = Arc::new(
            std::iter::once(time_out.clone()).chain(space_out.iter().cloned()).collect(),
        );
        let grad: Arc<Vec<Vec<Expression>>> = Arc::new(
            outputs
                .iter()
                .map(|o| {
                    std::iter::once(o.differentiate(DiffVar::Time))
                        .chain((0..dim).map(|j| o.differentiate(DiffVar::Spatial(j))))
                        .collect()
                })
                .collect(),
        );

        let out_eval = outputs.clone();
        let forward: PointFn = Arc::new(move |t, x: &[f64]| {
            let tp = out_eval[0].eval(t, x)?;
            let mut xp = Vec::with_capacity(out_eval.len() - 1);
            for o in &out_eval[1..] {
                xp.push(o.eval(t, x)?);
            }
            Ok((tp, xp))
        });
        let jacobian: JacobianFn = Arc::new(move |t, x: &[f64]| {
            let k = grad.len();
            let mut m = DMatrix::zeros(k, k);
            for (r, row) in grad.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    m[(r, c)] = e.eval(t, x)?;
                }
            }
            Ok(m)
        });

        let inverse_fn: Option<PointFn> = match inverse {
            None => None,
            Some((ti, si)) => {
                if si.len() != dim || ti.dim() != dim || si.iter().any(|e| e.dim() != dim) {
                    return Err(Error::InvalidInput("inverse outputs have the wrong dimension".into()));
                }
                let inv: Arc<Vec<Expression>> =
                    Arc::new(std::iter::once(ti).chain(si).collect());
                Some(Arc::new(move |t, x: &[f64]| {
                    let tp = inv[0].eval(t, x)?;
                    let mut xp = Vec::with_capacity(inv.len() - 1);
                    for o in &inv[1..] {
                        xp.push(o.eval(t, x)?);
                    }
                    Ok((tp, xp))
                }))
            }
        };

        Ok(SpaceTimeMap { dim, forward, inverse: inverse_fn, jacobian })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn apply(&self, t: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, map expects {}",
                x.len(),
                self.dim
            )));
        }
        (self.forward)(t, x)
    }

    pub fn apply_inverse(&self, t: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let inv = self
            .inverse
            .as_ref()
            .ok_or_else(|| Error::MissingInverse("map carries no inverse".into()))?;
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, map expects {}",
                x.len(),
                self.dim
            )));
        }
        inv(t, x)
    }

    /// Full (1+n) x (1+n) derivative at (t, x); row and column 0 belong to
    /// the time direction.
    pub fn jacobian(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        (self.jacobian)(t, x)
    }

    /// Composition `outer` after `inner`. The inverse (present when both
    /// factors carry one) composes the other way around; derivatives chain.
    pub fn compose(outer: &SpaceTimeMap, inner: &SpaceTimeMap) -> Result<SpaceTimeMap> {
        if outer.dim != inner.dim {
            return Err(Error::InvalidInput(format!(
                "cannot compose maps of dimensions {} and {}",
                outer.dim, inner.dim
            )));
        }
        let dim = outer.dim;
        let (of, inf) = (outer.forward.clone(), inner.forward.clone());
        let forward: PointFn = Arc::new(move |t, x: &[f64]| {
            let (tm, xm) = inf(t, x)?;
            of(tm, &xm)
        });
        let inverse: Option<PointFn> = match (&outer.inverse, &inner.inverse) {
            (Some(oi), Some(ii)) => {
                let (oi, ii) = (oi.clone(), ii.clone());
                Some(Arc::new(move |t, x: &[f64]| {
                    let (tm, xm) = oi(t, x)?;
                    ii(tm, &xm)
                }))
            }
            _ => None,
        };
        let (oj, ij, inf2) = (outer.jacobian.clone(), inner.jacobian.clone(), inner.forward.clone());
        let jacobian: JacobianFn = Arc::new(move |t, x: &[f64]| {
            let (tm, xm) = inf2(t, x)?;
            let a = oj(tm, &xm)?;
            let b = ij(t, x)?;
            Ok(a * b)
        });
        Ok(SpaceTimeMap { dim, forward, inverse, jacobian })
    }

    /// The inverse as a map in its own right. Its derivative at a point is
    /// the inverse of the forward derivative at the preimage.
    pub fn inverted(&self) -> Result<SpaceTimeMap> {
        let inv = self
            .inverse
            .as_ref()
            .ok_or_else(|| Error::MissingInverse("map carries no inverse".into()))?
            .clone();
        let fwd = self.forward.clone();
        let jac = self.jacobian.clone();
        let inv_for_jac = inv.clone();
        let jacobian: JacobianFn = Arc::new(move |t, x: &[f64]| {
            let (tp, xp) = inv_for_jac(t, x)?;
            let j = jac(tp, &xp)?;
            j.try_inverse()
                .ok_or_else(|| Error::Eval("derivative is singular at the preimage".into()))
        });
        Ok(SpaceTimeMap { dim: self.dim, forward: inv, inverse: Some(fwd), jacobian })
    }
}

/// The field (1, v) pushed forward through a map:
/// w(y) = J_map(p) (1, v(p)) with p = map^{-1}(y).
pub struct PushedField {
    map: SpaceTimeMap,
    field: VectorFieldSpec,
}

/// Requires `map` to carry an inverse and a derivative provider.
pub fn pushforward(map: &SpaceTimeMap, field: &VectorFieldSpec) -> Result<PushedField> {
    if !map.has_inverse() {
        return Err(Error::MissingInverse("pushforward needs the map's inverse".into()));
    }
    if map.dim() != field.dim() {
        return Err(Error::InvalidInput("map and field dimensions disagree".into()));
    }
    Ok(PushedField { map: map.clone(), field: field.clone() })
}

impl PushedField {
    /// Value of the transported direction field at the point (t, x) of the
    /// target coordinates. Component 0 is the time direction.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let (tp, xp) = self.map.apply_inverse(t, x)?;
        let j = self.map.jacobian(tp, &xp)?;
        let mut ext = DVector::zeros(self.field.dim() + 1);
        ext[0] = 1.0;
        let v = self.field.eval(tp, &xp)?;
        for (i, vi) in v.iter().enumerate() {
            ext[i + 1] = *vi;
        }
        let w = j * ext;
        Ok(w.iter().copied().collect())
    }
}

/// The rectifying coordinates of one field over a time window, anchored at a
/// base time.
#[derive(Debug, Clone)]
pub struct Rectification {
    field: VectorFieldSpec,
    base_time: f64,
    window: Interval,
    probe_box: SpatialBox,
    tol: Tolerances,
}

/// Construct the rectification and run one smoke probe: a forward/backward
/// round trip at time t0 + (b - a)/4 from the probe box center. A probe
/// trajectory that escapes or blows up fails construction with
/// `ProbeFailed`; that is the honest answer when the field violates domain
/// invariance on the window (x' = x^2 being the canonical case).
pub fn build_rectification(
    field: &VectorFieldSpec,
    base_time: f64,
    window: Interval,
    probe_box: &SpatialBox,
    tol: &Tolerances,
) -> Result<Rectification> {
    tol.validate()?;
    if !window.is_bounded() {
        return Err(Error::InvalidInput("the rectification window must be bounded".into()));
    }
    let iv = field.time_interval();
    if window.lo < iv.lo || window.hi > iv.hi {
        return Err(Error::InvalidInput(
            "the window must lie inside the field's time interval".into(),
        ));
    }
    if !(base_time >= window.lo && base_time <= window.hi) || !iv.contains(base_time) {
        return Err(Error::InvalidInput("the base time must lie inside the window".into()));
    }
    if probe_box.dim() != field.dim() {
        return Err(Error::InvalidInput("probe box dimension does not match the field".into()));
    }
    if !probe_box.is_bounded() {
        return Err(Error::InvalidInput("the probe box must be bounded".into()));
    }
    let center = probe_box.center();
    if !field.domain().contains(&center) {
        return Err(Error::InvalidInput("the probe box center must lie in the domain".into()));
    }

    let r = Rectification {
        field: field.clone(),
        base_time,
        window,
        probe_box: probe_box.clone(),
        tol: tol.clone(),
    };

    let t_probe = base_time + 0.25 * (window.hi - window.lo);
    let round_trip = r
        .apply(t_probe, &center)
        .and_then(|(tau, xi)| r.apply_inverse(tau, &xi));
    match round_trip {
        Ok(_) => Ok(r),
        Err(Error::TrajectoryEscaped { t }) => Err(Error::ProbeFailed(format!(
            "probe trajectory left the domain at t = {t}"
        ))),
        Err(Error::TrajectoryBlowUp { t }) => Err(Error::ProbeFailed(format!(
            "probe trajectory blew up at t = {t}"
        ))),
        Err(other) => Err(other),
    }
}

impl Rectification {
    pub fn field(&self) -> &VectorFieldSpec {
        &self.field
    }

    pub fn base_time(&self) -> f64 {
        self.base_time
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn probe_box(&self) -> &SpatialBox {
        &self.probe_box
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    /// Phi(t, x) = (t, phi(t; t0, x)). The time coordinate passes through
    /// unchanged, bit for bit.
    pub fn apply(&self, t: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let q = FlowQuery::new(self.base_time, x.to_vec(), t).with_tol(self.tol.clone());
        Ok((t, flow(&self.field, &q)?))
    }

    /// Phi^{-1}(tau, xi) = (tau, phi(t0; tau, xi)).
    pub fn apply_inverse(&self, tau: f64, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let q = FlowQuery::new(tau, xi.to_vec(), self.base_time).with_tol(self.tol.clone());
        Ok((tau, flow(&self.field, &q)?))
    }

    /// Derivative of Phi at (t, x): the space block solves the variational
    /// equation along the trajectory, the time column is (1, v(t, phi)).
    pub fn forward_jacobian(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        let (curve, jac) =
            integrate_with_variational(&self.field, self.base_time, x, t, &self.tol)?;
        demand_reached(curve.termination())?;
        let phi = curve.end_state();
        let v = self.field.eval(t, &phi)?;
        Ok(assemble_extended(&v, jac.final_jacobian()))
    }

    /// Derivative of Phi^{-1} at (tau, xi), computed as the inverse of the
    /// forward derivative at the preimage. Nothing here cancels by
    /// construction, so residuals built on it measure genuine numerical
    /// quality.
    pub fn inverse_jacobian(&self, tau: f64, xi: &[f64]) -> Result<DMatrix<f64>> {
        let back = FlowQuery::new(tau, xi.to_vec(), self.base_time).with_tol(self.tol.clone());
        let x0 = flow(&self.field, &back)?;
        let (curve, jac) =
            integrate_with_variational(&self.field, self.base_time, &x0, tau, &self.tol)?;
        demand_reached(curve.termination())?;
        let x_hat = curve.end_state();
        let v = self.field.eval(tau, &x_hat)?;
        let fwd = assemble_extended(&v, jac.final_jacobian());
        fwd.try_inverse()
            .ok_or_else(|| Error::Eval("variational Jacobian is singular".into()))
    }

    /// Phi as a `SpaceTimeMap`.
    pub fn forward_map(&self) -> SpaceTimeMap {
        let r = Arc::new(self.clone());
        let rf = r.clone();
        let forward: PointFn = Arc::new(move |t, x: &[f64]| rf.apply(t, x));
        let ri = r.clone();
        let inverse: PointFn = Arc::new(move |t, x: &[f64]| ri.apply_inverse(t, x));
        let rj = r.clone();
        let jacobian: JacobianFn = Arc::new(move |t, x: &[f64]| rj.forward_jacobian(t, x));
        SpaceTimeMap::new(self.field.dim(), forward, Some(inverse), jacobian)
    }

    /// Phi^{-1} as a `SpaceTimeMap`.
    pub fn inverse_map(&self) -> SpaceTimeMap {
        let r = Arc::new(self.clone());
        let rf = r.clone();
        let forward: PointFn = Arc::new(move |t, x: &[f64]| rf.apply_inverse(t, x));
        let ri = r.clone();
        let inverse: PointFn = Arc::new(move |t, x: &[f64]| ri.apply(t, x));
        let rj = r.clone();
        let jacobian: JacobianFn = Arc::new(move |t, x: &[f64]| rj.inverse_jacobian(t, x));
        SpaceTimeMap::new(self.field.dim(), forward, Some(inverse), jacobian)
    }
}

fn demand_reached(t: Termination) -> Result<()> {
    match t {
        Termination::ReachedTarget => Ok(()),
        Termination::DomainEscape { t, .. } => Err(Error::TrajectoryEscaped { t }),
        Termination::BlowUp { t } | Termination::StepUnderflow { t } => {
            Err(Error::TrajectoryBlowUp { t })
        }
    }
}

/// Extended derivative [[1, 0], [v, J]] of a time-preserving flow map.
fn assemble_extended(time_col_space: &[f64], block: &DMatrix<f64>) -> DMatrix<f64> {
    let n = block.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = 1.0;
    for i in 0..n {
        m[(i + 1, 0)] = time_col_space[i];
        for j in 0..n {
            m[(i + 1, j + 1)] = block[(i, j)];
        }
    }
    m
}

/// Residuals at one probe point.
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub t: f64,
    pub x: Vec<f64>,
    /// || (Phi^{-1})_* (1, v) - (1, 0) || at this point
    pub pushforward: f64,
    /// relative round-trip defect, worse of the two orders
    pub roundtrip: f64,
}

/// Residual summary of a rectification over a probe grid.
#[derive(Debug, Clone)]
pub struct RectificationReport {
    /// max over probes of || (Phi^{-1})_* (1, v) - (1, 0) ||
    pub max_pushforward_residual: f64,
    /// max over probes of the relative round-trip defect, both orders
    pub max_roundtrip_residual: f64,
    /// probes that completed
    pub checked: usize,
    /// per-point residuals for the probes that completed
    pub rows: Vec<ProbeRow>,
    /// probes whose trajectories escaped or blew up, with the reason
    pub failures: Vec<(f64, Vec<f64>, String)>,
}

impl RectificationReport {
    pub fn passes(&self, pushforward_threshold: f64, roundtrip_threshold: f64) -> bool {
        self.failures.is_empty()
            && self.checked > 0
            && self.max_pushforward_residual <= pushforward_threshold
            && self.max_roundtrip_residual <= roundtrip_threshold
    }
}

/// Check the rectification on a probe grid: round trips in both orders and
/// the pushforward residual of (1, v) through Phi^{-1} at every grid point.
pub fn verify_rectification(
    r: &Rectification,
    grid: &[(f64, Vec<f64>)],
) -> Result<RectificationReport> {
    let pushed = pushforward(&r.inverse_map(), r.field())?;
    let mut report = RectificationReport {
        max_pushforward_residual: 0.0,
        max_roundtrip_residual: 0.0,
        checked: 0,
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (t, x) in grid {
        match probe_point(r, &pushed, *t, x) {
            Ok(row) => {
                report.checked += 1;
                report.max_pushforward_residual =
                    report.max_pushforward_residual.max(row.pushforward);
                report.max_roundtrip_residual = report.max_roundtrip_residual.max(row.roundtrip);
                report.rows.push(row);
            }
            Err(e @ (Error::TrajectoryEscaped { .. } | Error::TrajectoryBlowUp { .. })) => {
                report.failures.push((*t, x.clone(), e.to_string()));
            }
            Err(other) => return Err(other),
        }
    }
    Ok(report)
}

fn probe_point(r: &Rectification, pushed: &PushedField, t: f64, x: &[f64]) -> Result<ProbeRow> {
    let scale = 1.0 + euclidean_norm(x);
    let (tau, xi) = r.apply(t, x)?;
    let (_, back) = r.apply_inverse(tau, &xi)?;
    let fwd_defect = diff_norm(&back, x) / scale;

    let (tau2, xi2) = r.apply_inverse(t, x)?;
    let (_, fore) = r.apply(tau2, &xi2)?;
    let inv_defect = diff_norm(&fore, x) / scale;

    let w = pushed.eval(t, x)?;
    let mut resid = (w[0] - 1.0) * (w[0] - 1.0);
    for wi in &w[1..] {
        resid += wi * wi;
    }
    Ok(ProbeRow {
        t,
        x: x.to_vec(),
        pushforward: resid.sqrt(),
        roundtrip: fwd_defect.max(inv_defect),
    })
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}
