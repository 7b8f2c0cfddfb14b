//! Hypothesis probes. The rectification construction leans on three
//! assumptions: the field is locally Lipschitz in space, trajectories stay
//! in the domain over the window, and solutions are unique. None of them
//! can be proven by sampling, but all three leave numerical fingerprints:
//! difference quotients that keep doubling as the probe radius shrinks,
//! trajectories that hit a wall or blow up at a detectable time, and
//! distinct closed-form curves through one point that both satisfy the
//! equation to machine accuracy.

use crate::domain::{linspace, product_grid, Interval, SpatialBox};
use crate::expr::Expression;
use crate::integrate::{integrate, Termination, Tolerances, VectorFieldSpec};
use crate::{Error, Result};

/// Probe radii for difference quotients, one per decade from 1e-1 to 1e-6.
pub fn default_radii() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-k)).collect()
}

/// A difference-quotient estimate at one probe radius.
#[derive(Debug, Clone, Copy)]
pub struct RadiusEstimate {
    pub radius: f64,
    /// max over centers and axes of |v(x + r e) - v(x - r e)| / (2r) style
    /// quotients (one-sided where only one side evaluates)
    pub quotient: f64,
}

/// Do the quotients double (at least) across three consecutive radius
/// steps somewhere in the sweep? Smooth fields settle toward the true
/// derivative norm instead.
fn quotients_grow(estimates: &[RadiusEstimate]) -> bool {
    estimates.windows(4).any(|w| {
        w.windows(2).all(|pair| {
            pair[1].quotient >= 2.0 * pair[0].quotient && pair[0].quotient.is_finite()
        })
    })
}

/// Largest available difference quotient of the field around one center at
/// one radius, over all axis directions. Points where the field cannot be
/// evaluated are skipped; None when nothing was evaluable.
fn difference_quotient(
    field: &VectorFieldSpec,
    t: f64,
    center: &[f64],
    r: f64,
) -> Option<f64> {
    let v_center = field.eval(t, center).ok();
    let mut best: Option<f64> = None;
    let mut push = |q: f64| best = Some(best.map_or(q, |b: f64| b.max(q)));
    for axis in 0..field.dim() {
        let mut plus = center.to_vec();
        plus[axis] += r;
        let mut minus = center.to_vec();
        minus[axis] -= r;
        let v_plus = field.eval(t, &plus).ok();
        let v_minus = field.eval(t, &minus).ok();
        if let (Some(a), Some(b)) = (&v_plus, &v_minus) {
            push(diff_norm(a, b) / (2.0 * r));
        }
        if let (Some(a), Some(c)) = (&v_plus, &v_center) {
            push(diff_norm(a, c) / r);
        }
        if let (Some(c), Some(b)) = (&v_center, &v_minus) {
            push(diff_norm(c, b) / r);
        }
    }
    best
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Quotient sweep over shrinking radii, maximized over the given centers.
fn refine_quotients(
    field: &VectorFieldSpec,
    centers: &[(f64, Vec<f64>)],
    radii: &[f64],
) -> Vec<RadiusEstimate> {
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut q: Option<f64> = None;
        for (t, c) in centers {
            if let Some(v) = difference_quotient(field, *t, c, r) {
                q = Some(q.map_or(v, |b: f64| b.max(v)));
            }
        }
        if let Some(v) = q {
            out.push(RadiusEstimate { radius: r, quotient: v });
        }
    }
    out
}

/// Knobs for `estimate_lipschitz`.
#[derive(Debug, Clone)]
pub struct LipschitzConfig {
    /// time slices across the window
    pub time_samples: usize,
    /// grid points per spatial axis
    pub space_samples: usize,
    /// difference-quotient radii, largest first
    pub radii: Vec<f64>,
}

impl Default for LipschitzConfig {
    fn default() -> Self {
        LipschitzConfig { time_samples: 9, space_samples: 9, radii: default_radii() }
    }
}

/// What the Lipschitz probe saw.
#[derive(Debug, Clone)]
pub struct LipschitzProfile {
    pub times: Vec<f64>,
    /// sup over the spatial grid of the spectral norm of v_x, per time slice
    pub slice_constants: Vec<f64>,
    /// max over slices
    pub overall: f64,
    /// where the max was attained
    pub worst_point: (f64, Vec<f64>),
    /// grid points whose Jacobian failed to evaluate (kinks, poles); these
    /// become refinement centers
    pub skipped: Vec<(f64, Vec<f64>)>,
    pub refinement: Vec<RadiusEstimate>,
    /// quotients kept doubling as radii shrank
    pub suspect_unbounded: bool,
}

/// Estimate sup |v_x| over window x region from the symbolic Jacobian, then
/// stress the estimate with difference quotients at shrinking radii around
/// the worst point and around every point the Jacobian refused to evaluate.
pub fn estimate_lipschitz(
    field: &VectorFieldSpec,
    window: Interval,
    region: &SpatialBox,
    config: &LipschitzConfig,
) -> Result<LipschitzProfile> {
    if !window.is_bounded() || !region.is_bounded() {
        return Err(Error::InvalidInput("Lipschitz probe needs a bounded window and region".into()));
    }
    if region.dim() != field.dim() {
        return Err(Error::InvalidInput("region dimension does not match the field".into()));
    }
    if config.time_samples == 0 || config.space_samples == 0 {
        return Err(Error::InvalidInput("Lipschitz probe needs at least one sample".into()));
    }
    let times = linspace(window.lo, window.hi, config.time_samples);
    let grid = product_grid(region, &vec![config.space_samples; field.dim()]);

    let mut slice_constants = Vec::with_capacity(times.len());
    let mut overall = f64::NEG_INFINITY;
    let mut worst_point = (times[0], grid[0].clone());
    let mut skipped = Vec::new();
    for &t in &times {
        let mut slice = f64::NEG_INFINITY;
        for x in &grid {
            match field.eval_jacobian(t, x) {
                Ok(j) => {
                    let norm = j.svd(false, false).singular_values[0];
                    if norm > slice {
                        slice = norm;
                    }
                    if norm > overall {
                        overall = norm;
                        worst_point = (t, x.clone());
                    }
                }
                Err(_) => skipped.push((t, x.clone())),
            }
        }
        slice_constants.push(if slice.is_finite() { slice } else { f64::NAN });
    }
    if !overall.is_finite() && skipped.is_empty() {
        return Err(Error::Eval("Jacobian evaluated nowhere on the probe grid".into()));
    }

    let mut centers = vec![worst_point.clone()];
    centers.extend(skipped.iter().cloned());
    let refinement = refine_quotients(field, &centers, &config.radii);
    let suspect_unbounded = quotients_grow(&refinement);

    Ok(LipschitzProfile {
        times,
        slice_constants,
        overall,
        worst_point,
        skipped,
        refinement,
        suspect_unbounded,
    })
}

/// Slice-constant trend over proportionally growing regions.
#[derive(Debug, Clone)]
pub struct RegionTrend {
    pub scales: Vec<f64>,
    pub constants: Vec<f64>,
    /// constants increase monotonically and at least double overall
    pub growing: bool,
}

/// Track sup |v_x| as the region is scaled up around its center. Fields
/// like x' = x^2 are Lipschitz on every bounded region but with constants
/// that grow without bound; that growth, not a pointwise kink, is their
/// failure mode.
pub fn lipschitz_region_trend(
    field: &VectorFieldSpec,
    window: Interval,
    region: &SpatialBox,
    scales: &[f64],
    config: &LipschitzConfig,
) -> Result<RegionTrend> {
    if scales.is_empty() {
        return Err(Error::InvalidInput("region trend needs at least one scale".into()));
    }
    let mut constants = Vec::with_capacity(scales.len());
    for &s in scales {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InvalidInput("region scales must be positive and finite".into()));
        }
        let profile = estimate_lipschitz(field, window, &region.scaled(s), config)?;
        constants.push(profile.overall);
    }
    let monotone = constants.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let doubled = constants.last().unwrap() >= &(2.0 * constants[0]);
    Ok(RegionTrend { scales: scales.to_vec(), constants, growing: monotone && doubled })
}

/// How a probe trajectory left the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapeKind {
    LeftDomain { axis: usize, upper: bool },
    BlowUp,
}

/// One trajectory that did not survive the window.
#[derive(Debug, Clone)]
pub struct EscapeRecord {
    pub x0: Vec<f64>,
    pub forward: bool,
    pub t_event: f64,
    pub kind: EscapeKind,
}

#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub tested: usize,
    pub escapes: Vec<EscapeRecord>,
    /// no probe trajectory left the domain or blew up inside the window
    pub invariant: bool,
}

/// Integrate each initial condition from the base time to both window ends
/// and record every escape and blow-up with its event time.
pub fn probe_invariance(
    field: &VectorFieldSpec,
    base_time: f64,
    window: Interval,
    initial_conditions: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<InvarianceReport> {
    if !window.is_bounded() || !(base_time >= window.lo && base_time <= window.hi) {
        return Err(Error::InvalidInput(
            "invariance probe needs a bounded window containing the base time".into(),
        ));
    }
    if initial_conditions.is_empty() {
        return Err(Error::InvalidInput("invariance probe needs initial conditions".into()));
    }
    let mut report = InvarianceReport { tested: 0, escapes: Vec::new(), invariant: true };
    for x0 in initial_conditions {
        report.tested += 1;
        for (target, forward) in [(window.hi, true), (window.lo, false)] {
            if target == base_time {
                continue;
            }
            let curve = integrate(field, base_time, x0, target, tol)?;
            let kind = match curve.termination() {
                Termination::ReachedTarget => None,
                Termination::DomainEscape { face, .. } => Some(EscapeKind::LeftDomain {
                    axis: face.axis(),
                    upper: matches!(face, crate::integrate::BoundaryFace::Upper(_)),
                }),
                Termination::BlowUp { .. } | Termination::StepUnderflow { .. } => {
                    Some(EscapeKind::BlowUp)
                }
            };
            if let Some(kind) = kind {
                report.invariant = false;
                report.escapes.push(EscapeRecord {
                    x0: x0.clone(),
                    forward,
                    t_event: curve.termination().event_time().unwrap(),
                    kind,
                });
            }
        }
    }
    Ok(report)
}

/// A closed-form curve t -> psi(t) proposed as a solution through the probe
/// point. Components are expressions in t alone (spatial variables are not
/// consulted).
#[derive(Debug, Clone)]
pub struct CandidateCurve {
    pub label: String,
    pub components: Vec<Expression>,
}

impl CandidateCurve {
    pub fn new(label: impl Into<String>, components: Vec<Expression>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("a candidate curve needs components".into()));
        }
        Ok(CandidateCurve { label: label.into(), components })
    }

    /// The constant curve psi(t) = x0.
    pub fn stationary(x0: &[f64], dim: usize) -> Self {
        CandidateCurve {
            label: "stationary".into(),
            components: x0.iter().map(|&v| Expression::constant(v, dim)).collect(),
        }
    }
}

/// One candidate, measured.
#[derive(Debug, Clone)]
pub struct CandidateCheck {
    pub label: String,
    /// psi(t0) agrees with the probe point to the residual tolerance
    pub through_point: bool,
    /// max over sample times of |psi'(t) - v(t, psi(t))|
    pub max_residual: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub radii: Vec<RadiusEstimate>,
    /// difference quotients at the probe point kept doubling, so no local
    /// Lipschitz bound is in sight and uniqueness is in doubt
    pub lipschitz_suspect: bool,
    pub candidates: Vec<CandidateCheck>,
    /// largest distance between two satisfied candidates at a common time
    pub max_separation: f64,
    /// two satisfied candidates through the probe point genuinely separate,
    /// which settles non-uniqueness outright
    pub counterexample: bool,
}

const UNIQUENESS_TIME_SAMPLES: usize = 100;

/// Satisfied candidates closer than this everywhere are treated as the same
/// curve, not a counterexample.
const SEPARATION_FLOOR: f64 = 1e-6;

/// Probe uniqueness at one point: sweep difference quotients around it, and
/// measure how well each candidate curve satisfies the equation across the
/// window. Two distinct satisfied candidates through the same point are an
/// explicit uniqueness counterexample.
pub fn probe_uniqueness(
    field: &VectorFieldSpec,
    base_time: f64,
    x0: &[f64],
    window: Interval,
    radii: &[f64],
    candidates: &[CandidateCurve],
    residual_tolerance: f64,
) -> Result<UniquenessReport> {
    if x0.len() != field.dim() {
        return Err(Error::InvalidInput("probe point dimension does not match the field".into()));
    }
    if !window.is_bounded() || !(base_time >= window.lo && base_time <= window.hi) {
        return Err(Error::InvalidInput(
            "uniqueness probe needs a bounded window containing the base time".into(),
        ));
    }
    if !residual_tolerance.is_finite() || residual_tolerance <= 0.0 {
        return Err(Error::InvalidInput("residual tolerance must be positive".into()));
    }

    let estimates = refine_quotients(field, &[(base_time, x0.to_vec())], radii);
    let lipschitz_suspect = quotients_grow(&estimates);

    let dummy = vec![0.0; field.dim()];
    let times = linspace(window.lo, window.hi, UNIQUENESS_TIME_SAMPLES);
    let mut checks = Vec::with_capacity(candidates.len());
    let mut satisfied_tracks: Vec<Vec<Vec<f64>>> = Vec::new();
    for cand in candidates {
        if cand.components.len() != field.dim() {
            return Err(Error::InvalidInput(format!(
                "candidate '{}' has {} components, field has {}",
                cand.label,
                cand.components.len(),
                field.dim()
            )));
        }
        let derivs: Vec<Expression> =
            cand.components.iter().map(|c| c.differentiate(crate::expr::DiffVar::Time)).collect();

        let at = |t: f64| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut psi = Vec::with_capacity(cand.components.len());
            let mut dpsi = Vec::with_capacity(cand.components.len());
            for (c, d) in cand.components.iter().zip(&derivs) {
                psi.push(c.eval(t, &dummy)?);
                dpsi.push(d.eval(t, &dummy)?);
            }
            Ok((psi, dpsi))
        };

        let (psi0, _) = at(base_time)?;
        let through_point = diff_norm(&psi0, x0) <= residual_tolerance;

        let mut max_residual: f64 = 0.0;
        let mut track = Vec::with_capacity(times.len());
        for &t in &times {
            let (psi, dpsi) = at(t)?;
            let v = field.eval(t, &psi)?;
            max_residual = max_residual.max(diff_norm(&dpsi, &v));
            track.push(psi);
        }
        let satisfied = through_point && max_residual <= residual_tolerance;
        if satisfied {
            satisfied_tracks.push(track);
        }
        checks.push(CandidateCheck { label: cand.label.clone(), through_point, max_residual, satisfied });
    }

    let mut max_separation: f64 = 0.0;
    for (i, a) in satisfied_tracks.iter().enumerate() {
        for b in &satisfied_tracks[i + 1..] {
            for (pa, pb) in a.iter().zip(b) {
                max_separation = max_separation.max(diff_norm(pa, pb));
            }
        }
    }
    let counterexample = max_separation >= SEPARATION_FLOOR;

    Ok(UniquenessReport {
        radii: estimates,
        lipschitz_suspect,
        candidates: checks,
        max_separation,
        counterexample,
    })
}
