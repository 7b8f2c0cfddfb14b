//! Two-time flow queries phi(t; s, x): transport a state from one time to
//! another along the field. A query either reaches its target or reports the
//! obstruction (escape or blow-up) as an error carrying the event time.

use crate::integrate::{
    integrate, integrate_with_variational, Termination, Tolerances, VectorFieldSpec,
};
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::sync::Mutex;

/// One flow evaluation request: carry `state` from `source_time` to
/// `target_time` under the given tolerances.
#[derive(Debug, Clone)]
pub struct FlowQuery {
    pub source_time: f64,
    pub state: Vec<f64>,
    pub target_time: f64,
    pub tol: Tolerances,
}

impl FlowQuery {
    pub fn new(source_time: f64, state: Vec<f64>, target_time: f64) -> Self {
        FlowQuery { source_time, state, target_time, tol: Tolerances::default() }
    }

    pub fn with_tol(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }
}

fn demand_target(t: Termination) -> Result<()> {
    match t {
        Termination::ReachedTarget => Ok(()),
        Termination::DomainEscape { t, .. } => Err(Error::TrajectoryEscaped { t }),
        Termination::BlowUp { t } | Termination::StepUnderflow { t } => {
            Err(Error::TrajectoryBlowUp { t })
        }
    }
}

/// phi(target; source, state). Fails with `TrajectoryEscaped` or
/// `TrajectoryBlowUp` when the trajectory does not survive to the target.
pub fn flow(field: &VectorFieldSpec, q: &FlowQuery) -> Result<Vec<f64>> {
    let curve = integrate(field, q.source_time, &q.state, q.target_time, &q.tol)?;
    demand_target(curve.termination())?;
    Ok(curve.end_state())
}

/// d phi / d x at the target time, from the variational equation (never from
/// difference quotients; those serve as an independent check in the tests).
pub fn flow_jacobian(field: &VectorFieldSpec, q: &FlowQuery) -> Result<DMatrix<f64>> {
    let (curve, jac) =
        integrate_with_variational(field, q.source_time, &q.state, q.target_time, &q.tol)?;
    demand_target(curve.termination())?;
    Ok(jac.final_jacobian().clone())
}

/// Defect of the two-interval composition law:
/// || phi(t; r, phi(r; s, x)) - phi(t; s, x) ||.
pub fn check_group_law(
    field: &VectorFieldSpec,
    s: f64,
    r: f64,
    t: f64,
    x: &[f64],
    tol: &Tolerances,
) -> Result<f64> {
    let direct = flow(field, &FlowQuery::new(s, x.to_vec(), t).with_tol(tol.clone()))?;
    let mid = flow(field, &FlowQuery::new(s, x.to_vec(), r).with_tol(tol.clone()))?;
    let via = flow(field, &FlowQuery::new(r, mid, t).with_tol(tol.clone()))?;
    let defect = direct
        .iter()
        .zip(&via)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(defect)
}

#[derive(PartialEq, Eq, Hash)]
struct FlowKey {
    s: u64,
    t: u64,
    x: Vec<u64>,
    rtol: u64,
    atol: u64,
}

impl FlowKey {
    fn of(q: &FlowQuery) -> Self {
        FlowKey {
            s: q.source_time.to_bits(),
            t: q.target_time.to_bits(),
            x: q.state.iter().map(|v| v.to_bits()).collect(),
            rtol: q.tol.rtol.to_bits(),
            atol: q.tol.atol.to_bits(),
        }
    }
}

/// Flow evaluator with a memo keyed by the full bit pattern of the query.
/// Identical queries return identical bits; distinct tolerances never share
/// entries. Safe to share across threads.
pub struct MemoFlow<'a> {
    field: &'a VectorFieldSpec,
    cache: Mutex<HashMap<FlowKey, Vec<f64>>>,
}

impl<'a> MemoFlow<'a> {
    pub fn new(field: &'a VectorFieldSpec) -> Self {
        MemoFlow { field, cache: Mutex::new(HashMap::new()) }
    }

    pub fn field(&self) -> &VectorFieldSpec {
        self.field
    }

    pub fn flow(&self, q: &FlowQuery) -> Result<Vec<f64>> {
        let key = FlowKey::of(q);
        if let Some(hit) = self.cache.lock().expect("memo lock").get(&key) {
            return Ok(hit.clone());
        }
        // computed outside the lock; a racing duplicate insert writes the
        // same bits, so either order yields one consistent entry
        let value = flow(self.field, q)?;
        self.cache
            .lock()
            .expect("memo lock")
            .entry(key)
            .or_insert_with(|| value.clone());
        Ok(value)
    }

    pub fn len(&self) -> usize {
        self.cache.lock().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Interval, SpatialBox};
    use crate::expr::Expression;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field1(src: &str) -> VectorFieldSpec {
        VectorFieldSpec::unbounded(vec![Expression::parse(src, 1).unwrap()]).unwrap()
    }

    fn rotation_field() -> VectorFieldSpec {
        VectorFieldSpec::new(
            vec![
                Expression::parse("-x2", 2).unwrap(),
                Expression::parse("x1", 2).unwrap(),
            ],
            Interval::all(),
            SpatialBox::new(vec![
                Interval::new(-2.0, 2.0).unwrap(),
                Interval::new(-2.0, 2.0).unwrap(),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_field_flow_is_identity() {
        let f = field1("0");
        let got = flow(&f, &FlowQuery::new(-3.0, vec![0.7], 4.0)).unwrap();
        assert_eq!(got, vec![0.7]);
    }

    #[test]
    fn quadratic_flow_reaches_known_value_and_blows_up() {
        let f = field1("x1^2");
        // x(t) = 1/(1 - t) from x(0) = 1, so x(1/2) = 2
        let got = flow(&f, &FlowQuery::new(0.0, vec![1.0], 0.5)).unwrap();
        assert!((got[0] - 2.0).abs() < 1.0e-6, "got {}", got[0]);
        match flow(&f, &FlowQuery::new(0.0, vec![1.0], 2.0)) {
            Err(Error::TrajectoryBlowUp { t }) => assert!((t - 1.0).abs() <= 1.0e-3),
            other => panic!("expected blow-up error, got {other:?}"),
        }
    }

    #[test]
    fn time_dependent_translation_flow() {
        let f = field1("cos(t)");
        for (s, x, t) in [(0.0, 0.0, 1.5), (1.0, -0.3, -2.0), (0.5, 2.0, 0.5)] {
            let got = flow(&f, &FlowQuery::new(s, vec![x], t)).unwrap();
            let expect = x + t.sin() - s.sin();
            assert!((got[0] - expect).abs() < 1.0e-8, "({s},{x},{t}): {got:?}");
        }
    }

    #[test]
    fn escape_reports_event_time() {
        let f = VectorFieldSpec::new(
            vec![Expression::parse("1", 1).unwrap()],
            Interval::all(),
            SpatialBox::new(vec![Interval::new(-1.0, 1.0).unwrap()]).unwrap(),
        )
        .unwrap();
        match flow(&f, &FlowQuery::new(0.0, vec![0.0], 5.0)) {
            Err(Error::TrajectoryEscaped { t }) => assert!((t - 1.0).abs() < 1.0e-9),
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn jacobians_match_closed_forms() {
        let f = field1("x1");
        let j = flow_jacobian(&f, &FlowQuery::new(0.0, vec![1.0], 1.0)).unwrap();
        assert!((j[(0, 0)] - std::f64::consts::E).abs() < 1.0e-6);

        let rot = rotation_field();
        let dt = 0.8;
        let j = flow_jacobian(&rot, &FlowQuery::new(0.0, vec![0.5, 0.5], dt)).unwrap();
        let expect = [[dt.cos(), -dt.sin()], [dt.sin(), dt.cos()]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - expect[i][k]).abs() < 1.0e-6);
            }
        }
    }

    #[test]
    fn group_law_defect_is_small_on_corpus() {
        let cases: Vec<(VectorFieldSpec, Vec<f64>)> = vec![
            (field1("x1"), vec![0.8]),
            (field1("cos(t)"), vec![0.0]),
            (rotation_field(), vec![0.6, -0.2]),
        ];
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (f, x) in cases {
            for _ in 0..5 {
                let s = rng.random_range(-0.5..0.5);
                let r = rng.random_range(-0.5..0.5);
                let t = rng.random_range(-0.5..0.5);
                let defect = check_group_law(&f, s, r, t, &x, &tol).unwrap();
                assert!(defect <= 1.0e-8, "defect {defect:e} for s={s} r={r} t={t}");
            }
        }
    }

    #[test]
    fn two_point_inversion_returns_the_state() {
        let f = rotation_field();
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let s = rng.random_range(-1.0..1.0);
            let t = rng.random_range(-1.0..1.0);
            let x = vec![rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9)];
            let fwd = flow(&f, &FlowQuery::new(s, x.clone(), t).with_tol(tol.clone())).unwrap();
            let back = flow(&f, &FlowQuery::new(t, fwd, s).with_tol(tol.clone())).unwrap();
            let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let err = x
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1.0e-6 * scale, "inversion defect {err:e}");
        }
    }

    #[test]
    fn jacobian_from_variational_matches_quotients() {
        let f = field1("x1*(1-x1)*0.5+sin(t)*0.1");
        let q = FlowQuery::new(0.0, vec![0.3], 1.2);
        let j = flow_jacobian(&f, &q).unwrap();
        let h = f64::EPSILON.sqrt() * 1.3;
        let up = flow(&f, &FlowQuery::new(0.0, vec![0.3 + h], 1.2)).unwrap();
        let dn = flow(&f, &FlowQuery::new(0.0, vec![0.3 - h], 1.2)).unwrap();
        let fd = (up[0] - dn[0]) / (2.0 * h);
        assert!((j[(0, 0)] - fd).abs() <= 1.0e-4, "{} vs {fd}", j[(0, 0)]);
    }

    #[test]
    fn memo_returns_identical_bits() {
        let f = field1("x1");
        let memo = MemoFlow::new(&f);
        let q = FlowQuery::new(0.0, vec![1.0], 1.0);
        let a = memo.flow(&q).unwrap();
        let b = memo.flow(&q).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(memo.len(), 1);
        let direct = flow(&f, &q).unwrap();
        assert_eq!(a[0].to_bits(), direct[0].to_bits());
        // different tolerances get their own entry
        let loose = q.clone().with_tol(Tolerances { rtol: 1.0e-6, ..Tolerances::default() });
        memo.flow(&loose).unwrap();
        assert_eq!(memo.len(), 2);
    }

    #[test]
    fn memo_is_consistent_across_threads() {
        let f = rotation_field();
        let memo = MemoFlow::new(&f);
        let q = FlowQuery::new(0.0, vec![0.5, 0.1], 1.0);
        let reference = memo.flow(&q).unwrap();
        std::thread::scope(|scope| {
            for _ in 0..4 {
                scope.spawn(|| {
                    for _ in 0..5 {
                        let got = memo.flow(&q).unwrap();
                        assert_eq!(got, reference);
                    }
                });
            }
        });
    }
}
