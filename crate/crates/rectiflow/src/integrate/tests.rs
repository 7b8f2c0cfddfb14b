use super::*;
use crate::expr::Expression;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field1(src: &str) -> VectorFieldSpec {
    VectorFieldSpec::unbounded(vec![Expression::parse(src, 1).unwrap()]).unwrap()
}

fn rotation_field() -> VectorFieldSpec {
    let comps = vec![
        Expression::parse("-x2", 2).unwrap(),
        Expression::parse("x1", 2).unwrap(),
    ];
    let bx = SpatialBox::new(vec![
        Interval::new(-2.0, 2.0).unwrap(),
        Interval::new(-2.0, 2.0).unwrap(),
    ])
    .unwrap();
    VectorFieldSpec::new(comps, Interval::all(), bx).unwrap()
}

fn logistic_field() -> VectorFieldSpec {
    let comps = vec![Expression::parse("x1*(1-x1)", 1).unwrap()];
    let bx = SpatialBox::new(vec![Interval::new(0.0, 1.0).unwrap()]).unwrap();
    VectorFieldSpec::new(comps, Interval::all(), bx).unwrap()
}

fn logistic_exact(t0: f64, x0: f64, t: f64) -> f64 {
    let tau = t - t0;
    1.0 / (1.0 + (1.0 / x0 - 1.0) * (-tau).exp())
}

#[test]
fn zero_field_is_constant() {
    let f = field1("0");
    let c = integrate(&f, 0.0, &[1.7], 5.0, &Tolerances::default()).unwrap();
    assert!(c.termination().reached_target());
    assert_eq!(c.sample(3.3).unwrap(), vec![1.7]);
    assert_eq!(c.end_state(), vec![1.7]);
}

#[test]
fn linear_field_matches_exponential() {
    let f = field1("x1");
    let c = integrate(&f, 0.0, &[1.0], 1.0, &Tolerances::default()).unwrap();
    let e = std::f64::consts::E;
    assert!((c.end_state()[0] - e).abs() < 1.0e-8 * e, "got {}", c.end_state()[0]);
    // backward run returns to the initial value
    let b = integrate(&f, 1.0, &[e], 0.0, &Tolerances::default()).unwrap();
    assert!((b.end_state()[0] - 1.0).abs() < 1.0e-8);
}

#[test]
fn cosine_field_matches_sine() {
    let f = field1("cos(t)");
    let c = integrate(&f, 0.0, &[0.25], 2.0, &Tolerances::default()).unwrap();
    let expect = 0.25 + 2.0f64.sin();
    assert!((c.end_state()[0] - expect).abs() < 1.0e-9);
}

#[test]
fn quadratic_field_blows_up_at_reciprocal() {
    let f = field1("x1^2");
    for x0 in [0.5, 1.0, 2.0] {
        let c = integrate(&f, 0.0, &[x0], 3.0, &Tolerances::default()).unwrap();
        match c.termination() {
            Termination::BlowUp { t } => {
                assert!(
                    (t - 1.0 / x0).abs() <= 1.0e-3,
                    "x0={x0}: blow-up reported at {t}, expected near {}",
                    1.0 / x0
                );
            }
            other => panic!("x0={x0}: expected blow-up, got {other:?}"),
        }
        let end = c.end_state()[0];
        assert!(end >= 0.99e8, "norm at termination should be near the threshold, got {end}");
    }
}

#[test]
fn step_underflow_counts_as_blowup_symptom() {
    // with the blow-up norm out of reach the steps shrink until the floor
    let f = field1("x1^2");
    let tol = Tolerances { blowup_norm: 1.0e306, ..Tolerances::default() };
    let c = integrate(&f, 0.0, &[1.0], 3.0, &tol).unwrap();
    match c.termination() {
        Termination::StepUnderflow { t } => assert!((t - 1.0).abs() <= 1.0e-3),
        other => panic!("expected step underflow, got {other:?}"),
    }
}

#[test]
fn rotation_returns_after_full_period() {
    let f = rotation_field();
    let c = integrate(&f, 0.0, &[1.0, 0.0], 2.0 * std::f64::consts::PI, &Tolerances::default())
        .unwrap();
    assert!(c.termination().reached_target());
    let end = c.end_state();
    assert!((end[0] - 1.0).abs() < 1.0e-6 && end[1].abs() < 1.0e-6, "got {end:?}");
}

#[test]
fn escape_through_a_finite_face() {
    let bx = SpatialBox::new(vec![Interval::new(f64::NEG_INFINITY, 2.0).unwrap()]).unwrap();
    let f = VectorFieldSpec::new(
        vec![Expression::parse("1", 1).unwrap()],
        Interval::all(),
        bx,
    )
    .unwrap();
    let c = integrate(&f, 0.0, &[0.0], 5.0, &Tolerances::default()).unwrap();
    match c.termination() {
        Termination::DomainEscape { t, face } => {
            assert!((t - 2.0).abs() < 1.0e-9, "escape time {t}");
            assert_eq!(face, BoundaryFace::Upper(0));
        }
        other => panic!("expected escape, got {other:?}"),
    }
    // final node sits on the face, every node in the closure
    for (_, x) in c.nodes() {
        assert!(x[0] <= 2.0 + 1.0e-12);
    }
    assert!((c.end_state()[0] - 2.0).abs() < 1.0e-9);
}

#[test]
fn logistic_stays_interior_on_a_long_run() {
    // by t = 12 the gap to the carrying capacity is ~6e-6, still orders of
    // magnitude above the integration error, so no face event may fire
    let f = logistic_field();
    let c = integrate(&f, 0.0, &[0.5], 12.0, &Tolerances::default()).unwrap();
    assert!(c.termination().reached_target(), "got {:?}", c.termination());
    let end = c.end_state()[0];
    assert!(end < 1.0 && end > 0.0);
    assert!((end - logistic_exact(0.0, 0.5, 12.0)).abs() < 1.0e-9);
}

#[test]
fn sampling_reproduces_nodes_exactly_and_interpolates() {
    let f = field1("x1");
    let c = integrate(&f, 0.0, &[1.0], 1.0, &Tolerances::default()).unwrap();
    for (t, x) in c.nodes() {
        assert_eq!(c.sample(t).unwrap(), x, "node at t={t}");
    }
    let mid = c.sample(0.5).unwrap()[0];
    assert!((mid - 0.5f64.exp()).abs() < 1.0e-9, "dense value {mid}");
    assert!(matches!(c.sample(1.5), Err(Error::OutOfRange { .. })));
    assert!(matches!(c.sample(-0.1), Err(Error::OutOfRange { .. })));
}

#[test]
fn sampling_beyond_blowup_is_out_of_range() {
    let f = field1("x1^2");
    let c = integrate(&f, 0.0, &[1.0], 3.0, &Tolerances::default()).unwrap();
    let t_star = c.termination().event_time().unwrap();
    assert!(c.sample(t_star * 0.5).is_ok());
    assert!(matches!(c.sample(t_star + 0.1), Err(Error::OutOfRange { .. })));
}

#[test]
fn dense_output_tracks_a_tight_reference() {
    let tol = Tolerances::default();
    let tight = Tolerances { rtol: 1.0e-12, atol: 1.0e-14, ..Tolerances::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (f, x0, t1) in [
        (logistic_field(), vec![0.3], 4.0),
        (rotation_field(), vec![1.0, 0.5], 3.0),
    ] {
        let c = integrate(&f, 0.0, &x0, t1, &tol).unwrap();
        let r = integrate(&f, 0.0, &x0, t1, &tight).unwrap();
        let steps = c.accepted_steps() as f64;
        for _ in 0..50 {
            let t = rng.random_range(0.0..t1);
            let a = c.sample(t).unwrap();
            let b = r.sample(t).unwrap();
            for i in 0..a.len() {
                let scale = tol.atol + tol.rtol * b[i].abs();
                assert!(
                    (a[i] - b[i]).abs() <= 10.0 * scale * steps,
                    "t={t}: {} vs {}",
                    a[i],
                    b[i]
                );
            }
        }
    }
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let f = logistic_field();
    let a = integrate(&f, 0.0, &[0.3], 5.0, &Tolerances::default()).unwrap();
    let b = integrate(&f, 0.0, &[0.3], 5.0, &Tolerances::default()).unwrap();
    let na = a.nodes();
    let nb = b.nodes();
    assert_eq!(na.len(), nb.len());
    for ((ta, xa), (tb, xb)) in na.iter().zip(&nb) {
        assert_eq!(ta.to_bits(), tb.to_bits());
        for (u, v) in xa.iter().zip(xb) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}

#[test]
fn halving_tolerances_reduces_corpus_error() {
    // summed endpoint error against closed forms, one ladder of halvings
    let e = std::f64::consts::E;
    let corpus: Vec<(VectorFieldSpec, Vec<f64>, f64, Vec<f64>)> = vec![
        (field1("x1"), vec![1.0], 1.0, vec![e]),
        (field1("cos(t)"), vec![0.0], 2.0, vec![2.0f64.sin()]),
        (logistic_field(), vec![0.25], 3.0, vec![logistic_exact(0.0, 0.25, 3.0)]),
    ];
    let mut prev = f64::INFINITY;
    for k in 0..6 {
        let rtol = 1.0e-5 / (2.0f64).powi(k);
        let tol = Tolerances { rtol, atol: rtol * 1.0e-3, ..Tolerances::default() };
        let mut total = 0.0;
        for (f, x0, t1, exact) in &corpus {
            let c = integrate(f, 0.0, x0, *t1, &tol).unwrap();
            let end = c.end_state();
            for (a, b) in end.iter().zip(exact) {
                total += (a - b).abs();
            }
        }
        assert!(
            total <= prev,
            "error did not decrease: {total:e} after {prev:e} at rtol {rtol:e}"
        );
        prev = total;
    }
}

#[test]
fn variational_identity_for_constant_field() {
    let f = field1("0");
    let (_, j) = integrate_with_variational(&f, 0.0, &[1.0], 2.0, &Tolerances::default()).unwrap();
    let m = j.final_jacobian();
    assert!((m[(0, 0)] - 1.0).abs() < 1.0e-12);
}

#[test]
fn variational_matches_closed_forms() {
    let f = field1("x1");
    let (_, j) = integrate_with_variational(&f, 0.0, &[1.0], 1.0, &Tolerances::default()).unwrap();
    assert!((j.final_jacobian()[(0, 0)] - std::f64::consts::E).abs() < 1.0e-6);

    let rot = rotation_field();
    let (_, jr) =
        integrate_with_variational(&rot, 0.0, &[1.0, 0.0], std::f64::consts::PI, &Tolerances::default())
            .unwrap();
    let m = jr.final_jacobian();
    for (i, jcol) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let expect = if i == jcol { -1.0 } else { 0.0 };
        assert!((m[(i, jcol)] - expect).abs() < 1.0e-6, "entry ({i},{jcol}) = {}", m[(i, jcol)]);
    }
}

#[test]
fn variational_matches_difference_quotients() {
    // independent cross-check: differentiate the endpoint by central
    // differences in each initial coordinate
    let tol = Tolerances::default();
    for (f, x0, t1) in [
        (logistic_field(), vec![0.4], 2.0),
        (rotation_field(), vec![0.8, -0.3], 1.5),
    ] {
        let n = x0.len();
        let (_, jc) = integrate_with_variational(&f, 0.0, &x0, t1, &tol).unwrap();
        let j = jc.final_jacobian();
        for col in 0..n {
            let h = f64::EPSILON.sqrt() * (1.0 + x0[col].abs());
            let mut xp = x0.clone();
            xp[col] += h;
            let mut xm = x0.clone();
            xm[col] -= h;
            let fp = integrate(&f, 0.0, &xp, t1, &tol).unwrap().end_state();
            let fm = integrate(&f, 0.0, &xm, t1, &tol).unwrap().end_state();
            for row in 0..n {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!(
                    (j[(row, col)] - fd).abs() <= 1.0e-4,
                    "entry ({row},{col}): variational {} vs quotient {fd}",
                    j[(row, col)]
                );
            }
        }
    }
}

#[test]
fn jacobian_nodes_stay_invertible() {
    for (f, x0, t1) in [
        (field1("x1"), vec![1.0], 1.0),
        (logistic_field(), vec![0.4], 3.0),
        (rotation_field(), vec![1.0, 0.0], 2.0),
    ] {
        let (_, jc) = integrate_with_variational(&f, 0.0, &x0, t1, &Tolerances::default()).unwrap();
        for (t, m) in jc.nodes() {
            let det = m.clone().determinant();
            assert!(det.abs() > 1.0e-8, "singular flow Jacobian at t={t}");
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let f = logistic_field();
    // initial state outside the open domain
    assert!(matches!(
        integrate(&f, 0.0, &[1.0], 1.0, &Tolerances::default()),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        integrate(&f, 0.0, &[0.5, 0.5], 1.0, &Tolerances::default()),
        Err(Error::InvalidInput(_))
    ));
    let tight = Tolerances { rtol: 1.0e-17, ..Tolerances::default() };
    assert!(matches!(
        integrate(&f, 0.0, &[0.5], 1.0, &tight),
        Err(Error::InvalidInput(_))
    ));
    // base time must lie inside the open time interval
    let windowed = VectorFieldSpec::new(
        vec![Expression::parse("x1", 1).unwrap()],
        Interval::new(0.0, 1.0).unwrap(),
        SpatialBox::all(1),
    )
    .unwrap();
    assert!(matches!(
        integrate(&windowed, 0.0, &[0.5], 0.5, &Tolerances::default()),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        integrate(&windowed, 0.5, &[0.5], 2.0, &Tolerances::default()),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn zero_width_integration_is_trivial() {
    let f = field1("x1");
    let c = integrate(&f, 0.5, &[2.0], 0.5, &Tolerances::default()).unwrap();
    assert!(c.termination().reached_target());
    assert_eq!(c.sample(0.5).unwrap(), vec![2.0]);
    assert_eq!(c.covered(), (0.5, 0.5));
}

#[test]
fn field_construction_validates_shapes() {
    let c1 = Expression::parse("x1", 1).unwrap();
    let c2 = Expression::parse("x1+x2", 2).unwrap();
    assert!(VectorFieldSpec::unbounded(vec![]).is_err());
    assert!(VectorFieldSpec::unbounded(vec![c2.clone()]).is_err());
    assert!(VectorFieldSpec::new(
        vec![c1.clone()],
        Interval::all(),
        SpatialBox::all(2)
    )
    .is_err());
    // prepared Jacobian entries are the symbolic derivatives
    let f = VectorFieldSpec::unbounded(vec![Expression::parse("x1^2", 1).unwrap()]).unwrap();
    assert_eq!(f.jacobian_entry(0, 0).to_string(), "2*x1");
}
