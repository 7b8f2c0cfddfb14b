//! Fixture corpus shared by the integration suites: the five well-understood
//! fields every geometric property is checked against, plus the two
//! pathological fixtures used by the hypothesis probes.

// each test target compiles its own copy and uses a different subset
#![allow(dead_code)]

use rectiflow::{Expression, Interval, SpatialBox, Tolerances, VectorFieldSpec};

pub struct Fixture {
    pub name: &'static str,
    pub field: VectorFieldSpec,
    pub window: Interval,
    pub probe_box: SpatialBox,
}

fn f1(src: &str) -> Expression {
    Expression::parse(src, 1).unwrap()
}

fn f2(src: &str) -> Expression {
    Expression::parse(src, 2).unwrap()
}

fn bx1(lo: f64, hi: f64) -> SpatialBox {
    SpatialBox::new(vec![Interval::new(lo, hi).unwrap()]).unwrap()
}

pub fn zero_fixture() -> Fixture {
    Fixture {
        name: "zero",
        field: VectorFieldSpec::unbounded(vec![f1("0")]).unwrap(),
        window: Interval::new(-1.0, 1.0).unwrap(),
        probe_box: bx1(-1.0, 1.0),
    }
}

pub fn linear_fixture() -> Fixture {
    Fixture {
        name: "linear",
        field: VectorFieldSpec::unbounded(vec![f1("x1")]).unwrap(),
        window: Interval::new(-1.0, 1.0).unwrap(),
        probe_box: bx1(-1.2, 1.2),
    }
}

pub fn cosine_fixture() -> Fixture {
    Fixture {
        name: "cosine",
        field: VectorFieldSpec::unbounded(vec![f1("cos(t)")]).unwrap(),
        window: Interval::new(-1.5, 1.5).unwrap(),
        probe_box: bx1(-1.0, 1.0),
    }
}

pub fn rotation_fixture() -> Fixture {
    let domain = SpatialBox::new(vec![
        Interval::new(-2.0, 2.0).unwrap(),
        Interval::new(-2.0, 2.0).unwrap(),
    ])
    .unwrap();
    Fixture {
        name: "rotation",
        field: VectorFieldSpec::new(vec![f2("-x2"), f2("x1")], Interval::all(), domain).unwrap(),
        window: Interval::new(-1.5, 1.5).unwrap(),
        probe_box: SpatialBox::new(vec![
            Interval::new(-0.9, 0.9).unwrap(),
            Interval::new(-0.9, 0.9).unwrap(),
        ])
        .unwrap(),
    }
}

pub fn logistic_fixture() -> Fixture {
    let domain = SpatialBox::new(vec![Interval::new(0.0, 1.0).unwrap()]).unwrap();
    Fixture {
        name: "logistic",
        field: VectorFieldSpec::new(vec![f1("x1*(1-x1)")], Interval::all(), domain).unwrap(),
        window: Interval::new(-1.0, 1.0).unwrap(),
        probe_box: bx1(0.2, 0.8),
    }
}

pub fn corpus() -> Vec<Fixture> {
    vec![
        zero_fixture(),
        linear_fixture(),
        cosine_fixture(),
        rotation_fixture(),
        logistic_fixture(),
    ]
}

pub fn quadratic_field() -> VectorFieldSpec {
    VectorFieldSpec::unbounded(vec![f1("x1^2")]).unwrap()
}

pub fn sqrt_kink_field() -> VectorFieldSpec {
    VectorFieldSpec::unbounded(vec![f1("2*sqrt(abs(x1))")]).unwrap()
}

pub fn tight_tol() -> Tolerances {
    Tolerances { rtol: 1.0e-12, atol: 1.0e-14, ..Tolerances::default() }
}

/// Problem file for the quadratic blow-up fixture, aimed so that the
/// verification grid contains states whose trajectories leave within the
/// window.
pub fn quadratic_problem_toml() -> &'static str {
    r#"
dimension = 1
field = ["x1^2"]

[time]
window = [-0.9, 0.9]
base = 0.0

[probe]
box = [[0.8, 1.5]]
"#
}

/// Problem file for the exponential field with the standard elements.
pub fn linear_problem_toml() -> &'static str {
    r#"
dimension = 1
field = ["x1"]

[time]
window = [-0.8, 0.8]
base = 0.0

[probe]
box = [[0.3, 0.9]]

[check]
initial_conditions = [[0.5], [-0.3], [1.0], [0.8], [-1.1]]
samples = 65

[elements.scale]
f = "t"
g = ["2*x1"]
f_inv = "t"
g_inv = ["x1/2"]

[elements.shift]
f = "t + 1"
g = ["x1"]
f_inv = "t - 1"
g_inv = ["x1"]

[elements.offset]
f = "t"
g = ["x1 + 1"]
f_inv = "t"
g_inv = ["x1 - 1"]

[diagnose]
region = [[-1.0, 1.0]]
"#
}
