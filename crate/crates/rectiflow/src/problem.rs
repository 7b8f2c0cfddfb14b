//! Problem description files.
//!
//! A problem file is TOML describing one field plus the knobs every command
//! needs: the time window and base time, the spatial domain, a probe box,
//! integration tolerances, named symmetry elements, initial conditions for
//! checks, and diagnostic settings. Example:
//!
//! ```toml
//! dimension = 1
//! field = ["x1"]
//!
//! [time]
//! window = [-1.0, 1.0]
//! base = 0.0
//!
//! [probe]
//! box = [[0.3, 0.9]]
//!
//! [check]
//! initial_conditions = [[0.5], [1.0]]
//!
//! [elements.double]
//! f = "t"
//! g = ["2*x1"]
//! f_inv = "t"
//! g_inv = ["x1/2"]
//! ```

use crate::diagnostics::{default_radii, CandidateCurve};
use crate::domain::{Interval, SpatialBox};
use crate::expr::Expression;
use crate::integrate::{Tolerances, VectorFieldSpec};
use crate::symmetry::{SymmetryCheckConfig, WreathElement};
use crate::{Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    /// field components as expressions in t, x1..xn
    pub field: Vec<String>,
    pub time: TimeSection,
    pub domain: Option<DomainSection>,
    pub probe: Option<ProbeSection>,
    pub tolerances: Option<ToleranceSection>,
    pub check: Option<CheckSection>,
    #[serde(default)]
    pub elements: BTreeMap<String, ElementSection>,
    pub diagnose: Option<DiagnoseSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// existence interval of the field; omitted means all of time.
    /// TOML spells unbounded ends as inf / -inf.
    pub interval: Option<[f64; 2]>,
    /// bounded working window [a, b]
    pub window: [f64; 2],
    /// anchor time t0 for flows, inside the window
    pub base: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(rename = "box")]
    pub axes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    /// bounded box of representative initial states; falls back to the
    /// domain when omitted and the domain is bounded
    #[serde(rename = "box")]
    pub axes: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_probe_samples")]
    pub time_samples: usize,
    #[serde(default = "default_probe_samples")]
    pub space_samples: usize,
}

fn default_probe_samples() -> usize {
    5
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection { axes: None, time_samples: 5, space_samples: 5 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub blowup: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub initial_conditions: Vec<Vec<f64>>,
    pub samples: Option<usize>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSection {
    pub f: String,
    pub g: Vec<String>,
    pub f_inv: Option<String>,
    pub g_inv: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    /// region for Lipschitz estimation; defaults to the probe box
    pub region: Option<Vec<[f64; 2]>>,
    pub radii: Option<Vec<f64>>,
    /// scale factors for the growing-region trend
    pub scales: Option<Vec<f64>>,
    /// probe point for the uniqueness check
    pub point: Option<Vec<f64>>,
    #[serde(default)]
    pub candidates: Vec<CandidateSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSection {
    pub label: String,
    /// components as expressions in t
    pub components: Vec<String>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<ProblemFile> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
        })?;
        ProblemFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ProblemFile> {
        toml::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("problem file: {e}")))
    }

    /// Resolve every section into working objects.
    pub fn compile(&self) -> Result<CompiledProblem> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if self.field.len() != n {
            return Err(Error::InvalidInput(format!(
                "field has {} components, dimension is {n}",
                self.field.len()
            )));
        }
        let components = self
            .field
            .iter()
            .map(|s| Expression::parse(s, n))
            .collect::<Result<Vec<_>>>()?;

        let time_interval = match self.time.interval {
            None => Interval::all(),
            Some([lo, hi]) => Interval::new(lo, hi)?,
        };
        let window = Interval::new(self.time.window[0], self.time.window[1])?;
        if !window.is_bounded() {
            return Err(Error::InvalidInput("the time window must be bounded".into()));
        }

        let domain = match &self.domain {
            None => SpatialBox::all(n),
            Some(d) => box_from(&d.axes, n, "domain")?,
        };
        let field = VectorFieldSpec::new(components, time_interval, domain.clone())?;

        let probe = self.probe.clone().unwrap_or_default();
        let probe_box = match &probe.axes {
            Some(axes) => Some(box_from(axes, n, "probe")?),
            None if domain.is_bounded() => Some(domain.clone()),
            None => None,
        };
        if probe.time_samples == 0 || probe.space_samples == 0 {
            return Err(Error::InvalidInput("probe sample counts must be positive".into()));
        }

        let mut tol = Tolerances::default();
        if let Some(t) = &self.tolerances {
            if let Some(r) = t.rtol {
                tol.rtol = r;
            }
            if let Some(a) = t.atol {
                tol.atol = a;
            }
            if let Some(b) = t.blowup {
                tol.blowup_norm = b;
            }
        }
        tol.validate()?;

        let mut elements = BTreeMap::new();
        for (name, sec) in &self.elements {
            elements.insert(name.clone(), compile_element(name, sec, n)?);
        }

        let check = match &self.check {
            None => None,
            Some(c) => {
                if c.initial_conditions.is_empty() {
                    return Err(Error::InvalidInput(
                        "check.initial_conditions must not be empty".into(),
                    ));
                }
                for ic in &c.initial_conditions {
                    if ic.len() != n {
                        return Err(Error::InvalidInput(format!(
                            "initial condition {ic:?} does not have dimension {n}"
                        )));
                    }
                }
                let mut config = SymmetryCheckConfig { tol: tol.clone(), ..Default::default() };
                if let Some(s) = c.samples {
                    config.samples = s;
                }
                if let Some(th) = c.threshold {
                    if !th.is_finite() || th <= 0.0 {
                        return Err(Error::InvalidInput("check.threshold must be positive".into()));
                    }
                    config.threshold = th;
                }
                Some(CheckSettings { initial_conditions: c.initial_conditions.clone(), config })
            }
        };

        let diagnose = {
            let sec = self.diagnose.clone().unwrap_or(DiagnoseSection {
                region: None,
                radii: None,
                scales: None,
                point: None,
                candidates: Vec::new(),
            });
            let region = match &sec.region {
                Some(axes) => Some(box_from(axes, n, "diagnose.region")?),
                None => None,
            };
            if let Some(p) = &sec.point {
                if p.len() != n {
                    return Err(Error::InvalidInput(
                        "diagnose.point does not match the dimension".into(),
                    ));
                }
            }
            let candidates = sec
                .candidates
                .iter()
                .map(|c| {
                    let comps = c
                        .components
                        .iter()
                        .map(|s| Expression::parse(s, n))
                        .collect::<Result<Vec<_>>>()?;
                    if comps.len() != n {
                        return Err(Error::InvalidInput(format!(
                            "candidate '{}' has {} components, dimension is {n}",
                            c.label,
                            comps.len()
                        )));
                    }
                    CandidateCurve::new(c.label.clone(), comps)
                })
                .collect::<Result<Vec<_>>>()?;
            DiagnoseSettings {
                region,
                radii: sec.radii.clone().unwrap_or_else(default_radii),
                scales: sec.scales.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]),
                point: sec.point.clone(),
                candidates,
            }
        };

        Ok(CompiledProblem {
            field,
            base_time: self.time.base,
            window,
            probe_box,
            probe_time_samples: probe.time_samples,
            probe_space_samples: probe.space_samples,
            tol,
            elements,
            check,
            diagnose,
        })
    }
}

fn box_from(axes: &[[f64; 2]], n: usize, what: &str) -> Result<SpatialBox> {
    if axes.len() != n {
        return Err(Error::InvalidInput(format!(
            "{what} box has {} axes, dimension is {n}",
            axes.len()
        )));
    }
    let ivs = axes.iter().map(|&[lo, hi]| Interval::new(lo, hi)).collect::<Result<Vec<_>>>()?;
    SpatialBox::new(ivs)
}

fn compile_element(name: &str, sec: &ElementSection, n: usize) -> Result<WreathElement> {
    let f = Expression::parse(&sec.f, n)?;
    if sec.g.len() != n {
        return Err(Error::InvalidInput(format!(
            "element '{name}': g has {} components, dimension is {n}",
            sec.g.len()
        )));
    }
    let g = sec.g.iter().map(|s| Expression::parse(s, n)).collect::<Result<Vec<_>>>()?;
    let elem = WreathElement::new(f, g)
        .map_err(|e| Error::InvalidInput(format!("element '{name}': {e}")))?;
    match (&sec.f_inv, &sec.g_inv) {
        (Some(fi), Some(gi)) => {
            let fi = Expression::parse(fi, n)?;
            if gi.len() != n {
                return Err(Error::InvalidInput(format!(
                    "element '{name}': g_inv has {} components, dimension is {n}",
                    gi.len()
                )));
            }
            let gi = gi.iter().map(|s| Expression::parse(s, n)).collect::<Result<Vec<_>>>()?;
            elem.with_inverse(fi, gi)
                .map_err(|e| Error::InvalidInput(format!("element '{name}': {e}")))
        }
        (None, None) => Ok(elem),
        _ => Err(Error::InvalidInput(format!(
            "element '{name}': provide both f_inv and g_inv or neither"
        ))),
    }
}

/// Settings for symmetry checks, resolved.
#[derive(Debug, Clone)]
pub struct CheckSettings {
    pub initial_conditions: Vec<Vec<f64>>,
    pub config: SymmetryCheckConfig,
}

/// Settings for the diagnose command, resolved.
#[derive(Debug, Clone)]
pub struct DiagnoseSettings {
    pub region: Option<SpatialBox>,
    pub radii: Vec<f64>,
    pub scales: Vec<f64>,
    pub point: Option<Vec<f64>>,
    pub candidates: Vec<CandidateCurve>,
}

/// A problem file after validation: objects instead of strings.
#[derive(Debug, Clone)]
pub struct CompiledProblem {
    pub field: VectorFieldSpec,
    pub base_time: f64,
    pub window: Interval,
    pub probe_box: Option<SpatialBox>,
    pub probe_time_samples: usize,
    pub probe_space_samples: usize,
    pub tol: Tolerances,
    pub elements: BTreeMap<String, WreathElement>,
    pub check: Option<CheckSettings>,
    pub diagnose: DiagnoseSettings,
}

impl CompiledProblem {
    /// The probe box, demanded by commands that cannot run without one.
    pub fn demand_probe_box(&self) -> Result<&SpatialBox> {
        self.probe_box.as_ref().ok_or_else(|| {
            Error::InvalidInput(
                "this command needs a probe box: add [probe] box = [...] or bound the domain"
                    .into(),
            )
        })
    }

    /// A named element, demanded by symmetry commands.
    pub fn demand_element(&self, name: &str) -> Result<&WreathElement> {
        self.elements.get(name).ok_or_else(|| {
            let known: Vec<_> = self.elements.keys().cloned().collect();
            Error::InvalidInput(format!(
                "no element named '{name}' (known: {})",
                if known.is_empty() { "none".into() } else { known.join(", ") }
            ))
        })
    }
}
