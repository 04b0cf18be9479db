//! Experiment configuration: JSON schema, defaults and up-front validation.

use std::path::Path;

use lamepert::geometry::{perturbed_grid_with_guard, sample_grid, BoundaryGrid, Curve, PerturbationField, Vec2};
use lamepert::kernels::LamePair;
use lamepert::potentials::distance_guard;
use lamepert::solver::{validate_pairs, PolynomialField, TransmissionProblem};
use lamepert::sweep::ring;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Solve,
    Expand,
    Traction,
    Emt,
    SweepAll,
}

impl Kind {
    pub fn label(self) -> &'static str {
        match self {
            Kind::Solve => "solve",
            Kind::Expand => "expand",
            Kind::Traction => "traction",
            Kind::Emt => "emt",
            Kind::SweepAll => "sweep-all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveSpec {
    Kite,
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    /// `X(t) = Σ_k cos[k]·cos(kt) + sin[k]·sin(kt)`; index `k` is the mode.
    Fourier { cos: Vec<[f64; 2]>, sin: Vec<[f64; 2]> },
}

impl CurveSpec {
    pub fn curve(&self) -> Curve {
        match self {
            CurveSpec::Kite => Curve::kite(),
            CurveSpec::Circle { radius } => Curve::circle(*radius),
            CurveSpec::Ellipse { a, b } => Curve::ellipse(*a, *b),
            CurveSpec::Fourier { cos, sin } => Curve::new(cos.clone(), sin.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub radius: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Accepted range of fitted remainder slopes.
    pub slope_band: [f64; 2],
    /// Bound on densities and remainders when the two media coincide.
    pub trivial: f64,
    /// Bound on the interface transmission residuals after a solve.
    pub interface: f64,
    /// Bound on the gap between the two first-order moment formulas.
    pub emt_forms: f64,
    /// The far-field decay exponent of `u − H` must not exceed this.
    pub decay_max_exponent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            slope_band: [1.9, 2.1],
            trivial: 1e-9,
            interface: 1e-7,
            emt_forms: 1e-6,
            decay_max_exponent: -0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free text; ignored.
    pub description: String,
    /// Value of the `experiment` column; defaults to the kind label.
    pub name: Option<String>,
    /// When present it must match the subcommand.
    pub kind: Option<Kind>,
    pub curve: CurveSpec,
    /// Interface displacement `h`; index `k` of `h_cos`/`h_sin` is the mode.
    pub perturbation: PerturbationField,
    pub background: LamePair,
    pub inclusion: LamePair,
    /// Background field `H`.
    pub field: PolynomialField,
    /// Test field `F` for the traction and moment checks.
    pub test_field: PolynomialField,
    pub epsilons: Vec<f64>,
    pub nodes: usize,
    pub observation: Observation,
    /// Radius of the circular observation curve enclosing the inclusion.
    pub s_curve_radius: f64,
    /// Bound on `ε max|κh|` for every perturbed interface.
    pub injectivity_guard: f64,
    /// Largest `|α|`, `|β|` in the moment table.
    pub emt_cap: u32,
    pub far_field_radii: Vec<f64>,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            description: String::new(),
            name: None,
            kind: None,
            curve: CurveSpec::Kite,
            perturbation: PerturbationField::cosine(2, 1.0),
            background: LamePair { lambda: 1.0, mu: 1.0 },
            inclusion: LamePair { lambda: 3.0, mu: 2.0 },
            field: PolynomialField::linear_shear(),
            test_field: PolynomialField::linear_shear(),
            epsilons: vec![0.08, 0.04, 0.02, 0.01],
            nodes: 256,
            observation: Observation { radius: 3.0, points: 12 },
            s_curve_radius: 3.0,
            injectivity_guard: 0.9,
            emt_cap: 2,
            far_field_radii: vec![10.0, 20.0, 40.0],
            tolerances: Tolerances::default(),
        }
    }
}

fn invalid(path: impl Into<String>, message: impl std::fmt::Display) -> CliError {
    CliError::ConfigInvalid {
        path: path.into(),
        message: message.to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(path, e.into_inner())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Check every precondition of the compute modules; nothing is solved.
    pub fn validate(&self, kind: Kind) -> Result<Prepared> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(invalid("kind", format!("config is for `{}` but `{}` was requested", k.label(), kind.label())));
            }
        }
        let finite = |path: &str, v: f64| if v.is_finite() { Ok(()) } else { Err(invalid(path, "must be finite")) };

        match &self.curve {
            CurveSpec::Kite => {}
            CurveSpec::Circle { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("curve.radius", "must be positive"));
                }
            }
            CurveSpec::Ellipse { a, b } => {
                for (p, v) in [("curve.a", a), ("curve.b", b)] {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(invalid(p, "must be positive"));
                    }
                }
            }
            CurveSpec::Fourier { cos, sin } => {
                if cos.iter().chain(sin).flatten().any(|v| !v.is_finite()) {
                    return Err(invalid("curve", "Fourier coefficients must be finite"));
                }
            }
        }
        let grid = sample_grid(&self.curve.curve(), self.nodes).map_err(|e| match e {
            lamepert::Error::OddNodeCount(_) => invalid("nodes", e),
            other => invalid("curve", other),
        })?;
        if grid.signed_area() <= 0.0 {
            return Err(invalid("curve", "curve must be counter-clockwise and enclose positive area"));
        }

        self.background.validate().map_err(|e| invalid("background", e))?;
        self.inclusion.validate().map_err(|e| invalid("inclusion", e))?;
        validate_pairs(self.background, self.inclusion).map_err(|e| invalid("inclusion", e))?;

        for (path, f) in [("field", &self.field), ("test_field", &self.test_field)] {
            let checked = PolynomialField::new(f.terms.clone()).map_err(|e| invalid(path, e))?;
            if checked.is_zero() {
                return Err(invalid(path, "field must be nonzero"));
            }
            checked.validate_lame(self.background).map_err(|e| invalid(path, e))?;
        }

        let h = &self.perturbation;
        if h.h_cos.iter().chain(&h.h_sin).any(|v| !v.is_finite()) {
            return Err(invalid("perturbation", "coefficients must be finite"));
        }
        if kind != Kind::Solve && h.is_zero() {
            return Err(invalid("perturbation", "perturbation must be nonzero for expansion sweeps"));
        }

        if !(self.injectivity_guard > 0.0 && self.injectivity_guard < 1.0) {
            return Err(invalid("injectivity_guard", "must lie in (0, 1)"));
        }
        if self.epsilons.len() < 2 {
            return Err(invalid("epsilons", "need at least two values for a slope fit"));
        }
        let mut perturbed = Vec::with_capacity(self.epsilons.len());
        for (i, &e) in self.epsilons.iter().enumerate() {
            let path = format!("epsilons[{i}]");
            if !(e.is_finite() && e > 0.0) {
                return Err(invalid(path, "must be positive"));
            }
            if self.epsilons[..i].contains(&e) {
                return Err(invalid(path, "duplicate value"));
            }
            perturbed.push(perturbed_grid_with_guard(&grid, h, e, self.injectivity_guard).map_err(|err| invalid(path, err))?);
        }

        finite("observation.radius", self.observation.radius)?;
        if self.observation.points == 0 {
            return Err(invalid("observation.points", "need at least one point"));
        }
        let observation = ring(self.observation.radius, self.observation.points);
        clear_of(&observation, &grid, &perturbed).map_err(|m| invalid("observation.radius", m))?;

        finite("s_curve_radius", self.s_curve_radius)?;
        let s_curve = Curve::circle(self.s_curve_radius.abs());
        let mut all = vec![&grid];
        all.extend(perturbed.iter());
        lamepert::fields::observation_grid(&s_curve, 256, &all).map_err(|e| invalid("s_curve_radius", e))?;

        if !(1..=4).contains(&self.emt_cap) {
            return Err(invalid("emt_cap", "must lie in 1..=4"));
        }

        if self.far_field_radii.len() < 2 {
            return Err(invalid("far_field_radii", "need at least two radii"));
        }
        for (i, &r) in self.far_field_radii.iter().enumerate() {
            let path = format!("far_field_radii[{i}]");
            if !(r.is_finite() && r > 0.0) || self.far_field_radii[..i].contains(&r) {
                return Err(invalid(path, "radii must be positive and distinct"));
            }
            clear_of(&ring(r, self.observation.points), &grid, &[]).map_err(|m| invalid(path, m))?;
        }

        let t = &self.tolerances;
        let [lo, hi] = t.slope_band;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("tolerances.slope_band", "need finite lo < hi"));
        }
        for (p, v) in [("tolerances.trivial", t.trivial), ("tolerances.interface", t.interface), ("tolerances.emt_forms", t.emt_forms)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(p, "must be positive"));
            }
        }
        finite("tolerances.decay_max_exponent", t.decay_max_exponent)?;

        let problem = TransmissionProblem::new(grid, self.background, self.inclusion, self.field.clone())
            .and_then(|p| p.with_injectivity_guard(self.injectivity_guard))
            .map_err(CliError::ComputeFailure)?;
        Ok(Prepared {
            kind,
            problem,
            observation,
            s_curve,
        })
    }
}

fn clear_of(points: &[Vec2], grid: &BoundaryGrid, perturbed: &[BoundaryGrid]) -> std::result::Result<(), String> {
    for g in std::iter::once(grid).chain(perturbed) {
        let need = distance_guard(g);
        for p in points {
            let d = g.distance_to(*p);
            if d < need {
                return Err(format!("point ({:.3}, {:.3}) is {d:.3e} from an interface (need >= {need:.3e})", p.x, p.y));
            }
            if g.contains(*p) != grid.contains(*p) {
                return Err(format!("point ({:.3}, {:.3}) changes side under the perturbation", p.x, p.y));
            }
        }
    }
    Ok(())
}

/// A validated configuration with its base problem assembled.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub kind: Kind,
    pub problem: TransmissionProblem,
    pub observation: Vec<Vec2>,
    pub s_curve: Curve,
}
