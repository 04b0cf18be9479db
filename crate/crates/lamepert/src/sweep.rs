//! ε-sweeps of the first-order expansions and log-log order fits.
//!
//! Each sweep returns the remainder `r(ε)` of one expansion together with a
//! least-squares fit of `log r` against `log ε`; an expansion that is
//! correct to first order shows a slope near 2.

use serde::Serialize;

use crate::emt::{emt_first_order_with, emt_sum_with};
use crate::error::{Error, Result};
use crate::fields::{eval_u, eval_u1, traction_displacement_gap};
use crate::geometry::{perturbed_grid_with_guard, BoundaryGrid, Curve, PerturbationField, Vec2};
use crate::kernels::LamePair;
use crate::potentials::{
    assemble_k1_with, assemble_kstar, assemble_s1_with, assemble_single, inner, l2_norm, w21_norm, Density, LayerOps, Side,
};
use crate::solver::{solve_base_with, solve_first_order_with, solve_perturbed, BlockSystem, PolynomialField, TransmissionProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(log x, log r)`; every `r` must be positive
/// and finite.
pub fn fit_loglog(x: &[f64], r: &[f64]) -> Result<LogLogFit> {
    if x.len() != r.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(format!("need ≥ 2 paired samples, got {} and {}", x.len(), r.len())));
    }
    if let Some(bad) = x.iter().chain(r).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidParameter(format!("log-log fit needs positive finite samples, got {bad}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let lr: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, mr) = (lx.iter().sum::<f64>() / m, lr.iter().sum::<f64>() / m);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("log-log fit needs distinct abscissae".into()));
    }
    let sxr: f64 = lx.iter().zip(&lr).map(|(a, b)| (a - mx) * (b - mr)).sum();
    let slope = sxr / sxx;
    Ok(LogLogFit { slope, intercept: mr - slope * mx })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    /// The quantity being expanded (for reporting only).
    pub value: f64,
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub check: String,
    pub points: Vec<SweepPoint>,
    pub fit: LogLogFit,
}

impl Sweep {
    pub fn new(check: impl Into<String>, points: Vec<SweepPoint>) -> Result<Self> {
        let e: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
        let r: Vec<f64> = points.iter().map(|p| p.remainder).collect();
        let fit = fit_loglog(&e, &r)?;
        Ok(Sweep { check: check.into(), points, fit })
    }

    /// Slope refitted without the largest `ε`.
    pub fn slope_without_largest(&self) -> Result<f64> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
        pts.pop();
        Ok(Sweep::new(self.check.clone(), pts)?.fit.slope)
    }

    pub fn max_remainder(&self) -> f64 {
        self.points.iter().map(|p| p.remainder).fold(0.0, f64::max)
    }
}

/// `count` equispaced points on the circle of radius `radius` about the
/// origin, starting at angle zero.
pub fn ring(radius: f64, count: usize) -> Vec<Vec2> {
    (0..count)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            Vec2::new(radius * a.cos(), radius * a.sin())
        })
        .collect()
}

fn check_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter(format!("ε list must be non-empty and positive, got {eps:?}")));
    }
    Ok(())
}

/// `r(ε) = max_x |u_ε(x) − u(x) − ε u₁(x)|` over the observation points.
pub fn displacement_sweep(problem: &TransmissionProblem, h: &PerturbationField, eps: &[f64], points: &[Vec2]) -> Result<Sweep> {
    check_eps(eps)?;
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    let base = solve_base_with(&system, &problem.field)?;
    let first = solve_first_order_with(&system, &problem.field, h, &base)?;
    let u = eval_u(problem, &base, points)?.values;
    let u1 = eval_u1(problem, h, &base, &first, points)?.values;
    let mut out = Vec::with_capacity(eps.len());
    for &e in eps {
        let (pg, de) = solve_perturbed(problem, h, e)?;
        let ue = eval_u(&problem.with_grid(pg), &de, points)?.values;
        let (mut r, mut v) = (0.0f64, 0.0f64);
        for i in 0..points.len() {
            r = r.max((ue[i] - u[i] - e * u1[i]).norm());
            v = v.max((ue[i] - u[i]).norm());
        }
        out.push(SweepPoint { epsilon: e, value: v, remainder: r });
    }
    Sweep::new("displacement", out)
}

/// `‖φ_ε∘Φ_ε − φ − εφ⁽¹⁾‖` in the discrete L² norm.
pub fn density_pullback_sweep(problem: &TransmissionProblem, h: &PerturbationField, eps: &[f64]) -> Result<Sweep> {
    check_eps(eps)?;
    let grid = &problem.grid;
    let system = BlockSystem::new(grid, problem.background, problem.inclusion)?;
    let base = solve_base_with(&system, &problem.field)?;
    let first = solve_first_order_with(&system, &problem.field, h, &base)?;
    let mut out = Vec::with_capacity(eps.len());
    for &e in eps {
        let (_, de) = solve_perturbed(problem, h, e)?;
        let diff = &de.phi - &base.phi;
        let r = l2_norm(grid, &(&diff - &(e * &first.phi)));
        out.push(SweepPoint { epsilon: e, value: l2_norm(grid, &diff), remainder: r });
    }
    Sweep::new("density-pullback", out)
}

/// Operator pullbacks applied to the node values of `phi`:
/// `‖K*_ε[φ̃]∘Φ_ε − K*φ − εK⁽¹⁾φ‖_{L²}` and
/// `‖S_ε[φ̃]∘Φ_ε − Sφ − εS⁽¹⁾φ‖_{W²₁}`.
pub fn operator_pullback_sweeps(
    grid: &BoundaryGrid,
    pair: LamePair,
    h: &PerturbationField,
    phi: &Density,
    eps: &[f64],
    guard: f64,
) -> Result<(Sweep, Sweep)> {
    check_eps(eps)?;
    let ops = LayerOps::new(grid, pair)?;
    let k0 = Density { data: &ops.kstar * &phi.data };
    let s0 = Density { data: &ops.single * &phi.data };
    let k1 = assemble_k1_with(&ops, h)?.apply(phi);
    let s1 = assemble_s1_with(&ops, h, Side::Plus).apply(phi);
    let (mut ks, mut ss) = (Vec::new(), Vec::new());
    for &e in eps {
        let pg = perturbed_grid_with_guard(grid, h, e, guard)?;
        let ke = assemble_kstar(&pg, pair)?.apply(phi);
        let se = assemble_single(&pg, pair)?.apply(phi);
        let kd = &ke - &k0;
        let sd = &se - &s0;
        ks.push(SweepPoint {
            epsilon: e,
            value: l2_norm(grid, &kd),
            remainder: l2_norm(grid, &(&kd - &(e * &k1))),
        });
        ss.push(SweepPoint {
            epsilon: e,
            value: w21_norm(grid, &sd),
            remainder: w21_norm(grid, &(&sd - &(e * &s1))),
        });
    }
    Ok((Sweep::new("kstar-pullback", ks)?, Sweep::new("single-pullback", ss)?))
}

/// Sign convention used when comparing a difference `Δ(ε)` with `ε·I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignChoice {
    /// `Δ − εI`.
    Nominal,
    /// `Δ + εI`.
    Flipped,
}

impl SignChoice {
    fn factor(self) -> f64 {
        match self {
            SignChoice::Nominal => 1.0,
            SignChoice::Flipped => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SignChoice::Nominal => "nominal",
            SignChoice::Flipped => "flipped",
        }
    }
}

/// Traction–displacement identity on the observation curve; one sweep per
/// sign choice of the first-order integrand.
pub fn traction_sweeps(
    problem: &TransmissionProblem,
    h: &PerturbationField,
    eps: &[f64],
    s_curve: &Curve,
    f: &PolynomialField,
) -> Result<[Sweep; 2]> {
    check_eps(eps)?;
    let mut raw = Vec::with_capacity(eps.len());
    for &e in eps {
        raw.push((e, traction_displacement_gap(problem, h, e, s_curve, f)?));
    }
    let build = |sign: SignChoice| {
        let pts = raw
            .iter()
            .map(|&(e, (lhs, rhs))| SweepPoint { epsilon: e, value: lhs, remainder: (lhs - sign.factor() * e * rhs).abs() })
            .collect();
        Sweep::new(format!("traction-{}", sign.label()), pts)
    };
    Ok([build(SignChoice::Nominal)?, build(SignChoice::Flipped)?])
}

/// `|Σ(D_ε) − Σ(D) ∓ ε I|` for the aggregated moment sum `Σ = ∫F·φ`; one
/// sweep per sign choice.
pub fn emt_sweeps(problem: &TransmissionProblem, f: &PolynomialField, h: &PerturbationField, eps: &[f64]) -> Result<[Sweep; 2]> {
    check_eps(eps)?;
    f.validate_lame(problem.background)?;
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    let s0 = emt_sum_with(&system, &problem.field, f)?;
    let i1 = emt_first_order_with(&system, &problem.field, f, h)?;
    let mut raw = Vec::with_capacity(eps.len());
    for &e in eps {
        let (pg, de) = solve_perturbed(problem, h, e)?;
        raw.push((e, inner(&pg, &f.sample(&pg), &de.phi) - s0));
    }
    let build = |sign: SignChoice| {
        let pts = raw
            .iter()
            .map(|&(e, d)| SweepPoint { epsilon: e, value: d, remainder: (d - sign.factor() * e * i1).abs() })
            .collect();
        Sweep::new(format!("emt-{}", sign.label()), pts)
    };
    Ok([build(SignChoice::Nominal)?, build(SignChoice::Flipped)?])
}

/// Decay of `max |u − H|` over rings of the given radii; the fitted slope is
/// the decay exponent.
pub fn far_field_decay(problem: &TransmissionProblem, radii: &[f64], count: usize) -> Result<Sweep> {
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    let base = solve_base_with(&system, &problem.field)?;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let pts = ring(r, count);
        let u = eval_u(problem, &base, &pts)?.values;
        let m = pts
            .iter()
            .zip(&u)
            .map(|(&x, &ux)| (ux - problem.field.value(x)).norm())
            .fold(0.0, f64::max);
        out.push(SweepPoint { epsilon: r, value: m, remainder: m });
    }
    Sweep::new("far-field", out)
}
