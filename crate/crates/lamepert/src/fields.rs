//! Displacement fields built from solved densities: point evaluation of `u`,
//! `u_ε` and the corrector `u₁`, boundary traces, and residual checks of the
//! interface identities and of the local form of the Lamé system.

use crate::error::{Error, Result};
use crate::geometry::{refine_grid, sample_grid, sample_h, tangential_derivative_vec, BoundaryGrid, Curve, PerturbationField, Vec2};
use crate::kernels::{LamePair, Mat2};
use crate::potentials::{eval_off_boundary, eval_unchecked, Density, Potential, Side};
use crate::solver::{stress, BlockSystem, DensityPair, PolynomialField, TransmissionProblem};
use crate::tensors::{build_c, build_k, build_m};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Interior,
    Exterior,
}

#[derive(Debug, Clone)]
pub struct FieldEvaluation {
    pub points: Vec<Vec2>,
    pub values: Vec<Vec2>,
    /// `∂_b u_a` at `(a, b)`.
    pub gradients: Option<Vec<Mat2>>,
    pub regions: Vec<Region>,
}

fn classify(grid: &BoundaryGrid, points: &[Vec2]) -> Vec<Region> {
    points
        .iter()
        .map(|&p| if grid.contains(p) { Region::Interior } else { Region::Exterior })
        .collect()
}

fn split<'a>(points: &'a [Vec2], regions: &[Region], r: Region) -> (Vec<usize>, Vec<Vec2>) {
    let idx: Vec<usize> = (0..points.len()).filter(|&i| regions[i] == r).collect();
    let pts = idx.iter().map(|&i| points[i]).collect();
    (idx, pts)
}

/// `u = H + S[φ]` outside and `S̃[ψ]` inside, with gradients.
pub fn eval_u(problem: &TransmissionProblem, densities: &DensityPair, points: &[Vec2]) -> Result<FieldEvaluation> {
    let grid = &problem.grid;
    let regions = classify(grid, points);
    let mut values = vec![Vec2::zeros(); points.len()];
    let mut grads = vec![Mat2::zeros(); points.len()];
    for (region, dens, pair) in [
        (Region::Exterior, &densities.phi, problem.background),
        (Region::Interior, &densities.psi, problem.inclusion),
    ] {
        let (idx, pts) = split(points, &regions, region);
        if pts.is_empty() {
            continue;
        }
        let v = eval_off_boundary(grid, dens, pair, &pts, Potential::Single)?.values();
        let g = eval_off_boundary(grid, dens, pair, &pts, Potential::GradSingle)?.gradients();
        for (k, &i) in idx.iter().enumerate() {
            values[i] = v[k];
            grads[i] = g[k];
            if region == Region::Exterior {
                values[i] += problem.field.value(points[i]);
                grads[i] += problem.field.grad(points[i]);
            }
        }
    }
    Ok(FieldEvaluation {
        points: points.to_vec(),
        values,
        gradients: Some(grads),
        regions,
    })
}

/// Corrector `u₁ = S[φ⁽¹⁾] − S[κhφ] + D♯[hφ]` outside and the analogue
/// with `(ψ⁽¹⁾, ψ)` and the inclusion constants inside.
pub fn eval_u1(
    problem: &TransmissionProblem,
    h: &PerturbationField,
    base: &DensityPair,
    first_order: &DensityPair,
    points: &[Vec2],
) -> Result<FieldEvaluation> {
    let grid = &problem.grid;
    let hv = sample_h(grid, h);
    let kh: Vec<f64> = hv.iter().zip(&grid.curvature).map(|(a, k)| a * k).collect();
    let regions = classify(grid, points);
    let mut values = vec![Vec2::zeros(); points.len()];
    for (region, d0, d1, pair) in [
        (Region::Exterior, &base.phi, &first_order.phi, problem.background),
        (Region::Interior, &base.psi, &first_order.psi, problem.inclusion),
    ] {
        let (idx, pts) = split(points, &regions, region);
        if pts.is_empty() {
            continue;
        }
        let single = d1 - &d0.scaled(&kh);
        let a = eval_off_boundary(grid, &single, pair, &pts, Potential::Single)?.values();
        let b = eval_off_boundary(grid, &d0.scaled(&hv), pair, &pts, Potential::DSharp)?.values();
        for (k, &i) in idx.iter().enumerate() {
            values[i] = a[k] + b[k];
        }
    }
    Ok(FieldEvaluation {
        points: points.to_vec(),
        values,
        gradients: None,
        regions,
    })
}

/// Per-node boundary data of `u` on one side.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub side: Side,
    pub values: Vec<Vec2>,
    pub grad: Vec<Mat2>,
    /// Symmetric part of `grad`.
    pub strain: Vec<Mat2>,
    pub conormal: Vec<Vec2>,
}

fn rows_to_mats(v: &nalgebra::DVector<f64>) -> Vec<Mat2> {
    (0..v.len() / 4)
        .map(|i| Mat2::new(v[4 * i], v[4 * i + 1], v[4 * i + 2], v[4 * i + 3]))
        .collect()
}

/// Exterior (`Plus`) or interior (`Minus`) trace of the solution with
/// background field `field`.
pub fn boundary_traces_with(system: &BlockSystem, field: &PolynomialField, densities: &DensityPair, side: Side) -> BoundaryTrace {
    let g = system.grid();
    let (ops, dens) = match side {
        Side::Plus => (&system.exterior, &densities.phi),
        Side::Minus => (&system.interior, &densities.psi),
    };
    let mut values = Density { data: &ops.single * &dens.data }.to_vecs();
    let mut grad = rows_to_mats(&(ops.grad_trace(side) * &dens.data));
    let mut conormal = Density { data: ops.conormal(side) * &dens.data }.to_vecs();
    if side == Side::Plus {
        for i in 0..g.n {
            let x = g.points[i];
            values[i] += field.value(x);
            grad[i] += field.grad(x);
            conormal[i] += field.conormal(x, g.normal[i], system.background());
        }
    }
    let strain = grad.iter().map(|m| 0.5 * (m + m.transpose())).collect();
    BoundaryTrace {
        side,
        values,
        grad,
        strain,
        conormal,
    }
}

pub fn boundary_traces(problem: &TransmissionProblem, densities: &DensityPair, side: Side) -> Result<BoundaryTrace> {
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    Ok(boundary_traces_with(&system, &problem.field, densities, side))
}

/// Node-wise sup residuals of the transmission and interface identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceResiduals {
    /// `u^e − u^i`.
    pub displacement: f64,
    /// `∂u/∂ν|+ − ∂u/∂ν̃|−`.
    pub conormal: f64,
    /// `(C₀∇̂u^e)τ − (𝕄₀,₁∇̂u^i)τ`.
    pub identity1: f64,
    /// `(C₁∇̂u^i)τ − (𝕄₁,₀∇̂u^e)τ`.
    pub identity2: f64,
    /// `∇u^e n − ∇u^i n − (𝕂₀,₁∇̂u^i)n`.
    pub identity3: f64,
    /// `∇u^e n − ∇u^i n + (𝕂₁,₀∇̂u^e)n`.
    pub identity3_dual: f64,
}

impl InterfaceResiduals {
    pub fn max(&self) -> f64 {
        [
            self.displacement,
            self.conormal,
            self.identity1,
            self.identity2,
            self.identity3,
            self.identity3_dual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn interface_residuals(
    grid: &BoundaryGrid,
    bg: LamePair,
    inc: LamePair,
    ext: &BoundaryTrace,
    int: &BoundaryTrace,
) -> Result<InterfaceResiduals> {
    let c0 = build_c(bg);
    let c1 = build_c(inc);
    let m01 = build_m(bg, inc);
    let m10 = build_m(inc, bg);
    let k01 = build_k(bg, inc);
    let k10 = build_k(inc, bg);
    let mut r = InterfaceResiduals {
        displacement: 0.0,
        conormal: 0.0,
        identity1: 0.0,
        identity2: 0.0,
        identity3: 0.0,
        identity3_dual: 0.0,
    };
    for i in 0..grid.n {
        let (n, t) = (grid.normal[i], grid.tangent[i]);
        let (ee, ei) = (&ext.strain[i], &int.strain[i]);
        let jump = ext.grad[i] * n - int.grad[i] * n;
        r.displacement = r.displacement.max((ext.values[i] - int.values[i]).amax());
        r.conormal = r.conormal.max((ext.conormal[i] - int.conormal[i]).amax());
        let d1 = c0.apply(ee, n, t)? * t - m01.apply(ei, n, t)? * t;
        r.identity1 = r.identity1.max(d1.amax());
        let d2 = c1.apply(ei, n, t)? * t - m10.apply(ee, n, t)? * t;
        r.identity2 = r.identity2.max(d2.amax());
        r.identity3 = r.identity3.max((jump - k01.apply(ei, n, t)? * n).amax());
        r.identity3_dual = r.identity3_dual.max((jump + k10.apply(ee, n, t)? * n).amax());
    }
    Ok(r)
}

/// `∫ h ((C₁ − 𝕄₀,₁)∇̂u^i τ · ∇̂v^i τ + (𝕂₀,₁∇̂u^i)n · (C₁∇̂v^i)n) dσ`
/// from interior traces of `u` and `v`.
pub fn first_order_interior_integral(
    grid: &BoundaryGrid,
    h: &PerturbationField,
    bg: LamePair,
    inc: LamePair,
    u_int: &BoundaryTrace,
    v_int: &BoundaryTrace,
) -> Result<f64> {
    let hv = sample_h(grid, h);
    let c1 = build_c(inc);
    let diff = c1.sub(&build_m(bg, inc));
    let k01 = build_k(bg, inc);
    let mut acc = 0.0;
    for i in 0..grid.n {
        let (n, t) = (grid.normal[i], grid.tangent[i]);
        let (eu, ev) = (&u_int.strain[i], &v_int.strain[i]);
        let a = (diff.apply(eu, n, t)? * t).dot(&(ev * t));
        let b = (k01.apply(eu, n, t)? * n).dot(&(c1.apply(ev, n, t)? * n));
        acc += grid.weight[i] * hv[i] * (a + b);
    }
    Ok(acc)
}

/// The traction–displacement first-order term with the signs
/// `(𝕄₀,₁ − C₁)` and `−𝕂₀,₁`.
pub fn traction_first_order(
    grid: &BoundaryGrid,
    h: &PerturbationField,
    bg: LamePair,
    inc: LamePair,
    u_int: &BoundaryTrace,
    v_int: &BoundaryTrace,
) -> Result<f64> {
    let hv = sample_h(grid, h);
    let c1 = build_c(inc);
    let diff = build_m(bg, inc).sub(&c1);
    let k01 = build_k(bg, inc);
    let mut acc = 0.0;
    for i in 0..grid.n {
        let (n, t) = (grid.normal[i], grid.tangent[i]);
        let (eu, ev) = (&u_int.strain[i], &v_int.strain[i]);
        let a = (diff.apply(eu, n, t)? * t).dot(&(ev * t));
        let b = (k01.apply(eu, n, t)? * n).dot(&(c1.apply(ev, n, t)? * n));
        acc += grid.weight[i] * hv[i] * (a - b);
    }
    Ok(acc)
}

/// Observation curve with its quadrature grid; must enclose the inclusion
/// with at least the evaluation clearance.
pub fn observation_grid(s_curve: &Curve, nodes: usize, inclusions: &[&BoundaryGrid]) -> Result<BoundaryGrid> {
    let s = sample_grid(s_curve, nodes)?;
    for g in inclusions {
        let clearance = crate::potentials::distance_guard(g);
        for &p in &g.points {
            if !s.contains(p) || s.distance_to(p) < clearance {
                return Err(Error::CurveDoesNotEncloseInclusion);
            }
        }
    }
    Ok(s)
}

/// `∫_S w·∂F/∂ν − (∂w/∂ν)·F dσ` where `w` is the single layer of `dens` on
/// `grid` (background constants).
pub fn reciprocity_on_curve(
    s: &BoundaryGrid,
    grid: &BoundaryGrid,
    dens: &Density,
    pair: LamePair,
    f: &PolynomialField,
) -> Result<f64> {
    let v = eval_off_boundary(grid, dens, pair, &s.points, Potential::Single)?.values();
    let g = eval_off_boundary(grid, dens, pair, &s.points, Potential::GradSingle)?.gradients();
    let mut acc = 0.0;
    for i in 0..s.n {
        let x = s.points[i];
        let n = s.normal[i];
        let dw = stress(&g[i], pair) * n;
        acc += s.weight[i] * (v[i].dot(&f.conormal(x, n, pair)) - dw.dot(&f.value(x)));
    }
    Ok(acc)
}

/// Both sides of the traction–displacement identity for one `ε`:
/// `(LHS, first-order coefficient)`, to be compared as `LHS ≈ ε·RHS`.
pub fn traction_displacement_gap(
    problem: &TransmissionProblem,
    h: &PerturbationField,
    eps: f64,
    s_curve: &Curve,
    f: &PolynomialField,
) -> Result<(f64, f64)> {
    f.validate_lame(problem.background)?;
    let grid = &problem.grid;
    let system = BlockSystem::new(grid, problem.background, problem.inclusion)?;
    let u = crate::solver::solve_base_with(&system, &problem.field)?;
    let v = crate::solver::solve_base_with(&system, f)?;
    let (pg, ue) = crate::solver::solve_perturbed(problem, h, eps)?;
    let s = observation_grid(s_curve, 256, &[grid, &pg])?;
    // H cancels between u_ε and u.
    let lhs = reciprocity_on_curve(&s, &pg, &ue.phi, problem.background, f)?
        - reciprocity_on_curve(&s, grid, &u.phi, problem.background, f)?;
    let ui = boundary_traces_with(&system, &problem.field, &u, Side::Minus);
    let vi = boundary_traces_with(&system, f, &v, Side::Minus);
    let rhs = traction_first_order(grid, h, problem.background, problem.inclusion, &ui, &vi)?;
    Ok((lhs, rhs))
}

/// Sup over nodes of the local-coordinate form of the Lamé operator applied
/// to the solved field on one side:
/// `μ u_nn + λ(∂_n div u) n + μ ∇(∇u)ᵀ n n − κ ∂u/∂ν + ∂/∂τ((C∇̂u)τ)`.
/// Normal second derivatives come from a Richardson-extrapolated one-sided
/// difference of the gradient at `x ± t n`, `t = k·offset/4`, `k = 1..4`,
/// extrapolated to fourth order.
pub fn local_lame_residual(
    system: &BlockSystem,
    field: &PolynomialField,
    densities: &DensityPair,
    side: Side,
    offset: f64,
) -> Result<f64> {
    let step = offset / 4.0;
    let g = system.grid();
    let tr = boundary_traces_with(system, field, densities, side);
    let (pair, dens) = match side {
        Side::Plus => (system.background(), &densities.phi),
        Side::Minus => (system.inclusion(), &densities.psi),
    };
    let sgn = side.sign();
    // Near-boundary probes use an 8× trigonometrically refined grid.
    let fine = refine_grid(g, 8)?;
    let fine_dens = dens.refined(8);
    let probe = |d: f64| -> Result<Vec<Mat2>> {
        let pts: Vec<Vec2> = (0..g.n).map(|i| g.points[i] + sgn * d * g.normal[i]).collect();
        let mut gr = eval_unchecked(&fine, &fine_dens, pair, &pts, Potential::GradSingle)?.gradients();
        if side == Side::Plus {
            for (m, p) in gr.iter_mut().zip(&pts) {
                *m += field.grad(*p);
            }
        }
        Ok(gr)
    };
    // Extrapolating (g(kδ) − g(0))/(kδ), k = 1..4, to δ = 0 cancels the
    // first three error terms.
    const W: [f64; 4] = [4.0, -6.0, 4.0, -1.0];
    let probes: Vec<Vec<Mat2>> = (1..=4).map(|k| probe(k as f64 * step)).collect::<Result<_>>()?;
    let st: Vec<Vec2> = (0..g.n).map(|i| stress(&tr.grad[i], pair) * g.tangent[i]).collect();
    let dst = tangential_derivative_vec(g, &st);
    let mut worst: f64 = 0.0;
    for i in 0..g.n {
        let (n, t, kap) = (g.normal[i], g.tangent[i], g.curvature[i]);
        let mut dn = Mat2::zeros();
        for (k, p) in probes.iter().enumerate() {
            dn += W[k] * (p[i] - tr.grad[i]) / ((k + 1) as f64 * step);
        }
        let dn = sgn * dn;
        let u_nn = dn * n;
        let div_n = dn.trace();
        let nn = n.dot(&(dn * n)) * n + n.dot(&(dn * t)) * t;
        let r = pair.mu * u_nn + pair.lambda * div_n * n + pair.mu * nn - kap * tr.conormal[i] + dst[i];
        worst = worst.max(r.amax());
    }
    Ok(worst)
}

/// `|∫ g·∂f/∂ν − ∫ f·∂g/∂ν|` for two interior solutions.
pub fn betti_residual(grid: &BoundaryGrid, f: &BoundaryTrace, g: &BoundaryTrace) -> f64 {
    let a: f64 = (0..grid.n).map(|i| grid.weight[i] * g.values[i].dot(&f.conormal[i])).sum();
    let b: f64 = (0..grid.n).map(|i| grid.weight[i] * f.values[i].dot(&g.conormal[i])).sum();
    (a - b).abs()
}

/// `∫ u·∂u/∂ν dσ`, the strain energy of an interior solution.
pub fn interior_energy(grid: &BoundaryGrid, u: &BoundaryTrace) -> f64 {
    (0..grid.n).map(|i| grid.weight[i] * u.values[i].dot(&u.conormal[i])).sum()
}
