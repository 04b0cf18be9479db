//! Elastic moment tensors `m^j_{αβk} = ∫ y^β (g_α^j)_k dσ`, where `g_α^j` is
//! the exterior density for data `x^α e_j`, their aggregated sums
//! `Σ a_j^α b_k^β m^j_{αβk} = ∫ F·φ dσ`, and the first-order change of the
//! sums under a boundary perturbation.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{boundary_traces_with, first_order_interior_integral};
use crate::geometry::{sample_h, BoundaryGrid, PerturbationField};
use crate::potentials::{inner, Density, Side};
use crate::solver::{solve_base_with, solve_perturbed, BlockSystem, DensityPair, PolynomialField, TransmissionProblem};
use crate::tensors::build_s;

/// Densities `(f_α^j, g_α^j)` for data `x^α e_j`; the data need not solve
/// the Lamé system.
pub fn emt_densities(system: &BlockSystem, alpha: [u32; 2], j: usize) -> Result<DensityPair> {
    if j != 1 && j != 2 {
        return Err(Error::Dimension(format!("component index {j} (must be 1 or 2)")));
    }
    solve_base_with(system, &PolynomialField::monomial(alpha, j))
}

/// `∫ y^β (g)_k dσ`.
pub fn emt_entry(grid: &BoundaryGrid, g: &Density, beta: [u32; 2], k: usize) -> f64 {
    let f = PolynomialField::monomial(beta, k);
    inner(grid, &f.sample(grid), g)
}

/// Multi-indices with `1 ≤ |α| ≤ cap` in graded order.
pub fn multi_indices(cap: u32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for order in 1..=cap {
        for a1 in (0..=order).rev() {
            out.push([a1, order - a1]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct EmtRow {
    pub alpha1: u32,
    pub alpha2: u32,
    pub beta1: u32,
    pub beta2: u32,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmtTable {
    pub cap: u32,
    /// Keyed by `(α, β, j, k)`.
    pub entries: BTreeMap<([u32; 2], [u32; 2], usize, usize), f64>,
}

impl EmtTable {
    pub fn build(system: &BlockSystem, cap: u32) -> Result<Self> {
        let grid = system.grid();
        let idx = multi_indices(cap);
        let mut entries = BTreeMap::new();
        for &alpha in &idx {
            for j in 1..=2 {
                let d = emt_densities(system, alpha, j)?;
                for &beta in &idx {
                    for k in 1..=2 {
                        entries.insert((alpha, beta, j, k), emt_entry(grid, &d.phi, beta, k));
                    }
                }
            }
        }
        Ok(EmtTable { cap, entries })
    }

    pub fn get(&self, alpha: [u32; 2], beta: [u32; 2], j: usize, k: usize) -> Option<f64> {
        self.entries.get(&(alpha, beta, j, k)).copied()
    }

    pub fn rows(&self) -> Vec<EmtRow> {
        self.entries
            .iter()
            .map(|(&(a, b, j, k), &value)| EmtRow {
                alpha1: a[0],
                alpha2: a[1],
                beta1: b[0],
                beta2: b[1],
                j,
                k,
                value,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        for r in self.rows() {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// `Σ a_j^α b_k^β m^j_{αβk}` from the table (constant terms contribute
    /// nothing since constants are rigid).
    pub fn contract(&self, h: &PolynomialField, f: &PolynomialField) -> Result<f64> {
        let mut acc = 0.0;
        for a in &h.terms {
            for b in &f.terms {
                if a.alpha == [0, 0] || b.alpha == [0, 0] {
                    continue;
                }
                let m = self.get(a.alpha, b.alpha, a.j, b.j).ok_or_else(|| {
                    Error::Dimension(format!("multi-index {:?}/{:?} beyond table cap {}", a.alpha, b.alpha, self.cap))
                })?;
                acc += a.coeff * b.coeff * m;
            }
        }
        Ok(acc)
    }
}

/// `∫ F·φ dσ` with `φ` the exterior density for background field `H`.
pub fn emt_sum_with(system: &BlockSystem, h: &PolynomialField, f: &PolynomialField) -> Result<f64> {
    let d = solve_base_with(system, h)?;
    Ok(inner(system.grid(), &f.sample(system.grid()), &d.phi))
}

pub fn emt_sum(problem: &TransmissionProblem, f: &PolynomialField) -> Result<f64> {
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    emt_sum_with(&system, &problem.field, f)
}

/// `∫_{∂D_ε} F·φ_ε dσ_ε`.
pub fn emt_sum_perturbed(problem: &TransmissionProblem, f: &PolynomialField, h: &PerturbationField, eps: f64) -> Result<f64> {
    let (pg, d) = solve_perturbed(problem, h, eps)?;
    Ok(inner(&pg, &f.sample(&pg), &d.phi))
}

/// First-order coefficient from interior traces of `u` (data `H`) and `v`
/// (data `F`).
pub fn emt_first_order_with(system: &BlockSystem, h_field: &PolynomialField, f: &PolynomialField, h: &PerturbationField) -> Result<f64> {
    let u = solve_base_with(system, h_field)?;
    let v = solve_base_with(system, f)?;
    let ui = boundary_traces_with(system, h_field, &u, Side::Minus);
    let vi = boundary_traces_with(system, f, &v, Side::Minus);
    first_order_interior_integral(system.grid(), h, system.background(), system.inclusion(), &ui, &vi)
}

pub fn emt_first_order(problem: &TransmissionProblem, f: &PolynomialField, h: &PerturbationField) -> Result<f64> {
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    emt_first_order_with(&system, &problem.field, f, h)
}

/// The same coefficient from exterior traces: `∫ h (𝕊∇̂u^e) : ∇̂v^e dσ`.
pub fn emt_first_order_exterior_form_with(
    system: &BlockSystem,
    h_field: &PolynomialField,
    f: &PolynomialField,
    h: &PerturbationField,
) -> Result<f64> {
    let grid = system.grid();
    let u = solve_base_with(system, h_field)?;
    let v = solve_base_with(system, f)?;
    let ue = boundary_traces_with(system, h_field, &u, Side::Plus);
    let ve = boundary_traces_with(system, f, &v, Side::Plus);
    let s = build_s(system.background(), system.inclusion());
    let hv = sample_h(grid, h);
    let mut acc = 0.0;
    for i in 0..grid.n {
        let b = s.bilinear(&ue.strain[i], &ve.strain[i], grid.normal[i], grid.tangent[i])?;
        acc += grid.weight[i] * hv[i] * b;
    }
    Ok(acc)
}

pub fn emt_first_order_exterior_form(problem: &TransmissionProblem, f: &PolynomialField, h: &PerturbationField) -> Result<f64> {
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    emt_first_order_exterior_form_with(&system, &problem.field, f, h)
}
