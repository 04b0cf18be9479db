//! Transmission problem `u = H + S[φ]` outside, `u = S̃[ψ]` inside, and the
//! three boundary-integral systems for `(ψ, φ)`, `(ψ_ε, φ_ε)` and
//! `(ψ⁽¹⁾, φ⁽¹⁾)`. All share the block operator
//! `[S̃, −S; −½I + K̃*, −½I − K*]`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, LU, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{perturbed_grid_with_guard, sample_h, DEFAULT_INJECTIVITY_GUARD, sample_h_prime, tangential_derivative_vec, BoundaryGrid, PerturbationField, Vec2};
use crate::kernels::{LamePair, Mat2, Ten3};
use crate::potentials::{assemble_k1_with, assemble_s1_with, Density, LayerOps, Side};

/// One monomial `coeff · x₁^α₁ x₂^α₂ e_j` (`j` is 1 or 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: f64,
    pub alpha: [u32; 2],
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolynomialField {
    pub terms: Vec<PolyTerm>,
}

fn mono(alpha: [u32; 2], x: Vec2) -> f64 {
    x.x.powi(alpha[0] as i32) * x.y.powi(alpha[1] as i32)
}

/// `∂_i x^α = c x^β`.
fn d_mono(alpha: [u32; 2], i: usize) -> Option<(f64, [u32; 2])> {
    if alpha[i] == 0 {
        return None;
    }
    let mut b = alpha;
    b[i] -= 1;
    Some((alpha[i] as f64, b))
}

impl PolynomialField {
    pub fn new(terms: Vec<PolyTerm>) -> Result<Self> {
        for t in &terms {
            if t.j != 1 && t.j != 2 {
                return Err(Error::Dimension(format!("component index {} (must be 1 or 2)", t.j)));
            }
            if !t.coeff.is_finite() {
                return Err(Error::Dimension("non-finite coefficient".into()));
            }
        }
        Ok(PolynomialField { terms })
    }

    /// `x^α e_j`.
    pub fn monomial(alpha: [u32; 2], j: usize) -> Self {
        PolynomialField {
            terms: vec![PolyTerm { coeff: 1.0, alpha, j }],
        }
    }

    /// Pure shear `(x₁, −x₂)`.
    pub fn linear_shear() -> Self {
        PolynomialField {
            terms: vec![
                PolyTerm { coeff: 1.0, alpha: [1, 0], j: 1 },
                PolyTerm { coeff: -1.0, alpha: [0, 1], j: 2 },
            ],
        }
    }

    /// Infinitesimal rotation `(x₂, −x₁)`.
    pub fn rotation() -> Self {
        PolynomialField {
            terms: vec![
                PolyTerm { coeff: 1.0, alpha: [0, 1], j: 1 },
                PolyTerm { coeff: -1.0, alpha: [1, 0], j: 2 },
            ],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    pub fn value(&self, x: Vec2) -> Vec2 {
        let mut v = Vec2::zeros();
        for t in &self.terms {
            v[t.j - 1] += t.coeff * mono(t.alpha, x);
        }
        v
    }

    /// `g[(a, b)] = ∂_b H_a`.
    pub fn grad(&self, x: Vec2) -> Mat2 {
        let mut g = Mat2::zeros();
        for t in &self.terms {
            for b in 0..2 {
                if let Some((c, beta)) = d_mono(t.alpha, b) {
                    g[(t.j - 1, b)] += t.coeff * c * mono(beta, x);
                }
            }
        }
        g
    }

    /// `h[a][b][c] = ∂_c ∂_b H_a`.
    pub fn hessian(&self, x: Vec2) -> Ten3 {
        let mut h = [[[0.0; 2]; 2]; 2];
        for t in &self.terms {
            for b in 0..2 {
                let Some((c1, beta)) = d_mono(t.alpha, b) else { continue };
                for c in 0..2 {
                    if let Some((c2, gamma)) = d_mono(beta, c) {
                        h[t.j - 1][b][c] += t.coeff * c1 * c2 * mono(gamma, x);
                    }
                }
            }
        }
        h
    }

    /// `λ div H n + μ(∇H + ∇Hᵀ) n`.
    pub fn conormal(&self, x: Vec2, n: Vec2, pair: LamePair) -> Vec2 {
        let g = self.grad(x);
        stress(&g, pair) * n
    }

    /// Coefficients of `μΔH + (λ+μ)∇div H`, computed symbolically.
    pub fn lame_operator(&self, pair: LamePair) -> BTreeMap<(usize, [u32; 2]), f64> {
        let mut out = BTreeMap::new();
        let mut add = |comp: usize, a: [u32; 2], v: f64| *out.entry((comp, a)).or_insert(0.0) += v;
        for t in &self.terms {
            let j = t.j - 1;
            for b in 0..2 {
                let Some((c1, beta)) = d_mono(t.alpha, b) else { continue };
                if let Some((c2, gamma)) = d_mono(beta, b) {
                    add(j, gamma, pair.mu * t.coeff * c1 * c2);
                }
            }
            if let Some((c1, beta)) = d_mono(t.alpha, j) {
                for i in 0..2 {
                    if let Some((c2, gamma)) = d_mono(beta, i) {
                        add(i, gamma, (pair.lambda + pair.mu) * t.coeff * c1 * c2);
                    }
                }
            }
        }
        out
    }

    pub fn validate_lame(&self, pair: LamePair) -> Result<()> {
        let scale = self.terms.iter().map(|t| t.coeff.abs()).fold(1.0, f64::max) * (pair.lambda + 2.0 * pair.mu);
        let worst = self.lame_operator(pair).values().map(|v| v.abs()).fold(0.0, f64::max);
        if worst > 1e-12 * scale {
            return Err(Error::NotLameSolution(worst));
        }
        Ok(())
    }

    /// Samples of `H` on a grid.
    pub fn sample(&self, grid: &BoundaryGrid) -> Density {
        Density::from_fn(grid.n, |i| self.value(grid.points[i]))
    }

    /// Samples of `∂H/∂ν` on a grid.
    pub fn sample_conormal(&self, grid: &BoundaryGrid, pair: LamePair) -> Density {
        Density::from_fn(grid.n, |i| self.conormal(grid.points[i], grid.normal[i], pair))
    }
}

/// `λ tr(G) I + μ(G + Gᵀ)`.
pub fn stress(g: &Mat2, pair: LamePair) -> Mat2 {
    pair.lambda * g.trace() * Mat2::identity() + pair.mu * (g + g.transpose())
}

#[derive(Debug, Clone)]
pub struct TransmissionProblem {
    pub grid: BoundaryGrid,
    pub background: LamePair,
    pub inclusion: LamePair,
    pub field: PolynomialField,
    /// Bound on `ε max|κh|` for perturbed solves.
    pub injectivity_guard: f64,
}

/// Both pairs valid and `(λ₀−λ₁)(μ₀−μ₁) ≥ 0`.
pub fn validate_pairs(bg: LamePair, inc: LamePair) -> Result<()> {
    bg.validate()?;
    inc.validate()?;
    if (bg.lambda - inc.lambda) * (bg.mu - inc.mu) < 0.0 {
        return Err(Error::InvalidLame(format!(
            "contrast signs differ: (λ₀−λ₁)(μ₀−μ₁) = {:.3e} < 0",
            (bg.lambda - inc.lambda) * (bg.mu - inc.mu)
        )));
    }
    Ok(())
}

impl TransmissionProblem {
    pub fn new(grid: BoundaryGrid, background: LamePair, inclusion: LamePair, field: PolynomialField) -> Result<Self> {
        validate_pairs(background, inclusion)?;
        field.validate_lame(background)?;
        Ok(TransmissionProblem {
            grid,
            background,
            inclusion,
            field,
            injectivity_guard: DEFAULT_INJECTIVITY_GUARD,
        })
    }

    pub fn with_injectivity_guard(mut self, guard: f64) -> Result<Self> {
        if !(guard > 0.0 && guard < 1.0) {
            return Err(Error::InvalidParameter(format!("injectivity guard {guard} must lie in (0, 1)")));
        }
        self.injectivity_guard = guard;
        Ok(self)
    }

    /// Same materials and field on another boundary.
    pub fn with_grid(&self, grid: BoundaryGrid) -> Self {
        TransmissionProblem { grid, ..self.clone() }
    }

    pub fn is_matched(&self) -> bool {
        self.background == self.inclusion
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityPair {
    /// Interior density.
    pub psi: Density,
    /// Exterior density.
    pub phi: Density,
}

/// Condition estimates above this make the solve fail.
pub const CONDITION_LIMIT: f64 = 1e12;

/// LU-factorised block operator for one grid and one pair of materials.
pub struct BlockSystem<'g> {
    pub exterior: LayerOps<'g>,
    pub interior: LayerOps<'g>,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    pub condition: f64,
}

impl<'g> BlockSystem<'g> {
    pub fn new(grid: &'g BoundaryGrid, background: LamePair, inclusion: LamePair) -> Result<Self> {
        validate_pairs(background, inclusion)?;
        let exterior = LayerOps::new(grid, background)?;
        let interior = LayerOps::new(grid, inclusion)?;
        let m = 2 * grid.n;
        let mut a = DMatrix::zeros(2 * m, 2 * m);
        a.view_mut((0, 0), (m, m)).copy_from(&interior.single);
        a.view_mut((0, m), (m, m)).copy_from(&(-&exterior.single));
        a.view_mut((m, 0), (m, m)).copy_from(&interior.conormal(Side::Minus));
        a.view_mut((m, m), (m, m)).copy_from(&(-exterior.conormal(Side::Plus)));
        let lu = a.clone().lu();
        let condition = estimate_condition(&a, &lu);
        if !(condition < CONDITION_LIMIT) {
            return Err(Error::SingularSystem(condition));
        }
        Ok(BlockSystem {
            exterior,
            interior,
            matrix: a,
            lu,
            condition,
        })
    }

    pub fn grid(&self) -> &'g BoundaryGrid {
        self.exterior.grid
    }

    pub fn background(&self) -> LamePair {
        self.exterior.pair
    }

    pub fn inclusion(&self) -> LamePair {
        self.interior.pair
    }

    fn stack(dirichlet: &Density, neumann: &Density) -> DVector<f64> {
        let m = dirichlet.data.len();
        let mut b = DVector::zeros(2 * m);
        b.rows_mut(0, m).copy_from(&dirichlet.data);
        b.rows_mut(m, m).copy_from(&neumann.data);
        b
    }

    /// Solve with Dirichlet-jump data `dirichlet` and conormal-jump data
    /// `neumann`.
    pub fn solve(&self, dirichlet: &Density, neumann: &Density) -> Result<DensityPair> {
        let b = Self::stack(dirichlet, neumann);
        let x = self.lu.solve(&b).ok_or(Error::SingularSystem(f64::INFINITY))?;
        let m = dirichlet.data.len();
        Ok(DensityPair {
            psi: Density { data: x.rows(0, m).into_owned() },
            phi: Density { data: x.rows(m, m).into_owned() },
        })
    }

    /// `‖A x − b‖ / ‖b‖`.
    pub fn relative_residual(&self, sol: &DensityPair, dirichlet: &Density, neumann: &Density) -> f64 {
        let b = Self::stack(dirichlet, neumann);
        let x = Self::stack(&sol.psi, &sol.phi);
        let r = &self.matrix * x - &b;
        r.norm() / b.norm().max(f64::MIN_POSITIVE)
    }
}

/// `‖A‖₁` times a power-iteration lower estimate of `‖A⁻¹‖₂`
/// (deterministic start vector).
fn estimate_condition(a: &DMatrix<f64>, lu: &LU<f64, Dyn, Dyn>) -> f64 {
    let n = a.nrows();
    let norm_a = (0..n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max);
    let mut x = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 13) as f64 / 13.0);
    x /= x.norm();
    let mut est: f64 = 0.0;
    for _ in 0..8 {
        let Some(y) = lu.solve(&x) else { return f64::INFINITY };
        let ny = y.norm();
        if !ny.is_finite() {
            return f64::INFINITY;
        }
        est = est.max(ny);
        x = y / ny;
    }
    norm_a * est
}

pub fn solve_base_with(system: &BlockSystem, field: &PolynomialField) -> Result<DensityPair> {
    let g = system.grid();
    system.solve(&field.sample(g), &field.sample_conormal(g, system.background()))
}

pub fn solve_base(problem: &TransmissionProblem) -> Result<DensityPair> {
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    solve_base_with(&system, &problem.field)
}

/// Solve on `∂D_ε`; returns the perturbed grid with the densities on it.
pub fn solve_perturbed(problem: &TransmissionProblem, h: &PerturbationField, eps: f64) -> Result<(BoundaryGrid, DensityPair)> {
    let pg = perturbed_grid_with_guard(&problem.grid, h, eps, problem.injectivity_guard)?;
    let sol = {
        let system = BlockSystem::new(&pg, problem.background, problem.inclusion)?;
        solve_base_with(&system, &problem.field)?
    };
    Ok((pg, sol))
}

/// `h ∂H/∂n` and `κh ∂H/∂ν − ∂/∂τ(h (C₀∇̂H) τ)` on the base grid, with
/// exact polynomial derivatives.
pub fn first_order_data(grid: &BoundaryGrid, field: &PolynomialField, h: &PerturbationField, pair: LamePair) -> (Density, Density) {
    let hv = sample_h(grid, h);
    let hp = sample_h_prime(grid, h);
    let d = Density::from_fn(grid.n, |i| hv[i] * field.grad(grid.points[i]) * grid.normal[i]);
    let nn = Density::from_fn(grid.n, |i| {
        let x = grid.points[i];
        let (nv, tv, kap) = (grid.normal[i], grid.tangent[i], grid.curvature[i]);
        let g = field.grad(x);
        let s = stress(&g, pair);
        let hs = field.hessian(x);
        let dg = Mat2::from_fn(|a, b| hs[a][b][0] * tv.x + hs[a][b][1] * tv.y);
        // ∂τ((Cε)τ) = (C ∂τε)τ + κ (Cε) n
        let d_st = stress(&dg, pair) * tv + kap * (s * nv);
        kap * hv[i] * (s * nv) - (hp[i] * (s * tv) + hv[i] * d_st)
    });
    (d, nn)
}

pub fn solve_first_order_with(
    system: &BlockSystem,
    field: &PolynomialField,
    h: &PerturbationField,
    base: &DensityPair,
) -> Result<DensityPair> {
    let g = system.grid();
    let (d0, n0) = first_order_data(g, field, h, system.background());
    let s1e = assemble_s1_with(&system.exterior, h, Side::Plus);
    let s1i = assemble_s1_with(&system.interior, h, Side::Minus);
    let k1e = assemble_k1_with(&system.exterior, h)?;
    let k1i = assemble_k1_with(&system.interior, h)?;
    let d = &d0 - &(&s1i.apply(&base.psi) - &s1e.apply(&base.phi));
    let n = &n0 - &(&k1i.apply(&base.psi) - &k1e.apply(&base.phi));
    system.solve(&d, &n)
}

pub fn solve_first_order(problem: &TransmissionProblem, h: &PerturbationField, base: &DensityPair) -> Result<DensityPair> {
    let system = BlockSystem::new(&problem.grid, problem.background, problem.inclusion)?;
    solve_first_order_with(&system, &problem.field, h, base)
}

/// `φ⁽¹⁾ − κhφ + ∂/∂τ(h⟨φ,τ⟩n + (λ₀/(2μ₀+λ₀)) h⟨φ,n⟩τ)`; annihilates rigid
/// motions when `(φ, φ⁽¹⁾)` come from the base and first-order solves.
pub fn corrector_structure_density(
    grid: &BoundaryGrid,
    pair: LamePair,
    h: &PerturbationField,
    phi: &Density,
    phi1: &Density,
) -> Density {
    let hv = sample_h(grid, h);
    let c = pair.lambda / (2.0 * pair.mu + pair.lambda);
    let inner: Vec<Vec2> = (0..grid.n)
        .map(|i| {
            let (p, n, t) = (phi.at(i), grid.normal[i], grid.tangent[i]);
            hv[i] * (p.dot(&t) * n + c * p.dot(&n) * t)
        })
        .collect();
    let d = tangential_derivative_vec(grid, &inner);
    Density::from_fn(grid.n, |i| phi1.at(i) - grid.curvature[i] * hv[i] * phi.at(i) + d[i])
}
