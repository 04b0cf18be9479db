//! Nyström discretisation of the layer potentials on a [`BoundaryGrid`].
//!
//! Densities are stored interleaved, `[f₁(x₀), f₂(x₀), f₁(x₁), …]`.
//! Operators producing a gradient field per node use four rows per node in
//! the order `∂₁u₁, ∂₂u₁, ∂₁u₂, ∂₂u₂` (row `4i + 2a + b` is `∂_b u_a`);
//! Hessians use eight rows, `8i + 4a + 2b + c` for `∂_c∂_b u_a`.
//!
//! Singular integrals:
//! * the log part of `S` uses the spectral product rule for
//!   `log(4 sin²((t−s)/2))`;
//! * in `K*` the Cauchy part `(x−y)·τ(x)/|x−y|²` is rewritten as
//!   `∫ log|x−y| f'(s) ds` plus a smooth remainder, everything else has an
//!   explicit diagonal limit;
//! * full gradient traces of `S[φ]` are reconstructed from `S[φ]`, its
//!   tangential derivative and the conormal trace `(±½I + K*)φ`, and
//!   Hessian traces from the tangential derivative of those plus the Lamé
//!   equation. This gives `D♯`, `∂D♯/∂ν` and `∂S/∂n` with their exact jumps
//!   and no hypersingular quadrature.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{diff_matrix, refine_samples, sample_h, tangential_derivative_vec, BoundaryGrid, PerturbationField, Vec2};
use crate::kernels::{grad_gamma, kelvin_gamma, kernel_dsharp, LamePair, Mat2};

/// Trace side: `Plus` is the exterior limit, `Minus` the interior one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// A 2-vector field sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub data: DVector<f64>,
}

impl Density {
    pub fn zeros(n: usize) -> Self {
        Density { data: DVector::zeros(2 * n) }
    }

    pub fn from_fn<F: FnMut(usize) -> Vec2>(n: usize, mut f: F) -> Self {
        let mut data = DVector::zeros(2 * n);
        for i in 0..n {
            let v = f(i);
            data[2 * i] = v.x;
            data[2 * i + 1] = v.y;
        }
        Density { data }
    }

    pub fn from_vecs(v: &[Vec2]) -> Self {
        Self::from_fn(v.len(), |i| v[i])
    }

    pub fn nodes(&self) -> usize {
        self.data.len() / 2
    }

    pub fn at(&self, i: usize) -> Vec2 {
        Vec2::new(self.data[2 * i], self.data[2 * i + 1])
    }

    pub fn to_vecs(&self) -> Vec<Vec2> {
        (0..self.nodes()).map(|i| self.at(i)).collect()
    }

    /// Multiply the vector at node `i` by `f[i]`.
    pub fn scaled(&self, f: &[f64]) -> Density {
        Density::from_fn(self.nodes(), |i| f[i] * self.at(i))
    }

    /// Trigonometric interpolation onto `factor` times as many nodes.
    pub fn refined(&self, factor: usize) -> Density {
        let x: Vec<f64> = (0..self.nodes()).map(|i| self.data[2 * i]).collect();
        let y: Vec<f64> = (0..self.nodes()).map(|i| self.data[2 * i + 1]).collect();
        let (rx, ry) = (refine_samples(&x, factor), refine_samples(&y, factor));
        Density::from_fn(rx.len(), |i| Vec2::new(rx[i], ry[i]))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.amax()
    }
}

impl std::ops::Add for &Density {
    type Output = Density;
    fn add(self, o: &Density) -> Density {
        Density { data: &self.data + &o.data }
    }
}

impl std::ops::Sub for &Density {
    type Output = Density;
    fn sub(self, o: &Density) -> Density {
        Density { data: &self.data - &o.data }
    }
}

impl std::ops::Mul<&Density> for f64 {
    type Output = Density;
    fn mul(self, o: &Density) -> Density {
        Density { data: self * &o.data }
    }
}

/// `sqrt(∫|f|² dσ)` by the grid quadrature.
pub fn l2_norm(grid: &BoundaryGrid, f: &Density) -> f64 {
    (0..grid.n)
        .map(|i| grid.weight[i] * f.at(i).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `‖f‖_{L²} + ‖∂f/∂τ‖_{L²}`.
pub fn w21_norm(grid: &BoundaryGrid, f: &Density) -> f64 {
    let d = Density::from_vecs(&tangential_derivative_vec(grid, &f.to_vecs()));
    l2_norm(grid, f) + l2_norm(grid, &d)
}

/// `∫ f·g dσ`.
pub fn inner(grid: &BoundaryGrid, f: &Density, g: &Density) -> f64 {
    (0..grid.n).map(|i| grid.weight[i] * f.at(i).dot(&g.at(i))).sum()
}

/// Dense matrix acting on interleaved densities (or producing per-node
/// gradient/Hessian rows for the trace operators).
#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    pub mat: DMatrix<f64>,
    pub side: Option<Side>,
}

impl BoundaryOperator {
    pub fn new(mat: DMatrix<f64>, side: Option<Side>) -> Self {
        BoundaryOperator { mat, side }
    }

    pub fn apply(&self, f: &Density) -> Density {
        Density { data: &self.mat * &f.data }
    }
}

/// Translations and the infinitesimal rotation `(x₂, −x₁)`.
#[derive(Debug, Clone)]
pub struct RigidMotionBasis {
    pub theta: [Density; 3],
}

impl RigidMotionBasis {
    pub fn new(grid: &BoundaryGrid) -> Self {
        RigidMotionBasis {
            theta: [
                Density::from_fn(grid.n, |_| Vec2::new(1.0, 0.0)),
                Density::from_fn(grid.n, |_| Vec2::new(0.0, 1.0)),
                Density::from_fn(grid.n, |i| Vec2::new(grid.points[i].y, -grid.points[i].x)),
            ],
        }
    }

    /// `(∫ f·θ_m dσ)_{m=1,2,3}`.
    pub fn moments(&self, grid: &BoundaryGrid, f: &Density) -> [f64; 3] {
        [
            inner(grid, f, &self.theta[0]),
            inner(grid, f, &self.theta[1]),
            inner(grid, f, &self.theta[2]),
        ]
    }

    pub fn gram(&self, grid: &BoundaryGrid) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                g[a][b] = inner(grid, &self.theta[a], &self.theta[b]);
            }
        }
        g
    }
}

/// Weights `R(t_i − t_j)` of the product rule for `log(4 sin²((t−s)/2))`,
/// indexed by `(i − j) mod N`.
fn log_weights(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|d| {
            let t = 2.0 * PI * d as f64 / nf;
            let mut s = 0.0;
            for m in 1..n / 2 {
                s += (m as f64 * t).cos() / m as f64;
            }
            -4.0 * PI / nf * s - 4.0 * PI / (nf * nf) * (nf / 2.0 * t).cos()
        })
        .collect()
}

/// `L_ij` with `Σ_j L_ij f(t_j) ≈ ∫ log|X(t_i) − X(s)| f(s) ds`.
fn log_matrix(grid: &BoundaryGrid) -> DMatrix<f64> {
    let n = grid.n;
    let r = log_weights(n);
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        let d = (i + n - j) % n;
        if i == j {
            0.5 * r[0] + h * grid.speed[i].ln()
        } else {
            let z = grid.points[i] - grid.points[j];
            let s = (0.5 * (grid.t[i] - grid.t[j])).sin();
            0.5 * r[d] + h * 0.5 * (z.norm_squared() / (4.0 * s * s)).ln()
        }
    })
}

#[inline]
fn add_block(m: &mut DMatrix<f64>, i: usize, j: usize, b: &Mat2) {
    for a in 0..2 {
        for c in 0..2 {
            m[(2 * i + a, 2 * j + c)] += b[(a, c)];
        }
    }
}

/// Single layer `S[φ](x) = ∫ Γ(x−y) φ(y) dσ(y)` on the boundary.
pub fn assemble_single(grid: &BoundaryGrid, pair: LamePair) -> Result<BoundaryOperator> {
    pair.validate()?;
    let n = grid.n;
    let k = pair.kelvin();
    let lm = log_matrix(grid);
    let h = 2.0 * PI / n as f64;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let zz = if i == j {
                let t = grid.tangent[i];
                t * t.transpose()
            } else {
                let z = grid.points[i] - grid.points[j];
                z * z.transpose() / z.norm_squared()
            };
            let b = grid.speed[j]
                * (k.a / (2.0 * PI) * lm[(i, j)] * Mat2::identity() - k.b / (2.0 * PI) * h * zz);
            add_block(&mut m, i, j, &b);
        }
    }
    Ok(BoundaryOperator::new(m, None))
}

/// `K*` (principal value).
pub fn assemble_kstar(grid: &BoundaryGrid, pair: LamePair) -> Result<BoundaryOperator> {
    pair.validate()?;
    let n = grid.n;
    let k = pair.kelvin();
    let c1 = (k.a - k.b) / (k.a + k.b) / (2.0 * PI);
    let c2 = 2.0 * k.b / (k.a + k.b) / PI;
    let e = Mat2::new(0.0, 1.0, -1.0, 0.0);
    let lm = log_matrix(grid);
    let ld = &lm * diff_matrix(n);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let nx = grid.normal[i];
        let tx = grid.tangent[i];
        for j in 0..n {
            let mut b = if i == j {
                let kap = grid.curvature[i];
                -0.5 * kap * (c1 * Mat2::identity() + c2 * tx * tx.transpose()) * grid.weight[j]
            } else {
                let z = grid.points[i] - grid.points[j];
                let r2 = z.norm_squared();
                let zn = z.dot(&nx);
                let smooth = zn / r2 * (c1 * Mat2::identity() + c2 * z * z.transpose() / r2);
                let rem = z.dot(&(tx - grid.tangent[j])) / r2;
                (smooth - c1 * rem * e) * grid.weight[j]
            };
            // Cauchy part: −c1 E ∫ log|x−y| φ'(s) ds
            b -= c1 * ld[(i, j)] * e;
            add_block(&mut m, i, j, &b);
        }
    }
    Ok(BoundaryOperator::new(m, None))
}

/// Conormal trace `∂S[φ]/∂ν|± = (±½I + K*)φ`.
pub fn assemble_conormal_trace(grid: &BoundaryGrid, pair: LamePair, side: Side) -> Result<BoundaryOperator> {
    let mut k = assemble_kstar(grid, pair)?.mat;
    for i in 0..2 * grid.n {
        k[(i, i)] += 0.5 * side.sign();
    }
    Ok(BoundaryOperator::new(k, Some(side)))
}

/// `∂/∂τ` applied to every component of a node-major row stack.
fn dtau_rows(grid: &BoundaryGrid, dm: &DMatrix<f64>, m: &DMatrix<f64>, comps: usize) -> DMatrix<f64> {
    let n = grid.n;
    let cols = m.ncols();
    let mut out = DMatrix::zeros(m.nrows(), cols);
    for c in 0..comps {
        let sub = DMatrix::from_fn(n, cols, |i, j| m[(comps * i + c, j)]);
        let d = dm * sub;
        for i in 0..n {
            let inv = 1.0 / grid.speed[i];
            for j in 0..cols {
                out[(comps * i + c, j)] = d[(i, j)] * inv;
            }
        }
    }
    out
}

/// Cached operators of one Lamé pair on one grid, with the derived traces.
#[derive(Debug, Clone)]
pub struct LayerOps<'g> {
    pub grid: &'g BoundaryGrid,
    pub pair: LamePair,
    pub single: DMatrix<f64>,
    pub kstar: DMatrix<f64>,
    dm: DMatrix<f64>,
    dtau_single: DMatrix<f64>,
}

impl<'g> LayerOps<'g> {
    pub fn new(grid: &'g BoundaryGrid, pair: LamePair) -> Result<Self> {
        let single = assemble_single(grid, pair)?.mat;
        let kstar = assemble_kstar(grid, pair)?.mat;
        let dm = diff_matrix(grid.n);
        let dtau_single = dtau_rows(grid, &dm, &single, 2);
        Ok(LayerOps {
            grid,
            pair,
            single,
            kstar,
            dm,
            dtau_single,
        })
    }

    pub fn conormal(&self, side: Side) -> DMatrix<f64> {
        let mut k = self.kstar.clone();
        for i in 0..2 * self.grid.n {
            k[(i, i)] += 0.5 * side.sign();
        }
        k
    }

    /// Spectral `∂/∂τ` of a node-major stack with `comps` rows per node.
    pub fn dtau(&self, m: &DMatrix<f64>, comps: usize) -> DMatrix<f64> {
        dtau_rows(self.grid, &self.dm, m, comps)
    }

    /// `∇S[φ]|±`, 4 rows per node.
    pub fn grad_trace(&self, side: Side) -> DMatrix<f64> {
        let g = self.grid;
        let n = g.n;
        let (lam, mu) = (self.pair.lambda, self.pair.mu);
        let cn = self.conormal(side);
        let t = &self.dtau_single;
        let cols = 2 * n;
        let mut out = DMatrix::zeros(4 * n, cols);
        for i in 0..n {
            let (nv, tv) = (g.normal[i], g.tangent[i]);
            for j in 0..cols {
                let du = Vec2::new(t[(2 * i, j)], t[(2 * i + 1, j)]);
                let tr = Vec2::new(cn[(2 * i, j)], cn[(2 * i + 1, j)]);
                let an = (tr.dot(&nv) - lam * du.dot(&tv)) / (lam + 2.0 * mu);
                let at = tr.dot(&tv) / mu - du.dot(&nv);
                let a = an * nv + at * tv;
                for aa in 0..2 {
                    for b in 0..2 {
                        out[(4 * i + 2 * aa + b, j)] = a[aa] * nv[b] + du[aa] * tv[b];
                    }
                }
            }
        }
        out
    }

    /// Second derivatives of `S[φ]` on one side, 8 rows per node.
    pub fn hess_trace(&self, side: Side) -> DMatrix<f64> {
        let g = self.grid;
        let n = g.n;
        let (lam, mu) = (self.pair.lambda, self.pair.mu);
        let grad = self.grad_trace(side);
        // m[4i + 2a + b] = ∂τ ∂_b u_a
        let m = self.dtau(&grad, 4);
        let cols = 2 * n;
        let mut out = DMatrix::zeros(8 * n, cols);
        for i in 0..n {
            let (nv, tv) = (g.normal[i], g.tangent[i]);
            for j in 0..cols {
                let mm = Mat2::new(
                    m[(4 * i, j)],
                    m[(4 * i + 1, j)],
                    m[(4 * i + 2, j)],
                    m[(4 * i + 3, j)],
                );
                let u_nt = mm * nv;
                let u_tt = mm * tv;
                let hn_tt = nv.dot(&u_tt);
                let ht_nt = tv.dot(&u_nt);
                let hn_nt = nv.dot(&u_nt);
                let ht_tt = tv.dot(&u_tt);
                let hn_nn = (-mu * hn_tt - (lam + mu) * ht_nt) / (lam + 2.0 * mu);
                let ht_nn = -ht_tt - (lam + mu) / mu * (hn_nt + ht_tt);
                let u_nn = hn_nn * nv + ht_nn * tv;
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            out[(8 * i + 4 * a + 2 * b + c, j)] = u_nn[a] * nv[b] * nv[c]
                                + u_nt[a] * (nv[b] * tv[c] + tv[b] * nv[c])
                                + u_tt[a] * tv[b] * tv[c];
                        }
                    }
                }
            }
        }
        out
    }

    /// `∂S[φ]/∂n|± = ∇S[φ]|± n`.
    pub fn normal_derivative_trace(&self, side: Side) -> DMatrix<f64> {
        let grad = self.grad_trace(side);
        contract_grad_rows(self.grid, &grad, |i| self.grid.normal[i])
    }

    /// `D♯[φ]|±`, using `D♯[φ] = −Σ_l ∂_l S[n_l φ]`.
    pub fn dsharp_trace(&self, side: Side) -> DMatrix<f64> {
        let g = self.grid;
        let n = g.n;
        let grad = self.grad_trace(side);
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for a in 0..2 {
                for j in 0..n {
                    for c in 0..2 {
                        let col = 2 * j + c;
                        let v: f64 = (0..2)
                            .map(|l| grad[(4 * i + 2 * a + l, col)] * g.normal[j][l])
                            .sum();
                        out[(2 * i + a, col)] = -v;
                    }
                }
            }
        }
        out
    }

    /// `∇D♯[φ]|±`, 4 rows per node.
    pub fn dsharp_grad_trace(&self, side: Side) -> DMatrix<f64> {
        let g = self.grid;
        let n = g.n;
        let hess = self.hess_trace(side);
        let mut out = DMatrix::zeros(4 * n, 2 * n);
        for i in 0..n {
            for a in 0..2 {
                for b in 0..2 {
                    for j in 0..n {
                        for c in 0..2 {
                            let col = 2 * j + c;
                            let v: f64 = (0..2)
                                .map(|l| hess[(8 * i + 4 * a + 2 * l + b, col)] * g.normal[j][l])
                                .sum();
                            out[(4 * i + 2 * a + b, col)] = -v;
                        }
                    }
                }
            }
        }
        out
    }

    /// `∂D♯[φ]/∂ν|±`.
    pub fn dsharp_conormal_trace(&self, side: Side) -> DMatrix<f64> {
        conormal_of_grad_rows(self.grid, self.pair, &self.dsharp_grad_trace(side))
    }

    /// `(C∇̂S[φ]|±) τ`.
    pub fn stress_tangent_trace(&self, side: Side) -> DMatrix<f64> {
        stress_of_grad_rows(self.grid, self.pair, &self.grad_trace(side), |i| self.grid.tangent[i])
    }
}

/// `Σ_b W_ab v_b` per node from 4-row gradient stacks.
pub(crate) fn contract_grad_rows<F: Fn(usize) -> Vec2>(grid: &BoundaryGrid, w: &DMatrix<f64>, v: F) -> DMatrix<f64> {
    let n = grid.n;
    let cols = w.ncols();
    let mut out = DMatrix::zeros(2 * n, cols);
    for i in 0..n {
        let vi = v(i);
        for a in 0..2 {
            for j in 0..cols {
                out[(2 * i + a, j)] = w[(4 * i + 2 * a, j)] * vi.x + w[(4 * i + 2 * a + 1, j)] * vi.y;
            }
        }
    }
    out
}

/// `λ tr(W) v + μ (W + Wᵀ) v` per node.
pub(crate) fn stress_of_grad_rows<F: Fn(usize) -> Vec2>(
    grid: &BoundaryGrid,
    pair: LamePair,
    w: &DMatrix<f64>,
    v: F,
) -> DMatrix<f64> {
    let n = grid.n;
    let cols = w.ncols();
    let mut out = DMatrix::zeros(2 * n, cols);
    for i in 0..n {
        let vi = v(i);
        for j in 0..cols {
            let m = Mat2::new(
                w[(4 * i, j)],
                w[(4 * i + 1, j)],
                w[(4 * i + 2, j)],
                w[(4 * i + 3, j)],
            );
            let s = pair.lambda * m.trace() * vi + pair.mu * (m + m.transpose()) * vi;
            out[(2 * i, j)] = s.x;
            out[(2 * i + 1, j)] = s.y;
        }
    }
    out
}

pub(crate) fn conormal_of_grad_rows(grid: &BoundaryGrid, pair: LamePair, w: &DMatrix<f64>) -> DMatrix<f64> {
    stress_of_grad_rows(grid, pair, w, |i| grid.normal[i])
}

/// Multiply rows of node `i` (with `comps` rows per node) by `f[i]`.
pub(crate) fn scale_rows(m: &DMatrix<f64>, f: &[f64], comps: usize) -> DMatrix<f64> {
    let mut out = m.clone();
    for (r, mut row) in out.row_iter_mut().enumerate() {
        row *= f[r / comps];
    }
    out
}

/// Multiply the two columns of node `j` by `f[j]`.
pub(crate) fn scale_cols(m: &DMatrix<f64>, f: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (c, mut col) in out.column_iter_mut().enumerate() {
        col *= f[c / 2];
    }
    out
}

/// `D♯|±` as an operator.
pub fn assemble_dsharp_trace(grid: &BoundaryGrid, pair: LamePair, side: Side) -> Result<BoundaryOperator> {
    let ops = LayerOps::new(grid, pair)?;
    Ok(BoundaryOperator::new(ops.dsharp_trace(side), Some(side)))
}

/// `∂S/∂n|±` as an operator.
pub fn assemble_s_normal_trace(grid: &BoundaryGrid, pair: LamePair, side: Side) -> Result<BoundaryOperator> {
    let ops = LayerOps::new(grid, pair)?;
    Ok(BoundaryOperator::new(ops.normal_derivative_trace(side), Some(side)))
}

/// Which potential [`eval_off_boundary`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    Single,
    DSharp,
    GradSingle,
}

#[derive(Debug, Clone)]
pub enum OffBoundary {
    Values(Vec<Vec2>),
    Gradients(Vec<Mat2>),
}

impl OffBoundary {
    pub fn values(self) -> Vec<Vec2> {
        match self {
            OffBoundary::Values(v) => v,
            OffBoundary::Gradients(_) => panic!("gradient result requested as values"),
        }
    }

    pub fn gradients(self) -> Vec<Mat2> {
        match self {
            OffBoundary::Gradients(g) => g,
            OffBoundary::Values(_) => panic!("value result requested as gradients"),
        }
    }
}

/// Minimum distance from the boundary for plain-quadrature evaluation.
pub fn distance_guard(grid: &BoundaryGrid) -> f64 {
    5.0 * grid.spacing()
}

pub fn check_distance(grid: &BoundaryGrid, points: &[Vec2]) -> Result<()> {
    let req = distance_guard(grid);
    for (index, p) in points.iter().enumerate() {
        let d = grid.distance_to(*p);
        if d < req {
            return Err(Error::TooCloseToBoundary {
                index,
                distance: d,
                required: req,
            });
        }
    }
    Ok(())
}

/// Evaluate a layer potential away from the boundary by the trapezoid rule.
pub fn eval_off_boundary(
    grid: &BoundaryGrid,
    density: &Density,
    pair: LamePair,
    points: &[Vec2],
    which: Potential,
) -> Result<OffBoundary> {
    check_distance(grid, points)?;
    eval_unchecked(grid, density, pair, points, which)
}

/// As [`eval_off_boundary`] without the distance guard (for near-boundary
/// finite-difference probes in tests and diagnostics).
pub fn eval_unchecked(
    grid: &BoundaryGrid,
    density: &Density,
    pair: LamePair,
    points: &[Vec2],
    which: Potential,
) -> Result<OffBoundary> {
    match which {
        Potential::Single | Potential::DSharp => {
            let mut out = Vec::with_capacity(points.len());
            for &x in points {
                let mut acc = Vec2::zeros();
                for j in 0..grid.n {
                    let z = x - grid.points[j];
                    let k = if which == Potential::Single {
                        kelvin_gamma(z, pair)?
                    } else {
                        kernel_dsharp(z, grid.normal[j], pair)?
                    };
                    acc += grid.weight[j] * (k * density.at(j));
                }
                out.push(acc);
            }
            Ok(OffBoundary::Values(out))
        }
        Potential::GradSingle => {
            let mut out = Vec::with_capacity(points.len());
            for &x in points {
                let mut acc = Mat2::zeros();
                for j in 0..grid.n {
                    let g = grad_gamma(x - grid.points[j], pair)?;
                    let f = density.at(j) * grid.weight[j];
                    for a in 0..2 {
                        for b in 0..2 {
                            acc[(a, b)] += g[a][0][b] * f.x + g[a][1][b] * f.y;
                        }
                    }
                }
                out.push(acc);
            }
            Ok(OffBoundary::Gradients(out))
        }
    }
}

/// `S⁽¹⁾[φ] = −S[κhφ] + (h ∂S[φ]/∂n + D♯[hφ])|±`.
pub fn assemble_s1_with(ops: &LayerOps, h: &PerturbationField, side: Side) -> BoundaryOperator {
    let g = ops.grid;
    let hv = sample_h(g, h);
    let kh: Vec<f64> = hv.iter().zip(&g.curvature).map(|(a, k)| a * k).collect();
    let m = -scale_cols(&ops.single, &kh)
        + scale_rows(&ops.normal_derivative_trace(side), &hv, 2)
        + scale_cols(&ops.dsharp_trace(side), &hv);
    BoundaryOperator::new(m, Some(side))
}

pub fn assemble_s1(grid: &BoundaryGrid, h: &PerturbationField, pair: LamePair, side: Side) -> Result<BoundaryOperator> {
    let ops = LayerOps::new(grid, pair)?;
    Ok(assemble_s1_with(&ops, h, side))
}

/// One-sided form of
/// `K⁽¹⁾[φ] = κh ∂S[φ]/∂ν − ∂S[κhφ]/∂ν + ∂D♯[hφ]/∂ν − ∂τ(h (C∇̂S[φ]) τ)`.
pub fn assemble_k1_side(ops: &LayerOps, h: &PerturbationField, side: Side) -> BoundaryOperator {
    let g = ops.grid;
    let hv = sample_h(g, h);
    let kh: Vec<f64> = hv.iter().zip(&g.curvature).map(|(a, k)| a * k).collect();
    let cn = ops.conormal(side);
    let stress = scale_rows(&ops.stress_tangent_trace(side), &hv, 2);
    let m = scale_rows(&cn, &kh, 2) - scale_cols(&cn, &kh)
        + scale_cols(&ops.dsharp_conormal_trace(side), &hv)
        - ops.dtau(&stress, 2);
    BoundaryOperator::new(m, Some(side))
}

/// Smooth probe densities used to compare one-sided assemblies.
fn probes(grid: &BoundaryGrid) -> Vec<Density> {
    let mut out = Vec::new();
    for k in 0..=6 {
        for c in 0..2 {
            for phase in [0.0, 0.5 * PI] {
                if k == 0 && phase != 0.0 {
                    continue;
                }
                out.push(Density::from_fn(grid.n, |i| {
                    let v = (k as f64 * grid.t[i] + phase).cos();
                    if c == 0 {
                        Vec2::new(v, 0.0)
                    } else {
                        Vec2::new(0.0, v)
                    }
                }));
            }
        }
    }
    out
}

/// Max over smooth probes of `‖(A⁺ − A⁻)p‖_∞ / ‖p‖_∞`.
pub fn side_mismatch(grid: &BoundaryGrid, plus: &BoundaryOperator, minus: &BoundaryOperator) -> f64 {
    probes(grid)
        .iter()
        .map(|p| (&plus.apply(p) - &minus.apply(p)).max_abs() / p.max_abs())
        .fold(0.0, f64::max)
}

/// Relative tolerance for the plus/minus agreement of `K⁽¹⁾`.
pub const SIDE_TOL: f64 = 1e-6;

/// `K⁽¹⁾`, assembled from both sides; fails with [`Error::SideMismatch`] if
/// they disagree on smooth densities. Returns the side average.
pub fn assemble_k1_with(ops: &LayerOps, h: &PerturbationField) -> Result<BoundaryOperator> {
    let p = assemble_k1_side(ops, h, Side::Plus);
    let m = assemble_k1_side(ops, h, Side::Minus);
    let scale = probes(ops.grid)
        .iter()
        .map(|q| p.apply(q).max_abs() / q.max_abs())
        .fold(1.0, f64::max);
    let diff = side_mismatch(ops.grid, &p, &m);
    if diff > SIDE_TOL * scale {
        return Err(Error::SideMismatch(diff));
    }
    Ok(BoundaryOperator::new(0.5 * (p.mat + m.mat), None))
}

pub fn assemble_k1(grid: &BoundaryGrid, h: &PerturbationField, pair: LamePair) -> Result<BoundaryOperator> {
    let ops = LayerOps::new(grid, pair)?;
    assemble_k1_with(&ops, h)
}

/// Sup-norm of `∂D♯[φ]/∂ν|+ − ∂D♯[φ]/∂ν|− − ∂τ(⟨φ,τ⟩n + λ/(2μ+λ)⟨φ,n⟩τ)`.
pub fn dsharp_conormal_jump_check(grid: &BoundaryGrid, pair: LamePair, phi: &Density) -> Result<f64> {
    let ops = LayerOps::new(grid, pair)?;
    let lhs = Density {
        data: (ops.dsharp_conormal_trace(Side::Plus) - ops.dsharp_conormal_trace(Side::Minus)) * &phi.data,
    };
    let c = pair.lambda / (2.0 * pair.mu + pair.lambda);
    let inner: Vec<Vec2> = (0..grid.n)
        .map(|i| {
            let f = phi.at(i);
            f.dot(&grid.tangent[i]) * grid.normal[i] + c * f.dot(&grid.normal[i]) * grid.tangent[i]
        })
        .collect();
    let rhs = Density::from_vecs(&tangential_derivative_vec(grid, &inner));
    Ok((&lhs - &rhs).max_abs())
}
