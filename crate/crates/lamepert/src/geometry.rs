//! Closed Fourier curves, boundary grids and the ε-perturbed interface.
//!
//! Sign convention: `n = R_{-π/2} τ` with `R_{-π/2}(a, b) = (b, -a)`, and the
//! curvature is `κ = ⟨X'', n⟩ / |X'|²`, so that `X'' = κ n` for unit speed.
//! With the outward normal this makes κ negative on convex arcs (the unit
//! circle has κ ≡ −1). It is the convention under which the length element
//! expands as `1 − εκh` and the normal as `n − εh'τ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Rotation by −π/2: `(a, b) ↦ (b, −a)`.
#[inline]
pub fn rot_m90(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

/// `X(t) = Σ_k cos(kt)·cos[k] + sin(kt)·sin[k]`, `t ∈ [0, 2π)`.
///
/// Index `k` of either list is the mode number, so `sin[0]` never contributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub cos: Vec<[f64; 2]>,
    pub sin: Vec<[f64; 2]>,
}

/// Point and first three parameter derivatives of a curve.
#[derive(Debug, Clone, Copy)]
pub struct CurveJet {
    pub x: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
    pub d3: Vec2,
}

impl Curve {
    pub fn new(cos: Vec<[f64; 2]>, sin: Vec<[f64; 2]>) -> Self {
        Curve { cos, sin }
    }

    pub fn circle(radius: f64) -> Self {
        Curve::new(vec![[0.0, 0.0], [radius, 0.0]], vec![[0.0, 0.0], [0.0, radius]])
    }

    /// Centred ellipse with semi-axes `a` (along x) and `b`.
    pub fn ellipse(a: f64, b: f64) -> Self {
        Curve::new(vec![[0.0, 0.0], [a, 0.0]], vec![[0.0, 0.0], [0.0, b]])
    }

    /// `X(t) = (cos t + 0.65 cos 2t − 0.65, 1.5 sin t)`.
    pub fn kite() -> Self {
        Curve::new(
            vec![[-0.65, 0.0], [1.0, 0.0], [0.65, 0.0]],
            vec![[0.0, 0.0], [0.0, 1.5]],
        )
    }

    pub fn jet(&self, t: f64) -> CurveJet {
        let mut j = CurveJet {
            x: Vec2::zeros(),
            d1: Vec2::zeros(),
            d2: Vec2::zeros(),
            d3: Vec2::zeros(),
        };
        for (k, c) in self.cos.iter().enumerate() {
            let c = Vec2::new(c[0], c[1]);
            let kf = k as f64;
            let (s, co) = (kf * t).sin_cos();
            j.x += co * c;
            j.d1 -= kf * s * c;
            j.d2 -= kf * kf * co * c;
            j.d3 += kf * kf * kf * s * c;
        }
        for (k, c) in self.sin.iter().enumerate() {
            let c = Vec2::new(c[0], c[1]);
            let kf = k as f64;
            let (s, co) = (kf * t).sin_cos();
            j.x += s * c;
            j.d1 += kf * co * c;
            j.d2 -= kf * kf * s * c;
            j.d3 -= kf * kf * kf * co * c;
        }
        j
    }

    pub fn point(&self, t: f64) -> Vec2 {
        self.jet(t).x
    }
}

/// Scalar interface displacement `h(t) = Σ_k h_cos[k] cos(kt) + h_sin[k] sin(kt)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PerturbationField {
    #[serde(default)]
    pub h_cos: Vec<f64>,
    #[serde(default)]
    pub h_sin: Vec<f64>,
}

impl PerturbationField {
    pub fn new(h_cos: Vec<f64>, h_sin: Vec<f64>) -> Self {
        PerturbationField { h_cos, h_sin }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c], vec![])
    }

    /// `h = amp·cos(kt)`.
    pub fn cosine(k: usize, amp: f64) -> Self {
        let mut h_cos = vec![0.0; k + 1];
        h_cos[k] = amp;
        Self::new(h_cos, vec![])
    }

    /// `(h, dh/dt, d²h/dt²)` in the curve parameter.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (mut h, mut h1, mut h2) = (0.0, 0.0, 0.0);
        for (k, a) in self.h_cos.iter().enumerate() {
            let kf = k as f64;
            let (s, c) = (kf * t).sin_cos();
            h += a * c;
            h1 -= a * kf * s;
            h2 -= a * kf * kf * c;
        }
        for (k, b) in self.h_sin.iter().enumerate() {
            let kf = k as f64;
            let (s, c) = (kf * t).sin_cos();
            h += b * s;
            h1 += b * kf * c;
            h2 -= b * kf * kf * s;
        }
        (h, h1, h2)
    }

    pub fn is_zero(&self) -> bool {
        self.h_cos.iter().chain(&self.h_sin).all(|v| *v == 0.0)
    }
}

/// Uniform-in-t Nyström nodes with their geometry.
#[derive(Debug, Clone)]
pub struct BoundaryGrid {
    pub n: usize,
    pub t: Vec<f64>,
    pub points: Vec<Vec2>,
    /// dX/dt, d²X/dt² at the nodes.
    pub d1: Vec<Vec2>,
    pub d2: Vec<Vec2>,
    /// d³X/dt³; only known for grids sampled from a [`Curve`].
    pub d3: Option<Vec<Vec2>>,
    pub tangent: Vec<Vec2>,
    pub normal: Vec<Vec2>,
    pub curvature: Vec<f64>,
    pub speed: Vec<f64>,
    /// `|X'|·2π/N`.
    pub weight: Vec<f64>,
}

fn check_node_count(n: usize) -> Result<()> {
    if n < 16 || n % 2 != 0 {
        return Err(Error::OddNodeCount(n));
    }
    Ok(())
}

impl BoundaryGrid {
    fn from_derivatives(
        t: Vec<f64>,
        points: Vec<Vec2>,
        d1: Vec<Vec2>,
        d2: Vec<Vec2>,
        d3: Option<Vec<Vec2>>,
    ) -> Result<Self> {
        let n = t.len();
        check_node_count(n)?;
        let h = 2.0 * PI / n as f64;
        let mut tangent = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut curvature = Vec::with_capacity(n);
        let mut speed = Vec::with_capacity(n);
        let mut weight = Vec::with_capacity(n);
        for i in 0..n {
            let s = d1[i].norm();
            if !(s >= 1e-10) {
                return Err(Error::DegenerateCurve(format!(
                    "|X'| = {s:e} at t = {:.6}",
                    t[i]
                )));
            }
            let tau = d1[i] / s;
            let nu = rot_m90(tau);
            tangent.push(tau);
            normal.push(nu);
            curvature.push(d2[i].dot(&nu) / (s * s));
            speed.push(s);
            weight.push(s * h);
        }
        let grid = BoundaryGrid {
            n,
            t,
            points,
            d1,
            d2,
            d3,
            tangent,
            normal,
            curvature,
            speed,
            weight,
        };
        let area = grid.signed_area();
        if !(area > 0.0) {
            return Err(Error::DegenerateCurve(format!(
                "curve must be anticlockwise (signed area {area:e})"
            )));
        }
        Ok(grid)
    }

    /// Enclosed signed area, `½∮(x dy − y dx)`.
    pub fn signed_area(&self) -> f64 {
        let h = 2.0 * PI / self.n as f64;
        0.5 * h
            * self
                .points
                .iter()
                .zip(&self.d1)
                .map(|(p, d)| p.x * d.y - p.y * d.x)
                .sum::<f64>()
    }

    pub fn length(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Trapezoid (spectral) quadrature of nodal samples.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weight).map(|(a, w)| a * w).sum()
    }

    pub fn max_speed(&self) -> f64 {
        self.speed.iter().cloned().fold(0.0, f64::max)
    }

    /// Minimum node-to-node spacing scale `2π/N·max|X'|`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64 * self.max_speed()
    }

    /// Distance from `p` to the nearest node, refined by projecting onto the
    /// adjacent chords.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            let a = self.points[i];
            let b = self.points[(i + 1) % self.n];
            let ab = b - a;
            let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            best = best.min((p - (a + s * ab)).norm());
        }
        best
    }

    /// Winding number of the polygon through the nodes around `p`.
    pub fn winding_number(&self, p: Vec2) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let a = self.points[i] - p;
            let b = self.points[(i + 1) % self.n] - p;
            total += (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
        }
        total / (2.0 * PI)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.winding_number(p).abs() > 0.5
    }
}

/// Sample `curve` at `t_i = 2πi/N`.
pub fn sample_grid(curve: &Curve, n: usize) -> Result<BoundaryGrid> {
    check_node_count(n)?;
    let t: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let jets: Vec<CurveJet> = t.iter().map(|&ti| curve.jet(ti)).collect();
    BoundaryGrid::from_derivatives(
        t,
        jets.iter().map(|j| j.x).collect(),
        jets.iter().map(|j| j.d1).collect(),
        jets.iter().map(|j| j.d2).collect(),
        Some(jets.iter().map(|j| j.d3).collect()),
    )
}

/// Nodes of `∂D_ε`: `x̃(t) = X(t) + εh(t)n(t)`, with tangent, normal and
/// weights from the exact derivatives of the composite parametrisation.
pub fn perturbed_grid(grid: &BoundaryGrid, h: &PerturbationField, eps: f64) -> Result<BoundaryGrid> {
    perturbed_grid_with_guard(grid, h, eps, DEFAULT_INJECTIVITY_GUARD)
}

/// Default bound on `ε max|κh|`.
pub const DEFAULT_INJECTIVITY_GUARD: f64 = 0.5;

/// As [`perturbed_grid`] with an explicit bound on `ε max|κh|`. The bound
/// must lie in `(0, 1)`: at 1 the perturbed curve develops a cusp.
pub fn perturbed_grid_with_guard(grid: &BoundaryGrid, h: &PerturbationField, eps: f64, guard: f64) -> Result<BoundaryGrid> {
    if !(guard > 0.0 && guard < 1.0) {
        return Err(Error::InvalidParameter(format!("injectivity guard {guard} must lie in (0, 1)")));
    }
    if eps == 0.0 {
        return Ok(grid.clone());
    }
    let d3 = grid.d3.as_ref().ok_or_else(|| {
        Error::DegenerateCurve("perturbation needs a grid sampled from a curve".into())
    })?;
    let hv: Vec<(f64, f64, f64)> = grid.t.iter().map(|&t| h.eval(t)).collect();
    let risk = hv
        .iter()
        .zip(&grid.curvature)
        .map(|((hh, _, _), k)| (eps * k * hh).abs())
        .fold(0.0, f64::max);
    if !(risk < guard) {
        return Err(Error::SelfIntersectionRisk { risk, guard });
    }
    let n = grid.n;
    let mut points = Vec::with_capacity(n);
    let mut e1 = Vec::with_capacity(n);
    let mut e2 = Vec::with_capacity(n);
    for i in 0..n {
        let (x1, x2, x3) = (grid.d1[i], grid.d2[i], d3[i]);
        let s = grid.speed[i];
        let tau = grid.tangent[i];
        let nu = grid.normal[i];
        // c = ⟨X'', R X'⟩ = s³κ
        let c = x2.x * x1.y - x2.y * x1.x;
        let c1 = x3.x * x1.y - x3.y * x1.x;
        let s1 = x1.dot(&x2) / s;
        let sk = c / (s * s);
        let sk1 = c1 / (s * s) - 2.0 * c * s1 / (s * s * s);
        // dn/dt = −sκ τ, dτ/dt = sκ n
        let n1 = -sk * tau;
        let n2 = -sk1 * tau - sk * sk * nu;
        let (hh, h1, h2) = hv[i];
        points.push(grid.points[i] + eps * hh * nu);
        e1.push(x1 + eps * (h1 * nu + hh * n1));
        e2.push(x2 + eps * (h2 * nu + 2.0 * h1 * n1 + hh * n2));
    }
    BoundaryGrid::from_derivatives(grid.t.clone(), points, e1, e2, None)
}

/// First-order coefficients of `n(x̃) = n₀ + εn₁ + O(ε²)` and
/// `dσ_ε = (σ₀ + εσ₁) dσ + O(ε²)`.
#[derive(Debug, Clone)]
pub struct GeometryExpansion {
    pub n0: Vec<Vec2>,
    pub n1: Vec<Vec2>,
    pub sigma0: Vec<f64>,
    pub sigma1: Vec<f64>,
}

pub fn geometry_expansion(grid: &BoundaryGrid, h: &PerturbationField) -> GeometryExpansion {
    let mut n1 = Vec::with_capacity(grid.n);
    let mut sigma1 = Vec::with_capacity(grid.n);
    for i in 0..grid.n {
        let (hh, ht, _) = h.eval(grid.t[i]);
        let hs = ht / grid.speed[i];
        n1.push(-hs * grid.tangent[i]);
        sigma1.push(-grid.curvature[i] * hh);
    }
    GeometryExpansion {
        n0: grid.normal.clone(),
        n1,
        sigma0: vec![1.0; grid.n],
        sigma1,
    }
}

/// `h(t_i)` at the nodes.
pub fn sample_h(grid: &BoundaryGrid, h: &PerturbationField) -> Vec<f64> {
    grid.t.iter().map(|&t| h.eval(t).0).collect()
}

/// Arclength derivative `h'` at the nodes.
pub fn sample_h_prime(grid: &BoundaryGrid, h: &PerturbationField) -> Vec<f64> {
    grid.t
        .iter()
        .zip(&grid.speed)
        .map(|(&t, s)| h.eval(t).1 / s)
        .collect()
}

fn cot_table(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for (d, v) in c.iter_mut().enumerate().skip(1) {
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        *v = 0.5 * sign / (PI * d as f64 / n as f64).tan();
    }
    c
}

/// Fourier differentiation matrix `d/dt` on N equispaced nodes (N even).
pub fn diff_matrix(n: usize) -> DMatrix<f64> {
    let c = cot_table(n);
    DMatrix::from_fn(n, n, |i, j| c[(i + n - j) % n])
}

/// Spectral `d/dt` of periodic samples.
pub fn spectral_dt(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let c = cot_table(n);
    (0..n)
        .map(|i| (0..n).map(|j| c[(i + n - j) % n] * f[j]).sum())
        .collect()
}

/// `∂f/∂τ = (1/|X'|) df/dt` for scalar samples.
pub fn tangential_derivative(grid: &BoundaryGrid, f: &[f64]) -> Vec<f64> {
    spectral_dt(f)
        .into_iter()
        .zip(&grid.speed)
        .map(|(d, s)| d / s)
        .collect()
}

/// `∂/∂τ` applied componentwise to vector samples.
pub fn tangential_derivative_vec(grid: &BoundaryGrid, f: &[Vec2]) -> Vec<Vec2> {
    let x: Vec<f64> = f.iter().map(|v| v.x).collect();
    let y: Vec<f64> = f.iter().map(|v| v.y).collect();
    let dx = tangential_derivative(grid, &x);
    let dy = tangential_derivative(grid, &y);
    dx.into_iter().zip(dy).map(|(a, b)| Vec2::new(a, b)).collect()
}

/// Trigonometric interpolant of N equispaced periodic samples (N even).
#[derive(Debug, Clone)]
pub struct TrigSeries {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TrigSeries {
    pub fn new(f: &[f64]) -> Self {
        let n = f.len();
        let half = n / 2;
        let mut a = vec![0.0; half + 1];
        let mut b = vec![0.0; half + 1];
        for (j, &v) in f.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / n as f64;
            for k in 0..=half {
                a[k] += v * (k as f64 * t).cos();
                b[k] += v * (k as f64 * t).sin();
            }
        }
        for k in 0..=half {
            let w = if k == 0 || k == half { 1.0 } else { 2.0 };
            a[k] *= w / n as f64;
            b[k] *= w / n as f64;
        }
        b[half] = 0.0;
        TrigSeries { a, b }
    }

    /// `d^m f/dt^m` at `t`.
    pub fn eval(&self, t: f64, m: u32) -> f64 {
        let mut s = 0.0;
        for k in 0..self.a.len() {
            let kf = k as f64;
            let (c, sn) = ((kf * t).cos(), (kf * t).sin());
            // derivative m of (a cos + b sin) rotates by m quarter turns
            let (dc, ds) = match m % 4 {
                0 => (c, sn),
                1 => (-sn, c),
                2 => (-c, -sn),
                _ => (sn, -c),
            };
            s += kf.powi(m as i32) * (self.a[k] * dc + self.b[k] * ds);
        }
        s
    }
}

/// Upsampled copy of a grid: geometry from the trigonometric interpolant of
/// the nodes, so it is exact to spectral accuracy for smooth curves.
pub fn refine_grid(grid: &BoundaryGrid, factor: usize) -> Result<BoundaryGrid> {
    let m = grid.n * factor;
    check_node_count(m)?;
    let xs = TrigSeries::new(&grid.points.iter().map(|p| p.x).collect::<Vec<_>>());
    let ys = TrigSeries::new(&grid.points.iter().map(|p| p.y).collect::<Vec<_>>());
    let t: Vec<f64> = (0..m).map(|i| 2.0 * PI * i as f64 / m as f64).collect();
    let at = |k: u32| -> Vec<Vec2> { t.iter().map(|&s| Vec2::new(xs.eval(s, k), ys.eval(s, k))).collect() };
    let (p, d1, d2, d3) = (at(0), at(1), at(2), at(3));
    BoundaryGrid::from_derivatives(t, p, d1, d2, Some(d3))
}

/// Trigonometric interpolation of periodic samples to `factor` times as
/// many nodes.
pub fn refine_samples(f: &[f64], factor: usize) -> Vec<f64> {
    let ts = TrigSeries::new(f);
    let m = f.len() * factor;
    (0..m).map(|i| ts.eval(2.0 * PI * i as f64 / m as f64, 0)).collect()
}
