//! Closed-form kernels of 2D isotropic elastostatics.
//!
//! Arguments are `z = x − y`; normals are always supplied by the caller.
//! Third-order arrays use the layout `t[i][j][k] = ∂_k Γ_ij`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub type Mat2 = Matrix2<f64>;

/// `t[i][j][k]`, last index is the derivative direction.
pub type Ten3 = [[[f64; 2]; 2]; 2];

const ORIGIN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LamePair {
    pub lambda: f64,
    pub mu: f64,
}

impl LamePair {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        let p = LamePair { lambda, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !(self.lambda + self.mu > 0.0) {
            return Err(Error::InvalidLame(format!(
                "need mu > 0 and lambda + mu > 0, got ({}, {})",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }

    pub fn kelvin(&self) -> KelvinConstants {
        KelvinConstants::from_pair(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelvinConstants {
    pub a: f64,
    pub b: f64,
}

impl KelvinConstants {
    pub fn from_pair(p: LamePair) -> Self {
        let inv_mu = 1.0 / p.mu;
        let inv_p = 1.0 / (2.0 * p.mu + p.lambda);
        KelvinConstants {
            a: 0.5 * (inv_mu + inv_p),
            b: 0.5 * (inv_mu - inv_p),
        }
    }
}

#[inline]
fn check_origin(z: Vec2) -> Result<f64> {
    let r2 = z.norm_squared();
    if r2.sqrt() < ORIGIN_TOL {
        return Err(Error::OriginEvaluation(r2.sqrt()));
    }
    Ok(r2)
}

#[inline]
pub(crate) fn outer(a: Vec2, b: Vec2) -> Mat2 {
    a * b.transpose()
}

/// Kelvin matrix `Γ(z) = (A/2π) log|z| I − (B/2π) z⊗z/|z|²`.
pub fn kelvin_gamma(z: Vec2, pair: LamePair) -> Result<Mat2> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    Ok(k.a / (2.0 * PI) * 0.5 * r2.ln() * Mat2::identity() - k.b / (2.0 * PI) * outer(z, z) / r2)
}

/// `∇Γ(z)`.
pub fn grad_gamma(z: Vec2, pair: LamePair) -> Result<Ten3> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    let (ca, cb) = (k.a / (2.0 * PI), k.b / (2.0 * PI));
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let mut t = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for kk in 0..2 {
                t[i][j][kk] = ca * d(i, j) * z[kk] / r2
                    - cb * (d(i, kk) * z[j] + z[i] * d(j, kk)) / r2
                    + 2.0 * cb * z[i] * z[j] * z[kk] / (r2 * r2);
            }
        }
    }
    Ok(t)
}

/// `Σ_k t[i][j][k] v_k`.
pub fn contract_last(t: &Ten3, v: Vec2) -> Mat2 {
    Mat2::from_fn(|i, j| t[i][j][0] * v.x + t[i][j][1] * v.y)
}

/// Divergence over the column index: `(∇·Γ)_j = Σ_i ∂_i Γ_ij`.
pub fn divergence(t: &Ten3) -> Vec2 {
    Vec2::new(t[0][0][0] + t[1][0][1], t[0][1][0] + t[1][1][1])
}

/// Kernel of the double-layer potential, `z = x − y`, normal at `y`.
///
/// `K(z) = λ ∇_y·Γ ⊗ n + μ([∇_yΓ n]ᵀ + (∇_yΓ)ᵀ n)` with `∇_y = −∇_z`.
/// The adjoint kernel satisfies `kernel_k(−z, n)ᵀ = kernel_kt(z, n)`.
pub fn kernel_k(z: Vec2, n_y: Vec2, pair: LamePair) -> Result<Mat2> {
    let g = grad_gamma(z, pair)?;
    let div = -divergence(&g);
    let dn = -contract_last(&g, n_y);
    // (∇_yΓ)ᵀ n : entry (i, j) = Σ_k ∂_j Γ_ik n_k (with the y-sign)
    let tn = Mat2::from_fn(|i, j| -(g[i][0][j] * n_y.x + g[i][1][j] * n_y.y));
    Ok(pair.lambda * outer(div, n_y) + pair.mu * (dn.transpose() + tn))
}

/// Adjoint kernel `Kᵀ(z)` with the normal at `x`, in the closed three-term form.
pub fn kernel_kt(z: Vec2, n_x: Vec2, pair: LamePair) -> Result<Mat2> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    let c1 = (k.a - k.b) / (k.a + k.b) / (2.0 * PI);
    let c2 = 2.0 * k.b / (k.a + k.b) / PI;
    let zn = z.dot(&n_x);
    Ok(c1 * zn / r2 * Mat2::identity()
        + c1 * (outer(z, n_x) - outer(n_x, z)) / r2
        + c2 * zn / r2 * outer(z, z) / r2)
}

/// `∂Γ(x − y)/∂n(y) = Λ₁ + Λ₂ + Λ₃`.
pub fn kernel_dsharp(z: Vec2, n_y: Vec2, pair: LamePair) -> Result<Mat2> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    let zn = z.dot(&n_y);
    Ok(-k.a / (2.0 * PI) * zn / r2 * Mat2::identity() - k.b / PI * zn / (r2 * r2) * outer(z, z)
        + k.b / (2.0 * PI) * (outer(z, n_y) + outer(n_y, z)) / r2)
}

/// `P(z) = ((A−B)/2π) n⊗z/|z|²`: integrand of `(∇·S[φ]) n`.
pub fn kernel_p(z: Vec2, n_x: Vec2, pair: LamePair) -> Result<Mat2> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    Ok((k.a - k.b) / (2.0 * PI) * outer(n_x, z) / r2)
}

/// `Q(z)`: integrand of `(∇S[φ] + ∇S[φ]ᵀ) n`.
pub fn kernel_q(z: Vec2, n_x: Vec2, pair: LamePair) -> Result<Mat2> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    let c = (k.a - k.b) / (2.0 * PI);
    let zn = z.dot(&n_x);
    Ok(c * zn / r2 * Mat2::identity() + c * outer(z, n_x) / r2 - k.b / PI * outer(n_x, z) / r2
        + 2.0 * k.b / PI * zn / (r2 * r2) * outer(z, z))
}

/// Integrand of `∂D♯[φ]/∂ν` at `x`, normals at both ends.
pub fn kernel_dsharp_conormal(z: Vec2, n_x: Vec2, n_y: Vec2, pair: LamePair) -> Result<Mat2> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    let ca = (k.a - k.b) / (k.a + k.b) / (2.0 * PI);
    let cb = 2.0 * k.b / (k.a + k.b) / PI;
    let (zx, zy, nn) = (z.dot(&n_x), z.dot(&n_y), n_x.dot(&n_y));
    let r4 = r2 * r2;
    let t1 = ca * (2.0 * zy * zx / r4 - nn / r2) * Mat2::identity();
    let t2 = ca
        * (2.0 * zy / r4 * (outer(z, n_x) - outer(n_x, z))
            - (outer(n_y, n_x) - outer(n_x, n_y)) / r2);
    let t3 = cb
        * (4.0 * zy * zx / (r4 * r2) * outer(z, z)
            - nn / r4 * outer(z, z)
            - zx / r4 * (outer(z, n_y) + outer(n_y, z)));
    Ok(t1 + t2 + t3)
}

/// Integrand of `(∇∇·S[φ]·n) n`.
pub fn kernel_graddiv_nn(z: Vec2, n_x: Vec2, pair: LamePair) -> Result<Mat2> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    let zn = z.dot(&n_x);
    Ok((k.a - k.b) / (2.0 * PI) * (outer(n_x, n_x) / r2 - 2.0 * zn / (r2 * r2) * outer(n_x, z)))
}

/// `L(z)`: integrand of `∇(∇S[φ] + ∇S[φ]ᵀ) n n`.
pub fn kernel_l(z: Vec2, n_x: Vec2, pair: LamePair) -> Result<Mat2> {
    let r2 = check_origin(z)?;
    let k = pair.kelvin();
    let zn = z.dot(&n_x);
    let r4 = r2 * r2;
    let i = Mat2::identity();
    let ab = (k.a - k.b) / (2.0 * PI)
        * ((i + outer(n_x, n_x)) / r2 - 2.0 * zn * zn / r4 * i - 2.0 * zn / r4 * outer(z, n_x));
    let b1 = -k.b / PI * (outer(n_x, n_x) / r2 - 2.0 * zn / r4 * outer(n_x, z));
    let b2 = 2.0 * k.b / PI
        * (zn / r4 * (outer(z, n_x) + outer(n_x, z)) - 4.0 * zn * zn / (r4 * r2) * outer(z, z)
            + outer(z, z) / r4);
    Ok(ab + b1 + b2)
}
