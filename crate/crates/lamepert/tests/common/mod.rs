#![allow(dead_code)]

use lamepert::geometry::Vec2;
use lamepert::kernels::LamePair;

/// `μΔu + (λ+μ)∇(∇·u)` at `x` by fourth-order central differences
/// (five points per axis; mixed derivatives from products of the
/// first-derivative stencil).
pub fn lame_residual<F: Fn(&[Vec2]) -> Vec<Vec2>>(u: F, x: Vec2, step: f64, pair: LamePair) -> Vec2 {
    let d1 = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
    let d2 = [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];
    let mut pts = Vec::new();
    let mut w11 = Vec::new();
    let mut w22 = Vec::new();
    let mut w12 = Vec::new();
    for &(o, w) in &d2 {
        pts.push(x + Vec2::new(o * step, 0.0));
        w11.push(w / (step * step));
        w22.push(0.0);
        w12.push(0.0);
        pts.push(x + Vec2::new(0.0, o * step));
        w11.push(0.0);
        w22.push(w / (step * step));
        w12.push(0.0);
    }
    for &(a, wa) in &d1 {
        for &(b, wb) in &d1 {
            pts.push(x + Vec2::new(a * step, b * step));
            w11.push(0.0);
            w22.push(0.0);
            w12.push(wa * wb / (step * step));
        }
    }
    let v = u(&pts);
    let mut uxx = Vec2::zeros();
    let mut uyy = Vec2::zeros();
    let mut uxy = Vec2::zeros();
    for i in 0..pts.len() {
        uxx += w11[i] * v[i];
        uyy += w22[i] * v[i];
        uxy += w12[i] * v[i];
    }
    let lap = uxx + uyy;
    // ∇(∂₁u₁ + ∂₂u₂)
    let grad_div = Vec2::new(uxx.x + uxy.y, uxy.x + uyy.y);
    pair.mu * lap + (pair.lambda + pair.mu) * grad_div
}

pub fn trig_density(n: usize, coeffs: &[(usize, f64, f64, f64, f64)]) -> lamepert::potentials::Density {
    lamepert::potentials::Density::from_fn(n, |i| {
        let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        let mut v = Vec2::zeros();
        for &(k, a1, b1, a2, b2) in coeffs {
            let (c, s) = ((k as f64 * t).cos(), (k as f64 * t).sin());
            v += Vec2::new(a1 * c + b1 * s, a2 * c + b2 * s);
        }
        v
    })
}
