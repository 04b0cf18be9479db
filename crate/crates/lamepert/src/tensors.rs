//! Isotropic-in-a-frame 4-tensors built from `I`, `τ⊗τ`, `n⊗n` and the
//! symmetric identity `𝕀`, acting on symmetric strains.
//!
//! A term `c (L ⊗ R)` maps `E` to `c ⟨E, R⟩ L`, with `⟨E, I⟩ = tr E` and
//! `⟨E, u⊗u⟩ = ⟨E u, u⟩`; the identity coefficient `b` maps `E` to `b E`, so
//! the stiffness tensor `λ I⊗I + 2μ𝕀` has `b = 2μ`.
//!
//! Careful: the contrast shorthands below reuse Greek letters (`tau_c`,
//! `lam_s`, `mu_s`) that have nothing to do with the tangent or the Lamé
//! constants.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kernels::{LamePair, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dyad {
    I,
    TT,
    NN,
}

impl Dyad {
    fn matrix(self, n: Vec2, t: Vec2) -> Mat2 {
        match self {
            Dyad::I => Mat2::identity(),
            Dyad::TT => t * t.transpose(),
            Dyad::NN => n * n.transpose(),
        }
    }

    fn pair(self, e: &Mat2, n: Vec2, t: Vec2) -> f64 {
        match self {
            Dyad::I => e.trace(),
            Dyad::TT => t.dot(&(e * t)),
            Dyad::NN => n.dot(&(e * n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoTensor4 {
    pub terms: Vec<(f64, Dyad, Dyad)>,
    pub identity: f64,
}

/// Tolerance for the symmetry precondition of [`IsoTensor4::apply`].
pub const SYMMETRY_TOL: f64 = 1e-10;

impl IsoTensor4 {
    pub fn zero() -> Self {
        IsoTensor4 {
            terms: Vec::new(),
            identity: 0.0,
        }
    }

    pub fn apply(&self, strain: &Mat2, n: Vec2, t: Vec2) -> Result<Mat2> {
        let asym = (strain[(0, 1)] - strain[(1, 0)]).abs();
        if asym > SYMMETRY_TOL * strain.amax().max(1.0) {
            return Err(Error::AsymmetricStrain(asym));
        }
        Ok(self.apply_unchecked(strain, n, t))
    }

    pub(crate) fn apply_unchecked(&self, e: &Mat2, n: Vec2, t: Vec2) -> Mat2 {
        let mut out = self.identity * e;
        for &(c, l, r) in &self.terms {
            out += c * r.pair(e, n, t) * l.matrix(n, t);
        }
        out
    }

    /// `(T E) : G`.
    pub fn bilinear(&self, e: &Mat2, g: &Mat2, n: Vec2, t: Vec2) -> Result<f64> {
        Ok(self.apply(e, n, t)?.component_mul(g).sum())
    }

    /// Coefficients merged per dyad pair, in a fixed order
    /// `[identity, (I,I), (I,TT), (I,NN), (TT,I), …]`.
    pub fn canonical(&self) -> [f64; 10] {
        let all = [Dyad::I, Dyad::TT, Dyad::NN];
        let mut out = [0.0; 10];
        out[0] = self.identity;
        for &(c, l, r) in &self.terms {
            let li = all.iter().position(|d| *d == l).unwrap();
            let ri = all.iter().position(|d| *d == r).unwrap();
            out[1 + 3 * li + ri] += c;
        }
        out
    }

    pub fn sub(&self, o: &IsoTensor4) -> IsoTensor4 {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().map(|&(c, l, r)| (-c, l, r)));
        IsoTensor4 {
            terms,
            identity: self.identity - o.identity,
        }
    }
}

/// `C = λ I⊗I + 2μ𝕀`.
pub fn build_c(p: LamePair) -> IsoTensor4 {
    IsoTensor4 {
        terms: vec![(p.lambda, Dyad::I, Dyad::I)],
        identity: 2.0 * p.mu,
    }
}

/// `𝕄_{l,k}`: maps the strain on side `l` to the tangential stress on
/// side `k`'s terms.
pub fn build_m(l: LamePair, k: LamePair) -> IsoTensor4 {
    let (ll, ml, lk, mk) = (l.lambda, l.mu, k.lambda, k.mu);
    IsoTensor4 {
        terms: vec![
            (ll * (lk + 2.0 * mk) / (ll + 2.0 * ml), Dyad::I, Dyad::I),
            (4.0 * (ml - mk) * (ll + ml) / (ll + 2.0 * ml), Dyad::I, Dyad::TT),
        ],
        identity: 2.0 * mk,
    }
}

/// `𝕂_{l,k}`: gives the jump of `∇u n` from the strain on side `l`.
pub fn build_k(l: LamePair, k: LamePair) -> IsoTensor4 {
    let (ll, ml, lk, mk) = (l.lambda, l.mu, k.lambda, k.mu);
    let d = ml * (ll + 2.0 * ml);
    IsoTensor4 {
        terms: vec![
            ((ml * (lk - ll) + 2.0 * (ml - mk) * (ll + ml)) / d, Dyad::I, Dyad::I),
            (2.0 * (mk - ml) * (ll + ml) / d, Dyad::I, Dyad::TT),
        ],
        identity: 2.0 * (mk / ml - 1.0),
    }
}

/// Scalar shorthands of the exterior first-order tensor, for background
/// `(λ₀, μ₀)` and inclusion `(λ₁, μ₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastCoefficients {
    pub eta: f64,
    pub delta: f64,
    pub rho: f64,
    pub tau_c: f64,
    pub varrho: f64,
    pub p: f64,
    pub q: f64,
    pub lam_s: f64,
    pub mu_s: f64,
}

impl ContrastCoefficients {
    pub fn new(bg: LamePair, inc: LamePair) -> Self {
        let (l0, m0, l1, m1) = (bg.lambda, bg.mu, inc.lambda, inc.mu);
        let eta = 2.0 * (l1 * m0 - l0 * m1) / (l1 + 2.0 * m1);
        let delta = 4.0 * (m1 - m0) * (l1 + m1) / (l1 + 2.0 * m1);
        ContrastCoefficients {
            eta,
            delta,
            rho: ((l1 - l0) * m1 - 2.0 * (m1 - m0) * (l1 + m1)) / (m1 * (l1 + 2.0 * m1)),
            tau_c: 2.0 * (1.0 - m0 / m1),
            varrho: 2.0 * (m1 - m0) * (l1 + m1) / (m1 * (l1 + 2.0 * m1)),
            p: l1 * (l0 + 2.0 * m0) / (l1 + 2.0 * m1),
            q: delta,
            lam_s: (l1 - l0 + m1 - m0) / (2.0 * (l1 + m1)) - (m1 - m0) / (2.0 * m1),
            mu_s: (m1 - m0) / (2.0 * m1),
        }
    }
}

/// `𝕊`, the exterior-trace form of the first-order tensor.
pub fn build_s(bg: LamePair, inc: LamePair) -> IsoTensor4 {
    let c = ContrastCoefficients::new(bg, inc);
    let (l0, m0) = (bg.lambda, bg.mu);
    IsoTensor4 {
        terms: vec![
            (l0 * (c.rho + c.tau_c), Dyad::I, Dyad::I),
            (l0 * c.varrho - l0 * c.tau_c + 2.0 * m0 * c.varrho - m0 * c.tau_c, Dyad::I, Dyad::TT),
            (c.eta, Dyad::TT, Dyad::I),
            (c.delta - 2.0 * m0 * c.varrho, Dyad::TT, Dyad::TT),
            (2.0 * m0 * c.rho + m0 * c.tau_c, Dyad::NN, Dyad::I),
        ],
        identity: m0 * c.tau_c,
    }
}

/// The same tensor written through the moment-tensor shorthands `p, q, λ, μ`.
pub fn build_m_ly(bg: LamePair, inc: LamePair) -> IsoTensor4 {
    let c = ContrastCoefficients::new(bg, inc);
    let (l0, m0) = (bg.lambda, bg.mu);
    let (lam, mu) = (c.lam_s, c.mu_s);
    IsoTensor4 {
        terms: vec![
            (lam * (c.p + l0 + 2.0 * m0) + 2.0 * mu * c.p - c.eta, Dyad::I, Dyad::I),
            (lam * c.q, Dyad::I, Dyad::TT),
            (c.eta, Dyad::TT, Dyad::I),
            (2.0 * mu * c.q, Dyad::TT, Dyad::TT),
            (2.0 * mu * l0 + c.eta - 2.0 * mu * c.p, Dyad::NN, Dyad::I),
        ],
        identity: 4.0 * mu * m0,
    }
}

/// Closed-form coefficients of the common value of [`build_s`] and
/// [`build_m_ly`].
pub fn build_closed_form(bg: LamePair, inc: LamePair) -> IsoTensor4 {
    let (l0, m0, l1, m1) = (bg.lambda, bg.mu, inc.lambda, inc.mu);
    let d = l1 + 2.0 * m1;
    IsoTensor4 {
        terms: vec![
            ((l0 * (l1 - l0) + 2.0 * l0 * (m1 - m0)) / d, Dyad::I, Dyad::I),
            (2.0 * (1.0 - m0 / m1) * (m0 * l1 - m1 * l0) / d, Dyad::I, Dyad::TT),
            (2.0 * (l1 * m0 - l0 * m1) / d, Dyad::TT, Dyad::I),
            (4.0 * (1.0 - m0 / m1) * (m1 - m0) * (l1 + m1) / d, Dyad::TT, Dyad::TT),
            (2.0 * (m0 / m1) * ((l1 - l0) * m1 - (m1 - m0) * l1) / d, Dyad::NN, Dyad::I),
        ],
        identity: 2.0 * m0 * (m1 - m0) / m1,
    }
}

/// Max difference of `𝕊` and the moment-tensor form applied to a basis of
/// symmetric matrices in the frame `n = e₁`, `τ = e₂` (also covers the
/// closed form).
pub fn check_s_equals_m(bg: LamePair, inc: LamePair) -> f64 {
    let s = build_s(bg, inc);
    let m = build_m_ly(bg, inc);
    let f = build_closed_form(bg, inc);
    let n = Vec2::new(1.0, 0.0);
    let t = Vec2::new(0.0, 1.0);
    let basis = [
        Mat2::new(1.0, 0.0, 0.0, 0.0),
        Mat2::new(0.0, 0.0, 0.0, 1.0),
        Mat2::new(0.0, 1.0, 1.0, 0.0),
    ];
    let mut worst: f64 = 0.0;
    for e in &basis {
        let a = s.apply_unchecked(e, n, t);
        let b = m.apply_unchecked(e, n, t);
        let c = f.apply_unchecked(e, n, t);
        worst = worst.max((a - b).amax()).max((a - c).amax());
    }
    worst
}
