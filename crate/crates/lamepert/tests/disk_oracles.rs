//! Closed-form checks on disks.
//!
//! For a unit-disk inclusion and linear background data the transmission
//! problem is solved by hand with complex potentials (the plane-strain
//! Kolosov constant of the 2D Lamé system is `κ = (λ+3μ)/(λ+μ)`):
//!
//! * dilatation `H = x`: `u − H = B x/|x|²` outside with
//!   `B = (λ₀+μ₀−λ₁−μ₁)/(λ₁+μ₁+μ₀)`, giving the exterior density
//!   `φ = −2B(λ₀+2μ₀) n` and `∫H·φ = −4π(λ₀+2μ₀)B`;
//! * shear `H = (x₁, −x₂)`: exterior potentials `φ(z) = a/z`,
//!   `ψ(z) = −2μ₀z + a/z³` with `a = 2μ₀(μ₀−μ₁)/(μ₀+μ₁κ₀)`, giving
//!   `φ = −a(1+κ₀)(cos θ, −sin θ)` and `∫H·φ = −2πa(1+κ₀)`.
//!
//! The two modes are orthogonal, so `m¹_{(1,0),(1,0),1}` is the average of
//! the two sums divided by two. Degree-one sums scale with the area, so a
//! disk of radius `1+ε` multiplies them by `(1+ε)²`.

use std::f64::consts::PI;

use lamepert::emt::{emt_first_order_exterior_form_with, emt_first_order_with, emt_sum_perturbed, emt_sum_with, EmtTable};
use lamepert::geometry::{perturbed_grid, sample_grid, Curve, PerturbationField, Vec2};
use lamepert::kernels::LamePair;
use lamepert::potentials::{assemble_kstar, assemble_single, eval_off_boundary, Density, Potential};
use lamepert::solver::{solve_base_with, BlockSystem, PolyTerm, PolynomialField, TransmissionProblem};

fn pair(l: f64, m: f64) -> LamePair {
    LamePair::new(l, m).unwrap()
}

fn dilatation() -> PolynomialField {
    PolynomialField::new(vec![
        PolyTerm { coeff: 1.0, alpha: [1, 0], j: 1 },
        PolyTerm { coeff: 1.0, alpha: [0, 1], j: 2 },
    ])
    .unwrap()
}

fn sigma_dilatation(bg: LamePair, inc: LamePair) -> f64 {
    let b = (bg.lambda + bg.mu - inc.lambda - inc.mu) / (inc.lambda + inc.mu + bg.mu);
    -4.0 * PI * (bg.lambda + 2.0 * bg.mu) * b
}

fn sigma_shear(bg: LamePair, inc: LamePair) -> f64 {
    let kappa = (bg.lambda + 3.0 * bg.mu) / (bg.lambda + bg.mu);
    let a = 2.0 * bg.mu * (bg.mu - inc.mu) / (bg.mu + inc.mu * kappa);
    -2.0 * PI * a * (1.0 + kappa)
}

const CONTRASTS: [((f64, f64), (f64, f64)); 4] = [
    ((1.0, 1.0), (3.0, 3.0)),
    ((1.0, 1.0), (3.0, 2.0)),
    ((2.0, 0.5), (0.5, 0.25)),
    ((-0.3, 1.0), (1.0, 4.0)),
];

#[test]
fn disk_moment_sums_match_closed_form() {
    let g = sample_grid(&Curve::circle(1.0), 128).unwrap();
    for ((l0, m0), (l1, m1)) in CONTRASTS {
        let (bg, inc) = (pair(l0, m0), pair(l1, m1));
        let sys = BlockSystem::new(&g, bg, inc).unwrap();
        let shear = PolynomialField::linear_shear();
        let dil = dilatation();
        let s = emt_sum_with(&sys, &shear, &shear).unwrap();
        let d = emt_sum_with(&sys, &dil, &dil).unwrap();
        let cross = emt_sum_with(&sys, &shear, &dil).unwrap();
        assert!((s - sigma_shear(bg, inc)).abs() < 1e-10, "shear {s} vs {}", sigma_shear(bg, inc));
        assert!((d - sigma_dilatation(bg, inc)).abs() < 1e-10, "dilatation {d} vs {}", sigma_dilatation(bg, inc));
        assert!(cross.abs() < 1e-10);
    }
}

#[test]
fn disk_entry_and_refinement() {
    let (bg, inc) = (pair(1.0, 1.0), pair(3.0, 3.0));
    // ¼(48π/7 + 24π/7)
    let exact = 18.0 * PI / 7.0;
    assert!((exact - 0.25 * (sigma_dilatation(bg, inc) + sigma_shear(bg, inc))).abs() < 1e-14);
    let mut values = Vec::new();
    for n in [128, 256, 512] {
        let g = sample_grid(&Curve::circle(1.0), n).unwrap();
        let sys = BlockSystem::new(&g, bg, inc).unwrap();
        let t = EmtTable::build(&sys, 1).unwrap();
        values.push(t.get([1, 0], [1, 0], 1, 1).unwrap());
    }
    for v in &values {
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
    }
    // Converged at the coarsest level: successive differences stay at round-off.
    assert!((values[1] - values[0]).abs() < 1e-11 && (values[2] - values[1]).abs() < 1e-11);
}

#[test]
fn expanded_disk_scales_with_area() {
    let (bg, inc) = (pair(1.0, 1.0), pair(3.0, 2.0));
    let g = sample_grid(&Curve::circle(1.0), 128).unwrap();
    let p = TransmissionProblem::new(g.clone(), bg, inc, PolynomialField::linear_shear()).unwrap();
    let sys = BlockSystem::new(&g, bg, inc).unwrap();
    let f = PolynomialField::linear_shear();
    let h = PerturbationField::constant(1.0);
    let s0 = sigma_shear(bg, inc);
    for eps in [0.1, 0.05, -0.05] {
        let se = emt_sum_perturbed(&p, &f, &h, eps).unwrap();
        assert!((se - (1.0 + eps).powi(2) * s0).abs() < 1e-9, "{eps}: {se}");
        // Direct oracle: the radius-(1+ε) disk sampled from scratch.
        let direct = sample_grid(&Curve::circle(1.0 + eps), 128).unwrap();
        let ds = BlockSystem::new(&direct, bg, inc).unwrap();
        assert!((emt_sum_with(&ds, &p.field, &f).unwrap() - se).abs() < 1e-9);
    }
    // d/dε (1+ε)² Σ at ε = 0.
    let a = emt_first_order_with(&sys, &p.field, &f, &h).unwrap();
    let b = emt_first_order_exterior_form_with(&sys, &p.field, &f, &h).unwrap();
    assert!((a - 2.0 * s0).abs() < 1e-9, "{a} vs {}", 2.0 * s0);
    assert!((b - 2.0 * s0).abs() < 1e-9);
}

#[test]
fn expanded_circle_operators_match_direct_sampling() {
    let p = pair(1.5, 0.7);
    let base = sample_grid(&Curve::circle(1.0), 64).unwrap();
    let eps = 0.1;
    let pg = perturbed_grid(&base, &PerturbationField::constant(1.0), eps).unwrap();
    let direct = sample_grid(&Curve::circle(1.0 + eps), 64).unwrap();
    for i in 0..base.n {
        assert!((pg.points[i] - direct.points[i]).norm() < 1e-14);
        assert!((pg.curvature[i] + 1.0 / (1.0 + eps)).abs() < 1e-12);
    }
    let d1 = (assemble_kstar(&pg, p).unwrap().mat - assemble_kstar(&direct, p).unwrap().mat).amax();
    let d2 = (assemble_single(&pg, p).unwrap().mat - assemble_single(&direct, p).unwrap().mat).amax();
    assert!(d1 < 1e-12 && d2 < 1e-12, "{d1} {d2}");
}

#[test]
fn single_layer_at_centre_of_expanded_circle() {
    // S[c](0) = A R log R c − (B R/2) c on the circle of radius R.
    let p = pair(0.8, 1.3);
    let kc = p.kelvin();
    let base = sample_grid(&Curve::circle(1.0), 64).unwrap();
    let c = Vec2::new(0.3, -1.1);
    for eps in [0.2, 0.1, -0.1] {
        let g = perturbed_grid(&base, &PerturbationField::constant(1.0), eps).unwrap();
        let r = 1.0 + eps;
        let v = eval_off_boundary(&g, &Density::from_fn(g.n, |_| c), p, &[Vec2::zeros()], Potential::Single)
            .unwrap()
            .values()[0];
        let want = (kc.a * r * r.ln() - 0.5 * kc.b * r) * c;
        assert!((v - want).norm() < 1e-13, "{eps}: {v:?} vs {want:?}");
    }
}

#[test]
fn disk_exterior_density_has_closed_form() {
    let (bg, inc) = (pair(1.0, 1.0), pair(3.0, 2.0));
    let g = sample_grid(&Curve::circle(1.0), 64).unwrap();
    let sys = BlockSystem::new(&g, bg, inc).unwrap();
    let d = solve_base_with(&sys, &dilatation()).unwrap();
    let b = (bg.lambda + bg.mu - inc.lambda - inc.mu) / (inc.lambda + inc.mu + bg.mu);
    for i in 0..g.n {
        let want = -2.0 * b * (bg.lambda + 2.0 * bg.mu) * g.normal[i];
        assert!((d.phi.at(i) - want).norm() < 1e-11);
    }
}
