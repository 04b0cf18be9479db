mod common;

use common::lame_residual;
use lamepert::fields::{eval_u, eval_u1, Region};
use lamepert::geometry::{refine_grid, sample_grid, Curve, PerturbationField, Vec2};
use lamepert::kernels::LamePair;
use lamepert::potentials::{eval_unchecked, Potential};
use lamepert::solver::{solve_base, solve_first_order, PolynomialField, TransmissionProblem};
use lamepert::sweep::{fit_loglog, ring};
use lamepert::Error;

fn pair(l: f64, m: f64) -> LamePair {
    LamePair::new(l, m).unwrap()
}

fn ellipse_problem(n: usize) -> TransmissionProblem {
    let g = sample_grid(&Curve::ellipse(1.0, 0.6), n).unwrap();
    TransmissionProblem::new(g, pair(1.0, 1.0), pair(3.0, 2.0), PolynomialField::linear_shear()).unwrap()
}

#[test]
fn displacement_solves_lame_on_both_sides() {
    let p = ellipse_problem(128);
    let d = solve_base(&p).unwrap();
    let u = |pts: &[Vec2]| eval_u(&p, &d, pts).unwrap().values;
    for (x, region) in [
        (Vec2::new(0.1, 0.05), Region::Interior),
        (Vec2::new(-0.2, -0.1), Region::Interior),
        (Vec2::new(2.0, 0.5), Region::Exterior),
        (Vec2::new(-0.5, 1.8), Region::Exterior),
    ] {
        assert_eq!(eval_u(&p, &d, &[x]).unwrap().regions[0], region);
        let pr = if region == Region::Interior { p.inclusion } else { p.background };
        let r = lame_residual(u, x, 1e-2, pr);
        assert!(r.norm() < 1e-6, "{x:?}: {r:?}");
    }
}

#[test]
fn displacement_and_traction_are_continuous_across_the_interface() {
    // Degree-5 extrapolation of each one-sided field to the boundary from
    // probes at k·δ, k = 1..6, on a 16× refined copy of the grid.
    let p = ellipse_problem(256);
    let d = solve_base(&p).unwrap();
    let delta = 0.005;
    let rf = 16;
    let fine = refine_grid(&p.grid, rf).unwrap();
    let (phi, psi) = (d.phi.refined(rf), d.psi.refined(rf));
    let m = 6;
    // Lagrange weights for the value at 0 from samples at 1, …, m.
    let w: Vec<f64> = (1..=m)
        .map(|k| {
            (1..=m).filter(|&j| j != k).map(|j| j as f64 / (j as f64 - k as f64)).product()
        })
        .collect();
    let idx: Vec<usize> = (0..p.grid.n).step_by(8).collect();
    let mut worst_u: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for &i in &idx {
        let (x, n) = (p.grid.points[i], p.grid.normal[i]);
        let mut ue = Vec2::zeros();
        let mut ui = Vec2::zeros();
        let mut te = Vec2::zeros();
        let mut ti = Vec2::zeros();
        for (k, w) in w.iter().enumerate() {
            let s = (k + 1) as f64 * delta;
            let xe = x + s * n;
            let xi = x - s * n;
            let ve = eval_unchecked(&fine, &phi, p.background, &[xe], Potential::Single).unwrap().values()[0] + p.field.value(xe);
            let vi = eval_unchecked(&fine, &psi, p.inclusion, &[xi], Potential::Single).unwrap().values()[0];
            let ge = eval_unchecked(&fine, &phi, p.background, &[xe], Potential::GradSingle).unwrap().gradients()[0]
                + p.field.grad(xe);
            let gi = eval_unchecked(&fine, &psi, p.inclusion, &[xi], Potential::GradSingle).unwrap().gradients()[0];
            ue += *w * ve;
            ui += *w * vi;
            te += *w * (lamepert::solver::stress(&ge, p.background) * n);
            ti += *w * (lamepert::solver::stress(&gi, p.inclusion) * n);
        }
        worst_u = worst_u.max((ue - ui).amax());
        worst_t = worst_t.max((te - ti).amax());
    }
    assert!(worst_u < 1e-6, "displacement {worst_u}");
    assert!(worst_t < 1e-6, "traction {worst_t}");
}

#[test]
fn corrector_vanishes_for_zero_perturbation_and_matched_constants() {
    let p = ellipse_problem(128);
    let base = solve_base(&p).unwrap();
    let zero = PerturbationField::zero();
    let first = solve_first_order(&p, &zero, &base).unwrap();
    let pts = vec![Vec2::new(2.0, 0.0), Vec2::new(0.0, -1.5), Vec2::new(0.1, 0.1)];
    for v in eval_u1(&p, &zero, &base, &first, &pts).unwrap().values {
        assert!(v.amax() < 1e-12);
    }

    let bg = p.background;
    let matched = TransmissionProblem::new(p.grid.clone(), bg, bg, p.field.clone()).unwrap();
    let h = PerturbationField::cosine(2, 1.0);
    let base = solve_base(&matched).unwrap();
    let first = solve_first_order(&matched, &h, &base).unwrap();
    let ev = eval_u1(&matched, &h, &base, &first, &ring(3.0, 12)).unwrap();
    for v in ev.values {
        assert!(v.amax() < 1e-9);
    }
}

#[test]
fn corrector_decays_in_the_far_field() {
    let g = sample_grid(&Curve::kite(), 256).unwrap();
    let p = TransmissionProblem::new(g, pair(1.0, 1.0), pair(3.0, 2.0), PolynomialField::linear_shear()).unwrap();
    let h = PerturbationField::cosine(2, 1.0);
    let base = solve_base(&p).unwrap();
    let first = solve_first_order(&p, &h, &base).unwrap();
    let radii = [10.0, 20.0, 40.0];
    let mags: Vec<f64> = radii
        .iter()
        .map(|&r| {
            eval_u1(&p, &h, &base, &first, &ring(r, 12))
                .unwrap()
                .values
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let fit = fit_loglog(&radii, &mags).unwrap();
    assert!(fit.slope <= -0.9, "{fit:?}");
}

#[test]
fn evaluation_is_deterministic_and_guarded() {
    let p = ellipse_problem(64);
    let d = solve_base(&p).unwrap();
    let pts = ring(2.5, 7);
    let a = eval_u(&p, &d, &pts).unwrap();
    let b = eval_u(&p, &d, &pts).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.gradients, b.gradients);
    let near = Vec2::new(1.0 + 1e-3, 0.0);
    assert!(matches!(eval_u(&p, &d, &[near]), Err(Error::TooCloseToBoundary { .. })));
}
