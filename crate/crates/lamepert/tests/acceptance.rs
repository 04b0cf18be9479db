//! Acceptance suite: one PASS/FAIL line per criterion. Every tolerance is
//! pinned below; the process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use lamepert::emt::{
    emt_densities, emt_first_order_exterior_form_with, emt_first_order_with, emt_sum_perturbed, emt_sum_with, multi_indices,
    EmtTable,
};
use lamepert::fields::{boundary_traces_with, eval_u1, interface_residuals, traction_displacement_gap};
use lamepert::geometry::{sample_grid, BoundaryGrid, Curve, PerturbationField, Vec2};
use lamepert::kernels::{contract_last, grad_gamma, kelvin_gamma, kernel_kt, kernel_p, kernel_q, LamePair, Mat2};
use lamepert::potentials::{Density, LayerOps, RigidMotionBasis, Side};
use lamepert::solver::{
    corrector_structure_density, solve_base_with, solve_first_order_with, solve_perturbed, BlockSystem, PolynomialField,
    TransmissionProblem,
};
use lamepert::sweep::{
    displacement_sweep, emt_sweeps, far_field_decay, operator_pullback_sweeps, ring, traction_sweeps, Sweep,
};
use lamepert::tensors::check_s_equals_m;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NODES: usize = 256;
const EPS: [f64; 4] = [0.08, 0.04, 0.02, 0.01];
const RING_RADIUS: f64 = 3.0;
const RING_POINTS: usize = 12;
const S_CURVE_RADIUS: f64 = 3.0;
/// Bound on `ε max|κh|`; the kite with `h = cos 2t` reaches 0.795 at ε = 0.08.
const INJECTIVITY_GUARD: f64 = 0.9;

const SLOPE_BAND: (f64, f64) = (1.9, 2.1);
const SLOPE_MIN: f64 = 1.9;
const TIME_LIMIT: Duration = Duration::from_secs(60);
const EMT_FORM_TOL: f64 = 1e-6;
const JUMP_TOL: f64 = 1e-10;
const INTERFACE_TOL: f64 = 1e-7;
/// The identities are algebraic consequences of the discrete transmission
/// conditions, so refinement only adds round-off amplified by spectral
/// differentiation; below this floor no further decay is required.
const INTERFACE_ROUNDOFF_FLOOR: f64 = 1e-9;
const TENSOR_TOL: f64 = 1e-12;
const TENSOR_TIME_LIMIT: Duration = Duration::from_secs(1);
const KERNEL_IDENTITY_TOL: f64 = 1e-13;
const GRAD_GAMMA_FD_TOL: f64 = 1e-8;
const TRIVIAL_TOL: f64 = 1e-9;
const MOMENT_TOL: f64 = 1e-8;
const DECAY_MAX_EXPONENT: f64 = -0.9;
const FAR_RADII: [f64; 3] = [10.0, 20.0, 40.0];

type Check = Result<(bool, String), String>;

fn pair(l: f64, m: f64) -> LamePair {
    LamePair::new(l, m).expect("valid Lamé pair")
}

fn background() -> LamePair {
    pair(1.0, 1.0)
}

fn inclusion() -> LamePair {
    pair(3.0, 2.0)
}

fn kite_grid(n: usize) -> BoundaryGrid {
    sample_grid(&Curve::kite(), n).expect("kite grid")
}

fn kite_problem(inc: LamePair) -> TransmissionProblem {
    TransmissionProblem::new(kite_grid(NODES), background(), inc, PolynomialField::linear_shear())
        .and_then(|p| p.with_injectivity_guard(INJECTIVITY_GUARD))
        .expect("kite problem")
}

fn perturbation() -> PerturbationField {
    PerturbationField::cosine(2, 1.0)
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn describe(s: &Sweep) -> String {
    let r: Vec<String> = s.points.iter().map(|p| format!("{:.2e}", p.remainder)).collect();
    format!("{} slope={:.3} r=[{}]", s.check, s.fit.slope, r.join(", "))
}

fn in_band(x: f64, band: (f64, f64)) -> bool {
    x >= band.0 && x <= band.1
}

fn timed(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("time={:.1}s (limit {}s)", t.as_secs_f64(), limit.as_secs()))
}

fn smooth_density(n: usize) -> Density {
    Density::from_fn(n, |i| {
        let t = 2.0 * PI * i as f64 / n as f64;
        Vec2::new(t.cos() + 0.4 * (2.0 * t).sin() - 0.2, 0.7 * (3.0 * t).cos() + 0.1 * t.sin())
    })
}

fn c1_displacement() -> Check {
    let start = Instant::now();
    let p = kite_problem(inclusion());
    let s = displacement_sweep(&p, &perturbation(), &EPS, &ring(RING_RADIUS, RING_POINTS)).map_err(e)?;
    let (ok_t, tmsg) = timed(TIME_LIMIT, start);
    Ok((in_band(s.fit.slope, SLOPE_BAND) && ok_t, format!("{} band=[{}, {}] {tmsg}", describe(&s), SLOPE_BAND.0, SLOPE_BAND.1)))
}

fn c2_operators() -> Check {
    let start = Instant::now();
    let p = kite_problem(inclusion());
    let sys = BlockSystem::new(&p.grid, p.background, p.inclusion).map_err(e)?;
    let base = solve_base_with(&sys, &p.field).map_err(e)?;
    let mut ok = true;
    let mut msg = Vec::new();
    for (label, pr, dens) in [("exterior", p.background, &base.phi), ("interior", p.inclusion, &base.psi)] {
        let (k, s) = operator_pullback_sweeps(&p.grid, pr, &perturbation(), dens, &EPS, INJECTIVITY_GUARD).map_err(e)?;
        ok &= k.fit.slope >= SLOPE_MIN && s.fit.slope >= SLOPE_MIN;
        msg.push(format!("{label}: {}; {}", describe(&k), describe(&s)));
    }
    let (ok_t, tmsg) = timed(TIME_LIMIT, start);
    Ok((ok && ok_t, format!("{} min={SLOPE_MIN} {tmsg}", msg.join(" | "))))
}

fn c3_traction() -> Check {
    let start = Instant::now();
    let p = kite_problem(inclusion());
    let [nominal, flipped] =
        traction_sweeps(&p, &perturbation(), &EPS, &Curve::circle(S_CURVE_RADIUS), &PolynomialField::linear_shear()).map_err(e)?;
    let (ok_t, tmsg) = timed(TIME_LIMIT, start);
    Ok((
        nominal.fit.slope >= SLOPE_MIN && ok_t,
        format!("{}; {} min={SLOPE_MIN} {tmsg}", describe(&nominal), describe(&flipped)),
    ))
}

fn c4_emt() -> Check {
    let start = Instant::now();
    let p = kite_problem(inclusion());
    let f = PolynomialField::linear_shear();
    let h = perturbation();
    let [nominal, flipped] = emt_sweeps(&p, &f, &h, &EPS).map_err(e)?;
    let sys = BlockSystem::new(&p.grid, p.background, p.inclusion).map_err(e)?;
    let a = emt_first_order_with(&sys, &p.field, &f, &h).map_err(e)?;
    let b = emt_first_order_exterior_form_with(&sys, &p.field, &f, &h).map_err(e)?;
    let gap = (a - b).abs();
    let (ok_t, tmsg) = timed(TIME_LIMIT, start);
    Ok((
        nominal.fit.slope >= SLOPE_MIN && gap <= EMT_FORM_TOL && ok_t,
        format!(
            "{}; {} min={SLOPE_MIN}; forms interior={a:.10} exterior={b:.10} gap={gap:.2e} (tol {EMT_FORM_TOL:e}) {tmsg}",
            describe(&nominal),
            describe(&flipped)
        ),
    ))
}

fn c5_jumps() -> Check {
    let mut worst: f64 = 0.0;
    for (curve, pr) in [(Curve::kite(), background()), (Curve::ellipse(1.0, 0.5), pair(0.5, 2.0))] {
        let g = sample_grid(&curve, NODES).map_err(e)?;
        let ops = LayerOps::new(&g, pr).map_err(e)?;
        let kc = pr.kelvin();
        let phi = smooth_density(g.n);
        let cj = (ops.conormal(Side::Plus) - ops.conormal(Side::Minus)) * &phi.data;
        let dj = (ops.dsharp_trace(Side::Plus) - ops.dsharp_trace(Side::Minus)) * &phi.data;
        for i in 0..g.n {
            let (p, n) = (phi.at(i), g.normal[i]);
            let want_d = -p / pr.mu + 2.0 * kc.b * n.dot(&p) * n;
            let c = Vec2::new(cj[2 * i], cj[2 * i + 1]);
            let d = Vec2::new(dj[2 * i], dj[2 * i + 1]);
            worst = worst.max((c - p).amax()).max((d - want_d).amax());
        }
    }
    Ok((worst <= JUMP_TOL, format!("max node residual={worst:.2e} (tol {JUMP_TOL:e})")))
}

fn c6_interface() -> Check {
    let mut res = Vec::new();
    let mut msg = Vec::new();
    for n in [NODES, 2 * NODES] {
        let g = kite_grid(n);
        let sys = BlockSystem::new(&g, background(), inclusion()).map_err(e)?;
        let f = PolynomialField::linear_shear();
        let s = solve_base_with(&sys, &f).map_err(e)?;
        let ext = boundary_traces_with(&sys, &f, &s, Side::Plus);
        let int = boundary_traces_with(&sys, &f, &s, Side::Minus);
        let r = interface_residuals(&g, background(), inclusion(), &ext, &int).map_err(e)?;
        let id = r.identity1.max(r.identity2).max(r.identity3);
        msg.push(format!("N={n}: id1={:.2e} id2={:.2e} id3={:.2e}", r.identity1, r.identity2, r.identity3));
        res.push(id);
    }
    let decays = res[1] < res[0] || res[1] <= INTERFACE_ROUNDOFF_FLOOR;
    Ok((res[0] <= INTERFACE_TOL && decays, format!("{} (tol {INTERFACE_TOL:e} at N={NODES}, round-off floor {INTERFACE_ROUNDOFF_FLOOR:e})", msg.join("; "))))
}

fn c7_tensors() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 100 {
        let bg = pair(rng.gen_range(-0.5..5.0), rng.gen_range(0.6..5.0));
        let inc = pair(rng.gen_range(-0.5..5.0), rng.gen_range(0.6..5.0));
        if (bg.lambda - inc.lambda) * (bg.mu - inc.mu) < 0.0 {
            continue;
        }
        worst = worst.max(check_s_equals_m(bg, inc));
        count += 1;
    }
    let (ok_t, tmsg) = timed(TENSOR_TIME_LIMIT, start);
    Ok((
        worst <= TENSOR_TOL && ok_t,
        format!("max bilinear gap={worst:.2e} over {count} pairs (tol {TENSOR_TOL:e}) {tmsg}"),
    ))
}

fn c8_kernels() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let unit = |a: f64| Vec2::new(a.cos(), a.sin());
    let mut id: f64 = 0.0;
    let mut fd: f64 = 0.0;
    for _ in 0..100 {
        let p = pair(rng.gen_range(-0.5..5.0), rng.gen_range(0.6..5.0));
        let z = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if z.norm() < 0.2 {
            continue;
        }
        let n = unit(rng.gen_range(0.0..2.0 * PI));
        let kt = kernel_kt(z, n, p).map_err(e)?;
        let lp: Mat2 = p.lambda * kernel_p(z, n, p).map_err(e)? + p.mu * kernel_q(z, n, p).map_err(e)?;
        id = id.max((kt - lp).amax() / kt.amax().max(1.0));
        let v = unit(rng.gen_range(0.0..2.0 * PI));
        let d = 1e-6;
        let num = (kelvin_gamma(z + d * v, p).map_err(e)? - kelvin_gamma(z - d * v, p).map_err(e)?) / (2.0 * d);
        fd = fd.max((num - contract_last(&grad_gamma(z, p).map_err(e)?, v)).amax());
    }
    Ok((
        id <= KERNEL_IDENTITY_TOL && fd <= GRAD_GAMMA_FD_TOL,
        format!("λP+μQ−Kᵀ={id:.2e} (tol {KERNEL_IDENTITY_TOL:e}); ∇Γ vs central diff={fd:.2e} (tol {GRAD_GAMMA_FD_TOL:e})"),
    ))
}

/// `∇(x₁³ − 3x₁x₂²)`: a gradient of a harmonic function, hence divergence
/// free and harmonic, so it solves the Lamé system for every pair.
fn quadratic_lame_field() -> PolynomialField {
    use lamepert::solver::PolyTerm;
    PolynomialField::new(vec![
        PolyTerm { coeff: 3.0, alpha: [2, 0], j: 1 },
        PolyTerm { coeff: -3.0, alpha: [0, 2], j: 1 },
        PolyTerm { coeff: -6.0, alpha: [1, 1], j: 2 },
    ])
    .expect("valid polynomial")
}

/// Matched constants on a moderately curved ellipse; the kite's first-order
/// density is reported alongside since its second-derivative data only
/// reaches the round-off floor at N ≈ 384.
fn c9_trivial() -> Check {
    let bg = background();
    let h = perturbation();
    let kite_phi1 = {
        let g = kite_grid(NODES);
        let sys = BlockSystem::new(&g, bg, bg).map_err(e)?;
        let f = PolynomialField::linear_shear();
        let base = solve_base_with(&sys, &f).map_err(e)?;
        solve_first_order_with(&sys, &f, &h, &base).map_err(e)?.phi.max_abs()
    };
    let grid = sample_grid(&Curve::ellipse(1.0, 0.6), NODES).map_err(e)?;
    let p = TransmissionProblem::new(grid, bg, bg, PolynomialField::linear_shear()).map_err(e)?;
    let f = PolynomialField::linear_shear();
    let sys = BlockSystem::new(&p.grid, bg, bg).map_err(e)?;
    let base = solve_base_with(&sys, &p.field).map_err(e)?;
    let first = solve_first_order_with(&sys, &p.field, &h, &base).map_err(e)?;
    let mut worst = [("phi", base.phi.max_abs()), ("phi1", first.phi.max_abs())].to_vec();
    let pts = ring(RING_RADIUS, RING_POINTS);
    let u1 = eval_u1(&p, &h, &base, &first, &pts).map_err(e)?;
    worst.push(("u1", u1.values.iter().map(|v| v.amax()).fold(0.0, f64::max)));
    let (_, pe) = solve_perturbed(&p, &h, EPS[1]).map_err(e)?;
    worst.push(("phi_eps", pe.phi.max_abs()));
    worst.push(("emt_sum", emt_sum_with(&sys, &p.field, &f).map_err(e)?.abs()));
    worst.push(("emt_sum_perturbed", emt_sum_perturbed(&p, &f, &h, EPS[1]).map_err(e)?.abs()));
    worst.push(("emt_first_order", emt_first_order_with(&sys, &p.field, &f, &h).map_err(e)?.abs()));
    worst.push(("emt_exterior_form", emt_first_order_exterior_form_with(&sys, &p.field, &f, &h).map_err(e)?.abs()));
    // Degree-one monomials solve the Lamé system; higher monomials do not, so
    // the cap-2 table is checked through contractions with a quadratic
    // Lamé field.
    let table = EmtTable::build(&sys, 1).map_err(e)?;
    worst.push(("emt_table", table.entries.values().fold(0.0, |a, v| a.max(v.abs()))));
    let table2 = EmtTable::build(&sys, 2).map_err(e)?;
    let q = quadratic_lame_field();
    let c = table2.contract(&q, &q).map_err(e)?.abs().max(table2.contract(&q, &f).map_err(e)?.abs());
    worst.push(("emt_table_quadratic", c));
    let (lhs, rhs) = traction_displacement_gap(&p, &h, EPS[1], &Curve::circle(S_CURVE_RADIUS), &f).map_err(e)?;
    worst.push(("traction", lhs.abs().max(rhs.abs())));
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let (name, _) = worst.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    Ok((
        max <= TRIVIAL_TOL,
        format!(
            "ellipse: max over {} entry points={max:.2e} at {name} (tol {TRIVIAL_TOL:e}); kite φ⁽¹⁾={kite_phi1:.2e} (informational)",
            worst.len()
        ),
    ))
}

fn c10_hygiene() -> Check {
    let p = kite_problem(inclusion());
    let h = perturbation();
    let sys = BlockSystem::new(&p.grid, p.background, p.inclusion).map_err(e)?;
    let rb = RigidMotionBasis::new(&p.grid);
    let moments = |d: &Density| rb.moments(&p.grid, d).iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let base = solve_base_with(&sys, &p.field).map_err(e)?;
    let first = solve_first_order_with(&sys, &p.field, &h, &base).map_err(e)?;
    let m_phi = moments(&base.phi);
    let mut m_g: f64 = 0.0;
    for alpha in multi_indices(1) {
        for j in 1..=2 {
            m_g = m_g.max(moments(&emt_densities(&sys, alpha, j).map_err(e)?.phi));
        }
    }
    let comb = corrector_structure_density(&p.grid, p.background, &h, &base.phi, &first.phi);
    let m_c = moments(&comb);
    let decay = far_field_decay(&p, &FAR_RADII, RING_POINTS).map_err(e)?;
    let ok = m_phi.max(m_g).max(m_c) <= MOMENT_TOL && decay.fit.slope <= DECAY_MAX_EXPONENT;
    Ok((
        ok,
        format!(
            "moments φ={m_phi:.2e} g={m_g:.2e} corrector={m_c:.2e} (tol {MOMENT_TOL:e}); far-field exponent={:.3} (max {DECAY_MAX_EXPONENT})",
            decay.fit.slope
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("displacement expansion", c1_displacement),
        ("operator expansions", c2_operators),
        ("traction-displacement identity", c3_traction),
        ("moment tensor perturbation", c4_emt),
        ("jump relations", c5_jumps),
        ("interface identities", c6_interface),
        ("tensor equivalence", c7_tensors),
        ("kernel consistency", c8_kernels),
        ("trivial contrast", c9_trivial),
        ("solvability hygiene", c10_hygiene),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail} [{:.2}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
