//! Experiment execution and report assembly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lamepert::emt::{emt_first_order_exterior_form_with, emt_first_order_with, emt_sum_with, EmtTable};
use lamepert::fields::{boundary_traces_with, eval_u, interface_residuals};
use lamepert::potentials::{l2_norm, Side};
use lamepert::solver::{solve_base_with, solve_perturbed, BlockSystem, PolynomialField};
use lamepert::sweep::{
    density_pullback_sweep, displacement_sweep, emt_sweeps, far_field_decay, operator_pullback_sweeps, traction_sweeps, Sweep,
    SweepPoint,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Kind, Prepared};
use crate::error::{CliError, Result};

pub const RESULTS_CSV: &str = "results.csv";
pub const REPORT_JSON: &str = "report.json";
pub const EMT_TABLE_CSV: &str = "emt_table.csv";

/// One line of the results CSV. Empty cells mean "not applicable"; a row
/// with an empty `pass` is informational and never gates the exit code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub check: String,
    pub epsilon: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    pub remainder: Option<f64>,
    pub slope: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Gate {
    /// Slope must lie in the configured band.
    Band,
    /// Slope must reach the lower end of the band.
    Min,
    Info,
    /// Not reported at all.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub check: String,
    pub slope: f64,
    /// Slope refitted without the largest ε (needs at least three ε).
    pub slope_without_largest: Option<f64>,
    pub pass: Option<bool>,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub experiment: String,
    pub kind: Kind,
    pub nodes: usize,
    pub all_pass: bool,
    pub notes: Vec<String>,
    pub sweeps: Vec<SweepSummary>,
    pub rows: Vec<Row>,
    pub runtimes_ms: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: SweepReport,
    pub emt_table: Option<EmtTable>,
}

struct Builder<'c> {
    config: &'c ExperimentConfig,
    experiment: String,
    n: usize,
    rows: Vec<Row>,
    sweeps: Vec<SweepSummary>,
    notes: Vec<String>,
    runtimes: BTreeMap<String, f64>,
}

impl Builder<'_> {
    fn scalar(&mut self, check: &str, epsilon: Option<f64>, value: f64, remainder: Option<f64>, pass: Option<bool>) {
        self.rows.push(Row {
            experiment: self.experiment.clone(),
            check: check.to_string(),
            epsilon,
            n: self.n,
            value,
            remainder,
            slope: None,
            pass,
        });
    }

    fn sweep(&mut self, s: &Sweep, gate: Gate) {
        let [lo, hi] = self.config.tolerances.slope_band;
        let slope = s.fit.slope;
        let pass = match gate {
            Gate::Band => Some(slope >= lo && slope <= hi),
            Gate::Min => Some(slope >= lo),
            Gate::Info | Gate::Skip => None,
        };
        for p in &s.points {
            self.scalar(&s.check, Some(p.epsilon), p.value, Some(p.remainder), None);
        }
        self.rows.push(Row {
            experiment: self.experiment.clone(),
            check: s.check.clone(),
            epsilon: None,
            n: self.n,
            value: s.max_remainder(),
            remainder: None,
            slope: Some(slope),
            pass,
        });
        self.sweeps.push(SweepSummary {
            check: s.check.clone(),
            slope,
            slope_without_largest: if s.points.len() >= 3 { s.slope_without_largest().ok() } else { None },
            pass,
            points: s.points.clone(),
        });
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> lamepert::Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.runtimes.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        Ok(out)
    }
}

fn renamed(mut s: Sweep, check: String) -> Sweep {
    s.check = check;
    s
}

/// Run a validated experiment. No files are written.
pub fn run(config: &ExperimentConfig, prepared: &Prepared) -> Result<Outcome> {
    let kind = prepared.kind;
    let mut b = Builder {
        config,
        experiment: config.name.clone().unwrap_or_else(|| kind.label().to_string()),
        n: prepared.problem.grid.n,
        rows: Vec::new(),
        sweeps: Vec::new(),
        notes: Vec::new(),
        runtimes: BTreeMap::new(),
    };
    let mut emt_table = None;
    match kind {
        Kind::Solve => run_solve(&mut b, prepared)?,
        Kind::Expand => run_expand(&mut b, prepared)?,
        Kind::Traction => run_traction(&mut b, prepared, Gate::Info)?,
        Kind::Emt => emt_table = Some(run_emt(&mut b, prepared, Gate::Info)?),
        Kind::SweepAll => {
            let s = b.timed("displacement", || {
                displacement_sweep(&prepared.problem, &config.perturbation, &config.epsilons, &prepared.observation)
            })?;
            b.sweep(&s, Gate::Band);
            run_traction(&mut b, prepared, Gate::Skip)?;
            let p = &prepared.problem;
            let [nominal, _] = b.timed("emt", || emt_sweeps(p, &config.test_field, &config.perturbation, &config.epsilons))?;
            b.sweep(&nominal, Gate::Band);
        }
    }
    let all_pass = b.rows.iter().all(|r| r.pass != Some(false));
    let mut effective = config.clone();
    effective.kind = Some(kind);
    effective.nodes = b.n;
    Ok(Outcome {
        report: SweepReport {
            experiment: b.experiment,
            kind,
            nodes: b.n,
            all_pass,
            notes: b.notes,
            sweeps: b.sweeps,
            rows: b.rows,
            runtimes_ms: b.runtimes,
            config: effective,
        },
        emt_table,
    })
}

fn run_solve(b: &mut Builder, prepared: &Prepared) -> Result<()> {
    let cfg = b.config;
    let tol = cfg.tolerances;
    let p = &prepared.problem;
    let system = BlockSystem::new(&p.grid, p.background, p.inclusion)?;
    let base = b.timed("solve", || solve_base_with(&system, &p.field))?;
    b.scalar("phi-l2", None, l2_norm(&p.grid, &base.phi), None, None);
    b.scalar("psi-l2", None, l2_norm(&p.grid, &base.psi), None, None);
    let ext = boundary_traces_with(&system, &p.field, &base, Side::Plus);
    let int = boundary_traces_with(&system, &p.field, &base, Side::Minus);
    let res = interface_residuals(&p.grid, p.background, p.inclusion, &ext, &int)?;
    b.scalar("interface-residual", None, res.max(), None, Some(res.max() <= tol.interface));

    if p.is_matched() {
        // Only the scattering density vanishes; ψ still represents u = H inside.
        let m = base.phi.max_abs();
        b.scalar("trivial-phi", None, m, None, Some(m <= tol.trivial));
        b.notes.push("trivial contrast: all densities ~0 (scattering densities φ, φ_ε)".to_string());
        if !cfg.perturbation.is_zero() {
            for &e in &cfg.epsilons {
                let (pg, de) = solve_perturbed(p, &cfg.perturbation, e)?;
                let u = eval_u(&p.with_grid(pg), &de, &prepared.observation)?;
                let r = prepared
                    .observation
                    .iter()
                    .zip(&u.values)
                    .map(|(&x, &ux)| (ux - p.field.value(x)).norm())
                    .fold(0.0, f64::max);
                let d = de.phi.max_abs();
                b.scalar("trivial-perturbed", Some(e), d, Some(r), Some(d <= tol.trivial && r <= tol.trivial));
            }
        }
    } else {
        let decay = b.timed("far-field", || far_field_decay(p, &cfg.far_field_radii, prepared.observation.len()))?;
        for pt in &decay.points {
            b.scalar(&format!("far-field-r{}", pt.epsilon), None, pt.value, None, None);
        }
        b.rows.push(Row {
            experiment: b.experiment.clone(),
            check: "far-field-decay".to_string(),
            epsilon: None,
            n: b.n,
            value: decay.max_remainder(),
            remainder: None,
            slope: Some(decay.fit.slope),
            pass: Some(decay.fit.slope <= tol.decay_max_exponent),
        });
    }
    Ok(())
}

fn run_expand(b: &mut Builder, prepared: &Prepared) -> Result<()> {
    let cfg = b.config;
    let p = &prepared.problem;
    let (h, eps) = (&cfg.perturbation, &cfg.epsilons[..]);
    let s = b.timed("displacement", || displacement_sweep(p, h, eps, &prepared.observation))?;
    b.sweep(&s, Gate::Band);
    let s = b.timed("density-pullback", || density_pullback_sweep(p, h, eps))?;
    b.sweep(&s, Gate::Min);
    let system = BlockSystem::new(&p.grid, p.background, p.inclusion)?;
    let base = solve_base_with(&system, &p.field)?;
    for (label, pair, dens) in [("exterior", p.background, &base.phi), ("interior", p.inclusion, &base.psi)] {
        let (k, s) = b.timed(&format!("{label}-operators"), || {
            operator_pullback_sweeps(&p.grid, pair, h, dens, eps, p.injectivity_guard)
        })?;
        let (kc, sc) = (format!("{label}-{}", k.check), format!("{label}-{}", s.check));
        b.sweep(&renamed(k, kc), Gate::Min);
        b.sweep(&renamed(s, sc), Gate::Min);
    }
    Ok(())
}

/// `flipped` controls the alternative-sign sweep: reported or skipped.
fn run_traction(b: &mut Builder, prepared: &Prepared, flipped: Gate) -> Result<()> {
    let cfg = b.config;
    let [nominal, other] = b.timed("traction", || {
        traction_sweeps(&prepared.problem, &cfg.perturbation, &cfg.epsilons, &prepared.s_curve, &cfg.test_field)
    })?;
    b.sweep(&nominal, Gate::Band);
    if flipped != Gate::Skip {
        b.sweep(&other, flipped);
    }
    Ok(())
}

fn max_degree(f: &PolynomialField) -> u32 {
    f.terms.iter().map(|t| t.alpha[0] + t.alpha[1]).max().unwrap_or(0)
}

fn run_emt(b: &mut Builder, prepared: &Prepared, flipped: Gate) -> Result<EmtTable> {
    let cfg = b.config;
    let tol = cfg.tolerances;
    let p = &prepared.problem;
    let (field, test) = (&cfg.field, &cfg.test_field);
    let system = BlockSystem::new(&p.grid, p.background, p.inclusion)?;
    let table = b.timed("emt-table", || EmtTable::build(&system, cfg.emt_cap))?;
    let sum = emt_sum_with(&system, field, test)?;
    b.scalar("emt-sum", None, sum, None, None);
    if max_degree(field).max(max_degree(test)) <= cfg.emt_cap {
        let gap = (table.contract(field, test)? - sum).abs();
        b.scalar("emt-table-contraction", None, gap, None, Some(gap <= tol.emt_forms));
    }
    let a = emt_first_order_with(&system, field, test, &cfg.perturbation)?;
    let c = emt_first_order_exterior_form_with(&system, field, test, &cfg.perturbation)?;
    b.scalar("emt-first-order", None, a, None, None);
    b.scalar("emt-first-order-forms", None, (a - c).abs(), None, Some((a - c).abs() <= tol.emt_forms));
    let [nominal, other] = b.timed("emt-sweep", || emt_sweeps(p, test, &cfg.perturbation, &cfg.epsilons))?;
    b.sweep(&nominal, Gate::Band);
    if flipped != Gate::Skip {
        b.sweep(&other, flipped);
    }
    Ok(table)
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_results_csv<W: std::io::Write>(rows: &[Row], w: W) -> std::result::Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Write `results.csv`, `report.json` and, for moment runs, `emt_table.csv`
/// into `dir`; returns the written paths.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let path = dir.join(RESULTS_CSV);
    let file = fs::File::create(&path).map_err(|e| output_error(&path, e))?;
    write_results_csv(&outcome.report.rows, file).map_err(|e| output_error(&path, e))?;
    written.push(path);

    let path = dir.join(REPORT_JSON);
    let json = serde_json::to_string_pretty(&outcome.report).map_err(|e| output_error(&path, e))?;
    fs::write(&path, json + "\n").map_err(|e| output_error(&path, e))?;
    written.push(path);

    if let Some(t) = &outcome.emt_table {
        let path = dir.join(EMT_TABLE_CSV);
        let file = fs::File::create(&path).map_err(|e| output_error(&path, e))?;
        t.write_csv(file).map_err(|e| output_error(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
