//! The subcommands. Each writes its tables into the output directory and
//! returns a manifest; failures after partial progress are recorded in the
//! manifest instead of discarding what was written.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thinbeam::diagnostics::{analyze, convergence_study, ConvergenceTable, Diagnostics};
use thinbeam::elastica::{solve_elastica, ElasticaSolution};
use thinbeam::energy::{linearize, StoredEnergy};
use thinbeam::hypotheses::{run_suite, CheckStatus, SuiteOptions};
use thinbeam::strip::{scaled_energy, solve_stationary, DeformationField, SolverReport};
use thinbeam::truncation::{rough_field, GridFunction, ReflectedField, TruncationResult};
use thinbeam::StripMesh;

use crate::config::{ExperimentConfig, FieldKind};
use crate::fixture::NonObjective;
use crate::io::{read_grid, write_grid, KeyValues, Table};
use crate::manifest::RunManifest;
use crate::LabError;

fn core(context: &str) -> impl Fn(thinbeam::Error) -> LabError + '_ {
    move |e| LabError::from_core(context, e)
}

fn prepare_dir(dir: &Path) -> Result<(), LabError> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// The configured density, wrapped in the negative-control fixture when
/// `energy.fixture_non_objective` is nonzero.
pub fn density(cfg: &ExperimentConfig) -> Box<dyn StoredEnergy> {
    if cfg.fixture_non_objective != 0.0 {
        Box::new(NonObjective {
            base: cfg.energy,
            eps: cfg.fixture_non_objective,
        })
    } else {
        Box::new(cfg.energy)
    }
}

fn modulus(cfg: &ExperimentConfig) -> Result<f64, LabError> {
    linearize(&cfg.energy).map(|l| l.modulus).map_err(core("linearization"))
}

/// A strip solve that ran to completion of the continuation, converged or not.
#[derive(Debug, Clone)]
pub struct StripRun {
    pub h: f64,
    pub y: DeformationField,
    pub report: SolverReport,
    pub seconds: f64,
}

pub fn solve_one(
    cfg: &ExperimentConfig,
    nx: usize,
    ny: usize,
    h: f64,
    warm: Option<&DeformationField>,
) -> Result<StripRun, LabError> {
    let ctx = format!("strip solve at h = {h}");
    let mesh = StripMesh::new(cfg.length, nx, ny).map_err(core(&ctx))?;
    let start = Instant::now();
    let (y, report) = solve_stationary(&mesh, h, &cfg.load, &cfg.energy, &cfg.solver, warm).map_err(core(&ctx))?;
    Ok(StripRun {
        h,
        y,
        report,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Solves every `study.h` in order, warm-starting each from the previous
/// converged solution. Entries are `Err` for solves that failed.
pub fn solve_sweep(cfg: &ExperimentConfig) -> Vec<Result<StripRun, LabError>> {
    let mut out: Vec<Result<StripRun, LabError>> = Vec::new();
    let mut warm: Option<DeformationField> = None;
    for (&h, &nx) in cfg.study_h.iter().zip(&cfg.study_nx) {
        let run = solve_one(cfg, nx, cfg.study_ny, h, warm.as_ref()).and_then(|r| {
            if r.report.converged {
                Ok(r)
            } else {
                Err(LabError::NoConvergence(format!(
                    "strip solve at h = {h}: residual {:.3e} after {} iterations",
                    r.report.residual, r.report.iterations
                )))
            }
        });
        warm = run.as_ref().ok().map(|r| r.y.clone());
        out.push(run);
    }
    out
}

pub fn solve_limit(cfg: &ExperimentConfig) -> Result<ElasticaSolution, LabError> {
    solve_elastica(modulus(cfg)?, &cfg.load, cfg.length, cfg.elastica_n, cfg.elastica_tol)
        .map_err(core("elastica solve"))
}

fn solution_table(y: &DeformationField) -> Table {
    let mut t = Table::new(&["node_id", "x1", "x2", "y1", "y2"]);
    for (n, v) in y.y.iter().enumerate() {
        let x = y.mesh.node_coords(n);
        t.push(vec![n.to_string(), x.x.to_string(), x.y.to_string(), v.x.to_string(), v.y.to_string()]);
    }
    t
}

fn report_values(run: &StripRun, cfg: &ExperimentConfig) -> KeyValues {
    let mut kv = KeyValues::default();
    let (elastic, total) = scaled_energy(&run.y, &cfg.load, &cfg.energy);
    kv.add("h", run.h);
    kv.add("nx", run.y.mesh.nx);
    kv.add("ny", run.y.mesh.ny);
    kv.add("energy", cfg.energy);
    kv.add("converged", run.report.converged);
    kv.add("iterations", run.report.iterations);
    kv.add("residual", run.report.residual);
    kv.add("elastic", elastic);
    kv.add("total", total);
    kv.add("energy_over_h2", elastic / (run.h * run.h));
    kv.add("warm_started", run.report.warm_started);
    let path: Vec<String> = run
        .report
        .path
        .iter()
        .map(|s| format!("{}:{}", s.parameter, s.iterations))
        .collect();
    kv.add("continuation", path.join(" "));
    kv.add("config_hash", &cfg.hash);
    kv
}

fn write_out(m: &mut RunManifest, path: PathBuf, res: Result<(), LabError>) -> Result<(), LabError> {
    res?;
    m.outputs.push(path);
    Ok(())
}

fn finish(m: RunManifest, dir: &Path) -> Result<RunManifest, LabError> {
    m.write(dir)?;
    Ok(m)
}

pub fn run_solve_strip(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, LabError> {
    prepare_dir(dir)?;
    let mut m = RunManifest::new("solve-strip", &cfg.hash);
    let run = solve_one(cfg, cfg.nx, cfg.ny, cfg.h, None)?;
    m.record(
        format!("h={}", cfg.h),
        run.report.converged,
        run.seconds,
        format!("iterations={} residual={:e}", run.report.iterations, run.report.residual),
    );
    let p = dir.join("solution.csv");
    write_out(&mut m, p.clone(), solution_table(&run.y).write(&p))?;
    let p = dir.join("report.csv");
    write_out(&mut m, p.clone(), report_values(&run, cfg).write(&p))?;
    if !run.report.converged {
        m.fail(LabError::NoConvergence(format!(
            "h = {}: residual {:.3e} after {} iterations",
            cfg.h, run.report.residual, run.report.iterations
        )));
    }
    finish(m, dir)
}

fn elastica_table(sol: &ElasticaSolution) -> Table {
    let mut t = Table::new(&["x1", "theta", "kappa", "ybar1", "ybar2"]);
    for i in 0..=sol.n() {
        t.push_numbers(&[sol.x[i], sol.theta[i], sol.kappa[i], sol.ybar[i].x, sol.ybar[i].y]);
    }
    t
}

pub fn run_solve_elastica(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, LabError> {
    prepare_dir(dir)?;
    let mut m = RunManifest::new("solve-elastica", &cfg.hash);
    let start = Instant::now();
    let sol = solve_limit(cfg)?;
    m.record("elastica", true, start.elapsed().as_secs_f64(), format!("n={}", sol.n()));
    let p = dir.join("elastica.csv");
    write_out(&mut m, p.clone(), elastica_table(&sol).write(&p))?;
    let mut kv = KeyValues::default();
    kv.add("n", sol.n());
    kv.add("modulus", sol.modulus);
    kv.add("tip_angle", sol.tip_angle());
    kv.add("j2", sol.j2);
    kv.add("residual", sol.residual);
    kv.add("iterations", sol.iterations);
    kv.add("config_hash", &cfg.hash);
    let p = dir.join("report.csv");
    write_out(&mut m, p.clone(), kv.write(&p))?;
    finish(m, dir)
}

fn identities_table<'a>(rows: impl Iterator<Item = &'a thinbeam::diagnostics::IdentityResiduals>) -> Table {
    let mut t = Table::new(&["h", "r1", "r2", "r3", "r4", "r5"]);
    for r in rows {
        t.push_numbers(&[r.h, r.r1, r.r2, r.r3, r.r4, r.r5]);
    }
    t
}

fn write_diagnostics(m: &mut RunManifest, y: &DeformationField, d: &Diagnostics, dir: &Path) -> Result<(), LabError> {
    let mut t = Table::new(&["x1", "theta_h"]);
    for (x, th) in d.profile.node_x.iter().zip(&d.profile.theta) {
        t.push_numbers(&[*x, *th]);
    }
    let p = dir.join("rotations.csv");
    write_out(m, p.clone(), t.write(&p))?;

    let mut t = Table::new(&[
        "element", "qp", "x1", "x2", "G11", "G12", "G21", "G22", "E11", "E12", "E21", "E22",
    ]);
    for e in 0..y.mesh.num_elements() {
        for q in 0..4 {
            let x = y.mesh.qp_coords(e, q);
            let g = d.strain.at(e, q);
            let s = d.stress.at(e, q);
            let mut row = vec![e.to_string(), q.to_string(), x.x.to_string(), x.y.to_string()];
            row.extend([g.a11, g.a12, g.a21, g.a22, s.a11, s.a12, s.a21, s.a22].iter().map(|v| v.to_string()));
            t.push(row);
        }
    }
    let p = dir.join("fields.csv");
    write_out(m, p.clone(), t.write(&p))?;

    let mut t = Table::new(&[
        "x1", "barE11", "barE12", "barE21", "barE22", "hatE11", "hatE12", "hatE21", "hatE22", "hatG11",
    ]);
    let (em, gm) = (&d.stress_moments, &d.strain_moments);
    for c in 0..em.x1.len() {
        let (b, h) = (em.bar[c], em.hat[c]);
        t.push_numbers(&[em.x1[c], b.a11, b.a12, b.a21, b.a22, h.a11, h.a12, h.a21, h.a22, gm.hat[c].a11]);
    }
    let p = dir.join("moments.csv");
    write_out(m, p.clone(), t.write(&p))?;

    let p = dir.join("identities.csv");
    write_out(m, p.clone(), identities_table(std::iter::once(&d.identities)).write(&p))
}

pub fn run_diagnose(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, LabError> {
    prepare_dir(dir)?;
    let mut m = RunManifest::new("diagnose", &cfg.hash);
    let run = solve_one(cfg, cfg.nx, cfg.ny, cfg.h, None)?;
    m.record(
        format!("solve h={}", cfg.h),
        run.report.converged,
        run.seconds,
        format!("iterations={} residual={:e}", run.report.iterations, run.report.residual),
    );
    let p = dir.join("solution.csv");
    write_out(&mut m, p.clone(), solution_table(&run.y).write(&p))?;
    if !run.report.converged {
        m.fail(LabError::NoConvergence(format!("h = {}: residual {:.3e}", cfg.h, run.report.residual)));
        return finish(m, dir);
    }
    let start = Instant::now();
    match analyze(&run.y, &cfg.load, &cfg.energy) {
        Ok(d) => {
            m.record("diagnostics", true, start.elapsed().as_secs_f64(), "");
            write_diagnostics(&mut m, &run.y, &d, dir)?;
        }
        Err(e) => {
            m.record("diagnostics", false, start.elapsed().as_secs_f64(), e.to_string());
            m.fail(LabError::from_core("diagnostics", e));
        }
    }
    finish(m, dir)
}

/// The convergence table of a sweep against the elastica limit.
pub fn study(cfg: &ExperimentConfig, runs: &[StripRun], limit: &ElasticaSolution) -> Result<ConvergenceTable, LabError> {
    let sols: Vec<DeformationField> = runs.iter().map(|r| r.y.clone()).collect();
    convergence_study(&sols, limit, &cfg.load, &cfg.energy).map_err(core("convergence study"))
}

pub fn run_convergence(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, LabError> {
    prepare_dir(dir)?;
    let mut m = RunManifest::new("converge", &cfg.hash);
    let start = Instant::now();
    let limit = solve_limit(cfg)?;
    m.record("elastica", true, start.elapsed().as_secs_f64(), format!("n={}", limit.n()));
    let p = dir.join("elastica.csv");
    write_out(&mut m, p.clone(), elastica_table(&limit).write(&p))?;

    let mut converged = Vec::new();
    for (res, &h) in solve_sweep(cfg).into_iter().zip(&cfg.study_h) {
        match res {
            Ok(r) => {
                m.record(
                    format!("h={h}"),
                    true,
                    r.seconds,
                    format!("iterations={} residual={:e}", r.report.iterations, r.report.residual),
                );
                converged.push(r);
            }
            Err(e) => {
                m.record(format!("h={h}"), false, 0.0, e.to_string());
                m.fail(e);
            }
        }
    }
    if converged.is_empty() {
        return finish(m, dir);
    }
    let start = Instant::now();
    let table = match study(cfg, &converged, &limit) {
        Ok(t) => t,
        Err(e) => {
            m.record("diagnostics", false, start.elapsed().as_secs_f64(), e.to_string());
            m.fail(e);
            return finish(m, dir);
        }
    };
    m.record("diagnostics", true, start.elapsed().as_secs_f64(), "");

    let mut t = Table::new(&["h", "theta_err_L2", "y_err_W12", "energy_over_h2"]);
    for r in &table.rows {
        t.push_numbers(&[r.h, r.theta_err_l2, r.y_err_w12, r.energy_over_h2]);
    }
    let p = dir.join("convergence.csv");
    write_out(&mut m, p.clone(), t.write(&p))?;
    let p = dir.join("identities.csv");
    write_out(&mut m, p.clone(), identities_table(table.rows.iter().map(|r| &r.identities)).write(&p))?;

    let mut t = Table::new(&[
        "h",
        "strain_L2",
        "rotation_gap",
        "stress_gap",
        "theta_sup",
        "interp_lhs",
        "interp_rhs",
        "z_boundary_ratio",
    ]);
    for r in &table.rows {
        t.push_numbers(&[
            r.h,
            r.strain_l2,
            r.rotation_gap,
            r.stress_gap,
            r.theta_sup,
            r.interp_lhs,
            r.interp_rhs,
            r.z_boundary_ratio,
        ]);
    }
    let p = dir.join("study.csv");
    write_out(&mut m, p.clone(), t.write(&p))?;
    finish(m, dir)
}

/// A smooth two-component field with every edge slope below `slope`.
pub fn smooth_field(nx: usize, ny: usize, length: f64, h: f64, slope: f64, seed: u64) -> Result<GridFunction, LabError> {
    let phase = (seed % 1000) as f64 * 0.001 * std::f64::consts::TAU;
    let s = 0.25 * slope;
    GridFunction::from_fn(nx, ny, length / (nx - 1) as f64, h / (ny - 1) as f64, 2, |x1, x2| {
        vec![s * (x1 + phase).sin(), s * (x2 + 0.5 * (x1 - phase).cos())]
    })
    .map_err(core("smooth field"))
}

/// Statistics of one truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub nx: usize,
    pub ny: usize,
    pub seed: u64,
    /// `base` or `widened`.
    pub window: &'static str,
    pub a: f64,
    pub big_a: f64,
    pub lambda: f64,
    pub bad_area: f64,
    pub energy: f64,
    pub q: f64,
    pub strip: i64,
    pub grad_sup: f64,
    /// `‖∇v‖_∞ ≤ λ` and `v = u` off the reported bad set.
    pub invariants_hold: bool,
}

fn check_row(u: &GridFunction, r: &TruncationResult) -> bool {
    let off = u.difference_mask(&r.v);
    r.v.gradient_sup() <= r.lambda && off.iter().zip(&r.bad).all(|(d, b)| !d || *b)
}

/// Truncates every field of the configured sweep at the base window
/// `(a, A)` and the widened window `(a/w, A·w)`.
pub fn truncation_sweep(cfg: &ExperimentConfig) -> Result<Vec<TruncationRow>, LabError> {
    let tc = &cfg.truncation;
    let windows = [("base", tc.a, tc.big_a), ("widened", tc.a / tc.widen, tc.big_a * tc.widen)];
    let mut rows = Vec::new();
    for &(nx, ny) in &tc.resolutions {
        let fields: Vec<Vec<TruncationRow>> = (0..tc.fields as u64)
            .into_par_iter()
            .map(|k| {
                let seed = cfg.seed.wrapping_add(k);
                let ctx = format!("truncation of field {seed} at {nx}x{ny}");
                let u = match tc.field {
                    FieldKind::Rough => rough_field(nx, ny, cfg.length, tc.h, seed).map_err(core(&ctx))?,
                    FieldKind::Smooth => smooth_field(nx, ny, cfg.length, tc.h, tc.a / tc.widen, seed)?,
                };
                let reflected = ReflectedField::new(&u).map_err(core(&ctx))?;
                windows
                    .iter()
                    .map(|&(window, a, big_a)| {
                        let r = reflected.truncate(a, big_a, tc.p).map_err(core(&ctx))?;
                        Ok(TruncationRow {
                            nx,
                            ny,
                            seed,
                            window,
                            a,
                            big_a,
                            lambda: r.lambda,
                            bad_area: r.bad_area,
                            energy: r.energy,
                            q: r.q,
                            strip: r.strip,
                            grad_sup: r.v.gradient_sup(),
                            invariants_hold: check_row(&u, &r),
                        })
                    })
                    .collect()
            })
            .collect::<Result<_, LabError>>()?;
        rows.extend(fields.into_iter().flatten());
    }
    Ok(rows)
}

/// Largest `q` per resolution and window, in configuration order.
pub fn max_q(rows: &[TruncationRow], nx: usize, ny: usize, window: &str) -> f64 {
    rows.iter()
        .filter(|r| r.nx == nx && r.ny == ny && r.window == window)
        .map(|r| r.q)
        .fold(0.0, f64::max)
}

/// `max/min` of positive values; `1` when all vanish and `∞` when only
/// some do.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(0.0, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        1.0
    } else if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn run_truncation_demo(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, LabError> {
    prepare_dir(dir)?;
    let mut m = RunManifest::new("truncate", &cfg.hash);
    let tc = &cfg.truncation;
    if let Some(input) = &tc.input {
        let u = read_grid(input)?;
        let start = Instant::now();
        let r = thinbeam::truncation::thin_truncate(&u, tc.a, tc.big_a, tc.p)
            .map_err(core(&format!("truncation of {}", input.display())))?;
        let ok = check_row(&u, &r);
        m.record("truncate", ok, start.elapsed().as_secs_f64(), input.display().to_string());
        let p = dir.join("truncated.csv");
        write_out(&mut m, p.clone(), write_grid(&r.v, &p))?;
        let mut kv = KeyValues::default();
        kv.add("lambda", r.lambda);
        kv.add("bad_area", r.bad_area);
        kv.add("energy", r.energy);
        kv.add("q", r.q);
        kv.add("strip", r.strip);
        kv.add("half_strips", r.half_strips);
        kv.add("threshold", r.threshold);
        kv.add("grad_sup", r.v.gradient_sup());
        kv.add("invariants_hold", ok);
        kv.add("config_hash", &cfg.hash);
        let p = dir.join("summary.csv");
        write_out(&mut m, p.clone(), kv.write(&p))?;
        if !ok {
            m.fail(LabError::Diagnostic("truncated field violates the Lipschitz bound or the identity".into()));
        }
        return finish(m, dir);
    }

    let start = Instant::now();
    let rows = truncation_sweep(cfg)?;
    m.record("sweep", true, start.elapsed().as_secs_f64(), format!("{} truncations", rows.len()));
    let mut t = Table::new(&[
        "nx", "ny", "seed", "window", "a", "A", "lambda", "bad_area", "energy", "q", "strip", "grad_sup", "invariants_hold",
    ]);
    for r in &rows {
        t.push(vec![
            r.nx.to_string(),
            r.ny.to_string(),
            r.seed.to_string(),
            r.window.to_string(),
            r.a.to_string(),
            r.big_a.to_string(),
            r.lambda.to_string(),
            r.bad_area.to_string(),
            r.energy.to_string(),
            r.q.to_string(),
            r.strip.to_string(),
            r.grad_sup.to_string(),
            r.invariants_hold.to_string(),
        ]);
    }
    let p = dir.join("q_stats.csv");
    write_out(&mut m, p.clone(), t.write(&p))?;

    let mut kv = KeyValues::default();
    let mut base = Vec::new();
    let mut worst_widening = 1.0_f64;
    for &(nx, ny) in &tc.resolutions {
        let b = max_q(&rows, nx, ny, "base");
        let w = max_q(&rows, nx, ny, "widened");
        kv.add(&format!("max_q_{nx}x{ny}_base"), b);
        kv.add(&format!("max_q_{nx}x{ny}_widened"), w);
        base.push(b);
        worst_widening = worst_widening.max(spread(&[b, w]));
    }
    let violations = rows.iter().filter(|r| !r.invariants_hold).count();
    kv.add("resolution_spread", spread(&base));
    kv.add("widening_spread", worst_widening);
    kv.add("invariant_violations", violations);
    kv.add("fields", tc.fields);
    kv.add("config_hash", &cfg.hash);
    let p = dir.join("summary.csv");
    write_out(&mut m, p.clone(), kv.write(&p))?;
    if violations > 0 {
        m.fail(LabError::Diagnostic(format!("{violations} truncations violate the Lipschitz bound or the identity")));
    }
    finish(m, dir)
}

pub fn run_energy_check(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest, LabError> {
    prepare_dir(dir)?;
    let mut m = RunManifest::new("energy-check", &cfg.hash);
    let w = density(cfg);
    let exceptions: &[&str] = if cfg.fixture_non_objective != 0.0 { &[] } else { cfg.energy.documented_exceptions() };
    let start = Instant::now();
    let checks = run_suite(
        w.as_ref(),
        exceptions,
        SuiteOptions {
            samples: cfg.energy_samples,
            seed: cfg.seed,
        },
    );
    let failed: Vec<&str> = checks.iter().filter(|c| c.failed()).map(|c| c.tag).collect();
    m.record("suite", failed.is_empty(), start.elapsed().as_secs_f64(), w.name());

    let mut t = Table::new(&["tag", "name", "status", "measured", "threshold"]);
    for c in &checks {
        t.push(vec![
            c.tag.to_string(),
            c.name.to_string(),
            c.status.to_string(),
            c.measured.to_string(),
            c.threshold.to_string(),
        ]);
    }
    let p = dir.join("hypotheses.csv");
    write_out(&mut m, p.clone(), t.write(&p))?;

    let mut kv = KeyValues::default();
    kv.add("energy", w.name());
    let numeric = linearize(w.as_ref()).map(|l| l.modulus).unwrap_or(f64::NAN);
    kv.add("modulus", numeric);
    kv.add("modulus_closed_form", cfg.energy.modulus_closed_form());
    let status = |s: CheckStatus| checks.iter().filter(|c| c.status == s).count();
    kv.add("passed", status(CheckStatus::Pass));
    kv.add("expected_failures", status(CheckStatus::ExpectedFailure));
    kv.add("failed", status(CheckStatus::Fail));
    let mut tags: Vec<&str> = failed.clone();
    tags.dedup();
    kv.add("failed_tags", tags.join(" "));
    kv.add("config_hash", &cfg.hash);
    let p = dir.join("report.csv");
    write_out(&mut m, p.clone(), kv.write(&p))?;
    if !tags.is_empty() {
        m.fail(LabError::Diagnostic(format!("violated hypotheses: {}", tags.join(", "))));
    }
    finish(m, dir)
}
