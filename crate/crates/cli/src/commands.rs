use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use splab_core::control::Observability;
use splab_core::decay::{check_prop34, check_prop35, localization_scan};
use splab_core::ghost::{extend, geometry_constants, h1_sandwich, verify_identities};
use splab_core::model::{assemble, build_eigensystem, counting_bound, Eigensystem, Grid, PotentialKind, PotentialSpec};
use splab_core::numerics::fit_loglog;
use splab_core::sensors::{CellVerdict, SensorMask, SensorSpec};
use splab_core::specineq::{default_s_grid, exponent_report, fit_exponent, policy_grid, ratio_scan};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Context};
use crate::output::{read_csv, Cell, RunDir, Table};

struct Setup {
    potential: PotentialSpec,
    lambdas: Vec<f64>,
    top: f64,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let lambdas = cfg.scan.lambdas.values();
        let top = *lambdas.last().expect("validated nonempty");
        Ok(Self {
            potential: cfg.potential_spec()?,
            lambdas,
            top,
        })
    }

    fn grid(&self, cfg: &ExperimentConfig, lambda: f64) -> Result<(Grid, Vec<String>), CliError> {
        let (grid, note) = policy_grid(&self.potential, cfg.sensor.as_ref(), lambda, &cfg.numerics).ctx("model")?;
        Ok((grid, note.into_iter().collect()))
    }

    fn system(&self, cfg: &ExperimentConfig, lambda: f64) -> Result<(Eigensystem, Vec<String>), CliError> {
        let (grid, notes) = self.grid(cfg, lambda)?;
        let sys = build_eigensystem(&self.potential, &grid, lambda, &cfg.numerics.eigen).ctx("model")?;
        Ok((sys, notes))
    }
}

/// `delta` and `alpha` of an equidistributed sensor.
fn ball_params(spec: &SensorSpec) -> Option<(f64, f64)> {
    match *spec {
        SensorSpec::EquidistributedDecay { delta, alpha, .. } => Some((delta, alpha)),
        _ => None,
    }
}

/// Exact eigenvalues of the harmonic oscillator, when `V = |x|^2`.
fn harmonic_levels(p: &PotentialSpec, d: usize, count: usize) -> Option<Vec<f64>> {
    match p.kind() {
        PotentialKind::PowerLaw { tau } if *tau == 2.0 => {}
        _ => return None,
    }
    if d == 1 {
        return Some((0..count).map(|k| 2.0 * k as f64 + 1.0).collect());
    }
    let mut levels: Vec<f64> = (0..count)
        .flat_map(|i| (0..count).map(move |j| 2.0 * (i + j) as f64 + 2.0))
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.truncate(count);
    Some(levels)
}

pub fn spectrum(cfg: &ExperimentConfig, run: &RunDir) -> Result<Vec<PathBuf>, CliError> {
    let s = Setup::new(cfg)?;
    let (sys, notes) = s.system(cfg, s.top)?;
    let count = sys.counting_function(s.top).ctx("model")?;
    let exact = harmonic_levels(&s.potential, cfg.dim, count);
    let mut table = Table::new(&["k", "lambda", "analytic", "rel_err"]);
    for (k, &l) in sys.values()[..count].iter().enumerate() {
        let a = exact.as_ref().map(|e| e[k]);
        table.push(vec![k.into(), l.into(), a.into(), a.map(|a| (l - a).abs() / a).into()]);
    }
    let mut files = vec![run.write_csv("spectrum.csv", &table, &notes)?];

    let mut counting = Table::new(&["lambda", "n_lambda", "bound", "ratio"]);
    for &l in &s.lambdas {
        let n = sys.counting_function(l).ctx("model")?;
        let b = counting_bound(l, &s.potential, sys.grid()).ctx("model")?;
        counting.push(vec![l.into(), n.into(), b.into(), (n as f64 / b).into()]);
    }
    files.push(run.write_csv("counting.csv", &counting, &notes)?);
    let cache = run.path().join("eigensystem.bin");
    sys.save(&cache).ctx("model")?;
    files.push(cache);
    Ok(files)
}

pub fn decay(cfg: &ExperimentConfig, run: &RunDir) -> Result<Vec<PathBuf>, CliError> {
    let s = Setup::new(cfg)?;
    let (sys, mut notes) = s.system(cfg, s.top)?;
    let curve = localization_scan(&sys, &s.lambdas, cfg.scan.trials, cfg.seed).ctx("decay")?;
    notes.extend(curve.warnings.iter().cloned());
    let mut table = Table::new(&["lambda", "subspace_dim", "r_star", "fitted_e", "seed"]);
    for pt in &curve.points {
        table.push(vec![
            pt.lambda.into(),
            pt.subspace_dim.into(),
            pt.r_star.into(),
            curve.fitted_e.into(),
            cfg.seed.into(),
        ]);
    }
    let mut files = vec![run.write_csv("decay.csv", &table, &notes)?];

    let count = sys.counting_function(s.top).ctx("model")?;
    let grid = sys.grid();
    let rows: Vec<Vec<Cell>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let l = sys.values()[k];
            let f = sys.vector(k);
            let p34 = check_prop34(grid, l, &f, &s.potential).ok();
            let p35 = check_prop35(grid, l, &f, &s.potential).ok();
            vec![
                k.into(),
                l.into(),
                p34.as_ref().map(|r| r.ratio).into(),
                p35.as_ref().map(|r| r.ratio).into(),
                p35.as_ref().and_then(|r| r.nu).into(),
                p35.as_ref().and_then(|r| r.m_nu).into(),
            ]
        })
        .collect();
    let mut checks = Table::new(&["k", "lambda", "prop34_ratio", "prop35_ratio", "nu", "m_nu"]);
    rows.into_iter().for_each(|r| checks.push(r));
    files.push(run.write_csv("decay_checks.csv", &checks, &notes)?);
    Ok(files)
}

pub fn sensors(cfg: &ExperimentConfig, run: &RunDir) -> Result<Vec<PathBuf>, CliError> {
    let s = Setup::new(cfg)?;
    let spec = cfg.sensor()?;
    let (grid, mut notes) = s.grid(cfg, s.top)?;
    let mask = SensorMask::realize(spec, &grid).ctx("sensors")?;
    notes.extend(mask.warnings().iter().cloned());
    notes.push(format!("total measure {:.15e}", mask.total_measure()));
    let report = mask.verify_cells();
    let mut table = Table::new(&[
        "k0",
        "k1",
        "center0",
        "center1",
        "radius",
        "required_measure",
        "realized_measure",
        "unresolved",
        "clipped",
        "verdict",
    ]);
    for (cell, verdict) in mask.cells().iter().zip(&report.verdicts) {
        let v = match verdict {
            CellVerdict::Pass { .. } => "pass".to_string(),
            CellVerdict::Fail { .. } => "fail".to_string(),
            CellVerdict::Skipped(why) => format!("skipped: {why}"),
        };
        table.push(vec![
            cell.k[0].into(),
            cell.k[1].into(),
            cell.center[0].into(),
            cell.center[1].into(),
            cell.radius.into(),
            cell.required_measure.into(),
            cell.realized_measure.into(),
            cell.unresolved.into(),
            cell.clipped.into(),
            v.into(),
        ]);
    }
    let files = vec![run.write_csv("sensor_cells.csv", &table, &notes)?];
    let blob = run.path().join("mask.bin");
    mask.save(&blob).ctx("sensors")?;
    Ok([files, vec![blob]].concat())
}

pub fn ratio(cfg: &ExperimentConfig, run: &RunDir) -> Result<Vec<PathBuf>, CliError> {
    let s = Setup::new(cfg)?;
    let spec = cfg.sensor()?;
    let curve = ratio_scan(&s.potential, spec, &s.lambdas, &cfg.numerics).ctx("specineq")?;
    let mut table = Table::new(&[
        "lambda",
        "m",
        "c",
        "half_width",
        "n_axis",
        "unresolved_fraction",
        "richardson_delta",
    ]);
    for x in &curve.samples {
        table.push(vec![
            x.lambda.into(),
            x.m.into(),
            x.c.into(),
            x.half_width.into(),
            x.n_axis.into(),
            x.unresolved_fraction.into(),
            x.richardson_delta.into(),
        ]);
    }
    let mut files = vec![run.write_csv("ratio.csv", &table, &curve.warnings)?];
    let fit = fit_exponent(&curve, &default_s_grid()).ctx("specineq")?;
    let r = &curve.reference;
    let mut fit_table = Table::new(&["s_hat", "a_hat", "b_hat", "residual", "thm12", "zhuz", "conj", "aniso"]);
    fit_table.push(vec![
        fit.s_hat.into(),
        fit.a_hat.into(),
        fit.b_hat.into(),
        fit.residual.into(),
        r.thm12.into(),
        r.zhuz.into(),
        r.conj.into(),
        r.aniso.into(),
    ]);
    files.push(run.write_csv("ratio_fit.csv", &fit_table, &curve.warnings)?);
    files.push(run.write_json("exponent_report.json", &exponent_report(&curve, &fit))?);
    Ok(files)
}

pub fn ghost(cfg: &ExperimentConfig, run: &RunDir) -> Result<Vec<PathBuf>, CliError> {
    let s = Setup::new(cfg)?;
    let (sys, mut notes) = s.system(cfg, s.top)?;
    let h = assemble(sys.grid(), &s.potential).ctx("model")?;
    let mut table = Table::new(&[
        "lambda",
        "m",
        "rho",
        "r1",
        "r2",
        "oddness",
        "h1_sq",
        "lower_slack",
        "upper_slack",
    ]);
    let mut stream = 0u64;
    for &l in &s.lambdas {
        let sub = sys.subspace(l).ctx("ghost")?;
        if sub.dim() == 0 {
            notes.push(format!("lambda {l}: empty subspace skipped"));
            stream += cfg.scan.rhos.len() as u64;
            continue;
        }
        for &rho in &cfg.scan.rhos {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream);
            stream += 1;
            let coeffs: Vec<f64> = (0..sub.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let field = extend(&sub, &coeffs, rho, cfg.scan.t_points).ctx("ghost")?;
            let id = verify_identities(&field, &h).ctx("ghost")?;
            let sw = h1_sandwich(&field, l).ctx("ghost")?;
            table.push(vec![
                l.into(),
                sub.dim().into(),
                rho.into(),
                id.boundary.into(),
                id.elliptic.into(),
                id.oddness.into(),
                sw.h1_sq.into(),
                sw.lower_slack.into(),
                sw.upper_slack.into(),
            ]);
        }
    }
    let mut files = vec![run.write_csv("ghost.csv", &table, &notes)?];

    if let Some((delta, alpha)) = cfg.sensor.as_ref().and_then(ball_params) {
        let curve = localization_scan(&sys, &s.lambdas, cfg.scan.trials, cfg.seed).ctx("decay")?;
        let tau1 = s.potential.tau1();
        let Some(c_eff) = curve.effective_constant(tau1) else {
            return Ok(files);
        };
        let mut geo = Table::new(&[
            "lambda",
            "side",
            "half_width",
            "theta",
            "ln_inv_theta",
            "radius",
            "kappa_proxy",
            "c_d",
            "c_eff",
        ]);
        for &l in &s.lambdas {
            let g = geometry_constants(l, cfg.dim, tau1, delta, alpha, c_eff).ctx("ghost")?;
            geo.push(vec![
                l.into(),
                (g.side as usize).into(),
                g.half_width.into(),
                g.theta.into(),
                g.ln_inv_theta.into(),
                g.radius.into(),
                g.kappa_proxy.into(),
                g.c_d.into(),
                c_eff.into(),
            ]);
        }
        let geo_notes = vec!["c_d is not known; kappa_proxy uses c_d = 1".to_string()];
        files.push(run.write_csv("geometry.csv", &geo, &geo_notes)?);
    }
    Ok(files)
}

pub fn observability(cfg: &ExperimentConfig, run: &RunDir) -> Result<Vec<PathBuf>, CliError> {
    let s = Setup::new(cfg)?;
    let spec = cfg.sensor()?;
    let truncation = cfg.scan.truncation.unwrap_or(s.top);
    let (sys, mut notes) = s.system(cfg, truncation)?;
    let mask = SensorMask::realize(spec, sys.grid()).ctx("sensors")?;
    let times = &cfg.scan.times;
    let results: Vec<_> = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| -> Result<_, CliError> {
            let obs = Observability::new(&sys, &mask, t, truncation).ctx("control")?;
            let mut est = obs.estimate().ctx("control")?;
            if let Some((delta, alpha)) = ball_params(spec) {
                est.attach_bounds(&s.potential, delta, alpha, &cfg.bound);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let (mut cost, mut miss) = (None::<f64>, None::<f64>);
            for _ in 0..cfg.scan.controls {
                let g: Vec<f64> = (0..obs.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let u = obs.control(&g).ctx("control")?;
                cost = Some(cost.unwrap_or(0.0).max(u.cost / u.initial_norm));
                miss = Some(miss.unwrap_or(0.0).max(u.final_norm / u.initial_norm));
            }
            Ok((est, cost, miss))
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&[
        "T",
        "m",
        "cobs_num",
        "cobs_bound",
        "remark_bound",
        "slope",
        "max_cost_ratio",
        "max_final_ratio",
    ]);
    for (i, (est, cost, miss)) in results.iter().enumerate() {
        let slope = (i > 0).then(|| {
            let prev = &results[i - 1].0;
            (est.cobs / prev.cobs).ln() / (est.horizon / prev.horizon).ln()
        });
        table.push(vec![
            est.horizon.into(),
            est.m.into(),
            est.cobs.into(),
            est.bound.into(),
            est.remark.into(),
            slope.into(),
            (*cost).into(),
            (*miss).into(),
        ]);
        for n in &est.notes {
            if !notes.contains(n) {
                notes.push(n.clone());
            }
        }
    }
    notes.push(format!("spectral truncation lambda <= {truncation}"));
    Ok(vec![run.write_csv("observability.csv", &table, &notes)?])
}

fn column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

fn floats(rows: &[Vec<String>], idx: usize) -> Vec<f64> {
    rows.iter().filter_map(|r| r[idx].parse().ok()).collect()
}

fn max_of(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::max)
}

fn min_of(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::min)
}

/// Aggregates whatever CSVs earlier subcommands left in the run directory.
pub fn report(_cfg: &ExperimentConfig, run: &RunDir) -> Result<Vec<PathBuf>, CliError> {
    let mut out = serde_json::Map::new();
    out.insert("config_hash".into(), json!(run.hash()));
    let load = |name: &str| -> Result<Option<(Vec<String>, Vec<Vec<String>>)>, CliError> {
        let path = run.path().join(name);
        if path.exists() {
            read_csv(&path).map(Some)
        } else {
            Ok(None)
        }
    };
    let col =
        |h: &[String], rows: &[Vec<String>], name: &str| column(h, name).map(|i| floats(rows, i)).unwrap_or_default();

    if let Some((h, rows)) = load("spectrum.csv")? {
        let err = col(&h, &rows, "rel_err");
        out.insert(
            "spectrum".into(),
            json!({ "modes": rows.len(), "max_rel_err": max_of(&err) }),
        );
    }
    if let Some((h, rows)) = load("counting.csv")? {
        let l = col(&h, &rows, "lambda");
        let b = col(&h, &rows, "bound");
        let shifted: Vec<f64> = l.iter().map(|x| x + 1.0).collect();
        let slope = fit_loglog(&shifted, &b).ok().map(|f| f.0);
        let ratio = col(&h, &rows, "ratio");
        out.insert(
            "counting".into(),
            json!({ "max_ratio": max_of(&ratio), "bound_slope_in_lambda_plus_one": slope }),
        );
    }
    if let Some((h, rows)) = load("decay.csv")? {
        let e = col(&h, &rows, "fitted_e");
        out.insert("decay".into(), json!({ "points": rows.len(), "fitted_e": e.first() }));
    }
    if let Some((h, rows)) = load("decay_checks.csv")? {
        out.insert(
            "decay_checks".into(),
            json!({
                "max_prop34_ratio": max_of(&col(&h, &rows, "prop34_ratio")),
                "max_prop35_ratio": max_of(&col(&h, &rows, "prop35_ratio")),
            }),
        );
    }
    if let Some((h, rows)) = load("sensor_cells.csv")? {
        let v = column(&h, "verdict").expect("verdict column");
        let fails = rows.iter().filter(|r| r[v] == "fail").count();
        out.insert("sensors".into(), json!({ "cells": rows.len(), "failed": fails }));
    }
    if let Some((h, rows)) = load("ratio.csv")? {
        let c = col(&h, &rows, "c");
        let violations = c.windows(2).filter(|w| w[1] > w[0]).count();
        let mut entry = json!({ "samples": rows.len(), "monotonicity_violations": violations });
        let report_path = run.path().join("exponent_report.json");
        if report_path.exists() {
            let text = std::fs::read_to_string(&report_path).map_err(|source| CliError::Io {
                path: report_path.clone(),
                source,
            })?;
            let rep: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
            entry["exponent_report"] = rep;
        }
        out.insert("ratio_scan".into(), entry);
    }
    if let Some((h, rows)) = load("ghost.csv")? {
        out.insert(
            "ghost".into(),
            json!({
                "max_r1": max_of(&col(&h, &rows, "r1")),
                "max_r2": max_of(&col(&h, &rows, "r2")),
                "min_lower_slack": min_of(&col(&h, &rows, "lower_slack")),
                "min_upper_slack": min_of(&col(&h, &rows, "upper_slack")),
            }),
        );
    }
    if let Some((h, rows)) = load("observability.csv")? {
        let t = col(&h, &rows, "T");
        let c = col(&h, &rows, "cobs_num");
        let decreasing = c.windows(2).all(|w| w[1] < w[0]);
        out.insert(
            "observability".into(),
            json!({
                "horizons": t,
                "cobs": c,
                "strictly_decreasing": decreasing,
                "max_cost_ratio": max_of(&col(&h, &rows, "max_cost_ratio")),
            }),
        );
    }
    Ok(vec![run.write_json("report.json", &Value::Object(out))?])
}
