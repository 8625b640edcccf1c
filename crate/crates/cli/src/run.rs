//! The four commands on top of the core pipeline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use moutard_core::dirac::{dirac_transform, DiracProblem, SeedPair, Spinor, TransformOptions};
use moutard_core::examples::{
    ex1_closed_forms, ex2_closed_forms, ex2_decay_check, ex2_sigma_and_circle, Example1Params, Example2Params,
};
use moutard_core::expr::SeedExpr;
use moutard_core::ga::{ga_transform, AlphaTable, GaProblem, GaSeed, GaTransformResult};
use moutard_core::grid::{sample, Domain, GridField, Mask};
use moutard_core::potentials::default_basepoint;
use moutard_core::verifier::{
    dirac_certificates, dirac_convergence, ga_certificates, ga_convergence_with, locate_singular_set,
    standard_grids, Certificates, ConvergenceStudy,
};
use moutard_core::{Complex64, MoutardError};
use thiserror::Error;

use crate::config::{Config, ConfigError, Level, Sweep};
use crate::output::{create_dir, field_csv, finite, num, write_file, OrderOut, PoleLine, Report};

/// Minimum fitted order accepted by `verify`.
pub const MIN_ORDER: f64 = 1.8;

/// Convergence studies skip nodes this many coarse cells from the pole set.
pub const POLE_EXCLUSION_CELLS: f64 = 4.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] MoutardError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(MoutardError::AllSingular) => 4,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn field(d: &Domain, e: &SeedExpr) -> moutard_core::Result<GridField> {
    sample(d, |z| e.eval(z))
}

fn is_zero(e: &SeedExpr) -> bool {
    e.is_constant() && e.eval(ZERO) == Ok(ZERO)
}

fn basepoint(cfg: &Config, d: &Domain) -> Complex64 {
    cfg.basepoint.unwrap_or_else(|| default_basepoint(d))
}

fn ga_problem(cfg: &Config, d: &Domain) -> moutard_core::Result<GaProblem> {
    let seeds = cfg
        .seeds
        .iter()
        .map(|s| Ok(GaSeed { psi: field(d, &s[0])?, psip: field(d, &s[1])? }))
        .collect::<moutard_core::Result<_>>()?;
    Ok(GaProblem {
        u: field(d, &cfg.u)?,
        seeds,
        alphas: AlphaTable::from_constants(&cfg.constants)?,
        psi0: cfg.psi0.as_ref().map(|t| field(d, &t[0])).transpose()?,
        psip0: cfg.psip0.as_ref().map(|t| field(d, &t[0])).transpose()?,
    })
}

fn spinor(d: &Domain, a: &SeedExpr, b: &SeedExpr) -> moutard_core::Result<Spinor> {
    Spinor::new(field(d, a)?, field(d, b)?)
}

fn dirac_problem(cfg: &Config, d: &Domain) -> moutard_core::Result<DiracProblem> {
    let seeds = cfg
        .seeds
        .iter()
        .map(|s| Ok(SeedPair { psi: spinor(d, &s[0], &s[1])?, psip: spinor(d, &s[2], &s[3])? }))
        .collect::<moutard_core::Result<_>>()?;
    Ok(DiracProblem {
        u: field(d, &cfg.u)?,
        v: field(d, &cfg.v)?,
        seeds,
        constants: cfg.constants.clone(),
        psi0: cfg.psi0.as_ref().map(|t| spinor(d, &t[0], &t[1])).transpose()?,
        psip0: cfg.psip0.as_ref().map(|t| spinor(d, &t[0], &t[1])).transpose()?,
    })
}

fn empty_report(cfg: &Config, command: &'static str, grid: Option<[usize; 2]>, z0: Complex64) -> Report {
    let d = &cfg.domain;
    Report {
        command,
        level: cfg.level.name(),
        domain: [d.x_min(), d.x_max(), d.y_min(), d.y_max()],
        grid,
        convergence_grids: Vec::new(),
        n: cfg.n,
        basepoint: [z0.re, z0.im],
        eps_sing: cfg.eps_sing,
        residuals: BTreeMap::new(),
        residual_orders: BTreeMap::new(),
        det_min: None,
        masked_fraction: 0.0,
        contour_points: 0,
        contour_radius: None,
        pole_line: None,
        pole_line_y: None,
        sigma: None,
        pole_radius: None,
        decay_constant: None,
        oracle: None,
        oracle_max_error: None,
        files: Vec::new(),
        runtime_ms: 0,
    }
}

fn residual_map(c: &Certificates) -> BTreeMap<String, Option<f64>> {
    c.iter().map(|(k, &v)| (k.clone(), finite(v))).collect()
}

/// Max over unmasked nodes of `|a − b| / max(1, |b|)`.
fn oracle_error(
    f: &GridField,
    mask: &Mask,
    exact: impl Fn(Complex64) -> moutard_core::Result<Complex64>,
) -> Result<f64, CliError> {
    let d = f.domain();
    let mut worst = 0.0_f64;
    for (ix, iy, z) in d.nodes() {
        if mask.is_set(d.index(ix, iy)) {
            continue;
        }
        let b = exact(z)?;
        worst = worst.max((f.get(ix, iy) - b).norm() / b.norm().max(1.0));
    }
    Ok(worst)
}

fn constant_of(e: &SeedExpr) -> Option<Complex64> {
    if e.is_constant() {
        e.eval(ZERO).ok()
    } else {
        None
    }
}

/// Closed-form diagnostics of GA runs with `u ≡ 0` that fall into one of
/// the example families.
fn ga_oracles(cfg: &Config, r: &GaTransformResult, z0: Complex64, report: &mut Report) -> Result<(), CliError> {
    if cfg.level != Level::Ga || !is_zero(&cfg.u) {
        return Ok(());
    }
    let zero = SeedExpr::constant(ZERO);
    let psi0 = cfg.psi0.as_ref().map_or(zero.clone(), |t| t[0].clone());
    let psip0 = cfg.psip0.as_ref().map_or(zero, |t| t[0].clone());
    let alpha = |j: usize, k: usize| cfg.constants.get(j, k).im;
    let holomorphic = cfg.seeds.iter().flatten().chain([&psi0, &psip0]).all(SeedExpr::is_holomorphic);

    if cfg.n == 1 && holomorphic {
        let p = Example1Params {
            f: cfg.seeds[0][0].clone(),
            f_plus: cfg.seeds[0][1].clone(),
            psi0,
            psip0,
            alpha11: alpha(1, 1),
            alpha01: alpha(0, 1),
            alpha10: alpha(1, 0),
            basepoint: z0,
        };
        let closed = ex1_closed_forms(&p);
        let mut err = oracle_error(&r.u_t, &r.singular_mask, |z| closed.u_t(z))?;
        if let (Some(f), Some(_)) = (&r.psi_t, &cfg.psi0) {
            err = err.max(oracle_error(f, &r.singular_mask, |z| closed.psi_t(z))?);
        }
        if let (Some(f), Some(_)) = (&r.psip_t, &cfg.psip0) {
            err = err.max(oracle_error(f, &r.singular_mask, |z| closed.psip_t(z))?);
        }
        report.oracle = Some("ex1");
        report.oracle_max_error = finite(err);
        // ω₁₁ = 2i·Im(K(z − z₀)) + iα₁₁ with K = C·C⁺
        if let (Some(c), Some(cp)) = (constant_of(&cfg.seeds[0][0]), constant_of(&cfg.seeds[0][1])) {
            let k = c * cp;
            if k != ZERO {
                let line = PoleLine { a: 2.0 * k.im, b: 2.0 * k.re, c: alpha(1, 1) - 2.0 * (k * z0).im };
                report.pole_line = Some(line);
                if line.a == 0.0 {
                    report.pole_line_y = finite(-line.c / line.b);
                }
            }
        }
        return Ok(());
    }

    if cfg.n == 2 && holomorphic {
        let consts: Option<Vec<Complex64>> = cfg.seeds.iter().flatten().map(constant_of).collect();
        let Some(k) = consts else {
            return Ok(());
        };
        let mut alphas = [[0.0; 3]; 3];
        for (j, row) in alphas.iter_mut().enumerate() {
            for (kk, a) in row.iter_mut().enumerate() {
                *a = alpha(j, kk);
            }
        }
        let p = Example2Params { f: [k[0], k[2]], f_plus: [k[1], k[3]], alphas, psi0, psip0, basepoint: z0 };
        let closed = ex2_closed_forms(&p);
        let mut err = oracle_error(&r.u_t, &r.singular_mask, |z| Ok(closed.u_t(z)))?;
        if let (Some(f), Some(_)) = (&r.psi_t, &cfg.psi0) {
            err = err.max(oracle_error(f, &r.singular_mask, |z| closed.psi_t(z))?);
        }
        if let (Some(f), Some(_)) = (&r.psip_t, &cfg.psip0) {
            err = err.max(oracle_error(f, &r.singular_mask, |z| closed.psip_t(z))?);
        }
        report.oracle = Some("ex2");
        report.oracle_max_error = finite(err);
        match ex2_sigma_and_circle(&p) {
            Ok((sigma, radius)) => {
                report.sigma = finite(sigma);
                report.pole_radius = radius;
                report.decay_constant = finite(ex2_decay_check(&p, &[10.0 * radius.unwrap_or(1.0).max(1.0)]));
            }
            Err(MoutardError::Degenerate(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn mean_distance(points: &[Complex64], z0: Complex64) -> Option<f64> {
    if points.is_empty() {
        return None;
    }
    Some(points.iter().map(|p| (p - z0).norm()).sum::<f64>() / points.len() as f64)
}

/// One transform on the configured grid. Writes the field CSVs and returns
/// the report, which the caller writes.
pub fn transform(cfg: &Config, command: &'static str) -> Result<Report, CliError> {
    let start = Instant::now();
    let d = cfg.domain;
    let z0 = basepoint(cfg, &d);
    let opts = TransformOptions { basepoint: z0, eps_rel: cfg.eps_sing };
    let mut report = empty_report(cfg, command, Some([d.nx(), d.ny()]), z0);
    let mut fields: Vec<(&str, GridField)> = Vec::new();

    let (det, mask, eps_abs, certs) = match cfg.level {
        Level::Ga => {
            let p = ga_problem(cfg, &d)?;
            let r = ga_transform(&p, &opts)?;
            let certs = ga_certificates(&p, &r, cfg.eps_sing, None)?;
            ga_oracles(cfg, &r, z0, &mut report)?;
            fields.push(("u_tilde", r.u_t.clone()));
            if let Some(f) = &r.psi_t {
                fields.push(("psi_tilde", f.clone()));
            }
            if let Some(f) = &r.psip_t {
                fields.push(("psip_tilde", f.clone()));
            }
            (r.det, r.singular_mask, r.eps_sing, certs)
        }
        Level::Dirac => {
            let p = dirac_problem(cfg, &d)?;
            let r = dirac_transform(&p, &opts)?;
            let certs = dirac_certificates(&p, &r, None)?;
            fields.push(("u_tilde", r.u_t.clone()));
            fields.push(("v_tilde", r.v_t.clone()));
            if let Some(s) = &r.psi_t {
                fields.push(("psi_tilde_1", s.c1.clone()));
                fields.push(("psi_tilde_2", s.c2.clone()));
            }
            if let Some(s) = &r.psip_t {
                fields.push(("psip_tilde_1", s.c1.clone()));
                fields.push(("psip_tilde_2", s.c2.clone()));
            }
            (r.det, r.singular_mask, r.eps_sing, certs)
        }
    };

    let set = locate_singular_set(&det, eps_abs);
    report.contour_points = set.points.len();
    if report.oracle == Some("ex2") {
        report.contour_radius = mean_distance(&set.points, z0);
    }
    report.det_min = finite(det.values().iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min));
    report.masked_fraction = mask.fraction();
    report.residuals = residual_map(&certs);
    fields.push(("det", det));

    create_dir(&cfg.out_dir)?;
    for (name, f) in &fields {
        let file = format!("{name}.csv");
        write_file(&cfg.out_dir.join(&file), &field_csv(f))?;
        report.files.push(file);
    }
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Three-grid convergence study of every residual on 33², 65² and 129².
pub fn convergence(cfg: &Config) -> Result<(BTreeMap<String, ConvergenceStudy>, Vec<Domain>), CliError> {
    let grids = standard_grids(&cfg.domain)?;
    let z0 = basepoint(cfg, &grids[0]);
    let radius = POLE_EXCLUSION_CELLS * grids[0].h();
    let factor = Complex64::new(cfg.corrupt_u, 0.0);
    let studies = match cfg.level {
        Level::Ga => {
            AlphaTable::from_constants(&cfg.constants)?;
            ga_convergence_with(|d| ga_problem(cfg, d), &grids, z0, cfg.eps_sing, radius, |r| {
                if factor.re != 1.0 {
                    r.u_t = r.u_t.scale(factor);
                }
            })?
        }
        Level::Dirac => dirac_convergence(|d| dirac_problem(cfg, d), &grids, z0, cfg.eps_sing, radius, |r| {
            if factor.re != 1.0 {
                r.u_t = r.u_t.scale(factor);
            }
        })?,
    };
    Ok((studies, grids))
}

pub fn convergence_csv(studies: &BTreeMap<String, ConvergenceStudy>) -> String {
    let mut out = String::from("residual,h,max_norm\n");
    for (name, s) in studies {
        for &(h, r) in &s.points {
            writeln!(out, "{name},{},{}", num(h), num(r)).expect("writing to a String");
        }
    }
    out
}

/// Record orders and finest-grid residuals in the report and write
/// `convergence.csv`. True when every order reaches [`MIN_ORDER`].
pub fn record_study(
    report: &mut Report,
    cfg: &Config,
    studies: &BTreeMap<String, ConvergenceStudy>,
    grids: &[Domain],
) -> Result<bool, CliError> {
    let mut ok = true;
    report.residuals.clear();
    for (name, s) in studies {
        ok &= s.order.at_least(MIN_ORDER);
        report.residual_orders.insert(name.clone(), OrderOut::from(s.order));
        report.residuals.insert(name.clone(), s.points.last().and_then(|p| finite(p.1)));
    }
    report.convergence_grids = grids.iter().map(|d| [d.nx(), d.ny()]).collect();
    write_file(&cfg.out_dir.join("convergence.csv"), &convergence_csv(studies))?;
    report.files.push("convergence.csv".into());
    Ok(ok)
}

/// `verify`: convergence study only, no field output.
pub fn verify(cfg: &Config) -> Result<(Report, bool), CliError> {
    let start = Instant::now();
    let (studies, grids) = convergence(cfg)?;
    let z0 = basepoint(cfg, &grids[0]);
    let mut report = empty_report(cfg, "verify", None, z0);
    create_dir(&cfg.out_dir)?;
    let ok = record_study(&mut report, cfg, &studies, &grids)?;
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok((report, ok))
}

pub const SWEEP_HEADER: &str = "alpha,beta,sigma,pole_radius,contour_radius,decay_constant,status";

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Circle-pole family over `sweep.alpha × sweep.beta`, one row per point.
pub fn sweep(cfg: &Config, s: &Sweep) -> Result<String, CliError> {
    let mut out = format!("{SWEEP_HEADER}\n");
    for &alpha in &s.alpha {
        for &beta in &s.beta {
            let mut p = Example2Params::family(alpha, beta, s.c21_sign);
            if let Some(z0) = cfg.basepoint {
                p.basepoint = z0;
            }
            let (sigma, radius) = ex2_sigma_and_circle(&p)?;
            let r = ga_transform(&p.problem(&cfg.domain)?, &TransformOptions { basepoint: p.basepoint, eps_rel: cfg.eps_sing })?;
            let contour = mean_distance(&locate_singular_set(&r.det, r.eps_sing).points, p.basepoint);
            let decay = ex2_decay_check(&p, &[10.0 * radius.unwrap_or(1.0).max(1.0)]);
            let status = if radius.is_some() { "pole" } else { "no-pole" };
            writeln!(
                out,
                "{},{},{},{},{},{},{status}",
                num(alpha),
                num(beta),
                num(sigma),
                opt(radius),
                opt(contour),
                opt(finite(decay))
            )
            .expect("writing to a String");
        }
    }
    create_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join("sweep.csv"), &out)?;
    Ok(out)
}
