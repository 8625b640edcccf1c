//! Residual certificates for the governing equations, convergence-order
//! fits and location of the pole set `det Ω = 0`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::dirac::{dirac_transform, DiracProblem, Spinor, TransformOptions, TransformResult};
use crate::error::Result;
use crate::ga::{dirac_route, ga_transform, lift, GaProblem, GaTransformResult};
use crate::grid::{dbar, dz, Domain, GridField, Mask};
use crate::potentials::{check_closedness, omega_integrand};

/// Cells by which the singular mask is grown before residuals are measured.
pub const CERT_DILATION: usize = 2;

/// Residuals below this are treated as exact (no meaningful order).
pub const EXACT_FLOOR: f64 = 1e-13;

/// `∂_z̄ ψ − u ψ̄`.
pub fn residual_ga(u: &GridField, psi: &GridField) -> GridField {
    dbar(psi).sub(&u.mul(&psi.conj()))
}

/// `∂_z̄ ψ⁺ + ū ψ̄⁺`.
pub fn residual_ga_conjugate(u: &GridField, psip: &GridField) -> GridField {
    dbar(psip).add(&u.conj().mul(&psip.conj()))
}

/// `(∂_z̄ ψ_1 − u ψ_2, ∂_z ψ_2 − v ψ_1)`.
pub fn residual_dirac(u: &GridField, v: &GridField, pair: &Spinor) -> (GridField, GridField) {
    (dbar(&pair.c1).sub(&u.mul(&pair.c2)), dz(&pair.c2).sub(&v.mul(&pair.c1)))
}

/// `(∂_z̄ ψ⁺_1 + v ψ⁺_2, ∂_z ψ⁺_2 + u ψ⁺_1)`.
pub fn residual_dirac_conjugate(u: &GridField, v: &GridField, pair: &Spinor) -> (GridField, GridField) {
    (dbar(&pair.c1).add(&v.mul(&pair.c2)), dz(&pair.c2).add(&u.mul(&pair.c1)))
}

/// Max-norm over interior nodes away from the (dilated) singular mask.
pub fn certified_norm(residual: &GridField, singular: Option<&Mask>) -> f64 {
    match singular {
        Some(m) => residual.interior_max_abs(Some(&m.dilate(CERT_DILATION))),
        None => residual.interior_max_abs(None),
    }
}

/// The dilated singular mask joined with undilated extra exclusions.
fn certification_mask(singular: &Mask, exclude: Option<&Mask>) -> Mask {
    let grown = singular.dilate(CERT_DILATION);
    match exclude {
        Some(e) => grown.union(e),
        None => grown,
    }
}

/// Named residual max-norms of one transform run.
pub type Certificates = BTreeMap<String, f64>;

/// Certificates of a GA run: the two transformed GA equations, both
/// transformed Dirac systems along the lifted route, and the closedness of
/// every one-form that fed `Ω` and its columns. Nodes in `exclude` are
/// skipped in addition to the singular mask.
pub fn ga_certificates(p: &GaProblem, r: &GaTransformResult, eps_rel: f64, exclude: Option<&Mask>) -> Result<Certificates> {
    let mask = certification_mask(&r.singular_mask, exclude);
    let mut out = Certificates::new();
    if let Some(psi_t) = &r.psi_t {
        out.insert("ga_moutard7".into(), residual_ga(&r.u_t, psi_t).interior_max_abs(Some(&mask)));
    }
    if let Some(psip_t) = &r.psip_t {
        out.insert("ga_moutard8".into(), residual_ga_conjugate(&r.u_t, psip_t).interior_max_abs(Some(&mask)));
    }
    let dr = dirac_route(p, r, eps_rel)?;
    out.extend(dirac_transformed_residuals(&dr, Some(&mask)));

    let mut closed = 0.0_f64;
    let lifted: Vec<(Spinor, Spinor)> = p.seeds.iter().map(|s| (lift(&s.psi), lift(&s.psip))).collect();
    let mut sources: Vec<&Spinor> = lifted.iter().map(|(a, _)| a).collect();
    let psi0 = p.psi0.as_ref().map(lift);
    sources.extend(psi0.iter());
    let mut targets: Vec<&Spinor> = lifted.iter().map(|(_, b)| b).collect();
    let psip0 = p.psip0.as_ref().map(lift);
    targets.extend(psip0.iter());
    for a in &sources {
        for b in &targets {
            closed = closed.max(check_closedness(&omega_integrand(a, b)?));
        }
    }
    out.insert("dirac4_closedness".into(), closed);
    Ok(out)
}

/// Residuals of the transformed Dirac system and its conjugate.
pub fn dirac_transformed_residuals(r: &TransformResult, exclude: Option<&Mask>) -> Certificates {
    let mask = certification_mask(&r.singular_mask, exclude);
    let norm = |f: &GridField| f.interior_max_abs(Some(&mask));
    let mut out = Certificates::new();
    if let Some(psi_t) = &r.psi_t {
        let (a, b) = residual_dirac(&r.u_t, &r.v_t, psi_t);
        out.insert("dirac5".into(), norm(&a).max(norm(&b)));
    }
    if let Some(psip_t) = &r.psip_t {
        let (a, b) = residual_dirac_conjugate(&r.u_t, &r.v_t, psip_t);
        out.insert("dirac6".into(), norm(&a).max(norm(&b)));
    }
    out
}

/// Certificates of a Dirac-level run.
pub fn dirac_certificates(p: &DiracProblem, r: &TransformResult, exclude: Option<&Mask>) -> Result<Certificates> {
    let mut out = dirac_transformed_residuals(r, exclude);
    let mut closed = 0.0_f64;
    for a in p.seeds.iter().map(|s| &s.psi).chain(p.psi0.iter()) {
        for b in p.seeds.iter().map(|s| &s.psip).chain(p.psip0.iter()) {
            closed = closed.max(check_closedness(&omega_integrand(a, b)?));
        }
    }
    out.insert("dirac4_closedness".into(), closed);
    Ok(out)
}

/// Observed convergence order of a residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    /// Every residual is at the roundoff floor.
    Exact,
    Fitted(f64),
}

impl Order {
    /// `Exact` always passes.
    pub fn at_least(self, min: f64) -> bool {
        match self {
            Order::Exact => true,
            Order::Fitted(p) => p >= min,
        }
    }
}

/// `(h, residual)` samples and the fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub points: Vec<(f64, f64)>,
    pub order: Order,
}

/// Least-squares slope of `log r` against `log h`.
pub fn fit_order(points: &[(f64, f64)]) -> Order {
    if points.iter().all(|&(_, r)| r < EXACT_FLOOR) {
        return Order::Exact;
    }
    // Floor the exact samples so the logarithm stays finite.
    let logs: Vec<(f64, f64)> = points.iter().map(|&(h, r)| (h.ln(), r.max(EXACT_FLOOR).ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    Order::Fitted(sxy / sxx)
}

/// Evaluate a residual on every grid and fit its order.
pub fn convergence_order(make_residual: impl Fn(&Domain) -> Result<f64>, grids: &[Domain]) -> Result<ConvergenceStudy> {
    assert!(grids.len() >= 3, "need at least three grids");
    let points = grids.iter().map(|d| Ok((d.h(), make_residual(d)?))).collect::<Result<Vec<_>>>()?;
    let order = fit_order(&points);
    Ok(ConvergenceStudy { points, order })
}

/// The three standard refinement levels, 33², 65², 129².
pub fn standard_grids(d: &Domain) -> Result<Vec<Domain>> {
    [33, 65, 129].iter().map(|&n| d.with_resolution(n, n)).collect()
}

/// Per-residual convergence studies of a GA problem rebuilt on each grid.
///
/// Residuals are compared at the interior nodes of the coarsest grid, which
/// every finer grid of the sequence shares, so the max-norm is taken over
/// the same physical points at every level. With `exclusion_radius > 0`,
/// nodes that close to the located pole set are skipped as well.
pub fn ga_convergence(
    build: impl Fn(&Domain) -> Result<GaProblem>,
    grids: &[Domain],
    basepoint: Complex64,
    eps_rel: f64,
    exclusion_radius: f64,
) -> Result<BTreeMap<String, ConvergenceStudy>> {
    ga_convergence_with(build, grids, basepoint, eps_rel, exclusion_radius, |_| {})
}

/// [`ga_convergence`] with a hook that may alter each transform result
/// before it is certified.
pub fn ga_convergence_with(
    build: impl Fn(&Domain) -> Result<GaProblem>,
    grids: &[Domain],
    basepoint: Complex64,
    eps_rel: f64,
    exclusion_radius: f64,
    adjust: impl Fn(&mut GaTransformResult),
) -> Result<BTreeMap<String, ConvergenceStudy>> {
    let mut samples: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for d in grids {
        let p = build(d)?;
        let mut r = ga_transform(&p, &TransformOptions { basepoint, eps_rel })?;
        adjust(&mut r);
        let exclude = study_exclusion(&r.det, r.eps_sing, exclusion_radius, &grids[0]);
        for (k, v) in ga_certificates(&p, &r, eps_rel, Some(&exclude))? {
            samples.entry(k).or_default().push((d.h(), v));
        }
    }
    Ok(fit_all(samples))
}

/// Dirac-level counterpart of [`ga_convergence_with`].
pub fn dirac_convergence(
    build: impl Fn(&Domain) -> Result<DiracProblem>,
    grids: &[Domain],
    basepoint: Complex64,
    eps_rel: f64,
    exclusion_radius: f64,
    adjust: impl Fn(&mut TransformResult),
) -> Result<BTreeMap<String, ConvergenceStudy>> {
    let mut samples: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for d in grids {
        let p = build(d)?;
        let mut r = dirac_transform(&p, &TransformOptions { basepoint, eps_rel })?;
        adjust(&mut r);
        let exclude = study_exclusion(&r.det, r.eps_sing, exclusion_radius, &grids[0]);
        for (k, v) in dirac_certificates(&p, &r, Some(&exclude))? {
            samples.entry(k).or_default().push((d.h(), v));
        }
    }
    Ok(fit_all(samples))
}

/// Nodes of `fine` that are not interior nodes of `coarse`. Everything is
/// kept when the grids are not nested.
pub fn off_coarse_nodes(fine: &Domain, coarse: &Domain) -> Mask {
    let nested = |nf: usize, nc: usize| (nf - 1).is_multiple_of(nc - 1);
    let same_box = fine.x_min() == coarse.x_min()
        && fine.x_max() == coarse.x_max()
        && fine.y_min() == coarse.y_min()
        && fine.y_max() == coarse.y_max();
    if !same_box || !nested(fine.nx(), coarse.nx()) || !nested(fine.ny(), coarse.ny()) {
        return Mask::empty(fine);
    }
    let (sx, sy) = ((fine.nx() - 1) / (coarse.nx() - 1), (fine.ny() - 1) / (coarse.ny() - 1));
    Mask::from_predicate(fine, |idx| {
        let (ix, iy) = fine.node_of(idx);
        ix % sx != 0 || iy % sy != 0 || !coarse.is_interior(ix / sx, iy / sy)
    })
}

fn study_exclusion(det: &GridField, eps: f64, radius: f64, coarse: &Domain) -> Mask {
    let off = off_coarse_nodes(det.domain(), coarse);
    match pole_band(det, eps, radius) {
        Some(band) => off.union(&band),
        None => off,
    }
}

fn pole_band(det: &GridField, eps: f64, radius: f64) -> Option<Mask> {
    (radius > 0.0).then(|| exclusion_band(det.domain(), &locate_singular_set(det, eps).points, radius))
}

fn fit_all(samples: BTreeMap<String, Vec<(f64, f64)>>) -> BTreeMap<String, ConvergenceStudy> {
    samples
        .into_iter()
        .map(|(k, points)| {
            let order = fit_order(&points);
            (k, ConvergenceStudy { points, order })
        })
        .collect()
}

/// Nodes with small `|det Ω|` and points on its zero contour.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSet {
    pub mask: Mask,
    pub points: Vec<Complex64>,
}

#[derive(Clone, Copy)]
enum Component {
    Re,
    Im,
    Both,
}

/// Root in `[0, 1]` of the quadratic through `(0, s0)`, `(1, s1)` and
/// `(t2, s2)`; falls back to linear interpolation.
fn edge_root(s0: f64, s1: f64, t2: f64, s2: f64) -> f64 {
    let linear = s0 / (s0 - s1);
    // s(t) = s0 + b t + a t²
    let a = ((s2 - s0) / t2 - (s1 - s0)) / (t2 - 1.0);
    let b = s1 - s0 - a;
    if a.abs() < 1e-14 * (b.abs() + s0.abs()) {
        return linear;
    }
    let disc = b * b - 4.0 * a * s0;
    if disc < 0.0 {
        return linear;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let roots = [q / a, if q != 0.0 { s0 / q } else { f64::NAN }];
    roots.into_iter().filter(|t| (-1e-12..=1.0 + 1e-12).contains(t)).min_by(|x, y| (x - linear).abs().total_cmp(&(y - linear).abs())).unwrap_or(linear)
}

/// Mask of `|det| < eps` plus contour points where the determinant changes
/// sign along grid edges. Real- or imaginary-valued determinants (the GA
/// case) use that component; otherwise both components must cross on the
/// same edge.
pub fn locate_singular_set(det: &GridField, eps: f64) -> SingularSet {
    let d = *det.domain();
    let mask = Mask::from_predicate(&d, |idx| {
        let v = det.values()[idx];
        !v.is_finite() || v.norm() < eps
    });
    let re_max = det.values().iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let im_max = det.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let comp = if im_max <= 1e-12 * re_max {
        Component::Re
    } else if re_max <= 1e-12 * im_max {
        Component::Im
    } else {
        Component::Both
    };

    let mut points = Vec::new();
    let scalar = |idx: usize, re: bool| if re { det.values()[idx].re } else { det.values()[idx].im };
    let cross = |a: usize, b: usize, c: usize, tc: f64, re: bool| -> Option<f64> {
        let (sa, sb) = (scalar(a, re), scalar(b, re));
        (sa * sb < 0.0).then(|| edge_root(sa, sb, tc, scalar(c, re)))
    };
    let mut edge = |a: usize, b: usize, c: usize, tc: f64, za: Complex64, zb: Complex64| {
        let t = match comp {
            Component::Re => cross(a, b, c, tc, true),
            Component::Im => cross(a, b, c, tc, false),
            Component::Both => match (cross(a, b, c, tc, true), cross(a, b, c, tc, false)) {
                (Some(t1), Some(t2)) => Some(0.5 * (t1 + t2)),
                _ => None,
            },
        };
        if let Some(t) = t {
            points.push(za + (zb - za) * t);
        }
    };
    for iy in 0..d.ny() {
        for ix in 0..d.nx() - 1 {
            let (c, tc) = if ix + 2 < d.nx() { (d.index(ix + 2, iy), 2.0) } else { (d.index(ix - 1, iy), -1.0) };
            edge(d.index(ix, iy), d.index(ix + 1, iy), c, tc, d.z(ix, iy), d.z(ix + 1, iy));
        }
    }
    for ix in 0..d.nx() {
        for iy in 0..d.ny() - 1 {
            let (c, tc) = if iy + 2 < d.ny() { (d.index(ix, iy + 2), 2.0) } else { (d.index(ix, iy - 1), -1.0) };
            edge(d.index(ix, iy), d.index(ix, iy + 1), c, tc, d.z(ix, iy), d.z(ix, iy + 1));
        }
    }
    // nodes sitting exactly on the contour
    for (idx, (_, _, z)) in d.nodes().enumerate() {
        let v = det.values()[idx];
        let on = match comp {
            Component::Re => v.re == 0.0,
            Component::Im => v.im == 0.0,
            Component::Both => v.re == 0.0 && v.im == 0.0,
        };
        if on {
            points.push(z);
        }
    }
    SingularSet { mask, points }
}

/// Nodes within distance `radius` of any of `points`.
pub fn exclusion_band(d: &Domain, points: &[Complex64], radius: f64) -> Mask {
    let zs: Vec<Complex64> = d.nodes().map(|(_, _, z)| z).collect();
    Mask::from_predicate(d, |idx| points.iter().any(|p| (zs[idx] - p).norm() < radius))
}
