//! Moutard potentials `ω_{j,k}` recovered from their exact differential
//!
//! ```text
//! dω = P dz + Q dz̄,   P = ψ_1(j) ψ⁺_1(k),   Q = −ψ_2(j) ψ⁺_2(k)
//! ```
//!
//! by composite-trapezoid quadrature along axis-aligned paths. With
//! `dz = dx + i dy` a horizontal step contributes `(P + Q) dx` and a vertical
//! step `i (P − Q) dy`.

use num_complex::Complex64;

use crate::dirac::Spinor;
use crate::error::{MoutardError, Result};
use crate::grid::{dbar, dz, Domain, GridField};

/// The pair of coefficients of `P dz + Q dz̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub p: GridField,
    pub q: GridField,
}

impl OneForm {
    pub fn new(p: GridField, q: GridField) -> Result<Self> {
        p.check_same_domain(&q)?;
        Ok(OneForm { p, q })
    }

    pub fn domain(&self) -> &Domain {
        self.p.domain()
    }

    pub fn scale(&self, a: Complex64) -> OneForm {
        OneForm { p: self.p.scale(a), q: self.q.scale(a) }
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        OneForm { p: self.p.add(&other.p), q: self.q.add(&other.q) }
    }

    fn scale_hint(&self) -> f64 {
        self.p.max_abs().max(self.q.max_abs())
    }
}

/// A pure-imaginary constant `i·alpha`, stored by its real coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImaginaryConstant(pub f64);

impl ImaginaryConstant {
    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn value(self) -> Complex64 {
        Complex64::new(0.0, self.0)
    }

    /// Accepts `c` only if its real part is exactly zero; `entry` names the
    /// offending constant in the error.
    pub fn try_from_value(c: Complex64, entry: &str) -> Result<Self> {
        if c.re != 0.0 || !c.im.is_finite() {
            return Err(MoutardError::NonImaginaryConstant { entry: entry.to_string(), re: c.re, im: c.im });
        }
        Ok(ImaginaryConstant(c.im))
    }
}

/// The one-form whose potential is `ω_{j,k}`, built from a solution `ψ(j)`
/// of the Dirac system and `ψ⁺(k)` of its conjugate.
pub fn omega_integrand(psi_j: &Spinor, psip_k: &Spinor) -> Result<OneForm> {
    psi_j.c1.check_same_domain(&psip_k.c1)?;
    let p = psi_j.c1.mul(&psip_k.c1);
    let q = psi_j.c2.mul(&psip_k.c2).scale(Complex64::new(-1.0, 0.0));
    Ok(OneForm { p, q })
}

/// Max over interior nodes of `|∂_z̄ P − ∂_z Q|`.
pub fn check_closedness(w: &OneForm) -> f64 {
    dbar(&w.p).sub(&dz(&w.q)).interior_max_abs(None)
}

fn base_node(d: &Domain, basepoint: Complex64) -> Result<(usize, usize)> {
    d.node_at(basepoint).ok_or(MoutardError::BasepointOffGrid { x: basepoint.re, y: basepoint.im })
}

/// Cumulative trapezoid of `g` sampled at abscissae `t`, anchored to zero at
/// index `b`.
fn cumulative_from(t: &[f64], g: &[Complex64], b: usize) -> Vec<Complex64> {
    let n = g.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in b + 1..n {
        out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (g[k - 1] + g[k]);
    }
    for k in (0..b).rev() {
        out[k] = out[k + 1] - 0.5 * (t[k + 1] - t[k]) * (g[k] + g[k + 1]);
    }
    out
}

fn axes(d: &Domain) -> (Vec<f64>, Vec<f64>) {
    ((0..d.nx()).map(|i| d.x(i)).collect(), (0..d.ny()).map(|j| d.y(j)).collect())
}

fn integrate_from_node(w: &OneForm, (bx, by): (usize, usize), c0: Complex64, horizontal_first: bool) -> GridField {
    let d = *w.domain();
    let (xs, ys) = axes(&d);
    let (nx, ny) = (d.nx(), d.ny());
    let i = Complex64::i();
    let horiz = |iy: usize| -> Vec<Complex64> {
        let g: Vec<Complex64> = (0..nx).map(|ix| w.p.get(ix, iy) + w.q.get(ix, iy)).collect();
        cumulative_from(&xs, &g, bx)
    };
    let vert = |ix: usize| -> Vec<Complex64> {
        let g: Vec<Complex64> = (0..ny).map(|iy| i * (w.p.get(ix, iy) - w.q.get(ix, iy))).collect();
        cumulative_from(&ys, &g, by)
    };

    let mut values = vec![Complex64::new(0.0, 0.0); d.len()];
    if horizontal_first {
        let along_base_row = horiz(by);
        for ix in 0..nx {
            let column = vert(ix);
            for iy in 0..ny {
                values[d.index(ix, iy)] = c0 + along_base_row[ix] + column[iy];
            }
        }
    } else {
        let along_base_col = vert(bx);
        for iy in 0..ny {
            let row = horiz(iy);
            for ix in 0..nx {
                values[d.index(ix, iy)] = c0 + along_base_col[iy] + row[ix];
            }
        }
    }
    GridField::from_values(d, values).expect("sized from the domain")
}

/// Potential with `ω(basepoint) = c0`, integrated along the L-path that first
/// runs horizontally from the basepoint and then vertically to each node.
pub fn integrate_one_form(w: &OneForm, basepoint: Complex64, c0: Complex64) -> Result<GridField> {
    let node = base_node(w.domain(), basepoint)?;
    Ok(integrate_from_node(w, node, c0, true))
}

/// Same as [`integrate_one_form`] but along the vertical-then-horizontal path.
pub fn integrate_one_form_alternate(w: &OneForm, basepoint: Complex64, c0: Complex64) -> Result<GridField> {
    let node = base_node(w.domain(), basepoint)?;
    Ok(integrate_from_node(w, node, c0, false))
}

/// Max-norm difference between the two path orders.
pub fn path_independence_residual(w: &OneForm, basepoint: Complex64) -> Result<f64> {
    let a = integrate_one_form(w, basepoint, Complex64::new(0.0, 0.0))?;
    let b = integrate_one_form_alternate(w, basepoint, Complex64::new(0.0, 0.0))?;
    Ok(a.sub(&b).max_abs())
}

/// Field scale used to normalise path-independence checks: `|w|_max · diam`.
pub fn potential_scale(w: &OneForm) -> f64 {
    let d = w.domain();
    let diam = (d.x_max() - d.x_min()).hypot(d.y_max() - d.y_min());
    w.scale_hint() * diam
}

/// Potential normalised so that `ω(basepoint) = c`, where the basepoint may
/// sit anywhere in the rectangle. Off-node basepoints integrate from the
/// nearest node and then shift by the bilinear interpolant at the basepoint.
pub fn potential(w: &OneForm, basepoint: Complex64, c: Complex64) -> Result<GridField> {
    let d = *w.domain();
    if let Some(node) = d.node_at(basepoint) {
        return Ok(integrate_from_node(w, node, c, true));
    }
    if !d.contains(basepoint) {
        return Err(MoutardError::PointOutsideDomain { x: basepoint.re, y: basepoint.im });
    }
    let raw = integrate_from_node(w, d.nearest_node(basepoint), Complex64::new(0.0, 0.0), true);
    let shift = c - raw.interpolate(basepoint)?;
    Ok(raw.map(|v| v + shift))
}

/// Node nearest the centre of the rectangle.
pub fn default_basepoint(d: &Domain) -> Complex64 {
    let (ix, iy) = d.nearest_node(d.center());
    d.z(ix, iy)
}

/// Pure-imaginary projection `(ω − ω̄)/2 + i·alpha`. Also returns the
/// max-norm of the discarded real part.
pub fn enforce_imaginary(omega: &GridField, c: ImaginaryConstant) -> (GridField, f64) {
    let discarded = omega.values().iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let projected = omega.map(|v| Complex64::new(0.0, v.im + c.alpha()));
    (projected, discarded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn form(d: Domain, p: impl Fn(Complex64) -> Complex64, q: impl Fn(Complex64) -> Complex64) -> OneForm {
        OneForm::new(GridField::from_fn(d, p), GridField::from_fn(d, q)).unwrap()
    }

    fn spinor(d: Domain, a: impl Fn(Complex64) -> Complex64, b: impl Fn(Complex64) -> Complex64) -> Spinor {
        Spinor { c1: GridField::from_fn(d, a), c2: GridField::from_fn(d, b) }
    }

    #[test]
    fn integrand_examples() {
        let d = Domain::square(-1.0, 1.0, 5).unwrap();
        let one = spinor(d, |_| c(1.0, 0.0), |_| c(1.0, 0.0));
        let w = omega_integrand(&one, &one).unwrap();
        assert!(w.p.values().iter().all(|&v| v == c(1.0, 0.0)));
        assert!(w.q.values().iter().all(|&v| v == c(-1.0, 0.0)));

        // GA lift of constants C, C⁺
        let (cc, ccp) = (c(1.0, 2.0), c(-0.5, 0.3));
        let w = omega_integrand(&spinor(d, |_| cc, |_| cc.conj()), &spinor(d, |_| ccp, |_| ccp.conj())).unwrap();
        assert!(w.p.values().iter().all(|&v| v == cc * ccp));
        assert!(w.q.values().iter().all(|&v| v == -(cc * ccp).conj()));

        let zz = spinor(d, |z| z, |_| c(0.0, 0.0));
        let w = omega_integrand(&zz, &zz).unwrap();
        assert!(w.p.sub(&GridField::from_fn(d, |z| z * z)).max_abs() == 0.0);
        assert!(w.q.max_abs() == 0.0);
    }

    #[test]
    fn integrand_domain_mismatch() {
        let a = spinor(Domain::square(0.0, 1.0, 5).unwrap(), |z| z, |z| z);
        let b = spinor(Domain::square(0.0, 1.0, 7).unwrap(), |z| z, |z| z);
        assert_eq!(omega_integrand(&a, &b), Err(MoutardError::DomainMismatch));
    }

    #[test]
    fn closedness_examples() {
        let d = Domain::square(-1.0, 1.0, 9).unwrap();
        assert_eq!(check_closedness(&form(d, |_| c(2.0, 1.0), |_| c(-3.0, 0.0))), 0.0);
        assert!(check_closedness(&form(d, |z| z * z, |z| z.conj() * z.conj())) < 1e-12);
        assert!(check_closedness(&form(d, |z| z.conj(), |_| c(0.0, 0.0))) > 0.4);
    }

    #[test]
    fn closedness_of_exponential_seed_converges() {
        let r = |n| check_closedness(&form(Domain::square(-1.0, 1.0, n).unwrap(), |z| z.exp(), |_| c(0.0, 0.0)));
        let ratio = r(33) / r(65);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn constant_form_integrates_exactly() {
        let d = Domain::new(-1.0, 1.0, -0.5, 1.5, 9, 17).unwrap();
        let w = form(d, |_| c(1.0, 0.0), |_| c(-1.0, 0.0));
        let om = integrate_one_form(&w, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let want = GridField::from_fn(d, |z| c(0.0, 2.0 * z.im));
        assert!(om.sub(&want).max_abs() < 1e-14);

        let zero = form(d, |_| c(0.0, 0.0), |_| c(0.0, 0.0));
        let om = integrate_one_form(&zero, c(0.0, 0.0), c(0.5, -2.0)).unwrap();
        assert!(om.values().iter().all(|&v| v == c(0.5, -2.0)));
    }

    #[test]
    fn off_grid_basepoint_rejected() {
        let d = Domain::square(-1.0, 1.0, 9).unwrap();
        let w = form(d, |_| c(1.0, 0.0), |_| c(0.0, 0.0));
        assert!(matches!(integrate_one_form(&w, c(0.1, 0.0), c(0.0, 0.0)), Err(MoutardError::BasepointOffGrid { .. })));
        assert!(matches!(potential(&w, c(3.0, 0.0), c(0.0, 0.0)), Err(MoutardError::PointOutsideDomain { .. })));
    }

    #[test]
    fn linear_integrand_matches_closed_antiderivative() {
        // P = z, Q = −z̄  ⇒  ω = (z² − z̄²)/2 + iα; trapezoid is exact on linear data.
        let d = Domain::square(-1.0, 1.0, 21).unwrap();
        let w = form(d, |z| z, |z| -z.conj());
        let om = integrate_one_form(&w, c(0.0, 0.0), c(0.0, 0.7)).unwrap();
        let want = GridField::from_fn(d, |z| (z * z - z.conj() * z.conj()) / 2.0 + c(0.0, 0.7));
        assert!(om.sub(&want).max_abs() < 1e-13);
    }

    #[test]
    fn off_node_anchor_via_interpolation() {
        let d = Domain::new(-1.0, 1.0, -0.4, 1.0, 65, 65).unwrap();
        let w = form(d, |_| c(1.0, 0.0), |_| c(-1.0, 0.0));
        let om = potential(&w, c(0.0, 0.0), c(0.0, 1.0)).unwrap();
        let want = GridField::from_fn(d, |z| c(0.0, 2.0 * z.im + 1.0));
        assert!(om.sub(&want).max_abs() < 1e-13);
    }

    #[test]
    fn path_independence() {
        let d = Domain::square(-1.0, 1.0, 33).unwrap();
        let b = c(0.0, 0.0);
        assert!(path_independence_residual(&form(d, |_| c(1.0, 1.0), |_| c(2.0, 0.0)), b).unwrap() < 1e-14);
        let hol = form(d, |z| z * z, |_| c(0.0, 0.0));
        let r = path_independence_residual(&hol, b).unwrap();
        assert!(r <= 10.0 * d.h() * d.h() * potential_scale(&hol), "{r}");
        let bad = |n| path_independence_residual(&form(Domain::square(-1.0, 1.0, n).unwrap(), |z| z.conj(), |_| c(0.0, 0.0)), b).unwrap();
        assert!(bad(33) > 0.5 && bad(129) > 0.5);
    }

    #[test]
    fn imaginary_projection() {
        let d = Domain::square(-1.0, 1.0, 5).unwrap();
        let om = GridField::from_fn(d, |z| c(0.0, 2.0 * z.im));
        let (p, diag) = enforce_imaginary(&om, ImaginaryConstant(1.0));
        assert!(p.sub(&GridField::from_fn(d, |z| c(0.0, 2.0 * z.im + 1.0))).max_abs() == 0.0);
        assert_eq!(diag, 0.0);

        let (p, diag) = enforce_imaginary(&GridField::constant(d, c(5.0, 0.0)), ImaginaryConstant(-2.0));
        assert!(p.values().iter().all(|&v| v == c(0.0, -2.0)));
        assert_eq!(diag, 5.0);

        let zmz = GridField::from_fn(d, |z| z - z.conj());
        let (p, diag) = enforce_imaginary(&zmz, ImaginaryConstant(0.0));
        assert_eq!(p, zmz);
        assert_eq!(diag, 0.0);
    }

    #[test]
    fn non_imaginary_constant_rejected() {
        assert!(ImaginaryConstant::try_from_value(c(0.0, 2.0), "alpha.1.2").is_ok());
        let err = ImaginaryConstant::try_from_value(c(1.0, 2.0), "alpha.1.2").unwrap_err();
        assert!(err.to_string().contains("alpha.1.2"));
    }

    #[test]
    fn ga_reduced_real_part_stays_at_roundoff() {
        // ψ = e^z, ψ⁺ = 1 lifted: P = e^z, Q = −conj(e^z). Both path legs then
        // integrate purely imaginary data, so the raw real part is roundoff.
        for n in [33, 65] {
            let d = Domain::square(-1.0, 1.0, n).unwrap();
            let w = form(d, |z| z.exp(), |z| -z.exp().conj());
            let om = integrate_one_form(&w, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
            assert!(enforce_imaginary(&om, ImaginaryConstant(0.0)).1 < 1e-13);
        }
    }

    fn cplx() -> impl Strategy<Value = Complex64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| Complex64::new(re, im))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn integration_is_linear(a in cplx(), k in proptest::collection::vec(cplx(), 8), bx in 0usize..9, by in 0usize..9) {
            let d = Domain::new(-1.0, 2.0, -0.5, 1.5, 9, 9).unwrap();
            let w1 = form(d, |z| k[0] + k[1] * z * z.conj(), |z| k[2] * (k[3] * z).exp());
            let w2 = form(d, |z| k[4] * z.conj(), |z| k[5] + k[6] * z.powi(3) + k[7]);
            let b = d.z(bx, by);
            let zero = c(0.0, 0.0);
            let lhs = integrate_one_form(&w1.scale(a).add(&w2), b, zero).unwrap();
            let i1 = integrate_one_form(&w1, b, zero).unwrap();
            let i2 = integrate_one_form(&w2, b, zero).unwrap();
            let rhs = i1.scale(a).add(&i2);
            let scale = 1.0 + i1.max_abs() * a.norm() + i2.max_abs();
            prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-13 * scale);
        }
    }
}
