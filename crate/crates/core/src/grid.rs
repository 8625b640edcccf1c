//! Rectangular grids over the complex plane, sampled fields and the
//! finite-difference Wirtinger derivatives `∂_z` and `∂_z̄`.
//!
//! Nodes are stored row-major with `y` as the outer index, so node `(ix, iy)`
//! lives at `iy * nx + ix`. This is also the emission order of the CSV writer.

use num_complex::Complex64;

use crate::error::{MoutardError, Result};

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]` with `nx × ny` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
}

impl Domain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(MoutardError::InvalidDomain(format!(
                "need finite x_min < x_max and y_min < y_max, got [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        if nx < 3 || ny < 3 {
            return Err(MoutardError::GridTooSmall { nx, ny });
        }
        Ok(Domain { x_min, x_max, y_min, y_max, nx, ny })
    }

    /// Square domain `[lo, hi]²` with `n × n` nodes.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Domain::new(lo, hi, lo, hi, n, n)
    }

    /// Same rectangle, different node counts.
    pub fn with_resolution(&self, nx: usize, ny: usize) -> Result<Self> {
        Domain::new(self.x_min, self.x_max, self.y_min, self.y_max, nx, ny)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }
    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }
    /// Larger of the two spacings.
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn x(&self, ix: usize) -> f64 {
        // Pin the last node to x_max exactly.
        if ix + 1 == self.nx {
            self.x_max
        } else {
            self.x_min + ix as f64 * self.hx()
        }
    }
    pub fn y(&self, iy: usize) -> f64 {
        if iy + 1 == self.ny {
            self.y_max
        } else {
            self.y_min + iy as f64 * self.hy()
        }
    }
    pub fn z(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(self.x(ix), self.y(iy))
    }
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }
    pub fn node_of(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x_min && z.re <= self.x_max && z.im >= self.y_min && z.im <= self.y_max
    }

    pub fn is_interior(&self, ix: usize, iy: usize) -> bool {
        ix > 0 && iy > 0 && ix + 1 < self.nx && iy + 1 < self.ny
    }

    /// Grid node closest to `z` (clamped to the rectangle).
    pub fn nearest_node(&self, z: Complex64) -> (usize, usize) {
        let fx = ((z.re - self.x_min) / self.hx()).round();
        let fy = ((z.im - self.y_min) / self.hy()).round();
        let ix = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let iy = fy.clamp(0.0, (self.ny - 1) as f64) as usize;
        (ix, iy)
    }

    /// The node sitting exactly at `z`, if any (within 1e-9 of a cell).
    pub fn node_at(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.contains(z) {
            return None;
        }
        let (ix, iy) = self.nearest_node(z);
        let tol = 1e-9;
        let on_x = ((z.re - self.x(ix)) / self.hx()).abs() < tol;
        let on_y = ((z.im - self.y(iy)) / self.hy()).abs() < tol;
        (on_x && on_y).then_some((ix, iy))
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    /// Iterator over `(ix, iy, z)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.ny).flat_map(move |iy| (0..self.nx).map(move |ix| (ix, iy, self.z(ix, iy))))
    }
}

/// Complex samples on every node of a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: Domain,
    values: Vec<Complex64>,
}

impl GridField {
    pub fn from_values(domain: Domain, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(MoutardError::InvalidDomain(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                domain.len()
            )));
        }
        Ok(GridField { domain, values })
    }

    pub fn constant(domain: Domain, c: Complex64) -> Self {
        GridField { domain, values: vec![c; domain.len()] }
    }

    pub fn zeros(domain: Domain) -> Self {
        Self::constant(domain, Complex64::new(0.0, 0.0))
    }

    /// Sample a closure that cannot fail.
    pub fn from_fn(domain: Domain, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = domain.nodes().map(|(_, _, z)| f(z)).collect();
        GridField { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[self.domain.index(ix, iy)]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GridField { domain: self.domain, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Elementwise combination; panics if the domains differ (use
    /// [`GridField::check_same_domain`] first at API boundaries).
    pub fn zip_with(&self, other: &GridField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.domain, other.domain, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        GridField { domain: self.domain, values }
    }

    pub fn check_same_domain(&self, other: &GridField) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(MoutardError::DomainMismatch)
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }
    pub fn scale(&self, a: Complex64) -> Self {
        self.map(|v| a * v)
    }
    pub fn add(&self, other: &GridField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &GridField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }
    pub fn mul(&self, other: &GridField) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// Max modulus over all nodes, ignoring non-finite samples.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max modulus over interior nodes that are not excluded by `mask`.
    pub fn interior_max_abs(&self, mask: Option<&Mask>) -> f64 {
        let d = &self.domain;
        let mut m = 0.0_f64;
        for (ix, iy, _) in d.nodes() {
            if !d.is_interior(ix, iy) {
                continue;
            }
            let idx = d.index(ix, iy);
            if mask.is_some_and(|mk| mk.is_set(idx)) {
                continue;
            }
            m = m.max(self.values[idx].norm());
        }
        m
    }

    /// Bilinear interpolation at an arbitrary point inside the rectangle.
    pub fn interpolate(&self, z: Complex64) -> Result<Complex64> {
        let d = &self.domain;
        if !d.contains(z) {
            return Err(MoutardError::PointOutsideDomain { x: z.re, y: z.im });
        }
        let fx = (z.re - d.x_min) / d.hx();
        let fy = (z.im - d.y_min) / d.hy();
        let ix = (fx.floor() as usize).min(d.nx - 2);
        let iy = (fy.floor() as usize).min(d.ny - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let v00 = self.get(ix, iy);
        let v10 = self.get(ix + 1, iy);
        let v01 = self.get(ix, iy + 1);
        let v11 = self.get(ix + 1, iy + 1);
        Ok(v00 * ((1.0 - tx) * (1.0 - ty)) + v10 * (tx * (1.0 - ty)) + v01 * ((1.0 - tx) * ty) + v11 * (tx * ty))
    }
}

/// Per-node exclusion flags (true = excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    nx: usize,
    ny: usize,
    flags: Vec<bool>,
}

impl Mask {
    pub fn empty(domain: &Domain) -> Self {
        Mask { nx: domain.nx(), ny: domain.ny(), flags: vec![false; domain.len()] }
    }

    pub fn from_predicate(domain: &Domain, pred: impl Fn(usize) -> bool) -> Self {
        Mask { nx: domain.nx(), ny: domain.ny(), flags: (0..domain.len()).map(pred).collect() }
    }

    pub fn is_set(&self, idx: usize) -> bool {
        self.flags[idx]
    }
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.flags.len() as f64
    }
    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Grow the mask by `radius` cells in the max-norm (a square footprint).
    pub fn dilate(&self, radius: usize) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (nx, ny) = (self.nx, self.ny);
        let mut out = vec![false; self.flags.len()];
        for iy in 0..ny {
            for ix in 0..nx {
                if !self.flags[iy * nx + ix] {
                    continue;
                }
                let (x0, x1) = (ix.saturating_sub(radius), (ix + radius).min(nx - 1));
                let (y0, y1) = (iy.saturating_sub(radius), (iy + radius).min(ny - 1));
                for jy in y0..=y1 {
                    for jx in x0..=x1 {
                        out[jy * nx + jx] = true;
                    }
                }
            }
        }
        Mask { nx, ny, flags: out }
    }

    pub fn union(&self, other: &Mask) -> Mask {
        let flags = self.flags.iter().zip(&other.flags).map(|(&a, &b)| a || b).collect();
        Mask { nx: self.nx, ny: self.ny, flags }
    }
}

/// Sample a fallible evaluator at every node. The first failing node is
/// reported with its coordinates.
pub fn sample<F, E>(domain: &Domain, f: F) -> Result<GridField>
where
    F: Fn(Complex64) -> std::result::Result<Complex64, E>,
    E: std::fmt::Display,
{
    let mut values = Vec::with_capacity(domain.len());
    for (_, _, z) in domain.nodes() {
        match f(z) {
            Ok(v) => values.push(v),
            Err(e) => {
                return Err(MoutardError::SampleFailed { x: z.re, y: z.im, reason: e.to_string() });
            }
        }
    }
    Ok(GridField { domain: *domain, values })
}

/// Second-order first derivative of a line of samples: centred inside,
/// one-sided three-point at both ends.
fn diff_line(get: impl Fn(usize) -> Complex64, n: usize, i: usize, h: f64) -> Complex64 {
    if i == 0 {
        (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
    } else if i + 1 == n {
        (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h)
    } else {
        (get(i + 1) - get(i - 1)) / (2.0 * h)
    }
}

/// `(∂_x f, ∂_y f)` at every node.
pub fn partials(f: &GridField) -> (Vec<Complex64>, Vec<Complex64>) {
    let d = f.domain();
    let (nx, ny, hx, hy) = (d.nx(), d.ny(), d.hx(), d.hy());
    let mut fx = Vec::with_capacity(d.len());
    let mut fy = Vec::with_capacity(d.len());
    for iy in 0..ny {
        for ix in 0..nx {
            fx.push(diff_line(|k| f.get(k, iy), nx, ix, hx));
            fy.push(diff_line(|k| f.get(ix, k), ny, iy, hy));
        }
    }
    (fx, fy)
}

/// `∂_z̄ f = (∂_x f + i ∂_y f) / 2`.
pub fn dbar(f: &GridField) -> GridField {
    let (fx, fy) = partials(f);
    let i = Complex64::i();
    let values = fx.iter().zip(&fy).map(|(&a, &b)| 0.5 * (a + i * b)).collect();
    GridField { domain: *f.domain(), values }
}

/// `∂_z f = (∂_x f − i ∂_y f) / 2`.
pub fn dz(f: &GridField) -> GridField {
    let (fx, fy) = partials(f);
    let i = Complex64::i();
    let values = fx.iter().zip(&fy).map(|(&a, &b)| 0.5 * (a - i * b)).collect();
    GridField { domain: *f.domain(), values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(matches!(Domain::new(0.0, 1.0, 0.0, 1.0, 2, 5), Err(MoutardError::GridTooSmall { .. })));
        assert!(Domain::new(1.0, 0.0, 0.0, 1.0, 5, 5).is_err());
        assert!(Domain::new(0.0, 1.0, 0.0, f64::NAN, 5, 5).is_err());
    }

    #[test]
    fn sample_identity_corners() {
        let d = Domain::square(0.0, 1.0, 3).unwrap();
        let f = sample(&d, Ok::<_, String>).unwrap();
        assert_eq!(f.get(0, 0), c(0.0, 0.0));
        assert_eq!(f.get(2, 0), c(1.0, 0.0));
        assert_eq!(f.get(0, 2), c(0.0, 1.0));
        assert_eq!(f.get(2, 2), c(1.0, 1.0));
        // y is the outer index
        assert_eq!(f.values()[1], c(0.5, 0.0));
    }

    #[test]
    fn sample_constant_and_square() {
        let d = Domain::new(-3.0, 2.0, -1.0, 4.0, 4, 6).unwrap();
        let one = sample(&d, |_| Ok::<_, String>(c(1.0, 0.0))).unwrap();
        assert!(one.values().iter().all(|&v| v == c(1.0, 0.0)));
        let d = Domain::square(0.0, 1.0, 3).unwrap();
        let sq = sample(&d, |z| Ok::<_, String>(z * z)).unwrap();
        assert_eq!(sq.get(2, 2), c(0.0, 2.0));
    }

    #[test]
    fn sample_reports_failing_node() {
        let d = Domain::square(0.0, 1.0, 3).unwrap();
        let err = sample(&d, |z| if z.re > 0.9 && z.im > 0.9 { Err("boom") } else { Ok(z) }).unwrap_err();
        match err {
            MoutardError::SampleFailed { x, y, .. } => assert_eq!((x, y), (1.0, 1.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wirtinger_on_elementary_fields() {
        let d = Domain::new(-1.0, 2.0, -0.5, 1.5, 7, 9).unwrap();
        let z = GridField::from_fn(d, |z| z);
        let zb = GridField::from_fn(d, |z| z.conj());
        let modsq = GridField::from_fn(d, |z| z * z.conj());
        let sq = GridField::from_fn(d, |z| z * z);

        assert!(dbar(&z).max_abs() < 1e-12);
        assert!(dbar(&zb).map(|v| v - 1.0).max_abs() < 1e-12);
        assert!(dbar(&modsq).sub(&z).max_abs() < 1e-12);
        assert!(dz(&z).map(|v| v - 1.0).max_abs() < 1e-12);
        assert!(dz(&zb).max_abs() < 1e-12);
        // quadratics are differentiated exactly, boundaries included
        assert!(dz(&sq).sub(&z.scale(c(2.0, 0.0))).max_abs() < 1e-12);
    }

    #[test]
    fn conjugation_identity() {
        let d = Domain::square(-1.0, 1.0, 17).unwrap();
        let f = GridField::from_fn(d, |z| (z * z.conj()).exp() + z.powi(3));
        let lhs = dbar(&f.conj());
        let rhs = dz(&f).conj();
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    #[test]
    fn dbar_converges_at_second_order() {
        let err = |n: usize| {
            let d = Domain::square(-1.0, 1.0, n).unwrap();
            dbar(&GridField::from_fn(d, |z| z.exp())).interior_max_abs(None)
        };
        let ratio = err(33) / err(65);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mask_dilation_square_footprint() {
        let d = Domain::square(0.0, 1.0, 9).unwrap();
        let m = Mask::from_predicate(&d, |i| i == d.index(4, 4));
        let g = m.dilate(2);
        assert_eq!(g.count(), 25);
        assert!(g.is_set(d.index(2, 6)));
        assert!(!g.is_set(d.index(1, 4)));
    }

    #[test]
    fn interpolation_is_exact_on_bilinear_data() {
        let d = Domain::new(-1.0, 1.0, -0.4, 1.0, 9, 11).unwrap();
        let f = GridField::from_fn(d, |z| c(2.0, 1.0) * z + c(0.0, 3.0) * z.conj() + c(1.0, -1.0));
        let p = c(0.123, -0.017);
        let want = c(2.0, 1.0) * p + c(0.0, 3.0) * p.conj() + c(1.0, -1.0);
        assert!((f.interpolate(p).unwrap() - want).norm() < 1e-13);
        assert!(f.interpolate(c(5.0, 0.0)).is_err());
    }

    #[test]
    fn node_lookup() {
        let d = Domain::square(-2.0, 2.0, 129).unwrap();
        assert_eq!(d.node_at(c(0.0, 0.0)), Some((64, 64)));
        assert_eq!(d.node_at(c(0.01, 0.0)), None);
        let e = Domain::new(-1.0, 1.0, -0.4, 1.0, 65, 65).unwrap();
        assert_eq!(e.node_at(c(0.0, 0.0)), None);
    }
}
