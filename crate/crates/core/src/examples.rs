//! Closed forms of the two explicit example families (`u ≡ 0`, constant or
//! holomorphic seeds). They serve as oracles for the generic pipeline and as
//! the CLI presets `ex1-line-pole` and `ex2-circle-pole`.

use num_complex::Complex64;

use crate::error::{MoutardError, Result};
use crate::expr::{Polynomial, SeedExpr};
use crate::ga::{AlphaTable, GaProblem, GaSeed};
use crate::grid::{dbar, sample, Domain, GridField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn field(d: &Domain, e: &SeedExpr) -> Result<GridField> {
    sample(d, |z| e.eval(z))
}

// 8-point Gauss-Legendre on [0, 1].
const GL_X: [f64; 8] = [
    0.019_855_071_751_231_856,
    0.101_666_761_293_186_63,
    0.237_233_795_041_835_5,
    0.408_282_678_752_175_1,
    0.591_717_321_247_824_9,
    0.762_766_204_958_164_5,
    0.898_333_238_706_813_4,
    0.980_144_928_248_768_1,
];
const GL_W: [f64; 8] = [
    0.050_614_268_145_188_13,
    0.111_190_517_226_687_24,
    0.156_853_322_938_943_64,
    0.181_341_891_689_180_99,
    0.181_341_891_689_180_99,
    0.156_853_322_938_943_64,
    0.111_190_517_226_687_24,
    0.050_614_268_145_188_13,
];
const GL_PANELS: usize = 16;

/// Holomorphic antiderivative of `a·b` vanishing at a basepoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Antiderivative {
    /// Exact coefficient shift.
    Exact { poly: Polynomial, offset: Complex64 },
    /// Composite Gauss-Legendre along the segment from the basepoint.
    Approximate { a: SeedExpr, b: SeedExpr, basepoint: Complex64 },
}

impl Antiderivative {
    pub fn of_product(a: &SeedExpr, b: &SeedExpr, basepoint: Complex64) -> Self {
        match (a.as_polynomial(), b.as_polynomial()) {
            (Some(pa), Some(pb)) => {
                let poly = pa.mul(&pb).antiderivative();
                let offset = poly.eval(basepoint);
                Antiderivative::Exact { poly, offset }
            }
            _ => Antiderivative::Approximate { a: a.clone(), b: b.clone(), basepoint },
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Antiderivative::Exact { .. })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Antiderivative::Exact { poly, offset } => Ok(poly.eval(z) - offset),
            Antiderivative::Approximate { a, b, basepoint } => {
                let dz = z - basepoint;
                let mut acc = ZERO;
                for panel in 0..GL_PANELS {
                    for (x, w) in GL_X.iter().zip(GL_W) {
                        let t = (panel as f64 + x) / GL_PANELS as f64;
                        let s = basepoint + dz * t;
                        acc += a.eval(s)? * b.eval(s)? * w;
                    }
                }
                Ok(acc * dz / GL_PANELS as f64)
            }
        }
    }
}

/// `F − F̄ + iα`.
fn imaginary_potential(f: Complex64, alpha: f64) -> Complex64 {
    f - f.conj() + I * alpha
}

/// `N = 1`, `ψ(1) = f`, `ψ⁺(1) = f⁺` with holomorphic seeds and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Example1Params {
    pub f: SeedExpr,
    pub f_plus: SeedExpr,
    pub psi0: SeedExpr,
    pub psip0: SeedExpr,
    pub alpha11: f64,
    pub alpha01: f64,
    pub alpha10: f64,
    /// Point where every potential takes its constant value.
    pub basepoint: Complex64,
}

impl Example1Params {
    /// `C = C⁺ = 1`, `c_{1,1} = i`, `ψ(0) = ψ⁺(0) = 1`: pole line `y = −1/2`.
    pub fn line_pole() -> Self {
        let one = SeedExpr::constant(Complex64::new(1.0, 0.0));
        Example1Params {
            f: one.clone(),
            f_plus: one.clone(),
            psi0: one.clone(),
            psip0: one,
            alpha11: 1.0,
            alpha01: 0.0,
            alpha10: 0.0,
            basepoint: ZERO,
        }
    }

    /// Max `|∂_z̄|` of the four expressions sampled on `d`.
    pub fn holomorphy_defect(&self, d: &Domain) -> Result<f64> {
        let mut worst = 0.0_f64;
        for e in [&self.f, &self.f_plus, &self.psi0, &self.psip0] {
            worst = worst.max(dbar(&field(d, e)?).interior_max_abs(None));
        }
        Ok(worst)
    }

    pub fn problem(&self, d: &Domain) -> Result<GaProblem> {
        Ok(GaProblem {
            u: GridField::zeros(*d),
            seeds: vec![GaSeed { psi: field(d, &self.f)?, psip: field(d, &self.f_plus)? }],
            alphas: AlphaTable::zeros(1).with(1, 1, self.alpha11).with(0, 1, self.alpha01).with(1, 0, self.alpha10),
            psi0: Some(field(d, &self.psi0)?),
            psip0: Some(field(d, &self.psip0)?),
        })
    }
}

/// Closed-form evaluables of example 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Example1Closed {
    pub params: Example1Params,
    pub f11: Antiderivative,
    pub f01: Antiderivative,
    pub f10: Antiderivative,
}

pub fn ex1_closed_forms(p: &Example1Params) -> Example1Closed {
    Example1Closed {
        f11: Antiderivative::of_product(&p.f, &p.f_plus, p.basepoint),
        f01: Antiderivative::of_product(&p.psi0, &p.f_plus, p.basepoint),
        f10: Antiderivative::of_product(&p.f, &p.psip0, p.basepoint),
        params: p.clone(),
    }
}

impl Example1Closed {
    /// All antiderivatives are exact polynomials.
    pub fn is_exact(&self) -> bool {
        self.f11.is_exact() && self.f01.is_exact() && self.f10.is_exact()
    }

    pub fn omega11(&self, z: Complex64) -> Result<Complex64> {
        Ok(imaginary_potential(self.f11.eval(z)?, self.params.alpha11))
    }

    pub fn omega01(&self, z: Complex64) -> Result<Complex64> {
        Ok(imaginary_potential(self.f01.eval(z)?, self.params.alpha01))
    }

    pub fn omega10(&self, z: Complex64) -> Result<Complex64> {
        Ok(imaginary_potential(self.f10.eval(z)?, self.params.alpha10))
    }

    /// `ũ = f f̄⁺ / ω_{1,1}`.
    pub fn u_t(&self, z: Complex64) -> Result<Complex64> {
        let p = &self.params;
        Ok(p.f.eval(z)? * p.f_plus.eval(z)?.conj() / self.omega11(z)?)
    }

    /// `ψ̃(0) = ψ(0) − f ω_{0,1}/ω_{1,1}`.
    pub fn psi_t(&self, z: Complex64) -> Result<Complex64> {
        let p = &self.params;
        Ok(p.psi0.eval(z)? - p.f.eval(z)? * self.omega01(z)? / self.omega11(z)?)
    }

    /// `ψ̃⁺(0) = ψ⁺(0) − f⁺ ω_{1,0}/ω_{1,1}`.
    pub fn psip_t(&self, z: Complex64) -> Result<Complex64> {
        let p = &self.params;
        Ok(p.psip0.eval(z)? - p.f_plus.eval(z)? * self.omega10(z)? / self.omega11(z)?)
    }
}

/// Side of the pole line `𝓛`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    LambdaPlus,
    LambdaMinus,
    PoleLine,
}

/// Sign of `Im(2CC⁺z + c_{1,1})` for constant seeds `C`, `C⁺`.
pub fn ex1_regions(c: Complex64, c_plus: Complex64, c11: Complex64, z: Complex64) -> Region {
    let s = (2.0 * c * c_plus * z + c11).im;
    if s > 0.0 {
        Region::LambdaPlus
    } else if s < 0.0 {
        Region::LambdaMinus
    } else {
        Region::PoleLine
    }
}

/// `N = 2` with constant seeds `f_j`, `f⁺_j` and `c_{j,k} = i·alphas[j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Example2Params {
    pub f: [Complex64; 2],
    pub f_plus: [Complex64; 2],
    pub alphas: [[f64; 3]; 3],
    pub psi0: SeedExpr,
    pub psip0: SeedExpr,
    pub basepoint: Complex64,
}

impl Example2Params {
    /// `f_1 = f⁺_1 = 1`, `f_2 = f⁺_2 = i`, `c_{1,1} = c_{2,2} = iα`,
    /// `c_{1,2} = iβ`, `c_{2,1} = c21_sign·iβ`. The family proper has
    /// `c21_sign = −1`; `+1` gives `σ < 0`.
    pub fn family(alpha: f64, beta: f64, c21_sign: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let mut alphas = [[0.0; 3]; 3];
        alphas[1][1] = alpha;
        alphas[2][2] = alpha;
        alphas[1][2] = beta;
        alphas[2][1] = c21_sign * beta;
        Example2Params {
            f: [one, I],
            f_plus: [one, I],
            alphas,
            psi0: SeedExpr::from_node(crate::expr::Node::Z),
            psip0: SeedExpr::constant(one),
            basepoint: ZERO,
        }
    }

    /// `α = 0`, `β = 2`: `det Ω = 4|z|² − 4`, `ũ = 1/(|z|² − 1)`.
    pub fn circle_pole() -> Self {
        Self::family(0.0, 2.0, -1.0)
    }

    /// `c_{j,k}`, indices `0..=2`.
    pub fn c(&self, j: usize, k: usize) -> Complex64 {
        I * self.alphas[j][k]
    }

    fn fj(&self, j: usize) -> Complex64 {
        self.f[j - 1]
    }

    fn fpk(&self, k: usize) -> Complex64 {
        self.f_plus[k - 1]
    }

    /// Coefficient of `z z̄` inside `2Re[·]` of `det Ω`.
    fn quadratic(&self) -> Complex64 {
        let (f1, f2, g1, g2) = (self.f[0], self.f[1], self.f_plus[0], self.f_plus[1]);
        f2 * g1 * (f1 * g2).conj() - f1 * g1 * (f2 * g2).conj()
    }

    /// Coefficient of `z` inside `2Re[·]` of `det Ω`.
    fn linear(&self) -> Complex64 {
        let (f1, f2, g1, g2) = (self.f[0], self.f[1], self.f_plus[0], self.f_plus[1]);
        self.c(2, 2) * f1 * g1 + self.c(1, 1) * f2 * g2 - self.c(1, 2) * f2 * g1 - self.c(2, 1) * f1 * g2
    }

    /// Numerator of `ũ`.
    fn u_numerator(&self) -> Complex64 {
        let (f1, f2, g1, g2) = (self.f[0], self.f[1], self.f_plus[0], self.f_plus[1]);
        f1 * g1.conj() * self.c(2, 2) - f2 * g1.conj() * self.c(1, 2) - f1 * g2.conj() * self.c(2, 1)
            + f2 * g2.conj() * self.c(1, 1)
    }

    fn constant_term(&self) -> Complex64 {
        self.c(1, 1) * self.c(2, 2) - self.c(2, 1) * self.c(1, 2)
    }

    pub fn problem(&self, d: &Domain) -> Result<GaProblem> {
        let mut alphas = AlphaTable::zeros(2);
        for j in 0..3 {
            for k in 0..3 {
                alphas.set(j, k, self.alphas[j][k]);
            }
        }
        let seeds = (0..2)
            .map(|j| GaSeed { psi: GridField::constant(*d, self.f[j]), psip: GridField::constant(*d, self.f_plus[j]) })
            .collect();
        Ok(GaProblem {
            u: GridField::zeros(*d),
            seeds,
            alphas,
            psi0: Some(field(d, &self.psi0)?),
            psip0: Some(field(d, &self.psip0)?),
        })
    }
}

/// The three nondegeneracy conditions under which `ũ` is radially
/// symmetric and non-trivial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadialConditions {
    pub linear_term_vanishes: bool,
    pub numerator_nonzero: bool,
    pub quadratic_nonzero: bool,
}

impl RadialConditions {
    pub fn all(&self) -> bool {
        self.linear_term_vanishes && self.numerator_nonzero && self.quadratic_nonzero
    }
}

pub fn ex2_conditions(p: &Example2Params) -> RadialConditions {
    let scale = p.f.iter().chain(&p.f_plus).map(|v| v.norm()).fold(0.0, f64::max).powi(2)
        * p.alphas.iter().flatten().map(|a| a.abs()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    RadialConditions {
        linear_term_vanishes: p.linear().norm() <= tol,
        numerator_nonzero: p.u_numerator().norm() > tol,
        quadratic_nonzero: p.quadratic().re.abs() > 1e-12 * scale,
    }
}

/// Closed-form evaluables of example 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Example2Closed {
    pub params: Example2Params,
    /// `Ψ`, `Ψ⁺`.
    pub big_psi: Antiderivative,
    pub big_psip: Antiderivative,
}

pub fn ex2_closed_forms(p: &Example2Params) -> Example2Closed {
    let one = SeedExpr::constant(Complex64::new(1.0, 0.0));
    Example2Closed {
        big_psi: Antiderivative::of_product(&p.psi0, &one, p.basepoint),
        big_psip: Antiderivative::of_product(&one, &p.psip0, p.basepoint),
        params: p.clone(),
    }
}

impl Example2Closed {
    pub fn is_exact(&self) -> bool {
        self.big_psi.is_exact() && self.big_psip.is_exact()
    }

    /// `ω_{j,k}` for `j, k ∈ {0, 1, 2}`, not both zero.
    pub fn omega(&self, j: usize, k: usize, z: Complex64) -> Result<Complex64> {
        let p = &self.params;
        let zb = z - p.basepoint;
        let f = match (j, k) {
            (0, 0) => return Err(MoutardError::Shape("ω_{0,0} is not defined".into())),
            (0, k) => self.big_psi.eval(z)? * p.fpk(k),
            (j, 0) => p.fj(j) * self.big_psip.eval(z)?,
            (j, k) => p.fj(j) * p.fpk(k) * zb,
        };
        Ok(f - f.conj() + p.c(j, k))
    }

    /// `det Ω` in expanded form.
    pub fn det(&self, z: Complex64) -> Complex64 {
        let p = &self.params;
        let z = z - p.basepoint;
        let inner = p.quadratic() * z.norm_sqr() + p.linear() * z;
        Complex64::new(2.0 * inner.re, 0.0) + p.constant_term()
    }

    /// `ω_{1,1}ω_{2,2} − ω_{1,2}ω_{2,1}`.
    pub fn det_direct(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.omega(1, 1, z)? * self.omega(2, 2, z)? - self.omega(1, 2, z)? * self.omega(2, 1, z)?)
    }

    pub fn u_t(&self, z: Complex64) -> Complex64 {
        self.params.u_numerator() / self.det(z)
    }

    pub fn psi_t(&self, z: Complex64) -> Result<Complex64> {
        let p = &self.params;
        let (f1, f2, g1, g2) = (p.f[0], p.f[1], p.f_plus[0], p.f_plus[1]);
        let zb = (z - p.basepoint).conj();
        let a = (-f1 * (f2 * g2).conj() + f2 * (f1 * g2).conj()) * zb + f1 * p.c(2, 2) - f2 * p.c(1, 2);
        let b = (f1 * (f2 * g1).conj() - f2 * (f1 * g1).conj()) * zb - f1 * p.c(2, 1) + f2 * p.c(1, 1);
        Ok(p.psi0.eval(z)? - (a * self.omega(0, 1, z)? + b * self.omega(0, 2, z)?) / self.det(z))
    }

    pub fn psip_t(&self, z: Complex64) -> Result<Complex64> {
        let p = &self.params;
        let (f1, f2, g1, g2) = (p.f[0], p.f[1], p.f_plus[0], p.f_plus[1]);
        let zb = (z - p.basepoint).conj();
        let a = (-g1 * (f2 * g2).conj() + g2 * (f2 * g1).conj()) * zb + g1 * p.c(2, 2) - g2 * p.c(2, 1);
        let b = (g1 * (f1 * g2).conj() - g2 * (f1 * g1).conj()) * zb - g1 * p.c(1, 2) + g2 * p.c(1, 1);
        Ok(p.psip0.eval(z)? - (a * self.omega(1, 0, z)? + b * self.omega(2, 0, z)?) / self.det(z))
    }
}

/// `σ` and, when `σ ≥ 0`, the radius where `det Ω` vanishes along the
/// positive real ray from the basepoint.
pub fn ex2_sigma_and_circle(p: &Example2Params) -> Result<(f64, Option<f64>)> {
    let denom = 2.0 * p.quadratic().re;
    if denom == 0.0 {
        return Err(MoutardError::Degenerate("2Re(f₂f₁⁺ conj(f₁f₂⁺) − f₁f₁⁺ conj(f₂f₂⁺)) = 0".into()));
    }
    let sigma = -p.constant_term().re / denom;
    if sigma < 0.0 {
        return Ok((sigma, None));
    }
    let closed = ex2_closed_forms(p);
    let g = |r: f64| closed.det(p.basepoint + r).re;
    let g0 = g(0.0);
    if g0 == 0.0 {
        return Ok((sigma, Some(0.0)));
    }
    let mut hi = 2.0 * sigma.sqrt().max(0.5);
    while g(hi).signum() == g0.signum() {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok((sigma, None));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == g0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((sigma, Some(0.5 * (lo + hi))))
}

/// Angles sampled per circle by [`ex2_decay_check`].
pub const DECAY_ANGLES: usize = 64;

/// Max over the circles of `|ũ|·|z|²`.
pub fn ex2_decay_check(p: &Example2Params, radii: &[f64]) -> f64 {
    let closed = ex2_closed_forms(p);
    let mut worst = 0.0_f64;
    for &r in radii {
        for k in 0..DECAY_ANGLES {
            let z = p.basepoint + Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / DECAY_ANGLES as f64);
            worst = worst.max(closed.u_t(z).norm() * r * r);
        }
    }
    worst
}
