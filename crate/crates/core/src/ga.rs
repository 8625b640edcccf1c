//! Moutard transform for generalized analytic functions `∂_z̄ ψ = u ψ̄`.
//!
//! The GA equation is the Dirac system under `v = ū`, `ψ_2 = ψ̄`, and the
//! conjugate equation `∂_z̄ ψ⁺ = −ū ψ̄⁺` is the conjugate system under
//! `ψ⁺_2 = ψ̄⁺`. In that reduction every `ω_{j,k}` is chosen imaginary-valued,
//! so `Ω̄ = −Ω` and
//!
//! ```text
//! ũ     = u + [ψ(1..N)] Ω⁻¹ [ψ̄⁺(1..N)]ᵗ
//! ψ̃(0)  = ψ(0)  − [ψ(1..N)]  Ω⁻¹     [ω_{0,1..N}]ᵗ
//! ψ̃⁺(0) = ψ⁺(0) − [ψ⁺(1..N)] (Ω⁻¹)ᵗ [ω_{1..N,0}]ᵗ
//! ```
//!
//! The per-node solves are shared with [`crate::dirac`].

use num_complex::Complex64;

use crate::dirac::{
    apply_transform, Constants, DiracProblem, FactoredOmega, OmegaMatrix, SeedPair, Spinor, TransformOptions,
    TransformResult,
};
use crate::error::{MoutardError, Result};
use crate::grid::{Domain, GridField, Mask};
use crate::potentials::{enforce_imaginary, omega_integrand, potential, ImaginaryConstant};

/// A seed `ψ(j)` of the GA equation with `ψ⁺(j)` of its conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaSeed {
    pub psi: GridField,
    pub psip: GridField,
}

/// `ψ ↦ (ψ, ψ̄)`.
pub fn lift(psi: &GridField) -> Spinor {
    Spinor { c1: psi.clone(), c2: psi.conj() }
}

pub fn lift_seed(s: &GaSeed) -> SeedPair {
    SeedPair { psi: lift(&s.psi), psip: lift(&s.psip) }
}

/// The two GA solutions carried by a Dirac solution with `v = ū`:
/// `(ψ_1 + ψ̄_2)/2` and `(ψ_1 − ψ̄_2)/(2i)`.
pub fn project(pair: &Spinor) -> (GridField, GridField) {
    let two_i = Complex64::new(0.0, 2.0);
    let first = pair.c1.zip_with(&pair.c2, |a, b| 0.5 * (a + b.conj()));
    let second = pair.c1.zip_with(&pair.c2, |a, b| (a - b.conj()) / two_i);
    (first, second)
}

/// Real coefficients `alpha[j][k]` of the constants `c_{j,k} = i·alpha`,
/// for `j, k ∈ 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaTable {
    n: usize,
    values: Vec<f64>,
}

impl AlphaTable {
    pub fn zeros(n: usize) -> Self {
        AlphaTable { n, values: vec![0.0; (n + 1) * (n + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> ImaginaryConstant {
        ImaginaryConstant(self.values[j * (self.n + 1) + k])
    }

    pub fn set(&mut self, j: usize, k: usize, alpha: f64) {
        self.values[j * (self.n + 1) + k] = alpha;
    }

    pub fn with(mut self, j: usize, k: usize, alpha: f64) -> Self {
        self.set(j, k, alpha);
        self
    }

    /// Validate a table of general complex constants: each must be pure
    /// imaginary. Errors name the entry as `alpha.j.k`.
    pub fn from_constants(c: &Constants) -> Result<Self> {
        let n = c.n();
        let mut t = AlphaTable::zeros(n);
        for j in 0..=n {
            for k in 0..=n {
                let ic = ImaginaryConstant::try_from_value(c.get(j, k), &format!("alpha.{j}.{k}"))?;
                t.set(j, k, ic.alpha());
            }
        }
        Ok(t)
    }

    pub fn to_constants(&self) -> Constants {
        let mut c = Constants::zeros(self.n);
        for j in 0..=self.n {
            for k in 0..=self.n {
                c.set(j, k, self.get(j, k).value());
            }
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct GaProblem {
    pub u: GridField,
    pub seeds: Vec<GaSeed>,
    pub alphas: AlphaTable,
    pub psi0: Option<GridField>,
    pub psip0: Option<GridField>,
}

#[derive(Debug, Clone)]
pub struct GaTransformResult {
    pub u_t: GridField,
    pub psi_t: Option<GridField>,
    pub psip_t: Option<GridField>,
    pub omega: OmegaMatrix,
    /// `ω_{0,k}`, `k = 1..N`.
    pub omega_psi0: Vec<GridField>,
    /// `ω_{j,0}`, `j = 1..N`.
    pub omega_psip0: Vec<GridField>,
    pub det: GridField,
    pub singular_mask: Mask,
    pub eps_sing: f64,
    /// Largest real part discarded when projecting the raw quadratures onto
    /// imaginary values.
    pub projection_residual: f64,
}

/// Imaginary-valued potential with `∂_z ω = a b`, `∂_z̄ ω = −conj(a b)`,
/// equal to `i·alpha` at the basepoint. Returns the discarded real part too.
pub fn ga_potential(a: &GridField, b: &GridField, alpha: ImaginaryConstant, basepoint: Complex64) -> Result<(GridField, f64)> {
    let w = omega_integrand(&lift(a), &lift(b))?;
    let raw = potential(&w, basepoint, Complex64::new(0.0, 0.0))?;
    Ok(enforce_imaginary(&raw, alpha))
}

/// `Ω` and the two potential columns of a GA problem.
pub fn ga_omega(p: &GaProblem, basepoint: Complex64) -> Result<(OmegaMatrix, Vec<GridField>, Vec<GridField>, f64)> {
    let d = *p.u.domain();
    let n = p.seeds.len();
    if p.alphas.n() < n {
        return Err(MoutardError::Shape(format!("alpha table is for N={}, seeds N={n}", p.alphas.n())));
    }
    for s in &p.seeds {
        s.psi.check_same_domain(&p.u)?;
        s.psip.check_same_domain(&p.u)?;
    }
    let mut worst = 0.0_f64;
    let mut omega = Vec::with_capacity(n);
    for (j, sj) in p.seeds.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for (k, sk) in p.seeds.iter().enumerate() {
            let (om, diag) = ga_potential(&sj.psi, &sk.psip, p.alphas.get(j + 1, k + 1), basepoint)?;
            worst = worst.max(diag);
            row.push(om);
        }
        omega.push(row);
    }
    let mut col_psi = Vec::new();
    if let Some(psi0) = &p.psi0 {
        for (k, sk) in p.seeds.iter().enumerate() {
            let (om, diag) = ga_potential(psi0, &sk.psip, p.alphas.get(0, k + 1), basepoint)?;
            worst = worst.max(diag);
            col_psi.push(om);
        }
    }
    let mut col_psip = Vec::new();
    if let Some(psip0) = &p.psip0 {
        for (j, sj) in p.seeds.iter().enumerate() {
            let (om, diag) = ga_potential(&sj.psi, psip0, p.alphas.get(j + 1, 0), basepoint)?;
            worst = worst.max(diag);
            col_psip.push(om);
        }
    }
    Ok((OmegaMatrix::from_potentials(d, omega)?, col_psi, col_psip, worst))
}

fn ga_apply(
    p: &GaProblem,
    fo: &FactoredOmega,
    col_psi: &[GridField],
    col_psip: &[GridField],
) -> Result<(GridField, Option<GridField>, Option<GridField>)> {
    let psi: Vec<GridField> = p.seeds.iter().map(|s| s.psi.clone()).collect();
    let psip: Vec<GridField> = p.seeds.iter().map(|s| s.psip.clone()).collect();
    let psip_bar: Vec<GridField> = psip.iter().map(GridField::conj).collect();
    let u_t = fo.reduce(&[&psi], &psip_bar, &[&p.u], 1.0, false)?.remove(0);
    let psi_t = match &p.psi0 {
        Some(psi0) => Some(fo.reduce(&[&psi], col_psi, &[psi0], -1.0, false)?.remove(0)),
        None => None,
    };
    let psip_t = match &p.psip0 {
        Some(psip0) => Some(fo.reduce(&[&psip], col_psip, &[psip0], -1.0, true)?.remove(0)),
        None => None,
    };
    Ok((u_t, psi_t, psip_t))
}

/// Transform `u` and the targets `ψ(0)`, `ψ⁺(0)`.
pub fn ga_transform(p: &GaProblem, opts: &TransformOptions) -> Result<GaTransformResult> {
    let (omega, omega_psi0, omega_psip0, projection_residual) = ga_omega(p, opts.basepoint)?;
    let fo = omega.factor(opts.eps_rel)?;
    let (u_t, psi_t, psip_t) = ga_apply(p, &fo, &omega_psi0, &omega_psip0)?;
    Ok(GaTransformResult {
        u_t,
        psi_t,
        psip_t,
        det: fo.det().clone(),
        singular_mask: fo.mask().clone(),
        eps_sing: fo.eps_sing(),
        omega,
        omega_psi0,
        omega_psip0,
        projection_residual,
    })
}

/// The lifted problem: `v = ū`, seeds and targets as `(ψ, ψ̄)`.
pub fn lifted_problem(p: &GaProblem) -> DiracProblem {
    DiracProblem {
        u: p.u.clone(),
        v: p.u.conj(),
        seeds: p.seeds.iter().map(lift_seed).collect(),
        constants: p.alphas.to_constants(),
        psi0: p.psi0.as_ref().map(lift),
        psip0: p.psip0.as_ref().map(lift),
    }
}

/// Run the Dirac-level transform on the lifted problem, reusing the GA
/// potentials, so the two routes can be compared node by node.
pub fn dirac_route(p: &GaProblem, ga: &GaTransformResult, eps_rel: f64) -> Result<TransformResult> {
    apply_transform(
        &lifted_problem(p),
        ga.omega.clone(),
        ga.omega_psi0.clone(),
        ga.omega_psip0.clone(),
        eps_rel,
    )
}

/// `max |Ω̄ + Ω|` over all entries and nodes; zero for a valid GA `Ω`.
pub fn check_reduction_symmetry(om: &OmegaMatrix) -> f64 {
    om.entries().iter().map(|e| e.add(&e.conj()).max_abs()).fold(0.0, f64::max)
}

/// The real potential `φ = ω/(2i)` of an imaginary-valued `ω`.
pub fn real_potential(omega: &GridField) -> GridField {
    omega.map(|w| Complex64::new(0.5 * w.im, -0.5 * w.re))
}

/// Validate that all constants of a Dirac-level table are pure imaginary
/// and run the GA transform with them.
pub fn ga_transform_checked(
    u: GridField,
    seeds: Vec<GaSeed>,
    constants: &Constants,
    psi0: Option<GridField>,
    psip0: Option<GridField>,
    opts: &TransformOptions,
) -> Result<GaTransformResult> {
    let alphas = AlphaTable::from_constants(constants)?;
    ga_transform(&GaProblem { u, seeds, alphas, psi0, psip0 }, opts)
}

/// Sample a GA problem whose seeds are constants, on `d`.
pub fn constant_seeds(d: Domain, pairs: &[(Complex64, Complex64)]) -> Vec<GaSeed> {
    pairs
        .iter()
        .map(|&(f, fp)| GaSeed { psi: GridField::constant(d, f), psip: GridField::constant(d, fp) })
        .collect()
}
