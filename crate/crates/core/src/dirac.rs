//! Moutard transform of the two-dimensional Dirac system
//!
//! ```text
//! ∂_z̄ ψ_1 = u ψ_2,   ∂_z ψ_2 = v ψ_1          (system)
//! ∂_z̄ ψ⁺_1 = −v ψ⁺_2, ∂_z ψ⁺_2 = −u ψ⁺_1      (conjugate system)
//! ```
//!
//! Given seeds `ψ(j), ψ⁺(j)`, `j = 1..N`, the matrix `Ω` with
//! `Ω[k][j] = ω_{j,k}` is assembled from quadrature potentials and then
//!
//! ```text
//! ũ     = u + [ψ_1(1..N)] Ω⁻¹ [ψ⁺_2(1..N)]ᵗ
//! ṽ     = v − [ψ_2(1..N)] Ω⁻¹ [ψ⁺_1(1..N)]ᵗ
//! ψ̃(0)  = ψ(0)  − [ψ(1..N)]  Ω⁻¹     [ω_{0,1..N}]ᵗ
//! ψ̃⁺(0) = ψ⁺(0) − [ψ⁺(1..N)] (Ω⁻¹)ᵗ [ω_{1..N,0}]ᵗ
//! ```
//!
//! `Ω⁻¹` is never formed: each node factors its own `N × N` system.

use num_complex::Complex64;

use crate::error::{MoutardError, Result};
use crate::grid::{Domain, GridField, Mask};
use crate::linalg::SmallLu;
use crate::potentials::{omega_integrand, potential};

/// Two-component field `(ψ_1, ψ_2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spinor {
    pub c1: GridField,
    pub c2: GridField,
}

impl Spinor {
    pub fn new(c1: GridField, c2: GridField) -> Result<Self> {
        c1.check_same_domain(&c2)?;
        Ok(Spinor { c1, c2 })
    }

    pub fn domain(&self) -> &Domain {
        self.c1.domain()
    }

    pub fn zeros(d: Domain) -> Self {
        Spinor { c1: GridField::zeros(d), c2: GridField::zeros(d) }
    }
}

/// A seed solution `ψ(j)` of the system together with `ψ⁺(j)` of the
/// conjugate system.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPair {
    pub psi: Spinor,
    pub psip: Spinor,
}

/// Integration constants `c_{j,k}` for `j, k ∈ 0..=N`; index 0 refers to the
/// transformed target `ψ(0)` / `ψ⁺(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    n: usize,
    values: Vec<Complex64>,
}

impl Constants {
    pub fn zeros(n: usize) -> Self {
        Constants { n, values: vec![Complex64::new(0.0, 0.0); (n + 1) * (n + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[j * (self.n + 1) + k]
    }

    pub fn set(&mut self, j: usize, k: usize, c: Complex64) {
        self.values[j * (self.n + 1) + k] = c;
    }

    pub fn with(mut self, j: usize, k: usize, c: Complex64) -> Self {
        self.set(j, k, c);
        self
    }
}

/// `N × N` matrix of fields, stored so that `entry(k, j) = ω_{j,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaMatrix {
    n: usize,
    domain: Domain,
    /// Row-major: `entries[k * n + j] = ω_{j,k}`.
    entries: Vec<GridField>,
}

impl OmegaMatrix {
    /// Build from the potentials, `omega[j][k] = ω_{j+1,k+1}`.
    pub fn from_potentials(domain: Domain, omega: Vec<Vec<GridField>>) -> Result<Self> {
        let n = omega.len();
        let mut entries = Vec::with_capacity(n * n);
        for k in 0..n {
            for (j, row) in omega.iter().enumerate() {
                if row.len() != n {
                    return Err(MoutardError::Shape(format!("ω row {} has {} entries, need {n}", j + 1, row.len())));
                }
                if row[k].domain() != &domain {
                    return Err(MoutardError::DomainMismatch);
                }
                entries.push(row[k].clone());
            }
        }
        Ok(OmegaMatrix { n, domain, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Matrix entry at row `k`, column `j` (0-based), i.e. `ω_{j+1,k+1}`.
    pub fn entry(&self, k: usize, j: usize) -> &GridField {
        &self.entries[k * self.n + j]
    }

    /// The potential `ω_{j,k}` with 1-based seed indices.
    pub fn omega(&self, j: usize, k: usize) -> &GridField {
        self.entry(k - 1, j - 1)
    }

    pub fn entries(&self) -> &[GridField] {
        &self.entries
    }

    /// Row-major matrix at one node.
    pub fn at(&self, idx: usize) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.values()[idx]).collect()
    }

    /// Pointwise determinant by pivoted elimination.
    pub fn det_field(&self) -> GridField {
        let values = (0..self.domain.len()).map(|idx| SmallLu::factor(&self.at(idx), self.n).det()).collect();
        GridField::from_values(self.domain, values).expect("sized from the domain")
    }

    /// Factor every node and mask those with `|det Ω| < eps_rel · max |det Ω|`.
    pub fn factor(&self, eps_rel: f64) -> Result<FactoredOmega> {
        let d = self.domain;
        let lus: Vec<SmallLu> = (0..d.len()).map(|idx| SmallLu::factor(&self.at(idx), self.n)).collect();
        let det =
            GridField::from_values(d, lus.iter().map(SmallLu::det).collect()).expect("sized from the domain");
        let det_max = det.max_abs();
        if det_max == 0.0 {
            return Err(MoutardError::AllSingular);
        }
        let eps_sing = eps_rel * det_max;
        let mask = Mask::from_predicate(&d, |idx| {
            let v = det.values()[idx];
            !v.is_finite() || v.norm() < eps_sing
        });
        if mask.count() == d.len() {
            return Err(MoutardError::AllSingular);
        }
        Ok(FactoredOmega { n: self.n, domain: d, lus, det, mask, eps_sing })
    }
}

/// `Ω` factored node by node, with its singular mask.
#[derive(Debug, Clone)]
pub struct FactoredOmega {
    n: usize,
    domain: Domain,
    lus: Vec<SmallLu>,
    det: GridField,
    mask: Mask,
    eps_sing: f64,
}

impl FactoredOmega {
    pub fn det(&self) -> &GridField {
        &self.det
    }
    pub fn mask(&self) -> &Mask {
        &self.mask
    }
    pub fn eps_sing(&self) -> f64 {
        self.eps_sing
    }
    pub fn n(&self) -> usize {
        self.n
    }

    /// For each node, solve `Ω x = col` (or `Ωᵗ x = col`) once and return
    /// `base_r − rows_r · x` for every requested row set. Masked nodes get NaN.
    pub fn reduce(
        &self,
        rows: &[&[GridField]],
        col: &[GridField],
        bases: &[&GridField],
        sign: f64,
        transposed: bool,
    ) -> Result<Vec<GridField>> {
        assert_eq!(rows.len(), bases.len());
        if col.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
            return Err(MoutardError::Shape(format!("expected {} seed fields", self.n)));
        }
        for f in col.iter().chain(rows.iter().flat_map(|r| r.iter())).chain(bases.iter().copied()) {
            if f.domain() != &self.domain {
                return Err(MoutardError::DomainMismatch);
            }
        }
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let mut outs: Vec<Vec<Complex64>> = vec![Vec::with_capacity(self.domain.len()); rows.len()];
        for idx in 0..self.domain.len() {
            if self.mask.is_set(idx) {
                for o in outs.iter_mut() {
                    o.push(nan);
                }
                continue;
            }
            let b: Vec<Complex64> = col.iter().map(|f| f.values()[idx]).collect();
            let x = if transposed { self.lus[idx].solve_transposed(&b) } else { self.lus[idx].solve(&b) };
            for ((o, row), base) in outs.iter_mut().zip(rows).zip(bases) {
                let dot: Complex64 = row.iter().zip(&x).map(|(f, &xj)| f.values()[idx] * xj).sum();
                o.push(base.values()[idx] + sign * dot);
            }
        }
        Ok(outs.into_iter().map(|v| GridField::from_values(self.domain, v).expect("sized")).collect())
    }
}

fn check_seeds(seeds: &[SeedPair], d: &Domain) -> Result<()> {
    for s in seeds {
        for f in [&s.psi.c1, &s.psi.c2, &s.psip.c1, &s.psip.c2] {
            if f.domain() != d {
                return Err(MoutardError::DomainMismatch);
            }
        }
    }
    Ok(())
}

/// Assemble `Ω` from the seeds. `constants.get(j, k)` is the value of
/// `ω_{j,k}` at the basepoint.
pub fn assemble_omega(
    domain: &Domain,
    seeds: &[SeedPair],
    constants: &Constants,
    basepoint: Complex64,
) -> Result<OmegaMatrix> {
    check_seeds(seeds, domain)?;
    let n = seeds.len();
    if constants.n() < n {
        return Err(MoutardError::Shape(format!("constants table is for N={}, seeds N={n}", constants.n())));
    }
    let mut omega = Vec::with_capacity(n);
    for (j, sj) in seeds.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for (k, sk) in seeds.iter().enumerate() {
            let w = omega_integrand(&sj.psi, &sk.psip)?;
            row.push(potential(&w, basepoint, constants.get(j + 1, k + 1))?);
        }
        omega.push(row);
    }
    OmegaMatrix::from_potentials(*domain, omega)
}

/// `[ω_{0,1}, …, ω_{0,N}]` built from the target `ψ(0)`.
pub fn omega_column_psi(
    psi0: &Spinor,
    seeds: &[SeedPair],
    constants: &Constants,
    basepoint: Complex64,
) -> Result<Vec<GridField>> {
    seeds
        .iter()
        .enumerate()
        .map(|(k, sk)| potential(&omega_integrand(psi0, &sk.psip)?, basepoint, constants.get(0, k + 1)))
        .collect()
}

/// `[ω_{1,0}, …, ω_{N,0}]` built from the target `ψ⁺(0)`.
pub fn omega_column_psip(
    psip0: &Spinor,
    seeds: &[SeedPair],
    constants: &Constants,
    basepoint: Complex64,
) -> Result<Vec<GridField>> {
    seeds
        .iter()
        .enumerate()
        .map(|(j, sj)| potential(&omega_integrand(&sj.psi, psip0)?, basepoint, constants.get(j + 1, 0)))
        .collect()
}

pub fn transform_u(om: &FactoredOmega, seeds: &[SeedPair], u: &GridField) -> Result<GridField> {
    let row: Vec<GridField> = seeds.iter().map(|s| s.psi.c1.clone()).collect();
    let col: Vec<GridField> = seeds.iter().map(|s| s.psip.c2.clone()).collect();
    Ok(om.reduce(&[&row], &col, &[u], 1.0, false)?.remove(0))
}

pub fn transform_v(om: &FactoredOmega, seeds: &[SeedPair], v: &GridField) -> Result<GridField> {
    let row: Vec<GridField> = seeds.iter().map(|s| s.psi.c2.clone()).collect();
    let col: Vec<GridField> = seeds.iter().map(|s| s.psip.c1.clone()).collect();
    Ok(om.reduce(&[&row], &col, &[v], -1.0, false)?.remove(0))
}

/// `ψ̃(0)`, both components from one solve per node.
pub fn transform_solution(
    om: &FactoredOmega,
    seeds: &[SeedPair],
    psi0: &Spinor,
    omega0: &[GridField],
) -> Result<Spinor> {
    let r1: Vec<GridField> = seeds.iter().map(|s| s.psi.c1.clone()).collect();
    let r2: Vec<GridField> = seeds.iter().map(|s| s.psi.c2.clone()).collect();
    let mut out = om.reduce(&[&r1, &r2], omega0, &[&psi0.c1, &psi0.c2], -1.0, false)?;
    let c2 = out.pop().expect("two outputs");
    let c1 = out.pop().expect("two outputs");
    Ok(Spinor { c1, c2 })
}

/// `ψ̃⁺(0)` through the transposed system.
pub fn transform_conjugate_solution(
    om: &FactoredOmega,
    seeds: &[SeedPair],
    psip0: &Spinor,
    omega0: &[GridField],
) -> Result<Spinor> {
    let r1: Vec<GridField> = seeds.iter().map(|s| s.psip.c1.clone()).collect();
    let r2: Vec<GridField> = seeds.iter().map(|s| s.psip.c2.clone()).collect();
    let mut out = om.reduce(&[&r1, &r2], omega0, &[&psip0.c1, &psip0.c2], -1.0, true)?;
    let c2 = out.pop().expect("two outputs");
    let c1 = out.pop().expect("two outputs");
    Ok(Spinor { c1, c2 })
}

/// Knobs shared by the Dirac and GA pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    /// Point at which every `ω_{j,k}` takes its constant `c_{j,k}`.
    pub basepoint: Complex64,
    /// Relative singularity threshold on `|det Ω|`.
    pub eps_rel: f64,
}

pub const DEFAULT_EPS_REL: f64 = 1e-8;

impl TransformOptions {
    /// Basepoint at the node nearest the domain centre.
    pub fn for_domain(d: &Domain) -> Self {
        TransformOptions { basepoint: crate::potentials::default_basepoint(d), eps_rel: DEFAULT_EPS_REL }
    }

    pub fn at(basepoint: Complex64) -> Self {
        TransformOptions { basepoint, eps_rel: DEFAULT_EPS_REL }
    }
}

/// Input of the Dirac-level transform.
#[derive(Debug, Clone)]
pub struct DiracProblem {
    pub u: GridField,
    pub v: GridField,
    pub seeds: Vec<SeedPair>,
    pub constants: Constants,
    pub psi0: Option<Spinor>,
    pub psip0: Option<Spinor>,
}

#[derive(Debug, Clone)]
pub struct TransformResult {
    pub u_t: GridField,
    pub v_t: GridField,
    pub psi_t: Option<Spinor>,
    pub psip_t: Option<Spinor>,
    pub omega: OmegaMatrix,
    pub omega_psi0: Vec<GridField>,
    pub omega_psip0: Vec<GridField>,
    pub det: GridField,
    pub singular_mask: Mask,
    pub eps_sing: f64,
}

/// Run the full Dirac-level transform.
pub fn dirac_transform(p: &DiracProblem, opts: &TransformOptions) -> Result<TransformResult> {
    let d = *p.u.domain();
    p.u.check_same_domain(&p.v)?;
    let omega = assemble_omega(&d, &p.seeds, &p.constants, opts.basepoint)?;
    let omega_psi0 = match &p.psi0 {
        Some(psi0) => omega_column_psi(psi0, &p.seeds, &p.constants, opts.basepoint)?,
        None => Vec::new(),
    };
    let omega_psip0 = match &p.psip0 {
        Some(psip0) => omega_column_psip(psip0, &p.seeds, &p.constants, opts.basepoint)?,
        None => Vec::new(),
    };
    apply_transform(p, omega, omega_psi0, omega_psip0, opts.eps_rel)
}

/// Transform with a pre-assembled `Ω` and potential columns.
pub fn apply_transform(
    p: &DiracProblem,
    omega: OmegaMatrix,
    omega_psi0: Vec<GridField>,
    omega_psip0: Vec<GridField>,
    eps_rel: f64,
) -> Result<TransformResult> {
    let fo = omega.factor(eps_rel)?;
    let u_t = transform_u(&fo, &p.seeds, &p.u)?;
    let v_t = transform_v(&fo, &p.seeds, &p.v)?;
    let psi_t = p.psi0.as_ref().map(|psi0| transform_solution(&fo, &p.seeds, psi0, &omega_psi0)).transpose()?;
    let psip_t = p
        .psip0
        .as_ref()
        .map(|psip0| transform_conjugate_solution(&fo, &p.seeds, psip0, &omega_psip0))
        .transpose()?;
    Ok(TransformResult {
        u_t,
        v_t,
        psi_t,
        psip_t,
        omega,
        omega_psi0,
        omega_psip0,
        det: fo.det().clone(),
        singular_mask: fo.mask().clone(),
        eps_sing: fo.eps_sing(),
    })
}
