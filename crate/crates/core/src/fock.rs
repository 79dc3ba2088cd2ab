//! Truncated Fock-space ground truth: ladder algebra, exact von Neumann
//! evolution, and the maps between density matrices and characteristic
//! functions.
//!
//! Single mode only. The normal order and the other two are computed by
//! independent routes so the Gaussian ordering relations are a genuine check:
//!
//! * normal: `e^{iξ̄a†} e^{iξa}` as finite power series. Because `a` only
//!   lowers, the trace against a density supported on the truncated space is
//!   exact for every `ξ`. The truncation of the state itself still matters:
//!   discarded population `ε` can shift `C_n` by up to `ε·e^{|ξ|²/2}`.
//! * symmetric and antinormal: closed-form Laguerre elements of
//!   `e^{iξ̄a†} e^{iξa}` with `⟨m|e^{za†}e^{wa}|n⟩ = √(n!/m!) z^{m−n} L_n^{(m−n)}(|ξ|²)`,
//!   scaled by `e^{−|ξ|²/2}` (displacement operator) or `e^{−|ξ|²}`
//!   (reordering `e^{wa}e^{za†} = e^{wz}e^{za†}e^{wa}`, `wz = −|ξ|²`). Both
//!   stay accurate at large `|ξ|`, unlike the alternating series of the
//!   antinormal product.
//!
//! Nodes outside the validity radius `|ξ|² ≤ N_max/4` are counted: there the
//! truncation of the state, not the trace, limits accuracy.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::charfn::StateSpec;
use crate::error::{Error, Result};
use crate::grid::{fourier_to_phase, CharField, Ordering, PhaseGrid};

pub type CMatrix = DMatrix<C64>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Ladder operators and quadratures on an `N_max`-level truncation.
#[derive(Clone, Debug)]
pub struct LadderOps {
    pub a: CMatrix,
    pub adag: CMatrix,
    pub x: CMatrix,
    pub p: CMatrix,
}

/// `â|n⟩ = √n|n−1⟩`; `x̂ = √(ħ/2ω)(â†+â)`, `p̂ = i√(ħω/2)(â†−â)`.
pub fn build_ops(n_max: usize, hbar: f64, omega: f64) -> Result<LadderOps> {
    if n_max < 2 {
        return Err(Error::InvalidState(format!(
            "N_max = {n_max} must be at least 2"
        )));
    }
    let a = CMatrix::from_fn(n_max, n_max, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let adag = a.adjoint();
    let sx = (hbar / (2.0 * omega)).sqrt();
    let sp = (hbar * omega / 2.0).sqrt();
    let x = (&adag + &a) * C64::new(sx, 0.0);
    let p = (&adag - &a) * C64::new(0.0, sp);
    Ok(LadderOps { a, adag, x, p })
}

/// Hermitian operator on the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    pub matrix: CMatrix,
}

impl FockOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockDensity {
    rho: CMatrix,
}

impl FockDensity {
    pub fn new(rho: CMatrix) -> Result<Self> {
        if rho.nrows() != rho.ncols() || rho.nrows() < 2 {
            return Err(Error::InvalidState(
                "density must be square, N_max ≥ 2".into(),
            ));
        }
        Ok(FockDensity { rho })
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState(
                "zero or non-finite state vector".into(),
            ));
        }
        let n = psi.len();
        FockDensity::new(CMatrix::from_fn(n, n, |i, j| {
            psi[i] * psi[j].conj() / (norm * norm)
        }))
    }

    /// Builds a library state on `n_max` levels, renormalized after truncation.
    pub fn from_state(spec: &StateSpec, n_max: usize) -> Result<Self> {
        spec.validate()?;
        if n_max < 2 {
            return Err(Error::InvalidState(format!(
                "N_max = {n_max} must be at least 2"
            )));
        }
        let fact = factorials(n_max);
        let coherent = |alpha: C64| -> Vec<C64> {
            (0..n_max)
                .map(|k| (-0.5 * alpha.norm_sqr()).exp() * alpha.powu(k as u32) / fact[k].sqrt())
                .collect()
        };
        match *spec {
            StateSpec::Coherent { alpha } => FockDensity::pure(&coherent(alpha)),
            StateSpec::Fock { n } => {
                if n >= n_max {
                    return Err(Error::InvalidState(format!(
                        "Fock level {n} not representable with N_max = {n_max}"
                    )));
                }
                let mut psi = vec![ZERO; n_max];
                psi[n] = C64::new(1.0, 0.0);
                FockDensity::pure(&psi)
            }
            StateSpec::Thermal { nbar } => {
                let q = nbar / (1.0 + nbar);
                let pops: Vec<f64> = (0..n_max)
                    .map(|k| q.powi(k as i32) / (1.0 + nbar))
                    .collect();
                let total: f64 = pops.iter().sum();
                FockDensity::new(CMatrix::from_fn(n_max, n_max, |i, j| {
                    if i == j {
                        C64::new(pops[i] / total, 0.0)
                    } else {
                        ZERO
                    }
                }))
            }
            StateSpec::Cat { alpha, phase } => {
                let plus = coherent(alpha);
                let minus = coherent(-alpha);
                let rel = C64::from_polar(1.0, phase);
                let psi: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| a + rel * b).collect();
                FockDensity::pure(&psi)
            }
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn n_max(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `⟨â†^m â^n⟩`.
    pub fn moment(&self, m: u32, n: u32) -> C64 {
        let ops = build_ops(self.n_max(), 1.0, 1.0).expect("n_max ≥ 2");
        let mut op = CMatrix::identity(self.n_max(), self.n_max());
        for _ in 0..m {
            op = &op * &ops.adag;
        }
        for _ in 0..n {
            op = &op * &ops.a;
        }
        (&self.rho * op).trace()
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &FockDensity) -> f64 {
        let sq = psd_sqrt(&self.rho);
        let inner = &sq * &other.rho * &sq;
        let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
        let s: f64 = inner
            .symmetric_eigenvalues()
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .sum();
        s * s
    }
}

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// `ρ(t) = U ρ₀ U†`, `U = exp(−iĤt/ħ)`, via the eigendecomposition of `Ĥ`.
pub fn von_neumann_evolve(
    rho0: &FockDensity,
    h: &FockOperator,
    t: f64,
    hbar: f64,
) -> Result<FockDensity> {
    if h.dim() != rho0.n_max() {
        return Err(Error::InvalidState(format!(
            "Hamiltonian dimension {} vs density dimension {}",
            h.dim(),
            rho0.n_max()
        )));
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-12 * (1.0 + h.matrix.camax()) {
        return Err(Error::NotHermitian(defect));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let herm = (&h.matrix + h.matrix.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t / hbar));
    let u = &eig.eigenvectors * CMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint();
    FockDensity::new(&u * &rho0.rho * u.adjoint())
}

/// Precomputed tables for ordered-exponential traces on one truncation.
struct TraceTables {
    n: usize,
    fact: Vec<f64>,
    sqrt_fact: Vec<f64>,
}

impl TraceTables {
    fn new(n: usize) -> Self {
        let fact = factorials(n + 1);
        let sqrt_fact = fact.iter().map(|f| f.sqrt()).collect();
        TraceTables { n, fact, sqrt_fact }
    }

    /// `Tr[M e^{iξ̄a†} e^{iξa}]`.
    fn normal(&self, m: &CMatrix, xi: C64) -> C64 {
        let n = self.n;
        let w = C64::new(0.0, 1.0) * xi;
        let z = C64::new(0.0, 1.0) * xi.conj();
        let wp: Vec<C64> = (0..n).map(|k| w.powu(k as u32) / self.fact[k]).collect();
        let zp: Vec<C64> = (0..n).map(|k| z.powu(k as u32) / self.fact[k]).collect();
        // Σ_k (1/k!) Σ_{r,c ≥ k} M_{rc} √(r! c!) w^{r−k}/(r−k)! z^{c−k}/(c−k)!
        let mut total = ZERO;
        for k in 0..n {
            let mut acc = ZERO;
            for r in k..n {
                let mut row = ZERO;
                for c in k..n {
                    row += m[(r, c)] * self.sqrt_fact[c] * zp[c - k];
                }
                acc += row * self.sqrt_fact[r] * wp[r - k];
            }
            total += acc / self.fact[k];
        }
        total
    }

    /// `Tr[M e^{za†} e^{wa}]` with `z = iξ̄`, `w = iξ`, from the closed-form
    /// elements `⟨r+d|e^{za†}e^{wa}|r⟩ = √(r!/(r+d)!) z^d L_r^{(d)}(|ξ|²)`.
    fn laguerre(&self, m: &CMatrix, xi: C64) -> C64 {
        let n = self.n;
        let z = C64::new(0.0, 1.0) * xi.conj();
        let w = C64::new(0.0, 1.0) * xi;
        let x = xi.norm_sqr();
        let mut total = ZERO;
        for d in 0..n {
            // lag[k] = L_k^{(d)}(x)
            let mut lag = vec![0.0; n - d];
            lag[0] = 1.0;
            if n - d > 1 {
                lag[1] = 1.0 + d as f64 - x;
            }
            for k in 1..(n - d).saturating_sub(1) {
                let kf = k as f64;
                let df = d as f64;
                lag[k + 1] =
                    ((2.0 * kf + 1.0 + df - x) * lag[k] - (kf + df) * lag[k - 1]) / (kf + 1.0);
            }
            let zd = z.powu(d as u32);
            let wd = w.powu(d as u32);
            for (k, l) in lag.iter().enumerate() {
                let ratio = self.sqrt_fact[k] / self.sqrt_fact[k + d] * *l;
                total += m[(k, k + d)] * zd * ratio;
                if d > 0 {
                    total += m[(k + d, k)] * wd * ratio;
                }
            }
        }
        total
    }

    /// `Tr[M D(β)]`, `β = iξ̄`, using `D(β) = e^{−|ξ|²/2} e^{βa†} e^{−β̄a}`.
    fn symmetric(&self, m: &CMatrix, xi: C64) -> C64 {
        (-0.5 * xi.norm_sqr()).exp() * self.laguerre(m, xi)
    }

    /// `Tr[M e^{iξa} e^{iξ̄a†}]`, reordered as `e^{−|ξ|²} e^{iξ̄a†} e^{iξa}`.
    fn antinormal(&self, m: &CMatrix, xi: C64) -> C64 {
        (-xi.norm_sqr()).exp() * self.laguerre(m, xi)
    }
}

/// Trace of `M` against the ordered exponential at one `ξ`, single mode.
pub fn ordered_trace(m: &CMatrix, xi: C64, ordering: Ordering) -> Result<C64> {
    let tables = TraceTables::new(m.nrows());
    match ordering {
        Ordering::Normal => Ok(tables.normal(m, xi)),
        Ordering::Symmetric => Ok(tables.symmetric(m, xi)),
        Ordering::Antinormal => Ok(tables.antinormal(m, xi)),
        Ordering::Classical => Err(Error::ClassicalConversion {
            from: Ordering::Classical,
            to: Ordering::Classical,
        }),
    }
}

/// Characteristic field produced by the oracle.
#[derive(Clone, Debug)]
pub struct OracleField {
    pub field: CharField,
    /// Nodes outside the validity radius `|ξ|² ≤ N_max/4`.
    pub outside_validity: usize,
}

impl OracleField {
    pub fn validity_breach(&self) -> bool {
        self.outside_validity > 0
    }
}

pub fn validity_radius(n_max: usize) -> f64 {
    n_max as f64 / 4.0
}

/// Samples `Tr[M · ordered exponential]` on a one-dimensional grid.
pub fn matrix_to_charfn(m: &CMatrix, grid: &PhaseGrid, ordering: Ordering) -> Result<OracleField> {
    if grid.dims() != 1 {
        return Err(Error::Unsupported("the Fock oracle is single-mode".into()));
    }
    if !ordering.is_quantum() {
        return Err(Error::ClassicalConversion {
            from: Ordering::Classical,
            to: ordering,
        });
    }
    let n = m.nrows();
    let tables = TraceTables::new(n);
    let radius = validity_radius(n);
    let values: Vec<(C64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let pt = grid.point(i);
            let xi = grid.xi_at_point(&pt);
            let inside = xi.norm_sqr <= radius;
            let v = match ordering {
                Ordering::Normal => tables.normal(m, xi.xi[0]),
                Ordering::Symmetric => tables.symmetric(m, xi.xi[0]),
                Ordering::Antinormal => tables.antinormal(m, xi.xi[0]),
                Ordering::Classical => unreachable!(),
            };
            (v, inside)
        })
        .collect();
    let outside = values.iter().filter(|(_, inside)| !inside).count();
    let field = CharField::new(
        grid.clone(),
        values.into_iter().map(|(v, _)| v).collect(),
        ordering,
    )?;
    Ok(OracleField {
        field,
        outside_validity: outside,
    })
}

pub fn density_to_charfn(
    rho: &FockDensity,
    grid: &PhaseGrid,
    ordering: Ordering,
) -> Result<OracleField> {
    matrix_to_charfn(&rho.rho, grid, ordering)
}

/// Central finite difference `(C[ρ(+τ)] − C[ρ(−τ)])/2τ` of the oracle's
/// characteristic field under exact von Neumann evolution.
pub fn oracle_time_derivative(
    rho: &FockDensity,
    h: &FockOperator,
    grid: &PhaseGrid,
    ordering: Ordering,
    tau: f64,
) -> Result<CharField> {
    let hbar = grid.hbar();
    let plus = density_to_charfn(&von_neumann_evolve(rho, h, tau, hbar)?, grid, ordering)?.field;
    let minus = density_to_charfn(&von_neumann_evolve(rho, h, -tau, hbar)?, grid, ordering)?.field;
    Ok(plus
        .add_scaled(&minus, -1.0)
        .scaled(C64::new(0.5 / tau, 0.0)))
}

/// `dC/dt` from the exact commutator `(i/ħ)(ρĤ − Ĥρ)`.
pub fn oracle_rhs_exact(
    rho: &FockDensity,
    h: &FockOperator,
    grid: &PhaseGrid,
    ordering: Ordering,
) -> Result<CharField> {
    let comm = (&rho.rho * &h.matrix - &h.matrix * &rho.rho) * C64::new(0.0, 1.0 / grid.hbar());
    Ok(matrix_to_charfn(&comm, grid, ordering)?.field)
}

/// Inverse map from a normal-order characteristic field to a density matrix,
/// `ρ = ∫dx dp F(x,p) |α⟩⟨α|` with `F = (2π)^{-2}∫dλdμ e^{−i(λx+μp)} C_n`
/// and `α = (ωx + ip)/√(2ħω)`.
///
/// CONVENTION: with the grid's `(2π)^{-2N}` transform the overall constant of
/// this map is exactly one; the round-trip tests pin it.
pub fn charfn_to_density(c: &CharField, n_max: usize) -> Result<FockDensity> {
    if c.ordering() != Ordering::Normal {
        return Err(Error::OrderingMismatch {
            expected: Ordering::Normal,
            found: c.ordering(),
        });
    }
    let grid = c.grid();
    if grid.dims() != 1 {
        return Err(Error::Unsupported("the Fock oracle is single-mode".into()));
    }
    if n_max < 2 {
        return Err(Error::InvalidState(format!(
            "N_max = {n_max} must be at least 2"
        )));
    }
    // a positive P function has |C_n| ≤ C_n(0); only the region the
    // truncation resolves is checked
    let radius = validity_radius(n_max);
    let peak = (0..grid.len())
        .filter(|&i| grid.xi_norm_sqr(&grid.point(i)) <= radius)
        .map(|i| c.data()[i].norm())
        .fold(0.0, f64::max);
    let c0 = c.at_origin().norm();
    if peak > c0 * (1.0 + 1e-6) {
        return Err(Error::SingularP(format!(
            "|C_n| reaches {peak:.3e} > C_n(0) = {c0:.3e}"
        )));
    }
    let f = fourier_to_phase(c);
    let hbar = grid.hbar();
    let omega = grid.omega();
    let norm = (2.0 * hbar * omega).sqrt();
    let fact = factorials(n_max);
    let cell = grid.dual_cell_volume();
    let rho = (0..grid.len())
        .into_par_iter()
        .fold(
            || CMatrix::zeros(n_max, n_max),
            |mut acc, i| {
                let weight = f.data[i] * cell;
                if weight.norm() < 1e-300 {
                    return acc;
                }
                let z = grid.dual_point(i);
                let alpha = C64::new(omega * z[0], z[1]) / norm;
                let g = (-0.5 * alpha.norm_sqr()).exp();
                let ket: Vec<C64> = (0..n_max)
                    .map(|k| g * alpha.powu(k as u32) / fact[k].sqrt())
                    .collect();
                for r in 0..n_max {
                    for s in 0..n_max {
                        acc[(r, s)] += weight * ket[r] * ket[s].conj();
                    }
                }
                acc
            },
        )
        .reduce(|| CMatrix::zeros(n_max, n_max), |a, b| a + b);
    FockDensity::new(rho)
}
