//! Right-hand sides of the characteristic-function equation of motion and
//! their time integration.
//!
//! For a kernel `K` matching the field's ordering,
//!
//! ```text
//! ∂C/∂t (c) = −∫ da K(c, a) H(c − a) C(a)
//! ```
//!
//! with `H` the Hamiltonian's characteristic function in the same ordering.
//! Three evaluators are provided:
//!
//! * [`QuadratureRhs`]: trapezoid sum of the convolution with a sampled `H`,
//!   zero outside the grid.
//! * [`DistributionalOperator`]: `H = Σ d_β ∂^β δ` collapses the integral to a
//!   linear PDE, `−Σ_β d_β Σ_{γ≤β} C(β,γ) ∂_a^γ K(c,a)|_{a=c} ∂^{β−γ}C(c)`,
//!   with spectral derivatives of `C`.
//! * [`StarProductRhs`]: `(i/ħ)(C_{ρH} − C_{Hρ})` from the two normal-order
//!   product convolutions (normal ordering only).

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::{hermiticity_defect, ordering_bound, StateSpec};
use crate::error::{Error, Result};
use crate::fock::{oracle_time_derivative, FockDensity};
use crate::grid::{CharField, GridSpec, Ordering, PhaseGrid, SpectralDiff};
use crate::hamiltonian::{
    ham_distributional, lattice_sampled, DistHam, HamCharRep, PolyHamiltonian,
};
use crate::kernels::{Kernel, KernelKind};
use crate::series::MonomialBasis;

/// Normalization of the star-product path.
pub const KAPPA_STAR: f64 = 1.0;
/// Normalization of the grid-sampled quadrature path.
pub const KAPPA_GRID: f64 = 1.0;

/// Stencil accuracy used when a distributional Hamiltonian is sampled on the
/// lattice for the quadrature and star-product paths.
pub const DEFAULT_LATTICE_ACCURACY: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMethod {
    Quadrature,
    Distributional,
    StarProduct,
}

/// A time derivative `C ↦ ∂C/∂t`.
pub trait EomRhs: Sync {
    fn ordering(&self) -> Ordering;
    fn grid(&self) -> &PhaseGrid;
    fn eval(&self, c: &CharField) -> Result<CharField>;
}

fn check_input(rhs: &dyn EomRhs, c: &CharField) -> Result<()> {
    rhs.grid().ensure_compatible(c.grid())?;
    if c.ordering() != rhs.ordering() {
        return Err(Error::OrderingMismatch {
            expected: rhs.ordering(),
            found: c.ordering(),
        });
    }
    Ok(())
}

fn check_kind(kind: KernelKind, ordering: Ordering) -> Result<()> {
    if kind.ordering() != ordering {
        return Err(Error::OrderingMismatch {
            expected: kind.ordering(),
            found: ordering,
        });
    }
    Ok(())
}

#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Default, Clone, Copy)]
struct ComplexSum {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexSum {
    fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn value(self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

/// Nonzero samples of `H` as signed index offsets from the origin.
///
/// Quadrature sums skip the first row of every axis: it has no mirror node,
/// and dropping it keeps the sum symmetric under `c ↦ −c`.
fn sparse_offsets(h: &CharField) -> Vec<(Vec<i64>, C64)> {
    let grid = h.grid();
    let origin = grid.origin_index();
    h.data()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() != 0.0)
        .map(|(i, v)| {
            let idx = grid.multi_index(i);
            let off = idx
                .iter()
                .zip(&origin)
                .map(|(&a, &o)| a as i64 - o as i64)
                .collect();
            (off, *v)
        })
        .collect()
}

fn shifted(grid: &PhaseGrid, idx: &[usize], off: &[i64]) -> Option<usize> {
    let mut flat = 0;
    for ax in 0..idx.len() {
        let k = idx[ax] as i64 - off[ax];
        if k <= 0 || k >= grid.shape()[ax] as i64 {
            return None;
        }
        flat += k as usize * grid.strides()[ax];
    }
    Some(flat)
}

/// Trapezoid quadrature of the kernel convolution with a sampled `H`.
pub struct QuadratureRhs {
    grid: PhaseGrid,
    kernel: Kernel,
    offsets: Vec<(Vec<i64>, C64)>,
    kappa: f64,
}

impl QuadratureRhs {
    pub fn new(h: &CharField, kind: KernelKind) -> Result<Self> {
        check_kind(kind, h.ordering())?;
        Ok(QuadratureRhs {
            grid: h.grid().clone(),
            kernel: Kernel::for_grid(kind, h.grid()),
            offsets: sparse_offsets(h),
            kappa: KAPPA_GRID,
        })
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// Evaluates with a different kernel kind on the same `H` samples.
    pub fn with_kernel(mut self, kind: KernelKind) -> Self {
        self.kernel = Kernel::for_grid(kind, &self.grid);
        self
    }
}

impl EomRhs for QuadratureRhs {
    fn ordering(&self) -> Ordering {
        self.kernel.kind.ordering()
    }

    fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    fn eval(&self, c: &CharField) -> Result<CharField> {
        check_input(self, c)?;
        let grid = &self.grid;
        let scale = -self.kappa * grid.cell_volume();
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let idx = grid.multi_index(i);
                let pc = grid.point(i);
                let mut acc = ComplexSum::default();
                for (off, hv) in &self.offsets {
                    if let Some(j) = shifted(grid, &idx, off) {
                        let k = self.kernel.eval(&pc, &grid.point(j));
                        if k != 0.0 {
                            acc.add(hv * c.data()[j] * k);
                        }
                    }
                }
                acc.value() * scale
            })
            .collect();
        CharField::new(grid.clone(), data, c.ordering())
    }
}

/// The PDE obtained from a distributional Hamiltonian: `Σ_δ A_δ(c) ∂^δ C(c)`
/// with precomputed coefficient fields.
pub struct DistributionalOperator {
    grid: PhaseGrid,
    ordering: Ordering,
    terms: Vec<(Vec<u32>, Vec<C64>)>,
    diff: SpectralDiff,
}

impl DistributionalOperator {
    pub fn new(dist: &DistHam, grid: &PhaseGrid, kind: KernelKind) -> Result<Self> {
        check_kind(kind, dist.ordering)?;
        if dist.dims != grid.dims() {
            return Err(Error::GridMismatch(format!(
                "Hamiltonian has {} modes, grid has {}",
                dist.dims,
                grid.dims()
            )));
        }
        let axes = grid.axes();
        let degree = dist.degree();
        for ax in 0..axes {
            if degree >= grid.shape()[ax] / 2 {
                return Err(Error::Resolution {
                    order: degree,
                    points: grid.shape()[ax],
                });
            }
        }
        // (β, d_β, γ, −C(β,γ)·γ!) for every nonzero γ ≤ β
        let mut contributions: Vec<(usize, usize, C64)> = Vec::new();
        let mut delta_index: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        let basis = MonomialBasis::new(axes, degree.max(1));
        for (beta, d) in &dist.terms {
            for gi in 0..basis.len() {
                let gamma = basis.exponents(gi);
                if gamma.iter().all(|&g| g == 0) || gamma.iter().zip(beta).any(|(g, b)| g > b) {
                    continue;
                }
                let mut w = 1.0;
                for (&g, &b) in gamma.iter().zip(beta) {
                    w *= binom(b, g) * factorial(g);
                }
                let delta: Vec<u32> = beta.iter().zip(gamma).map(|(b, g)| b - g).collect();
                let n = delta_index.len();
                let di = *delta_index.entry(delta).or_insert(n);
                contributions.push((di, gi, -d * w));
            }
        }
        let kernel = Kernel::for_grid(kind, grid);
        let ndelta = delta_index.len();
        let per_node: Vec<Vec<C64>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let mut out = vec![C64::new(0.0, 0.0); ndelta];
                if contributions.is_empty() {
                    return out;
                }
                let t = kernel.taylor_on_diagonal(&grid.point(i), &basis);
                for &(di, gi, w) in &contributions {
                    out[di] += w * t.coeffs()[gi];
                }
                out
            })
            .collect();
        let mut terms: Vec<(Vec<u32>, Vec<C64>)> = vec![(vec![], Vec::new()); ndelta];
        for (delta, di) in delta_index {
            // edge nodes are their own periodic mirror; A_δ(−c) = (−1)^|δ| conj A_δ(c)
            // there makes the operator map Hermitian fields to Hermitian fields
            let parity = if delta.iter().sum::<u32>() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let field = (0..grid.len())
                .map(|i| {
                    let a = per_node[i][di];
                    if grid.reflected(i).is_some() {
                        a
                    } else {
                        (a + parity * per_node[grid.periodic_mirror(i)][di].conj()) * 0.5
                    }
                })
                .collect();
            terms[di] = (delta, field);
        }
        terms.retain(|(_, f)| f.iter().any(|v| v.norm() != 0.0));
        Ok(DistributionalOperator {
            grid: grid.clone(),
            ordering: dist.ordering,
            terms,
            diff: SpectralDiff::for_grid(grid).reflection_symmetric(),
        })
    }

    /// Derivative multi-indices that carry a nonzero coefficient field.
    pub fn derivative_orders(&self) -> Vec<Vec<u32>> {
        self.terms.iter().map(|(d, _)| d.clone()).collect()
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl EomRhs for DistributionalOperator {
    fn ordering(&self) -> Ordering {
        self.ordering
    }

    fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    fn eval(&self, c: &CharField) -> Result<CharField> {
        check_input(self, c)?;
        let mut out = vec![C64::new(0.0, 0.0); self.grid.len()];
        if self.terms.is_empty() {
            return CharField::new(self.grid.clone(), out, self.ordering);
        }
        let spectrum = self.diff.spectrum(c.data());
        for (delta, coeff) in &self.terms {
            let deriv = if delta.iter().all(|&o| o == 0) {
                c.data().to_vec()
            } else {
                self.diff.from_spectrum(&spectrum, delta)
            };
            out.par_iter_mut()
                .zip(coeff.par_iter().zip(deriv.par_iter()))
                .for_each(|(o, (a, d))| *o += a * d);
        }
        CharField::new(self.grid.clone(), out, self.ordering)
    }
}

/// Normal-order products `C_{ρH}` and `C_{Hρ}` by trapezoid quadrature.
pub struct StarProductRhs {
    grid: PhaseGrid,
    offsets: Vec<(Vec<i64>, C64)>,
    kappa: f64,
}

/// `(ħ/2ω) Σ_i (λ'_i + iωμ'_i)(λ''_i − iωμ''_i)` for `a = (λ', μ')`,
/// `b = (λ'', μ'')`.
fn product_weight(hbar: f64, omega: f64, a: &[f64], b: &[f64]) -> C64 {
    let n = a.len() / 2;
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        s += C64::new(a[i], omega * a[n + i]) * C64::new(b[i], -omega * b[n + i]);
    }
    s * (hbar / (2.0 * omega))
}

impl StarProductRhs {
    pub fn new(h: &CharField) -> Result<Self> {
        if h.ordering() != Ordering::Normal {
            return Err(Error::OrderingMismatch {
                expected: Ordering::Normal,
                found: h.ordering(),
            });
        }
        Ok(StarProductRhs {
            grid: h.grid().clone(),
            offsets: sparse_offsets(h),
            kappa: KAPPA_STAR,
        })
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// `(C_{ρH}, C_{Hρ})`.
    pub fn products(&self, c: &CharField) -> Result<(CharField, CharField)> {
        check_input(self, c)?;
        let grid = &self.grid;
        let (hbar, omega) = (grid.hbar(), grid.omega());
        let cell = grid.cell_volume();
        let pairs: Vec<(C64, C64)> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let idx = grid.multi_index(i);
                let pc = grid.point(i);
                let mut rho_h = ComplexSum::default();
                let mut h_rho = ComplexSum::default();
                for (off, hv) in &self.offsets {
                    if let Some(j) = shifted(grid, &idx, off) {
                        let pa = grid.point(j);
                        let diff: Vec<f64> = pc.iter().zip(&pa).map(|(x, y)| x - y).collect();
                        let v = hv * c.data()[j];
                        rho_h.add(v * product_weight(hbar, omega, &pa, &diff).exp());
                        h_rho.add(v * product_weight(hbar, omega, &diff, &pa).exp());
                    }
                }
                (rho_h.value() * cell, h_rho.value() * cell)
            })
            .collect();
        let (a, b): (Vec<C64>, Vec<C64>) = pairs.into_iter().unzip();
        Ok((
            CharField::new(grid.clone(), a, Ordering::Normal)?,
            CharField::new(grid.clone(), b, Ordering::Normal)?,
        ))
    }
}

impl EomRhs for StarProductRhs {
    fn ordering(&self) -> Ordering {
        Ordering::Normal
    }

    fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    fn eval(&self, c: &CharField) -> Result<CharField> {
        let (rho_h, h_rho) = self.products(c)?;
        Ok(rho_h
            .add_scaled(&h_rho, -1.0)
            .scaled(C64::new(0.0, self.kappa / self.grid.hbar())))
    }
}

/// Builds the evaluator for `method`, checking that the representation fits.
pub fn build_rhs(
    method: RhsMethod,
    rep: &HamCharRep,
    grid: &PhaseGrid,
    kind: KernelKind,
) -> Result<Box<dyn EomRhs>> {
    match (method, rep) {
        (RhsMethod::Distributional, HamCharRep::Distributional(d)) => {
            Ok(Box::new(DistributionalOperator::new(d, grid, kind)?))
        }
        (RhsMethod::Quadrature, HamCharRep::GridSampled(h)) => {
            grid.ensure_compatible(h.grid())?;
            Ok(Box::new(QuadratureRhs::new(h, kind)?))
        }
        (RhsMethod::StarProduct, HamCharRep::GridSampled(h)) => {
            grid.ensure_compatible(h.grid())?;
            if kind != KernelKind::Normal {
                return Err(Error::IncompatibleRep(
                    "the star-product path is defined for normal order".into(),
                ));
            }
            Ok(Box::new(StarProductRhs::new(h)?))
        }
        (m, _) => Err(Error::IncompatibleRep(format!(
            "method {m:?} needs a {} Hamiltonian",
            if m == RhsMethod::Distributional {
                "distributional"
            } else {
                "grid-sampled"
            }
        ))),
    }
}

/// Builds the evaluator for a polynomial Hamiltonian, producing the
/// representation the method needs. Grid-sampled paths use the lattice image
/// of the distributional form.
pub fn rhs_for_hamiltonian(
    method: RhsMethod,
    h: &PolyHamiltonian,
    grid: &PhaseGrid,
    ordering: Ordering,
    accuracy: usize,
) -> Result<Box<dyn EomRhs>> {
    let dist = ham_distributional(h, ordering, grid.hbar(), grid.omega())?;
    let rep = match method {
        RhsMethod::Distributional => HamCharRep::Distributional(dist),
        _ => HamCharRep::GridSampled(lattice_sampled(&dist, grid, accuracy)?),
    };
    build_rhs(method, &rep, grid, KernelKind::from(ordering))
}

/// One classical fourth-order Runge–Kutta step.
pub fn step_rk4(rhs: &dyn EomRhs, c: &CharField, dt: f64) -> Result<CharField> {
    let k1 = rhs.eval(c)?;
    let k2 = rhs.eval(&c.add_scaled(&k1, 0.5 * dt))?;
    let k3 = rhs.eval(&c.add_scaled(&k2, 0.5 * dt))?;
    let k4 = rhs.eval(&c.add_scaled(&k3, dt))?;
    let data = (0..c.data().len())
        .into_par_iter()
        .map(|i| {
            c.data()[i]
                + (k1.data()[i] + 2.0 * k2.data()[i] + 2.0 * k3.data()[i] + k4.data()[i])
                    * (dt / 6.0)
        })
        .collect();
    CharField::new(c.grid().clone(), data, c.ordering())
}

/// Largest admissible step, `0.1·‖C‖/‖RHS(C)‖`.
pub fn probe_dt_bound(rhs: &dyn EomRhs, c: &CharField) -> Result<f64> {
    let r = rhs.eval(c)?.norm_l2();
    let n = c.norm_l2();
    if r == 0.0 || n == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.1 * n / r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorTolerances {
    pub normalization: f64,
    pub hermiticity: f64,
    pub bound: f64,
}

impl Default for MonitorTolerances {
    fn default() -> Self {
        MonitorTolerances {
            normalization: 1e-6,
            hermiticity: 1e-6,
            bound: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Steps between monitored snapshots.
    pub cadence: usize,
    #[serde(default)]
    pub tolerances: MonitorTolerances,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MonitorReport {
    pub t: f64,
    /// `|C(0) − 1|`.
    pub normalization: f64,
    /// `|C(0) − C₀(0)|`.
    pub normalization_drift: f64,
    pub hermiticity: f64,
    /// `max (|C| − bound)₊`; zero for classical fields.
    pub bound_violation: f64,
}

pub fn monitor(c: &CharField, t: f64, initial_origin: C64) -> MonitorReport {
    let grid = c.grid();
    let ordering = c.ordering();
    let bound_violation = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let q = grid.xi_norm_sqr(&grid.point(i));
            ordering_bound(ordering, q).map_or(0.0, |b| (c.data()[i].norm() - b).max(0.0))
        })
        .reduce(|| 0.0, f64::max);
    MonitorReport {
        t,
        normalization: (c.at_origin() - 1.0).norm(),
        normalization_drift: (c.at_origin() - initial_origin).norm(),
        hermiticity: hermiticity_defect(c),
        bound_violation,
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub field: CharField,
    pub monitors: MonitorReport,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub dt_bound: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("a trajectory holds its initial snapshot")
    }

    pub fn max_normalization_drift(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| s.monitors.normalization_drift)
            .fold(0.0, f64::max)
    }

    pub fn max_hermiticity(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| s.monitors.hermiticity)
            .fold(0.0, f64::max)
    }
}

fn breach(
    report: &MonitorReport,
    tol: &MonitorTolerances,
    initial_herm: f64,
) -> Option<(&'static str, f64, f64)> {
    if !report.normalization_drift.is_finite() || report.normalization_drift > tol.normalization {
        return Some((
            "normalization drift",
            report.normalization_drift,
            tol.normalization,
        ));
    }
    let herm = report.hermiticity - initial_herm;
    if !herm.is_finite() || herm > tol.hermiticity {
        return Some(("hermiticity drift", herm, tol.hermiticity));
    }
    if report.bound_violation > tol.bound {
        return Some(("bound violation", report.bound_violation, tol.bound));
    }
    None
}

/// Integrates from `c0` to `t_final` with RK4, recording monitored snapshots
/// every `cadence` steps and at the end. A zero step returns the initial
/// snapshot alone.
pub fn evolve(c0: &CharField, rhs: &dyn EomRhs, config: &EvolveConfig) -> Result<Trajectory> {
    if !(config.dt >= 0.0
        && config.dt.is_finite()
        && config.t_final >= 0.0
        && config.t_final.is_finite())
    {
        return Err(Error::InvalidState(
            "dt and t_final must be finite and non-negative".into(),
        ));
    }
    if c0.ordering() != rhs.ordering() {
        return Err(Error::OrderingMismatch {
            expected: rhs.ordering(),
            found: c0.ordering(),
        });
    }
    let origin0 = c0.at_origin();
    let first = monitor(c0, 0.0, origin0);
    let initial_herm = first.hermiticity;
    let mut snapshots = vec![Snapshot {
        t: 0.0,
        field: c0.clone(),
        monitors: first,
    }];
    if config.dt == 0.0 || config.t_final == 0.0 {
        return Ok(Trajectory {
            snapshots,
            dt_bound: f64::INFINITY,
            steps: 0,
        });
    }
    let bound = probe_dt_bound(rhs, c0)?;
    if config.dt > bound {
        return Err(Error::StepTooLarge {
            dt: config.dt,
            bound,
        });
    }
    let cadence = config.cadence.max(1);
    let steps = (config.t_final / config.dt - 1e-9).ceil().max(1.0) as usize;
    let mut c = c0.clone();
    let mut t = 0.0;
    for n in 1..=steps {
        let h = if n == steps {
            config.t_final - t
        } else {
            config.dt
        };
        c = match step_rk4(rhs, &c, h) {
            Ok(next) => next,
            Err(Error::NonFinite(_)) => {
                return Err(Error::MonitorBreach {
                    t: t + h,
                    what: "non-finite sample",
                    value: f64::INFINITY,
                    tolerance: 0.0,
                    snapshot: Some(Box::new(c)),
                })
            }
            Err(e) => return Err(e),
        };
        t = if n == steps {
            config.t_final
        } else {
            n as f64 * config.dt
        };
        if n % cadence == 0 || n == steps {
            let report = monitor(&c, t, origin0);
            if let Some((what, value, tolerance)) =
                breach(&report, &config.tolerances, initial_herm)
            {
                return Err(Error::MonitorBreach {
                    t,
                    what,
                    value,
                    tolerance,
                    snapshot: Some(Box::new(c)),
                });
            }
            snapshots.push(Snapshot {
                t,
                field: c.clone(),
                monitors: report,
            });
        }
    }
    Ok(Trajectory {
        snapshots,
        dt_bound: bound,
        steps,
    })
}

/// Least-squares scale `κ` fitting `κ·rhs` to `reference` over nodes whose
/// index lies at least `margin` away from every grid edge.
pub fn fit_scale(rhs: &CharField, reference: &CharField, margin: usize) -> f64 {
    let grid = rhs.grid();
    let shape = grid.shape();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.len() {
        let idx = grid.multi_index(i);
        if idx
            .iter()
            .zip(shape)
            .any(|(&k, &g)| k < margin || k + margin >= g)
        {
            continue;
        }
        let (r, o) = (rhs.data()[i], reference.data()[i]);
        num += (r.conj() * o).re;
        den += r.norm_sqr();
    }
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn calibration_setup(
    ordering: Ordering,
) -> Result<(PhaseGrid, PolyHamiltonian, CharField, CharField)> {
    let grid = PhaseGrid::new(&GridSpec::uniform(1, 32, 6.0, 1.0, 1.0))?;
    let h = PolyHamiltonian::harmonic(1, 1.0, 1.0);
    let spec = StateSpec::Coherent {
        alpha: C64::new(1.0, 0.0),
    };
    let n_max = 24;
    let rho = FockDensity::from_state(&spec, n_max)?;
    let c = crate::fock::density_to_charfn(&rho, &grid, ordering)?.field;
    let oracle = oracle_time_derivative(&rho, &h.to_fock(n_max)?, &grid, ordering, 1e-4)?;
    Ok((grid, h, c, oracle))
}

/// Scale of the star-product path measured against the Fock oracle
/// (harmonic Hamiltonian, coherent state `α = 1`, 32² grid).
pub fn calibrate_kappa_star() -> Result<f64> {
    let (grid, h, c, oracle) = calibration_setup(Ordering::Normal)?;
    let dist = ham_distributional(&h, Ordering::Normal, grid.hbar(), grid.omega())?;
    let lattice = lattice_sampled(&dist, &grid, DEFAULT_LATTICE_ACCURACY)?;
    let raw = StarProductRhs::new(&lattice)?.with_kappa(1.0).eval(&c)?;
    Ok(fit_scale(&raw, &oracle, DEFAULT_LATTICE_ACCURACY))
}

/// Scale of the grid-sampled quadrature path, measured as above in symmetric
/// order.
pub fn calibrate_kappa_grid() -> Result<f64> {
    let (grid, h, c, oracle) = calibration_setup(Ordering::Symmetric)?;
    let dist = ham_distributional(&h, Ordering::Symmetric, grid.hbar(), grid.omega())?;
    let lattice = lattice_sampled(&dist, &grid, DEFAULT_LATTICE_ACCURACY)?;
    let raw = QuadratureRhs::new(&lattice, KernelKind::Symmetric)?
        .with_kappa(1.0)
        .eval(&c)?;
    Ok(fit_scale(&raw, &oracle, DEFAULT_LATTICE_ACCURACY))
}
