//! Classical characteristic-function dynamics: the classical-kernel equation
//! of motion, the Liouville equation it transforms to, the `ħ → 0` scan, and
//! closed-form reference flows.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{DistributionalOperator, EomRhs, QuadratureRhs, RhsMethod};
use crate::grid::{CharField, Ordering, PhaseGrid, SpectralDiff};
use crate::hamiltonian::{lattice_sampled, DistHam};
use crate::kernels::KernelKind;
use crate::poly::PhasePoly;
use crate::wigner::{PhaseSymbol, WignerField};

/// A real polynomial phase-space function `H(x, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalHamiltonian {
    symbol: PhasePoly,
}

impl ClassicalHamiltonian {
    pub fn new(symbol: PhasePoly) -> Result<Self> {
        let imag = symbol.max_imag_coeff();
        if imag > 1e-12 {
            return Err(Error::NotHermitian(imag));
        }
        Ok(ClassicalHamiltonian { symbol })
    }

    /// `Σ_i (p_i² + ω² x_i²) / 2`.
    pub fn harmonic(dims: usize, omega: f64) -> Self {
        let mut p = PhasePoly::zero(2 * dims);
        for i in 0..dims {
            let mut ex = vec![0; 2 * dims];
            ex[i] = 2;
            p.add_term(ex, C64::new(0.5 * omega * omega, 0.0));
            let mut ep = vec![0; 2 * dims];
            ep[dims + i] = 2;
            p.add_term(ep, C64::new(0.5, 0.0));
        }
        ClassicalHamiltonian { symbol: p }
    }

    /// `Σ_i p_i² / 2`.
    pub fn free_particle(dims: usize) -> Self {
        let mut p = PhasePoly::zero(2 * dims);
        for i in 0..dims {
            let mut ep = vec![0; 2 * dims];
            ep[dims + i] = 2;
            p.add_term(ep, C64::new(0.5, 0.0));
        }
        ClassicalHamiltonian { symbol: p }
    }

    pub fn dims(&self) -> usize {
        self.symbol.nvars() / 2
    }

    pub fn symbol(&self) -> &PhasePoly {
        &self.symbol
    }

    pub fn distributional(&self) -> Result<DistHam> {
        DistHam::from_symbol(&self.symbol, Ordering::Classical)
    }
}

fn check_classical(c: &CharField) -> Result<()> {
    if c.ordering() != Ordering::Classical {
        return Err(Error::OrderingMismatch {
            expected: Ordering::Classical,
            found: c.ordering(),
        });
    }
    Ok(())
}

/// Evaluator of the classical-kernel equation for `h` on `grid`.
pub fn classical_operator(
    h: &ClassicalHamiltonian,
    grid: &PhaseGrid,
    method: RhsMethod,
    accuracy: usize,
) -> Result<Box<dyn EomRhs>> {
    let dist = h.distributional()?;
    match method {
        RhsMethod::Distributional => Ok(Box::new(DistributionalOperator::new(
            &dist,
            grid,
            KernelKind::Classical,
        )?)),
        RhsMethod::Quadrature => {
            let lattice = lattice_sampled(&dist, grid, accuracy)?;
            Ok(Box::new(QuadratureRhs::new(
                &lattice,
                KernelKind::Classical,
            )?))
        }
        RhsMethod::StarProduct => Err(Error::IncompatibleRep(
            "the star-product path has no classical counterpart".into(),
        )),
    }
}

/// `∂C/∂t` under the classical kernel (distributional path).
pub fn classical_rhs(c: &CharField, h: &ClassicalHamiltonian) -> Result<CharField> {
    check_classical(c)?;
    classical_operator(h, c.grid(), RhsMethod::Distributional, 0)?.eval(c)
}

/// Phase-space density of a classical characteristic field.
pub fn to_density(c: &CharField) -> Result<WignerField> {
    check_classical(c)?;
    crate::wigner::transform_real(c)
}

pub fn from_density(p: &WignerField) -> Result<CharField> {
    Ok(crate::wigner::from_wigner(p)?.retagged(Ordering::Classical))
}

/// `∂P/∂t = Σ_i (∂_{x_i} H ∂_{p_i} P − ∂_{p_i} H ∂_{x_i} P)` with spectral
/// derivatives of `P`.
pub fn liouville_pde_rhs(p: &WignerField, h: &PhaseSymbol) -> Result<WignerField> {
    let grid = &p.grid;
    let n = grid.dims();
    let diff = SpectralDiff::for_dual_grid(grid).reflection_symmetric();
    let data: Vec<C64> = p.data.iter().map(|&v| C64::new(v, 0.0)).collect();
    let spectrum = diff.spectrum(&data);
    let mut out = vec![0.0; grid.len()];
    for i in 0..n {
        let mut ox = vec![0; 2 * n];
        ox[i] = 1;
        let mut op = vec![0; 2 * n];
        op[n + i] = 1;
        let hx = symbol_derivative(h, grid, &diff, &ox)?;
        let hp = symbol_derivative(h, grid, &diff, &op)?;
        let px = diff.from_spectrum(&spectrum, &ox);
        let pp = diff.from_spectrum(&spectrum, &op);
        out.par_iter_mut()
            .enumerate()
            .for_each(|(k, o)| *o += hx[k] * pp[k].re - hp[k] * px[k].re);
    }
    Ok(WignerField {
        grid: grid.clone(),
        data: out,
    })
}

fn symbol_derivative(
    h: &PhaseSymbol,
    grid: &PhaseGrid,
    diff: &SpectralDiff,
    order: &[u32],
) -> Result<Vec<f64>> {
    match h {
        PhaseSymbol::Polynomial(poly) => {
            if poly.nvars() != grid.axes() {
                return Err(Error::GridMismatch(format!(
                    "symbol has {} variables, grid has {} axes",
                    poly.nvars(),
                    grid.axes()
                )));
            }
            let d = poly.derivative(order);
            Ok((0..grid.len())
                .into_par_iter()
                .map(|i| d.eval(&grid.dual_point(i)).re)
                .collect())
        }
        PhaseSymbol::Sampled(s) => {
            grid.ensure_compatible(&s.grid)?;
            let data: Vec<C64> = s.data.iter().map(|&v| C64::new(v, 0.0)).collect();
            Ok(diff
                .derivative(&data, order)
                .into_iter()
                .map(|z| z.re)
                .collect())
        }
    }
}

/// Symmetric-minus-classical defect as `ħ` varies with the symbol and field
/// held fixed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HbarScan {
    pub hbars: Vec<f64>,
    /// `‖RHS_s(ħ) − RHS_c‖ / ‖RHS_c‖`.
    pub defects: Vec<f64>,
    /// `defect(ħ_k) / defect(ħ_{k+1})` for consecutive entries.
    pub ratios: Vec<f64>,
    /// `log(ratio) / log(ħ_k / ħ_{k+1})`.
    pub orders: Vec<f64>,
}

/// Runs the scan for the field values `c` (any ordering tag) and the
/// phase-space symbol `symbol`. An entry `ħ = 0` evaluates the classical
/// kernel itself and so reports a zero defect.
pub fn hbar_scan(c: &CharField, symbol: &PhasePoly, hbars: &[f64]) -> Result<HbarScan> {
    let grid = c.grid();
    let classical = DistHam::from_symbol(symbol, Ordering::Classical)?;
    let reference = DistributionalOperator::new(&classical, grid, KernelKind::Classical)?
        .eval(&c.clone().retagged(Ordering::Classical))?;
    let scale = reference.norm_l2();
    let mut defects = Vec::with_capacity(hbars.len());
    for &hbar in hbars {
        if !(hbar >= 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "ħ = {hbar} must be finite and non-negative"
            )));
        }
        if hbar == 0.0 {
            defects.push(0.0);
            continue;
        }
        let g = grid.with_hbar(hbar)?;
        let dist = DistHam {
            ordering: Ordering::Symmetric,
            ..classical.clone()
        };
        let field = CharField::new(g.clone(), c.data().to_vec(), Ordering::Symmetric)?;
        let quantum =
            DistributionalOperator::new(&dist, &g, KernelKind::Symmetric)?.eval(&field)?;
        let diff = quantum.retagged(Ordering::Classical);
        let d: f64 = diff
            .data()
            .iter()
            .zip(reference.data())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        defects.push(if scale > 0.0 { d / scale } else { d });
    }
    let mut ratios = Vec::new();
    let mut orders = Vec::new();
    for k in 0..hbars.len().saturating_sub(1) {
        let r = defects[k] / defects[k + 1];
        ratios.push(r);
        orders.push(r.ln() / (hbars[k] / hbars[k + 1]).ln());
    }
    Ok(HbarScan {
        hbars: hbars.to_vec(),
        defects,
        ratios,
        orders,
    })
}

/// `C(λ, μ, t) = C₀(λ(t), μ(t))` for `H = Σ (p² + ω²x²)/2`, with
/// `λ(t) = λ cos ωt − ωμ sin ωt` and `μ(t) = μ cos ωt + (λ/ω) sin ωt`.
pub fn harmonic_flow<F>(
    grid: &PhaseGrid,
    ordering: Ordering,
    omega: f64,
    t: f64,
    c0: F,
) -> Result<CharField>
where
    F: Fn(&[f64]) -> C64 + Sync,
{
    let n = grid.dims();
    let (cs, sn) = ((omega * t).cos(), (omega * t).sin());
    CharField::from_fn(grid, ordering, |z| {
        let mut m = z.to_vec();
        for i in 0..n {
            m[i] = z[i] * cs - omega * z[n + i] * sn;
            m[n + i] = z[n + i] * cs + z[i] / omega * sn;
        }
        c0(&m)
    })
}

/// `C(λ, μ, t) = C₀(λ, μ + λt)` for `H = Σ p²/2`.
pub fn free_shear<F>(grid: &PhaseGrid, ordering: Ordering, t: f64, c0: F) -> Result<CharField>
where
    F: Fn(&[f64]) -> C64 + Sync,
{
    let n = grid.dims();
    CharField::from_fn(grid, ordering, |z| {
        let mut m = z.to_vec();
        for i in 0..n {
            m[n + i] = z[n + i] + z[i] * t;
        }
        c0(&m)
    })
}
