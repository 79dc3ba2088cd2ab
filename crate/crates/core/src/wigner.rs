//! Wigner-function view of symmetric-order fields and the Moyal-series
//! equation of motion.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    fourier_from_phase, fourier_to_phase, CharField, Ordering, PhaseGrid, PhaseSpaceField,
    SpectralDiff,
};
use crate::poly::PhasePoly;

/// Largest relative imaginary residue accepted when transforming to `W`.
pub const REALNESS_TOLERANCE: f64 = 1e-10;

/// A real function on the dual `(x, p)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub data: Vec<f64>,
}

impl WignerField {
    pub fn from_fn<F>(grid: &PhaseGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.dual_point(i)))
            .collect();
        WignerField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn mass(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.dual_cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn relative_l2(&self, reference: &WignerField) -> f64 {
        let num: f64 = self
            .data
            .iter()
            .zip(&reference.data)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = reference.data.iter().map(|b| b * b).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    pub fn max_abs_diff(&self, other: &WignerField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn complex(&self) -> PhaseSpaceField {
        PhaseSpaceField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }
}

fn realize(f: PhaseSpaceField) -> Result<WignerField> {
    let norm = f.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let residue = f.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > REALNESS_TOLERANCE * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotReal(residue / norm));
    }
    Ok(WignerField {
        grid: f.grid,
        data: f.data.iter().map(|z| z.re).collect(),
    })
}

/// The first row of each axis samples the periodic boundary `±L`; its value
/// becomes the mean of `C(c)` and `conj C(−c)` there.
fn boundary_averaged(c: &CharField) -> CharField {
    let grid = c.grid();
    let data = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if grid.reflected(i).is_some() {
                return c.data()[i];
            }
            (c.data()[i] + c.data()[grid.periodic_mirror(i)].conj()) * 0.5
        })
        .collect();
    CharField::from_parts_unchecked(grid.clone(), data, c.ordering())
}

/// `W = (2π)^{-2N} ∫ C⁽ˢ⁾ e^{−i(λx+μp)}`.
pub fn to_wigner(c: &CharField) -> Result<WignerField> {
    if c.ordering() != Ordering::Symmetric {
        return Err(Error::OrderingMismatch {
            expected: Ordering::Symmetric,
            found: c.ordering(),
        });
    }
    transform_real(c)
}

/// Transform of a field whose image should be real, checked to
/// [`REALNESS_TOLERANCE`].
pub(crate) fn transform_real(c: &CharField) -> Result<WignerField> {
    let w = realize(fourier_to_phase(&boundary_averaged(c)))?;
    debug_assert!((w.mass() - c.at_origin().re).abs() <= 1e-8 * (1.0 + c.at_origin().norm()));
    Ok(w)
}

pub fn from_wigner(w: &WignerField) -> Result<CharField> {
    fourier_from_phase(&w.complex(), Ordering::Symmetric)
}

/// Truncation of the Moyal series at `m = 0..=M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoyalOrder {
    pub m: usize,
}

impl MoyalOrder {
    pub const CLASSICAL: MoyalOrder = MoyalOrder { m: 0 };

    pub fn new(m: usize) -> Self {
        MoyalOrder { m }
    }

    /// Smallest order at which the series is exact for a symbol of the given
    /// polynomial degree.
    pub fn terminating(degree: usize) -> Self {
        MoyalOrder {
            m: degree.saturating_sub(1) / 2,
        }
    }

    /// `b_m = (−1)^m (ħ/2)^{2m} / (2m+1)!`.
    pub fn b(m: usize, hbar: f64) -> f64 {
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        let fact: f64 = (1..=(2 * m + 1)).map(|k| k as f64).product();
        sign * (0.5 * hbar).powi(2 * m as i32) / fact
    }

    pub fn coefficients(&self, hbar: f64) -> Vec<f64> {
        (0..=self.m).map(|m| MoyalOrder::b(m, hbar)).collect()
    }
}

/// A phase-space symbol `H̃(x, p)` in one of two forms.
#[derive(Clone, Debug)]
pub enum PhaseSymbol {
    /// Exact derivatives of a polynomial.
    Polynomial(PhasePoly),
    /// Samples on the dual grid, differentiated spectrally.
    Sampled(WignerField),
}

impl PhaseSymbol {
    fn derivative(&self, grid: &PhaseGrid, diff: &SpectralDiff, order: &[u32]) -> Result<Vec<f64>> {
        match self {
            PhaseSymbol::Polynomial(p) => {
                if p.nvars() != grid.axes() {
                    return Err(Error::GridMismatch(format!(
                        "symbol has {} variables, grid has {} axes",
                        p.nvars(),
                        grid.axes()
                    )));
                }
                let d = p.derivative(order);
                Ok((0..grid.len())
                    .into_par_iter()
                    .map(|i| d.eval(&grid.dual_point(i)).re)
                    .collect())
            }
            PhaseSymbol::Sampled(h) => {
                grid.ensure_compatible(&h.grid)?;
                let data: Vec<C64> = h.data.iter().map(|&v| C64::new(v, 0.0)).collect();
                Ok(diff
                    .derivative(&data, order)
                    .into_iter()
                    .map(|z| z.re)
                    .collect())
            }
        }
    }
}

/// Every `(a, b)` with `Σa + Σb = n`, `a, b ∈ ℕ^N`, and its multinomial weight.
fn compositions(n: u32, parts: usize) -> Vec<(Vec<u32>, f64)> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, parts, &mut Vec::new(), &mut out);
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    out.into_iter()
        .map(|e| {
            let w = fact(n) / e.iter().map(|&k| fact(k)).product::<f64>();
            (e, w)
        })
        .collect()
}

/// `∂W/∂t = Σ_{m≤M} b_m · H̃ Λ^{2m+1} W` with
/// `Λ = Σ_i (←∂_{x_i} →∂_{p_i} − ←∂_{p_i} →∂_{x_i})`.
///
/// The `m = 0` term is the Poisson bracket `∂_x H̃ ∂_p W − ∂_p H̃ ∂_x W`.
pub fn moyal_rhs(w: &WignerField, h: &PhaseSymbol, order: MoyalOrder) -> Result<WignerField> {
    let grid = &w.grid;
    let n = grid.dims();
    let top = 2 * order.m + 1;
    for ax in 0..grid.axes() {
        if top >= grid.shape()[ax] / 2 {
            return Err(Error::Resolution {
                order: top,
                points: grid.shape()[ax],
            });
        }
    }
    let diff = SpectralDiff::for_dual_grid(grid).reflection_symmetric();
    let wdata: Vec<C64> = w.data.iter().map(|&v| C64::new(v, 0.0)).collect();
    let spectrum = diff.spectrum(&wdata);
    let mut out = vec![0.0; grid.len()];
    for (m, bm) in order.coefficients(grid.hbar()).into_iter().enumerate() {
        for (parts, weight) in compositions(2 * m as u32 + 1, 2 * n) {
            // parts = (a_1..a_N, b_1..b_N): a on ←∂x→∂p, b on ←∂p→∂x
            let (a, b) = parts.split_at(n);
            let sign = if b.iter().sum::<u32>() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let h_order: Vec<u32> = a.iter().chain(b).copied().collect();
            let w_order: Vec<u32> = b.iter().chain(a).copied().collect();
            let hd = h.derivative(grid, &diff, &h_order)?;
            if hd.iter().all(|&v| v == 0.0) {
                continue;
            }
            let wd = diff.from_spectrum(&spectrum, &w_order);
            let f = bm * weight * sign;
            out.par_iter_mut()
                .zip(hd.par_iter().zip(wd.par_iter()))
                .for_each(|(o, (hv, wv))| *o += f * hv * wv.re);
        }
    }
    Ok(WignerField {
        grid: grid.clone(),
        data: out,
    })
}

/// A one-dimensional polynomial potential `V(x) = Σ v_k x^k`, degree ≤ 6.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub coeffs: Vec<f64>,
}

impl Potential {
    pub const MAX_DEGREE: usize = 6;

    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let p = Potential { coeffs };
        if p.degree() > Potential::MAX_DEGREE {
            return Err(Error::DegreeOverflow {
                degree: p.degree(),
                max: Potential::MAX_DEGREE,
            });
        }
        Ok(p)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// `d^k V / dx^k` at `x`.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        let mut s = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().skip(k) {
            let falling: f64 = ((j - k + 1)..=j).map(|v| v as f64).product();
            s += c * falling * x.powi((j - k) as i32);
        }
        s
    }

    /// The symbol `p²/2 + V(x)`.
    pub fn hamiltonian_symbol(&self) -> PhasePoly {
        let mut p = PhasePoly::from_terms(2, [(vec![0, 2], C64::new(0.5, 0.0))]);
        for (j, &c) in self.coeffs.iter().enumerate() {
            p.add_term(vec![j as u32, 0], C64::new(c, 0.0));
        }
        p
    }
}

/// `∂W/∂t = −p ∂_x W + V′ ∂_p W + Σ_{m≥1} b_m V^{(2m+1)} ∂_p^{2m+1} W`
/// for `H̃ = p²/2 + V(x)` in one dimension.
pub fn kinetic_potential_rhs(w: &WignerField, v: &Potential) -> Result<WignerField> {
    let grid = &w.grid;
    if grid.dims() != 1 {
        return Err(Error::Unsupported(
            "the kinetic + potential form is one-dimensional".into(),
        ));
    }
    if v.degree() > Potential::MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: v.degree(),
            max: Potential::MAX_DEGREE,
        });
    }
    let order = MoyalOrder::terminating(v.degree().max(2));
    let top = 2 * order.m + 1;
    for ax in 0..2 {
        if top >= grid.shape()[ax] / 2 {
            return Err(Error::Resolution {
                order: top,
                points: grid.shape()[ax],
            });
        }
    }
    let diff = SpectralDiff::for_dual_grid(grid).reflection_symmetric();
    let wdata: Vec<C64> = w.data.iter().map(|&v| C64::new(v, 0.0)).collect();
    let spectrum = diff.spectrum(&wdata);
    let dx = diff.from_spectrum(&spectrum, &[1, 0]);
    let mut out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let pt = grid.dual_point(i);
            -pt[1] * dx[i].re
        })
        .collect();
    for m in 0..=order.m {
        let k = 2 * m + 1;
        let dp = diff.from_spectrum(&spectrum, &[0, k as u32]);
        let bm = MoyalOrder::b(m, grid.hbar());
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let x = grid.dual_point(i)[0];
            *o += bm * v.derivative(k, x) * dp[i].re;
        });
    }
    Ok(WignerField {
        grid: grid.clone(),
        data: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::{make_state_charfn, StateSpec};
    use crate::evolution::{rhs_for_hamiltonian, RhsMethod};
    use crate::grid::GridSpec;
    use crate::hamiltonian::{PolyHamiltonian, SymbolKind};
    use proptest::prelude::*;

    fn grid(g: usize, l: f64) -> PhaseGrid {
        PhaseGrid::new(&GridSpec::uniform(1, g, l, 1.0, 1.0)).unwrap()
    }

    fn gaussian_w(g: &PhaseGrid, x0: f64, p0: f64, s: f64) -> WignerField {
        WignerField::from_fn(g, |z| {
            (-((z[0] - x0).powi(2) + (z[1] - p0).powi(2)) / (2.0 * s * s)).exp()
                / (2.0 * std::f64::consts::PI * s * s)
        })
    }

    #[test]
    fn b_coefficients() {
        assert_eq!(MoyalOrder::b(0, 0.7), 1.0);
        assert!((MoyalOrder::b(1, 1.0) + 1.0 / 24.0).abs() < 1e-15);
        assert!((MoyalOrder::b(2, 2.0) - 1.0 / 120.0).abs() < 1e-15);
        assert_eq!(MoyalOrder::terminating(2).m, 0);
        assert_eq!(MoyalOrder::terminating(4).m, 1);
        assert_eq!(MoyalOrder::terminating(6).m, 2);
    }

    #[test]
    fn vacuum_is_positive_gaussian() {
        let g = grid(48, 8.0);
        let c = make_state_charfn(&StateSpec::Fock { n: 0 }, &g, Ordering::Symmetric)
            .unwrap()
            .field;
        let w = to_wigner(&c).unwrap();
        assert!((w.mass() - 1.0).abs() < 1e-6);
        assert!(w.min() >= -1e-8);
    }

    #[test]
    fn fock_one_is_negative_at_origin() {
        let g = grid(48, 8.0);
        let c = make_state_charfn(&StateSpec::Fock { n: 1 }, &g, Ordering::Symmetric)
            .unwrap()
            .field;
        let w = to_wigner(&c).unwrap();
        assert!(w.min() < -0.1);
        let origin = g.origin_flat();
        assert!((w.data[origin] + 1.0 / std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn round_trip_and_rejections() {
        let g = grid(48, 12.0);
        let c = make_state_charfn(
            &StateSpec::Coherent {
                alpha: C64::new(0.5, -0.2),
            },
            &g,
            Ordering::Symmetric,
        )
        .unwrap()
        .field;
        let back = from_wigner(&to_wigner(&c).unwrap()).unwrap();
        assert!(back.max_abs_diff(&c) < 1e-12, "{}", back.max_abs_diff(&c));
        assert!(matches!(
            to_wigner(&c.clone().retagged(Ordering::Normal)),
            Err(Error::OrderingMismatch { .. })
        ));
        let odd = CharField::from_fn(&g, Ordering::Symmetric, |p| {
            C64::new(0.0, (-p[0] * p[0] - p[1] * p[1]).exp())
        })
        .unwrap();
        assert!(matches!(to_wigner(&odd), Err(Error::NotReal(_))));
    }

    #[test]
    fn quadratic_symbol_terminates() {
        let g = grid(32, 8.0);
        let w = gaussian_w(&g, 0.7, -0.4, 0.8);
        let h = PhaseSymbol::Polynomial(PhasePoly::from_terms(
            2,
            [
                (vec![0, 2], C64::new(0.5, 0.0)),
                (vec![2, 0], C64::new(0.5, 0.0)),
            ],
        ));
        let r0 = moyal_rhs(&w, &h, MoyalOrder::new(0)).unwrap();
        let r3 = moyal_rhs(&w, &h, MoyalOrder::new(3)).unwrap();
        assert!(r3.max_abs_diff(&r0) <= 1e-12 * (1.0 + r0.norm_l2()));
    }

    #[test]
    fn quartic_symbol_terminates_at_one() {
        let g = grid(48, 8.0);
        let w = gaussian_w(&g, 0.7, -0.4, 0.8);
        let v = Potential::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let h = PhaseSymbol::Polynomial(v.hamiltonian_symbol());
        let r1 = moyal_rhs(&w, &h, MoyalOrder::new(1)).unwrap();
        let r5 = moyal_rhs(&w, &h, MoyalOrder::new(5)).unwrap();
        assert!(r5.max_abs_diff(&r1) <= 1e-12 * (1.0 + r1.norm_l2()));
        let kp = kinetic_potential_rhs(&w, &v).unwrap();
        assert!(kp.max_abs_diff(&r1) <= 1e-10 * (1.0 + r1.norm_l2()));
    }

    #[test]
    fn kinetic_potential_limits() {
        let g = grid(32, 8.0);
        let w = gaussian_w(&g, 0.7, -0.4, 0.8);
        let free = kinetic_potential_rhs(&w, &Potential::new(vec![]).unwrap()).unwrap();
        let diff = SpectralDiff::for_dual_grid(&g).reflection_symmetric();
        let wc: Vec<C64> = w.data.iter().map(|&v| C64::new(v, 0.0)).collect();
        let dx = diff.derivative(&wc, &[1, 0]);
        for i in 0..g.len() {
            let p = g.dual_point(i)[1];
            assert!((free.data[i] + p * dx[i].re).abs() < 1e-12);
        }
        let harmonic =
            kinetic_potential_rhs(&w, &Potential::new(vec![0.0, 0.0, 0.5]).unwrap()).unwrap();
        let sym = PhaseSymbol::Polynomial(
            Potential::new(vec![0.0, 0.0, 0.5])
                .unwrap()
                .hamiltonian_symbol(),
        );
        let m0 = moyal_rhs(&w, &sym, MoyalOrder::CLASSICAL).unwrap();
        assert!(harmonic.max_abs_diff(&m0) <= 1e-12);
    }

    #[test]
    fn transform_of_symmetric_rhs_is_moyal() {
        let g = grid(48, 10.0);
        let c = make_state_charfn(
            &StateSpec::Coherent {
                alpha: C64::new(0.6, 0.2),
            },
            &g,
            Ordering::Symmetric,
        )
        .unwrap()
        .field;
        let w = to_wigner(&c).unwrap();
        for h in [
            PolyHamiltonian::harmonic(1, 1.0, 1.0),
            PolyHamiltonian::quartic(1.0, 1.0, 0.1),
        ] {
            let rc = rhs_for_hamiltonian(RhsMethod::Distributional, &h, &g, Ordering::Symmetric, 8)
                .unwrap()
                .eval(&c)
                .unwrap();
            let via_c = to_wigner(&rc).unwrap();
            let weyl = h.symbol(SymbolKind::Weyl, 1.0, 1.0);
            let order = MoyalOrder::terminating(weyl.degree());
            let via_w = moyal_rhs(&w, &PhaseSymbol::Polynomial(weyl), order).unwrap();
            assert!(
                via_w.relative_l2(&via_c) < 1e-8,
                "{}",
                via_w.relative_l2(&via_c)
            );
        }
    }

    #[test]
    fn resolution_guard() {
        let g = grid(8, 4.0);
        let w = gaussian_w(&g, 0.0, 0.0, 1.0);
        let h = PhaseSymbol::Polynomial(PhasePoly::zero(2));
        assert!(matches!(
            moyal_rhs(&w, &h, MoyalOrder::new(2)),
            Err(Error::Resolution { .. })
        ));
        assert!(Potential::new(vec![0.0; 9].into_iter().chain([1.0]).collect()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn moyal_output_is_massless(x0 in -1.0f64..1.0, p0 in -1.0f64..1.0, s in 0.6f64..1.2, g4 in 0.0f64..0.5, m in 0usize..3) {
            let g = grid(48, 8.0);
            let w = gaussian_w(&g, x0, p0, s);
            let h = PhaseSymbol::Polynomial(Potential::new(vec![0.0, 0.3, 0.5, 0.1, g4]).unwrap().hamiltonian_symbol());
            let r = moyal_rhs(&w, &h, MoyalOrder::new(m)).unwrap();
            prop_assert!(r.mass().abs() <= 1e-10, "{}", r.mass());
        }
    }
}
