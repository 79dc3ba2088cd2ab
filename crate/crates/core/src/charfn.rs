//! Characteristic functions of states: the test-state library, ordering
//! conversions, invariant checks and moment extraction.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{density_to_charfn, validity_radius, FockDensity};
use crate::grid::{CharField, GridSpec, Ordering, PhaseGrid};
use crate::poly::PhasePoly;
use crate::stencil;

/// A state from the built-in library.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateSpec {
    Coherent { alpha: C64 },
    Fock { n: usize },
    Thermal { nbar: f64 },
    Cat { alpha: C64, phase: f64 },
}

impl StateSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |z: C64| z.re.is_finite() && z.im.is_finite();
        match *self {
            StateSpec::Coherent { alpha } if !finite(alpha) => Err(Error::InvalidState(
                "coherent amplitude must be finite".into(),
            )),
            StateSpec::Thermal { nbar } if !(nbar >= 0.0 && nbar.is_finite()) => Err(
                Error::InvalidState(format!("thermal occupation {nbar} must be finite and ≥ 0")),
            ),
            StateSpec::Cat { alpha, phase } if !finite(alpha) || !phase.is_finite() => {
                Err(Error::InvalidState("cat parameters must be finite".into()))
            }
            StateSpec::Cat { alpha, phase }
                if alpha.norm() < 1e-8 && (phase - std::f64::consts::PI).abs() < 1e-8 =>
            {
                Err(Error::InvalidState(
                    "odd cat with α = 0 is the zero vector".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Truncation large enough that the discarded population is negligible.
    pub fn suggested_n_max(&self) -> usize {
        let need = match *self {
            StateSpec::Coherent { alpha } | StateSpec::Cat { alpha, .. } => {
                let n = alpha.norm_sqr();
                n + 10.0 * n.sqrt() + 20.0
            }
            StateSpec::Fock { n } => n as f64 + 4.0,
            StateSpec::Thermal { nbar } => {
                // q^N < 1e-15
                let q = nbar / (1.0 + nbar);
                if q <= 0.0 {
                    4.0
                } else {
                    (-35.0 / q.ln()).ceil() + 2.0
                }
            }
        };
        (need.ceil() as usize).clamp(8, 96)
    }
}

/// `C_target = e^{(s_source − s_target)|ξ|²} C_source`.
pub fn convert_ordering(c: &CharField, target: Ordering) -> Result<CharField> {
    let (Some(from), Some(to)) = (c.ordering().normal_shift(), target.normal_shift()) else {
        return Err(Error::ClassicalConversion {
            from: c.ordering(),
            to: target,
        });
    };
    if c.ordering() == target {
        return Ok(c.clone());
    }
    let grid = c.grid();
    let shift = from - to;
    let data = c
        .data()
        .par_iter()
        .enumerate()
        .map(|(i, v)| v * (shift * grid.xi_norm_sqr(&grid.point(i))).exp())
        .collect();
    CharField::new(grid.clone(), data, target)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct InvariantReport {
    /// `|C(0) − 1|`.
    pub normalization: f64,
    /// `max |C(−z) − conj C(z)|` over reflectable nodes.
    pub hermiticity: f64,
    /// `max (|C| − bound)₊`.
    pub bound_violation: f64,
}

/// Upper bound on `|C|` for a physical state at squared radius `q = |ξ|²`.
pub fn ordering_bound(ordering: Ordering, q: f64) -> Option<f64> {
    match ordering {
        Ordering::Normal => Some((0.5 * q).exp()),
        Ordering::Symmetric => Some(1.0),
        Ordering::Antinormal => Some((-0.5 * q).exp()),
        Ordering::Classical => None,
    }
}

pub fn hermiticity_defect(c: &CharField) -> f64 {
    let grid = c.grid();
    let d = c.data();
    (0..grid.len())
        .into_par_iter()
        .filter_map(|i| grid.reflected(i).map(|j| (d[j] - d[i].conj()).norm()))
        .reduce(|| 0.0, f64::max)
}

pub fn check_invariants(c: &CharField) -> InvariantReport {
    check_invariants_within(c, f64::INFINITY)
}

/// As [`check_invariants`], with bounds only tested where `|ξ|² ≤ radius`.
pub fn check_invariants_within(c: &CharField, radius: f64) -> InvariantReport {
    let grid = c.grid();
    let ordering = c.ordering();
    let bound_violation = (0..grid.len())
        .into_par_iter()
        .filter_map(|i| {
            let q = grid.xi_norm_sqr(&grid.point(i));
            if q > radius {
                return None;
            }
            ordering_bound(ordering, q).map(|b| (c.data()[i].norm() - b).max(0.0))
        })
        .reduce(|| 0.0, f64::max);
    InvariantReport {
        normalization: (c.at_origin() - 1.0).norm(),
        hermiticity: hermiticity_defect(c),
        bound_violation,
    }
}

/// Oracle-generated characteristic function with its truncation diagnostics.
#[derive(Clone, Debug)]
pub struct StateField {
    pub field: CharField,
    pub n_max: usize,
    /// Set when some node lies outside the oracle's validity radius.
    pub truncation_warning: bool,
}

pub fn make_state_charfn(
    spec: &StateSpec,
    grid: &PhaseGrid,
    ordering: Ordering,
) -> Result<StateField> {
    make_state_charfn_with(spec, grid, ordering, spec.suggested_n_max())
}

/// Samples the ordered characteristic function of `spec` on `grid` through
/// the Fock oracle. Multi-mode grids receive the same state in every mode.
pub fn make_state_charfn_with(
    spec: &StateSpec,
    grid: &PhaseGrid,
    ordering: Ordering,
    n_max: usize,
) -> Result<StateField> {
    let rho = FockDensity::from_state(spec, n_max)?;
    if grid.dims() == 1 {
        let out = density_to_charfn(&rho, grid, ordering)?;
        return Ok(StateField {
            truncation_warning: grid.max_xi_norm_sqr() > validity_radius(n_max),
            field: out.field,
            n_max,
        });
    }
    let factors = (0..grid.dims())
        .map(|i| {
            let g = mode_grid(grid, i)?;
            Ok(density_to_charfn(&rho, &g, ordering)?.field)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StateField {
        field: CharField::tensor_product(&factors)?,
        n_max,
        truncation_warning: grid.max_xi_norm_sqr() > validity_radius(n_max),
    })
}

/// The one-dimensional grid of mode `i`.
pub fn mode_grid(grid: &PhaseGrid, i: usize) -> Result<PhaseGrid> {
    PhaseGrid::new(&GridSpec {
        dims: 1,
        points: vec![grid.points()[i]],
        extent_lambda: vec![grid.extent_lambda()[i]],
        extent_mu: vec![grid.extent_mu()[i]],
        hbar: grid.hbar(),
        omega: grid.omega(),
    })
}

/// `⟨â†^m â^n⟩` from a single-mode normal-order field by fourth-order central
/// differences at the origin.
///
/// With `s = √(ħ/2ω)`, `∂/∂(iξ) = −(i/2s)(∂_λ + (i/ω)∂_μ)` and
/// `∂/∂(iξ̄) = −(i/2s)(∂_λ − (i/ω)∂_μ)`.
pub fn moments_from_charfn(c: &CharField, m: u32, n: u32) -> Result<C64> {
    if c.ordering() != Ordering::Normal {
        return Err(Error::OrderingMismatch {
            expected: Ordering::Normal,
            found: c.ordering(),
        });
    }
    let grid = c.grid();
    if grid.dims() != 1 {
        return Err(Error::Unsupported(
            "moments are extracted for one mode".into(),
        ));
    }
    if m + n > 4 {
        return Err(Error::DegreeOverflow {
            degree: (m + n) as usize,
            max: 4,
        });
    }
    let s = (grid.hbar() / (2.0 * grid.omega())).sqrt();
    let w = grid.omega();
    let pre = C64::new(0.0, -1.0 / (2.0 * s));
    let d_xi = PhasePoly::from_terms(
        2,
        [
            (vec![1, 0], pre),
            (vec![0, 1], pre * C64::new(0.0, 1.0 / w)),
        ],
    );
    let d_xibar = PhasePoly::from_terms(
        2,
        [
            (vec![1, 0], pre),
            (vec![0, 1], pre * C64::new(0.0, -1.0 / w)),
        ],
    );
    let op = d_xibar.pow(m).mul(&d_xi.pow(n));
    let origin = grid.origin_index();
    let (dl, dm) = (grid.spacing(0), grid.spacing(1));
    let mut total = C64::new(0.0, 0.0);
    for (e, coeff) in op.terms() {
        let (hl, wl) = stencil::central(e[0] as usize, 4);
        let (hm, wm) = stencil::central(e[1] as usize, 4);
        for (a, wa) in wl.iter().enumerate() {
            for (b, wb) in wm.iter().enumerate() {
                if *wa == 0.0 || *wb == 0.0 {
                    continue;
                }
                let idx = [
                    (origin[0] + a).checked_sub(hl),
                    (origin[1] + b).checked_sub(hm),
                ];
                let (Some(i0), Some(i1)) = (idx[0], idx[1]) else {
                    return Err(Error::Resolution {
                        order: (m + n) as usize,
                        points: grid.points()[0],
                    });
                };
                let v = c.at(&[i0, i1]).map_err(|_| Error::Resolution {
                    order: (m + n) as usize,
                    points: grid.points()[0],
                })?;
                total += coeff * v * (wa / dl.powi(e[0] as i32)) * (wb / dm.powi(e[1] as i32));
            }
        }
    }
    Ok(total)
}
