//! Polynomial Hamiltonians in ladder operators and their characteristic
//! representations.
//!
//! A Hamiltonian is stored normal-ordered, `Ĥ = Σ c · Π_i â_i†^{j_i} â_i^{k_i}`.
//! Its characteristic function in ordering `o` is the Fourier transform of a
//! phase-space symbol, and for a polynomial symbol that transform is a finite
//! sum of delta-function derivatives:
//!
//! | characteristic ordering | symbol                 |
//! |-------------------------|------------------------|
//! | normal                  | antinormal-ordered     |
//! | symmetric               | Weyl                   |
//! | antinormal              | normal-ordered         |
//!
//! with `x^e p^f ↦ (−i)^{e+f} ∂_λ^e ∂_μ^f δ(λ)δ(μ)` per mode.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_ops, matrix_to_charfn, CMatrix, FockOperator};
use crate::grid::{CharField, Ordering, PhaseGrid};
use crate::poly::PhasePoly;
use crate::stencil;

pub const MAX_DEGREE: usize = 6;

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// One normal-ordered monomial `c · Π_i â_i†^{creation_i} â_i^{annihilation_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamTerm {
    pub creation: Vec<u32>,
    pub annihilation: Vec<u32>,
    pub coeff: C64,
}

/// Normal-ordered polynomial in the ladder operators of `modes` modes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PolyHamiltonian {
    modes: usize,
    terms: BTreeMap<(Vec<u32>, Vec<u32>), C64>,
}

impl PolyHamiltonian {
    pub fn zero(modes: usize) -> Self {
        PolyHamiltonian {
            modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(modes: usize, c: C64) -> Self {
        let mut h = PolyHamiltonian::zero(modes);
        h.add(vec![0; modes], vec![0; modes], c);
        h
    }

    pub fn from_terms(modes: usize, terms: &[HamTerm]) -> Result<Self> {
        let mut h = PolyHamiltonian::zero(modes);
        for t in terms {
            if t.creation.len() != modes || t.annihilation.len() != modes {
                return Err(Error::InvalidState(format!(
                    "term exponents must have {modes} entries per operator"
                )));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::InvalidState(
                    "non-finite Hamiltonian coefficient".into(),
                ));
            }
            h.add(t.creation.clone(), t.annihilation.clone(), t.coeff);
        }
        h.check_degree()?;
        Ok(h)
    }

    /// Single-mode terms `(j, k, c)` meaning `c · â†^j â^k`.
    pub fn single_mode(terms: &[(u32, u32, C64)]) -> Result<Self> {
        let t: Vec<HamTerm> = terms
            .iter()
            .map(|&(j, k, c)| HamTerm {
                creation: vec![j],
                annihilation: vec![k],
                coeff: c,
            })
            .collect();
        PolyHamiltonian::from_terms(1, &t)
    }

    /// `ħω Σ_i (â_i†â_i + ½)`.
    pub fn harmonic(modes: usize, hbar: f64, omega: f64) -> Self {
        let mut h =
            PolyHamiltonian::identity(modes, C64::new(0.5 * hbar * omega * modes as f64, 0.0));
        for i in 0..modes {
            let mut e = vec![0; modes];
            e[i] = 1;
            h.add(e.clone(), e, C64::new(hbar * omega, 0.0));
        }
        h
    }

    /// `χ (â†â)² = χ (â†²â² + â†â)`.
    pub fn kerr(chi: f64) -> Self {
        PolyHamiltonian::single_mode(&[(2, 2, C64::new(chi, 0.0)), (1, 1, C64::new(chi, 0.0))])
            .expect("valid preset")
    }

    /// `ħω(â†â + ½) + g x̂⁴`, `x̂ = √(ħ/2ω)(â† + â)`.
    pub fn quartic(hbar: f64, omega: f64, g: f64) -> Self {
        let s = (hbar / (2.0 * omega)).sqrt();
        let x = PolyHamiltonian::single_mode(&[(1, 0, C64::new(s, 0.0)), (0, 1, C64::new(s, 0.0))])
            .expect("valid preset");
        let x2 = x.mul(&x);
        PolyHamiltonian::harmonic(1, hbar, omega).plus(&x2.mul(&x2).scaled(C64::new(g, 0.0)))
    }

    /// Two-mode `ħω(â₁†â₁ + â₂†â₂ + 1) + g(â₁†â₂ + â₂†â₁)`.
    pub fn beam_splitter(hbar: f64, omega: f64, g: f64) -> Self {
        let mut h = PolyHamiltonian::harmonic(2, hbar, omega);
        h.add(vec![1, 0], vec![0, 1], C64::new(g, 0.0));
        h.add(vec![0, 1], vec![1, 0], C64::new(g, 0.0));
        h
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> Vec<HamTerm> {
        self.terms
            .iter()
            .map(|((j, k), c)| HamTerm {
                creation: j.clone(),
                annihilation: k.clone(),
                coeff: *c,
            })
            .collect()
    }

    fn add(&mut self, j: Vec<u32>, k: Vec<u32>, c: C64) {
        let key = (j, k);
        let e = self.terms.entry(key.clone()).or_default();
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|(j, k)| (j.iter().sum::<u32>() + k.iter().sum::<u32>()) as usize)
            .max()
            .unwrap_or(0)
    }

    fn check_degree(&self) -> Result<()> {
        let d = self.degree();
        if d > MAX_DEGREE {
            return Err(Error::DegreeOverflow {
                degree: d,
                max: MAX_DEGREE,
            });
        }
        Ok(())
    }

    /// `max |c_{jk} − conj c_{kj}|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.terms
            .iter()
            .map(|((j, k), c)| {
                let partner = self
                    .terms
                    .get(&(k.clone(), j.clone()))
                    .copied()
                    .unwrap_or_default();
                (c - partner.conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let d = self.hermiticity_defect();
        let scale = self.terms.values().map(|c| c.norm()).fold(1.0, f64::max);
        if d > 1e-12 * scale {
            return Err(Error::NotHermitian(d));
        }
        Ok(())
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut h = PolyHamiltonian::zero(self.modes);
        for ((j, k), c) in &self.terms {
            h.add(j.clone(), k.clone(), c * s);
        }
        h
    }

    pub fn plus(&self, other: &PolyHamiltonian) -> Self {
        let mut h = self.clone();
        for ((j, k), c) in &other.terms {
            h.add(j.clone(), k.clone(), *c);
        }
        h
    }

    /// Operator product, re-normal-ordered with
    /// `â^k â†^l = Σ_r r! C(k,r) C(l,r) â†^{l−r} â^{k−r}` in each mode.
    pub fn mul(&self, other: &PolyHamiltonian) -> Self {
        let mut out = PolyHamiltonian::zero(self.modes);
        for ((j1, k1), c1) in &self.terms {
            for ((j2, k2), c2) in &other.terms {
                // per-mode expansions, combined as a Cartesian product
                let mut partial: Vec<(Vec<u32>, Vec<u32>, f64)> = vec![(vec![], vec![], 1.0)];
                for m in 0..self.modes {
                    let (k, l) = (k1[m], j2[m]);
                    let mut next = Vec::new();
                    for (cj, ck, w) in &partial {
                        for r in 0..=k.min(l) {
                            let coef = factorial(r) * binom(k, r) * binom(l, r);
                            let mut nj = cj.clone();
                            nj.push(j1[m] + l - r);
                            let mut nk = ck.clone();
                            nk.push(k - r + k2[m]);
                            next.push((nj, nk, w * coef));
                        }
                    }
                    partial = next;
                }
                for (j, k, w) in partial {
                    out.add(j, k, c1 * c2 * w);
                }
            }
        }
        out
    }

    /// Matrix on an `n_max`-level truncation (single mode).
    pub fn to_fock(&self, n_max: usize) -> Result<FockOperator> {
        if self.modes != 1 {
            return Err(Error::Unsupported(
                "Fock matrices are built for one mode".into(),
            ));
        }
        let ops = build_ops(n_max, 1.0, 1.0)?;
        let mut m = CMatrix::zeros(n_max, n_max);
        for ((j, k), c) in &self.terms {
            let mut op = CMatrix::identity(n_max, n_max);
            for _ in 0..j[0] {
                op = &op * &ops.adag;
            }
            for _ in 0..k[0] {
                op = &op * &ops.a;
            }
            m += op * *c;
        }
        Ok(FockOperator { matrix: m })
    }

    /// Phase-space symbol in `(x_1..x_N, p_1..p_N)` of the requested kind.
    pub fn symbol(&self, kind: SymbolKind, hbar: f64, omega: f64) -> PhasePoly {
        let n = self.modes;
        let norm = (2.0 * hbar * omega).sqrt();
        let mut alpha = Vec::with_capacity(n);
        let mut alpha_bar = Vec::with_capacity(n);
        for i in 0..n {
            let x = PhasePoly::variable(2 * n, i).scale(C64::new(omega / norm, 0.0));
            let p = PhasePoly::variable(2 * n, n + i).scale(C64::new(0.0, 1.0 / norm));
            alpha.push(x.add(&p));
            alpha_bar.push(x.add(&p.scale(C64::new(-1.0, 0.0))));
        }
        let contraction = match kind {
            SymbolKind::Normal => 0.0f64,
            SymbolKind::Weyl => -0.5,
            SymbolKind::Antinormal => -1.0,
        };
        let mut out = PhasePoly::zero(2 * n);
        for ((j, k), c) in &self.terms {
            let mut term = PhasePoly::constant(2 * n, *c);
            for m in 0..n {
                let mut mode = PhasePoly::zero(2 * n);
                for r in 0..=j[m].min(k[m]) {
                    let w =
                        factorial(r) * binom(j[m], r) * binom(k[m], r) * contraction.powi(r as i32);
                    if w == 0.0 {
                        continue;
                    }
                    let mono = alpha_bar[m].pow(j[m] - r).mul(&alpha[m].pow(k[m] - r));
                    mode = mode.add(&mono.scale(C64::new(w, 0.0)));
                }
                term = term.mul(&mode);
            }
            out = out.add(&term);
        }
        out.pruned(1e-14 * self.terms.values().map(|c| c.norm()).fold(1.0, f64::max))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Normal,
    Weyl,
    Antinormal,
}

impl SymbolKind {
    /// Symbol whose Fourier transform is the characteristic function of the
    /// given ordering.
    pub fn for_ordering(o: Ordering) -> Option<SymbolKind> {
        match o {
            Ordering::Normal => Some(SymbolKind::Antinormal),
            Ordering::Symmetric => Some(SymbolKind::Weyl),
            Ordering::Antinormal => Some(SymbolKind::Normal),
            Ordering::Classical => None,
        }
    }
}

/// `Σ_β d_β ∂^β δ` over the axes `(λ_1..λ_N, μ_1..μ_N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistHam {
    pub dims: usize,
    pub ordering: Ordering,
    pub terms: Vec<(Vec<u32>, C64)>,
}

impl DistHam {
    /// Transform of a polynomial symbol in `(x, p)`.
    pub fn from_symbol(symbol: &PhasePoly, ordering: Ordering) -> Result<Self> {
        if symbol.degree() > MAX_DEGREE {
            return Err(Error::DegreeOverflow {
                degree: symbol.degree(),
                max: MAX_DEGREE,
            });
        }
        let minus_i = C64::new(0.0, -1.0);
        let terms = symbol
            .terms()
            .map(|(e, c)| (e.clone(), c * minus_i.powu(e.iter().sum())))
            .collect();
        Ok(DistHam {
            dims: symbol.nvars() / 2,
            ordering,
            terms,
        })
    }

    /// Inverse of [`DistHam::from_symbol`].
    pub fn symbol(&self) -> PhasePoly {
        let i = C64::new(0.0, 1.0);
        PhasePoly::from_terms(
            2 * self.dims,
            self.terms
                .iter()
                .map(|(e, d)| (e.clone(), d * i.powu(e.iter().sum()))),
        )
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, d)| d.norm() == 0.0)
    }
}

/// A Hamiltonian's characteristic function, either as samples or as a
/// finite sum of delta-function derivatives.
#[derive(Clone, Debug)]
pub enum HamCharRep {
    GridSampled(CharField),
    Distributional(DistHam),
}

impl HamCharRep {
    pub fn ordering(&self) -> Ordering {
        match self {
            HamCharRep::GridSampled(f) => f.ordering(),
            HamCharRep::Distributional(d) => d.ordering,
        }
    }
}

pub fn ham_distributional(
    h: &PolyHamiltonian,
    ordering: Ordering,
    hbar: f64,
    omega: f64,
) -> Result<DistHam> {
    h.check_degree()?;
    h.ensure_hermitian()?;
    let kind = SymbolKind::for_ordering(ordering).ok_or(Error::ClassicalConversion {
        from: Ordering::Classical,
        to: Ordering::Classical,
    })?;
    DistHam::from_symbol(&h.symbol(kind, hbar, omega), ordering)
}

/// Truncated-trace samples `(ħ/2π)·Tr_{N_max}[Ĥ · ordered exponential]`.
#[derive(Clone, Debug)]
pub struct GridHam {
    pub field: CharField,
    /// The boundary values moved when the truncation was doubled.
    pub divergent: bool,
}

/// Grid samples of the truncated trace. For polynomial `Ĥ` the continuum
/// object is a distribution, so these samples depend on `N_max` and are only
/// meaningful as a diagnostic; the flag reports boundary drift under
/// `N_max → 2N_max`.
pub fn ham_charfn_grid(
    h: &PolyHamiltonian,
    grid: &PhaseGrid,
    ordering: Ordering,
    n_max: usize,
) -> Result<GridHam> {
    let sample = |n: usize| -> Result<CharField> {
        let op = h.to_fock(n)?;
        let f = matrix_to_charfn(&op.matrix, grid, ordering)?.field;
        Ok(f.scaled(C64::new(grid.hbar() / (2.0 * std::f64::consts::PI), 0.0)))
    };
    let field = sample(n_max)?;
    let wide = sample(2 * n_max)?;
    let shape = grid.shape();
    let divergent = (0..grid.len()).any(|i| {
        let idx = grid.multi_index(i);
        let boundary = idx.iter().zip(shape).any(|(&k, &g)| k == 0 || k == g - 1);
        boundary && {
            let (a, b) = (field.data()[i], wide.data()[i]);
            (a - b).norm() > 1e-8 * (1.0 + a.norm())
        }
    });
    Ok(GridHam { field, divergent })
}

/// Lattice image of a distributional Hamiltonian: each `δ^{(j)}` becomes the
/// centered finite-difference stencil of accuracy `accuracy` divided by
/// `Δ^{j+1}`, so that trapezoid quadrature against it reproduces the
/// stencil derivative.
pub fn lattice_sampled(dist: &DistHam, grid: &PhaseGrid, accuracy: usize) -> Result<CharField> {
    if grid.dims() != dist.dims {
        return Err(Error::GridMismatch(format!(
            "Hamiltonian has {} modes, grid has {}",
            dist.dims,
            grid.dims()
        )));
    }
    let axes = grid.axes();
    let origin = grid.origin_index();
    let mut stencils: BTreeMap<u32, (usize, Vec<f64>)> = BTreeMap::new();
    for (e, _) in &dist.terms {
        for &o in e {
            stencils
                .entry(o)
                .or_insert_with(|| stencil::central(o as usize, accuracy));
        }
    }
    for (o, (half, _)) in &stencils {
        for ax in 0..axes {
            if *half >= grid.shape()[ax] / 2 {
                return Err(Error::Resolution {
                    order: *o as usize,
                    points: grid.shape()[ax],
                });
            }
        }
    }
    let data = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let idx = grid.multi_index(flat);
            let mut total = C64::new(0.0, 0.0);
            'terms: for (e, d) in &dist.terms {
                let mut w = 1.0;
                for ax in 0..axes {
                    let (half, weights) = &stencils[&e[ax]];
                    let m = idx[ax] as i64 - origin[ax] as i64;
                    let pos = *half as i64 - m;
                    if pos < 0 || pos >= weights.len() as i64 {
                        continue 'terms;
                    }
                    w *= weights[pos as usize] / grid.spacing(ax).powi(e[ax] as i32 + 1);
                }
                total += d * w;
            }
            total
        })
        .collect();
    CharField::new(grid.clone(), data, dist.ordering)
}
