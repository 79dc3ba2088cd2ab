//! Uniform grids over the characteristic-function variables (λ, μ), their
//! Fourier duals (x, p), and the field containers that live on them.
//!
//! Layout: a field on an N-dimensional grid has 2N axes ordered
//! `λ_1..λ_N, μ_1..μ_N`, stored row-major (last axis fastest). Axis `i` and
//! axis `N + i` share the point count `G[i]`. Node `k` of an axis sits at
//! `-L + k·Δ`, so index `G/2` is the origin.
//!
//! Transform convention:
//!
//! ```text
//! F(x, p) = (2π)^{-2N} ∫ dλ dμ  C(λ, μ) e^{-i(λ·x + μ·p)}
//! C(λ, μ) =            ∫ dx dp  F(x, p) e^{+i(λ·x + μ·p)}
//! ```
//!
//! so `C(0, 0) = 1` maps to a unit-mass phase-space function. Both directions
//! are realized as scaled DFTs and are exact inverses on the grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    Normal,
    Symmetric,
    Antinormal,
    Classical,
}

impl Ordering {
    pub const QUANTUM: [Ordering; 3] =
        [Ordering::Normal, Ordering::Symmetric, Ordering::Antinormal];

    pub fn is_quantum(self) -> bool {
        self != Ordering::Classical
    }

    /// Exponent `s` in `C_normal = e^{s·|ξ|²} C_self`.
    pub(crate) fn normal_shift(self) -> Option<f64> {
        match self {
            Ordering::Normal => Some(0.0),
            Ordering::Symmetric => Some(0.5),
            Ordering::Antinormal => Some(1.0),
            Ordering::Classical => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ordering::Normal => "normal",
            Ordering::Symmetric => "symmetric",
            Ordering::Antinormal => "antinormal",
            Ordering::Classical => "classical",
        }
    }
}

/// Raw grid parameters, as read from a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: usize,
    pub points: Vec<usize>,
    pub extent_lambda: Vec<f64>,
    pub extent_mu: Vec<f64>,
    pub hbar: f64,
    pub omega: f64,
}

impl GridSpec {
    /// Same point count and extents on every axis.
    pub fn uniform(dims: usize, points: usize, extent: f64, hbar: f64, omega: f64) -> Self {
        GridSpec {
            dims,
            points: vec![points; dims],
            extent_lambda: vec![extent; dims],
            extent_mu: vec![extent; dims],
            hbar,
            omega,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    dims: usize,
    points: Vec<usize>,
    extent_lambda: Vec<f64>,
    extent_mu: Vec<f64>,
    hbar: f64,
    omega: f64,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

/// `ξ_i = √(ħ/2ω)(λ_i − iωμ_i)` at one node, with `|ξ|² = Σ|ξ_i|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Xi {
    pub xi: Vec<C64>,
    pub norm_sqr: f64,
}

impl PhaseGrid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let n = spec.dims;
        if n == 0 {
            return Err(Error::InvalidGrid("dims must be positive".into()));
        }
        if spec.points.len() != n || spec.extent_lambda.len() != n || spec.extent_mu.len() != n {
            return Err(Error::InvalidGrid(format!(
                "expected {n} entries in points/extent_lambda/extent_mu"
            )));
        }
        for &g in &spec.points {
            if g == 0 {
                return Err(Error::InvalidGrid("point count must be positive".into()));
            }
            if g % 2 != 0 {
                return Err(Error::OddGridSize(g));
            }
        }
        for &l in spec.extent_lambda.iter().chain(&spec.extent_mu) {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("extent {l} must be positive")));
            }
        }
        if !(spec.hbar.is_finite() && spec.hbar > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "hbar {} must be positive",
                spec.hbar
            )));
        }
        if !(spec.omega.is_finite() && spec.omega > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "omega {} must be positive",
                spec.omega
            )));
        }
        let shape: Vec<usize> = spec.points.iter().chain(&spec.points).copied().collect();
        let mut strides = vec![1; 2 * n];
        for ax in (0..2 * n - 1).rev() {
            strides[ax] = strides[ax + 1] * shape[ax + 1];
        }
        Ok(PhaseGrid {
            dims: n,
            points: spec.points.clone(),
            extent_lambda: spec.extent_lambda.clone(),
            extent_mu: spec.extent_mu.clone(),
            hbar: spec.hbar,
            omega: spec.omega,
            shape,
            strides,
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            dims: self.dims,
            points: self.points.clone(),
            extent_lambda: self.extent_lambda.clone(),
            extent_mu: self.extent_mu.clone(),
            hbar: self.hbar,
            omega: self.omega,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn points(&self) -> &[usize] {
        &self.points
    }
    pub fn extent_lambda(&self) -> &[f64] {
        &self.extent_lambda
    }
    pub fn extent_mu(&self) -> &[f64] {
        &self.extent_mu
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn axes(&self) -> usize {
        2 * self.dims
    }

    /// Copy of this grid with a different ħ; geometry is untouched.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        let mut spec = self.spec();
        spec.hbar = hbar;
        PhaseGrid::new(&spec)
    }

    pub fn half_extent(&self, axis: usize) -> f64 {
        if axis < self.dims {
            self.extent_lambda[axis]
        } else {
            self.extent_mu[axis - self.dims]
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_extent(axis) / self.shape[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.axes()).map(|a| self.spacing(a)).collect()
    }

    pub fn coordinate(&self, axis: usize, k: usize) -> f64 {
        -self.half_extent(axis) + k as f64 * self.spacing(axis)
    }

    /// Spacing of the Fourier-dual (x, p) axis: `Δx·Δλ = 2π/G`.
    pub fn dual_spacing(&self, axis: usize) -> f64 {
        2.0 * PI / (self.shape[axis] as f64 * self.spacing(axis))
    }

    pub fn dual_spacings(&self) -> Vec<f64> {
        (0..self.axes()).map(|a| self.dual_spacing(a)).collect()
    }

    pub fn dual_coordinate(&self, axis: usize, m: usize) -> f64 {
        (m as f64 - (self.shape[axis] / 2) as f64) * self.dual_spacing(axis)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.axes()).map(|a| self.spacing(a)).product()
    }

    pub fn dual_cell_volume(&self) -> f64 {
        (0..self.axes()).map(|a| self.dual_spacing(a)).product()
    }

    pub fn origin_index(&self) -> Vec<usize> {
        self.shape.iter().map(|g| g / 2).collect()
    }

    pub fn origin_flat(&self) -> usize {
        self.flat_index(&self.origin_index())
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn checked_flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.axes() || index.iter().zip(&self.shape).any(|(i, g)| i >= g) {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                shape: self.shape.clone(),
            });
        }
        Ok(self.flat_index(index))
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes()];
        for ax in 0..self.axes() {
            idx[ax] = flat / self.strides[ax];
            flat %= self.strides[ax];
        }
        idx
    }

    /// Coordinates `(λ_1..λ_N, μ_1..μ_N)` of a node.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(ax, &k)| self.coordinate(ax, k))
            .collect()
    }

    /// Dual coordinates `(x_1..x_N, p_1..p_N)` of a node.
    pub fn dual_point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(ax, &m)| self.dual_coordinate(ax, m))
            .collect()
    }

    pub fn xi_at_point(&self, point: &[f64]) -> Xi {
        let n = self.dims;
        let scale = (self.hbar / (2.0 * self.omega)).sqrt();
        let xi: Vec<C64> = (0..n)
            .map(|i| scale * C64::new(point[i], -self.omega * point[n + i]))
            .collect();
        let norm_sqr = xi.iter().map(|z| z.norm_sqr()).sum();
        Xi { xi, norm_sqr }
    }

    pub fn xi_of(&self, index: &[usize]) -> Result<Xi> {
        let flat = self.checked_flat_index(index)?;
        Ok(self.xi_at_point(&self.point(flat)))
    }

    /// `|ξ|² = (ħ/2ω)(λ² + ω²μ²)` summed over dimensions.
    pub fn xi_norm_sqr(&self, point: &[f64]) -> f64 {
        let n = self.dims;
        let w = self.omega;
        (0..n)
            .map(|i| point[i] * point[i] + w * w * point[n + i] * point[n + i])
            .sum::<f64>()
            * self.hbar
            / (2.0 * w)
    }

    pub fn max_xi_norm_sqr(&self) -> f64 {
        let n = self.dims;
        let w = self.omega;
        (0..n)
            .map(|i| {
                let l = self.extent_lambda[i];
                let m = self.extent_mu[i];
                l * l + w * w * m * m
            })
            .sum::<f64>()
            * self.hbar
            / (2.0 * w)
    }

    /// Flat index of the point-reflected node `-(λ, μ)`, if it lies on the grid.
    /// The first node of each axis (`-L`) has no mirror image.
    pub fn reflected(&self, flat: usize) -> Option<usize> {
        let idx = self.multi_index(flat);
        let mut out = 0;
        for (ax, &k) in idx.iter().enumerate() {
            if k == 0 {
                return None;
            }
            out += (self.shape[ax] - k) * self.strides[ax];
        }
        Some(out)
    }

    /// Reflection through the origin on the periodic lattice, where the first
    /// node of each axis is its own image.
    pub fn periodic_mirror(&self, flat: usize) -> usize {
        let idx = self.multi_index(flat);
        idx.iter()
            .enumerate()
            .map(|(ax, &k)| ((self.shape[ax] - k) % self.shape[ax]) * self.strides[ax])
            .sum()
    }

    pub fn same_geometry(&self, other: &PhaseGrid) -> bool {
        self.dims == other.dims
            && self.points == other.points
            && self.extent_lambda == other.extent_lambda
            && self.extent_mu == other.extent_mu
    }

    pub fn ensure_compatible(&self, other: &PhaseGrid) -> Result<()> {
        if !self.same_geometry(other) {
            return Err(Error::GridMismatch(format!(
                "shape {:?} / extents {:?},{:?} vs shape {:?} / extents {:?},{:?}",
                self.shape,
                self.extent_lambda,
                self.extent_mu,
                other.shape,
                other.extent_lambda,
                other.extent_mu
            )));
        }
        if self.hbar != other.hbar || self.omega != other.omega {
            return Err(Error::GridMismatch(format!(
                "(ħ, ω) = ({}, {}) vs ({}, {})",
                self.hbar, self.omega, other.hbar, other.omega
            )));
        }
        Ok(())
    }
}

/// Samples of a characteristic function on a [`PhaseGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct CharField {
    grid: PhaseGrid,
    data: Vec<C64>,
    ordering: Ordering,
}

impl CharField {
    pub fn new(grid: PhaseGrid, data: Vec<C64>, ordering: Ordering) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "data length {} != grid size {}",
                data.len(),
                grid.len()
            )));
        }
        if let Some(i) = data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite(i));
        }
        Ok(CharField {
            grid,
            data,
            ordering,
        })
    }

    pub fn zeros(grid: &PhaseGrid, ordering: Ordering) -> Self {
        CharField {
            grid: grid.clone(),
            data: vec![C64::new(0.0, 0.0); grid.len()],
            ordering,
        }
    }

    /// Samples `f(λ_1..λ_N, μ_1..μ_N)` at every node.
    pub fn from_fn<F>(grid: &PhaseGrid, ordering: Ordering, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.point(i)))
            .collect();
        CharField::new(grid.clone(), data, ordering)
    }

    pub(crate) fn from_parts_unchecked(
        grid: PhaseGrid,
        data: Vec<C64>,
        ordering: Ordering,
    ) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        CharField {
            grid,
            data,
            ordering,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<C64> {
        self.data
    }
    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    /// Same samples under a different ordering tag, no conversion applied.
    pub fn retagged(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    /// Same samples on a grid of identical geometry (e.g. a different ħ).
    pub fn on_grid(mut self, grid: &PhaseGrid) -> Result<Self> {
        if !self.grid.same_geometry(grid) {
            return Err(Error::GridMismatch("geometry differs".into()));
        }
        self.grid = grid.clone();
        Ok(self)
    }

    pub fn at(&self, index: &[usize]) -> Result<C64> {
        Ok(self.data[self.grid.checked_flat_index(index)?])
    }

    pub fn at_origin(&self) -> C64 {
        self.data[self.grid.origin_flat()]
    }

    pub fn norm_l2(&self) -> f64 {
        norm_l2(&self.data)
    }

    /// `‖self − reference‖₂ / ‖reference‖₂`.
    pub fn relative_l2(&self, reference: &CharField) -> f64 {
        relative_l2(&self.data, &reference.data)
    }

    pub fn max_abs_diff(&self, other: &CharField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `self + s·other`, keeping this field's grid and ordering.
    pub fn add_scaled(&self, other: &CharField, s: f64) -> CharField {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b * s)
            .collect();
        CharField::from_parts_unchecked(self.grid.clone(), data, self.ordering)
    }

    pub fn scaled(&self, s: C64) -> CharField {
        let data = self.data.iter().map(|a| a * s).collect();
        CharField::from_parts_unchecked(self.grid.clone(), data, self.ordering)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Product state `C(λ, μ) = Π_i C_i(λ_i, μ_i)` from one-dimensional factors.
    pub fn tensor_product(factors: &[CharField]) -> Result<CharField> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidGrid("no factors".into()))?;
        let ordering = first.ordering;
        for f in factors {
            if f.grid.dims != 1 {
                return Err(Error::Unsupported(
                    "tensor factors must be one-dimensional".into(),
                ));
            }
            if f.ordering != ordering {
                return Err(Error::OrderingMismatch {
                    expected: ordering,
                    found: f.ordering,
                });
            }
            if f.grid.hbar != first.grid.hbar || f.grid.omega != first.grid.omega {
                return Err(Error::GridMismatch("factors disagree on (ħ, ω)".into()));
            }
        }
        let n = factors.len();
        let spec = GridSpec {
            dims: n,
            points: factors.iter().map(|f| f.grid.points[0]).collect(),
            extent_lambda: factors.iter().map(|f| f.grid.extent_lambda[0]).collect(),
            extent_mu: factors.iter().map(|f| f.grid.extent_mu[0]).collect(),
            hbar: first.grid.hbar,
            omega: first.grid.omega,
        };
        let grid = PhaseGrid::new(&spec)?;
        let data = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let idx = grid.multi_index(flat);
                factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f.data[f.grid.flat_index(&[idx[i], idx[n + i]])])
                    .product()
            })
            .collect();
        CharField::new(grid, data, ordering)
    }
}

/// Complex samples on the dual (x, p) grid of a [`PhaseGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceField {
    pub grid: PhaseGrid,
    pub data: Vec<C64>,
}

impl PhaseSpaceField {
    pub fn from_fn<F>(grid: &PhaseGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.dual_point(i)))
            .collect();
        PhaseSpaceField {
            grid: grid.clone(),
            data,
        }
    }

    /// `∫ F dx dp` by the rectangle rule on the dual grid.
    pub fn mass(&self) -> C64 {
        self.data.iter().sum::<C64>() * self.grid.dual_cell_volume()
    }
}

pub fn norm_l2(data: &[C64]) -> f64 {
    data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn relative_l2(data: &[C64], reference: &[C64]) -> f64 {
    let num: f64 = data
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den = norm_l2(reference);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn plans(shape: &[usize], inverse: bool) -> Vec<Arc<dyn Fft<f64>>> {
    let mut planner = FftPlanner::new();
    shape
        .iter()
        .map(|&g| {
            if inverse {
                planner.plan_fft_inverse(g)
            } else {
                planner.plan_fft_forward(g)
            }
        })
        .collect()
}

/// Applies `fft` to every 1-D line along `axis` of a row-major array, with an
/// optional per-sample pre/post multiplier indexed by position on the line.
fn transform_axis(
    data: &mut [C64],
    shape: &[usize],
    axis: usize,
    fft: &Arc<dyn Fft<f64>>,
    pre: &[C64],
    post: &[C64],
) {
    let g = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let block = g * stride;
    data.par_chunks_mut(block).for_each(|chunk| {
        let mut line = vec![C64::new(0.0, 0.0); g];
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for offset in 0..stride {
            for k in 0..g {
                line[k] = chunk[offset + k * stride] * pre[k];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for k in 0..g {
                chunk[offset + k * stride] = line[k] * post[k];
            }
        }
    });
}

fn alternating(g: usize) -> Vec<C64> {
    (0..g)
        .map(|k| C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

/// Characteristic field → phase-space function, `(2π)^{-2N}` normalized.
pub fn fourier_to_phase(field: &CharField) -> PhaseSpaceField {
    let grid = field.grid();
    let shape = grid.shape().to_vec();
    let fwd = plans(&shape, false);
    let mut data = field.data().to_vec();
    for ax in 0..shape.len() {
        let g = shape[ax];
        let sign = if (g / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        let scale = grid.spacing(ax) / (2.0 * PI) * sign;
        let pre = alternating(g);
        let post: Vec<C64> = pre.iter().map(|s| s * scale).collect();
        transform_axis(&mut data, &shape, ax, &fwd[ax], &pre, &post);
    }
    PhaseSpaceField {
        grid: grid.clone(),
        data,
    }
}

/// Exact inverse of [`fourier_to_phase`].
pub fn fourier_from_phase(field: &PhaseSpaceField, ordering: Ordering) -> Result<CharField> {
    let grid = &field.grid;
    let shape = grid.shape().to_vec();
    let inv = plans(&shape, true);
    let mut data = field.data.clone();
    for ax in 0..shape.len() {
        let g = shape[ax];
        let sign = if (g / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        let scale = grid.dual_spacing(ax) * sign;
        let pre = alternating(g);
        let post: Vec<C64> = pre.iter().map(|s| s * scale).collect();
        transform_axis(&mut data, &shape, ax, &inv[ax], &pre, &post);
    }
    CharField::new(grid.clone(), data, ordering)
}

/// Spectral (FFT) partial derivatives of a periodic row-major array.
///
/// Each entry of `orders` is a multi-index over the array's axes; the result
/// holds one derivative per entry. Wavenumbers span `[-π/Δ, π/Δ)`, the Nyquist
/// mode included, which makes `∂` on one grid the exact image of coordinate
/// multiplication on its dual. [`SpectralDiff::reflection_symmetric`] drops
/// the Nyquist mode from odd-order derivatives so that `∂` anticommutes with
/// the periodic reflection `k ↦ −k`.
pub struct SpectralDiff {
    shape: Vec<usize>,
    wavenumbers: Vec<Vec<f64>>,
    odd_nyquist: bool,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl SpectralDiff {
    pub fn new(shape: &[usize], spacings: &[f64]) -> Self {
        let wavenumbers = shape
            .iter()
            .zip(spacings)
            .map(|(&g, &d)| {
                (0..g)
                    .map(|m| {
                        let j = if m < g / 2 {
                            m as f64
                        } else {
                            m as f64 - g as f64
                        };
                        2.0 * PI * j / (g as f64 * d)
                    })
                    .collect()
            })
            .collect();
        SpectralDiff {
            shape: shape.to_vec(),
            wavenumbers,
            odd_nyquist: true,
            fwd: plans(shape, false),
            inv: plans(shape, true),
        }
    }

    pub fn for_grid(grid: &PhaseGrid) -> Self {
        SpectralDiff::new(grid.shape(), &grid.spacings())
    }

    pub fn reflection_symmetric(mut self) -> Self {
        self.odd_nyquist = false;
        self
    }

    pub fn for_dual_grid(grid: &PhaseGrid) -> Self {
        SpectralDiff::new(grid.shape(), &grid.dual_spacings())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn max_wavenumber(&self, axis: usize) -> f64 {
        self.wavenumbers[axis]
            .iter()
            .fold(0.0, |m, k| f64::max(m, k.abs()))
    }

    pub fn spectrum(&self, data: &[C64]) -> Vec<C64> {
        let ones: Vec<Vec<C64>> = self
            .shape
            .iter()
            .map(|&g| vec![C64::new(1.0, 0.0); g])
            .collect();
        let mut out = data.to_vec();
        for ax in 0..self.shape.len() {
            transform_axis(
                &mut out,
                &self.shape,
                ax,
                &self.fwd[ax],
                &ones[ax],
                &ones[ax],
            );
        }
        out
    }

    /// Derivative of order `order` (multi-index) from a precomputed spectrum.
    pub fn from_spectrum(&self, spectrum: &[C64], order: &[u32]) -> Vec<C64> {
        let total: usize = self.shape.iter().product();
        let mut out = spectrum.to_vec();
        let factors: Vec<Vec<C64>> = self
            .shape
            .iter()
            .enumerate()
            .map(|(ax, &g)| {
                (0..g)
                    .map(|m| {
                        if !self.odd_nyquist && m == g / 2 && order[ax] % 2 == 1 {
                            C64::new(0.0, 0.0)
                        } else {
                            C64::new(0.0, self.wavenumbers[ax][m]).powu(order[ax])
                        }
                    })
                    .collect()
            })
            .collect();
        let ones: Vec<Vec<C64>> = self
            .shape
            .iter()
            .map(|&g| vec![C64::new(1.0, 0.0); g])
            .collect();
        for ax in 0..self.shape.len() {
            let post: Vec<C64> = ones[ax].iter().map(|o| o / self.shape[ax] as f64).collect();
            transform_axis(
                &mut out,
                &self.shape,
                ax,
                &self.inv[ax],
                &factors[ax],
                &post,
            );
        }
        debug_assert_eq!(out.len(), total);
        out
    }

    pub fn derivative(&self, data: &[C64], order: &[u32]) -> Vec<C64> {
        if order.iter().all(|&o| o == 0) {
            return data.to_vec();
        }
        self.from_spectrum(&self.spectrum(data), order)
    }

    pub fn derivatives(&self, data: &[C64], orders: &[Vec<u32>]) -> Vec<Vec<C64>> {
        let spec = self.spectrum(data);
        orders
            .iter()
            .map(|o| {
                if o.iter().all(|&x| x == 0) {
                    data.to_vec()
                } else {
                    self.from_spectrum(&spec, o)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(g: usize, l: f64) -> PhaseGrid {
        PhaseGrid::new(&GridSpec::uniform(1, g, l, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn spacing_and_origin() {
        let g = grid1(64, 8.0);
        assert_eq!(g.spacing(0), 0.25);
        assert_eq!(g.point(g.origin_flat()), vec![0.0, 0.0]);
        let dx = g.dual_spacing(0);
        assert!((dx * g.spacing(0) - 2.0 * PI / 64.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut s = GridSpec::uniform(1, 63, 8.0, 1.0, 1.0);
        assert!(matches!(PhaseGrid::new(&s), Err(Error::OddGridSize(63))));
        s.points = vec![64];
        s.hbar = 0.0;
        assert!(PhaseGrid::new(&s).is_err());
        s.hbar = 1.0;
        s.extent_mu = vec![-1.0];
        assert!(PhaseGrid::new(&s).is_err());
        s.extent_mu = vec![1.0];
        s.omega = -2.0;
        assert!(PhaseGrid::new(&s).is_err());
    }

    #[test]
    fn two_dimensional_length() {
        let g = PhaseGrid::new(&GridSpec::uniform(2, 32, 4.0, 1.0, 1.0)).unwrap();
        assert_eq!(
            CharField::zeros(&g, Ordering::Symmetric).data().len(),
            32usize.pow(4)
        );
    }

    #[test]
    fn xi_examples() {
        let g = grid1(64, 8.0);
        let x = g.xi_of(&g.origin_index()).unwrap();
        assert_eq!(x.norm_sqr, 0.0);
        let g2 = PhaseGrid::new(&GridSpec::uniform(1, 64, 8.0, 2.0, 1.0)).unwrap();
        let x = g2.xi_at_point(&[1.0, 1.0]);
        assert!((x.norm_sqr - 2.0).abs() < 1e-15);
        let g3 = PhaseGrid::new(&GridSpec::uniform(1, 64, 8.0, 1.0, 2.0)).unwrap();
        let x = g3.xi_at_point(&[2.0, 0.0]);
        assert!((x.xi[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((x.norm_sqr - 1.0).abs() < 1e-15);
        assert!(g.xi_of(&[64, 0]).is_err());
    }

    #[test]
    fn constant_maps_to_unit_spike() {
        let g = grid1(32, 6.0);
        let c = CharField::from_fn(&g, Ordering::Symmetric, |_| C64::new(1.0, 0.0)).unwrap();
        let f = fourier_to_phase(&c);
        let o = g.origin_flat();
        for (i, v) in f.data.iter().enumerate() {
            if i != o {
                assert!(v.norm() < 1e-12, "leak at {i}: {v}");
            }
        }
        assert!((f.mass() - 1.0).norm() < 1e-12);
        let back = fourier_from_phase(&f, Ordering::Symmetric).unwrap();
        assert!(back.relative_l2(&c) < 1e-12);
    }

    #[test]
    fn spike_maps_to_constant() {
        let g = grid1(16, 3.0);
        let mut f = PhaseSpaceField::from_fn(&g, |_| C64::new(0.0, 0.0));
        f.data[g.origin_flat()] = C64::new(1.0 / g.dual_cell_volume(), 0.0);
        let c = fourier_from_phase(&f, Ordering::Symmetric).unwrap();
        for v in c.data() {
            assert!((v - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_has_unit_mass() {
        // vacuum Wigner characteristic function at ħ = ω = 1
        let g = grid1(64, 10.0);
        let c = CharField::from_fn(&g, Ordering::Symmetric, |p| {
            C64::new((-(p[0] * p[0] + p[1] * p[1]) / 4.0).exp(), 0.0)
        })
        .unwrap();
        let w = fourier_to_phase(&c);
        assert!((w.mass() - 1.0).norm() < 1e-6);
        // analytic W = e^{-(x²+p²)}/π
        for i in 0..g.len() {
            let z = g.dual_point(i);
            let exact = (-(z[0] * z[0] + z[1] * z[1])).exp() / PI;
            assert!((w.data[i] - exact).norm() < 1e-9);
        }
        let back = fourier_from_phase(&w, Ordering::Symmetric).unwrap();
        assert!((back.at_origin() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn spectral_derivative_of_gaussian() {
        let g = grid1(64, 10.0);
        let f: Vec<C64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                C64::new((-(p[0] * p[0] + 2.0 * p[1] * p[1]) / 4.0).exp(), 0.0)
            })
            .collect();
        let sd = SpectralDiff::for_grid(&g);
        let d = sd.derivative(&f, &[1, 1]);
        for i in 0..g.len() {
            let p = g.point(i);
            let exact = (-p[0] / 2.0) * (-p[1]) * f[i].re;
            assert!((d[i].re - exact).abs() < 1e-9, "{} vs {}", d[i].re, exact);
        }
    }

    #[test]
    fn reflection_pairs() {
        let g = grid1(8, 1.0);
        let o = g.origin_flat();
        assert_eq!(g.reflected(o), Some(o));
        let i = g.flat_index(&[5, 2]);
        let r = g.reflected(i).unwrap();
        assert_eq!(g.multi_index(r), vec![3, 6]);
        assert_eq!(g.reflected(g.flat_index(&[0, 3])), None);
    }
}
