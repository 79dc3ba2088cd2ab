//! The four convolution kernels of the characteristic-function equations of
//! motion, in `N` dimensions. Points are passed as `(λ_1..λ_N, μ_1..μ_N)`.
//!
//! ```text
//! K_c = λ·μ' − μ·λ'
//! K_s = (2/ħ) sin(ħ K_c / 2)
//! K_n = (2/ħ) e^{+E} sin(ħ K_c / 2)      E = (ħ/2ω)[λ'·(λ−λ') + ω² μ'·(μ−μ')]
//! K_a = (2/ħ) e^{−E} sin(ħ K_c / 2)
//! ```
//!
//! Kernels are evaluated on demand; nothing here materializes a `G⁴` table.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{Ordering, PhaseGrid};
use crate::series::{MonomialBasis, Series};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Normal,
    Symmetric,
    Antinormal,
    Classical,
}

impl KernelKind {
    pub fn ordering(self) -> Ordering {
        match self {
            KernelKind::Normal => Ordering::Normal,
            KernelKind::Symmetric => Ordering::Symmetric,
            KernelKind::Antinormal => Ordering::Antinormal,
            KernelKind::Classical => Ordering::Classical,
        }
    }
}

impl From<Ordering> for KernelKind {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Normal => KernelKind::Normal,
            Ordering::Symmetric => KernelKind::Symmetric,
            Ordering::Antinormal => KernelKind::Antinormal,
            Ordering::Classical => KernelKind::Classical,
        }
    }
}

/// `λ·μ' − μ·λ'`.
pub fn symplectic(c: &[f64], a: &[f64]) -> f64 {
    let n = c.len() / 2;
    (0..n).map(|i| c[i] * a[n + i] - c[n + i] * a[i]).sum()
}

fn gaussian_exponent(hbar: f64, omega: f64, c: &[f64], a: &[f64]) -> f64 {
    let n = c.len() / 2;
    let s: f64 = (0..n)
        .map(|i| a[i] * (c[i] - a[i]) + omega * omega * a[n + i] * (c[n + i] - a[n + i]))
        .sum();
    hbar / (2.0 * omega) * s
}

pub fn eval_kernel(kind: KernelKind, hbar: f64, omega: f64, c: &[f64], a: &[f64]) -> f64 {
    let kc = symplectic(c, a);
    match kind {
        KernelKind::Classical => kc,
        KernelKind::Symmetric => 2.0 / hbar * (0.5 * hbar * kc).sin(),
        KernelKind::Normal => {
            2.0 / hbar * gaussian_exponent(hbar, omega, c, a).exp() * (0.5 * hbar * kc).sin()
        }
        KernelKind::Antinormal => {
            2.0 / hbar * (-gaussian_exponent(hbar, omega, c, a)).exp() * (0.5 * hbar * kc).sin()
        }
    }
}

/// A kernel with its parameters bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub hbar: f64,
    pub omega: f64,
}

impl Kernel {
    pub fn new(kind: KernelKind, hbar: f64, omega: f64) -> Self {
        Kernel { kind, hbar, omega }
    }

    pub fn for_grid(kind: KernelKind, grid: &PhaseGrid) -> Self {
        Kernel::new(kind, grid.hbar(), grid.omega())
    }

    #[inline]
    pub fn eval(&self, c: &[f64], a: &[f64]) -> f64 {
        eval_kernel(self.kind, self.hbar, self.omega, c, a)
    }

    /// Taylor expansion of `a ↦ K(c, a)` about `a = c`, in the displacement
    /// `a − c`, truncated at the basis degree. The coefficient of `δ^γ` times
    /// `γ!` is the derivative `∂^γ_{a} K(c, a)` on the diagonal.
    pub fn taylor_on_diagonal(&self, c: &[f64], basis: &Arc<MonomialBasis>) -> Series {
        let n = c.len() / 2;
        let h = self.hbar;
        let w = self.omega;
        // symplectic form K_c(c, c + δ) = λ·δμ − μ·δλ
        let mut lin = vec![0.0; 2 * n];
        for i in 0..n {
            lin[i] = -c[n + i];
            lin[n + i] = c[i];
        }
        let kc = Series::linear_quadratic(basis, &lin, &vec![0.0; 2 * n]);
        if self.kind == KernelKind::Classical {
            return kc;
        }
        let sine = kc.scale(0.5 * h).sin_nilpotent().scale(2.0 / h);
        if self.kind == KernelKind::Symmetric {
            return sine;
        }
        // E(c, c + δ) = −(ħ/2ω)[λ·δλ + δλ² + ω²(μ·δμ + δμ²)]
        let f = -h / (2.0 * w);
        let mut elin = vec![0.0; 2 * n];
        let mut esq = vec![0.0; 2 * n];
        for i in 0..n {
            elin[i] = f * c[i];
            esq[i] = f;
            elin[n + i] = f * w * w * c[n + i];
            esq[n + i] = f * w * w;
        }
        let mut e = Series::linear_quadratic(basis, &elin, &esq);
        if self.kind == KernelKind::Antinormal {
            e = e.scale(-1.0);
        }
        e.exp_nilpotent().mul(&sine)
    }
}

/// `max |K_s − K_c|` over the given `(c, a)` pairs.
pub fn kernel_limit_defect(hbar: f64, points: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    points
        .iter()
        .map(|(c, a)| {
            let ks = eval_kernel(KernelKind::Symmetric, hbar, 1.0, c, a);
            let kc = eval_kernel(KernelKind::Classical, hbar, 1.0, c, a);
            (ks - kc).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tabulated_values() {
        let ks = eval_kernel(KernelKind::Symmetric, 2.0, 1.0, &[1.0, 0.0], &[0.0, 1.0]);
        assert!((ks - 0.841470985).abs() < 1e-9);
        let kn = eval_kernel(KernelKind::Normal, 1.0, 1.0, &[2.0, 0.0], &[1.0, 1.0]);
        assert!((kn - 1.682941970).abs() < 1e-9);
        let kc = eval_kernel(KernelKind::Classical, 1.0, 1.0, &[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(kc, 1.0);
    }

    #[test]
    fn limit_defect_examples() {
        // K_c = 1 at this pair
        let pts = vec![(vec![1.0, 0.0], vec![0.0, 1.0])];
        let d = kernel_limit_defect(0.1, &pts);
        assert!((d - 4.166e-4).abs() < 1e-6, "{d}");
        assert!(d <= 0.01 / 24.0);
        let zero = vec![(vec![1.0, 2.0], vec![2.0, 4.0])];
        assert_eq!(kernel_limit_defect(0.3, &zero), 0.0);
    }

    #[test]
    fn taylor_matches_finite_differences() {
        let basis = MonomialBasis::new(2, 7);
        let c = [0.7, -1.1];
        for kind in [
            KernelKind::Normal,
            KernelKind::Symmetric,
            KernelKind::Antinormal,
            KernelKind::Classical,
        ] {
            let k = Kernel::new(kind, 0.8, 1.3);
            let s = k.taylor_on_diagonal(&c, &basis);
            // evaluate the truncated series at a small displacement
            let d = [1e-2f64, -2e-2];
            let approx: f64 = (0..basis.len())
                .map(|i| {
                    let e = basis.exponents(i);
                    s.coeffs()[i] * d[0].powi(e[0] as i32) * d[1].powi(e[1] as i32)
                })
                .sum();
            let exact = k.eval(&c, &[c[0] + d[0], c[1] + d[1]]);
            assert!(
                (approx - exact).abs() < 1e-10,
                "{kind:?}: {approx} vs {exact}"
            );
        }
    }

    fn tuple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            proptest::collection::vec(-5.0..5.0f64, 4),
            proptest::collection::vec(-5.0..5.0f64, 4),
        )
    }

    proptest! {
        #[test]
        fn symmetric_is_sine_of_classical((c, a) in tuple(), h in 0.01..3.0f64) {
            let ks = eval_kernel(KernelKind::Symmetric, h, 1.0, &c, &a);
            let kc = eval_kernel(KernelKind::Classical, h, 1.0, &c, &a);
            prop_assert!((ks - 2.0 / h * (0.5 * h * kc).sin()).abs() <= 1e-12);
        }

        #[test]
        fn swap_symmetries((c, a) in tuple(), h in 0.01..1.0f64, w in 0.3..2.0f64) {
            for kind in [KernelKind::Symmetric, KernelKind::Classical] {
                let f = eval_kernel(kind, h, w, &c, &a);
                let b = eval_kernel(kind, h, w, &a, &c);
                prop_assert!((f + b).abs() <= 1e-12 * (1.0 + f.abs()));
            }
            // the Gaussian factors do not cancel under the swap:
            // E(c, a) + E(a, c) = −(ħ/2ω)(|λ−λ'|² + ω²|μ−μ'|²)
            let kn = eval_kernel(KernelKind::Normal, h, w, &c, &a);
            let ka = eval_kernel(KernelKind::Antinormal, h, w, &a, &c);
            let d2: f64 = (0..2).map(|i| (c[i] - a[i]).powi(2) + w * w * (c[2 + i] - a[2 + i]).powi(2)).sum();
            let g = (-h / (2.0 * w) * d2).exp();
            prop_assert!((kn + ka * g).abs() <= 1e-10 * (1.0 + kn.abs()));
            let sum = gaussian_exponent(h, w, &c, &a) + gaussian_exponent(h, w, &a, &c);
            prop_assert!((sum + h / (2.0 * w) * d2).abs() < 1e-10 * (1.0 + d2));
        }

        #[test]
        fn product_of_orderings((c, a) in tuple(), h in 0.01..1.0f64, w in 0.3..2.0f64) {
            let kn = eval_kernel(KernelKind::Normal, h, w, &c, &a);
            let ka = eval_kernel(KernelKind::Antinormal, h, w, &c, &a);
            let ks = eval_kernel(KernelKind::Symmetric, h, w, &c, &a);
            prop_assert!((kn * ka - ks * ks).abs() <= 1e-12 * (1.0 + ks * ks));
        }

        #[test]
        fn parallel_arguments_vanish(c in proptest::collection::vec(-5.0..5.0f64, 4), t in -3.0..3.0f64) {
            let a: Vec<f64> = c.iter().map(|v| v * t).collect();
            for kind in [KernelKind::Normal, KernelKind::Symmetric, KernelKind::Antinormal, KernelKind::Classical] {
                let scale = gaussian_exponent(0.7, 1.1, &c, &a).abs().exp();
                prop_assert!(eval_kernel(kind, 0.7, 1.1, &c, &a).abs() < 1e-10 * scale);
            }
        }
    }
}
