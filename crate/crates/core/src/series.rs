//! Dense truncated Taylor series in a few real variables.

use std::collections::HashMap;
use std::sync::Arc;

/// All monomials of total degree `≤ max_degree` in `nvars` variables, with a
/// precomputed truncated multiplication table.
#[derive(Debug)]
pub struct MonomialBasis {
    nvars: usize,
    max_degree: usize,
    exps: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    products: Vec<(usize, usize, usize)>,
}

impl MonomialBasis {
    pub fn new(nvars: usize, max_degree: usize) -> Arc<Self> {
        let mut exps = Vec::new();
        for d in 0..=max_degree {
            let mut cur = vec![0u32; nvars];
            compositions(d as u32, 0, &mut cur, &mut exps);
        }
        let index: HashMap<Vec<u32>, usize> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                let s: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = index.get(&s) {
                    products.push((i, j, k));
                }
            }
        }
        Arc::new(MonomialBasis {
            nvars,
            max_degree,
            exps,
            index,
            products,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }
    pub fn len(&self) -> usize {
        self.exps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }
    pub fn exponents(&self, i: usize) -> &[u32] {
        &self.exps[i]
    }
    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

fn compositions(remaining: u32, var: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let n = cur.len();
    if var == n - 1 {
        cur[var] = remaining;
        out.push(cur.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k;
        compositions(remaining - k, var + 1, cur, out);
    }
    cur[var] = 0;
}

#[derive(Clone, Debug)]
pub struct Series {
    basis: Arc<MonomialBasis>,
    coeffs: Vec<f64>,
}

impl Series {
    pub fn zero(basis: &Arc<MonomialBasis>) -> Self {
        Series {
            basis: basis.clone(),
            coeffs: vec![0.0; basis.len()],
        }
    }

    pub fn constant(basis: &Arc<MonomialBasis>, c: f64) -> Self {
        let mut s = Series::zero(basis);
        s.coeffs[0] = c;
        s
    }

    /// `Σ_v a_v z_v + Σ_v q_v z_v²`.
    pub fn linear_quadratic(basis: &Arc<MonomialBasis>, linear: &[f64], square: &[f64]) -> Self {
        let mut s = Series::zero(basis);
        let n = basis.nvars();
        for v in 0..n {
            let mut e = vec![0; n];
            e[v] = 1;
            if let Some(i) = basis.index_of(&e) {
                s.coeffs[i] += linear[v];
            }
            e[v] = 2;
            if let Some(i) = basis.index_of(&e) {
                s.coeffs[i] += square[v];
            }
        }
        s
    }

    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.basis.index_of(exps).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
        self
    }

    pub fn mul(&self, other: &Series) -> Series {
        let mut out = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.basis.products {
            let a = self.coeffs[i];
            if a != 0.0 {
                out[k] += a * other.coeffs[j];
            }
        }
        Series {
            basis: self.basis.clone(),
            coeffs: out,
        }
    }

    fn add_assign_scaled(&mut self, other: &Series, s: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    /// `exp(self)` for a series with zero constant term.
    pub fn exp_nilpotent(&self) -> Series {
        debug_assert_eq!(self.coeffs[0], 0.0);
        let mut out = Series::constant(&self.basis, 1.0);
        let mut power = Series::constant(&self.basis, 1.0);
        let mut fact = 1.0;
        for n in 1..=self.basis.max_degree() {
            power = power.mul(self);
            fact *= n as f64;
            out.add_assign_scaled(&power, 1.0 / fact);
        }
        out
    }

    /// `sin(self)` for a series with zero constant term.
    pub fn sin_nilpotent(&self) -> Series {
        debug_assert_eq!(self.coeffs[0], 0.0);
        let mut out = Series::zero(&self.basis);
        let mut power = Series::constant(&self.basis, 1.0);
        let mut fact = 1.0;
        for n in 1..=self.basis.max_degree() {
            power = power.mul(self);
            fact *= n as f64;
            if n % 2 == 1 {
                let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                out.add_assign_scaled(&power, sign / fact);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_counts() {
        assert_eq!(MonomialBasis::new(2, 6).len(), 28);
        assert_eq!(MonomialBasis::new(4, 6).len(), 210);
        assert_eq!(MonomialBasis::new(1, 3).len(), 4);
    }

    #[test]
    fn exp_and_sin_of_linear_form() {
        let b = MonomialBasis::new(2, 7);
        let t = Series::linear_quadratic(&b, &[0.3, -0.7], &[0.0, 0.0]);
        let e = t.exp_nilpotent();
        let s = t.sin_nilpotent();
        // evaluate at a small point and compare against the closed forms
        let z = [0.1f64, 0.2];
        let eval = |s: &Series| -> f64 {
            (0..b.len())
                .map(|i| {
                    let ex = b.exponents(i);
                    s.coeffs()[i] * z[0].powi(ex[0] as i32) * z[1].powi(ex[1] as i32)
                })
                .sum()
        };
        let arg: f64 = 0.3 * z[0] - 0.7 * z[1];
        assert!((eval(&e) - arg.exp()).abs() < 1e-12);
        assert!((eval(&s) - arg.sin()).abs() < 1e-12);
    }
}
