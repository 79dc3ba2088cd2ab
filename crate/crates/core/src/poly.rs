//! Sparse polynomials in the phase-space coordinates `(x_1..x_N, p_1..p_N)`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

/// `Σ c_e · Π_v z_v^{e_v}` over `2N` variables, ordered `x` then `p`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PhasePoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, C64>,
}

impl PhasePoly {
    pub fn zero(nvars: usize) -> Self {
        PhasePoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = PhasePoly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The single variable `z_var`.
    pub fn variable(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        let mut p = PhasePoly::zero(nvars);
        p.add_term(e, C64::new(1.0, 0.0));
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, C64)>) -> Self {
        let mut p = PhasePoly::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u32]) -> C64 {
        self.terms.get(exps).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: C64) {
        assert_eq!(exps.len(), self.nvars);
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(exps).or_default();
        *entry += c;
    }

    /// Drops coefficients with `|c| ≤ tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, c| c.norm() > tol);
        self
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> PhasePoly {
        PhasePoly::from_terms(
            self.nvars,
            self.terms.iter().map(|(e, c)| (e.clone(), c * s)),
        )
    }

    pub fn add(&self, other: &PhasePoly) -> PhasePoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn mul(&self, other: &PhasePoly) -> PhasePoly {
        let mut out = PhasePoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> PhasePoly {
        let mut out = PhasePoly::constant(self.nvars, C64::new(1.0, 0.0));
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative of multi-order `order`.
    pub fn derivative(&self, order: &[u32]) -> PhasePoly {
        let mut out = PhasePoly::zero(self.nvars);
        'terms: for (e, c) in &self.terms {
            let mut coeff = *c;
            let mut ne = e.clone();
            for v in 0..self.nvars {
                if order[v] > e[v] {
                    continue 'terms;
                }
                for k in 0..order[v] {
                    coeff *= (e[v] - k) as f64;
                }
                ne[v] = e[v] - order[v];
            }
            out.add_term(ne, coeff);
        }
        out
    }

    pub fn eval(&self, z: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(z)
                    .map(|(&k, &zv)| zv.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn max_imag_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra_and_derivatives() {
        let x = PhasePoly::variable(2, 0);
        let p = PhasePoly::variable(2, 1);
        let h = p.pow(2).scale(C64::new(0.5, 0.0)).add(&x.pow(4));
        assert_eq!(h.degree(), 4);
        assert!((h.eval(&[2.0, 3.0]) - C64::new(4.5 + 16.0, 0.0)).norm() < 1e-14);
        let d = h.derivative(&[3, 0]);
        assert!((d.eval(&[2.0, 0.0]) - C64::new(48.0, 0.0)).norm() < 1e-14);
        assert!(h.derivative(&[5, 0]).is_zero());
        assert!(h.derivative(&[1, 1]).is_zero());
    }
}
