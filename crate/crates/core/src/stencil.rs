//! Central finite-difference weights on a uniform lattice.

/// Fornberg's recurrence: weights `w[m][j]` such that
/// `f^{(m)}(x0) ≈ Σ_j w[m][j]·f(nodes[j])`, for every `m ≤ max_order`.
pub fn fornberg(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Centered stencil for the `order`-th derivative with formal accuracy
/// `accuracy` (even), on unit spacing. Returns `(half_width, weights)` where
/// `weights[i]` multiplies the sample at offset `i − half_width`.
pub fn central(order: usize, accuracy: usize) -> (usize, Vec<f64>) {
    assert!(accuracy >= 2 && accuracy.is_multiple_of(2), "accuracy must be even");
    if order == 0 {
        return (0, vec![1.0]);
    }
    let half = order.div_ceil(2) - 1 + accuracy / 2;
    let nodes: Vec<f64> = (0..=2 * half).map(|i| i as f64 - half as f64).collect();
    let w = fornberg(0.0, &nodes, order);
    (half, w[order].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_first_derivative() {
        let (h, w) = central(1, 2);
        assert_eq!(h, 1);
        assert!((w[0] + 0.5).abs() < 1e-14 && w[1].abs() < 1e-14 && (w[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fourth_order_second_derivative() {
        let (h, w) = central(2, 4);
        assert_eq!(h, 2);
        let exact = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(exact) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn stencils_differentiate_polynomials_exactly() {
        for order in 1..=6 {
            for acc in [2, 4, 6] {
                let (h, w) = central(order, acc);
                // x^order has derivative order! everywhere
                let d: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(i, wi)| wi * (i as f64 - h as f64 + 0.3).powi(order as i32))
                    .sum();
                let fact: f64 = (1..=order).map(|k| k as f64).product();
                assert!(
                    (d - fact).abs() < 1e-8 * fact,
                    "order {order} acc {acc}: {d}"
                );
            }
        }
    }
}
