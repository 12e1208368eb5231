//! Finite-difference weights and the fourth-order radial stencils shared by
//! the mode operator, the H¹ₖ norm and the per-frequency solver.

/// Fornberg's recursion: weights `w[k][i]` such that
/// `f^(k)(x0) ≈ Σ_i w[k][i] f(nodes[i])` for `k = 0..=order`.
pub fn fornberg(x0: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
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
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// How rows near the outer end of the radial grid are closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterClosure {
    /// Shifted one-sided stencils using only grid values.
    OneSided,
    /// A ghost node at index `n` carries the value zero (wall at `r_max`).
    DirichletGhost,
}

/// First- and second-derivative weights for one grid row.
#[derive(Debug, Clone)]
pub struct RowStencil {
    /// Index of the first node in the window.
    pub start: usize,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Fourth-order (or better) stencils on a uniform grid of `n` nodes.
///
/// Interior rows use the 5-point central formulas; rows within two nodes of
/// either end switch to 6-point shifted windows. With
/// [`OuterClosure::DirichletGhost`] the window may reach the ghost node `n`,
/// whose weight is simply dropped when the stencil is applied.
#[derive(Debug, Clone)]
pub struct RadialStencils {
    pub n: usize,
    pub h: f64,
    pub closure: OuterClosure,
    pub rows: Vec<RowStencil>,
}

impl RadialStencils {
    pub fn new(n: usize, h: f64, closure: OuterClosure) -> Self {
        assert!(n >= 6, "need at least 6 radial nodes");
        let last = match closure {
            OuterClosure::OneSided => n - 1,
            OuterClosure::DirichletGhost => n,
        };
        let rows = (0..n)
            .map(|j| {
                let (start, len) = if j >= 2 && j + 2 <= last {
                    (j - 2, 5)
                } else if j < 2 {
                    (0, 6)
                } else {
                    (last - 5, 6)
                };
                let nodes: Vec<f64> = (start..start + len).map(|i| i as f64 * h).collect();
                let w = fornberg(j as f64 * h, &nodes, 2);
                RowStencil {
                    start,
                    d1: w[1].clone(),
                    d2: w[2].clone(),
                }
            })
            .collect();
        Self { n, h, closure, rows }
    }

    /// Applies `a·D1 + b·D2` at row `j` to the sampled values `u`.
    #[inline]
    pub fn combine<T>(&self, j: usize, u: &[T], a: f64, b: f64) -> T
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let row = &self.rows[j];
        let mut acc = T::default();
        for (o, (w1, w2)) in row.d1.iter().zip(&row.d2).enumerate() {
            let i = row.start + o;
            if i < self.n {
                acc = acc + u[i] * (a * w1 + b * w2);
            }
        }
        acc
    }

    pub fn d1<T>(&self, u: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        (0..self.n).map(|j| self.combine(j, u, 1.0, 0.0)).collect()
    }

    pub fn d2<T>(&self, u: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        (0..self.n).map(|j| self.combine(j, u, 0.0, 1.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_matches_classical_central_weights() {
        let w = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for i in 0..5 {
            assert!((w[1][i] - d1[i]).abs() < 1e-14);
            assert!((w[2][i] - d2[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn stencils_are_exact_on_quartics() {
        let n = 12;
        let h = 0.1;
        for closure in [OuterClosure::OneSided, OuterClosure::DirichletGhost] {
            let st = RadialStencils::new(n, h, closure);
            // vanishes at the ghost node x = n·h so the Dirichlet closure is exact too
            let xg = n as f64 * h;
            let f = |x: f64| (x - xg) * (x * x * x - 0.3 * x + 1.0);
            let df = |x: f64| (x * x * x - 0.3 * x + 1.0) + (x - xg) * (3.0 * x * x - 0.3);
            let d2f = |x: f64| 2.0 * (3.0 * x * x - 0.3) + (x - xg) * 6.0 * x;
            let u: Vec<f64> = (0..n).map(|j| f(j as f64 * h)).collect();
            let d1 = st.d1(&u);
            let d2 = st.d2(&u);
            for j in 0..n {
                let x = j as f64 * h;
                assert!((d1[j] - df(x)).abs() < 1e-9, "{closure:?} d1 row {j}");
                assert!((d2[j] - d2f(x)).abs() < 1e-7, "{closure:?} d2 row {j}");
            }
        }
    }
}
