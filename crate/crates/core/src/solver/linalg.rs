//! Dense LU with partial pivoting that skips structurally zero work, suited
//! to banded matrices with a dense trailing block.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    pub min_pivot: f64,
    pub max_pivot: f64,
}

impl LuFactor {
    /// Factors the row-major `n × n` matrix `a`.
    pub fn new(mut a: Vec<Complex64>, n: usize) -> Self {
        assert_eq!(a.len(), n * n);
        let zero = Complex64::new(0.0, 0.0);
        // last nonzero column per row
        let mut hi: Vec<usize> = (0..n)
            .map(|i| (0..n).rev().find(|&j| a[i * n + j] != zero).unwrap_or(0))
            .collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut min_pivot, mut max_pivot) = (f64::INFINITY, 0.0f64);
        for c in 0..n {
            let mut p = c;
            let mut best = a[c * n + c].norm();
            for i in c + 1..n {
                let v = a[i * n + c].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != c {
                for j in 0..n {
                    a.swap(c * n + j, p * n + j);
                }
                perm.swap(c, p);
                hi.swap(c, p);
            }
            min_pivot = min_pivot.min(best);
            max_pivot = max_pivot.max(best);
            if best == 0.0 {
                continue;
            }
            let inv = 1.0 / a[c * n + c];
            let end = hi[c];
            for i in c + 1..n {
                let lic = a[i * n + c];
                if lic == zero {
                    continue;
                }
                let m = lic * inv;
                a[i * n + c] = m;
                let (top, bottom) = a.split_at_mut(i * n);
                let src = &top[c * n + c + 1..c * n + end + 1];
                let dst = &mut bottom[c + 1..end + 1];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= m * s;
                }
                hi[i] = hi[i].max(end);
            }
        }
        Self { n, lu: a, perm, min_pivot, max_pivot }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialRng;

    fn matvec(a: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
    }

    #[test]
    fn solves_banded_plus_dense_tail() {
        let mut rng = TrialRng::new(5);
        let n = 40;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let banded = (i as i64 - j as i64).abs() <= 2;
                let tail = i >= 30 && j >= 30;
                if banded || tail {
                    a[i * n + j] = Complex64::new(rng.normal(), rng.normal());
                }
            }
        }
        let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.normal(), rng.normal())).collect();
        let b = matvec(&a, &x);
        let lu = LuFactor::new(a, n);
        let y = lu.solve(&b);
        let err: f64 = x.iter().zip(&y).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let a = vec![c(0.0), c(1.0), c(2.0), c(0.0)];
        let lu = LuFactor::new(a, 2);
        let y = lu.solve(&[c(3.0), c(4.0)]);
        assert!((y[0] - c(2.0)).norm() < 1e-15 && (y[1] - c(3.0)).norm() < 1e-15);
    }
}
