//! Smooth plateau cutoffs built from `exp(−1/x)`.

/// `exp(−1/x)` for `x > 0`, zero otherwise.
fn flat(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = flat(x);
        a / (a + flat(1.0 - x))
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let a = flat(x);
        let b = flat(1.0 - x);
        a * b * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x))) / ((a + b) * (a + b))
    }
}

/// Smooth transition from 0 at `lo` to 1 at `hi` (`lo < hi`).
pub fn ramp_up(x: f64, lo: f64, hi: f64) -> f64 {
    smooth_step((x - lo) / (hi - lo))
}

pub fn ramp_up_derivative(x: f64, lo: f64, hi: f64) -> f64 {
    smooth_step_derivative((x - lo) / (hi - lo)) / (hi - lo)
}

/// Equal to 1 on `[inner_lo, inner_hi]`, vanishing outside `(outer_lo, outer_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub outer_lo: f64,
    pub inner_lo: f64,
    pub inner_hi: f64,
    pub outer_hi: f64,
}

impl Plateau {
    pub fn new(outer_lo: f64, inner_lo: f64, inner_hi: f64, outer_hi: f64) -> Self {
        assert!(outer_lo < inner_lo && inner_lo <= inner_hi && inner_hi < outer_hi);
        Self { outer_lo, inner_lo, inner_hi, outer_hi }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ramp_up(x, self.outer_lo, self.inner_lo) * (1.0 - ramp_up(x, self.inner_hi, self.outer_hi))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let up = ramp_up(x, self.outer_lo, self.inner_lo);
        let dup = ramp_up_derivative(x, self.outer_lo, self.inner_lo);
        let down = 1.0 - ramp_up(x, self.inner_hi, self.outer_hi);
        let ddown = -ramp_up_derivative(x, self.inner_hi, self.outer_hi);
        dup * down + up * ddown
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_support_and_plateau() {
        let p = Plateau::new(2.0 / 3.0, 0.75, 1.25, 4.0 / 3.0);
        for i in 0..=1000 {
            let x = i as f64 * 2e-3;
            let v = p.eval(x);
            assert!((0.0..=1.0).contains(&v));
            if (0.75..=1.25).contains(&x) {
                assert_eq!(v, 1.0);
            }
            if x <= 2.0 / 3.0 || x >= 4.0 / 3.0 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn derivative_matches_differences() {
        let p = Plateau::new(0.0, 0.5, 1.0, 2.0);
        for i in 1..200 {
            let x = i as f64 * 0.01;
            let h = 1e-6;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            assert!((fd - p.derivative(x)).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn step_is_symmetric() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert!((smooth_step(x) + smooth_step(1.0 - x) - 1.0).abs() < 1e-15);
        }
    }
}
