//! Adaptive Dormand–Prince 5(4) integration on fixed-size real state vectors.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Smallest admissible |h| relative to the span before giving up.
    pub min_step_frac: f64,
}

impl OdeOptions {
    pub fn with_tol(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-3, ..Self::default() }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-13,
            max_steps: 1_000_000,
            min_step_frac: 1e-14,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<F, const N: usize> {
    f: F,
    opts: OdeOptions,
}

impl<F, const N: usize> Stepper<F, N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    /// One trial step; returns the 5th-order solution and the scaled error.
    fn trial(&mut self, t: f64, y: &[f64; N], k0: &[f64; N], h: f64) -> ([f64; N], [f64; N], f64) {
        let mut k = [[0.0; N]; 7];
        k[0] = *k0;
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = (self.f)(t + C[s] * h, &ys);
        }
        // stage 7 is evaluated at the new point (FSAL)
        let mut y_new = *y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for i in 0..N {
                y_new[i] += h * A[6][j] * kj[i];
            }
        }
        let mut err2 = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y_new[i].abs());
            err2 += (h * e / sc).powi(2);
        }
        (y_new, k[6], (err2 / N as f64).sqrt())
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` towards `t1` (either direction),
/// returning every accepted step including the initial point. `keep_going`
/// is called after each accepted step; returning `false` stops early.
pub fn integrate<const N: usize>(
    f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
    mut keep_going: impl FnMut(f64, &[f64; N]) -> bool,
) -> Result<Vec<(f64, [f64; N])>> {
    let mut out = vec![(t0, y0)];
    drive(f, t0, y0, &[t1], opts, |t, y, _| {
        out.push((t, *y));
        keep_going(t, y)
    })?;
    Ok(out)
}

/// Integrates through the ordered `targets` (monotone in the direction of
/// travel away from `t0`) and returns the state at each of them.
pub fn solve_at<const N: usize>(
    f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    targets: &[f64],
    opts: OdeOptions,
) -> Result<Vec<[f64; N]>> {
    let mut out = Vec::with_capacity(targets.len());
    drive(f, t0, y0, targets, opts, |_, y, hit| {
        if hit {
            out.push(*y);
        }
        true
    })?;
    Ok(out)
}

fn drive<const N: usize>(
    f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    targets: &[f64],
    opts: OdeOptions,
    mut on_step: impl FnMut(f64, &[f64; N], bool) -> bool,
) -> Result<()> {
    let mut st = Stepper { f, opts };
    let mut t = t0;
    let mut y = y0;
    let mut k0 = (st.f)(t, &y);
    let t_end = match targets.last() {
        Some(&t_end) => t_end,
        None => return Ok(()),
    };
    let span = (t_end - t0).abs();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let h_min = opts.min_step_frac * span.max(1.0);
    let mut h = dir * (span * 1e-3).max(h_min * 10.0);
    let mut next = 0;
    // targets coinciding with the start point
    while next < targets.len() && targets[next] == t0 {
        on_step(t, &y, true);
        next += 1;
    }
    let mut steps = 0;
    while next < targets.len() {
        let target = targets[next];
        let mut hit = false;
        if (t + h - target) * dir >= 0.0 {
            h = target - t;
            hit = true;
        }
        let (y_new, k_new, err) = st.trial(t, &y, &k0, h);
        if err <= 1.0 {
            t = if hit { target } else { t + h };
            y = y_new;
            k0 = k_new;
            steps += 1;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let h_prev = h;
            if hit {
                next += 1;
                if !on_step(t, &y, true) {
                    return Ok(());
                }
                while next < targets.len() && targets[next] == t {
                    on_step(t, &y, true);
                    next += 1;
                }
            } else if !on_step(t, &y, false) {
                return Ok(());
            }
            // a step shortened to hit a target should not shrink the next one
            h = if hit { dir * h_prev.abs().max(h.abs()) * fac } else { h * fac };
            if h == 0.0 {
                h = dir * h_min * 10.0;
            }
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
            if h.abs() < h_min {
                return Err(Error::StepFailure { at: t, tol: opts.rtol });
            }
        }
        if steps > opts.max_steps {
            return Err(Error::StepFailure { at: t, tol: opts.rtol });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_forward_and_backward() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let opts = OdeOptions::with_tol(1e-12);
        let fwd = solve_at(f, 0.0, [1.0, 0.0], &[1.0, 5.0, 10.0], opts).unwrap();
        for (y, t) in fwd.iter().zip([1.0f64, 5.0, 10.0]) {
            assert!((y[0] - t.cos()).abs() < 1e-9);
            assert!((y[1] + t.sin()).abs() < 1e-9);
        }
        let back = solve_at(f, 10.0, fwd[2], &[0.0], opts).unwrap();
        assert!((back[0][0] - 1.0).abs() < 1e-9 && back[0][1].abs() < 1e-9);
    }

    #[test]
    fn early_stop_is_honoured() {
        let f = |_t: f64, _y: &[f64; 1]| [1.0];
        let path = integrate(f, 0.0, [0.0], 100.0, OdeOptions::default(), |_, y| y[0] < 3.0).unwrap();
        let last = path.last().unwrap();
        assert!(last.1[0] >= 3.0 && last.0 < 100.0);
    }

    #[test]
    fn zero_data_stays_zero() {
        let f = |t: f64, y: &[f64; 2]| [y[1], -t * y[0]];
        let ys = solve_at(f, 1.0, [0.0, 0.0], &[2.0, 3.0], OdeOptions::default()).unwrap();
        assert!(ys.iter().all(|y| y[0] == 0.0 && y[1] == 0.0));
    }
}
