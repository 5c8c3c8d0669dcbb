//! Fehlberg's embedded Runge–Kutta 7(8) pair with step-size control.
//! The eighth-order solution is propagated; steps are shortened to land
//! exactly on the requested output times.

use crate::error::{Error, Result};

const STAGES: usize = 13;

const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    1.0 / 2.0,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

const A: [[f64; 12]; STAGES] = [
    [0.0; 12],
    [2.0 / 27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 36.0, 1.0 / 12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        -25.0 / 108.0,
        0.0,
        0.0,
        125.0 / 108.0,
        -65.0 / 27.0,
        125.0 / 54.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        31.0 / 300.0,
        0.0,
        0.0,
        0.0,
        61.0 / 225.0,
        -2.0 / 9.0,
        13.0 / 900.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.0,
        0.0,
        0.0,
        -53.0 / 6.0,
        704.0 / 45.0,
        -107.0 / 9.0,
        67.0 / 90.0,
        3.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        3.0 / 205.0,
        0.0,
        0.0,
        0.0,
        0.0,
        -6.0 / 41.0,
        -3.0 / 205.0,
        -3.0 / 41.0,
        3.0 / 41.0,
        6.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

/// Eighth-order weights.
const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

/// Seventh-order weights.
const B7: [f64; STAGES] = [
    41.0 / 840.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    41.0 / 840.0,
    0.0,
    0.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rkf78 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Rkf78 {
    fn default() -> Self {
        Rkf78 {
            rtol: 1e-12,
            atol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl Rkf78 {
    /// One step of size `h`; returns the new state and the error estimate.
    pub fn step<const N: usize, F>(&self, f: &mut F, t: f64, y: &[f64; N], h: f64) -> Result<([f64; N], [f64; N])>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let mut k = [[0.0; N]; STAGES];
        for s in 0..STAGES {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(t + C[s] * h, &ys)?;
        }
        let mut y8 = *y;
        let mut err = [0.0; N];
        for s in 0..STAGES {
            for i in 0..N {
                y8[i] += h * B8[s] * k[s][i];
                err[i] += h * (B8[s] - B7[s]) * k[s][i];
            }
        }
        Ok((y8, err))
    }

    /// Integrates from `(t0, y0)` and returns the state at each of `times`
    /// (non-decreasing, all `>= t0`). `observer` sees every accepted step.
    pub fn integrate<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        times: &[f64],
        mut observer: O,
    ) -> Result<(Vec<[f64; N]>, StepStats)>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
        O: FnMut(f64, &[f64; N]),
    {
        if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
            return Err(Error::Usage("output times must be non-decreasing and not before t0".into()));
        }
        let mut stats = StepStats::default();
        let mut out = Vec::with_capacity(times.len());
        let (mut t, mut y) = (t0, y0);
        let f0 = f(t, &y)?;
        let ynorm = y.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let fnorm = f0.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut h = if fnorm > 0.0 { 0.01 * ynorm.max(1.0) / fnorm } else { 1.0 };

        for &target in times {
            while t < target {
                let remaining = target - t;
                let last = h >= remaining;
                let step = if last { remaining } else { h };
                let (ynew, err) = self.step(&mut f, t, &y, step)?;
                let mut norm = 0.0f64;
                for i in 0..N {
                    let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                    norm = norm.max(err[i].abs() / sc);
                }
                if !norm.is_finite() {
                    return Err(Error::Integration {
                        t,
                        reason: "non-finite state or error estimate".into(),
                    });
                }
                let factor = if norm == 0.0 { 4.0 } else { (0.9 * norm.powf(-1.0 / 8.0)).clamp(0.2, 4.0) };
                if norm <= 1.0 {
                    t = if last { target } else { t + step };
                    y = ynew;
                    stats.accepted += 1;
                    observer(t, &y);
                    // a clipped final step says nothing about the natural size
                    if !last || factor < 1.0 {
                        h = step * factor;
                    }
                } else {
                    stats.rejected += 1;
                    h = step * factor;
                }
                if h <= 1e-12 * t.abs().max(1.0) {
                    return Err(Error::Integration {
                        t,
                        reason: format!("step size collapsed to {h:e}"),
                    });
                }
                if stats.accepted + stats.rejected > self.max_steps {
                    return Err(Error::Integration {
                        t,
                        reason: format!("exceeded {} steps", self.max_steps),
                    });
                }
            }
            out.push(y);
        }
        Ok((out, stats))
    }
}
