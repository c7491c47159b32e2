//! Explicit Runge–Kutta integrators on fixed-size states.

use crate::error::{Error, Result};

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step. Returns the fifth-order solution and the
/// embedded error estimate.
pub fn dopri_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N])
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for i in 0..N {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..7 {
            d5 += B5[s] * k[s][i];
            d4 += B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        err[i] = h * (d5 - d4);
    }
    (y5, err)
}

/// Step-size control for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Local error tolerance, applied as `atol = rtol = tol`.
    pub tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl AdaptiveOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            initial_step: 1e-6,
            min_step: 1e-14,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

/// Integrates from `t0` to `t_end`, calling `accept(t, y, h_used)` after every
/// accepted step. `accept` may veto continuation by returning an error.
pub fn integrate_adaptive<const N: usize, F, G>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: AdaptiveOptions,
    mut accept: G,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    G: FnMut(f64, &[f64; N], f64) -> Result<()>,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.initial_step.min(t_end - t0);
    let mut steps = 0usize;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::IntegrationFailure {
                last_valid_r: t,
                reason: "step budget exhausted".into(),
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let (y_new, err) = dopri_step(&mut f, t, &y, h);
        let mut norm = 0.0f64;
        for i in 0..N {
            let scale = opts.tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            norm = norm.max((err[i] / scale).abs());
        }
        if !norm.is_finite() || y_new.iter().chain(&err).any(|v| !v.is_finite()) {
            norm = 1e10;
        }
        if norm <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            steps += 1;
            accept(t, &y, h)?;
            let factor = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(opts.max_step);
        } else {
            h *= (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9);
            if h < opts.min_step {
                return Err(Error::IntegrationFailure {
                    last_valid_r: t,
                    reason: "step size underflow".into(),
                });
            }
        }
    }
    Ok(y)
}

/// Classical RK4 with `steps` equal steps over `[t0, t0 + span]`.
pub fn rk4<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], span: f64, steps: usize) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let h = span / steps as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..steps {
        let k1 = f(t, &y);
        let k2 = f(t + h / 2.0, &axpy(&y, h / 2.0, &k1));
        let k3 = f(t + h / 2.0, &axpy(&y, h / 2.0, &k2));
        let k4 = f(t + h, &axpy(&y, h, &k3));
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    y
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Classical RK4 on dynamically sized states with a fallible vector field.
pub fn rk4_dyn<F>(mut f: F, y0: Vec<f64>, span: f64, steps: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let h = span / steps as f64;
    let mut y = y0;
    let add = |y: &[f64], a: f64, k: &[f64]| -> Vec<f64> {
        y.iter().zip(k).map(|(p, q)| p + a * q).collect()
    };
    for _ in 0..steps {
        let k1 = f(&y)?;
        let k2 = f(&add(&y, h / 2.0, &k1))?;
        let k3 = f(&add(&y, h / 2.0, &k2))?;
        let k4 = f(&add(&y, h, &k3))?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}
