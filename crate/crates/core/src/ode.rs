//! Adaptive Dormand–Prince 5(4) integration with PI step-size control.

use crate::error::{Error, Result};
use num_traits::{Float, FromPrimitive};

/// Step-control settings.
#[derive(Debug, Clone, Copy)]
pub struct OdeConfig<T> {
    /// Absolute and relative local error tolerance.
    pub tol: T,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<T>,
    /// Hard cap on the number of attempted steps.
    pub max_steps: usize,
}

impl<T: Float> OdeConfig<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, h_init: None, max_steps: 1_000_000 }
    }
}

/// Butcher tableau of the Dormand–Prince pair.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// The last row doubles as the fifth-order weights (first same as last).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between fifth- and fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`. `observer` is called with
/// the initial state and after every accepted step.
pub fn integrate<T, F, O>(mut f: F, t0: T, y0: &[T], t1: T, cfg: &OdeConfig<T>, mut observer: O) -> Result<Vec<T>>
where
    T: Float + FromPrimitive,
    F: FnMut(T, &[T], &mut [T]),
    O: FnMut(T, &[T]),
{
    let c = |x: f64| T::from_f64(x).expect("representable constant");
    let n = y0.len();
    let mut y = y0.to_vec();
    observer(t0, &y);
    if t1 <= t0 || n == 0 {
        return Ok(y);
    }
    let span = t1 - t0;
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    let mut ytmp = vec![T::zero(); n];
    f(t0, &y, &mut k[0]);

    let mut h = match cfg.h_init {
        Some(h) => h,
        None => initial_step(&y, &k[0], cfg.tol, span),
    };
    let h_floor = c(1e-14) * (t0.abs() + t1.abs() + T::one());
    let (beta, alpha) = (c(0.04), c(0.2 - 0.04 * 0.75));
    let mut err_prev = c(1e-4);
    let mut t = t0;

    for _ in 0..cfg.max_steps {
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        for s in 1..7 {
            let (done, rest) = k.split_at_mut(s);
            for i in 0..n {
                let mut acc = T::zero();
                for (j, kj) in done.iter().enumerate() {
                    acc = acc + c(A[s][j]) * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            f(t + c(C[s]) * h, &ytmp, &mut rest[0]);
        }
        // ytmp now holds the fifth-order solution (stage 7 is evaluated there).
        let mut err = T::zero();
        for i in 0..n {
            let mut e = T::zero();
            for (j, kj) in k.iter().enumerate() {
                e = e + c(E[j]) * kj[i];
            }
            let scale = cfg.tol + cfg.tol * y[i].abs().max(ytmp[i].abs());
            err = err.max((h * e).abs() / scale);
        }
        if err <= T::one() {
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&ytmp);
            k.swap(0, 6);
            observer(t, &y);
            if last {
                return Ok(y);
            }
            let e = err.max(c(1e-10));
            let fac = c(0.9) * e.powf(-alpha) * err_prev.powf(beta);
            h = h * fac.max(c(0.2)).min(c(10.0));
            err_prev = e;
        } else {
            let fac = c(0.9) * err.powf(-alpha);
            h = h * fac.max(c(0.2));
        }
        if h < h_floor {
            return Err(Error::StepFailure { t: t.to_f64().unwrap_or(f64::NAN) });
        }
    }
    Err(Error::StepFailure { t: t.to_f64().unwrap_or(f64::NAN) })
}

fn initial_step<T: Float + FromPrimitive>(y: &[T], dy: &[T], tol: T, span: T) -> T {
    let c = |x: f64| T::from_f64(x).expect("representable constant");
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for (yi, di) in y.iter().zip(dy) {
        let sc = tol + tol * yi.abs();
        d0 = d0.max(yi.abs() / sc);
        d1 = d1.max(di.abs() / sc);
    }
    let h = if d0 < c(1e-5) || d1 < c(1e-5) { c(1e-6) } else { c(0.01) * d0 / d1 };
    h.min(span)
}
