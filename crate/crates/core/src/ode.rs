//! Adaptive Dormand-Prince 5(4) integrator for complex linear systems.

use num_complex::Complex64 as C64;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-13,
            max_steps: 200_000,
            min_step: 1e-14,
        }
    }
}

/// Why an integration stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeFailure {
    StepTooSmall { t: f64, h: f64 },
    TooManySteps { t: f64 },
    NonFinite { t: f64 },
}

impl std::fmt::Display for OdeFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OdeFailure::StepTooSmall { t, h } => {
                write!(f, "step size {h:.3e} underflow at t = {t}")
            }
            OdeFailure::TooManySteps { t } => write!(f, "step budget exhausted at t = {t}"),
            OdeFailure::NonFinite { t } => write!(f, "non-finite state at t = {t}"),
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1`, calling `observe` after every
/// accepted step (and once at `t0`).
pub fn integrate<F, O>(
    f: F,
    t0: f64,
    t1: f64,
    y0: &[C64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<Vec<C64>, OdeFailure>
where
    F: Fn(f64, &[C64], &mut [C64]),
    O: FnMut(f64, &[C64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    observe(t0, &y);
    if t1 == t0 || n == 0 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let zero = C64::new(0.0, 0.0);
    let mut k = vec![vec![zero; n]; 7];
    let mut tmp = vec![zero; n];
    let mut ynew = vec![zero; n];

    let mut t = t0;
    f(t, &y, &mut k[0]);
    let mut h = initial_step(&y, &k[0], span, opts);
    let mut steps = 0usize;
    let mut last_err: f64 = 1e-4;

    while (t1 - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            return Err(OdeFailure::TooManySteps { t });
        }
        steps += 1;
        if h < opts.min_step * span.max(1.0) {
            return Err(OdeFailure::StepTooSmall { t, h });
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;

        stage(&mut tmp, &y, hs, &[(A21, &k[0])]);
        f(t + C2 * hs, &tmp, &mut k[1]);
        stage(&mut tmp, &y, hs, &[(A31, &k[0]), (A32, &k[1])]);
        f(t + C3 * hs, &tmp, &mut k[2]);
        stage(
            &mut tmp,
            &y,
            hs,
            &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])],
        );
        f(t + C4 * hs, &tmp, &mut k[3]);
        stage(
            &mut tmp,
            &y,
            hs,
            &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])],
        );
        f(t + C5 * hs, &tmp, &mut k[4]);
        stage(
            &mut tmp,
            &y,
            hs,
            &[
                (A61, &k[0]),
                (A62, &k[1]),
                (A63, &k[2]),
                (A64, &k[3]),
                (A65, &k[4]),
            ],
        );
        f(t + hs, &tmp, &mut k[5]);
        stage(
            &mut ynew,
            &y,
            hs,
            &[
                (B1, &k[0]),
                (B3, &k[2]),
                (B4, &k[3]),
                (B5, &k[4]),
                (B6, &k[5]),
            ],
        );
        f(t + hs, &ynew, &mut k[6]);

        let mut err = 0.0;
        for i in 0..n {
            let e = hs
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            err += (e.norm() / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            return Err(OdeFailure::NonFinite { t });
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            observe(t, &y);
            // PI controller
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 10.0);
            last_err = err.max(1e-4);
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
        }
    }
    Ok(y)
}

fn stage(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &Vec<C64>)]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (a, k) in terms {
            acc += *a * k[i];
        }
        *o = y[i] + h * acc;
    }
}

fn initial_step(y: &[C64], dy: &[C64], span: f64, opts: &OdeOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (a, b) in y.iter().zip(dy) {
        let sc = opts.atol + opts.rtol * a.norm();
        d0 += (a.norm() / sc).powi(2);
        d1 += (b.norm() / sc).powi(2);
    }
    let n = y.len() as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h.min(span).max(1e-6 * span)
}
