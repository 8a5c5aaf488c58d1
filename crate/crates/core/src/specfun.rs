//! Special-function kernels for the closed-form grating results.
//!
//! Integer-order Bessel functions are evaluated with Miller's backward
//! recurrence, normalized through the generating-function sums
//! `J0 + 2 Σ J_2k = 1` and `I0 + 2 Σ (±1)^k I_k = e^{±z}`. A direct power
//! series takes over for small arguments, where it converges in a handful of
//! terms without cancellation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest integer order accepted by the Bessel routines.
pub const MAX_ORDER: usize = 10_000;

/// Largest argument modulus accepted by the complex routines (e^z must stay finite).
pub const MAX_ARG: f64 = 700.0;

const SERIES_RADIUS: f64 = 1.0;
const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_BY: f64 = 1e-100;

/// Stopping rule for power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTolerance {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_terms: 500,
        }
    }
}

impl SeriesTolerance {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || !rel_tol.is_finite() {
            return Err(Error::InvalidInput(format!(
                "series tolerance must be positive, got {rel_tol}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::InvalidInput("series needs at least one term".into()));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

/// `sin(u)/u` with the removable point filled in.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

/// Number of orders beyond which `J_n(x)` / `I_n(x)` are below ~1e-20 for
/// `|arg| = a`. Covers the Airy transition region of width ~a^{1/3}.
pub fn bessel_cutoff(a: f64) -> usize {
    let a = a.abs();
    (a + 10.0 * a.cbrt() + 40.0).ceil() as usize
}

fn miller_start(nmax: usize, a: f64) -> usize {
    let m0 = (nmax as f64).max(a.ceil());
    let m = (m0 + 20.0 + 10.0 * m0.sqrt()) as usize;
    m + (m & 1)
}

fn check_order(nmax: usize) -> Result<()> {
    if nmax > MAX_ORDER {
        return Err(Error::Domain(format!(
            "Bessel order {nmax} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// `J_0(x) ..= J_nmax(x)` for real `x`.
pub fn bessel_j_sequence(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_order(nmax)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite Bessel argument {x}")));
    }
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    let ax = x.abs();
    if ax <= SERIES_RADIUS {
        let q = -0.25 * ax * ax;
        let mut prefix = 1.0;
        for (n, slot) in out.iter_mut().enumerate() {
            if n > 0 {
                prefix *= 0.5 * ax / n as f64;
            }
            if prefix == 0.0 {
                break;
            }
            let mut term = prefix;
            let mut sum = term;
            for k in 1..200 {
                term *= q / (k as f64 * (n + k) as f64);
                sum += term;
                if term.abs() <= 1e-17 * sum.abs() {
                    break;
                }
            }
            *slot = sum;
        }
    } else {
        let start = miller_start(nmax, ax);
        let mut next = 0.0;
        let mut cur = 1e-30;
        let mut norm = 0.0;
        for k in (1..=start).rev() {
            if k <= nmax {
                out[k] = cur;
            }
            if k % 2 == 0 {
                norm += 2.0 * cur;
            }
            let prev = (2.0 * k as f64 / ax) * cur - next;
            next = cur;
            cur = prev;
            if cur.abs() > RESCALE_ABOVE {
                cur *= RESCALE_BY;
                next *= RESCALE_BY;
                norm *= RESCALE_BY;
                for v in out.iter_mut().skip(k.saturating_sub(1)) {
                    *v *= RESCALE_BY;
                }
            }
        }
        out[0] = cur;
        norm += cur;
        for v in out.iter_mut() {
            *v /= norm;
        }
    }
    if x < 0.0 {
        for v in out.iter_mut().skip(1).step_by(2) {
            *v = -*v;
        }
    }
    Ok(out)
}

/// Bessel function of the first kind `J_n(x)`, integer order, real argument.
pub fn bessel_j(order: i64, x: f64) -> Result<f64> {
    let n = order.unsigned_abs() as usize;
    let v = bessel_j_sequence(n, x)?[n];
    Ok(if order < 0 && n % 2 == 1 { -v } else { v })
}

/// `I_0(z) ..= I_nmax(z)` for complex `z`.
pub fn bessel_i_sequence(nmax: usize, z: C64) -> Result<Vec<C64>> {
    check_order(nmax)?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite Bessel argument {z}")));
    }
    let az = z.norm();
    if az > MAX_ARG {
        return Err(Error::Domain(format!(
            "|z| = {az} overflows the modified Bessel normalization"
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); nmax + 1];
    if az == 0.0 {
        out[0] = C64::new(1.0, 0.0);
        return Ok(out);
    }
    if az <= SERIES_RADIUS {
        let q = 0.25 * z * z;
        let half = 0.5 * z;
        let mut prefix = C64::new(1.0, 0.0);
        for (n, slot) in out.iter_mut().enumerate() {
            if n > 0 {
                prefix *= half / n as f64;
            }
            if prefix.norm() == 0.0 {
                break;
            }
            let mut term = prefix;
            let mut sum = term;
            for k in 1..200 {
                term *= q / (k as f64 * (n + k) as f64);
                sum += term;
                if term.norm() <= 1e-17 * sum.norm() {
                    break;
                }
            }
            *slot = sum;
        }
        return Ok(out);
    }

    // e^{s z} = I0 + 2 Σ s^k I_k, with s chosen so that Re(s z) >= 0.
    let s = if z.re >= 0.0 { 1.0 } else { -1.0 };
    let start = miller_start(nmax, az);
    let two_over_z = 2.0 / z;
    let mut next = C64::new(0.0, 0.0);
    let mut cur = C64::new(1e-30, 0.0);
    let mut norm = C64::new(0.0, 0.0);
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = cur;
        }
        let sign = if k % 2 == 0 { 1.0 } else { s };
        norm += 2.0 * sign * cur;
        let prev = two_over_z * k as f64 * cur + next;
        next = cur;
        cur = prev;
        if cur.norm() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            next *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut().skip(k.saturating_sub(1)) {
                *v *= RESCALE_BY;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    // divide by |norm| twice so the squared modulus never overflows
    let r = norm.norm();
    let scale = (s * z).exp() * (norm.conj() / r) / r;
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}

/// Modified Bessel function `I_n(z)`, integer order, complex argument.
pub fn bessel_i_complex(order: i64, z: C64) -> Result<C64> {
    let n = order.unsigned_abs() as usize;
    Ok(bessel_i_sequence(n, z)?[n])
}

/// `J_n(w)` for complex `w`, through `J_n(w) = i^n I_n(-i w)`.
pub fn bessel_j_complex(order: i64, w: C64) -> Result<C64> {
    let n = order.unsigned_abs() as usize;
    let i_n = bessel_i_sequence(n, C64::new(w.im, -w.re))?[n];
    let v = C64::i().powu(n as u32) * i_n;
    Ok(if order < 0 && n % 2 == 1 { -v } else { v })
}

/// Confluent hypergeometric `1F1(ell; ell + 1; z)` for integer `ell >= 1`.
pub fn hyp1f1_ladder(ell: u32, z: C64) -> Result<C64> {
    hyp1f1_ladder_with(ell, z, SeriesTolerance::default())
}

/// As [`hyp1f1_ladder`] with an explicit series stopping rule.
///
/// Uses `1F1(l; l+1; z) = l G_l` with `G_l = ∫_0^1 a^{l-1} e^{z a} da`, which
/// obeys `z G_l = e^z - (l-1) G_{l-1}`. The recurrence runs upward when
/// `l <= |z|` and downward from a high starting order otherwise; a power series
/// covers `|z| <= 1/2`.
pub fn hyp1f1_ladder_with(ell: u32, z: C64, tol: SeriesTolerance) -> Result<C64> {
    if ell == 0 {
        return Err(Error::InvalidInput("1F1 ladder order must be >= 1".into()));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite 1F1 argument {z}")));
    }
    let az = z.norm();
    if az > MAX_ARG {
        return Err(Error::Domain(format!("|z| = {az} too large for 1F1")));
    }
    let l = ell as f64;
    if az <= 0.5 {
        // Σ_k l/(l+k) z^k/k!
        let mut power = C64::new(1.0, 0.0);
        let mut sum = C64::new(1.0, 0.0);
        for k in 1..=tol.max_terms {
            power *= z / k as f64;
            let term = power * (l / (l + k as f64));
            sum += term;
            if term.norm() <= tol.rel_tol * sum.norm() {
                return Ok(sum);
            }
        }
        return Err(Error::Domain(format!(
            "1F1({ell}; {}; {z}) series did not converge in {} terms",
            ell + 1,
            tol.max_terms
        )));
    }
    let ez = z.exp();
    if l <= az {
        let mut g = (ez - 1.0) / z;
        for m in 2..=ell {
            g = (ez - (m as f64 - 1.0) * g) / z;
        }
        Ok(l * g)
    } else {
        let top = ell as usize + (2.0 * az) as usize + 50;
        let mut g = ez / (top as f64 - 1.0 + z);
        for m in ((ell as usize + 1)..=top).rev() {
            g = (ez - z * g) / (m as f64 - 1.0);
        }
        Ok(l * g)
    }
}

/// Sine integral `Si(x) = ∫_0^x sin(t)/t dt`.
pub fn sine_integral(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 20.0 {
        let x2 = ax * ax;
        let mut term = ax;
        let mut sum = ax;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x2 / ((2.0 * kf) * (2.0 * kf + 1.0));
            let add = term / (2.0 * kf + 1.0);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        // asymptotic auxiliary functions, truncated at the smallest term
        let inv2 = 1.0 / (ax * ax);
        let (mut f, mut g) = (1.0, 1.0);
        let (mut tf, mut tg) = (1.0_f64, 1.0_f64);
        for k in 1..20 {
            let kf = k as f64;
            let nf = -tf * (2.0 * kf - 1.0) * (2.0 * kf) * inv2;
            let ng = -tg * (2.0 * kf) * (2.0 * kf + 1.0) * inv2;
            if nf.abs() > tf.abs() || ng.abs() > tg.abs() {
                break;
            }
            tf = nf;
            tg = ng;
            f += tf;
            g += tg;
        }
        let f = f / ax;
        let g = g * inv2;
        std::f64::consts::FRAC_PI_2 - f * ax.cos() - g * ax.sin()
    };
    v.copysign(x)
}
