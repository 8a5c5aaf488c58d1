//! Talbot coefficients: Fourier components of the grating's phase-space kernel.
//!
//! The primary evaluation path expands the kernel in products of Bessel
//! functions, which is free of branch cuts. The closed forms in terms of
//! `J_j` of a square-root argument are kept as cross-checks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grating::{ladder_cutoff, ln_factorial};
use crate::kernel::{Channel, KernelModel, TwoPointKernel};
use crate::params::GratingParameters;
use crate::specfun::{bessel_cutoff, bessel_i_sequence, bessel_j_complex, bessel_j_sequence};

/// Default number of ξ samples on [0, 2).
pub const DEFAULT_XI_POINTS: usize = 512;
/// Default Fourier-order cutoff.
pub const DEFAULT_JMAX: usize = 64;
/// Coefficients beyond the cutoff must be smaller than this.
pub const TAIL_TOL: f64 = 1e-10;
/// Minimum samples per period for the numeric Fourier oracle.
pub const MIN_ORACLE_POINTS: usize = 512;
const NYQUIST_MARGIN: usize = 8;
/// Relative distance from `|ζ_coh| = |ζ_abs|` below which the closed form is refused.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Quantum coherent recoil, or the classical random-walk model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Quantum,
    Classical,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Quantum => "quantum",
            Variant::Classical => "classical",
        }
    }
}

/// A fixed absorption count, or the sum over all counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Absorption {
    Conditional(u32),
    Unconditional,
}

impl Absorption {
    pub fn label(&self) -> String {
        match self {
            Absorption::Conditional(l) => l.to_string(),
            Absorption::Unconditional => "sum".into(),
        }
    }
}

/// Kernel parameters at a given Talbot argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zeta {
    pub abs: f64,
    pub coh: f64,
    pub abs_prime: f64,
}

pub fn zeta(xi: f64, grating: &GratingParameters) -> Zeta {
    let s = (0.5 * PI * xi).sin();
    Zeta {
        abs: 0.5 * grating.n0 * (PI * xi).cos(),
        coh: grating.phi0 * (PI * xi).sin(),
        abs_prime: grating.n0 * s * s,
    }
}

/// Coefficients `B_j` for `j` in `-jmax..=jmax`, stored at index `j + jmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub jmax: usize,
    pub values: Vec<C64>,
}

impl CoefficientRow {
    pub fn get(&self, j: i64) -> C64 {
        if j.unsigned_abs() as usize > self.jmax {
            return C64::new(0.0, 0.0);
        }
        self.values[(j + self.jmax as i64) as usize]
    }

    /// Largest modulus among the outermost four orders on each side.
    pub fn edge_magnitude(&self) -> f64 {
        let n = self.values.len();
        let k = 4.min(n);
        self.values[..k]
            .iter()
            .chain(&self.values[n - k..])
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    fn reversed(mut self) -> Self {
        self.values.reverse();
        self
    }
}

/// ℓ = 0 row via `e^{a cos θ}` products with `a = iφ₀/2 - n₀/4`.
fn row_ell0(xi: f64, g: &GratingParameters, jmax: usize) -> Result<CoefficientRow> {
    let a = C64::new(-0.25 * g.n0, 0.5 * g.phi0);
    let k_cut = bessel_cutoff(a.norm());
    let seq = bessel_i_sequence(k_cut + jmax, a)?;
    let i_at = |k: i64| seq[k.unsigned_abs() as usize];
    let u = PI * xi;
    let pref = (-0.5 * g.n0).exp();
    let kc = k_cut as i64;
    let mut values = Vec::with_capacity(2 * jmax + 1);
    for j in -(jmax as i64)..=(jmax as i64) {
        let mut acc = C64::new(0.0, 0.0);
        for k in -kc..=kc {
            let m = j - k;
            if m.unsigned_abs() as usize > k_cut + jmax {
                continue;
            }
            let phase = C64::from_polar(1.0, (j - 2 * k) as f64 * u);
            acc += i_at(k) * i_at(m).conj() * phase;
        }
        values.push(pref * acc);
    }
    Ok(CoefficientRow { jmax, values })
}

/// Conditional coefficients `B_j(ξ; ℓ)` for all `|j| <= jmax`.
pub fn b_conditional_row(
    xi: f64,
    ell: u32,
    grating: &GratingParameters,
    jmax: usize,
) -> Result<CoefficientRow> {
    if ell == 0 {
        return row_ell0(xi, grating, jmax);
    }
    let base = row_ell0(xi, grating, jmax + ell as usize)?;
    let z = zeta(xi, grating);
    let mut values = vec![C64::new(0.0, 0.0); 2 * jmax + 1];
    if grating.n0 == 0.0 {
        return Ok(CoefficientRow { jmax, values });
    }
    let q = 0.25 * grating.n0;
    for n in 0..=ell {
        let pow_part = if ell == n {
            1.0
        } else {
            z.abs.powi((ell - n) as i32)
        };
        if pow_part == 0.0 {
            continue;
        }
        for r in 0..=n {
            let w = q.powi(n as i32)
                * pow_part
                * (-(ln_factorial(r) + ln_factorial(n - r) + ln_factorial(ell - n))).exp();
            let shift = -(n as i64) + 2 * r as i64;
            for (idx, slot) in values.iter_mut().enumerate() {
                let j = idx as i64 - jmax as i64;
                *slot += w * base.get(j + shift);
            }
        }
    }
    Ok(CoefficientRow { jmax, values })
}

/// Unconditional coefficients `B_j(ξ)` for all `|j| <= jmax`.
pub fn b_unconditional_row(
    xi: f64,
    grating: &GratingParameters,
    variant: Variant,
    jmax: usize,
) -> Result<CoefficientRow> {
    let z = zeta(xi, grating);
    let m_cut = bessel_cutoff(z.coh);
    let jseq = bessel_j_sequence(m_cut, z.coh.abs())?;
    let j_at = |m: i64| {
        let v = jseq[m.unsigned_abs() as usize];
        let odd = m.rem_euclid(2) == 1;
        // J_{-m} = (-1)^m J_m and J_m(-x) = (-1)^m J_m(x)
        let flip = odd && ((m < 0) != (z.coh < 0.0));
        if flip {
            -v
        } else {
            v
        }
    };
    let top = m_cut + jmax;
    let iseq = bessel_i_sequence(top, C64::new(z.abs_prime, 0.0))?;
    let pref = (-z.abs_prime).exp();
    let mc = m_cut as i64;
    let mut values = Vec::with_capacity(2 * jmax + 1);
    for j in -(jmax as i64)..=(jmax as i64) {
        let mut acc = 0.0;
        for m in -mc..=mc {
            acc += j_at(m) * iseq[(j - m).unsigned_abs() as usize].re;
        }
        values.push(C64::new(pref * acc, 0.0));
    }
    let row = CoefficientRow { jmax, values };
    Ok(match variant {
        Variant::Quantum => row,
        Variant::Classical => row.reversed(),
    })
}

/// Row for an arbitrary absorption selection and variant.
///
/// The classical variant reverses the order index for conditional rows too.
pub fn b_row(
    xi: f64,
    absorption: Absorption,
    grating: &GratingParameters,
    variant: Variant,
    jmax: usize,
) -> Result<CoefficientRow> {
    match absorption {
        Absorption::Unconditional => b_unconditional_row(xi, grating, variant, jmax),
        Absorption::Conditional(l) => {
            let row = b_conditional_row(xi, l, grating, jmax)?;
            Ok(match variant {
                Variant::Quantum => row,
                Variant::Classical => row.reversed(),
            })
        }
    }
}

pub fn b_conditional(j: i64, xi: f64, ell: u32, grating: &GratingParameters) -> Result<C64> {
    let jm = j.unsigned_abs() as usize;
    Ok(b_conditional_row(xi, ell, grating, jm)?.get(j))
}

pub fn b_unconditional(
    j: i64,
    xi: f64,
    grating: &GratingParameters,
    variant: Variant,
) -> Result<C64> {
    let jm = j.unsigned_abs() as usize;
    Ok(b_unconditional_row(xi, grating, variant, jm)?.get(j))
}

fn closed_form(j: i64, pref: f64, coh: f64, absorb: f64) -> Result<C64> {
    let sum = coh + absorb;
    let diff = coh - absorb;
    if sum == 0.0 && diff == 0.0 {
        return Ok(C64::new(if j == 0 { pref } else { 0.0 }, 0.0));
    }
    let scale = coh.abs().max(absorb.abs());
    if sum.abs() <= DEGENERACY_TOL * scale || diff.abs() <= DEGENERACY_TOL * scale {
        return Err(Error::Degenerate(format!(
            "zeta_coh = {coh}, zeta_abs = {absorb}"
        )));
    }
    let ratio = C64::new(diff / sum, 0.0);
    let power = (0.5 * j as f64 * ratio.ln()).exp();
    let arg = C64::new(diff * sum, 0.0).sqrt() * sum.signum();
    Ok(pref * power * bessel_j_complex(j, arg)?)
}

/// Closed form for ℓ = 0 in terms of `J_j` of a square-root argument.
pub fn b0_closed_form(j: i64, xi: f64, grating: &GratingParameters) -> Result<C64> {
    let z = zeta(xi, grating);
    closed_form(j, (-0.5 * grating.n0).exp(), z.coh, z.abs)
}

/// Closed form of the unconditional coefficients (quantum variant).
pub fn b_unconditional_closed_form(j: i64, xi: f64, grating: &GratingParameters) -> Result<C64> {
    let z = zeta(xi, grating);
    closed_form(j, (-z.abs_prime).exp(), z.coh, -z.abs_prime)
}

/// Samples `K(x - ξ/2, x + ξ/2)` at `x_i = i/n`, one vector per channel.
pub fn sample_line(model: &dyn KernelModel, xi: f64, n: usize) -> Result<Vec<Vec<C64>>> {
    let pts: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / n as f64;
            model.pair(x - 0.5 * xi, x + 0.5 * xi)
        })
        .collect::<Result<_>>()?;
    let ch = model.channels();
    let mut out = vec![Vec::with_capacity(n); ch];
    for p in pts {
        for (c, v) in p.into_iter().enumerate() {
            out[c].push(v);
        }
    }
    Ok(out)
}

/// Collapses sampled channels to the selected one (or their sum).
pub fn select_channel(line: &[Vec<C64>], channel: Channel) -> Result<Vec<C64>> {
    match channel {
        Channel::Index(c) => line.get(c).cloned().ok_or_else(|| {
            Error::InvalidInput(format!("kernel has no channel {c} (has {})", line.len()))
        }),
        Channel::Sum => {
            let n = line.first().map_or(0, |v| v.len());
            let mut acc = vec![C64::new(0.0, 0.0); n];
            for ch in line {
                for (a, v) in acc.iter_mut().zip(ch) {
                    *a += v;
                }
            }
            Ok(acc)
        }
    }
}

/// Trapezoid Fourier coefficient `(1/n) Σ e^{-2πi j x_i} f(x_i)`.
pub fn line_coefficient(samples: &[C64], j: i64) -> Result<C64> {
    let n = samples.len();
    if n < MIN_ORACLE_POINTS {
        return Err(Error::Resolution(format!(
            "{n} samples per period, need at least {MIN_ORACLE_POINTS}"
        )));
    }
    if n / 2 < j.unsigned_abs() as usize + NYQUIST_MARGIN {
        return Err(Error::Resolution(format!(
            "Nyquist order {} too low for |j| = {}",
            n / 2,
            j.abs()
        )));
    }
    let step = -2.0 * PI * j as f64 / n as f64;
    let sum: C64 = samples
        .iter()
        .enumerate()
        .map(|(i, v)| v * C64::from_polar(1.0, step * i as f64))
        .sum();
    Ok(sum / n as f64)
}

/// Direct numeric Fourier coefficient of a kernel along the line at `xi`.
pub fn b_numeric_oracle(
    j: i64,
    xi: f64,
    model: &dyn KernelModel,
    channel: Channel,
    n: usize,
) -> Result<C64> {
    let line = sample_line(model, xi, n)?;
    line_coefficient(&select_channel(&line, channel)?, j)
}

/// Picks `jmax` so the row's outer orders fall below [`TAIL_TOL`].
pub fn adaptive_row(
    build: impl Fn(usize) -> Result<CoefficientRow>,
    start: usize,
    limit: usize,
) -> Result<CoefficientRow> {
    let mut jmax = start.max(4);
    loop {
        let row = build(jmax)?;
        let edge = row.edge_magnitude();
        if edge < TAIL_TOL {
            return Ok(row);
        }
        if jmax >= limit {
            return Err(Error::CutoffTooSmall {
                cutoff: jmax,
                dropped: edge,
            });
        }
        jmax = (2 * jmax).min(limit);
    }
}

/// One (variant, absorption) slice of a coefficient table, `xi`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub variant: Variant,
    pub absorption: Absorption,
    pub rows: Vec<CoefficientRow>,
}

/// Dense coefficient tables over a ξ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TalbotCoefficientSet {
    pub grating: GratingParameters,
    pub xi: Vec<f64>,
    pub jmax: usize,
    pub tables: Vec<CoefficientTable>,
}

/// Uniform grid of `n` points on [0, 2).
pub fn default_xi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * i as f64 / n as f64).collect()
}

impl TalbotCoefficientSet {
    /// Closed-form tables for every requested (variant, absorption) pair.
    pub fn build(
        grating: &GratingParameters,
        xi: &[f64],
        jmax: usize,
        selections: &[(Variant, Absorption)],
    ) -> Result<Self> {
        let tables = selections
            .iter()
            .map(|&(variant, absorption)| {
                let rows = xi
                    .par_iter()
                    .map(|&x| b_row(x, absorption, grating, variant, jmax))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CoefficientTable {
                    variant,
                    absorption,
                    rows,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grating: *grating,
            xi: xi.to_vec(),
            jmax,
            tables,
        })
    }

    /// Tables from a sampled kernel model: one per channel plus the channel sum.
    pub fn from_kernel(
        model: &dyn KernelModel,
        grating: &GratingParameters,
        xi: &[f64],
        jmax: usize,
        n: usize,
    ) -> Result<Self> {
        let lines = xi
            .iter()
            .map(|&x| sample_line(model, x, n))
            .collect::<Result<Vec<_>>>()?;
        Self::from_lines(&lines, model.channels(), grating, xi, jmax)
    }

    /// Tables from every stored line of a pre-sampled kernel.
    pub fn from_sampled(
        kernel: &TwoPointKernel,
        grating: &GratingParameters,
        jmax: usize,
    ) -> Result<Self> {
        let lines: Vec<Vec<Vec<C64>>> = (0..kernel.xi.len())
            .map(|k| {
                (0..kernel.channels)
                    .map(|c| kernel.line(c, k).to_vec())
                    .collect()
            })
            .collect();
        Self::from_lines(&lines, kernel.channels, grating, &kernel.xi, jmax)
    }

    fn from_lines(
        lines: &[Vec<Vec<C64>>],
        ch: usize,
        grating: &GratingParameters,
        xi: &[f64],
        jmax: usize,
    ) -> Result<Self> {
        let mut per_channel: Vec<Vec<CoefficientRow>> = vec![Vec::new(); ch + 1];
        for line in lines {
            let mut channels: Vec<Vec<C64>> = line.clone();
            channels.push(select_channel(line, Channel::Sum)?);
            for (c, samples) in channels.iter().enumerate() {
                let values = (-(jmax as i64)..=jmax as i64)
                    .map(|j| line_coefficient(samples, j))
                    .collect::<Result<Vec<_>>>()?;
                per_channel[c].push(CoefficientRow { jmax, values });
            }
        }
        let tables = per_channel
            .into_iter()
            .enumerate()
            .map(|(c, rows)| CoefficientTable {
                variant: Variant::Quantum,
                absorption: if c == ch {
                    Absorption::Unconditional
                } else {
                    Absorption::Conditional(c as u32)
                },
                rows,
            })
            .collect();
        Ok(Self {
            grating: *grating,
            xi: xi.to_vec(),
            jmax,
            tables,
        })
    }

    pub fn table(&self, variant: Variant, absorption: Absorption) -> Option<&CoefficientTable> {
        self.tables
            .iter()
            .find(|t| t.variant == variant && t.absorption == absorption)
    }

    /// CSV rows `variant,ell,j,xi,re,im`.
    pub fn write_csv(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        writeln!(w, "variant,ell,j,xi,re,im")?;
        for t in &self.tables {
            for (x, row) in self.xi.iter().zip(&t.rows) {
                for j in -(self.jmax as i64)..=self.jmax as i64 {
                    let v = row.get(j);
                    writeln!(
                        w,
                        "{},{},{},{:.10},{:.12e},{:.12e}",
                        t.variant.name(),
                        t.absorption.label(),
                        j,
                        x,
                        v.re,
                        v.im
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Sum of conditional rows up to the ladder cutoff.
pub fn conditional_sum_row(
    xi: f64,
    grating: &GratingParameters,
    jmax: usize,
) -> Result<CoefficientRow> {
    let lmax = ladder_cutoff(grating);
    let mut values = vec![C64::new(0.0, 0.0); 2 * jmax + 1];
    for l in 0..=lmax as u32 {
        let row = b_conditional_row(xi, l, grating, jmax)?;
        for (a, v) in values.iter_mut().zip(&row.values) {
            *a += v;
        }
    }
    Ok(CoefficientRow { jmax, values })
}
