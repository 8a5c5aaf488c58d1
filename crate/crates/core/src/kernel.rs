//! Two-point grating kernels `K(x, x')` and their sampled form.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grating::{m_ell, MeasurementProfile};
use crate::params::GratingParameters;

/// A multiplicative grating kernel, possibly resolved into several channels.
///
/// Implementations must be invariant under `(x, x') -> (x - 1, x' + 1)`, so
/// that lines `x' - x = ξ` repeat with period 2 in `ξ`.
pub trait KernelModel: Send + Sync {
    fn channels(&self) -> usize;

    /// All channel values at the position pair `(x, x')`, units of the period.
    fn pair(&self, x: f64, xp: f64) -> Result<Vec<C64>>;

    fn describe(&self) -> String;
}

/// Which channel of a multi-channel kernel to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Index(usize),
    Sum,
}

impl KernelModel for MeasurementProfile {
    fn channels(&self) -> usize {
        1
    }

    fn pair(&self, x: f64, xp: f64) -> Result<Vec<C64>> {
        Ok(vec![m_ell(x, self) * m_ell(xp, self).conj()])
    }

    fn describe(&self) -> String {
        format!(
            "measurement operator ell={} phi0={} n0={}",
            self.ell, self.grating.phi0, self.grating.n0
        )
    }
}

/// Poisson ladder kernels `M_ℓ(x) M_ℓ(x')*` for `ℓ = 0..=ladder_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonKernel {
    pub grating: GratingParameters,
    pub ladder_max: usize,
}

impl KernelModel for PoissonKernel {
    fn channels(&self) -> usize {
        self.ladder_max + 1
    }

    fn pair(&self, x: f64, xp: f64) -> Result<Vec<C64>> {
        Ok((0..=self.ladder_max as u32)
            .map(|l| {
                let p = MeasurementProfile::new(self.grating, l);
                m_ell(x, &p) * m_ell(xp, &p).conj()
            })
            .collect())
    }

    fn describe(&self) -> String {
        format!(
            "poisson ladder phi0={} n0={} lmax={}",
            self.grating.phi0, self.grating.n0, self.ladder_max
        )
    }
}

/// Kernel identically equal to one.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityKernel;

impl KernelModel for IdentityKernel {
    fn channels(&self) -> usize {
        1
    }

    fn pair(&self, _x: f64, _xp: f64) -> Result<Vec<C64>> {
        Ok(vec![C64::new(1.0, 0.0)])
    }

    fn describe(&self) -> String {
        "identity".into()
    }
}

/// A kernel sampled along lines `(x - ξ/2, x + ξ/2)`, `x_i = i/n` over one
/// period, for each `ξ` in a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointKernel {
    pub label: String,
    pub points: usize,
    pub xi: Vec<f64>,
    pub channels: usize,
    /// Layout `[channel][xi][x]`.
    pub values: Vec<C64>,
}

impl TwoPointKernel {
    pub fn sample(model: &dyn KernelModel, xi: &[f64], points: usize) -> Result<Self> {
        if points == 0 || xi.is_empty() {
            return Err(Error::InvalidInput("empty kernel grid".into()));
        }
        let ch = model.channels();
        let nx = xi.len();
        let cells: Vec<Vec<C64>> = (0..nx * points)
            .into_par_iter()
            .map(|idx| {
                let (k, i) = (idx / points, idx % points);
                let x = i as f64 / points as f64;
                model.pair(x - 0.5 * xi[k], x + 0.5 * xi[k])
            })
            .collect::<Result<_>>()?;
        let mut values = vec![C64::new(0.0, 0.0); ch * nx * points];
        for (idx, cell) in cells.into_iter().enumerate() {
            for (c, v) in cell.into_iter().enumerate() {
                values[c * nx * points + idx] = v;
            }
        }
        Ok(Self {
            label: model.describe(),
            points,
            xi: xi.to_vec(),
            channels: ch,
            values,
        })
    }

    /// Lines `ξ_k = 2k/points`, `k = 0..points`, so that `x ± ξ/2` stay on a
    /// grid of spacing `1/points`.
    pub fn sample_period(model: &dyn KernelModel, points: usize) -> Result<Self> {
        let xi: Vec<f64> = (0..points)
            .map(|k| 2.0 * k as f64 / points as f64)
            .collect();
        Self::sample(model, &xi, points)
    }

    pub fn line(&self, channel: usize, k: usize) -> &[C64] {
        let nx = self.xi.len();
        let start = (channel * nx + k) * self.points;
        &self.values[start..start + self.points]
    }

    pub fn get(&self, channel: usize, k: usize, i: usize) -> C64 {
        self.line(channel, k)[i]
    }

    /// Index of the line at `-ξ_k` modulo 2, if present on the grid.
    fn mirror_index(&self, k: usize) -> Option<usize> {
        let target = (2.0 - self.xi[k]).rem_euclid(2.0);
        self.xi.iter().position(|&x| {
            let d = (x - target).rem_euclid(2.0);
            d.min(2.0 - d) < 1e-12
        })
    }

    /// Largest `|K(x, x') - conj K(x', x)|` over the grid.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.channels {
            for k in 0..self.xi.len() {
                let Some(m) = self.mirror_index(k) else {
                    continue;
                };
                let a = self.line(c, k);
                let b = self.line(c, m);
                for i in 0..self.points {
                    worst = worst.max((a[i] - b[i].conj()).norm());
                }
            }
        }
        worst
    }

    /// Largest `|Σ_c K_c(x, x) - 1|` on the diagonal line, if sampled.
    pub fn trace_defect(&self) -> Option<f64> {
        let k = self.xi.iter().position(|&x| x.abs() < 1e-15)?;
        let mut worst: f64 = 0.0;
        for i in 0..self.points {
            let s: C64 = (0..self.channels).map(|c| self.get(c, k, i)).sum();
            worst = worst.max((s - 1.0).norm());
        }
        Some(worst)
    }

    /// Smallest real part on the diagonal line over all channels.
    pub fn diagonal_minimum(&self) -> Option<f64> {
        let k = self.xi.iter().position(|&x| x.abs() < 1e-15)?;
        let mut lo = f64::INFINITY;
        for c in 0..self.channels {
            for v in self.line(c, k) {
                lo = lo.min(v.re);
            }
        }
        Some(lo)
    }

    /// Rows `channel,xi,x,re,im`.
    pub fn write_csv(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        writeln!(w, "# kernel: {}", self.label)?;
        writeln!(w, "channel,xi,x,re,im")?;
        for c in 0..self.channels {
            for (k, xi) in self.xi.iter().enumerate() {
                for (i, v) in self.line(c, k).iter().enumerate() {
                    writeln!(
                        w,
                        "{},{:.10},{:.10},{:.12e},{:.12e}",
                        c,
                        xi,
                        i as f64 / self.points as f64,
                        v.re,
                        v.im
                    )?;
                }
            }
        }
        Ok(())
    }
}

impl TwoPointKernel {
    /// Talbot coefficient from a stored line.
    pub fn coefficient(&self, channel: usize, k: usize, j: i64) -> Result<C64> {
        crate::talbot::line_coefficient(self.line(channel, k), j)
    }
}
