//! Photon-absorption ladder: a Lindblad master equation whose internally
//! diagonal blocks `ρ_ℓℓ(x, x')` form a closed chain of linear ODEs per
//! position pair.
//!
//! Time is measured in units of the interaction time `t_L`. The rate envelope
//! `g(τ)` is normalized to `∫ g dτ = 1`, so that the time-integrated phase and
//! absorption number equal `φ₀` and `n₀`. Internal energies only add an
//! ℓ-dependent global phase to the off-diagonal internal blocks and are omitted.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grating::{ln_factorial, m_ell, poisson_cutoff, MeasurementProfile, LADDER_TAIL_TOL};
use crate::kernel::{KernelModel, TwoPointKernel};
use crate::ode::{integrate, OdeOptions};
use crate::params::GratingParameters;
use crate::quad::GaussLegendre;
use crate::specfun::hyp1f1_ladder;
use crate::talbot::TalbotCoefficientSet;

/// Half-width of the integration window for the Gaussian envelope.
pub const GAUSSIAN_WINDOW: f64 = 4.0;

/// Temporal profile of the light intensity seen by the particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    /// `g(τ) = exp(-π τ²)` on `[-4, 4]`.
    Gaussian,
    /// `g(τ) = 1` on `[0, 1]`.
    Constant,
}

impl Envelope {
    pub fn value(&self, tau: f64) -> f64 {
        match self {
            Envelope::Gaussian => (-PI * tau * tau).exp(),
            Envelope::Constant => 1.0,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        match self {
            Envelope::Gaussian => (-GAUSSIAN_WINDOW, GAUSSIAN_WINDOW),
            Envelope::Constant => (0.0, 1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Envelope::Gaussian => "gaussian",
            Envelope::Constant => "constant",
        }
    }
}

/// Integrator settings used by the master-equation solvers.
pub fn master_equation_tolerances() -> OdeOptions {
    OdeOptions {
        rtol: 1e-9,
        atol: 1e-12,
        ..OdeOptions::default()
    }
}

/// Ladder model inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderConfig {
    pub grating: GratingParameters,
    pub envelope: Envelope,
    /// Highest ladder level kept; it has no outgoing absorption.
    pub ladder_max: usize,
    pub ode: OdeOptions,
}

impl LadderConfig {
    /// Ladder cut where the Poisson tail at the effective rate `n₀ max(1, η_a)`
    /// drops below the global truncation tolerance.
    pub fn new(grating: GratingParameters, envelope: Envelope) -> Result<Self> {
        let grating = grating.validated()?;
        let n_eff = grating.n0 * grating.eta_a.max(1.0);
        Ok(Self {
            grating,
            envelope,
            ladder_max: poisson_cutoff(n_eff, LADDER_TAIL_TOL).max(1),
            ode: master_equation_tolerances(),
        })
    }

    pub fn with_ladder_max(mut self, ladder_max: usize) -> Self {
        self.ladder_max = ladder_max;
        self
    }
}

/// Site factors entering the master equation for a pair `(x, x')`.
#[derive(Debug, Clone, Copy)]
struct PairGeometry {
    /// `cos²(πx) - cos²(πx')`
    diff: f64,
    /// `(cos²(πx) + cos²(πx'))/2`
    mean: f64,
    /// `cos(πx) cos(πx')`
    cross: f64,
}

impl PairGeometry {
    fn new(x: f64, xp: f64) -> Self {
        let c = (PI * x).cos();
        let cp = (PI * xp).cos();
        Self {
            diff: c * c - cp * cp,
            mean: 0.5 * (c * c + cp * cp),
            cross: c * cp,
        }
    }
}

/// Integrates the ladder chain for one position pair.
pub fn ladder_pair(config: &LadderConfig, x: f64, xp: f64) -> Result<Vec<C64>> {
    let g = &config.grating;
    let geo = PairGeometry::new(x, xp);
    let top = config.ladder_max;
    let ground = C64::new(-g.n0 * geo.mean, g.phi0 * geo.diff);
    let excited = C64::new(-g.eta_a * g.n0 * geo.mean, g.eta_p * g.phi0 * geo.diff);
    let excited_top = C64::new(0.0, g.eta_p * g.phi0 * geo.diff);
    let feed0 = g.n0 * geo.cross;
    let feed = g.eta_a * g.n0 * geo.cross;
    let env = config.envelope;
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let s = env.value(t);
        dy[0] = s * ground * y[0];
        for l in 1..=top {
            let own = if l == top { excited_top } else { excited };
            let f = if l == 1 { feed0 } else { feed };
            dy[l] = s * (own * y[l] + f * y[l - 1]);
        }
    };
    let mut y0 = vec![C64::new(0.0, 0.0); top + 1];
    y0[0] = C64::new(1.0, 0.0);
    let (t0, t1) = env.window();
    integrate(rhs, t0, t1, &y0, &config.ode, |_, _| {}).map_err(|e| Error::Integrator {
        x,
        xp,
        reason: e.to_string(),
    })
}

/// Ladder kernel from direct integration of the master equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderOde {
    pub config: LadderConfig,
}

impl KernelModel for LadderOde {
    fn channels(&self) -> usize {
        self.config.ladder_max + 1
    }

    fn pair(&self, x: f64, xp: f64) -> Result<Vec<C64>> {
        ladder_pair(&self.config, x, xp)
    }

    fn describe(&self) -> String {
        let g = &self.config.grating;
        format!(
            "ladder ode envelope={} phi0={} n0={} eta_p={} eta_a={} lmax={}",
            self.config.envelope.name(),
            g.phi0,
            g.n0,
            g.eta_p,
            g.eta_a,
            self.config.ladder_max
        )
    }
}

/// Closed-form ladder kernel with the excited-state ratios entering through
/// `1F1(ℓ; ℓ+1; z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderAnalytic {
    pub grating: GratingParameters,
    pub ladder_max: usize,
}

impl LadderAnalytic {
    pub fn new(config: &LadderConfig) -> Result<Self> {
        if config.envelope != Envelope::Constant && !config.grating.is_uniform() {
            return Err(Error::InvalidInput(
                "the 1F1 closed form needs a constant envelope when eta != 1".into(),
            ));
        }
        Ok(Self {
            grating: config.grating,
            ladder_max: config.ladder_max,
        })
    }
}

/// `z(x, x') = i(η_p - 1)[φ(x) - φ(x')] - (η_a - 1)[n(x) + n(x')]/2`.
pub fn hyp_argument(grating: &GratingParameters, x: f64, xp: f64) -> C64 {
    let geo = PairGeometry::new(x, xp);
    C64::new(
        -(grating.eta_a - 1.0) * grating.n0 * geo.mean,
        (grating.eta_p - 1.0) * grating.phi0 * geo.diff,
    )
}

impl KernelModel for LadderAnalytic {
    fn channels(&self) -> usize {
        self.ladder_max + 1
    }

    fn pair(&self, x: f64, xp: f64) -> Result<Vec<C64>> {
        let g = &self.grating;
        let z = hyp_argument(g, x, xp);
        (0..=self.ladder_max as u32)
            .map(|l| {
                let p = MeasurementProfile::new(*g, l);
                let base = m_ell(x, &p) * m_ell(xp, &p).conj();
                if l == 0 {
                    Ok(base)
                } else {
                    Ok(base * g.eta_a.powi(l as i32 - 1) * hyp1f1_ladder(l, z)?)
                }
            })
            .collect()
    }

    fn describe(&self) -> String {
        let g = &self.grating;
        format!(
            "ladder 1F1 phi0={} n0={} eta_p={} eta_a={} lmax={}",
            g.phi0, g.n0, g.eta_p, g.eta_a, self.ladder_max
        )
    }
}

/// Generalized measurement operator for a first absorption at `τ₁` (units of `t_L`).
pub fn first_absorption_operator(grating: &GratingParameters, ell: u32, tau1: f64, x: f64) -> C64 {
    if ell == 0 {
        return m_ell(x, &MeasurementProfile::new(*grating, 0));
    }
    let g = grating;
    let c = (PI * x).cos();
    let c2 = c * c;
    let rest = 1.0 - tau1;
    let amp2_ln =
        (ell as f64 - 1.0) * (g.eta_a * rest).ln() + ell as f64 * g.n0.ln() - ln_factorial(ell - 1);
    let amp = if g.n0 == 0.0 || (ell > 1 && g.eta_a * rest == 0.0) {
        0.0
    } else {
        (0.5 * amp2_ln).exp()
    };
    let before = C64::new(-0.5 * g.n0 * c2, g.phi0 * c2) * tau1;
    let after = C64::new(-0.5 * g.eta_a * g.n0 * c2, g.eta_p * g.phi0 * c2) * rest;
    amp * c.powi(ell as i32) * (before + after).exp()
}

/// `∫₀¹ dτ₁ M̃_ℓ(τ₁; x) M̃_ℓ(τ₁; x')*` by composite Gauss-Legendre quadrature.
pub fn t1_integral_kernel(
    grating: &GratingParameters,
    ell: u32,
    x: f64,
    xp: f64,
    panels: usize,
) -> C64 {
    if ell == 0 {
        let p = MeasurementProfile::new(*grating, 0);
        return m_ell(x, &p) * m_ell(xp, &p).conj();
    }
    let rule = GaussLegendre::new(20);
    let width = 1.0 / panels.max(1) as f64;
    rule.composite(&[0.0, 1.0], width)
        .into_iter()
        .map(|(t, w)| {
            w * first_absorption_operator(grating, ell, t, x)
                * first_absorption_operator(grating, ell, t, xp).conj()
        })
        .sum()
}

/// Ladder kernel through the first-absorption-time representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderFirstAbsorption {
    pub grating: GratingParameters,
    pub ladder_max: usize,
    pub panels: usize,
}

impl KernelModel for LadderFirstAbsorption {
    fn channels(&self) -> usize {
        self.ladder_max + 1
    }

    fn pair(&self, x: f64, xp: f64) -> Result<Vec<C64>> {
        Ok((0..=self.ladder_max as u32)
            .map(|l| t1_integral_kernel(&self.grating, l, x, xp, self.panels))
            .collect())
    }

    fn describe(&self) -> String {
        format!("ladder first-absorption integral lmax={}", self.ladder_max)
    }
}

/// Samples the ODE ladder kernel on `points` lines per period.
pub fn ladder_ode_solve(config: &LadderConfig, points: usize) -> Result<TwoPointKernel> {
    TwoPointKernel::sample_period(&LadderOde { config: *config }, points)
}

/// Samples the closed-form ladder kernel on `points` lines per period.
pub fn ladder_analytic(config: &LadderConfig, points: usize) -> Result<TwoPointKernel> {
    TwoPointKernel::sample_period(&LadderAnalytic::new(config)?, points)
}

/// Talbot coefficients of every stored line of a sampled kernel.
pub fn kernel_to_talbot(
    kernel: &TwoPointKernel,
    grating: &GratingParameters,
    jmax: usize,
) -> Result<TalbotCoefficientSet> {
    TalbotCoefficientSet::from_sampled(kernel, grating, jmax)
}
