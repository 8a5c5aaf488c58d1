//! Coherently driven three-level absorber: ground `|0⟩`, excited `|1⟩` with
//! lifetime `τ`, and a dark state `|2⟩` fed by the excited-state decay.
//!
//! All times are in units of the interaction time `t_L`, so the drive is set by
//! the antinode pulse area `A = Ω₀ t_L`, the detuning by `Δ t_L` and the
//! lifetime by `τ / t_L`. The envelope is constant over `[0, 1]`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::master_equation_tolerances;
use crate::error::{Error, Result};
use crate::grating::MeasurementProfile;
use crate::kernel::{Channel, KernelModel, TwoPointKernel};
use crate::nearfield::{kdtli_signal, CoefficientSource, FringeSignal, KdtliConfig};
use crate::ode::{integrate, OdeOptions};
use crate::params::GratingParameters;

/// Largest `τ / t_L` accepted by the short-lifetime reduction.
pub const SHORT_LIFETIME_LIMIT: f64 = 1.0 / 50.0;

const DIM: usize = 9;

/// Three-level model inputs in units of `t_L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiConfig {
    /// `Ω₀ t_L`
    pub pulse_area: f64,
    /// `Δ t_L`
    pub detuning: f64,
    /// `τ / t_L`
    pub lifetime: f64,
    pub ode: OdeOptions,
}

impl RabiConfig {
    pub fn new(pulse_area: f64, detuning: f64, lifetime: f64) -> Result<Self> {
        Self {
            pulse_area,
            detuning,
            lifetime,
            ode: master_equation_tolerances(),
        }
        .validated()
    }

    /// From `Ω₀`, `Δ` (rad/s), `τ` and `t_L` (s).
    pub fn from_physical(omega0: f64, detuning: f64, lifetime: f64, t_l: f64) -> Result<Self> {
        if !(t_l.is_finite() && t_l > 0.0) {
            return Err(Error::InvalidInput(format!(
                "interaction time must be positive, got {t_l}"
            )));
        }
        Self::new(omega0 * t_l, detuning * t_l, lifetime / t_l)
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.lifetime.is_finite() && self.lifetime > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lifetime must be positive, got {}",
                self.lifetime
            )));
        }
        if !(self.pulse_area.is_finite() && self.detuning.is_finite()) {
            return Err(Error::InvalidInput(
                "pulse area and detuning must be finite".into(),
            ));
        }
        Ok(self)
    }

    /// Local Rabi frequency `Ω(x) t_L`.
    pub fn rabi_frequency(&self, x: f64) -> f64 {
        self.pulse_area * (PI * x).cos()
    }

    /// `Ω_R(x) t_L = sqrt(Δ² + Ω(x)²) t_L`.
    pub fn generalized_rabi_frequency(&self, x: f64) -> f64 {
        self.detuning.hypot(self.rabi_frequency(x))
    }

    fn hamiltonian(&self, x: f64) -> [[f64; 3]; 3] {
        let half = 0.5 * self.rabi_frequency(x);
        [
            [0.0, half, 0.0],
            [half, -self.detuning, 0.0],
            [0.0, 0.0, 0.0],
        ]
    }
}

/// Generator `G` of `d vec(ρ)/dt = G vec(ρ)` for the pair `(x, x')`, with
/// `vec(ρ)[3n + n'] = ρ_{nn'}`.
pub fn generator(config: &RabiConfig, x: f64, xp: f64) -> [[C64; DIM]; DIM] {
    let h = config.hamiltonian(x);
    let hp = config.hamiltonian(xp);
    let gamma = 1.0 / config.lifetime;
    let mut g = [[C64::new(0.0, 0.0); DIM]; DIM];
    for n in 0..3 {
        for np in 0..3 {
            let row = 3 * n + np;
            for k in 0..3 {
                g[row][3 * k + np] += C64::new(0.0, -h[n][k]);
                g[row][3 * n + k] += C64::new(0.0, hp[k][np]);
            }
            let loss = 0.5 * gamma * ((n == 1) as u8 + (np == 1) as u8) as f64;
            g[row][row] -= loss;
        }
    }
    g[8][4] += gamma;
    g
}

fn ground_state() -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); DIM];
    y[0] = C64::new(1.0, 0.0);
    y
}

/// Integrates the nine two-point density-matrix elements over the interaction.
pub fn rabi_pair(config: &RabiConfig, x: f64, xp: f64) -> Result<Vec<C64>> {
    rabi_pair_observed(config, x, xp, |_, _| {})
}

fn rabi_pair_observed(
    config: &RabiConfig,
    x: f64,
    xp: f64,
    observe: impl FnMut(f64, &[C64]),
) -> Result<Vec<C64>> {
    let g = generator(config, x, xp);
    let rhs = |_t: f64, y: &[C64], dy: &mut [C64]| {
        for (row, d) in g.iter().zip(dy.iter_mut()) {
            *d = row.iter().zip(y).map(|(a, b)| a * b).sum();
        }
    };
    integrate(rhs, 0.0, 1.0, &ground_state(), &config.ode, observe).map_err(|e| Error::Integrator {
        x,
        xp,
        reason: e.to_string(),
    })
}

/// Same elements from the matrix exponential of the constant generator.
pub fn rabi_pair_exponential(config: &RabiConfig, x: f64, xp: f64) -> Vec<C64> {
    let g = generator(config, x, xp);
    let m = DMatrix::from_fn(DIM, DIM, |i, j| g[i][j]).exp();
    m.column(0).iter().copied().collect()
}

/// Populations `(p₀, p₁, p₂)` at the end of the interaction.
pub fn populations(config: &RabiConfig, x: f64) -> Result<[f64; 3]> {
    let y = rabi_pair(config, x, x)?;
    Ok([y[0].re, y[4].re, y[8].re])
}

/// Populations after every accepted integrator step, `(t, [p₀, p₁, p₂])`.
pub fn population_trajectory(config: &RabiConfig, x: f64) -> Result<Vec<(f64, [f64; 3])>> {
    let mut out = Vec::new();
    rabi_pair_observed(config, x, x, |t, y| {
        out.push((t, [y[0].re, y[4].re, y[8].re]))
    })?;
    Ok(out)
}

/// How the ground-state kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RabiMethod {
    Ode,
    Exponential,
}

/// Ground-state two-point kernel `ρ₀₀(x, x')` as a single-channel kernel model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiGround {
    pub config: RabiConfig,
    pub method: RabiMethod,
}

impl RabiGround {
    pub fn new(config: RabiConfig) -> Self {
        Self {
            config,
            method: RabiMethod::Ode,
        }
    }
}

impl KernelModel for RabiGround {
    fn channels(&self) -> usize {
        1
    }

    fn pair(&self, x: f64, xp: f64) -> Result<Vec<C64>> {
        let y = match self.method {
            RabiMethod::Ode => rabi_pair(&self.config, x, xp)?,
            RabiMethod::Exponential => rabi_pair_exponential(&self.config, x, xp),
        };
        Ok(vec![y[0]])
    }

    fn describe(&self) -> String {
        let c = &self.config;
        format!(
            "rabi pulse_area={} detuning={} lifetime={}",
            c.pulse_area, c.detuning, c.lifetime
        )
    }
}

/// Ground-state kernel on selected lines plus the diagonal populations.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiKernel {
    pub kernel: TwoPointKernel,
    pub positions: Vec<f64>,
    /// `[p₀, p₁, p₂]` per position.
    pub populations: Vec<[f64; 3]>,
}

/// Solves the three-level model on the lines `xi` with `points` samples each.
pub fn rabi_solve(config: &RabiConfig, xi: &[f64], points: usize) -> Result<RabiKernel> {
    let kernel = TwoPointKernel::sample(&RabiGround::new(*config), xi, points)?;
    let positions: Vec<f64> = (0..points).map(|i| i as f64 / points as f64).collect();
    let populations = positions
        .par_iter()
        .map(|&x| populations(config, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(RabiKernel {
        kernel,
        positions,
        populations,
    })
}

/// Effective phase and absorption parameters of the short-lifetime reduction.
pub fn mapped_parameters(config: &RabiConfig) -> GratingParameters {
    let (a, d, tau) = (config.pulse_area, config.detuning, config.lifetime);
    let denom = 1.0 + 4.0 * d * d * tau * tau;
    GratingParameters {
        phi0: -d * tau * tau * a * a / denom,
        n0: tau * a * a / denom,
        eta_p: 1.0,
        eta_a: 1.0,
        period: 1.0,
    }
}

/// Zero-absorption measurement kernel equivalent to a short-lived excited state.
pub fn rabi_short_lifetime_limit(config: &RabiConfig) -> Result<MeasurementProfile> {
    if config.lifetime > SHORT_LIFETIME_LIMIT {
        return Err(Error::Regime(format!(
            "short-lifetime reduction needs tau/t_L <= {SHORT_LIFETIME_LIMIT}, got {}",
            config.lifetime
        )));
    }
    Ok(MeasurementProfile::new(mapped_parameters(config), 0))
}

/// Least-squares `(φ₀, n₀)` from `ln K = -n₀ (c² + c'²)/2 + i φ₀ (c² - c'²)`.
pub fn fit_grating_parameters(kernel: &TwoPointKernel) -> Result<GratingParameters> {
    let (mut ss, mut sr, mut dd, mut di) = (0.0, 0.0, 0.0, 0.0);
    for (k, xi) in kernel.xi.iter().enumerate() {
        for (i, v) in kernel.line(0, k).iter().enumerate() {
            let x = i as f64 / kernel.points as f64;
            let c = (PI * (x - 0.5 * xi)).cos().powi(2);
            let cp = (PI * (x + 0.5 * xi)).cos().powi(2);
            if v.norm() == 0.0 {
                return Err(Error::Domain("kernel vanishes, logarithm undefined".into()));
            }
            let ln = v.ln();
            let (s, d) = (0.5 * (c + cp), c - cp);
            ss += s * s;
            sr += s * ln.re;
            dd += d * d;
            di += d * ln.im;
        }
    }
    if ss == 0.0 {
        return Err(Error::Degenerate(
            "no absorption lever arm on the sampled lines".into(),
        ));
    }
    Ok(GratingParameters {
        phi0: if dd > 0.0 { di / dd } else { 0.0 },
        n0: -sr / ss,
        eta_p: 1.0,
        eta_a: 1.0,
        period: 1.0,
    })
}

/// Ground-state transmission `p₀(x)` at `x_i = i/points`.
pub fn rabi_transmission_profile(config: &RabiConfig, points: usize) -> Result<Vec<(f64, f64)>> {
    (0..points)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / points as f64;
            Ok((x, populations(config, x)?[0]))
        })
        .collect()
}

/// Near-field fringe signal of ground-state molecules.
pub fn rabi_kdtli(config: &RabiConfig, kdtli: &KdtliConfig) -> Result<FringeSignal> {
    let source = CoefficientSource::kernel(Arc::new(RabiGround::new(*config)), Channel::Index(0));
    kdtli_signal(&kdtli.clone().with_source(source))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_drive_is_identity() {
        let c = RabiConfig::new(0.0, 0.0, 1.0).unwrap();
        let y = rabi_pair(&c, 0.2, 0.7).unwrap();
        assert!((y[0] - 1.0).norm() < 1e-15);
        assert!(y[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn node_is_untouched() {
        let c = RabiConfig::new(4.0 * PI, 0.3, 1.0).unwrap();
        let p = populations(&c, 0.5).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ode_matches_exponential() {
        let c = RabiConfig::new(4.0 * PI, 2.0, 0.7).unwrap();
        let a = rabi_pair(&c, 0.1, 0.45).unwrap();
        let b = rabi_pair_exponential(&c, 0.1, 0.45);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-8, "{u} vs {v}");
        }
    }

    #[test]
    fn resonant_mapping() {
        let c = RabiConfig::new(10.0, 0.0, 0.01).unwrap();
        let g = mapped_parameters(&c);
        assert_eq!(g.phi0, 0.0);
        assert!((g.n0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn long_lifetime_is_rejected_by_reduction() {
        let c = RabiConfig::new(10.0, 0.0, 0.1).unwrap();
        assert!(matches!(
            rabi_short_lifetime_limit(&c),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn rejects_bad_lifetime() {
        assert!(RabiConfig::new(1.0, 0.0, 0.0).is_err());
        assert!(RabiConfig::new(1.0, 0.0, f64::NAN).is_err());
    }
}
