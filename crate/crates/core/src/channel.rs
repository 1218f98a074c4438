//! Link physics: free-space loss with molecular absorption, LoS probability,
//! thermal noise, vibration draws and received power.

use crate::antenna::PatternEvaluator;
use crate::error::{domain, ensure_finite, Error, Result};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosMode {
    /// Inter-cell terms weighted by the LoS probability.
    Expected,
    /// One LoS/NLoS coin flip per interfering UAV per draw; NLoS paths are dropped.
    Bernoulli,
}

/// Named (α, β) pairs for the elevation-based LoS model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosEnvironment {
    Suburban,
    Urban,
    DenseUrban,
    HighriseUrban,
}

impl LosEnvironment {
    pub fn alpha_beta(self) -> (f64, f64) {
        match self {
            Self::Suburban => (4.88, 0.43),
            Self::Urban => (9.61, 0.16),
            Self::DenseUrban => (12.08, 0.11),
            Self::HighriseUrban => (27.23, 0.08),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    pub tx_power_w: f64,
    /// Molecular absorption coefficient K(f) applied to power as `exp(-K L)`.
    pub absorption_per_m: f64,
    pub bandwidth_hz: f64,
    pub temperature_k: f64,
    pub noise_figure_db: f64,
    pub los_alpha: f64,
    pub los_beta: f64,
    pub los_mode: LosMode,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_hz: 95e9,
            tx_power_w: 0.01,
            absorption_per_m: 0.0,
            bandwidth_hz: 3e9,
            temperature_k: 293.15,
            noise_figure_db: 0.0,
            los_alpha: 9.61,
            los_beta: 0.16,
            los_mode: LosMode::Expected,
        }
    }
}

impl ChannelParams {
    pub fn with_environment(mut self, env: LosEnvironment) -> Self {
        (self.los_alpha, self.los_beta) = env.alpha_beta();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("carrier", self.carrier_hz),
            ("tx power", self.tx_power_w),
            ("bandwidth", self.bandwidth_hz),
            ("temperature", self.temperature_k),
            ("LoS alpha", self.los_alpha),
            ("LoS beta", self.los_beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name} must be positive"));
            }
        }
        if !(self.absorption_per_m.is_finite() && self.absorption_per_m >= 0.0) {
            errs.push("absorption must be non-negative".into());
        }
        if !(self.noise_figure_db.is_finite() && self.noise_figure_db >= 0.0) {
            errs.push("noise figure must be non-negative".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }
}

/// Power gain `|h_L|² = (λ/(4πL))² · exp(-K L)`.
pub fn path_loss(p: &ChannelParams, length: f64) -> Result<f64> {
    ensure_finite("path_loss", "length", length)?;
    if length <= 0.0 {
        return Err(domain(
            "path_loss",
            format!("length must be positive, got {length}"),
        ));
    }
    let fs = p.wavelength() / (4.0 * PI * length);
    Ok(fs * fs * (-p.absorption_per_m * length).exp())
}

/// LoS probability at an elevation angle in `[0, π/2]`.
pub fn los_probability(p: &ChannelParams, elevation: f64) -> f64 {
    let deg = elevation.clamp(0.0, FRAC_PI_2).to_degrees();
    1.0 / (1.0 + p.los_alpha * (-p.los_beta * (deg - p.los_alpha)).exp())
}

/// Thermal noise `k_B T B · 10^{NF/10}` in watts.
pub fn noise_power(p: &ChannelParams) -> f64 {
    BOLTZMANN * p.temperature_k * p.bandwidth_hz * 10f64.powf(p.noise_figure_db / 10.0)
}

/// Per-axis standard deviations of UAV orientation jitter, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VibrationModel {
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl VibrationModel {
    pub fn isotropic(sigma: f64) -> Self {
        Self {
            sigma_x: sigma,
            sigma_y: sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_x.is_finite()
            && self.sigma_y.is_finite()
            && self.sigma_x >= 0.0
            && self.sigma_y >= 0.0
        {
            Ok(())
        } else {
            Err(Error::Config(
                "vibration sigmas must be finite and non-negative".into(),
            ))
        }
    }
}

/// Orientation error of one UAV for one draw.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VibrationDraw {
    pub theta_x: f64,
    pub theta_y: f64,
}

/// A standard normal pair by Box–Muller from two raw 64-bit words.
#[inline]
pub fn normal_pair(a: u64, b: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((a >> 11) + 1) as f64 * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

pub fn draw_vibration<R: RngCore + ?Sized>(v: &VibrationModel, rng: &mut R) -> VibrationDraw {
    let (z1, z2) = normal_pair(rng.next_u64(), rng.next_u64());
    VibrationDraw {
        theta_x: v.sigma_x * z1,
        theta_y: v.sigma_y * z2,
    }
}

/// Received power on a link of slant length `length` whose UAV beam is
/// tilted by `draw`; the SBS side is on boresight.
pub fn received_power(
    p: &ChannelParams,
    length: f64,
    uav: &PatternEvaluator,
    sbs: &PatternEvaluator,
    draw: VibrationDraw,
) -> Result<f64> {
    ensure_finite("received_power", "theta_x", draw.theta_x)?;
    ensure_finite("received_power", "theta_y", draw.theta_y)?;
    let g = if draw.theta_x.abs() >= FRAC_PI_2 || draw.theta_y.abs() >= FRAC_PI_2 {
        uav.gain(FRAC_PI_2, draw.theta_y.atan2(draw.theta_x))?
    } else {
        let (tx, ty) = (draw.theta_x.tan(), draw.theta_y.tan());
        let theta = tx.hypot(ty).atan();
        uav.gain(theta, ty.atan2(tx))?
    };
    Ok(p.tx_power_w * path_loss(p, length)? * sbs.boresight_gain() * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::{ArrayConfig, ElementPattern};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn free_space_reference() {
        let p = ChannelParams::default();
        let lambda = 299_792_458.0 / 95e9;
        let want = (lambda / (4.0 * PI * 100.0)).powi(2);
        assert!((path_loss(&p, 100.0).unwrap() / want - 1.0).abs() < 1e-14);
        assert!((path_loss(&p, lambda / (4.0 * PI)).unwrap() - 1.0).abs() < 1e-14);
        let ratio = path_loss(&p, 50.0).unwrap() / path_loss(&p, 100.0).unwrap();
        assert!((10.0 * ratio.log10() - 6.020_599_913_279_624).abs() < 1e-12);
        assert!(path_loss(&p, 0.0).is_err());
        assert!(path_loss(&p, -1.0).is_err());
    }

    #[test]
    fn absorption_is_exponential_in_power() {
        let p = ChannelParams {
            absorption_per_m: 1e-3,
            ..Default::default()
        };
        let q = ChannelParams::default();
        let r = path_loss(&p, 300.0).unwrap() / path_loss(&q, 300.0).unwrap();
        assert!((r - (-0.3f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn los_reference() {
        let p = ChannelParams::default();
        let want = 1.0 / (1.0 + 9.61 * (-0.16f64 * (90.0 - 9.61)).exp());
        assert!((los_probability(&p, FRAC_PI_2) - want).abs() < 1e-15);
        assert!((1.0 - want) < 1e-4);
        assert!((los_probability(&p, 9.61f64.to_radians()) - 1.0 / 10.61).abs() < 1e-15);
        assert!(los_probability(&p, 80f64.to_radians()) > los_probability(&p, 20f64.to_radians()));
        let floor = 1.0 / (1.0 + 9.61 * (9.61f64 * 0.16).exp());
        assert!((los_probability(&p, 0.0) - floor).abs() < 1e-15);
    }

    #[test]
    fn noise_reference() {
        let p = ChannelParams::default();
        let n = noise_power(&p);
        assert!((n - 1.380_649e-23 * 293.15 * 3e9).abs() < 1e-25);
        assert!((10.0 * (n / 1e-3).log10() + 79.2).abs() < 0.05);
        let nf = noise_power(&ChannelParams {
            noise_figure_db: 3.0,
            ..p
        });
        assert!((nf / n - 10f64.powf(0.3)).abs() < 1e-12);
        let wide = noise_power(&ChannelParams {
            bandwidth_hz: 3e10,
            ..p
        });
        assert!((10.0 * (wide / n).log10() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn vibration_statistics() {
        let v = VibrationModel::isotropic(1f64.to_radians());
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 1_000_000;
        let (mut sx, mut sxx, mut sy, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let d = draw_vibration(&v, &mut rng);
            sx += d.theta_x;
            sxx += d.theta_x * d.theta_x;
            sy += d.theta_y;
            syy += d.theta_y * d.theta_y;
            sxy += d.theta_x * d.theta_y;
        }
        let nf = n as f64;
        let (mx, my) = (sx / nf, sy / nf);
        let (vx, vy) = (sxx / nf - mx * mx, syy / nf - my * my);
        let sigma = 1f64.to_radians();
        assert!((vx.sqrt() / sigma - 1.0).abs() < 0.005);
        assert!((vy.sqrt() / sigma - 1.0).abs() < 0.005);
        assert!(mx.abs() < 3.0 * sigma / nf.sqrt());
        assert!(my.abs() < 3.0 * sigma / nf.sqrt());
        let corr = (sxy / nf - mx * my) / (vx * vy).sqrt();
        assert!(corr.abs() < 0.01);

        let zero = VibrationModel::isotropic(0.0);
        let d = draw_vibration(&zero, &mut rng);
        assert_eq!((d.theta_x, d.theta_y), (0.0, 0.0));
    }

    #[test]
    fn vibration_reproducible() {
        let v = VibrationModel::isotropic(0.02);
        let a: Vec<_> = {
            let mut r = ChaCha8Rng::seed_from_u64(5);
            (0..100).map(|_| draw_vibration(&v, &mut r)).collect()
        };
        let mut r = ChaCha8Rng::seed_from_u64(5);
        for d in a {
            assert_eq!(d, draw_vibration(&v, &mut r));
        }
    }

    fn evals(nu: usize) -> (PatternEvaluator, PatternEvaluator) {
        let u =
            PatternEvaluator::new(ArrayConfig::half_wave(nu, ElementPattern::isotropic())).unwrap();
        let s =
            PatternEvaluator::new(ArrayConfig::half_wave(15, ElementPattern::isotropic())).unwrap();
        (u, s)
    }

    #[test]
    fn received_power_compositions() {
        let p = ChannelParams::default();
        let (u, s) = evals(15);
        let ideal = p.tx_power_w * path_loss(&p, 150.0).unwrap() * u.g0() * s.g0();
        let r0 = received_power(&p, 150.0, &u, &s, VibrationDraw::default()).unwrap();
        assert!((r0 / ideal - 1.0).abs() < 1e-12);
        let d = VibrationDraw {
            theta_x: 1f64.to_radians(),
            theta_y: 0.0,
        };
        let want = p.tx_power_w
            * path_loss(&p, 150.0).unwrap()
            * s.g0()
            * u.gain(1f64.to_radians(), 0.0).unwrap();
        assert!((received_power(&p, 150.0, &u, &s, d).unwrap() / want - 1.0).abs() < 1e-12);
        let (u5, _) = evals(5);
        let (u25, _) = evals(25);
        let z = VibrationDraw::default();
        assert!(
            received_power(&p, 150.0, &u25, &s, z).unwrap()
                > received_power(&p, 150.0, &u5, &s, z).unwrap()
        );
    }

    proptest! {
        #[test]
        fn received_power_never_exceeds_ideal(tx in -0.2f64..0.2, ty in -0.2f64..0.2, l in 10.0f64..2000.0) {
            let p = ChannelParams::default();
            let (u, s) = evals(10);
            let ideal = received_power(&p, l, &u, &s, VibrationDraw::default()).unwrap();
            let r = received_power(&p, l, &u, &s, VibrationDraw { theta_x: tx, theta_y: ty }).unwrap();
            prop_assert!(r <= ideal * (1.0 + 1e-12));
        }

        #[test]
        fn path_loss_decreasing(l in 1.0f64..1e4, dl in 1e-3f64..100.0, k in 0.0f64..1e-2) {
            let p = ChannelParams { absorption_per_m: k, ..Default::default() };
            prop_assert!(path_loss(&p, l + dl).unwrap() < path_loss(&p, l).unwrap());
        }

        #[test]
        fn los_increasing(e in 0.0f64..1.5, de in 1e-3f64..0.05) {
            for env in [LosEnvironment::Suburban, LosEnvironment::Urban, LosEnvironment::DenseUrban, LosEnvironment::HighriseUrban] {
                let p = ChannelParams::default().with_environment(env);
                prop_assert!(los_probability(&p, e + de) > los_probability(&p, e));
            }
        }
    }
}
