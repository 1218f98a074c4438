//! Uniform planar array patterns: array factor, element pattern, directivity
//! normalization and the multi-lobe Gaussian approximation.

use crate::error::{domain, ensure_finite, Error, Result};
use crate::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// Radiation pattern of a single array element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementMode {
    Isotropic,
    /// 3GPP TR 38.901 directional element.
    ThreeGpp,
}

/// Element pattern parameters. Beamwidths are half-power widths in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPattern {
    pub mode: ElementMode,
    pub g_max_dbi: f64,
    pub theta_3db: f64,
    pub phi_3db: f64,
    pub sidelobe_limit_db: f64,
    pub front_back_db: f64,
}

impl ElementPattern {
    pub fn isotropic() -> Self {
        Self {
            mode: ElementMode::Isotropic,
            ..Self::three_gpp()
        }
    }

    pub fn three_gpp() -> Self {
        Self {
            mode: ElementMode::ThreeGpp,
            g_max_dbi: 8.0,
            theta_3db: 65f64.to_radians(),
            phi_3db: 65f64.to_radians(),
            sidelobe_limit_db: 30.0,
            front_back_db: 30.0,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g_max_dbi", self.g_max_dbi),
            ("theta_3db", self.theta_3db),
            ("phi_3db", self.phi_3db),
            ("sidelobe_limit_db", self.sidelobe_limit_db),
            ("front_back_db", self.front_back_db),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("element.{name} must be finite")));
            }
        }
        if self.theta_3db <= 0.0 || self.phi_3db <= 0.0 {
            return Err(Error::Config("element beamwidths must be positive".into()));
        }
        if self.sidelobe_limit_db < 0.0 || self.front_back_db < 0.0 {
            return Err(Error::Config(
                "element attenuation limits must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Attenuation below the element peak in dB for a unit direction given by
    /// its polar angle from boresight and azimuth in the array plane.
    #[inline]
    fn attenuation_db(&self, sin_t: f64, cos_t: f64, cos_p: f64, sin_p: f64) -> f64 {
        let v = (sin_t * sin_p).clamp(-1.0, 1.0).asin();
        let h = (sin_t * cos_p).atan2(cos_t);
        let av = (12.0 * (v / self.theta_3db).powi(2)).min(self.sidelobe_limit_db);
        let ah = (12.0 * (h / self.phi_3db).powi(2)).min(self.front_back_db);
        (av + ah).min(self.front_back_db)
    }

    #[inline]
    fn relative_gain(&self, sin_t: f64, cos_t: f64, cos_p: f64, sin_p: f64) -> f64 {
        match self.mode {
            ElementMode::Isotropic => 1.0,
            ElementMode::ThreeGpp => (-self.attenuation_db(sin_t, cos_t, cos_p, sin_p)
                * (std::f64::consts::LN_10 / 10.0))
                .exp(),
        }
    }

    fn peak_linear(&self) -> f64 {
        match self.mode {
            ElementMode::Isotropic => 1.0,
            ElementMode::ThreeGpp => 10f64.powf(self.g_max_dbi / 10.0),
        }
    }
}

/// Square `n`×`n` uniform planar array in the x–y plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n: usize,
    /// Element spacing in wavelengths.
    pub spacing_wl: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    pub element: ElementPattern,
}

impl ArrayConfig {
    /// Half-wavelength, unsteered array with the given element.
    pub fn half_wave(n: usize, element: ElementPattern) -> Self {
        Self {
            n,
            spacing_wl: 0.5,
            beta_x: 0.0,
            beta_y: 0.0,
            element,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("array size n must be at least 1".into()));
        }
        if !(self.spacing_wl.is_finite() && self.spacing_wl > 0.0) {
            return Err(Error::Config("array spacing must be positive".into()));
        }
        if !(self.beta_x.is_finite() && self.beta_y.is_finite()) {
            return Err(Error::Config("progressive phases must be finite".into()));
        }
        self.element.validate()
    }
}

/// `sin(n x)/(n sin x)` with `c = cos x`, via the Chebyshev polynomial
/// `U_{n-1}(c)`; finite everywhere, no removable singularity.
#[inline]
fn dirichlet(n: usize, c: f64) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let two_c = 2.0 * c;
    let (mut u0, mut u1) = (1.0, two_c);
    for _ in 2..n {
        let u2 = two_c * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    u1 / n as f64
}

#[inline]
fn array_factor_dir(cfg: &ArrayConfig, sin_t: f64, cos_p: f64, sin_p: f64) -> f64 {
    let k = 2.0 * PI * cfg.spacing_wl;
    let px = k * sin_t * cos_p + cfg.beta_x;
    let py = k * sin_t * sin_p + cfg.beta_y;
    let a = dirichlet(cfg.n, (0.5 * px).cos()) * dirichlet(cfg.n, (0.5 * py).cos());
    a * a
}

/// Normalized power array factor in `[0, 1]`, equal to 1 at the steering direction.
pub fn array_factor(cfg: &ArrayConfig, theta: f64, phi: f64) -> Result<f64> {
    ensure_finite("array_factor", "theta", theta)?;
    ensure_finite("array_factor", "phi", phi)?;
    cfg.validate()?;
    let (sp, cp) = phi.sin_cos();
    Ok(array_factor_dir(cfg, theta.sin(), cp, sp).min(1.0))
}

/// Linear element gain including its peak gain (1 for isotropic elements).
pub fn element_gain(ep: &ElementPattern, theta: f64, phi: f64) -> Result<f64> {
    ensure_finite("element_gain", "theta", theta)?;
    ensure_finite("element_gain", "phi", phi)?;
    ep.validate()?;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok(ep.peak_linear() * ep.relative_gain(st, ct, cp, sp))
}

fn sphere_integral(
    cfg: &ArrayConfig,
    n_theta_panels: usize,
    n_phi: usize,
    gl: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let (xs, ws) = gl;
    let dphi = 2.0 * PI / n_phi as f64;
    let trig: Vec<(f64, f64)> = (0..n_phi).map(|k| (k as f64 * dphi).sin_cos()).collect();
    let h = PI / n_theta_panels as f64;
    let mut total = 0.0;
    for p in 0..n_theta_panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in xs.iter().zip(ws) {
            let t = mid + 0.5 * h * x;
            let (st, ct) = t.sin_cos();
            let mut ring = 0.0;
            for &(sp, cp) in &trig {
                ring +=
                    cfg.element.relative_gain(st, ct, cp, sp) * array_factor_dir(cfg, st, cp, sp);
            }
            total += 0.5 * h * w * st * ring * dphi;
        }
    }
    total
}

fn cache_key(cfg: &ArrayConfig) -> Vec<u64> {
    let e = &cfg.element;
    vec![
        cfg.n as u64,
        cfg.spacing_wl.to_bits(),
        cfg.beta_x.to_bits(),
        cfg.beta_y.to_bits(),
        matches!(e.mode, ElementMode::ThreeGpp) as u64,
        e.theta_3db.to_bits(),
        e.phi_3db.to_bits(),
        e.sidelobe_limit_db.to_bits(),
        e.front_back_db.to_bits(),
    ]
}

/// `4π / ∬ G'(θ,φ) sin θ dθ dφ` with `G'` the element pattern relative to its peak.
fn relative_normalization(cfg: &ArrayConfig) -> Result<f64> {
    static MEMO: OnceLock<Mutex<HashMap<Vec<u64>, f64>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    let key = cache_key(cfg);
    if let Some(v) = memo.lock().expect("memo lock").get(&key) {
        return Ok(*v);
    }
    let gl = gauss_legendre(8);
    let (mut panels, mut n_phi) = (32usize, 512usize);
    let mut prev = sphere_integral(cfg, panels, n_phi, &gl);
    let mut converged = None;
    for _ in 0..4 {
        panels *= 2;
        n_phi *= 2;
        let cur = sphere_integral(cfg, panels, n_phi, &gl);
        if ((cur - prev) / cur).abs() < 1e-4 {
            converged = Some(cur);
            break;
        }
        prev = cur;
    }
    let integral = converged.ok_or_else(|| Error::Numeric {
        context: "normalization_g0",
        detail: "sphere integral did not converge to 1e-4".into(),
        estimate: 4.0 * PI / prev,
    })?;
    let g0 = 4.0 * PI / integral;
    memo.lock().expect("memo lock").insert(key, g0);
    Ok(g0)
}

/// Directivity normalization `G0 = 4π / ∬ Ge Ga sin θ dθ dφ`.
pub fn normalization_g0(cfg: &ArrayConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(relative_normalization(cfg)? / cfg.element.peak_linear())
}

/// Pattern evaluator with the normalization computed once at construction.
#[derive(Debug, Clone)]
pub struct PatternEvaluator {
    cfg: ArrayConfig,
    // G0 * element peak: the factor applied to relative element gain times AF
    scale: f64,
    boresight: f64,
}

impl PatternEvaluator {
    pub fn new(cfg: ArrayConfig) -> Result<Self> {
        cfg.validate()?;
        let scale = relative_normalization(&cfg)?;
        let mut ev = Self {
            cfg,
            scale,
            boresight: 0.0,
        };
        ev.boresight = ev.gain_dir(0.0, 1.0, 1.0, 0.0);
        Ok(ev)
    }

    pub fn config(&self) -> &ArrayConfig {
        &self.cfg
    }

    pub fn g0(&self) -> f64 {
        self.scale / self.cfg.element.peak_linear()
    }

    /// Gain along the array normal, the peak for an unsteered array.
    pub fn boresight_gain(&self) -> f64 {
        self.boresight
    }

    /// Directive gain `G0 · Ge(θ,φ) · Ga(θ,φ)`.
    pub fn gain(&self, theta: f64, phi: f64) -> Result<f64> {
        ensure_finite("pattern_gain", "theta", theta)?;
        ensure_finite("pattern_gain", "phi", phi)?;
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Ok(self.gain_dir(st, ct, cp, sp))
    }

    /// Gain from precomputed sines and cosines of the polar and azimuth angles.
    #[inline]
    pub fn gain_dir(&self, sin_t: f64, cos_t: f64, cos_p: f64, sin_p: f64) -> f64 {
        self.scale
            * self.cfg.element.relative_gain(sin_t, cos_t, cos_p, sin_p)
            * array_factor_dir(&self.cfg, sin_t, cos_p, sin_p).min(1.0)
    }
}

/// Directive gain of an array, building a throwaway evaluator.
pub fn pattern_gain(cfg: &ArrayConfig, theta: f64, phi: f64) -> Result<f64> {
    PatternEvaluator::new(*cfg)?.gain(theta, phi)
}

/// One Gaussian lobe of the approximation: amplitude, centre and width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lobe {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

/// Sum-of-Gaussians envelope of the array pattern versus off-boresight angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianApprox {
    pub amplitudes: Vec<f64>,
}

impl Default for GaussianApprox {
    fn default() -> Self {
        Self {
            amplitudes: vec![1.0, 0.05, 0.020, 0.011, 0.006, 0.004, 0.003],
        }
    }
}

impl GaussianApprox {
    /// Lobes present for an `n`-element axis; side lobes past endfire are dropped.
    pub fn lobes(&self, n: usize) -> Vec<Lobe> {
        let nf = n.max(1) as f64;
        let mut out = Vec::with_capacity(self.amplitudes.len());
        for (m, &a) in self.amplitudes.iter().enumerate() {
            if m == 0 {
                out.push(Lobe {
                    amplitude: a,
                    center: 0.0,
                    width: 1.0 / nf,
                });
                continue;
            }
            let s = (2 * m + 1) as f64 / nf;
            if s > 1.0 {
                continue;
            }
            out.push(Lobe {
                amplitude: a,
                center: s.asin(),
                width: 0.5 / nf,
            });
        }
        out
    }

    /// Envelope normalized to 1 at boresight.
    pub fn envelope(&self, n: usize, theta: f64) -> f64 {
        let t = theta.abs();
        self.lobes(n)
            .iter()
            .map(|l| l.amplitude * (-((t - l.center) / l.width).powi(2)).exp())
            .sum()
    }
}

/// Approximate gain: boresight gain of `eval` times the normalized envelope.
pub fn gaussian_approx_gain(
    ga: &GaussianApprox,
    eval: &PatternEvaluator,
    theta: f64,
) -> Result<f64> {
    ensure_finite("gaussian_approx_gain", "theta", theta)?;
    if theta.abs() > PI {
        return Err(domain(
            "gaussian_approx_gain",
            format!("|theta| must be <= pi, got {theta}"),
        ));
    }
    Ok(eval.boresight_gain() * ga.envelope(eval.config().n, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iso(n: usize) -> ArrayConfig {
        ArrayConfig::half_wave(n, ElementPattern::isotropic())
    }

    #[test]
    fn array_factor_reference_points() {
        // high-precision direct evaluation of the sin-ratio form
        let cases = [
            (iso(15), 0.2, 0.7, 2.524_152_835_755_243_936e-5),
            (iso(5), 1.2, 0.1, 2.412_202_327_028_672_122e-2),
            (iso(25), 0.05, 1.3, 0.230_042_174_820_142_654_9),
        ];
        for (cfg, t, p, want) in cases {
            let got = array_factor(&cfg, t, p).unwrap();
            assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
        }
        let steered = ArrayConfig {
            beta_x: 0.3,
            beta_y: -0.2,
            ..iso(15)
        };
        let got = array_factor(&steered, 0.2, 0.7).unwrap();
        assert!(((got - 2.580_776_069_794_436_530e-3) / got).abs() < 1e-12);
        assert!(array_factor(&iso(10), PI / 2.0, 0.0).unwrap() < 1e-28);
    }

    /// Closed-form sphere integral of the isotropic half-wave planar array:
    /// ∫|AF|² dΩ = 4π/N⁴ Σ (N-|p|)(N-|q|) sinc(√(p²+q²)).
    fn lattice_g0(n: usize) -> f64 {
        let n = n as i64;
        let mut s = 0.0;
        for p in -(n - 1)..n {
            for q in -(n - 1)..n {
                let r = ((p * p + q * q) as f64).sqrt();
                let sinc = if r == 0.0 {
                    1.0
                } else {
                    (PI * r).sin() / (PI * r)
                };
                s += ((n - p.abs()) * (n - q.abs())) as f64 * sinc;
            }
        }
        (n as f64).powi(4) / s
    }

    #[test]
    fn isotropic_normalization_matches_lattice_sum() {
        for n in [1usize, 5, 10, 15, 20, 25] {
            let g0 = normalization_g0(&iso(n)).unwrap();
            let want = lattice_g0(n);
            assert!(((g0 - want) / want).abs() < 1e-4, "n={n} {g0} vs {want}");
        }
    }

    #[test]
    fn element_pattern_landmarks() {
        let ep = ElementPattern::three_gpp();
        let g = |t: f64, p: f64| 10.0 * element_gain(&ep, t, p).unwrap().log10();
        assert!((g(0.0, 0.3) - 8.0).abs() < 1e-12);
        // half-power points in both principal planes
        assert!((g(32.5f64.to_radians(), 0.0) - 5.0).abs() < 1e-9);
        assert!((g(32.5f64.to_radians(), PI / 2.0) - 5.0).abs() < 1e-9);
        // backward hemisphere sits at the front-back floor
        assert!((g(PI, 0.0) - (8.0 - 30.0)).abs() < 1e-9);
        assert_eq!(
            element_gain(&ElementPattern::isotropic(), 1.0, 2.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn boresight_gain_is_g0_times_peak_element() {
        for ep in [ElementPattern::isotropic(), ElementPattern::three_gpp()] {
            let ev = PatternEvaluator::new(ArrayConfig::half_wave(10, ep)).unwrap();
            let want = ev.g0() * element_gain(&ep, 0.0, 0.0).unwrap();
            assert!((ev.boresight_gain() - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(array_factor(&iso(0), 0.1, 0.1).is_err());
        assert!(array_factor(&iso(4), f64::NAN, 0.1).is_err());
        assert!(PatternEvaluator::new(ArrayConfig {
            spacing_wl: -1.0,
            ..iso(4)
        })
        .is_err());
    }

    #[test]
    fn gaussian_lobes_respect_endfire_mask() {
        let ga = GaussianApprox::default();
        assert_eq!(ga.lobes(5).len(), 3);
        assert_eq!(ga.lobes(25).len(), 7);
        assert_eq!(ga.lobes(1).len(), 1);
    }

    #[test]
    fn envelope_dominates_exact_pattern_at_lobe_peaks() {
        let ga = GaussianApprox::default();
        for n in [5usize, 10, 15, 20, 25] {
            let cfg = iso(n);
            for l in ga.lobes(n).iter().skip(1) {
                let exact = (0..720)
                    .map(|k| array_factor(&cfg, l.center, k as f64 * PI / 360.0).unwrap())
                    .fold(0.0, f64::max);
                let env = ga.envelope(n, l.center);
                assert!(
                    exact <= 2.0 * env * (1.0 + 1e-9),
                    "n={n} centre={} env={env} exact={exact}",
                    l.center
                );
            }
        }
    }

    proptest! {
        #[test]
        fn af_bounded_and_unit_at_boresight(n in 1usize..40, t in -PI..PI, p in -PI..PI,
                                            d in 0.1f64..1.5) {
            let cfg = ArrayConfig { spacing_wl: d, ..iso(n) };
            let v = array_factor(&cfg, t, p).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((array_factor(&cfg, 0.0, p).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn af_has_no_nan_near_grating_nulls(n in 1usize..30, k in -4i32..4, eps in -1e-9f64..1e-9) {
            // psi at integer multiples of 2π and just off them
            let cfg = ArrayConfig { spacing_wl: 1.0, ..iso(n) };
            let s = (k as f64 / 4.0 + eps).clamp(-1.0, 1.0);
            let v = array_factor(&cfg, s.asin(), 0.0).unwrap();
            prop_assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }

        #[test]
        fn lobe_leakage_is_small(n in 5usize..60) {
            let ga = GaussianApprox::default();
            for (m, l) in ga.lobes(n).iter().enumerate().skip(1) {
                let v = ga.envelope(n, l.center);
                let leak = v - l.amplitude;
                prop_assert!(leak >= 0.0, "m={} leak={}", m, leak);
                prop_assert!(leak < 0.1 * l.amplitude, "m={} leak={}", m, leak);
            }
        }

        #[test]
        fn gain_is_finite_everywhere(t in -10.0f64..10.0, p in -10.0f64..10.0) {
            let ev = PatternEvaluator::new(ArrayConfig::half_wave(8, ElementPattern::three_gpp())).unwrap();
            let g = ev.gain(t, p).unwrap();
            prop_assert!(g.is_finite() && g >= 0.0 && g <= ev.boresight_gain() * (1.0 + 1e-12));
        }
    }
}
