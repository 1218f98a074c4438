//! Closed-form outage chain: Hoyt law of the squared misalignment, worst-case
//! conditional outage, spatial-angle distributions and the sectorized
//! average-outage bound.

use crate::antenna::GaussianApprox;
use crate::channel::{noise_power, path_loss, ChannelParams, VibrationDraw, VibrationModel};
use crate::error::{domain, ensure_finite, Error, Result};
use crate::quadrature::{gauss_legendre, integrate_with_breaks, QuadOptions};
use crate::special_math::{bessel_i0_scaled, marcum_q1_pair};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

const QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-10,
    rel_tol: 1e-10,
    max_intervals: 4000,
};

/// Scale parameters of `Θ' = (Θx² + Θy²)/w0²`, a sum of two squared zero-mean
/// normals with variances `β_x/2` and `β_y/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoytParams {
    pub beta_x: f64,
    pub beta_y: f64,
}

impl HoytParams {
    pub fn new(beta_x: f64, beta_y: f64) -> Result<Self> {
        if !(beta_x.is_finite() && beta_y.is_finite() && beta_x > 0.0 && beta_y > 0.0) {
            return Err(Error::Config(format!(
                "Hoyt scale parameters must be positive, got ({beta_x}, {beta_y})"
            )));
        }
        Ok(Self { beta_x, beta_y })
    }

    /// `β_w = 2 σ_w² / w0²` with main-lobe width `w0 = 1/n_u`.
    pub fn from_vibration(v: &VibrationModel, n_u: usize) -> Result<Self> {
        let n2 = (n_u as f64).powi(2);
        Self::new(
            2.0 * v.sigma_x * v.sigma_x * n2,
            2.0 * v.sigma_y * v.sigma_y * n2,
        )
    }

    /// Ratio of the smaller to the larger per-axis standard deviation.
    pub fn t_q(&self) -> f64 {
        (self.beta_x.min(self.beta_y) / self.beta_x.max(self.beta_y)).sqrt()
    }

    fn near_symmetric(&self) -> bool {
        (1.0 - self.t_q()).abs() < 1e-6
    }

    /// Marcum arguments `(B1, B2)`; singular when `T_q = 1`.
    pub fn b1_b2(&self) -> (f64, f64) {
        let q = self.t_q();
        let b1 = (1.0 - q.powi(4)).sqrt() / (2.0 * q) * ((1.0 + q) / (1.0 - q)).sqrt();
        (b1, b1 * (1.0 - q) / (1.0 + q))
    }

    fn mean_beta(&self) -> f64 {
        0.5 * (self.beta_x + self.beta_y)
    }

    /// `(F(t), 1 − F(t))` of `Θ'`.
    fn cdf_pair(&self, t: f64) -> Result<(f64, f64)> {
        if t <= 0.0 {
            return Ok((0.0, 1.0));
        }
        if self.near_symmetric() {
            let e = -t / self.mean_beta();
            return Ok((-e.exp_m1(), e.exp()));
        }
        let s = (2.0 * t / (self.beta_x + self.beta_y)).sqrt();
        let (b1, b2) = self.b1_b2();
        let (q_ab, qc_ab) = marcum_q1_pair(b1 * s, b2 * s)?;
        let (q_ba, _) = marcum_q1_pair(b2 * s, b1 * s)?;
        let tail = (qc_ab + q_ba).clamp(0.0, 1.0);
        Ok(((q_ab - q_ba).clamp(0.0, 1.0), tail))
    }
}

/// Density of `Θ'`.
pub fn hoyt_pdf(p: &HoytParams, t: f64) -> Result<f64> {
    ensure_finite("hoyt_pdf", "t", t)?;
    if t < 0.0 {
        return Ok(0.0);
    }
    let prod = p.beta_x * p.beta_y;
    let a = (p.beta_x + p.beta_y) / (2.0 * prod);
    let b = (p.beta_x - p.beta_y).abs() / (2.0 * prod);
    Ok((-(a - b) * t).exp() * bessel_i0_scaled(b * t)? / prod.sqrt())
}

/// Distribution function of `Θ'` as a difference of Marcum Q-functions.
pub fn hoyt_cdf(p: &HoytParams, t: f64) -> Result<f64> {
    ensure_finite("hoyt_cdf", "t", t)?;
    Ok(p.cdf_pair(t)?.0)
}

/// Parameters of the sectorized average-outage bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub d_sectors: usize,
    pub alpha_c: f64,
    pub theta_d_max: f64,
    /// Links per UAV, target included.
    pub j_links: usize,
    /// Noise power normalized by the ideal received power.
    pub n_prime_0: f64,
    /// Linear SINR threshold.
    pub gamma_th: f64,
    /// UAV array size used by the Gaussian envelope.
    pub n_u: usize,
    pub approx: GaussianApprox,
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.d_sectors < 1 {
            errs.push("d_sectors must be at least 1".to_string());
        }
        if self.j_links < 1 {
            errs.push("j_links must be at least 1".to_string());
        }
        if !(self.alpha_c.is_finite() && self.alpha_c >= 0.0) {
            errs.push("alpha_c must be non-negative".to_string());
        }
        if !(self.theta_d_max.is_finite()
            && self.theta_d_max >= self.alpha_c
            && self.theta_d_max <= FRAC_PI_2)
        {
            errs.push("theta_d_max must lie in [alpha_c, pi/2]".to_string());
        }
        if !(self.n_prime_0.is_finite() && self.n_prime_0 >= 0.0) {
            errs.push("n_prime_0 must be non-negative".to_string());
        }
        if !(self.gamma_th.is_finite() && self.gamma_th > 0.0) {
            errs.push("gamma_th must be positive".to_string());
        }
        if self.n_u < 1 {
            errs.push("n_u must be at least 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}

/// Largest spatial angle inside a cell of ground radius `r` seen from height `h1`.
pub fn default_theta_d_max(h1: f64, r: f64) -> f64 {
    (2.0 * r / h1).atan().min(FRAC_PI_2)
}

/// `N'_0 = σ²_N / (P_t |h_L|² G_s G_u)` for a target link of slant length `length`.
pub fn normalized_noise(ch: &ChannelParams, length: f64, peak_s: f64, peak_u: f64) -> Result<f64> {
    Ok(noise_power(ch) / (ch.tx_power_w * path_loss(ch, length)? * peak_s * peak_u))
}

/// Worst-case normalized SINR: main-lobe loss over the Gaussian-envelope
/// interference plus normalized noise.
pub fn worst_case_sinr(
    draw: VibrationDraw,
    theta_d_list: &[f64],
    approx: &GaussianApprox,
    n_u: usize,
    n_prime_0: f64,
) -> f64 {
    let n2 = (n_u as f64).powi(2);
    let num = (-(draw.theta_x * draw.theta_x + draw.theta_y * draw.theta_y) * n2).exp();
    let den: f64 = theta_d_list
        .iter()
        .map(|&t| approx.envelope(n_u, t))
        .sum::<f64>()
        + n_prime_0;
    num / den
}

/// `P(γ < γ_th)` when the normalized interference-plus-noise equals `level`.
pub fn outage_given_level(p: &HoytParams, gamma_th: f64, level: f64) -> Result<f64> {
    let x = level * gamma_th;
    if x >= 1.0 || x.is_nan() {
        return Ok(1.0);
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let t_star = -x.ln();
    if p.near_symmetric() {
        return Ok((-t_star / p.mean_beta()).exp());
    }
    let s = (-2.0 * x.ln() / (p.beta_x + p.beta_y)).sqrt();
    let (b1, b2) = p.b1_b2();
    let (_, qc) = marcum_q1_pair(b1 * s, b2 * s)?;
    let (q, _) = marcum_q1_pair(b2 * s, b1 * s)?;
    Ok((qc + q).clamp(0.0, 1.0))
}

/// Conditional worst-case outage given the interferer spatial angles.
pub fn outage_conditional(p: &HoytParams, bc: &BoundConfig, theta_d_list: &[f64]) -> Result<f64> {
    let s: f64 = theta_d_list
        .iter()
        .map(|&t| bc.approx.envelope(bc.n_u, t))
        .sum();
    outage_given_level(p, bc.gamma_th, s + bc.n_prime_0)
}

/// Distribution function of the worst-case SINR at `x` for interference-plus-noise `level`.
pub fn worst_case_sinr_cdf(p: &HoytParams, level: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    outage_given_level(p, x, level)
}

/// Density of the worst-case SINR, from the Hoyt density by change of variables.
pub fn worst_case_sinr_pdf(p: &HoytParams, level: f64, x: f64) -> Result<f64> {
    let y = x * level;
    if !(x > 0.0 && y < 1.0) {
        return Ok(0.0);
    }
    Ok(hoyt_pdf(p, -y.ln())? / x)
}

fn check_cell(h1: f64, r: f64) -> Result<()> {
    if !(h1.is_finite() && r.is_finite() && h1 > 0.0 && r > 0.0) {
        return Err(domain(
            "analytic",
            format!("need h1 > 0 and R > 0, got h1={h1}, R={r}"),
        ));
    }
    Ok(())
}

/// Density of the target SBS polar angle for a target abscissa uniform on `[-R, R]`.
pub fn theta11_pdf(h1: f64, r: f64, theta: f64) -> f64 {
    if theta > 0.0 && theta < (r / h1).atan() {
        h1 / (r * theta.cos().powi(2))
    } else {
        0.0
    }
}

/// Density of a neighbour's x pointing angle, `h1 / (2R cos² θ)` on `|θ| < atan(R/h1)`.
pub fn theta_x_pdf(h1: f64, r: f64, theta: f64) -> f64 {
    if theta.abs() < (r / h1).atan() {
        h1 / (2.0 * r * theta.cos().powi(2))
    } else {
        0.0
    }
}

/// `P(θ_d ≤ t | θ_x1j)` for a neighbour with ordinate uniform on its chord.
pub fn theta_d_conditional_cdf(h1: f64, r: f64, theta_x11: f64, theta_x1j: f64, t: f64) -> f64 {
    let delta = theta_x11 - theta_x1j;
    if delta.abs() >= FRAC_PI_2 {
        return if t >= FRAC_PI_2 { 1.0 } else { 0.0 };
    }
    if t >= FRAC_PI_2 {
        return 1.0;
    }
    let tt = t.tan().powi(2) - delta.tan().powi(2);
    if tt <= 0.0 {
        return 0.0;
    }
    let chord = r * r - (h1 * theta_x1j.tan()).powi(2);
    if chord <= 0.0 {
        return 1.0;
    }
    (h1 * tt.sqrt() / chord.sqrt()).min(1.0)
}

fn support(h1: f64, r: f64) -> f64 {
    (r / h1).atan()
}

/// Marginal `P(θ_d ≤ t)` of one neighbour's spatial angle to a target at `θ_x11`.
pub fn theta_d_cdf(h1: f64, r: f64, theta_x11: f64, t: f64) -> Result<f64> {
    check_cell(h1, r)?;
    ensure_finite("theta_d_cdf", "t", t)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let lim = support(h1, r);
    if t >= FRAC_PI_2 {
        return Ok(1.0);
    }
    let lo = (theta_x11 - t).max(-lim);
    let hi = (theta_x11 + t).min(lim);
    if lo >= hi {
        return Ok(0.0);
    }
    let q = integrate_with_breaks(
        |x| theta_d_conditional_cdf(h1, r, theta_x11, x, t) * theta_x_pdf(h1, r, x),
        lo,
        hi,
        &[theta_x11],
        QUAD,
    )?;
    Ok(q.value.clamp(0.0, 1.0))
}

/// Marginal density of one neighbour's spatial angle.
///
/// The conditional density has inverse-square-root singularities where
/// `|θ_x11 − θ_x1j| = t`; substituting `θ_x1j = θ_x11 + t sin u` removes them.
pub fn theta_d_pdf(h1: f64, r: f64, theta_x11: f64, t: f64) -> Result<f64> {
    check_cell(h1, r)?;
    ensure_finite("theta_d_pdf", "t", t)?;
    if t <= 0.0 || t >= FRAC_PI_2 {
        return Ok(0.0);
    }
    let lim = support(h1, r);
    let u_lo = ((-lim - theta_x11) / t).max(-1.0);
    let u_hi = ((lim - theta_x11) / t).min(1.0);
    if u_lo >= u_hi {
        return Ok(0.0);
    }
    let (tan_t, sec2_t) = (t.tan(), 1.0 / t.cos().powi(2));
    let f = |u: f64| {
        let (su, cu) = u.sin_cos();
        let x = theta_x11 + t * su;
        let delta = t * su.abs();
        // tan²t − tan²δ factored so the gap t − δ = t cos²u/(1+|sin u|) keeps full precision
        let gap = t * cu * cu / (1.0 + su.abs());
        let tt = gap.sin() / (t.cos() * delta.cos()) * (tan_t + delta.tan());
        let chord = r * r - (h1 * x.tan()).powi(2);
        if tt <= 0.0 || chord <= 0.0 {
            return 0.0;
        }
        let c = h1 / chord.sqrt();
        if c * tt.sqrt() >= 1.0 {
            return 0.0;
        }
        c * tan_t * sec2_t / tt.sqrt() * theta_x_pdf(h1, r, x) * t * cu
    };
    let opts = QuadOptions {
        abs_tol: 1e-9,
        rel_tol: 1e-9,
        ..QUAD
    };
    let q = integrate_with_breaks(f, u_lo.asin(), u_hi.asin(), &[0.0], opts)?;
    Ok(q.value.max(0.0))
}

/// One sector of the bound: spatial-angle range, probability mass of a single
/// neighbour falling in it, and its share of the final bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorTerm {
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundBreakdown {
    pub p_out: f64,
    /// Probability that all J−1 neighbours clear `α_c`.
    pub admissible: f64,
    /// Contribution of configurations with every neighbour beyond `θ_dmax`.
    pub far_field: f64,
    pub sectors: Vec<SectorTerm>,
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Sectorized upper bound on the average outage, with per-sector detail.
///
/// Each of the `J−1` neighbours independently draws a spatial angle from the
/// marginal law; configurations are grouped by the sector holding the nearest
/// neighbours, whose interference is evaluated at the sector's lower edge.
pub fn average_outage_bound_detailed(
    p: &HoytParams,
    bc: &BoundConfig,
    h1: f64,
    r: f64,
    theta_x11: f64,
) -> Result<BoundBreakdown> {
    bc.validate()?;
    check_cell(h1, r)?;
    let others = bc.j_links - 1;
    if others == 0 {
        let v = outage_given_level(p, bc.gamma_th, bc.n_prime_0)?;
        return Ok(BoundBreakdown {
            p_out: v,
            admissible: 1.0,
            far_field: v,
            sectors: Vec::new(),
        });
    }
    let d = bc.d_sectors;
    let width = (bc.theta_d_max - bc.alpha_c) / d as f64;
    let edges: Vec<f64> = (0..=d).map(|k| bc.alpha_c + k as f64 * width).collect();
    let cdf: Vec<f64> = edges
        .par_iter()
        .map(|&t| theta_d_cdf(h1, r, theta_x11, t))
        .collect::<Result<Vec<_>>>()?;
    let admissible = (1.0 - cdf[0]).powi(others as i32);
    if admissible <= 0.0 {
        return Err(Error::Numeric {
            context: "average_outage_bound",
            detail: "no admissible neighbour placement above alpha_c".into(),
            estimate: 1.0,
        });
    }
    let level = bc.n_prime_0;
    let mut sectors = Vec::with_capacity(d);
    let mut total = 0.0;
    for k in 0..d {
        let mass = (cdf[k + 1] - cdf[k]).max(0.0);
        let beyond = (1.0 - cdf[k + 1]).max(0.0);
        let s = bc.approx.envelope(bc.n_u, edges[k]);
        let mut contribution = 0.0;
        if mass > 0.0 {
            for j in 1..=others {
                let w =
                    binomial(others, j) * mass.powi(j as i32) * beyond.powi((others - j) as i32);
                if w == 0.0 {
                    continue;
                }
                contribution += w * outage_given_level(p, bc.gamma_th, j as f64 * s + level)?;
            }
        }
        contribution /= admissible;
        total += contribution;
        sectors.push(SectorTerm {
            lower: edges[k],
            upper: edges[k + 1],
            mass,
            contribution,
        });
    }
    let far = (1.0 - cdf[d]).max(0.0).powi(others as i32) / admissible
        * outage_given_level(p, bc.gamma_th, level)?;
    total += far;
    Ok(BoundBreakdown {
        p_out: total.clamp(0.0, 1.0),
        admissible,
        far_field: far,
        sectors,
    })
}

/// Sectorized upper bound on the average outage for a target at `θ_x11`.
pub fn average_outage_bound(
    p: &HoytParams,
    bc: &BoundConfig,
    h1: f64,
    r: f64,
    theta_x11: f64,
) -> Result<f64> {
    Ok(average_outage_bound_detailed(p, bc, h1, r, theta_x11)?.p_out)
}

/// Bound averaged over a random target angle, re-deriving `N'_0` from the
/// target link length at each quadrature node.
pub fn average_outage_bound_random_target(
    p: &HoytParams,
    bc: &BoundConfig,
    h1: f64,
    r: f64,
    ch: &ChannelParams,
    peak_s: f64,
    peak_u: f64,
) -> Result<f64> {
    check_cell(h1, r)?;
    let lim = support(h1, r);
    let (xs, ws) = gauss_legendre(24);
    let mut acc = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let th = 0.5 * lim * (x + 1.0);
        let n0 = normalized_noise(ch, h1 / th.cos(), peak_s, peak_u)?;
        let cfg = BoundConfig {
            n_prime_0: n0,
            ..bc.clone()
        };
        acc += 0.5 * lim * w * theta11_pdf(h1, r, th) * average_outage_bound(p, &cfg, h1, r, th)?;
    }
    Ok(acc.clamp(0.0, 1.0))
}
