//! Seeded, parallel Monte-Carlo engine for interference sweeps and outage.
//!
//! Draw `k` of UAV `u` in deployment `d` always comes from the same keystream
//! position, and draws are reduced in fixed chunks in index order, so any
//! worker count gives bit-identical results.

use crate::analytic::{self, BoundConfig, HoytParams};
use crate::antenna::{ArrayConfig, ElementPattern, GaussianApprox, PatternEvaluator};
use crate::channel::{normal_pair, ChannelParams, LosMode, VibrationDraw, VibrationModel};
use crate::error::{Error, Result};
use crate::geometry::{deploy_random, min_intra_deviation, DeploymentSpec, Topology};
use crate::interference::{Antennas, DrawTrig, LinkContext, PreparedLink, SinrBreakdown};
use crate::rng::{deployment_rng, roll_rng, VibrationStreams};
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::FRAC_PI_4;

/// Draws per reduction chunk.
pub const CHUNK: u64 = 4096;
/// Attempts allowed to find a deployment that satisfies the merge threshold.
pub const MAX_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaSpec {
    pub n_u: usize,
    pub n_s: usize,
    pub spacing_wl: f64,
    pub element: ElementPattern,
}

/// Everything a simulation needs. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub deployment: DeploymentSpec,
    pub channel: ChannelParams,
    pub vibration: VibrationModel,
    pub antennas: AntennaSpec,
    pub gamma_th_db: f64,
    pub alpha_c: f64,
    pub n_vibration_draws: u64,
    pub n_deployments: usize,
    pub seed: u64,
    /// Target SBS roll; `None` tunes it per deployment.
    pub phi_s11: Option<f64>,
    /// Worker threads, 0 for all cores. Does not affect results.
    pub workers: usize,
}

impl SimConfig {
    /// Desk-scale defaults: 95 GHz, 10 mW, 15×15 arrays, J = 10, R = 400 m,
    /// σ = 1°, γ_th = 9 dB, α_c = 2°.
    pub fn desk_default() -> Self {
        Self {
            deployment: DeploymentSpec {
                layout: crate::geometry::Layout::Cellular,
                n_sbs: 70,
                n_uav: 7,
                area_radius: 1500.0,
                uav_height_min: 100.0,
                uav_height_max: 100.0,
                per_uav_links: 10,
                coverage_radius: Some(400.0),
                max_link_length: None,
                target_theta: Some(40f64.to_radians()),
            },
            channel: ChannelParams::default(),
            vibration: VibrationModel::isotropic(1f64.to_radians()),
            antennas: AntennaSpec {
                n_u: 15,
                n_s: 15,
                spacing_wl: 0.5,
                element: ElementPattern::three_gpp(),
            },
            gamma_th_db: 9.0,
            alpha_c: 2f64.to_radians(),
            n_vibration_draws: 500_000,
            n_deployments: 50,
            seed: 1,
            phi_s11: None,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for r in [
            self.deployment.validate(),
            self.channel.validate(),
            self.vibration.validate(),
        ] {
            if let Err(e) = r {
                errs.push(e.to_string());
            }
        }
        if self.antennas.n_u < 1 || self.antennas.n_s < 1 {
            errs.push("array sizes must be at least 1".into());
        }
        if !self.gamma_th_db.is_finite() {
            errs.push("gamma_th_db must be finite".into());
        }
        if !(self.alpha_c.is_finite() && self.alpha_c >= 0.0) {
            errs.push("alpha_c must be non-negative".into());
        }
        if self.n_vibration_draws < 1 || self.n_deployments < 1 {
            errs.push("draw and deployment counts must be at least 1".into());
        }
        if let Some(p) = self.phi_s11 {
            if !p.is_finite() {
                errs.push("phi_s11 must be finite".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    pub fn gamma_th(&self) -> f64 {
        10f64.powf(self.gamma_th_db / 10.0)
    }

    fn array(&self, n: usize) -> ArrayConfig {
        ArrayConfig {
            n,
            spacing_wl: self.antennas.spacing_wl,
            beta_x: 0.0,
            beta_y: 0.0,
            element: self.antennas.element,
        }
    }

    pub fn build_antennas(&self) -> Result<Antennas> {
        Ok(Antennas {
            uav: PatternEvaluator::new(self.array(self.antennas.n_u))?,
            sbs: PatternEvaluator::new(self.array(self.antennas.n_s))?,
        })
    }

    /// Short SHA-256 digest of the result-relevant fields (worker count excluded).
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        digest_of(&c)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

/// Short SHA-256 digest (16 hex digits) of a value's JSON form.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes to JSON");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    MonteCarlo,
    AnalyticBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageResult {
    pub p_out: f64,
    pub stderr: f64,
    pub n_effective: u64,
    pub method: Method,
    pub config_digest: String,
}

/// Outcome of one deployment inside [`average_outage_detailed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeploymentOutcome {
    pub index: usize,
    pub attempts: u64,
    pub outages: u64,
    pub draws: u64,
    pub p_out: f64,
}

/// Draws the topology of deployment `dep`, resampling until the target cell's
/// smallest beam separation reaches `alpha_c`. Returns the attempt count too.
pub fn sample_deployment(cfg: &SimConfig, dep: u64) -> Result<(Topology, u64)> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = deployment_rng(cfg.seed, dep, attempt);
        let topo = deploy_random(&cfg.deployment, &mut rng)?;
        if min_intra_deviation(&topo) >= cfg.alpha_c {
            return Ok((topo, attempt + 1));
        }
    }
    Err(Error::Numeric {
        context: "sample_deployment",
        detail: format!("no deployment cleared alpha_c in {MAX_ATTEMPTS} attempts"),
        estimate: f64::NAN,
    })
}

/// Roll angles for every SBS link of deployment `dep`, uniform in `[0°, 45°)`.
pub fn roll_angles(cfg: &SimConfig, dep: u64, n_sbs: usize) -> Vec<f64> {
    let mut rng = roll_rng(cfg.seed, dep);
    (0..n_sbs).map(|_| rng.gen::<f64>() * FRAC_PI_4).collect()
}

/// Grid of target-SBS rolls searched when tuning: 0° to 45° in 0.5° steps.
pub fn phi_grid() -> Vec<f64> {
    (0..=90).map(|k| (k as f64 * 0.5).to_radians()).collect()
}

/// Roll of the target SBS minimizing vibration-free inter-cell interference.
pub fn tune_phi_s11(prep: &PreparedLink) -> Result<f64> {
    let still = DrawTrig::new(VibrationDraw::default());
    let mut gains = Vec::new();
    let base: Vec<f64> = (0..prep.groups().len())
        .map(|g| {
            prep.uav_side_gains(g, &still, &mut gains);
            gains.iter().sum::<f64>() * prep.groups()[g].los_probability
        })
        .collect();
    let mut best = (f64::INFINITY, 0.0);
    for phi in phi_grid() {
        let mut s = 0.0;
        for (g, b) in base.iter().enumerate() {
            s += prep.sbs_coupling(g, phi)? * b;
        }
        if s < best.0 {
            best = (s, phi);
        }
    }
    Ok(best.1)
}

/// Kernel for one deployment: prepared link plus its streams.
pub struct DeploymentKernel {
    pub prep: PreparedLink,
    pub phi_s11: f64,
    streams: VibrationStreams,
    vib: VibrationModel,
    los_mode: LosMode,
}

impl DeploymentKernel {
    /// Prepares deployment `dep` of `topo`; neighbours below `merge_below` are dropped.
    pub fn new(
        cfg: &SimConfig,
        ant: &Antennas,
        topo: &Topology,
        dep: u64,
        merge_below: f64,
    ) -> Result<Self> {
        let rolls = roll_angles(cfg, dep, topo.sbss().len());
        let ctx =
            LinkContext::from_topology(topo, &rolls, cfg.phi_s11.unwrap_or(0.0), merge_below)?;
        let mut prep = PreparedLink::new(&ctx, ant, &cfg.channel)?;
        let phi = match cfg.phi_s11 {
            Some(p) => p,
            None => {
                let p = tune_phi_s11(&prep)?;
                prep.set_phi_s11(p)?;
                p
            }
        };
        Ok(Self {
            prep,
            phi_s11: phi,
            streams: VibrationStreams::new(cfg.seed, dep),
            vib: cfg.vibration,
            los_mode: cfg.channel.los_mode,
        })
    }

    #[inline]
    fn read_draw<R: RngCore>(&self, r: &mut R) -> (VibrationDraw, u64) {
        let (z1, z2) = normal_pair(r.next_u64(), r.next_u64());
        let coin = r.next_u64();
        (
            VibrationDraw {
                theta_x: self.vib.sigma_x * z1,
                theta_y: self.vib.sigma_y * z2,
            },
            coin,
        )
    }

    /// Vibration draw and LoS coin of `uav` at `draw`.
    pub fn draw(&self, uav: usize, draw: u64) -> (VibrationDraw, u64) {
        self.read_draw(&mut self.streams.at(uav, draw))
    }

    fn los_weight(&self, p: f64, coin: u64) -> f64 {
        match self.los_mode {
            LosMode::Expected => p,
            LosMode::Bernoulli => {
                if ((coin >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Outage count over draws `[start, start + len)`.
    pub fn count_outages(&self, start: u64, len: u64, gamma: f64) -> u64 {
        let p = &self.prep;
        let ceiling = p.inter_ceiling();
        let noise = p.noise();
        let mut target = self.streams.at(p.target_uav(), start);
        let mut count = 0;
        for k in start..start + len {
            let (d1, _) = self.read_draw(&mut target);
            let t1 = DrawTrig::new(d1);
            let signal = p.signal(&t1);
            let base = p.intra(&t1) + noise;
            if signal / base < gamma {
                count += 1;
                continue;
            }
            if signal / (base + ceiling) >= gamma {
                continue;
            }
            let mut inter = 0.0;
            for (g, grp) in p.groups().iter().enumerate() {
                let (d, coin) = self.draw(grp.uav, k);
                let w = self.los_weight(grp.los_probability, coin);
                inter += p.inter_group(g, &DrawTrig::new(d), w);
            }
            if signal / (base + inter) < gamma {
                count += 1;
            }
        }
        count
    }

    /// Full breakdown of draw `k`, LoS handled per the configured mode.
    pub fn breakdown(&self, k: u64) -> SinrBreakdown {
        let p = &self.prep;
        let (d1, _) = self.draw(p.target_uav(), k);
        let t1 = DrawTrig::new(d1);
        let signal = p.signal(&t1);
        let intra = p.intra(&t1);
        let mut inter = 0.0;
        for (g, grp) in p.groups().iter().enumerate() {
            let (d, coin) = self.draw(grp.uav, k);
            inter += p.inter_group(
                g,
                &DrawTrig::new(d),
                self.los_weight(grp.los_probability, coin),
            );
        }
        SinrBreakdown {
            signal_w: signal,
            intra_w: intra,
            inter_w: inter,
            noise_w: p.noise(),
            sinr: signal / ((intra + p.noise()) + inter),
        }
    }
}

fn chunks(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, CHUNK.min(n - c * CHUNK)))
        .collect()
}

fn count_parallel(pool: &rayon::ThreadPool, kernel: &DeploymentKernel, n: u64, gamma: f64) -> u64 {
    let parts: Vec<u64> = pool.install(|| {
        chunks(n)
            .into_par_iter()
            .map(|(s, l)| kernel.count_outages(s, l, gamma))
            .collect()
    });
    parts.iter().sum()
}

fn binomial_result(cfg: &SimConfig, outages: u64, n: u64) -> OutageResult {
    let p = outages as f64 / n as f64;
    OutageResult {
        p_out: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
        n_effective: n,
        method: Method::MonteCarlo,
        config_digest: cfg.digest(),
    }
}

/// Outage on a supplied topology as deployment `dep`; neighbours closer than
/// `alpha_c` to the target beam count as merged and do not interfere.
pub fn estimate_outage_at(cfg: &SimConfig, topo: &Topology, dep: u64) -> Result<OutageResult> {
    cfg.validate()?;
    let ant = cfg.build_antennas()?;
    let kernel = DeploymentKernel::new(cfg, &ant, topo, dep, cfg.alpha_c)?;
    let n = cfg.n_vibration_draws;
    let outages = count_parallel(&cfg.pool()?, &kernel, n, cfg.gamma_th());
    Ok(binomial_result(cfg, outages, n))
}

pub fn estimate_outage(cfg: &SimConfig, topo: &Topology) -> Result<OutageResult> {
    estimate_outage_at(cfg, topo, 0)
}

/// Average outage over `n_deployments` topologies, with per-deployment detail.
pub fn average_outage_detailed(cfg: &SimConfig) -> Result<(OutageResult, Vec<DeploymentOutcome>)> {
    cfg.validate()?;
    let ant = cfg.build_antennas()?;
    let pool = cfg.pool()?;
    let n = cfg.n_vibration_draws;
    let gamma = cfg.gamma_th();
    let mut out = Vec::with_capacity(cfg.n_deployments);
    for dep in 0..cfg.n_deployments {
        let (topo, attempts) = sample_deployment(cfg, dep as u64)?;
        let kernel = DeploymentKernel::new(cfg, &ant, &topo, dep as u64, cfg.alpha_c)?;
        let outages = count_parallel(&pool, &kernel, n, gamma);
        out.push(DeploymentOutcome {
            index: dep,
            attempts,
            outages,
            draws: n,
            p_out: outages as f64 / n as f64,
        });
    }
    let m = out.len();
    if m == 1 {
        return Ok((binomial_result(cfg, out[0].outages, n), out));
    }
    let mean = out.iter().map(|o| o.p_out).sum::<f64>() / m as f64;
    let var = out.iter().map(|o| (o.p_out - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    Ok((
        OutageResult {
            p_out: mean,
            stderr: (var / m as f64).sqrt(),
            n_effective: n * m as u64,
            method: Method::MonteCarlo,
            config_digest: cfg.digest(),
        },
        out,
    ))
}

pub fn average_outage(cfg: &SimConfig) -> Result<OutageResult> {
    Ok(average_outage_detailed(cfg)?.0)
}

/// Mean and standard error of paired per-deployment differences `b − a`.
pub fn paired_difference(a: &[DeploymentOutcome], b: &[DeploymentOutcome]) -> (f64, f64) {
    let m = a.len().min(b.len());
    let d: Vec<f64> = (0..m).map(|i| b[i].p_out - a[i].p_out).collect();
    let mean = d.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, 0.0);
    }
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiSweepRow {
    pub phi_s11: f64,
    pub mean_intra_w: f64,
    pub mean_inter_w: f64,
}

/// Mean intra- and inter-cell interference versus target SBS roll for one
/// fixed deployment (`dep` selects rolls and vibration streams).
pub fn run_phi_sweep(
    cfg: &SimConfig,
    topo: &Topology,
    dep: u64,
    phi_grid: &[f64],
) -> Result<Vec<PhiSweepRow>> {
    cfg.validate()?;
    if let Some(p) = phi_grid
        .iter()
        .find(|p| !(p.is_finite() && (0.0..=FRAC_PI_4 + 1e-12).contains(*p)))
    {
        return Err(Error::Config(format!("sweep roll {p} outside [0, 45 deg]")));
    }
    let ant = cfg.build_antennas()?;
    let fixed = SimConfig {
        phi_s11: Some(0.0),
        ..cfg.clone()
    };
    let kernel = DeploymentKernel::new(&fixed, &ant, topo, dep, 0.0)?;
    let p = &kernel.prep;
    let n_groups = p.groups().len();
    let n = cfg.n_vibration_draws;
    // per chunk: intra sum, then per group the LoS-weighted sum of UAV-side gains
    let parts: Vec<Vec<f64>> = cfg.pool()?.install(|| {
        chunks(n)
            .into_par_iter()
            .map(|(s, l)| {
                let mut acc = vec![0.0; 1 + n_groups];
                let mut gains = Vec::new();
                for k in s..s + l {
                    let (d1, _) = kernel.draw(p.target_uav(), k);
                    acc[0] += p.intra(&DrawTrig::new(d1));
                    for (g, grp) in p.groups().iter().enumerate() {
                        let (d, coin) = kernel.draw(grp.uav, k);
                        p.uav_side_gains(g, &DrawTrig::new(d), &mut gains);
                        acc[1 + g] += kernel.los_weight(grp.los_probability, coin)
                            * gains.iter().sum::<f64>();
                    }
                }
                acc
            })
            .collect()
    });
    let mut total = vec![0.0; 1 + n_groups];
    for part in &parts {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    let nf = n as f64;
    let mut rows = Vec::with_capacity(phi_grid.len());
    for &phi in phi_grid {
        let mut inter = 0.0;
        for g in 0..n_groups {
            inter += p.sbs_coupling(g, phi)? * total[1 + g] / nf;
        }
        rows.push(PhiSweepRow {
            phi_s11: phi,
            mean_intra_w: total[0] / nf,
            mean_inter_w: inter,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaDRow {
    pub theta_d: f64,
    pub phi_u: f64,
    pub mean_intra_w: f64,
}

/// Mean power leaked by one neighbouring beam at spatial angle `θ_d` (offset
/// along x) with roll `φ_u`, averaged over the target UAV's vibration.
pub fn run_theta_d_sweep(
    cfg: &SimConfig,
    theta_grid: &[f64],
    phi_values: &[f64],
) -> Result<Vec<ThetaDRow>> {
    cfg.validate()?;
    let ant = cfg.build_antennas()?;
    let h = 0.5 * (cfg.deployment.uav_height_min + cfg.deployment.uav_height_max);
    let length = h / cfg.deployment.target_theta.unwrap_or(0.0).cos();
    let streams = VibrationStreams::new(cfg.seed, 0);
    let n = cfg.n_vibration_draws;
    let pool = cfg.pool()?;
    let mut rows = Vec::new();
    for &phi in phi_values {
        for &theta in theta_grid {
            if !(theta.is_finite() && theta.abs() < std::f64::consts::FRAC_PI_2) {
                return Err(Error::Config(format!(
                    "theta_d {theta} outside (-90, 90) deg"
                )));
            }
            let ctx = LinkContext {
                target_uav: 0,
                target_length: length,
                n_uav: 1,
                intra: vec![crate::interference::IntraLink {
                    sbs: 1,
                    offset: (theta, 0.0),
                    roll: phi,
                }],
                inter: Vec::new(),
                phi_s11: 0.0,
            };
            let prep = PreparedLink::new(&ctx, &ant, &cfg.channel)?;
            let parts: Vec<f64> = pool.install(|| {
                chunks(n)
                    .into_par_iter()
                    .map(|(s, l)| {
                        let mut r = streams.at(0, s);
                        let mut acc = 0.0;
                        for _ in 0..l {
                            let (z1, z2) = normal_pair(r.next_u64(), r.next_u64());
                            r.next_u64();
                            let d = VibrationDraw {
                                theta_x: cfg.vibration.sigma_x * z1,
                                theta_y: cfg.vibration.sigma_y * z2,
                            };
                            acc += prep.intra(&DrawTrig::new(d));
                        }
                        acc
                    })
                    .collect()
            });
            rows.push(ThetaDRow {
                theta_d: theta,
                phi_u: phi,
                mean_intra_w: parts.iter().sum::<f64>() / n as f64,
            });
        }
    }
    Ok(rows)
}

/// First `count` per-draw breakdowns of deployment `dep`.
pub fn diagnostic_draws(
    cfg: &SimConfig,
    topo: &Topology,
    dep: u64,
    count: u64,
) -> Result<Vec<SinrBreakdown>> {
    cfg.validate()?;
    let ant = cfg.build_antennas()?;
    let kernel = DeploymentKernel::new(cfg, &ant, topo, dep, cfg.alpha_c)?;
    Ok((0..count).map(|k| kernel.breakdown(k)).collect())
}

/// Bound configuration matching a simulation setup with `d_sectors` sectors.
pub fn bound_config(
    cfg: &SimConfig,
    d_sectors: usize,
    theta_d_max: Option<f64>,
) -> Result<(HoytParams, BoundConfig, f64, f64)> {
    cfg.validate()?;
    let dep = &cfg.deployment;
    let h1 = 0.5 * (dep.uav_height_min + dep.uav_height_max);
    let r = dep.coverage_at(h1)?;
    let hoyt = HoytParams::from_vibration(&cfg.vibration, cfg.antennas.n_u)?;
    let bc = BoundConfig {
        d_sectors,
        alpha_c: cfg.alpha_c,
        theta_d_max: theta_d_max.unwrap_or_else(|| analytic::default_theta_d_max(h1, r)),
        j_links: dep.per_uav_links,
        n_prime_0: 0.0,
        gamma_th: cfg.gamma_th(),
        n_u: cfg.antennas.n_u,
        approx: GaussianApprox::default(),
    };
    Ok((hoyt, bc, h1, r))
}

/// Analytic outage bound for the configuration, averaging over the target
/// angle when it is not pinned.
pub fn analytic_bound(
    cfg: &SimConfig,
    d_sectors: usize,
    theta_d_max: Option<f64>,
) -> Result<OutageResult> {
    let (hoyt, mut bc, h1, r) = bound_config(cfg, d_sectors, theta_d_max)?;
    let ant = cfg.build_antennas()?;
    let (ps, pu) = (ant.sbs.boresight_gain(), ant.uav.boresight_gain());
    let p = match cfg.deployment.target_theta {
        Some(th) => {
            bc.n_prime_0 = analytic::normalized_noise(&cfg.channel, h1 / th.cos(), ps, pu)?;
            analytic::average_outage_bound(&hoyt, &bc, h1, r, th)?
        }
        None => {
            analytic::average_outage_bound_random_target(&hoyt, &bc, h1, r, &cfg.channel, ps, pu)?
        }
    };
    Ok(OutageResult {
        p_out: p,
        stderr: 0.0,
        n_effective: 0,
        method: Method::AnalyticBound,
        config_digest: cfg.digest(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            n_vibration_draws: 20_000,
            n_deployments: 3,
            ..SimConfig::desk_default()
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let a = average_outage_detailed(&SimConfig {
            workers: 1,
            ..small()
        })
        .unwrap();
        let b = average_outage_detailed(&SimConfig {
            workers: 3,
            ..small()
        })
        .unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn engine_matches_sequential_reference_loop() {
        // thresholds chosen so each deployment has a partial outage
        for (dep, gamma_db) in [(0u64, 29.0), (1, 28.0), (2, 27.0)] {
            let cfg = SimConfig {
                gamma_th_db: gamma_db,
                workers: 2,
                ..small()
            };
            let (topo, _) = sample_deployment(&cfg, dep).unwrap();
            let engine = estimate_outage_at(&cfg, &topo, dep).unwrap();
            let ant = cfg.build_antennas().unwrap();
            let kernel = DeploymentKernel::new(&cfg, &ant, &topo, dep, cfg.alpha_c).unwrap();
            let reference = (0..cfg.n_vibration_draws)
                .filter(|&k| kernel.breakdown(k).sinr < cfg.gamma_th())
                .count() as u64;
            assert_eq!(
                engine.p_out,
                reference as f64 / cfg.n_vibration_draws as f64,
                "deployment {dep}"
            );
            assert!(engine.p_out > 0.0 && engine.p_out < 1.0);
        }
    }

    #[test]
    fn threshold_limits() {
        let (topo, _) = sample_deployment(&small(), 0).unwrap();
        let lo = SimConfig {
            gamma_th_db: -300.0,
            ..small()
        };
        assert_eq!(estimate_outage(&lo, &topo).unwrap().p_out, 0.0);
        let hi = SimConfig {
            gamma_th_db: 300.0,
            ..small()
        };
        assert_eq!(estimate_outage(&hi, &topo).unwrap().p_out, 1.0);
    }

    #[test]
    fn single_deployment_average_equals_estimate() {
        let cfg = SimConfig {
            n_deployments: 1,
            ..small()
        };
        let (topo, _) = sample_deployment(&cfg, 0).unwrap();
        assert_eq!(
            average_outage(&cfg).unwrap(),
            estimate_outage(&cfg, &topo).unwrap()
        );
    }

    #[test]
    fn outage_monotone_in_threshold() {
        let (topo, _) = sample_deployment(&small(), 1).unwrap();
        let mut prev = 0.0;
        for g in [0.0, 5.0, 9.0, 12.0, 20.0] {
            let p = estimate_outage_at(
                &SimConfig {
                    gamma_th_db: g,
                    ..small()
                },
                &topo,
                1,
            )
            .unwrap()
            .p_out;
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn rejection_enforces_alpha_c() {
        let cfg = SimConfig {
            alpha_c: 6f64.to_radians(),
            ..small()
        };
        for dep in 0..10 {
            let (t, _) = sample_deployment(&cfg, dep).unwrap();
            assert!(min_intra_deviation(&t) >= cfg.alpha_c);
        }
    }

    #[test]
    fn zero_vibration_sweep_is_deterministic_evaluation() {
        let cfg = SimConfig {
            vibration: VibrationModel::isotropic(0.0),
            n_vibration_draws: 100,
            ..small()
        };
        let (topo, _) = sample_deployment(&cfg, 0).unwrap();
        let rows = run_phi_sweep(&cfg, &topo, 0, &[0.0, 0.3]).unwrap();
        let ant = cfg.build_antennas().unwrap();
        let rolls = roll_angles(&cfg, 0, topo.sbss().len());
        for r in rows {
            let ctx = LinkContext::from_topology(&topo, &rolls, r.phi_s11, 0.0).unwrap();
            let b = PreparedLink::new(&ctx, &ant, &cfg.channel)
                .unwrap()
                .breakdown(&[VibrationDraw::default(); 7]);
            assert!((r.mean_inter_w / b.inter_w - 1.0).abs() < 1e-12);
            assert!((r.mean_intra_w / b.intra_w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn digest_ignores_workers() {
        let a = small();
        assert_eq!(
            a.digest(),
            SimConfig {
                workers: 7,
                ..a.clone()
            }
            .digest()
        );
        assert_ne!(
            a.digest(),
            SimConfig {
                seed: 2,
                ..a.clone()
            }
            .digest()
        );
    }
}
