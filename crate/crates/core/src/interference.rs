//! Intra-cell and inter-cell interference terms and the target-link SINR.
//!
//! [`LinkContext`] holds the angles of one deployment. The free functions
//! evaluate single terms directly; [`PreparedLink`] caches per-deployment
//! constants for the Monte-Carlo hot loop.

use crate::antenna::PatternEvaluator;
use crate::channel::{
    los_probability, noise_power, path_loss, received_power, ChannelParams, VibrationDraw,
};
use crate::error::{Error, Result};
use crate::geometry::{
    composite_angle, inter_cell_geometry, intra_deviation, pointing_angles, Topology,
};
use std::f64::consts::FRAC_PI_2;

/// UAV-side and SBS-side arrays.
#[derive(Debug, Clone)]
pub struct Antennas {
    pub uav: PatternEvaluator,
    pub sbs: PatternEvaluator,
}

/// A neighbouring beam of the target UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntraLink {
    pub sbs: usize,
    /// `(θ_x11 − θ_x1j, θ_y11 − θ_y1j)`.
    pub offset: (f64, f64),
    /// Roll of this beam's array about its boresight.
    pub roll: f64,
}

/// A beam of another UAV as seen by the target SBS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterLink {
    pub uav: usize,
    pub sbs: usize,
    pub distance: f64,
    pub elevation: f64,
    /// Offset of the interfering UAV from the target SBS boresight.
    pub sbs_offset: (f64, f64),
    /// Offset of the target SBS from this beam's boresight.
    pub uav_offset: (f64, f64),
    pub roll: f64,
}

/// Angles and distances of one deployment relative to the target link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkContext {
    pub target_uav: usize,
    pub target_length: f64,
    pub n_uav: usize,
    pub intra: Vec<IntraLink>,
    pub inter: Vec<InterLink>,
    /// Roll of the target SBS array.
    pub phi_s11: f64,
}

impl LinkContext {
    /// Builds the context from a topology. `rolls` holds one roll per SBS id;
    /// neighbours closer than `merge_below` (radians) to the target beam are
    /// treated as merged with it and left out.
    pub fn from_topology(
        topo: &Topology,
        rolls: &[f64],
        phi_s11: f64,
        merge_below: f64,
    ) -> Result<Self> {
        if rolls.len() != topo.sbss().len() {
            return Err(Error::Config(format!(
                "need {} roll angles, got {}",
                topo.sbss().len(),
                rolls.len()
            )));
        }
        let t = topo.target();
        let tu = t.uav;
        let u1 = topo.target_uav();
        let intra = topo
            .cell(tu)
            .filter(|s| s.id != t.id)
            .map(|s| IntraLink {
                sbs: s.id,
                offset: intra_deviation(topo, s.id),
                roll: rolls[s.id],
            })
            .filter(|l| composite_angle(l.offset.0, l.offset.1) >= merge_below)
            .collect();
        let mut inter = Vec::new();
        for u in topo.uavs().iter().filter(|u| u.id != tu) {
            let g = inter_cell_geometry(topo, u.id)?;
            for s in topo.cell(u.id) {
                let beam = pointing_angles(u, s.x, s.y);
                inter.push(InterLink {
                    uav: u.id,
                    sbs: s.id,
                    distance: g.distance,
                    elevation: g.elevation,
                    sbs_offset: g.sbs_offset,
                    uav_offset: (
                        g.bearing.theta_x - beam.theta_x,
                        g.bearing.theta_y - beam.theta_y,
                    ),
                    roll: rolls[s.id],
                });
            }
        }
        Ok(Self {
            target_uav: tu,
            target_length: (t.x - u1.x).hypot(t.y - u1.y).hypot(u1.h),
            n_uav: topo.uavs().len(),
            intra,
            inter,
            phi_s11,
        })
    }
}

/// Power budget of the target link for one draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub signal_w: f64,
    pub intra_w: f64,
    pub inter_w: f64,
    pub noise_w: f64,
    pub sinr: f64,
}

impl SinrBreakdown {
    fn new(signal_w: f64, intra_w: f64, inter_w: f64, noise_w: f64) -> Self {
        Self {
            signal_w,
            intra_w,
            inter_w,
            noise_w,
            sinr: signal_w / ((intra_w + noise_w) + inter_w),
        }
    }
}

/// Polar angle off boresight after subtracting the vibration tilt from a beam offset.
fn tilted_angle(offset: (f64, f64), d: VibrationDraw) -> f64 {
    composite_angle(offset.0 - d.theta_x, offset.1 - d.theta_y)
}

pub fn intra_cell_term(
    ctx: &LinkContext,
    j: usize,
    draw: VibrationDraw,
    ant: &Antennas,
    ch: &ChannelParams,
) -> Result<f64> {
    let l = ctx
        .intra
        .get(j)
        .ok_or_else(|| Error::Config(format!("intra link {j} out of range")))?;
    let g = ant.uav.gain(tilted_angle(l.offset, draw), l.roll)?;
    Ok(ch.tx_power_w * path_loss(ch, ctx.target_length)? * ant.sbs.boresight_gain() * g)
}

pub fn intra_cell_total(
    ctx: &LinkContext,
    draw: VibrationDraw,
    ant: &Antennas,
    ch: &ChannelParams,
) -> Result<f64> {
    let mut s = 0.0;
    for j in 0..ctx.intra.len() {
        s += intra_cell_term(ctx, j, draw, ant, ch)?;
    }
    Ok(s)
}

/// Inter-cell term with an explicit LoS weight (probability or 0/1 indicator).
pub fn inter_cell_term_weighted(
    ctx: &LinkContext,
    k: usize,
    draw: VibrationDraw,
    ant: &Antennas,
    ch: &ChannelParams,
    los_weight: f64,
) -> Result<f64> {
    let l = ctx
        .inter
        .get(k)
        .ok_or_else(|| Error::Config(format!("inter link {k} out of range")))?;
    let gs = ant
        .sbs
        .gain(composite_angle(l.sbs_offset.0, l.sbs_offset.1), ctx.phi_s11)?;
    let gu = ant.uav.gain(tilted_angle(l.uav_offset, draw), l.roll)?;
    Ok(ch.tx_power_w * path_loss(ch, l.distance)? * gs * gu * los_weight)
}

/// Inter-cell term from link `k`, weighted by the LoS probability of its UAV.
pub fn inter_cell_term(
    ctx: &LinkContext,
    k: usize,
    draw: VibrationDraw,
    ant: &Antennas,
    ch: &ChannelParams,
) -> Result<f64> {
    let e = ctx
        .inter
        .get(k)
        .ok_or_else(|| Error::Config(format!("inter link {k} out of range")))?
        .elevation;
    inter_cell_term_weighted(ctx, k, draw, ant, ch, los_probability(ch, e))
}

/// Full breakdown with one draw per UAV (indexed by UAV id), LoS as expected weight.
pub fn sinr(
    ctx: &LinkContext,
    draws: &[VibrationDraw],
    ant: &Antennas,
    ch: &ChannelParams,
) -> Result<SinrBreakdown> {
    if draws.len() != ctx.n_uav {
        return Err(Error::Config(format!(
            "need {} vibration draws, got {}",
            ctx.n_uav,
            draws.len()
        )));
    }
    let d1 = draws[ctx.target_uav];
    let signal = received_power(ch, ctx.target_length, &ant.uav, &ant.sbs, d1)?;
    let intra = intra_cell_total(ctx, d1, ant, ch)?;
    let mut inter = 0.0;
    for (k, l) in ctx.inter.iter().enumerate() {
        inter += inter_cell_term(ctx, k, draws[l.uav], ant, ch)?;
    }
    Ok(SinrBreakdown::new(signal, intra, inter, noise_power(ch)))
}

/// A per-axis beam offset with its tangent cached.
#[derive(Debug, Clone, Copy)]
struct Axis {
    angle: f64,
    tan: f64,
    regular: bool,
}

impl Axis {
    fn new(angle: f64) -> Self {
        let regular = angle.abs() < FRAC_PI_2;
        Self {
            angle,
            tan: if regular { angle.tan() } else { 0.0 },
            regular,
        }
    }

    /// `tan(angle − t)`, or `None` when the difference leaves `(-π/2, π/2)`.
    #[inline]
    fn shifted(&self, t: Tilt) -> Option<f64> {
        if self.regular && t.regular {
            let den = 1.0 + self.tan * t.tan;
            if den <= 0.0 {
                None
            } else {
                Some((self.tan - t.tan) / den)
            }
        } else {
            let d = self.angle - t.angle;
            (d.abs() < FRAC_PI_2).then(|| d.tan())
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Tilt {
    angle: f64,
    tan: f64,
    regular: bool,
}

impl Tilt {
    #[inline]
    fn new(angle: f64) -> Self {
        let regular = angle.abs() < FRAC_PI_2;
        Self {
            angle,
            tan: if regular { angle.tan() } else { 0.0 },
            regular,
        }
    }
}

/// Sines and cosines of the vibration tilt of one UAV.
#[derive(Debug, Clone, Copy)]
pub struct DrawTrig {
    x: Tilt,
    y: Tilt,
}

impl DrawTrig {
    #[inline]
    pub fn new(d: VibrationDraw) -> Self {
        Self {
            x: Tilt::new(d.theta_x),
            y: Tilt::new(d.theta_y),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct FastBeam {
    x: Axis,
    y: Axis,
    cos_roll: f64,
    sin_roll: f64,
}

impl FastBeam {
    fn new(offset: (f64, f64), roll: f64) -> Self {
        let (s, c) = roll.sin_cos();
        Self {
            x: Axis::new(offset.0),
            y: Axis::new(offset.1),
            cos_roll: c,
            sin_roll: s,
        }
    }

    #[inline]
    fn gain(&self, ev: &PatternEvaluator, t: &DrawTrig) -> f64 {
        match (self.x.shifted(t.x), self.y.shifted(t.y)) {
            (Some(a), Some(b)) => {
                let tt = a * a + b * b;
                let c = 1.0 / (1.0 + tt).sqrt();
                ev.gain_dir(tt.sqrt() * c, c, self.cos_roll, self.sin_roll)
            }
            _ => ev.gain_dir(1.0, 0.0, self.cos_roll, self.sin_roll),
        }
    }
}

/// Interfering links of one non-target UAV.
#[derive(Debug, Clone)]
pub struct InterGroup {
    pub uav: usize,
    pub los_probability: f64,
    beams: Vec<FastBeam>,
    // P_t |h_L|² G_s(θ'', φ_S11) per beam, LoS excluded
    coupling: Vec<f64>,
    // P_t |h_L|², and the SBS-side polar angle per beam, for re-tuning φ_S11
    base: f64,
    sbs_angle: f64,
}

/// Per-deployment constants for fast repeated SINR evaluation.
#[derive(Debug, Clone)]
pub struct PreparedLink {
    uav: PatternEvaluator,
    sbs: PatternEvaluator,
    signal_scale: f64,
    noise: f64,
    intra: Vec<FastBeam>,
    groups: Vec<InterGroup>,
    target_uav: usize,
    n_uav: usize,
}

impl PreparedLink {
    pub fn new(ctx: &LinkContext, ant: &Antennas, ch: &ChannelParams) -> Result<Self> {
        ch.validate()?;
        let signal_scale =
            ch.tx_power_w * path_loss(ch, ctx.target_length)? * ant.sbs.boresight_gain();
        let intra = ctx
            .intra
            .iter()
            .map(|l| FastBeam::new(l.offset, l.roll))
            .collect();
        let mut groups: Vec<InterGroup> = Vec::new();
        for l in &ctx.inter {
            if groups.last().map(|g| g.uav) != Some(l.uav) {
                groups.push(InterGroup {
                    uav: l.uav,
                    los_probability: los_probability(ch, l.elevation),
                    beams: Vec::new(),
                    coupling: Vec::new(),
                    base: ch.tx_power_w * path_loss(ch, l.distance)?,
                    sbs_angle: composite_angle(l.sbs_offset.0, l.sbs_offset.1),
                });
            }
            let g = groups.last_mut().expect("pushed above");
            g.beams.push(FastBeam::new(l.uav_offset, l.roll));
            g.coupling.push(0.0);
        }
        let mut p = Self {
            uav: ant.uav.clone(),
            sbs: ant.sbs.clone(),
            signal_scale,
            noise: noise_power(ch),
            intra,
            groups,
            target_uav: ctx.target_uav,
            n_uav: ctx.n_uav,
        };
        p.set_phi_s11(ctx.phi_s11)?;
        Ok(p)
    }

    /// Re-evaluates the target SBS gain towards every interferer for a new roll.
    pub fn set_phi_s11(&mut self, phi: f64) -> Result<()> {
        for g in &mut self.groups {
            let gs = self.sbs.gain(g.sbs_angle, phi)?;
            for c in &mut g.coupling {
                *c = g.base * gs;
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> &[InterGroup] {
        &self.groups
    }

    pub fn target_uav(&self) -> usize {
        self.target_uav
    }

    pub fn n_uav(&self) -> usize {
        self.n_uav
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn signal(&self, t: &DrawTrig) -> f64 {
        let (tx, ty) = match (t.x.regular, t.y.regular) {
            (true, true) => (t.x.tan, t.y.tan),
            _ => return self.signal_scale * self.uav.gain_dir(1.0, 0.0, 1.0, 0.0),
        };
        let tt = tx * tx + ty * ty;
        let c = 1.0 / (1.0 + tt).sqrt();
        let r = tt.sqrt();
        let (cp, sp) = if r > 0.0 {
            (tx / r, ty / r)
        } else {
            (1.0, 0.0)
        };
        self.signal_scale * self.uav.gain_dir(r * c, c, cp, sp)
    }

    pub fn intra(&self, t: &DrawTrig) -> f64 {
        let mut s = 0.0;
        for b in &self.intra {
            s += self.signal_scale * b.gain(&self.uav, t);
        }
        s
    }

    /// Interference from group `g` with LoS weight `los` (not applied by this call otherwise).
    pub fn inter_group(&self, g: usize, t: &DrawTrig, los: f64) -> f64 {
        let grp = &self.groups[g];
        let mut s = 0.0;
        for (b, c) in grp.beams.iter().zip(&grp.coupling) {
            s += c * b.gain(&self.uav, t) * los;
        }
        s
    }

    /// UAV-side gains of group `g`'s beams, one per beam, for sweep bookkeeping.
    pub fn uav_side_gains(&self, g: usize, t: &DrawTrig, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.groups[g].beams.iter().map(|b| b.gain(&self.uav, t)));
    }

    /// `P_t |h_L|² G_s(θ'', φ)` of group `g` at SBS roll `phi`.
    pub fn sbs_coupling(&self, g: usize, phi: f64) -> Result<f64> {
        let grp = &self.groups[g];
        Ok(grp.base * self.sbs.gain(grp.sbs_angle, phi)?)
    }

    /// Upper bound on the summed inter-cell power with unit LoS weights.
    pub fn inter_ceiling(&self) -> f64 {
        let peak = self.uav.boresight_gain();
        let s: f64 = self
            .groups
            .iter()
            .flat_map(|g| g.coupling.iter())
            .map(|c| c * peak)
            .sum();
        s * (1.0 + 1e-9)
    }

    /// Breakdown with expected-value LoS weights; `draws` indexed by UAV id.
    pub fn breakdown(&self, draws: &[VibrationDraw]) -> SinrBreakdown {
        let t1 = DrawTrig::new(draws[self.target_uav]);
        let signal = self.signal(&t1);
        let intra = self.intra(&t1);
        let mut inter = 0.0;
        for (g, grp) in self.groups.iter().enumerate() {
            inter += self.inter_group(g, &DrawTrig::new(draws[grp.uav]), grp.los_probability);
        }
        SinrBreakdown::new(signal, intra, inter, self.noise)
    }
}
