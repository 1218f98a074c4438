//! Deployment geometry: UAV and SBS placement, pointing angles and the
//! composite spatial angle built from per-axis deviations.

use crate::error::{domain, ensure_finite, Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uav {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Altitude above the SBS plane in metres.
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sbs {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Serving UAV id.
    pub uav: usize,
}

/// A validated deployment with one designated target SBS.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    uavs: Vec<Uav>,
    sbss: Vec<Sbs>,
    target: usize,
}

impl Topology {
    /// Ids must equal positions in their vectors; every SBS names an existing UAV.
    pub fn new(uavs: Vec<Uav>, sbss: Vec<Sbs>, target: usize) -> Result<Self> {
        if uavs.is_empty() {
            return Err(Error::Config("topology needs at least one UAV".into()));
        }
        for (i, u) in uavs.iter().enumerate() {
            if u.id != i {
                return Err(Error::Config(format!(
                    "UAV at position {i} has id {}",
                    u.id
                )));
            }
            if !(u.x.is_finite() && u.y.is_finite() && u.h.is_finite() && u.h > 0.0) {
                return Err(Error::Config(format!(
                    "UAV {i} needs finite coordinates and h > 0"
                )));
            }
        }
        for (j, s) in sbss.iter().enumerate() {
            if s.id != j {
                return Err(Error::Config(format!(
                    "SBS at position {j} has id {}",
                    s.id
                )));
            }
            if !(s.x.is_finite() && s.y.is_finite()) {
                return Err(Error::Config(format!("SBS {j} has non-finite coordinates")));
            }
            if s.uav >= uavs.len() {
                return Err(Error::Config(format!(
                    "SBS {j} references missing UAV {}",
                    s.uav
                )));
            }
        }
        if target >= sbss.len() {
            return Err(Error::Config(format!("target SBS {target} does not exist")));
        }
        Ok(Self { uavs, sbss, target })
    }

    pub fn uavs(&self) -> &[Uav] {
        &self.uavs
    }

    pub fn sbss(&self) -> &[Sbs] {
        &self.sbss
    }

    pub fn target(&self) -> &Sbs {
        &self.sbss[self.target]
    }

    pub fn target_id(&self) -> usize {
        self.target
    }

    pub fn target_uav(&self) -> &Uav {
        &self.uavs[self.sbss[self.target].uav]
    }

    /// SBSs served by `uav`, in id order.
    pub fn cell(&self, uav: usize) -> impl Iterator<Item = &Sbs> {
        self.sbss.iter().filter(move |s| s.uav == uav)
    }
}

/// Per-axis pointing angles from a UAV towards a ground point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointingAngles {
    pub theta_x: f64,
    pub theta_y: f64,
}

/// Angles `atan((x_s - x_u)/h)`, `atan((y_s - y_u)/h)` from `uav` to the point `(x, y)`.
pub fn pointing_angles(uav: &Uav, x: f64, y: f64) -> PointingAngles {
    PointingAngles {
        theta_x: ((x - uav.x) / uav.h).atan(),
        theta_y: ((y - uav.y) / uav.h).atan(),
    }
}

/// Composite angle `atan(sqrt(tan² dx + tan² dy))` from per-axis deviations.
///
/// Errors if either component lies outside `(-π/2, π/2)`.
pub fn spatial_angle(dx: f64, dy: f64) -> Result<f64> {
    ensure_finite("spatial_angle", "dx", dx)?;
    ensure_finite("spatial_angle", "dy", dy)?;
    if dx.abs() >= FRAC_PI_2 || dy.abs() >= FRAC_PI_2 {
        return Err(domain(
            "spatial_angle",
            format!("components must lie in (-pi/2, pi/2), got ({dx}, {dy})"),
        ));
    }
    Ok(dx.tan().hypot(dy.tan()).atan())
}

/// Like [`spatial_angle`] but maps out-of-range components to endfire (π/2).
pub fn composite_angle(dx: f64, dy: f64) -> f64 {
    if dx.abs() >= FRAC_PI_2 || dy.abs() >= FRAC_PI_2 {
        FRAC_PI_2
    } else {
        dx.tan().hypot(dy.tan()).atan()
    }
}

/// Beam deviation `θ_d` between the target SBS and another SBS of the target cell,
/// as seen from the target UAV.
pub fn intra_deviation(topo: &Topology, sbs: usize) -> (f64, f64) {
    let u = topo.target_uav();
    let t = topo.target();
    let s = &topo.sbss[sbs];
    let a = pointing_angles(u, t.x, t.y);
    let b = pointing_angles(u, s.x, s.y);
    (a.theta_x - b.theta_x, a.theta_y - b.theta_y)
}

/// Geometry of the path from a non-target UAV to the target SBS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterCellGeometry {
    pub uav: usize,
    /// Slant range in metres.
    pub distance: f64,
    /// Elevation of the UAV seen from the target SBS, radians.
    pub elevation: f64,
    /// Pointing angles from the UAV to the target SBS.
    pub bearing: PointingAngles,
    /// Per-axis offset between the target SBS boresight (towards its own UAV)
    /// and the direction of this UAV.
    pub sbs_offset: (f64, f64),
}

pub fn inter_cell_geometry(topo: &Topology, uav: usize) -> Result<InterCellGeometry> {
    let ui = topo
        .uavs
        .get(uav)
        .ok_or_else(|| Error::Config(format!("UAV {uav} does not exist")))?;
    let t = topo.target();
    let u1 = topo.target_uav();
    let dx = t.x - ui.x;
    let dy = t.y - ui.y;
    let horiz = dx.hypot(dy);
    let bearing = pointing_angles(ui, t.x, t.y);
    let own = pointing_angles(u1, t.x, t.y);
    Ok(InterCellGeometry {
        uav,
        distance: horiz.hypot(ui.h),
        elevation: ui.h.atan2(horiz),
        bearing,
        sbs_offset: (own.theta_x - bearing.theta_x, own.theta_y - bearing.theta_y),
    })
}

/// Smallest intra-cell beam deviation at the target UAV (π/2 if the cell has no other SBS).
pub fn min_intra_deviation(topo: &Topology) -> f64 {
    let tu = topo.target().uav;
    topo.cell(tu)
        .filter(|s| s.id != topo.target)
        .map(|s| {
            let (dx, dy) = intra_deviation(topo, s.id);
            composite_angle(dx, dy)
        })
        .fold(FRAC_PI_2, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// SBSs uniform over the service disk, UAVs at k-means centroids.
    Clustered,
    /// Target UAV at the origin, neighbours on a hexagonal lattice, SBSs
    /// drawn inside each coverage disk.
    Cellular,
}

/// Parameters of a random deployment. Angles in radians, lengths in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentSpec {
    pub layout: Layout,
    pub n_sbs: usize,
    pub n_uav: usize,
    pub area_radius: f64,
    pub uav_height_min: f64,
    pub uav_height_max: f64,
    pub per_uav_links: usize,
    /// Ground coverage radius; exclusive with `max_link_length`.
    pub coverage_radius: Option<f64>,
    pub max_link_length: Option<f64>,
    /// Pins the target SBS at this angle from the target UAV (cellular only).
    pub target_theta: Option<f64>,
}

impl DeploymentSpec {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.n_uav == 0 {
            errs.push("n_uav must be at least 1".to_string());
        }
        if self.per_uav_links == 0 {
            errs.push("per_uav_links must be at least 1".to_string());
        }
        if self.n_sbs < self.n_uav * self.per_uav_links {
            errs.push(format!(
                "n_sbs = {} cannot give {} UAVs {} links each",
                self.n_sbs, self.n_uav, self.per_uav_links
            ));
        }
        if !(self.uav_height_min.is_finite() && self.uav_height_min > 0.0) {
            errs.push("uav height minimum must be positive".to_string());
        }
        if !(self.uav_height_max.is_finite() && self.uav_height_max >= self.uav_height_min) {
            errs.push("uav height maximum must be >= minimum".to_string());
        }
        if self.layout == Layout::Clustered
            && !(self.area_radius.is_finite() && self.area_radius > 0.0)
        {
            errs.push("area radius must be positive".to_string());
        }
        match (self.coverage_radius, self.max_link_length) {
            (Some(r), None) if r.is_finite() && r > 0.0 => {}
            (None, Some(l)) if l.is_finite() && l > self.uav_height_max => {}
            (None, None) if self.layout == Layout::Clustered => {}
            (Some(_), Some(_)) => {
                errs.push("give either coverage radius or max link length, not both".into())
            }
            _ => errs.push(
                "coverage radius must be positive, or max link length must exceed the UAV height"
                    .into(),
            ),
        }
        if let Some(t) = self.target_theta {
            if self.layout != Layout::Cellular {
                errs.push("target angle can only be pinned in the cellular layout".into());
            } else if !(t.is_finite() && (0.0..FRAC_PI_2).contains(&t)) {
                errs.push("target angle must lie in [0, 90) degrees".into());
            } else if let Ok(r) = self.coverage_at(self.uav_height_min) {
                if self.uav_height_max * t.tan() > r {
                    errs.push("pinned target falls outside the coverage disk".into());
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    /// Ground coverage radius for a UAV at height `h`.
    pub fn coverage_at(&self, h: f64) -> Result<f64> {
        match (self.coverage_radius, self.max_link_length) {
            (Some(r), _) => Ok(r),
            (None, Some(l)) if l > h => Ok((l * l - h * h).sqrt()),
            _ => Err(Error::Config("coverage radius undefined".into())),
        }
    }
}

/// Point uniform over a disk of radius `r` centred at the origin.
pub fn sample_uniform_disk<R: Rng + ?Sized>(rng: &mut R, r: f64) -> (f64, f64) {
    let rad = r * rng.gen::<f64>().sqrt();
    let ang = 2.0 * PI * rng.gen::<f64>();
    (rad * ang.cos(), rad * ang.sin())
}

/// Point with abscissa uniform on `[-r, r]` and ordinate uniform on the chord.
pub fn sample_marginal_uniform<R: Rng + ?Sized>(rng: &mut R, r: f64) -> (f64, f64) {
    let x = r * (2.0 * rng.gen::<f64>() - 1.0);
    let half = (r * r - x * x).max(0.0).sqrt();
    (x, half * (2.0 * rng.gen::<f64>() - 1.0))
}

fn kmeans<R: Rng + ?Sized>(rng: &mut R, pts: &[(f64, f64)], k: usize) -> Vec<(f64, f64)> {
    let d2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let mut centers = vec![pts[rng.gen_range(0..pts.len())]];
    while centers.len() < k {
        let w: Vec<f64> = pts
            .iter()
            .map(|&p| {
                centers
                    .iter()
                    .map(|&c| d2(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = w.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = pts.len() - 1;
            for (i, wi) in w.iter().enumerate() {
                if u < *wi {
                    pick = i;
                    break;
                }
                u -= wi;
            }
            pick
        } else {
            rng.gen_range(0..pts.len())
        };
        centers.push(pts[idx]);
    }
    let mut assign = vec![usize::MAX; pts.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (i, &p) in pts.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| d2(p, centers[a]).total_cmp(&d2(p, centers[b])))
                .expect("k >= 1");
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        let mut sum = vec![(0.0, 0.0, 0usize); k];
        for (i, &p) in pts.iter().enumerate() {
            let s = &mut sum[assign[i]];
            s.0 += p.0;
            s.1 += p.1;
            s.2 += 1;
        }
        for (c, s) in centers.iter_mut().zip(&sum) {
            if s.2 > 0 {
                *c = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
        if !changed {
            break;
        }
    }
    centers
}

/// Hexagonal lattice sites ordered by ring, then by angle; site 0 is the origin.
fn hex_sites(count: usize, spacing: f64) -> Vec<(f64, f64)> {
    let mut rings = 0i64;
    while 1 + 3 * rings * (rings + 1) < count as i64 {
        rings += 1;
    }
    let mut sites = Vec::new();
    for q in -rings..=rings {
        for r in -rings..=rings {
            let s = -q - r;
            let ring = q.abs().max(r.abs()).max(s.abs());
            if ring > rings {
                continue;
            }
            let x = spacing * (q as f64 + 0.5 * r as f64);
            let y = spacing * (r as f64 * 3f64.sqrt() / 2.0);
            let ang = if ring == 0 {
                0.0
            } else {
                y.atan2(x).rem_euclid(2.0 * PI)
            };
            sites.push((ring, ang, x, y));
        }
    }
    sites.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    sites.into_iter().take(count).map(|s| (s.2, s.3)).collect()
}

/// Draws a deployment; the target UAV is always UAV 0.
pub fn deploy_random<R: Rng + ?Sized>(spec: &DeploymentSpec, rng: &mut R) -> Result<Topology> {
    spec.validate()?;
    let heights: Vec<f64> = (0..spec.n_uav)
        .map(|_| {
            if spec.uav_height_max > spec.uav_height_min {
                rng.gen_range(spec.uav_height_min..spec.uav_height_max)
            } else {
                spec.uav_height_min
            }
        })
        .collect();
    match spec.layout {
        Layout::Clustered => deploy_clustered(spec, &heights, rng),
        Layout::Cellular => deploy_cellular(spec, &heights, rng),
    }
}

fn deploy_clustered<R: Rng + ?Sized>(
    spec: &DeploymentSpec,
    heights: &[f64],
    rng: &mut R,
) -> Result<Topology> {
    let pts: Vec<(f64, f64)> = (0..spec.n_sbs)
        .map(|_| sample_uniform_disk(rng, spec.area_radius))
        .collect();
    let centers = kmeans(rng, &pts, spec.n_uav);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(pts.len() * centers.len());
    for (u, c) in centers.iter().enumerate() {
        for (s, p) in pts.iter().enumerate() {
            let d = ((p.0 - c.0).powi(2) + (p.1 - c.1).powi(2) + heights[u].powi(2)).sqrt();
            pairs.push((d, u, s));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut owner = vec![usize::MAX; pts.len()];
    let mut load = vec![0usize; centers.len()];
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
    for (_, u, s) in pairs {
        if owner[s] == usize::MAX && load[u] < spec.per_uav_links {
            owner[s] = u;
            load[u] += 1;
            cells[u].push(s);
        }
    }
    // the target cell becomes UAV 0
    let total: usize = cells.iter().map(Vec::len).sum();
    let pick = rng.gen_range(0..total);
    let (mut tu, mut acc) = (0, 0);
    for (u, c) in cells.iter().enumerate() {
        if pick < acc + c.len() {
            tu = u;
            break;
        }
        acc += c.len();
    }
    let t_in_cell = pick - acc;
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.swap(0, tu);
    let mut uavs = Vec::new();
    let mut sbss = Vec::new();
    let mut target = 0;
    for (new_u, &old_u) in order.iter().enumerate() {
        uavs.push(Uav {
            id: new_u,
            x: centers[old_u].0,
            y: centers[old_u].1,
            h: heights[old_u],
        });
        for (k, &s) in cells[old_u].iter().enumerate() {
            if new_u == 0 && k == t_in_cell {
                target = sbss.len();
            }
            sbss.push(Sbs {
                id: sbss.len(),
                x: pts[s].0,
                y: pts[s].1,
                uav: new_u,
            });
        }
    }
    Topology::new(uavs, sbss, target)
}

fn deploy_cellular<R: Rng + ?Sized>(
    spec: &DeploymentSpec,
    heights: &[f64],
    rng: &mut R,
) -> Result<Topology> {
    let radii = heights
        .iter()
        .map(|&h| spec.coverage_at(h))
        .collect::<Result<Vec<_>>>()?;
    let spacing = 2.0 * radii.iter().copied().fold(0.0, f64::max);
    let sites = hex_sites(spec.n_uav, spacing);
    let mut uavs = Vec::new();
    let mut sbss = Vec::new();
    for (u, (&(x, y), (&h, &r))) in sites.iter().zip(heights.iter().zip(&radii)).enumerate() {
        uavs.push(Uav { id: u, x, y, h });
        for k in 0..spec.per_uav_links {
            let (mut dx, mut dy) = sample_marginal_uniform(rng, r);
            if u == 0 && k == 0 {
                if let Some(t) = spec.target_theta {
                    dx = h * t.tan();
                    dy = 0.0;
                }
            }
            sbss.push(Sbs {
                id: sbss.len(),
                x: x + dx,
                y: y + dy,
                uav: u,
            });
        }
    }
    Topology::new(uavs, sbss, 0)
}

const CSV_MAGIC: &str = "# fronthaul-topology v1";

#[derive(Serialize, Deserialize)]
struct Row {
    kind: String,
    id: usize,
    x: f64,
    y: f64,
    z: f64,
    assoc: Option<usize>,
}

/// Writes the topology as CSV: a version line, a `# target=` line, then one row per node.
pub fn write_topology<W: Write>(topo: &Topology, mut w: W) -> Result<()> {
    writeln!(w, "{CSV_MAGIC}")?;
    writeln!(w, "# target={}", topo.target)?;
    let mut cw = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    for u in &topo.uavs {
        cw.serialize(Row {
            kind: "uav".into(),
            id: u.id,
            x: u.x,
            y: u.y,
            z: u.h,
            assoc: None,
        })
        .map_err(err)?;
    }
    for s in &topo.sbss {
        cw.serialize(Row {
            kind: "sbs".into(),
            id: s.id,
            x: s.x,
            y: s.y,
            z: 0.0,
            assoc: Some(s.uav),
        })
        .map_err(err)?;
    }
    cw.flush()?;
    Ok(())
}

pub fn read_topology<R: BufRead>(r: R) -> Result<Topology> {
    let mut target = None;
    let mut body = String::new();
    let mut saw_magic = false;
    for line in r.lines() {
        let line = line?;
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if line.trim() == CSV_MAGIC {
                saw_magic = true;
            } else if let Some(t) = meta.strip_prefix("target=") {
                target = Some(
                    t.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::Parse(format!("target: {e}")))?,
                );
            }
            continue;
        }
        body.push_str(&line);
        body.push('\n');
    }
    if !saw_magic {
        return Err(Error::Parse("missing topology version header".into()));
    }
    let target = target.ok_or_else(|| Error::Parse("missing '# target=' line".into()))?;
    let mut uavs = Vec::new();
    let mut sbss = Vec::new();
    for row in csv::Reader::from_reader(body.as_bytes()).deserialize::<Row>() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        match row.kind.as_str() {
            "uav" => uavs.push(Uav {
                id: row.id,
                x: row.x,
                y: row.y,
                h: row.z,
            }),
            "sbs" => sbss.push(Sbs {
                id: row.id,
                x: row.x,
                y: row.y,
                uav: row
                    .assoc
                    .ok_or_else(|| Error::Parse(format!("sbs {} lacks assoc", row.id)))?,
            }),
            k => return Err(Error::Parse(format!("unknown node kind '{k}'"))),
        }
    }
    uavs.sort_by_key(|u| u.id);
    sbss.sort_by_key(|s| s.id);
    Topology::new(uavs, sbss, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cellular() -> DeploymentSpec {
        DeploymentSpec {
            layout: Layout::Cellular,
            n_sbs: 70,
            n_uav: 7,
            area_radius: 1500.0,
            uav_height_min: 100.0,
            uav_height_max: 100.0,
            per_uav_links: 10,
            coverage_radius: Some(400.0),
            max_link_length: None,
            target_theta: Some(40f64.to_radians()),
        }
    }

    fn clustered() -> DeploymentSpec {
        DeploymentSpec {
            layout: Layout::Clustered,
            n_sbs: 100,
            n_uav: 10,
            area_radius: 1500.0,
            uav_height_min: 80.0,
            uav_height_max: 110.0,
            per_uav_links: 8,
            coverage_radius: None,
            max_link_length: None,
            target_theta: None,
        }
    }

    #[test]
    fn spatial_angle_reference() {
        // atan(sqrt(tan²0.1 + tan²0.2)) evaluated independently
        let want = (0.1f64.tan().powi(2) + 0.2f64.tan().powi(2)).sqrt().atan();
        assert_eq!(spatial_angle(0.1, 0.2).unwrap(), want);
        assert!((spatial_angle(0.3, 0.0).unwrap() - 0.3).abs() < 1e-15);
        assert!(spatial_angle(FRAC_PI_2, 0.0).is_err());
        assert_eq!(composite_angle(2.0, 0.1), FRAC_PI_2);
    }

    #[test]
    fn pointing_angle_signs() {
        let u = Uav {
            id: 0,
            x: 0.0,
            y: 0.0,
            h: 100.0,
        };
        let p = pointing_angles(&u, 100.0, -100.0);
        assert!((p.theta_x - PI / 4.0).abs() < 1e-15);
        assert!((p.theta_y + PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn cellular_layout_places_pinned_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = deploy_random(&cellular(), &mut rng).unwrap();
        assert_eq!(t.uavs().len(), 7);
        assert_eq!(t.sbss().len(), 70);
        let a = pointing_angles(t.target_uav(), t.target().x, t.target().y);
        assert!((a.theta_x - 40f64.to_radians()).abs() < 1e-12);
        for s in t.sbss() {
            let u = &t.uavs()[s.uav];
            assert!((s.x - u.x).hypot(s.y - u.y) <= 400.0 + 1e-9);
        }
        // neighbouring sites are one lattice step apart
        let d = t.uavs()[1].x.hypot(t.uavs()[1].y);
        assert!((d - 800.0).abs() < 1e-9);
    }

    #[test]
    fn clustered_layout_association() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = deploy_random(&clustered(), &mut rng).unwrap();
        assert_eq!(t.uavs().len(), 10);
        assert_eq!(t.sbss().len(), 80);
        for u in 0..10 {
            assert_eq!(t.cell(u).count(), 8);
        }
        assert_eq!(t.target().uav, 0);
    }

    #[test]
    fn infeasible_spec_is_a_config_error() {
        let spec = DeploymentSpec {
            n_sbs: 10,
            ..clustered()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            deploy_random(&spec, &mut rng),
            Err(Error::Config(_))
        ));
        let spec = DeploymentSpec {
            uav_height_min: -5.0,
            ..cellular()
        };
        assert!(matches!(
            deploy_random(&spec, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn max_link_length_sets_coverage() {
        let spec = DeploymentSpec {
            coverage_radius: None,
            max_link_length: Some(500.0),
            target_theta: None,
            ..cellular()
        };
        assert!((spec.coverage_at(300.0).unwrap() - 400.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = deploy_random(&spec, &mut rng).unwrap();
        for s in t.sbss() {
            let u = &t.uavs()[s.uav];
            assert!((s.x - u.x).hypot(s.y - u.y).hypot(u.h) <= 500.0 + 1e-9);
        }
    }

    #[test]
    fn inter_cell_geometry_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = deploy_random(&cellular(), &mut rng).unwrap();
        let g = inter_cell_geometry(&t, 0).unwrap();
        // the target UAV sees its own SBS on boresight of the SBS
        assert!(g.sbs_offset.0.abs() < 1e-15 && g.sbs_offset.1.abs() < 1e-15);
        let g = inter_cell_geometry(&t, 3).unwrap();
        let u = t.uavs()[3];
        let horiz = (t.target().x - u.x).hypot(t.target().y - u.y);
        assert!((g.distance - horiz.hypot(100.0)).abs() < 1e-9);
        assert!((g.elevation - (100.0 / horiz).atan()).abs() < 1e-12);
        assert!(inter_cell_geometry(&t, 99).is_err());
    }

    #[test]
    fn topology_csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = deploy_random(&clustered(), &mut rng).unwrap();
        let mut buf = Vec::new();
        write_topology(&t, &mut buf).unwrap();
        let back = read_topology(buf.as_slice()).unwrap();
        assert_eq!(t, back);
        assert!(read_topology("kind,id,x,y,z,assoc\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn spatial_angle_symmetric_and_bounded(dx in -1.5f64..1.5, dy in -1.5f64..1.5) {
            let a = spatial_angle(dx, dy).unwrap();
            prop_assert!((0.0..FRAC_PI_2).contains(&a));
            prop_assert_eq!(a, spatial_angle(-dx, dy).unwrap());
            prop_assert_eq!(a, spatial_angle(dx, -dy).unwrap());
            prop_assert!((spatial_angle(dx, 0.0).unwrap() - dx.abs()).abs() < 1e-14);
        }

        #[test]
        fn deployments_respect_association(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = deploy_random(&clustered(), &mut rng).unwrap();
            let mut count = [0usize; 10];
            for s in t.sbss() { count[s.uav] += 1; }
            prop_assert!(count.iter().all(|&c| c == 8));
            prop_assert!(t.uavs().iter().all(|u| (80.0..=110.0).contains(&u.h)));
        }
    }
}
