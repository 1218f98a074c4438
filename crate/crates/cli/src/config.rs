//! Experiment configuration: a TOML tree with unit-suffixed keys, built-in
//! presets, dot-path overrides and whole-tree validation.

use crate::error::CliError;
use fronthaul::antenna::{ElementMode, ElementPattern};
use fronthaul::channel::{ChannelParams, LosEnvironment, LosMode, VibrationModel};
use fronthaul::geometry::{DeploymentSpec, Layout};
use fronthaul::mcsim::{AntennaSpec, SimConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;
use toml::Value;

pub const PRESETS: [(&str, &str); 6] = [
    ("default", include_str!("../presets/default.toml")),
    (
        "fig4_phi_sweep",
        include_str!("../presets/fig4_phi_sweep.toml"),
    ),
    ("fig5_theta_d", include_str!("../presets/fig5_theta_d.toml")),
    (
        "fig7_outage_vs_nu",
        include_str!("../presets/fig7_outage_vs_nu.toml"),
    ),
    (
        "fig8_sigma_theta",
        include_str!("../presets/fig8_sigma_theta.toml"),
    ),
    ("bound_vs_sim", include_str!("../presets/bound_vs_sim.toml")),
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub deployment: DeploymentSection,
    pub channel: ChannelSection,
    pub vibration: VibrationSection,
    pub antenna: AntennaSection,
    pub simulation: SimulationSection,
    pub bound: BoundSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeploymentSection {
    pub layout: Layout,
    pub n_sbs: usize,
    pub n_uav: usize,
    pub area_radius_m: f64,
    pub uav_height_min_m: f64,
    pub uav_height_max_m: f64,
    pub links_per_uav: usize,
    #[serde(with = "none_or")]
    pub coverage_radius_m: Option<f64>,
    #[serde(with = "none_or")]
    pub max_link_length_m: Option<f64>,
    #[serde(with = "none_or")]
    pub target_theta_deg: Option<f64>,
}

impl Default for DeploymentSection {
    fn default() -> Self {
        Self {
            layout: Layout::Cellular,
            n_sbs: 70,
            n_uav: 7,
            area_radius_m: 1500.0,
            uav_height_min_m: 100.0,
            uav_height_max_m: 100.0,
            links_per_uav: 10,
            coverage_radius_m: Some(400.0),
            max_link_length_m: None,
            target_theta_deg: Some(40.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub carrier_ghz: f64,
    pub tx_power_dbm: f64,
    pub absorption_per_m: f64,
    pub bandwidth_ghz: f64,
    pub temperature_k: f64,
    pub noise_figure_db: f64,
    pub los_environment: LosEnvironment,
    /// Overrides the environment's LoS curve parameters when set.
    #[serde(with = "none_or")]
    pub los_alpha: Option<f64>,
    #[serde(with = "none_or")]
    pub los_beta: Option<f64>,
    pub los_mode: LosMode,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            carrier_ghz: 95.0,
            tx_power_dbm: 10.0,
            absorption_per_m: 0.0,
            bandwidth_ghz: 3.0,
            temperature_k: 293.15,
            noise_figure_db: 0.0,
            los_environment: LosEnvironment::Urban,
            los_alpha: None,
            los_beta: None,
            los_mode: LosMode::Expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VibrationSection {
    pub sigma_x_deg: f64,
    pub sigma_y_deg: f64,
}

impl Default for VibrationSection {
    fn default() -> Self {
        Self {
            sigma_x_deg: 1.0,
            sigma_y_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaSection {
    pub n_u: usize,
    pub n_s: usize,
    pub spacing_wl: f64,
    pub element: ElementMode,
}

impl Default for AntennaSection {
    fn default() -> Self {
        Self {
            n_u: 15,
            n_s: 15,
            spacing_wl: 0.5,
            element: ElementMode::ThreeGpp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub gamma_th_db: f64,
    pub alpha_c_deg: f64,
    pub draws: u64,
    pub deployments: usize,
    pub seed: u64,
    pub workers: usize,
    /// Fixed target SBS roll; tuned per deployment when unset.
    #[serde(with = "none_or")]
    pub phi_s11_deg: Option<f64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            gamma_th_db: 9.0,
            alpha_c_deg: 2.0,
            draws: 500_000,
            deployments: 50,
            seed: 1,
            workers: 0,
            phi_s11_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundSection {
    pub d_sectors: usize,
    #[serde(with = "none_or")]
    pub theta_d_max_deg: Option<f64>,
}

impl Default for BoundSection {
    fn default() -> Self {
        Self {
            d_sectors: 80,
            theta_d_max_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub n_u: Vec<usize>,
    /// Empty lists fall back to the single configured value.
    pub alpha_c_deg: Vec<f64>,
    pub sigma_theta_deg: Vec<f64>,
    pub phi_step_deg: f64,
    pub runs: usize,
    pub theta_d_max_deg: f64,
    pub theta_d_step_deg: f64,
    pub phi_u_deg: Vec<f64>,
    pub pattern_phi_deg: Vec<f64>,
    pub pattern_theta_step_deg: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            n_u: vec![5, 10, 15, 20, 25],
            alpha_c_deg: Vec::new(),
            sigma_theta_deg: Vec::new(),
            phi_step_deg: 0.5,
            runs: 3,
            theta_d_max_deg: 30.0,
            theta_d_step_deg: 0.25,
            phi_u_deg: vec![0.0, 45.0],
            pattern_phi_deg: vec![0.0, 45.0, 90.0],
            pattern_theta_step_deg: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Optional numbers are written as a number or the string `"none"`, so a
/// preset value can be unset from a file or `--set`.
mod none_or {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("none"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Some(x)),
            Raw::Int(x) => Ok(Some(x as f64)),
            Raw::Text(t) if t == "none" => Ok(None),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"none\", got \"{t}\""
            ))),
        }
    }
}

pub fn preset_source(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::Config(vec![format!(
                "unknown preset `{name}` (known: {})",
                known.join(", ")
            )])
        })
}

fn parse_tree(src: &str, origin: &str) -> Result<toml::Table, CliError> {
    src.parse::<toml::Table>()
        .map_err(|e| CliError::Config(vec![format!("{origin}: {e}")]))
}

/// Deep-merges `overlay` into `base`.
fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `a.b.c=value`; the value is read as a TOML literal, falling back to a bare string.
fn override_tree(spec: &str) -> Result<toml::Table, CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        CliError::Config(vec![format!(
            "override `{spec}` is not of the form key.path=value"
        )])
    })?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(vec![format!(
            "override `{spec}` has an empty key"
        )]));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let mut tree = value;
    for k in keys.iter().rev() {
        let mut t = toml::Table::new();
        t.insert(k.to_string(), tree);
        tree = Value::Table(t);
    }
    match tree {
        Value::Table(t) => Ok(t),
        _ => unreachable!("at least one key"),
    }
}

/// Resolves preset, optional config file and overrides into one validated config.
pub fn resolve(
    preset: Option<&str>,
    file: Option<&Path>,
    overrides: &[String],
) -> Result<ExperimentConfig, CliError> {
    let file_tree = match file {
        Some(p) => {
            let src = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                context: format!("reading {}", p.display()),
                source: e,
            })?;
            Some(parse_tree(&src, &p.display().to_string())?)
        }
        None => None,
    };
    let file_preset = file_tree
        .as_ref()
        .and_then(|t| t.get("preset"))
        .and_then(Value::as_str)
        .map(str::to_string);
    let name = preset
        .map(str::to_string)
        .or(file_preset)
        .unwrap_or_else(|| "default".into());
    let mut tree = parse_tree(preset_source(&name)?, &format!("preset {name}"))?;
    if let Some(t) = file_tree {
        merge(&mut tree, t);
    }
    for o in overrides {
        merge(&mut tree, override_tree(o)?);
    }
    tree.insert("preset".into(), Value::String(name));
    let cfg: ExperimentConfig = Value::Table(tree)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(vec![e.message().to_string()]))?;
    let errs = cfg.violations();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config(errs))
    }
}

fn positive(errs: &mut Vec<String>, key: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        errs.push(format!("{key} must be positive (got {v})"));
    }
}

fn non_negative(errs: &mut Vec<String>, key: &str, v: f64) {
    if !(v.is_finite() && v >= 0.0) {
        errs.push(format!("{key} must be non-negative (got {v})"));
    }
}

fn at_least_one(errs: &mut Vec<String>, key: &str, v: u64) {
    if v < 1 {
        errs.push(format!("{key} must be at least 1"));
    }
}

impl ExperimentConfig {
    /// Every violated constraint, each naming its key.
    pub fn violations(&self) -> Vec<String> {
        let mut e = Vec::new();
        let d = &self.deployment;
        at_least_one(&mut e, "deployment.n_uav", d.n_uav as u64);
        at_least_one(&mut e, "deployment.links_per_uav", d.links_per_uav as u64);
        if d.n_sbs < d.n_uav * d.links_per_uav {
            e.push(format!(
                "deployment.n_sbs ({}) must be at least n_uav * links_per_uav ({})",
                d.n_sbs,
                d.n_uav * d.links_per_uav
            ));
        }
        positive(&mut e, "deployment.uav_height_min_m", d.uav_height_min_m);
        positive(&mut e, "deployment.uav_height_max_m", d.uav_height_max_m);
        if d.uav_height_max_m < d.uav_height_min_m {
            e.push("deployment.uav_height_max_m must be >= deployment.uav_height_min_m".into());
        }
        if d.layout == Layout::Clustered {
            positive(&mut e, "deployment.area_radius_m", d.area_radius_m);
        }
        match (d.coverage_radius_m, d.max_link_length_m) {
            (Some(r), None) => positive(&mut e, "deployment.coverage_radius_m", r),
            (None, Some(l)) => {
                if !(l.is_finite() && l > d.uav_height_max_m) {
                    e.push(format!("deployment.max_link_length_m ({l}) must exceed deployment.uav_height_max_m"));
                }
            }
            (Some(_), Some(_)) => e.push(
                "deployment.coverage_radius_m and deployment.max_link_length_m are exclusive; unset one with \"none\"".into(),
            ),
            (None, None) if d.layout == Layout::Cellular => {
                e.push("deployment.coverage_radius_m or deployment.max_link_length_m is required".into())
            }
            (None, None) => {}
        }
        if let Some(t) = d.target_theta_deg {
            if d.layout != Layout::Cellular {
                e.push("deployment.target_theta_deg requires layout = \"cellular\"".into());
            } else if !(t.is_finite() && (0.0..90.0).contains(&t)) {
                e.push(format!(
                    "deployment.target_theta_deg must lie in [0, 90) (got {t})"
                ));
            } else if let Some(r) = d.coverage_radius_m.or(d
                .max_link_length_m
                .map(|l| (l * l - d.uav_height_min_m.powi(2)).max(0.0).sqrt()))
            {
                if d.uav_height_max_m * t.to_radians().tan() > r {
                    e.push(
                        "deployment.target_theta_deg places the target outside the coverage disk"
                            .into(),
                    );
                }
            }
        }

        let c = &self.channel;
        positive(&mut e, "channel.carrier_ghz", c.carrier_ghz);
        positive(&mut e, "channel.bandwidth_ghz", c.bandwidth_ghz);
        positive(&mut e, "channel.temperature_k", c.temperature_k);
        non_negative(&mut e, "channel.absorption_per_m", c.absorption_per_m);
        non_negative(&mut e, "channel.noise_figure_db", c.noise_figure_db);
        if !c.tx_power_dbm.is_finite() {
            e.push("channel.tx_power_dbm must be finite".into());
        }
        if let Some(a) = c.los_alpha {
            positive(&mut e, "channel.los_alpha", a);
        }
        if let Some(b) = c.los_beta {
            positive(&mut e, "channel.los_beta", b);
        }

        non_negative(&mut e, "vibration.sigma_x_deg", self.vibration.sigma_x_deg);
        non_negative(&mut e, "vibration.sigma_y_deg", self.vibration.sigma_y_deg);

        let a = &self.antenna;
        at_least_one(&mut e, "antenna.n_u", a.n_u as u64);
        at_least_one(&mut e, "antenna.n_s", a.n_s as u64);
        positive(&mut e, "antenna.spacing_wl", a.spacing_wl);

        let s = &self.simulation;
        if !s.gamma_th_db.is_finite() {
            e.push("simulation.gamma_th_db must be finite".into());
        }
        non_negative(&mut e, "simulation.alpha_c_deg", s.alpha_c_deg);
        at_least_one(&mut e, "simulation.draws", s.draws);
        at_least_one(&mut e, "simulation.deployments", s.deployments as u64);
        if let Some(p) = s.phi_s11_deg {
            if !(p.is_finite() && (0.0..=45.0).contains(&p)) {
                e.push(format!(
                    "simulation.phi_s11_deg must lie in [0, 45] (got {p})"
                ));
            }
        }

        at_least_one(&mut e, "bound.d_sectors", self.bound.d_sectors as u64);
        if let Some(t) = self.bound.theta_d_max_deg {
            if !(t.is_finite() && t > 0.0 && t <= 90.0) {
                e.push(format!(
                    "bound.theta_d_max_deg must lie in (0, 90] (got {t})"
                ));
            }
        }

        let w = &self.sweep;
        if w.n_u.is_empty() {
            e.push("sweep.n_u must list at least one array size".into());
        }
        if w.n_u.contains(&0) {
            e.push("sweep.n_u entries must be at least 1".into());
        }
        for v in &w.alpha_c_deg {
            non_negative(&mut e, "sweep.alpha_c_deg entries", *v);
        }
        for v in &w.sigma_theta_deg {
            non_negative(&mut e, "sweep.sigma_theta_deg entries", *v);
        }
        positive(&mut e, "sweep.phi_step_deg", w.phi_step_deg);
        at_least_one(&mut e, "sweep.runs", w.runs as u64);
        if !(w.theta_d_max_deg.is_finite() && w.theta_d_max_deg >= 0.0 && w.theta_d_max_deg < 90.0)
        {
            e.push(format!(
                "sweep.theta_d_max_deg must lie in [0, 90) (got {})",
                w.theta_d_max_deg
            ));
        }
        positive(&mut e, "sweep.theta_d_step_deg", w.theta_d_step_deg);
        for v in &w.phi_u_deg {
            if !(v.is_finite() && (0.0..=45.0).contains(v)) {
                e.push(format!(
                    "sweep.phi_u_deg entries must lie in [0, 45] (got {v})"
                ));
            }
        }
        for v in &w.pattern_phi_deg {
            if !v.is_finite() {
                e.push("sweep.pattern_phi_deg entries must be finite".into());
            }
        }
        positive(
            &mut e,
            "sweep.pattern_theta_step_deg",
            w.pattern_theta_step_deg,
        );
        if self.output.dir.trim().is_empty() {
            e.push("output.dir must not be empty".into());
        }
        e
    }

    pub fn channel_params(&self) -> ChannelParams {
        let c = &self.channel;
        let mut p = ChannelParams {
            carrier_hz: c.carrier_ghz * 1e9,
            tx_power_w: 10f64.powf((c.tx_power_dbm - 30.0) / 10.0),
            absorption_per_m: c.absorption_per_m,
            bandwidth_hz: c.bandwidth_ghz * 1e9,
            temperature_k: c.temperature_k,
            noise_figure_db: c.noise_figure_db,
            los_mode: c.los_mode,
            ..ChannelParams::default()
        }
        .with_environment(c.los_environment);
        if let Some(a) = c.los_alpha {
            p.los_alpha = a;
        }
        if let Some(b) = c.los_beta {
            p.los_beta = b;
        }
        p
    }

    pub fn element(&self) -> ElementPattern {
        match self.antenna.element {
            ElementMode::Isotropic => ElementPattern::isotropic(),
            ElementMode::ThreeGpp => ElementPattern::three_gpp(),
        }
    }

    /// Simulation settings in SI units and radians.
    pub fn sim_config(&self) -> SimConfig {
        let d = &self.deployment;
        let s = &self.simulation;
        SimConfig {
            deployment: DeploymentSpec {
                layout: d.layout,
                n_sbs: d.n_sbs,
                n_uav: d.n_uav,
                area_radius: d.area_radius_m,
                uav_height_min: d.uav_height_min_m,
                uav_height_max: d.uav_height_max_m,
                per_uav_links: d.links_per_uav,
                coverage_radius: d.coverage_radius_m,
                max_link_length: d.max_link_length_m,
                target_theta: d.target_theta_deg.map(f64::to_radians),
            },
            channel: self.channel_params(),
            vibration: VibrationModel {
                sigma_x: self.vibration.sigma_x_deg.to_radians(),
                sigma_y: self.vibration.sigma_y_deg.to_radians(),
            },
            antennas: AntennaSpec {
                n_u: self.antenna.n_u,
                n_s: self.antenna.n_s,
                spacing_wl: self.antenna.spacing_wl,
                element: self.element(),
            },
            gamma_th_db: s.gamma_th_db,
            alpha_c: s.alpha_c_deg.to_radians(),
            n_vibration_draws: s.draws,
            n_deployments: s.deployments,
            seed: s.seed,
            phi_s11: s.phi_s11_deg.map(f64::to_radians),
            workers: s.workers,
        }
    }

    /// Digest of everything that affects results (worker count and output
    /// location excluded).
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.simulation.workers = 0;
        c.output.dir.clear();
        fronthaul::mcsim::digest_of(&c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for (name, _) in PRESETS {
            let c = resolve(Some(name), None, &[]).unwrap();
            assert_eq!(c.preset.as_deref(), Some(name));
        }
    }

    #[test]
    fn default_preset_matches_struct_defaults() {
        let c = resolve(None, None, &[]).unwrap();
        assert_eq!(
            ExperimentConfig {
                preset: Some("default".into()),
                ..ExperimentConfig::default()
            },
            c
        );
        let sim = c.sim_config();
        assert!((sim.channel.tx_power_w - 0.01).abs() < 1e-15);
        assert_eq!(sim.antennas.n_s, 15);
        assert_eq!(sim.gamma_th_db, 9.0);
    }

    #[test]
    fn overrides_follow_dot_paths() {
        let c = resolve(
            None,
            None,
            &[
                "antenna.n_u=25".into(),
                "channel.los_environment=suburban".into(),
                "deployment.target_theta_deg=none".into(),
                "sweep.n_u=[5, 10]".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.antenna.n_u, 25);
        assert_eq!(c.channel.los_environment, LosEnvironment::Suburban);
        assert_eq!(c.deployment.target_theta_deg, None);
        assert_eq!(c.sweep.n_u, vec![5, 10]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = resolve(None, None, &["antenna.n_x=3".into()]).unwrap_err();
        assert!(err.to_string().contains("n_x"), "{err}");
    }

    #[test]
    fn validation_lists_every_violation() {
        let err = resolve(
            None,
            None,
            &[
                "deployment.uav_height_min_m=-5".into(),
                "simulation.draws=0".into(),
                "antenna.spacing_wl=0".into(),
            ],
        )
        .unwrap_err();
        let CliError::Config(list) = err else {
            panic!("expected config error")
        };
        assert!(list
            .iter()
            .any(|m| m.contains("deployment.uav_height_min_m")));
        assert!(list.iter().any(|m| m.contains("simulation.draws")));
        assert!(list.iter().any(|m| m.contains("antenna.spacing_wl")));
    }

    #[test]
    fn dry_run_output_round_trips() {
        let c = resolve(Some("fig8_sigma_theta"), None, &[]).unwrap();
        let back: ExperimentConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
    }
}
