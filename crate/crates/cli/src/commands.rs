//! Subcommand implementations. Each writes one or more CSV tables plus a
//! gnuplot script that reads them.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{dbm, Emitter};
use fronthaul::antenna::{gaussian_approx_gain, ArrayConfig, GaussianApprox, PatternEvaluator};
use fronthaul::channel::{noise_power, VibrationModel};
use fronthaul::geometry::{min_intra_deviation, write_topology};
use fronthaul::mcsim::{self, OutageResult, SimConfig};
use fronthaul::table::{Cell, Table};

fn grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|k| (k as f64 * step).min(max)).collect()
}

fn progress(msg: &str) {
    eprintln!("{msg}");
}

pub fn deploy(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let sim = cfg.sim_config();
    sim.validate()?;
    let mut t = Table::new(&[
        "deployment",
        "attempts",
        "n_uav",
        "n_sbs",
        "target_x_m",
        "target_y_m",
        "theta11_deg",
        "min_theta_d_deg",
        "topology_file",
    ]);
    for dep in 0..sim.n_deployments {
        let (topo, attempts) = mcsim::sample_deployment(&sim, dep as u64)?;
        let file = format!("topologies/topology_{dep:04}.csv");
        let mut buf = Vec::new();
        write_topology(&topo, &mut buf)?;
        out.write(&file, buf)?;
        let (s, u) = (topo.target(), topo.target_uav());
        let theta11 = ((s.x - u.x).hypot(s.y - u.y) / u.h).atan();
        t.push(vec![
            dep.into(),
            attempts.into(),
            topo.uavs().len().into(),
            topo.sbss().len().into(),
            s.x.into(),
            s.y.into(),
            theta11.to_degrees().into(),
            min_intra_deviation(&topo).to_degrees().into(),
            file.into(),
        ]);
    }
    out.table("deploy.csv", t)?;
    out.script(
        "deploy.gp",
        "set title 'Deployment 0'\nset xlabel 'x (m)'\nset ylabel 'y (m)'\nset size ratio -1\n\
         plot 'topologies/topology_0000.csv' using (strcol(1) eq 'sbs' ? $3 : NaN):4 with points pt 7 ps 0.6 title 'SBS', \\\n     \
         '' using (strcol(1) eq 'uav' ? $3 : NaN):4 with points pt 5 ps 1.5 title 'UAV'\n",
    )
}

pub fn pattern_dump(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let ep = cfg.element();
    let eval = PatternEvaluator::new(ArrayConfig {
        spacing_wl: cfg.antenna.spacing_wl,
        ..ArrayConfig::half_wave(cfg.antenna.n_u, ep)
    })?;
    let ga = GaussianApprox::default();
    let mut t = Table::new(&["phi_deg", "theta_deg", "gain_dbi", "gaussian_envelope_dbi"]);
    let half = grid(90.0, cfg.sweep.pattern_theta_step_deg);
    let thetas: Vec<f64> = half
        .iter()
        .rev()
        .filter(|v| **v > 0.0)
        .map(|v| -v)
        .chain(half.iter().cloned())
        .collect();
    for &phi in &cfg.sweep.pattern_phi_deg {
        for &th in &thetas {
            // negative polar angles are the opposite half of the same cut
            let (theta, p) = if th < 0.0 {
                (-th, phi + 180.0)
            } else {
                (th, phi)
            };
            let g = eval.gain(theta.to_radians(), p.to_radians())?;
            let env = gaussian_approx_gain(&ga, &eval, theta.to_radians())?;
            t.push(vec![
                phi.into(),
                th.into(),
                (10.0 * g.log10()).into(),
                (10.0 * env.log10()).into(),
            ]);
        }
    }
    out.table("pattern.csv", t.meta("n_u", cfg.antenna.n_u))?;
    let mut plot = String::from(
        "set xlabel 'theta (deg)'\nset ylabel 'gain (dBi)'\nset yrange [-40:*]\nplot ",
    );
    let n = cfg.sweep.pattern_phi_deg.len();
    for (i, phi) in cfg.sweep.pattern_phi_deg.iter().enumerate() {
        plot.push_str(&format!(
            "'pattern.csv' using ($1 == {phi} ? $2 : NaN):3 with lines title 'phi = {phi} deg', \\\n     "
        ));
        if i + 1 == n {
            plot.push_str(&format!(
                "'pattern.csv' using ($1 == {phi} ? $2 : NaN):4 with lines dt 2 title 'Gaussian envelope'\n"
            ));
        }
    }
    out.script("pattern.gp", &plot)
}

pub fn phi_sweep(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let sim = cfg.sim_config();
    let phis = grid(45.0, cfg.sweep.phi_step_deg);
    let phis_rad: Vec<f64> = phis.iter().map(|p| p.to_radians()).collect();
    let n0 = noise_power(&sim.channel);
    let mut t = Table::new(&[
        "run",
        "phi_s11_deg",
        "mean_intra_w",
        "mean_inter_w",
        "mean_intra_dbm",
        "mean_inter_dbm",
        "noise_dbm",
    ]);
    for run in 0..cfg.sweep.runs {
        progress(&format!("phi-sweep: run {}/{}", run + 1, cfg.sweep.runs));
        let (topo, _) = mcsim::sample_deployment(&sim, run as u64)?;
        let rows = mcsim::run_phi_sweep(&sim, &topo, run as u64, &phis_rad)?;
        for (r, deg) in rows.iter().zip(&phis) {
            t.push(vec![
                run.into(),
                (*deg).into(),
                r.mean_intra_w.into(),
                r.mean_inter_w.into(),
                dbm(r.mean_intra_w).into(),
                dbm(r.mean_inter_w).into(),
                dbm(n0).into(),
            ]);
        }
    }
    out.table("phi_sweep.csv", t)?;
    let mut plot = String::from("set xlabel 'phi_S11 (deg)'\nset ylabel 'mean power (dBm)'\nplot ");
    for run in 0..cfg.sweep.runs {
        plot.push_str(&format!(
            "'phi_sweep.csv' using ($1 == {run} ? $2 : NaN):6 with lines title 'inter-cell, run {}', \\\n     ",
            run + 1
        ));
    }
    plot.push_str(
        "'phi_sweep.csv' using ($1 == 0 ? $2 : NaN):5 with lines dt 2 title 'intra-cell, run 1', \\\n     \
         'phi_sweep.csv' using ($1 == 0 ? $2 : NaN):7 with lines dt 3 title 'noise'\n",
    );
    out.script("phi_sweep.gp", &plot)
}

pub fn theta_d_sweep(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let sim = cfg.sim_config();
    let thetas = grid(cfg.sweep.theta_d_max_deg, cfg.sweep.theta_d_step_deg);
    let rad = |v: &Vec<f64>| v.iter().map(|x| x.to_radians()).collect::<Vec<_>>();
    let rows = mcsim::run_theta_d_sweep(&sim, &rad(&thetas), &rad(&cfg.sweep.phi_u_deg))?;
    let mut t = Table::new(&["phi_u_deg", "theta_d_deg", "mean_intra_w", "mean_intra_dbm"]);
    for (i, r) in rows.iter().enumerate() {
        let phi = cfg.sweep.phi_u_deg[i / thetas.len()];
        t.push(vec![
            phi.into(),
            thetas[i % thetas.len()].into(),
            r.mean_intra_w.into(),
            dbm(r.mean_intra_w).into(),
        ]);
    }
    out.table("theta_d_sweep.csv", t)?;
    let mut plot = String::from(
        "set xlabel 'theta_d (deg)'\nset ylabel 'mean intra-cell interference (dBm)'\nplot ",
    );
    let parts: Vec<String> = cfg
        .sweep
        .phi_u_deg
        .iter()
        .map(|p| format!("'theta_d_sweep.csv' using ($1 == {p} ? $2 : NaN):4 with lines title 'phi_u = {p} deg'"))
        .collect();
    plot.push_str(&parts.join(", \\\n     "));
    plot.push('\n');
    out.script("theta_d_sweep.gp", &plot)
}

/// One point of an outage sweep.
struct Point {
    n_u: usize,
    alpha_c_deg: f64,
    sigma_deg: f64,
    sim: SimConfig,
}

fn sweep_points(cfg: &ExperimentConfig) -> Vec<Point> {
    let base = cfg.sim_config();
    let sigmas: Vec<Option<f64>> = if cfg.sweep.sigma_theta_deg.is_empty() {
        vec![None]
    } else {
        cfg.sweep.sigma_theta_deg.iter().map(|s| Some(*s)).collect()
    };
    let alphas = if cfg.sweep.alpha_c_deg.is_empty() {
        vec![cfg.simulation.alpha_c_deg]
    } else {
        cfg.sweep.alpha_c_deg.clone()
    };
    let mut pts = Vec::new();
    for s in &sigmas {
        for &a in &alphas {
            for &n_u in &cfg.sweep.n_u {
                let mut sim = base.clone();
                sim.antennas.n_u = n_u;
                sim.alpha_c = a.to_radians();
                if let Some(s) = s {
                    sim.vibration = VibrationModel::isotropic(s.to_radians());
                }
                pts.push(Point {
                    n_u,
                    alpha_c_deg: a,
                    sigma_deg: s.unwrap_or(cfg.vibration.sigma_x_deg),
                    sim,
                });
            }
        }
    }
    pts
}

fn key_cells(p: &Point) -> Vec<Cell> {
    vec![p.n_u.into(), p.alpha_c_deg.into(), p.sigma_deg.into()]
}

fn curve_plot(file: &str, ycol: usize, cfg: &ExperimentConfig, extra: &str) -> String {
    let mut plot =
        format!("set xlabel 'N_u'\nset ylabel 'outage probability'\nset logscale y\n{extra}plot ");
    let mut parts = Vec::new();
    let sigmas = if cfg.sweep.sigma_theta_deg.is_empty() {
        vec![cfg.vibration.sigma_x_deg]
    } else {
        cfg.sweep.sigma_theta_deg.clone()
    };
    let alphas = if cfg.sweep.alpha_c_deg.is_empty() {
        vec![cfg.simulation.alpha_c_deg]
    } else {
        cfg.sweep.alpha_c_deg.clone()
    };
    for s in &sigmas {
        for a in &alphas {
            parts.push(format!(
                "'{file}' using (($2 == {a} && $3 == {s}) ? $1 : NaN):{ycol} with linespoints title 'alpha_c = {a} deg, sigma = {s} deg'"
            ));
        }
    }
    plot.push_str(&parts.join(", \\\n     "));
    plot.push('\n');
    plot
}

fn simulate(p: &Point) -> Result<OutageResult, CliError> {
    progress(&format!(
        "outage-sim: N_u={} alpha_c={} deg sigma={} deg",
        p.n_u, p.alpha_c_deg, p.sigma_deg
    ));
    Ok(mcsim::average_outage(&p.sim)?)
}

fn bound(cfg: &ExperimentConfig, p: &Point) -> Result<f64, CliError> {
    let theta_max = cfg.bound.theta_d_max_deg.map(f64::to_radians);
    Ok(mcsim::analytic_bound(&p.sim, cfg.bound.d_sectors, theta_max)?.p_out)
}

pub fn outage_sim(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let mut t = Table::new(&[
        "n_u",
        "alpha_c_deg",
        "sigma_theta_deg",
        "p_out",
        "stderr",
        "n_effective",
        "deployments",
    ]);
    for p in sweep_points(cfg) {
        let r = simulate(&p)?;
        let mut row = key_cells(&p);
        row.extend([
            r.p_out.into(),
            r.stderr.into(),
            r.n_effective.into(),
            p.sim.n_deployments.into(),
        ]);
        t.push(row);
    }
    out.table("outage_sim.csv", t)?;
    out.script("outage_sim.gp", &curve_plot("outage_sim.csv", 4, cfg, ""))
}

pub fn outage_bound(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let mut t = Table::new(&["n_u", "alpha_c_deg", "sigma_theta_deg", "p_out_bound"]);
    for p in sweep_points(cfg) {
        let b = bound(cfg, &p)?;
        let mut row = key_cells(&p);
        row.push(b.into());
        t.push(row);
    }
    out.table("outage_bound.csv", t.meta("d_sectors", cfg.bound.d_sectors))?;
    out.script(
        "outage_bound.gp",
        &curve_plot("outage_bound.csv", 4, cfg, ""),
    )
}

/// Simulated against bound outage; fails when the bound sits more than two
/// standard errors below the simulation at any point.
pub fn compare(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<(), CliError> {
    let mut t = Table::new(&[
        "n_u",
        "alpha_c_deg",
        "sigma_theta_deg",
        "p_out_sim",
        "stderr",
        "p_out_bound",
        "margin",
        "verdict",
    ]);
    let mut failures = Vec::new();
    for p in sweep_points(cfg) {
        let r = simulate(&p)?;
        let b = bound(cfg, &p)?;
        let margin = b - (r.p_out - 2.0 * r.stderr);
        let ok = margin >= 0.0;
        if !ok {
            failures.push(format!(
                "N_u={} alpha_c={} sigma={}",
                p.n_u, p.alpha_c_deg, p.sigma_deg
            ));
        }
        let mut row = key_cells(&p);
        row.extend([
            r.p_out.into(),
            r.stderr.into(),
            b.into(),
            margin.into(),
            (if ok { "PASS" } else { "FAIL" }).into(),
        ]);
        t.push(row);
    }
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    out.table("compare.csv", t.meta("verdict", verdict))?;
    let plot = curve_plot("compare.csv", 4, cfg, "").trim_end().to_string()
        + ", \\\n     "
        + &curve_plot("compare.csv", 6, cfg, "")
            .rsplit_once("plot ")
            .map(|(_, rest)| {
                rest.replace("with linespoints title '", "with lines dt 2 title 'bound, ")
            })
            .unwrap_or_default();
    out.script("compare.gp", &plot)?;
    println!("verdict: {verdict}");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verdict(format!(
            "bound below simulation at {}",
            failures.join("; ")
        )))
    }
}
