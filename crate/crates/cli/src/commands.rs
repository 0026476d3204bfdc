use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sixfilm_core::csvio::{self, fmt_f64};
use sixfilm_core::diagnostics::{energy_balance_residual, entropy_balance_residual};
use sixfilm_core::mms::{observed_orders, spatial_study, temporal_study, ManufacturedFilm};
use sixfilm_core::reconstruct::{depth_average_check, fsi_family, no_slip_defect};
use sixfilm_core::residual::{TrigSeries, DEFAULT_EPS};
use sixfilm_core::{
    dimensionless_numbers, dispersion_rate, eps_sweep_slopes, eval_Phi, limit_velocity,
    load_physical, parse_run_config, solver, validate_params, DiagnosticsRecord, Error,
    GaussLegendre, HarnessParams, LimitFields, PreparedWindow, RawParams, RunConfig, Scheme,
    Snapshot, Spectral, TestFunctionPair,
};
use thiserror::Error as ThisError;

use crate::manifest::ManifestBuilder;
use crate::Command;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::PositivityViolation { .. }) => 2,
            CliError::Core(
                Error::Config { .. }
                | Error::Expr { .. }
                | Error::InvalidParam(_)
                | Error::Forcing(_)
                | Error::GridTooSmall(_)
                | Error::OddGrid(_)
                | Error::EpsOutOfRange(_)
                | Error::Io(_),
            ) => 1,
            CliError::Core(_) => 3,
            CliError::Io { .. } | CliError::Usage(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(mb: &mut ManifestBuilder, name: &str, text: &str) -> CliResult<()> {
    std::fs::create_dir_all(&mb.out).map_err(io_at(&mb.out))?;
    let path = mb.out.join(name);
    std::fs::write(&path, text).map_err(io_at(&path))?;
    mb.add(path);
    Ok(())
}

fn load_config(mb: &mut ManifestBuilder, path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    mb.config_echo = text.clone();
    Ok(parse_run_config(
        &text,
        &path.display().to_string(),
        path.parent(),
    )?)
}

fn out_dir(cmd: &Command) -> (&'static str, &Path) {
    match cmd {
        Command::Simulate { out, .. } => ("simulate", out),
        Command::Reconstruct { out, .. } => ("reconstruct", out),
        Command::Diagnose { out, .. } => ("diagnose", out),
        Command::Dispersion { out, .. } => ("dispersion", out),
        Command::Mms { out, .. } => ("mms", out),
        Command::Nondimensionalize { out, .. } => ("nondimensionalize", out),
        Command::SweepEps { out, .. } => ("sweep-eps", out),
    }
}

pub fn dispatch(cmd: Command, seed: Option<u64>) -> i32 {
    let (name, out) = out_dir(&cmd);
    let mut mb = ManifestBuilder::new(out, name, seed);
    let result = match cmd {
        Command::Simulate { config, .. } => simulate(&mut mb, &config),
        Command::Reconstruct {
            config,
            traj,
            snapshot,
            q,
            eps,
            ..
        } => reconstruct(&mut mb, &config, &traj, snapshot, q, eps),
        Command::Diagnose { config, traj, .. } => diagnose(&mut mb, &config, &traj),
        Command::Dispersion {
            beta,
            delta,
            r,
            hbar,
            modes,
            ..
        } => dispersion(&mut mb, beta, delta, r, hbar, &modes),
        Command::Mms { n, .. } => mms(&mut mb, n),
        Command::Nondimensionalize { physical, .. } => nondimensionalize(&mut mb, &physical),
        Command::SweepEps {
            config,
            traj,
            eps,
            random_pairs,
            q,
            ..
        } => sweep_eps(
            &mut mb,
            &config,
            traj.as_deref(),
            eps.as_deref(),
            random_pairs,
            q,
            seed,
        ),
    };
    let (code, message) = match result {
        Ok(msg) => (0, msg),
        Err(e) => (e.exit_code(), e.to_string()),
    };
    if code != 0 {
        eprintln!("sixfilm {name}: {message}");
    } else if !message.is_empty() {
        eprintln!("{message}");
    }
    match mb.finish(code, &message) {
        Ok(m) if !m.audit_passed => {
            eprintln!("sixfilm {name}: manifest digest audit failed");
            3
        }
        Ok(_) => code,
        Err(e) => {
            eprintln!("sixfilm {name}: cannot write manifest: {e}");
            if code == 0 {
                3
            } else {
                code
            }
        }
    }
}

fn simulate(mb: &mut ManifestBuilder, config: &Path) -> CliResult<String> {
    let cfg = load_config(mb, config)?;
    let (traj, err) = solver::run_partial(&cfg);
    for path in csvio::write_trajectory(&mb.out, &traj).map_err(|e| match e {
        Error::Io(source) => CliError::Io {
            path: mb.out.clone(),
            source,
        },
        other => CliError::Core(other),
    })? {
        mb.add(path);
    }
    mb.last_good_time = Some(traj.last_time());
    match err {
        None => Ok(format!(
            "{} steps accepted, {} rejected, t = {}",
            traj.accepted_steps,
            traj.rejected_steps,
            traj.last_time()
        )),
        Some(e) => Err(e.into()),
    }
}

fn stored(
    mb: &mut ManifestBuilder,
    config: &Path,
    traj: &Path,
) -> CliResult<(RunConfig, Vec<Snapshot>)> {
    let cfg = load_config(mb, config)?;
    let snaps = csvio::read_trajectory(traj, &cfg.params)?;
    if snaps.is_empty() {
        return Err(CliError::Usage(format!("{}: no snapshots", traj.display())));
    }
    Ok((cfg, snaps))
}

fn reconstruct(
    mb: &mut ManifestBuilder,
    config: &Path,
    traj: &Path,
    index: Option<usize>,
    q: usize,
    eps: Option<f64>,
) -> CliResult<String> {
    let (cfg, snaps) = stored(mb, config, traj)?;
    let k = index.unwrap_or(snaps.len() - 1);
    let s = snaps.get(k).ok_or_else(|| {
        CliError::Usage(format!("snapshot {k} out of range (have {})", snaps.len()))
    })?;
    let forcing = cfg.params.forcing();
    let rule = GaussLegendre::new(q)?;
    let v1 = limit_velocity(&s.h, &s.p, forcing, s.t, rule.nodes())?;
    write(mb, &format!("v1_{k:05}.csv"), &csvio::plane_csv(&v1, "v1"))?;
    let phi = eval_Phi(forcing, s.h.grid(), s.t)?;
    let report = depth_average_check(&v1, &s.h, &s.p, &phi, s.w.as_ref())?;
    let slip = no_slip_defect(&s.h, &s.p, forcing, s.t)?;
    let mut text = String::from("name,value\n");
    let _ = writeln!(text, "t,{}", fmt_f64(s.t));
    let _ = writeln!(text, "no_slip_defect,{}", fmt_f64(slip));
    let _ = writeln!(
        text,
        "depth_average_residual,{}",
        fmt_f64(report.depth_average)
    );
    if let Some(m) = report.mass_flux {
        let _ = writeln!(text, "mass_flux_residual,{}", fmt_f64(m));
    }
    write(mb, "reconstruct_report.csv", &text)?;
    if let Some(eps) = eps {
        let fields = LimitFields {
            p: s.p.clone(),
            v1: v1.clone(),
        };
        let fam = fsi_family(&s.h, &fields, eps)?;
        write(mb, "fsi_v1.csv", &csvio::plane_csv(&fam.v1_eps, "v1_eps"))?;
        let mut t = String::from("x,eta,p\n");
        for (j, x) in s.h.grid().nodes().enumerate() {
            let _ = writeln!(
                t,
                "{},{},{}",
                fmt_f64(x),
                fmt_f64(fam.eta.values()[j]),
                fmt_f64(fam.p_eps.values()[j])
            );
        }
        write(mb, "fsi_eta.csv", &t)?;
    }
    Ok(format!(
        "snapshot {k} at t = {}: no-slip {slip:.2e}, depth average {:.2e}",
        s.t, report.depth_average
    ))
}

fn diagnose(mb: &mut ManifestBuilder, config: &Path, traj: &Path) -> CliResult<String> {
    let (cfg, snaps) = stored(mb, config, traj)?;
    let spectral = Spectral::new(cfg.grid);
    let mut records: Vec<DiagnosticsRecord> = Vec::with_capacity(snaps.len());
    for (i, s) in snaps.iter().enumerate() {
        let dt = if i == 0 { 0.0 } else { s.t - snaps[i - 1].t };
        let phi = eval_Phi(cfg.params.forcing(), s.h.grid(), s.t)?;
        records.push(DiagnosticsRecord::from_fields(
            &spectral,
            s.t,
            dt,
            &s.h,
            &s.p,
            s.w.as_ref(),
            &phi,
            &cfg.params,
        )?);
    }
    let mut text =
        String::from("t,mass,min_h,lyapunov,energy,dissipation,entropy_residual,energy_residual\n");
    let (mut worst_ent, mut worst_en) = (0.0f64, 0.0f64);
    for (i, r) in records.iter().enumerate() {
        let window = (i > 0 && i + 1 < records.len()).then(|| &records[i - 1..=i + 1]);
        let ent = window.and_then(|w| entropy_balance_residual(w).ok());
        let en = window.and_then(|w| energy_balance_residual(w, &cfg.params).ok());
        worst_ent = worst_ent.max(ent.unwrap_or(0.0));
        worst_en = worst_en.max(en.unwrap_or(0.0));
        let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.mass),
            fmt_f64(r.min_h),
            fmt_f64(r.lyapunov),
            fmt_f64(r.energy),
            fmt_f64(r.dissipation),
            cell(ent),
            cell(en)
        );
    }
    write(mb, "diagnostics.csv", &text)?;
    Ok(format!(
        "{} snapshots; max entropy residual {worst_ent:.3e}, max energy residual {worst_en:.3e}",
        records.len()
    ))
}

fn parse_modes(s: &str) -> CliResult<Vec<u32>> {
    let bad = || CliError::Usage(format!("cannot parse modes `{s}` (use a..b or a,b,c)"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|m| m.trim().parse().map_err(|_| bad()))
        .collect()
}

fn dispersion(
    mb: &mut ManifestBuilder,
    beta: f64,
    delta: f64,
    r: f64,
    hbar: f64,
    modes: &str,
) -> CliResult<String> {
    let params = validate_params(RawParams::new(beta, delta, r))?;
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(CliError::Usage(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    let mut text = String::from("m,k,sigma\n");
    for m in parse_modes(modes)? {
        let k = 2.0 * std::f64::consts::PI * m as f64;
        let _ = writeln!(
            text,
            "{m},{},{}",
            fmt_f64(k),
            fmt_f64(dispersion_rate(k, hbar, &params))
        );
    }
    write(mb, "dispersion.csv", &text)?;
    print!("{text}");
    Ok(String::new())
}

fn mms(mb: &mut ManifestBuilder, n: usize) -> CliResult<String> {
    let mut spatial = String::from("n,order,error\n");
    for order in 1..=3 {
        for p in spatial_study(&[16, 32, 64], order)? {
            let _ = writeln!(spatial, "{},{order},{}", p.resolution, fmt_f64(p.error));
        }
    }
    write(mb, "mms_spatial.csv", &spatial)?;

    let film = ManufacturedFilm::default();
    let t_end = film.period / 2.0;
    let dts: Vec<f64> = (0..8).map(|k| t_end / 20.0 / 2f64.powi(k)).collect();
    let mut temporal = String::from("scheme,chi,dt,error,observed_order\n");
    let mut summary = Vec::new();
    for (delta, r) in [(0.0, 1.0), (12.0, 3.0)] {
        let params = validate_params(RawParams::new(12.0, delta, r))?;
        for scheme in [Scheme::Be, Scheme::Bdf2] {
            let pts = temporal_study(&film, &params, scheme, n, t_end, &dts)?;
            let orders = observed_orders(&pts);
            for (i, p) in pts.iter().enumerate() {
                let order = if i == 0 {
                    String::new()
                } else {
                    format!("{:.4}", orders[i - 1])
                };
                let _ = writeln!(
                    temporal,
                    "{scheme},{},{},{},{order}",
                    params.chi(),
                    fmt_f64(p.resolution),
                    fmt_f64(p.error)
                );
            }
            summary.push(format!(
                "{scheme}/chi={}: order {:.2}",
                params.chi(),
                orders.last().copied().unwrap_or(f64::NAN)
            ));
        }
    }
    write(mb, "mms_temporal.csv", &temporal)?;
    Ok(summary.join(", "))
}

fn nondimensionalize(mb: &mut ManifestBuilder, physical: &Path) -> CliResult<String> {
    mb.config_echo = std::fs::read_to_string(physical).map_err(io_at(physical))?;
    let p = load_physical(physical)?;
    let groups = dimensionless_numbers(&p)?;
    write(mb, "groups.csv", &groups.to_csv())?;
    write(mb, "solver.ini", &groups.solver_config())?;
    Ok(groups.warning.clone().unwrap_or_default())
}

fn parse_eps(s: Option<&str>) -> CliResult<Vec<f64>> {
    match s {
        None => Ok(DEFAULT_EPS.to_vec()),
        Some(s) => s
            .split(',')
            .map(|v| {
                let v = v.trim();
                let value = match v.split_once('/') {
                    Some((a, b)) => a
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .zip(b.trim().parse::<f64>().ok())
                        .map(|(a, b)| a / b),
                    None => v.parse().ok(),
                };
                value.ok_or_else(|| CliError::Usage(format!("cannot parse eps `{v}`")))
            })
            .collect(),
    }
}

/// Pairs keep the leading modes (`cos` in `c1`, `sin` in `c2`) and add a
/// random second harmonic and mean.
fn random_pairs(count: usize, seed: u64) -> Vec<TestFunctionPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let mut series = |lead_cos: bool| {
                let lead = (1, rng.random_range(0.5..1.0));
                let extra_cos = (2, rng.random_range(-0.3..0.3));
                let extra_sin = (2, rng.random_range(-0.3..0.3));
                let mean = rng.random_range(-0.3..0.3);
                if lead_cos {
                    TrigSeries {
                        mean,
                        cos: vec![lead, extra_cos],
                        sin: vec![extra_sin],
                    }
                } else {
                    TrigSeries {
                        mean,
                        cos: vec![extra_cos],
                        sin: vec![lead, extra_sin],
                    }
                }
            };
            let c1 = series(true);
            let c2 = series(false);
            TestFunctionPair {
                name: format!("random{}", k + 1),
                c1,
                c2,
            }
        })
        .collect()
}

fn sweep_eps(
    mb: &mut ManifestBuilder,
    config: &Path,
    traj: Option<&Path>,
    eps: Option<&str>,
    extra: usize,
    q: usize,
    seed: Option<u64>,
) -> CliResult<String> {
    let cfg = load_config(mb, config)?;
    let snaps = match traj {
        Some(dir) => csvio::read_trajectory(dir, &cfg.params)?,
        None => solver::run(&cfg)?.snapshots,
    };
    let harness = HarnessParams {
        quad_order: q,
        ..HarnessParams::default()
    };
    let pw = PreparedWindow::new(&snaps, &cfg.params, harness)?;
    let eps_list = parse_eps(eps)?;
    let mut pairs = TestFunctionPair::bundled();
    pairs.extend(random_pairs(extra, seed.unwrap_or(0)));
    let table = eps_sweep_slopes(&pw, &eps_list, &pairs)?;

    let mut limit = String::from("pair,pressure_identity,reynolds_identity,total\n");
    let mut defects = String::from("pair,eps,scaled_sum_defect\n");
    for (k, pair) in table.pairs.iter().enumerate() {
        let mut text = String::from("term,eps,magnitude,predicted_exponent,fitted_slope\n");
        for (term, predicted, fitted) in &pair.slopes {
            for b in &pair.breakdowns {
                let _ = writeln!(
                    text,
                    "{term},{},{},{},{}",
                    fmt_f64(b.eps),
                    fmt_f64(b.magnitude(*term)),
                    fmt_f64(*predicted),
                    fitted.map(fmt_f64).unwrap_or_default()
                );
            }
        }
        write(mb, &format!("sweep_pair{}.csv", k + 1), &text)?;
        let _ = writeln!(
            limit,
            "{},{},{},{}",
            pair.pair,
            fmt_f64(pair.limit.pressure_identity),
            fmt_f64(pair.limit.reynolds_identity),
            fmt_f64(pair.limit.total())
        );
        for (e, d) in pair.scaled_sum_defects() {
            let _ = writeln!(defects, "{},{},{}", pair.pair, fmt_f64(e), fmt_f64(d));
        }
    }
    write(mb, "sweep_limit.csv", &limit)?;
    write(mb, "sweep_defects.csv", &defects)?;
    Ok(format!(
        "{} pairs x {} eps; worst |slope - predicted| = {:.3}",
        table.pairs.len(),
        eps_list.len(),
        table.worst_slope_error()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_ranges() {
        assert_eq!(parse_modes("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_modes("2, 5").unwrap(), vec![2, 5]);
        assert!(parse_modes("4..1").is_err());
    }

    #[test]
    fn eps_lists() {
        assert_eq!(parse_eps(Some("1/8, 0.5")).unwrap(), vec![0.125, 0.5]);
        assert_eq!(parse_eps(None).unwrap().len(), 5);
    }

    #[test]
    fn random_pairs_are_reproducible() {
        assert_eq!(random_pairs(2, 7), random_pairs(2, 7));
        assert_ne!(random_pairs(1, 7), random_pairs(1, 8));
    }

    #[test]
    fn exit_codes() {
        let pos = CliError::Core(Error::PositivityViolation {
            node: 0,
            t: 0.0,
            value: 0.0,
        });
        assert_eq!(pos.exit_code(), 2);
        let cfg = CliError::Core(Error::Config {
            file: "a".into(),
            line: 1,
            msg: "m".into(),
        });
        assert_eq!(cfg.exit_code(), 1);
        let unrec = CliError::Core(Error::UnrecoverableStep {
            t: 0.0,
            dt: 0.0,
            reason: String::new(),
            diagnostics: Box::default(),
        });
        assert_eq!(unrec.exit_code(), 3);
    }
}
