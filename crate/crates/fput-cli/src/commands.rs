//! Subcommand implementations: build models from the resolved config, run
//! the core routines and write the CSV/JSON outputs.

use std::path::Path;

use serde_json::json;

use fput_core::chaos::{indicators, ChaosConfig, ClassifyThresholds};
use fput_core::exec::Execution;
use fput_core::experiments::{
    chaos_fraction, coefficient_sweep, derive_seed, fit_quadratic, quadratic_positive_root,
    recurrence_metrics, sample_disorder, EnsembleSpec,
};
use fput_core::integrators::{
    integrate_adaptive_rk8, integrate_symplectic, IntegratorConfig, LatticeOde, OdeSystem,
    Trajectory, TrajectoryStatus,
};
use fput_core::io;
use fput_core::lattice::{initial_condition_mode1, LatticeModel, Variant};
use fput_core::modes::{
    extract_quadratic_coefficients, mode_energies, to_modes, truncated_mode_rhs, ModeBasis,
    ModeState,
};
use fput_core::two_mode::{
    classify_region, delta_crit_limits, equilibria, ic_amplitude_sq, ic_constant, phase_portrait,
    reduced_trajectory, GridSpec,
};

use crate::config::{parse_grid, parse_n_list, RunConfig};

pub enum Outcome {
    Success,
    BlowUpDetected(f64),
}

pub enum CliError {
    InvalidConfig(String),
    Integration(String),
    Io(String),
}

type CmdResult = Result<Outcome, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::InvalidConfig(msg.into())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn dispatch(cfg: &RunConfig) -> CmdResult {
    match cfg.command.as_str() {
        "simulate" => simulate(cfg),
        "mode-energies" => mode_energies_cmd(cfg),
        "two-mode" => two_mode_cmd(cfg),
        "bifurcation" => bifurcation_cmd(cfg),
        "sweep-coefficients" => sweep_cmd(cfg),
        "chaos-scan" => chaos_scan_cmd(cfg),
        "recurrence" => recurrence_cmd(cfg),
        other => Err(invalid(format!("unknown command `{other}`"))),
    }
}

fn execution(cfg: &RunConfig) -> Execution {
    Execution::with_workers(cfg.workers)
}

fn integrator_config(cfg: &RunConfig) -> IntegratorConfig {
    IntegratorConfig {
        dt: cfg.dt,
        abs_tol: cfg.abs_tol,
        rel_tol: cfg.rel_tol,
        t_final: cfg.t_final,
        escape_radius: cfg.escape_radius,
        output_stride: cfg.stride,
        initial_step: cfg.initial_step,
    }
}

/// Resolves variant + disorder into a validated model.
fn build_model(cfg: &RunConfig) -> Result<LatticeModel, CliError> {
    let variant = match cfg.variant.as_str() {
        "auto" => {
            if cfg.tau > 0.0 {
                Variant::DisorderedNonlinear
            } else {
                Variant::Homogeneous
            }
        }
        "homogeneous" => {
            if cfg.tau > 0.0 {
                return Err(invalid("homogeneous variant is incompatible with tau > 0"));
            }
            Variant::Homogeneous
        }
        "disordered" => Variant::DisorderedNonlinear,
        other => return Err(invalid(format!("unknown variant `{other}`"))),
    };
    let disorder = sample_disorder(cfg.tau, cfg.n, derive_seed(cfg.seed, 0, 0));
    LatticeModel::new(cfg.n, cfg.alpha, disorder, variant).map_err(|e| invalid(e.to_string()))
}

/// Integrator choice; the symplectic path refuses the disordered variant.
fn resolve_integrator(cfg: &RunConfig, model: &LatticeModel) -> Result<&'static str, CliError> {
    match cfg.integrator.as_str() {
        "auto" => Ok(if model.variant() == Variant::Homogeneous {
            "yoshida"
        } else {
            "rk8"
        }),
        "yoshida" => {
            if model.variant() != Variant::Homogeneous {
                return Err(invalid(
                    "the symplectic integrator requires the homogeneous variant",
                ));
            }
            Ok("yoshida")
        }
        "rk8" => Ok("rk8"),
        other => Err(invalid(format!("unknown integrator `{other}`"))),
    }
}

fn run_lattice_trajectory(cfg: &RunConfig, model: &LatticeModel) -> Result<Trajectory, CliError> {
    let icfg = integrator_config(cfg);
    icfg.validate().map_err(|e| invalid(e.to_string()))?;
    let initial = initial_condition_mode1(cfg.n);
    match resolve_integrator(cfg, model)? {
        "yoshida" => integrate_symplectic(model, &initial, &icfg)
            .map_err(|e| CliError::Integration(e.to_string())),
        _ => {
            let ode = LatticeOde::new(model);
            integrate_adaptive_rk8(&ode, &LatticeOde::pack(&initial), &icfg)
                .map_err(|e| CliError::Integration(e.to_string()))
        }
    }
}

fn status_outcome(status: &TrajectoryStatus) -> CmdResult {
    match status {
        TrajectoryStatus::Completed => Ok(Outcome::Success),
        TrajectoryStatus::BlownUpAt(t) => Ok(Outcome::BlowUpDetected(*t)),
        TrajectoryStatus::Failed => {
            Err(CliError::Integration("adaptive step size underflow".into()))
        }
    }
}

fn simulate(cfg: &RunConfig) -> CmdResult {
    let model = build_model(cfg)?;
    let traj = run_lattice_trajectory(cfg, &model)?;
    io::write_trajectory_csv(&cfg.out.join("trajectory.csv"), &traj, cfg.n).map_err(io_err)?;
    status_outcome(&traj.status)
}

/// Truncated mode dynamics: state `[Q_1..Q_m, P_1..P_m]`.
struct TruncatedOde<'a> {
    basis: &'a ModeBasis,
    model: &'a LatticeModel,
    m: usize,
}

impl OdeSystem for TruncatedOde<'_> {
    fn dim(&self) -> usize {
        2 * self.m
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let (q, p) = y.split_at(self.m);
        let accel = truncated_mode_rhs(q, self.basis, self.model)
            .expect("dimensions fixed at construction");
        dydt[..self.m].copy_from_slice(p);
        dydt[self.m..].copy_from_slice(&accel);
    }

    fn escape_norm(&self, y: &[f64]) -> f64 {
        y[..self.m].iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

fn mode_energies_cmd(cfg: &RunConfig) -> CmdResult {
    let model = build_model(cfg)?;
    let basis = ModeBasis::new(cfg.n);
    if cfg.modes > 0 {
        // truncated system integrated directly in mode space
        let m = cfg.modes;
        if m > cfg.n {
            return Err(invalid(format!("modes = {m} exceeds n = {}", cfg.n)));
        }
        let ode = TruncatedOde {
            basis: &basis,
            model: &model,
            m,
        };
        let mut y0 = vec![0.0; 2 * m];
        y0[0] = ((cfg.n as f64 + 1.0) / 2.0).sqrt();
        let icfg = integrator_config(cfg);
        icfg.validate().map_err(|e| invalid(e.to_string()))?;
        let traj = integrate_adaptive_rk8(&ode, &y0, &icfg)
            .map_err(|e| CliError::Integration(e.to_string()))?;
        let rows: Vec<(f64, Vec<f64>)> = traj
            .samples
            .iter()
            .map(|(t, y)| {
                let energies = (0..m)
                    .map(|k| {
                        let w = basis.frequencies()[k];
                        0.5 * (y[m + k] * y[m + k] + w * w * y[k] * y[k])
                    })
                    .collect();
                (*t, energies)
            })
            .collect();
        io::write_mode_energy_csv(&cfg.out.join("mode_energies.csv"), &rows, m).map_err(io_err)?;
        return status_outcome(&traj.status);
    }

    let traj = run_lattice_trajectory(cfg, &model)?;
    let rows: Vec<(f64, Vec<f64>)> = traj
        .samples
        .iter()
        .map(|(t, y)| {
            let n = cfg.n;
            let ms = to_modes(
                &fput_core::lattice::PhaseState {
                    x: y[..n].to_vec(),
                    p: y[n..].to_vec(),
                    t: *t,
                },
                &basis,
            )
            .expect("dimensions match");
            let e = mode_energies(&ms, &basis).expect("dimensions match");
            (*t, e)
        })
        .collect();
    io::write_mode_energy_csv(&cfg.out.join("mode_energies.csv"), &rows, cfg.n).map_err(io_err)?;
    status_outcome(&traj.status)
}

/// Ã, B̃ either given explicitly or extracted from a lattice realization.
fn resolve_couplings(cfg: &RunConfig) -> Result<(f64, f64), CliError> {
    match (cfg.a_tilde.is_nan(), cfg.b_tilde.is_nan()) {
        (false, false) => Ok((cfg.a_tilde, cfg.b_tilde)),
        (true, true) => {
            let model = LatticeModel::new(
                cfg.n,
                cfg.alpha,
                sample_disorder(cfg.tau, cfg.n, derive_seed(cfg.seed, 0, 0)),
                Variant::DisorderedNonlinear,
            )
            .map_err(|e| invalid(e.to_string()))?;
            let basis = ModeBasis::new(cfg.n);
            let qc = extract_quadratic_coefficients(&model, &basis)
                .map_err(|e| invalid(e.to_string()))?;
            Ok((qc.a_tilde, qc.b_tilde))
        }
        _ => Err(invalid(
            "give both --a-tilde and --b-tilde, or neither (extraction)",
        )),
    }
}

fn two_mode_cmd(cfg: &RunConfig) -> CmdResult {
    let (a, b) = resolve_couplings(cfg)?;
    let c = if cfg.c.is_nan() {
        ic_constant(a, b, cfg.n)
    } else {
        cfg.c
    };
    let report = equilibria(a, b, c).map_err(|e| invalid(e.to_string()))?;
    let doc = json!({
        "a_tilde": a,
        "b_tilde": b,
        "c": c,
        "r1_sq_ic": ic_amplitude_sq(cfg.n),
        "report": report,
    });
    write_json(&cfg.out.join("equilibria.json"), &doc)?;

    let grid = GridSpec {
        delta_min: cfg.delta_min,
        delta_max: cfg.delta_max,
        delta_steps: cfg.delta_steps,
        theta_steps: cfg.theta_steps,
    };
    let cells = phase_portrait(a, b, c, &grid);
    io::write_phase_portrait_csv(&cfg.out.join("portrait.csv"), &cells).map_err(io_err)?;

    // trajectory of the canonical initial condition, escape allowed
    let traj = reduced_trajectory(
        a,
        b,
        cfg.n,
        cfg.slow_span,
        cfg.direction,
        cfg.handoff,
        1e3,
        400,
    )
    .map_err(|e| CliError::Integration(e.to_string()))?;
    io::write_reduced_trajectory_csv(&cfg.out.join("reduced_trajectory.csv"), &traj.points)
        .map_err(io_err)?;
    Ok(Outcome::Success)
}

fn bifurcation_cmd(cfg: &RunConfig) -> CmdResult {
    let (a, b) = resolve_couplings(cfg)?;
    let r1_sq = ic_amplitude_sq(cfg.n);
    let descriptor = classify_region(a, b, r1_sq).map_err(|e| invalid(e.to_string()))?;
    let c = if cfg.c.is_nan() { descriptor.c } else { cfg.c };
    let report = equilibria(a, b, c).map_err(|e| invalid(e.to_string()))?;
    let limits = if b > 0.0 {
        let seq: Vec<f64> = (1..=6).map(|k| b * 10f64.powi(-k)).collect();
        delta_crit_limits(a, &seq, r1_sq).ok().map(|l| {
            l.iter()
                .map(|(d1, d2)| json!({"delta_crit_1": d1, "delta_crit_2": d2}))
                .collect::<Vec<_>>()
        })
    } else {
        None
    };
    let doc = json!({
        "a_tilde": a,
        "b_tilde": b,
        "r1_sq": r1_sq,
        "region": descriptor,
        "equilibria": report,
        "delta_crit_limit_sequence": limits,
    });
    write_json(&cfg.out.join("bifurcation.json"), &doc)?;
    Ok(Outcome::Success)
}

fn sweep_cmd(cfg: &RunConfig) -> CmdResult {
    let tau_grid = parse_grid(&cfg.tau_grid).map_err(|e| invalid(e.to_string()))?;
    let spec = EnsembleSpec {
        tau_grid,
        realizations: cfg.realizations,
        n_particles: cfg.n,
        master_seed: cfg.seed,
    };
    let stats = coefficient_sweep(&spec, cfg.alpha, execution(cfg))
        .map_err(|e| CliError::Integration(e.to_string()))?;
    io::write_sweep_csv(&cfg.out.join("sweep.csv"), &stats).map_err(io_err)?;

    let taus: Vec<f64> = stats.iter().map(|s| s.tau).collect();
    let means: Vec<f64> = stats.iter().map(|s| s.mean_b).collect();
    let ((c2, c1, c0), sse) =
        fit_quadratic(&taus, &means).map_err(|e| CliError::Integration(e.to_string()))?;
    let tau_c = quadratic_positive_root(c2, c1, c0);
    if tau_c.is_none() {
        eprintln!("note: fitted B̃(τ) has no positive root in range");
    }
    let doc = json!({
        "coefficients": {"c2": c2, "c1": c1, "c0": c0},
        "sse": sse,
        "tau_c": tau_c,
        "realizations": cfg.realizations,
        "n": cfg.n,
        "alpha": cfg.alpha,
        "master_seed": cfg.seed,
    });
    write_json(&cfg.out.join("regression.json"), &doc)?;
    Ok(Outcome::Success)
}

fn chaos_scan_cmd(cfg: &RunConfig) -> CmdResult {
    let n_values = parse_n_list(&cfg.n_list).map_err(|e| invalid(e.to_string()))?;
    if n_values.is_empty() {
        return Err(invalid("n_list is empty"));
    }
    let chaos_cfg = ChaosConfig {
        integrator: IntegratorConfig {
            dt: cfg.dt,
            abs_tol: cfg.abs_tol,
            rel_tol: cfg.rel_tol,
            t_final: cfg.horizon,
            escape_radius: cfg.escape_radius,
            output_stride: cfg.stride,
            initial_step: cfg.initial_step,
        },
        renorm_interval: cfg.renorm_interval,
        ..Default::default()
    };
    let thresholds = ClassifyThresholds::default();
    let rows = chaos_fraction(
        &n_values,
        cfg.tau,
        cfg.realizations,
        cfg.horizon,
        cfg.alpha,
        &chaos_cfg,
        &thresholds,
        cfg.seed,
        execution(cfg),
    )
    .map_err(|e| CliError::Integration(e.to_string()))?;
    io::write_chaos_fraction_csv(&cfg.out.join("chaos_fraction.csv"), &rows).map_err(io_err)?;
    write_json(
        &cfg.out.join("verdicts.json"),
        &serde_json::to_value(&rows).unwrap(),
    )?;

    if cfg.export_series {
        for &n in &n_values {
            let seed = derive_seed(cfg.seed, n as u64, 0);
            let model = if cfg.tau == 0.0 {
                LatticeModel::homogeneous(n, cfg.alpha)
            } else {
                LatticeModel::new(
                    n,
                    cfg.alpha,
                    sample_disorder(cfg.tau, n, seed),
                    Variant::DisorderedNonlinear,
                )
            }
            .map_err(|e| invalid(e.to_string()))?;
            let run_cfg = ChaosConfig {
                deviation_seed: derive_seed(seed, 0xDE7, 0),
                ..chaos_cfg
            };
            if let Ok(run) = indicators(&model, &initial_condition_mode1(n), cfg.horizon, &run_cfg)
            {
                io::write_series_csv(&cfg.out.join(format!("mle_n{n}_r0.csv")), &run.mle)
                    .map_err(io_err)?;
                io::write_series_csv(&cfg.out.join(format!("sali_n{n}_r0.csv")), &run.sali)
                    .map_err(io_err)?;
            }
        }
    }
    Ok(Outcome::Success)
}

fn recurrence_cmd(cfg: &RunConfig) -> CmdResult {
    let model = build_model(cfg)?;
    let basis = ModeBasis::new(cfg.n);
    let traj = run_lattice_trajectory(cfg, &model)?;
    let n = cfg.n;
    let mut times = Vec::with_capacity(traj.samples.len());
    let mut e1 = Vec::with_capacity(traj.samples.len());
    let mut rows = Vec::with_capacity(traj.samples.len());
    for (t, y) in &traj.samples {
        let ms = ModeState {
            q: basis.apply(&y[..n]),
            p: basis.apply(&y[n..]),
            t: *t,
        };
        let e = mode_energies(&ms, &basis).expect("dimensions match");
        times.push(*t);
        e1.push(e[0]);
        rows.push((*t, vec![e[0]]));
    }
    io::write_mode_energy_csv(&cfg.out.join("e1.csv"), &rows, 1).map_err(io_err)?;

    match recurrence_metrics(&times, &e1) {
        Ok(report) => {
            let doc = json!({
                "initial_energy": e1.first(),
                "degradation": report.degradation,
                "peaks": report.peaks,
                "status": traj.status,
            });
            write_json(&cfg.out.join("recurrence.json"), &doc)?;
        }
        Err(e) => {
            let doc = json!({
                "initial_energy": e1.first(),
                "error": e.to_string(),
                "status": traj.status,
            });
            write_json(&cfg.out.join("recurrence.json"), &doc)?;
        }
    }
    status_outcome(&traj.status)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(io_err)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}
