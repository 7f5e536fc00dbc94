//! Chaos indicators: maximum Lyapunov exponent (mLE) from deviation-vector
//! renormalization, SALI from two normalized deviation vectors, and the
//! regular/chaotic verdict derived from both.
//!
//! The Hamiltonian chain propagates deviations through the tangent map of
//! the symplectic integrator; the disordered chain integrates the state
//! together with the deviation columns of the variational equation using the
//! adaptive RK8 path.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{self, Dop853, IntegratorConfig, TrajectoryStatus, VariationalLatticeOde};
use crate::lattice::{LatticeModel, PhaseState, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IndicatorKind {
    Mle,
    Sali,
}

/// Indicator time series on log-spaced sample times.
#[derive(Debug, Clone, Serialize)]
pub struct IndicatorSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: IndicatorKind,
}

impl IndicatorSeries {
    pub fn final_value(&self) -> f64 {
        *self.values.last().unwrap_or(&f64::NAN)
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// SALI values below machine resolution are clamped here.
pub const SALI_UNDERFLOW_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy)]
pub struct ChaosConfig {
    pub integrator: IntegratorConfig,
    /// Interval between deviation renormalizations.
    pub renorm_interval: f64,
    /// Log-spaced sample density of the output series.
    pub samples_per_decade: usize,
    /// Stop integrating once SALI falls below this; the verdict is settled.
    pub sali_stop_floor: f64,
    /// Seed for the random initial deviation vectors.
    pub deviation_seed: u64,
}

impl Default for ChaosConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig {
                t_final: 1e6,
                ..Default::default()
            },
            renorm_interval: 1.0,
            samples_per_decade: 16,
            sali_stop_floor: 1e-12,
            deviation_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChaosLabel {
    Regular,
    Chaotic,
    Undetermined,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChaosVerdict {
    pub label: ChaosLabel,
    pub mle_final: f64,
    pub sali_final: f64,
    pub horizon: f64,
}

/// Decision thresholds for [`classify`].
#[derive(Debug, Clone, Copy)]
pub struct ClassifyThresholds {
    /// SALI below this (with a positive mLE plateau) means chaotic.
    pub sali_chaotic_floor: f64,
    /// SALI above this (with a decaying mLE) means regular.
    pub sali_regular_floor: f64,
    /// mLE plateau test: last-decade mean must exceed this multiple of the
    /// 1/t envelope anchored at the start of the decade.
    pub plateau_factor: f64,
    /// Max final-decade log-log slope of the mLE for a regular verdict.
    pub regular_slope_max: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            sali_chaotic_floor: 1e-8,
            sali_regular_floor: 1e-4,
            plateau_factor: 3.0,
            regular_slope_max: -0.8,
        }
    }
}

/// Both indicator series from one pass, plus the run status.
#[derive(Debug, Clone)]
pub struct ChaosRun {
    pub mle: IndicatorSeries,
    pub sali: IndicatorSeries,
    pub status: TrajectoryStatus,
}

/// Seeded uniform random unit vector of the given dimension.
pub fn random_unit_deviation(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = norm(&v);
        if norm > 1e-3 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Seeded orthonormal pair (Gram-Schmidt on two random unit vectors).
pub fn orthonormal_deviation_pair(dim: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let w1 = random_unit_deviation(dim, seed);
    let mut w2 = random_unit_deviation(dim, seed.wrapping_add(0x9E3779B97F4A7C15));
    let dot: f64 = w1.iter().zip(&w2).map(|(a, b)| a * b).sum();
    for (b, a) in w2.iter_mut().zip(&w1) {
        *b -= dot * a;
    }
    let n2 = norm(&w2);
    for b in w2.iter_mut() {
        *b /= n2;
    }
    (w1, w2)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// SALI of two deviation vectors (normalized internally):
/// `min(‖ŵ₁ - ŵ₂‖, ‖ŵ₁ + ŵ₂‖)`.
pub fn sali_value(w1: &[f64], w2: &[f64]) -> f64 {
    let n1 = norm(w1);
    let n2 = norm(w2);
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (a, b) in w1.iter().zip(w2) {
        let u = a / n1;
        let v = b / n2;
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    diff.sqrt().min(sum.sqrt()).max(SALI_UNDERFLOW_FLOOR)
}

struct EngineOutput {
    times: Vec<f64>,
    mle: Vec<f64>,
    sali: Vec<f64>,
    status: TrajectoryStatus,
}

/// Advances state + deviations interval by interval, renormalizing and
/// accumulating the log growth of the first vector.
fn run_engine(
    model: &LatticeModel,
    initial: &PhaseState,
    deviations: Vec<Vec<f64>>,
    t_final: f64,
    cfg: &ChaosConfig,
) -> Result<EngineOutput> {
    let n = model.n_particles();
    if initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: initial.len(),
        });
    }
    if t_final.is_nan() || t_final <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    let track_sali = deviations.len() >= 2;
    let mut devs: Vec<Vec<f64>> = Vec::with_capacity(deviations.len());
    for w in &deviations {
        if w.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                actual: w.len(),
            });
        }
        let nw = norm(w);
        if nw == 0.0 || !nw.is_finite() {
            return Err(Error::DegenerateDeviations);
        }
        devs.push(w.iter().map(|x| x / nw).collect());
    }
    if track_sali && sali_value(&devs[0], &devs[1]) <= SALI_UNDERFLOW_FLOOR {
        return Err(Error::DegenerateDeviations);
    }

    let sample_factor = 10f64.powf(1.0 / cfg.samples_per_decade.max(1) as f64);
    let mut next_sample = cfg.renorm_interval;
    let mut times = Vec::new();
    let mut mle_values = Vec::new();
    let mut sali_values = Vec::new();
    let mut log_sum = 0.0;
    let mut status = TrajectoryStatus::Completed;

    let mut record = |t: f64, log_sum: f64, s: Option<f64>| {
        if times.last() == Some(&t) {
            return;
        }
        times.push(t);
        mle_values.push(log_sum / t);
        if let Some(s) = s {
            sali_values.push(s);
        }
    };

    match model.variant() {
        Variant::Homogeneous => {
            let steps_per_interval =
                (cfg.renorm_interval / cfg.integrator.dt).round().max(1.0) as u64;
            let interval_len = steps_per_interval as f64 * cfg.integrator.dt;
            let n_intervals = (t_final / interval_len).round().max(1.0) as u64;
            let coeffs = integrators::yoshida_coefficients();
            let mut scratch = integrators::SymplecticScratch::new(n);
            let mut x = initial.x.clone();
            let mut p = initial.p.clone();
            'outer: for interval in 1..=n_intervals {
                for _ in 0..steps_per_interval {
                    integrators::yoshida_tangent_step(
                        model,
                        &mut x,
                        &mut p,
                        &mut devs,
                        cfg.integrator.dt,
                        &coeffs,
                        &mut scratch,
                    );
                }
                let t = interval as f64 * interval_len;
                if x.iter()
                    .any(|v| !v.is_finite() || v.abs() > cfg.integrator.escape_radius)
                {
                    status = TrajectoryStatus::BlownUpAt(t);
                    break 'outer;
                }
                let growth = norm(&devs[0]);
                log_sum += growth.ln();
                for w in devs.iter_mut() {
                    let nw = norm(w);
                    for v in w.iter_mut() {
                        *v /= nw;
                    }
                }
                let s = track_sali.then(|| sali_value(&devs[0], &devs[1]));
                let last = interval == n_intervals;
                if t >= next_sample || last {
                    record(t, log_sum, s);
                    while next_sample <= t {
                        next_sample *= sample_factor;
                    }
                }
                if let Some(s) = s {
                    if s <= cfg.sali_stop_floor {
                        record(t, log_sum, Some(s));
                        break 'outer;
                    }
                }
            }
        }
        Variant::DisorderedNonlinear => {
            let ode = VariationalLatticeOde::new(model, devs.len());
            let y0 = VariationalLatticeOde::pack(initial, &devs);
            let mut stepper = Dop853::new(&ode, 0.0, y0, &cfg.integrator)?;
            let n_intervals = (t_final / cfg.renorm_interval).round().max(1.0) as u64;
            'outer2: for interval in 1..=n_intervals {
                let t_target = interval as f64 * cfg.renorm_interval;
                match stepper.advance_to(t_target, Some(cfg.integrator.escape_radius)) {
                    Ok(None) => {}
                    Ok(Some(t_blow)) => {
                        status = TrajectoryStatus::BlownUpAt(t_blow);
                        break 'outer2;
                    }
                    Err(_) => {
                        status = TrajectoryStatus::Failed;
                        break 'outer2;
                    }
                }
                let t = stepper.t();
                let mut growth = 0.0;
                let mut s_val = None;
                let n_dev = devs.len();
                stepper.mutate_state(|y| {
                    for k in 0..n_dev {
                        let w = &mut y[2 * n * (1 + k)..2 * n * (2 + k)];
                        let nw = norm(w);
                        if k == 0 {
                            growth = nw;
                        }
                        for v in w.iter_mut() {
                            *v /= nw;
                        }
                    }
                    if track_sali {
                        s_val = Some(sali_value(&y[2 * n..4 * n], &y[4 * n..6 * n]));
                    }
                });
                log_sum += growth.ln();
                let last = interval == n_intervals;
                if t >= next_sample || last {
                    record(t, log_sum, s_val);
                    while next_sample <= t {
                        next_sample *= sample_factor;
                    }
                }
                if let Some(s) = s_val {
                    if s <= cfg.sali_stop_floor {
                        record(t, log_sum, Some(s));
                        break 'outer2;
                    }
                }
            }
        }
    }

    Ok(EngineOutput {
        times,
        mle: mle_values,
        sali: sali_values,
        status,
    })
}

/// Finite-time mLE series `λ(t) = (1/t) Σ ln(‖w‖/‖w_prev‖)`.
pub fn mle(
    model: &LatticeModel,
    initial: &PhaseState,
    w0: &[f64],
    t_final: f64,
    renorm_interval: f64,
) -> Result<IndicatorSeries> {
    let cfg = ChaosConfig {
        renorm_interval,
        ..Default::default()
    };
    mle_with(model, initial, w0, t_final, &cfg)
}

pub fn mle_with(
    model: &LatticeModel,
    initial: &PhaseState,
    w0: &[f64],
    t_final: f64,
    cfg: &ChaosConfig,
) -> Result<IndicatorSeries> {
    let out = run_engine(model, initial, vec![w0.to_vec()], t_final, cfg)?;
    match out.status {
        TrajectoryStatus::Completed => Ok(IndicatorSeries {
            times: out.times,
            values: out.mle,
            kind: IndicatorKind::Mle,
        }),
        TrajectoryStatus::BlownUpAt(t) => Err(Error::BlowUp(t)),
        TrajectoryStatus::Failed => Err(Error::IntegrationFailed("mLE run failed".into())),
    }
}

/// SALI series from two deviation vectors.
pub fn sali(
    model: &LatticeModel,
    initial: &PhaseState,
    w1: &[f64],
    w2: &[f64],
    t_final: f64,
) -> Result<IndicatorSeries> {
    sali_with(model, initial, w1, w2, t_final, &ChaosConfig::default())
}

pub fn sali_with(
    model: &LatticeModel,
    initial: &PhaseState,
    w1: &[f64],
    w2: &[f64],
    t_final: f64,
    cfg: &ChaosConfig,
) -> Result<IndicatorSeries> {
    let out = run_engine(model, initial, vec![w1.to_vec(), w2.to_vec()], t_final, cfg)?;
    match out.status {
        TrajectoryStatus::Completed => Ok(IndicatorSeries {
            times: out.times,
            values: out.sali,
            kind: IndicatorKind::Sali,
        }),
        TrajectoryStatus::BlownUpAt(t) => Err(Error::BlowUp(t)),
        TrajectoryStatus::Failed => Err(Error::IntegrationFailed("SALI run failed".into())),
    }
}

/// Both indicators from a single pass with seeded orthonormal deviations.
/// Blow-up and failure are reported in the run status instead of an error.
pub fn indicators(
    model: &LatticeModel,
    initial: &PhaseState,
    t_final: f64,
    cfg: &ChaosConfig,
) -> Result<ChaosRun> {
    let (w1, w2) = orthonormal_deviation_pair(2 * model.n_particles(), cfg.deviation_seed);
    let out = run_engine(model, initial, vec![w1, w2], t_final, cfg)?;
    Ok(ChaosRun {
        mle: IndicatorSeries {
            times: out.times.clone(),
            values: out.mle,
            kind: IndicatorKind::Mle,
        },
        sali: IndicatorSeries {
            times: out.times,
            values: out.sali,
            kind: IndicatorKind::Sali,
        },
        status: out.status,
    })
}

/// Log-log slope of the decay envelope `max_{s ≤ t} |λ(s)·s| / t` over
/// samples with `t ≥ t_min` — the 1/t guide line drawn through the largest
/// excursion reached so far.
///
/// A zero-exponent (regular) signal keeps `|λ·t|` bounded, so the envelope
/// slope settles at -1 even when the raw values oscillate through zero, as
/// they do for a purely linear chain. A chaotic plateau drives the slope
/// toward 0.
pub fn envelope_decay_slope(series: &IndicatorSeries, t_min: f64) -> f64 {
    let mut cummax = 0.0_f64;
    let mut pts = Vec::new();
    for (t, v) in series.times.iter().zip(&series.values) {
        cummax = cummax.max((v * t).abs());
        if *t >= t_min && cummax > 0.0 {
            pts.push((t.log10(), (cummax / t).log10()));
        }
    }
    if pts.len() < 3 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Least-squares slope of `log10(v)` vs `log10(t)` over the final decade.
/// Returns `-inf` when fewer than three positive values are available
/// (a hard-decaying signal).
fn final_decade_slope(times: &[f64], values: &[f64]) -> f64 {
    let horizon = match times.last() {
        Some(&t) => t,
        None => return f64::NAN,
    };
    let lo = horizon / 10.0;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= lo && **v > 0.0)
        .map(|(t, v)| (t.log10(), v.log10()))
        .collect();
    if pts.len() < 3 {
        return f64::NEG_INFINITY;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Final mLE value against the 1/t envelope through the largest excursion
/// of the first series decade: plateau iff
/// `λ(horizon) > factor · max_{t ≤ horizon/10}(λ·t) / horizon`,
/// i.e. the accumulated deviation growth `λ·t` keeps climbing well past its
/// early level instead of saturating. Robust to series that stop early when
/// SALI collapses right after chaos onset.
fn has_positive_plateau(times: &[f64], values: &[f64], factor: f64) -> bool {
    let (horizon, final_value) = match (times.last(), values.last()) {
        (Some(&t), Some(&v)) => (t, v),
        _ => return false,
    };
    let lo = horizon / 10.0;
    let mut anchor = 0.0_f64;
    for (t, v) in times.iter().zip(values) {
        if *t <= lo {
            anchor = anchor.max(v * t);
        }
    }
    final_value > 0.0 && final_value * horizon > factor * anchor
}

/// Regular/chaotic verdict from the two indicator series.
///
/// Chaotic: SALI under the chaotic floor and a positive mLE plateau.
/// Regular: SALI above the regular floor and an mLE still decaying — either
/// a final-decade slope under the bound, or no plateau at all. The second
/// branch keeps slow `ln(t/t₀)/t` transients (large regular chains at the
/// desk-scale horizon) from landing in the undetermined bucket.
pub fn classify(
    mle_series: &IndicatorSeries,
    sali_series: &IndicatorSeries,
    thresholds: &ClassifyThresholds,
) -> ChaosVerdict {
    let mle_final = mle_series.final_value();
    let sali_final = sali_series.final_value();
    let horizon = mle_series.horizon().max(sali_series.horizon());

    let plateau = has_positive_plateau(
        &mle_series.times,
        &mle_series.values,
        thresholds.plateau_factor,
    );
    let label = if sali_final < thresholds.sali_chaotic_floor && plateau {
        ChaosLabel::Chaotic
    } else if sali_final > thresholds.sali_regular_floor
        && (!plateau
            || final_decade_slope(&mle_series.times, &mle_series.values)
                <= thresholds.regular_slope_max)
    {
        ChaosLabel::Regular
    } else {
        ChaosLabel::Undetermined
    };
    ChaosVerdict {
        label,
        mle_final,
        sali_final,
        horizon,
    }
}
