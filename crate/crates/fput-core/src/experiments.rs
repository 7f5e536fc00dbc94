//! Ensemble experiments: disorder sampling, coefficient sweeps over the
//! tolerance grid, the variability-threshold regression, recurrence metrics
//! and chaos-fraction scans.
//!
//! Realizations are seeded from a master seed by a counter-based split, so
//! results are identical whatever the execution order or worker count.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::Serialize;

use crate::chaos::{classify, indicators, ChaosConfig, ChaosLabel, ClassifyThresholds};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::integrators::TrajectoryStatus;
use crate::lattice::{initial_condition_mode1, DisorderProfile, LatticeModel, Variant};
use crate::modes::{extract_quadratic_coefficients, ModeBasis};

/// Counter-based seed split (splitmix64 finalizer over master/lane/index).
pub fn derive_seed(master: u64, lane: u64, index: u64) -> u64 {
    let mut z = master
        ^ lane.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws per-site tolerance factors from a Gaussian with mean 1 and
/// `σ = (1/3)·0.01·τ`, resampling any draw outside
/// `[1 - 0.01τ, 1 + 0.01τ]`. Boundary entries stay 1.
pub fn sample_disorder(tau_percent: f64, n: usize, seed: u64) -> DisorderProfile {
    assert!(tau_percent >= 0.0, "tolerance must be non-negative");
    if tau_percent == 0.0 {
        return DisorderProfile::unit(n);
    }
    let sigma = 0.01 * tau_percent / 3.0;
    let half_width = 0.01 * tau_percent;
    let normal = Normal::new(1.0, sigma).expect("valid normal parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n + 2);
    values.push(1.0);
    for _ in 0..n {
        let v = loop {
            let draw = normal.sample(&mut rng);
            if (draw - 1.0).abs() <= half_width {
                break draw;
            }
        };
        values.push(v);
    }
    values.push(1.0);
    DisorderProfile::from_values(values, tau_percent, seed)
        .expect("rejection sampling keeps values inside the interval")
}

/// Grid of tolerances, realization count, chain size and master seed for an
/// ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub tau_grid: Vec<f64>,
    pub realizations: usize,
    pub n_particles: usize,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.realizations < 1 {
            return Err(Error::InvalidParameter("realizations must be >= 1".into()));
        }
        if self.n_particles < 2 {
            return Err(Error::InvalidParameter("n_particles must be >= 2".into()));
        }
        if self.tau_grid.is_empty() || self.tau_grid.iter().any(|t| t.is_nan() || *t < 0.0) {
            return Err(Error::InvalidParameter(
                "tau grid must be non-empty and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-tolerance ensemble statistics of the reduced coupling parameters.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoefficientStats {
    pub tau: f64,
    pub mean_a: f64,
    pub sd_a: f64,
    pub mean_b: f64,
    pub sd_b: f64,
    pub failures: usize,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Extracts `(Ã, B̃)` per disorder realization and aggregates mean and
/// standard deviation per tolerance.
pub fn coefficient_sweep(
    spec: &EnsembleSpec,
    alpha: f64,
    exec: Execution,
) -> Result<Vec<CoefficientStats>> {
    spec.validate()?;
    let n = spec.n_particles;
    let basis = ModeBasis::new(n);
    let mut out = Vec::with_capacity(spec.tau_grid.len());
    for (ti, &tau) in spec.tau_grid.iter().enumerate() {
        let results = exec::map_indexed(exec, spec.realizations, |r| {
            let seed = derive_seed(spec.master_seed, ti as u64, r as u64);
            let profile = sample_disorder(tau, n, seed);
            let model = LatticeModel::new(n, alpha, profile, Variant::DisorderedNonlinear)?;
            let qc = extract_quadratic_coefficients(&model, &basis)?;
            Ok::<(f64, f64), Error>((qc.a_tilde, qc.b_tilde))
        });
        let mut a_vals = Vec::with_capacity(spec.realizations);
        let mut b_vals = Vec::with_capacity(spec.realizations);
        let mut failures = 0;
        for r in results {
            match r {
                Ok((a, b)) => {
                    a_vals.push(a);
                    b_vals.push(b);
                }
                Err(_) => failures += 1,
            }
        }
        if a_vals.is_empty() {
            return Err(Error::IntegrationFailed(format!(
                "every realization failed at tau = {tau}"
            )));
        }
        let (mean_a, sd_a) = mean_sd(&a_vals);
        let (mean_b, sd_b) = mean_sd(&b_vals);
        out.push(CoefficientStats {
            tau,
            mean_a,
            sd_a,
            mean_b,
            sd_b,
            failures,
        });
    }
    Ok(out)
}

/// Quadratic fit of the mean `B̃(τ)` and its positive root.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegressionResult {
    /// `(c₂, c₁, c₀)` of `c₂τ² + c₁τ + c₀`.
    pub coefficients: (f64, f64, f64),
    pub sse: f64,
    /// Smallest positive root: the tolerance where the mean `B̃` changes sign.
    pub tau_c: f64,
}

/// Least-squares quadratic `(c₂, c₁, c₀)` through `(τ, B̃)` plus the sum of
/// squared errors.
pub fn fit_quadratic(tau_grid: &[f64], b_means: &[f64]) -> Result<((f64, f64, f64), f64)> {
    if tau_grid.len() != b_means.len() {
        return Err(Error::DimensionMismatch {
            expected: tau_grid.len(),
            actual: b_means.len(),
        });
    }
    if tau_grid.len() < 3 {
        return Err(Error::InvalidParameter(
            "quadratic fit needs at least 3 points".into(),
        ));
    }
    // normal equations for [τ², τ, 1]
    let mut m = [[0.0_f64; 3]; 3];
    let mut rhs = [0.0_f64; 3];
    for (&t, &y) in tau_grid.iter().zip(b_means) {
        let row = [t * t, t, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    let beta = solve3(m, rhs).ok_or_else(|| Error::Singular("degenerate tau grid".into()))?;
    let (c2, c1, c0) = (beta[0], beta[1], beta[2]);
    let sse: f64 = tau_grid
        .iter()
        .zip(b_means)
        .map(|(&t, &y)| {
            let fit = c2 * t * t + c1 * t + c0;
            (fit - y) * (fit - y)
        })
        .sum();
    Ok(((c2, c1, c0), sse))
}

/// Fit plus the sign-change threshold (smallest positive root).
pub fn fit_tau_c(tau_grid: &[f64], b_means: &[f64]) -> Result<RegressionResult> {
    let ((c2, c1, c0), sse) = fit_quadratic(tau_grid, b_means)?;
    let tau_c = quadratic_positive_root(c2, c1, c0).ok_or(Error::NoPositiveRoot)?;
    Ok(RegressionResult {
        coefficients: (c2, c1, c0),
        sse,
        tau_c,
    })
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot =
            (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in (row + 1)..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Smallest positive real root of `c₂x² + c₁x + c₀`.
pub fn quadratic_positive_root(c2: f64, c1: f64, c0: f64) -> Option<f64> {
    if c2 == 0.0 {
        if c1 == 0.0 {
            return None;
        }
        let r = -c0 / c1;
        return (r > 0.0).then_some(r);
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let roots = [(-c1 + sq) / (2.0 * c2), (-c1 - sq) / (2.0 * c2)];
    roots
        .into_iter()
        .filter(|r| *r > 0.0)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Peak {
    pub time: f64,
    pub height: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub peaks: Vec<Peak>,
    /// True when consecutive peak heights strictly decrease.
    pub degradation: bool,
}

/// Local maxima of the lowest-mode energy series with a prominence filter
/// at 10% of the initial energy.
///
/// A flat series (no mode coupling) yields one trivial plateau peak and no
/// degradation; an empty or peakless non-flat series is an error.
pub fn recurrence_metrics(times: &[f64], e1: &[f64]) -> Result<RecurrenceReport> {
    if times.len() != e1.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: e1.len(),
        });
    }
    if e1.is_empty() {
        return Err(Error::NoPeaks);
    }
    let threshold = 0.1 * e1[0];
    let mut peaks = Vec::new();
    for i in 1..e1.len().saturating_sub(1) {
        if !(e1[i] > e1[i - 1] && e1[i] >= e1[i + 1]) {
            continue;
        }
        // walk outwards to the nearest higher ground on each side
        let mut left_min = e1[i];
        let mut k = i;
        while k > 0 && e1[k - 1] <= e1[i] {
            k -= 1;
            left_min = left_min.min(e1[k]);
        }
        let mut right_min = e1[i];
        let mut k = i;
        while k + 1 < e1.len() && e1[k + 1] <= e1[i] {
            k += 1;
            right_min = right_min.min(e1[k]);
        }
        let prominence = e1[i] - left_min.max(right_min);
        if prominence >= threshold {
            peaks.push(Peak {
                time: times[i],
                height: e1[i],
                prominence,
            });
        }
    }
    if peaks.is_empty() {
        let (lo, hi) = e1
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if hi - lo < threshold {
            // constant energy: a single trivial plateau
            let i_max = e1
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            return Ok(RecurrenceReport {
                peaks: vec![Peak {
                    time: times[i_max],
                    height: e1[i_max],
                    prominence: 0.0,
                }],
                degradation: false,
            });
        }
        return Err(Error::NoPeaks);
    }
    let degradation = peaks.windows(2).all(|w| w[1].height < w[0].height);
    Ok(RecurrenceReport { peaks, degradation })
}

/// One classified realization of a chaos scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RealizationVerdict {
    pub index: usize,
    pub seed: u64,
    pub label: ChaosLabel,
    pub mle_final: f64,
    pub sali_final: f64,
    pub horizon: f64,
}

/// Chaotic percentage over an ensemble at fixed `N`.
#[derive(Debug, Clone, Serialize)]
pub struct ChaosFractionRow {
    pub n: usize,
    pub realizations: usize,
    pub chaotic: usize,
    pub undetermined: usize,
    /// Percentage among determined verdicts.
    pub percent_chaotic: f64,
    pub percent_undetermined: f64,
    pub verdicts: Vec<RealizationVerdict>,
}

/// Classifies `realizations` seeded disorder draws per chain size. The
/// lowest-mode initial condition is fixed; `τ = 0` runs the Hamiltonian
/// chain through the symplectic tangent map instead.
///
/// Blown-up or failed runs count as undetermined and are excluded from the
/// chaotic percentage.
#[allow(clippy::too_many_arguments)]
pub fn chaos_fraction(
    n_values: &[usize],
    tau_percent: f64,
    realizations: usize,
    horizon: f64,
    alpha: f64,
    chaos_cfg: &ChaosConfig,
    thresholds: &ClassifyThresholds,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<ChaosFractionRow>> {
    if realizations < 1 {
        return Err(Error::InvalidParameter("realizations must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let initial = initial_condition_mode1(n);
        let verdicts = exec::map_indexed(exec, realizations, |r| {
            let seed = derive_seed(master_seed, n as u64, r as u64);
            let model = if tau_percent == 0.0 {
                LatticeModel::homogeneous(n, alpha)
            } else {
                LatticeModel::new(
                    n,
                    alpha,
                    sample_disorder(tau_percent, n, seed),
                    Variant::DisorderedNonlinear,
                )
            };
            let model = match model {
                Ok(m) => m,
                Err(_) => {
                    return RealizationVerdict {
                        index: r,
                        seed,
                        label: ChaosLabel::Undetermined,
                        mle_final: f64::NAN,
                        sali_final: f64::NAN,
                        horizon,
                    }
                }
            };
            let cfg = ChaosConfig {
                deviation_seed: derive_seed(seed, 0xDE7, 0),
                ..*chaos_cfg
            };
            match indicators(&model, &initial, horizon, &cfg) {
                Ok(run) if run.status == TrajectoryStatus::Completed => {
                    let v = classify(&run.mle, &run.sali, thresholds);
                    RealizationVerdict {
                        index: r,
                        seed,
                        label: v.label,
                        mle_final: v.mle_final,
                        sali_final: v.sali_final,
                        horizon: v.horizon,
                    }
                }
                _ => RealizationVerdict {
                    index: r,
                    seed,
                    label: ChaosLabel::Undetermined,
                    mle_final: f64::NAN,
                    sali_final: f64::NAN,
                    horizon,
                },
            }
        });
        let chaotic = verdicts
            .iter()
            .filter(|v| v.label == ChaosLabel::Chaotic)
            .count();
        let undetermined = verdicts
            .iter()
            .filter(|v| v.label == ChaosLabel::Undetermined)
            .count();
        let determined = realizations - undetermined;
        rows.push(ChaosFractionRow {
            n,
            realizations,
            chaotic,
            undetermined,
            percent_chaotic: if determined > 0 {
                100.0 * chaotic as f64 / determined as f64
            } else {
                0.0
            },
            percent_undetermined: 100.0 * undetermined as f64 / realizations as f64,
            verdicts,
        });
    }
    Ok(rows)
}
