//! Slow-time envelope reduction of the two lowest normal modes near the
//! 1:2 resonance, its polar form, equilibria, stability and phase portraits.
//!
//! The complex envelopes obey
//!
//! ```text
//! i q₁' = q₁ + Ã q₁* q₂
//! i q₂' = q₂ + B̃ q₁²
//! ```
//!
//! in the slow time `T = εt` with `ε = ω₂ - 2ω₁ < 0`. Writing
//! `q₁ = r₁ e^{iφ₁}`, `q₂ = r₂ e^{2iφ₂}` and `Δ = r₁² - r₂²`,
//! `θ = φ₂ - φ₁`, the combination `C = P - ((Ã-B̃)/(Ã+B̃))Δ` with
//! `P = r₁² + r₂²` is conserved, and the dynamics closes in `(Δ, θ)` on the
//! well-defined region `P - Δ > 0`, `P + Δ ≥ 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{Dop853, IntegratorConfig, OdeSystem, TrajectoryStatus};

/// Complex mode envelopes at a slow time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeState {
    pub q1: Complex64,
    pub q2: Complex64,
    pub t_slow: f64,
}

/// Envelope derivatives `(dq₁/dT, dq₂/dT)`.
pub fn envelope_rhs(state: &EnvelopeState, a_tilde: f64, b_tilde: f64) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    let dq1 = -i * (state.q1 + a_tilde * state.q1.conj() * state.q2);
    let dq2 = -i * (state.q2 + b_tilde * state.q1 * state.q1);
    (dq1, dq2)
}

/// Envelope initial condition matching the lowest-mode lattice excitation:
/// `q₁(0) = Q₁(0)/2 = sqrt((N+1)/2)/2`, `q₂(0) = 0`.
pub fn initial_envelope(n: usize) -> EnvelopeState {
    assert!(n >= 2, "two-mode reduction needs at least two modes");
    EnvelopeState {
        q1: Complex64::new(0.5 * ((n as f64 + 1.0) / 2.0).sqrt(), 0.0),
        q2: Complex64::new(0.0, 0.0),
        t_slow: 0.0,
    }
}

/// `r₁² = (N+1)/8` of the canonical initial condition.
pub fn ic_amplitude_sq(n: usize) -> f64 {
    (n as f64 + 1.0) / 8.0
}

/// Conserved constant of the canonical initial condition (the `q₂ → 0⁺`
/// limit): `C = 2 B̃ r₁² / (Ã + B̃)`.
pub fn ic_constant(a_tilde: f64, b_tilde: f64, n: usize) -> f64 {
    2.0 * b_tilde * ic_amplitude_sq(n) / (a_tilde + b_tilde)
}

/// Polar/reduced coordinates with the conserved constant and parameters.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReducedState {
    pub delta: f64,
    /// Phase difference reduced mod π into `[0, π)`.
    pub theta: f64,
    pub c: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
}

impl ReducedState {
    pub fn p(&self) -> f64 {
        self.c + (self.a_tilde - self.b_tilde) / (self.a_tilde + self.b_tilde) * self.delta
    }

    pub fn in_well_defined_region(&self) -> bool {
        let p = self.p();
        p - self.delta > 0.0 && p + self.delta >= 0.0
    }
}

pub fn wrap_theta(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    theta.rem_euclid(pi)
}

/// Converts envelopes to `(Δ, θ, C)`. Fails when either amplitude vanishes
/// (phases undefined); integrate a short envelope segment first to move off
/// such points.
pub fn to_reduced(state: &EnvelopeState, a_tilde: f64, b_tilde: f64) -> Result<ReducedState> {
    if a_tilde + b_tilde == 0.0 {
        return Err(Error::Singular("a_tilde + b_tilde = 0".into()));
    }
    let r1 = state.q1.norm();
    let r2 = state.q2.norm();
    if r1 == 0.0 || r2 == 0.0 {
        return Err(Error::PhaseUndefined);
    }
    let phi1 = state.q1.arg();
    let phi2 = 0.5 * state.q2.arg();
    let delta = r1 * r1 - r2 * r2;
    let p = r1 * r1 + r2 * r2;
    let ratio = (a_tilde - b_tilde) / (a_tilde + b_tilde);
    Ok(ReducedState {
        delta,
        theta: wrap_theta(phi2 - phi1),
        c: p - ratio * delta,
        a_tilde,
        b_tilde,
    })
}

/// Reduced vector field `(dΔ/dT, dθ/dT)`; requires `P - Δ > 0`.
pub fn reduced_rhs(state: &ReducedState) -> Result<(f64, f64)> {
    let (a, b) = (state.a_tilde, state.b_tilde);
    let p = state.p();
    let delta = state.delta;
    let gap = p - delta;
    if gap <= 0.0 {
        return Err(Error::OutOfRegion);
    }
    let root = (2.0 * gap).sqrt();
    let (sin2t, cos2t) = (2.0 * state.theta).sin_cos();
    let d_delta = root * sin2t * (p + delta) * (a + b) / 2.0;
    let d_theta = -(2.0 * a * cos2t * (delta - p) + b * cos2t * (delta + p) - root) / (2.0 * root);
    Ok((d_delta, d_theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Centre,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquilibriumPoint {
    pub theta: f64,
    pub delta: f64,
    pub stability: Stability,
    pub in_well_defined_region: bool,
    /// Square of the eigenvalue pair `λ² = rad/9`; the pair is `±√(λ²)`.
    pub lambda_squared: f64,
}

impl EquilibriumPoint {
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let l = Complex64::new(self.lambda_squared, 0.0).sqrt();
        (l, -l)
    }
}

/// Which side(s) of the critical Δ bounds the well-defined region occupies,
/// by the value of `(Ã-B̃)/(Ã+B̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeltaRegion {
    /// ratio ≥ 1: `Δ > max(Δ¹crit, Δ²crit)`
    AboveBoth,
    /// -1 ≤ ratio < 1: `Δ²crit ≤ Δ < Δ¹crit`
    Between,
    /// ratio < -1: `Δ < min(Δ¹crit, Δ²crit)`
    BelowBoth,
}

fn delta_region(ratio: f64) -> DeltaRegion {
    if ratio >= 1.0 {
        DeltaRegion::AboveBoth
    } else if ratio >= -1.0 {
        DeltaRegion::Between
    } else {
        DeltaRegion::BelowBoth
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub points: Vec<EquilibriumPoint>,
    pub region: DeltaRegion,
    pub delta_crit_1: f64,
    pub delta_crit_2: f64,
    /// Value of the existence gate `1 + 6Ã(Ã+B̃)C`; points exist iff ≥ 0.
    pub existence_gate: f64,
    /// Set when `B̃ = 0`: the closed-form Δ's are singular and only the
    /// critical bounds (as limits) are meaningful.
    pub b_singular: bool,
}

/// Equilibria of the reduced system with their stability.
///
/// For `B̃ > 0` the points sit at `θ₁ = 0` and `θ₂ = π/2`; for `B̃ < 0`
/// both sit at `θ = π/2`.
pub fn equilibria(a_tilde: f64, b_tilde: f64, c: f64) -> Result<EquilibriumReport> {
    if a_tilde + b_tilde == 0.0 {
        return Err(Error::Singular("a_tilde + b_tilde = 0".into()));
    }
    if a_tilde == 0.0 {
        return Err(Error::Singular("a_tilde = 0".into()));
    }
    let ratio = (a_tilde - b_tilde) / (a_tilde + b_tilde);
    let delta_crit_1 = c * (a_tilde + b_tilde) / (2.0 * b_tilde);
    let delta_crit_2 = -c * (a_tilde + b_tilde) / (2.0 * a_tilde);
    let existence_gate = 1.0 + 6.0 * a_tilde * (a_tilde + b_tilde) * c;
    let region = delta_region(ratio);

    if b_tilde == 0.0 {
        return Ok(EquilibriumReport {
            points: Vec::new(),
            region,
            delta_crit_1,
            delta_crit_2,
            existence_gate,
            b_singular: true,
        });
    }

    let mut points = Vec::new();
    if existence_gate >= 0.0 {
        let sqrt_gate = existence_gate.sqrt();
        for j in 1..=2 {
            let sign = if j == 1 { 1.0 } else { -1.0 }; // -(-1)^j
            let delta = ((6.0 * a_tilde * a_tilde * c - 3.0 * a_tilde * b_tilde * c
                + sign * sqrt_gate
                - 1.0)
                * (a_tilde + b_tilde))
                / (18.0 * a_tilde * a_tilde * b_tilde);
            let theta = if b_tilde > 0.0 && j == 1 {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2
            };
            let radicand = -3.0
                - 18.0 * a_tilde * a_tilde * c
                - 18.0 * a_tilde * b_tilde * c
                - sign * 6.0 * sqrt_gate;
            let lambda_squared = radicand / 9.0;
            let stability = if radicand < 0.0 {
                Stability::Centre
            } else if radicand > 0.0 {
                Stability::Saddle
            } else {
                Stability::Degenerate
            };
            let probe = ReducedState {
                delta,
                theta,
                c,
                a_tilde,
                b_tilde,
            };
            points.push(EquilibriumPoint {
                theta,
                delta,
                stability,
                in_well_defined_region: probe.in_well_defined_region(),
                lambda_squared,
            });
        }
    }
    Ok(EquilibriumReport {
        points,
        region,
        delta_crit_1,
        delta_crit_2,
        existence_gate,
        b_singular: false,
    })
}

/// Region classification for the canonical initial condition at given
/// parameters: ratio case, the two bifurcation thresholds and boundedness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegionDescriptor {
    pub ratio: f64,
    pub region: DeltaRegion,
    /// `1 + 12ÃB̃r₁²`: equilibria exist iff ≥ 0 (the lower threshold curve).
    pub existence_threshold: f64,
    /// `1 - 4ÃB̃r₁²`: separates two-centre from centre/saddle configurations.
    pub centre_saddle_threshold: f64,
    /// Bounded dynamics iff `B̃ ≥ 0`; for `B̃ < 0` the region extends to
    /// Δ → ±∞ and trajectories may escape.
    pub bounded: bool,
    pub c: f64,
    pub delta_crit_1: f64,
    pub delta_crit_2: f64,
}

pub fn classify_region(a_tilde: f64, b_tilde: f64, r1_sq: f64) -> Result<RegionDescriptor> {
    if a_tilde + b_tilde == 0.0 {
        return Err(Error::Singular("a_tilde + b_tilde = 0".into()));
    }
    let ratio = (a_tilde - b_tilde) / (a_tilde + b_tilde);
    let c = 2.0 * b_tilde * r1_sq / (a_tilde + b_tilde);
    Ok(RegionDescriptor {
        ratio,
        region: delta_region(ratio),
        existence_threshold: 1.0 + 12.0 * a_tilde * b_tilde * r1_sq,
        centre_saddle_threshold: 1.0 - 4.0 * a_tilde * b_tilde * r1_sq,
        bounded: b_tilde >= 0.0,
        c,
        delta_crit_1: c * (a_tilde + b_tilde) / (2.0 * b_tilde),
        delta_crit_2: -c * (a_tilde + b_tilde) / (2.0 * a_tilde),
    })
}

/// Critical Δ bounds along a positive `B̃` sequence with the canonical-IC
/// constant: `(Δ¹crit, Δ²crit) → (r₁², 0)` as `B̃ → 0⁺`.
pub fn delta_crit_limits(
    a_tilde: f64,
    b_tilde_sequence: &[f64],
    r1_sq: f64,
) -> Result<Vec<(f64, f64)>> {
    if b_tilde_sequence.iter().any(|&b| b.is_nan() || b <= 0.0) {
        return Err(Error::InvalidParameter(
            "b_tilde sequence must be positive".into(),
        ));
    }
    Ok(b_tilde_sequence
        .iter()
        .map(|&b| {
            let c = 2.0 * b * r1_sq / (a_tilde + b);
            (
                c * (a_tilde + b) / (2.0 * b),
                -c * (a_tilde + b) / (2.0 * a_tilde),
            )
        })
        .collect())
}

/// Envelope system as a flat 4-dim real ODE in the slow time.
pub struct EnvelopeOde {
    pub a_tilde: f64,
    pub b_tilde: f64,
}

impl OdeSystem for EnvelopeOde {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let state = EnvelopeState {
            q1: Complex64::new(y[0], y[1]),
            q2: Complex64::new(y[2], y[3]),
            t_slow: 0.0,
        };
        let (d1, d2) = envelope_rhs(&state, self.a_tilde, self.b_tilde);
        dydt[0] = d1.re;
        dydt[1] = d1.im;
        dydt[2] = d2.re;
        dydt[3] = d2.im;
    }
}

/// Integrates the envelope equations to `t_slow_end` (either sign), sampling
/// `n_samples` points after the start.
pub fn integrate_envelope(
    a_tilde: f64,
    b_tilde: f64,
    initial: &EnvelopeState,
    t_slow_end: f64,
    n_samples: usize,
) -> Result<Vec<EnvelopeState>> {
    let ode = EnvelopeOde { a_tilde, b_tilde };
    let cfg = IntegratorConfig::default();
    let y0 = vec![initial.q1.re, initial.q1.im, initial.q2.re, initial.q2.im];
    let mut stepper = Dop853::new(&ode, initial.t_slow, y0, &cfg)?;
    let mut out = Vec::with_capacity(n_samples + 1);
    out.push(*initial);
    for k in 1..=n_samples {
        let target = initial.t_slow + (t_slow_end - initial.t_slow) * k as f64 / n_samples as f64;
        if let Some(t) = stepper.advance_to(target, Some(1e12))? {
            return Err(Error::BlowUp(t));
        }
        let y = stepper.y();
        out.push(EnvelopeState {
            q1: Complex64::new(y[0], y[1]),
            q2: Complex64::new(y[2], y[3]),
            t_slow: stepper.t(),
        });
    }
    Ok(out)
}

/// Reduced system as a 2-dim ODE; component 0 is Δ (used for escape checks).
struct ReducedOde {
    a_tilde: f64,
    b_tilde: f64,
    c: f64,
}

impl OdeSystem for ReducedOde {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let state = ReducedState {
            delta: y[0],
            theta: y[1],
            c: self.c,
            a_tilde: self.a_tilde,
            b_tilde: self.b_tilde,
        };
        match reduced_rhs(&state) {
            Ok((dd, dt)) => {
                dydt[0] = dd;
                dydt[1] = dt;
            }
            // off-region probes (rejected stages) get a NaN slope
            Err(_) => {
                dydt[0] = f64::NAN;
                dydt[1] = f64::NAN;
            }
        }
    }

    fn escape_norm(&self, y: &[f64]) -> f64 {
        y[0].abs()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedTrajectory {
    /// `(T, Δ, θ)` samples; θ wrapped into `[0, π)`.
    pub points: Vec<(f64, f64, f64)>,
    pub status: TrajectoryStatus,
    /// Conserved constant actually used after the coordinate hand-off.
    pub c: f64,
}

/// Trajectory of the canonical initial condition in reduced coordinates.
///
/// The start point has `q₂ = 0` where `θ` is undefined and the reduced
/// field is singular, so the first `handoff` of slow time is integrated in
/// envelope coordinates before switching charts. `direction = -1` follows
/// the physical slow time (`T = εt` with `ε < 0`); the escape-radius check
/// applies to `|Δ|`.
#[allow(clippy::too_many_arguments)]
pub fn reduced_trajectory(
    a_tilde: f64,
    b_tilde: f64,
    n: usize,
    slow_span: f64,
    direction: f64,
    handoff: f64,
    escape_delta: f64,
    n_samples: usize,
) -> Result<ReducedTrajectory> {
    if slow_span.is_nan()
        || handoff.is_nan()
        || slow_span <= 0.0
        || handoff <= 0.0
        || handoff >= slow_span
    {
        return Err(Error::InvalidParameter(
            "need 0 < handoff < slow_span".into(),
        ));
    }
    let dir = if direction < 0.0 { -1.0 } else { 1.0 };
    let seg = integrate_envelope(a_tilde, b_tilde, &initial_envelope(n), dir * handoff, 8)?;
    let start = to_reduced(seg.last().unwrap(), a_tilde, b_tilde)?;

    let ode = ReducedOde {
        a_tilde,
        b_tilde,
        c: start.c,
    };
    let cfg = IntegratorConfig {
        escape_radius: escape_delta,
        ..Default::default()
    };
    let mut stepper = Dop853::new(&ode, dir * handoff, vec![start.delta, start.theta], &cfg)?;
    let mut points = vec![(dir * handoff, start.delta, wrap_theta(start.theta))];
    let mut status = TrajectoryStatus::Completed;
    'sampling: for k in 1..=n_samples {
        let target = dir * (handoff + (slow_span - handoff) * k as f64 / n_samples as f64);
        match stepper.advance_to(target, Some(escape_delta)) {
            Ok(None) => {
                let y = stepper.y();
                points.push((stepper.t(), y[0], wrap_theta(y[1])));
            }
            Ok(Some(t)) => {
                let y = stepper.y();
                points.push((t, y[0], wrap_theta(y[1])));
                status = TrajectoryStatus::BlownUpAt(t);
                break 'sampling;
            }
            Err(_) => {
                // step underflow: typically a grazing pass of the chart
                // boundary P - Δ = 0; stop there
                status = TrajectoryStatus::Failed;
                break 'sampling;
            }
        }
    }
    Ok(ReducedTrajectory {
        points,
        status,
        c: start.c,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_steps: usize,
    pub theta_steps: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PortraitCell {
    pub theta: f64,
    pub delta: f64,
    pub d_theta: f64,
    pub d_delta: f64,
    pub in_region: bool,
}

/// Samples the reduced vector field on a `(θ, Δ)` grid; θ spans `[0, π)`.
/// Cells outside the well-defined region carry zero field and a cleared flag.
pub fn phase_portrait(a_tilde: f64, b_tilde: f64, c: f64, grid: &GridSpec) -> Vec<PortraitCell> {
    let pi = std::f64::consts::PI;
    let mut cells = Vec::with_capacity(grid.theta_steps * grid.delta_steps);
    for i in 0..grid.theta_steps {
        let theta = pi * i as f64 / grid.theta_steps as f64;
        for j in 0..grid.delta_steps {
            let delta = if grid.delta_steps == 1 {
                grid.delta_min
            } else {
                grid.delta_min
                    + (grid.delta_max - grid.delta_min) * j as f64 / (grid.delta_steps - 1) as f64
            };
            let state = ReducedState {
                delta,
                theta,
                c,
                a_tilde,
                b_tilde,
            };
            let cell = match reduced_rhs(&state) {
                Ok((dd, dt)) if state.in_well_defined_region() => PortraitCell {
                    theta,
                    delta,
                    d_theta: dt,
                    d_delta: dd,
                    in_region: true,
                },
                _ => PortraitCell {
                    theta,
                    delta,
                    d_theta: 0.0,
                    d_delta: 0.0,
                    in_region: false,
                },
            };
            cells.push(cell);
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const R1_SQ_N64: f64 = 65.0 / 8.0;

    #[test]
    fn envelope_rhs_zero_fixed_point() {
        let s = EnvelopeState {
            q1: Complex64::new(0.0, 0.0),
            q2: Complex64::new(0.0, 0.0),
            t_slow: 0.0,
        };
        let (d1, d2) = envelope_rhs(&s, 3.63, 0.91);
        assert_eq!(d1, Complex64::new(0.0, 0.0));
        assert_eq!(d2, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn initial_envelope_values() {
        let s = initial_envelope(64);
        assert_relative_eq!(s.q1.re, 2.85043856274784, max_relative = 1e-12);
        assert_eq!(s.q1.im, 0.0);
        assert_eq!(s.q2, Complex64::new(0.0, 0.0));
        assert_relative_eq!(s.q1.norm_sqr(), R1_SQ_N64, max_relative = 1e-12);

        let s3 = initial_envelope(3);
        assert_relative_eq!(
            s3.q1.re,
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_b_means_no_energy_transfer() {
        // with B̃ = 0 and q₂(0) = 0, q₂ stays zero and |q₁| is constant
        let states = integrate_envelope(4.0, 0.0, &initial_envelope(64), -50.0, 100).unwrap();
        let r1_0 = states[0].q1.norm();
        for s in &states {
            assert!(s.q2.norm() < 1e-13, "|q2| = {}", s.q2.norm());
            assert_relative_eq!(s.q1.norm(), r1_0, max_relative = 1e-9);
        }
    }

    #[test]
    fn to_reduced_equal_amplitudes_give_zero_delta() {
        let s = EnvelopeState {
            q1: Complex64::from_polar(1.3, 0.4),
            q2: Complex64::from_polar(1.3, 1.1),
            t_slow: 0.0,
        };
        let r = to_reduced(&s, 3.63, 0.91).unwrap();
        assert!(r.delta.abs() < 1e-14);
    }

    #[test]
    fn to_reduced_ic_constant_matches_limit() {
        // just off the singular start, C approaches 2 B̃ r₁² / (Ã + B̃)
        let (a, b) = (3.63, 0.91);
        let seg = integrate_envelope(a, b, &initial_envelope(64), -1e-3, 4).unwrap();
        let r = to_reduced(seg.last().unwrap(), a, b).unwrap();
        let expected = ic_constant(a, b, 64);
        assert_relative_eq!(r.c, expected, max_relative = 1e-6);
        assert_relative_eq!(expected, 3.2571586, max_relative = 1e-6);
    }

    #[test]
    fn to_reduced_rejects_zero_amplitudes() {
        let s = initial_envelope(64);
        assert!(matches!(
            to_reduced(&s, 3.63, 0.91),
            Err(Error::PhaseUndefined)
        ));
    }

    #[test]
    fn reduced_rhs_zero_where_sin_vanishes() {
        for theta in [0.0, std::f64::consts::FRAC_PI_2] {
            let s = ReducedState {
                delta: 2.0,
                theta,
                c: 3.2571586,
                a_tilde: 3.63,
                b_tilde: 0.91,
            };
            let (dd, _) = reduced_rhs(&s).unwrap();
            assert!(dd.abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_rhs_out_of_region_errors() {
        let s = ReducedState {
            delta: 100.0,
            theta: 0.3,
            c: 3.2571586,
            a_tilde: 3.63,
            b_tilde: 0.91,
        };
        assert!(matches!(reduced_rhs(&s), Err(Error::OutOfRegion)));
    }

    #[test]
    fn equilibria_reference_parameter_sets() {
        // τ = 0 parameters
        let c = ic_constant(3.63, 0.91, 64);
        let rep = equilibria(3.63, 0.91, c).unwrap();
        assert_eq!(rep.points.len(), 2);
        let p1 = &rep.points[0];
        let p2 = &rep.points[1];
        assert_eq!(p1.theta, 0.0);
        assert_relative_eq!(p1.delta, 5.0948, epsilon = 5e-4);
        assert_eq!(p1.stability, Stability::Centre);
        assert_relative_eq!(p2.theta, std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(p2.delta, 4.3386, epsilon = 5e-4);
        assert_eq!(p2.stability, Stability::Centre);

        // negative-B̃ parameters: centre + saddle, both at θ = π/2
        let c = ic_constant(5.3932, -0.0015, 64);
        let rep = equilibria(5.3932, -0.0015, c).unwrap();
        let p1 = &rep.points[0];
        let p2 = &rep.points[1];
        assert_relative_eq!(p1.theta, std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(p1.delta, 9.1274, epsilon = 1e-3);
        assert_eq!(p1.stability, Stability::Centre);
        assert_relative_eq!(p2.delta, 15.4383, epsilon = 1e-3);
        assert_eq!(p2.stability, Stability::Saddle);
    }

    #[test]
    fn equilibria_are_roots_of_reduced_field() {
        for (a, b) in [(3.63, 0.91), (4.97, 0.05), (5.3932, -0.0015)] {
            let c = ic_constant(a, b, 64);
            let rep = equilibria(a, b, c).unwrap();
            for p in &rep.points {
                let s = ReducedState {
                    delta: p.delta,
                    theta: p.theta,
                    c,
                    a_tilde: a,
                    b_tilde: b,
                };
                let (dd, dt) = reduced_rhs(&s).unwrap();
                assert!(
                    dd.abs() < 1e-10 && dt.abs() < 1e-10,
                    "(A,B)=({a},{b}) residual ({dd}, {dt})"
                );
            }
        }
    }

    #[test]
    fn formula_eigenvalues_match_numerical_jacobian() {
        for (a, b) in [(3.63, 0.91), (5.3932, -0.0015)] {
            let c = ic_constant(a, b, 64);
            let rep = equilibria(a, b, c).unwrap();
            for p in &rep.points {
                // central-difference 2x2 Jacobian of the reduced field
                let h = 1e-6;
                let eval = |delta: f64, theta: f64| {
                    reduced_rhs(&ReducedState {
                        delta,
                        theta,
                        c,
                        a_tilde: a,
                        b_tilde: b,
                    })
                    .unwrap()
                };
                let (f1p, f2p) = eval(p.delta + h, p.theta);
                let (f1m, f2m) = eval(p.delta - h, p.theta);
                let (g1p, g2p) = eval(p.delta, p.theta + h);
                let (g1m, g2m) = eval(p.delta, p.theta - h);
                let j11 = (f1p - f1m) / (2.0 * h);
                let j21 = (f2p - f2m) / (2.0 * h);
                let j12 = (g1p - g1m) / (2.0 * h);
                let j22 = (g2p - g2m) / (2.0 * h);
                // eigenvalues of [[j11, j12], [j21, j22]]: λ² - tr λ + det
                let tr = j11 + j22;
                let det = j11 * j22 - j12 * j21;
                // the field is trace-free at equilibria; λ² = tr²/4 - det ≈ -det
                assert!(tr.abs() < 1e-5, "trace {tr}");
                let lambda_sq_num = tr * tr / 4.0 - det;
                assert_relative_eq!(
                    lambda_sq_num,
                    p.lambda_squared,
                    max_relative = 1e-6,
                    epsilon = 1e-6
                );
            }
        }
    }

    #[test]
    fn equilibria_singular_and_gate_cases() {
        assert!(equilibria(1.0, -1.0, 0.5).is_err());
        // B̃ = 0: singular flag, no closed-form points
        let rep = equilibria(4.0, 0.0, 0.0).unwrap();
        assert!(rep.b_singular);
        assert!(rep.points.is_empty());
        // violated existence gate: C very negative
        let rep = equilibria(4.0, -2.0, -10.0).unwrap();
        assert!(rep.existence_gate < 0.0);
        assert!(rep.points.is_empty());
    }

    #[test]
    fn region_reference_case_is_bounded_two_centres() {
        let d = classify_region(3.63, 0.91, R1_SQ_N64).unwrap();
        assert!(d.bounded);
        // far above the centre/saddle curve: threshold strongly negative
        assert!(d.centre_saddle_threshold < 0.0);
        assert!(d.existence_threshold > 0.0);
        assert_eq!(d.region, DeltaRegion::Between);
        assert!(d.delta_crit_2 <= 0.0 && d.delta_crit_1 > 0.0);
    }

    #[test]
    fn region_negative_b_is_unbounded() {
        let d = classify_region(5.3932, -0.0015, R1_SQ_N64).unwrap();
        assert!(!d.bounded);
        assert!(d.existence_threshold > 0.0); // equilibria still exist
    }

    #[test]
    fn region_ratio_edge_case_equal_parameters() {
        let d = classify_region(2.0, 2.0, 1.0).unwrap();
        assert_eq!(d.ratio, 0.0);
        assert_eq!(d.region, DeltaRegion::Between);
    }

    #[test]
    fn delta_crit_limit_pair() {
        let seq = [1e-2, 1e-4, 1e-6];
        let lims = delta_crit_limits(5.0, &seq, R1_SQ_N64).unwrap();
        // Δ¹crit equals r₁² identically under the canonical-IC constant
        for (d1, _) in &lims {
            assert_relative_eq!(*d1, R1_SQ_N64, epsilon = 1e-5);
        }
        // Δ²crit shrinks to zero at the same rate as B̃
        let (_, d2_last) = lims[2];
        assert!(d2_last.abs() < 2e-6 * R1_SQ_N64);
        assert_relative_eq!(d2_last, -1e-6 * R1_SQ_N64 / 5.0, max_relative = 1e-9);
        // degenerate chain: r₁² = 0 collapses both limits
        let lims0 = delta_crit_limits(5.0, &seq, 0.0).unwrap();
        assert!(lims0.iter().all(|(a, b)| *a == 0.0 && *b == 0.0));
        assert!(delta_crit_limits(5.0, &[0.0], 1.0).is_err());
    }

    #[test]
    fn envelope_conserves_reduction_constant() {
        // C computed from the envelopes stays constant along the flow
        let (a, b) = (3.63, 0.91);
        let start = {
            let seg = integrate_envelope(a, b, &initial_envelope(64), -1e-3, 4).unwrap();
            *seg.last().unwrap()
        };
        let c0 = to_reduced(&start, a, b).unwrap().c;
        let states = integrate_envelope(a, b, &start, -100.0, 200).unwrap();
        for s in &states {
            if s.q2.norm() < 1e-8 {
                continue; // phases ill-conditioned at grazing passes
            }
            let c = to_reduced(s, a, b).unwrap().c;
            assert!((c - c0).abs() < 1e-9, "C drift {}", (c - c0).abs());
        }
    }

    #[test]
    fn escaping_trajectory_at_negative_b() {
        // Fig-10-type parameters: the canonical IC lies in the unbounded
        // region and |Δ| must exceed 10³ in finite slow time.
        let traj = reduced_trajectory(5.3932, -0.0015, 64, 50.0, -1.0, 1e-3, 1e3, 400).unwrap();
        match traj.status {
            TrajectoryStatus::BlownUpAt(t) => {
                assert!(t.abs() < 50.0);
                let last = traj.points.last().unwrap();
                assert!(last.1.abs() >= 1e3 * 0.99, "Δ = {}", last.1);
            }
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn phase_portrait_masks_and_symmetry() {
        let c = ic_constant(3.63, 0.91, 64);
        let grid = GridSpec {
            delta_min: -10.0,
            delta_max: 10.0,
            delta_steps: 41,
            theta_steps: 16,
        };
        let cells = phase_portrait(3.63, 0.91, c, &grid);
        assert_eq!(cells.len(), 41 * 16);
        assert!(cells.iter().any(|c| c.in_region));
        assert!(cells.iter().any(|c| !c.in_region));
        // Δ̇ vanishes along θ = 0 and θ = π/2 rows
        for cell in cells.iter().filter(|c| c.in_region) {
            if cell.theta == 0.0 {
                assert!(cell.d_delta.abs() < 1e-12);
            }
        }
    }
}
