//! Fourth-order symplectic composition (triple jump over leapfrog) and its
//! tangent map for deviation-vector propagation.

use crate::error::{Error, Result};
use crate::lattice::{LatticeModel, PhaseState, Variant};

use super::{IntegratorConfig, Trajectory, TrajectoryStatus};

/// Drift/kick coefficients of the triple-jump composition: three leapfrog
/// substeps scaled by `w1, w0, w1` with `w1 = 1/(2 - 2^{1/3})`,
/// `w0 = -2^{1/3} w1`. Merging adjacent drifts leaves 4 drifts and 3 kicks.
pub(crate) fn coefficients() -> ([f64; 4], [f64; 3]) {
    let cbrt2 = 2.0_f64.cbrt();
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 * w1;
    (
        [0.5 * w1, 0.5 * (w0 + w1), 0.5 * (w0 + w1), 0.5 * w1],
        [w1, w0, w1],
    )
}

fn require_hamiltonian(model: &LatticeModel) -> Result<()> {
    if model.variant() != Variant::Homogeneous {
        return Err(Error::WrongVariant {
            required: "Homogeneous",
        });
    }
    Ok(())
}

#[inline]
fn drift(x: &mut [f64], p: &[f64], h: f64) {
    for (xi, pi) in x.iter_mut().zip(p) {
        *xi += h * pi;
    }
}

#[inline]
fn kick(model: &LatticeModel, x: &[f64], p: &mut [f64], h: f64, accel: &mut [f64]) {
    model.accelerations_into(x, accel);
    for (pi, ai) in p.iter_mut().zip(accel.iter()) {
        *pi += h * ai;
    }
}

pub(crate) struct Scratch {
    accel: Vec<f64>,
    jac: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            accel: vec![0.0; n],
            jac: vec![0.0; n],
        }
    }
}

pub(crate) fn step_inplace(
    model: &LatticeModel,
    x: &mut [f64],
    p: &mut [f64],
    dt: f64,
    (c, d): &([f64; 4], [f64; 3]),
    scratch: &mut Scratch,
) {
    drift(x, p, c[0] * dt);
    for i in 0..3 {
        kick(model, x, p, d[i] * dt, &mut scratch.accel);
        drift(x, p, c[i + 1] * dt);
    }
}

/// Same composition with every substep linearized: each kick applies the
/// tridiagonal force Jacobian to the `δx` block of every deviation vector.
pub(crate) fn tangent_step_inplace(
    model: &LatticeModel,
    x: &mut [f64],
    p: &mut [f64],
    deviations: &mut [Vec<f64>],
    dt: f64,
    (c, d): &([f64; 4], [f64; 3]),
    scratch: &mut Scratch,
) {
    let n = x.len();
    let drift_all = |devs: &mut [Vec<f64>], h: f64| {
        for w in devs.iter_mut() {
            let (wx, wp) = w.split_at_mut(n);
            drift(wx, wp, h);
        }
    };
    drift(x, p, c[0] * dt);
    drift_all(deviations, c[0] * dt);
    for i in 0..3 {
        let h = d[i] * dt;
        // force and its Jacobian are evaluated at the same positions
        for w in deviations.iter_mut() {
            let (wx, wp) = w.split_at_mut(n);
            model.force_jacobian_mul(x, wx, &mut scratch.jac);
            for (wpi, ji) in wp.iter_mut().zip(scratch.jac.iter()) {
                *wpi += h * ji;
            }
        }
        kick(model, x, p, h, &mut scratch.accel);
        let hc = c[i + 1] * dt;
        drift(x, p, hc);
        drift_all(deviations, hc);
    }
}

/// One fourth-order symplectic step of the homogeneous chain.
pub fn yoshida4_step(state: &PhaseState, model: &LatticeModel, dt: f64) -> Result<PhaseState> {
    require_hamiltonian(model)?;
    if state.len() != model.n_particles() {
        return Err(Error::DimensionMismatch {
            expected: model.n_particles(),
            actual: state.len(),
        });
    }
    if !state.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let coeffs = coefficients();
    let mut scratch = Scratch::new(state.len());
    let mut x = state.x.clone();
    let mut p = state.p.clone();
    step_inplace(model, &mut x, &mut p, dt, &coeffs, &mut scratch);
    Ok(PhaseState {
        x,
        p,
        t: state.t + dt,
    })
}

/// Advances the state and a set of deviation vectors (each `[δx, δp]` of
/// length `2N`) through the linearization of the same symplectic step.
pub fn tangent_map_step(
    state: &PhaseState,
    deviations: &[Vec<f64>],
    model: &LatticeModel,
    dt: f64,
) -> Result<(PhaseState, Vec<Vec<f64>>)> {
    require_hamiltonian(model)?;
    let n = model.n_particles();
    if state.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: state.len(),
        });
    }
    for w in deviations {
        if w.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                actual: w.len(),
            });
        }
    }
    let coeffs = coefficients();
    let mut scratch = Scratch::new(n);
    let mut x = state.x.clone();
    let mut p = state.p.clone();
    let mut devs: Vec<Vec<f64>> = deviations.to_vec();
    tangent_step_inplace(model, &mut x, &mut p, &mut devs, dt, &coeffs, &mut scratch);
    Ok((
        PhaseState {
            x,
            p,
            t: state.t + dt,
        },
        devs,
    ))
}

/// Fixed-step symplectic integration with stride sampling and blow-up
/// detection. Samples hold `[x, p]` state vectors.
pub fn integrate_symplectic(
    model: &LatticeModel,
    initial: &PhaseState,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    require_hamiltonian(model)?;
    config.validate()?;
    let n = model.n_particles();
    if initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: initial.len(),
        });
    }
    if !initial.is_finite() {
        return Err(Error::NonFiniteState);
    }

    let coeffs = coefficients();
    let mut scratch = Scratch::new(n);
    let mut x = initial.x.clone();
    let mut p = initial.p.clone();
    let total_steps = (config.t_final / config.dt).round() as u64;
    let stride_steps = (config.output_stride / config.dt).round().max(1.0) as u64;

    let pack = |x: &[f64], p: &[f64]| {
        let mut y = Vec::with_capacity(2 * n);
        y.extend_from_slice(x);
        y.extend_from_slice(p);
        y
    };
    let mut samples = vec![(initial.t, pack(&x, &p))];
    for step in 1..=total_steps {
        step_inplace(model, &mut x, &mut p, config.dt, &coeffs, &mut scratch);
        let t = initial.t + step as f64 * config.dt;
        let escaped = x
            .iter()
            .any(|v| !v.is_finite() || v.abs() > config.escape_radius)
            || p.iter().any(|v| !v.is_finite());
        if escaped {
            return Ok(Trajectory {
                samples,
                status: TrajectoryStatus::BlownUpAt(t),
            });
        }
        if step % stride_steps == 0 {
            samples.push((t, pack(&x, &p)));
        }
    }
    Ok(Trajectory {
        samples,
        status: TrajectoryStatus::Completed,
    })
}
