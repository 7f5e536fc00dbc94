//! Normal-mode transform of the fixed-end chain, mode energies, truncated
//! mode dynamics and numerical extraction of the two-mode quadratic
//! coupling coefficients.
//!
//! The transform matrix `A_{jk} = sqrt(2/(N+1)) sin(jkπ/(N+1))` is symmetric
//! and involutory (`A·A = I`), so it is its own inverse. Mode `k` has
//! frequency `ω_k = 2 sin(kπ / (2(N+1)))`.

use std::sync::Arc;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeModel, PhaseState};

/// Sizes above this use the FFT-backed sine transform instead of the dense
/// matrix product.
const FAST_TRANSFORM_THRESHOLD: usize = 256;

/// Orthogonal sine basis and mode frequencies for an `N`-site chain.
#[derive(Clone)]
pub struct ModeBasis {
    matrix: Array2<f64>,
    frequencies: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for ModeBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModeBasis")
            .field("n", &self.n())
            .field("fast_transform", &self.fft.is_some())
            .finish()
    }
}

impl ModeBasis {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "mode basis needs at least one site");
        let denom = (n + 1) as f64;
        let scale = (2.0 / denom).sqrt();
        let matrix = Array2::from_shape_fn((n, n), |(j, k)| {
            scale * ((j + 1) as f64 * (k + 1) as f64 * std::f64::consts::PI / denom).sin()
        });
        let frequencies = (1..=n)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (2.0 * denom)).sin())
            .collect();
        let fft =
            (n > FAST_TRANSFORM_THRESHOLD).then(|| FftPlanner::new().plan_fft_forward(2 * (n + 1)));
        Self {
            matrix,
            frequencies,
            fft,
        }
    }

    pub fn n(&self) -> usize {
        self.frequencies.len()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Applies the (involutory) basis matrix to a length-`N` vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n());
        match &self.fft {
            Some(fft) => self.apply_fast(v, fft),
            None => self.matrix.dot(&ArrayView1::from(v)).to_vec(),
        }
    }

    /// DST-I via an odd extension of length `2(N+1)`:
    /// the FFT of `[0, v, 0, -rev(v)]` is `-2i` times the sine sums.
    fn apply_fast(&self, v: &[f64], fft: &Arc<dyn Fft<f64>>) -> Vec<f64> {
        let n = self.n();
        let m = 2 * (n + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        for (j, &val) in v.iter().enumerate() {
            buf[j + 1].re = val;
            buf[m - 1 - j].re = -val;
        }
        fft.process(&mut buf);
        let scale = (2.0 / (n + 1) as f64).sqrt();
        (1..=n).map(|k| -0.5 * scale * buf[k].im).collect()
    }
}

/// Mode-space phase point: amplitudes `Q`, velocities `P`, time.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

/// Quadratic coupling coefficients of the two-mode truncation
///
/// ```text
/// Q''_1 = -ω₁²Q₁ + ε(A₁Q₁² + A₂Q₂² + A₃Q₁Q₂)
/// Q''_2 = -ω₂²Q₂ + ε(B₁Q₁² + B₂Q₂² + B₃Q₁Q₂)
/// ```
///
/// with detuning `ε = ω₂ - 2ω₁` (negative, O(N⁻³)) and the reduced
/// parameters `Ã = A₃/(2ω₁)`, `B̃ = B₁/(2ω₂)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadraticCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub epsilon: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
}

fn check_len(actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Real space -> mode space: `Q = A·x`, `P = A·p`.
pub fn to_modes(state: &PhaseState, basis: &ModeBasis) -> Result<ModeState> {
    check_len(state.len(), basis.n())?;
    Ok(ModeState {
        q: basis.apply(&state.x),
        p: basis.apply(&state.p),
        t: state.t,
    })
}

/// Mode space -> real space, using the involution `A⁻¹ = A`.
pub fn from_modes(mode_state: &ModeState, basis: &ModeBasis) -> Result<PhaseState> {
    check_len(mode_state.q.len(), basis.n())?;
    check_len(mode_state.p.len(), basis.n())?;
    Ok(PhaseState {
        x: basis.apply(&mode_state.q),
        p: basis.apply(&mode_state.p),
        t: mode_state.t,
    })
}

/// Harmonic mode energies `E_k = (P_k² + ω_k²Q_k²)/2`.
pub fn mode_energies(mode_state: &ModeState, basis: &ModeBasis) -> Result<Vec<f64>> {
    check_len(mode_state.q.len(), basis.n())?;
    check_len(mode_state.p.len(), basis.n())?;
    Ok(basis
        .frequencies()
        .iter()
        .zip(mode_state.q.iter().zip(mode_state.p.iter()))
        .map(|(w, (q, p))| 0.5 * (p * p + w * w * q * q))
        .collect())
}

/// Mode accelerations of the truncated system: the first `M` modes evolve,
/// all higher modes are pinned at zero.
///
/// Computed by zero-padding, mapping to real space, applying the model's
/// vector field and mapping back.
pub fn truncated_mode_rhs(
    q_active: &[f64],
    basis: &ModeBasis,
    model: &LatticeModel,
) -> Result<Vec<f64>> {
    let n = basis.n();
    let m = q_active.len();
    if m < 1 || m > n {
        return Err(Error::InvalidParameter(format!(
            "active mode count must be in 1..={n}, got {m}"
        )));
    }
    check_len(model.n_particles(), n)?;
    let mut q_full = vec![0.0; n];
    q_full[..m].copy_from_slice(q_active);
    let x = basis.apply(&q_full);
    let mut accel = vec![0.0; n];
    model.accelerations_into(&x, &mut accel);
    let mut q_ddot = basis.apply(&accel);
    q_ddot.truncate(m);
    Ok(q_ddot)
}

/// Extracts the quadratic coefficients of the two-mode truncation by probing
/// the (exactly quadratic) nonlinearity at `(Q₁,Q₂) ∈ {(1,0), (0,1), (1,1)}`.
pub fn extract_quadratic_coefficients(
    model: &LatticeModel,
    basis: &ModeBasis,
) -> Result<QuadraticCoefficients> {
    let n = basis.n();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "coefficient extraction needs at least two modes".into(),
        ));
    }
    check_len(model.n_particles(), n)?;
    let w1 = basis.frequencies()[0];
    let w2 = basis.frequencies()[1];
    let epsilon = w2 - 2.0 * w1;
    if epsilon == 0.0 {
        return Err(Error::Singular("zero detuning".into()));
    }

    let probe = |q1: f64, q2: f64| -> Result<[f64; 2]> {
        let rhs = truncated_mode_rhs(&[q1, q2], basis, model)?;
        Ok([rhs[0] + w1 * w1 * q1, rhs[1] + w2 * w2 * q2])
    };
    let r10 = probe(1.0, 0.0)?;
    let r01 = probe(0.0, 1.0)?;
    let r11 = probe(1.0, 1.0)?;

    // raw quadratic form: f(q1,q2) = c1 q1² + c2 q2² + c3 q1 q2
    let c = [r10[0], r01[0], r11[0] - r10[0] - r01[0]];
    let d = [r10[1], r01[1], r11[1] - r10[1] - r01[1]];

    let a = [c[0] / epsilon, c[1] / epsilon, c[2] / epsilon];
    let b = [d[0] / epsilon, d[1] / epsilon, d[2] / epsilon];
    Ok(QuadraticCoefficients {
        a1: a[0],
        a2: a[1],
        a3: a[2],
        b1: b[0],
        b2: b[1],
        b3: b[2],
        epsilon,
        a_tilde: a[2] / (2.0 * w1),
        b_tilde: b[0] / (2.0 * w2),
    })
}
