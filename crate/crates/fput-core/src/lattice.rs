//! Lattice models: the homogeneous FPUT-α chain and its disordered
//! (nonlinear-coupling) variant, their vector fields, energy and Jacobian.
//!
//! Chains have fixed ends, `x_0 = x_{N+1} = 0`. The homogeneous equations of
//! motion are
//!
//! ```text
//! x''_j = (x_{j+1} - x_j) + α(x_{j+1} - x_j)² - (x_j - x_{j-1}) - α(x_j - x_{j-1})²
//! ```
//!
//! while the disordered variant keeps the linear terms intact and perturbs
//! only the quadratic couplings through per-site tolerance factors `v_j`:
//!
//! ```text
//! x''_j = (x_{j+1} - x_j) + α(v_{j+1}x_{j+1} - v_jx_j)² - (x_j - x_{j-1}) - α(v_jx_j - v_{j-1}x_{j-1})²
//! ```
//!
//! The disordered system is not Hamiltonian; `total_energy` refuses it.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};

/// Nonlinear coupling strength used throughout unless overridden.
pub const DEFAULT_ALPHA: f64 = 0.25;

/// Trajectories whose largest |x_j| exceeds this are flagged as blown up.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    Homogeneous,
    DisorderedNonlinear,
}

/// Per-site tolerance factors `v_0 .. v_{N+1}`.
///
/// Boundary entries are pinned to 1: they multiply the fixed (zero) ends, so
/// any other value would be inert but ambiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderProfile {
    values: Vec<f64>,
    tolerance_percent: f64,
    seed: u64,
}

impl DisorderProfile {
    /// Unit profile (`v_j = 1` everywhere) for a chain of `n` particles.
    pub fn unit(n: usize) -> Self {
        Self {
            values: vec![1.0; n + 2],
            tolerance_percent: 0.0,
            seed: 0,
        }
    }

    /// Wraps raw values `v_0 .. v_{N+1}`, checking the tolerance interval
    /// `[1 - 0.01 τ, 1 + 0.01 τ]` and the unit boundary entries.
    pub fn from_values(values: Vec<f64>, tolerance_percent: f64, seed: u64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(
                "disorder profile needs at least the two boundary entries".into(),
            ));
        }
        if tolerance_percent.is_nan() || tolerance_percent < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be non-negative, got {tolerance_percent}"
            )));
        }
        let lo = 1.0 - 0.01 * tolerance_percent;
        let hi = 1.0 + 0.01 * tolerance_percent;
        for &v in &values {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::DisorderOutOfRange { value: v, lo, hi });
            }
        }
        if values[0] != 1.0 || values[values.len() - 1] != 1.0 {
            return Err(Error::InvalidParameter(
                "boundary disorder entries v_0 and v_{N+1} must equal 1".into(),
            ));
        }
        Ok(Self {
            values,
            tolerance_percent,
            seed,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tolerance_percent(&self) -> f64 {
        self.tolerance_percent
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of interior sites (N).
    pub fn site_count(&self) -> usize {
        self.values.len() - 2
    }

    pub fn is_unit(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }
}

/// Real-space phase point: displacements `x`, momenta `p`, and time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: p.len(),
            });
        }
        Ok(Self { x, p, t })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            p: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// All entries finite? Non-finite entries signal blow-up.
    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }

    pub fn max_abs_x(&self) -> f64 {
        self.x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// A validated lattice: size, nonlinearity, disorder profile and variant.
#[derive(Debug, Clone)]
pub struct LatticeModel {
    n_particles: usize,
    alpha: f64,
    disorder: DisorderProfile,
    variant: Variant,
}

impl LatticeModel {
    /// Builds and validates a lattice model.
    ///
    /// The disorder profile must have `n + 2` entries. The homogeneous
    /// variant requires the unit profile.
    pub fn new(n: usize, alpha: f64, disorder: DisorderProfile, variant: Variant) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("n_particles must be >= 1".into()));
        }
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be non-negative, got {alpha}"
            )));
        }
        if disorder.values.len() != n + 2 {
            return Err(Error::DimensionMismatch {
                expected: n + 2,
                actual: disorder.values.len(),
            });
        }
        if variant == Variant::Homogeneous && !disorder.is_unit() {
            return Err(Error::InvalidParameter(
                "homogeneous variant requires unit disorder".into(),
            ));
        }
        Ok(Self {
            n_particles: n,
            alpha,
            disorder,
            variant,
        })
    }

    /// Homogeneous chain with the unit disorder profile.
    pub fn homogeneous(n: usize, alpha: f64) -> Result<Self> {
        Self::new(n, alpha, DisorderProfile::unit(n), Variant::Homogeneous)
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn disorder(&self) -> &DisorderProfile {
        &self.disorder
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Writes the accelerations for displacement slice `x` into `out`.
    ///
    /// Hot path shared by every integrator; dimensions are asserted, not
    /// validated.
    pub fn accelerations_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n_particles;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        let alpha = self.alpha;
        match self.variant {
            Variant::Homogeneous => {
                for j in 0..n {
                    let xl = if j == 0 { 0.0 } else { x[j - 1] };
                    let xr = if j + 1 == n { 0.0 } else { x[j + 1] };
                    let dr = xr - x[j];
                    let dl = x[j] - xl;
                    out[j] = dr + alpha * dr * dr - dl - alpha * dl * dl;
                }
            }
            Variant::DisorderedNonlinear => {
                let v = &self.disorder.values;
                for j in 0..n {
                    let xl = if j == 0 { 0.0 } else { x[j - 1] };
                    let xr = if j + 1 == n { 0.0 } else { x[j + 1] };
                    // v is indexed v_0..v_{N+1}; site j maps to v[j+1].
                    let qr = v[j + 2] * xr - v[j + 1] * x[j];
                    let ql = v[j + 1] * x[j] - v[j] * xl;
                    out[j] = (xr - x[j]) + alpha * qr * qr - (x[j] - xl) - alpha * ql * ql;
                }
            }
        }
    }

    /// `out = (∂a/∂x)(x) · dx`, the tridiagonal force Jacobian applied to a
    /// displacement perturbation. Used by the tangent map and the variational
    /// flow without materializing the matrix.
    pub fn force_jacobian_mul(&self, x: &[f64], dx: &[f64], out: &mut [f64]) {
        let n = self.n_particles;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(dx.len(), n);
        debug_assert_eq!(out.len(), n);
        let alpha = self.alpha;
        match self.variant {
            Variant::Homogeneous => {
                for j in 0..n {
                    let xl = if j == 0 { 0.0 } else { x[j - 1] };
                    let xr = if j + 1 == n { 0.0 } else { x[j + 1] };
                    let dxl = if j == 0 { 0.0 } else { dx[j - 1] };
                    let dxr = if j + 1 == n { 0.0 } else { dx[j + 1] };
                    let dr = xr - x[j];
                    let dl = x[j] - xl;
                    let diag = -2.0 - 2.0 * alpha * (dr + dl);
                    let upper = 1.0 + 2.0 * alpha * dr;
                    let lower = 1.0 + 2.0 * alpha * dl;
                    out[j] = lower * dxl + diag * dx[j] + upper * dxr;
                }
            }
            Variant::DisorderedNonlinear => {
                let v = &self.disorder.values;
                for j in 0..n {
                    let xl = if j == 0 { 0.0 } else { x[j - 1] };
                    let xr = if j + 1 == n { 0.0 } else { x[j + 1] };
                    let dxl = if j == 0 { 0.0 } else { dx[j - 1] };
                    let dxr = if j + 1 == n { 0.0 } else { dx[j + 1] };
                    let qr = v[j + 2] * xr - v[j + 1] * x[j];
                    let ql = v[j + 1] * x[j] - v[j] * xl;
                    let diag = -2.0 - 2.0 * alpha * v[j + 1] * (qr + ql);
                    let upper = 1.0 + 2.0 * alpha * qr * v[j + 2];
                    let lower = 1.0 + 2.0 * alpha * ql * v[j];
                    out[j] = lower * dxl + diag * dx[j] + upper * dxr;
                }
            }
        }
    }
}

fn check_dims(state: &PhaseState, model: &LatticeModel) -> Result<()> {
    if state.len() != model.n_particles() {
        return Err(Error::DimensionMismatch {
            expected: model.n_particles(),
            actual: state.len(),
        });
    }
    Ok(())
}

/// Accelerations of the homogeneous chain.
pub fn rhs_homogeneous(state: &PhaseState, model: &LatticeModel) -> Result<Vec<f64>> {
    if model.variant() != Variant::Homogeneous {
        return Err(Error::WrongVariant {
            required: "Homogeneous",
        });
    }
    check_dims(state, model)?;
    let mut out = vec![0.0; state.len()];
    model.accelerations_into(&state.x, &mut out);
    Ok(out)
}

/// Accelerations of the disordered (nonlinear-coupling) chain.
pub fn rhs_disordered(state: &PhaseState, model: &LatticeModel) -> Result<Vec<f64>> {
    if model.variant() != Variant::DisorderedNonlinear {
        return Err(Error::WrongVariant {
            required: "DisorderedNonlinear",
        });
    }
    check_dims(state, model)?;
    let mut out = vec![0.0; state.len()];
    model.accelerations_into(&state.x, &mut out);
    Ok(out)
}

/// Total energy `H(x, p)` of the homogeneous chain.
///
/// The disordered variant has no Hamiltonian and is rejected.
pub fn total_energy(state: &PhaseState, model: &LatticeModel) -> Result<f64> {
    if model.variant() != Variant::Homogeneous {
        return Err(Error::NonHamiltonian);
    }
    check_dims(state, model)?;
    let n = state.len();
    let alpha = model.alpha();
    let kinetic: f64 = state.p.iter().map(|p| 0.5 * p * p).sum();
    let mut potential = 0.0;
    // bonds j = 0..N between x_j and x_{j+1} with x_0 = x_{N+1} = 0
    for j in 0..=n {
        let left = if j == 0 { 0.0 } else { state.x[j - 1] };
        let right = if j == n { 0.0 } else { state.x[j] };
        let d = right - left;
        potential += 0.5 * d * d + alpha / 3.0 * d * d * d;
    }
    Ok(kinetic + potential)
}

/// Jacobian of the first-order system `(x', p') = (p, a(x))` as a dense
/// `2N x 2N` matrix: identity in the upper-right block, the tridiagonal
/// force Jacobian in the lower-left.
pub fn jacobian_rhs(state: &PhaseState, model: &LatticeModel) -> Result<Array2<f64>> {
    check_dims(state, model)?;
    let n = state.len();
    let mut jac = Array2::zeros((2 * n, 2 * n));
    for j in 0..n {
        jac[[j, n + j]] = 1.0;
    }
    let mut unit = vec![0.0; n];
    let mut col = vec![0.0; n];
    for k in 0..n {
        unit[k] = 1.0;
        model.force_jacobian_mul(&state.x, &unit, &mut col);
        for j in 0..n {
            jac[[n + j, k]] = col[j];
        }
        unit[k] = 0.0;
    }
    Ok(jac)
}

/// Lowest-mode excitation: `x_j = sin(πj / (N+1))`, zero momenta.
pub fn initial_condition_mode1(n: usize) -> PhaseState {
    let denom = (n + 1) as f64;
    let x = (1..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / denom).sin())
        .collect();
    PhaseState {
        x,
        p: vec![0.0; n],
        t: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minimal_lattice_builds() {
        let m = LatticeModel::homogeneous(1, 0.0).unwrap();
        assert_eq!(m.n_particles(), 1);
        assert_eq!(m.variant(), Variant::Homogeneous);
    }

    #[test]
    fn fig1_model_builds() {
        let m = LatticeModel::homogeneous(64, 0.25).unwrap();
        assert_eq!(m.n_particles(), 64);
        assert_eq!(m.alpha(), 0.25);
    }

    #[test]
    fn disordered_model_builds_with_profile() {
        let values = {
            let mut v = vec![1.0; 66];
            v[1] = 1.04;
            v[33] = 0.96;
            v
        };
        let profile = DisorderProfile::from_values(values, 5.0, 7).unwrap();
        let m = LatticeModel::new(64, 0.25, profile, Variant::DisorderedNonlinear).unwrap();
        assert_eq!(m.disorder().tolerance_percent(), 5.0);
    }

    #[test]
    fn build_rejects_bad_inputs() {
        assert!(LatticeModel::homogeneous(0, 0.25).is_err());
        assert!(LatticeModel::homogeneous(4, -1.0).is_err());
        // profile length must be n + 2
        let profile = DisorderProfile::unit(3);
        assert!(LatticeModel::new(5, 0.25, profile, Variant::Homogeneous).is_err());
        // out-of-interval disorder value
        let mut vals = vec![1.0; 6];
        vals[2] = 1.2;
        assert!(DisorderProfile::from_values(vals, 5.0, 0).is_err());
        // non-unit disorder under the homogeneous variant
        let mut vals = vec![1.0; 6];
        vals[2] = 1.01;
        let profile = DisorderProfile::from_values(vals, 5.0, 0).unwrap();
        assert!(LatticeModel::new(4, 0.25, profile, Variant::Homogeneous).is_err());
    }

    #[test]
    fn rhs_zero_state_is_equilibrium() {
        let m = LatticeModel::homogeneous(8, 0.25).unwrap();
        let a = rhs_homogeneous(&PhaseState::zeros(8), &m).unwrap();
        assert!(a.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rhs_single_particle_quadratic_terms_cancel() {
        // N=1: x'' = -2c for any alpha, by symmetry of the two bonds.
        let m = LatticeModel::homogeneous(1, 0.7).unwrap();
        let s = PhaseState::new(vec![0.31], vec![0.0], 0.0).unwrap();
        let a = rhs_homogeneous(&s, &m).unwrap();
        assert_relative_eq!(a[0], -2.0 * 0.31, max_relative = 1e-15);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn rhs_matches_hamiltonian_gradient() {
        // x''_j must equal -dH/dx_j; central finite differences of H.
        let m = LatticeModel::homogeneous(3, 1.0).unwrap();
        let s = PhaseState::new(vec![1.0, 0.0, 0.0], vec![0.0; 3], 0.0).unwrap();
        let a = rhs_homogeneous(&s, &m).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = s.clone();
            xp.x[j] += h;
            let mut xm = s.clone();
            xm.x[j] -= h;
            let grad =
                (total_energy(&xp, &m).unwrap() - total_energy(&xm, &m).unwrap()) / (2.0 * h);
            assert_relative_eq!(a[j], -grad, max_relative = 1e-8, epsilon = 1e-8);
        }
    }

    #[test]
    fn disordered_rhs_with_unit_profile_matches_homogeneous_bitwise() {
        let hom = LatticeModel::homogeneous(16, 0.25).unwrap();
        let dis = LatticeModel::new(
            16,
            0.25,
            DisorderProfile::unit(16),
            Variant::DisorderedNonlinear,
        )
        .unwrap();
        let x: Vec<f64> = (0..16).map(|j| (0.1 * j as f64).sin()).collect();
        let s = PhaseState::new(x, vec![0.0; 16], 0.0).unwrap();
        let a = rhs_homogeneous(&s, &hom).unwrap();
        let b = rhs_disordered(&s, &dis).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disordered_rhs_hand_expanded_two_sites() {
        // N=2, x=(1,-1), alpha=1, v=(1, 1.05, 0.95, 1):
        //   x''_1 = -3 + [(0.95(-1) - 1.05)^2 - 1.05^2] = -0.1025
        //   x''_2 =  3 + [(0.95)^2 - (-2)^2]            = -0.0975
        let profile = DisorderProfile::from_values(vec![1.0, 1.05, 0.95, 1.0], 5.0, 0).unwrap();
        let m = LatticeModel::new(2, 1.0, profile, Variant::DisorderedNonlinear).unwrap();
        let s = PhaseState::new(vec![1.0, -1.0], vec![0.0; 2], 0.0).unwrap();
        let a = rhs_disordered(&s, &m).unwrap();
        assert_relative_eq!(a[0], -0.1025, max_relative = 1e-13);
        assert_relative_eq!(a[1], -0.0975, max_relative = 1e-13);
    }

    #[test]
    fn rhs_checks_variant_and_dims() {
        let hom = LatticeModel::homogeneous(4, 0.25).unwrap();
        assert!(rhs_disordered(&PhaseState::zeros(4), &hom).is_err());
        assert!(rhs_homogeneous(&PhaseState::zeros(3), &hom).is_err());
    }

    #[test]
    fn energy_zero_state() {
        let m = LatticeModel::homogeneous(5, 0.25).unwrap();
        assert_eq!(total_energy(&PhaseState::zeros(5), &m).unwrap(), 0.0);
    }

    #[test]
    fn energy_single_particle_cubic_cancels() {
        // N=1, x=1: bonds (+1) and (-1), cubic contributions cancel; H = 1.
        for alpha in [0.0, 0.25, 2.0] {
            let m = LatticeModel::homogeneous(1, alpha).unwrap();
            let s = PhaseState::new(vec![1.0], vec![0.0], 0.0).unwrap();
            assert_relative_eq!(total_energy(&s, &m).unwrap(), 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn energy_rejects_non_hamiltonian_variant() {
        let m = LatticeModel::new(
            4,
            0.25,
            DisorderProfile::unit(4),
            Variant::DisorderedNonlinear,
        )
        .unwrap();
        assert!(matches!(
            total_energy(&PhaseState::zeros(4), &m),
            Err(Error::NonHamiltonian)
        ));
    }

    #[test]
    fn mode1_energies_match_reference_values() {
        // E = ω₁²(N+1)/4 for the lowest-mode excitation (cubic term vanishes
        // by antisymmetry), independent of alpha.
        let expected = [
            (4, 0.4775),
            (8, 0.2714),
            (16, 0.1447),
            (32, 0.0747),
            (64, 0.03795),
        ];
        for (n, e_ref) in expected {
            let m = LatticeModel::homogeneous(n, 0.25).unwrap();
            let s = initial_condition_mode1(n);
            let e = total_energy(&s, &m).unwrap();
            let rel = (e - e_ref).abs() / e_ref;
            assert!(rel < 5e-4, "N={n}: E={e} vs {e_ref}");
            // closed form
            let w1 = 2.0 * (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin();
            assert_relative_eq!(e, w1 * w1 * (n as f64 + 1.0) / 4.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn mode1_ic_single_particle() {
        let s = initial_condition_mode1(1);
        assert_relative_eq!(s.x[0], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn jacobian_alpha_zero_is_linear_chain() {
        let m = LatticeModel::homogeneous(4, 0.0).unwrap();
        let s = PhaseState::new(vec![0.3, -0.1, 0.2, 0.5], vec![0.0; 4], 0.0).unwrap();
        let jac = jacobian_rhs(&s, &m).unwrap();
        for j in 0..4usize {
            for k in 0..4usize {
                let expect = if j == k {
                    -2.0
                } else if j.abs_diff(k) == 1 {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(jac[[4 + j, k]], expect);
                assert_eq!(jac[[j, 4 + k]], if j == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_on_random_states() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..100 {
            let n = rng.random_range(1..=8);
            let alpha = rng.random_range(0.0..2.0);
            let tau = 10.0;
            let model = if trial % 2 == 0 {
                LatticeModel::homogeneous(n, alpha).unwrap()
            } else {
                let values: Vec<f64> = std::iter::once(1.0)
                    .chain((0..n).map(|_| 1.0 + rng.random_range(-0.1..0.1)))
                    .chain(std::iter::once(1.0))
                    .collect();
                let profile = DisorderProfile::from_values(values, tau, 0).unwrap();
                LatticeModel::new(n, alpha, profile, Variant::DisorderedNonlinear).unwrap()
            };
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = PhaseState::new(x, vec![0.0; n], 0.0).unwrap();
            let jac = jacobian_rhs(&s, &model).unwrap();

            let h = 1e-6;
            let mut a_plus = vec![0.0; n];
            let mut a_minus = vec![0.0; n];
            for k in 0..n {
                let mut xp = s.x.clone();
                xp[k] += h;
                let mut xm = s.x.clone();
                xm[k] -= h;
                model.accelerations_into(&xp, &mut a_plus);
                model.accelerations_into(&xm, &mut a_minus);
                for j in 0..n {
                    let fd = (a_plus[j] - a_minus[j]) / (2.0 * h);
                    let exact = jac[[n + j, k]];
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (fd - exact).abs() / scale < 1e-5,
                        "trial {trial} entry ({j},{k}): fd={fd} exact={exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_unit_disorder_equals_homogeneous() {
        let hom = LatticeModel::homogeneous(6, 0.25).unwrap();
        let dis = LatticeModel::new(
            6,
            0.25,
            DisorderProfile::unit(6),
            Variant::DisorderedNonlinear,
        )
        .unwrap();
        let x: Vec<f64> = (0..6).map(|j| 0.2 * (j as f64 + 1.0)).collect();
        let s = PhaseState::new(x, vec![0.0; 6], 0.0).unwrap();
        assert_eq!(
            jacobian_rhs(&s, &hom).unwrap(),
            jacobian_rhs(&s, &dis).unwrap()
        );
    }
}
