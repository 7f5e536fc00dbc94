//! Time integration: a fixed-step fourth-order symplectic composition with
//! tangent-map variational propagation for the Hamiltonian chain, and an
//! adaptive eighth-order explicit Runge-Kutta (embedded error control) for
//! the non-Hamiltonian one. Both stop early on blow-up.

mod dop853;
mod yoshida;

pub use dop853::{integrate_adaptive_rk8, Dop853, IntegrationStats, OdeSystem};
pub use yoshida::{integrate_symplectic, tangent_map_step, yoshida4_step};

pub(crate) use yoshida::{
    coefficients as yoshida_coefficients, tangent_step_inplace as yoshida_tangent_step,
    Scratch as SymplecticScratch,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeModel, PhaseState};

/// Step sizes, tolerances, horizon and sampling controls.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Fixed step of the symplectic path.
    pub dt: f64,
    /// Absolute tolerance of the adaptive path.
    pub abs_tol: f64,
    /// Relative tolerance of the adaptive path.
    pub rel_tol: f64,
    /// Integration horizon.
    pub t_final: f64,
    /// Max |x_j| beyond which the trajectory counts as blown up.
    pub escape_radius: f64,
    /// Interval between stored samples.
    pub output_stride: f64,
    /// Initial adaptive step size.
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            t_final: 100.0,
            escape_radius: crate::lattice::DEFAULT_ESCAPE_RADIUS,
            output_stride: 1.0,
            initial_step: 1e-3,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("t_final", self.t_final),
            ("escape_radius", self.escape_radius),
            ("output_stride", self.output_stride),
            ("initial_step", self.initial_step),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TrajectoryStatus {
    Completed,
    BlownUpAt(f64),
    Failed,
}

/// Stored integration output: `(t, state)` samples at the output stride.
///
/// Once the escape radius is crossed no further samples are appended; the
/// crossing time is recorded in the status.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, Vec<f64>)>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    /// Blow-up time, if the run terminated by escape.
    pub fn blowup_time(&self) -> Option<f64> {
        match self.status {
            TrajectoryStatus::BlownUpAt(t) => Some(t),
            _ => None,
        }
    }
}

/// Recorded blow-up time of a trajectory, if any.
pub fn detect_blowup(trajectory: &Trajectory) -> Option<f64> {
    trajectory.blowup_time()
}

/// `y = [x, p]` view of a lattice as a first-order system.
pub struct LatticeOde<'m> {
    model: &'m LatticeModel,
}

impl<'m> LatticeOde<'m> {
    pub fn new(model: &'m LatticeModel) -> Self {
        Self { model }
    }

    pub fn pack(state: &PhaseState) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * state.len());
        y.extend_from_slice(&state.x);
        y.extend_from_slice(&state.p);
        y
    }

    pub fn unpack(y: &[f64], t: f64) -> PhaseState {
        let n = y.len() / 2;
        PhaseState {
            x: y[..n].to_vec(),
            p: y[n..].to_vec(),
            t,
        }
    }
}

impl OdeSystem for LatticeOde<'_> {
    fn dim(&self) -> usize {
        2 * self.model.n_particles()
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let n = self.model.n_particles();
        let (x, p) = y.split_at(n);
        let (dx, dp) = dydt.split_at_mut(n);
        dx.copy_from_slice(p);
        self.model.accelerations_into(x, dp);
    }

    fn escape_norm(&self, y: &[f64]) -> f64 {
        let n = self.model.n_particles();
        y[..n].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Lattice flow augmented with `n_dev` deviation-vector columns of the
/// variational equation: `y = [x, p, w_1, ..., w_k]`, each `w` a
/// `[δx, δp]` block evolving through the Jacobian of the flow.
pub struct VariationalLatticeOde<'m> {
    model: &'m LatticeModel,
    n_dev: usize,
}

impl<'m> VariationalLatticeOde<'m> {
    pub fn new(model: &'m LatticeModel, n_dev: usize) -> Self {
        Self { model, n_dev }
    }

    pub fn pack(state: &PhaseState, deviations: &[Vec<f64>]) -> Vec<f64> {
        let n = state.len();
        let mut y = Vec::with_capacity(2 * n * (1 + deviations.len()));
        y.extend_from_slice(&state.x);
        y.extend_from_slice(&state.p);
        for w in deviations {
            debug_assert_eq!(w.len(), 2 * n);
            y.extend_from_slice(w);
        }
        y
    }
}

impl OdeSystem for VariationalLatticeOde<'_> {
    fn dim(&self) -> usize {
        2 * self.model.n_particles() * (1 + self.n_dev)
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let n = self.model.n_particles();
        let (x, rest) = y.split_at(n);
        let p = &rest[..n];
        let (dx, drest) = dydt.split_at_mut(n);
        let (dp, dws) = drest.split_at_mut(n);
        dx.copy_from_slice(p);
        self.model.accelerations_into(x, dp);
        for k in 0..self.n_dev {
            let w = &y[2 * n * (1 + k)..2 * n * (2 + k)];
            let (wx, wp) = w.split_at(n);
            let dw = &mut dws[2 * n * k..2 * n * (1 + k)];
            let (dwx, dwp) = dw.split_at_mut(n);
            dwx.copy_from_slice(wp);
            self.model.force_jacobian_mul(x, wx, dwp);
        }
    }

    fn escape_norm(&self, y: &[f64]) -> f64 {
        let n = self.model.n_particles();
        y[..n].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
