//! Adaptive explicit Runge-Kutta of order 8 (Dormand-Prince 8(5,3)) with the
//! combined fifth/third-order embedded error estimate and step-size control.
//! Supports both time directions and stops on escape or step underflow.

// published tableau constants are kept at their full printed precision
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

use super::{IntegratorConfig, Trajectory, TrajectoryStatus};

/// A first-order system `y' = f(t, y)` on flat slices.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]);

    /// Quantity compared against the escape radius for blow-up detection.
    /// Defaults to the max-norm of the full state.
    fn escape_norm(&self, y: &[f64]) -> f64 {
        y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegrationStats {
    pub steps: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

const SAFETY: f64 = 0.9;
const FAC_SHRINK_INV: f64 = 1.0 / 0.333; // max shrink factor per step
const FAC_GROW_INV: f64 = 1.0 / 6.0; // max growth factor per step
const ERR_EXPONENT: f64 = 1.0 / 8.0;

enum StepOutcome {
    Accepted,
    Rejected,
    Underflow,
}

/// Reusable DOP853 stepper bound to one system.
pub struct Dop853<'a, S: OdeSystem + ?Sized> {
    system: &'a S,
    t: f64,
    y: Vec<f64>,
    /// Controller-preferred step (signed); attempts may be clamped shorter.
    h_free: f64,
    abs_tol: f64,
    rel_tol: f64,
    facold: f64,
    last_rejected: bool,
    k: [Vec<f64>; 12],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    k1_valid: bool,
    pub stats: IntegrationStats,
}

impl<'a, S: OdeSystem + ?Sized> Dop853<'a, S> {
    pub fn new(system: &'a S, t0: f64, y0: Vec<f64>, config: &IntegratorConfig) -> Result<Self> {
        if y0.len() != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                actual: y0.len(),
            });
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        let dim = y0.len();
        Ok(Self {
            system,
            t: t0,
            y: y0,
            h_free: config.initial_step,
            abs_tol: config.abs_tol,
            rel_tol: config.rel_tol,
            facold: 1e-4,
            last_rejected: false,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
            k1_valid: false,
            stats: IntegrationStats::default(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// In-place state edit between steps (e.g. deviation renormalization).
    /// Invalidates the cached first stage.
    pub fn mutate_state(&mut self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.y);
        self.k1_valid = false;
    }

    /// One uncontrolled step of size `h` (used for order verification).
    pub fn step_fixed(&mut self, h: f64) {
        self.eval_k1();
        self.compute_stages(h);
        self.t += h;
        std::mem::swap(&mut self.y, &mut self.y_new);
        self.k1_valid = false;
    }

    fn eval_k1(&mut self) {
        if !self.k1_valid {
            self.system.rhs(self.t, &self.y, &mut self.k[0]);
            self.stats.rhs_evals += 1;
            self.k1_valid = true;
        }
    }

    /// Evaluates stages 2..=12 and the eighth-order solution into `y_new`,
    /// assuming `k1` is current. `k[3]` afterwards holds the quadrature sum.
    #[allow(clippy::needless_range_loop)]
    fn compute_stages(&mut self, h: f64) {
        let n = self.y.len();
        let t = self.t;
        let y = &self.y;
        let ys = &mut self.y_stage;

        macro_rules! stage {
            ($c:expr, $dst:expr, $(($coef:expr, $ki:expr)),+) => {{
                for i in 0..n {
                    ys[i] = y[i] + h * ($( $coef * self.k[$ki][i] + )+ 0.0);
                }
                self.system.rhs(t + $c * h, ys, &mut self.k[$dst]);
            }};
        }

        stage!(C2, 1, (A21, 0));
        stage!(C3, 2, (A31, 0), (A32, 1));
        stage!(C4, 3, (A41, 0), (A43, 2));
        stage!(C5, 4, (A51, 0), (A53, 2), (A54, 3));
        stage!(C6, 5, (A61, 0), (A64, 3), (A65, 4));
        stage!(C7, 6, (A71, 0), (A74, 3), (A75, 4), (A76, 5));
        stage!(C8, 7, (A81, 0), (A84, 3), (A85, 4), (A86, 5), (A87, 6));
        stage!(
            C9,
            8,
            (A91, 0),
            (A94, 3),
            (A95, 4),
            (A96, 5),
            (A97, 6),
            (A98, 7)
        );
        stage!(
            C10,
            9,
            (A101, 0),
            (A104, 3),
            (A105, 4),
            (A106, 5),
            (A107, 6),
            (A108, 7),
            (A109, 8)
        );
        stage!(
            C11,
            10,
            (A111, 0),
            (A114, 3),
            (A115, 4),
            (A116, 5),
            (A117, 6),
            (A118, 7),
            (A119, 8),
            (A1110, 9)
        );
        stage!(
            1.0,
            11,
            (A121, 0),
            (A124, 3),
            (A125, 4),
            (A126, 5),
            (A127, 6),
            (A128, 7),
            (A129, 8),
            (A1210, 9),
            (A1211, 10)
        );
        self.stats.rhs_evals += 11;

        // quadrature and eighth-order update; reuse k[3] for the weighted sum
        for i in 0..n {
            let sum = B1 * self.k[0][i]
                + B6 * self.k[5][i]
                + B7 * self.k[6][i]
                + B8 * self.k[7][i]
                + B9 * self.k[8][i]
                + B10 * self.k[9][i]
                + B11 * self.k[10][i]
                + B12 * self.k[11][i];
            self.k[3][i] = sum;
            self.y_new[i] = y[i] + h * sum;
        }
    }

    /// Weighted RMS error of the attempted step (Hairer's combined 5/3 pair).
    fn error_norm(&self, h: f64) -> f64 {
        let n = self.y.len();
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..n {
            let sk = self.abs_tol + self.rel_tol * self.y[i].abs().max(self.y_new[i].abs());
            let e3 =
                self.k[3][i] - BHH1 * self.k[0][i] - BHH2 * self.k[8][i] - BHH3 * self.k[11][i];
            let e5 = ER1 * self.k[0][i]
                + ER6 * self.k[5][i]
                + ER7 * self.k[6][i]
                + ER8 * self.k[7][i]
                + ER9 * self.k[8][i]
                + ER10 * self.k[9][i]
                + ER11 * self.k[10][i]
                + ER12 * self.k[11][i];
            err3 += (e3 / sk) * (e3 / sk);
            err5 += (e5 / sk) * (e5 / sk);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        h.abs() * err5 * (1.0 / (deno * n as f64)).sqrt()
    }

    fn try_step(&mut self, h: f64) -> StepOutcome {
        if h.abs() <= 10.0 * f64::EPSILON * self.t.abs().max(1.0) {
            return StepOutcome::Underflow;
        }
        self.stats.steps += 1;
        self.eval_k1();
        self.compute_stages(h);
        let err = self.error_norm(h);

        let fac11 = err.powf(ERR_EXPONENT);
        if err <= 1.0 {
            self.facold = err.max(1e-4);
            let fac = FAC_GROW_INV.max(FAC_SHRINK_INV.min(fac11 / SAFETY));
            let mut h_new = h / fac;
            if self.last_rejected {
                // no growth immediately after a rejection
                h_new = if h_new.abs() > h.abs() { h } else { h_new };
            }
            self.t += h;
            std::mem::swap(&mut self.y, &mut self.y_new);
            self.k1_valid = false;
            self.last_rejected = false;
            self.stats.accepted += 1;
            // only widen the preferred step if this attempt wasn't clamped
            if h.abs() >= self.h_free.abs() || h_new.abs() < self.h_free.abs() {
                self.h_free = h_new;
            }
            StepOutcome::Accepted
        } else {
            self.stats.rejected += 1;
            self.last_rejected = true;
            let h_new = h / FAC_SHRINK_INV.min(fac11 / SAFETY);
            self.h_free = h_new;
            StepOutcome::Rejected
        }
    }

    /// Integrates to `t_target` (either direction), checking the escape norm
    /// after every accepted step when a radius is given. Returns the blow-up
    /// time if the radius was crossed or the state left the finite range.
    pub fn advance_to(&mut self, t_target: f64, escape_radius: Option<f64>) -> Result<Option<f64>> {
        let dir = (t_target - self.t).signum();
        if dir == 0.0 || !dir.is_finite() {
            return Ok(None);
        }
        if self.h_free.signum() != dir {
            self.h_free = -self.h_free;
        }
        loop {
            let remaining = t_target - self.t;
            if remaining * dir <= 0.0 || remaining.abs() <= f64::EPSILON * t_target.abs().max(1.0) {
                return Ok(None);
            }
            let h = if self.h_free.abs() >= remaining.abs() {
                remaining
            } else {
                self.h_free
            };
            match self.try_step(h) {
                StepOutcome::Accepted => {
                    let bad = self.y.iter().any(|v| !v.is_finite());
                    if bad {
                        return Ok(Some(self.t));
                    }
                    if let Some(radius) = escape_radius {
                        if self.system.escape_norm(&self.y) > radius {
                            return Ok(Some(self.t));
                        }
                    }
                }
                StepOutcome::Rejected => {}
                StepOutcome::Underflow => {
                    // a vanishing step with a huge state is a blow-up, not a failure
                    if let Some(radius) = escape_radius {
                        if self.system.escape_norm(&self.y) > 0.01 * radius {
                            return Ok(Some(self.t));
                        }
                    }
                    return Err(Error::IntegrationFailed(format!(
                        "step size underflow at t = {}",
                        self.t
                    )));
                }
            }
        }
    }
}

/// Dense-stride adaptive integration from `t = 0` with blow-up detection.
pub fn integrate_adaptive_rk8<S: OdeSystem>(
    system: &S,
    initial: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let mut stepper = Dop853::new(system, 0.0, initial.to_vec(), config)?;
    let n_targets = (config.t_final / config.output_stride).ceil() as u64;
    let mut samples = vec![(0.0, initial.to_vec())];
    for k in 1..=n_targets {
        let target = (k as f64 * config.output_stride).min(config.t_final);
        match stepper.advance_to(target, Some(config.escape_radius)) {
            Ok(None) => samples.push((stepper.t(), stepper.y().to_vec())),
            Ok(Some(t_blow)) => {
                return Ok(Trajectory {
                    samples,
                    status: TrajectoryStatus::BlownUpAt(t_blow),
                })
            }
            Err(_) => {
                return Ok(Trajectory {
                    samples,
                    status: TrajectoryStatus::Failed,
                })
            }
        }
    }
    Ok(Trajectory {
        samples,
        status: TrajectoryStatus::Completed,
    })
}
