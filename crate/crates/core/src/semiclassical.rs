//! Mean-field classical limit: boson mode as a coherent amplitude, spin as a
//! point on the Bloch sphere.
//!
//! The classical Hamiltonian in quadratures (x, p) and Bloch coordinates
//! (Z, Δφ) is
//!
//!   H_cl = p²/2 + x²/2 + (ω/2)Z + (g√2·x + λ)·√(1-Z²)·cos(Δφ),
//!
//! and the equations of motion are its symplectic gradient in the canonical
//! pairs (x, p) and (Δφ, Z). Note the drive enters Ż through ∂H/∂Δφ as
//! (g√2·x + λ); published forms of these equations sometimes omit the λ
//! factor there, and the finite-difference gradient check in the test suite
//! adjudicates in favor of the gradient. At λ = 0 the equations match the
//! undriven (Dicke-limit) form exactly.
//!
//! The (Z, Δφ) chart is the reference integrator away from the Bloch poles;
//! a Cartesian spin chart (s_x, s_y, s_z) with |s| = 1 covers trajectories
//! that approach |Z| = 1 and is used for the Lyapunov estimator.

use crate::hamiltonian::ModelParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemiclassicalError {
    #[error("inversion |Z| = {0} exceeds 1")]
    InvalidInversion(f64),
    #[error("trajectory reached the Bloch pole |Z| → 1 at t = {t}")]
    PoleEncounter { t: f64 },
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted")]
    StepBudget(usize),
    #[error("energy drift {drift:.3e} exceeds the configured tolerance {tol:.3e}")]
    EnergyDrift { drift: f64, tol: f64 },
    #[error("no surface crossings found")]
    NoCrossings,
}

/// Semiclassical phase-space point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub x: f64,
    pub p: f64,
    /// Inversion ⟨σ_z⟩ ∈ [-1, 1].
    pub z: f64,
    /// Relative phase, radians (unwrapped along trajectories).
    pub dphi: f64,
}

impl ClassicalState {
    pub fn new(x: f64, p: f64, z: f64, dphi: f64) -> Result<Self, SemiclassicalError> {
        if z.abs() > 1.0 {
            return Err(SemiclassicalError::InvalidInversion(z));
        }
        Ok(ClassicalState { x, p, z, dphi })
    }
}

/// H_cl evaluated at a state.
pub fn classical_energy(
    s: &ClassicalState,
    params: &ModelParams,
) -> Result<f64, SemiclassicalError> {
    if s.z.abs() > 1.0 {
        return Err(SemiclassicalError::InvalidInversion(s.z));
    }
    let transverse = (1.0 - s.z * s.z).sqrt();
    Ok(0.5 * s.p * s.p
        + 0.5 * s.x * s.x
        + 0.5 * params.omega * s.z
        + (params.g * std::f64::consts::SQRT_2 * s.x + params.lambda) * transverse * s.dphi.cos())
}

/// Time derivatives (ẋ, ṗ, Ż, Δφ̇) of the Hamiltonian flow.
pub fn eom_rhs(s: &ClassicalState, params: &ModelParams) -> [f64; 4] {
    let root = (1.0 - s.z * s.z).sqrt();
    let drive = params.g * std::f64::consts::SQRT_2 * s.x + params.lambda;
    let (sin_phi, cos_phi) = s.dphi.sin_cos();
    [
        s.p,
        -s.x - params.g * std::f64::consts::SQRT_2 * root * cos_phi,
        drive * root * sin_phi,
        0.5 * params.omega - drive * cos_phi * s.z / root,
    ]
}

/// Integration controls for the adaptive stepper.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// When set, integration fails if |H(t) - H(0)|/max(1, |H(0)|) exceeds it.
    pub drift_tolerance: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 400_000_000,
            drift_tolerance: None,
        }
    }
}

/// Sampled trajectory with its energy record.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    /// max_t |H(t) - H(0)| / max(1, |H(0)|).
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        let scale = e0.abs().max(1.0);
        self.energies.iter().fold(0.0_f64, |m, &e| m.max((e - e0).abs())) / scale
    }

    /// Characteristic energy of the motion: max(1, |H(0)|, max_t osc energy).
    /// Orbits on the E ≈ 0 shell have term energies in the hundreds, so the
    /// shell value alone is a meaningless normalizer.
    pub fn characteristic_energy(&self) -> f64 {
        let osc = self
            .states
            .iter()
            .fold(0.0_f64, |m, s| m.max(0.5 * (s.x * s.x + s.p * s.p)));
        osc.max(self.energies[0].abs()).max(1.0)
    }

    /// max_t |H(t) - H(0)| normalized by the characteristic energy.
    pub fn scaled_energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().fold(0.0_f64, |m, &e| m.max((e - e0).abs()))
            / self.characteristic_energy()
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Accepted integration step, with derivatives at both ends. The cubic
/// Hermite on (y0, f0, y1, f1) is accurate to the step's own resolution.
struct StepRecord<'a, const N: usize> {
    t0: f64,
    t1: f64,
    y0: &'a [f64; N],
    y1: &'a [f64; N],
    f0: &'a [f64; N],
    f1: &'a [f64; N],
}

impl<const N: usize> StepRecord<'_, N> {
    fn interpolate(&self, theta: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta);
        let h10 = theta * (1.0 - theta) * (1.0 - theta);
        let h01 = theta * theta * (3.0 - 2.0 * theta);
        let h11 = theta * theta * (theta - 1.0);
        let mut ys = [0.0_f64; N];
        for (i, slot) in ys.iter_mut().enumerate() {
            *slot =
                h00 * self.y0[i] + h01 * self.y1[i] + h * (h10 * self.f0[i] + h11 * self.f1[i]);
        }
        ys
    }
}

/// One adaptive DOPRI5 pass, invoking `on_sample` at every multiple of
/// `sample_dt` (cubic Hermite between accepted steps) and `on_step` after
/// every accepted step. Returns the final state.
#[allow(clippy::too_many_arguments)]
fn dopri5<const N: usize>(
    rhs: &dyn Fn(&[f64; N]) -> [f64; N],
    guard: &dyn Fn(&[f64; N]) -> bool,
    y0: [f64; N],
    t_end: f64,
    sample_dt: f64,
    opts: &IntegratorOptions,
    on_sample: &mut dyn FnMut(f64, &[f64; N]),
    on_step: &mut dyn FnMut(&StepRecord<'_, N>),
) -> Result<[f64; N], SemiclassicalError> {
    let mut t = 0.0_f64;
    let mut y = y0;
    let mut f = rhs(&y);
    let mut h = 1e-3_f64.min(t_end);
    let n_samples = (t_end / sample_dt).round() as usize;

    on_sample(0.0, &y);
    let mut next_sample = 1usize;

    let mut steps = 0usize;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(SemiclassicalError::StepBudget(opts.max_steps));
        }
        steps += 1;
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(SemiclassicalError::StepUnderflow { t, h });
        }
        let h_eff = h.min(t_end - t);

        let mut k = [[0.0_f64; N]; 7];
        k[0] = f;
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h_eff * a * kj[i];
                    }
                }
            }
            k[stage] = rhs(&ys);
        }
        let mut y_new = y;
        let mut err_vec = [0.0_f64; N];
        for (j, kj) in k.iter().enumerate() {
            let b = B5[j];
            let diff = B5[j] - B4[j];
            for i in 0..N {
                if b != 0.0 {
                    y_new[i] += h_eff * b * kj[i];
                }
                err_vec[i] += h_eff * diff * kj[i];
            }
        }
        let mut err = 0.0_f64;
        for i in 0..N {
            let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let r = err_vec[i] / sk;
            err += r * r;
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            // accepted: dense-sample the interval with a cubic Hermite
            let f_new = rhs(&y_new);
            let t_new = t + h_eff;
            let record =
                StepRecord { t0: t, t1: t_new, y0: &y, y1: &y_new, f0: &f, f1: &f_new };
            while next_sample <= n_samples {
                let ts = next_sample as f64 * sample_dt;
                if ts > t_new + 1e-12 {
                    break;
                }
                let theta = ((ts - t) / h_eff).clamp(0.0, 1.0);
                let ys = record.interpolate(theta);
                on_sample(ts, &ys);
                next_sample += 1;
            }
            on_step(&record);
            y = y_new;
            f = f_new;
            t = t_new;
            if !guard(&y) {
                return Err(SemiclassicalError::PoleEncounter { t });
            }
            let grow = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h = h_eff * grow.clamp(0.2, 5.0);
        } else {
            h = h_eff * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Ok(y)
}

/// Integrate the (Z, Δφ)-chart equations, sampling every `dt`.
pub fn integrate(
    s0: &ClassicalState,
    params: &ModelParams,
    t_end: f64,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, SemiclassicalError> {
    assert!(dt > 0.0 && t_end > 0.0);
    if s0.z.abs() > 1.0 {
        return Err(SemiclassicalError::InvalidInversion(s0.z));
    }
    let p = *params;
    let rhs = move |y: &[f64; 4]| {
        let s = ClassicalState { x: y[0], p: y[1], z: y[2], dphi: y[3] };
        eom_rhs(&s, &p)
    };
    let guard = |y: &[f64; 4]| y[2].abs() < 1.0 - 1e-9;

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut energies = Vec::new();
    {
        let mut sink = |t: f64, y: &[f64; 4]| {
            let s = ClassicalState { x: y[0], p: y[1], z: y[2], dphi: y[3] };
            times.push(t);
            energies.push(classical_energy(&s, params).unwrap_or(f64::NAN));
            states.push(s);
        };
        dopri5(
            &rhs,
            &guard,
            [s0.x, s0.p, s0.z, s0.dphi],
            t_end,
            dt,
            opts,
            &mut sink,
            &mut |_| {},
        )?;
    }
    let traj = Trajectory { times, states, energies };
    if let Some(tol) = opts.drift_tolerance {
        let drift = traj.max_energy_drift();
        if drift > tol {
            return Err(SemiclassicalError::EnergyDrift { drift, tol });
        }
    }
    Ok(traj)
}

/// Integrate in Cartesian spin variables (x, p, s_x, s_y, s_z); pole-free.
///
/// |s| is renormalized at every sample; Δφ is recovered as atan2(s_y, s_x)
/// and unwrapped by continuity.
pub fn integrate_cartesian(
    s0: &ClassicalState,
    params: &ModelParams,
    t_end: f64,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, SemiclassicalError> {
    assert!(dt > 0.0 && t_end > 0.0);
    let p = *params;
    let rhs = move |y: &[f64; 5]| cartesian_rhs(y, &p);
    let guard = |_: &[f64; 5]| true;
    let root = (1.0 - s0.z * s0.z).sqrt();
    let y0 = [s0.x, s0.p, root * s0.dphi.cos(), root * s0.dphi.sin(), s0.z];

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut energies = Vec::new();
    let mut prev_phi: Option<f64> = None;
    {
        let mut sink = |t: f64, y: &[f64; 5]| {
            let norm = (y[2] * y[2] + y[3] * y[3] + y[4] * y[4]).sqrt();
            let (sx, sy, sz) = (y[2] / norm, y[3] / norm, y[4] / norm);
            let mut phi = sy.atan2(sx);
            if let Some(prev) = prev_phi {
                // unwrap to the branch closest to the previous sample
                let two_pi = 2.0 * std::f64::consts::PI;
                let k = ((prev - phi) / two_pi).round();
                phi += k * two_pi;
            }
            prev_phi = Some(phi);
            let s = ClassicalState { x: y[0], p: y[1], z: sz.clamp(-1.0, 1.0), dphi: phi };
            times.push(t);
            energies.push(
                0.5 * y[1] * y[1]
                    + 0.5 * y[0] * y[0]
                    + 0.5 * params.omega * sz
                    + (params.g * std::f64::consts::SQRT_2 * y[0] + params.lambda) * sx,
            );
            states.push(s);
        };
        dopri5(&rhs, &guard, y0, t_end, dt, opts, &mut sink, &mut |_| {})?;
    }
    let traj = Trajectory { times, states, energies };
    if let Some(tol) = opts.drift_tolerance {
        let drift = traj.max_energy_drift();
        if drift > tol {
            return Err(SemiclassicalError::EnergyDrift { drift, tol });
        }
    }
    Ok(traj)
}

fn cartesian_rhs(y: &[f64; 5], params: &ModelParams) -> [f64; 5] {
    let bx = params.g * std::f64::consts::SQRT_2 * y[0] + params.lambda;
    let bz = 0.5 * params.omega;
    // ṡ = B × s with B = (bx, 0, bz)
    [
        y[1],
        -y[0] - params.g * std::f64::consts::SQRT_2 * y[2],
        -bz * y[3],
        bz * y[2] - bx * y[4],
        bx * y[3],
    ]
}

/// Coordinates of a classical state, for surface definitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateCoord {
    X,
    P,
    Z,
    DPhi,
}

impl StateCoord {
    pub fn get(&self, s: &ClassicalState) -> f64 {
        match self {
            StateCoord::X => s.x,
            StateCoord::P => s.p,
            StateCoord::Z => s.z,
            StateCoord::DPhi => s.dphi,
        }
    }
}

/// Poincaré surface: crossings of `coord` through `level` with positive
/// time derivative, recording the `record` pair.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSpec {
    pub coord: StateCoord,
    pub level: f64,
    pub record: (StateCoord, StateCoord),
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        SurfaceSpec { coord: StateCoord::Z, level: 0.0, record: (StateCoord::X, StateCoord::P) }
    }
}

impl SurfaceSpec {
    pub fn record_pair(&self, s: &ClassicalState) -> (f64, f64) {
        (self.record.0.get(s), self.record.1.get(s))
    }
}

/// Interpolated intersections of a sampled trajectory with the surface.
///
/// Between bracketing samples the state is a cubic Hermite in each
/// coordinate (derivatives from the equations of motion); the crossing is
/// refined by bisection on the interpolant.
pub fn poincare_section(
    traj: &Trajectory,
    params: &ModelParams,
    surface: &SurfaceSpec,
) -> Result<Vec<(f64, ClassicalState)>, SemiclassicalError> {
    let mut out = Vec::new();
    for w in 0..traj.states.len().saturating_sub(1) {
        let (t0, t1) = (traj.times[w], traj.times[w + 1]);
        let (s0, s1) = (traj.states[w], traj.states[w + 1]);
        let c0 = surface.coord.get(&s0) - surface.level;
        let c1 = surface.coord.get(&s1) - surface.level;
        if !(c0 < 0.0 && c1 >= 0.0) {
            continue; // upward crossings only
        }
        let h = t1 - t0;
        let f0 = eom_rhs(&s0, params);
        let f1 = eom_rhs(&s1, params);
        let y0 = [s0.x, s0.p, s0.z, s0.dphi];
        let y1 = [s1.x, s1.p, s1.z, s1.dphi];
        let eval = |theta: f64| -> ClassicalState {
            let h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta);
            let h10 = theta * (1.0 - theta) * (1.0 - theta);
            let h01 = theta * theta * (3.0 - 2.0 * theta);
            let h11 = theta * theta * (theta - 1.0);
            let mut ys = [0.0_f64; 4];
            for i in 0..4 {
                ys[i] = h00 * y0[i] + h01 * y1[i] + h * (h10 * f0[i] + h11 * f1[i]);
            }
            ClassicalState { x: ys[0], p: ys[1], z: ys[2], dphi: ys[3] }
        };
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let c = surface.coord.get(&eval(mid)) - surface.level;
            if c < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        out.push((t0 + theta * h, eval(theta)));
    }
    if out.is_empty() {
        return Err(SemiclassicalError::NoCrossings);
    }
    Ok(out)
}

/// Surface crossings detected during integration, at the resolution of the
/// integrator's own steps.
///
/// Needed for stiff spin precession: a stored trajectory sampled every dt
/// cannot be interpolated reliably when the precession rate exceeds ~1/dt,
/// while each accepted integration step resolves the motion by construction.
/// Runs in the Cartesian spin chart, so Bloch poles are harmless.
pub fn poincare_section_live(
    s0: &ClassicalState,
    params: &ModelParams,
    t_end: f64,
    surface: &SurfaceSpec,
    opts: &IntegratorOptions,
) -> Result<Vec<(f64, ClassicalState)>, SemiclassicalError> {
    let p = *params;
    let rhs = move |y: &[f64; 5]| cartesian_rhs(y, &p);
    let guard = |_: &[f64; 5]| true;
    let root = (1.0 - s0.z * s0.z).sqrt();
    let y0 = [s0.x, s0.p, root * s0.dphi.cos(), root * s0.dphi.sin(), s0.z];

    let to_state = |y: &[f64; 5]| -> ClassicalState {
        let norm = (y[2] * y[2] + y[3] * y[3] + y[4] * y[4]).sqrt();
        ClassicalState {
            x: y[0],
            p: y[1],
            z: (y[4] / norm).clamp(-1.0, 1.0),
            dphi: (y[3] / norm).atan2(y[2] / norm),
        }
    };

    let mut out: Vec<(f64, ClassicalState)> = Vec::new();
    {
        let mut on_step = |record: &StepRecord<'_, 5>| {
            let c0 = surface.coord.get(&to_state(record.y0)) - surface.level;
            let c1 = surface.coord.get(&to_state(record.y1)) - surface.level;
            if !(c0 < 0.0 && c1 >= 0.0) {
                return;
            }
            let mut lo = 0.0_f64;
            let mut hi = 1.0_f64;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let c = surface.coord.get(&to_state(&record.interpolate(mid))) - surface.level;
                if c < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let theta = 0.5 * (lo + hi);
            let t_cross = record.t0 + theta * (record.t1 - record.t0);
            out.push((t_cross, to_state(&record.interpolate(theta))));
        };
        let mut nop = |_: f64, _: &[f64; 5]| {};
        dopri5(&rhs, &guard, y0, t_end, t_end, opts, &mut nop, &mut on_step)?;
    }
    if out.is_empty() {
        return Err(SemiclassicalError::NoCrossings);
    }
    Ok(out)
}

/// Fraction of occupied cells when `points` are binned on an n×n grid over
/// fixed bounds. Regular sections fill a curve, chaotic ones an area.
pub fn fill_fraction(points: &[(f64, f64)], bounds: ((f64, f64), (f64, f64)), n: usize) -> f64 {
    let ((x_lo, x_hi), (y_lo, y_hi)) = bounds;
    let mut occupied = vec![false; n * n];
    for &(x, y) in points {
        if x < x_lo || x > x_hi || y < y_lo || y > y_hi {
            continue;
        }
        let i = (((x - x_lo) / (x_hi - x_lo) * n as f64) as usize).min(n - 1);
        let j = (((y - y_lo) / (y_hi - y_lo) * n as f64) as usize).min(n - 1);
        occupied[i * n + j] = true;
    }
    occupied.iter().filter(|b| **b).count() as f64 / (n * n) as f64
}

/// Benettin controls.
#[derive(Debug, Clone, Copy)]
pub struct BenettinOptions {
    pub renorm_interval: f64,
    pub initial_separation: f64,
    pub integrator: IntegratorOptions,
}

impl Default for BenettinOptions {
    fn default() -> Self {
        BenettinOptions {
            renorm_interval: 1.0,
            initial_separation: 1e-8,
            integrator: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LyapunovEstimate {
    pub exponent: f64,
    /// (t, running estimate) after each renormalization.
    pub history: Vec<(f64, f64)>,
    /// Running estimate stable over the last quarter of the run.
    pub converged: bool,
}

/// Largest Lyapunov exponent by the two-trajectory Benettin method with
/// periodic renormalization.
///
/// Both trajectories run in the pole-free Cartesian spin chart; distance is
/// Euclidean in (x, p, s_x, s_y, s_z).
pub fn lyapunov_largest(
    s0: &ClassicalState,
    params: &ModelParams,
    t_total: f64,
    opts: &BenettinOptions,
) -> Result<LyapunovEstimate, SemiclassicalError> {
    let p = *params;
    let rhs = move |y: &[f64; 5]| cartesian_rhs(y, &p);
    let guard = |_: &[f64; 5]| true;
    let root = (1.0 - s0.z * s0.z).sqrt();
    let mut reference = [s0.x, s0.p, root * s0.dphi.cos(), root * s0.dphi.sin(), s0.z];
    let d0 = opts.initial_separation;
    let mut perturbed = reference;
    perturbed[0] += d0;

    let n_intervals = (t_total / opts.renorm_interval).round() as usize;
    let mut log_sum = 0.0_f64;
    let mut history = Vec::with_capacity(n_intervals);
    let mut nop = |_: f64, _: &[f64; 5]| {};
    for k in 1..=n_intervals {
        reference = dopri5(
            &rhs,
            &guard,
            reference,
            opts.renorm_interval,
            opts.renorm_interval,
            &opts.integrator,
            &mut nop,
            &mut |_| {},
        )?;
        perturbed = dopri5(
            &rhs,
            &guard,
            perturbed,
            opts.renorm_interval,
            opts.renorm_interval,
            &opts.integrator,
            &mut nop,
            &mut |_| {},
        )?;
        let mut dist2 = 0.0_f64;
        for i in 0..5 {
            let d = perturbed[i] - reference[i];
            dist2 += d * d;
        }
        let dist = dist2.sqrt();
        log_sum += (dist / d0).ln();
        let t = k as f64 * opts.renorm_interval;
        history.push((t, log_sum / t));
        let scale = d0 / dist;
        for i in 0..5 {
            perturbed[i] = reference[i] + (perturbed[i] - reference[i]) * scale;
        }
    }
    let exponent = log_sum / t_total;
    // trend check: last quarter vs the estimate one quarter earlier
    let q = history.len() / 4;
    let converged = if q > 0 {
        let late = history[history.len() - 1].1;
        let earlier = history[history.len() - 1 - q].1;
        (late - earlier).abs() <= 0.1 * late.abs().max(1e-3)
    } else {
        false
    };
    Ok(LyapunovEstimate { exponent, history, converged })
}

/// Born-Oppenheimer adiabatic potentials
/// V_∓(x) = x²/2 ∓ √(ω²/4 + (√2·g·x + λ)²), returned as (V_minus, V_plus).
pub fn adiabatic_potentials(x: f64, params: &ModelParams) -> (f64, f64) {
    let gap_half = (0.25 * params.omega * params.omega
        + (std::f64::consts::SQRT_2 * params.g * x + params.lambda).powi(2))
    .sqrt();
    let base = 0.5 * x * x;
    (base - gap_half, base + gap_half)
}
