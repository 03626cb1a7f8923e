//! Closed-system dynamics in the single-excitation subspace `{|0,e>, |1,g>}`.
//!
//! The integrator works in the frame where the cavity carries the detuning
//! `omega(t) a^dag a`; the interaction-picture coherence is recovered in the
//! observables through the accumulated phase `Phi`.

use crate::error::{Error, Result};
use crate::modulation::{check_grid, interior, phase_increment, ModulationProtocol, Scheme};
use crate::ode::{rk4_step, OdeState};
use crate::scalar::{cplx, lit, mul_neg_i, tolerance, Cplx, Real};

/// RK4 substeps are chosen so that `lambda_max * h` stays below this value,
/// which keeps the per-step norm defect near rounding level.
pub const SUBSTEP_PHASE: f64 = 0.005;
/// Per-substep norm change treated as integrator failure.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;
/// Output grid points per drive period (minimum).
pub const POINTS_PER_PERIOD: f64 = 40.0;

/// Coupling and decay rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    /// TLS-cavity coupling `g` in rad/ns.
    pub g: T,
    /// Cavity decay rate in 1/ns.
    pub kappa: T,
    /// TLS decay rate in 1/ns.
    pub gamma: T,
}

impl<T: Real> SystemParams<T> {
    pub fn new(g: T, kappa: T, gamma: T) -> Result<Self> {
        let p = Self { g, kappa, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn closed(g: T) -> Result<Self> {
        Self::new(g, T::zero(), T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > T::zero()) || !self.g.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling g = {} must be positive", self.g)));
        }
        if !(self.kappa >= T::zero()) || !(self.gamma >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "decay rates must be non-negative (kappa = {}, gamma = {})",
                self.kappa, self.gamma
            )));
        }
        Ok(())
    }

    pub fn is_closed(&self) -> bool {
        self.kappa == T::zero() && self.gamma == T::zero()
    }

    /// Resonant Rabi half-period `pi / g` of the cavity population.
    pub fn rabi_period(&self) -> T {
        T::PI() / self.g
    }
}

/// Amplitudes on `|0,e>` and `|1,g>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState<T> {
    pub c_e: Cplx<T>,
    pub c_a: Cplx<T>,
}

impl<T: Real> PureState<T> {
    pub fn new(c_e: Cplx<T>, c_a: Cplx<T>) -> Self {
        Self { c_e, c_a }
    }

    /// TLS excited, cavity empty.
    pub fn excited() -> Self {
        Self::new(Cplx::new(T::one(), T::zero()), Cplx::new(T::zero(), T::zero()))
    }

    /// One photon, TLS in the ground state.
    pub fn photon() -> Self {
        Self::new(Cplx::new(T::zero(), T::zero()), Cplx::new(T::one(), T::zero()))
    }

    /// `(|0,e> + |1,g>) / sqrt(2)`, the `+x` pole of the Bloch sphere.
    pub fn plus_x() -> Self {
        let s = T::FRAC_1_SQRT_2();
        Self::new(Cplx::new(s, T::zero()), Cplx::new(s, T::zero()))
    }

    pub fn norm_sqr(&self) -> T {
        self.c_e.norm_sqr() + self.c_a.norm_sqr()
    }

    /// Cavity population `|c_a|^2`.
    pub fn cavity_population(&self) -> T {
        self.c_a.norm_sqr()
    }
}

impl<T: Real> OdeState<T> for PureState<T> {
    fn axpy(&self, a: T, other: &Self) -> Self {
        Self::new(self.c_e + other.c_e * a, self.c_a + other.c_a * a)
    }
}

/// Bloch vector and angles at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochSample<T> {
    pub t: T,
    pub u: T,
    pub v: T,
    pub w: T,
    pub theta: T,
    pub varphi: T,
    pub chi: T,
    pub coherence_re: T,
    pub coherence_im: T,
    /// False when `|r| < 1e-12`; `theta` and `chi` are then reported as zero.
    pub angles_defined: bool,
}

impl<T: Real> BlochSample<T> {
    pub fn radius(&self) -> T {
        (self.u * self.u + self.v * self.v + self.w * self.w).sqrt()
    }

    /// Angle of rotation about the x axis measured from the north pole,
    /// `atan2(-v, w)`. A resonant rotation by `g t` in amplitude appears here
    /// as `2 g t`.
    pub fn x_rotation_angle(&self) -> T {
        (-self.v).atan2(self.w)
    }
}

/// Bloch observables of `state` with accumulated phase `phi`.
///
/// The coherence is `C = e^{i Phi} c_e conj(c_a)` for the Floquet scheme and
/// `c_e conj(c_a)` for static schemes.
pub fn bloch_observables<T: Real>(state: &PureState<T>, phi: T, scheme: Scheme) -> BlochSample<T> {
    bloch_observables_at(T::zero(), state, phi, scheme)
}

pub(crate) fn bloch_observables_at<T: Real>(
    t: T,
    state: &PureState<T>,
    phi: T,
    scheme: Scheme,
) -> BlochSample<T> {
    let bare = state.c_e * state.c_a.conj();
    let c = if scheme.is_floquet() {
        bare * Cplx::from_polar(T::one(), phi)
    } else {
        bare
    };
    bloch_from_coherence(t, c, state.c_e.norm_sqr() - state.c_a.norm_sqr(), state)
}

fn bloch_from_coherence<T: Real>(t: T, c: Cplx<T>, w: T, state: &PureState<T>) -> BlochSample<T> {
    let two = lit::<T>(2.0);
    let u = two * c.re;
    let v = -two * c.im;
    let r = (u * u + v * v + w * w).sqrt();
    let pole = lit::<T>(1e-9);
    let varphi = if state.c_e.norm() < pole || state.c_a.norm() < pole {
        T::zero()
    } else {
        v.atan2(u)
    };
    let defined = r >= lit(1e-12);
    let clamp = |x: T| x.max(-T::one()).min(T::one());
    let (theta, chi) = if defined {
        (clamp(w / r).acos(), clamp(u / r).acos())
    } else {
        (T::zero(), T::zero())
    };
    BlochSample {
        t,
        u,
        v,
        w,
        theta,
        varphi,
        chi,
        coherence_re: c.re,
        coherence_im: c.im,
        angles_defined: defined,
    }
}

/// Sampled closed-system evolution.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub grid: Vec<T>,
    pub states: Vec<PureState<T>>,
    pub bloch: Vec<BlochSample<T>>,
    /// Accumulated phase `Phi(t)`, zero at `grid[0]`.
    pub phase: Vec<T>,
    pub protocol: ModulationProtocol<T>,
    pub params: SystemParams<T>,
    /// Phase bound `(g + A0 Omega) h` used for the internal steps.
    pub substep_phase: T,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest deviation of `|psi|^2` from one over the samples.
    pub fn max_norm_defect(&self) -> T {
        self.states
            .iter()
            .map(|s| (s.norm_sqr() - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// Index of the first sample with `t >= t`.
    pub fn index_at(&self, t: T) -> usize {
        self.grid.partition_point(|&g| g < t).min(self.grid.len().saturating_sub(1))
    }

    /// Unwrapped `x_rotation_angle` per sample.
    pub fn unwrapped_rotation(&self) -> Vec<T> {
        unwrap_phases(&self.bloch.iter().map(|b| b.x_rotation_angle()).collect::<Vec<_>>())
    }
}

/// Removes `2 pi` jumps from a sampled angle sequence.
pub fn unwrap_phases<T: Real>(angles: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(angles.len());
    let tau = T::TAU();
    let mut offset = T::zero();
    let mut prev: Option<T> = None;
    for &a in angles {
        if let Some(p) = prev {
            let d = a - p;
            if d > T::PI() {
                offset -= tau;
            } else if d < -T::PI() {
                offset += tau;
            }
        }
        out.push(a + offset);
        prev = Some(a);
    }
    out
}

/// Evenly spaced grid from `t0` to `t1` with spacing no larger than `max_step`.
pub fn uniform_grid<T: Real>(t0: T, t1: T, max_step: T) -> Result<Vec<T>> {
    if !(t1 > t0) || !(max_step > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "grid needs t1 > t0 and a positive step (t0 = {t0}, t1 = {t1}, step = {max_step})"
        )));
    }
    let n = ((t1 - t0) / max_step * lit(1.0 - 1e-12)).ceil().to_usize().unwrap_or(1).max(1);
    let h = (t1 - t0) / lit(n as f64);
    Ok((0..=n)
        .map(|i| if i == n { t1 } else { t0 + h * lit(i as f64) })
        .collect())
}

/// Largest output-grid step accepted by [`propagate_schrodinger`].
pub fn max_grid_step<T: Real>(protocol: &ModulationProtocol<T>, params: &SystemParams<T>) -> T {
    let rabi = params.rabi_period() / lit(POINTS_PER_PERIOD);
    if protocol.is_modulated() {
        rabi.min(protocol.period() / lit(POINTS_PER_PERIOD))
    } else {
        rabi
    }
}

/// Default output step: the largest admissible one.
pub fn default_step<T: Real>(protocol: &ModulationProtocol<T>, params: &SystemParams<T>) -> T {
    max_grid_step(protocol, params)
}

struct Stepper<'a, T: Real> {
    protocol: &'a ModulationProtocol<T>,
    g: T,
    h_max: T,
    breakpoints: Vec<T>,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn new(protocol: &'a ModulationProtocol<T>, params: &SystemParams<T>, substep_phase: T) -> Self {
        let lambda = params.g + protocol.peak_amplitude().abs();
        Self {
            protocol,
            g: params.g,
            h_max: substep_phase / lambda,
            breakpoints: protocol.breakpoints(),
        }
    }

    /// Advances from `a` to `b`, returning the state and the phase increment.
    fn advance(&self, state: PureState<T>, a: T, b: T) -> Result<(PureState<T>, T)> {
        let mut psi = state;
        let mut dphi = T::zero();
        let mut lo = a;
        let inner = interior(&self.breakpoints, a, b);
        for &hi in inner.iter().chain(std::iter::once(&b)) {
            let n = ((hi - lo) / self.h_max).ceil().to_usize().unwrap_or(1).max(1);
            let h = (hi - lo) / lit(n as f64);
            let (plo, phi_) = (lo, hi);
            let mut rhs = |t: T, y: &PureState<T>| {
                let w = self.protocol.omega_within(t, plo, phi_);
                PureState::new(mul_neg_i(y.c_a * self.g), mul_neg_i(y.c_e * self.g + y.c_a * w))
            };
            for k in 0..n {
                let t = lo + h * lit(k as f64);
                let before = psi.norm_sqr();
                psi = rk4_step(&mut rhs, t, h, &psi);
                let drift = (psi.norm_sqr() - before).abs();
                if !(drift <= tolerance::<T>(NORM_DRIFT_LIMIT, 8.0)) {
                    return Err(Error::NormDrift { t: (t + h).to_f64_lossy(), drift: drift.to_f64_lossy() });
                }
                if self.protocol.is_modulated() {
                    dphi += phase_increment(self.protocol, &self.breakpoints, t, t + h);
                }
            }
            lo = hi;
        }
        Ok((psi, dphi))
    }
}

/// Integrates `i d/dt psi = H(t) psi` with `H = [[0, g], [g, omega(t)]]`.
///
/// Output samples are taken on `grid`; internally each grid interval is
/// split at plateau boundaries and subdivided into RK4 steps with
/// `(g + A0 Omega) h <= 0.005`. The norm is monitored, never renormalised.
pub fn propagate_schrodinger<T: Real>(
    state0: PureState<T>,
    protocol: &ModulationProtocol<T>,
    params: &SystemParams<T>,
    grid: &[T],
) -> Result<Trajectory<T>> {
    propagate_schrodinger_with(state0, protocol, params, grid, lit(SUBSTEP_PHASE))
}

/// [`propagate_schrodinger`] with an explicit internal step bound
/// `(g + A0 Omega) h <= substep_phase`; used for step-halving checks.
pub fn propagate_schrodinger_with<T: Real>(
    state0: PureState<T>,
    protocol: &ModulationProtocol<T>,
    params: &SystemParams<T>,
    grid: &[T],
    substep_phase: T,
) -> Result<Trajectory<T>> {
    if !(substep_phase > T::zero()) || substep_phase > lit(SUBSTEP_PHASE) {
        return Err(Error::InvalidParameter(format!(
            "substep phase must lie in (0, {SUBSTEP_PHASE}], got {substep_phase}"
        )));
    }
    params.validate()?;
    if !params.is_closed() {
        return Err(Error::InvalidParameter(
            "closed-system propagation requires kappa = gamma = 0".into(),
        ));
    }
    protocol.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    check_grid(grid, Some(max_grid_step(protocol, params)))?;
    if !((state0.norm_sqr() - T::one()).abs() <= lit(1e-9)) {
        return Err(Error::InvalidParameter(format!(
            "initial state is not normalised (|psi|^2 = {})",
            state0.norm_sqr()
        )));
    }
    let stepper = Stepper::new(protocol, params, substep_phase);
    let mut states = Vec::with_capacity(grid.len());
    let mut phase = Vec::with_capacity(grid.len());
    let mut psi = state0;
    let mut phi = T::zero();
    states.push(psi);
    phase.push(phi);
    for pair in grid.windows(2) {
        let (next, dphi) = stepper.advance(psi, pair[0], pair[1])?;
        psi = next;
        phi += dphi;
        states.push(psi);
        phase.push(phi);
    }
    let bloch = grid
        .iter()
        .zip(&states)
        .zip(&phase)
        .map(|((&t, s), &p)| bloch_observables_at(t, s, p, protocol.scheme))
        .collect();
    Ok(Trajectory {
        grid: grid.to_vec(),
        states,
        bloch,
        phase,
        protocol: protocol.clone(),
        params: *params,
        substep_phase,
    })
}

/// Closed-form evolution under a constant detuning `delta`:
/// `H = [[0, g], [g, delta]]`, with `Delta~ = sqrt(delta^2 + 4 g^2)`.
pub fn analytic_detuned_solution<T: Real>(state0: PureState<T>, delta: T, g: T, t: T) -> PureState<T> {
    let two = lit::<T>(2.0);
    let dt = (delta * delta + lit::<T>(4.0) * g * g).sqrt();
    let x = dt * t / two;
    let (s, c) = x.sin_cos();
    let global = Cplx::from_polar(T::one(), -delta * t / two);
    let r = delta / dt;
    let k = two * g / dt * s;
    let c_a = global * (cplx(c, -r * s) * state0.c_a + cplx(T::zero(), -k) * state0.c_e);
    let c_e = global * (cplx(c, r * s) * state0.c_e + cplx(T::zero(), -k) * state0.c_a);
    PureState::new(c_e, c_a)
}

/// Protocol fidelity `max_{t > t_on} |c_a(t)|`.
///
/// The trajectory must extend a full resonant Rabi period `pi / g` past
/// `t_on`. Sampled local maxima close to the best one are refined by
/// golden-section search on re-propagated amplitudes, so the result does not
/// depend on the sampling density.
pub fn fidelity<T: Real>(traj: &Trajectory<T>, t_on: T) -> Result<T> {
    let end = *traj
        .grid
        .last()
        .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
    let required = t_on + traj.params.rabi_period();
    if end < required {
        return Err(Error::InsufficientCoverage { end: end.to_f64_lossy(), required: required.to_f64_lossy() });
    }
    let start = traj.grid.partition_point(|&t| t <= t_on);
    let amp: Vec<T> = traj.states.iter().map(|s| s.c_a.norm()).collect();
    let best = amp[start..].iter().copied().fold(T::zero(), T::max);
    let stepper = Stepper::new(&traj.protocol, &traj.params, traj.substep_phase);
    let n = traj.grid.len();
    let mut fid = best;
    for i in start..n {
        let left = if i > start { amp[i - 1] } else { T::zero() };
        let right = if i + 1 < n { amp[i + 1] } else { T::zero() };
        if amp[i] < left || amp[i] < right || amp[i] < best - lit(1e-3) {
            continue;
        }
        // bracket [t_{i-1}, t_{i+1}], clipped to t > t_on
        let j = if i > 0 { i - 1 } else { i };
        let lo_t = traj.grid[j].max(t_on);
        let hi_t = traj.grid[(i + 1).min(n - 1)];
        let origin = (traj.grid[j], traj.states[j]);
        let eval = |t: T| -> Result<T> {
            let (s, _) = stepper.advance(origin.1, origin.0, t)?;
            Ok(s.c_a.norm())
        };
        fid = fid.max(golden_max(eval, lo_t, hi_t)?);
    }
    Ok(fid)
}

fn golden_max<T: Real, F: Fn(T) -> Result<T>>(f: F, a: T, b: T) -> Result<T> {
    if !(b > a) {
        return f(a);
    }
    let r = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = f(a)?.max(f(b)?).max(f1).max(f2);
    for _ in 0..80 {
        if b - a <= lit::<T>(1e-13) * (T::one() + b.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
            best = best.max(f2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
            best = best.max(f1);
        }
    }
    Ok(best)
}
