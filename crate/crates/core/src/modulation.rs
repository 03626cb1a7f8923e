//! Modulation envelopes, the cavity detuning `omega(t)` and the phase it
//! accumulates.
//!
//! A protocol is a list of switching windows, each a plateau `[t_off, t_on]`
//! flanked by Gaussian edges of width `sigma_t`. Overlapping windows combine
//! by pointwise maximum so the envelope never exceeds the plateau value
//! `A0 * Omega`.
//!
//! Units: time in ns, angular frequencies in rad/ns, phases in rad.

use crate::error::{Error, Result};
use crate::scalar::{lit, tolerance, Real};
use crate::special::dawson;

/// How the envelope drives the cavity detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `omega(t) = -A(t) cos(Omega t)`
    FloquetCosine,
    /// `omega(t) = A(t)` with the Gaussian-edged envelope.
    StaticDetuningSmooth,
    /// `omega(t) = A0 Omega` on each plateau, zero elsewhere.
    StaticDetuningAbrupt,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::FloquetCosine => "floquet_cosine",
            Scheme::StaticDetuningSmooth => "static_smooth",
            Scheme::StaticDetuningAbrupt => "static_abrupt",
        }
    }

    pub fn is_floquet(self) -> bool {
        self == Scheme::FloquetCosine
    }
}

/// One interaction-off interval: plateau from `t_off` to `t_on`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchWindow<T> {
    pub t_off: T,
    pub t_on: T,
    pub sigma_t: T,
}

impl<T: Real> SwitchWindow<T> {
    pub fn new(t_off: T, t_on: T, sigma_t: T) -> Result<Self> {
        let w = Self { t_off, t_on, sigma_t };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_off.is_finite() && self.t_on.is_finite()) || self.t_off > self.t_on {
            return Err(Error::InvalidParameter(format!(
                "window needs t_off <= t_on, got [{}, {}]",
                self.t_off, self.t_on
            )));
        }
        if !(self.sigma_t > T::zero() && self.sigma_t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma_t must be positive, got {}",
                self.sigma_t
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> T {
        self.t_on - self.t_off
    }

    /// Gaussian-edged plateau profile in `[0, 1]`.
    pub fn smooth_profile(&self, t: T) -> T {
        let two = lit::<T>(2.0);
        if t < self.t_off {
            let d = t - self.t_off;
            (-(d * d) / (two * self.sigma_t * self.sigma_t)).exp()
        } else if t > self.t_on {
            let d = t - self.t_on;
            (-(d * d) / (two * self.sigma_t * self.sigma_t)).exp()
        } else {
            T::one()
        }
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.t_off && t <= self.t_on
    }
}

/// Envelope windows, drive frequency and scheme selector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationProtocol<T> {
    /// Plateau amplitude in units of the drive frequency (`A0`).
    pub amplitude_ratio: T,
    /// Drive angular frequency `Omega` in rad/ns.
    pub drive_freq: T,
    pub windows: Vec<SwitchWindow<T>>,
    pub scheme: Scheme,
}

impl<T: Real> ModulationProtocol<T> {
    pub fn new(
        amplitude_ratio: T,
        drive_freq: T,
        windows: Vec<SwitchWindow<T>>,
        scheme: Scheme,
    ) -> Result<Self> {
        let p = Self { amplitude_ratio, drive_freq, windows, scheme };
        p.validate()?;
        Ok(p)
    }

    /// A protocol that never modulates the cavity.
    pub fn unmodulated(drive_freq: T) -> Self {
        Self {
            amplitude_ratio: T::zero(),
            drive_freq,
            windows: Vec::new(),
            scheme: Scheme::FloquetCosine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.drive_freq > T::zero() && self.drive_freq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "drive frequency must be positive, got {}",
                self.drive_freq
            )));
        }
        if !(self.amplitude_ratio >= T::zero() && self.amplitude_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "amplitude ratio must be non-negative, got {}",
                self.amplitude_ratio
            )));
        }
        for w in &self.windows {
            w.validate()?;
        }
        Ok(())
    }

    /// Drive period `T = 2 pi / Omega`.
    pub fn period(&self) -> T {
        T::TAU() / self.drive_freq
    }

    /// Plateau amplitude `A0 * Omega` in rad/ns.
    pub fn peak_amplitude(&self) -> T {
        self.amplitude_ratio * self.drive_freq
    }

    pub fn is_modulated(&self) -> bool {
        !self.windows.is_empty() && self.amplitude_ratio > T::zero()
    }

    /// End of the last plateau, or `None` when unmodulated.
    pub fn last_t_on(&self) -> Option<T> {
        self.windows.iter().map(|w| w.t_on).reduce(T::max)
    }

    /// Largest edge width over all windows.
    pub fn max_sigma(&self) -> T {
        self.windows.iter().map(|w| w.sigma_t).fold(T::zero(), T::max)
    }

    /// Envelope `A(t)` in rad/ns.
    pub fn envelope(&self, t: T) -> T {
        let profile = match self.scheme {
            Scheme::StaticDetuningAbrupt => {
                if self.windows.iter().any(|w| w.contains(t)) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            _ => self
                .windows
                .iter()
                .map(|w| w.smooth_profile(t))
                .fold(T::zero(), T::max),
        };
        self.peak_amplitude() * profile.min(T::one())
    }

    /// Cavity detuning `omega(t)` in rad/ns.
    pub fn omega(&self, t: T) -> T {
        match self.scheme {
            Scheme::FloquetCosine => -self.envelope(t) * (self.drive_freq * t).cos(),
            Scheme::StaticDetuningSmooth | Scheme::StaticDetuningAbrupt => self.envelope(t),
        }
    }

    /// Detuning at `t` for use inside a sub-interval `[lo, hi]` that contains
    /// no breakpoint in its interior. The abrupt step is resolved from the
    /// sub-interval midpoint so that both one-sided limits are honoured.
    pub fn omega_within(&self, t: T, lo: T, hi: T) -> T {
        match self.scheme {
            Scheme::StaticDetuningAbrupt => {
                let mid = (lo + hi) * lit(0.5);
                self.omega(mid)
            }
            _ => self.omega(t),
        }
    }

    /// Sorted plateau boundaries; integrators split steps at these points.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut b: Vec<T> = self.windows.iter().flat_map(|w| [w.t_off, w.t_on]).collect();
        b.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        b.dedup();
        b
    }
}

/// Breakpoints lying strictly inside `(lo, hi)`.
pub(crate) fn interior<T: Real>(breakpoints: &[T], lo: T, hi: T) -> &[T] {
    let start = breakpoints.partition_point(|&b| b <= lo);
    let end = breakpoints.partition_point(|&b| b < hi);
    &breakpoints[start..end.max(start)]
}

/// Checks a time grid is strictly increasing with steps no larger than `max_step`.
pub(crate) fn check_grid<T: Real>(grid: &[T], max_step: Option<T>) -> Result<()> {
    for (i, pair) in grid.windows(2).enumerate() {
        let h = pair[1] - pair[0];
        if !(h > T::zero()) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }
        if let Some(max) = max_step {
            if h > max * (T::one() + tolerance::<T>(1e-9, 16.0)) {
                return Err(Error::StepTooLarge {
                    step: h.to_f64_lossy(),
                    max: max.to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

/// `A(t)` for the protocol.
pub fn eval_envelope<T: Real>(protocol: &ModulationProtocol<T>, t: T) -> T {
    protocol.envelope(t)
}

/// `omega(t)` for the protocol.
pub fn eval_omega<T: Real>(protocol: &ModulationProtocol<T>, t: T) -> T {
    protocol.omega(t)
}

/// Accumulated phase `Phi(t) = -integral_{t_0}^{t} omega` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAccumulator<T> {
    pub grid: Vec<T>,
    pub phi: Vec<T>,
}

impl<T: Real> PhaseAccumulator<T> {
    pub fn final_phase(&self) -> T {
        self.phi.last().copied().unwrap_or_else(T::zero)
    }

    /// Phase at an arbitrary time by linear interpolation (clamped at the ends).
    pub fn at(&self, t: T) -> T {
        let n = self.grid.len();
        if n == 0 {
            return T::zero();
        }
        let i = self.grid.partition_point(|&g| g <= t);
        if i == 0 {
            return self.phi[0];
        }
        if i >= n {
            return self.phi[n - 1];
        }
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let s = (t - t0) / (t1 - t0);
        self.phi[i - 1] + s * (self.phi[i] - self.phi[i - 1])
    }
}

/// Integrates `-omega(t)` over `[a, b]` with Simpson's rule on each
/// breakpoint-free piece.
pub(crate) fn phase_increment<T: Real>(
    protocol: &ModulationProtocol<T>,
    breakpoints: &[T],
    a: T,
    b: T,
) -> T {
    let mut acc = T::zero();
    let mut lo = a;
    let inner = interior(breakpoints, a, b);
    for &cut in inner.iter().chain(std::iter::once(&b)) {
        let hi = cut;
        let mid = (lo + hi) * lit(0.5);
        let f = |t: T| protocol.omega_within(t, lo, hi);
        acc += (hi - lo) / lit(6.0) * (f(lo) + lit::<T>(4.0) * f(mid) + f(hi));
        lo = hi;
    }
    -acc
}

/// Tabulates `Phi` on `grid`, starting from zero at `grid[0]`.
///
/// Requires a strictly increasing grid; for modulated protocols the step
/// must not exceed a twentieth of the drive period.
pub fn accumulate_phase<T: Real>(
    protocol: &ModulationProtocol<T>,
    grid: &[T],
) -> Result<PhaseAccumulator<T>> {
    protocol.validate()?;
    let max_step = protocol
        .is_modulated()
        .then(|| protocol.period() / lit(20.0));
    check_grid(grid, max_step)?;
    let mut phi = Vec::with_capacity(grid.len());
    if grid.is_empty() {
        return Ok(PhaseAccumulator { grid: Vec::new(), phi });
    }
    phi.push(T::zero());
    if !protocol.is_modulated() {
        phi.resize(grid.len(), T::zero());
        return Ok(PhaseAccumulator { grid: grid.to_vec(), phi });
    }
    let bps = protocol.breakpoints();
    let mut current = T::zero();
    for pair in grid.windows(2) {
        current += phase_increment(protocol, &bps, pair[0], pair[1]);
        phi.push(current);
    }
    Ok(PhaseAccumulator { grid: grid.to_vec(), phi })
}

/// Closed-form phase contributions of a single Gaussian-edged window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePhases<T> {
    /// Rising edge, `t < t_off` (integrated from minus infinity).
    pub rising: T,
    /// Plateau, `A0 (sin Omega t_on - sin Omega t_off)`.
    pub plateau: T,
    /// Falling edge, `t > t_on` (integrated to infinity).
    pub falling: T,
}

impl<T: Real> EdgePhases<T> {
    pub fn total(&self) -> T {
        self.rising + self.plateau + self.falling
    }
}

/// Exact edge and plateau phases of a one-window Floquet protocol.
///
/// The Gaussian half-line integrals are
/// `integral_0^inf exp(-s^2/2 sigma^2) cos(Omega s) ds = sigma sqrt(pi/2) exp(-x^2)` and
/// `integral_0^inf exp(-s^2/2 sigma^2) sin(Omega s) ds = sigma sqrt(2) D(x)` with
/// `x = sigma Omega / sqrt(2)` and `D` Dawson's integral. The `erfi` form
/// `exp(-x^2) erfi(x) = 2 D(x) / sqrt(pi)` is used to avoid overflow.
pub fn analytic_edge_phases<T: Real>(protocol: &ModulationProtocol<T>) -> Result<EdgePhases<T>> {
    protocol.validate()?;
    if protocol.windows.len() != 1 {
        return Err(Error::WindowCount(protocol.windows.len()));
    }
    if protocol.scheme != Scheme::FloquetCosine {
        return Err(Error::WrongScheme { expected: "floquet_cosine" });
    }
    let w = protocol.windows[0];
    let omega = protocol.drive_freq;
    let a0 = protocol.amplitude_ratio;
    let sigma = w.sigma_t;
    let x = sigma * omega / T::SQRT_2();
    let gauss_cos = sigma * (T::PI() * lit(0.5)).sqrt() * (-(x * x)).exp();
    let gauss_sin = sigma * T::SQRT_2() * dawson(x);
    let (s0, c0) = (omega * w.t_off).sin_cos();
    let (s1, c1) = (omega * w.t_on).sin_cos();
    let peak = a0 * omega;
    Ok(EdgePhases {
        rising: peak * (gauss_cos * c0 + gauss_sin * s0),
        plateau: a0 * (s1 - s0),
        falling: peak * (gauss_cos * c1 - gauss_sin * s1),
    })
}

/// Magnitudes of the derivatives `|f^(k)|`, `k = 1, 2, ...`, of the
/// normalised edge profiles where they meet the plateau.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDerivatives<T> {
    pub rising: Vec<T>,
    pub falling: Vec<T>,
}

impl<T: Real> EdgeDerivatives<T> {
    /// Derivatives of `exp(-s^2 / 2 sigma^2)` at `s = 0`: odd orders vanish,
    /// order `2m` has magnitude `(2m - 1)!! / sigma^(2m)`.
    pub fn gaussian(sigma: T, max_order: usize) -> Self {
        let mut d = Vec::with_capacity(max_order);
        let mut double_factorial = T::one();
        for k in 1..=max_order {
            if k % 2 == 1 {
                d.push(T::zero());
            } else {
                if k > 2 {
                    double_factorial *= lit::<T>((k - 1) as f64);
                }
                d.push(double_factorial / sigma.powi(k as i32));
            }
        }
        Self { rising: d.clone(), falling: d }
    }

    /// Only the first derivative at each junction.
    pub fn first_order(rising: T, falling: T) -> Self {
        Self { rising: vec![rising.abs()], falling: vec![falling.abs()] }
    }
}

/// Residual phase estimate beyond the leading `-A0 f(t_on) sin(Omega t_on)`
/// terms: `A0 * sum_k |f^(k)| / Omega^k` summed over both edges. The `k = 1`
/// term is the `O(1/Omega)` correction `A0 f'(t_on) / Omega`.
pub fn general_edge_phase_bound<T: Real>(
    protocol: &ModulationProtocol<T>,
    derivative_bounds: &EdgeDerivatives<T>,
) -> T {
    let omega = protocol.drive_freq;
    let a0 = protocol.amplitude_ratio;
    let edge = |d: &[T]| -> T {
        d.iter()
            .enumerate()
            .map(|(k, &dk)| dk.abs() / omega.powi(k as i32 + 1))
            .sum::<T>()
    };
    a0 * (edge(&derivative_bounds.rising) + edge(&derivative_bounds.falling))
}
