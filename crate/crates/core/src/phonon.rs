//! Phonon bath of the polaron transformation.
//!
//! Inputs use meV, ps and K. Internally frequencies are angular in rad/ps:
//!
//! | quantity              | value                 |
//! |-----------------------|-----------------------|
//! | 1 meV / hbar          | 1.519267 rad/ps       |
//! | k_B                   | 0.0861733 meV/K       |
//!
//! The spectral density is `J(w) = alpha_p w^3 exp(-w^2 / (2 w_b^2))`.

use crate::error::{Error, Result};
use crate::quad::{AdaptiveQuad, Tolerance};
use crate::scalar::{lit, Cplx, Real};

/// Angular frequency of 1 meV, in rad/ps.
pub const MEV_TO_RAD_PER_PS: f64 = 1.519267;
/// Boltzmann constant in meV/K.
pub const K_B_MEV_PER_K: f64 = 0.0861733;
/// Upper quadrature cutoff in units of `w_b`.
pub const CUTOFF_MULTIPLE: f64 = 12.0;
/// Tail fraction of `|phi(0)|` that must be reached inside the tau table.
pub const DECAY_FRACTION: f64 = 1e-4;
/// Default tabulation step (ps) and minimum extent (ps).
pub const DEFAULT_TAU_STEP: f64 = 0.01;
pub const DEFAULT_TAU_MAX: f64 = 10.0;

pub fn mev_to_rad_per_ps<T: Real>(e: T) -> T {
    e * lit(MEV_TO_RAD_PER_PS)
}

pub fn rad_per_ps_to_mev<T: Real>(w: T) -> T {
    w / lit(MEV_TO_RAD_PER_PS)
}

pub fn kelvin_to_mev<T: Real>(t: T) -> T {
    t * lit(K_B_MEV_PER_K)
}

pub fn mev_to_kelvin<T: Real>(e: T) -> T {
    e / lit(K_B_MEV_PER_K)
}

/// Bath parameters in user units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononParams<T> {
    /// Coupling strength in ps^2.
    pub alpha_p: T,
    /// Cutoff in meV.
    pub omega_b: T,
    /// Temperature in K.
    pub temperature: T,
}

impl<T: Real> PhononParams<T> {
    pub fn new(alpha_p: T, omega_b: T, temperature: T) -> Result<Self> {
        let p = Self { alpha_p, omega_b, temperature };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_p >= T::zero()) || !self.alpha_p.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha_p = {} must be >= 0", self.alpha_p)));
        }
        if !(self.omega_b > T::zero()) || !self.omega_b.is_finite() {
            return Err(Error::InvalidParameter(format!("omega_b = {} must be > 0", self.omega_b)));
        }
        if !(self.temperature >= T::zero()) || !self.temperature.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "temperature = {} must be >= 0",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Cutoff in rad/ps.
    pub fn omega_b_rad(&self) -> T {
        mev_to_rad_per_ps(self.omega_b)
    }

    /// `hbar / (k_B T)` in ps, `None` at zero temperature.
    pub fn beta_ps(&self) -> Option<T> {
        (self.temperature > T::zero())
            .then(|| T::one() / mev_to_rad_per_ps(kelvin_to_mev(self.temperature)))
    }

    /// `J(w) / w^2` with `w` in rad/ps.
    fn weight(&self, w: T) -> T {
        let wb = self.omega_b_rad();
        self.alpha_p * w * (-(w * w) / (lit::<T>(2.0) * wb * wb)).exp()
    }

    /// `J(w) coth(beta w / 2) / w^2`, regular at `w = 0`.
    fn thermal_weight(&self, w: T) -> T {
        match self.beta_ps() {
            None => self.weight(w),
            Some(beta) => {
                let x = beta * w * lit(0.5);
                let wb = self.omega_b_rad();
                let gauss = (-(w * w) / (lit::<T>(2.0) * wb * wb)).exp();
                // w coth(x) -> 2 / beta as w -> 0
                let w_coth = if x.abs() < lit(1e-8) { lit::<T>(2.0) / beta } else { w / x.tanh() };
                self.alpha_p * w_coth * gauss
            }
        }
    }
}

/// `J(w)` in 1/ps for `w` given in meV.
pub fn spectral_density<T: Real>(pp: &PhononParams<T>, omega_mev: T) -> T {
    let w = mev_to_rad_per_ps(omega_mev);
    let wb = pp.omega_b_rad();
    pp.alpha_p * w * w * w * (-(w * w) / (lit::<T>(2.0) * wb * wb)).exp()
}

fn tolerance<T: Real>(scale: T) -> Tolerance<T> {
    Tolerance { abs: scale * lit(1e-14), rel: lit(1e-11) }
}

/// `integral_0^{12 w_b} J(w)/w^2 coth(beta w/2) dw`, which equals `phi(0)`.
fn thermal_integral<T: Real>(pp: &PhononParams<T>, cutoff_multiple: T) -> Result<T> {
    if pp.alpha_p == T::zero() {
        return Ok(T::zero());
    }
    let wb = pp.omega_b_rad();
    let scale = pp.alpha_p * wb * wb;
    AdaptiveQuad::new().integrate(|w| pp.thermal_weight(w), T::zero(), cutoff_multiple * wb, 8, tolerance(scale))
}

/// Thermal displacement `<B> = exp(-1/2 integral J/w^2 coth(beta w/2))`.
pub fn displacement_expectation<T: Real>(pp: &PhononParams<T>) -> Result<T> {
    pp.validate()?;
    Ok((-thermal_integral(pp, lit(CUTOFF_MULTIPLE))? * lit(0.5)).exp())
}

/// `phi(tau) = integral J/w^2 [coth(beta w/2) cos(w tau) - i sin(w tau)] dw`, `tau` in ps.
pub fn phonon_correlation<T: Real>(pp: &PhononParams<T>, tau: T) -> Result<Cplx<T>> {
    pp.validate()?;
    phonon_correlation_with_cutoff(pp, tau, lit(CUTOFF_MULTIPLE))
}

fn phonon_correlation_with_cutoff<T: Real>(pp: &PhononParams<T>, tau: T, multiple: T) -> Result<Cplx<T>> {
    if pp.alpha_p == T::zero() {
        return Ok(Cplx::new(T::zero(), T::zero()));
    }
    let wb = pp.omega_b_rad();
    let upper = multiple * wb;
    // a panel per quarter period of cos(w tau)
    let quarters = (upper * tau.abs() / (T::FRAC_PI_2())).ceil().to_usize().unwrap_or(0);
    let panels = (quarters + 8).min(1 << 16);
    let scale = pp.alpha_p * wb * wb;
    AdaptiveQuad::new().integrate(
        |w: T| {
            let (s, c) = (w * tau).sin_cos();
            Cplx::new(pp.thermal_weight(w) * c, -pp.weight(w) * s)
        },
        T::zero(),
        upper,
        panels,
        tolerance(scale),
    )
}

/// Tabulated bath correlation functions on a uniform tau grid (ps).
#[derive(Debug, Clone)]
pub struct BathCorrelations<T> {
    pub tau_grid: Vec<T>,
    pub phi_tab: Vec<Cplx<T>>,
    pub g_g_tab: Vec<Cplx<T>>,
    pub g_e_tab: Vec<Cplx<T>>,
    pub b_avg: T,
}

impl<T: Real> BathCorrelations<T> {
    /// Bath with no phonon coupling: `<B> = 1`, all correlators zero.
    pub fn vanishing(tau_max: T, step: T) -> Self {
        let n = (tau_max / step).round().to_usize().unwrap_or(0);
        let zero = Cplx::new(T::zero(), T::zero());
        Self {
            tau_grid: (0..=n).map(|i| step * lit(i as f64)).collect(),
            phi_tab: vec![zero; n + 1],
            g_g_tab: vec![zero; n + 1],
            g_e_tab: vec![zero; n + 1],
            b_avg: T::one(),
        }
    }

    pub fn tau_step(&self) -> T {
        self.tau_grid[1] - self.tau_grid[0]
    }

    pub fn tau_max(&self) -> T {
        *self.tau_grid.last().expect("non-empty table")
    }

    pub fn is_vanishing(&self) -> bool {
        self.g_g_tab.iter().chain(&self.g_e_tab).all(|z| z.norm_sqr() == T::zero())
    }

    fn lerp(&self, tab: &[Cplx<T>], tau: T) -> Cplx<T> {
        let a = tau.abs();
        let h = self.tau_step();
        let x = a / h;
        let i = x.floor().to_usize().unwrap_or(0);
        let n = tab.len();
        let v = if i + 1 >= n {
            if a <= self.tau_max() * lit(1.0 + 1e-12) { tab[n - 1] } else { Cplx::new(T::zero(), T::zero()) }
        } else {
            let s = x - lit(i as f64);
            tab[i] * (T::one() - s) + tab[i + 1] * s
        };
        if tau < T::zero() { v.conj() } else { v }
    }

    /// `(G_g(tau), G_e(tau))` by linear interpolation; zero beyond the table,
    /// complex conjugate for negative `tau`.
    pub fn correlators(&self, tau: T) -> (Cplx<T>, Cplx<T>) {
        (self.lerp(&self.g_g_tab, tau), self.lerp(&self.g_e_tab, tau))
    }

    pub fn phi(&self, tau: T) -> Cplx<T> {
        self.lerp(&self.phi_tab, tau)
    }

    /// Smallest tabulated tau after which `|phi|` stays below `fraction * |phi(0)|`.
    pub fn decay_time(&self, fraction: T) -> Option<T> {
        let p0 = self.phi_tab[0].norm();
        if p0 == T::zero() {
            return Some(T::zero());
        }
        let limit = fraction * p0;
        let last_above = self.phi_tab.iter().rposition(|z| z.norm() >= limit)?;
        (last_above + 1 < self.tau_grid.len()).then(|| self.tau_grid[last_above + 1])
    }

    /// Phonon correlation time: first tau where `|phi|` drops below `|phi(0)| / e`.
    pub fn correlation_time(&self) -> T {
        let p0 = self.phi_tab[0].norm();
        let limit = p0 / T::E();
        self.tau_grid
            .iter()
            .zip(&self.phi_tab)
            .find(|(_, z)| z.norm() < limit)
            .map(|(&t, _)| t)
            .unwrap_or_else(|| self.tau_max())
    }
}

/// Tabulates `phi`, `G_g`, `G_e` on a uniform grid starting at zero.
///
/// Fails when `|phi|` has not fallen below `1e-4 |phi(0)|` by the end of the grid.
pub fn bath_correlators<T: Real>(pp: &PhononParams<T>, tau_grid: &[T]) -> Result<BathCorrelations<T>> {
    pp.validate()?;
    check_tau_grid(tau_grid)?;
    let b_avg = displacement_expectation(pp)?;
    let b2 = b_avg * b_avg;
    let mut phi_tab = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        phi_tab.push(phonon_correlation_with_cutoff(pp, tau, lit(CUTOFF_MULTIPLE))?);
    }
    let g_g_tab = phi_tab.iter().map(|&p| (p.cosh() - T::one()) * b2).collect();
    let g_e_tab = phi_tab.iter().map(|&p| p.sinh() * b2).collect();
    let bath = BathCorrelations { tau_grid: tau_grid.to_vec(), phi_tab, g_g_tab, g_e_tab, b_avg };
    if bath.decay_time(lit(DECAY_FRACTION)).is_none() {
        return Err(Error::InvalidParameter(format!(
            "tau grid ending at {} ps is shorter than the bath correlation decay",
            bath.tau_max()
        )));
    }
    Ok(bath)
}

fn check_tau_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.len() < 2 || grid[0] != T::zero() {
        return Err(Error::InvalidParameter("tau grid must start at 0 with at least two points".into()));
    }
    let h = grid[1] - grid[0];
    for (i, w) in grid.windows(2).enumerate() {
        let d = w[1] - w[0];
        if !(d > T::zero()) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }
        if (d - h).abs() > h * lit(1e-9) {
            return Err(Error::InvalidParameter("tau grid must be uniform".into()));
        }
    }
    Ok(())
}

/// Uniform grid `0, step, ..., tau_max`.
pub fn tau_grid<T: Real>(tau_max: T, step: T) -> Vec<T> {
    let n = (tau_max / step).round().to_usize().unwrap_or(1).max(1);
    (0..=n).map(|i| step * lit(i as f64)).collect()
}

/// Tabulates on the default 0.01 ps grid, starting at 10 ps and doubling the
/// extent (up to 640 ps) until the decay requirement is met. Zero-temperature
/// correlations decay only as `tau^-2` and typically need ~70 ps.
pub fn bath_correlators_auto<T: Real>(pp: &PhononParams<T>) -> Result<BathCorrelations<T>> {
    let step = lit::<T>(DEFAULT_TAU_STEP);
    let mut tau_max = lit::<T>(DEFAULT_TAU_MAX);
    loop {
        match bath_correlators(pp, &tau_grid(tau_max, step)) {
            Err(Error::InvalidParameter(_)) if tau_max < lit(640.0) => tau_max = tau_max * lit(2.0),
            other => return other,
        }
    }
}
