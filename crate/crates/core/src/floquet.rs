//! Extended-space Floquet analysis of the modulated Jaynes-Cummings coupling.
//!
//! In the interaction picture with respect to the cavity detuning the
//! single-excitation problem becomes a time-independent matrix on
//! `{|0,e>, |1,g>} x {|-N>, ..., |N>}`: sector `m` sits at `m * Omega` and the
//! two physical states of sectors `m`, `m'` are coupled by `g J_{m-m'}(A/Omega)`.
//! All couplings are real, so the matrix is real symmetric.

use nalgebra::{DMatrix, RealField, SymmetricEigen};

use crate::error::{Error, Result};
use crate::modulation::{ModulationProtocol, Scheme};
use crate::scalar::{lit, Real};
use crate::special::bessel_j;

/// Largest argument accepted by [`fourier_coeff`].
pub const MAX_BESSEL_ARG: f64 = 12.0;
/// Largest order accepted by [`fourier_coeff`].
pub const MAX_BESSEL_ORDER: i32 = 20;
/// Default number of Floquet sectors on each side of the central one.
pub const DEFAULT_HALF_WIDTH: usize = 8;
/// Truncated coefficients below this magnitude are considered negligible.
pub const TRUNCATION_THRESHOLD: f64 = 1e-14;

/// Fourier coefficient `c_n = J_n(beta)` of `exp(i beta sin(Omega t))`.
///
/// Restricted to `|beta| <= 12` and `|n| <= 20`, where the power series is
/// accurate to better than `1e-12` in `f64`.
pub fn fourier_coeff<T: Real>(n: i32, beta: T) -> Result<T> {
    if !(beta.abs() <= lit(MAX_BESSEL_ARG)) {
        return Err(Error::OutOfRange(format!("|beta| = {} > {MAX_BESSEL_ARG}", beta.abs())));
    }
    if n.abs() > MAX_BESSEL_ORDER {
        return Err(Error::OutOfRange(format!("|n| = {} > {MAX_BESSEL_ORDER}", n.abs())));
    }
    Ok(bessel_j(n, beta))
}

/// Bessel-renormalised coupling `g J_0(A / Omega)`.
pub fn effective_coupling<T: Real>(amplitude: T, drive_freq: T, g: T) -> T {
    g * bessel_j(0, amplitude / drive_freq)
}

/// Bisection for a sign change of `J_0` in `[lo, hi]`, run until the bracket
/// stops shrinking.
pub fn bessel_j0_root_in<T: Real>(lo: T, hi: T) -> Result<T> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = bessel_j::<T>(0, a);
    let fb = bessel_j::<T>(0, b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParameter(format!("J0 does not change sign on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let m = (a + b) * lit(0.5);
        if m <= a || m >= b {
            break;
        }
        let fm = bessel_j::<T>(0, m);
        if fm == T::zero() {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    // pick the endpoint with the smaller residual
    let (ra, rb) = (bessel_j::<T>(0, a).abs(), bessel_j::<T>(0, b).abs());
    Ok(if ra <= rb { a } else { b })
}

/// Plateau amplitude `A*` satisfying the CDT condition `J_0(A*/Omega) = 0`
/// at the first root of `J_0`.
pub fn find_cdt_amplitude<T: Real>(drive_freq: T) -> T {
    let x0 = bessel_j0_root_in(lit::<T>(2.0), lit::<T>(3.0))
        .expect("J0 changes sign on [2, 3]");
    x0 * drive_freq
}

/// Truncated extended-space Floquet Hamiltonian.
#[derive(Debug, Clone)]
pub struct FloquetMatrix<T: Real> {
    /// `N`: sectors run from `-N` to `N`.
    pub half_width: usize,
    pub drive_freq: T,
    pub coupling: T,
    pub amplitude: T,
    /// Real symmetric matrix of dimension `2 (2N + 1)`.
    pub matrix: DMatrix<T>,
    /// Largest dropped coefficient `|J_{2N+1}(A/Omega)|`.
    pub truncation_residual: T,
}

impl<T: Real> FloquetMatrix<T> {
    pub fn n_sectors(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.n_sectors()
    }

    /// True when dropped Fourier coefficients exceed [`TRUNCATION_THRESHOLD`].
    pub fn is_truncated(&self) -> bool {
        self.truncation_residual > lit(TRUNCATION_THRESHOLD)
    }

    /// Row of physical state `s` (0 = `|0,e>`, 1 = `|1,g>`) in sector `m`.
    pub fn index(&self, s: usize, m: i64) -> usize {
        sector_index(self.half_width, s, m)
    }
}

fn sector_index(half_width: usize, s: usize, m: i64) -> usize {
    2 * (m + half_width as i64) as usize + s
}

/// Builds the interaction-picture Floquet matrix for `omega(t) = -A cos(Omega t)`.
pub fn build_floquet_hamiltonian<T: Real>(
    amplitude: T,
    drive_freq: T,
    g: T,
    half_width: usize,
) -> Result<FloquetMatrix<T>> {
    if half_width < 1 {
        return Err(Error::InvalidParameter("Floquet truncation needs N >= 1".into()));
    }
    if !(drive_freq > T::zero()) {
        return Err(Error::InvalidParameter(format!("drive frequency {drive_freq} must be positive")));
    }
    let beta = amplitude / drive_freq;
    if !(beta.abs() <= lit(MAX_BESSEL_ARG)) {
        return Err(Error::OutOfRange(format!("A/Omega = {beta} > {MAX_BESSEL_ARG}")));
    }
    let n = half_width as i64;
    let dim = 2 * (2 * half_width + 1);
    let coeffs: Vec<T> = (-2 * n..=2 * n).map(|k| bessel_j(k as i32, beta)).collect();
    let c = |k: i64| coeffs[(k + 2 * n) as usize];
    let mut h = DMatrix::<T>::zeros(dim, dim);
    for m in -n..=n {
        let e = sector_index(half_width, 0, m);
        let a = sector_index(half_width, 1, m);
        let level = lit::<T>(m as f64) * drive_freq;
        h[(e, e)] = level;
        h[(a, a)] = level;
        for mp in -n..=n {
            let ap = sector_index(half_width, 1, mp);
            let v = g * c(m - mp);
            h[(e, ap)] = v;
            h[(ap, e)] = v;
        }
    }
    let truncation_residual = bessel_j::<T>(2 * half_width as i32 + 1, beta).abs();
    Ok(FloquetMatrix {
        half_width,
        drive_freq,
        coupling: g,
        amplitude,
        matrix: h,
        truncation_residual,
    })
}

/// Quasi-energies connected to the unmodulated `+g` and `-g` levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiEnergyPair<T> {
    pub eps_plus: T,
    pub eps_minus: T,
}

impl<T: Real> QuasiEnergyPair<T> {
    pub fn splitting(&self) -> T {
        (self.eps_plus - self.eps_minus).abs()
    }
}

/// Folds `e` into the first Brillouin zone `[-Omega/2, Omega/2)`.
pub fn fold_quasi_energy<T: Real>(e: T, drive_freq: T) -> T {
    let half = drive_freq * lit(0.5);
    let mut f = e - drive_freq * ((e + half) / drive_freq).floor();
    if f >= half {
        f -= drive_freq;
    }
    if f < -half {
        f += drive_freq;
    }
    f
}

/// Eigenvalues and column eigenvectors of a symmetric matrix.
pub(crate) fn symmetric_eigen<T>(m: &DMatrix<T>) -> Result<(Vec<T>, DMatrix<T>)>
where
    T: Real + RealField,
{
    let dim = m.nrows();
    let eps = <T as num_traits::Float>::epsilon() * lit::<T>(16.0);
    let eig = SymmetricEigen::try_new(m.clone(), eps, 10_000).ok_or(Error::Eigensolver { dim })?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// Diagonalises `fm` and returns the tracked pair of folded quasi-energies.
///
/// Eigenvectors are matched to the central-sector states
/// `(|0,e,0> +- |1,g,0>) / sqrt(2)`; near degeneracy (`|eps+ - eps-| < 1e-6 g`)
/// the labels are fixed by `eps_plus >= eps_minus`.
pub fn quasi_energies<T>(fm: &FloquetMatrix<T>) -> Result<QuasiEnergyPair<T>>
where
    T: Real + RealField,
{
    let (values, vectors) = symmetric_eigen(&fm.matrix)?;
    Ok(select_pair(fm, &values, &vectors))
}

fn select_pair<T: Real>(fm: &FloquetMatrix<T>, values: &[T], vectors: &DMatrix<T>) -> QuasiEnergyPair<T> {
    let e0 = fm.index(0, 0);
    let a0 = fm.index(1, 0);
    let half = lit::<T>(0.5);
    let overlap = |j: usize, sign: T| {
        let s = vectors[(e0, j)] + sign * vectors[(a0, j)];
        s * s * half
    };
    let argmax = |sign: T, skip: Option<usize>| {
        (0..values.len())
            .filter(|&j| Some(j) != skip)
            .max_by(|&i, &j| overlap(i, sign).partial_cmp(&overlap(j, sign)).expect("finite overlap"))
            .expect("non-empty spectrum")
    };
    let jp = argmax(T::one(), None);
    let jm = argmax(-T::one(), Some(jp));
    let mut eps_plus = fold_quasi_energy(values[jp], fm.drive_freq);
    let mut eps_minus = fold_quasi_energy(values[jm], fm.drive_freq);
    if (eps_plus - eps_minus).abs() < lit::<T>(1e-6) * fm.coupling.abs() && eps_plus < eps_minus {
        std::mem::swap(&mut eps_plus, &mut eps_minus);
    }
    QuasiEnergyPair { eps_plus, eps_minus }
}

/// Quasi-energies with automatic truncation escalation: `N` is doubled until
/// both levels move by less than `tol * g`. Returns the pair and the final `N`.
pub fn converged_quasi_energies<T>(
    amplitude: T,
    drive_freq: T,
    g: T,
    start_half_width: usize,
    tol: T,
) -> Result<(QuasiEnergyPair<T>, usize)>
where
    T: Real + RealField,
{
    let mut n = start_half_width.max(1);
    let mut prev = quasi_energies(&build_floquet_hamiltonian(amplitude, drive_freq, g, n)?)?;
    loop {
        let next_n = n * 2;
        let next = quasi_energies(&build_floquet_hamiltonian(amplitude, drive_freq, g, next_n)?)?;
        if level_shift(&prev, &next) < tol * num_traits::Float::abs(g) {
            return Ok((prev, n));
        }
        if next_n >= 64 {
            return Ok((next, next_n));
        }
        prev = next;
        n = next_n;
    }
}

fn level_shift<T: Real>(a: &QuasiEnergyPair<T>, b: &QuasiEnergyPair<T>) -> T {
    (a.eps_plus - b.eps_plus).abs().max((a.eps_minus - b.eps_minus).abs())
}

/// Leading-order Magnus rotation angle `integral_{t_a}^{t_b} g J_0(A(t)/Omega) dt`.
///
/// Composite Simpson with at least 64 points per drive period.
pub fn magnus_rotation_angle<T: Real>(
    protocol: &ModulationProtocol<T>,
    g: T,
    t_a: T,
    t_b: T,
) -> Result<T> {
    if protocol.scheme != Scheme::FloquetCosine {
        return Err(Error::WrongScheme { expected: "floquet_cosine" });
    }
    if t_b < t_a {
        return Err(Error::InvalidParameter(format!("t_b = {t_b} precedes t_a = {t_a}")));
    }
    if t_b == t_a {
        return Ok(T::zero());
    }
    let omega = protocol.drive_freq;
    let f = |t: T| g * bessel_j(0, protocol.envelope(t) / omega);
    let target = protocol.period() / lit(64.0);
    let mut n = ((t_b - t_a) / target).ceil().to_usize().unwrap_or(2).max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = (t_b - t_a) / lit(n as f64);
    let mut acc = f(t_a) + f(t_b);
    for i in 1..n {
        let w = if i % 2 == 1 { lit::<T>(4.0) } else { lit::<T>(2.0) };
        acc += w * f(t_a + h * lit(i as f64));
    }
    Ok(acc * h / lit(3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::SwitchWindow;
    use std::f64::consts::TAU;

    const OMEGA: f64 = TAU * 50.0;
    const G: f64 = TAU * 8.0;

    #[test]
    fn fourier_coeff_values_and_range() {
        assert_eq!(fourier_coeff(0, 0.0f64).unwrap(), 1.0);
        assert_eq!(fourier_coeff(1, 0.0f64).unwrap(), 0.0);
        assert!(fourier_coeff(0, 2.404826f64).unwrap().abs() < 1e-6);
        assert!(fourier_coeff(0, 12.5f64).is_err());
        assert!(fourier_coeff(21, 1.0f64).is_err());
        assert!(fourier_coeff(-20, 11.9f64).is_ok());
    }

    #[test]
    fn effective_coupling_values() {
        assert_eq!(effective_coupling(0.0, OMEGA, G), G);
        assert!(effective_coupling(2.404826 * OMEGA, OMEGA, G).abs() < 1e-6 * G);
        assert!((effective_coupling(OMEGA, OMEGA, G) / G - 0.765198).abs() < 1e-6);
    }

    #[test]
    fn cdt_amplitude() {
        let a = find_cdt_amplitude(OMEGA);
        assert!((a / OMEGA - 2.4048).abs() < 1e-4);
        assert!(bessel_j(0, a / OMEGA).abs() < 1e-10);
        let a2 = find_cdt_amplitude(2.0 * OMEGA);
        assert!((a2 - 2.0 * a).abs() < 1e-12 * a2);
        let r1 = bessel_j0_root_in(2.0f64, 3.0).unwrap();
        let r2 = bessel_j0_root_in(2.2f64, 2.9).unwrap();
        let r3 = bessel_j0_root_in(2.01f64, 2.41).unwrap();
        assert!((r1 - r2).abs() <= 1e-12 * r1 && (r1 - r3).abs() <= 1e-12 * r1);
    }

    #[test]
    fn jacobi_anger_closure() {
        for &beta in &[0.0, 0.5, 2.4048, 4.0] {
            let s: f64 = (-16..=16).map(|n| bessel_j::<f64>(n, beta).powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-10, "beta {beta}: {s}");
        }
    }

    #[test]
    fn unmodulated_matrix_spectrum() {
        let fm = build_floquet_hamiltonian(0.0, OMEGA, G, 3).unwrap();
        assert_eq!(fm.dim(), 14);
        assert_eq!(fm.matrix, fm.matrix.transpose());
        let (mut vals, _) = symmetric_eigen(&fm.matrix).unwrap();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<f64> = (-3..=3)
            .flat_map(|m| [m as f64 * OMEGA - G, m as f64 * OMEGA + G])
            .collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, w) in vals.iter().zip(&want) {
            assert!((v - w).abs() < 1e-9);
        }
        let q = quasi_energies(&fm).unwrap();
        assert!((q.eps_plus - G).abs() < 1e-9 && (q.eps_minus + G).abs() < 1e-9);
    }

    #[test]
    fn truncation_flag() {
        let fm = build_floquet_hamiltonian(4.0 * OMEGA, OMEGA, G, 8).unwrap();
        assert!(fm.is_truncated());
        let fm = build_floquet_hamiltonian(1.0 * OMEGA, OMEGA, G, 8).unwrap();
        assert!(!fm.is_truncated());
        assert!(build_floquet_hamiltonian(13.0 * OMEGA, OMEGA, G, 8).is_err());
        assert!(build_floquet_hamiltonian(1.0, OMEGA, G, 0).is_err());
    }

    #[test]
    fn folding_stays_in_zone() {
        for k in -30..30 {
            let e = k as f64 * 37.3 + 0.1;
            let f = fold_quasi_energy(e, OMEGA);
            assert!((-OMEGA / 2.0..OMEGA / 2.0).contains(&f));
            let m = (e - f) / OMEGA;
            assert!((m - m.round()).abs() < 1e-9);
        }
        assert_eq!(fold_quasi_energy(OMEGA / 2.0, OMEGA), -OMEGA / 2.0);
    }

    // Reference splittings from one-period propagators integrated directly in
    // the lab frame (independent of the extended-space matrix).
    #[test]
    fn splitting_matches_direct_propagation() {
        for &(x, want) in &[(1.0, 1.493_386_221_855), (2.0, 0.404_910_966_485), (2.4048, 0.030_333_275_386), (3.9, 0.801_417_805_575)] {
            let fm = build_floquet_hamiltonian(x * OMEGA, OMEGA, G, 8).unwrap();
            let q = quasi_energies(&fm).unwrap();
            assert!((q.splitting() / G - want).abs() < 1e-8, "x {x}: {}", q.splitting() / G);
        }
    }

    #[test]
    fn tracked_levels_cross_near_cdt() {
        let signed = |x: f64| {
            let q = quasi_energies(&build_floquet_hamiltonian(x * OMEGA, OMEGA, G, 8).unwrap()).unwrap();
            q.eps_plus - q.eps_minus
        };
        assert!(signed(2.30) > 0.0 && signed(2.45) < 0.0);
        assert!(signed(2.37) > 0.0 && signed(2.38) < 0.0);
    }

    #[test]
    fn truncation_convergence() {
        for &x in &[0.5, 1.5, 2.4048, 3.5] {
            let a = build_floquet_hamiltonian(x * OMEGA, OMEGA, G, 8).unwrap();
            let b = build_floquet_hamiltonian(x * OMEGA, OMEGA, G, 12).unwrap();
            let (qa, qb) = (quasi_energies(&a).unwrap(), quasi_energies(&b).unwrap());
            assert!((qa.eps_plus - qb.eps_plus).abs() < 1e-3 * G);
            assert!((qa.eps_minus - qb.eps_minus).abs() < 1e-3 * G);
        }
        let (_, n) = converged_quasi_energies(1.0 * OMEGA, OMEGA, G, 2, 1e-3).unwrap();
        assert!(n >= 2);
    }

    #[test]
    fn magnus_angle_limits() {
        let flat = ModulationProtocol::unmodulated(OMEGA);
        let theta = magnus_rotation_angle(&flat, G, 0.0, 0.3).unwrap();
        assert!((theta - G * 0.3).abs() < 1e-12);
        let a0 = find_cdt_amplitude(1.0f64);
        let w = SwitchWindow::new(0.2, 0.4, 0.02).unwrap();
        let p = ModulationProtocol::new(a0, OMEGA, vec![w], Scheme::FloquetCosine).unwrap();
        let plateau = magnus_rotation_angle(&p, G, 0.2, 0.4).unwrap();
        assert!(plateau.abs() < 1e-3 * G * 0.2);
        let mut s = p.clone();
        s.scheme = Scheme::StaticDetuningAbrupt;
        assert!(magnus_rotation_angle(&s, G, 0.0, 1.0).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let a = find_cdt_amplitude(1.0f32);
        assert!((a - 2.404_825_6).abs() < 1e-5);
        let fm = build_floquet_hamiltonian(0.0f32, 10.0, 1.0, 2).unwrap();
        let q = quasi_energies(&fm).unwrap();
        assert!((q.eps_plus - 1.0).abs() < 1e-5);
    }
}
