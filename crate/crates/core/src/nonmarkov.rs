//! Polaron master equation with a Born-level memory kernel.
//!
//! Basis: `|1> = |0,e>`, `|2> = |1,g>`, `|3> = |g,0>` (zero-based indices
//! 0, 1, 2 in code). Times are in ns, except bath lags which the phonon
//! tables expect in ps. Decay rates enter the dissipator as plain 1/ns.
//!
//! The memory integral uses `U(t, t') = U(t) U(t')^dag` with `U(t) = U_S(t, 0)`,
//! so that
//!
//! `int G(t-t') [X, U(t,t') X rho(t') U(t,t')^dag] dt'
//!     = [X, U(t) (int G(t-t') U(t')^dag X rho(t') U(t') dt') U(t)^dag]`
//!
//! and only `U(t')^dag X rho(t') U(t')` needs to be kept in the history.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mat3::Mat3;
use crate::modulation::{check_grid, interior, phase_increment, ModulationProtocol};
use crate::ode::{rk4_step, OdeState};
use crate::phonon::{BathCorrelations, DECAY_FRACTION};
use crate::scalar::{lit, tolerance, Cplx, Real};
use crate::dynamics::SystemParams;

/// ns per ps.
const NS_PER_PS: f64 = 1e-3;
/// RK4 substeps satisfy `lambda_max * h <= SUBSTEP_PHASE`.
pub const SUBSTEP_PHASE: f64 = 0.015;
pub const POSITIVITY_FLOOR: f64 = -1e-4;
pub const TRACE_DRIFT_LIMIT: f64 = 1e-5;
pub const HERMITICITY_LIMIT: f64 = 1e-8;
pub const UNITARITY_LIMIT: f64 = 1e-8;
/// Default memory cutoff in ps.
pub const DEFAULT_MEMORY_CUTOFF_PS: f64 = 5.0;
/// Default history spacing in ns (0.05 ps).
pub const DEFAULT_HISTORY_STEP_NS: f64 = 5e-5;

/// Three-level density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix<T>(pub Mat3<T>);

impl<T: Real> DensityMatrix<T> {
    /// `|i><i|` (zero-based).
    pub fn basis(i: usize) -> Self {
        Self(Mat3::unit(i, i))
    }

    /// Projector onto `c_e |0,e> + c_a |1,g>`.
    pub fn from_pure(c_e: Cplx<T>, c_a: Cplx<T>) -> Self {
        let v = [c_e, c_a, Cplx::new(T::zero(), T::zero())];
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = v[i] * v[j].conj();
            }
        }
        Self(m)
    }

    pub fn trace(&self) -> T {
        self.0.trace().re
    }

    /// `<0,e|rho|0,e>`
    pub fn excited_population(&self) -> T {
        self.0.get(0, 0).re
    }

    /// `<1,g|rho|1,g>`
    pub fn cavity_population(&self) -> T {
        self.0.get(1, 1).re
    }

    pub fn ground_population(&self) -> T {
        self.0.get(2, 2).re
    }

    /// `rho_21 = <1,g|rho|0,e>`.
    pub fn rho21(&self) -> Cplx<T> {
        self.0.get(1, 0)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.0.hermitian_eigenvalues()[0]
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.0.hermiticity_defect();
        if !(h <= lit(1e-9)) {
            return Err(Error::Hermiticity { t: 0.0, defect: h.to_f64_lossy() });
        }
        let d = (self.trace() - T::one()).abs();
        if !(d <= lit(1e-8)) {
            return Err(Error::TraceDrift { t: 0.0, drift: d.to_f64_lossy() });
        }
        let e = self.min_eigenvalue();
        if !(e >= lit(POSITIVITY_FLOOR)) {
            return Err(Error::Positivity { t: 0.0, min_eigenvalue: e.to_f64_lossy() });
        }
        Ok(())
    }
}

/// System propagator `U_S(t, t')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator<T>(pub Mat3<T>);

impl<T: Real> Propagator<T> {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Element `u_ij` with one-based indices as in the basis labels.
    pub fn element(&self, i: usize, j: usize) -> Cplx<T> {
        self.0.get(i - 1, j - 1)
    }

    pub fn unitarity_defect(&self) -> T {
        self.0.unitarity_defect()
    }
}

/// Truncation of the memory integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig<T> {
    /// Largest lag kept, in ps.
    pub memory_cutoff: T,
    /// Spacing of stored history, in ns.
    pub history_step: T,
}

impl<T: Real> Default for KernelConfig<T> {
    fn default() -> Self {
        Self {
            memory_cutoff: lit(DEFAULT_MEMORY_CUTOFF_PS),
            history_step: lit(DEFAULT_HISTORY_STEP_NS),
        }
    }
}

impl<T: Real> KernelConfig<T> {
    /// Default spacing with the cutoff raised to the bath decay time when needed.
    pub fn for_bath(bath: &BathCorrelations<T>) -> Self {
        let decay = bath.decay_time(lit(DECAY_FRACTION)).unwrap_or_else(|| bath.tau_max());
        Self {
            memory_cutoff: decay.max(lit(DEFAULT_MEMORY_CUTOFF_PS)).min(bath.tau_max()),
            history_step: lit(DEFAULT_HISTORY_STEP_NS),
        }
    }

    pub fn validate(&self, bath: &BathCorrelations<T>) -> Result<()> {
        if !(self.memory_cutoff > T::zero()) || !(self.history_step > T::zero()) {
            return Err(Error::InvalidParameter("memory cutoff and history step must be positive".into()));
        }
        if bath.is_vanishing() {
            return Ok(());
        }
        let decay = bath
            .decay_time(lit(DECAY_FRACTION))
            .ok_or_else(|| Error::InvalidParameter("bath table does not resolve the correlation decay".into()))?;
        if self.memory_cutoff < decay * lit(1.0 - 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "memory cutoff {} ps is shorter than the bath decay time {} ps",
                self.memory_cutoff, decay
            )));
        }
        if self.memory_cutoff > bath.tau_max() * lit(1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "memory cutoff {} ps exceeds the tabulated range {} ps",
                self.memory_cutoff,
                bath.tau_max()
            )));
        }
        Ok(())
    }
}

/// Residual system-bath operators `X_g`, `X_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingOperators<T> {
    pub x_g: Mat3<T>,
    pub x_e: Mat3<T>,
}

/// `X_g = g (|2><1| + |1><2|)`, `X_e = i g (|1><2| - |2><1|)`.
pub fn coupling_operators<T: Real>(g: T) -> CouplingOperators<T> {
    let mut x_g = Mat3::zero();
    let mut x_e = Mat3::zero();
    let z = T::zero();
    x_g.0[0][1] = Cplx::new(g, z);
    x_g.0[1][0] = Cplx::new(g, z);
    x_e.0[0][1] = Cplx::new(z, g);
    x_e.0[1][0] = Cplx::new(z, -g);
    CouplingOperators { x_g, x_e }
}

/// `H_S(t) = omega(t) |2><2| + g <B> (|2><1| + |1><2|)`; polaron shift omitted.
pub fn polaron_system_generator<T: Real>(
    protocol: &ModulationProtocol<T>,
    params: &SystemParams<T>,
    b_avg: T,
    t: T,
) -> Mat3<T> {
    hamiltonian(protocol.omega(t), params.g * b_avg)
}

fn hamiltonian<T: Real>(omega: T, coupling: T) -> Mat3<T> {
    let mut h = Mat3::zero();
    let z = T::zero();
    h.0[1][1] = Cplx::new(omega, z);
    h.0[0][1] = Cplx::new(coupling, z);
    h.0[1][0] = Cplx::new(coupling, z);
    h
}

/// `-i H M`
fn neg_i_mul<T: Real>(h: &Mat3<T>, m: &Mat3<T>) -> Mat3<T> {
    (*h * *m).scale(Cplx::new(T::zero(), -T::one()))
}

struct Clock<T: Real> {
    breakpoints: Vec<T>,
}

impl<T: Real> Clock<T> {
    fn new(protocol: &ModulationProtocol<T>) -> Self {
        Self { breakpoints: protocol.breakpoints() }
    }

    /// Splits `[a, b]` at breakpoints into pieces of at most `h_max`.
    fn pieces(&self, a: T, b: T, h_max: T) -> Vec<(T, T)> {
        let mut out = Vec::new();
        let mut lo = a;
        for &hi in interior(&self.breakpoints, a, b).iter().chain(std::iter::once(&b)) {
            let n = ((hi - lo) / h_max).ceil().to_usize().unwrap_or(1).max(1);
            let h = (hi - lo) / lit(n as f64);
            for k in 0..n {
                let s = lo + h * lit(k as f64);
                out.push((s, if k + 1 == n { hi } else { s + h }));
            }
            lo = hi;
        }
        out
    }
}

fn substep_limit<T: Real>(protocol: &ModulationProtocol<T>, coupling: T) -> T {
    lit::<T>(SUBSTEP_PHASE) / (coupling.abs() + protocol.peak_amplitude().abs()).max(T::min_positive_value())
}

/// Time-ordered `U_S(t_to, t_from)` of the polaron system Hamiltonian.
///
/// `step` is the requested RK4 step (at most a fortieth of the drive period
/// for modulated protocols); it is refined further when needed to keep the
/// result unitary to `1e-8`.
pub fn propagate_us<T: Real>(
    protocol: &ModulationProtocol<T>,
    params: &SystemParams<T>,
    b_avg: T,
    t_from: T,
    t_to: T,
    step: T,
) -> Result<Propagator<T>> {
    if t_to < t_from {
        return Err(Error::InvalidParameter(format!("t_to = {t_to} precedes t_from = {t_from}")));
    }
    if !(step > T::zero()) {
        return Err(Error::InvalidParameter("step must be positive".into()));
    }
    if protocol.is_modulated() && step > protocol.period() / lit(40.0) * (T::one() + tolerance::<T>(1e-9, 16.0)) {
        return Err(Error::StepTooLarge {
            step: step.to_f64_lossy(),
            max: (protocol.period() / lit(40.0)).to_f64_lossy(),
        });
    }
    if t_to == t_from {
        return Ok(Propagator::identity());
    }
    let coupling = params.g * b_avg;
    let h_max = step.min(substep_limit(protocol, coupling));
    let clock = Clock::new(protocol);
    let mut u = Mat3::identity();
    for (lo, hi) in clock.pieces(t_from, t_to, h_max) {
        let mut rhs = |t: T, m: &Mat3<T>| neg_i_mul(&hamiltonian(protocol.omega_within(t, lo, hi), coupling), m);
        u = rk4_step(&mut rhs, lo, hi - lo, &u);
    }
    let defect = u.unitarity_defect();
    if !(defect <= tolerance::<T>(UNITARITY_LIMIT, 1e4)) {
        return Err(Error::UnitarityDrift { drift: defect.to_f64_lossy() });
    }
    Ok(Propagator(u))
}

fn lag_ps<T: Real>(tau_ns: T) -> T {
    tau_ns / lit(NS_PER_PS)
}

/// Memory kernel `R(t, t')` acting on `rho(t')`:
///
/// `sum_u G_u(tau) [X_u, U X_u rho U^dag] + G_u(tau)^* [U rho X_u U^dag, X_u]`
///
/// with `U = U_S(t, t')` and `tau = t - t'` in ns. Valid for non-Hermitian
/// arguments as well.
pub fn nz_kernel<T: Real>(
    rho_prime: &Mat3<T>,
    us: &Propagator<T>,
    bath: &BathCorrelations<T>,
    ops: &CouplingOperators<T>,
    tau_ns: T,
) -> Mat3<T> {
    let (gg, ge) = bath.correlators(lag_ps(tau_ns));
    let u = us.0;
    let ud = u.adjoint();
    let mut out = Mat3::zero();
    for (x, g) in [(ops.x_g, gg), (ops.x_e, ge)] {
        let a = u * x * *rho_prime * ud;
        let b = u * *rho_prime * x * ud;
        out.add_scaled(g, &x.commutator(&a));
        out.add_scaled(g.conj(), &b.commutator(&x));
    }
    out
}

/// `<2| R(|2><1|) |1>`: the kernel's diagonal action on the coherence.
pub fn projected_kernel_element<T: Real>(
    us: &Propagator<T>,
    bath: &BathCorrelations<T>,
    ops: &CouplingOperators<T>,
    tau_ns: T,
) -> Cplx<T> {
    nz_kernel(&Mat3::unit(1, 0), us, bath, ops, tau_ns).get(1, 0)
}

/// Analytic dephasing coefficient `-2 g^2 (2 |u_21|^2 - 1) Re[G_g + G_e](t - t')`,
/// using `<B>^2 (e^phi - 1) = G_g + G_e`.
pub fn dephasing_coefficient<T: Real>(
    us: &Propagator<T>,
    bath: &BathCorrelations<T>,
    g: T,
    t: T,
    t_prime: T,
) -> T {
    let (gg, ge) = bath.correlators(lag_ps(t - t_prime));
    let u21 = us.element(2, 1).norm_sqr();
    -lit::<T>(2.0) * g * g * (lit::<T>(2.0) * u21 - T::one()) * (gg + ge).re
}

/// `kappa D[a] rho + gamma D[sigma] rho` with `a = |3><2|`, `sigma = |3><1|`.
pub fn lindblad<T: Real>(params: &SystemParams<T>, rho: &Mat3<T>) -> Mat3<T> {
    let mut out = Mat3::zero();
    for (rate, src) in [(params.kappa, 1usize), (params.gamma, 0usize)] {
        if rate == T::zero() {
            continue;
        }
        let p = rho.0[src][src];
        let r = Cplx::new(rate, T::zero());
        let half = r * lit::<T>(0.5);
        out.0[2][2] = out.0[2][2] + r * p;
        for j in 0..3 {
            out.0[src][j] = out.0[src][j] - half * rho.0[src][j];
            out.0[j][src] = out.0[j][src] - half * rho.0[j][src];
        }
    }
    out
}

/// How `rho(t')` enters the memory integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryMode {
    /// Full time-nonlocal kernel.
    #[default]
    NonMarkovian,
    /// `rho(t') -> rho(t)` inside the integral (propagators kept exact).
    MarkovSubstituted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NzOptions<T> {
    pub mode: MemoryMode,
    /// Upper bound on the internal RK4 step in ns.
    pub max_substep: Option<T>,
    /// `<B>` used in the system Hamiltonian; the bath value when `None`.
    /// The kernel always keeps the bath value.
    pub system_b_avg: Option<T>,
}

/// Sampled open-system evolution with run diagnostics.
#[derive(Debug, Clone)]
pub struct OpenTrajectory<T> {
    pub grid: Vec<T>,
    pub rho: Vec<DensityMatrix<T>>,
    /// Accumulated modulation phase `Phi(t)`.
    pub phase: Vec<T>,
    pub protocol: ModulationProtocol<T>,
    pub params: SystemParams<T>,
    pub b_avg: T,
    pub min_eigenvalue: T,
    pub max_trace_drift: T,
    pub max_hermiticity_defect: T,
    pub max_unitarity_defect: T,
    /// Internal RK4 step actually used, in ns.
    pub substep: T,
}

impl<T: Real> OpenTrajectory<T> {
    pub fn cavity_population(&self) -> Vec<T> {
        self.rho.iter().map(|r| r.cavity_population()).collect()
    }

    pub fn excited_population(&self) -> Vec<T> {
        self.rho.iter().map(|r| r.excited_population()).collect()
    }

    /// `C = e^{i Phi} <a^dag sigma> = e^{i Phi} rho_12` (no phase for static schemes).
    pub fn coherence(&self, i: usize) -> Cplx<T> {
        let c = self.rho[i].0.get(0, 1);
        if self.protocol.scheme.is_floquet() { c * Cplx::from_polar(T::one(), self.phase[i]) } else { c }
    }
}

#[derive(Clone, Copy)]
struct NzState<T> {
    rho: Mat3<T>,
    u: Mat3<T>,
}

impl<T: Real> OdeState<T> for NzState<T> {
    fn axpy(&self, a: T, other: &Self) -> Self {
        NzState { rho: self.rho.axpy(a, &other.rho), u: self.u.axpy(a, &other.u) }
    }
}

struct HistoryPoint<T> {
    t: T,
    u: Mat3<T>,
    m_g: Mat3<T>,
    m_e: Mat3<T>,
}

fn interaction_terms<T: Real>(ops: &CouplingOperators<T>, rho: &Mat3<T>, u: &Mat3<T>) -> (Mat3<T>, Mat3<T>) {
    let ud = u.adjoint();
    (ud * ops.x_g * *rho * *u, ud * ops.x_e * *rho * *u)
}

struct Memory<'a, T: Real> {
    bath: &'a BathCorrelations<T>,
    ops: CouplingOperators<T>,
    cutoff_ns: T,
    mode: MemoryMode,
    history: VecDeque<HistoryPoint<T>>,
}

impl<'a, T: Real> Memory<'a, T> {
    /// Memory term `Q + Q^dag` at stage time `t` with stage state `s`.
    fn term(&self, t: T, s: &NzState<T>) -> Mat3<T> {
        if self.bath.is_vanishing() {
            return Mat3::zero();
        }
        let (cur_g, cur_e) = interaction_terms(&self.ops, &s.rho, &s.u);
        let (g0g, g0e) = self.bath.correlators(T::zero());
        let first = self.history.partition_point(|p| t - p.t > self.cutoff_ns);
        let pts: Vec<&HistoryPoint<T>> = self.history.range(first..).collect();
        let mut k_g = Mat3::zero();
        let mut k_e = Mat3::zero();
        let n = pts.len();
        let half = lit::<T>(0.5);
        for (i, p) in pts.iter().enumerate() {
            let left = if i == 0 { p.t } else { pts[i - 1].t };
            let right = if i + 1 < n { pts[i + 1].t } else { t };
            let w = (right - left) * half;
            if w == T::zero() {
                continue;
            }
            let (gg, ge) = self.bath.correlators(lag_ps(t - p.t));
            let (m_g, m_e) = match self.mode {
                MemoryMode::NonMarkovian => (p.m_g, p.m_e),
                MemoryMode::MarkovSubstituted => interaction_terms(&self.ops, &s.rho, &p.u),
            };
            k_g.add_scaled(gg * w, &m_g);
            k_e.add_scaled(ge * w, &m_e);
        }
        if let Some(last) = pts.last() {
            let w = (t - last.t) * half;
            k_g.add_scaled(g0g * w, &cur_g);
            k_e.add_scaled(g0e * w, &cur_e);
        }
        let ud = s.u.adjoint();
        let q = self.ops.x_g.commutator(&(s.u * k_g * ud)) + self.ops.x_e.commutator(&(s.u * k_e * ud));
        q + q.adjoint()
    }

    fn record(&mut self, t: T, s: &NzState<T>) {
        let (m_g, m_e) = interaction_terms(&self.ops, &s.rho, &s.u);
        self.history.push_back(HistoryPoint { t, u: s.u, m_g, m_e });
        // keep one point beyond the cutoff so the trapezoid reaches it
        while self.history.len() > 2 && t - self.history[1].t > self.cutoff_ns {
            self.history.pop_front();
        }
    }
}

fn check_uniform<T: Real>(grid: &[T]) -> Result<T> {
    let h = grid[1] - grid[0];
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > h * lit(1e-6) {
            return Err(Error::InvalidParameter("master-equation grid must be uniform".into()));
        }
    }
    Ok(h)
}

/// Integrates `d rho/dt = -i[H_S, rho] + L(rho) - int_0^t R(t, t') dt'` on a
/// uniform `grid` (first point is the initial time).
pub fn integrate_nz<T: Real>(
    rho0: DensityMatrix<T>,
    protocol: &ModulationProtocol<T>,
    params: &SystemParams<T>,
    bath: &BathCorrelations<T>,
    cfg: &KernelConfig<T>,
    grid: &[T],
) -> Result<OpenTrajectory<T>> {
    integrate_nz_with(rho0, protocol, params, bath, cfg, grid, &NzOptions::default())
}

/// [`integrate_nz`] with explicit memory mode and step control.
pub fn integrate_nz_with<T: Real>(
    rho0: DensityMatrix<T>,
    protocol: &ModulationProtocol<T>,
    params: &SystemParams<T>,
    bath: &BathCorrelations<T>,
    cfg: &KernelConfig<T>,
    grid: &[T],
    options: &NzOptions<T>,
) -> Result<OpenTrajectory<T>> {
    params.validate()?;
    protocol.validate()?;
    cfg.validate(bath)?;
    rho0.validate()?;
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("grid needs at least two points".into()));
    }
    let mut max_step = params.rabi_period() / lit(40.0);
    if protocol.is_modulated() {
        max_step = max_step.min(protocol.period() / lit(40.0));
    }
    check_grid(grid, Some(max_step))?;
    let dt = check_uniform(grid)?;

    let b_avg = options.system_b_avg.unwrap_or(bath.b_avg);
    let coupling = params.g * b_avg;
    let mut h_max = substep_limit(protocol, coupling).min(cfg.history_step);
    if let Some(m) = options.max_substep {
        h_max = h_max.min(m);
    }
    let per_grid = (dt / h_max).ceil().to_usize().unwrap_or(1).max(1);
    let h = dt / lit(per_grid as f64);
    let stride = (cfg.history_step / h).round().to_usize().unwrap_or(1).max(1);

    let ops = coupling_operators(params.g);
    let mut memory = Memory {
        bath,
        ops,
        cutoff_ns: cfg.memory_cutoff * lit(NS_PER_PS),
        mode: options.mode,
        history: VecDeque::new(),
    };
    let clock = Clock::new(protocol);
    let t0 = grid[0];
    let mut state = NzState { rho: rho0.0, u: Mat3::identity() };
    memory.record(t0, &state);

    let mut out = OpenTrajectory {
        grid: grid.to_vec(),
        rho: Vec::with_capacity(grid.len()),
        phase: Vec::with_capacity(grid.len()),
        protocol: protocol.clone(),
        params: *params,
        b_avg,
        min_eigenvalue: rho0.min_eigenvalue(),
        max_trace_drift: (rho0.trace() - T::one()).abs(),
        max_hermiticity_defect: rho0.0.hermiticity_defect(),
        max_unitarity_defect: T::zero(),
        substep: h,
    };
    out.rho.push(rho0);
    out.phase.push(T::zero());
    let mut phi = T::zero();
    let mut step_index = 0usize;
    for pair in grid.windows(2) {
        let ga = pair[0];
        for k in 0..per_grid {
            let a = ga + h * lit(k as f64);
            let b = if k + 1 == per_grid { pair[1] } else { a + h };
            let lo = a;
            let hi = b;
            let mem = &memory;
            let mut rhs = |t: T, s: &NzState<T>| {
                let ham = hamiltonian(protocol.omega_within(t, lo, hi), coupling);
                let unitary = neg_i_mul(&ham, &s.rho) - neg_i_mul(&s.rho, &ham);
                let drho = unitary + lindblad(params, &s.rho) - mem.term(t, s);
                NzState { rho: drho, u: neg_i_mul(&ham, &s.u) }
            };
            state = rk4_step(&mut rhs, a, b - a, &state);
            if protocol.is_modulated() {
                for (pa, pb) in clock.pieces(a, b, b - a) {
                    phi += phase_increment(protocol, &clock.breakpoints, pa, pb);
                }
            }
            step_index += 1;
            if step_index % stride == 0 {
                memory.record(b, &state);
            }
            monitor(&mut out, &state, b)?;
        }
        out.rho.push(DensityMatrix(state.rho));
        out.phase.push(phi);
    }
    Ok(out)
}

fn monitor<T: Real>(out: &mut OpenTrajectory<T>, s: &NzState<T>, t: T) -> Result<()> {
    let tf = t.to_f64_lossy();
    let tr = (s.rho.trace().re - T::one()).abs();
    out.max_trace_drift = out.max_trace_drift.max(tr);
    if !(tr <= tolerance::<T>(TRACE_DRIFT_LIMIT, 1e4)) {
        return Err(Error::TraceDrift { t: tf, drift: tr.to_f64_lossy() });
    }
    let herm = s.rho.hermiticity_defect();
    out.max_hermiticity_defect = out.max_hermiticity_defect.max(herm);
    if !(herm <= tolerance::<T>(HERMITICITY_LIMIT, 1e4)) {
        return Err(Error::Hermiticity { t: tf, defect: herm.to_f64_lossy() });
    }
    let ev = s.rho.hermitian_eigenvalues()[0];
    out.min_eigenvalue = out.min_eigenvalue.min(ev);
    if !(ev >= lit(POSITIVITY_FLOOR)) {
        return Err(Error::Positivity { t: tf, min_eigenvalue: ev.to_f64_lossy() });
    }
    let ud = s.u.unitarity_defect();
    out.max_unitarity_defect = out.max_unitarity_defect.max(ud);
    if !(ud <= tolerance::<T>(UNITARITY_LIMIT, 1e4)) {
        return Err(Error::UnitarityDrift { drift: ud.to_f64_lossy() });
    }
    Ok(())
}
