//! Phase-preserving switching of a two-level emitter coupled to a cavity
//! whose frequency is modulated.
//!
//! The modules build on each other:
//!
//! - [`modulation`]: switching envelopes, `omega(t)` and the accumulated phase
//! - [`floquet`]: extended-space quasi-energies, the Bessel-suppressed
//!   coupling and the slow-envelope rotation angle
//! - [`dynamics`]: closed single-excitation evolution, Bloch observables and
//!   restart fidelity
//! - [`phonon`]: bath spectral density, correlation function and the polaron
//!   correlators
//! - [`nonmarkov`]: time-nonlocal master equation in the three-state basis
//!
//! Everything is generic over [`scalar::Real`]; the aliases below fix `f64`,
//! which is what the command line tool uses.
//!
//! Units: ns, rad/ns and `hbar = 1` for the system; ps and meV inside the
//! phonon module.

pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod mat3;
pub mod modulation;
pub mod nonmarkov;
pub mod ode;
pub mod phonon;
pub mod quad;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use modulation::Scheme;
pub use nonmarkov::MemoryMode;
pub use scalar::Real;

pub type Complex = scalar::Cplx<f64>;
pub type SwitchWindow = modulation::SwitchWindow<f64>;
pub type ModulationProtocol = modulation::ModulationProtocol<f64>;
pub type SystemParams = dynamics::SystemParams<f64>;
pub type PureState = dynamics::PureState<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type BlochSample = dynamics::BlochSample<f64>;
pub type FloquetMatrix = floquet::FloquetMatrix<f64>;
pub type QuasiEnergyPair = floquet::QuasiEnergyPair<f64>;
pub type PhononParams = phonon::PhononParams<f64>;
pub type BathCorrelations = phonon::BathCorrelations<f64>;
pub type DensityMatrix = nonmarkov::DensityMatrix<f64>;
pub type Propagator = nonmarkov::Propagator<f64>;
pub type KernelConfig = nonmarkov::KernelConfig<f64>;
pub type OpenTrajectory = nonmarkov::OpenTrajectory<f64>;
pub type NzOptions = nonmarkov::NzOptions<f64>;
