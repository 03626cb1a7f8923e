//! Figure-reproduction presets.
//!
//! Every preset uses g/2pi = 8 GHz, Omega/2pi = 50 GHz (period T = 0.02 ns)
//! and the CDT amplitude unless noted. Horizons cover four population
//! periods (`pi / g` each) after the last window's edge.
//!
//! | preset | content |
//! |--------|---------|
//! | fig2   | quasi-energies for `A/Omega` in `[0, 4]` |
//! | fig4   | Floquet window `[10T, 20T]`, `sigma = T`, plus the unmodulated reference |
//! | fig5   | the same window with static abrupt detuning, plus the reference |
//! | fig6   | `sigma` scan over `[0.05, 2] T`, minimum fidelity over durations `[2, 40] T` |
//! | fig7   | duration scans over `[2, 40] T`, Floquet and static abrupt |
//! | fig8a  | two separated Floquet windows |
//! | fig8b  | two overlapping Floquet windows |
//! | fig8c  | fig8a's windows with static abrupt detuning |
//! | fig9   | phonon suite at 4 K with `kappa = 4/ns`, `gamma = 1/ns`, `<B> = 1` in the system Hamiltonian |
//!
//! In fig8a, fig8b and fig9 the last `t_on` is nudged (by under `0.3 T`) so
//! that the restart lag is a whole number of population periods, which
//! lines the post-sequence extrema up with the reference.

use std::f64::consts::PI;

use crate::analysis::align_last_window;
use crate::config::{
    Amplitude, ExperimentConfig, InitialState, PhononSection, ProtocolSection, Range, RunMode, RunSection, ScanAxis,
    ScanSection, SchemeName, SystemSection, WindowSection,
};
use crate::runs::{run_phonon_suite, run_quasienergy, run_scan, run_single, Output, RunContext, RunError};

pub const PRESETS: [&str; 9] = ["fig2", "fig4", "fig5", "fig6", "fig7", "fig8a", "fig8b", "fig8c", "fig9"];

pub const G_GHZ: f64 = 8.0;
pub const DRIVE_GHZ: f64 = 50.0;
/// Drive period `T`, ns.
pub const PERIOD: f64 = 1.0 / DRIVE_GHZ;
/// Population periods covered after the last window.
pub const HORIZON_PERIODS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Job {
    Evolve,
    Scan,
    Quasienergy,
    Phonon,
}

/// One run of a preset; its outputs are prefixed with `name`.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetJob {
    pub name: String,
    pub job: Job,
    pub config: ExperimentConfig,
}

fn window(t_off: f64, t_on: f64, sigma: f64) -> WindowSection {
    WindowSection { t_off_ns: t_off, t_on_ns: t_on, sigma_ns: sigma }
}

fn population_period() -> f64 {
    PI / (2.0 * PI * G_GHZ)
}

/// Closed single-run config with the paper's couplings.
pub fn base_config(scheme: SchemeName, windows: Vec<WindowSection>) -> ExperimentConfig {
    let last = windows.iter().map(|w| w.t_on_ns + 5.0 * w.sigma_ns).fold(0.0, f64::max);
    ExperimentConfig {
        system: SystemSection { g_ghz: G_GHZ, kappa_per_ns: 0.0, gamma_per_ns: 0.0 },
        protocol: ProtocolSection {
            scheme,
            drive_ghz: DRIVE_GHZ,
            amplitude_ratio: Amplitude::Named("cdt".into()),
            windows,
        },
        phonon: None,
        run: RunSection {
            mode: RunMode::Single,
            t_start_ns: 0.0,
            t_end_ns: Some(last + HORIZON_PERIODS * population_period()),
            step_ns: None,
            initial: InitialState::Excited,
            output: None,
            preset: None,
            scan: None,
        },
    }
}

fn reference_of(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut r = cfg.clone();
    r.protocol.windows.clear();
    r
}

/// Replaces the last window's `t_on` by the aligned value.
pub fn aligned(mut cfg: ExperimentConfig) -> Result<ExperimentConfig, RunError> {
    let p = align_last_window(&cfg.protocol()?, &cfg.system_params()?)?;
    let t_on = p.windows.last().expect("aligned protocol has windows").t_on;
    cfg.protocol.windows.last_mut().expect("config has windows").t_on_ns = t_on;
    Ok(cfg)
}

fn fig8_windows(overlapping: bool) -> Vec<WindowSection> {
    let first = window(10.0 * PERIOD, 20.0 * PERIOD, PERIOD);
    let second = if overlapping {
        // second edge begins before the first has finished ramping up
        let t_off = 20.0 * PERIOD + 2.0 * PERIOD;
        window(t_off, t_off + 10.0 * PERIOD, PERIOD)
    } else {
        window(27.5 * PERIOD, 37.5 * PERIOD, PERIOD)
    };
    vec![first, second]
}

pub fn fig8_config(overlapping: bool) -> Result<ExperimentConfig, RunError> {
    aligned(base_config(SchemeName::FloquetCosine, fig8_windows(overlapping)))
}

/// Static abrupt run over fig8a's (aligned) windows.
pub fn fig8c_config() -> Result<ExperimentConfig, RunError> {
    let mut c = fig8_config(false)?;
    c.protocol.scheme = SchemeName::StaticAbrupt;
    Ok(c)
}

pub fn fig4_config() -> ExperimentConfig {
    base_config(SchemeName::FloquetCosine, vec![window(10.0 * PERIOD, 20.0 * PERIOD, PERIOD)])
}

pub fn fig5_config() -> ExperimentConfig {
    let mut c = fig4_config();
    c.protocol.scheme = SchemeName::StaticAbrupt;
    c
}

fn scan_config(scheme: SchemeName, axis: ScanAxis, range: Range, durations: Option<Range>) -> ExperimentConfig {
    let mut c = base_config(scheme, vec![window(10.0 * PERIOD, 20.0 * PERIOD, PERIOD)]);
    c.run.mode = RunMode::Scan;
    c.run.t_end_ns = None;
    c.run.scan = Some(ScanSection { axis, range, durations });
    c
}

/// Edge widths `[0.05, 2] T` in steps of `0.05 T`.
pub fn fig6_sigma_range() -> Range {
    Range { start: 0.05 * PERIOD, stop: 2.0 * PERIOD, points: 40 }
}

/// Durations `[2, 40] T` in steps of `2 T`.
pub fn fig6_duration_range() -> Range {
    Range { start: 2.0 * PERIOD, stop: 40.0 * PERIOD, points: 20 }
}

pub fn fig6_config() -> ExperimentConfig {
    scan_config(SchemeName::FloquetCosine, ScanAxis::SigmaT, fig6_sigma_range(), Some(fig6_duration_range()))
}

/// Floquet durations `[2, 40] T` in steps of `0.5 T`.
pub fn fig7_floquet_config() -> ExperimentConfig {
    let r = Range { start: 2.0 * PERIOD, stop: 40.0 * PERIOD, points: 77 };
    scan_config(SchemeName::FloquetCosine, ScanAxis::Duration, r, None)
}

/// Static durations `[2, 6] T` in steps of `0.02 T`, fine enough to resolve
/// the `2 pi / Delta` oscillation (about `0.41 T`).
pub fn fig7_static_config() -> ExperimentConfig {
    let r = Range { start: 2.0 * PERIOD, stop: 6.0 * PERIOD, points: 201 };
    scan_config(SchemeName::StaticAbrupt, ScanAxis::Duration, r, None)
}

pub fn fig2_config() -> ExperimentConfig {
    let mut c = base_config(SchemeName::FloquetCosine, Vec::new());
    c.run.t_end_ns = None;
    c.run.mode = RunMode::Scan;
    c.run.scan = Some(ScanSection {
        axis: ScanAxis::AmplitudeRatio,
        range: Range { start: 0.0, stop: 4.0, points: 401 },
        durations: None,
    });
    c
}

/// Paper bath: `alpha = 0.06 ps^2`, `omega_b = 1 meV`.
pub fn paper_phonons(temperature_k: f64) -> PhononSection {
    PhononSection {
        alpha_ps2: 0.06,
        omega_b_mev: 1.0,
        temperature_k,
        system_b_avg: Some(1.0),
        memory_cutoff_ps: None,
        history_step_ns: None,
        markov: false,
    }
}

/// Fig. 4 window, aligned, with the paper bath at 4 K and the given
/// Markovian rates.
pub fn fig9_config(kappa: f64, gamma: f64) -> Result<ExperimentConfig, RunError> {
    let mut c = aligned(fig4_config())?;
    c.system.kappa_per_ns = kappa;
    c.system.gamma_per_ns = gamma;
    c.phonon = Some(paper_phonons(4.0));
    Ok(c)
}

pub fn jobs(name: &str) -> Result<Vec<PresetJob>, RunError> {
    let job = |n: &str, job: Job, config: ExperimentConfig| PresetJob { name: n.to_string(), job, config };
    Ok(match name {
        "fig2" => vec![job("fig2", Job::Quasienergy, fig2_config())],
        "fig4" => {
            let c = fig4_config();
            vec![job("fig4_reference", Job::Evolve, reference_of(&c)), job("fig4", Job::Evolve, c)]
        }
        "fig5" => {
            let c = fig5_config();
            vec![job("fig5_reference", Job::Evolve, reference_of(&c)), job("fig5", Job::Evolve, c)]
        }
        "fig6" => vec![job("fig6", Job::Scan, fig6_config())],
        "fig7" => vec![
            job("fig7_floquet", Job::Scan, fig7_floquet_config()),
            job("fig7_static", Job::Scan, fig7_static_config()),
        ],
        "fig8a" | "fig8b" => {
            let c = fig8_config(name == "fig8b")?;
            vec![job(&format!("{name}_reference"), Job::Evolve, reference_of(&c)), job(name, Job::Evolve, c)]
        }
        "fig8c" => {
            let c = fig8c_config()?;
            vec![job("fig8c_reference", Job::Evolve, reference_of(&c)), job("fig8c", Job::Evolve, c)]
        }
        "fig9" => vec![job("fig9", Job::Phonon, fig9_config(4.0, 1.0)?)],
        other => return Err(RunError::Config(format!("unknown preset \"{other}\"; known: {}", PRESETS.join(", ")))),
    })
}

pub fn run_job(j: &PresetJob, ctx: &RunContext) -> Result<Vec<Output>, RunError> {
    let outs = match j.job {
        Job::Evolve => run_single(&j.config, ctx)?,
        Job::Scan => run_scan(&j.config, ctx)?,
        Job::Quasienergy => run_quasienergy(&j.config, ctx)?,
        Job::Phonon => run_phonon_suite(&j.config, ctx)?,
    };
    let single = outs.len() == 1;
    Ok(outs
        .into_iter()
        .map(|mut o| {
            o.name = if single { j.name.clone() } else { format!("{}_{}", j.name, o.name) };
            o
        })
        .collect())
}

/// All outputs of a preset, named `<preset>[_<part>]`.
pub fn reproduce(name: &str, ctx: &RunContext) -> Result<Vec<Output>, RunError> {
    let mut out = Vec::new();
    for j in jobs(name)? {
        out.extend(run_job(&j, ctx)?);
    }
    Ok(out)
}
