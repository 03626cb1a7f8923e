//! Experiment configuration files.
//!
//! TOML with one table per physics module plus `[run]`. Frequencies are
//! given as ordinary frequencies in GHz (the code multiplies by 2 pi), decay
//! rates as plain rates in 1/ns, times in ns, phonon lags in ps.
//!
//! ```toml
//! [system]
//! g_ghz = 8.0
//!
//! [protocol]
//! scheme = "floquet_cosine"
//! drive_ghz = 50.0
//! amplitude_ratio = "cdt"
//!
//! [[protocol.windows]]
//! t_off_ns = 0.2
//! t_on_ns = 0.4
//! sigma_ns = 0.02
//!
//! [run]
//! mode = "single"
//! t_end_ns = 0.75
//! ```

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;

use floquet_cavity::floquet::find_cdt_amplitude;
use floquet_cavity::{ModulationProtocol, PhononParams, Scheme, SwitchWindow, SystemParams};
use serde::{Deserialize, Serialize};

/// Envelope tails are treated as switched off beyond this many widths.
pub const EDGE_WIDTHS: f64 = 5.0;
/// Rabi periods (`pi / g`) of margin required after the last window.
pub const MARGIN_RABI_PERIODS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// `g / 2 pi` in GHz.
    pub g_ghz: f64,
    #[serde(default)]
    pub kappa_per_ns: f64,
    #[serde(default)]
    pub gamma_per_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Value(f64),
    /// `"cdt"`: first root of `J0`.
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub t_off_ns: f64,
    pub t_on_ns: f64,
    pub sigma_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    FloquetCosine,
    StaticSmooth,
    StaticAbrupt,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::FloquetCosine => Scheme::FloquetCosine,
            SchemeName::StaticSmooth => Scheme::StaticDetuningSmooth,
            SchemeName::StaticAbrupt => Scheme::StaticDetuningAbrupt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub scheme: SchemeName,
    /// `Omega / 2 pi` in GHz.
    pub drive_ghz: f64,
    pub amplitude_ratio: Amplitude,
    #[serde(default)]
    pub windows: Vec<WindowSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhononSection {
    pub alpha_ps2: f64,
    pub omega_b_mev: f64,
    pub temperature_k: f64,
    /// `<B>` in the system Hamiltonian; the bath value when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_b_avg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_cutoff_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_step_ns: Option<f64>,
    /// Replace `rho(t')` by `rho(t)` inside the memory integral.
    #[serde(default)]
    pub markov: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Single,
    Scan,
    Preset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Excited,
    Photon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// Edge width of every window, ns.
    SigmaT,
    /// `t_on - t_off` of the first window (later windows shift along), ns.
    Duration,
    /// Bath temperature, K.
    Temperature,
    /// `A0`, dimensionless.
    AmplitudeRatio,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::SigmaT => "sigma_t",
            ScanAxis::Duration => "duration",
            ScanAxis::Temperature => "temperature",
            ScanAxis::AmplitudeRatio => "amplitude_ratio",
        }
    }

    pub fn is_time(self) -> bool {
        matches!(self, ScanAxis::SigmaT | ScanAxis::Duration)
    }
}

/// Evenly spaced values `start..=stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.stop } else { self.start + h * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub axis: ScanAxis,
    pub range: Range,
    /// For `sigma_t` scans: also sweep the duration and report the minimum
    /// fidelity over it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<Range>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: RunMode,
    #[serde(default)]
    pub t_start_ns: f64,
    /// Defaults to the last window plus the required margin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_ns: Option<f64>,
    #[serde(default = "default_initial")]
    pub initial: InitialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

fn default_initial() -> InitialState {
    InitialState::Excited
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub protocol: ProtocolSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phonon: Option<PhononSection>,
    pub run: RunSection,
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the offending line when known.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|(key, message)| ConfigError { line: locate(text, key), message })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(LoadError::Config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn g(&self) -> f64 {
        TAU * self.system.g_ghz
    }

    pub fn drive_freq(&self) -> f64 {
        TAU * self.protocol.drive_ghz
    }

    pub fn drive_period(&self) -> f64 {
        1.0 / self.protocol.drive_ghz
    }

    pub fn amplitude_ratio(&self) -> f64 {
        match &self.protocol.amplitude_ratio {
            Amplitude::Value(v) => *v,
            Amplitude::Named(_) => find_cdt_amplitude(1.0),
        }
    }

    pub fn system_params(&self) -> floquet_cavity::Result<SystemParams> {
        SystemParams::new(self.g(), self.system.kappa_per_ns, self.system.gamma_per_ns)
    }

    pub fn protocol(&self) -> floquet_cavity::Result<ModulationProtocol> {
        let windows = self
            .protocol
            .windows
            .iter()
            .map(|w| SwitchWindow::new(w.t_off_ns, w.t_on_ns, w.sigma_ns))
            .collect::<floquet_cavity::Result<Vec<_>>>()?;
        ModulationProtocol::new(self.amplitude_ratio(), self.drive_freq(), windows, self.protocol.scheme.into())
    }

    pub fn phonon_params(&self) -> Option<floquet_cavity::Result<PhononParams>> {
        self.phonon
            .as_ref()
            .map(|p| PhononParams::new(p.alpha_ps2, p.omega_b_mev, p.temperature_k))
    }

    /// Smallest admissible end time: last window edge plus the Rabi margin.
    pub fn required_end(&self) -> f64 {
        let last = self
            .protocol
            .windows
            .iter()
            .map(|w| w.t_on_ns + EDGE_WIDTHS * w.sigma_ns)
            .fold(self.run.t_start_ns, f64::max);
        last + MARGIN_RABI_PERIODS * PI / self.g()
    }

    pub fn t_end(&self) -> f64 {
        self.run.t_end_ns.unwrap_or_else(|| self.required_end())
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        let s = &self.system;
        if !(s.g_ghz > 0.0 && s.g_ghz.is_finite()) {
            return Err(("g_ghz", format!("g_ghz must be positive, got {}", s.g_ghz)));
        }
        if !(s.kappa_per_ns >= 0.0) {
            return Err(("kappa_per_ns", "kappa_per_ns must be non-negative".into()));
        }
        if !(s.gamma_per_ns >= 0.0) {
            return Err(("gamma_per_ns", "gamma_per_ns must be non-negative".into()));
        }
        let p = &self.protocol;
        if !(p.drive_ghz > 0.0 && p.drive_ghz.is_finite()) {
            return Err(("drive_ghz", format!("drive_ghz must be positive, got {}", p.drive_ghz)));
        }
        match &p.amplitude_ratio {
            Amplitude::Value(v) if !(*v >= 0.0 && v.is_finite()) => {
                return Err(("amplitude_ratio", format!("amplitude_ratio must be non-negative, got {v}")));
            }
            Amplitude::Named(n) if n != "cdt" => {
                return Err(("amplitude_ratio", format!("amplitude_ratio must be a number or \"cdt\", got \"{n}\"")));
            }
            _ => {}
        }
        for w in &p.windows {
            if !(w.sigma_ns > 0.0) {
                return Err(("sigma_ns", format!("sigma_ns must be positive, got {}", w.sigma_ns)));
            }
            if !(w.t_on_ns >= w.t_off_ns) {
                return Err(("t_on_ns", format!("t_on_ns {} precedes t_off_ns {}", w.t_on_ns, w.t_off_ns)));
            }
        }
        if let Some(ph) = &self.phonon {
            if let Err(e) = PhononParams::new(ph.alpha_ps2, ph.omega_b_mev, ph.temperature_k) {
                return Err(("alpha_ps2", e.to_string()));
            }
            if matches!(ph.memory_cutoff_ps, Some(c) if !(c > 0.0)) {
                return Err(("memory_cutoff_ps", "memory_cutoff_ps must be positive".into()));
            }
            if matches!(ph.history_step_ns, Some(c) if !(c > 0.0)) {
                return Err(("history_step_ns", "history_step_ns must be positive".into()));
            }
            if matches!(ph.system_b_avg, Some(b) if !(0.0..=1.0).contains(&b)) {
                return Err(("system_b_avg", "system_b_avg must lie in [0, 1]".into()));
            }
        }
        let r = &self.run;
        match r.mode {
            RunMode::Single if r.scan.is_some() || r.preset.is_some() => {
                return Err(("mode", "single mode takes neither [run.scan] nor preset".into()));
            }
            RunMode::Scan if r.scan.is_none() || r.preset.is_some() => {
                return Err(("mode", "scan mode needs [run.scan] and no preset".into()));
            }
            RunMode::Preset if r.preset.is_none() || r.scan.is_some() => {
                return Err(("mode", "preset mode needs a preset name and no [run.scan]".into()));
            }
            _ => {}
        }
        if let Some(name) = &r.preset {
            if !crate::presets::PRESETS.contains(&name.as_str()) {
                return Err(("preset", format!("unknown preset \"{name}\"")));
            }
        }
        if matches!(r.step_ns, Some(h) if !(h > 0.0)) {
            return Err(("step_ns", "step_ns must be positive".into()));
        }
        if let Some(sc) = &r.scan {
            check_range(&sc.range)?;
            if let Some(d) = &sc.durations {
                if sc.axis != ScanAxis::SigmaT {
                    return Err(("durations", "durations only combine with a sigma_t scan".into()));
                }
                check_range(d)?;
            }
            if sc.axis == ScanAxis::Temperature && self.phonon.is_none() {
                return Err(("axis", "temperature scans need a [phonon] table".into()));
            }
            if matches!(sc.axis, ScanAxis::SigmaT | ScanAxis::Duration) && p.windows.is_empty() {
                return Err(("axis", "time-axis scans need at least one window".into()));
            }
        }
        if r.mode == RunMode::Single {
            for w in &p.windows {
                if r.t_start_ns > w.t_off_ns - EDGE_WIDTHS * w.sigma_ns + 1e-12 {
                    return Err(("t_start_ns", "grid must start before every window's rising edge".into()));
                }
            }
            if let Some(end) = r.t_end_ns {
                let need = self.required_end();
                if end < need - 1e-12 {
                    return Err((
                        "t_end_ns",
                        format!("t_end_ns {end} must cover all windows plus {MARGIN_RABI_PERIODS} Rabi periods ({need:.6} ns)"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_range(r: &Range) -> Result<(), (&'static str, String)> {
    if r.points == 0 {
        return Err(("points", "scan needs at least one point".into()));
    }
    if r.points > 1 && !(r.stop > r.start) {
        return Err(("stop", format!("scan axis must be strictly increasing ({} .. {})", r.start, r.stop)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadError {
    Io(String),
    Config(ConfigError),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(m) => write!(f, "{m}"),
            LoadError::Config(e) => write!(f, "{e}"),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first `key = ...` assignment, if any.
fn locate(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}
