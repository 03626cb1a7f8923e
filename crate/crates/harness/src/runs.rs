//! Simulation drivers behind the subcommands.

use std::f64::consts::PI;

use floquet_cavity::dynamics::{fidelity, max_grid_step, propagate_schrodinger, uniform_grid};
use floquet_cavity::floquet::{build_floquet_hamiltonian, quasi_energies, DEFAULT_HALF_WIDTH};
use floquet_cavity::nonmarkov::integrate_nz_with;
use floquet_cavity::phonon::bath_correlators_auto;
use floquet_cavity::special::bessel_j;
use floquet_cavity::{
    BathCorrelations, DensityMatrix, KernelConfig, MemoryMode, ModulationProtocol, NzOptions, OpenTrajectory,
    PureState, SystemParams, Trajectory,
};
use rayon::prelude::*;

use crate::analysis::swing;
use crate::config::{Amplitude, ExperimentConfig, InitialState, ScanAxis, EDGE_WIDTHS};
use crate::output::Table;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numerical(_) => 2,
            RunError::Io(_) => 3,
        }
    }
}

impl From<floquet_cavity::Error> for RunError {
    fn from(e: floquet_cavity::Error) -> Self {
        if e.is_numerical() { RunError::Numerical(e.to_string()) } else { RunError::Config(e.to_string()) }
    }
}

/// Status column value for a scan row.
pub fn status_code(e: &floquet_cavity::Error) -> f64 {
    if e.is_numerical() { 2.0 } else { 1.0 }
}

/// Command-line overrides shared by all runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunContext {
    pub workers: Option<usize>,
    pub step: Option<f64>,
}

impl RunContext {
    pub fn pool(&self) -> Result<rayon::ThreadPool, RunError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            if n == 0 {
                return Err(RunError::Config("--workers must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| RunError::Config(e.to_string()))
    }
}

/// A named table destined for one output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub name: String,
    pub table: Table,
}

impl Output {
    pub fn new(name: impl Into<String>, table: Table) -> Self {
        Self { name: name.into(), table }
    }
}

fn tag(table: &mut Table, cfg: &ExperimentConfig) {
    table.meta_config(&cfg.to_toml());
}

/// Open-system runs are needed for phonons or any decay.
pub fn is_open(cfg: &ExperimentConfig) -> bool {
    cfg.phonon.is_some() || cfg.system.kappa_per_ns > 0.0 || cfg.system.gamma_per_ns > 0.0
}

pub fn output_grid(cfg: &ExperimentConfig, protocol: &ModulationProtocol, params: &SystemParams, ctx: &RunContext) -> floquet_cavity::Result<Vec<f64>> {
    let step = ctx.step.or(cfg.run.step_ns).unwrap_or_else(|| max_grid_step(protocol, params));
    uniform_grid(cfg.run.t_start_ns, cfg.t_end(), step)
}

pub fn simulate_closed(cfg: &ExperimentConfig, ctx: &RunContext) -> floquet_cavity::Result<Trajectory> {
    let params = cfg.system_params()?;
    let protocol = cfg.protocol()?;
    let grid = output_grid(cfg, &protocol, &params, ctx)?;
    let psi0 = match cfg.run.initial {
        InitialState::Excited => PureState::excited(),
        InitialState::Photon => PureState::photon(),
    };
    propagate_schrodinger(psi0, &protocol, &params, &grid)
}

pub fn bath_for(cfg: &ExperimentConfig) -> floquet_cavity::Result<BathCorrelations> {
    match cfg.phonon_params() {
        Some(pp) => bath_correlators_auto(&pp?),
        None => Ok(BathCorrelations::vanishing(floquet_cavity::phonon::DEFAULT_TAU_MAX, floquet_cavity::phonon::DEFAULT_TAU_STEP)),
    }
}

pub fn kernel_config(cfg: &ExperimentConfig, bath: &BathCorrelations) -> KernelConfig {
    let mut k = KernelConfig::for_bath(bath);
    if let Some(ph) = &cfg.phonon {
        if let Some(c) = ph.memory_cutoff_ps {
            k.memory_cutoff = c;
        }
        if let Some(h) = ph.history_step_ns {
            k.history_step = h;
        }
    }
    k
}

pub fn nz_options(cfg: &ExperimentConfig) -> NzOptions {
    let ph = cfg.phonon.as_ref();
    NzOptions {
        mode: if ph.is_some_and(|p| p.markov) { MemoryMode::MarkovSubstituted } else { MemoryMode::NonMarkovian },
        max_substep: None,
        system_b_avg: ph.and_then(|p| p.system_b_avg),
    }
}

pub fn simulate_open_with_bath(cfg: &ExperimentConfig, bath: &BathCorrelations, ctx: &RunContext) -> floquet_cavity::Result<OpenTrajectory> {
    let params = cfg.system_params()?;
    let protocol = cfg.protocol()?;
    let grid = output_grid(cfg, &protocol, &params, ctx)?;
    let rho0 = match cfg.run.initial {
        InitialState::Excited => DensityMatrix::basis(0),
        InitialState::Photon => DensityMatrix::basis(1),
    };
    integrate_nz_with(rho0, &protocol, &params, bath, &kernel_config(cfg, bath), &grid, &nz_options(cfg))
}

pub fn simulate_open(cfg: &ExperimentConfig, ctx: &RunContext) -> floquet_cavity::Result<OpenTrajectory> {
    let bath = bath_for(cfg)?;
    simulate_open_with_bath(cfg, &bath, ctx)
}

pub fn closed_table(traj: &Trajectory) -> Table {
    let successive = traj.protocol.windows.len() >= 2;
    let mut cols = vec![
        "t", "re_ce", "im_ce", "re_ca", "im_ca", "pop_cavity", "pop_tls", "u", "v", "w", "theta", "varphi", "chi", "phi_accum",
    ];
    if successive {
        cols.push("envelope");
    }
    let mut t = Table::new("closed_trajectory", &cols);
    for i in 0..traj.len() {
        let s = traj.states[i];
        let b = traj.bloch[i];
        let mut row = vec![
            traj.grid[i],
            s.c_e.re,
            s.c_e.im,
            s.c_a.re,
            s.c_a.im,
            s.c_a.norm_sqr(),
            s.c_e.norm_sqr(),
            b.u,
            b.v,
            b.w,
            b.theta,
            b.varphi,
            b.chi,
            traj.phase[i],
        ];
        if successive {
            row.push(traj.protocol.envelope(traj.grid[i]));
        }
        t.push(row);
    }
    t.meta("max_norm_defect", format!("{:e}", traj.max_norm_defect()));
    t
}

pub fn open_table(traj: &OpenTrajectory) -> Table {
    let successive = traj.protocol.windows.len() >= 2;
    let mut names: Vec<String> = vec!["t".into()];
    for i in 1..=3 {
        for j in 1..=3 {
            names.push(format!("re_rho{i}{j}"));
            names.push(format!("im_rho{i}{j}"));
        }
    }
    names.push("pop_cavity".into());
    if successive {
        names.push("envelope".into());
    }
    let cols: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut t = Table::new("open_trajectory", &cols);
    for (k, r) in traj.rho.iter().enumerate() {
        let mut row = vec![traj.grid[k]];
        for i in 0..3 {
            for j in 0..3 {
                let z = r.0.get(i, j);
                row.push(z.re);
                row.push(z.im);
            }
        }
        row.push(r.cavity_population());
        if successive {
            row.push(traj.protocol.envelope(traj.grid[k]));
        }
        t.push(row);
    }
    t.meta("b_avg_system", traj.b_avg)
        .meta("max_trace_drift", format!("{:e}", traj.max_trace_drift))
        .meta("max_hermiticity_defect", format!("{:e}", traj.max_hermiticity_defect))
        .meta("min_eigenvalue", format!("{:e}", traj.min_eigenvalue))
        .meta("internal_step_ns", format!("{:e}", traj.substep));
    t
}

pub fn bath_table(bath: &BathCorrelations) -> Table {
    let mut t = Table::new("bath_correlations", &["tau_ps", "re_phi", "im_phi", "re_gg", "im_gg", "re_ge", "im_ge"]);
    for i in 0..bath.tau_grid.len() {
        let (p, gg, ge) = (bath.phi_tab[i], bath.g_g_tab[i], bath.g_e_tab[i]);
        t.push(vec![bath.tau_grid[i], p.re, p.im, gg.re, gg.im, ge.re, ge.im]);
    }
    t.meta("b_avg", bath.b_avg).meta("correlation_time_ps", bath.correlation_time());
    if let Some(d) = bath.decay_time(floquet_cavity::phonon::DECAY_FRACTION) {
        t.meta("decay_time_ps", d);
    }
    t
}

/// Last window's `t_on`, if any.
fn last_on(p: &ModulationProtocol) -> Option<(f64, f64)> {
    p.windows.iter().map(|w| (w.t_on, w.sigma_t)).fold(None, |acc, x| match acc {
        Some(a) if a.0 >= x.0 => Some(a),
        _ => Some(x),
    })
}

/// `(fidelity, amplitude)` of a closed run; the amplitude is the
/// population swing over one Rabi period after the last window's edge.
pub fn closed_observables(traj: &Trajectory) -> floquet_cavity::Result<(f64, f64)> {
    let (t_on, sigma) = last_on(&traj.protocol).unwrap_or((traj.grid[0], 0.0));
    let f = fidelity(traj, t_on)?;
    let pop: Vec<f64> = traj.states.iter().map(|s| s.cavity_population()).collect();
    let a = t_on + EDGE_WIDTHS * sigma;
    Ok((f, swing(&traj.grid, &pop, a, a + PI / traj.params.g)))
}

/// Open-system analogue: `sqrt(max pop_cavity)` after `t_on`, and the swing.
pub fn open_observables(traj: &OpenTrajectory) -> (f64, f64) {
    let (t_on, sigma) = last_on(&traj.protocol).unwrap_or((traj.grid[0], 0.0));
    let pop = traj.cavity_population();
    let f = traj
        .grid
        .iter()
        .zip(&pop)
        .filter(|(t, _)| **t > t_on)
        .map(|(_, p)| p.max(0.0).sqrt())
        .fold(0.0, f64::max);
    let a = t_on + EDGE_WIDTHS * sigma;
    (f, swing(&traj.grid, &pop, a, a + PI / traj.params.g))
}

/// `evolve`: one trajectory (closed or open), plus the envelope column for
/// successive windows.
pub fn run_single(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Vec<Output>, RunError> {
    if is_open(cfg) {
        let traj = simulate_open(cfg, ctx)?;
        let mut t = open_table(&traj);
        let (f, a) = open_observables(&traj);
        t.meta("fidelity", f).meta("amplitude", a);
        tag(&mut t, cfg);
        Ok(vec![Output::new("trajectory", t)])
    } else {
        let traj = simulate_closed(cfg, ctx)?;
        let mut t = closed_table(&traj);
        if !traj.protocol.windows.is_empty() {
            let (f, a) = closed_observables(&traj)?;
            t.meta("fidelity", f).meta("amplitude", a);
        }
        tag(&mut t, cfg);
        Ok(vec![Output::new("trajectory", t)])
    }
}

/// `cfg` with one scan coordinate replaced; the end time grows as needed.
pub fn with_axis(cfg: &ExperimentConfig, axis: ScanAxis, v: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    match axis {
        ScanAxis::SigmaT => c.protocol.windows.iter_mut().for_each(|w| w.sigma_ns = v),
        ScanAxis::Duration => {
            let first = c.protocol.windows[0];
            let shift = first.t_off_ns + v - first.t_on_ns;
            c.protocol.windows[0].t_on_ns = first.t_off_ns + v;
            for w in c.protocol.windows.iter_mut().skip(1) {
                w.t_off_ns += shift;
                w.t_on_ns += shift;
            }
        }
        ScanAxis::Temperature => {
            if let Some(p) = c.phonon.as_mut() {
                p.temperature_k = v;
            }
        }
        ScanAxis::AmplitudeRatio => c.protocol.amplitude_ratio = Amplitude::Value(v),
    }
    c.run.scan = None;
    c.run.mode = crate::config::RunMode::Single;
    let need = c.required_end();
    c.run.t_end_ns = Some(c.run.t_end_ns.map_or(need, |e| e.max(need)));
    c
}

fn point_observables(cfg: &ExperimentConfig, ctx: &RunContext) -> floquet_cavity::Result<(f64, f64)> {
    if is_open(cfg) {
        Ok(open_observables(&simulate_open(cfg, ctx)?))
    } else {
        closed_observables(&simulate_closed(cfg, ctx)?)
    }
}

/// `scan`: one row per axis value, computed independently on the worker
/// pool and assembled in axis order. Failed points keep their row with a
/// non-zero status and NaN observables.
pub fn run_scan(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Vec<Output>, RunError> {
    let sc = cfg
        .run
        .scan
        .clone()
        .ok_or_else(|| RunError::Config("scan needs a [run.scan] table".into()))?;
    let values = sc.range.values();
    let period = cfg.drive_period();
    let scale = if sc.axis.is_time() { 1.0 / period } else { 1.0 };
    let pool = ctx.pool()?;
    let mut t = match &sc.durations {
        None => {
            let rows: Vec<Vec<f64>> = pool.install(|| {
                values
                    .par_iter()
                    .map(|&v| match point_observables(&with_axis(cfg, sc.axis, v), ctx) {
                        Ok((f, a)) => vec![v, v * scale, f, a, 0.0],
                        Err(e) => vec![v, v * scale, f64::NAN, f64::NAN, status_code(&e)],
                    })
                    .collect()
            });
            let mut t = Table::new("scan", &[sc.axis.name(), "axis_scaled", "fidelity", "amplitude", "status"]);
            rows.into_iter().for_each(|r| t.push(r));
            t
        }
        Some(d) => {
            let durations = d.values();
            let pairs: Vec<(usize, f64)> =
                (0..values.len()).flat_map(|i| durations.iter().map(move |&x| (i, x))).collect();
            let fids: Vec<floquet_cavity::Result<f64>> = pool.install(|| {
                pairs
                    .par_iter()
                    .map(|&(i, dur)| {
                        let c = with_axis(&with_axis(cfg, ScanAxis::SigmaT, values[i]), ScanAxis::Duration, dur);
                        point_observables(&c, ctx).map(|o| o.0)
                    })
                    .collect()
            });
            let mut t = Table::new("scan", &[sc.axis.name(), "axis_scaled", "fidelity_min", "fidelity_max", "status"]);
            for (i, &v) in values.iter().enumerate() {
                let chunk = &fids[i * durations.len()..(i + 1) * durations.len()];
                match chunk.iter().find_map(|r| r.as_ref().err()) {
                    Some(e) => t.push(vec![v, v * scale, f64::NAN, f64::NAN, status_code(e)]),
                    None => {
                        let f: Vec<f64> = chunk.iter().map(|r| *r.as_ref().unwrap()).collect();
                        let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
                        let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        t.push(vec![v, v * scale, lo, hi, 0.0]);
                    }
                }
            }
            t.meta("durations_ns", format!("{}..{} ({} points)", d.start, d.stop, d.points));
            t
        }
    };
    t.meta("axis", sc.axis.name()).meta("drive_period_ns", period);
    tag(&mut t, cfg);
    Ok(vec![Output::new("scan", t)])
}

/// Quasi-energies over amplitude ratios with the `2 g |J0|` overlay.
pub fn quasienergy_table(g: f64, drive_freq: f64, ratios: &[f64], half_width: usize, ctx: &RunContext) -> Result<Table, RunError> {
    let pool = ctx.pool()?;
    let rows: Vec<Vec<f64>> = pool.install(|| {
        ratios
            .par_iter()
            .map(|&x| {
                let overlay = 2.0 * g * bessel_j(0, x).abs();
                match build_floquet_hamiltonian(x * drive_freq, drive_freq, g, half_width).and_then(|fm| quasi_energies(&fm)) {
                    Ok(q) => vec![x, q.eps_plus, q.eps_minus, q.splitting(), overlay, q.splitting() / g, 0.0],
                    Err(e) => vec![x, f64::NAN, f64::NAN, f64::NAN, overlay, f64::NAN, status_code(&e)],
                }
            })
            .collect()
    });
    let mut t = Table::new(
        "quasienergy",
        &["amplitude_ratio", "eps_plus", "eps_minus", "splitting", "overlay_2g_abs_j0", "splitting_over_g", "status"],
    );
    rows.into_iter().for_each(|r| t.push(r));
    t.meta("half_width", half_width).meta("sectors", 2 * half_width + 1);
    Ok(t)
}

/// `quasienergy`: sweep of the amplitude ratio from `[run.scan]`
/// (default `0..=4`, 401 points).
pub fn run_quasienergy(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Vec<Output>, RunError> {
    let ratios = match &cfg.run.scan {
        Some(sc) if sc.axis == ScanAxis::AmplitudeRatio => sc.range.values(),
        Some(sc) => {
            return Err(RunError::Config(format!("quasienergy scans the amplitude_ratio axis, not {}", sc.axis.name())));
        }
        None => crate::config::Range { start: 0.0, stop: 4.0, points: 401 }.values(),
    };
    let mut t = quasienergy_table(cfg.g(), cfg.drive_freq(), &ratios, DEFAULT_HALF_WIDTH, ctx)?;
    tag(&mut t, cfg);
    Ok(vec![Output::new("quasienergy", t)])
}

/// Default temperatures for the sweep, K.
pub const SWEEP_TEMPERATURES: [f64; 3] = [0.0, 4.0, 10.0];

/// `phonon`: bath tables, modulated and unmodulated trajectories at the
/// configured temperature, and a temperature sweep of the modulated run
/// (axis from `[run.scan]` when it is `temperature`).
pub fn run_phonon_suite(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Vec<Output>, RunError> {
    let ph = cfg
        .phonon
        .clone()
        .ok_or_else(|| RunError::Config("phonon runs need a [phonon] table".into()))?;
    let temps = match &cfg.run.scan {
        Some(sc) if sc.axis == ScanAxis::Temperature => sc.range.values(),
        _ => SWEEP_TEMPERATURES.to_vec(),
    };
    let mut base = cfg.clone();
    base.run.scan = None;
    base.run.mode = crate::config::RunMode::Single;
    // the reference shares the modulated grid so extrema compare sample by sample
    let step = output_grid(&base, &base.protocol()?, &base.system_params()?, ctx)?;
    let mut flat = base.clone();
    flat.protocol.windows.clear();
    flat.run.step_ns = Some(step[1] - step[0]);
    let pool = ctx.pool()?;

    let bath = bath_for(&base)?;
    let mut out = Vec::new();
    let mut bt = bath_table(&bath);
    bt.meta("temperature_k", ph.temperature_k);
    out.push(Output::new(format!("bath_T{}", ph.temperature_k), bt));

    let (modulated, reference) = pool.install(|| {
        rayon::join(|| simulate_open_with_bath(&base, &bath, ctx), || simulate_open_with_bath(&flat, &bath, ctx))
    });
    let mut mt = open_table(&modulated?);
    tag(&mut mt, &base);
    out.push(Output::new("modulated", mt));
    let mut rt = open_table(&reference?);
    tag(&mut rt, &flat);
    out.push(Output::new("unmodulated", rt));

    let runs: Vec<(f64, Result<(BathCorrelations, OpenTrajectory), floquet_cavity::Error>)> = pool.install(|| {
        temps
            .par_iter()
            .map(|&temp| {
                let c = with_axis(&base, ScanAxis::Temperature, temp);
                let r = bath_for(&c).and_then(|b| simulate_open_with_bath(&c, &b, ctx).map(|t| (b, t)));
                (temp, r)
            })
            .collect()
    });
    let mut summary = Table::new("temperature_sweep", &["temperature", "b_avg", "fidelity", "amplitude", "status"]);
    for (temp, r) in runs {
        match r {
            Ok((b, traj)) => {
                let (f, a) = open_observables(&traj);
                summary.push(vec![temp, b.b_avg, f, a, 0.0]);
                let mut t = open_table(&traj);
                t.meta("temperature_k", temp);
                tag(&mut t, &with_axis(&base, ScanAxis::Temperature, temp));
                out.push(Output::new(format!("sweep_T{temp}"), t));
            }
            Err(e) => summary.push(vec![temp, f64::NAN, f64::NAN, f64::NAN, status_code(&e)]),
        }
    }
    tag(&mut summary, &base);
    out.push(Output::new("temperature_sweep", summary));
    Ok(out)
}
