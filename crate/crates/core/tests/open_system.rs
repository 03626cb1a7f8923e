use floquet_cavity::dynamics::{propagate_schrodinger, uniform_grid};
use floquet_cavity::floquet::find_cdt_amplitude;
use floquet_cavity::nonmarkov::{dephasing_coefficient, integrate_nz_with, propagate_us};
use floquet_cavity::phonon::{bath_correlators, bath_correlators_auto, tau_grid};
use floquet_cavity::*;
use std::f64::consts::TAU;

const G: f64 = TAU * 8.0;
const OMEGA: f64 = TAU * 50.0;
const PERIOD: f64 = TAU / OMEGA;

fn paper_window() -> ModulationProtocol {
    let w = SwitchWindow::new(10.0 * PERIOD, 20.0 * PERIOD, PERIOD).unwrap();
    ModulationProtocol::new(find_cdt_amplitude(1.0), OMEGA, vec![w], Scheme::FloquetCosine).unwrap()
}

fn bath_at(temperature: f64) -> BathCorrelations {
    bath_correlators(&PhononParams::new(0.06, 1.0, temperature).unwrap(), &tau_grid(10.0, 0.01)).unwrap()
}

fn run(bath: &BathCorrelations, cfg: &KernelConfig, opts: &NzOptions, t_end: f64) -> OpenTrajectory {
    let grid = uniform_grid(0.0, t_end, PERIOD / 40.0).unwrap();
    let params = SystemParams::closed(G).unwrap();
    integrate_nz_with(DensityMatrix::basis(0), &paper_window(), &params, bath, cfg, &grid, opts).unwrap()
}

fn unit_b() -> NzOptions {
    NzOptions { system_b_avg: Some(1.0), ..Default::default() }
}

#[test]
fn half_nanosecond_run_keeps_trace() {
    let bath = bath_at(4.0);
    let tr = run(&bath, &KernelConfig::for_bath(&bath), &NzOptions::default(), 0.5);
    assert!(tr.max_trace_drift < 1e-6, "{}", tr.max_trace_drift);
    assert!(tr.max_hermiticity_defect < 1e-8);
    assert!(tr.min_eigenvalue > -1e-4);
    assert!(tr.max_unitarity_defect < 1e-8);
}

#[test]
fn doubling_memory_cutoff_is_converged() {
    let bath = bath_at(4.0);
    let cfg = KernelConfig::for_bath(&bath);
    let wide = KernelConfig { memory_cutoff: 2.0 * cfg.memory_cutoff, ..cfg };
    let a = run(&bath, &cfg, &unit_b(), 0.3);
    let b = run(&bath, &wide, &unit_b(), 0.3);
    let d = (a.rho.last().unwrap().rho21() - b.rho.last().unwrap().rho21()).norm();
    assert!(d < 1e-4, "{d}");
}

#[test]
fn markov_substitution_is_a_small_change() {
    let bath = bath_at(4.0);
    let cfg = KernelConfig::for_bath(&bath);
    let nm = run(&bath, &cfg, &unit_b(), 0.5);
    let mk = run(&bath, &cfg, &NzOptions { mode: MemoryMode::MarkovSubstituted, ..unit_b() }, 0.5);
    let (pa, pb) = (nm.cavity_population(), mk.cavity_population());
    let scale = pa.iter().cloned().fold(0.0, f64::max);
    let worst = pa.iter().zip(&pb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 0.05 * scale, "{worst}");
    let (ra, rb) = (nm.rho.last().unwrap().rho21(), mk.rho.last().unwrap().rho21());
    assert!((ra - rb).norm() < 0.05 * ra.norm());
}

#[test]
fn uncoupled_bath_reproduces_closed_system() {
    let params = SystemParams::closed(G).unwrap();
    let grid = uniform_grid(0.0, 0.45, PERIOD / 40.0).unwrap();
    let bath = BathCorrelations::vanishing(10.0, 0.01);
    let open = integrate_nz_with(
        DensityMatrix::basis(0),
        &paper_window(),
        &params,
        &bath,
        &KernelConfig::default(),
        &grid,
        &NzOptions::default(),
    )
    .unwrap();
    let closed = propagate_schrodinger(PureState::excited(), &paper_window(), &params, &grid).unwrap();
    let worst = open
        .rho
        .iter()
        .zip(&closed.states)
        .map(|(r, s)| (r.cavity_population() - s.cavity_population()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

/// Kernel-window integral of the dephasing coefficient at time `t`.
fn integrated_rate(protocol: &ModulationProtocol, bath: &BathCorrelations, t: f64) -> f64 {
    let params = SystemParams::closed(G).unwrap();
    let cutoff = KernelConfig::for_bath(bath).memory_cutoff * 1e-3;
    let h = 2e-5;
    let n = (cutoff / h).round() as usize;
    let mut sum = 0.0;
    for k in 0..=n {
        let tau = k as f64 * h;
        let u = propagate_us(protocol, &params, 1.0, t - tau, t, PERIOD / 200.0).unwrap();
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        sum += w * h * dephasing_coefficient(&u, bath, G, t, t - tau);
    }
    sum
}

#[test]
fn modulation_leaves_the_dephasing_rate_unchanged() {
    let bath = bath_at(4.0);
    let t = 15.0 * PERIOD;
    let modulated = integrated_rate(&paper_window(), &bath, t);
    let flat = integrated_rate(&ModulationProtocol::unmodulated(OMEGA), &bath, t);
    assert!((modulated - flat).abs() < 0.1 * flat.abs(), "{modulated} vs {flat}");
}

#[test]
fn warmer_baths_damp_harder() {
    let params = SystemParams::new(G, 4.0, 1.0).unwrap();
    let grid = uniform_grid(0.0, 0.3, PERIOD / 40.0).unwrap();
    let flat = ModulationProtocol::unmodulated(OMEGA);
    let mut last = f64::INFINITY;
    for temperature in [0.0, 4.0, 10.0] {
        let bath = bath_correlators_auto(&PhononParams::new(0.06, 1.0, temperature).unwrap()).unwrap();
        let cfg = KernelConfig::for_bath(&bath);
        let tr = integrate_nz_with(DensityMatrix::basis(0), &flat, &params, &bath, &cfg, &grid, &unit_b()).unwrap();
        let pop = tr.cavity_population();
        let tail = &pop[pop.len() / 2..];
        let swing = tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min);
        assert!(swing < last, "T = {temperature}: {swing} vs {last}");
        last = swing;
    }
}
