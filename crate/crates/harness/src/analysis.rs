//! Post-processing shared by scans, presets and the acceptance checks.

use std::f64::consts::PI;

use floquet_cavity::dynamics::{propagate_schrodinger, uniform_grid, max_grid_step};
use floquet_cavity::{ModulationProtocol, PureState, Result, SwitchWindow, SystemParams, Trajectory};

/// Interior local extrema of `y` at or after index `from`.
pub fn extrema(y: &[f64], from: usize) -> Vec<usize> {
    if y.len() < 3 {
        return Vec::new();
    }
    (from.max(1)..y.len() - 1)
        .filter(|&i| (y[i] - y[i - 1]) * (y[i + 1] - y[i]) < 0.0)
        .collect()
}

/// Sub-sample position of the extremum at `i` from a parabola through three
/// neighbours (uniform spacing assumed).
pub fn refine_extremum(t: &[f64], y: &[f64], i: usize) -> f64 {
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let den = a - 2.0 * b + c;
    if den == 0.0 {
        return t[i];
    }
    t[i] + 0.5 * (t[i + 1] - t[i]) * (a - c) / den
}

/// Refined extremum times of `y` after `t_from`.
pub fn extremum_times(t: &[f64], y: &[f64], t_from: f64) -> Vec<f64> {
    let from = t.partition_point(|&x| x < t_from);
    extrema(y, from).into_iter().map(|i| refine_extremum(t, y, i)).collect()
}

/// Peak-to-trough swing of `y` over `[t_a, t_b]`.
pub fn swing(t: &[f64], y: &[f64], t_a: f64, t_b: f64) -> f64 {
    let (lo, hi) = t
        .iter()
        .zip(y)
        .filter(|(x, _)| **x >= t_a && **x <= t_b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| (lo.min(v), hi.max(v)));
    if hi >= lo { hi - lo } else { f64::NAN }
}

/// Period of a uniformly sampled oscillating sequence.
///
/// Uses the normalised mismatch `D(L) = mean (y(i + L) - y(i))^2 / (2 var y)`,
/// which is near 1 for unrelated samples and near 0 at a period. Lags are
/// scanned in twentieths of a sample with `y(i + L)` linearly interpolated,
/// so periods that are not a whole number of samples are still found. The
/// first local minimum below `0.02` is refined by a parabola through its
/// neighbours. Returns the period in units of `dx`.
pub fn fit_period(y: &[f64], dx: f64) -> Option<f64> {
    const SUB: f64 = 0.05;
    let n = y.len();
    if n < 8 {
        return None;
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return None;
    }
    let d = |lag: f64| -> f64 {
        let k = lag.floor() as usize;
        let frac = lag - k as f64;
        let m = n - k - 1;
        (0..m)
            .map(|i| (y[i + k] + frac * (y[i + k + 1] - y[i + k]) - y[i]).powi(2))
            .sum::<f64>()
            / m as f64
            / (2.0 * var)
    };
    let steps = ((n / 2) as f64 / SUB) as usize;
    let lags: Vec<f64> = (0..=steps).map(|s| d(s as f64 * SUB)).collect();
    for k in 1..lags.len() - 1 {
        if lags[k] < 0.02 && lags[k] <= lags[k - 1] && lags[k] <= lags[k + 1] {
            let (a, b, c) = (lags[k - 1], lags[k], lags[k + 1]);
            let den = a - 2.0 * b + c;
            let shift = if den > 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            return Some((k as f64 + shift) * SUB * dx);
        }
    }
    None
}

/// Time lag of the resonant Rabi rotation behind the unmodulated one, read
/// from the unwrapped x-rotation angle at the end of `traj`.
pub fn restart_lag(traj: &Trajectory) -> f64 {
    let rot = traj.unwrapped_rotation();
    let i = traj.len() - 1;
    traj.grid[i] - rot[i] / (2.0 * traj.params.g)
}

/// Moves the last window's `t_on` so that the closed-system restart lag is
/// a whole number of population periods `pi / g`. Post-reactivation extrema
/// then coincide with the unmodulated reference.
pub fn align_last_window(protocol: &ModulationProtocol, params: &SystemParams) -> Result<ModulationProtocol> {
    let half = PI / params.g;
    let mut p = protocol.clone();
    for _ in 0..6 {
        let w = *p.windows.last().expect("at least one window");
        let end = w.t_on + 6.0 * w.sigma_t + half;
        let grid = uniform_grid(0.0, end, max_grid_step(&p, params))?;
        let tr = propagate_schrodinger(PureState::excited(), &p, params, &grid)?;
        let lag = restart_lag(&tr);
        let r = lag - (lag / half).round() * half;
        if r.abs() < 1e-9 {
            break;
        }
        let last = p.windows.len() - 1;
        p.windows[last] = SwitchWindow::new(w.t_off, w.t_on - r, w.sigma_t)?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use floquet_cavity::Scheme;
    use std::f64::consts::TAU;

    #[test]
    fn extrema_of_a_sine() {
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|x| (x * 3.0f64).sin()).collect();
        let ex = extremum_times(&t, &y, 0.0);
        for (k, e) in ex.iter().enumerate() {
            let want = (PI / 2.0 + k as f64 * PI) / 3.0;
            assert!((e - want).abs() < 1e-5, "{e} vs {want}");
        }
        assert!((swing(&t, &y, 0.0, 3.0) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn period_of_noisy_cosine() {
        let dx = 0.02;
        let y: Vec<f64> = (0..300)
            .map(|i| {
                let x = i as f64 * dx;
                0.95 + 0.04 * (TAU * x / 0.4122).cos() + 1e-4 * ((i * 7919) % 13) as f64 / 13.0
            })
            .collect();
        let p = fit_period(&y, dx).unwrap();
        assert!((p - 0.4122).abs() < 0.004, "{p}");
        assert!(fit_period(&[1.0; 50], dx).is_none());
        // a period of 20.6 samples whose half-period copy differs in depth
        let y: Vec<f64> = (0..200)
            .map(|i| {
                let x = TAU * i as f64 / 20.6;
                (2.0 * x).cos() + 0.3 * x.cos()
            })
            .collect();
        let p = fit_period(&y, 1.0).unwrap();
        assert!((p - 20.6).abs() < 0.05, "{p}");
    }

    #[test]
    fn aligned_window_restarts_on_the_reference_beat() {
        let g = TAU * 8.0;
        let omega = TAU * 50.0;
        let params = SystemParams::closed(g).unwrap();
        let w = SwitchWindow::new(0.2, 0.4, 0.02).unwrap();
        let p = ModulationProtocol::new(floquet_cavity::floquet::find_cdt_amplitude(1.0), omega, vec![w], Scheme::FloquetCosine).unwrap();
        let a = align_last_window(&p, &params).unwrap();
        let t_on = a.windows[0].t_on;
        assert!((t_on - 0.404672).abs() < 5e-6, "{t_on}");
    }
}
