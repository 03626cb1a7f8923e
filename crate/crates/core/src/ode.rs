//! Classic fourth-order Runge-Kutta stepping for linear-space states.

use crate::scalar::{lit, Real};

/// State vectors the integrator can combine linearly.
pub trait OdeState<T>: Clone {
    /// `self + a * other`
    fn axpy(&self, a: T, other: &Self) -> Self;
}

/// Advances `y` from `t` to `t + h` with one RK4 step of `dy/dt = f(t, y)`.
pub fn rk4_step<T, S, F>(f: &mut F, t: T, h: T, y: &S) -> S
where
    T: Real,
    S: OdeState<T>,
    F: FnMut(T, &S) -> S,
{
    let half = h * lit(0.5);
    let k1 = f(t, y);
    let k2 = f(t + half, &y.axpy(half, &k1));
    let k3 = f(t + half, &y.axpy(half, &k2));
    let k4 = f(t + h, &y.axpy(h, &k3));
    let sixth = h / lit(6.0);
    let third = h / lit(3.0);
    y.axpy(sixth, &k1)
        .axpy(third, &k2)
        .axpy(third, &k3)
        .axpy(sixth, &k4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone)]
    struct Scalar(f64);

    impl OdeState<f64> for Scalar {
        fn axpy(&self, a: f64, other: &Self) -> Self {
            Scalar(self.0 + a * other.0)
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let run = |h: f64| {
            let mut y = Scalar(1.0);
            let mut t = 0.0;
            let mut f = |t: f64, y: &Scalar| Scalar(-2.0 * t * y.0);
            while t < 1.0 - 1e-12 {
                y = rk4_step(&mut f, t, h, &y);
                t += h;
            }
            (y.0 - (-1.0f64).exp()).abs()
        };
        let ratio = run(0.02) / run(0.01);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }
}
