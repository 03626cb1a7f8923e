//! Special functions: Bessel functions of the first kind and Dawson's integral.

use crate::quad::{AdaptiveQuad, Tolerance};
use crate::scalar::{lit, Real};

/// Bessel function of the first kind `J_n(x)` for integer order.
///
/// Evaluated from the ascending power series, summed until the terms drop
/// below machine precision relative to the running sum. Accuracy degrades
/// through cancellation for `|x|` well above 12; callers that need a
/// guaranteed error bound go through [`crate::floquet::fourier_coeff`].
pub fn bessel_j<T: Real>(n: i32, x: T) -> T {
    let order = n.unsigned_abs() as usize;
    let sign = if n < 0 && order % 2 == 1 { -T::one() } else { T::one() };
    if x == T::zero() {
        return if order == 0 { T::one() } else { T::zero() };
    }
    let half = x * lit(0.5);
    let mut term = T::one();
    for k in 1..=order {
        term = term * half / lit(k as f64);
    }
    let q = half * half;
    let mut sum = term;
    let mut biggest = term.abs();
    let mut k = 0usize;
    loop {
        k += 1;
        term = -term * q / (lit::<T>(k as f64) * lit::<T>((k + order) as f64));
        sum += term;
        biggest = biggest.max(term.abs());
        let past_peak = lit::<T>(k as f64) > half.abs();
        if past_peak && term.abs() <= T::epsilon() * biggest.max(sum.abs()) * lit(1e-3) {
            break;
        }
        if term == T::zero() || k > 500 {
            break;
        }
    }
    sign * sum
}

/// Dawson's integral `D(x) = exp(-x^2) * integral_0^x exp(t^2) dt`.
///
/// Evaluated by adaptive Gauss-Legendre on the equivalent form
/// `integral_0^x exp(-s (2x - s)) ds`, which never overflows.
pub fn dawson<T: Real>(x: T) -> T {
    if x == T::zero() {
        return T::zero();
    }
    let ax = x.abs();
    let q = AdaptiveQuad::<T>::new();
    let tol = Tolerance {
        abs: T::epsilon() * lit(10.0),
        rel: T::epsilon() * lit(10.0),
    };
    let two = lit::<T>(2.0);
    let v: T = q
        .integrate(|s: T| (-(s * (two * ax - s))).exp(), T::zero(), ax, 4, tol)
        .unwrap_or_else(|_| T::one() / (two * ax));
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// Imaginary error function `erfi(x) = 2/sqrt(pi) * exp(x^2) * D(x)`.
pub fn erfi<T: Real>(x: T) -> T {
    lit::<T>(2.0) / T::PI().sqrt() * (x * x).exp() * dawson(x)
}
