//! Gauss-Legendre quadrature with adaptive panel bisection.

use std::ops::{Add, Mul, Sub};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{lit, Cplx, Real};

/// Values that can be accumulated by the integrator.
pub trait QuadValue<T>:
    Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self>
{
    fn magnitude(self) -> T;
}

impl<T: Real> QuadValue<T> for T {
    fn magnitude(self) -> T {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Cplx<T> {
    fn magnitude(self) -> T {
        self.norm()
    }
}

/// Fixed-order Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the `n`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let one = T::one();
        let two = lit::<T>(2.0);
        let nf = lit::<T>(n as f64);
        let eps = T::epsilon() * lit(4.0);
        for i in 0..n.div_ceil(2) {
            let mut x = (T::PI() * (lit::<T>(i as f64) + lit(0.75)) / (nf + lit(0.5))).cos();
            let mut dp = one;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= eps {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = two / ((one - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<V, F>(&self, f: &F, a: T, b: T) -> V
    where
        V: QuadValue<T>,
        F: Fn(T) -> V,
    {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        let mut acc = V::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * w;
        }
        acc * half
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = lit::<T>(k as f64);
        let p2 = ((lit::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = lit::<T>(n as f64);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Absolute and relative acceptance thresholds for [`AdaptiveQuad`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
}

/// Adaptive integrator comparing an 8-point and a 16-point rule per panel.
#[derive(Debug, Clone)]
pub struct AdaptiveQuad<T> {
    coarse: GaussLegendre<T>,
    fine: GaussLegendre<T>,
    max_depth: usize,
}

impl<T: Real> Default for AdaptiveQuad<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> AdaptiveQuad<T> {
    pub fn new() -> Self {
        Self {
            coarse: GaussLegendre::new(8),
            fine: GaussLegendre::new(16),
            max_depth: 48,
        }
    }

    /// Integrates `f` over `[a, b]`, pre-splitting into `panels` equal pieces.
    ///
    /// A panel is accepted when the two rules agree to within
    /// `max(tol.abs * width / (b - a), tol.rel * |fine|)`.
    pub fn integrate<V, F>(&self, f: F, a: T, b: T, panels: usize, tol: Tolerance<T>) -> Result<V>
    where
        V: QuadValue<T>,
        F: Fn(T) -> V,
    {
        if a == b {
            return Ok(V::zero());
        }
        let span = (b - a).abs();
        let panels = panels.max(1);
        let width = (b - a) / lit(panels as f64);
        let mut total = V::zero();
        let mut stack: Vec<(T, T, usize)> = Vec::with_capacity(64);
        for p in (0..panels).rev() {
            let lo = a + width * lit(p as f64);
            let hi = if p + 1 == panels { b } else { lo + width };
            stack.push((lo, hi, 0));
        }
        while let Some((lo, hi, depth)) = stack.pop() {
            let coarse: V = self.coarse.integrate(&f, lo, hi);
            let fine: V = self.fine.integrate(&f, lo, hi);
            let err = (fine - coarse).magnitude();
            let allowed = (tol.abs * (hi - lo).abs() / span).max(tol.rel * fine.magnitude());
            if err <= allowed || (hi - lo).abs() <= span * T::epsilon() * lit(64.0) {
                total = total + fine;
            } else if depth >= self.max_depth {
                return Err(Error::Quadrature(format!(
                    "panel [{lo}, {hi}] unresolved after {depth} bisections"
                )));
            } else {
                let mid = (lo + hi) * lit(0.5);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        Ok(total)
    }
}
