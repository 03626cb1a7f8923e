//! Small dense 3x3 complex matrices for the three-level master equation.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::ode::OdeState;
use crate::scalar::{lit, Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T>(pub [[Cplx<T>; 3]; 3]);

impl<T: Real> Mat3<T> {
    pub fn zero() -> Self {
        Self([[Cplx::new(T::zero(), T::zero()); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = Cplx::new(T::one(), T::zero());
        }
        m
    }

    /// `|i><j|` with zero-based indices.
    pub fn unit(i: usize, j: usize) -> Self {
        let mut m = Self::zero();
        m.0[i][j] = Cplx::new(T::one(), T::zero());
        m
    }

    pub fn from_real_diag(d: [T; 3]) -> Self {
        let mut m = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = Cplx::new(v, T::zero());
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.0[i][j]
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Cplx<T> {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z = *z * s);
        m
    }

    pub fn scale_re(&self, s: T) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z = *z * s);
        m
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: Cplx<T>, other: &Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] = self.0[i][j] + other.0[i][j] * s;
            }
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().flatten().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// `max |A - A^dag|` over elements.
    pub fn hermiticity_defect(&self) -> T {
        (*self - self.adjoint()).max_abs()
    }

    /// `max |U^dag U - I|` over elements.
    pub fn unitarity_defect(&self) -> T {
        (self.adjoint() * *self - Self::identity()).max_abs()
    }

    /// Eigenvalues of the Hermitian part, ascending (trigonometric closed form).
    pub fn hermitian_eigenvalues(&self) -> [T; 3] {
        let half = lit::<T>(0.5);
        let h = (*self + self.adjoint()).scale_re(half);
        let a = h.0[0][0].re;
        let b = h.0[1][1].re;
        let c = h.0[2][2].re;
        let d = h.0[0][1];
        let e = h.0[1][2];
        let f = h.0[0][2];
        let p1 = d.norm_sqr() + e.norm_sqr() + f.norm_sqr();
        let three = lit::<T>(3.0);
        let q = (a + b + c) / three;
        let p2 = (a - q).powi(2) + (b - q).powi(2) + (c - q).powi(2) + lit::<T>(2.0) * p1;
        if p2 <= T::epsilon() * T::epsilon() {
            return [q, q, q];
        }
        let p = (p2 / lit(6.0)).sqrt();
        // B = (H - q I) / p, r = det(B) / 2
        let bm = (h - Self::identity().scale_re(q)).scale_re(T::one() / p);
        let r = (bm.det().re * half).max(-T::one()).min(T::one());
        let phi = r.acos() / three;
        let two = lit::<T>(2.0);
        let e1 = q + two * p * phi.cos();
        let e3 = q + two * p * (phi + two * T::PI() / three).cos();
        let e2 = three * q - e1 - e3;
        let mut out = [e1, e2, e3];
        out.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        out
    }

    pub fn det(&self) -> Cplx<T> {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] = self.0[i][j] + o.0[i][j];
            }
        }
        self
    }
}

impl<T: Real> AddAssign for Mat3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] = self.0[i][j] - o.0[i][j];
            }
        }
        self
    }
}

impl<T: Real> Neg for Mat3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::zero() - self
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        m
    }
}

impl<T: Real> OdeState<T> for Mat3<T> {
    fn axpy(&self, a: T, other: &Self) -> Self {
        let mut m = *self;
        m.add_scaled(Cplx::new(a, T::zero()), other);
        m
    }
}
