//! Truncated univariate Taylor arithmetic.
//!
//! A [`Jet`] holds the raw derivatives `f(x0), f'(x0), …, f^(k)(x0)` of a scalar function
//! at an implicit expansion point. Arithmetic combines jets that share the same
//! perturbation variable: products use the Leibniz rule and quotients the matching
//! recurrence, so every coefficient is exact up to rounding, with no step-size
//! parameter anywhere.
//!
//! Coefficients are stored unscaled (no `1/k!`), which keeps closed forms such as
//! `(-c)^i e^{-sc}` bit-reproducible when a jet is seeded from them.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{binomial, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    derivs: Vec<T>,
}

impl<T: Real> Jet<T> {
    /// Jet of a function with the given derivatives; the order is `derivs.len() - 1`.
    ///
    /// # Panics
    /// If `derivs` is empty.
    pub fn from_derivatives(derivs: Vec<T>) -> Self {
        assert!(!derivs.is_empty(), "a jet needs at least its value");
        Self { derivs }
    }

    /// The constant function `value`, truncated at `order`.
    pub fn constant(value: T, order: usize) -> Self {
        let mut derivs = vec![T::zero(); order + 1];
        derivs[0] = value;
        Self { derivs }
    }

    /// The identity `x ↦ x` expanded at `at`.
    pub fn variable(at: T, order: usize) -> Self {
        let mut derivs = vec![T::zero(); order + 1];
        derivs[0] = at;
        if order >= 1 {
            derivs[1] = T::one();
        }
        Self { derivs }
    }

    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn value(&self) -> T {
        self.derivs[0]
    }

    /// `f^(i)(x0)`.
    pub fn derivative(&self, i: usize) -> T {
        self.derivs[i]
    }

    pub fn derivatives(&self) -> &[T] {
        &self.derivs
    }

    /// Keeps derivatives up to `order`.
    ///
    /// # Panics
    /// If `order` exceeds the current order.
    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot extend a jet by truncation");
        Self {
            derivs: self.derivs[..=order].to_vec(),
        }
    }

    /// Jet of the `k`-th derivative `f^(k)`, of order `self.order() - k`.
    pub fn shift(&self, k: usize) -> Self {
        assert!(k <= self.order(), "shift beyond jet order");
        Self {
            derivs: self.derivs[k..].to_vec(),
        }
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            derivs: self.derivs.iter().map(|&d| d * factor).collect(),
        }
    }

    /// `a - f`, the common `1 - L` pattern.
    pub fn rsub_scalar(&self, a: T) -> Self {
        let mut out = -self;
        out.derivs[0] += a;
        out
    }

    pub fn add_scalar(&self, a: T) -> Self {
        let mut out = self.clone();
        out.derivs[0] += a;
        out
    }

    /// `1 / f`.
    ///
    /// Follows from `f · q = 1` differentiated with the Leibniz rule.
    pub fn recip(&self) -> Self {
        let order = self.order();
        let mut q = vec![T::zero(); order + 1];
        let f0 = self.derivs[0];
        q[0] = T::one() / f0;
        for k in 1..=order {
            let mut acc = T::zero();
            for j in 1..=k {
                acc += binomial::<T>(k, j) * self.derivs[j] * q[k - j];
            }
            q[k] = -acc / f0;
        }
        Self { derivs: q }
    }

    pub fn powi(&self, exponent: u32) -> Self {
        let mut out = Self::constant(T::one(), self.order());
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    /// Evaluates the polynomial `Σ coeffs[i] · x^i` at the jet `x` (Horner).
    pub fn polyval(x: &Self, coeffs: &[Self]) -> Self {
        let mut acc = Self::constant(T::zero(), x.order());
        for c in coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    fn check_order(&self, other: &Self) {
        assert_eq!(
            self.order(),
            other.order(),
            "jets combined at different truncation orders"
        );
    }
}

impl<T: Real> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: &Jet<T>) -> Jet<T> {
        self.check_order(rhs);
        Jet {
            derivs: self
                .derivs
                .iter()
                .zip(&rhs.derivs)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: &Jet<T>) -> Jet<T> {
        self.check_order(rhs);
        Jet {
            derivs: self
                .derivs
                .iter()
                .zip(&rhs.derivs)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl<T: Real> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &Jet<T>) -> Jet<T> {
        self.check_order(rhs);
        let order = self.order();
        let derivs = (0..=order)
            .map(|k| {
                (0..=k).fold(T::zero(), |acc, j| {
                    acc + binomial::<T>(k, j) * self.derivs[j] * rhs.derivs[k - j]
                })
            })
            .collect();
        Jet { derivs }
    }
}

impl<T: Real> Div for &Jet<T> {
    type Output = Jet<T>;
    fn div(self, rhs: &Jet<T>) -> Jet<T> {
        self.check_order(rhs);
        // q = f / g  ⇔  q^(k) = (f^(k) - Σ_{j≥1} C(k,j) g^(j) q^(k-j)) / g
        let order = self.order();
        let g0 = rhs.derivs[0];
        let mut q = vec![T::zero(); order + 1];
        for k in 0..=order {
            let mut acc = self.derivs[k];
            for j in 1..=k {
                acc -= binomial::<T>(k, j) * rhs.derivs[j] * q[k - j];
            }
            q[k] = acc / g0;
        }
        Jet { derivs: q }
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        Jet {
            derivs: self.derivs.iter().map(|&d| -d).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl<T: Real> $tr for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Real> $tr<&Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                (&self).$method(rhs)
            }
        }
        impl<T: Real> $tr<Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl<T: Real> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_jet(x: f64, order: usize) -> Jet<f64> {
        Jet::from_derivatives(vec![x.exp(); order + 1])
    }

    #[test]
    fn geometric_series_derivatives() {
        // 1/(1-x) at 0 has k-th derivative k!
        let x = Jet::variable(0.0, 5);
        let q = x.rsub_scalar(1.0).recip();
        let mut fact = 1.0;
        for k in 0..=5 {
            if k > 0 {
                fact *= k as f64;
            }
            assert_relative_eq!(q.derivative(k), fact, max_relative = 1e-14);
        }
    }

    #[test]
    fn product_of_exponentials() {
        // e^x · e^x = e^{2x}: k-th derivative 2^k e^{2x}
        let x0 = 0.3;
        let p = &exp_jet(x0, 4) * &exp_jet(x0, 4);
        for k in 0..=4 {
            assert_relative_eq!(
                p.derivative(k),
                2f64.powi(k as i32) * (2.0 * x0).exp(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn quotient_matches_recip_product() {
        let a = Jet::from_derivatives(vec![1.3, -0.2, 0.7, 2.0]);
        let b = Jet::from_derivatives(vec![0.4, 1.1, -0.5, 0.25]);
        let q1 = &a / &b;
        let q2 = &a * &b.recip();
        for k in 0..=3 {
            assert_relative_eq!(q1.derivative(k), q2.derivative(k), max_relative = 1e-12);
        }
        let back = &q1 * &b;
        for k in 0..=3 {
            assert_relative_eq!(back.derivative(k), a.derivative(k), max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn powi_and_polyval() {
        let x = Jet::variable(2.0, 3);
        let cube = x.powi(3);
        assert_eq!(cube.derivatives(), &[8.0, 12.0, 12.0, 6.0]);
        // 1 + 2x + 3x^2 at x=2: value 17, derivative 2 + 6x = 14, second 6
        let coeffs: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&c| Jet::constant(c, 3))
            .collect();
        let p = Jet::polyval(&x, &coeffs);
        assert_eq!(p.derivatives(), &[17.0, 14.0, 6.0, 0.0]);
    }

    #[test]
    fn shift_is_differentiation() {
        let j = Jet::from_derivatives(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(j.shift(1).derivatives(), &[2.0, 3.0, 4.0]);
        assert_eq!(j.shift(3).order(), 0);
        assert_eq!(j.truncate(1).derivatives(), &[1.0, 2.0]);
    }

    #[test]
    #[should_panic(expected = "different truncation orders")]
    fn mismatched_orders_panic() {
        let _ = &Jet::constant(1.0, 2) + &Jet::constant(1.0, 3);
    }
}
