//! The three laws of a cycle: time to damage `Y^s ~ Γ(n, μ)` (rate parameterization,
//! mean `n/μ`), damage-to-failure time `Y^d ~ Exp(λ)`, and the gap `C` between
//! consecutive inspections.

use rand::Rng;
use rand_distr::{Distribution, Exp, Uniform};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::{binomial, factorial, Real};
use crate::special::{phi, psi};

/// Highest derivative order [`InspectionLaw::laplace_jet`] hands out by default.
pub const DEFAULT_ORDER_CAP: usize = 8;

/// Largest supported gamma shape. Moment formulas need `L^(n+1)` plus one more order
/// for sensitivities, which must stay under [`DEFAULT_ORDER_CAP`].
pub const MAX_SHAPE: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaneLaw<T> {
    shape: u32,
    rate: T,
}

impl<T: Real> SaneLaw<T> {
    pub fn new(shape: u32, rate: T) -> Result<Self> {
        if shape == 0 || shape > MAX_SHAPE {
            return Err(Error::InvalidLaw(format!(
                "gamma shape must lie in 1..={MAX_SHAPE}, got {shape}"
            )));
        }
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(Error::InvalidLaw(format!(
                "gamma rate must be positive and finite, got {rate}"
            )));
        }
        let law = Self { shape, rate };
        // absolutely continuous: no mass at zero, so Y^s > 0 almost surely
        debug_assert!(law.survival(T::zero()) == T::one());
        Ok(law)
    }

    pub fn shape(&self) -> u32 {
        self.shape
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn with_rate(&self, rate: T) -> Result<Self> {
        Self::new(self.shape, rate)
    }

    pub fn with_shape(&self, shape: u32) -> Result<Self> {
        Self::new(shape, self.rate)
    }

    pub fn mean(&self) -> T {
        T::from_usize_lossy(self.shape as usize) / self.rate
    }

    /// `R_s(t) = Σ_{i<n} (μt)^i/i! · e^{-μt}`.
    pub fn survival(&self, t: T) -> T {
        if t <= T::zero() {
            return T::one();
        }
        let x = self.rate * t;
        let mut term = T::one();
        let mut sum = T::one();
        for i in 1..self.shape as usize {
            term = term * x / T::from_usize_lossy(i);
            sum += term;
        }
        (sum * (-x).exp()).min(T::one())
    }

    pub fn cdf(&self, t: T) -> T {
        T::one() - self.survival(t)
    }

    pub fn density(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        let n = self.shape as usize;
        self.rate.powi(n as i32) * t.powi(n as i32 - 1) * (-self.rate * t).exp()
            / factorial::<T>(n - 1)
    }
}

impl SaneLaw<f64> {
    /// Sum of `n` exponential draws; exact for integer shape.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let exp = Exp::new(self.rate).expect("validated rate");
        (0..self.shape).map(|_| exp.sample(rng)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamageLaw<T> {
    rate: T,
}

impl<T: Real> DamageLaw<T> {
    pub fn new(rate: T) -> Result<Self> {
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(Error::InvalidLaw(format!(
                "damage rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn mean(&self) -> T {
        T::one() / self.rate
    }

    pub fn survival(&self, t: T) -> T {
        if t <= T::zero() {
            T::one()
        } else {
            (-self.rate * t).exp()
        }
    }

    pub fn cdf(&self, t: T) -> T {
        T::one() - self.survival(t)
    }

    pub fn density(&self, t: T) -> T {
        if t < T::zero() {
            T::zero()
        } else {
            self.rate * (-self.rate * t).exp()
        }
    }
}

impl DamageLaw<f64> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Exp::new(self.rate).expect("validated rate").sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InspectionLaw<T> {
    /// Every gap equals `c`.
    Deterministic { c: T },
    /// Gaps uniform on `[c - h, c + h]`, `0 < h < c`.
    Uniform { c: T, h: T },
}

impl<T: Real> InspectionLaw<T> {
    pub fn deterministic(c: T) -> Result<Self> {
        let law = Self::Deterministic { c };
        law.validate()?;
        Ok(law)
    }

    pub fn uniform(c: T, h: T) -> Result<Self> {
        let law = Self::Uniform { c, h };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.c();
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidLaw(format!(
                "inspection period must be positive and finite, got {c}"
            )));
        }
        if let Self::Uniform { h, .. } = *self {
            if !(h > T::zero() && h < c) {
                return Err(Error::InvalidLaw(format!(
                    "uniform half-width must satisfy 0 < h < c, got h = {h}, c = {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn c(&self) -> T {
        match *self {
            Self::Deterministic { c } | Self::Uniform { c, .. } => c,
        }
    }

    /// Half-width of the support; zero for deterministic gaps.
    pub fn h(&self) -> T {
        match *self {
            Self::Deterministic { .. } => T::zero(),
            Self::Uniform { h, .. } => h,
        }
    }

    pub fn mean(&self) -> T {
        self.c()
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::Deterministic { .. })
    }

    /// `P(C ≤ t)`.
    pub fn cdf(&self, t: T) -> T {
        match *self {
            Self::Deterministic { c } => {
                if t >= c {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::Uniform { c, h } => ((t - (c - h)) / (h + h)).max(T::zero()).min(T::one()),
        }
    }

    /// `L(s) = E[e^{-sC}]`.
    pub fn laplace(&self, s: T) -> T {
        match *self {
            Self::Deterministic { c } => (-s * c).exp(),
            Self::Uniform { c, h } => {
                let x = s * h;
                if x.abs() < T::lit(1e-4) {
                    // sinh(x)/x = 1 + x²/6 + x⁴/120 + …
                    let x2 = x * x;
                    (-s * c).exp() * (T::one() + x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0))
                } else if x < T::one() {
                    (-s * c).exp() * x.sinh() / x
                } else {
                    ((-s * (c - h)).exp() - (-s * (c + h)).exp()) / (x + x)
                }
            }
        }
    }

    /// Raw derivatives `L(s), L'(s), …, L^(order)(s)` with the default cap.
    pub fn laplace_jet(&self, s: T, order: usize) -> Result<Jet<T>> {
        self.laplace_jet_capped(s, order, DEFAULT_ORDER_CAP)
    }

    pub fn laplace_jet_capped(&self, s: T, order: usize, cap: usize) -> Result<Jet<T>> {
        if order > cap {
            return Err(Error::OrderCap {
                requested: order,
                cap,
            });
        }
        if s < T::zero() || (s == T::zero() && order > 0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Laplace jet needs s > 0 (s = 0 only at order 0), got s = {s}, order {order}"
            )));
        }
        if s == T::zero() {
            return Ok(Jet::constant(T::one(), 0));
        }
        let derivs = match *self {
            Self::Deterministic { c } => {
                let e = (-s * c).exp();
                (0..=order).map(|i| (-c).powi(i as i32) * e).collect()
            }
            Self::Uniform { c, h } => uniform_laplace_derivatives(s, c, h, order),
        };
        Ok(Jet::from_derivatives(derivs))
    }
}

/// Derivatives of `e^{-sc} · sinh(sh)/(sh)`.
///
/// With `Φ(x) = sinh(x)/x = ∫₀¹ cosh(xt) dt`, `Φ^(k)(x) = ∫₀¹ tᵏ cosh^(k)(xt) dt`, which
/// splits into the one-sided moments `φ_k(±x)`. Scaling the growing half by
/// `e^{-sc}` up front keeps every term bounded, so large `sh` neither overflows nor
/// cancels. Leibniz then combines it with `(e^{-sc})^(j) = (-c)^j e^{-sc}`.
fn uniform_laplace_derivatives<T: Real>(s: T, c: T, h: T, order: usize) -> Vec<T> {
    let x = s * h;
    let near = (-s * (c - h)).exp();
    let far = (-s * c).exp();
    let half = T::lit(0.5);
    // e_k = e^{-sc} Φ^(k)(x)
    let e: Vec<T> = (0..=order)
        .map(|k| {
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            half * (near * psi(k, x) + sign * far * phi(k, x))
        })
        .collect();
    (0..=order)
        .map(|i| {
            (0..=i).fold(T::zero(), |acc, k| {
                acc + binomial::<T>(i, k) * (-c).powi((i - k) as i32) * h.powi(k as i32) * e[k]
            })
        })
        .collect()
}

impl InspectionLaw<f64> {
    pub fn sample_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Deterministic { c } => c,
            Self::Uniform { c, h } => Uniform::new_inclusive(c - h, c + h)
                .expect("validated support")
                .sample(rng),
        }
    }
}
