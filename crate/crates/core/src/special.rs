//! Truncated exponential moments `φ_j(x) = ∫₀¹ tʲ e^{-xt} dt` and the shifted
//! power-exponential integral built from them.
//!
//! `φ_j` is a rescaled regularized lower incomplete gamma function,
//! `φ_j(x) = j!/x^{j+1} · P(j+1, x)`, evaluated through positive-term series or a
//! stable one-sided recurrence so that neither `x → 0` nor `x < 0` cancels.

use crate::scalar::{binomial, factorial, Real};

const MAX_SERIES_TERMS: usize = 2000;

/// `φ_j(x) = ∫₀¹ tʲ e^{-xt} dt` for any real `x` (overflows only when `e^{-x}` does).
pub fn phi<T: Real>(j: usize, x: T) -> T {
    if x < T::zero() {
        let y = -x;
        return y.exp() * psi(j, y);
    }
    if x <= T::lit(30.0) {
        // e^{-x} Σ_m j! x^m / (j+1+m)!, all terms positive
        let mut term = T::one() / T::from_usize_lossy(j + 1);
        let mut sum = term;
        for m in 1..MAX_SERIES_TERMS {
            term = term * x / T::from_usize_lossy(j + 1 + m);
            sum += term;
            if term <= sum * T::epsilon() {
                break;
            }
        }
        (-x).exp() * sum
    } else {
        // j!/x^{j+1} (1 - e^{-x} Σ_{k≤j} x^k/k!), the tail is below e^{-30}·x^j
        let mut tail = T::zero();
        let mut term = T::one();
        for k in 0..=j {
            if k > 0 {
                term = term * x / T::from_usize_lossy(k);
            }
            tail += term;
        }
        factorial::<T>(j) / x.powi(j as i32 + 1) * (T::one() - (-x).exp() * tail)
    }
}

/// `ψ_j(y) = e^{-y} φ_j(-y) = ∫₀¹ tʲ e^{-y(1-t)} dt` for `y ≥ 0`; bounded by `1/(j+1)`.
pub fn psi<T: Real>(j: usize, y: T) -> T {
    debug_assert!(y >= T::zero());
    if y <= T::from_usize_lossy(j + 1) {
        let mut term = T::one();
        let mut sum = T::one() / T::from_usize_lossy(j + 1);
        for m in 1..MAX_SERIES_TERMS {
            term = term * y / T::from_usize_lossy(m);
            let add = term / T::from_usize_lossy(j + m + 1);
            sum += add;
            if add <= sum * T::epsilon() {
                break;
            }
        }
        (-y).exp() * sum
    } else {
        // ψ_k = (1 - k ψ_{k-1}) / y; the error factor k/y stays below one
        let mut p = -(-y).exp_m1() / y;
        for k in 1..=j {
            p = (T::one() - T::from_usize_lossy(k) * p) / y;
        }
        p
    }
}

/// `ln ∫_a^b u^{n-1} e^{-r u} du` for `0 ≤ a < b`, shape `n ≥ 1` and any real rate `r`.
///
/// Expands `(a + v)^{n-1}` binomially so every term is positive; `r = 0` reduces to the
/// polynomial case through `φ_j(0) = 1/(j+1)`.
pub fn ln_power_exp_integral<T: Real>(shape: u32, rate: T, a: T, b: T) -> T {
    debug_assert!(shape >= 1);
    debug_assert!(a >= T::zero() && b > a);
    let w = b - a;
    let x = rate * w;
    let deg = (shape - 1) as usize;
    let mut sum = T::zero();
    for j in 0..=deg {
        let weight = binomial::<T>(deg, j) * a.powi((deg - j) as i32) * w.powi(j as i32 + 1);
        let moment = if x < T::zero() { psi(j, -x) } else { phi(j, x) };
        sum += weight * moment;
    }
    if x < T::zero() {
        -rate * b + sum.ln()
    } else {
        -rate * a + sum.ln()
    }
}
