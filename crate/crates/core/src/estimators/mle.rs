use crate::error::{Error, Result};
use crate::optimize::NelderMead;
use crate::scalar::factorial;
use crate::simulator::{CountSnapshot, CycleRecord};
use crate::special::ln_power_exp_integral;

use super::am::{am_estimate, Design};
use super::{normal_quantile, Diagnostics, EstimateReport, Method};

/// Relative step of the finite-difference observed information.
const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservedEnd {
    /// Damage found at the inspection at age `at`.
    Detected { at: f64 },
    /// Failure at age `at`.
    Failed { at: f64 },
}

/// One cycle as the maintenance log sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedCycle {
    /// Age of the last inspection that found the system sane (zero if none).
    pub last_clear: f64,
    /// Inspections charged to the cycle, the corrective one included.
    pub inspections: u32,
    pub end: ObservedEnd,
}

impl ObservedCycle {
    pub fn length(&self) -> f64 {
        match self.end {
            ObservedEnd::Detected { at } | ObservedEnd::Failed { at } => at,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData {
    pub cycles: Vec<ObservedCycle>,
}

impl ObservedData {
    /// Drops the latent times `y_s`, `y_d` and any inspection never carried out.
    pub fn from_cycles(cycles: &[CycleRecord]) -> Self {
        let cycles = cycles
            .iter()
            .map(|c| ObservedCycle {
                last_clear: c.last_clear_inspection(),
                inspections: c.k_r,
                end: if c.failed() {
                    ObservedEnd::Failed { at: c.z_d }
                } else {
                    ObservedEnd::Detected { at: c.v_s }
                },
            })
            .collect();
        Self { cycles }
    }

    pub fn counts(&self) -> CountSnapshot {
        CountSnapshot {
            t: self.cycles.iter().map(ObservedCycle::length).sum(),
            n_r: self.cycles.len() as u64,
            n_i: self.cycles.iter().map(|c| c.inspections as u64).sum(),
            n_f: self
                .cycles
                .iter()
                .filter(|c| matches!(c.end, ObservedEnd::Failed { .. }))
                .count() as u64,
        }
    }
}

/// Censored log-likelihood of `(μ, λ)`.
///
/// With damage time `u` known only to lie in `(a, b]`, a detected cycle contributes
/// `ln ∫_a^b e^{-λ(b-u)} n_μ(u) du` and a failure at `z` contributes
/// `ln ∫_a^z λ e^{-λ(z-u)} n_μ(u) du`, where `n_μ` is the `Γ(n, μ)` density.
pub fn log_likelihood(data: &ObservedData, shape: u32, mu: f64, lambda: f64) -> f64 {
    if !(mu > 0.0 && lambda > 0.0) {
        return f64::NEG_INFINITY;
    }
    let n = shape as f64;
    let norm = n * mu.ln() - factorial::<f64>(shape as usize - 1).ln();
    let shift = mu - lambda;
    let ln_lambda = lambda.ln();
    data.cycles
        .iter()
        .map(|c| match c.end {
            ObservedEnd::Detected { at } => {
                -lambda * at + norm + ln_power_exp_integral(shape, shift, c.last_clear, at)
            }
            ObservedEnd::Failed { at } => {
                ln_lambda - lambda * at + norm + ln_power_exp_integral(shape, shift, c.last_clear, at)
            }
        })
        .sum()
}

/// Censored MLE by a simplex search over `(ln μ, ln λ)` from the AM estimate, with
/// intervals from the inverse observed information.
pub fn mle_estimate(data: &ObservedData, design: &Design<f64>, confidence: f64) -> Result<EstimateReport> {
    let counts = data.counts();
    if counts.n_f == 0 || counts.n_f == counts.n_r {
        return Err(Error::Degenerate(format!(
            "maximum likelihood needs both detected and failed cycles, got {} failures in {} cycles",
            counts.n_f, counts.n_r
        )));
    }
    let z = normal_quantile(confidence)?;
    let shape = design.shape;
    let start = match am_estimate(&counts, design, 0.0) {
        Ok(r) => (r.mu_hat, r.lambda_hat),
        Err(_) => (
            shape as f64 * counts.n_r as f64 / counts.t,
            counts.n_f as f64 / counts.t,
        ),
    };
    let nll = |x: &[f64]| -log_likelihood(data, shape, x[0].exp(), x[1].exp());
    let min = NelderMead::default().minimize(nll, &[start.0.ln(), start.1.ln()])?;
    let (mu, lambda) = (min.x[0].exp(), min.x[1].exp());

    let cov = inverse_information(data, shape, mu, lambda)?;
    let half_mu = z * cov[0][0].sqrt();
    let half_lambda = z * cov[1][1].sqrt();
    Ok(EstimateReport {
        method: Method::Mle,
        mu_hat: mu,
        lambda_hat: lambda,
        ci_mu: (mu - half_mu, mu + half_mu),
        ci_lambda: (lambda - half_lambda, lambda + half_lambda),
        confidence,
        sigma2: Some(cov),
        t: counts.t,
        n_r: counts.n_r,
        n_i: counts.n_i,
        n_f: counts.n_f,
        seed: None,
        diagnostics: Diagnostics {
            iterations: min.iterations,
            log_likelihood: Some(-min.value),
            ..Diagnostics::default()
        },
    })
}

/// Inverse of the central-difference Hessian of `-ℓ` in `(μ, λ)`.
fn inverse_information(data: &ObservedData, shape: u32, mu: f64, lambda: f64) -> Result<[[f64; 2]; 2]> {
    let f = |m: f64, l: f64| -log_likelihood(data, shape, m, l);
    let (hm, hl) = (HESSIAN_STEP * mu, HESSIAN_STEP * lambda);
    let f0 = f(mu, lambda);
    let h11 = (f(mu + hm, lambda) - 2.0 * f0 + f(mu - hm, lambda)) / (hm * hm);
    let h22 = (f(mu, lambda + hl) - 2.0 * f0 + f(mu, lambda - hl)) / (hl * hl);
    let h12 = (f(mu + hm, lambda + hl) - f(mu + hm, lambda - hl) - f(mu - hm, lambda + hl)
        + f(mu - hm, lambda - hl))
        / (4.0 * hm * hl);
    let det = h11 * h22 - h12 * h12;
    if !(h11 > 0.0 && det > 0.0) || !det.is_finite() {
        return Err(Error::NonIdentifiable(
            "observed information is not positive definite at the optimum".into(),
        ));
    }
    Ok([[h22 / det, -h12 / det], [-h12 / det, h11 / det]])
}

/// Closed-form MLE when the latent times are observed: `μ̂ = nN/Σy_s`, `λ̂ = N/Σy_d`,
/// with Fisher-information intervals.
pub fn full_information_mle(cycles: &[CycleRecord], shape: u32, confidence: f64) -> Result<EstimateReport> {
    if cycles.is_empty() {
        return Err(Error::Degenerate("no cycles".into()));
    }
    let z = normal_quantile(confidence)?;
    let count = cycles.len() as f64;
    let n = shape as f64;
    let sum_s: f64 = cycles.iter().map(|c| c.y_s).sum();
    let sum_d: f64 = cycles.iter().map(|c| c.y_d).sum();
    let mu = n * count / sum_s;
    let lambda = count / sum_d;
    let var_mu = mu * mu / (n * count);
    let var_lambda = lambda * lambda / count;
    let counts = ObservedData::from_cycles(cycles).counts();
    Ok(EstimateReport {
        method: Method::FullInformation,
        mu_hat: mu,
        lambda_hat: lambda,
        ci_mu: (mu - z * var_mu.sqrt(), mu + z * var_mu.sqrt()),
        ci_lambda: (lambda - z * var_lambda.sqrt(), lambda + z * var_lambda.sqrt()),
        confidence,
        sigma2: Some([[var_mu, 0.0], [0.0, var_lambda]]),
        t: counts.t,
        n_r: counts.n_r,
        n_i: counts.n_i,
        n_f: counts.n_f,
        seed: None,
        diagnostics: Diagnostics::default(),
    })
}
