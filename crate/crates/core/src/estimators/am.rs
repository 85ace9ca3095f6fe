use crate::error::{Error, Result};
use crate::formulas::{covariance_bundle, expected_kr, prob_failure, Model};
use crate::laws::{DamageLaw, InspectionLaw, SaneLaw};
use crate::roots::{solve_monotone, Root};
use crate::scalar::Real;
use crate::simulator::CountSnapshot;

use super::{normal_quantile, Diagnostics, EstimateReport, Method};

/// Starting bracket for both rate searches, widened geometrically as needed.
pub const ROOT_BRACKET: (f64, f64) = (1e-8, 1e2);

/// Fewer repairs than this and the normal approximation is flagged as doubtful.
const FEW_CYCLES: u64 = 100;

/// What is known about the system besides the counts: the gamma shape of the time to
/// damage and the inspection law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design<T> {
    pub shape: u32,
    pub inspection: InspectionLaw<T>,
}

impl<T: Real> Design<T> {
    pub fn model(&self, mu: T, lambda: T) -> Result<Model<T>> {
        Ok(Model::new(
            SaneLaw::new(self.shape, mu)?,
            DamageLaw::new(lambda)?,
            self.inspection,
        ))
    }
}

fn bracket<T: Real>() -> (T, T) {
    (T::lit(ROOT_BRACKET.0), T::lit(ROOT_BRACKET.1))
}

/// `μ̂ = f⁻¹(m̂_k)`, where `f(μ) = E[K^r]` decreases from `+∞` to `1`.
pub fn invert_f<T: Real>(m_k_hat: T, shape: u32, inspection: &InspectionLaw<T>) -> Result<Root<T>> {
    if !(m_k_hat > T::one()) || !m_k_hat.is_finite() {
        return Err(Error::OutOfRange {
            target: m_k_hat.to_f64().unwrap_or(f64::NAN),
            low: 1.0,
            high: f64::INFINITY,
        });
    }
    let f = |mu: T| expected_kr(&SaneLaw::new(shape, mu)?, inspection);
    solve_monotone(f, m_k_hat, bracket(), T::lit(1e-13) * m_k_hat)
}

/// `λ̂ = g⁻¹_μ(P̂_d)`, where `λ ↦ g(μ, λ) = P_d` increases from `0` to `1`.
pub fn invert_g<T: Real>(
    mu_hat: T,
    p_d_hat: T,
    shape: u32,
    inspection: &InspectionLaw<T>,
) -> Result<Root<T>> {
    if p_d_hat == T::zero() {
        return Err(Error::Degenerate(
            "lambda not identifiable: no failures observed".into(),
        ));
    }
    if p_d_hat == T::one() {
        return Err(Error::Degenerate(
            "lambda not identifiable: every cycle ended in failure".into(),
        ));
    }
    if !(p_d_hat > T::zero() && p_d_hat < T::one()) {
        return Err(Error::OutOfRange {
            target: p_d_hat.to_f64().unwrap_or(f64::NAN),
            low: 0.0,
            high: 1.0,
        });
    }
    let sane = SaneLaw::new(shape, mu_hat)?;
    let g = |lambda: T| prob_failure(&Model::new(sane, DamageLaw::new(lambda)?, *inspection));
    solve_monotone(g, p_d_hat, bracket(), T::lit(1e-13))
}

/// Asymptotic-method estimate from counts at time `snapshot.t`.
///
/// `Σ²` is evaluated at the estimates and the intervals are
/// `estimate ± z √(Σ²_ii / t)`.
pub fn am_estimate(
    snapshot: &CountSnapshot,
    design: &Design<f64>,
    confidence: f64,
) -> Result<EstimateReport> {
    let CountSnapshot { t, n_r, n_i, n_f } = *snapshot;
    if n_r == 0 {
        return Err(Error::Degenerate("no completed cycle observed".into()));
    }
    if n_f == 0 {
        return Err(Error::Degenerate(
            "lambda not identifiable: no failures observed".into(),
        ));
    }
    if n_f > n_r {
        return Err(Error::InvalidArgument(format!(
            "more failures ({n_f}) than repairs ({n_r})"
        )));
    }
    if n_i <= n_r {
        return Err(Error::OutOfRange {
            target: n_i as f64 / n_r as f64,
            low: 1.0,
            high: f64::INFINITY,
        });
    }
    let mut report = am_estimate_ratios(
        n_i as f64 / n_r as f64,
        n_f as f64 / n_r as f64,
        t,
        design,
        confidence,
    )?;
    report.n_r = n_r;
    report.n_i = n_i;
    report.n_f = n_f;
    if n_r < FEW_CYCLES {
        report.diagnostics.warnings.push(format!(
            "only {n_r} completed cycles; the normal approximation is doubtful"
        ));
    }
    Ok(report)
}

/// Asymptotic-method estimate from the ratios `N^i/N^r` and `N^f/N^r` directly, which
/// also accepts non-integer pseudo-counts.
pub fn am_estimate_ratios(
    m_k_hat: f64,
    p_d_hat: f64,
    t: f64,
    design: &Design<f64>,
    confidence: f64,
) -> Result<EstimateReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("observation time must be positive, got {t}")));
    }
    let z = normal_quantile(confidence)?;
    let mu = invert_f(m_k_hat, design.shape, &design.inspection)?;
    let lambda = invert_g(mu.x, p_d_hat, design.shape, &design.inspection)?;
    let bundle = covariance_bundle(&design.model(mu.x, lambda.x)?)?;
    let s = bundle.sigma2;
    let half_mu = z * (s[0][0].max(0.0) / t).sqrt();
    let half_lambda = z * (s[1][1].max(0.0) / t).sqrt();
    Ok(EstimateReport {
        method: Method::Am,
        mu_hat: mu.x,
        lambda_hat: lambda.x,
        ci_mu: (mu.x - half_mu, mu.x + half_mu),
        ci_lambda: (lambda.x - half_lambda, lambda.x + half_lambda),
        confidence,
        sigma2: Some(s),
        t,
        n_r: 0,
        n_i: 0,
        n_f: 0,
        seed: None,
        diagnostics: Diagnostics {
            iterations: mu.iterations + lambda.iterations,
            mu_bracket: Some(mu.bracket),
            lambda_bracket: Some(lambda.bracket),
            log_likelihood: None,
            warnings: Vec::new(),
        },
    })
}
