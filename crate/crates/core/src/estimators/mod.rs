//! Estimation of `(μ, λ)` from what a maintenance log records.
//!
//! The asymptotic method inverts the long-run ratios of the counting processes:
//! `N^i/N^r → E[K^r] = f(μ)` and `N^f/N^r → P_d = g(μ, λ)`. The censored maximum
//! likelihood baseline uses each cycle's inspection ages and outcome instead.

mod am;
mod mle;

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};

pub use am::{am_estimate, am_estimate_ratios, invert_f, invert_g, Design, ROOT_BRACKET};
pub use mle::{
    full_information_mle, log_likelihood, mle_estimate, ObservedCycle, ObservedData, ObservedEnd,
};

use crate::error::{Error, Result};
use crate::formulas::Matrix2;
use crate::simulator::fmt_time;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Asymptotic method: inversion of the count ratios.
    Am,
    /// Censored maximum likelihood on inspection outcomes.
    Mle,
    /// Maximum likelihood with the latent times observed; a reference, not an estimator
    /// usable on field data.
    FullInformation,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Am => "AM",
            Method::Mle => "MLE",
            Method::FullInformation => "full-information",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Root-finder or simplex iterations.
    pub iterations: usize,
    pub mu_bracket: Option<(f64, f64)>,
    pub lambda_bracket: Option<(f64, f64)>,
    pub log_likelihood: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub method: Method,
    pub mu_hat: f64,
    pub lambda_hat: f64,
    pub ci_mu: (f64, f64),
    pub ci_lambda: (f64, f64),
    pub confidence: f64,
    /// Asymptotic covariance; for the AM it is `Σ²` evaluated at the estimates, to be
    /// scaled by `1/t`, for the MLE the inverse observed information itself.
    pub sigma2: Option<Matrix2<f64>>,
    pub t: f64,
    pub n_r: u64,
    pub n_i: u64,
    pub n_f: u64,
    pub seed: Option<u64>,
    pub diagnostics: Diagnostics,
}

pub const REPORT_CSV_HEADER: &str =
    "method,mu_hat,mu_lo,mu_hi,lambda_hat,lambda_lo,lambda_hi,confidence,t,n_r,n_i,n_f,seed";

impl EstimateReport {
    pub fn mu_covers(&self, mu: f64) -> bool {
        self.ci_mu.0 <= mu && mu <= self.ci_mu.1
    }

    pub fn lambda_covers(&self, lambda: f64) -> bool {
        self.ci_lambda.0 <= lambda && lambda <= self.ci_lambda.1
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.method.as_str(),
            fmt_time(self.mu_hat),
            fmt_time(self.ci_mu.0),
            fmt_time(self.ci_mu.1),
            fmt_time(self.lambda_hat),
            fmt_time(self.ci_lambda.0),
            fmt_time(self.ci_lambda.1),
            self.confidence,
            fmt_time(self.t),
            self.n_r,
            self.n_i,
            self.n_f,
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        )
    }

    /// Flat `key = value` lines.
    pub fn key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("method", self.method.as_str().into());
        kv("mu_hat", fmt_time(self.mu_hat));
        kv("mu_lo", fmt_time(self.ci_mu.0));
        kv("mu_hi", fmt_time(self.ci_mu.1));
        kv("lambda_hat", fmt_time(self.lambda_hat));
        kv("lambda_lo", fmt_time(self.ci_lambda.0));
        kv("lambda_hi", fmt_time(self.ci_lambda.1));
        kv("confidence", self.confidence.to_string());
        kv("t", fmt_time(self.t));
        kv("n_r", self.n_r.to_string());
        kv("n_i", self.n_i.to_string());
        kv("n_f", self.n_f.to_string());
        if let Some(seed) = self.seed {
            kv("seed", seed.to_string());
        }
        if let Some(s) = self.sigma2 {
            kv("sigma2", format!("{},{},{},{}", s[0][0], s[0][1], s[1][0], s[1][1]));
        }
        kv("iterations", self.diagnostics.iterations.to_string());
        if let Some((lo, hi)) = self.diagnostics.mu_bracket {
            kv("mu_bracket", format!("{lo},{hi}"));
        }
        if let Some((lo, hi)) = self.diagnostics.lambda_bracket {
            kv("lambda_bracket", format!("{lo},{hi}"));
        }
        if let Some(ll) = self.diagnostics.log_likelihood {
            kv("log_likelihood", ll.to_string());
        }
        for w in &self.diagnostics.warnings {
            kv("warning", w.clone());
        }
        out
    }
}

/// Two-sided standard normal quantile `z_{(1+confidence)/2}`.
pub fn normal_quantile(confidence: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::InvalidArgument(format!(
            "confidence must lie in [0, 1), got {confidence}"
        )));
    }
    if confidence == 0.0 {
        return Ok(0.0);
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf((1.0 + confidence) / 2.0))
}
