use rand::Rng;

use crate::error::{Error, Result};
use crate::formulas::{expected_xr, Model};
use crate::laws::InspectionLaw;
use crate::scalar::factorial;
use crate::simulator::{simulate_seeded, stream_rng};
use crate::special::ln_power_exp_integral;

/// Simpson panels per inspection period.
const PANELS: usize = 128;
/// Periods are added until the cycle-length survival drops below this.
const TAIL: f64 = 1e-17;
const MAX_PERIODS: usize = 1_000_000;

/// Ages `A_t` at `n_probes` probe times drawn uniformly in `[horizon/2, horizon]`.
///
/// Probe times come from a generator stream separate from the one driving the cycles.
pub fn mc_age_distribution(model: &Model<f64>, horizon: f64, n_probes: usize, seed: u64) -> Result<Vec<f64>> {
    let traj = simulate_seeded(model, horizon, &[], seed)?;
    let mut rng = stream_rng(seed, 1);
    (0..n_probes)
        .map(|_| {
            let t = rng.random_range(horizon / 2.0..=horizon);
            traj.age_and_index(t).map(|(age, _)| age)
        })
        .collect()
}

/// Limiting law of the time since the last repair,
/// `F_A(x) = (1/E[X]) ∫_0^x P(X > u) du`, for periodic inspections.
#[derive(Debug, Clone)]
pub struct LimitingAge {
    model: Model<f64>,
    c: f64,
    m_x: f64,
    ln_norm: f64,
    /// `∫_0^{kc} P(X > u) du` for `k = 0..`.
    cumulative: Vec<f64>,
}

impl LimitingAge {
    pub fn new(model: &Model<f64>) -> Result<Self> {
        let c = match model.inspection {
            InspectionLaw::Deterministic { c } => c,
            InspectionLaw::Uniform { .. } => {
                return Err(Error::Unsupported(
                    "the limiting age law is implemented for periodic inspections only".into(),
                ))
            }
        };
        let n = model.shape();
        let mut this = Self {
            model: *model,
            c,
            m_x: expected_xr(model)?,
            ln_norm: n as f64 * model.mu().ln() - factorial::<f64>(n as usize - 1).ln(),
            cumulative: vec![0.0],
        };
        let mut k = 0;
        while this.model.sane.survival(k as f64 * c) > TAIL && k < MAX_PERIODS {
            let next = this.cumulative[k] + this.integral(k, (k + 1) as f64 * c);
            this.cumulative.push(next);
            k += 1;
        }
        Ok(this)
    }

    /// `P(X > x)`: either no damage yet, or damage after the last inspection and no
    /// failure since.
    pub fn cycle_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let last = (x / self.c).floor() * self.c;
        let mut s = self.model.sane.survival(x);
        if x > last {
            let lambda = self.model.lambda();
            let shift = self.model.mu() - lambda;
            let ln = self.ln_norm - lambda * x + ln_power_exp_integral(self.model.shape(), shift, last, x);
            s += ln.exp();
        }
        s
    }

    /// `∫_{kc}^{x} P(X > u) du` for `x` within period `k`; the integrand is smooth there.
    fn integral(&self, k: usize, x: f64) -> f64 {
        let a = k as f64 * self.c;
        if x <= a {
            return 0.0;
        }
        let h = (x - a) / PANELS as f64;
        // the right end is evaluated as a left limit, since the survival drops at
        // each inspection
        let right = if x == a + self.c {
            self.cycle_survival(x.next_down())
        } else {
            self.cycle_survival(x)
        };
        let mut s = self.cycle_survival(a) + right;
        for i in 1..PANELS {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * self.cycle_survival(a + i as f64 * h);
        }
        s * h / 3.0
    }

    /// `∫_0^∞ P(X > u) du` by quadrature; equals `E[X]` up to quadrature error.
    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().expect("starts at zero")
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let k = (x / self.c).floor() as usize;
        if k + 1 >= self.cumulative.len() {
            return 1.0;
        }
        ((self.cumulative[k] + self.integral(k, x)) / self.m_x).min(1.0)
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value `√(−ln(α/2)/2) / √n` of the KS statistic.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{DamageLaw, SaneLaw};
    use approx::assert_relative_eq;

    fn model(shape: u32, mu: f64, lambda: f64) -> Model<f64> {
        Model::new(
            SaneLaw::new(shape, mu).unwrap(),
            DamageLaw::new(lambda).unwrap(),
            InspectionLaw::deterministic(1000.0).unwrap(),
        )
    }

    #[test]
    fn survival_integrates_to_mean_cycle_length() {
        for (n, mu, lambda) in [(1, 1e-3, 5e-4), (2, 1e-3, 5e-4), (1, 2e-3, 2e-3), (3, 4e-3, 1e-4)] {
            let m = model(n, mu, lambda);
            let age = LimitingAge::new(&m).unwrap();
            assert_relative_eq!(age.total_mass(), expected_xr(&m).unwrap(), max_relative = 1e-9);
            assert_relative_eq!(age.cdf(1e9), 1.0);
        }
    }

    #[test]
    fn survival_matches_direct_quadrature() {
        let m = model(2, 1e-3, 5e-4);
        let age = LimitingAge::new(&m).unwrap();
        let x = 2500.0;
        let (a, steps) = (2000.0, 20_000);
        let h = (x - a) / steps as f64;
        let f = |u: f64| m.sane.density(u) * (-5e-4 * (x - u)).exp();
        let mut s = f(a) + f(x);
        for i in 1..steps {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        let expected = m.sane.survival(x) + s * h / 3.0;
        assert_relative_eq!(age.cycle_survival(x), expected, max_relative = 1e-10);
    }

    #[test]
    fn cdf_is_monotone() {
        let age = LimitingAge::new(&model(1, 1e-3, 5e-4)).unwrap();
        let mut prev = 0.0;
        for i in 0..400 {
            let f = age.cdf(i as f64 * 25.0);
            assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn uniform_inspections_are_unsupported() {
        let m = Model::new(
            SaneLaw::new(1, 1e-3).unwrap(),
            DamageLaw::new(5e-4).unwrap(),
            InspectionLaw::uniform(1000.0, 100.0).unwrap(),
        );
        assert!(matches!(LimitingAge::new(&m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn periodic_renewal_gives_uniform_ages() {
        // damage almost immediately, failure practically never: every cycle lasts c
        let m = model(1, 1e3, 1e-12);
        let ages = mc_age_distribution(&m, 1e6, 2000, 4).unwrap();
        assert!(ages.iter().all(|&a| (0.0..=1000.0).contains(&a)));
        let d = ks_statistic(&ages, |x| (x / 1000.0).clamp(0.0, 1.0));
        assert!(d < ks_critical_value(ages.len(), 0.01), "{d}");
        let limit = LimitingAge::new(&m).unwrap();
        assert_relative_eq!(limit.cdf(250.0), 0.25, max_relative = 1e-6);
    }

    #[test]
    fn single_probe() {
        let ages = mc_age_distribution(&model(1, 1e-3, 5e-4), 1e5, 1, 2).unwrap();
        assert_eq!(ages.len(), 1);
        assert!(ages[0] >= 0.0);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert_relative_eq!(ks_statistic(&xs, |x| x), 0.005, max_relative = 1e-12);
        assert_relative_eq!(ks_critical_value(1, 0.01), 1.6276, max_relative = 1e-4);
    }
}
