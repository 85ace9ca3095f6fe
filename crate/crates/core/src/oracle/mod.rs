//! Brute-force Monte Carlo counterparts of the closed forms, with standard errors.
//!
//! Cycles are drawn in a fixed number of blocks, each from its own generator stream,
//! so results do not depend on the thread count. Plain means carry the usual
//! `s/√n` error; covariances and entries of `R` (nonlinear in the means) use batch
//! means over the blocks.

mod age;

use std::io::Write;

use rayon::prelude::*;

pub use age::{ks_critical_value, ks_statistic, mc_age_distribution, LimitingAge};

use crate::error::{Error, Result};
use crate::formulas::{clt_matrix, moment_set, Matrix3, Model, MomentSet};
use crate::simulator::{simulate_cycle, stream_rng, CycleRecord};

pub const MIN_SAMPLES: usize = 10_000;
/// Number of independent blocks (and generator streams).
pub const BLOCKS: usize = 100;
/// Closed form and simulation disagree once `|z|` exceeds this.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// `(closed − value) / std_err`; zero when both the gap and the error vanish.
    pub fn z_score(&self, closed: f64) -> f64 {
        let diff = closed - self.value;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_err
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McMomentSet {
    pub moments: MomentSet<McEstimate>,
    /// Estimate of `R`, ordered `(r, f, i)` like [`clt_matrix`].
    pub r: Matrix3<McEstimate>,
}

/// Streaming mean and variance (Welford), mergeable across blocks.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Running) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n / n;
        self.m2 += other.m2 + d * d * self.n * other.n / n;
        self.n = n;
    }

    fn std_err(&self) -> f64 {
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

const K: usize = 0;
const I: usize = 1;
const X: usize = 2;
const K2: usize = 3;
const X2: usize = 4;
const ZDI: usize = 5;
const KRD: usize = 6;
const KI: usize = 7;
const KX: usize = 8;
const XI: usize = 9;
const STATS: usize = 10;

fn cycle_stats(c: &CycleRecord, lambda: f64) -> [f64; STATS] {
    let k = c.k_r as f64;
    let i = c.failed() as u8 as f64;
    let x = c.x_r;
    let mut s = [0.0; STATS];
    s[K] = k;
    s[I] = i;
    s[X] = x;
    s[K2] = k * k;
    s[X2] = x * x;
    s[ZDI] = c.z_d * i;
    // R_d at the first inspection after damage, whatever ended the cycle
    s[KRD] = k * (-lambda * (c.v_s - c.y_s)).exp();
    s[KI] = k * i;
    s[KX] = k * x;
    s[XI] = x * i;
    s
}

fn moments_from_means(m: &[f64; STATS]) -> MomentSet<f64> {
    MomentSet {
        m_k: m[K],
        p_d: m[I],
        m_x: m[X],
        e_k2: m[K2],
        e_x2: m[X2],
        cov_xi: m[XI] - m[X] * m[I],
        cov_ki: m[KI] - m[K] * m[I],
        cov_kx: m[KX] - m[K] * m[X],
        e_zdi: m[ZDI],
        e_krd: m[KRD],
    }
}

fn block_sizes(n: usize) -> impl Iterator<Item = usize> {
    (0..BLOCKS).map(move |b| n / BLOCKS + usize::from(b < n % BLOCKS))
}

/// Monte Carlo estimate of every [`MomentSet`] field and of `R` from `n_samples`
/// independent cycles.
pub fn mc_moment_set(model: &Model<f64>, n_samples: usize, seed: u64) -> Result<McMomentSet> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are needed, got {n_samples}"
        )));
    }
    let lambda = model.lambda();
    let sizes: Vec<usize> = block_sizes(n_samples).collect();
    let blocks: Vec<[Running; STATS]> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &size)| {
            let mut rng = stream_rng(seed, b as u64);
            let mut acc = [Running::default(); STATS];
            for _ in 0..size {
                let s = cycle_stats(&simulate_cycle(&mut rng, model), lambda);
                for (a, v) in acc.iter_mut().zip(s) {
                    a.push(v);
                }
            }
            acc
        })
        .collect();

    let mut total = [Running::default(); STATS];
    for block in &blocks {
        for (t, b) in total.iter_mut().zip(block) {
            t.merge(b);
        }
    }
    let means = total.map(|r| r.mean);
    let point = moments_from_means(&means);
    let r_point = clt_matrix(&point)?;

    let mut per_block = Vec::with_capacity(BLOCKS);
    let mut r_block = Vec::with_capacity(BLOCKS);
    for block in &blocks {
        let ms = moments_from_means(&block.map(|r| r.mean));
        r_block.push(clt_matrix(&ms)?);
        per_block.push(ms);
    }
    let batch_se = |f: &dyn Fn(usize) -> f64| {
        let mut r = Running::default();
        for b in 0..BLOCKS {
            r.push(f(b));
        }
        r.std_err()
    };
    let est = |value: f64, std_err: f64| McEstimate {
        value,
        std_err,
        n_samples,
        seed,
    };
    let plain = |j: usize| est(total[j].mean, total[j].std_err());

    let moments = MomentSet {
        m_k: plain(K),
        p_d: plain(I),
        m_x: plain(X),
        e_k2: plain(K2),
        e_x2: plain(X2),
        cov_xi: est(point.cov_xi, batch_se(&|b| per_block[b].cov_xi)),
        cov_ki: est(point.cov_ki, batch_se(&|b| per_block[b].cov_ki)),
        cov_kx: est(point.cov_kx, batch_se(&|b| per_block[b].cov_kx)),
        e_zdi: plain(ZDI),
        e_krd: plain(KRD),
    };
    let r = std::array::from_fn(|i| {
        std::array::from_fn(|j| est(r_point[i][j], batch_se(&|b| r_block[b][i][j])))
    });
    Ok(McMomentSet { moments, r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRow {
    pub quantity: &'static str,
    pub closed_form: f64,
    pub mc_value: f64,
    pub mc_se: f64,
    pub z_score: f64,
    pub pass: bool,
}

pub const VERIFICATION_HEADER: &str = "quantity,closed_form,mc_value,mc_se,z_score,pass";

const R_NAMES: [[&str; 3]; 3] = [
    ["r_rr", "r_rf", "r_ri"],
    ["r_rf", "r_ff", "r_fi"],
    ["r_ri", "r_fi", "r_ii"],
];

/// Compares closed-form values with a Monte Carlo run, one row per quantity.
pub fn compare(closed: &MomentSet<f64>, closed_r: &Matrix3<f64>, mc: &McMomentSet) -> Vec<VerificationRow> {
    let c = closed;
    let m = &mc.moments;
    let mut pairs: Vec<(&'static str, f64, McEstimate)> = vec![
        ("m_k", c.m_k, m.m_k),
        ("p_d", c.p_d, m.p_d),
        ("m_x", c.m_x, m.m_x),
        ("e_k2", c.e_k2, m.e_k2),
        ("e_x2", c.e_x2, m.e_x2),
        ("cov_xi", c.cov_xi, m.cov_xi),
        ("cov_ki", c.cov_ki, m.cov_ki),
        ("cov_kx", c.cov_kx, m.cov_kx),
        ("e_zdi", c.e_zdi, m.e_zdi),
        ("e_krd", c.e_krd, m.e_krd),
    ];
    for i in 0..3 {
        for j in i..3 {
            pairs.push((R_NAMES[i][j], closed_r[i][j], mc.r[i][j]));
        }
    }
    pairs
        .into_iter()
        .map(|(quantity, closed_form, e)| {
            let z = e.z_score(closed_form);
            VerificationRow {
                quantity,
                closed_form,
                mc_value: e.value,
                mc_se: e.std_err,
                z_score: z,
                pass: z.abs() <= Z_THRESHOLD,
            }
        })
        .collect()
}

/// Closed forms at `model` against `n_samples` simulated cycles.
pub fn verify(model: &Model<f64>, n_samples: usize, seed: u64) -> Result<Vec<VerificationRow>> {
    let closed = moment_set(model)?;
    let closed_r = clt_matrix(&closed)?;
    let mc = mc_moment_set(model, n_samples, seed)?;
    Ok(compare(&closed, &closed_r, &mc))
}

pub fn write_verification_csv<W: Write>(mut w: W, rows: &[VerificationRow]) -> Result<()> {
    writeln!(w, "{VERIFICATION_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:.4},{}",
            r.quantity, r.closed_form, r.mc_value, r.mc_se, r.z_score, r.pass
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{DamageLaw, InspectionLaw, SaneLaw};

    fn model(lambda: f64) -> Model<f64> {
        Model::new(
            SaneLaw::new(1, 1e-3).unwrap(),
            DamageLaw::new(lambda).unwrap(),
            InspectionLaw::deterministic(1000.0).unwrap(),
        )
    }

    #[test]
    fn running_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.5 + 1e6).collect();
        let mut whole = Running::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Running::default(), Running::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - whole.mean).abs() < 1e-9);
        assert!((a.m2 / whole.m2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let a = mc_moment_set(&model(5e-4), 20_000, 7).unwrap();
        let b = mc_moment_set(&model(5e-4), 20_000, 7).unwrap();
        assert_eq!(a, b);
        let c = mc_moment_set(&model(5e-4), 20_000, 8).unwrap();
        assert_ne!(a.moments.m_k.value, c.moments.m_k.value);
    }

    #[test]
    fn too_few_samples() {
        assert!(mc_moment_set(&model(5e-4), 100, 1).is_err());
    }

    #[test]
    fn mean_estimates_agree_with_closed_forms() {
        let rows = verify(&model(5e-4), 200_000, 11).unwrap();
        for r in &rows {
            assert!(r.pass, "{r:?}");
        }
        let mk = rows.iter().find(|r| r.quantity == "m_k").unwrap();
        assert!((mk.mc_value - 1.582).abs() < 0.02);
    }

    #[test]
    fn fast_damage_gives_near_certain_failure() {
        let rows = verify(&model(1.0), 50_000, 5).unwrap();
        let pd = rows.iter().find(|r| r.quantity == "p_d").unwrap();
        assert!(pd.closed_form > 0.99 && pd.pass, "{pd:?}");
    }

    #[test]
    fn corrupted_closed_form_is_flagged() {
        let m = model(5e-4);
        let mut closed = moment_set(&m).unwrap();
        let r = clt_matrix(&closed).unwrap();
        closed.m_k *= 1.05;
        let mc = mc_moment_set(&m, 50_000, 3).unwrap();
        let rows = compare(&closed, &r, &mc);
        assert!(!rows.iter().find(|r| r.quantity == "m_k").unwrap().pass);
    }
}
