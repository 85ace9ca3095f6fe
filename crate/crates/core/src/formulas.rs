//! Closed-form renewal quantities of a cycle and the asymptotic covariance of the
//! estimators.
//!
//! Everything is a rational expression in the Laplace transform `L` of the inspection
//! gap and its derivatives at `μ` and `λ`. Those derivatives come from jets of
//! `S = 1/(1-L)`, `H = L/(1-L)` and `F = L/(1-L)²`.
//!
//! The `λ ≠ μ` expressions divide by `(μ-λ)^n` and cancel catastrophically as `λ → μ`.
//! Near the diagonal the divided difference is replaced by its Taylor series in
//! `μ - λ`, whose leading term is the `λ = μ` expression; see [`remainder`](Expansion).

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::laws::{DamageLaw, InspectionLaw, SaneLaw};
use crate::scalar::{factorial, Real};

/// Terms kept beyond the leading one in the near-diagonal series.
const SERIES_TERMS: usize = 7;

/// The series is used while `|μ-λ|` times the natural time scale stays below this.
/// Its truncation error is then below `0.01^8`, and the direct formula, used
/// elsewhere, loses at most a factor `0.01^{-n}` to cancellation.
const SERIES_RADIUS: f64 = 1e-2;

/// Relative distance under which the explicit `λ = μ` forms are used.
pub const DIAGONAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model<T> {
    pub sane: SaneLaw<T>,
    pub damage: DamageLaw<T>,
    pub inspection: InspectionLaw<T>,
}

impl<T: Real> Model<T> {
    pub fn new(sane: SaneLaw<T>, damage: DamageLaw<T>, inspection: InspectionLaw<T>) -> Self {
        Self {
            sane,
            damage,
            inspection,
        }
    }

    pub fn shape(&self) -> u32 {
        self.sane.shape()
    }

    pub fn mu(&self) -> T {
        self.sane.rate()
    }

    pub fn lambda(&self) -> T {
        self.damage.rate()
    }

    /// Same laws with the two rates replaced.
    pub fn with_rates(&self, mu: T, lambda: T) -> Result<Self> {
        Ok(Self {
            sane: self.sane.with_rate(mu)?,
            damage: DamageLaw::new(lambda)?,
            inspection: self.inspection,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet<T> {
    /// `E[K^r]`, inspections per cycle.
    pub m_k: T,
    /// `P(V^s ≥ Z^d)`, probability that a cycle ends in failure.
    pub p_d: T,
    /// `E[X^r]`, mean cycle length.
    pub m_x: T,
    pub e_k2: T,
    pub e_x2: T,
    pub cov_xi: T,
    pub cov_ki: T,
    pub cov_kx: T,
    /// `E[Z^d · 1{V^s ≥ Z^d}]`.
    pub e_zdi: T,
    /// `E[K^r · R_d(V^s - Y^s)]`.
    pub e_krd: T,
}

impl<T: Real> MomentSet<T> {
    pub fn var_x(&self) -> T {
        self.e_x2 - self.m_x * self.m_x
    }

    pub fn var_k(&self) -> T {
        self.e_k2 - self.m_k * self.m_k
    }

    pub fn var_i(&self) -> T {
        self.p_d * (T::one() - self.p_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivities<T> {
    /// `f'(μ)` with `f(μ) = E[K^r]`.
    pub f_prime: T,
    /// `∂_μ g(μ, λ)` with `g = P_d`.
    pub dg_dmu: T,
    pub dg_dlambda: T,
}

pub type Matrix3<T> = [[T; 3]; 3];
pub type Matrix23<T> = [[T; 3]; 2];
pub type Matrix2<T> = [[T; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceBundle<T> {
    /// Asymptotic covariance of `√t (N^r_t/t, N^f_t/t, N^i_t/t)`.
    pub r: Matrix3<T>,
    /// Jacobian of `(μ, λ)` with respect to the rates `(N^r, N^f, N^i)/t`.
    pub a: Matrix23<T>,
    /// Asymptotic covariance of `√t (μ_t - μ, λ_t - λ)`.
    pub sigma2: Matrix2<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// `Σ_k E[e^{-λ D_k} ∫_0^{D_k} e^{λt} n_μ(dt)]`.
    Plain,
    /// The same series with the `k`-th term weighted by `k`.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Wrt {
    Nothing,
    Mu,
    Lambda,
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    H,
    F,
}

/// Every quantity as a jet of order `m` in a perturbation of one rate.
struct Expansion<T> {
    m: usize,
    wrt: Wrt,
    near: bool,
    mu: Jet<T>,
    delta: Jet<T>,
    // high-order derivative jets at μ
    s_mu: Jet<T>,
    h_mu: Jet<T>,
    f_mu: Jet<T>,
    // order-m jets at λ
    l_lam: Jet<T>,
    h_lam: Jet<T>,
    f_lam: Jet<T>,
}

fn near_diagonal<T: Real>(mu: T, lambda: T, insp: &InspectionLaw<T>) -> bool {
    let scale = (insp.c() + insp.h()).max(T::one() / mu);
    (mu - lambda).abs() * scale <= T::lit(SERIES_RADIUS)
}

impl<T: Real> Expansion<T> {
    /// `max_shape` is the largest shape any caller will ask for.
    fn new(model: &Model<T>, wrt: Wrt, m: usize, max_shape: usize) -> Result<Self> {
        let (mu, lambda) = (model.mu(), model.lambda());
        let insp = &model.inspection;
        let near = near_diagonal(mu, lambda, insp);
        let order = max_shape + m + if near { SERIES_TERMS + 1 } else { 0 };
        let l_mu = insp.laplace_jet_capped(mu, order, order)?;
        let s_mu = l_mu.rsub_scalar(T::one()).recip();
        let h_mu = &l_mu * &s_mu;
        let f_mu = &h_mu * &s_mu;

        let l_lam = match wrt {
            Wrt::Lambda => insp.laplace_jet_capped(lambda, m, m)?,
            _ => Jet::constant(insp.laplace(lambda), m),
        };
        let s_lam = l_lam.rsub_scalar(T::one()).recip();
        let h_lam = &l_lam * &s_lam;
        let f_lam = &h_lam * &s_lam;

        let var = |at: T, active: bool| {
            if active {
                Jet::variable(at, m)
            } else {
                Jet::constant(at, m)
            }
        };
        let mu_j = var(mu, wrt == Wrt::Mu);
        let lam_j = var(lambda, wrt == Wrt::Lambda);
        Ok(Self {
            m,
            wrt,
            near,
            delta: &mu_j - &lam_j,
            mu: mu_j,
            s_mu,
            h_mu,
            f_mu,
            l_lam,
            h_lam,
            f_lam,
        })
    }

    /// `G^(i)(μ + ε)` as a jet in `ε`.
    fn at_mu(&self, g: &Jet<T>, i: usize) -> Jet<T> {
        if self.wrt == Wrt::Mu {
            g.shift(i).truncate(self.m)
        } else {
            Jet::constant(g.derivative(i), self.m)
        }
    }

    fn constant(&self, v: T) -> Jet<T> {
        Jet::constant(v, self.m)
    }

    /// `Σ_{i<n} μ^i/i! (-1)^i G^(i)(μ)`.
    fn taylor_sum(&self, g: &Jet<T>, n: usize) -> Jet<T> {
        let mut acc = self.constant(T::zero());
        for i in 0..n {
            let sign = if i % 2 == 0 { T::one() } else { -T::one() };
            let coef = self.mu.powi(i as u32).scale(sign / factorial::<T>(i));
            acc = &acc + &(&coef * &self.at_mu(g, i));
        }
        acc
    }

    /// `E[K^r]` for shape `n`.
    fn expected_kr(&self, n: usize) -> Jet<T> {
        self.taylor_sum(&self.s_mu, n)
    }

    /// `(G(λ) - Σ_{i<n} (λ-μ)^i/i! G^(i)(μ)) / (μ-λ)^n`, the scaled Taylor remainder
    /// of `G` around `μ` evaluated at `λ`. It is smooth across `λ = μ`, where it
    /// equals `(-1)^n G^(n)(μ)/n!`.
    fn remainder(&self, kernel: Kernel, n: usize) -> Jet<T> {
        let (g_mu, g_lam) = match kernel {
            Kernel::H => (&self.h_mu, &self.h_lam),
            Kernel::F => (&self.f_mu, &self.f_lam),
        };
        if self.near {
            let mut acc = self.constant(T::zero());
            let mut dpow = self.constant(T::one());
            for j in 0..=SERIES_TERMS {
                let k = n + j;
                let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                let term = (&dpow * &self.at_mu(g_mu, k)).scale(sign / factorial::<T>(k));
                acc = &acc + &term;
                dpow = &dpow * &self.delta;
            }
            acc
        } else {
            let minus_delta = -&self.delta;
            let mut taylor = self.constant(T::zero());
            let mut dpow = self.constant(T::one());
            for i in 0..n {
                let term = (&dpow * &self.at_mu(g_mu, i)).scale(T::one() / factorial::<T>(i));
                taylor = &taylor + &term;
                dpow = &dpow * &minus_delta;
            }
            &(g_lam - &taylor) / &self.delta.powi(n as u32)
        }
    }

    fn lemma_series(&self, kind: SeriesKind, n: usize) -> Jet<T> {
        let kernel = match kind {
            SeriesKind::Plain => Kernel::H,
            SeriesKind::Weighted => Kernel::F,
        };
        &self.mu.powi(n as u32) * &self.remainder(kernel, n)
    }

    /// `1 - P_d = (1 - L(λ)) · Σ_k E[e^{-λ D_k} ∫_0^{D_k} e^{λt} n_μ(dt)]`.
    fn prob_failure(&self, n: usize) -> Jet<T> {
        let survive = &self.l_lam.rsub_scalar(T::one()) * &self.lemma_series(SeriesKind::Plain, n);
        survive.rsub_scalar(T::one())
    }
}

fn shape_of<T: Real>(model: &Model<T>) -> usize {
    model.shape() as usize
}

/// `E[K^r]`, the mean number of inspections per cycle (detection included).
pub fn expected_kr<T: Real>(sane: &SaneLaw<T>, insp: &InspectionLaw<T>) -> Result<T> {
    let n = sane.shape() as usize;
    let model = Model::new(*sane, DamageLaw::new(sane.rate())?, *insp);
    Ok(Expansion::new(&model, Wrt::Nothing, 0, n)?.expected_kr(n).value())
}

/// `P_d = P(V^s ≥ Z^d)`.
pub fn prob_failure<T: Real>(model: &Model<T>) -> Result<T> {
    let n = shape_of(model);
    Ok(Expansion::new(model, Wrt::Nothing, 0, n)?.prob_failure(n).value())
}

/// `E[X^r] = n/μ + P_d/λ`.
pub fn expected_xr<T: Real>(model: &Model<T>) -> Result<T> {
    Ok(model.sane.mean() + prob_failure(model)? / model.lambda())
}

/// The two inspection-epoch series the closed forms are built from.
pub fn lemma_series<T: Real>(kind: SeriesKind, model: &Model<T>) -> Result<T> {
    let n = shape_of(model);
    Ok(Expansion::new(model, Wrt::Nothing, 0, n)?
        .lemma_series(kind, n)
        .value())
}

pub fn moment_set<T: Real>(model: &Model<T>) -> Result<MomentSet<T>> {
    let n = shape_of(model);
    let (mu, lambda) = (model.mu(), model.lambda());
    let nn = T::from_usize_lossy(n);
    let one = T::one();

    let ex = Expansion::new(model, Wrt::Nothing, 0, n + 1)?;
    let m_k = ex.expected_kr(n).value();
    let m_k_next = ex.expected_kr(n + 1).value();
    let p_d = ex.prob_failure(n).value();
    let p_d_next = ex.prob_failure(n + 1).value();
    let m_x = nn / mu + p_d / lambda;
    let e_k2 = m_k + (ex.taylor_sum(&ex.f_mu, n).value() + ex.taylor_sum(&ex.f_mu, n).value());

    let dg_dlambda = Expansion::new(model, Wrt::Lambda, 1, n)?
        .prob_failure(n)
        .derivative(1);
    // E[Z^d I] = P_d/λ + E[Y^s e^{-λW}] + ∂_λ E[e^{-λW}], W = V^s - Y^s
    let e_zdi = p_d / lambda + nn / mu * p_d_next - dg_dlambda;
    let e_x2 = nn * (nn + one) / (mu * mu) + (lambda.recip() + lambda.recip()) * e_zdi;

    let l_lam = ex.l_lam.value();
    let e_krd = (one - l_lam) * ex.lemma_series(SeriesKind::Weighted, n).value()
        - (one - p_d) * l_lam / (one - l_lam);

    Ok(MomentSet {
        m_k,
        p_d,
        m_x,
        e_k2,
        e_x2,
        cov_xi: e_zdi - m_x * p_d,
        cov_ki: (one - p_d) * m_k - e_krd,
        cov_kx: nn / mu * m_k_next + (lambda.recip() - m_x) * m_k - e_krd / lambda,
        e_zdi,
        e_krd,
    })
}

/// Covariance of `(X, P_d X - m_x I, m_k X - m_x K)` over one cycle, scaled by `m_x^{-3}`.
///
/// These are the cycle rewards whose renewal CLT yields the joint limit of
/// `(N^r_t, N^f_t, N^i_t)/t`.
pub fn clt_matrix<T: Real>(ms: &MomentSet<T>) -> Result<Matrix3<T>> {
    let tol = T::lit(1e-10);
    let checks = [
        ("V[X]", ms.var_x(), ms.e_x2),
        ("V[K]", ms.var_k(), ms.e_k2),
        ("V[I]", ms.var_i(), ms.p_d.max(T::min_positive_value())),
    ];
    for (name, v, scale) in checks {
        if !v.is_finite() || v < -tol * scale {
            return Err(Error::InconsistentMoments(format!("{name} = {v}")));
        }
    }
    let (vx, vk, vi) = (
        ms.var_x().max(T::zero()),
        ms.var_k().max(T::zero()),
        ms.var_i().max(T::zero()),
    );
    let (pd, mx, mk) = (ms.p_d, ms.m_x, ms.m_k);
    let two = T::lit(2.0);
    let c00 = vx;
    let c01 = pd * vx - mx * ms.cov_xi;
    let c02 = mk * vx - mx * ms.cov_kx;
    let c11 = pd * pd * vx - two * pd * mx * ms.cov_xi + mx * mx * vi;
    let c12 = pd * mk * vx - pd * mx * ms.cov_kx - mx * mk * ms.cov_xi + mx * mx * ms.cov_ki;
    let c22 = mk * mk * vx - two * mk * mx * ms.cov_kx + mx * mx * vk;
    let s = (mx * mx * mx).recip();
    Ok([
        [c00 * s, c01 * s, c02 * s],
        [c01 * s, c11 * s, c12 * s],
        [c02 * s, c12 * s, c22 * s],
    ])
}

/// `f'`, `∂_μ g` and `∂_λ g` by first-order jets; valid for every shape.
pub fn sensitivities<T: Real>(model: &Model<T>) -> Result<Sensitivities<T>> {
    let n = shape_of(model);
    let by_mu = Expansion::new(model, Wrt::Mu, 1, n)?;
    let by_lambda = Expansion::new(model, Wrt::Lambda, 1, n)?;
    Ok(Sensitivities {
        f_prime: by_mu.expected_kr(n).derivative(1),
        dg_dmu: by_mu.prob_failure(n).derivative(1),
        dg_dlambda: by_lambda.prob_failure(n).derivative(1),
    })
}

/// The explicit `n = 1` and `n = 2` expressions of `f'`, `∂_μ g`, `∂_λ g` in terms of
/// `L`, `L'`, `L''`, `L'''`. The `λ = μ` forms are used when
/// `|μ - λ| ≤ 10⁻⁶ · max(μ, λ)`.
pub fn sensitivities_closed_form<T: Real>(model: &Model<T>) -> Result<Sensitivities<T>> {
    let (mu, lambda) = (model.mu(), model.lambda());
    let insp = &model.inspection;
    let lm = insp.laplace_jet(mu, 3)?;
    let (l, l1, l2, l3) = (
        lm.derivative(0),
        lm.derivative(1),
        lm.derivative(2),
        lm.derivative(3),
    );
    let ll = insp.laplace_jet(lambda, 1)?;
    let (la, la1) = (ll.derivative(0), ll.derivative(1));
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let q = one - l;
    let d = mu - lambda;
    let diagonal = d.abs() <= T::lit(DIAGONAL_TOLERANCE) * mu.max(lambda);

    let out = match model.shape() {
        1 => {
            let f_prime = l1 / (q * q);
            let (dg_dmu, dg_dlambda) = if diagonal {
                (
                    (mu / two * l2 + l1) / q + mu * l1 * l1 / (q * q),
                    mu * l2 / (two * q),
                )
            } else {
                (
                    -(lambda / (d * d) * (l - la) / q + mu / d * l1 * (la - one) / (q * q)),
                    -(mu / (d * d) * (la - l) / q + mu / d * la1 / q),
                )
            };
            Sensitivities {
                f_prime,
                dg_dmu,
                dg_dlambda,
            }
        }
        2 => {
            let f_prime = -mu * (l2 * q + two * l1 * l1) / (q * q * q);
            let (dg_dmu, dg_dlambda) = if diagonal {
                (
                    -mu / (q * q * q)
                        * (two * q * (mu * l1 * l2 + l1 * l1)
                            + q * q * (l2 + mu / three * l3)
                            + two * mu * l1 * l1 * l1),
                    -mu * mu / (two * q * q) * (l2 * l1 + q * l3 / three),
                )
            } else {
                let qa = one - la;
                (
                    -mu / (q * q * q * d * d * d)
                        * (-two * lambda * q * ((la - l) * q + d * l1 * qa)
                            + mu * d * d * qa * (l2 * q + two * l1 * l1)),
                    -two * mu * mu / (d * d * d * q * q)
                        * (q * (la - l) + d / two * (la1 * q + l1 * qa)
                            - d * d / two * la1 * l1),
                )
            };
            Sensitivities {
                f_prime,
                dg_dmu,
                dg_dlambda,
            }
        }
        n => {
            return Err(Error::Unsupported(format!(
                "explicit sensitivity formulas exist for shapes 1 and 2 only, got {n}"
            )))
        }
    };
    Ok(out)
}

/// `A` and `Σ² = A R Aᵀ`, with `h = m_x`, `f = m_k`, `g = P_d`.
///
/// `A` is the Jacobian of `(μ, λ) = (f⁻¹(ι/r), g⁻¹_μ(φ/r))` at the limiting rates
/// `(r, φ, ι) = (1, g, f)/h`, so its failure column is `∂λ/∂φ = h/∂_λ g`.
/// Columns follow the order of `R`: repairs, failures, inspections.
pub fn sigma_matrix<T: Real>(
    ms: &MomentSet<T>,
    sens: &Sensitivities<T>,
    r: &Matrix3<T>,
) -> Result<CovarianceBundle<T>> {
    let (h, f, g) = (ms.m_x, ms.m_k, ms.p_d);
    let Sensitivities {
        f_prime,
        dg_dmu,
        dg_dlambda,
    } = *sens;
    if !(f_prime.abs() > T::zero()) {
        return Err(Error::NonIdentifiable(
            "f'(μ) vanishes, μ cannot be recovered from the inspection rate".into(),
        ));
    }
    if !(dg_dlambda.abs() >= T::lit(1e-14) * g.abs()) || dg_dlambda == T::zero() {
        return Err(Error::NonIdentifiable(format!(
            "∂g/∂λ = {dg_dlambda} is negligible against P_d = {g}"
        )));
    }
    let k = h / f_prime;
    let a = [
        [-f * k, T::zero(), k],
        [
            k * (f * dg_dmu / dg_dlambda - g * f_prime / dg_dlambda),
            h / dg_dlambda,
            -k * dg_dmu / dg_dlambda,
        ],
    ];
    Ok(CovarianceBundle {
        r: *r,
        a,
        sigma2: sandwich(&a, r),
    })
}

/// `A M Aᵀ`, symmetrized.
pub fn sandwich<T: Real>(a: &Matrix23<T>, m: &Matrix3<T>) -> Matrix2<T> {
    let mut out = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = T::zero();
            for p in 0..3 {
                for q in 0..3 {
                    acc += a[i][p] * m[p][q] * a[j][q];
                }
            }
            out[i][j] = acc;
        }
    }
    let off = (out[0][1] + out[1][0]) * T::lit(0.5);
    out[0][1] = off;
    out[1][0] = off;
    out
}

/// Moments, sensitivities and the covariance bundle at the model's rates.
pub fn covariance_bundle<T: Real>(model: &Model<T>) -> Result<CovarianceBundle<T>> {
    let ms = moment_set(model)?;
    let r = clt_matrix(&ms)?;
    sigma_matrix(&ms, &sensitivities(model)?, &r)
}

/// Eigenvalues of a symmetric 3×3 matrix, ascending (trigonometric method).
pub fn symmetric_eigenvalues3<T: Real>(m: &Matrix3<T>) -> [T; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let trace = m[0][0] + m[1][1] + m[2][2];
    let three = T::lit(3.0);
    if p1 == T::zero() {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return d;
    }
    let q = trace / three;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + p1 + p1;
    let p = (p2 / T::lit(6.0)).sqrt();
    let b = |i: usize, j: usize| (m[i][j] - if i == j { q } else { T::zero() }) / p;
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
        - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = (det / T::lit(2.0)).max(-T::one()).min(T::one());
    let phi = r.acos() / three;
    let two_pi_3 = T::lit(2.0 * std::f64::consts::PI / 3.0);
    let e_hi = q + (p + p) * phi.cos();
    let e_lo = q + (p + p) * (phi + two_pi_3).cos();
    let e_mid = trace - e_hi - e_lo;
    [e_lo, e_mid, e_hi]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(n: u32, mu: f64, lambda: f64, h: Option<f64>) -> Model<f64> {
        let insp = match h {
            None => InspectionLaw::deterministic(1000.0).unwrap(),
            Some(h) => InspectionLaw::uniform(1000.0, h).unwrap(),
        };
        Model::new(
            SaneLaw::new(n, mu).unwrap(),
            DamageLaw::new(lambda).unwrap(),
            insp,
        )
    }

    #[test]
    fn expected_kr_examples() {
        let det = InspectionLaw::deterministic(1000.0).unwrap();
        let e1 = (-1f64).exp();
        let m_k = expected_kr(&SaneLaw::new(1, 1e-3).unwrap(), &det).unwrap();
        assert_relative_eq!(m_k, 1.0 / (1.0 - e1), max_relative = 1e-14);
        let m_k = expected_kr(&SaneLaw::new(1, 1.0).unwrap(), &det).unwrap();
        assert_relative_eq!(m_k, 1.0, max_relative = 1e-14);
        // n = 2: (1 - L - μL')/(1-L)²
        let m_k = expected_kr(&SaneLaw::new(2, 1e-3).unwrap(), &det).unwrap();
        let (l, l1) = (e1, -1000.0 * e1);
        assert_relative_eq!(m_k, (1.0 - l - 1e-3 * l1) / (1.0 - l).powi(2), max_relative = 1e-13);
    }

    #[test]
    fn prob_failure_examples() {
        let e = |x: f64| (-x).exp();
        let p = prob_failure(&model(1, 1e-3, 5e-4, None)).unwrap();
        assert_relative_eq!(p, 1.0 - 2.0 * (e(0.5) - e(1.0)) / (1.0 - e(1.0)), max_relative = 1e-13);
        assert_relative_eq!(p, 0.244918, max_relative = 1e-5);
        let p = prob_failure(&model(1, 1e-3, 1e-3, None)).unwrap();
        assert_relative_eq!(p, 1.0 - e(1.0) / (1.0 - e(1.0)), max_relative = 1e-13);
        let p = prob_failure(&model(1, 1e-3, 1e-12, None)).unwrap();
        assert!(p.abs() < 1e-8, "{p}");
    }

    #[test]
    fn expected_xr_example() {
        let m = model(1, 1e-3, 5e-4, None);
        let p = prob_failure(&m).unwrap();
        assert_relative_eq!(expected_xr(&m).unwrap(), 1000.0 + p / 5e-4, max_relative = 1e-15);
        assert_relative_eq!(expected_xr(&m).unwrap(), 1489.84, max_relative = 1e-5);
    }

    #[test]
    fn plain_series_diagonal_hand_value() {
        // n = 1, λ = μ: -μ (L/(1-L))'(μ) = -μ L'/(1-L)²
        let m = model(1, 1e-3, 1e-3, None);
        let e1 = (-1f64).exp();
        let hand = -1e-3 * (-1000.0 * e1) / (1.0 - e1).powi(2);
        assert_relative_eq!(lemma_series(SeriesKind::Plain, &m).unwrap(), hand, max_relative = 1e-13);
    }

    #[test]
    fn moment_set_reference_values() {
        // independent high-precision evaluation at μ = 1e-3, λ = 5e-4, c = 1000
        let ms = moment_set(&model(1, 1e-3, 5e-4, None)).unwrap();
        assert_relative_eq!(ms.m_k, 1.5819767068693264, max_relative = 1e-12);
        assert_relative_eq!(ms.p_d, 0.24491866240370913, max_relative = 1e-12);
        assert_relative_eq!(ms.m_x, 1489.8373248074183, max_relative = 1e-12);
        assert_relative_eq!(ms.e_k2, 3.423323895284911, max_relative = 1e-11);
        assert_relative_eq!(ms.e_x2, 3181264.9477534075, max_relative = 1e-11);
        assert_relative_eq!(ms.e_zdi, 295.3162369383519, max_relative = 1e-10);
        assert_relative_eq!(ms.e_krd, 1.1945210878690664, max_relative = 1e-11);
        assert_relative_eq!(ms.cov_xi, -69.5727278526013, max_relative = 1e-9);
        assert_relative_eq!(ms.cov_kx, 920.6735942077923, max_relative = 1e-10);
        assert!(ms.cov_ki.abs() < 1e-12);
        assert_relative_eq!(ms.var_i(), 0.184933, max_relative = 1e-5);
    }

    #[test]
    fn shape_two_and_uniform_reference_values() {
        let ms = moment_set(&model(2, 1e-3, 5e-4, None)).unwrap();
        assert_relative_eq!(ms.m_k, 2.502650301077119, max_relative = 1e-12);
        assert_relative_eq!(ms.p_d, 0.21435098827329563, max_relative = 1e-12);
        assert_relative_eq!(ms.m_x, 2428.701976546591, max_relative = 1e-12);
        let ms = moment_set(&model(1, 1e-3, 5e-4, Some(100.0))).unwrap();
        assert_relative_eq!(ms.m_k, 1.5835134215694218, max_relative = 1e-12);
        assert_relative_eq!(ms.p_d, 0.24532748805590968, max_relative = 1e-12);
        let ms = moment_set(&model(2, 1e-3, 5e-4, Some(100.0))).unwrap();
        assert_relative_eq!(ms.m_k, 2.504436803224122, max_relative = 1e-12);
        assert_relative_eq!(ms.p_d, 0.2148996752387493, max_relative = 1e-12);
    }

    #[test]
    fn failure_identity_and_weighted_domination() {
        for &(n, lam) in &[(1, 3e-4), (2, 5e-4), (3, 2e-3), (2, 1e-3)] {
            let m = model(n, 1e-3, lam, Some(250.0));
            let plain = lemma_series(SeriesKind::Plain, &m).unwrap();
            let weighted = lemma_series(SeriesKind::Weighted, &m).unwrap();
            let l = m.inspection.laplace(lam);
            let p = prob_failure(&m).unwrap();
            assert_relative_eq!(1.0 - p, (1.0 - l) * plain, max_relative = 1e-12);
            assert!(weighted >= plain);
        }
    }

    #[test]
    fn continuous_across_the_diagonal() {
        for n in 1..=4 {
            for h in [None, Some(100.0)] {
                let mu = 1e-3;
                let at = prob_failure(&model(n, mu, mu, h)).unwrap();
                for eps in [1e-9, 1e-6, 1e-4, 5e-3, 2e-2] {
                    for sign in [-1.0, 1.0] {
                        let lam = mu * (1.0 + sign * eps);
                        let p = prob_failure(&model(n, mu, lam, h)).unwrap();
                        let slope = 300.0 * mu * eps;
                        assert!((p - at).abs() <= slope + 1e-12, "n={n} eps={eps}: {p} vs {at}");
                    }
                }
            }
        }
    }

    #[test]
    fn series_and_direct_branches_agree_at_switch() {
        // at the switch both evaluations are accurate; compare them explicitly
        let mu = 1e-3;
        let lam = mu - 0.999 * SERIES_RADIUS / 1000.0;
        for n in 1..=3 {
            let m = model(n, mu, lam, None);
            let series = Expansion::new(&m, Wrt::Nothing, 0, n as usize).unwrap();
            let mut direct = Expansion::new(&m, Wrt::Nothing, 0, n as usize).unwrap();
            assert!(series.near);
            direct.near = false;
            let a = series.prob_failure(n as usize).value();
            let b = direct.prob_failure(n as usize).value();
            assert_relative_eq!(a, b, max_relative = 1e-15 * 100f64.powi(n as i32));
        }
    }

    #[test]
    fn closed_form_sensitivities_match_jets() {
        for n in [1, 2] {
            for h in [None, Some(100.0)] {
                for &(mu, lam) in &[(1e-3, 5e-4), (5e-4, 1e-3), (1e-3, 1e-3), (2e-3, 2.5e-4)] {
                    let m = model(n, mu, lam, h);
                    let jet = sensitivities(&m).unwrap();
                    let cf = sensitivities_closed_form(&m).unwrap();
                    assert_relative_eq!(jet.f_prime, cf.f_prime, max_relative = 1e-10);
                    assert_relative_eq!(jet.dg_dmu, cf.dg_dmu, max_relative = 1e-8);
                    assert_relative_eq!(jet.dg_dlambda, cf.dg_dlambda, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn diagonal_sensitivity_reference_values() {
        let s = sensitivities(&model(2, 1e-3, 1e-3, None)).unwrap();
        assert_relative_eq!(s.dg_dmu, 6.242926994, max_relative = 1e-9);
        assert_relative_eq!(s.dg_dlambda, 266.3445615, max_relative = 1e-9);
        let s = sensitivities(&model(2, 1e-3, 1e-3, Some(100.0))).unwrap();
        assert_relative_eq!(s.dg_dmu, 6.336242299, max_relative = 1e-9);
        assert_relative_eq!(s.dg_dlambda, 266.365008, max_relative = 1e-8);
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let m = model(1, 1e-3, 5e-4, None);
        let s = sensitivities(&m).unwrap();
        let step = 1e-9;
        let kr = |mu: f64| expected_kr(&SaneLaw::new(1, mu).unwrap(), &m.inspection).unwrap();
        let fd = (kr(1e-3 + step) - kr(1e-3 - step)) / (2.0 * step);
        assert_relative_eq!(s.f_prime, fd, max_relative = 1e-6);
        let g = |mu: f64, lam: f64| prob_failure(&m.with_rates(mu, lam).unwrap()).unwrap();
        let fd = (g(1e-3 + step, 5e-4) - g(1e-3 - step, 5e-4)) / (2.0 * step);
        assert_relative_eq!(s.dg_dmu, fd, max_relative = 1e-6);
        let fd = (g(1e-3, 5e-4 + step) - g(1e-3, 5e-4 - step)) / (2.0 * step);
        assert_relative_eq!(s.dg_dlambda, fd, max_relative = 1e-6);
        assert!(s.f_prime < 0.0 && s.dg_dlambda > 0.0);
    }

    #[test]
    fn sigma_wiring() {
        let m = model(1, 1e-3, 5e-4, None);
        let ms = moment_set(&m).unwrap();
        let sens = sensitivities(&m).unwrap();
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let bundle = sigma_matrix(&ms, &sens, &id).unwrap();
        let a = bundle.a;
        for i in 0..2 {
            for j in 0..2 {
                let aat: f64 = (0..3).map(|p| a[i][p] * a[j][p]).sum();
                assert_relative_eq!(bundle.sigma2[i][j], aat, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn sensitivity_matrix_inverts_the_rate_map() {
        // A is the Jacobian of (μ, λ) w.r.t. (r, φ, ι) = (1/m_x, P_d/m_x, m_k/m_x);
        // so A times the Jacobian of the rates w.r.t. (μ, λ) is the identity.
        let m = model(2, 1e-3, 5e-4, Some(100.0));
        let bundle = covariance_bundle(&m).unwrap();
        let rates = |mu: f64, lam: f64| {
            let ms = moment_set(&m.with_rates(mu, lam).unwrap()).unwrap();
            [1.0 / ms.m_x, ms.p_d / ms.m_x, ms.m_k / ms.m_x]
        };
        let (hm, hl) = (1e-9, 5e-10);
        let (up, dn) = (rates(1e-3 + hm, 5e-4), rates(1e-3 - hm, 5e-4));
        let d_mu: Vec<f64> = (0..3).map(|i| (up[i] - dn[i]) / (2.0 * hm)).collect();
        let (up, dn) = (rates(1e-3, 5e-4 + hl), rates(1e-3, 5e-4 - hl));
        let d_lam: Vec<f64> = (0..3).map(|i| (up[i] - dn[i]) / (2.0 * hl)).collect();
        let a = bundle.a;
        let dot = |row: usize, col: &[f64]| (0..3).map(|p| a[row][p] * col[p]).sum::<f64>();
        assert_relative_eq!(dot(0, &d_mu), 1.0, epsilon = 1e-5);
        assert!(dot(0, &d_lam).abs() < 1e-5 * 1e-3 / 5e-4);
        assert!(dot(1, &d_mu).abs() < 1e-5);
        assert_relative_eq!(dot(1, &d_lam), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn clt_matrix_is_psd() {
        let ms = moment_set(&model(1, 1e-3, 5e-4, None)).unwrap();
        let r = clt_matrix(&ms).unwrap();
        assert_relative_eq!(r[0][0], ms.var_x() / ms.m_x.powi(3), max_relative = 1e-14);
        let ev = symmetric_eigenvalues3(&r);
        let trace = r[0][0] + r[1][1] + r[2][2];
        assert!(ev[0] >= -1e-10 * trace, "{ev:?}");
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        let m = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let ev = symmetric_eigenvalues3(&m);
        assert_relative_eq!(ev[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(ev[1], 3.0, max_relative = 1e-12);
        assert_relative_eq!(ev[2], 5.0, max_relative = 1e-12);
    }

    #[test]
    fn inconsistent_moments_are_rejected() {
        let mut ms = moment_set(&model(1, 1e-3, 5e-4, None)).unwrap();
        ms.e_x2 = 0.5 * ms.m_x * ms.m_x;
        assert!(matches!(clt_matrix(&ms), Err(Error::InconsistentMoments(_))));
    }

    #[test]
    fn generic_over_f32() {
        let m = Model::new(
            SaneLaw::new(1, 1e-3f32).unwrap(),
            DamageLaw::new(5e-4f32).unwrap(),
            InspectionLaw::deterministic(1000f32).unwrap(),
        );
        let p = prob_failure(&m).unwrap();
        assert!((p - 0.244918).abs() < 1e-4, "{p}");
    }
}
