use cbm_core::estimators::am_estimate;
use cbm_core::formulas::{clt_matrix, moment_set, Model};
use cbm_core::oracle::mc_moment_set;
use cbm_core::simulator::simulate_seeded;
use cbm_core::{DamageLaw, Design, InspectionLaw, SaneLaw};

fn model(shape: u32, insp: InspectionLaw<f64>) -> Model<f64> {
    Model::new(SaneLaw::new(shape, 1e-3).unwrap(), DamageLaw::new(5e-4).unwrap(), insp)
}

fn setups() -> Vec<Model<f64>> {
    vec![
        model(1, InspectionLaw::deterministic(1000.0).unwrap()),
        model(2, InspectionLaw::uniform(1000.0, 100.0).unwrap()),
    ]
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

#[test]
fn counts_follow_the_law_of_large_numbers() {
    let t = 1e7;
    for (k, m) in setups().iter().enumerate() {
        let ms = moment_set(m).unwrap();
        let r = clt_matrix(&ms).unwrap();
        let counts = simulate_seeded(m, t, &[], 100 + k as u64).unwrap().counts_at(t).unwrap();
        let limits = [1.0 / ms.m_x, ms.p_d / ms.m_x, ms.m_k / ms.m_x];
        let observed = [counts.n_r, counts.n_f, counts.n_i].map(|n| n as f64 / t);
        for i in 0..3 {
            let sd = (r[i][i] / t).sqrt();
            assert!(
                (observed[i] - limits[i]).abs() <= 4.0 * sd,
                "setup {k}, count {i}: {} vs {} (sd {sd})",
                observed[i],
                limits[i]
            );
        }
    }
}

#[test]
fn failure_interarrival_mean_matches_wald() {
    let t = 1e7;
    for (k, m) in setups().iter().enumerate() {
        let ms = moment_set(m).unwrap();
        let traj = simulate_seeded(m, t, &[], 200 + k as u64).unwrap();
        let mut clock = 0.0;
        let mut last = None;
        let mut gaps = Vec::new();
        for c in traj.completed_by(t) {
            clock += c.x_r;
            if c.failed() {
                if let Some(prev) = last {
                    gaps.push(clock - prev);
                }
                last = Some(clock);
            }
        }
        let n = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / n;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let expected = ms.m_x / ms.p_d;
        let se = (var / n).sqrt();
        assert!((mean - expected).abs() <= 4.0 * se, "setup {k}: {mean} vs {expected} (se {se})");
    }
}

#[test]
fn am_error_shrinks_with_the_horizon() {
    let m = &setups()[0];
    let design = Design { shape: m.shape(), inspection: m.inspection };
    let mut medians = Vec::new();
    for (j, t) in [1e5, 1e6, 1e7].into_iter().enumerate() {
        let errors: Vec<f64> = (0..50u64)
            .filter_map(|rep| {
                let seed = 1000 * (j as u64 + 1) + rep;
                let counts = simulate_seeded(m, t, &[], seed).unwrap().counts_at(t).unwrap();
                let est = am_estimate(&counts, &design, 0.95).ok()?;
                Some((est.mu_hat - m.mu()).abs() / m.mu())
            })
            .collect();
        assert!(errors.len() >= 45, "too many infeasible replicates at t = {t}");
        medians.push(median(errors));
    }
    // √10 per decade in expectation
    for w in medians.windows(2) {
        assert!(w[1] < w[0] / 1.5, "{medians:?}");
    }
}

#[test]
fn oracle_standard_error_halves_when_samples_quadruple() {
    let m = &setups()[1];
    let (mut small, mut large) = (0.0, 0.0);
    for seed in 0..10u64 {
        small += mc_moment_set(m, 20_000, seed).unwrap().moments.m_x.std_err;
        large += mc_moment_set(m, 80_000, 50 + seed).unwrap().moments.m_x.std_err;
    }
    let ratio = small / large;
    assert!((ratio - 2.0).abs() <= 0.4, "{ratio}");
}
