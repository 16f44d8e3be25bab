use lifegraph::cox::{
    c_index, fit_matrix, neg_log_partial_likelihood, DEFAULT_L2, GRADIENT_TOLERANCE,
};
use lifegraph::univariate::{ecdf_survival, km_fit, na_fit, survival_from_cumhazard};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

fn censored_data() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec((0u32..=20).prop_map(f64::from), n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

fn design(seed: u64, n: usize, p: usize) -> (DMatrix<f64>, Vec<f64>, Vec<bool>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| r.sample::<f64, _>(StandardNormal));
    let d = (0..n).map(|_| r.random_range(0..8) as f64).collect();
    let mut o: Vec<bool> = (0..n).map(|_| r.random_bool(0.7)).collect();
    o[0] = true;
    (x, d, o)
}

proptest! {
    #[test]
    fn km_and_na_are_monotone((d, o) in censored_data()) {
        let km = km_fit(&d, &o).unwrap();
        let na = na_fit(&d, &o).unwrap();
        prop_assert!(km.survival.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(km.survival.iter().all(|s| (0.0..=1.0).contains(s)));
        prop_assert!(na.cumhazard.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(na.increments.iter().all(|&i| i >= 0.0));
        prop_assert_eq!(km.at(-1.0), 1.0);
        prop_assert_eq!(na.at(-1.0), 0.0);
        let bridge = survival_from_cumhazard(&na);
        for t in 0..=21 {
            prop_assert!(bridge.at(t as f64) >= km.at(t as f64) - 1e-12);
        }
    }

    #[test]
    fn uncensored_km_is_the_ecdf(ages in prop::collection::vec(0u32..30, 1..80)) {
        let d: Vec<f64> = ages.iter().map(|&a| f64::from(a)).collect();
        let km = km_fit(&d, &vec![true; d.len()]).unwrap();
        let (_, ecdf) = ecdf_survival(&ages).unwrap();
        for t in 0..=31 {
            prop_assert!((km.at(t as f64) - ecdf.at(t as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n in 2usize..=50, p in 1usize..=8) {
        let (x, d, o) = design(seed, n, p);
        let beta = DVector::from_fn(p, |i, _| ((seed >> i) % 7) as f64 / 7.0 - 0.5);
        let (_, grad, _) = neg_log_partial_likelihood(&beta, &x, &d, &o, DEFAULT_L2).unwrap();
        let h = 1e-5;
        for k in 0..p {
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[k] += h;
            down[k] -= h;
            let fu = neg_log_partial_likelihood(&up, &x, &d, &o, DEFAULT_L2).unwrap().0;
            let fd = neg_log_partial_likelihood(&down, &x, &d, &o, DEFAULT_L2).unwrap().0;
            let fdiff = (fu - fd) / (2.0 * h);
            prop_assert!((grad[k] - fdiff).abs() <= 1e-6 * grad[k].abs().max(1.0), "{} vs {}", grad[k], fdiff);
        }
    }

    #[test]
    fn newton_never_raises_the_objective(seed in any::<u64>(), n in 20usize..=80, p in 1usize..=4) {
        let (x, d, o) = design(seed, n, p);
        let names: Vec<String> = (0..p).map(|i| format!("x{i}")).collect();
        let (beta, diag) = fit_matrix(&x, &d, &o, DEFAULT_L2, &names).unwrap();
        // steps inside the last few ulps are judged by the gradient
        let roundoff = 8.0 * f64::EPSILON;
        prop_assert!(
            diag.history.windows(2).all(|w| w[1] <= w[0] + roundoff * w[0].abs().max(1.0)),
            "{:?}",
            diag.history
        );
        let (_, grad, _) = neg_log_partial_likelihood(&beta, &x, &d, &o, DEFAULT_L2).unwrap();
        prop_assert!(grad.amax() < GRADIENT_TOLERANCE, "gradient {} after {} steps", grad.amax(), diag.iterations);
    }

    #[test]
    fn c_index_lies_in_the_unit_interval((d, mut o) in censored_data(), seed in any::<u64>()) {
        o[0] = true;
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = d.iter().map(|_| r.random_range(0..5) as f64).collect();
        if let Ok(c) = c_index(&s, &d, &o) {
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }
}

#[test]
fn na_and_km_agree_on_large_uncensored_samples() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let exp = Exp::new(0.3).unwrap();
    let d: Vec<f64> = (0..800).map(|_| exp.sample(&mut r)).collect();
    let km = km_fit(&d, &vec![true; d.len()]).unwrap();
    let bridge = survival_from_cumhazard(&na_fit(&d, &vec![true; d.len()]).unwrap());
    let gap = km
        .times
        .iter()
        .map(|&t| (bridge.at(t) - km.at(t)).abs())
        .fold(0.0, f64::max);
    assert!(gap < 0.05, "largest gap {gap}");
}

/// Efron objective for two covariates, straight from risk sets.
fn efron_2d(b: [f64; 2], x: &DMatrix<f64>, d: &[f64], o: &[bool], l2: f64) -> f64 {
    let eta: Vec<f64> = (0..d.len())
        .map(|i| b[0] * x[(i, 0)] + b[1] * x[(i, 1)])
        .collect();
    let mut times: Vec<f64> = d
        .iter()
        .zip(o)
        .filter(|(_, &ob)| ob)
        .map(|(&t, _)| t)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut value = 0.5 * l2 * (b[0] * b[0] + b[1] * b[1]);
    for t in times {
        let risk: f64 = (0..d.len())
            .filter(|&i| d[i] >= t)
            .map(|i| eta[i].exp())
            .sum();
        let dead: Vec<usize> = (0..d.len()).filter(|&i| d[i] == t && o[i]).collect();
        let tied: f64 = dead.iter().map(|&i| eta[i].exp()).sum();
        for (l, &i) in dead.iter().enumerate() {
            value += (risk - l as f64 / dead.len() as f64 * tied).ln() - eta[i];
        }
    }
    value
}

#[test]
fn two_covariate_fit_matches_a_coordinate_grid() {
    let (x, d, o) = design(5, 150, 2);
    let (beta, _) = fit_matrix(&x, &d, &o, DEFAULT_L2, &["a".into(), "b".into()]).unwrap();
    let mut b = [0.0, 0.0];
    let lattice: Vec<f64> = (-300..=300).map(|k| k as f64 * 0.01).collect();
    for _ in 0..20 {
        for axis in 0..2 {
            b[axis] = *lattice
                .iter()
                .min_by(|&&u, &&v| {
                    let mut bu = b;
                    let mut bv = b;
                    bu[axis] = u;
                    bv[axis] = v;
                    efron_2d(bu, &x, &d, &o, DEFAULT_L2)
                        .total_cmp(&efron_2d(bv, &x, &d, &o, DEFAULT_L2))
                })
                .unwrap();
        }
    }
    assert!(
        (beta[0] - b[0]).abs() < 1e-2 && (beta[1] - b[1]).abs() < 1e-2,
        "{beta:?} vs {b:?}"
    );
}

#[test]
fn true_risk_scores_are_concordant() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let n = 2000;
    let mut s = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = r.sample(StandardNormal);
        let t: f64 = Exp::new((1.5 * x).exp()).unwrap().sample(&mut r);
        s.push(1.5 * x);
        d.push(t);
    }
    let c = c_index(&s, &d, &vec![true; n]).unwrap();
    assert!(c > 0.7, "{c}");
}
