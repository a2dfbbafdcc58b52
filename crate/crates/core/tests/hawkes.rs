//! Hawkes simulation against cluster-matrix means, and covariance-based identification.

use medgraph_core::hawkes::covariance::{default_max_lag, DEFAULT_BIN_WIDTH, DEFAULT_TAIL};
use medgraph_core::hawkes::{
    identify, integrated_cov_empirical, integrated_cov_exact, mediation_model, simulate, simulate_cluster, HawkesModel,
    IdentifyOptions, MediationRoles, MediationWeights,
};
use medgraph_core::selftest::{self, random_mediation_hawkes, HAWKES_EXACT_TOL};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

const OBSERVED: [&str; 4] = ["A", "M", "D", "L"];

fn fixed_weights() -> MediationWeights {
    MediationWeights { ma: 0.5, da: 0.2, dm: 0.4, ml: 0.3, dl: 0.25, lu: 0.6, du: 0.35 }
}

#[test]
fn single_edge_offspring_are_poisson() {
    let g = 0.7;
    let model = HawkesModel::new(
        vec!["x".into(), "y".into()],
        vec![1.0, 1.0],
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, g, 0.0]),
        DMatrix::from_element(2, 2, 1.0),
    )
    .unwrap();
    let draws = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let bins = 5;
    let mut observed = vec![0.0; bins];
    for _ in 0..draws {
        let c = simulate_cluster(&model, 0, None, &mut rng).unwrap();
        assert_eq!(c[0], 1);
        observed[(c[1] as usize).min(bins - 1)] += 1.0;
    }
    let law = Poisson::new(g).unwrap();
    let mut stat = 0.0;
    for k in 0..bins {
        let p = if k + 1 < bins { law.pmf(k as u64) } else { 1.0 - (0..k).map(|j| law.pmf(j as u64)).sum::<f64>() };
        let expected = p * draws as f64;
        stat += (observed[k] - expected).powi(2) / expected;
    }
    let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p_value > 1e-3, "chi-square {stat}, p {p_value}");
}

#[test]
fn injected_treatment_events_reach_the_outcome_at_the_cluster_rate() {
    let model = mediation_model(fixed_weights(), [1.0, 0.2, 0.1, 0.3, 0.5], 2.0).unwrap();
    let r = model.cluster_matrix().unwrap().r;
    let (a, d) = (model.index_of("A").unwrap(), model.index_of("D").unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let draws = 40_000;
    let counts: Vec<f64> = (0..draws).map(|_| simulate_cluster(&model, a, None, &mut rng).unwrap()[d] as f64).collect();
    let mean = counts.iter().sum::<f64>() / draws as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let se = (var / draws as f64).sqrt();
    assert!((mean - r[(d, a)]).abs() <= 4.0 * se, "mean {mean}, R_DA {}, se {se}", r[(d, a)]);
}

#[test]
fn empirical_pipeline_recovers_effects() {
    let w = fixed_weights();
    let model = mediation_model(w, [1.0, 0.2, 0.1, 0.3, 0.5], 2.0).unwrap();
    let stream = simulate(&model, 1e5, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
    let lag = default_max_lag(&model, DEFAULT_BIN_WIDTH, DEFAULT_TAIL);
    let c = integrated_cov_empirical(&stream, &OBSERVED, DEFAULT_BIN_WIDTH, lag).unwrap();
    let opts = IdentifyOptions { structure_tol: 0.1, ..IdentifyOptions::default() };
    let id = identify(&c, &MediationRoles::default(), &opts).unwrap();
    assert!((id.direct - w.da).abs() <= 0.15 * w.da, "direct {}", id.direct);
    assert!((id.mediated - w.dm * w.ma).abs() <= 0.15 * w.dm * w.ma, "mediated {}", id.mediated);
}

#[test]
fn small_suites_pass() {
    assert!(selftest::cluster_matrix_agreement(4, 30).passed());
    assert!(selftest::hawkes_exact_identification(4, 30).passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_covariance_identifies_the_weights(seed in any::<u64>()) {
        let (model, w) = random_mediation_hawkes(&mut ChaCha8Rng::seed_from_u64(seed));
        let c = integrated_cov_exact(&model, Some(&OBSERVED)).unwrap();
        let id = identify(&c, &MediationRoles::default(), &IdentifyOptions::default()).unwrap();
        for (got, want) in [(id.g_ma, w.ma), (id.g_da, w.da), (id.g_dm, w.dm)] {
            prop_assert!((got - want).abs() <= HAWKES_EXACT_TOL * want.max(1.0), "{} vs {}", got, want);
        }
        prop_assert!((id.direct - w.da).abs() <= HAWKES_EXACT_TOL);
        prop_assert!((id.mediated - w.dm * w.ma).abs() <= HAWKES_EXACT_TOL);
        let r = model.cluster_matrix().unwrap().r;
        let (a, d) = (model.index_of("A").unwrap(), model.index_of("D").unwrap());
        prop_assert!((id.r_da - r[(d, a)]).abs() <= HAWKES_EXACT_TOL);
    }

    #[test]
    fn covariance_is_permutation_equivariant(seed in any::<u64>()) {
        let (model, _) = random_mediation_hawkes(&mut ChaCha8Rng::seed_from_u64(seed));
        let forward = integrated_cov_exact(&model, Some(&OBSERVED)).unwrap();
        let reversed: Vec<&str> = OBSERVED.iter().rev().copied().collect();
        let backward = integrated_cov_exact(&model, Some(&reversed)).unwrap();
        for a in OBSERVED {
            for b in OBSERVED {
                prop_assert_eq!(forward.get(a, b).unwrap(), backward.get(a, b).unwrap());
            }
        }
    }
}
