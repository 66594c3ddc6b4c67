use arucount::diagnostics::{quantile, rhat, summarize_output};
use arucount::io;
use arucount::likelihood::log_posterior;
use arucount::mcmc::{self, McmcConfig};
use arucount::simulate::{covariate_base_spec, grid_points, simulate, AbundanceSpec, ScenarioSpec};
use arucount::study::{self, StudyConfig};
use arucount::{AbundanceModel, ModelVariant, ParameterState, SurveyDesign};
use proptest::prelude::*;

fn spec(sites: usize, j: usize, t: usize, lambda: f64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        label: "it".into(),
        design: SurveyDesign::overlapping(sites, sites, j, t).unwrap(),
        abundance: AbundanceSpec::Constant { lambda },
        alpha0: -2.19,
        alpha1: 3.0,
        delta: 4.0,
        omega: 3.0,
        p: 0.69,
        validation_fraction: 0.2,
        seed,
    }
}

fn short() -> McmcConfig {
    McmcConfig { chains: 2, iterations: 600, burn_in: 100, adapt: 100, ..McmcConfig::default() }
}

#[test]
fn files_round_trip_to_the_same_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    for (k, s) in [spec(7, 4, 3, 2.0, 9), covariate_base_spec(4)].into_iter().enumerate() {
        let (ds, truth) = simulate(&s).unwrap();
        let dir = tmp.path().join(k.to_string());
        io::write_dataset(&dir, &ds, Some(&truth)).unwrap();
        assert_eq!(io::read_dataset(&dir).unwrap(), ds);
        assert_eq!(io::read_truth(&dir).unwrap(), truth);
        assert_eq!(io::dataset_digest(&io::read_dataset(&dir).unwrap()), io::dataset_digest(&ds));
    }
}

#[test]
fn fit_is_reproducible_and_thread_count_free() {
    let (ds, _) = simulate(&spec(8, 3, 3, 3.0, 21)).unwrap();
    let cfg = short();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = serial.install(|| mcmc::run(&ds, ModelVariant::ACV, &cfg)).unwrap();
    let b = wide.install(|| mcmc::run(&ds, ModelVariant::ACV, &cfg)).unwrap();
    assert_eq!(io::draws_csv(&a, true), io::draws_csv(&b, true));
    assert_eq!(a.draws_per_chain(), cfg.retained());

    let other = mcmc::run(&ds, ModelVariant::ACV, &cfg.clone().with_seed(2)).unwrap();
    assert_ne!(io::draws_csv(&a, false), io::draws_csv(&other, false));
}

#[test]
fn summaries_are_ordered() {
    let (ds, _) = simulate(&spec(10, 3, 3, 3.0, 5)).unwrap();
    let out = mcmc::run(&ds, ModelVariant::AC, &short()).unwrap();
    for row in summarize_output(&out, true) {
        assert!(row.ci_lower <= row.median && row.median <= row.ci_upper, "{}", row.parameter);
        assert!(row.rhat >= 1.0, "{}", row.parameter);
        assert!((row.ci_width - (row.ci_upper - row.ci_lower)).abs() < 1e-12);
    }
}

#[test]
fn study_records_survive_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = StudyConfig {
        replicates: 2,
        mcmc: short(),
        variants: vec![ModelVariant::C, ModelVariant::AC],
        ..StudyConfig::default()
    };
    let points: Vec<_> = grid_points().into_iter().filter(|p| p.index == 4).collect();
    let result = study::run_grid(&cfg, &points, &[], None).unwrap();
    assert_eq!(result.records.len(), 4);
    assert!(result.variants_paired());
    let path = tmp.path().join("records.csv");
    std::fs::write(&path, study::records_csv(&result.records)).unwrap();
    let back = study::read_records(&path).unwrap();
    assert_eq!(study::records_csv(&back), study::records_csv(&result.records));

    // Rerunning against complete records fits nothing new.
    let again = study::run_grid(&cfg, &points, &back, None).unwrap();
    assert_eq!(study::records_csv(&again.records), study::records_csv(&back));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulated_data_respect_the_model(
        sites in 1usize..6, j in 1usize..4, t in 1usize..4,
        lambda in 0.1f64..6.0, seed in any::<u64>(),
    ) {
        let (ds, truth) = simulate(&spec(sites, j, t, lambda, seed)).unwrap();
        let acoustic = ds.acoustic().unwrap();
        let validation = ds.validation().unwrap();
        for i in 0..sites {
            for s in 0..j {
                let v = acoustic.v[(i, s)];
                prop_assert_eq!(v, truth.true_calls[(i, s)] + truth.false_calls[(i, s)]);
                prop_assert!(validation.confirmed[(i, s)] <= validation.checked[(i, s)]);
                prop_assert!(validation.checked[(i, s)] <= v);
                if truth.abundance_n[i] == 0 {
                    prop_assert_eq!(truth.true_calls[(i, s)], 0);
                }
            }
        }
        let counts = ds.counts().unwrap();
        for i in 0..sites {
            for v in 0..t {
                prop_assert!(counts.c[(i, v)] <= truth.abundance_n[i]);
            }
        }
        // The data-generating state has finite posterior density under every
        // variant the data support.
        let state = ParameterState {
            abundance_n: truth.abundance_n.clone(),
            true_calls: truth.true_calls.clone(),
            alpha0: -2.19,
            alpha1: 3.0,
            delta: 4.0,
            omega: 3.0,
            p: 0.69,
            abundance: AbundanceModel::Constant { lambda },
        };
        for variant in ModelVariant::ALL {
            let lp = log_posterior(&state, &ds, variant, &Default::default());
            prop_assert!(lp.is_finite(), "{:?}", variant);
        }
    }

    #[test]
    fn quantiles_are_monotone(values in prop::collection::vec(-1e3f64..1e3, 1..40), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantile(&values, lo) <= quantile(&values, hi));
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(quantile(&values, 0.0), min);
        prop_assert_eq!(quantile(&values, 1.0), max);
    }

    #[test]
    fn rhat_is_at_least_one(chains in prop::collection::vec(prop::collection::vec(-10f64..10.0, 8), 2..5)) {
        let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
        prop_assert!(rhat(&refs).value >= 1.0);
    }
}
