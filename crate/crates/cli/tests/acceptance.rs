//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run a subset with `cargo test --test acceptance -- C1 C8`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use arucount::diagnostics::{median, quantile, rhat};
use arucount::dist::{bernoulli_logit_lpmf, binomial_lpmf, hypergeometric_lpmf, normal_lpdf, poisson_lpmf};
use arucount::likelihood::{Prior, Priors};
use arucount::mcmc::{true_calls_conditional, McmcConfig, Param, Sampler};
use arucount::rng::{derive_seed, stream, Domain};
use arucount::simulate::{grid_points, simulate, AbundanceSpec, GridPoint, ScenarioSpec, SiteRatio};
use arucount::study::{run_grid, run_pointcount_sweep, StudyConfig, StudyResult};
use arucount::{CountData, Dataset, Grid, ModelVariant, SurveyDesign};

type GridCheck = fn(&StudyResult) -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

// ---------------------------------------------------------------- C1

/// `ln n!` by direct summation.
fn ln_fact(n: u32) -> f64 {
    (2..=n).map(|i| f64::from(i).ln()).sum()
}

fn ln_pois(n: u32, lambda: f64) -> f64 {
    f64::from(n) * lambda.ln() - lambda - ln_fact(n)
}

fn ln_binom(c: u32, n: u32, p: f64) -> f64 {
    if c > n {
        return f64::NEG_INFINITY;
    }
    ln_fact(n) - ln_fact(c) - ln_fact(n - c) + f64::from(c) * p.ln() + f64::from(n - c) * (1.0 - p).ln()
}

const C1_CAP: u32 = 30;
const C1_BINS: usize = 50;
const C1_LAMBDA_MAX: f64 = 10.0;

/// Posterior mass of lambda in each of `C1_BINS` equal cells of
/// `(0, C1_LAMBDA_MAX]`, integrating p and summing every abundance up to
/// the cap.
fn c1_oracle(counts: &[[u32; 2]; 2]) -> Vec<f64> {
    const SUB: usize = 10;
    const P_STEPS: usize = 400;
    let width = C1_LAMBDA_MAX / C1_BINS as f64;
    let mut mass = vec![0.0; C1_BINS];
    for (b, m) in mass.iter_mut().enumerate() {
        for s in 0..SUB {
            let lambda = width * (b as f64 + (s as f64 + 0.5) / SUB as f64);
            for q in 0..P_STEPS {
                let p = (q as f64 + 0.5) / P_STEPS as f64;
                let mut like = 1.0;
                for row in counts {
                    let lo = row[0].max(row[1]);
                    let site: f64 = (lo..=C1_CAP)
                        .map(|n| (ln_pois(n, lambda) + ln_binom(row[0], n, p) + ln_binom(row[1], n, p)).exp())
                        .sum();
                    like *= site;
                }
                *m += like;
            }
        }
    }
    let total: f64 = mass.iter().sum();
    mass.iter().map(|m| m / total).collect()
}

fn c1_case(counts: [[u32; 2]; 2], seed: u64) -> f64 {
    let design = SurveyDesign::overlapping(1, 2, 1, 2).unwrap();
    let c = Grid::from_rows(counts.iter().map(|r| r.to_vec()).collect()).unwrap();
    let ds = Dataset::new(design, None, None, Some(CountData::complete(c))).unwrap();
    let priors = Priors {
        lambda: Prior::uniform(0.0, C1_LAMBDA_MAX),
        ..Priors::default()
    };
    let cfg = McmcConfig {
        chains: 4,
        iterations: 40_000,
        burn_in: 1000,
        adapt: 2000,
        thin: 1,
        seed,
        abundance_cap: Some(C1_CAP),
        ..McmcConfig::default()
    };
    let out = Sampler::new(cfg).priors(priors).run(&ds, ModelVariant::C).unwrap();
    let mut hist = vec![0.0; C1_BINS];
    let mut n = 0.0;
    for chain in out.scalar(Param::Lambda).unwrap() {
        for &x in chain {
            let b = ((x / C1_LAMBDA_MAX * C1_BINS as f64) as usize).min(C1_BINS - 1);
            hist[b] += 1.0;
            n += 1.0;
        }
    }
    let oracle = c1_oracle(&counts);
    0.5 * hist.iter().zip(&oracle).map(|(h, o)| (h / n - o).abs()).sum::<f64>()
}

fn c1() -> Outcome {
    let mut runner = TestRunner::new_with_rng(
        PropConfig { cases: 4, failure_persistence: None, ..PropConfig::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let worst = std::cell::Cell::new(0.0f64);
    let strategy = (prop::array::uniform2(prop::array::uniform2(0u32..=4)), 0u64..1000);
    let result = runner.run(&strategy, |(counts, seed)| {
        let tv = c1_case(counts, seed);
        worst.set(worst.get().max(tv));
        prop_assert!(tv <= 0.03, "counts {counts:?}: TV {tv}");
        Ok(())
    });
    match result {
        Ok(()) => outcome(true, format!("worst total variation {:.4} over 4 count tables (limit 0.03)", worst.get())),
        Err(e) => outcome(false, format!("{e}")),
    }
}

// ---------------------------------------------------------------- C2

/// Joint enumeration of `(K, k)` given `v` calls, `n` checked and true-call
/// probability `tp`, conditioned on the observed `k`.
fn c2_enumerate(v: u32, n: u32, k: u32, tp: f64) -> Vec<f64> {
    let choose = |a: u32, b: u32| -> f64 {
        if b > a {
            0.0
        } else {
            (0..b).fold(1.0, |acc, i| acc * f64::from(a - i) / f64::from(i + 1))
        }
    };
    let w: Vec<f64> = (0..=v)
        .map(|big_k| {
            let prior = choose(v, big_k) * tp.powi(big_k as i32) * (1.0 - tp).powi((v - big_k) as i32);
            prior * choose(big_k, k) * choose(v - big_k, n - k) / choose(v, n)
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn c2() -> Outcome {
    let mut rng = stream(2, Domain::Prior, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let v = rng.random_range(0..=12u32);
        let n = rng.random_range(0..=v);
        let k = rng.random_range(0..=n);
        let tp = rng.random_range(0.001..0.999);
        let Some((lo, pmf)) = true_calls_conditional(v, n, k, tp) else {
            return outcome(false, format!("no conditional for v={v} n={n} k={k}"));
        };
        for (big_k, want) in c2_enumerate(v, n, k, tp).into_iter().enumerate() {
            let big_k = big_k as u32;
            let got = if big_k >= lo && ((big_k - lo) as usize) < pmf.len() {
                pmf[(big_k - lo) as usize]
            } else {
                0.0
            };
            worst = worst.max((got - want).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max abs pmf error {worst:.2e} over 1000 cells (limit 1e-10)"))
}

// ---------------------------------------------------------------- C3

const SBC_REPLICATES: usize = 200;
const SBC_DRAWS: usize = 19;
const SBC_BINS: usize = 10;

fn sbc_truth(rng: &mut arucount::rng::StreamRng) -> ScenarioSpec {
    let normal = Normal::new(0.0, 10.0).unwrap();
    let alpha0 = loop {
        let x: f64 = normal.sample(rng);
        if (-5.0..=0.0).contains(&x) {
            break x;
        }
    };
    ScenarioSpec {
        label: "sbc".into(),
        design: SurveyDesign::overlapping(10, 10, 5, 3).unwrap(),
        abundance: AbundanceSpec::Constant { lambda: rng.random_range(0.0..20.0) },
        alpha0,
        alpha1: rng.random_range(0.0..5.0),
        delta: rng.random_range(0.0..20.0),
        omega: rng.random_range(0.0..20.0),
        p: rng.random_range(0.05..0.95),
        validation_fraction: 0.2,
        seed: rng.random(),
    }
}

fn c3() -> Outcome {
    let params = [Param::Lambda, Param::Delta, Param::Omega, Param::P];
    let mut hist = vec![[0usize; SBC_BINS]; params.len()];
    let cfg = McmcConfig::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers()).build().unwrap();
    let ranks: Vec<Vec<usize>> = pool.install(|| {
        use rayon::prelude::*;
        (0..SBC_REPLICATES)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(derive_seed(3, &[r as u64]), Domain::Prior, 0);
                let spec = sbc_truth(&mut rng);
                let (ds, _) = simulate(&spec).unwrap();
                let out = Sampler::new(cfg.clone().with_seed(derive_seed(3, &[r as u64, 1])))
                    .priors(Priors::truncated())
                    .run(&ds, ModelVariant::ACV)
                    .unwrap();
                params
                    .iter()
                    .map(|&p| {
                        let truth = match p {
                            Param::Lambda => match spec.abundance {
                                AbundanceSpec::Constant { lambda } => lambda,
                                AbundanceSpec::LogLinear { .. } => unreachable!(),
                            },
                            Param::Delta => spec.delta,
                            Param::Omega => spec.omega,
                            _ => spec.p,
                        };
                        let pooled: Vec<f64> = out.scalar(p).unwrap().concat();
                        // Widely spaced draws, so that they are close to
                        // independent.
                        let step = pooled.len() as f64 / SBC_DRAWS as f64;
                        (0..SBC_DRAWS)
                            .map(|i| pooled[((i as f64 + 0.5) * step) as usize])
                            .filter(|&x| x < truth)
                            .count()
                    })
                    .collect()
            })
            .collect()
    });
    for r in &ranks {
        for (h, &rank) in hist.iter_mut().zip(r) {
            h[rank * SBC_BINS / (SBC_DRAWS + 1)] += 1;
        }
    }
    let chi = ChiSquared::new((SBC_BINS - 1) as f64).unwrap();
    let expected = SBC_REPLICATES as f64 / SBC_BINS as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, h) in params.iter().zip(&hist) {
        let stat: f64 = h.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        let pval = 1.0 - chi.cdf(stat);
        pass &= pval >= 0.01;
        parts.push(format!("{} p={pval:.3}", p.name()));
    }
    outcome(pass, format!("rank uniformity over {SBC_REPLICATES} replicates: {}", parts.join(", ")))
}

// ---------------------------------------------------------------- C4

const PUBLISHED_WIDTHS: [(usize, f64); 5] = [(5, 0.41), (10, 0.34), (20, 0.28), (30, 0.27), (50, 0.24)];

fn c4() -> Outcome {
    let cfg = StudyConfig {
        replicates: 25,
        workers: workers(),
        variants: vec![ModelVariant::AC],
        ..StudyConfig::default()
    };
    let sizes: Vec<usize> = PUBLISHED_WIDTHS.iter().map(|w| w.0).collect();
    let res = run_pointcount_sweep(&cfg, &sizes, &[], None).unwrap();
    let widths: Vec<f64> = sizes
        .iter()
        .map(|s| res.find(&format!("sweep:{s}"), ModelVariant::AC, "beta0").map_or(f64::NAN, |a| a.median_ci_width))
        .collect();
    let monotone = widths.windows(2).all(|w| w[0] > w[1]);
    let ratio = widths[0] / widths[4];
    let within = PUBLISHED_WIDTHS.iter().zip(&widths).all(|((_, published), w)| (w - published).abs() <= 0.35 * published);
    let bias = res.find("sweep:50", ModelVariant::AC, "beta1").map_or(f64::NAN, |a| a.median_relative_bias);
    let pass = monotone && ratio >= 1.4 && within && bias.abs() <= 3.0;
    let shown: Vec<String> = widths.iter().map(|w| format!("{w:.3}")).collect();
    outcome(
        pass,
        format!(
            "beta0 widths [{}] (published 0.41 0.34 0.28 0.27 0.24), monotone {monotone}, 5/50 ratio {ratio:.2}, \
within 35% {within}, beta1 bias at 50 {bias:.2}%",
            shown.join(" ")
        ),
    )
}

// ---------------------------------------------------------------- C5, C6, C7

fn low_detection() -> Vec<GridPoint> {
    grid_points()
        .into_iter()
        .filter(|g| g.total_sites == 50 && g.ratio == SiteRatio::Equal && g.alpha1 == 1.2)
        .collect()
}

fn convergence_subset() -> Vec<GridPoint> {
    let mut out = low_detection();
    out.extend(
        grid_points()
            .into_iter()
            .filter(|g| g.total_sites == 50 && g.ratio == SiteRatio::Equal && g.alpha1 == 3.0 && g.count_surveys == 3),
    );
    out
}

fn grid_study() -> StudyResult {
    let cfg = StudyConfig {
        replicates: 25,
        workers: workers(),
        ..StudyConfig::default()
    };
    run_grid(&cfg, &convergence_subset(), &[], None).unwrap()
}

/// Pooled estimates of lambda for `variant` over `points`.
fn pooled<'a>(res: &'a StudyResult, points: &[GridPoint], variant: ModelVariant) -> Vec<(&'a arucount::study::ParamEstimate, bool)> {
    let names: Vec<String> = points.iter().map(|p| format!("grid:{}", p.index)).collect();
    res.records
        .iter()
        .filter(|r| r.variant == variant && names.contains(&r.scenario))
        .filter_map(|r| r.estimate("lambda").map(|e| (e, r.converged)))
        .collect()
}

fn c5(res: &StudyResult) -> Outcome {
    let points = low_detection();
    let width = |v| {
        let w: Vec<f64> = pooled(res, &points, v).iter().filter(|e| e.1).map(|e| e.0.ci_width).collect();
        median(&w)
    };
    let bias = |v| {
        let b: Vec<f64> = pooled(res, &points, v).iter().filter(|e| e.1).map(|e| e.0.relative_bias).collect();
        median(&b)
    };
    let (wc, wac, wacv) = (width(ModelVariant::C), width(ModelVariant::AC), width(ModelVariant::ACV));
    let (bac, bacv) = (bias(ModelVariant::AC), bias(ModelVariant::ACV));
    let pass = wac < wc && wacv <= wac + 0.05 && bac.abs() <= 5.0 && bacv.abs() <= 5.0;
    outcome(
        pass,
        format!("median lambda CI width C {wc:.3}, AC {wac:.3}, ACV {wacv:.3}; median relative bias AC {bac:.2}%, ACV {bacv:.2}%"),
    )
}

fn c6(res: &StudyResult) -> Outcome {
    let points = low_detection();
    let cover = |v| {
        let e = pooled(res, &points, v);
        let conv: Vec<_> = e.iter().filter(|e| e.1).collect();
        conv.iter().filter(|e| e.0.covered).count() as f64 / conv.len().max(1) as f64
    };
    let (ac, acv) = (cover(ModelVariant::AC), cover(ModelVariant::ACV));
    outcome(ac >= 0.9 && acv >= 0.9, format!("95% CI coverage of lambda: AC {ac:.3}, ACV {acv:.3} (limit 0.90)"))
}

fn c7(res: &StudyResult) -> Outcome {
    let frac = |v: ModelVariant| {
        let recs: Vec<_> = res.records.iter().filter(|r| r.variant == v).collect();
        recs.iter().filter(|r| r.converged).count() as f64 / recs.len().max(1) as f64
    };
    let [av, c, ac, acv] = ModelVariant::ALL.map(frac);
    let pass = acv >= ac && ac >= av.max(c) - 0.05;
    outcome(pass, format!("convergence fraction AV {av:.3}, C {c:.3}, AC {ac:.3}, ACV {acv:.3}"))
}

// ---------------------------------------------------------------- C8

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_arucount"))
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("SOURCE_DATE_EPOCH")
        .status()
        .is_ok_and(|s| s.success())
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in &names {
        let (x, y) = (std::fs::read(a.join(name)), std::fs::read(b.join(name)));
        match (x, y) {
            (Ok(x), Ok(y)) if x == y => {}
            _ => return Err(format!("{} differs", name.to_string_lossy())),
        }
    }
    Ok(names.len())
}

fn c8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let d = |s: &str| tmp.path().join(s).to_string_lossy().into_owned();
    let short = ["--chains", "2", "--iters", "600", "--burn", "100", "--adapt", "100"];
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["simulate".into(), "--scenario".into(), "grid:17".into(), "--seed".into(), "42".into()]),
        (
            "fit",
            [vec!["fit".into(), "--data".into(), d("simulate1"), "--variant".into(), "ACV".into(), "--allow-nonconverged".into(), "--per-site".into()],
             short.iter().map(|s| s.to_string()).collect()]
            .concat(),
        ),
        (
            "study grid",
            [vec!["study".into(), "grid".into(), "--filter".into(), "index=0".into(), "--replicates".into(), "2".into()],
             short.iter().map(|s| s.to_string()).collect()]
            .concat(),
        ),
        (
            "study sweep",
            [vec!["study".into(), "pointcount-sweep".into(), "--sizes".into(), "5,10".into(), "--replicates".into(), "1".into()],
             short.iter().map(|s| s.to_string()).collect()]
            .concat(),
        ),
    ];
    let mut files = 0;
    for (name, args) in &runs {
        let key = name.replace(' ', "_");
        // A third study run on more threads must reproduce the data files.
        let reps = if name.starts_with("study") { 3 } else { 2 };
        for rep in 1..=reps {
            let out = d(&format!("{key}{rep}"));
            let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
            a.extend(["--out", &out]);
            if rep == 3 {
                a.extend(["--workers", "2"]);
            }
            if !cli(&a) {
                return outcome(false, format!("`{name}` run {rep} failed"));
            }
        }
        match same_tree(&tmp.path().join(format!("{key}1")), &tmp.path().join(format!("{key}2"))) {
            Ok(n) => files += n,
            Err(e) => return outcome(false, format!("`{name}`: {e}")),
        }
        if reps == 3 {
            for file in ["records.csv", "aggregate.csv"] {
                let read = |r: usize| std::fs::read(tmp.path().join(format!("{key}{r}")).join(file)).ok();
                if read(1).is_none() || read(1) != read(3) {
                    return outcome(false, format!("`{name}`: {file} depends on the worker count"));
                }
            }
        }
    }
    outcome(true, format!("{files} files byte-identical across repeated simulate, fit and study runs; study data identical on 1 and 2 workers"))
}

// ---------------------------------------------------------------- C9

fn c9() -> Outcome {
    let mut worst_norm: f64 = 0.0;
    let mut track = |total: f64| worst_norm = worst_norm.max((total - 1.0).abs());
    for mean in [0.05, 0.5, 1.0, 3.0, 7.5, 12.0] {
        track((0..200u64).map(|x| poisson_lpmf(x, mean).exp()).sum());
    }
    for trials in [0u64, 1, 5, 12, 30] {
        for p in [0.0, 0.01, 0.3, 0.5, 0.97, 1.0] {
            track((0..=trials).map(|x| binomial_lpmf(x, trials, p).exp()).sum());
        }
    }
    for (succ, fail, draws) in [(0u64, 0u64, 0u64), (3, 4, 2), (5, 2, 7), (10, 6, 5), (1, 9, 4)] {
        track((0..=draws).map(|x| hypergeometric_lpmf(x, succ, fail, draws).exp()).sum());
    }
    for eta in [-30.0, -2.0, 0.0, 0.7, 25.0] {
        track(bernoulli_logit_lpmf(true, eta).exp() + bernoulli_logit_lpmf(false, eta).exp());
    }
    // Midpoint rule over +-12 sd.
    for (mu, sd) in [(0.0, 1.0), (-2.0, 10.0), (3.0, 0.2)] {
        let steps = 200_000;
        let h = 24.0 * sd / steps as f64;
        track((0..steps).map(|i| normal_lpdf(mu - 12.0 * sd + (i as f64 + 0.5) * h, mu, sd).exp() * h).sum());
    }

    let mut rng = stream(9, Domain::Prior, 0);
    let mut worst_q: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..60);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        for q in [0.0, 0.025, 0.3, 0.5, 0.975, 1.0, rng.random()] {
            let h = (n - 1) as f64 * q;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let want = sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]);
            worst_q = worst_q.max((quantile(&xs, q) - want).abs());
        }
    }
    let mut worst_r: f64 = 0.0;
    for _ in 0..500 {
        let m = rng.random_range(2..6);
        let n = rng.random_range(4..80);
        let chains: Vec<Vec<f64>> = (0..m)
            .map(|c| (0..n).map(|_| rng.random::<f64>() + 0.3 * c as f64 * rng.random::<f64>()).collect())
            .collect();
        let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
        let (mf, nf) = (m as f64, n as f64);
        let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
        let grand = means.iter().sum::<f64>() / mf;
        let b = nf / (mf - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
        let w = chains
            .iter()
            .zip(&means)
            .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
            .sum::<f64>()
            / mf;
        let want = (((nf - 1.0) / nf * w + b / nf) / w).sqrt().max(1.0);
        worst_r = worst_r.max((rhat(&refs).value - want).abs());
    }
    let pass = worst_norm <= 1e-8 && worst_q <= 1e-10 && worst_r <= 1e-10;
    outcome(
        pass,
        format!("max normalization error {worst_norm:.1e}, quantile error {worst_q:.1e}, R-hat error {worst_r:.1e}"),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filters.is_empty() || filters.iter().any(|f| f.eq_ignore_ascii_case(id));
    type Check = fn() -> Outcome;
    let simple: [(&str, &str, Check); 6] = [
        ("C1", "oracle equivalence", c1),
        ("C2", "validation-model oracle", c2),
        ("C3", "simulation-based calibration", c3),
        ("C4", "point-count sweep", c4),
        ("C8", "determinism", c8),
        ("C9", "distribution kernels", c9),
    ];
    let mut results: Vec<(String, String, Outcome, f64)> = Vec::new();
    let mut report = |id: &str, name: &str, o: Outcome, secs: f64| {
        println!("{id} {name:<30} {} {} ({secs:.0} s)", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id.into(), name.into(), o, secs));
    };
    for (id, name, f) in &simple[..4] {
        if wanted(id) {
            let t = Instant::now();
            let o = f();
            report(id, name, o, t.elapsed().as_secs_f64());
        }
    }
    if wanted("C5") || wanted("C6") || wanted("C7") {
        let t = Instant::now();
        let res = grid_study();
        let secs = t.elapsed().as_secs_f64();
        let grid: [(&str, &str, GridCheck); 3] = [
            ("C5", "integration-benefit ordering", c5),
            ("C6", "coverage", c6),
            ("C7", "convergence-rate ordering", c7),
        ];
        for (id, name, f) in grid {
            if wanted(id) {
                report(id, name, f(&res), secs);
            }
        }
    }
    for (id, name, f) in &simple[4..] {
        if wanted(id) {
            let t = Instant::now();
            let o = f();
            report(id, name, o, t.elapsed().as_secs_f64());
        }
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.2.pass).map(|r| r.0.as_str()).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
