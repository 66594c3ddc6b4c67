//! Synthetic data under the generative models.
//!
//! Each global site draws from its own random stream, so a dataset is a pure
//! function of the scenario (including its seed) regardless of evaluation
//! order.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    detection_prob, AbundanceModel, AcousticData, CountData, Dataset, Grid, SurveyDesign,
    ValidationData,
};
use crate::rng::{stream, Domain, StreamRng};

/// Abundance process used to generate data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AbundanceSpec {
    Constant { lambda: f64 },
    /// Log-linear in a standard-normal site covariate drawn by the simulator.
    LogLinear { beta0: f64, beta1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub label: String,
    pub design: SurveyDesign,
    pub abundance: AbundanceSpec,
    pub alpha0: f64,
    pub alpha1: f64,
    pub delta: f64,
    pub omega: f64,
    pub p: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(0.0..=1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction out of range [0, 1]");
        }
        for (name, value) in [("alpha1", self.alpha1), ("delta", self.delta), ("omega", self.omega)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be a non-negative number, got {value}")));
            }
        }
        if !self.alpha0.is_finite() {
            return bad("alpha0 must be finite");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p out of range [0, 1]");
        }
        match self.abundance {
            AbundanceSpec::Constant { lambda } if !(lambda.is_finite() && lambda >= 0.0) => {
                bad("lambda must be a non-negative number")
            }
            AbundanceSpec::LogLinear { beta0, beta1 } if !(beta0.is_finite() && beta1.is_finite()) => {
                bad("beta0 and beta1 must be finite")
            }
            _ => Ok(()),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Everything the simulator drew, for scoring fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub abundance_n: Vec<u32>,
    pub true_calls: Grid<u32>,
    pub false_calls: Grid<u32>,
    pub covariate: Option<Vec<f64>>,
    pub expected_abundance: Vec<f64>,
    pub spec: ScenarioSpec,
    /// Validation sampling is applied to every (site, survey) cell on its
    /// own, with `n = round_half_even(fraction * v)`.
    pub validation_scope: String,
}

impl TruthRecord {
    /// True value of a scalar parameter by name.
    pub fn parameter(&self, name: &str) -> Option<f64> {
        let s = &self.spec;
        match (name, &s.abundance) {
            ("alpha0", _) => Some(s.alpha0),
            ("alpha1", _) => Some(s.alpha1),
            ("delta", _) => Some(s.delta),
            ("omega", _) => Some(s.omega),
            ("p", _) => Some(s.p),
            ("lambda", AbundanceSpec::Constant { lambda }) => Some(*lambda),
            ("beta0", AbundanceSpec::LogLinear { beta0, .. }) => Some(*beta0),
            ("beta1", AbundanceSpec::LogLinear { beta1, .. }) => Some(*beta1),
            _ => None,
        }
    }
}

fn poisson(rng: &mut StreamRng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    // mean is finite and positive here, so construction cannot fail
    let draw: f64 = Poisson::new(mean).expect("positive Poisson mean").sample(rng);
    draw as u32
}

/// Draws one dataset and the latent truth behind it.
pub fn simulate(spec: &ScenarioSpec) -> Result<(Dataset, TruthRecord)> {
    spec.validate()?;
    let design = &spec.design;
    let (r, j) = (design.num_acoustic_sites(), design.acoustic_surveys());
    let (i_sites, t) = (design.num_count_sites(), design.count_surveys());
    let g = design.num_global_sites();

    let covariate: Option<Vec<f64>> = match spec.abundance {
        AbundanceSpec::LogLinear { .. } => Some(
            (0..g)
                .map(|s| stream(spec.seed, Domain::Covariate, s as u64).sample(StandardNormal))
                .collect(),
        ),
        AbundanceSpec::Constant { .. } => None,
    };
    let model = match spec.abundance {
        AbundanceSpec::Constant { lambda } => AbundanceModel::Constant { lambda },
        AbundanceSpec::LogLinear { beta0, beta1 } => AbundanceModel::LogLinear {
            beta0,
            beta1,
            covariate: Arc::new(covariate.clone().unwrap_or_default()),
        },
    };
    let rates: Vec<f64> = (0..g).map(|s| model.rate(s)).collect();
    if let Some(s) = rates.iter().position(|r| !r.is_finite()) {
        return Err(Error::InvalidAbundance(format!("expected abundance overflows at site {s}")));
    }

    let mut abundance_n = vec![0u32; g];
    let mut y = Grid::filled(r, j, 0u8);
    let mut v = Grid::filled(r, j, 0u32);
    let mut true_calls = Grid::filled(r, j, 0u32);
    let mut false_calls = Grid::filled(r, j, 0u32);
    let mut c = Grid::filled(i_sites, t, 0u32);

    for site in 0..g {
        let mut rng = stream(spec.seed, Domain::Site, site as u64);
        let n = poisson(&mut rng, rates[site]);
        abundance_n[site] = n;
        if design.is_acoustic(site) {
            let pi = detection_prob(n, spec.alpha0, spec.alpha1);
            for survey in 0..j {
                if rng.random::<f64>() < pi {
                    let k = poisson(&mut rng, spec.delta * f64::from(n));
                    let f = poisson(&mut rng, spec.omega);
                    y[(site, survey)] = 1;
                    true_calls[(site, survey)] = k;
                    false_calls[(site, survey)] = f;
                    v[(site, survey)] = k + f;
                }
            }
        }
        if let Some(ci) = design.count_index(site) {
            let binom = Binomial::new(u64::from(n), spec.p)
                .map_err(|e| Error::InvalidConfig(format!("point-count detection: {e}")))?;
            for visit in 0..t {
                c[(ci, visit)] = binom.sample(&mut rng) as u32;
            }
        }
    }

    let acoustic = AcousticData::complete(y, v);
    let validation = simulate_validation(&acoustic, &true_calls, spec.validation_fraction, spec.seed)?;
    let mut dataset = Dataset::new(
        design.clone(),
        Some(acoustic),
        Some(validation),
        Some(CountData::complete(c)),
    )?;
    if let Some(x) = &covariate {
        dataset = dataset.with_covariate(x.clone())?;
    }
    let truth = TruthRecord {
        abundance_n,
        true_calls,
        false_calls,
        covariate,
        expected_abundance: rates,
        spec: spec.clone(),
        validation_scope: "per-cell; n = round_half_even(fraction * v)".into(),
    };
    Ok((dataset, truth))
}

/// Number of calls checked in a cell with `v` clustered calls.
pub fn checked_count(fraction: f64, v: u32) -> u32 {
    (fraction * f64::from(v)).round_ties_even() as u32
}

/// Simulates manual checking of a share of the clustered calls in every
/// observed cell: `n` calls are drawn without replacement from the pool of
/// `K` true and `v - K` false calls, and `k` counts the true ones.
pub fn simulate_validation(
    acoustic: &AcousticData,
    true_calls: &Grid<u32>,
    fraction: f64,
    seed: u64,
) -> Result<ValidationData> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig("validation_fraction out of range [0, 1]".into()));
    }
    let (r, j) = (acoustic.v.rows(), acoustic.v.cols());
    let mut out = ValidationData::empty(r, j);
    for site in 0..r {
        let mut rng = stream(seed, Domain::Validation, site as u64);
        for survey in 0..j {
            if !acoustic.is_observed(site, survey) {
                continue;
            }
            let v = acoustic.v[(site, survey)];
            let big_k = true_calls[(site, survey)];
            if big_k > v {
                return Err(Error::InvalidConfig(format!(
                    "true calls exceed clustered calls at site {site}, survey {survey}"
                )));
            }
            let n = checked_count(fraction, v);
            let k = if n == 0 {
                0
            } else {
                Hypergeometric::new(u64::from(v), u64::from(big_k), u64::from(n))
                    .map_err(|e| Error::InvalidConfig(format!("validation draw: {e}")))?
                    .sample(&mut rng) as u32
            };
            out.checked[(site, survey)] = n;
            out.confirmed[(site, survey)] = k;
        }
    }
    Ok(out)
}

/// How acoustic and point-count sites relate in the factorial grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteRatio {
    /// `R = I`, every site surveyed both ways.
    Equal,
    /// `R = I / 2`: all sites counted, half carry recorders.
    HalfAcoustic,
    /// `R / 2 = I`: all sites recorded, half counted.
    HalfCount,
}

impl SiteRatio {
    pub const ALL: [SiteRatio; 3] = [Self::Equal, Self::HalfAcoustic, Self::HalfCount];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Equal => "R=I",
            Self::HalfAcoustic => "R=I/2",
            Self::HalfCount => "R/2=I",
        }
    }

    /// `(R, I)` for a given total number of sites.
    pub fn sites(self, total: usize) -> (usize, usize) {
        match self {
            Self::Equal => (total, total),
            Self::HalfAcoustic => (total / 2, total),
            Self::HalfCount => (total, total / 2),
        }
    }
}

impl fmt::Display for SiteRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One cell of the 48-scenario factorial design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub total_sites: usize,
    pub ratio: SiteRatio,
    pub count_surveys: usize,
    pub alpha1: f64,
    pub lambda: f64,
}

pub const GRID_ACOUSTIC_SURVEYS: usize = 10;
pub const GRID_ALPHA0: f64 = -2.19;
pub const GRID_DELTA: f64 = 4.0;
pub const GRID_OMEGA: f64 = 3.0;
pub const GRID_VALIDATION_FRACTION: f64 = 0.20;

/// Point-count detection matched to the single-individual acoustic level.
pub fn matched_count_detection(alpha1: f64) -> f64 {
    if alpha1 == 3.0 {
        0.69
    } else if alpha1 == 1.2 {
        0.27
    } else {
        (detection_prob(1, GRID_ALPHA0, alpha1) * 100.0).round() / 100.0
    }
}

impl GridPoint {
    pub fn p(&self) -> f64 {
        matched_count_detection(self.alpha1)
    }

    pub fn label(&self) -> String {
        format!(
            "grid:{} sites={} {} T={} alpha1={} lambda={}",
            self.index, self.total_sites, self.ratio, self.count_surveys, self.alpha1, self.lambda
        )
    }

    pub fn spec(&self, seed: u64) -> ScenarioSpec {
        let (r, i) = self.ratio.sites(self.total_sites);
        let design = SurveyDesign::overlapping(r, i, GRID_ACOUSTIC_SURVEYS, self.count_surveys)
            .expect("grid designs are valid");
        ScenarioSpec {
            label: self.label(),
            design,
            abundance: AbundanceSpec::Constant { lambda: self.lambda },
            alpha0: GRID_ALPHA0,
            alpha1: self.alpha1,
            delta: GRID_DELTA,
            omega: GRID_OMEGA,
            p: self.p(),
            validation_fraction: GRID_VALIDATION_FRACTION,
            seed,
        }
    }

    /// Matches `key=value` filter terms such as `lambda=0.5` or `T=5`.
    pub fn matches(&self, key: &str, value: &str) -> std::result::Result<bool, String> {
        let num = || value.parse::<f64>().map_err(|_| format!("filter value `{value}` for `{key}` is not a number"));
        Ok(match key.to_ascii_lowercase().as_str() {
            "id" | "index" => num()? == self.index as f64,
            "sites" | "total_sites" => num()? == self.total_sites as f64,
            "t" | "visits" | "count_surveys" => num()? == self.count_surveys as f64,
            "alpha1" => num()? == self.alpha1,
            "lambda" => num()? == self.lambda,
            "p" => num()? == self.p(),
            "ratio" => {
                let want = value.to_ascii_uppercase().replace(' ', "");
                match want.as_str() {
                    "R=I" | "EQUAL" => self.ratio == SiteRatio::Equal,
                    "R=I/2" | "HALF_ACOUSTIC" => self.ratio == SiteRatio::HalfAcoustic,
                    "R/2=I" | "HALF_COUNT" => self.ratio == SiteRatio::HalfCount,
                    _ => return Err(format!("unknown ratio `{value}` (expected R=I, R=I/2 or R/2=I)")),
                }
            }
            _ => return Err(format!("unknown filter key `{key}`")),
        })
    }
}

/// The full factorial in a fixed order (total sites outermost, lambda
/// innermost).
pub fn grid_points() -> Vec<GridPoint> {
    let mut out = Vec::with_capacity(48);
    for total_sites in [50, 100] {
        for ratio in SiteRatio::ALL {
            for count_surveys in [3, 5] {
                for alpha1 in [1.2, 3.0] {
                    for lambda in [0.5, 3.0] {
                        out.push(GridPoint {
                            index: out.len(),
                            total_sites,
                            ratio,
                            count_surveys,
                            alpha1,
                            lambda,
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn scenario_grid() -> Vec<ScenarioSpec> {
    grid_points().iter().map(|g| g.spec(0)).collect()
}

/// Point-count subset sizes of the covariate experiment.
pub const SWEEP_POINT_COUNTS: [usize; 5] = [5, 10, 20, 30, 50];

/// A covariate-experiment scenario: the base dataset (all 50 sites counted)
/// is thinned to `point_counts` randomly chosen count sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ScenarioSpec,
    pub point_counts: usize,
}

pub fn covariate_base_spec(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        label: "covariate R=I=50 T=4".into(),
        design: SurveyDesign::overlapping(50, 50, 10, 4).expect("valid design"),
        abundance: AbundanceSpec::LogLinear {
            beta0: 2.0,
            beta1: 0.3,
        },
        alpha0: GRID_ALPHA0,
        alpha1: 3.0,
        delta: GRID_DELTA,
        omega: GRID_OMEGA,
        p: 0.69,
        validation_fraction: GRID_VALIDATION_FRACTION,
        seed,
    }
}

pub fn covariate_experiment_specs() -> Vec<SweepSpec> {
    SWEEP_POINT_COUNTS
        .iter()
        .map(|&point_counts| SweepSpec {
            base: covariate_base_spec(0),
            point_counts,
        })
        .collect()
}

/// A uniformly random subset of `size` sites out of `0..total`, ascending.
/// Subsets for different sizes under one seed are nested (prefixes of one
/// permutation).
pub fn draw_count_subset(seed: u64, total: usize, size: usize) -> Vec<usize> {
    let mut rng = stream(seed, Domain::Subset, 0);
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let mut chosen = order[..size.min(total)].to_vec();
    chosen.sort_unstable();
    chosen
}

impl SweepSpec {
    /// Thins a base dataset to this scenario's point-count subset.
    pub fn apply(&self, base: &Dataset, seed: u64) -> Result<Dataset> {
        let total = base.design().num_count_sites();
        let subset = draw_count_subset(seed, total, self.point_counts);
        let globals: Vec<usize> = subset.iter().map(|&i| base.design().site_map()[i]).collect();
        base.restrict_count_sites(&globals)
    }
}
