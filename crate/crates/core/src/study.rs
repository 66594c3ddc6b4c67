//! Replicated simulation studies.
//!
//! A job is one (scenario, replicate) pair: the dataset is simulated once
//! and every requested variant is fitted to it. Jobs run on a bounded worker
//! pool and each one writes a [`FitRecord`] per variant. Records carry
//! everything aggregation needs, so a study can be split over processes or
//! resumed after an interruption by merging record files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{converged, median, relative_bias, summarize_output, DEFAULT_RHAT_THRESHOLD};
use crate::error::{Error, Result};
use crate::io::format_real;
use crate::mcmc::{McmcConfig, Sampler};
use crate::model::ModelVariant;
use crate::rng::derive_seed;
use crate::simulate::{covariate_base_spec, grid_points, simulate, GridPoint, SweepSpec, TruthRecord, SWEEP_POINT_COUNTS};

const SWEEP_TAG: u64 = 0x0053_5745_4550;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub replicates: usize,
    /// Skip replicates below this index (for sharding).
    pub first_replicate: usize,
    pub master_seed: u64,
    pub mcmc: McmcConfig,
    pub variants: Vec<ModelVariant>,
    pub workers: usize,
    pub rhat_threshold: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replicates: 25,
            first_replicate: 0,
            master_seed: 1,
            mcmc: McmcConfig::default(),
            variants: ModelVariant::ALL.to_vec(),
            workers: 1,
            rhat_threshold: DEFAULT_RHAT_THRESHOLD,
        }
    }
}

impl StudyConfig {
    fn replicate_range(&self) -> std::ops::Range<usize> {
        self.first_replicate..self.first_replicate + self.replicates
    }
}

/// Posterior summary of one parameter against its true value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub parameter: String,
    pub truth: f64,
    pub median: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub ci_width: f64,
    pub rhat: f64,
    pub ess: f64,
    /// Percent, or absolute when `bias_absolute`.
    pub relative_bias: f64,
    pub bias_absolute: bool,
    pub covered: bool,
}

/// Outcome of fitting one variant to one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    /// `grid:<index>` or `sweep:<point counts>`.
    pub scenario: String,
    pub replicate: usize,
    pub variant: ModelVariant,
    pub dataset_seed: u64,
    pub dataset_digest: String,
    pub converged: bool,
    /// Set when the fit failed; estimates are then empty.
    pub error: Option<String>,
    pub wall_seconds: f64,
    pub estimates: Vec<ParamEstimate>,
}

impl FitRecord {
    pub fn key(&self) -> (ScenarioKey, usize, ModelVariant) {
        (ScenarioKey::parse(&self.scenario), self.replicate, self.variant)
    }

    pub fn estimate(&self, parameter: &str) -> Option<&ParamEstimate> {
        self.estimates.iter().find(|e| e.parameter == parameter)
    }
}

/// Sortable scenario identifier: grid points by index, sweep sizes by size.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioKey {
    Grid(usize),
    Sweep(usize),
    Other(String),
}

impl ScenarioKey {
    pub fn parse(s: &str) -> Self {
        let num = |rest: &str| rest.parse::<usize>().ok();
        if let Some(i) = s.strip_prefix("grid:").and_then(num) {
            ScenarioKey::Grid(i)
        } else if let Some(i) = s.strip_prefix("sweep:").and_then(num) {
            ScenarioKey::Sweep(i)
        } else {
            ScenarioKey::Other(s.to_string())
        }
    }
}

impl std::fmt::Display for ScenarioKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioKey::Grid(i) => write!(f, "grid:{i}"),
            ScenarioKey::Sweep(i) => write!(f, "sweep:{i}"),
            ScenarioKey::Other(s) => f.write_str(s),
        }
    }
}

/// Parses `key=value,key=value` into pairs.
pub fn parse_filter(filter: &str) -> Result<Vec<(String, String)>> {
    filter
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            item.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::InvalidConfig(format!("filter term `{item}` is not key=value")))
        })
        .collect()
}

/// Grid points matching every filter term.
pub fn select_grid(filter: &[(String, String)]) -> Result<Vec<GridPoint>> {
    let mut out = Vec::new();
    for p in grid_points() {
        let mut keep = true;
        for (k, v) in filter {
            keep &= p.matches(k, v).map_err(Error::InvalidConfig)?;
        }
        if keep {
            out.push(p);
        }
    }
    Ok(out)
}

fn variant_code(v: ModelVariant) -> u64 {
    ModelVariant::ALL.iter().position(|&x| x == v).expect("listed") as u64
}

fn estimate_from(name: &str, truth: f64, s: &crate::diagnostics::PosteriorSummary) -> ParamEstimate {
    let bias = relative_bias(s.median, truth);
    ParamEstimate {
        parameter: name.to_string(),
        truth,
        median: s.median,
        ci_lower: s.ci_lower,
        ci_upper: s.ci_upper,
        ci_width: s.ci_width,
        rhat: s.rhat,
        ess: s.ess,
        relative_bias: bias.value,
        bias_absolute: bias.absolute,
        covered: s.covers(truth),
    }
}

struct Job<'a> {
    scenario: String,
    replicate: usize,
    dataset_seed: u64,
    variants: Vec<ModelVariant>,
    build: Box<dyn Fn(u64) -> Result<(crate::Dataset, TruthRecord)> + Send + Sync + 'a>,
    /// Parameters to score, with their true values.
    targets: Vec<(&'static str, f64)>,
}

fn run_job(job: &Job<'_>, cfg: &StudyConfig) -> Vec<FitRecord> {
    let failed = |variant, digest: String, e: &Error, started: Instant| FitRecord {
        scenario: job.scenario.clone(),
        replicate: job.replicate,
        variant,
        dataset_seed: job.dataset_seed,
        dataset_digest: digest,
        converged: false,
        error: Some(e.to_string()),
        wall_seconds: started.elapsed().as_secs_f64(),
        estimates: Vec::new(),
    };
    let started = Instant::now();
    let (ds, _truth) = match (job.build)(job.dataset_seed) {
        Ok(x) => x,
        Err(e) => {
            log::warn!("{} replicate {}: simulation failed: {e}", job.scenario, job.replicate);
            return job.variants.iter().map(|&v| failed(v, String::new(), &e, started)).collect();
        }
    };
    let digest = crate::io::dataset_digest(&ds);
    job.variants
        .iter()
        .map(|&variant| {
            let started = Instant::now();
            let mcmc = cfg.mcmc.clone().with_seed(derive_seed(job.dataset_seed, &[variant_code(variant)]));
            match Sampler::new(mcmc).run(&ds, variant) {
                Err(e) => {
                    log::warn!("{} replicate {} {variant}: {e}", job.scenario, job.replicate);
                    failed(variant, digest.clone(), &e, started)
                }
                Ok(out) => {
                    let rows = summarize_output(&out, false);
                    let estimates = job
                        .targets
                        .iter()
                        .filter_map(|&(name, truth)| {
                            rows.iter().find(|r| r.parameter == name).map(|s| estimate_from(name, truth, s))
                        })
                        .collect();
                    FitRecord {
                        scenario: job.scenario.clone(),
                        replicate: job.replicate,
                        variant,
                        dataset_seed: job.dataset_seed,
                        dataset_digest: digest.clone(),
                        converged: converged(&rows, cfg.rhat_threshold),
                        error: None,
                        wall_seconds: started.elapsed().as_secs_f64(),
                        estimates,
                    }
                }
            }
        })
        .collect()
}

/// Called with each finished job's records, in completion order.
pub type RecordSink<'a> = &'a (dyn Fn(&[FitRecord]) + Sync);

fn execute(jobs: Vec<Job<'_>>, cfg: &StudyConfig, sink: Option<RecordSink<'_>>) -> Result<Vec<FitRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let sink_lock = Mutex::new(());
    let mut records: Vec<FitRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let recs = run_job(job, cfg);
                if let Some(sink) = sink {
                    let _guard = sink_lock.lock().unwrap_or_else(|p| p.into_inner());
                    sink(&recs);
                }
                recs
            })
            .flatten()
            .collect()
    });
    records.sort_by_key(FitRecord::key);
    Ok(records)
}

fn done_keys(existing: &[FitRecord]) -> BTreeSet<(ScenarioKey, usize, ModelVariant)> {
    existing.iter().map(FitRecord::key).collect()
}

fn merge(existing: &[FitRecord], new: Vec<FitRecord>) -> Vec<FitRecord> {
    let mut by_key: BTreeMap<_, FitRecord> = existing.iter().map(|r| (r.key(), r.clone())).collect();
    for r in new {
        by_key.insert(r.key(), r);
    }
    by_key.into_values().collect()
}

/// Seed of the dataset for grid point `index`, replicate `replicate`.
pub fn grid_dataset_seed(master: u64, index: usize, replicate: usize) -> u64 {
    derive_seed(master, &[index as u64, replicate as u64])
}

/// Seed of the base dataset (and point-count subsets) for sweep replicate `replicate`.
pub fn sweep_dataset_seed(master: u64, replicate: usize) -> u64 {
    derive_seed(master, &[SWEEP_TAG, replicate as u64])
}

/// Fits every configured variant to every replicate of each grid point.
/// Jobs whose records are already in `existing` are skipped; the result
/// holds old and new records merged by key.
pub fn run_grid(
    cfg: &StudyConfig,
    points: &[GridPoint],
    existing: &[FitRecord],
    sink: Option<RecordSink<'_>>,
) -> Result<StudyResult> {
    cfg.mcmc.validate()?;
    let done = done_keys(existing);
    let mut jobs = Vec::new();
    for p in points {
        for replicate in cfg.replicate_range() {
            let scenario = format!("grid:{}", p.index);
            let key = ScenarioKey::Grid(p.index);
            let variants: Vec<ModelVariant> = cfg
                .variants
                .iter()
                .copied()
                .filter(|&v| !done.contains(&(key.clone(), replicate, v)))
                .collect();
            if variants.is_empty() {
                continue;
            }
            let point = *p;
            jobs.push(Job {
                scenario,
                replicate,
                dataset_seed: grid_dataset_seed(cfg.master_seed, p.index, replicate),
                variants,
                build: Box::new(move |seed| simulate(&point.spec(seed))),
                targets: vec![("lambda", p.lambda)],
            });
        }
    }
    let records = merge(existing, execute(jobs, cfg, sink)?);
    Ok(StudyResult::new(records, cfg.rhat_threshold))
}

/// The covariate experiment: for each replicate, one base dataset with 50
/// acoustic and 50 count sites, fitted with Model AC after thinning the
/// counts to each size in `sizes`. Subsets are nested within a replicate.
pub fn run_pointcount_sweep(
    cfg: &StudyConfig,
    sizes: &[usize],
    existing: &[FitRecord],
    sink: Option<RecordSink<'_>>,
) -> Result<StudyResult> {
    cfg.mcmc.validate()?;
    let done = done_keys(existing);
    let base = covariate_base_spec(0);
    let (beta0, beta1) = match base.abundance {
        crate::simulate::AbundanceSpec::LogLinear { beta0, beta1 } => (beta0, beta1),
        crate::simulate::AbundanceSpec::Constant { .. } => unreachable!("covariate spec"),
    };
    let mut jobs = Vec::new();
    for &size in sizes {
        for replicate in cfg.replicate_range() {
            if done.contains(&(ScenarioKey::Sweep(size), replicate, ModelVariant::AC)) {
                continue;
            }
            let sweep = SweepSpec {
                base: base.clone(),
                point_counts: size,
            };
            jobs.push(Job {
                scenario: format!("sweep:{size}"),
                replicate,
                dataset_seed: sweep_dataset_seed(cfg.master_seed, replicate),
                variants: vec![ModelVariant::AC],
                build: Box::new(move |seed| {
                    let (full, truth) = simulate(&sweep.base.clone().with_seed(seed))?;
                    Ok((sweep.apply(&full, seed)?, truth))
                }),
                targets: vec![("beta0", beta0), ("beta1", beta1)],
            });
        }
    }
    let records = merge(existing, execute(jobs, cfg, sink)?);
    Ok(StudyResult::new(records, cfg.rhat_threshold))
}

/// Sweep over the published point-count sizes.
pub fn run_default_sweep(cfg: &StudyConfig, existing: &[FitRecord], sink: Option<RecordSink<'_>>) -> Result<StudyResult> {
    run_pointcount_sweep(cfg, &SWEEP_POINT_COUNTS, existing, sink)
}

/// Aggregates for one (scenario, variant, parameter) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scenario: String,
    pub variant: ModelVariant,
    pub parameter: String,
    pub replicates: usize,
    pub converged: usize,
    pub failures: usize,
    pub convergence_fraction: f64,
    /// False when no replicate converged; the converged-only columns are
    /// then NaN.
    pub available: bool,
    pub median_relative_bias: f64,
    pub median_ci_width: f64,
    pub coverage: f64,
    pub all_median_relative_bias: f64,
    pub all_median_ci_width: f64,
    pub all_coverage: f64,
}

/// Medians over converged replicates, with all-replicate versions alongside.
pub fn aggregate(records: &[FitRecord]) -> Vec<Aggregate> {
    type CellKey = (ScenarioKey, ModelVariant, String);
    let mut counts: BTreeMap<(ScenarioKey, ModelVariant), (usize, usize, usize)> = BTreeMap::new();
    let mut cells: BTreeMap<CellKey, Vec<(&ParamEstimate, bool)>> = BTreeMap::new();
    for r in records {
        let key = (ScenarioKey::parse(&r.scenario), r.variant);
        let c = counts.entry(key.clone()).or_default();
        c.0 += 1;
        c.1 += usize::from(r.converged);
        c.2 += usize::from(r.error.is_some());
        for e in &r.estimates {
            cells.entry((key.0.clone(), key.1, e.parameter.clone())).or_default().push((e, r.converged));
        }
    }
    let mut out = Vec::new();
    for ((scenario, variant, parameter), ests) in cells {
        let (replicates, conv, failures) = counts[&(scenario.clone(), variant)];
        let stats = |filter: &dyn Fn(bool) -> bool| {
            let chosen: Vec<&ParamEstimate> = ests.iter().filter(|(_, c)| filter(*c)).map(|(e, _)| *e).collect();
            if chosen.is_empty() {
                return (f64::NAN, f64::NAN, f64::NAN);
            }
            let bias: Vec<f64> = chosen.iter().map(|e| e.relative_bias).collect();
            let width: Vec<f64> = chosen.iter().map(|e| e.ci_width).collect();
            let cover = chosen.iter().filter(|e| e.covered).count() as f64 / chosen.len() as f64;
            (median(&bias), median(&width), cover)
        };
        let (b, w, c) = stats(&|c| c);
        let (ab, aw, ac) = stats(&|_| true);
        out.push(Aggregate {
            scenario: scenario.to_string(),
            variant,
            parameter,
            replicates,
            converged: conv,
            failures,
            convergence_fraction: conv as f64 / replicates as f64,
            available: conv > 0,
            median_relative_bias: b,
            median_ci_width: w,
            coverage: c,
            all_median_relative_bias: ab,
            all_median_ci_width: aw,
            all_coverage: ac,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub records: Vec<FitRecord>,
    pub aggregates: Vec<Aggregate>,
    pub rhat_threshold: f64,
}

impl StudyResult {
    pub fn new(records: Vec<FitRecord>, rhat_threshold: f64) -> Self {
        let aggregates = aggregate(&records);
        Self {
            records,
            aggregates,
            rhat_threshold,
        }
    }

    pub fn find(&self, scenario: &str, variant: ModelVariant, parameter: &str) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.scenario == scenario && a.variant == variant && a.parameter == parameter)
    }

    /// True iff every variant was fitted to byte-identical data within each
    /// (scenario, replicate).
    pub fn variants_paired(&self) -> bool {
        let mut seen: BTreeMap<(ScenarioKey, usize), &str> = BTreeMap::new();
        self.records.iter().filter(|r| !r.dataset_digest.is_empty()).all(|r| {
            let d = seen.entry((ScenarioKey::parse(&r.scenario), r.replicate)).or_insert(&r.dataset_digest);
            *d == r.dataset_digest
        })
    }
}

const RECORD_HEADER: [&str; 19] = [
    "scenario",
    "replicate",
    "variant",
    "dataset_seed",
    "dataset_digest",
    "converged",
    "error",
    "wall_seconds",
    "parameter",
    "truth",
    "median",
    "ci_lower",
    "ci_upper",
    "ci_width",
    "rhat",
    "ess",
    "relative_bias",
    "bias_absolute",
    "covered",
];

fn record_rows(r: &FitRecord) -> Vec<Vec<String>> {
    let head = vec![
        r.scenario.clone(),
        r.replicate.to_string(),
        r.variant.to_string(),
        r.dataset_seed.to_string(),
        r.dataset_digest.clone(),
        u8::from(r.converged).to_string(),
        r.error.clone().unwrap_or_default(),
        format_real(r.wall_seconds),
    ];
    if r.estimates.is_empty() {
        let mut row = head;
        row.extend(std::iter::repeat_n(String::new(), 11));
        return vec![row];
    }
    r.estimates
        .iter()
        .map(|e| {
            let mut row = head.clone();
            row.extend([
                e.parameter.clone(),
                format_real(e.truth),
                format_real(e.median),
                format_real(e.ci_lower),
                format_real(e.ci_upper),
                format_real(e.ci_width),
                format_real(e.rhat),
                format_real(e.ess),
                format_real(e.relative_bias),
                u8::from(e.bias_absolute).to_string(),
                u8::from(e.covered).to_string(),
            ]);
            row
        })
        .collect()
}

/// Record rows without a header, for appending.
pub fn records_csv_rows(records: &[FitRecord]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in records {
        for row in record_rows(r) {
            w.write_record(&row).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn records_csv_header() -> String {
    RECORD_HEADER.join(",") + "\n"
}

pub fn records_csv(records: &[FitRecord]) -> String {
    records_csv_header() + &records_csv_rows(records)
}

/// Reads a records file written by [`records_csv`] (possibly appended to by
/// several runs). Later rows for the same key replace earlier ones; a
/// truncated final line is ignored.
pub fn read_records(path: &Path) -> Result<Vec<FitRecord>> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: file.clone(),
        message: e.to_string(),
    })?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(complete.as_bytes());
    let perr = |line: usize, field: &str, message: String| Error::Parse {
        file: file.clone(),
        line,
        field: field.to_string(),
        message,
    };
    let mut out: BTreeMap<(ScenarioKey, usize, ModelVariant), FitRecord> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line() as usize), "record", e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let get = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            get(i)
                .parse::<f64>()
                .map_err(|e| perr(line, RECORD_HEADER[i], format!("`{}`: {e}", get(i))))
        };
        let int = |i: usize| -> Result<u64> {
            get(i)
                .parse::<u64>()
                .map_err(|e| perr(line, RECORD_HEADER[i], format!("`{}`: {e}", get(i))))
        };
        let variant: ModelVariant = get(2).parse().map_err(|e: String| perr(line, "variant", e.to_string()))?;
        let record = FitRecord {
            scenario: get(0).to_string(),
            replicate: int(1)? as usize,
            variant,
            dataset_seed: int(3)?,
            dataset_digest: get(4).to_string(),
            converged: get(5) == "1",
            error: Some(get(6).to_string()).filter(|s| !s.is_empty()),
            wall_seconds: num(7)?,
            estimates: Vec::new(),
        };
        let key = record.key();
        let entry = out.entry(key).or_insert_with(|| record.clone());
        if entry.dataset_digest != record.dataset_digest || entry.wall_seconds != record.wall_seconds {
            *entry = record;
        }
        if !get(8).is_empty() {
            let est = ParamEstimate {
                parameter: get(8).to_string(),
                truth: num(9)?,
                median: num(10)?,
                ci_lower: num(11)?,
                ci_upper: num(12)?,
                ci_width: num(13)?,
                rhat: num(14)?,
                ess: num(15)?,
                relative_bias: num(16)?,
                bias_absolute: get(17) == "1",
                covered: get(18) == "1",
            };
            entry.estimates.retain(|e| e.parameter != est.parameter);
            entry.estimates.push(est);
        }
    }
    Ok(out.into_values().collect())
}

/// One row per (scenario, variant, parameter), with the grid descriptors.
pub fn grid_table_csv(aggs: &[Aggregate]) -> String {
    let points = grid_points();
    let mut s = String::from(
        "scenario,sites,ratio,T,alpha1,lambda,p,variant,parameter,replicates,converged,failures,convergence_fraction,\
median_relative_bias,median_ci_width,coverage,all_median_relative_bias,all_median_ci_width,all_coverage\n",
    );
    for a in aggs {
        let desc = match ScenarioKey::parse(&a.scenario) {
            ScenarioKey::Grid(i) if i < points.len() => {
                let p = &points[i];
                format!(
                    "{},{},{},{},{},{}",
                    p.total_sites,
                    p.ratio.as_str(),
                    p.count_surveys,
                    format_real(p.alpha1),
                    format_real(p.lambda),
                    format_real(p.p())
                )
            }
            _ => ",,,,,".into(),
        };
        let _ = writeln!(
            s,
            "{},{desc},{},{},{},{},{},{},{},{},{},{},{},{}",
            a.scenario,
            a.variant,
            a.parameter,
            a.replicates,
            a.converged,
            a.failures,
            format_real(a.convergence_fraction),
            format_real(a.median_relative_bias),
            format_real(a.median_ci_width),
            format_real(a.coverage),
            format_real(a.all_median_relative_bias),
            format_real(a.all_median_ci_width),
            format_real(a.all_coverage)
        );
    }
    s
}

/// One row per point-count size: relative bias and CI width of both
/// abundance coefficients, over converged replicates.
pub fn sweep_table_csv(aggs: &[Aggregate]) -> String {
    let mut sizes: BTreeMap<usize, (Option<&Aggregate>, Option<&Aggregate>)> = BTreeMap::new();
    for a in aggs {
        if let ScenarioKey::Sweep(n) = ScenarioKey::parse(&a.scenario) {
            let e = sizes.entry(n).or_default();
            match a.parameter.as_str() {
                "beta0" => e.0 = Some(a),
                "beta1" => e.1 = Some(a),
                _ => {}
            }
        }
    }
    let mut s = String::from(
        "point_counts,beta0_relative_bias,beta0_ci_width,beta1_relative_bias,beta1_ci_width,\
replicates,converged,convergence_fraction,beta0_coverage,beta1_coverage\n",
    );
    let f = |a: Option<&Aggregate>, g: fn(&Aggregate) -> f64| a.map_or(String::new(), |a| format_real(g(a)));
    for (n, (b0, b1)) in sizes {
        let any = b0.or(b1).expect("entry has one");
        let _ = writeln!(
            s,
            "{n},{},{},{},{},{},{},{},{},{}",
            f(b0, |a| a.median_relative_bias),
            f(b0, |a| a.median_ci_width),
            f(b1, |a| a.median_relative_bias),
            f(b1, |a| a.median_ci_width),
            any.replicates,
            any.converged,
            format_real(any.convergence_fraction),
            f(b0, |a| a.coverage),
            f(b1, |a| a.coverage)
        );
    }
    s
}
