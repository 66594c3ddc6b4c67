use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::anyhow;
use log::{info, warn};

use arucount::diagnostics::{converged, summarize_output, DEFAULT_RHAT_THRESHOLD};
use arucount::io::{self, RunManifest};
use arucount::mcmc::{AbundanceKind, McmcConfig, Sampler};
use arucount::simulate::{covariate_base_spec, grid_points, simulate as draw, AbundanceSpec, ScenarioSpec, SweepSpec, SWEEP_POINT_COUNTS};
use arucount::study::{self, FitRecord, StudyConfig};
use arucount::{ModelVariant, SurveyDesign};

use crate::config::{split_list, Layers};
use crate::{CliError, FitArgs, McmcArgs, SimulateArgs, StudyArgs, StudyKindArg};

const RECORDS_FILE: &str = "records.csv";
const AGGREGATE_FILE: &str = "aggregate.csv";

fn invalid(msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid(anyhow!("{msg}"))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(anyhow!("{}: {e}", dir.display())))
}

fn flag(on: bool) -> Option<bool> {
    on.then_some(true)
}

fn custom_spec(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        label: "custom".into(),
        design: SurveyDesign::overlapping(30, 30, 10, 3).expect("valid design"),
        abundance: AbundanceSpec::Constant { lambda: 3.0 },
        alpha0: -2.19,
        alpha1: 3.0,
        delta: 4.0,
        omega: 3.0,
        p: 0.69,
        validation_fraction: 0.2,
        seed,
    }
}

fn base_spec(scenario: &str, seed: u64) -> Result<ScenarioSpec, CliError> {
    if scenario == "custom" {
        return Ok(custom_spec(seed));
    }
    if scenario == "covariate" {
        return Ok(covariate_base_spec(seed));
    }
    if let Some(rest) = scenario.strip_prefix("grid:") {
        let points = grid_points();
        let index: usize = rest
            .parse()
            .map_err(|_| invalid(format!("scenario `{scenario}`: grid index must be an integer")))?;
        let point = points
            .get(index)
            .ok_or_else(|| invalid(format!("scenario `{scenario}`: grid index must be below {}", points.len())))?;
        return Ok(point.spec(seed));
    }
    Err(invalid(format!("unknown scenario `{scenario}` (expected grid:<index>, covariate or custom)")))
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut l = Layers::load(a.config.as_deref())?;
    let scenario = l.get("scenario", a.scenario.clone(), "custom".to_string())?;
    let seed = l.get("seed", a.seed, 1u64)?;
    let mut spec = base_spec(&scenario, seed)?;
    spec.label = scenario.clone();

    let sites = l.get_opt("sites", a.sites)?;
    let r = l.get_opt("acoustic_sites", a.acoustic_sites)?.or(sites);
    let i = l.get_opt("count_sites", a.count_sites)?.or(sites);
    let j = l.get_opt("surveys", a.surveys)?;
    let t = l.get_opt("visits", a.visits)?;
    if r.is_some() || i.is_some() || j.is_some() || t.is_some() {
        let d = &spec.design;
        spec.design = SurveyDesign::overlapping(
            r.unwrap_or(d.num_acoustic_sites()),
            i.unwrap_or(d.num_count_sites()),
            j.unwrap_or(d.acoustic_surveys()),
            t.unwrap_or(d.count_surveys()),
        )?;
    }

    let lambda = l.get_opt("lambda", a.lambda)?;
    let beta0 = l.get_opt("beta0", a.beta0)?;
    let beta1 = l.get_opt("beta1", a.beta1)?;
    spec.abundance = match (lambda, beta0, beta1, &spec.abundance) {
        (Some(_), Some(_), _, _) | (Some(_), _, Some(_), _) => {
            return Err(invalid("lambda cannot be combined with beta0 or beta1"));
        }
        (Some(lambda), None, None, _) => AbundanceSpec::Constant { lambda },
        (None, None, None, current) => current.clone(),
        (None, b0, b1, AbundanceSpec::LogLinear { beta0, beta1 }) => AbundanceSpec::LogLinear {
            beta0: b0.unwrap_or(*beta0),
            beta1: b1.unwrap_or(*beta1),
        },
        (None, b0, b1, AbundanceSpec::Constant { lambda }) => AbundanceSpec::LogLinear {
            beta0: b0.unwrap_or(lambda.ln()),
            beta1: b1.unwrap_or(0.0),
        },
    };
    macro_rules! scalar {
        ($field:ident) => {
            if let Some(v) = l.get_opt(stringify!($field), a.$field)? {
                spec.$field = v;
            }
        };
    }
    scalar!(alpha0);
    scalar!(alpha1);
    scalar!(delta);
    scalar!(omega);
    scalar!(p);
    scalar!(validation_fraction);
    let point_counts = l.get_opt("point_counts", a.point_counts)?;
    l.finish()?;
    spec.validate()?;

    let (mut ds, truth) = draw(&spec)?;
    if let Some(n) = point_counts {
        if n == 0 || n > spec.design.num_count_sites() {
            return Err(invalid(format!(
                "point_counts must lie in 1..={}, got {n}",
                spec.design.num_count_sites()
            )));
        }
        ds = SweepSpec { base: spec.clone(), point_counts: n }.apply(&ds, seed)?;
    }

    create_dir(&a.out)?;
    let outputs = io::write_dataset(&a.out, &ds, Some(&truth))?;
    let mut manifest = RunManifest::new("simulate", seed, l.resolved());
    manifest.config_sources = l.sources();
    manifest.inputs.extend(l.input());
    manifest.outputs = outputs;
    manifest.notes.insert("dataset_digest".into(), io::dataset_digest(&ds).into());
    manifest.write(&a.out)?;
    info!("wrote dataset `{}` to {}", spec.label, a.out.display());
    Ok(())
}

struct Engine {
    mcmc: McmcConfig,
    rhat_threshold: f64,
    workers: usize,
}

fn engine(l: &mut Layers, m: &McmcArgs, base: McmcConfig, seed: u64) -> Result<Engine, CliError> {
    let mcmc = McmcConfig {
        chains: l.get("chains", m.chains, base.chains)?,
        iterations: l.get("iterations", m.iters, base.iterations)?,
        burn_in: l.get("burn_in", m.burn, base.burn_in)?,
        adapt: l.get("adapt", m.adapt, base.adapt)?,
        thin: l.get("thin", m.thin, base.thin)?,
        abundance_cap: l.get_opt("abundance_cap", m.cap)?,
        seed,
        ..base
    };
    mcmc.validate()?;
    let rhat_threshold = l.get("rhat_threshold", m.rhat_threshold, DEFAULT_RHAT_THRESHOLD)?;
    if rhat_threshold.is_nan() || rhat_threshold <= 1.0 {
        return Err(invalid(format!("rhat_threshold must exceed 1, got {rhat_threshold}")));
    }
    let workers = l.get("workers", m.workers, 1usize)?;
    if workers == 0 {
        return Err(invalid("workers must be at least 1"));
    }
    Ok(Engine { mcmc, rhat_threshold, workers })
}

/// Digest of every dataset file present in `dir`.
fn input_digests(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for name in [io::SITES_FILE, io::ACOUSTIC_FILE, io::VALIDATION_FILE, io::COUNTS_FILE] {
        let path = dir.join(name);
        if path.exists() {
            let bytes = std::fs::read(&path).map_err(|e| CliError::Io(anyhow!("{}: {e}", path.display())))?;
            out.insert(name.to_string(), io::sha256_hex(&bytes));
        }
    }
    Ok(out)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start {workers} worker threads: {e}")))
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let mut l = Layers::load(a.config.as_deref())?;
    let variant: ModelVariant = l
        .get_opt::<String>("variant", a.variant.clone())?
        .ok_or_else(|| invalid("variant is required (--variant or config field `variant`)"))?
        .parse()
        .map_err(invalid)?;
    let seed = l.get("seed", a.seed, 1u64)?;
    let kind = match l.get_opt::<String>("abundance", a.abundance.clone())?.as_deref() {
        None => None,
        Some("constant") => Some(AbundanceKind::Constant),
        Some("log-linear") => Some(AbundanceKind::LogLinear),
        Some(other) => return Err(invalid(format!("abundance must be `constant` or `log-linear`, got `{other}`"))),
    };
    let eng = engine(&mut l, &a.mcmc, McmcConfig::default(), seed)?;
    let per_site = l.get("per_site", flag(a.per_site), false)?;
    let allow = l.get("allow_nonconverged", flag(a.allow_nonconverged), false)?;
    l.finish()?;

    let inputs = input_digests(&a.data)?;
    let ds = io::read_dataset(&a.data)?;
    let mut sampler = Sampler::new(eng.mcmc.clone());
    if let Some(kind) = kind {
        sampler = sampler.abundance(kind);
    }
    let total = eng.mcmc.iterations;
    sampler = sampler.progress(Arc::new(move |chain, done| info!("chain {chain}: {done}/{total} iterations")));
    let out = pool(eng.workers)?.install(|| sampler.run(&ds, variant))?;
    let rows = summarize_output(&out, per_site);
    let ok = converged(&rows, eng.rhat_threshold);

    create_dir(&a.out)?;
    let mut manifest = RunManifest::new("fit", seed, l.resolved());
    manifest.config_sources = l.sources();
    manifest.inputs = inputs;
    manifest.inputs.extend(l.input());
    for (name, text) in [
        (io::DRAWS_FILE, io::draws_csv(&out, per_site)),
        (io::SUMMARY_FILE, io::summary_csv(&rows)),
    ] {
        let digest = io::write_text(&a.out.join(name), &text)?;
        manifest.outputs.insert(name.to_string(), digest);
    }
    let acceptance: Vec<_> = out.chains.iter().map(|c| c.acceptance.clone()).collect();
    manifest.notes.insert("variant".into(), variant.to_string().into());
    manifest.notes.insert("abundance_model".into(), serde_json::to_value(out.kind).expect("json"));
    manifest.notes.insert("converged".into(), ok.into());
    manifest.notes.insert("retained_draws_per_chain".into(), out.draws_per_chain().into());
    manifest.notes.insert("acceptance".into(), serde_json::to_value(acceptance).expect("json"));
    manifest.notes.insert("dataset_digest".into(), out.dataset_digest.clone().into());
    manifest.notes.insert("config_hash".into(), out.config_hash.clone().into());
    manifest.write(&a.out)?;

    if !ok {
        let above: Vec<String> = rows
            .iter()
            .filter(|r| !r.parameter.starts_with('N') && (r.rhat.is_nan() || r.rhat >= eng.rhat_threshold))
            .map(|r| format!("{} ({})", r.parameter, io::format_real(r.rhat)))
            .collect();
        let msg = format!("not converged: R-hat at or above {} for {}", eng.rhat_threshold, above.join(", "));
        if allow {
            warn!("{msg}");
        } else {
            return Err(CliError::NotConverged(msg));
        }
    }
    info!("wrote {} draws per chain to {}", out.draws_per_chain(), a.out.display());
    Ok(())
}

fn strip_timing(records: &[FitRecord], keep: bool) -> Vec<FitRecord> {
    records
        .iter()
        .cloned()
        .map(|mut r| {
            if !keep {
                r.wall_seconds = 0.0;
            }
            r
        })
        .collect()
}

fn append(path: &Path, text: &str) -> std::io::Result<()> {
    let mut f = std::fs::OpenOptions::new().append(true).open(path)?;
    f.write_all(text.as_bytes())
}

pub fn study(a: &StudyArgs) -> Result<(), CliError> {
    let mut l = Layers::load(a.config.as_deref())?;
    let full = l.get("full_scale", flag(a.full_scale), false)?;
    let seed = l.get("seed", a.seed, 1u64)?;
    let base = if full { McmcConfig::full_scale() } else { McmcConfig::default() };
    let eng = engine(&mut l, &a.mcmc, base, seed)?;
    let replicates = l.get("replicates", a.replicates, if full { 100 } else { 25 })?;
    if replicates == 0 {
        return Err(invalid("replicates must be at least 1"));
    }
    let first_replicate = l.get("first_replicate", a.first_replicate, 0usize)?;
    let timings = l.get("timings", flag(a.timings), false)?;
    let resume = l.get("resume", flag(a.resume), false)?;
    let filter = l.get_opt::<String>("filter", a.filter.clone())?;
    let variants = l.get_opt::<String>("variants", a.variants.clone())?;
    let sizes = l.get_opt::<String>("sizes", a.sizes.clone())?;

    let mut cfg = StudyConfig {
        replicates,
        first_replicate,
        master_seed: seed,
        mcmc: eng.mcmc.clone(),
        workers: eng.workers,
        rhat_threshold: eng.rhat_threshold,
        ..StudyConfig::default()
    };
    let plan = match a.kind {
        StudyKindArg::Grid => {
            if sizes.is_some() {
                return Err(invalid("sizes apply to the point-count sweep only"));
            }
            if let Some(v) = &variants {
                cfg.variants = split_list(v, "variant").map_err(CliError::Invalid)?;
            }
            let terms = study::parse_filter(filter.as_deref().unwrap_or(""))?;
            let points = study::select_grid(&terms)?;
            if points.is_empty() {
                return Err(invalid("filter matches no grid scenario"));
            }
            Plan::Grid(points)
        }
        StudyKindArg::PointcountSweep => {
            if filter.is_some() || variants.is_some() {
                return Err(invalid("filter and variants apply to the grid study only"));
            }
            let sizes = match &sizes {
                Some(s) => split_list::<usize>(s, "size").map_err(CliError::Invalid)?,
                None => SWEEP_POINT_COUNTS.to_vec(),
            };
            let max = covariate_base_spec(0).design.num_count_sites();
            if let Some(bad) = sizes.iter().find(|&&s| s == 0 || s > max) {
                return Err(invalid(format!("sizes must lie in 1..={max}, got {bad}")));
            }
            Plan::Sweep(sizes)
        }
    };
    l.finish()?;

    create_dir(&a.out)?;
    let records_path = a.out.join(RECORDS_FILE);
    let existing = if resume && records_path.exists() {
        study::read_records(&records_path)?
    } else {
        Vec::new()
    };
    if !existing.is_empty() {
        info!("resuming with {} finished fits", existing.len());
    }
    // Rewriting drops any line cut short by an interruption.
    io::write_text(&records_path, &study::records_csv(&existing))?;
    let sink = |recs: &[FitRecord]| {
        for r in recs {
            let status = match (&r.error, r.converged) {
                (Some(e), _) => format!("failed: {e}"),
                (None, true) => "converged".into(),
                (None, false) => "not converged".into(),
            };
            info!("{} replicate {} {}: {status}", r.scenario, r.replicate, r.variant);
        }
        if let Err(e) = append(&records_path, &study::records_csv_rows(&strip_timing(recs, timings))) {
            warn!("{}: cannot append records: {e}", records_path.display());
        }
    };
    let result = match &plan {
        Plan::Grid(points) => study::run_grid(&cfg, points, &existing, Some(&sink))?,
        Plan::Sweep(sizes) => study::run_pointcount_sweep(&cfg, sizes, &existing, Some(&sink))?,
    };

    let records = strip_timing(&result.records, timings);
    let table = match plan {
        Plan::Grid(_) => study::grid_table_csv(&result.aggregates),
        Plan::Sweep(_) => study::sweep_table_csv(&result.aggregates),
    };
    let command = match a.kind {
        StudyKindArg::Grid => "study grid",
        StudyKindArg::PointcountSweep => "study pointcount-sweep",
    };
    let mut manifest = RunManifest::new(command, seed, l.resolved());
    manifest.config_sources = l.sources();
    manifest.inputs.extend(l.input());
    for (name, text) in [(RECORDS_FILE, study::records_csv(&records)), (AGGREGATE_FILE, table)] {
        let digest = io::write_text(&a.out.join(name), &text)?;
        manifest.outputs.insert(name.to_string(), digest);
    }
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let conv = records.iter().filter(|r| r.converged).count();
    manifest.notes.insert("fits".into(), records.len().into());
    manifest.notes.insert("converged_fits".into(), conv.into());
    manifest.notes.insert("failed_fits".into(), failures.into());
    manifest.notes.insert("variants_paired".into(), result.variants_paired().into());
    manifest.write(&a.out)?;
    info!("{} fits ({conv} converged, {failures} failed); results in {}", records.len(), a.out.display());
    Ok(())
}

enum Plan {
    Grid(Vec<arucount::simulate::GridPoint>),
    Sweep(Vec<usize>),
}
