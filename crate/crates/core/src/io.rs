//! Dataset and result files.
//!
//! All CSV output is canonical: LF line endings, fixed column order, no
//! padding, integers as plain decimals and reals in shortest round-trip form.
//! Equal datasets therefore produce equal bytes and equal digests.
//!
//! Dataset layout (site ids are global site indices):
//!
//! * `sites.csv`: `site,x_covariate,is_acoustic,is_count`
//! * `acoustic.csv`: `site,survey,y,v`, one row per observed survey
//! * `validation.csv`: `site,survey,n,k`
//! * `counts.csv`: `site,visit,c`, one row per observed visit
//!
//! A missing acoustic or count row marks that survey as missing. Acoustic
//! sites must be numbered `0..R`. The number of surveys per site is taken
//! from the largest survey index present.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::PosteriorSummary;
use crate::error::{Error, Result};
use crate::mcmc::ChainOutput;
use crate::model::{AcousticData, CountData, Dataset, Grid, SurveyDesign, ValidationData};
use crate::simulate::TruthRecord;

pub const SITES_FILE: &str = "sites.csv";
pub const ACOUSTIC_FILE: &str = "acoustic.csv";
pub const VALIDATION_FILE: &str = "validation.csv";
pub const COUNTS_FILE: &str = "counts.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const DRAWS_FILE: &str = "draws.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const SITES_HEADER: [&str; 4] = ["site", "x_covariate", "is_acoustic", "is_count"];
const ACOUSTIC_HEADER: [&str; 4] = ["site", "survey", "y", "v"];
const VALIDATION_HEADER: [&str; 4] = ["site", "survey", "n", "k"];
const COUNTS_HEADER: [&str; 3] = ["site", "visit", "c"];

/// Shortest decimal that parses back to the same `f64`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    crate::mcmc::hex(&Sha256::digest(bytes))
}

/// Canonical text of each dataset file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDataset {
    pub sites: String,
    pub acoustic: Option<String>,
    pub validation: Option<String>,
    pub counts: Option<String>,
}

impl EncodedDataset {
    /// `(file name, contents)` for every present file, in fixed order.
    pub fn files(&self) -> Vec<(&'static str, &str)> {
        let mut out = vec![(SITES_FILE, self.sites.as_str())];
        for (name, text) in [
            (ACOUSTIC_FILE, &self.acoustic),
            (VALIDATION_FILE, &self.validation),
            (COUNTS_FILE, &self.counts),
        ] {
            if let Some(t) = text {
                out.push((name, t.as_str()));
            }
        }
        out
    }
}

pub fn encode_dataset(ds: &Dataset) -> EncodedDataset {
    let design = ds.design();
    let mut sites = SITES_HEADER.join(",") + "\n";
    for g in 0..design.num_global_sites() {
        let x = ds.covariate().map_or(String::new(), |x| format_real(x[g]));
        let _ = writeln!(
            sites,
            "{g},{x},{},{}",
            u8::from(design.is_acoustic(g)),
            u8::from(design.count_index(g).is_some())
        );
    }
    let (r, j) = (design.num_acoustic_sites(), design.acoustic_surveys());
    let acoustic = ds.acoustic().map(|a| {
        let mut out = ACOUSTIC_HEADER.join(",") + "\n";
        for site in 0..r {
            for survey in 0..j {
                if a.is_observed(site, survey) {
                    let _ = writeln!(out, "{site},{survey},{},{}", a.y[(site, survey)], a.v[(site, survey)]);
                }
            }
        }
        out
    });
    let validation = ds.validation().map(|val| {
        let a = ds.acoustic().expect("validation implies acoustic");
        let mut out = VALIDATION_HEADER.join(",") + "\n";
        for site in 0..r {
            for survey in 0..j {
                if a.is_observed(site, survey) {
                    let _ = writeln!(
                        out,
                        "{site},{survey},{},{}",
                        val.checked[(site, survey)],
                        val.confirmed[(site, survey)]
                    );
                }
            }
        }
        out
    });
    let counts = ds.counts().map(|c| {
        let mut out = COUNTS_HEADER.join(",") + "\n";
        let mut order: Vec<(usize, usize)> = design.site_map().iter().copied().enumerate().map(|(i, g)| (g, i)).collect();
        order.sort_unstable();
        for (g, i) in order {
            for t in 0..design.count_surveys() {
                if !c.missing[(i, t)] {
                    let _ = writeln!(out, "{g},{t},{}", c.c[(i, t)]);
                }
            }
        }
        out
    });
    EncodedDataset {
        sites,
        acoustic,
        validation,
        counts,
    }
}

/// SHA-256 over the canonical files, each prefixed by its name and length.
pub fn dataset_digest(ds: &Dataset) -> String {
    let enc = encode_dataset(ds);
    let mut h = Sha256::new();
    for (name, text) in enc.files() {
        h.update(format!("{name}\n{}\n", text.len()).as_bytes());
        h.update(text.as_bytes());
    }
    crate::mcmc::hex(&h.finalize())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `text` and returns its SHA-256.
pub fn write_text(path: &Path, text: &str) -> Result<String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

/// Writes the dataset files (and `truth.json` when given) into `dir`.
/// Returns the digest of each file written.
pub fn write_dataset(dir: &Path, ds: &Dataset, truth: Option<&TruthRecord>) -> Result<BTreeMap<String, String>> {
    let mut digests = BTreeMap::new();
    for (name, text) in encode_dataset(ds).files() {
        digests.insert(name.to_string(), write_text(&dir.join(name), text)?);
    }
    if let Some(t) = truth {
        digests.insert(TRUTH_FILE.into(), write_text(&dir.join(TRUTH_FILE), &to_json_pretty(t))?);
    }
    Ok(digests)
}

pub fn read_truth(dir: &Path) -> Result<TruthRecord> {
    let path = dir.join(TRUTH_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, e))
}

/// Rows of one CSV file with their 1-based line numbers.
struct Table {
    file: String,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, header: &[&str]) -> Result<Self> {
        let file = path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| io_err(path, e))?;
        let found = rdr.headers().map_err(|e| io_err(path, e))?.clone();
        if found.iter().collect::<Vec<_>>() != header {
            return Err(Error::Parse {
                file,
                line: 1,
                field: "header".into(),
                message: format!("expected `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::Parse {
                    file: file.clone(),
                    line,
                    field: "record".into(),
                    message: e.to_string(),
                }
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((line, rec));
        }
        Ok(Self { file, rows })
    }

    fn err(&self, line: usize, field: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            file: self.file.clone(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    fn field<T: FromStr>(&self, line: usize, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = rec.get(idx).unwrap_or("");
        raw.parse()
            .map_err(|e: T::Err| self.err(line, name, format!("cannot parse `{raw}`: {e}")))
    }
}

fn parse_flag(t: &Table, line: usize, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<bool> {
    match rec.get(idx).unwrap_or("") {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        raw => Err(t.err(line, name, format!("expected 0 or 1, found `{raw}`"))),
    }
}

/// Reads a dataset directory. `sites.csv` is required; each data block is
/// read if its file exists.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let sites = Table::read(&dir.join(SITES_FILE), &SITES_HEADER)?;
    let g = sites.rows.len();
    let mut acoustic_flag = vec![false; g];
    let mut count_flag = vec![false; g];
    let mut covariate: Vec<Option<f64>> = vec![None; g];
    let mut seen = vec![false; g];
    for (line, rec) in &sites.rows {
        let site: usize = sites.field(*line, rec, 0, "site")?;
        if site >= g || seen[site] {
            return Err(sites.err(*line, "site", format!("site ids must be 0..{g} without repeats, found {site}")));
        }
        seen[site] = true;
        let raw_x = rec.get(1).unwrap_or("");
        if !raw_x.is_empty() {
            covariate[site] = Some(sites.field(*line, rec, 1, "x_covariate")?);
        }
        acoustic_flag[site] = parse_flag(&sites, *line, rec, 2, "is_acoustic")?;
        count_flag[site] = parse_flag(&sites, *line, rec, 3, "is_count")?;
    }
    let r = acoustic_flag.iter().filter(|&&a| a).count();
    if let Some(pos) = acoustic_flag.iter().position(|&a| !a) {
        if pos < r {
            let line = sites.rows.iter().find(|(_, rec)| rec.get(0) == Some(&pos.to_string())).map_or(0, |x| x.0);
            return Err(sites.err(line, "is_acoustic", format!("acoustic sites must be numbered 0..{r}")));
        }
    }
    let site_map: Vec<usize> = (0..g).filter(|&s| count_flag[s]).collect();
    let local: BTreeMap<usize, usize> = site_map.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let read_opt = |name: &str, header: &[&str]| -> Result<Option<Table>> {
        let path = dir.join(name);
        if path.exists() {
            Table::read(&path, header).map(Some)
        } else {
            Ok(None)
        }
    };
    let acoustic_t = read_opt(ACOUSTIC_FILE, &ACOUSTIC_HEADER)?;
    let validation_t = read_opt(VALIDATION_FILE, &VALIDATION_HEADER)?;
    let counts_t = read_opt(COUNTS_FILE, &COUNTS_HEADER)?;

    let max_index = |t: &Option<Table>, name: &str| -> Result<usize> {
        let mut m = 0;
        if let Some(t) = t {
            for (line, rec) in &t.rows {
                let j: usize = t.field(*line, rec, 1, name)?;
                m = m.max(j + 1);
            }
        }
        Ok(m.max(1))
    };
    let j = max_index(&acoustic_t, "survey")?.max(max_index(&validation_t, "survey")?);
    let t_visits = max_index(&counts_t, "visit")?;
    let design = SurveyDesign::new(r, site_map.len(), j, t_visits, site_map.clone())?;

    let acoustic = match &acoustic_t {
        None => None,
        Some(t) => {
            let mut y = Grid::filled(r, j, 0u8);
            let mut v = Grid::filled(r, j, 0u32);
            let mut missing = Grid::filled(r, j, true);
            for (line, rec) in &t.rows {
                let site: usize = t.field(*line, rec, 0, "site")?;
                if site >= r {
                    return Err(t.err(*line, "site", format!("site {site} is not an acoustic site")));
                }
                let survey: usize = t.field(*line, rec, 1, "survey")?;
                if !missing[(site, survey)] {
                    return Err(t.err(*line, "survey", format!("duplicate record for site {site}, survey {survey}")));
                }
                let yv: u8 = t.field(*line, rec, 2, "y")?;
                if yv > 1 {
                    return Err(t.err(*line, "y", format!("detection must be 0 or 1, found {yv}")));
                }
                let vv: u32 = t.field(*line, rec, 3, "v")?;
                if yv == 0 && vv > 0 {
                    return Err(t.err(*line, "v", format!("{vv} vocalizations recorded without a detection")));
                }
                y[(site, survey)] = yv;
                v[(site, survey)] = vv;
                missing[(site, survey)] = false;
            }
            Some(AcousticData { y, v, missing })
        }
    };

    let validation = match (&validation_t, &acoustic) {
        (None, _) => None,
        (Some(t), None) => return Err(t.err(1, "file", format!("{VALIDATION_FILE} given without {ACOUSTIC_FILE}"))),
        (Some(t), Some(a)) => {
            let mut val = ValidationData::empty(r, j);
            let mut filled = Grid::filled(r, j, false);
            for (line, rec) in &t.rows {
                let site: usize = t.field(*line, rec, 0, "site")?;
                let survey: usize = t.field(*line, rec, 1, "survey")?;
                if site >= r || !a.is_observed(site, survey) {
                    return Err(t.err(*line, "site", format!("no acoustic record for site {site}, survey {survey}")));
                }
                if filled[(site, survey)] {
                    return Err(t.err(*line, "survey", format!("duplicate record for site {site}, survey {survey}")));
                }
                let n: u32 = t.field(*line, rec, 2, "n")?;
                let k: u32 = t.field(*line, rec, 3, "k")?;
                let vv = a.v[(site, survey)];
                if n > vv {
                    return Err(t.err(*line, "n", format!("{n} checked calls exceed {vv} recorded")));
                }
                if k > n {
                    return Err(t.err(*line, "k", format!("{k} confirmed calls exceed {n} checked")));
                }
                val.checked[(site, survey)] = n;
                val.confirmed[(site, survey)] = k;
                filled[(site, survey)] = true;
            }
            Some(val)
        }
    };

    let counts = match &counts_t {
        None => None,
        Some(t) => {
            let i = site_map.len();
            let mut c = Grid::filled(i, t_visits, 0u32);
            let mut missing = Grid::filled(i, t_visits, true);
            for (line, rec) in &t.rows {
                let site: usize = t.field(*line, rec, 0, "site")?;
                let Some(&row) = local.get(&site) else {
                    return Err(t.err(*line, "site", format!("site {site} is not a point-count site")));
                };
                let visit: usize = t.field(*line, rec, 1, "visit")?;
                if !missing[(row, visit)] {
                    return Err(t.err(*line, "visit", format!("duplicate record for site {site}, visit {visit}")));
                }
                c[(row, visit)] = t.field(*line, rec, 2, "c")?;
                missing[(row, visit)] = false;
            }
            Some(CountData { c, missing })
        }
    };

    let ds = Dataset::new(design, acoustic, validation, counts)?;
    let present = covariate.iter().filter(|x| x.is_some()).count();
    if present == 0 {
        return Ok(ds);
    }
    if present < g {
        let site = covariate.iter().position(Option::is_none).expect("some missing");
        let line = sites.rows.iter().find(|(_, rec)| rec.get(0) == Some(&site.to_string())).map_or(0, |x| x.0);
        return Err(sites.err(line, "x_covariate", "covariate must be given for every site or none"));
    }
    ds.with_covariate(covariate.into_iter().map(|x| x.expect("all present")).collect())
}

/// `chain,iteration,parameter,value` in long format: every scalar, the log
/// posterior and, when `per_site`, each site's abundance as `N[site]`.
pub fn draws_csv(out: &ChainOutput, per_site: bool) -> String {
    let mut s = String::from("chain,iteration,parameter,value\n");
    for c in &out.chains {
        for (d, it) in c.iterations.iter().enumerate() {
            for (p, series) in out.params.iter().zip(&c.scalars) {
                let _ = writeln!(s, "{},{it},{},{}", c.chain, p.name(), format_real(series[d]));
            }
            let _ = writeln!(s, "{},{it},log_posterior,{}", c.chain, format_real(c.log_posterior[d]));
            if per_site {
                for (site, series) in out.sites.iter().zip(&c.abundance) {
                    let _ = writeln!(s, "{},{it},N[{site}],{}", c.chain, series[d]);
                }
            }
        }
    }
    s
}

pub fn summary_csv(rows: &[PosteriorSummary]) -> String {
    let mut s = String::from("parameter,median,ci_lower,ci_upper,ci_width,rhat,ess\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.parameter,
            format_real(r.median),
            format_real(r.ci_lower),
            format_real(r.ci_upper),
            format_real(r.ci_width),
            format_real(r.rhat),
            format_real(r.ess)
        );
    }
    s
}

/// Provenance record written next to every set of outputs.
///
/// `run_id` hashes the command, configuration and inputs; `outputs` holds
/// the SHA-256 of every file the run wrote, so each output can be traced to
/// the manifest that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub run_id: String,
    pub master_seed: u64,
    pub config_digest: String,
    pub config: serde_json::Value,
    /// Where each configuration value came from: `flag`, `file` or `default`.
    pub config_sources: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Only set when requested or when `SOURCE_DATE_EPOCH` is defined, so
    /// that reruns stay byte-identical by default.
    pub timestamp: Option<String>,
    pub decisions: BTreeMap<String, String>,
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, config: serde_json::Value) -> Self {
        let config_digest = sha256_hex(serde_json::to_string(&config).expect("json").as_bytes());
        let decisions = [
            ("validation_rounding", "round half to even"),
            ("quantile_type", "type 7 (linear interpolation between order statistics)"),
            ("rhat", "classic Gelman-Rubin, floored at 1"),
            ("convergence_gating", "scalar parameters only; per-site abundance excluded"),
            ("aggregation", "medians over converged replicates; all-replicate aggregates also reported"),
            ("variant_pairing", "same simulated dataset fitted by every variant within a replicate"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Self {
            tool: "arucount".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            run_id: String::new(),
            master_seed,
            config_digest,
            config,
            config_sources: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
            decisions,
            notes: BTreeMap::new(),
        }
    }

    /// Sets the current time as seconds since the Unix epoch, unless
    /// `SOURCE_DATE_EPOCH` already fixed it.
    pub fn stamp_now(&mut self) {
        if self.timestamp.is_none() {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            self.timestamp = Some(secs.to_string());
        }
    }

    /// Computes `run_id` and writes `manifest.json` into `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<String> {
        let id_source = serde_json::json!({
            "command": self.command,
            "seed": self.master_seed,
            "config": self.config_digest,
            "inputs": self.inputs,
        });
        self.run_id = sha256_hex(id_source.to_string().as_bytes());
        write_text(&dir.join(MANIFEST_FILE), &to_json_pretty(self))
    }
}
