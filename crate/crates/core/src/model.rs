//! Survey designs, data blocks, parameters and model variants.
//!
//! Sites live on a single global index. Acoustic site `r` is global site `r`
//! (`0..R`); count site `i` is global site `site_map[i]`. The global list is
//! the union of both, so the count sites may overlap the acoustic sites
//! fully, partially, or not at all.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a grid from nested rows. Ragged input is rejected.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return None;
        }
        Some(Self {
            rows: n,
            cols: m,
            data: rows.into_iter().flatten().collect(),
        })
    }
}

impl<T> Grid<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    fn check(&self, block: &'static str, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::DimensionMismatch {
                block,
                expected_rows: rows,
                expected_cols: cols,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DesignRepr", into = "DesignRepr")]
pub struct SurveyDesign {
    num_acoustic_sites: usize,
    num_count_sites: usize,
    acoustic_surveys: usize,
    count_surveys: usize,
    site_map: Vec<usize>,
    num_global_sites: usize,
    count_index: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DesignRepr {
    num_acoustic_sites: usize,
    num_count_sites: usize,
    acoustic_surveys: usize,
    count_surveys: usize,
    site_map: Vec<usize>,
}

impl TryFrom<DesignRepr> for SurveyDesign {
    type Error = Error;

    fn try_from(r: DesignRepr) -> Result<Self> {
        SurveyDesign::new(
            r.num_acoustic_sites,
            r.num_count_sites,
            r.acoustic_surveys,
            r.count_surveys,
            r.site_map,
        )
    }
}

impl From<SurveyDesign> for DesignRepr {
    fn from(d: SurveyDesign) -> Self {
        DesignRepr {
            num_acoustic_sites: d.num_acoustic_sites,
            num_count_sites: d.num_count_sites,
            acoustic_surveys: d.acoustic_surveys,
            count_surveys: d.count_surveys,
            site_map: d.site_map,
        }
    }
}

impl SurveyDesign {
    /// `site_map[i]` is the global index of count site `i`.
    pub fn new(
        num_acoustic_sites: usize,
        num_count_sites: usize,
        acoustic_surveys: usize,
        count_surveys: usize,
        site_map: Vec<usize>,
    ) -> Result<Self> {
        for (name, value) in [
            ("number of acoustic sites", num_acoustic_sites),
            ("number of count sites", num_count_sites),
            ("acoustic surveys per site", acoustic_surveys),
            ("count surveys per site", count_surveys),
        ] {
            if value == 0 {
                return Err(Error::InvalidDesign(format!("{name} must be at least 1")));
            }
        }
        if site_map.len() != num_count_sites {
            return Err(Error::InvalidDesign(format!(
                "site map has {} entries for {} count sites",
                site_map.len(),
                num_count_sites
            )));
        }
        let num_global_sites = site_map
            .iter()
            .map(|&g| g + 1)
            .max()
            .unwrap_or(0)
            .max(num_acoustic_sites);
        let mut count_index = vec![None; num_global_sites];
        for (i, &g) in site_map.iter().enumerate() {
            if let Some(prev) = count_index[g] {
                return Err(Error::InvalidDesign(format!(
                    "count sites {prev} and {i} both map to global site {g}"
                )));
            }
            count_index[g] = Some(i);
        }
        if let Some(g) = (num_acoustic_sites..num_global_sites).find(|&g| count_index[g].is_none()) {
            return Err(Error::InvalidDesign(format!(
                "global site {g} is covered by neither survey"
            )));
        }
        Ok(Self {
            num_acoustic_sites,
            num_count_sites,
            acoustic_surveys,
            count_surveys,
            site_map,
            num_global_sites,
            count_index,
        })
    }

    /// Count sites are the first `count_sites` global sites.
    pub fn overlapping(acoustic_sites: usize, count_sites: usize, j: usize, t: usize) -> Result<Self> {
        Self::new(acoustic_sites, count_sites, j, t, (0..count_sites).collect())
    }

    pub fn num_acoustic_sites(&self) -> usize {
        self.num_acoustic_sites
    }

    pub fn num_count_sites(&self) -> usize {
        self.num_count_sites
    }

    pub fn acoustic_surveys(&self) -> usize {
        self.acoustic_surveys
    }

    pub fn count_surveys(&self) -> usize {
        self.count_surveys
    }

    pub fn site_map(&self) -> &[usize] {
        &self.site_map
    }

    pub fn num_global_sites(&self) -> usize {
        self.num_global_sites
    }

    pub fn is_acoustic(&self, global: usize) -> bool {
        global < self.num_acoustic_sites
    }

    /// Count-site index of a global site, if it was point counted.
    pub fn count_index(&self, global: usize) -> Option<usize> {
        self.count_index.get(global).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcousticData {
    /// Binary detections from the clustering step, R x J.
    pub y: Grid<u8>,
    /// Clustered vocalization counts, R x J.
    pub v: Grid<u32>,
    /// `true` marks a survey with no recording.
    pub missing: Grid<bool>,
}

impl AcousticData {
    pub fn complete(y: Grid<u8>, v: Grid<u32>) -> Self {
        let missing = Grid::filled(y.rows(), y.cols(), false);
        Self { y, v, missing }
    }

    pub fn is_observed(&self, site: usize, survey: usize) -> bool {
        !self.missing[(site, survey)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationData {
    /// Vocalizations manually checked.
    pub checked: Grid<u32>,
    /// Checked vocalizations confirmed as the target species.
    pub confirmed: Grid<u32>,
}

impl ValidationData {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            checked: Grid::filled(rows, cols, 0),
            confirmed: Grid::filled(rows, cols, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountData {
    /// Point counts, I x T, rows indexed by count site.
    pub c: Grid<u32>,
    pub missing: Grid<bool>,
}

impl CountData {
    pub fn complete(c: Grid<u32>) -> Self {
        let missing = Grid::filled(c.rows(), c.cols(), false);
        Self { c, missing }
    }
}

/// Expected abundance per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AbundanceModel {
    Constant {
        lambda: f64,
    },
    /// `log(lambda_i) = beta0 + beta1 * x_i`
    LogLinear {
        beta0: f64,
        beta1: f64,
        covariate: Arc<Vec<f64>>,
    },
}

impl AbundanceModel {
    pub fn rate(&self, site: usize) -> f64 {
        match self {
            Self::Constant { lambda } => *lambda,
            Self::LogLinear {
                beta0,
                beta1,
                covariate,
            } => (beta0 + beta1 * covariate[site]).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { lambda } if !(lambda.is_finite() && *lambda > 0.0) => Err(
                Error::InvalidAbundance(format!("lambda must be positive and finite, got {lambda}")),
            ),
            Self::Constant { .. } => Ok(()),
            Self::LogLinear { covariate, .. } => {
                match (0..covariate.len()).find(|&i| !self.rate(i).is_finite()) {
                    Some(i) => Err(Error::InvalidAbundance(format!(
                        "expected abundance overflows at site {i}"
                    ))),
                    None => Ok(()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Acoustic detections plus validated vocalizations.
    AV,
    /// Repeated point counts (N-mixture).
    C,
    /// Acoustic detections plus point counts.
    AC,
    /// All three data blocks.
    #[serde(alias = "AVC")]
    ACV,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [Self::AV, Self::C, Self::AC, Self::ACV];

    pub fn blocks(self) -> ActiveBlocks {
        match self {
            Self::AV => ActiveBlocks {
                acoustic: true,
                validation: true,
                counts: false,
            },
            Self::C => ActiveBlocks {
                acoustic: false,
                validation: false,
                counts: true,
            },
            Self::AC => ActiveBlocks {
                acoustic: true,
                validation: false,
                counts: true,
            },
            Self::ACV => ActiveBlocks {
                acoustic: true,
                validation: true,
                counts: true,
            },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AV => "AV",
            Self::C => "C",
            Self::AC => "AC",
            Self::ACV => "ACV",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AV" => Ok(Self::AV),
            "C" => Ok(Self::C),
            "AC" => Ok(Self::AC),
            "ACV" | "AVC" => Ok(Self::ACV),
            other => Err(format!("unknown model variant `{other}` (expected AV, C, AC or ACV)")),
        }
    }
}

/// Which likelihood terms a variant switches on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveBlocks {
    pub acoustic: bool,
    pub validation: bool,
    pub counts: bool,
}

/// A survey design together with data blocks that satisfy every type
/// invariant. Construct through [`Dataset::new`] or [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    design: SurveyDesign,
    acoustic: Option<AcousticData>,
    validation: Option<ValidationData>,
    counts: Option<CountData>,
    covariate: Option<Arc<Vec<f64>>>,
}

impl Dataset {
    pub fn new(
        design: SurveyDesign,
        acoustic: Option<AcousticData>,
        validation: Option<ValidationData>,
        counts: Option<CountData>,
    ) -> Result<Self> {
        let (r, j) = (design.num_acoustic_sites(), design.acoustic_surveys());
        if let Some(a) = &acoustic {
            a.y.check("acoustic detections", r, j)?;
            a.v.check("vocalization counts", r, j)?;
            a.missing.check("acoustic missing mask", r, j)?;
            for site in 0..r {
                for survey in 0..j {
                    if !a.is_observed(site, survey) {
                        continue;
                    }
                    let (y, v) = (a.y[(site, survey)], a.v[(site, survey)]);
                    if y > 1 {
                        return Err(Error::InvalidDetection {
                            site,
                            survey,
                            value: y,
                        });
                    }
                    if y == 0 && v > 0 {
                        return Err(Error::VocalizationsWithoutDetection { site, survey, v });
                    }
                }
            }
        }
        if let Some(val) = &validation {
            let Some(a) = &acoustic else {
                return Err(Error::InvalidDesign(
                    "validation block supplied without acoustic block".into(),
                ));
            };
            val.checked.check("validation checked counts", r, j)?;
            val.confirmed.check("validation confirmed counts", r, j)?;
            for site in 0..r {
                for survey in 0..j {
                    let (n, k) = (val.checked[(site, survey)], val.confirmed[(site, survey)]);
                    let v = if a.is_observed(site, survey) {
                        a.v[(site, survey)]
                    } else {
                        0
                    };
                    if k > n || n > v {
                        return Err(Error::ValidationOutOfRange {
                            site,
                            survey,
                            k,
                            n,
                            v,
                        });
                    }
                }
            }
        }
        if let Some(c) = &counts {
            let (i, t) = (design.num_count_sites(), design.count_surveys());
            c.c.check("point counts", i, t)?;
            c.missing.check("point-count missing mask", i, t)?;
        }
        Ok(Self {
            design,
            acoustic,
            validation,
            counts,
            covariate: None,
        })
    }

    /// Attaches a per-global-site abundance covariate.
    pub fn with_covariate(mut self, x: Vec<f64>) -> Result<Self> {
        if x.len() != self.design.num_global_sites() {
            return Err(Error::InvalidCovariate(format!(
                "expected {} values (one per global site), got {}",
                self.design.num_global_sites(),
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariate(format!("non-finite value at site {i}")));
        }
        self.covariate = Some(Arc::new(x));
        Ok(self)
    }

    pub fn design(&self) -> &SurveyDesign {
        &self.design
    }

    pub fn acoustic(&self) -> Option<&AcousticData> {
        self.acoustic.as_ref()
    }

    pub fn validation(&self) -> Option<&ValidationData> {
        self.validation.as_ref()
    }

    pub fn counts(&self) -> Option<&CountData> {
        self.counts.as_ref()
    }

    pub fn covariate(&self) -> Option<&Arc<Vec<f64>>> {
        self.covariate.as_ref()
    }

    /// Checks that every block the variant needs is present.
    pub fn blocks_for(&self, variant: ModelVariant) -> Result<ActiveBlocks> {
        let need = variant.blocks();
        let missing = if need.acoustic && self.acoustic.is_none() {
            Some("acoustic")
        } else if need.validation && self.validation.is_none() {
            Some("validation")
        } else if need.counts && self.counts.is_none() {
            Some("count")
        } else {
            None
        };
        match missing {
            Some(block) => Err(Error::MissingBlock { variant, block }),
            None => Ok(need),
        }
    }

    /// Global sites that enter the likelihood of `variant`, ascending.
    pub fn active_sites(&self, variant: ModelVariant) -> Vec<usize> {
        let blocks = variant.blocks();
        let g = self.design.num_global_sites();
        (0..g)
            .filter(|&s| {
                (blocks.acoustic && self.design.is_acoustic(s))
                    || (blocks.counts && self.design.count_index(s).is_some())
            })
            .collect()
    }

    /// Keeps only the listed count sites (given as global indices). Rows of
    /// the count block follow the order of `globals`.
    pub fn restrict_count_sites(&self, globals: &[usize]) -> Result<Self> {
        let counts = self
            .counts
            .as_ref()
            .ok_or_else(|| Error::InvalidDesign("dataset has no count block".into()))?;
        let mut rows = Vec::with_capacity(globals.len());
        let mut mask = Vec::with_capacity(globals.len());
        for &g in globals {
            let i = self.design.count_index(g).ok_or_else(|| {
                Error::InvalidDesign(format!("global site {g} has no point counts"))
            })?;
            rows.push(counts.c.row(i).to_vec());
            mask.push(counts.missing.row(i).to_vec());
        }
        let design = SurveyDesign::new(
            self.design.num_acoustic_sites(),
            globals.len(),
            self.design.acoustic_surveys(),
            self.design.count_surveys(),
            globals.to_vec(),
        )?;
        let t = self.design.count_surveys();
        let c = Grid::from_rows(rows).unwrap_or_else(|| Grid::filled(0, t, 0));
        let missing = Grid::from_rows(mask).unwrap_or_else(|| Grid::filled(0, t, false));
        let mut out = Dataset::new(
            design,
            self.acoustic.clone(),
            self.validation.clone(),
            Some(CountData { c, missing }),
        )?;
        if let Some(x) = &self.covariate {
            let keep = out.design.num_global_sites();
            out = out.with_covariate(x[..keep].to_vec())?;
        }
        Ok(out)
    }

    /// Same data with the validation block dropped.
    pub fn without_validation(&self) -> Self {
        Self {
            validation: None,
            ..self.clone()
        }
    }
}

/// Builds a dataset and checks it against `variant`.
pub fn validate_dataset(
    design: SurveyDesign,
    acoustic: Option<AcousticData>,
    validation: Option<ValidationData>,
    counts: Option<CountData>,
    variant: ModelVariant,
) -> Result<(Dataset, ActiveBlocks)> {
    let ds = Dataset::new(design, acoustic, validation, counts)?;
    let blocks = ds.blocks_for(variant)?;
    Ok((ds, blocks))
}

/// Latent states and scalar parameters of one MCMC state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterState {
    /// Latent abundance per global site.
    pub abundance_n: Vec<u32>,
    /// Latent true-call counts per acoustic cell (R x J).
    pub true_calls: Grid<u32>,
    pub alpha0: f64,
    pub alpha1: f64,
    pub delta: f64,
    pub omega: f64,
    pub p: f64,
    pub abundance: AbundanceModel,
}

/// Share of clustered calls that are true calls, `delta*N / (delta*N + omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruePositiveRate {
    pub value: f64,
    /// Set when the ratio is 0/0 (no individuals and no false-positive
    /// process); `value` is then 0.
    pub undefined: bool,
}

pub fn true_positive_rate(n: u32, delta: f64, omega: f64) -> TruePositiveRate {
    let signal = delta * f64::from(n);
    let total = signal + omega;
    if total > 0.0 {
        TruePositiveRate {
            value: signal / total,
            undefined: false,
        }
    } else {
        TruePositiveRate {
            value: 0.0,
            undefined: true,
        }
    }
}

/// Site-level detection probability, inverse-logit of `alpha0 + alpha1*N`.
pub fn detection_prob(n: u32, alpha0: f64, alpha1: f64) -> f64 {
    inv_logit(alpha0 + alpha1 * f64::from(n))
}

pub fn inv_logit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn small_design() -> SurveyDesign {
        SurveyDesign::overlapping(2, 2, 2, 2).unwrap()
    }

    fn consistent_blocks() -> (AcousticData, ValidationData, CountData) {
        let y = Grid::from_rows(vec![vec![1, 0], vec![1, 1]]).unwrap();
        let v = Grid::from_rows(vec![vec![5, 0], vec![2, 7]]).unwrap();
        let n = Grid::from_rows(vec![vec![1, 0], vec![0, 2]]).unwrap();
        let k = Grid::from_rows(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let c = Grid::from_rows(vec![vec![2, 1], vec![0, 3]]).unwrap();
        (
            AcousticData::complete(y, v),
            ValidationData {
                checked: n,
                confirmed: k,
            },
            CountData::complete(c),
        )
    }

    #[test]
    fn consistent_dataset_validates_for_every_variant() {
        let (a, val, c) = consistent_blocks();
        for variant in ModelVariant::ALL {
            let (_, blocks) = validate_dataset(
                small_design(),
                Some(a.clone()),
                Some(val.clone()),
                Some(c.clone()),
                variant,
            )
            .unwrap();
            assert_eq!(blocks, variant.blocks());
        }
    }

    #[test]
    fn vocalizations_without_detection_rejected() {
        let (mut a, _, _) = consistent_blocks();
        a.v[(0, 1)] = 3;
        let err = Dataset::new(small_design(), Some(a), None, None).unwrap_err();
        assert!(err.to_string().contains("vocalizations without detection"));
    }

    #[test]
    fn masked_cells_are_not_checked() {
        let (mut a, _, _) = consistent_blocks();
        a.v[(0, 1)] = 3;
        a.missing[(0, 1)] = true;
        assert!(Dataset::new(small_design(), Some(a), None, None).is_ok());
    }

    #[test]
    fn validation_bounds_enforced() {
        let (a, mut val, _) = consistent_blocks();
        val.confirmed[(1, 1)] = 3;
        assert!(matches!(
            Dataset::new(small_design(), Some(a.clone()), Some(val), None),
            Err(Error::ValidationOutOfRange { site: 1, survey: 1, .. })
        ));
        let (_, mut val, _) = consistent_blocks();
        val.checked[(1, 0)] = 3;
        assert!(matches!(
            Dataset::new(small_design(), Some(a), Some(val), None),
            Err(Error::ValidationOutOfRange { site: 1, survey: 0, .. })
        ));
    }

    #[test]
    fn missing_block_for_variant() {
        let (a, _, c) = consistent_blocks();
        let err = validate_dataset(small_design(), Some(a), None, Some(c), ModelVariant::AV).unwrap_err();
        assert_eq!(err.to_string(), "variant AV requires validation block");
    }

    #[test]
    fn dimension_mismatch_reported() {
        let (a, _, _) = consistent_blocks();
        let design = SurveyDesign::overlapping(3, 2, 2, 2).unwrap();
        assert!(matches!(
            Dataset::new(design, Some(a), None, None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn design_rules() {
        assert!(SurveyDesign::new(0, 1, 1, 1, vec![0]).is_err());
        assert!(SurveyDesign::new(2, 2, 1, 1, vec![1, 1]).is_err());
        // global site 2 covered by nobody
        assert!(SurveyDesign::new(2, 1, 1, 1, vec![3]).is_err());
        let disjoint = SurveyDesign::new(2, 2, 1, 1, vec![2, 3]).unwrap();
        assert_eq!(disjoint.num_global_sites(), 4);
        assert_eq!(disjoint.count_index(3), Some(1));
        assert_eq!(disjoint.count_index(0), None);
        let superset = SurveyDesign::new(2, 4, 1, 1, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(superset.num_global_sites(), 4);
    }

    #[test]
    fn design_serde_revalidates() {
        let d = SurveyDesign::new(2, 2, 3, 4, vec![1, 2]).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<SurveyDesign>(&json).unwrap(), d);
        let bad = json.replace("[1,2]", "[1,1]");
        assert!(serde_json::from_str::<SurveyDesign>(&bad).is_err());
    }

    #[test]
    fn restrict_counts_keeps_acoustic_block() {
        let (a, val, c) = consistent_blocks();
        let ds = Dataset::new(small_design(), Some(a), Some(val), Some(c)).unwrap();
        let sub = ds.restrict_count_sites(&[1]).unwrap();
        assert_eq!(sub.design().site_map(), &[1]);
        assert_eq!(sub.counts().unwrap().c.row(0), &[0, 3]);
        assert_eq!(sub.acoustic(), ds.acoustic());
    }

    #[test]
    fn true_positive_rate_examples() {
        assert_abs_diff_eq!(true_positive_rate(1, 4.0, 3.0).value, 4.0 / 7.0, epsilon = 1e-15);
        assert_eq!(true_positive_rate(0, 4.0, 3.0).value, 0.0);
        assert_eq!(true_positive_rate(10, 4.0, 0.0).value, 1.0);
        let degenerate = true_positive_rate(0, 4.0, 0.0);
        assert_eq!(degenerate.value, 0.0);
        assert!(degenerate.undefined);
    }

    #[test]
    fn detection_prob_examples() {
        assert_abs_diff_eq!(detection_prob(0, -2.19, 3.0), 0.10, epsilon = 0.001);
        assert_abs_diff_eq!(detection_prob(1, -2.19, 3.0), 0.69, epsilon = 0.005);
        assert_abs_diff_eq!(detection_prob(1, -2.19, 1.2), 0.27, epsilon = 0.005);
        assert!(detection_prob(0, 800.0, 0.0) <= 1.0);
        assert!(detection_prob(0, -800.0, 0.0) >= 0.0);
    }

    #[test]
    fn abundance_link_degenerates_to_constant() {
        let x = Arc::new(vec![-1.3, 0.0, 2.5]);
        let m = AbundanceModel::LogLinear {
            beta0: 0.7,
            beta1: 0.0,
            covariate: x,
        };
        for i in 0..3 {
            assert_eq!(m.rate(i), 0.7f64.exp());
        }
        assert!(AbundanceModel::Constant { lambda: 0.0 }.validate().is_err());
    }

    proptest! {
        #[test]
        fn detection_prob_monotone(a0 in -10.0f64..10.0, a1 in 0.0f64..5.0) {
            let mut last = 0.0;
            for n in 0..=20 {
                let p = detection_prob(n, a0, a1);
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!(p >= last);
                last = p;
            }
        }

        #[test]
        fn true_positive_rate_monotone(delta in 0.0f64..50.0, omega in 0.0f64..50.0) {
            let mut last = 0.0;
            for n in 0..=20 {
                let tp = true_positive_rate(n, delta, omega).value;
                prop_assert!((0.0..=1.0).contains(&tp));
                prop_assert!(tp >= last);
                last = tp;
            }
        }
    }
}
