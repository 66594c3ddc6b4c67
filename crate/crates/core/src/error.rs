use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid survey design: {0}")]
    InvalidDesign(String),

    #[error("dimension mismatch in {block}: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch {
        block: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("detection flag must be 0 or 1 at site {site}, survey {survey} (got {value})")]
    InvalidDetection { site: usize, survey: usize, value: u8 },

    #[error("vocalizations without detection at site {site}, survey {survey} (v = {v})")]
    VocalizationsWithoutDetection { site: usize, survey: usize, v: u32 },

    #[error("validation counts out of range at site {site}, survey {survey}: need k <= n <= v, got k = {k}, n = {n}, v = {v}")]
    ValidationOutOfRange {
        site: usize,
        survey: usize,
        k: u32,
        n: u32,
        v: u32,
    },

    #[error("variant {variant} requires {block} block")]
    MissingBlock {
        variant: crate::model::ModelVariant,
        block: &'static str,
    },

    #[error("invalid covariate: {0}")]
    InvalidCovariate(String),

    #[error("invalid abundance model: {0}")]
    InvalidAbundance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("initialization failed after {attempts} attempts; last violated component: {component}")]
    Initialization { attempts: usize, component: String },

    #[error("empty support for latent true-call count at site {site}, survey {survey}")]
    EmptySupport { site: usize, survey: usize },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{file}, line {line}, field `{field}`: {message}")]
    Parse {
        file: String,
        line: usize,
        field: String,
        message: String,
    },
}
