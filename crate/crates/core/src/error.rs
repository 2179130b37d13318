use crate::model::Year;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("organization name is empty")]
    EmptyName,

    #[error("identifier is empty")]
    EmptyId,

    #[error("no sector rule matches organization `{0}`")]
    Unclassified(String),

    #[error("rule file line {line}: {message}")]
    Rule { line: u64, message: String },

    #[error("invalid spell for person `{person}`: {message}")]
    InvalidSpell { person: String, message: String },

    #[error("duplicate person id `{0}`")]
    DuplicatePerson(String),

    #[error("organization `{0}` is not part of the corpus")]
    UnknownOrganization(String),

    #[error("person `{0}` is not part of the corpus")]
    UnknownPerson(String),

    #[error("year {year} precedes the career start ({start}) of person `{person}`")]
    BeforeCareerStart { person: String, year: Year, start: Year },

    #[error("person `{person}` is not employed in {year}")]
    Inactive { person: String, year: Year },

    #[error("no persons are active in {0}")]
    NoActivePersons(Year),

    #[error("organization `{org}` has no spells starting at or before {year}")]
    NoRetentionHistory { org: String, year: Year },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("input has zero variance")]
    ZeroVariance,

    #[error("labels contain a single class")]
    SingleClass,

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("cannot build stratified folds: {0}")]
    Folds(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
