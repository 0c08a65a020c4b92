use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),

    #[error("invalid element: {0}")]
    InvalidElement(String),

    #[error("{what}: size {size} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("no sequencing exists for the given set")]
    NotSequenceable,

    /// A lemma's conclusion failed although its preconditions were checked.
    /// Only an implementation bug can raise this.
    #[error("lemma violated: {0}")]
    LemmaViolation(String),

    #[error("no suitable candidate found: {0}")]
    NoneFound(String),

    #[error("scan over {0} multipliers exceeds the configured budget")]
    ScanBudgetExceeded(u64),

    #[error("rectification failed: {0}")]
    RectificationFailure(String),

    #[error("decomposition failed at stage `{stage}`: {detail}")]
    DecompositionFailure { stage: &'static str, detail: String },

    #[error("element outside the rectification interval: {0}")]
    IntervalViolation(String),

    #[error("ordering failure: {0}")]
    OrderingFailure(String),

    #[error("{what}: retries exhausted after {retries} attempts")]
    RetriesExhausted { what: &'static str, retries: usize },

    #[error("scan budget exceeded after {checked} subsets")]
    BudgetExceeded {
        checked: u64,
        partial: Box<crate::oracle::ScanReport>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
