//! Hourly load/weather data: ingestion, feature selection, scaling,
//! windowing and chronological splitting.
//!
//! Everything produced here is immutable once built and can be shared across
//! concurrent training runs.

mod features;
mod records;
mod scaler;
mod synthetic;
mod window;

use thiserror::Error;

pub use features::{select_features, Column, FeatureSet, Series, FEATURE_COUNT};
pub use records::{load_csv, read_csv, write_csv, LoadedCsv, RawRecord, Rejection, CSV_COLUMNS};
pub use scaler::{fit_scaler, ScalerParams, TargetScale};
pub use synthetic::{synthesize_load, SyntheticSpec};
pub use window::{
    chronological_split, make_windows, prepare_dataset, window_starts, PreparedData, Split,
    SplitRatios, WindowedDataset, HORIZON, INPUT_LEN,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("timestamps are not strictly increasing at lines {}", fmt_lines(.lines))]
    NonMonotonic { lines: Vec<u64> },
    #[error("no usable rows after parsing ({rejected} rejected)")]
    Empty { rejected: usize },
    #[error("series of {found} hours is too short, need at least {required}")]
    TooShort { required: usize, found: usize },
    #[error("scaler must be fitted on the training split, not {0}")]
    Leakage(Split),
    #[error("invalid data configuration: {0}")]
    Config(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
}

fn fmt_lines(lines: &[u64]) -> String {
    let shown: Vec<String> = lines.iter().take(20).map(|l| l.to_string()).collect();
    if lines.len() > shown.len() {
        format!(
            "{} (and {} more)",
            shown.join(", "),
            lines.len() - shown.len()
        )
    } else {
        shown.join(", ")
    }
}
