//! Parsing and cleaning of the amazon-meta dump into item-level tables.

mod clean;
mod csv_io;
mod parse;

use thiserror::Error;

pub use clean::{
    aggregate_reviews, clean_items, clean_items_with, clean_records, merge_tables,
    reduce_categories, CategoryRow, CategoryTable, CleanOptions, ItemRow, ItemTable, MergedRow,
    MergedTable, ReviewRow, ReviewTable, SkewField,
};
pub use csv_io::{
    read_merged_csv, write_categories_csv, write_items_csv, write_merged_csv, write_reviews_csv,
};
pub use parse::{parse_meta, ParseWarning, PathSegment, RawRecord, RawRecordSet, ReviewLine};

/// Record counts taken before any cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IngestCounts {
    pub records: usize,
    pub with_categories: usize,
    pub with_reviews: usize,
    pub discontinued: usize,
}

impl IngestCounts {
    pub fn of(raw: &RawRecordSet) -> Self {
        let count = |f: fn(&RawRecord) -> bool| raw.iter().filter(|r| f(r)).count();
        IngestCounts {
            records: raw.len(),
            with_categories: count(|r| !r.category_paths.is_empty()),
            with_reviews: count(|r| !r.reviews.is_empty()),
            discontinued: count(|r| r.discontinued),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record starting at line {line}: missing Id or ASIN")]
    MalformedRecord { line: usize },
    #[error("stream ended in the middle of a record at line {line}")]
    TruncatedStream { line: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
