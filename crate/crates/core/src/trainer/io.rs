use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{EpochStats, TrainError};

pub const HISTORY_HEADER: &str =
    "epoch,train_loss,train_acc,train_auc,train_ap,val_loss,val_acc,val_auc,val_ap,seconds";

pub fn write_history_csv(path: &Path, history: &[EpochStats]) -> Result<(), TrainError> {
    let to_err = |e: csv::Error| TrainError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    if history.is_empty() {
        w.write_record(HISTORY_HEADER.split(',')).map_err(to_err)?;
    }
    for row in history {
        w.serialize(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| TrainError::io(path, e))
}

/// Appends `value` as one JSON line.
pub fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> Result<(), TrainError> {
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| TrainError::io(path, e))?;
    let line = serde_json::to_string(value).map_err(|e| TrainError::io(path, e.into()))?;
    writeln!(f, "{line}").map_err(|e| TrainError::io(path, e))
}
