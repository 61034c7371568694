//! Record export: latest record per key as TSV and JSON, plus conflicts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use mipw_core::{consensus, Conflict, QualitativeRecord};

use crate::records::{latest_per_key, load_log};
use crate::run::RECORD_LOG;

pub const TSV_HEADER: [&str; 9] = [
    "sentence_id",
    "model_id",
    "annotator_id",
    "lj_identified",
    "lj_basic_correct",
    "additional",
    "additional_metaphorical",
    "additional_basic_correct",
    "note",
];

#[derive(Debug)]
pub struct ExportSummary {
    pub records: Vec<QualitativeRecord>,
    pub conflicts: Vec<Conflict>,
    pub torn_tail: bool,
    pub files: Vec<PathBuf>,
}

pub fn records_tsv(records: &[QualitativeRecord]) -> Result<Vec<u8>> {
    let opt = |b: Option<bool>| b.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
    w.write_record(TSV_HEADER)?;
    for r in records {
        w.write_record([
            r.sentence_id.clone(),
            r.model_id.clone(),
            r.annotator_id.clone(),
            r.lj_identified.to_string(),
            r.lj_basic_correct.to_string(),
            r.additional.to_string(),
            opt(r.additional_metaphorical),
            opt(r.additional_basic_correct),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// Reads the run's record log (read-only; a torn tail is ignored) and writes
/// records.tsv, records.json and conflicts.json into `out`.
pub fn export_records(run_dir: &Path, out: &Path) -> Result<ExportSummary> {
    let log = load_log(&run_dir.join(RECORD_LOG))?;
    if let Some(t) = log.torn_tail {
        log::warn!("ignoring incomplete final log entry ({} bytes)", t.len);
    }
    let records = latest_per_key(&log.entries);
    let conflicts = consensus(&records).conflicts;
    fs::create_dir_all(out)?;
    let files = vec![out.join("records.tsv"), out.join("records.json"), out.join("conflicts.json")];
    fs::write(&files[0], records_tsv(&records)?)?;
    fs::write(&files[1], serde_json::to_vec_pretty(&records)?)?;
    fs::write(&files[2], serde_json::to_vec_pretty(&conflicts)?)?;
    Ok(ExportSummary {
        records,
        conflicts,
        torn_tail: log.torn_tail.is_some(),
        files,
    })
}
