//! The `mipw` workbench: run directories, reports, record export and the
//! annotation service, plus the CLI that drives them.

pub mod cli;
pub mod export;
pub mod records;
pub mod report;
pub mod run;
pub mod serve;

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
