//! Run directory layout.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde_json::json;

use super::RunResult;
use crate::error::Result;
use crate::metrics::write_rounds_csv;

/// Files every run directory holds (energy_events.csv only when recorded).
pub const RUN_FILES: [&str; 4] = ["config.snapshot", "rounds.csv", "selections.json", "summary.json"];

pub fn write_run_dir(result: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.snapshot"), result.config.to_toml_string())?;
    write_rounds_csv(&result.rounds, BufWriter::new(File::create(dir.join("rounds.csv"))?))?;
    let selections = json!({
        "selections": result.selections,
        "attack_events": result.attack_events,
    });
    fs::write(dir.join("selections.json"), serde_json::to_string_pretty(&selections)?)?;
    if result.ledger.events.is_some() {
        result.ledger.write_events_csv(BufWriter::new(File::create(dir.join("energy_events.csv"))?))?;
    }
    let summary = json!({
        "scheme": result.config.scheme,
        "seed": result.seed,
        "summary": result.summary,
        "failures": result.failures,
    });
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
