//! RPT manifest: a JSON array naming one CSV per reference performance test.
//!
//! ```json
//! [{"path": "rpt00.csv", "rpt_index": 0, "cycle_at_rpt": 0, "direction": "discharge"}]
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::fs::File;
use std::path::{Path, PathBuf};

use kneescope::dataset::{parse_rpt_csv, Direction, RptRecord};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub rpt_index: u32,
    pub cycle_at_rpt: f64,
    pub direction: Direction,
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::user("manifest", format!("cannot read manifest {}: {e}", path.display())))?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text)
        .map_err(|e| CliError::user("manifest", format!("invalid manifest {}: {e}", path.display())))?;
    if entries.is_empty() {
        return Err(CliError::user(
            "manifest",
            format!("manifest {} lists no RPT files", path.display()),
        ));
    }
    Ok(entries)
}

/// Reads every RPT named in the manifest. Errors name the offending entry.
pub fn load_rpts(path: &Path) -> Result<Vec<RptRecord>, CliError> {
    let base = path.parent().unwrap_or(Path::new("."));
    load_manifest(path)?
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let label = format!("manifest entry {i} ({})", entry.path.display());
            let file = base.join(&entry.path);
            let reader = File::open(&file)
                .map_err(|e| CliError::user("manifest", format!("{label}: cannot open {}: {e}", file.display())))?;
            parse_rpt_csv(reader, entry.rpt_index, entry.cycle_at_rpt, entry.direction)
                .map_err(|e| CliError::from(e).context(&label))
        })
        .collect()
}
