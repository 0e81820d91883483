//! Atomic artifact writes.

use std::io::Write;
use std::path::Path;

use crate::commands::Artifact;
use crate::CliError;

fn output_error(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{what}: {e}"))
}

/// Write each artifact to a temp file in `dir` and rename it into place.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| output_error(&format!("cannot create {}", dir.display()), e))?;
    for a in artifacts {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| output_error("temp file", e))?;
        tmp.write_all(&a.bytes).map_err(|e| output_error(&a.name, e))?;
        tmp.as_file().sync_all().map_err(|e| output_error(&a.name, e))?;
        tmp.persist(dir.join(&a.name)).map_err(|e| output_error(&a.name, e))?;
    }
    Ok(())
}
