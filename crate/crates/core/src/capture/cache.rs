use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{CaptureError, ErrorContext};

pub const CACHE_FILE_NAME: &str = "last_error.json";

/// `$SIDEKICK_CACHE_DIR`, or `~/.sidekick` when unset.
pub fn default_cache_dir() -> Result<PathBuf, CaptureError> {
    if let Some(dir) = std::env::var_os("SIDEKICK_CACHE_DIR").filter(|d| !d.is_empty()) {
        return Ok(PathBuf::from(dir));
    }
    std::env::var_os("HOME")
        .map(|home| PathBuf::from(home).join(".sidekick"))
        .ok_or_else(|| CaptureError::Configuration("neither SIDEKICK_CACHE_DIR nor HOME is set".into()))
}

/// Writes `ctx` as the single "last error", replacing whatever was there.
///
/// The file is written to a temporary sibling and renamed into place so a
/// concurrent reader never observes a partial document.
pub fn cache_context(ctx: &ErrorContext, cache_dir: &Path) -> Result<PathBuf, CaptureError> {
    ctx.validate()?;
    fs::create_dir_all(cache_dir)?;
    let target = cache_dir.join(CACHE_FILE_NAME);
    let mut tmp = tempfile::NamedTempFile::new_in(cache_dir)?;
    serde_json::to_writer_pretty(&mut tmp, ctx)?;
    tmp.write_all(b"\n")?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).map_err(|e| CaptureError::Io(e.error))?;
    Ok(target)
}

/// Reads the cached context, `Ok(None)` when nothing has been cached yet.
pub fn load_context(cache_dir: &Path) -> Result<Option<ErrorContext>, CaptureError> {
    let path = cache_dir.join(CACHE_FILE_NAME);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let ctx: ErrorContext = serde_json::from_slice(&bytes)?;
    ctx.validate()?;
    Ok(Some(ctx))
}
