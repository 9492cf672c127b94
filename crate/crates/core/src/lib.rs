pub mod ensemble;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod par;
pub mod probes;
pub mod response_kernel;
pub mod spectrum;

pub use error::{Error, Result};

use std::io::Write;
use std::path::Path;

/// Write `bytes` to a temporary file next to `path` and rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::invalid("output", format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
