//! File formats: binary depth maps, PLY point clouds, TUM-style pose files.
//!
//! Everything round-trips: each writer has a reader that validates magic
//! bytes, dimensions and payload sizes before constructing domain types.
//! Writers go through [`write_atomic`] so a crash never leaves a partial
//! file at the target path.

pub mod dmap;
pub mod ply;
pub mod pose;

pub use dmap::{depth_map_bytes, depth_map_from_bytes, read_depth_map, write_depth_map};
pub use ply::{ply_bytes, ply_from_bytes, read_ply, write_ply, PlyFormat};
pub use pose::{parse_tum, read_tum, tum_string, write_tum};

use crate::depthcloud::DepthCloudError;
use crate::geometry::GeometryError;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("file ends before the declared payload")]
    Truncated,
    #[error("unexpected data after the declared payload")]
    TrailingData,
    #[error("line {line}: {msg}")]
    BadLine { line: usize, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Raster(#[from] DepthCloudError),
}

/// Write `bytes` to a sibling temp file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoFormatError> {
    let name = path.file_name().ok_or_else(|| {
        IoFormatError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("not a file path: {}", path.display()),
        ))
    })?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out.bin");
        write_atomic(&target, b"first").unwrap();
        write_atomic(&target, b"second").unwrap();
        assert_eq!(std::fs::read(&target).unwrap(), b"second");
        let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
    }

    #[test]
    fn atomic_write_rejects_bare_root() {
        assert!(write_atomic(Path::new("/"), b"x").is_err());
    }
}
