//! Binary depth maps: `DMAP` magic, u32 width, u32 height, then
//! `width * height` float32 depths row-major, all little-endian.

use super::IoFormatError;
use crate::depthcloud::DepthMap;
use std::path::Path;

pub const DMAP_MAGIC: &[u8; 4] = b"DMAP";

pub fn depth_map_bytes(map: &DepthMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + map.values().len() * 4);
    out.extend_from_slice(DMAP_MAGIC);
    out.extend_from_slice(&map.width().to_le_bytes());
    out.extend_from_slice(&map.height().to_le_bytes());
    for v in map.values() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn depth_map_from_bytes(bytes: &[u8]) -> Result<DepthMap, IoFormatError> {
    if bytes.len() < 12 {
        return Err(IoFormatError::Truncated);
    }
    if &bytes[0..4] != DMAP_MAGIC {
        return Err(IoFormatError::BadMagic);
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let count = (width as usize) * (height as usize);
    let expected = 12 + count * 4;
    if bytes.len() < expected {
        return Err(IoFormatError::Truncated);
    }
    if bytes.len() > expected {
        return Err(IoFormatError::TrailingData);
    }
    let values = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(DepthMap::new(width, height, values)?)
}

pub fn write_depth_map(path: &Path, map: &DepthMap) -> Result<(), IoFormatError> {
    super::write_atomic(path, &depth_map_bytes(map))
}

pub fn read_depth_map(path: &Path) -> Result<DepthMap, IoFormatError> {
    depth_map_from_bytes(&std::fs::read(path)?)
}
