//! PLY point clouds with `x y z` float32 vertex properties, writable as
//! ASCII or binary little-endian. The reader accepts exactly the layout the
//! writer produces (plus comment lines) and validates the vertex count.

use super::IoFormatError;
use crate::geometry::{FrameId, PointCloud};
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

pub fn ply_bytes(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let format_line = match format {
        PlyFormat::Ascii => "format ascii 1.0",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0",
    };
    let mut header = String::new();
    let _ = writeln!(header, "ply");
    let _ = writeln!(header, "{format_line}");
    let _ = writeln!(header, "element vertex {}", cloud.len());
    let _ = writeln!(header, "property float x");
    let _ = writeln!(header, "property float y");
    let _ = writeln!(header, "property float z");
    let _ = writeln!(header, "end_header");
    let mut out = header.into_bytes();
    match format {
        PlyFormat::Ascii => {
            let mut body = String::new();
            for p in cloud.points() {
                let _ = writeln!(body, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
            }
            out.extend_from_slice(body.as_bytes());
        }
        PlyFormat::BinaryLittleEndian => {
            for p in cloud.points() {
                out.extend_from_slice(&(p.x as f32).to_le_bytes());
                out.extend_from_slice(&(p.y as f32).to_le_bytes());
                out.extend_from_slice(&(p.z as f32).to_le_bytes());
            }
        }
    }
    out
}

struct Header {
    format: PlyFormat,
    count: usize,
    body_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, IoFormatError> {
    let mut format = None;
    let mut count = None;
    let mut properties: Vec<String> = Vec::new();
    let mut offset = 0;
    let mut first = true;
    while offset < bytes.len() {
        let end = bytes[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| offset + p)
            .ok_or(IoFormatError::Truncated)?;
        let line = std::str::from_utf8(&bytes[offset..end])
            .map_err(|_| IoFormatError::BadHeader("non-ascii header line".into()))?
            .trim_end_matches('\r');
        offset = end + 1;
        if first {
            if line != "ply" {
                return Err(IoFormatError::BadMagic);
            }
            first = false;
            continue;
        }
        if line == "end_header" {
            let format = format.ok_or_else(|| IoFormatError::BadHeader("missing format".into()))?;
            let count = count.ok_or_else(|| IoFormatError::BadHeader("missing element".into()))?;
            if properties != ["x", "y", "z"] {
                return Err(IoFormatError::BadHeader(format!(
                    "expected float x y z properties, got {properties:?}"
                )));
            }
            return Ok(Header { format, count, body_start: offset });
        }
        if let Some(rest) = line.strip_prefix("comment") {
            let _ = rest;
            continue;
        }
        if let Some(rest) = line.strip_prefix("format ") {
            format = Some(match rest {
                "ascii 1.0" => PlyFormat::Ascii,
                "binary_little_endian 1.0" => PlyFormat::BinaryLittleEndian,
                other => {
                    return Err(IoFormatError::BadHeader(format!("unsupported format {other}")))
                }
            });
            continue;
        }
        if let Some(rest) = line.strip_prefix("element ") {
            let mut parts = rest.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some("vertex"), Some(n), None) => {
                    count = Some(n.parse::<usize>().map_err(|_| {
                        IoFormatError::BadHeader(format!("bad vertex count {n}"))
                    })?);
                }
                _ => {
                    return Err(IoFormatError::BadHeader(format!("unsupported element {rest}")))
                }
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("property ") {
            match rest.split_whitespace().collect::<Vec<_>>()[..] {
                ["float", name] => properties.push(name.to_string()),
                _ => {
                    return Err(IoFormatError::BadHeader(format!("unsupported property {rest}")))
                }
            }
            continue;
        }
        return Err(IoFormatError::BadHeader(format!("unrecognized line: {line}")));
    }
    Err(IoFormatError::Truncated)
}

pub fn ply_from_bytes(bytes: &[u8], frame: FrameId) -> Result<PointCloud, IoFormatError> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_start..];
    let mut points = Vec::with_capacity(header.count);
    match header.format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| IoFormatError::BadHeader("non-ascii body".into()))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                if points.len() == header.count {
                    return Err(IoFormatError::TrailingData);
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 3 {
                    return Err(IoFormatError::BadLine {
                        line: i + 1,
                        msg: format!("expected 3 coordinates, got {}", fields.len()),
                    });
                }
                let mut coords = [0.0f64; 3];
                for (slot, field) in coords.iter_mut().zip(&fields) {
                    *slot = field.parse::<f32>().map_err(|e| IoFormatError::BadLine {
                        line: i + 1,
                        msg: e.to_string(),
                    })? as f64;
                }
                points.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            if points.len() < header.count {
                return Err(IoFormatError::Truncated);
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let expected = header.count * 12;
            if body.len() < expected {
                return Err(IoFormatError::Truncated);
            }
            if body.len() > expected {
                return Err(IoFormatError::TrailingData);
            }
            for chunk in body.chunks_exact(12) {
                let x = f32::from_le_bytes(chunk[0..4].try_into().unwrap()) as f64;
                let y = f32::from_le_bytes(chunk[4..8].try_into().unwrap()) as f64;
                let z = f32::from_le_bytes(chunk[8..12].try_into().unwrap()) as f64;
                points.push(Vector3::new(x, y, z));
            }
        }
    }
    Ok(PointCloud::new(points, frame)?)
}

pub fn write_ply(path: &Path, cloud: &PointCloud, format: PlyFormat) -> Result<(), IoFormatError> {
    super::write_atomic(path, &ply_bytes(cloud, format))
}

pub fn read_ply(path: &Path, frame: FrameId) -> Result<PointCloud, IoFormatError> {
    ply_from_bytes(&std::fs::read(path)?, frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PointCloud {
        PointCloud::new(
            vec![
                Vector3::new(1.0, -2.5, 3.25),
                Vector3::new(0.0, 0.125, -7.5),
                Vector3::new(10.0, 20.0, 30.0),
            ],
            FrameId::Camera(4),
        )
        .unwrap()
    }

    #[test]
    fn ascii_output_is_the_documented_layout() {
        let text = String::from_utf8(ply_bytes(&sample(), PlyFormat::Ascii)).unwrap();
        let expected = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 -2.5 3.25\n0 0.125 -7.5\n10 20 30\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn ascii_round_trip() {
        let cloud = sample();
        let back = ply_from_bytes(&ply_bytes(&cloud, PlyFormat::Ascii), cloud.frame()).unwrap();
        assert_eq!(back.points(), cloud.points());
        assert_eq!(back.frame(), FrameId::Camera(4));
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let cloud = sample();
        let bytes = ply_bytes(&cloud, PlyFormat::BinaryLittleEndian);
        let header_len = bytes.len() - 3 * 12;
        assert!(bytes.starts_with(b"ply\nformat binary_little_endian 1.0\n"));
        assert_eq!(bytes[header_len - 11..header_len], *b"end_header\n");
        assert_eq!(bytes[header_len..header_len + 4], 1.0f32.to_le_bytes());
        let back = ply_from_bytes(&bytes, cloud.frame()).unwrap();
        assert_eq!(back.points(), cloud.points());
    }

    #[test]
    fn empty_cloud_round_trips() {
        let cloud = PointCloud::empty(FrameId::World);
        for format in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            let back = ply_from_bytes(&ply_bytes(&cloud, format), FrameId::World).unwrap();
            assert!(back.is_empty());
        }
    }

    #[test]
    fn comments_are_skipped() {
        let text = "ply\ncomment made by hand\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n";
        let cloud = ply_from_bytes(text.as_bytes(), FrameId::World).unwrap();
        assert_eq!(cloud.points(), &[Vector3::new(1.0, 2.0, 3.0)]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.ply");
        write_ply(&path, &sample(), PlyFormat::BinaryLittleEndian).unwrap();
        let back = read_ply(&path, FrameId::Camera(4)).unwrap();
        assert_eq!(back.points(), sample().points());
    }

    #[test]
    fn rejects_malformed_input() {
        let cloud = sample();
        let ascii = ply_bytes(&cloud, PlyFormat::Ascii);
        let binary = ply_bytes(&cloud, PlyFormat::BinaryLittleEndian);

        assert!(matches!(
            ply_from_bytes(b"psy\nformat ascii 1.0\n", FrameId::World),
            Err(IoFormatError::BadMagic)
        ));
        assert!(matches!(
            ply_from_bytes(&ascii[..ascii.len() - 9], FrameId::World),
            Err(IoFormatError::Truncated)
        ));
        let mut extra = ascii.clone();
        extra.extend_from_slice(b"4 5 6\n");
        assert!(matches!(ply_from_bytes(&extra, FrameId::World), Err(IoFormatError::TrailingData)));
        assert!(matches!(
            ply_from_bytes(&binary[..binary.len() - 1], FrameId::World),
            Err(IoFormatError::Truncated)
        ));
        let mut padded = binary.clone();
        padded.push(0);
        assert!(matches!(ply_from_bytes(&padded, FrameId::World), Err(IoFormatError::TrailingData)));

        let doubles = "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\nend_header\n1 2 3\n";
        assert!(matches!(
            ply_from_bytes(doubles.as_bytes(), FrameId::World),
            Err(IoFormatError::BadHeader(_))
        ));
        let no_header = b"ply\nformat ascii 1.0\nelement vertex 1\n";
        assert!(matches!(
            ply_from_bytes(no_header, FrameId::World),
            Err(IoFormatError::Truncated)
        ));
        let bad_coord = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 two 3\n";
        assert!(matches!(
            ply_from_bytes(bad_coord.as_bytes(), FrameId::World),
            Err(IoFormatError::BadLine { .. })
        ));
    }
}
