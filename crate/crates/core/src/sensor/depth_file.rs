//! Binary depth-frame files for the external-renderer ingestion path.
//!
//! Layout: a 16-byte header — magic `MDPT`, u32 width, u32 height,
//! u32 reserved (zero), all little-endian — followed by `width * height`
//! little-endian f32 z-depths in row-major order. No return is encoded as
//! IEEE positive infinity.

use std::io::{Read, Write};
use std::path::Path;

use crate::scene::DepthImage;
use crate::{Error, Result};

pub const DEPTH_MAGIC: [u8; 4] = *b"MDPT";

pub fn write_depth_file(path: &Path, img: &DepthImage) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + img.data.len() * 4);
    buf.extend_from_slice(&DEPTH_MAGIC);
    buf.extend_from_slice(&img.width.to_le_bytes());
    buf.extend_from_slice(&img.height.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    for d in &img.data {
        buf.extend_from_slice(&(*d as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_depth_file(path: &Path) -> Result<DepthImage> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; 16];
    file.read_exact(&mut header).map_err(|_| Error::Malformed {
        path: path.to_path_buf(),
        message: "file shorter than the 16-byte header".into(),
    })?;
    if header[0..4] != DEPTH_MAGIC {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            message: "bad magic, expected MDPT".into(),
        });
    }
    let width = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let expected = width as usize * height as usize;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    if payload.len() != expected * 4 {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            message: format!(
                "expected {} depth samples ({} bytes), found {} bytes",
                expected,
                expected * 4,
                payload.len()
            ),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(DepthImage {
        width,
        height,
        data,
    })
}
