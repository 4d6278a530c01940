//! Minimal binary PGM (P5, maxval 255) reader and writer.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit grayscale image, pixels row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

fn bad(path: &Path, what: &str) -> Error {
    Error::Ingestion(format!("{}: {what}", path.display()))
}

/// Read a binary P5 PGM file with maxval 255. `#` comments are allowed
/// anywhere in the header.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| bad(path, &format!("cannot read file: {e}")))?;
    let mut pos = 0usize;

    fn next_token(bytes: &[u8], pos: &mut usize) -> Option<(usize, usize)> {
        let mut i = *pos;
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            break;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            None
        } else {
            *pos = i;
            Some((start, i))
        }
    }

    let read_token = |pos: &mut usize| -> Result<String> {
        let (s, e) = next_token(&bytes, pos).ok_or_else(|| bad(path, "truncated header"))?;
        Ok(String::from_utf8_lossy(&bytes[s..e]).into_owned())
    };

    let magic = read_token(&mut pos)?;
    if magic != "P5" {
        return Err(bad(path, &format!("expected P5 magic, found {magic:?}")));
    }
    let width: usize = read_token(&mut pos)?
        .parse()
        .map_err(|_| bad(path, "invalid width"))?;
    let height: usize = read_token(&mut pos)?
        .parse()
        .map_err(|_| bad(path, "invalid height"))?;
    let maxval: usize = read_token(&mut pos)?
        .parse()
        .map_err(|_| bad(path, "invalid maxval"))?;
    if maxval != 255 {
        return Err(bad(path, &format!("unsupported maxval {maxval}, only 255 is accepted")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let expected = width * height;
    if bytes.len() < pos + expected {
        return Err(bad(
            path,
            &format!("raster truncated: expected {expected} bytes, found {}", bytes.len() - pos),
        ));
    }
    Ok(GrayImage { width, height, pixels: bytes[pos..pos + expected].to_vec() })
}

/// Write a binary P5 PGM file with maxval 255.
pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    if image.pixels.len() != image.width * image.height {
        return Err(Error::InvalidInput(format!(
            "pixel buffer has {} bytes for a {}x{} image",
            image.pixels.len(),
            image.width,
            image.height
        )));
    }
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{} {}\n255\n", image.width, image.height)?;
    f.write_all(&image.pixels)?;
    Ok(())
}

/// Nearest-neighbor resampling; source index floor((i + 0.5) · src / dst).
pub fn resample_nearest(image: &GrayImage, width: usize, height: usize) -> GrayImage {
    if width == image.width && height == image.height {
        return image.clone();
    }
    let mut pixels = Vec::with_capacity(width * height);
    for i in 0..height {
        let si = (((i as f64 + 0.5) * image.height as f64 / height as f64).floor() as usize)
            .min(image.height - 1);
        for j in 0..width {
            let sj = (((j as f64 + 0.5) * image.width as f64 / width as f64).floor() as usize)
                .min(image.width - 1);
            pixels.push(image.pixels[si * image.width + sj]);
        }
    }
    GrayImage { width, height, pixels }
}
