//! Binary PGM (P5) masks.

use crate::geometry::Mask;
use crate::{Error, Result};

fn header_token(bytes: &[u8], pos: &mut usize, origin: &str) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse(format!("{origin}:offset {start}"), "header ends early"));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn parse_pgm(bytes: &[u8], origin: &str) -> Result<Mask> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos, origin)?;
    if magic != "P5" {
        return Err(Error::parse(format!("{origin}:offset 0"), format!("expected P5 magic, got {magic:?}")));
    }
    let mut field = |what: &str| -> Result<usize> {
        let at = pos;
        let t = header_token(bytes, &mut pos, origin)?;
        t.parse()
            .map_err(|_| Error::parse(format!("{origin}:offset {at}"), format!("bad {what} {t:?}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if !(1..=255).contains(&maxval) {
        return Err(Error::parse(origin, format!("maxval {maxval} is not an 8-bit depth")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width.checked_mul(height).ok_or_else(|| Error::parse(origin, "image size overflows"))?;
    let have = bytes.len().saturating_sub(pos);
    if have != need {
        return Err(Error::parse(
            format!("{origin}:offset {pos}"),
            format!("raster has {have} bytes, expected {width}x{height} = {need}"),
        ));
    }
    Mask::new(width, height, bytes[pos..].to_vec())
}

pub fn pgm_bytes(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend_from_slice(&mask.data);
    out
}
