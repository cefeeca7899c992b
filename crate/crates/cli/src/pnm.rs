//! Minimal binary Netpbm codec: 8-bit P5 graymaps and P6 pixmaps.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use fringe_core::Grid;

use crate::CliError;

/// Quantize `[0, 1]` intensities to `round(255 v)` and write a P5 file.
pub fn write_pgm(path: &Path, grid: &Grid) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", grid.width(), grid.height())?;
    let bytes: Vec<u8> = grid
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)?;
    out.flush()
}

/// Write interleaved RGB bytes as a P6 file.
pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> io::Result<()> {
    assert_eq!(rgb.len(), width * height * 3, "rgb buffer size");
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P6\n{width} {height}\n255\n")?;
    out.write_all(rgb)?;
    out.flush()
}

/// Decoded Netpbm header plus the raw sample bytes that follow it.
#[derive(Debug)]
pub struct Netpbm {
    pub magic: [u8; 2],
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

pub fn parse(bytes: &[u8]) -> Result<Netpbm, String> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'5' | b'6') {
        return Err("not a binary P5/P6 file".into());
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed header number")?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing raster separator".into());
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(format!("only maxval 255 is supported, got {maxval}"));
    }
    let channels = if magic[1] == b'5' { 1 } else { 3 };
    let expected = width * height * channels;
    let samples = bytes[pos..].to_vec();
    if samples.len() != expected {
        return Err(format!(
            "expected {expected} raster bytes, found {}",
            samples.len()
        ));
    }
    Ok(Netpbm {
        magic,
        width,
        height,
        samples,
    })
}

/// Read a P5 graymap as intensities `byte / 255`.
pub fn read_pgm(path: &Path) -> Result<Grid, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let image = parse(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if image.magic != *b"P5" {
        return Err(CliError::Data(format!(
            "{}: expected a P5 graymap",
            path.display()
        )));
    }
    let data = image.samples.iter().map(|&b| b as f64 / 255.0).collect();
    Grid::from_vec(image.width, image.height, data).map_err(|e| CliError::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_grid_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.pgm");
        let g = Grid::from_fn(7, 3, |x, y| ((x * y + x) % 2) as f64);
        write_pgm(&path, &g).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), g);
    }

    #[test]
    fn contone_within_one_level() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let g = Grid::from_fn(5, 4, |x, y| (x as f64 * 0.137 + y as f64 * 0.071) % 1.0);
        write_pgm(&path, &g).unwrap();
        let back = read_pgm(&path).unwrap();
        for (a, b) in g.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255]);
        let img = parse(&bytes).unwrap();
        assert_eq!((img.width, img.height), (2, 1));
        assert_eq!(img.samples, vec![0, 255]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse(b"P2\n1 1\n255\n0").is_err());
        assert!(parse(b"P5\n2 2\n255\n\x00").is_err());
        assert!(parse(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(parse(b"P5\n1").is_err());
    }

    #[test]
    fn pixmap_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ppm");
        write_ppm(&path, 2, 1, &[1, 2, 3, 4, 5, 6]).unwrap();
        let img = parse(&fs::read(&path).unwrap()).unwrap();
        assert_eq!(img.magic, *b"P6");
        assert_eq!(img.samples, vec![1, 2, 3, 4, 5, 6]);
    }
}
