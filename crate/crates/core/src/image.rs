//! Image input: binary netpbm (P5 grayscale, P6 color) and grayscale conversion.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::Grid;

const LUMA: [f32; 3] = [0.299, 0.587, 0.114];

/// Converts a 1- or 3-channel grid to a single luma channel (BT.601 weights).
pub fn to_grayscale(image: &Grid) -> Result<Grid> {
    match image.channels() {
        1 => Ok(image.clone()),
        3 => Grid::from_fn(image.width(), image.height(), 1, |x, y, _| {
            let p = image.pixel(x, y);
            LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2]
        }),
        c => Err(Error::InvalidChannels(c)),
    }
}

/// Decoded netpbm raster with samples kept at their stored precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pnm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub maxval: u16,
    /// Samples in file order: row by row, channel innermost.
    pub samples: Vec<u16>,
}

impl Pnm {
    /// Maps 8-bit samples to `[0, 1]`.
    pub fn to_unit_grid(&self) -> Result<Grid> {
        if self.maxval > 255 {
            return Err(Error::Format(format!("expected an 8-bit image, maxval is {}", self.maxval)));
        }
        Grid::from_fn(self.width, self.height, self.channels, |x, y, c| {
            f32::from(self.samples[(y * self.width + x) * self.channels + c]) / 255.0
        })
    }
}

fn read_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Format("unexpected end of header".into()));
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut comment = Vec::new();
                r.read_until(b'\n', &mut comment)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    return Ok(token);
                }
            }
            b => token.push(b as char),
        }
    }
}

fn read_number<R: BufRead>(r: &mut R, what: &str) -> Result<usize> {
    let t = read_token(r)?;
    t.parse().map_err(|_| Error::Format(format!("bad {what} {t:?}")))
}

/// Reads a binary P5/P6 image; 16-bit samples are big-endian.
pub fn read_pnm<R: BufRead>(mut r: R) -> Result<Pnm> {
    let magic = read_token(&mut r)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        m => return Err(Error::Format(format!("unsupported netpbm magic {m:?}"))),
    };
    let width = read_number(&mut r, "width")?;
    let height = read_number(&mut r, "height")?;
    let maxval = read_number(&mut r, "maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("bad header {width}x{height} maxval {maxval}")));
    }
    let n = width * height * channels;
    let samples = if maxval < 256 {
        let mut buf = vec![0u8; n];
        r.read_exact(&mut buf).map_err(|_| Error::Format("truncated pixel data".into()))?;
        buf.into_iter().map(u16::from).collect()
    } else {
        let mut buf = vec![0u8; 2 * n];
        r.read_exact(&mut buf).map_err(|_| Error::Format("truncated pixel data".into()))?;
        buf.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect()
    };
    Ok(Pnm { width, height, channels, maxval: maxval as u16, samples })
}

pub fn write_pnm<W: Write>(mut w: W, pnm: &Pnm) -> Result<()> {
    let magic = match pnm.channels {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::InvalidChannels(c)),
    };
    write!(w, "{magic}\n{} {}\n{}\n", pnm.width, pnm.height, pnm.maxval)?;
    if pnm.maxval < 256 {
        let bytes: Vec<u8> = pnm.samples.iter().map(|&s| s as u8).collect();
        w.write_all(&bytes)?;
    } else {
        let bytes: Vec<u8> = pnm.samples.iter().flat_map(|s| s.to_be_bytes()).collect();
        w.write_all(&bytes)?;
    }
    Ok(())
}

/// Reads an 8-bit PGM/PPM into a `[0, 1]` grid.
pub fn read_image<R: BufRead>(r: R) -> Result<Grid> {
    read_pnm(r)?.to_unit_grid()
}

/// Writes a grid with values in `[0, 1]` as an 8-bit PGM/PPM.
pub fn write_image<W: Write>(w: W, grid: &Grid) -> Result<()> {
    let (width, height, channels) = (grid.width(), grid.height(), grid.channels());
    let mut samples = Vec::with_capacity(width * height * channels);
    for y in 0..height {
        for x in 0..width {
            for c in 0..channels {
                samples.push((grid.get(x, y, c).clamp(0.0, 1.0) * 255.0).round() as u16);
            }
        }
    }
    write_pnm(w, &Pnm { width, height, channels, maxval: 255, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(r: f32, g: f32, b: f32) -> Grid {
        Grid::new(1, 1, 3, vec![r, g, b]).unwrap()
    }

    #[test]
    fn grayscale_examples() {
        assert_eq!(to_grayscale(&rgb(1.0, 1.0, 1.0)).unwrap().get(0, 0, 0), 1.0);
        assert_eq!(to_grayscale(&rgb(0.0, 0.0, 0.0)).unwrap().get(0, 0, 0), 0.0);
        assert!((to_grayscale(&rgb(1.0, 0.0, 0.0)).unwrap().get(0, 0, 0) - 0.299).abs() < 1e-7);
        let gray = Grid::new(2, 1, 1, vec![0.25, 0.5]).unwrap();
        assert_eq!(to_grayscale(&gray).unwrap(), gray);
        let two = Grid::zeros(1, 1, 2);
        assert!(matches!(to_grayscale(&two), Err(Error::InvalidChannels(2))));
    }

    #[test]
    fn grayscale_stays_in_unit_range() {
        for i in 0..=10 {
            for j in 0..=10 {
                let v = to_grayscale(&rgb(i as f32 / 10.0, j as f32 / 10.0, 1.0)).unwrap().get(0, 0, 0);
                assert!((0.0..=1.0).contains(&v), "{v}");
            }
        }
    }

    #[test]
    fn reads_pgm_with_comment() {
        let mut bytes = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 51, 255, 102, 153, 204]);
        let g = read_image(&bytes[..]).unwrap();
        assert_eq!(g.dims(), [3, 2, 1]);
        assert_eq!(g.get(1, 0, 0), 0.2);
        assert_eq!(g.get(2, 0, 0), 1.0);
        assert_eq!(g.get(0, 1, 0), 0.4);
    }

    #[test]
    fn reads_ppm_channels() {
        let mut bytes = b"P6 2 1 255 ".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
        let g = read_image(&bytes[..]).unwrap();
        assert_eq!(g.pixel(0, 0), &[1.0, 0.0, 0.0]);
        assert_eq!(g.pixel(1, 0), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let pnm = Pnm { width: 2, height: 1, channels: 1, maxval: 65535, samples: vec![0x0102, 0xfffe] };
        let mut out = Vec::new();
        write_pnm(&mut out, &pnm).unwrap();
        assert_eq!(&out[out.len() - 4..], &[0x01, 0x02, 0xff, 0xfe]);
        assert_eq!(read_pnm(&out[..]).unwrap(), pnm);
    }

    #[test]
    fn rejects_other_formats() {
        assert!(read_image(&b"P2\n1 1\n255\n0"[..]).is_err());
        assert!(read_image(&b"P5\n2 2\n255\n\x00"[..]).is_err());
    }
}
