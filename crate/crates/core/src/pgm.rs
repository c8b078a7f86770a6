//! Minimal PGM (portable graymap) reader and writer, ASCII `P2` and binary
//! `P5`, 8-bit only. Hand-rolled so the exported bytes are fully under our
//! control and round-trip exactly.
//!
//! Rasters use image convention: index `(col, row)` with row 0 at the top.
//! Conversions to world coordinates flip the y axis; see [`crate::prior`].

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit grayscale image, row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Gray {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Gray {
    pub fn new(width: usize, height: usize, fill: u8) -> Gray {
        Gray {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, v: u8) {
        self.pixels[row * self.width + col] = v;
    }
}

/// Parses a P2 or P5 PGM. Maxval must be 1..=255; values are scaled to
/// 0..=255 when maxval is not 255 so thresholds behave uniformly.
pub fn parse_pgm(data: &[u8]) -> Result<Gray> {
    let mut toks = Tokens::new(data);
    let magic = toks.token()?;
    if magic != b"P2" && magic != b"P5" {
        return Err(Error::Parse {
            line: 1,
            message: format!("not a P2/P5 PGM (magic {:?})", String::from_utf8_lossy(&magic)),
        });
    }
    let width: usize = toks.number()?;
    let height: usize = toks.number()?;
    let maxval: usize = toks.number()?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 255 {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported PGM geometry {width}x{height} maxval {maxval}"),
        });
    }
    let n = width * height;
    let mut pixels = Vec::with_capacity(n);
    if magic == b"P5" {
        // Exactly one whitespace byte separates the header from the raster.
        let start = toks.pos;
        let raster = &data[start..];
        if raster.len() < n {
            return Err(Error::Parse {
                line: 1,
                message: format!("raster truncated: {} of {} bytes", raster.len(), n),
            });
        }
        pixels.extend_from_slice(&raster[..n]);
    } else {
        for _ in 0..n {
            let v: usize = toks.number()?;
            if v > maxval {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            pixels.push(v as u8);
        }
    }
    if maxval != 255 {
        for p in &mut pixels {
            *p = ((*p as usize * 255) / maxval) as u8;
        }
    }
    Ok(Gray {
        width,
        height,
        pixels,
    })
}

pub fn read_pgm(path: &Path) -> Result<Gray> {
    let data = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_pgm(&data)
}

/// Writes a binary P5 PGM with maxval 255.
pub fn write_pgm(path: &Path, img: &Gray) -> Result<()> {
    let mut out = Vec::with_capacity(img.pixels.len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width, img.height).expect("vec write");
    out.extend_from_slice(&img.pixels);
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// PGM header tokenizer: whitespace-separated tokens, `#` comments run to
/// end of line. Tracks the byte position so P5 raster data can follow.
struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(data: &'a [u8]) -> Self {
        Tokens { data, pos: 0 }
    }

    fn token(&mut self) -> Result<Vec<u8>> {
        // Skip whitespace and comments.
        loop {
            while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.data.len() {
            return Err(Error::Parse {
                line: 1,
                message: "unexpected end of PGM header".into(),
            });
        }
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let tok = self.data[start..self.pos].to_vec();
        // Consume the single delimiter so P5 raster data starts cleanly.
        if self.pos < self.data.len() {
            self.pos += 1;
        }
        Ok(tok)
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(&tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("expected a number, got {:?}", String::from_utf8_lossy(&tok)),
            })
    }
}
