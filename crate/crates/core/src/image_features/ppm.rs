use std::path::Path;

use super::{ImageError, RgbImage};

/// Reads a binary (P6) PPM file with maxval 255.
pub fn load_ppm(path: &Path) -> Result<RgbImage, ImageError> {
    let bytes = std::fs::read(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_ppm(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<usize, ImageError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::Format {
                offset: start,
                reason: format!("expected {what}"),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Format {
                offset: start,
                reason: format!("{what} out of range"),
            })
    }
}

/// Decodes an in-memory P6 PPM.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage, ImageError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(ImageError::Format {
            offset: 0,
            reason: "missing P6 magic".into(),
        });
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_offset = {
        cur.skip_whitespace_and_comments();
        cur.pos
    };
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(ImageError::Format {
            offset: maxval_offset,
            reason: format!("maxval {maxval} unsupported, expected 255"),
        });
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(ImageError::Format {
                offset: cur.pos,
                reason: "expected a single whitespace byte after maxval".into(),
            })
        }
    }
    if width == 0 || height == 0 {
        return Err(ImageError::Format {
            offset: 2,
            reason: format!("zero-sized image {width}x{height}"),
        });
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| ImageError::Format {
            offset: 2,
            reason: "image dimensions overflow".into(),
        })?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(ImageError::Truncated {
            offset: cur.pos,
            expected,
            actual: payload.len(),
        });
    }
    let pixels = payload[..expected]
        .chunks_exact(3)
        .map(|p| [p[0], p[1], p[2]])
        .collect();
    RgbImage::new(width, height, pixels)
}

/// Encodes an image as binary PPM.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.pixels.len() * 3);
    for p in &img.pixels {
        out.extend_from_slice(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_red_pixel() {
        let mut bytes = b"P6 1 1 255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0]);
        let img = decode_ppm(&bytes).unwrap();
        assert_eq!((img.width, img.height), (1, 1));
        assert_eq!(img.pixels, vec![[255, 0, 0]]);
    }

    #[test]
    fn two_by_two_with_comment() {
        let mut bytes = b"P6\n# poster\n2 2\n255\n".to_vec();
        bytes.extend((0..12).map(|i| i as u8 * 20));
        let img = decode_ppm(&bytes).unwrap();
        assert_eq!((img.width, img.height), (2, 2));
        assert_eq!(img.pixels[3], [180, 200, 220]);
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let mut bytes = b"P6 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0; 9]);
        match decode_ppm(&bytes) {
            Err(ImageError::Truncated {
                offset,
                expected,
                actual,
            }) => {
                assert_eq!((offset, expected, actual), (11, 12, 9));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_magic_and_maxval() {
        assert!(matches!(
            decode_ppm(b"P3 1 1 255\n0 0 0"),
            Err(ImageError::Format { offset: 0, .. })
        ));
        let mut bytes = b"P6 1 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0; 6]);
        assert!(matches!(
            decode_ppm(&bytes),
            Err(ImageError::Format { offset: 7, .. })
        ));
    }

    #[test]
    fn encode_then_decode() {
        let img = RgbImage::new(3, 2, (0..6).map(|i| [i * 40, 255 - i * 40, 7]).collect()).unwrap();
        assert_eq!(decode_ppm(&encode_ppm(&img)).unwrap(), img);
    }
}
