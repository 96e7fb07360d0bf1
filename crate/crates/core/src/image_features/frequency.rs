use super::{ImageError, RgbImage};

/// Single-channel image as a row-major `[rows×cols]` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl GrayMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data does not fit {rows}x{cols}");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self::new(rows.len(), cols, rows.concat())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    fn check(&self) -> Result<(), ImageError> {
        if self.rows < 2 || self.cols < 2 {
            return Err(ImageError::Degenerate {
                width: self.cols,
                height: self.rows,
            });
        }
        Ok(())
    }
}

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Rec. 601 luminance of each pixel, on the 0–255 scale; `height×width`.
pub fn luminance_matrix(img: &RgbImage) -> GrayMatrix {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = img
        .pixels
        .iter()
        .map(|&[r, g, b]| wr * r as f64 + wg * g as f64 + wb * b as f64)
        .collect();
    GrayMatrix::new(img.height, img.width, data)
}

/// Horizontal difference energy. Both sums stop one short of the matrix
/// extent, so the last row never contributes.
pub fn row_frequency(f: &GrayMatrix) -> Result<f64, ImageError> {
    f.check()?;
    let mut acc = 0.0;
    for i in 0..f.rows - 1 {
        for j in 0..f.cols - 1 {
            let d = f.at(i, j) - f.at(i, j + 1);
            acc += d * d;
        }
    }
    Ok((acc / (f.rows * f.cols) as f64).sqrt())
}

/// Vertical difference energy over the same truncated index range as
/// [`row_frequency`]; the last column never contributes.
pub fn column_frequency(f: &GrayMatrix) -> Result<f64, ImageError> {
    f.check()?;
    let mut acc = 0.0;
    for i in 0..f.rows - 1 {
        for j in 0..f.cols - 1 {
            let d = f.at(i, j) - f.at(i + 1, j);
            acc += d * d;
        }
    }
    Ok((acc / (f.rows * f.cols) as f64).sqrt())
}

/// Image clarity: `sqrt(RF² + CF²)`.
pub fn spatial_frequency(f: &GrayMatrix) -> Result<f64, ImageError> {
    let rf = row_frequency(f)?;
    let cf = column_frequency(f)?;
    Ok((rf * rf + cf * cf).sqrt())
}
