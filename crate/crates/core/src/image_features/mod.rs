//! Poster colour and clarity features.
//!
//! Every poster is reduced to thirteen numbers: the population mean and
//! standard deviation of per-pixel HSV saturation, value ("brightness") and
//! chroma, the luminance spatial frequency, and the mean and standard
//! deviation of each RGB channel. Across a user's liked movies those
//! thirteen fields are aggregated again into 26 history features.

mod frequency;
mod io;
mod ppm;

pub use frequency::{
    column_frequency, luminance_matrix, row_frequency, spatial_frequency, GrayMatrix,
    LUMA_WEIGHTS,
};
pub use io::{
    extract_directory, poster_csv_header, read_poster_features_csv, write_poster_features_csv,
    Extraction,
};
pub use ppm::{decode_ppm, encode_ppm, load_ppm};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed PPM at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },
    #[error("truncated PPM payload at byte {offset}: expected {expected} bytes, found {actual}")]
    Truncated {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("image {width}x{height} is too small; both sides must be at least 2 pixels")]
    Degenerate { width: usize, height: usize },
    #[error("pixel buffer of length {len} does not fit {width}x{height}")]
    PixelCount {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("cannot aggregate an empty list of poster features")]
    EmptyAggregate,
    #[error("poster feature CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major `(r, g, b)` triples.
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImageError::PixelCount {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self, ImageError> {
        Self::new(width, height, vec![color; width * height])
    }
}

/// HSV saturation, value and chroma of one pixel, each in `[0, 1]`.
pub fn rgb_to_hsv_components([r, g, b]: [u8; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b) as f64 / 255.0;
    let min = r.min(g).min(b) as f64 / 255.0;
    let chroma = max - min;
    let saturation = if max > 0.0 { chroma / max } else { 0.0 };
    (saturation, max, chroma)
}

/// Per-poster statistics, in CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PosterFeatureVector {
    pub sat_mean: f64,
    pub sat_std: f64,
    pub val_mean: f64,
    pub val_std: f64,
    pub chroma_mean: f64,
    pub chroma_std: f64,
    pub sf: f64,
    pub r_mean: f64,
    pub r_std: f64,
    pub g_mean: f64,
    pub g_std: f64,
    pub b_mean: f64,
    pub b_std: f64,
}

impl PosterFeatureVector {
    pub const LEN: usize = 13;

    pub const FIELD_NAMES: [&'static str; 13] = [
        "sat_mean",
        "sat_std",
        "val_mean",
        "val_std",
        "chroma_mean",
        "chroma_std",
        "sf",
        "r_mean",
        "r_std",
        "g_mean",
        "g_std",
        "b_mean",
        "b_std",
    ];

    pub fn to_array(&self) -> [f64; 13] {
        [
            self.sat_mean,
            self.sat_std,
            self.val_mean,
            self.val_std,
            self.chroma_mean,
            self.chroma_std,
            self.sf,
            self.r_mean,
            self.r_std,
            self.g_mean,
            self.g_std,
            self.b_mean,
            self.b_std,
        ]
    }

    pub fn from_array(a: [f64; 13]) -> Self {
        Self {
            sat_mean: a[0],
            sat_std: a[1],
            val_mean: a[2],
            val_std: a[3],
            chroma_mean: a[4],
            chroma_std: a[5],
            sf: a[6],
            r_mean: a[7],
            r_std: a[8],
            g_mean: a[9],
            g_std: a[10],
            b_mean: a[11],
            b_std: a[12],
        }
    }
}

/// Population mean and standard deviation, accumulated relative to the
/// first value so that constant input gives an exact zero deviation.
pub(crate) fn mean_std<I>(values: I) -> (f64, f64)
where
    I: Iterator<Item = f64> + Clone,
{
    let Some(first) = values.clone().next() else {
        return (0.0, 0.0);
    };
    let (n, shifted) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + (v - first)));
    let mean = first + shifted / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Colour and clarity statistics of one poster.
pub fn extract_poster_features(img: &RgbImage) -> Result<PosterFeatureVector, ImageError> {
    if img.width < 2 || img.height < 2 {
        return Err(ImageError::Degenerate {
            width: img.width,
            height: img.height,
        });
    }
    let hsv: Vec<(f64, f64, f64)> = img.pixels.iter().map(|&p| rgb_to_hsv_components(p)).collect();
    let (sat_mean, sat_std) = mean_std(hsv.iter().map(|h| h.0));
    let (val_mean, val_std) = mean_std(hsv.iter().map(|h| h.1));
    let (chroma_mean, chroma_std) = mean_std(hsv.iter().map(|h| h.2));
    let channel = |c: usize| mean_std(img.pixels.iter().map(move |p| p[c] as f64));
    let (r_mean, r_std) = channel(0);
    let (g_mean, g_std) = channel(1);
    let (b_mean, b_std) = channel(2);
    let sf = spatial_frequency(&luminance_matrix(img))?;
    Ok(PosterFeatureVector {
        sat_mean,
        sat_std,
        val_mean,
        val_std,
        chroma_mean,
        chroma_std,
        sf,
        r_mean,
        r_std,
        g_mean,
        g_std,
        b_mean,
        b_std,
    })
}

pub const HISTORY_AGG_LEN: usize = 2 * PosterFeatureVector::LEN;

/// Names of the aggregated history features: for every poster field in
/// CSV order, its mean across the history followed by its population std.
pub fn history_agg_names() -> Vec<String> {
    PosterFeatureVector::FIELD_NAMES
        .iter()
        .flat_map(|f| [format!("{f}__mean"), format!("{f}__std")])
        .collect()
}

/// Aggregates the posters of a user's history field by field. An empty
/// history is an error; callers pad with zeros.
pub fn aggregate_history_poster_features(
    features: &[PosterFeatureVector],
) -> Result<[f64; HISTORY_AGG_LEN], ImageError> {
    if features.is_empty() {
        return Err(ImageError::EmptyAggregate);
    }
    let rows: Vec<[f64; 13]> = features.iter().map(PosterFeatureVector::to_array).collect();
    let mut out = [0.0; HISTORY_AGG_LEN];
    for field in 0..PosterFeatureVector::LEN {
        let (m, s) = mean_std(rows.iter().map(|r| r[field]));
        out[2 * field] = m;
        out[2 * field + 1] = s;
    }
    Ok(out)
}
