use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{extract_poster_features, load_ppm, ImageError, PosterFeatureVector};
use crate::kernels::map_ordered;
use crate::numfmt::fmt_sig;

/// Outcome of scanning a poster directory.
#[derive(Debug, Default)]
pub struct Extraction {
    /// Sorted by movie id.
    pub features: Vec<(i64, PosterFeatureVector)>,
    pub failures: Vec<(PathBuf, String)>,
    /// Files whose name is not `<movieId>.ppm`.
    pub ignored: Vec<PathBuf>,
}

/// Extracts features from every `<movieId>.ppm` file in `dir`. Unreadable
/// or degenerate images are reported in [`Extraction::failures`].
pub fn extract_directory(dir: &Path) -> Result<Extraction, ImageError> {
    let io_err = |source| ImageError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut candidates = Vec::new();
    let mut ignored = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if !path.is_file() {
            continue;
        }
        let id = path
            .extension()
            .filter(|e| e.eq_ignore_ascii_case("ppm"))
            .and_then(|_| path.file_stem())
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<i64>().ok());
        match id {
            Some(id) => candidates.push((id, path)),
            None => ignored.push(path),
        }
    }
    candidates.sort();
    ignored.sort();

    let results = map_ordered(&candidates, |(_, path)| {
        load_ppm(path).and_then(|img| extract_poster_features(&img))
    });
    let mut out = Extraction {
        ignored,
        ..Default::default()
    };
    for ((id, path), res) in candidates.into_iter().zip(results) {
        match res {
            Ok(f) => out.features.push((id, f)),
            Err(e) => out.failures.push((path, e.to_string())),
        }
    }
    Ok(out)
}

pub fn poster_csv_header() -> Vec<&'static str> {
    std::iter::once("movieId")
        .chain(PosterFeatureVector::FIELD_NAMES)
        .collect()
}

/// Writes `poster_features.csv`: a `movieId` column followed by the
/// thirteen feature fields, floats with 9 significant digits.
pub fn write_poster_features_csv<W: Write>(
    writer: W,
    rows: &[(i64, PosterFeatureVector)],
) -> Result<(), ImageError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let csv_err = |e: csv::Error| ImageError::Csv(e.to_string());
    w.write_record(poster_csv_header()).map_err(csv_err)?;
    for (id, f) in rows {
        let mut rec = vec![id.to_string()];
        rec.extend(f.to_array().iter().map(|&v| fmt_sig(v, 9)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| ImageError::Csv(e.to_string()))
}

/// Reads a `poster_features.csv`, whether produced by this crate or
/// precomputed elsewhere with the same header.
pub fn read_poster_features_csv<R: Read>(
    reader: R,
) -> Result<BTreeMap<i64, PosterFeatureVector>, ImageError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers().map_err(|e| ImageError::Csv(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != poster_csv_header() {
        return Err(ImageError::Csv(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| ImageError::Csv(format!("line {line}: {e}")))?;
        let parse_err = |what: &str| ImageError::Csv(format!("line {line}: bad {what}"));
        let id: i64 = rec[0].trim().parse().map_err(|_| parse_err("movieId"))?;
        let mut vals = [0.0; 13];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = rec[k + 1]
                .trim()
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| parse_err(PosterFeatureVector::FIELD_NAMES[k]))?;
        }
        out.insert(id, PosterFeatureVector::from_array(vals));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_at_nine_digits() {
        let mut f = PosterFeatureVector::default();
        f.sat_mean = 0.123456789123;
        f.sf = 180.31222920256963;
        f.r_mean = 255.0;
        let mut buf = Vec::new();
        write_poster_features_csv(&mut buf, &[(7, f)]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "movieId,sat_mean,sat_std,val_mean,val_std,chroma_mean,chroma_std,sf,r_mean,r_std,g_mean,g_std,b_mean,b_std\n"
        ));
        assert!(text.contains("7,0.123456789,0,0,0,0,0,180.312229,255,"));
        let back = read_poster_features_csv(buf.as_slice()).unwrap();
        assert_eq!(back[&7].r_mean, 255.0);
        assert!((back[&7].sf - f.sf).abs() < 1e-6);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let err = read_poster_features_csv("movieId,sf\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ImageError::Csv(_)));
    }
}
