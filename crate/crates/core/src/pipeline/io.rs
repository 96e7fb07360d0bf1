//! Fixed-column sample CSV used for `train.csv` and `test.csv`.
//!
//! Columns, in order: `label,user_raw,movie_raw,timestamp,user_id,movie_id`,
//! `u_count,u_avg_rating,u_avg_year,u_std_year`,
//! `m_count,m_avg_rating,m_std_rating,m_year`, `cand_genre_0..3`,
//! `hist_movie_0..4`, `hist_genre_0..19`, `hist_poster_<field>__{mean,std}`
//! for the 13 poster fields, `cand_poster_<field>` and `scene`. Floats are
//! written with 17 significant digits so a read-back is exact.

use std::io::{Read, Write};

use super::samples::{Sample, HISTORY_LEN, MAX_GENRES, POSTER_LEN};
use super::PipelineError;
use crate::image_features::{history_agg_names, PosterFeatureVector, HISTORY_AGG_LEN};
use crate::numfmt::fmt_sig;

pub fn sample_csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "label",
        "user_raw",
        "movie_raw",
        "timestamp",
        "user_id",
        "movie_id",
        "u_count",
        "u_avg_rating",
        "u_avg_year",
        "u_std_year",
        "m_count",
        "m_avg_rating",
        "m_std_rating",
        "m_year",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((0..MAX_GENRES).map(|i| format!("cand_genre_{i}")));
    h.extend((0..HISTORY_LEN).map(|i| format!("hist_movie_{i}")));
    h.extend((0..HISTORY_LEN * MAX_GENRES).map(|i| format!("hist_genre_{i}")));
    h.extend(history_agg_names().into_iter().map(|n| format!("hist_poster_{n}")));
    h.extend(PosterFeatureVector::FIELD_NAMES.iter().map(|n| format!("cand_poster_{n}")));
    h.push("scene".into());
    h
}

fn f(x: f64) -> String {
    fmt_sig(x, 17)
}

pub fn write_samples<W: Write>(writer: W, samples: &[Sample]) -> Result<(), PipelineError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let err = |e: csv::Error| PipelineError::Io(e.to_string());
    w.write_record(sample_csv_header()).map_err(err)?;
    let mut rec: Vec<String> = Vec::with_capacity(sample_csv_header().len());
    for s in samples {
        rec.clear();
        rec.push(s.label.to_string());
        rec.push(s.user_raw.to_string());
        rec.push(s.movie_raw.to_string());
        rec.push(s.timestamp.to_string());
        rec.push(s.user_id.to_string());
        rec.push(s.movie_id.to_string());
        rec.extend(s.user_stats.iter().map(|&v| f(v)));
        rec.extend(s.movie_stats.iter().map(|&v| f(v)));
        rec.extend(s.candidate_genres.iter().map(usize::to_string));
        rec.extend(s.history_movie_ids.iter().map(usize::to_string));
        rec.extend(s.history_genres.iter().map(usize::to_string));
        rec.extend(s.history_poster_agg.iter().map(|&v| f(v)));
        rec.extend(s.candidate_poster.iter().map(|&v| f(v)));
        rec.push(f(s.scene));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| PipelineError::Io(e.to_string()))
}

struct Fields<'a> {
    rec: &'a csv::StringRecord,
    pos: usize,
    line: u64,
}

impl Fields<'_> {
    fn err(&self, what: &str) -> PipelineError {
        PipelineError::Format {
            file: "samples",
            line: self.line,
            reason: format!("bad value for column {} ({what})", self.pos),
        }
    }

    fn next_str(&mut self) -> &str {
        let s = &self.rec[self.pos];
        self.pos += 1;
        s
    }

    fn int<T: std::str::FromStr>(&mut self) -> Result<T, PipelineError> {
        let s = self.next_str().to_string();
        s.parse().map_err(|_| {
            self.pos -= 1;
            self.err("integer")
        })
    }

    fn float(&mut self) -> Result<f64, PipelineError> {
        let s = self.next_str().to_string();
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.err("finite float"))
            }
        }
    }

    fn floats<const N: usize>(&mut self) -> Result<[f64; N], PipelineError> {
        let mut out = [0.0; N];
        for v in &mut out {
            *v = self.float()?;
        }
        Ok(out)
    }

    fn ints<const N: usize>(&mut self) -> Result<[usize; N], PipelineError> {
        let mut out = [0; N];
        for v in &mut out {
            *v = self.int()?;
        }
        Ok(out)
    }
}

/// Reads a sample CSV. The header must match [`sample_csv_header`]
/// exactly, column order included.
pub fn read_samples<R: Read>(reader: R) -> Result<Vec<Sample>, PipelineError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers().map_err(|e| PipelineError::Io(e.to_string()))?.clone();
    let expected = sample_csv_header();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(PipelineError::Format {
            file: "samples",
            line: 1,
            reason: "header does not match the sample column layout".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| PipelineError::Format {
            file: "samples",
            line,
            reason: e.to_string(),
        })?;
        let mut fl = Fields {
            rec: &rec,
            pos: 0,
            line,
        };
        let label: u8 = fl.int()?;
        if label > 1 {
            return Err(fl.err("label must be 0 or 1"));
        }
        out.push(Sample {
            label,
            user_raw: fl.int()?,
            movie_raw: fl.int()?,
            timestamp: fl.int()?,
            user_id: fl.int()?,
            movie_id: fl.int()?,
            user_stats: fl.floats()?,
            movie_stats: fl.floats()?,
            candidate_genres: fl.ints()?,
            history_movie_ids: fl.ints()?,
            history_genres: fl.ints()?,
            history_poster_agg: fl.floats::<HISTORY_AGG_LEN>()?,
            candidate_poster: fl.floats::<POSTER_LEN>()?,
            scene: fl.float()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_is_header_only() {
        let mut buf = Vec::new();
        write_samples(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("label,user_raw,movie_raw,timestamp,user_id,movie_id,"));
        assert!(read_samples(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn shuffled_columns_are_rejected() {
        let mut header = sample_csv_header();
        header.swap(0, 1);
        let text = header.join(",") + "\n";
        assert!(matches!(
            read_samples(text.as_bytes()),
            Err(PipelineError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn header_width() {
        assert_eq!(sample_csv_header().len(), 6 + 4 + 4 + 4 + 5 + 20 + 26 + 13 + 1);
    }
}
