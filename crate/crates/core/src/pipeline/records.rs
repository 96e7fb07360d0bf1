use std::io::Read;

use super::PipelineError;

/// One row of a MovieLens `ratings.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingRecord {
    pub user_id: i64,
    pub movie_id: i64,
    pub rating: f64,
    pub timestamp: i64,
}

/// One row of a MovieLens `movies.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovieRecord {
    pub movie_id: i64,
    pub title: String,
    /// Canonical tags from [`GENRES`]; may be empty.
    pub genres: Vec<String>,
    pub release_year: Option<i32>,
}

/// The fixed MovieLens genre vocabulary. Index `i` here is embedding index
/// `i + 1`; index 0 is padding.
pub const GENRES: [&str; 20] = [
    "Action",
    "Adventure",
    "Animation",
    "Children",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "IMAX",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
    "(no genres listed)",
];

/// Embedding index (1-based) of a genre tag, accepting older spellings.
pub fn genre_index(tag: &str) -> Option<usize> {
    let tag = match tag.trim() {
        "Children's" => "Children",
        "unknown" => "(no genres listed)",
        t => t,
    };
    GENRES.iter().position(|g| *g == tag).map(|i| i + 1)
}

/// Rows the loader could not parse, kept for the rejects report.
#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedRatings {
    pub records: Vec<RatingRecord>,
    pub rejects: Vec<Reject>,
}

/// Largest tolerated share of malformed rating rows.
pub const MAX_REJECT_FRACTION: f64 = 0.01;

pub const RATINGS_HEADER: [&str; 4] = ["userId", "movieId", "rating", "timestamp"];
pub const MOVIES_HEADER: [&str; 3] = ["movieId", "title", "genres"];

pub fn is_valid_rating(r: f64) -> bool {
    let halves = r * 2.0;
    r.is_finite() && halves.fract() == 0.0 && (1.0..=10.0).contains(&halves)
}

fn parse_rating_row(fields: &csv::StringRecord) -> Result<RatingRecord, String> {
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let int = |i: usize, name: &str| {
        fields[i]
            .trim()
            .parse::<i64>()
            .map_err(|_| format!("bad {name} {:?}", &fields[i]))
    };
    let user_id = int(0, "userId")?;
    let movie_id = int(1, "movieId")?;
    let rating: f64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad rating {:?}", &fields[2]))?;
    if !is_valid_rating(rating) {
        return Err(format!("rating {rating} outside 0.5..=5.0 in half steps"));
    }
    let timestamp = int(3, "timestamp")?;
    if timestamp < 0 {
        return Err(format!("negative timestamp {timestamp}"));
    }
    Ok(RatingRecord {
        user_id,
        movie_id,
        rating,
        timestamp,
    })
}

fn check_header(
    reader: &mut csv::Reader<impl Read>,
    expected: &[&str],
    file: &'static str,
) -> Result<bool, PipelineError> {
    let mut first = csv::StringRecord::new();
    let got = reader.read_record(&mut first).map_err(|e| PipelineError::Format {
        file,
        line: 1,
        reason: e.to_string(),
    })?;
    if !got || first.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(PipelineError::Format {
            file,
            line: 1,
            reason: format!("expected header {}", expected.join(",")),
        });
    }
    Ok(true)
}

/// Parses a MovieLens ratings file. Malformed rows are collected in
/// [`LoadedRatings::rejects`]; more than 1% of them aborts the load.
pub fn load_ratings_csv<R: Read>(reader: R) -> Result<LoadedRatings, PipelineError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    check_header(&mut r, &RATINGS_HEADER, "ratings")?;
    let mut out = LoadedRatings::default();
    let mut rec = csv::StringRecord::new();
    loop {
        let line = r.position().line();
        match r.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => match parse_rating_row(&rec) {
                Ok(row) => out.records.push(row),
                Err(reason) => out.rejects.push(Reject {
                    line,
                    reason,
                    raw: rec.iter().collect::<Vec<_>>().join(","),
                }),
            },
            Err(e) => out.rejects.push(Reject {
                line,
                reason: e.to_string(),
                raw: String::new(),
            }),
        }
    }
    let total = out.records.len() + out.rejects.len();
    if total == 0 {
        log::warn!("ratings file has a header but no rows");
    }
    if total > 0 && out.rejects.len() as f64 > MAX_REJECT_FRACTION * total as f64 {
        return Err(PipelineError::TooManyRejects {
            rejects: out.rejects.len(),
            total,
        });
    }
    Ok(out)
}

/// Trailing `(YYYY)` of a MovieLens title, if present and plausible.
pub fn parse_year_from_title(title: &str) -> Option<i32> {
    let t = title.trim_end();
    let inner = t.strip_suffix(')')?;
    let open = inner.rfind('(')?;
    let digits = inner[open + 1..].trim();
    if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let year: i32 = digits.parse().ok()?;
    (1870..=2100).contains(&year).then_some(year)
}

/// Parses a MovieLens movies file. Any malformed row is an error naming
/// its line. Unknown genre tags are dropped and counted.
pub fn load_movies_csv<R: Read>(reader: R) -> Result<(Vec<MovieRecord>, usize), PipelineError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    check_header(&mut r, &MOVIES_HEADER, "movies")?;
    let mut movies = Vec::new();
    let mut unknown_tags = 0;
    let mut rec = csv::StringRecord::new();
    loop {
        let line = r.position().line();
        let more = r.read_record(&mut rec).map_err(|e| PipelineError::Format {
            file: "movies",
            line,
            reason: e.to_string(),
        })?;
        if !more {
            break;
        }
        if rec.len() != 3 {
            return Err(PipelineError::Format {
                file: "movies",
                line,
                reason: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let movie_id = rec[0].trim().parse().map_err(|_| PipelineError::Format {
            file: "movies",
            line,
            reason: format!("bad movieId {:?}", &rec[0]),
        })?;
        let mut genres = Vec::new();
        for tag in rec[2].split('|').map(str::trim).filter(|t| !t.is_empty()) {
            match genre_index(tag) {
                Some(i) => {
                    let canonical = GENRES[i - 1].to_string();
                    if !genres.contains(&canonical) {
                        genres.push(canonical);
                    }
                }
                None => unknown_tags += 1,
            }
        }
        movies.push(MovieRecord {
            movie_id,
            title: rec[1].to_string(),
            genres,
            release_year: parse_year_from_title(&rec[1]),
        });
    }
    Ok((movies, unknown_tags))
}

/// Positive label for ratings of 3.5 and above.
pub fn label_of(rating: f64) -> u8 {
    u8::from(rating >= 3.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_movielens_line() {
        let csv = "userId,movieId,rating,timestamp\n1,31,2.5,1260759144\n";
        let loaded = load_ratings_csv(csv.as_bytes()).unwrap();
        assert_eq!(
            loaded.records,
            vec![RatingRecord {
                user_id: 1,
                movie_id: 31,
                rating: 2.5,
                timestamp: 1260759144
            }]
        );
    }

    #[test]
    fn out_of_range_rating_is_rejected_not_dropped() {
        let mut csv = String::from("userId,movieId,rating,timestamp\n");
        for i in 0..200 {
            csv.push_str(&format!("1,{i},4.0,100\n"));
        }
        csv.push_str("1,5,6.0,100\n");
        let loaded = load_ratings_csv(csv.as_bytes()).unwrap();
        assert_eq!(loaded.records.len(), 200);
        assert_eq!(loaded.rejects.len(), 1);
        assert_eq!(loaded.rejects[0].line, 202);
        assert!(loaded.rejects[0].reason.contains("6"));
    }

    #[test]
    fn too_many_rejects_abort() {
        let csv = "userId,movieId,rating,timestamp\n1,2,3.0,5\n1,2,x,5\n";
        assert!(matches!(
            load_ratings_csv(csv.as_bytes()),
            Err(PipelineError::TooManyRejects { rejects: 1, total: 2 })
        ));
    }

    #[test]
    fn header_only_and_missing_header() {
        let loaded = load_ratings_csv("userId,movieId,rating,timestamp\n".as_bytes()).unwrap();
        assert!(loaded.records.is_empty());
        assert!(matches!(
            load_ratings_csv("1,31,2.5,1260759144\n".as_bytes()),
            Err(PipelineError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn years_from_titles() {
        assert_eq!(parse_year_from_title("Toy Story (1995)"), Some(1995));
        assert_eq!(parse_year_from_title("Untitled"), None);
        assert_eq!(parse_year_from_title("Ring, The (2002) "), Some(2002));
        assert_eq!(parse_year_from_title("Babylon 5 (1994-1998)"), None);
        assert_eq!(parse_year_from_title("Future (2999)"), None);
    }

    #[test]
    fn labels() {
        assert_eq!(label_of(5.0), 1);
        assert_eq!(label_of(3.5), 1);
        assert_eq!(label_of(3.0), 0);
    }

    #[test]
    fn movies_with_quoted_titles_and_aliases() {
        let csv = "movieId,title,genres\n\
                   1,Toy Story (1995),Adventure|Animation|Children's|Comedy|Fantasy\n\
                   2,\"American President, The (1995)\",Comedy|Drama|Romance|Bogus\n\
                   3,Nothing,(no genres listed)\n";
        let (movies, unknown) = load_movies_csv(csv.as_bytes()).unwrap();
        assert_eq!(unknown, 1);
        assert_eq!(movies[0].genres[2], "Children");
        assert_eq!(movies[1].title, "American President, The (1995)");
        assert_eq!(movies[1].release_year, Some(1995));
        assert_eq!(movies[2].genres, vec!["(no genres listed)".to_string()]);
        assert_eq!(movies[2].release_year, None);
    }

    #[test]
    fn genre_vocabulary_is_dense() {
        for (i, g) in GENRES.iter().enumerate() {
            assert_eq!(genre_index(g), Some(i + 1));
        }
        assert_eq!(genre_index("Children's"), Some(4));
        assert_eq!(genre_index("Nope"), None);
    }
}
