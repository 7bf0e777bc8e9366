//! Streaming parser for the SNAP `amazon-meta` text dump.

use std::io::BufRead;

use chrono::NaiveDate;
use serde::Serialize;

use super::IngestError;

/// One `Name[code]` element of a category path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathSegment {
    pub name: String,
    pub code: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReviewLine {
    pub date: NaiveDate,
    pub customer: String,
    pub rating: u8,
    pub votes: u32,
    pub helpful: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RawRecord {
    pub id: u64,
    pub asin: String,
    pub title: String,
    pub group: String,
    /// -1 when the record has no `salesrank:` line.
    pub salesrank: i64,
    pub similar: Vec<String>,
    pub category_paths: Vec<Vec<PathSegment>>,
    /// Counts from the `reviews:` header line.
    pub reviews_total: u64,
    pub reviews_downloaded: u64,
    pub reviews: Vec<ReviewLine>,
    pub discontinued: bool,
    /// 1-based line of the record's `Id:` line.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RawRecordSet {
    pub records: Vec<RawRecord>,
    pub warnings: Vec<ParseWarning>,
}

impl RawRecordSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RawRecord> {
        self.records.iter()
    }
}

struct Pending {
    record: RawRecord,
    has_id: bool,
    expect_paths: usize,
    expect_reviews: usize,
}

impl Pending {
    fn open(&self) -> bool {
        self.expect_paths > 0 || self.expect_reviews > 0
    }
}

/// Parses the amazon-meta format. Unknown lines become warnings.
pub fn parse_meta<R: BufRead>(input: R) -> Result<RawRecordSet, IngestError> {
    let mut out = RawRecordSet::default();
    let mut cur: Option<Pending> = None;
    let mut seen_ids = std::collections::HashSet::new();
    let mut lineno = 0;

    for line in input.lines() {
        let line = line?;
        lineno += 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let t = line.trim();

        if t.is_empty() {
            if let Some(p) = cur.take() {
                if p.open() {
                    out.warnings.push(ParseWarning {
                        line: lineno,
                        message: "record ended before all announced lines".into(),
                    });
                }
                finish(p, &mut out, &mut seen_ids)?;
            }
            continue;
        }

        if let Some(rest) = t.strip_prefix("Id:") {
            if let Some(p) = cur.take() {
                finish(p, &mut out, &mut seen_ids)?;
            }
            let id = rest.trim().parse::<u64>().ok();
            cur = Some(Pending {
                record: RawRecord {
                    id: id.unwrap_or(0),
                    salesrank: -1,
                    line: lineno,
                    ..RawRecord::default()
                },
                has_id: id.is_some(),
                expect_paths: 0,
                expect_reviews: 0,
            });
            continue;
        }

        let Some(p) = cur.as_mut() else {
            if !(t.starts_with('#') || t.starts_with("Total items:")) {
                out.warnings.push(ParseWarning {
                    line: lineno,
                    message: format!("line outside any record: {t}"),
                });
            }
            continue;
        };

        if t.starts_with('|') {
            p.record.category_paths.push(parse_path(t));
            p.expect_paths = p.expect_paths.saturating_sub(1);
        } else if p.expect_reviews > 0 && looks_like_review(t) {
            p.expect_reviews -= 1;
            match parse_review(t) {
                Some(r) => {
                    if r.helpful > r.votes {
                        out.warnings.push(ParseWarning {
                            line: lineno,
                            message: "review has helpful > votes".into(),
                        });
                    }
                    p.record.reviews.push(r)
                }
                None => out.warnings.push(ParseWarning {
                    line: lineno,
                    message: format!("unparseable review line: {t}"),
                }),
            }
        } else if let Some(v) = t.strip_prefix("ASIN:") {
            p.record.asin = v.trim().to_string();
        } else if let Some(v) = t.strip_prefix("title:") {
            p.record.title = v.trim().to_string();
        } else if let Some(v) = t.strip_prefix("group:") {
            p.record.group = v.trim().to_string();
        } else if let Some(v) = t.strip_prefix("salesrank:") {
            match v.trim().parse() {
                Ok(s) => p.record.salesrank = s,
                Err(_) => out.warnings.push(ParseWarning {
                    line: lineno,
                    message: format!("bad salesrank: {v}"),
                }),
            }
        } else if let Some(v) = t.strip_prefix("similar:") {
            p.record.similar = v.split_whitespace().skip(1).map(str::to_string).collect();
        } else if let Some(v) = t.strip_prefix("categories:") {
            p.expect_paths = v.trim().parse().unwrap_or(0);
        } else if let Some(v) = t.strip_prefix("reviews:") {
            let (total, downloaded) = parse_review_header(v);
            p.record.reviews_total = total;
            p.record.reviews_downloaded = downloaded;
            p.expect_reviews = downloaded as usize;
        } else if t == "discontinued product" {
            p.record.discontinued = true;
        } else {
            out.warnings.push(ParseWarning {
                line: lineno,
                message: format!("unknown field line: {t}"),
            });
        }
    }

    if let Some(p) = cur.take() {
        if p.open() {
            return Err(IngestError::TruncatedStream { line: lineno });
        }
        finish(p, &mut out, &mut seen_ids)?;
    }
    Ok(out)
}

fn finish(
    p: Pending,
    out: &mut RawRecordSet,
    seen: &mut std::collections::HashSet<u64>,
) -> Result<(), IngestError> {
    if !p.has_id || p.record.asin.is_empty() {
        return Err(IngestError::MalformedRecord {
            line: p.record.line,
        });
    }
    if !seen.insert(p.record.id) {
        out.warnings.push(ParseWarning {
            line: p.record.line,
            message: format!("duplicate Id {}", p.record.id),
        });
    }
    out.records.push(p.record);
    Ok(())
}

fn parse_path(t: &str) -> Vec<PathSegment> {
    t.split('|')
        .skip(1)
        .filter(|s| !s.is_empty())
        .map(|seg| match (seg.rfind('['), seg.ends_with(']')) {
            (Some(open), true) => PathSegment {
                name: seg[..open].to_string(),
                code: seg[open + 1..seg.len() - 1].parse().ok(),
            },
            _ => PathSegment {
                name: seg.to_string(),
                code: None,
            },
        })
        .collect()
}

fn parse_review_header(v: &str) -> (u64, u64) {
    let toks: Vec<&str> = v.split_whitespace().collect();
    let after = |key: &str| {
        toks.iter()
            .position(|t| *t == key)
            .and_then(|i| toks.get(i + 1))
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    };
    (after("total:"), after("downloaded:"))
}

fn looks_like_review(t: &str) -> bool {
    t.split_whitespace()
        .nth(1)
        .is_some_and(|k| k == "cutomer:" || k == "customer:")
}

fn parse_review(t: &str) -> Option<ReviewLine> {
    let toks: Vec<&str> = t.split_whitespace().collect();
    if toks.len() != 9 {
        return None;
    }
    let date = NaiveDate::parse_from_str(toks[0], "%Y-%m-%d").ok()?;
    if toks[3] != "rating:" || toks[5] != "votes:" || toks[7] != "helpful:" {
        return None;
    }
    let rating: u8 = toks[4].parse().ok()?;
    if !(1..=5).contains(&rating) {
        return None;
    }
    Some(ReviewLine {
        date,
        customer: toks[2].to_string(),
        rating,
        votes: toks[6].parse().ok()?,
        helpful: toks[8].parse().ok()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = "Id:   1\nASIN: 0827229534\n  title: Patterns of Preaching: A Sermon Sampler\n  group: Book\n  salesrank: 396585\n  similar: 2  0804215715  156101074X\n  categories: 1\n   |Books[283155]|Subjects[1000]|Religion & Spirituality[22]\n  reviews: total: 2  downloaded: 2  avg rating: 5\n    2000-7-28  cutomer: A2JW67OY8U6HHK  rating: 5  votes:  10  helpful:   9\n    2003-12-14  cutomer: A2VE83MZF98ITY  rating: 5  votes:   6  helpful:   5\n";

    #[test]
    fn empty_stream() {
        let set = parse_meta(&b""[..]).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn single_record_fields() {
        let set = parse_meta(ONE.as_bytes()).unwrap();
        assert_eq!(set.len(), 1);
        let r = &set.records[0];
        assert_eq!(r.id, 1);
        assert_eq!(r.asin, "0827229534");
        assert_eq!(r.title, "Patterns of Preaching: A Sermon Sampler");
        assert_eq!(r.salesrank, 396585);
        assert_eq!(r.similar, vec!["0804215715", "156101074X"]);
        assert_eq!(r.category_paths.len(), 1);
        assert_eq!(r.category_paths[0][2].name, "Religion & Spirituality");
        assert_eq!(r.category_paths[0][2].code, Some(22));
        assert_eq!(r.reviews.len(), 2);
        assert_eq!(r.reviews[0].votes, 10);
        assert_eq!(
            r.reviews[1].date,
            NaiveDate::from_ymd_opt(2003, 12, 14).unwrap()
        );
        assert!(set.warnings.is_empty());
    }

    #[test]
    fn crlf_accepted() {
        let crlf = ONE.replace('\n', "\r\n");
        let set = parse_meta(crlf.as_bytes()).unwrap();
        assert_eq!(set.records[0].reviews.len(), 2);
        assert_eq!(set.records[0].asin, "0827229534");
    }

    #[test]
    fn missing_asin_is_malformed() {
        let err = parse_meta(&b"\nId: 3\n  title: x\n\n"[..]).unwrap_err();
        assert!(matches!(err, IngestError::MalformedRecord { line: 2 }));
    }

    #[test]
    fn eof_mid_record_is_truncated() {
        let cut = ONE.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            parse_meta(cut.as_bytes()),
            Err(IngestError::TruncatedStream { .. })
        ));
    }

    #[test]
    fn unknown_lines_warn() {
        let s = format!("{ONE}  colour: red\n");
        let set = parse_meta(s.as_bytes()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.warnings.len(), 1);
        assert!(set.warnings[0].message.contains("colour"));
    }

    #[test]
    fn discontinued_record() {
        let set = parse_meta(&b"Id: 0\nASIN: 0771044445\n  discontinued product\n"[..]).unwrap();
        assert!(set.records[0].discontinued);
        assert_eq!(set.records[0].salesrank, -1);
        assert!(set.records[0].title.is_empty());
    }
}
