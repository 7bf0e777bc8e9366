//! CSV persistence for the cleaned tables. List columns are `|`-joined.

use std::io::{Read, Write};

use super::clean::{CategoryTable, ItemTable, MergedRow, MergedTable, ReviewTable};
use super::IngestError;

fn join(xs: &[String]) -> String {
    xs.join("|")
}

fn split(s: &str) -> Vec<String> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split('|').map(str::to_owned).collect()
    }
}

fn fmt(x: f64) -> String {
    // Shortest round-trip representation.
    format!("{x:?}")
}

pub fn write_items_csv<W: Write>(w: W, t: &ItemTable) -> Result<(), IngestError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "asin",
        "title",
        "group",
        "salesrank_log",
        "category_count",
        "similar",
    ])?;
    for r in &t.rows {
        out.write_record([
            r.asin.as_str(),
            &r.title,
            &r.group,
            &fmt(r.salesrank_log),
            &r.category_count.to_string(),
            &join(&r.similar),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_categories_csv<W: Write>(w: W, t: &CategoryTable) -> Result<(), IngestError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["asin", "path"])?;
    for r in &t.rows {
        out.write_record([r.asin.as_str(), &join(&r.path)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_reviews_csv<W: Write>(w: W, t: &ReviewTable) -> Result<(), IngestError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "asin",
        "reviews_total_log",
        "reviews_downloaded_log",
        "reviews_avg_ratings",
        "reviews_avg_votes",
        "reviews_avg_helpful",
    ])?;
    for r in &t.rows {
        out.write_record([
            r.asin.as_str(),
            &fmt(r.reviews_total_log),
            &fmt(r.reviews_downloaded_log),
            &fmt(r.reviews_avg_ratings),
            &fmt(r.reviews_avg_votes),
            &fmt(r.reviews_avg_helpful),
        ])?;
    }
    out.flush()?;
    Ok(())
}

const MERGED_HEADER: [&str; 12] = [
    "asin",
    "title",
    "group",
    "salesrank_log",
    "category_count",
    "similar",
    "path",
    "reviews_total_log",
    "reviews_downloaded_log",
    "reviews_avg_ratings",
    "reviews_avg_votes",
    "reviews_avg_helpful",
];

pub fn write_merged_csv<W: Write>(w: W, t: &MergedTable) -> Result<(), IngestError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MERGED_HEADER)?;
    for r in &t.rows {
        out.write_record([
            r.asin.as_str(),
            &r.title,
            &r.group,
            &fmt(r.salesrank_log),
            &r.category_count.to_string(),
            &join(&r.similar),
            &join(&r.path),
            &fmt(r.reviews_total_log),
            &fmt(r.reviews_downloaded_log),
            &fmt(r.reviews_avg_ratings),
            &fmt(r.reviews_avg_votes),
            &fmt(r.reviews_avg_helpful),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(serde::Deserialize)]
struct MergedRecord {
    asin: String,
    title: String,
    group: String,
    salesrank_log: f64,
    category_count: u32,
    similar: String,
    path: String,
    reviews_total_log: f64,
    reviews_downloaded_log: f64,
    reviews_avg_ratings: f64,
    reviews_avg_votes: f64,
    reviews_avg_helpful: f64,
}

pub fn read_merged_csv<R: Read>(r: R) -> Result<MergedTable, IngestError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<MergedRecord>() {
        let m = rec?;
        rows.push(MergedRow {
            asin: m.asin,
            title: m.title,
            group: m.group,
            salesrank_log: m.salesrank_log,
            category_count: m.category_count,
            similar: split(&m.similar),
            path: split(&m.path),
            reviews_total_log: m.reviews_total_log,
            reviews_downloaded_log: m.reviews_downloaded_log,
            reviews_avg_ratings: m.reviews_avg_ratings,
            reviews_avg_votes: m.reviews_avg_votes,
            reviews_avg_helpful: m.reviews_avg_helpful,
        });
    }
    Ok(MergedTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merged_round_trip() {
        let t = MergedTable {
            rows: vec![
                MergedRow {
                    asin: "A1".into(),
                    title: "Comma, \"quoted\" title".into(),
                    group: "Book".into(),
                    salesrank_log: 0.1 + 0.2,
                    category_count: 3,
                    similar: vec!["B2".into()],
                    path: vec!["Books".into(), "Subjects".into()],
                    reviews_avg_ratings: 4.5,
                    ..MergedRow::default()
                },
                MergedRow {
                    asin: "B2".into(),
                    ..MergedRow::default()
                },
            ],
        };
        let mut buf = Vec::new();
        write_merged_csv(&mut buf, &t).unwrap();
        assert!(buf.starts_with(b"asin,title,group,salesrank_log"));
        assert_eq!(read_merged_csv(buf.as_slice()).unwrap(), t);
    }
}
