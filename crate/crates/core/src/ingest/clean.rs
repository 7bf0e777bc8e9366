use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::parse::{RawRecord, RawRecordSet};

/// Numeric columns that receive a `log(1 + x)` transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewField {
    Salesrank,
    ReviewsTotal,
    ReviewsDownloaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleanOptions {
    pub log_fields: BTreeSet<SkewField>,
    pub keep_discontinued: bool,
    pub category_depth: usize,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions {
            log_fields: [
                SkewField::Salesrank,
                SkewField::ReviewsTotal,
                SkewField::ReviewsDownloaded,
            ]
            .into_iter()
            .collect(),
            keep_discontinued: false,
            category_depth: 4,
        }
    }
}

impl CleanOptions {
    fn transform(&self, field: SkewField, x: f64) -> f64 {
        if self.log_fields.contains(&field) {
            x.ln_1p()
        } else {
            x
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ItemRow {
    pub asin: String,
    pub title: String,
    pub group: String,
    pub salesrank_log: f64,
    pub category_count: u32,
    pub similar: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ItemTable {
    pub rows: Vec<ItemRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoryRow {
    pub asin: String,
    pub path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoryTable {
    pub rows: Vec<CategoryRow>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReviewRow {
    pub asin: String,
    pub reviews_total_log: f64,
    pub reviews_downloaded_log: f64,
    pub reviews_avg_ratings: f64,
    pub reviews_avg_votes: f64,
    pub reviews_avg_helpful: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReviewTable {
    pub rows: Vec<ReviewRow>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergedRow {
    pub asin: String,
    pub title: String,
    pub group: String,
    pub salesrank_log: f64,
    pub category_count: u32,
    pub similar: Vec<String>,
    pub path: Vec<String>,
    pub reviews_total_log: f64,
    pub reviews_downloaded_log: f64,
    pub reviews_avg_ratings: f64,
    pub reviews_avg_votes: f64,
    pub reviews_avg_helpful: f64,
}

impl MergedRow {
    /// The seven numeric columns in feature order.
    pub fn numeric(&self) -> [f64; 7] {
        [
            self.salesrank_log,
            self.category_count as f64,
            self.reviews_total_log,
            self.reviews_downloaded_log,
            self.reviews_avg_ratings,
            self.reviews_avg_votes,
            self.reviews_avg_helpful,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergedTable {
    pub rows: Vec<MergedRow>,
}

/// Drops discontinued records.
pub fn clean_records(records: &RawRecordSet) -> RawRecordSet {
    RawRecordSet {
        records: records
            .records
            .iter()
            .filter(|r| !r.discontinued)
            .cloned()
            .collect(),
        warnings: records.warnings.clone(),
    }
}

pub fn clean_items(records: &RawRecordSet) -> ItemTable {
    clean_items_with(records, &CleanOptions::default())
}

pub fn clean_items_with(records: &RawRecordSet, opts: &CleanOptions) -> ItemTable {
    let rows = records
        .iter()
        .filter(|r| opts.keep_discontinued || !r.discontinued)
        .map(|r| ItemRow {
            asin: r.asin.clone(),
            title: r.title.clone(),
            group: r.group.clone(),
            salesrank_log: opts.transform(SkewField::Salesrank, r.salesrank.max(0) as f64),
            category_count: r.category_paths.len() as u32,
            similar: r.similar.clone(),
        })
        .collect();
    ItemTable { rows }
}

fn truncated_paths(r: &RawRecord, depth: usize) -> BTreeSet<Vec<String>> {
    r.category_paths
        .iter()
        .map(|p| {
            p.iter()
                .take(depth)
                .map(|s| s.name.clone())
                .collect::<Vec<_>>()
        })
        .filter(|p| !p.is_empty())
        .collect()
}

/// Truncates every path to `depth` levels and keeps, per item, the truncated
/// path shared by the most items in the corpus (ties: lexicographically
/// smallest path).
pub fn reduce_categories(records: &RawRecordSet, depth: usize) -> CategoryTable {
    let per_item: Vec<(&str, BTreeSet<Vec<String>>)> = records
        .iter()
        .map(|r| (r.asin.as_str(), truncated_paths(r, depth)))
        .collect();
    let mut freq: HashMap<&[String], usize> = HashMap::new();
    for (_, paths) in &per_item {
        for p in paths {
            *freq.entry(p.as_slice()).or_default() += 1;
        }
    }
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (asin, paths) in &per_item {
        if paths.is_empty() || !seen.insert(*asin) {
            continue;
        }
        // BTreeSet iterates in lexicographic order, so max_by_key keeping the
        // first maximum needs a reversed comparison.
        let best = paths
            .iter()
            .fold(None::<&Vec<String>>, |best, p| match best {
                Some(b) if freq[b.as_slice()] >= freq[p.as_slice()] => Some(b),
                _ => Some(p),
            })
            .unwrap();
        rows.push(CategoryRow {
            asin: asin.to_string(),
            path: best.clone(),
        });
    }
    CategoryTable { rows }
}

/// Per-item review statistics for items with at least one review line.
pub fn aggregate_reviews(records: &RawRecordSet, opts: &CleanOptions) -> ReviewTable {
    let mut seen = HashSet::new();
    let rows = records
        .iter()
        .filter(|r| !r.reviews.is_empty())
        .filter(|r| seen.insert(r.asin.clone()))
        .map(|r| {
            let n = r.reviews.len() as f64;
            let mean = |f: fn(&super::ReviewLine) -> f64| r.reviews.iter().map(f).sum::<f64>() / n;
            ReviewRow {
                asin: r.asin.clone(),
                reviews_total_log: opts.transform(SkewField::ReviewsTotal, r.reviews_total as f64),
                reviews_downloaded_log: opts
                    .transform(SkewField::ReviewsDownloaded, r.reviews_downloaded as f64),
                reviews_avg_ratings: mean(|x| x.rating as f64),
                reviews_avg_votes: mean(|x| x.votes as f64),
                reviews_avg_helpful: mean(|x| x.helpful as f64),
            }
        })
        .collect();
    ReviewTable { rows }
}

/// Inner join on asin (item table order), pruning similar lists to surviving
/// asins.
pub fn merge_tables(items: &ItemTable, cats: &CategoryTable, revs: &ReviewTable) -> MergedTable {
    let cat: HashMap<&str, &CategoryRow> = cats.rows.iter().map(|r| (r.asin.as_str(), r)).collect();
    let rev: HashMap<&str, &ReviewRow> = revs.rows.iter().map(|r| (r.asin.as_str(), r)).collect();
    let mut seen = HashSet::new();
    let joined: Vec<(&ItemRow, &CategoryRow, &ReviewRow)> = items
        .rows
        .iter()
        .filter_map(|i| {
            let k = i.asin.as_str();
            Some((i, *cat.get(k)?, *rev.get(k)?))
        })
        .filter(|(i, _, _)| seen.insert(i.asin.as_str()))
        .collect();
    let keep: HashSet<&str> = joined.iter().map(|(i, _, _)| i.asin.as_str()).collect();
    let rows = joined
        .into_iter()
        .map(|(i, c, r)| {
            let mut similar: Vec<String> = Vec::new();
            for s in &i.similar {
                if keep.contains(s.as_str()) && !similar.contains(s) {
                    similar.push(s.clone());
                }
            }
            MergedRow {
                asin: i.asin.clone(),
                title: i.title.clone(),
                group: i.group.clone(),
                salesrank_log: i.salesrank_log,
                category_count: i.category_count,
                similar,
                path: c.path.clone(),
                reviews_total_log: r.reviews_total_log,
                reviews_downloaded_log: r.reviews_downloaded_log,
                reviews_avg_ratings: r.reviews_avg_ratings,
                reviews_avg_votes: r.reviews_avg_votes,
                reviews_avg_helpful: r.reviews_avg_helpful,
            }
        })
        .collect();
    MergedTable { rows }
}
