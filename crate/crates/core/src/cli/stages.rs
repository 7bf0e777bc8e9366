//! One function per pipeline stage. Each reads its inputs from the
//! workdir, writes its outputs there and records both in the manifest.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{ConfigError, RunConfig};
use super::workdir::{RunManifest, Workdir};
use crate::autodiff::{read_checkpoint, write_checkpoint, Matrix};
use crate::features::{
    read_embeddings, read_ftm, write_ftm, BlockRange, FeatureMatrix, FittedFeatures, PathInput,
    TitleEmbeddings, TrainSet,
};
use crate::graph::{read_copg, write_copg_file, write_labeled_tsv, EdgeList, Graph, SplitMode};
use crate::ingest::{
    aggregate_reviews, clean_items_with, merge_tables, parse_meta, read_merged_csv,
    reduce_categories, write_categories_csv, write_items_csv, write_merged_csv, write_reviews_csv,
    IngestCounts,
};
use crate::models::{Model, ModelKind, ModelsConfig};
use crate::sampler::{precompute_walks, write_wlk, WalkParams};
use crate::trainer::{
    self, plan_split, random_search, replicate, Prepared, SplitPlan, TrainConfig,
};
use crate::{Error, Result};

pub const LEAKAGE_BANNER: &str = "WARNING: transductive split. Test nodes and their features are visible while training, \
so validation and test scores carry leakage risk and can look high before any training. Use the inductive split for \
unseen-item evaluation.";

/// Resolved configuration plus where it lives.
pub struct Ctx {
    pub cfg: RunConfig,
    pub work: Workdir,
    /// Directory that relative config paths are resolved against.
    pub base_dir: PathBuf,
    pub config_hash: String,
}

impl Ctx {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn record(&self, stage: &str, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<()> {
        RunManifest::record(&self.work, &self.config_hash, stage, inputs, outputs)
    }
}

fn note(msg: impl AsRef<str>) {
    eprintln!("copg: {}", msg.as_ref());
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Contract(e.to_string()))?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Contract(format!("{}: {e}", path.display())))
}

/// Column layout and trainable path inputs stored next to `features.ftm`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub blocks: Vec<(String, usize, usize)>,
    pub missing_titles: usize,
    pub path_table: Option<Vec<Vec<f64>>>,
    pub item_paths: Option<Vec<Vec<usize>>>,
}

fn block_name(name: &str) -> &'static str {
    match name {
        "title" => "title",
        "group" => "group",
        "numeric" => "numeric",
        "path" => "path",
        _ => "features",
    }
}

fn save_features(work: &Workdir, fm: &FeatureMatrix) -> Result<Vec<PathBuf>> {
    let ftm = work.path("features.ftm");
    write_ftm(create(&ftm)?, &fm.data)?;
    let side = FeatureSidecar {
        blocks: fm
            .blocks
            .iter()
            .map(|b| (b.name.to_string(), b.start, b.end))
            .collect(),
        missing_titles: fm.missing_titles,
        path_table: fm.path_input.as_ref().map(|p| {
            (0..p.table.rows())
                .map(|r| p.table.row(r).to_vec())
                .collect()
        }),
        item_paths: fm.path_input.as_ref().map(|p| p.item_paths.clone()),
    };
    let json = work.path("features.json");
    write_json(&json, &side)?;
    Ok(vec![ftm, json])
}

pub fn load_features(work: &Workdir) -> Result<FeatureMatrix> {
    let ftm = work.require("features.ftm", "features")?;
    let data = read_ftm(open(&ftm)?)?;
    let side: FeatureSidecar = read_json(&work.require("features.json", "features")?)?;
    let path_input = match (side.path_table, side.item_paths) {
        (Some(t), Some(item_paths)) => Some(PathInput {
            table: Matrix::from_rows(&t),
            item_paths,
        }),
        _ => None,
    };
    Ok(FeatureMatrix {
        data,
        blocks: side
            .blocks
            .iter()
            .map(|(n, s, e)| BlockRange {
                name: block_name(n),
                start: *s,
                end: *e,
            })
            .collect(),
        missing_titles: side.missing_titles,
        path_input,
    })
}

pub fn load_graph(work: &Workdir) -> Result<Graph> {
    let p = work.require("graph.copg", "build-graph")?;
    Ok(read_copg(open(&p)?)?)
}

pub fn load_plan(work: &Workdir) -> Result<SplitPlan> {
    read_json(&work.require("split.json", "split")?)
}

pub fn ingest(ctx: &Ctx) -> Result<()> {
    let input = ctx
        .cfg
        .paths
        .input
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid {
            pointer: "/paths/input".into(),
            message: "ingest needs the amazon-meta input file".into(),
        })?;
    let input = ctx.resolve(input);
    let raw = parse_meta(open(&input)?)?;
    let counts = IngestCounts::of(&raw);
    let opts = &ctx.cfg.dataset;
    let items = clean_items_with(&raw, opts);
    let cats = reduce_categories(&raw, opts.category_depth);
    let revs = aggregate_reviews(&raw, opts);
    let merged = merge_tables(&items, &cats, &revs);
    let w = &ctx.work;
    let outs = [
        "counts.json",
        "warnings.json",
        "items.csv",
        "categories.csv",
        "reviews.csv",
        "merged.csv",
    ]
    .map(|f| w.path(f));
    write_json(&outs[0], &counts)?;
    write_json(&outs[1], &raw.warnings)?;
    write_items_csv(create(&outs[2])?, &items)?;
    write_categories_csv(create(&outs[3])?, &cats)?;
    write_reviews_csv(create(&outs[4])?, &revs)?;
    write_merged_csv(create(&outs[5])?, &merged)?;
    note(format!(
        "ingest: {} records ({} with categories, {} reviewed, {} discontinued); {} merged items; {} warnings",
        counts.records,
        counts.with_categories,
        counts.with_reviews,
        counts.discontinued,
        merged.rows.len(),
        raw.warnings.len()
    ));
    ctx.record("ingest", &[input], &outs)
}

pub fn build_graph(ctx: &Ctx) -> Result<()> {
    let merged_path = ctx.work.require("merged.csv", "ingest")?;
    let merged = read_merged_csv(open(&merged_path)?)?;
    let (graph, _) = crate::graph::build_positive_edges(&merged)?;
    let out = ctx.work.path("graph.copg");
    write_copg_file(&graph, &out)?;
    note(format!(
        "build-graph: {} nodes, {} edges",
        graph.num_nodes(),
        graph.num_edges()
    ));
    ctx.record("build-graph", &[merged_path], &[out])
}

pub fn split(ctx: &Ctx) -> Result<()> {
    let graph_path = ctx.work.require("graph.copg", "build-graph")?;
    let graph = read_copg(open(&graph_path)?)?;
    let plan = plan_split(&graph, &ctx.cfg.split)?;
    if plan.config.mode == SplitMode::Transductive {
        eprintln!("{LEAKAGE_BANNER}");
    }
    let out = ctx.work.path("split.json");
    write_json(&out, &plan)?;
    note(format!(
        "split ({:?}): {}/{}/{} nodes, {}/{}/{} edges, {} cross edges dropped",
        plan.config.mode,
        plan.train_nodes.len(),
        plan.val_nodes.len(),
        plan.test_nodes.len(),
        plan.train_edges.len(),
        plan.val_edges.len(),
        plan.test_edges.len(),
        plan.dropped_cross_edges
    ));
    ctx.record("split", &[graph_path], &[out])
}

pub fn features(ctx: &Ctx) -> Result<()> {
    let merged_path = ctx.work.require("merged.csv", "ingest")?;
    let merged = read_merged_csv(open(&merged_path)?)?;
    let plan = load_plan(&ctx.work)?;
    let spec = &ctx.cfg.features;
    let mut inputs = vec![merged_path, ctx.work.path("split.json")];
    let emb = match &ctx.cfg.paths.embeddings {
        Some(p) => {
            let p = ctx.resolve(p);
            let e = read_embeddings(&p, spec.title_dim)?;
            inputs.push(p);
            e
        }
        None => TitleEmbeddings::new(spec.title_dim),
    };
    let train = TrainSet::new(merged.rows.len(), &plan.train_nodes);
    let fitted = FittedFeatures::fit(&merged, &train, &emb, spec, ctx.cfg.seed)?;
    let fm = fitted.assemble(&merged, &emb)?;
    let outs = save_features(&ctx.work, &fm)?;
    note(format!(
        "features: {} x {} ({} items without title vectors)",
        fm.num_nodes(),
        fm.dim(),
        fm.missing_titles
    ));
    ctx.record("features", &inputs, &outs)
}

pub fn synth(ctx: &Ctx) -> Result<()> {
    let spec = ctx
        .cfg
        .synthetic
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid {
            pointer: "/synthetic".into(),
            message: "synth needs a `synthetic` config section".into(),
        })?;
    let s = crate::synthetic::generate(spec)?;
    let g = ctx.work.path("graph.copg");
    fs::create_dir_all(&ctx.work.root).map_err(|e| Error::io(&ctx.work.root, e))?;
    write_copg_file(&s.graph, &g)?;
    let labeled = ctx.work.path("labeled.tsv");
    write_labeled_tsv(&s.labeled, create(&labeled)?)?;
    let mut outs = vec![g, labeled];
    outs.extend(save_features(&ctx.work, &s.features)?);
    note(format!(
        "synth: {} nodes, {} edges",
        s.graph.num_nodes(),
        s.graph.num_edges()
    ));
    ctx.record("synth", &[], &outs)
}

/// Message-passing graph of the training split.
fn train_graph(graph: &Graph, plan: &SplitPlan) -> Result<Graph> {
    Ok(Graph::from_edges(
        graph.num_nodes(),
        &EdgeList::from_pairs(plan.train_edges.iter().copied()),
    )?)
}

pub fn walks(ctx: &Ctx) -> Result<()> {
    let graph = load_graph(&ctx.work)?;
    let plan = load_plan(&ctx.work)?;
    let p = &ctx.cfg.models.pinsage;
    let params = WalkParams {
        num_walks: p.num_walks,
        walk_length: p.walk_length,
        k: p.neighbors,
        seed: ctx.cfg.seed,
    };
    let out = ctx.work.path("walks.wlk");
    write_walks(&train_graph(&graph, &plan)?, params, &out)?;
    ctx.record(
        "walks",
        &[ctx.work.path("graph.copg"), ctx.work.path("split.json")],
        &[out],
    )
}

pub fn write_walks(graph: &Graph, params: WalkParams, out: &Path) -> Result<()> {
    let table = precompute_walks(graph, params)?;
    write_wlk(create(out)?, &table)?;
    note(format!(
        "walks: {} nodes, {} walks of length {} per node, top {}",
        table.num_nodes(),
        params.num_walks,
        params.walk_length,
        params.k
    ));
    Ok(())
}

struct Loaded {
    prepared: Prepared,
    features: Option<FeatureMatrix>,
    inputs: Vec<PathBuf>,
}

fn load_for(ctx: &Ctx, kind: ModelKind) -> Result<Loaded> {
    let graph = load_graph(&ctx.work)?;
    let plan = load_plan(&ctx.work)?;
    if plan.config.mode == SplitMode::Transductive {
        eprintln!("{LEAKAGE_BANNER}");
    }
    let prepared = Prepared::new(
        &graph,
        &plan,
        ctx.cfg.train.eval_neg_ratio,
        plan.config.seed,
    )?;
    let mut inputs = vec![ctx.work.path("graph.copg"), ctx.work.path("split.json")];
    let features = if kind.uses_features() {
        inputs.extend([
            ctx.work.path("features.ftm"),
            ctx.work.path("features.json"),
        ]);
        Some(load_features(&ctx.work)?)
    } else {
        None
    };
    Ok(Loaded {
        prepared,
        features,
        inputs,
    })
}

/// Sidecar describing the saved best checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointInfo {
    pub model: ModelKind,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub models: ModelsConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub epochs: usize,
    pub mean_epoch_seconds: f64,
    pub total_seconds: f64,
}

pub fn train(ctx: &Ctx, kind: ModelKind) -> Result<()> {
    let loaded = load_for(ctx, kind)?;
    let (report, outcomes) = replicate(
        kind,
        &ctx.cfg.models,
        &ctx.cfg.train,
        &loaded.prepared,
        loaded.features.as_ref(),
    )?;
    let dir = ctx.work.model_dir(kind);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut outs = Vec::new();
    if ctx.cfg.output.history {
        for o in &outcomes {
            let p = dir.join(format!("history_seed{}.csv", o.seed));
            trainer::write_history_csv(&p, &o.history)?;
            outs.push(p);
        }
    }
    let metrics = dir.join("metrics.json");
    write_json(&metrics, &report)?;
    outs.push(metrics);
    let secs: Vec<f64> = outcomes
        .iter()
        .flat_map(|o| o.history.iter().map(|h| h.seconds))
        .collect();
    let timing = Timing {
        epochs: secs.len(),
        mean_epoch_seconds: secs.iter().sum::<f64>() / secs.len().max(1) as f64,
        total_seconds: secs.iter().sum(),
    };
    write_json(&dir.join("timing.json"), &timing)?;
    if ctx.cfg.output.checkpoint {
        let best = outcomes
            .iter()
            .reduce(|a, b| {
                if b.best_val_auc > a.best_val_auc {
                    b
                } else {
                    a
                }
            })
            .expect("at least one seed");
        let ckpt = dir.join("best.ckpt");
        let mut w = create(&ckpt)?;
        write_checkpoint(&mut w, &best.model.store, None)?;
        drop(w);
        let info = dir.join("best.json");
        write_json(
            &info,
            &CheckpointInfo {
                model: kind,
                seed: best.seed,
                best_epoch: best.best_epoch,
                best_val_auc: best.best_val_auc,
                models: ctx.cfg.models.clone(),
                train: ctx.cfg.train.clone(),
            },
        )?;
        outs.extend([ckpt, info]);
    }
    note(format!(
        "train {kind}: test AUC {}, AP {}, val AUC {} over {} seed(s)",
        report.test_auc,
        report.test_ap,
        report.val_auc,
        report.seeds.len()
    ));
    ctx.record(&format!("train:{kind}"), &loaded.inputs, &outs)
}

pub fn evaluate(ctx: &Ctx, kind: ModelKind) -> Result<()> {
    let dir = ctx.work.model_dir(kind);
    let info_path = dir.join("best.json");
    let ckpt_path = dir.join("best.ckpt");
    if !info_path.exists() || !ckpt_path.exists() {
        return Err(Error::Contract(format!(
            "no checkpoint for {kind} in {}; run `copg train --model {kind}` first",
            dir.display()
        )));
    }
    let info: CheckpointInfo = read_json(&info_path)?;
    let loaded = load_for(ctx, kind)?;
    let (store, _) = read_checkpoint(open(&ckpt_path)?)?;
    let mut model = Model::new(
        kind,
        &info.models,
        loaded.features.as_ref(),
        loaded.prepared.full.num_nodes(),
        0,
    );
    model
        .store
        .load_values(&store)
        .map_err(|m| Error::Contract(format!("{}: {m}", ckpt_path.display())))?;
    let m = trainer::evaluate(
        &model,
        &info.models,
        &info.train,
        &loaded.prepared,
        loaded.features.as_ref(),
        "test",
        true,
        info.seed,
    )?;
    let out = dir.join("eval.json");
    write_json(&out, &m)?;
    note(format!(
        "evaluate {kind}: test AUC {:.4}, AP {:.4}",
        m.auc, m.ap
    ));
    let mut inputs = loaded.inputs;
    inputs.extend([info_path, ckpt_path]);
    ctx.record(&format!("evaluate:{kind}"), &inputs, &[out])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSummary {
    pub model: ModelKind,
    pub best: trainer::TrialRecord,
    pub models: ModelsConfig,
    pub train: TrainConfig,
    pub trials: usize,
}

pub fn search(ctx: &Ctx, kind: ModelKind, trials: Option<usize>) -> Result<()> {
    let loaded = load_for(ctx, kind)?;
    let dir = ctx.work.path("search").join(kind.name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let log = dir.join("trials.jsonl");
    if log.exists() {
        fs::remove_file(&log).map_err(|e| Error::io(&log, e))?;
    }
    let s = &ctx.cfg.search;
    let res = random_search(
        kind,
        &ctx.cfg.models,
        &ctx.cfg.train,
        &s.space,
        trials.unwrap_or(s.trials),
        &loaded.prepared,
        loaded.features.as_ref(),
        s.seed,
        Some(&log),
    )?;
    let best = dir.join("best.json");
    write_json(
        &best,
        &SearchSummary {
            model: kind,
            best: res.best.clone(),
            models: res.models,
            train: res.train,
            trials: res.trials.len(),
        },
    )?;
    note(format!(
        "search {kind}: {} trials, best val AUC {:.4} at trial {}",
        res.trials.len(),
        res.best.best_val_auc,
        res.best.trial
    ));
    ctx.record(&format!("search:{kind}"), &loaded.inputs, &[log, best])
}

fn fmt_summary(s: &trainer::Summary) -> [String; 2] {
    [
        format!("{:.6}", s.mean),
        s.std.map(|v| format!("{v:.6}")).unwrap_or_default(),
    ]
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Contract(format!("{}: {e}", path.display()))
}

/// Seeds with a saved history file, in ascending order.
fn history_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(seed) = name
            .strip_prefix("history_seed")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<u64>().ok())
        {
            out.push((seed, entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

const HISTOGRAM_METRICS: [&str; 4] = ["train_loss", "val_loss", "train_auc", "val_auc"];

pub fn report(ctx: &Ctx) -> Result<()> {
    let dir = ctx.work.path("report");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let summary_path = dir.join("summary.csv");
    let metrics_path = dir.join("metrics.csv");
    let mut summary =
        csv::Writer::from_path(&summary_path).map_err(|e| csv_err(&summary_path, e))?;
    let mut metrics =
        csv::Writer::from_path(&metrics_path).map_err(|e| csv_err(&metrics_path, e))?;
    let cols = [
        "model",
        "seeds",
        "test_auc",
        "test_auc_std",
        "test_ap",
        "test_ap_std",
        "test_loss",
        "test_loss_std",
        "test_acc",
        "test_acc_std",
        "val_auc",
        "val_auc_std",
        "recall_at_k",
        "ndcg_at_k",
    ];
    let mut sum_cols = cols.to_vec();
    sum_cols.extend(["epoch_seconds", "total_seconds"]);
    summary
        .write_record(&sum_cols)
        .map_err(|e| csv_err(&summary_path, e))?;
    metrics
        .write_record(cols)
        .map_err(|e| csv_err(&metrics_path, e))?;
    let mut inputs = Vec::new();
    let mut outs = vec![summary_path.clone(), metrics_path.clone()];
    let mut rows = 0;
    for &kind in &ctx.cfg.report.models {
        let mdir = ctx.work.model_dir(kind);
        let mpath = mdir.join("metrics.json");
        if !mpath.exists() {
            note(format!("report: no metrics for {kind}, skipped"));
            continue;
        }
        let r: trainer::MetricsReport = read_json(&mpath)?;
        let timing: Timing = read_json(&mdir.join("timing.json"))?;
        inputs.push(mpath);
        let mut row = vec![kind.name().to_string(), r.seeds.len().to_string()];
        for s in [
            &r.test_auc,
            &r.test_ap,
            &r.test_loss,
            &r.test_acc,
            &r.val_auc,
        ] {
            row.extend(fmt_summary(s));
        }
        for s in [&r.recall_at_k, &r.ndcg_at_k] {
            row.push(
                s.as_ref()
                    .map(|s| format!("{:.6}", s.mean))
                    .unwrap_or_default(),
            );
        }
        metrics
            .write_record(&row)
            .map_err(|e| csv_err(&metrics_path, e))?;
        row.push(format!("{:.6}", timing.mean_epoch_seconds));
        row.push(format!("{:.6}", timing.total_seconds));
        summary
            .write_record(&row)
            .map_err(|e| csv_err(&summary_path, e))?;
        rows += 1;

        let hist_path = dir.join(format!("{}_history.csv", kind.name()));
        let mut hist = csv::Writer::from_path(&hist_path).map_err(|e| csv_err(&hist_path, e))?;
        // Wall-clock columns stay in the per-seed files so this one is reproducible.
        let mut header = vec!["seed"];
        header.extend(
            trainer::HISTORY_HEADER
                .split(',')
                .filter(|c| *c != "seconds"),
        );
        hist.write_record(&header)
            .map_err(|e| csv_err(&hist_path, e))?;
        let mut series: Vec<Vec<f64>> = vec![Vec::new(); HISTOGRAM_METRICS.len()];
        for (seed, p) in history_files(&mdir)? {
            let mut rd = csv::Reader::from_path(&p).map_err(|e| csv_err(&p, e))?;
            let hdr = rd.headers().map_err(|e| csv_err(&p, e))?.clone();
            let idx: Vec<Option<usize>> = HISTOGRAM_METRICS
                .iter()
                .map(|m| hdr.iter().position(|h| h == *m))
                .collect();
            let keep: Vec<usize> = (0..hdr.len()).filter(|&i| &hdr[i] != "seconds").collect();
            for rec in rd.records() {
                let rec = rec.map_err(|e| csv_err(&p, e))?;
                let mut out = vec![seed.to_string()];
                out.extend(keep.iter().map(|&i| rec[i].to_string()));
                hist.write_record(&out)
                    .map_err(|e| csv_err(&hist_path, e))?;
                for (k, i) in idx.iter().enumerate() {
                    if let Some(v) = i
                        .and_then(|i| rec.get(i))
                        .and_then(|v| v.parse::<f64>().ok())
                    {
                        series[k].push(v);
                    }
                }
            }
            inputs.push(p);
        }
        hist.flush().map_err(|e| Error::io(&hist_path, e))?;

        let bins_path = dir.join(format!("{}_histogram.csv", kind.name()));
        let mut bins = csv::Writer::from_path(&bins_path).map_err(|e| csv_err(&bins_path, e))?;
        bins.write_record(["metric", "bin", "lower", "upper", "count"])
            .map_err(|e| csv_err(&bins_path, e))?;
        for (m, values) in HISTOGRAM_METRICS.iter().zip(&series) {
            for (b, (lo, hi, c)) in histogram(values, ctx.cfg.report.histogram_bins)
                .into_iter()
                .enumerate()
            {
                bins.write_record([
                    m.to_string(),
                    b.to_string(),
                    format!("{lo:.6}"),
                    format!("{hi:.6}"),
                    c.to_string(),
                ])
                .map_err(|e| csv_err(&bins_path, e))?;
            }
        }
        bins.flush().map_err(|e| Error::io(&bins_path, e))?;
        outs.extend([hist_path, bins_path]);
    }
    summary.flush().map_err(|e| Error::io(&summary_path, e))?;
    metrics.flush().map_err(|e| Error::io(&metrics_path, e))?;
    if rows == 0 {
        return Err(Error::Contract(
            "report: no trained models found; run `copg train` first".into(),
        ));
    }
    note(format!("report: {rows} model(s) -> {}", dir.display()));
    ctx.record("report", &inputs, &outs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_every_value() {
        let h = histogram(&[0.0, 0.1, 0.5, 1.0, 1.0], 4);
        assert_eq!(h.len(), 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 5);
        assert_eq!(h[3].2, 2);
        assert_eq!(histogram(&[2.0, 2.0], 3)[0].2, 2);
    }
}
