//! Acceptance gate. Runs every criterion, writes one PASS / FAIL / SKIPPED
//! line per criterion to stderr (uncaptured), then fails if any criterion
//! failed.

// `ensure!(x <= tol)` must also fail on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{HashMap, HashSet};
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use copg::autodiff::{max_gradient_error, DropoutKey, Matrix, SparseRows, Tape, Var};
use copg::features::FeatureMatrix;
use copg::graph::{EdgeList, Graph, NodeId, SplitMode};
use copg::ingest::{
    aggregate_reviews, clean_items_with, merge_tables, parse_meta, reduce_categories, CleanOptions,
    IngestCounts,
};
use copg::models::{
    normalized_adjacency, Block, Encoder, GatConfig, LightGcnConfig, MlpDecoderConfig, Model,
    ModelKind, ModelsConfig, Normalization, PinSageConfig, SageConfig,
};
use copg::sampler::{link_batches, precompute_walks, LinkLoader, NeighborSampler, WalkParams};
use copg::synthetic::{generate, SyntheticSpec};
use copg::trainer::{
    auc, average_precision, plan_split, train, Prepared, SplitConfig, TrainConfig,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| r.random_range(-1.0..1.0))
            .collect(),
    )
}

fn random_graph(r: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut pairs = Vec::new();
    for u in 0..n as NodeId {
        for v in u + 1..n as NodeId {
            if r.random_bool(p) {
                pairs.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &EdgeList::from_pairs(pairs)).unwrap()
}

fn timed(budget: Duration, start: Instant) -> Result<f64, String> {
    let t = start.elapsed();
    ensure!(
        t <= budget,
        "took {:.1}s, budget {:.0}s",
        t.as_secs_f64(),
        budget.as_secs_f64()
    );
    Ok(t.as_secs_f64())
}

// ---------------------------------------------------------------- 1

fn brute_auc(s: &[f64], y: &[f64]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] == 1.0 && y[j] == 0.0 {
                pairs += 1.0;
                num += if s[i] > s[j] {
                    1.0
                } else if s[i] == s[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / pairs
}

/// Precision at each positive's rank, where item j ranks ahead of item k
/// when it scores higher or ties with a smaller index.
fn brute_ap(s: &[f64], y: &[f64]) -> f64 {
    let (mut total, mut pos) = (0.0, 0.0);
    for k in 0..s.len() {
        if y[k] != 1.0 {
            continue;
        }
        pos += 1.0;
        let ahead = |j: usize| s[j] > s[k] || (s[j] == s[k] && j <= k);
        let rank = (0..s.len()).filter(|&j| ahead(j)).count() as f64;
        let hits = (0..s.len()).filter(|&j| y[j] == 1.0 && ahead(j)).count() as f64;
        total += hits / rank;
    }
    total / pos
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for inst in 0..1000 {
        let n = r.random_range(2..=1000usize);
        let mut y: Vec<f64> = (0..n)
            .map(|_| if r.random_bool(0.4) { 1.0 } else { 0.0 })
            .collect();
        y[0] = 1.0;
        y[1] = 0.0;
        // Every third instance uses a coarse score grid to force ties.
        let s: Vec<f64> = if inst % 3 == 0 {
            (0..n)
                .map(|_| r.random_range(0..10) as f64 / 10.0)
                .collect()
        } else {
            (0..n).map(|_| r.random::<f64>()).collect()
        };
        let a = auc(&s, &y).map_err(|e| e.to_string())?;
        let p = average_precision(&s, &y).map_err(|e| e.to_string())?;
        worst = worst
            .max((a - brute_auc(&s, &y)).abs())
            .max((p - brute_ap(&s, &y)).abs());
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    let t = timed(Duration::from_secs(10), start)?;
    Ok(format!(
        "1000 instances, max deviation {worst:.1e}, {t:.1}s"
    ))
}

// ---------------------------------------------------------------- 2

/// Reduces `out` to a scalar with fixed random weights so every output
/// entry gets a distinct upstream gradient.
fn weigh(t: &mut Tape, out: Var, seed: u64) -> Result<Var, copg::autodiff::AutodiffError> {
    let (rows, cols) = t.shape(out);
    let w = t.constant(random_matrix(&mut rng(seed), rows, cols));
    let p = t.mul(out, w)?;
    Ok(t.sum(p))
}

type OpCheck = fn(&mut ChaCha8Rng, u64) -> Result<f64, copg::autodiff::AutodiffError>;

fn op_checks() -> Vec<(&'static str, OpCheck)> {
    const H: f64 = 1e-6;
    fn dims(r: &mut ChaCha8Rng) -> (usize, usize) {
        (r.random_range(1..=5), r.random_range(1..=5))
    }
    vec![
        ("matmul", |r, s| {
            let (m, k) = dims(r);
            let n = r.random_range(1..=5);
            let xs = [random_matrix(r, m, k), random_matrix(r, k, n)];
            max_gradient_error(&xs, H, |t, v| {
                let o = t.matmul(v[0], v[1])?;
                weigh(t, o, s)
            })
        }),
        ("add", |r, s| {
            let (m, n) = dims(r);
            let xs = [random_matrix(r, m, n), random_matrix(r, m, n)];
            max_gradient_error(&xs, H, |t, v| {
                let o = t.add(v[0], v[1])?;
                weigh(t, o, s)
            })
        }),
        ("sub", |r, s| {
            let (m, n) = dims(r);
            let xs = [random_matrix(r, m, n), random_matrix(r, m, n)];
            max_gradient_error(&xs, H, |t, v| {
                let o = t.sub(v[0], v[1])?;
                weigh(t, o, s)
            })
        }),
        ("mul", |r, s| {
            let (m, n) = dims(r);
            let xs = [random_matrix(r, m, n), random_matrix(r, m, n)];
            max_gradient_error(&xs, H, |t, v| {
                let o = t.mul(v[0], v[1])?;
                weigh(t, o, s)
            })
        }),
        ("add_row", |r, s| {
            let (m, n) = dims(r);
            let xs = [random_matrix(r, m, n), random_matrix(r, 1, n)];
            max_gradient_error(&xs, H, |t, v| {
                let o = t.add_row(v[0], v[1])?;
                weigh(t, o, s)
            })
        }),
        ("mul_col", |r, s| {
            let (m, n) = dims(r);
            let xs = [random_matrix(r, m, n), random_matrix(r, m, 1)];
            max_gradient_error(&xs, H, |t, v| {
                let o = t.mul_col(v[0], v[1])?;
                weigh(t, o, s)
            })
        }),
        ("scale", |r, s| {
            let (m, n) = dims(r);
            let c = r.random_range(-3.0..3.0);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.scale(v[0], c);
                weigh(t, o, s)
            })
        }),
        ("concat_cols", |r, s| {
            let (m, a) = dims(r);
            let b = r.random_range(1..=4);
            let xs = [random_matrix(r, m, a), random_matrix(r, m, b)];
            max_gradient_error(&xs, H, |t, v| {
                let o = t.concat_cols(&[v[0], v[1], v[0]])?;
                weigh(t, o, s)
            })
        }),
        ("slice_cols", |r, s| {
            let m = r.random_range(1..=5);
            let n = r.random_range(2..=6);
            let a = r.random_range(0..n - 1);
            let b = r.random_range(a + 1..=n);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.slice_cols(v[0], a, b)?;
                weigh(t, o, s)
            })
        }),
        ("row_gather", |r, s| {
            let (m, n) = dims(r);
            let idx: Vec<usize> = (0..r.random_range(1..=8))
                .map(|_| r.random_range(0..m))
                .collect();
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.row_gather(v[0], &idx)?;
                weigh(t, o, s)
            })
        }),
        ("relu", |r, s| {
            let (m, n) = dims(r);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.relu(v[0]);
                weigh(t, o, s)
            })
        }),
        ("elu", |r, s| {
            let (m, n) = dims(r);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.elu(v[0]);
                weigh(t, o, s)
            })
        }),
        ("leaky_relu", |r, s| {
            let (m, n) = dims(r);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.leaky_relu(v[0], 0.2);
                weigh(t, o, s)
            })
        }),
        ("sigmoid", |r, s| {
            let (m, n) = dims(r);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.sigmoid(v[0]);
                weigh(t, o, s)
            })
        }),
        ("dropout", |r, s| dropout_check(r, s)),
        ("segment_sum", |r, s| {
            let (m, n) = dims(r);
            let segs = r.random_range(1..=4);
            let ids: Vec<usize> = (0..m).map(|_| r.random_range(0..segs)).collect();
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.segment_sum(v[0], &ids, segs)?;
                weigh(t, o, s)
            })
        }),
        ("segment_mean", |r, s| {
            let (m, n) = dims(r);
            let segs = r.random_range(1..=4);
            let ids: Vec<usize> = (0..m).map(|_| r.random_range(0..segs)).collect();
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.segment_mean(v[0], &ids, segs)?;
                weigh(t, o, s)
            })
        }),
        ("segment_softmax", |r, s| {
            let (m, n) = dims(r);
            let segs = r.random_range(1..=4);
            let ids: Vec<usize> = (0..m).map(|_| r.random_range(0..segs)).collect();
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.segment_softmax(v[0], &ids, segs)?;
                weigh(t, o, s)
            })
        }),
        ("spmm", |r, s| {
            let (src, n) = dims(r);
            let dst = r.random_range(1..=5);
            let mut sp = SparseRows::new(dst);
            for _ in 0..r.random_range(0..=10) {
                sp.push(
                    r.random_range(0..dst),
                    r.random_range(0..src),
                    r.random_range(-1.0..1.0),
                );
            }
            max_gradient_error(&[random_matrix(r, src, n)], H, |t, v| {
                let o = t.spmm(v[0], &sp)?;
                weigh(t, o, s)
            })
        }),
        ("sum", |r, _| {
            let (m, n) = dims(r);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let sq = t.mul(v[0], v[0])?;
                Ok(t.sum(sq))
            })
        }),
        ("mean", |r, _| {
            let (m, n) = dims(r);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let sq = t.mul(v[0], v[0])?;
                Ok(t.mean(sq))
            })
        }),
        ("row_sum", |r, s| {
            let (m, n) = dims(r);
            max_gradient_error(&[random_matrix(r, m, n)], H, |t, v| {
                let o = t.row_sum(v[0]);
                weigh(t, o, s)
            })
        }),
        ("bce_with_logits", |r, _| {
            let m = r.random_range(1..=8);
            let labels: Vec<f64> = (0..m).map(|_| r.random_range(0..2) as f64).collect();
            let pw = r.random_range(0.5..3.0);
            let z = random_matrix(r, m, 1).map(|x| 4.0 * x);
            max_gradient_error(&[z], H, |t, v| t.bce_with_logits(v[0], &labels, pw))
        }),
        ("focal_loss", |r, _| {
            let m = r.random_range(1..=8);
            let labels: Vec<f64> = (0..m).map(|_| r.random_range(0..2) as f64).collect();
            let pw = r.random_range(0.5..3.0);
            let gamma = r.random_range(0.0..3.0);
            let z = random_matrix(r, m, 1).map(|x| 4.0 * x);
            max_gradient_error(&[z], H, |t, v| t.focal_loss(v[0], &labels, gamma, pw))
        }),
    ]
}

/// Dropout is identity on eval tapes, so its check replays a training
/// tape with a fixed key; the mask is the same on every replay.
fn dropout_check(r: &mut ChaCha8Rng, s: u64) -> Result<f64, copg::autodiff::AutodiffError> {
    let (m, n) = (r.random_range(1..=5), r.random_range(1..=5));
    let p = r.random_range(0.1..0.7);
    let x = random_matrix(r, m, n);
    let key = DropoutKey {
        seed: s,
        epoch: 1,
        batch: 0,
    };
    let f = |x: &Matrix| -> Result<(f64, Matrix), copg::autodiff::AutodiffError> {
        let mut t = Tape::train(key);
        let v = t.leaf(x.clone());
        let d = t.dropout(v, p)?;
        let out = weigh(&mut t, d, s)?;
        let g = t.backward(out)?;
        Ok((
            t.value(out).item(),
            g.get(v).cloned().unwrap_or_else(|| Matrix::zeros(m, n)),
        ))
    };
    let (_, analytic) = f(&x)?;
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        let h = 1e-6 * x.as_slice()[i].abs().max(1.0);
        xp.as_mut_slice()[i] += h;
        xm.as_mut_slice()[i] -= h;
        let numeric = (f(&xp)?.0 - f(&xm)?.0) / (2.0 * h);
        let a = analytic.as_slice()[i];
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0));
    }
    Ok(worst)
}

fn tiny_models() -> ModelsConfig {
    ModelsConfig {
        sage: SageConfig {
            hidden: 4,
            out: 3,
            layers: 2,
            dropout: 0.0,
            concat: false,
        },
        gat: GatConfig {
            hidden: 3,
            heads_l1: 2,
            heads_l2: 1,
            out: 3,
            dropout: 0.0,
            negative_slope: 0.2,
        },
        pinsage: PinSageConfig {
            hidden: 4,
            out: 3,
            layers: 2,
            dropout: 0.0,
            ..Default::default()
        },
        lightgcn: LightGcnConfig {
            emb_dim: 3,
            layers: 2,
            ..Default::default()
        },
        decoder: None,
        mlp: MlpDecoderConfig {
            layers: 2,
            hidden: 3,
            dropout: 0.0,
        },
    }
}

fn randomize(model: &mut Model, r: &mut ChaCha8Rng) {
    let ids: Vec<_> = model.store.ids().collect();
    for id in ids {
        for x in model.store.value_mut(id).as_mut_slice() {
            *x = r.random_range(-0.8..0.8);
        }
    }
}

fn model_check(kind: ModelKind, trial: u64) -> Result<f64, String> {
    let mut r = rng(1000 + trial);
    let n = r.random_range(4..=10usize);
    let g = random_graph(&mut r, n, 0.4);
    let feats = FeatureMatrix::plain(random_matrix(&mut r, n, 3));
    let mut model = Model::new(kind, &tiny_models(), Some(&feats), n, trial);
    randomize(&mut model, &mut r);
    let pairs: Vec<(usize, usize)> = (0..4)
        .map(|_| (r.random_range(0..n), r.random_range(0..n)))
        .collect();
    let labels: Vec<f64> = (0..4).map(|i| (i % 2) as f64).collect();
    let focal = trial % 2 == 1;
    let adj = normalized_adjacency(&g, Normalization::Symmetric);
    let block = Block::full(&g, &(0..n as NodeId).collect::<Vec<_>>(), model.depth());
    model
        .gradient_error(1e-6, |m, t| {
            let h = match m.kind {
                ModelKind::Lightgcn => m.encode_all(t, &adj)?,
                _ => m.encode_block(t, &feats, &block)?,
            };
            let z = m.score_pairs(t, h, &pairs)?;
            if focal {
                t.focal_loss(z, &labels, 2.0, 2.0)
            } else {
                t.bce_with_logits(z, &labels, 2.0)
            }
        })
        .map_err(|e| e.to_string())
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst: (f64, &str) = (0.0, "");
    let checks = op_checks();
    for (name, check) in &checks {
        let mut r = rng(2);
        for trial in 0..50 {
            let e = check(&mut r, trial).map_err(|e| format!("{name}: {e}"))?;
            ensure!(e <= 1e-6, "{name} trial {trial}: relative error {e:e}");
            if e > worst.0 {
                worst = (e, name);
            }
        }
    }
    for kind in ModelKind::ALL {
        for trial in 0..50 {
            let e = model_check(kind, trial)?;
            ensure!(e <= 1e-6, "{kind} trial {trial}: relative error {e:e}");
            if e > worst.0 {
                worst = (e, kind.name());
            }
        }
    }
    let t = timed(Duration::from_secs(60), start)?;
    Ok(format!(
        "{} ops + {} models x 50 trials, worst {:.1e} ({}), {t:.1}s",
        checks.len(),
        ModelKind::ALL.len(),
        worst.0,
        worst.1
    ))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (mut negatives_checked, mut redraws) = (0usize, 0usize);
    for case in 0..100u64 {
        let mut r = rng(3000 + case);
        let cfg = SplitConfig {
            mode: SplitMode::Inductive,
            seed: case,
            ..Default::default()
        };
        // Redraw until every split holds at least one edge and enough
        // non-edges to sample from.
        let (n, g, plan, prep) = loop {
            let n = r.random_range(30..=100usize);
            let p = r.random_range(0.1..0.3);
            let g = random_graph(&mut r, n, p);
            let plan = plan_split(&g, &cfg).map_err(|e| e.to_string())?;
            if plan.val_edges.is_empty() || plan.test_edges.is_empty() {
                redraws += 1;
                continue;
            }
            match Prepared::new(&g, &plan, 1.0, case) {
                Ok(prep) => break (n, g, plan, prep),
                Err(_) => redraws += 1,
            }
        };
        let mut owner = vec![usize::MAX; n];
        for (k, nodes) in [&plan.train_nodes, &plan.val_nodes, &plan.test_nodes]
            .iter()
            .enumerate()
        {
            for &u in nodes.iter() {
                ensure!(
                    owner[u as usize] == usize::MAX,
                    "case {case}: node {u} in two splits"
                );
                owner[u as usize] = k;
            }
        }
        ensure!(
            owner.iter().all(|&o| o != usize::MAX),
            "case {case}: unassigned node"
        );
        // Exhaustive: each split keeps exactly the graph edges inside it.
        let lists = [&plan.train_edges, &plan.val_edges, &plan.test_edges];
        for (k, list) in lists.iter().enumerate() {
            let got: HashSet<(NodeId, NodeId)> = list.iter().copied().collect();
            let mut want = HashSet::new();
            for u in 0..n as NodeId {
                for v in u + 1..n as NodeId {
                    if g.has_edge(u, v) && owner[u as usize] == k && owner[v as usize] == k {
                        want.insert((u, v));
                    }
                }
            }
            ensure!(
                got == want,
                "case {case}: split {k} edges differ from the exhaustive set"
            );
        }
        for (k, s) in [&prep.train, &prep.val, &prep.test].iter().enumerate() {
            for (e, &y) in s.eval_edges.iter().zip(&s.eval_labels) {
                ensure!(
                    owner[e.u as usize] == k && owner[e.v as usize] == k,
                    "case {case}: eval pair crosses splits"
                );
                if y == 0.0 {
                    ensure!(
                        !g.has_edge(e.u, e.v),
                        "case {case}: negative ({}, {}) is a positive",
                        e.u,
                        e.v
                    );
                    negatives_checked += 1;
                }
            }
            for u in 0..n as NodeId {
                for &v in s.graph.neighbors(u) {
                    ensure!(
                        owner[u as usize] == k && owner[v as usize] == k,
                        "case {case}: message edge crosses splits"
                    );
                }
            }
        }
        if prep.train.positives.is_empty() {
            continue;
        }
        let loader = LinkLoader {
            positives: &prep.train.positives,
            members: &prep.train.nodes,
            graph: &g,
            batch_size: 16,
            neg_ratio: 1.0,
            sampler: NeighborSampler::None,
            seed: case,
            exclude_targets: false,
        };
        for epoch in 1..=2 {
            for b in link_batches(&loader, epoch).map_err(|e| e.to_string())? {
                for (e, &y) in b.edges.iter().zip(&b.labels) {
                    ensure!(
                        owner[e.u as usize] == 0 && owner[e.v as usize] == 0,
                        "case {case}: batch pair leaves train"
                    );
                    if y == 0.0 {
                        ensure!(
                            !g.has_edge(e.u, e.v),
                            "case {case}: sampled negative is a positive"
                        );
                        negatives_checked += 1;
                    }
                }
            }
        }
    }
    let t = timed(Duration::from_secs(10), start)?;
    Ok(format!(
        "100 graphs ({redraws} redrawn), {negatives_checked} negatives checked, {t:.1}s"
    ))
}

// ---------------------------------------------------------------- 4

fn dense_lightgcn(g: &Graph, e0: &Matrix, k: usize) -> Matrix {
    let n = g.num_nodes();
    let mut a = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if g.has_edge(u as NodeId, v as NodeId) {
                let d = (g.degree(u as NodeId) * g.degree(v as NodeId)) as f64;
                a.set(u, v, 1.0 / d.sqrt());
            }
        }
    }
    let mut power = e0.clone();
    let mut acc = e0.clone();
    for _ in 0..k {
        power = a.matmul(&power);
        acc.add_assign(&power);
    }
    acc.map(|x| x / (k + 1) as f64)
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        for case in 0..20u64 {
            let mut r = rng(4000 + 100 * k as u64 + case);
            let n = r.random_range(2..=12usize);
            let g = random_graph(&mut r, n, 0.35);
            let mut cfg = tiny_models();
            cfg.lightgcn.layers = k;
            cfg.lightgcn.emb_dim = 4;
            let model = Model::new(ModelKind::Lightgcn, &cfg, None, n, case);
            let Encoder::LightGcn(l) = &model.encoder else {
                return Err("not a LightGCN encoder".into());
            };
            let want = dense_lightgcn(&g, model.store.value(l.emb), k);
            let mut tape = Tape::eval();
            let h = model
                .encode_all(
                    &mut tape,
                    &normalized_adjacency(&g, Normalization::Symmetric),
                )
                .map_err(|e| e.to_string())?;
            worst = worst.max(tape.value(h).max_abs_diff(&want));
        }
    }
    ensure!(worst <= 1e-6, "max deviation {worst:e}");
    Ok(format!("K=1,2,3 x 20 graphs, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    // Attention sums over random graphs.
    let mut worst_sum: f64 = 0.0;
    for case in 0..20u64 {
        let mut r = rng(5000 + case);
        let n = r.random_range(2..=12usize);
        let g = random_graph(&mut r, n, 0.3);
        let feats = FeatureMatrix::plain(random_matrix(&mut r, n, 3));
        let mut model = Model::new(ModelKind::Gat, &tiny_models(), Some(&feats), n, case);
        randomize(&mut model, &mut r);
        let Encoder::Gat(gat) = &model.encoder else {
            return Err("not a GAT encoder".into());
        };
        let block = Block::full(&g, &(0..n as NodeId).collect::<Vec<_>>(), 2);
        let mut tape = Tape::eval();
        let x = model
            .input(&mut tape, &feats, block.input_nodes())
            .map_err(|e| e.to_string())?;
        let (_, attn) = gat
            .forward_with_attention(&mut tape, &model.store, x, &block)
            .map_err(|e| e.to_string())?;
        for a in &attn {
            let alpha = tape.value(a.alpha);
            let mut sums = vec![0.0; block.layers[a.layer].dst.len()];
            for (e, &d) in a.edge_dst.iter().enumerate() {
                sums[d] += alpha.get(e, 0);
            }
            for s in sums {
                worst_sum = worst_sum.max((s - 1.0).abs());
            }
        }
    }
    ensure!(worst_sum <= 1e-6, "attention sums deviate by {worst_sum:e}");

    // Hand oracle: path 0 - 1 - 2, one input feature, one head of width 1.
    // With W = 1, a_src = 1, a_dst = 0, the logit of edge (i <- j) is
    // leaky_relu(x_j); node 1 attends over {0, 1, 2} with features
    // (1, 2, -1): logits (1, 2, -0.2).
    let g = Graph::from_edges(3, &EdgeList::from_pairs([(0, 1), (1, 2)])).unwrap();
    let feats = FeatureMatrix::plain(Matrix::from_rows(&[[1.0], [2.0], [-1.0]]));
    let mut cfg = tiny_models();
    cfg.gat = GatConfig {
        hidden: 1,
        heads_l1: 1,
        heads_l2: 1,
        out: 1,
        dropout: 0.0,
        negative_slope: 0.2,
    };
    let mut model = Model::new(ModelKind::Gat, &cfg, Some(&feats), 3, 0);
    for (name, v) in [("w", 1.0), ("att_src", 1.0), ("att_dst", 0.0), ("b", 0.0)] {
        let id = model
            .store
            .find(&format!("gat.0.{name}"))
            .ok_or(format!("missing gat.0.{name}"))?;
        model.store.value_mut(id).fill(v);
    }
    let Encoder::Gat(gat) = &model.encoder else {
        return Err("not a GAT encoder".into());
    };
    let block = Block::full(&g, &[0, 1, 2], 2);
    let mut tape = Tape::eval();
    let x = model
        .input(&mut tape, &feats, block.input_nodes())
        .map_err(|e| e.to_string())?;
    let (_, attn) = gat
        .forward_with_attention(&mut tape, &model.store, x, &block)
        .map_err(|e| e.to_string())?;
    let first = attn
        .iter()
        .find(|a| a.layer == 0)
        .ok_or("no layer-0 attention")?;
    let layer = &block.layers[0];
    let alpha = tape.value(first.alpha);
    let mut got: HashMap<(NodeId, NodeId), f64> = HashMap::new();
    for (e, (&d, &s)) in first.edge_dst.iter().zip(&first.edge_src).enumerate() {
        got.insert((layer.dst[d], layer.src[s]), alpha.get(e, 0));
    }
    let z = 1f64.exp() + 2f64.exp() + (-0.2f64).exp();
    let z0 = 1f64.exp() + 2f64.exp();
    let z2 = 2f64.exp() + (-0.2f64).exp();
    let want = [
        ((1, 0), 1f64.exp() / z),
        ((1, 1), 2f64.exp() / z),
        ((1, 2), (-0.2f64).exp() / z),
        ((0, 0), 1f64.exp() / z0),
        ((0, 1), 2f64.exp() / z0),
        ((2, 1), 2f64.exp() / z2),
        ((2, 2), (-0.2f64).exp() / z2),
    ];
    let mut worst_hand: f64 = 0.0;
    for (key, w) in want {
        let a = got.get(&key).ok_or(format!("no attention for {key:?}"))?;
        worst_hand = worst_hand.max((a - w).abs());
    }
    ensure!(worst_hand <= 1e-6, "hand oracle deviates by {worst_hand:e}");
    Ok(format!(
        "sums within {worst_sum:.1e}, 3-node oracle within {worst_hand:.1e}"
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut worst_eq: f64 = 0.0;
    for case in 0..20u64 {
        let mut r = rng(6000 + case);
        let n = r.random_range(3..=12usize);
        let g = random_graph(&mut r, n, 0.35);
        let feats = FeatureMatrix::plain(random_matrix(&mut r, n, 4));
        let cfg = tiny_models();
        let mut sage = Model::new(ModelKind::Sage, &cfg, Some(&feats), n, case);
        randomize(&mut sage, &mut r);
        let mut pin = Model::new(ModelKind::Pinsage, &cfg, Some(&feats), n, case + 1);
        // Share parameters position by position.
        let (a, b): (Vec<_>, Vec<_>) = (sage.store.ids().collect(), pin.store.ids().collect());
        ensure!(a.len() == b.len(), "parameter counts differ");
        for (x, y) in a.into_iter().zip(b) {
            let v = sage.store.value(x).clone();
            ensure!(
                v.shape() == pin.store.value(y).shape(),
                "parameter shapes differ"
            );
            *pin.store.value_mut(y) = v;
        }
        let seeds: Vec<NodeId> = (0..n as NodeId)
            .filter(|_| r.random_bool(0.5))
            .chain([0])
            .collect();
        let block = Block::full(&g, &seeds, 2);
        let mut t1 = Tape::eval();
        let h1 = sage
            .encode_block(&mut t1, &feats, &block)
            .map_err(|e| e.to_string())?;
        let mut t2 = Tape::eval();
        let h2 = pin
            .encode_block(&mut t2, &feats, &block.with_uniform_weights())
            .map_err(|e| e.to_string())?;
        worst_eq = worst_eq.max(t1.value(h1).max_abs_diff(t2.value(h2)));
    }
    ensure!(
        worst_eq <= 1e-6,
        "uniform PinSAGE deviates from SAGE by {worst_eq:e}"
    );

    let mut worst_norm: f64 = 0.0;
    for case in 0..20u64 {
        let mut r = rng(6500 + case);
        let g = random_graph(&mut r, 30, 0.15);
        let table = precompute_walks(
            &g,
            WalkParams {
                num_walks: 20,
                walk_length: 4,
                k: 6,
                seed: case,
            },
        )
        .map_err(|e| e.to_string())?;
        for u in 0..30 {
            let entry = table.entry(u);
            if !entry.is_empty() {
                worst_norm = worst_norm.max((entry.iter().map(|e| e.1).sum::<f64>() - 1.0).abs());
            }
        }
    }
    ensure!(
        worst_norm <= 1e-9,
        "walk weights deviate from 1 by {worst_norm:e}"
    );

    let tri = Graph::from_edges(3, &EdgeList::from_pairs([(0, 1), (1, 2), (0, 2)])).unwrap();
    let table = precompute_walks(
        &tri,
        WalkParams {
            num_walks: 10_000,
            walk_length: 5,
            k: 2,
            seed: 6,
        },
    )
    .map_err(|e| e.to_string())?;
    let mut worst_tri: f64 = 0.0;
    for u in 0..3 {
        let entry = table.entry(u);
        ensure!(
            entry.len() == 2,
            "node {u} has {} walk neighbors",
            entry.len()
        );
        for &(_, w) in entry {
            worst_tri = worst_tri.max((w - 0.5).abs());
        }
    }
    ensure!(worst_tri <= 0.05, "triangle weights off 0.5 by {worst_tri}");
    Ok(format!(
        "PinSAGE=SAGE within {worst_eq:.1e}, weight sums within {worst_norm:.1e}, triangle within {worst_tri:.3}"
    ))
}

// ---------------------------------------------------------------- 7

fn learn_models(hidden: usize) -> ModelsConfig {
    let mut m = ModelsConfig::default();
    m.gat.hidden = hidden;
    m.gat.out = hidden;
    m.pinsage.hidden = hidden;
    m.pinsage.out = hidden;
    m.lightgcn.emb_dim = hidden;
    m.sage.hidden = hidden;
    m.sage.out = hidden;
    m
}

fn criterion_7() -> Outcome {
    let syn = generate(&SyntheticSpec::planted(200, 2, 0.2, 0.01, 32, 2.0, 0))
        .map_err(|e| e.to_string())?;
    // Overfitting setting: no regularization, full neighborhoods.
    let mut models = learn_models(64);
    models.sage.dropout = 0.0;
    models.gat.dropout = 0.0;
    models.pinsage.dropout = 0.0;
    models.mlp.dropout = 0.0;
    let cfg = TrainConfig {
        epochs: Some(200),
        patience: 200,
        lr: 0.003,
        weight_decay: 0.0,
        batch_size: 256,
        neg_ratio: 1.0,
        fanout: vec![50, 50],
        ..Default::default()
    };
    let mut parts = Vec::new();
    for (kind, mode, threshold) in [
        (ModelKind::Sage, SplitMode::Inductive, 0.95),
        (ModelKind::Gat, SplitMode::Inductive, 0.95),
        (ModelKind::Pinsage, SplitMode::Inductive, 0.95),
        (ModelKind::Lightgcn, SplitMode::Transductive, 0.90),
    ] {
        let start = Instant::now();
        let plan = plan_split(
            &syn.graph,
            &SplitConfig {
                mode,
                seed: 0,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let data = Prepared::new(&syn.graph, &plan, 1.0, 0).map_err(|e| e.to_string())?;
        let cfg = if kind == ModelKind::Lightgcn {
            TrainConfig {
                lr: 0.01,
                ..cfg.clone()
            }
        } else {
            cfg.clone()
        };
        let out =
            train(kind, &models, &cfg, &data, Some(&syn.features), 0).map_err(|e| e.to_string())?;
        let best = out.history.iter().map(|h| h.train_auc).fold(0.0, f64::max);
        let reached = out
            .history
            .iter()
            .find(|h| h.train_auc >= threshold)
            .map(|h| h.epoch);
        ensure!(
            reached.is_some(),
            "{kind}: best train AUC {best:.4} < {threshold}"
        );
        let t = timed(Duration::from_secs(120), start).map_err(|e| format!("{kind}: {e}"))?;
        parts.push(format!("{kind} {best:.3}@{} ({t:.1}s)", reached.unwrap()));
    }
    Ok(parts.join(", "))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let models = learn_models(32);
    let mut models = models;
    models.sage = SageConfig::default();
    models.gat.hidden = 16;
    models.gat.out = 16;
    let cfg = TrainConfig {
        epochs: Some(100),
        patience: 100,
        lr: 0.01,
        weight_decay: 1e-4,
        batch_size: 256,
        ..Default::default()
    };
    let mut lines = Vec::new();
    for seed in 0..3u64 {
        let syn = generate(&SyntheticSpec::planted(400, 4, 0.25, 0.01, 16, 0.3, seed))
            .map_err(|e| e.to_string())?;
        let plan = plan_split(
            &syn.graph,
            &SplitConfig {
                seed,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let data = Prepared::new(&syn.graph, &plan, 1.0, seed).map_err(|e| e.to_string())?;
        let mut row = Vec::new();
        for kind in ModelKind::ALL {
            let out = train(kind, &models, &cfg, &data, Some(&syn.features), seed)
                .map_err(|e| e.to_string())?;
            let a = out.test.auc;
            if kind.uses_features() {
                ensure!(a >= 0.80, "seed {seed}: {kind} test AUC {a:.4} < 0.80");
            } else {
                ensure!(
                    a <= 0.60,
                    "seed {seed}: inductive {kind} test AUC {a:.4} > 0.60"
                );
            }
            row.push(format!("{}={a:.3}", kind.name()));
        }
        lines.push(format!("seed {seed}: {}", row.join(" ")));
    }
    Ok(lines.join("; "))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let syn = generate(&SyntheticSpec::planted(200, 2, 0.2, 0.01, 16, 0.3, 9))
        .map_err(|e| e.to_string())?;
    let plan = plan_split(
        &syn.graph,
        &SplitConfig {
            seed: 9,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let data = Prepared::new(&syn.graph, &plan, 1.0, 9).map_err(|e| e.to_string())?;
    let models = learn_models(16);
    let base = TrainConfig {
        epochs: Some(120),
        patience: 20,
        lr: 0.01,
        batch_size: 256,
        ..Default::default()
    };
    let mut notes = Vec::new();
    for kind in [ModelKind::Sage, ModelKind::Lightgcn] {
        let out = train(kind, &models, &base, &data, Some(&syn.features), 9)
            .map_err(|e| e.to_string())?;
        let max = out
            .history
            .iter()
            .map(|h| h.val_auc)
            .fold(f64::NEG_INFINITY, f64::max);
        ensure!(
            out.best_val_auc == max,
            "{kind}: best {} != history max {max}",
            out.best_val_auc
        );
        ensure!(
            out.val.auc == max,
            "{kind}: restored checkpoint scores {} != {max}",
            out.val.auc
        );
        let at = out
            .history
            .iter()
            .find(|h| h.val_auc == max)
            .map(|h| h.epoch);
        ensure!(
            at == Some(out.best_epoch),
            "{kind}: best epoch {} is not the first maximum",
            out.best_epoch
        );
        let (best_epoch, ran) = (out.best_epoch, out.history.len());

        let frozen = TrainConfig {
            lr: 0.0,
            ..base.clone()
        };
        let out = train(kind, &models, &frozen, &data, Some(&syn.features), 9)
            .map_err(|e| e.to_string())?;
        ensure!(
            out.history.len() == frozen.patience + 1 && out.stopped_early,
            "{kind}: frozen run stopped after {} epochs",
            out.history.len()
        );
        notes.push(format!(
            "{kind} best {max:.4} at epoch {best_epoch} of {ran}, frozen run stops at {}",
            out.history.len()
        ));
    }
    Ok(notes.join("; "))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/amazon-meta-5.txt");
    let text = std::fs::read(&fixture).map_err(|e| e.to_string())?;
    let raw = parse_meta(&text[..]).map_err(|e| e.to_string())?;
    let counts = IngestCounts::of(&raw);
    ensure!(
        (
            counts.records,
            counts.with_categories,
            counts.with_reviews,
            counts.discontinued
        ) == (5, 4, 4, 1),
        "counts {counts:?}"
    );
    ensure!(
        raw.warnings.len() == 1 && raw.warnings[0].message.contains("shipping"),
        "warnings {:?}",
        raw.warnings
    );
    let opts = CleanOptions::default();
    let items = clean_items_with(&raw, &opts);
    let cats = reduce_categories(&raw, opts.category_depth);
    let revs = aggregate_reviews(&raw, &opts);
    let merged = merge_tables(&items, &cats, &revs);

    let asins: Vec<&str> = merged.rows.iter().map(|r| r.asin.as_str()).collect();
    ensure!(
        asins == ["1111111111", "2222222222", "3333333333", "4444444444"],
        "items {asins:?}"
    );
    let similar: Vec<Vec<&str>> = merged
        .rows
        .iter()
        .map(|r| r.similar.iter().map(String::as_str).collect())
        .collect();
    ensure!(
        similar
            == [
                vec!["2222222222"],
                vec!["1111111111", "3333333333"],
                vec![],
                vec!["1111111111"]
            ],
        "pruned similar lists {similar:?}"
    );
    let rel = "Books|Subjects|Religion & Spirituality|Christianity";
    let paths: Vec<String> = merged.rows.iter().map(|r| r.path.join("|")).collect();
    ensure!(
        paths == [rel, "Music|Styles", "DVD|Genres|Documentary|History", rel],
        "category paths {paths:?}"
    );
    let groups: Vec<&str> = merged.rows.iter().map(|r| r.group.as_str()).collect();
    ensure!(
        groups == ["Book", "Music", "DVD", "Book"],
        "groups {groups:?}"
    );
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let want_rank = [396585f64.ln_1p(), 0.0, 0.0, 12f64.ln_1p()];
    let want_cc = [2, 1, 1, 3];
    // (total, downloaded, avg rating, avg votes, avg helpful)
    let want_rev = [
        (2.0, 2.0, 4.5, 8.0, 7.0),
        (1.0, 1.0, 3.0, 2.0, 1.0),
        (5.0, 1.0, 2.0, 0.0, 0.0),
        (3.0, 2.0, 3.0, 3.0, 2.0),
    ];
    for (i, row) in merged.rows.iter().enumerate() {
        let (t, d, ra, vo, he) = want_rev[i];
        ensure!(
            close(row.salesrank_log, want_rank[i]) && row.category_count == want_cc[i],
            "item {}: salesrank {} categories {}",
            row.asin,
            row.salesrank_log,
            row.category_count
        );
        ensure!(
            close(row.reviews_total_log, f64::ln_1p(t))
                && close(row.reviews_downloaded_log, f64::ln_1p(d))
                && close(row.reviews_avg_ratings, ra)
                && close(row.reviews_avg_votes, vo)
                && close(row.reviews_avg_helpful, he),
            "item {}: review stats {row:?}",
            row.asin
        );
    }
    ensure!(merged.rows[3].title.is_empty(), "empty title not preserved");
    let (graph, _) = copg::graph::build_positive_edges(&merged).map_err(|e| e.to_string())?;
    ensure!(
        graph.num_nodes() == 4 && graph.num_edges() == 3,
        "graph {} nodes {} edges",
        graph.num_nodes(),
        graph.num_edges()
    );

    let mut t = Tape::eval();
    let z = t.constant(Matrix::column(&[0.0]));
    let bce = t
        .bce_with_logits(z, &[1.0], 2.0)
        .map_err(|e| e.to_string())?;
    let focal = t
        .focal_loss(z, &[1.0], 2.0, 1.0)
        .map_err(|e| e.to_string())?;
    let (b, f) = (t.value(bce).item(), t.value(focal).item());
    let ln2 = std::f64::consts::LN_2;
    ensure!((b - 2.0 * ln2).abs() <= 1e-9, "bce {b} != 2 ln 2");
    ensure!((f - 0.25 * ln2).abs() <= 1e-9, "focal {f} != 0.25 ln 2");
    Ok(format!(
        "4 items, 3 edges, tables exact; bce {b:.9}, focal {f:.9}"
    ))
}

// ---------------------------------------------------------------- 11

const PIPELINE_CONFIG: &str = r#"{
  "paths": { "workdir": "work" },
  "synthetic": {
    "graph": { "kind": "planted_partition", "n": 200, "clusters": 2, "p_in": 0.2, "p_out": 0.01 },
    "features": { "mode": "cluster_signal", "dim": 16, "noise": 0.3 },
    "seed": 11
  },
  "split": { "seed": 11 },
  "seed": 11,
  "models": { "gat": { "hidden": 16, "out": 16 }, "pinsage": { "hidden": 32, "out": 32 }, "lightgcn": { "emb_dim": 32 } },
  "train": { "epochs": 30, "lr": 0.01, "batch_size": 256, "seeds": [0, 1] },
  "stages": { "search": true },
  "search": { "trials": 2, "seed": 5 }
}"#;

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = dir.path().join("run.json");
        std::fs::write(&cfg, PIPELINE_CONFIG).map_err(|e| e.to_string())?;
        let code = copg::cli::main_with_args(["copg", "--config", cfg.to_str().unwrap(), "run"]);
        ensure!(code == 0, "pipeline exited with {code}");
        let report = dir.path().join("work/report");
        let mut files: Vec<_> = std::fs::read_dir(&report)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|f| f != "summary.csv")
            .collect();
        files.sort();
        let contents: Vec<(String, Vec<u8>)> = files
            .into_iter()
            .map(|f| (f.clone(), std::fs::read(report.join(&f)).unwrap()))
            .collect();
        let trials = std::fs::read(dir.path().join("work/search/sage/trials.jsonl"))
            .map_err(|e| e.to_string())?;
        outputs.push((contents, trials));
    }
    ensure!(
        outputs[0].0.len() == 9,
        "expected 9 report CSVs, got {}",
        outputs[0].0.len()
    );
    for ((a, da), (b, db)) in outputs[0].0.iter().zip(&outputs[1].0) {
        ensure!(a == b && da == db, "{a} differs between runs");
    }
    ensure!(outputs[0].1 == outputs[1].1, "search trial logs differ");
    let t = timed(Duration::from_secs(300), start)?;
    Ok(format!(
        "{} CSVs and the search log byte-identical across 2 runs, {t:.1}s",
        outputs[0].0.len()
    ))
}

// ---------------------------------------------------------------- 12

fn criterion_12() -> Option<Outcome> {
    let path = std::env::var_os("COPG_AMAZON_META")?;
    Some((|| {
        let start = Instant::now();
        let file = std::fs::File::open(&path).map_err(|e| e.to_string())?;
        let raw = parse_meta(std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
        let c = IngestCounts::of(&raw);
        let got = (c.records, c.with_categories, c.with_reviews);
        ensure!(got == (548_552, 519_781, 402_724), "counts {got:?}");
        let opts = CleanOptions::default();
        let merged = merge_tables(
            &clean_items_with(&raw, &opts),
            &reduce_categories(&raw, opts.category_depth),
            &aggregate_reviews(&raw, &opts),
        );
        drop(raw);
        let (graph, _) = copg::graph::build_positive_edges(&merged).map_err(|e| e.to_string())?;
        let plan = plan_split(&graph, &SplitConfig::default()).map_err(|e| e.to_string())?;
        let spec = copg::features::FeatureSpec::default();
        let emb = copg::features::TitleEmbeddings::new(spec.title_dim);
        let trainset = copg::features::TrainSet::new(merged.rows.len(), &plan.train_nodes);
        let fitted = copg::features::FittedFeatures::fit(&merged, &trainset, &emb, &spec, 0)
            .map_err(|e| e.to_string())?;
        let feats = fitted.assemble(&merged, &emb).map_err(|e| e.to_string())?;
        let data = Prepared::new(&graph, &plan, 1.0, 0).map_err(|e| e.to_string())?;
        let cfg = TrainConfig {
            epochs: Some(1),
            ..Default::default()
        };
        let out = train(
            ModelKind::Sage,
            &ModelsConfig::default(),
            &cfg,
            &data,
            Some(&feats),
            0,
        )
        .map_err(|e| e.to_string())?;
        Ok(format!(
            "counts {got:?}; {} items, {} edges; one GraphSAGE epoch, val AUC {:.4}, {:.0}s",
            merged.rows.len(),
            graph.num_edges(),
            out.best_val_auc,
            start.elapsed().as_secs_f64()
        ))
    })())
}

// ----------------------------------------------------------------

fn run(id: usize, f: impl FnOnce() -> Outcome) -> bool {
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(format!(
            "panicked: {}",
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        ))
    });
    let (tag, msg, ok) = match res {
        Ok(m) => ("PASS", m, true),
        Err(m) => ("FAIL", m, false),
    };
    let _ = writeln!(
        std::io::stderr(),
        "acceptance criterion {id:>2}: {tag}: {msg}"
    );
    ok
}

#[test]
fn acceptance() {
    let criteria: Vec<(usize, fn() -> Outcome)> = vec![
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let mut failed = Vec::new();
    for (id, f) in criteria {
        if !run(id, f) {
            failed.push(id);
        }
    }
    match criterion_12() {
        None => {
            let _ = writeln!(std::io::stderr(), "acceptance criterion 12: SKIPPED: set COPG_AMAZON_META to the amazon-meta.txt path");
        }
        Some(res) => {
            if !run(12, || res) {
                failed.push(12);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
