//! Small graphs with known structure, for oracle tests and the `synth`
//! subcommand.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::Matrix;
use crate::features::FeatureMatrix;
use crate::graph::{draw_non_edges, EdgeList, Graph, LabeledEdgeSet, NodeId};
use crate::rng::rng_from;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphKind {
    PlantedPartition {
        n: usize,
        clusters: usize,
        p_in: f64,
        p_out: f64,
    },
    Path {
        n: usize,
    },
    /// Node 0 joined to nodes `1..n`.
    Star {
        n: usize,
    },
    Triangle,
    ErdosRenyi {
        n: usize,
        p: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureMode {
    /// Cluster centroid from N(0, 1) plus N(0, noise^2) per entry.
    ClusterSignal {
        dim: usize,
        noise: f64,
    },
    Random {
        dim: usize,
    },
    OnehotId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub graph: GraphKind,
    pub features: FeatureMode,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub graph: Graph,
    pub features: FeatureMatrix,
    /// Every edge as a positive plus as many distinct non-edges as exist,
    /// up to the number of edges.
    pub labeled: LabeledEdgeSet,
    /// Cluster of each node; all zeros outside planted partitions.
    pub clusters: Vec<usize>,
}

impl SyntheticSpec {
    pub fn planted(
        n: usize,
        clusters: usize,
        p_in: f64,
        p_out: f64,
        dim: usize,
        noise: f64,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            graph: GraphKind::PlantedPartition {
                n,
                clusters,
                p_in,
                p_out,
            },
            features: FeatureMode::ClusterSignal { dim, noise },
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        match &self.graph {
            GraphKind::PlantedPartition {
                n,
                clusters,
                p_in,
                p_out,
            } => {
                if *clusters == 0 || clusters > n {
                    return Err(format!("clusters must be in 1..={n}, got {clusters}"));
                }
                if !(prob(*p_in) && prob(*p_out) && p_out < p_in) {
                    return Err(format!(
                        "need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}"
                    ));
                }
            }
            GraphKind::ErdosRenyi { p, .. } if !prob(*p) => {
                return Err(format!("p must be in [0, 1], got {p}"))
            }
            GraphKind::Path { n } | GraphKind::Star { n } if *n == 0 => {
                return Err("n must be >= 1".into())
            }
            _ => {}
        }
        match self.features {
            FeatureMode::ClusterSignal { dim, noise } if dim == 0 || !(noise >= 0.0) => Err(
                format!("cluster_signal needs dim >= 1 and noise >= 0, got {dim}, {noise}"),
            ),
            FeatureMode::Random { dim: 0 } => Err("random features need dim >= 1".into()),
            _ => Ok(()),
        }
    }
}

fn bernoulli_pairs(
    n: usize,
    rng: &mut crate::rng::Rng,
    p: impl Fn(usize, usize) -> f64,
) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p(u, v) {
                out.push((u as NodeId, v as NodeId));
            }
        }
    }
    out
}

pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic, Error> {
    spec.validate().map_err(Error::Contract)?;
    let mut rng = rng_from(&[spec.seed, 0x5C7]);
    let (n, clusters, pairs) = match spec.graph {
        GraphKind::PlantedPartition {
            n,
            clusters,
            p_in,
            p_out,
        } => {
            let c: Vec<usize> = (0..n).map(|u| u * clusters / n).collect();
            let pairs =
                bernoulli_pairs(n, &mut rng, |u, v| if c[u] == c[v] { p_in } else { p_out });
            (n, c, pairs)
        }
        GraphKind::ErdosRenyi { n, p } => (n, vec![0; n], bernoulli_pairs(n, &mut rng, |_, _| p)),
        GraphKind::Path { n } => (
            n,
            vec![0; n],
            (1..n as NodeId).map(|v| (v - 1, v)).collect(),
        ),
        GraphKind::Star { n } => (n, vec![0; n], (1..n as NodeId).map(|v| (0, v)).collect()),
        GraphKind::Triangle => (3, vec![0; 3], vec![(0, 1), (1, 2), (0, 2)]),
    };
    let graph = Graph::from_edges(n, &EdgeList::from_pairs(pairs))?;

    let data = match spec.features {
        FeatureMode::ClusterSignal { dim, noise } => {
            let k = clusters.iter().max().map_or(1, |m| m + 1);
            let std = Normal::new(0.0, 1.0).expect("unit normal");
            let centroids: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..dim).map(|_| std.sample(&mut rng)).collect())
                .collect();
            let jitter = Normal::new(0.0, noise).expect("noise >= 0");
            let rows: Vec<Vec<f64>> = clusters
                .iter()
                .map(|&c| {
                    centroids[c]
                        .iter()
                        .map(|m| m + jitter.sample(&mut rng))
                        .collect()
                })
                .collect();
            Matrix::from_rows(&rows)
        }
        FeatureMode::Random { dim } => {
            let std = Normal::new(0.0, 1.0).expect("unit normal");
            Matrix::from_vec(n, dim, (0..n * dim).map(|_| std.sample(&mut rng)).collect())
        }
        FeatureMode::OnehotId => Matrix::identity(n),
    };

    let edges = graph.edges();
    let available = n * n.saturating_sub(1) / 2 - edges.len();
    let all: Vec<NodeId> = (0..n as NodeId).collect();
    let neg = draw_non_edges(
        &graph,
        &all,
        edges.len().min(available),
        crate::rng::derive(&[spec.seed, 0x4E6]),
    )?;
    let mut labeled = LabeledEdgeSet::default();
    for e in edges.iter() {
        labeled.push(*e, 1);
    }
    for e in neg.iter() {
        labeled.push(*e, 0);
    }
    Ok(Synthetic {
        graph,
        features: FeatureMatrix::plain(data),
        labeled,
        clusters,
    })
}
