//! Dataset ingestion and task splits: link-prediction samples with negative
//! sampling at a 7:1:2 ratio, and node-classification masks
//! (500 validation / 1000 test / remainder train).

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Number of validation vertices in a node split.
pub const NODE_VAL_SIZE: usize = 500;
/// Number of test vertices in a node split.
pub const NODE_TEST_SIZE: usize = 1000;

/// One link-prediction sample: a vertex pair and its edge/non-edge label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkSample {
    pub x: u32,
    pub y: u32,
    pub label: bool,
}

/// Link-prediction split. `observed_graph` contains only the training
/// positive edges (all vertices retained), so neither message passing nor
/// torsion weights can leak validation/test edges.
#[derive(Clone, Debug)]
pub struct LinkSplit {
    pub train: Vec<LinkSample>,
    pub val: Vec<LinkSample>,
    pub test: Vec<LinkSample>,
    pub observed_graph: Graph,
}

/// Node-classification split: per-vertex labels plus disjoint
/// train/validation/test vertex masks.
#[derive(Clone, Debug)]
pub struct NodeSplit {
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub train: Vec<u32>,
    pub val: Vec<u32>,
    pub test: Vec<u32>,
}

/// Builds a link split: every edge becomes a positive sample, an equal
/// number of uniformly sampled non-edges become negatives, and both classes
/// are split 7:1:2 (floor rounding, remainders to train). Deterministic
/// under `seed`.
pub fn build_link_split(g: &Graph, seed: u64) -> Result<LinkSplit> {
    let num_edges = g.num_edges();
    if num_edges < 10 {
        return Err(Error::Dataset(format!(
            "link split needs at least 10 edges, graph has {num_edges}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut positives: Vec<(u32, u32)> = g.edges().to_vec();
    positives.shuffle(&mut rng);
    let negatives = sample_non_edges(g, num_edges, &mut rng)?;

    // Per-class counts: 1/10 validation, 2/10 test, remainder train.
    let val_count = num_edges / 10;
    let test_count = num_edges / 5;
    let train_count = num_edges - val_count - test_count;

    type Cut3 = (Vec<(u32, u32)>, Vec<(u32, u32)>, Vec<(u32, u32)>);
    let cut = |list: &[(u32, u32)]| -> Cut3 {
        (
            list[..train_count].to_vec(),
            list[train_count..train_count + val_count].to_vec(),
            list[train_count + val_count..].to_vec(),
        )
    };
    let (train_pos, val_pos, test_pos) = cut(&positives);
    let (train_neg, val_neg, test_neg) = cut(&negatives);

    let mut observed_graph = Graph::new(g.num_vertices(), train_pos.iter().copied())?;
    if let Some(features) = g.features() {
        observed_graph = observed_graph.with_features(features.clone())?;
    }

    let assemble = |pos: Vec<(u32, u32)>, neg: Vec<(u32, u32)>| -> Vec<LinkSample> {
        pos.into_iter()
            .map(|(x, y)| LinkSample { x, y, label: true })
            .chain(neg.into_iter().map(|(x, y)| LinkSample {
                x,
                y,
                label: false,
            }))
            .collect()
    };
    Ok(LinkSplit {
        train: assemble(train_pos, train_neg),
        val: assemble(val_pos, val_neg),
        test: assemble(test_pos, test_neg),
        observed_graph,
    })
}

/// Draws `count` distinct non-edges uniformly at random: rejection sampling
/// with a bounded retry budget, falling back to explicit enumeration of all
/// non-edges when the graph is dense enough to make rejection wasteful.
fn sample_non_edges(g: &Graph, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(u32, u32)>> {
    let n = g.num_vertices();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let non_edge_count = total_pairs - g.num_edges();
    if non_edge_count < count {
        return Err(Error::Dataset(format!(
            "graph too dense: {count} negatives requested, {non_edge_count} non-edges exist"
        )));
    }

    // Rejection sampling only when misses will be rare.
    if non_edge_count >= 2 * count && 4 * non_edge_count >= total_pairs {
        let mut chosen: HashSet<(u32, u32)> = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        let budget = 200usize.saturating_mul(count);
        for _ in 0..budget {
            if out.len() == count {
                break;
            }
            let x = rng.random_range(0..n as u32);
            let y = rng.random_range(0..n as u32);
            if x == y || g.has_edge(x, y) {
                continue;
            }
            let pair = (x.min(y), x.max(y));
            if chosen.insert(pair) {
                out.push(pair);
            }
        }
        if out.len() == count {
            return Ok(out);
        }
        // Budget exhausted (essentially impossible in this density regime):
        // fall through to the deterministic enumeration path.
    }

    let mut non_edges: Vec<(u32, u32)> = Vec::with_capacity(non_edge_count);
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if !g.has_edge(u, v) {
                non_edges.push((u, v));
            }
        }
    }
    non_edges.shuffle(rng);
    non_edges.truncate(count);
    Ok(non_edges)
}

/// Builds a node split: 500 validation vertices, 1000 test vertices, the
/// rest train, sampled uniformly. Deterministic under `seed`.
pub fn build_node_split(g: &Graph, seed: u64) -> Result<NodeSplit> {
    let labels = g
        .labels()
        .ok_or_else(|| Error::Dataset("node split requires labels".into()))?
        .to_vec();
    let num_classes = g.num_classes().unwrap_or(0);
    let n = g.num_vertices();
    if n < NODE_VAL_SIZE + NODE_TEST_SIZE + 1 {
        return Err(Error::Dataset(format!(
            "node split needs at least {} labeled vertices, graph has {n}",
            NODE_VAL_SIZE + NODE_TEST_SIZE + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut rng);
    let mut val: Vec<u32> = order[..NODE_VAL_SIZE].to_vec();
    let mut test: Vec<u32> = order[NODE_VAL_SIZE..NODE_VAL_SIZE + NODE_TEST_SIZE].to_vec();
    let mut train: Vec<u32> = order[NODE_VAL_SIZE + NODE_TEST_SIZE..].to_vec();
    val.sort_unstable();
    test.sort_unstable();
    train.sort_unstable();
    Ok(NodeSplit {
        labels,
        num_classes,
        train,
        val,
        test,
    })
}

/// Loads a dense feature matrix: one row per vertex, whitespace-separated
/// reals, row count must equal `n`.
pub fn load_features(path: impl AsRef<Path>, n: usize) -> Result<Mat> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: Vec<f64> = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::parse(path, idx + 1, format!("invalid feature value {tok:?}"))
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Dataset(format!(
            "feature file has {} rows for {n} vertices",
            rows.len()
        )));
    }
    Mat::from_rows(&rows)
}

/// Loads per-vertex integer class labels, one per line. When
/// `expected_classes` is given, labels must lie in `[0, expected_classes)`;
/// otherwise the class count is inferred as `max + 1`.
pub fn load_labels(
    path: impl AsRef<Path>,
    n: usize,
    expected_classes: Option<usize>,
) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let label: usize = trimmed.parse().map_err(|_| {
            Error::parse(path, idx + 1, format!("invalid label {trimmed:?}"))
        })?;
        if let Some(classes) = expected_classes {
            if label >= classes {
                return Err(Error::parse(
                    path,
                    idx + 1,
                    format!("label {label} out of range for {classes} classes"),
                ));
            }
        }
        labels.push(label);
    }
    if labels.len() != n {
        return Err(Error::Dataset(format!(
            "label file has {} entries for {n} vertices",
            labels.len()
        )));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A shifted 20-edge cycle: sparse, connected, 20 positives.
    fn cycle20() -> Graph {
        let edges: Vec<(u32, u32)> = (0..20u32).map(|i| (i, (i + 1) % 20)).collect();
        Graph::new(20, edges).unwrap()
    }

    #[test]
    fn split_sizes_follow_7_1_2() {
        let split = build_link_split(&cycle20(), 7).unwrap();
        // 20 positives: per class 2 val, 4 test, 14 train.
        assert_eq!(split.train.len(), 28);
        assert_eq!(split.val.len(), 4);
        assert_eq!(split.test.len(), 8);
        for part in [&split.train, &split.val, &split.test] {
            let pos = part.iter().filter(|s| s.label).count();
            assert_eq!(pos * 2, part.len(), "classes balanced within each part");
        }
    }

    #[test]
    fn observed_graph_contains_only_train_positives() {
        let g = cycle20();
        let split = build_link_split(&g, 3).unwrap();
        let observed = &split.observed_graph;
        assert_eq!(observed.num_vertices(), g.num_vertices());
        assert_eq!(
            observed.num_edges(),
            split.train.iter().filter(|s| s.label).count()
        );
        for s in split.val.iter().chain(&split.test) {
            if s.label {
                assert!(
                    !observed.has_edge(s.x, s.y),
                    "held-out edge leaked into observed graph"
                );
            }
        }
        for s in &split.train {
            if s.label {
                assert!(observed.has_edge(s.x, s.y));
            }
        }
    }

    #[test]
    fn negatives_are_valid_non_edges_and_disjoint() {
        let g = cycle20();
        let split = build_link_split(&g, 11).unwrap();
        let mut seen = HashSet::new();
        for s in split.train.iter().chain(&split.val).chain(&split.test) {
            let pair = (s.x.min(s.y), s.x.max(s.y));
            assert!(seen.insert(pair), "pair {pair:?} appears twice");
            if !s.label {
                assert!(!g.has_edge(s.x, s.y), "negative {pair:?} is an edge");
                assert_ne!(s.x, s.y);
            }
        }
        let total_pos: usize = split
            .train
            .iter()
            .chain(&split.val)
            .chain(&split.test)
            .filter(|s| s.label)
            .count();
        assert_eq!(total_pos, g.num_edges());
    }

    #[test]
    fn split_is_deterministic_under_seed() {
        let g = cycle20();
        let a = build_link_split(&g, 42).unwrap();
        let b = build_link_split(&g, 42).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        assert_eq!(a.test, b.test);
        let c = build_link_split(&g, 43).unwrap();
        assert_ne!(a.train, c.train, "different seed, different shuffle");
    }

    #[test]
    fn dense_graph_without_enough_non_edges_is_rejected() {
        // K5 has 10 edges and zero non-edges.
        let mut edges = Vec::new();
        for u in 0..5u32 {
            for v in (u + 1)..5 {
                edges.push((u, v));
            }
        }
        let g = Graph::new(5, edges).unwrap();
        assert!(matches!(
            build_link_split(&g, 1).unwrap_err(),
            Error::Dataset(_)
        ));
    }

    #[test]
    fn tiny_graphs_are_rejected() {
        let g = Graph::new(4, [(0, 1), (1, 2)]).unwrap();
        assert!(build_link_split(&g, 1).is_err());
    }

    #[test]
    fn enumeration_fallback_produces_valid_negatives() {
        // Circulant graph C12(1,2): 24 edges, 42 non-edges. 42 < 2·24, so
        // the rejection-sampling guard declines and the enumeration path
        // runs instead.
        let edges: Vec<(u32, u32)> = (0..12u32)
            .flat_map(|i| [(i, (i + 1) % 12), (i, (i + 2) % 12)])
            .collect();
        let g = Graph::new(12, edges).unwrap();
        let split = build_link_split(&g, 9).unwrap();
        let mut negatives = 0;
        for s in split.train.iter().chain(&split.val).chain(&split.test) {
            if !s.label {
                negatives += 1;
                assert!(!g.has_edge(s.x, s.y));
                assert_ne!(s.x, s.y);
            }
        }
        assert_eq!(negatives, 24);
    }

    fn labeled_graph(n: usize) -> Graph {
        let edges: Vec<(u32, u32)> = (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        Graph::new(n, edges).unwrap().with_labels(labels).unwrap()
    }

    #[test]
    fn node_split_sizes_and_disjointness() {
        let g = labeled_graph(1600);
        let split = build_node_split(&g, 5).unwrap();
        assert_eq!(split.val.len(), 500);
        assert_eq!(split.test.len(), 1000);
        assert_eq!(split.train.len(), 100);
        let mut all: Vec<u32> = split
            .train
            .iter()
            .chain(&split.val)
            .chain(&split.test)
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 1600, "masks are disjoint and cover all vertices");
        assert_eq!(split.num_classes, 3);
    }

    #[test]
    fn node_split_requires_enough_vertices_and_labels() {
        let g = labeled_graph(1400);
        assert!(build_node_split(&g, 1).is_err());
        let unlabeled = Graph::new(1600, (0..1599u32).map(|i| (i, i + 1))).unwrap();
        assert!(build_node_split(&unlabeled, 1).is_err());
    }

    #[test]
    fn node_split_deterministic_under_seed() {
        let g = labeled_graph(1700);
        let a = build_node_split(&g, 99).unwrap();
        let b = build_node_split(&g, 99).unwrap();
        assert_eq!(a.val, b.val);
        assert_eq!(a.test, b.test);
        let c = build_node_split(&g, 100).unwrap();
        assert_ne!(a.val, c.val);
    }

    #[test]
    fn feature_and_label_loading() {
        use std::io::Write as _;
        let dir = tempfile::tempdir().unwrap();

        let fpath = dir.path().join("features.txt");
        let mut f = std::fs::File::create(&fpath).unwrap();
        writeln!(f, "0.5 1.0\n-1.5 2.25\n0 3").unwrap();
        let m = load_features(&fpath, 3).unwrap();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), 2);
        assert_eq!(m[(1, 0)], -1.5);
        assert!(load_features(&fpath, 4).is_err());

        let lpath = dir.path().join("labels.txt");
        let mut f = std::fs::File::create(&lpath).unwrap();
        writeln!(f, "0\n2\n1").unwrap();
        let labels = load_labels(&lpath, 3, None).unwrap();
        assert_eq!(labels, vec![0, 2, 1]);
        assert!(load_labels(&lpath, 3, Some(2)).is_err(), "label 2 ≥ 2 classes");
        assert!(load_labels(&lpath, 5, None).is_err());

        let bad = dir.path().join("bad.txt");
        let mut f = std::fs::File::create(&bad).unwrap();
        writeln!(f, "0\nnope\n1").unwrap();
        assert!(matches!(
            load_labels(&bad, 3, None).unwrap_err(),
            Error::Parse { .. }
        ));
    }
}
