//! Undirected simple graphs in compressed-row form, edge-list ingestion,
//! Jaccard neighborhood-overlap weights and Erdős–Rényi generation.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Immutable undirected graph with dense node ids `0..node_count`.
///
/// Neighbor lists are sorted ascending and contain no self-loops or
/// duplicates; each undirected edge appears in both endpoint lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    edge_count: usize,
}

/// What was discarded while building a [`Graph`] from raw edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleaningStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    /// Builds a simple graph from an arbitrary edge list, dropping self-loops
    /// and merging duplicates (in either orientation).
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<(Self, CleaningStats)> {
        let mut stats = CleaningStats::default();
        let mut pairs = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= node_count {
                    return Err(Error::InvalidNode { node, node_count });
                }
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            pairs.push((u.min(v), u.max(v)));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        stats.duplicates = before - pairs.len();

        let mut degree = vec![0usize; node_count];
        for &(u, v) in &pairs {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..node_count].to_vec();
        let mut neighbors = vec![0usize; offsets[node_count]];
        // Pairs are sorted by (min, max), so filling in this order leaves each
        // list sorted except for the entries pushed as the larger endpoint.
        for &(u, v) in &pairs {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for v in 0..node_count {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }

        Ok((
            Graph {
                offsets,
                neighbors,
                edge_count: pairs.len(),
            },
            stats,
        ))
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && v < self.node_count() && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidNode {
                node: v,
                node_count: self.node_count(),
            })
        }
    }

    /// Iterates every undirected edge once as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Position of `v` in the flattened adjacency array of `u`.
    fn slot(&self, u: usize, v: usize) -> Option<usize> {
        self.neighbors(u).binary_search(&v).ok().map(|i| self.offsets[u] + i)
    }
}

/// Delimiter of an edge-list file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeListFormat {
    Csv,
    Tsv,
    Whitespace,
    /// Accept commas, tabs or runs of whitespace.
    #[default]
    Auto,
}

impl std::str::FromStr for EdgeListFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "tsv" => Ok(Self::Tsv),
            "whitespace" | "ws" => Ok(Self::Whitespace),
            "auto" => Ok(Self::Auto),
            other => Err(Error::invalid(format!("unknown edge-list format `{other}`"))),
        }
    }
}

impl EdgeListFormat {
    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        let tokens: Vec<&str> = match self {
            Self::Csv => line.split(',').collect(),
            Self::Tsv => line.split('\t').collect(),
            Self::Whitespace => line.split_whitespace().collect(),
            Self::Auto => line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .collect(),
        };
        tokens.into_iter().map(str::trim).collect()
    }
}

/// A graph together with the mapping from dense ids back to the labels used
/// in the source file.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `original_ids[dense] = original label`.
    pub original_ids: Vec<i64>,
    pub stats: CleaningStats,
}

impl LoadedGraph {
    /// Original label to dense id.
    pub fn id_map(&self) -> HashMap<i64, usize> {
        self.original_ids
            .iter()
            .enumerate()
            .map(|(dense, &orig)| (orig, dense))
            .collect()
    }
}

pub fn load_edge_list(path: impl AsRef<Path>, format: EdgeListFormat) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, format, path)
}

/// Parses edge-list text. `#` starts a comment line; a single non-numeric
/// header line (e.g. `node_1,node_2`) is tolerated before the first edge.
pub fn parse_edge_list(text: &str, format: EdgeListFormat, source: &Path) -> Result<LoadedGraph> {
    let mut dense: HashMap<i64, usize> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut edges = Vec::new();
    let mut seen_data = false;

    let mut intern = |label: i64| -> usize {
        *dense.entry(label).or_insert_with(|| {
            original_ids.push(label);
            original_ids.len() - 1
        })
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = format.split(line);
        let parse_err = |message: String| Error::Parse {
            path: PathBuf::from(source),
            line: idx + 1,
            message,
        };
        if tokens.len() != 2 {
            return Err(parse_err(format!(
                "expected two node ids, found {} field(s): `{line}`",
                tokens.len()
            )));
        }
        let parsed: Vec<Option<i64>> = tokens.iter().map(|t| t.parse().ok()).collect();
        match (parsed[0], parsed[1]) {
            (Some(a), Some(b)) => {
                seen_data = true;
                let u = intern(a);
                let v = intern(b);
                edges.push((u, v));
            }
            (None, None) if !seen_data => {
                // header row
                seen_data = true;
            }
            _ => return Err(parse_err(format!("non-integer node id in `{line}`"))),
        }
    }

    if edges.is_empty() {
        return Err(Error::EmptyGraph(source.to_path_buf()));
    }
    let (graph, stats) = Graph::from_edges(original_ids.len(), &edges)?;
    if stats.self_loops > 0 || stats.duplicates > 0 {
        log::info!(
            "{}: dropped {} self-loop(s), merged {} duplicate edge(s)",
            source.display(),
            stats.self_loops,
            stats.duplicates
        );
    }
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph(source.to_path_buf()));
    }
    Ok(LoadedGraph {
        graph,
        original_ids,
        stats,
    })
}

/// Jaccard overlap `|N(u) ∩ N(v)| / |N(u) ∪ N(v)|` of open neighborhoods.
/// The endpoints are left in each other's sets. Returns 0 for an empty union.
pub fn jaccard_overlap(g: &Graph, u: usize, v: usize) -> Result<f64> {
    g.check_node(u)?;
    g.check_node(v)?;
    if u == v {
        return Err(Error::invalid("jaccard overlap needs two distinct nodes"));
    }
    Ok(sorted_jaccard(g.neighbors(u), g.neighbors(v)))
}

fn sorted_jaccard(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// Per-edge weights stored in adjacency order, so `weight(u, v)` and
/// `weight(v, u)` read the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeightTable {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl EdgeWeightTable {
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        if u + 1 >= self.offsets.len() {
            return None;
        }
        let row = &self.neighbors[self.offsets[u]..self.offsets[u + 1]];
        row.binary_search(&v).ok().map(|i| self.weights[self.offsets[u] + i])
    }

    pub fn len(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn compute_edge_weights(g: &Graph) -> EdgeWeightTable {
    let mut weights = vec![0.0; g.neighbors.len()];
    for (u, v) in g.edges() {
        let w = sorted_jaccard(g.neighbors(u), g.neighbors(v));
        weights[g.slot(u, v).expect("edge slot")] = w;
        weights[g.slot(v, u).expect("edge slot")] = w;
    }
    EdgeWeightTable {
        offsets: g.offsets.clone(),
        neighbors: g.neighbors.clone(),
        weights,
    }
}

/// G(n, p) with `p = avg_degree / (n - 1)`, sampled by geometric skipping
/// over the lower-triangular pair sequence in O(n + m) time.
pub fn erdos_renyi(n: usize, avg_degree: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid(format!("erdos_renyi needs n >= 2, got {n}")));
    }
    if !(avg_degree > 0.0 && avg_degree <= (n - 1) as f64) {
        return Err(Error::invalid(format!(
            "average degree must lie in (0, {}], got {avg_degree}",
            n - 1
        )));
    }
    let p = avg_degree / (n - 1) as f64;
    let mut edges = Vec::new();
    if p >= 1.0 {
        for v in 1..n {
            for w in 0..v {
                edges.push((v, w));
            }
        }
    } else {
        let mut rng = stream_rng(seed, Stream::Generator, 0, n as u64);
        let log_q = (1.0 - p).ln();
        let mut v: usize = 1;
        let mut w: i64 = -1;
        while v < n {
            let r: f64 = rng.random();
            w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((v, w as usize));
            }
        }
    }
    Ok(Graph::from_edges(n, &edges)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn parse(text: &str) -> LoadedGraph {
        parse_edge_list(text, EdgeListFormat::Auto, Path::new("<test>")).unwrap()
    }

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap().0
    }

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap().0
    }

    #[test]
    fn loads_triangle() {
        let g = parse("0,1\n1,2\n2,0\n").graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn drops_self_loops_and_merges_duplicates() {
        let loaded = parse("0,0\n0,1\n1,0\n");
        assert_eq!(loaded.graph.node_count(), 2);
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(
            loaded.stats,
            CleaningStats {
                self_loops: 1,
                duplicates: 1
            }
        );
    }

    #[test]
    fn compacts_ids_in_first_appearance_order() {
        let loaded = parse("5,9\n9,7\n");
        assert_eq!(loaded.original_ids, vec![5, 9, 7]);
        let map = loaded.id_map();
        assert_eq!((map[&5], map[&9], map[&7]), (0, 1, 2));
        let edges: Vec<_> = loaded.graph.edges().collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn accepts_all_delimiters_comments_and_header() {
        let csv = parse_edge_list("# c\nnode_1,node_2\n1,2\n", EdgeListFormat::Csv, Path::new("x")).unwrap();
        let tsv = parse_edge_list("1\t2\n", EdgeListFormat::Tsv, Path::new("x")).unwrap();
        let ws = parse_edge_list("1   2\n", EdgeListFormat::Whitespace, Path::new("x")).unwrap();
        for g in [csv, tsv, ws] {
            assert_eq!(g.graph.edge_count(), 1);
        }
    }

    #[test]
    fn reports_malformed_line_number() {
        let err = parse_edge_list("0,1\n# ok\n1,x\n", EdgeListFormat::Auto, Path::new("g.csv")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_edge_list("0,1,2\n", EdgeListFormat::Auto, Path::new("g.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn rejects_empty_graphs_and_missing_files() {
        let err = parse_edge_list("# nothing\n", EdgeListFormat::Auto, Path::new("e")).unwrap_err();
        assert!(matches!(err, Error::EmptyGraph(_)));
        let err = parse_edge_list("3,3\n", EdgeListFormat::Auto, Path::new("e")).unwrap_err();
        assert!(matches!(err, Error::EmptyGraph(_)));
        let err = load_edge_list("/nonexistent/edges.csv", EdgeListFormat::Auto).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn jaccard_hand_enumerated_cases() {
        assert_abs_diff_eq!(jaccard_overlap(&triangle(), 0, 1).unwrap(), 1.0 / 3.0);
        assert_abs_diff_eq!(jaccard_overlap(&path3(), 0, 2).unwrap(), 1.0);
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap().0;
        assert_eq!(jaccard_overlap(&star, 0, 2).unwrap(), 0.0);
        assert!(jaccard_overlap(&star, 0, 9).is_err());
        assert!(jaccard_overlap(&star, 1, 1).is_err());
    }

    #[test]
    fn jaccard_of_isolated_pair_is_zero() {
        let g = Graph::from_edges(4, &[(0, 1)]).unwrap().0;
        assert_eq!(jaccard_overlap(&g, 2, 3).unwrap(), 0.0);
    }

    #[test]
    fn edge_weight_hand_enumerated_cases() {
        let tri = compute_edge_weights(&triangle());
        for (u, v) in [(0, 1), (1, 2), (0, 2)] {
            assert_abs_diff_eq!(tri.weight(u, v).unwrap(), 1.0 / 3.0);
        }
        let path = compute_edge_weights(&path3());
        assert_eq!(path.weight(0, 1), Some(0.0));
        assert_eq!(path.weight(2, 1), Some(0.0));
        assert_eq!(path.weight(0, 2), None);

        let k4 = erdos_renyi(4, 3.0, 0).unwrap();
        let w = compute_edge_weights(&k4);
        assert_eq!(w.len(), 6);
        for (u, v) in k4.edges() {
            assert_abs_diff_eq!(w.weight(u, v).unwrap(), 0.5);
        }
    }

    #[test]
    fn erdos_renyi_full_probability_is_complete() {
        let g = erdos_renyi(4, 3.0, 11).unwrap();
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn erdos_renyi_mean_degree_concentrates() {
        let g = erdos_renyi(1 << 10, 20.0, 7).unwrap();
        let mean = 2.0 * g.edge_count() as f64 / g.node_count() as f64;
        assert!((18.0..=22.0).contains(&mean), "mean degree {mean}");
    }

    #[test]
    fn erdos_renyi_is_deterministic() {
        assert_eq!(erdos_renyi(500, 8.0, 3).unwrap(), erdos_renyi(500, 8.0, 3).unwrap());
        assert_ne!(erdos_renyi(500, 8.0, 3).unwrap(), erdos_renyi(500, 8.0, 4).unwrap());
    }

    #[test]
    fn erdos_renyi_rejects_bad_parameters() {
        assert!(erdos_renyi(1, 0.5, 0).is_err());
        assert!(erdos_renyi(10, 0.0, 0).is_err());
        assert!(erdos_renyi(10, 12.0, 0).is_err());
    }
}
