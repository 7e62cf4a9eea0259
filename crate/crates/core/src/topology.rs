//! Network topologies, k-shortest simple paths and binary routing matrices.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};
use core::fmt::Write;

use crate::matrix::DenseMatrix;
use crate::{Error, Result};

/// Bundled NSFNET T1 edge list (14 nodes, 21 links, unit weights).
pub const NSFNET_EDGES: &str = include_str!("../data/nsfnet.edges");

/// The bundled NSFNET topology.
pub fn nsfnet() -> Topology {
    parse_topology(NSFNET_EDGES).expect("bundled topology is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    /// Endpoint node indices with `a < b`.
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Connected, weighted, undirected simple graph.
///
/// Node indices follow the lexicographic order of the node identifiers;
/// link indices follow the order links were listed in.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<String>,
    links: Vec<Link>,
}

impl Topology {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link_label(&self, i: usize) -> String {
        let l = &self.links[i];
        format!("{}-{}", self.nodes[l.a], self.nodes[l.b])
    }

    /// Canonical edge-list text; parsing it yields `self` again.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for l in &self.links {
            let _ = writeln!(out, "{} {} {}", self.nodes[l.a], self.nodes[l.b], l.weight);
        }
        out
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, l) in self.links.iter().enumerate() {
            adj[l.a].push((l.b, i, l.weight));
            adj[l.b].push((l.a, i, l.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _, _)| v);
        }
        adj
    }
}

/// Parses `nodeA nodeB weight` lines; `#` starts a comment.
pub fn parse_topology(text: &str) -> Result<Topology> {
    let mut raw: Vec<(String, String, f64)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [a, b, w] = fields[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `nodeA nodeB weight`, got {} fields", fields.len()),
            });
        };
        if !a.is_ascii() || !b.is_ascii() {
            return Err(Error::Parse {
                line: line_no,
                message: "node ids must be ASCII".into(),
            });
        }
        let weight: f64 = w.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid weight `{w}`"),
        })?;
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::NonPositiveWeight { line: line_no });
        }
        if a == b {
            return Err(Error::SelfLoop {
                node: a.to_string(),
            });
        }
        raw.push((a.to_string(), b.to_string(), weight));
    }
    if raw.is_empty() {
        return Err(Error::InvalidArgument("topology has no links".into()));
    }

    let mut nodes: Vec<String> = raw
        .iter()
        .flat_map(|(a, b, _)| [a.clone(), b.clone()])
        .collect();
    nodes.sort();
    nodes.dedup();
    let index = |name: &str| nodes.binary_search_by(|n| n.as_str().cmp(name)).unwrap();

    let mut seen = BTreeSet::new();
    let mut links = Vec::with_capacity(raw.len());
    for (a, b, weight) in &raw {
        let (ia, ib) = (index(a), index(b));
        let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
        if !seen.insert((lo, hi)) {
            return Err(Error::DuplicateEdge {
                a: a.clone(),
                b: b.clone(),
            });
        }
        links.push(Link {
            a: lo,
            b: hi,
            weight: *weight,
        });
    }
    let topo = Topology { nodes, links };
    if !is_connected(&topo) {
        return Err(Error::Disconnected);
    }
    Ok(topo)
}

fn is_connected(t: &Topology) -> bool {
    let adj = t.adjacency();
    let mut seen = vec![false; t.node_count()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &(v, _, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// A simple path, as its node sequence and traversed link indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    pub weight: f64,
}

/// Ranked paths for one unordered node pair `src < dst`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPaths {
    pub src: usize,
    pub dst: usize,
    pub paths: Vec<Path>,
}

/// Up to `k` ranked paths for every unordered node pair, pairs in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub k: usize,
    pub node_names: Vec<String>,
    pub link_count: usize,
    pub pairs: Vec<PairPaths>,
}

impl PathSet {
    pub fn path_count(&self) -> usize {
        self.pairs.iter().map(|p| p.paths.len()).sum()
    }

    /// All paths in column order: pair-major, rank-minor.
    pub fn paths(&self) -> impl Iterator<Item = &Path> + '_ {
        self.pairs.iter().flat_map(|p| p.paths.iter())
    }

    /// Column labels `src-dst/rank` (rank is 1-based).
    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.path_count());
        for p in &self.pairs {
            for r in 0..p.paths.len() {
                out.push(format!(
                    "{}-{}/{}",
                    self.node_names[p.src],
                    self.node_names[p.dst],
                    r + 1
                ));
            }
        }
        out
    }

    /// Human-readable node sequence of every path, in column order.
    pub fn node_sequences(&self) -> Vec<String> {
        self.paths()
            .map(|p| {
                let names: Vec<&str> = p
                    .nodes
                    .iter()
                    .map(|&n| self.node_names[n].as_str())
                    .collect();
                names.join(" ")
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    weight: f64,
    nodes: Vec<usize>,
    links: Vec<usize>,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Searcher {
    adj: Vec<Vec<(usize, usize, f64)>>,
}

impl Searcher {
    /// Lexicographically smallest among the minimum-weight paths from
    /// `src` to `dst` avoiding the blocked nodes and links.
    fn lex_shortest(
        &self,
        src: usize,
        dst: usize,
        blocked_nodes: &[bool],
        blocked_links: &[bool],
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[dst] = 0.0;
        heap.push(Reverse((OrdF64(0.0), dst)));
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, link, w) in &self.adj[u] {
                if blocked_nodes[v] || blocked_links[link] {
                    continue;
                }
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        if !dist[src].is_finite() {
            return None;
        }
        let mut nodes = vec![src];
        let mut links = Vec::new();
        let mut u = src;
        while u != dst {
            let tol = 1e-12 * dist[u].max(1.0);
            let (v, link, _) = *self.adj[u]
                .iter()
                .filter(|&&(v, link, _)| !blocked_nodes[v] && !blocked_links[link])
                .find(|&&(v, _, w)| (w + dist[v] - dist[u]).abs() <= tol)?;
            nodes.push(v);
            links.push(link);
            u = v;
        }
        Some((nodes, links))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn path_weight(t: &Topology, links: &[usize]) -> f64 {
    links.iter().map(|&l| t.links[l].weight).sum()
}

/// Yen's algorithm for one ordered pair; ties in weight are broken by the
/// node sequence.
fn yen(t: &Topology, searcher: &Searcher, src: usize, dst: usize, k: usize) -> Vec<Path> {
    let n = t.node_count();
    let m = t.link_count();
    let Some((nodes, links)) = searcher.lex_shortest(src, dst, &vec![false; n], &vec![false; m])
    else {
        return Vec::new();
    };
    let weight = path_weight(t, &links);
    let mut found = vec![Candidate {
        weight,
        nodes,
        links,
    }];
    let mut pending: BTreeSet<Candidate> = BTreeSet::new();

    while found.len() < k {
        let prev = found.last().unwrap().clone();
        for i in 0..prev.nodes.len() - 1 {
            let spur = prev.nodes[i];
            let root = &prev.nodes[..=i];
            let mut blocked_links = vec![false; m];
            for p in &found {
                if p.nodes.len() > i + 1 && &p.nodes[..=i] == root {
                    blocked_links[p.links[i]] = true;
                }
            }
            let mut blocked_nodes = vec![false; n];
            for &r in &root[..i] {
                blocked_nodes[r] = true;
            }
            if let Some((spur_nodes, spur_links)) =
                searcher.lex_shortest(spur, dst, &blocked_nodes, &blocked_links)
            {
                let mut nodes = root[..i].to_vec();
                nodes.extend_from_slice(&spur_nodes);
                let mut links = prev.links[..i].to_vec();
                links.extend_from_slice(&spur_links);
                let weight = path_weight(t, &links);
                let cand = Candidate {
                    weight,
                    nodes,
                    links,
                };
                if !found.iter().any(|p| p.nodes == cand.nodes) {
                    pending.insert(cand);
                }
            }
        }
        match pending.pop_first() {
            Some(best) => found.push(best),
            None => break,
        }
    }
    found
        .into_iter()
        .map(|c| Path {
            nodes: c.nodes,
            links: c.links,
            weight: c.weight,
        })
        .collect()
}

/// The `k` (or fewer) minimum-weight simple paths for every unordered node
/// pair, sorted by weight and then node sequence.
pub fn k_shortest_paths(t: &Topology, k: usize) -> Result<PathSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let searcher = Searcher { adj: t.adjacency() };
    let n = t.node_count();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for src in 0..n {
        for dst in src + 1..n {
            pairs.push(PairPaths {
                src,
                dst,
                paths: yen(t, &searcher, src, dst, k),
            });
        }
    }
    Ok(PathSet {
        k,
        node_names: t.nodes.clone(),
        link_count: t.link_count(),
        pairs,
    })
}

/// Binary `M × L` map from path flows to link flows with no null column.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingMatrix(DenseMatrix);

impl RoutingMatrix {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if matrix.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument(
                "routing matrix entries must be 0 or 1".into(),
            ));
        }
        if let Some(j) = matrix.column_sums().iter().position(|&s| s == 0.0) {
            return Err(Error::ZeroColumnSum { column: j });
        }
        Ok(RoutingMatrix(matrix))
    }

    pub fn links(&self) -> usize {
        self.0.rows()
    }

    pub fn paths(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.0
    }

    /// Per column, the links it traverses.
    pub fn column_supports(&self) -> Vec<Vec<usize>> {
        (0..self.paths())
            .map(|j| {
                (0..self.links())
                    .filter(|&i| self.0[(i, j)] != 0.0)
                    .collect()
            })
            .collect()
    }
}

pub fn build_routing_matrix(p: &PathSet) -> Result<RoutingMatrix> {
    let cols = p.path_count();
    if cols == 0 {
        return Err(Error::InvalidArgument("path set is empty".into()));
    }
    let mut a = DenseMatrix::zeros(p.link_count, cols);
    for (j, path) in p.paths().enumerate() {
        for &l in &path.links {
            a[(l, j)] = 1.0;
        }
    }
    RoutingMatrix::new(a)
}

/// `M × (2^M − 1)` matrix whose columns are all nonzero binary `M`-tuples in
/// lexicographic order (first row is the most significant bit).
pub fn all_binary_tuples_matrix(m: usize) -> Result<RoutingMatrix> {
    if m == 0 || m > 16 {
        return Err(Error::InvalidArgument(format!(
            "M must be in 1..=16, got {m}"
        )));
    }
    let cols = (1usize << m) - 1;
    let mut a = DenseMatrix::zeros(m, cols);
    for c in 1..=cols {
        for i in 0..m {
            if (c >> (m - 1 - i)) & 1 == 1 {
                a[(i, c - 1)] = 1.0;
            }
        }
    }
    RoutingMatrix::new(a)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identifiability {
    pub identifiable: bool,
    pub duplicate_pairs: Vec<(usize, usize)>,
    pub null_columns: Vec<usize>,
}

/// Rates are identifiable when all columns are distinct and none is null.
pub fn check_identifiability(a: &DenseMatrix) -> Identifiability {
    let cols: Vec<Vec<u64>> = (0..a.cols())
        .map(|j| a.column(j).iter().map(|v| v.to_bits()).collect())
        .collect();
    let null_columns: Vec<usize> = (0..a.cols())
        .filter(|&j| a.column(j).iter().all(|&v| v == 0.0))
        .collect();
    let mut order: Vec<usize> = (0..cols.len()).collect();
    order.sort_by(|&x, &y| cols[x].cmp(&cols[y]).then(x.cmp(&y)));
    let mut duplicate_pairs = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && cols[order[end]] == cols[order[start]] {
            end += 1;
        }
        for x in start..end {
            for y in x + 1..end {
                duplicate_pairs.push((order[x], order[y]));
            }
        }
        start = end;
    }
    duplicate_pairs.sort_unstable();
    Identifiability {
        identifiable: duplicate_pairs.is_empty() && null_columns.is_empty(),
        duplicate_pairs,
        null_columns,
    }
}
