//! Undirected graphs with optional boolean node features, relabeling by
//! permutations, and brute-force canonical forms for small graphs.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Largest node count accepted by the brute-force routines by default.
pub const DEFAULT_SMALL_N_CAP: usize = 8;

/// An undirected graph stored as a dense boolean adjacency matrix.
///
/// The diagonal is `true` for every node; it marks node existence and is
/// never treated as a self loop.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<bool>,
    num_features: usize,
    features: Option<Vec<bool>>,
}

impl UndirectedGraph {
    /// Graph on `n` nodes without edges or features.
    pub fn empty(n: usize) -> Self {
        let mut adj = vec![false; n * n];
        for v in 0..n {
            adj[v * n + v] = true;
        }
        UndirectedGraph { n, adj, num_features: 0, features: None }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = UndirectedGraph::empty(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::domain(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::domain(format!("self loop at node {u}")));
            }
            g.set_edge(u, v, true);
        }
        Ok(g)
    }

    /// Builds a graph from a full adjacency matrix; the matrix must be
    /// symmetric with a true diagonal.
    pub fn from_matrix(n: usize, adj: Vec<bool>) -> Result<Self> {
        if adj.len() != n * n {
            return Err(Error::domain(format!("adjacency has {} entries, expected {}", adj.len(), n * n)));
        }
        for u in 0..n {
            if !adj[u * n + u] {
                return Err(Error::domain(format!("diagonal entry ({u}, {u}) must be 1")));
            }
            for v in u + 1..n {
                if adj[u * n + v] != adj[v * n + u] {
                    return Err(Error::domain(format!("adjacency not symmetric at ({u}, {v})")));
                }
            }
        }
        Ok(UndirectedGraph { n, adj, num_features: 0, features: None })
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::from_edges(n, &edges).expect("valid path")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, &edges).expect("valid cycle")
    }

    pub fn star(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
        Self::from_edges(n, &edges).expect("valid star")
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::from_edges(n, &edges).expect("valid complete graph")
    }

    /// Attaches an `n x f` boolean feature matrix given row by row.
    pub fn with_features(mut self, rows: Vec<Vec<bool>>) -> Result<Self> {
        if rows.len() != self.n {
            return Err(Error::domain(format!("{} feature rows for {} nodes", rows.len(), self.n)));
        }
        let f = rows.first().map_or(0, Vec::len);
        if let Some((v, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != f) {
            return Err(Error::domain(format!("feature row {v} has wrong length")));
        }
        self.num_features = f;
        self.features = Some(rows.into_iter().flatten().collect());
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn has_features(&self) -> bool {
        self.features.is_some()
    }

    pub fn feature(&self, v: usize, f: usize) -> bool {
        self.features.as_ref().is_some_and(|x| x[v * self.num_features + f])
    }

    pub fn feature_row(&self, v: usize) -> Vec<bool> {
        (0..self.num_features).map(|f| self.feature(v, f)).collect()
    }

    /// Raw adjacency entry, including the diagonal.
    pub fn adj(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    /// True iff `u != v` and the two nodes share an edge.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.adj(u, v)
    }

    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) {
        debug_assert_ne!(u, v);
        self.adj[u * self.n + v] = present;
        self.adj[v * self.n + u] = present;
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&u| self.has_edge(u, v))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.adj(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Canonical form; see [`canonical_form`].
    pub fn canonical_form(&self) -> Result<Vec<u8>> {
        canonical_form(self)
    }
}

/// A bijection on `{0, ..., n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || seen[m] {
                return Err(Error::domain(format!("{map:?} is not a permutation")));
            }
            seen[m] = true;
        }
        Ok(Permutation { map })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { map: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { map: inv }
    }
}

/// Iterates every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Permutations {
    Permutations { next: Some((0..n).collect()) }
}

pub struct Permutations {
    next: Option<Vec<usize>>,
}

impl Iterator for Permutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        if next_permutation(&mut succ) {
            self.next = Some(succ);
        }
        Some(cur)
    }
}

/// Advances `p` to its lexicographic successor; false when `p` was last.
pub fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(i) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Relabels `g` so that new node `v` is old node `p(v)`:
/// `A'[u][v] = A[p(u)][p(v)]` and `X'[v] = X[p(v)]`.
pub fn permute(g: &UndirectedGraph, p: &Permutation) -> Result<UndirectedGraph> {
    if p.len() != g.n {
        return Err(Error::domain(format!("permutation of size {} for graph of size {}", p.len(), g.n)));
    }
    let n = g.n;
    let mut adj = vec![false; n * n];
    for u in 0..n {
        for v in 0..n {
            adj[u * n + v] = g.adj(p.apply(u), p.apply(v));
        }
    }
    let features = g.features.as_ref().map(|_| {
        (0..n).flat_map(|v| g.feature_row(p.apply(v))).collect::<Vec<_>>()
    });
    Ok(UndirectedGraph { n, adj, num_features: g.num_features, features })
}

/// Brute-force canonical form of a graph with node and edge labels.
///
/// Under a relabeling `perm` (new node `i` is old node `perm[i]`) the
/// encoding is `n`, then for each new node `i` its label followed by the
/// edge labels to new nodes `0..i`. The canonical form is the smallest
/// encoding over all `n!` relabelings; prefixes that already exceed the best
/// encoding are pruned. Equal outputs iff the labeled graphs are isomorphic.
pub fn canonical_form_labeled<E>(n: usize, node_labels: &[Vec<u8>], edge_label: E, cap: usize) -> Result<Vec<u8>>
where
    E: Fn(usize, usize) -> u8,
{
    if n > cap {
        return Err(Error::Unsupported(format!("canonical form needs n <= {cap}, got {n}")));
    }
    debug_assert_eq!(node_labels.len(), n);
    let mut edges = vec![0u8; n * n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                edges[u * n + v] = edge_label(u, v);
            }
        }
    }
    let mut search = CanonSearch {
        n,
        labels: node_labels,
        edges: &edges,
        perm: Vec::with_capacity(n),
        used: vec![false; n],
        buf: vec![n as u8],
        best: None,
    };
    search.descend(false);
    Ok(search.best.unwrap_or_else(|| vec![n as u8]))
}

struct CanonSearch<'a> {
    n: usize,
    labels: &'a [Vec<u8>],
    edges: &'a [u8],
    perm: Vec<usize>,
    used: Vec<bool>,
    buf: Vec<u8>,
    best: Option<Vec<u8>>,
}

impl CanonSearch<'_> {
    /// `below` is true once the current prefix is strictly smaller than the
    /// matching prefix of the best encoding.
    fn descend(&mut self, below: bool) {
        let depth = self.perm.len();
        if depth == self.n {
            if self.best.as_ref().is_none_or(|b| self.buf < *b) {
                self.best = Some(self.buf.clone());
            }
            return;
        }
        for c in 0..self.n {
            if self.used[c] {
                continue;
            }
            let mark = self.buf.len();
            self.buf.extend_from_slice(&self.labels[c]);
            for &p in &self.perm {
                self.buf.push(self.edges[p * self.n + c]);
            }
            let next_below = match (&self.best, below) {
                (Some(best), false) => match self.buf[mark..].cmp(&best[mark..self.buf.len()]) {
                    std::cmp::Ordering::Greater => {
                        self.buf.truncate(mark);
                        continue;
                    }
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Equal => false,
                },
                _ => true,
            };
            self.used[c] = true;
            self.perm.push(c);
            self.descend(next_below);
            self.perm.pop();
            self.used[c] = false;
            self.buf.truncate(mark);
        }
    }
}

/// Canonical form of a graph together with its features.
pub fn canonical_form(g: &UndirectedGraph) -> Result<Vec<u8>> {
    canonical_form_with_cap(g, DEFAULT_SMALL_N_CAP)
}

pub fn canonical_form_with_cap(g: &UndirectedGraph, cap: usize) -> Result<Vec<u8>> {
    let labels: Vec<Vec<u8>> = (0..g.n).map(|v| g.feature_row(v).into_iter().map(u8::from).collect()).collect();
    canonical_form_labeled(g.n, &labels, |u, v| u8::from(g.adj(u, v)), cap)
}

pub fn is_isomorphic(g1: &UndirectedGraph, g2: &UndirectedGraph) -> Result<bool> {
    if g1.n != g2.n || g1.num_features != g2.num_features {
        return Ok(false);
    }
    Ok(canonical_form(g1)? == canonical_form(g2)?)
}

/// One representative per isomorphism class of connected featureless
/// graphs on `n` nodes.
pub fn connected_graphs(n: usize) -> Result<Vec<UndirectedGraph>> {
    if n > 6 {
        return Err(Error::Unsupported(format!("exhaustive graph generation needs n <= 6, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut seen = std::collections::BTreeMap::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
        let g = UndirectedGraph::from_edges(n, &edges)?;
        if !g.is_connected() {
            continue;
        }
        seen.entry(canonical_form(&g)?).or_insert(g);
    }
    Ok(seen.into_values().collect())
}

/// Parses the plain-text fixture format: a header line `N F`, then `N`
/// feature rows when `F > 0`, then `N` adjacency rows, entries `0`/`1`
/// separated by whitespace. Lines starting with `#` are ignored.
pub fn parse_graph_fixture(text: &str) -> Result<UndirectedGraph> {
    let mut lines = FixtureLines::new(text);
    let (n, f) = lines.header()?;
    let features = if f > 0 { Some(lines.matrix(n, f, "feature")?) } else { None };
    let adj = lines.matrix(n, n, "adjacency")?;
    lines.finish()?;
    let mut g = UndirectedGraph::from_matrix(n, adj.into_iter().flatten().collect())?;
    if let Some(rows) = features {
        g = g.with_features(rows)?;
    }
    Ok(g)
}

pub fn format_graph_fixture(g: &UndirectedGraph) -> String {
    let mut out = String::new();
    let f = if g.has_features() { g.num_features } else { 0 };
    writeln!(out, "{} {}", g.n, f).unwrap();
    if f > 0 {
        for v in 0..g.n {
            push_row(&mut out, (0..f).map(|k| g.feature(v, k)));
        }
    }
    for u in 0..g.n {
        push_row(&mut out, (0..g.n).map(|v| g.adj(u, v)));
    }
    out
}

pub(crate) fn push_row(out: &mut String, row: impl Iterator<Item = bool>) {
    let cells: Vec<&str> = row.map(|b| if b { "1" } else { "0" }).collect();
    out.push_str(&cells.join(" "));
    out.push('\n');
}

/// Line cursor shared by the graph and molecule fixture parsers.
pub(crate) struct FixtureLines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> FixtureLines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        FixtureLines { lines, pos: 0 }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let line = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::parse("end of input", format!("missing {what}")))?;
        self.pos += 1;
        Ok(line)
    }

    pub(crate) fn header(&mut self) -> Result<(usize, usize)> {
        let (no, line) = self.next_line("header")?;
        let nums: Vec<&str> = line.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(Error::parse(format!("line {no}"), "header must be `N F`"));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::parse(format!("line {no}"), e.to_string()));
        Ok((parse(nums[0])?, parse(nums[1])?))
    }

    pub(crate) fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Vec<Vec<bool>>> {
        let mut out = Vec::with_capacity(rows);
        for r in 0..rows {
            let (no, line) = self.next_line(&format!("{what} row {r}"))?;
            let row = line
                .split_whitespace()
                .map(|c| match c {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::parse(format!("line {no}"), format!("expected 0 or 1, got `{other}`"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            if row.len() != cols {
                return Err(Error::parse(
                    format!("line {no}"),
                    format!("{what} row {r} has {} entries, expected {cols}", row.len()),
                ));
            }
            out.push(row);
        }
        Ok(out)
    }

    pub(crate) fn finish(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            Some((no, _)) => Err(Error::parse(format!("line {no}"), "unexpected trailing content")),
            None => Ok(()),
        }
    }
}
