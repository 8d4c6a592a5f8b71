//! Graph indexing that satisfies the neighbor-order symmetry-breaking
//! constraints, together with checkers for the three constraint families.
//!
//! * S1: every node other than index 0 has a neighbor with a smaller index.
//! * S2: the node with index 0 minimizes a hierarchy function `h` over
//!   feature rows.
//! * S3: for consecutive indexes `v, v+1 >= 1`, the neighbor multiset of `v`
//!   (without `v+1`) is lexicographically no larger than that of `v+1`
//!   (without `v`), using padding value `N` and length `N-1`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::graph::{next_permutation, UndirectedGraph, DEFAULT_SMALL_N_CAP};
use crate::lexorder::{compare_sorted, IntMultiset};
use crate::scalar::Scalar;

/// A bijection from node ids to indexes `0..N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Indexing {
    index_of: Vec<usize>,
}

impl Indexing {
    pub fn new(index_of: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; index_of.len()];
        for &i in &index_of {
            if i >= index_of.len() || seen[i] {
                return Err(Error::domain(format!("{index_of:?} is not a bijection")));
            }
            seen[i] = true;
        }
        Ok(Indexing { index_of })
    }

    pub fn identity(n: usize) -> Self {
        Indexing { index_of: (0..n).collect() }
    }

    /// Index assigned to `node`.
    pub fn index(&self, node: usize) -> usize {
        self.index_of[node]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.index_of
    }

    pub fn len(&self) -> usize {
        self.index_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_of.is_empty()
    }

    /// `order()[i]` is the node carrying index `i`; this is the permutation
    /// that relabels the graph into index space.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.index_of.len()];
        for (node, &i) in self.index_of.iter().enumerate() {
            order[i] = node;
        }
        order
    }
}

/// State of one iteration `s` of the indexing loop.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub s: usize,
    /// Nodes indexed before this iteration, in index order.
    pub indexed: Vec<usize>,
    /// Temporary index of every node.
    pub temp_index: Vec<usize>,
    /// Indexes of already-indexed neighbors; `None` for indexed nodes.
    pub indexed_neighbors: Vec<Option<IntMultiset>>,
    pub ranks: Vec<Option<usize>>,
    /// Temporary indexes of all neighbors; `None` for indexed nodes.
    pub temp_neighbors: Vec<Option<IntMultiset>>,
    pub chosen: usize,
}

impl IterationTrace {
    pub fn is_indexed(&self, node: usize) -> bool {
        self.indexed_neighbors[node].is_none()
    }
}

#[derive(Clone, Debug, Default)]
pub struct IndexingTrace {
    pub iterations: Vec<IterationTrace>,
}

/// Indexes a connected graph, giving `root` index 0.
///
/// At each step, unindexed nodes are ranked by the order of their
/// already-indexed neighbors; the ranks yield temporary indexes for every
/// node, and the unindexed node whose temporary neighbor multiset is
/// smallest receives the next index. Ties go to the lowest node id.
pub fn index_graph(g: &UndirectedGraph, root: usize) -> Result<(Indexing, IndexingTrace)> {
    let n = g.n();
    if n == 0 {
        return Err(Error::domain("cannot index an empty graph"));
    }
    if root >= n {
        return Err(Error::domain(format!("root {root} out of range for n = {n}")));
    }
    if !g.is_connected() {
        return Err(Error::domain("graph is not connected"));
    }
    let adjacency: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v).collect()).collect();
    let mut index: Vec<Option<usize>> = vec![None; n];
    index[root] = Some(0);
    let mut indexed = vec![root];
    let mut trace = IndexingTrace::default();

    for s in 1..n {
        let unindexed: Vec<usize> = (0..n).filter(|&v| index[v].is_none()).collect();

        let mut indexed_neighbors = vec![None; n];
        for &v in &unindexed {
            indexed_neighbors[v] = Some(IntMultiset::new(adjacency[v].iter().filter_map(|&u| index[u])));
        }
        let nbrs = |v: usize| indexed_neighbors[v].as_ref().map(IntMultiset::elements).unwrap_or(&[]);

        // ranks count distinct smaller neighbor orders, so tied nodes share a rank
        let mut distinct: Vec<&[usize]> = unindexed.iter().map(|&u| nbrs(u)).collect();
        distinct.sort_by(|a, b| compare_sorted(a, b));
        distinct.dedup();

        let mut ranks = vec![None; n];
        let mut temp_index = vec![0; n];
        for v in 0..n {
            temp_index[v] = match index[v] {
                Some(i) => i,
                None => {
                    let rank = distinct.iter().take_while(|d| compare_sorted(d, nbrs(v)) == Ordering::Less).count();
                    ranks[v] = Some(rank);
                    rank + s
                }
            };
        }

        let mut temp_neighbors = vec![None; n];
        for &v in &unindexed {
            temp_neighbors[v] = Some(IntMultiset::new(adjacency[v].iter().map(|&u| temp_index[u])));
        }

        let mut chosen = unindexed[0];
        for &v in &unindexed[1..] {
            let cand = temp_neighbors[v].as_ref().unwrap().elements();
            let best = temp_neighbors[chosen].as_ref().unwrap().elements();
            if compare_sorted(cand, best) == Ordering::Less {
                chosen = v;
            }
        }

        trace.iterations.push(IterationTrace {
            s,
            indexed: indexed.clone(),
            temp_index,
            indexed_neighbors,
            ranks,
            temp_neighbors,
            chosen,
        });
        index[chosen] = Some(s);
        indexed.push(chosen);
    }

    let idx = Indexing { index_of: index.into_iter().map(|i| i.expect("all nodes indexed")).collect() };
    Ok((idx, trace))
}

/// Neighbor lists in index space: entry `i` holds the sorted indexes of the
/// neighbors of the node carrying index `i`.
fn neighbors_in_index_space(g: &UndirectedGraph, idx: &Indexing) -> Vec<Vec<usize>> {
    let order = idx.order();
    order
        .iter()
        .map(|&node| {
            let mut nb: Vec<usize> = g.neighbors(node).map(|u| idx.index(u)).collect();
            nb.sort_unstable();
            nb
        })
        .collect()
}

/// S1: every index `v >= 1` has a neighbor with a smaller index.
pub fn check_s1(g: &UndirectedGraph, idx: &Indexing) -> bool {
    neighbors_in_index_space(g, idx).iter().enumerate().skip(1).all(|(v, nb)| nb.first().is_some_and(|&u| u < v))
}

/// S2 with a weighted-sum hierarchy `h(x) = sum_f weights[f] * x_f`.
pub fn check_s2<T: Scalar>(features: &[Vec<bool>], weights: &[T]) -> bool {
    let h = |row: &[bool]| -> T {
        row.iter().zip(weights).map(|(&x, &w)| if x { w } else { T::zero() }).sum()
    };
    let Some(first) = features.first() else { return true };
    let h0 = h(first);
    features[1..].iter().all(|row| h0 <= h(row))
}

/// Hierarchy weights `2^(F-f-1)`, which order feature rows as binary numbers.
pub fn ordering_weights(num_features: usize) -> Vec<f64> {
    (0..num_features).map(|f| 2f64.powi((num_features - f - 1) as i32)).collect()
}

/// S3 on the graph relabeled by `idx`.
pub fn check_s3(g: &UndirectedGraph, idx: &Indexing) -> bool {
    let nb = neighbors_in_index_space(g, idx);
    let n = nb.len();
    (1..n.saturating_sub(1)).all(|v| {
        let a: Vec<usize> = nb[v].iter().copied().filter(|&u| u != v + 1).collect();
        let b: Vec<usize> = nb[v + 1].iter().copied().filter(|&u| u != v).collect();
        compare_sorted(&a, &b) != Ordering::Greater
    })
}

/// Constraint selection for [`count_indexings`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IndexConstraints {
    pub s1: bool,
    /// Node that must receive index 0.
    pub fixed_root: Option<usize>,
    pub s3: bool,
}

impl IndexConstraints {
    pub fn none() -> Self {
        Self::default()
    }

    /// Parses a comma-separated list such as `root,s3`; `root` fixes node
    /// `root_node`. An empty string or `none` selects no constraint.
    pub fn parse(list: &str, root_node: usize) -> Result<Self> {
        let mut c = IndexConstraints::default();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.to_ascii_lowercase().as_str() {
                "s1" => c.s1 = true,
                "s3" => c.s3 = true,
                "root" | "fixed-root" => c.fixed_root = Some(root_node),
                "none" => {}
                other => return Err(Error::domain(format!("unknown indexing constraint `{other}`"))),
            }
        }
        Ok(c)
    }
}

/// Counts labelings of `g` satisfying the selected constraints by visiting
/// all `N!` of them.
pub fn count_indexings(g: &UndirectedGraph, constraints: IndexConstraints) -> Result<u64> {
    count_indexings_with_cap(g, constraints, DEFAULT_SMALL_N_CAP)
}

pub fn count_indexings_with_cap(g: &UndirectedGraph, constraints: IndexConstraints, cap: usize) -> Result<u64> {
    let n = g.n();
    if n > cap {
        return Err(Error::Unsupported(format!("counting indexings needs n <= {cap}, got {n}")));
    }
    if let Some(r) = constraints.fixed_root {
        if r >= n {
            return Err(Error::domain(format!("root {r} out of range for n = {n}")));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut count = 0;
    loop {
        if constraints.fixed_root.is_none_or(|r| order[0] == r) {
            let mut index_of = vec![0; n];
            for (i, &node) in order.iter().enumerate() {
                index_of[node] = i;
            }
            let idx = Indexing { index_of };
            if (!constraints.s1 || check_s1(g, &idx)) && (!constraints.s3 || check_s3(g, &idx)) {
                count += 1;
            }
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    Ok(count)
}

/// The six-node example graph used to illustrate the indexing procedure:
/// node 0 is adjacent to all others, and the remaining edges are
/// 1-2, 1-3, 1-4, 2-5 and 3-4.
pub fn example_graph() -> UndirectedGraph {
    UndirectedGraph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 2), (1, 3), (1, 4), (2, 5), (3, 4)])
        .expect("valid example graph")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::permutations;

    #[test]
    fn example_graph_golden_indexing() {
        let g = example_graph();
        let (idx, trace) = index_graph(&g, 0).unwrap();
        assert_eq!(idx.as_slice(), &[0, 1, 4, 2, 3, 5]);
        assert!(check_s1(&g, &idx));
        assert!(check_s3(&g, &idx));

        // first iteration: every neighbor of the root ties with rank 0
        let it1 = &trace.iterations[0];
        assert_eq!(it1.temp_index, vec![0, 1, 1, 1, 1, 1]);
        assert_eq!(it1.temp_neighbors[1].as_ref().unwrap().elements(), &[0, 1, 1, 1]);
        assert_eq!(it1.temp_neighbors[5].as_ref().unwrap().elements(), &[0, 1]);
        assert_eq!(it1.chosen, 1);

        let it2 = &trace.iterations[1];
        assert_eq!(it2.ranks[5], Some(1));
        assert_eq!(it2.temp_neighbors[2].as_ref().unwrap().elements(), &[0, 1, 3]);
        assert_eq!(it2.temp_neighbors[3].as_ref().unwrap().elements(), &[0, 1, 2]);
        assert_eq!(it2.chosen, 3);

        let it3 = &trace.iterations[2];
        assert_eq!(it3.ranks[2], Some(1));
        assert_eq!(it3.ranks[4], Some(0));
        assert_eq!(it3.ranks[5], Some(2));
        assert_eq!(it3.temp_neighbors[2].as_ref().unwrap().elements(), &[0, 1, 5]);
        assert_eq!(it3.temp_neighbors[5].as_ref().unwrap().elements(), &[0, 4]);
    }

    #[test]
    fn path_indexing() {
        let g = UndirectedGraph::path(3);
        let (idx, _) = index_graph(&g, 0).unwrap();
        assert_eq!(idx.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn cycle_indexing_is_s3_feasible() {
        let g = UndirectedGraph::cycle(4);
        // independent enumeration of the S3-feasible completions for each root
        for root in 0..4 {
            let feasible: Vec<Vec<usize>> = permutations(4)
                .filter(|order| order[0] == root)
                .map(|order| {
                    let mut index_of = vec![0; 4];
                    for (i, &v) in order.iter().enumerate() {
                        index_of[v] = i;
                    }
                    index_of
                })
                .filter(|ix| check_s3(&g, &Indexing::new(ix.clone()).unwrap()))
                .collect();
            let (idx, _) = index_graph(&g, root).unwrap();
            assert!(feasible.contains(&idx.as_slice().to_vec()));
        }
    }

    #[test]
    fn index_graph_errors() {
        assert!(index_graph(&UndirectedGraph::empty(0), 0).is_err());
        assert!(index_graph(&UndirectedGraph::empty(2), 0).is_err());
        assert!(index_graph(&UndirectedGraph::path(2), 5).is_err());
    }

    #[test]
    fn s1_examples() {
        let g = UndirectedGraph::path(3);
        assert!(check_s1(&g, &Indexing::identity(3)));
        let two = UndirectedGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(!check_s1(&two, &Indexing::identity(4)));
    }

    #[test]
    fn s2_examples() {
        let w = ordering_weights(3);
        assert_eq!(w, vec![4.0, 2.0, 1.0]);
        assert!(check_s2(&vec![vec![true, false, true]; 3], &w));
        assert!(check_s2(&[vec![false, true, true], vec![true, false, false], vec![false, true, true]], &w));
        assert!(!check_s2(
            &[vec![true, false, false], vec![true, false, false], vec![true, false, false], vec![false, true, true]],
            &w
        ));
        assert!(check_s2::<f32>(&[vec![false], vec![true]], &[1.0]));
    }

    #[test]
    fn s3_examples() {
        assert!(check_s3(&UndirectedGraph::path(3), &Indexing::identity(3)));
        // path a-b-c with b indexed 2 and c indexed 1: index 1 has neighbors {2},
        // index 2 has {0, 1}; dropping the pair gives {} vs {0}
        let g = UndirectedGraph::path(3);
        assert!(!check_s3(&g, &Indexing::new(vec![0, 2, 1]).unwrap()));
    }

    #[test]
    fn example_graph_counts() {
        let g = example_graph();
        assert_eq!(count_indexings(&g, IndexConstraints::none()).unwrap(), 720);
        // brute force over all 720 labelings (cross-checked outside the crate)
        assert_eq!(count_indexings(&g, IndexConstraints { s1: true, ..Default::default() }).unwrap(), 396);
        assert_eq!(count_indexings(&g, IndexConstraints { fixed_root: Some(0), ..Default::default() }).unwrap(), 120);
        assert_eq!(
            count_indexings(&g, IndexConstraints { fixed_root: Some(0), s3: true, ..Default::default() }).unwrap(),
            4
        );
    }

    #[test]
    fn constraint_list_parsing() {
        let c = IndexConstraints::parse("root,s3", 2).unwrap();
        assert_eq!(c, IndexConstraints { s1: false, fixed_root: Some(2), s3: true });
        assert_eq!(IndexConstraints::parse("none", 0).unwrap(), IndexConstraints::none());
        assert!(IndexConstraints::parse("s4", 0).is_err());
    }
}
