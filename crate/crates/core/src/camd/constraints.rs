//! Predicate versions of the structural constraints C1-C25 and the
//! symmetry-breaking constraints C26-C27.

use std::fmt;

use crate::camd::molecule::MolecularGraph;
use crate::camd::space::DesignSpace;
use crate::error::{Error, Result};

/// Constraint identifier `C1..C27`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintId(pub u8);

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

/// One violated constraint instance and the atom indices it concerns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub constraint: ConstraintId,
    pub indices: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constraint)?;
        if !self.indices.is_empty() {
            let idx: Vec<String> = self.indices.iter().map(usize::to_string).collect();
            write!(f, "[{}]", idx.join(","))?;
        }
        Ok(())
    }
}

fn check_dims(space: &DesignSpace, mol: &MolecularGraph) -> Result<()> {
    if mol.n() != space.n || mol.num_features() != space.num_features() {
        return Err(Error::domain(format!(
            "molecule is {}x{}, design space expects {}x{}",
            mol.n(),
            mol.num_features(),
            space.n,
            space.num_features()
        )));
    }
    Ok(())
}

/// Evaluates C1-C25. An empty report means the molecule is structurally
/// feasible.
pub fn check_structure(space: &DesignSpace, mol: &MolecularGraph) -> Result<Vec<Violation>> {
    check_dims(space, mol)?;
    let n = space.n;
    let b = |x: bool| i64::from(x);
    let mut out = Vec::new();
    let mut fail = |c: u8, indices: Vec<usize>| out.push(Violation { constraint: ConstraintId(c), indices });

    let exists = |v: usize| b(mol.a(v, v));
    let deg = |v: usize| (0..n).filter(|&u| u != v).map(|u| b(mol.a(u, v))).sum::<i64>();
    let db_sum = |v: usize| (0..n).map(|u| b(mol.db(u, v))).sum::<i64>();
    let tb_sum = |v: usize| (0..n).map(|u| b(mol.tb(u, v))).sum::<i64>();
    let block = |v: usize, idx: &dyn Fn(usize) -> usize, len: usize| (0..len).map(|i| b(mol.x(v, idx(i)))).sum::<i64>();
    let weighted = |v: usize, idx: &dyn Fn(usize) -> usize, len: usize| {
        (0..len).map(|i| i as i64 * b(mol.x(v, idx(i)))).sum::<i64>()
    };
    let by_type = |v: usize, coef: &dyn Fn(u32) -> u32| {
        space.atoms.iter().enumerate().map(|(t, a)| i64::from(coef(a.covalence)) * b(mol.x(v, space.type_feature(t)))).sum::<i64>()
    };
    let t_idx = |i: usize| space.type_feature(i);
    let n_idx = |i: usize| space.neighbor_feature(i);
    let h_idx = |i: usize| space.hydrogen_feature(i);
    let (fdb, ftb) = (space.double_bond_feature(), space.triple_bond_feature());

    // C1
    if !(mol.a(0, 0) && mol.a(1, 1) && mol.a(0, 1)) {
        fail(1, vec![0, 1]);
    }
    // C2; with a fixed atom count every atom exists
    for v in 0..n {
        if space.exact_n {
            if !mol.a(v, v) {
                fail(2, vec![v]);
            }
        } else if v + 1 < n && exists(v) < exists(v + 1) {
            fail(2, vec![v, v + 1]);
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            if mol.a(u, v) != mol.a(v, u) {
                fail(3, vec![u, v]);
            }
        }
    }
    for v in 0..n {
        if (n as i64 - 1) * exists(v) < deg(v) {
            fail(4, vec![v]);
        }
    }
    // C5 (connectivity to a smaller index); index 0 has no predecessor
    for v in 1..n {
        if exists(v) > (0..v).map(|u| b(mol.a(u, v))).sum::<i64>() {
            fail(5, vec![v]);
        }
    }
    for v in 0..n {
        if mol.db(v, v) {
            fail(6, vec![v]);
        }
        if mol.tb(v, v) {
            fail(8, vec![v]);
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            if mol.db(u, v) != mol.db(v, u) {
                fail(7, vec![u, v]);
            }
            if mol.tb(u, v) != mol.tb(v, u) {
                fail(9, vec![u, v]);
            }
            if b(mol.db(u, v)) + b(mol.tb(u, v)) > b(mol.a(u, v)) {
                fail(10, vec![u, v]);
            }
        }
    }
    for v in 0..n {
        if exists(v) != block(v, &t_idx, space.num_atom_types()) {
            fail(11, vec![v]);
        }
        if exists(v) != block(v, &n_idx, space.neighbor_slots) {
            fail(12, vec![v]);
        }
        if exists(v) != block(v, &h_idx, space.hydrogen_slots) {
            fail(13, vec![v]);
        }
        if deg(v) != weighted(v, &n_idx, space.neighbor_slots) {
            fail(14, vec![v]);
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            if 3 * b(mol.db(u, v)) > b(mol.x(u, fdb)) + b(mol.x(v, fdb)) + b(mol.a(u, v)) {
                fail(15, vec![u, v]);
            }
            if 3 * b(mol.tb(u, v)) > b(mol.x(u, ftb)) + b(mol.x(v, ftb)) + b(mol.a(u, v)) {
                fail(16, vec![u, v]);
            }
        }
    }
    for v in 0..n {
        if db_sum(v) > by_type(v, &|c| c / 2) {
            fail(17, vec![v]);
        }
        if tb_sum(v) > by_type(v, &|c| c / 3) {
            fail(18, vec![v]);
        }
        if b(mol.x(v, fdb)) > db_sum(v) {
            fail(19, vec![v]);
        }
        if b(mol.x(v, ftb)) > tb_sum(v) {
            fail(20, vec![v]);
        }
        let lhs = by_type(v, &|c| c);
        let rhs = weighted(v, &n_idx, space.neighbor_slots)
            + weighted(v, &h_idx, space.hydrogen_slots)
            + db_sum(v)
            + 2 * tb_sum(v);
        if lhs != rhs {
            fail(21, vec![v]);
        }
    }
    for (t, bound) in space.atom_counts.iter().enumerate() {
        let count = (0..n).map(|v| b(mol.x(v, space.type_feature(t)))).sum::<i64>();
        if !bound.contains(count) {
            fail(22, vec![t]);
        }
    }
    let upper = |m: &dyn Fn(usize, usize) -> bool| {
        (0..n).flat_map(|v| (0..v).map(move |u| (u, v))).map(|(u, v)| b(m(u, v))).sum::<i64>()
    };
    if !space.double_bonds.contains(upper(&|u, v| mol.db(u, v))) {
        fail(23, vec![]);
    }
    if !space.triple_bonds.contains(upper(&|u, v| mol.tb(u, v))) {
        fail(24, vec![]);
    }
    // each bond beyond a spanning tree closes one ring
    let atoms = if space.exact_n { n as i64 } else { (0..n).map(exists).sum::<i64>() };
    if !space.rings.contains(upper(&|u, v| mol.a(u, v)) - (atoms - 1)) {
        fail(25, vec![]);
    }
    Ok(out)
}

/// `sum_f 2^(F-f-1) X[v][f]`: the feature row read as a binary number.
pub fn feature_code(mol: &MolecularGraph, v: usize) -> u64 {
    let f = mol.num_features();
    mol.x_row(v).iter().enumerate().filter(|(_, &x)| x).map(|(k, _)| 1u64 << (f - k - 1)).sum()
}

/// C26: atom 0 has the smallest feature code. When the atom count is free,
/// absent atoms are exempt through a `2^F (1 - A[v][v])` slack.
pub fn check_c26(space: &DesignSpace, mol: &MolecularGraph) -> Result<bool> {
    check_dims(space, mol)?;
    let code0 = feature_code(mol, 0);
    let slack = |v: usize| if space.exact_n || mol.a(v, v) { 0 } else { 1u64 << mol.num_features() };
    Ok((1..space.n).all(|v| code0 <= feature_code(mol, v) + slack(v)))
}

/// `sum_{u != v, w} 2^(N-u-1) A[u][v]`: the neighbors of `v`, excluding `v`
/// and `w`, read as a binary number with smaller indexes more significant.
pub fn neighbor_code(mol: &MolecularGraph, v: usize, w: usize) -> u64 {
    let n = mol.n();
    (0..n).filter(|&u| u != v && u != w && mol.a(u, v)).map(|u| 1u64 << (n - u - 1)).sum()
}

/// C27: neighbor codes are non-increasing along consecutive atoms
/// `1..N-1`, which is the neighbor-set lexicographic order written as a
/// linear inequality.
pub fn check_c27(space: &DesignSpace, mol: &MolecularGraph) -> Result<bool> {
    check_dims(space, mol)?;
    let n = space.n;
    Ok((1..n.saturating_sub(1)).all(|v| neighbor_code(mol, v, v + 1) >= neighbor_code(mol, v + 1, v)))
}

/// C1-C25 hold and, if requested, C26 and C27.
pub fn is_feasible(space: &DesignSpace, mol: &MolecularGraph, symmetry: bool) -> Result<bool> {
    Ok(check_structure(space, mol)?.is_empty()
        && (!symmetry || (check_c26(space, mol)? && check_c27(space, mol)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camd::molecule::BondOrder::{self, *};

    fn ids(v: &[Violation]) -> Vec<u8> {
        let mut ids: Vec<u8> = v.iter().map(|x| x.constraint.0).collect();
        ids.dedup();
        ids
    }

    fn mol(space: &DesignSpace, types: &[usize], bonds: &[(usize, usize, BondOrder)]) -> MolecularGraph {
        MolecularGraph::from_skeleton(space, types, bonds).unwrap()
    }

    #[test]
    fn ethane_is_feasible() {
        let space = DesignSpace::qm7(2).unwrap();
        let m = mol(&space, &[0, 0], &[(0, 1, Single)]);
        assert!(m.x(0, 12) && m.x(1, 12));
        assert!(check_structure(&space, &m).unwrap().is_empty());
    }

    #[test]
    fn oxygen_with_three_hydrogens_breaks_covalence() {
        let space = DesignSpace::qm7(2).unwrap();
        let mut m = mol(&space, &[0, 0], &[(0, 1, Single)]);
        m.set_x(0, 0, false);
        m.set_x(0, 2, true);
        assert_eq!(ids(&check_structure(&space, &m).unwrap()), vec![21]);
    }

    #[test]
    fn too_many_double_bonds() {
        let mut space = DesignSpace::qm7(4).unwrap();
        space.double_bonds.hi = 2;
        let m = mol(&space, &[0, 0, 0, 0], &[(0, 1, Double), (1, 2, Single), (2, 3, Double), (0, 3, Double)]);
        assert_eq!(ids(&check_structure(&space, &m).unwrap()), vec![23]);
    }

    #[test]
    fn c26_examples() {
        let space = DesignSpace::qm7(3).unwrap();
        let m = mol(&space, &[0, 0, 0], &[(0, 1, Single), (0, 2, Single)]);
        let rows_equal = mol(&space, &[0, 0, 0], &[(0, 1, Single), (1, 2, Single), (0, 2, Single)]);
        assert!(check_c26(&space, &rows_equal).unwrap());
        // atom 0 has more neighbors, so its code is smaller
        assert!(check_c26(&space, &m).unwrap());
        // an N atom has code 2^14 + ..., a C atom 2^15 + ...
        let n_first = mol(&space, &[1, 0, 0], &[(0, 1, Single), (1, 2, Single)]);
        assert!(check_c26(&space, &n_first).unwrap());
        let c_first = mol(&space, &[0, 1, 0], &[(0, 1, Single), (1, 2, Single)]);
        assert!(!check_c26(&space, &c_first).unwrap());
    }

    #[test]
    fn c27_examples() {
        let space = DesignSpace::qm7(4).unwrap();
        let star = mol(&space, &[0, 0, 0, 0], &[(0, 1, Single), (0, 2, Single), (0, 3, Single)]);
        assert!(check_c27(&space, &star).unwrap());
        // path 0-2-1-3: atom 1 neighbors {2,3}, atom 2 neighbors {0,1}
        let path = mol(&space, &[0, 0, 0, 0], &[(0, 2, Single), (2, 1, Single), (1, 3, Single)]);
        assert!(!check_c27(&space, &path).unwrap());
        let space2 = DesignSpace::qm7(2).unwrap();
        assert!(check_c27(&space2, &mol(&space2, &[0, 0], &[(0, 1, Triple)])).unwrap());
    }

    #[test]
    fn asymmetric_adjacency_reported() {
        let space = DesignSpace::qm7(3).unwrap();
        let mut m = mol(&space, &[0, 0, 0], &[(0, 1, Single), (1, 2, Single)]);
        m.set_a_entry(2, 1, false);
        let v = ids(&check_structure(&space, &m).unwrap());
        assert!(v.contains(&3));
    }

    #[test]
    fn c27_matches_neighbor_order_on_all_small_graphs() {
        use crate::graph::UndirectedGraph;
        use crate::indexing::{check_s3, Indexing};
        for n in 2..=5 {
            let space = DesignSpace::qm9(n).unwrap();
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            for mask in 0u32..(1 << pairs.len()) {
                let edges: Vec<(usize, usize)> =
                    pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e).collect();
                let g = UndirectedGraph::from_edges(n, &edges).unwrap();
                let mut m = MolecularGraph::new(n, space.num_features());
                for &(u, v) in &edges {
                    m.set_bond(u, v, Some(Single));
                }
                let c27 = check_c27(&space, &m).unwrap();
                assert_eq!(c27, check_s3(&g, &Indexing::identity(n)), "n={n} edges={edges:?}");
            }
        }
    }

    #[test]
    fn every_single_flip_is_caught() {
        let space = DesignSpace::qm7(4).unwrap();
        let base = mol(&space, &[0, 0, 1, 2], &[(0, 1, Double), (1, 2, Single), (0, 3, Single), (2, 3, Single)]);
        assert!(check_structure(&space, &base).unwrap().is_empty());
        let (n, f) = (space.n, space.num_features());
        for v in 0..n {
            for k in 0..f {
                let mut m = base.clone();
                m.set_x(v, k, !m.x(v, k));
                assert!(!check_structure(&space, &m).unwrap().is_empty(), "X[{v}][{k}]");
            }
        }
        for u in 0..n {
            for v in 0..n {
                for which in 0..3 {
                    let mut m = base.clone();
                    match which {
                        0 => m.set_a_entry(u, v, !m.a(u, v)),
                        1 => m.set_db_entry(u, v, !m.db(u, v)),
                        _ => m.set_tb_entry(u, v, !m.tb(u, v)),
                    }
                    assert!(!check_structure(&space, &m).unwrap().is_empty(), "entry {which} ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn variable_size_mode() {
        let mut space = DesignSpace::qm7(3).unwrap();
        space.exact_n = false;
        space.atom_counts[0].lo = 0;
        let mut m = mol(&DesignSpace::qm7(3).unwrap(), &[0, 0, 0], &[(0, 1, Single), (0, 2, Single)]);
        assert!(is_feasible(&space, &m, true).unwrap());
        // drop atom 2 with its bond and features
        m.set_bond(0, 2, None);
        m.set_a_entry(2, 2, false);
        for k in 0..space.num_features() {
            m.set_x(2, k, false);
        }
        m.set_x(0, space.neighbor_feature(2), false);
        m.set_x(0, space.neighbor_feature(1), true);
        m.set_x(0, space.hydrogen_feature(2), false);
        m.set_x(0, space.hydrogen_feature(3), true);
        assert!(check_structure(&space, &m).unwrap().is_empty());
        assert!(check_c26(&space, &m).unwrap());
        // absent atoms must come last
        let mut gap = MolecularGraph::new(3, space.num_features());
        gap.set_a_entry(1, 1, false);
        assert!(ids(&check_structure(&space, &gap).unwrap()).contains(&2));
    }

    #[test]
    fn dimension_mismatch() {
        let space = DesignSpace::qm7(3).unwrap();
        assert!(check_structure(&space, &MolecularGraph::new(2, 16)).is_err());
    }
}
