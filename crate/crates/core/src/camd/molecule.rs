use std::fmt::Write as _;

use crate::camd::space::DesignSpace;
use crate::error::{Error, Result};
use crate::graph::{canonical_form_labeled, push_row, FixtureLines, Permutation, UndirectedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single = 1,
    Double = 2,
    Triple = 3,
}

/// Decision variables of the design problem: atom features `X` (`n x f`),
/// adjacency `A`, double-bond matrix `DB` and triple-bond matrix `TB`.
///
/// Matrices are stored in full so that malformed (e.g. asymmetric)
/// assignments can be represented and reported by the checkers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MolecularGraph {
    n: usize,
    f: usize,
    x: Vec<bool>,
    a: Vec<bool>,
    db: Vec<bool>,
    tb: Vec<bool>,
}

impl MolecularGraph {
    /// All-zero features and bonds, with every atom present.
    pub fn new(n: usize, f: usize) -> Self {
        let mut a = vec![false; n * n];
        for v in 0..n {
            a[v * n + v] = true;
        }
        MolecularGraph { n, f, x: vec![false; n * f], a, db: vec![false; n * n], tb: vec![false; n * n] }
    }

    pub fn from_parts(n: usize, f: usize, x: Vec<bool>, a: Vec<bool>, db: Vec<bool>, tb: Vec<bool>) -> Result<Self> {
        if x.len() != n * f || a.len() != n * n || db.len() != n * n || tb.len() != n * n {
            return Err(Error::domain("molecule matrix dimensions do not match N and F"));
        }
        Ok(MolecularGraph { n, f, x, a, db, tb })
    }

    /// Builds a molecule from atom types and bonds, deriving every feature:
    /// neighbor count from the degree, hydrogens from the remaining
    /// covalence, and bond flags from incident double/triple bonds.
    pub fn from_skeleton(space: &DesignSpace, types: &[usize], bonds: &[(usize, usize, BondOrder)]) -> Result<Self> {
        let n = space.n;
        if types.len() != n {
            return Err(Error::domain(format!("{} atom types for N = {n}", types.len())));
        }
        let mut mol = MolecularGraph::new(n, space.num_features());
        for &(u, v, order) in bonds {
            if u >= n || v >= n || u == v {
                return Err(Error::domain(format!("invalid bond ({u}, {v})")));
            }
            if mol.a(u, v) {
                return Err(Error::domain(format!("duplicate bond ({u}, {v})")));
            }
            mol.set_bond(u, v, Some(order));
        }
        for (v, &t) in types.iter().enumerate() {
            let atom = space.atoms.get(t).ok_or_else(|| Error::domain(format!("unknown atom type {t}")))?;
            let degree = mol.degree(v);
            let extra = mol.double_bond_count(v) + 2 * mol.triple_bond_count(v);
            let h = atom.covalence as i64 - degree as i64 - extra as i64;
            if degree > space.max_degree() || h < 0 || h as usize > space.max_hydrogens() {
                return Err(Error::domain(format!(
                    "atom {v} ({}) with degree {degree} and {extra} extra bond orders cannot be saturated",
                    atom.symbol
                )));
            }
            mol.set_x(v, space.type_feature(t), true);
            mol.set_x(v, space.neighbor_feature(degree), true);
            mol.set_x(v, space.hydrogen_feature(h as usize), true);
            mol.set_x(v, space.double_bond_feature(), mol.double_bond_count(v) > 0);
            mol.set_x(v, space.triple_bond_feature(), mol.triple_bond_count(v) > 0);
        }
        Ok(mol)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_features(&self) -> usize {
        self.f
    }

    pub fn x(&self, v: usize, f: usize) -> bool {
        self.x[v * self.f + f]
    }

    pub fn x_row(&self, v: usize) -> &[bool] {
        &self.x[v * self.f..(v + 1) * self.f]
    }

    pub fn a(&self, u: usize, v: usize) -> bool {
        self.a[u * self.n + v]
    }

    pub fn db(&self, u: usize, v: usize) -> bool {
        self.db[u * self.n + v]
    }

    pub fn tb(&self, u: usize, v: usize) -> bool {
        self.tb[u * self.n + v]
    }

    pub fn set_x(&mut self, v: usize, f: usize, val: bool) {
        self.x[v * self.f + f] = val;
    }

    /// Sets a single adjacency entry without touching its mirror.
    pub fn set_a_entry(&mut self, u: usize, v: usize, val: bool) {
        self.a[u * self.n + v] = val;
    }

    pub fn set_db_entry(&mut self, u: usize, v: usize, val: bool) {
        self.db[u * self.n + v] = val;
    }

    pub fn set_tb_entry(&mut self, u: usize, v: usize, val: bool) {
        self.tb[u * self.n + v] = val;
    }

    /// Sets the bond between `u != v` symmetrically; `None` removes it.
    pub fn set_bond(&mut self, u: usize, v: usize, order: Option<BondOrder>) {
        let (a, d, t) = match order {
            None => (false, false, false),
            Some(BondOrder::Single) => (true, false, false),
            Some(BondOrder::Double) => (true, true, false),
            Some(BondOrder::Triple) => (true, false, true),
        };
        for (p, q) in [(u, v), (v, u)] {
            self.set_a_entry(p, q, a);
            self.set_db_entry(p, q, d);
            self.set_tb_entry(p, q, t);
        }
    }

    pub fn bond(&self, u: usize, v: usize) -> Option<BondOrder> {
        if u == v || !self.a(u, v) {
            None
        } else if self.tb(u, v) {
            Some(BondOrder::Triple)
        } else if self.db(u, v) {
            Some(BondOrder::Double)
        } else {
            Some(BondOrder::Single)
        }
    }

    /// Off-diagonal entries of column `v` of `A`.
    pub fn degree(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| u != v && self.a(u, v)).count()
    }

    pub fn double_bond_count(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| self.db(u, v)).count()
    }

    pub fn triple_bond_count(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| self.tb(u, v)).count()
    }

    /// Atom type from the one-hot type block, if exactly one bit is set.
    pub fn atom_type(&self, space: &DesignSpace, v: usize) -> Option<usize> {
        let mut set = (0..space.num_atom_types()).filter(|&t| self.x(v, space.type_feature(t)));
        match (set.next(), set.next()) {
            (Some(t), None) => Some(t),
            _ => None,
        }
    }

    /// Adjacency and features as a plain graph, ignoring bond orders.
    pub fn to_graph(&self) -> Result<UndirectedGraph> {
        let rows = (0..self.n).map(|v| self.x_row(v).to_vec()).collect();
        UndirectedGraph::from_matrix(self.n, self.a.clone())?.with_features(rows)
    }

    /// Relabels so that new atom `v` is old atom `p(v)`.
    pub fn permute(&self, p: &Permutation) -> Result<Self> {
        if p.len() != self.n {
            return Err(Error::domain(format!("permutation of size {} for molecule of size {}", p.len(), self.n)));
        }
        let n = self.n;
        let mut out = MolecularGraph::new(n, self.f);
        for u in 0..n {
            for f in 0..self.f {
                out.set_x(u, f, self.x(p.apply(u), f));
            }
            for v in 0..n {
                let (pu, pv) = (p.apply(u), p.apply(v));
                out.set_a_entry(u, v, self.a(pu, pv));
                out.set_db_entry(u, v, self.db(pu, pv));
                out.set_tb_entry(u, v, self.tb(pu, pv));
            }
        }
        Ok(out)
    }

    /// Canonical form over features and bond orders; isomorphic molecules
    /// (including bond orders) share it.
    pub fn canonical_form(&self, cap: usize) -> Result<Vec<u8>> {
        let labels: Vec<Vec<u8>> = (0..self.n)
            .map(|v| {
                let mut l: Vec<u8> = self.x_row(v).iter().map(|&b| u8::from(b)).collect();
                l.push(u8::from(self.a(v, v)));
                l
            })
            .collect();
        let code = |u: usize, v: usize| {
            u8::from(self.a(u, v)) | u8::from(self.db(u, v)) << 1 | u8::from(self.tb(u, v)) << 2
        };
        canonical_form_labeled(self.n, &labels, code, cap)
    }

    /// Short human-readable summary, e.g. `C0 N1 | 0-1:2`.
    pub fn describe(&self, space: &DesignSpace) -> String {
        let mut out = String::new();
        for v in 0..self.n {
            let sym = self.atom_type(space, v).map_or("?", |t| space.atoms[t].symbol.as_str());
            write!(out, "{sym}{v} ").unwrap();
        }
        out.push('|');
        for u in 0..self.n {
            for v in u + 1..self.n {
                if let Some(b) = self.bond(u, v) {
                    write!(out, " {u}-{v}:{}", b as u8).unwrap();
                }
            }
        }
        out
    }
}

/// Parses a molecule in fixture form: header `N F`, `N` feature rows, then
/// three `N x N` blocks for `A`, `DB` and `TB`.
pub fn parse_molecule(text: &str) -> Result<MolecularGraph> {
    let mut lines = FixtureLines::new(text);
    let (n, f) = lines.header()?;
    let x = lines.matrix(n, f, "feature")?;
    let a = lines.matrix(n, n, "adjacency")?;
    let db = lines.matrix(n, n, "double bond")?;
    let tb = lines.matrix(n, n, "triple bond")?;
    lines.finish()?;
    let flat = |m: Vec<Vec<bool>>| m.into_iter().flatten().collect::<Vec<_>>();
    MolecularGraph::from_parts(n, f, flat(x), flat(a), flat(db), flat(tb))
}

pub fn format_molecule(mol: &MolecularGraph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", mol.n, mol.f).unwrap();
    for v in 0..mol.n {
        push_row(&mut out, mol.x_row(v).iter().copied());
    }
    for m in [&mol.a, &mol.db, &mol.tb] {
        for u in 0..mol.n {
            push_row(&mut out, m[u * mol.n..(u + 1) * mol.n].iter().copied());
        }
    }
    out
}

/// Parses a stream of molecule records separated by blank lines.
pub fn parse_molecule_stream(text: &str) -> Result<Vec<MolecularGraph>> {
    let mut out = Vec::new();
    let mut block = String::new();
    for line in text.lines().chain(std::iter::once("")) {
        if line.trim().is_empty() {
            if !block.trim().is_empty() {
                out.push(parse_molecule(&block)?);
            }
            block.clear();
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    Ok(out)
}
