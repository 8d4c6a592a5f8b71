use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomType {
    pub symbol: String,
    pub covalence: u32,
}

impl AtomType {
    pub fn new(symbol: &str, covalence: u32) -> Self {
        AtomType { symbol: symbol.to_string(), covalence }
    }

    pub fn max_double_bonds(&self) -> u32 {
        self.covalence / 2
    }

    pub fn max_triple_bonds(&self) -> u32 {
        self.covalence / 3
    }
}

/// Inclusive count range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: u32,
    pub hi: u32,
}

impl Bound {
    pub fn new(lo: u32, hi: u32) -> Self {
        Bound { lo, hi }
    }

    pub fn upto(hi: u32) -> Self {
        Bound { lo: 0, hi }
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= i64::from(self.lo) && x <= i64::from(self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Qm7,
    Qm9,
}

impl Dataset {
    pub fn space(self, n: usize) -> Result<DesignSpace> {
        match self {
            Dataset::Qm7 => DesignSpace::qm7(n),
            Dataset::Qm9 => DesignSpace::qm9(n),
        }
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qm7" => Ok(Dataset::Qm7),
            "qm9" => Ok(Dataset::Qm9),
            other => Err(Error::domain(format!("unknown dataset `{other}`"))),
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::Qm7 => "qm7",
            Dataset::Qm9 => "qm9",
        })
    }
}

/// Parameters of a molecular design problem with `n` heavy atoms.
///
/// Feature layout per atom: one-hot atom type, one-hot neighbor count
/// `0..neighbor_slots`, one-hot hydrogen count `0..hydrogen_slots`, then a
/// double-bond flag and a triple-bond flag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpace {
    pub n: usize,
    pub atoms: Vec<AtomType>,
    pub neighbor_slots: usize,
    pub hydrogen_slots: usize,
    /// Per atom type, aligned with `atoms`.
    pub atom_counts: Vec<Bound>,
    pub double_bonds: Bound,
    pub triple_bonds: Bound,
    pub rings: Bound,
    /// Every one of the `n` atoms exists (`A[v][v] = 1`). When false, node
    /// existence is a decision and absent nodes must come last.
    pub exact_n: bool,
}

fn floor_div(a: usize, b: usize) -> u32 {
    (a / b) as u32
}

fn ceil_div(a: usize, b: usize) -> u32 {
    a.div_ceil(b) as u32
}

impl DesignSpace {
    /// Design space with atoms C, N, O, S and bounds derived from QM7.
    pub fn qm7(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("design space needs N >= 2, got {n}")));
        }
        let space = DesignSpace {
            n,
            atoms: vec![AtomType::new("C", 4), AtomType::new("N", 3), AtomType::new("O", 2), AtomType::new("S", 2)],
            neighbor_slots: 5,
            hydrogen_slots: 5,
            atom_counts: vec![
                Bound::new(ceil_div(n, 2), n as u32),
                Bound::upto(floor_div(3 * n, 7).max(1)),
                Bound::upto(floor_div(n, 3).max(1)),
                Bound::upto(floor_div(n, 7).max(1)),
            ],
            double_bonds: Bound::upto(floor_div(n, 2)),
            triple_bonds: Bound::upto(floor_div(n, 2)),
            rings: Bound::upto(floor_div(n, 2)),
            exact_n: true,
        };
        space.validate()?;
        Ok(space)
    }

    /// Design space with atoms C, N, O, F and bounds derived from QM9.
    pub fn qm9(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("design space needs N >= 2, got {n}")));
        }
        let space = DesignSpace {
            n,
            atoms: vec![AtomType::new("C", 4), AtomType::new("N", 3), AtomType::new("O", 2), AtomType::new("F", 1)],
            neighbor_slots: 5,
            hydrogen_slots: 5,
            atom_counts: vec![
                Bound::new(ceil_div(n, 5), n as u32),
                Bound::upto(floor_div(3 * n, 5)),
                Bound::upto(floor_div(4 * n, 7)),
                Bound::upto(floor_div(4 * n, 5)),
            ],
            double_bonds: Bound::upto(floor_div(n, 2)),
            triple_bonds: Bound::upto(floor_div(n, 2)),
            rings: Bound::upto(floor_div(2 * n, 3)),
            exact_n: true,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain(format!("design space needs N >= 2, got {}", self.n)));
        }
        if self.atoms.is_empty() || self.atom_counts.len() != self.atoms.len() {
            return Err(Error::domain("atom types and atom count bounds must align"));
        }
        if self.atoms.iter().any(|a| a.covalence == 0) {
            return Err(Error::domain("covalences must be positive"));
        }
        if self.neighbor_slots == 0 || self.hydrogen_slots == 0 {
            return Err(Error::domain("neighbor and hydrogen blocks must be non-empty"));
        }
        if self.num_features() > 63 {
            return Err(Error::domain("at most 63 features are supported"));
        }
        let n = self.n as u32;
        let pairs = n * (n - 1) / 2;
        for (a, b) in self.atoms.iter().zip(&self.atom_counts) {
            if b.lo > b.hi || b.hi > n {
                return Err(Error::domain(format!("invalid count bound for {}: {b:?}", a.symbol)));
            }
        }
        for (what, b) in [("double bond", self.double_bonds), ("triple bond", self.triple_bonds), ("ring", self.rings)] {
            if b.lo > b.hi || b.hi > pairs {
                return Err(Error::domain(format!("invalid {what} bound {b:?}")));
            }
        }
        Ok(())
    }

    pub fn num_atom_types(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_features(&self) -> usize {
        self.atoms.len() + self.neighbor_slots + self.hydrogen_slots + 2
    }

    pub fn type_feature(&self, t: usize) -> usize {
        t
    }

    pub fn neighbor_feature(&self, k: usize) -> usize {
        self.atoms.len() + k
    }

    pub fn hydrogen_feature(&self, k: usize) -> usize {
        self.atoms.len() + self.neighbor_slots + k
    }

    pub fn double_bond_feature(&self) -> usize {
        self.num_features() - 2
    }

    pub fn triple_bond_feature(&self) -> usize {
        self.num_features() - 1
    }

    /// Largest representable degree.
    pub fn max_degree(&self) -> usize {
        self.neighbor_slots - 1
    }

    pub fn max_hydrogens(&self) -> usize {
        self.hydrogen_slots - 1
    }

    pub fn type_by_symbol(&self, symbol: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.symbol.eq_ignore_ascii_case(symbol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ub(s: &DesignSpace) -> Vec<u32> {
        s.atom_counts.iter().map(|b| b.hi).collect()
    }

    #[test]
    fn qm7_bounds() {
        let s = DesignSpace::qm7(7).unwrap();
        assert_eq!(s.atom_counts[0].lo, 4);
        assert_eq!(&ub(&s)[1..], &[3, 2, 1]);
        assert_eq!((s.double_bonds.hi, s.triple_bonds.hi, s.rings.hi), (3, 3, 3));
        assert_eq!(s.num_features(), 16);

        let s = DesignSpace::qm7(2).unwrap();
        assert_eq!(s.atom_counts[0].lo, 1);
        assert_eq!(&ub(&s)[1..], &[1, 1, 1]);
        assert_eq!((s.double_bonds.hi, s.triple_bonds.hi, s.rings.hi), (1, 1, 1));
        assert!(s.atom_counts[1..].iter().all(|b| b.lo == 0));
    }

    #[test]
    fn qm9_bounds() {
        let s = DesignSpace::qm9(9).unwrap();
        assert_eq!(s.atom_counts[0].lo, 2);
        assert_eq!(&ub(&s)[1..], &[5, 5, 7]);
        assert_eq!((s.double_bonds.hi, s.triple_bonds.hi, s.rings.hi), (4, 4, 6));
        assert_eq!(s.atoms[3].covalence, 1);
    }

    #[test]
    fn small_n_rejected() {
        assert!(DesignSpace::qm7(1).is_err());
        assert!(DesignSpace::qm9(0).is_err());
    }

    #[test]
    fn feature_layout() {
        let s = DesignSpace::qm7(4).unwrap();
        assert_eq!(s.neighbor_feature(0), 4);
        assert_eq!(s.neighbor_feature(4), 8);
        assert_eq!(s.hydrogen_feature(0), 9);
        assert_eq!(s.hydrogen_feature(4), 13);
        assert_eq!(s.double_bond_feature(), 14);
        assert_eq!(s.triple_bond_feature(), 15);
    }

    #[test]
    fn dataset_parsing() {
        assert_eq!("QM9".parse::<Dataset>().unwrap(), Dataset::Qm9);
        assert!("qm8".parse::<Dataset>().is_err());
    }
}
