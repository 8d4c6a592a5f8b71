//! Lexicographic order on bounded integer multisets.
//!
//! A multiset with at most `L` elements drawn from `0..M` is mapped to a
//! non-decreasing sequence of length `L` by sorting it and padding with the
//! value `M`. Two multisets are ordered by comparing those sequences
//! position by position.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A multiset of non-negative integers, stored sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntMultiset {
    elems: Vec<usize>,
}

impl IntMultiset {
    pub fn new<I: IntoIterator<Item = usize>>(elems: I) -> Self {
        let mut elems: Vec<usize> = elems.into_iter().collect();
        elems.sort_unstable();
        IntMultiset { elems }
    }

    pub fn empty() -> Self {
        IntMultiset::default()
    }

    /// Elements in non-decreasing order.
    pub fn elements(&self) -> &[usize] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Returns `Ok(())` if the multiset can be padded to `S(m, l)`.
    pub fn check_admissible(&self, m: usize, l: usize) -> Result<()> {
        if self.elems.len() > l {
            return Err(Error::domain(format!(
                "multiset has {} elements, more than L = {l}",
                self.elems.len()
            )));
        }
        if let Some(&bad) = self.elems.iter().find(|&&e| e >= m) {
            return Err(Error::domain(format!("element {bad} is outside [0, {m})")));
        }
        Ok(())
    }
}

impl FromIterator<usize> for IntMultiset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        IntMultiset::new(iter)
    }
}

impl fmt::Display for IntMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

/// A member of `S(M, L)`: length `L`, non-decreasing, entries in `0..=M`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PaddedSequence {
    values: Vec<usize>,
    pad: usize,
}

impl PaddedSequence {
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn pad_value(&self) -> usize {
        self.pad
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl PartialOrd for PaddedSequence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PaddedSequence {
    fn cmp(&self, other: &Self) -> Ordering {
        self.values.cmp(&other.values)
    }
}

/// Sorts `ms` and pads it with `m` up to length `l`.
pub fn pad(ms: &IntMultiset, m: usize, l: usize) -> Result<PaddedSequence> {
    ms.check_admissible(m, l)?;
    let mut values = Vec::with_capacity(l);
    values.extend_from_slice(&ms.elems);
    values.resize(l, m);
    Ok(PaddedSequence { values, pad: m })
}

/// Compares two admissible multisets under the padded lexicographic order.
pub fn lex_compare(a: &IntMultiset, b: &IntMultiset, m: usize, l: usize) -> Result<Ordering> {
    a.check_admissible(m, l)?;
    b.check_admissible(m, l)?;
    Ok(compare_sorted(&a.elems, &b.elems))
}

/// Padded comparison of two sorted slices whose elements are all below the
/// padding value. Equivalent to padding both and comparing: once the common
/// prefix is exhausted, the shorter slice continues with padding, which is
/// larger than any remaining element of the longer one.
pub(crate) fn compare_sorted(a: &[usize], b: &[usize]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    b.len().cmp(&a.len())
}

/// Keeps the elements strictly below `m`, i.e. the intersection with
/// `{0, ..., m-1}`.
pub fn restrict(ms: &IntMultiset, m: usize) -> IntMultiset {
    IntMultiset { elems: ms.elems.iter().copied().filter(|&e| e < m).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(v: &[usize]) -> IntMultiset {
        IntMultiset::new(v.iter().copied())
    }

    #[test]
    fn pad_examples() {
        assert_eq!(pad(&ms(&[0, 1]), 6, 5).unwrap().values(), &[0, 1, 6, 6, 6]);
        assert_eq!(pad(&ms(&[]), 6, 5).unwrap().values(), &[6, 6, 6, 6, 6]);
        assert_eq!(pad(&ms(&[1, 0, 1, 1]), 6, 5).unwrap().values(), &[0, 1, 1, 1, 6]);
    }

    #[test]
    fn pad_rejects_inadmissible() {
        assert!(matches!(pad(&ms(&[0, 1, 2]), 6, 2), Err(Error::Domain(_))));
        assert!(matches!(pad(&ms(&[6]), 6, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn compare_examples() {
        assert_eq!(lex_compare(&ms(&[0, 1]), &ms(&[0, 2]), 6, 5).unwrap(), Ordering::Less);
        assert_eq!(lex_compare(&ms(&[0, 1, 1, 1]), &ms(&[0, 1, 1]), 6, 5).unwrap(), Ordering::Less);
        assert_eq!(lex_compare(&ms(&[0, 2]), &ms(&[0, 4]), 6, 5).unwrap(), Ordering::Less);
        assert_eq!(lex_compare(&ms(&[0, 1, 2]), &ms(&[0, 1, 5]), 6, 5).unwrap(), Ordering::Less);
        assert_eq!(lex_compare(&ms(&[3]), &ms(&[3]), 6, 5).unwrap(), Ordering::Equal);
        assert!(lex_compare(&ms(&[7]), &ms(&[3]), 6, 5).is_err());
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(restrict(&ms(&[0, 2, 5]), 3), ms(&[0, 2]));
        assert_eq!(restrict(&ms(&[4, 5]), 3), ms(&[]));
        assert_eq!(restrict(&ms(&[0, 1, 2]), 6), ms(&[0, 1, 2]));
    }

    /// Every multiset of size <= l over 0..m.
    fn all_multisets(m: usize, l: usize) -> Vec<IntMultiset> {
        fn rec(m: usize, l: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<IntMultiset>) {
            out.push(IntMultiset::new(cur.iter().copied()));
            if cur.len() == l {
                return;
            }
            for e in from..m {
                cur.push(e);
                rec(m, l, e, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(m, l, 0, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn exhaustive_small_properties() {
        for m in 1..=5 {
            for l in 0..=4 {
                let all = all_multisets(m, l);
                let padded: Vec<_> = all.iter().map(|a| pad(a, m, l).unwrap()).collect();
                // injectivity
                let distinct: std::collections::HashSet<_> = padded.iter().collect();
                assert_eq!(distinct.len(), all.len());
                for (a, pa) in all.iter().zip(&padded) {
                    for (b, pb) in all.iter().zip(&padded) {
                        let ord = lex_compare(a, b, m, l).unwrap();
                        assert_eq!(ord, pa.cmp(pb), "{a} vs {b}");
                        if ord != Ordering::Greater {
                            for k in 1..=m {
                                let r = lex_compare(&restrict(a, k), &restrict(b, k), m, l).unwrap();
                                assert_ne!(r, Ordering::Greater, "monotone restriction {a} {b} {k}");
                            }
                        }
                    }
                }
            }
        }
    }

    fn multiset_strategy(m: usize, l: usize) -> impl Strategy<Value = IntMultiset> {
        proptest::collection::vec(0..m, 0..=l).prop_map(IntMultiset::new)
    }

    proptest! {
        #[test]
        fn restriction_is_monotone(
            (m, l, a, b, k) in (2usize..12, 1usize..10).prop_flat_map(|(m, l)| {
                (Just(m), Just(l), multiset_strategy(m, l), multiset_strategy(m, l), 1..=m)
            })
        ) {
            let ord = lex_compare(&a, &b, m, l).unwrap();
            let padded = pad(&a, m, l).unwrap().cmp(&pad(&b, m, l).unwrap());
            prop_assert_eq!(ord, padded);
            if ord != Ordering::Greater {
                let r = lex_compare(&restrict(&a, k), &restrict(&b, k), m, l).unwrap();
                prop_assert_ne!(r, Ordering::Greater);
            }
        }
    }
}
