//! Exact backtracking enumeration of feasible molecular structures.
//!
//! The search assigns the adjacency upper triangle row by row, then a bond
//! order per edge, then an atom type per atom. Every other feature follows
//! from those choices, so each leaf is exactly one feasible assignment of
//! `(X, A, DB, TB)`.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::camd::{BondOrder, DesignSpace, MolecularGraph};
use crate::error::{Error, Result};
use crate::gnn::Gnn;
use crate::graph::DEFAULT_SMALL_N_CAP;
use crate::scalar::Scalar;

/// Largest atom count the enumerator accepts.
pub const MAX_ENUM_N: usize = 10;

/// Symmetry-breaking constraints added on top of the structural ones.
/// Levels are cumulative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintLevel {
    /// Connectivity to a smaller index only.
    S1,
    /// Plus atom 0 has the smallest feature code.
    S2,
    /// Plus neighbor sets are lexicographically monotone.
    S3,
}

impl ConstraintLevel {
    pub const ALL: [ConstraintLevel; 3] = [ConstraintLevel::S1, ConstraintLevel::S2, ConstraintLevel::S3];

    pub fn has_s2(self) -> bool {
        self >= ConstraintLevel::S2
    }

    pub fn has_s3(self) -> bool {
        self >= ConstraintLevel::S3
    }
}

impl FromStr for ConstraintLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(' ', "").as_str() {
            "s1" | "c" => Ok(ConstraintLevel::S1),
            "s2" | "s1+s2" => Ok(ConstraintLevel::S2),
            "s3" | "s1+s2+s3" => Ok(ConstraintLevel::S3),
            other => Err(Error::domain(format!("unknown constraint level `{other}` (expected s1, s2 or s3)"))),
        }
    }
}

impl fmt::Display for ConstraintLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintLevel::S1 => "s1",
            ConstraintLevel::S2 => "s2",
            ConstraintLevel::S3 => "s3",
        })
    }
}

/// Switches for the count-bound families, useful to localize a mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundFamilies {
    pub atom_counts: bool,
    pub double_bonds: bool,
    pub triple_bonds: bool,
    pub rings: bool,
}

impl Default for BoundFamilies {
    fn default() -> Self {
        BoundFamilies { atom_counts: true, double_bonds: true, triple_bonds: true, rings: true }
    }
}

#[derive(Clone, Debug)]
pub struct EnumOptions {
    pub level: ConstraintLevel,
    /// Worker threads for counting; `None` uses the global pool.
    pub threads: Option<usize>,
    pub time_budget: Option<Duration>,
    pub bounds: BoundFamilies,
    /// Also count isomorphism classes (needs canonical forms; small N only).
    pub classes: bool,
}

impl EnumOptions {
    pub fn new(level: ConstraintLevel) -> Self {
        EnumOptions { level, threads: None, time_budget: None, bounds: BoundFamilies::default(), classes: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationResult {
    pub count: u64,
    pub classes: Option<u64>,
    pub elapsed: Duration,
}

/// One leaf of the search, in the search's own compact form.
struct Leaf<'a> {
    present: usize,
    edges: &'a [(usize, usize)],
    orders: &'a [u8],
    types: &'a [usize],
    degree: &'a [u32],
    valence: &'a [u32],
    doubles: &'a [u32],
    triples: &'a [u32],
}

struct Search<'a> {
    space: &'a DesignSpace,
    level: ConstraintLevel,
    bounds: BoundFamilies,
    n: usize,
    max_degree: u32,
    max_valence: u32,
    max_doubles: u32,
    max_triples: u32,
}

/// An adjacency skeleton over the first `present` atoms.
#[derive(Clone, Copy, Debug)]
struct Skeleton {
    present: usize,
    mask: u64,
}

fn pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v))).collect()
}

impl<'a> Search<'a> {
    fn new(space: &'a DesignSpace, opts: &EnumOptions) -> Result<Self> {
        space.validate()?;
        if space.n > MAX_ENUM_N {
            return Err(Error::Unsupported(format!("enumeration supports N <= {MAX_ENUM_N}, got {}", space.n)));
        }
        let covs = space.atoms.iter().map(|a| a.covalence);
        Ok(Search {
            space,
            level: opts.level,
            bounds: opts.bounds,
            n: space.n,
            max_degree: space.max_degree() as u32,
            max_valence: covs.clone().max().unwrap_or(0),
            max_doubles: space.atoms.iter().map(|a| a.max_double_bonds()).max().unwrap_or(0),
            max_triples: space.atoms.iter().map(|a| a.max_triple_bonds()).max().unwrap_or(0),
        })
    }

    fn present_range(&self) -> std::ops::RangeInclusive<usize> {
        if self.space.exact_n {
            self.n..=self.n
        } else {
            2..=self.n
        }
    }

    /// `sum 2^(N-u-1)` over neighbors `u` of `v` other than `w`.
    fn neighbor_code(&self, nb: &[u32], v: usize, w: usize) -> u64 {
        let mut bits = nb[v] & !(1 << w);
        let mut code = 0u64;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            code |= 1 << (self.n - u - 1);
            bits &= bits - 1;
        }
        code
    }

    fn c27_pair(&self, nb: &[u32], v: usize) -> bool {
        self.neighbor_code(nb, v, v + 1) >= self.neighbor_code(nb, v + 1, v)
    }

    fn skeletons(&self) -> Vec<Skeleton> {
        let mut out = Vec::new();
        for m in self.present_range() {
            let ps = pairs(m);
            let ring_slack = |b: u32| (m - 1) as u64 + u64::from(b);
            let (min_edges, max_edges) = if self.bounds.rings {
                (ring_slack(self.space.rings.lo), ring_slack(self.space.rings.hi))
            } else {
                (0, ps.len() as u64)
            };
            let mut st = AdjState { nb: vec![0; m], deg: vec![0; m], edges: 0, mask: 0 };
            self.adjacency(m, &ps, 0, &mut st, (min_edges, max_edges), &mut out);
        }
        out
    }

    fn adjacency(
        &self,
        m: usize,
        ps: &[(usize, usize)],
        k: usize,
        st: &mut AdjState,
        edge_range: (u64, u64),
        out: &mut Vec<Skeleton>,
    ) {
        if k == ps.len() {
            if st.edges >= edge_range.0 {
                out.push(Skeleton { present: m, mask: st.mask });
            }
            return;
        }
        let (u, v) = ps[k];
        let choices: &[bool] = if k == 0 { &[true] } else { &[false, true] };
        for &bit in choices {
            if bit {
                if st.deg[u] >= self.max_degree || st.deg[v] >= self.max_degree || st.edges >= edge_range.1 {
                    continue;
                }
                st.nb[u] |= 1 << v;
                st.nb[v] |= 1 << u;
                st.deg[u] += 1;
                st.deg[v] += 1;
                st.edges += 1;
                st.mask |= 1 << k;
            }
            if self.adjacency_ok(m, u, v, &st.nb) {
                self.adjacency(m, ps, k + 1, st, edge_range, out);
            }
            if bit {
                st.nb[u] &= !(1 << v);
                st.nb[v] &= !(1 << u);
                st.deg[u] -= 1;
                st.deg[v] -= 1;
                st.edges -= 1;
                st.mask &= !(1 << k);
            }
        }
    }

    /// Checks that become decidable once pair `(u, v)` is assigned.
    fn adjacency_ok(&self, m: usize, u: usize, v: usize, nb: &[u32]) -> bool {
        // column v is complete above the diagonal once (v-1, v) is set
        if v == u + 1 && nb[v] & ((1 << v) - 1) == 0 {
            return false;
        }
        if !self.level.has_s3() || v != m - 1 {
            return true;
        }
        // row u is finished: columns up to u are complete
        if u >= 2 && !self.c27_pair(nb, u - 1) {
            return false;
        }
        if u == m - 2 && u >= 1 && !self.c27_pair(nb, u) {
            return false;
        }
        true
    }

    /// Bond orders per edge, then atom types.
    fn run_skeleton(&self, sk: Skeleton, sink: &mut dyn FnMut(&Leaf) -> ControlFlow<()>) -> ControlFlow<()> {
        let m = sk.present;
        let edges: Vec<(usize, usize)> =
            pairs(m).into_iter().enumerate().filter(|(k, _)| sk.mask >> k & 1 == 1).map(|(_, e)| e).collect();
        let mut degree = vec![0u32; m];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut st = BondState {
            orders: vec![1; edges.len()],
            valence: degree.clone(),
            doubles: vec![0; m],
            triples: vec![0; m],
            total_doubles: 0,
            total_triples: 0,
        };
        if st.valence.iter().any(|&x| x > self.max_valence) {
            return ControlFlow::Continue(());
        }
        self.bonds(&edges, &degree, 0, &mut st, sink)
    }

    fn bonds(
        &self,
        edges: &[(usize, usize)],
        degree: &[u32],
        k: usize,
        st: &mut BondState,
        sink: &mut dyn FnMut(&Leaf) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if k == edges.len() {
            let b = self.bounds;
            let sp = self.space;
            if b.double_bonds && !sp.double_bonds.contains(i64::from(st.total_doubles)) {
                return ControlFlow::Continue(());
            }
            if b.triple_bonds && !sp.triple_bonds.contains(i64::from(st.total_triples)) {
                return ControlFlow::Continue(());
            }
            let m = degree.len();
            let mut ts = TypeState { types: vec![0; m], counts: vec![0; sp.num_atom_types()], code0: 0 };
            let ctx = BondCtx { edges, degree, bonds: st };
            return self.types(&ctx, 0, &mut ts, sink);
        }
        let (u, v) = edges[k];
        for order in 1u8..=3 {
            if order > 1 {
                let extra = u32::from(order) - 1;
                if st.valence[u] + extra > self.max_valence || st.valence[v] + extra > self.max_valence {
                    break;
                }
                if order == 2 {
                    if st.doubles[u] >= self.max_doubles
                        || st.doubles[v] >= self.max_doubles
                        || (self.bounds.double_bonds && st.total_doubles >= self.space.double_bonds.hi)
                    {
                        continue;
                    }
                } else if st.triples[u] >= self.max_triples
                    || st.triples[v] >= self.max_triples
                    || (self.bounds.triple_bonds && st.total_triples >= self.space.triple_bonds.hi)
                {
                    continue;
                }
            }
            st.set(k, u, v, order, true);
            let flow = self.bonds(edges, degree, k + 1, st, sink);
            st.set(k, u, v, order, false);
            flow?;
        }
        ControlFlow::Continue(())
    }

    fn feature_code(&self, t: usize, degree: u32, h: u32, db: bool, tb: bool) -> u64 {
        let sp = self.space;
        let f = sp.num_features();
        let bit = |k: usize| 1u64 << (f - k - 1);
        let mut code = bit(sp.type_feature(t)) | bit(sp.neighbor_feature(degree as usize)) | bit(sp.hydrogen_feature(h as usize));
        if db {
            code |= bit(sp.double_bond_feature());
        }
        if tb {
            code |= bit(sp.triple_bond_feature());
        }
        code
    }

    fn types(
        &self,
        ctx: &BondCtx,
        v: usize,
        ts: &mut TypeState,
        sink: &mut dyn FnMut(&Leaf) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let m = ctx.degree.len();
        let st = ctx.bonds;
        if v == m {
            return sink(&Leaf {
                present: m,
                edges: ctx.edges,
                orders: &st.orders,
                types: &ts.types,
                degree: ctx.degree,
                valence: &st.valence,
                doubles: &st.doubles,
                triples: &st.triples,
            });
        }
        let sp = self.space;
        for (t, atom) in sp.atoms.iter().enumerate() {
            let cov = atom.covalence;
            if cov < st.valence[v] || (cov - st.valence[v]) as usize > sp.max_hydrogens() {
                continue;
            }
            if st.doubles[v] > atom.max_double_bonds() || st.triples[v] > atom.max_triple_bonds() {
                continue;
            }
            if self.bounds.atom_counts {
                if ts.counts[t] >= sp.atom_counts[t].hi {
                    continue;
                }
                // remaining atoms must still cover every lower bound
                ts.counts[t] += 1;
                let missing: u32 =
                    sp.atom_counts.iter().zip(&ts.counts).map(|(b, &c)| b.lo.saturating_sub(c)).sum();
                ts.counts[t] -= 1;
                if missing as usize > m - v - 1 {
                    continue;
                }
            }
            if self.level.has_s2() {
                let code = self.feature_code(t, ctx.degree[v], cov - st.valence[v], st.doubles[v] > 0, st.triples[v] > 0);
                if v == 0 {
                    ts.code0 = code;
                } else if code < ts.code0 {
                    continue;
                }
            }
            ts.types[v] = t;
            ts.counts[t] += 1;
            let flow = self.types(ctx, v + 1, ts, sink);
            ts.counts[t] -= 1;
            flow?;
        }
        ControlFlow::Continue(())
    }

    fn build(&self, leaf: &Leaf) -> MolecularGraph {
        let sp = self.space;
        let mut mol = MolecularGraph::new(self.n, sp.num_features());
        for v in leaf.present..self.n {
            mol.set_a_entry(v, v, false);
        }
        for (&(u, v), &o) in leaf.edges.iter().zip(leaf.orders) {
            let order = match o {
                1 => BondOrder::Single,
                2 => BondOrder::Double,
                _ => BondOrder::Triple,
            };
            mol.set_bond(u, v, Some(order));
        }
        for v in 0..leaf.present {
            let t = leaf.types[v];
            let h = sp.atoms[t].covalence - leaf.valence[v];
            mol.set_x(v, sp.type_feature(t), true);
            mol.set_x(v, sp.neighbor_feature(leaf.degree[v] as usize), true);
            mol.set_x(v, sp.hydrogen_feature(h as usize), true);
            mol.set_x(v, sp.double_bond_feature(), leaf.doubles[v] > 0);
            mol.set_x(v, sp.triple_bond_feature(), leaf.triples[v] > 0);
        }
        mol
    }
}

struct AdjState {
    nb: Vec<u32>,
    deg: Vec<u32>,
    edges: u64,
    mask: u64,
}

struct BondState {
    orders: Vec<u8>,
    valence: Vec<u32>,
    doubles: Vec<u32>,
    triples: Vec<u32>,
    total_doubles: u32,
    total_triples: u32,
}

impl BondState {
    fn set(&mut self, k: usize, u: usize, v: usize, order: u8, on: bool) {
        if order == 1 {
            return;
        }
        let extra = u32::from(order) - 1;
        let (counts, total) = if order == 2 {
            (&mut self.doubles, &mut self.total_doubles)
        } else {
            (&mut self.triples, &mut self.total_triples)
        };
        if on {
            self.orders[k] = order;
            self.valence[u] += extra;
            self.valence[v] += extra;
            counts[u] += 1;
            counts[v] += 1;
            *total += 1;
        } else {
            self.orders[k] = 1;
            self.valence[u] -= extra;
            self.valence[v] -= extra;
            counts[u] -= 1;
            counts[v] -= 1;
            *total -= 1;
        }
    }
}

struct BondCtx<'a> {
    edges: &'a [(usize, usize)],
    degree: &'a [u32],
    bonds: &'a BondState,
}

struct TypeState {
    types: Vec<usize>,
    counts: Vec<u32>,
    code0: u64,
}

fn deadline(opts: &EnumOptions) -> Option<Instant> {
    opts.time_budget.map(|b| Instant::now() + b)
}

fn count_skeletons(search: &Search, skeletons: &[Skeleton], deadline: Option<Instant>) -> (u64, bool) {
    let expired = AtomicBool::new(false);
    let counts: Vec<Option<u64>> = skeletons
        .par_iter()
        .map(|&sk| {
            if expired.load(Ordering::Relaxed) || deadline.is_some_and(|d| Instant::now() > d) {
                expired.store(true, Ordering::Relaxed);
                return None;
            }
            let mut c = 0u64;
            let _ = search.run_skeleton(sk, &mut |_| {
                c += 1;
                ControlFlow::Continue(())
            });
            Some(c)
        })
        .collect();
    let total = counts.iter().flatten().sum();
    (total, expired.into_inner())
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Counts assignments satisfying the structural constraints and the level's
/// symmetry-breaking constraints.
pub fn count_feasible(space: &DesignSpace, level: ConstraintLevel) -> Result<EnumerationResult> {
    count_feasible_with(space, &EnumOptions::new(level))
}

pub fn count_feasible_with(space: &DesignSpace, opts: &EnumOptions) -> Result<EnumerationResult> {
    let start = Instant::now();
    let search = Search::new(space, opts)?;
    let limit = deadline(opts);
    let (count, expired) = with_pool(opts.threads, || {
        let skeletons = search.skeletons();
        count_skeletons(&search, &skeletons, limit)
    })?;
    if expired {
        return Err(Error::BudgetExceeded { partial: count });
    }
    let classes = if opts.classes { Some(canonical_classes(space, opts)?.len() as u64) } else { None };
    Ok(EnumerationResult { count, classes, elapsed: start.elapsed() })
}

/// Visits feasible molecules in enumeration order until `visit` breaks.
/// Returns the number of molecules visited.
pub fn for_each_feasible(
    space: &DesignSpace,
    opts: &EnumOptions,
    mut visit: impl FnMut(&MolecularGraph) -> ControlFlow<()>,
) -> Result<u64> {
    let search = Search::new(space, opts)?;
    let limit = deadline(opts);
    let mut n = 0u64;
    for sk in search.skeletons() {
        if limit.is_some_and(|d| Instant::now() > d) {
            return Err(Error::BudgetExceeded { partial: n });
        }
        let flow = search.run_skeleton(sk, &mut |leaf| {
            n += 1;
            visit(&search.build(leaf))
        });
        if flow.is_break() {
            break;
        }
    }
    Ok(n)
}

pub fn collect_feasible(space: &DesignSpace, opts: &EnumOptions) -> Result<Vec<MolecularGraph>> {
    let mut out = Vec::new();
    for_each_feasible(space, opts, |m| {
        out.push(m.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

fn check_class_cap(space: &DesignSpace) -> Result<()> {
    if space.n > DEFAULT_SMALL_N_CAP {
        return Err(Error::Unsupported(format!(
            "isomorphism classes need N <= {DEFAULT_SMALL_N_CAP}, got {}",
            space.n
        )));
    }
    Ok(())
}

/// Canonical forms of all feasible molecules at the given level.
pub fn canonical_classes(space: &DesignSpace, opts: &EnumOptions) -> Result<BTreeSet<Vec<u8>>> {
    check_class_cap(space)?;
    let mols = collect_feasible(space, opts)?;
    let forms: Vec<Vec<u8>> = with_pool(opts.threads, || {
        mols.par_iter().map(|m| m.canonical_form(DEFAULT_SMALL_N_CAP)).collect::<Result<Vec<_>>>()
    })??;
    Ok(forms.into_iter().collect())
}

/// Number of isomorphism classes among structures feasible without symmetry
/// breaking.
pub fn count_classes(space: &DesignSpace) -> Result<u64> {
    Ok(canonical_classes(space, &EnumOptions::new(ConstraintLevel::S1))?.len() as u64)
}

/// Exhaustive minimization of a model over all feasible structures. Ties
/// keep the first structure in enumeration order.
pub fn brute_optimize<T: Scalar>(
    space: &DesignSpace,
    model: &Gnn<T>,
    opts: &EnumOptions,
) -> Result<(MolecularGraph, T)> {
    if model.input_dim() != space.num_features() {
        return Err(Error::domain(format!(
            "model input width {} does not match {} features",
            model.input_dim(),
            space.num_features()
        )));
    }
    let mut best: Option<(MolecularGraph, T)> = None;
    let mut failure = None;
    for_each_feasible(space, opts, |m| match model.forward(m) {
        Ok(y) => {
            if best.as_ref().is_none_or(|(_, b)| y < *b) {
                best = Some((m.clone(), y));
            }
            ControlFlow::Continue(())
        }
        Err(e) => {
            failure = Some(e);
            ControlFlow::Break(())
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    best.ok_or_else(|| Error::domain("the design space has no feasible structure"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camd::{check_c26, check_c27, check_structure};
    use ConstraintLevel::*;

    fn counts(space: &DesignSpace) -> Vec<u64> {
        ConstraintLevel::ALL.iter().map(|&l| count_feasible(space, l).unwrap().count).collect()
    }

    #[test]
    fn qm7_small_rows() {
        assert_eq!(counts(&DesignSpace::qm7(2).unwrap()), vec![17, 10, 10]);
        assert_eq!(counts(&DesignSpace::qm7(3).unwrap()), vec![112, 37, 37]);
    }

    #[test]
    fn qm9_small_rows() {
        assert_eq!(counts(&DesignSpace::qm9(2).unwrap()), vec![15, 9, 9]);
        assert_eq!(counts(&DesignSpace::qm9(3).unwrap()), vec![175, 54, 54]);
    }

    #[test]
    fn every_emitted_molecule_passes_the_checkers() {
        for space in [DesignSpace::qm7(4).unwrap(), DesignSpace::qm9(3).unwrap()] {
            for level in ConstraintLevel::ALL {
                let mols = collect_feasible(&space, &EnumOptions::new(level)).unwrap();
                assert_eq!(mols.len() as u64, count_feasible(&space, level).unwrap().count);
                let distinct: BTreeSet<_> = mols.iter().map(crate::camd::format_molecule).collect();
                assert_eq!(distinct.len(), mols.len());
                for m in &mols {
                    assert!(check_structure(&space, m).unwrap().is_empty(), "{}", m.describe(&space));
                    if level.has_s2() {
                        assert!(check_c26(&space, m).unwrap());
                    }
                    if level.has_s3() {
                        assert!(check_c27(&space, m).unwrap());
                    }
                }
            }
        }
    }

    /// Oracle: all assignments of types and bond orders on N = 3, filtered
    /// by the predicate checkers.
    #[test]
    fn matches_checker_brute_force() {
        use crate::camd::{check_c26, MolecularGraph};
        let space = DesignSpace::qm7(3).unwrap();
        let ps = pairs(3);
        let mut expect = [0u64; 3];
        for codes in 0..4u32.pow(3) {
            for types in 0..4usize.pow(3) {
                let ty: Vec<usize> = (0..3).map(|i| types / 4usize.pow(i) % 4).collect();
                let bonds: Vec<(usize, usize, BondOrder)> = ps
                    .iter()
                    .enumerate()
                    .filter_map(|(k, &(u, v))| match codes / 4u32.pow(k as u32) % 4 {
                        0 => None,
                        1 => Some((u, v, BondOrder::Single)),
                        2 => Some((u, v, BondOrder::Double)),
                        _ => Some((u, v, BondOrder::Triple)),
                    })
                    .collect();
                let Ok(m) = MolecularGraph::from_skeleton(&space, &ty, &bonds) else { continue };
                if !check_structure(&space, &m).unwrap().is_empty() {
                    continue;
                }
                expect[0] += 1;
                if check_c26(&space, &m).unwrap() {
                    expect[1] += 1;
                    if check_c27(&space, &m).unwrap() {
                        expect[2] += 1;
                    }
                }
            }
        }
        assert_eq!(counts(&space), expect.to_vec());
    }

    #[test]
    fn classes_for_tiny_spaces() {
        assert_eq!(count_classes(&DesignSpace::qm7(2).unwrap()).unwrap(), 10);
        // 6 all-carbon, 11 with N, 8 each with O and S; the three-atom
        // symmetric count double-counts e.g. propene, whose two ends can swap
        assert_eq!(count_classes(&DesignSpace::qm7(3).unwrap()).unwrap(), 33);
        let mut opts = EnumOptions::new(S3);
        opts.classes = true;
        let r = count_feasible_with(&DesignSpace::qm7(4).unwrap(), &opts).unwrap();
        assert!(r.classes.unwrap() <= r.count);
    }

    /// Oracle: smallest fixture text over all relabelings.
    fn brute_classes(space: &DesignSpace, level: ConstraintLevel) -> BTreeSet<String> {
        use crate::graph::{permutations, Permutation};
        let perms: Vec<Permutation> = permutations(space.n).map(|p| Permutation::new(p).unwrap()).collect();
        collect_feasible(space, &EnumOptions::new(level))
            .unwrap()
            .iter()
            .map(|m| perms.iter().map(|p| crate::camd::format_molecule(&m.permute(p).unwrap())).min().unwrap())
            .collect()
    }

    #[test]
    fn class_counts_match_relabeling_oracle() {
        for space in [DesignSpace::qm7(3).unwrap(), DesignSpace::qm9(3).unwrap(), DesignSpace::qm7(4).unwrap()] {
            let oracle = brute_classes(&space, S1);
            assert_eq!(count_classes(&space).unwrap(), oracle.len() as u64);
            assert_eq!(brute_classes(&space, S3), oracle);
        }
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        let space = DesignSpace::qm9(4).unwrap();
        let mut opts = EnumOptions::new(S2);
        let base = count_feasible_with(&space, &opts).unwrap().count;
        for t in [1, 3] {
            opts.threads = Some(t);
            assert_eq!(count_feasible_with(&space, &opts).unwrap().count, base);
        }
    }

    #[test]
    fn zero_budget_reports_partial() {
        let mut opts = EnumOptions::new(S1);
        opts.time_budget = Some(Duration::ZERO);
        assert!(matches!(
            count_feasible_with(&DesignSpace::qm7(4).unwrap(), &opts),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn disabling_bounds_only_adds_solutions() {
        let space = DesignSpace::qm7(3).unwrap();
        let base = count_feasible(&space, S1).unwrap().count;
        let mut opts = EnumOptions::new(S1);
        opts.bounds.atom_counts = false;
        assert!(count_feasible_with(&space, &opts).unwrap().count > base);
    }

    #[test]
    fn variable_size_counts_every_prefix() {
        let mut space = DesignSpace::qm7(3).unwrap();
        space.exact_n = false;
        // same bounds, two or three atoms present
        let var = count_feasible(&space, S3).unwrap().count;
        let mut two = DesignSpace::qm7(3).unwrap();
        two.n = 2;
        for b in &mut two.atom_counts {
            b.hi = b.hi.min(2);
        }
        let exact_three = count_feasible(&DesignSpace::qm7(3).unwrap(), S3).unwrap().count;
        let exact_two = count_feasible(&two, S3).unwrap().count;
        assert_eq!(var, exact_two + exact_three);
        for m in collect_feasible(&space, &EnumOptions::new(S3)).unwrap() {
            assert!(check_structure(&space, &m).unwrap().is_empty());
            assert!(check_c26(&space, &m).unwrap() && check_c27(&space, &m).unwrap());
        }
    }
}
