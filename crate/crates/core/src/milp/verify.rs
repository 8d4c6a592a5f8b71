use std::collections::BTreeMap;
use std::fmt;

use crate::camd::{check_c26, check_c27, check_structure, DesignSpace, MolecularGraph};
use crate::error::{Error, Result};
use crate::gnn::GnnModel;
use crate::milp::build::{a_name, db_name, tb_name, x_name, OUTPUT_VAR};
use crate::milp::model::{MilpModel, VarKind};

/// Tolerance for constraint residuals, bounds and integrality.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Values of model variables by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    values: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Reads `name value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut a = Assignment::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::parse(format!("line {}", i + 1), "expected `name value`"));
            };
            let v: f64 =
                val.parse().map_err(|_| Error::parse(format!("line {}", i + 1), format!("bad value `{val}`")))?;
            a.set(name, v);
        }
        Ok(a)
    }

    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} {}\n", crate::milp::lp::format_number(*v))).collect()
    }
}

/// Worst violations found by [`check_assignment`].
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    /// Largest residual per constraint family.
    pub families: BTreeMap<String, f64>,
    /// Largest bound violation and the variable responsible.
    pub bounds: (f64, Option<String>),
    /// Largest distance of a binary from {0, 1}.
    pub integrality: (f64, Option<String>),
    /// Constraint with the largest residual overall.
    pub worst: Option<(String, f64)>,
    pub objective: f64,
}

impl CheckReport {
    pub fn max_residual(&self) -> f64 {
        self.families.values().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_residual() <= FEASIBILITY_TOL
            && self.bounds.0 <= FEASIBILITY_TOL
            && self.integrality.0 <= FEASIBILITY_TOL
    }

    /// Families whose residual exceeds the tolerance.
    pub fn failing_families(&self) -> Vec<&str> {
        self.families.iter().filter(|(_, &r)| r > FEASIBILITY_TOL).map(|(k, _)| k.as_str()).collect()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pass={}", self.passed())?;
        writeln!(f, "objective={}", self.objective)?;
        writeln!(f, "max_residual={:e}", self.max_residual())?;
        writeln!(f, "bound_violation={:e}", self.bounds.0)?;
        writeln!(f, "integrality_violation={:e}", self.integrality.0)?;
        if let Some((name, r)) = &self.worst {
            writeln!(f, "worst_constraint={name}")?;
            writeln!(f, "worst_residual={r:e}")?;
        }
        for (fam, r) in &self.families {
            writeln!(f, "residual.{fam}={r:e}")?;
        }
        Ok(())
    }
}

/// Evaluates every constraint, bound and integrality requirement.
pub fn check_assignment(m: &MilpModel, a: &Assignment) -> Result<CheckReport> {
    let mut values = Vec::with_capacity(m.variables().len());
    for v in m.variables() {
        let x = a.get(&v.name).ok_or_else(|| Error::domain(format!("assignment has no value for `{}`", v.name)))?;
        values.push(x);
    }
    let mut families: BTreeMap<String, f64> = BTreeMap::new();
    let mut worst: Option<(String, f64)> = None;
    for c in m.constraints() {
        let r = c.violation(&values);
        let e = families.entry(c.family().to_string()).or_insert(0.0);
        *e = e.max(r);
        if worst.as_ref().is_none_or(|w| r > w.1) {
            worst = Some((c.name.clone(), r));
        }
    }
    let mut bounds = (0.0, None);
    let mut integrality = (0.0, None);
    for (v, &x) in m.variables().iter().zip(&values) {
        let viol = (v.lo - x).max(x - v.hi).max(0.0);
        if viol > bounds.0 || x.is_nan() {
            bounds = (if x.is_nan() { f64::INFINITY } else { viol }, Some(v.name.clone()));
        }
        if v.kind == VarKind::Binary {
            let d = x.abs().min((x - 1.0).abs());
            if d > integrality.0 {
                integrality = (d, Some(v.name.clone()));
            }
        }
    }
    let objective = m.objective().iter().map(|&(i, c)| c * values[i]).sum();
    Ok(CheckReport { families, bounds, integrality, worst, objective })
}

/// Values for every variable the builder can create, derived from a
/// molecule and a forward pass, without checking feasibility.
pub fn assignment_for(m: &MilpModel, space: &DesignSpace, mol: &MolecularGraph, gnn: &GnnModel) -> Result<Assignment> {
    let (n, f) = (space.n, space.num_features());
    if mol.n() != n || mol.num_features() != f {
        return Err(Error::domain("molecule dimensions do not match the design space"));
    }
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    let mut all = Assignment::new();
    for u in 0..n {
        for v in 0..n {
            all.set(a_name(u, v), b(mol.a(u, v)));
            all.set(db_name(u, v), b(mol.db(u, v)));
            all.set(tb_name(u, v), b(mol.tb(u, v)));
        }
        for k in 0..f {
            all.set(x_name(u, k), b(mol.x(u, k)));
        }
    }
    let t = gnn.forward_trace(mol)?;
    let mut prev = &t.input;
    for (li, acts) in t.graph.iter().enumerate() {
        let l = li + 1;
        for v in 0..n {
            for c in 0..acts.pre[v].len() {
                all.set(format!("p{l}_{v}_{c}"), acts.pre[v][c]);
                all.set(format!("h{l}_{v}_{c}"), acts.post[v][c]);
                all.set(format!("r{l}_{v}_{c}"), b(acts.pre[v][c] > 0.0));
            }
            for u in (0..n).filter(|&u| u != v) {
                let e = mol.a(u.min(v), u.max(v));
                for (j, &xj) in prev[u].iter().enumerate() {
                    all.set(format!("z{l}_{u}_{v}_{j}"), if e { xj } else { 0.0 });
                }
            }
        }
        prev = &acts.post;
    }
    for (c, &p) in t.pooled.iter().enumerate() {
        all.set(format!("pool_{c}"), p);
    }
    for (ki, (pre, post)) in t.dense.iter().enumerate() {
        let k = ki + 1;
        for c in 0..pre.len() {
            all.set(format!("dp{k}_{c}"), pre[c]);
            all.set(format!("d{k}_{c}"), post[c]);
            all.set(format!("dr{k}_{c}"), b(pre[c] > 0.0));
        }
    }
    all.set(OUTPUT_VAR, t.output);
    let mut out = Assignment::new();
    for v in m.variables() {
        let x = all.get(&v.name).ok_or_else(|| Error::Build(format!("no embedding rule for variable `{}`", v.name)))?;
        out.set(v.name.clone(), x);
    }
    Ok(out)
}

/// Embeds a feasible molecule as a full model assignment. Molecules that
/// violate a structural constraint, or a symmetry constraint the model
/// contains, are rejected with the list of violations.
pub fn embed_solution(m: &MilpModel, space: &DesignSpace, mol: &MolecularGraph, gnn: &GnnModel) -> Result<Assignment> {
    let mut violated: Vec<String> = check_structure(space, mol)?.iter().map(ToString::to_string).collect();
    let symmetry = m.info.as_ref().map_or(m.count_family("C26") + m.count_family("C27") > 0, |i| i.symmetry);
    if symmetry {
        if !check_c26(space, mol)? {
            violated.push("C26".into());
        }
        if !check_c27(space, mol)? {
            violated.push("C27".into());
        }
    }
    if !violated.is_empty() {
        return Err(Error::Infeasible(violated));
    }
    assignment_for(m, space, mol, gnn)
}
