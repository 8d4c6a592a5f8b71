use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::camd::DesignSpace;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "lower_bound")]
    pub lo: f64,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "upper_bound")]
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// `sum terms + sum quad  (sense)  rhs`, with terms sorted by variable index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quad: Vec<(usize, usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Family name: everything before the first `_`.
    pub fn family(&self) -> &str {
        self.name.split('_').next().unwrap_or(&self.name)
    }

    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * values[i]).sum::<f64>()
            + self.quad.iter().map(|&(i, j, c)| c * values[i] * values[j]).sum::<f64>()
    }

    /// Amount by which the constraint is violated (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.lhs(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Edge-gated messages as products of a binary and a continuous variable.
    Bilinear,
    /// Edge-gated messages through auxiliary variables and big-M constraints.
    Bigm,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bilinear" => Ok(Variant::Bilinear),
            "bigm" | "big-m" => Ok(Variant::Bigm),
            other => Err(Error::domain(format!("unknown variant `{other}` (expected bilinear or bigm)"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Bilinear => "bilinear",
            Variant::Bigm => "bigm",
        })
    }
}

/// How a model was built, kept alongside it for later verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub space: DesignSpace,
    pub variant: Variant,
    pub symmetry: bool,
}

/// Mixed-integer model: minimize a linear objective subject to linear and
/// bilinear constraints.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<BuildInfo>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl PartialEq for MilpModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.variables == other.variables
            && self.constraints == other.constraints
            && self.objective == other.objective
            && self.info == other.info
    }
}

fn normalize_terms(terms: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut t: Vec<(usize, f64)> = terms.into_iter().collect();
    t.sort_by_key(|&(i, _)| i);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
    for (i, c) in t {
        match out.last_mut() {
            Some((j, d)) if *j == i => *d += c,
            _ => out.push((i, c)),
        }
    }
    out.retain(|&(_, c)| c != 0.0);
    out
}

fn normalize_quad(terms: impl IntoIterator<Item = (usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    let mut t: Vec<(usize, usize, f64)> = terms.into_iter().map(|(i, j, c)| (i.min(j), i.max(j), c)).collect();
    t.sort_by_key(|&(i, j, _)| (i, j));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
    for (i, j, c) in t {
        match out.last_mut() {
            Some((a, b, d)) if (*a, *b) == (i, j) => *d += c,
            _ => out.push((i, j, c)),
        }
    }
    out.retain(|&(_, _, c)| c != 0.0);
    out
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel { name: name.into(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lo: f64, hi: f64) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Build(format!("duplicate variable `{name}`")));
        }
        let (lo, hi) = if kind == VarKind::Binary { (lo.max(0.0), hi.min(1.0)) } else { (lo, hi) };
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Build(format!("variable `{name}` has empty bounds [{lo}, {hi}]")));
        }
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable { name, kind, lo, hi });
        Ok(id)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<usize> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> Result<usize> {
        self.add_var(name, VarKind::Continuous, lo, hi)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<()> {
        self.add_quadratic(name, terms, std::iter::empty(), sense, rhs)
    }

    pub fn add_quadratic(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        quad: impl IntoIterator<Item = (usize, usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<()> {
        let name = name.into();
        let terms = normalize_terms(terms);
        let quad = normalize_quad(quad);
        let nv = self.variables.len();
        if terms.iter().any(|&(i, _)| i >= nv) || quad.iter().any(|&(_, j, _)| j >= nv) {
            return Err(Error::Build(format!("constraint `{name}` references an undeclared variable")));
        }
        if !rhs.is_finite() || terms.iter().any(|t| !t.1.is_finite()) || quad.iter().any(|t| !t.2.is_finite()) {
            return Err(Error::Build(format!("constraint `{name}` has a non-finite coefficient")));
        }
        self.constraints.push(Constraint { name, terms, quad, sense, rhs });
        Ok(())
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, f64)>) {
        self.objective = normalize_terms(terms);
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn var(&self, name: &str) -> Option<&Variable> {
        self.var_index(name).map(|i| &self.variables[i])
    }

    pub fn is_bilinear(&self) -> bool {
        self.constraints.iter().any(|c| !c.quad.is_empty())
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn count_family(&self, family: &str) -> usize {
        self.constraints.iter().filter(|c| c.family() == family).count()
    }

    fn rebuild_index(&mut self) -> Result<()> {
        self.index.clear();
        for (i, v) in self.variables.iter().enumerate() {
            if self.index.insert(v.name.clone(), i).is_some() {
                return Err(Error::parse("variables", format!("duplicate variable `{}`", v.name)));
            }
        }
        let nv = self.variables.len();
        let bad = |c: &Constraint| c.terms.iter().any(|t| t.0 >= nv) || c.quad.iter().any(|t| t.0 >= nv || t.1 >= nv);
        if let Some(c) = self.constraints.iter().find(|c| bad(c)) {
            return Err(Error::parse(format!("constraint {}", c.name), "variable index out of range"));
        }
        if self.objective.iter().any(|t| t.0 >= nv) {
            return Err(Error::parse("objective", "variable index out of range"));
        }
        Ok(())
    }

    /// JSON companion document describing the model exactly.
    pub fn to_meta_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_meta_json(text: &str) -> Result<Self> {
        let mut m: MilpModel = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        m.rebuild_index()?;
        Ok(m)
    }

    pub fn load_meta(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_meta_json(&std::fs::read_to_string(path)?)
    }
}

// Infinite bounds travel as `null`, since JSON has no infinity.
fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn lower_bound<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

fn upper_bound<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}
