//! Free-format MPS. Linear models only.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::milp::lp::format_number;
use crate::milp::model::{MilpModel, Sense, VarKind};

const OBJ_ROW: &str = "obj";

pub fn emit_mps(m: &MilpModel) -> Result<String> {
    if m.is_bilinear() {
        return Err(Error::Unsupported("MPS output cannot hold bilinear constraints; use LP".into()));
    }
    let mut out = String::new();
    let mut push = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    push(format!("NAME {}", m.name));
    push("ROWS".into());
    push(format!(" N {OBJ_ROW}"));
    for c in m.constraints() {
        let s = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        push(format!(" {s} {}", c.name));
    }
    // column-major view of the coefficient matrix
    let nv = m.variables().len();
    let mut cols: Vec<Vec<(&str, f64)>> = vec![Vec::new(); nv];
    for &(i, c) in m.objective() {
        cols[i].push((OBJ_ROW, c));
    }
    for con in m.constraints() {
        for &(i, c) in &con.terms {
            cols[i].push((&con.name, c));
        }
    }
    push("COLUMNS".into());
    let mut in_int = false;
    let mut marker = 0;
    for (v, entries) in m.variables().iter().zip(&cols) {
        let binary = v.kind == VarKind::Binary;
        if binary != in_int {
            let kind = if binary { "INTORG" } else { "INTEND" };
            push(format!(" MARKER{marker} 'MARKER' '{kind}'"));
            marker += usize::from(!binary);
            in_int = binary;
        }
        if entries.is_empty() {
            push(format!(" {} {OBJ_ROW} 0", v.name));
        }
        for (row, c) in entries {
            push(format!(" {} {row} {}", v.name, format_number(*c)));
        }
    }
    if in_int {
        push(format!(" MARKER{marker} 'MARKER' 'INTEND'"));
    }
    push("RHS".into());
    for c in m.constraints().iter().filter(|c| c.rhs != 0.0) {
        push(format!(" RHS {} {}", c.name, format_number(c.rhs)));
    }
    push("BOUNDS".into());
    for v in m.variables() {
        let name = &v.name;
        if v.kind == VarKind::Binary && v.lo == 0.0 && v.hi == 1.0 {
            push(format!(" BV BND {name}"));
        } else if v.lo == v.hi {
            push(format!(" FX BND {name} {}", format_number(v.lo)));
        } else if !v.lo.is_finite() && !v.hi.is_finite() {
            push(format!(" FR BND {name}"));
        } else {
            if v.lo.is_finite() {
                push(format!(" LO BND {name} {}", format_number(v.lo)));
            } else {
                push(format!(" MI BND {name}"));
            }
            if v.hi.is_finite() {
                push(format!(" UP BND {name} {}", format_number(v.hi)));
            }
        }
    }
    push("ENDATA".into());
    Ok(out)
}

/// Reads free MPS as written by [`emit_mps`].
pub fn parse_mps(text: &str) -> Result<MilpModel> {
    #[derive(PartialEq)]
    enum Sec {
        Head,
        Rows,
        Columns,
        Rhs,
        Bounds,
        End,
    }
    let mut sec = Sec::Head;
    let mut name = String::new();
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_id: HashMap<String, usize> = HashMap::new();
    let mut obj_name: Option<String> = None;
    let mut vars: Vec<(String, VarKind, f64, f64)> = Vec::new();
    let mut var_id: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut objective: Vec<(usize, f64)> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut integer = false;
    for (i, line) in text.lines().enumerate() {
        let loc = format!("line {}", i + 1);
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() || line.starts_with('*') {
            continue;
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(loc.clone(), format!("expected a number, found `{s}`")));
        if !line.starts_with(' ') {
            sec = match t[0] {
                "NAME" => {
                    name = t[1..].join(" ");
                    Sec::Head
                }
                "ROWS" => Sec::Rows,
                "COLUMNS" => Sec::Columns,
                "RHS" => Sec::Rhs,
                "BOUNDS" => Sec::Bounds,
                "ENDATA" => Sec::End,
                other => return Err(Error::parse(loc, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match sec {
            Sec::Rows => {
                let [kind, row] = t[..] else { return Err(Error::parse(loc, "expected `type name`")) };
                let sense = match kind {
                    "N" => {
                        obj_name.get_or_insert_with(|| row.to_string());
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    other => return Err(Error::parse(loc, format!("unknown row type `{other}`"))),
                };
                row_id.insert(row.to_string(), rows.len());
                rows.push((row.to_string(), sense));
                entries.push(Vec::new());
                rhs.push(0.0);
            }
            Sec::Columns => {
                if t.len() == 3 && t[1] == "'MARKER'" {
                    integer = t[2] == "'INTORG'";
                    continue;
                }
                if t.len() % 2 != 1 {
                    return Err(Error::parse(loc, "expected `column row value ...`"));
                }
                let col = t[0];
                let id = *var_id.entry(col.to_string()).or_insert_with(|| {
                    let kind = if integer { VarKind::Binary } else { VarKind::Continuous };
                    vars.push((col.to_string(), kind, 0.0, f64::INFINITY));
                    vars.len() - 1
                });
                for pair in t[1..].chunks(2) {
                    let c = num(pair[1])?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        if c != 0.0 {
                            objective.push((id, c));
                        }
                    } else {
                        let r = *row_id.get(pair[0]).ok_or_else(|| Error::parse(loc.clone(), format!("unknown row `{}`", pair[0])))?;
                        entries[r].push((id, c));
                    }
                }
            }
            Sec::Rhs => {
                for pair in t[1..].chunks(2) {
                    let [row, val] = pair else { return Err(Error::parse(loc, "expected `set row value`")) };
                    if Some(*row) == obj_name.as_deref() {
                        continue;
                    }
                    let r = *row_id.get(*row).ok_or_else(|| Error::parse(loc.clone(), format!("unknown row `{row}`")))?;
                    rhs[r] = num(val)?;
                }
            }
            Sec::Bounds => {
                if t.len() < 3 {
                    return Err(Error::parse(loc, "expected `type set column [value]`"));
                }
                let id = *var_id.get(t[2]).ok_or_else(|| Error::parse(loc.clone(), format!("unknown column `{}`", t[2])))?;
                let val = t.get(3).map(|s| num(s)).transpose()?;
                let need = || val.ok_or_else(|| Error::parse(loc.clone(), "bound needs a value"));
                let v = &mut vars[id];
                match t[0] {
                    "BV" => {
                        v.1 = VarKind::Binary;
                        v.2 = 0.0;
                        v.3 = 1.0;
                    }
                    "LO" => v.2 = need()?,
                    "UP" => v.3 = need()?,
                    "FX" => {
                        v.2 = need()?;
                        v.3 = v.2;
                    }
                    "FR" => {
                        v.2 = f64::NEG_INFINITY;
                        v.3 = f64::INFINITY;
                    }
                    "MI" => v.2 = f64::NEG_INFINITY,
                    "PL" => v.3 = f64::INFINITY,
                    other => return Err(Error::parse(loc, format!("unknown bound type `{other}`"))),
                }
            }
            Sec::Head | Sec::End => return Err(Error::parse(loc, "data outside of a section")),
        }
    }
    let mut m = MilpModel::new(name);
    for (n, kind, lo, hi) in vars {
        m.add_var(n.clone(), kind, lo, hi).map_err(|e| Error::parse(format!("column {n}"), e.to_string()))?;
    }
    m.set_objective(objective);
    for (((row, sense), terms), r) in rows.into_iter().zip(entries).zip(rhs) {
        m.add_constraint(row, terms, sense, r)?;
    }
    Ok(m)
}
