//! CPLEX-style LP text. Quadratic terms go in `[ ... ]` blocks, every
//! variable gets an explicit line in `Bounds` (which fixes declaration order
//! on re-reading) and binaries are listed under `Binaries`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::milp::model::{MilpModel, Sense, VarKind};

/// Lines are wrapped before exceeding this width.
const LINE_WIDTH: usize = 100;

/// Shortest text that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

struct Writer {
    out: String,
    line: usize,
}

impl Writer {
    fn new() -> Self {
        Writer { out: String::new(), line: 0 }
    }

    fn line(&mut self, s: &str) {
        self.out.push_str(s);
        self.out.push('\n');
        self.line = 0;
    }

    fn token(&mut self, s: &str) {
        if self.line > 0 && self.line + 1 + s.len() > LINE_WIDTH {
            self.out.push_str("\n   ");
            self.line = 3;
        }
        if self.line > 0 {
            self.out.push(' ');
            self.line += 1;
        } else {
            self.out.push(' ');
            self.line = 1;
        }
        self.out.push_str(s);
        self.line += s.len();
    }

    fn end_line(&mut self) {
        self.out.push('\n');
        self.line = 0;
    }
}

/// Emits a signed term as one token, e.g. `x`, `- 2 x` or `+ 0.5 x`.
fn term(first: bool, coef: f64, rest: &str) -> String {
    let sign = if coef < 0.0 { "- " } else if first { "" } else { "+ " };
    let mag = coef.abs();
    if mag == 1.0 {
        format!("{sign}{rest}")
    } else {
        format!("{sign}{} {rest}", format_number(mag))
    }
}

fn write_expr(w: &mut Writer, m: &MilpModel, terms: &[(usize, f64)], quad: &[(usize, usize, f64)]) {
    let vars = m.variables();
    for (k, &(i, c)) in terms.iter().enumerate() {
        w.token(&term(k == 0, c, &vars[i].name));
    }
    if !quad.is_empty() {
        w.token(if terms.is_empty() { "[" } else { "+ [" });
        for (k, &(i, j, c)) in quad.iter().enumerate() {
            w.token(&term(k == 0, c, &format!("{} * {}", vars[i].name, vars[j].name)));
        }
        w.token("]");
    }
}

pub fn emit_lp(m: &MilpModel) -> String {
    let mut w = Writer::new();
    w.line(&format!("\\ Problem name: {}", m.name));
    w.line("Minimize");
    w.token("obj:");
    write_expr(&mut w, m, m.objective(), &[]);
    w.end_line();
    w.line("Subject To");
    for c in m.constraints() {
        w.token(&format!("{}:", c.name));
        if c.terms.is_empty() && c.quad.is_empty() {
            w.token("0");
        }
        write_expr(&mut w, m, &c.terms, &c.quad);
        w.token(&c.sense.to_string());
        w.token(&format_number(c.rhs));
        w.end_line();
    }
    if !m.variables().is_empty() {
        w.line("Bounds");
        for v in m.variables() {
            let s = match (v.lo.is_finite(), v.hi.is_finite()) {
                _ if v.lo == v.hi => format!(" {} = {}", v.name, format_number(v.lo)),
                (false, false) => format!(" {} free", v.name),
                (true, false) => format!(" {} >= {}", v.name, format_number(v.lo)),
                (false, true) => format!(" -inf <= {} <= {}", v.name, format_number(v.hi)),
                (true, true) => format!(" {} <= {} <= {}", format_number(v.lo), v.name, format_number(v.hi)),
            };
            w.line(&s);
        }
    }
    let bins: Vec<&str> =
        m.variables().iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !bins.is_empty() {
        w.line("Binaries");
        for b in bins {
            w.token(b);
        }
        w.end_line();
    }
    w.line("End");
    w.out
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| Error::parse(format!("line {line}"), format!("expected a number, found `{tok}`"))),
    }
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok() || matches!(tok.to_ascii_lowercase().as_str(), "inf" | "-inf" | "+inf")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "generals" | "general" | "gen" => Some(Section::Generals),
        "end" => Some(Section::End),
        _ => None,
    }
}

type Tok = (String, usize);

struct RawExpr {
    terms: Vec<(String, f64)>,
    quad: Vec<(String, String, f64)>,
}

/// Parses `[sign] [coef] name` terms and `[ ... ]` blocks until a token
/// for which `stop` holds.
fn parse_expr(toks: &[Tok], pos: &mut usize, stop: impl Fn(&str) -> bool) -> Result<RawExpr> {
    let mut e = RawExpr { terms: Vec::new(), quad: Vec::new() };
    let mut in_quad = false;
    while *pos < toks.len() && !(stop(&toks[*pos].0) && !in_quad) {
        let (tok, line) = (&toks[*pos].0, toks[*pos].1);
        let err = |m: &str| Error::parse(format!("line {line}"), m.to_string());
        match tok.as_str() {
            "[" => {
                in_quad = true;
                *pos += 1;
                continue;
            }
            "]" => {
                in_quad = false;
                *pos += 1;
                continue;
            }
            _ => {}
        }
        let mut sign = 1.0;
        if tok == "+" || tok == "-" {
            if tok == "-" {
                sign = -1.0;
            }
            *pos += 1;
            if *pos < toks.len() && toks[*pos].0 == "[" {
                in_quad = true;
                *pos += 1;
                if sign < 0.0 {
                    return Err(err("negated quadratic block is not supported"));
                }
                continue;
            }
        }
        let mut coef = 1.0;
        if *pos < toks.len() && is_number(&toks[*pos].0) {
            coef = parse_num(&toks[*pos].0, line)?;
            *pos += 1;
        }
        let Some((name, _)) = toks.get(*pos) else { return Err(err("expression ends early")) };
        *pos += 1;
        if in_quad {
            if toks.get(*pos).map(|t| t.0.as_str()) != Some("*") {
                return Err(err("expected `*` in quadratic term"));
            }
            let Some((other, _)) = toks.get(*pos + 1) else { return Err(err("quadratic term ends early")) };
            *pos += 2;
            e.quad.push((name.clone(), other.clone(), sign * coef));
        } else {
            e.terms.push((name.clone(), sign * coef));
        }
    }
    Ok(e)
}

fn tokens(line: &str, line_no: usize) -> Vec<Tok> {
    let spaced = line.replace('[', " [ ").replace(']', " ] ");
    spaced.split_whitespace().map(|t| (t.to_string(), line_no)).collect()
}

fn sense_of(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Reads LP text in the dialect written by [`emit_lp`].
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut section = Section::None;
    let mut name = String::new();
    let mut sec_toks: HashMap<u8, Vec<Tok>> = HashMap::new();
    let mut bounds: Vec<(String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('\\') {
            if let Some(n) = rest.trim().strip_prefix("Problem name:") {
                name = n.trim().to_string();
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if let Some(s) = section_header(line) {
            section = s;
            continue;
        }
        match section {
            Section::None | Section::End => {
                return Err(Error::parse(format!("line {line_no}"), "text outside of any section"));
            }
            Section::Bounds => bounds.push((line.to_string(), line_no)),
            s => sec_toks.entry(s as u8).or_default().extend(tokens(line, line_no)),
        }
    }

    // variable order: Bounds section first, then first appearance elsewhere
    let mut m = MilpModel::new(name);
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut declared: Vec<(String, f64, f64)> = Vec::new();
    let declare = |ids: &mut HashMap<String, usize>, declared: &mut Vec<(String, f64, f64)>, n: &str| -> usize {
        *ids.entry(n.to_string()).or_insert_with(|| {
            declared.push((n.to_string(), 0.0, f64::INFINITY));
            declared.len() - 1
        })
    };
    for (line, line_no) in &bounds {
        let t: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::parse(format!("line {line_no}"), format!("unrecognized bound `{line}`"));
        let (var, lo, hi) = match t.as_slice() {
            [l, "<=", v, "<=", h] => (*v, Some(parse_num(l, *line_no)?), Some(parse_num(h, *line_no)?)),
            [v, "free"] => (*v, Some(f64::NEG_INFINITY), Some(f64::INFINITY)),
            [v, ">=", l] => (*v, Some(parse_num(l, *line_no)?), None),
            [v, "<=", h] => (*v, None, Some(parse_num(h, *line_no)?)),
            [v, "=", x] => (*v, Some(parse_num(x, *line_no)?), Some(parse_num(x, *line_no)?)),
            _ => return Err(bad()),
        };
        if is_number(var) {
            return Err(bad());
        }
        let id = declare(&mut ids, &mut declared, var);
        if let Some(lo) = lo {
            declared[id].1 = lo;
        }
        if let Some(hi) = hi {
            declared[id].2 = hi;
        }
    }
    let empty = Vec::new();
    let obj_toks = sec_toks.get(&(Section::Objective as u8)).unwrap_or(&empty);
    let mut pos = 0;
    if obj_toks.first().is_some_and(|t| t.0.ends_with(':')) {
        pos = 1;
    }
    let obj = parse_expr(obj_toks, &mut pos, |_| false)?;
    let con_toks = sec_toks.get(&(Section::Constraints as u8)).unwrap_or(&empty);
    let mut raw_cons = Vec::new();
    let mut pos = 0;
    while pos < con_toks.len() {
        let (label, line) = &con_toks[pos];
        let Some(cname) = label.strip_suffix(':') else {
            return Err(Error::parse(format!("line {line}"), format!("expected a constraint label, found `{label}`")));
        };
        pos += 1;
        if con_toks.get(pos).map(|t| t.0.as_str()) == Some("0") {
            pos += 1;
        }
        let e = parse_expr(con_toks, &mut pos, |t| sense_of(t).is_some())?;
        let sense = con_toks.get(pos).and_then(|t| sense_of(&t.0));
        let rhs = con_toks.get(pos + 1);
        let (Some(sense), Some((rhs, rl))) = (sense, rhs) else {
            return Err(Error::parse(format!("line {line}"), format!("constraint `{cname}` lacks a sense and right-hand side")));
        };
        let rhs = parse_num(rhs, *rl)?;
        pos += 2;
        raw_cons.push((cname.to_string(), e, sense, rhs));
    }
    let mut kinds: HashMap<String, VarKind> = HashMap::new();
    for key in [Section::Binaries as u8, Section::Generals as u8] {
        for (b, _) in sec_toks.get(&key).unwrap_or(&empty) {
            if key == Section::Generals as u8 {
                return Err(Error::Unsupported(format!("general integer variable `{b}`")));
            }
            declare(&mut ids, &mut declared, b);
            kinds.insert(b.clone(), VarKind::Binary);
        }
    }
    for (n, _) in &obj.terms {
        declare(&mut ids, &mut declared, n);
    }
    for (_, e, _, _) in &raw_cons {
        for (n, _) in &e.terms {
            declare(&mut ids, &mut declared, n);
        }
        for (a, b, _) in &e.quad {
            declare(&mut ids, &mut declared, a);
            declare(&mut ids, &mut declared, b);
        }
    }
    for (n, lo, hi) in &declared {
        let kind = kinds.get(n).copied().unwrap_or(VarKind::Continuous);
        m.add_var(n.clone(), kind, *lo, *hi).map_err(|e| Error::parse(format!("variable {n}"), e.to_string()))?;
    }
    m.set_objective(obj.terms.iter().map(|(n, c)| (ids[n], *c)));
    for (cname, e, sense, rhs) in raw_cons {
        let terms: Vec<(usize, f64)> = e.terms.iter().map(|(n, c)| (ids[n], *c)).collect();
        let quad: Vec<(usize, usize, f64)> = e.quad.iter().map(|(a, b, c)| (ids[a], ids[b], *c)).collect();
        m.add_quadratic(cname.clone(), terms, quad, sense, rhs)
            .map_err(|e| Error::parse(format!("constraint {cname}"), e.to_string()))?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(3.0), "3");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1e-20), "1e-20");
        assert_eq!(format_number(32768.0), "32768");
        for x in [std::f64::consts::PI, 1.0 / 3.0, -2.5e300, 123456789.123] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_model_is_header_only() {
        let text = emit_lp(&MilpModel::new("empty"));
        assert_eq!(text, "\\ Problem name: empty\nMinimize\n obj:\nSubject To\nEnd\n");
        assert_eq!(parse_lp(&text).unwrap(), MilpModel::new("empty"));
    }

    #[test]
    fn quadratic_round_trip_and_wrapping() {
        let mut m = MilpModel::new("q");
        let vars: Vec<usize> = (0..40).map(|i| m.continuous(format!("long_variable_name_{i}"), -1.0, 1.0).unwrap()).collect();
        let b = m.binary("b").unwrap();
        m.add_quadratic(
            "big",
            vars.iter().map(|&v| (v, -0.5)),
            vars.iter().map(|&v| (b, v, 0.25)),
            Sense::Eq,
            -1.5,
        )
        .unwrap();
        m.add_quadratic("pure", [], [(b, vars[0], -3.0)], Sense::Le, 0.0).unwrap();
        m.set_objective([(vars[3], 2.0)]);
        let text = emit_lp(&m);
        assert!(text.lines().all(|l| l.len() <= LINE_WIDTH));
        assert_eq!(parse_lp(&text).unwrap(), m);
    }
}
