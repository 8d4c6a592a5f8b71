use crate::camd::DesignSpace;
use crate::error::{Error, Result};
use crate::gnn::{propagate_bounds, Activation, GnnModel, Interval};
use crate::milp::model::{BuildInfo, MilpModel, Sense, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub variant: Variant,
    /// Adds the symmetry-breaking constraints C26 and C27.
    pub symmetry: bool,
}

pub(crate) fn a_name(u: usize, v: usize) -> String {
    format!("A_{u}_{v}")
}

pub(crate) fn db_name(u: usize, v: usize) -> String {
    format!("DB_{u}_{v}")
}

pub(crate) fn tb_name(u: usize, v: usize) -> String {
    format!("TB_{u}_{v}")
}

pub(crate) fn x_name(v: usize, f: usize) -> String {
    format!("X_{v}_{f}")
}

/// Name of the objective variable.
pub const OUTPUT_VAR: &str = "y";

struct Vars {
    a: Vec<Vec<usize>>,
    db: Vec<Vec<usize>>,
    tb: Vec<Vec<usize>>,
    x: Vec<Vec<usize>>,
}

impl Vars {
    /// Edge indicator shared by both directions.
    fn edge(&self, u: usize, v: usize) -> usize {
        self.a[u.min(v)][u.max(v)]
    }
}

fn floor_cov(cov: u32, k: u32) -> f64 {
    f64::from(cov / k)
}

fn add_structure(m: &mut MilpModel, space: &DesignSpace, vars: &Vars) -> Result<()> {
    let n = space.n;
    let (a, db, tb, x) = (&vars.a, &vars.db, &vars.tb, &vars.x);
    let nt = space.num_atom_types();
    let others = |v: usize| (0..n).filter(move |&u| u != v);
    let (fdb, ftb) = (space.double_bond_feature(), space.triple_bond_feature());

    m.add_constraint("C1", [(a[0][1], 1.0)], Sense::Eq, 1.0)?;
    for v in 0..n {
        if space.exact_n {
            m.add_constraint(format!("C2_{v}"), [(a[v][v], 1.0)], Sense::Eq, 1.0)?;
        } else if v + 1 < n {
            m.add_constraint(format!("C2_{v}"), [(a[v][v], 1.0), (a[v + 1][v + 1], -1.0)], Sense::Ge, 0.0)?;
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            m.add_constraint(format!("C3_{u}_{v}"), [(a[u][v], 1.0), (a[v][u], -1.0)], Sense::Eq, 0.0)?;
        }
    }
    for v in 0..n {
        let terms = others(v).map(|u| (a[u][v], 1.0)).chain([(a[v][v], -((n - 1) as f64))]);
        m.add_constraint(format!("C4_{v}"), terms, Sense::Le, 0.0)?;
    }
    for v in 1..n {
        let terms = (0..v).map(|u| (a[u][v], -1.0)).chain([(a[v][v], 1.0)]);
        m.add_constraint(format!("C5_{v}"), terms, Sense::Le, 0.0)?;
    }
    for v in 0..n {
        m.add_constraint(format!("C6_{v}"), [(db[v][v], 1.0)], Sense::Eq, 0.0)?;
    }
    for u in 0..n {
        for v in u + 1..n {
            m.add_constraint(format!("C7_{u}_{v}"), [(db[u][v], 1.0), (db[v][u], -1.0)], Sense::Eq, 0.0)?;
        }
    }
    for v in 0..n {
        m.add_constraint(format!("C8_{v}"), [(tb[v][v], 1.0)], Sense::Eq, 0.0)?;
    }
    for u in 0..n {
        for v in u + 1..n {
            m.add_constraint(format!("C9_{u}_{v}"), [(tb[u][v], 1.0), (tb[v][u], -1.0)], Sense::Eq, 0.0)?;
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            let terms = [(db[u][v], 1.0), (tb[u][v], 1.0), (a[u][v], -1.0)];
            m.add_constraint(format!("C10_{u}_{v}"), terms, Sense::Le, 0.0)?;
        }
    }
    let blocks: [(u8, Vec<usize>); 3] = [
        (11, (0..nt).map(|t| space.type_feature(t)).collect()),
        (12, (0..space.neighbor_slots).map(|i| space.neighbor_feature(i)).collect()),
        (13, (0..space.hydrogen_slots).map(|i| space.hydrogen_feature(i)).collect()),
    ];
    for (id, block) in &blocks {
        for v in 0..n {
            let terms = block.iter().map(|&f| (x[v][f], 1.0)).chain([(a[v][v], -1.0)]);
            m.add_constraint(format!("C{id}_{v}"), terms, Sense::Eq, 0.0)?;
        }
    }
    for v in 0..n {
        let terms = others(v)
            .map(|u| (a[u][v], 1.0))
            .chain((0..space.neighbor_slots).map(|i| (x[v][space.neighbor_feature(i)], -(i as f64))));
        m.add_constraint(format!("C14_{v}"), terms, Sense::Eq, 0.0)?;
    }
    for (id, mat, f) in [(15, db, fdb), (16, tb, ftb)] {
        for u in 0..n {
            for v in u + 1..n {
                let terms = [(mat[u][v], 3.0), (x[u][f], -1.0), (x[v][f], -1.0), (a[u][v], -1.0)];
                m.add_constraint(format!("C{id}_{u}_{v}"), terms, Sense::Le, 0.0)?;
            }
        }
    }
    for (id, mat, k) in [(17, db, 2), (18, tb, 3)] {
        for v in 0..n {
            let terms = (0..n).map(|u| (mat[u][v], 1.0)).chain(
                space.atoms.iter().enumerate().map(|(t, at)| (x[v][space.type_feature(t)], -floor_cov(at.covalence, k))),
            );
            m.add_constraint(format!("C{id}_{v}"), terms, Sense::Le, 0.0)?;
        }
    }
    for (id, mat, f) in [(19, db, fdb), (20, tb, ftb)] {
        for v in 0..n {
            let terms = (0..n).map(|u| (mat[u][v], -1.0)).chain([(x[v][f], 1.0)]);
            m.add_constraint(format!("C{id}_{v}"), terms, Sense::Le, 0.0)?;
        }
    }
    for v in 0..n {
        let cov = space.atoms.iter().enumerate().map(|(t, at)| (x[v][space.type_feature(t)], f64::from(at.covalence)));
        let nbr = (0..space.neighbor_slots).map(|i| (x[v][space.neighbor_feature(i)], -(i as f64)));
        let hyd = (0..space.hydrogen_slots).map(|i| (x[v][space.hydrogen_feature(i)], -(i as f64)));
        let bonds = (0..n).flat_map(|u| [(db[u][v], -1.0), (tb[u][v], -2.0)]);
        m.add_constraint(format!("C21_{v}"), cov.chain(nbr).chain(hyd).chain(bonds), Sense::Eq, 0.0)?;
    }
    let range = |m: &mut MilpModel, name: String, terms: Vec<(usize, f64)>, lo: f64, hi: f64| -> Result<()> {
        if lo > 0.0 {
            m.add_constraint(format!("{name}_lo"), terms.clone(), Sense::Ge, lo)?;
        }
        m.add_constraint(format!("{name}_hi"), terms, Sense::Le, hi)
    };
    for (t, b) in space.atom_counts.iter().enumerate() {
        let terms = (0..n).map(|v| (x[v][space.type_feature(t)], 1.0)).collect();
        range(m, format!("C22_{t}"), terms, f64::from(b.lo), f64::from(b.hi))?;
    }
    let upper = |mat: &Vec<Vec<usize>>| -> Vec<(usize, f64)> {
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).map(|(u, v)| (mat[u][v], 1.0)).collect()
    };
    range(m, "C23".into(), upper(db), f64::from(space.double_bonds.lo), f64::from(space.double_bonds.hi))?;
    range(m, "C24".into(), upper(tb), f64::from(space.triple_bonds.lo), f64::from(space.triple_bonds.hi))?;
    // bonds beyond a spanning tree of the existing atoms
    let (lo, hi) = (f64::from(space.rings.lo), f64::from(space.rings.hi));
    if space.exact_n {
        let spanning = (n - 1) as f64;
        range(m, "C25".into(), upper(a), lo + spanning, hi + spanning)?;
    } else {
        let terms: Vec<(usize, f64)> = upper(a).into_iter().chain((0..n).map(|v| (a[v][v], -1.0))).collect();
        range(m, "C25".into(), terms, lo - 1.0, hi - 1.0)?;
    }
    Ok(())
}

fn add_symmetry(m: &mut MilpModel, space: &DesignSpace, vars: &Vars) -> Result<()> {
    let (n, f) = (space.n, space.num_features());
    let w = |k: usize| 2f64.powi((f - k - 1) as i32);
    for v in 1..n {
        let terms = (0..f).flat_map(|k| [(vars.x[v][k], w(k)), (vars.x[0][k], -w(k))]);
        if space.exact_n {
            m.add_constraint(format!("C26_{v}"), terms, Sense::Ge, 0.0)?;
        } else {
            let big = 2f64.powi(f as i32);
            m.add_constraint(format!("C26_{v}"), terms.chain([(vars.a[v][v], -big)]), Sense::Ge, -big)?;
        }
    }
    for v in 1..n.saturating_sub(1) {
        let terms = (0..n)
            .filter(|&u| u != v && u != v + 1)
            .flat_map(|u| {
                let c = 2f64.powi((n - u - 1) as i32);
                [(vars.a[u][v], c), (vars.a[u][v + 1], -c)]
            });
        m.add_constraint(format!("C27_{v}"), terms, Sense::Ge, 0.0)?;
    }
    Ok(())
}

fn need_finite(i: &Interval<f64>, what: &str) -> Result<()> {
    if i.is_finite() {
        Ok(())
    } else {
        Err(Error::Build(format!("unit {what} has unbounded range [{}, {}]; tighter bounds are required", i.lo, i.hi)))
    }
}

/// Adds `h = act(p)` for a unit with pre-activation bounds `pre`. A ReLU
/// whose sign is not fixed by the bounds gets a binary named `indicator`.
fn add_activation(
    m: &mut MilpModel,
    family: &str,
    suffix: &str,
    indicator: String,
    (p, h): (usize, usize),
    act: Activation,
    pre: Interval<f64>,
) -> Result<()> {
    let name = format!("{family}_{suffix}");
    match act {
        Activation::Identity => m.add_constraint(name, [(h, 1.0), (p, -1.0)], Sense::Eq, 0.0),
        Activation::Relu if pre.hi <= 0.0 => m.add_constraint(name, [(h, 1.0)], Sense::Eq, 0.0),
        Activation::Relu if pre.lo >= 0.0 => m.add_constraint(name, [(h, 1.0), (p, -1.0)], Sense::Eq, 0.0),
        Activation::Relu => {
            need_finite(&pre, &indicator)?;
            let r = m.binary(indicator)?;
            m.add_constraint(format!("{name}_a"), [(h, 1.0), (p, -1.0)], Sense::Ge, 0.0)?;
            m.add_constraint(format!("{name}_b"), [(h, 1.0), (p, -1.0), (r, -pre.lo)], Sense::Le, -pre.lo)?;
            m.add_constraint(format!("{name}_c"), [(h, 1.0), (r, -pre.hi)], Sense::Le, 0.0)
        }
    }
}

/// Full formulation: molecular structure constraints, optionally symmetry
/// breaking, and the network encoded layer by layer with the output as the
/// minimized variable.
pub fn build(space: &DesignSpace, model: &GnnModel, opts: BuildOptions) -> Result<MilpModel> {
    space.validate()?;
    let (n, f) = (space.n, space.num_features());
    if model.input_dim() != f {
        return Err(Error::domain(format!("model input width {} does not match {f} features", model.input_dim())));
    }
    let mut m = MilpModel::new(format!("molmip_n{n}_{}", opts.variant));
    let mat = |m: &mut MilpModel, name: fn(usize, usize) -> String| -> Result<Vec<Vec<usize>>> {
        (0..n).map(|u| (0..n).map(|v| m.binary(name(u, v))).collect()).collect()
    };
    let a = mat(&mut m, a_name)?;
    let db = mat(&mut m, db_name)?;
    let tb = mat(&mut m, tb_name)?;
    let x = (0..n).map(|v| (0..f).map(|k| m.binary(x_name(v, k))).collect()).collect::<Result<_>>()?;
    let vars = Vars { a, db, tb, x };
    add_structure(&mut m, space, &vars)?;
    if opts.symmetry {
        add_symmetry(&mut m, space, &vars)?;
    }

    let bounds = propagate_bounds(model, n, space.max_degree());
    let mut prev: Vec<Vec<usize>> = vars.x.clone();
    for (li, layer) in model.graph_layers().iter().enumerate() {
        let l = li + 1;
        let lb = &bounds.graph[li];
        // z_{u->v} copies x_u when the edge exists and is 0 otherwise
        let mut z = vec![vec![Vec::new(); n]; n];
        if opts.variant == Variant::Bigm {
            for u in 0..n {
                for v in (0..n).filter(|&v| v != u) {
                    for j in 0..layer.input_dim() {
                        let sb = bounds.node(li, u)[j];
                        need_finite(&sb, &format!("x{li}_{u}_{j}"))?;
                        let big = sb.magnitude();
                        let hull = sb.hull_with_zero();
                        let zi = m.continuous(format!("z{l}_{u}_{v}_{j}"), hull.lo, hull.hi)?;
                        let (xu, e) = (prev[u][j], vars.edge(u, v));
                        let tag = format!("bigm{l}_{u}_{v}_{j}");
                        m.add_constraint(format!("{tag}_a"), [(zi, 1.0), (xu, -1.0), (e, big)], Sense::Le, big)?;
                        m.add_constraint(format!("{tag}_b"), [(zi, 1.0), (xu, -1.0), (e, -big)], Sense::Ge, -big)?;
                        m.add_constraint(format!("{tag}_c"), [(zi, 1.0), (e, -big)], Sense::Le, 0.0)?;
                        m.add_constraint(format!("{tag}_d"), [(zi, 1.0), (e, big)], Sense::Ge, 0.0)?;
                        z[u][v].push(zi);
                    }
                }
            }
        }
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let mut row = Vec::with_capacity(layer.output_dim());
            for c in 0..layer.output_dim() {
                let (pre, post) = (lb.pre[v][c], lb.post[v][c]);
                let p = m.continuous(format!("p{l}_{v}_{c}"), pre.lo, pre.hi)?;
                let h = m.continuous(format!("h{l}_{v}_{c}"), post.lo, post.hi)?;
                let own = (0..layer.input_dim()).map(|i| (prev[v][i], -layer.w_self.get(c, i)));
                let mut terms: Vec<(usize, f64)> = std::iter::once((p, 1.0)).chain(own).collect();
                let mut quad = Vec::new();
                for u in (0..n).filter(|&u| u != v) {
                    for j in 0..layer.input_dim() {
                        let w = layer.w_neigh.get(c, j);
                        match opts.variant {
                            Variant::Bigm => terms.push((z[u][v][j], -w)),
                            Variant::Bilinear => quad.push((vars.edge(u, v), prev[u][j], -w)),
                        }
                    }
                }
                m.add_quadratic(format!("layer{l}_{v}_{c}"), terms, quad, Sense::Eq, layer.bias[c])?;
                add_activation(&mut m, &format!("relu{l}"), &format!("{v}_{c}"), format!("r{l}_{v}_{c}"), (p, h), layer.activation, pre)?;
                row.push(h);
            }
            next.push(row);
        }
        prev = next;
    }

    let scale = match model.pooling() {
        crate::gnn::Pooling::Sum => 1.0,
        crate::gnn::Pooling::Mean => 1.0 / n as f64,
    };
    let mut h: Vec<usize> = Vec::new();
    for (c, b) in bounds.pooled.iter().enumerate() {
        let pc = m.continuous(format!("pool_{c}"), b.lo, b.hi)?;
        let terms = std::iter::once((pc, 1.0)).chain((0..n).map(|v| (prev[v][c], -scale)));
        m.add_constraint(format!("pool_{c}"), terms, Sense::Eq, 0.0)?;
        h.push(pc);
    }
    for (ki, layer) in model.dense_layers().iter().enumerate() {
        let k = ki + 1;
        let (bp, bq) = &bounds.dense[ki];
        let mut next = Vec::with_capacity(layer.output_dim());
        for c in 0..layer.output_dim() {
            let p = m.continuous(format!("dp{k}_{c}"), bp[c].lo, bp[c].hi)?;
            let q = m.continuous(format!("d{k}_{c}"), bq[c].lo, bq[c].hi)?;
            let terms = std::iter::once((p, 1.0)).chain((0..layer.input_dim()).map(|i| (h[i], -layer.w.get(c, i))));
            m.add_constraint(format!("dense{k}_{c}"), terms, Sense::Eq, layer.bias[c])?;
            add_activation(&mut m, &format!("drelu{k}"), &c.to_string(), format!("dr{k}_{c}"), (p, q), layer.activation, bp[c])?;
            next.push(q);
        }
        h = next;
    }
    let (lo, hi) = (m.variables()[h[0]].lo, m.variables()[h[0]].hi);
    let y = m.continuous(OUTPUT_VAR, lo, hi)?;
    m.add_constraint("output", [(y, 1.0), (h[0], -1.0)], Sense::Eq, 0.0)?;
    m.set_objective([(y, 1.0)]);
    m.info = Some(BuildInfo { space: space.clone(), variant: opts.variant, symmetry: opts.symmetry });
    Ok(m)
}
