//! GraphSAGE-style message passing network with sum aggregation and a dense
//! head, plus interval bound propagation.
//!
//! A graph layer maps every node feature vector `x_v` to
//! `act(W_self x_v + sum_{u in N(v)} W_neigh x_u + b)`. Node vectors are then
//! pooled and passed through dense layers down to a single output.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::camd::MolecularGraph;
use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Identity => x,
        }
    }

    pub fn apply_interval<T: Scalar>(self, i: Interval<T>) -> Interval<T> {
        Interval { lo: self.apply(i.lo), hi: self.apply(i.hi) }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::domain(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Sum,
    /// Sum scaled by `1/N`.
    Mean,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::domain("matrix rows have different lengths"));
        }
        Ok(Matrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// `y += self * x`.
    pub fn mul_add(&self, x: &[T], y: &mut [T]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = *out + self.row(r).iter().zip(x).map(|(&w, &xi)| w * xi).sum::<T>();
        }
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| U::from_f64_lossy(v.to_f64_lossy())).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphLayer<T> {
    pub w_self: Matrix<T>,
    pub w_neigh: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> GraphLayer<T> {
    pub fn input_dim(&self) -> usize {
        self.w_self.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w_self.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    pub w: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn eval(&self, x: &[T]) -> (Vec<T>, Vec<T>) {
        let mut pre = self.bias.clone();
        self.w.mul_add(x, &mut pre);
        let post = pre.iter().map(|&p| self.activation.apply(p)).collect();
        (pre, post)
    }
}

/// Anything with binary node features and an undirected neighbor relation.
pub trait GraphInput {
    fn num_nodes(&self) -> usize;
    fn num_node_features(&self) -> usize;
    fn node_feature(&self, v: usize, f: usize) -> bool;
    fn neighbors_of(&self, v: usize) -> Vec<usize>;
}

impl GraphInput for MolecularGraph {
    fn num_nodes(&self) -> usize {
        self.n()
    }

    fn num_node_features(&self) -> usize {
        self.num_features()
    }

    fn node_feature(&self, v: usize, f: usize) -> bool {
        self.x(v, f)
    }

    fn neighbors_of(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| u != v && self.a(u, v)).collect()
    }
}

impl GraphInput for UndirectedGraph {
    fn num_nodes(&self) -> usize {
        self.n()
    }

    fn num_node_features(&self) -> usize {
        self.num_features()
    }

    fn node_feature(&self, v: usize, f: usize) -> bool {
        self.feature(v, f)
    }

    fn neighbors_of(&self, v: usize) -> Vec<usize> {
        self.neighbors(v).collect()
    }
}

/// Intermediate values of a forward pass. `graph[l].pre[v]` is the
/// pre-activation of node `v` after graph layer `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace<T> {
    pub input: Vec<Vec<T>>,
    pub graph: Vec<NodeActivations<T>>,
    pub pooled: Vec<T>,
    pub dense: Vec<(Vec<T>, Vec<T>)>,
    pub output: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeActivations<T> {
    pub pre: Vec<Vec<T>>,
    pub post: Vec<Vec<T>>,
}

/// Network with `f64` weights and activations.
pub type GnnModel = Gnn<f64>;
/// Network with `f32` weights and activations.
pub type GnnModel32 = Gnn<f32>;

#[derive(Clone, Debug, PartialEq)]
pub struct Gnn<T> {
    graph_layers: Vec<GraphLayer<T>>,
    pooling: Pooling,
    dense_layers: Vec<DenseLayer<T>>,
}

// JSON exchange format; weights as f64 regardless of the evaluation type.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    graph_layers: Vec<RawGraphLayer>,
    #[serde(default)]
    pooling: Pooling,
    #[serde(default)]
    dense_layers: Vec<RawDenseLayer>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraphLayer {
    w_self: Vec<Vec<f64>>,
    w_neigh: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDenseLayer {
    w: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

fn matrix_from_raw<T: Scalar>(rows: &[Vec<f64>], loc: &str, shape: (usize, Option<usize>)) -> Result<Matrix<T>> {
    let (d_out, d_in) = shape;
    if rows.len() != d_out {
        return Err(Error::parse(loc, format!("expected {d_out} rows, found {}", rows.len())));
    }
    let cols = d_in.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    if cols == 0 {
        return Err(Error::parse(loc, "matrix has no columns"));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::parse(format!("{loc} row {r}"), format!("expected {cols} entries, found {}", row.len())));
        }
        if let Some(c) = row.iter().position(|w| !w.is_finite()) {
            return Err(Error::parse(format!("{loc} row {r} col {c}"), "non-finite weight"));
        }
    }
    let conv: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&w| T::from_f64_lossy(w)).collect()).collect();
    Matrix::from_rows(&conv)
}

fn bias_from_raw<T: Scalar>(b: &[f64], loc: &str, d_out: usize) -> Result<Vec<T>> {
    if b.len() != d_out {
        return Err(Error::parse(loc, format!("expected {d_out} entries, found {}", b.len())));
    }
    if b.iter().any(|w| !w.is_finite()) {
        return Err(Error::parse(loc, "non-finite bias"));
    }
    Ok(b.iter().map(|&w| T::from_f64_lossy(w)).collect())
}

impl<T: Scalar> Gnn<T> {
    pub fn new(graph_layers: Vec<GraphLayer<T>>, pooling: Pooling, dense_layers: Vec<DenseLayer<T>>) -> Result<Self> {
        let g = Gnn { graph_layers, pooling, dense_layers };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let Some(first) = self.graph_layers.first() else {
            return Err(Error::domain("model needs at least one graph layer"));
        };
        let mut width = first.input_dim();
        for (l, layer) in self.graph_layers.iter().enumerate() {
            let d = layer.output_dim();
            if layer.input_dim() != width
                || layer.w_neigh.cols() != width
                || layer.w_neigh.rows() != d
                || layer.bias.len() != d
            {
                return Err(Error::domain(format!("graph layer {l} does not chain from width {width}")));
            }
            width = d;
        }
        for (l, layer) in self.dense_layers.iter().enumerate() {
            if layer.input_dim() != width || layer.bias.len() != layer.output_dim() {
                return Err(Error::domain(format!("dense layer {l} does not chain from width {width}")));
            }
            width = layer.output_dim();
        }
        if width != 1 {
            return Err(Error::domain(format!("model output width is {width}, expected 1")));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let mut width: Option<usize> = None;
        let mut graph_layers = Vec::new();
        if raw.graph_layers.is_empty() {
            return Err(Error::parse("graph_layers", "model needs at least one graph layer"));
        }
        for (l, r) in raw.graph_layers.iter().enumerate() {
            let loc = format!("graph_layers[{l}]");
            let d_out = r.w_self.len();
            let w_self: Matrix<T> = matrix_from_raw(&r.w_self, &format!("{loc}.w_self"), (d_out, width))?;
            let w_neigh = matrix_from_raw(&r.w_neigh, &format!("{loc}.w_neigh"), (d_out, Some(w_self.cols())))?;
            let bias = bias_from_raw(&r.bias, &format!("{loc}.bias"), d_out)?;
            width = Some(d_out);
            graph_layers.push(GraphLayer { w_self, w_neigh, bias, activation: r.activation });
        }
        let mut dense_layers = Vec::new();
        for (l, r) in raw.dense_layers.iter().enumerate() {
            let loc = format!("dense_layers[{l}]");
            let d_out = r.w.len();
            let w = matrix_from_raw(&r.w, &format!("{loc}.w"), (d_out, width))?;
            let bias = bias_from_raw(&r.bias, &format!("{loc}.bias"), d_out)?;
            width = Some(d_out);
            dense_layers.push(DenseLayer { w, bias, activation: r.activation });
        }
        if width != Some(1) {
            return Err(Error::parse("dense_layers", format!("model output width is {}, expected 1", width.unwrap_or(0))));
        }
        Gnn::new(graph_layers, raw.pooling, dense_layers)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse { location: format!("{}: {location}", path.display()), message },
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let rows = |m: &Matrix<T>| m.to_rows().into_iter().map(|r| r.into_iter().map(T::to_f64_lossy).collect()).collect();
        let vec = |b: &[T]| b.iter().map(|&x| x.to_f64_lossy()).collect();
        let raw = RawModel {
            graph_layers: self
                .graph_layers
                .iter()
                .map(|l| RawGraphLayer { w_self: rows(&l.w_self), w_neigh: rows(&l.w_neigh), bias: vec(&l.bias), activation: l.activation })
                .collect(),
            pooling: self.pooling,
            dense_layers: self
                .dense_layers
                .iter()
                .map(|l| RawDenseLayer { w: rows(&l.w), bias: vec(&l.bias), activation: l.activation })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("model serializes")
    }

    pub fn graph_layers(&self) -> &[GraphLayer<T>] {
        &self.graph_layers
    }

    pub fn dense_layers(&self) -> &[DenseLayer<T>] {
        &self.dense_layers
    }

    pub fn pooling(&self) -> Pooling {
        self.pooling
    }

    pub fn input_dim(&self) -> usize {
        self.graph_layers[0].input_dim()
    }

    pub fn pooled_dim(&self) -> usize {
        self.graph_layers.last().map_or(0, GraphLayer::output_dim)
    }

    fn pool_scale(&self, n: usize) -> T {
        match self.pooling {
            Pooling::Sum => T::one(),
            Pooling::Mean => T::one() / T::from_count(n.max(1)),
        }
    }

    pub fn forward<G: GraphInput + ?Sized>(&self, g: &G) -> Result<T> {
        Ok(self.forward_trace(g)?.output)
    }

    pub fn forward_trace<G: GraphInput + ?Sized>(&self, g: &G) -> Result<ForwardTrace<T>> {
        if g.num_node_features() != self.input_dim() {
            return Err(Error::domain(format!(
                "graph has {} features, model expects {}",
                g.num_node_features(),
                self.input_dim()
            )));
        }
        let n = g.num_nodes();
        let input: Vec<Vec<T>> =
            (0..n).map(|v| (0..self.input_dim()).map(|f| T::from_bool(g.node_feature(v, f))).collect()).collect();
        let nbrs: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors_of(v)).collect();
        let mut x = input.clone();
        let mut graph = Vec::with_capacity(self.graph_layers.len());
        for layer in &self.graph_layers {
            let mut pre = Vec::with_capacity(n);
            for v in 0..n {
                let mut acc = layer.bias.clone();
                layer.w_self.mul_add(&x[v], &mut acc);
                for &u in &nbrs[v] {
                    layer.w_neigh.mul_add(&x[u], &mut acc);
                }
                pre.push(acc);
            }
            let post: Vec<Vec<T>> =
                pre.iter().map(|p: &Vec<T>| p.iter().map(|&z| layer.activation.apply(z)).collect()).collect();
            x = post.clone();
            graph.push(NodeActivations { pre, post });
        }
        let scale = self.pool_scale(n);
        let pooled: Vec<T> = (0..self.pooled_dim()).map(|c| x.iter().map(|row| row[c]).sum::<T>() * scale).collect();
        let mut h = pooled.clone();
        let mut dense = Vec::with_capacity(self.dense_layers.len());
        for layer in &self.dense_layers {
            let (pre, post) = layer.eval(&h);
            h = post.clone();
            dense.push((pre, post));
        }
        Ok(ForwardTrace { input, graph, pooled, dense, output: h[0] })
    }

    pub fn cast<U: Scalar>(&self) -> Gnn<U> {
        let vec = |b: &[T]| b.iter().map(|&x| U::from_f64_lossy(x.to_f64_lossy())).collect();
        Gnn {
            graph_layers: self
                .graph_layers
                .iter()
                .map(|l| GraphLayer { w_self: l.w_self.cast(), w_neigh: l.w_neigh.cast(), bias: vec(&l.bias), activation: l.activation })
                .collect(),
            pooling: self.pooling,
            dense_layers: self
                .dense_layers
                .iter()
                .map(|l| DenseLayer { w: l.w.cast(), bias: vec(&l.bias), activation: l.activation })
                .collect(),
        }
    }
}

/// Random model with uniform weights in `[-1, 1]`: ReLU hidden layers and
/// an identity output.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, input: usize, graph_widths: &[usize], dense_widths: &[usize]) -> Gnn<f64> {
    let mat = |r: usize, c: usize, rng: &mut R| {
        let rows: Vec<Vec<f64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
        Matrix::from_rows(&rows).expect("rectangular")
    };
    let mut width = input;
    let mut graph_layers = Vec::new();
    for &d in graph_widths {
        let w_self = mat(d, width, rng);
        let w_neigh = mat(d, width, rng);
        let bias = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        graph_layers.push(GraphLayer { w_self, w_neigh, bias, activation: Activation::Relu });
        width = d;
    }
    let mut dense_layers = Vec::new();
    for (i, &d) in dense_widths.iter().chain(std::iter::once(&1)).enumerate() {
        let w = mat(d, width, rng);
        let bias = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let activation = if i == dense_widths.len() { Activation::Identity } else { Activation::Relu };
        dense_layers.push(DenseLayer { w, bias, activation });
        width = d;
    }
    Gnn::new(graph_layers, Pooling::Sum, dense_layers).expect("widths chain")
}

/// Closed real interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Interval { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(&self, x: T, tol: T) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Largest absolute value in the interval.
    pub fn magnitude(&self) -> T {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn scale(self, w: T) -> Self {
        if w >= T::zero() {
            Interval { lo: self.lo * w, hi: self.hi * w }
        } else {
            Interval { lo: self.hi * w, hi: self.lo * w }
        }
    }

    pub fn add(self, o: Self) -> Self {
        Interval { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }

    pub fn hull_with_zero(self) -> Self {
        Interval { lo: self.lo.min(T::zero()), hi: self.hi.max(T::zero()) }
    }
}

/// `bias + W x` over a box of inputs.
fn affine_bounds<T: Scalar>(w: &Matrix<T>, bias: Option<&[T]>, x: &[Interval<T>]) -> Vec<Interval<T>> {
    (0..w.rows())
        .map(|r| {
            let start = Interval::point(bias.map_or(T::zero(), |b| b[r]));
            w.row(r).iter().zip(x).fold(start, |acc, (&wi, &xi)| acc.add(xi.scale(wi)))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerBounds<T> {
    pub pre: Vec<Vec<Interval<T>>>,
    pub post: Vec<Vec<Interval<T>>>,
}

/// Interval bounds for every unit of a model over all graphs with `n`
/// nodes, binary features and degree at most `max_degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds<T> {
    pub input: Vec<Vec<Interval<T>>>,
    pub graph: Vec<LayerBounds<T>>,
    pub pooled: Vec<Interval<T>>,
    pub dense: Vec<(Vec<Interval<T>>, Vec<Interval<T>>)>,
}

impl<T: Scalar> Bounds<T> {
    /// Bound of the `l`-th node representation, where `l = 0` is the input.
    pub fn node(&self, l: usize, v: usize) -> &[Interval<T>] {
        if l == 0 {
            &self.input[v]
        } else {
            &self.graph[l - 1].post[v]
        }
    }
}

/// Each neighbor contributes anything between zero (absent) and its full
/// interval, and at most `min(n - 1, max_degree)` neighbors exist.
pub fn propagate_bounds<T: Scalar>(model: &Gnn<T>, n: usize, max_degree: usize) -> Bounds<T> {
    let d = n.saturating_sub(1).min(max_degree);
    let input = vec![vec![Interval::new(T::zero(), T::one()); model.input_dim()]; n];
    let mut x = input.clone();
    let mut graph = Vec::new();
    for layer in model.graph_layers() {
        let mut pre = Vec::with_capacity(n);
        for xv in &x {
            let own = affine_bounds(&layer.w_self, Some(&layer.bias), xv);
            // neighbors range over the union of node boxes
            let hull: Vec<Interval<T>> = (0..layer.input_dim())
                .map(|c| {
                    x.iter().fold(Interval::new(T::infinity(), T::neg_infinity()), |acc, row| Interval {
                        lo: acc.lo.min(row[c].lo),
                        hi: acc.hi.max(row[c].hi),
                    })
                })
                .collect();
            let one = affine_bounds(&layer.w_neigh, None, &hull);
            let total: Vec<Interval<T>> = own
                .iter()
                .zip(&one)
                .map(|(o, nb)| o.add(nb.hull_with_zero().scale(T::from_count(d))))
                .collect();
            pre.push(total);
        }
        let post: Vec<Vec<Interval<T>>> =
            pre.iter().map(|row: &Vec<Interval<T>>| row.iter().map(|&i| layer.activation.apply_interval(i)).collect()).collect();
        x = post.clone();
        graph.push(LayerBounds { pre, post });
    }
    let scale = model.pool_scale(n);
    let pooled: Vec<Interval<T>> = (0..model.pooled_dim())
        .map(|c| x.iter().fold(Interval::point(T::zero()), |acc, row| acc.add(row[c])).scale(scale))
        .collect();
    let mut h = pooled.clone();
    let mut dense = Vec::new();
    for layer in model.dense_layers() {
        let pre = affine_bounds(&layer.w, Some(&layer.bias), &h);
        let post: Vec<Interval<T>> = pre.iter().map(|&i| layer.activation.apply_interval(i)).collect();
        h = post.clone();
        dense.push((pre, post));
    }
    Bounds { input, graph, pooled, dense }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camd::DesignSpace;
    use crate::enumerator::{collect_feasible, ConstraintLevel, EnumOptions};
    use crate::graph::{permutations, Permutation};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn zero_model(f: usize, bias: f64) -> Gnn<f64> {
        let layer = GraphLayer {
            w_self: Matrix::zeros(2, f),
            w_neigh: Matrix::zeros(2, f),
            bias: vec![0.0; 2],
            activation: Activation::Relu,
        };
        let dense = DenseLayer { w: Matrix::zeros(1, 2), bias: vec![bias], activation: Activation::Identity };
        Gnn::new(vec![layer], Pooling::Sum, vec![dense]).unwrap()
    }

    fn molecules(n: usize) -> Vec<MolecularGraph> {
        collect_feasible(&DesignSpace::qm7(n).unwrap(), &EnumOptions::new(ConstraintLevel::S1)).unwrap()
    }

    #[test]
    fn constant_model() {
        let m = zero_model(16, -2.5);
        for mol in molecules(3).iter().take(20) {
            assert_eq!(m.forward(mol).unwrap(), -2.5);
        }
    }

    #[test]
    fn identity_layer_pools_features() {
        let g = UndirectedGraph::empty(1).with_features(vec![vec![true, false, true]]).unwrap();
        let layer = GraphLayer {
            w_self: Matrix::identity(3),
            w_neigh: Matrix::zeros(3, 3),
            bias: vec![0.0; 3],
            activation: Activation::Identity,
        };
        let sum = DenseLayer { w: Matrix::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap(), bias: vec![0.0], activation: Activation::Identity };
        let m = Gnn::new(vec![layer], Pooling::Sum, vec![sum]).unwrap();
        let t = m.forward_trace(&g).unwrap();
        assert_eq!(t.pooled, vec![1.0, 0.0, 1.0]);
        assert_eq!(t.output, 2.0);
    }

    /// Straightforward re-implementation over explicit index loops.
    fn reference_forward(m: &Gnn<f64>, mol: &MolecularGraph) -> f64 {
        let n = mol.n();
        let mut x: Vec<Vec<f64>> = (0..n).map(|v| mol.x_row(v).iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()).collect();
        for l in m.graph_layers() {
            let mut next = vec![vec![0.0; l.output_dim()]; n];
            for v in 0..n {
                for o in 0..l.output_dim() {
                    let mut s = l.bias[o];
                    for i in 0..l.input_dim() {
                        s += l.w_self.get(o, i) * x[v][i];
                    }
                    for u in 0..n {
                        if u != v && mol.a(u, v) {
                            for i in 0..l.input_dim() {
                                s += l.w_neigh.get(o, i) * x[u][i];
                            }
                        }
                    }
                    next[v][o] = if l.activation == Activation::Relu && s < 0.0 { 0.0 } else { s };
                }
            }
            x = next;
        }
        let mut h: Vec<f64> = (0..x[0].len()).map(|c| (0..n).map(|v| x[v][c]).sum()).collect();
        for l in m.dense_layers() {
            h = (0..l.output_dim())
                .map(|o| {
                    let s = l.bias[o] + (0..l.input_dim()).map(|i| l.w.get(o, i) * h[i]).sum::<f64>();
                    if l.activation == Activation::Relu { s.max(0.0) } else { s }
                })
                .collect();
        }
        h[0]
    }

    #[test]
    fn matches_reference_implementation() {
        let mols = molecules(4);
        let mut r = rng(7);
        for _ in 0..10 {
            let m = random_model(&mut r, 16, &[4, 3], &[3]);
            let mol = mols.choose(&mut r).unwrap();
            let (a, b) = (m.forward(mol).unwrap(), reference_forward(&m, mol));
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn permutation_invariance() {
        let mols = molecules(4);
        let mut r = rng(11);
        let perms: Vec<Permutation> = permutations(4).map(|p| Permutation::new(p).unwrap()).collect();
        for _ in 0..50 {
            let m = random_model(&mut r, 16, &[5, 4], &[4]);
            let mol = mols.choose(&mut r).unwrap();
            let p = perms.choose(&mut r).unwrap();
            let y0 = m.forward(mol).unwrap();
            let y1 = m.forward(&mol.permute(p).unwrap()).unwrap();
            assert!((y0 - y1).abs() <= 1e-9);
        }
    }

    #[test]
    fn f32_agrees_with_f64() {
        let mols = molecules(3);
        let m = random_model(&mut rng(3), 16, &[4], &[2]);
        let m32: Gnn<f32> = m.cast();
        for mol in mols.iter().take(30) {
            let (a, b) = (m.forward(mol).unwrap(), m32.forward(mol).unwrap());
            assert!((a - f64::from(b)).abs() < 1e-3 * (1.0 + a.abs()));
        }
    }

    /// With all edges fixed, a graph layer is one affine map on the stacked
    /// node vector: `I (x) W_self + Adj (x) W_neigh`.
    #[test]
    fn fixed_graph_layer_is_dense() {
        let mols = molecules(4);
        let mut r = rng(5);
        for mol in mols.choose_multiple(&mut r, 10) {
            let m = random_model(&mut r, 16, &[3], &[]);
            let l = &m.graph_layers()[0];
            let (n, di, d) = (mol.n(), l.input_dim(), l.output_dim());
            let mut big = Matrix::<f64>::zeros(n * d, n * di);
            for v in 0..n {
                for u in 0..n {
                    let w = if u == v { Some(&l.w_self) } else if mol.a(u, v) { Some(&l.w_neigh) } else { None };
                    if let Some(w) = w {
                        for o in 0..d {
                            for i in 0..di {
                                big.set(v * d + o, u * di + i, w.get(o, i));
                            }
                        }
                    }
                }
            }
            let stacked: Vec<f64> = (0..n).flat_map(|v| mol.x_row(v).iter().map(|&b| f64::from(u8::from(b)))).collect();
            let mut y: Vec<f64> = (0..n).flat_map(|_| l.bias.clone()).collect();
            big.mul_add(&stacked, &mut y);
            let t = m.forward_trace(mol).unwrap();
            let flat: Vec<f64> = t.graph[0].pre.concat();
            for (a, b) in y.iter().zip(&flat) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bounds_examples() {
        let layer = GraphLayer {
            w_self: Matrix::identity(2),
            w_neigh: Matrix::identity(2),
            bias: vec![0.0; 2],
            activation: Activation::Identity,
        };
        let dense = DenseLayer { w: Matrix::from_rows(&[vec![-1.0, 0.0]]).unwrap(), bias: vec![0.0], activation: Activation::Relu };
        let m = Gnn::new(vec![layer], Pooling::Sum, vec![dense]).unwrap();
        let b = propagate_bounds(&m, 1, 4);
        assert_eq!(b.graph[0].post[0], vec![Interval::new(0.0, 1.0); 2]);
        assert_eq!(b.dense[0].1[0], Interval::new(0.0, 0.0));
        // three possible neighbors
        let b = propagate_bounds(&m, 4, 4);
        assert_eq!(b.graph[0].pre[2][0], Interval::new(0.0, 4.0));
        assert_eq!(b.pooled[0], Interval::new(0.0, 16.0));
    }

    #[test]
    fn bounds_are_sound() {
        let mut r = rng(19);
        let space = DesignSpace::qm7(4).unwrap();
        let mols = collect_feasible(&space, &EnumOptions::new(ConstraintLevel::S1)).unwrap();
        for _ in 0..4 {
            let m = random_model(&mut r, 16, &[4, 3], &[3]);
            let b = propagate_bounds(&m, 4, space.max_degree());
            for mol in mols.choose_multiple(&mut r, 250) {
                let t = m.forward_trace(mol).unwrap();
                for (lt, lb) in t.graph.iter().zip(&b.graph) {
                    for v in 0..4 {
                        for c in 0..lt.pre[v].len() {
                            assert!(lb.pre[v][c].contains(lt.pre[v][c], 1e-9));
                            assert!(lb.post[v][c].contains(lt.post[v][c], 1e-9));
                            assert!(lb.post[v][c].lo >= 0.0);
                        }
                    }
                }
                for (x, i) in t.pooled.iter().zip(&b.pooled) {
                    assert!(i.contains(*x, 1e-9));
                }
                for ((pre, post), (bp, bq)) in t.dense.iter().zip(&b.dense) {
                    assert!(pre.iter().zip(bp).all(|(x, i)| i.contains(*x, 1e-9)));
                    assert!(post.iter().zip(bq).all(|(x, i)| i.contains(*x, 1e-9)));
                }
            }
        }
    }

    #[test]
    fn json_round_trip_and_qm7_shape() {
        let m = random_model(&mut rng(1), 16, &[16, 32], &[16, 4]);
        let back: Gnn<f64> = Gnn::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let widths: Vec<usize> = back.graph_layers().iter().map(GraphLayer::output_dim).collect();
        assert_eq!(widths, vec![16, 32]);
        let dense: Vec<usize> = back.dense_layers().iter().map(DenseLayer::output_dim).collect();
        assert_eq!(dense, vec![16, 4, 1]);
    }

    #[test]
    fn json_errors_have_locations() {
        let m = random_model(&mut rng(2), 16, &[4], &[]);
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        v["dense_layers"][0]["w"][0].as_array_mut().unwrap().push(0.5.into());
        let err = Gnn::<f64>::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(&err, Error::Parse { location, .. } if location.starts_with("dense_layers[0].w")), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        v["graph_layers"][0]["activation"] = "tanh".into();
        assert!(matches!(Gnn::<f64>::from_json(&v.to_string()), Err(Error::Parse { .. })));
        assert!(matches!(Gnn::<f64>::from_json("{"), Err(Error::Parse { .. })));
    }

    #[test]
    fn width_mismatch_rejected() {
        let m = zero_model(16, 0.0);
        let g = UndirectedGraph::path(3).with_features(vec![vec![false; 5]; 3]).unwrap();
        assert!(m.forward(&g).is_err());
    }
}
