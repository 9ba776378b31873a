//! Finite weighted graphs `(b, m)` rooted at a vertex `o`, functions on
//! their vertices, and the interior/boundary split used to represent balls
//! of infinite graphs.

use std::collections::VecDeque;
use std::fs;
use std::ops::Index;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A connected, symmetric, locally finite weighted graph over a measure space.
///
/// Vertices are dense ids `0..n`. Each vertex keeps its neighbors sorted by
/// id so every sweep over the graph visits edges in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    measure: Vec<f64>,
    labels: Vec<Option<String>>,
    adjacency: Vec<Vec<(usize, f64)>>,
    root: usize,
    depth: Vec<usize>,
    weighted_degree: Vec<f64>,
}

impl WeightedGraph {
    /// Builds and validates a graph from `(x, y, b)` triples.
    ///
    /// Each unordered pair may appear once, in either orientation.
    pub fn build(edges: &[(usize, usize, f64)], measures: &[f64], root: usize) -> Result<Self> {
        let n = measures.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if root >= n {
            return Err(Error::VertexOutOfRange(root));
        }
        for (vertex, &m) in measures.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::NonpositiveMeasure { vertex, m });
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(x, y, b) in edges {
            if x >= n {
                return Err(Error::VertexOutOfRange(x));
            }
            if y >= n {
                return Err(Error::VertexOutOfRange(y));
            }
            if x == y {
                return Err(Error::SelfLoop(x));
            }
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::NonpositiveWeight { x, y, b });
            }
            adjacency[x].push((y, b));
            adjacency[y].push((x, b));
        }
        for (x, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_by_key(|&(y, _)| y);
            if let Some(w) = nbrs.windows(2).find(|w| w[0].0 == w[1].0) {
                let y = w[0].0;
                return Err(Error::DuplicateEdge(x.min(y), x.max(y)));
            }
        }
        let depth = bfs_depths(&adjacency, root)?;
        let weighted_degree = adjacency
            .iter()
            .map(|nbrs| nbrs.iter().map(|&(_, b)| b).sum())
            .collect();
        Ok(Self {
            measure: measures.to_vec(),
            labels: vec![None; n],
            adjacency,
            root,
            depth,
            weighted_degree,
        })
    }

    pub fn with_labels(mut self, labels: Vec<Option<String>>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn measure(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measure
    }

    pub fn label(&self, x: usize) -> Option<&str> {
        self.labels[x].as_deref()
    }

    /// Combinatorial distance `|x|` from the root.
    pub fn depth(&self, x: usize) -> usize {
        self.depth[x]
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Neighbors of `x` with edge weights, ascending by id.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// `sum_y b(x, y)`.
    pub fn weighted_degree(&self, x: usize) -> f64 {
        self.weighted_degree[x]
    }

    pub fn edge_weight(&self, x: usize, y: usize) -> f64 {
        self.adjacency[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .map(|i| self.adjacency[x][i].1)
            .unwrap_or(0.0)
    }

    /// Every unordered edge once, as `(min, max, b)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(x, nbrs)| {
            nbrs.iter().filter(move |&&(y, _)| y > x).map(move |&(y, b)| (x, y, b))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Vertices of the sphere `S_r(o)`, ascending.
    pub fn sphere(&self, r: usize) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.depth[x] == r).collect()
    }

    /// All spheres `S_0, ..., S_{max_depth}`.
    pub fn spheres(&self) -> Vec<Vec<usize>> {
        let mut spheres = vec![Vec::new(); self.max_depth() + 1];
        for x in 0..self.len() {
            spheres[self.depth[x]].push(x);
        }
        spheres
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: (0..self.len())
                .map(|id| VertexRecord { id, m: self.measure[id], label: self.labels[id].clone() })
                .collect(),
            edges: self.edges().map(|(x, y, b)| EdgeRecord { x, y, b }).collect(),
            root: self.root,
        }
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        let n = doc.vertices.len();
        let mut measures = vec![f64::NAN; n];
        let mut labels = vec![None; n];
        for v in &doc.vertices {
            if v.id >= n || !measures[v.id].is_nan() {
                return Err(Error::ParseError(format!(
                    "vertex ids must be unique and dense in 0..{n}, found {}",
                    v.id
                )));
            }
            measures[v.id] = v.m;
            labels[v.id] = v.label.clone();
        }
        let edges: Vec<_> = doc.edges.iter().map(|e| (e.x, e.y, e.b)).collect();
        Self::build(&edges, &measures, doc.root)?.with_labels(labels)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
        Self::from_document(&doc)
    }

    /// The induced subgraph on `B_R(o)`, renumbered by `(depth, id)` so that
    /// balls of smaller radius occupy a prefix of the ids. Also returns the
    /// original id of every new vertex.
    pub fn induced_ball(&self, radius: usize) -> Result<(WeightedGraph, Vec<usize>)> {
        if radius > self.max_depth() {
            return Err(Error::RadiusExceedsGraph { radius, depth: self.max_depth() });
        }
        let mut order: Vec<usize> = (0..self.len()).filter(|&x| self.depth[x] <= radius).collect();
        order.sort_by_key(|&x| (self.depth[x], x));
        let mut new_id = vec![usize::MAX; self.len()];
        for (i, &x) in order.iter().enumerate() {
            new_id[x] = i;
        }
        let mut edges = Vec::new();
        for (x, y, b) in self.edges() {
            if new_id[x] != usize::MAX && new_id[y] != usize::MAX {
                edges.push((new_id[x], new_id[y], b));
            }
        }
        let measures: Vec<f64> = order.iter().map(|&x| self.measure[x]).collect();
        let labels = order.iter().map(|&x| self.labels[x].clone()).collect();
        let ball = Self::build(&edges, &measures, new_id[self.root])?.with_labels(labels)?;
        Ok((ball, order))
    }

    /// Canonical serialization: vertices by id, edges by `(min, max)`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph documents serialize")
    }
}

fn bfs_depths(adjacency: &[Vec<(usize, f64)>], root: usize) -> Result<Vec<usize>> {
    let mut depth = vec![usize::MAX; adjacency.len()];
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &adjacency[x] {
            if depth[y] == usize::MAX {
                depth[y] = depth[x] + 1;
                queue.push_back(y);
            }
        }
    }
    match depth.iter().position(|&d| d == usize::MAX) {
        Some(x) => Err(Error::DisconnectedGraph(x)),
        None => Ok(depth),
    }
}

/// Convenience wrapper with the argument order of the JSON format.
pub fn build_graph(edges: &[(usize, usize, f64)], measures: &[f64], root: usize) -> Result<WeightedGraph> {
    WeightedGraph::build(edges, measures, root)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    pub m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub x: usize,
    pub y: usize,
    pub b: f64,
}

/// On-disk graph format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub root: usize,
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::Io(e.to_string()))?;
    WeightedGraph::from_json(&text)
}

pub fn write_graph(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), g.to_json() + "\n").map_err(|e| Error::Io(e.to_string()))
}

/// A real-valued function on the vertices of a graph. Entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(Self(values))
    }

    /// Checks alignment with `g` as well as finiteness.
    pub fn on(g: &WeightedGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.len() {
            return Err(Error::LengthMismatch { expected: g.len(), got: values.len() });
        }
        Self::new(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        assert!(c.is_finite());
        Self(vec![c; n])
    }

    /// Spherically symmetric lift `x -> profile(|x|)`.
    pub fn radial(g: &WeightedGraph, profile: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(g.depths().iter().map(|&r| profile(r)).collect())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    /// Pointwise map; panics if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let out = Self::new(self.0.iter().map(|&v| f(v)).collect());
        out.expect("pointwise map produced a non-finite value")
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub(crate) fn check_len(&self, g: &WeightedGraph) -> Result<()> {
        if self.len() != g.len() {
            return Err(Error::LengthMismatch { expected: g.len(), got: self.len() });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for VertexFunction {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<VertexFunction> for Vec<f64> {
    fn from(f: VertexFunction) -> Self {
        f.0
    }
}

impl Index<usize> for VertexFunction {
    type Output = f64;
    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

/// Split of the stored vertices into those where operators may be evaluated
/// (all neighbors stored) and the truncation boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDecomposition {
    interior: Vec<usize>,
    boundary: Vec<usize>,
    on_boundary: Vec<bool>,
}

impl BoundaryDecomposition {
    /// Every vertex interior: the graph is finite and closed.
    pub fn closed(g: &WeightedGraph) -> Self {
        Self {
            interior: (0..g.len()).collect(),
            boundary: Vec::new(),
            on_boundary: vec![false; g.len()],
        }
    }

    /// Explicit boundary set; every other vertex is interior.
    pub fn with_boundary(g: &WeightedGraph, boundary: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut on_boundary = vec![false; g.len()];
        for x in boundary {
            if x >= g.len() {
                return Err(Error::VertexOutOfRange(x));
            }
            on_boundary[x] = true;
        }
        Ok(Self::from_mask(on_boundary))
    }

    fn from_mask(on_boundary: Vec<bool>) -> Self {
        let interior = (0..on_boundary.len()).filter(|&x| !on_boundary[x]).collect();
        let boundary = (0..on_boundary.len()).filter(|&x| on_boundary[x]).collect();
        Self { interior, boundary, on_boundary }
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, x: usize) -> bool {
        self.on_boundary[x]
    }

    pub fn is_interior(&self, x: usize) -> bool {
        !self.on_boundary[x]
    }

    pub fn len(&self) -> usize {
        self.on_boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.on_boundary.is_empty()
    }
}

/// Splits an exact ball `B_R(o)` into `|x| < R` and the sphere `S_R(o)`.
pub fn ball_decomposition(g: &WeightedGraph, radius: usize) -> Result<BoundaryDecomposition> {
    if radius == 0 {
        return Err(Error::InvalidSpec("ball radius must be at least 1".into()));
    }
    let depth = g.max_depth();
    if radius > depth {
        return Err(Error::RadiusExceedsGraph { radius, depth });
    }
    if radius < depth {
        return Err(Error::NotExactBall { radius, depth });
    }
    Ok(BoundaryDecomposition::from_mask(g.depths().iter().map(|&r| r == radius).collect()))
}
