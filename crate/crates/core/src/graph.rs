//! Graphs, nearest-neighbour walk kernels and their truncations.
//!
//! A [`GraphSpec`] is the (possibly infinite) host graph, described by a
//! family tag and able to list the neighbours of any [`Label`]. A [`Graph`]
//! is a finite piece of it, materialized breadth-first from a root: vertex ids
//! are dense integers in BFS order with the root at id 0. Vertex weights
//! `c(x)` always refer to the host graph, so a ball of an infinite graph
//! carries the true transition probabilities of its interior.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exact::{parse_rational, rational_to_f64};
use crate::matrix::DenseMatrix;

/// Vertex name in the host graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Lattice coordinates, cycle/line position, or a tree word.
    Coord(Vec<i64>),
    /// Vertex name from an explicit adjacency file.
    Name(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Coord(c) if c.is_empty() => write!(f, "()"),
            Label::Coord(c) => {
                let parts: Vec<String> = c.iter().map(i64::to_string).collect();
                write!(f, "{}", parts.join(","))
            }
            Label::Name(n) => write!(f, "{n}"),
        }
    }
}

/// Symmetric positive edge weight, kept exactly and as a float.
#[derive(Clone, Debug, PartialEq)]
pub struct Conductance {
    pub value: f64,
    pub exact: BigRational,
}

impl Conductance {
    pub fn new(exact: BigRational) -> Self {
        Conductance {
            value: rational_to_f64(&exact),
            exact,
        }
    }

    pub fn unit() -> Self {
        Conductance {
            value: 1.0,
            exact: BigRational::one(),
        }
    }
}

#[derive(Debug)]
enum Family {
    Explicit {
        names: Vec<String>,
        index: HashMap<String, usize>,
        adjacency: Vec<Vec<(usize, Conductance)>>,
    },
    Line,
    Cycle(usize),
    Grid {
        width: usize,
        height: usize,
    },
    Z2,
    Tree(usize),
}

/// Parsed graph specification. Cheap to clone.
#[derive(Clone, Debug)]
pub struct GraphSpec {
    text: String,
    family: Arc<Family>,
}

#[derive(Deserialize)]
struct AdjacencyFile {
    vertices: Vec<serde_json::Value>,
    edges: Vec<Vec<serde_json::Value>>,
}

fn json_label(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl GraphSpec {
    /// Parses `explicit:<path>`, `line`, `cycle:<n>`, `grid:<w>x<h>`, `z2`
    /// or `tree:<degree>`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let invalid = |reason: &str| Error::InvalidSpec {
            spec: text.to_string(),
            reason: reason.to_string(),
        };
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        let family = match (head, arg) {
            ("explicit", Some(path)) => {
                let json = std::fs::read_to_string(Path::new(path))?;
                return Self::from_adjacency_json(&json, text);
            }
            ("line", None) => Family::Line,
            ("z2", None) => Family::Z2,
            ("cycle", Some(n)) => {
                let n: usize = n.parse().map_err(|_| invalid("cycle length must be an integer"))?;
                if n < 3 {
                    return Err(invalid("cycle length must be at least 3"));
                }
                Family::Cycle(n)
            }
            ("grid", Some(dims)) => {
                let (w, h) = dims.split_once('x').ok_or_else(|| invalid("expected grid:<w>x<h>"))?;
                let width: usize = w.parse().map_err(|_| invalid("grid width must be an integer"))?;
                let height: usize = h.parse().map_err(|_| invalid("grid height must be an integer"))?;
                if width == 0 || height == 0 || width * height < 2 {
                    return Err(invalid("grid needs at least two vertices"));
                }
                Family::Grid { width, height }
            }
            ("tree", Some(d)) => {
                let d: usize = d.parse().map_err(|_| invalid("tree degree must be an integer"))?;
                if d < 2 {
                    return Err(invalid("tree degree must be at least 2"));
                }
                Family::Tree(d)
            }
            ("explicit" | "cycle" | "grid" | "tree", None) | ("line" | "z2", Some(_)) => {
                return Err(invalid("wrong number of parameters"))
            }
            _ => return Err(Error::UnknownFamily(head.to_string())),
        };
        Ok(GraphSpec {
            text: text.to_string(),
            family: Arc::new(family),
        })
    }

    /// Reads an adjacency document `{"vertices": [...], "edges": [[i,j] | [i,j,c], ...]}`.
    pub fn from_adjacency_json(json: &str, text: &str) -> Result<Self> {
        let file: AdjacencyFile = serde_json::from_str(json)?;
        let names: Vec<String> = file.vertices.iter().map(json_label).collect();
        let invalid = |reason: String| Error::InvalidSpec {
            spec: text.to_string(),
            reason,
        };
        let mut edges = Vec::with_capacity(file.edges.len());
        for edge in &file.edges {
            if edge.len() != 2 && edge.len() != 3 {
                return Err(invalid(format!("edge {edge:?} must have 2 or 3 entries")));
            }
            let endpoint = |v: &serde_json::Value| -> Result<usize> {
                v.as_u64()
                    .map(|i| i as usize)
                    .filter(|&i| i < names.len())
                    .ok_or_else(|| invalid(format!("edge endpoint {v} is not a vertex index")))
            };
            let (i, j) = (endpoint(&edge[0])?, endpoint(&edge[1])?);
            let c = match edge.get(2) {
                None => BigRational::one(),
                Some(serde_json::Value::String(s)) => parse_rational(s)?,
                Some(serde_json::Value::Number(n)) => parse_rational(&n.to_string())?,
                Some(other) => return Err(invalid(format!("conductance {other} is not a number"))),
            };
            edges.push((i, j, c));
        }
        Self::explicit(text, names, &edges)
    }

    /// Builds an explicit graph from vertex names and undirected edges.
    /// An edge may be listed in both orientations if the conductances agree.
    pub fn explicit(text: &str, names: Vec<String>, edges: &[(usize, usize, BigRational)]) -> Result<Self> {
        let n = names.len();
        let mut index = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidSpec {
                    spec: text.to_string(),
                    reason: format!("duplicate vertex label `{name}`"),
                });
            }
        }
        let mut adjacency: Vec<Vec<(usize, Conductance)>> = vec![Vec::new(); n];
        for (i, j, c) in edges {
            let (i, j) = (*i, *j);
            if i >= n || j >= n {
                return Err(Error::UnknownVertex(i.max(j).to_string()));
            }
            if i == j {
                return Err(Error::SelfLoop(names[i].clone()));
            }
            if !c.is_positive() {
                return Err(Error::NonPositiveConductance {
                    from: names[i].clone(),
                    to: names[j].clone(),
                    value: c.to_string(),
                });
            }
            match adjacency[i].iter().find(|(k, _)| *k == j) {
                Some((_, existing)) if existing.exact != *c => {
                    return Err(Error::Asymmetric {
                        from: names[i].clone(),
                        to: names[j].clone(),
                    })
                }
                Some(_) => continue,
                None => {
                    adjacency[i].push((j, Conductance::new(c.clone())));
                    adjacency[j].push((i, Conductance::new(c.clone())));
                }
            }
        }
        for row in &mut adjacency {
            row.sort_by_key(|(k, _)| *k);
        }
        Ok(GraphSpec {
            text: text.to_string(),
            family: Arc::new(Family::Explicit {
                names,
                index,
                adjacency,
            }),
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Family tag: one of explicit, line, cycle, grid, z2, tree.
    pub fn tag(&self) -> &'static str {
        match *self.family {
            Family::Explicit { .. } => "explicit",
            Family::Line => "line",
            Family::Cycle(_) => "cycle",
            Family::Grid { .. } => "grid",
            Family::Z2 => "z2",
            Family::Tree(_) => "tree",
        }
    }

    pub fn is_finite(&self) -> bool {
        self.vertex_count().is_some()
    }

    pub fn vertex_count(&self) -> Option<usize> {
        match &*self.family {
            Family::Explicit { names, .. } => Some(names.len()),
            Family::Cycle(n) => Some(*n),
            Family::Grid { width, height } => Some(width * height),
            Family::Line | Family::Z2 | Family::Tree(_) => None,
        }
    }

    /// Degree of the tree family, if this is one.
    pub fn tree_degree(&self) -> Option<usize> {
        match *self.family {
            Family::Tree(d) => Some(d),
            _ => None,
        }
    }

    pub fn default_root(&self) -> Label {
        match &*self.family {
            Family::Explicit { names, .. } => Label::Name(names.first().cloned().unwrap_or_default()),
            Family::Line | Family::Cycle(_) => Label::Coord(vec![0]),
            Family::Grid { .. } | Family::Z2 => Label::Coord(vec![0, 0]),
            Family::Tree(_) => Label::Coord(vec![]),
        }
    }

    /// Parses a vertex label in this family's notation (`"3"`, `"1,0"`,
    /// `"0,2,1"` for a tree word, `"()"` for the tree root, or a name).
    pub fn parse_label(&self, text: &str) -> Result<Label> {
        let text = text.trim();
        let label = match &*self.family {
            Family::Explicit { .. } => Label::Name(text.to_string()),
            _ => {
                let inner = text.trim_start_matches('(').trim_end_matches(')');
                let coords = if inner.is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(',')
                        .map(|c| c.trim().parse::<i64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::UnknownVertex(text.to_string()))?
                };
                Label::Coord(coords)
            }
        };
        if !self.contains(&label) {
            return Err(Error::UnknownVertex(text.to_string()));
        }
        Ok(label)
    }

    pub fn contains(&self, label: &Label) -> bool {
        match (&*self.family, label) {
            (Family::Explicit { index, .. }, Label::Name(n)) => index.contains_key(n),
            (Family::Line, Label::Coord(c)) => c.len() == 1,
            (Family::Cycle(n), Label::Coord(c)) => c.len() == 1 && (0..*n as i64).contains(&c[0]),
            (Family::Grid { width, height }, Label::Coord(c)) => {
                c.len() == 2 && (0..*width as i64).contains(&c[0]) && (0..*height as i64).contains(&c[1])
            }
            (Family::Z2, Label::Coord(c)) => c.len() == 2,
            (Family::Tree(d), Label::Coord(c)) => c
                .iter()
                .enumerate()
                .all(|(i, &k)| k >= 0 && (k as usize) < if i == 0 { *d } else { d - 1 }),
            _ => false,
        }
    }

    /// Host-graph neighbours with conductances, in a fixed family order.
    pub fn neighbours(&self, label: &Label) -> Vec<(Label, Conductance)> {
        let unit = |c: Vec<i64>| (Label::Coord(c), Conductance::unit());
        match (&*self.family, label) {
            (
                Family::Explicit {
                    names,
                    index,
                    adjacency,
                },
                Label::Name(n),
            ) => index
                .get(n)
                .map(|&i| {
                    adjacency[i]
                        .iter()
                        .map(|(j, c)| (Label::Name(names[*j].clone()), c.clone()))
                        .collect()
                })
                .unwrap_or_default(),
            (Family::Line, Label::Coord(c)) => vec![unit(vec![c[0] + 1]), unit(vec![c[0] - 1])],
            (Family::Cycle(n), Label::Coord(c)) => {
                let n = *n as i64;
                vec![unit(vec![(c[0] + 1) % n]), unit(vec![(c[0] + n - 1) % n])]
            }
            (Family::Grid { width, height }, Label::Coord(c)) => {
                let (w, h) = (*width as i64, *height as i64);
                [(1, 0), (0, 1), (-1, 0), (0, -1)]
                    .iter()
                    .map(|(dx, dy)| (c[0] + dx, c[1] + dy))
                    .filter(|(x, y)| (0..w).contains(x) && (0..h).contains(y))
                    .map(|(x, y)| unit(vec![x, y]))
                    .collect()
            }
            (Family::Z2, Label::Coord(c)) => [(1, 0), (0, 1), (-1, 0), (0, -1)]
                .iter()
                .map(|(dx, dy)| unit(vec![c[0] + dx, c[1] + dy]))
                .collect(),
            (Family::Tree(d), Label::Coord(word)) => {
                let mut out = Vec::with_capacity(*d);
                if let Some((_, parent)) = word.split_last() {
                    out.push(unit(parent.to_vec()));
                }
                let children = if word.is_empty() { *d } else { d - 1 };
                for k in 0..children as i64 {
                    let mut child = word.clone();
                    child.push(k);
                    out.push(unit(child));
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// Materializes the ball of `radius` around `root`, or, for a finite
    /// family with `radius = None`, the whole graph (the root's component
    /// first in BFS order, then any remaining vertices).
    pub fn materialize(&self, root: &Label, radius: Option<usize>) -> Result<Graph> {
        Graph::build(self.clone(), root, radius)
    }
}

/// Finite materialized graph with dense vertex ids.
#[derive(Clone, Debug)]
pub struct Graph {
    spec: GraphSpec,
    labels: Vec<Label>,
    index: HashMap<Label, usize>,
    adjacency: Vec<Vec<usize>>,
    conductance: Vec<Vec<Conductance>>,
    weight: Vec<Conductance>,
    complete: Vec<bool>,
    distance: Vec<Option<usize>>,
    radius: Option<usize>,
}

impl Graph {
    fn build(spec: GraphSpec, root: &Label, radius: Option<usize>) -> Result<Self> {
        if !spec.contains(root) {
            return Err(Error::UnknownVertex(root.to_string()));
        }
        if radius.is_none() && !spec.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "graph `{}` is infinite; a ball radius is required",
                spec.text
            )));
        }
        let mut labels = Vec::new();
        let mut index = HashMap::new();
        let mut distance = Vec::new();
        let mut host: Vec<Vec<(Label, Conductance)>> = Vec::new();

        let bfs = |start: Label,
                   labels: &mut Vec<Label>,
                   index: &mut HashMap<Label, usize>,
                   distance: &mut Vec<Option<usize>>,
                   host: &mut Vec<Vec<(Label, Conductance)>>,
                   reachable: bool| {
            let mut queue = VecDeque::new();
            index.insert(start.clone(), labels.len());
            labels.push(start.clone());
            distance.push(reachable.then_some(0));
            queue.push_back((start, 0usize));
            while let Some((label, d)) = queue.pop_front() {
                let nbrs = spec.neighbours(&label);
                if radius.is_none_or(|r| d < r) {
                    for (next, _) in &nbrs {
                        if !index.contains_key(next) {
                            index.insert(next.clone(), labels.len());
                            labels.push(next.clone());
                            distance.push(reachable.then_some(d + 1));
                            queue.push_back((next.clone(), d + 1));
                        }
                    }
                }
                host.push(nbrs);
            }
        };
        bfs(root.clone(), &mut labels, &mut index, &mut distance, &mut host, true);
        if radius.is_none() {
            if let Family::Explicit { names, .. } = &*spec.family {
                for name in names {
                    let label = Label::Name(name.clone());
                    if !index.contains_key(&label) {
                        bfs(label, &mut labels, &mut index, &mut distance, &mut host, false);
                    }
                }
            }
        }
        // `host` was filled in BFS pop order, which equals id order.
        let n = labels.len();
        let mut adjacency = Vec::with_capacity(n);
        let mut conductance = Vec::with_capacity(n);
        let mut weight = Vec::with_capacity(n);
        let mut complete = Vec::with_capacity(n);
        for nbrs in &host {
            let mut row: Vec<(usize, Conductance)> = nbrs
                .iter()
                .filter_map(|(l, c)| index.get(l).map(|&j| (j, c.clone())))
                .collect();
            row.sort_by_key(|(j, _)| *j);
            complete.push(row.len() == nbrs.len());
            let total = nbrs.iter().fold(BigRational::zero(), |acc, (_, c)| acc + &c.exact);
            weight.push(Conductance::new(total));
            let (ids, cs): (Vec<usize>, Vec<Conductance>) = row.into_iter().unzip();
            adjacency.push(ids);
            conductance.push(cs);
        }
        Ok(Graph {
            spec,
            labels,
            index,
            adjacency,
            conductance,
            weight,
            complete,
            distance,
            radius,
        })
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    /// Family tag of the host graph.
    pub fn family(&self) -> &'static str {
        self.spec.tag()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The materialization root; always id 0.
    pub fn root(&self) -> usize {
        0
    }

    /// True when this is the whole host graph.
    pub fn is_whole(&self) -> bool {
        self.spec.vertex_count() == Some(self.len()) && self.complete.iter().all(|&c| c)
    }

    pub fn radius(&self) -> Option<usize> {
        self.radius
    }

    pub fn label(&self, v: usize) -> &Label {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn id(&self, label: &Label) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn id_of(&self, text: &str) -> Result<usize> {
        let label = self.spec.parse_label(text)?;
        self.id(&label).ok_or_else(|| Error::UnknownVertex(text.to_string()))
    }

    /// Sorted neighbour ids inside the materialization.
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn conductances(&self, v: usize) -> &[Conductance] {
        &self.conductance[v]
    }

    pub fn conductance(&self, x: usize, y: usize) -> Option<&Conductance> {
        let pos = self.adjacency[x].binary_search(&y).ok()?;
        Some(&self.conductance[x][pos])
    }

    pub fn is_adjacent(&self, x: usize, y: usize) -> bool {
        self.adjacency[x].binary_search(&y).is_ok()
    }

    /// `c(x)`, the total host conductance at `x`.
    pub fn vertex_weight(&self, x: usize) -> &Conductance {
        &self.weight[x]
    }

    /// Whether every host neighbour of `v` is materialized.
    pub fn is_complete(&self, v: usize) -> bool {
        self.complete[v]
    }

    /// Distance from the materialization root, `None` if unreachable.
    pub fn root_distance(&self, v: usize) -> Option<usize> {
        self.distance[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// All vertices within `radius` of `root`, in BFS order.
    pub fn ball(&self, root: usize, radius: usize) -> Vec<usize> {
        self.bfs_distances(root)
            .into_iter()
            .take_while(|&(_, d)| d <= radius)
            .map(|(v, _)| v)
            .collect()
    }

    /// The subgraph induced by `set` as a standalone explicit graph, with the
    /// conductances of the host. Vertex names are the host labels.
    pub fn induced(&self, set: &[usize], text: &str) -> Result<GraphSpec> {
        let mut pos = HashMap::with_capacity(set.len());
        for (i, &v) in set.iter().enumerate() {
            if v >= self.len() {
                return Err(Error::UnknownVertex(v.to_string()));
            }
            pos.insert(v, i);
        }
        let names = set.iter().map(|&v| self.labels[v].to_string()).collect();
        let mut edges = Vec::new();
        for (i, &v) in set.iter().enumerate() {
            for (&w, c) in self.adjacency[v].iter().zip(&self.conductance[v]) {
                if let Some(&j) = pos.get(&w) {
                    if i < j {
                        edges.push((i, j, c.exact.clone()));
                    }
                }
            }
        }
        GraphSpec::explicit(text, names, &edges)
    }

    /// `(vertex, distance)` pairs reachable from `root`, BFS order, with
    /// neighbours visited in increasing id.
    pub fn bfs_distances(&self, root: usize) -> Vec<(usize, usize)> {
        let mut seen = vec![false; self.len()];
        let mut order = vec![(root, 0)];
        seen[root] = true;
        let mut head = 0;
        while head < order.len() {
            let (v, d) = order[head];
            head += 1;
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    order.push((w, d + 1));
                }
            }
        }
        order
    }

    /// Checks that the ball of `radius` around `root` is materialized with
    /// every vertex strictly inside it complete, so that walks of length
    /// `2 * radius + 1` from `root` see the host graph.
    pub fn require_ball(&self, root: usize, radius: usize) -> Result<()> {
        for (v, d) in self.bfs_distances(root) {
            if d > radius {
                break;
            }
            if d < radius && !self.complete[v] {
                return Err(Error::RegionTooSmall(self.labels[v].to_string()));
            }
        }
        Ok(())
    }
}

/// Nearest-neighbour kernel `p(x,y) = c(x,y)/c(x)`.
#[derive(Clone, Debug)]
pub struct WalkKernel<'g> {
    graph: &'g Graph,
    prob: Vec<Vec<f64>>,
    symmetric: Vec<Vec<f64>>,
}

impl<'g> WalkKernel<'g> {
    pub fn new(graph: &'g Graph) -> Result<Self> {
        let mut prob = Vec::with_capacity(graph.len());
        let mut symmetric = Vec::with_capacity(graph.len());
        for x in 0..graph.len() {
            let cx = graph.vertex_weight(x);
            if !cx.exact.is_positive() {
                return Err(Error::IsolatedVertex(graph.label(x).to_string()));
            }
            prob.push(
                graph
                    .conductances(x)
                    .iter()
                    .map(|c| rational_to_f64(&(&c.exact / &cx.exact)))
                    .collect(),
            );
            symmetric.push(
                graph
                    .neighbours(x)
                    .iter()
                    .zip(graph.conductances(x))
                    .map(|(&y, c)| c.value / (cx.value * graph.vertex_weight(y).value).sqrt())
                    .collect(),
            );
        }
        Ok(WalkKernel { graph, prob, symmetric })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// `p(x, ·)` aligned with `graph.neighbours(x)`.
    pub fn row(&self, x: usize) -> &[f64] {
        &self.prob[x]
    }

    /// `c(x,y)/sqrt(c(x)c(y))` aligned with `graph.neighbours(x)`.
    pub fn symmetric_row(&self, x: usize) -> &[f64] {
        &self.symmetric[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        match self.graph.adjacency[x].binary_search(&y) {
            Ok(pos) => self.prob[x][pos],
            Err(_) => 0.0,
        }
    }

    pub fn prob_exact(&self, x: usize, y: usize) -> BigRational {
        match self.graph.conductance(x, y) {
            Some(c) => &c.exact / &self.graph.vertex_weight(x).exact,
            None => BigRational::zero(),
        }
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.graph.vertex_weight(x).value
    }

    /// Restriction to `set` (absorbing outside).
    pub fn truncate(&self, set: &[usize]) -> Result<FiniteKernel> {
        truncate_kernel(self, set)
    }

    /// Integer form of the kernel: `p(x,y) = weights[x][j] / scale`.
    pub fn integer_weights(&self) -> IntegerKernel {
        let g = self.graph;
        let mut denom = BigInt::one();
        for x in 0..g.len() {
            denom = denom.lcm(g.vertex_weight(x).exact.denom());
            for c in g.conductances(x) {
                denom = denom.lcm(c.exact.denom());
            }
        }
        let scaled = |r: &BigRational| -> BigInt { (r * &denom).to_integer() };
        let vertex: Vec<BigInt> = (0..g.len()).map(|x| scaled(&g.vertex_weight(x).exact)).collect();
        let scale = vertex.iter().fold(BigInt::one(), |acc, c| acc.lcm(c));
        let weights = (0..g.len())
            .map(|x| {
                g.conductances(x)
                    .iter()
                    .map(|c| {
                        let w = scaled(&c.exact) * (&scale / &vertex[x]);
                        w.to_biguint().expect("conductances are positive")
                    })
                    .collect()
            })
            .collect();
        IntegerKernel {
            scale: scale.to_biguint().expect("weights are positive"),
            weights,
        }
    }
}

/// `p(x, y) = weights[x][j] / scale` for `y = neighbours(x)[j]`.
#[derive(Clone, Debug)]
pub struct IntegerKernel {
    pub scale: BigUint,
    pub weights: Vec<Vec<BigUint>>,
}

/// The kernel restricted to a finite vertex list (dense, substochastic).
#[derive(Clone, Debug)]
pub struct FiniteKernel {
    vertices: Vec<usize>,
    matrix: DenseMatrix,
    weights: Vec<f64>,
}

impl FiniteKernel {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn position(&self, v: usize) -> Option<usize> {
        self.vertices.iter().position(|&u| u == v)
    }

    pub fn symmetrize(&self) -> DenseMatrix {
        symmetrize(self)
    }

    /// `(T_A^n)(v, v)`, computed by repeated products with the symmetrized
    /// matrix (the diagonal is invariant under the conjugation).
    pub fn return_probability(&self, v: usize, n: u32) -> Option<f64> {
        let i = self.position(v)?;
        let s = self.symmetrize();
        let mut vec = vec![0.0; self.len()];
        vec[i] = 1.0;
        for _ in 0..n {
            vec = s.mul_vec(&vec);
        }
        Some(vec[i])
    }
}

pub fn kernel(graph: &Graph) -> Result<WalkKernel<'_>> {
    WalkKernel::new(graph)
}

/// Keeps transitions with both endpoints in `set`; everything else is absorbed.
pub fn truncate_kernel(k: &WalkKernel<'_>, set: &[usize]) -> Result<FiniteKernel> {
    let g = k.graph();
    if set.is_empty() {
        return Err(Error::InvalidArgument("truncation set is empty".into()));
    }
    if let Some(&bad) = set.iter().find(|&&v| v >= g.len()) {
        return Err(Error::UnknownVertex(bad.to_string()));
    }
    let pos: HashMap<usize, usize> = set.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    if pos.len() != set.len() {
        return Err(Error::InvalidArgument("truncation set has repeated vertices".into()));
    }
    let mut matrix = DenseMatrix::zeros(set.len(), set.len());
    for (i, &x) in set.iter().enumerate() {
        for (&y, &p) in g.neighbours(x).iter().zip(k.row(x)) {
            if let Some(&j) = pos.get(&y) {
                matrix[(i, j)] = p;
            }
        }
    }
    Ok(FiniteKernel {
        vertices: set.to_vec(),
        matrix,
        weights: set.iter().map(|&v| k.weight(v)).collect(),
    })
}

/// `S(y,z) = sqrt(c(y)/c(z)) p(y,z)`, symmetric for reversible kernels.
pub fn symmetrize(fk: &FiniteKernel) -> DenseMatrix {
    let n = fk.len();
    let mut s = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let p = fk.matrix[(i, j)];
            if p != 0.0 {
                s[(i, j)] = (fk.weights[i] / fk.weights[j]).sqrt() * p;
            }
        }
    }
    // Average the two halves so that S is symmetric to the last bit.
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn whole(text: &str) -> Graph {
        let spec = GraphSpec::parse(text).unwrap();
        spec.materialize(&spec.default_root(), None).unwrap()
    }

    fn path3() -> Graph {
        let spec = GraphSpec::parse("grid:3x1").unwrap();
        spec.materialize(&Label::Coord(vec![0, 0]), None).unwrap()
    }

    #[test]
    fn cycle_has_degree_two() {
        let g = whole("cycle:4");
        assert_eq!(g.len(), 4);
        assert!((0..4).all(|v| g.degree(v) == 2));
    }

    #[test]
    fn explicit_single_edge_is_k2() {
        let spec = GraphSpec::from_adjacency_json(r#"{"vertices":["x","y"],"edges":[[0,1]]}"#, "k2").unwrap();
        let g = spec.materialize(&spec.default_root(), None).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!((g.degree(0), g.degree(1)), (1, 1));
        assert_eq!(g.label(0), &Label::Name("x".into()));
    }

    #[test]
    fn z2_ball_sizes() {
        let spec = GraphSpec::parse("z2").unwrap();
        let g = spec.materialize(&spec.default_root(), Some(3)).unwrap();
        assert_eq!(g.ball(0, 0).len(), 1);
        assert_eq!(g.ball(0, 1).len(), 5);
        assert_eq!(g.ball(0, 2).len(), 13);
        assert_eq!(g.ball(0, 3).len(), 25);
        assert!(g.require_ball(0, 3).is_ok());
        assert!(g.require_ball(0, 4).is_err());
    }

    #[test]
    fn line_ball_is_interval() {
        let spec = GraphSpec::parse("line").unwrap();
        let g = spec.materialize(&spec.default_root(), Some(3)).unwrap();
        let mut ball: Vec<i64> = g
            .ball(0, 3)
            .into_iter()
            .map(|v| match g.label(v) {
                Label::Coord(c) => c[0],
                Label::Name(_) => unreachable!(),
            })
            .collect();
        ball.sort();
        assert_eq!(ball, (-3..=3).collect::<Vec<_>>());
        // Boundary vertices keep the host weight.
        assert!(g.vertex_weight(g.ball(0, 3)[6]).value == 2.0);
    }

    #[test]
    fn k2_ball_radius_zero() {
        let g = whole("grid:2x1");
        assert_eq!(g.ball(0, 0), vec![0]);
    }

    #[test]
    fn balls_are_nested_and_exhaust_finite_graphs() {
        let g = whole("grid:3x3");
        for r in 0..5 {
            let small = g.ball(0, r);
            let big = g.ball(0, r + 1);
            assert!(small.iter().all(|v| big.contains(v)));
        }
        assert_eq!(g.ball(0, 4).len(), 9);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(GraphSpec::parse("hexagonal"), Err(Error::UnknownFamily(_))));
        assert!(GraphSpec::parse("cycle:2").is_err());
        assert!(GraphSpec::parse("grid:1x1").is_err());
        assert!(GraphSpec::parse("tree:1").is_err());
        let loops = GraphSpec::from_adjacency_json(r#"{"vertices":["a"],"edges":[[0,0]]}"#, "x");
        assert!(matches!(loops, Err(Error::SelfLoop(_))));
        let neg = GraphSpec::from_adjacency_json(r#"{"vertices":["a","b"],"edges":[[0,1,-1]]}"#, "x");
        assert!(matches!(neg, Err(Error::NonPositiveConductance { .. })));
        let asym = GraphSpec::from_adjacency_json(r#"{"vertices":["a","b"],"edges":[[0,1,1],[1,0,2]]}"#, "x");
        assert!(matches!(asym, Err(Error::Asymmetric { .. })));
        let twice = GraphSpec::from_adjacency_json(r#"{"vertices":["a","b"],"edges":[[0,1,0.5],[1,0,"1/2"]]}"#, "x");
        assert!(twice.is_ok());
    }

    #[test]
    fn isolated_vertex_rejected_by_kernel() {
        let spec = GraphSpec::from_adjacency_json(r#"{"vertices":["a","b","c"],"edges":[[0,1]]}"#, "x").unwrap();
        let g = spec.materialize(&spec.default_root(), None).unwrap();
        assert_eq!(g.len(), 3);
        assert!(matches!(kernel(&g), Err(Error::IsolatedVertex(_))));
    }

    #[test]
    fn path_kernel_values() {
        let g = path3();
        let k = kernel(&g).unwrap();
        let (a, b, c) = (0, 1, 2);
        assert_eq!(k.prob(a, b), 1.0);
        assert_eq!(k.prob(b, a), 0.5);
        assert_eq!(k.prob(b, c), 0.5);
        assert_eq!(k.prob_exact(b, c), ratio(1, 2));
        for x in 0..3 {
            assert!((k.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reversibility_is_exact_with_rational_conductances() {
        let spec = GraphSpec::from_adjacency_json(
            r#"{"vertices":["a","b","c","d"],"edges":[[0,1,0.3],[1,2,"2/7"],[2,3,5],[3,0,1],[0,2,0.125]]}"#,
            "x",
        )
        .unwrap();
        let g = spec.materialize(&spec.default_root(), None).unwrap();
        let k = kernel(&g).unwrap();
        for x in 0..g.len() {
            for &y in g.neighbours(x) {
                let lhs = &g.vertex_weight(x).exact * k.prob_exact(x, y);
                let rhs = &g.vertex_weight(y).exact * k.prob_exact(y, x);
                assert_eq!(lhs, rhs);
            }
        }
        let ik = k.integer_weights();
        for x in 0..g.len() {
            for (j, &y) in g.neighbours(x).iter().enumerate() {
                let p = BigRational::new(BigInt::from(ik.weights[x][j].clone()), BigInt::from(ik.scale.clone()));
                assert_eq!(p, k.prob_exact(x, y));
            }
        }
    }

    #[test]
    fn truncation_examples() {
        let g = path3();
        let k = kernel(&g).unwrap();
        let fk = k.truncate(&[0, 1]).unwrap();
        assert_eq!(fk.matrix()[(0, 1)], 1.0);
        assert_eq!(fk.matrix()[(1, 0)], 0.5);
        assert_eq!(fk.matrix().row_sums(), vec![1.0, 0.5]);

        let full = k.truncate(&[0, 1, 2]).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(full.matrix()[(x, y)], k.prob(x, y));
            }
        }
        assert!(k.truncate(&[7]).is_err());

        let k2 = whole("grid:2x1");
        let kk = kernel(&k2).unwrap();
        let single = kk.truncate(&[0]).unwrap();
        assert_eq!(single.matrix()[(0, 0)], 0.0);
        assert_eq!(single.symmetrize()[(0, 0)], 0.0);
    }

    #[test]
    fn symmetrization_examples() {
        let k2 = whole("grid:2x1");
        let s = kernel(&k2).unwrap().truncate(&[0, 1]).unwrap().symmetrize();
        assert_eq!(s, DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]));

        let g = path3();
        let s = kernel(&g).unwrap().truncate(&[0, 1, 2]).unwrap().symmetrize();
        let r = 0.5f64.sqrt();
        assert!((s[(0, 1)] - r).abs() < 1e-15 && (s[(1, 0)] - r).abs() < 1e-15);
        assert!((s[(1, 2)] - r).abs() < 1e-15 && (s[(2, 1)] - r).abs() < 1e-15);
        assert_eq!(s[(0, 2)], 0.0);
        assert!(s.asymmetry() < 1e-14);
    }

    #[test]
    fn tree_neighbourhood() {
        let spec = GraphSpec::parse("tree:3").unwrap();
        assert_eq!(spec.neighbours(&Label::Coord(vec![])).len(), 3);
        assert_eq!(spec.neighbours(&Label::Coord(vec![2])).len(), 3);
        let g = spec.materialize(&spec.default_root(), Some(2)).unwrap();
        assert_eq!(g.len(), 1 + 3 + 6);
        assert!(spec.parse_label("()").is_ok());
        assert!(spec.parse_label("2,1").is_ok());
        assert!(spec.parse_label("1,2").is_err());
    }

    #[test]
    fn induced_ball_is_finite_and_irregular() {
        let spec = GraphSpec::parse("z2").unwrap();
        let host = spec.materialize(&spec.default_root(), Some(3)).unwrap();
        let ball = host.ball(0, 2);
        let induced = host.induced(&ball, "z2-ball-2").unwrap();
        assert!(induced.is_finite());
        let g = induced.materialize(&induced.parse_label("0,0").unwrap(), None).unwrap();
        assert_eq!(g.len(), 13);
        assert_eq!(g.degree(0), 4);
        assert_eq!(g.degree(g.id_of("2,0").unwrap()), 1);
        assert_eq!(g.degree(g.id_of("1,1").unwrap()), 2);
    }
}
