//! ℤ- and ℤ²-periodic weighted graphs, finite covers, width and the
//! massive electrical moves.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Strip,
    Torus,
}

/// An edge of the fundamental domain from `u` to the copy of `v` translated by `(dx, dy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub dx: i32,
    pub dy: i32,
    pub c: f64,
}

impl Edge {
    pub fn offset(&self) -> (i32, i32) {
        (self.dx, self.dy)
    }

    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGraph {
    kind: Kind,
    names: Vec<String>,
    edges: Vec<Edge>,
    mass: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDoc {
    pub kind: Kind,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub u: String,
    pub v: String,
    #[serde(default)]
    pub dx: i32,
    #[serde(default)]
    pub dy: i32,
    pub c: f64,
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

impl PeriodicGraph {
    /// Validating constructor.  Errors name the offending edge or vertex.
    pub fn new(kind: Kind, names: Vec<String>, edges: Vec<Edge>, mass: Vec<f64>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Validation("graph has no vertices".into()));
        }
        if mass.len() != n {
            return Err(Error::Validation("mass vector length differs from vertex count".into()));
        }
        let mut seen = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if seen.insert(name.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate vertex id '{name}'")));
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::Validation(format!("edge {i} references an unknown vertex")));
            }
            if !(e.c > 0.0) || !e.c.is_finite() {
                return Err(Error::Validation(format!(
                    "edge {i} ({} -> {}) has nonpositive conductance {}",
                    names[e.u], names[e.v], e.c
                )));
            }
            if kind == Kind::Strip && e.dy != 0 {
                return Err(Error::Validation(format!(
                    "edge {i} ({} -> {}) has dy = {} on a strip graph",
                    names[e.u], names[e.v], e.dy
                )));
            }
        }
        for (v, &m) in mass.iter().enumerate() {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::Validation(format!("vertex '{}' has negative mass {m}", names[v])));
            }
        }
        let mut dsu = Dsu::new(n);
        for e in &edges {
            dsu.union(e.u, e.v);
        }
        let root = dsu.find(0);
        if let Some(v) = (0..n).find(|&v| dsu.find(v) != root) {
            return Err(Error::Validation(format!(
                "quotient graph is disconnected: '{}' is not connected to '{}'",
                names[v], names[0]
            )));
        }
        Ok(PeriodicGraph { kind, names, edges, mass })
    }

    pub fn from_doc(doc: &GraphDoc) -> Result<Self> {
        let index: HashMap<&str, usize> = doc.vertices.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let lookup = |s: &str, i: usize| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::Validation(format!("edge {i} references unknown vertex '{s}'")))
        };
        let mut edges = Vec::with_capacity(doc.edges.len());
        for (i, e) in doc.edges.iter().enumerate() {
            edges.push(Edge { u: lookup(&e.u, i)?, v: lookup(&e.v, i)?, dx: e.dx, dy: e.dy, c: e.c });
        }
        let mut mass = vec![0.0; doc.vertices.len()];
        if let Some(m) = &doc.mass {
            for (name, &val) in m {
                let v = index
                    .get(name.as_str())
                    .ok_or_else(|| Error::Validation(format!("mass given for unknown vertex '{name}'")))?;
                mass[*v] = val;
            }
        }
        Self::new(doc.kind, doc.vertices.clone(), edges, mass)
    }

    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            kind: self.kind,
            vertices: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    u: self.names[e.u].clone(),
                    v: self.names[e.v].clone(),
                    dx: e.dx,
                    dy: e.dy,
                    c: e.c,
                })
                .collect(),
            mass: if self.is_massless() {
                None
            } else {
                Some(self.names.iter().cloned().zip(self.mass.iter().copied()).collect())
            },
        }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }
    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
    pub fn is_massless(&self) -> bool {
        self.mass.iter().all(|&m| m == 0.0)
    }
    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Same graph with every mass replaced.
    pub fn with_uniform_mass(&self, m: f64) -> Result<Self> {
        Self::new(self.kind, self.names.clone(), self.edges.clone(), vec![m; self.names.len()])
    }

    pub fn with_mass(&self, mass: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, self.names.clone(), self.edges.clone(), mass)
    }

    /// Largest |dx| and |dy| over all edges.
    pub fn max_offsets(&self) -> (i32, i32) {
        let mx = self.edges.iter().map(|e| e.dx.abs()).max().unwrap_or(0);
        let my = self.edges.iter().map(|e| e.dy.abs()).max().unwrap_or(0);
        (mx, my)
    }

    /// Number of edge endpoints at `v` (a loop counts twice).
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().map(|e| (e.u == v) as usize + (e.v == v) as usize).sum()
    }

    /// Incident edges of `v` as `(edge index, other endpoint, offset from v to other)`.
    pub fn incident(&self, v: usize) -> Vec<(usize, usize, (i32, i32))> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.u == v {
                out.push((i, e.v, (e.dx, e.dy)));
            }
            if e.v == v {
                out.push((i, e.u, (-e.dx, -e.dy)));
            }
        }
        out
    }
}

pub fn load_graph(text: &str) -> Result<PeriodicGraph> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| Error::Validation(format!("malformed graph: {e}")))?;
    PeriodicGraph::from_doc(&doc)
}

pub fn graph_to_json(g: &PeriodicGraph) -> String {
    serde_json::to_string_pretty(&g.to_doc()).expect("graph serializes")
}

/// A finite quotient `𝒢/(n1 ℤ × n2 ℤ)` of a periodic graph.
///
/// Lifted vertex `(v, a, b)` has index `v + |V|·(a + n1·b)` and lifted edge
/// `(e, a, b)` has index `e + |E|·(a + n1·b)`.  The lifted graph keeps the
/// residual offsets `floor((a+dx)/n1)`, `floor((b+dy)/n2)` so monodromies of
/// the cover are well defined.
#[derive(Debug, Clone)]
pub struct FiniteCover {
    pub base: PeriodicGraph,
    pub n1: usize,
    pub n2: usize,
    pub graph: PeriodicGraph,
}

impl FiniteCover {
    pub fn vertex_index(&self, v: usize, a: usize, b: usize) -> usize {
        v + self.base.num_vertices() * (a + self.n1 * b)
    }
    pub fn edge_index(&self, e: usize, a: usize, b: usize) -> usize {
        e + self.base.num_edges() * (a + self.n1 * b)
    }
    /// `(v, a, b)` of a lifted vertex.
    pub fn vertex_lift(&self, idx: usize) -> (usize, usize, usize) {
        let nv = self.base.num_vertices();
        let (v, cell) = (idx % nv, idx / nv);
        (v, cell % self.n1, cell / self.n1)
    }
    pub fn edge_lift(&self, idx: usize) -> (usize, usize, usize) {
        let ne = self.base.num_edges();
        let (e, cell) = (idx % ne, idx / ne);
        (e, cell % self.n1, cell / self.n1)
    }
}

pub fn cover(g: &PeriodicGraph, n1: usize, n2: usize) -> Result<FiniteCover> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Domain("cover sizes must be positive".into()));
    }
    if g.kind == Kind::Strip && n2 != 1 {
        return Err(Error::Domain("strip covers need n2 = 1".into()));
    }
    let nv = g.num_vertices();
    let mut names = Vec::with_capacity(nv * n1 * n2);
    let mut mass = Vec::with_capacity(nv * n1 * n2);
    for b in 0..n2 {
        for a in 0..n1 {
            for v in 0..nv {
                names.push(if g.kind == Kind::Strip {
                    format!("{}@{}", g.names[v], a)
                } else {
                    format!("{}@{},{}", g.names[v], a, b)
                });
                mass.push(g.mass[v]);
            }
        }
    }
    let mut edges = Vec::with_capacity(g.num_edges() * n1 * n2);
    for b in 0..n2 {
        for a in 0..n1 {
            for e in &g.edges {
                let ta = a as i64 + e.dx as i64;
                let tb = b as i64 + e.dy as i64;
                let (ra, qa) = (ta.rem_euclid(n1 as i64) as usize, ta.div_euclid(n1 as i64) as i32);
                let (rb, qb) = (tb.rem_euclid(n2 as i64) as usize, tb.div_euclid(n2 as i64) as i32);
                edges.push(Edge {
                    u: e.u + nv * (a + n1 * b),
                    v: e.v + nv * (ra + n1 * rb),
                    dx: qa,
                    dy: qb,
                    c: e.c,
                });
            }
        }
    }
    let graph = PeriodicGraph::new(g.kind, names, edges, mass)?;
    Ok(FiniteCover { base: g.clone(), n1, n2, graph })
}

struct FlowNet {
    head: Vec<usize>,
    cap: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet { head: vec![], cap: vec![], adj: vec![vec![]; n] }
    }
    fn add(&mut self, a: usize, b: usize, c: i64) {
        self.adj[a].push(self.head.len());
        self.head.push(b);
        self.cap.push(c);
        self.adj[b].push(self.head.len());
        self.head.push(a);
        self.cap.push(0);
    }
    /// Edmonds–Karp; capacities are small so this is plenty.
    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.adj.len();
        let mut flow = 0;
        loop {
            let mut prev = vec![usize::MAX; n];
            let mut q = VecDeque::from([s]);
            prev[s] = usize::MAX - 1;
            while let Some(x) = q.pop_front() {
                if x == t {
                    break;
                }
                for &id in &self.adj[x] {
                    let y = self.head[id];
                    if self.cap[id] > 0 && prev[y] == usize::MAX {
                        prev[y] = id;
                        q.push_back(y);
                    }
                }
            }
            if prev[t] == usize::MAX {
                return flow;
            }
            let mut push = i64::MAX;
            let mut x = t;
            while x != s {
                let id = prev[x];
                push = push.min(self.cap[id]);
                x = self.head[id ^ 1];
            }
            let mut x = t;
            while x != s {
                let id = prev[x];
                self.cap[id] -= push;
                self.cap[id ^ 1] += push;
                x = self.head[id ^ 1];
            }
            flow += push;
        }
    }
}

/// Maximal number of vertex-disjoint bi-infinite paths of a strip graph,
/// i.e. the largest exponent of its characteristic polynomial.
///
/// Computed as a unit-vertex-capacity max-flow across a window of copies of
/// the fundamental domain: the source feeds the first `D` copies and the sink
/// drains the last `D`, where `D` is the largest horizontal offset.
pub fn width(g: &PeriodicGraph) -> Result<usize> {
    if g.kind != Kind::Strip {
        return Err(Error::Domain("width is defined for strip graphs".into()));
    }
    let d = g.max_offsets().0.max(1) as usize;
    if g.edges.iter().all(|e| e.dx == 0) {
        return Ok(0);
    }
    let nv = g.num_vertices();
    let len = 2 * d * (nv + 2) + 2 * d;
    // node ids: in(v,x) = 2(v + nv x), out = in + 1; then source, sink
    let id = |v: usize, x: usize| 2 * (v + nv * x);
    let source = 2 * nv * len;
    let sink = source + 1;
    let big = (nv * len) as i64 + 1;
    let mut net = FlowNet::new(sink + 1);
    for x in 0..len {
        for v in 0..nv {
            net.add(id(v, x), id(v, x) + 1, 1);
            if x < d {
                net.add(source, id(v, x), 1);
            }
            if x + d >= len {
                net.add(id(v, x) + 1, sink, 1);
            }
        }
    }
    for e in &g.edges {
        if e.is_loop() && e.dx == 0 {
            continue;
        }
        for x in 0..len as i64 {
            let y = x + e.dx as i64;
            if y < 0 || y >= len as i64 {
                continue;
            }
            let (a, b) = (id(e.u, x as usize), id(e.v, y as usize));
            net.add(a + 1, b, big);
            net.add(b + 1, a, big);
        }
    }
    Ok(net.max_flow(source, sink) as usize)
}

/// Local moves preserving the characteristic polynomial up to a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Move {
    /// Replace a degree-2 vertex and its two edges by one edge.
    Series { vertex: usize },
    /// Merge two edges with the same endpoints and offset.
    Parallel { e1: usize, e2: usize },
    /// Remove a degree-1 vertex.
    DeadBranch { vertex: usize },
    /// Replace a degree-3 vertex by a triangle on its neighbours.
    StarTriangle { vertex: usize },
}

fn remove_vertex(g: &PeriodicGraph, v0: usize, drop_edges: &[usize], new_edges: Vec<Edge>, mass: Vec<f64>) -> Result<PeriodicGraph> {
    let remap = |v: usize| if v > v0 { v - 1 } else { v };
    let mut edges: Vec<Edge> = g
        .edges
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop_edges.contains(i))
        .map(|(_, e)| Edge { u: remap(e.u), v: remap(e.v), ..*e })
        .collect();
    edges.extend(new_edges.into_iter().map(|e| Edge { u: remap(e.u), v: remap(e.v), ..e }));
    let mut names = g.names.clone();
    names.remove(v0);
    let mut mass = mass;
    mass.remove(v0);
    PeriodicGraph::new(g.kind, names, edges, mass)
}

/// Apply an electrical move.  New conductances/masses, with `m₀` the mass of
/// the eliminated vertex and `S` the sum of its conductances plus `m₀`:
/// series `ab/S`, star-triangle `A = bc/S` etc., neighbour masses grow by
/// `a·m₀/S`; parallel edges add; a dead branch adds `a·m₂/(a+m₂)`.
pub fn electrical_transform(g: &PeriodicGraph, mv: Move) -> Result<PeriodicGraph> {
    let nv = g.num_vertices();
    let check_vertex = |v: usize| {
        if v >= nv {
            Err(Error::Pattern(format!("vertex {v} does not exist")))
        } else {
            Ok(())
        }
    };
    match mv {
        Move::Parallel { e1, e2 } => {
            if e1 == e2 || e1 >= g.num_edges() || e2 >= g.num_edges() {
                return Err(Error::Pattern("parallel move needs two distinct existing edges".into()));
            }
            let (a, b) = (g.edges[e1], g.edges[e2]);
            let same = a.u == b.u && a.v == b.v && a.offset() == b.offset();
            let flipped = a.u == b.v && a.v == b.u && a.offset() == (-b.dx, -b.dy);
            if !same && !flipped {
                return Err(Error::Pattern(format!("edges {e1} and {e2} are not parallel")));
            }
            let mut edges = g.edges.clone();
            edges[e1.min(e2)] = Edge { c: a.c + b.c, ..g.edges[e1.min(e2)] };
            edges.remove(e1.max(e2));
            PeriodicGraph::new(g.kind, g.names.clone(), edges, g.mass.clone())
        }
        Move::Series { vertex: v0 } => {
            check_vertex(v0)?;
            let inc = g.incident(v0);
            if inc.len() != 2 || inc.iter().any(|&(i, _, _)| g.edges[i].is_loop()) {
                return Err(Error::Pattern(format!("vertex '{}' is not a degree-2 vertex without loops", g.names[v0])));
            }
            let (ea, v1, o1) = inc[0];
            let (eb, v2, o2) = inc[1];
            let (a, b, m0) = (g.edges[ea].c, g.edges[eb].c, g.mass[v0]);
            let s = a + b + m0;
            let mut mass = g.mass.clone();
            mass[v1] += a * m0 / s;
            mass[v2] += b * m0 / s;
            let new = Edge { u: v1, v: v2, dx: o2.0 - o1.0, dy: o2.1 - o1.1, c: a * b / s };
            remove_vertex(g, v0, &[ea, eb], vec![new], mass)
        }
        Move::DeadBranch { vertex: v2 } => {
            check_vertex(v2)?;
            let inc = g.incident(v2);
            if inc.len() != 1 || nv < 2 {
                return Err(Error::Pattern(format!("vertex '{}' is not a leaf", g.names[v2])));
            }
            let (ea, v1, _) = inc[0];
            let (a, m2) = (g.edges[ea].c, g.mass[v2]);
            let mut mass = g.mass.clone();
            mass[v1] += a * m2 / (a + m2);
            remove_vertex(g, v2, &[ea], vec![], mass)
        }
        Move::StarTriangle { vertex: v0 } => {
            check_vertex(v0)?;
            let inc = g.incident(v0);
            if inc.len() != 3 || inc.iter().any(|&(i, _, _)| g.edges[i].is_loop()) {
                return Err(Error::Pattern(format!("vertex '{}' is not a degree-3 vertex without loops", g.names[v0])));
            }
            let m0 = g.mass[v0];
            let s: f64 = inc.iter().map(|&(i, _, _)| g.edges[i].c).sum::<f64>() + m0;
            let mut mass = g.mass.clone();
            for &(i, v, _) in &inc {
                mass[v] += g.edges[i].c * m0 / s;
            }
            let mut new = Vec::new();
            for x in 0..3 {
                for y in (x + 1)..3 {
                    let (ex, vx, ox) = inc[x];
                    let (ey, vy, oy) = inc[y];
                    new.push(Edge {
                        u: vx,
                        v: vy,
                        dx: oy.0 - ox.0,
                        dy: oy.1 - ox.1,
                        c: g.edges[ex].c * g.edges[ey].c / s,
                    });
                }
            }
            let drop: Vec<usize> = inc.iter().map(|x| x.0).collect();
            remove_vertex(g, v0, &drop, new, mass)
        }
    }
}

/// Standard lattices used throughout the tests and examples.
pub mod lattices {
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn e(u: usize, v: usize, dx: i32, dy: i32) -> Edge {
        Edge { u, v, dx, dy, c: 1.0 }
    }

    /// The line ℤ: one vertex, one edge to its right neighbour.
    pub fn line(mass: f64) -> PeriodicGraph {
        PeriodicGraph::new(Kind::Strip, names(&["o"]), vec![e(0, 0, 1, 0)], vec![mass]).unwrap()
    }

    /// Four horizontal lines joined by vertical rungs.  Edge order: rungs
    /// a–b, b–c, c–d, then the horizontal edges of a, b, c, d.
    pub fn width4() -> PeriodicGraph {
        PeriodicGraph::new(
            Kind::Strip,
            names(&["a", "b", "c", "d"]),
            vec![e(0, 1, 0, 0), e(1, 2, 0, 0), e(2, 3, 0, 0), e(0, 0, 1, 0), e(1, 1, 1, 0), e(2, 2, 1, 0), e(3, 3, 1, 0)],
            vec![0.0; 4],
        )
        .unwrap()
    }

    /// Two horizontal lines and one rung per period.
    pub fn ladder() -> PeriodicGraph {
        PeriodicGraph::new(
            Kind::Strip,
            names(&["a", "b"]),
            vec![e(0, 1, 0, 0), e(0, 0, 1, 0), e(1, 1, 1, 0)],
            vec![0.0; 2],
        )
        .unwrap()
    }

    /// ℤ² with unit conductances: one vertex, edges to (1,0) and (0,1).
    pub fn square(mass: f64) -> PeriodicGraph {
        PeriodicGraph::new(Kind::Torus, names(&["o"]), vec![e(0, 0, 1, 0), e(0, 0, 0, 1)], vec![mass]).unwrap()
    }

    /// Triangular lattice: ℤ² plus the diagonal (1,1).
    pub fn triangular(mass: f64) -> PeriodicGraph {
        PeriodicGraph::new(
            Kind::Torus,
            names(&["o"]),
            vec![e(0, 0, 1, 0), e(0, 0, 0, 1), e(0, 0, 1, 1)],
            vec![mass],
        )
        .unwrap()
    }

    /// Finite triangle (trivial offsets).
    pub fn triangle(mass: f64) -> PeriodicGraph {
        PeriodicGraph::new(
            Kind::Torus,
            names(&["p", "q", "r"]),
            vec![e(0, 1, 0, 0), e(1, 2, 0, 0), e(2, 0, 0, 0)],
            vec![mass; 3],
        )
        .unwrap()
    }
}
