//! Sampling of edge configurations: chain-rule determinantal sampling,
//! Wilson's algorithm for massive rooted forests, and a Metropolis chain on
//! multi-type spanning forests of fixed homology.
//!
//! Masses are modelled by an auxiliary root vertex `ρ` joined to every
//! vertex `v` by an edge of conductance `M_v`; a vertex whose `ρ`-edge is
//! present is a root.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::graph::PeriodicGraph;
use crate::kernel::{KernelMatrix, IMAG_TOL};

/// Reproducible generator for a `(seed, stream)` pair.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComponentKind {
    RootedTree { root: usize },
    CycleRootedTree { cycle: (i32, i32) },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    #[serde(flatten)]
    pub kind: ComponentKind,
}

/// A multi-type spanning forest of a finite graph: every component is a
/// tree with one root or a unicyclic graph without roots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForestConfig {
    pub edges: Vec<usize>,
    pub roots: Vec<usize>,
    pub components: Vec<Component>,
    /// Consistently oriented sum of the cycle classes.
    pub homology: (i32, i32),
}

struct Dsu {
    parent: Vec<usize>,
    // offset of a vertex relative to its parent
    off: Vec<(i32, i32)>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect(), off: vec![(0, 0); n] }
    }
    fn find(&mut self, x: usize) -> (usize, (i32, i32)) {
        let mut path = Vec::new();
        let mut r = x;
        while self.parent[r] != r {
            path.push(r);
            r = self.parent[r];
        }
        // compress, accumulating offsets from the top down
        for &v in path.iter().rev() {
            let p = self.parent[v];
            if p != r {
                let po = self.off[p];
                self.off[v] = (self.off[v].0 + po.0, self.off[v].1 + po.1);
            }
            self.parent[v] = r;
        }
        (r, self.off[x])
    }
    /// Joins `u` and `v` where `pos(v) = pos(u) + d`; returns the cycle class if already joined.
    fn union(&mut self, u: usize, v: usize, d: (i32, i32)) -> Option<(i32, i32)> {
        let (ru, ou) = self.find(u);
        let (rv, ov) = self.find(v);
        if ru == rv {
            return Some((ou.0 + d.0 - ov.0, ou.1 + d.1 - ov.1));
        }
        self.parent[rv] = ru;
        self.off[rv] = (ou.0 + d.0 - ov.0, ou.1 + d.1 - ov.1);
        None
    }
}

fn primitive_orient(h: (i32, i32), dir: (i32, i32)) -> (i32, i32) {
    if h.0 * dir.0 + h.1 * dir.1 < 0 {
        (-h.0, -h.1)
    } else {
        h
    }
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Sum of cycle classes oriented to a common direction.  Contractible
/// cycles and non-parallel classes are errors.
pub fn orient_classes(classes: &[(i32, i32)]) -> Result<(i32, i32)> {
    let Some(&first) = classes.first() else {
        return Ok((0, 0));
    };
    if classes.iter().any(|&h| h == (0, 0)) {
        return Err(Error::Invariant("contractible cycle (weight zero)".into()));
    }
    let mut total = (0, 0);
    for &h in classes {
        if h.0 * first.1 - h.1 * first.0 != 0 {
            return Err(Error::Invariant(format!("incompatible cycle classes {first:?} and {h:?}")));
        }
        let o = primitive_orient(h, first);
        total = (total.0 + o.0, total.1 + o.1);
    }
    // canonical sign: first nonzero coordinate positive
    if total.0 < 0 || (total.0 == 0 && total.1 < 0) {
        total = (-total.0, -total.1);
    }
    Ok(total)
}

impl ForestConfig {
    /// Builds and validates a configuration from graph edges and root vertices.
    pub fn new(g: &PeriodicGraph, mut edges: Vec<usize>, mut roots: Vec<usize>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        roots.sort_unstable();
        roots.dedup();
        let n = g.num_vertices();
        if let Some(&e) = edges.iter().find(|&&e| e >= g.num_edges()) {
            return Err(Error::OutOfRange(format!("edge {e} out of range")));
        }
        if let Some(&v) = roots.iter().find(|&&v| v >= n) {
            return Err(Error::OutOfRange(format!("root {v} out of range")));
        }
        let mut dsu = Dsu::new(n);
        let mut cycles: Vec<(usize, (i32, i32))> = Vec::new();
        for &e in &edges {
            let ed = &g.edges()[e];
            if let Some(h) = dsu.union(ed.u, ed.v, ed.offset()) {
                cycles.push((ed.u, h));
            }
        }
        let mut comp: BTreeMap<usize, Component> = BTreeMap::new();
        for v in 0..n {
            let r = dsu.find(v).0;
            comp.entry(r)
                .or_insert(Component { vertices: vec![], edges: vec![], kind: ComponentKind::RootedTree { root: usize::MAX } })
                .vertices
                .push(v);
        }
        for &e in &edges {
            let r = dsu.find(g.edges()[e].u).0;
            comp.get_mut(&r).unwrap().edges.push(e);
        }
        let mut cycle_of: BTreeMap<usize, Vec<(i32, i32)>> = BTreeMap::new();
        for (v, h) in cycles {
            cycle_of.entry(dsu.find(v).0).or_default().push(h);
        }
        let mut root_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &v in &roots {
            root_of.entry(dsu.find(v).0).or_default().push(v);
        }
        let mut classes = Vec::new();
        for (r, c) in comp.iter_mut() {
            let cyc = cycle_of.get(r).cloned().unwrap_or_default();
            let rts = root_of.get(r).cloned().unwrap_or_default();
            match (cyc.len(), rts.len()) {
                (0, 1) => c.kind = ComponentKind::RootedTree { root: rts[0] },
                (1, 0) => {
                    c.kind = ComponentKind::CycleRootedTree { cycle: cyc[0] };
                    classes.push(cyc[0]);
                }
                (k, m) => {
                    return Err(Error::Invariant(format!(
                        "component of vertex {} has {k} cycles and {m} roots",
                        c.vertices[0]
                    )))
                }
            }
            let expect = match c.kind {
                ComponentKind::RootedTree { .. } => c.vertices.len() - 1,
                ComponentKind::CycleRootedTree { .. } => c.vertices.len(),
            };
            if c.edges.len() != expect {
                return Err(Error::Invariant("component edge count does not match its type".into()));
            }
        }
        let homology = orient_classes(&classes)?;
        Ok(ForestConfig { edges, roots, components: comp.into_values().collect(), homology })
    }

    pub fn num_cycles(&self) -> usize {
        self.components
            .iter()
            .filter(|c| matches!(c.kind, ComponentKind::CycleRootedTree { .. }))
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("forest serializes")
    }
}

/// `(p, q)`: the consistently oriented sum of the cycle classes, `(0, 0)`
/// without cycles.
pub fn homology_class(config: &ForestConfig) -> Result<(i32, i32)> {
    let classes: Vec<(i32, i32)> = config
        .components
        .iter()
        .filter_map(|c| match c.kind {
            ComponentKind::CycleRootedTree { cycle } => Some(cycle),
            _ => None,
        })
        .collect();
    orient_classes(&classes)
}

/// Exact sample from the determinantal law of `K` by sequential
/// conditioning.  Works for non-symmetric kernels as long as every
/// conditional marginal is a probability.
pub fn dpp_sample<R: Rng>(k: &KernelMatrix, rng: &mut R) -> Result<Vec<usize>> {
    let tol = IMAG_TOL;
    let n = k.dim();
    let mut m = k.entries.clone();
    let mut out = Vec::new();
    for i in 0..n {
        let kii = m[(i, i)];
        if kii.im.abs() > tol || kii.re < -tol || kii.re > 1.0 + tol {
            return Err(Error::InvalidKernel(format!("conditional marginal {kii} of edge {i}")));
        }
        let p = kii.re.clamp(0.0, 1.0);
        let include = rng.random::<f64>() < p;
        let denom = if include { kii } else { kii - 1.0 };
        if include {
            out.push(i);
        }
        if denom.norm() == 0.0 {
            continue;
        }
        for a in i + 1..n {
            let f = m[(a, i)] / denom;
            if f.norm() == 0.0 {
                continue;
            }
            for b in i + 1..n {
                let v = m[(i, b)];
                m[(a, b)] -= f * v;
            }
        }
    }
    Ok(out)
}

/// Wilson's algorithm on the graph read as a finite graph (offsets ignored,
/// self-loops skipped).  Walks are absorbed at the auxiliary root with
/// probability `M_v / (M_v + Σ c)` or at the growing forest.  With all
/// masses zero a designated `root` vertex is required.
pub fn wilson_forest<R: Rng>(g: &PeriodicGraph, root: Option<usize>, rng: &mut R) -> Result<ForestConfig> {
    let n = g.num_vertices();
    if g.is_massless() && root.is_none() {
        return Err(Error::Validation("all masses vanish: a designated root vertex is required".into()));
    }
    if let Some(r) = root {
        if r >= n {
            return Err(Error::OutOfRange(format!("root {r} out of range")));
        }
    }
    let inc: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .map(|v| {
            g.incident(v)
                .into_iter()
                .filter(|&(e, w, _)| w != v || g.edges()[e].u != g.edges()[e].v)
                .map(|(e, w, _)| (e, w, g.edges()[e].c))
                .collect()
        })
        .collect();
    let total: Vec<f64> = (0..n).map(|v| g.mass()[v] + inc[v].iter().map(|x| x.2).sum::<f64>()).collect();
    const ABSORB: usize = usize::MAX;
    let mut in_tree = vec![false; n];
    // next[v] = (edge, neighbour) or ABSORB
    let mut next: Vec<(usize, usize)> = vec![(ABSORB, ABSORB); n];
    let mut roots = Vec::new();
    if let Some(r) = root {
        in_tree[r] = true;
        roots.push(r);
    }
    for start in 0..n {
        let mut v = start;
        while !in_tree[v] {
            let mut x = rng.random::<f64>() * total[v];
            if x < g.mass()[v] || inc[v].is_empty() {
                next[v] = (ABSORB, ABSORB);
                break;
            }
            x -= g.mass()[v];
            let mut choice = inc[v][inc[v].len() - 1];
            for &c in &inc[v] {
                if x < c.2 {
                    choice = c;
                    break;
                }
                x -= c.2;
            }
            next[v] = (choice.0, choice.1);
            v = choice.1;
        }
        // retrace the loop-erased path
        let mut v = start;
        while !in_tree[v] {
            in_tree[v] = true;
            let (e, w) = next[v];
            if e == ABSORB {
                roots.push(v);
                break;
            }
            v = w;
        }
    }
    let edges: Vec<usize> = (0..n)
        .filter(|&v| Some(v) != root && next[v].0 != ABSORB)
        .map(|v| next[v].0)
        .collect();
    ForestConfig::new(g, edges, roots)
}

/// Augmented edge ids: `0..|E|` graph edges, `|E| + v` the root edge of `v`.
#[derive(Debug, Clone)]
struct AugGraph {
    n: usize,
    ne: usize,
    // (u, v, offset, weight); v == n means ρ
    edges: Vec<(usize, usize, (i32, i32), f64)>,
}

impl AugGraph {
    fn new(g: &PeriodicGraph) -> Self {
        let n = g.num_vertices();
        let mut edges: Vec<(usize, usize, (i32, i32), f64)> =
            g.edges().iter().map(|e| (e.u, e.v, e.offset(), e.c)).collect();
        for v in 0..n {
            edges.push((v, n, (0, 0), g.mass()[v]));
        }
        AugGraph { n, ne: g.num_edges(), edges }
    }
}

/// Metropolis chain on multi-type spanning forests with fixed total
/// homology, reversible for the weight `Π c_e · Π M_root`.
pub struct McmcChain<'a> {
    g: &'a PeriodicGraph,
    aug: AugGraph,
    pub target: (i32, i32),
    present: Vec<bool>,
    rng: ChaCha8Rng,
    pub proposed: u64,
    pub accepted: u64,
}

impl<'a> McmcChain<'a> {
    pub fn new(g: &'a PeriodicGraph, target: (i32, i32), seed: u64) -> Result<Self> {
        let aug = AugGraph::new(g);
        let mut rng = rng_for(seed, 0);
        let present = initial_state(g, &aug, target, &mut rng)?;
        let chain = McmcChain { g, aug, target, present, rng, proposed: 0, accepted: 0 };
        if !chain.valid(&chain.present) {
            return Err(Error::Invariant("initial configuration is not valid".into()));
        }
        Ok(chain)
    }

    fn valid(&self, present: &[bool]) -> bool {
        state_valid(&self.aug, present, self.target)
    }

    /// Sorted ids of the present augmented edges.
    pub fn state_key(&self) -> Vec<usize> {
        (0..self.present.len()).filter(|&i| self.present[i]).collect()
    }

    pub fn config(&self) -> ForestConfig {
        let edges: Vec<usize> = (0..self.aug.ne).filter(|&i| self.present[i]).collect();
        let roots: Vec<usize> = (0..self.aug.n).filter(|&v| self.present[self.aug.ne + v]).collect();
        ForestConfig::new(self.g, edges, roots).expect("chain states are valid")
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    pub fn step(&mut self) {
        self.proposed += 1;
        if self.rng.random::<f64>() < 0.8 {
            self.cycle_flip();
        } else {
            self.root_shift();
        }
        debug_assert!(self.valid(&self.present));
    }

    fn cycle_flip(&mut self) {
        let m = self.aug.edges.len();
        let e = self.rng.random_range(0..m);
        if self.present[e] || self.aug.edges[e].3 <= 0.0 {
            return;
        }
        let mut h = self.present.clone();
        h[e] = true;
        let cand = cycle_edges(&self.aug, &h, e);
        if cand.is_empty() {
            return;
        }
        let f = cand[self.rng.random_range(0..cand.len())];
        if f == e {
            self.accepted += 1;
            return;
        }
        h[f] = false;
        if !self.valid(&h) {
            return;
        }
        let ratio = self.aug.edges[e].3 / self.aug.edges[f].3;
        if ratio >= 1.0 || self.rng.random::<f64>() < ratio {
            self.present = h;
            self.accepted += 1;
        }
    }

    fn root_shift(&mut self) {
        let n = self.aug.n;
        let v = self.rng.random_range(0..n);
        let mv = self.aug.edges[self.aug.ne + v].3;
        if mv <= 0.0 {
            return;
        }
        let Some(r) = tree_root(&self.aug, &self.present, v) else {
            return;
        };
        if r == v {
            self.accepted += 1;
            return;
        }
        let ratio = mv / self.aug.edges[self.aug.ne + r].3;
        if ratio >= 1.0 || self.rng.random::<f64>() < ratio {
            self.present[self.aug.ne + r] = false;
            self.present[self.aug.ne + v] = true;
            self.accepted += 1;
        }
    }
}

fn state_valid(aug: &AugGraph, present: &[bool], target: (i32, i32)) -> bool {
    let n = aug.n;
    let mut dsu = Dsu::new(n + 1);
    let mut cycles: Vec<(usize, (i32, i32))> = Vec::new();
    let mut count = 0;
    for (i, &(u, v, d, _)) in aug.edges.iter().enumerate() {
        if !present[i] {
            continue;
        }
        count += 1;
        if let Some(h) = dsu.union(u, v, d) {
            cycles.push((u, h));
        }
    }
    if count != n {
        return false;
    }
    let rho = dsu.find(n).0;
    let mut per: BTreeMap<usize, usize> = BTreeMap::new();
    let mut classes = Vec::new();
    for (u, h) in cycles {
        let r = dsu.find(u).0;
        if r == rho || h == (0, 0) {
            return false;
        }
        *per.entry(r).or_default() += 1;
        classes.push(h);
    }
    if per.values().any(|&c| c > 1) {
        return false;
    }
    // every non-ρ component needs its cycle
    for v in 0..n {
        let r = dsu.find(v).0;
        if r != rho && !per.contains_key(&r) {
            return false;
        }
    }
    match orient_classes(&classes) {
        Ok(t) => t == canonical(target),
        Err(_) => false,
    }
}

fn canonical(t: (i32, i32)) -> (i32, i32) {
    if t.0 < 0 || (t.0 == 0 && t.1 < 0) {
        (-t.0, -t.1)
    } else {
        t
    }
}

/// Edges on a cycle of the component of `e` in `h` (non-bridges), by Tarjan's lowpoint.
fn cycle_edges(aug: &AugGraph, h: &[bool], e: usize) -> Vec<usize> {
    let nn = aug.n + 1;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nn];
    for (i, &(u, v, _, _)) in aug.edges.iter().enumerate() {
        if h[i] {
            adj[u].push((v, i));
            if u != v {
                adj[v].push((u, i));
            }
        }
    }
    let start = aug.edges[e].0;
    let mut disc = vec![usize::MAX; nn];
    let mut low = vec![0; nn];
    let mut time = 0;
    let mut bridges = std::collections::BTreeSet::new();
    let mut comp_edges = std::collections::BTreeSet::new();
    // iterative DFS: (vertex, parent edge, next adjacency index)
    let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
    disc[start] = time;
    low[start] = time;
    time += 1;
    while !stack.is_empty() {
        let top = stack.len() - 1;
        let (v, pe, idx) = stack[top];
        if idx < adj[v].len() {
            let (w, id) = adj[v][idx];
            stack[top].2 += 1;
            comp_edges.insert(id);
            if id == pe {
                continue;
            }
            if disc[w] == usize::MAX {
                disc[w] = time;
                low[w] = time;
                time += 1;
                stack.push((w, id, 0));
            } else {
                low[v] = low[v].min(disc[w]);
            }
        } else {
            stack.pop();
            if let Some(&(p, _, _)) = stack.last() {
                low[p] = low[p].min(low[v]);
                if low[v] > disc[p] {
                    bridges.insert(pe);
                }
            }
        }
    }
    comp_edges.into_iter().filter(|id| !bridges.contains(id)).collect()
}

/// The rooted vertex of the tree containing `v`, if `v` hangs off `ρ`.
fn tree_root(aug: &AugGraph, present: &[bool], v: usize) -> Option<usize> {
    let n = aug.n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..aug.ne {
        if present[i] {
            let (a, b, _, _) = aug.edges[i];
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([v]);
    seen[v] = true;
    let mut found = None;
    while let Some(x) = q.pop_front() {
        if present[aug.ne + x] {
            if found.is_some() {
                return None;
            }
            found = Some(x);
        }
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                q.push_back(y);
            }
        }
    }
    found
}

/// Disjoint simple cycles of class `(i, j)` completed by loop-erased walks.
fn initial_state(g: &PeriodicGraph, aug: &AugGraph, target: (i32, i32), rng: &mut ChaCha8Rng) -> Result<Vec<bool>> {
    let n = g.num_vertices();
    let mut present = vec![false; aug.edges.len()];
    let mut used = vec![false; n];
    let k = gcd(target.0, target.1);
    if k == 0 && g.is_massless() {
        return Err(Error::Infeasible("homology (0,0) needs a positive mass somewhere".into()));
    }
    if k > 0 {
        let step = (target.0 / k, target.1 / k);
        for _ in 0..k {
            let mut placed = false;
            for s in 0..n {
                if used[s] {
                    continue;
                }
                if let Some(path) = class_cycle(g, s, step, &used) {
                    for &e in &path {
                        present[e] = true;
                        let ed = &g.edges()[e];
                        used[ed.u] = true;
                        used[ed.v] = true;
                    }
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Infeasible(format!("no room for {k} disjoint cycles of class {step:?}")));
            }
        }
    }
    // Wilson completion: walks stop at cycle vertices or at ρ
    let inc: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .map(|v| {
            g.incident(v)
                .into_iter()
                .filter(|&(e, _, _)| g.edges()[e].u != g.edges()[e].v)
                .map(|(e, w, _)| (e, w, g.edges()[e].c))
                .collect()
        })
        .collect();
    let mut in_tree = used.clone();
    let mut next: Vec<usize> = vec![usize::MAX; n];
    let mut nbr: Vec<usize> = vec![usize::MAX; n];
    for start in 0..n {
        let mut v = start;
        let mut guard = 0u64;
        while !in_tree[v] {
            guard += 1;
            if guard > 10_000_000 {
                return Err(Error::Infeasible("completion walk never reached the forest".into()));
            }
            let tot = g.mass()[v] + inc[v].iter().map(|x| x.2).sum::<f64>();
            let mut x = rng.random::<f64>() * tot;
            if x < g.mass()[v] {
                next[v] = aug.ne + v;
                break;
            }
            x -= g.mass()[v];
            let mut choice = inc[v][inc[v].len() - 1];
            for &c in &inc[v] {
                if x < c.2 {
                    choice = c;
                    break;
                }
                x -= c.2;
            }
            next[v] = choice.0;
            nbr[v] = choice.1;
            v = choice.1;
        }
        let mut v = start;
        while !in_tree[v] {
            in_tree[v] = true;
            present[next[v]] = true;
            if next[v] >= aug.ne {
                break;
            }
            v = nbr[v];
        }
    }
    Ok(present)
}

/// Shortest closed walk of class `step` through `s` avoiding `used`, if it is simple.
fn class_cycle(g: &PeriodicGraph, s: usize, step: (i32, i32), used: &[bool]) -> Option<Vec<usize>> {
    let bound = 2 * (step.0.abs().max(step.1.abs()) + 1) * (g.num_vertices() as i32 + 1);
    let mut prev: BTreeMap<(usize, (i32, i32)), (usize, (i32, i32), usize)> = BTreeMap::new();
    let mut q = VecDeque::from([(s, (0, 0))]);
    let goal = (s, step);
    prev.insert((s, (0, 0)), (usize::MAX, (0, 0), usize::MAX));
    while let Some((v, o)) = q.pop_front() {
        if (v, o) == goal {
            break;
        }
        for (e, w, d) in g.incident(v) {
            if used[w] {
                continue;
            }
            let no = (o.0 + d.0, o.1 + d.1);
            // the start may only be re-entered at the goal
            if w == s && no != step {
                continue;
            }
            if no.0.abs() > bound || no.1.abs() > bound || prev.contains_key(&(w, no)) {
                continue;
            }
            prev.insert((w, no), (v, o, e));
            q.push_back((w, no));
        }
    }
    prev.get(&goal)?;
    let mut path = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut cur = goal;
    while cur != (s, (0, 0)) {
        let (pv, po, e) = prev[&cur];
        path.push(e);
        if !seen.insert(cur.0) {
            return None;
        }
        cur = (pv, po);
    }
    Some(path)
}

/// Runs the chain for `steps` steps from its initial state and returns the final configuration.
pub fn mcmc_sample(g: &PeriodicGraph, target: (i32, i32), steps: u64, seed: u64) -> Result<ForestConfig> {
    let mut chain = McmcChain::new(g, target, seed)?;
    chain.run(steps);
    Ok(chain.config())
}

/// SVG drawing of a configuration on a cover whose vertex names carry
/// `@a,b` cell coordinates; cycle components are drawn in red, trees in
/// black, roots as filled dots.
pub fn forest_svg(g: &PeriodicGraph, config: &ForestConfig) -> String {
    let n = g.num_vertices();
    let cells: Vec<(f64, f64, usize)> = g
        .names()
        .iter()
        .map(|name| {
            let (base, cell) = name.split_once('@').unwrap_or((name.as_str(), "0,0"));
            let mut it = cell.split(',').map(|x| x.parse::<f64>().unwrap_or(0.0));
            let a = it.next().unwrap_or(0.0);
            let b = it.next().unwrap_or(0.0);
            (a, b, base.len())
        })
        .collect();
    let base_names: Vec<&str> = g.names().iter().map(|s| s.split('@').next().unwrap_or(s)).collect();
    let mut distinct: Vec<&str> = base_names.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let nb = distinct.len().max(1);
    let scale = 60.0;
    let pos: Vec<(f64, f64)> = (0..n)
        .map(|v| {
            let k = distinct.iter().position(|d| *d == base_names[v]).unwrap_or(0);
            let ang = 2.0 * std::f64::consts::PI * k as f64 / nb as f64;
            let r = if nb == 1 { 0.0 } else { 0.25 };
            ((cells[v].0 + 0.5 + r * ang.cos()) * scale, (cells[v].1 + 0.5 + r * ang.sin()) * scale)
        })
        .collect();
    let w = cells.iter().map(|c| c.0).fold(0.0, f64::max) + 1.0;
    let h = cells.iter().map(|c| c.1).fold(0.0, f64::max) + 1.0;
    let mut color = vec!["black"; g.num_edges()];
    for c in &config.components {
        if let ComponentKind::CycleRootedTree { .. } = c.kind {
            for &e in &c.edges {
                color[e] = "#c0392b";
            }
        }
    }
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n",
        w * scale,
        h * scale,
        w * scale,
        h * scale
    );
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for &e in &config.edges {
        let ed = &g.edges()[e];
        let (x1, y1) = pos[ed.u];
        let (mut x2, mut y2) = pos[ed.v];
        // wrapped edges are drawn towards the periodic image
        x2 += ed.dx as f64 * w * scale;
        y2 += ed.dy as f64 * h * scale;
        s += &format!(
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{}\" stroke-width=\"3\"/>\n",
            color[e]
        );
    }
    for v in 0..n {
        let (x, y) = pos[v];
        let fill = if config.roots.contains(&v) { "#2471a3" } else { "white" };
        s += &format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{fill}\" stroke=\"black\"/>\n");
    }
    s += "</svg>\n";
    s
}
