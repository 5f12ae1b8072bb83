//! Multigraphs with half-edges, ribbon structures and per-edge decorations.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One of the two ends of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Tail = 0,
    Head = 1,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::Tail => End::Head,
            End::Head => End::Tail,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> End {
        if i == 0 {
            End::Tail
        } else {
            End::Head
        }
    }

    /// Edge parameter of this end (0 at the tail, 1 at the head).
    pub fn param<T: Scalar>(self) -> T {
        match self {
            End::Tail => T::zero(),
            End::Head => T::one(),
        }
    }
}

/// Traversal direction of an edge: `Fwd` runs tail to head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    Fwd,
    Rev,
}

impl Dir {
    pub fn reverse(self) -> Dir {
        match self {
            Dir::Fwd => Dir::Rev,
            Dir::Rev => Dir::Fwd,
        }
    }

    /// End the traversal leaves from.
    pub fn start(self) -> End {
        match self {
            Dir::Fwd => End::Tail,
            Dir::Rev => End::Head,
        }
    }

    /// End the traversal arrives at.
    pub fn finish(self) -> End {
        self.start().other()
    }

    /// Direction of a traversal leaving through `end`.
    pub fn leaving(end: End) -> Dir {
        match end {
            End::Tail => Dir::Fwd,
            End::Head => Dir::Rev,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Dir::Fwd => "+",
            Dir::Rev => "-",
        }
    }

    pub fn parse(s: &str) -> Option<Dir> {
        match s {
            "+" => Some(Dir::Fwd),
            "-" => Some(Dir::Rev),
            _ => None,
        }
    }

    pub fn compose(self, other: Dir) -> Dir {
        if self == other {
            Dir::Fwd
        } else {
            Dir::Rev
        }
    }
}

/// An end `(e, end)` of an edge, located at the corresponding endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfEdge {
    pub edge: usize,
    pub end: End,
}

impl HalfEdge {
    pub fn new(edge: usize, end: End) -> Self {
        HalfEdge { edge, end }
    }

    pub fn opposite(self) -> HalfEdge {
        HalfEdge { edge: self.edge, end: self.end.other() }
    }

    /// Direction of the step that leaves the vertex through this half-edge.
    pub fn outgoing(self) -> Dir {
        Dir::leaving(self.end)
    }
}

/// A finite multigraph; self-loops and parallel edges are allowed.
///
/// Indices follow construction order; loaders sort ids so iteration is
/// id-lexicographic.
#[derive(Clone, Debug)]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<String>,
    ends: Vec<[usize; 2]>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    incidence: Vec<Vec<HalfEdge>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges && self.ends == other.ends
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph from vertex ids and `(edge id, tail id, head id)` triples.
    pub fn new(vertices: Vec<String>, edges: Vec<(String, String, String)>) -> Result<Graph> {
        let mut vertex_index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i).is_some() {
                return Err(Error::structural("duplicate vertex id", [v.clone()]));
            }
        }
        let mut missing = Vec::new();
        let mut triples = Vec::with_capacity(edges.len());
        for (id, a, b) in edges {
            match (vertex_index.get(&a), vertex_index.get(&b)) {
                (Some(&ia), Some(&ib)) => triples.push((id, ia, ib)),
                _ => {
                    for x in [&a, &b] {
                        if !vertex_index.contains_key(x) {
                            missing.push(format!("edge {id} -> vertex {x}"));
                        }
                    }
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::structural("edge references missing vertex", missing));
        }
        Graph::from_indices(vertices, triples)
    }

    /// Builds a graph from vertex ids and edges given by endpoint indices.
    pub fn from_indices(vertices: Vec<String>, edges: Vec<(String, usize, usize)>) -> Result<Graph> {
        let vertex_index: HashMap<String, usize> =
            vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        if vertex_index.len() != vertices.len() {
            return Err(Error::structural("duplicate vertex id", duplicates(&vertices)));
        }
        let mut names = Vec::with_capacity(edges.len());
        let mut ends = Vec::with_capacity(edges.len());
        let mut edge_index = HashMap::new();
        for (i, (id, a, b)) in edges.into_iter().enumerate() {
            if a >= vertices.len() || b >= vertices.len() {
                return Err(Error::structural("edge endpoint out of range", [id]));
            }
            if edge_index.insert(id.clone(), i).is_some() {
                return Err(Error::structural("duplicate edge id", [id]));
            }
            names.push(id);
            ends.push([a, b]);
        }
        let mut incidence = vec![Vec::new(); vertices.len()];
        for (e, [a, b]) in ends.iter().enumerate() {
            incidence[*a].push(HalfEdge::new(e, End::Tail));
            incidence[*b].push(HalfEdge::new(e, End::Head));
        }
        Ok(Graph { vertices, edges: names, ends, vertex_index, edge_index, incidence })
    }

    /// Same graph with vertices and edges re-indexed in id-lexicographic order.
    /// Returns the graph and the old-to-new vertex and edge index maps.
    pub fn sorted(&self) -> (Graph, Vec<usize>, Vec<usize>) {
        let mut vo: Vec<usize> = (0..self.vertices.len()).collect();
        vo.sort_by(|&a, &b| self.vertices[a].cmp(&self.vertices[b]));
        let mut eo: Vec<usize> = (0..self.edges.len()).collect();
        eo.sort_by(|&a, &b| self.edges[a].cmp(&self.edges[b]));
        let mut vmap = vec![0; vo.len()];
        for (new, &old) in vo.iter().enumerate() {
            vmap[old] = new;
        }
        let mut emap = vec![0; eo.len()];
        for (new, &old) in eo.iter().enumerate() {
            emap[old] = new;
        }
        let vertices = vo.iter().map(|&i| self.vertices[i].clone()).collect();
        let edges = eo
            .iter()
            .map(|&e| (self.edges[e].clone(), vmap[self.ends[e][0]], vmap[self.ends[e][1]]))
            .collect();
        (Graph::from_indices(vertices, edges).expect("re-indexing preserves validity"), vmap, emap)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn edge_name(&self, e: usize) -> &str {
        &self.edges[e]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn edge_names(&self) -> &[String] {
        &self.edges
    }

    pub fn vertex_id(&self, name: &str) -> Option<usize> {
        self.vertex_index.get(name).copied()
    }

    pub fn edge_id(&self, name: &str) -> Option<usize> {
        self.edge_index.get(name).copied()
    }

    pub fn ends(&self, e: usize) -> [usize; 2] {
        self.ends[e]
    }

    pub fn tail(&self, e: usize) -> usize {
        self.ends[e][0]
    }

    pub fn head(&self, e: usize) -> usize {
        self.ends[e][1]
    }

    /// Vertex at which a half-edge sits.
    pub fn vertex_of(&self, h: HalfEdge) -> usize {
        self.ends[h.edge][h.end.index()]
    }

    /// Vertex a step along `e` in direction `d` starts from.
    pub fn step_source(&self, e: usize, d: Dir) -> usize {
        self.ends[e][d.start().index()]
    }

    /// Vertex a step along `e` in direction `d` arrives at.
    pub fn step_target(&self, e: usize, d: Dir) -> usize {
        self.ends[e][d.finish().index()]
    }

    /// Half-edges at `v`, ordered by (edge index, end).
    pub fn half_edges_at(&self, v: usize) -> &[HalfEdge] {
        &self.incidence[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    pub fn is_loop(&self, e: usize) -> bool {
        self.ends[e][0] == self.ends[e][1]
    }

    /// Connected components as sorted vertex index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.vertex_count()];
        let mut out = Vec::new();
        for s in 0..self.vertex_count() {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for h in &self.incidence[v] {
                    let w = self.vertex_of(h.opposite());
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() > 0 && self.components().len() == 1
    }
}

fn duplicates(names: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    names.iter().filter(|n| !seen.insert(n.as_str())).cloned().collect()
}

/// Outcome of [`validate_graph`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub valid: bool,
    pub connected: bool,
    pub component_count: usize,
    /// Degrees in vertex index order.
    pub degrees: Vec<usize>,
    pub problems: Vec<String>,
}

/// Connectivity and degree report. Dangling references are rejected
/// earlier, when the graph is built.
pub fn validate_graph(g: &Graph) -> ValidationReport {
    let comps = g.components();
    let mut problems = Vec::new();
    if g.vertex_count() == 0 {
        problems.push("graph has no vertices".to_string());
    }
    if comps.len() > 1 {
        let listing: Vec<String> = comps
            .iter()
            .map(|c| c.iter().map(|&v| g.vertex_name(v).to_string()).collect::<Vec<_>>().join(","))
            .collect();
        problems.push(format!("disconnected: components {{{}}}", listing.join("} {")));
    }
    let degrees = (0..g.vertex_count()).map(|v| g.degree(v)).collect();
    ValidationReport {
        valid: problems.is_empty(),
        connected: comps.len() == 1,
        component_count: comps.len(),
        degrees,
        problems,
    }
}

/// `|V| - |E|`.
pub fn euler_characteristic(g: &Graph) -> i64 {
    g.vertex_count() as i64 - g.edge_count() as i64
}

/// Cyclic order of half-edges at each vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RibbonStructure {
    pub rotation: Vec<Vec<HalfEdge>>,
}

impl RibbonStructure {
    /// Checks that each vertex lists exactly its incident half-edges.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.rotation.len() != g.vertex_count() {
            return Err(Error::structural(
                "ribbon structure vertex count mismatch",
                [format!("{} != {}", self.rotation.len(), g.vertex_count())],
            ));
        }
        let mut bad = Vec::new();
        for v in 0..g.vertex_count() {
            let mut listed = self.rotation[v].clone();
            listed.sort();
            let mut expected = g.half_edges_at(v).to_vec();
            expected.sort();
            if listed != expected {
                bad.push(g.vertex_name(v).to_string());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::structural("malformed cyclic order", bad))
        }
    }

    /// Successor of `h` in the cyclic order at its vertex.
    fn next(&self, g: &Graph, pos: &HashMap<HalfEdge, usize>, h: HalfEdge) -> HalfEdge {
        let v = g.vertex_of(h);
        let order = &self.rotation[v];
        order[(pos[&h] + 1) % order.len()]
    }
}

/// Boundary cycles of the thickened surface, each a sequence of half-edges.
///
/// A face is traced by crossing an edge to its other end and then turning
/// to the next half-edge in the cyclic order there.
pub fn ribbon_faces(g: &Graph, r: &RibbonStructure) -> Result<Vec<Vec<HalfEdge>>> {
    r.validate(g)?;
    let mut pos = HashMap::new();
    for order in &r.rotation {
        for (i, h) in order.iter().enumerate() {
            pos.insert(*h, i);
        }
    }
    let mut all: Vec<HalfEdge> = pos.keys().copied().collect();
    all.sort();
    let mut seen = HashSet::new();
    let mut faces = Vec::new();
    for start in all {
        if seen.contains(&start) {
            continue;
        }
        let mut face = Vec::new();
        let mut h = start;
        loop {
            seen.insert(h);
            face.push(h);
            h = r.next(g, &pos, h.opposite());
            if h == start {
                break;
            }
        }
        faces.push(face);
    }
    Ok(faces)
}

/// Genus of the thickened surface of a connected ribbon graph.
pub fn ribbon_genus(g: &Graph, r: &RibbonStructure) -> Result<i64> {
    let faces = ribbon_faces(g, r)?.len() as i64;
    let two_minus_2g = euler_characteristic(g) + faces;
    Ok((2 - two_minus_2g) / 2)
}

/// Outcome of [`spine_check`] with the reason for a negative answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpineReport {
    pub is_spine: bool,
    pub genus: i64,
    pub faces: usize,
    pub reason: Option<String>,
}

/// Whether the ribbon graph can be a spine of the sphere minus
/// `marked_count` points: genus zero with one face per marked point.
/// Valence-1 vertices are refused.
pub fn spine_check(g: &Graph, r: &RibbonStructure, marked_count: usize) -> Result<SpineReport> {
    let faces = ribbon_faces(g, r)?.len();
    let genus = ribbon_genus(g, r)?;
    let leaves: Vec<&str> = (0..g.vertex_count()).filter(|&v| g.degree(v) == 1).map(|v| g.vertex_name(v)).collect();
    let reason = if !g.is_connected() {
        Some("graph is disconnected".to_string())
    } else if !leaves.is_empty() {
        Some(format!("valence-1 vertices: {}", leaves.join(",")))
    } else if genus != 0 {
        Some(format!("genus {genus}"))
    } else if faces != marked_count {
        Some(format!("{faces} faces for {marked_count} marked points"))
    } else {
        None
    };
    Ok(SpineReport { is_spine: reason.is_none(), genus, faces, reason })
}

/// Graph with an elastic weight per edge; zero weight marks a contracted edge.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticGraph<T = f64> {
    pub graph: Arc<Graph>,
    pub alpha: Vec<T>,
}

impl<T: Scalar> ElasticGraph<T> {
    pub fn new(graph: Arc<Graph>, alpha: Vec<T>) -> Result<Self> {
        check_measure(&graph, &alpha, "alpha")?;
        Ok(ElasticGraph { graph, alpha })
    }

    pub fn uniform(graph: Arc<Graph>) -> Self {
        let alpha = vec![T::one(); graph.edge_count()];
        ElasticGraph { graph, alpha }
    }

    pub fn is_contracted(&self, e: usize) -> bool {
        self.alpha[e] == T::zero()
    }

    pub fn total(&self) -> T {
        self.alpha.iter().cloned().fold(T::zero(), |a, b| a + b)
    }
}

/// Graph with a (pseudo-)length per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthGraph<T = f64> {
    pub graph: Arc<Graph>,
    pub ell: Vec<T>,
}

impl<T: Scalar> LengthGraph<T> {
    pub fn new(graph: Arc<Graph>, ell: Vec<T>) -> Result<Self> {
        check_measure(&graph, &ell, "ell")?;
        Ok(LengthGraph { graph, ell })
    }
}

/// Graph with a width per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct WidthGraph<T = f64> {
    pub graph: Arc<Graph>,
    pub w: Vec<T>,
}

impl<T: Scalar> WidthGraph<T> {
    pub fn new(graph: Arc<Graph>, w: Vec<T>) -> Result<Self> {
        check_measure(&graph, &w, "width")?;
        Ok(WidthGraph { graph, w })
    }
}

/// Lengths, widths and aspect ratios with `ell = alpha * w`.
#[derive(Clone, Debug, PartialEq)]
pub struct StripGraph<T = f64> {
    pub graph: Arc<Graph>,
    pub ell: Vec<T>,
    pub w: Vec<T>,
    pub alpha: Vec<T>,
}

impl<T: Scalar> StripGraph<T> {
    /// Builds from elastic weights and widths; lengths are derived.
    pub fn from_alpha_width(graph: Arc<Graph>, alpha: Vec<T>, w: Vec<T>) -> Result<Self> {
        check_measure(&graph, &alpha, "alpha")?;
        check_measure(&graph, &w, "width")?;
        let ell = alpha.iter().zip(&w).map(|(a, b)| a.clone() * b.clone()).collect();
        Ok(StripGraph { graph, ell, w, alpha })
    }

    /// Builds from all three; rejects `ell != alpha * w`.
    pub fn new(graph: Arc<Graph>, ell: Vec<T>, w: Vec<T>, alpha: Vec<T>) -> Result<Self> {
        check_measure(&graph, &alpha, "alpha")?;
        check_measure(&graph, &w, "width")?;
        check_measure(&graph, &ell, "ell")?;
        let bad: Vec<String> = (0..graph.edge_count())
            .filter(|&e| !ell[e].near(&(alpha[e].clone() * w[e].clone())))
            .map(|e| graph.edge_name(e).to_string())
            .collect();
        if !bad.is_empty() {
            return Err(Error::structural("strip edges with ell != alpha*w", bad));
        }
        Ok(StripGraph { graph, ell, w, alpha })
    }

    pub fn width_graph(&self) -> WidthGraph<T> {
        WidthGraph { graph: self.graph.clone(), w: self.w.clone() }
    }
}

fn check_measure<T: Scalar>(g: &Graph, values: &[T], what: &str) -> Result<()> {
    if values.len() != g.edge_count() {
        return Err(Error::mismatch(format!(
            "{what} has {} entries for {} edges",
            values.len(),
            g.edge_count()
        )));
    }
    let neg: Vec<String> =
        (0..values.len()).filter(|&e| values[e] < T::zero()).map(|e| g.edge_name(e).to_string()).collect();
    if !neg.is_empty() {
        return Err(Error::structural(format!("negative {what}"), neg));
    }
    Ok(())
}

/// Outcome of [`validate_widths`].
#[derive(Clone, Debug, PartialEq)]
pub struct WidthReport {
    pub valid: bool,
    /// `(vertex id, edge id)` pairs where one end outweighs the others.
    pub violations: Vec<(String, String)>,
}

/// Checks the vertex triangle inequalities `w(e_j) <= sum_{i != j} w(e_i)`,
/// counting each end of a loop separately.
pub fn validate_widths<T: Scalar>(wg: &WidthGraph<T>) -> WidthReport {
    width_violations(&wg.graph, &wg.w, T::zero())
}

/// Triangle-inequality check allowing `slack` times the vertex total.
pub fn width_violations<T: Scalar>(g: &Graph, w: &[T], slack: T) -> WidthReport {
    let mut violations = Vec::new();
    for v in 0..g.vertex_count() {
        let total = g.half_edges_at(v).iter().fold(T::zero(), |acc, h| acc + w[h.edge].clone());
        let mut flagged = HashSet::new();
        for h in g.half_edges_at(v) {
            let own = w[h.edge].clone();
            let rest = total.clone() - own.clone();
            if own > rest.clone() + slack.clone() * total.clone() && flagged.insert(h.edge) {
                violations.push((g.vertex_name(v).to_string(), g.edge_name(h.edge).to_string()));
            }
        }
    }
    WidthReport { valid: violations.is_empty(), violations }
}

/// `sum ell(e) w(e)`.
pub fn strip_area<T: Scalar>(s: &StripGraph<T>) -> T {
    s.ell.iter().zip(&s.w).fold(T::zero(), |acc, (l, w)| acc + l.clone() * w.clone())
}

/// The two alternative area expressions `sum ell^2/alpha` and
/// `sum alpha w^2`, over edges of positive weight.
pub fn strip_area_alternatives<T: Scalar>(s: &StripGraph<T>) -> (T, T) {
    let mut a = T::zero();
    let mut b = T::zero();
    for e in 0..s.ell.len() {
        if s.alpha[e].is_positive() {
            a = a + s.ell[e].clone() * s.ell[e].clone() / s.alpha[e].clone();
            b = b + s.alpha[e].clone() * s.w[e].clone() * s.w[e].clone();
        }
    }
    (a, b)
}

/// Harmonic sum: `1/a3 = 1/a1 + 1/a2`.
pub fn harmonic_add<T: Scalar>(a1: T, a2: T) -> Result<T> {
    if !a1.is_positive() || !a2.is_positive() {
        return Err(Error::invalid("harmonic_add needs positive arguments"));
    }
    Ok(a1.clone() * a2.clone() / (a1 + a2))
}

/// Record of a single-edge subdivision.
#[derive(Clone, Debug, PartialEq)]
pub struct Subdivision<T = f64> {
    pub graph: Arc<Graph>,
    /// Old edge index to the new edge indices covering it, in order from tail to head.
    pub edge_map: Vec<Vec<usize>>,
    pub split_edge: usize,
    pub new_vertex: usize,
    pub t: T,
}

impl<T: Scalar> Subdivision<T> {
    /// Splits a per-edge measure (weights or lengths) proportionally.
    pub fn split_measure(&self, values: &[T]) -> Vec<T> {
        let mut out = values.to_vec();
        let v = values[self.split_edge].clone();
        out[self.split_edge] = self.t.clone() * v.clone();
        out.push((T::one() - self.t.clone()) * v);
        out
    }

    /// Copies a per-edge intensive quantity (widths) onto both halves.
    pub fn copy_values(&self, values: &[T]) -> Vec<T> {
        let mut out = values.to_vec();
        out.push(values[self.split_edge].clone());
        out
    }
}

/// Splits edge `e` at parameter `t`: the first half keeps the index of `e`,
/// the second half is appended as a new edge.
pub fn subdivide<T: Scalar>(g: &Graph, e: usize, t: T) -> Result<Subdivision<T>> {
    if e >= g.edge_count() {
        return Err(Error::invalid(format!("no edge with index {e}")));
    }
    if !(t > T::zero() && t < T::one()) {
        return Err(Error::invalid("subdivision parameter must lie in (0,1)"));
    }
    let base = g.edge_name(e);
    let mut k = 0;
    let fresh = |k: usize, suffix: &str| format!("{base}~{suffix}{k}");
    while g.vertex_id(&fresh(k, "v")).is_some() || g.edge_id(&fresh(k, "b")).is_some() {
        k += 1;
    }
    let mut vertices = g.vertex_names().to_vec();
    let nv = vertices.len();
    vertices.push(fresh(k, "v"));
    let mut edges: Vec<(String, usize, usize)> =
        (0..g.edge_count()).map(|i| (g.edge_name(i).to_string(), g.tail(i), g.head(i))).collect();
    let head = g.head(e);
    edges[e].2 = nv;
    edges.push((fresh(k, "b"), nv, head));
    let graph = Arc::new(Graph::from_indices(vertices, edges)?);
    let mut edge_map: Vec<Vec<usize>> = (0..g.edge_count()).map(|i| vec![i]).collect();
    edge_map[e].push(g.edge_count());
    Ok(Subdivision { graph, edge_map, split_edge: e, new_vertex: nv, t })
}

/// Per-edge lookup by id, used by loaders.
pub fn measure_from_map<T: Scalar>(g: &Graph, m: &BTreeMap<String, T>, default: Option<T>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(g.edge_count());
    let mut missing = Vec::new();
    for e in 0..g.edge_count() {
        match m.get(g.edge_name(e)) {
            Some(v) => out.push(v.clone()),
            None => match &default {
                Some(d) => out.push(d.clone()),
                None => {
                    missing.push(g.edge_name(e).to_string());
                    out.push(T::zero());
                }
            },
        }
    }
    let unknown: Vec<String> = m.keys().filter(|k| g.edge_id(k).is_none()).cloned().collect();
    if !unknown.is_empty() {
        return Err(Error::structural("decoration for unknown edge", unknown));
    }
    if !missing.is_empty() {
        return Err(Error::structural("decoration missing for edges", missing));
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use num_rational::BigRational;

    pub fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    pub fn theta() -> Graph {
        Graph::from_indices(
            vec!["u".into(), "w".into()],
            vec![("a".into(), 0, 1), ("b".into(), 0, 1), ("c".into(), 0, 1)],
        )
        .unwrap()
    }

    pub fn rose(k: usize) -> Graph {
        Graph::from_indices(vec!["o".into()], (0..k).map(|i| (format!("p{i}"), 0, 0)).collect()).unwrap()
    }

    fn he(e: usize, end: usize) -> HalfEdge {
        HalfEdge::new(e, End::from_index(end))
    }

    #[test]
    fn validates_theta() {
        let r = validate_graph(&theta());
        assert!(r.valid && r.connected);
        assert_eq!(r.degrees, vec![3, 3]);
    }

    #[test]
    fn disjoint_loops_are_disconnected() {
        let g = Graph::from_indices(vec!["x".into(), "y".into()], vec![("a".into(), 0, 0), ("b".into(), 1, 1)])
            .unwrap();
        let r = validate_graph(&g);
        assert!(!r.valid && !r.connected);
        assert_eq!(r.component_count, 2);
    }

    #[test]
    fn missing_vertex_is_structural() {
        let err = Graph::new(vec!["x".into()], vec![("a".into(), "x".into(), "nope".into())]).unwrap_err();
        match err {
            Error::Structural { ids, .. } => assert!(ids[0].contains("nope")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn euler_characteristics() {
        assert_eq!(euler_characteristic(&theta()), -1);
        assert_eq!(euler_characteristic(&rose(1)), 0);
        let tree = Graph::from_indices(names("v", 5), (1..5).map(|i| (format!("e{i}"), 0, i)).collect()).unwrap();
        assert_eq!(euler_characteristic(&tree), 1);
    }

    #[test]
    fn loop_faces() {
        let g = rose(1);
        let r = RibbonStructure { rotation: vec![vec![he(0, 0), he(0, 1)]] };
        assert_eq!(ribbon_faces(&g, &r).unwrap().len(), 2);
        assert_eq!(ribbon_genus(&g, &r).unwrap(), 0);
    }

    pub fn planar_theta_ribbon() -> RibbonStructure {
        RibbonStructure { rotation: vec![vec![he(0, 0), he(1, 0), he(2, 0)], vec![he(0, 1), he(2, 1), he(1, 1)]] }
    }

    #[test]
    fn theta_faces() {
        let g = theta();
        let planar = planar_theta_ribbon();
        assert_eq!(ribbon_faces(&g, &planar).unwrap().len(), 3);
        assert_eq!(ribbon_genus(&g, &planar).unwrap(), 0);
        let twisted =
            RibbonStructure { rotation: vec![vec![he(0, 0), he(1, 0), he(2, 0)], vec![he(0, 1), he(1, 1), he(2, 1)]] };
        assert_eq!(ribbon_faces(&g, &twisted).unwrap().len(), 1);
        assert_eq!(ribbon_genus(&g, &twisted).unwrap(), 1);
    }

    #[test]
    fn malformed_rotation_rejected() {
        let g = theta();
        let r = RibbonStructure { rotation: vec![vec![he(0, 0), he(1, 0)], vec![he(0, 1), he(2, 1), he(1, 1)]] };
        assert!(ribbon_faces(&g, &r).is_err());
    }

    #[test]
    fn spine_checks() {
        let g = theta();
        assert!(spine_check(&g, &planar_theta_ribbon(), 3).unwrap().is_spine);
        assert!(!spine_check(&g, &planar_theta_ribbon(), 2).unwrap().is_spine);
        let twisted =
            RibbonStructure { rotation: vec![vec![he(0, 0), he(1, 0), he(2, 0)], vec![he(0, 1), he(1, 1), he(2, 1)]] };
        for k in 0..5 {
            assert!(!spine_check(&g, &twisted, k).unwrap().is_spine);
        }
        let path = Graph::from_indices(names("v", 2), vec![("e".into(), 0, 1)]).unwrap();
        let r = RibbonStructure { rotation: vec![vec![he(0, 0)], vec![he(0, 1)]] };
        let rep = spine_check(&path, &r, 1).unwrap();
        assert!(!rep.is_spine);
        assert!(rep.reason.unwrap().contains("valence-1"));
    }

    #[test]
    fn width_triangle_inequality() {
        let g = Arc::new(theta());
        let ok = WidthGraph::new(g.clone(), vec![1.0, 1.0, 2.0]).unwrap();
        assert!(validate_widths(&ok).valid);
        let bad = WidthGraph::new(g.clone(), vec![1.0, 1.0, 3.0]).unwrap();
        let rep = validate_widths(&bad);
        assert!(!rep.valid);
        assert_eq!(rep.violations.len(), 2);
        // A leaf edge must have width zero.
        let star = Arc::new(Graph::from_indices(names("v", 3), vec![("a".into(), 0, 1), ("b".into(), 0, 2)]).unwrap());
        assert!(!validate_widths(&WidthGraph::new(star.clone(), vec![1.0, 1.0]).unwrap()).valid);
        let zero = WidthGraph::new(star, vec![0.0; 2]).unwrap();
        assert!(validate_widths(&zero).valid);
    }

    #[test]
    fn loop_width_counts_both_ends() {
        let g = Arc::new(rose(1));
        assert!(validate_widths(&WidthGraph::new(g, vec![5.0]).unwrap()).valid);
    }

    #[test]
    fn strip_areas() {
        let q = |p, r| BigRational::from_ratio(p, r);
        let g = Arc::new(rose(1));
        let s = StripGraph::new(g, vec![q(2, 1)], vec![q(3, 1)], vec![q(2, 3)]).unwrap();
        assert_eq!(strip_area(&s), q(6, 1));
        let (a, b) = strip_area_alternatives(&s);
        assert_eq!(a, q(6, 1));
        assert_eq!(b, q(6, 1));
        let g2 = Arc::new(rose(2));
        let s2 = StripGraph::new(g2.clone(), vec![q(1, 1), q(2, 1)], vec![q(1, 1), q(2, 1)], vec![q(1, 1), q(1, 1)])
            .unwrap();
        assert_eq!(strip_area(&s2), q(5, 1));
        let z = StripGraph::from_alpha_width(g2, vec![q(1, 1), q(3, 1)], vec![q(0, 1), q(0, 1)]).unwrap();
        assert_eq!(strip_area(&z), q(0, 1));
        assert!(StripGraph::new(Arc::new(rose(1)), vec![q(1, 1)], vec![q(1, 1)], vec![q(2, 1)]).is_err());
    }

    #[test]
    fn harmonic_addition() {
        assert_eq!(harmonic_add(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(harmonic_add(BigRational::from_ratio(3, 1), BigRational::from_ratio(6, 1)).unwrap(), BigRational::from_ratio(2, 1));
        for x in [0.1, 1.0, 7.5] {
            assert!((harmonic_add(x, x).unwrap() - x / 2.0).abs() < 1e-15);
        }
        assert!(harmonic_add(0.0, 1.0).is_err());
        assert!(harmonic_add(-1.0, 1.0).is_err());
    }

    #[test]
    fn subdivision_measures() {
        let g = rose(1);
        let s = subdivide(&g, 0, 0.5).unwrap();
        assert_eq!(s.split_measure(&[1.0]), vec![0.5, 0.5]);
        assert_eq!(s.graph.edge_count(), 2);
        assert_eq!(s.graph.vertex_count(), 2);
        assert_eq!(s.edge_map[0], vec![0, 1]);
        let s = subdivide(&g, 0, 1.0 / 3.0).unwrap();
        let l = s.split_measure(&[3.0]);
        assert!((l[0] - 1.0).abs() < 1e-15 && (l[1] - 2.0).abs() < 1e-15);
        assert!(subdivide(&g, 0, 1.0).is_err());
        assert!(subdivide(&g, 0, 0.0).is_err());
    }

    #[test]
    fn sorted_reindexes_lexicographically() {
        let g = Graph::from_indices(vec!["z".into(), "a".into()], vec![("y".into(), 0, 1), ("b".into(), 1, 1)]).unwrap();
        let (s, vmap, emap) = g.sorted();
        assert_eq!(s.vertex_names(), &["a".to_string(), "z".to_string()]);
        assert_eq!(s.edge_names(), &["b".to_string(), "y".to_string()]);
        assert_eq!(vmap, vec![1, 0]);
        assert_eq!(emap, vec![1, 0]);
        assert_eq!(s.ends(1), [1, 0]);
    }
}
