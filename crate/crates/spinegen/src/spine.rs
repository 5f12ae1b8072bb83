//! Planar spines, their preimages under a branched map, and the projection
//! of the preimage back onto the spine.
//!
//! Each spine edge comes with a dual arc joining the punctures on its two
//! sides and crossing no other edge. A path avoiding the punctures is then
//! homotopic to the edge path read off from its crossings with dual arcs,
//! starting at the spine vertex whose dual cell contains the starting point.

use std::sync::Arc;

use num_complex::Complex64 as C;

use elastica::covers::{CoveringMap, VirtualEndomorphism};
use elastica::curves::{reduce_path, Step};
use elastica::graph::{Dir, End, Graph, HalfEdge, RibbonStructure};
use elastica::harmonic::contract_zero_weight;
use elastica::maps::{uniform_route, GraphPoint, PLGraphMap};
use elastica::{Error, Result};

use crate::lift::{lift_path, BranchedMap};

#[derive(Clone, Debug, PartialEq)]
pub struct SpineEdge {
    pub name: String,
    pub tail: usize,
    pub head: usize,
    /// Interior polyline points from tail to head.
    pub via: Vec<C>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spine {
    pub vertices: Vec<(String, C)>,
    pub edges: Vec<SpineEdge>,
    /// One dual polyline per edge, endpoints at punctures (far points stand for infinity).
    pub duals: Vec<Vec<C>>,
    /// Finite punctures.
    pub punctures: Vec<C>,
}

impl Spine {
    pub fn polyline(&self, e: usize) -> Vec<C> {
        let ed = &self.edges[e];
        let mut p = vec![self.vertices[ed.tail].1];
        p.extend(&ed.via);
        p.push(self.vertices[ed.head].1);
        p
    }

    pub fn graph(&self) -> Result<Graph> {
        Graph::from_indices(
            self.vertices.iter().map(|v| v.0.clone()).collect(),
            self.edges.iter().map(|e| (e.name.clone(), e.tail, e.head)).collect(),
        )
    }

    /// Cyclic order of half-edges from the directions they leave each vertex.
    pub fn ribbon(&self, g: &Graph) -> RibbonStructure {
        let mut rotation = Vec::new();
        for v in 0..g.vertex_count() {
            let mut hs: Vec<(f64, HalfEdge)> = g
                .half_edges_at(v)
                .iter()
                .map(|h| {
                    let p = self.polyline(h.edge);
                    let dir = if h.end == End::Tail { p[1] - p[0] } else { p[p.len() - 2] - p[p.len() - 1] };
                    (dir.arg(), *h)
                })
                .collect();
            hs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            rotation.push(hs.into_iter().map(|x| x.1).collect());
        }
        RibbonStructure { rotation }
    }
}

fn cross(a: C, b: C) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Parameter on `p0 p1` and orientation sign where it crosses `q0 q1`.
fn intersect(p0: C, p1: C, q0: C, q1: C) -> Option<(f64, f64)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let den = cross(r, s);
    if den == 0.0 {
        return None;
    }
    let t = cross(q0 - p0, s) / den;
    let u = cross(q0 - p0, r) / den;
    if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
        Some((t, cross(s, r).signum()))
    } else {
        None
    }
}

/// Dual arcs as segments with the orientation sign that means "forward".
struct Duals {
    segs: Vec<(usize, C, C)>,
    forward: Vec<f64>,
}

impl Duals {
    fn crossings(&self, path: &[C]) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for w in path.windows(2) {
            let mut here: Vec<(f64, usize, f64)> = Vec::new();
            for (e, q0, q1) in &self.segs {
                if let Some((t, s)) = intersect(w[0], w[1], *q0, *q1) {
                    here.push((t, *e, s));
                }
            }
            here.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            out.extend(here.into_iter().map(|(_, e, s)| (e, s)));
        }
        out
    }

    fn steps(&self, path: &[C]) -> Vec<Step> {
        self.crossings(path)
            .into_iter()
            .map(|(e, s)| Step::new(e, if s == self.forward[e] { Dir::Fwd } else { Dir::Rev }))
            .collect()
    }
}

/// The preimage graph with its cover and projection.
#[derive(Clone, Debug)]
pub struct Lifted {
    pub base: Arc<Graph>,
    pub total: Arc<Graph>,
    pub cover: CoveringMap,
    /// Projection of each total edge as a reduced edge path.
    pub steps: Vec<Vec<Step>>,
    /// Spine vertex onto which each total vertex projects.
    pub images: Vec<usize>,
    pub positions: Vec<C>,
    pub ribbon: RibbonStructure,
}

impl Lifted {
    /// The virtual endomorphism for base weights `alpha`, routes at uniform
    /// speed. Preimages of zero-weight edges are then pulled tight onto points.
    pub fn endomorphism(&self, alpha: &[f64]) -> Result<VirtualEndomorphism<f64>> {
        let routes = self.steps.iter().map(|s| uniform_route(s, alpha)).collect();
        let map = PLGraphMap::new(
            self.total.clone(),
            self.base.clone(),
            self.cover.pull_measure(alpha),
            alpha.to_vec(),
            self.images.iter().map(|v| GraphPoint::Vertex(*v)).collect(),
            routes,
        )?;
        let map = if alpha.iter().any(|a| *a == 0.0) { contract_zero_weight(&map)? } else { map };
        VirtualEndomorphism::new(self.cover.clone(), map)
    }
}

/// Spine vertex whose dual cell contains `z`.
fn locate(duals: &Duals, g: &Graph, spine: &Spine, z: C) -> Result<usize> {
    let target = 0;
    let steps = duals.steps(&[z, spine.vertices[target].1]);
    let mut cur = target;
    for s in steps.iter().rev() {
        if g.step_target(s.edge, s.dir) != cur {
            return Err(Error::Degenerate(format!("dual cells inconsistent near {z}")));
        }
        cur = g.step_source(s.edge, s.dir);
    }
    Ok(cur)
}

/// Lifts the spine through `f` and projects the preimage back onto it.
pub fn build(f: &dyn BranchedMap, spine: &Spine) -> Result<Lifted> {
    let g = spine.graph()?;
    let mut segs = Vec::new();
    for (e, d) in spine.duals.iter().enumerate() {
        for w in d.windows(2) {
            segs.push((e, w[0], w[1]));
        }
    }
    let mut duals = Duals { segs, forward: vec![0.0; g.edge_count()] };
    // Each edge must cross its own dual exactly once and no other.
    let mut bad = Vec::new();
    for e in 0..g.edge_count() {
        let c = duals.crossings(&spine.polyline(e));
        if c.len() != 1 || c[0].0 != e {
            bad.push(format!("{} crosses duals {:?}", g.edge_name(e), c.iter().map(|x| x.0).collect::<Vec<_>>()));
        } else {
            duals.forward[e] = c[0].1;
        }
    }
    if !bad.is_empty() {
        return Err(Error::structural("spine and dual arcs disagree", bad));
    }
    for v in 0..g.vertex_count() {
        if locate(&duals, &g, spine, spine.vertices[v].1)? != v {
            return Err(Error::structural("vertex outside its dual cell", [g.vertex_name(v).to_string()]));
        }
    }
    // Vertices of the preimage: both preimages of every spine vertex.
    let mut positions = Vec::new();
    let mut names = Vec::new();
    let mut vertex_map = Vec::new();
    for (v, (name, p)) in spine.vertices.iter().enumerate() {
        for (k, z) in f.preimages(*p).iter().enumerate() {
            positions.push(*z);
            names.push(format!("{name}{k}"));
            vertex_map.push(v);
        }
    }
    let nearest = |z: C, v: usize| -> Result<usize> {
        let (i, d) = (0..positions.len())
            .filter(|&i| vertex_map[i] == v)
            .map(|i| (i, (positions[i] - z).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
            .expect("two preimages");
        if d > 1e-7 {
            return Err(Error::Degenerate(format!("lift ends {d} away from a preimage vertex")));
        }
        Ok(i)
    };
    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    let mut steps = Vec::new();
    let mut paths = Vec::new();
    for (e, ed) in spine.edges.iter().enumerate() {
        let pts = spine.polyline(e);
        for k in 0..2 {
            let start = 2 * ed.tail + k;
            let path = lift_path(f, &pts, positions[start], &spine.punctures)?;
            let end = nearest(*path.last().expect("non-empty"), ed.head)?;
            edges.push((format!("{}{k}", ed.name), start, end));
            edge_map.push((e, Dir::Fwd));
            steps.push(reduce_path(&duals.steps(&path)));
            paths.push(path);
        }
    }
    let total = Graph::from_indices(names, edges)?;
    let mut images = Vec::new();
    for z in &positions {
        images.push(locate(&duals, &g, spine, *z)?);
    }
    // Projected routes must join the projected endpoints.
    for e in 0..total.edge_count() {
        let (a, b) = (images[total.tail(e)], images[total.head(e)]);
        let s = &steps[e];
        let ok = match (s.first(), s.last()) {
            (Some(x), Some(y)) => g.step_source(x.edge, x.dir) == a && g.step_target(y.edge, y.dir) == b,
            _ => a == b,
        };
        if !ok {
            return Err(Error::Discontinuous { edge: total.edge_name(e).to_string(), detail: "projection endpoints disagree".into() });
        }
    }
    let base = Arc::new(g);
    let total = Arc::new(total);
    let ribbon = spine.ribbon(&base);
    let cover = CoveringMap::new(total.clone(), base.clone(), vertex_map, edge_map)?;
    Ok(Lifted { base, total, cover, steps, images, positions, ribbon })
}
