//! Dirichlet energy minimisation for maps from an elastic graph to a
//! length graph, within a fixed homotopy class.
//!
//! Vertex images are moved one at a time toward the weighted average of
//! their neighbours in the universal cover of the target ("repeated
//! averaging"). Routes are kept taut after every move, so the homotopy class
//! is carried by the routes themselves. Once the combinatorics settles a
//! quadratic solve finds the exact minimiser for that combinatorics.
//!
//! Domain edges with `alpha = 0` carry no energy and impose no constraint;
//! codomain edges with `ell = 0` cost nothing to cross.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{Dir, End, Graph, HalfEdge, LengthGraph};
use crate::maps::{fill_profile, GraphPoint, PLGraphMap, Segment};

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicOptions {
    /// Relative energy decrease per sweep below which averaging stops.
    pub tol: f64,
    pub max_iters: usize,
    /// Domain vertices whose images stay where the initial map puts them.
    pub fixed: Vec<usize>,
    /// Run the quadratic polish after averaging.
    pub polish: bool,
}

impl Default for HarmonicOptions {
    fn default() -> Self {
        HarmonicOptions { tol: 1e-10, max_iters: 1_000_000, fixed: Vec::new(), polish: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicResult {
    pub map: PLGraphMap<f64>,
    pub energy: f64,
    /// `|f'(e)|` per domain edge (zero on contracted edges).
    pub tensions: Vec<f64>,
    /// Fill per codomain edge.
    pub fill_per_codomain_edge: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Combinatorial moves the quadratic step had to make (clamps to vertices).
    pub violations: Vec<String>,
}

/// Piece of a route inside the solver: a straight run along one edge.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Move {
    edge: usize,
    from: f64,
    to: f64,
}

impl Move {
    fn rev(self) -> Move {
        Move { edge: self.edge, from: self.to, to: self.from }
    }

    fn dir(self) -> Dir {
        if self.to >= self.from {
            Dir::Fwd
        } else {
            Dir::Rev
        }
    }
}

fn snap(t: f64) -> f64 {
    if t.abs() < 1e-13 {
        0.0
    } else if (1.0 - t).abs() < 1e-13 {
        1.0
    } else {
        t
    }
}

/// Free reduction of a path of moves: stalls vanish, consecutive runs on
/// the same edge through the same point merge.
fn taut(moves: impl IntoIterator<Item = Move>) -> Vec<Move> {
    let mut out: Vec<Move> = Vec::new();
    for m in moves {
        let m = Move { edge: m.edge, from: snap(m.from), to: snap(m.to) };
        if m.from == m.to {
            continue;
        }
        match out.last_mut() {
            Some(top) if top.edge == m.edge && top.to == m.from => {
                top.to = m.to;
                if top.from == top.to {
                    out.pop();
                }
            }
            _ => out.push(m),
        }
    }
    out
}

fn reversed(moves: &[Move]) -> Vec<Move> {
    moves.iter().rev().map(|m| m.rev()).collect()
}

/// Direction leaving a point: zero-length traversals followed by the first
/// run along an edge of positive length.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Germ {
    prefix: Vec<(usize, Dir)>,
    edge: usize,
    dir: Dir,
}

struct GermInfo {
    germ: Germ,
    /// Index of the first positive-length move in the route.
    index: usize,
    /// Metric length of that move.
    first_len: f64,
}

fn point_of(g: &Graph, e: usize, t: f64) -> GraphPoint<f64> {
    if t == 0.0 {
        GraphPoint::Vertex(g.tail(e))
    } else if t == 1.0 {
        GraphPoint::Vertex(g.head(e))
    } else {
        GraphPoint::Edge(e, t)
    }
}

struct Solver<'a> {
    dom: &'a Graph,
    cod: &'a Graph,
    alpha: &'a [f64],
    ell: &'a [f64],
    pos: Vec<GraphPoint<f64>>,
    routes: Vec<Vec<Move>>,
    /// Cluster of each vertex: vertices joined by zero-weight edges move as one.
    group: Vec<usize>,
    groups: Vec<Vec<usize>>,
    /// Clusters that may not move: fixed, or holding a zero-weight edge
    /// wrapped around a zero-length loop.
    stuck: Vec<bool>,
}

/// Vertices joined by zero-weight edges, with a spanning forest of those edges
/// as `(edge, parent)` for every non-root vertex.
fn clusters(dom: &Graph, alpha: &[f64]) -> (Vec<usize>, Vec<Vec<usize>>, Vec<Option<(usize, usize)>>) {
    let n = dom.vertex_count();
    let mut group = vec![usize::MAX; n];
    let mut groups = Vec::new();
    let mut parent = vec![None; n];
    for root in 0..n {
        if group[root] != usize::MAX {
            continue;
        }
        let id = groups.len();
        group[root] = id;
        let mut members = vec![root];
        let mut k = 0;
        while k < members.len() {
            let v = members[k];
            k += 1;
            for h in dom.half_edges_at(v) {
                if alpha[h.edge] > 0.0 {
                    continue;
                }
                let w = dom.vertex_of(h.opposite());
                if group[w] == usize::MAX {
                    group[w] = id;
                    parent[w] = Some((h.edge, v));
                    members.push(w);
                }
            }
        }
        groups.push(members);
    }
    (group, groups, parent)
}

/// Energy term seen from a vertex: a route leaving it (or a loop at it).
enum Term {
    Point { w: f64, len: f64, germ: Option<GermInfo> },
    Loop { w: f64, len: f64, start: Option<GermInfo>, end: Option<GermInfo>, delta: f64 },
}

impl<'a> Solver<'a> {
    fn new(m: &'a PLGraphMap<f64>, fixed: &[usize]) -> Result<Self> {
        let mut fx = vec![false; m.domain.vertex_count()];
        for &v in fixed {
            if v >= fx.len() {
                return Err(Error::invalid(format!("fixed vertex index {v} out of range")));
            }
            fx[v] = true;
        }
        let routes = m
            .routes
            .iter()
            .map(|r| taut(r.iter().map(|s| Move { edge: s.edge, from: s.from, to: s.to })))
            .collect();
        let (group, groups, parent) = clusters(&m.domain, &m.dom_measure);
        let mut s = Solver {
            dom: &m.domain,
            cod: &m.codomain,
            alpha: &m.dom_measure,
            ell: &m.cod_measure,
            pos: m.vertex_images.clone(),
            routes,
            stuck: vec![false; groups.len()],
            group,
            groups,
        };
        // Pull each cluster onto one point along its spanning forest.
        for g in 0..s.groups.len() {
            for v in s.groups[g].clone() {
                if let Some((e, _)) = parent[v] {
                    let end = if s.dom.head(e) == v { End::Head } else { End::Tail };
                    let r = s.route_from(HalfEdge { edge: e, end });
                    s.apply_one(v, &r);
                }
            }
        }
        for e in 0..s.dom.edge_count() {
            if s.alpha[e] > 0.0 {
                continue;
            }
            if s.len(&s.routes[e]) > 0.0 {
                return Err(Error::Degenerate(format!(
                    "zero-weight edge {} cannot be contracted in this homotopy class",
                    s.dom.edge_name(e)
                )));
            }
            if !s.routes[e].is_empty() {
                s.stuck[s.group[s.dom.tail(e)]] = true;
            }
        }
        for (v, f) in fx.iter().enumerate() {
            if *f {
                s.stuck[s.group[v]] = true;
            }
        }
        // Interior points of zero-length edges sit at the tail instead.
        for v in 0..s.pos.len() {
            if let GraphPoint::Edge(e, t) = s.pos[v] {
                if s.ell[e] <= 0.0 {
                    s.apply(v, &[Move { edge: e, from: t, to: 0.0 }]);
                }
            }
        }
        Ok(s)
    }

    fn move_len(&self, m: &Move) -> f64 {
        (m.to - m.from).abs() * self.ell[m.edge]
    }

    fn len(&self, r: &[Move]) -> f64 {
        r.iter().map(|m| self.move_len(m)).sum()
    }

    fn energy(&self) -> f64 {
        (0..self.dom.edge_count())
            .filter(|&e| self.alpha[e] > 0.0)
            .map(|e| {
                let l = self.len(&self.routes[e]);
                l * l / self.alpha[e]
            })
            .sum()
    }

    fn route_from(&self, h: HalfEdge) -> Vec<Move> {
        match h.end {
            End::Tail => self.routes[h.edge].clone(),
            End::Head => reversed(&self.routes[h.edge]),
        }
    }

    fn germ(&self, r: &[Move]) -> Option<GermInfo> {
        let mut prefix = Vec::new();
        for (i, m) in r.iter().enumerate() {
            if self.ell[m.edge] > 0.0 {
                return Some(GermInfo {
                    germ: Germ { prefix, edge: m.edge, dir: m.dir() },
                    index: i,
                    first_len: self.move_len(m),
                });
            }
            prefix.push((m.edge, m.dir()));
        }
        None
    }

    /// Metric length of the common initial run of a loop route and its reverse.
    fn loop_overlap(&self, r: &[Move]) -> f64 {
        let rev = reversed(r);
        let mut total = 0.0;
        for (a, b) in r.iter().zip(&rev) {
            if a.edge != b.edge || a.from != b.from || a.dir() != b.dir() {
                break;
            }
            if a.to == b.to {
                total += self.move_len(a);
                continue;
            }
            total += self.move_len(a).min(self.move_len(b));
            break;
        }
        total.min(self.len(r) / 2.0)
    }

    fn cluster_half_edges(&self, v: usize) -> Vec<HalfEdge> {
        self.groups[self.group[v]].iter().flat_map(|w| self.dom.half_edges_at(*w).iter().copied()).collect()
    }

    /// Both ends of `e` sit in one cluster, so its route is a loop.
    fn is_cluster_loop(&self, e: usize) -> bool {
        self.group[self.dom.tail(e)] == self.group[self.dom.head(e)]
    }

    fn terms(&self, v: usize) -> Vec<Term> {
        let mut out = Vec::new();
        for h in &self.cluster_half_edges(v) {
            let e = h.edge;
            if self.alpha[e] <= 0.0 {
                continue;
            }
            let w = 1.0 / self.alpha[e];
            if self.is_cluster_loop(e) {
                if h.end == End::Head {
                    continue;
                }
                let r = &self.routes[e];
                out.push(Term::Loop {
                    w,
                    len: self.len(r),
                    start: self.germ(r),
                    end: self.germ(&reversed(r)),
                    delta: self.loop_overlap(r),
                });
            } else {
                let r = self.route_from(*h);
                out.push(Term::Point { w, len: self.len(&r), germ: self.germ(&r) });
            }
        }
        out
    }

    /// Moves the cluster of `v` along `path`.
    fn apply(&mut self, v: usize, path: &[Move]) {
        for w in self.groups[self.group[v]].clone() {
            self.apply_one(w, path);
        }
    }

    /// Moves `v` alone along `path`, updating every incident route.
    fn apply_one(&mut self, v: usize, path: &[Move]) {
        if path.is_empty() {
            return;
        }
        let back = reversed(path);
        for h in self.dom.half_edges_at(v).to_vec() {
            let r = std::mem::take(&mut self.routes[h.edge]);
            self.routes[h.edge] = match h.end {
                End::Tail => taut(back.iter().copied().chain(r)),
                End::Head => taut(r.into_iter().chain(path.iter().copied())),
            };
        }
        let last = path.last().expect("nonempty");
        self.pos[v] = point_of(self.cod, last.edge, snap(last.to));
    }


    /// One averaging move of `v`; returns the distance moved.
    fn step(&mut self, v: usize) -> f64 {
        let terms = self.terms(v);
        let mut candidates: BTreeMap<Germ, ()> = BTreeMap::new();
        for t in &terms {
            match t {
                Term::Point { germ: Some(g), .. } => {
                    candidates.insert(g.germ.clone(), ());
                }
                Term::Loop { start, end, .. } => {
                    for g in [start, end].into_iter().flatten() {
                        candidates.insert(g.germ.clone(), ());
                    }
                }
                _ => {}
            }
        }
        let mut best: Option<(f64, f64, Germ)> = None;
        let scale: f64 = terms
            .iter()
            .map(|t| match t {
                Term::Point { w, len, .. } | Term::Loop { w, len, .. } => w * len,
            })
            .sum();
        for d in candidates.keys() {
            let (mut a, mut b) = (0.0, 0.0);
            let mut cap = f64::INFINITY;
            for t in &terms {
                match t {
                    Term::Point { w, len, germ } => {
                        let hit = germ.as_ref().filter(|g| g.germ == *d);
                        let r = if hit.is_some() { -1.0 } else { 1.0 };
                        if let Some(g) = hit {
                            cap = cap.min(g.first_len);
                        }
                        a += w * r * r;
                        b += w * len * r;
                    }
                    Term::Loop { w, len, start, end, delta } => {
                        let hits: Vec<&GermInfo> = [start, end].into_iter().flatten().filter(|g| g.germ == *d).collect();
                        let r = 2.0 - 2.0 * hits.len() as f64;
                        if hits.len() == 2 {
                            cap = cap.min(*delta);
                        }
                        for g in &hits {
                            cap = cap.min(g.first_len);
                        }
                        a += w * r * r;
                        b += w * len * r;
                    }
                }
            }
            if b >= -1e-14 * scale.max(1e-300) || a <= 0.0 {
                continue;
            }
            let s = (-b / a).min(cap);
            if !(s > 0.0) {
                continue;
            }
            let gain = a * s * s + 2.0 * b * s;
            if best.as_ref().is_none_or(|(g, _, _)| gain < *g) {
                best = Some((gain, s, d.clone()));
            }
        }
        let Some((_, s, d)) = best else {
            return 0.0;
        };
        let path = self.path_along(v, &d, s);
        self.apply(v, &path);
        s
    }

    /// Path of length `s` from the image of `v` in direction `d`.
    fn path_along(&self, v: usize, d: &Germ, s: f64) -> Vec<Move> {
        // Take the first positive move from any route leaving in direction d.
        let mut runs: Vec<Move> = Vec::new();
        let mut first: Option<(Move, f64)> = None;
        for h in &self.cluster_half_edges(v) {
            let r = self.route_from(*h);
            if let Some(g) = self.germ(&r) {
                if g.germ == *d {
                    runs = r[..g.index].to_vec();
                    let m = r[g.index];
                    if first.is_none_or(|(_, l)| g.first_len < l) {
                        first = Some((m, g.first_len));
                    }
                }
            }
        }
        let (m, len) = first.expect("direction comes from a route");
        let to = if s >= len * (1.0 - 1e-12) {
            m.to
        } else {
            let dt = s / self.ell[m.edge];
            if m.to > m.from {
                m.from + dt
            } else {
                m.from - dt
            }
        };
        runs.push(Move { edge: m.edge, from: m.from, to });
        runs
    }

    /// One Gauss-Seidel pass; returns the largest displacement.
    fn sweep(&mut self) -> f64 {
        let mut disp: f64 = 0.0;
        for g in 0..self.groups.len() {
            if self.stuck[g] {
                continue;
            }
            let v = self.groups[g][0];
            for _ in 0..16 {
                let s = self.step(v);
                disp = disp.max(s);
                if s == 0.0 {
                    break;
                }
            }
        }
        disp
    }

    /// Exact minimiser with every interior image kept on its edge; moves
    /// along the segment toward it until an image reaches an edge end.
    /// Returns the vertices that landed on codomain vertices.
    fn qp_step(&mut self) -> Result<Vec<usize>> {
        let mut var: Vec<Option<usize>> = vec![None; self.dom.vertex_count()];
        let mut vars: Vec<(usize, usize, f64)> = Vec::new(); // (vertex, edge, t)
        for g in 0..self.groups.len() {
            let v = self.groups[g][0];
            if self.stuck[g] {
                continue;
            }
            if let GraphPoint::Edge(e, t) = self.pos[v] {
                if self.ell[e] > 0.0 {
                    for w in &self.groups[g] {
                        var[*w] = Some(vars.len());
                    }
                    vars.push((v, e, t));
                }
            }
        }
        let n = vars.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        // Each route length is L + sum coeff * ds over its free ends.
        let mut rows: Vec<(f64, f64, Vec<(usize, f64)>)> = Vec::new();
        for e in 0..self.dom.edge_count() {
            if self.alpha[e] <= 0.0 {
                continue;
            }
            let r = &self.routes[e];
            let (tv, hv) = (self.dom.tail(e), self.dom.head(e));
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            if r.is_empty() {
                if self.group[tv] != self.group[hv] {
                    if let (Some(i), Some(j)) = (var[tv], var[hv]) {
                        coeffs.push((i, -1.0));
                        coeffs.push((j, 1.0));
                    }
                }
            } else {
                if let Some(i) = var[tv] {
                    let c = if r[0].dir() == Dir::Fwd { -1.0 } else { 1.0 };
                    coeffs.push((i, c));
                }
                if let Some(j) = var[hv] {
                    let c = if r[r.len() - 1].dir() == Dir::Fwd { 1.0 } else { -1.0 };
                    coeffs.push((j, c));
                }
            }
            let mut merged: Vec<(usize, f64)> = Vec::new();
            for (i, c) in coeffs {
                match merged.iter_mut().find(|(k, _)| *k == i) {
                    Some(x) => x.1 += c,
                    None => merged.push((i, c)),
                }
            }
            merged.retain(|(_, c)| *c != 0.0);
            if merged.is_empty() {
                continue;
            }
            rows.push((1.0 / self.alpha[e], self.len(r), merged));
        }
        // Normal equations (sum w a a^T + ridge) x = -sum w L a, solved by CG.
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for (w, l, a) in &rows {
            for &(i, c) in a {
                diag[i] += w * c * c;
                rhs[i] -= w * l * c;
            }
        }
        let ridge = 1e-12 * diag.iter().cloned().fold(0.0, f64::max).max(1e-300);
        for d in &mut diag {
            *d += ridge;
        }
        let apply = |x: &[f64]| -> Vec<f64> {
            let mut y: Vec<f64> = x.iter().map(|xi| ridge * xi).collect();
            for (w, _, a) in &rows {
                let dot: f64 = a.iter().map(|&(i, c)| c * x[i]).sum();
                for &(i, c) in a {
                    y[i] += w * c * dot;
                }
            }
            y
        };
        let x = conjugate_gradient(apply, &rhs, &diag, 1e-14, 20 * n + 100);
        // Largest fraction of the step that keeps every image on its edge.
        let mut theta: f64 = 1.0;
        for (k, &(_, e, t)) in vars.iter().enumerate() {
            let s = t * self.ell[e];
            let target = s + x[k];
            if target < 0.0 {
                theta = theta.min(s / -x[k]);
            } else if target > self.ell[e] {
                theta = theta.min((self.ell[e] - s) / x[k]);
            }
        }
        let mut landed = Vec::new();
        for (k, &(v, e, t)) in vars.iter().enumerate() {
            let s = t * self.ell[e] + theta * x[k];
            let mut nt = s / self.ell[e];
            if nt <= 1e-12 {
                nt = 0.0;
            } else if nt >= 1.0 - 1e-12 {
                nt = 1.0;
            }
            if nt == 0.0 || nt == 1.0 {
                landed.push(v);
            }
            self.apply(v, &[Move { edge: e, from: t, to: nt }]);
        }
        Ok(landed)
    }

    fn to_map(&self, template: &PLGraphMap<f64>) -> Result<PLGraphMap<f64>> {
        let routes = self
            .routes
            .iter()
            .map(|r| {
                let total = self.len(r);
                let n = r.len() as f64;
                r.iter()
                    .map(|m| {
                        let span = if total > 0.0 { self.move_len(m) / total } else { 1.0 / n };
                        Segment::new(m.edge, m.from, m.to, span)
                    })
                    .collect()
            })
            .collect();
        PLGraphMap::new(
            template.domain.clone(),
            template.codomain.clone(),
            template.dom_measure.clone(),
            template.cod_measure.clone(),
            self.pos.clone(),
            routes,
        )
    }

    fn result(&self, template: &PLGraphMap<f64>, iterations: usize, converged: bool, violations: Vec<String>) -> Result<HarmonicResult> {
        let map = self.to_map(template)?;
        let tensions = (0..self.dom.edge_count())
            .map(|e| if self.alpha[e] > 0.0 { self.len(&self.routes[e]) / self.alpha[e] } else { 0.0 })
            .collect();
        let f = fill_profile(&map);
        let fills = (0..self.cod.edge_count()).map(|e| f.edge_max(e)).collect();
        Ok(HarmonicResult { energy: self.energy(), map, tensions, fill_per_codomain_edge: fills, iterations, converged, violations })
    }

    fn min_length(&self) -> f64 {
        self.ell.iter().cloned().filter(|l| *l > 0.0).fold(f64::INFINITY, f64::min)
    }
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
fn conjugate_gradient(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], diag: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return x;
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol * bnorm {
            break;
        }
        z = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

fn check_inputs(m: &PLGraphMap<f64>) -> Result<()> {
    if m.dom_measure.iter().chain(&m.cod_measure).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invalid("measures must be finite and nonnegative"));
    }
    Ok(())
}

/// Runs averaging and polishing until neither changes the map.
fn polish_loop(s: &mut Solver, max_rounds: usize) -> Result<(bool, Vec<String>)> {
    let mut violations = Vec::new();
    let eps = 1e-13 * s.min_length().min(1.0);
    for _ in 0..max_rounds {
        let landed = s.qp_step()?;
        for v in &landed {
            violations.push(format!("image of {} clamped to {}", s.dom.vertex_name(*v), s.pos[*v].format(s.cod)));
        }
        let disp = s.sweep();
        if landed.is_empty() && disp <= eps {
            return Ok((true, violations));
        }
    }
    Ok((false, violations))
}

/// Minimises Dirichlet energy in the homotopy class of `initial`.
///
/// The domain measure is read as elastic weights and the codomain measure
/// as lengths. Unconverged runs return the best map found with
/// `converged = false`.
pub fn minimize_dirichlet(initial: &PLGraphMap<f64>, opts: &HarmonicOptions) -> Result<HarmonicResult> {
    check_inputs(initial)?;
    let mut s = Solver::new(initial, &opts.fixed)?;
    let min_len = s.min_length();
    let mut converged = false;
    let mut iterations = 0;
    let mut violations = Vec::new();
    while iterations < opts.max_iters {
        iterations += 1;
        let e0 = s.energy();
        let disp = s.sweep();
        let e1 = s.energy();
        let settled = (e0 - e1) <= opts.tol * e1.max(1e-300) && disp <= opts.tol * min_len;
        if settled || disp == 0.0 {
            converged = true;
            break;
        }
        if opts.polish && iterations % 32 == 0 {
            let (done, v) = polish_loop(&mut s, 8)?;
            violations.extend(v);
            if done {
                converged = true;
                break;
            }
        }
    }
    if opts.polish && converged {
        let (done, v) = polish_loop(&mut s, 200)?;
        violations.extend(v);
        converged = done;
    }
    s.result(initial, iterations, converged, violations)
}

/// Homotopes `m` so that every zero-weight domain edge maps to a point or a
/// loop of zero length.
pub fn contract_zero_weight(m: &PLGraphMap<f64>) -> Result<PLGraphMap<f64>> {
    check_inputs(m)?;
    Solver::new(m, &[])?.to_map(m)
}

/// Exact minimiser for the combinatorics of `m` (which images lie on which
/// edge), followed by averaging passes wherever a balance condition fails.
pub fn qp_polish(m: &PLGraphMap<f64>) -> Result<HarmonicResult> {
    qp_polish_fixed(m, &[])
}

pub fn qp_polish_fixed(m: &PLGraphMap<f64>, fixed: &[usize]) -> Result<HarmonicResult> {
    check_inputs(m)?;
    let mut s = Solver::new(m, fixed)?;
    let (done, violations) = polish_loop(&mut s, 200)?;
    s.result(m, 0, done, violations)
}

/// Residual of one harmonicity condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub pass: bool,
    pub residual: f64,
    /// Edge or vertex with the worst residual.
    pub worst: Option<String>,
}

impl Check {
    fn new() -> Self {
        Check { pass: true, residual: 0.0, worst: None }
    }

    fn record(&mut self, r: f64, at: impl FnOnce() -> String) {
        if r > self.residual {
            self.residual = r;
            self.worst = Some(at());
        }
    }

    fn finish(&mut self, tol: f64) {
        self.pass = self.residual <= tol;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicityReport {
    pub piecewise_linear: Check,
    pub no_backtracking: Check,
    pub constant_slope: Check,
    pub edge_balance: Check,
    pub vertex_balance: Check,
    pub pass: bool,
}

/// Evaluates the harmonicity conditions; fixed vertices skip the balance checks.
pub fn is_harmonic(m: &PLGraphMap<f64>, tol: f64) -> HarmonicityReport {
    is_harmonic_fixed(m, tol, &[])
}

pub fn is_harmonic_fixed(m: &PLGraphMap<f64>, tol: f64, fixed: &[usize]) -> HarmonicityReport {
    let (dom, cod) = (&*m.domain, &*m.codomain);
    let (group, groups, _) = clusters(dom, &m.dom_measure);
    let s = Solver {
        dom,
        cod,
        alpha: &m.dom_measure,
        ell: &m.cod_measure,
        pos: m.vertex_images.clone(),
        routes: m.routes.iter().map(|r| taut(r.iter().map(|s| Move { edge: s.edge, from: s.from, to: s.to }))).collect(),
        stuck: vec![false; groups.len()],
        group,
        groups,
    };
    // Zero-weight edges must map to zero length; a cluster holding one that
    // wraps a zero-length loop is pinned.
    let mut pl = Check::new();
    let mut stuck = s.stuck.clone();
    for e in 0..dom.edge_count() {
        if m.dom_measure[e] <= 0.0 {
            pl.record(s.len(&s.routes[e]), || dom.edge_name(e).to_string());
            if !s.routes[e].is_empty() {
                stuck[s.group[dom.tail(e)]] = true;
            }
        }
    }
    for v in fixed {
        stuck[s.group[*v]] = true;
    }
    let mut back = Check::new();
    let mut slope = Check::new();
    for e in 0..dom.edge_count() {
        let raw: f64 = m.routes[e].iter().map(|x| x.extent() * m.cod_measure[x.edge]).sum();
        back.record(raw - s.len(&s.routes[e]), || dom.edge_name(e).to_string());
        if m.dom_measure[e] <= 0.0 {
            continue;
        }
        let slopes: Vec<f64> = m.routes[e]
            .iter()
            .filter(|x| x.span > 0.0 && (x.is_stall() || m.cod_measure[x.edge] > 0.0))
            .filter_map(|x| m.slope(e, x))
            .collect();
        if let (Some(lo), Some(hi)) = (
            slopes.iter().cloned().reduce(f64::min),
            slopes.iter().cloned().reduce(f64::max),
        ) {
            slope.record(hi - lo, || dom.edge_name(e).to_string());
        }
    }
    let tension = |e: usize| s.len(&s.routes[e]) / m.dom_measure[e];
    let mut edge_bal = Check::new();
    let mut vert_bal = Check::new();
    for g in 0..s.groups.len() {
        if stuck[g] {
            continue;
        }
        let v = s.groups[g][0];
        let mut sums: BTreeMap<Germ, f64> = BTreeMap::new();
        let mut total = 0.0;
        for h in &s.cluster_half_edges(v) {
            if m.dom_measure[h.edge] <= 0.0 {
                continue;
            }
            let r = s.route_from(*h);
            if let Some(g) = s.germ(&r) {
                let t = tension(h.edge);
                *sums.entry(g.germ).or_insert(0.0) += t;
                total += t;
            }
        }
        match &m.vertex_images[v] {
            GraphPoint::Edge(e, _) if m.cod_measure[*e] > 0.0 => {
                let fwd: f64 = sums.iter().filter(|(g, _)| g.dir == Dir::Fwd).map(|(_, x)| x).sum();
                edge_bal.record((fwd - (total - fwd)).abs(), || dom.vertex_name(v).to_string());
            }
            _ => {
                for x in sums.values() {
                    vert_bal.record(x - (total - x), || dom.vertex_name(v).to_string());
                }
            }
        }
    }
    let mut checks = [pl, back, slope, edge_bal, vert_bal];
    for c in &mut checks {
        c.finish(tol);
    }
    let pass = checks.iter().all(|c| c.pass);
    let [piecewise_linear, no_backtracking, constant_slope, edge_balance, vertex_balance] = checks;
    HarmonicityReport { piecewise_linear, no_backtracking, constant_slope, edge_balance, vertex_balance, pass }
}

/// Weighted `L^2` centre of points in a metric tree: the unique minimiser of
/// `sum w_i d(x, p_i)^2`.
pub fn tree_average(tree: &LengthGraph<f64>, points: &[(GraphPoint<f64>, f64)]) -> Result<GraphPoint<f64>> {
    let g = &tree.graph;
    if points.is_empty() {
        return Err(Error::invalid("tree_average needs at least one point"));
    }
    if !g.is_connected() || g.edge_count() + 1 != g.vertex_count() {
        return Err(Error::invalid("tree_average needs a tree"));
    }
    if points.iter().any(|(_, w)| !(*w > 0.0)) {
        return Err(Error::invalid("weights must be positive"));
    }
    let ell = &tree.ell;
    let dists: Vec<Vec<f64>> = points.iter().map(|(p, _)| tree_distances(g, ell, p)).collect();
    let mut best = (f64::INFINITY, GraphPoint::Vertex(0));
    let eval_vertex = |v: usize| points.iter().zip(&dists).map(|((_, w), d)| w * d[v] * d[v]).sum::<f64>();
    for v in 0..g.vertex_count() {
        let val = eval_vertex(v);
        if val < best.0 {
            best = (val, GraphPoint::Vertex(v));
        }
    }
    for e in 0..g.edge_count() {
        let l = ell[e];
        if l <= 0.0 {
            continue;
        }
        let (a, b) = (g.tail(e), g.head(e));
        // Distance to each point as |s - c| or (s + c) etc: collect breakpoints.
        let mut breaks = vec![0.0, l];
        for (p, _) in points {
            if let GraphPoint::Edge(pe, t) = p {
                if *pe == e {
                    breaks.push(t * l);
                }
            }
        }
        breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        let dist_at = |k: usize, s: f64| -> f64 {
            let (p, _) = &points[k];
            match p {
                GraphPoint::Edge(pe, t) if *pe == e => (s - t * l).abs(),
                _ => (dists[k][a] + s).min(dists[k][b] + l - s),
            }
        };
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            // On this piece each distance is c + sign*s: minimise the quadratic.
            let mid = 0.5 * (lo + hi);
            let (mut num, mut den) = (0.0, 0.0);
            for (k, (_, wk)) in points.iter().enumerate() {
                let d0 = dist_at(k, mid);
                let d1 = dist_at(k, mid + 1e-3 * (hi - lo));
                let sign = if d1 >= d0 { 1.0 } else { -1.0 };
                let c = d0 - sign * mid;
                num -= wk * c * sign;
                den += wk;
            }
            let s = (num / den).clamp(lo, hi);
            let val: f64 = points.iter().enumerate().map(|(k, (_, wk))| wk * dist_at(k, s).powi(2)).sum();
            if val < best.0 - 1e-15 * best.0.abs() {
                best = (val, GraphPoint::on_edge(g, e, s / l));
            }
        }
    }
    Ok(best.1)
}

fn tree_distances(g: &Graph, ell: &[f64], p: &GraphPoint<f64>) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; g.vertex_count()];
    let mut stack = Vec::new();
    match p {
        GraphPoint::Vertex(v) => {
            d[*v] = 0.0;
            stack.push(*v);
        }
        GraphPoint::Edge(e, t) => {
            d[g.tail(*e)] = t * ell[*e];
            d[g.head(*e)] = (1.0 - t) * ell[*e];
            stack.push(g.tail(*e));
            stack.push(g.head(*e));
        }
    }
    while let Some(v) = stack.pop() {
        for h in g.half_edges_at(v) {
            let u = g.vertex_of(h.opposite());
            let nd = d[v] + ell[h.edge];
            if nd < d[u] {
                d[u] = nd;
                stack.push(u);
            }
        }
    }
    d
}

/// Map into `target` sending every vertex to `images` and every edge along
/// the given step list at uniform speed; a convenience for building initial maps.
pub fn map_from_steps(
    domain: Arc<Graph>,
    alpha: Vec<f64>,
    target: &LengthGraph<f64>,
    images: Vec<usize>,
    steps: Vec<Vec<crate::curves::Step>>,
) -> Result<PLGraphMap<f64>> {
    let routes = steps
        .iter()
        .map(|s| {
            if s.is_empty() {
                Vec::new()
            } else {
                crate::maps::uniform_route(s, &target.ell)
            }
        })
        .collect();
    PLGraphMap::new(
        domain,
        target.graph.clone(),
        alpha,
        target.ell.clone(),
        images.into_iter().map(GraphPoint::Vertex).collect(),
        routes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Step;
    use crate::graph::tests::{rose, theta};

    fn st(e: usize, fwd: bool) -> Step {
        Step::new(e, if fwd { Dir::Fwd } else { Dir::Rev })
    }

    fn interval(l: f64) -> LengthGraph<f64> {
        let g = Graph::from_indices(vec!["0".into(), "1".into()], vec![("I".into(), 0, 1)]).unwrap();
        LengthGraph::new(Arc::new(g), vec![l]).unwrap()
    }

    #[test]
    fn identity_is_harmonic() {
        let g = Arc::new(theta());
        let m = PLGraphMap::identity(g, vec![1.0, 2.0, 0.5]);
        let rep = is_harmonic(&m, 1e-12);
        assert!(rep.pass, "{rep:?}");
        let r = minimize_dirichlet(&m, &HarmonicOptions::default()).unwrap();
        assert!((r.energy - 3.5).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn free_edge_collapses() {
        let k = interval(1.0);
        let dom = Arc::new(Graph::from_indices(vec!["a".into(), "b".into()], vec![("x".into(), 0, 1)]).unwrap());
        let m = map_from_steps(dom, vec![1.0], &k, vec![0, 1], vec![vec![st(0, true)]]).unwrap();
        let r = minimize_dirichlet(&m, &HarmonicOptions::default()).unwrap();
        assert!(r.energy < 1e-20, "{}", r.energy);
        assert!(r.tensions[0] < 1e-10);
    }

    #[test]
    fn pinned_chain_is_linear() {
        // a - b - c with weights 1 and 3, a at 0, c at the far end: b sits at 1/4.
        let k = interval(1.0);
        let dom = Arc::new(Graph::from_indices(
            vec!["a".into(), "b".into(), "c".into()],
            vec![("x".into(), 0, 1), ("y".into(), 1, 2)],
        ).unwrap());
        let m = map_from_steps(dom, vec![1.0, 3.0], &k, vec![0, 0, 1], vec![vec![], vec![st(0, true)]]).unwrap();
        let opts = HarmonicOptions { fixed: vec![0, 2], ..Default::default() };
        let r = minimize_dirichlet(&m, &opts).unwrap();
        match r.map.vertex_images[1] {
            GraphPoint::Edge(0, t) => assert!((t - 0.25).abs() < 1e-9, "{t}"),
            ref p => panic!("unexpected {p:?}"),
        }
        assert!((r.energy - 0.25).abs() < 1e-9);
        assert!(is_harmonic_fixed(&r.map, 1e-9, &[0, 2]).pass);
    }

    #[test]
    fn circle_cover_minimum() {
        // A doubly wound circle of weight 2 onto a circle of length 3.
        let target = LengthGraph::new(Arc::new(rose(1)), vec![3.0]).unwrap();
        let dom = Arc::new(Graph::from_indices(
            vec!["a".into(), "b".into()],
            vec![("x".into(), 0, 1), ("y".into(), 1, 0)],
        ).unwrap());
        let m = map_from_steps(dom, vec![1.0, 1.0], &target, vec![0, 0], vec![vec![st(0, true), st(0, true)], vec![]]).unwrap();
        let r = minimize_dirichlet(&m, &HarmonicOptions::default()).unwrap();
        // Total length 6 spread over total weight 2: energy 36/2.
        assert!((r.energy - 18.0).abs() < 1e-9, "{}", r.energy);
        assert!(r.converged);
        assert!(is_harmonic(&r.map, 1e-9).pass);
    }

    #[test]
    fn mid_edge_imbalance_detected() {
        let k = interval(3.0);
        let dom = Arc::new(Graph::from_indices(
            vec!["a".into(), "m".into(), "b".into()],
            vec![("x".into(), 0, 1), ("y".into(), 1, 2)],
        ).unwrap());
        // m at 1/3: slope 1 to the left, 2 to the right.
        let m = PLGraphMap::new(
            dom,
            k.graph.clone(),
            vec![1.0, 1.0],
            vec![3.0],
            vec![GraphPoint::Vertex(0), GraphPoint::Edge(0, 1.0 / 3.0), GraphPoint::Vertex(1)],
            vec![vec![Segment::new(0, 0.0, 1.0 / 3.0, 1.0)], vec![Segment::new(0, 1.0 / 3.0, 1.0, 1.0)]],
        )
        .unwrap();
        let rep = is_harmonic_fixed(&m, 1e-9, &[0, 2]);
        assert!(!rep.edge_balance.pass);
        assert!((rep.edge_balance.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tree_average_examples() {
        let k = interval(1.0);
        let p = tree_average(&k, &[(GraphPoint::Vertex(0), 1.0), (GraphPoint::Vertex(1), 1.0)]).unwrap();
        assert!(matches!(p, GraphPoint::Edge(0, t) if (t - 0.5).abs() < 1e-12));
        let p = tree_average(&k, &[(GraphPoint::Vertex(0), 1.0), (GraphPoint::Vertex(1), 3.0)]).unwrap();
        assert!(matches!(p, GraphPoint::Edge(0, t) if (t - 0.75).abs() < 1e-12));
        let tripod = Graph::from_indices(
            vec!["c".into(), "x".into(), "y".into(), "z".into()],
            vec![("a".into(), 0, 1), ("b".into(), 0, 2), ("d".into(), 0, 3)],
        )
        .unwrap();
        let t = LengthGraph::new(Arc::new(tripod), vec![1.0; 3]).unwrap();
        let pts: Vec<_> = (1..4).map(|v| (GraphPoint::Vertex(v), 1.0)).collect();
        assert_eq!(tree_average(&t, &pts).unwrap(), GraphPoint::Vertex(0));
        assert!(tree_average(&t, &[]).is_err());
    }

    #[test]
    fn tripod_center_is_sticky() {
        // Three legs pinned at the leaves of a tripod: the centre stays on the vertex.
        let tripod = Arc::new(
            Graph::from_indices(
                vec!["c".into(), "x".into(), "y".into(), "z".into()],
                vec![("a".into(), 0, 1), ("b".into(), 0, 2), ("d".into(), 0, 3)],
            )
            .unwrap(),
        );
        let target = LengthGraph::new(tripod.clone(), vec![1.0; 3]).unwrap();
        let steps = vec![vec![st(0, true)], vec![st(1, true)], vec![st(2, true)]];
        let m = map_from_steps(tripod, vec![1.0, 1.0, 1.5], &target, vec![0, 1, 2, 3], steps).unwrap();
        let r = minimize_dirichlet(&m, &HarmonicOptions { fixed: vec![1, 2, 3], ..Default::default() }).unwrap();
        assert_eq!(r.map.vertex_images[0], GraphPoint::Vertex(0));
        assert!((r.energy - (1.0 + 1.0 + 1.0 / 1.5)).abs() < 1e-12);
    }

    #[test]
    fn polish_keeps_harmonic_input() {
        let target = LengthGraph::new(Arc::new(rose(1)), vec![3.0]).unwrap();
        let dom = Arc::new(Graph::from_indices(
            vec!["a".into(), "b".into()],
            vec![("x".into(), 0, 1), ("y".into(), 1, 0)],
        ).unwrap());
        let m = map_from_steps(dom, vec![1.0, 2.0], &target, vec![0, 0], vec![vec![st(0, true)], vec![st(0, true)]]).unwrap();
        let r = minimize_dirichlet(&m, &HarmonicOptions::default()).unwrap();
        let p = qp_polish(&r.map).unwrap();
        assert!((p.energy - r.energy).abs() <= 1e-12 * r.energy);
        // length 6 around, weights 1 and 2 in series: 36 / 3
        assert!((r.energy - 12.0).abs() < 1e-9, "{}", r.energy);
    }
}
