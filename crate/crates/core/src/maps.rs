//! Piecewise-linear maps between measured graphs and their energies.
//!
//! A map sends each domain vertex to a point of the codomain and each domain
//! edge along a route: a list of segments, each running linearly along one
//! codomain edge between two parameters while using a fraction `span` of the
//! domain edge. Spans of a route sum to one. A segment with `from == to` is a
//! stall; a segment with zero span is a jump and is only allowed across a
//! codomain edge of measure zero.

use std::sync::Arc;

use crate::curves::{enumerate_cycles, extremal_length, Component, EdgePath, MultiCurve, Step};
use crate::error::{Error, Result};
use crate::graph::{Dir, ElasticGraph, End, Graph, LengthGraph};
use crate::scalar::Scalar;

/// A point of a graph: a vertex or an interior point of an edge.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphPoint<T = f64> {
    Vertex(usize),
    Edge(usize, T),
}

impl<T: Scalar> GraphPoint<T> {
    /// Point at parameter `t` of edge `e`, snapped to an endpoint when `t` is 0 or 1.
    pub fn on_edge(g: &Graph, e: usize, t: T) -> Self {
        if t.near(&T::zero()) || t <= T::zero() {
            GraphPoint::Vertex(g.tail(e))
        } else if t.near(&T::one()) || t >= T::one() {
            GraphPoint::Vertex(g.head(e))
        } else {
            GraphPoint::Edge(e, t)
        }
    }

    pub fn same(&self, other: &Self) -> bool {
        match (self, other) {
            (GraphPoint::Vertex(a), GraphPoint::Vertex(b)) => a == b,
            (GraphPoint::Edge(e, s), GraphPoint::Edge(f, t)) => e == f && s.near(t),
            _ => false,
        }
    }

    /// Edge points within rounding of an endpoint become that vertex.
    pub fn canonical(&self, g: &Graph) -> Self {
        match self {
            GraphPoint::Edge(e, t) => GraphPoint::on_edge(g, *e, t.clone()),
            v => v.clone(),
        }
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> GraphPoint<U> {
        match self {
            GraphPoint::Vertex(v) => GraphPoint::Vertex(*v),
            GraphPoint::Edge(e, t) => GraphPoint::Edge(*e, f(t)),
        }
    }

    pub fn format(&self, g: &Graph) -> String {
        match self {
            GraphPoint::Vertex(v) => g.vertex_name(*v).to_string(),
            GraphPoint::Edge(e, t) => format!("{}@{:?}", g.edge_name(*e), t.to_f64()),
        }
    }
}

/// Linear piece of a route.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment<T = f64> {
    pub edge: usize,
    pub from: T,
    pub to: T,
    /// Fraction of the domain edge spent on this piece.
    pub span: T,
}

impl<T: Scalar> Segment<T> {
    pub fn new(edge: usize, from: T, to: T, span: T) -> Self {
        Segment { edge, from, to, span }
    }

    pub fn start(&self, g: &Graph) -> GraphPoint<T> {
        GraphPoint::on_edge(g, self.edge, self.from.clone())
    }

    pub fn end(&self, g: &Graph) -> GraphPoint<T> {
        GraphPoint::on_edge(g, self.edge, self.to.clone())
    }

    pub fn reversed(&self) -> Segment<T> {
        Segment { edge: self.edge, from: self.to.clone(), to: self.from.clone(), span: self.span.clone() }
    }

    /// Codomain parameter distance covered.
    pub fn extent(&self) -> T {
        (self.to.clone() - self.from.clone()).abs()
    }

    pub fn is_stall(&self) -> bool {
        self.from == self.to
    }

    pub fn dir(&self) -> Dir {
        if self.to >= self.from {
            Dir::Fwd
        } else {
            Dir::Rev
        }
    }
}

pub fn reverse_route<T: Scalar>(route: &[Segment<T>]) -> Vec<Segment<T>> {
    route.iter().rev().map(|s| s.reversed()).collect()
}

/// Stall of length `span` at a point.
pub fn stall_at<T: Scalar>(g: &Graph, p: &GraphPoint<T>, span: T) -> Result<Segment<T>> {
    match p {
        GraphPoint::Edge(e, t) => Ok(Segment::new(*e, t.clone(), t.clone(), span)),
        GraphPoint::Vertex(v) => {
            let h = g
                .half_edges_at(*v)
                .first()
                .ok_or_else(|| Error::Degenerate(format!("isolated vertex {}", g.vertex_name(*v))))?;
            let t: T = h.end.param();
            Ok(Segment::new(h.edge, t.clone(), t, span))
        }
    }
}

/// Piecewise-linear map between two measured graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct PLGraphMap<T = f64> {
    pub domain: Arc<Graph>,
    pub codomain: Arc<Graph>,
    /// Reference measure on the domain (elastic weight or length).
    pub dom_measure: Vec<T>,
    /// Reference measure on the codomain (elastic weight or length).
    pub cod_measure: Vec<T>,
    pub vertex_images: Vec<GraphPoint<T>>,
    pub routes: Vec<Vec<Segment<T>>>,
}

impl<T: Scalar> PLGraphMap<T> {
    /// Builds and validates a map.
    pub fn new(
        domain: Arc<Graph>,
        codomain: Arc<Graph>,
        dom_measure: Vec<T>,
        cod_measure: Vec<T>,
        vertex_images: Vec<GraphPoint<T>>,
        routes: Vec<Vec<Segment<T>>>,
    ) -> Result<Self> {
        let m = PLGraphMap { domain, codomain, dom_measure, cod_measure, vertex_images, routes };
        m.validate()?;
        Ok(m)
    }

    /// Identity map of a measured graph.
    pub fn identity(g: Arc<Graph>, measure: Vec<T>) -> Self {
        let vertex_images = (0..g.vertex_count()).map(GraphPoint::Vertex).collect();
        let routes = (0..g.edge_count()).map(|e| vec![Segment::new(e, T::zero(), T::one(), T::one())]).collect();
        PLGraphMap { domain: g.clone(), codomain: g, dom_measure: measure.clone(), cod_measure: measure, vertex_images, routes }
    }

    /// Same combinatorics with new measures.
    pub fn with_measures(&self, dom_measure: Vec<T>, cod_measure: Vec<T>) -> Result<Self> {
        PLGraphMap::new(
            self.domain.clone(),
            self.codomain.clone(),
            dom_measure,
            cod_measure,
            self.vertex_images.clone(),
            self.routes.clone(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (d, c) = (&self.domain, &self.codomain);
        if self.dom_measure.len() != d.edge_count() || self.cod_measure.len() != c.edge_count() {
            return Err(Error::mismatch("measure length does not match edge count"));
        }
        if self.vertex_images.len() != d.vertex_count() || self.routes.len() != d.edge_count() {
            return Err(Error::mismatch("map data does not match domain size"));
        }
        for p in &self.vertex_images {
            match p {
                GraphPoint::Vertex(v) if *v >= c.vertex_count() => return Err(Error::mismatch("vertex image out of range")),
                GraphPoint::Edge(e, t) if *e >= c.edge_count() || *t < T::zero() || *t > T::one() => {
                    return Err(Error::mismatch("vertex image out of range"))
                }
                _ => {}
            }
        }
        for e in 0..d.edge_count() {
            let name = d.edge_name(e).to_string();
            let disc = |detail: String| Error::Discontinuous { edge: name.clone(), detail };
            let start = &self.vertex_images[d.tail(e)].canonical(c);
            let end = &self.vertex_images[d.head(e)].canonical(c);
            let route = &self.routes[e];
            if route.is_empty() {
                if !start.same(end) {
                    return Err(disc("empty route between distinct points".into()));
                }
                continue;
            }
            let mut total = T::zero();
            let mut at = start.clone();
            for s in route {
                if s.edge >= c.edge_count() {
                    return Err(disc("segment on unknown edge".into()));
                }
                for x in [&s.from, &s.to] {
                    if *x < T::zero() || *x > T::one() {
                        return Err(disc("segment parameter outside [0,1]".into()));
                    }
                }
                if s.span < T::zero() {
                    return Err(disc("negative span".into()));
                }
                if !s.start(c).canonical(c).same(&at) {
                    return Err(disc(format!("segment starts at {} not {}", s.start(c).format(c), at.format(c))));
                }
                if s.span == T::zero() && !s.is_stall() && self.cod_measure[s.edge].is_positive() {
                    return Err(disc(format!("jump across {} of positive measure", c.edge_name(s.edge))));
                }
                total = total + s.span.clone();
                at = s.end(c).canonical(c);
            }
            if !at.same(end) {
                return Err(disc(format!("route ends at {} not {}", at.format(c), end.format(c))));
            }
            if !total.near(&T::one()) {
                return Err(disc(format!("spans sum to {:?}", total.to_f64())));
            }
        }
        Ok(())
    }

    /// Route of a domain edge traversed in direction `d`.
    pub fn directed_route(&self, e: usize, d: Dir) -> Vec<Segment<T>> {
        match d {
            Dir::Fwd => self.routes[e].clone(),
            Dir::Rev => reverse_route(&self.routes[e]),
        }
    }

    /// Derivative magnitude of a segment on domain edge `e`; `None` when the
    /// domain piece has measure zero.
    pub fn slope(&self, e: usize, s: &Segment<T>) -> Option<T> {
        let dom = s.span.clone() * self.dom_measure[e].clone();
        if !dom.is_positive() {
            return None;
        }
        Some(s.extent() * self.cod_measure[s.edge].clone() / dom)
    }

    /// Zero-weight domain edges count as contracted: their routes may only
    /// cross zero-measure codomain edges. Lists the edges that break this.
    pub fn stretched_zero_weight(&self) -> Vec<usize> {
        (0..self.domain.edge_count())
            .filter(|&e| {
                !self.dom_measure[e].is_positive()
                    && self.routes[e].iter().any(|s| !s.is_stall() && self.cod_measure[s.edge].is_positive())
            })
            .collect()
    }

    pub fn check_contracted(&self) -> Result<()> {
        match self.stretched_zero_weight().first() {
            None => Ok(()),
            Some(&e) => Err(Error::Discontinuous {
                edge: self.domain.edge_name(e).to_string(),
                detail: "zero-weight edge maps across an edge of positive measure".into(),
            }),
        }
    }

    /// Domain edges whose route immediately reverses itself somewhere.
    pub fn backtracking_edges(&self) -> Vec<usize> {
        (0..self.domain.edge_count()).filter(|&e| route_backtracks(&self.codomain, &self.routes[e])).collect()
    }

    /// Image of a domain point.
    pub fn eval(&self, p: &GraphPoint<T>) -> GraphPoint<T> {
        match p {
            GraphPoint::Vertex(v) => self.vertex_images[*v].clone(),
            GraphPoint::Edge(e, u) => {
                let r = restrict_route(&self.routes[*e], &T::zero(), u);
                match r.last() {
                    Some(s) => s.end(&self.codomain),
                    None => self.vertex_images[self.domain.tail(*e)].clone(),
                }
            }
        }
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> PLGraphMap<U> {
        PLGraphMap {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            dom_measure: self.dom_measure.iter().map(f).collect(),
            cod_measure: self.cod_measure.iter().map(f).collect(),
            vertex_images: self.vertex_images.iter().map(|p| p.map_scalar(f)).collect(),
            routes: self
                .routes
                .iter()
                .map(|r| r.iter().map(|s| Segment::new(s.edge, f(&s.from), f(&s.to), f(&s.span))).collect())
                .collect(),
        }
    }
}

/// Whether consecutive moving pieces of a route turn back on themselves.
pub fn route_backtracks<T: Scalar>(g: &Graph, route: &[Segment<T>]) -> bool {
    let moving: Vec<&Segment<T>> = route.iter().filter(|s| !s.is_stall()).collect();
    for w in moving.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.edge == b.edge && a.dir() != b.dir() {
            // Reversal at an interior point, or at the same end of the edge.
            let at_end = matches!(a.end(g), GraphPoint::Vertex(_));
            if !at_end || a.to == b.from {
                return true;
            }
        }
    }
    false
}

/// Pieces of `route` (parametrised by the domain edge, `u` in `[0,1]`)
/// covering `u` in `[a, b]` with `a <= b`, spans kept in domain units.
///
/// Zero-span pieces sitting exactly at `u = c` belong to intervals with
/// `a < c <= b`, and to the interval starting at 0 when `c = 0`, so that
/// consecutive restrictions join continuously.
pub fn restrict_route<T: Scalar>(route: &[Segment<T>], a: &T, b: &T) -> Vec<Segment<T>> {
    let mut out = Vec::new();
    let mut c = T::zero();
    let after = |x: &T, y: &T| x > y && !x.near(y);
    for s in route {
        let c0 = c.clone();
        let c1 = c.clone() + s.span.clone();
        c = c1.clone();
        if s.span == T::zero() {
            let inside = (after(&c0, a) || (c0.near(a) && a.near(&T::zero()))) && !after(&c0, b);
            if inside && !(c0.near(a) && !a.near(&T::zero())) {
                out.push(s.clone());
            }
            continue;
        }
        // positive span: overlap of [c0, c1] with [a, b]
        let lo = T::max_of(c0.clone(), a.clone());
        let hi = T::min_of(c1.clone(), b.clone());
        if !(hi > lo) || hi.near(&lo) {
            continue;
        }
        let interp = |u: &T| s.from.clone() + (s.to.clone() - s.from.clone()) * (u.clone() - c0.clone()) / s.span.clone();
        let from = if lo == c0 { s.from.clone() } else { interp(&lo) };
        let to = if hi == c1 { s.to.clone() } else { interp(&hi) };
        out.push(Segment::new(s.edge, from, to, hi - lo));
    }
    out
}

/// Codomain cell with its Fill value.
#[derive(Clone, Debug, PartialEq)]
pub struct FillCell<T = f64> {
    pub edge: usize,
    pub lo: T,
    pub hi: T,
    pub fill: T,
}

/// Fill per codomain cell and its essential supremum.
#[derive(Clone, Debug, PartialEq)]
pub struct FillProfile<T = f64> {
    pub cells: Vec<FillCell<T>>,
    /// Supremum over cells of positive measure on non-contracted edges.
    pub sup: T,
}

impl<T: Scalar> FillProfile<T> {
    /// Largest Fill on a given codomain edge (zero when nothing maps over it).
    pub fn edge_max(&self, e: usize) -> T {
        self.cells.iter().filter(|c| c.edge == e).fold(T::zero(), |m, c| T::max_of(m, c.fill.clone()))
    }

    /// Length-weighted mean Fill on a codomain edge.
    pub fn edge_mean(&self, e: usize) -> T {
        self.cells
            .iter()
            .filter(|c| c.edge == e)
            .fold(T::zero(), |m, c| m + c.fill.clone() * (c.hi.clone() - c.lo.clone()))
    }

    /// `int Fill` against the codomain measure.
    pub fn integral(&self, cod_measure: &[T]) -> T {
        self.cells
            .iter()
            .fold(T::zero(), |m, c| m + c.fill.clone() * (c.hi.clone() - c.lo.clone()) * cod_measure[c.edge].clone())
    }
}

/// Piece of a normalised map: one domain piece onto one codomain cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece<T = f64> {
    pub segment: Segment<T>,
    /// Index into the breakpoints of `segment.edge`; `None` for stalls.
    pub cell: Option<usize>,
}

/// A map refined so every domain piece covers exactly one codomain cell.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedMap<T = f64> {
    pub map: PLGraphMap<T>,
    /// Sorted breakpoints per codomain edge, always containing 0 and 1.
    pub breakpoints: Vec<Vec<T>>,
    /// Refined pieces per domain edge.
    pub pieces: Vec<Vec<Piece<T>>>,
}

impl<T: Scalar> NormalizedMap<T> {
    /// Number of codomain cells.
    pub fn cell_count(&self) -> usize {
        self.breakpoints.iter().map(|b| b.len() - 1).sum()
    }
}

fn push_break<T: Scalar>(v: &mut Vec<T>, x: T) {
    v.push(x);
}

fn sort_dedup<T: Scalar>(v: &mut Vec<T>) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    let mut out: Vec<T> = Vec::with_capacity(v.len());
    for x in v.drain(..) {
        if out.last().is_some_and(|l| l.near(&x)) {
            continue;
        }
        out.push(x);
    }
    if let Some(l) = out.last_mut() {
        if l.near(&T::one()) {
            *l = T::one();
        }
    }
    *v = out;
}

/// Subdivides the codomain at every segment endpoint and splits segments accordingly.
pub fn normalize<T: Scalar>(m: &PLGraphMap<T>) -> NormalizedMap<T> {
    let c = &m.codomain;
    let mut breakpoints: Vec<Vec<T>> = vec![vec![T::zero(), T::one()]; c.edge_count()];
    for route in &m.routes {
        for s in route {
            push_break(&mut breakpoints[s.edge], s.from.clone());
            push_break(&mut breakpoints[s.edge], s.to.clone());
        }
    }
    for b in &mut breakpoints {
        sort_dedup(b);
    }
    let mut pieces = Vec::with_capacity(m.routes.len());
    for route in &m.routes {
        let mut ps = Vec::new();
        for s in route {
            if s.is_stall() {
                ps.push(Piece { segment: s.clone(), cell: None });
                continue;
            }
            let bp = &breakpoints[s.edge];
            let (lo, hi) = if s.from < s.to { (s.from.clone(), s.to.clone()) } else { (s.to.clone(), s.from.clone()) };
            let last = bp.len() - 2;
            let i0 = locate(bp, &lo).min(last);
            let i1 = locate(bp, &hi).max(i0);
            let extent = hi.clone() - lo.clone();
            let mut cells: Vec<(usize, T, T)> = Vec::new();
            for k in i0..i1.max(i0 + 1) {
                let a = if k == i0 { lo.clone() } else { bp[k].clone() };
                let b = if k + 1 >= i1.max(i0 + 1) { hi.clone() } else { bp[k + 1].clone() };
                cells.push((k, a, b));
            }
            if s.dir() == Dir::Rev {
                cells.reverse();
            }
            for (k, a, b) in cells {
                let frac = (b.clone() - a.clone()) / extent.clone();
                let (from, to) = if s.dir() == Dir::Fwd { (a, b) } else { (b, a) };
                ps.push(Piece { segment: Segment::new(s.edge, from, to, s.span.clone() * frac), cell: Some(k) });
            }
        }
        pieces.push(ps);
    }
    NormalizedMap { map: m.clone(), breakpoints, pieces }
}

/// Index of the breakpoint equal to (or nearest below) `x`.
fn locate<T: Scalar>(bp: &[T], x: &T) -> usize {
    let mut best = 0;
    for (i, b) in bp.iter().enumerate() {
        if b.near(x) {
            return i;
        }
        if b < x {
            best = i;
        }
    }
    best
}

/// Fill per cell of a normalised map.
pub fn fill<T: Scalar>(n: &NormalizedMap<T>) -> FillProfile<T> {
    let m = &n.map;
    let mut values: Vec<Vec<T>> = n.breakpoints.iter().map(|b| vec![T::zero(); b.len() - 1]).collect();
    for (e, ps) in n.pieces.iter().enumerate() {
        for p in ps {
            if let (Some(k), Some(slope)) = (p.cell, m.slope(e, &p.segment)) {
                values[p.segment.edge][k] = values[p.segment.edge][k].clone() + slope;
            }
        }
    }
    let mut cells = Vec::new();
    let mut sup = T::zero();
    for (e, vals) in values.into_iter().enumerate() {
        let bp = &n.breakpoints[e];
        for (k, v) in vals.into_iter().enumerate() {
            let (lo, hi) = (bp[k].clone(), bp[k + 1].clone());
            if m.cod_measure[e].is_positive() && hi > lo && v > sup {
                sup = v.clone();
            }
            cells.push(FillCell { edge: e, lo, hi, fill: v });
        }
    }
    FillProfile { cells, sup }
}

/// Fill profile of a map.
pub fn fill_profile<T: Scalar>(m: &PLGraphMap<T>) -> FillProfile<T> {
    fill(&normalize(m))
}

/// `int |f'|^2` against the domain measure: the sum over moving segments of
/// `(extent * cod_measure)^2 / (span * dom_measure)`.
pub fn dirichlet_energy<T: Scalar>(m: &PLGraphMap<T>) -> T {
    let mut total = T::zero();
    for (e, route) in m.routes.iter().enumerate() {
        for s in route {
            if let Some(slope) = m.slope(e, s) {
                total = total + slope.clone() * slope * s.span.clone() * m.dom_measure[e].clone();
            }
        }
    }
    total
}

/// Maximal slope over domain pieces of positive measure.
pub fn lipschitz<T: Scalar>(m: &PLGraphMap<T>) -> T {
    let mut best = T::zero();
    for (e, route) in m.routes.iter().enumerate() {
        for s in route {
            if m.cod_measure[s.edge].is_positive() {
                if let Some(slope) = m.slope(e, s) {
                    best = T::max_of(best, slope);
                }
            }
        }
    }
    best
}

/// Essential supremum of Fill.
pub fn embedding_energy<T: Scalar>(m: &PLGraphMap<T>) -> T {
    fill_profile(m).sup
}

/// Homotopy class of a closed codomain path, as a cyclic step sequence.
///
/// The path is cut at its visits to vertices; each piece between two visits
/// stays in one edge and counts as a traversal when it leaves and arrives
/// through different ends.
pub fn closed_path_steps<T: Scalar>(segs: &[Segment<T>]) -> Vec<Step> {
    let moving: Vec<&Segment<T>> = segs.iter().filter(|s| !s.is_stall()).collect();
    let at_end = |x: &T| -> Option<End> {
        if x.near(&T::zero()) {
            Some(End::Tail)
        } else if x.near(&T::one()) {
            Some(End::Head)
        } else {
            None
        }
    };
    let Some(first) = moving.iter().position(|s| at_end(&s.from).is_some()) else {
        return Vec::new();
    };
    let n = moving.len();
    let mut steps = Vec::new();
    let mut leave: Option<(usize, End)> = None;
    for k in 0..n {
        let s = moving[(first + k) % n];
        if leave.is_none() {
            leave = at_end(&s.from).map(|end| (s.edge, end));
        }
        if let Some(arrive) = at_end(&s.to) {
            if let Some((e, l)) = leave.take() {
                if l != arrive {
                    steps.push(Step::new(e, Dir::leaving(l)));
                }
            }
        }
    }
    steps
}

/// Homotopy class rel endpoints of an open path, as the full traversals it
/// makes after free reduction.
pub fn open_path_steps<T: Scalar>(segs: &[Segment<T>]) -> Vec<Step> {
    let moving: Vec<&Segment<T>> = segs.iter().filter(|s| !s.is_stall()).collect();
    let at_end = |x: &T| -> Option<End> {
        if x.near(&T::zero()) {
            Some(End::Tail)
        } else if x.near(&T::one()) {
            Some(End::Head)
        } else {
            None
        }
    };
    let mut steps = Vec::new();
    let mut leave: Option<(usize, End)> = None;
    for s in moving {
        if leave.is_none() {
            leave = at_end(&s.from).map(|end| (s.edge, end));
        }
        if let Some(arrive) = at_end(&s.to) {
            if let Some((e, l)) = leave.take() {
                if l != arrive {
                    steps.push(Step::new(e, Dir::leaving(l)));
                }
            }
        }
    }
    crate::curves::reduce_path(&steps)
}

/// Image of a multicurve: each component is replaced by the concatenated
/// routes of its steps and tautened; weights are kept.
pub fn pushforward_curve<T: Scalar>(m: &PLGraphMap<T>, c: &MultiCurve<T>) -> Result<MultiCurve<T>> {
    if *c.graph != *m.domain {
        return Err(Error::mismatch("curve does not live on the map's domain"));
    }
    let mut comps = Vec::new();
    for comp in &c.components {
        let mut segs = Vec::new();
        for s in &comp.path.steps {
            segs.extend(m.directed_route(s.edge, s.dir));
        }
        let steps = closed_path_steps(&segs);
        comps.push(Component { weight: comp.weight.clone(), path: EdgePath::new(steps) });
    }
    MultiCurve::new(m.codomain.clone(), comps.into_iter().filter(|c| !c.path.is_empty()).collect())
}

/// `m2 . m1`: every segment of `m1` is replaced by the matching stretch of
/// the corresponding `m2` route, rescaled to the segment's span.
pub fn compose<T: Scalar>(m2: &PLGraphMap<T>, m1: &PLGraphMap<T>) -> Result<PLGraphMap<T>> {
    if *m1.codomain != *m2.domain {
        return Err(Error::mismatch("compose: codomain of the inner map is not the domain of the outer map"));
    }
    let mid = &m1.codomain;
    let out_g = &m2.codomain;
    let vertex_images: Vec<GraphPoint<T>> = m1.vertex_images.iter().map(|p| m2.eval(p)).collect();
    let mut routes = Vec::with_capacity(m1.routes.len());
    for route in &m1.routes {
        let mut out = Vec::new();
        for s in route {
            let e = s.edge;
            if s.is_stall() {
                if s.span.is_positive() {
                    let p = m2.eval(&GraphPoint::on_edge(mid, e, s.from.clone()));
                    out.push(stall_at(out_g, &p, s.span.clone())?);
                }
                continue;
            }
            let (a, b, rev) = if s.from < s.to { (s.from.clone(), s.to.clone(), false) } else { (s.to.clone(), s.from.clone(), true) };
            let mut piece = restrict_route(&m2.routes[e], &a, &b);
            if rev {
                piece = reverse_route(&piece);
            }
            let width = b - a;
            let scale = s.span.clone() / width;
            let mut any_positive = false;
            for p in &mut piece {
                p.span = p.span.clone() * scale.clone();
                any_positive |= p.span.is_positive();
            }
            if !any_positive && s.span.is_positive() {
                // The outer map is constant on this stretch.
                let p = m2.eval(&GraphPoint::on_edge(mid, e, s.from.clone()));
                piece.push(stall_at(out_g, &p, s.span.clone())?);
            }
            out.extend(piece);
        }
        routes.push(out);
    }
    let composed = PLGraphMap {
        domain: m1.domain.clone(),
        codomain: m2.codomain.clone(),
        dom_measure: m1.dom_measure.clone(),
        cod_measure: m2.cod_measure.clone(),
        vertex_images,
        routes,
    };
    composed.validate()?;
    Ok(composed)
}

/// Lower bound for the stretch factor from enumerated curves, with the best curve.
pub fn sf_lower_bound<T: Scalar>(m: &PLGraphMap<T>, max_steps: usize) -> Result<(T, Option<EdgePath>)> {
    let dom = ElasticGraph { graph: m.domain.clone(), alpha: m.dom_measure.clone() };
    let cod = ElasticGraph { graph: m.codomain.clone(), alpha: m.cod_measure.clone() };
    let mut best = T::zero();
    let mut witness = None;
    for cyc in enumerate_cycles(&m.domain, max_steps) {
        let c = MultiCurve { graph: m.domain.clone(), components: vec![Component { weight: T::one(), path: cyc.clone() }] };
        if let Some(r) = curve_ratio(m, &dom, &cod, &c)? {
            if witness.is_none() || r > best {
                best = r;
                witness = Some(cyc);
            }
        }
    }
    Ok((best, witness))
}

/// `EL[m_* C] / EL[C]`, or `None` when `EL[C] = 0`.
pub fn curve_ratio<T: Scalar>(
    m: &PLGraphMap<T>,
    dom: &ElasticGraph<T>,
    cod: &ElasticGraph<T>,
    c: &MultiCurve<T>,
) -> Result<Option<T>> {
    let el = extremal_length(c, dom)?;
    if !el.is_positive() {
        return Ok(None);
    }
    let img = pushforward_curve(m, c)?;
    Ok(Some(extremal_length(&img, cod)? / el))
}

/// Lower bound for the Lipschitz constant from enumerated curves.
pub fn lip_lower_bound<T: Scalar>(m: &PLGraphMap<T>, max_steps: usize) -> Result<(T, Option<EdgePath>)> {
    let dom = LengthGraph { graph: m.domain.clone(), ell: m.dom_measure.clone() };
    let cod = LengthGraph { graph: m.codomain.clone(), ell: m.cod_measure.clone() };
    let mut best = T::zero();
    let mut witness = None;
    for cyc in enumerate_cycles(&m.domain, max_steps) {
        let c = MultiCurve { graph: m.domain.clone(), components: vec![Component { weight: T::one(), path: cyc.clone() }] };
        let l = crate::curves::curve_length(&c, &dom)?;
        if !l.is_positive() {
            continue;
        }
        let img = pushforward_curve(m, &c)?;
        let r = crate::curves::curve_length(&img, &cod)? / l;
        if witness.is_none() || r > best {
            best = r;
            witness = Some(cyc);
        }
    }
    Ok((best, witness))
}

/// Route for an edge given as full traversals, at uniform speed in `measure`
/// (equal spans when the traversed measure is zero).
pub fn uniform_route<T: Scalar>(steps: &[Step], measure: &[T]) -> Vec<Segment<T>> {
    let total = steps.iter().fold(T::zero(), |a, s| a + measure[s.edge].clone());
    let n = T::from_ratio(steps.len() as i64, 1);
    steps
        .iter()
        .map(|s| {
            let span = if total.is_positive() { measure[s.edge].clone() / total.clone() } else { T::one() / n.clone() };
            let (from, to) = match s.dir {
                Dir::Fwd => (T::zero(), T::one()),
                Dir::Rev => (T::one(), T::zero()),
            };
            Segment::new(s.edge, from, to, span)
        })
        .collect()
}

/// Splits a domain edge of a map at parameter `t`; returns the new map on the
/// subdivided domain.
pub fn subdivide_domain<T: Scalar>(m: &PLGraphMap<T>, e: usize, t: T) -> Result<PLGraphMap<T>> {
    let sub = crate::graph::subdivide(&m.domain, e, t.clone())?;
    let mid = m.eval(&GraphPoint::Edge(e, t.clone()));
    let rescale = |r: Vec<Segment<T>>, w: T| -> Result<Vec<Segment<T>>> {
        if r.iter().any(|s| s.span.is_positive()) {
            return Ok(r
                .into_iter()
                .map(|mut s| {
                    s.span = s.span / w.clone();
                    s
                })
                .collect());
        }
        // Constant on this piece apart from jumps: a closing stall takes the whole span.
        let p = r.last().map(|s| s.end(&m.codomain)).unwrap_or_else(|| mid.clone());
        let mut r = r;
        r.push(stall_at(&m.codomain, &p, T::one())?);
        Ok(r)
    };
    let mut routes = m.routes.clone();
    routes[e] = rescale(restrict_route(&m.routes[e], &T::zero(), &t), t.clone())?;
    routes.push(rescale(restrict_route(&m.routes[e], &t, &T::one()), T::one() - t.clone())?);
    let mut vertex_images = m.vertex_images.clone();
    vertex_images.push(mid);
    PLGraphMap::new(
        sub.graph.clone(),
        m.codomain.clone(),
        sub.split_measure(&m.dom_measure),
        m.cod_measure.clone(),
        vertex_images,
        routes,
    )
}

/// Splits a codomain edge at parameter `t`, re-expressing every segment on it.
pub fn subdivide_codomain<T: Scalar>(m: &PLGraphMap<T>, e: usize, t: T) -> Result<PLGraphMap<T>> {
    let sub = crate::graph::subdivide(&m.codomain, e, t.clone())?;
    let second = sub.graph.edge_count() - 1;
    let map_point = |p: &GraphPoint<T>| -> GraphPoint<T> {
        match p {
            GraphPoint::Edge(f, u) if *f == e => {
                if u.near(&t) {
                    GraphPoint::Vertex(sub.new_vertex)
                } else if *u < t {
                    GraphPoint::Edge(e, u.clone() / t.clone())
                } else {
                    GraphPoint::Edge(second, (u.clone() - t.clone()) / (T::one() - t.clone()))
                }
            }
            other => other.clone(),
        }
    };
    let conv = |u: &T| -> (usize, T) {
        if *u <= t {
            (e, u.clone() / t.clone())
        } else {
            (second, (u.clone() - t.clone()) / (T::one() - t.clone()))
        }
    };
    let mut routes = Vec::with_capacity(m.routes.len());
    for route in &m.routes {
        let mut out = Vec::new();
        for s in route {
            if s.edge != e {
                out.push(s.clone());
                continue;
            }
            let crosses = (s.from < t && s.to > t) || (s.from > t && s.to < t);
            if !crosses {
                let mid = if s.from == s.to { s.from.clone() } else { (s.from.clone() + s.to.clone()) / T::from_ratio(2, 1) };
                let side = if mid < t || (mid == t && s.from < t) { e } else { second };
                let fix = |u: &T| if side == e { u.clone() / t.clone() } else { (u.clone() - t.clone()) / (T::one() - t.clone()) };
                out.push(Segment::new(side, fix(&s.from), fix(&s.to), s.span.clone()));
                continue;
            }
            let frac = (t.clone() - s.from.clone()).abs() / s.extent();
            let (e1, f1) = conv(&s.from);
            let (e2, f2) = conv(&s.to);
            let (end1, start2) = if s.from < s.to { (T::one(), T::zero()) } else { (T::zero(), T::one()) };
            out.push(Segment::new(e1, f1, end1, s.span.clone() * frac.clone()));
            out.push(Segment::new(e2, start2, f2, s.span.clone() * (T::one() - frac)));
        }
        routes.push(out);
    }
    PLGraphMap::new(
        m.domain.clone(),
        sub.graph.clone(),
        m.dom_measure.clone(),
        sub.split_measure(&m.cod_measure),
        m.vertex_images.iter().map(map_point).collect(),
        routes,
    )
}
