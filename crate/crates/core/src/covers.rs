//! Combinatorial covering maps of graphs, pullbacks, and iteration of
//! virtual endomorphisms.

use std::collections::HashMap;
use std::sync::Arc;

use crate::curves::{Component, EdgePath, MultiCurve, Step};
use crate::error::{Error, Result};
use crate::graph::{Dir, ElasticGraph, End, Graph, HalfEdge};
use crate::maps::{compose, GraphPoint, PLGraphMap, Segment};
use crate::scalar::Scalar;

/// Default bound on `d^n * |E|` for iterates.
pub const DEFAULT_RESOURCE_CELLS: u128 = 10_000_000;

/// Cell limit, overridable through `ELASTICA_RESOURCE_CELLS`.
pub fn resource_limit() -> u128 {
    std::env::var("ELASTICA_RESOURCE_CELLS")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_RESOURCE_CELLS)
}

/// A covering map given edge by edge: every total edge names the base edge
/// it lies over and whether it runs along or against it.
#[derive(Clone, Debug, PartialEq)]
pub struct CoveringMap {
    pub total: Arc<Graph>,
    pub base: Arc<Graph>,
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<(usize, Dir)>,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverReport {
    pub valid: bool,
    pub degree: Option<usize>,
    pub violations: Vec<String>,
}

impl CoveringMap {
    /// Builds and validates a cover; the degree is inferred.
    pub fn new(total: Arc<Graph>, base: Arc<Graph>, vertex_map: Vec<usize>, edge_map: Vec<(usize, Dir)>) -> Result<Self> {
        let mut c = CoveringMap { total, base, vertex_map, edge_map, degree: 0 };
        let rep = validate_cover(&c);
        if !rep.valid {
            return Err(Error::structural("invalid covering map", rep.violations));
        }
        c.degree = rep.degree.unwrap_or(0);
        Ok(c)
    }

    pub fn identity(g: Arc<Graph>) -> Self {
        CoveringMap {
            total: g.clone(),
            base: g.clone(),
            vertex_map: (0..g.vertex_count()).collect(),
            edge_map: (0..g.edge_count()).map(|e| (e, Dir::Fwd)).collect(),
            degree: 1,
        }
    }

    /// Image of a total half-edge.
    pub fn half_edge(&self, h: HalfEdge) -> HalfEdge {
        let (e, d) = self.edge_map[h.edge];
        HalfEdge::new(e, if d == Dir::Fwd { h.end } else { h.end.other() })
    }

    /// Image of a total point.
    pub fn point<T: Scalar>(&self, p: &GraphPoint<T>) -> GraphPoint<T> {
        match p {
            GraphPoint::Vertex(v) => GraphPoint::Vertex(self.vertex_map[*v]),
            GraphPoint::Edge(e, t) => {
                let (b, d) = self.edge_map[*e];
                GraphPoint::Edge(b, if d == Dir::Fwd { t.clone() } else { T::one() - t.clone() })
            }
        }
    }

    /// Lookup from (total vertex, base half-edge) to the total half-edge over it.
    fn lift_table(&self) -> HashMap<(usize, HalfEdge), HalfEdge> {
        let mut t = HashMap::new();
        for v in 0..self.total.vertex_count() {
            for h in self.total.half_edges_at(v) {
                t.insert((v, self.half_edge(*h)), *h);
            }
        }
        t
    }

    /// Total vertices over each base vertex.
    pub fn vertex_fibers(&self) -> Vec<Vec<usize>> {
        let mut f = vec![Vec::new(); self.base.vertex_count()];
        for (v, &b) in self.vertex_map.iter().enumerate() {
            f[b].push(v);
        }
        f
    }

    /// Total edges over each base edge.
    pub fn edge_fibers(&self) -> Vec<Vec<usize>> {
        let mut f = vec![Vec::new(); self.base.edge_count()];
        for (e, &(b, _)) in self.edge_map.iter().enumerate() {
            f[b].push(e);
        }
        f
    }

    /// Pulls a per-edge quantity back from the base.
    pub fn pull_measure<T: Clone>(&self, values: &[T]) -> Vec<T> {
        self.edge_map.iter().map(|(b, _)| values[*b].clone()).collect()
    }

    /// `self` followed by `below`: total of `self` over base of `below`.
    pub fn then(&self, below: &CoveringMap) -> Result<CoveringMap> {
        if *self.base != *below.total {
            return Err(Error::mismatch("covers do not compose"));
        }
        Ok(CoveringMap {
            total: self.total.clone(),
            base: below.base.clone(),
            vertex_map: self.vertex_map.iter().map(|&v| below.vertex_map[v]).collect(),
            edge_map: self
                .edge_map
                .iter()
                .map(|&(e, d)| {
                    let (b, d2) = below.edge_map[e];
                    (b, d.compose(d2))
                })
                .collect(),
            degree: self.degree * below.degree,
        })
    }
}

/// Checks local bijectivity at every vertex and equal fiber sizes.
pub fn validate_cover(c: &CoveringMap) -> CoverReport {
    let (t, b) = (&c.total, &c.base);
    let mut bad = Vec::new();
    if c.vertex_map.len() != t.vertex_count() || c.edge_map.len() != t.edge_count() {
        return CoverReport { valid: false, degree: None, violations: vec!["labeling size does not match total graph".into()] };
    }
    if c.vertex_map.iter().any(|&v| v >= b.vertex_count()) || c.edge_map.iter().any(|&(e, _)| e >= b.edge_count()) {
        return CoverReport { valid: false, degree: None, violations: vec!["label out of range".into()] };
    }
    for e in 0..t.edge_count() {
        let (be, d) = c.edge_map[e];
        let want_tail = b.step_source(be, d);
        let want_head = b.step_target(be, d);
        if c.vertex_map[t.tail(e)] != want_tail || c.vertex_map[t.head(e)] != want_head {
            bad.push(t.edge_name(e).to_string());
        }
    }
    for v in 0..t.vertex_count() {
        let mut got: Vec<HalfEdge> = t.half_edges_at(v).iter().map(|h| c.half_edge(*h)).collect();
        let mut want: Vec<HalfEdge> = b.half_edges_at(c.vertex_map[v]).to_vec();
        got.sort();
        want.sort();
        if got != want {
            bad.push(t.vertex_name(v).to_string());
        }
    }
    let vf: Vec<usize> = c.vertex_fibers().iter().map(|f| f.len()).collect();
    let ef: Vec<usize> = c.edge_fibers().iter().map(|f| f.len()).collect();
    let d = vf.first().or(ef.first()).copied();
    if let Some(d) = d {
        for (i, n) in vf.iter().enumerate() {
            if *n != d {
                bad.push(b.vertex_name(i).to_string());
            }
        }
        for (i, n) in ef.iter().enumerate() {
            if *n != d {
                bad.push(b.edge_name(i).to_string());
            }
        }
    }
    bad.sort();
    bad.dedup();
    CoverReport { valid: bad.is_empty(), degree: if bad.is_empty() { d } else { None }, violations: bad }
}

/// Elastic weights pulled back to the total graph.
pub fn pullback_elastic<T: Scalar>(c: &CoveringMap, g: &ElasticGraph<T>) -> Result<ElasticGraph<T>> {
    if *g.graph != *c.base {
        return Err(Error::mismatch("elastic graph is not on the cover's base"));
    }
    ElasticGraph::new(c.total.clone(), c.pull_measure(&g.alpha))
}

/// Lifts a base step from a total vertex.
fn lift_step(table: &HashMap<(usize, HalfEdge), HalfEdge>, v: usize, s: Step) -> Step {
    let h = table[&(v, HalfEdge::new(s.edge, s.dir.start()))];
    Step::new(h.edge, Dir::leaving(h.end))
}

/// Full preimage of a multicurve: every closed lift, with the same weight.
pub fn pullback_curve<T: Scalar>(c: &CoveringMap, curve: &MultiCurve<T>) -> Result<MultiCurve<T>> {
    if *curve.graph != *c.base {
        return Err(Error::mismatch("curve is not on the cover's base"));
    }
    let table = c.lift_table();
    let fibers = c.vertex_fibers();
    let mut comps = Vec::new();
    for comp in &curve.components {
        let steps = &comp.path.steps;
        let start = c.base.step_source(steps[0].edge, steps[0].dir);
        let mut seen = vec![false; c.total.vertex_count()];
        for &v0 in &fibers[start] {
            if seen[v0] {
                continue;
            }
            // Follow lifts of the loop until returning to v0.
            let mut lifted = Vec::new();
            let mut v = v0;
            loop {
                seen[v] = true;
                for s in steps {
                    let ls = lift_step(&table, v, *s);
                    v = c.total.step_target(ls.edge, ls.dir);
                    lifted.push(ls);
                }
                if v == v0 {
                    break;
                }
            }
            comps.push(Component { weight: comp.weight.clone(), path: EdgePath::new(lifted) });
        }
    }
    MultiCurve::new(c.total.clone(), comps)
}

/// Label of a point of the cover's total graph, used to name lifted vertices.
fn point_label<T: Scalar>(g: &Graph, p: &GraphPoint<T>) -> String {
    match p {
        GraphPoint::Vertex(v) => g.vertex_name(*v).to_string(),
        GraphPoint::Edge(e, _) => g.edge_name(*e).to_string(),
    }
}

/// Total points over a base point.
fn fiber_points<T: Scalar>(c: &CoveringMap, p: &GraphPoint<T>) -> Vec<GraphPoint<T>> {
    match p {
        GraphPoint::Vertex(v) => c.vertex_fibers()[*v].iter().map(|&u| GraphPoint::Vertex(u)).collect(),
        GraphPoint::Edge(e, t) => c.edge_fibers()[*e]
            .iter()
            .map(|&f| {
                let tt = if c.edge_map[f].1 == Dir::Fwd { t.clone() } else { T::one() - t.clone() };
                GraphPoint::Edge(f, tt)
            })
            .collect(),
    }
}

/// Lifts a route starting at a total point; returns the lifted segments and the end point.
fn lift_route<T: Scalar>(
    c: &CoveringMap,
    table: &HashMap<(usize, HalfEdge), HalfEdge>,
    start: &GraphPoint<T>,
    route: &[Segment<T>],
) -> (Vec<Segment<T>>, GraphPoint<T>) {
    let mut at = start.clone();
    let mut out = Vec::with_capacity(route.len());
    for s in route {
        let (edge, flip) = match &at {
            GraphPoint::Edge(f, _) => (*f, c.edge_map[*f].1 == Dir::Rev),
            GraphPoint::Vertex(v) => {
                let end = if s.from.near(&T::zero()) { End::Tail } else { End::Head };
                let h = table[&(*v, HalfEdge::new(s.edge, end))];
                (h.edge, c.edge_map[h.edge].1 == Dir::Rev)
            }
        };
        let conv = |x: &T| if flip { T::one() - x.clone() } else { x.clone() };
        let ls = Segment::new(edge, conv(&s.from), conv(&s.to), s.span.clone());
        at = ls.end(&c.total);
        out.push(ls);
    }
    (out, at)
}

/// Result of pulling a cover back along a map.
#[derive(Clone, Debug, PartialEq)]
pub struct Pullback<T = f64> {
    /// Cover of the map's domain.
    pub cover: CoveringMap,
    /// Lift of the map into the cover's total graph.
    pub lift: PLGraphMap<T>,
    /// Per new vertex: (domain vertex, label of its lifted image).
    pub provenance: Vec<(usize, String)>,
}

/// Fiber product of `phi` and `c`: a degree-`d` cover of `phi`'s domain and
/// the lift of `phi` to `c`'s total graph, obtained by lifting routes.
pub fn pullback_along_map<T: Scalar>(phi: &PLGraphMap<T>, c: &CoveringMap) -> Result<Pullback<T>> {
    if *phi.codomain != *c.base {
        return Err(Error::mismatch("map codomain is not the cover's base"));
    }
    let dom = &phi.domain;
    let table = c.lift_table();
    let mut names = Vec::new();
    let mut images = Vec::new();
    let mut provenance = Vec::new();
    let mut index: HashMap<(usize, String), usize> = HashMap::new();
    for v in 0..dom.vertex_count() {
        let mut pts = fiber_points(c, &phi.vertex_images[v]);
        pts.sort_by_key(|p| point_label(&c.total, p));
        for p in pts {
            let label = point_label(&c.total, &p);
            index.insert((v, label.clone()), names.len());
            names.push(format!("{}.{}", dom.vertex_name(v), label));
            provenance.push((v, label));
            images.push(p);
        }
    }
    let mut edges = Vec::new();
    let mut routes = Vec::new();
    let mut edge_map = Vec::new();
    for e in 0..dom.edge_count() {
        let (tv, hv) = (dom.tail(e), dom.head(e));
        let mut starts = fiber_points(c, &phi.vertex_images[tv]);
        starts.sort_by_key(|p| point_label(&c.total, p));
        for p in starts {
            let label = point_label(&c.total, &p);
            let (lifted, end) = lift_route(c, &table, &p, &phi.routes[e]);
            let end_label = point_label(&c.total, &end);
            let to = *index
                .get(&(hv, end_label.clone()))
                .ok_or_else(|| Error::Degenerate(format!("lift of {} ends off the fiber", dom.edge_name(e))))?;
            edges.push((format!("{}.{}", dom.edge_name(e), label), index[&(tv, label)], to));
            routes.push(lifted);
            edge_map.push((e, Dir::Fwd));
        }
    }
    let total = Arc::new(Graph::from_indices(names, edges)?);
    let cover = CoveringMap {
        total: total.clone(),
        base: dom.clone(),
        vertex_map: provenance.iter().map(|(v, _)| *v).collect(),
        edge_map,
        degree: c.degree,
    };
    let lift = PLGraphMap::new(
        total,
        c.total.clone(),
        cover.pull_measure(&phi.dom_measure),
        c.pull_measure(&phi.cod_measure),
        images,
        routes,
    )?;
    Ok(Pullback { cover, lift, provenance })
}

/// Cover `pi: X1 -> X0` together with a map `phi: X1 -> X0`.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualEndomorphism<T = f64> {
    pub cover: CoveringMap,
    /// Map from the cover's total graph to its base; its codomain measure is
    /// the elastic structure on the base.
    pub map: PLGraphMap<T>,
}

impl<T: Scalar> VirtualEndomorphism<T> {
    pub fn new(cover: CoveringMap, map: PLGraphMap<T>) -> Result<Self> {
        if *cover.total != *map.domain || *cover.base != *map.codomain {
            return Err(Error::mismatch("cover and map must share domain and codomain"));
        }
        Ok(VirtualEndomorphism { cover, map })
    }

    pub fn base(&self) -> &Arc<Graph> {
        &self.cover.base
    }

    /// Elastic weights on the base.
    pub fn alpha(&self) -> &[T] {
        &self.map.cod_measure
    }

    /// Same combinatorics with new base weights (pulled back to the domain).
    pub fn with_alpha(&self, alpha: Vec<T>) -> Result<Self> {
        let map = self.map.with_measures(self.cover.pull_measure(&alpha), alpha)?;
        Ok(VirtualEndomorphism { cover: self.cover.clone(), map })
    }
}

/// `n`-th iterate of a virtual endomorphism.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateResult<T = f64> {
    pub n: usize,
    pub graph: Arc<Graph>,
    /// Cover `pi_n` of degree `d^n`.
    pub cover: CoveringMap,
    /// Map `phi_n` to the base.
    pub map: PLGraphMap<T>,
    /// Per vertex: the chain of labels from each stage.
    pub provenance: Vec<Vec<String>>,
}

impl<T: Scalar> IterateResult<T> {
    /// The iterate as a virtual endomorphism over the same base.
    pub fn as_endomorphism(&self) -> VirtualEndomorphism<T> {
        VirtualEndomorphism { cover: self.cover.clone(), map: self.map.clone() }
    }
}

/// Builds `X_n`, `pi_n` and `phi_n` recursively: `X_{k+1}` is the pullback
/// of `pi` along `phi_k` and `phi_{k+1} = phi . lift(phi_k)`.
pub fn iterate<T: Scalar>(ve: &VirtualEndomorphism<T>, n: usize) -> Result<IterateResult<T>> {
    if n == 0 {
        return Err(Error::invalid("iterate needs n >= 1"));
    }
    let d = ve.cover.degree as u128;
    let cells = d.checked_pow(n as u32).and_then(|x| x.checked_mul(ve.base().edge_count() as u128)).unwrap_or(u128::MAX);
    let limit = resource_limit();
    if cells > limit {
        return Err(Error::ResourceLimit { cells, limit });
    }
    let g1 = &ve.cover.total;
    let mut cur = IterateResult {
        n: 1,
        graph: g1.clone(),
        cover: ve.cover.clone(),
        map: ve.map.clone(),
        provenance: (0..g1.vertex_count()).map(|v| vec![g1.vertex_name(v).to_string()]).collect(),
    };
    while cur.n < n {
        cur = iterate_step(ve, &cur)?;
    }
    Ok(cur)
}

/// One more stage of the iteration.
pub fn iterate_step<T: Scalar>(ve: &VirtualEndomorphism<T>, cur: &IterateResult<T>) -> Result<IterateResult<T>> {
    let pb = pullback_along_map(&cur.map, &ve.cover)?;
    let map = compose(&ve.map, &pb.lift)?;
    let cover = pb.cover.then(&cur.cover)?;
    let provenance = pb
        .provenance
        .iter()
        .map(|(v, label)| {
            let mut p = cur.provenance[*v].clone();
            p.push(label.clone());
            p
        })
        .collect();
    Ok(IterateResult { n: cur.n + 1, graph: pb.cover.total.clone(), cover, map, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::extremal_length;
    use crate::graph::euler_characteristic;
    use crate::graph::tests::{rose, theta};
    use crate::maps::{dirichlet_energy, embedding_energy, uniform_route};
    use num_rational::BigRational;

    /// Connected double cover of the theta graph: edges a, b lift with
    /// crossing, c lifts straight.
    pub(crate) fn theta_double() -> CoveringMap {
        let base = Arc::new(theta());
        let total = Graph::from_indices(
            vec!["u0".into(), "u1".into(), "w0".into(), "w1".into()],
            vec![
                ("a0".into(), 0, 2),
                ("a1".into(), 1, 3),
                ("b0".into(), 0, 3),
                ("b1".into(), 1, 2),
                ("c0".into(), 0, 2),
                ("c1".into(), 1, 3),
            ],
        )
        .unwrap();
        CoveringMap::new(
            Arc::new(total),
            base,
            vec![0, 0, 1, 1],
            vec![(0, Dir::Fwd), (0, Dir::Fwd), (1, Dir::Fwd), (1, Dir::Fwd), (2, Dir::Fwd), (2, Dir::Fwd)],
        )
        .unwrap()
    }

    /// Connected double cover of a circle with one vertex.
    fn circle_double() -> CoveringMap {
        let base = Arc::new(rose(1));
        let total = Graph::from_indices(vec!["x0".into(), "x1".into()], vec![("p0".into(), 0, 1), ("p1".into(), 1, 0)]).unwrap();
        CoveringMap::new(Arc::new(total), base, vec![0, 0], vec![(0, Dir::Fwd), (0, Dir::Fwd)]).unwrap()
    }

    #[test]
    fn theta_double_cover_valid() {
        let c = theta_double();
        assert_eq!(c.degree, 2);
        assert_eq!(euler_characteristic(&c.total), 2 * euler_characteristic(&c.base));
        let id = CoveringMap::identity(Arc::new(theta()));
        assert_eq!(validate_cover(&id).degree, Some(1));
    }

    #[test]
    fn non_bijective_labeling_rejected() {
        let c = theta_double();
        let mut bad = c.clone();
        bad.edge_map[2] = (0, Dir::Fwd); // b0 now also over a: two a-half-edges at u0
        let rep = validate_cover(&bad);
        assert!(!rep.valid);
        assert!(rep.violations.contains(&"u0".to_string()));
    }

    #[test]
    fn pulled_weights() {
        let c = theta_double();
        let g = ElasticGraph::new(c.base.clone(), vec![1.0, 1.5, 0.5]).unwrap();
        let p = pullback_elastic(&c, &g).unwrap();
        assert_eq!(p.total(), 6.0);
        for e in 0..6 {
            assert_eq!(p.alpha[e], g.alpha[c.edge_map[e].0]);
        }
    }

    #[test]
    fn curve_preimage_el_scales_by_degree() {
        let c = theta_double();
        let q = |a, b| BigRational::from_ratio(a, b);
        let g = ElasticGraph::new(c.base.clone(), vec![q(1, 1), q(2, 3), q(5, 2)]).unwrap();
        let gt = pullback_elastic(&c, &g).unwrap();
        for steps in [
            vec![Step::new(0, Dir::Fwd), Step::new(1, Dir::Rev)],
            vec![Step::new(0, Dir::Fwd), Step::new(2, Dir::Rev)],
            vec![Step::new(0, Dir::Fwd), Step::new(1, Dir::Rev), Step::new(2, Dir::Fwd), Step::new(1, Dir::Rev)],
        ] {
            let cur = MultiCurve::single(c.base.clone(), steps, q(3, 1)).unwrap();
            let pre = pullback_curve(&c, &cur).unwrap();
            assert_eq!(extremal_length(&pre, &gt).unwrap(), extremal_length(&cur, &g).unwrap() * q(2, 1));
        }
    }

    #[test]
    fn identity_pullback_is_the_cover() {
        let c = theta_double();
        let id = PLGraphMap::identity(c.base.clone(), vec![1.0; 3]);
        let pb = pullback_along_map(&id, &c).unwrap();
        assert_eq!(pb.cover.total.vertex_count(), 4);
        assert_eq!(pb.cover.total.edge_count(), 6);
        assert!(validate_cover(&pb.cover).valid);
        // the lift is an isomorphism onto the total graph
        assert_eq!(embedding_energy(&pb.lift), 1.0);
        let mut hit = vec![0; 6];
        for r in &pb.lift.routes {
            hit[r[0].edge] += 1;
        }
        assert!(hit.iter().all(|&h| h == 1));
    }

    #[test]
    fn pullback_monodromy() {
        // Domain circle mapped k times around; monodromy of the double cover is
        // the transposition to the k-th power: two components for even k.
        let c = circle_double();
        for k in 1..=4usize {
            let dom = Arc::new(rose(1));
            let steps = vec![Step::new(0, Dir::Fwd); k];
            let phi = PLGraphMap::new(dom, c.base.clone(), vec![1.0], vec![1.0], vec![GraphPoint::Vertex(0)], vec![uniform_route(&steps, &[1.0])])
                .unwrap();
            let pb = pullback_along_map(&phi, &c).unwrap();
            let comps = pb.cover.total.components().len();
            let sign_oracle = if k % 2 == 0 { 2 } else { 1 };
            assert_eq!(comps, sign_oracle, "k = {k}");
            assert!(validate_cover(&pb.cover).valid);
        }
        // A null-homotopic route (there and back) pulls back to two copies.
        let dom = Arc::new(rose(1));
        let back = vec![Segment::new(0, 0.0, 0.5, 0.5), Segment::new(0, 0.5, 0.0, 0.5)];
        let phi = PLGraphMap::new(dom, c.base.clone(), vec![1.0], vec![1.0], vec![GraphPoint::Vertex(0)], vec![back]).unwrap();
        let pb = pullback_along_map(&phi, &c).unwrap();
        assert_eq!(pb.cover.total.components().len(), 2);
    }

    #[test]
    fn degree_one_iteration_is_ordinary() {
        let g = Arc::new(rose(1));
        let phi = PLGraphMap::new(
            g.clone(),
            g.clone(),
            vec![1.0],
            vec![1.0],
            vec![GraphPoint::Vertex(0)],
            vec![uniform_route(&[Step::new(0, Dir::Fwd), Step::new(0, Dir::Fwd)], &[1.0])],
        )
        .unwrap();
        let ve = VirtualEndomorphism::new(CoveringMap::identity(g.clone()), phi.clone()).unwrap();
        let it = iterate(&ve, 3).unwrap();
        assert_eq!(it.graph.vertex_count(), 1);
        assert_eq!(it.provenance[0], vec!["o", "o", "o"]);
        assert!((embedding_energy(&it.map) - 64.0).abs() < 1e-9);
        assert!((dirichlet_energy(&it.map) - 64.0).abs() < 1e-9);
    }

    #[test]
    fn iterate_degrees_and_characteristic() {
        // Self-cover of a circle of degree 2 composed with the identity map.
        let c = circle_double();
        let phi = PLGraphMap::new(
            c.total.clone(),
            c.base.clone(),
            vec![1.0, 1.0],
            vec![1.0],
            vec![GraphPoint::Vertex(0), GraphPoint::Edge(0, 0.5)],
            vec![vec![Segment::new(0, 0.0, 0.5, 1.0)], vec![Segment::new(0, 0.5, 1.0, 1.0)]],
        )
        .unwrap();
        let ve = VirtualEndomorphism::new(c.clone(), phi).unwrap();
        for n in 1..=4 {
            let it = iterate(&ve, n).unwrap();
            assert_eq!(it.cover.degree, 1 << n);
            assert!(validate_cover(&it.cover).valid);
            assert_eq!(euler_characteristic(&it.graph), 0);
            assert_eq!(it.graph.edge_count(), 1 << n);
            // phi_n wraps a circle of total weight 2^n once around a unit circle
            assert!((embedding_energy(&it.map) - 0.5f64.powi(n as i32)).abs() < 1e-9);
        }
    }

    #[test]
    fn resource_guard() {
        let c = circle_double();
        let phi = PLGraphMap::new(
            c.total.clone(),
            c.base.clone(),
            vec![1.0, 1.0],
            vec![1.0],
            vec![GraphPoint::Vertex(0), GraphPoint::Edge(0, 0.5)],
            vec![vec![Segment::new(0, 0.0, 0.5, 1.0)], vec![Segment::new(0, 0.5, 1.0, 1.0)]],
        )
        .unwrap();
        let ve = VirtualEndomorphism::new(c, phi).unwrap();
        assert!(matches!(iterate(&ve, 40), Err(Error::ResourceLimit { .. })));
    }
}
