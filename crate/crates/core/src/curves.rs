//! Weighted closed curves on graphs, their lengths and extremal lengths.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{Dir, ElasticGraph, Graph, HalfEdge, LengthGraph};
use crate::scalar::Scalar;

/// One traversal of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub edge: usize,
    pub dir: Dir,
}

impl Step {
    pub fn new(edge: usize, dir: Dir) -> Self {
        Step { edge, dir }
    }

    pub fn reverse(self) -> Step {
        Step { edge: self.edge, dir: self.dir.reverse() }
    }

    /// Whether `next` immediately undoes `self`.
    pub fn cancels(self, next: Step) -> bool {
        self.edge == next.edge && self.dir != next.dir
    }

    /// Half-edge through which the step leaves its source.
    pub fn out_half_edge(self) -> HalfEdge {
        HalfEdge::new(self.edge, self.dir.start())
    }

    /// Half-edge through which the step enters its target.
    pub fn in_half_edge(self) -> HalfEdge {
        HalfEdge::new(self.edge, self.dir.finish())
    }
}

/// Cyclic edge path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgePath {
    pub steps: Vec<Step>,
}

impl EdgePath {
    pub fn new(steps: Vec<Step>) -> Self {
        EdgePath { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn reversed(&self) -> EdgePath {
        EdgePath { steps: reverse_steps(&self.steps) }
    }

    /// Checks that consecutive steps meet, cyclically.
    pub fn check_closed(&self, g: &Graph) -> Result<()> {
        check_cyclic(g, &self.steps)
    }

    /// Cyclically reduced form (free homotopy class representative).
    pub fn tauten(&self) -> EdgePath {
        EdgePath { steps: tauten_cyclic(&self.steps) }
    }

    pub fn is_taut(&self) -> bool {
        let n = self.steps.len();
        (0..n).all(|i| !self.steps[i].cancels(self.steps[(i + 1) % n]))
    }

    /// Least rotation, then the lesser of it and its reversed least rotation.
    pub fn canonical(&self) -> EdgePath {
        canonical_cycle(&self.steps)
    }

    /// `(root, k)` with `self = root^k` and `root` primitive.
    pub fn primitive_root(&self) -> (EdgePath, usize) {
        let n = self.steps.len();
        for p in 1..=n {
            if n % p == 0 && (p..n).all(|i| self.steps[i] == self.steps[i - p]) {
                return (EdgePath { steps: self.steps[..p].to_vec() }, n / p);
            }
        }
        (self.clone(), 1)
    }

    pub fn format(&self, g: &Graph) -> String {
        self.steps.iter().map(|s| format!("{}{}", g.edge_name(s.edge), s.dir.symbol())).collect::<Vec<_>>().join(" ")
    }
}

pub fn reverse_steps(steps: &[Step]) -> Vec<Step> {
    steps.iter().rev().map(|s| s.reverse()).collect()
}

fn check_cyclic(g: &Graph, steps: &[Step]) -> Result<()> {
    let n = steps.len();
    for i in 0..n {
        let a = steps[i];
        let b = steps[(i + 1) % n];
        if a.edge >= g.edge_count() || b.edge >= g.edge_count() {
            return Err(Error::invalid("step references unknown edge"));
        }
        if g.step_target(a.edge, a.dir) != g.step_source(b.edge, b.dir) {
            return Err(Error::structural(
                "non-incident consecutive steps",
                [format!("{}{} -> {}{}", g.edge_name(a.edge), a.dir.symbol(), g.edge_name(b.edge), b.dir.symbol())],
            ));
        }
    }
    Ok(())
}

/// Free reduction of a path with fixed ends.
pub fn reduce_path(steps: &[Step]) -> Vec<Step> {
    let mut out: Vec<Step> = Vec::with_capacity(steps.len());
    for &s in steps {
        if out.last().is_some_and(|l| l.cancels(s)) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

/// Free then cyclic reduction.
pub fn tauten_cyclic(steps: &[Step]) -> Vec<Step> {
    let reduced = reduce_path(steps);
    let mut lo = 0;
    let mut hi = reduced.len();
    while hi - lo >= 2 && reduced[hi - 1].cancels(reduced[lo]) {
        lo += 1;
        hi -= 1;
    }
    reduced[lo..hi].to_vec()
}

fn least_rotation(steps: &[Step]) -> Vec<Step> {
    let n = steps.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best = 0;
    for r in 1..n {
        let cmp = (0..n).map(|i| steps[(r + i) % n].cmp(&steps[(best + i) % n])).find(|c| *c != Ordering::Equal);
        if cmp == Some(Ordering::Less) {
            best = r;
        }
    }
    (0..n).map(|i| steps[(best + i) % n]).collect()
}

fn canonical_cycle(steps: &[Step]) -> EdgePath {
    let a = least_rotation(steps);
    let b = least_rotation(&reverse_steps(steps));
    EdgePath { steps: if b < a { b } else { a } }
}

/// Weighted component of a multicurve.
#[derive(Clone, Debug, PartialEq)]
pub struct Component<T = f64> {
    pub weight: T,
    pub path: EdgePath,
}

/// Weighted union of closed curves on a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiCurve<T = f64> {
    pub graph: Arc<Graph>,
    pub components: Vec<Component<T>>,
}

impl<T: Scalar> MultiCurve<T> {
    /// Validates incidence and positive weights, then tautens: components that
    /// reduce to nothing are dropped, the rest are put in canonical form and
    /// identical ones merged.
    pub fn new(graph: Arc<Graph>, components: Vec<Component<T>>) -> Result<Self> {
        for c in &components {
            if !c.weight.is_positive() {
                return Err(Error::invalid("curve weights must be positive"));
            }
            c.path.check_closed(&graph)?;
        }
        Ok(MultiCurve { graph, components }.tauten())
    }

    pub fn single(graph: Arc<Graph>, steps: Vec<Step>, weight: T) -> Result<Self> {
        MultiCurve::new(graph, vec![Component { weight, path: EdgePath::new(steps) }])
    }

    pub fn tauten(&self) -> Self {
        let mut merged: BTreeMap<EdgePath, T> = BTreeMap::new();
        for c in &self.components {
            let t = c.path.tauten();
            if t.is_empty() {
                continue;
            }
            let key = t.canonical();
            let w = merged.remove(&key).map(|w| w + c.weight.clone()).unwrap_or_else(|| c.weight.clone());
            merged.insert(key, w);
        }
        MultiCurve {
            graph: self.graph.clone(),
            components: merged.into_iter().map(|(path, weight)| Component { weight, path }).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `n_C(e)`: weighted traversal counts of the taut form.
    pub fn counts(&self) -> Vec<T> {
        let mut n = vec![T::zero(); self.graph.edge_count()];
        for c in &self.components {
            for s in &c.path.steps {
                n[s.edge] = n[s.edge].clone() + c.weight.clone();
            }
        }
        n
    }

    /// Same components with every weight multiplied by `a`.
    pub fn scaled(&self, a: T) -> Self {
        MultiCurve {
            graph: self.graph.clone(),
            components: self
                .components
                .iter()
                .map(|c| Component { weight: c.weight.clone() * a.clone(), path: c.path.clone() })
                .collect(),
        }
    }

    pub fn map_weights<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MultiCurve<U> {
        MultiCurve {
            graph: self.graph.clone(),
            components: self.components.iter().map(|c| Component { weight: f(&c.weight), path: c.path.clone() }).collect(),
        }
    }
}

fn same_graph(a: &Graph, b: &Graph) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::mismatch("curve and decoration live on different graphs"))
    }
}

/// `l[C] = sum n_C(e) l(e)`.
pub fn curve_length<T: Scalar>(c: &MultiCurve<T>, k: &LengthGraph<T>) -> Result<T> {
    same_graph(&c.graph, &k.graph)?;
    Ok(c.counts().into_iter().zip(&k.ell).fold(T::zero(), |acc, (n, l)| acc + n * l.clone()))
}

/// `EL[C] = sum n_C(e)^2 alpha(e)`.
pub fn extremal_length<T: Scalar>(c: &MultiCurve<T>, g: &ElasticGraph<T>) -> Result<T> {
    same_graph(&c.graph, &g.graph)?;
    Ok(el_of_counts(&c.counts(), &g.alpha))
}

/// `sum n(e)^2 alpha(e)` for an arbitrary count (or width) vector.
pub fn el_of_counts<T: Scalar>(n: &[T], alpha: &[T]) -> T {
    n.iter().zip(alpha).fold(T::zero(), |acc, (n, a)| acc + n.clone() * n.clone() * a.clone())
}

/// Scaling `rho` witnessing the extremal length.
#[derive(Clone, Debug, PartialEq)]
pub struct ELWitness<T = f64> {
    pub rho: Vec<T>,
    pub ratio: T,
}

/// `l_{rho alpha}[C]^2 / Area_{rho alpha}`: the curve length in the metric
/// `rho * alpha`, squared, over the area `sum rho^2 alpha`.
pub fn rho_ratio<T: Scalar>(c: &MultiCurve<T>, g: &ElasticGraph<T>, rho: &[T]) -> Result<T> {
    same_graph(&c.graph, &g.graph)?;
    let n = c.counts();
    let mut len = T::zero();
    let mut area = T::zero();
    for e in 0..n.len() {
        len = len + n[e].clone() * rho[e].clone() * g.alpha[e].clone();
        area = area + rho[e].clone() * rho[e].clone() * g.alpha[e].clone();
    }
    if !area.is_positive() {
        return Err(Error::Degenerate("metric with zero area".into()));
    }
    Ok(len.clone() * len / area)
}

/// The optimal `rho = n_C` and its ratio.
pub fn el_witness<T: Scalar>(c: &MultiCurve<T>, g: &ElasticGraph<T>) -> Result<ELWitness<T>> {
    if c.is_empty() {
        return Err(Error::invalid("empty curve has no witness"));
    }
    let rho = c.counts();
    let ratio = rho_ratio(c, g, &rho)?;
    Ok(ELWitness { rho, ratio })
}

/// All primitive taut cycles with at most `max_steps` steps, one per class
/// under rotation and reversal, sorted by length then canonical form.
pub fn enumerate_cycles(g: &Graph, max_steps: usize) -> Vec<EdgePath> {
    let mut found = std::collections::BTreeSet::new();
    let mut path = Vec::with_capacity(max_steps);
    for e in 0..g.edge_count() {
        for d in [Dir::Fwd, Dir::Rev] {
            let s = Step::new(e, d);
            path.clear();
            path.push(s);
            extend_cycles(g, max_steps, g.step_source(e, d), &mut path, &mut found);
        }
    }
    let mut out: Vec<EdgePath> = found.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn extend_cycles(
    g: &Graph,
    max_steps: usize,
    origin: usize,
    path: &mut Vec<Step>,
    found: &mut std::collections::BTreeSet<EdgePath>,
) {
    let last = *path.last().expect("non-empty");
    let here = g.step_target(last.edge, last.dir);
    if here == origin && !last.cancels(path[0]) {
        let p = EdgePath::new(path.clone());
        if p.primitive_root().1 == 1 {
            // Only record from the minimal starting step to save work.
            let c = p.canonical();
            found.insert(c);
        }
    }
    if path.len() == max_steps {
        return;
    }
    for h in g.half_edges_at(here) {
        let s = Step::new(h.edge, h.outgoing());
        if last.cancels(s) || s < path[0] {
            continue;
        }
        path.push(s);
        extend_cycles(g, max_steps, origin, path, found);
        path.pop();
    }
}

/// Integer multicurve approximating a width profile.
///
/// Widths are scaled so the largest becomes `resolution`, rounded, doubled
/// (so every vertex sees an even number of strands) and the strands are
/// paired at each vertex without pairing two strands of the same end.
/// Returns `None` when a vertex violates the triangle inequality after
/// rounding or the profile is zero.
pub fn curve_from_widths<T: Scalar>(g: &Arc<Graph>, w: &[f64], resolution: u32) -> Option<MultiCurve<T>> {
    let max = w.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 || !max.is_finite() {
        return None;
    }
    let mut n: Vec<usize> = w.iter().map(|x| 2 * ((x / max) * resolution as f64).round().max(0.0) as usize).collect();
    // Rounding can break the triangle inequality at a vertex; trim the
    // largest count there until it holds everywhere.
    loop {
        let mut changed = false;
        for v in 0..g.vertex_count() {
            let hs = g.half_edges_at(v);
            let total: usize = hs.iter().map(|h| n[h.edge]).sum();
            if let Some(top) = hs.iter().max_by_key(|h| n[h.edge]) {
                let big = n[top.edge];
                if 2 * big > total && !g.is_loop(top.edge) {
                    let excess = 2 * big - total;
                    n[top.edge] = big - excess.min(big);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    curve_from_counts(g, &n).map(|c| c.map_weights(|x: &f64| T::from_f64(*x)))
}

/// Multicurve whose counts are exactly `n` (each vertex total must be even and
/// satisfy the triangle inequality per end).
pub fn curve_from_counts(g: &Arc<Graph>, n: &[usize]) -> Option<MultiCurve<f64>> {
    // partner[(half-edge, strand index)] = (half-edge, strand index) at the same vertex
    let mut partner: std::collections::HashMap<(HalfEdge, usize), (HalfEdge, usize)> = Default::default();
    for v in 0..g.vertex_count() {
        let mut pools: Vec<(HalfEdge, usize)> = g.half_edges_at(v).iter().map(|h| (*h, n[h.edge])).collect();
        let total: usize = pools.iter().map(|p| p.1).sum();
        if total % 2 == 1 {
            return None;
        }
        let mut next_index: std::collections::HashMap<HalfEdge, usize> = Default::default();
        loop {
            pools.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            if pools.is_empty() || pools[0].1 == 0 {
                break;
            }
            if pools.len() < 2 || pools[1].1 == 0 {
                return None;
            }
            let (h1, h2) = (pools[0].0, pools[1].0);
            pools[0].1 -= 1;
            pools[1].1 -= 1;
            let i1 = next_index.entry(h1).or_insert(0);
            let s1 = (h1, *i1);
            *i1 += 1;
            let i2 = next_index.entry(h2).or_insert(0);
            let s2 = (h2, *i2);
            *i2 += 1;
            partner.insert(s1, s2);
            partner.insert(s2, s1);
        }
    }
    // Strand k of edge e runs from (e,tail,k) to (e,head,k).
    let mut used = std::collections::HashSet::new();
    let mut comps = Vec::new();
    let limit = n.iter().sum::<usize>() + 1;
    for e in 0..g.edge_count() {
        for k in 0..n[e] {
            let start = (HalfEdge::new(e, crate::graph::End::Tail), k);
            if used.contains(&start) {
                continue;
            }
            let mut steps = Vec::new();
            let mut cur = start;
            loop {
                used.insert(cur);
                let (h, idx) = cur;
                steps.push(Step::new(h.edge, h.outgoing()));
                let arrive = (h.opposite(), idx);
                used.insert(arrive);
                cur = partner[&arrive];
                if cur == start {
                    break;
                }
                if steps.len() > limit {
                    return None;
                }
            }
            comps.push(Component { weight: 1.0, path: EdgePath::new(steps) });
        }
    }
    MultiCurve::new(g.clone(), comps).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{rose, theta};
    use num_rational::BigRational;

    fn q(p: i64, r: i64) -> BigRational {
        BigRational::from_ratio(p, r)
    }

    fn st(e: usize, fwd: bool) -> Step {
        Step::new(e, if fwd { Dir::Fwd } else { Dir::Rev })
    }

    #[test]
    fn tauten_examples() {
        let p = EdgePath::new(vec![st(0, true), st(0, false), st(1, true), st(1, false)]);
        assert!(p.tauten().is_empty());
        let p = EdgePath::new(vec![st(0, true), st(1, true), st(1, false), st(2, true)]);
        assert_eq!(p.tauten().steps, vec![st(0, true), st(2, true)]);
        let p = EdgePath::new(vec![st(0, true), st(1, true)]);
        assert_eq!(p.tauten(), p);
        // cyclic cancellation
        let p = EdgePath::new(vec![st(1, false), st(0, true), st(1, true)]);
        assert_eq!(p.tauten().steps, vec![st(0, true)]);
    }

    #[test]
    fn canonical_handles_rotation_and_reversal() {
        let a = EdgePath::new(vec![st(1, true), st(0, true)]);
        let b = EdgePath::new(vec![st(0, false), st(1, false)]);
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.canonical().steps, vec![st(0, true), st(1, true)]);
    }

    #[test]
    fn lengths_and_extremal_lengths() {
        let g = Arc::new(rose(2));
        let loop_a = MultiCurve::single(g.clone(), vec![st(0, true)], q(1, 1)).unwrap();
        let k = LengthGraph::new(g.clone(), vec![q(2, 1), q(2, 1)]).unwrap();
        assert_eq!(curve_length(&loop_a, &k).unwrap(), q(2, 1));
        assert_eq!(curve_length(&loop_a.scaled(q(3, 1)), &k).unwrap(), q(6, 1));
        let fig8 = MultiCurve::single(g.clone(), vec![st(0, true), st(1, true)], q(1, 1)).unwrap();
        let k2 = LengthGraph::new(g.clone(), vec![q(1, 1), q(2, 1)]).unwrap();
        assert_eq!(curve_length(&fig8, &k2).unwrap(), q(3, 1));

        let el = ElasticGraph::new(g.clone(), vec![q(5, 1), q(3, 1)]).unwrap();
        assert_eq!(extremal_length(&loop_a, &el).unwrap(), q(5, 1));
        assert_eq!(extremal_length(&loop_a.scaled(q(2, 1)), &el).unwrap(), q(20, 1));
        let el2 = ElasticGraph::new(g.clone(), vec![q(1, 1), q(3, 1)]).unwrap();
        let c = MultiCurve::single(g, vec![st(0, true), st(0, true), st(1, true)], q(1, 1)).unwrap();
        assert_eq!(extremal_length(&c, &el2).unwrap(), q(7, 1));
    }

    #[test]
    fn witness_is_optimal() {
        let g = Arc::new(rose(2));
        let el = ElasticGraph::new(g.clone(), vec![1.0, 1.0]).unwrap();
        let c = MultiCurve::single(g.clone(), vec![st(0, true), st(0, true), st(1, true)], 1.0).unwrap();
        let w = el_witness(&c, &el).unwrap();
        assert_eq!(w.rho, vec![2.0, 1.0]);
        assert!((w.ratio - 5.0).abs() < 1e-12);
        let mut best: f64 = 0.0;
        for i in 1..=40 {
            let rho = [i as f64 / 10.0, 1.0];
            let r = rho_ratio(&c, &el, &rho).unwrap();
            assert!(r <= w.ratio + 1e-12);
            best = best.max(r);
        }
        assert!((best - w.ratio).abs() < 1e-12);
        let uniform = rho_ratio(&c, &el, &[1.0, 1.0]).unwrap();
        assert!(uniform < w.ratio);
        let single = MultiCurve::single(g, vec![st(1, true)], 1.0).unwrap();
        let w = el_witness(&single, &el).unwrap();
        assert_eq!(w.rho, vec![0.0, 1.0]);
        assert_eq!(w.ratio, 1.0);
    }

    #[test]
    fn enumerate_small_graphs() {
        assert_eq!(enumerate_cycles(&rose(1), 3).len(), 1);
        let t = enumerate_cycles(&theta(), 2);
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|c| c.len() == 2));
        let r = enumerate_cycles(&rose(2), 2);
        let shown: Vec<String> = r.iter().map(|c| c.format(&rose(2))).collect();
        assert_eq!(shown, vec!["p0+", "p1+", "p0+ p1+", "p0+ p1-"]);
    }

    #[test]
    fn zero_weight_rejected() {
        let g = Arc::new(rose(1));
        assert!(MultiCurve::single(g, vec![st(0, true)], 0.0).is_err());
    }

    #[test]
    fn non_incident_rejected() {
        let g = Arc::new(crate::graph::Graph::from_indices(
            vec!["a".into(), "b".into()],
            vec![("x".into(), 0, 0), ("y".into(), 1, 1)],
        ).unwrap());
        assert!(MultiCurve::single(g, vec![st(0, true), st(1, true)], 1.0).is_err());
    }

    #[test]
    fn identical_components_merge() {
        let g = Arc::new(rose(2));
        let c = MultiCurve::new(
            g,
            vec![
                Component { weight: 1.0, path: EdgePath::new(vec![st(0, true), st(1, true)]) },
                Component { weight: 2.0, path: EdgePath::new(vec![st(1, false), st(0, false)]) },
            ],
        )
        .unwrap();
        assert_eq!(c.components.len(), 1);
        assert_eq!(c.components[0].weight, 3.0);
    }

    #[test]
    fn counts_realised_as_curves() {
        let g = Arc::new(theta());
        let c = curve_from_counts(&g, &[2, 2, 2]).unwrap();
        assert_eq!(c.counts(), vec![2.0, 2.0, 2.0]);
        assert!(curve_from_counts(&g, &[1, 1, 3]).is_none());
        let r = Arc::new(rose(2));
        let c = curve_from_counts(&r, &[2, 4]).unwrap();
        assert_eq!(c.counts(), vec![2.0, 4.0]);
    }
}
