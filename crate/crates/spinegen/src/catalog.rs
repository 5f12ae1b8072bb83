//! The example spines: maps, punctures, spine polylines and dual arcs.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;

use elastica::covers::{CoveringMap, VirtualEndomorphism};
use elastica::graph::{Dir, Graph};
use elastica::maps::{GraphPoint, PLGraphMap, Segment};
use elastica::Result;

use crate::lift::{FormalMating, QuadMobius};
use crate::spine::{build, Lifted, Spine, SpineEdge};

const FAR: f64 = 1e4;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn edge(name: &str, tail: usize, head: usize, via: Vec<C>) -> SpineEdge {
    SpineEdge { name: name.into(), tail, head, via }
}

/// Theta graph with vertices `n`, `s` and edges `l`, `m`, `r` crossing the
/// real axis at `xl < xm < xr`; punctures sit in the two bounded faces and
/// at infinity, joined by dual arcs along the real axis.
fn theta(xl: f64, xm: f64, xr: f64, p_left: f64, p_right: f64) -> Spine {
    let n = c(0.5 * (xm + 0.013), 0.9);
    let s = c(0.5 * (xm - 0.021), -0.9);
    Spine {
        vertices: vec![("n".into(), n), ("s".into(), s)],
        edges: vec![
            edge("l", 0, 1, vec![c(xl, 0.0137)]),
            edge("m", 0, 1, vec![c(xm, -0.0113)]),
            edge("r", 0, 1, vec![c(xr, 0.0071)]),
        ],
        duals: vec![
            vec![c(p_left, 0.0), c(-FAR, 0.37)],
            vec![c(p_left, 0.0), c(p_right, 0.0)],
            vec![c(p_right, 0.0), c(FAR, -0.29)],
        ],
        punctures: vec![c(p_left, 0.0), c(p_right, 0.0)],
    }
}

/// `1/(1 - z^2)` with marked points `0 -> 1 -> inf -> 0`.
pub fn three_point() -> Result<Lifted> {
    let f = QuadMobius { a: c(0.0, 0.0), b: c(1.0, 0.0), c: c(-1.0, 0.0), d: c(1.0, 0.0) };
    build(&f, &theta(-0.6, 0.5, 1.6, 0.0, 1.0))
}

/// `(1 + z^2)/(1 - z^2)` with marked points `1 -> inf -> -1 -> inf`.
pub fn asf_bad() -> Result<Lifted> {
    let f = QuadMobius { a: c(1.0, 0.0), b: c(1.0, 0.0), c: c(-1.0, 0.0), d: c(1.0, 0.0) };
    build(&f, &theta(-1.6, 0.011, 1.6, -1.0, 1.0))
}

/// Rabbit parameter: the root of `c^3 + 2c^2 + c + 1` with positive imaginary part.
pub fn rabbit_c() -> C {
    let mut z = c(-0.1226, 0.7449);
    for _ in 0..50 {
        let p = ((z + 2.0) * z + 1.0) * z + 1.0;
        let dp = (3.0 * z + 4.0) * z + 1.0;
        z -= p / dp;
    }
    z
}

/// Loop at `o` around `p` of radius `r`, leaving towards `p` on one side and
/// returning on the other.
fn petal(o: C, p: C, r: f64, k: usize) -> Vec<C> {
    let phi = (o - p).arg();
    let mut via = Vec::new();
    for j in 0..=k {
        let a = phi - 0.5 - (2.0 * PI - 1.0) * j as f64 / k as f64;
        via.push(p + C::from_polar(r, a));
    }
    via
}

fn ray(p: C, from: C, twist: f64) -> Vec<C> {
    let d = (p - from) / (p - from).norm() * C::from_polar(1.0, twist);
    vec![p, p + d * FAR]
}

/// Rose with one petal around each point of the rabbit's critical cycle.
pub fn rabbit() -> Result<Lifted> {
    let cc = rabbit_c();
    let pts = [c(0.0, 0.0), cc, cc * cc + cc];
    let o = (pts[0] + pts[1] + pts[2]) / 3.0 + c(0.0031, -0.0017);
    let names = ["e0", "e1", "e2"];
    let spine = Spine {
        vertices: vec![("o".into(), o)],
        edges: (0..3).map(|k| edge(names[k], 0, 0, petal(o, pts[k], 0.12, 24))).collect(),
        duals: (0..3).map(|k| ray(pts[k], o, 0.013)).collect(),
        punctures: pts.to_vec(),
    };
    build(&QuadMobius::polynomial(cc), &spine)
}

/// `z^2 + i`: a tripod from the fixed point `alpha` to the three marked
/// points, with a small loop around each of them.
pub fn z2_plus_i() -> Result<Lifted> {
    let i = c(0.0, 1.0);
    let pts = [i, c(-1.0, 1.0), -i];
    let alpha = (c(1.0, 0.0) - (c(1.0, 0.0) - 4.0 * i).sqrt()) / 2.0;
    let o = alpha + c(0.0023, 0.0011);
    let r = 0.12;
    let mut vertices = vec![("o".to_string(), o)];
    let mut edges = Vec::new();
    let mut duals = Vec::new();
    for (k, p) in pts.iter().enumerate() {
        let dir = (o - p) / (o - p).norm();
        let leaf = p + dir * r;
        vertices.push((format!("x{}", k + 1), leaf));
        edges.push(edge(&format!("l{}", k + 1), 0, k + 1, vec![]));
        let phi = dir.arg();
        let via = (1..24).map(|j| p + C::from_polar(r, phi + 2.0 * PI * j as f64 / 24.0)).collect();
        edges.push(edge(&format!("c{}", k + 1), k + 1, k + 1, via));
    }
    for (k, p) in pts.iter().enumerate() {
        let leaf = vertices[k + 1].1;
        // leg dual: a line across the middle of the leg
        let mid = (o + leaf) / 2.0;
        let n = (leaf - o) * c(0.0, 1.0) / (leaf - o).norm() * C::from_polar(1.0, 0.011);
        duals.push((2 * k, vec![mid - n * FAR, mid + n * FAR]));
        duals.push((2 * k + 1, ray(*p, o, 0.017)));
    }
    duals.sort_by_key(|d| d.0);
    let spine = Spine { vertices, edges, duals: duals.into_iter().map(|d| d.1).collect(), punctures: pts.to_vec() };
    build(&QuadMobius::polynomial(i), &spine)
}

fn arc(a0: f64, a1: f64, steps: usize) -> Vec<C> {
    (1..steps).map(|j| C::from_polar(1.0, a0 + (a1 - a0) * j as f64 / steps as f64)).collect()
}

/// Formal mating of the basilica with itself: the equator, cut at the
/// landing angles 1/3 and 2/3 of the rays at the basilica's alpha fixed
/// point, with one chord in each hemisphere separating that polynomial's
/// two marked points.
pub fn basilica_mating() -> Result<Lifted> {
    let f = FormalMating { c1: c(-1.0, 0.0), c2: c(-1.0, 0.0) };
    let (ta, tc) = (2.0 * PI / 3.0, 4.0 * PI / 3.0);
    let p_in0 = FormalMating::inner(c(0.0, 0.0));
    let p_in1 = FormalMating::inner(c(-1.0, 0.0));
    let p_out1 = FormalMating::outer(c(-1.0, 0.0));
    let spine = Spine {
        vertices: vec![("A".into(), C::from_polar(1.0, ta)), ("C".into(), C::from_polar(1.0, tc))],
        edges: vec![
            edge("a1", 1, 0, arc(tc - 2.0 * PI, ta, 48)),
            edge("a2", 0, 1, arc(ta, tc, 24)),
            edge("h1", 0, 1, vec![c(-0.3, 0.013)]),
            edge("h2", 0, 1, vec![c(-1.5, 1.4), c(-3.0, 0.01), c(-1.5, -1.4)]),
        ],
        duals: vec![
            vec![p_in0, c(FAR, 0.2)],
            vec![p_in1, p_out1],
            vec![p_in0, p_in1],
            vec![p_out1, c(-FAR, 0.1)],
        ],
        punctures: vec![p_in0, p_in1, p_out1],
    };
    build(&f, &spine)
}

/// Blow-up of the identity along the `k` edges of a tree: the base is a
/// rose with `k` petals, the cover has a main sheet and one sheet per petal,
/// and the map folds each extra sheet onto the middle of its petal.
pub fn slit(k: usize) -> Result<VirtualEndomorphism<f64>> {
    let base = Arc::new(Graph::from_indices(
        vec!["o".into()],
        (1..=k).map(|i| (format!("e{i}"), 0, 0)).collect(),
    )?);
    let mut vertices = vec!["m".to_string()];
    vertices.extend((1..=k).map(|i| format!("c{i}")));
    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    let mut routes = Vec::new();
    let half = 0.5;
    for i in 1..=k {
        let e = i - 1;
        edges.push((format!("e{i}m"), 0, i));
        edge_map.push((e, Dir::Fwd));
        routes.push(vec![Segment::new(e, 0.0, half, 1.0)]);
        edges.push((format!("e{i}c"), i, 0));
        edge_map.push((e, Dir::Fwd));
        routes.push(vec![Segment::new(e, half, 1.0, 1.0)]);
        for j in (1..=k).filter(|j| *j != i) {
            edges.push((format!("e{i}c{j}"), j, j));
            edge_map.push((e, Dir::Fwd));
            routes.push(vec![Segment::new(j - 1, half, half, 1.0)]);
        }
    }
    let total = Arc::new(Graph::from_indices(vertices, edges)?);
    let cover = CoveringMap::new(total.clone(), base.clone(), (0..=k).map(|_| 0).collect(), edge_map)?;
    let alpha = vec![1.0; k];
    let mut images = vec![GraphPoint::Vertex(0)];
    images.extend((0..k).map(|e| GraphPoint::Edge(e, half)));
    let map = PLGraphMap::new(total, base, cover.pull_measure(&alpha), alpha, images, routes)?;
    VirtualEndomorphism::new(cover, map)
}
