//! The harmonic solver against a dense-subdivision relaxation solver, on
//! maps to a circle and to an interval with pinned ends.

use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elastica::curves::{curve_length, enumerate_cycles, extremal_length, MultiCurve};
use elastica::graph::{ElasticGraph, LengthGraph};
use elastica::harmonic::{is_harmonic, is_harmonic_fixed, minimize_dirichlet, HarmonicOptions};
use elastica::maps::{dirichlet_energy, pushforward_curve, stall_at, GraphPoint, PLGraphMap, Segment};
use elastica::Graph;

fn config(seed: u64) -> Config {
    Config { cases: 256, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() }
}

fn random_graph(rng: &mut ChaCha8Rng, nv: usize, ne: usize) -> Arc<Graph> {
    let mut edges = Vec::new();
    for v in 1..nv {
        edges.push((rng.gen_range(0..v), v));
    }
    while edges.len() < ne {
        edges.push((rng.gen_range(0..nv), rng.gen_range(0..nv)));
    }
    let vertices = (0..nv).map(|v| format!("v{v}")).collect();
    let edges = edges.into_iter().enumerate().map(|(i, (a, b))| (format!("e{i}"), a, b)).collect();
    Arc::new(Graph::from_indices(vertices, edges).unwrap())
}

/// Brute force: each edge cut into `n` pieces, every node relaxed in turn
/// (SOR) until nothing moves. Nodes live in the universal cover; `shift[e]`
/// is the jump added across edge `e`. Returns the energy.
pub struct Relaxation {
    /// (tail node, head node, shift, weight) per piece
    pieces: Vec<(usize, usize, f64, f64)>,
    x: Vec<f64>,
    pinned: Vec<bool>,
}

impl Relaxation {
    pub fn new(g: &Graph, alpha: &[f64], shift: &[f64], x0: &[f64], pinned: &[usize], n: usize) -> Self {
        let mut x = x0.to_vec();
        let mut pin = vec![false; g.vertex_count()];
        for &v in pinned {
            pin[v] = true;
        }
        let mut pieces = Vec::new();
        for e in 0..g.edge_count() {
            let (a, b) = (g.tail(e), g.head(e));
            let w = alpha[e] / n as f64;
            let mut prev = a;
            for k in 1..n {
                let t = k as f64 / n as f64;
                x.push(x0[a] + t * (x0[b] + shift[e] - x0[a]));
                pin.push(false);
                let node = x.len() - 1;
                pieces.push((prev, node, 0.0, w));
                prev = node;
            }
            pieces.push((prev, b, shift[e], w));
        }
        Relaxation { pieces, x, pinned: pin }
    }

    fn energy(&self, ell: f64) -> f64 {
        self.pieces.iter().map(|(a, b, s, w)| (ell * (self.x[*b] + s - self.x[*a])).powi(2) / w).sum()
    }

    pub fn solve(&mut self, ell: f64) -> f64 {
        let nodes = self.x.len();
        let mut adj: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); nodes];
        for (a, b, s, w) in &self.pieces {
            if a != b {
                adj[*a].push((*b, *s, 1.0 / w));
                adj[*b].push((*a, -s, 1.0 / w));
            }
        }
        for _ in 0..2_000_000 {
            let mut moved: f64 = 0.0;
            for v in 0..nodes {
                if self.pinned[v] || adj[v].is_empty() {
                    continue;
                }
                let (mut num, mut den) = (0.0, 0.0);
                for (u, s, c) in &adj[v] {
                    num += c * (self.x[*u] + s);
                    den += c;
                }
                let target = num / den;
                let nx = self.x[v] + 1.9 * (target - self.x[v]);
                moved = moved.max((nx - self.x[v]).abs());
                self.x[v] = nx;
            }
            if moved < 1e-15 {
                break;
            }
        }
        self.energy(ell)
    }
}

/// Route on a one-petal rose from `t0` to `t1` winding `w` extra times.
fn circle_route(t0: f64, t1: f64, w: i64) -> Vec<Segment<f64>> {
    let mut segs = Vec::new();
    if w == 0 {
        segs.push(Segment::new(0, t0, t1, 0.0));
    } else if w > 0 {
        segs.push(Segment::new(0, t0, 1.0, 0.0));
        for _ in 1..w {
            segs.push(Segment::new(0, 0.0, 1.0, 0.0));
        }
        segs.push(Segment::new(0, 0.0, t1, 0.0));
    } else {
        segs.push(Segment::new(0, t0, 0.0, 0.0));
        for _ in 1..-w {
            segs.push(Segment::new(0, 1.0, 0.0, 0.0));
        }
        segs.push(Segment::new(0, 1.0, t1, 0.0));
    }
    let total: f64 = segs.iter().map(|s| s.extent()).sum();
    let n = segs.len() as f64;
    for s in &mut segs {
        s.span = if total > 0.0 { s.extent() / total } else { 1.0 / n };
    }
    segs
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * b.abs().max(1e-9)
}

proptest! {
    #![proptest_config(config(21))]

    fn circle_targets_match_relaxation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = rng.gen_range(1..=4);
        let ne = rng.gen_range(nv.max(2)..=6);
        let g = random_graph(&mut rng, nv, ne);
        let alpha: Vec<f64> = (0..g.edge_count()).map(|_| rng.gen_range(1..=8) as f64 / 4.0).collect();
        let ell = rng.gen_range(1..=5) as f64 / 2.0;
        let t: Vec<f64> = (0..nv).map(|_| rng.gen_range(1..20) as f64 / 20.0).collect();
        let wind: Vec<i64> = (0..g.edge_count()).map(|_| rng.gen_range(-2..=2)).collect();
        let routes = (0..g.edge_count()).map(|e| circle_route(t[g.tail(e)], t[g.head(e)], wind[e])).collect();
        let cod = Arc::new(Graph::from_indices(vec!["o".into()], vec![("c".into(), 0, 0)]).unwrap());
        let images = t.iter().map(|x| GraphPoint::Edge(0, *x)).collect();
        let m = PLGraphMap::new(g.clone(), cod, alpha.clone(), vec![ell], images, routes).unwrap();
        let h = minimize_dirichlet(&m, &HarmonicOptions::default()).unwrap();
        let rep = is_harmonic(&h.map, 1e-6);
        prop_assert!(rep.pass, "{:?}", rep);
        let shift: Vec<f64> = wind.iter().map(|w| *w as f64).collect();
        let oracle = Relaxation::new(&g, &alpha, &shift, &t, &[], 4).solve(ell);
        prop_assert!(close(h.energy, oracle), "solver {} oracle {}", h.energy, oracle);
        prop_assert!(close(dirichlet_energy(&h.map), oracle));

        // length of pushed-forward curves against Dir * EL
        let k = LengthGraph::new(h.map.codomain.clone(), vec![ell]).unwrap();
        let eg = ElasticGraph::new(g.clone(), alpha).unwrap();
        for cyc in enumerate_cycles(&g, 4) {
            let c = MultiCurve::single(g.clone(), cyc.steps, 1.0).unwrap();
            let len = curve_length(&pushforward_curve(&h.map, &c).unwrap(), &k).unwrap();
            let el = extremal_length(&c, &eg).unwrap();
            prop_assert!(len * len <= h.energy * el * (1.0 + 1e-9) + 1e-9, "{} > {} * {}", len * len, h.energy, el);
        }
    }

    fn interval_targets_match_relaxation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = rng.gen_range(2..=5);
        let ne = rng.gen_range(nv - 1..=6);
        let g = random_graph(&mut rng, nv, ne);
        let alpha: Vec<f64> = (0..g.edge_count()).map(|_| rng.gen_range(1..=8) as f64 / 4.0).collect();
        // vertex 0 pinned at 0, vertex nv-1 pinned at 1
        let mut t: Vec<f64> = (0..nv).map(|_| rng.gen_range(1..20) as f64 / 20.0).collect();
        t[0] = 0.0;
        t[nv - 1] = 1.0;
        let cod = Arc::new(Graph::from_indices(vec!["0".into(), "1".into()], vec![("I".into(), 0, 1)]).unwrap());
        let point = |x: f64| if x == 0.0 { GraphPoint::Vertex(0) } else if x == 1.0 { GraphPoint::Vertex(1) } else { GraphPoint::Edge(0, x) };
        let routes = (0..g.edge_count())
            .map(|e| {
                let (a, b) = (t[g.tail(e)], t[g.head(e)]);
                if a == b { vec![stall_at(&cod, &point(a), 1.0).unwrap()] } else { vec![Segment::new(0, a, b, 1.0)] }
            })
            .collect();
        let images = t.iter().map(|x| point(*x)).collect();
        let m = PLGraphMap::new(g.clone(), cod, alpha.clone(), vec![1.0], images, routes).unwrap();
        let fixed = vec![0, nv - 1];
        let h = minimize_dirichlet(&m, &HarmonicOptions { fixed: fixed.clone(), ..HarmonicOptions::default() }).unwrap();
        let rep = is_harmonic_fixed(&h.map, 1e-6, &fixed);
        prop_assert!(rep.pass, "{:?}", rep);
        let oracle = Relaxation::new(&g, &alpha, &vec![0.0; g.edge_count()], &t, &fixed, 4).solve(1.0);
        prop_assert!(close(h.energy, oracle), "solver {} oracle {}", h.energy, oracle);
    }
}

/// Every property, by name.
pub const ALL: &[(&str, fn())] = &[
    ("circle_targets_match_relaxation", circle_targets_match_relaxation),
    ("interval_targets_match_relaxation", interval_targets_match_relaxation),
];

pub fn run(name: &str) {
    let (_, f) = ALL.iter().find(|(n, _)| *n == name).expect("unknown property");
    f();
}
